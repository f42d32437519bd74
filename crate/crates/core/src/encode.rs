//! Emission of the propositional instance: structural constraints over the
//! syntax-DAG variables `x`, `l`, `r`, and per-trace semantic constraints
//! over `y` (suffix satisfaction) and `z` (infix matching) variables.
//!
//! Nodes `1..=m` are the regex zone: they carry `z` variables and may be
//! labeled with `ε` or regular-expression labels. All nodes carry `y`
//! variables, but only atomic-capable labels (propositions, `¬`, `∨`) give a
//! regex-zone node PSL semantics; this is what lets a subterm like the `q` in
//! `{q*} |-> q` be shared between the two contexts.

use std::collections::HashMap;

use crate::cnf::{BExpr, Cnf, Lit};
use crate::error::{Error, Result};
use crate::formula::{DagNode, Formula, Label, SyntaxDag, TypeCtx};
use crate::solver::{Model, SolveOutcome, SolverBackend};
use crate::trace::{
    canonical_position, suffix_successor, FiniteSample, FiniteWord, LassoWord, PropositionSet,
    Sample,
};

/// Learning mode: which label universe and root typing apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Psl,
    Ltl,
    Regex,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Psl => "psl",
            Mode::Ltl => "ltl",
            Mode::Regex => "regex",
        }
    }
}

/// Compact label identifier used in variable descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelSym {
    Eps,
    Not,
    Or,
    Choice,
    Concat,
    Star,
    Next,
    Until,
    Triggers,
    Prop(u16),
}

const OPS: [LabelSym; 9] = [
    LabelSym::Eps,
    LabelSym::Not,
    LabelSym::Or,
    LabelSym::Choice,
    LabelSym::Concat,
    LabelSym::Star,
    LabelSym::Next,
    LabelSym::Until,
    LabelSym::Triggers,
];

impl LabelSym {
    fn arity(self) -> usize {
        match self {
            LabelSym::Eps | LabelSym::Prop(_) => 0,
            LabelSym::Not | LabelSym::Star | LabelSym::Next => 1,
            _ => 2,
        }
    }

    fn is_atomic_capable(self) -> bool {
        matches!(self, LabelSym::Not | LabelSym::Or | LabelSym::Prop(_))
    }

    /// May label a regex-zone node (regular-expression operators, propositions, `ε`).
    fn is_regex_zone(self) -> bool {
        !matches!(self, LabelSym::Next | LabelSym::Until | LabelSym::Triggers)
    }

    fn to_label(self, props: &PropositionSet) -> Label {
        match self {
            LabelSym::Eps => Label::Eps,
            LabelSym::Not => Label::Not,
            LabelSym::Or => Label::Or,
            LabelSym::Choice => Label::Choice,
            LabelSym::Concat => Label::Concat,
            LabelSym::Star => Label::Star,
            LabelSym::Next => Label::Next,
            LabelSym::Until => Label::Until,
            LabelSym::Triggers => Label::Triggers,
            LabelSym::Prop(i) => Label::Prop(props.name(i as usize).to_string()),
        }
    }

    fn from_label(label: &Label, props: &PropositionSet) -> Result<LabelSym> {
        Ok(match label {
            Label::Eps => LabelSym::Eps,
            Label::Not => LabelSym::Not,
            Label::Or => LabelSym::Or,
            Label::Choice => LabelSym::Choice,
            Label::Concat => LabelSym::Concat,
            Label::Star => LabelSym::Star,
            Label::Next => LabelSym::Next,
            Label::Until => LabelSym::Until,
            Label::Triggers => LabelSym::Triggers,
            Label::Prop(p) => LabelSym::Prop(
                props
                    .index_of(p)
                    .ok_or_else(|| Error::UnknownProposition(p.clone()))?
                    as u16,
            ),
        })
    }

    fn describe(self, props: &PropositionSet) -> String {
        match self {
            LabelSym::Eps => "eps".into(),
            LabelSym::Not => "!".into(),
            LabelSym::Or => "|".into(),
            LabelSym::Choice => "+".into(),
            LabelSym::Concat => ".".into(),
            LabelSym::Star => "*".into(),
            LabelSym::Next => "X".into(),
            LabelSym::Until => "U".into(),
            LabelSym::Triggers => "|->".into(),
            LabelSym::Prop(i) => props.name(i as usize).to_string(),
        }
    }
}

/// Descriptor of one propositional variable of the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarDesc {
    /// node `k` is labeled `λ`
    X { node: u16, label: LabelSym },
    /// left child of node `k` is node `child`
    L { node: u16, child: u16 },
    /// right child of node `k` is node `child`
    R { node: u16, child: u16 },
    /// suffix `i` of trace `trace` satisfies the formula at node `k`
    Y { trace: u16, pos: u16, node: u16 },
    /// infix `[i, j)` of trace `trace` matches the expression at node `k`
    Z { trace: u16, i: u16, j: u16, node: u16 },
}

/// Dense, injective map between variable descriptors and DIMACS ids.
#[derive(Debug, Clone, Default)]
pub struct VariableTable {
    ids: HashMap<VarDesc, u32>,
    descs: Vec<VarDesc>,
}

impl VariableTable {
    fn register(&mut self, d: VarDesc) -> u32 {
        debug_assert!(!self.ids.contains_key(&d), "descriptor registered twice: {d:?}");
        let id = self.descs.len() as u32 + 1;
        self.descs.push(d);
        self.ids.insert(d, id);
        id
    }

    pub fn id(&self, d: VarDesc) -> Option<u32> {
        self.ids.get(&d).copied()
    }

    fn lit(&self, d: VarDesc) -> Lit {
        self.id(d).expect("unregistered descriptor") as Lit
    }

    /// Descriptors in id order (ids `1..=len`); auxiliary CNF variables past
    /// `len` have no descriptor.
    pub fn descriptors(&self) -> &[VarDesc] {
        &self.descs
    }

    pub fn len(&self) -> usize {
        self.descs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descs.is_empty()
    }

    /// Tab-separated descriptor/id dump.
    pub fn to_tsv(&self, props: &PropositionSet) -> String {
        let mut out = String::new();
        for (idx, d) in self.descs.iter().enumerate() {
            let id = idx + 1;
            match d {
                VarDesc::X { node, label } => {
                    out.push_str(&format!("x\t{node}\t{}\t{id}\n", label.describe(props)));
                }
                VarDesc::L { node, child } => out.push_str(&format!("l\t{node}\t{child}\t{id}\n")),
                VarDesc::R { node, child } => out.push_str(&format!("r\t{node}\t{child}\t{id}\n")),
                VarDesc::Y { trace, pos, node } => {
                    out.push_str(&format!("y\t{trace}\t{pos}\t{node}\t{id}\n"));
                }
                VarDesc::Z { trace, i, j, node } => {
                    out.push_str(&format!("z\t{trace}\t{i}\t{j}\t{node}\t{id}\n"));
                }
            }
        }
        out
    }
}

/// A built propositional instance for one (size, regex-budget) candidate.
pub struct PhiInstance {
    pub table: VariableTable,
    pub cnf: Cnf,
    pub n: usize,
    pub m: usize,
    /// period copies in the matching window (1 when no regex nodes)
    pub b: usize,
}

enum TraceRef<'a> {
    Lasso(&'a LassoWord),
    Finite(&'a FiniteWord),
}

/// Number of period copies in the matching window: `2^m + 1`, optionally
/// capped; `1` when there are no regex nodes.
pub fn unroll_copies(m: usize, cap: Option<usize>) -> usize {
    let b = if m == 0 {
        1
    } else if m >= usize::BITS as usize - 1 {
        usize::MAX
    } else {
        (1usize << m) + 1
    };
    match cap {
        Some(c) => b.min(c.max(1)),
        None => b,
    }
}

struct Builder<'a> {
    props: &'a PropositionSet,
    mode: Mode,
    n: usize,
    m: usize,
    b: usize,
    labels: Vec<LabelSym>,
    table: VariableTable,
    traces: Vec<TraceRef<'a>>,
}

impl<'a> Builder<'a> {
    fn new(
        props: &'a PropositionSet,
        mode: Mode,
        n: usize,
        m: usize,
        unroll_cap: Option<usize>,
    ) -> Result<Builder<'a>> {
        let valid = match mode {
            Mode::Psl => m < n,
            Mode::Ltl => m == 0,
            Mode::Regex => m == n,
        };
        if n == 0 || !valid {
            return Err(Error::InvalidBudget { n, m });
        }
        let mut labels: Vec<LabelSym> = OPS.to_vec();
        labels.extend((0..props.len()).map(|i| LabelSym::Prop(i as u16)));
        Ok(Builder {
            props,
            mode,
            n,
            m,
            b: unroll_copies(m, unroll_cap),
            labels,
            table: VariableTable::default(),
            traces: Vec::new(),
        })
    }

    /// Labels admissible at node `k` under the zone and mode typing.
    fn allowed(&self, k: usize) -> Vec<LabelSym> {
        self.labels
            .iter()
            .copied()
            .filter(|lab| match self.mode {
                Mode::Ltl => matches!(
                    lab,
                    LabelSym::Not | LabelSym::Or | LabelSym::Next | LabelSym::Until | LabelSym::Prop(_)
                ),
                Mode::Regex => lab.is_regex_zone(),
                Mode::Psl => {
                    if k <= self.m {
                        lab.is_regex_zone()
                    } else {
                        !matches!(
                            lab,
                            LabelSym::Eps | LabelSym::Choice | LabelSym::Concat | LabelSym::Star
                        )
                    }
                }
            })
            .collect()
    }

    fn x(&self, k: usize, lab: LabelSym) -> Lit {
        self.table.lit(VarDesc::X { node: k as u16, label: lab })
    }

    fn l(&self, k: usize, child: usize) -> Lit {
        self.table.lit(VarDesc::L { node: k as u16, child: child as u16 })
    }

    fn r(&self, k: usize, child: usize) -> Lit {
        self.table.lit(VarDesc::R { node: k as u16, child: child as u16 })
    }

    fn y(&self, t: usize, i: usize, k: usize) -> Lit {
        self.table.lit(VarDesc::Y { trace: t as u16, pos: i as u16, node: k as u16 })
    }

    fn z(&self, t: usize, i: usize, j: usize, k: usize) -> Lit {
        self.table.lit(VarDesc::Z { trace: t as u16, i: i as u16, j: j as u16, node: k as u16 })
    }

    fn add_trace(&mut self, tr: TraceRef<'a>) -> usize {
        self.traces.push(tr);
        self.traces.len() - 1
    }

    /// z-window length for a trace.
    fn window(&self, t: usize) -> usize {
        match &self.traces[t] {
            TraceRef::Lasso(w) => {
                w.prefix_len().saturating_add(self.b.saturating_mul(w.period_len()))
            }
            TraceRef::Finite(w) => w.len(),
        }
    }

    fn register_all(&mut self) {
        for k in 1..=self.n {
            for lab in self.labels.clone() {
                self.table.register(VarDesc::X { node: k as u16, label: lab });
            }
        }
        for k in 2..=self.n {
            for child in 1..k {
                self.table.register(VarDesc::L { node: k as u16, child: child as u16 });
            }
        }
        for k in 2..=self.n {
            for child in 1..k {
                self.table.register(VarDesc::R { node: k as u16, child: child as u16 });
            }
        }
        for t in 0..self.traces.len() {
            if let TraceRef::Lasso(w) = &self.traces[t] {
                let uv = w.uv_len();
                for k in 1..=self.n {
                    for i in 0..uv {
                        self.table.register(VarDesc::Y {
                            trace: t as u16,
                            pos: i as u16,
                            node: k as u16,
                        });
                    }
                }
            }
            let window = self.window(t);
            for k in 1..=self.m {
                for i in 0..=window {
                    for j in i..=window {
                        self.table.register(VarDesc::Z {
                            trace: t as u16,
                            i: i as u16,
                            j: j as u16,
                            node: k as u16,
                        });
                    }
                }
            }
        }
    }

    fn structural(&self, cnf: &mut Cnf) {
        let lit = |l: Lit| BExpr::lit(l);

        for k in 1..=self.n {
            let allowed = self.allowed(k);
            // exactly one admissible label; inadmissible ones pinned false
            cnf.assert(&BExpr::or(allowed.iter().map(|&a| lit(self.x(k, a))).collect()));
            for (i, &a) in allowed.iter().enumerate() {
                for &b in &allowed[i + 1..] {
                    cnf.add_clause(vec![-self.x(k, a), -self.x(k, b)]);
                }
            }
            for &lab in &self.labels {
                if !allowed.contains(&lab) {
                    cnf.add_clause(vec![-self.x(k, lab)]);
                }
            }
        }

        // exactly one left and one right child edge for every k ≥ 2; the
        // edges of leaf-labeled nodes dangle and are ignored by decoding
        for k in 2..=self.n {
            for left in [true, false] {
                let lits: Vec<Lit> = (1..k)
                    .map(|c| if left { self.l(k, c) } else { self.r(k, c) })
                    .collect();
                cnf.add_clause(lits.clone());
                for (i, &a) in lits.iter().enumerate() {
                    for &b in &lits[i + 1..] {
                        cnf.add_clause(vec![-a, -b]);
                    }
                }
            }
        }

        // child typing
        for k in 2..=self.n {
            let allowed = self.allowed(k);
            for &lab in &allowed {
                if lab.arity() == 0 {
                    continue;
                }
                let regex_children = matches!(
                    lab,
                    LabelSym::Choice | LabelSym::Concat | LabelSym::Star
                );
                for child in 1..k {
                    // left child: regex operators and the triggers left side
                    // need a z-designated child; PSL operators referencing a
                    // regex-zone child need it atomic-labeled (this doubles as
                    // the strict atomic grammar for ¬/∨ inside regexes)
                    if regex_children || lab == LabelSym::Triggers {
                        if child > self.m {
                            cnf.add_clause(vec![-self.x(k, lab), -self.l(k, child)]);
                        }
                    } else if child <= self.m {
                        self.require_atomic(cnf, self.x(k, lab), self.l(k, child), child);
                    }
                    // right child: same, except the triggers right side is a
                    // PSL position
                    if lab.arity() == 2 {
                        if regex_children {
                            if child > self.m {
                                cnf.add_clause(vec![-self.x(k, lab), -self.r(k, child)]);
                            }
                        } else if child <= self.m {
                            self.require_atomic(cnf, self.x(k, lab), self.r(k, child), child);
                        }
                    }
                }
            }
        }

        // node 1 is a leaf: ε (when admissible) or a proposition
        let mut leaf: Vec<BExpr> = Vec::new();
        for &lab in &self.allowed(1) {
            if lab.arity() == 0 {
                leaf.push(lit(self.x(1, lab)));
            }
        }
        cnf.assert(&BExpr::or(leaf));
    }

    /// guard ∧ child-edge → child carries an atomic-capable label
    fn require_atomic(&self, cnf: &mut Cnf, guard_x: Lit, edge: Lit, child: usize) {
        let mut clause = vec![-guard_x, -edge];
        for &lab in &self.allowed(child) {
            if lab.is_atomic_capable() {
                clause.push(self.x(child, lab));
            }
        }
        cnf.add_clause(clause);
    }

    fn props_syms(&self) -> Vec<(usize, LabelSym)> {
        (0..self.props.len()).map(|i| (i, LabelSym::Prop(i as u16))).collect()
    }

    /// Per-trace semantic constraints over the y variables (lasso traces).
    fn psl_semantics(&self, cnf: &mut Cnf, t: usize, defs: &mut DefCache) {
        let TraceRef::Lasso(w) = &self.traces[t] else { return };
        let (u_len, v_len) = (w.prefix_len(), w.period_len());
        let uv = u_len + v_len;
        let window = self.window(t);

        for k in 1..=self.n {
            let allowed = self.allowed(k);

            // propositions: y tracks symbol membership (all zones)
            for (pi, lab) in self.props_syms() {
                if !allowed.contains(&lab) {
                    continue;
                }
                let x = self.x(k, lab);
                for i in 0..uv {
                    let y = self.y(t, i, k);
                    let sign = if w.symbol_at(i).contains(pi) { y } else { -y };
                    cnf.add_clause(vec![-x, sign]);
                }
            }

            // negation
            if allowed.contains(&LabelSym::Not) {
                let x = self.x(k, LabelSym::Not);
                for child in 1..k {
                    let guard = [-x, -self.l(k, child)];
                    for i in 0..uv {
                        cnf.guarded_iff(&guard, self.y(t, i, k), -self.y(t, i, child));
                    }
                }
            }

            // disjunction
            if allowed.contains(&LabelSym::Or) {
                let x = self.x(k, LabelSym::Or);
                for cl in 1..k {
                    for cr in 1..k {
                        let guard = [-x, -self.l(k, cl), -self.r(k, cr)];
                        for i in 0..uv {
                            cnf.guarded_iff_or(
                                &guard,
                                self.y(t, i, k),
                                &[self.y(t, i, cl), self.y(t, i, cr)],
                            );
                        }
                    }
                }
            }

            // next with wrap-around
            if allowed.contains(&LabelSym::Next) {
                let x = self.x(k, LabelSym::Next);
                for child in 1..k {
                    let guard = [-x, -self.l(k, child)];
                    for i in 0..uv {
                        let succ = suffix_successor(u_len, v_len, i);
                        cnf.guarded_iff(&guard, self.y(t, i, k), self.y(t, succ, child));
                    }
                }
            }

            // until, split into prefix and period cases
            if allowed.contains(&LabelSym::Until) {
                let x = self.x(k, LabelSym::Until);
                for cl in 1..k {
                    for cr in 1..k {
                        let guard = [-x, -self.l(k, cl), -self.r(k, cr)];
                        for i in 0..uv {
                            let range: Vec<usize> = if i < u_len {
                                (i..uv).collect()
                            } else {
                                (u_len..uv).collect()
                            };
                            let mut witnesses: Vec<Lit> = Vec::with_capacity(range.len());
                            let mut conj: Vec<Lit> = Vec::new();
                            for j in range {
                                conj.clear();
                                conj.push(self.y(t, j, cr));
                                if i < u_len || i <= j {
                                    conj.extend((i..j).map(|p| self.y(t, p, cl)));
                                } else {
                                    conj.extend(
                                        (u_len..j).chain(i..uv).map(|p| self.y(t, p, cl)),
                                    );
                                }
                                witnesses.push(cnf.define_and_lits(&conj));
                            }
                            let d = cnf.define_or_lits(&witnesses);
                            cnf.guarded_iff(&guard, self.y(t, i, k), d);
                        }
                    }
                }
            }

            // triggers: y linked to the left child's matches through the
            // canonical position map
            if allowed.contains(&LabelSym::Triggers) {
                let x = self.x(k, LabelSym::Triggers);
                for cl in 1..=self.m.min(k - 1) {
                    for cr in 1..k {
                        let guard = [-x, -self.l(k, cl), -self.r(k, cr)];
                        for i in 0..uv {
                            let mut duties: Vec<Lit> = Vec::with_capacity(window - i);
                            for j in i + 1..=window {
                                let pos = canonical_position(u_len, v_len, j - 1);
                                duties.push(defs.or2(
                                    cnf,
                                    -self.z(t, i, j, cl),
                                    self.y(t, pos, cr),
                                ));
                            }
                            let d = cnf.define_and_lits(&duties);
                            cnf.guarded_iff(&guard, self.y(t, i, k), d);
                        }
                    }
                }
            }
        }
    }

    /// Per-trace semantic constraints over the z variables (regex zone).
    fn regex_semantics(&self, cnf: &mut Cnf, t: usize, defs: &mut DefCache) {
        let window = self.window(t);
        let symbol_at = |pos: usize| match &self.traces[t] {
            TraceRef::Lasso(w) => w.symbol_at(pos),
            TraceRef::Finite(w) => w.symbol(pos),
        };

        for k in 1..=self.m {
            let allowed = self.allowed(k);

            // ε matches exactly the empty infixes
            if allowed.contains(&LabelSym::Eps) {
                let x = self.x(k, LabelSym::Eps);
                for i in 0..=window {
                    for j in i..=window {
                        let z = self.z(t, i, j, k);
                        cnf.add_clause(vec![-x, if i == j { z } else { -z }]);
                    }
                }
            }

            // propositions match single symbols containing them
            for (pi, lab) in self.props_syms() {
                if !allowed.contains(&lab) {
                    continue;
                }
                let x = self.x(k, lab);
                for i in 0..=window {
                    for j in i..=window {
                        let z = self.z(t, i, j, k);
                        let holds = j == i + 1 && symbol_at(i).contains(pi);
                        cnf.add_clause(vec![-x, if holds { z } else { -z }]);
                    }
                }
            }

            // atomic negation: single symbols not matched by the child
            if allowed.contains(&LabelSym::Not) {
                let x = self.x(k, LabelSym::Not);
                for child in 1..k {
                    let guard = [-x, -self.l(k, child)];
                    for i in 0..=window {
                        for j in i..=window {
                            let z = self.z(t, i, j, k);
                            if j == i + 1 {
                                cnf.guarded_iff(&guard, z, -self.z(t, i, j, child));
                            } else {
                                cnf.add_clause(vec![guard[0], guard[1], -z]);
                            }
                        }
                    }
                }
            }

            // choice, and ∨ read as atomic disjunction (same shape)
            for lab in [LabelSym::Choice, LabelSym::Or] {
                if !allowed.contains(&lab) {
                    continue;
                }
                let x = self.x(k, lab);
                for cl in 1..k {
                    for cr in 1..k {
                        let guard = [-x, -self.l(k, cl), -self.r(k, cr)];
                        for i in 0..=window {
                            for j in i..=window {
                                cnf.guarded_iff_or(
                                    &guard,
                                    self.z(t, i, j, k),
                                    &[self.z(t, i, j, cl), self.z(t, i, j, cr)],
                                );
                            }
                        }
                    }
                }
            }

            // concatenation: a split point exists
            if allowed.contains(&LabelSym::Concat) {
                let x = self.x(k, LabelSym::Concat);
                for cl in 1..k {
                    for cr in 1..k {
                        let guard = [-x, -self.l(k, cl), -self.r(k, cr)];
                        let mut splits: Vec<Lit> = Vec::new();
                        for i in 0..=window {
                            for j in i..=window {
                                splits.clear();
                                for s in i..=j {
                                    splits.push(defs.and2(
                                        cnf,
                                        self.z(t, i, s, cl),
                                        self.z(t, s, j, cr),
                                    ));
                                }
                                let d = cnf.define_or_lits(&splits);
                                cnf.guarded_iff(&guard, self.z(t, i, j, k), d);
                            }
                        }
                    }
                }
            }

            // star: empty infix, or a first chunk followed by the same node
            if allowed.contains(&LabelSym::Star) {
                let x = self.x(k, LabelSym::Star);
                for child in 1..k {
                    let guard = [-x, -self.l(k, child)];
                    let mut chunks: Vec<Lit> = Vec::new();
                    for i in 0..=window {
                        for j in i..=window {
                            let z = self.z(t, i, j, k);
                            if i == j {
                                cnf.add_clause(vec![guard[0], guard[1], z]);
                                continue;
                            }
                            chunks.clear();
                            for s in i + 1..=j {
                                chunks.push(defs.and2(
                                    cnf,
                                    self.z(t, i, s, child),
                                    self.z(t, s, j, k),
                                ));
                            }
                            let d = cnf.define_or_lits(&chunks);
                            cnf.guarded_iff(&guard, z, d);
                        }
                    }
                }
            }
        }
    }

    /// Descriptor fields are u16; an uncapped window for a large regex budget
    /// would overflow them (and memory long before that).
    fn validate_windows(&self) -> Result<()> {
        if self.n > u16::MAX as usize || self.traces.len() > u16::MAX as usize {
            return Err(Error::Config("instance too large".into()));
        }
        for t in 0..self.traces.len() {
            if self.window(t) > u16::MAX as usize {
                return Err(Error::Config(format!(
                    "matching window of {} positions exceeds the supported size; \
                     lower the regex budget or set an unroll cap",
                    self.window(t)
                )));
            }
        }
        Ok(())
    }

    /// Registers all variables, then emits the instance; `roots` is computed
    /// once the table is ready and appended as unit clauses.
    fn finish(mut self, roots: impl FnOnce(&Builder<'a>) -> Vec<Lit>) -> PhiInstance {
        self.register_all();
        let root_lits = roots(&self);
        let mut cnf = Cnf::new(self.table.len() as u32);
        self.structural(&mut cnf);
        for t in 0..self.traces.len() {
            // identical two-literal definitions recur across node triples
            // sharing a child pair; reuse them
            let mut defs = DefCache::default();
            self.psl_semantics(&mut cnf, t, &mut defs);
            self.regex_semantics(&mut cnf, t, &mut defs);
        }
        for root in root_lits {
            cnf.add_clause(vec![root]);
        }
        PhiInstance { table: self.table, cnf, n: self.n, m: self.m, b: self.b }
    }
}

#[derive(Default)]
struct DefCache {
    and2: HashMap<(Lit, Lit), Lit>,
    or2: HashMap<(Lit, Lit), Lit>,
}

impl DefCache {
    fn and2(&mut self, cnf: &mut Cnf, a: Lit, b: Lit) -> Lit {
        *self.and2.entry((a, b)).or_insert_with(|| cnf.define_and_lits(&[a, b]))
    }

    fn or2(&mut self, cnf: &mut Cnf, a: Lit, b: Lit) -> Lit {
        *self.or2.entry((a, b)).or_insert_with(|| cnf.define_or_lits(&[a, b]))
    }
}

/// Builds the full instance for a lasso-word sample in PSL or LTL mode, root
/// literals included: positive traces force the root satisfaction variable
/// at position 0, negative ones its negation.
pub fn build_phi(
    sample: &Sample,
    n: usize,
    m: usize,
    mode: Mode,
    unroll_cap: Option<usize>,
) -> Result<PhiInstance> {
    if mode == Mode::Regex {
        return Err(Error::Config("regex mode learns from finite-word samples".into()));
    }
    let mut b = Builder::new(sample.propositions(), mode, n, m, unroll_cap)?;
    for (w, _) in sample.traces() {
        b.add_trace(TraceRef::Lasso(w));
    }
    b.validate_windows()?;
    let polarities: Vec<bool> = sample.traces().map(|(_, positive)| positive).collect();
    Ok(b.finish(|b| {
        polarities
            .iter()
            .enumerate()
            .map(|(t, &positive)| {
                let y = b.y(t, 0, b.n);
                if positive {
                    y
                } else {
                    -y
                }
            })
            .collect()
    }))
}

/// Builds the regex-mode instance over finite words: every node is
/// z-designated and the root literal is `z_{0,|w|,n}` per word.
pub fn build_phi_finite(sample: &FiniteSample, n: usize) -> Result<PhiInstance> {
    let mut b = Builder::new(sample.propositions(), Mode::Regex, n, n, None)?;
    for (w, _) in sample.words() {
        b.add_trace(TraceRef::Finite(w));
    }
    b.validate_windows()?;
    let words: Vec<(usize, bool)> =
        sample.words().map(|(w, positive)| (w.len(), positive)).collect();
    Ok(b.finish(|b| {
        words
            .iter()
            .enumerate()
            .map(|(t, &(len, positive))| {
                let z = b.z(t, 0, len, b.n);
                if positive {
                    z
                } else {
                    -z
                }
            })
            .collect()
    }))
}

/// A decoded solver model.
pub struct Decoded {
    pub formula: Formula,
    /// nodes reachable from the root before pruning
    pub reachable: usize,
    pub n: usize,
}

/// Reads the syntax DAG out of a model and rebuilds the formula rooted at
/// node `n`, validating label/child multiplicities and well-typedness.
pub fn decode_model(
    table: &VariableTable,
    model: &Model,
    n: usize,
    props: &PropositionSet,
    mode: Mode,
) -> Result<Decoded> {
    let mut labels: Vec<LabelSym> = Vec::with_capacity(n);
    let universe: Vec<LabelSym> = {
        let mut l = OPS.to_vec();
        l.extend((0..props.len()).map(|i| LabelSym::Prop(i as u16)));
        l
    };
    for k in 1..=n {
        let mut found: Vec<LabelSym> = Vec::new();
        for &lab in &universe {
            if let Some(id) = table.id(VarDesc::X { node: k as u16, label: lab }) {
                if model.value(id) {
                    found.push(lab);
                }
            }
        }
        match found.len() {
            1 => labels.push(found[0]),
            0 => return Err(Error::MalformedModel(format!("node {k} has no label"))),
            _ => {
                return Err(Error::MalformedModel(format!(
                    "node {k} has {} labels",
                    found.len()
                )));
            }
        }
    }

    let pick_child = |k: usize, left: bool| -> Result<usize> {
        let mut found = Vec::new();
        for child in 1..k {
            let d = if left {
                VarDesc::L { node: k as u16, child: child as u16 }
            } else {
                VarDesc::R { node: k as u16, child: child as u16 }
            };
            if let Some(id) = table.id(d) {
                if model.value(id) {
                    found.push(child);
                }
            }
        }
        match found.len() {
            1 => Ok(found[0]),
            0 => Err(Error::MalformedModel(format!("node {k} has no child edge"))),
            _ => Err(Error::MalformedModel(format!("node {k} has multiple child edges"))),
        }
    };

    // full node list, children only where the arity requires them
    let mut full: Vec<DagNode> = Vec::with_capacity(n);
    for k in 1..=n {
        let lab = labels[k - 1];
        let (left, right) = match lab.arity() {
            0 => (None, None),
            1 => (Some(pick_child(k, true)?), None),
            _ => (Some(pick_child(k, true)?), Some(pick_child(k, false)?)),
        };
        full.push(DagNode { label: lab.to_label(props), left, right });
    }

    // restrict to the subgraph reachable from the root and reindex
    let mut reach = vec![false; n];
    let mut stack = vec![n];
    while let Some(k) = stack.pop() {
        if reach[k - 1] {
            continue;
        }
        reach[k - 1] = true;
        let node = &full[k - 1];
        stack.extend([node.left, node.right].into_iter().flatten());
    }
    let reachable = reach.iter().filter(|&&r| r).count();
    let mut new_id = vec![0usize; n];
    let mut pruned: Vec<DagNode> = Vec::with_capacity(reachable);
    for k in 1..=n {
        if reach[k - 1] {
            let node = &full[k - 1];
            pruned.push(DagNode {
                label: node.label.clone(),
                left: node.left.map(|c| new_id[c - 1]),
                right: node.right.map(|c| new_id[c - 1]),
            });
            new_id[k - 1] = pruned.len();
        }
    }
    let dag = SyntaxDag::new(pruned)?;
    let formula = dag.to_formula()?;
    match mode {
        Mode::Psl => formula.typecheck(TypeCtx::Psl)?,
        Mode::Ltl => {
            formula.typecheck(TypeCtx::Psl)?;
            if !formula.is_ltl() {
                return Err(Error::MalformedModel("non-LTL label in LTL mode".into()));
            }
        }
        Mode::Regex => formula.typecheck(TypeCtx::Regex)?,
    }
    Ok(Decoded { formula, reachable, n })
}

/// Unit assumptions pinning a formula's syntax DAG onto the x/l/r variables.
pub fn dag_assumptions(
    table: &VariableTable,
    dag: &SyntaxDag,
    props: &PropositionSet,
) -> Result<Vec<Lit>> {
    let mut out = Vec::new();
    for (idx, node) in dag.nodes().iter().enumerate() {
        let k = (idx + 1) as u16;
        let lab = LabelSym::from_label(&node.label, props)?;
        let x = table
            .id(VarDesc::X { node: k, label: lab })
            .ok_or_else(|| Error::Internal(format!("label variable missing for node {k}")))?;
        out.push(x as Lit);
        if let Some(c) = node.left {
            let l = table
                .id(VarDesc::L { node: k, child: c as u16 })
                .ok_or_else(|| Error::Internal("left-child variable missing".into()))?;
            out.push(l as Lit);
        }
        if let Some(c) = node.right {
            let r = table
                .id(VarDesc::R { node: k, child: c as u16 })
                .ok_or_else(|| Error::Internal("right-child variable missing".into()))?;
            out.push(r as Lit);
        }
    }
    Ok(out)
}

fn forced_root_value(
    inst: &PhiInstance,
    root: Lit,
    assumptions: &[Lit],
    backend: &dyn SolverBackend,
) -> Result<bool> {
    let mut session = backend.session(&inst.cnf)?;
    let mut with_pos = assumptions.to_vec();
    with_pos.push(root);
    let pos = session.solve_with_assumptions(&with_pos)?;
    let mut with_neg = assumptions.to_vec();
    with_neg.push(-root);
    let neg = session.solve_with_assumptions(&with_neg)?;
    match (pos, neg) {
        (SolveOutcome::Sat(_), SolveOutcome::Unsat) => Ok(true),
        (SolveOutcome::Unsat, SolveOutcome::Sat(_)) => Ok(false),
        (SolveOutcome::Sat(_), SolveOutcome::Sat(_)) => Err(Error::Internal(
            "root satisfaction variable not forced by the trace constraints".into(),
        )),
        (SolveOutcome::Unsat, SolveOutcome::Unsat) => Err(Error::Internal(
            "structure assumptions conflict with the constraints".into(),
        )),
        _ => Err(Error::Solver("solver timed out".into())),
    }
}

/// Encodes a fixed formula as assumptions over a single-trace instance and
/// reports the forced value of the root satisfaction variable. By
/// construction this must equal the exact evaluator's verdict.
pub fn check_structure_fixed(
    f: &Formula,
    props: &PropositionSet,
    w: &LassoWord,
    backend: &dyn SolverBackend,
    unroll_cap: Option<usize>,
) -> Result<bool> {
    let core = f.desugar(props);
    core.typecheck(TypeCtx::Psl)?;
    let (dag, m) = SyntaxDag::from_formula(&core, false)?;
    let n = dag.n();
    let mut b = Builder::new(props, Mode::Psl, n, m, unroll_cap)?;
    b.add_trace(TraceRef::Lasso(w));
    b.validate_windows()?;
    let inst = b.finish(|_| Vec::new());
    let root = inst.table.lit(VarDesc::Y { trace: 0, pos: 0, node: n as u16 });
    let assumptions = dag_assumptions(&inst.table, &dag, props)?;
    forced_root_value(&inst, root, &assumptions, backend)
}

/// Regex-mode variant over a finite word; reports the forced `z_{0,|w|,n}`.
pub fn check_structure_fixed_finite(
    f: &Formula,
    props: &PropositionSet,
    w: &FiniteWord,
    backend: &dyn SolverBackend,
) -> Result<bool> {
    let core = f.desugar(props);
    core.typecheck(TypeCtx::Regex)?;
    let (dag, m) = SyntaxDag::from_formula(&core, true)?;
    let n = dag.n();
    debug_assert_eq!(m, n);
    let mut b = Builder::new(props, Mode::Regex, n, n, None)?;
    b.add_trace(TraceRef::Finite(w));
    b.validate_windows()?;
    let inst = b.finish(|_| Vec::new());
    let root = inst.table.lit(VarDesc::Z {
        trace: 0,
        i: 0,
        j: w.len() as u16,
        node: n as u16,
    });
    let assumptions = dag_assumptions(&inst.table, &dag, props)?;
    forced_root_value(&inst, root, &assumptions, backend)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;
    use crate::semantics::{evaluate, match_full};
    use crate::solver::VarisatBackend;
    use crate::trace::FiniteWord;

    fn props1() -> PropositionSet {
        PropositionSet::new(["p"]).unwrap()
    }

    fn props2() -> PropositionSet {
        PropositionSet::new(["p", "q"]).unwrap()
    }

    fn word(bits: &[u64]) -> FiniteWord {
        bits.iter().map(|&b| crate::trace::Symbol::from_bits(b)).collect()
    }

    fn lasso(u: &[u64], v: &[u64]) -> LassoWord {
        LassoWord::new(word(u), word(v)).unwrap()
    }

    fn core(text: &str, props: &PropositionSet) -> Formula {
        parse_formula(text).unwrap().desugar(props)
    }

    #[test]
    fn check_structure_prop() {
        let ps = props1();
        let f = parse_formula("p").unwrap();
        assert!(check_structure_fixed(&f, &ps, &lasso(&[], &[1]), &VarisatBackend, None).unwrap());
        assert!(!check_structure_fixed(&f, &ps, &lasso(&[], &[0]), &VarisatBackend, None).unwrap());
    }

    #[test]
    fn check_structure_needs_unrolling() {
        // exact bound: false; capped at one period copy: spuriously true
        let ps = props1();
        let f = core("{(true . true)*} |-> p", &ps);
        let w = lasso(&[0, 1], &[0]);
        assert!(!evaluate(&f, &w, &ps).unwrap());
        assert!(!check_structure_fixed(&f, &ps, &w, &VarisatBackend, None).unwrap());
        assert!(check_structure_fixed(&f, &ps, &w, &VarisatBackend, Some(1)).unwrap());
    }

    #[test]
    fn check_structure_shared_leaf() {
        // p |-> X p: p is both the regex and a PSL child
        let ps = props1();
        let f = core("{p} |-> X p", &ps);
        for w in [lasso(&[], &[1]), lasso(&[], &[1, 0]), lasso(&[1], &[0])] {
            let want = evaluate(&f, &w, &ps).unwrap();
            let got = check_structure_fixed(&f, &ps, &w, &VarisatBackend, None).unwrap();
            assert_eq!(got, want, "{f} on {w:?}");
        }
    }

    #[test]
    fn check_structure_agrees_with_evaluator_sampled() {
        let ps = props2();
        let formulas = [
            "p", "!q", "p | q", "X p", "p U q", "{p . q} |-> q", "{p*} |-> p",
            "{p + q} |-> X q", "{(p . p)*} |-> X p", "!(p U q)", "X X q",
        ];
        let words = [
            lasso(&[], &[0b01]),
            lasso(&[], &[0b10, 0b01]),
            lasso(&[0b00], &[0b11]),
            lasso(&[0b01, 0b10], &[0b00, 0b01]),
            lasso(&[0b11, 0b01, 0b10], &[0b01]),
        ];
        for text in formulas {
            let f = core(text, &ps);
            for w in &words {
                let want = evaluate(&f, w, &ps).unwrap();
                let got = check_structure_fixed(&f, &ps, w, &VarisatBackend, None).unwrap();
                assert_eq!(got, want, "{text} on {w:?}");
            }
        }
    }

    #[test]
    fn check_structure_finite_regexes() {
        let ps = props2();
        // ε on the empty word
        assert!(check_structure_fixed_finite(
            &Formula::eps(),
            &ps,
            &FiniteWord::empty(),
            &VarisatBackend
        )
        .unwrap());
        // concatenation forced true on the matching word
        let pq = parse_formula("p . q").unwrap();
        assert!(check_structure_fixed_finite(&pq, &ps, &word(&[0b01, 0b10]), &VarisatBackend).unwrap());
        assert!(!check_structure_fixed_finite(&pq, &ps, &word(&[0b10, 0b01]), &VarisatBackend).unwrap());
        // star node over p cannot match {p}{q}
        let pstar = parse_formula("p*").unwrap();
        assert!(!check_structure_fixed_finite(&pstar, &ps, &word(&[0b01, 0b10]), &VarisatBackend).unwrap());
        for w in [word(&[]), word(&[0b01]), word(&[0b01, 0b01]), word(&[0b01, 0b10])] {
            let want = match_full(&pstar, &w, &ps).unwrap();
            let got = check_structure_fixed_finite(&pstar, &ps, &w, &VarisatBackend).unwrap();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn build_phi_size_one_decodes_to_p() {
        let ps = props1();
        let sample =
            Sample::new(ps.clone(), vec![lasso(&[], &[1])], vec![lasso(&[], &[0])]).unwrap();
        let inst = build_phi(&sample, 1, 0, Mode::Psl, None).unwrap();
        match VarisatBackend.solve(&inst.cnf, None).unwrap() {
            SolveOutcome::Sat(model) => {
                let dec = decode_model(&inst.table, &model, 1, &ps, Mode::Psl).unwrap();
                assert_eq!(dec.formula, Formula::prop("p"));
                assert_eq!(dec.reachable, 1);
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn triggers_at_n2_uses_shared_leaf() {
        // with one node below the root, x_{2,|->} forces both children onto
        // node 1, which must then be a proposition
        let ps = props1();
        let sample = Sample::new(ps.clone(), vec![lasso(&[], &[1])], vec![]).unwrap();
        let inst = build_phi(&sample, 2, 1, Mode::Psl, None).unwrap();
        let x_map = inst.table.id(VarDesc::X { node: 2, label: LabelSym::Triggers }).unwrap();
        match VarisatBackend
            .solve_with_assumptions(&inst.cnf, &[x_map as Lit], None)
            .unwrap()
        {
            SolveOutcome::Sat(model) => {
                let dec = decode_model(&inst.table, &model, 2, &ps, Mode::Psl).unwrap();
                assert_eq!(dec.formula, core("{p} |-> p", &ps));
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn two_labels_on_one_node_unsat() {
        let ps = props2();
        let sample = Sample::new(ps, vec![lasso(&[], &[0b01])], vec![]).unwrap();
        let inst = build_phi(&sample, 1, 0, Mode::Psl, None).unwrap();
        let xp = inst.table.id(VarDesc::X { node: 1, label: LabelSym::Prop(0) }).unwrap();
        let xq = inst.table.id(VarDesc::X { node: 1, label: LabelSym::Prop(1) }).unwrap();
        assert_eq!(
            VarisatBackend
                .solve_with_assumptions(&inst.cnf, &[xp as Lit, xq as Lit], None)
                .unwrap(),
            SolveOutcome::Unsat
        );
    }

    #[test]
    fn epsilon_banned_without_regex_zone() {
        let ps = props1();
        let sample = Sample::new(ps, vec![lasso(&[], &[1])], vec![]).unwrap();
        let inst = build_phi(&sample, 1, 0, Mode::Psl, None).unwrap();
        let xe = inst.table.id(VarDesc::X { node: 1, label: LabelSym::Eps }).unwrap();
        assert_eq!(
            VarisatBackend.solve_with_assumptions(&inst.cnf, &[xe as Lit], None).unwrap(),
            SolveOutcome::Unsat
        );
    }

    #[test]
    fn decode_is_left_inverse_of_dag_encoding() {
        let ps = props2();
        for text in ["{(p . q)*} |-> X q", "{p . q} |-> X q", "p U (q | !p)", "{q*} |-> q", "X !p"] {
            let f = core(text, &ps);
            let (dag, m) = SyntaxDag::from_formula(&f, false).unwrap();
            let n = dag.n();
            let mut b = Builder::new(&ps, Mode::Psl, n, m, None).unwrap();
            let w = lasso(&[], &[0b01]);
            b.add_trace(TraceRef::Lasso(&w));
            let inst = b.finish(|_| Vec::new());
            // assignment with exactly the DAG's x/l/r bits set
            let mut values = vec![false; inst.table.len()];
            for lit in dag_assumptions(&inst.table, &dag, &ps).unwrap() {
                values[lit as usize - 1] = true;
            }
            let model = Model::from_values(values);
            let dec = decode_model(&inst.table, &model, n, &ps, Mode::Psl).unwrap();
            assert_eq!(dec.formula, f);
            assert_eq!(dec.reachable, n);
        }
    }

    #[test]
    fn malformed_model_detected() {
        let ps = props1();
        let sample = Sample::new(ps.clone(), vec![lasso(&[], &[1])], vec![]).unwrap();
        let inst = build_phi(&sample, 2, 0, Mode::Psl, None).unwrap();
        let model = Model::from_values(vec![false; inst.table.len()]);
        assert!(matches!(
            decode_model(&inst.table, &model, 2, &ps, Mode::Psl),
            Err(Error::MalformedModel(_))
        ));
    }

    #[test]
    fn variable_counts_match_table() {
        let ps = props2();
        let traces = [lasso(&[0b01], &[0b10, 0b11]), lasso(&[], &[0b00])];
        let sample = Sample::new(ps.clone(), vec![traces[0].clone()], vec![traces[1].clone()])
            .unwrap();
        let (n, m) = (4, 2);
        let inst = build_phi(&sample, n, m, Mode::Psl, None).unwrap();
        let b = inst.b;
        assert_eq!(b, (1 << m) + 1);
        let mut want_y = 0usize;
        let mut want_z = 0usize;
        for w in &traces {
            want_y += n * w.uv_len();
            let t = w.prefix_len() + b * w.period_len();
            want_z += m * (t + 1) * (t + 2) / 2;
        }
        let y_count = inst.table.descriptors().iter().filter(|d| matches!(d, VarDesc::Y { .. })).count();
        let z_count = inst.table.descriptors().iter().filter(|d| matches!(d, VarDesc::Z { .. })).count();
        assert_eq!(y_count, want_y);
        assert_eq!(z_count, want_z);
    }

    #[test]
    fn dimacs_deterministic() {
        let ps = props2();
        let sample = Sample::new(
            ps,
            vec![lasso(&[0b01], &[0b10])],
            vec![lasso(&[], &[0b00])],
        )
        .unwrap();
        let a = build_phi(&sample, 3, 1, Mode::Psl, None).unwrap();
        let b = build_phi(&sample, 3, 1, Mode::Psl, None).unwrap();
        assert_eq!(a.cnf.to_dimacs(), b.cnf.to_dimacs());
        assert_eq!(
            a.table.to_tsv(sample.propositions()),
            b.table.to_tsv(sample.propositions())
        );
    }

    #[test]
    fn ltl_mode_bans_regex_labels() {
        let ps = props1();
        let sample =
            Sample::new(ps, vec![lasso(&[1], &[0])], vec![lasso(&[], &[1])]).unwrap();
        let inst = build_phi(&sample, 2, 0, Mode::Ltl, None).unwrap();
        let xt = inst.table.id(VarDesc::X { node: 2, label: LabelSym::Triggers }).unwrap();
        assert_eq!(
            VarisatBackend.solve_with_assumptions(&inst.cnf, &[xt as Lit], None).unwrap(),
            SolveOutcome::Unsat
        );
    }
}
