//! The PSL core AST, syntax DAGs, formula size, and the pretty-printer.
//!
//! Formulas are immutable terms behind `Arc`; structurally equal terms compare
//! equal, and [`Formula::subterms`] enumerates each distinct subterm once, so
//! [`Formula::size`] is the node count of the minimal syntax DAG.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::trace::PropositionSet;

/// Node labels of a syntax DAG: core operators, `ε`, and atomic propositions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Eps,
    Prop(String),
    Not,
    Or,
    Choice,
    Concat,
    Star,
    Next,
    Until,
    Triggers,
}

impl Label {
    pub fn arity(&self) -> usize {
        match self {
            Label::Eps | Label::Prop(_) => 0,
            Label::Not | Label::Star | Label::Next => 1,
            Label::Or | Label::Choice | Label::Concat | Label::Until | Label::Triggers => 2,
        }
    }

    /// May label a regular-expression node (includes `ε`).
    pub fn is_regex_capable(&self) -> bool {
        !matches!(self, Label::Next | Label::Until | Label::Triggers)
    }

    /// May label a PSL node (everything except `ε`).
    pub fn is_psl_capable(&self) -> bool {
        !matches!(self, Label::Eps)
    }

    /// May label an atomic expression (single-symbol predicates).
    pub fn is_atomic_capable(&self) -> bool {
        matches!(self, Label::Prop(_) | Label::Not | Label::Or)
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum FormulaKind {
    Prop(String),
    True,
    False,
    Eps,
    Not(Formula),
    Or(Formula, Formula),
    And(Formula, Formula),
    Implies(Formula, Formula),
    Iff(Formula, Formula),
    Next(Formula),
    Finally(Formula),
    Globally(Formula),
    Until(Formula, Formula),
    Choice(Formula, Formula),
    Concat(Formula, Formula),
    Star(Formula),
    Triggers(Formula, Formula),
}

/// An immutable, shareable formula term.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Formula(Arc<FormulaKind>);

impl Formula {
    fn mk(kind: FormulaKind) -> Formula {
        Formula(Arc::new(kind))
    }

    pub fn prop(name: impl Into<String>) -> Formula {
        Formula::mk(FormulaKind::Prop(name.into()))
    }
    pub fn tt() -> Formula {
        Formula::mk(FormulaKind::True)
    }
    pub fn ff() -> Formula {
        Formula::mk(FormulaKind::False)
    }
    pub fn eps() -> Formula {
        Formula::mk(FormulaKind::Eps)
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::mk(FormulaKind::Not(f))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::mk(FormulaKind::Or(a, b))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::mk(FormulaKind::And(a, b))
    }
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::mk(FormulaKind::Implies(a, b))
    }
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::mk(FormulaKind::Iff(a, b))
    }
    pub fn next(f: Formula) -> Formula {
        Formula::mk(FormulaKind::Next(f))
    }
    pub fn finally(f: Formula) -> Formula {
        Formula::mk(FormulaKind::Finally(f))
    }
    pub fn globally(f: Formula) -> Formula {
        Formula::mk(FormulaKind::Globally(f))
    }
    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::mk(FormulaKind::Until(a, b))
    }
    pub fn choice(a: Formula, b: Formula) -> Formula {
        Formula::mk(FormulaKind::Choice(a, b))
    }
    pub fn concat(a: Formula, b: Formula) -> Formula {
        Formula::mk(FormulaKind::Concat(a, b))
    }
    pub fn star(f: Formula) -> Formula {
        Formula::mk(FormulaKind::Star(f))
    }
    pub fn triggers(regex: Formula, rhs: Formula) -> Formula {
        Formula::mk(FormulaKind::Triggers(regex, rhs))
    }

    pub fn kind(&self) -> &FormulaKind {
        &self.0
    }

    pub fn children(&self) -> Vec<&Formula> {
        use FormulaKind::*;
        match self.kind() {
            Prop(_) | True | False | Eps => vec![],
            Not(a) | Next(a) | Finally(a) | Globally(a) | Star(a) => vec![a],
            Or(a, b) | And(a, b) | Implies(a, b) | Iff(a, b) | Until(a, b) | Choice(a, b)
            | Concat(a, b) | Triggers(a, b) => vec![a, b],
        }
    }

    /// All distinct subterms in bottom-up order (children before parents);
    /// the last entry is the formula itself.
    pub fn subterms(&self) -> Vec<Formula> {
        fn walk(f: &Formula, out: &mut Vec<Formula>) {
            if out.contains(f) {
                return;
            }
            for c in f.children() {
                walk(c, out);
            }
            out.push(f.clone());
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Number of unique subformulas and subexpressions.
    pub fn size(&self) -> usize {
        self.subterms().len()
    }

    /// Node count with multiplicity (the syntax tree, not the DAG).
    pub fn tree_size(&self) -> usize {
        1 + self.children().iter().map(|c| c.tree_size()).sum::<usize>()
    }

    /// True when only core labels occur (no derived operators or constants).
    pub fn is_core(&self) -> bool {
        use FormulaKind::*;
        !matches!(
            self.kind(),
            True | False | And(..) | Implies(..) | Iff(..) | Finally(_) | Globally(_)
        ) && self.children().iter().all(|c| c.is_core())
    }

    /// True when the core labels stay within LTL (no regex operators, `ε`, or
    /// triggers).
    pub fn is_ltl(&self) -> bool {
        use FormulaKind::*;
        !matches!(self.kind(), Eps | Choice(..) | Concat(..) | Star(_) | Triggers(..))
            && self.children().iter().all(|c| c.is_ltl())
    }

    /// Proposition names mentioned by the formula.
    pub fn propositions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in self.subterms() {
            if let FormulaKind::Prop(p) = t.kind() {
                out.insert(p.clone());
            }
        }
        out
    }

    /// Rewrites derived operators into core ones: `F φ = tt U φ`,
    /// `G φ = ¬F¬φ`, Boolean sugar by De Morgan, and `tt`/`ff` as `p ∨ ¬p`
    /// (resp. its negation) over the first proposition.
    pub fn desugar(&self, props: &PropositionSet) -> Formula {
        use FormulaKind::*;
        let tt = || {
            let p = Formula::prop(props.name(0));
            Formula::or(p.clone(), Formula::not(p))
        };
        match self.kind() {
            Prop(_) | Eps => self.clone(),
            True => tt(),
            False => Formula::not(tt()),
            Not(a) => Formula::not(a.desugar(props)),
            Or(a, b) => Formula::or(a.desugar(props), b.desugar(props)),
            And(a, b) => Formula::not(Formula::or(
                Formula::not(a.desugar(props)),
                Formula::not(b.desugar(props)),
            )),
            Implies(a, b) => Formula::or(Formula::not(a.desugar(props)), b.desugar(props)),
            Iff(a, b) => {
                Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b.clone(), a.clone()))
                    .desugar(props)
            }
            Next(a) => Formula::next(a.desugar(props)),
            Finally(a) => Formula::until(tt(), a.desugar(props)),
            Globally(a) => {
                Formula::not(Formula::until(tt(), Formula::not(a.desugar(props))))
            }
            Until(a, b) => Formula::until(a.desugar(props), b.desugar(props)),
            Choice(a, b) => Formula::choice(a.desugar(props), b.desugar(props)),
            Concat(a, b) => Formula::concat(a.desugar(props), b.desugar(props)),
            Star(a) => Formula::star(a.desugar(props)),
            Triggers(a, b) => Formula::triggers(a.desugar(props), b.desugar(props)),
        }
    }

    /// Checks well-typedness in the given context. `¬` and `∨` inside regular
    /// expressions must have atomic-expression children (the strict grammar).
    pub fn typecheck(&self, ctx: TypeCtx) -> Result<()> {
        use FormulaKind::*;
        let err = |what: &str| {
            Err(Error::Type(format!("{what} not allowed in {} context", ctx.describe())))
        };
        match self.kind() {
            Prop(_) => Ok(()),
            True | False => Ok(()),
            Eps => match ctx {
                TypeCtx::Regex => Ok(()),
                _ => err("eps"),
            },
            Not(a) => {
                let child_ctx = if ctx == TypeCtx::Psl { TypeCtx::Psl } else { TypeCtx::Atomic };
                a.typecheck(child_ctx)
            }
            Or(a, b) | And(a, b) | Implies(a, b) | Iff(a, b) => {
                let child_ctx = if ctx == TypeCtx::Psl { TypeCtx::Psl } else { TypeCtx::Atomic };
                a.typecheck(child_ctx)?;
                b.typecheck(child_ctx)
            }
            Next(a) | Finally(a) | Globally(a) => match ctx {
                TypeCtx::Psl => a.typecheck(TypeCtx::Psl),
                _ => err("temporal operator"),
            },
            Until(a, b) => match ctx {
                TypeCtx::Psl => {
                    a.typecheck(TypeCtx::Psl)?;
                    b.typecheck(TypeCtx::Psl)
                }
                _ => err("U"),
            },
            Choice(a, b) | Concat(a, b) => match ctx {
                TypeCtx::Regex => {
                    a.typecheck(TypeCtx::Regex)?;
                    b.typecheck(TypeCtx::Regex)
                }
                _ => err("regex operator"),
            },
            Star(a) => match ctx {
                TypeCtx::Regex => a.typecheck(TypeCtx::Regex),
                _ => err("*"),
            },
            Triggers(a, b) => match ctx {
                TypeCtx::Psl => {
                    a.typecheck(TypeCtx::Regex)?;
                    b.typecheck(TypeCtx::Psl)
                }
                _ => err("|->"),
            },
        }
    }

    /// Label of the root node, for core formulas.
    pub fn label(&self) -> Option<Label> {
        use FormulaKind::*;
        Some(match self.kind() {
            Prop(p) => Label::Prop(p.clone()),
            Eps => Label::Eps,
            Not(_) => Label::Not,
            Or(..) => Label::Or,
            Next(_) => Label::Next,
            Until(..) => Label::Until,
            Choice(..) => Label::Choice,
            Concat(..) => Label::Concat,
            Star(_) => Label::Star,
            Triggers(..) => Label::Triggers,
            _ => return None,
        })
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Typing context for [`Formula::typecheck`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeCtx {
    /// A PSL formula position.
    Psl,
    /// A regular-expression position.
    Regex,
    /// An atomic expression (a single-symbol predicate inside a regex).
    Atomic,
}

impl TypeCtx {
    fn describe(self) -> &'static str {
        match self {
            TypeCtx::Psl => "PSL formula",
            TypeCtx::Regex => "regular expression",
            TypeCtx::Atomic => "atomic expression",
        }
    }
}

// Pretty-printing with minimal parentheses. Precedence, tight to loose:
// * ! X F G, ., +, &, |, U, ->, <->, |->
fn prec(f: &Formula) -> u8 {
    use FormulaKind::*;
    match f.kind() {
        Prop(_) | True | False | Eps => 10,
        Star(_) | Not(_) | Next(_) | Finally(_) | Globally(_) => 9,
        Concat(..) => 8,
        Choice(..) => 7,
        And(..) => 6,
        Or(..) => 5,
        Until(..) => 4,
        Implies(..) => 3,
        Iff(..) => 2,
        Triggers(..) => 1,
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FormulaKind::*;

        fn wrapped(f: &Formula, needs_paren: bool, out: &mut fmt::Formatter<'_>) -> fmt::Result {
            if needs_paren {
                write!(out, "(")?;
                write!(out, "{f}")?;
                write!(out, ")")
            } else {
                write!(out, "{f}")
            }
        }

        let p = prec(self);
        match self.kind() {
            Prop(name) => write!(out, "{name}"),
            True => write!(out, "true"),
            False => write!(out, "false"),
            Eps => write!(out, "eps"),
            Not(a) => {
                write!(out, "!")?;
                wrapped(a, prec(a) < 9, out)
            }
            Next(a) => {
                write!(out, "X ")?;
                wrapped(a, prec(a) < 9, out)
            }
            Finally(a) => {
                write!(out, "F ")?;
                wrapped(a, prec(a) < 9, out)
            }
            Globally(a) => {
                write!(out, "G ")?;
                wrapped(a, prec(a) < 9, out)
            }
            Star(a) => {
                // postfix binds tighter than prefix: (!p)* needs parentheses
                let plain = prec(a) == 10 || matches!(a.kind(), Star(_));
                wrapped(a, !plain, out)?;
                write!(out, "*")
            }
            Concat(a, b) | Choice(a, b) | And(a, b) | Or(a, b) => {
                let op = match self.kind() {
                    Concat(..) => ".",
                    Choice(..) => "+",
                    And(..) => "&",
                    _ => "|",
                };
                wrapped(a, prec(a) < p, out)?;
                write!(out, " {op} ")?;
                wrapped(b, prec(b) <= p, out)
            }
            Until(a, b) | Implies(a, b) | Iff(a, b) => {
                let op = match self.kind() {
                    Until(..) => "U",
                    Implies(..) => "->",
                    _ => "<->",
                };
                wrapped(a, prec(a) <= p, out)?;
                write!(out, " {op} ")?;
                wrapped(b, prec(b) < p, out)
            }
            Triggers(a, b) => {
                write!(out, "{{{a}}} |-> ")?;
                wrapped(b, prec(b) < p, out)
            }
        }
    }
}

/// A node of a syntax DAG. Ids are 1-based; children of node `k` have ids
/// strictly below `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagNode {
    pub label: Label,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

/// A syntax DAG over core labels. The root is node `n`, node 1 is a leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxDag {
    nodes: Vec<DagNode>,
}

impl SyntaxDag {
    pub fn new(nodes: Vec<DagNode>) -> Result<SyntaxDag> {
        if nodes.is_empty() {
            return Err(Error::Internal("empty syntax DAG".into()));
        }
        for (idx, node) in nodes.iter().enumerate() {
            let k = idx + 1;
            let arity = node.label.arity();
            let want_left = arity >= 1;
            let want_right = arity >= 2;
            if node.left.is_some() != want_left || node.right.is_some() != want_right {
                return Err(Error::Internal(format!(
                    "node {k}: child slots do not match arity of {:?}",
                    node.label
                )));
            }
            for child in [node.left, node.right].into_iter().flatten() {
                if child == 0 || child >= k {
                    return Err(Error::Internal(format!(
                        "node {k}: child {child} must be a smaller nonzero id"
                    )));
                }
            }
        }
        if nodes[0].label.arity() != 0 {
            return Err(Error::Internal("node 1 must be a leaf".into()));
        }
        let dag = SyntaxDag { nodes };
        let reach = dag.reachable_from_root();
        if reach.iter().any(|r| !r) {
            return Err(Error::Internal("unreachable node in syntax DAG".into()));
        }
        Ok(dag)
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, k: usize) -> &DagNode {
        &self.nodes[k - 1]
    }

    pub fn nodes(&self) -> &[DagNode] {
        &self.nodes
    }

    fn reachable_from_root(&self) -> Vec<bool> {
        let mut reach = vec![false; self.nodes.len()];
        let mut stack = vec![self.nodes.len()];
        while let Some(k) = stack.pop() {
            if reach[k - 1] {
                continue;
            }
            reach[k - 1] = true;
            let node = &self.nodes[k - 1];
            stack.extend([node.left, node.right].into_iter().flatten());
        }
        reach
    }

    /// Builds the formula rooted at node `n`.
    pub fn to_formula(&self) -> Result<Formula> {
        let mut built: Vec<Option<Formula>> = vec![None; self.nodes.len()];
        for (idx, node) in self.nodes.iter().enumerate() {
            let child = |slot: Option<usize>| -> Result<Formula> {
                let id = slot.ok_or_else(|| Error::Internal("missing child".into()))?;
                built[id - 1]
                    .clone()
                    .ok_or_else(|| Error::Internal("child built out of order".into()))
            };
            let f = match &node.label {
                Label::Eps => Formula::eps(),
                Label::Prop(p) => Formula::prop(p.clone()),
                Label::Not => Formula::not(child(node.left)?),
                Label::Or => Formula::or(child(node.left)?, child(node.right)?),
                Label::Choice => Formula::choice(child(node.left)?, child(node.right)?),
                Label::Concat => Formula::concat(child(node.left)?, child(node.right)?),
                Label::Star => Formula::star(child(node.left)?),
                Label::Next => Formula::next(child(node.left)?),
                Label::Until => Formula::until(child(node.left)?, child(node.right)?),
                Label::Triggers => Formula::triggers(child(node.left)?, child(node.right)?),
            };
            built[idx] = Some(f);
        }
        Ok(built.last().unwrap().clone().unwrap())
    }

    /// Builds the minimal syntax DAG of a core formula, ordered so that every
    /// subterm used in regular-expression context comes before all purely
    /// PSL-context subterms. Returns the DAG and the count `m` of
    /// regex-context nodes (they occupy ids `1..=m`).
    pub fn from_formula(f: &Formula, root_is_regex: bool) -> Result<(SyntaxDag, usize)> {
        if !f.is_core() {
            return Err(Error::Type("formula must use core operators only".into()));
        }
        let subs = f.subterms();
        let index_of = |t: &Formula| subs.iter().position(|s| s == t).unwrap();

        // Mark every subterm that occurs in regex context (closed downward).
        let mut in_regex = vec![false; subs.len()];
        fn mark(f: &Formula, regex_ctx: bool, subs: &[Formula], in_regex: &mut [bool]) {
            let idx = subs.iter().position(|s| s == f).unwrap();
            if regex_ctx {
                if in_regex[idx] {
                    return;
                }
                in_regex[idx] = true;
                for c in f.children() {
                    mark(c, true, subs, in_regex);
                }
            } else if let FormulaKind::Triggers(l, r) = f.kind() {
                mark(l, true, subs, in_regex);
                mark(r, false, subs, in_regex);
            } else {
                for c in f.children() {
                    mark(c, false, subs, in_regex);
                }
            }
        }
        mark(f, root_is_regex, &subs, &mut in_regex);

        // Stable partition: regex-context subterms first. Downward closure
        // keeps children before parents.
        let mut order: Vec<usize> = Vec::with_capacity(subs.len());
        order.extend((0..subs.len()).filter(|&i| in_regex[i]));
        let m = order.len();
        order.extend((0..subs.len()).filter(|&i| !in_regex[i]));

        let mut new_id = vec![0usize; subs.len()];
        for (pos, &old) in order.iter().enumerate() {
            new_id[old] = pos + 1;
        }
        let mut nodes = Vec::with_capacity(subs.len());
        for &old in &order {
            let t = &subs[old];
            let label = t
                .label()
                .ok_or_else(|| Error::Type("formula must use core operators only".into()))?;
            let kids = t.children();
            nodes.push(DagNode {
                label,
                left: kids.first().map(|c| new_id[index_of(c)]),
                right: kids.get(1).map(|c| new_id[index_of(c)]),
            });
        }
        Ok((SyntaxDag::new(nodes)?, m))
    }
}
