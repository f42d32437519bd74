//! Exact, SAT-free semantics: atomic denotations, the regex matching
//! relation, PSL satisfaction over lasso words, and sample consistency.
//!
//! This module is the independent oracle against which every result of the
//! SAT pipeline is verified.

use std::collections::HashMap;

use crate::automaton::RegexAutomaton;
use crate::error::{Error, Result};
use crate::formula::{Formula, FormulaKind};
use crate::trace::{
    canonical_position, suffix_successor, unroll, FiniteSample, FiniteWord, LassoWord,
    PropositionSet, Sample, Symbol,
};

/// Whether a symbol belongs to the denotation of an atomic expression
/// (propositions, `¬`, `∨` only).
pub fn atom_denotation(xi: &Formula, sym: Symbol, props: &PropositionSet) -> Result<bool> {
    match xi.kind() {
        FormulaKind::Prop(p) => {
            let idx = props
                .index_of(p)
                .ok_or_else(|| Error::UnknownProposition(p.clone()))?;
            Ok(sym.contains(idx))
        }
        FormulaKind::Not(a) => Ok(!atom_denotation(a, sym, props)?),
        FormulaKind::Or(a, b) => {
            Ok(atom_denotation(a, sym, props)? || atom_denotation(b, sym, props)?)
        }
        _ => Err(Error::Type(format!("not an atomic expression: {xi}"))),
    }
}

/// Matching table of a regular expression over a finite word: one boolean per
/// `(subterm, i, j)` with `0 ≤ i ≤ j ≤ |w|`.
pub struct MatchTable {
    len: usize,
    subterms: Vec<Formula>,
    // row per subterm, flat (len+1) x (len+1); entries with i > j unused
    rows: Vec<Vec<bool>>,
}

impl MatchTable {
    /// Computes the full table bottom-up over the shared-subterm DAG.
    pub fn build(regex: &Formula, w: &FiniteWord, props: &PropositionSet) -> Result<MatchTable> {
        regex.typecheck(crate::formula::TypeCtx::Regex)?;
        let len = w.len();
        let width = len + 1;
        let at = |i: usize, j: usize| i * width + j;
        let subterms = regex.subterms();
        let mut rows: Vec<Vec<bool>> = Vec::with_capacity(subterms.len());
        let mut index: HashMap<&Formula, usize> = HashMap::new();

        for (si, t) in subterms.iter().enumerate() {
            let mut row = vec![false; width * width];
            match t.kind() {
                FormulaKind::Eps => {
                    for i in 0..=len {
                        row[at(i, i)] = true;
                    }
                }
                FormulaKind::Prop(_) | FormulaKind::Not(_) | FormulaKind::Or(..) => {
                    // atomic inside a regex: matches exactly single symbols
                    for i in 0..len {
                        row[at(i, i + 1)] = atom_denotation(t, w.symbol(i), props)?;
                    }
                }
                FormulaKind::Choice(a, b) => {
                    let (ra, rb) = (&rows[index[a]], &rows[index[b]]);
                    for i in 0..=len {
                        for j in i..=len {
                            row[at(i, j)] = ra[at(i, j)] || rb[at(i, j)];
                        }
                    }
                }
                FormulaKind::Concat(a, b) => {
                    let (ra, rb) = (&rows[index[a]], &rows[index[b]]);
                    for i in 0..=len {
                        for j in i..=len {
                            row[at(i, j)] =
                                (i..=j).any(|t| ra[at(i, t)] && rb[at(t, j)]);
                        }
                    }
                }
                FormulaKind::Star(a) => {
                    let ra = &rows[index[a]];
                    for span in 0..=len {
                        for i in 0..=len - span {
                            let j = i + span;
                            row[at(i, j)] = span == 0
                                || (i + 1..=j).any(|t| ra[at(i, t)] && row[at(t, j)]);
                        }
                    }
                }
                other => {
                    return Err(Error::Type(format!(
                        "operator not allowed in a regular expression: {other:?}"
                    )));
                }
            }
            rows.push(row);
            index.insert(t, si);
        }
        Ok(MatchTable { len, subterms, rows })
    }

    /// `w[i, j) ⊢ ρ` for the root expression.
    pub fn holds(&self, i: usize, j: usize) -> bool {
        debug_assert!(i <= j && j <= self.len);
        self.rows[self.subterms.len() - 1][i * (self.len + 1) + j]
    }
}

/// `w[i, j) ⊢ ρ`.
pub fn match_infix(
    regex: &Formula,
    w: &FiniteWord,
    i: usize,
    j: usize,
    props: &PropositionSet,
) -> Result<bool> {
    if i > j || j > w.len() {
        return Err(Error::InvalidTrace(format!(
            "infix [{i}, {j}) out of range for word of length {}",
            w.len()
        )));
    }
    Ok(MatchTable::build(regex, w, props)?.holds(i, j))
}

/// Whole-word matching, the regular-expression-mode consistency notion.
pub fn match_full(regex: &Formula, w: &FiniteWord, props: &PropositionSet) -> Result<bool> {
    Ok(MatchTable::build(regex, w, props)?.holds(0, w.len()))
}

/// How triggers obligations are gathered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TriggersEval {
    /// Subset construction with (state set, period index) cycle detection.
    #[default]
    Automaton,
    /// Match enumeration on the unrolled prefix `u v^(2^|ρ| + 1)`.
    Unrolled,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub triggers: TriggersEval,
}

/// Satisfaction of `u v^ω ⊨ φ`.
pub fn evaluate(f: &Formula, w: &LassoWord, props: &PropositionSet) -> Result<bool> {
    evaluate_at(f, w, 0, props)
}

/// Satisfaction of the suffix `u v^ω[i, ∞) ⊨ φ` for `i < |uv|`.
pub fn evaluate_at(f: &Formula, w: &LassoWord, i: usize, props: &PropositionSet) -> Result<bool> {
    evaluate_at_with(f, w, i, props, EvalOptions::default())
}

pub fn evaluate_at_with(
    f: &Formula,
    w: &LassoWord,
    i: usize,
    props: &PropositionSet,
    opts: EvalOptions,
) -> Result<bool> {
    if i >= w.uv_len() {
        return Err(Error::InvalidTrace(format!(
            "suffix position {i} out of range (|uv| = {})",
            w.uv_len()
        )));
    }
    let table = SatisfactionTable::build(f, w, props, opts)?;
    Ok(table.holds(i))
}

/// Per-position satisfaction of a formula and its PSL-typed subterms over the
/// `|uv|` distinct suffixes of a lasso word.
pub struct SatisfactionTable {
    rows: Vec<bool>,
}

impl SatisfactionTable {
    pub fn build(
        f: &Formula,
        w: &LassoWord,
        props: &PropositionSet,
        opts: EvalOptions,
    ) -> Result<SatisfactionTable> {
        let (u_len, v_len) = (w.prefix_len(), w.period_len());
        let uv = u_len + v_len;
        let subterms = f.subterms();
        let mut index: HashMap<&Formula, usize> = HashMap::new();
        // One satisfaction row per PSL-evaluable subterm; regex-only subterms
        // have no row and are handled by the triggers case.
        let mut rows: Vec<Option<Vec<bool>>> = Vec::with_capacity(subterms.len());

        for (si, t) in subterms.iter().enumerate() {
            let row: Option<Vec<bool>> = match t.kind() {
                FormulaKind::Prop(p) => {
                    let idx = props
                        .index_of(p)
                        .ok_or_else(|| Error::UnknownProposition(p.clone()))?;
                    Some((0..uv).map(|i| w.symbol_at(i).contains(idx)).collect())
                }
                FormulaKind::Not(a) => rows[index[a]]
                    .as_ref()
                    .map(|ra| ra.iter().map(|&b| !b).collect()),
                FormulaKind::Or(a, b) => match (&rows[index[a]], &rows[index[b]]) {
                    (Some(ra), Some(rb)) => {
                        Some(ra.iter().zip(rb).map(|(&x, &y)| x || y).collect())
                    }
                    _ => None,
                },
                FormulaKind::Next(a) => {
                    let ra = rows[index[a]]
                        .as_ref()
                        .ok_or_else(|| Error::Type(format!("ill-typed X operand in {t}")))?;
                    Some((0..uv).map(|i| ra[suffix_successor(u_len, v_len, i)]).collect())
                }
                FormulaKind::Until(a, b) => {
                    let ra = rows[index[a]]
                        .as_ref()
                        .ok_or_else(|| Error::Type(format!("ill-typed U operand in {t}")))?;
                    let rb = rows[index[b]]
                        .as_ref()
                        .ok_or_else(|| Error::Type(format!("ill-typed U operand in {t}")))?;
                    // least fixpoint: an eventuality must be witnessed
                    let mut y = vec![false; uv];
                    for _ in 0..uv {
                        let mut next = vec![false; uv];
                        for i in 0..uv {
                            next[i] = rb[i] || (ra[i] && y[suffix_successor(u_len, v_len, i)]);
                        }
                        if next == y {
                            break;
                        }
                        y = next;
                    }
                    Some(y)
                }
                FormulaKind::Triggers(l, r) => {
                    let rr = rows[index[r]]
                        .as_ref()
                        .ok_or_else(|| Error::Type(format!("ill-typed |-> operand in {t}")))?;
                    let mut row = Vec::with_capacity(uv);
                    match opts.triggers {
                        TriggersEval::Automaton => {
                            let aut = RegexAutomaton::compile(l)?;
                            for i in 0..uv {
                                let obligations = aut.obligations(w, i, props)?;
                                row.push(obligations.iter().all(|&pos| rr[pos]));
                            }
                        }
                        TriggersEval::Unrolled => {
                            let m = l.size();
                            if m > 20 {
                                return Err(Error::Internal(
                                    "unrolled triggers bound 2^m + 1 too large".into(),
                                ));
                            }
                            let b = (1usize << m) + 1;
                            let unrolled = unroll(w, b);
                            let mt = MatchTable::build(l, &unrolled, props)?;
                            for i in 0..uv {
                                let ok = (i + 1..=unrolled.len()).all(|j| {
                                    !mt.holds(i, j)
                                        || rr[canonical_position(u_len, v_len, j - 1)]
                                });
                                row.push(ok);
                            }
                        }
                    }
                    Some(row)
                }
                FormulaKind::Eps
                | FormulaKind::Choice(..)
                | FormulaKind::Concat(..)
                | FormulaKind::Star(_) => None,
                other => {
                    return Err(Error::Type(format!(
                        "evaluate requires a core formula, found {other:?}"
                    )));
                }
            };
            rows.push(row);
            index.insert(t, si);
        }

        let root = rows
            .pop()
            .flatten()
            .ok_or_else(|| Error::Type(format!("not a PSL formula: {f}")))?;
        Ok(SatisfactionTable { rows: root })
    }

    pub fn holds(&self, i: usize) -> bool {
        self.rows[i]
    }

    pub fn positions(&self) -> &[bool] {
        &self.rows
    }
}

/// The first trace a formula misclassifies, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// true when the offending trace is a positive example
    pub positive: bool,
    pub index: usize,
    pub trace: String,
}

/// Consistency with a sample: all positives satisfy the formula, all
/// negatives violate it. Derived operators are expanded first. Returns the
/// witness of the first failing trace, or `None` when consistent.
pub fn check_consistency(f: &Formula, sample: &Sample) -> Result<Option<Witness>> {
    let props = sample.propositions();
    let core = f.desugar(props);
    for (index, (w, positive)) in sample.traces().enumerate() {
        let verdict = evaluate(&core, w, props)?;
        if verdict != positive {
            let index = if positive { index } else { index - sample.positives().len() };
            return Ok(Some(Witness { positive, index, trace: w.display(props) }));
        }
    }
    Ok(None)
}

pub fn is_consistent(f: &Formula, sample: &Sample) -> Result<bool> {
    Ok(check_consistency(f, sample)?.is_none())
}

/// Regular-expression-mode consistency over finite words: full-word matching.
pub fn check_regex_consistency(
    regex: &Formula,
    sample: &FiniteSample,
) -> Result<Option<Witness>> {
    let props = sample.propositions();
    let core = regex.desugar(props);
    for (index, (w, positive)) in sample.words().enumerate() {
        let verdict = match_full(&core, w, props)?;
        if verdict != positive {
            let index = if positive { index } else { index - sample.positives().len() };
            let shown: Vec<String> =
                w.symbols().iter().map(|s| s.to_bit_string(props.len())).collect();
            return Ok(Some(Witness { positive, index, trace: shown.join(";") }));
        }
    }
    Ok(None)
}
