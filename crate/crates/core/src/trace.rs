//! Propositions, symbols, finite and ultimately periodic words, and samples.
//!
//! A symbol is a subset of the proposition set, stored as a bit mask over the
//! fixed proposition order. An ultimately periodic (lasso) word `(u, v)` with
//! nonempty `v` denotes the infinite word `u v v v ...`.

use std::fmt;

use crate::error::{Error, Result};

/// Hard cap on the number of propositions; symbols are 64-bit masks.
pub const MAX_PROPOSITIONS: usize = 64;

/// An ordered set of distinct proposition names. The order is fixed after
/// construction and defines the bit positions used by [`Symbol`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropositionSet {
    names: Vec<String>,
}

impl PropositionSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidPropositions("must not be empty".into()));
        }
        if names.len() > MAX_PROPOSITIONS {
            return Err(Error::InvalidPropositions(format!(
                "at most {MAX_PROPOSITIONS} propositions are supported, got {}",
                names.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::InvalidPropositions("empty proposition name".into()));
            }
            if names[..i].contains(n) {
                return Err(Error::InvalidPropositions(format!("duplicate name `{n}`")));
            }
        }
        Ok(PropositionSet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: nonempty
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// One alphabet symbol: a subset of the proposition set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Symbol(u64);

impl Symbol {
    pub const EMPTY: Symbol = Symbol(0);

    pub fn from_bits(bits: u64) -> Symbol {
        Symbol(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, prop_index: usize) -> bool {
        self.0 >> prop_index & 1 == 1
    }

    pub fn with(self, prop_index: usize) -> Symbol {
        Symbol(self.0 | 1 << prop_index)
    }

    /// Renders as a bit string in proposition order, e.g. `10` for {first}.
    pub fn to_bit_string(self, width: usize) -> String {
        (0..width).map(|i| if self.contains(i) { '1' } else { '0' }).collect()
    }
}

/// A finite word over `2^P`; possibly empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FiniteWord {
    symbols: Vec<Symbol>,
}

impl FiniteWord {
    pub fn new(symbols: Vec<Symbol>) -> FiniteWord {
        FiniteWord { symbols }
    }

    pub fn empty() -> FiniteWord {
        FiniteWord { symbols: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> Symbol {
        self.symbols[i]
    }

    pub fn push(&mut self, a: Symbol) {
        self.symbols.push(a);
    }
}

impl FromIterator<Symbol> for FiniteWord {
    fn from_iter<T: IntoIterator<Item = Symbol>>(iter: T) -> Self {
        FiniteWord { symbols: iter.into_iter().collect() }
    }
}

/// An ultimately periodic word `u v^ω` with `|v| ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LassoWord {
    prefix: FiniteWord,
    period: FiniteWord,
}

impl LassoWord {
    pub fn new(prefix: FiniteWord, period: FiniteWord) -> Result<LassoWord> {
        if period.is_empty() {
            return Err(Error::InvalidTrace("period must be nonempty".into()));
        }
        Ok(LassoWord { prefix, period })
    }

    pub fn prefix(&self) -> &FiniteWord {
        &self.prefix
    }

    pub fn period(&self) -> &FiniteWord {
        &self.period
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    /// Length of the representative prefix `uv`.
    pub fn uv_len(&self) -> usize {
        self.prefix.len() + self.period.len()
    }

    /// The symbol at an arbitrary position of the infinite word.
    pub fn symbol_at(&self, pos: usize) -> Symbol {
        if pos < self.prefix.len() {
            self.prefix.symbol(pos)
        } else {
            self.period.symbol((pos - self.prefix.len()) % self.period.len())
        }
    }

    /// Reduces the period to its primitive root and pulls trailing prefix
    /// symbols into the loop, yielding the minimal literal representation of
    /// the same infinite word.
    pub fn normalize(&self) -> LassoWord {
        let mut v = self.period.symbols.clone();
        // primitive root: the shortest r with v = r^k
        for root in 1..=v.len() {
            if v.len().is_multiple_of(root) && (root..v.len()).all(|i| v[i] == v[i - root]) {
                v.truncate(root);
                break;
            }
        }
        let mut u = self.prefix.symbols.clone();
        while let Some(&last) = u.last() {
            if last == v[v.len() - 1] {
                u.pop();
                v.rotate_right(1);
            } else {
                break;
            }
        }
        LassoWord { prefix: FiniteWord::new(u), period: FiniteWord::new(v) }
    }

    /// Human-readable form used in error witnesses, e.g. `10;01::11`.
    pub fn display(&self, props: &PropositionSet) -> String {
        let w = props.len();
        let part = |fw: &FiniteWord| {
            fw.symbols().iter().map(|s| s.to_bit_string(w)).collect::<Vec<_>>().join(";")
        };
        format!("{}::{}", part(&self.prefix), part(&self.period))
    }
}

/// Maps a position `j` of `u v^ω` to the equivalent position within the
/// representative prefix `uv`.
pub fn canonical_position(u_len: usize, v_len: usize, j: usize) -> usize {
    debug_assert!(v_len >= 1);
    if j < u_len + v_len {
        j
    } else {
        u_len + (j - u_len) % v_len
    }
}

/// Successor of a position within the representative prefix `uv`: `i + 1`,
/// wrapping around to `|u|` at the end of the period.
pub fn suffix_successor(u_len: usize, v_len: usize, i: usize) -> usize {
    debug_assert!(i < u_len + v_len, "position {i} out of range");
    if i + 1 < u_len + v_len {
        i + 1
    } else {
        u_len
    }
}

/// The finite prefix `u v^b`.
pub fn unroll(w: &LassoWord, b: usize) -> FiniteWord {
    debug_assert!(b >= 1);
    let mut out = Vec::with_capacity(w.prefix_len() + b * w.period_len());
    out.extend_from_slice(w.prefix().symbols());
    for _ in 0..b {
        out.extend_from_slice(w.period().symbols());
    }
    FiniteWord::new(out)
}

/// A sample of ultimately periodic words: disjoint positive and negative sets
/// over a shared proposition set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    props: PropositionSet,
    positives: Vec<LassoWord>,
    negatives: Vec<LassoWord>,
}

impl Sample {
    pub fn new(
        props: PropositionSet,
        positives: Vec<LassoWord>,
        negatives: Vec<LassoWord>,
    ) -> Result<Sample> {
        let positives = dedup_preserving_order(positives);
        let negatives = dedup_preserving_order(negatives);
        if positives.is_empty() && negatives.is_empty() {
            return Err(Error::InvalidTrace("sample must contain at least one trace".into()));
        }
        for w in &positives {
            if negatives.contains(w) {
                return Err(Error::DisjointnessViolation(w.display(&props)));
            }
        }
        Ok(Sample { props, positives, negatives })
    }

    pub fn propositions(&self) -> &PropositionSet {
        &self.props
    }

    pub fn positives(&self) -> &[LassoWord] {
        &self.positives
    }

    pub fn negatives(&self) -> &[LassoWord] {
        &self.negatives
    }

    pub fn traces(&self) -> impl Iterator<Item = (&LassoWord, bool)> {
        self.positives
            .iter()
            .map(|w| (w, true))
            .chain(self.negatives.iter().map(|w| (w, false)))
    }

    /// Literal lasso representations replaced by their normal forms.
    pub fn normalized(&self) -> Result<Sample> {
        Sample::new(
            self.props.clone(),
            self.positives.iter().map(LassoWord::normalize).collect(),
            self.negatives.iter().map(LassoWord::normalize).collect(),
        )
    }
}

/// A sample of finite words, used in regular-expression mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSample {
    props: PropositionSet,
    positives: Vec<FiniteWord>,
    negatives: Vec<FiniteWord>,
}

impl FiniteSample {
    pub fn new(
        props: PropositionSet,
        positives: Vec<FiniteWord>,
        negatives: Vec<FiniteWord>,
    ) -> Result<FiniteSample> {
        let positives = dedup_preserving_order(positives);
        let negatives = dedup_preserving_order(negatives);
        if positives.is_empty() && negatives.is_empty() {
            return Err(Error::InvalidTrace("sample must contain at least one word".into()));
        }
        for w in &positives {
            if negatives.contains(w) {
                let shown: Vec<String> =
                    w.symbols().iter().map(|s| s.to_bit_string(props.len())).collect();
                return Err(Error::DisjointnessViolation(shown.join(";")));
            }
        }
        Ok(FiniteSample { props, positives, negatives })
    }

    pub fn propositions(&self) -> &PropositionSet {
        &self.props
    }

    pub fn positives(&self) -> &[FiniteWord] {
        &self.positives
    }

    pub fn negatives(&self) -> &[FiniteWord] {
        &self.negatives
    }

    pub fn words(&self) -> impl Iterator<Item = (&FiniteWord, bool)> {
        self.positives
            .iter()
            .map(|w| (w, true))
            .chain(self.negatives.iter().map(|w| (w, false)))
    }
}

fn dedup_preserving_order<T: PartialEq>(items: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:b}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(bits: u64) -> Symbol {
        Symbol::from_bits(bits)
    }

    fn word(bits: &[u64]) -> FiniteWord {
        bits.iter().map(|&b| sym(b)).collect()
    }

    fn lasso(u: &[u64], v: &[u64]) -> LassoWord {
        LassoWord::new(word(u), word(v)).unwrap()
    }

    #[test]
    fn canonical_position_examples() {
        assert_eq!(canonical_position(1, 2, 0), 0);
        assert_eq!(canonical_position(1, 2, 3), 1);
        assert_eq!(canonical_position(1, 2, 4), 2);
    }

    #[test]
    fn suffix_successor_examples() {
        assert_eq!(suffix_successor(1, 2, 0), 1);
        assert_eq!(suffix_successor(1, 2, 2), 1);
        assert_eq!(suffix_successor(0, 1, 0), 0);
    }

    #[test]
    fn unroll_examples() {
        // u = ∅, v = {p}: two copies of v
        assert_eq!(unroll(&lasso(&[0], &[1]), 2), word(&[0, 1, 1]));
        assert_eq!(unroll(&lasso(&[], &[1, 0]), 1), word(&[1, 0]));
        assert_eq!(unroll(&lasso(&[1], &[0]), 3), word(&[1, 0, 0, 0]));
    }

    #[test]
    fn unroll_prefix_property() {
        let w = lasso(&[1, 0], &[1, 1, 0]);
        for b in 1..4 {
            let shorter = unroll(&w, b);
            let longer = unroll(&w, b + 1);
            assert_eq!(&longer.symbols()[..shorter.len()], shorter.symbols());
        }
    }

    #[test]
    fn empty_period_rejected() {
        assert!(LassoWord::new(word(&[1]), FiniteWord::empty()).is_err());
    }

    #[test]
    fn lasso_normalize() {
        // v = (10)(10) reduces to (10); the whole prefix rotates into the loop
        let w = lasso(&[1, 0], &[1, 0, 1, 0]);
        let n = w.normalize();
        assert_eq!(n, lasso(&[], &[1, 0]));
        // normalized word denotes the same sequence
        for i in 0..12 {
            assert_eq!(w.symbol_at(i), n.symbol_at(i));
        }
        let fixed = lasso(&[1], &[0]);
        assert_eq!(fixed.normalize(), fixed);
    }

    #[test]
    fn sample_disjointness() {
        let props = PropositionSet::new(["p"]).unwrap();
        let w = lasso(&[1], &[1]);
        let err = Sample::new(props, vec![w.clone()], vec![w]).unwrap_err();
        assert!(matches!(err, Error::DisjointnessViolation(_)));
    }

    #[test]
    fn sample_dedup() {
        let props = PropositionSet::new(["p"]).unwrap();
        let w = lasso(&[1], &[1]);
        let s = Sample::new(props, vec![w.clone(), w], vec![lasso(&[], &[0])]).unwrap();
        assert_eq!(s.positives().len(), 1);
    }

    #[test]
    fn duplicate_proposition_rejected() {
        assert!(PropositionSet::new(["p", "p"]).is_err());
        assert!(PropositionSet::new(Vec::<String>::new()).is_err());
    }

    #[test]
    fn periodicity_of_suffixes() {
        let w = lasso(&[1, 0], &[1, 1, 0]);
        let (u, v) = (w.prefix_len(), w.period_len());
        let horizon = 3 * (u + v);
        for i in u..u + v {
            for j in (u..4 * (u + v)).filter(|j| (j - u) % v == (i - u) % v) {
                for t in 0..horizon {
                    assert_eq!(w.symbol_at(i + t), w.symbol_at(j + t));
                }
            }
        }
    }
}
