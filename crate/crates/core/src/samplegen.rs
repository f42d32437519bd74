//! Benchmark-style sample generation: draw random lasso words and partition
//! them by exact evaluation against a seed formula.

use crate::error::{Error, Result};
use crate::formula::{Formula, TypeCtx};
use crate::semantics::evaluate;
use crate::trace::{FiniteWord, LassoWord, PropositionSet, Sample, Symbol};

/// Deterministic 64-bit generator (splitmix64); fixed seeds stay byte-stable
/// across dependency bumps.
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BalancePolicy {
    #[default]
    None,
    /// truncate the larger side to the smaller one, preserving order
    Truncate,
}

/// Generation parameters. Defaults: up to 500 draws with `|u| + |v| ≤ 15`.
#[derive(Clone)]
pub struct GenSpec {
    pub formula: Formula,
    pub props: PropositionSet,
    /// number of draws before deduplication
    pub budget: usize,
    /// bound on |u| + |v|
    pub max_len: usize,
    pub seed: u64,
    pub balance: BalancePolicy,
}

impl GenSpec {
    pub fn new(formula: Formula, props: PropositionSet) -> GenSpec {
        GenSpec { formula, props, budget: 500, max_len: 15, seed: 0, balance: BalancePolicy::None }
    }
}

/// Draws words uniformly over the (|u|, |v|) splits with `|u| + |v| ≤ L` and
/// symbols uniform over `2^P`, deduplicates, sorts by (length, lexicographic),
/// and partitions by satisfaction of the seed formula.
pub fn generate(spec: &GenSpec) -> Result<Sample> {
    if spec.max_len < 1 {
        return Err(Error::Config("max_len must be at least 1".into()));
    }
    if spec.budget < 2 {
        return Err(Error::Config("word budget must be at least 2".into()));
    }
    let core = spec.formula.desugar(&spec.props);
    core.typecheck(TypeCtx::Psl)?;
    for p in core.propositions() {
        if spec.props.index_of(&p).is_none() {
            return Err(Error::UnknownProposition(p));
        }
    }

    // all admissible (|u|, |v|) splits
    let mut splits: Vec<(usize, usize)> = Vec::new();
    for total in 1..=spec.max_len {
        for v_len in 1..=total {
            splits.push((total - v_len, v_len));
        }
    }

    let mut rng = SplitMix64::new(spec.seed);
    let prop_count = spec.props.len();
    let mut words: Vec<LassoWord> = Vec::with_capacity(spec.budget);
    for _ in 0..spec.budget {
        let (u_len, v_len) = splits[rng.below(splits.len() as u64) as usize];
        let mut draw_word = |len: usize| -> FiniteWord {
            (0..len)
                .map(|_| {
                    let mut s = Symbol::EMPTY;
                    for b in 0..prop_count {
                        if rng.next_u64() & 1 == 1 {
                            s = s.with(b);
                        }
                    }
                    s
                })
                .collect()
        };
        let prefix = draw_word(u_len);
        let period = draw_word(v_len);
        words.push(LassoWord::new(prefix, period).expect("period nonempty by construction"));
    }

    words.sort_by(|a, b| (a.uv_len(), a).cmp(&(b.uv_len(), b)));
    words.dedup();

    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for w in words {
        if evaluate(&core, &w, &spec.props)? {
            positives.push(w);
        } else {
            negatives.push(w);
        }
    }
    if positives.is_empty() {
        return Err(Error::DegenerateSample("positive"));
    }
    if negatives.is_empty() {
        return Err(Error::DegenerateSample("negative"));
    }
    if spec.balance == BalancePolicy::Truncate {
        let keep = positives.len().min(negatives.len());
        positives.truncate(keep);
        negatives.truncate(keep);
    }
    Sample::new(spec.props.clone(), positives, negatives)
}

/// The two-word family `S_n` over `P = {p}`: positive `{p}^{2n} ∅ {p}^ω`,
/// negative `{p}^{2n+1} ∅ {p}^ω` as displayed; `swap` exchanges the sides
/// (the orientation on which `(p∘p)* |-> Xp` is consistent).
pub fn succinctness_family(n: usize, swap: bool) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Config("family index must be at least 1".into()));
    }
    let props = PropositionSet::new(["p"])?;
    let p = Symbol::EMPTY.with(0);
    let word = |reps: usize| -> LassoWord {
        let mut prefix: Vec<Symbol> = vec![p; reps];
        prefix.push(Symbol::EMPTY);
        LassoWord::new(FiniteWord::new(prefix), FiniteWord::new(vec![p]))
            .expect("period nonempty")
    };
    let shorter = word(2 * n);
    let longer = word(2 * n + 1);
    let (pos, neg) = if swap { (longer, shorter) } else { (shorter, longer) };
    Sample::new(props, vec![pos], vec![neg])
}
