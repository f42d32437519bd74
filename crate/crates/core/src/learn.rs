//! The learning loop: iterate (n, m) budgets, solve, decode, verify against
//! the exact evaluator, and return a minimal consistent formula with search
//! statistics.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::encode::{build_phi, build_phi_finite, decode_model, Mode, PhiInstance};
use crate::enumerate::{min_consistent, min_consistent_regex};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::semantics::{check_consistency, check_regex_consistency, Witness};
use crate::solver::{SolveOutcome, SolverBackend, VarisatBackend};
use crate::trace::{FiniteSample, LassoWord, PropositionSet, Sample};

#[derive(Clone)]
pub struct LearnerConfig {
    pub mode: Mode,
    /// search cutoff on the syntax-DAG size
    pub max_size: usize,
    /// per-solve and global budget
    pub timeout: Duration,
    /// optional cap on the period copies in the matching window; capped runs
    /// re-verify against the oracle and retry exactly on failure
    pub unroll_cap: Option<usize>,
    /// worker threads for the per-n budget sweep
    pub jobs: usize,
    pub backend: Arc<dyn SolverBackend>,
}

impl LearnerConfig {
    pub fn new(mode: Mode) -> LearnerConfig {
        LearnerConfig {
            mode,
            max_size: 8,
            timeout: Duration::from_secs(1800),
            unroll_cap: None,
            jobs: 1,
            backend: Arc::new(VarisatBackend),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Sat,
    Unsat,
    Timeout,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Sat => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationStat {
    pub n: usize,
    pub m: usize,
    pub vars: usize,
    pub clauses: usize,
    pub verdict: Verdict,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Found { formula: Formula, n: usize, m: usize },
    Exhausted { max_size: usize },
    Timeout,
}

#[derive(Debug, Clone)]
pub struct LearnerResult {
    pub outcome: Outcome,
    pub iterations: Vec<IterationStat>,
    pub total_seconds: f64,
    /// oracle verification verdict for a found formula
    pub verified: Option<bool>,
}

/// The data a learner run works on.
#[derive(Clone, Copy)]
pub enum SampleInput<'a> {
    Lasso(&'a Sample),
    Finite(&'a FiniteSample),
}

impl<'a> SampleInput<'a> {
    fn propositions(&self) -> &'a PropositionSet {
        match self {
            SampleInput::Lasso(s) => s.propositions(),
            SampleInput::Finite(s) => s.propositions(),
        }
    }
}

fn budgets(mode: Mode, n: usize) -> Vec<usize> {
    match mode {
        Mode::Psl => (0..n).collect(),
        Mode::Ltl => vec![0],
        Mode::Regex => vec![n],
    }
}

fn build_instance(
    input: &SampleInput,
    n: usize,
    m: usize,
    mode: Mode,
    unroll_cap: Option<usize>,
) -> Result<PhiInstance> {
    match (input, mode) {
        (SampleInput::Lasso(s), Mode::Psl | Mode::Ltl) => build_phi(s, n, m, mode, unroll_cap),
        (SampleInput::Finite(s), Mode::Regex) => build_phi_finite(s, n),
        (SampleInput::Lasso(_), Mode::Regex) => {
            Err(Error::Config("regex mode requires a finite-word sample".into()))
        }
        (SampleInput::Finite(_), _) => {
            Err(Error::Config("PSL/LTL modes require a lasso-word sample".into()))
        }
    }
}

struct BudgetOutcome {
    stat: IterationStat,
    model: Option<(PhiInstance, crate::solver::Model)>,
}

fn run_budget(
    input: &SampleInput,
    n: usize,
    m: usize,
    config: &LearnerConfig,
    deadline: Instant,
) -> Result<BudgetOutcome> {
    let start = Instant::now();
    let inst = build_instance(input, n, m, config.mode, config.unroll_cap)?;
    let vars = inst.cnf.num_vars as usize;
    let clauses = inst.cnf.clauses.len();
    let remaining = deadline.saturating_duration_since(Instant::now());
    if remaining.is_zero() {
        return Ok(BudgetOutcome {
            stat: IterationStat {
                n,
                m,
                vars,
                clauses,
                verdict: Verdict::Timeout,
                seconds: start.elapsed().as_secs_f64(),
            },
            model: None,
        });
    }
    let outcome = config.backend.solve(&inst.cnf, Some(remaining))?;
    let seconds = start.elapsed().as_secs_f64();
    let (verdict, model) = match outcome {
        SolveOutcome::Sat(model) => (Verdict::Sat, Some((inst, model))),
        SolveOutcome::Unsat => (Verdict::Unsat, None),
        SolveOutcome::Timeout => (Verdict::Timeout, None),
    };
    Ok(BudgetOutcome {
        stat: IterationStat { n, m, vars, clauses, verdict, seconds },
        model,
    })
}

/// Runs the incremental search: `n = 1, 2, ...`; for each `n` all admissible
/// budgets `m` in ascending order. The first satisfiable instance yields the
/// result, which is decoded, checked for full reachability, and verified
/// against the exact evaluator before being returned.
pub fn learn(input: SampleInput, config: &LearnerConfig) -> Result<LearnerResult> {
    let started = Instant::now();
    let deadline = started + config.timeout;
    if config.max_size == 0 {
        return Err(Error::Config("max_size must be at least 1".into()));
    }
    let mut iterations: Vec<IterationStat> = Vec::new();

    for n in 1..=config.max_size {
        let ms = budgets(config.mode, n);
        let mut outcomes: Vec<BudgetOutcome> = Vec::with_capacity(ms.len());

        if config.jobs <= 1 || ms.len() == 1 {
            for &m in &ms {
                let out = run_budget(&input, n, m, config, deadline)?;
                let stop = out.stat.verdict != Verdict::Unsat;
                outcomes.push(out);
                if stop {
                    // ascending m: the first SAT budget wins; a timeout makes
                    // any later SAT unusable since minimality would be open
                    break;
                }
            }
        } else {
            // sweep all budgets for this n concurrently; the accepted result
            // is still the smallest satisfiable m
            let results: Vec<Result<BudgetOutcome>> = std::thread::scope(|scope| {
                let handles: Vec<_> = ms
                    .iter()
                    .map(|&m| scope.spawn(move || run_budget(&input, n, m, config, deadline)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            });
            for r in results {
                outcomes.push(r?);
            }
            outcomes.sort_by_key(|o| o.stat.m);
            // drop everything past the first non-UNSAT verdict so stats match
            // sequential runs
            if let Some(first) =
                outcomes.iter().position(|o| o.stat.verdict != Verdict::Unsat)
            {
                outcomes.truncate(first + 1);
            }
        }

        let mut sat: Option<BudgetOutcome> = None;
        let mut timed_out = false;
        for out in outcomes {
            timed_out |= out.stat.verdict == Verdict::Timeout;
            let is_sat = out.stat.verdict == Verdict::Sat;
            iterations.push(out.stat.clone());
            if is_sat && !timed_out && sat.is_none() {
                sat = Some(out);
            }
        }

        if let Some(found) = sat {
            let (inst, model) = found.model.expect("SAT verdict carries a model");
            let m = found.stat.m;
            let formula =
                finish_found(&input, config, inst, model, n, m, deadline, &mut iterations)?;
            return Ok(LearnerResult {
                outcome: Outcome::Found { formula, n, m },
                iterations,
                total_seconds: started.elapsed().as_secs_f64(),
                verified: Some(true),
            });
        }
        if timed_out {
            return Ok(LearnerResult {
                outcome: Outcome::Timeout,
                iterations,
                total_seconds: started.elapsed().as_secs_f64(),
                verified: None,
            });
        }
    }

    Ok(LearnerResult {
        outcome: Outcome::Exhausted { max_size: config.max_size },
        iterations,
        total_seconds: started.elapsed().as_secs_f64(),
        verified: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish_found(
    input: &SampleInput,
    config: &LearnerConfig,
    inst: PhiInstance,
    model: crate::solver::Model,
    n: usize,
    m: usize,
    deadline: Instant,
    iterations: &mut Vec<IterationStat>,
) -> Result<Formula> {
    let props = input.propositions();
    let decoded = decode_model(&inst.table, &model, n, props, config.mode)?;
    let verified = verify_result(&decoded.formula, input)?.is_none();
    if verified {
        check_found_invariants(&decoded.formula, decoded.reachable, n)?;
        return Ok(decoded.formula);
    }
    // Only an under-unrolled window can produce a spurious model; retry this
    // budget with the exact bound.
    if config.unroll_cap.is_some() && config.mode != Mode::Regex {
        let exact = LearnerConfig { unroll_cap: None, ..config.clone() };
        let retry = run_budget(input, n, m, &exact, deadline)?;
        iterations.push(retry.stat.clone());
        match retry.stat.verdict {
            Verdict::Sat => {
                let (inst, model) = retry.model.expect("SAT verdict carries a model");
                let decoded = decode_model(&inst.table, &model, n, props, config.mode)?;
                if verify_result(&decoded.formula, input)?.is_none() {
                    check_found_invariants(&decoded.formula, decoded.reachable, n)?;
                    return Ok(decoded.formula);
                }
                Err(Error::Internal(
                    "formula from an exact-bound model failed oracle verification".into(),
                ))
            }
            Verdict::Unsat => Err(Error::Internal(
                "budget satisfiable only under a capped unrolling window; raise --unroll-cap"
                    .into(),
            )),
            Verdict::Timeout => Err(Error::Solver("exact-bound retry timed out".into())),
        }
    } else {
        Err(Error::Internal(
            "decoded formula failed oracle verification with the exact bound".into(),
        ))
    }
}

fn check_found_invariants(formula: &Formula, reachable: usize, n: usize) -> Result<()> {
    if reachable != n {
        return Err(Error::Internal(format!(
            "minimal model must use all {n} nodes, only {reachable} reachable"
        )));
    }
    if formula.size() != n {
        return Err(Error::Internal(format!(
            "decoded formula has size {} at minimal n = {n}",
            formula.size()
        )));
    }
    Ok(())
}

/// Oracle check of a result formula; `None` means consistent.
pub fn verify_result(formula: &Formula, input: &SampleInput) -> Result<Option<Witness>> {
    match input {
        SampleInput::Lasso(s) => check_consistency(formula, s),
        SampleInput::Finite(s) => check_regex_consistency(formula, s),
    }
}

/// Minimality evidence for a FOUND result: the UNSAT trail below the found
/// size, plus an optional brute-force cross-check.
#[derive(Debug, Clone)]
pub struct MinimalityReport {
    pub n_found: usize,
    pub unsat_trail: Vec<(usize, usize)>,
    /// size bound the brute-force enumeration covered, if run
    pub brute_force_bound: Option<usize>,
    /// false flags an encoder bug: enumeration found a smaller consistent formula
    pub brute_force_agrees: Option<bool>,
}

pub fn minimality_certificate(
    input: SampleInput,
    result: &LearnerResult,
    mode: Mode,
    cross_check: bool,
) -> Result<MinimalityReport> {
    let Outcome::Found { n, .. } = &result.outcome else {
        return Err(Error::Config("minimality certificate requires a FOUND result".into()));
    };
    let n_found = *n;
    let unsat_trail: Vec<(usize, usize)> = result
        .iterations
        .iter()
        .filter(|s| s.n < n_found && s.verdict == Verdict::Unsat)
        .map(|s| (s.n, s.m))
        .collect();
    let mut bound = None;
    let mut agrees = None;
    if cross_check && n_found > 1 {
        let limit = (n_found - 1).min(4);
        bound = Some(limit);
        let smaller = match input {
            SampleInput::Lasso(s) => min_consistent(s, mode, limit)?,
            SampleInput::Finite(s) => min_consistent_regex(s, limit)?,
        };
        agrees = Some(smaller.is_none());
    }
    Ok(MinimalityReport { n_found, unsat_trail, brute_force_bound: bound, brute_force_agrees: agrees })
}

/// The always-consistent construction: a disjunction over positive traces of
/// conjunctions of first-difference discriminators against each negative
/// trace. Witnesses termination of the search.
pub fn trivial_consistent_formula(sample: &Sample) -> Result<Formula> {
    let props = sample.propositions();
    let tt = {
        let p = Formula::prop(props.name(0));
        Formula::or(p.clone(), Formula::not(p))
    };
    if sample.positives().is_empty() {
        return Ok(Formula::not(tt));
    }
    if sample.negatives().is_empty() {
        return Ok(tt);
    }
    let mut per_positive: Vec<Formula> = Vec::new();
    for alpha in sample.positives() {
        let mut conj: Option<Formula> = None;
        for beta in sample.negatives() {
            let d = discriminator(alpha, beta, props)?;
            conj = Some(match conj {
                None => d,
                Some(c) => Formula::not(Formula::or(Formula::not(c), Formula::not(d))),
            });
        }
        per_positive.push(conj.expect("negatives nonempty"));
    }
    let mut out = per_positive[0].clone();
    for d in &per_positive[1..] {
        out = Formula::or(out, d.clone());
    }
    Ok(out)
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// `X^d χ` where `d` is the first position where the two words differ and χ
/// is a literal true on `alpha[d]` and false on `beta[d]`.
fn discriminator(alpha: &LassoWord, beta: &LassoWord, props: &PropositionSet) -> Result<Formula> {
    let horizon =
        alpha.prefix_len().max(beta.prefix_len()) + lcm(alpha.period_len(), beta.period_len());
    for d in 0..horizon {
        let (a, b) = (alpha.symbol_at(d), beta.symbol_at(d));
        if a != b {
            let bit = (0..props.len())
                .find(|&i| a.contains(i) != b.contains(i))
                .expect("differing symbols differ in some proposition");
            let mut f = if a.contains(bit) {
                Formula::prop(props.name(bit))
            } else {
                Formula::not(Formula::prop(props.name(bit)))
            };
            for _ in 0..d {
                f = Formula::next(f);
            }
            return Ok(f);
        }
    }
    Err(Error::InvalidTrace(format!(
        "traces {} and {} denote the same infinite word",
        alpha.display(props),
        beta.display(props)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::evaluate;
    use crate::trace::{FiniteWord, Symbol};

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
    fn trivial_formula_is_consistent() {
        let props = PropositionSet::new(["p", "q"]).unwrap();
        let sample = Sample::new(
            props,
            vec![lasso(&[0b01], &[0b11]), lasso(&[], &[0b01, 0b00])],
            vec![lasso(&[0b10], &[0b11]), lasso(&[], &[0b00])],
        )
        .unwrap();
        let f = trivial_consistent_formula(&sample).unwrap();
        assert!(crate::semantics::is_consistent(&f, &sample).unwrap());
    }

    #[test]
    fn discriminator_checks_both_words() {
        let props = PropositionSet::new(["p"]).unwrap();
        let alpha = lasso(&[1, 1], &[0]);
        let beta = lasso(&[1], &[0]);
        let d = discriminator(&alpha, &beta, &props).unwrap().desugar(&props);
        assert!(evaluate(&d, &alpha, &props).unwrap());
        assert!(!evaluate(&d, &beta, &props).unwrap());
    }

    #[test]
    fn identical_words_have_no_discriminator() {
        let props = PropositionSet::new(["p"]).unwrap();
        // different literal representations of {p}^ω
        let alpha = lasso(&[1], &[1]);
        let beta = lasso(&[], &[1, 1]);
        assert!(discriminator(&alpha, &beta, &props).is_err());
    }
}
