//! Exhaustive enumeration of well-typed formulas up to a size bound, used as
//! the brute-force minimality oracle. Enumeration and the exact evaluator are
//! independent of the SAT pipeline.

use std::collections::HashSet;

use crate::encode::Mode;
use crate::error::Result;
use crate::formula::Formula;
use crate::semantics::{check_regex_consistency, is_consistent, match_full};
use crate::trace::{FiniteSample, PropositionSet, Sample};

#[derive(Clone)]
struct Typed {
    f: Formula,
    size: usize,
    psl: bool,
    regex: bool,
    atomic: bool,
}

/// All well-typed core formulas of size at most `max_size`, deduplicated
/// structurally, sorted by (size, rendering). `Mode::Psl` yields PSL-typed
/// formulas, `Mode::Ltl` the LTL-only subset, `Mode::Regex` regex-typed
/// expressions.
pub fn enumerate_formulas(props: &PropositionSet, max_size: usize, mode: Mode) -> Vec<Formula> {
    let regex_ops = mode != Mode::Ltl;
    let mut pool: Vec<Typed> = Vec::new();
    let mut seen: HashSet<Formula> = HashSet::new();

    let push = |pool: &mut Vec<Typed>, seen: &mut HashSet<Formula>, t: Typed| {
        if t.size <= max_size && (t.psl || t.regex) && seen.insert(t.f.clone()) {
            pool.push(t);
        }
    };

    for p in props.names() {
        push(
            &mut pool,
            &mut seen,
            Typed { f: Formula::prop(p), size: 1, psl: true, regex: true, atomic: true },
        );
    }
    if regex_ops {
        push(
            &mut pool,
            &mut seen,
            Typed { f: Formula::eps(), size: 1, psl: false, regex: true, atomic: false },
        );
    }

    loop {
        let mut fresh: Vec<Typed> = Vec::new();
        let snapshot = pool.clone();
        let parts: Vec<&Typed> =
            snapshot.iter().filter(|t| t.size < max_size).collect();

        for a in &parts {
            // unary
            if a.psl || a.atomic {
                let f = Formula::not(a.f.clone());
                let size = f.size();
                fresh.push(Typed { f, size, psl: a.psl, regex: a.atomic, atomic: a.atomic });
            }
            if a.psl {
                let f = Formula::next(a.f.clone());
                let size = f.size();
                fresh.push(Typed { f, size, psl: true, regex: false, atomic: false });
            }
            if regex_ops && a.regex {
                let f = Formula::star(a.f.clone());
                let size = f.size();
                fresh.push(Typed { f, size, psl: false, regex: true, atomic: false });
            }
            // binary
            for b in &parts {
                if a.psl && b.psl || a.atomic && b.atomic {
                    let f = Formula::or(a.f.clone(), b.f.clone());
                    let size = f.size();
                    let both_atomic = a.atomic && b.atomic;
                    fresh.push(Typed {
                        f,
                        size,
                        psl: a.psl && b.psl,
                        regex: both_atomic,
                        atomic: both_atomic,
                    });
                }
                if a.psl && b.psl {
                    let f = Formula::until(a.f.clone(), b.f.clone());
                    let size = f.size();
                    fresh.push(Typed { f, size, psl: true, regex: false, atomic: false });
                }
                if regex_ops && a.regex && b.regex {
                    for f in [
                        Formula::choice(a.f.clone(), b.f.clone()),
                        Formula::concat(a.f.clone(), b.f.clone()),
                    ] {
                        let size = f.size();
                        fresh.push(Typed { f, size, psl: false, regex: true, atomic: false });
                    }
                }
                if regex_ops && a.regex && b.psl {
                    let f = Formula::triggers(a.f.clone(), b.f.clone());
                    let size = f.size();
                    fresh.push(Typed { f, size, psl: true, regex: false, atomic: false });
                }
            }
        }

        let before = pool.len();
        for t in fresh {
            push(&mut pool, &mut seen, t);
        }
        if pool.len() == before {
            break;
        }
    }

    let mut out: Vec<(usize, String, Formula)> = pool
        .into_iter()
        .filter(|t| match mode {
            Mode::Psl => t.psl,
            Mode::Ltl => t.psl,
            Mode::Regex => t.regex,
        })
        .map(|t| (t.size, t.f.to_string(), t.f))
        .collect();
    out.sort_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1)));
    out.into_iter().map(|(_, _, f)| f).collect()
}

/// Smallest consistent formula by exhaustive search, up to `max_size`.
pub fn min_consistent(
    sample: &Sample,
    mode: Mode,
    max_size: usize,
) -> Result<Option<(usize, Formula)>> {
    for f in enumerate_formulas(sample.propositions(), max_size, mode) {
        if is_consistent(&f, sample)? {
            return Ok(Some((f.size(), f)));
        }
    }
    Ok(None)
}

/// Smallest consistent regular expression by exhaustive search.
pub fn min_consistent_regex(
    sample: &FiniteSample,
    max_size: usize,
) -> Result<Option<(usize, Formula)>> {
    for f in enumerate_formulas(sample.propositions(), max_size, Mode::Regex) {
        if check_regex_consistency(&f, sample)?.is_none() {
            return Ok(Some((f.size(), f)));
        }
    }
    Ok(None)
}

/// Non-consuming helper: does any enumerated regex of size ≤ bound match all
/// positives and no negatives?
pub fn exists_consistent_regex(sample: &FiniteSample, max_size: usize) -> Result<bool> {
    let props = sample.propositions();
    'outer: for f in enumerate_formulas(props, max_size, Mode::Regex) {
        for (w, positive) in sample.words() {
            if match_full(&f, w, props)? != positive {
                continue 'outer;
            }
        }
        return Ok(true);
    }
    Ok(false)
}
