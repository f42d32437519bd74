//! Nondeterministic finite acceptors compiled from regular expressions.
//!
//! Edges are labeled with atomic expressions and tested against symbols via
//! their denotation. Shared subterms are instantiated once per occurrence
//! (an acceptor cannot share fragments across contexts), so the state count
//! is bounded by twice the occurrence count of the expression plus two.
//!
//! The subset-construction runner below decides triggers obligations on
//! lasso words exactly: it walks `u`, then cycles through `v` until the
//! (state set, period index) pair repeats, which the pigeonhole argument
//! guarantees happens after at most 2^states * |v| steps.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::formula::{Formula, FormulaKind, TypeCtx};
use crate::semantics::atom_denotation;
use crate::trace::{canonical_position, LassoWord, PropositionSet, Symbol};

const MAX_STATES: usize = 64; // state sets are u64 masks

/// An NFA with epsilon edges and atomic-expression labeled edges; one initial
/// and one accepting state (Thompson construction).
pub struct RegexAutomaton {
    num_states: usize,
    initial: usize,
    accepting: usize,
    eps_closure: Vec<u64>,
    labeled: Vec<Vec<(Formula, usize)>>,
}

struct Builder {
    eps: Vec<Vec<usize>>,
    labeled: Vec<Vec<(Formula, usize)>>,
}

impl Builder {
    fn fresh(&mut self) -> Result<usize> {
        if self.eps.len() >= MAX_STATES {
            return Err(Error::Internal(format!(
                "regex automaton exceeds {MAX_STATES} states"
            )));
        }
        self.eps.push(Vec::new());
        self.labeled.push(Vec::new());
        Ok(self.eps.len() - 1)
    }

    fn build(&mut self, f: &Formula) -> Result<(usize, usize)> {
        use FormulaKind::*;
        match f.kind() {
            Eps => {
                let s = self.fresh()?;
                let e = self.fresh()?;
                self.eps[s].push(e);
                Ok((s, e))
            }
            Prop(_) | Not(_) | Or(..) | And(..) | Implies(..) | Iff(..) | True | False => {
                f.typecheck(TypeCtx::Atomic)?;
                let s = self.fresh()?;
                let e = self.fresh()?;
                self.labeled[s].push((f.clone(), e));
                Ok((s, e))
            }
            Choice(a, b) => {
                let (sa, ea) = self.build(a)?;
                let (sb, eb) = self.build(b)?;
                let s = self.fresh()?;
                let e = self.fresh()?;
                self.eps[s].push(sa);
                self.eps[s].push(sb);
                self.eps[ea].push(e);
                self.eps[eb].push(e);
                Ok((s, e))
            }
            Concat(a, b) => {
                let (sa, ea) = self.build(a)?;
                let (sb, eb) = self.build(b)?;
                self.eps[ea].push(sb);
                Ok((sa, eb))
            }
            Star(a) => {
                let (sa, ea) = self.build(a)?;
                let s = self.fresh()?;
                let e = self.fresh()?;
                self.eps[s].push(e);
                self.eps[s].push(sa);
                self.eps[ea].push(sa);
                self.eps[ea].push(e);
                Ok((s, e))
            }
            _ => Err(Error::Type(format!("not a regular expression: {f}"))),
        }
    }
}

impl RegexAutomaton {
    /// Compiles a regular expression. Atomic subexpressions become single
    /// labeled edges.
    pub fn compile(regex: &Formula) -> Result<RegexAutomaton> {
        let mut b = Builder { eps: Vec::new(), labeled: Vec::new() };
        let (initial, accepting) = b.build(regex)?;
        let n = b.eps.len();
        // per-state epsilon closure by fixpoint
        let mut closure: Vec<u64> = (0..n).map(|s| 1u64 << s).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..n {
                let mut acc = closure[s];
                for &t in &b.eps[s] {
                    acc |= closure[t];
                }
                if acc != closure[s] {
                    closure[s] = acc;
                    changed = true;
                }
            }
        }
        Ok(RegexAutomaton {
            num_states: n,
            initial,
            accepting,
            eps_closure: closure,
            labeled: b.labeled,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    fn closure_of(&self, set: u64) -> u64 {
        let mut acc = 0u64;
        let mut rest = set;
        while rest != 0 {
            let s = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            acc |= self.eps_closure[s];
        }
        acc
    }

    fn step(&self, set: u64, sym: Symbol, props: &PropositionSet) -> Result<u64> {
        let mut moved = 0u64;
        let mut rest = set;
        while rest != 0 {
            let s = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            for (xi, to) in &self.labeled[s] {
                if atom_denotation(xi, sym, props)? {
                    moved |= 1 << *to;
                }
            }
        }
        Ok(self.closure_of(moved))
    }

    fn start_set(&self) -> u64 {
        self.eps_closure[self.initial]
    }

    fn is_accepting(&self, set: u64) -> bool {
        set >> self.accepting & 1 == 1
    }

    /// Whether the automaton accepts the whole finite word.
    pub fn accepts(&self, word: &[Symbol], props: &PropositionSet) -> Result<bool> {
        let mut cur = self.start_set();
        for &a in word {
            cur = self.step(cur, a, props)?;
            if cur == 0 {
                return Ok(false);
            }
        }
        Ok(self.is_accepting(cur))
    }

    /// All canonical positions `M(j-1)` over prefixes `w[start, j)`, `j > start`,
    /// that match the expression on the infinite word — the triggers
    /// obligations for a start position within `uv`.
    pub fn obligations(
        &self,
        w: &LassoWord,
        start: usize,
        props: &PropositionSet,
    ) -> Result<Vec<usize>> {
        let (u_len, v_len) = (w.prefix_len(), w.period_len());
        debug_assert!(start < u_len + v_len);
        let mut obligations: Vec<usize> = Vec::new();
        let mut seen: HashSet<(u64, usize)> = HashSet::new();
        let mut cur = self.start_set();
        let mut j = start;
        loop {
            if j >= u_len && !seen.insert((cur, (j - u_len) % v_len)) {
                break; // configuration repeats; the run is periodic from here
            }
            if cur == 0 {
                break;
            }
            cur = self.step(cur, w.symbol_at(j), props)?;
            j += 1;
            if self.is_accepting(cur) {
                let pos = canonical_position(u_len, v_len, j - 1);
                if !obligations.contains(&pos) {
                    obligations.push(pos);
                }
            }
        }
        Ok(obligations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;
    use crate::trace::FiniteWord;

    fn props() -> PropositionSet {
        PropositionSet::new(["p", "q"]).unwrap()
    }

    fn word(bits: &[u64]) -> FiniteWord {
        bits.iter().map(|&b| Symbol::from_bits(b)).collect()
    }

    #[test]
    fn accepts_concat() {
        let aut = RegexAutomaton::compile(&parse_formula("p . q").unwrap()).unwrap();
        assert!(aut.accepts(word(&[0b01, 0b10]).symbols(), &props()).unwrap());
        assert!(!aut.accepts(word(&[0b10, 0b01]).symbols(), &props()).unwrap());
    }

    #[test]
    fn accepts_star_even_lengths_only() {
        let tt2 = parse_formula("(true . true)*").unwrap().desugar(&props());
        let aut = RegexAutomaton::compile(&tt2).unwrap();
        for len in 0..6 {
            let w: Vec<Symbol> = vec![Symbol::EMPTY; len];
            assert_eq!(aut.accepts(&w, &props()).unwrap(), len % 2 == 0, "len {len}");
        }
    }

    #[test]
    fn state_count_bound() {
        let f = parse_formula("(p . q)* + !p").unwrap();
        let aut = RegexAutomaton::compile(&f).unwrap();
        assert!(aut.num_states() <= 2 * f.tree_size() + 2);
    }

    #[test]
    fn obligations_terminate_and_wrap() {
        // (tt . tt)* on u = ∅{p}, v = ∅: matches at every even prefix length
        let tt2 = parse_formula("(true . true)*").unwrap().desugar(&props());
        let aut = RegexAutomaton::compile(&tt2).unwrap();
        let w = LassoWord::new(word(&[0b00, 0b01]), word(&[0b00])).unwrap();
        let mut obl = aut.obligations(&w, 0, &props()).unwrap();
        obl.sort();
        // j = 2 gives position 1; j = 4 gives M(3) = 2; all later matches repeat
        assert_eq!(obl, vec![1, 2]);
    }
}
