//! Propositional constraints and their clausal form.
//!
//! Constraints are built as [`BExpr`] trees over integer literals, then
//! lowered to CNF with one fresh definition variable per non-literal subterm.
//! The definitions are full biconditionals, so projecting any CNF model onto
//! the original variables satisfies the source constraints.

use crate::error::{Error, Result};

/// A DIMACS-style literal: positive or negative nonzero variable id.
pub type Lit = i32;

/// A propositional constraint over already-allocated variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BExpr {
    Const(bool),
    Lit(Lit),
    Not(Box<BExpr>),
    And(Vec<BExpr>),
    Or(Vec<BExpr>),
}

impl BExpr {
    pub fn lit(l: Lit) -> BExpr {
        debug_assert!(l != 0);
        BExpr::Lit(l)
    }

    pub fn var(v: u32) -> BExpr {
        BExpr::Lit(v as Lit)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: BExpr) -> BExpr {
        match e {
            BExpr::Const(b) => BExpr::Const(!b),
            BExpr::Lit(l) => BExpr::Lit(-l),
            BExpr::Not(inner) => *inner,
            other => BExpr::Not(Box::new(other)),
        }
    }

    pub fn and(parts: Vec<BExpr>) -> BExpr {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                BExpr::Const(true) => {}
                BExpr::Const(false) => return BExpr::Const(false),
                BExpr::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => BExpr::Const(true),
            1 => flat.pop().unwrap(),
            _ => BExpr::And(flat),
        }
    }

    pub fn or(parts: Vec<BExpr>) -> BExpr {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                BExpr::Const(false) => {}
                BExpr::Const(true) => return BExpr::Const(true),
                BExpr::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => BExpr::Const(false),
            1 => flat.pop().unwrap(),
            _ => BExpr::Or(flat),
        }
    }

    pub fn implies(lhs: BExpr, rhs: BExpr) -> BExpr {
        BExpr::or(vec![BExpr::not(lhs), rhs])
    }

    pub fn iff(lhs: BExpr, rhs: BExpr) -> BExpr {
        BExpr::and(vec![
            BExpr::implies(lhs.clone(), rhs.clone()),
            BExpr::implies(rhs, lhs),
        ])
    }

    /// Truth value under a total assignment (index = var id).
    pub fn eval(&self, assignment: &dyn Fn(u32) -> bool) -> bool {
        match self {
            BExpr::Const(b) => *b,
            BExpr::Lit(l) => {
                let v = assignment(l.unsigned_abs());
                if *l > 0 {
                    v
                } else {
                    !v
                }
            }
            BExpr::Not(e) => !e.eval(assignment),
            BExpr::And(es) => es.iter().all(|e| e.eval(assignment)),
            BExpr::Or(es) => es.iter().any(|e| e.eval(assignment)),
        }
    }
}

/// A CNF instance: clause list over variables `1..=num_vars`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new(num_vars: u32) -> Cnf {
        Cnf { num_vars, clauses: Vec::new() }
    }

    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        debug_assert!(clause.iter().all(|&l| l != 0 && l.unsigned_abs() <= self.num_vars));
        self.clauses.push(clause);
    }

    fn fresh(&mut self) -> u32 {
        self.num_vars += 1;
        self.num_vars
    }

    /// Asserts a constraint, introducing definition variables for non-literal
    /// subterms. Top-level conjunctions split into separate assertions, a
    /// disjunction whose only non-literal part is a conjunction distributes
    /// over it, and disjunctions of literals become single clauses.
    pub fn assert(&mut self, e: &BExpr) {
        match e {
            BExpr::Const(true) => {}
            BExpr::Const(false) => self.clauses.push(Vec::new()),
            BExpr::Lit(l) => self.add_clause(vec![*l]),
            BExpr::Not(inner) => {
                let l = self.define(inner);
                self.add_clause(vec![-l]);
            }
            BExpr::And(parts) => {
                for p in parts {
                    self.assert(p);
                }
            }
            BExpr::Or(parts) => {
                let complex = parts.iter().filter(|p| !matches!(p, BExpr::Lit(_))).count();
                if complex == 1 {
                    if let Some(pos) = parts.iter().position(|p| matches!(p, BExpr::And(_))) {
                        let BExpr::And(subs) = &parts[pos] else { unreachable!() };
                        for sub in subs {
                            let mut alt: Vec<BExpr> = parts[..pos].to_vec();
                            alt.push(sub.clone());
                            alt.extend(parts[pos + 1..].iter().cloned());
                            self.assert(&BExpr::or(alt));
                        }
                        return;
                    }
                }
                let mut clause = Vec::with_capacity(parts.len());
                for p in parts {
                    clause.push(self.define(p));
                }
                self.add_clause(clause);
            }
        }
    }

    /// Returns a literal defined to be equivalent to the expression.
    pub fn define_lit(&mut self, e: &BExpr) -> Lit {
        self.define(e)
    }

    /// Definition literal for a conjunction of literals (allocation-free fast
    /// path for the inner encoding loops).
    pub fn define_and_lits(&mut self, lits: &[Lit]) -> Lit {
        if lits.len() == 1 {
            return lits[0];
        }
        let d = self.fresh() as Lit;
        let mut back = Vec::with_capacity(lits.len() + 1);
        back.push(d);
        for &l in lits {
            self.add_clause(vec![-d, l]);
            back.push(-l);
        }
        self.add_clause(back);
        d
    }

    /// Definition literal for a disjunction of literals.
    pub fn define_or_lits(&mut self, lits: &[Lit]) -> Lit {
        if lits.len() == 1 {
            return lits[0];
        }
        let d = self.fresh() as Lit;
        let mut fwd = Vec::with_capacity(lits.len() + 1);
        fwd.push(-d);
        for &l in lits {
            self.add_clause(vec![d, -l]);
            fwd.push(l);
        }
        self.add_clause(fwd);
        d
    }

    /// Asserts `guard-literals → (a ↔ b₁ ∨ ... ∨ bₙ)` in clause form.
    pub fn guarded_iff_or(&mut self, guard_neg: &[Lit], a: Lit, bs: &[Lit]) {
        let mut fwd = Vec::with_capacity(guard_neg.len() + bs.len() + 1);
        fwd.extend_from_slice(guard_neg);
        fwd.push(-a);
        fwd.extend_from_slice(bs);
        self.add_clause(fwd);
        for &b in bs {
            let mut back = Vec::with_capacity(guard_neg.len() + 2);
            back.extend_from_slice(guard_neg);
            back.push(a);
            back.push(-b);
            self.add_clause(back);
        }
    }

    /// Asserts `guard-literals → (a ↔ b)` as two clauses.
    pub fn guarded_iff(&mut self, guard_neg: &[Lit], a: Lit, b: Lit) {
        let mut c1 = Vec::with_capacity(guard_neg.len() + 2);
        c1.extend_from_slice(guard_neg);
        c1.push(-a);
        c1.push(b);
        self.add_clause(c1);
        let mut c2 = Vec::with_capacity(guard_neg.len() + 2);
        c2.extend_from_slice(guard_neg);
        c2.push(a);
        c2.push(-b);
        self.add_clause(c2);
    }

    /// Returns a literal equivalent to the expression, emitting definition
    /// clauses as needed.
    fn define(&mut self, e: &BExpr) -> Lit {
        match e {
            BExpr::Const(b) => {
                // a fresh variable pinned to the constant
                let v = self.fresh() as Lit;
                self.add_clause(vec![if *b { v } else { -v }]);
                v
            }
            BExpr::Lit(l) => *l,
            BExpr::Not(inner) => -self.define(inner),
            BExpr::And(parts) => {
                let lits: Vec<Lit> = parts.iter().map(|p| self.define(p)).collect();
                let d = self.fresh() as Lit;
                let mut back = Vec::with_capacity(lits.len() + 1);
                back.push(d);
                for &l in &lits {
                    self.add_clause(vec![-d, l]);
                    back.push(-l);
                }
                self.add_clause(back);
                d
            }
            BExpr::Or(parts) => {
                let lits: Vec<Lit> = parts.iter().map(|p| self.define(p)).collect();
                let d = self.fresh() as Lit;
                let mut fwd = Vec::with_capacity(lits.len() + 1);
                fwd.push(-d);
                for &l in &lits {
                    self.add_clause(vec![d, -l]);
                    fwd.push(l);
                }
                self.add_clause(fwd);
                d
            }
        }
    }

    /// Standard DIMACS CNF text: `p cnf <vars> <clauses>` then one
    /// zero-terminated clause per line.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("p cnf {} {}\n", self.num_vars, self.clauses.len()));
        for clause in &self.clauses {
            for lit in clause {
                out.push_str(&lit.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }

    /// Parses DIMACS CNF; comment lines are skipped.
    pub fn from_dimacs(text: &str) -> Result<Cnf> {
        let mut num_vars: Option<u32> = None;
        let mut declared_clauses = 0usize;
        let mut clauses: Vec<Vec<Lit>> = Vec::new();
        let mut current: Vec<Lit> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("p cnf") {
                let mut parts = rest.split_whitespace();
                let vars = parts.next().and_then(|s| s.parse().ok());
                let cls = parts.next().and_then(|s| s.parse().ok());
                match (vars, cls) {
                    (Some(v), Some(c)) => {
                        num_vars = Some(v);
                        declared_clauses = c;
                    }
                    _ => {
                        return Err(Error::Syntax {
                            line: ln + 1,
                            col: 1,
                            msg: "malformed DIMACS header".into(),
                        });
                    }
                }
                continue;
            }
            for tok in line.split_whitespace() {
                let lit: Lit = tok.parse().map_err(|_| Error::Syntax {
                    line: ln + 1,
                    col: 1,
                    msg: format!("bad literal `{tok}`"),
                })?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(lit);
                }
            }
        }
        let num_vars = num_vars.ok_or(Error::Syntax {
            line: 1,
            col: 1,
            msg: "missing DIMACS header".into(),
        })?;
        if !current.is_empty() {
            return Err(Error::Syntax {
                line: 1,
                col: 1,
                msg: "unterminated clause at end of input".into(),
            });
        }
        if clauses.len() != declared_clauses {
            return Err(Error::Syntax {
                line: 1,
                col: 1,
                msg: format!(
                    "clause count mismatch: header says {declared_clauses}, found {}",
                    clauses.len()
                ),
            });
        }
        Ok(Cnf { num_vars, clauses })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_trivial() {
        assert_eq!(Cnf::new(3).to_dimacs(), "p cnf 3 0\n");
        let mut c = Cnf::new(2);
        c.add_clause(vec![1, -2]);
        assert_eq!(c.to_dimacs(), "p cnf 2 1\n1 -2 0\n");
    }

    #[test]
    fn dimacs_round_trip() {
        let mut c = Cnf::new(4);
        c.add_clause(vec![1, -2, 3]);
        c.add_clause(vec![-4]);
        c.add_clause(vec![2, 4]);
        assert_eq!(Cnf::from_dimacs(&c.to_dimacs()).unwrap(), c);
    }

    #[test]
    fn smart_constructors_simplify() {
        assert_eq!(BExpr::and(vec![BExpr::Const(true), BExpr::lit(1)]), BExpr::Lit(1));
        assert_eq!(BExpr::or(vec![BExpr::Const(true), BExpr::lit(1)]), BExpr::Const(true));
        assert_eq!(BExpr::not(BExpr::lit(-3)), BExpr::Lit(3));
    }

    #[test]
    fn tseitin_preserves_models_on_projection() {
        // (x1 <-> (x2 or not x3)) and (x1 -> x2)
        let e = BExpr::and(vec![
            BExpr::iff(BExpr::lit(1), BExpr::or(vec![BExpr::lit(2), BExpr::not(BExpr::lit(3))])),
            BExpr::implies(BExpr::lit(1), BExpr::lit(2)),
        ]);
        let mut cnf = Cnf::new(3);
        cnf.assert(&e);
        // every full assignment over the CNF vars that satisfies all clauses
        // must satisfy e on vars 1..=3
        let n = cnf.num_vars;
        for bits in 0u32..1 << n {
            let assign = |v: u32| bits >> (v - 1) & 1 == 1;
            let sat = cnf
                .clauses
                .iter()
                .all(|cl| cl.iter().any(|&l| if l > 0 { assign(l as u32) } else { !assign(-l as u32) }));
            if sat {
                assert!(e.eval(&assign));
            }
        }
    }

    #[test]
    fn tseitin_equisatisfiable_both_ways() {
        // satisfiable source: models exist for the CNF too
        let e = BExpr::or(vec![
            BExpr::and(vec![BExpr::lit(1), BExpr::lit(2)]),
            BExpr::and(vec![BExpr::lit(-1), BExpr::lit(-2)]),
        ]);
        let mut cnf = Cnf::new(2);
        cnf.assert(&e);
        let n = cnf.num_vars;
        let mut any = false;
        for bits in 0u32..1 << n {
            let assign = |v: u32| bits >> (v - 1) & 1 == 1;
            if cnf
                .clauses
                .iter()
                .all(|cl| cl.iter().any(|&l| if l > 0 { assign(l as u32) } else { !assign(-l as u32) }))
            {
                any = true;
            }
        }
        assert!(any);
    }
}
