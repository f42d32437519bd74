//! SAT backend interface and the bundled varisat implementation.

use std::sync::mpsc;
use std::time::Duration;

use varisat::{ExtendFormula, Lit as VLit, Solver};

use crate::cnf::{Cnf, Lit};
use crate::error::{Error, Result};

/// A total assignment to the instance variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn from_values(values: Vec<bool>) -> Model {
        Model { values }
    }

    pub fn value(&self, var: u32) -> bool {
        self.values.get(var as usize - 1).copied().unwrap_or(false)
    }

    pub fn value_lit(&self, lit: Lit) -> bool {
        let v = self.value(lit.unsigned_abs());
        if lit > 0 {
            v
        } else {
            !v
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(Model),
    Unsat,
    Timeout,
}

/// A propositional satisfiability backend. Implementations must assign every
/// variable of the instance in returned models.
pub trait SolverBackend: Send + Sync {
    fn solve(&self, cnf: &Cnf, timeout: Option<Duration>) -> Result<SolveOutcome> {
        self.solve_with_assumptions(cnf, &[], timeout)
    }

    fn solve_with_assumptions(
        &self,
        cnf: &Cnf,
        assumptions: &[Lit],
        timeout: Option<Duration>,
    ) -> Result<SolveOutcome>;

    /// An incremental session over a fixed clause set, solvable repeatedly
    /// under different assumptions. Backends without incremental support can
    /// return [`restart_session`].
    fn session<'a>(&'a self, cnf: &'a Cnf) -> Result<Box<dyn SolverSession + 'a>>;
}

/// One loaded instance; assumptions vary between solves.
pub trait SolverSession {
    fn solve_with_assumptions(&mut self, assumptions: &[Lit]) -> Result<SolveOutcome>;
}

/// Fallback session that reloads the instance on every solve.
pub fn restart_session<'a>(
    backend: &'a dyn SolverBackend,
    cnf: &'a Cnf,
) -> Box<dyn SolverSession + 'a> {
    Box::new(RestartSession { backend, cnf })
}

struct RestartSession<'a> {
    backend: &'a dyn SolverBackend,
    cnf: &'a Cnf,
}

impl SolverSession for RestartSession<'_> {
    fn solve_with_assumptions(&mut self, assumptions: &[Lit]) -> Result<SolveOutcome> {
        self.backend.solve_with_assumptions(self.cnf, assumptions, None)
    }
}

/// The bundled varisat backend. Solves run on a worker thread so a timeout
/// can abandon them; varisat has no interrupt hook.
#[derive(Debug, Default, Clone, Copy)]
pub struct VarisatBackend;

fn load_varisat(clauses: &[Vec<Lit>]) -> Solver<'static> {
    let mut solver = Solver::new();
    let mut buf: Vec<VLit> = Vec::new();
    for clause in clauses {
        buf.clear();
        buf.extend(clause.iter().map(|&l| VLit::from_dimacs(l as isize)));
        solver.add_clause(&buf);
    }
    solver
}

fn solve_varisat(
    solver: &mut Solver<'_>,
    num_vars: u32,
    assumptions: &[Lit],
) -> Result<SolveOutcome> {
    let lits: Vec<VLit> = assumptions.iter().map(|&l| VLit::from_dimacs(l as isize)).collect();
    solver.assume(&lits);
    match solver.solve() {
        Ok(true) => {
            let mut values = vec![false; num_vars as usize];
            for lit in solver.model().unwrap_or_default() {
                let v = lit.var().to_dimacs() as usize;
                if v >= 1 && v <= num_vars as usize {
                    values[v - 1] = lit.is_positive();
                }
            }
            Ok(SolveOutcome::Sat(Model { values }))
        }
        Ok(false) => Ok(SolveOutcome::Unsat),
        Err(e) => Err(Error::Solver(e.to_string())),
    }
}

impl SolverBackend for VarisatBackend {
    fn solve_with_assumptions(
        &self,
        cnf: &Cnf,
        assumptions: &[Lit],
        timeout: Option<Duration>,
    ) -> Result<SolveOutcome> {
        match timeout {
            None => {
                let mut solver = load_varisat(&cnf.clauses);
                solve_varisat(&mut solver, cnf.num_vars, assumptions)
            }
            Some(limit) => {
                let num_vars = cnf.num_vars;
                let clauses = cnf.clauses.clone();
                let assumptions = assumptions.to_vec();
                let (tx, rx) = mpsc::channel();
                std::thread::spawn(move || {
                    let mut solver = load_varisat(&clauses);
                    let _ = tx.send(solve_varisat(&mut solver, num_vars, &assumptions));
                });
                match rx.recv_timeout(limit) {
                    Ok(res) => res,
                    Err(mpsc::RecvTimeoutError::Timeout) => Ok(SolveOutcome::Timeout),
                    Err(mpsc::RecvTimeoutError::Disconnected) => {
                        Err(Error::Solver("solver worker vanished".into()))
                    }
                }
            }
        }
    }

    fn session<'a>(&'a self, cnf: &'a Cnf) -> Result<Box<dyn SolverSession + 'a>> {
        Ok(Box::new(VarisatSession {
            solver: load_varisat(&cnf.clauses),
            num_vars: cnf.num_vars,
        }))
    }
}

struct VarisatSession {
    solver: Solver<'static>,
    num_vars: u32,
}

impl SolverSession for VarisatSession {
    fn solve_with_assumptions(&mut self, assumptions: &[Lit]) -> Result<SolveOutcome> {
        solve_varisat(&mut self.solver, self.num_vars, assumptions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sat_and_unsat() {
        let backend = VarisatBackend;
        let mut cnf = Cnf::new(2);
        cnf.add_clause(vec![1, 2]);
        cnf.add_clause(vec![-1]);
        match backend.solve(&cnf, None).unwrap() {
            SolveOutcome::Sat(m) => {
                assert!(!m.value(1));
                assert!(m.value(2));
            }
            other => panic!("expected SAT, got {other:?}"),
        }
        cnf.add_clause(vec![-2]);
        assert_eq!(backend.solve(&cnf, None).unwrap(), SolveOutcome::Unsat);
    }

    #[test]
    fn assumptions() {
        let backend = VarisatBackend;
        let mut cnf = Cnf::new(2);
        cnf.add_clause(vec![1, 2]);
        assert_eq!(
            backend.solve_with_assumptions(&cnf, &[-1, -2], None).unwrap(),
            SolveOutcome::Unsat
        );
        assert!(matches!(
            backend.solve_with_assumptions(&cnf, &[-1], None).unwrap(),
            SolveOutcome::Sat(_)
        ));
    }

    #[test]
    fn unconstrained_vars_are_assigned() {
        let backend = VarisatBackend;
        let cnf = Cnf::new(5); // no clauses at all
        match backend.solve(&cnf, None).unwrap() {
            SolveOutcome::Sat(m) => {
                for v in 1..=5 {
                    let _ = m.value(v); // total, no panic
                }
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }
}
