//! Run reports: one schema for text and JSON output.

use psl_infer::learn::{LearnerResult, Outcome};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IterationRow {
    pub n: usize,
    pub m: usize,
    pub vars: usize,
    pub clauses: usize,
    pub verdict: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub mode: String,
    pub input: String,
    pub input_digest: String,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub iterations: Vec<IterationRow>,
    pub total_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub jobs: usize,
}

pub fn fnv1a64(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

impl RunReport {
    pub fn from_result(
        mode: &str,
        input: &str,
        input_bytes: &[u8],
        result: &LearnerResult,
        seed: Option<u64>,
        jobs: usize,
    ) -> RunReport {
        let (outcome, formula, formula_size, n, m) = match &result.outcome {
            Outcome::Found { formula, n, m } => (
                "found".to_string(),
                Some(formula.to_string()),
                Some(formula.size()),
                Some(*n),
                Some(*m),
            ),
            Outcome::Exhausted { .. } => ("exhausted".to_string(), None, None, None, None),
            Outcome::Timeout => ("timeout".to_string(), None, None, None, None),
        };
        RunReport {
            mode: mode.to_string(),
            input: input.to_string(),
            input_digest: fnv1a64(input_bytes),
            outcome,
            formula,
            formula_size,
            n,
            m,
            iterations: result
                .iterations
                .iter()
                .map(|s| IterationRow {
                    n: s.n,
                    m: s.m,
                    vars: s.vars,
                    clauses: s.clauses,
                    verdict: s.verdict.as_str().to_string(),
                    seconds: s.seconds,
                })
                .collect(),
            total_seconds: result.total_seconds,
            verification: result.verified.map(|v| if v { "passed" } else { "failed" }.to_string()),
            seed,
            jobs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("mode: {}\n", self.mode));
        out.push_str(&format!("input: {} (digest {})\n", self.input, self.input_digest));
        out.push_str("   n   m       vars    clauses  verdict   seconds\n");
        for it in &self.iterations {
            out.push_str(&format!(
                "{:>4} {:>3} {:>10} {:>10}  {:<8} {:>9.3}\n",
                it.n, it.m, it.vars, it.clauses, it.verdict, it.seconds
            ));
        }
        out.push_str(&format!("outcome: {}\n", self.outcome));
        if let (Some(f), Some(size)) = (&self.formula, self.formula_size) {
            out.push_str(&format!(
                "formula: {f}\nsize: {size} (n = {}, m = {})\n",
                self.n.unwrap_or(size),
                self.m.unwrap_or(0)
            ));
        }
        if let Some(v) = &self.verification {
            out.push_str(&format!("verification: {v}\n"));
        }
        out.push_str(&format!("total: {:.3}s\n", self.total_seconds));
        out
    }
}

