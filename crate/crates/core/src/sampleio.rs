//! Sample file formats.
//!
//! TEXT: line 1 lists comma-separated proposition names; positive traces
//! follow, then a `---` separator line, then negative traces. A lasso trace
//! line is `prefix::period` with `;`-separated symbols, each symbol a bit
//! string in header order (`10` = first proposition true, second false). The
//! prefix may be empty, the period may not. Finite-word files (regex mode)
//! use the same layout without `::`; an empty line is the empty word.
//!
//! JSON mirrors the same data with symbols as 0/1 arrays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{FiniteSample, FiniteWord, LassoWord, PropositionSet, Sample, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Text,
    Json,
}

/// Guess the format from the first non-whitespace byte.
pub fn sniff_format(text: &str) -> SampleFormat {
    match text.trim_start().as_bytes().first() {
        Some(b'{') => SampleFormat::Json,
        _ => SampleFormat::Text,
    }
}

fn parse_symbol(bits: &str, props: &PropositionSet, line: usize, col: usize) -> Result<Symbol> {
    if bits.len() != props.len() {
        return Err(Error::Syntax {
            line,
            col,
            msg: format!(
                "symbol `{bits}` has {} bits, expected {} (one per proposition)",
                bits.len(),
                props.len()
            ),
        });
    }
    let mut sym = Symbol::EMPTY;
    for (i, c) in bits.chars().enumerate() {
        match c {
            '1' => sym = sym.with(i),
            '0' => {}
            other => {
                return Err(Error::Syntax {
                    line,
                    col: col + i,
                    msg: format!("expected 0 or 1, found `{other}`"),
                });
            }
        }
    }
    Ok(sym)
}

fn parse_word_part(
    part: &str,
    props: &PropositionSet,
    line: usize,
    col0: usize,
) -> Result<FiniteWord> {
    if part.is_empty() {
        return Ok(FiniteWord::empty());
    }
    let mut out = FiniteWord::empty();
    let mut col = col0;
    for piece in part.split(';') {
        out.push(parse_symbol(piece, props, line, col)?);
        col += piece.len() + 1;
    }
    Ok(out)
}

type NumberedLines = Vec<(usize, String)>;

fn split_blocks(text: &str) -> Result<(Vec<String>, NumberedLines, NumberedLines)> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop(); // final newline
    }
    if lines.is_empty() {
        return Err(Error::Syntax { line: 1, col: 1, msg: "empty sample file".into() });
    }
    let header: Vec<String> = lines[0]
        .trim()
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    let mut seen_sep = false;
    for (idx, raw) in lines.iter().enumerate().skip(1) {
        let line_no = idx + 1;
        if raw.trim() == "---" {
            if seen_sep {
                return Err(Error::Syntax {
                    line: line_no,
                    col: 1,
                    msg: "duplicate `---` separator".into(),
                });
            }
            seen_sep = true;
            continue;
        }
        if seen_sep {
            negatives.push((line_no, raw.to_string()));
        } else {
            positives.push((line_no, raw.to_string()));
        }
    }
    if !seen_sep {
        return Err(Error::Syntax {
            line: lines.len(),
            col: 1,
            msg: "missing `---` separator between positive and negative traces".into(),
        });
    }
    Ok((header, positives, negatives))
}

fn parse_lasso_line(raw: &str, props: &PropositionSet, line: usize) -> Result<LassoWord> {
    let trimmed = raw.trim_end();
    let Some(split) = trimmed.find("::") else {
        return Err(Error::Syntax {
            line,
            col: 1,
            msg: "expected `prefix::period`".into(),
        });
    };
    let prefix = parse_word_part(&trimmed[..split], props, line, 1)?;
    let period_text = &trimmed[split + 2..];
    if period_text.is_empty() {
        return Err(Error::Syntax {
            line,
            col: split + 3,
            msg: "period must be nonempty".into(),
        });
    }
    let period = parse_word_part(period_text, props, line, split + 3)?;
    LassoWord::new(prefix, period)
}

/// Parses a lasso-word sample.
pub fn parse_sample(text: &str, format: SampleFormat) -> Result<Sample> {
    match format {
        SampleFormat::Text => {
            let (header, pos_lines, neg_lines) = split_blocks(text)?;
            let props = PropositionSet::new(header)?;
            let mut positives = Vec::with_capacity(pos_lines.len());
            for (line, raw) in &pos_lines {
                if raw.trim().is_empty() {
                    continue;
                }
                positives.push(parse_lasso_line(raw, &props, *line)?);
            }
            let mut negatives = Vec::with_capacity(neg_lines.len());
            for (line, raw) in &neg_lines {
                if raw.trim().is_empty() {
                    continue;
                }
                negatives.push(parse_lasso_line(raw, &props, *line)?);
            }
            Sample::new(props, positives, negatives)
        }
        SampleFormat::Json => {
            let parsed: SampleJson = serde_json::from_str(text).map_err(json_err)?;
            parsed.into_sample()
        }
    }
}

/// Parses a finite-word sample (regex mode).
pub fn parse_finite_sample(text: &str, format: SampleFormat) -> Result<FiniteSample> {
    match format {
        SampleFormat::Text => {
            let (header, pos_lines, neg_lines) = split_blocks(text)?;
            let props = PropositionSet::new(header)?;
            let parse_all = |lines: &[(usize, String)]| -> Result<Vec<FiniteWord>> {
                lines
                    .iter()
                    .map(|(line, raw)| parse_word_part(raw.trim_end(), &props, *line, 1))
                    .collect()
            };
            let positives = parse_all(&pos_lines)?;
            let negatives = parse_all(&neg_lines)?;
            FiniteSample::new(props, positives, negatives)
        }
        SampleFormat::Json => {
            let parsed: FiniteSampleJson = serde_json::from_str(text).map_err(json_err)?;
            parsed.into_sample()
        }
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Syntax { line: e.line(), col: e.column(), msg: e.to_string() }
}

fn symbol_bits(sym: Symbol, width: usize) -> Vec<u8> {
    (0..width).map(|i| sym.contains(i) as u8).collect()
}

fn symbol_from_bits(bits: &[u8], props: &PropositionSet) -> Result<Symbol> {
    if bits.len() != props.len() {
        return Err(Error::InvalidTrace(format!(
            "symbol has {} bits, expected {}",
            bits.len(),
            props.len()
        )));
    }
    let mut sym = Symbol::EMPTY;
    for (i, &b) in bits.iter().enumerate() {
        match b {
            1 => sym = sym.with(i),
            0 => {}
            other => return Err(Error::InvalidTrace(format!("symbol bit must be 0/1, got {other}"))),
        }
    }
    Ok(sym)
}

#[derive(Serialize, Deserialize)]
struct LassoJson {
    prefix: Vec<Vec<u8>>,
    period: Vec<Vec<u8>>,
}

#[derive(Serialize, Deserialize)]
struct SampleJson {
    propositions: Vec<String>,
    positive: Vec<LassoJson>,
    negative: Vec<LassoJson>,
}

impl SampleJson {
    fn into_sample(self) -> Result<Sample> {
        let props = PropositionSet::new(self.propositions)?;
        let conv = |traces: Vec<LassoJson>| -> Result<Vec<LassoWord>> {
            traces
                .into_iter()
                .map(|t| {
                    let prefix: Result<FiniteWord> =
                        t.prefix.iter().map(|b| symbol_from_bits(b, &props)).collect();
                    let period: Result<FiniteWord> =
                        t.period.iter().map(|b| symbol_from_bits(b, &props)).collect();
                    LassoWord::new(prefix?, period?)
                })
                .collect()
        };
        Sample::new(props.clone(), conv(self.positive)?, conv(self.negative)?)
    }
}

#[derive(Serialize, Deserialize)]
struct FiniteSampleJson {
    propositions: Vec<String>,
    positive: Vec<Vec<Vec<u8>>>,
    negative: Vec<Vec<Vec<u8>>>,
}

impl FiniteSampleJson {
    fn into_sample(self) -> Result<FiniteSample> {
        let props = PropositionSet::new(self.propositions)?;
        let conv = |words: Vec<Vec<Vec<u8>>>| -> Result<Vec<FiniteWord>> {
            words
                .into_iter()
                .map(|w| w.iter().map(|b| symbol_from_bits(b, &props)).collect())
                .collect()
        };
        FiniteSample::new(props.clone(), conv(self.positive)?, conv(self.negative)?)
    }
}

/// Serializes a sample; `parse_sample(serialize_sample(s, f), f) == s`.
pub fn serialize_sample(s: &Sample, format: SampleFormat) -> String {
    match format {
        SampleFormat::Text => {
            let props = s.propositions();
            let mut out = props.names().join(",");
            out.push('\n');
            for w in s.positives() {
                out.push_str(&w.display(props));
                out.push('\n');
            }
            out.push_str("---\n");
            for w in s.negatives() {
                out.push_str(&w.display(props));
                out.push('\n');
            }
            out
        }
        SampleFormat::Json => {
            let width = s.propositions().len();
            let conv = |traces: &[LassoWord]| -> Vec<LassoJson> {
                traces
                    .iter()
                    .map(|w| LassoJson {
                        prefix: w.prefix().symbols().iter().map(|&a| symbol_bits(a, width)).collect(),
                        period: w.period().symbols().iter().map(|&a| symbol_bits(a, width)).collect(),
                    })
                    .collect()
            };
            let json = SampleJson {
                propositions: s.propositions().names().to_vec(),
                positive: conv(s.positives()),
                negative: conv(s.negatives()),
            };
            let mut text = serde_json::to_string_pretty(&json).expect("serialization cannot fail");
            text.push('\n');
            text
        }
    }
}

pub fn serialize_finite_sample(s: &FiniteSample, format: SampleFormat) -> String {
    match format {
        SampleFormat::Text => {
            let props = s.propositions();
            let width = props.len();
            let render = |w: &FiniteWord| {
                w.symbols()
                    .iter()
                    .map(|a| a.to_bit_string(width))
                    .collect::<Vec<_>>()
                    .join(";")
            };
            let mut out = props.names().join(",");
            out.push('\n');
            for w in s.positives() {
                out.push_str(&render(w));
                out.push('\n');
            }
            out.push_str("---\n");
            for w in s.negatives() {
                out.push_str(&render(w));
                out.push('\n');
            }
            out
        }
        SampleFormat::Json => {
            let width = s.propositions().len();
            let conv = |words: &[FiniteWord]| -> Vec<Vec<Vec<u8>>> {
                words
                    .iter()
                    .map(|w| w.symbols().iter().map(|&a| symbol_bits(a, width)).collect())
                    .collect()
            };
            let json = FiniteSampleJson {
                propositions: s.propositions().names().to_vec(),
                positive: conv(s.positives()),
                negative: conv(s.negatives()),
            };
            let mut text = serde_json::to_string_pretty(&json).expect("serialization cannot fail");
            text.push('\n');
            text
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_text() {
        let s = parse_sample("p\n1::1\n---\n0::0\n", SampleFormat::Text).unwrap();
        assert_eq!(s.propositions().names(), ["p"]);
        assert_eq!(s.positives().len(), 1);
        assert_eq!(s.negatives().len(), 1);
        assert_eq!(s.positives()[0].prefix_len(), 1);
        assert!(s.positives()[0].symbol_at(0).contains(0));
        assert!(!s.negatives()[0].symbol_at(5).contains(0));
    }

    #[test]
    fn disjointness_error() {
        let err = parse_sample("p\n1::1\n---\n1::1\n", SampleFormat::Text).unwrap_err();
        assert!(matches!(err, Error::DisjointnessViolation(_)));
    }

    #[test]
    fn empty_period_is_syntax_error() {
        let err = parse_sample("p\n1::\n---\n0::0\n", SampleFormat::Text).unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, .. }));
    }

    #[test]
    fn empty_prefix_allowed() {
        let s = parse_sample("p,q\n::10;01\n---\n::00\n", SampleFormat::Text).unwrap();
        assert_eq!(s.positives()[0].prefix_len(), 0);
        assert_eq!(s.positives()[0].period_len(), 2);
    }

    #[test]
    fn text_round_trip() {
        let text = "p,q\n10;01::11\n::10\n---\n00::00\n";
        let s = parse_sample(text, SampleFormat::Text).unwrap();
        assert_eq!(serialize_sample(&s, SampleFormat::Text), text);
    }

    #[test]
    fn json_round_trip() {
        let s = parse_sample("p,q\n10;01::11\n::10\n---\n00::00\n", SampleFormat::Text).unwrap();
        let json = serialize_sample(&s, SampleFormat::Json);
        assert_eq!(parse_sample(&json, SampleFormat::Json).unwrap(), s);
        assert_eq!(sniff_format(&json), SampleFormat::Json);
    }

    #[test]
    fn finite_words_and_epsilon() {
        let s = parse_finite_sample("p\n1\n\n---\n0\n", SampleFormat::Text).unwrap();
        assert_eq!(s.positives().len(), 2);
        assert!(s.positives()[1].is_empty());
        let text = serialize_finite_sample(&s, SampleFormat::Text);
        assert_eq!(parse_finite_sample(&text, SampleFormat::Text).unwrap(), s);
        let json = serialize_finite_sample(&s, SampleFormat::Json);
        assert_eq!(parse_finite_sample(&json, SampleFormat::Json).unwrap(), s);
    }

    #[test]
    fn unknown_bit_width() {
        let err = parse_sample("p,q\n1::1\n---\n0::0\n", SampleFormat::Text).unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }));
    }
}
