//! Exit codes, report schema stability, and the gen -> learn pipeline.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_psl-infer"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn learn_exit_codes() {
    let sample = tmp("codes-sample.txt");
    std::fs::write(&sample, "p\n1::1\n---\n0::0\n").unwrap();

    let found = bin().args(["learn"]).arg(&sample).output().unwrap();
    assert_eq!(found.status.code(), Some(0));
    let text = String::from_utf8(found.stdout).unwrap();
    assert!(text.contains("formula: p"), "{text}");

    // a sample needing size 2 exhausts a size-1 search
    let bigger = tmp("codes-bigger.txt");
    std::fs::write(&bigger, "p\n1::1\n---\n1::0\n").unwrap();
    let exhausted = bin()
        .args(["learn", "--mode", "ltl", "--max-size", "1"])
        .arg(&bigger)
        .output()
        .unwrap();
    assert_eq!(exhausted.status.code(), Some(2));

    let timed_out = bin()
        .args(["learn", "--timeout", "0"])
        .arg(&bigger)
        .output()
        .unwrap();
    assert_eq!(timed_out.status.code(), Some(3));

    let missing = bin().args(["learn", "no-such-file.txt"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let malformed = tmp("codes-bad.txt");
    std::fs::write(&malformed, "p\n1::\n---\n").unwrap();
    let bad = bin().args(["learn"]).arg(&malformed).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn json_report_reparses_and_formula_round_trips() {
    let sample = tmp("json-sample.txt");
    std::fs::write(&sample, "p,q\n10::01\n---\n00::00\n").unwrap();
    let out = bin().args(["learn", "--json"]).arg(&sample).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["mode"], "psl");
    assert_eq!(report["outcome"], "found");
    assert_eq!(report["verification"], "passed");
    let formula = report["formula"].as_str().unwrap();
    let reparsed = psl_infer::parse_formula(formula).unwrap();
    assert_eq!(reparsed.to_string(), formula);
    assert_eq!(
        report["formula_size"].as_u64().unwrap() as usize,
        reparsed.size()
    );
    // text and JSON runs agree on the verdict table
    let text_out = bin().args(["learn"]).arg(&sample).output().unwrap();
    let text = String::from_utf8(text_out.stdout).unwrap();
    for it in report["iterations"].as_array().unwrap() {
        assert!(text.contains(it["verdict"].as_str().unwrap()));
    }
}

#[test]
fn eval_prints_verdicts_and_bit() {
    let sample = tmp("eval-sample.txt");
    std::fs::write(&sample, "p\n0;1::0\n---\n").unwrap();
    let out = bin()
        .args(["eval", "--formula", "{(true . true)*} |-> p"])
        .arg(&sample)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "positive[0] 0;1::0 -> false");
    assert_eq!(lines.next().unwrap(), "false");

    let type_error = bin()
        .args(["eval", "--formula", "{p U q} |-> p"])
        .arg(&sample)
        .output()
        .unwrap();
    assert_eq!(type_error.status.code(), Some(1));
}

#[test]
fn gen_learn_pipeline() {
    let sample = tmp("pipeline-sample.txt");
    let gen = bin()
        .args([
            "gen", "--formula", "p U q", "--props", "p,q", "--max-len", "4", "--budget", "30",
            "--seed", "3",
        ])
        .args(["--out"])
        .arg(&sample)
        .output()
        .unwrap();
    assert_eq!(gen.status.code(), Some(0), "{}", String::from_utf8_lossy(&gen.stderr));

    // the generated sample admits the seed formula, so learning succeeds and
    // the result is consistent
    let out = bin()
        .args(["learn", "--json", "--max-size", "4"])
        .arg(&sample)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verification"], "passed");
}

#[test]
fn export_cnf_solves_and_decodes() {
    use psl_infer::cnf::Cnf;
    use psl_infer::encode::{decode_model, Mode};
    use psl_infer::solver::{SolveOutcome, SolverBackend, VarisatBackend};

    let sample_path = tmp("export-sample.txt");
    std::fs::write(&sample_path, "p\n1::1\n---\n0::0\n").unwrap();
    let dimacs_path = tmp("export.cnf");
    let map_path = tmp("export.vars.tsv");
    let out = bin()
        .args(["export-cnf", "--n", "1", "--m", "0"])
        .args(["--var-map"])
        .arg(&map_path)
        .args(["--out"])
        .arg(&dimacs_path)
        .arg(&sample_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let cnf = Cnf::from_dimacs(&std::fs::read_to_string(&dimacs_path).unwrap()).unwrap();
    let SolveOutcome::Sat(model) = VarisatBackend.solve(&cnf, None).unwrap() else {
        panic!("exported instance must be satisfiable");
    };
    // rebuild the table to decode the model back into the formula `p`
    let text = std::fs::read_to_string(&sample_path).unwrap();
    let sample =
        psl_infer::sampleio::parse_sample(&text, psl_infer::sampleio::SampleFormat::Text).unwrap();
    let inst = psl_infer::encode::build_phi(&sample, 1, 0, Mode::Psl, None).unwrap();
    let decoded =
        decode_model(&inst.table, &model, 1, sample.propositions(), Mode::Psl).unwrap();
    assert_eq!(decoded.formula.to_string(), "p");

    let map = std::fs::read_to_string(&map_path).unwrap();
    assert!(map.lines().any(|l| l.starts_with("x\t1\tp\t")), "{map}");
}

#[test]
fn gen_rejects_degenerate_seed() {
    let out = bin()
        .args(["gen", "--formula", "true", "--props", "p", "--max-len", "2", "--budget", "16"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("empty negative"), "{err}");
}

#[test]
fn regex_mode_cli_round_trip() {
    let sample = tmp("regex-sample.txt");
    std::fs::write(&sample, "p,q\n10;01\n---\n01;10\n").unwrap();

    let out = bin()
        .args(["learn", "--mode", "regex", "--json"])
        .arg(&sample)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["formula_size"], 3);

    let eval = bin()
        .args(["eval", "--mode", "regex", "--formula"])
        .arg(report["formula"].as_str().unwrap())
        .arg(&sample)
        .output()
        .unwrap();
    assert_eq!(eval.status.code(), Some(0));
    let text = String::from_utf8(eval.stdout).unwrap();
    assert!(text.trim_end().ends_with("true"), "{text}");

    let export = bin()
        .args(["export-cnf", "--mode", "regex", "--n", "3"])
        .arg(&sample)
        .output()
        .unwrap();
    assert_eq!(export.status.code(), Some(0));
    assert!(String::from_utf8(export.stdout).unwrap().starts_with("p cnf "));
}

#[test]
fn json_sample_input_detected() {
    let text_path = tmp("fmt-sample.txt");
    let json_path = tmp("fmt-sample.json");
    let gen_args = ["gen", "--formula", "X p", "--props", "p,q", "--max-len", "3", "--budget", "20", "--seed", "5"];
    let t = bin().args(gen_args).args(["--format", "text", "--out"]).arg(&text_path).output().unwrap();
    assert_eq!(t.status.code(), Some(0));
    let j = bin().args(gen_args).args(["--format", "json", "--out"]).arg(&json_path).output().unwrap();
    assert_eq!(j.status.code(), Some(0));

    // both encodings of the same sample learn the same formula
    let learn = |p: &PathBuf| {
        let out = bin().args(["learn", "--json"]).arg(p).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["formula"].as_str().unwrap().to_string()
    };
    assert_eq!(learn(&text_path), learn(&json_path));
}
