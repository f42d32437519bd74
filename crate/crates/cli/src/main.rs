//! Command-line surface: learn a formula from a sample, evaluate a formula
//! against a sample, generate samples, and export the propositional instance
//! as DIMACS.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use psl_infer::encode::{build_phi, build_phi_finite};
use psl_infer::learn::{learn, LearnerConfig, Outcome, SampleInput};
use psl_infer::sampleio::{
    parse_finite_sample, parse_sample, serialize_sample, sniff_format, SampleFormat,
};
use psl_infer::samplegen::{generate, succinctness_family, BalancePolicy, GenSpec};
use psl_infer::semantics::{check_regex_consistency, evaluate, match_full, Witness};
use psl_infer::solver::VarisatBackend;
use psl_infer::{parse_formula, Mode, PropositionSet, TypeCtx};

use report::RunReport;

#[derive(Parser)]
#[command(name = "psl-infer", version, about = "Learn minimal PSL/LTL formulas and regular expressions from traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Psl,
    Ltl,
    Regex,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Psl => Mode::Psl,
            ModeArg::Ltl => Mode::Ltl,
            ModeArg::Regex => Mode::Regex,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a minimal consistent formula from a sample file
    Learn(LearnArgs),
    /// Evaluate a formula against a sample and report consistency
    Eval(EvalArgs),
    /// Generate a sample from a seed formula or the succinctness family
    Gen(GenArgs),
    /// Export the propositional instance for a given (n, m) as DIMACS CNF
    ExportCnf(ExportArgs),
}

#[derive(Args)]
struct LearnArgs {
    /// sample file (TEXT or JSON; regex mode expects finite words)
    file: PathBuf,
    #[arg(long, value_enum, default_value = "psl")]
    mode: ModeArg,
    /// syntax-DAG size cutoff
    #[arg(long, default_value_t = 8)]
    max_size: usize,
    /// per-solve and global budget in seconds
    #[arg(long, default_value_t = 1800)]
    timeout: u64,
    /// cap the period copies in the matching window (results re-verified)
    #[arg(long)]
    unroll_cap: Option<usize>,
    /// emit the report as JSON
    #[arg(long)]
    json: bool,
    /// recorded in the report; learning itself is deterministic
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads for the per-n budget sweep
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// canonicalize traces (primitive period, minimal prefix) before learning
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// sample file
    file: PathBuf,
    /// formula text, e.g. '{(true . true)*} |-> p'
    #[arg(long)]
    formula: String,
    #[arg(long, value_enum, default_value = "psl")]
    mode: ModeArg,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct GenArgs {
    /// seed formula (required unless --succinctness is given)
    #[arg(long, conflicts_with = "succinctness")]
    formula: Option<String>,
    /// comma-separated proposition names
    #[arg(long)]
    props: Option<String>,
    /// emit the two-word succinctness family S_n
    #[arg(long)]
    succinctness: Option<usize>,
    /// exchange the positive and negative sides
    #[arg(long)]
    swap: bool,
    /// bound on |u| + |v|
    #[arg(long, default_value_t = 15)]
    max_len: usize,
    /// words to draw before deduplication
    #[arg(long, default_value_t = 500)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// truncate the larger side to the smaller one
    #[arg(long)]
    balance: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// sample file
    file: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, value_enum, default_value = "psl")]
    mode: ModeArg,
    #[arg(long)]
    unroll_cap: Option<usize>,
    /// write the descriptor-to-id map as tab-separated text
    #[arg(long)]
    var_map: Option<PathBuf>,
    /// output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Learn(args) => cmd_learn(args),
        Command::Eval(args) => cmd_eval(args).map(|_| 0),
        Command::Gen(args) => cmd_gen(args).map(|_| 0),
        Command::ExportCnf(args) => cmd_export(args).map(|_| 0),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read_input(path: &PathBuf) -> anyhow::Result<(String, Vec<u8>)> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read `{}`", path.display()))?;
    let text = String::from_utf8(bytes.clone()).context("sample file is not UTF-8")?;
    Ok((text, bytes))
}

fn cmd_learn(args: LearnArgs) -> anyhow::Result<u8> {
    let (text, bytes) = read_input(&args.file)?;
    let mode: Mode = args.mode.into();
    let format = sniff_format(&text);

    let mut config = LearnerConfig::new(mode);
    config.max_size = args.max_size;
    config.timeout = Duration::from_secs(args.timeout);
    config.unroll_cap = args.unroll_cap;
    config.jobs = args.jobs.max(1);
    config.backend = Arc::new(VarisatBackend);

    let result = match mode {
        Mode::Regex => {
            let sample = parse_finite_sample(&text, format)?;
            learn(SampleInput::Finite(&sample), &config)?
        }
        _ => {
            let mut sample = parse_sample(&text, format)?;
            if args.normalize {
                sample = sample.normalized()?;
            }
            learn(SampleInput::Lasso(&sample), &config)?
        }
    };

    let report = RunReport::from_result(
        mode.as_str(),
        &args.file.display().to_string(),
        &bytes,
        &result,
        args.seed,
        config.jobs,
    );
    if args.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(match result.outcome {
        Outcome::Found { .. } => 0,
        Outcome::Exhausted { .. } => 2,
        Outcome::Timeout => 3,
    })
}

#[derive(serde::Serialize)]
struct EvalReport {
    formula: String,
    consistent: bool,
    verdicts: Vec<TraceVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
}

#[derive(serde::Serialize)]
struct TraceVerdict {
    side: &'static str,
    index: usize,
    trace: String,
    holds: bool,
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let (text, _) = read_input(&args.file)?;
    let format = sniff_format(&text);
    let formula = parse_formula(&args.formula)?;
    let mode: Mode = args.mode.into();

    let (verdicts, witness) = match mode {
        Mode::Regex => {
            let sample = parse_finite_sample(&text, format)?;
            let props = sample.propositions();
            let core = formula.desugar(props);
            core.typecheck(TypeCtx::Regex)?;
            let mut verdicts = Vec::new();
            for (idx, (w, positive)) in sample.words().enumerate() {
                let index = if positive { idx } else { idx - sample.positives().len() };
                let holds = match_full(&core, w, props)?;
                let trace: Vec<String> =
                    w.symbols().iter().map(|s| s.to_bit_string(props.len())).collect();
                verdicts.push(TraceVerdict {
                    side: if positive { "positive" } else { "negative" },
                    index,
                    trace: trace.join(";"),
                    holds,
                });
            }
            (verdicts, check_regex_consistency(&core, &sample)?)
        }
        _ => {
            let mut sample = parse_sample(&text, format)?;
            if args.normalize {
                sample = sample.normalized()?;
            }
            let props = sample.propositions();
            let core = formula.desugar(props);
            core.typecheck(TypeCtx::Psl)?;
            if mode == Mode::Ltl && !core.is_ltl() {
                bail!("formula uses non-LTL operators in LTL mode");
            }
            let mut verdicts = Vec::new();
            for (idx, (w, positive)) in sample.traces().enumerate() {
                let index = if positive { idx } else { idx - sample.positives().len() };
                verdicts.push(TraceVerdict {
                    side: if positive { "positive" } else { "negative" },
                    index,
                    trace: w.display(props),
                    holds: evaluate(&core, w, props)?,
                });
            }
            (verdicts, psl_infer::semantics::check_consistency(&core, &sample)?)
        }
    };

    let consistent = witness.is_none();
    if args.json {
        let report = EvalReport {
            formula: formula.to_string(),
            consistent,
            verdicts,
            witness: witness.as_ref().map(describe_witness),
        };
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for v in &verdicts {
            println!("{}[{}] {} -> {}", v.side, v.index, v.trace, v.holds);
        }
        if let Some(w) = &witness {
            eprintln!("witness: {}", describe_witness(w));
        }
        println!("{consistent}");
    }
    Ok(())
}

fn describe_witness(w: &Witness) -> String {
    format!(
        "{}[{}] {} misclassified",
        if w.positive { "positive" } else { "negative" },
        w.index,
        w.trace
    )
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    let sample = if let Some(n) = args.succinctness {
        succinctness_family(n, args.swap)?
    } else {
        let formula_text = args
            .formula
            .as_ref()
            .context("either --formula with --props or --succinctness is required")?;
        let props_text = args.props.as_ref().context("--props is required with --formula")?;
        let props = PropositionSet::new(
            props_text.split(',').map(str::trim).filter(|s| !s.is_empty()),
        )?;
        let formula = parse_formula(formula_text)?;
        let mut spec = GenSpec::new(formula, props);
        spec.max_len = args.max_len;
        spec.budget = args.budget;
        spec.seed = args.seed;
        spec.balance = if args.balance { BalancePolicy::Truncate } else { BalancePolicy::None };
        let mut sample = generate(&spec)?;
        if args.swap {
            sample = psl_infer::Sample::new(
                sample.propositions().clone(),
                sample.negatives().to_vec(),
                sample.positives().to_vec(),
            )?;
        }
        sample
    };
    let format = match args.format {
        FormatArg::Text => SampleFormat::Text,
        FormatArg::Json => SampleFormat::Json,
    };
    let rendered = serialize_sample(&sample, format);
    match &args.out {
        Some(path) => std::fs::write(path, rendered)
            .with_context(|| format!("cannot write `{}`", path.display()))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn cmd_export(args: ExportArgs) -> anyhow::Result<()> {
    let (text, _) = read_input(&args.file)?;
    let format = sniff_format(&text);
    let mode: Mode = args.mode.into();
    let (inst, props) = match mode {
        Mode::Regex => {
            let sample = parse_finite_sample(&text, format)?;
            (build_phi_finite(&sample, args.n)?, sample.propositions().clone())
        }
        _ => {
            let sample = parse_sample(&text, format)?;
            (
                build_phi(&sample, args.n, args.m, mode, args.unroll_cap)?,
                sample.propositions().clone(),
            )
        }
    };
    if let Some(path) = &args.var_map {
        std::fs::write(path, inst.table.to_tsv(&props))
            .with_context(|| format!("cannot write `{}`", path.display()))?;
    }
    let dimacs = inst.cnf.to_dimacs();
    match &args.out {
        Some(path) => std::fs::write(path, dimacs)
            .with_context(|| format!("cannot write `{}`", path.display()))?,
        None => print!("{dimacs}"),
    }
    Ok(())
}
