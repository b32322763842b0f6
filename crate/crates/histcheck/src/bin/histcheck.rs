//! Command-line front end: ingest matrices and partitions, run decoherence
//! checks and ensemble experiments, emit reports.
//!
//! Exit codes: 0 pass, 1 IO/parse error, 2 check failed or invalid input,
//! 3 budget exceeded, 64 usage error.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use histcheck::criteria::{
    check_approx_dh, check_approx_strong, check_commutators, check_exact, check_theorem2_bound,
    commutator_table, CheckReport, CriteriaError, Epsilon,
};
use histcheck::histories::{full_gram, history_count, GramConfig, HistoriesError};
use histcheck::io::{parse_bundle, parse_partition, Bundle, IoError};
use histcheck::search::{run_theorem1_experiment, run_theorem2_experiment, Ensemble, EnsembleKind};
use histcheck::{DEFAULT_BUDGET, DEFAULT_P_NULL, DEFAULT_TOL};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_PASS: u8 = 0;
const EXIT_IO: u8 = 1;
const EXIT_CHECK_FAIL: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "histcheck", version, about = "Decoherence checks for quantum histories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ApproxMode {
    Dh,
    DhRe,
    Strong,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleArg {
    Haar,
    Permutation,
    BlockDiagonal,
    DiagonalPhase,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Theorem1,
    Theorem2,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a projective partition file.
    Validate {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Check exact medium decoherence of a bundle at history length k.
    Decohere {
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an approximate (epsilon) decoherence condition.
    Approx {
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = ApproxMode::Dh)]
        mode: ApproxMode,
        #[arg(long, default_value_t = DEFAULT_P_NULL)]
        p_null: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the iterated commutator conditions up to a horizon.
    Commutators {
        input: PathBuf,
        #[arg(long, default_value_t = 64)]
        n_max: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        verbose: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the commutator norm bound 2 d^{3/2} sqrt(eps).
    Bound {
        input: PathBuf,
        #[arg(long, default_value_t = 64)]
        n_max: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an ensemble experiment and emit one JSON line per trial.
    Scan {
        #[arg(long, value_enum)]
        ensemble: EnsembleArg,
        #[arg(long, short)]
        d: usize,
        /// Basis groups like "0;1,2" (semicolon-separated groups).
        /// Defaults to the fine-grained partition.
        #[arg(long)]
        groups: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum, default_value_t = ExperimentArg::Theorem1)]
        experiment: ExperimentArg,
        #[arg(long, default_value_t = DEFAULT_P_NULL)]
        p_null: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn gram_config() -> GramConfig {
    let mut cfg = GramConfig::default();
    if let Ok(v) = std::env::var("HISTCHECK_BUDGET") {
        if let Ok(budget) = v.parse::<usize>() {
            cfg.budget = budget;
        }
    }
    let _ = DEFAULT_BUDGET; // default lives in GramConfig
    cfg
}

fn read_file(path: &PathBuf) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })
}

fn load_bundle(path: &PathBuf, tol: f64) -> Result<Bundle, u8> {
    let text = read_file(path)?;
    parse_bundle(&text, tol).map_err(|e| {
        eprintln!("error: {e}");
        match e {
            IoError::Json(_) | IoError::Matrix(_) | IoError::DimMismatch { .. } => EXIT_IO,
            _ => EXIT_CHECK_FAIL,
        }
    })
}

fn criteria_exit(e: CriteriaError) -> u8 {
    eprintln!("error: {e}");
    match e {
        CriteriaError::Histories(HistoriesError::BudgetExceeded { .. }) => EXIT_BUDGET,
        CriteriaError::InvalidEpsilon(_) => EXIT_USAGE,
        _ => EXIT_CHECK_FAIL,
    }
}

fn parse_eps(eps: f64) -> Result<Epsilon, u8> {
    Epsilon::new(eps).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

fn emit(text: String, out: &Option<PathBuf>) -> Result<(), u8> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            EXIT_IO
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn render_report(report: &CheckReport, format: Format, extra: Option<String>) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes"),
        Format::Text => {
            let mut s = format!(
                "check: {}\nverdict: {}\nworst_value: {:.6}\n",
                report.check,
                if report.passed() { "pass" } else { "fail" },
                report.worst_value,
            );
            if let Some(w) = &report.witness {
                s.push_str(&format!(
                    "witness: {}\n",
                    serde_json::to_string(w).expect("witness serializes")
                ));
            }
            s.push_str(&format!("params: {}\n", report.params));
            if let Some(note) = &report.horizon_note {
                s.push_str(&format!("note: {note}\n"));
            }
            if let Some(extra) = extra {
                s.push_str(&extra);
            }
            s
        }
    }
}

fn report_exit(report: &CheckReport) -> u8 {
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAIL
    }
}

fn run(cli: Cli) -> u8 {
    match run_inner(cli) {
        Ok(code) => code,
        Err(code) => code,
    }
}

fn run_inner(cli: Cli) -> Result<u8, u8> {
    match cli.command {
        Command::Validate { input, tol } => {
            let text = read_file(&input)?;
            match parse_partition(&text, tol) {
                Ok(p) => {
                    let kind = if p.is_fine_grained() {
                        "fine-grained, m=d"
                    } else {
                        "coarse-grained"
                    };
                    println!(
                        "valid partition: dim={}, m={}, ranks={:?}, {}",
                        p.dim(),
                        p.len(),
                        p.ranks(),
                        kind
                    );
                    Ok(EXIT_PASS)
                }
                Err(IoError::Json(e)) => {
                    eprintln!("error: malformed JSON: {e}");
                    Ok(EXIT_IO)
                }
                Err(e @ (IoError::Matrix(_) | IoError::DimMismatch { .. })) => {
                    eprintln!("error: {e}");
                    Ok(EXIT_IO)
                }
                Err(e) => {
                    eprintln!("invalid partition: {e}");
                    Ok(EXIT_CHECK_FAIL)
                }
            }
        }
        Command::Decohere {
            input,
            k,
            tol,
            format,
            out,
        } => {
            let bundle = load_bundle(&input, tol.max(DEFAULT_TOL))?;
            let cfg = gram_config();
            let report = check_exact(&bundle.unitary, &bundle.partition, &bundle.rho, k, tol, &cfg)
                .map_err(criteria_exit)?;
            let extra = if report.passed() {
                let g = full_gram(&bundle.unitary, &bundle.partition, &bundle.rho, k, &cfg)
                    .map_err(|e| criteria_exit(e.into()))?;
                let probs = g.probabilities().map_err(|e| criteria_exit(e.into()))?;
                let lines: Vec<String> = probs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > DEFAULT_P_NULL)
                    .map(|(code, p)| format!("  p[{code}] = {p:.6}"))
                    .collect();
                Some(format!("probabilities:\n{}\n", lines.join("\n")))
            } else {
                None
            };
            emit(render_report(&report, format, extra), &out)?;
            Ok(report_exit(&report))
        }
        Command::Approx {
            input,
            k,
            eps,
            mode,
            p_null,
            format,
            out,
        } => {
            let eps = parse_eps(eps)?;
            let bundle = load_bundle(&input, DEFAULT_TOL)?;
            let cfg = gram_config();
            let report = match mode {
                ApproxMode::Dh => check_approx_dh(
                    &bundle.unitary,
                    &bundle.partition,
                    &bundle.rho,
                    k,
                    eps,
                    false,
                    p_null,
                    &cfg,
                ),
                ApproxMode::DhRe => check_approx_dh(
                    &bundle.unitary,
                    &bundle.partition,
                    &bundle.rho,
                    k,
                    eps,
                    true,
                    p_null,
                    &cfg,
                ),
                ApproxMode::Strong => check_approx_strong(
                    &bundle.unitary,
                    &bundle.partition,
                    &bundle.rho,
                    k,
                    eps,
                    p_null,
                    &cfg,
                ),
            }
            .map_err(criteria_exit)?;
            emit(render_report(&report, format, None), &out)?;
            Ok(report_exit(&report))
        }
        Command::Commutators {
            input,
            n_max,
            tol,
            verbose,
            format,
            out,
        } => {
            let bundle = load_bundle(&input, DEFAULT_TOL)?;
            let report = check_commutators(&bundle.unitary, &bundle.partition, n_max, tol);
            let extra = if verbose {
                let table = commutator_table(&bundle.unitary, &bundle.partition, n_max);
                let lines: Vec<String> = table
                    .iter()
                    .map(|(n, a, b, v)| format!("  c({n}, {a}, {b}) = {v:.6}"))
                    .collect();
                Some(format!("commutator norms:\n{}\n", lines.join("\n")))
            } else {
                None
            };
            emit(render_report(&report, format, extra), &out)?;
            Ok(report_exit(&report))
        }
        Command::Bound {
            input,
            n_max,
            eps,
            format,
            out,
        } => {
            let eps = parse_eps(eps)?;
            let bundle = load_bundle(&input, DEFAULT_TOL)?;
            let report = check_theorem2_bound(&bundle.unitary, &bundle.partition, n_max, eps);
            emit(render_report(&report, format, None), &out)?;
            Ok(report_exit(&report))
        }
        Command::Scan {
            ensemble,
            d,
            groups,
            trials,
            seed,
            k_max,
            n_max,
            tol,
            eps,
            experiment,
            p_null,
            out,
        } => {
            let kind = match ensemble {
                EnsembleArg::Haar => EnsembleKind::Haar,
                EnsembleArg::Permutation => EnsembleKind::Permutation,
                EnsembleArg::BlockDiagonal => EnsembleKind::BlockDiagonal,
                EnsembleArg::DiagonalPhase => EnsembleKind::DiagonalPhase,
            };
            let group_list: Vec<Vec<usize>> = match groups {
                Some(spec) => parse_groups(&spec).ok_or_else(|| {
                    eprintln!("error: cannot parse --groups {spec:?}");
                    EXIT_USAGE
                })?,
                None => (0..d).map(|i| vec![i]).collect(),
            };
            let ens = Ensemble {
                kind,
                dim: d,
                groups: group_list,
                trials,
                seed,
            };
            let partition = ens.partition().map_err(|_| {
                eprintln!("error: --groups is not a disjoint cover of 0..{d}");
                EXIT_USAGE
            })?;
            let cfg = gram_config();
            // refuse up front rather than part way through the trials
            if let Err(e) = history_count(partition.len(), k_max, cfg.budget) {
                eprintln!("error: {e}");
                return Err(EXIT_BUDGET);
            }
            let result = match experiment {
                ExperimentArg::Theorem1 => {
                    run_theorem1_experiment(&ens, k_max, n_max, tol, &cfg)
                }
                ExperimentArg::Theorem2 => {
                    let eps = parse_eps(eps.ok_or_else(|| {
                        eprintln!("error: --eps is required for the theorem2 experiment");
                        EXIT_USAGE
                    })?)?;
                    run_theorem2_experiment(&ens, eps, k_max, n_max, p_null, &cfg)
                }
            }
            .map_err(criteria_exit)?;
            let mut lines = Vec::with_capacity(result.records.len() + 1);
            for record in &result.records {
                lines.push(serde_json::to_string(record).expect("record serializes"));
            }
            lines.push(
                serde_json::to_string(&serde_json::json!({ "summary": result.summary }))
                    .expect("summary serializes"),
            );
            let body = lines.join("\n");
            match &out {
                Some(path) => {
                    let mut f = std::fs::File::create(path).map_err(|e| {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        EXIT_IO
                    })?;
                    writeln!(f, "{body}").map_err(|_| EXIT_IO)?;
                }
                None => println!("{body}"),
            }
            eprintln!("violations: {}", result.summary.violations);
            Ok(if result.summary.violations == 0 {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAIL
            })
        }
    }
}

fn parse_groups(spec: &str) -> Option<Vec<Vec<usize>>> {
    spec.split(';')
        .map(|g| {
            g.split(',')
                .map(|x| x.trim().parse::<usize>().ok())
                .collect::<Option<Vec<usize>>>()
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::from(EXIT_PASS);
            }
            eprintln!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    ExitCode::from(run(cli))
}
