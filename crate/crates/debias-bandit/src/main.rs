//! `debias-bandit` command line: design solvers, κ* diagnostics, instance
//! generation, Monte Carlo simulation, slope fitting and policy comparison.
//!
//! Exit codes: 0 success, 2 validation failure, 1 runtime error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use debias_bandit::design;
use debias_bandit::geometry::{self, ActionSet};
use debias_bandit::harness::{self, ExperimentConfig};
use debias_bandit::instances::{self, ProblemInstance};

#[derive(Parser)]
#[command(name = "debias-bandit", version, about = "Biased linear bandit toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal-design solvers on an action-set JSON file.
    Design {
        #[command(subcommand)]
        which: DesignCommand,
    },
    /// Minimal bias-estimation variance κ* of an action set.
    Kappa {
        #[arg(long)]
        actions: PathBuf,
    },
    /// Generate a problem instance into a directory.
    Instance {
        #[command(subcommand)]
        family: InstanceCommand,
    },
    /// Seeded Monte Carlo regret simulation.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Log-log slope of the mean regret curve in a simulation CSV.
    FitSlope {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Paired-seed comparison of several simulation configs.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Subcommand)]
enum DesignCommand {
    /// G-optimal design (minimax prediction variance).
    GOpt {
        #[arg(long)]
        actions: PathBuf,
        /// Comma-separated active indices; all actions when omitted.
        #[arg(long)]
        active: Option<String>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// c-optimal design via Elfving's characterization.
    COpt {
        #[arg(long)]
        actions: PathBuf,
        /// "last" for e_{d+1}, or comma-separated reals of length d+1.
        #[arg(long, default_value = "last")]
        c_target: String,
    },
    /// Δ-optimal design for a gap vector (JSON array file).
    DeltaOpt {
        #[arg(long)]
        actions: PathBuf,
        #[arg(long)]
        gaps: PathBuf,
    },
}

#[derive(Args)]
struct InstanceOut {
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum InstanceCommand {
    /// Worst-case lower-bound pair at horizon T (writes the chosen one).
    WorstCase {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        d: usize,
        #[arg(long, name = "T")]
        horizon: u64,
        #[arg(long, default_value_t = 1)]
        alt: usize,
        #[command(flatten)]
        dest: InstanceOut,
    },
    /// Gap-dependent lower-bound instance (d ≥ 4).
    Gap {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        dmin: f64,
        #[arg(long)]
        dneq: f64,
        #[arg(long, default_value_t = 1)]
        alt: usize,
        #[command(flatten)]
        dest: InstanceOut,
    },
    /// Small-dimension (d = 2, 3) gap lower-bound instance.
    SmallD {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        case: u8,
        #[arg(long, default_value_t = 0.05)]
        dmin: f64,
        #[arg(long, default_value_t = 0.1)]
        dneq: f64,
        #[command(flatten)]
        dest: InstanceOut,
    },
    /// Worst-case geometry with a large misleading bias.
    Adversarial {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        dest: InstanceOut,
    },
}

/// Validation failures exit 2, runtime failures exit 1.
enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

fn validation<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design { which } => run_design(which),
        Command::Kappa { actions } => run_kappa(actions),
        Command::Instance { family } => run_instance(family),
        Command::Simulate {
            config,
            out,
            workers,
        } => run_simulate(config, out, workers),
        Command::FitSlope { input } => run_fit_slope(input),
        Command::Compare {
            configs,
            out,
            workers,
        } => run_compare(configs, out, workers),
    }
}

fn load_actions(path: &PathBuf) -> Result<ActionSet, CliError> {
    let set = ActionSet::load(path).map_err(validation)?;
    set.ensure_valid().map_err(validation)?;
    Ok(set)
}

fn weights_json(weights: &BTreeMap<usize, f64>) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = weights
        .iter()
        .map(|(i, w)| (i.to_string(), json!(w)))
        .collect();
    serde_json::Value::Object(map)
}

fn print_design_result(weights: &BTreeMap<usize, f64>, value: f64, iterations: usize) {
    let doc = json!({
        "weights": weights_json(weights),
        "value": value,
        "iterations": iterations,
    });
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
}

fn run_design(cmd: DesignCommand) -> Result<(), CliError> {
    match cmd {
        DesignCommand::GOpt {
            actions,
            active,
            tol,
        } => {
            let set = load_actions(&actions)?;
            let active: Vec<usize> = match active {
                None => (0..set.len()).collect(),
                Some(text) => text
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(validation)?,
            };
            if active.iter().any(|&i| i >= set.len()) {
                return Err(CliError::Validation("active index out of range".into()));
            }
            let points: Vec<Vec<f64>> = active.iter().map(|&i| set.lifted(i)).collect();
            let core = design::g_design_core(&points, tol).map_err(runtime)?;
            let mut weights = BTreeMap::new();
            for (slot, &idx) in active.iter().enumerate() {
                if core.weights[slot] > 0.0 {
                    weights.insert(idx, core.weights[slot]);
                }
            }
            print_design_result(&weights, core.g_value, core.iterations);
            Ok(())
        }
        DesignCommand::COpt { actions, c_target } => {
            let set = load_actions(&actions)?;
            let c: Vec<f64> = if c_target == "last" {
                set.bias_direction()
            } else {
                let parsed: Vec<f64> = c_target
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(validation)?;
                if parsed.len() != set.d + 1 {
                    return Err(CliError::Validation(format!(
                        "c-target needs {} components",
                        set.d + 1
                    )));
                }
                parsed
            };
            let core = design::c_design_core(&set.lifted_all(), &c).map_err(runtime)?;
            let mut weights = BTreeMap::new();
            for (i, &w) in core.weights.iter().enumerate() {
                if w > 1e-12 {
                    weights.insert(i, w);
                }
            }
            print_design_result(&weights, core.variance, core.iterations);
            Ok(())
        }
        DesignCommand::DeltaOpt { actions, gaps } => {
            let set = load_actions(&actions)?;
            let text = std::fs::read_to_string(&gaps).map_err(validation)?;
            let gap_vec: Vec<f64> = serde_json::from_str(&text).map_err(validation)?;
            if gap_vec.len() != set.len() {
                return Err(CliError::Validation(format!(
                    "gap vector has {} entries, expected {}",
                    gap_vec.len(),
                    set.len()
                )));
            }
            let dd = design::delta_optimal_design(&set, &gap_vec).map_err(runtime)?;
            print_design_result(&dd.measure.weights, dd.kappa, dd.iterations);
            Ok(())
        }
    }
}

fn run_kappa(actions: PathBuf) -> Result<(), CliError> {
    let set = load_actions(&actions)?;
    let (kappa, dsn) = geometry::kappa_star(&set).map_err(runtime)?;
    let margin = geometry::kappa_star_margin_form(&set).map_err(runtime)?;
    let separator = geometry::separating_margin(&set).map_err(runtime)?;
    let doc = json!({
        "kappa_star": kappa,
        "margin_form": margin.kappa,
        "design": weights_json(&dsn.weights),
        "margin_ratio": separator.as_ref().map(|s| s.margin_ratio),
        "separating_normal": separator.as_ref().map(|s| s.normal.clone()),
    });
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    Ok(())
}

fn write_instance(inst: &ProblemInstance, out: &PathBuf) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(runtime)?;
    inst.actions.save(&out.join("actions.json")).map_err(runtime)?;
    inst.theta.save(&out.join("theta.json")).map_err(runtime)?;
    let meta = serde_json::to_string_pretty(&inst.meta).map_err(runtime)?;
    std::fs::write(out.join("meta.json"), meta).map_err(runtime)?;
    println!("wrote instance '{}' to {}", inst.meta.family, out.display());
    Ok(())
}

fn run_instance(cmd: InstanceCommand) -> Result<(), CliError> {
    match cmd {
        InstanceCommand::WorstCase {
            kappa,
            d,
            horizon,
            alt,
            dest,
        } => {
            let (p1, p2) = instances::worst_case_instance(kappa, d, horizon).map_err(validation)?;
            let inst = match alt {
                1 => p1,
                2 => p2,
                other => {
                    return Err(CliError::Validation(format!(
                        "worst-case alternative must be 1 or 2, got {other}"
                    )))
                }
            };
            write_instance(&inst, &dest.out)
        }
        InstanceCommand::Gap {
            kappa,
            d,
            dmin,
            dneq,
            alt,
            dest,
        } => {
            let inst = instances::gap_instance(kappa, d, dmin, dneq, alt).map_err(validation)?;
            write_instance(&inst, &dest.out)
        }
        InstanceCommand::SmallD {
            kappa,
            d,
            case,
            dmin,
            dneq,
            dest,
        } => {
            let inst =
                instances::small_d_gap_instance(d, case, kappa, dmin, dneq).map_err(validation)?;
            write_instance(&inst, &dest.out)
        }
        InstanceCommand::Adversarial { kappa, d, dest } => {
            let inst = instances::worst_case_adversarial(kappa, d).map_err(validation)?;
            write_instance(&inst, &dest.out)
        }
    }
}

fn run_simulate(config: PathBuf, out: PathBuf, workers: Option<usize>) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&config).map_err(validation)?;
    let workers = workers.unwrap_or_else(default_workers);
    let result = harness::simulate(&cfg, workers).map_err(runtime)?;
    harness::write_outputs(&cfg, &result, &out).map_err(runtime)?;
    println!(
        "{} reps of '{}' at T={}: final mean regret {:.4} (config {})",
        cfg.reps,
        cfg.algorithm,
        cfg.horizon,
        result.final_mean_regret(),
        result.config_hash
    );
    Ok(())
}

fn run_fit_slope(input: PathBuf) -> Result<(), CliError> {
    let rows = harness::read_csv(&input).map_err(validation)?;
    let curve = harness::mean_curve(&rows);
    let points: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .map(|&(t, r)| (t as f64, r))
        .collect();
    let fit = harness::fit_slope(&points).map_err(validation)?;
    println!("{}", serde_json::to_string_pretty(&fit).unwrap());
    Ok(())
}

fn run_compare(
    configs: Vec<PathBuf>,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let cfgs: Vec<ExperimentConfig> = configs
        .iter()
        .map(|p| ExperimentConfig::load(p))
        .collect::<Result<_, _>>()
        .map_err(validation)?;
    let workers = workers.unwrap_or_else(default_workers);
    let table = harness::compare(&cfgs, workers).map_err(runtime)?;
    let csv = table.to_csv();
    match out {
        Some(path) => std::fs::write(path, csv).map_err(runtime)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
