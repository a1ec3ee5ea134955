//! The three subcommands, writing their primary output to `out`.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use gatekeeping::verify::{
    fallback_oracle, fixed_sequence_oracle, monte_carlo_fwer, DependenceModel, Effect,
    NullConfiguration, SimTarget,
};
use gatekeeping::{run_procedure, run_two_layer, GatekeepingError};

use crate::config::{load_config, Config, Problem};
use crate::error::{CliError, Result};
use crate::render;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EchoFormat {
    /// Human-readable summary with the transition edge list.
    Text,
    /// Normalized JSON config that can be fed back in unchanged.
    Json,
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub nulls: String,
    pub model: String,
    pub reps: u64,
    pub seed: u64,
    pub effect: f64,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        action: "write",
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: &mut dyn Write, target: Option<&PathBuf>, text: &str) -> Result<()> {
    match target {
        Some(path) => write_file(path, text),
        None => out
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                action: "write",
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn flat_p(config: &Config, p: &gatekeeping::PValueSet) -> Vec<f64> {
    (0..config.sizes().len()).map(|i| p.family(i)[0]).collect()
}

pub fn run(
    config_path: &Path,
    output: Option<&PathBuf>,
    csv: Option<&PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let config = load_config(config_path)?;
    let p = config
        .p_values
        .as_ref()
        .ok_or_else(|| CliError::invalid("p_values", "missing required field for run"))?;
    let engine_error = |e: GatekeepingError| CliError::invalid("options", e);
    let (table, audit) = match &config.problem {
        Problem::Sequential(problem) => {
            let trail = run_procedure(problem, p, &config.options).map_err(engine_error)?;
            (
                render::trail_table(&config, &trail),
                render::trail_csv(&config, p, &trail),
            )
        }
        Problem::TwoLayer(problem) => {
            let trail = run_two_layer(problem, p, &config.options).map_err(engine_error)?;
            (
                render::trail_table(&config, &trail),
                render::trail_csv(&config, p, &trail),
            )
        }
        Problem::FallbackOracle(problem) => {
            let rejected = fallback_oracle(&flat_p(&config, p), &problem.initial_levels());
            oracle_outputs(&config, p, &rejected)
        }
        Problem::FixedSequenceOracle(problem) => {
            let rejected = fixed_sequence_oracle(&flat_p(&config, p), problem.alpha());
            oracle_outputs(&config, p, &rejected)
        }
    };
    if let Some(path) = csv {
        write_file(path, &audit)?;
    }
    emit(out, output, &table)
}

fn oracle_outputs(
    config: &Config,
    p: &gatekeeping::PValueSet,
    rejected: &BTreeSet<usize>,
) -> (String, String) {
    (
        render::oracle_table(config, p, rejected),
        render::oracle_csv(config, p, rejected),
    )
}

pub fn validate(config_path: &Path, format: EchoFormat, out: &mut dyn Write) -> Result<()> {
    let config = load_config(config_path)?;
    let text = match format {
        EchoFormat::Text => render::validation_echo(&config),
        EchoFormat::Json => {
            let mut s = serde_json::to_string_pretty(&config.to_raw()).expect("config serializes");
            s.push('\n');
            s
        }
    };
    emit(out, None, &text)
}

/// `all`, `none`, or a comma-separated list of hypothesis labels.
pub fn parse_nulls(spec: &str, config: &Config) -> Result<NullConfiguration> {
    let sizes = config.sizes();
    match spec.trim() {
        "all" => Ok(NullConfiguration::all_null(&sizes)),
        "none" => Ok(NullConfiguration::none_null(&sizes)),
        list => {
            let mut sets = vec![BTreeSet::new(); sizes.len()];
            for label in list.split(',').map(str::trim) {
                let (i, j) = config.position(label).ok_or_else(|| {
                    CliError::invalid("--nulls", format!("unknown hypothesis label {label:?}"))
                })?;
                sets[i].insert(j);
            }
            NullConfiguration::new(&sizes, sets).map_err(|e| CliError::invalid("--nulls", e))
        }
    }
}

/// `independent` or `equicorr:<rho>`.
pub fn parse_model(spec: &str) -> Result<DependenceModel> {
    let model = match spec.trim() {
        "independent" => DependenceModel::Independent,
        other => {
            let rho = other.strip_prefix("equicorr:").ok_or_else(|| {
                CliError::invalid(
                    "--model",
                    format!("expected independent or equicorr:<rho>, got {other:?}"),
                )
            })?;
            let rho: f64 = rho.parse().map_err(|_| {
                CliError::invalid("--model", format!("correlation {rho:?} is not a number"))
            })?;
            DependenceModel::Equicorrelated { rho }
        }
    };
    model
        .validate()
        .map_err(|e| CliError::invalid("--model", e))?;
    Ok(model)
}

pub fn simulate(
    config_path: &Path,
    args: &SimulateArgs,
    output: Option<&PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let config = load_config(config_path)?;
    let target = match &config.problem {
        Problem::Sequential(p) => SimTarget::Sequential(p),
        Problem::TwoLayer(p) => SimTarget::TwoLayer(p),
        _ => {
            return Err(CliError::invalid(
                "procedure",
                "simulate supports the sequential and two-layer procedures",
            ))
        }
    };
    let nulls = parse_nulls(&args.nulls, &config)?;
    let model = parse_model(&args.model)?;
    let effect = Effect::MeanShift(args.effect);
    effect
        .validate()
        .map_err(|e| CliError::invalid("--effect", e))?;
    if args.reps == 0 {
        return Err(CliError::invalid(
            "--reps",
            GatekeepingError::InvalidReplications,
        ));
    }
    let report = monte_carlo_fwer(target, &nulls, model, effect, args.reps, args.seed)
        .map_err(|e| CliError::invalid("simulate", e))?;
    emit(out, output, &report.to_record())
}
