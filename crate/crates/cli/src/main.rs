use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use wsn_core::accuracy::{accuracy_for_assignment, AccuracyDocument, Method, MonteCarloConfig, NoiseModel};
use wsn_core::clustering::{assign_clusters, member_diagnostics};
use wsn_core::deployment::{Deployment, FieldSpec, HeadGrid};
use wsn_core::experiments::{self, parse_noise_profile, ExperimentConfig, ExperimentId, DEFAULT_SEED, FIELD_THETA1};
use wsn_core::spatial_stats::CorrelationParams;

#[derive(Parser, Debug)]
#[command(name = "wsn-sim", version, about = "Seeded sensor-field clustering and data-accuracy simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Common {
    /// TOML file supplying any of these flags; flags given here win.
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta1: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta2: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    tau: Option<f64>,
    /// `default`, `noiseless`, or `s2,n2,nt2,nch2,power`.
    #[arg(long, global = true)]
    noise_profile: Option<String>,
    #[arg(long, global = true)]
    runs: Option<u32>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Plateau tolerance for the optimal-cluster search.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    normals: Option<u32>,
}

impl Common {
    /// Fills every unset field from `file`.
    fn or(self, file: Common) -> Common {
        Common {
            config: self.config,
            seed: self.seed.or(file.seed),
            theta1: self.theta1.or(file.theta1),
            theta2: self.theta2.or(file.theta2),
            tau: self.tau.or(file.tau),
            noise_profile: self.noise_profile.or(file.noise_profile),
            runs: self.runs.or(file.runs),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            epsilon: self.epsilon.or(file.epsilon),
            normals: self.normals.or(file.normals),
        }
    }

    fn noise(&self) -> Result<NoiseModel> {
        Ok(match &self.noise_profile {
            Some(s) => parse_noise_profile(s)?,
            None => NoiseModel::default_profile(),
        })
    }

    fn params(&self) -> Result<CorrelationParams> {
        Ok(CorrelationParams::new(
            self.theta1.unwrap_or(FIELD_THETA1),
            self.theta2.unwrap_or(1.0),
            self.tau.unwrap_or(0.8),
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a deployment (grid heads, random normals, tracing points).
    Deploy(FieldArgs),
    /// Assign normals to their nearest head.
    Cluster {
        #[command(flatten)]
        source: Source,
        /// Per-member distance and kernel diagnostics instead of the member lists.
        #[arg(long)]
        diagnostics: bool,
    },
    /// Per-cluster data accuracy.
    Accuracy {
        #[command(flatten)]
        source: Source,
        /// Monte-Carlo sample count; closed form when absent.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
    /// Run one of the preset experiments.
    Experiment {
        #[arg(value_parser = parse_experiment)]
        id: ExperimentId,
    },
}

#[derive(Args, Debug, Clone)]
struct FieldArgs {
    #[arg(long, default_value_t = 120.0)]
    width: f64,
    #[arg(long, default_value_t = 120.0)]
    height: f64,
    #[arg(long, default_value_t = 5)]
    rows: u32,
    #[arg(long, default_value_t = 5)]
    cols: u32,
}

#[derive(Args, Debug, Clone)]
struct Source {
    /// Deployment file written by `deploy`; a fresh one is generated when absent.
    #[arg(long)]
    deployment: Option<PathBuf>,
    #[command(flatten)]
    field: FieldArgs,
}

fn parse_experiment(s: &str) -> std::result::Result<ExperimentId, String> {
    s.parse().map_err(|e: wsn_core::Error| e.to_string())
}

fn load_file_config(path: &Path) -> Result<Common> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn generate(field: &FieldArgs, common: &Common) -> Result<Deployment> {
    let grid = HeadGrid { rows: field.rows, cols: field.cols };
    Ok(Deployment::random_grid(
        FieldSpec::new(field.width, field.height)?,
        grid,
        common.normals.unwrap_or(100),
        common.seed.unwrap_or(DEFAULT_SEED),
    )?)
}

fn load_or_generate(source: &Source, common: &Common) -> Result<Deployment> {
    match &source.deployment {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading deployment {}", path.display()))?;
            Ok(Deployment::from_text(&text)?)
        }
        None => generate(&source.field, common),
    }
}

fn experiment_config(id: ExperimentId, common: &Common) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::preset(id);
    if let Some(seed) = common.seed {
        c.seed = seed;
    }
    if let Some(t) = common.theta1 {
        c.set_theta1(t);
    }
    if let Some(t) = common.theta2 {
        c.theta2 = t;
    }
    if let Some(t) = common.tau {
        c.tau = t;
    }
    if let Some(r) = common.runs {
        c.runs = r;
    }
    if let Some(e) = common.epsilon {
        c.epsilon = e;
    }
    if let Some(n) = common.normals {
        c.normals = n;
    }
    if common.noise_profile.is_some() {
        c.noise = common.noise()?;
    }
    c.validate()?;
    Ok(c)
}

fn render(command: &Command, common: &Common, format: Format) -> Result<String> {
    Ok(match command {
        Command::Deploy(field) => {
            let d = generate(field, common)?;
            match format {
                Format::Csv => d.to_text(),
                Format::Json => bail!("deploy only supports the text (csv) format"),
            }
        }
        Command::Cluster { source, diagnostics } => {
            let d = load_or_generate(source, common)?;
            let a = assign_clusters(&d)?;
            match (diagnostics, format) {
                (false, Format::Csv) => a.to_csv(),
                (false, Format::Json) => serde_json::to_string_pretty(&a.clusters().collect::<Vec<_>>())?,
                (true, f) => {
                    let diag = member_diagnostics(&a, &d, &common.params()?)?;
                    match f {
                        Format::Json => serde_json::to_string_pretty(&diag)?,
                        Format::Csv => {
                            let mut out = String::from("head_id,member_id,distance,kernel,strongly_correlated\n");
                            for m in diag {
                                out.push_str(&format!(
                                    "{},{},{:.6},{:.6},{}\n",
                                    m.head, m.member, m.distance, m.kernel, m.strongly_correlated
                                ));
                            }
                            out
                        }
                    }
                }
            }
        }
        Command::Accuracy { source, samples, workers } => {
            let d = load_or_generate(source, common)?;
            let a = assign_clusters(&d)?;
            let p = common.params()?;
            let noise = common.noise()?;
            let seed = common.seed.unwrap_or(DEFAULT_SEED);
            let method = match samples {
                Some(n) => Method::MonteCarlo(MonteCarloConfig::new(*n, seed, *workers)?),
                None => Method::ClosedForm,
            };
            let doc = AccuracyDocument::new(&p, &noise, seed, accuracy_for_assignment(&a, &d, &noise, &p, &method)?);
            match format {
                Format::Csv => doc.to_csv(),
                Format::Json => doc.to_json(),
            }
        }
        Command::Experiment { id } => {
            let c = experiment_config(*id, common)?;
            let out = experiments::run(&c)?;
            match format {
                Format::Csv => out.to_csv(&c),
                Format::Json => out.to_json(&c),
            }
        }
    })
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.common.config {
        Some(path) => cli.common.clone().or(load_file_config(path)?),
        None => cli.common.clone(),
    };
    let text = render(&cli.command, &common, common.format.unwrap_or(Format::Csv))?;
    match &common.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wsn-sim: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
