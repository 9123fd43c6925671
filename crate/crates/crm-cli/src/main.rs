//! crm-lab: sample, transform and verify completely random discrete measures.
//!
//! Exit codes: 0 success / check passed, 1 check failed, 2 configuration or
//! usage error.

use clap::{Args, Parser, Subcommand};
use crm_core::density::{
    current_log_density, diagnose_diffeo_qi, diffeo_log_density, hellinger_integral,
    partial_log_density, semidirect_log_density, LogDensity, QiVerdict,
};
use crm_core::report::ReportJson;
use crm_core::verify::{
    verify_current, verify_diffeo, verify_gamma_marginal, verify_laplace, verify_partial,
    verify_semidirect, VerifyReport,
};
use crm_core::{Config, CrmError, DiscreteMeasure, Window};
use serde::Serialize;
use std::fs;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "crm-lab", about = "simulation and verification of completely random discrete measures", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Run configuration file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline overrides, e.g. --set seed=7 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a measure from the truncated law and emit its atoms as CSV.
    Sample {
        #[command(flatten)]
        common: ConfigArgs,
        /// Replicate index within the seeded run.
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// Apply the configured group element to a measure read from CSV.
    Transform {
        #[command(flatten)]
        common: ConfigArgs,
        /// Input CSV of atoms (x_1,...,weight).
        #[arg(long)]
        input: PathBuf,
    },
    /// Evaluate a transformation log-density at a measure read from CSV.
    Density {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long)]
        input: PathBuf,
        /// Which density: current, diffeo, semidirect or partial.
        #[arg(long)]
        which: String,
        /// Restriction level for the partial density.
        #[arg(long)]
        level: Option<u32>,
    },
    /// Check the current change-of-variables identity by paired Monte Carlo.
    VerifyCurrent(ConfigArgs),
    /// Check the diffeomorphism identity (errors when no density exists).
    VerifyDiffeo(ConfigArgs),
    /// Check the semidirect-product identity.
    VerifySemidirect(ConfigArgs),
    /// Check the level-n partial identity.
    VerifyPartial(ConfigArgs),
    /// Compare the Monte Carlo Laplace functional with its reference value.
    VerifyLaplace(ConfigArgs),
    /// KS test of the region marginal against the gamma law.
    VerifyMarginal(ConfigArgs),
    /// Evaluate the Hellinger-type integral at one cutoff.
    Hellinger {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
    },
    /// Classify the eps -> 0 behavior of the Hellinger integral.
    DiagnoseQi(ConfigArgs),
    /// Summarize verification report JSON files.
    Report {
        /// Report files produced by the verify commands.
        files: Vec<PathBuf>,
        /// Also write a plot-friendly CSV summary here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn load_config(common: &ConfigArgs) -> crm_core::Result<Config> {
    let mut config = match &common.config {
        Some(path) => Config::parse(&fs::read_to_string(path)?)?,
        None => Config::default(),
    };
    config.override_with(&common.sets)?;
    Ok(config)
}

fn emit(common: &ConfigArgs, text: &str) -> crm_core::Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn read_measure(path: &PathBuf) -> crm_core::Result<DiscreteMeasure> {
    DiscreteMeasure::read_csv(BufReader::new(fs::File::open(path)?))
}

#[derive(Serialize)]
struct DensityJson {
    op: String,
    atom_term: f64,
    correction_term: f64,
    log_value: f64,
    value: f64,
    level_k: Option<u64>,
}

impl DensityJson {
    fn new(op: &str, d: LogDensity, level_k: Option<u64>) -> Self {
        DensityJson {
            op: op.to_string(),
            atom_term: d.atom_term,
            correction_term: d.correction_term,
            log_value: d.log_value(),
            value: d.value(),
            level_k,
        }
    }
}

#[derive(Serialize)]
struct HellingerJson {
    eps: Vec<f64>,
    values: Vec<f64>,
    verdict: String,
    fitted_log_slope: f64,
}

fn verdict_str(v: QiVerdict) -> &'static str {
    match v {
        QiVerdict::Converges => "converges",
        QiVerdict::Diverges => "diverges",
        QiVerdict::Inconclusive => "inconclusive",
    }
}

fn run_verify<F>(common: &ConfigArgs, op: &str, f: F) -> crm_core::Result<bool>
where
    F: FnOnce(&Config) -> crm_core::Result<VerifyReport>,
{
    let config = load_config(common)?;
    let start = Instant::now();
    let report = f(&config)?;
    let json = ReportJson::from_verify(op, &config, &report, start.elapsed().as_millis());
    emit(common, &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()))?;
    Ok(report.pass)
}

fn laplace_region(config: &Config) -> crm_core::Result<Window> {
    match config.get("functional.region") {
        Some(_) => Ok(config.functional()?.region),
        None => config.window(),
    }
}

fn run(cli: Cli) -> crm_core::Result<bool> {
    match cli.command {
        Command::Sample { common, replicate } => {
            let config = load_config(&common)?;
            let sampler = crm_core::Sampler::new(crm_core::SamplerSpec {
                model: config.model()?,
                window: config.window()?,
                eps_trunc: config.verify_options()?.eps_trunc,
                seed: config.verify_options()?.seed,
            })?;
            let eta = sampler.sample_replicate(replicate)?;
            let mut buf = Vec::new();
            eta.write_csv(config.window()?.dim(), &mut buf)?;
            emit(&common, std::str::from_utf8(&buf).unwrap())?;
            Ok(true)
        }
        Command::Transform { common, input } => {
            let config = load_config(&common)?;
            let eta = read_measure(&input)?;
            let out = config.group()?.apply(&eta)?;
            let mut buf = Vec::new();
            out.write_csv(config.window()?.dim(), &mut buf)?;
            emit(&common, std::str::from_utf8(&buf).unwrap())?;
            Ok(true)
        }
        Command::Density { common, input, which, level } => {
            let config = load_config(&common)?;
            let model = config.model()?;
            let window = config.window()?;
            let eta = read_measure(&input)?;
            let json = match which.as_str() {
                "current" => DensityJson::new(
                    "current",
                    current_log_density(&model, &window, &config.current()?, &eta)?,
                    None,
                ),
                "diffeo" => DensityJson::new(
                    "diffeo",
                    diffeo_log_density(&model, &window, &config.diffeo()?, &eta)?,
                    None,
                ),
                "semidirect" => DensityJson::new(
                    "semidirect",
                    semidirect_log_density(&model, &window, &config.group()?, &eta)?,
                    None,
                ),
                "partial" => {
                    let n = level.ok_or_else(|| {
                        CrmError::Config("--level is required for the partial density".into())
                    })?;
                    let (d, k) = partial_log_density(&model, &window, &config.group()?, &eta, n)?;
                    DensityJson::new("partial", d, Some(k))
                }
                other => {
                    return Err(CrmError::Config(format!("unknown density kind `{other}`")))
                }
            };
            emit(&common, &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()))?;
            Ok(true)
        }
        Command::VerifyCurrent(common) => run_verify(&common, "verify-current", |c| {
            verify_current(&c.model()?, &c.window()?, &c.current()?, &c.functional()?, &c.verify_options()?)
        }),
        Command::VerifyDiffeo(common) => run_verify(&common, "verify-diffeo", |c| {
            verify_diffeo(&c.model()?, &c.window()?, &c.diffeo()?, &c.functional()?, &c.verify_options()?)
        }),
        Command::VerifySemidirect(common) => run_verify(&common, "verify-semidirect", |c| {
            verify_semidirect(&c.model()?, &c.window()?, &c.group()?, &c.functional()?, &c.verify_options()?)
        }),
        Command::VerifyPartial(common) => run_verify(&common, "verify-partial", |c| {
            verify_partial(&c.model()?, &c.window()?, &c.group()?, &c.functional()?, &c.verify_options()?)
        }),
        Command::VerifyLaplace(common) => run_verify(&common, "verify-laplace", |c| {
            let region = laplace_region(c)?;
            let t = c.f64_or("functional.t", 1.0)?;
            verify_laplace(&c.model()?, &c.window()?, &region, t, &c.verify_options()?)
        }),
        Command::VerifyMarginal(common) => {
            let config = load_config(&common)?;
            let region = laplace_region(&config)?;
            let alpha_level = config.f64_or("alpha_level", 0.01)?;
            let r = verify_gamma_marginal(
                &config.model()?,
                &config.window()?,
                &region,
                alpha_level,
                &config.verify_options()?,
            )?;
            #[derive(Serialize)]
            struct MarginalJson {
                op: String,
                statistic: f64,
                p_value: f64,
                pass: bool,
                shape: f64,
                scale: f64,
                seed: u64,
            }
            let json = MarginalJson {
                op: "verify-marginal".into(),
                statistic: r.test.statistic,
                p_value: r.test.p_value,
                pass: r.pass,
                shape: r.shape,
                scale: r.scale,
                seed: r.seed,
            };
            emit(&common, &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()))?;
            Ok(r.pass)
        }
        Command::Hellinger { common, eps } => {
            let config = load_config(&common)?;
            let h = hellinger_integral(&config.model()?, &config.window()?, &config.diffeo()?, eps)?;
            let json = HellingerJson {
                eps: vec![eps],
                values: vec![h],
                verdict: "n/a".into(),
                fitted_log_slope: 0.0,
            };
            emit(&common, &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()))?;
            Ok(true)
        }
        Command::DiagnoseQi(common) => {
            let config = load_config(&common)?;
            let r = diagnose_diffeo_qi(&config.model()?, &config.window()?, &config.diffeo()?)?;
            let json = HellingerJson {
                eps: r.eps.clone(),
                values: r.values.clone(),
                verdict: verdict_str(r.verdict).into(),
                fitted_log_slope: r.fitted_log_slope,
            };
            emit(&common, &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()))?;
            Ok(true)
        }
        Command::Report { files, csv } => {
            if files.is_empty() {
                return Err(CrmError::Config("report needs at least one JSON file".into()));
            }
            let mut rows = Vec::new();
            let mut all_pass = true;
            for path in &files {
                let r: ReportJson = serde_json::from_str(&fs::read_to_string(path)?)
                    .map_err(|e| CrmError::Config(format!("{}: {e}", path.display())))?;
                println!(
                    "{:<20} z = {:>8.3}  lhs = {:.6} ({:.2e})  rhs = {:.6} ({:.2e})  {}",
                    r.op,
                    r.z,
                    r.lhs.mean,
                    r.lhs.se,
                    r.rhs.mean,
                    r.rhs.se,
                    if r.pass { "pass" } else { "FAIL" }
                );
                all_pass &= r.pass;
                rows.push(r);
            }
            println!(
                "{}/{} checks passed",
                rows.iter().filter(|r| r.pass).count(),
                rows.len()
            );
            if let Some(path) = csv {
                let mut out = String::from("op,lhs_mean,lhs_se,rhs_mean,rhs_se,z,pass,seed,runtime_ms\n");
                for r in &rows {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{}\n",
                        r.op, r.lhs.mean, r.lhs.se, r.rhs.mean, r.rhs.se, r.z, r.pass, r.seed, r.runtime_ms
                    ));
                }
                fs::write(path, out)?;
            }
            Ok(all_pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
