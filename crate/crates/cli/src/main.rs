//! `taa`: anti-aliased downsampling experiments from the command line.

mod error;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{debug, info, warn};
use serde_json::json;
use taa_core::{
    aliasing_error, average_pool, build_tlpm_kernel, cutoff_sweep, fit, gen_synthetic, lpf_average_pool_with,
    lpf_uniform_sample, max_pool, tlpm_convolve, truncate_weights, uniform_sample, CutoffFrequency, Dataset,
    DownsampleSpec, KernelFamily, LearnerConfig, SyntheticTaskSpec, TlpmParams,
};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "taa", version, about = "Anti-aliased temporal downsampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset as CSV files.
    Gen {
        /// Task spec JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Downsample a feature CSV and report its aliasing error.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        factor: u64,
        /// A cutoff in (0, 0.5], `auto` for 0.5/factor, or `none` for no filtering.
        #[arg(long)]
        cutoff: CutoffArg,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-channel spectrum difference matrix.
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Pool one window of a feature CSV into a vector per channel.
    Pool {
        #[arg(long)]
        input: PathBuf,
        /// Half-open step range `start:end`.
        #[arg(long)]
        window: WindowArg,
        #[arg(long, value_enum)]
        method: PoolMethod,
        /// Required by `lpf`.
        #[arg(long)]
        cutoff: Option<f64>,
        #[arg(long, value_enum, default_value_t = Family::Sinc)]
        family: Family,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit cutoff frequencies on a dataset written by `gen`.
    Learn {
        #[arg(long)]
        data: PathBuf,
        /// Learner config JSON.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        factor: u64,
        #[arg(long)]
        out: PathBuf,
        /// Fixed cutoffs to evaluate alongside the fit.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
    },
    /// Filter a feature CSV with a temporal low-pass mixture.
    Tlpm {
        #[arg(long)]
        input: PathBuf,
        /// Mixture parameter JSON.
        #[arg(long)]
        params: PathBuf,
        /// Truncation half-width in samples.
        #[arg(long)]
        truncate: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug)]
enum CutoffArg {
    Auto,
    None,
    Fixed(f64),
}

impl std::str::FromStr for CutoffArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(CutoffArg::Auto),
            "none" => Ok(CutoffArg::None),
            _ => s
                .parse::<f64>()
                .map(CutoffArg::Fixed)
                .map_err(|_| format!("expected a number, `auto` or `none`, got {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct WindowArg {
    start: usize,
    end: usize,
}

impl std::str::FromStr for WindowArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("window {s:?} is not start:end"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("window bound {v:?} is not an integer"));
        Ok(WindowArg { start: parse(a)?, end: parse(b)? })
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PoolMethod {
    Avg,
    Max,
    Lpf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Sinc,
    Gaussian,
}

fn cutoff(v: f64, what: &str) -> Result<CutoffFrequency, CliError> {
    CutoffFrequency::new(v).map_err(|e| CliError::input(format!("{what}: {e}")))
}

fn cmd_gen(spec_path: &Path, out: &Path) -> Result<(), CliError> {
    let spec: SyntheticTaskSpec = io::read_json(spec_path)?;
    spec.validate().map_err(|e| CliError::input(format!("{}: {e}", spec_path.display())))?;
    let data = gen_synthetic(&spec)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    for (i, x) in data.instances.iter().enumerate() {
        io::write_features(&out.join(io::instance_file(i)), x)?;
    }
    io::write_labels(&out.join("labels.csv"), &data.labels)?;
    info!("wrote {} instances to {}", data.len(), out.display());
    Ok(())
}

fn cmd_analyze(
    input: &Path,
    factor: usize,
    arg: CutoffArg,
    out: &Path,
    heatmap: Option<&Path>,
) -> Result<(), CliError> {
    let x = io::read_features(input)?;
    if factor > x.len() {
        return Err(CliError::infeasible(format!("factor {factor} exceeds signal length {}", x.len())));
    }
    let fc = match arg {
        CutoffArg::None => None,
        CutoffArg::Auto => Some(CutoffFrequency::for_factor(factor)?),
        CutoffArg::Fixed(v) => Some(cutoff(v, "cutoff")?),
    };
    let spec = DownsampleSpec::stride(factor);
    let sampled = match fc {
        Some(fc) => lpf_uniform_sample(&x, &spec, fc)?,
        None => uniform_sample(&x, &spec)?,
    };
    debug!("kept {} of {} steps", sampled.len(), x.len());
    let report = aliasing_error(&x, &sampled, factor)?;
    io::finite("aliasing report", &[report.low_band_energy_error, report.full_band_energy_error])?;
    let cutoff_json = fc.map(|c| c.value());
    io::write_report(
        out,
        "analyze",
        json!({"input": input, "factor": factor, "cutoff": match arg {
            CutoffArg::Auto => json!("auto"),
            CutoffArg::None => json!("none"),
            CutoffArg::Fixed(v) => json!(v),
        }}),
        json!({
            "low_band_energy_error": report.low_band_energy_error,
            "full_band_energy_error": report.full_band_energy_error,
            "factor": factor,
            "cutoff": cutoff_json,
        }),
    )?;
    if let Some(path) = heatmap {
        io::write_heatmap(path, &report.bin_frequencies, &report.per_channel_diff)?;
    }
    info!("low-band error {:e}", report.low_band_energy_error);
    Ok(())
}

fn cmd_pool(
    input: &Path,
    window: WindowArg,
    method: PoolMethod,
    cutoff_arg: Option<f64>,
    family: Family,
    out: &Path,
) -> Result<(), CliError> {
    let x = io::read_features(input)?;
    if window.start >= window.end || window.end > x.len() {
        return Err(CliError::input(format!(
            "window {}:{} must satisfy start < end <= {}",
            window.start,
            window.end,
            x.len()
        )));
    }
    let range = window.start..window.end;
    let pooled = match method {
        PoolMethod::Avg => average_pool(&x, range)?,
        PoolMethod::Max => max_pool(&x, range)?,
        PoolMethod::Lpf => {
            let v = cutoff_arg.ok_or_else(|| CliError::input("cutoff: method lpf requires --cutoff"))?;
            let fam = match family {
                Family::Sinc => KernelFamily::Sinc,
                Family::Gaussian => KernelFamily::Gaussian,
            };
            lpf_average_pool_with(&x, range, cutoff(v, "cutoff")?, fam)?
        }
    };
    io::finite("pooled", &pooled)?;
    let method_name = format!("{method:?}").to_lowercase();
    let family_name = format!("{family:?}").to_lowercase();
    io::write_report(
        out,
        "pool",
        json!({
            "input": input,
            "window": [window.start, window.end],
            "method": method_name,
            "cutoff": cutoff_arg,
            "family": family_name,
        }),
        json!({"pooled": pooled}),
    )
}

fn load_dataset(dir: &Path) -> Result<Dataset, CliError> {
    let pairs = io::read_labels(&dir.join("labels.csv"))?;
    let mut instances = Vec::with_capacity(pairs.len());
    let mut labels = Vec::with_capacity(pairs.len());
    for (id, class) in pairs {
        instances.push(io::read_features(&dir.join(io::instance_file(id)))?);
        labels.push(class);
    }
    Ok(Dataset::new(instances, labels)?)
}

fn cmd_learn(
    data: &Path,
    config_path: &Path,
    factor: usize,
    out: &Path,
    sweep: Option<&[f64]>,
) -> Result<(), CliError> {
    let config: LearnerConfig = io::read_json(config_path)?;
    config.validate().map_err(|e| CliError::input(format!("{}: {e}", config_path.display())))?;
    let dataset = load_dataset(data)?;
    let grid = sweep.map(|s| s.iter().map(|&v| cutoff(v, "sweep")).collect::<Result<Vec<_>, _>>()).transpose()?;
    info!("fitting {} instances for up to {} epochs", dataset.len(), config.epochs);
    let params = json!({"data": data, "config": config, "factor": factor, "sweep": sweep});
    // surface shape and feasibility problems before any descent
    taa_core::learner::Problem::new(&dataset, factor)?;

    let (trace, failure) = match fit(&dataset, &config, factor) {
        Ok(trace) => (trace, None),
        Err(e) => {
            warn!("{e}");
            (e.trace.clone(), Some(e))
        }
    };
    let sweep_rows = match &grid {
        Some(g) => Some(cutoff_sweep(&dataset, g, factor)?),
        None => None,
    };
    let mut results = json!({
        "trace": trace.losses,
        "final_cutoffs": trace.final_cutoffs.iter().map(|c| c.value()).collect::<Vec<_>>(),
        "final_logits": trace.final_logits,
        "converged": trace.converged,
    });
    if trace.final_loss.is_finite() {
        results["final_loss"] = json!(trace.final_loss);
    }
    if let Some(rows) = &sweep_rows {
        io::finite("sweep", &rows.iter().flat_map(|r| [r.loss, r.accuracy]).collect::<Vec<_>>())?;
        results["sweep"] = json!(rows);
    }
    if let Some(e) = &failure {
        results["diverged"] = json!({"epoch": e.epoch, "reason": e.reason});
    }
    io::finite("final_logits", &trace.final_logits)?;
    io::write_report(out, "learn", params, results)?;
    match failure {
        Some(e) => Err(CliError::not_converged(e.to_string())),
        None if !trace.converged => Err(CliError::not_converged(format!(
            "no plateau within {} epochs (final loss {})",
            config.epochs, trace.final_loss
        ))),
        None => {
            info!("final loss {} after {} epochs", trace.final_loss, trace.losses.len());
            Ok(())
        }
    }
}

fn cmd_tlpm(input: &Path, params_path: &Path, truncate: Option<f64>, out: &Path) -> Result<(), CliError> {
    let x = io::read_features(input)?;
    let params: TlpmParams = io::read_json(params_path)?;
    let mut kernel = build_tlpm_kernel(&params)?;
    if let Some(l) = truncate {
        kernel = truncate_weights(&kernel, l)?;
    }
    let y = tlpm_convolve(&x, &kernel)?;
    io::write_features(out, &y)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { spec, out } => cmd_gen(&spec, &out),
        Command::Analyze { input, factor, cutoff, out, heatmap } => {
            cmd_analyze(&input, factor as usize, cutoff, &out, heatmap.as_deref())
        }
        Command::Pool { input, window, method, cutoff, family, out } => {
            cmd_pool(&input, window, method, cutoff, family, &out)
        }
        Command::Learn { data, config, factor, out, sweep } => {
            cmd_learn(&data, &config, factor as usize, &out, sweep.as_deref())
        }
        Command::Tlpm { input, params, truncate, out } => cmd_tlpm(&input, &params, truncate, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TAA_LOG", "error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
