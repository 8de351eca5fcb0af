mod config;
mod error;
mod record;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsg_core::homodyne::{mc_estimate, optimize_homodyne_angle, McConfig};
use fsg_core::metrology::{QfimModel, WeightVector};
use fsg_core::optimizer::{optimize, Objective, Problem};
use rayon::prelude::*;
use serde::Serialize;

use config::SweepConfig;
use error::CliError;
use record::{compute, Computed, HomodyneExtra, Request, SweepRecord};

#[derive(Parser)]
#[command(name = "fsg", version, about = "Fully-symmetric Gaussian probes for private distributed phase sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimise one configuration and print a JSON report.
    State {
        #[arg(long = "M")]
        modes: usize,
        #[arg(long = "nth")]
        n_th: f64,
        #[arg(long = "N")]
        n_tot: f64,
        #[arg(long, default_value = "precision")]
        objective: Objective,
        #[arg(long, value_enum, default_value = "isothermal")]
        qfim_model: ModelArg,
    },
    /// Run a parameter sweep described by a JSON config and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the `output` field of the config; stdout if neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the records as JSON on stdout instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// Write fig2.csv, fig3.csv and fig4.csv with the default reproduction grids.
    Figures {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        which: Vec<u8>,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Monte-Carlo check of the homodyne Cramér-Rao bound for a common phase shift.
    Mc {
        #[arg(long = "M")]
        modes: usize,
        #[arg(long = "nth")]
        n_th: f64,
        #[arg(long = "N")]
        n_tot: f64,
        #[arg(long, default_value = "privacy")]
        objective: Objective,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 300)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModelArg {
    Isothermal,
    PureStateFormula,
}

impl From<ModelArg> for QfimModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Isothermal => QfimModel::Isothermal,
            ModelArg::PureStateFormula => QfimModel::PureStateFormula,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fsg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::State { modes, n_th, n_tot, objective, qfim_model } => {
            cmd_state(modes, n_th, n_tot, objective, qfim_model.into())
        }
        Command::Sweep { config, out, json } => cmd_sweep(&config, out, json),
        Command::Figures { which, outdir } => cmd_figures(&which, &outdir),
        Command::Mc { modes, n_th, n_tot, objective, samples, trials, seed } => {
            cmd_mc(modes, n_th, n_tot, objective, McConfig { n_samples: samples, trials, seed })
        }
    }
}

fn check_args(modes: usize, n_th: f64, n_tot: f64) -> Result<(), CliError> {
    if modes < 2 {
        return Err(CliError::Config(format!("--M must be at least 2, got {modes}")));
    }
    if !(n_th.is_finite() && n_th >= 0.0) {
        return Err(CliError::Config(format!("--nth must be finite and >= 0, got {n_th}")));
    }
    if !(n_tot.is_finite() && n_tot >= 0.0) {
        return Err(CliError::Config(format!("--N must be finite and >= 0, got {n_tot}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct StateReport {
    #[serde(flatten)]
    record: SweepRecord,
    qfim_model: QfimModel,
    converged: bool,
    iterations: usize,
    #[serde(flatten)]
    extension: HomodyneExtra,
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{text}").map_err(|e| CliError::io("<stdout>", e))
}

fn cmd_state(modes: usize, n_th: f64, n_tot: f64, objective: Objective, model: QfimModel) -> Result<(), CliError> {
    check_args(modes, n_th, n_tot)?;
    // surface infeasibility as an error here rather than as an empty row
    Problem::new(modes, n_th, n_tot)?;
    let req = Request {
        modes,
        n_th,
        n_tot,
        objective,
        homodyne: true,
        weights: WeightVector::mean(modes),
        model,
    };
    let Computed { record, opt, extra } = compute(&req)?;
    let opt = opt.expect("feasible budget");
    print_json(&StateReport {
        record,
        qfim_model: model,
        converged: opt.converged,
        iterations: opt.iterations,
        extension: extra.unwrap_or(HomodyneExtra { privacy_hd: None, direct_theta_hd: None, direct_xi_hd: None }),
    })
}

/// Rows in lexicographic order of (M, n_th, N, objective).
fn sweep_records(cfg: &SweepConfig) -> Result<Vec<SweepRecord>, CliError> {
    let n_values = cfg.n_values();
    let mut jobs = Vec::new();
    for &m in &cfg.m_list {
        for &n_th in &cfg.n_th_list {
            for &n in &n_values {
                for objective in cfg.objective.objectives() {
                    jobs.push(Request {
                        modes: m,
                        n_th,
                        n_tot: n,
                        objective,
                        homodyne: cfg.homodyne,
                        weights: cfg.weights_for(m),
                        model: cfg.qfim_model,
                    });
                }
            }
        }
    }
    jobs.par_iter()
        .map(|req| compute(req).map(|c| c.record).map_err(CliError::from))
        .collect()
}

fn write_csv<W: std::io::Write>(w: W, rows: &[SweepRecord]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_csv_file(path: &Path, rows: &[SweepRecord]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), rows).map_err(|e| CliError::io(path, e.into()))
}

fn cmd_sweep(config: &Path, out: Option<PathBuf>, json: bool) -> Result<(), CliError> {
    let text = fs::read_to_string(config).map_err(|e| CliError::io(config, e))?;
    let cfg = SweepConfig::from_json(&text)?;
    let rows = sweep_records(&cfg)?;
    if json {
        return print_json(&rows);
    }
    match out.or(cfg.output) {
        Some(path) => write_csv_file(&path, &rows),
        None => write_csv(std::io::stdout().lock(), &rows).map_err(|e| CliError::io("<stdout>", e.into())),
    }
}

fn cmd_figures(which: &[u8], outdir: &Path) -> Result<(), CliError> {
    if let Some(bad) = which.iter().find(|w| !(2..=4).contains(*w)) {
        return Err(CliError::Config(format!("--which accepts 2, 3 and 4, got {bad}")));
    }
    fs::create_dir_all(outdir).map_err(|e| CliError::io(outdir, e))?;
    for &w in which {
        let rows = sweep_records(&SweepConfig::figure(w))?;
        write_csv_file(&outdir.join(format!("fig{w}.csv")), &rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct McOutput {
    #[serde(rename = "M")]
    modes: usize,
    n_th: f64,
    #[serde(rename = "N_tot")]
    n_tot: f64,
    objective: Objective,
    theta_hd: f64,
    #[serde(flatten)]
    report: fsg_core::homodyne::McReport,
}

fn cmd_mc(modes: usize, n_th: f64, n_tot: f64, objective: Objective, mc: McConfig) -> Result<(), CliError> {
    check_args(modes, n_th, n_tot)?;
    let mc = McConfig::new(mc.n_samples, mc.trials, mc.seed)?;
    let problem = Problem::new(modes, n_th, n_tot)?;
    let state = optimize(&problem, objective)?;
    let angle = optimize_homodyne_angle(&state.blocks, &problem.weights)?;
    let report = mc_estimate(&state.blocks, angle.theta_star, &mc)?;
    print_json(&McOutput { modes, n_th, n_tot, objective, theta_hd: angle.theta_star, report })
}
