//! `uisearch` command line.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O or internal failure |
//! | 2 | usage error or invalid configuration |
//! | 3 | fixed-point solver did not converge |
//! | 4 | infeasible calibration target |
//! | 5 | policy never accepts an offer (expectations diverge) |
//!
//! Data goes to stdout (or `--out`); diagnostics go to stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{parse_config, ConfigError, PartialConfig, RunConfig};
use crate::error::Error;
use crate::evaluate::{evaluate_belief, loss_pct, PolicyProfile};
use crate::experiments::{calibrate_z, parse_grid, sweep_beliefs, Mode, Vary};
use crate::montecarlo::{simulate_many, trace_spells, SpellRecord};
use crate::params::required_horizon;
use crate::schedule::ReservationSchedule;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_DIVERGENCE: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "uisearch",
    version,
    about = "Job search with expiring, possibly extended unemployment benefits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write data to PATH instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Cap on worker threads. Results do not depend on it.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Clone, Args)]
struct Overrides {
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    z: Option<f64>,
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Benefit entitlement N.
    #[arg(long = "entitlement", visible_alias = "n", global = true)]
    entitlement: Option<usize>,
    #[arg(long, global = true)]
    delta_true: Option<f64>,
    #[arg(long, global = true)]
    len_true: Option<usize>,
    #[arg(long, global = true)]
    delta_belief: Option<f64>,
    #[arg(long, global = true)]
    len_belief: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true)]
    max_periods: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    spells: Option<u64>,
}

impl From<Overrides> for PartialConfig {
    fn from(o: Overrides) -> Self {
        PartialConfig {
            beta: o.beta,
            z: o.z,
            c: o.c,
            entitlement: o.entitlement,
            delta_true: o.delta_true,
            len_true: o.len_true,
            delta_belief: o.delta_belief,
            len_belief: o.len_belief,
            distribution: None,
            tol: o.tol,
            max_iter: o.max_iter,
            max_periods: o.max_periods,
            seed: o.seed,
            spells: o.spells,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print both reservation-wage schedules as CSV.
    Solve,
    /// Exact welfare, duration and accepted wage of the belief policy.
    Evaluate,
    /// Monte Carlo spells under the belief policy.
    Simulate {
        /// Also dump the first K spells as CSV.
        #[arg(long, value_name = "K")]
        trace: Option<u64>,
        /// Where the trace goes.
        #[arg(long, value_name = "PATH", default_value = "spell_trace.csv")]
        trace_out: PathBuf,
    },
    /// Welfare loss over a grid of beliefs.
    Sweep {
        #[arg(long, value_enum)]
        vary: VaryArg,
        /// start:end:step; defaults to 0.1:0.9:0.05 (delta) or 5:45:5 (len).
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
    },
    /// Nonwork income matching a target spell length without benefits.
    Calibrate {
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VaryArg {
    Delta,
    Len,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

enum Failure {
    Config(ConfigError),
    Model(Error),
    Io(io::Error),
    Csv(csv::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Csv(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Model(e) => match e {
                Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
                Error::Infeasible(_) => EXIT_INFEASIBLE,
                Error::Divergence(_) => EXIT_DIVERGENCE,
                Error::InvalidParam { .. } => EXIT_CONFIG,
                _ => EXIT_IO,
            },
            Failure::Io(_) | Failure::Csv(_) => EXIT_IO,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(e) => e.to_string(),
            Failure::Model(e) => e.to_string(),
            Failure::Io(e) => e.to_string(),
            Failure::Csv(e) => e.to_string(),
        }
    }
}

/// Formats `v` with `digits` significant digits, using fixed notation for
/// moderate magnitudes and scientific notation otherwise.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{:.*e}", digits - 1, v)
    }
}

fn sig(v: f64) -> String {
    fmt_sig(v, 12)
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
            }
            return code;
        }
    };

    let result = match cli.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Failure::Io(io::Error::other(e))),
        },
        None => execute(&cli),
    }
    .and_then(|data| {
        match &cli.out {
            Some(path) => std::fs::write(path, &data)?,
            None => {
                stdout.write_all(&data)?;
                stdout.flush()?;
            }
        }
        Ok(())
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<u8>, Failure> {
    let cfg = parse_config(cli.config.as_deref(), cli.overrides.clone().into())?;
    let mut out = Vec::new();
    match &cli.command {
        Command::Solve => solve(&cfg, &mut out)?,
        Command::Evaluate => evaluate(&cfg, &mut out)?,
        Command::Simulate { trace, trace_out } => simulate(&cfg, &mut out, *trace, trace_out)?,
        Command::Sweep { vary, grid, mode } => {
            sweep(&cfg, &mut out, *vary, grid.as_deref(), *mode)?
        }
        Command::Calibrate { duration } => calibrate(&cfg, &mut out, *duration)?,
    }
    Ok(out)
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    serde_json::to_writer(&mut *out, value).map_err(|e| Failure::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let d = cfg.offers();
    let p = cfg.params();
    let belief = cfg.belief();
    let horizon = required_horizon(p.entitlement(), [belief.len(), cfg.len_true]);
    let s = ReservationSchedule::solve_with_horizon(
        d.as_ref(),
        &p,
        &belief,
        horizon,
        cfg.solver_options(),
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "w_basic", "w_ext"])?;
    for (n, &wb) in s.basic().iter().enumerate() {
        let ext = s.with_extension().get(n).map(|&x| sig(x)).unwrap_or_default();
        w.write_record([n.to_string(), sig(wb), ext])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EvaluateOutput {
    welfare: f64,
    duration: f64,
    accepted_wage: f64,
    loss_pct: f64,
}

fn evaluate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let d = cfg.offers();
    let (p, truth, opts) = (cfg.params(), cfg.truth(), cfg.solver_options());
    let held = evaluate_belief(d.as_ref(), &p, &cfg.belief(), &truth, opts)?;
    let best = evaluate_belief(d.as_ref(), &p, &truth, &truth, opts)?;
    write_json(
        out,
        &EvaluateOutput {
            welfare: held.welfare,
            duration: held.duration,
            accepted_wage: held.accepted_wage,
            loss_pct: loss_pct(best.welfare, held.welfare),
        },
    )
}

fn simulate(
    cfg: &RunConfig,
    out: &mut dyn Write,
    trace: Option<u64>,
    trace_out: &Path,
) -> Result<(), Failure> {
    let d = cfg.offers();
    let (p, truth) = (cfg.params(), cfg.truth());
    let policy =
        PolicyProfile::from_belief(d.as_ref(), &p, &cfg.belief(), &truth, cfg.solver_options())?;
    let summary = simulate_many(
        &policy,
        &truth,
        &p,
        d.as_ref(),
        cfg.spells,
        cfg.seed,
        cfg.simulation_options(),
    );
    if let Some(k) = trace {
        let records = trace_spells(&policy, &truth, &p, d.as_ref(), k, cfg.seed, cfg.max_periods);
        write_trace(File::create(trace_out)?, &records)?;
    }
    write_json(out, &summary)
}

/// Writes spell records as
/// `spell,duration,accepted_wage,welfare,extended,extension_period,truncated`.
pub fn write_trace<W: Write>(sink: W, records: &[SpellRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "spell",
        "duration",
        "accepted_wage",
        "welfare",
        "extended",
        "extension_period",
        "truncated",
    ])?;
    for (i, r) in records.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.duration.to_string(),
            r.accepted_wage.map(sig).unwrap_or_default(),
            sig(r.welfare),
            r.extended.to_string(),
            r.extension_period.map(|t| t.to_string()).unwrap_or_default(),
            r.truncated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn sweep(
    cfg: &RunConfig,
    out: &mut dyn Write,
    vary: VaryArg,
    grid: Option<&str>,
    mode: ModeArg,
) -> Result<(), Failure> {
    let vary = match vary {
        VaryArg::Delta => Vary::Delta,
        VaryArg::Len => Vary::Len,
    };
    let grid = match grid {
        Some(g) => parse_grid(g)?,
        None => vary.default_grid(),
    };
    let mode = match mode {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Mc => Mode::MonteCarlo {
            spells: cfg.spells,
            seed: cfg.seed,
            sim: cfg.simulation_options(),
        },
    };
    let d = cfg.offers();
    let rows = sweep_beliefs(
        d.as_ref(),
        &cfg.calibration(),
        vary,
        &grid,
        mode,
        cfg.solver_options(),
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "varied_param",
        "belief_value",
        "misperception",
        "loss_pct",
        "duration_ratio",
        "wage_gap_pct",
    ])?;
    for r in &rows {
        w.write_record([
            r.varied_param.to_string(),
            sig(r.belief_value),
            sig(r.misperception),
            sig(r.loss_pct),
            sig(r.duration_ratio),
            sig(r.wage_gap_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CalibrateOutput {
    z_full: f64,
    z: f64,
    c: f64,
}

fn calibrate(cfg: &RunConfig, out: &mut dyn Write, duration: f64) -> Result<(), Failure> {
    let d = cfg.offers();
    let z_full = calibrate_z(d.as_ref(), cfg.beta, duration)?;
    write_json(
        out,
        &CalibrateOutput {
            z_full,
            z: z_full / 2.0,
            c: z_full / 2.0,
        },
    )
}
