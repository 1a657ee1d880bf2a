//! Monte Carlo sweeps over the source power budget or the residual
//! self-interference level, comparing the joint design with the relay-only
//! baseline on paired channel draws.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::alternating::{optimize_joint, optimize_relay_only, SolveOptions, SolveTrace};
use crate::error::{Error, Result};
use crate::model::{db_to_linear, draw_channels, SystemParams};

pub const CSV_HEADER: [&str; 7] = [
    "sweep_variable",
    "sweep_value",
    "mode",
    "mean_R_sec",
    "mean_total_power",
    "feasible_fraction",
    "trials_used",
];

pub const DEFAULT_PMAX_DB: f64 = 10.0;
pub const DEFAULT_PMAX_SWEEP_DB: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
pub const DEFAULT_RSI_SWEEP: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVariable {
    Pmax,
    Rsi,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Pmax => "pmax",
            SweepVariable::Rsi => "rsi",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Joint,
    RelayOnly,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Joint => "joint",
            Mode::RelayOnly => "relay-only",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Joint,
    RelayOnly,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Base parameters; the swept quantity is overwritten per point.
    pub params: SystemParams,
    pub trials: usize,
    pub master_seed: u64,
    pub sweep_variable: SweepVariable,
    /// dB for `pmax`, linear variance for `rsi`.
    pub sweep_values: Vec<f64>,
    pub modes: Vec<Mode>,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::config("sweep-values", "need at least one value"));
        }
        if self.sweep_values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("sweep-values", "must be strictly increasing"));
        }
        if self.modes.is_empty() {
            return Err(Error::config("mode", "no mode selected"));
        }
        for &v in &self.sweep_values {
            self.params_at(v)
                .validate()
                .map_err(|e| Error::config("sweep-values", format!("{v}: {e}")))?;
        }
        Ok(())
    }

    /// Parameters at one sweep point.
    pub fn params_at(&self, value: f64) -> SystemParams {
        match self.sweep_variable {
            SweepVariable::Pmax => SystemParams {
                p_max: db_to_linear(value),
                ..self.params.clone()
            },
            SweepVariable::Rsi => SystemParams {
                rsi_variance: value,
                ..self.params.clone()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub mode: Mode,
    /// Mean secrecy sum-rate over feasible trials, NaN if none.
    pub mean_r_sec: f64,
    /// Mean of `P_A + P_B + P_R` over feasible trials, NaN if none.
    pub mean_total_power: f64,
    pub feasible_fraction: f64,
    /// Number of feasible trials entering the means.
    pub trials_used: usize,
}

/// SplitMix64 finalizer.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    master_seed ^ mix64(trial as u64)
}

/// `(R_sec, total power)` of one trial, `None` when infeasible.
pub type TrialOutcome = Option<(f64, f64)>;

/// Runs one mode on trial `trial` at the given parameters. Solver errors count
/// as infeasible.
pub fn run_trial(params: &SystemParams, master_seed: u64, trial: usize, mode: Mode) -> TrialOutcome {
    let seed = trial_seed(master_seed, trial);
    let ch = draw_channels(params, seed);
    let trace = match mode {
        Mode::Joint => optimize_joint(
            &ch,
            params,
            &SolveOptions {
                seed,
                ..SolveOptions::default()
            },
        ),
        Mode::RelayOnly => optimize_relay_only(&ch, params, seed),
    };
    outcome(trace)
}

fn outcome(trace: Result<SolveTrace>) -> TrialOutcome {
    let report = trace.ok()?.final_report?;
    Some((report.secrecy_rate, report.total_power))
}

fn aggregate(value: f64, mode: Mode, outcomes: &[TrialOutcome]) -> SweepRow {
    let feasible: Vec<(f64, f64)> = outcomes.iter().flatten().copied().collect();
    let n = feasible.len();
    let mean = |f: fn(&(f64, f64)) -> f64| {
        if n == 0 {
            f64::NAN
        } else {
            feasible.iter().map(f).sum::<f64>() / n as f64
        }
    };
    SweepRow {
        sweep_value: value,
        mode,
        mean_r_sec: mean(|o| o.0),
        mean_total_power: mean(|o| o.1),
        feasible_fraction: n as f64 / outcomes.len() as f64,
        trials_used: n,
    }
}

/// Runs every sweep point and mode, writes the CSV and returns the rows.
/// The output file is created before any trial runs.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let file = File::create(&config.output_path)?;
    let rows = compute_rows(config);
    write_csv(file, config.sweep_variable, &rows)?;
    Ok(rows)
}

/// The sweep without file output.
pub fn compute_rows(config: &ExperimentConfig) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(config.sweep_values.len() * config.modes.len());
    for &value in &config.sweep_values {
        let params = config.params_at(value);
        let per_trial: Vec<Vec<TrialOutcome>> = (0..config.trials)
            .into_par_iter()
            .map(|i| {
                config
                    .modes
                    .iter()
                    .map(|&m| run_trial(&params, config.master_seed, i, m))
                    .collect()
            })
            .collect();
        for (k, &mode) in config.modes.iter().enumerate() {
            let outcomes: Vec<TrialOutcome> = per_trial.iter().map(|t| t[k]).collect();
            rows.push(aggregate(value, mode, &outcomes));
        }
    }
    rows
}

/// `printf("%.9g")`-style rendering.
pub fn format_float(x: f64) -> String {
    const DIGITS: i32 = 9;
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(out: W, variable: SweepVariable, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            variable.name().to_string(),
            format_float(r.sweep_value),
            r.mode.name().to_string(),
            format_float(r.mean_r_sec),
            format_float(r.mean_total_power),
            format_float(r.feasible_fraction),
            r.trials_used.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Command-line and config-file options. Every option is optional so a
/// file and the command line can be merged; unset values take defaults.
#[derive(Debug, Default, Parser)]
#[command(
    name = "fdrelay",
    about = "Monte Carlo sweeps for the secure full-duplex two-way SWIPT relay",
    allow_negative_numbers = true
)]
struct Cli {
    /// Flat key=value file with the same option names (dashes as underscores)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Relay transmit antennas
    #[arg(long)]
    mt: Option<usize>,
    /// Relay receive antennas
    #[arg(long)]
    mr: Option<usize>,
    /// Source power budget in dB (ignored by a pmax sweep)
    #[arg(long)]
    pmax_db: Option<f64>,
    #[arg(long)]
    gamma_a_db: Option<f64>,
    #[arg(long)]
    gamma_b_db: Option<f64>,
    /// Eavesdropper SINR cap in dB
    #[arg(long)]
    gamma_e_db: Option<f64>,
    /// Harvested-power target, linear
    #[arg(long)]
    ubar: Option<f64>,
    /// Relay receive noise variance
    #[arg(long)]
    sigma2_r: Option<f64>,
    /// Residual self-interference variance (ignored by an rsi sweep)
    #[arg(long)]
    rsi_var: Option<f64>,
    /// Fraction of source self-interference left after cancellation
    #[arg(long)]
    si_residual: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    sweep: Option<SweepVariable>,
    /// Comma-separated sweep points (dB for pmax, linear for rsi)
    #[arg(long, value_delimiter = ',')]
    sweep_values: Option<Vec<f64>>,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    /// Fields set here win over `other`.
    fn or(self, other: Cli) -> Cli {
        Cli {
            config: self.config.or(other.config),
            mt: self.mt.or(other.mt),
            mr: self.mr.or(other.mr),
            pmax_db: self.pmax_db.or(other.pmax_db),
            gamma_a_db: self.gamma_a_db.or(other.gamma_a_db),
            gamma_b_db: self.gamma_b_db.or(other.gamma_b_db),
            gamma_e_db: self.gamma_e_db.or(other.gamma_e_db),
            ubar: self.ubar.or(other.ubar),
            sigma2_r: self.sigma2_r.or(other.sigma2_r),
            rsi_var: self.rsi_var.or(other.rsi_var),
            si_residual: self.si_residual.or(other.si_residual),
            trials: self.trials.or(other.trials),
            seed: self.seed.or(other.seed),
            mode: self.mode.or(other.mode),
            sweep: self.sweep.or(other.sweep),
            sweep_values: self.sweep_values.or(other.sweep_values),
            out: self.out.or(other.out),
        }
    }
}

fn file_options(path: &Path) -> Result<Cli> {
    let text = std::fs::read_to_string(path)?;
    let mut args = vec!["fdrelay".to_string()];
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(
                "config",
                format!("{}:{}: expected key=value", path.display(), n + 1),
            ));
        };
        let key = key.trim().replace('_', "-");
        if key == "config" {
            return Err(Error::config("config", "config files cannot nest"));
        }
        args.push(format!("--{key}={}", value.trim()));
    }
    Ok(Cli::try_parse_from(args)?)
}

/// Builds an experiment from command-line arguments (program name first)
/// and an optional `--config` file. Command-line values override the file.
pub fn parse_config<I, T>(args: I) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let cli = match &cli.config {
        Some(path) => {
            let file = file_options(path)?;
            cli.or(file)
        }
        None => cli,
    };

    let base = SystemParams::default();
    let sweep_variable = cli.sweep.unwrap_or(SweepVariable::Pmax);
    let sweep_values = cli.sweep_values.unwrap_or_else(|| match sweep_variable {
        SweepVariable::Pmax => DEFAULT_PMAX_SWEEP_DB.to_vec(),
        SweepVariable::Rsi => DEFAULT_RSI_SWEEP.to_vec(),
    });
    let modes = match cli.mode.unwrap_or(ModeArg::Both) {
        ModeArg::Joint => vec![Mode::Joint],
        ModeArg::RelayOnly => vec![Mode::RelayOnly],
        ModeArg::Both => vec![Mode::Joint, Mode::RelayOnly],
    };

    let finite = |flag: &str, v: f64| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::config(flag, "must be finite"))
        }
    };
    let params = SystemParams {
        m_t: cli.mt.unwrap_or(base.m_t),
        m_r: cli.mr.unwrap_or(base.m_r),
        p_max: db_to_linear(finite("pmax-db", cli.pmax_db.unwrap_or(DEFAULT_PMAX_DB))?),
        gamma_a: match cli.gamma_a_db {
            Some(db) => db_to_linear(finite("gamma-a-db", db)?),
            None => base.gamma_a,
        },
        gamma_b: match cli.gamma_b_db {
            Some(db) => db_to_linear(finite("gamma-b-db", db)?),
            None => base.gamma_b,
        },
        gamma_e: match cli.gamma_e_db {
            Some(db) => db_to_linear(finite("gamma-e-db", db)?),
            None => base.gamma_e,
        },
        u_bar: cli.ubar.unwrap_or(base.u_bar),
        sigma2_r: cli.sigma2_r.unwrap_or(base.sigma2_r),
        beta: base.beta,
        si_residual_factor: cli.si_residual.unwrap_or(base.si_residual_factor),
        rsi_variance: cli.rsi_var.unwrap_or(base.rsi_variance),
    };

    if params.m_r < 1 {
        return Err(Error::config("mr", "need at least one receive antenna"));
    }
    if params.m_t <= params.m_r {
        return Err(Error::config("mt", format!("must exceed --mr ({})", params.m_r)));
    }
    let checks: [(&str, f64, bool); 4] = [
        ("ubar", params.u_bar, params.u_bar >= 0.0 && params.u_bar.is_finite()),
        ("sigma2-r", params.sigma2_r, params.sigma2_r >= 0.0 && params.sigma2_r.is_finite()),
        ("rsi-var", params.rsi_variance, params.rsi_variance >= 0.0 && params.rsi_variance.is_finite()),
        ("si-residual", params.si_residual_factor, (0.0..=1.0).contains(&params.si_residual_factor)),
    ];
    for (flag, v, ok) in checks {
        if !ok {
            return Err(Error::config(flag, format!("{v} is out of range")));
        }
    }

    let config = ExperimentConfig {
        params,
        trials: cli.trials.unwrap_or(1000),
        master_seed: cli.seed.unwrap_or(0),
        sweep_variable,
        sweep_values,
        modes,
        output_path: cli.out.unwrap_or_else(|| PathBuf::from("sweep.csv")),
    };
    config.validate()?;
    Ok(config)
}
