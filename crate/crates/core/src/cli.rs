//! Command-line entry point.
//!
//! Exit status: 0 success, 1 invalid input, 2 numerical failure, 3 verify
//! thresholds exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harness::oracle::{compare_with_core, AxisComparison, PenaltyOracleConfig, Thresholds};
use crate::harness::profiles::{verify_config, verify_series, VERIFY_PROFILES};
use crate::harness::tower::{run_demo, write_tower_csv, DemoSettings, TowerModel};
use crate::harness::tune::{tune_passive, Objective, SearchBox};
use crate::integrate::{simulate, MotionSeries, SimSettings};
use crate::io::{parse_config, read_motion_csv, write_result_csv};
use crate::tmd::{Axis, TmdConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nacelle-tmd", version, about = "Tuned mass dampers in a moving, rotating nacelle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the dampers under a prescribed nacelle motion and write the result CSV.
    Simulate(SimulateArgs),
    /// Compare the model with the inertial-frame reference.
    Verify(VerifyArgs),
    /// Tune a passive fore-aft damper on a modal tower.
    Tune(TuneArgs),
    /// Broadband-forced tower with and without a tuned damper.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub motion: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Simulated span; defaults to the whole motion series.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Damper configuration; defaults to the built-in verification pair.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Motion to verify on; defaults to the built-in profile suite.
    #[arg(long)]
    pub motion: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Truncate each motion to this span.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Rms,
    Hinf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Hinf)]
    pub objective: ObjectiveArg,
    #[arg(long, default_value_t = 0.05)]
    pub mass_ratio: f64,
    #[command(flatten)]
    pub tower: TowerArgs,
    #[arg(long)]
    pub k_min: Option<f64>,
    #[arg(long)]
    pub k_max: Option<f64>,
    #[arg(long)]
    pub c_min: Option<f64>,
    #[arg(long)]
    pub c_max: Option<f64>,
    /// Audit CSV of every evaluation.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TowerArgs {
    #[arg(long, default_value_t = 100.0)]
    pub tower_mass: f64,
    #[arg(long, default_value_t = 1e4)]
    pub tower_stiffness: f64,
    #[arg(long, default_value_t = 2.0)]
    pub tower_damping: f64,
}

impl TowerArgs {
    fn model(&self) -> TowerModel {
        TowerModel::isotropic(self.tower_mass, self.tower_stiffness, self.tower_damping)
    }
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 0.05)]
    pub mass_ratio: f64,
    #[arg(long, default_value_t = 2e-3)]
    pub dt: f64,
    #[command(flatten)]
    pub tower: TowerArgs,
    /// Directory receiving baseline.csv and tmd.csv.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Diagnostics go to stderr, summaries to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn execute(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Demo(a) => cmd_demo(a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Integration { .. } | Error::OracleInvalid { .. } => e,
        other => Error::Invalid(format!("{}: {other}", path.display())),
    })
}

fn load_config(path: &Path) -> Result<TmdConfig> {
    in_file(path, parse_config(&read(path)?))
}

fn load_motion(path: &Path) -> Result<MotionSeries> {
    in_file(path, read_motion_csv(&read(path)?))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let cfg = load_config(&a.config)?;
    let series = load_motion(&a.motion)?;
    let mut settings = SimSettings::new(a.dt);
    settings.horizon = a.horizon;
    let result = simulate(&series, &cfg, &settings, None)?;
    write(&a.out, &write_result_csv(&result))?;
    println!("wrote {} rows to {}", result.records.len(), a.out.display());
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => verify_config(),
    };
    let cases: Vec<(String, Option<&Path>)> = match &a.motion {
        Some(p) => vec![(p.display().to_string(), Some(p.as_path()))],
        None => (1..=VERIFY_PROFILES.len()).map(|i| (format!("profile {i:02}"), None)).collect(),
    };
    let th = Thresholds::default();
    let oracle_cfg = PenaltyOracleConfig::default();
    let mut report = String::new();
    let mut all_pass = true;
    let (mut worst_pos, mut worst_force) = (0.0_f64, 0.0_f64);
    for (i, (name, path)) in cases.iter().enumerate() {
        let series = match path {
            Some(p) => load_motion(p)?,
            None => verify_series(i)?,
        };
        let series = match a.horizon {
            Some(h) => series.truncated(h)?,
            None => series,
        };
        for c in compare_with_core(&series, &cfg, a.dt, &oracle_cfg, th.settle)? {
            all_pass &= c.passes(&th);
            worst_pos = worst_pos.max(c.max_position_error);
            worst_force = worst_force.max(c.max_force_error);
            report_line(&mut report, name, &c, &th);
        }
    }
    let _ = writeln!(
        report,
        "{} max position error {:.3e} m (limit {:e}), max force error {:.3e} N (limit {:e})",
        if all_pass { "PASS" } else { "FAIL" },
        worst_pos,
        th.position,
        worst_force,
        th.force
    );
    print!("{report}");
    if let Some(out) = &a.out {
        write(out, &report)?;
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn report_line(out: &mut String, name: &str, c: &AxisComparison, th: &Thresholds) {
    let axis = match c.axis {
        Axis::X => "X",
        Axis::Y => "Y",
    };
    let _ = writeln!(
        out,
        "{name} axis {axis}: position error {:.3e} m, force error {:.3e} N, drift {:.3e} m, {} samples: {}",
        c.max_position_error,
        c.max_force_error,
        c.max_drift,
        c.samples,
        if c.passes(th) { "pass" } else { "fail" }
    );
}

fn cmd_tune(a: &TuneArgs) -> Result<i32> {
    let tower = a.tower.model();
    tower.validate()?;
    let default_box = SearchBox::around(&tower.fore_aft, a.mass_ratio);
    let search = SearchBox {
        k: (a.k_min.unwrap_or(default_box.k.0), a.k_max.unwrap_or(default_box.k.1)),
        c: (a.c_min.unwrap_or(default_box.c.0), a.c_max.unwrap_or(default_box.c.1)),
    };
    let objective = match a.objective {
        ObjectiveArg::Rms => Objective::Rms,
        ObjectiveArg::Hinf => Objective::HInf,
    };
    let r = tune_passive(&tower, a.mass_ratio, &search, objective)?;
    write(&a.out, &r.audit_csv())?;
    println!(
        "k = {:.6e} N/m, c = {:.6e} N*s/m, objective = {:.6e}, frequency ratio = {:.5}, damping ratio = {:.5}, evaluations = {}{}",
        r.k,
        r.c,
        r.objective,
        r.frequency_ratio(),
        r.damping_ratio(),
        r.evaluations,
        if r.converged { "" } else { " (evaluation budget exhausted)" }
    );
    Ok(EXIT_OK)
}

fn cmd_demo(a: &DemoArgs) -> Result<i32> {
    let settings = DemoSettings {
        tower: a.tower.model(),
        mass_ratio: a.mass_ratio,
        dt: a.dt,
        ..DemoSettings::default()
    };
    if !(a.mass_ratio > 0.0 && a.mass_ratio <= 0.2) {
        return Err(Error::Invalid(format!("mass ratio must lie in (0, 0.2], got {}", a.mass_ratio)));
    }
    let outcome = run_demo(&settings)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::Invalid(format!("cannot create {}: {e}", a.out.display())))?;
    write(&a.out.join("baseline.csv"), &write_tower_csv(&outcome.baseline))?;
    write(&a.out.join("tmd.csv"), &write_tower_csv(&outcome.with_tmd))?;
    println!(
        "RMS fore-aft displacement: baseline {:.6e} m, with TMD {:.6e} m, reduction {:.1}%",
        outcome.rms_baseline,
        outcome.rms_tmd,
        100.0 * outcome.reduction()
    );
    Ok(EXIT_OK)
}
