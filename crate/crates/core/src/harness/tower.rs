//! Modal tower carrying the dampers in a level, non-rotating nacelle.
//!
//! The tower has one modal mass per horizontal direction. The nacelle
//! acceleration seen by the dampers is the tower acceleration, and the
//! damper reaction loads drive the tower.

use std::f64::consts::PI;

use nalgebra::{Matrix2, SVector, Vector2};

use crate::error::{Error, Result};
use crate::frames::{NacelleMotionNacelleFrame, RotationMatrix, Vec3};
use crate::integrate::{rk4_step, step_count, ForceSchedule};
use crate::io::fmt_sig9;
use crate::tmd::{output_loads, state_derivative, ExternalForce, TmdAxisParams, TmdConfig, TmdState};

/// One modal direction of the tower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalDof {
    pub mass: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub initial_disp: f64,
}

impl ModalDof {
    pub fn new(mass: f64, stiffness: f64, damping: f64) -> Self {
        Self {
            mass,
            stiffness,
            damping,
            initial_disp: 0.0,
        }
    }

    pub fn with_initial_disp(mut self, q0: f64) -> Self {
        self.initial_disp = q0;
        self
    }

    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerModel {
    /// Along nacelle x, shared with the X damper.
    pub fore_aft: ModalDof,
    /// Along nacelle y, shared with the Y damper.
    pub side_side: ModalDof,
}

impl TowerModel {
    pub fn isotropic(mass: f64, stiffness: f64, damping: f64) -> Self {
        let d = ModalDof::new(mass, stiffness, damping);
        Self {
            fore_aft: d,
            side_side: d,
        }
    }

    /// Mass and stiffness must be positive; zero damping is allowed so that
    /// conservative runs can be audited.
    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("fore-aft", &self.fore_aft), ("side-side", &self.side_side)] {
            let ok = d.mass.is_finite()
                && d.mass > 0.0
                && d.stiffness.is_finite()
                && d.stiffness > 0.0
                && d.damping.is_finite()
                && d.damping >= 0.0
                && d.initial_disp.is_finite();
            if !ok {
                return Err(Error::Invalid(format!(
                    "tower {name} mode needs mass > 0, stiffness > 0, damping >= 0; got {d:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Den Hartog tuning of a damper of mass `mass_ratio·M` on a lightly damped
/// host: frequency ratio `1/(1+μ)` and damping ratio `√(3μ/(8(1+μ)³))`,
/// the latter referred to the host frequency.
pub fn den_hartog(host: &ModalDof, mass_ratio: f64) -> TmdAxisParams {
    let mu = mass_ratio;
    let m = mu * host.mass;
    let w_t = host.natural_frequency();
    let f = 1.0 / (1.0 + mu);
    let zeta = (3.0 * mu / (8.0 * (1.0 + mu).powi(3))).sqrt();
    TmdAxisParams::new(m, m * (f * w_t).powi(2), 2.0 * m * zeta * w_t)
}

/// Horizontal force applied at the tower top.
pub trait ForceSignal {
    fn force(&self, t: f64) -> Result<(f64, f64)>;
}

impl ForceSignal for ForceSchedule {
    fn force(&self, t: f64) -> Result<(f64, f64)> {
        let f = self.sample(t)?;
        Ok((f.f_x, f.f_y))
    }
}

/// No applied force.
pub struct Unforced;

impl ForceSignal for Unforced {
    fn force(&self, _t: f64) -> Result<(f64, f64)> {
        Ok((0.0, 0.0))
    }
}

/// Sum of equal-amplitude harmonics of a base frequency with Schroeder
/// phases, giving a flat, periodic, low-crest-factor broadband force.
#[derive(Debug, Clone, PartialEq)]
pub struct Multisine {
    pub amplitude: f64,
    pub freqs: Vec<f64>,
    pub phases: Vec<f64>,
    /// Unit weights of the force on (x, y).
    pub direction: (f64, f64),
}

impl Multisine {
    /// Harmonics `k·base` for `k` in `k_lo..=k_hi`, scaled to the given RMS.
    pub fn new(base: f64, k_lo: usize, k_hi: usize, rms: f64, direction: (f64, f64)) -> Result<Self> {
        if !(base > 0.0 && k_lo >= 1 && k_hi >= k_lo && rms.is_finite()) {
            return Err(Error::Invalid(format!(
                "multisine needs base > 0 and 1 <= k_lo <= k_hi, got base {base}, k {k_lo}..={k_hi}"
            )));
        }
        let n = k_hi - k_lo + 1;
        let freqs = (k_lo..=k_hi).map(|k| k as f64 * base).collect();
        let phases = (1..=n).map(|i| -PI * (i * (i - 1)) as f64 / n as f64).collect();
        Ok(Self {
            amplitude: rms * (2.0 / n as f64).sqrt(),
            freqs,
            phases,
            direction,
        })
    }

    /// Fore-aft forcing covering `0.2..=5` times the host frequency.
    pub fn broadband(host_freq: f64, rms: f64) -> Self {
        Self::new(host_freq / 40.0, 8, 200, rms, (1.0, 0.0)).expect("valid fixed layout")
    }

    pub fn period(&self) -> f64 {
        let base = self.freqs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        2.0 * PI / base.min(self.freqs[0])
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * self.freqs.iter().zip(&self.phases).map(|(w, p)| (w * t + p).sin()).sum::<f64>()
    }
}

impl ForceSignal for Multisine {
    fn force(&self, t: f64) -> Result<(f64, f64)> {
        let v = self.value(t);
        Ok((v * self.direction.0, v * self.direction.1))
    }
}

/// `[q_x, q̇_x, q_y, q̇_y, x, ẋ, y, ẏ]`
pub type CoupledState = SVector<f64, 8>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerRecord {
    pub t: f64,
    pub state: CoupledState,
    /// Tower accelerations.
    pub accel: Vector2<f64>,
    /// Damper load on the tower, horizontal components.
    pub tmd_force: Vector2<f64>,
    pub excitation: Vector2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TowerTrajectory {
    pub records: Vec<TowerRecord>,
    pub dt: f64,
}

impl TowerTrajectory {
    /// RMS of the fore-aft tower displacement over records with `t >= from`.
    pub fn rms_qx(&self, from: f64) -> f64 {
        let (sum, n) = self
            .records
            .iter()
            .filter(|r| r.t >= from)
            .fold((0.0, 0usize), |(s, n), r| (s + r.state[0] * r.state[0], n + 1));
        (sum / n.max(1) as f64).sqrt()
    }
}

struct Coupled<'a, E: ForceSignal + ?Sized> {
    tower: &'a TowerModel,
    cfg: &'a TmdConfig,
    excitation: &'a E,
}

struct Evaluated {
    deriv: CoupledState,
    accel: Vector2<f64>,
    tmd_force: Vector2<f64>,
    excitation: Vector2<f64>,
}

fn tmd_part(s: &CoupledState) -> TmdState {
    TmdState::new(s[4], s[5], s[6], s[7])
}

impl<E: ForceSignal + ?Sized> Coupled<'_, E> {
    fn frame(&self, accel: Vector2<f64>) -> NacelleMotionNacelleFrame {
        NacelleMotionNacelleFrame {
            accel: Vec3::new(accel.x, accel.y, 0.0),
            ..NacelleMotionNacelleFrame::level(self.cfg.gravity)
        }
    }

    fn horizontal_load(&self, tmd: &TmdState, accel: Vector2<f64>) -> Vector2<f64> {
        let l = output_loads(tmd, &self.frame(accel), &RotationMatrix::identity(), self.cfg, ExternalForce::ZERO);
        Vector2::new(l.force_g.x, l.force_g.y)
    }

    fn eval(&self, t: f64, s: &CoupledState) -> Result<Evaluated> {
        let tmd = tmd_part(s);
        let (fa, ss) = (&self.tower.fore_aft, &self.tower.side_side);
        // The damper load is affine in the tower acceleration through the
        // inertia of the mass riding across its own track.
        let f0 = self.horizontal_load(&tmd, Vector2::zeros());
        let jx = self.horizontal_load(&tmd, Vector2::x()) - f0;
        let jy = self.horizontal_load(&tmd, Vector2::y()) - f0;
        let jac = Matrix2::from_columns(&[jx, jy]);
        let (ex, ey) = self.excitation.force(t)?;
        let exc = Vector2::new(ex, ey);
        let rhs = Vector2::new(
            -fa.stiffness * s[0] - fa.damping * s[1],
            -ss.stiffness * s[2] - ss.damping * s[3],
        ) + f0
            + exc;
        let lhs = Matrix2::from_diagonal(&Vector2::new(fa.mass, ss.mass)) - jac;
        let accel = lhs.lu().solve(&rhs).ok_or_else(|| Error::Integration {
            t,
            message: "singular coupled mass matrix".into(),
        })?;
        let d = state_derivative(&tmd, &self.frame(accel), self.cfg, ExternalForce::ZERO)?;
        Ok(Evaluated {
            deriv: CoupledState::from([s[1], accel.x, s[3], accel.y, d.x, d.x_dot, d.y, d.y_dot]),
            accel,
            tmd_force: f0 + jac * accel,
            excitation: exc,
        })
    }
}

/// Integrates tower and dampers together with fixed-step RK4.
///
/// The tower starts at its initial displacements at rest, the dampers at
/// theirs. One record per step, including `t = 0`.
pub fn coupled_tower_simulate<E: ForceSignal + ?Sized>(
    tower: &TowerModel,
    cfg: &TmdConfig,
    excitation: &E,
    dt: f64,
    horizon: f64,
) -> Result<TowerTrajectory> {
    let mut records = Vec::new();
    run_coupled(tower, cfg, excitation, dt, horizon, |r| records.push(r))?;
    Ok(TowerTrajectory { records, dt })
}

/// Same integration as [`coupled_tower_simulate`], handing each record to
/// `visit` instead of storing it.
pub fn run_coupled<E: ForceSignal + ?Sized>(
    tower: &TowerModel,
    cfg: &TmdConfig,
    excitation: &E,
    dt: f64,
    horizon: f64,
    mut visit: impl FnMut(TowerRecord),
) -> Result<()> {
    tower.validate()?;
    cfg.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Invalid(format!("time step must be > 0, got {dt}")));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::Invalid(format!("horizon must be >= 0, got {horizon}")));
    }
    let sys = Coupled { tower, cfg, excitation };
    let tmd0 = cfg.initial_state();
    let mut state = CoupledState::from([
        tower.fore_aft.initial_disp,
        0.0,
        tower.side_side.initial_disp,
        0.0,
        tmd0.x,
        tmd0.x_dot,
        tmd0.y,
        tmd0.y_dot,
    ]);
    let record = |t: f64, state: &CoupledState| -> Result<TowerRecord> {
        let e = sys.eval(t, state)?;
        Ok(TowerRecord {
            t,
            state: *state,
            accel: e.accel,
            tmd_force: e.tmd_force,
            excitation: e.excitation,
        })
    };
    visit(record(0.0, &state)?);
    for i in 0..step_count(horizon, dt) {
        let t = i as f64 * dt;
        state = rk4_step(|tau, s: &CoupledState| Ok(sys.eval(tau, s)?.deriv), state, t, dt)?;
        visit(record((i + 1) as f64 * dt, &state)?);
    }
    Ok(())
}

pub const TOWER_COLUMNS: [&str; 13] = [
    "time", "qx", "qx_dot", "qy", "qy_dot", "x", "x_dot", "y", "y_dot", "fx_tmd", "fy_tmd", "fx_exc", "fy_exc",
];

pub fn write_tower_csv(traj: &TowerTrajectory) -> String {
    let mut out = TOWER_COLUMNS.join(",");
    out.push('\n');
    for r in &traj.records {
        let vals = std::iter::once(r.t)
            .chain(r.state.iter().copied())
            .chain([r.tmd_force.x, r.tmd_force.y, r.excitation.x, r.excitation.y]);
        let row: Vec<String> = vals.map(fmt_sig9).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Outcome of the tuned-damper demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoOutcome {
    pub baseline: TowerTrajectory,
    pub with_tmd: TowerTrajectory,
    pub tmd: TmdAxisParams,
    pub rms_baseline: f64,
    pub rms_tmd: f64,
    /// RMS measured from this time on.
    pub rms_from: f64,
}

impl DemoOutcome {
    pub fn reduction(&self) -> f64 {
        1.0 - self.rms_tmd / self.rms_baseline
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoSettings {
    pub tower: TowerModel,
    pub mass_ratio: f64,
    pub forcing_rms: f64,
    pub dt: f64,
    /// Whole excitation periods to simulate.
    pub periods: usize,
    /// Leading periods left out of the RMS.
    pub skip_periods: usize,
}

impl Default for DemoSettings {
    fn default() -> Self {
        Self {
            tower: TowerModel::isotropic(100.0, 1e4, 2.0),
            mass_ratio: 0.05,
            forcing_rms: 10.0,
            dt: 2e-3,
            periods: 12,
            skip_periods: 4,
        }
    }
}

/// Fore-aft broadband forcing of the tower with and without a Den Hartog
/// damper on the X track.
pub fn run_demo(settings: &DemoSettings) -> Result<DemoOutcome> {
    let tower = &settings.tower;
    tower.validate()?;
    let exc = Multisine::broadband(tower.fore_aft.natural_frequency(), settings.forcing_rms);
    let period = exc.period();
    let horizon = period * settings.periods as f64;
    let rms_from = period * settings.skip_periods as f64;

    let baseline_cfg = TmdConfig::new(TmdAxisParams::disabled(), TmdAxisParams::disabled());
    let tmd = den_hartog(&tower.fore_aft, settings.mass_ratio);
    let tmd_cfg = TmdConfig::new(tmd, TmdAxisParams::disabled());

    let baseline = coupled_tower_simulate(tower, &baseline_cfg, &exc, settings.dt, horizon)?;
    let with_tmd = coupled_tower_simulate(tower, &tmd_cfg, &exc, settings.dt, horizon)?;
    Ok(DemoOutcome {
        rms_baseline: baseline.rms_qx(rms_from),
        rms_tmd: with_tmd.rms_qx(rms_from),
        baseline,
        with_tmd,
        tmd,
        rms_from,
    })
}
