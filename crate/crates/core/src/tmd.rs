//! Damper dynamics in the nacelle frame.
//!
//! Two single-axis dampers ride on tracks fixed to the nacelle: `TMD_X` moves
//! fore-aft along nacelle x, `TMD_Y` side-side along nacelle y. Everything in
//! this module is a pure function of the damper state, the nacelle-frame
//! inputs and the parameters.

use std::ops::{Add, Mul};

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::frames::{rotate_to_global, NacelleMotionNacelleFrame, RotationMatrix, Vec3};
use crate::integrate::OdeState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    /// Config keys for this axis, in the order
    /// `(DOF, DSP, M, K, C, stop max, stop min, stop K, stop C)`.
    pub fn keys(self) -> [&'static str; 9] {
        match self {
            Axis::X => [
                "TMD_X_DOF",
                "TMD_X_DSP",
                "TMD_X_M",
                "TMD_X_K",
                "TMD_X_C",
                "TMD_X_DWSP",
                "TMD_X_UWSP",
                "TMD_X_K_SX",
                "TMD_X_C_SX",
            ],
            Axis::Y => [
                "TMD_Y_DOF",
                "TMD_Y_DSP",
                "TMD_Y_M",
                "TMD_Y_K",
                "TMD_Y_C",
                "TMD_Y_PLSP",
                "TMD_Y_NLSP",
                "TMD_Y_K_S",
                "TMD_Y_C_S",
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlMode {
    #[default]
    Passive,
    Active,
}

impl ControlMode {
    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(ControlMode::Passive),
            2 => Some(ControlMode::Active),
            _ => None,
        }
    }

    pub fn code(self) -> i64 {
        match self {
            ControlMode::Passive => 1,
            ControlMode::Active => 2,
        }
    }
}

/// Parameters of one single-axis damper and its end stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmdAxisParams {
    pub mass: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub dof_enabled: bool,
    pub initial_disp: f64,
    /// Largest displacement before the stop engages (`X_DWSP` / `Y_PLSP`).
    pub stop_max: f64,
    /// Smallest displacement before the stop engages (`X_UWSP` / `Y_NLSP`).
    pub stop_min: f64,
    pub stop_stiffness: f64,
    pub stop_damping: f64,
}

impl TmdAxisParams {
    /// An enabled damper with inert stops at ±1 m.
    pub fn new(mass: f64, stiffness: f64, damping: f64) -> Self {
        Self {
            mass,
            stiffness,
            damping,
            dof_enabled: true,
            initial_disp: 0.0,
            stop_max: 1.0,
            stop_min: -1.0,
            stop_stiffness: 0.0,
            stop_damping: 0.0,
        }
    }

    pub fn disabled() -> Self {
        Self {
            dof_enabled: false,
            ..Self::new(0.0, 0.0, 0.0)
        }
    }

    pub fn with_stops(mut self, stop_min: f64, stop_max: f64, k_s: f64, c_s: f64) -> Self {
        self.stop_min = stop_min;
        self.stop_max = stop_max;
        self.stop_stiffness = k_s;
        self.stop_damping = c_s;
        self
    }

    pub fn with_initial_disp(mut self, disp: f64) -> Self {
        self.initial_disp = disp;
        self
    }

    /// Mass seen by the nacelle; a disabled axis is absent.
    pub fn effective_mass(&self) -> f64 {
        if self.dof_enabled {
            self.mass
        } else {
            0.0
        }
    }

    pub fn validate(&self, axis: Axis) -> Result<()> {
        let [dof, dsp, m, k, c, smax, smin, ks, cs] = axis.keys();
        let finite = [
            (dsp, self.initial_disp),
            (m, self.mass),
            (k, self.stiffness),
            (c, self.damping),
            (smax, self.stop_max),
            (smin, self.stop_min),
            (ks, self.stop_stiffness),
            (cs, self.stop_damping),
        ];
        if let Some((key, v)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Constraint(format!("{key} must be finite, got {v}")));
        }
        if self.dof_enabled && self.mass <= 0.0 {
            return Err(Error::Constraint(format!(
                "{m} must be > 0 when {dof} is True, got {}",
                self.mass
            )));
        }
        for (key, v) in [(m, self.mass), (k, self.stiffness), (c, self.damping), (ks, self.stop_stiffness), (cs, self.stop_damping)] {
            if v < 0.0 {
                return Err(Error::Constraint(format!("{key} must be >= 0, got {v}")));
            }
        }
        if self.stop_min >= self.stop_max {
            return Err(Error::Constraint(format!(
                "{smin} ({}) must be less than {smax} ({})",
                self.stop_min, self.stop_max
            )));
        }
        if self.initial_disp < self.stop_min || self.initial_disp > self.stop_max {
            return Err(Error::Constraint(format!(
                "{dsp} ({}) must lie within [{smin}, {smax}] = [{}, {}]",
                self.initial_disp, self.stop_min, self.stop_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmdConfig {
    pub x_axis: TmdAxisParams,
    pub y_axis: TmdAxisParams,
    pub gravity: f64,
    /// Position of P in nacelle coordinates. Carried through to outputs; the
    /// load equations take moments about P itself.
    pub mount_p: Vec3,
    pub control_mode: ControlMode,
}

impl TmdConfig {
    pub fn new(x_axis: TmdAxisParams, y_axis: TmdAxisParams) -> Self {
        Self {
            x_axis,
            y_axis,
            gravity: 9.81,
            mount_p: Vec3::zeros(),
            control_mode: ControlMode::Passive,
        }
    }

    pub fn axis(&self, axis: Axis) -> &TmdAxisParams {
        match axis {
            Axis::X => &self.x_axis,
            Axis::Y => &self.y_axis,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.x_axis.validate(Axis::X)?;
        self.y_axis.validate(Axis::Y)?;
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(Error::Constraint(format!("GRAVITY must be >= 0, got {}", self.gravity)));
        }
        if self.mount_p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Constraint("TMD_P_X/TMD_P_Y/TMD_P_Z must be finite".into()));
        }
        Ok(())
    }

    /// Initial state: each damper at its initial displacement, at rest.
    pub fn initial_state(&self) -> TmdState {
        TmdState {
            x: self.x_axis.initial_disp,
            x_dot: 0.0,
            y: self.y_axis.initial_disp,
            y_dot: 0.0,
        }
    }
}

/// Track displacements and velocities of both dampers in the nacelle frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TmdState {
    pub x: f64,
    pub x_dot: f64,
    pub y: f64,
    pub y_dot: f64,
}

impl TmdState {
    pub fn new(x: f64, x_dot: f64, y: f64, y_dot: f64) -> Self {
        Self { x, x_dot, y, y_dot }
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.x, self.x_dot, self.y, self.y_dot)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl Add for TmdState {
    type Output = TmdState;
    fn add(self, o: TmdState) -> TmdState {
        TmdState::new(self.x + o.x, self.x_dot + o.x_dot, self.y + o.y, self.y_dot + o.y_dot)
    }
}

impl Mul<f64> for TmdState {
    type Output = TmdState;
    fn mul(self, k: f64) -> TmdState {
        TmdState::new(self.x * k, self.x_dot * k, self.y * k, self.y_dot * k)
    }
}

impl OdeState for TmdState {
    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.x_dot.is_finite() && self.y.is_finite() && self.y_dot.is_finite()
    }
}

/// Actuator commands acting along each track.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExternalForce {
    pub f_x: f64,
    pub f_y: f64,
}

impl ExternalForce {
    pub const ZERO: ExternalForce = ExternalForce { f_x: 0.0, f_y: 0.0 };

    pub fn new(f_x: f64, f_y: f64) -> Self {
        Self { f_x, f_y }
    }
}

/// Track reactions on each damper in nacelle axes, from the zero relative
/// acceleration of the locked directions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstraintForces {
    pub fy_tmdx: f64,
    pub fz_tmdx: f64,
    pub fx_tmdy: f64,
    pub fz_tmdy: f64,
}

/// Loads the dampers exert on the nacelle at P.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoadOutput {
    pub force_g: Vec3,
    pub moment_g: Vec3,
    /// Same loads before rotation to global axes.
    pub force_n: Vec3,
    pub moment_n: Vec3,
    pub constraints: ConstraintForces,
    pub stop_fx: f64,
    pub stop_fy: f64,
}

impl LoadOutput {
    pub fn is_finite(&self) -> bool {
        self.force_g.iter().chain(self.moment_g.iter()).all(|v| v.is_finite())
    }
}

/// End-stop force on a damper.
///
/// Zero inside `[stop_min, stop_max]`. Past a stop the spring always acts;
/// the damper only acts while the mass is still moving outward, so it can
/// never pull the mass further past the stop.
pub fn stop_force(pos: f64, vel: f64, axis: &TmdAxisParams) -> f64 {
    let k_s = axis.stop_stiffness;
    let c_s = axis.stop_damping;
    if pos > axis.stop_max {
        let over = pos - axis.stop_max;
        if vel <= 0.0 {
            -k_s * over
        } else {
            -(k_s * over + c_s * vel)
        }
    } else if pos < axis.stop_min {
        let over = pos - axis.stop_min;
        if vel >= 0.0 {
            -k_s * over
        } else {
            -(k_s * over + c_s * vel)
        }
    } else {
        0.0
    }
}

/// Passive mode ignores any command; active mode passes it through.
pub fn active_force(mode: ControlMode, command: ExternalForce) -> ExternalForce {
    match mode {
        ControlMode::Passive => ExternalForce::ZERO,
        ControlMode::Active => command,
    }
}

fn stop_forces(s: &TmdState, cfg: &TmdConfig) -> (f64, f64) {
    let fx = if cfg.x_axis.dof_enabled {
        stop_force(s.x, s.x_dot, &cfg.x_axis)
    } else {
        0.0
    };
    let fy = if cfg.y_axis.dof_enabled {
        stop_force(s.y, s.y_dot, &cfg.y_axis)
    } else {
        0.0
    };
    (fx, fy)
}

fn effective_command(cfg: &TmdConfig, f_ext: ExternalForce) -> ExternalForce {
    let f = active_force(cfg.control_mode, f_ext);
    ExternalForce::new(
        if cfg.x_axis.dof_enabled { f.f_x } else { 0.0 },
        if cfg.y_axis.dof_enabled { f.f_y } else { 0.0 },
    )
}

/// Time derivative `(ẋ, ẍ, ẏ, ÿ)` of the damper state.
///
/// Along each track the mass feels its spring, damper, stop and actuator,
/// the gravity component, the nacelle acceleration and the centrifugal
/// softening from the two rates perpendicular to the track. Euler and
/// Coriolis terms only act across the track and end up in
/// [`constraint_forces`]. A disabled axis is frozen.
pub fn state_derivative(
    s: &TmdState,
    u: &NacelleMotionNacelleFrame,
    cfg: &TmdConfig,
    f_ext: ExternalForce,
) -> Result<TmdState> {
    let [wx, wy, wz] = [u.omega.x, u.omega.y, u.omega.z];
    let (stop_x, stop_y) = stop_forces(s, cfg);
    let cmd = effective_command(cfg, f_ext);

    let mut d = TmdState::default();
    let xa = &cfg.x_axis;
    if xa.dof_enabled {
        d.x = s.x_dot;
        d.x_dot = (wy * wy + wz * wz - xa.stiffness / xa.mass) * s.x - (xa.damping / xa.mass) * s.x_dot
            - u.accel.x
            + u.gravity.x
            + (cmd.f_x + stop_x) / xa.mass;
    }
    let ya = &cfg.y_axis;
    if ya.dof_enabled {
        d.y = s.y_dot;
        d.y_dot = (wx * wx + wz * wz - ya.stiffness / ya.mass) * s.y - (ya.damping / ya.mass) * s.y_dot
            - u.accel.y
            + u.gravity.y
            + (cmd.f_y + stop_y) / ya.mass;
    }
    if !d.is_finite() {
        return Err(Error::Integration {
            t: f64::NAN,
            message: format!("non-finite state derivative {d:?} at state {s:?}"),
        });
    }
    Ok(d)
}

/// The same dynamics in first-order matrix form `ṡ = A(u)·s + B(u)`.
///
/// `B` carries the stop forces, which depend on the current state.
pub fn state_matrices(
    s: &TmdState,
    u: &NacelleMotionNacelleFrame,
    cfg: &TmdConfig,
    f_ext: ExternalForce,
) -> (Matrix4<f64>, Vector4<f64>) {
    let (stop_x, stop_y) = stop_forces(s, cfg);
    let cmd = effective_command(cfg, f_ext);
    let mut a = Matrix4::zeros();
    let mut b = Vector4::zeros();
    let (xa, ya) = (&cfg.x_axis, &cfg.y_axis);
    if xa.dof_enabled {
        a[(0, 1)] = 1.0;
        a[(1, 0)] = u.omega.y.powi(2) + u.omega.z.powi(2) - xa.stiffness / xa.mass;
        a[(1, 1)] = -xa.damping / xa.mass;
        b[1] = -u.accel.x + u.gravity.x + (cmd.f_x + stop_x) / xa.mass;
    }
    if ya.dof_enabled {
        a[(2, 3)] = 1.0;
        a[(3, 2)] = u.omega.x.powi(2) + u.omega.z.powi(2) - ya.stiffness / ya.mass;
        a[(3, 3)] = -ya.damping / ya.mass;
        b[3] = -u.accel.y + u.gravity.y + (cmd.f_y + stop_y) / ya.mass;
    }
    (a, b)
}

/// Track reactions holding each damper on its line, in nacelle axes.
pub fn constraint_forces(
    s: &TmdState,
    u: &NacelleMotionNacelleFrame,
    cfg: &TmdConfig,
) -> ConstraintForces {
    let [wx, wy, wz] = [u.omega.x, u.omega.y, u.omega.z];
    let [ax, ay, az] = [u.alpha.x, u.alpha.y, u.alpha.z];
    let g = &u.gravity;
    let p = &u.accel;
    let m_x = cfg.x_axis.effective_mass();
    let m_y = cfg.y_axis.effective_mass();
    let (x, xd, y, yd) = (s.x, s.x_dot, s.y, s.y_dot);
    ConstraintForces {
        fy_tmdx: m_x * (-g.y + p.y + (az + wx * wy) * x + 2.0 * wz * xd),
        fz_tmdx: m_x * (-g.z + p.z - (ay - wx * wz) * x - 2.0 * wy * xd),
        fx_tmdy: m_y * (-g.x + p.x - (az - wx * wy) * y - 2.0 * wz * yd),
        fz_tmdy: m_y * (-g.z + p.z + (ax + wy * wz) * y + 2.0 * wx * yd),
    }
}

/// Reaction force and moment on the nacelle about P, rotated to global axes.
///
/// The actuator command reacts on the nacelle with opposite sign.
pub fn output_loads(
    s: &TmdState,
    u: &NacelleMotionNacelleFrame,
    r: &RotationMatrix,
    cfg: &TmdConfig,
    f_ext: ExternalForce,
) -> LoadOutput {
    let cf = constraint_forces(s, u, cfg);
    let (stop_x, stop_y) = stop_forces(s, cfg);
    let cmd = effective_command(cfg, f_ext);
    let (xa, ya) = (&cfg.x_axis, &cfg.y_axis);
    let track_x = if xa.dof_enabled {
        xa.stiffness * s.x + xa.damping * s.x_dot - stop_x - cmd.f_x
    } else {
        0.0
    };
    let track_y = if ya.dof_enabled {
        ya.stiffness * s.y + ya.damping * s.y_dot - stop_y - cmd.f_y
    } else {
        0.0
    };
    let force_n = Vec3::new(
        track_x - cf.fx_tmdy,
        track_y - cf.fy_tmdx,
        -cf.fz_tmdx - cf.fz_tmdy,
    );
    let moment_n = Vec3::new(
        -cf.fz_tmdy * s.y,
        cf.fz_tmdx * s.x,
        -cf.fy_tmdx * s.x + cf.fx_tmdy * s.y,
    );
    LoadOutput {
        force_g: rotate_to_global(r, &force_n),
        moment_g: rotate_to_global(r, &moment_n),
        force_n,
        moment_n,
        constraints: cf,
        stop_fx: stop_x,
        stop_fy: stop_y,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{euler_to_rotation, rotate_to_nacelle};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    const G: f64 = 9.81;

    fn x_only(m: f64, k: f64, c: f64) -> TmdConfig {
        TmdConfig::new(TmdAxisParams::new(m, k, c), TmdAxisParams::disabled())
    }

    fn stops() -> TmdAxisParams {
        TmdAxisParams::new(1.0, 0.0, 0.0).with_stops(-1.0, 1.0, 1e5, 1e3)
    }

    #[test]
    fn stop_force_branches() {
        let a = stops();
        assert_eq!(stop_force(0.0, 3.0, &a), 0.0);
        assert_relative_eq!(stop_force(1.1, 1.0, &a), -11000.0, epsilon = 1e-9);
        assert_relative_eq!(stop_force(1.1, -0.5, &a), -10000.0, epsilon = 1e-9);
        // at rest past the stop: spring only
        assert_relative_eq!(stop_force(1.1, 0.0, &a), -10000.0, epsilon = 1e-9);
        assert_relative_eq!(stop_force(-1.2, 0.0, &a), 20000.0, epsilon = 1e-9);
        assert_relative_eq!(stop_force(-1.2, 0.5, &a), 20000.0, epsilon = 1e-9);
        assert_relative_eq!(stop_force(-1.2, -0.5, &a), 20500.0, epsilon = 1e-9);
        // exactly at the stop nothing engages
        assert_eq!(stop_force(1.0, 5.0, &a), 0.0);
        assert_eq!(stop_force(-1.0, -5.0, &a), 0.0);
    }

    #[test]
    fn active_force_modes() {
        let cmd = ExternalForce::new(5.0, 5.0);
        assert_eq!(active_force(ControlMode::Passive, cmd), ExternalForce::ZERO);
        let cmd = ExternalForce::new(5.0, -2.0);
        assert_eq!(active_force(ControlMode::Active, cmd), cmd);
        assert_eq!(active_force(ControlMode::Active, ExternalForce::ZERO), ExternalForce::ZERO);
    }

    #[test]
    fn undamped_oscillator_acceleration() {
        let cfg = x_only(1.0, 100.0, 0.0);
        let s = TmdState::new(1.0, 0.0, 0.0, 0.0);
        let d = state_derivative(&s, &NacelleMotionNacelleFrame::level(G), &cfg, ExternalForce::ZERO).unwrap();
        assert_eq!(d.x, 0.0);
        assert_relative_eq!(d.x_dot, -100.0, epsilon = 1e-12);
        assert_eq!(d.y_dot, 0.0);
    }

    #[test]
    fn yaw_rate_softens_fore_aft_spring() {
        let cfg = x_only(1.0, 100.0, 0.0);
        let s = TmdState::new(1.0, 0.0, 0.0, 0.0);
        let mut u = NacelleMotionNacelleFrame::level(G);
        u.omega = Vec3::new(0.0, 0.0, 1.0);
        let d = state_derivative(&s, &u, &cfg, ExternalForce::ZERO).unwrap();
        assert_relative_eq!(d.x_dot, -99.0, epsilon = 1e-12);
    }

    #[test]
    fn pitched_nacelle_drives_fore_aft_damper() {
        let cfg = x_only(1.0, 100.0, 0.0);
        let r = RotationMatrix::rot_y(FRAC_PI_2);
        let u = crate::frames::NacelleMotionSample { r_ng: r, ..crate::frames::NacelleMotionSample::quiescent(0.0) }
            .to_nacelle_frame(G);
        let d = state_derivative(&TmdState::default(), &u, &cfg, ExternalForce::ZERO).unwrap();
        assert_relative_eq!(d.x_dot, -9.81, epsilon = 1e-12);
    }

    #[test]
    fn disabled_axis_is_frozen() {
        let cfg = x_only(1.0, 100.0, 0.0);
        let s = TmdState::new(0.0, 0.0, 0.3, 2.0);
        let d = state_derivative(&s, &NacelleMotionNacelleFrame::level(G), &cfg, ExternalForce::ZERO).unwrap();
        assert_eq!((d.y, d.y_dot), (0.0, 0.0));
    }

    #[test]
    fn non_finite_derivative_is_reported() {
        let cfg = x_only(1.0, 100.0, 0.0);
        let s = TmdState::new(f64::INFINITY, 0.0, 0.0, 0.0);
        let err = state_derivative(&s, &NacelleMotionNacelleFrame::level(G), &cfg, ExternalForce::ZERO);
        assert!(matches!(err, Err(Error::Integration { .. })));
    }

    #[test]
    fn constraint_force_examples() {
        let cfg = x_only(1.0, 0.0, 0.0);
        let level = NacelleMotionNacelleFrame::level(G);
        let cf = constraint_forces(&TmdState::new(1.0, 0.0, 0.0, 0.0), &level, &cfg);
        assert_eq!(cf.fy_tmdx, 0.0);
        assert_relative_eq!(cf.fz_tmdx, 9.81, epsilon = 1e-12);

        let mut yaw = level;
        yaw.omega.z = 2.0;
        let cf = constraint_forces(&TmdState::new(0.0, 1.0, 0.0, 0.0), &yaw, &cfg);
        assert_relative_eq!(cf.fy_tmdx, 4.0, epsilon = 1e-12);

        let mut yaw_acc = level;
        yaw_acc.alpha.z = 3.0;
        let cf = constraint_forces(&TmdState::new(2.0, 0.0, 0.0, 0.0), &yaw_acc, &cfg);
        assert_relative_eq!(cf.fy_tmdx, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn static_level_loads() {
        let cfg = TmdConfig::new(TmdAxisParams::new(1.0, 50.0, 1.0), TmdAxisParams::new(1.0, 80.0, 1.0));
        let out = output_loads(
            &TmdState::default(),
            &NacelleMotionNacelleFrame::level(G),
            &RotationMatrix::identity(),
            &cfg,
            ExternalForce::ZERO,
        );
        assert!((out.force_g - Vec3::new(0.0, 0.0, -19.62)).amax() < 1e-9);
        assert!(out.moment_g.amax() < 1e-9);

        let cfg = x_only(1.0, 0.0, 0.0);
        let out = output_loads(
            &TmdState::new(1.0, 0.0, 0.0, 0.0),
            &NacelleMotionNacelleFrame::level(G),
            &RotationMatrix::identity(),
            &cfg,
            ExternalForce::ZERO,
        );
        assert!((out.moment_g - Vec3::new(0.0, 9.81, 0.0)).amax() < 1e-9);
    }

    #[test]
    fn pitched_static_loads_carry_weight_in_global_axes() {
        // Pitched 90°: gravity runs along the x track. At x = −m g / k the
        // spring carries the weight and the global load is still straight down.
        let (m, k) = (2.0, 400.0);
        let cfg = x_only(m, k, 0.0);
        let r = RotationMatrix::rot_y(FRAC_PI_2);
        let u = crate::frames::NacelleMotionSample { r_ng: r, ..crate::frames::NacelleMotionSample::quiescent(0.0) }
            .to_nacelle_frame(G);
        let s = TmdState::new(-m * G / k, 0.0, 0.0, 0.0);
        let d = state_derivative(&s, &u, &cfg, ExternalForce::ZERO).unwrap();
        assert!(d.x_dot.abs() < 1e-12);
        let out = output_loads(&s, &u, &r, &cfg, ExternalForce::ZERO);
        assert!((out.force_g - Vec3::new(0.0, 0.0, -m * G)).amax() < 1e-9);
    }

    #[test]
    fn disabled_axis_contributes_nothing() {
        let mut y_axis = TmdAxisParams::new(3.0, 10.0, 2.0);
        y_axis.dof_enabled = false;
        y_axis.mass = 0.0;
        let with = TmdConfig::new(TmdAxisParams::new(1.0, 10.0, 1.0), y_axis);
        let without = x_only(1.0, 10.0, 1.0);
        let mut u = NacelleMotionNacelleFrame::level(G);
        u.omega = Vec3::new(0.4, -0.3, 1.0);
        u.alpha = Vec3::new(1.0, 2.0, -1.0);
        u.accel = Vec3::new(0.5, 1.5, -2.0);
        let s = TmdState::new(0.2, -0.1, 0.4, 0.8);
        let r = euler_to_rotation(0.1, 0.2, 0.3);
        let a = output_loads(&s, &u, &r, &with, ExternalForce::new(3.0, 3.0));
        let b = output_loads(&s, &u, &r, &without, ExternalForce::new(3.0, 3.0));
        assert_eq!(a.force_g, b.force_g);
        assert_eq!(a.moment_g, b.moment_g);
    }

    #[test]
    fn external_force_reacts_on_nacelle() {
        let mut cfg = x_only(1.0, 0.0, 0.0);
        cfg.control_mode = ControlMode::Active;
        let level = NacelleMotionNacelleFrame::level(G);
        let out = output_loads(&TmdState::default(), &level, &RotationMatrix::identity(), &cfg, ExternalForce::new(5.0, 7.0));
        assert_relative_eq!(out.force_n.x, -5.0, epsilon = 1e-12);
        let d = state_derivative(&TmdState::default(), &level, &cfg, ExternalForce::new(5.0, 0.0)).unwrap();
        assert_relative_eq!(d.x_dot, 5.0, epsilon = 1e-12);
        cfg.control_mode = ControlMode::Passive;
        let d = state_derivative(&TmdState::default(), &level, &cfg, ExternalForce::new(5.0, 0.0)).unwrap();
        assert_eq!(d.x_dot, 0.0);
    }

    fn arb_inputs() -> impl Strategy<Value = (TmdState, NacelleMotionNacelleFrame, (f64, f64, f64))> {
        let v = || (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c)| Vec3::new(a, b, c));
        (
            (-1.5..1.5f64, -2.0..2.0f64, -1.5..1.5f64, -2.0..2.0f64),
            v(),
            v(),
            v(),
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        )
            .prop_map(|((x, xd, y, yd), accel, omega, alpha, angles)| {
                let r = euler_to_rotation(angles.0, angles.1, angles.2);
                let u = NacelleMotionNacelleFrame {
                    accel,
                    omega,
                    alpha,
                    gravity: rotate_to_nacelle(&r, &Vec3::new(0.0, 0.0, -G)),
                };
                (TmdState::new(x, xd, y, yd), u, angles)
            })
    }

    fn full_config() -> TmdConfig {
        let mut cfg = TmdConfig::new(
            TmdAxisParams::new(2.0, 150.0, 3.0).with_stops(-1.0, 1.0, 1e4, 50.0),
            TmdAxisParams::new(1.5, 90.0, 1.0).with_stops(-0.8, 1.2, 2e4, 80.0),
        );
        cfg.control_mode = ControlMode::Active;
        cfg
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn matrix_form_matches_specialized_equations((s, u, _) in arb_inputs(), fx in -10.0..10.0f64, fy in -10.0..10.0f64) {
            let cfg = full_config();
            let f = ExternalForce::new(fx, fy);
            let d = state_derivative(&s, &u, &cfg, f).unwrap();
            let (a, b) = state_matrices(&s, &u, &cfg, f);
            let ab = a * s.to_vector() + b;
            // relative to the magnitude of the derivative; stop forces reach 1e4
            let scale = d.to_vector().amax().max(1.0);
            prop_assert!((ab - d.to_vector()).amax() <= 1e-12 * scale);
        }

        #[test]
        fn identity_orientation_leaves_loads_in_nacelle_axes((s, u, _) in arb_inputs()) {
            let cfg = full_config();
            let out = output_loads(&s, &u, &RotationMatrix::identity(), &cfg, ExternalForce::new(1.0, -1.0));
            prop_assert_eq!(out.force_g, out.force_n);
            prop_assert_eq!(out.moment_g, out.moment_n);
        }

        #[test]
        fn stop_force_is_continuous_at_the_stops(eps in 0.0..1e-3f64, vel in -5.0..5.0f64) {
            let a = stops();
            let bound = |outward: bool| a.stop_stiffness * eps + if outward { a.stop_damping * vel.abs() } else { 0.0 };
            prop_assert!(stop_force(a.stop_max + eps, vel, &a).abs() <= bound(vel > 0.0) + 1e-9);
            prop_assert_eq!(stop_force(a.stop_max - eps, vel, &a), 0.0);
            prop_assert!(stop_force(a.stop_min - eps, vel, &a).abs() <= bound(vel < 0.0) + 1e-9);
        }
    }
}
