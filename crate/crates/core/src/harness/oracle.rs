//! Inertial-frame reference for a single damper.
//!
//! The damper is treated as a free point mass in global coordinates. Its
//! track is a line through P along a nacelle axis; stiff penalty
//! spring-dampers hold the mass on that line. Nacelle position, velocity and
//! orientation are integrated from the prescribed acceleration and angular
//! velocity. No rotating-frame force terms appear anywhere, so agreement with
//! [`crate::tmd`] is an independent check of those terms.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::frames::{NacelleMotionSample, Vec3};
use crate::integrate::{simulate, step_count, MotionSeries, SimSettings};
use crate::tmd::{stop_force, Axis, TmdAxisParams, TmdConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyOracleConfig {
    pub penalty_stiffness: f64,
    pub penalty_damping: f64,
    pub dt_oracle: f64,
    /// Spacing of recorded samples; a whole multiple of `dt_oracle`.
    pub record_dt: f64,
    /// Largest tolerated off-track excursion.
    pub drift_limit: f64,
}

impl Default for PenaltyOracleConfig {
    fn default() -> Self {
        Self {
            penalty_stiffness: 1e9,
            penalty_damping: 1e5,
            dt_oracle: 1e-6,
            record_dt: 1e-3,
            drift_limit: 1e-4,
        }
    }
}

impl PenaltyOracleConfig {
    pub fn validate(&self, mass: f64) -> Result<()> {
        let positive = [
            ("penalty_stiffness", self.penalty_stiffness),
            ("penalty_damping", self.penalty_damping),
            ("dt_oracle", self.dt_oracle),
            ("record_dt", self.record_dt),
            ("drift_limit", self.drift_limit),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Invalid(format!("oracle {name} must be > 0, got {v}")));
        }
        let dt_max = 0.2 / (self.penalty_stiffness / mass).sqrt();
        if self.dt_oracle > dt_max {
            return Err(Error::Invalid(format!(
                "oracle step {} too large for penalty stiffness {} on mass {mass}; need <= {dt_max:e}",
                self.dt_oracle, self.penalty_stiffness
            )));
        }
        let ratio = self.record_dt / self.dt_oracle;
        if (ratio - ratio.round()).abs() > 1e-6 || ratio.round() < 1.0 {
            return Err(Error::Invalid(format!(
                "record spacing {} is not a whole multiple of the oracle step {}",
                self.record_dt, self.dt_oracle
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRecord {
    pub t: f64,
    /// Position along the track.
    pub position: f64,
    pub velocity: f64,
    /// Force the damper exerts on the nacelle, global axes.
    pub force_g: Vec3,
    /// Largest off-track component of the nacelle-frame offset.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrajectory {
    pub axis: Axis,
    pub records: Vec<OracleRecord>,
}

impl OracleTrajectory {
    pub fn max_drift(&self) -> f64 {
        self.records.iter().map(|r| r.drift).fold(0.0, f64::max)
    }
}

/// Linear interpolation of acceleration and angular velocity with a
/// forward-moving cursor; orientation is integrated, not interpolated.
struct Cursor<'a> {
    samples: &'a [NacelleMotionSample],
    idx: usize,
}

impl Cursor<'_> {
    fn at(&mut self, t: f64) -> Result<(Vec3, Vec3)> {
        let s = self.samples;
        let (start, end) = (s[0].t, s[s.len() - 1].t);
        let tol = 1e-9 * (end - start).max(1.0);
        if !(t >= start - tol && t <= end + tol) {
            return Err(Error::OutOfRange { t, start, end });
        }
        while self.idx + 2 < s.len() && s[self.idx + 1].t <= t {
            self.idx += 1;
        }
        while self.idx > 0 && s[self.idx].t > t {
            self.idx -= 1;
        }
        let (a, b) = (&s[self.idx], &s[self.idx + 1]);
        let f = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        Ok((
            a.accel_global * (1.0 - f) + b.accel_global * f,
            a.omega_global * (1.0 - f) + b.omega_global * f,
        ))
    }
}

/// Mass position and velocity relative to P in a frame that translates with
/// P but does not rotate, plus the nacelle orientation `R_GN`.
#[derive(Debug, Clone, Copy)]
struct OracleState {
    rel: Vec3,
    rel_v: Vec3,
    r_gn: Matrix3<f64>,
}

impl OracleState {
    fn axpy(&self, h: f64, d: &OracleState) -> OracleState {
        OracleState {
            rel: self.rel + d.rel * h,
            rel_v: self.rel_v + d.rel_v * h,
            r_gn: self.r_gn + d.r_gn * h,
        }
    }

    fn is_finite(&self) -> bool {
        self.rel.iter().chain(self.rel_v.iter()).chain(self.r_gn.iter()).all(|v| v.is_finite())
    }
}

struct Model<'a> {
    params: &'a TmdAxisParams,
    lane: usize,
    gravity: f64,
    k_pen: f64,
    c_pen: f64,
}

struct Forces {
    /// Force from the track on the mass, nacelle axes.
    on_mass_n: Vec3,
    offset: Vec3,
    offset_rate: Vec3,
}

impl Model<'_> {
    fn forces(&self, s: &OracleState, omega_g: &Vec3) -> Forces {
        let offset = s.r_gn.tr_mul(&s.rel);
        let offset_rate = s.r_gn.tr_mul(&(s.rel_v - omega_g.cross(&s.rel)));
        let mut f = Vec3::zeros();
        for i in 0..3 {
            f[i] = if i == self.lane {
                let (pos, vel) = (offset[i], offset_rate[i]);
                -self.params.stiffness * pos - self.params.damping * vel + stop_force(pos, vel, self.params)
            } else {
                -self.k_pen * offset[i] - self.c_pen * offset_rate[i]
            };
        }
        Forces {
            on_mass_n: f,
            offset,
            offset_rate,
        }
    }

    fn drift(&self, offset: &Vec3) -> f64 {
        (0..3).filter(|&i| i != self.lane).map(|i| offset[i].abs()).fold(0.0, f64::max)
    }

    fn derivative(&self, s: &OracleState, accel_g: &Vec3, omega_g: &Vec3) -> (OracleState, f64) {
        let fr = self.forces(s, omega_g);
        let force_g = s.r_gn * fr.on_mass_n;
        let mut acc = force_g / self.params.mass - accel_g;
        acc.z -= self.gravity;
        let r_dot = Matrix3::from_columns(&[
            omega_g.cross(&s.r_gn.column(0)),
            omega_g.cross(&s.r_gn.column(1)),
            omega_g.cross(&s.r_gn.column(2)),
        ]);
        let d = OracleState {
            rel: s.rel_v,
            rel_v: acc,
            r_gn: r_dot,
        };
        (d, self.drift(&fr.offset))
    }

    fn record(&self, t: f64, s: &OracleState, omega_g: &Vec3) -> OracleRecord {
        let fr = self.forces(s, omega_g);
        OracleRecord {
            t,
            position: fr.offset[self.lane],
            velocity: fr.offset_rate[self.lane],
            force_g: -(s.r_gn * fr.on_mass_n),
            drift: self.drift(&fr.offset),
        }
    }
}

/// Runs the penalty reference for the single enabled axis of `cfg`.
///
/// Passive dampers only; the actuator hook is not modelled. Records start
/// at the first motion sample and repeat every `record_dt`. Drift is
/// checked at every step.
pub fn inertial_oracle(
    series: &MotionSeries,
    cfg: &TmdConfig,
    oracle_cfg: &PenaltyOracleConfig,
) -> Result<OracleTrajectory> {
    cfg.validate()?;
    let axis = match (cfg.x_axis.dof_enabled, cfg.y_axis.dof_enabled) {
        (true, false) => Axis::X,
        (false, true) => Axis::Y,
        _ => {
            return Err(Error::Invalid(
                "the inertial oracle needs exactly one enabled damper axis".into(),
            ))
        }
    };
    let params = cfg.axis(axis);
    oracle_cfg.validate(params.mass)?;
    let model = Model {
        params,
        lane: match axis {
            Axis::X => 0,
            Axis::Y => 1,
        },
        gravity: cfg.gravity,
        k_pen: oracle_cfg.penalty_stiffness,
        c_pen: oracle_cfg.penalty_damping,
    };

    let first = series.samples()[0];
    let r_gn0 = *first.r_ng.transpose().matrix();
    let mut offset0 = Vec3::zeros();
    offset0[model.lane] = params.initial_disp;
    let rel0 = r_gn0 * offset0;
    // at rest on the track: carried along by the nacelle rotation
    let mut state = OracleState {
        rel: rel0,
        rel_v: first.omega_global.cross(&rel0),
        r_gn: r_gn0,
    };

    let dt = oracle_cfg.dt_oracle;
    let per_record = (oracle_cfg.record_dt / dt).round() as usize;
    let n_records = step_count(series.span(), oracle_cfg.record_dt);
    let t0 = series.t_first();
    let mut cursor = Cursor {
        samples: series.samples(),
        idx: 0,
    };
    let limit = oracle_cfg.drift_limit;
    let invalid = |t: f64, drift: f64| Error::OracleInvalid { t, drift, limit };

    let mut records = Vec::with_capacity(n_records + 1);
    let rec0 = model.record(t0, &state, &first.omega_global);
    if rec0.drift > limit {
        return Err(invalid(t0, rec0.drift));
    }
    records.push(rec0);
    let mut motion_t = cursor.at(t0)?;
    for step in 0..n_records * per_record {
        let t = t0 + step as f64 * dt;
        let t_next = t0 + (step + 1) as f64 * dt;
        let motion_mid = cursor.at(t + 0.5 * dt)?;
        let motion_next = cursor.at(t_next)?;
        let (k1, drift) = model.derivative(&state, &motion_t.0, &motion_t.1);
        if drift > limit {
            return Err(invalid(t, drift));
        }
        let (k2, _) = model.derivative(&state.axpy(0.5 * dt, &k1), &motion_mid.0, &motion_mid.1);
        let (k3, _) = model.derivative(&state.axpy(0.5 * dt, &k2), &motion_mid.0, &motion_mid.1);
        let (k4, _) = model.derivative(&state.axpy(dt, &k3), &motion_next.0, &motion_next.1);
        state = state
            .axpy(dt / 6.0, &k1)
            .axpy(dt / 3.0, &k2)
            .axpy(dt / 3.0, &k3)
            .axpy(dt / 6.0, &k4);
        motion_t = motion_next;
        if (step + 1) % per_record == 0 {
            if !state.is_finite() {
                return Err(Error::Integration {
                    t: t_next,
                    message: "non-finite oracle state".into(),
                });
            }
            let rec = model.record(t_next, &state, &motion_t.1);
            if rec.drift > limit {
                return Err(invalid(t_next, rec.drift));
            }
            records.push(rec);
        }
    }
    Ok(OracleTrajectory { axis, records })
}

/// Agreement between the core model and the reference for one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisComparison {
    pub axis: Axis,
    pub max_position_error: f64,
    pub max_force_error: f64,
    pub max_drift: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub position: f64,
    pub force: f64,
    /// Leading span left out of the force comparison while the penalty
    /// springs take up their load.
    pub settle: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            position: 1e-4,
            force: 1e-3,
            settle: 5e-3,
        }
    }
}

impl AxisComparison {
    pub fn passes(&self, th: &Thresholds) -> bool {
        self.max_position_error < th.position && self.max_force_error < th.force
    }
}

/// Runs the core model and the reference on each enabled axis of `cfg` in
/// turn and reports the largest disagreement. Records are compared on the
/// core step grid, so `core_dt` must be a whole multiple of the oracle step.
pub fn compare_with_core(
    series: &MotionSeries,
    cfg: &TmdConfig,
    core_dt: f64,
    oracle_cfg: &PenaltyOracleConfig,
    settle: f64,
) -> Result<Vec<AxisComparison>> {
    cfg.validate()?;
    let oracle_cfg = PenaltyOracleConfig {
        record_dt: core_dt,
        ..*oracle_cfg
    };
    let mut out = Vec::new();
    for axis in [Axis::X, Axis::Y] {
        if !cfg.axis(axis).dof_enabled {
            continue;
        }
        let mut single = *cfg;
        match axis {
            Axis::X => single.y_axis = TmdAxisParams::disabled(),
            Axis::Y => single.x_axis = TmdAxisParams::disabled(),
        }
        let core = simulate(series, &single, &SimSettings::new(core_dt), None)?;
        let reference = inertial_oracle(series, &single, &oracle_cfg)?;
        let t0 = series.t_first();
        let mut cmp = AxisComparison {
            axis,
            max_position_error: 0.0,
            max_force_error: 0.0,
            max_drift: reference.max_drift(),
            samples: 0,
        };
        for (c, o) in core.records.iter().zip(&reference.records) {
            let pos = match axis {
                Axis::X => c.state.x,
                Axis::Y => c.state.y,
            };
            cmp.max_position_error = cmp.max_position_error.max((pos - o.position).abs());
            if o.t - t0 >= settle {
                cmp.max_force_error = cmp.max_force_error.max((c.loads.force_g - o.force_g).amax());
            }
            cmp.samples += 1;
        }
        out.push(cmp);
    }
    if out.is_empty() {
        return Err(Error::Invalid("no damper axis is enabled".into()));
    }
    Ok(out)
}
