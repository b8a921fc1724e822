//! Fixed-step RK4 time stepping of the damper states under a prescribed
//! nacelle motion series.

use std::ops::{Add, Mul};

use nalgebra::SVector;

use crate::error::{Error, Result};
use crate::frames::{NacelleMotionSample, Vec3};
use crate::io::config_digest;
use crate::tmd::{output_loads, state_derivative, ExternalForce, LoadOutput, TmdConfig, TmdState};

/// Anything RK4 can step: a vector space with a finiteness check.
pub trait OdeState: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn is_finite(&self) -> bool;
}

impl<const N: usize> OdeState for SVector<f64, N> {
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl OdeState for f64 {
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// One classical fourth-order Runge-Kutta step from `t` to `t + dt`.
pub fn rk4_step<S, F>(mut f: F, s: S, t: f64, dt: f64) -> Result<S>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S>,
{
    let half = 0.5 * dt;
    let mut eval = |tau: f64, x: &S| -> Result<S> {
        let d = f(tau, x).map_err(|e| stamp(e, tau))?;
        if !d.is_finite() {
            return Err(Error::Integration {
                t: tau,
                message: "non-finite derivative".into(),
            });
        }
        Ok(d)
    };
    let k1 = eval(t, &s)?;
    let k2 = eval(t + half, &(s + k1 * half))?;
    let k3 = eval(t + half, &(s + k2 * half))?;
    let k4 = eval(t + dt, &(s + k3 * dt))?;
    let next = s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if !next.is_finite() {
        return Err(Error::Integration {
            t: t + dt,
            message: "non-finite state".into(),
        });
    }
    Ok(next)
}

fn stamp(e: Error, t: f64) -> Error {
    match e {
        Error::Integration { t: old, message } if old.is_nan() => Error::Integration { t, message },
        other => other,
    }
}

/// Number of whole steps of size `dt` in `span`, tolerant of round-off.
pub fn step_count(span: f64, dt: f64) -> usize {
    (span / dt + 1e-9).floor() as usize
}

/// Time-ordered nacelle kinematics, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSeries {
    samples: Vec<NacelleMotionSample>,
}

impl MotionSeries {
    pub fn new(samples: Vec<NacelleMotionSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Invalid(format!(
                "motion series needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::Invalid(format!("motion sample {} is not finite", i + 1)));
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(Error::Invalid(format!(
                    "motion sample {} at t = {} does not follow t = {}",
                    i + 1,
                    s.t,
                    samples[i - 1].t
                )));
            }
        }
        Ok(Self { samples })
    }

    /// Samples `f(t)` on a uniform grid over `[t0, t1]`.
    pub fn from_fn(t0: f64, t1: f64, spacing: f64, f: impl Fn(f64) -> NacelleMotionSample) -> Result<Self> {
        let n = step_count(t1 - t0, spacing);
        Self::new((0..=n).map(|i| f(t0 + i as f64 * spacing)).collect())
    }

    /// A level, stationary nacelle over `[0, span]`.
    pub fn quiescent(span: f64) -> Self {
        Self::constant(NacelleMotionSample::quiescent(0.0), span)
    }

    pub fn constant(sample: NacelleMotionSample, span: f64) -> Self {
        let a = NacelleMotionSample { t: 0.0, ..sample };
        let b = NacelleMotionSample { t: span, ..sample };
        Self { samples: vec![a, b] }
    }

    pub fn samples(&self) -> &[NacelleMotionSample] {
        &self.samples
    }

    pub fn t_first(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_last(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn span(&self) -> f64 {
        self.t_last() - self.t_first()
    }

    /// Truncates the series to `[t_first, t_first + horizon]`.
    pub fn truncated(&self, horizon: f64) -> Result<Self> {
        let end = self.t_first() + horizon;
        let tol = 1e-9 * self.span().max(1.0);
        if end > self.t_last() + tol {
            return Err(Error::Invalid(format!(
                "horizon {horizon} exceeds motion series span {}",
                self.span()
            )));
        }
        let mut kept: Vec<_> = self.samples.iter().copied().filter(|s| s.t < end - tol).collect();
        kept.push(sample_motion(self, end.min(self.t_last()))?);
        Self::new(kept)
    }
}

/// Locates `t` in a sorted time axis. Returns the left index and the blend
/// fraction; times within round-off of the ends are clamped.
fn bracket(times: impl Fn(usize) -> f64, len: usize, t: f64) -> Result<(usize, f64)> {
    let (start, end) = (times(0), times(len - 1));
    let tol = 1e-9 * (end - start).max(1.0);
    if !(t >= start - tol && t <= end + tol) {
        return Err(Error::OutOfRange { t, start, end });
    }
    let t = t.clamp(start, end);
    // first index with time > t
    let (mut lo, mut hi) = (0usize, len);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if times(mid) <= t {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let i = lo.saturating_sub(1).min(len - 2);
    let (t0, t1) = (times(i), times(i + 1));
    Ok((i, (t - t0) / (t1 - t0)))
}

fn lerp(a: &Vec3, b: &Vec3, s: f64) -> Vec3 {
    a * (1.0 - s) + b * s
}

/// Interpolated nacelle kinematics at time `t`.
///
/// Vectors blend linearly; the orientation blends linearly and is then
/// re-orthonormalized. Sample times return the sample itself.
pub fn sample_motion(series: &MotionSeries, t: f64) -> Result<NacelleMotionSample> {
    let s = &series.samples;
    let (i, frac) = bracket(|k| s[k].t, s.len(), t)?;
    let (a, b) = (&s[i], &s[i + 1]);
    if frac == 0.0 {
        return Ok(*a);
    }
    if frac == 1.0 {
        return Ok(*b);
    }
    Ok(NacelleMotionSample {
        t,
        accel_global: lerp(&a.accel_global, &b.accel_global, frac),
        r_ng: a.r_ng.blend(&b.r_ng, frac),
        omega_global: lerp(&a.omega_global, &b.omega_global, frac),
        alpha_global: lerp(&a.alpha_global, &b.alpha_global, frac),
    })
}

/// Time-stamped actuator commands, interpolated like the motion series.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceSchedule {
    points: Vec<(f64, ExternalForce)>,
}

impl ForceSchedule {
    pub fn new(points: Vec<(f64, ExternalForce)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invalid("force schedule needs at least 2 points".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Invalid("force schedule times must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn sample(&self, t: f64) -> Result<ExternalForce> {
        let p = &self.points;
        let (i, s) = bracket(|k| p[k].0, p.len(), t)?;
        let (a, b) = (p[i].1, p[i + 1].1);
        Ok(ExternalForce::new(
            a.f_x * (1.0 - s) + b.f_x * s,
            a.f_y * (1.0 - s) + b.f_y * s,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    /// Simulated span from the first motion sample; `None` uses the whole series.
    pub horizon: Option<f64>,
}

impl SimSettings {
    pub fn new(dt: f64) -> Self {
        Self { dt, horizon: None }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub state: TmdState,
    pub loads: LoadOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub records: Vec<SimRecord>,
    pub dt: f64,
    pub steps: usize,
    pub config_digest: String,
    pub mount_p: Vec3,
}

/// Integrates the damper states across the motion series.
///
/// Stop forces and actuator commands are re-evaluated in every RK4 stage.
/// Records are taken on the grid `t_first + i·dt` for `i = 0..=steps`.
pub fn simulate(
    series: &MotionSeries,
    cfg: &TmdConfig,
    settings: &SimSettings,
    f_ext: Option<&ForceSchedule>,
) -> Result<SimResult> {
    cfg.validate()?;
    let dt = settings.dt;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Invalid(format!("time step must be > 0, got {dt}")));
    }
    let span = match settings.horizon {
        Some(h) if !(h.is_finite() && h >= 0.0) => {
            return Err(Error::Invalid(format!("horizon must be >= 0, got {h}")))
        }
        Some(h) if h > series.span() * (1.0 + 1e-12) => {
            return Err(Error::Invalid(format!(
                "horizon {h} exceeds motion series span {}",
                series.span()
            )))
        }
        Some(h) => h,
        None => series.span(),
    };
    let steps = step_count(span, dt);
    let t0 = series.t_first();
    let g = cfg.gravity;

    let command = |t: f64| -> Result<ExternalForce> {
        match f_ext {
            Some(sched) => sched.sample(t),
            None => Ok(ExternalForce::ZERO),
        }
    };
    let record = |t: f64, state: TmdState| -> Result<SimRecord> {
        let sample = sample_motion(series, t)?;
        let u = sample.to_nacelle_frame(g);
        let loads = output_loads(&state, &u, &sample.r_ng, cfg, command(t)?);
        if !loads.is_finite() {
            return Err(Error::Integration {
                t,
                message: "non-finite output loads".into(),
            });
        }
        Ok(SimRecord { t, state, loads })
    };

    let mut state = cfg.initial_state();
    let mut records = Vec::with_capacity(steps + 1);
    records.push(record(t0, state)?);
    for i in 0..steps {
        let t = t0 + i as f64 * dt;
        state = rk4_step(
            |tau, s: &TmdState| {
                let u = sample_motion(series, tau)?.to_nacelle_frame(g);
                state_derivative(s, &u, cfg, command(tau)?)
            },
            state,
            t,
            dt,
        )?;
        records.push(record(t0 + (i + 1) as f64 * dt, state)?);
    }
    Ok(SimResult {
        records,
        dt,
        steps,
        config_digest: config_digest(cfg),
        mount_p: cfg.mount_p,
    })
}
