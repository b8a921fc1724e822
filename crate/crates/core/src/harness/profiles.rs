//! Analytic nacelle motions used to exercise the dampers.
//!
//! Orientation is built as `R_GN(t) = Rot_z(a)·Rot_y(b)·Rot_x(c)` from three
//! sinusoidal angles, so the angular velocity and acceleration follow in
//! closed form and are exactly consistent with the sampled orientation.

use crate::error::Result;
use crate::frames::{NacelleMotionSample, RotationMatrix, Vec3};
use crate::integrate::MotionSeries;
use crate::tmd::{TmdAxisParams, TmdConfig};

/// `amp·sin(freq·t + phase)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

impl Harmonic {
    pub const ZERO: Harmonic = Harmonic { amp: 0.0, freq: 0.0, phase: 0.0 };

    pub const fn new(amp: f64, freq: f64, phase: f64) -> Self {
        Self { amp, freq, phase }
    }

    /// Value and first two time derivatives.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (s, c) = (self.freq * t + self.phase).sin_cos();
        let w = self.freq;
        (self.amp * s, self.amp * w * c, -self.amp * w * w * s)
    }
}

const fn h(amp: f64, freq: f64, phase: f64) -> Harmonic {
    Harmonic::new(amp, freq, phase)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionProfile {
    /// Yaw about global z, then pitch about the yawed y, then roll about the
    /// resulting x.
    pub angles: [Harmonic; 3],
    /// Translational acceleration of P, global components.
    pub accel: [Harmonic; 3],
}

impl MotionProfile {
    /// Exact kinematics at time `t`.
    pub fn sample(&self, t: f64) -> NacelleMotionSample {
        let [(a, ad, add), (b, bd, bdd), (c, cd, cdd)] = self.angles.map(|h| h.eval(t));
        let rz = RotationMatrix::rot_z(a);
        let rzy = rz.compose(&RotationMatrix::rot_y(b));
        let r_gn = rzy.compose(&RotationMatrix::rot_x(c));

        let ez = Vec3::z();
        let u2 = rz.matrix() * Vec3::y();
        let u3 = rzy.matrix() * Vec3::x();
        let w_zy = ez * ad + u2 * bd;
        let omega = w_zy + u3 * cd;
        let alpha = ez * add + u2 * bdd + ez.cross(&u2) * (ad * bd) + u3 * cdd + w_zy.cross(&u3) * cd;

        NacelleMotionSample {
            t,
            accel_global: Vec3::from_fn(|i, _| self.accel[i].eval(t).0),
            r_ng: r_gn.transpose(),
            omega_global: omega,
            alpha_global: alpha,
        }
    }

    /// Upper bound on `|ω|` over all time.
    pub fn max_rate(&self) -> f64 {
        self.angles.iter().map(|h| h.amp.abs() * h.freq.abs()).sum()
    }

    /// Upper bound on `|r̈_P|` over all time.
    pub fn max_accel(&self) -> f64 {
        self.accel.iter().map(|h| h.amp * h.amp).sum::<f64>().sqrt()
    }

    pub fn series(&self, span: f64, spacing: f64) -> Result<MotionSeries> {
        MotionSeries::from_fn(0.0, span, spacing, |t| self.sample(t))
    }
}

/// Fixed table of bounded profiles: `|ω| ≤ 3 rad/s`, `|r̈_P| ≤ 5 m/s²`.
pub const VERIFY_PROFILES: [MotionProfile; 10] = [
    MotionProfile {
        angles: [h(0.8907, 0.6796, 1.4219), h(0.6094, 1.4664, 4.5979), h(0.6421, 1.5, 5.975)],
        accel: [h(1.3571, 4.4423, 5.4905), h(1.1063, 11.4111, 1.9114), h(0.6905, 7.3013, 2.3739)],
    },
    MotionProfile {
        angles: [h(0.3491, 1.8725, 1.6629), h(0.3158, 2.4726, 3.9852), h(0.4719, 1.8939, 4.5072)],
        accel: [h(1.3307, 9.0942, 4.9796), h(1.2644, 1.8979, 3.7016), h(0.7057, 7.5686, 4.3678)],
    },
    MotionProfile {
        angles: [h(0.709, 1.1372, 2.1516), h(0.361, 2.0085, 0.8965), h(0.8295, 0.9408, 3.8107)],
        accel: [h(1.2436, 5.0822, 0.229), h(1.1684, 10.3442, 0.1249), h(0.835, 8.2837, 4.6297)],
    },
    MotionProfile {
        angles: [h(2.1286, 0.359, 4.989), h(0.8185, 0.7899, 1.6291), h(1.4258, 0.6951, 5.2544)],
        accel: [h(0.6915, 3.1001, 0.2592), h(0.6522, 8.1914, 6.1745), h(1.4965, 8.0187, 4.1468)],
    },
    MotionProfile {
        angles: [h(0.5226, 1.2869, 5.6558), h(2.4422, 0.305, 0.4964), h(0.6993, 1.3726, 5.7068)],
        accel: [h(1.1493, 10.5594, 4.9431), h(1.2519, 11.6518, 3.9775), h(1.1413, 1.7022, 5.3028)],
    },
    MotionProfile {
        angles: [h(0.6027, 1.234, 0.8159), h(0.3745, 1.4474, 1.4964), h(0.3165, 1.9776, 2.848)],
        accel: [h(1.5587, 7.781, 2.0608), h(0.9448, 8.5612, 4.2428), h(0.9602, 5.894, 6.1416)],
    },
    MotionProfile {
        angles: [h(1.0449, 0.7397, 3.9998), h(0.6454, 0.8149, 0.4837), h(0.3568, 2.4688, 2.1857)],
        accel: [h(1.305, 10.2221, 4.5784), h(1.0115, 3.2451, 2.2549), h(1.0294, 1.4159, 3.1462)],
    },
    MotionProfile {
        angles: [h(0.4171, 2.2187, 4.618), h(0.7766, 0.9098, 4.2317), h(0.554, 1.4738, 1.0278)],
        accel: [h(0.6562, 3.2539, 5.5936), h(1.2899, 0.7073, 3.7772), h(1.4641, 2.6349, 4.1782)],
    },
    MotionProfile {
        angles: [h(0.4257, 1.2133, 5.9035), h(0.4247, 2.3531, 1.0682), h(0.3777, 2.4931, 4.0107)],
        accel: [h(1.2027, 4.8842, 3.6226), h(0.6766, 6.3898, 2.9398), h(1.0273, 6.0569, 0.0842)],
    },
    MotionProfile {
        angles: [h(0.4926, 1.1447, 6.1201), h(0.4689, 1.6475, 5.7504), h(0.2771, 2.1242, 3.8376)],
        accel: [h(0.8062, 9.8854, 5.4119), h(1.2087, 1.0181, 3.3232), h(0.7729, 9.0678, 4.8032)],
    },
];

/// Span and sample spacing of the verification motions.
pub const VERIFY_SPAN: f64 = 10.0;
pub const VERIFY_SPACING: f64 = 1e-4;

/// Sampled motion of `VERIFY_PROFILES[index]`.
pub fn verify_series(index: usize) -> Result<MotionSeries> {
    VERIFY_PROFILES[index].series(VERIFY_SPAN, VERIFY_SPACING)
}

/// Simultaneous yaw, pitch and fore-aft/side-side/heave sinusoids.
pub const GENERAL_PROFILE: MotionProfile = MotionProfile {
    angles: [h(0.8, 1.2, 0.0), h(0.25, 2.0, 0.5), h(0.1, 3.0, 1.0)],
    accel: [h(2.0, 9.0, 0.0), h(1.5, 6.0, 0.3), h(1.0, 4.0, 0.7)],
};

/// Level nacelle turning at a constant yaw rate.
pub fn constant_yaw(rate: f64, span: f64, spacing: f64) -> Result<MotionSeries> {
    MotionSeries::from_fn(0.0, span, spacing, |t| NacelleMotionSample {
        r_ng: RotationMatrix::rot_z(rate * t).transpose(),
        omega_global: Vec3::new(0.0, 0.0, rate),
        ..NacelleMotionSample::quiescent(t)
    })
}

/// Level, non-rotating nacelle with fore-aft acceleration `amp·sin(freq·t)`.
pub fn fore_aft_sine(amp: f64, freq: f64, span: f64, spacing: f64) -> Result<MotionSeries> {
    MotionSeries::from_fn(0.0, span, spacing, |t| NacelleMotionSample {
        accel_global: Vec3::new(amp * (freq * t).sin(), 0.0, 0.0),
        ..NacelleMotionSample::quiescent(t)
    })
}

/// Damper pair used by the verification suite: both axes on, lightly damped,
/// stops far enough out to stay inactive under the bounded profiles.
pub fn verify_config() -> TmdConfig {
    TmdConfig::new(
        TmdAxisParams::new(2.0, 200.0, 1.0)
            .with_stops(-1.0, 1.0, 1e5, 1e3)
            .with_initial_disp(0.05),
        TmdAxisParams::new(1.5, 60.0, 0.6)
            .with_stops(-1.0, 1.0, 1e5, 1e3)
            .with_initial_disp(-0.03),
    )
}
