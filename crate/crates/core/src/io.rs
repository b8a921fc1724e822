//! Config file parsing, motion CSV ingestion and result CSV output.
//!
//! The config accepts two line forms, freely mixed:
//!
//! ```text
//!    1000   TMD_X_M    - TMD mass
//! TMD_X_K = 25000
//! ```
//!
//! Blank lines, lines starting with `#`, `!`, `-` or `=`, and free-text
//! lines whose second word is not a key are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::Matrix3;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::frames::{euler_to_rotation, NacelleMotionSample, RotationMatrix, Vec3};
use crate::integrate::{MotionSeries, SimResult};
use crate::tmd::{Axis, ConstraintForces, ControlMode, TmdAxisParams, TmdConfig, TmdState};

/// Every key of the damper input file, in file order.
pub const TABLE1_KEYS: [&str; 22] = [
    "TMD_CMODE",
    "TMD_X_DOF",
    "TMD_Y_DOF",
    "TMD_X_DSP",
    "TMD_Y_DSP",
    "TMD_X_M",
    "TMD_X_K",
    "TMD_X_C",
    "TMD_Y_M",
    "TMD_Y_K",
    "TMD_Y_C",
    "TMD_X_DWSP",
    "TMD_X_UWSP",
    "TMD_X_K_SX",
    "TMD_X_C_SX",
    "TMD_Y_PLSP",
    "TMD_Y_NLSP",
    "TMD_Y_K_S",
    "TMD_Y_C_S",
    "TMD_P_X",
    "TMD_P_Y",
    "TMD_P_Z",
];

pub const GRAVITY_KEY: &str = "GRAVITY";
pub const DEFAULT_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    Required,
    Optional,
}

/// Looks up a config key in the registry.
pub fn key_kind(key: &str) -> Option<KeyKind> {
    if TABLE1_KEYS.contains(&key) {
        Some(KeyKind::Required)
    } else if key == GRAVITY_KEY {
        Some(KeyKind::Optional)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Raw key/value pairs of a config file with their source lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDocument {
    pub entries: Vec<ConfigEntry>,
}

fn looks_like_key(word: &str) -> bool {
    word.starts_with("TMD_")
        || (word.len() > 1
            && word.contains('_')
            && word.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_'))
}

fn strip_comment(s: &str) -> &str {
    let end = s.find(['#', '!']).unwrap_or(s.len());
    &s[..end]
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = ConfigDocument::default();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with(['#', '!', '=']) || trimmed.starts_with("--") {
                continue;
            }
            let (key, value) = match trimmed.split_once('=') {
                Some((lhs, rhs)) if lhs.split_whitespace().count() == 1 => {
                    let key = lhs.trim();
                    if key_kind(key).is_none() {
                        return Err(Error::Syntax {
                            line,
                            message: format!("unknown key {key}"),
                        });
                    }
                    let value = strip_comment(rhs).split_whitespace().next().ok_or_else(|| Error::Syntax {
                        line,
                        message: format!("{key} has no value"),
                    })?;
                    (key, value)
                }
                _ => {
                    let mut words = trimmed.split_whitespace();
                    let (Some(value), Some(key)) = (words.next(), words.next()) else {
                        continue;
                    };
                    if key_kind(key).is_none() {
                        if looks_like_key(key) {
                            return Err(Error::Syntax {
                                line,
                                message: format!("unknown key {key}"),
                            });
                        }
                        continue;
                    }
                    (key, value)
                }
            };
            if let Some(&first_line) = seen.get(key) {
                return Err(Error::DuplicateKey {
                    key: key.to_string(),
                    line,
                    first_line,
                });
            }
            seen.insert(key.to_string(), line);
            doc.entries.push(ConfigEntry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(doc)
    }

    pub fn get(&self, key: &str) -> Option<&ConfigEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn real(&self, key: &str) -> Result<f64> {
        let e = self.get(key).expect("presence checked");
        // Fortran-style exponents are common in FAST inputs
        let v = e.value.replace(['D', 'd'], "e");
        v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::TypeMismatch {
            key: key.to_string(),
            line: e.line,
            expected: "real",
            found: e.value.clone(),
        })
    }

    fn logical(&self, key: &str) -> Result<bool> {
        let e = self.get(key).expect("presence checked");
        match e.value.to_ascii_lowercase().as_str() {
            "true" | "t" | ".true." => Ok(true),
            "false" | "f" | ".false." => Ok(false),
            _ => Err(Error::TypeMismatch {
                key: key.to_string(),
                line: e.line,
                expected: "logical (True/False)",
                found: e.value.clone(),
            }),
        }
    }

    fn int(&self, key: &str) -> Result<i64> {
        let e = self.get(key).expect("presence checked");
        e.value.parse::<i64>().map_err(|_| Error::TypeMismatch {
            key: key.to_string(),
            line: e.line,
            expected: "int",
            found: e.value.clone(),
        })
    }

    fn axis(&self, axis: Axis) -> Result<TmdAxisParams> {
        let [dof, dsp, m, k, c, smax, smin, ks, cs] = axis.keys();
        Ok(TmdAxisParams {
            dof_enabled: self.logical(dof)?,
            initial_disp: self.real(dsp)?,
            mass: self.real(m)?,
            stiffness: self.real(k)?,
            damping: self.real(c)?,
            stop_max: self.real(smax)?,
            stop_min: self.real(smin)?,
            stop_stiffness: self.real(ks)?,
            stop_damping: self.real(cs)?,
        })
    }

    /// Builds and validates the configuration.
    pub fn to_config(&self) -> Result<TmdConfig> {
        let missing: Vec<String> = TABLE1_KEYS
            .iter()
            .filter(|k| self.get(k).is_none())
            .map(|k| k.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingKeys(missing));
        }
        let mode_code = self.int("TMD_CMODE")?;
        let control_mode = ControlMode::from_code(mode_code).ok_or_else(|| Error::Syntax {
            line: self.get("TMD_CMODE").map_or(0, |e| e.line),
            message: format!("TMD_CMODE must be 1 (passive) or 2 (active), got {mode_code}"),
        })?;
        let gravity = match self.get(GRAVITY_KEY) {
            Some(_) => self.real(GRAVITY_KEY)?,
            None => DEFAULT_GRAVITY,
        };
        let cfg = TmdConfig {
            x_axis: self.axis(Axis::X)?,
            y_axis: self.axis(Axis::Y)?,
            gravity,
            mount_p: Vec3::new(self.real("TMD_P_X")?, self.real("TMD_P_Y")?, self.real("TMD_P_Z")?),
            control_mode,
        };
        cfg.validate().map_err(|e| match e {
            Error::Constraint(msg) => Error::Constraint(self.annotate_lines(msg)),
            other => other,
        })?;
        Ok(cfg)
    }

    /// Appends the source line of every key named in `msg`.
    fn annotate_lines(&self, msg: String) -> String {
        let mut mentioned: Vec<&ConfigEntry> = self
            .entries
            .iter()
            .filter(|e| msg.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).any(|w| w == e.key))
            .collect();
        if mentioned.is_empty() {
            return msg;
        }
        mentioned.sort_by_key(|e| e.line);
        let lines: Vec<String> = mentioned.iter().map(|e| format!("{} on line {}", e.key, e.line)).collect();
        format!("{msg} ({})", lines.join(", "))
    }
}

pub fn parse_config(text: &str) -> Result<TmdConfig> {
    ConfigDocument::parse(text)?.to_config()
}

fn logical(v: bool) -> &'static str {
    if v {
        "True"
    } else {
        "False"
    }
}

/// Renders every key as `KEY = value`; the inverse of [`parse_config`].
pub fn render_config(cfg: &TmdConfig) -> String {
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    put("TMD_CMODE", cfg.control_mode.code().to_string());
    put("TMD_X_DOF", logical(cfg.x_axis.dof_enabled).into());
    put("TMD_Y_DOF", logical(cfg.y_axis.dof_enabled).into());
    put("TMD_X_DSP", format!("{:?}", cfg.x_axis.initial_disp));
    put("TMD_Y_DSP", format!("{:?}", cfg.y_axis.initial_disp));
    for (axis, p) in [(Axis::X, &cfg.x_axis), (Axis::Y, &cfg.y_axis)] {
        let [_, _, m, k, c, ..] = axis.keys();
        put(m, format!("{:?}", p.mass));
        put(k, format!("{:?}", p.stiffness));
        put(c, format!("{:?}", p.damping));
    }
    for (axis, p) in [(Axis::X, &cfg.x_axis), (Axis::Y, &cfg.y_axis)] {
        let [.., smax, smin, ks, cs] = axis.keys();
        put(smax, format!("{:?}", p.stop_max));
        put(smin, format!("{:?}", p.stop_min));
        put(ks, format!("{:?}", p.stop_stiffness));
        put(cs, format!("{:?}", p.stop_damping));
    }
    put("TMD_P_X", format!("{:?}", cfg.mount_p.x));
    put("TMD_P_Y", format!("{:?}", cfg.mount_p.y));
    put("TMD_P_Z", format!("{:?}", cfg.mount_p.z));
    put(GRAVITY_KEY, format!("{:?}", cfg.gravity));
    out
}

/// SHA-256 of the rendered configuration, hex encoded.
pub fn config_digest(cfg: &TmdConfig) -> String {
    hex::encode(Sha256::digest(render_config(cfg).as_bytes()))
}

pub const MOTION_BASE_COLUMNS: [&str; 10] = ["time", "ax_P", "ay_P", "az_P", "wx", "wy", "wz", "alx", "aly", "alz"];
pub const ROTATION_COLUMNS: [&str; 9] = ["r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33"];
pub const EULER_COLUMNS: [&str; 3] = ["theta", "phi", "psi"];

pub const RESULT_COLUMNS: [&str; 17] = [
    "time", "x", "xdot", "y", "ydot", "fx_G", "fy_G", "fz_G", "mx_G", "my_G", "mz_G", "fstop_x", "fstop_y",
    "fy_tmdx", "fz_tmdx", "fx_tmdy", "fz_tmdy",
];

fn header_error(message: String) -> Error {
    Error::Csv {
        row: 0,
        column: "header".into(),
        message,
    }
}

/// Maps each required column to its index, rejecting unknown or repeated
/// names. Rows are numbered from 1 after the header; the header is row 0.
fn column_index(headers: &csv::StringRecord, allowed: &[&str]) -> Result<HashMap<String, usize>> {
    let mut idx = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if !allowed.contains(&h) {
            return Err(header_error(format!("unknown column {h:?}")));
        }
        if idx.insert(h.to_string(), i).is_some() {
            return Err(header_error(format!("column {h:?} appears twice")));
        }
    }
    Ok(idx)
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn field(record: &csv::StringRecord, idx: &HashMap<String, usize>, column: &str, row: usize) -> Result<f64> {
    let raw = record.get(idx[column]).unwrap_or("");
    raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Csv {
        row,
        column: column.to_string(),
        message: format!("expected a finite number, found {raw:?}"),
    })
}

fn record_error(e: csv::Error, row: usize) -> Error {
    Error::Csv {
        row,
        column: String::new(),
        message: e.to_string(),
    }
}

/// Parses a nacelle motion CSV.
///
/// Orientation comes from either the nine `r11..r33` entries of `R_NG` or
/// the three angles of [`euler_to_rotation`]; exactly one group must be
/// present.
pub fn read_motion_csv(text: &str) -> Result<MotionSeries> {
    let mut rdr = csv_reader(text);
    let headers = rdr.headers().map_err(|e| record_error(e, 0))?.clone();
    let allowed: Vec<&str> = MOTION_BASE_COLUMNS
        .iter()
        .chain(ROTATION_COLUMNS.iter())
        .chain(EULER_COLUMNS.iter())
        .copied()
        .collect();
    let idx = column_index(&headers, &allowed)?;
    let missing: Vec<&str> = MOTION_BASE_COLUMNS.iter().copied().filter(|c| !idx.contains_key(*c)).collect();
    if !missing.is_empty() {
        return Err(header_error(format!("missing column(s): {}", missing.join(", "))));
    }
    let count = |group: &[&str]| group.iter().filter(|c| idx.contains_key(**c)).count();
    let (n_rot, n_euler) = (count(&ROTATION_COLUMNS), count(&EULER_COLUMNS));
    let use_matrix = match (n_rot, n_euler) {
        (9, 0) => true,
        (0, 3) => false,
        (0, 0) => {
            return Err(header_error(
                "no orientation columns: give r11..r33 or theta, phi, psi".into(),
            ))
        }
        (9, 3) => {
            return Err(header_error(
                "both r11..r33 and theta, phi, psi present; give exactly one".into(),
            ))
        }
        _ => {
            return Err(header_error(
                "incomplete orientation columns: need all of r11..r33 or all of theta, phi, psi".into(),
            ))
        }
    };

    let mut samples: Vec<NacelleMotionSample> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| record_error(e, row))?;
        let f = |c: &str| field(&rec, &idx, c, row);
        let t = f("time")?;
        if let Some(prev) = samples.last() {
            if t <= prev.t {
                return Err(Error::Csv {
                    row,
                    column: "time".into(),
                    message: format!("non-monotone time: {t} does not follow {}", prev.t),
                });
            }
        }
        let r_ng = if use_matrix {
            let mut m = Matrix3::zeros();
            for (k, c) in ROTATION_COLUMNS.iter().enumerate() {
                m[(k / 3, k % 3)] = f(c)?;
            }
            RotationMatrix::from_matrix(m).map_err(|e| Error::Csv {
                row,
                column: "r11..r33".into(),
                message: e.to_string(),
            })?
        } else {
            euler_to_rotation(f("theta")?, f("phi")?, f("psi")?)
        };
        samples.push(NacelleMotionSample {
            t,
            accel_global: Vec3::new(f("ax_P")?, f("ay_P")?, f("az_P")?),
            r_ng,
            omega_global: Vec3::new(f("wx")?, f("wy")?, f("wz")?),
            alpha_global: Vec3::new(f("alx")?, f("aly")?, f("alz")?),
        });
    }
    if samples.len() < 2 {
        return Err(Error::Csv {
            row: samples.len(),
            column: String::new(),
            message: format!("motion CSV needs at least 2 data rows, found {}", samples.len()),
        });
    }
    MotionSeries::new(samples)
}

/// Writes a motion series with the full rotation matrix, at full precision.
pub fn write_motion_csv(series: &MotionSeries) -> String {
    let mut out = String::new();
    let header: Vec<&str> = MOTION_BASE_COLUMNS[..4]
        .iter()
        .chain(ROTATION_COLUMNS.iter())
        .chain(MOTION_BASE_COLUMNS[4..].iter())
        .copied()
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for s in series.samples() {
        let mut vals = vec![s.t, s.accel_global.x, s.accel_global.y, s.accel_global.z];
        vals.extend(s.r_ng.rows().iter().flatten());
        vals.extend(s.omega_global.iter());
        vals.extend(s.alpha_global.iter());
        let row: Vec<String> = vals.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Formats with 9 significant digits, `%g` style: plain notation for
/// moderate magnitudes, scientific otherwise, trailing zeros removed.
pub fn fmt_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Serializes a simulation result: one row per output step.
pub fn write_result_csv(result: &SimResult) -> String {
    let mut out = RESULT_COLUMNS.join(",");
    out.push('\n');
    for r in &result.records {
        let (s, l, c) = (&r.state, &r.loads, &r.loads.constraints);
        let vals = [
            r.t, s.x, s.x_dot, s.y, s.y_dot, l.force_g.x, l.force_g.y, l.force_g.z, l.moment_g.x, l.moment_g.y,
            l.moment_g.z, l.stop_fx, l.stop_fy, c.fy_tmdx, c.fz_tmdx, c.fx_tmdy, c.fz_tmdy,
        ];
        let row: Vec<String> = vals.iter().map(|v| fmt_sig9(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One parsed row of a result CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub t: f64,
    pub state: TmdState,
    pub force_g: Vec3,
    pub moment_g: Vec3,
    pub stop_fx: f64,
    pub stop_fy: f64,
    pub constraints: ConstraintForces,
}

pub fn read_result_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut rdr = csv_reader(text);
    let headers = rdr.headers().map_err(|e| record_error(e, 0))?.clone();
    let idx = column_index(&headers, &RESULT_COLUMNS)?;
    if idx.len() != RESULT_COLUMNS.len() {
        let missing: Vec<&str> = RESULT_COLUMNS.iter().copied().filter(|c| !idx.contains_key(*c)).collect();
        return Err(header_error(format!("missing column(s): {}", missing.join(", "))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| record_error(e, row))?;
        let f = |c: &str| field(&rec, &idx, c, row);
        rows.push(ResultRow {
            t: f("time")?,
            state: TmdState::new(f("x")?, f("xdot")?, f("y")?, f("ydot")?),
            force_g: Vec3::new(f("fx_G")?, f("fy_G")?, f("fz_G")?),
            moment_g: Vec3::new(f("mx_G")?, f("my_G")?, f("mz_G")?),
            stop_fx: f("fstop_x")?,
            stop_fy: f("fstop_y")?,
            constraints: ConstraintForces {
                fy_tmdx: f("fy_tmdx")?,
                fz_tmdx: f("fz_tmdx")?,
                fx_tmdy: f("fx_tmdy")?,
                fz_tmdy: f("fz_tmdy")?,
            },
        });
    }
    Ok(rows)
}
