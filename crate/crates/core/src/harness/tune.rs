//! Passive tuning of a fore-aft damper on the modal tower.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::harness::tower::{run_coupled, ModalDof, Multisine, TowerModel};
use crate::io::fmt_sig9;
use crate::tmd::{TmdAxisParams, TmdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// RMS fore-aft tower displacement under broadband forcing, simulated.
    Rms,
    /// Peak of the tower displacement frequency response, normalized by the
    /// static deflection.
    HInf,
}

/// Closed ranges for damper stiffness and damping. A range of zero width
/// pins that parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub k: (f64, f64),
    pub c: (f64, f64),
}

impl SearchBox {
    /// Frequency ratio 0.5 to 1.5 and damping ratio 0.005 to 0.5 for a
    /// damper of mass `mass_ratio·M` on `host`.
    pub fn around(host: &ModalDof, mass_ratio: f64) -> Self {
        let m = mass_ratio * host.mass;
        let w = host.natural_frequency();
        Self {
            k: (m * (0.5 * w).powi(2), m * (1.5 * w).powi(2)),
            c: (2.0 * m * w * 0.005, 2.0 * m * w * 0.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("k", self.k), ("c", self.c)] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
                return Err(Error::Invalid(format!(
                    "search box for {name} must satisfy 0 < min <= max, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, k: f64, c: f64) -> bool {
        (self.k.0..=self.k.1).contains(&k) && (self.c.0..=self.c.1).contains(&c)
    }

    fn ranges(&self) -> [(f64, f64); 2] {
        [self.k, self.c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOptions {
    pub max_evals: usize,
    /// Relative spread of simplex objective values at which a pass stops.
    pub f_tol: f64,
    /// Simplex size in normalized box coordinates at which a pass stops.
    pub x_tol: f64,
    /// Additional passes restarted from the best point.
    pub restarts: usize,
    pub rms_dt: f64,
    /// Excitation periods simulated per RMS evaluation, and how many of
    /// them are discarded as transient.
    pub rms_periods: usize,
    pub rms_skip_periods: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            max_evals: 600,
            f_tol: 1e-10,
            x_tol: 1e-7,
            restarts: 2,
            rms_dt: 5e-3,
            rms_periods: 4,
            rms_skip_periods: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditEntry {
    pub eval: usize,
    pub k: f64,
    pub c: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub mass: f64,
    pub k: f64,
    pub c: f64,
    pub objective: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out first; the best point so far
    /// is still reported.
    pub converged: bool,
    pub audit: Vec<AuditEntry>,
    pub host_frequency: f64,
}

impl TuneResult {
    /// Damper frequency over host frequency.
    pub fn frequency_ratio(&self) -> f64 {
        (self.k / self.mass).sqrt() / self.host_frequency
    }

    /// `c / (2·m·ω_host)`
    pub fn damping_ratio(&self) -> f64 {
        self.c / (2.0 * self.mass * self.host_frequency)
    }

    pub fn audit_csv(&self) -> String {
        let mut out = String::from("eval,k,c,objective\n");
        for a in &self.audit {
            out.push_str(&format!(
                "{},{},{},{}\n",
                a.eval,
                fmt_sig9(a.k),
                fmt_sig9(a.c),
                fmt_sig9(a.objective)
            ));
        }
        out
    }
}

/// Number of points on the frequency grid of the peak objective.
pub const HINF_GRID_POINTS: usize = 2000;

/// Peak of `|X_host|·K/F` over a log grid from 0.2 to 5 times the host
/// frequency, for the host carrying a damper `(m, k, c)`.
pub fn hinf_objective(host: &ModalDof, m: f64, k: f64, c: f64) -> f64 {
    let w_t = host.natural_frequency();
    let (lo, hi) = ((0.2 * w_t).ln(), (5.0 * w_t).ln());
    (0..HINF_GRID_POINTS)
        .map(|i| {
            let w = (lo + (hi - lo) * i as f64 / (HINF_GRID_POINTS - 1) as f64).exp();
            host.stiffness * host_receptance(host, m, k, c, w).norm()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn host_receptance(host: &ModalDof, m: f64, k: f64, c: f64, w: f64) -> Complex<f64> {
    let link = Complex::new(k, w * c);
    let tmd = link - w * w * m;
    let main = Complex::new(host.stiffness, w * host.damping) + link - w * w * host.mass;
    tmd / (main * tmd - link * link)
}

/// Steady RMS of the fore-aft tower displacement under the broadband
/// forcing used by the demo, for a damper `(m, k, c)` on the X track.
pub fn rms_objective(tower: &TowerModel, m: f64, k: f64, c: f64, opts: &TuneOptions) -> Result<f64> {
    let exc = Multisine::broadband(tower.fore_aft.natural_frequency(), 1.0);
    let period = exc.period();
    let from = period * opts.rms_skip_periods as f64;
    let cfg = TmdConfig::new(TmdAxisParams::new(m, k, c), TmdAxisParams::disabled());
    let (mut sum, mut n) = (0.0, 0usize);
    run_coupled(tower, &cfg, &exc, opts.rms_dt, period * opts.rms_periods as f64, |r| {
        if r.t >= from {
            sum += r.state[0] * r.state[0];
            n += 1;
        }
    })?;
    Ok((sum / n.max(1) as f64).sqrt())
}

/// Finds the damper stiffness and damping that minimize the objective for a
/// fore-aft damper of mass `mass_ratio·M`, with default options.
pub fn tune_passive(
    tower: &TowerModel,
    mass_ratio: f64,
    search: &SearchBox,
    objective: Objective,
) -> Result<TuneResult> {
    tune_passive_with(tower, mass_ratio, search, objective, &TuneOptions::default())
}

pub fn tune_passive_with(
    tower: &TowerModel,
    mass_ratio: f64,
    search: &SearchBox,
    objective: Objective,
    opts: &TuneOptions,
) -> Result<TuneResult> {
    tower.validate()?;
    search.validate()?;
    if !(mass_ratio > 0.0 && mass_ratio <= 0.2) {
        return Err(Error::Invalid(format!("mass ratio must lie in (0, 0.2], got {mass_ratio}")));
    }
    if opts.max_evals < 3 {
        return Err(Error::Invalid("tuner needs at least 3 evaluations".into()));
    }
    let mass = mass_ratio * tower.fore_aft.mass;
    let eval = |k: f64, c: f64| -> Result<f64> {
        match objective {
            Objective::HInf => Ok(hinf_objective(&tower.fore_aft, mass, k, c)),
            Objective::Rms => rms_objective(tower, mass, k, c, opts),
        }
    };
    let ranges = search.ranges();
    let free: Vec<usize> = (0..2).filter(|&i| ranges[i].1 > ranges[i].0).collect();
    let to_params = |u: &[f64]| -> [f64; 2] {
        let mut p = [ranges[0].0, ranges[1].0];
        for (j, &i) in free.iter().enumerate() {
            let (lo, hi) = ranges[i];
            p[i] = lo + (hi - lo) * u[j].clamp(0.0, 1.0);
        }
        p
    };

    let mut audit = Vec::new();
    let mut objective_at = |u: &[f64]| -> Result<f64> {
        let [k, c] = to_params(u);
        let f = eval(k, c)?;
        audit.push(AuditEntry {
            eval: audit.len() + 1,
            k,
            c,
            objective: f,
        });
        Ok(f)
    };

    let start = vec![0.5; free.len()];
    let f_start = objective_at(&start)?;
    if !f_start.is_finite() {
        let [k, c] = to_params(&start);
        return Err(Error::Invalid(format!(
            "objective is not finite at the start point k = {k}, c = {c}"
        )));
    }
    let mut best = (start, f_start);
    let mut converged = free.is_empty();
    let mut used = 1;
    let mut step = 0.25;
    for _ in 0..=opts.restarts {
        if free.is_empty() {
            break;
        }
        let pass = nelder_mead(&mut objective_at, &best.0, best.1, step, opts, opts.max_evals - used)?;
        used += pass.evals;
        converged = pass.converged;
        if pass.best.1 <= best.1 {
            best = (pass.best.0, pass.best.1);
        }
        if !converged || used >= opts.max_evals {
            break;
        }
        step = 0.05;
    }
    let [k, c] = to_params(&best.0);
    Ok(TuneResult {
        mass,
        k,
        c,
        objective: best.1,
        evaluations: audit.len(),
        converged,
        audit,
        host_frequency: tower.fore_aft.natural_frequency(),
    })
}

struct Pass {
    best: (Vec<f64>, f64),
    evals: usize,
    converged: bool,
}

/// Bounded Nelder–Mead on the unit box with reflection 1, expansion 2,
/// contraction 0.5 and shrink 0.5. Trial points are clamped to the box.
/// `f0` is the known value at `x0`.
fn nelder_mead(
    f: &mut impl FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    f0: f64,
    step: f64,
    opts: &TuneOptions,
    budget: usize,
) -> Result<Pass> {
    let n = x0.len();
    let clamp = |x: Vec<f64>| -> Vec<f64> { x.into_iter().map(|v| v.clamp(0.0, 1.0)).collect() };
    let mut evals = 0;
    let mut call = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        let v = f(x)?;
        Ok(if v.is_finite() { v } else { f64::INFINITY })
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        if evals >= budget {
            break;
        }
        let mut x = x0.to_vec();
        x[i] = if x[i] + step <= 1.0 { x[i] + step } else { x[i] - step };
        let v = call(&x, &mut evals)?;
        simplex.push((x, v));
    }
    if simplex.len() < n + 1 {
        return Ok(Pass {
            best: simplex[0].clone(),
            evals,
            converged: false,
        });
    }

    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect() };
    let converged = loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (f_lo, f_hi) = (simplex[0].1, simplex[n].1);
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if f_hi - f_lo <= opts.f_tol * f_lo.abs() || size <= opts.x_tol {
            break true;
        }
        if evals + 2 > budget {
            break false;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let xr = clamp(combine(&centroid, &worst.0, -1.0));
        let fr = call(&xr, &mut evals)?;
        if fr < simplex[0].1 {
            let xe = clamp(combine(&centroid, &worst.0, -2.0));
            let fe = call(&xe, &mut evals)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = clamp(combine(&centroid, &xr, 0.5));
            let fc = call(&xc, &mut evals)?;
            (xc, fc)
        } else {
            let xc = clamp(combine(&centroid, &worst.0, 0.5));
            let fc = call(&xc, &mut evals)?;
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        if evals + n > budget {
            break false;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x = combine(&best, &v.0, 0.5);
            let fx = call(&x, &mut evals)?;
            *v = (x, fx);
        }
    };
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(Pass {
        best: simplex.swap_remove(0),
        evals,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn host() -> ModalDof {
        ModalDof::new(100.0, 1e4, 2.0)
    }

    #[test]
    fn receptance_without_damper_is_single_dof() {
        let h = host();
        for w in [1.0, 9.5, 30.0] {
            let x = host_receptance(&h, 1e-12, 1e-9, 0.0, w);
            let exact = 1.0 / Complex::new(h.stiffness - h.mass * w * w, w * h.damping);
            assert_relative_eq!((x - exact).norm() / exact.norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn hinf_at_den_hartog_point() {
        let m = 5.0;
        let (f, zeta) = (1.0_f64 / 1.05, (0.15_f64 / (8.0 * 1.05_f64.powi(3))).sqrt());
        let v = hinf_objective(&host(), m, m * (10.0 * f).powi(2), 2.0 * m * 10.0 * zeta);
        // Den Hartog's fixed-point height √(1 + 2/μ) for an undamped host
        assert_relative_eq!(v, (1.0_f64 + 2.0 / 0.05).sqrt(), max_relative = 0.02);
    }

    #[test]
    fn rejects_bad_inputs() {
        let tower = TowerModel::isotropic(100.0, 1e4, 2.0);
        let b = SearchBox::around(&tower.fore_aft, 0.05);
        assert!(tune_passive(&tower, 0.0, &b, Objective::HInf).is_err());
        assert!(tune_passive(&tower, 0.3, &b, Objective::HInf).is_err());
        let bad = SearchBox { k: (10.0, 5.0), c: b.c };
        assert!(tune_passive(&tower, 0.05, &bad, Objective::HInf).is_err());
    }

    #[test]
    fn best_is_no_worse_than_any_audited_point() {
        let tower = TowerModel::isotropic(100.0, 1e4, 2.0);
        let b = SearchBox::around(&tower.fore_aft, 0.05);
        let r = tune_passive(&tower, 0.05, &b, Objective::HInf).unwrap();
        assert!(r.converged);
        assert!(b.contains(r.k, r.c));
        assert_eq!(r.evaluations, r.audit.len());
        assert!(r.audit.iter().all(|a| r.objective <= a.objective));
        assert!(r.audit.iter().any(|a| a.objective == r.objective && a.k == r.k && a.c == r.c));
    }

    #[test]
    fn pinned_stiffness_stays_pinned() {
        let tower = TowerModel::isotropic(100.0, 1e4, 2.0);
        let k = 5.0 * 100.0 / 1.05_f64.powi(2);
        let b = SearchBox { k: (k, k), c: (0.5, 50.0) };
        let r = tune_passive(&tower, 0.05, &b, Objective::HInf).unwrap();
        assert_eq!(r.k, k);
        assert!(b.contains(r.k, r.c));
        // slice optimum by scanning c
        let scan = (0..=2000)
            .map(|i| 0.5 + 49.5 * i as f64 / 2000.0)
            .map(|c| (c, hinf_objective(&tower.fore_aft, 5.0, k, c)))
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert!(r.objective <= scan.1 + 1e-9);
        assert!((r.c - scan.0).abs() < 0.05, "{} vs {}", r.c, scan.0);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let tower = TowerModel::isotropic(100.0, 1e4, 2.0);
        let b = SearchBox::around(&tower.fore_aft, 0.05);
        let opts = TuneOptions {
            max_evals: 8,
            ..Default::default()
        };
        let r = tune_passive_with(&tower, 0.05, &b, Objective::HInf, &opts).unwrap();
        assert!(!r.converged);
        assert!(r.evaluations <= 8);
        assert!(r.audit.iter().all(|a| r.objective <= a.objective));
    }

    #[test]
    fn audit_csv_layout() {
        let r = TuneResult {
            mass: 1.0,
            k: 2.0,
            c: 3.0,
            objective: 4.0,
            evaluations: 1,
            converged: true,
            audit: vec![AuditEntry {
                eval: 1,
                k: 2.0,
                c: 3.0,
                objective: 4.0,
            }],
            host_frequency: 1.0,
        };
        assert_eq!(r.audit_csv(), "eval,k,c,objective\n1,2,3,4\n");
    }
}
