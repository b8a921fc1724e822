use std::f64::consts::PI;

use nacelle_tmd::harness::oracle::{compare_with_core, inertial_oracle, PenaltyOracleConfig};
use nacelle_tmd::harness::profiles::{constant_yaw, GENERAL_PROFILE};
use nacelle_tmd::harness::tower::{coupled_tower_simulate, ModalDof, TowerModel, Unforced};
use nacelle_tmd::harness::tune::{rms_objective, tune_passive, tune_passive_with, Objective, SearchBox, TuneOptions};
use nacelle_tmd::integrate::{simulate, SimSettings};
use nacelle_tmd::tmd::{TmdAxisParams, TmdConfig};

fn upward_crossings(series: impl Iterator<Item = (f64, f64)>) -> Vec<f64> {
    let v: Vec<(f64, f64)> = series.collect();
    v.windows(2)
        .filter(|w| w[0].1 < 0.0 && w[1].1 >= 0.0)
        .map(|w| w[0].0 + (w[1].0 - w[0].0) * (-w[0].1) / (w[1].1 - w[0].1))
        .collect()
}

fn frequency(ups: &[f64]) -> f64 {
    2.0 * PI * (ups.len() - 1) as f64 / (ups[ups.len() - 1] - ups[0])
}

#[test]
fn oracle_sees_centrifugal_softening() {
    let cfg = TmdConfig::new(
        TmdAxisParams::new(1.0, 100.0, 0.0).with_initial_disp(0.1),
        TmdAxisParams::disabled(),
    );
    let yaw = constant_yaw(3.0, 2.0, 1e-3).unwrap();
    let oc = PenaltyOracleConfig {
        record_dt: 1e-4,
        ..Default::default()
    };
    let oracle = inertial_oracle(&yaw, &cfg, &oc).unwrap();
    let w_oracle = frequency(&upward_crossings(oracle.records.iter().map(|r| (r.t, r.position))));
    let core = simulate(&yaw, &cfg, &SimSettings::new(1e-4), None).unwrap();
    let w_core = frequency(&upward_crossings(core.records.iter().map(|r| (r.t, r.state.x))));
    assert!((w_oracle - w_core).abs() / w_core < 1e-4, "{w_oracle} vs {w_core}");
    assert!((w_oracle - 91.0_f64.sqrt()).abs() / 91.0_f64.sqrt() < 1e-4);
}

#[test]
fn general_motion_matches_oracle() {
    let series = GENERAL_PROFILE.series(10.0, 1e-4).unwrap();
    let cfg = TmdConfig::new(
        TmdAxisParams::new(3.0, 250.0, 2.0).with_initial_disp(-0.04),
        TmdAxisParams::new(1.0, 40.0, 0.5).with_initial_disp(0.02),
    );
    for c in compare_with_core(&series, &cfg, 1e-3, &PenaltyOracleConfig::default(), 5e-3).unwrap() {
        assert!(c.max_position_error < 1e-5, "{c:?}");
        assert!(c.max_force_error < 1e-3, "{c:?}");
    }
}

#[test]
fn conservative_coupled_system_keeps_its_energy() {
    let tower = TowerModel {
        fore_aft: ModalDof::new(100.0, 1e4, 0.0).with_initial_disp(0.02),
        side_side: ModalDof::new(80.0, 6e3, 0.0).with_initial_disp(-0.01),
    };
    let cfg = TmdConfig::new(
        TmdAxisParams::new(5.0, 450.0, 0.0).with_initial_disp(0.05),
        TmdAxisParams::new(4.0, 280.0, 0.0).with_initial_disp(-0.03),
    );
    let traj = coupled_tower_simulate(&tower, &cfg, &Unforced, 1e-3, 10.0).unwrap();
    let (fa, ss) = (&tower.fore_aft, &tower.side_side);
    let (mx, kx, my, ky) = (5.0, 450.0, 4.0, 280.0);
    // each damper mass moves with the tower across its track
    let energy = |s: &nacelle_tmd::harness::tower::CoupledState| {
        let (qx, qxd, qy, qyd, x, xd, y, yd) = (s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7]);
        0.5 * fa.mass * qxd * qxd
            + 0.5 * fa.stiffness * qx * qx
            + 0.5 * ss.mass * qyd * qyd
            + 0.5 * ss.stiffness * qy * qy
            + 0.5 * mx * ((qxd + xd).powi(2) + qyd * qyd)
            + 0.5 * kx * x * x
            + 0.5 * my * (qxd * qxd + (qyd + yd).powi(2))
            + 0.5 * ky * y * y
    };
    let e0 = energy(&traj.records[0].state);
    let worst = traj.records.iter().map(|r| (energy(&r.state) - e0).abs() / e0).fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn vanishing_mass_tunes_to_host_frequency() {
    let tower = TowerModel::isotropic(100.0, 1e4, 2.0);
    let r = tune_passive(&tower, 0.001, &SearchBox::around(&tower.fore_aft, 0.001), Objective::HInf).unwrap();
    assert!((r.frequency_ratio() - 1.0).abs() < 0.005, "{}", r.frequency_ratio());
}

#[test]
fn rms_tuning_improves_on_the_box_centre() {
    let tower = TowerModel::isotropic(100.0, 1e4, 2.0);
    let search = SearchBox::around(&tower.fore_aft, 0.05);
    let opts = TuneOptions {
        max_evals: 60,
        ..Default::default()
    };
    let r = tune_passive_with(&tower, 0.05, &search, Objective::Rms, &opts).unwrap();
    let centre = r.audit[0].objective;
    assert!(r.objective < centre);
    assert!(search.contains(r.k, r.c));
    assert!(r.audit.iter().all(|a| r.objective <= a.objective));
    // a tuned damper beats a detuned one by a wide margin
    let detuned = rms_objective(&tower, r.mass, search.k.0, search.c.0, &opts).unwrap();
    assert!(r.objective < 0.5 * detuned);
    assert!((r.frequency_ratio() - 1.0 / 1.05).abs() < 0.05, "{}", r.frequency_ratio());
}
