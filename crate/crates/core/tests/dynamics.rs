use nacelle_tmd::harness::profiles::{constant_yaw, fore_aft_sine};
use nacelle_tmd::integrate::{simulate, SimSettings};
use nacelle_tmd::tmd::{TmdAxisParams, TmdConfig};

fn yawing_error(dt: f64) -> f64 {
    // softened oscillator under constant yaw: x(t) = x0·cos(√91·t)
    let cfg = TmdConfig::new(
        TmdAxisParams::new(1.0, 100.0, 0.0).with_initial_disp(0.1),
        TmdAxisParams::disabled(),
    );
    let yaw = constant_yaw(3.0, 2.0, 0.01).unwrap();
    let r = simulate(&yaw, &cfg, &SimSettings::new(dt), None).unwrap();
    let w = 91.0_f64.sqrt();
    r.records.iter().map(|r| (r.state.x - 0.1 * (w * r.t).cos()).abs()).fold(0.0, f64::max)
}

#[test]
fn rk4_converges_at_fourth_order() {
    let errs: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&dt| yawing_error(dt)).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((12.0..=20.0).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn forced_response_matches_steady_state_amplitude() {
    // x'' + 2ζω x' + ω² x = −A sin(Ωt), read after the transient has decayed
    let (m, k, c) = (1.0, 100.0, 4.0);
    let (amp, big_w) = (2.0, 6.0);
    let cfg = TmdConfig::new(TmdAxisParams::new(m, k, c), TmdAxisParams::disabled());
    let series = fore_aft_sine(amp, big_w, 12.0, 1e-3).unwrap();
    let r = simulate(&series, &cfg, &SimSettings::new(1e-3), None).unwrap();
    let expected = amp / ((k / m - big_w * big_w).powi(2) + (c / m * big_w).powi(2)).sqrt();
    let peak = r.records.iter().filter(|r| r.t > 8.0).map(|r| r.state.x.abs()).fold(0.0, f64::max);
    assert!((peak - expected).abs() / expected < 1e-3, "{peak} vs {expected}");
}
