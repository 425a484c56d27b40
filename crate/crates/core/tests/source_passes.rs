use solid_lbm::config::{build_scenario, parse_config};
use solid_lbm::scenario::run;
use solid_lbm::Simulation;

fn sim(text: &str) -> Simulation {
    Simulation::new(build_scenario(&parse_config(text).unwrap()).unwrap()).unwrap()
}

#[test]
fn lagged_source_breaks_the_tension_preset() {
    let mut s = sim(r#"{"preset": "tension", "numerics": {"source_iterations": 0}}"#);
    assert!(run(&mut s, &mut []).is_err());
    let mut s = sim(r#"{"preset": "tension"}"#);
    let out = run(&mut s, &mut []).unwrap();
    assert_eq!(out.probes.len(), s.scenario().steps());
}

#[test]
fn passes_do_not_change_small_motion() {
    // for lambda = mu the remainder stress is quadratic in H
    let text = |n| format!(r#"{{"preset": "tension", "boundaries": {{"top": {{"schedule": {{"amplitude": [0, 1e-6]}}}}, "bottom": {{"schedule": {{"amplitude": [0, -1e-6]}}}}}}, "numerics": {{"source_iterations": {n}}}, "run": {{"t_max": 1}}}}"#);
    let (mut a, mut b) = (sim(&text(0)), sim(&text(3)));
    let (ra, rb) = (run(&mut a, &mut []).unwrap(), run(&mut b, &mut []).unwrap());
    let k = ra.probes.probe_index("P1").unwrap();
    for (x, y) in ra.probes.samples.iter().zip(&rb.probes.samples) {
        let (ux, uy) = (x[k].u[1], y[k].u[1]);
        assert!((ux - uy).abs() <= 1e-6 * ux.abs().max(1e-12), "{ux} vs {uy}");
    }
}
