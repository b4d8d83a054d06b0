mod common;

use flexcell::dispatch::run_dispatch;
use flexcell::optimizer::{BasinHoppingConfig, CostTable, FlexibilityRequest};
use flexcell::simulator::{Scenario, Twin};
use flexcell::Error;

#[test]
fn bundled_census() {
    let c = common::load("rural1_flex.json").census();
    assert_eq!((c.prosumers, c.pv, c.bes, c.ehp, c.bev, c.bev_v2g), (13, 10, 4, 6, 18, 5));
    assert_eq!(c.controllable, 38);
}

#[test]
fn scenario_round_trip() {
    for name in ["rural1_flex.json", "toy_two_plant.json"] {
        let a = common::load(name);
        let b = Scenario::from_json(&a.to_file().to_json().unwrap()).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn evaluation_is_repeatable_and_leaves_the_reference_alone() {
    let (twin, reference) = common::warmed("toy_two_plant.json");
    let before = reference.clone();
    let x = [1.5, -0.7];
    let a = twin.evaluate_dispatch(&reference, &x, 15.0).unwrap();
    let b = twin.evaluate_dispatch(&reference, &x, 15.0).unwrap();
    assert_eq!(a, b);
    assert_eq!(reference, before);
}

#[test]
fn zero_offsets_keep_a_stationary_cell_at_its_reference() {
    let (twin, reference) = common::warmed("toy_two_plant.json");
    let eval = twin.evaluate_dispatch(&reference, &[0.0, 0.0], 15.0).unwrap();
    let m = eval.measurement;
    assert!((m.pcc.p_kw - reference.reference_pcc.p_kw).abs() < 1e-9);
    assert!((m.pcc.q_kvar - reference.reference_pcc.q_kvar).abs() < 1e-9);
    for (s, r) in m.plants.iter().zip(reference.reference_powers.iter()) {
        assert!((s.power - r).abs() < 1e-9);
    }
}

#[test]
fn lossless_feeder_aggregates_injections() {
    let mut file = common::load("rural1_flex.json").to_file();
    for l in &mut file.topology.lines {
        l.r_ohm = 0.0;
        l.x_ohm = 0.0;
    }
    file.simulation.warmup_s = 3600.0;
    let twin = Twin::new(Scenario::from_file(file).unwrap());
    let reference = twin.run_warmup(3600.0).unwrap();
    let m = twin.measure(&reference.snapshot);
    let p: f64 = m.injections.iter().map(|i| i.p_kw).sum();
    let q: f64 = m.injections.iter().map(|i| i.q_kvar).sum();
    assert!((m.pcc.p_kw - p).abs() < 1e-9 * p.abs().max(1.0));
    assert!((m.pcc.q_kvar - q).abs() < 1e-9 * q.abs().max(1.0));
    assert_eq!(m.losses_kw, 0.0);
}

#[test]
fn dispatch_bounds_contain_zero_and_respect_capability() {
    let (twin, reference) = common::warmed("rural1_flex.json");
    let bounds = twin.dispatch_bounds(&reference.snapshot);
    assert_eq!(bounds.len(), 38);
    for (b, p) in bounds.iter().zip(&twin.scenario.plants) {
        assert!(b.0 <= 0.0 && 0.0 <= b.1, "{}: {b:?}", p.id);
    }
}

#[test]
fn line_to_unknown_bus_names_it() {
    let mut file = common::load("toy_two_plant.json").to_file();
    file.topology.lines[0].to_bus = "nowhere".into();
    let err = Scenario::from_file(file).unwrap_err();
    assert!(matches!(err, Error::DanglingReference { .. }));
    assert!(err.to_string().contains("nowhere"), "{err}");
}

#[test]
fn empty_cell_loads_but_refuses_dispatch() {
    let mut file = common::load("toy_two_plant.json").to_file();
    file.prosumers.clear();
    file.profiles.households.clear();
    let scenario = Scenario::from_file(file).unwrap();
    assert_eq!(scenario.census().controllable, 0);
    let twin = Twin::new(scenario);
    let reference = twin.run_warmup(0.0).unwrap();
    let err = run_dispatch(
        &twin,
        &reference,
        &FlexibilityRequest::new(1.0, 0.0, 15.0),
        &BasinHoppingConfig::default(),
        &CostTable::default(),
    )
    .unwrap_err();
    assert!(err.is_configuration());
}

#[test]
fn dt_above_a_fifth_of_the_fastest_time_constant_is_rejected() {
    let mut file = common::load("toy_two_plant.json").to_file();
    file.simulation.dt_s = 0.5;
    file.simulation.warmup_s = 900.0;
    let err = Scenario::from_file(file).unwrap_err();
    assert!(err.to_string().contains("dt_s"), "{err}");
}
