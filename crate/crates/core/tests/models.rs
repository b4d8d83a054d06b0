use std::sync::Arc;

use proptest::prelude::*;

use flexcell::model::{
    BatteryParams, BatteryStorage, Clock, ElectricVehicle, EvParams, FirstOrderBlock, HeatPumpParams, HeatPumpSystem,
    PvInverter, PvParams, Trip, TripSchedule,
};

fn battery(soc: f64) -> BatteryStorage {
    BatteryStorage::new(BatteryParams {
        capacity_kwh: 2.0,
        p_max_charge_kw: 5.0,
        p_max_discharge_kw: 5.0,
        efficiency_charge: 0.95,
        efficiency_discharge: 0.95,
        time_constant_s: 2.0,
        initial_soc: soc,
    })
    .unwrap()
}

fn heat_pump(temp: f64) -> HeatPumpSystem {
    let mut params: HeatPumpParams =
        serde_json::from_str(r#"{"p_el_max_kw": 3.0, "heat_capacity_kwh_per_k": 0.05}"#).unwrap();
    params.initial_temperature_c = temp;
    HeatPumpSystem::new(params).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn battery_soc_and_power_stay_in_range(
        soc in 0.0f64..=1.0,
        setpoints in prop::collection::vec(-20.0f64..20.0, 1..40),
    ) {
        let mut b = battery(soc);
        for sp in setpoints {
            for _ in 0..50 {
                let s = b.step(sp, 0.1).unwrap();
                prop_assert!((0.0..=1.0).contains(&s.soc));
                prop_assert!(s.p_actual <= 5.0 + 1e-9 && s.p_actual >= -5.0 - 1e-9);
            }
        }
    }

    #[test]
    fn battery_energy_is_accounted(soc in 0.05f64..0.95, sp in -5.0f64..5.0) {
        let mut b = battery(soc);
        for _ in 0..300 {
            b.step(sp, 0.1).unwrap();
        }
        let stored = (b.soc - soc) * 2.0;
        let metered = 0.95 * b.meter.charged_kwh - b.meter.discharged_kwh / 0.95;
        prop_assert!((stored - metered).abs() < 1e-9, "{stored} vs {metered}");
    }

    #[test]
    fn heat_pump_temperature_stays_in_band(
        temp in 35.0f64..=90.0,
        demand in 0.0f64..12.0,
        offsets in prop::collection::vec(-10.0f64..10.0, 1..20),
    ) {
        let mut hp = heat_pump(temp);
        for off in offsets {
            for _ in 0..150 {
                let s = hp.step(demand, 0.0, off, 0.1).unwrap();
                prop_assert!((35.0..=90.0).contains(&s.temperature_c), "{}", s.temperature_c);
                prop_assert!(s.p_el >= 0.0 && s.p_el <= 9.0 + 1e-9);
            }
        }
    }

    #[test]
    fn inverter_never_exceeds_its_rating(
        irradiance in 0.0f64..1300.0,
        q_set in prop::collection::vec(-10.0f64..10.0, 1..20),
    ) {
        let mut inv = PvInverter::new(PvParams {
            s_rated_kva: 6.0,
            peak_kw: 7.0,
            performance_ratio: 0.9,
            q_fraction_limit: 0.3,
            time_constant_s: 1.0,
        })
        .unwrap();
        for q in q_set {
            for _ in 0..20 {
                let s = inv.step(q, irradiance, 0.1).unwrap();
                prop_assert!(s.p_ac.hypot(s.q) <= 6.0 + 1e-9);
                prop_assert!(s.q.abs() <= 0.3 * 6.0 + 1e-12);
            }
        }
    }

    #[test]
    fn vehicle_energy_balances_over_days(
        soc in 0.2f64..1.0,
        energy in 0.0f64..30.0,
        offset in -11.0f64..11.0,
    ) {
        let schedule = TripSchedule {
            trips: vec![Trip { depart_s: 8.0 * 3600.0, return_s: 18.0 * 3600.0, energy_kwh: energy }],
            weekdays_only: false,
        };
        let mut ev = ElectricVehicle::new(
            EvParams { capacity_kwh: 40.0, p_rated_kw: 11.0, v2g: true, efficiency: 0.95, time_constant_s: 5.0, initial_soc: soc },
            Arc::new(schedule),
        )
        .unwrap();
        let clock = Clock { start_second_of_day: 0.0, start_weekday: 0 };
        let dt = 1.0;
        let mut t = 0.0;
        while t < 2.0 * 86_400.0 {
            let at = clock.at(t);
            let s = ev.step(offset, &at, dt).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.soc));
            if !s.connected {
                prop_assert_eq!(s.p_el, 0.0);
            }
            t += dt;
        }
        let m = ev.meter;
        let balance = 0.95 * m.charged_kwh - m.discharged_kwh / 0.95 - m.driven_kwh;
        prop_assert!(((ev.soc - soc) * 40.0 - balance).abs() < 1e-6);
        prop_assert!(m.driven_kwh <= 2.0 * energy + 1e-9);
    }
}

#[test]
fn first_order_step_matches_the_exponential() {
    let tau = 3.0;
    let dt = tau / 100.0;
    let mut b = FirstOrderBlock::new(2.0, tau, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=500 {
        b.step(1.0, dt).unwrap();
        let exact = 2.0 * (1.0 - (-(k as f64) * dt / tau).exp());
        worst = worst.max(((b.y - exact) / exact).abs());
    }
    assert!(worst <= 1e-4, "{worst:.3e}");
}
