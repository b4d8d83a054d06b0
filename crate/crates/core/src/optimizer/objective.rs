use serde::Serialize;

use super::cost::{CostTable, FlexibilityRequest, EUR_PER_COST_UNIT};
use crate::network::PccReading;
use crate::simulator::{Measurement, PlantKind, ReferenceState};

/// Objective value plus a feasibility flag. Infeasible candidates carry a
/// penalty in `value` and are never recorded as the global best.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    pub value: f64,
    pub feasible: bool,
}

impl Score {
    pub fn feasible(value: f64) -> Self {
        Self { value, feasible: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ObjectiveTerms {
    /// Σ k_c·|Δ_{c,i}| over all plants.
    pub plant_cost: f64,
    pub pcc_p_penalty: f64,
    pub pcc_q_penalty: f64,
    pub infeasibility: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.plant_cost + self.pcc_p_penalty + self.pcc_q_penalty + self.infeasibility
    }

    /// Payment to prosumers; PCC tracking penalties are not payments.
    pub fn cost_eur(&self) -> f64 {
        self.plant_cost * EUR_PER_COST_UNIT
    }
}

/// Cost contribution of one plant.
pub fn plant_cost(costs: &CostTable, kind: PlantKind, delta: f64) -> f64 {
    costs.for_kind(kind) * delta.abs()
}

/// Evaluates the dispatch objective from realized plant powers and PCC
/// exchange.
pub fn objective_terms(
    kinds: &[PlantKind],
    realized: &[f64],
    reference: &[f64],
    pcc: &PccReading,
    target: &PccReading,
    violations: usize,
    costs: &CostTable,
) -> ObjectiveTerms {
    let plant_cost = kinds
        .iter()
        .zip(realized.iter().zip(reference))
        .map(|(&k, (r, r0))| plant_cost(costs, k, r - r0))
        .sum();
    ObjectiveTerms {
        plant_cost,
        pcc_p_penalty: costs.k_pcc_p * (pcc.p_kw - target.p_kw).abs(),
        pcc_q_penalty: costs.k_pcc_q * (pcc.q_kvar - target.q_kvar).abs(),
        infeasibility: costs.k_infeasible * violations as f64,
    }
}

/// PCC exchange the request asks for.
pub fn target_pcc(reference: &ReferenceState, request: &FlexibilityRequest) -> PccReading {
    PccReading {
        p_kw: reference.reference_pcc.p_kw + request.dp_kw,
        q_kvar: reference.reference_pcc.q_kvar + request.dq_kvar,
        t_s: reference.reference_pcc.t_s,
    }
}

/// Objective of one twin evaluation. A failed power flow is scored as if
/// every line were overloaded and the PCC did not move at all.
pub fn objective(
    measurement: &Measurement,
    reference: &ReferenceState,
    request: &FlexibilityRequest,
    costs: &CostTable,
    n_lines: usize,
) -> (ObjectiveTerms, Score) {
    let kinds: Vec<PlantKind> = measurement.plants.iter().map(|p| p.kind).collect();
    let realized: Vec<f64> = measurement.plants.iter().map(|p| p.power).collect();
    let target = target_pcc(reference, request);
    if measurement.solver_error.is_some() {
        let mut terms = objective_terms(
            &kinds,
            &realized,
            &reference.reference_powers,
            &reference.reference_pcc,
            &target,
            n_lines + 1,
            costs,
        );
        terms.infeasibility = costs.k_infeasible * (n_lines + 1) as f64;
        return (terms, Score { value: terms.total(), feasible: false });
    }
    let terms = objective_terms(
        &kinds,
        &realized,
        &reference.reference_powers,
        &measurement.pcc,
        &target,
        measurement.violations.len(),
        costs,
    );
    (terms, Score { value: terms.total(), feasible: measurement.violations.is_empty() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcc(p: f64, q: f64) -> PccReading {
        PccReading { p_kw: p, q_kvar: q, t_s: 0.0 }
    }

    #[test]
    fn null_request_costs_nothing() {
        let kinds = [PlantKind::Bes, PlantKind::Inverter];
        let t = objective_terms(&kinds, &[1.0, 0.5], &[1.0, 0.5], &pcc(3.0, 1.0), &pcc(3.0, 1.0), 0, &CostTable::default());
        assert_eq!(t.total(), 0.0);
    }

    #[test]
    fn battery_carries_five_kilowatts() {
        let kinds = [PlantKind::Bes, PlantKind::Inverter];
        let costs = CostTable::default();
        let t = objective_terms(&kinds, &[5.0, 0.0], &[0.0, 0.0], &pcc(15.0, 2.0), &pcc(15.0, 2.0), 0, &costs);
        assert!((t.total() - 1.39e-3).abs() < 1e-15);
        let miss = objective_terms(&kinds, &[5.0, 0.0], &[0.0, 0.0], &pcc(14.0, 2.0), &pcc(15.0, 2.0), 0, &costs);
        assert!((miss.total() - 2.919e-2).abs() < 1e-15);
        assert!(miss.pcc_p_penalty > miss.plant_cost);
    }

    #[test]
    fn violations_add_penalty() {
        let costs = CostTable::default();
        let t = objective_terms(&[], &[], &[], &pcc(0.0, 0.0), &pcc(0.0, 0.0), 2, &costs);
        assert_eq!(t.total(), 20.0);
    }
}
