use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    /// Line-to-line nominal voltage (V).
    #[serde(default = "default_voltage")]
    pub nominal_voltage_v: f64,
}

fn default_voltage() -> f64 {
    400.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub r_ohm: f64,
    pub x_ohm: f64,
    /// Thermal current limit per phase (A).
    pub i_max_a: f64,
}

/// Serialized form of the feeder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub pcc_bus: String,
    #[serde(default = "default_transformer")]
    pub transformer_kva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
}

fn default_transformer() -> f64 {
    160.0
}

/// A validated radial feeder rooted at the PCC.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTopology {
    pub spec: TopologySpec,
    pub slack: usize,
    /// Per-phase nominal voltage (V).
    pub v_phase: f64,
    /// For every bus, the index of the line feeding it (None for the slack).
    pub(crate) parent_line: Vec<Option<usize>>,
    /// Upstream bus of every line after orientation away from the slack.
    pub(crate) line_upstream: Vec<usize>,
    pub(crate) line_downstream: Vec<usize>,
    /// Buses in breadth-first order from the slack.
    pub(crate) order: Vec<usize>,
    bus_index: HashMap<String, usize>,
}

impl GridTopology {
    pub fn new(spec: TopologySpec) -> Result<Self> {
        let mut bus_index = HashMap::new();
        for (i, b) in spec.buses.iter().enumerate() {
            if bus_index.insert(b.id.clone(), i).is_some() {
                return Err(Error::config(format!("topology.buses[{i}].id"), format!("duplicate bus id `{}`", b.id)));
            }
        }
        let n = spec.buses.len();
        let slack = *bus_index.get(&spec.pcc_bus).ok_or_else(|| Error::DanglingReference {
            from: "topology.pcc_bus".into(),
            to: format!("bus `{}`", spec.pcc_bus),
        })?;
        let v_ll = spec.buses[slack].nominal_voltage_v;
        if !(v_ll > 0.0) {
            return Err(Error::config("topology.buses", "nominal voltage must be > 0"));
        }
        if let Some(i) = spec.buses.iter().position(|b| (b.nominal_voltage_v - v_ll).abs() > 1e-9) {
            return Err(Error::config(
                format!("topology.buses[{i}].nominal_voltage_v"),
                "all buses of one feeder share the PCC nominal voltage",
            ));
        }
        if !(spec.transformer_kva > 0.0) {
            return Err(Error::config("topology.transformer_kva", "must be > 0"));
        }
        if spec.lines.len() + 1 != n {
            return Err(Error::config(
                "topology.lines",
                format!("a radial feeder with {n} buses needs {} lines, found {}", n.saturating_sub(1), spec.lines.len()),
            ));
        }
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, l) in spec.lines.iter().enumerate() {
            let lookup = |id: &str| {
                bus_index.get(id).copied().ok_or_else(|| Error::DanglingReference {
                    from: format!("line `{}`", l.id),
                    to: format!("bus `{id}`"),
                })
            };
            let a = lookup(&l.from_bus)?;
            let b = lookup(&l.to_bus)?;
            if a == b {
                return Err(Error::config(format!("topology.lines[{k}]"), "line connects a bus to itself"));
            }
            if !(l.r_ohm >= 0.0) || !(l.x_ohm >= 0.0) {
                return Err(Error::config(format!("topology.lines[{k}]"), "impedance must be >= 0"));
            }
            if !(l.i_max_a > 0.0) {
                return Err(Error::config(format!("topology.lines[{k}].i_max_a"), "must be > 0"));
            }
            adjacency[a].push((b, k));
            adjacency[b].push((a, k));
        }
        // Deterministic traversal independent of line order.
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let mut parent_line = vec![None; n];
        let mut visited = vec![false; n];
        let mut line_upstream = vec![usize::MAX; spec.lines.len()];
        let mut line_downstream = vec![usize::MAX; spec.lines.len()];
        let mut order = Vec::with_capacity(n);
        let mut queue = std::collections::VecDeque::from([slack]);
        visited[slack] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, k) in &adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    parent_line[v] = Some(k);
                    line_upstream[k] = u;
                    line_downstream[k] = v;
                    queue.push_back(v);
                }
            }
        }
        if let Some(i) = visited.iter().position(|v| !v) {
            return Err(Error::config(
                "topology",
                format!("bus `{}` is not connected to the PCC", spec.buses[i].id),
            ));
        }
        Ok(Self {
            v_phase: v_ll / 3f64.sqrt(),
            slack,
            parent_line,
            line_upstream,
            line_downstream,
            order,
            bus_index,
            spec,
        })
    }

    pub fn n_buses(&self) -> usize {
        self.spec.buses.len()
    }

    pub fn lines(&self) -> &[Line] {
        &self.spec.lines
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn bus_id(&self, index: usize) -> &str {
        &self.spec.buses[index].id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn chain(n: usize) -> TopologySpec {
        TopologySpec {
            pcc_bus: "b0".into(),
            transformer_kva: 250.0,
            buses: (0..n).map(|i| Bus { id: format!("b{i}"), nominal_voltage_v: 400.0 }).collect(),
            lines: (1..n)
                .map(|i| Line {
                    id: format!("l{i}"),
                    from_bus: format!("b{}", i - 1),
                    to_bus: format!("b{i}"),
                    r_ohm: 0.01,
                    x_ohm: 0.004,
                    i_max_a: 270.0,
                })
                .collect(),
        }
    }

    #[test]
    fn accepts_a_chain() {
        let t = GridTopology::new(chain(4)).unwrap();
        assert_eq!(t.slack, 0);
        assert_eq!(t.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_unknown_bus_naming_it() {
        let mut s = chain(3);
        s.lines[1].to_bus = "ghost".into();
        let err = GridTopology::new(s).unwrap_err().to_string();
        assert!(err.contains("ghost"), "{err}");
        assert!(err.contains("l2"), "{err}");
    }

    #[test]
    fn rejects_meshes_and_islands() {
        let mut s = chain(4);
        s.lines[2].from_bus = "b1".into();
        s.lines[2].to_bus = "b2".into();
        assert!(GridTopology::new(s).is_err());
        let mut s = chain(3);
        s.lines.pop();
        assert!(GridTopology::new(s).is_err());
    }

    #[test]
    fn rejects_duplicate_ids() {
        let mut s = chain(3);
        s.buses[2].id = "b1".into();
        assert!(GridTopology::new(s).is_err());
    }
}
