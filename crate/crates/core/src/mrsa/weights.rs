use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{FrameId, MeaningGraph, RelationKind};

/// Per-subtype relation constants (entity weighting) and ratios (action
/// weighting), plus the action fixed-point controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightConfig {
    pub constants: BTreeMap<RelationKind, f64>,
    pub ratios: BTreeMap<RelationKind, f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for WeightConfig {
    fn default() -> Self {
        use RelationKind::*;
        let constants: BTreeMap<RelationKind, f64> = [
            (Agent, 10.0),
            (Theme, 8.0),
            (Possession, 6.0),
            (Instrument, 5.0),
            (Location, 5.0),
            (Time, 4.0),
            (Reason, 7.0),
            (Result, 7.0),
            (Condition, 6.0),
            (Conjunction, 4.0),
            (Before, 3.0),
            (After, 3.0),
            (Simultaneous, 3.0),
        ]
        .into();
        let ratios = constants.iter().map(|(k, w)| (*k, w / 10.0)).collect();
        Self {
            constants,
            ratios,
            tolerance: 1e-6,
            max_iterations: 100,
        }
    }
}

impl WeightConfig {
    pub fn constant(&self, kind: RelationKind) -> f64 {
        self.constants.get(&kind).copied().unwrap_or(0.0)
    }

    pub fn ratio(&self, kind: RelationKind) -> f64 {
        self.ratios.get(&kind).copied().unwrap_or(0.0)
    }

    /// Every constant multiplied by `c`; ratios and controls untouched.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for w in out.constants.values_mut() {
            *w *= c;
        }
        out
    }

    pub fn validate(&self) -> Result<(), String> {
        for (k, w) in self.constants.iter().chain(self.ratios.iter()) {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(format!("weight for {k} must be positive, got {w}"));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err("tolerance must be positive".into());
        }
        if self.max_iterations == 0 {
            return Err("max_iterations must be at least 1".into());
        }
        Ok(())
    }
}

/// Entity weight: sum of the constants of the incident relations.
pub fn assign_entity_weights(mr: &MeaningGraph, cfg: &WeightConfig) -> BTreeMap<FrameId, f64> {
    let mut w: BTreeMap<FrameId, f64> = mr.entities().map(|f| (f.id.clone(), 0.0)).collect();
    for r in &mr.relations {
        for end in [&r.from, &r.to] {
            if let Some(x) = w.get_mut(end) {
                *x += cfg.constant(r.kind);
            }
        }
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionWeights {
    pub weights: BTreeMap<FrameId, f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Action weight: ratio-weighted sum of neighbor weights. Entity weights are
/// fixed; action neighbors are resolved by Gauss-Seidel sweeps in id order,
/// starting from zero, until the largest change drops below the tolerance.
pub fn assign_action_weights(mr: &MeaningGraph, entity_weights: &BTreeMap<FrameId, f64>, cfg: &WeightConfig) -> ActionWeights {
    let ids: Vec<&FrameId> = mr.actions().map(|f| &f.id).collect();
    let index: BTreeMap<&FrameId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut base = vec![0.0; ids.len()];
    let mut coupling: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ids.len()];
    for r in &mr.relations {
        let ratio = cfg.ratio(r.kind);
        for (me, other) in [(&r.from, &r.to), (&r.to, &r.from)] {
            let Some(&i) = index.get(me) else { continue };
            if let Some(&j) = index.get(other) {
                coupling[i].push((j, ratio));
            } else if let Some(w) = entity_weights.get(other) {
                base[i] += ratio * w;
            }
        }
    }

    let mut x = vec![0.0; ids.len()];
    let mut iterations = 0;
    let mut converged = ids.is_empty() || coupling.iter().all(Vec::is_empty);
    if converged {
        x.clone_from(&base);
        iterations = usize::from(!ids.is_empty());
    } else {
        while iterations < cfg.max_iterations {
            iterations += 1;
            let mut delta: f64 = 0.0;
            for i in 0..x.len() {
                let v = base[i] + coupling[i].iter().map(|&(j, r)| r * x[j]).sum::<f64>();
                delta = delta.max((v - x[i]).abs());
                x[i] = v;
            }
            if delta < cfg.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            log::warn!("action weights did not converge in {} iterations", cfg.max_iterations);
        }
    }
    ActionWeights {
        weights: ids.into_iter().cloned().zip(x).collect(),
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Frame, FrameKind, Relation, RelationId};

    pub(crate) fn frame(id: &str, kind: FrameKind) -> Frame {
        Frame {
            id: id.into(),
            kind,
            surface: id.into(),
            sense: None,
            concept: None,
            attributes: vec![],
            qualifier: None,
        }
    }

    fn graph(frames: &[(&str, FrameKind)], rels: &[(RelationKind, &str, &str)]) -> MeaningGraph {
        let mut g = MeaningGraph::default();
        for (id, k) in frames {
            g.frames.insert((*id).into(), frame(id, *k));
        }
        for (i, (k, a, b)) in rels.iter().enumerate() {
            g.relations.push(Relation {
                id: RelationId(format!("r{i}")),
                kind: *k,
                from: (*a).into(),
                to: (*b).into(),
            });
        }
        g
    }

    use FrameKind::{Action as A, Entity as E};
    use RelationKind::*;

    #[test]
    fn isolated_entity_weighs_zero() {
        let g = graph(&[("e", E)], &[]);
        assert_eq!(assign_entity_weights(&g, &WeightConfig::default())[&FrameId::from("e")], 0.0);
    }

    #[test]
    fn two_agents_and_a_location() {
        let g = graph(
            &[("e", E), ("a1", A), ("a2", A), ("a3", A)],
            &[(Agent, "e", "a1"), (Agent, "e", "a2"), (Location, "e", "a3")],
        );
        assert_eq!(assign_entity_weights(&g, &WeightConfig::default())[&FrameId::from("e")], 25.0);
    }

    #[test]
    fn action_weights() {
        let g = graph(&[("a", A)], &[]);
        let w = assign_action_weights(&g, &BTreeMap::new(), &WeightConfig::default());
        assert_eq!(w.weights[&FrameId::from("a")], 0.0);

        let g = graph(&[("e", E), ("a", A)], &[(Agent, "e", "a")]);
        let mut cfg = WeightConfig::default();
        cfg.ratios.insert(Agent, 0.5);
        let ew = BTreeMap::from([(FrameId::from("e"), 25.0)]);
        let w = assign_action_weights(&g, &ew, &cfg);
        assert_eq!(w.weights[&FrameId::from("a")], 12.5);
        assert!(w.converged);
    }

    #[test]
    fn temporal_pair_converges_to_fixed_point() {
        let g = graph(
            &[("e", E), ("f", E), ("a", A), ("b", A)],
            &[(Agent, "e", "a"), (Theme, "f", "b"), (Before, "a", "b")],
        );
        let cfg = WeightConfig {
            tolerance: 1e-12,
            ..WeightConfig::default()
        };
        let ew = assign_entity_weights(&g, &cfg);
        let w = assign_action_weights(&g, &ew, &cfg);
        assert!(w.converged);
        // x = b + R y, y = c + R x  =>  x = (b + R c) / (1 - R^2)
        let (b, c, r) = (1.0 * 10.0, 0.8 * 8.0, 0.3);
        let x = (b + r * c) / (1.0 - r * r);
        let y = c + r * x;
        assert!((w.weights[&FrameId::from("a")] - x).abs() < 1e-10);
        assert!((w.weights[&FrameId::from("b")] - y).abs() < 1e-10);
    }

    #[test]
    fn divergent_system_reports_non_convergence() {
        let g = graph(&[("e", E), ("a", A), ("b", A)], &[(Agent, "e", "a"), (Before, "a", "b")]);
        let mut cfg = WeightConfig::default();
        cfg.ratios.insert(Before, 1.5);
        let ew = assign_entity_weights(&g, &cfg);
        let w = assign_action_weights(&g, &ew, &cfg);
        assert!(!w.converged);
        assert_eq!(w.iterations, cfg.max_iterations);
    }

    #[test]
    fn config_round_trips_and_validates() {
        let cfg = WeightConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"Agent\":10.0"));
        assert_eq!(serde_json::from_str::<WeightConfig>(&json).unwrap(), cfg);
        assert!(cfg.validate().is_ok());
        let mut bad = cfg.clone();
        bad.constants.insert(Agent, 0.0);
        assert!(bad.validate().is_err());
    }
}
