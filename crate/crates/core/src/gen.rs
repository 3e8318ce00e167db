//! Seeded synthetic networks, stimuli, and tiny solver instances.
//!
//! Everything here is deterministic in the seed (ChaCha8 underneath), which
//! is what makes experiment artifacts reproducible byte-for-byte.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Edge, Network, NetworkError, NeuronId};
use crate::ilp::{
    add_area_objective, add_route_objective, build_mapping_model, IlpModel, MappingVars,
    ModelOptions, RouteMode,
};
use crate::inventory::{expand_inventory, CrossbarKind, Inventory};
use crate::rational::from_i64;
use crate::sim::{Stimulus, StimulusEvent};

#[derive(Debug, Clone, Copy)]
pub struct NetSpec {
    pub nodes: usize,
    pub edges: usize,
    pub max_fan_in: u32,
    pub seed: u64,
}

/// Uniform random distinct directed edges (no self-loops) subject to the
/// fan-in cap. Unit weights and thresholds, zero delays. Neurons without
/// incoming edges become input markers, neurons without outgoing edges
/// output markers.
pub fn random_network(spec: &NetSpec) -> Result<Network, NetworkError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.nodes;
    if n < 2 && spec.edges > 0 {
        return Err(NetworkError::Validation(
            "need at least two nodes to draw edges".into(),
        ));
    }
    let mut fan_in = vec![0u32; n];
    let mut used = std::collections::HashSet::new();
    let mut edges = Vec::with_capacity(spec.edges);
    let mut attempts = 0usize;
    let budget = spec.edges.saturating_mul(200) + 1000;
    while edges.len() < spec.edges {
        attempts += 1;
        if attempts > budget {
            return Err(NetworkError::Validation(format!(
                "could not draw {} edges with fan-in cap {} on {} nodes",
                spec.edges, spec.max_fan_in, n
            )));
        }
        let pre = rng.gen_range(0..n);
        let post = rng.gen_range(0..n);
        if pre == post || fan_in[post] >= spec.max_fan_in || used.contains(&(pre, post)) {
            continue;
        }
        used.insert((pre, post));
        fan_in[post] += 1;
        edges.push(Edge {
            pre: NeuronId(pre),
            post: NeuronId(post),
            weight: from_i64(1),
            delay: 0,
        });
    }

    let mut has_in = vec![false; n];
    let mut has_out = vec![false; n];
    for e in &edges {
        has_in[e.post.0] = true;
        has_out[e.pre.0] = true;
    }
    let inputs = (0..n).filter(|&i| !has_in[i]).map(NeuronId).collect();
    let outputs = (0..n).filter(|&i| !has_out[i]).map(NeuronId).collect();
    Network::new(n, edges, vec![from_i64(1); n], inputs, outputs)
}

/// Unit charges at random timesteps on random input markers. Networks
/// without input markers yield an empty schedule.
pub fn random_stimulus(net: &Network, horizon: u64, events: usize, seed: u64) -> Stimulus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5f5f_5f5f);
    let inputs = net.inputs();
    let events = if inputs.is_empty() { 0 } else { events };
    let schedule = (0..events)
        .map(|_| StimulusEvent {
            t: rng.gen_range(0..horizon),
            neuron: *inputs.choose(&mut rng).expect("inputs nonempty"),
            charge: from_i64(1),
        })
        .collect();
    Stimulus {
        horizon,
        events: schedule,
    }
}

/// A complete tiny solving instance for oracle sweeps: network, inventory,
/// built model with a randomly chosen objective, all within the exhaustive
/// oracle's variable cap.
pub struct TinyInstance {
    pub net: Network,
    pub inv: Inventory,
    pub model: IlpModel,
    pub vars: MappingVars,
    pub objective: &'static str,
}

pub fn random_tiny_instance(seed: u64) -> TinyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(17));
    loop {
        let nodes = rng.gen_range(1..=6);
        let edge_cap = (nodes * (nodes - 1)).min(10);
        let edges = if nodes < 2 { 0 } else { rng.gen_range(0..=edge_cap) };
        let Ok(net) = random_network(&NetSpec {
            nodes,
            edges,
            max_fan_in: rng.gen_range(1..=4),
            seed: rng.gen(),
        }) else {
            continue;
        };

        let crossbars = rng.gen_range(1..=3);
        let mut kinds = Vec::new();
        let mut caps = Vec::new();
        let distinct = rng.gen_range(1..=crossbars);
        let mut left = crossbars;
        for d in 0..distinct {
            let take = if d == distinct - 1 {
                left
            } else {
                rng.gen_range(1..=left - (distinct - 1 - d))
            };
            kinds.push(CrossbarKind::new(
                rng.gen_range(1..=6),
                rng.gen_range(1..=4),
            ));
            caps.push(take as u32);
            left -= take;
        }
        let inv = expand_inventory(&kinds, &caps).unwrap();

        let opts = ModelOptions {
            symmetry_break: rng.gen_bool(0.7),
            ..Default::default()
        };
        let Ok((mut model, mut vars)) = build_mapping_model(&net, &inv, &opts) else {
            continue;
        };
        let objective = match rng.gen_range(0..4) {
            0 => {
                if add_area_objective(&mut model, &vars, &inv).is_err() {
                    continue;
                }
                "area"
            }
            1 => {
                add_route_objective(&mut model, &mut vars, RouteMode::TotalRoutes, None).unwrap();
                "total-routes"
            }
            2 => {
                add_route_objective(&mut model, &mut vars, RouteMode::GlobalRoutes, None)
                    .unwrap();
                "global-routes"
            }
            _ => {
                let weights: Vec<i64> =
                    (0..net.node_count()).map(|_| rng.gen_range(0..4)).collect();
                add_route_objective(
                    &mut model,
                    &mut vars,
                    RouteMode::GlobalRoutes,
                    Some(&weights),
                )
                .unwrap();
                "weighted-routes"
            }
        };
        if model.num_vars() > crate::solver::ORACLE_VAR_CAP {
            continue;
        }
        return TinyInstance {
            net,
            inv,
            model,
            vars,
            objective,
        };
    }
}

/// Convenience wrapper used by solver unit tests.
pub fn random_tiny_model(seed: u64) -> (IlpModel, &'static str) {
    let inst = random_tiny_instance(seed);
    (inst.model, inst.objective)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn network_generation_is_deterministic() {
        let spec = NetSpec {
            nodes: 50,
            edges: 80,
            max_fan_in: 6,
            seed: 3,
        };
        assert_eq!(random_network(&spec).unwrap(), random_network(&spec).unwrap());
    }

    #[test]
    fn network_respects_requested_shape() {
        let spec = NetSpec {
            nodes: 40,
            edges: 60,
            max_fan_in: 4,
            seed: 11,
        };
        let net = random_network(&spec).unwrap();
        assert_eq!(net.node_count(), 40);
        assert_eq!(net.edges().len(), 60);
        assert!(net.max_fan_in() <= 4);
        assert!(net.edges().iter().all(|e| e.pre != e.post));
    }

    #[test]
    fn impossible_edge_count_errors() {
        let spec = NetSpec {
            nodes: 3,
            edges: 20,
            max_fan_in: 1,
            seed: 0,
        };
        assert!(random_network(&spec).is_err());
    }

    #[test]
    fn stimulus_targets_input_markers() {
        let net = random_network(&NetSpec {
            nodes: 30,
            edges: 40,
            max_fan_in: 5,
            seed: 4,
        })
        .unwrap();
        let stim = random_stimulus(&net, 20, 15, 2);
        assert!(stim
            .events
            .iter()
            .all(|e| net.inputs().contains(&e.neuron) && e.t < 20));
    }

    #[test]
    fn tiny_instances_fit_the_oracle() {
        for seed in 0..30 {
            let inst = random_tiny_instance(seed);
            assert!(inst.model.num_vars() <= crate::solver::ORACLE_VAR_CAP);
        }
    }
}
