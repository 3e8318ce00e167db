//! Discrete-time integrate-and-fire simulation and packet accounting.
//!
//! Neurons accumulate exact-rational charge; every neuron whose potential
//! reaches its threshold fires simultaneously at the end of the step and
//! resets to zero. A spike on an edge with delay `d` arrives at
//! `t + max(d, 1)`: one timestep is the minimum transport latency, which
//! keeps zero-delay recurrent loops well-defined. Potentials are exact
//! rationals, so identical inputs always reproduce identical event streams.

use num::rational::BigRational;
use num::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{Network, NeuronId};
use crate::mapping::MappingSolution;
use crate::rational;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid stimulus: {0}")]
    InvalidStimulus(String),
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("profile digest mismatch: stored {stored}, computed {computed}")]
    DigestMismatch { stored: String, computed: String },
    #[error("neuron {0} is not covered by the mapping")]
    UnmappedNeuron(usize),
}

/// Externally scheduled charge injections.
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    pub horizon: u64,
    pub events: Vec<StimulusEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusEvent {
    pub t: u64,
    pub neuron: NeuronId,
    pub charge: BigRational,
}

/// Per-neuron spike counts over a simulation horizon, plus a content digest
/// for integrity and provenance (the simulator is deterministic, so equal
/// digests mean equal observed behavior).
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeProfile {
    pub horizon: u64,
    pub counts: Vec<u64>,
    pub digest: String,
}

impl SpikeProfile {
    pub fn from_counts(horizon: u64, counts: Vec<u64>) -> Self {
        let digest = profile_digest(horizon, &counts);
        SpikeProfile {
            horizon,
            counts,
            digest,
        }
    }

    /// Spike counts as signed weights for the profile-guided objective.
    pub fn weights(&self) -> Vec<i64> {
        self.counts.iter().map(|&c| c.min(i64::MAX as u64) as i64).collect()
    }
}

fn profile_digest(horizon: u64, counts: &[u64]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"spike-profile-v1\n");
    hasher.update(horizon.to_le_bytes());
    for &c in counts {
        hasher.update(c.to_le_bytes());
    }
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn stimulus_digest(stim: &Stimulus) -> String {
    let mut hasher = Sha256::new();
    hasher.update(save_stimulus(stim).as_bytes());
    hex_string(&hasher.finalize())
}

/// Chronological firing events, ordered by timestep then neuron.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimEvents {
    pub events: Vec<(u64, NeuronId)>,
}

/// Neuron-model hooks. Defaults model a non-leaky integrate-and-fire neuron
/// with reset-to-zero.
#[derive(Debug, Clone, Default)]
pub struct SimConfig {
    /// Fraction of potential retained at the start of each step.
    pub leak_retain: Option<BigRational>,
    /// Steps after a fire during which arriving charge is discarded.
    pub refractory: Option<u64>,
}

/// Run the network against a stimulus.
///
/// Per timestep: deliver scheduled charges and due spikes, accumulate
/// weighted inputs, fire every neuron at or above threshold simultaneously,
/// reset fired potentials to zero.
pub fn simulate(
    net: &Network,
    stim: &Stimulus,
    config: &SimConfig,
) -> Result<(SpikeProfile, SimEvents), SimError> {
    let n = net.node_count();
    for ev in &stim.events {
        if ev.t >= stim.horizon {
            return Err(SimError::InvalidStimulus(format!(
                "event at t={} beyond horizon {}",
                ev.t, stim.horizon
            )));
        }
        if ev.neuron.0 >= n {
            return Err(SimError::InvalidStimulus(format!(
                "event drives neuron {} of {n}",
                ev.neuron.0
            )));
        }
        if !net.inputs().contains(&ev.neuron) {
            return Err(SimError::InvalidStimulus(format!(
                "neuron {} is not an input marker",
                ev.neuron.0
            )));
        }
    }

    // Scheduled external charge per timestep.
    let mut external: Vec<Vec<(usize, BigRational)>> = vec![Vec::new(); stim.horizon as usize];
    for ev in &stim.events {
        external[ev.t as usize].push((ev.neuron.0, ev.charge.clone()));
    }
    // Spike deliveries due per future timestep.
    let mut due: Vec<Vec<(usize, BigRational)>> = vec![Vec::new(); stim.horizon as usize];

    let mut potential: Vec<BigRational> = vec![BigRational::zero(); n];
    let mut refractory_until: Vec<u64> = vec![0; n];
    let mut counts = vec![0u64; n];
    let mut events = Vec::new();

    for t in 0..stim.horizon {
        if let Some(retain) = &config.leak_retain {
            for p in potential.iter_mut() {
                if !p.is_zero() {
                    *p *= retain;
                }
            }
        }
        let arrivals = std::mem::take(&mut due[t as usize]);
        for (neuron, charge) in external[t as usize]
            .iter()
            .cloned()
            .chain(arrivals.into_iter())
        {
            if config.refractory.is_some() && t < refractory_until[neuron] {
                continue;
            }
            potential[neuron] += charge;
        }
        for i in 0..n {
            if potential[i] >= *net.threshold(NeuronId(i)) {
                potential[i] = BigRational::zero();
                counts[i] += 1;
                events.push((t, NeuronId(i)));
                if let Some(r) = config.refractory {
                    refractory_until[i] = t + 1 + r;
                }
                for edge in net.outgoing_edges(NeuronId(i)) {
                    let arrive = t + edge.delay.max(1);
                    if arrive < stim.horizon {
                        due[arrive as usize].push((edge.post.0, edge.weight.clone()));
                    }
                }
            }
        }
    }

    Ok((
        SpikeProfile::from_counts(stim.horizon, counts),
        SimEvents { events },
    ))
}

/// Inter-crossbar packet totals under the one-packet-per-target-crossbar
/// rule: each fire of `k` sends one packet to every distinct crossbar
/// hosting a receiver of `k`; the packet is local when that crossbar is
/// `k`'s own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketStats {
    pub global_packets: u64,
    pub local_packets: u64,
}

pub fn count_packets(
    mapping: &MappingSolution,
    events: &SimEvents,
    net: &Network,
) -> Result<PacketStats, SimError> {
    let n = net.node_count();
    if mapping.assignment.len() < n {
        return Err(SimError::UnmappedNeuron(mapping.assignment.len()));
    }
    // Per neuron: distinct foreign target crossbars and own-crossbar hit.
    let mut foreign = vec![0u64; n];
    let mut local = vec![0u64; n];
    for k in 0..n {
        let own = mapping.assignment[k];
        let mut targets: Vec<usize> =
            net.successors(NeuronId(k)).map(|i| mapping.assignment[i.0].0).collect();
        targets.sort_unstable();
        targets.dedup();
        for j in targets {
            if j == own.0 {
                local[k] += 1;
            } else {
                foreign[k] += 1;
            }
        }
    }
    let mut stats = PacketStats {
        global_packets: 0,
        local_packets: 0,
    };
    for &(_, k) in &events.events {
        stats.global_packets += foreign[k.0];
        stats.local_packets += local[k.0];
    }
    Ok(stats)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StimulusEventDoc {
    t: u64,
    neuron: usize,
    #[serde(with = "rational::serde_one")]
    charge: BigRational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StimulusDoc {
    horizon: u64,
    events: Vec<StimulusEventDoc>,
}

pub fn load_stimulus(bytes: &[u8]) -> Result<Stimulus, SimError> {
    let doc: StimulusDoc =
        serde_json::from_slice(bytes).map_err(|e| SimError::Parse(e.to_string()))?;
    Ok(Stimulus {
        horizon: doc.horizon,
        events: doc
            .events
            .into_iter()
            .map(|e| StimulusEvent {
                t: e.t,
                neuron: NeuronId(e.neuron),
                charge: e.charge,
            })
            .collect(),
    })
}

pub fn save_stimulus(stim: &Stimulus) -> String {
    let doc = StimulusDoc {
        horizon: stim.horizon,
        events: stim
            .events
            .iter()
            .map(|e| StimulusEventDoc {
                t: e.t,
                neuron: e.neuron.0,
                charge: e.charge.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("stimulus serialization cannot fail")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    horizon: u64,
    counts: Vec<u64>,
    digest: String,
}

pub fn save_profile(profile: &SpikeProfile) -> String {
    let doc = ProfileDoc {
        horizon: profile.horizon,
        counts: profile.counts.clone(),
        digest: profile.digest.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("profile serialization cannot fail")
}

/// Load a profile, verifying the stored digest against the content.
pub fn load_profile(bytes: &[u8]) -> Result<SpikeProfile, SimError> {
    let doc: ProfileDoc =
        serde_json::from_slice(bytes).map_err(|e| SimError::Parse(e.to_string()))?;
    let computed = profile_digest(doc.horizon, &doc.counts);
    if computed != doc.digest {
        return Err(SimError::DigestMismatch {
            stored: doc.digest,
            computed,
        });
    }
    Ok(SpikeProfile {
        horizon: doc.horizon,
        counts: doc.counts,
        digest: doc.digest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_network;
    use crate::inventory::{expand_inventory, CrossbarKind};
    use crate::mapping::MappingSolution;
    use crate::rational::from_i64;

    fn stim(horizon: u64, events: &[(u64, usize, i64)]) -> Stimulus {
        Stimulus {
            horizon,
            events: events
                .iter()
                .map(|&(t, n, c)| StimulusEvent {
                    t,
                    neuron: NeuronId(n),
                    charge: from_i64(c),
                })
                .collect(),
        }
    }

    #[test]
    fn single_neuron_fires_once() {
        let net = load_network(br#"{"nodes": 1, "edges": [], "inputs": [0]}"#).unwrap();
        let (profile, events) =
            simulate(&net, &stim(3, &[(0, 0, 1)]), &SimConfig::default()).unwrap();
        assert_eq!(profile.counts, vec![1]);
        assert_eq!(events.events, vec![(0, NeuronId(0))]);
    }

    #[test]
    fn chain_propagates_one_step_later() {
        let net = load_network(
            br#"{"nodes": 2, "edges": [{"pre": 0, "post": 1, "weight": 1, "delay": 0}],
                 "inputs": [0]}"#,
        )
        .unwrap();
        let (profile, events) =
            simulate(&net, &stim(3, &[(0, 0, 1)]), &SimConfig::default()).unwrap();
        assert_eq!(profile.counts, vec![1, 1]);
        assert_eq!(events.events, vec![(0, NeuronId(0)), (1, NeuronId(1))]);
    }

    #[test]
    fn delay_shifts_arrival() {
        let net = load_network(
            br#"{"nodes": 2, "edges": [{"pre": 0, "post": 1, "weight": 1, "delay": 3}],
                 "inputs": [0]}"#,
        )
        .unwrap();
        let (_, events) = simulate(&net, &stim(6, &[(0, 0, 1)]), &SimConfig::default()).unwrap();
        assert_eq!(events.events, vec![(0, NeuronId(0)), (3, NeuronId(1))]);
    }

    #[test]
    fn inhibitory_edge_never_fires_target() {
        let net = load_network(
            br#"{"nodes": 2, "edges": [{"pre": 0, "post": 1, "weight": -1}],
                 "inputs": [0]}"#,
        )
        .unwrap();
        let (profile, _) =
            simulate(&net, &stim(5, &[(0, 0, 1), (2, 0, 1)]), &SimConfig::default()).unwrap();
        assert_eq!(profile.counts[1], 0);
    }

    #[test]
    fn self_loop_sustains_firing() {
        let net = load_network(
            br#"{"nodes": 1, "edges": [{"pre": 0, "post": 0, "weight": 1}], "inputs": [0]}"#,
        )
        .unwrap();
        let (profile, _) = simulate(&net, &stim(4, &[(0, 0, 1)]), &SimConfig::default()).unwrap();
        assert_eq!(profile.counts, vec![4]);
    }

    #[test]
    fn leak_hook_decays_potential() {
        let net = load_network(br#"{"nodes": 1, "edges": [], "inputs": [0]}"#).unwrap();
        let config = SimConfig {
            leak_retain: Some(crate::rational::parse("1/2").unwrap()),
            ..Default::default()
        };
        // 0.6 then 0.6: without leak would fire at t=1; with leak 0.3+0.6 < 1.
        let events = Stimulus {
            horizon: 3,
            events: vec![
                StimulusEvent { t: 0, neuron: NeuronId(0), charge: crate::rational::parse("3/5").unwrap() },
                StimulusEvent { t: 1, neuron: NeuronId(0), charge: crate::rational::parse("3/5").unwrap() },
            ],
        };
        let (profile, _) = simulate(&net, &events, &config).unwrap();
        assert_eq!(profile.counts, vec![0]);
    }

    #[test]
    fn refractory_hook_discards_charge() {
        let net = load_network(br#"{"nodes": 1, "edges": [], "inputs": [0]}"#).unwrap();
        let config = SimConfig {
            refractory: Some(2),
            ..Default::default()
        };
        let (profile, _) = simulate(
            &net,
            &stim(4, &[(0, 0, 1), (1, 0, 1), (2, 0, 1), (3, 0, 1)]),
            &config,
        )
        .unwrap();
        // Fires at t=0, ignores t=1 and t=2, fires again at t=3.
        assert_eq!(profile.counts, vec![2]);
    }

    #[test]
    fn stimulus_validation() {
        let net = load_network(br#"{"nodes": 2, "edges": [], "inputs": [0]}"#).unwrap();
        for bad in [stim(2, &[(5, 0, 1)]), stim(2, &[(0, 1, 1)])] {
            assert!(matches!(
                simulate(&net, &bad, &SimConfig::default()),
                Err(SimError::InvalidStimulus(_))
            ));
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let net = crate::gen::random_network(&crate::gen::NetSpec {
            nodes: 20,
            edges: 30,
            max_fan_in: 5,
            seed: 7,
        })
        .unwrap();
        let stimulus = crate::gen::random_stimulus(&net, 40, 25, 9);
        let a = simulate(&net, &stimulus, &SimConfig::default()).unwrap();
        let b = simulate(&net, &stimulus, &SimConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn packet_counts_follow_distinct_target_rule() {
        // Source 0 feeds receivers on two foreign crossbars and fires 5 times.
        let net = load_network(
            br#"{"nodes": 3,
                 "edges": [{"pre": 0, "post": 1}, {"pre": 0, "post": 2}],
                 "inputs": [0]}"#,
        )
        .unwrap();
        let kinds = vec![CrossbarKind::new(2, 2)];
        let inventory = expand_inventory(&kinds, &[3]).unwrap();
        let mapping = MappingSolution::from_assignment(
            &net,
            &inventory,
            vec![crate::inventory::CrossbarId(0), crate::inventory::CrossbarId(1), crate::inventory::CrossbarId(2)],
        )
        .unwrap();
        let events = SimEvents {
            events: (0..5).map(|t| (t, NeuronId(0))).collect(),
        };
        let stats = count_packets(&mapping, &events, &net).unwrap();
        assert_eq!(stats.global_packets, 10);
        assert_eq!(stats.local_packets, 0);
    }

    #[test]
    fn colocated_successors_cost_nothing_globally() {
        let net = load_network(
            br#"{"nodes": 3,
                 "edges": [{"pre": 0, "post": 1}, {"pre": 0, "post": 2}],
                 "inputs": [0]}"#,
        )
        .unwrap();
        let kinds = vec![CrossbarKind::new(4, 4)];
        let inventory = expand_inventory(&kinds, &[1]).unwrap();
        let mapping = MappingSolution::from_assignment(
            &net,
            &inventory,
            vec![crate::inventory::CrossbarId(0); 3],
        )
        .unwrap();
        let events = SimEvents {
            events: (0..7).map(|t| (t, NeuronId(0))).collect(),
        };
        let stats = count_packets(&mapping, &events, &net).unwrap();
        assert_eq!(stats.global_packets, 0);
        assert_eq!(stats.local_packets, 7);
    }

    #[test]
    fn profile_round_trip_and_corruption() {
        let profile = SpikeProfile::from_counts(10, vec![3, 0, 2]);
        let saved = save_profile(&profile);
        assert_eq!(load_profile(saved.as_bytes()).unwrap(), profile);

        let truncated = &saved.as_bytes()[..saved.len() / 2];
        assert!(matches!(load_profile(truncated), Err(SimError::Parse(_))));

        let tampered = saved.replace("\"counts\": [\n    3,", "\"counts\": [\n    4,");
        assert!(matches!(
            load_profile(tampered.as_bytes()),
            Err(SimError::DigestMismatch { .. })
        ));
    }

    #[test]
    fn stimulus_round_trip() {
        let s = stim(6, &[(0, 0, 1), (3, 0, 2)]);
        let saved = save_stimulus(&s);
        assert_eq!(load_stimulus(saved.as_bytes()).unwrap(), s);
        assert_eq!(stimulus_digest(&s), stimulus_digest(&s));
    }

    #[test]
    fn sampled_stimulus_error_report() {
        // A 1% sample of a long stimulus versus the full run: report the
        // relative difference in global packets; no tolerance is asserted,
        // only well-formedness.
        let net = crate::gen::random_network(&crate::gen::NetSpec {
            nodes: 30,
            edges: 45,
            max_fan_in: 6,
            seed: 21,
        })
        .unwrap();
        let full = crate::gen::random_stimulus(&net, 400, 400, 5);
        let sample = Stimulus {
            horizon: full.horizon,
            events: full.events.iter().take(4).cloned().collect(),
        };
        let kinds = vec![CrossbarKind::new(8, 4)];
        let inventory = expand_inventory(&kinds, &[8]).unwrap();
        let assignment = (0..net.node_count())
            .map(|i| crate::inventory::CrossbarId(i / 4))
            .collect();
        let mapping = MappingSolution::from_assignment(&net, &inventory, assignment).unwrap();

        let (_, full_events) = simulate(&net, &full, &SimConfig::default()).unwrap();
        let (_, sample_events) = simulate(&net, &sample, &SimConfig::default()).unwrap();
        let full_packets = count_packets(&mapping, &full_events, &net).unwrap();
        let sample_packets = count_packets(&mapping, &sample_events, &net).unwrap();
        let rel = if full_packets.global_packets == 0 {
            0.0
        } else {
            (full_packets.global_packets as f64 - sample_packets.global_packets as f64).abs()
                / full_packets.global_packets as f64
        };
        println!(
            "sampled-profile relative global-packet error: {rel:.3} \
             (sample {}, full {})",
            sample_packets.global_packets, full_packets.global_packets
        );
        assert!(rel.is_finite());
    }
}
