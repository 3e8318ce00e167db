//! Heterogeneous crossbar inventories.
//!
//! A [`CrossbarKind`] describes one available dimension: `inputs` word-lines,
//! `outputs` bit-lines, an area cost, and an optional instance cap. An
//! [`Inventory`] is the expanded, ordered list of concrete crossbar instances
//! the placement model ranges over.

use num::rational::BigRational;
use num::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational;

/// Index of a concrete crossbar instance within an [`Inventory`].
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct CrossbarId(pub usize);

impl std::fmt::Display for CrossbarId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarKind {
    /// Word-lines: how many distinct axonal inputs the crossbar accepts.
    pub inputs: u32,
    /// Bit-lines: how many neurons the crossbar can host as outputs.
    pub outputs: u32,
    /// Area cost; defaults to the memristor count `inputs * outputs`.
    pub cost: BigRational,
    /// Optional instance cap; `None` defers to a node-count-derived default.
    pub available: Option<u32>,
}

impl CrossbarKind {
    pub fn new(inputs: u32, outputs: u32) -> Self {
        CrossbarKind {
            inputs,
            outputs,
            cost: rational::from_i64(inputs as i64 * outputs as i64),
            available: None,
        }
    }

    pub fn with_cost(mut self, cost: BigRational) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_available(mut self, cap: u32) -> Self {
        self.available = Some(cap);
        self
    }

    fn validate(&self) -> Result<(), InventoryError> {
        if self.inputs == 0 || self.outputs == 0 {
            return Err(InventoryError::InvalidParameter(format!(
                "crossbar dimensions must be positive, got {}x{}",
                self.inputs, self.outputs
            )));
        }
        if !self.cost.is_positive() {
            return Err(InventoryError::InvalidParameter(format!(
                "crossbar cost must be positive, got {}",
                rational::display(&self.cost)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expanded inventory of {got} instances exceeds the limit of {limit}")]
    ModelTooLarge { got: usize, limit: usize },
    #[error("malformed inventory document: {0}")]
    Parse(String),
}

/// One concrete crossbar instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossbar {
    pub kind_index: usize,
    pub inputs: u32,
    pub outputs: u32,
    pub cost: BigRational,
}

/// Expanded, deterministically ordered crossbar instances. Instances of a
/// kind are contiguous and kinds keep their given order.
#[derive(Debug, Clone, PartialEq)]
pub struct Inventory {
    crossbars: Vec<Crossbar>,
}

pub const DEFAULT_MAX_INSTANCES: usize = 4096;

impl Inventory {
    pub fn len(&self) -> usize {
        self.crossbars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crossbars.is_empty()
    }

    pub fn get(&self, id: CrossbarId) -> &Crossbar {
        &self.crossbars[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Crossbar> {
        self.crossbars.iter()
    }

    pub fn max_inputs(&self) -> u32 {
        self.crossbars.iter().map(|c| c.inputs).max().unwrap_or(0)
    }

    pub fn min_cost(&self) -> Option<&BigRational> {
        self.crossbars.iter().map(|c| &c.cost).min()
    }

    /// Maximal runs of consecutive instances of the same kind; the unit of
    /// symmetry breaking in the placement model.
    pub fn identical_runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = 0;
        for j in 1..=self.crossbars.len() {
            if j == self.crossbars.len()
                || self.crossbars[j].kind_index != self.crossbars[start].kind_index
            {
                runs.push(start..j);
                start = j;
            }
        }
        runs
    }
}

/// All crossbar dimensions realizable with power-of-two square macros up to
/// `max_side`, plus 2x/4x/8x vertical stackings whose stacked input channel
/// count still fits within `max_side`. Cost defaults to memristor count.
pub fn multimacro_kinds(max_side: u32) -> Result<Vec<CrossbarKind>, InventoryError> {
    if max_side < 4 || !max_side.is_power_of_two() {
        return Err(InventoryError::InvalidParameter(format!(
            "max_side must be a power of two >= 4, got {max_side}"
        )));
    }
    let mut kinds = Vec::new();
    let mut side = 4;
    while side <= max_side {
        for mult in [1u32, 2, 4, 8] {
            let inputs = side * mult;
            if inputs <= max_side {
                kinds.push(CrossbarKind::new(inputs, side));
            }
        }
        side *= 2;
    }
    Ok(kinds)
}

/// Per-kind default instance cap for a network of `node_count` neurons:
/// enough instances of each kind to host every neuron by outputs alone.
pub fn default_caps(kinds: &[CrossbarKind], node_count: usize) -> Vec<u32> {
    kinds
        .iter()
        .map(|k| {
            let by_outputs = node_count.div_ceil(k.outputs as usize) as u32;
            match k.available {
                Some(cap) => cap.min(by_outputs.max(1)),
                None => by_outputs,
            }
        })
        .collect()
}

pub fn expand_inventory(
    kinds: &[CrossbarKind],
    caps: &[u32],
) -> Result<Inventory, InventoryError> {
    expand_inventory_with_limit(kinds, caps, DEFAULT_MAX_INSTANCES)
}

pub fn expand_inventory_with_limit(
    kinds: &[CrossbarKind],
    caps: &[u32],
    limit: usize,
) -> Result<Inventory, InventoryError> {
    if kinds.len() != caps.len() {
        return Err(InventoryError::InvalidParameter(format!(
            "{} kinds but {} caps",
            kinds.len(),
            caps.len()
        )));
    }
    for kind in kinds {
        kind.validate()?;
    }
    let total: usize = caps.iter().map(|&c| c as usize).sum();
    if total > limit {
        return Err(InventoryError::ModelTooLarge { got: total, limit });
    }
    let mut crossbars = Vec::with_capacity(total);
    for (kind_index, (kind, &cap)) in kinds.iter().zip(caps).enumerate() {
        for _ in 0..cap {
            crossbars.push(Crossbar {
                kind_index,
                inputs: kind.inputs,
                outputs: kind.outputs,
                cost: kind.cost.clone(),
            });
        }
    }
    Ok(Inventory { crossbars })
}

/// Expand with per-kind explicit counts where given, and the node-count
/// default elsewhere.
pub fn expand_for_network(
    kinds: &[CrossbarKind],
    node_count: usize,
) -> Result<Inventory, InventoryError> {
    let caps = default_caps(kinds, node_count);
    expand_inventory(kinds, &caps)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KindDoc {
    inputs: u32,
    outputs: u32,
    #[serde(default, with = "opt_rational")]
    cost: Option<BigRational>,
    #[serde(default)]
    count: Option<u32>,
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &Option<BigRational>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => rational::serialize_one(r, ser),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<Option<BigRational>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "rational::serde_one")] BigRational);
        Ok(Option::<Wrap>::deserialize(de)?.map(|w| w.0))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InventoryDoc {
    kinds: Vec<KindDoc>,
}

/// Parse an inventory document: `{ "kinds": [{"inputs": A, "outputs": N,
/// "cost": C, "count": cap}...] }`. `cost` defaults to `A*N`, `count` to the
/// node-count-derived default at expansion time.
pub fn load_kinds(bytes: &[u8]) -> Result<Vec<CrossbarKind>, InventoryError> {
    let doc: InventoryDoc =
        serde_json::from_slice(bytes).map_err(|e| InventoryError::Parse(e.to_string()))?;
    let kinds: Vec<CrossbarKind> = doc
        .kinds
        .into_iter()
        .map(|k| {
            let mut kind = CrossbarKind::new(k.inputs, k.outputs);
            if let Some(cost) = k.cost {
                kind.cost = cost;
            }
            kind.available = k.count;
            kind
        })
        .collect();
    for kind in &kinds {
        kind.validate()?;
    }
    Ok(kinds)
}

pub fn save_kinds(kinds: &[CrossbarKind]) -> String {
    let doc = InventoryDoc {
        kinds: kinds
            .iter()
            .map(|k| KindDoc {
                inputs: k.inputs,
                outputs: k.outputs,
                cost: Some(k.cost.clone()),
                count: k.available,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("inventory serialization cannot fail")
}
