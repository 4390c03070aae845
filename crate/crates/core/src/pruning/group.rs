use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Layer, ParamSet};

/// Which slice of a layer a channel index addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    /// Row `k` of the weight matrix.
    OutputRows,
    /// Column `k` of the weight matrix.
    InputColumns,
    /// Entry `k` of the bias.
    Bias,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMember {
    pub layer: String,
    pub axis: Axis,
}

/// A set of coupled slices: removing channel `k` removes slice `k` from
/// every member at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruningGroup {
    pub id: usize,
    pub members: Vec<GroupMember>,
    /// Number of prunable channels `K`.
    pub channels: usize,
    /// Distinct network positions of the member layers.
    pub layer_indices: Vec<usize>,
}

impl PruningGroup {
    pub fn new(id: usize, members: Vec<(String, Axis)>, channels: usize, layer_indices: Vec<usize>) -> Self {
        let layer_indices: BTreeSet<usize> = layer_indices.into_iter().collect();
        PruningGroup {
            id,
            members: members
                .into_iter()
                .map(|(layer, axis)| GroupMember { layer, axis })
                .collect(),
            channels,
            layer_indices: layer_indices.into_iter().collect(),
        }
    }

    fn slice_len(layer: &Layer, axis: Axis) -> usize {
        match axis {
            Axis::OutputRows => layer.weight.rows(),
            Axis::InputColumns => layer.weight.cols(),
            Axis::Bias => layer.bias.len(),
        }
    }

    /// Checks every member exists and exposes exactly `channels` slices.
    pub fn validate(&self, params: &ParamSet) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::config(format!("group {} has no channels", self.id)));
        }
        if self.members.is_empty() {
            return Err(Error::config(format!("group {} has no members", self.id)));
        }
        let mut seen = BTreeSet::new();
        for m in &self.members {
            let layer = params
                .layer(&m.layer)
                .ok_or_else(|| Error::config(format!("group {} references absent layer {}", self.id, m.layer)))?;
            let n = Self::slice_len(layer, m.axis);
            if n != self.channels {
                return Err(Error::config(format!(
                    "group {}: layer {} has {n} slices along {:?}, group declares {}",
                    self.id, m.layer, m.axis, self.channels
                )));
            }
            seen.insert(layer.index);
        }
        if seen.into_iter().collect::<Vec<_>>() != self.layer_indices {
            return Err(Error::config(format!(
                "group {} layer indices {:?} disagree with its members",
                self.id, self.layer_indices
            )));
        }
        Ok(())
    }

    /// Values of channel `k`, members concatenated in declaration order.
    pub fn channel_values(&self, params: &ParamSet, k: usize) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for m in &self.members {
            let layer = params
                .layer(&m.layer)
                .ok_or_else(|| Error::config(format!("absent layer {}", m.layer)))?;
            match m.axis {
                Axis::OutputRows => out.extend_from_slice(layer.weight.row(k)),
                Axis::InputColumns => out.extend((0..layer.weight.rows()).map(|r| layer.weight.get(r, k))),
                Axis::Bias => out.push(layer.bias[k]),
            }
        }
        Ok(out)
    }

    pub fn channel_norm_sq(&self, params: &ParamSet, k: usize) -> Result<f64> {
        Ok(self.channel_values(params, k)?.iter().map(|v| v * v).sum())
    }

    /// Applies `f(param, grad)` to every entry of channel `k`.
    pub(crate) fn for_each_entry_mut(
        &self,
        params: &ParamSet,
        grad: &mut ParamSet,
        k: usize,
        mut f: impl FnMut(f64, &mut f64),
    ) -> Result<()> {
        for m in &self.members {
            let pos = params
                .layer_position(&m.layer)
                .ok_or_else(|| Error::config(format!("absent layer {}", m.layer)))?;
            let src = &params.layers()[pos];
            let dst = &mut grad.layers_mut()[pos];
            match m.axis {
                Axis::OutputRows => {
                    for (g, p) in dst.weight.row_mut(k).iter_mut().zip(src.weight.row(k)) {
                        f(*p, g);
                    }
                }
                Axis::InputColumns => {
                    for r in 0..src.weight.rows() {
                        f(src.weight.get(r, k), dst.weight.get_mut(r, k));
                    }
                }
                Axis::Bias => f(src.bias[k], &mut dst.bias[k]),
            }
        }
        Ok(())
    }
}

/// One group per hidden width: output rows and bias of layer `i` together
/// with input columns of layer `i + 1`. Input and output layers are never
/// prunable on their outer sides.
pub fn hidden_layer_groups(params: &ParamSet) -> Vec<PruningGroup> {
    params
        .layers()
        .windows(2)
        .enumerate()
        .map(|(id, pair)| {
            PruningGroup::new(
                id,
                vec![
                    (pair[0].name.clone(), Axis::OutputRows),
                    (pair[0].name.clone(), Axis::Bias),
                    (pair[1].name.clone(), Axis::InputColumns),
                ],
                pair[0].outputs(),
                vec![pair[0].index, pair[1].index],
            )
        })
        .collect()
}

/// Groups must be individually valid and must not claim the same
/// `(layer, axis)` twice.
pub(crate) fn validate_groups(params: &ParamSet, groups: &[PruningGroup]) -> Result<()> {
    let mut claimed = BTreeSet::new();
    let mut ids = BTreeSet::new();
    for g in groups {
        g.validate(params)?;
        if !ids.insert(g.id) {
            return Err(Error::config(format!("duplicate group id {}", g.id)));
        }
        for m in &g.members {
            if !claimed.insert((m.layer.clone(), m.axis)) {
                return Err(Error::config(format!(
                    "layer {} axis {:?} claimed by more than one group",
                    m.layer, m.axis
                )));
            }
        }
    }
    Ok(())
}
