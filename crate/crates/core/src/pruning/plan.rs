use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use super::group::{validate_groups, Axis, PruningGroup};
use crate::error::{Error, Result};
use crate::params::{Layer, ParamSet};

/// Unweighted L2 norm of one channel's concatenated member slices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRank {
    pub group: usize,
    pub channel: usize,
    pub norm: f64,
}

/// Channels chosen for removal, keyed by group id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PruningPlan {
    pub removals: BTreeMap<usize, BTreeSet<usize>>,
    pub ratio: f64,
}

impl PruningPlan {
    pub fn removed_count(&self) -> usize {
        self.removals.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.removed_count() == 0
    }

    pub fn validate(&self, groups: &[PruningGroup]) -> Result<()> {
        for (id, removed) in &self.removals {
            let g = groups
                .iter()
                .find(|g| g.id == *id)
                .ok_or_else(|| Error::config(format!("plan references unknown group {id}")))?;
            if let Some(bad) = removed.iter().find(|&&k| k >= g.channels) {
                return Err(Error::config(format!(
                    "plan removes channel {bad} from group {id} with {} channels",
                    g.channels
                )));
            }
            if removed.len() >= g.channels {
                return Err(Error::config(format!("plan would empty group {id}")));
            }
        }
        Ok(())
    }
}

/// Text form: a `ratio = <s_p>` line, then one `<group>: <i>,<j>,...` line
/// per group with removals.
impl fmt::Display for PruningPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ratio = {:?}", self.ratio)?;
        for (id, removed) in &self.removals {
            let list: Vec<String> = removed.iter().map(usize::to_string).collect();
            writeln!(f, "{id}: {}", list.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for PruningPlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut plan = PruningPlan::default();
        let mut saw_ratio = false;
        for (lineno, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::invalid(format!("plan line {}: cannot parse `{line}`", lineno + 1));
            if let Some(rest) = line.strip_prefix("ratio") {
                let value = rest.trim_start().strip_prefix('=').ok_or_else(bad)?;
                plan.ratio = value.trim().parse().map_err(|_| bad())?;
                saw_ratio = true;
                continue;
            }
            let (id, list) = line.split_once(':').ok_or_else(bad)?;
            let id: usize = id.trim().parse().map_err(|_| bad())?;
            let mut set = BTreeSet::new();
            for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                set.insert(item.parse::<usize>().map_err(|_| bad())?);
            }
            if !set.is_empty() {
                plan.removals.insert(id, set);
            }
        }
        if !saw_ratio {
            return Err(Error::invalid("plan text has no ratio line"));
        }
        Ok(plan)
    }
}

/// Every `(group, channel)` pair by ascending norm, ties broken by group id
/// then channel index.
pub fn rank_channels_by_group_norm(params: &ParamSet, groups: &[PruningGroup]) -> Result<Vec<ChannelRank>> {
    validate_groups(params, groups)?;
    let mut ranking = Vec::new();
    for g in groups {
        for k in 0..g.channels {
            ranking.push(ChannelRank {
                group: g.id,
                channel: k,
                norm: g.channel_norm_sq(params, k)?.sqrt(),
            });
        }
    }
    ranking.sort_by(|a, b| {
        a.norm
            .total_cmp(&b.norm)
            .then(a.group.cmp(&b.group))
            .then(a.channel.cmp(&b.channel))
    });
    Ok(ranking)
}

fn check_ratio(s_p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&s_p) {
        return Err(Error::invalid(format!("pruning ratio {s_p} outside [0, 1)")));
    }
    Ok(())
}

fn budget(groups: &[PruningGroup], s_p: f64) -> usize {
    let total: usize = groups.iter().map(|g| g.channels).sum();
    // absorb representation error such as 0.29 * 100 = 28.999...
    (s_p * total as f64 + 1e-9).floor() as usize
}

/// Walks candidates in order, skipping any removal that would empty its group.
fn greedy_plan(
    candidates: impl IntoIterator<Item = (usize, usize)>,
    groups: &[PruningGroup],
    s_p: f64,
) -> Result<PruningPlan> {
    check_ratio(s_p)?;
    let target = budget(groups, s_p);
    let mut remaining: BTreeMap<usize, usize> = groups.iter().map(|g| (g.id, g.channels)).collect();
    let mut plan = PruningPlan {
        removals: BTreeMap::new(),
        ratio: s_p,
    };
    let mut removed = 0;
    for (group, channel) in candidates {
        if removed == target {
            break;
        }
        let left = remaining
            .get_mut(&group)
            .ok_or_else(|| Error::config(format!("ranking references unknown group {group}")))?;
        if *left <= 1 {
            continue;
        }
        if plan.removals.entry(group).or_default().insert(channel) {
            *left -= 1;
            removed += 1;
        }
    }
    plan.removals.retain(|_, s| !s.is_empty());
    Ok(plan)
}

/// Removes the globally lowest-norm `floor(s_p * total)` channels, keeping at
/// least one channel per group.
pub fn build_pruning_plan(ranking: &[ChannelRank], groups: &[PruningGroup], s_p: f64) -> Result<PruningPlan> {
    greedy_plan(ranking.iter().map(|r| (r.group, r.channel)), groups, s_p)
}

/// Same budget and floor as [`build_pruning_plan`], channels chosen uniformly
/// at random.
pub fn random_pruning_plan<R: Rng + ?Sized>(groups: &[PruningGroup], s_p: f64, rng: &mut R) -> Result<PruningPlan> {
    let mut candidates: Vec<(usize, usize)> = groups
        .iter()
        .flat_map(|g| (0..g.channels).map(move |k| (g.id, k)))
        .collect();
    candidates.shuffle(rng);
    greedy_plan(candidates, groups, s_p)
}

/// Deletes every member slice of each removed channel. Returns the pruned
/// parameters and groups with their new channel counts.
pub fn apply_pruning(
    params: &ParamSet,
    groups: &[PruningGroup],
    plan: &PruningPlan,
) -> Result<(ParamSet, Vec<PruningGroup>)> {
    validate_groups(params, groups)?;
    plan.validate(groups)?;
    let mut layers: Vec<Layer> = params.layers().to_vec();
    let mut pruned_groups = Vec::with_capacity(groups.len());
    for g in groups {
        let removed = plan.removals.get(&g.id);
        let keep: Vec<usize> = (0..g.channels)
            .filter(|k| removed.is_none_or(|r| !r.contains(k)))
            .collect();
        if keep.len() != g.channels {
            for m in &g.members {
                let layer = layers
                    .iter_mut()
                    .find(|l| l.name == m.layer)
                    .ok_or_else(|| Error::config(format!("absent layer {}", m.layer)))?;
                match m.axis {
                    Axis::OutputRows => layer.weight = layer.weight.select_rows(&keep),
                    Axis::InputColumns => layer.weight = layer.weight.select_cols(&keep),
                    Axis::Bias => layer.bias = keep.iter().map(|&k| layer.bias[k]).collect(),
                }
            }
        }
        let mut pg = g.clone();
        pg.channels = keep.len();
        pruned_groups.push(pg);
    }
    let layers = layers
        .into_iter()
        .map(|l| Layer::new(l.name, l.index, l.weight, l.bias))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::config(format!("plan leaves an inconsistent layer: {e}")))?;
    let pruned = ParamSet::new(layers).map_err(|e| Error::config(format!("plan breaks layer coupling: {e}")))?;
    Ok((pruned, pruned_groups))
}
