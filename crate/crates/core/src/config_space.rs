//! Exhaustive analysis of the single-GPU configuration space.
//!
//! A configuration is the multiset of `(profile, start)` placements on one
//! GPU; GI identities are ignored. The universe is grown by depth-first
//! search from the empty GPU, adding one GI at any legal position per edge.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::mig::{
    available_starts, best_start, capacity_vector, get_cc, render_placements, BlockSet,
    GiPlacement, Profile,
};

/// Per-profile instance counts in [`Profile::ALL`] order.
pub type GiMultiset = [u8; 6];

/// Canonical placement list (sorted by start block).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Configuration(Vec<GiPlacement>);

impl Configuration {
    pub fn empty() -> Self {
        Configuration(Vec::new())
    }

    pub fn from_placements<I: IntoIterator<Item = GiPlacement>>(placements: I) -> Self {
        let mut v: Vec<GiPlacement> = placements.into_iter().collect();
        v.sort_by_key(|p| (p.start, p.profile));
        Configuration(v)
    }

    pub fn placements(&self) -> &[GiPlacement] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn free_blocks(&self) -> BlockSet {
        self.0
            .iter()
            .fold(BlockSet::FULL, |free, p| free.difference(p.blocks()))
    }

    pub fn gi_multiset(&self) -> GiMultiset {
        let mut counts = [0u8; 6];
        for p in &self.0 {
            counts[p.profile.index()] += 1;
        }
        counts
    }

    /// Returns a new configuration with `placement` added.
    pub fn with(&self, placement: GiPlacement) -> Self {
        let mut v = self.0.clone();
        v.push(placement);
        Configuration::from_placements(v)
    }

    /// Every `(profile, start)` that can be added.
    pub fn legal_additions(&self) -> Vec<GiPlacement> {
        let free = self.free_blocks();
        Profile::ALL
            .into_iter()
            .flat_map(|profile| {
                available_starts(profile, free).map(move |start| GiPlacement { profile, start })
            })
            .collect()
    }

    pub fn render(&self) -> String {
        render_placements(self.0.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigRecord {
    pub config: Configuration,
    pub free_blocks: BlockSet,
    pub gi_multiset: GiMultiset,
    pub cc: u32,
    pub capacity: [u32; 6],
}

impl ConfigRecord {
    pub fn new(config: Configuration) -> Self {
        let free_blocks = config.free_blocks();
        ConfigRecord {
            gi_multiset: config.gi_multiset(),
            cc: get_cc(free_blocks),
            capacity: capacity_vector(free_blocks),
            free_blocks,
            config,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigSpaceError {
    #[error("configuration {0} is not part of the enumerated universe")]
    NotInUniverse(String),
}

/// The enumerated universe plus lookup tables.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    records: Vec<ConfigRecord>,
    index: HashMap<Configuration, usize>,
    terminal: usize,
    best_cc: HashMap<GiMultiset, u32>,
}

/// Depth-first enumeration of every configuration reachable from the empty
/// GPU by adding GIs. Children are visited in the order returned by
/// `order_children`, which lets tests check order independence.
pub fn enumerate_with<F>(mut order_children: F) -> (Vec<Configuration>, usize)
where
    F: FnMut(&mut Vec<GiPlacement>),
{
    let mut seen: HashSet<Configuration> = HashSet::new();
    let mut visited = Vec::new();
    let mut terminal = 0;
    let mut stack = vec![Configuration::empty()];
    while let Some(config) = stack.pop() {
        if !seen.insert(config.clone()) {
            continue;
        }
        let mut children = config.legal_additions();
        if children.is_empty() {
            terminal += 1;
        }
        order_children(&mut children);
        for child in children.into_iter().rev() {
            let next = config.with(child);
            if !seen.contains(&next) {
                stack.push(next);
            }
        }
        visited.push(config);
    }
    (visited, terminal)
}

impl ConfigSpace {
    /// Enumerates the whole single-GPU space.
    pub fn enumerate_all() -> Self {
        let (mut configs, terminal) = enumerate_with(|_| {});
        configs.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let records: Vec<ConfigRecord> = configs.into_iter().map(ConfigRecord::new).collect();
        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.config.clone(), i))
            .collect();
        let mut best_cc: HashMap<GiMultiset, u32> = HashMap::new();
        for r in &records {
            let e = best_cc.entry(r.gi_multiset).or_insert(0);
            *e = (*e).max(r.cc);
        }
        ConfigSpace {
            records,
            index,
            terminal,
            best_cc,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminal
    }

    pub fn records(&self) -> &[ConfigRecord] {
        &self.records
    }

    pub fn find(&self, config: &Configuration) -> Option<&ConfigRecord> {
        self.index.get(config).map(|&i| &self.records[i])
    }

    /// Number of distinct GI multisets in the universe.
    pub fn multiset_count(&self) -> usize {
        self.best_cc.len()
    }

    /// True iff no arrangement of the same GIs has a strictly higher CC.
    pub fn is_optimal(&self, config: &Configuration) -> Result<bool, ConfigSpaceError> {
        let record = self
            .find(config)
            .ok_or_else(|| ConfigSpaceError::NotInUniverse(config.render()))?;
        Ok(record.cc >= self.best_cc[&record.gi_multiset])
    }

    fn record_is_optimal(&self, record: &ConfigRecord) -> bool {
        record.cc >= self.best_cc[&record.gi_multiset]
    }

    pub fn suboptimal_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| !self.record_is_optimal(r))
            .count()
    }

    pub fn count_suboptimal<'a, I>(&self, configs: I) -> usize
    where
        I: IntoIterator<Item = &'a Configuration>,
    {
        configs
            .into_iter()
            .filter(|c| self.is_optimal(c) == Ok(false))
            .count()
    }

    /// Single- and two-GPU dominance counts.
    pub fn dominance_stats(&self) -> DominanceStats {
        let single_groups = group_by(
            self.records
                .iter()
                .map(|r| (r.gi_multiset, (r.cc, r.capacity))),
        );
        let single_improvable = single_groups.values().map(|g| count_improvable(g)).sum();

        let mut pair_groups: HashMap<GiMultiset, Vec<(u32, [u32; 6])>> = HashMap::new();
        let mut pair_count = 0u64;
        for (i, a) in self.records.iter().enumerate() {
            for b in &self.records[i..] {
                pair_count += 1;
                let mut key = a.gi_multiset;
                let mut cap = a.capacity;
                for k in 0..6 {
                    key[k] += b.gi_multiset[k];
                    cap[k] += b.capacity[k];
                }
                pair_groups.entry(key).or_default().push((a.cc + b.cc, cap));
            }
        }
        let pair_improvable = pair_groups
            .values()
            .map(|g| count_improvable(g) as u64)
            .sum();

        DominanceStats {
            single_improvable,
            pair_count,
            pair_improvable,
        }
    }

    /// Block strings of every configuration in universe order.
    pub fn block_strings(&self) -> Vec<String> {
        self.records.iter().map(|r| r.config.render()).collect()
    }
}

fn group_by<I>(items: I) -> HashMap<GiMultiset, Vec<(u32, [u32; 6])>>
where
    I: IntoIterator<Item = (GiMultiset, (u32, [u32; 6]))>,
{
    let mut groups: HashMap<GiMultiset, Vec<(u32, [u32; 6])>> = HashMap::new();
    for (key, value) in items {
        groups.entry(key).or_default().push(value);
    }
    groups
}

/// Counts members `m` for which some member with CC <= CC(m) holds strictly
/// more of at least one profile.
///
/// Per profile, the best capacity among members with CC at most `c` is a
/// prefix maximum over the CC-sorted group, so one sort suffices.
fn count_improvable(group: &[(u32, [u32; 6])]) -> usize {
    let mut by_cc: BTreeMap<u32, [u32; 6]> = BTreeMap::new();
    for &(cc, cap) in group {
        let e = by_cc.entry(cc).or_insert([0; 6]);
        for k in 0..6 {
            e[k] = e[k].max(cap[k]);
        }
    }
    let mut running = [0u32; 6];
    let mut prefix_max: HashMap<u32, [u32; 6]> = HashMap::with_capacity(by_cc.len());
    for (cc, cap) in by_cc {
        for k in 0..6 {
            running[k] = running[k].max(cap[k]);
        }
        prefix_max.insert(cc, running);
    }
    group
        .iter()
        .filter(|(cc, cap)| {
            let best = prefix_max[cc];
            (0..6).any(|k| best[k] > cap[k])
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DominanceStats {
    /// Configurations for which an equal-GI arrangement with CC no higher
    /// holds more of some profile.
    pub single_improvable: usize,
    /// Unordered pairs of configurations (with repetition).
    pub pair_count: u64,
    /// Pairs for which a redistribution of the combined GIs over two GPUs,
    /// with summed CC no higher, holds more of some profile.
    pub pair_improvable: u64,
}

/// Configurations reached from the empty GPU when GIs only arrive and each
/// arrival is placed by the default max-CC rule.
pub fn reachable_by_default_policy() -> Vec<Configuration> {
    let mut seen: HashSet<Configuration> = HashSet::new();
    let mut stack = vec![Configuration::empty()];
    while let Some(config) = stack.pop() {
        if !seen.insert(config.clone()) {
            continue;
        }
        let free = config.free_blocks();
        for profile in Profile::ALL {
            if let Some(start) = best_start(profile, free) {
                let next = config.with(GiPlacement { profile, start });
                if !seen.contains(&next) {
                    stack.push(next);
                }
            }
        }
    }
    let mut out: Vec<Configuration> = seen.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Every count produced by the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpaceCounts {
    pub terminal: usize,
    pub unique: usize,
    pub suboptimal: usize,
    pub reachable: usize,
    pub reachable_suboptimal: usize,
    pub single_improvable: usize,
    pub pair_count: u64,
    pub pair_improvable: u64,
}

pub fn analyze(space: &ConfigSpace) -> SpaceCounts {
    let reachable = reachable_by_default_policy();
    let dominance = space.dominance_stats();
    SpaceCounts {
        terminal: space.terminal_count(),
        unique: space.len(),
        suboptimal: space.suboptimal_count(),
        reachable: reachable.len(),
        reachable_suboptimal: space.count_suboptimal(&reachable),
        single_improvable: dominance.single_improvable,
        pair_count: dominance.pair_count,
        pair_improvable: dominance.pair_improvable,
    }
}

/// Reference values the analysis is compared against.
pub const EXPECTED_COUNTS: SpaceCounts = SpaceCounts {
    terminal: 78,
    unique: 723,
    suboptimal: 482,
    reachable: 248,
    reachable_suboptimal: 172,
    single_improvable: 138,
    pair_count: 261_726,
    pair_improvable: 205_575,
};

/// Counts whose reference value the default-placement closure does not
/// reproduce; see [`reachable_by_default_policy`].
pub const KNOWN_DEVIATIONS: [&str; 2] = ["reachable", "reachable_suboptimal"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountCheck {
    pub name: &'static str,
    pub expected: u64,
    pub actual: u64,
    pub matched: bool,
    pub known_deviation: bool,
}

/// One row per count, in table order.
pub fn compare_counts(actual: &SpaceCounts, expected: &SpaceCounts) -> Vec<CountCheck> {
    let rows: [(&'static str, u64, u64); 8] = [
        ("terminal", expected.terminal as u64, actual.terminal as u64),
        ("unique", expected.unique as u64, actual.unique as u64),
        ("suboptimal", expected.suboptimal as u64, actual.suboptimal as u64),
        ("reachable", expected.reachable as u64, actual.reachable as u64),
        (
            "reachable_suboptimal",
            expected.reachable_suboptimal as u64,
            actual.reachable_suboptimal as u64,
        ),
        ("single_improvable", expected.single_improvable as u64, actual.single_improvable as u64),
        ("pair_count", expected.pair_count, actual.pair_count),
        ("pair_improvable", expected.pair_improvable, actual.pair_improvable),
    ];
    rows.into_iter()
        .map(|(name, expected, actual)| CountCheck {
            name,
            expected,
            actual,
            matched: expected == actual,
            known_deviation: KNOWN_DEVIATIONS.contains(&name),
        })
        .collect()
}
