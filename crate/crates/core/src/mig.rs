//! Block model of a single MIG-enabled A100.
//!
//! The GPU exposes 8 memory blocks. A GPU instance (GI) of a given profile
//! occupies `size_blocks` contiguous blocks and may only begin at one of the
//! profile's legal start blocks. Everything placement-related in the crate is
//! built on the primitives here: the configuration capability (CC) of a free
//! block set, the driver's max-CC start selection, per-profile capacity and
//! the fragmentation score used to pick defragmentation victims.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of memory blocks on an A100.
pub const NUM_BLOCKS: u8 = 8;

/// Hardware characteristic used for every A100 in this crate.
pub const A100_HW_TAG: u32 = 100;

/// Opaque GI identifier supplied by callers (the cluster uses VM ids).
pub type GiId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Profile {
    #[serde(rename = "1g.5gb")]
    Mig1g5gb,
    #[serde(rename = "1g.10gb")]
    Mig1g10gb,
    #[serde(rename = "2g.10gb")]
    Mig2g10gb,
    #[serde(rename = "3g.20gb")]
    Mig3g20gb,
    #[serde(rename = "4g.20gb")]
    Mig4g20gb,
    #[serde(rename = "7g.40gb")]
    Mig7g40gb,
}

/// Static description of one profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileSpec {
    pub profile: Profile,
    pub name: &'static str,
    pub compute_engines: u8,
    pub size_blocks: u8,
    /// Legal start blocks, ascending.
    pub start_blocks: &'static [u8],
    /// Last permissible start offset.
    pub max_start: u8,
    pub hw_tag: u32,
}

const PROFILE_TABLE: [ProfileSpec; 6] = [
    ProfileSpec {
        profile: Profile::Mig1g5gb,
        name: "1g.5gb",
        compute_engines: 1,
        size_blocks: 1,
        start_blocks: &[0, 1, 2, 3, 4, 5, 6],
        max_start: 6,
        hw_tag: A100_HW_TAG,
    },
    ProfileSpec {
        profile: Profile::Mig1g10gb,
        name: "1g.10gb",
        compute_engines: 1,
        size_blocks: 2,
        start_blocks: &[0, 2, 4, 6],
        max_start: 6,
        hw_tag: A100_HW_TAG,
    },
    ProfileSpec {
        profile: Profile::Mig2g10gb,
        name: "2g.10gb",
        compute_engines: 2,
        size_blocks: 2,
        start_blocks: &[0, 2, 4],
        max_start: 4,
        hw_tag: A100_HW_TAG,
    },
    ProfileSpec {
        profile: Profile::Mig3g20gb,
        name: "3g.20gb",
        compute_engines: 3,
        size_blocks: 4,
        start_blocks: &[0, 4],
        max_start: 4,
        hw_tag: A100_HW_TAG,
    },
    ProfileSpec {
        profile: Profile::Mig4g20gb,
        name: "4g.20gb",
        compute_engines: 4,
        size_blocks: 4,
        start_blocks: &[0],
        max_start: 0,
        hw_tag: A100_HW_TAG,
    },
    ProfileSpec {
        profile: Profile::Mig7g40gb,
        name: "7g.40gb",
        compute_engines: 7,
        size_blocks: 8,
        start_blocks: &[0],
        max_start: 0,
        hw_tag: A100_HW_TAG,
    },
];

impl Profile {
    /// All profiles in ascending size order.
    pub const ALL: [Profile; 6] = [
        Profile::Mig1g5gb,
        Profile::Mig1g10gb,
        Profile::Mig2g10gb,
        Profile::Mig3g20gb,
        Profile::Mig4g20gb,
        Profile::Mig7g40gb,
    ];

    /// Position in [`Profile::ALL`]; handy for per-profile arrays.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn spec(self) -> &'static ProfileSpec {
        &PROFILE_TABLE[self.index()]
    }

    pub fn name(self) -> &'static str {
        self.spec().name
    }

    pub fn size(self) -> u8 {
        self.spec().size_blocks
    }

    pub fn start_blocks(self) -> &'static [u8] {
        self.spec().start_blocks
    }

    /// Compute engines times memory blocks.
    pub fn combined_units(self) -> u32 {
        let spec = self.spec();
        u32::from(spec.compute_engines) * u32::from(spec.size_blocks)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown MIG profile `{0}`")]
pub struct UnknownProfile(pub String);

impl FromStr for Profile {
    type Err = UnknownProfile;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let trimmed = trimmed.strip_prefix("MIG ").unwrap_or(trimmed);
        Profile::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(trimmed))
            .ok_or_else(|| UnknownProfile(s.to_string()))
    }
}

/// A set of block indices in `0..8`, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct BlockSet(u8);

impl BlockSet {
    pub const EMPTY: BlockSet = BlockSet(0);
    pub const FULL: BlockSet = BlockSet(0xFF);

    pub fn from_bits(bits: u8) -> Self {
        BlockSet(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Panics if a block index is outside `0..8`.
    pub fn from_blocks<I: IntoIterator<Item = u8>>(blocks: I) -> Self {
        let mut bits = 0u8;
        for b in blocks {
            assert!(b < NUM_BLOCKS, "block index {b} out of range");
            bits |= 1 << b;
        }
        BlockSet(bits)
    }

    /// The contiguous blocks `start..start + size`, clipped to the GPU.
    pub fn extent(start: u8, size: u8) -> Self {
        let end = (start + size).min(NUM_BLOCKS);
        BlockSet::from_blocks(start..end)
    }

    pub fn contains(self, block: u8) -> bool {
        block < NUM_BLOCKS && self.0 & (1 << block) != 0
    }

    pub fn is_superset(self, other: BlockSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_disjoint(self, other: BlockSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: BlockSet) -> Self {
        BlockSet(self.0 | other.0)
    }

    pub fn difference(self, other: BlockSet) -> Self {
        BlockSet(self.0 & !other.0)
    }

    pub fn complement(self) -> Self {
        BlockSet(!self.0)
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        (0..NUM_BLOCKS).filter(move |&b| self.contains(b))
    }
}

/// Blocks covered by `profile` starting at `start`, or `None` if the extent
/// would run past the last block.
pub fn profile_extent(profile: Profile, start: u8) -> Option<BlockSet> {
    let size = profile.size();
    (start + size <= NUM_BLOCKS).then(|| BlockSet::extent(start, size))
}

/// Whether `profile` may legally begin at `start` and its extent is free.
pub fn fits_at(profile: Profile, start: u8, free: BlockSet) -> bool {
    profile.start_blocks().contains(&start)
        && profile_extent(profile, start).is_some_and(|e| free.is_superset(e))
}

/// Legal starts for `profile` whose extent lies inside `free`, ascending.
pub fn available_starts(profile: Profile, free: BlockSet) -> impl Iterator<Item = u8> {
    profile
        .start_blocks()
        .iter()
        .copied()
        .filter(move |&s| fits_at(profile, s, free))
}

/// Configuration capability: number of (profile, start) pairs that fit in `free`.
pub fn get_cc(free: BlockSet) -> u32 {
    Profile::ALL
        .into_iter()
        .map(|p| available_starts(p, free).count() as u32)
        .sum()
}

/// Start chosen by the default placement for `profile` on a GPU whose free
/// blocks are `free`: the fitting start whose remaining free set has the
/// highest CC. Starts are tried in ascending order and only a strictly
/// greater CC replaces the incumbent.
pub fn best_start(profile: Profile, free: BlockSet) -> Option<u8> {
    let mut best: Option<(u8, u32)> = None;
    for start in available_starts(profile, free) {
        let extent = BlockSet::extent(start, profile.size());
        let cc = get_cc(free.difference(extent));
        if best.is_none_or(|(_, max_cc)| cc > max_cc) {
            best = Some((start, cc));
        }
    }
    best.map(|(start, _)| start)
}

/// Maximum number of simultaneous `profile` instances that fit in `free`.
pub fn capacity(free: BlockSet, profile: Profile) -> u32 {
    fn search(free: BlockSet, profile: Profile, min_start: u8) -> u32 {
        let mut best = 0;
        for start in available_starts(profile, free).filter(|&s| s >= min_start) {
            let rest = free.difference(BlockSet::extent(start, profile.size()));
            best = best.max(1 + search(rest, profile, start + profile.size()));
        }
        best
    }
    search(free, profile, 0)
}

/// Per-profile capacity vector in [`Profile::ALL`] order.
pub fn capacity_vector(free: BlockSet) -> [u32; 6] {
    Profile::ALL.map(|p| capacity(free, p))
}

/// Profiles in the order used by the fragmentation score: largest first,
/// ties broken by descending table position.
pub const FRAGMENTATION_ORDER: [Profile; 6] = [
    Profile::Mig7g40gb,
    Profile::Mig4g20gb,
    Profile::Mig3g20gb,
    Profile::Mig2g10gb,
    Profile::Mig1g10gb,
    Profile::Mig1g5gb,
];

/// Unusable-space score of a free block set.
///
/// Walks the profiles largest first. For every profile no larger than the
/// blocks still free, greedily carves out each fitting start (ascending),
/// then adds `remaining free / profile size` to the score.
pub fn fragmentation(free: BlockSet) -> f64 {
    let mut scratch = free;
    let mut score = 0.0;
    for profile in FRAGMENTATION_ORDER {
        let size = profile.size();
        if u32::from(size) > scratch.len() {
            continue;
        }
        for &start in profile.start_blocks() {
            if fits_at(profile, start, scratch) {
                scratch = scratch.difference(BlockSet::extent(start, size));
            }
        }
        score += f64::from(scratch.len()) / f64::from(size);
    }
    score
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GiPlacement {
    pub profile: Profile,
    pub start: u8,
}

impl GiPlacement {
    pub fn blocks(&self) -> BlockSet {
        BlockSet::extent(self.start, self.profile.size())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MigError {
    #[error("no free start block for {0}")]
    NoFit(Profile),
    #[error("{profile} (hw tag {profile_tag}) is incompatible with GPU hw tag {gpu_tag}")]
    Incompatible {
        profile: Profile,
        profile_tag: u32,
        gpu_tag: u32,
    },
    #[error("{profile} may not start at block {start}")]
    IllegalStart { profile: Profile, start: u8 },
    #[error("{profile} at block {start} overlaps an occupied block")]
    Overlap { profile: Profile, start: u8 },
    #[error("GI {0} is already placed on this GPU")]
    DuplicateGi(GiId),
    #[error("GI {0} is not placed on this GPU")]
    UnknownGi(GiId),
}

/// Occupancy of one GPU.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpuState {
    pub global_index: usize,
    pub hw_tag: u32,
    blocks: [Option<GiId>; NUM_BLOCKS as usize],
    placements: BTreeMap<GiId, GiPlacement>,
}

impl GpuState {
    pub fn new(global_index: usize, hw_tag: u32) -> Self {
        GpuState {
            global_index,
            hw_tag,
            blocks: [None; NUM_BLOCKS as usize],
            placements: BTreeMap::new(),
        }
    }

    pub fn a100(global_index: usize) -> Self {
        GpuState::new(global_index, A100_HW_TAG)
    }

    pub fn free_blocks(&self) -> BlockSet {
        BlockSet::from_blocks((0..NUM_BLOCKS).filter(|&b| self.blocks[b as usize].is_none()))
    }

    pub fn occupied_blocks(&self) -> BlockSet {
        self.free_blocks().complement()
    }

    pub fn block(&self, index: u8) -> Option<GiId> {
        self.blocks[index as usize]
    }

    pub fn cc(&self) -> u32 {
        get_cc(self.free_blocks())
    }

    pub fn fragmentation(&self) -> f64 {
        fragmentation(self.free_blocks())
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn gi_count(&self) -> usize {
        self.placements.len()
    }

    pub fn placement(&self, gi: GiId) -> Option<GiPlacement> {
        self.placements.get(&gi).copied()
    }

    /// Placements keyed by GI id, ascending.
    pub fn placements(&self) -> impl Iterator<Item = (GiId, GiPlacement)> + '_ {
        self.placements.iter().map(|(&gi, &p)| (gi, p))
    }

    pub fn is_compatible(&self, profile: Profile) -> bool {
        profile.spec().hw_tag == self.hw_tag
    }

    fn check_compatible(&self, profile: Profile) -> Result<(), MigError> {
        if self.is_compatible(profile) {
            Ok(())
        } else {
            Err(MigError::Incompatible {
                profile,
                profile_tag: profile.spec().hw_tag,
                gpu_tag: self.hw_tag,
            })
        }
    }

    /// Start the default placement would pick, without mutating.
    pub fn probe(&self, profile: Profile) -> Result<u8, MigError> {
        self.check_compatible(profile)?;
        best_start(profile, self.free_blocks()).ok_or(MigError::NoFit(profile))
    }

    /// Places `gi` with the default max-CC rule and returns its start block.
    /// On failure the GPU is left untouched.
    pub fn assign(&mut self, gi: GiId, profile: Profile) -> Result<u8, MigError> {
        if self.placements.contains_key(&gi) {
            return Err(MigError::DuplicateGi(gi));
        }
        let start = self.probe(profile)?;
        self.occupy(gi, GiPlacement { profile, start });
        Ok(start)
    }

    /// Places `gi` at an explicit start block.
    pub fn place_at(&mut self, gi: GiId, profile: Profile, start: u8) -> Result<(), MigError> {
        if self.placements.contains_key(&gi) {
            return Err(MigError::DuplicateGi(gi));
        }
        self.check_compatible(profile)?;
        if !profile.start_blocks().contains(&start) {
            return Err(MigError::IllegalStart { profile, start });
        }
        if !fits_at(profile, start, self.free_blocks()) {
            return Err(MigError::Overlap { profile, start });
        }
        self.occupy(gi, GiPlacement { profile, start });
        Ok(())
    }

    fn occupy(&mut self, gi: GiId, placement: GiPlacement) {
        for b in placement.blocks().iter() {
            debug_assert!(self.blocks[b as usize].is_none());
            self.blocks[b as usize] = Some(gi);
        }
        self.placements.insert(gi, placement);
    }

    pub fn unassign(&mut self, gi: GiId) -> Result<GiPlacement, MigError> {
        let placement = self.placements.remove(&gi).ok_or(MigError::UnknownGi(gi))?;
        for b in placement.blocks().iter() {
            self.blocks[b as usize] = None;
        }
        Ok(placement)
    }

    /// True when exactly one GI is resident and it fills exactly one half.
    pub fn is_single_half(&self) -> bool {
        let mut iter = self.placements.values();
        match (iter.next(), iter.next()) {
            (Some(p), None) => {
                let lower = BlockSet::extent(0, 4);
                let upper = BlockSet::extent(4, 4);
                let blocks = p.blocks();
                blocks == lower || blocks == upper
            }
            _ => false,
        }
    }

    /// Debug rendering: one character per block, `.` for free blocks and a
    /// letter per GI in order of start block.
    pub fn render(&self) -> String {
        render_placements(self.placements.values().copied())
    }
}

/// Renders a set of placements as an 8-character block string.
pub fn render_placements<I: IntoIterator<Item = GiPlacement>>(placements: I) -> String {
    let mut sorted: Vec<GiPlacement> = placements.into_iter().collect();
    sorted.sort_by_key(|p| p.start);
    let mut out = ['.'; NUM_BLOCKS as usize];
    for (i, p) in sorted.iter().enumerate() {
        let letter = (b'A' + (i % 26) as u8) as char;
        for b in p.blocks().iter() {
            out[b as usize] = letter;
        }
    }
    out.iter().collect()
}

impl fmt::Display for GpuState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gpu{}[{}]", self.global_index, self.render())
    }
}
