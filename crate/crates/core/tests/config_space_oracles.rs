//! Independent oracles for the configuration-space analysis.

use std::collections::{BTreeSet, HashMap};

use migplace::config_space::{analyze, enumerate_with, ConfigSpace, Configuration};
use migplace::mig::{best_start, capacity, get_cc, BlockSet, GiPlacement, GpuState};
use migplace::Profile;

/// Every legal (profile, start) with its block mask, from the start tables
/// written out by hand.
fn legal_placements() -> Vec<(Profile, u8, u8)> {
    let table: [(Profile, u8, &[u8]); 6] = [
        (Profile::Mig1g5gb, 1, &[0, 1, 2, 3, 4, 5, 6]),
        (Profile::Mig1g10gb, 2, &[0, 2, 4, 6]),
        (Profile::Mig2g10gb, 2, &[0, 2, 4]),
        (Profile::Mig3g20gb, 4, &[0, 4]),
        (Profile::Mig4g20gb, 4, &[0]),
        (Profile::Mig7g40gb, 8, &[0]),
    ];
    let mut out = Vec::new();
    for (p, size, starts) in table {
        for &s in starts {
            let mask = (((1u16 << size) - 1) << s) as u8;
            out.push((p, s, mask));
        }
    }
    out
}

/// All sets of pairwise-disjoint legal placements, as sorted index lists.
fn disjoint_families() -> Vec<Vec<usize>> {
    let legal = legal_placements();
    let n = legal.len();
    let mut out = Vec::new();
    for subset in 0u32..(1 << n) {
        let mut used = 0u8;
        let mut ok = true;
        for (i, &(_, _, mask)) in legal.iter().enumerate() {
            if subset >> i & 1 == 1 {
                if used & mask != 0 {
                    ok = false;
                    break;
                }
                used |= mask;
            }
        }
        if ok {
            out.push((0..n).filter(|i| subset >> i & 1 == 1).collect());
        }
    }
    out
}

fn cc_oracle(free: u8) -> u32 {
    legal_placements().iter().filter(|&&(_, _, m)| free & m == m).count() as u32
}

#[test]
fn universe_matches_disjoint_subset_enumeration() {
    let legal = legal_placements();
    let families = disjoint_families();
    let space = ConfigSpace::enumerate_all();
    assert_eq!(families.len(), space.len());
    assert_eq!(families.len(), 723);

    let ours: BTreeSet<Configuration> = space.records().iter().map(|r| r.config.clone()).collect();
    let theirs: BTreeSet<Configuration> = families
        .iter()
        .map(|f| {
            Configuration::from_placements(f.iter().map(|&i| GiPlacement {
                profile: legal[i].0,
                start: legal[i].1,
            }))
        })
        .collect();
    assert_eq!(ours, theirs);

    // Terminal: no legal placement fits in the leftover blocks.
    let terminal = families
        .iter()
        .filter(|f| {
            let used = f.iter().fold(0u8, |u, &i| u | legal[i].2);
            legal.iter().all(|&(_, _, m)| used & m != 0)
        })
        .count();
    assert_eq!(terminal, 78);
    assert_eq!(space.terminal_count(), 78);
}

#[test]
fn enumeration_is_order_independent() {
    let (forward, t1) = enumerate_with(|_| {});
    let (reversed, t2) = enumerate_with(|children| children.reverse());
    let a: BTreeSet<_> = forward.into_iter().collect();
    let b: BTreeSet<_> = reversed.into_iter().collect();
    assert_eq!(a, b);
    assert_eq!(t1, t2);
}

#[test]
fn cc_matches_direct_count_for_every_free_set() {
    for bits in 0..=255u8 {
        assert_eq!(get_cc(BlockSet::from_bits(bits)), cc_oracle(bits), "free {bits:08b}");
    }
}

#[test]
fn cc_never_rises_when_blocks_are_taken() {
    for bits in 0..=255u8 {
        for b in 0..8 {
            let fewer = bits & !(1 << b);
            assert!(cc_oracle(fewer) <= cc_oracle(bits));
            assert!(get_cc(BlockSet::from_bits(fewer)) <= get_cc(BlockSet::from_bits(bits)));
        }
    }
}

#[test]
fn capacity_matches_subset_enumeration() {
    let legal = legal_placements();
    for bits in 0..=255u8 {
        for p in Profile::ALL {
            let masks: Vec<u8> = legal
                .iter()
                .filter(|&&(q, _, m)| q == p && bits & m == m)
                .map(|&(_, _, m)| m)
                .collect();
            let mut best = 0;
            for subset in 0u32..(1 << masks.len()) {
                let mut used = 0u8;
                let mut count = 0;
                let mut ok = true;
                for (i, &m) in masks.iter().enumerate() {
                    if subset >> i & 1 == 1 {
                        ok &= used & m == 0;
                        used |= m;
                        count += 1;
                    }
                }
                if ok {
                    best = best.max(count);
                }
            }
            assert_eq!(capacity(BlockSet::from_bits(bits), p), best, "{p} in {bits:08b}");
        }
    }
}

#[test]
fn assign_and_unassign_over_the_whole_universe() {
    let space = ConfigSpace::enumerate_all();
    for record in space.records() {
        let mut gpu = GpuState::a100(0);
        for (id, p) in record.config.placements().iter().enumerate() {
            gpu.place_at(id as u64, p.profile, p.start).unwrap();
        }
        assert_eq!(gpu.free_blocks(), record.free_blocks);
        assert_eq!(gpu.cc(), record.cc);
        for p in Profile::ALL {
            let free = gpu.free_blocks();
            let fits: Vec<u8> = p
                .start_blocks()
                .iter()
                .copied()
                .filter(|&s| BlockSet::extent(s, p.size()).bits() & !free.bits() == 0)
                .collect();
            let mut probe = gpu.clone();
            match probe.assign(999, p) {
                Ok(start) => {
                    // Highest resulting CC; the earliest start wins ties.
                    let after = |s: u8| cc_oracle(free.bits() & !BlockSet::extent(s, p.size()).bits());
                    let best = fits.iter().copied().max_by(|&a, &b| after(a).cmp(&after(b)).then(b.cmp(&a)));
                    assert_eq!(Some(start), best, "{p} on {}", record.config.render());
                    assert_eq!(best_start(p, free), Some(start));
                    probe.unassign(999).unwrap();
                    assert_eq!(probe.free_blocks(), free);
                    assert_eq!(probe.cc(), record.cc);
                }
                Err(_) => assert!(fits.is_empty(), "{p} rejected on {}", record.config.render()),
            }
        }
    }
}

#[test]
fn suboptimal_count_by_direct_grouping() {
    let space = ConfigSpace::enumerate_all();
    let mut best: HashMap<[u8; 6], u32> = HashMap::new();
    for r in space.records() {
        let e = best.entry(r.gi_multiset).or_insert(0);
        *e = (*e).max(r.cc);
    }
    let suboptimal = space.records().iter().filter(|r| r.cc < best[&r.gi_multiset]).count();
    assert_eq!(suboptimal, 482);
    assert_eq!(space.suboptimal_count(), suboptimal);
}

fn improvable(a: (u32, [u32; 6]), b: (u32, [u32; 6])) -> bool {
    b.0 <= a.0 && (0..6).any(|k| b.1[k] > a.1[k])
}

#[test]
fn single_gpu_dominance_by_pairwise_scan() {
    let space = ConfigSpace::enumerate_all();
    let r = space.records();
    let count = r
        .iter()
        .filter(|a| {
            r.iter()
                .any(|b| b.gi_multiset == a.gi_multiset && improvable((a.cc, a.capacity), (b.cc, b.capacity)))
        })
        .count();
    assert_eq!(count, 138);
    assert_eq!(space.dominance_stats().single_improvable, count);
}

#[test]
fn two_gpu_dominance_by_scan_within_groups() {
    let space = ConfigSpace::enumerate_all();
    let r = space.records();
    let mut groups: HashMap<[u8; 6], Vec<(u32, [u32; 6])>> = HashMap::new();
    for i in 0..r.len() {
        for j in i..r.len() {
            let mut key = r[i].gi_multiset;
            let mut cap = r[i].capacity;
            for k in 0..6 {
                key[k] += r[j].gi_multiset[k];
                cap[k] += r[j].capacity[k];
            }
            groups.entry(key).or_default().push((r[i].cc + r[j].cc, cap));
        }
    }
    let pairs: usize = groups.values().map(Vec::len).sum();
    let improvable_pairs: usize = groups
        .values()
        .map(|g| g.iter().filter(|&&a| g.iter().any(|&b| improvable(a, b))).count())
        .sum();
    assert_eq!(pairs, 261_726);
    assert_eq!(improvable_pairs, 205_575);
    let stats = space.dominance_stats();
    assert_eq!(stats.pair_count, pairs as u64);
    assert_eq!(stats.pair_improvable, improvable_pairs as u64);
}

#[test]
fn reachable_configurations_are_default_assign_images() {
    let space = ConfigSpace::enumerate_all();
    let counts = analyze(&space);
    let reachable = migplace::config_space::reachable_by_default_policy();
    assert_eq!(reachable.len(), counts.reachable);
    // Every reachable non-empty configuration has a GI whose removal gives
    // another reachable configuration from which default assign restores it.
    let set: BTreeSet<_> = reachable.iter().cloned().collect();
    for c in &reachable {
        if c.is_empty() {
            continue;
        }
        let restored = c.placements().iter().any(|p| {
            let parent = Configuration::from_placements(c.placements().iter().copied().filter(|q| q != p));
            set.contains(&parent) && best_start(p.profile, parent.free_blocks()) == Some(p.start)
        });
        assert!(restored, "{} has no default-policy parent", c.render());
    }
}
