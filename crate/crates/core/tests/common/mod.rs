#![allow(dead_code)]

use std::path::PathBuf;

use migplace::cluster::{ClusterState, HostSpec};
use migplace::ilp::{IlpInstance, PreviousPlacement, Solution};
use migplace::policies::build_policy;
use migplace::sim::{Scenario, ScenarioDoc};
use migplace::{PolicyConfig, PolicyKind, Profile, VmRequest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn load_scenario(rel: &str, seed: u64) -> Scenario {
    let path = repo_path(rel);
    let doc: ScenarioDoc = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc.resolve(path.parent().unwrap(), seed).unwrap().0
}

/// Random instance within the oracle's reach: up to `max_vms` VMs, 1-2 PMs
/// with 1-2 A100s each, and a random prior placement for some VMs.
pub fn random_instance(seed: u64, max_vms: usize, with_previous: bool) -> IlpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pm_count = rng.random_range(1..=2);
    let pms: Vec<HostSpec> = (0..pm_count)
        .map(|j| {
            let mut h = HostSpec::a100(format!("pm{j}"), rng.random_range(1..=2));
            h.weight = f64::from(rng.random_range(1..=3u8));
            h
        })
        .collect();
    let n = rng.random_range(1..=max_vms);
    let mut vms = Vec::with_capacity(n);
    let mut inst_prev = Vec::new();
    for i in 0..n {
        let profile = Profile::ALL[rng.random_range(0..Profile::ALL.len())];
        let mut vm = VmRequest::new(i as u64, profile, 0, 3600);
        if with_previous && rng.random_bool(0.4) {
            let pm = rng.random_range(0..pms.len());
            let gpu = rng.random_range(0..pms[pm].gpus.len());
            let starts = profile.start_blocks();
            let start = starts[rng.random_range(0..starts.len())];
            vm.migration_weight = 1.0;
            inst_prev.push((vm.id, PreviousPlacement { pm, gpu, start }));
        }
        vms.push(vm);
    }
    let mut inst = IlpInstance::new(vms, pms);
    inst.previous.extend(inst_prev);
    inst
}

/// Runs one placement round of a heuristic on an empty cluster built from
/// the instance and reads the result back as an ILP solution.
pub fn heuristic_solution(inst: &IlpInstance, kind: PolicyKind) -> Solution {
    let mut cluster = ClusterState::new(inst.pms.clone(), kind.pool_mode()).unwrap();
    let mut policy = build_policy(&PolicyConfig::new(kind));
    policy.place_batch(&inst.vms, &mut cluster, 0);
    let placements: Vec<Option<(usize, usize, u8)>> = inst
        .vms
        .iter()
        .map(|vm| {
            cluster
                .resident(vm.id)
                .map(|r| (cluster.host_of(r.gpu), cluster.slot_of(r.gpu), r.start))
        })
        .collect();
    Solution::from_placements(inst, &placements)
}
