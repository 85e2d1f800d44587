//! Data-center state: hosts, globally indexed GPUs, the GPU pool and the
//! two baskets used by GRMU, VM residency and the migration log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mig::{GpuState, MigError, Profile, A100_HW_TAG};
use crate::workload::{VmId, VmRequest};

/// Most GPUs a single host may carry.
pub const MAX_GPUS_PER_HOST: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostSpec {
    pub id: String,
    /// `None` means unconstrained.
    #[serde(default)]
    pub cpu_capacity: Option<f64>,
    #[serde(default)]
    pub ram_capacity: Option<f64>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    /// Hardware tag of each GPU, in slot order.
    pub gpus: Vec<u32>,
}

fn unit_weight() -> f64 {
    1.0
}

impl HostSpec {
    pub fn a100(id: impl Into<String>, gpu_count: usize) -> Self {
        HostSpec {
            id: id.into(),
            cpu_capacity: None,
            ram_capacity: None,
            weight: 1.0,
            gpus: vec![A100_HW_TAG; gpu_count],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    /// All GPUs form one pool (FF, BF, MCC, MECC).
    Flat,
    /// Pool plus heavy and light baskets (GRMU).
    DualBasket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basket {
    Pool,
    Heavy,
    Light,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residency {
    pub gpu: usize,
    pub profile: Profile,
    pub start: u8,
    pub cpu: f64,
    pub ram: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MigrationKind {
    Intra,
    Inter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MigrationEvent {
    pub time: u64,
    pub vm: VmId,
    pub kind: MigrationKind,
    pub from_gpu: usize,
    pub from_start: u8,
    pub to_gpu: usize,
    pub to_start: u8,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("cluster has no hosts")]
    NoHosts,
    #[error("host `{host}` has {count} GPUs; expected 1..={MAX_GPUS_PER_HOST}")]
    BadGpuCount { host: String, count: usize },
    #[error("dual-basket pooling needs at least 2 GPUs, found {0}")]
    TooFewGpus(usize),
    #[error("unknown GPU index {0}")]
    UnknownGpu(usize),
    #[error("VM {0} is not resident")]
    UnknownVm(VmId),
    #[error("VM {0} is already resident")]
    AlreadyResident(VmId),
    #[error("VM {vm} is not resident on GPU {gpu}")]
    NotOnGpu { vm: VmId, gpu: usize },
    #[error("expected {expected} target starts, got {got}")]
    TargetCount { expected: usize, got: usize },
    #[error("host `{0}` lacks CPU or RAM for the request")]
    HostCapacity(String),
    #[error("cannot move every GI from GPU {source_gpu} to GPU {dest_gpu}")]
    InterMigrationInfeasible { source_gpu: usize, dest_gpu: usize },
    #[error("source and destination GPU are both {0}")]
    SameGpu(usize),
    #[error(transparent)]
    Mig(#[from] MigError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterState {
    hosts: Vec<HostSpec>,
    gpus: Vec<GpuState>,
    gpu_host: Vec<usize>,
    pool: Vec<usize>,
    heavy: Vec<usize>,
    light: Vec<usize>,
    residency: BTreeMap<VmId, Residency>,
    migration_log: Vec<MigrationEvent>,
    mode: PoolMode,
    strict_host_capacity: bool,
    host_usage: Vec<(f64, f64)>,
}

fn insert_sorted(list: &mut Vec<usize>, gpu: usize) {
    if let Err(pos) = list.binary_search(&gpu) {
        list.insert(pos, gpu);
    }
}

impl ClusterState {
    /// Assigns global indices host-major, gpu-minor and pools every GPU. In
    /// dual-basket mode the two lowest-index GPUs seed the heavy and light
    /// baskets.
    pub fn new(hosts: Vec<HostSpec>, mode: PoolMode) -> Result<Self, ClusterError> {
        if hosts.is_empty() {
            return Err(ClusterError::NoHosts);
        }
        let mut gpus = Vec::new();
        let mut gpu_host = Vec::new();
        for (h, host) in hosts.iter().enumerate() {
            if host.gpus.is_empty() || host.gpus.len() > MAX_GPUS_PER_HOST {
                return Err(ClusterError::BadGpuCount {
                    host: host.id.clone(),
                    count: host.gpus.len(),
                });
            }
            for &tag in &host.gpus {
                gpus.push(GpuState::new(gpus.len(), tag));
                gpu_host.push(h);
            }
        }
        let mut pool: Vec<usize> = (0..gpus.len()).collect();
        let (mut heavy, mut light) = (Vec::new(), Vec::new());
        if mode == PoolMode::DualBasket {
            if gpus.len() < 2 {
                return Err(ClusterError::TooFewGpus(gpus.len()));
            }
            heavy.push(pool.remove(0));
            light.push(pool.remove(0));
        }
        let host_usage = vec![(0.0, 0.0); hosts.len()];
        Ok(ClusterState {
            hosts,
            gpus,
            gpu_host,
            pool,
            heavy,
            light,
            residency: BTreeMap::new(),
            migration_log: Vec::new(),
            mode,
            strict_host_capacity: false,
            host_usage,
        })
    }

    /// Enforce host CPU/RAM capacities on placement.
    pub fn with_strict_host_capacity(mut self, strict: bool) -> Self {
        self.strict_host_capacity = strict;
        self
    }

    pub fn mode(&self) -> PoolMode {
        self.mode
    }

    pub fn hosts(&self) -> &[HostSpec] {
        &self.hosts
    }

    pub fn gpus(&self) -> &[GpuState] {
        &self.gpus
    }

    pub fn total_gpus(&self) -> usize {
        self.gpus.len()
    }

    pub fn gpu(&self, index: usize) -> Result<&GpuState, ClusterError> {
        self.gpus.get(index).ok_or(ClusterError::UnknownGpu(index))
    }

    pub fn host_of(&self, gpu: usize) -> usize {
        self.gpu_host[gpu]
    }

    /// Slot of a GPU within its host.
    pub fn slot_of(&self, gpu: usize) -> usize {
        let host = self.gpu_host[gpu];
        gpu - self.gpu_host.iter().position(|&h| h == host).unwrap()
    }

    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    pub fn heavy_basket(&self) -> &[usize] {
        &self.heavy
    }

    pub fn light_basket(&self) -> &[usize] {
        &self.light
    }

    pub fn basket(&self, which: Basket) -> &[usize] {
        match which {
            Basket::Pool => &self.pool,
            Basket::Heavy => &self.heavy,
            Basket::Light => &self.light,
        }
    }

    fn basket_mut(&mut self, which: Basket) -> &mut Vec<usize> {
        match which {
            Basket::Pool => &mut self.pool,
            Basket::Heavy => &mut self.heavy,
            Basket::Light => &mut self.light,
        }
    }

    pub fn membership(&self, gpu: usize) -> Option<Basket> {
        [Basket::Pool, Basket::Heavy, Basket::Light]
            .into_iter()
            .find(|&b| self.basket(b).binary_search(&gpu).is_ok())
    }

    /// Pops the lowest-index pooled GPU.
    pub fn take_from_pool(&mut self) -> Option<usize> {
        (!self.pool.is_empty()).then(|| self.pool.remove(0))
    }

    /// Moves a GPU into `to`, keeping every list ordered by global index.
    pub fn move_gpu(&mut self, gpu: usize, to: Basket) -> Result<(), ClusterError> {
        self.gpu(gpu)?;
        for b in [Basket::Pool, Basket::Heavy, Basket::Light] {
            self.basket_mut(b).retain(|&g| g != gpu);
        }
        insert_sorted(self.basket_mut(to), gpu);
        Ok(())
    }

    pub fn residency(&self) -> &BTreeMap<VmId, Residency> {
        &self.residency
    }

    pub fn resident(&self, vm: VmId) -> Option<&Residency> {
        self.residency.get(&vm)
    }

    pub fn migration_log(&self) -> &[MigrationEvent] {
        &self.migration_log
    }

    pub fn migration_count(&self) -> usize {
        self.migration_log.len()
    }

    fn host_fits(&self, host: usize, cpu: f64, ram: f64) -> bool {
        if !self.strict_host_capacity {
            return true;
        }
        let spec = &self.hosts[host];
        let (used_cpu, used_ram) = self.host_usage[host];
        spec.cpu_capacity.is_none_or(|c| used_cpu + cpu <= c)
            && spec.ram_capacity.is_none_or(|r| used_ram + ram <= r)
    }

    /// Start block the default placement would choose for `vm` on `gpu`, or
    /// `None` if it does not fit (blocks, hardware tag, or host capacity).
    pub fn probe(&self, vm: &VmRequest, gpu: usize) -> Option<u8> {
        let state = self.gpus.get(gpu)?;
        if !self.host_fits(self.gpu_host[gpu], vm.cpu.unwrap_or(0.0), vm.ram.unwrap_or(0.0)) {
            return None;
        }
        state.probe(vm.profile).ok()
    }

    /// Places `vm` on `gpu` with the default max-CC rule.
    pub fn place(&mut self, vm: &VmRequest, gpu: usize) -> Result<u8, ClusterError> {
        if self.residency.contains_key(&vm.id) {
            return Err(ClusterError::AlreadyResident(vm.id));
        }
        self.gpu(gpu)?;
        let host = self.gpu_host[gpu];
        let (cpu, ram) = (vm.cpu.unwrap_or(0.0), vm.ram.unwrap_or(0.0));
        if !self.host_fits(host, cpu, ram) {
            return Err(ClusterError::HostCapacity(self.hosts[host].id.clone()));
        }
        let start = self.gpus[gpu].assign(vm.id, vm.profile)?;
        self.host_usage[host].0 += cpu;
        self.host_usage[host].1 += ram;
        self.residency.insert(
            vm.id,
            Residency {
                gpu,
                profile: vm.profile,
                start,
                cpu,
                ram,
            },
        );
        Ok(start)
    }

    /// Removes a departing VM. The GPU keeps its pool/basket membership.
    pub fn release_vm(&mut self, vm: VmId) -> Result<Residency, ClusterError> {
        let res = self.residency.remove(&vm).ok_or(ClusterError::UnknownVm(vm))?;
        self.gpus[res.gpu].unassign(vm)?;
        let host = self.gpu_host[res.gpu];
        self.host_usage[host].0 -= res.cpu;
        self.host_usage[host].1 -= res.ram;
        Ok(res)
    }

    /// Relocates `vms` on `gpu` to `targets` (one start per VM). All VMs are
    /// lifted first and then re-placed; on any error the GPU is restored.
    pub fn intra_migrate(
        &mut self,
        vms: &[VmId],
        gpu: usize,
        targets: &[u8],
        time: u64,
    ) -> Result<(), ClusterError> {
        if vms.len() != targets.len() {
            return Err(ClusterError::TargetCount {
                expected: vms.len(),
                got: targets.len(),
            });
        }
        self.gpu(gpu)?;
        for &vm in vms {
            match self.residency.get(&vm) {
                Some(r) if r.gpu == gpu => {}
                Some(_) => return Err(ClusterError::NotOnGpu { vm, gpu }),
                None => return Err(ClusterError::UnknownVm(vm)),
            }
        }
        let mut scratch = self.gpus[gpu].clone();
        let mut lifted = Vec::with_capacity(vms.len());
        for &vm in vms {
            lifted.push(scratch.unassign(vm)?);
        }
        for ((&vm, placement), &start) in vms.iter().zip(&lifted).zip(targets) {
            scratch.place_at(vm, placement.profile, start)?;
        }
        self.gpus[gpu] = scratch;
        for ((&vm, placement), &start) in vms.iter().zip(&lifted).zip(targets) {
            self.residency.get_mut(&vm).unwrap().start = start;
            self.migration_log.push(MigrationEvent {
                time,
                vm,
                kind: MigrationKind::Intra,
                from_gpu: gpu,
                from_start: placement.start,
                to_gpu: gpu,
                to_start: start,
            });
        }
        Ok(())
    }

    /// Moves every GI from `source` to `dest` with the default placement
    /// rule, largest profile first. Nothing moves unless all of them fit.
    pub fn inter_migrate(&mut self, source: usize, dest: usize, time: u64) -> Result<(), ClusterError> {
        self.gpu(source)?;
        self.gpu(dest)?;
        if source == dest {
            return Err(ClusterError::SameGpu(source));
        }
        let mut moving: Vec<(VmId, Profile, u8)> = self.gpus[source]
            .placements()
            .map(|(vm, p)| (vm, p.profile, p.start))
            .collect();
        if moving.is_empty() {
            return Ok(());
        }
        moving.sort_by(|a, b| b.1.size().cmp(&a.1.size()).then(a.0.cmp(&b.0)));

        let infeasible = ClusterError::InterMigrationInfeasible {
            source_gpu: source,
            dest_gpu: dest,
        };
        let (src_host, dst_host) = (self.gpu_host[source], self.gpu_host[dest]);
        if src_host != dst_host && self.strict_host_capacity {
            let (cpu, ram) = moving.iter().fold((0.0, 0.0), |(c, r), (vm, _, _)| {
                let res = &self.residency[vm];
                (c + res.cpu, r + res.ram)
            });
            if !self.host_fits(dst_host, cpu, ram) {
                return Err(infeasible);
            }
        }
        let mut scratch = self.gpus[dest].clone();
        let mut new_starts = Vec::with_capacity(moving.len());
        for &(vm, profile, _) in &moving {
            match scratch.assign(vm, profile) {
                Ok(start) => new_starts.push(start),
                Err(_) => return Err(infeasible),
            }
        }
        self.gpus[dest] = scratch;
        for (&(vm, _, old_start), &start) in moving.iter().zip(&new_starts) {
            self.gpus[source].unassign(vm)?;
            let res = self.residency.get_mut(&vm).unwrap();
            res.gpu = dest;
            res.start = start;
            let (cpu, ram) = (res.cpu, res.ram);
            self.host_usage[src_host].0 -= cpu;
            self.host_usage[src_host].1 -= ram;
            self.host_usage[dst_host].0 += cpu;
            self.host_usage[dst_host].1 += ram;
            self.migration_log.push(MigrationEvent {
                time,
                vm,
                kind: MigrationKind::Inter,
                from_gpu: source,
                from_start: old_start,
                to_gpu: dest,
                to_start: start,
            });
        }
        Ok(())
    }

    pub fn host_is_active(&self, host: usize) -> bool {
        self.gpus
            .iter()
            .zip(&self.gpu_host)
            .any(|(g, &h)| h == host && !g.is_empty())
    }

    /// Fraction of GPUs whose host carries at least one GI. An idle GPU on a
    /// busy host still counts as active.
    pub fn active_hardware_rate(&self) -> f64 {
        let active_hosts: Vec<bool> = (0..self.hosts.len()).map(|h| self.host_is_active(h)).collect();
        let active = self.gpu_host.iter().filter(|&&h| active_hosts[h]).count();
        active as f64 / self.gpus.len() as f64
    }

    /// Weighted count of active hosts plus GPUs hosting at least one GI.
    pub fn hardware_objective(&self) -> f64 {
        (0..self.hosts.len())
            .map(|h| {
                let busy_gpus = self
                    .gpus
                    .iter()
                    .zip(&self.gpu_host)
                    .filter(|(g, &gh)| gh == h && !g.is_empty())
                    .count();
                if busy_gpus == 0 {
                    0.0
                } else {
                    self.hosts[h].weight * (1 + busy_gpus) as f64
                }
            })
            .sum()
    }

    /// Checks residency against per-GPU placements and basket bookkeeping.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = 0;
        for gpu in &self.gpus {
            for (vm, p) in gpu.placements() {
                seen += 1;
                let res = self
                    .residency
                    .get(&vm)
                    .ok_or_else(|| format!("GI {vm} on gpu {} has no residency", gpu.global_index))?;
                if res.gpu != gpu.global_index || res.start != p.start || res.profile != p.profile {
                    return Err(format!("residency of {vm} disagrees with gpu {}", gpu.global_index));
                }
                if !p.profile.start_blocks().contains(&p.start) {
                    return Err(format!("GI {vm} at illegal start {}", p.start));
                }
            }
            for b in 0..crate::mig::NUM_BLOCKS {
                if let Some(vm) = gpu.block(b) {
                    let p = gpu.placement(vm).ok_or("block owner without placement")?;
                    if !p.blocks().contains(b) {
                        return Err(format!("block {b} owned by {vm} outside its extent"));
                    }
                }
            }
            let occupied: u32 = gpu.placements().map(|(_, p)| u32::from(p.profile.size())).sum();
            if occupied != gpu.occupied_blocks().len() {
                return Err(format!("overlapping GIs on gpu {}", gpu.global_index));
            }
        }
        if seen != self.residency.len() {
            return Err("residency lists VMs that no GPU holds".into());
        }
        let mut all: Vec<usize> = self.pool.iter().chain(&self.heavy).chain(&self.light).copied().collect();
        for list in [&self.pool, &self.heavy, &self.light] {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err("GPU list not ordered by global index".into());
            }
        }
        all.sort_unstable();
        if all != (0..self.gpus.len()).collect::<Vec<_>>() {
            return Err("GPUs are not partitioned across pool and baskets".into());
        }
        Ok(())
    }
}
