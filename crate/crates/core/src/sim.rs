//! Discrete-time simulation engine and metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterError, ClusterState, HostSpec, MigrationKind};
use crate::mig::{Profile, A100_HW_TAG};
use crate::policies::{build_policy, PolicyConfig};
use crate::workload::{load_trace, read_vms_csv, synthesize, SynthSpec, TraceMapping, TraceReport, VmId, VmRequest, WorkloadError};

pub const DEFAULT_TICK_SECONDS: u64 = 3600;
pub const METRICS_HEADER: &str = "time,acceptance_rate,active_hw_rate,migrations";

fn default_tick() -> u64 {
    DEFAULT_TICK_SECONDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub hosts: Vec<HostSpec>,
    pub vms: Vec<VmRequest>,
    pub policy: PolicyConfig,
    #[serde(default = "default_tick")]
    pub tick_seconds: u64,
    #[serde(default = "default_tick")]
    pub sample_period_seconds: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strict_host_capacity: bool,
}

impl Scenario {
    pub fn new(hosts: Vec<HostSpec>, vms: Vec<VmRequest>, policy: PolicyConfig) -> Self {
        Scenario {
            hosts,
            vms,
            policy,
            tick_seconds: DEFAULT_TICK_SECONDS,
            sample_period_seconds: DEFAULT_TICK_SECONDS,
            seed: 0,
            strict_host_capacity: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("tick length must be positive")]
    ZeroTick,
    #[error("sampling period {period}s must be a positive multiple of the tick length {tick}s")]
    BadSamplePeriod { period: u64, tick: u64 },
    #[error("duplicate VM id {0}")]
    DuplicateVm(VmId),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: u64,
    pub acceptance_rate: f64,
    pub active_hw_rate: f64,
    pub migrations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProfileCounts {
    pub accepted: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub policy: String,
    pub seed: u64,
    pub total_vms: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub acceptance_rate: f64,
    /// Set when no VM arrived and the rate is reported as 1.0.
    pub acceptance_undefined: bool,
    pub average_active_hw_rate: f64,
    pub auc: f64,
    pub migrations: usize,
    pub intra_migrations: usize,
    pub inter_migrations: usize,
    pub migrated_vms: usize,
    pub ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub sample_period_seconds: u64,
    pub samples: Vec<Sample>,
    pub per_profile: BTreeMap<Profile, ProfileCounts>,
    pub summary: Summary,
}

/// Rectangle-rule area under the active-hardware curve, in rate-hours.
pub fn auc(samples: &[Sample], period_seconds: u64) -> f64 {
    let width = period_seconds as f64 / 3600.0;
    samples.iter().map(|s| s.active_hw_rate * width).sum()
}

/// Called after every tick with the cluster state and the tick time.
pub trait TickObserver {
    fn after_tick(&mut self, cluster: &ClusterState, now: u64);
}

impl<F: FnMut(&ClusterState, u64)> TickObserver for F {
    fn after_tick(&mut self, cluster: &ClusterState, now: u64) {
        self(cluster, now)
    }
}

pub fn run(scenario: &Scenario) -> Result<MetricsSeries, SimError> {
    run_observed(scenario, &mut |_: &ClusterState, _: u64| {})
}

/// Runs until every VM has arrived and departed. Each tick releases due
/// VMs, places the arrivals in `(now - tick, now]`, lets the policy run its
/// end-of-tick work and samples on period boundaries.
pub fn run_observed(scenario: &Scenario, observer: &mut dyn TickObserver) -> Result<MetricsSeries, SimError> {
    let tick = scenario.tick_seconds;
    if tick == 0 {
        return Err(SimError::ZeroTick);
    }
    let period = scenario.sample_period_seconds;
    if period == 0 || period % tick != 0 {
        return Err(SimError::BadSamplePeriod { period, tick });
    }
    let mut ids = BTreeSet::new();
    for vm in &scenario.vms {
        if !ids.insert(vm.id) {
            return Err(SimError::DuplicateVm(vm.id));
        }
    }
    let mut vms: Vec<&VmRequest> = scenario.vms.iter().collect();
    vms.sort_by_key(|v| v.arrival);

    let mut cluster = ClusterState::new(scenario.hosts.clone(), scenario.policy.kind.pool_mode())?
        .with_strict_host_capacity(scenario.strict_host_capacity);
    let mut policy = build_policy(&scenario.policy);

    let mut departures: BTreeMap<u64, Vec<VmId>> = BTreeMap::new();
    let mut per_profile: BTreeMap<Profile, ProfileCounts> = Profile::ALL.iter().map(|&p| (p, ProfileCounts::default())).collect();
    let mut samples = Vec::new();
    let (mut arrived, mut accepted) = (0u64, 0u64);
    let mut next = 0usize;
    let mut k = 0u64;
    loop {
        let now = k * tick;
        while let Some(entry) = departures.first_entry() {
            if *entry.key() > k {
                break;
            }
            for vm in entry.remove() {
                cluster.release_vm(vm)?;
            }
        }

        let first = next;
        while next < vms.len() && vms[next].arrival <= now {
            next += 1;
        }
        let batch: Vec<VmRequest> = vms[first..next].iter().map(|&v| v.clone()).collect();
        if !batch.is_empty() {
            let decisions = policy.place_batch(&batch, &mut cluster, now);
            for (vm, d) in batch.iter().zip(&decisions) {
                let counts = per_profile.entry(vm.profile).or_default();
                counts.total += 1;
                arrived += 1;
                if d.is_accepted() {
                    counts.accepted += 1;
                    accepted += 1;
                    let stay = vm.duration.div_ceil(tick).max(1);
                    departures.entry(k + stay).or_default().push(vm.id);
                }
            }
        }
        policy.end_tick(&mut cluster, now);
        observer.after_tick(&cluster, now);

        let on_boundary = now % period == 0;
        if on_boundary {
            samples.push(Sample {
                time: now,
                acceptance_rate: if arrived == 0 { 1.0 } else { accepted as f64 / arrived as f64 },
                active_hw_rate: cluster.active_hardware_rate(),
                migrations: cluster.migration_count(),
            });
        }
        let done = next == vms.len() && departures.is_empty();
        if done && on_boundary {
            break;
        }
        k += 1;
    }

    let log = cluster.migration_log();
    let intra = log.iter().filter(|e| e.kind == MigrationKind::Intra).count();
    let migrated_vms = log.iter().map(|e| e.vm).collect::<BTreeSet<_>>().len();
    let average = samples.iter().map(|s| s.active_hw_rate).sum::<f64>() / samples.len() as f64;
    let summary = Summary {
        policy: scenario.policy.kind.to_string(),
        seed: scenario.seed,
        total_vms: arrived,
        accepted,
        rejected: arrived - accepted,
        acceptance_rate: if arrived == 0 { 1.0 } else { accepted as f64 / arrived as f64 },
        acceptance_undefined: arrived == 0,
        average_active_hw_rate: average,
        auc: auc(&samples, period),
        migrations: log.len(),
        intra_migrations: intra,
        inter_migrations: log.len() - intra,
        migrated_vms,
        ticks: k + 1,
    };
    Ok(MetricsSeries {
        sample_period_seconds: period,
        samples,
        per_profile,
        summary,
    })
}

/// Metrics CSV: a `# seed=` comment line, the fixed header, one row per sample.
pub fn write_metrics_csv<W: Write>(mut out: W, series: &MetricsSeries) -> std::io::Result<()> {
    writeln!(out, "# seed={}", series.summary.seed)?;
    writeln!(out, "{METRICS_HEADER}")?;
    for s in &series.samples {
        writeln!(
            out,
            "{},{:.6},{:.6},{}",
            s.time, s.acceptance_rate, s.active_hw_rate, s.migrations
        )?;
    }
    Ok(())
}

/// Per-profile acceptance table as CSV.
pub fn write_profile_csv<W: Write>(mut out: W, series: &MetricsSeries) -> std::io::Result<()> {
    writeln!(out, "# seed={}", series.summary.seed)?;
    writeln!(out, "profile,accepted,total,acceptance_rate")?;
    for (p, c) in &series.per_profile {
        let rate = if c.total == 0 { 1.0 } else { c.accepted as f64 / c.total as f64 };
        writeln!(out, "{p},{},{},{rate:.6}", c.accepted, c.total)?;
    }
    Ok(())
}

fn one() -> usize {
    1
}

fn unit_weight() -> f64 {
    1.0
}

/// `count` identical hosts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostGroup {
    #[serde(default = "one")]
    pub count: usize,
    pub gpus_per_host: usize,
    #[serde(default)]
    pub cpu_capacity: Option<f64>,
    #[serde(default)]
    pub ram_capacity: Option<f64>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    #[serde(default)]
    pub id_prefix: Option<String>,
}

pub fn expand_host_groups(groups: &[HostGroup]) -> Vec<HostSpec> {
    let mut hosts = Vec::new();
    for (g, group) in groups.iter().enumerate() {
        let prefix = group.id_prefix.clone().unwrap_or_else(|| format!("g{g}"));
        for n in 0..group.count {
            hosts.push(HostSpec {
                id: format!("{prefix}-{n}"),
                cpu_capacity: group.cpu_capacity,
                ram_capacity: group.ram_capacity,
                weight: group.weight,
                gpus: vec![A100_HW_TAG; group.gpus_per_host],
            });
        }
    }
    hosts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkloadSource {
    /// VM CSV as written by `maptrace`.
    File { path: PathBuf },
    Synthetic {
        #[serde(flatten)]
        spec: SynthSpec,
    },
    /// Node and pod CSVs; the trace's nodes become the hosts.
    Trace {
        nodes: PathBuf,
        pods: PathBuf,
        #[serde(default)]
        mapping: TraceMapping,
    },
}

/// Scenario as written on disk. Relative paths resolve against the
/// document's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    #[serde(default)]
    pub hosts: Vec<HostGroup>,
    pub workload: WorkloadSource,
    pub policy: PolicyConfig,
    #[serde(default = "default_tick")]
    pub tick_seconds: u64,
    #[serde(default = "default_tick")]
    pub sample_period_seconds: u64,
    #[serde(default)]
    pub strict_host_capacity: bool,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("scenario has no hosts")]
    NoHosts,
}

impl ScenarioDoc {
    pub fn resolve(&self, base: &Path, seed: u64) -> Result<(Scenario, Option<TraceReport>), ScenarioError> {
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let mut hosts = expand_host_groups(&self.hosts);
        let mut report = None;
        let vms = match &self.workload {
            WorkloadSource::File { path } => read_vms_csv(&at(path))?,
            WorkloadSource::Synthetic { spec } => synthesize(spec, seed)?,
            WorkloadSource::Trace { nodes, pods, mapping } => {
                let loaded = load_trace(&at(nodes), &at(pods), mapping)?;
                if hosts.is_empty() {
                    hosts = loaded.hosts;
                }
                report = Some(loaded.report);
                loaded.vms
            }
        };
        if hosts.is_empty() {
            return Err(ScenarioError::NoHosts);
        }
        let scenario = Scenario {
            hosts,
            vms,
            policy: self.policy.clone(),
            tick_seconds: self.tick_seconds,
            sample_period_seconds: self.sample_period_seconds,
            seed,
            strict_host_capacity: self.strict_host_capacity,
        };
        Ok((scenario, report))
    }
}
