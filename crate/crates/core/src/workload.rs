//! Workload ingestion and synthesis.
//!
//! Pod records from a GPU cluster trace are filtered for arrival outliers,
//! reduced to a single GPU demand `u = gpu_count * gpu_fraction` and mapped
//! onto the MIG profile whose normalized compute-times-memory value is
//! closest to the normalized demand.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::HostSpec;
use crate::mig::Profile;

pub type VmId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmRequest {
    pub id: VmId,
    pub profile: Profile,
    /// Seconds since the start of the workload.
    pub arrival: u64,
    /// Seconds; always positive.
    pub duration: u64,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default)]
    pub migration_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ram: Option<f64>,
}

fn default_weight() -> f64 {
    1.0
}

impl VmRequest {
    pub fn new(id: VmId, profile: Profile, arrival: u64, duration: u64) -> Self {
        VmRequest {
            id,
            profile,
            arrival,
            duration,
            weight: 1.0,
            migration_weight: 0.0,
            cpu: None,
            ram: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodRecord {
    pub pod_id: String,
    pub arrival: f64,
    pub duration: f64,
    pub gpu_count: f64,
    pub gpu_fraction: f64,
    pub cpu: Option<f64>,
    pub ram: Option<f64>,
}

impl PodRecord {
    /// Total GPU demand.
    pub fn demand(&self) -> f64 {
        self.gpu_count * self.gpu_fraction
    }
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("CSV error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{0}: no usable rows")]
    NoUsableRows(String),
    #[error("invalid profile mix: {0}")]
    InvalidMix(String),
    #[error("invalid synthesis parameter: {0}")]
    InvalidParameter(String),
}

/// Percentile by linear interpolation between closest ranks of sorted data
/// (`h = (n - 1) * q`).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bounds outside which a value counts as an outlier.
pub fn iqr_bounds(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = percentile(&sorted, 0.25);
    let q3 = percentile(&sorted, 0.75);
    let iqr = q3 - q1;
    (q1 - 1.5 * iqr, q3 + 1.5 * iqr)
}

/// Keeps the values inside the 1.5 IQR fences, in their original order.
pub fn iqr_filter(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = iqr_bounds(values);
    values
        .iter()
        .copied()
        .filter(|v| *v >= lo && *v <= hi)
        .collect()
}

const TIE_EPSILON: f64 = 1e-12;

/// Profile closest to a normalized demand `u_hat`; ties go to the smaller
/// profile.
pub fn profile_for_normalized_demand(u_hat: f64) -> Profile {
    let max_units = f64::from(Profile::Mig7g40gb.combined_units());
    let mut best = Profile::ALL[0];
    let mut best_dist = f64::INFINITY;
    for p in Profile::ALL {
        let dist = (f64::from(p.combined_units()) / max_units - u_hat).abs();
        if dist < best_dist - TIE_EPSILON {
            best = p;
            best_dist = dist;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Exclusion {
    /// Demand above one full GPU.
    MultiGpu,
    /// Zero or negative demand.
    NoGpu,
}

/// Maps one pod onto a profile, or reports why it is excluded.
pub fn map_pod_to_profile(pod: &PodRecord, max_demand: f64) -> Result<Profile, Exclusion> {
    let u = pod.demand();
    if !(u > 0.0) {
        return Err(Exclusion::NoGpu);
    }
    if u > 1.0 {
        return Err(Exclusion::MultiGpu);
    }
    Ok(profile_for_normalized_demand(u / max_demand))
}

/// Column names for the node and pod tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceMapping {
    pub node_id: String,
    pub node_gpu_count: String,
    pub pod_id: String,
    pub arrival: String,
    pub duration: String,
    pub gpu_count: String,
    pub gpu_fraction: String,
    pub cpu: String,
    pub ram: String,
    /// Divisor applied to the fraction column (1000 for milli-GPU columns).
    pub fraction_scale: f64,
    /// Shift arrivals so the earliest retained pod arrives at time 0.
    pub rebase_arrivals: bool,
}

impl Default for TraceMapping {
    fn default() -> Self {
        TraceMapping {
            node_id: "node_id".into(),
            node_gpu_count: "gpu_count".into(),
            pod_id: "pod_id".into(),
            arrival: "arrival_s".into(),
            duration: "duration_s".into(),
            gpu_count: "gpu_count".into(),
            gpu_fraction: "gpu_fraction".into(),
            cpu: "cpu_milli".into(),
            ram: "ram_mb".into(),
            fraction_scale: 1.0,
            rebase_arrivals: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedRow {
    pub file: String,
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TraceReport {
    pub skipped: Vec<SkippedRow>,
    pub outliers: usize,
    pub multi_gpu_excluded: usize,
    pub no_gpu_excluded: usize,
    pub max_demand: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrace {
    pub hosts: Vec<HostSpec>,
    pub vms: Vec<VmRequest>,
    pub report: TraceReport,
}

fn open_csv<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn column(headers: &csv::StringRecord, name: &str, path: &str) -> Result<usize, WorkloadError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| WorkloadError::MissingColumn {
            path: path.to_string(),
            column: name.to_string(),
        })
}

fn parse_field(record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, String> {
    let raw = record.get(idx).ok_or_else(|| format!("missing `{name}`"))?;
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("bad `{name}` value `{raw}`"))
}

fn parse_optional(record: &csv::StringRecord, idx: Option<usize>, name: &str) -> Result<Option<f64>, String> {
    match idx.and_then(|i| record.get(i)) {
        None | Some("") => Ok(None),
        Some(_) => parse_field(record, idx.unwrap(), name).map(Some),
    }
}

/// Reads the node table.
pub fn parse_nodes<R: Read>(
    reader: R,
    path: &str,
    mapping: &TraceMapping,
    skipped: &mut Vec<SkippedRow>,
) -> Result<Vec<HostSpec>, WorkloadError> {
    let mut rdr = open_csv(reader);
    let headers = rdr
        .headers()
        .map_err(|source| WorkloadError::Csv { path: path.into(), source })?
        .clone();
    let id_col = column(&headers, &mapping.node_id, path)?;
    let gpu_col = column(&headers, &mapping.node_gpu_count, path)?;
    let mut hosts = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row as u64 + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                skipped.push(SkippedRow { file: path.into(), line, reason: e.to_string() });
                continue;
            }
        };
        let parsed = (|| {
            let id = record.get(id_col).filter(|s| !s.is_empty()).ok_or("missing node id")?;
            let gpus = parse_field(&record, gpu_col, &mapping.node_gpu_count)?;
            if gpus.fract() != 0.0 || !(0.0..=8.0).contains(&gpus) {
                return Err(format!("gpu count {gpus} outside 0..=8"));
            }
            Ok::<_, String>((id.to_string(), gpus as usize))
        })();
        match parsed {
            // CPU-only nodes are not part of the GPU data center.
            Ok((_, 0)) => {}
            Ok((id, gpus)) => hosts.push(HostSpec::a100(id, gpus)),
            Err(reason) => skipped.push(SkippedRow { file: path.into(), line, reason }),
        }
    }
    Ok(hosts)
}

/// Reads the pod table.
pub fn parse_pods<R: Read>(
    reader: R,
    path: &str,
    mapping: &TraceMapping,
    skipped: &mut Vec<SkippedRow>,
) -> Result<Vec<PodRecord>, WorkloadError> {
    let mut rdr = open_csv(reader);
    let headers = rdr
        .headers()
        .map_err(|source| WorkloadError::Csv { path: path.into(), source })?
        .clone();
    let id_col = column(&headers, &mapping.pod_id, path)?;
    let arrival_col = column(&headers, &mapping.arrival, path)?;
    let duration_col = column(&headers, &mapping.duration, path)?;
    let count_col = column(&headers, &mapping.gpu_count, path)?;
    let fraction_col = column(&headers, &mapping.gpu_fraction, path)?;
    let cpu_col = headers.iter().position(|h| h == mapping.cpu);
    let ram_col = headers.iter().position(|h| h == mapping.ram);

    let mut pods = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row as u64 + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                skipped.push(SkippedRow { file: path.into(), line, reason: e.to_string() });
                continue;
            }
        };
        let parsed = (|| {
            let pod_id = record.get(id_col).filter(|s| !s.is_empty()).ok_or("missing pod id")?;
            let arrival = parse_field(&record, arrival_col, &mapping.arrival)?;
            let duration = parse_field(&record, duration_col, &mapping.duration)?;
            let gpu_count = parse_field(&record, count_col, &mapping.gpu_count)?;
            let gpu_fraction = parse_field(&record, fraction_col, &mapping.gpu_fraction)? / mapping.fraction_scale;
            if arrival < 0.0 {
                return Err(format!("negative arrival {arrival}"));
            }
            if duration <= 0.0 {
                return Err(format!("non-positive duration {duration}"));
            }
            if gpu_count < 0.0 {
                return Err(format!("negative gpu count {gpu_count}"));
            }
            if gpu_count > 0.0 && !(gpu_fraction > 0.0 && gpu_fraction <= 1.0) {
                return Err(format!("gpu fraction {gpu_fraction} outside (0, 1]"));
            }
            Ok::<_, String>(PodRecord {
                pod_id: pod_id.to_string(),
                arrival,
                duration,
                gpu_count,
                gpu_fraction,
                cpu: parse_optional(&record, cpu_col, &mapping.cpu)?,
                ram: parse_optional(&record, ram_col, &mapping.ram)?,
            })
        })();
        match parsed {
            Ok(pod) => pods.push(pod),
            Err(reason) => skipped.push(SkippedRow { file: path.into(), line, reason }),
        }
    }
    Ok(pods)
}

/// Turns parsed pods into VM requests: drops arrival outliers, excludes
/// pods without a single-GPU demand, normalizes by the largest remaining
/// demand and maps each pod to its closest profile.
pub fn pods_to_vms(pods: &[PodRecord], mapping: &TraceMapping, report: &mut TraceReport) -> Vec<VmRequest> {
    if pods.is_empty() {
        return Vec::new();
    }
    let arrivals: Vec<f64> = pods.iter().map(|p| p.arrival).collect();
    let (lo, hi) = iqr_bounds(&arrivals);
    let retained: Vec<&PodRecord> = pods
        .iter()
        .filter(|p| p.arrival >= lo && p.arrival <= hi)
        .collect();
    report.outliers = pods.len() - retained.len();

    let mut eligible = Vec::with_capacity(retained.len());
    for pod in retained {
        let u = pod.demand();
        if !(u > 0.0) {
            report.no_gpu_excluded += 1;
        } else if u > 1.0 {
            report.multi_gpu_excluded += 1;
        } else {
            eligible.push(pod);
        }
    }
    let max_demand = eligible.iter().map(|p| p.demand()).fold(0.0, f64::max);
    report.max_demand = max_demand;
    let origin = if mapping.rebase_arrivals {
        eligible.iter().map(|p| p.arrival).fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };

    let mut vms: Vec<VmRequest> = eligible
        .iter()
        .filter_map(|pod| {
            let profile = map_pod_to_profile(pod, max_demand).ok()?;
            Some((pod, profile))
        })
        .enumerate()
        .map(|(i, (pod, profile))| VmRequest {
            id: i as VmId,
            profile,
            arrival: (pod.arrival - origin).round() as u64,
            duration: pod.duration.ceil().max(1.0) as u64,
            weight: 1.0,
            migration_weight: 0.0,
            cpu: pod.cpu,
            ram: pod.ram,
        })
        .collect();
    vms.sort_by_key(|vm| vm.arrival);
    for (i, vm) in vms.iter_mut().enumerate() {
        vm.id = i as VmId;
    }
    vms
}

fn open_file(path: &Path) -> Result<File, WorkloadError> {
    File::open(path).map_err(|source| WorkloadError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a node table and a pod table into hosts and arrival-sorted VMs.
pub fn load_trace(nodes: &Path, pods: &Path, mapping: &TraceMapping) -> Result<LoadedTrace, WorkloadError> {
    let mut report = TraceReport::default();
    let node_name = nodes.display().to_string();
    let pod_name = pods.display().to_string();
    let hosts = parse_nodes(open_file(nodes)?, &node_name, mapping, &mut report.skipped)?;
    if hosts.is_empty() {
        return Err(WorkloadError::NoUsableRows(node_name));
    }
    let records = parse_pods(open_file(pods)?, &pod_name, mapping, &mut report.skipped)?;
    let vms = pods_to_vms(&records, mapping, &mut report);
    if vms.is_empty() {
        return Err(WorkloadError::NoUsableRows(pod_name));
    }
    Ok(LoadedTrace { hosts, vms, report })
}

/// Reads a normalized workload CSV (as written by [`write_vms_csv`]).
pub fn read_vms_csv(path: &Path) -> Result<Vec<VmRequest>, WorkloadError> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(open_file(path)?);
    let mut vms: Vec<VmRequest> = Vec::new();
    for record in rdr.deserialize() {
        vms.push(record.map_err(|source| WorkloadError::Csv { path: name.clone(), source })?);
    }
    if vms.is_empty() {
        return Err(WorkloadError::NoUsableRows(name));
    }
    vms.sort_by_key(|vm| vm.arrival);
    Ok(vms)
}

pub fn write_vms_csv<W: std::io::Write>(writer: W, vms: &[VmRequest]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["id", "profile", "arrival", "duration", "weight", "migration_weight", "cpu", "ram"])?;
    for vm in vms {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        wtr.write_record([
            vm.id.to_string(),
            vm.profile.to_string(),
            vm.arrival.to_string(),
            vm.duration.to_string(),
            vm.weight.to_string(),
            vm.migration_weight.to_string(),
            opt(vm.cpu),
            opt(vm.ram),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DurationDist {
    Fixed { hours: f64 },
    Uniform { min_hours: f64, max_hours: f64 },
    Exponential { mean_hours: f64 },
}

/// Parameters for a synthetic Poisson workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Probability of each profile; must sum to 1.
    pub profile_mix: BTreeMap<Profile, f64>,
    /// Mean arrivals per hour.
    pub arrivals_per_hour: f64,
    pub horizon_hours: f64,
    pub duration: DurationDist,
    /// Hard cap on the number of generated VMs.
    #[serde(default)]
    pub max_vms: Option<usize>,
}

fn validate_mix(mix: &BTreeMap<Profile, f64>) -> Result<(), WorkloadError> {
    if mix.is_empty() {
        return Err(WorkloadError::InvalidMix("empty mix".into()));
    }
    if let Some((p, w)) = mix.iter().find(|(_, w)| !w.is_finite() || **w < 0.0) {
        return Err(WorkloadError::InvalidMix(format!("{p} has weight {w}")));
    }
    let total: f64 = mix.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(WorkloadError::InvalidMix(format!("probabilities sum to {total}")));
    }
    Ok(())
}

/// Deterministic synthetic workload; identical spec and seed give an
/// identical list.
pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<Vec<VmRequest>, WorkloadError> {
    validate_mix(&spec.profile_mix)?;
    if !(spec.arrivals_per_hour >= 0.0) || !spec.arrivals_per_hour.is_finite() {
        return Err(WorkloadError::InvalidParameter(format!(
            "arrival rate {}",
            spec.arrivals_per_hour
        )));
    }
    if !(spec.horizon_hours >= 0.0) {
        return Err(WorkloadError::InvalidParameter(format!("horizon {}", spec.horizon_hours)));
    }
    match spec.duration {
        DurationDist::Fixed { hours } if !(hours > 0.0) => {
            return Err(WorkloadError::InvalidParameter(format!("fixed duration {hours}")))
        }
        DurationDist::Uniform { min_hours, max_hours } if !(min_hours > 0.0 && max_hours >= min_hours) => {
            return Err(WorkloadError::InvalidParameter(format!(
                "uniform duration [{min_hours}, {max_hours}]"
            )))
        }
        DurationDist::Exponential { mean_hours } if !(mean_hours > 0.0) => {
            return Err(WorkloadError::InvalidParameter(format!("mean duration {mean_hours}")))
        }
        _ => {}
    }
    if spec.arrivals_per_hour == 0.0 {
        return Ok(Vec::new());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(spec.arrivals_per_hour).expect("rate checked positive");
    let cumulative: Vec<(Profile, f64)> = spec
        .profile_mix
        .iter()
        .scan(0.0, |acc, (&p, &w)| {
            *acc += w;
            Some((p, *acc))
        })
        .collect();
    let horizon = spec.horizon_hours * 3600.0;
    let limit = spec.max_vms.unwrap_or(usize::MAX);

    let mut vms = Vec::new();
    let mut t_hours = 0.0;
    while vms.len() < limit {
        t_hours += gap.sample(&mut rng);
        let arrival = t_hours * 3600.0;
        if arrival > horizon {
            break;
        }
        let draw: f64 = rng.random();
        let profile = cumulative
            .iter()
            .find(|(_, c)| draw < *c)
            .map(|(p, _)| *p)
            .unwrap_or(cumulative.last().unwrap().0);
        let hours = match spec.duration {
            DurationDist::Fixed { hours } => hours,
            DurationDist::Uniform { min_hours, max_hours } => {
                if max_hours > min_hours {
                    rng.random_range(min_hours..max_hours)
                } else {
                    min_hours
                }
            }
            DurationDist::Exponential { mean_hours } => {
                Exp::new(1.0 / mean_hours).expect("mean checked positive").sample(&mut rng)
            }
        };
        let id = vms.len() as VmId;
        vms.push(VmRequest::new(
            id,
            profile,
            arrival.floor() as u64,
            (hours * 3600.0).ceil().max(1.0) as u64,
        ));
    }
    Ok(vms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iqr_examples() {
        assert_eq!(iqr_bounds(&[1.0, 2.0, 3.0, 4.0, 100.0]), (-1.0, 7.0));
        assert_eq!(iqr_filter(&[1.0, 2.0, 3.0, 4.0, 100.0]), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(iqr_filter(&[3.0, 3.0, 3.0]), vec![3.0, 3.0, 3.0]);
        assert_eq!(iqr_filter(&[5.0]), vec![5.0]);
        assert!(iqr_filter(&[]).is_empty());
    }

    #[test]
    fn iqr_preserves_order() {
        assert_eq!(iqr_filter(&[4.0, -50.0, 1.0, 3.0, 2.0]), vec![4.0, 1.0, 3.0, 2.0]);
    }

    #[test]
    fn normalized_demand_mapping() {
        assert_eq!(profile_for_normalized_demand(1.0), Profile::Mig7g40gb);
        assert_eq!(profile_for_normalized_demand(0.5), Profile::Mig4g20gb);
        assert_eq!(profile_for_normalized_demand(3.0 / 56.0), Profile::Mig1g10gb);
        assert_eq!(profile_for_normalized_demand(0.0), Profile::Mig1g5gb);
    }

    fn pod(count: f64, fraction: f64) -> PodRecord {
        PodRecord {
            pod_id: "p".into(),
            arrival: 0.0,
            duration: 10.0,
            gpu_count: count,
            gpu_fraction: fraction,
            cpu: None,
            ram: None,
        }
    }

    #[test]
    fn pod_exclusions() {
        assert_eq!(map_pod_to_profile(&pod(2.0, 1.0), 1.0), Err(Exclusion::MultiGpu));
        assert_eq!(map_pod_to_profile(&pod(0.0, 1.0), 1.0), Err(Exclusion::NoGpu));
        assert_eq!(map_pod_to_profile(&pod(1.0, 1.0), 1.0), Ok(Profile::Mig7g40gb));
        assert_eq!(map_pod_to_profile(&pod(1.0, 0.5), 1.0), Ok(Profile::Mig4g20gb));
    }

    fn mix(pairs: &[(Profile, f64)]) -> BTreeMap<Profile, f64> {
        pairs.iter().copied().collect()
    }

    fn spec(rate: f64, m: BTreeMap<Profile, f64>) -> SynthSpec {
        SynthSpec {
            profile_mix: m,
            arrivals_per_hour: rate,
            horizon_hours: 48.0,
            duration: DurationDist::Exponential { mean_hours: 4.0 },
            max_vms: None,
        }
    }

    #[test]
    fn synthesis_contract() {
        let heavy = mix(&[(Profile::Mig7g40gb, 1.0)]);
        assert!(synthesize(&spec(0.0, heavy.clone()), 1).unwrap().is_empty());
        let vms = synthesize(&spec(3.0, heavy), 1).unwrap();
        assert!(!vms.is_empty());
        assert!(vms.iter().all(|v| v.profile == Profile::Mig7g40gb));
        assert!(vms.windows(2).all(|w| w[0].arrival <= w[1].arrival));

        let m = mix(&[(Profile::Mig1g5gb, 0.5), (Profile::Mig3g20gb, 0.5)]);
        let a = synthesize(&spec(5.0, m.clone()), 42).unwrap();
        let b = synthesize(&spec(5.0, m.clone()), 42).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_ne!(a, synthesize(&spec(5.0, m), 43).unwrap());
    }

    #[test]
    fn synthesis_rejects_bad_mix() {
        let bad = mix(&[(Profile::Mig1g5gb, 0.4)]);
        assert!(matches!(synthesize(&spec(1.0, bad), 0), Err(WorkloadError::InvalidMix(_))));
        let negative = mix(&[(Profile::Mig1g5gb, 1.5), (Profile::Mig1g10gb, -0.5)]);
        assert!(matches!(synthesize(&spec(1.0, negative), 0), Err(WorkloadError::InvalidMix(_))));
    }
}
