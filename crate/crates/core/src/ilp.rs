//! Placement ILP: model construction, LP export, solution validation and an
//! exhaustive oracle for desk-scale instances.
//!
//! Indices in variable and constraint names are positions: `i` into
//! [`IlpInstance::vms`], `j` into [`IlpInstance::pms`], `k` into the GPU list
//! of PM `j`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::HostSpec;
use crate::mig::{BlockSet, Profile};
use crate::workload::{VmId, VmRequest};

pub const DEFAULT_BIG_M: i64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreviousPlacement {
    pub pm: usize,
    pub gpu: usize,
    pub start: u8,
}

fn default_big_m() -> i64 {
    DEFAULT_BIG_M
}

/// One decision interval: the VMs to place, the PMs and any prior placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlpInstance {
    pub vms: Vec<VmRequest>,
    pub pms: Vec<HostSpec>,
    /// Placement before this interval (x′, y′), keyed by VM id.
    #[serde(default)]
    pub previous: BTreeMap<VmId, PreviousPlacement>,
    #[serde(default = "default_big_m")]
    pub big_m: i64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IlpError {
    #[error("VM {vm} has migration weight 1 but no previous assignment")]
    MissingPrevious { vm: VmId },
    #[error("previous assignment of VM {vm} references a missing PM or GPU")]
    PreviousOutOfRange { vm: VmId },
    #[error("duplicate VM id {0}")]
    DuplicateVm(VmId),
    #[error("big-M {big_m} is too small; the instance needs at least {required}")]
    BigMTooSmall { big_m: i64, required: i64 },
    #[error(
        "instance too large for exhaustive search: {vms} VMs, {pms} PMs, {gpus} GPUs on one PM \
         (cap {cap_vms}/{cap_pms}/{cap_gpus})"
    )]
    TooLarge {
        vms: usize,
        pms: usize,
        gpus: usize,
        cap_vms: usize,
        cap_pms: usize,
        cap_gpus: usize,
    },
}

impl IlpInstance {
    pub fn new(vms: Vec<VmRequest>, pms: Vec<HostSpec>) -> Self {
        IlpInstance {
            vms,
            pms,
            previous: BTreeMap::new(),
            big_m: DEFAULT_BIG_M,
        }
    }

    /// Smallest big-M for which the disjunctive and compatibility rows are
    /// valid relaxations when their indicator is off.
    pub fn required_big_m(&self) -> i64 {
        let offset = self
            .vms
            .iter()
            .map(|v| i64::from(v.profile.spec().max_start + v.profile.size()))
            .max()
            .unwrap_or(0);
        let tags = self
            .vms
            .iter()
            .flat_map(|v| {
                self.pms
                    .iter()
                    .flat_map(|p| p.gpus.iter())
                    .map(move |&h| (i64::from(v.profile.spec().hw_tag) - i64::from(h)).abs())
            })
            .max()
            .unwrap_or(0);
        offset.max(tags)
    }

    pub fn check(&self) -> Result<(), IlpError> {
        let mut seen = BTreeSet::new();
        for vm in &self.vms {
            if !seen.insert(vm.id) {
                return Err(IlpError::DuplicateVm(vm.id));
            }
            match self.previous.get(&vm.id) {
                None if vm.migration_weight != 0.0 => return Err(IlpError::MissingPrevious { vm: vm.id }),
                Some(p) if p.pm >= self.pms.len() || p.gpu >= self.pms[p.pm].gpus.len() => {
                    return Err(IlpError::PreviousOutOfRange { vm: vm.id })
                }
                _ => {}
            }
        }
        let required = self.required_big_m();
        if self.big_m < required {
            return Err(IlpError::BigMTooSmall {
                big_m: self.big_m,
                required,
            });
        }
        Ok(())
    }

    fn previous_of(&self, i: usize) -> Option<PreviousPlacement> {
        self.previous.get(&self.vms[i].id).copied()
    }

    fn cpu(&self, i: usize) -> f64 {
        self.vms[i].cpu.unwrap_or(0.0)
    }

    fn ram(&self, i: usize) -> f64 {
        self.vms[i].ram.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarDomain {
    Binary,
    /// Integer with lower bound zero.
    NonNegInt,
    FreeInt,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub domain: VarDomain,
}

pub type VarId = usize;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    fn add(&mut self, var: VarId, coef: f64) {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
    }

    pub fn value(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }

    fn scaled(&self, factor: f64) -> LinExpr {
        LinExpr {
            terms: self
                .terms
                .iter()
                .map(|&(v, c)| (v, c * factor))
                .filter(|&(_, c)| c != 0.0)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// Constraint family of a model row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Host CPU capacity.
    HostCpu,
    /// Host RAM capacity.
    HostRam,
    /// A VM sits on at most one PM.
    SingleHost,
    /// A VM holds at most one GI.
    SingleGpu,
    /// A hosted VM has a GI on that PM.
    HostHasGpu,
    /// A GI implies its VM is on the GPU's PM.
    GpuOnHost,
    /// Disjunctive non-overlap, first ordering.
    OrderBefore,
    /// Disjunctive non-overlap, second ordering.
    OrderAfter,
    /// Start offset is a multiple of the profile size (lower side).
    AlignLower,
    /// Start offset is a multiple of the profile size (upper side).
    AlignUpper,
    /// Start offset stays within the profile's last legal start.
    StartLimit,
    /// Profile hardware tag matches the GPU (lower side).
    TagLower,
    /// Profile hardware tag matches the GPU (upper side).
    TagUpper,
    HostPowered,
    GpuActive,
    /// An active GPU holds at least one GI.
    ActiveGpuUsed,
    HostMoveUp,
    HostMoveDown,
    GpuMoveUp,
    GpuMoveDown,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::HostCpu => "host_cpu",
            Family::HostRam => "host_ram",
            Family::SingleHost => "single_host",
            Family::SingleGpu => "single_gpu",
            Family::HostHasGpu => "host_has_gpu",
            Family::GpuOnHost => "gpu_on_host",
            Family::OrderBefore => "order_before",
            Family::OrderAfter => "order_after",
            Family::AlignLower => "align_lower",
            Family::AlignUpper => "align_upper",
            Family::StartLimit => "start_limit",
            Family::TagLower => "tag_lower",
            Family::TagUpper => "tag_upper",
            Family::HostPowered => "host_powered",
            Family::GpuActive => "gpu_active",
            Family::ActiveGpuUsed => "active_gpu_used",
            Family::HostMoveUp => "host_move_up",
            Family::HostMoveDown => "host_move_down",
            Family::GpuMoveUp => "gpu_move_up",
            Family::GpuMoveDown => "gpu_move_down",
        }
    }
}

/// `lhs sense rhs` with every constant folded into `rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub family: Family,
    pub lhs: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn holds(&self, values: &[f64]) -> bool {
        const TOL: f64 = 1e-9;
        let v = self.lhs.value(values);
        match self.sense {
            Sense::Le => v <= self.rhs + TOL,
            Sense::Ge => v >= self.rhs - TOL,
            Sense::Eq => (v - self.rhs).abs() <= TOL,
        }
    }
}

/// Solver-neutral model: variables, rows and the three objectives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IlpModel {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub acceptance: LinExpr,
    pub hardware: LinExpr,
    pub migration: LinExpr,
    #[serde(skip)]
    index: BTreeMap<String, VarId>,
}

impl IlpModel {
    fn var(&mut self, name: String, domain: VarDomain) -> VarId {
        let id = self.vars.len();
        self.index.insert(name.clone(), id);
        self.vars.push(Variable { name, domain });
        id
    }

    fn row(&mut self, family: Family, name: String, lhs: LinExpr, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint {
            name,
            family,
            lhs,
            sense,
            rhs,
        });
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    /// Number of variables in one family, e.g. `"alpha"`.
    pub fn var_count(&self, family: &str) -> usize {
        let prefix = format!("{family}_");
        self.vars.iter().filter(|v| v.name.starts_with(&prefix)).count()
    }

    pub fn constraint_count(&self, family: Family) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    /// Rows not satisfied by `values` (indexed by [`VarId`]).
    pub fn violated(&self, values: &[f64]) -> Vec<&Constraint> {
        self.constraints.iter().filter(|c| !c.holds(values)).collect()
    }
}

/// Builds every variable, row and objective of the formulation.
pub fn build_model(inst: &IlpInstance) -> Result<IlpModel, IlpError> {
    inst.check()?;
    let n = inst.vms.len();
    let m = inst.pms.len();
    let big = inst.big_m as f64;
    let mut model = IlpModel {
        vars: Vec::new(),
        constraints: Vec::new(),
        acceptance: LinExpr::default(),
        hardware: LinExpr::default(),
        migration: LinExpr::default(),
        index: BTreeMap::new(),
    };

    let gpus = |j: usize| inst.pms[j].gpus.len();
    let mut x = vec![vec![0; m]; n];
    let mut y = vec![vec![Vec::new(); m]; n];
    let mut z = vec![vec![Vec::new(); m]; n];
    for i in 0..n {
        for j in 0..m {
            x[i][j] = model.var(format!("x_{i}_{j}"), VarDomain::Binary);
        }
    }
    for i in 0..n {
        for j in 0..m {
            for k in 0..gpus(j) {
                y[i][j].push(model.var(format!("y_{i}_{j}_{k}"), VarDomain::Binary));
            }
        }
    }
    for i in 0..n {
        for j in 0..m {
            for k in 0..gpus(j) {
                z[i][j].push(model.var(format!("z_{i}_{j}_{k}"), VarDomain::NonNegInt));
            }
        }
    }
    let mut alpha = BTreeMap::new();
    for i in 0..n {
        for i2 in (0..n).filter(|&i2| i2 != i) {
            for j in 0..m {
                for k in 0..gpus(j) {
                    let id = model.var(format!("alpha_{i}_{i2}_{j}_{k}"), VarDomain::Binary);
                    alpha.insert((i, i2, j, k), id);
                }
            }
        }
    }
    let beta: Vec<VarId> = (0..n)
        .map(|i| model.var(format!("beta_{i}"), VarDomain::FreeInt))
        .collect();
    let phi: Vec<VarId> = (0..m)
        .map(|j| model.var(format!("phi_{j}"), VarDomain::Binary))
        .collect();
    let gamma: Vec<Vec<VarId>> = (0..m)
        .map(|j| {
            (0..gpus(j))
                .map(|k| model.var(format!("gamma_{j}_{k}"), VarDomain::Binary))
                .collect()
        })
        .collect();
    let mut mv = vec![vec![0; m]; n];
    let mut omega = vec![vec![Vec::new(); m]; n];
    for i in 0..n {
        for j in 0..m {
            mv[i][j] = model.var(format!("m_{i}_{j}"), VarDomain::Binary);
        }
    }
    for i in 0..n {
        for j in 0..m {
            for k in 0..gpus(j) {
                omega[i][j].push(model.var(format!("omega_{i}_{j}_{k}"), VarDomain::Binary));
            }
        }
    }

    // Objectives.
    for i in 0..n {
        for j in 0..m {
            model.acceptance.add(x[i][j], inst.vms[i].weight);
        }
    }
    for j in 0..m {
        let b = inst.pms[j].weight;
        model.hardware.add(phi[j], b);
        for k in 0..gpus(j) {
            model.hardware.add(gamma[j][k], b);
        }
    }
    for i in 0..n {
        let delta = inst.vms[i].migration_weight;
        for j in 0..m {
            model.migration.add(mv[i][j], delta);
            for k in 0..gpus(j) {
                model.migration.add(omega[i][j][k], delta);
            }
        }
    }

    // Host capacities; rows only exist for bounded resources.
    for j in 0..m {
        for (family, cap, demand) in [
            (Family::HostCpu, inst.pms[j].cpu_capacity, &IlpInstance::cpu as &dyn Fn(&IlpInstance, usize) -> f64),
            (Family::HostRam, inst.pms[j].ram_capacity, &IlpInstance::ram),
        ] {
            if let Some(cap) = cap {
                let mut e = LinExpr::default();
                for (i, xi) in x.iter().enumerate() {
                    e.add(xi[j], demand(inst, i));
                }
                model.row(family, format!("{}_{j}", family.name()), e, Sense::Le, cap);
            }
        }
    }
    for i in 0..n {
        let mut e = LinExpr::default();
        for j in 0..m {
            e.add(x[i][j], 1.0);
        }
        model.row(Family::SingleHost, format!("single_host_{i}"), e, Sense::Le, 1.0);
    }
    for i in 0..n {
        let mut e = LinExpr::default();
        for j in 0..m {
            for k in 0..gpus(j) {
                e.add(y[i][j][k], 1.0);
            }
        }
        model.row(Family::SingleGpu, format!("single_gpu_{i}"), e, Sense::Le, 1.0);
    }
    for i in 0..n {
        for j in 0..m {
            let mut e = LinExpr::default();
            e.add(x[i][j], 1.0);
            for k in 0..gpus(j) {
                e.add(y[i][j][k], -1.0);
            }
            model.row(Family::HostHasGpu, format!("host_has_gpu_{i}_{j}"), e, Sense::Le, 0.0);
        }
    }
    for i in 0..n {
        for j in 0..m {
            for k in 0..gpus(j) {
                let mut e = LinExpr::default();
                e.add(y[i][j][k], 1.0);
                e.add(x[i][j], -1.0);
                model.row(Family::GpuOnHost, format!("gpu_on_host_{i}_{j}_{k}"), e, Sense::Le, 0.0);
            }
        }
    }
    for (&(i, i2, j, k), &a) in &alpha {
        let g = f64::from(inst.vms[i].profile.size());
        let g2 = f64::from(inst.vms[i2].profile.size());
        let mut e = LinExpr::default();
        e.add(z[i][j][k], 1.0);
        e.add(y[i][j][k], g);
        e.add(z[i2][j][k], -1.0);
        e.add(a, -big);
        model.row(Family::OrderBefore, format!("order_before_{i}_{i2}_{j}_{k}"), e, Sense::Le, 0.0);
        let mut e = LinExpr::default();
        e.add(z[i2][j][k], 1.0);
        e.add(y[i2][j][k], g2);
        e.add(z[i][j][k], -1.0);
        e.add(a, big);
        model.row(Family::OrderAfter, format!("order_after_{i}_{i2}_{j}_{k}"), e, Sense::Le, big);
    }
    for i in 0..n {
        let spec = inst.vms[i].profile.spec();
        let g = f64::from(spec.size_blocks);
        let h = f64::from(spec.hw_tag);
        for j in 0..m {
            for k in 0..gpus(j) {
                let (yv, zv) = (y[i][j][k], z[i][j][k]);
                let mut e = LinExpr::default();
                e.add(zv, 1.0);
                e.add(beta[i], -g);
                e.add(yv, big);
                model.row(Family::AlignLower, format!("align_lower_{i}_{j}_{k}"), e, Sense::Le, big);
                let mut e = LinExpr::default();
                e.add(zv, -1.0);
                e.add(beta[i], g);
                e.add(yv, big);
                model.row(Family::AlignUpper, format!("align_upper_{i}_{j}_{k}"), e, Sense::Le, big);
                let mut e = LinExpr::default();
                e.add(zv, 1.0);
                model.row(Family::StartLimit, format!("start_limit_{i}_{j}_{k}"), e, Sense::Le, f64::from(spec.max_start));
                let tag = f64::from(inst.pms[j].gpus[k]);
                let mut e = LinExpr::default();
                e.add(yv, big);
                model.row(Family::TagLower, format!("tag_lower_{i}_{j}_{k}"), e.clone(), Sense::Le, big + tag - h);
                model.row(Family::TagUpper, format!("tag_upper_{i}_{j}_{k}"), e, Sense::Le, big + h - tag);
            }
        }
    }
    for i in 0..n {
        for j in 0..m {
            let mut e = LinExpr::default();
            e.add(x[i][j], 1.0);
            e.add(phi[j], -1.0);
            model.row(Family::HostPowered, format!("host_powered_{i}_{j}"), e, Sense::Le, 0.0);
        }
    }
    for i in 0..n {
        for j in 0..m {
            for k in 0..gpus(j) {
                let mut e = LinExpr::default();
                e.add(y[i][j][k], 1.0);
                e.add(gamma[j][k], -1.0);
                model.row(Family::GpuActive, format!("gpu_active_{i}_{j}_{k}"), e, Sense::Le, 0.0);
            }
        }
    }
    for j in 0..m {
        for k in 0..gpus(j) {
            let mut e = LinExpr::default();
            e.add(gamma[j][k], 1.0);
            for yi in &y {
                e.add(yi[j][k], -1.0);
            }
            model.row(Family::ActiveGpuUsed, format!("active_gpu_used_{j}_{k}"), e, Sense::Le, 0.0);
        }
    }
    for i in 0..n {
        let prev = inst.previous_of(i);
        for j in 0..m {
            let xp = if prev.is_some_and(|p| p.pm == j) { 1.0 } else { 0.0 };
            let mut e = LinExpr::default();
            e.add(x[i][j], 1.0);
            e.add(mv[i][j], -1.0);
            model.row(Family::HostMoveUp, format!("host_move_up_{i}_{j}"), e, Sense::Le, xp);
            let mut e = LinExpr::default();
            e.add(x[i][j], -1.0);
            e.add(mv[i][j], -1.0);
            model.row(Family::HostMoveDown, format!("host_move_down_{i}_{j}"), e, Sense::Le, -xp);
        }
    }
    for i in 0..n {
        let prev = inst.previous_of(i);
        for j in 0..m {
            for k in 0..gpus(j) {
                let yp = if prev.is_some_and(|p| p.pm == j && p.gpu == k) { 1.0 } else { 0.0 };
                let mut e = LinExpr::default();
                e.add(y[i][j][k], 1.0);
                e.add(omega[i][j][k], -1.0);
                model.row(Family::GpuMoveUp, format!("gpu_move_up_{i}_{j}_{k}"), e, Sense::Le, yp);
                let mut e = LinExpr::default();
                e.add(y[i][j][k], -1.0);
                e.add(omega[i][j][k], -1.0);
                model.row(Family::GpuMoveDown, format!("gpu_move_down_{i}_{j}_{k}"), e, Sense::Le, -yp);
            }
        }
    }
    Ok(model)
}

/// What the exported LP optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ObjectiveMode {
    /// Maximize `w1·acceptance − w2·hardware − w3·migration`.
    Weighted { w1: f64, w2: f64, w3: f64 },
    /// Stage 1: maximize acceptance.
    Acceptance,
    /// Stage 2: minimize hardware with acceptance fixed.
    Hardware { acceptance: f64 },
    /// Stage 3: minimize migrations with the earlier objectives fixed.
    Migration { acceptance: f64, hardware: f64 },
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn fmt_expr(model: &IlpModel, expr: &LinExpr) -> String {
    if expr.terms.is_empty() {
        return format!("0 {}", model.vars.first().map_or("x", |v| v.name.as_str()));
    }
    let mut out = String::new();
    let mut line_len = 0;
    for (n, &(var, coef)) in expr.terms.iter().enumerate() {
        let name = &model.vars[var].name;
        let sign = if coef < 0.0 { "-" } else { "+" };
        let mag = coef.abs();
        let body = if mag == 1.0 {
            name.clone()
        } else {
            format!("{} {name}", fmt_num(mag))
        };
        let term = match (n, sign) {
            (0, "+") => body,
            (0, _) => format!("- {body}"),
            _ => format!(" {sign} {body}"),
        };
        if line_len + term.len() > 200 {
            out.push_str("\n   ");
            line_len = 3;
        }
        line_len += term.len();
        out.push_str(&term);
    }
    out
}

/// CPLEX-LP text for `model` under `mode`.
pub fn export_lp(model: &IlpModel, mode: ObjectiveMode) -> String {
    let (sense, objective, fixed): (&str, LinExpr, Vec<(&str, &LinExpr, f64)>) = match mode {
        ObjectiveMode::Weighted { w1, w2, w3 } => {
            let mut e = model.acceptance.scaled(w1);
            e.terms.extend(model.hardware.scaled(-w2).terms);
            e.terms.extend(model.migration.scaled(-w3).terms);
            ("Maximize", e, vec![])
        }
        ObjectiveMode::Acceptance => ("Maximize", model.acceptance.clone(), vec![]),
        ObjectiveMode::Hardware { acceptance } => (
            "Minimize",
            model.hardware.clone(),
            vec![("fix_acceptance", &model.acceptance, acceptance)],
        ),
        ObjectiveMode::Migration { acceptance, hardware } => (
            "Minimize",
            model.migration.clone(),
            vec![
                ("fix_acceptance", &model.acceptance, acceptance),
                ("fix_hardware", &model.hardware, hardware),
            ],
        ),
    };
    let mut out = String::new();
    let _ = writeln!(out, "{sense}");
    let _ = writeln!(out, " obj: {}", fmt_expr(model, &objective));
    out.push_str("Subject To\n");
    for (name, expr, value) in fixed {
        let _ = writeln!(out, " {name}: {} = {}", fmt_expr(model, expr), fmt_num(value));
    }
    for c in &model.constraints {
        let _ = writeln!(
            out,
            " {}: {} {} {}",
            c.name,
            fmt_expr(model, &c.lhs),
            c.sense.symbol(),
            fmt_num(c.rhs)
        );
    }
    out.push_str("Bounds\n");
    for v in model.vars.iter().filter(|v| v.domain == VarDomain::FreeInt) {
        let _ = writeln!(out, " {} free", v.name);
    }
    out.push_str("Binary\n");
    for v in model.vars.iter().filter(|v| v.domain == VarDomain::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("General\n");
    for v in model.vars.iter().filter(|v| v.domain != VarDomain::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HostAssignment {
    pub vm: usize,
    pub pm: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GpuAssignment {
    pub vm: usize,
    pub pm: usize,
    pub gpu: usize,
    pub start: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GpuRef {
    pub pm: usize,
    pub gpu: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Objectives {
    pub acceptance: f64,
    pub hardware: f64,
    pub migration: f64,
}

/// A candidate assignment: the 1-entries of x (hosts), y with z (gpus),
/// φ (powered hosts) and γ (active GPUs). `vm` fields are VM positions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Solution {
    pub hosts: Vec<HostAssignment>,
    pub gpus: Vec<GpuAssignment>,
    pub powered_hosts: Vec<usize>,
    pub active_gpus: Vec<GpuRef>,
    pub objectives: Objectives,
}

impl Solution {
    /// Builds the solution with minimal φ/γ for per-VM placements
    /// `(pm, gpu, start)`.
    pub fn from_placements(inst: &IlpInstance, placements: &[Option<(usize, usize, u8)>]) -> Solution {
        let mut s = Solution::default();
        for (vm, p) in placements.iter().enumerate() {
            if let Some(&(pm, gpu, start)) = p.as_ref() {
                s.hosts.push(HostAssignment { vm, pm });
                s.gpus.push(GpuAssignment { vm, pm, gpu, start });
                s.powered_hosts.push(pm);
                s.active_gpus.push(GpuRef { pm, gpu });
            }
        }
        s.powered_hosts.sort_unstable();
        s.powered_hosts.dedup();
        s.active_gpus.sort_unstable();
        s.active_gpus.dedup();
        s.objectives = s.compute_objectives(inst);
        s
    }

    pub fn is_accepted(&self, vm: usize) -> bool {
        self.hosts.iter().any(|h| h.vm == vm)
    }

    pub fn accepted_count(&self) -> usize {
        self.hosts.iter().map(|h| h.vm).collect::<BTreeSet<_>>().len()
    }

    /// Objective values implied by the assignment, with m and ω at their
    /// smallest feasible values.
    pub fn compute_objectives(&self, inst: &IlpInstance) -> Objectives {
        let acceptance = self
            .hosts
            .iter()
            .filter_map(|h| inst.vms.get(h.vm))
            .map(|v| v.weight)
            .sum();
        let weight = |pm: usize| inst.pms.get(pm).map_or(0.0, |p| p.weight);
        let hardware = self.powered_hosts.iter().map(|&j| weight(j)).sum::<f64>()
            + self.active_gpus.iter().map(|g| weight(g.pm)).sum::<f64>();
        let mut migration = 0.0;
        for (i, vm) in inst.vms.iter().enumerate() {
            if vm.migration_weight == 0.0 {
                continue;
            }
            let prev = inst.previous_of(i);
            let xs: BTreeSet<usize> = self.hosts.iter().filter(|h| h.vm == i).map(|h| h.pm).collect();
            let ys: BTreeSet<(usize, usize)> = self.gpus.iter().filter(|g| g.vm == i).map(|g| (g.pm, g.gpu)).collect();
            let xp: BTreeSet<usize> = prev.iter().map(|p| p.pm).collect();
            let yp: BTreeSet<(usize, usize)> = prev.iter().map(|p| (p.pm, p.gpu)).collect();
            let changes = xs.symmetric_difference(&xp).count() + ys.symmetric_difference(&yp).count();
            migration += vm.migration_weight * changes as f64;
        }
        Objectives {
            acceptance,
            hardware,
            migration,
        }
    }
}

/// A violated constraint family with the offending indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub family: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.family, self.detail)
    }
}

fn violation(family: &'static str, detail: String) -> Violation {
    Violation { family, detail }
}

/// Every constraint family the solution breaks. Free auxiliaries (α, β, z of
/// unused slots, m, ω) are taken at any feasible value.
pub fn validate(inst: &IlpInstance, sol: &Solution) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = inst.vms.len();
    let m = inst.pms.len();
    let gpu_exists = |pm: usize, gpu: usize| pm < m && gpu < inst.pms[pm].gpus.len();

    for h in &sol.hosts {
        if h.vm >= n || h.pm >= m {
            out.push(violation("domain", format!("x[{},{}] references a missing VM or PM", h.vm, h.pm)));
        }
    }
    for g in &sol.gpus {
        if g.vm >= n || !gpu_exists(g.pm, g.gpu) {
            out.push(violation(
                "domain",
                format!("y[{},{},{}] references a missing VM or GPU", g.vm, g.pm, g.gpu),
            ));
        }
    }
    if !out.is_empty() {
        return out;
    }
    let x: BTreeSet<(usize, usize)> = sol.hosts.iter().map(|h| (h.vm, h.pm)).collect();
    let y: BTreeSet<(usize, usize, usize)> = sol.gpus.iter().map(|g| (g.vm, g.pm, g.gpu)).collect();
    let phi: BTreeSet<usize> = sol.powered_hosts.iter().copied().collect();
    let gamma: BTreeSet<(usize, usize)> = sol.active_gpus.iter().map(|g| (g.pm, g.gpu)).collect();

    for j in 0..m {
        for (family, cap, demand) in [
            ("host_cpu", inst.pms[j].cpu_capacity, inst.vms.iter().map(|v| v.cpu.unwrap_or(0.0)).collect::<Vec<_>>()),
            ("host_ram", inst.pms[j].ram_capacity, inst.vms.iter().map(|v| v.ram.unwrap_or(0.0)).collect()),
        ] {
            if let Some(cap) = cap {
                let used: f64 = x.iter().filter(|&&(_, pj)| pj == j).map(|&(i, _)| demand[i]).sum();
                if used > cap + 1e-9 {
                    out.push(violation(family, format!("j={j}: demand {used} exceeds capacity {cap}")));
                }
            }
        }
    }
    for i in 0..n {
        let hosts = x.iter().filter(|&&(vi, _)| vi == i).count();
        if hosts > 1 {
            out.push(violation("single_host", format!("i={i} is on {hosts} PMs")));
        }
        let slots = y.iter().filter(|&&(vi, _, _)| vi == i).count();
        if slots > 1 {
            out.push(violation("single_gpu", format!("i={i} has a GI on {slots} GPUs")));
        }
    }
    for &(i, j) in &x {
        if !y.iter().any(|&(vi, pj, _)| vi == i && pj == j) {
            out.push(violation("host_has_gpu", format!("i={i}, j={j}: x set without any y")));
        }
        if !phi.contains(&j) {
            out.push(violation("host_powered", format!("i={i}, j={j}: PM is powered off")));
        }
    }
    for &(i, j, k) in &y {
        if !x.contains(&(i, j)) {
            out.push(violation("gpu_on_host", format!("i={i}, j={j}, k={k}: y set but x unset")));
        }
        if !gamma.contains(&(j, k)) {
            out.push(violation("gpu_active", format!("i={i}, j={j}, k={k}: GPU is inactive")));
        }
    }
    for &(j, k) in &gamma {
        if !gpu_exists(j, k) {
            out.push(violation("domain", format!("gamma[{j},{k}] references a missing GPU")));
        } else if !y.iter().any(|&(_, pj, gk)| pj == j && gk == k) {
            out.push(violation("active_gpu_used", format!("j={j}, k={k}: active GPU holds no GI")));
        }
    }
    for &j in &phi {
        if j >= m {
            out.push(violation("domain", format!("phi[{j}] references a missing PM")));
        }
    }

    let mut betas: BTreeMap<usize, i64> = BTreeMap::new();
    for g in &sol.gpus {
        let spec = inst.vms[g.vm].profile.spec();
        let size = i64::from(spec.size_blocks);
        let z = i64::from(g.start);
        let at = format!("i={}, j={}, k={}, z={}", g.vm, g.pm, g.gpu, g.start);
        if z % size != 0 {
            out.push(violation("alignment", format!("{at}: not a multiple of g={size}")));
        } else if let Some(&b) = betas.get(&g.vm) {
            if b != z / size {
                out.push(violation("alignment", format!("{at}: conflicting beta")));
            }
        } else {
            betas.insert(g.vm, z / size);
        }
        if g.start > spec.max_start {
            out.push(violation("start_limit", format!("{at}: exceeds s={}", spec.max_start)));
        }
        let tag = inst.pms[g.pm].gpus[g.gpu];
        if tag != spec.hw_tag {
            out.push(violation("hardware_tag", format!("{at}: profile tag {} on GPU tag {tag}", spec.hw_tag)));
        }
    }
    for (a, ga) in sol.gpus.iter().enumerate() {
        for gb in &sol.gpus[a + 1..] {
            if ga.vm == gb.vm || (ga.pm, ga.gpu) != (gb.pm, gb.gpu) {
                continue;
            }
            let ea = BlockSet::extent(ga.start, inst.vms[ga.vm].profile.size());
            let eb = BlockSet::extent(gb.start, inst.vms[gb.vm].profile.size());
            if !ea.is_disjoint(eb) {
                out.push(violation(
                    "overlap",
                    format!("i={}, i'={}, j={}, k={}: GIs overlap", ga.vm, gb.vm, ga.pm, ga.gpu),
                ));
            }
        }
    }

    let expected = sol.compute_objectives(inst);
    for (family, got, want) in [
        ("acceptance_objective", sol.objectives.acceptance, expected.acceptance),
        ("hardware_objective", sol.objectives.hardware, expected.hardware),
        ("migration_objective", sol.objectives.migration, expected.migration),
    ] {
        if (got - want).abs() > 1e-9 {
            out.push(violation(family, format!("reported {got}, assignment gives {want}")));
        }
    }
    out
}

/// Size limits for [`brute_force_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCap {
    pub max_vms: usize,
    pub max_pms: usize,
    pub max_gpus_per_pm: usize,
}

impl Default for SearchCap {
    fn default() -> Self {
        SearchCap {
            max_vms: 5,
            max_pms: 2,
            max_gpus_per_pm: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SolveMode {
    /// Acceptance first, then hardware, then migrations.
    Lexicographic,
    Weighted { w1: f64, w2: f64, w3: f64 },
}

type Choice = Option<(usize, usize, u8)>;

struct Search<'a> {
    inst: &'a IlpInstance,
    mode: SolveMode,
    options: Vec<Vec<(usize, usize, u8, BlockSet)>>,
    suffix_weight: Vec<f64>,
    occupied: Vec<Vec<BlockSet>>,
    gpu_load: Vec<Vec<usize>>,
    pm_load: Vec<usize>,
    cpu: Vec<f64>,
    ram: Vec<f64>,
    choice: Vec<Choice>,
    best: Option<(Objectives, Vec<Choice>)>,
}

impl Search<'_> {
    fn migration_cost(&self, i: usize, c: Choice) -> f64 {
        let delta = self.inst.vms[i].migration_weight;
        if delta == 0.0 {
            return 0.0;
        }
        let prev = self.inst.previous_of(i).map(|p| (p.pm, p.gpu));
        let now = c.map(|(j, k, _)| (j, k));
        let changes = match (prev, now) {
            (None, None) => 0,
            (Some(_), None) | (None, Some(_)) => 2,
            (Some((pj, pk)), Some((j, k))) if pj == j => {
                if pk == k {
                    0
                } else {
                    2
                }
            }
            (Some(_), Some(_)) => 4,
        };
        delta * f64::from(changes)
    }

    /// True when `a` is strictly better than `b`.
    fn better(&self, a: &Objectives, b: &Objectives) -> bool {
        match self.mode {
            SolveMode::Lexicographic => {
                if a.acceptance != b.acceptance {
                    return a.acceptance > b.acceptance;
                }
                if a.hardware != b.hardware {
                    return a.hardware < b.hardware;
                }
                a.migration < b.migration
            }
            SolveMode::Weighted { w1, w2, w3 } => {
                let score = |o: &Objectives| w1 * o.acceptance - w2 * o.hardware - w3 * o.migration;
                score(a) > score(b)
            }
        }
    }

    fn bound_allows(&self, partial: &Objectives, i: usize) -> bool {
        let Some((best, _)) = &self.best else {
            return true;
        };
        let optimistic = Objectives {
            acceptance: partial.acceptance + self.suffix_weight[i],
            ..*partial
        };
        match self.mode {
            SolveMode::Lexicographic => self.better(&optimistic, best),
            SolveMode::Weighted { w1, w2, w3 } if w1 >= 0.0 && w2 >= 0.0 && w3 >= 0.0 => {
                self.better(&optimistic, best)
            }
            SolveMode::Weighted { .. } => true,
        }
    }

    fn dfs(&mut self, i: usize, partial: Objectives) {
        if !self.bound_allows(&partial, i) {
            return;
        }
        if i == self.inst.vms.len() {
            if self.best.as_ref().is_none_or(|(b, _)| self.better(&partial, b)) {
                self.best = Some((partial, self.choice.clone()));
            }
            return;
        }
        let vm = &self.inst.vms[i];
        let (c, r) = (vm.cpu.unwrap_or(0.0), vm.ram.unwrap_or(0.0));
        for o in 0..self.options[i].len() {
            let (j, k, start, ext) = self.options[i][o];
            if !self.occupied[j][k].is_disjoint(ext) {
                continue;
            }
            let pm = &self.inst.pms[j];
            if pm.cpu_capacity.is_some_and(|cap| self.cpu[j] + c > cap + 1e-9)
                || pm.ram_capacity.is_some_and(|cap| self.ram[j] + r > cap + 1e-9)
            {
                continue;
            }
            let mut next = partial;
            next.acceptance += vm.weight;
            if self.pm_load[j] == 0 {
                next.hardware += pm.weight;
            }
            if self.gpu_load[j][k] == 0 {
                next.hardware += pm.weight;
            }
            let choice = Some((j, k, start));
            next.migration += self.migration_cost(i, choice);

            self.occupied[j][k] = self.occupied[j][k].union(ext);
            self.gpu_load[j][k] += 1;
            self.pm_load[j] += 1;
            self.cpu[j] += c;
            self.ram[j] += r;
            self.choice[i] = choice;
            self.dfs(i + 1, next);
            self.choice[i] = None;
            self.cpu[j] -= c;
            self.ram[j] -= r;
            self.pm_load[j] -= 1;
            self.gpu_load[j][k] -= 1;
            self.occupied[j][k] = self.occupied[j][k].difference(ext);
        }
        let mut next = partial;
        next.migration += self.migration_cost(i, None);
        self.dfs(i + 1, next);
    }
}

/// Exhaustive optimum over reject-or-(PM, GPU, legal start) for every VM.
/// Ties keep the first optimum in (PM, GPU, start) order with rejection
/// tried last.
pub fn brute_force_solve(inst: &IlpInstance, mode: SolveMode, cap: SearchCap) -> Result<Solution, IlpError> {
    let widest = inst.pms.iter().map(|p| p.gpus.len()).max().unwrap_or(0);
    if inst.vms.len() > cap.max_vms || inst.pms.len() > cap.max_pms || widest > cap.max_gpus_per_pm {
        return Err(IlpError::TooLarge {
            vms: inst.vms.len(),
            pms: inst.pms.len(),
            gpus: widest,
            cap_vms: cap.max_vms,
            cap_pms: cap.max_pms,
            cap_gpus: cap.max_gpus_per_pm,
        });
    }
    inst.check()?;
    let options = inst
        .vms
        .iter()
        .map(|vm| {
            let spec = vm.profile.spec();
            let mut opts = Vec::new();
            for (j, pm) in inst.pms.iter().enumerate() {
                for (k, &tag) in pm.gpus.iter().enumerate() {
                    if tag != spec.hw_tag {
                        continue;
                    }
                    for &s in spec.start_blocks {
                        opts.push((j, k, s, BlockSet::extent(s, spec.size_blocks)));
                    }
                }
            }
            opts
        })
        .collect();
    let mut suffix_weight = vec![0.0; inst.vms.len() + 1];
    for i in (0..inst.vms.len()).rev() {
        suffix_weight[i] = suffix_weight[i + 1] + inst.vms[i].weight.max(0.0);
    }
    let mut search = Search {
        inst,
        mode,
        options,
        suffix_weight,
        occupied: inst.pms.iter().map(|p| vec![BlockSet::EMPTY; p.gpus.len()]).collect(),
        gpu_load: inst.pms.iter().map(|p| vec![0; p.gpus.len()]).collect(),
        pm_load: vec![0; inst.pms.len()],
        cpu: vec![0.0; inst.pms.len()],
        ram: vec![0.0; inst.pms.len()],
        choice: vec![None; inst.vms.len()],
        best: None,
    };
    search.dfs(0, Objectives::default());
    let (_, choice) = search.best.expect("rejecting every VM is always feasible");
    Ok(Solution::from_placements(inst, &choice))
}

/// Convenience: placements of a profile list on `gpus` A100s of one PM.
pub fn single_pm_instance(profiles: &[Profile], gpus: usize) -> IlpInstance {
    let vms = profiles
        .iter()
        .enumerate()
        .map(|(i, &p)| VmRequest::new(i as VmId, p, 0, 1))
        .collect();
    IlpInstance::new(vms, vec![HostSpec::a100("pm0", gpus)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variable_counts() {
        let model = build_model(&single_pm_instance(&[Profile::Mig1g5gb], 1)).unwrap();
        assert_eq!(model.var_count("x"), 1);
        assert_eq!(model.var_count("y"), 1);
        assert_eq!(model.var_count("alpha"), 0);

        let model = build_model(&single_pm_instance(&[Profile::Mig1g5gb, Profile::Mig2g10gb], 2)).unwrap();
        assert_eq!(model.var_count("alpha"), 4);
        assert_eq!(model.var_count("z"), 4);
        assert_eq!(model.constraint_count(Family::OrderBefore), 4);
        assert_eq!(model.constraint_count(Family::ActiveGpuUsed), 2);
        // Unbounded host resources produce no capacity rows.
        assert_eq!(model.constraint_count(Family::HostCpu), 0);
    }

    #[test]
    fn missing_previous_is_an_error() {
        let mut inst = single_pm_instance(&[Profile::Mig1g5gb], 1);
        inst.vms[0].migration_weight = 1.0;
        assert_eq!(build_model(&inst).unwrap_err(), IlpError::MissingPrevious { vm: 0 });
        inst.previous.insert(0, PreviousPlacement { pm: 0, gpu: 0, start: 6 });
        assert!(build_model(&inst).is_ok());
    }

    #[test]
    fn small_big_m_rejected() {
        let mut inst = single_pm_instance(&[Profile::Mig7g40gb], 1);
        inst.big_m = 7;
        assert_eq!(
            inst.check(),
            Err(IlpError::BigMTooSmall { big_m: 7, required: 8 })
        );
    }

    #[test]
    fn weighted_acceptance_only_objective() {
        let model = build_model(&single_pm_instance(&[Profile::Mig1g5gb, Profile::Mig3g20gb], 1)).unwrap();
        let lp = export_lp(&model, ObjectiveMode::Weighted { w1: 1.0, w2: 0.0, w3: 0.0 });
        let obj = lp.lines().nth(1).unwrap();
        assert_eq!(obj, " obj: x_0_0 + x_1_0");
    }

    #[test]
    fn trivial_export_has_one_binary_x() {
        let model = build_model(&single_pm_instance(&[Profile::Mig1g5gb], 1)).unwrap();
        let lp = export_lp(&model, ObjectiveMode::Acceptance);
        let binary: Vec<&str> = lp
            .split("Binary\n")
            .nth(1)
            .unwrap()
            .split("General\n")
            .next()
            .unwrap()
            .lines()
            .filter(|l| l.trim_start().starts_with("x_"))
            .collect();
        assert_eq!(binary, vec![" x_0_0"]);
        assert!(lp.starts_with("Maximize\n"));
        assert!(lp.ends_with("End\n"));
        assert!(lp.contains(" beta_0 free\n"));
    }

    #[test]
    fn staged_export_fixes_earlier_objectives() {
        let model = build_model(&single_pm_instance(&[Profile::Mig1g5gb], 1)).unwrap();
        let lp = export_lp(&model, ObjectiveMode::Migration { acceptance: 1.0, hardware: 2.0 });
        assert!(lp.starts_with("Minimize\n obj: 0 x_0_0\n"));
        assert!(lp.contains(" fix_acceptance: x_0_0 = 1\n"));
        assert!(lp.contains(" fix_hardware: phi_0 + gamma_0_0 = 2\n"));
    }

    #[test]
    fn table_one_oracle_counts() {
        let lex = SolveMode::Lexicographic;
        let cap = SearchCap::default();
        let small = single_pm_instance(&[Profile::Mig1g5gb; 5], 1);
        assert_eq!(brute_force_solve(&small, lex, cap).unwrap().accepted_count(), 5);
        let two_big = single_pm_instance(&[Profile::Mig4g20gb; 2], 1);
        assert_eq!(brute_force_solve(&two_big, lex, cap).unwrap().accepted_count(), 1);
        let mixed = single_pm_instance(&[Profile::Mig3g20gb, Profile::Mig4g20gb], 1);
        let sol = brute_force_solve(&mixed, lex, cap).unwrap();
        let starts: Vec<u8> = sol.gpus.iter().map(|g| g.start).collect();
        assert_eq!(starts, vec![4, 0]);
    }

    #[test]
    fn oversized_instance_refused() {
        let inst = single_pm_instance(&[Profile::Mig1g5gb; 6], 1);
        assert!(matches!(
            brute_force_solve(&inst, SolveMode::Lexicographic, SearchCap::default()),
            Err(IlpError::TooLarge { vms: 6, .. })
        ));
    }

    #[test]
    fn oracle_minimizes_hardware() {
        let inst = single_pm_instance(&[Profile::Mig3g20gb, Profile::Mig3g20gb], 2);
        let sol = brute_force_solve(&inst, SolveMode::Lexicographic, SearchCap::default()).unwrap();
        assert_eq!(sol.objectives.acceptance, 2.0);
        assert_eq!(sol.objectives.hardware, 2.0);
        assert_eq!(sol.active_gpus.len(), 1);
        assert!(validate(&inst, &sol).is_empty());
    }

    #[test]
    fn oracle_prefers_staying_put() {
        let mut inst = IlpInstance::new(
            vec![VmRequest::new(7, Profile::Mig3g20gb, 0, 1)],
            vec![HostSpec::a100("a", 1), HostSpec::a100("b", 1)],
        );
        inst.vms[0].migration_weight = 1.0;
        inst.previous.insert(7, PreviousPlacement { pm: 1, gpu: 0, start: 0 });
        let sol = brute_force_solve(&inst, SolveMode::Lexicographic, SearchCap::default()).unwrap();
        assert_eq!(sol.hosts, vec![HostAssignment { vm: 0, pm: 1 }]);
        assert_eq!(sol.objectives.migration, 0.0);
    }

    #[test]
    fn validator_reports_families() {
        let inst = single_pm_instance(&[Profile::Mig3g20gb, Profile::Mig4g20gb], 1);
        let mut sol = Solution::from_placements(&inst, &[Some((0, 0, 0)), Some((0, 0, 0))]);
        let families: Vec<&str> = validate(&inst, &sol).iter().map(|v| v.family).collect();
        assert_eq!(families, vec!["overlap"]);

        sol = Solution::from_placements(&inst, &[Some((0, 0, 4)), None]);
        sol.hosts.clear();
        sol.objectives = sol.compute_objectives(&inst);
        let families: Vec<&str> = validate(&inst, &sol).iter().map(|v| v.family).collect();
        assert_eq!(families, vec!["gpu_on_host"]);

        let inst = single_pm_instance(&[Profile::Mig1g10gb], 1);
        let sol = Solution::from_placements(&inst, &[Some((0, 0, 3))]);
        let families: Vec<&str> = validate(&inst, &sol).iter().map(|v| v.family).collect();
        assert_eq!(families, vec!["alignment"]);
    }

    #[test]
    fn validator_checks_activity_and_objectives() {
        let inst = single_pm_instance(&[Profile::Mig1g5gb], 2);
        let mut sol = Solution::from_placements(&inst, &[Some((0, 1, 6))]);
        sol.active_gpus.push(GpuRef { pm: 0, gpu: 0 });
        sol.powered_hosts.clear();
        sol.objectives.acceptance = 3.0;
        let families: Vec<&str> = validate(&inst, &sol).iter().map(|v| v.family).collect();
        assert_eq!(families, vec!["host_powered", "active_gpu_used", "acceptance_objective"]);
    }

    #[test]
    fn zero_deltas_mean_zero_migration() {
        let mut inst = single_pm_instance(&[Profile::Mig1g5gb, Profile::Mig2g10gb], 2);
        inst.previous.insert(0, PreviousPlacement { pm: 0, gpu: 1, start: 2 });
        let sol = Solution::from_placements(&inst, &[Some((0, 0, 6)), Some((0, 0, 4))]);
        assert_eq!(sol.objectives.migration, 0.0);
    }
}
