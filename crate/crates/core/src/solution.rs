//! Solutions of the placement model: extraction from solver values, exact
//! re-verification and the TOML solution report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::{build_model_with, BuildError, BuildOptions, PcnModel, VcSlot};
use crate::ingest::Instance;
use crate::milp::model::{rat, Combo, Rational, Violation};
use crate::milp::{solve_milp, MilpStatus, SolverConfig, SolverError};
use crate::network::{Address, Amount, ChannelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionStatus {
    #[serde(rename = "optimal")]
    Optimal,
    /// The node or time limit of the search was exhausted; the solution is
    /// the best one found so far.
    #[serde(rename = "budget-limit-hit")]
    LimitHit,
    #[serde(rename = "infeasible")]
    Infeasible,
}

impl SolutionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolutionStatus::Optimal => "optimal",
            SolutionStatus::LimitHit => "budget-limit-hit",
            SolutionStatus::Infeasible => "infeasible",
        }
    }
}

/// How a virtual channel is assembled from its parents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VcFamily {
    #[serde(rename = "pc-pc")]
    PcPc,
    #[serde(rename = "pc-vc")]
    PcVc,
    #[serde(rename = "vc-pc")]
    VcPc,
    #[serde(rename = "vc-vc")]
    VcVc,
}

impl VcFamily {
    pub fn from_combo(combo: Option<Combo>) -> Self {
        match combo {
            None => VcFamily::PcPc,
            Some(Combo::Pv) => VcFamily::PcVc,
            Some(Combo::Vp) => VcFamily::VcPc,
            Some(Combo::Vv) => VcFamily::VcVc,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VcFamily::PcPc => "pc-pc",
            VcFamily::PcVc => "pc-vc",
            VcFamily::VcPc => "vc-pc",
            VcFamily::VcVc => "vc-vc",
        }
    }

    pub fn combo(self) -> Option<Combo> {
        match self {
            VcFamily::PcPc => None,
            VcFamily::PcVc => Some(Combo::Pv),
            VcFamily::VcPc => Some(Combo::Vp),
            VcFamily::VcVc => Some(Combo::Vv),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteHop {
    pub from: Address,
    pub to: Address,
    pub kind: ChannelKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionOutcome {
    pub seq: usize,
    pub source: Address,
    pub receiver: Address,
    pub amount: Amount,
    pub success: bool,
    pub routing_cost: Amount,
    #[serde(default)]
    pub route: Vec<RouteHop>,
}

/// A virtual channel `from -> to` opened by `from` over `via`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedVc {
    pub from: Address,
    pub to: Address,
    pub via: Address,
    pub level: usize,
    pub family: VcFamily,
    pub capacity: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCost {
    pub source: Address,
    pub receiver: Address,
    pub cost: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolutionStatus,
    pub objective: Amount,
    pub creation_cost: Amount,
    /// Routing cost per (source, receiver) pair with at least one successful
    /// transaction.
    #[serde(default)]
    pub routing_costs: Vec<PairCost>,
    /// In `seq` order.
    #[serde(default)]
    pub transactions: Vec<TransactionOutcome>,
    /// Ascending by level, then by endpoints.
    #[serde(default)]
    pub vcs: Vec<PlacedVc>,
}

impl Solution {
    pub fn total_routing_cost(&self) -> Amount {
        self.routing_costs.iter().map(|c| c.cost).sum()
    }

    pub fn successful(&self) -> impl Iterator<Item = &TransactionOutcome> {
        self.transactions.iter().filter(|t| t.success)
    }

    /// Solution that routes nothing and opens nothing.
    pub fn empty(inst: &Instance, status: SolutionStatus) -> Self {
        let transactions = inst
            .demand
            .transactions()
            .into_iter()
            .map(|t| TransactionOutcome {
                seq: t.seq,
                source: t.source.clone(),
                receiver: t.receiver.clone(),
                amount: t.amount,
                success: false,
                routing_cost: 0,
                route: Vec::new(),
            })
            .collect();
        Self { status, objective: 0, creation_cost: 0, routing_costs: Vec::new(), transactions, vcs: Vec::new() }
    }

    pub fn to_report(&self) -> String {
        toml::to_string(self).expect("solution report serializes")
    }

    pub fn from_report(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("binary variable {name} has non-integral value {value}")]
    FractionalBinary { name: String, value: f64 },
    #[error("rounded solution violates the model: {}", join(.0))]
    InconsistentRounding(Vec<Violation>),
    #[error("solution does not match the model: {0}")]
    Mismatch(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("the relaxation is unbounded")]
    Unbounded,
}

#[derive(Debug, Clone, Default)]
pub struct OptimizeConfig {
    pub build: BuildOptions,
    pub solver: SolverConfig,
}

/// Outcome of [`optimize`], with search statistics.
#[derive(Debug, Clone)]
pub struct Optimized {
    pub solution: Solution,
    pub nodes: u64,
    pub model: PcnModel,
}

pub fn optimize(inst: &Instance, cfg: &OptimizeConfig) -> Result<Optimized, OptimizeError> {
    let model = build_model_with(inst, &cfg.build)?;
    let outcome = solve_milp(&model.model, &cfg.solver)?;
    let solution = match (outcome.status, outcome.values()) {
        (MilpStatus::Unbounded, _) => return Err(OptimizeError::Unbounded),
        (MilpStatus::Optimal, Some(values)) => extract_solution(&model, values, &cfg.solver, SolutionStatus::Optimal)?,
        (s, Some(values)) if s.hit_limit() => {
            extract_solution(&model, values, &cfg.solver, SolutionStatus::LimitHit)?
        }
        (s, None) if s.hit_limit() => Solution::empty(inst, SolutionStatus::LimitHit),
        _ => Solution::empty(inst, SolutionStatus::Infeasible),
    };
    Ok(Optimized { solution, nodes: outcome.nodes, model })
}

/// Rounds solver values to a solution, normalizes it (simple routes,
/// smallest feasible integer capacities) and re-checks it exactly.
pub fn extract_solution(
    pm: &PcnModel,
    values: &[f64],
    cfg: &SolverConfig,
    status: SolutionStatus,
) -> Result<Solution, ExtractError> {
    let n = pm.n();
    let binary = |id: crate::milp::VarId| -> Result<bool, ExtractError> {
        let v = values[id.0];
        if (v - 1.0).abs() <= cfg.integrality_tol {
            Ok(true)
        } else if v.abs() <= cfg.integrality_tol {
            Ok(false)
        } else {
            Err(ExtractError::FractionalBinary { name: pm.model.vars[id.0].symbol.name(), value: v })
        }
    };
    for (id, var) in pm.model.vars.iter().enumerate() {
        if var.domain.is_binary() {
            binary(crate::milp::VarId(id))?;
        }
    }

    let mut routes: Vec<Option<Vec<(usize, usize, ChannelKind)>>> = Vec::new();
    for (tx, t) in pm.transactions.iter().enumerate() {
        if !binary(pm.tx_vars[tx].x)? {
            routes.push(None);
            continue;
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                if binary(pm.pt(tx, i, j))? {
                    edges.push((i, j, ChannelKind::Payment));
                }
                if binary(pm.vt(tx, i, j))? {
                    edges.push((i, j, ChannelKind::Virtual));
                }
            }
        }
        let route = walk(t.s, t.r, edges).ok_or_else(|| {
            ExtractError::Mismatch(format!("no route from {} to {} in the usage of transaction {}", t.s, t.r, t.seq))
        })?;
        routes.push(Some(route));
    }
    let open: Vec<VcSlot> = pm.vcs.iter().filter(|v| values[v.exist.0] > 0.5).copied().collect();

    let solution = assemble(pm, &routes, &open, status);
    let assignment = assignment_from_solution(pm, &solution)?;
    let violations = pm.model.check_assignment(&assignment);
    if !violations.is_empty() {
        return Err(ExtractError::InconsistentRounding(violations));
    }
    Ok(solution)
}

/// Follows used edges from `s` until `r`, cutting out any cycle on the way.
fn walk(s: usize, r: usize, mut edges: Vec<(usize, usize, ChannelKind)>) -> Option<Vec<(usize, usize, ChannelKind)>> {
    let mut path: Vec<(usize, usize, ChannelKind)> = Vec::new();
    let mut cur = s;
    while cur != r {
        let pos = edges.iter().position(|e| e.0 == cur)?;
        let e = edges.remove(pos);
        cur = e.1;
        path.push(e);
        if let Some(back) = path.iter().position(|p| p.0 == cur) {
            path.truncate(back);
        }
    }
    Some(path)
}

/// Smallest integer capacities that carry the routed flow and, when parent
/// capacity is reserved, the capacities of the children built on each channel.
pub(crate) fn minimal_capacities(
    pm: &PcnModel,
    open: &[VcSlot],
    routed: &BTreeMap<(usize, usize), Amount>,
) -> Vec<Amount> {
    let mut order: Vec<usize> = (0..open.len()).collect();
    order.sort_by_key(|&o| std::cmp::Reverse(open[o].level));
    let mut caps = vec![0; open.len()];
    for &o in &order {
        let v = open[o];
        let base = routed.get(&(v.i, v.j)).copied().unwrap_or(0);
        let children = open.iter().zip(&caps).filter(|(c, _)| c.draws_on(false, v.i, v.j)).map(|(_, &cap)| cap);
        caps[o] = match pm.options.parent_capacity {
            crate::builder::ParentCapacity::Reserved => base + children.sum::<Amount>(),
            crate::builder::ParentCapacity::Shared => children.fold(base, Amount::max),
        };
    }
    caps
}

fn assemble(
    pm: &PcnModel,
    routes: &[Option<Vec<(usize, usize, ChannelKind)>>],
    open: &[VcSlot],
    status: SolutionStatus,
) -> Solution {
    let c = &pm.constants;
    let node = |i: usize| c.nodes[i].clone();
    let mut routed: BTreeMap<(usize, usize), Amount> = BTreeMap::new();
    let mut transactions = Vec::new();
    let mut pair_costs: BTreeMap<(usize, usize), Amount> = BTreeMap::new();
    for (t, route) in pm.transactions.iter().zip(routes) {
        let mut outcome = TransactionOutcome {
            seq: t.seq,
            source: node(t.s),
            receiver: node(t.r),
            amount: t.amount,
            success: route.is_some(),
            routing_cost: 0,
            route: Vec::new(),
        };
        if let Some(route) = route {
            for &(i, j, kind) in route {
                outcome.routing_cost += match kind {
                    ChannelKind::Payment => c.pc_hop_cost(i, j, t.r, t.amount),
                    ChannelKind::Virtual => {
                        *routed.entry((i, j)).or_default() += t.amount;
                        c.vc_hop_cost(i, j, t.r, t.amount)
                    }
                };
                outcome.route.push(RouteHop { from: node(i), to: node(j), kind });
            }
            *pair_costs.entry((t.s, t.r)).or_default() += outcome.routing_cost;
        }
        transactions.push(outcome);
    }
    transactions.sort_by_key(|t| t.seq);

    let caps = minimal_capacities(pm, open, &routed);
    let mut vcs: Vec<PlacedVc> = open
        .iter()
        .zip(&caps)
        .map(|(v, &capacity)| PlacedVc {
            from: node(v.i),
            to: node(v.j),
            via: node(v.k),
            level: v.level,
            family: VcFamily::from_combo(v.combo),
            capacity,
        })
        .collect();
    vcs.sort_by(|a, b| (a.level, &a.from, &a.to).cmp(&(b.level, &b.from, &b.to)));

    let creation_cost = open.iter().map(|v| c.vc_creation_cost(v.i, v.j)).sum();
    let objective = transactions.iter().filter(|t| t.success).map(|t| t.amount).sum();
    let routing_costs = pair_costs
        .into_iter()
        .map(|((s, r), cost)| PairCost { source: node(s), receiver: node(r), cost })
        .collect();
    Solution { status, objective, creation_cost, routing_costs, transactions, vcs }
}

/// Exact model assignment encoded by a solution. Fails if the solution names
/// nodes, transactions or channels the model does not have.
pub fn assignment_from_solution(pm: &PcnModel, sol: &Solution) -> Result<Vec<Rational>, ExtractError> {
    let c = &pm.constants;
    let idx = |a: &Address| c.index_of(a).ok_or_else(|| ExtractError::Mismatch(format!("unknown node {a}")));
    let mut values = vec![rat(0); pm.model.vars.len()];
    if sol.transactions.len() != pm.transactions.len() {
        return Err(ExtractError::Mismatch(format!(
            "{} transactions in the solution, {} in the model",
            sol.transactions.len(),
            pm.transactions.len()
        )));
    }
    for outcome in &sol.transactions {
        let tx = pm
            .transactions
            .iter()
            .position(|t| t.seq == outcome.seq)
            .ok_or_else(|| ExtractError::Mismatch(format!("unknown transaction {}", outcome.seq)))?;
        let t = &pm.transactions[tx];
        if (idx(&outcome.source)?, idx(&outcome.receiver)?, outcome.amount) != (t.s, t.r, t.amount) {
            return Err(ExtractError::Mismatch(format!("transaction {} differs from the instance", t.seq)));
        }
        if !outcome.success {
            continue;
        }
        values[pm.tx_vars[tx].x.0] = rat(1);
        for hop in &outcome.route {
            let (i, j) = (idx(&hop.from)?, idx(&hop.to)?);
            if i == j {
                return Err(ExtractError::Mismatch(format!("hop from {} to itself", hop.from)));
            }
            let var = match hop.kind {
                ChannelKind::Payment => pm.pt(tx, i, j),
                ChannelKind::Virtual => pm.vt(tx, i, j),
            };
            values[var.0] += rat(1);
        }
    }
    for vc in &sol.vcs {
        let (i, j, k) = (idx(&vc.from)?, idx(&vc.to)?, idx(&vc.via)?);
        let slot = pm
            .vcs
            .iter()
            .find(|v| (v.i, v.j, v.k, v.level, v.combo) == (i, j, k, vc.level, vc.family.combo()))
            .ok_or_else(|| ExtractError::Mismatch(format!("no model slot for virtual channel {} -> {}", vc.from, vc.to)))?;
        values[slot.exist.0] += rat(1);
        values[slot.cap.0] = rat(vc.capacity as i128);
    }
    Ok(values)
}

/// Exact check of a solution against the model, including that its reported
/// objective and costs match its routes and channels.
pub fn verify_solution(pm: &PcnModel, sol: &Solution) -> Vec<Violation> {
    let values = match assignment_from_solution(pm, sol) {
        Ok(v) => v,
        Err(e) => return vec![Violation { what: "solution".into(), detail: e.to_string() }],
    };
    let mut out = pm.model.check_assignment(&values);
    let objective = pm.model.objective_value(&values);
    if objective != rat(sol.objective as i128) {
        out.push(Violation { what: "objective".into(), detail: format!("reported {}, model gives {objective}", sol.objective) });
    }
    let routes: Vec<_> = pm
        .transactions
        .iter()
        .map(|t| {
            sol.transactions.iter().find(|o| o.seq == t.seq).filter(|o| o.success).map(|o| {
                o.route
                    .iter()
                    .map(|h| (pm.constants.index_of(&h.from).unwrap(), pm.constants.index_of(&h.to).unwrap(), h.kind))
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    let open: Vec<VcSlot> = pm.vcs.iter().filter(|v| values[v.exist.0] == rat(1)).copied().collect();
    let recomputed = assemble(pm, &routes, &open, sol.status);
    if recomputed.creation_cost != sol.creation_cost || recomputed.routing_costs != sol.routing_costs {
        out.push(Violation { what: "costs".into(), detail: "reported costs differ from the routes and channels".into() });
    }
    out
}
