//! Exhaustive optimizer for tiny instances, used as ground truth for the
//! MILP pipeline.
//!
//! The search enumerates, per transaction, "unsuccessful" or one simple path
//! whose hops are payment or virtual channels. For every combination of
//! routes it enumerates the sets of virtual channels that provide the
//! virtual hops (each channel either carries traffic or is an ancestor of
//! one that does; any other channel only adds cost and load), sets every
//! capacity to the smallest value the traffic and the channels built on top
//! need, and checks capacities and the budget in integer arithmetic.
//! Everything is computed from the instance directly; the model builder is
//! only used to audit the final answer.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::builder::{build_model_with, effective_max_level, BuildError, BuildOptions, ParentCapacity};
use crate::ingest::Instance;
use crate::milp::model::Violation;
use crate::network::{Address, Amount, ChannelKind, FeeParams};
use crate::solution::{verify_solution, PairCost, PlacedVc, RouteHop, Solution, SolutionStatus, TransactionOutcome, VcFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleEnvelope {
    pub max_nodes: usize,
    pub max_transactions: usize,
    pub max_level: usize,
    pub max_path_len: usize,
}

impl Default for OracleEnvelope {
    fn default() -> Self {
        Self { max_nodes: 4, max_transactions: 3, max_level: 1, max_path_len: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleConfig {
    pub envelope: OracleEnvelope,
    pub parent_capacity: ParentCapacity,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance outside the oracle envelope: {0}")]
    EnvelopeExceeded(String),
    #[error("oracle optimum fails the model check: {0:?}")]
    SelfAudit(Vec<Violation>),
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// A virtual channel `i -> j` over `k`, by node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VcChoice {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub level: usize,
    pub family: VcFamily,
}

impl VcChoice {
    fn first_is_pc(&self) -> bool {
        matches!(self.family, VcFamily::PcPc | VcFamily::PcVc)
    }

    fn second_is_pc(&self) -> bool {
        matches!(self.family, VcFamily::PcPc | VcFamily::VcPc)
    }

    /// Virtual parents as ordered pairs.
    fn vc_parents(&self) -> impl Iterator<Item = (usize, usize)> {
        let first = (!self.first_is_pc()).then_some((self.i, self.k));
        let second = (!self.second_is_pc()).then_some((self.k, self.j));
        first.into_iter().chain(second)
    }

    /// Payment parents as ordered pairs, oriented from the funding side.
    fn pc_parents(&self) -> impl Iterator<Item = (usize, usize)> {
        let first = self.first_is_pc().then_some((self.i, self.k));
        let second = self.second_is_pc().then_some((self.k, self.j));
        first.into_iter().chain(second)
    }
}

/// Remaining budget and known loads while covering a route combination.
struct CoverLimits {
    budget_left: Amount,
    /// traffic routed directly over each virtual pair
    routed: HashMap<(usize, usize), Amount>,
    /// payment channel load: direct traffic plus traffic of virtual
    /// children chosen so far
    pc_used: HashMap<(usize, usize), Amount>,
}

/// One hop of a route by node index.
pub type Hop = (usize, usize, ChannelKind);

struct Tx {
    seq: usize,
    s: usize,
    r: usize,
    amount: Amount,
}

/// Instance data in index form, read straight from the instance.
pub struct Oracle {
    nodes: Vec<Address>,
    /// sending side balance and fees of each directed payment channel
    pcs: HashMap<(usize, usize), (Amount, FeeParams)>,
    vc_fees: Vec<FeeParams>,
    vc_creation: Vec<Amount>,
    max_cap: Amount,
    budget: Amount,
    max_level: usize,
    txs: Vec<Tx>,
    parent_capacity: ParentCapacity,
    max_path_len: usize,
}

impl Oracle {
    pub fn new(inst: &Instance, cfg: &OracleConfig) -> Result<Self, OracleError> {
        let env = cfg.envelope;
        let nodes: Vec<Address> = inst.network.nodes().iter().cloned().collect();
        let n = nodes.len();
        let max_level = effective_max_level(inst);
        let exceeded = |what: String| Err(OracleError::EnvelopeExceeded(what));
        if n > env.max_nodes {
            return exceeded(format!("{n} nodes, at most {} supported", env.max_nodes));
        }
        if inst.demand.len() > env.max_transactions {
            return exceeded(format!("{} transactions, at most {} supported", inst.demand.len(), env.max_transactions));
        }
        if max_level > env.max_level {
            return exceeded(format!("recursion level {max_level}, at most {} supported", env.max_level));
        }
        if n > env.max_path_len + 1 {
            return exceeded(format!("paths over {n} nodes exceed the path length limit {}", env.max_path_len));
        }
        let index = |a: &Address| nodes.binary_search(a).expect("instance node");
        let mut pcs = HashMap::new();
        for c in inst.network.payment_channels() {
            let (a, b) = (index(&c.id.u1), index(&c.id.u2));
            pcs.insert((a, b), (c.balance_1, c.fees_1));
            pcs.insert((b, a), (c.balance_2, c.fees_2));
        }
        let mut vc_fees = vec![FeeParams::ZERO; n * n];
        let mut vc_creation = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                let p = inst.vc_params(&nodes[i], &nodes[j]);
                vc_fees[i * n + j] = p.fees_1;
                vc_creation[i * n + j] = p.creation_cost;
            }
        }
        let max_cap = pcs.values().map(|(cap, _)| *cap).max().unwrap_or(0);
        let txs = inst
            .demand
            .transactions()
            .into_iter()
            .map(|t| Tx { seq: t.seq, s: index(&t.source), r: index(&t.receiver), amount: t.amount })
            .collect();
        Ok(Self {
            nodes,
            pcs,
            vc_fees,
            vc_creation,
            max_cap,
            budget: inst.budget,
            max_level,
            txs,
            parent_capacity: cfg.parent_capacity,
            max_path_len: env.max_path_len,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    fn has_pc(&self, i: usize, j: usize) -> bool {
        self.pcs.contains_key(&(i, j))
    }

    fn pcap(&self, i: usize, j: usize) -> Amount {
        self.pcs.get(&(i, j)).map_or(0, |(cap, _)| *cap)
    }

    fn hop_cost(&self, hop: Hop, r: usize, amount: Amount) -> Amount {
        let (i, j, kind) = hop;
        if j == r {
            return 0;
        }
        match kind {
            ChannelKind::Payment => self.pcs[&(i, j)].1.hop_fee(amount),
            ChannelKind::Virtual => self.vc_fees[i * self.n() + j].hop_fee(amount),
        }
    }

    /// Per transaction: `None` (unsuccessful) followed by every simple path
    /// from source to receiver with at most `max_path_len` hops, each hop a
    /// payment channel or a virtual channel. Paths are ordered by length,
    /// then nodes, then hop kinds.
    pub fn candidate_routes(&self) -> Vec<Vec<Option<Vec<Hop>>>> {
        let buildable = self.buildable_pairs();
        let n = self.n();
        self.txs
            .iter()
            .map(|tx| {
                let mut node_paths = Vec::new();
                let mut path = vec![tx.s];
                self.simple_paths(tx.r, &mut path, &mut node_paths);
                node_paths.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
                let mut routes = vec![None];
                for nodes in node_paths {
                    let hops = nodes.len() - 1;
                    for mask in 0u32..1 << hops {
                        let route: Vec<Hop> = (0..hops)
                            .map(|h| {
                                let kind = if mask >> (hops - 1 - h) & 1 == 1 { ChannelKind::Virtual } else { ChannelKind::Payment };
                                (nodes[h], nodes[h + 1], kind)
                            })
                            .collect();
                        let usable = route.iter().all(|&(i, j, kind)| match kind {
                            ChannelKind::Payment => self.has_pc(i, j) && self.pcap(i, j) >= tx.amount,
                            ChannelKind::Virtual => buildable[i * n + j] && self.max_cap >= tx.amount,
                        });
                        if usable {
                            routes.push(Some(route));
                        }
                    }
                }
                routes
            })
            .collect()
    }

    fn simple_paths(&self, r: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let cur = *path.last().expect("non-empty path");
        if cur == r {
            out.push(path.clone());
            return;
        }
        if path.len() > self.max_path_len {
            return;
        }
        for next in 0..self.n() {
            if !path.contains(&next) {
                path.push(next);
                self.simple_paths(r, path, out);
                path.pop();
            }
        }
    }

    /// All ways to build a virtual channel `i -> j`, given which other pairs
    /// may supply virtual parents.
    fn slot_options(&self, i: usize, j: usize) -> Vec<VcChoice> {
        let mut out = Vec::new();
        for level in 0..=self.max_level {
            for k in (0..self.n()).filter(|&k| k != i && k != j) {
                let families: &[VcFamily] =
                    if level == 0 { &[VcFamily::PcPc] } else { &[VcFamily::PcVc, VcFamily::VcPc, VcFamily::VcVc] };
                for &family in families {
                    let c = VcChoice { i, j, k, level, family };
                    if c.pc_parents().all(|(a, b)| self.has_pc(a, b)) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    /// Every set of virtual channels that contains a channel for each
    /// required pair and all virtual ancestors of those channels, and
    /// nothing else.
    pub fn covering_sets(&self, required: &BTreeSet<(usize, usize)>) -> Vec<Vec<VcChoice>> {
        let limits = CoverLimits { budget_left: Amount::MAX, routed: HashMap::new(), pc_used: HashMap::new() };
        self.covering_sets_within(required, limits)
    }

    /// Like [`Oracle::covering_sets`], skipping sets that are certain to
    /// fail: creation costs beyond the remaining budget, or traffic routed
    /// over virtual channels that overloads a payment parent.
    fn covering_sets_within(&self, required: &BTreeSet<(usize, usize)>, mut limits: CoverLimits) -> Vec<Vec<VcChoice>> {
        let mut out = Vec::new();
        let pending = required.iter().map(|&p| (p, self.max_level)).collect();
        self.cover(pending, &mut BTreeMap::new(), &mut limits, &mut out);
        out
    }

    /// `pending` maps each pair still to be built to the highest level it
    /// may take.
    fn cover(
        &self,
        mut pending: BTreeMap<(usize, usize), usize>,
        chosen: &mut BTreeMap<(usize, usize), VcChoice>,
        limits: &mut CoverLimits,
        out: &mut Vec<Vec<VcChoice>>,
    ) {
        let Some(((i, j), max_level)) = pending.pop_first() else {
            out.push(chosen.values().copied().collect());
            return;
        };
        let creation = self.vc_creation[i * self.n() + j];
        if creation > limits.budget_left {
            return;
        }
        let routed = limits.routed.get(&(i, j)).copied().unwrap_or(0);
        'options: for option in self.slot_options(i, j).into_iter().filter(|c| c.level <= max_level) {
            let mut next = pending.clone();
            for p in option.vc_parents() {
                match chosen.get(&p) {
                    Some(parent) if parent.level >= option.level => continue 'options,
                    Some(_) => {}
                    None => {
                        let bound = next.entry(p).or_insert(option.level - 1);
                        *bound = (*bound).min(option.level - 1);
                    }
                }
            }
            let parents: Vec<(usize, usize)> = option.pc_parents().collect();
            if parents.iter().any(|&p| limits.pc_used.get(&p).copied().unwrap_or(0) + routed > self.pcap(p.0, p.1)) {
                continue;
            }
            for p in &parents {
                *limits.pc_used.entry(*p).or_default() += routed;
            }
            limits.budget_left -= creation;
            chosen.insert((i, j), option);
            self.cover(next, chosen, limits, out);
            chosen.remove(&(i, j));
            limits.budget_left += creation;
            for p in &parents {
                *limits.pc_used.get_mut(p).expect("added above") -= routed;
            }
        }
    }

    /// Pairs that can carry a virtual channel at some level up to the
    /// maximum, indexed `i * n + j`.
    fn buildable_pairs(&self) -> Vec<bool> {
        let n = self.n();
        let mut level_of: Vec<Option<usize>> = vec![None; n * n];
        for level in 0..=self.max_level {
            let snapshot = level_of.clone();
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    if level_of[i * n + j].is_some() {
                        continue;
                    }
                    let ok = self.slot_options(i, j).into_iter().any(|c| {
                        c.level == level && c.vc_parents().all(|(a, b)| snapshot[a * n + b].is_some_and(|l| l < level))
                    });
                    if ok {
                        level_of[i * n + j] = Some(level);
                    }
                }
            }
        }
        level_of.into_iter().map(|l| l.is_some()).collect()
    }

    /// Checks one candidate and, if it is feasible, returns it as a solution
    /// with minimal capacities.
    pub fn evaluate(&self, vcs: &[VcChoice], routes: &[Option<Vec<Hop>>]) -> Option<Solution> {
        let n = self.n();
        let mut by_pair: BTreeMap<(usize, usize), VcChoice> = BTreeMap::new();
        for &c in vcs {
            let structural = c.i != c.j
                && c.k != c.i
                && c.k != c.j
                && c.level <= self.max_level
                && (c.level == 0) == (c.family == VcFamily::PcPc)
                && c.pc_parents().all(|(a, b)| self.has_pc(a, b));
            if !structural || by_pair.insert((c.i, c.j), c).is_some() {
                return None;
            }
        }
        for c in vcs {
            if !c.vc_parents().all(|p| by_pair.get(&p).is_some_and(|parent| parent.level < c.level)) {
                return None;
            }
        }

        let mut pc_load: BTreeMap<(usize, usize), Amount> = BTreeMap::new();
        let mut vc_load: BTreeMap<(usize, usize), Amount> = BTreeMap::new();
        let mut routing: Amount = 0;
        let mut outcomes = Vec::new();
        let mut pair_costs: BTreeMap<(usize, usize), Amount> = BTreeMap::new();
        for (tx, route) in self.txs.iter().zip(routes) {
            let mut outcome = TransactionOutcome {
                seq: tx.seq,
                source: self.nodes[tx.s].clone(),
                receiver: self.nodes[tx.r].clone(),
                amount: tx.amount,
                success: route.is_some(),
                routing_cost: 0,
                route: Vec::new(),
            };
            if let Some(route) = route {
                let mut visited = vec![tx.s];
                let mut cur = tx.s;
                for &hop in route {
                    let (i, j, kind) = hop;
                    if i != cur || visited.contains(&j) {
                        return None;
                    }
                    visited.push(j);
                    cur = j;
                    let load = match kind {
                        ChannelKind::Payment if self.has_pc(i, j) => pc_load.entry((i, j)).or_default(),
                        ChannelKind::Virtual if by_pair.contains_key(&(i, j)) => vc_load.entry((i, j)).or_default(),
                        _ => return None,
                    };
                    *load += tx.amount;
                    outcome.routing_cost += self.hop_cost(hop, tx.r, tx.amount);
                    outcome.route.push(RouteHop { from: self.nodes[i].clone(), to: self.nodes[j].clone(), kind });
                }
                if cur != tx.r || route.is_empty() {
                    return None;
                }
                routing += outcome.routing_cost;
                *pair_costs.entry((tx.s, tx.r)).or_default() += outcome.routing_cost;
            }
            outcomes.push(outcome);
        }

        // capacities from the top level down
        let mut order: Vec<VcChoice> = by_pair.values().copied().collect();
        order.sort_by_key(|c| std::cmp::Reverse(c.level));
        let mut caps: BTreeMap<(usize, usize), Amount> = BTreeMap::new();
        for c in &order {
            let children = order
                .iter()
                .filter(|child| child.vc_parents().any(|p| p == (c.i, c.j)))
                .map(|child| caps[&(child.i, child.j)]);
            let routed = vc_load.get(&(c.i, c.j)).copied().unwrap_or(0);
            let cap = match self.parent_capacity {
                ParentCapacity::Reserved => routed + children.sum::<Amount>(),
                ParentCapacity::Shared => children.fold(routed, Amount::max),
            };
            if cap > self.max_cap || c.pc_parents().any(|(a, b)| cap > self.pcap(a, b)) {
                return None;
            }
            caps.insert((c.i, c.j), cap);
        }
        for (&(i, j), &(pcap, _)) in &self.pcs {
            let lent: Amount =
                order.iter().filter(|c| c.pc_parents().any(|p| p == (i, j))).map(|c| caps[&(c.i, c.j)]).sum();
            if pc_load.get(&(i, j)).copied().unwrap_or(0) + lent > pcap {
                return None;
            }
        }
        let creation: Amount = by_pair.keys().map(|&(i, j)| self.vc_creation[i * n + j]).sum();
        if creation + routing > self.budget {
            return None;
        }

        let mut placed: Vec<PlacedVc> = by_pair
            .values()
            .map(|c| PlacedVc {
                from: self.nodes[c.i].clone(),
                to: self.nodes[c.j].clone(),
                via: self.nodes[c.k].clone(),
                level: c.level,
                family: c.family,
                capacity: caps[&(c.i, c.j)],
            })
            .collect();
        placed.sort_by(|a, b| (a.level, &a.from, &a.to).cmp(&(b.level, &b.from, &b.to)));
        let objective = outcomes.iter().filter(|o| o.success).map(|o| o.amount).sum();
        Some(Solution {
            status: SolutionStatus::Optimal,
            objective,
            creation_cost: creation,
            routing_costs: pair_costs
                .into_iter()
                .map(|((s, r), cost)| PairCost { source: self.nodes[s].clone(), receiver: self.nodes[r].clone(), cost })
                .collect(),
            transactions: outcomes,
            vcs: placed,
        })
    }

    /// Best solution: highest objective, then the earliest candidate in
    /// enumeration order.
    pub fn optimize(&self) -> Solution {
        let routes = self.candidate_routes();
        let t = self.txs.len();
        let mut subsets: Vec<u32> = (0u32..1 << t).collect();
        let value = |mask: u32| -> Amount { (0..t).filter(|&x| mask >> x & 1 == 1).map(|x| self.txs[x].amount).sum() };
        subsets.sort_by_key(|&m| (std::cmp::Reverse(value(m)), m));
        for mask in subsets {
            let options: Vec<&[Option<Vec<Hop>>]> = (0..t)
                .map(|x| if mask >> x & 1 == 1 { &routes[x][1..] } else { &routes[x][..1] })
                .collect();
            if options.iter().any(|o| o.is_empty()) {
                continue;
            }
            let mut cursor = vec![0; t];
            loop {
                let combo: Vec<Option<Vec<Hop>>> = (0..t).map(|x| options[x][cursor[x]].clone()).collect();
                if let Some(sol) = self.try_routes(&combo) {
                    return sol;
                }
                if !advance(&mut cursor, &options) {
                    break;
                }
            }
        }
        unreachable!("routing nothing and opening nothing is always feasible")
    }

    fn try_routes(&self, routes: &[Option<Vec<Hop>>]) -> Option<Solution> {
        // payment channel loads and fees alone already rule out most combinations
        let mut pc_used: HashMap<(usize, usize), Amount> = HashMap::new();
        let mut routed: HashMap<(usize, usize), Amount> = HashMap::new();
        let mut fees: Amount = 0;
        for (tx, route) in self.txs.iter().zip(routes) {
            for &hop in route.iter().flatten() {
                fees += self.hop_cost(hop, tx.r, tx.amount);
                let load = match hop.2 {
                    ChannelKind::Payment => pc_used.entry((hop.0, hop.1)).or_default(),
                    ChannelKind::Virtual => routed.entry((hop.0, hop.1)).or_default(),
                };
                *load += tx.amount;
            }
        }
        let n = self.n();
        let creation: Amount = routed.keys().map(|&(i, j)| self.vc_creation[i * n + j]).sum();
        if fees + creation > self.budget
            || pc_used.iter().any(|(&(i, j), &l)| l > self.pcap(i, j))
            || routed.values().any(|&l| l > self.max_cap)
        {
            return None;
        }
        let required: BTreeSet<(usize, usize)> = routed.keys().copied().collect();
        let limits = CoverLimits { budget_left: self.budget - fees, routed, pc_used };
        self.covering_sets_within(&required, limits).iter().find_map(|vcs| self.evaluate(vcs, routes))
    }
}

/// Steps a mixed-radix counter, last digit fastest. Returns false after the
/// last combination.
fn advance<T>(cursor: &mut [usize], options: &[&[T]]) -> bool {
    for x in (0..cursor.len()).rev() {
        cursor[x] += 1;
        if cursor[x] < options[x].len() {
            return true;
        }
        cursor[x] = 0;
    }
    false
}

/// Optimum of the instance by exhaustive search, audited against the model.
pub fn brute_force_optimize(inst: &Instance, cfg: &OracleConfig) -> Result<Solution, OracleError> {
    let oracle = Oracle::new(inst, cfg)?;
    let sol = oracle.optimize();
    let opts = BuildOptions { parent_capacity: cfg.parent_capacity, max_vars: None };
    let pm = build_model_with(inst, &opts)?;
    let violations = verify_solution(&pm, &sol);
    if !violations.is_empty() {
        return Err(OracleError::SelfAudit(violations));
    }
    Ok(sol)
}

/// Lazily yields every structurally valid set of virtual channels of the
/// instance: parents present, parents of lower level, at most one channel
/// per ordered pair. Sets are produced level by level, pair by pair.
pub fn enumerate_vc_sets(inst: &Instance, cfg: &OracleConfig) -> Result<VcSetIter, OracleError> {
    let oracle = Oracle::new(inst, cfg)?;
    let n = oracle.n();
    let decisions = (0..=oracle.max_level)
        .flat_map(|q| (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (q, i, j))))
        .collect();
    Ok(VcSetIter { oracle, decisions, cursor: Vec::new(), chosen: Vec::new(), started: false })
}

pub struct VcSetIter {
    oracle: Oracle,
    /// (level, i, j) in the order decisions are made
    decisions: Vec<(usize, usize, usize)>,
    cursor: Vec<usize>,
    chosen: Vec<Option<VcChoice>>,
    started: bool,
}

impl VcSetIter {
    fn options(&self, depth: usize) -> Vec<Option<VcChoice>> {
        let (q, i, j) = self.decisions[depth];
        let prior: Vec<VcChoice> = self.chosen[..depth].iter().flatten().copied().collect();
        let mut out = vec![None];
        if prior.iter().any(|c| (c.i, c.j) == (i, j)) {
            return out;
        }
        for c in self.oracle.slot_options(i, j).into_iter().filter(|c| c.level == q) {
            if c.vc_parents().all(|p| prior.iter().any(|o| (o.i, o.j) == p && o.level < q)) {
                out.push(Some(c));
            }
        }
        out
    }

    fn descend(&mut self) {
        while self.chosen.len() < self.decisions.len() {
            self.cursor.push(0);
            self.chosen.push(None);
        }
    }
}

impl Iterator for VcSetIter {
    type Item = Vec<VcChoice>;

    fn next(&mut self) -> Option<Vec<VcChoice>> {
        if !self.started {
            self.started = true;
            self.descend();
            return Some(Vec::new());
        }
        loop {
            let depth = self.chosen.len().checked_sub(1)?;
            let options = self.options(depth);
            let next = self.cursor[depth] + 1;
            if next < options.len() {
                self.cursor[depth] = next;
                self.chosen[depth] = options[next];
                self.descend();
                return Some(self.chosen.iter().flatten().copied().collect());
            }
            self.cursor.pop();
            self.chosen.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_instance;

    const PATH: &str = r#"
nodes = ["A", "B", "C"]
budget = 10
max_level = 0

[vc_defaults]
creation_cost = 3

[[payment_channels]]
endpoints = ["A", "B"]
balance_1 = 50
balance_2 = 0

[[payment_channels]]
endpoints = ["B", "C"]
balance_1 = 50
balance_2 = 0
base_fee_1 = 5
"#;

    #[test]
    fn two_nodes_have_only_the_empty_set() {
        let inst = parse_instance(
            "nodes = [\"A\", \"B\"]\nbudget = 0\n[[payment_channels]]\nendpoints = [\"A\", \"B\"]\nbalance_1 = 1\nbalance_2 = 1\n",
        )
        .unwrap();
        let sets: Vec<_> = enumerate_vc_sets(&inst, &OracleConfig::default()).unwrap().collect();
        assert_eq!(sets, vec![Vec::<VcChoice>::new()]);
    }

    #[test]
    fn level_zero_sets_over_a_path() {
        let inst = parse_instance(PATH).unwrap();
        let sets: Vec<_> = enumerate_vc_sets(&inst, &OracleConfig::default()).unwrap().collect();
        let a_c = VcChoice { i: 0, j: 2, k: 1, level: 0, family: VcFamily::PcPc };
        let c_a = VcChoice { i: 2, j: 0, k: 1, level: 0, family: VcFamily::PcPc };
        assert_eq!(sets, vec![vec![], vec![c_a], vec![a_c], vec![a_c, c_a]]);
    }

    #[test]
    fn fee_or_creation_both_reach_full_demand() {
        let text = format!("{PATH}\n[[demand]]\nsource = \"A\"\nreceiver = \"C\"\namount = 10\n");
        let inst = parse_instance(&text).unwrap();
        let sol = brute_force_optimize(&inst, &OracleConfig::default()).unwrap();
        assert_eq!(sol.objective, 10);
    }

    #[test]
    fn envelope_is_enforced() {
        let inst = parse_instance(PATH).unwrap();
        let cfg = OracleConfig { envelope: OracleEnvelope { max_nodes: 2, ..Default::default() }, ..Default::default() };
        assert!(matches!(brute_force_optimize(&inst, &cfg), Err(OracleError::EnvelopeExceeded(_))));
    }
}
