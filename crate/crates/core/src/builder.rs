//! Translation of an [`Instance`] into the placement MILP.
//!
//! Nodes are addressed by their index in [`Instance::node_list`]. A virtual
//! channel variable `i -> j` over `k` is opened by `i`; its capacity is
//! `i`'s balance on it. Level-0 channels sit on the payment channels `i-k`
//! and `k-j`; a channel of level `q >= 1` combines a payment or lower-level
//! virtual channel `i -> k` with one `k -> j`, at least one of them virtual.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ingest::{derive_ilp_constants, IlpConstants, Instance};
use crate::milp::model::{rat, Combo, Domain, Family, MilpModel, Rational, Sense, Symbol, Tag, VarId, Violation};
use crate::network::Amount;

/// How the capacity a virtual channel lends to higher-level channels built
/// on top of it is accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParentCapacity {
    /// Capacity handed to children is reserved: routed flow plus the
    /// capacities of all children must fit into the channel. This is what
    /// opening the children on the channel state machine requires.
    #[default]
    Reserved,
    /// Routed flow and children each only need to fit individually.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub parent_capacity: ParentCapacity,
    /// Refuse instances whose model would exceed this many variables.
    pub max_vars: Option<usize>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { parent_capacity: ParentCapacity::Reserved, max_vars: Some(20_000) }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("model would have {vars} variables, limit is {limit}")]
    InstanceTooLarge { vars: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelTransaction {
    pub s: usize,
    pub r: usize,
    /// position within the transactions from `s` to `r`
    pub t: usize,
    pub amount: Amount,
    pub seq: usize,
}

/// Usage and success variables of one transaction.
#[derive(Debug, Clone)]
pub struct TxVars {
    pub x: VarId,
    /// indexed `i * n + j`, `None` on the diagonal
    pub pt: Vec<Option<VarId>>,
    pub vt: Vec<Option<VarId>>,
}

/// One potential virtual channel `i -> j` over `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VcSlot {
    pub level: usize,
    /// `None` for level 0, built on two payment channels
    pub combo: Option<Combo>,
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub exist: VarId,
    pub cap: VarId,
}

impl VcSlot {
    pub fn first_is_pc(&self) -> bool {
        matches!(self.combo, None | Some(Combo::Pv))
    }

    pub fn second_is_pc(&self) -> bool {
        matches!(self.combo, None | Some(Combo::Vp))
    }

    /// Whether the slot draws on `i`'s side of the channel `i -> j` of the
    /// given kind (payment if `pc`, virtual otherwise).
    pub fn draws_on(&self, pc: bool, i: usize, j: usize) -> bool {
        (self.first_is_pc() == pc && self.i == i && self.k == j) || (self.second_is_pc() == pc && self.k == i && self.j == j)
    }

    pub fn symbols(&self) -> (Symbol, Symbol) {
        let (i, j, k) = (self.i, self.j, self.k);
        match self.combo {
            None => (Symbol::Vc0 { i, j, k }, Symbol::Cap0 { i, j, k }),
            Some(combo) => {
                let q = self.level;
                (Symbol::Vc { q, combo, i, j, k }, Symbol::Cap { q, combo, i, j, k })
            }
        }
    }
}

/// The MILP together with the bookkeeping needed to interpret its variables.
#[derive(Debug, Clone)]
pub struct PcnModel {
    pub model: MilpModel,
    pub constants: IlpConstants,
    pub transactions: Vec<ModelTransaction>,
    pub tx_vars: Vec<TxVars>,
    pub vcs: Vec<VcSlot>,
    /// highest recursion level present in the model
    pub max_level: usize,
    pub options: BuildOptions,
}

impl PcnModel {
    pub fn n(&self) -> usize {
        self.constants.n()
    }

    pub fn pt(&self, tx: usize, i: usize, j: usize) -> VarId {
        self.tx_vars[tx].pt[i * self.n() + j].expect("off-diagonal pair")
    }

    pub fn vt(&self, tx: usize, i: usize, j: usize) -> VarId {
        self.tx_vars[tx].vt[i * self.n() + j].expect("off-diagonal pair")
    }

    /// Slots of virtual channels `i -> j` on all levels.
    pub fn slots_between(&self, i: usize, j: usize) -> impl Iterator<Item = &VcSlot> + '_ {
        self.vcs.iter().filter(move |v| v.i == i && v.j == j)
    }
}

/// Number of variables of each kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelCounts {
    pub pt: usize,
    pub vt: usize,
    pub x: usize,
    pub vc0: usize,
    /// existence binaries of levels 1 and above
    pub vc_upper: usize,
    pub caps: usize,
}

impl ModelCounts {
    pub fn expected(n: usize, max_level: usize, transactions: usize) -> Self {
        let pairs = n * n.saturating_sub(1);
        let triples = pairs * n.saturating_sub(2);
        let m = max_level.min(n.saturating_sub(2));
        Self {
            pt: transactions * pairs,
            vt: transactions * pairs,
            x: transactions,
            vc0: triples,
            vc_upper: 3 * m * triples,
            caps: triples * (1 + 3 * m),
        }
    }

    pub fn of(model: &MilpModel) -> Self {
        let mut c = Self::default();
        for v in &model.vars {
            match v.symbol {
                Symbol::Pt { .. } => c.pt += 1,
                Symbol::Vt { .. } => c.vt += 1,
                Symbol::X { .. } => c.x += 1,
                Symbol::Vc0 { .. } => c.vc0 += 1,
                Symbol::Vc { .. } => c.vc_upper += 1,
                Symbol::Cap0 { .. } | Symbol::Cap { .. } => c.caps += 1,
                Symbol::Aux(_) => {}
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.pt + self.vt + self.x + self.vc0 + self.vc_upper + self.caps
    }
}

pub fn effective_max_level(inst: &Instance) -> usize {
    (inst.max_level as usize).min(inst.network.nodes().len().saturating_sub(2))
}

pub fn build_model(inst: &Instance) -> Result<PcnModel, BuildError> {
    build_model_with(inst, &BuildOptions::default())
}

pub fn build_model_with(inst: &Instance, options: &BuildOptions) -> Result<PcnModel, BuildError> {
    let constants = derive_ilp_constants(inst);
    let n = constants.n();
    let max_level = effective_max_level(inst);
    let expected = ModelCounts::expected(n, max_level, inst.demand.len());
    if let Some(limit) = options.max_vars {
        if expected.total() > limit {
            return Err(BuildError::InstanceTooLarge { vars: expected.total(), limit });
        }
    }

    let mut transactions = Vec::new();
    for s in 0..n {
        for r in 0..n {
            for (t, tx) in inst.demand.pair(&constants.nodes[s], &constants.nodes[r]).iter().enumerate() {
                transactions.push(ModelTransaction { s, r, t, amount: tx.amount, seq: tx.seq });
            }
        }
    }

    let mut model = MilpModel::new();
    let x: Vec<VarId> =
        transactions.iter().map(|tx| model.add_var(Symbol::X { s: tx.s, r: tx.r, t: tx.t }, Domain::Binary)).collect();
    let mut tx_vars = Vec::with_capacity(transactions.len());
    for (tx, &x) in transactions.iter().zip(&x) {
        let (s, r, t) = (tx.s, tx.r, tx.t);
        let mut pt = vec![None; n * n];
        let mut vt = vec![None; n * n];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                pt[i * n + j] = Some(model.add_var(Symbol::Pt { i, j, s, r, t }, Domain::Binary));
            }
        }
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                vt[i * n + j] = Some(model.add_var(Symbol::Vt { i, j, s, r, t }, Domain::Binary));
            }
        }
        tx_vars.push(TxVars { x, pt, vt });
    }

    let cap_domain = Domain::continuous(0, Some(constants.max_cap as i128));
    let mut vcs = Vec::new();
    for level in 0..=max_level {
        let combos: Vec<Option<Combo>> = if level == 0 { vec![None] } else { Combo::ALL.map(Some).to_vec() };
        for combo in combos {
            for (i, j, k) in triples(n) {
                let mut slot = VcSlot { level, combo, i, j, k, exist: VarId(0), cap: VarId(0) };
                let (e, c) = slot.symbols();
                slot.exist = model.add_var(e, Domain::Binary);
                slot.cap = model.add_var(c, cap_domain.clone());
                vcs.push(slot);
            }
        }
    }

    model.objective = transactions.iter().zip(&x).map(|(tx, &x)| (rat(tx.amount as i128), x)).collect();

    let mut pm = PcnModel { model, constants, transactions, tx_vars, vcs, max_level, options: *options };
    add_constraints(&mut pm, inst.budget);
    debug_assert_eq!(ModelCounts::of(&pm.model), expected);
    Ok(pm)
}

fn triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| {
        (0..n).flat_map(move |j| (0..n).filter(move |&k| i != j && k != i && k != j).map(move |k| (i, j, k)))
    })
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
}

fn r(v: impl Into<i128>) -> Rational {
    rat(v.into())
}

struct Rows<'a> {
    model: &'a mut MilpModel,
}

impl Rows<'_> {
    fn add(&mut self, terms: Vec<(Rational, VarId)>, sense: Sense, rhs: Rational, family: Family, index: Vec<usize>) {
        if !terms.is_empty() {
            self.model.add_constraint(terms, sense, rhs, Tag::new(family, index));
        }
    }
}

fn add_constraints(pm: &mut PcnModel, budget: Amount) {
    let n = pm.n();
    let c = pm.constants.clone();
    let one = r(1);
    let exist_vars = |pm: &PcnModel, i: usize, j: usize| -> Vec<VarId> { pm.slots_between(i, j).map(|v| v.exist).collect() };
    // existence and capacity of channels `a -> b` below level `q`
    let lower = |pm: &PcnModel, q: usize, a: usize, b: usize| -> Vec<VcSlot> {
        pm.slots_between(a, b).filter(|v| v.level < q).copied().collect()
    };

    let vexist: Vec<Vec<VarId>> = (0..n * n).map(|p| exist_vars(pm, p / n, p % n)).collect();
    let vcs = pm.vcs.clone();
    let txs = pm.transactions.clone();
    let tx_vars = pm.tx_vars.clone();
    let parent_capacity = pm.options.parent_capacity;
    let pt = |tx: usize, i: usize, j: usize| tx_vars[tx].pt[i * n + j].expect("off-diagonal");
    let vt = |tx: usize, i: usize, j: usize| tx_vars[tx].vt[i * n + j].expect("off-diagonal");

    let lower_sets: Vec<Vec<VcSlot>> =
        (0..=pm.max_level).flat_map(|q| (0..n * n).map(move |p| (q, p))).map(|(q, p)| lower(pm, q, p / n, p % n)).collect();
    let lower_of = |q: usize, a: usize, b: usize| &lower_sets[q * n * n + a * n + b];

    let mut rows = Rows { model: &mut pm.model };

    // routing constraints
    for (tx, t) in txs.iter().enumerate() {
        let x = tx_vars[tx].x;
        for (i, j) in pairs(n) {
            rows.add(vec![(one, pt(tx, i, j))], Sense::Le, r(c.pc_exists(i, j) as i128), Family::PcExists, vec![tx, i, j]);
        }
        for (i, j) in pairs(n) {
            rows.add(vec![(one, pt(tx, i, j)), (-one, x)], Sense::Le, r(0), Family::PcUseImpliesSuccess, vec![tx, i, j]);
        }
        for (i, j) in pairs(n) {
            rows.add(vec![(one, vt(tx, i, j)), (-one, x)], Sense::Le, r(0), Family::VcUseImpliesSuccess, vec![tx, i, j]);
        }
        let mut terms = vec![(one, x)];
        for (i, j) in pairs(n) {
            terms.push((-one, pt(tx, i, j)));
            terms.push((-one, vt(tx, i, j)));
        }
        rows.add(terms, Sense::Le, r(0), Family::SuccessNeedsChannel, vec![tx]);
        for node in 0..n {
            let mut terms = Vec::new();
            for other in (0..n).filter(|&o| o != node) {
                terms.push((one, pt(tx, node, other)));
                terms.push((one, vt(tx, node, other)));
            }
            for other in (0..n).filter(|&o| o != node) {
                terms.push((-one, pt(tx, other, node)));
                terms.push((-one, vt(tx, other, node)));
            }
            let net = if node == t.s {
                1
            } else if node == t.r {
                -1
            } else {
                0
            };
            if net != 0 {
                terms.push((r(-net), x));
            }
            rows.add(terms, Sense::Eq, r(0), Family::FlowConservation, vec![tx, node]);
        }
    }

    // budget: creation costs of all existing channels plus routing fees
    let mut terms = Vec::new();
    for v in &vcs {
        terms.push((r(c.vc_creation_cost(v.i, v.j) as i128), v.exist));
    }
    for (tx, t) in txs.iter().enumerate() {
        for (i, j) in pairs(n) {
            terms.push((r(c.pc_hop_cost(i, j, t.r, t.amount) as i128), pt(tx, i, j)));
        }
        for (i, j) in pairs(n) {
            terms.push((r(c.vc_hop_cost(i, j, t.r, t.amount) as i128), vt(tx, i, j)));
        }
    }
    rows.add(terms, Sense::Le, r(budget as i128), Family::Budget, vec![]);

    // level 0
    let max_cap = r(c.max_cap as i128);
    for v in vcs.iter().filter(|v| v.level == 0) {
        let (i, j, k) = (v.i, v.j, v.k);
        let avail = c.pc_exists(i, k) as i128 + c.pc_exists(k, j) as i128;
        rows.add(vec![(r(2), v.exist)], Sense::Le, r(avail), Family::L0Exists, vec![i, j, k]);
        rows.add(vec![(one, v.cap)], Sense::Le, r(c.pcap(i, k) as i128), Family::L0Capacity, vec![i, j, k, 0]);
        rows.add(vec![(one, v.cap)], Sense::Le, r(c.pcap(k, j) as i128), Family::L0Capacity, vec![i, j, k, 1]);
        rows.add(vec![(one, v.cap), (-max_cap, v.exist)], Sense::Le, r(0), Family::L0Link, vec![i, j, k]);
    }
    for (i, j) in pairs(n) {
        let terms = vcs.iter().filter(|v| v.level == 0 && v.i == i && v.j == j).map(|v| (one, v.exist)).collect();
        rows.add(terms, Sense::Le, one, Family::L0Unique, vec![i, j]);
    }

    // levels 1..=M
    for q in 1..=pm.max_level {
        for v in vcs.iter().filter(|v| v.level == q) {
            let (i, j, k) = (v.i, v.j, v.k);
            let combo = v.combo.expect("levels above 0 carry a combination");
            let first = lower_of(q, i, k);
            let second = lower_of(q, k, j);
            let idx = vec![q, i, j, k];

            let mut exist_terms = vec![(r(2), v.exist)];
            let mut exist_rhs = 0;
            if v.first_is_pc() {
                exist_rhs += c.pc_exists(i, k) as i128;
            } else {
                exist_terms.extend(first.iter().map(|p| (-one, p.exist)));
            }
            if v.second_is_pc() {
                exist_rhs += c.pc_exists(k, j) as i128;
            } else {
                exist_terms.extend(second.iter().map(|p| (-one, p.exist)));
            }
            rows.add(exist_terms, Sense::Le, r(exist_rhs), Family::LqExists(combo), idx.clone());

            for (side, parents, is_pc, (a, b)) in [(0, first, v.first_is_pc(), (i, k)), (1, second, v.second_is_pc(), (k, j))] {
                let mut idx = idx.clone();
                idx.push(side);
                if is_pc {
                    rows.add(vec![(one, v.cap)], Sense::Le, r(c.pcap(a, b) as i128), Family::LqCapacity(combo), idx);
                } else {
                    let mut terms = vec![(one, v.cap)];
                    terms.extend(parents.iter().map(|p| (-one, p.cap)));
                    rows.add(terms, Sense::Le, r(0), Family::LqCapacity(combo), idx);
                }
            }
            rows.add(vec![(one, v.cap), (-max_cap, v.exist)], Sense::Le, r(0), Family::LqLink(combo), idx);
        }
        for (i, j) in pairs(n) {
            let terms = vcs.iter().filter(|v| v.level <= q && v.i == i && v.j == j).map(|v| (one, v.exist)).collect();
            rows.add(terms, Sense::Le, one, Family::LqUnique, vec![q, i, j]);
        }
    }

    // global constraints
    for (i, j) in pairs(n) {
        let terms = vexist[i * n + j].iter().map(|&e| (one, e)).collect();
        rows.add(terms, Sense::Le, one, Family::VcUnique, vec![i, j]);
    }
    for (tx, _) in txs.iter().enumerate() {
        for (i, j) in pairs(n) {
            let mut terms = vec![(one, vt(tx, i, j))];
            terms.extend(vexist[i * n + j].iter().map(|&e| (-one, e)));
            rows.add(terms, Sense::Le, r(0), Family::VcUseRequiresVc, vec![tx, i, j]);
        }
    }
    for (i, j) in pairs(n) {
        let mut terms: Vec<(Rational, VarId)> =
            txs.iter().enumerate().map(|(tx, t)| (r(t.amount as i128), vt(tx, i, j))).collect();
        if parent_capacity == ParentCapacity::Reserved {
            terms.extend(vcs.iter().filter(|v| v.draws_on(false, i, j)).map(|v| (one, v.cap)));
        }
        terms.extend(vcs.iter().filter(|v| v.i == i && v.j == j).map(|v| (-one, v.cap)));
        rows.add(terms, Sense::Le, r(0), Family::VcCapacity, vec![i, j]);
    }
    for (i, j) in pairs(n) {
        let mut terms: Vec<(Rational, VarId)> =
            txs.iter().enumerate().map(|(tx, t)| (r(t.amount as i128), pt(tx, i, j))).collect();
        terms.extend(vcs.iter().filter(|v| v.draws_on(true, i, j)).map(|v| (one, v.cap)));
        rows.add(terms, Sense::Le, r(c.pcap(i, j) as i128), Family::PcCapacity, vec![i, j]);
    }
}

/// Checks a model against the structure `build_model` promises: declared
/// variables, index ranges, domains, objective and the presence of every
/// constraint row. Returns an empty list for a well-formed model.
pub fn validate_model(pm: &PcnModel) -> Vec<Violation> {
    let mut out = pm.model.structural_violations();
    let n = pm.n();
    let m = pm.max_level;
    let t_count = pm.transactions.len();
    let mut bad = |what: String, detail: &str| out.push(Violation { what, detail: detail.to_string() });

    let distinct = |a: usize, b: usize| a < n && b < n && a != b;
    let tx_ok = |s: usize, r: usize, t: usize| pm.transactions.iter().any(|tx| (tx.s, tx.r, tx.t) == (s, r, t));
    let cap_domain = Domain::continuous(0, Some(pm.constants.max_cap as i128));
    for var in &pm.model.vars {
        let name = var.symbol.name();
        let (in_range, binary) = match var.symbol {
            Symbol::Pt { i, j, s, r, t } | Symbol::Vt { i, j, s, r, t } => (distinct(i, j) && tx_ok(s, r, t), true),
            Symbol::X { s, r, t } => (tx_ok(s, r, t), true),
            Symbol::Vc0 { i, j, k } => (distinct(i, j) && k < n && k != i && k != j, true),
            Symbol::Cap0 { i, j, k } => (distinct(i, j) && k < n && k != i && k != j, false),
            Symbol::Vc { q, i, j, k, .. } => (distinct(i, j) && k < n && k != i && k != j && (1..=m).contains(&q), true),
            Symbol::Cap { q, i, j, k, .. } => {
                (distinct(i, j) && k < n && k != i && k != j && (1..=m).contains(&q), false)
            }
            Symbol::Aux(_) => {
                bad(name, "variable outside the placement model");
                continue;
            }
        };
        if !in_range {
            bad(name.clone(), "index out of range");
        }
        if binary != var.domain.is_binary() || (!binary && var.domain != cap_domain) {
            bad(name, "unexpected domain");
        }
    }

    let counts = ModelCounts::of(&pm.model);
    if counts != ModelCounts::expected(n, m, t_count) {
        bad("variables".into(), &format!("counts {counts:?} differ from the closed-form counts"));
    }

    for (coef, v) in &pm.model.objective {
        let ok = match pm.model.vars.get(v.0).map(|var| &var.symbol) {
            Some(Symbol::X { s, r, t }) => pm
                .transactions
                .iter()
                .any(|tx| (tx.s, tx.r, tx.t) == (*s, *r, *t) && *coef == rat(tx.amount as i128)),
            _ => false,
        };
        if !ok {
            bad("objective".into(), "objective term is not a transaction amount times its success flag");
        }
    }

    let present: BTreeSet<Tag> = pm.model.constraints.iter().map(|c| c.tag.clone()).collect();
    let mut expected = BTreeSet::new();
    let mut expect = |family: Family, index: Vec<usize>| {
        expected.insert(Tag::new(family, index));
    };
    let node_pairs: Vec<(usize, usize)> = pairs(n).collect();
    for tx in 0..t_count {
        for &(i, j) in &node_pairs {
            expect(Family::PcExists, vec![tx, i, j]);
            expect(Family::PcUseImpliesSuccess, vec![tx, i, j]);
            expect(Family::VcUseImpliesSuccess, vec![tx, i, j]);
            expect(Family::VcUseRequiresVc, vec![tx, i, j]);
        }
        expect(Family::SuccessNeedsChannel, vec![tx]);
        for node in 0..n {
            expect(Family::FlowConservation, vec![tx, node]);
        }
    }
    if t_count > 0 || n >= 3 {
        expect(Family::Budget, vec![]);
    }
    for (i, j, k) in triples(n) {
        expect(Family::L0Exists, vec![i, j, k]);
        expect(Family::L0Capacity, vec![i, j, k, 0]);
        expect(Family::L0Capacity, vec![i, j, k, 1]);
        expect(Family::L0Link, vec![i, j, k]);
        for q in 1..=m {
            for combo in Combo::ALL {
                expect(Family::LqExists(combo), vec![q, i, j, k]);
                expect(Family::LqCapacity(combo), vec![q, i, j, k, 0]);
                expect(Family::LqCapacity(combo), vec![q, i, j, k, 1]);
                expect(Family::LqLink(combo), vec![q, i, j, k]);
            }
        }
    }
    for &(i, j) in &node_pairs {
        if n >= 3 {
            expect(Family::L0Unique, vec![i, j]);
            expect(Family::VcUnique, vec![i, j]);
            for q in 1..=m {
                expect(Family::LqUnique, vec![q, i, j]);
            }
        }
        // both capacity rows are empty, and skipped, without transactions or slots
        if t_count > 0 || n >= 3 {
            expect(Family::VcCapacity, vec![i, j]);
            expect(Family::PcCapacity, vec![i, j]);
        }
    }
    for tag in expected.difference(&present) {
        bad(tag.name(), "constraint missing");
    }
    for tag in present.difference(&expected) {
        bad(tag.name(), "unexpected constraint");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_instance;

    const TRIANGLE: &str = r#"
nodes = ["A", "B", "C"]
budget = 10
max_level = 1

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

[[demand]]
source = "A"
receiver = "C"
amount = 10

[[demand]]
source = "C"
receiver = "A"
amount = 4
"#;

    #[test]
    fn counts_for_three_nodes() {
        let inst = parse_instance(TRIANGLE).unwrap();
        let pm = build_model(&inst).unwrap();
        let c = ModelCounts::of(&pm.model);
        assert_eq!((c.pt, c.vt, c.x, c.vc0, c.vc_upper, c.caps), (12, 12, 2, 6, 18, 24));
        assert!(validate_model(&pm).is_empty(), "{:?}", validate_model(&pm));
    }

    #[test]
    fn slot_parent_relations() {
        let pv = VcSlot { level: 1, combo: Some(Combo::Pv), i: 0, j: 2, k: 1, exist: VarId(0), cap: VarId(0) };
        assert!(pv.draws_on(true, 0, 1));
        assert!(pv.draws_on(false, 1, 2));
        assert!(!pv.draws_on(true, 1, 2));
        let l0 = VcSlot { level: 0, combo: None, ..pv };
        assert!(l0.draws_on(true, 0, 1) && l0.draws_on(true, 1, 2));
        assert!(!l0.draws_on(false, 1, 2));
    }

    #[test]
    fn too_large_is_refused() {
        let inst = parse_instance(TRIANGLE).unwrap();
        let opts = BuildOptions { max_vars: Some(10), ..BuildOptions::default() };
        assert!(matches!(build_model_with(&inst, &opts), Err(BuildError::InstanceTooLarge { .. })));
    }

    #[test]
    fn reserved_capacity_adds_children_to_parent_rows() {
        let inst = parse_instance(TRIANGLE).unwrap();
        let find = |pm: &PcnModel| {
            pm.model.constraints.iter().find(|c| c.tag == Tag::new(Family::VcCapacity, vec![0, 2])).unwrap().terms.len()
        };
        let reserved = build_model(&inst).unwrap();
        let shared =
            build_model_with(&inst, &BuildOptions { parent_capacity: ParentCapacity::Shared, ..Default::default() })
                .unwrap();
        assert!(find(&reserved) > find(&shared));
    }
}
