//! Problem instances: parsing, validation, serialization and the derived
//! constants consumed by the model builder.
//!
//! Instances are TOML documents:
//!
//! ```toml
//! nodes = ["A", "B", "C"]
//! budget = 10
//! max_level = 1                 # optional, default 1
//!
//! [ledger]                      # optional on-chain balances
//! A = 5
//!
//! [vc_defaults]                 # optional, every field defaults to 0
//! base_fee_1 = 0
//! prop_fee_ppm_1 = 0
//! base_fee_2 = 0
//! prop_fee_ppm_2 = 0
//! creation_cost = 3
//!
//! [[payment_channels]]
//! endpoints = ["A", "B"]
//! balance_1 = 50                # balance of the first endpoint
//! balance_2 = 0
//! base_fee_1 = 0                # fees charged when the first endpoint sends
//! prop_fee_ppm_1 = 0
//! base_fee_2 = 5
//! prop_fee_ppm_2 = 0
//!
//! [[vc_overrides]]              # per directed pair; endpoint 1 opens the channel
//! endpoints = ["A", "C"]
//! base_fee_1 = 0
//! creation_cost = 1
//!
//! [[demand]]
//! source = "A"
//! receiver = "C"
//! amount = 10
//! ```
//!
//! Transactions are numbered by their position in `demand`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Address, Amount, ChannelId, FeeParams, NetworkError, Vpcn};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}

impl From<NetworkError> for IngestError {
    fn from(e: NetworkError) -> Self {
        IngestError::Validation(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub source: Address,
    pub receiver: Address,
    pub amount: Amount,
    pub seq: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DemandMatrix {
    entries: BTreeMap<(Address, Address), Vec<Transaction>>,
}

impl DemandMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a transaction; its `seq` is the number of transactions added before it.
    pub fn push(&mut self, source: Address, receiver: Address, amount: Amount) -> Result<&Transaction, IngestError> {
        if amount == 0 {
            return Err(IngestError::Validation(format!("transaction {source}->{receiver} has amount 0")));
        }
        if source == receiver {
            return Err(IngestError::Validation(format!("transaction from {source} to itself")));
        }
        let seq = self.len();
        let list = self.entries.entry((source.clone(), receiver.clone())).or_default();
        list.push(Transaction { source, receiver, amount, seq });
        Ok(list.last().expect("just pushed"))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pair(&self, source: &Address, receiver: &Address) -> &[Transaction] {
        self.entries.get(&(source.clone(), receiver.clone())).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&(Address, Address), &Vec<Transaction>)> {
        self.entries.iter()
    }

    /// All transactions in input order.
    pub fn transactions(&self) -> Vec<&Transaction> {
        let mut all: Vec<&Transaction> = self.entries.values().flatten().collect();
        all.sort_by_key(|t| t.seq);
        all
    }

    pub fn total(&self) -> Amount {
        self.entries.values().flatten().map(|t| t.amount).sum()
    }
}

/// Fee and creation parameters of a directed virtual channel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VcParams {
    /// Fees charged when the opener sends.
    pub fees_1: FeeParams,
    pub fees_2: FeeParams,
    pub creation_cost: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    /// Payment channels only.
    pub network: Vpcn,
    pub demand: DemandMatrix,
    pub budget: Amount,
    pub vc_defaults: VcParams,
    /// Keyed by (opener, other end).
    pub vc_overrides: BTreeMap<(Address, Address), VcParams>,
    pub max_level: u32,
}

impl Instance {
    pub fn vc_params(&self, from: &Address, to: &Address) -> VcParams {
        self.vc_overrides.get(&(from.clone(), to.clone())).copied().unwrap_or(self.vc_defaults)
    }

    /// Nodes in index order used by the model builder.
    pub fn node_list(&self) -> Vec<Address> {
        self.network.nodes().iter().cloned().collect()
    }
}

pub const DEFAULT_MAX_LEVEL: u32 = 1;

// ---------------------------------------------------------------------------
// document schema

fn is_zero(v: &i64) -> bool {
    *v == 0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    nodes: Vec<String>,
    budget: i64,
    #[serde(default = "default_max_level")]
    max_level: i64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    ledger: BTreeMap<String, i64>,
    #[serde(default)]
    vc_defaults: VcParamsDoc,
    #[serde(default)]
    payment_channels: Vec<ChannelDoc>,
    #[serde(default)]
    vc_overrides: Vec<VcOverrideDoc>,
    #[serde(default)]
    demand: Vec<DemandDoc>,
}

fn default_max_level() -> i64 {
    DEFAULT_MAX_LEVEL as i64
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VcParamsDoc {
    #[serde(default)]
    base_fee_1: i64,
    #[serde(default)]
    prop_fee_ppm_1: i64,
    #[serde(default)]
    base_fee_2: i64,
    #[serde(default)]
    prop_fee_ppm_2: i64,
    #[serde(default)]
    creation_cost: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    endpoints: [String; 2],
    balance_1: i64,
    balance_2: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    base_fee_1: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    prop_fee_ppm_1: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    base_fee_2: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    prop_fee_ppm_2: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VcOverrideDoc {
    endpoints: [String; 2],
    #[serde(default)]
    base_fee_1: i64,
    #[serde(default)]
    prop_fee_ppm_1: i64,
    #[serde(default)]
    base_fee_2: i64,
    #[serde(default)]
    prop_fee_ppm_2: i64,
    #[serde(default)]
    creation_cost: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandDoc {
    source: String,
    receiver: String,
    amount: i64,
}

fn amount(value: i64, what: &str) -> Result<Amount, IngestError> {
    Amount::try_from(value).map_err(|_| IngestError::Validation(format!("{what} must be non-negative, got {value}")))
}

struct Resolver<'a> {
    nodes: &'a BTreeSet<Address>,
}

impl Resolver<'_> {
    fn node(&self, name: &str, context: &str) -> Result<Address, IngestError> {
        let a = Address::new(name)?;
        if self.nodes.contains(&a) {
            Ok(a)
        } else {
            Err(IngestError::Validation(format!("{context} references unknown node {name:?}")))
        }
    }
}

fn vc_params(
    base_1: i64,
    ppm_1: i64,
    base_2: i64,
    ppm_2: i64,
    creation: i64,
    what: &str,
) -> Result<VcParams, IngestError> {
    Ok(VcParams {
        fees_1: FeeParams::new(amount(base_1, what)?, amount(ppm_1, what)?),
        fees_2: FeeParams::new(amount(base_2, what)?, amount(ppm_2, what)?),
        creation_cost: amount(creation, what)?,
    })
}

pub fn parse_instance(text: &str) -> Result<Instance, IngestError> {
    let doc: InstanceDoc = toml::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;

    let mut network = Vpcn::new();
    for name in &doc.nodes {
        let a = Address::new(name.as_str())?;
        if network.nodes().contains(&a) {
            return Err(IngestError::Validation(format!("duplicate node {name:?}")));
        }
        network.add_node(a);
    }
    let nodes = network.nodes().clone();
    let resolve = Resolver { nodes: &nodes };

    for (name, &balance) in &doc.ledger {
        let a = resolve.node(name, "ledger")?;
        network.set_onchain_balance(a, amount(balance, "ledger balance")?)?;
    }

    for c in &doc.payment_channels {
        let what = format!("payment channel {:?}", c.endpoints);
        let u1 = resolve.node(&c.endpoints[0], &what)?;
        let u2 = resolve.node(&c.endpoints[1], &what)?;
        network
            .insert_payment_channel(
                u1,
                u2,
                amount(c.balance_1, &what)?,
                amount(c.balance_2, &what)?,
                FeeParams::new(amount(c.base_fee_1, &what)?, amount(c.prop_fee_ppm_1, &what)?),
                FeeParams::new(amount(c.base_fee_2, &what)?, amount(c.prop_fee_ppm_2, &what)?),
            )
            .map_err(|e| IngestError::Validation(format!("{what}: {e}")))?;
    }

    let d = &doc.vc_defaults;
    let vc_defaults = vc_params(
        d.base_fee_1,
        d.prop_fee_ppm_1,
        d.base_fee_2,
        d.prop_fee_ppm_2,
        d.creation_cost,
        "vc_defaults",
    )?;

    let mut vc_overrides = BTreeMap::new();
    for o in &doc.vc_overrides {
        let what = format!("vc override {:?}", o.endpoints);
        let from = resolve.node(&o.endpoints[0], &what)?;
        let to = resolve.node(&o.endpoints[1], &what)?;
        if from == to {
            return Err(IngestError::Validation(format!("{what}: endpoints must differ")));
        }
        let params =
            vc_params(o.base_fee_1, o.prop_fee_ppm_1, o.base_fee_2, o.prop_fee_ppm_2, o.creation_cost, &what)?;
        if vc_overrides.insert((from, to), params).is_some() {
            return Err(IngestError::Validation(format!("{what} given twice")));
        }
    }

    let mut demand = DemandMatrix::new();
    for (pos, row) in doc.demand.iter().enumerate() {
        let what = format!("demand row {pos}");
        let s = resolve.node(&row.source, &what)?;
        let r = resolve.node(&row.receiver, &what)?;
        demand.push(s, r, amount(row.amount, &what)?)?;
    }

    let max_level = u32::try_from(doc.max_level)
        .map_err(|_| IngestError::Validation(format!("max_level must be non-negative, got {}", doc.max_level)))?;

    Ok(Instance {
        network,
        demand,
        budget: amount(doc.budget, "budget")?,
        vc_defaults,
        vc_overrides,
        max_level,
    })
}

fn signed(v: Amount) -> i64 {
    i64::try_from(v).expect("amount fits the document integer range")
}

/// Serializes an instance back to the document format.
pub fn to_document(inst: &Instance) -> String {
    let channels = inst
        .network
        .payment_channels()
        .map(|c| ChannelDoc {
            endpoints: [c.id.u1.to_string(), c.id.u2.to_string()],
            balance_1: signed(c.balance_1),
            balance_2: signed(c.balance_2),
            base_fee_1: signed(c.fees_1.base_fee),
            prop_fee_ppm_1: signed(c.fees_1.prop_fee_ppm),
            base_fee_2: signed(c.fees_2.base_fee),
            prop_fee_ppm_2: signed(c.fees_2.prop_fee_ppm),
        })
        .collect();
    let d = inst.vc_defaults;
    let doc = InstanceDoc {
        nodes: inst.network.nodes().iter().map(Address::to_string).collect(),
        budget: signed(inst.budget),
        max_level: inst.max_level as i64,
        ledger: inst.network.ledger().iter().map(|(a, &b)| (a.to_string(), signed(b))).collect(),
        vc_defaults: VcParamsDoc {
            base_fee_1: signed(d.fees_1.base_fee),
            prop_fee_ppm_1: signed(d.fees_1.prop_fee_ppm),
            base_fee_2: signed(d.fees_2.base_fee),
            prop_fee_ppm_2: signed(d.fees_2.prop_fee_ppm),
            creation_cost: signed(d.creation_cost),
        },
        payment_channels: channels,
        vc_overrides: inst
            .vc_overrides
            .iter()
            .map(|((from, to), p)| VcOverrideDoc {
                endpoints: [from.to_string(), to.to_string()],
                base_fee_1: signed(p.fees_1.base_fee),
                prop_fee_ppm_1: signed(p.fees_1.prop_fee_ppm),
                base_fee_2: signed(p.fees_2.base_fee),
                prop_fee_ppm_2: signed(p.fees_2.prop_fee_ppm),
                creation_cost: signed(p.creation_cost),
            })
            .collect(),
        demand: inst
            .demand
            .transactions()
            .into_iter()
            .map(|t| DemandDoc { source: t.source.to_string(), receiver: t.receiver.to_string(), amount: signed(t.amount) })
            .collect(),
    };
    toml::to_string(&doc).expect("instance document serializes")
}

// ---------------------------------------------------------------------------
// derived constants

/// Dense, index-based constants of the placement model. Node `i` is the
/// `i`-th address of [`Instance::node_list`]. Per-destination fee tables are
/// indexed `[(i * n + j) * n + r]` and are zero whenever `j == r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpConstants {
    pub nodes: Vec<Address>,
    pub pc_exists: Vec<bool>,
    /// Balance of `i` on the payment channel between `i` and `j`.
    pub pcap: Vec<Amount>,
    pub pc_base_fee: Vec<Amount>,
    pub pc_prop_fee_ppm: Vec<u64>,
    pub vc_base_fee: Vec<Amount>,
    pub vc_prop_fee_ppm: Vec<u64>,
    pub vc_creation_cost: Vec<Amount>,
    pub max_cap: Amount,
}

impl IlpConstants {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    fn pair(&self, i: usize, j: usize) -> usize {
        i * self.n() + j
    }

    fn triple(&self, i: usize, j: usize, r: usize) -> usize {
        (i * self.n() + j) * self.n() + r
    }

    pub fn pc_exists(&self, i: usize, j: usize) -> bool {
        self.pc_exists[self.pair(i, j)]
    }

    pub fn pcap(&self, i: usize, j: usize) -> Amount {
        self.pcap[self.pair(i, j)]
    }

    pub fn vc_creation_cost(&self, i: usize, j: usize) -> Amount {
        self.vc_creation_cost[self.pair(i, j)]
    }

    /// Routing cost of forwarding `amount` over the payment channel `i -> j`
    /// on a path towards `r`.
    pub fn pc_hop_cost(&self, i: usize, j: usize, r: usize, amount: Amount) -> Amount {
        let t = self.triple(i, j, r);
        FeeParams::new(self.pc_base_fee[t], self.pc_prop_fee_ppm[t]).hop_fee(amount)
    }

    pub fn vc_hop_cost(&self, i: usize, j: usize, r: usize, amount: Amount) -> Amount {
        let t = self.triple(i, j, r);
        FeeParams::new(self.vc_base_fee[t], self.vc_prop_fee_ppm[t]).hop_fee(amount)
    }

    pub fn index_of(&self, a: &Address) -> Option<usize> {
        self.nodes.binary_search(a).ok()
    }
}

pub fn derive_ilp_constants(inst: &Instance) -> IlpConstants {
    let nodes = inst.node_list();
    let n = nodes.len();
    let index: BTreeMap<&Address, usize> = nodes.iter().enumerate().map(|(i, a)| (a, i)).collect();

    let mut pc_exists = vec![false; n * n];
    let mut pcap = vec![0; n * n];
    let mut pc_fees = vec![FeeParams::ZERO; n * n];
    for c in inst.network.payment_channels() {
        let (a, b) = (index[&c.id.u1], index[&c.id.u2]);
        pc_exists[a * n + b] = true;
        pc_exists[b * n + a] = true;
        pcap[a * n + b] = c.balance_1;
        pcap[b * n + a] = c.balance_2;
        pc_fees[a * n + b] = c.fees_1;
        pc_fees[b * n + a] = c.fees_2;
    }

    let mut vc_fees = vec![FeeParams::ZERO; n * n];
    let mut vc_creation_cost = vec![0; n * n];
    for (i, a) in nodes.iter().enumerate() {
        for (j, b) in nodes.iter().enumerate() {
            if i != j {
                let p = inst.vc_params(a, b);
                vc_fees[i * n + j] = p.fees_1;
                vc_creation_cost[i * n + j] = p.creation_cost;
            }
        }
    }

    let mut pc_base_fee = vec![0; n * n * n];
    let mut pc_prop_fee_ppm = vec![0; n * n * n];
    let mut vc_base_fee = vec![0; n * n * n];
    let mut vc_prop_fee_ppm = vec![0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                if j == r {
                    continue;
                }
                let t = (i * n + j) * n + r;
                pc_base_fee[t] = pc_fees[i * n + j].base_fee;
                pc_prop_fee_ppm[t] = pc_fees[i * n + j].prop_fee_ppm;
                vc_base_fee[t] = vc_fees[i * n + j].base_fee;
                vc_prop_fee_ppm[t] = vc_fees[i * n + j].prop_fee_ppm;
            }
        }
    }

    let max_cap = pcap.iter().copied().max().unwrap_or(0);
    IlpConstants {
        nodes,
        pc_exists,
        pcap,
        pc_base_fee,
        pc_prop_fee_ppm,
        vc_base_fee,
        vc_prop_fee_ppm,
        vc_creation_cost,
        max_cap,
    }
}

/// Payment channel id between two instance nodes, if one exists.
pub fn payment_channel_id(inst: &Instance, a: &Address, b: &Address) -> Option<ChannelId> {
    inst.network.payment_channel_between(a, b).map(|c| c.id.clone())
}
