//! Virtual payment channel network state machine.
//!
//! A [`Vpcn`] holds the node set, the payment channels, the virtual channels
//! built on top of them and the on-chain ledger that funds payment channels.
//! Every operation validates all of its preconditions before touching state,
//! so a failed operation leaves the network unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Amounts are integer base units.
pub type Amount = u64;

const PPM: u128 = 1_000_000;

/// On-chain identity of a participant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Address(String);

impl Address {
    pub fn new(id: impl Into<String>) -> Result<Self, NetworkError> {
        let id = id.into();
        if id.is_empty() {
            return Err(NetworkError::EmptyAddress);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Routing fee charged by the sending side of a channel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeeParams {
    pub base_fee: Amount,
    pub prop_fee_ppm: u64,
}

impl FeeParams {
    pub const ZERO: FeeParams = FeeParams { base_fee: 0, prop_fee_ppm: 0 };

    pub fn new(base_fee: Amount, prop_fee_ppm: u64) -> Self {
        Self { base_fee, prop_fee_ppm }
    }

    /// Proportional part rounded up: `ceil(ppm * amount / 10^6)`.
    pub fn proportional_fee(&self, amount: Amount) -> Amount {
        let scaled = self.prop_fee_ppm as u128 * amount as u128;
        scaled.div_ceil(PPM) as Amount
    }

    /// Fee for forwarding `amount` over one hop.
    pub fn hop_fee(&self, amount: Amount) -> Amount {
        self.base_fee + self.proportional_fee(amount)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Payment,
    Virtual,
}

/// Channel identifier. Payment channel ids are stored with sorted endpoints;
/// virtual channel ids keep the opener first because virtual channels are
/// directional.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId {
    pub kind: ChannelKind,
    pub u1: Address,
    pub u2: Address,
}

impl ChannelId {
    pub fn payment(a: Address, b: Address) -> Self {
        let (u1, u2) = if a <= b { (a, b) } else { (b, a) };
        Self { kind: ChannelKind::Payment, u1, u2 }
    }

    pub fn virtual_channel(u1: Address, u2: Address) -> Self {
        Self { kind: ChannelKind::Virtual, u1, u2 }
    }

    pub fn has_endpoint(&self, a: &Address) -> bool {
        &self.u1 == a || &self.u2 == a
    }

    pub fn other_end(&self, a: &Address) -> Option<&Address> {
        if &self.u1 == a {
            Some(&self.u2)
        } else if &self.u2 == a {
            Some(&self.u1)
        } else {
            None
        }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            ChannelKind::Payment => "pc",
            ChannelKind::Virtual => "vc",
        };
        write!(f, "{tag}({},{})", self.u1, self.u2)
    }
}

/// The two channels a virtual channel was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualParents {
    /// Connects the opener (`u1`) with the intermediary.
    pub first: ChannelId,
    /// Connects the intermediary with `u2`.
    pub second: ChannelId,
    pub intermediary: Address,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelState {
    pub id: ChannelId,
    /// Balance of `id.u1`.
    pub balance_1: Amount,
    /// Balance of `id.u2`.
    pub balance_2: Amount,
    pub fees_1: FeeParams,
    pub fees_2: FeeParams,
    pub parents: Option<VirtualParents>,
    /// 0 for payment channels and for virtual channels over two payment channels.
    pub level: u32,
}

impl ChannelState {
    pub fn kind(&self) -> ChannelKind {
        self.id.kind
    }

    pub fn balance_of(&self, a: &Address) -> Option<Amount> {
        if a == &self.id.u1 {
            Some(self.balance_1)
        } else if a == &self.id.u2 {
            Some(self.balance_2)
        } else {
            None
        }
    }

    pub fn fees_of(&self, a: &Address) -> Option<FeeParams> {
        if a == &self.id.u1 {
            Some(self.fees_1)
        } else if a == &self.id.u2 {
            Some(self.fees_2)
        } else {
            None
        }
    }

    pub fn total(&self) -> Amount {
        self.balance_1 + self.balance_2
    }

    fn balance_mut(&mut self, a: &Address) -> &mut Amount {
        if a == &self.id.u1 {
            &mut self.balance_1
        } else {
            debug_assert_eq!(a, &self.id.u2);
            &mut self.balance_2
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OnChainLedger {
    balances: BTreeMap<Address, Amount>,
}

impl OnChainLedger {
    pub fn balance(&self, a: &Address) -> Amount {
        self.balances.get(a).copied().unwrap_or(0)
    }

    pub fn set_balance(&mut self, a: Address, amount: Amount) {
        self.balances.insert(a, amount);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Address, &Amount)> {
        self.balances.iter()
    }

    pub fn total(&self) -> u128 {
        self.balances.values().map(|&b| b as u128).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("address must not be empty")]
    EmptyAddress,
    #[error("unknown node {0}")]
    UnknownNode(Address),
    #[error("channel endpoints must be distinct, got {0} twice")]
    SameEndpoints(Address),
    #[error("insufficient on-chain funds for {node}: need {needed}, have {available}")]
    InsufficientOnChainFunds { node: Address, needed: Amount, available: Amount },
    #[error("channel {0} already exists")]
    DuplicateChannel(ChannelId),
    #[error("no such channel {0}")]
    NoSuchChannel(ChannelId),
    #[error("channel {0} is a parent of a live virtual channel")]
    ChannelInUse(ChannelId),
    #[error("insufficient funds on {channel} for {node}: need {needed}, have {available}")]
    InsufficientChannelFunds { channel: ChannelId, node: Address, needed: u128, available: Amount },
    #[error("channels {0} and {1} do not share exactly one intermediary")]
    NoSharedIntermediary(ChannelId, ChannelId),
    #[error("channels do not form a path from the sender: {0}")]
    NotAPath(String),
    #[error("payment amount must be positive")]
    ZeroAmount,
    #[error("fees exceed the payment amount at hop {hop} (forwarded amount {forwarded})")]
    FeesExceedAmount { hop: usize, forwarded: i128 },
}

/// Outcome of a successful [`Vpcn::pay`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaymentReceipt {
    pub receiver: Address,
    /// Amount moved on each hop.
    pub hop_amounts: Vec<Amount>,
}

impl PaymentReceipt {
    pub fn delivered(&self) -> Amount {
        *self.hop_amounts.last().expect("non-empty path")
    }

    pub fn fees(&self) -> Amount {
        self.hop_amounts[0] - self.delivered()
    }
}

/// Amount forwarded on each hop of a path.
///
/// Entry `i` is `v` minus the fees of hops `0..i`; the last hop's own fee is
/// never charged. Values may be negative when fees exceed `v`.
pub fn compute_hop_amounts(path_fees: &[FeeParams], v: Amount) -> Vec<i128> {
    let mut out = Vec::with_capacity(path_fees.len());
    let mut charged: i128 = 0;
    for fees in path_fees {
        out.push(v as i128 - charged);
        charged += fees.hop_fee(v) as i128;
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vpcn {
    nodes: BTreeSet<Address>,
    payment_channels: BTreeMap<ChannelId, ChannelState>,
    virtual_channels: BTreeMap<ChannelId, ChannelState>,
    ledger: OnChainLedger,
}

impl Vpcn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, a: Address) {
        self.nodes.insert(a);
    }

    pub fn nodes(&self) -> &BTreeSet<Address> {
        &self.nodes
    }

    pub fn ledger(&self) -> &OnChainLedger {
        &self.ledger
    }

    pub fn set_onchain_balance(&mut self, a: Address, amount: Amount) -> Result<(), NetworkError> {
        self.require_node(&a)?;
        self.ledger.set_balance(a, amount);
        Ok(())
    }

    pub fn payment_channels(&self) -> impl Iterator<Item = &ChannelState> {
        self.payment_channels.values()
    }

    pub fn virtual_channels(&self) -> impl Iterator<Item = &ChannelState> {
        self.virtual_channels.values()
    }

    pub fn channel(&self, id: &ChannelId) -> Option<&ChannelState> {
        match id.kind {
            ChannelKind::Payment => self.payment_channels.get(id),
            ChannelKind::Virtual => self.virtual_channels.get(id),
        }
    }

    /// Payment channel between `a` and `b` in either orientation.
    pub fn payment_channel_between(&self, a: &Address, b: &Address) -> Option<&ChannelState> {
        self.payment_channels.get(&ChannelId::payment(a.clone(), b.clone()))
    }

    /// Ledger plus channel funds. Funds of a virtual channel are locked once
    /// in each parent, so a channel's balance sum is weighted by the number of
    /// payment channels underneath it.
    pub fn total_value(&self) -> u128 {
        let pcs: u128 = self.payment_channels.values().map(|c| c.total() as u128).sum();
        let vcs: u128 = self
            .virtual_channels
            .values()
            .map(|c| self.collateral_weight(&c.id) * c.total() as u128)
            .sum();
        self.ledger.total() + pcs + vcs
    }

    fn collateral_weight(&self, id: &ChannelId) -> u128 {
        match id.kind {
            ChannelKind::Payment => 1,
            ChannelKind::Virtual => {
                let parents = self.virtual_channels[id].parents.as_ref().expect("virtual channel has parents");
                self.collateral_weight(&parents.first) + self.collateral_weight(&parents.second)
            }
        }
    }

    /// Inserts an already-funded payment channel without touching the ledger.
    /// Used to materialize the initial network of a problem instance.
    pub fn insert_payment_channel(
        &mut self,
        u1: Address,
        u2: Address,
        b1: Amount,
        b2: Amount,
        fees1: FeeParams,
        fees2: FeeParams,
    ) -> Result<ChannelId, NetworkError> {
        let state = self.new_payment_channel(u1, u2, b1, b2, fees1, fees2)?;
        let id = state.id.clone();
        self.payment_channels.insert(id.clone(), state);
        Ok(id)
    }

    fn new_payment_channel(
        &self,
        u1: Address,
        u2: Address,
        b1: Amount,
        b2: Amount,
        fees1: FeeParams,
        fees2: FeeParams,
    ) -> Result<ChannelState, NetworkError> {
        self.require_node(&u1)?;
        self.require_node(&u2)?;
        if u1 == u2 {
            return Err(NetworkError::SameEndpoints(u1));
        }
        let id = ChannelId::payment(u1.clone(), u2.clone());
        if self.payment_channels.contains_key(&id) {
            return Err(NetworkError::DuplicateChannel(id));
        }
        let (balance_1, balance_2, fees_1, fees_2) =
            if id.u1 == u1 { (b1, b2, fees1, fees2) } else { (b2, b1, fees2, fees1) };
        Ok(ChannelState { id, balance_1, balance_2, fees_1, fees_2, parents: None, level: 0 })
    }

    pub fn open_pc(
        &mut self,
        u1: Address,
        u2: Address,
        b1: Amount,
        b2: Amount,
        fees1: FeeParams,
        fees2: FeeParams,
    ) -> Result<ChannelId, NetworkError> {
        for (node, needed) in [(&u1, b1), (&u2, b2)] {
            self.require_node(node)?;
            let available = self.ledger.balance(node);
            if available < needed {
                return Err(NetworkError::InsufficientOnChainFunds { node: node.clone(), needed, available });
            }
        }
        let state = self.new_payment_channel(u1.clone(), u2.clone(), b1, b2, fees1, fees2)?;
        let id = state.id.clone();
        self.ledger.set_balance(u1.clone(), self.ledger.balance(&u1) - b1);
        self.ledger.set_balance(u2.clone(), self.ledger.balance(&u2) - b2);
        self.payment_channels.insert(id.clone(), state);
        Ok(id)
    }

    pub fn close_pc(&mut self, id: &ChannelId) -> Result<(), NetworkError> {
        if id.kind != ChannelKind::Payment || !self.payment_channels.contains_key(id) {
            return Err(NetworkError::NoSuchChannel(id.clone()));
        }
        self.require_unused(id)?;
        let state = self.payment_channels.remove(id).expect("checked above");
        let ChannelState { id, balance_1, balance_2, .. } = state;
        self.ledger.set_balance(id.u1.clone(), self.ledger.balance(&id.u1) + balance_1);
        self.ledger.set_balance(id.u2.clone(), self.ledger.balance(&id.u2) + balance_2);
        Ok(())
    }

    /// Opens a virtual channel from the far end of `parent1` to the far end of
    /// `parent2`. Parents may be payment or virtual channels. The creation fee
    /// moves from the opener to the intermediary on `parent1`.
    #[allow(clippy::too_many_arguments)]
    pub fn open_vc(
        &mut self,
        parent1: &ChannelId,
        parent2: &ChannelId,
        b1: Amount,
        b2: Amount,
        fees1: FeeParams,
        fees2: FeeParams,
        f_create: Amount,
    ) -> Result<ChannelId, NetworkError> {
        let p1 = self.channel(parent1).ok_or_else(|| NetworkError::NoSuchChannel(parent1.clone()))?;
        let p2 = self.channel(parent2).ok_or_else(|| NetworkError::NoSuchChannel(parent2.clone()))?;
        let shared: Vec<&Address> = [&parent1.u1, &parent1.u2].into_iter().filter(|a| parent2.has_endpoint(a)).collect();
        if shared.len() != 1 {
            return Err(NetworkError::NoSharedIntermediary(parent1.clone(), parent2.clone()));
        }
        let mid = shared[0].clone();
        let u1 = parent1.other_end(&mid).expect("endpoint").clone();
        let u2 = parent2.other_end(&mid).expect("endpoint").clone();

        let id = ChannelId::virtual_channel(u1.clone(), u2.clone());
        if self.virtual_channels.contains_key(&id) {
            return Err(NetworkError::DuplicateChannel(id));
        }
        let requirements = [
            (p1, &u1, b1 as u128 + f_create as u128),
            (p1, &mid, b2 as u128),
            (p2, &mid, b1 as u128),
            (p2, &u2, b2 as u128),
        ];
        for (channel, node, needed) in requirements {
            let available = channel.balance_of(node).expect("endpoint");
            if (available as u128) < needed {
                return Err(NetworkError::InsufficientChannelFunds {
                    channel: channel.id.clone(),
                    node: node.clone(),
                    needed,
                    available,
                });
            }
        }
        let level = (Self::recursion_rank(p1).max(Self::recursion_rank(p2)) + 1) as u32;

        let p1 = self.channel_mut(parent1);
        *p1.balance_mut(&u1) -= b1 + f_create;
        *p1.balance_mut(&mid) = *p1.balance_mut(&mid) - b2 + f_create;
        let p2 = self.channel_mut(parent2);
        *p2.balance_mut(&mid) -= b1;
        *p2.balance_mut(&u2) -= b2;

        let state = ChannelState {
            id: id.clone(),
            balance_1: b1,
            balance_2: b2,
            fees_1: fees1,
            fees_2: fees2,
            parents: Some(VirtualParents { first: parent1.clone(), second: parent2.clone(), intermediary: mid }),
            level,
        };
        self.virtual_channels.insert(id.clone(), state);
        Ok(id)
    }

    // payment channels rank -1 so that a vc over two payment channels is level 0
    fn recursion_rank(c: &ChannelState) -> i64 {
        match c.kind() {
            ChannelKind::Payment => -1,
            ChannelKind::Virtual => c.level as i64,
        }
    }

    pub fn close_vc(&mut self, id: &ChannelId) -> Result<(), NetworkError> {
        let vc = match (id.kind, self.virtual_channels.get(id)) {
            (ChannelKind::Virtual, Some(vc)) => vc,
            _ => return Err(NetworkError::NoSuchChannel(id.clone())),
        };
        let parents = vc.parents.clone().expect("virtual channel has parents");
        for p in [&parents.first, &parents.second] {
            if self.channel(p).is_none() {
                return Err(NetworkError::NoSuchChannel(p.clone()));
            }
        }
        self.require_unused(id)?;
        let vc = self.virtual_channels.remove(id).expect("checked above");
        let mid = &parents.intermediary;
        let p1 = self.channel_mut(&parents.first);
        *p1.balance_mut(&vc.id.u1) += vc.balance_1;
        *p1.balance_mut(mid) += vc.balance_2;
        let p2 = self.channel_mut(&parents.second);
        *p2.balance_mut(mid) += vc.balance_1;
        *p2.balance_mut(&vc.id.u2) += vc.balance_2;
        Ok(())
    }

    /// Moves `v` from `id.u1` to `id.u2` on a payment or virtual channel.
    pub fn update_channel(&mut self, id: &ChannelId, v: Amount) -> Result<(), NetworkError> {
        let c = self.channel(id).ok_or_else(|| NetworkError::NoSuchChannel(id.clone()))?;
        if c.balance_1 < v {
            return Err(NetworkError::InsufficientChannelFunds {
                channel: id.clone(),
                node: id.u1.clone(),
                needed: v as u128,
                available: c.balance_1,
            });
        }
        let c = self.channel_mut(id);
        c.balance_1 -= v;
        c.balance_2 += v;
        Ok(())
    }

    /// Pays `v` from `sender` along `path`. Each hop forwards the amount left
    /// after the fees of all upstream hops.
    pub fn pay(&mut self, sender: &Address, path: &[ChannelId], v: Amount) -> Result<PaymentReceipt, NetworkError> {
        if v == 0 {
            return Err(NetworkError::ZeroAmount);
        }
        if path.is_empty() {
            return Err(NetworkError::NotAPath("empty path".into()));
        }
        let mut hops: Vec<(&ChannelState, Address)> = Vec::with_capacity(path.len());
        let mut visited = BTreeSet::from([sender.clone()]);
        let mut cur = sender.clone();
        for id in path {
            let c = self.channel(id).ok_or_else(|| NetworkError::NoSuchChannel(id.clone()))?;
            let next = id
                .other_end(&cur)
                .ok_or_else(|| NetworkError::NotAPath(format!("{id} does not touch {cur}")))?
                .clone();
            if !visited.insert(next.clone()) {
                return Err(NetworkError::NotAPath(format!("node {next} visited twice")));
            }
            hops.push((c, cur));
            cur = next;
        }
        let fees: Vec<FeeParams> = hops.iter().map(|(c, from)| c.fees_of(from).expect("endpoint")).collect();
        let gammas = compute_hop_amounts(&fees, v);
        for (hop, ((c, from), &gamma)) in hops.iter().zip(&gammas).enumerate() {
            if gamma < 0 {
                return Err(NetworkError::FeesExceedAmount { hop, forwarded: gamma });
            }
            let available = c.balance_of(from).expect("endpoint");
            if (available as i128) < gamma {
                return Err(NetworkError::InsufficientChannelFunds {
                    channel: c.id.clone(),
                    node: from.clone(),
                    needed: gamma as u128,
                    available,
                });
            }
        }
        let senders: Vec<Address> = hops.into_iter().map(|(_, from)| from).collect();
        let hop_amounts: Vec<Amount> = gammas.iter().map(|&g| g as Amount).collect();
        for ((id, from), &amount) in path.iter().zip(&senders).zip(&hop_amounts) {
            let c = self.channel_mut(id);
            let to = id.other_end(from).expect("endpoint").clone();
            *c.balance_mut(from) -= amount;
            *c.balance_mut(&to) += amount;
        }
        Ok(PaymentReceipt { receiver: cur, hop_amounts })
    }

    fn channel_mut(&mut self, id: &ChannelId) -> &mut ChannelState {
        let map = match id.kind {
            ChannelKind::Payment => &mut self.payment_channels,
            ChannelKind::Virtual => &mut self.virtual_channels,
        };
        map.get_mut(id).expect("channel existence checked by caller")
    }

    fn require_node(&self, a: &Address) -> Result<(), NetworkError> {
        if self.nodes.contains(a) {
            Ok(())
        } else {
            Err(NetworkError::UnknownNode(a.clone()))
        }
    }

    fn require_unused(&self, id: &ChannelId) -> Result<(), NetworkError> {
        let in_use = self
            .virtual_channels
            .values()
            .filter_map(|vc| vc.parents.as_ref())
            .any(|p| &p.first == id || &p.second == id);
        if in_use {
            Err(NetworkError::ChannelInUse(id.clone()))
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(s: &str) -> Address {
        Address::new(s).unwrap()
    }

    fn net(nodes: &[&str]) -> Vpcn {
        let mut n = Vpcn::new();
        for s in nodes {
            n.add_node(addr(s));
        }
        n
    }

    fn balances(n: &Vpcn, id: &ChannelId) -> (Amount, Amount) {
        let c = n.channel(id).unwrap();
        (c.balance_1, c.balance_2)
    }

    fn abc() -> (Vpcn, ChannelId, ChannelId) {
        let mut n = net(&["A", "B", "C"]);
        let ab = n.insert_payment_channel(addr("A"), addr("B"), 100, 50, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let bc = n.insert_payment_channel(addr("B"), addr("C"), 80, 20, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        (n, ab, bc)
    }

    #[test]
    fn open_pc_moves_ledger_funds() {
        let mut n = net(&["A", "B"]);
        n.set_onchain_balance(addr("A"), 100).unwrap();
        n.set_onchain_balance(addr("B"), 50).unwrap();
        let id = n.open_pc(addr("A"), addr("B"), 60, 50, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        assert_eq!(balances(&n, &id), (60, 50));
        assert_eq!(n.ledger().balance(&addr("A")), 40);
        assert_eq!(n.ledger().balance(&addr("B")), 0);

        n.close_pc(&id).unwrap();
        assert_eq!(n.ledger().balance(&addr("A")), 100);
        assert_eq!(n.ledger().balance(&addr("B")), 50);
        assert!(n.channel(&id).is_none());
    }

    #[test]
    fn open_pc_zero_funding() {
        let mut n = net(&["A", "B"]);
        n.set_onchain_balance(addr("A"), 100).unwrap();
        n.set_onchain_balance(addr("B"), 50).unwrap();
        let before = n.ledger().clone();
        let id = n.open_pc(addr("A"), addr("B"), 0, 0, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        assert_eq!(balances(&n, &id), (0, 0));
        assert_eq!(n.ledger(), &before);
    }

    #[test]
    fn open_pc_rejects_overdraft_and_duplicates() {
        let mut n = net(&["A", "B"]);
        n.set_onchain_balance(addr("A"), 10).unwrap();
        n.set_onchain_balance(addr("B"), 50).unwrap();
        let before = n.clone();
        let err = n.open_pc(addr("A"), addr("B"), 60, 50, FeeParams::ZERO, FeeParams::ZERO).unwrap_err();
        assert!(matches!(err, NetworkError::InsufficientOnChainFunds { .. }));
        assert_eq!(n, before);

        n.open_pc(addr("A"), addr("B"), 1, 1, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let err = n.open_pc(addr("B"), addr("A"), 1, 1, FeeParams::ZERO, FeeParams::ZERO).unwrap_err();
        assert!(matches!(err, NetworkError::DuplicateChannel(_)));
    }

    #[test]
    fn reversed_endpoints_are_canonicalized() {
        let mut n = net(&["A", "B"]);
        let id = n
            .insert_payment_channel(addr("B"), addr("A"), 7, 3, FeeParams::new(1, 0), FeeParams::new(2, 0))
            .unwrap();
        let c = n.channel(&id).unwrap();
        assert_eq!(id.u1, addr("A"));
        assert_eq!(c.balance_of(&addr("B")), Some(7));
        assert_eq!(c.fees_of(&addr("A")), Some(FeeParams::new(2, 0)));
    }

    #[test]
    fn close_pc_unknown_channel() {
        let mut n = net(&["A", "B"]);
        let err = n.close_pc(&ChannelId::payment(addr("A"), addr("B"))).unwrap_err();
        assert!(matches!(err, NetworkError::NoSuchChannel(_)));
    }

    #[test]
    fn open_vc_over_two_payment_channels() {
        let (mut n, ab, bc) = abc();
        let total = n.total_value();
        let vc = n.open_vc(&ab, &bc, 30, 10, FeeParams::ZERO, FeeParams::ZERO, 2).unwrap();
        assert_eq!(balances(&n, &ab), (68, 42));
        assert_eq!(balances(&n, &bc), (50, 10));
        assert_eq!(balances(&n, &vc), (30, 10));
        let state = n.channel(&vc).unwrap();
        assert_eq!(state.level, 0);
        assert_eq!(state.parents.as_ref().unwrap().intermediary, addr("B"));
        assert_eq!(n.total_value(), total);

        // close immediately: the creation fee stays with the intermediary
        n.close_vc(&vc).unwrap();
        assert_eq!(balances(&n, &ab), (98, 52));
        assert_eq!(balances(&n, &bc), (80, 20));
        assert_eq!(n.total_value(), total);
    }

    #[test]
    fn open_vc_zero_funding() {
        let (mut n, ab, bc) = abc();
        let vc = n.open_vc(&ab, &bc, 0, 0, FeeParams::ZERO, FeeParams::ZERO, 0).unwrap();
        assert_eq!(balances(&n, &ab), (100, 50));
        assert_eq!(balances(&n, &bc), (80, 20));
        assert_eq!(balances(&n, &vc), (0, 0));
    }

    #[test]
    fn open_vc_rejects_insufficient_funds() {
        let mut n = net(&["A", "B", "C"]);
        let ab = n.insert_payment_channel(addr("A"), addr("B"), 5, 50, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let bc = n.insert_payment_channel(addr("B"), addr("C"), 80, 20, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let before = n.clone();
        let err = n.open_vc(&ab, &bc, 30, 10, FeeParams::ZERO, FeeParams::ZERO, 2).unwrap_err();
        assert!(matches!(err, NetworkError::InsufficientChannelFunds { .. }));
        assert_eq!(n, before);
    }

    #[test]
    fn open_vc_requires_single_intermediary() {
        let mut n = net(&["A", "B", "C", "D"]);
        let ab = n.insert_payment_channel(addr("A"), addr("B"), 5, 5, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let cd = n.insert_payment_channel(addr("C"), addr("D"), 5, 5, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let err = n.open_vc(&ab, &cd, 1, 0, FeeParams::ZERO, FeeParams::ZERO, 0).unwrap_err();
        assert!(matches!(err, NetworkError::NoSharedIntermediary(..)));
        let err = n.open_vc(&ab, &ab, 1, 0, FeeParams::ZERO, FeeParams::ZERO, 0).unwrap_err();
        assert!(matches!(err, NetworkError::NoSharedIntermediary(..)));
    }

    #[test]
    fn opposite_virtual_channels_coexist_and_nest() {
        let mut n = net(&["A", "B", "C", "D"]);
        let ab = n.insert_payment_channel(addr("A"), addr("B"), 50, 50, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let bc = n.insert_payment_channel(addr("B"), addr("C"), 50, 50, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let cd = n.insert_payment_channel(addr("C"), addr("D"), 50, 50, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let total = n.total_value();
        let ac = n.open_vc(&ab, &bc, 10, 0, FeeParams::ZERO, FeeParams::ZERO, 0).unwrap();
        let ca = n.open_vc(&bc, &ab, 10, 0, FeeParams::ZERO, FeeParams::ZERO, 0).unwrap();
        assert_ne!(ac, ca);
        let ad = n.open_vc(&ac, &cd, 10, 0, FeeParams::ZERO, FeeParams::ZERO, 0).unwrap();
        assert_eq!(n.channel(&ad).unwrap().level, 1);
        assert_eq!(balances(&n, &ac), (0, 0));
        assert_eq!(n.total_value(), total);

        assert!(matches!(n.close_vc(&ac), Err(NetworkError::ChannelInUse(_))));
        assert!(matches!(n.close_pc(&cd), Err(NetworkError::ChannelInUse(_))));
        n.close_vc(&ad).unwrap();
        n.close_vc(&ac).unwrap();
        n.close_vc(&ca).unwrap();
        assert_eq!(n.total_value(), total);
        assert_eq!(balances(&n, &ab), (50, 50));
    }

    #[test]
    fn close_vc_after_payment_credits_current_balances() {
        let (mut n, ab, bc) = abc();
        let vc = n.open_vc(&ab, &bc, 30, 10, FeeParams::ZERO, FeeParams::ZERO, 0).unwrap();
        n.pay(&addr("A"), std::slice::from_ref(&vc), 10).unwrap();
        assert_eq!(balances(&n, &vc), (20, 20));
        let (ab_before, bc_before) = (balances(&n, &ab), balances(&n, &bc));
        n.close_vc(&vc).unwrap();
        assert_eq!(balances(&n, &ab), (ab_before.0 + 20, ab_before.1 + 20));
        assert_eq!(balances(&n, &bc), (bc_before.0 + 20, bc_before.1 + 20));
        assert!(matches!(n.close_vc(&vc), Err(NetworkError::NoSuchChannel(_))));
    }

    #[test]
    fn update_channel_moves_value() {
        let mut n = net(&["A", "B"]);
        let id = n.insert_payment_channel(addr("A"), addr("B"), 60, 50, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        n.update_channel(&id, 10).unwrap();
        assert_eq!(balances(&n, &id), (50, 60));
        n.update_channel(&id, 0).unwrap();
        assert_eq!(balances(&n, &id), (50, 60));
        let err = n.update_channel(&id, 51).unwrap_err();
        assert!(matches!(err, NetworkError::InsufficientChannelFunds { .. }));
        assert_eq!(balances(&n, &id), (50, 60));
    }

    #[test]
    fn hop_amounts() {
        let fee = |b, p| FeeParams::new(b, p);
        assert_eq!(compute_hop_amounts(&[fee(7, 300_000)], 100), vec![100]);
        assert_eq!(compute_hop_amounts(&[fee(1, 10_000), fee(0, 0)], 20), vec![20, 18]);
        assert_eq!(compute_hop_amounts(&[fee(1, 0), fee(1, 0), fee(9, 9)], 5), vec![5, 4, 3]);
        assert_eq!(compute_hop_amounts(&[fee(10, 0), fee(0, 0)], 5), vec![5, -5]);
    }

    #[test]
    fn proportional_fee_rounds_up() {
        assert_eq!(FeeParams::new(0, 1).proportional_fee(1), 1);
        assert_eq!(FeeParams::new(0, 500_000).proportional_fee(3), 2);
        assert_eq!(FeeParams::new(0, 250_000).proportional_fee(4), 1);
        assert_eq!(FeeParams::new(0, 0).proportional_fee(1_000), 0);
    }

    #[test]
    fn pay_two_hops_with_fees() {
        let mut n = net(&["A", "B", "C"]);
        let ab = n
            .insert_payment_channel(addr("A"), addr("B"), 100, 50, FeeParams::new(1, 10_000), FeeParams::ZERO)
            .unwrap();
        let bc = n.insert_payment_channel(addr("B"), addr("C"), 80, 20, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let receipt = n.pay(&addr("A"), &[ab.clone(), bc.clone()], 20).unwrap();
        assert_eq!(balances(&n, &ab), (80, 70));
        assert_eq!(balances(&n, &bc), (62, 38));
        assert_eq!(receipt.delivered(), 18);
        assert_eq!(receipt.fees(), 2);
        assert_eq!(receipt.receiver, addr("C"));
    }

    #[test]
    fn pay_exact_balance_and_atomic_abort() {
        let mut n = net(&["A", "B", "C"]);
        let ab = n.insert_payment_channel(addr("A"), addr("B"), 30, 0, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let bc = n.insert_payment_channel(addr("B"), addr("C"), 10, 0, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        n.pay(&addr("B"), std::slice::from_ref(&bc), 10).unwrap();
        assert_eq!(balances(&n, &bc), (0, 10));

        let before = n.clone();
        let err = n.pay(&addr("A"), &[ab, bc], 20).unwrap_err();
        assert!(matches!(err, NetworkError::InsufficientChannelFunds { .. }));
        assert_eq!(n, before);
    }

    #[test]
    fn pay_rejects_non_paths() {
        let (mut n, ab, bc) = abc();
        let before = n.clone();
        assert!(matches!(n.pay(&addr("C"), std::slice::from_ref(&ab), 1), Err(NetworkError::NotAPath(_))));
        assert!(matches!(n.pay(&addr("A"), &[ab.clone(), ab.clone()], 1), Err(NetworkError::NotAPath(_))));
        assert!(matches!(n.pay(&addr("A"), &[], 1), Err(NetworkError::NotAPath(_))));
        assert!(matches!(n.pay(&addr("A"), &[ab, bc], 0), Err(NetworkError::ZeroAmount)));
        assert_eq!(n, before);
    }

    #[test]
    fn pay_rejects_fees_larger_than_amount() {
        let mut n = net(&["A", "B", "C"]);
        let ab = n.insert_payment_channel(addr("A"), addr("B"), 30, 30, FeeParams::new(10, 0), FeeParams::ZERO).unwrap();
        let bc = n.insert_payment_channel(addr("B"), addr("C"), 30, 30, FeeParams::ZERO, FeeParams::ZERO).unwrap();
        let before = n.clone();
        let err = n.pay(&addr("A"), &[ab, bc], 5).unwrap_err();
        assert!(matches!(err, NetworkError::FeesExceedAmount { hop: 1, .. }));
        assert_eq!(n, before);
    }
}
