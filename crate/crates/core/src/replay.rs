//! Executes a placement solution on the channel state machine: opens the
//! chosen virtual channels, pays every successful transaction along its
//! route and audits the result against what the solution promised.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Instance;
use crate::network::{Address, Amount, ChannelId, ChannelKind, Vpcn};
use crate::solution::{PlacedVc, Solution, SolutionStatus, VcFamily};

/// Who pays the creation cost of a virtual channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CreationFeeSource {
    /// A wallet funded with the instance budget pays the intermediary's
    /// on-chain account, leaving channel balances untouched.
    #[default]
    ExternalWallet,
    /// The opener pays the intermediary out of its balance on the first
    /// parent channel.
    OnChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplayOrder {
    #[default]
    Seq,
    ReverseSeq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayOptions {
    pub creation_fee: CreationFeeSource,
    pub order: ReplayOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub step: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayedTransaction {
    pub seq: usize,
    pub amount: Amount,
    /// Amount that reached the receiver, absent if the payment failed.
    pub delivered: Option<Amount>,
    pub fees: Amount,
    /// Amount moved on each hop.
    #[serde(default)]
    pub hop_amounts: Vec<Amount>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSnapshot {
    pub kind: ChannelKind,
    pub u1: Address,
    pub u2: Address,
    pub balance_1: Amount,
    pub balance_2: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub order: ReplayOrder,
    pub creation_fee: CreationFeeSource,
    pub opened_vcs: usize,
    pub delivered_total: Amount,
    pub fees_total: Amount,
    /// routing cost the solution reported
    pub expected_fees_total: Amount,
    pub wallet_before: Amount,
    pub wallet_after: Amount,
    /// ledger, channel funds and wallet before and after
    pub value_before: u64,
    pub value_after: u64,
    #[serde(default)]
    pub divergences: Vec<Divergence>,
    #[serde(default)]
    pub transactions: Vec<ReplayedTransaction>,
    #[serde(default)]
    pub channels: Vec<ChannelSnapshot>,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.divergences.is_empty()
    }

    pub fn ensure_clean(&self) -> Result<(), ReplayError> {
        if self.is_clean() {
            Ok(())
        } else {
            Err(ReplayError::Divergence(self.divergences.clone()))
        }
    }

    pub fn to_report(&self) -> String {
        toml::to_string(self).expect("replay report serializes")
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("only optimal solutions can be replayed, got {}", .0.as_str())]
    NotOptimal(SolutionStatus),
    #[error("solution does not fit the instance: {0}")]
    Mismatch(String),
    #[error("replay diverged from the solution: {}", describe(.0))]
    Divergence(Vec<Divergence>),
}

fn describe(d: &[Divergence]) -> String {
    d.iter().map(|d| format!("{}: {}", d.step, d.error)).collect::<Vec<_>>().join("; ")
}

fn value(net: &Vpcn, wallet: Amount) -> u64 {
    u64::try_from(net.total_value() + wallet as u128).unwrap_or(u64::MAX)
}

fn parent_ids(vc: &PlacedVc) -> (ChannelId, ChannelId) {
    let first = match vc.family {
        VcFamily::PcPc | VcFamily::PcVc => ChannelId::payment(vc.from.clone(), vc.via.clone()),
        VcFamily::VcPc | VcFamily::VcVc => ChannelId::virtual_channel(vc.from.clone(), vc.via.clone()),
    };
    let second = match vc.family {
        VcFamily::PcPc | VcFamily::VcPc => ChannelId::payment(vc.via.clone(), vc.to.clone()),
        VcFamily::PcVc | VcFamily::VcVc => ChannelId::virtual_channel(vc.via.clone(), vc.to.clone()),
    };
    (first, second)
}

pub fn replay_solution(inst: &Instance, sol: &Solution, opts: &ReplayOptions) -> Result<ReplayReport, ReplayError> {
    if sol.status != SolutionStatus::Optimal {
        return Err(ReplayError::NotOptimal(sol.status));
    }
    let mut net = inst.network.clone();
    for a in sol.vcs.iter().flat_map(|v| [&v.from, &v.to, &v.via]) {
        if !net.nodes().contains(a) {
            return Err(ReplayError::Mismatch(format!("unknown node {a}")));
        }
    }
    let mut wallet = inst.budget;
    let wallet_before = wallet;
    let value_before = value(&net, wallet);
    let mut divergences = Vec::new();

    let mut vcs: Vec<&PlacedVc> = sol.vcs.iter().collect();
    vcs.sort_by_key(|v| v.level);
    let mut opened = 0;
    for vc in vcs {
        let step = format!("open {}->{} over {}", vc.from, vc.to, vc.via);
        let params = inst.vc_params(&vc.from, &vc.to);
        let on_channel = opts.creation_fee == CreationFeeSource::OnChannel;
        if !on_channel && wallet < params.creation_cost {
            divergences.push(Divergence { step, error: "creation cost exceeds the remaining budget".into() });
            continue;
        }
        let (first, second) = parent_ids(vc);
        let f_create = if on_channel { params.creation_cost } else { 0 };
        match net.open_vc(&first, &second, vc.capacity, 0, params.fees_1, params.fees_2, f_create) {
            Ok(_) => {
                opened += 1;
                if !on_channel {
                    wallet -= params.creation_cost;
                    let credited = net.ledger().balance(&vc.via) + params.creation_cost;
                    net.set_onchain_balance(vc.via.clone(), credited).expect("known node");
                }
            }
            Err(e) => divergences.push(Divergence { step, error: e.to_string() }),
        }
    }

    let mut order: Vec<_> = sol.successful().collect();
    order.sort_by_key(|t| t.seq);
    if opts.order == ReplayOrder::ReverseSeq {
        order.reverse();
    }
    let mut transactions = Vec::new();
    for t in order {
        let step = format!("pay transaction {}", t.seq);
        let path: Vec<ChannelId> = t
            .route
            .iter()
            .map(|h| match h.kind {
                ChannelKind::Payment => ChannelId::payment(h.from.clone(), h.to.clone()),
                ChannelKind::Virtual => ChannelId::virtual_channel(h.from.clone(), h.to.clone()),
            })
            .collect();
        let mut replayed =
            ReplayedTransaction { seq: t.seq, amount: t.amount, delivered: None, fees: 0, hop_amounts: Vec::new() };
        match net.pay(&t.source, &path, t.amount) {
            Ok(receipt) => {
                if receipt.receiver != t.receiver {
                    divergences.push(Divergence { step: step.clone(), error: format!("route ends at {}", receipt.receiver) });
                }
                if receipt.fees() != t.routing_cost {
                    divergences.push(Divergence {
                        step: step.clone(),
                        error: format!("fees {} differ from routing cost {}", receipt.fees(), t.routing_cost),
                    });
                }
                replayed.delivered = Some(receipt.delivered());
                replayed.fees = receipt.fees();
                replayed.hop_amounts = receipt.hop_amounts;
            }
            Err(e) => divergences.push(Divergence { step, error: e.to_string() }),
        }
        transactions.push(replayed);
    }
    transactions.sort_by_key(|t| t.seq);

    let value_after = value(&net, wallet);
    if value_after != value_before {
        divergences.push(Divergence {
            step: "conservation".into(),
            error: format!("total value changed from {value_before} to {value_after}"),
        });
    }
    if opts.creation_fee == CreationFeeSource::ExternalWallet
        && divergences.is_empty()
        && wallet_before - wallet != sol.creation_cost
    {
        divergences.push(Divergence {
            step: "wallet".into(),
            error: format!("wallet paid {} for a creation cost of {}", wallet_before - wallet, sol.creation_cost),
        });
    }

    let channels = net
        .payment_channels()
        .chain(net.virtual_channels())
        .map(|c| ChannelSnapshot {
            kind: c.id.kind,
            u1: c.id.u1.clone(),
            u2: c.id.u2.clone(),
            balance_1: c.balance_1,
            balance_2: c.balance_2,
        })
        .collect();
    Ok(ReplayReport {
        order: opts.order,
        creation_fee: opts.creation_fee,
        opened_vcs: opened,
        delivered_total: transactions.iter().filter_map(|t| t.delivered).sum(),
        fees_total: transactions.iter().map(|t| t.fees).sum(),
        expected_fees_total: sol.total_routing_cost(),
        wallet_before,
        wallet_after: wallet,
        value_before,
        value_after,
        divergences,
        transactions,
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_instance;
    use crate::solution::{optimize, OptimizeConfig};

    const DIRECT: &str = r#"
nodes = ["A", "B"]
budget = 0

[[payment_channels]]
endpoints = ["A", "B"]
balance_1 = 100
balance_2 = 0

[[demand]]
source = "A"
receiver = "B"
amount = 40
"#;

    #[test]
    fn direct_payment_is_clean() {
        let inst = parse_instance(DIRECT).unwrap();
        let sol = optimize(&inst, &OptimizeConfig::default()).unwrap().solution;
        let report = replay_solution(&inst, &sol, &ReplayOptions::default()).unwrap();
        report.ensure_clean().unwrap();
        assert_eq!(report.delivered_total, 40);
        assert_eq!(report.fees_total, 0);
        let back: ReplayReport = toml::from_str(&report.to_report()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn empty_solution_is_trivially_clean() {
        let inst = parse_instance(DIRECT).unwrap();
        let sol = Solution::empty(&inst, SolutionStatus::Optimal);
        let report = replay_solution(&inst, &sol, &ReplayOptions::default()).unwrap();
        assert!(report.is_clean());
        assert_eq!((report.opened_vcs, report.transactions.len()), (0, 0));
    }

    #[test]
    fn refuses_non_optimal() {
        let inst = parse_instance(DIRECT).unwrap();
        let sol = Solution::empty(&inst, SolutionStatus::LimitHit);
        assert!(matches!(replay_solution(&inst, &sol, &ReplayOptions::default()), Err(ReplayError::NotOptimal(_))));
    }
}
