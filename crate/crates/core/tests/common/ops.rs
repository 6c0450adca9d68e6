//! Random operation sequences on the channel state machine.

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use vpcn::network::{Address, Amount, ChannelId, FeeParams, Vpcn};

const NODES: usize = 4;

#[derive(Debug, Clone)]
pub enum Op {
    OpenPc { a: usize, b: usize, b1: Amount, b2: Amount, fees: (Amount, u64) },
    ClosePc { pick: usize },
    OpenVc { first: usize, second: usize, b1: Amount, b2: Amount, fee: Amount },
    CloseVc { pick: usize },
    Update { pick: usize, v: Amount },
    /// Walks from `sender`, at each step taking the `steps[i]`-th channel
    /// that leads to an unvisited node.
    Pay { sender: usize, steps: Vec<usize>, v: Amount },
}

fn open_pc() -> impl Strategy<Value = Op> {
    (0..NODES, 0..NODES, 0..60u64, 0..60u64, 0..3u64, prop::sample::select(vec![0u64, 10_000, 100_000]))
        .prop_map(|(a, b, b1, b2, base, ppm)| Op::OpenPc { a, b, b1, b2, fees: (base, ppm) })
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        3 => open_pc(),
        1 => any::<usize>().prop_map(|pick| Op::ClosePc { pick }),
        3 => (any::<usize>(), any::<usize>(), 0..15u64, 0..15u64, 0..4u64)
            .prop_map(|(first, second, b1, b2, fee)| Op::OpenVc { first, second, b1, b2, fee }),
        1 => any::<usize>().prop_map(|pick| Op::CloseVc { pick }),
        2 => (any::<usize>(), 0..40u64).prop_map(|(pick, v)| Op::Update { pick, v }),
        5 => (0..NODES, prop::collection::vec(any::<usize>(), 1..4), 0..40u64)
            .prop_map(|(sender, steps, v)| Op::Pay { sender, steps, v }),
    ]
}

/// Initial on-chain balances and a sequence of operations.
pub fn scenario() -> impl Strategy<Value = (Vec<Amount>, Vec<Op>)> {
    let ops = (prop::collection::vec(open_pc(), 2..5), prop::collection::vec(op(), 1..40)).prop_map(|(mut a, b)| {
        a.extend(b);
        a
    });
    (prop::collection::vec(0..250u64, NODES), ops)
}

fn addr(i: usize) -> Address {
    Address::new(["A", "B", "C", "D"][i]).expect("valid address")
}

fn all_channels(net: &Vpcn) -> Vec<ChannelId> {
    net.payment_channels().chain(net.virtual_channels()).map(|c| c.id.clone()).collect()
}

fn pick<T: Clone>(items: &[T], k: usize) -> Option<T> {
    (!items.is_empty()).then(|| items[k % items.len()].clone())
}

/// Funds held by a channel and everything built on top of it.
fn locked(net: &Vpcn, id: &ChannelId) -> u128 {
    let own = net.channel(id).expect("live channel").total() as u128;
    let children: u128 = net
        .virtual_channels()
        .filter(|c| c.parents.as_ref().is_some_and(|p| &p.first == id || &p.second == id))
        .map(|c| locked(net, &c.id))
        .sum();
    own + children
}

fn apply(net: &mut Vpcn, op: &Op) -> Result<(), vpcn::network::NetworkError> {
    match op {
        Op::OpenPc { a, b, b1, b2, fees } => {
            let f = FeeParams::new(fees.0, fees.1);
            net.open_pc(addr(*a), addr(*b), *b1, *b2, f, f).map(drop)
        }
        Op::ClosePc { pick: k } => {
            let pcs: Vec<ChannelId> = net.payment_channels().map(|c| c.id.clone()).collect();
            match pick(&pcs, *k) {
                Some(id) => net.close_pc(&id),
                None => Ok(()),
            }
        }
        Op::OpenVc { first, second, b1, b2, fee } => {
            let all = all_channels(net);
            let Some(p1) = pick(&all, *first) else { return Ok(()) };
            // mostly channels sharing an endpoint with the first parent
            let adjacent: Vec<ChannelId> = all
                .iter()
                .filter(|c| **c != p1 && (c.has_endpoint(&p1.u1) || c.has_endpoint(&p1.u2)))
                .cloned()
                .collect();
            let candidates = if *second % 8 == 0 || adjacent.is_empty() { &all } else { &adjacent };
            let p2 = pick(candidates, *second / 8).expect("non-empty");
            net.open_vc(&p1, &p2, *b1, *b2, FeeParams::new(1, 0), FeeParams::ZERO, *fee).map(drop)
        }
        Op::CloseVc { pick: k } => {
            let vcs: Vec<ChannelId> = net.virtual_channels().map(|c| c.id.clone()).collect();
            match pick(&vcs, *k) {
                Some(id) => net.close_vc(&id),
                None => Ok(()),
            }
        }
        Op::Update { pick: k, v } => match pick(&all_channels(net), *k) {
            Some(id) => net.update_channel(&id, *v),
            None => Ok(()),
        },
        Op::Pay { sender, steps, v } => {
            let mut cur = addr(*sender);
            let mut visited = vec![cur.clone()];
            let mut path = Vec::new();
            for &k in steps {
                let options: Vec<ChannelId> = all_channels(net)
                    .into_iter()
                    .filter(|id| id.other_end(&cur).is_some_and(|o| !visited.contains(o)))
                    .collect();
                let Some(id) = pick(&options, k) else { break };
                cur = id.other_end(&cur).expect("filtered").clone();
                visited.push(cur.clone());
                path.push(id);
            }
            if path.is_empty() {
                return Ok(());
            }
            let before = net.channel(&path[0]).and_then(|c| c.balance_of(&addr(*sender)));
            let receipt = net.pay(&addr(*sender), &path, *v)?;
            let after = net.channel(&path[0]).and_then(|c| c.balance_of(&addr(*sender)));
            assert_eq!(before.zip(after).map(|(b, a)| b - a), Some(*v), "sender pays the full amount");
            assert_eq!(receipt.receiver, cur);
            assert!(receipt.hop_amounts.windows(2).all(|w| w[0] >= w[1]));
            Ok(())
        }
    }
}

/// Runs one scenario, checking after every operation that total value is
/// unchanged, that a failed operation leaves the network untouched and that
/// funds locked under each payment channel stay what it was opened with.
pub fn check_scenario(ledger: &[Amount], ops: &[Op]) -> Result<(), TestCaseError> {
    let mut net = Vpcn::new();
    for (i, &b) in ledger.iter().enumerate() {
        net.add_node(addr(i));
        net.set_onchain_balance(addr(i), b).map_err(|e| TestCaseError::fail(e.to_string()))?;
    }
    let value = net.total_value();
    let mut funding: BTreeMap<ChannelId, u128> = BTreeMap::new();
    for op in ops {
        let before = net.clone();
        match apply(&mut net, op) {
            Ok(()) => {}
            Err(e) => prop_assert_eq!(&net, &before, "{:?} failed with {} but changed the network", op, e),
        }
        prop_assert_eq!(net.total_value(), value, "value changed by {:?}", op);
        funding.retain(|id, _| net.channel(id).is_some());
        for c in net.payment_channels() {
            let now = locked(&net, &c.id);
            let opened = *funding.entry(c.id.clone()).or_insert(now);
            prop_assert_eq!(now, opened, "funds under {} changed by {:?}", c.id, op);
        }
    }
    Ok(())
}
