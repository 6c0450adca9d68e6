//! Seeded random instances shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vpcn::ingest::{parse_instance, Instance};

const NAMES: [&str; 4] = ["A", "B", "C", "D"];

/// Ranges the generator draws from. Everything stays inside the oracle
/// envelope: at most 4 nodes, 5 payment channels, 3 transactions and
/// recursion level 1.
#[derive(Debug, Clone, Copy)]
pub struct Regime {
    pub min_amount: u64,
    pub max_amount: u64,
    pub base_fees: (u64, u64),
    pub ppm_choices: &'static [u64],
    pub vc_base_fees: (u64, u64),
    pub vc_ppm_choices: &'static [u64],
    pub max_balance: u64,
    pub max_budget: u64,
    pub max_creation_cost: u64,
    /// At least three nodes, joined by a random spanning path of channels.
    pub connected: bool,
}

/// Fees small enough that no payment of the regime loses its whole amount
/// to fees on a path of at most four hops, so every route the model accepts
/// can also be paid on the channel state machine.
pub const PAYABLE: Regime = Regime {
    min_amount: 8,
    max_amount: 20,
    base_fees: (0, 1),
    ppm_choices: &[0, 5_000, 20_000, 50_000],
    vc_base_fees: (0, 1),
    vc_ppm_choices: &[0, 5_000, 20_000, 50_000],
    max_balance: 30,
    max_budget: 30,
    max_creation_cost: 4,
    connected: false,
};

/// Larger fees; some routes cost more than they deliver.
pub const WIDE: Regime = Regime {
    min_amount: 1,
    max_amount: 20,
    base_fees: (0, 4),
    ppm_choices: &[0, 10_000, 100_000, 250_000],
    vc_base_fees: (0, 4),
    vc_ppm_choices: &[0, 10_000, 100_000, 250_000],
    max_balance: 25,
    max_budget: 30,
    max_creation_cost: 6,
    connected: false,
};

/// Relaying is expensive and budgets are tight, so the optimum often
/// depends on opening virtual channels. Amounts stay payable.
pub const RELAY_HEAVY: Regime = Regime {
    min_amount: 8,
    max_amount: 20,
    base_fees: (0, 1),
    ppm_choices: &[20_000, 50_000],
    vc_base_fees: (0, 0),
    vc_ppm_choices: &[0],
    max_balance: 40,
    max_budget: 6,
    max_creation_cost: 2,
    connected: true,
};

pub fn instance_text(rng: &mut ChaCha8Rng, regime: &Regime) -> String {
    let n = rng.gen_range(if regime.connected { 3 } else { 2 }..=4);
    let nodes = &NAMES[..n];
    let mut s = String::new();
    let quoted: Vec<String> = nodes.iter().map(|a| format!("{a:?}")).collect();
    let _ = writeln!(s, "nodes = [{}]", quoted.join(", "));
    let _ = writeln!(s, "budget = {}", rng.gen_range(0..=regime.max_budget));
    let _ = writeln!(s, "max_level = {}", rng.gen_range(0..=1));
    let fee = |rng: &mut ChaCha8Rng| {
        (rng.gen_range(regime.base_fees.0..=regime.base_fees.1), *regime.ppm_choices.choose(rng).unwrap())
    };
    let vc_fee = |rng: &mut ChaCha8Rng| {
        (rng.gen_range(regime.vc_base_fees.0..=regime.vc_base_fees.1), *regime.vc_ppm_choices.choose(rng).unwrap())
    };
    let (b1, p1) = vc_fee(rng);
    let (b2, p2) = vc_fee(rng);
    let _ = writeln!(s, "\n[vc_defaults]");
    let _ = writeln!(s, "creation_cost = {}", rng.gen_range(0..=regime.max_creation_cost));
    let _ = writeln!(s, "base_fee_1 = {b1}\nprop_fee_ppm_1 = {p1}\nbase_fee_2 = {b2}\nprop_fee_ppm_2 = {p2}");

    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    pairs.shuffle(rng);
    let mut count = rng.gen_range(0..=pairs.len().min(5));
    if regime.connected {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let spine: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect();
        pairs.retain(|p| !spine.contains(p));
        pairs.splice(0..0, spine);
        count = count.max(n - 1);
    }
    for &(a, b) in &pairs[..count] {
        let (b1, p1) = fee(rng);
        let (b2, p2) = fee(rng);
        let _ = writeln!(s, "\n[[payment_channels]]\nendpoints = [{:?}, {:?}]", nodes[a], nodes[b]);
        let _ = writeln!(s, "balance_1 = {}\nbalance_2 = {}", rng.gen_range(0..=regime.max_balance), rng.gen_range(0..=regime.max_balance));
        let _ = writeln!(s, "base_fee_1 = {b1}\nprop_fee_ppm_1 = {p1}\nbase_fee_2 = {b2}\nprop_fee_ppm_2 = {p2}");
    }
    if n >= 3 && rng.gen_bool(0.3) {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        let _ = writeln!(s, "\n[[vc_overrides]]\nendpoints = [{:?}, {:?}]", nodes[a], nodes[b]);
        let _ = writeln!(s, "creation_cost = {}", rng.gen_range(0..=regime.max_creation_cost));
    }
    for _ in 0..rng.gen_range(0..=3) {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        let _ = writeln!(s, "\n[[demand]]\nsource = {:?}\nreceiver = {:?}", nodes[a], nodes[b]);
        let _ = writeln!(s, "amount = {}", rng.gen_range(regime.min_amount..=regime.max_amount));
    }
    s
}

/// `count` instances; instance `k` depends only on `(seed, k)`.
pub fn corpus(seed: u64, count: usize, regime: &Regime) -> Vec<(String, Instance)> {
    (0..count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
            let text = instance_text(&mut rng, regime);
            let inst = parse_instance(&text).unwrap_or_else(|e| panic!("generated instance fails to parse: {e}\n{text}"));
            (text, inst)
        })
        .collect()
}
pub mod ops;
