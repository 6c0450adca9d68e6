//! Depth-first branch-and-bound over the binaries of a [`MilpModel`].

use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::model::MilpModel;
use super::simplex::{solve_bounded, LpData, LpStatus};
use super::{Branching, SolverConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("simplex iteration limit reached at search node {node}")]
    IterationLimit { node: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
}

impl MilpStatus {
    pub fn hit_limit(self) -> bool {
        matches!(self, MilpStatus::NodeLimit | MilpStatus::TimeLimit)
    }
}

#[derive(Debug, Clone)]
pub struct MilpOutcome {
    pub status: MilpStatus,
    /// Best integral solution found, if any.
    pub incumbent: Option<(f64, Vec<f64>)>,
    pub nodes: u64,
}

impl MilpOutcome {
    pub fn objective(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|(o, _)| *o)
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.incumbent.as_ref().map(|(_, v)| v.as_slice())
    }
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// LP objective of the parent, used to assert bound monotonicity
    parent_bound: f64,
    /// best objective any descendant can reach
    prune_bound: f64,
}

struct Shared {
    stack: Vec<Node>,
    active: usize,
    nodes: u64,
    incumbent: Option<(f64, Vec<f64>)>,
    stop: Option<MilpStatus>,
    error: Option<SolverError>,
    unbounded: bool,
}

struct Search<'a> {
    data: LpData,
    cfg: &'a SolverConfig,
    integral_objective: bool,
    /// `floor_value[v]`: largest objective value at most `v` that some
    /// binary assignment reaches, when the objective is a non-negative
    /// integer combination of binaries with a small total
    floor_value: Option<Vec<u32>>,
    started: Instant,
    shared: Mutex<Shared>,
}

pub fn solve_milp(model: &MilpModel, cfg: &SolverConfig) -> Result<MilpOutcome, SolverError> {
    cfg.validate()?;
    let data = LpData::from_model(model);
    let root = Node { lower: data.lower.clone(), upper: data.upper.clone(), parent_bound: f64::INFINITY, prune_bound: f64::INFINITY };
    let search = Search {
        data,
        cfg,
        integral_objective: model.objective_is_integral(),
        floor_value: reachable_objective_values(model),
        started: Instant::now(),
        shared: Mutex::new(Shared {
            stack: vec![root],
            active: 0,
            nodes: 0,
            incumbent: None,
            stop: None,
            error: None,
            unbounded: false,
        }),
    };
    if cfg.threads == 1 {
        search.work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..cfg.threads {
                s.spawn(|| search.work());
            }
        });
    }
    let shared = search.shared.into_inner().expect("search worker panicked");
    if let Some(e) = shared.error {
        return Err(e);
    }
    let status = if shared.unbounded {
        MilpStatus::Unbounded
    } else if let Some(limit) = shared.stop {
        limit
    } else if shared.incumbent.is_some() {
        MilpStatus::Optimal
    } else {
        MilpStatus::Infeasible
    };
    Ok(MilpOutcome { status, incumbent: shared.incumbent, nodes: shared.nodes })
}

impl Search<'_> {
    fn lock(&self) -> std::sync::MutexGuard<'_, Shared> {
        self.shared.lock().expect("search worker panicked")
    }

    /// Pops the next node, or `None` once the search is over.
    fn next_node(&self) -> Option<(Node, u64)> {
        loop {
            let mut st = self.lock();
            if st.stop.is_some() || st.error.is_some() || st.unbounded {
                return None;
            }
            if !st.stack.is_empty() {
                if self.cfg.node_limit.is_some_and(|limit| st.nodes >= limit) {
                    st.stop = Some(MilpStatus::NodeLimit);
                    return None;
                }
                if self.cfg.time_limit_ms.is_some_and(|ms| self.started.elapsed() > Duration::from_millis(ms)) {
                    st.stop = Some(MilpStatus::TimeLimit);
                    return None;
                }
                let node = st.stack.pop().expect("non-empty stack");
                if self.prunable(node.prune_bound, &st.incumbent) {
                    continue;
                }
                st.active += 1;
                st.nodes += 1;
                return Some((node, st.nodes));
            }
            if st.active == 0 {
                return None;
            }
            drop(st);
            std::thread::sleep(Duration::from_micros(50));
        }
    }

    fn prunable(&self, bound: f64, incumbent: &Option<(f64, Vec<f64>)>) -> bool {
        match incumbent {
            None => false,
            Some((best, _)) if self.integral_objective => bound < best + 0.5,
            Some((best, _)) => bound <= best + self.cfg.feasibility_tol,
        }
    }

    fn work(&self) {
        while let Some((node, id)) = self.next_node() {
            let lp = solve_bounded(&self.data, &node.lower, &node.upper, true, self.cfg);
            let mut children = Vec::new();
            let mut found = None;
            match lp.status {
                LpStatus::Infeasible => {}
                LpStatus::Unbounded => {
                    self.lock().unbounded = true;
                }
                LpStatus::IterationLimit => {
                    self.lock().error = Some(SolverError::IterationLimit { node: id });
                }
                LpStatus::Optimal => {
                    debug_assert!(
                        lp.objective <= node.parent_bound + 1e-6 * node.parent_bound.abs().max(1.0),
                        "relaxation bound increased from {} to {}",
                        node.parent_bound,
                        lp.objective
                    );
                    let bound = self.round_bound(lp.objective);
                    match self.branching_variable(&lp.values) {
                        None => found = Some((lp.objective, lp.values)),
                        Some(j) => {
                            let v = lp.values[j];
                            let mut down = Node {
                                lower: node.lower.clone(),
                                upper: node.upper.clone(),
                                parent_bound: lp.objective,
                                prune_bound: bound,
                            };
                            down.upper[j] = 0.0;
                            let mut up =
                                Node { lower: node.lower, upper: node.upper, parent_bound: lp.objective, prune_bound: bound };
                            up.lower[j] = 1.0;
                            // the child pushed last is explored first
                            children = if v >= 0.5 { vec![down, up] } else { vec![up, down] };
                        }
                    }
                }
            }
            let mut st = self.lock();
            if let Some((obj, values)) = found {
                if !self.prunable(obj, &st.incumbent) {
                    st.incumbent = Some((obj, values));
                }
            }
            for child in children {
                if !self.prunable(child.prune_bound, &st.incumbent) {
                    st.stack.push(child);
                }
            }
            st.active -= 1;
        }
    }

    /// Best objective an integral descendant of a node with relaxation
    /// value `objective` can reach.
    fn round_bound(&self, objective: f64) -> f64 {
        let floor = (objective + 1e-6).floor();
        match &self.floor_value {
            Some(table) if floor >= 0.0 => table[(floor as usize).min(table.len() - 1)] as f64,
            _ if self.integral_objective => floor,
            _ => objective,
        }
    }

    fn branching_variable(&self, values: &[f64]) -> Option<usize> {
        let tol = self.cfg.integrality_tol;
        let mut best: Option<(usize, f64)> = None;
        for (j, &v) in values.iter().enumerate() {
            if !self.data.integer[j] {
                continue;
            }
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac <= tol {
                continue;
            }
            match self.cfg.branching {
                Branching::FirstFractional => return Some(j),
                Branching::MostFractional => {
                    if best.is_none_or(|(_, b)| frac > b) {
                        best = Some((j, frac));
                    }
                }
            }
        }
        best.map(|(j, _)| j)
    }
}

const MAX_OBJECTIVE_TABLE: usize = 1 << 20;

/// Subset sums of the objective coefficients, as a table of the largest
/// reachable value at or below each integer. `None` unless every objective
/// term is a binary with a non-negative integer coefficient and the sums
/// stay below [`MAX_OBJECTIVE_TABLE`].
fn reachable_objective_values(model: &MilpModel) -> Option<Vec<u32>> {
    let mut coef = std::collections::BTreeMap::new();
    for (c, v) in &model.objective {
        *coef.entry(v.0).or_insert(super::model::rat(0)) += c;
    }
    let mut total = 0usize;
    let mut weights = Vec::new();
    for (&v, c) in &coef {
        if !model.vars[v].domain.is_binary() || !c.is_integer() || *c < super::model::rat(0) {
            return None;
        }
        let w = usize::try_from(c.to_integer()).ok()?;
        total = total.checked_add(w)?;
        if total >= MAX_OBJECTIVE_TABLE {
            return None;
        }
        weights.push(w);
    }
    let mut reachable = vec![false; total + 1];
    reachable[0] = true;
    for w in weights.into_iter().filter(|&w| w > 0) {
        for v in (w..=total).rev() {
            if reachable[v - w] {
                reachable[v] = true;
            }
        }
    }
    let mut last = 0;
    Some(
        reachable
            .into_iter()
            .enumerate()
            .map(|(v, r)| {
                if r {
                    last = v as u32;
                }
                last
            })
            .collect(),
    )
}
