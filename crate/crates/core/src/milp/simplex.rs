//! Dense bounded-variable primal simplex (two phases) for the LP relaxation.
//!
//! Columns keep their bounds implicitly: a nonbasic column sits at its lower
//! or upper bound and may flip between them without a pivot. Singleton rows
//! are folded into column bounds and fixed columns are substituted out before
//! the tableau is built.

use num_traits::ToPrimitive;

use super::model::{MilpModel, Sense};
use super::SolverConfig;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FIX_TOL: f64 = 1e-12;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERACY_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub objective: f64,
    /// One value per model variable; empty unless `status` is optimal.
    pub values: Vec<f64>,
}

impl LpOutcome {
    fn without_values(status: LpStatus) -> Self {
        Self { status, objective: f64::NAN, values: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LpRow {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Floating-point copy of a model, built once and reused by every node of
/// the branch-and-bound search.
#[derive(Debug, Clone)]
pub(crate) struct LpData {
    pub ncols: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub integer: Vec<bool>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn f(r: &super::model::Rational) -> f64 {
    r.to_f64().expect("finite coefficient")
}

impl LpData {
    pub fn from_model(model: &MilpModel) -> Self {
        let ncols = model.vars.len();
        let mut objective = vec![0.0; ncols];
        for (c, v) in &model.objective {
            objective[v.0] += f(c);
        }
        let rows = model
            .constraints
            .iter()
            .map(|c| LpRow {
                coefs: c.terms.iter().filter(|(a, _)| *a != 0.into()).map(|(a, v)| (v.0, f(a))).collect(),
                sense: c.sense,
                rhs: f(&c.rhs),
            })
            .collect();
        let mut lower = Vec::with_capacity(ncols);
        let mut upper = Vec::with_capacity(ncols);
        for v in &model.vars {
            let (lo, up) = v.domain.bounds();
            lower.push(f(&lo));
            upper.push(up.map(|u| f(&u)).unwrap_or(f64::INFINITY));
        }
        let integer = model.vars.iter().map(|v| v.domain.is_binary()).collect();
        Self { ncols, objective, rows, integer, lower, upper }
    }
}

/// LP relaxation of `model`: binaries relaxed to `[0, 1]`.
pub fn solve_lp(model: &MilpModel, cfg: &SolverConfig) -> LpOutcome {
    let data = LpData::from_model(model);
    solve_bounded(&data, &data.lower, &data.upper, false, cfg)
}

/// Solves the LP over `data` with the given column bounds. With
/// `round_integer_bounds`, bounds of integer columns implied by the rows are
/// rounded inward, which is valid inside a search over integer points.
pub(crate) fn solve_bounded(
    data: &LpData,
    lower: &[f64],
    upper: &[f64],
    round_integer_bounds: bool,
    cfg: &SolverConfig,
) -> LpOutcome {
    let tol = cfg.feasibility_tol;
    let mut lo = lower.to_vec();
    let mut up = upper.to_vec();
    let mut active_row = vec![true; data.rows.len()];

    if !propagate_bounds(data, &mut lo, &mut up, round_integer_bounds, tol) {
        return LpOutcome::without_values(LpStatus::Infeasible);
    }

    // fold singleton rows into bounds until nothing changes
    loop {
        let mut changed = false;
        for (ri, row) in data.rows.iter().enumerate() {
            if !active_row[ri] {
                continue;
            }
            let mut free = None;
            let mut free_count = 0;
            let mut fixed_sum = 0.0;
            for &(c, a) in &row.coefs {
                if up[c] - lo[c] <= FIX_TOL {
                    fixed_sum += a * lo[c];
                } else {
                    free_count += 1;
                    free = Some((c, a));
                }
            }
            let residual = row.rhs - fixed_sum;
            match free_count {
                0 => {
                    let ok = match row.sense {
                        Sense::Le => residual >= -tol,
                        Sense::Ge => residual <= tol,
                        Sense::Eq => residual.abs() <= tol,
                    };
                    if !ok {
                        return LpOutcome::without_values(LpStatus::Infeasible);
                    }
                    active_row[ri] = false;
                    changed = true;
                }
                1 => {
                    let (c, a) = free.expect("one free column");
                    let bound = residual / a;
                    let (mut new_lo, mut new_up) = (lo[c], up[c]);
                    let caps_upper = (row.sense == Sense::Le) == (a > 0.0);
                    if row.sense == Sense::Eq || caps_upper {
                        new_up = new_up.min(bound);
                    }
                    if row.sense == Sense::Eq || !caps_upper {
                        new_lo = new_lo.max(bound);
                    }
                    if round_integer_bounds && data.integer[c] {
                        new_up = (new_up + tol).floor();
                        new_lo = (new_lo - tol).ceil();
                    }
                    if new_lo > new_up + tol {
                        return LpOutcome::without_values(LpStatus::Infeasible);
                    }
                    if new_lo > new_up {
                        new_up = new_lo;
                    }
                    lo[c] = new_lo;
                    up[c] = new_up;
                    if up[c] - lo[c] <= FIX_TOL {
                        up[c] = lo[c];
                    }
                    active_row[ri] = false;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    let mut col_map = vec![usize::MAX; data.ncols];
    let mut cols = Vec::new();
    for c in 0..data.ncols {
        if up[c] - lo[c] > FIX_TOL {
            col_map[c] = cols.len();
            cols.push(c);
        }
    }
    let mut rows = Vec::new();
    for (ri, row) in data.rows.iter().enumerate() {
        if !active_row[ri] {
            continue;
        }
        let shift: f64 = row.coefs.iter().map(|&(c, a)| a * lo[c]).sum();
        let coefs: Vec<(usize, f64)> =
            row.coefs.iter().filter(|&&(c, _)| col_map[c] != usize::MAX).map(|&(c, a)| (col_map[c], a)).collect();
        rows.push((coefs, row.sense, row.rhs - shift));
    }
    let cost: Vec<f64> = cols.iter().map(|&c| data.objective[c]).collect();
    let bounds: Vec<f64> = cols.iter().map(|&c| up[c] - lo[c]).collect();

    let mut tableau = Tableau::new(cols.len(), &rows, &bounds);
    let status = tableau.solve(&cost, tol);
    if status != LpStatus::Optimal {
        return LpOutcome::without_values(status);
    }
    let shifted = tableau.structural_values();
    let mut values = lo.clone();
    for (t, &c) in cols.iter().enumerate() {
        values[c] = lo[c] + shifted[t];
    }
    let objective = data.objective.iter().zip(&values).map(|(c, x)| c * x).sum();
    LpOutcome { status, objective, values }
}

const PROPAGATION_PASSES: usize = 20;
/// Smallest bound change worth another propagation pass.
const PROPAGATION_STEP: f64 = 1e-7;

/// Tightens column bounds with the bounds implied by each row's activity
/// range, pass by pass until nothing moves. Integer columns are rounded
/// inward when `round_integer_bounds` is set. Returns false when a row can
/// no longer be satisfied.
fn propagate_bounds(data: &LpData, lo: &mut [f64], up: &mut [f64], round_integer_bounds: bool, tol: f64) -> bool {
    for _ in 0..PROPAGATION_PASSES {
        let mut changed = false;
        for row in &data.rows {
            let (mut min_act, mut max_act) = (0.0, 0.0);
            for &(c, a) in &row.coefs {
                let (x, y) = (a * lo[c], a * up[c]);
                min_act += x.min(y);
                max_act += x.max(y);
            }
            let caps_above = row.sense != Sense::Ge;
            let caps_below = row.sense != Sense::Le;
            if (caps_above && min_act > row.rhs + tol) || (caps_below && max_act < row.rhs - tol) {
                return false;
            }
            for &(c, a) in &row.coefs {
                let (x, y) = (a * lo[c], a * up[c]);
                let (own_min, own_max) = (x.min(y), x.max(y));
                let mut new_lo = lo[c];
                let mut new_up = up[c];
                // a * x_c <= rhs - (min activity of the other columns)
                if caps_above && min_act.is_finite() {
                    let limit = (row.rhs - (min_act - own_min)) / a;
                    if a > 0.0 {
                        new_up = new_up.min(limit);
                    } else {
                        new_lo = new_lo.max(limit);
                    }
                }
                if caps_below && max_act.is_finite() {
                    let limit = (row.rhs - (max_act - own_max)) / a;
                    if a > 0.0 {
                        new_lo = new_lo.max(limit);
                    } else {
                        new_up = new_up.min(limit);
                    }
                }
                if round_integer_bounds && data.integer[c] {
                    new_up = (new_up + tol).floor();
                    new_lo = (new_lo - tol).ceil();
                }
                if new_lo > new_up + tol {
                    return false;
                }
                if new_up < up[c] - PROPAGATION_STEP {
                    up[c] = new_up.max(lo[c]).max(new_lo);
                    changed = true;
                }
                if new_lo > lo[c] + PROPAGATION_STEP {
                    lo[c] = new_lo.min(up[c]);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    width: usize,
    n_struct: usize,
    /// first artificial column
    art_start: usize,
    cells: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    upper: Vec<f64>,
    d: Vec<f64>,
    blocked: Vec<bool>,
}

impl Tableau {
    fn new(n_struct: usize, rows: &[(Vec<(usize, f64)>, Sense, f64)], bounds: &[f64]) -> Self {
        let m = rows.len();
        let n_slack = rows.iter().filter(|(_, s, _)| *s != Sense::Eq).count();
        let mut normalized = Vec::with_capacity(m);
        let mut n_art = 0;
        for (coefs, sense, rhs) in rows {
            let flip = *rhs < 0.0;
            let sense = match (sense, flip) {
                (Sense::Le, true) => Sense::Ge,
                (Sense::Ge, true) => Sense::Le,
                (s, _) => *s,
            };
            if sense != Sense::Le {
                n_art += 1;
            }
            normalized.push((coefs, sense, flip, rhs.abs()));
        }
        let art_start = n_struct + n_slack;
        let width = art_start + n_art;
        let mut cells = vec![0.0; m * width];
        let mut beta = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut state = vec![ColState::AtLower; width];
        let mut upper = vec![f64::INFINITY; width];
        upper[..n_struct].copy_from_slice(bounds);
        let (mut slack, mut art) = (n_struct, art_start);
        for (i, (coefs, sense, flip, rhs)) in normalized.into_iter().enumerate() {
            let row = &mut cells[i * width..(i + 1) * width];
            let sign = if flip { -1.0 } else { 1.0 };
            for &(c, a) in coefs.iter() {
                row[c] += sign * a;
            }
            beta[i] = rhs;
            match sense {
                Sense::Le => {
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Sense::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Sense::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
            state[basis[i]] = ColState::Basic;
        }
        Self {
            m,
            width,
            n_struct,
            art_start,
            cells,
            beta,
            basis,
            state,
            upper,
            d: vec![0.0; width],
            blocked: vec![false; width],
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.cells[i * self.width..(i + 1) * self.width]
    }

    fn value_of_nonbasic(&self, j: usize) -> f64 {
        match self.state[j] {
            ColState::AtUpper => self.upper[j],
            _ => 0.0,
        }
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let (d, row) = (&mut self.d, &self.cells[i * self.width..(i + 1) * self.width]);
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    fn solve(&mut self, cost: &[f64], tol: f64) -> LpStatus {
        let n_art = self.width - self.art_start;
        if n_art > 0 {
            let mut phase1 = vec![0.0; self.width];
            phase1[self.art_start..].iter_mut().for_each(|c| *c = -1.0);
            self.set_costs(&phase1);
            match self.iterate() {
                LpStatus::Optimal => {}
                LpStatus::Unbounded => unreachable!("phase one objective is bounded"),
                other => return other,
            }
            let infeasibility: f64 =
                (0..self.m).filter(|&i| self.basis[i] >= self.art_start).map(|i| self.beta[i]).sum();
            if infeasibility > tol {
                return LpStatus::Infeasible;
            }
            self.drive_out_artificials();
            for j in self.art_start..self.width {
                self.blocked[j] = true;
                self.upper[j] = 0.0;
            }
        }
        let mut full = vec![0.0; self.width];
        full[..self.n_struct].copy_from_slice(cost);
        self.set_costs(&full);
        self.iterate()
    }

    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.art_start {
                continue;
            }
            let row = self.row(r);
            let mut best: Option<(usize, f64)> = None;
            for (j, &a) in row[..self.art_start].iter().enumerate() {
                if self.state[j] != ColState::Basic && a.abs() > PIVOT_TOL && best.is_none_or(|(_, b)| a.abs() > b) {
                    best = Some((j, a.abs()));
                }
            }
            if let Some((q, _)) = best {
                // degenerate pivot: the entering column keeps its current value
                let value = self.value_of_nonbasic(q);
                let leaving = self.basis[r];
                self.pivot(r, q);
                self.state[leaving] = ColState::AtLower;
                self.beta[r] = value;
            }
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.width {
            if self.blocked[j] {
                continue;
            }
            let dj = self.d[j];
            let eligible = match self.state[j] {
                ColState::Basic => false,
                ColState::AtLower => dj > COST_TOL && self.upper[j] > 0.0,
                ColState::AtUpper => dj < -COST_TOL,
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, b)| dj.abs() > b) {
                best = Some((j, dj.abs()));
            }
        }
        best.map(|(j, _)| j)
    }

    fn iterate(&mut self) -> LpStatus {
        let max_iter = 50 * (self.m + self.width) + 1_000;
        let mut bland = false;
        let mut degenerate_run = 0;
        for _ in 0..max_iter {
            let Some(q) = self.choose_entering(bland) else {
                return LpStatus::Optimal;
            };
            let dir = if self.state[q] == ColState::AtLower { 1.0 } else { -1.0 };

            // ratio test
            let mut theta = self.upper[q];
            for i in 0..self.m {
                let a = dir * self.cells[i * self.width + q];
                let limit = self.row_limit(i, a);
                if limit < theta {
                    theta = limit;
                }
            }
            if theta == f64::INFINITY {
                return LpStatus::Unbounded;
            }
            let mut leave: Option<usize> = None;
            let mut leave_key = (f64::NEG_INFINITY, usize::MAX);
            for i in 0..self.m {
                let a = dir * self.cells[i * self.width + q];
                let limit = self.row_limit(i, a);
                if limit <= theta + 1e-12 {
                    // Bland: smallest basic index; otherwise largest pivot
                    let key = if bland { (0.0, self.basis[i]) } else { (a.abs(), self.basis[i]) };
                    let better = if bland {
                        key.1 < leave_key.1
                    } else {
                        key.0 > leave_key.0 || (key.0 == leave_key.0 && key.1 < leave_key.1)
                    };
                    if leave.is_none() || better {
                        leave = Some(i);
                        leave_key = key;
                    }
                }
            }
            if leave.is_some() && self.upper[q] <= theta + 1e-12 && self.upper[q] < f64::INFINITY {
                // the entering column reaches its own bound no later than any row
                leave = None;
                theta = self.upper[q];
            }

            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERACY_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            for i in 0..self.m {
                let a = self.cells[i * self.width + q];
                if a != 0.0 {
                    self.beta[i] -= dir * a * theta;
                }
            }
            match leave {
                None => {
                    self.state[q] = if dir > 0.0 { ColState::AtUpper } else { ColState::AtLower };
                }
                Some(r) => {
                    let entering_value = self.value_of_nonbasic(q) + dir * theta;
                    let leaving = self.basis[r];
                    let a = dir * self.cells[r * self.width + q];
                    let leaving_state = if a > 0.0 { ColState::AtLower } else { ColState::AtUpper };
                    self.pivot(r, q);
                    self.state[leaving] = leaving_state;
                    self.beta[r] = entering_value;
                }
            }
        }
        LpStatus::IterationLimit
    }

    fn row_limit(&self, i: usize, a: f64) -> f64 {
        if a > PIVOT_TOL {
            self.beta[i].max(0.0) / a
        } else if a < -PIVOT_TOL {
            let ub = self.upper[self.basis[i]];
            if ub == f64::INFINITY {
                f64::INFINITY
            } else {
                (ub - self.beta[i]).max(0.0) / -a
            }
        } else {
            f64::INFINITY
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let piv = self.cells[r * w + q];
        {
            let row = &mut self.cells[r * w..(r + 1) * w];
            let inv = 1.0 / piv;
            row.iter_mut().for_each(|x| *x *= inv);
            row[q] = 1.0;
        }
        let (before, rest) = self.cells.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let factor = row[q];
            if factor != 0.0 {
                for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *x -= factor * p;
                }
                row[q] = 0.0;
            }
        }
        let factor = self.d[q];
        if factor != 0.0 {
            for (x, p) in self.d.iter_mut().zip(pivot_row.iter()) {
                *x -= factor * p;
            }
            self.d[q] = 0.0;
        }
        self.state[q] = ColState::Basic;
        self.basis[r] = q;
    }

    fn structural_values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.n_struct).map(|j| self.value_of_nonbasic(j)).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.beta[i].clamp(0.0, self.upper[b]);
            }
        }
        x
    }
}
