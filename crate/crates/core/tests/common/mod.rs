//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use tel_core::cost::{AlphaCost, SeparableCost};
use tel_core::measure::{discretize, Density, Grid1D, GridMeasure};

pub fn std_grid() -> Grid1D {
    Grid1D::new(-8.0, 8.0, 1601).unwrap()
}

pub fn gaussian(mean: f64, sd: f64, grid: Grid1D) -> GridMeasure {
    discretize(&Density::Gaussian { mean, sd }, &grid).unwrap()
}

pub fn std_gaussian() -> GridMeasure {
    gaussian(0.0, 1.0, std_grid())
}

pub fn quad() -> SeparableCost {
    SeparableCost::scalar(AlphaCost::quadratic())
}

/// Optimal value of the transportation problem, found by enumerating the
/// vertices of the transportation polytope.
///
/// Every vertex is produced by repeatedly picking a cell `(i, j)` among the
/// live rows and columns, shipping `min(a_i, b_j)` and retiring the row (on
/// ties) or the column that ran dry: a vertex's support is a spanning forest,
/// and peeling one of its leaves is exactly such a step.
///
/// The search is pruned with dual potentials `u_i + v_j ≤ c_ij` taken from a
/// few rounds of log-domain Sinkhorn followed by a c-transform. Any feasible
/// plan costs `Σa·u + Σb·v + Σx·r` with reduced costs `r ≥ 0`, so a branch
/// whose reduced cost already reaches the incumbent's is cut. The potentials
/// only steer the pruning; the returned value is the cost of an enumerated
/// vertex. Improvements below `1e-13` relative are not chased, which keeps
/// degenerate costs (many tied vertices) tractable.
pub fn vertex_enumeration_optimum<F: Fn(usize, usize) -> f64>(supply: &[f64], demand: &[f64], cost: F) -> f64 {
    let p = Problem::new(supply, demand, cost);
    let (u, v) = sinkhorn_potentials(&p.c, &p.a, &p.b);
    let r: Vec<Vec<f64>> =
        p.c.iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, c)| (c - u[i] - v[j]).max(0.0))
                    .collect()
            })
            .collect();
    let mut search = Search {
        c: &p.c,
        r: &r,
        best_reduced: f64::INFINITY,
        best_cost: f64::INFINITY,
        slack: 1e-13 * (1.0 + p.c.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max)),
        seen: HashMap::new(),
    };
    let (mut a, mut b) = (p.a.clone(), p.b.clone());
    search.descend(&mut a, &mut b, p.full_rows(), p.full_cols(), 0.0, 0.0);
    search.best_cost
}

/// Unpruned enumeration with memoized partial states, for tiny instances.
pub fn vertex_enumeration_exhaustive<F: Fn(usize, usize) -> f64>(supply: &[f64], demand: &[f64], cost: F) -> f64 {
    let p = Problem::new(supply, demand, cost);
    let mut memo = HashMap::new();
    completion(&p.c, &p.a, &p.b, p.full_rows(), p.full_cols(), &mut memo)
}

struct Problem {
    c: Vec<Vec<f64>>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Problem {
    /// Drops empty rows and columns.
    fn new<F: Fn(usize, usize) -> f64>(supply: &[f64], demand: &[f64], cost: F) -> Self {
        let rows: Vec<usize> = (0..supply.len()).filter(|&i| supply[i] > 0.0).collect();
        let cols: Vec<usize> = (0..demand.len()).filter(|&j| demand[j] > 0.0).collect();
        assert!(
            rows.len() <= 32 && cols.len() <= 32,
            "oracle is meant for tiny supports"
        );
        Problem {
            c: rows
                .iter()
                .map(|&i| cols.iter().map(|&j| cost(i, j)).collect())
                .collect(),
            a: rows.iter().map(|&i| supply[i]).collect(),
            b: cols.iter().map(|&j| demand[j]).collect(),
        }
    }

    fn full_rows(&self) -> u32 {
        ((1u64 << self.a.len()) - 1) as u32
    }

    fn full_cols(&self) -> u32 {
        ((1u64 << self.b.len()) - 1) as u32
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Entropic potentials with ε annealed towards zero, then c-transformed so
/// that `u_i + v_j ≤ c_ij` holds.
fn sinkhorn_potentials(c: &[Vec<f64>], a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let scale = c.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    let mut u = vec![0.0; a.len()];
    let mut v = vec![0.0; b.len()];
    let mut eps = scale;
    while eps > 1e-15 * scale {
        for _ in 0..200 {
            for i in 0..a.len() {
                u[i] = -eps * log_sum_exp((0..b.len()).map(|j| (v[j] - c[i][j]) / eps + b[j].ln()));
            }
            for j in 0..b.len() {
                v[j] = -eps * log_sum_exp((0..a.len()).map(|i| (u[i] - c[i][j]) / eps + a[i].ln()));
            }
            for i in 0..a.len() {
                u[i] = -eps * log_sum_exp((0..b.len()).map(|j| (v[j] - c[i][j]) / eps + b[j].ln()));
            }
        }
        eps *= 0.5;
    }
    let u: Vec<f64> = (0..a.len())
        .map(|i| (0..b.len()).map(|j| c[i][j] - v[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let v: Vec<f64> = (0..b.len())
        .map(|j| (0..a.len()).map(|i| c[i][j] - u[i]).fold(f64::INFINITY, f64::min))
        .collect();
    (u, v)
}

struct Search<'a> {
    c: &'a [Vec<f64>],
    r: &'a [Vec<f64>],
    best_reduced: f64,
    best_cost: f64,
    slack: f64,
    /// Cheapest reduced cost seen on arrival at each partial state.
    seen: HashMap<State, f64>,
}

impl Search<'_> {
    fn lower_bound(&self, a: &[f64], b: &[f64], rows: u32, cols: u32) -> f64 {
        let live = |mask: u32, n: usize| (0..n).filter(move |k| mask >> k & 1 == 1);
        let by_rows: f64 = live(rows, a.len())
            .map(|i| a[i] * live(cols, b.len()).map(|j| self.r[i][j]).fold(f64::INFINITY, f64::min))
            .sum();
        let by_cols: f64 = live(cols, b.len())
            .map(|j| b[j] * live(rows, a.len()).map(|i| self.r[i][j]).fold(f64::INFINITY, f64::min))
            .sum();
        by_rows.max(by_cols)
    }

    fn descend(&mut self, a: &mut [f64], b: &mut [f64], rows: u32, cols: u32, reduced: f64, spent: f64) {
        if rows == 0 || cols == 0 {
            if reduced < self.best_reduced {
                self.best_reduced = reduced;
                self.best_cost = spent;
            }
            return;
        }
        if reduced + self.lower_bound(a, b, rows, cols) >= self.best_reduced - self.slack {
            return;
        }
        // Different peeling orders of the same cells land in the same state.
        let key: State = (rows, cols, a.iter().chain(b.iter()).map(|v| v.to_bits()).collect());
        match self.seen.get(&key) {
            Some(&r) if r <= reduced => return,
            _ => {
                self.seen.insert(key, reduced);
            }
        }
        let mut cells: Vec<(usize, usize)> = (0..a.len())
            .filter(|i| rows >> i & 1 == 1)
            .flat_map(|i| (0..b.len()).filter(move |j| cols >> j & 1 == 1).map(move |j| (i, j)))
            .collect();
        cells.sort_by(|x, y| self.r[x.0][x.1].total_cmp(&self.r[y.0][y.1]));
        for (i, j) in cells {
            let (ai, bj) = (a[i], b[j]);
            let moved = ai.min(bj);
            let (red, cost) = (reduced + moved * self.r[i][j], spent + moved * self.c[i][j]);
            if ai <= bj {
                a[i] = 0.0;
                b[j] = bj - ai;
                self.descend(a, b, rows & !(1 << i), cols, red, cost);
            } else {
                a[i] = ai - bj;
                b[j] = 0.0;
                self.descend(a, b, rows, cols & !(1 << j), red, cost);
            }
            a[i] = ai;
            b[j] = bj;
        }
    }
}

type State = (u32, u32, Vec<u64>);

fn completion(c: &[Vec<f64>], a: &[f64], b: &[f64], rows: u32, cols: u32, memo: &mut HashMap<State, f64>) -> f64 {
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let key: State = (rows, cols, a.iter().chain(b).map(|v| v.to_bits()).collect());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut best = f64::INFINITY;
    let mut a2 = a.to_vec();
    let mut b2 = b.to_vec();
    for i in (0..a.len()).filter(|i| rows >> i & 1 == 1) {
        for j in (0..b.len()).filter(|j| cols >> j & 1 == 1) {
            let (ai, bj) = (a[i], b[j]);
            let here = ai.min(bj) * c[i][j];
            let rest = if ai <= bj {
                a2[i] = 0.0;
                b2[j] = bj - ai;
                completion(c, &a2, &b2, rows & !(1 << i), cols, memo)
            } else {
                a2[i] = ai - bj;
                b2[j] = 0.0;
                completion(c, &a2, &b2, rows, cols & !(1 << j), memo)
            };
            a2[i] = ai;
            b2[j] = bj;
            best = best.min(here + rest);
        }
    }
    memo.insert(key, best);
    best
}
