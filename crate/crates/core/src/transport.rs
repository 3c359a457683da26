//! Optimal transport cost between grid measures.
//!
//! In 1D with a convex cost of the difference the quantile (north-west corner)
//! coupling is optimal and costs O(n). The transportation LP is solved exactly
//! by a primal network simplex; it is the oracle for the 1D path and the only
//! method in 2D.

use serde::Serialize;

use crate::cost::SeparableCost;
use crate::error::{Error, Result};
use crate::measure::{GridMeasure, PlaneMeasure};

/// Largest support (points with positive mass) accepted by [`transport_lp`].
pub const LP_SUPPORT_LIMIT: usize = 64;
/// Largest 2D support accepted by [`transport_cost`].
pub const PLANE_SUPPORT_LIMIT: usize = 64 * 64;
/// Mass-balance tolerance for input measures.
pub const BALANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Monotone,
    Lp,
}

/// One positive entry of a transport plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanEntry {
    pub row: usize,
    pub col: usize,
    pub mass: f64,
}

/// Sparse coupling between a row measure (ν) and a column measure (μ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<PlanEntry>,
}

impl Coupling {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for e in &self.entries {
            s[e.row] += e.mass;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for e in &self.entries {
            s[e.col] += e.mass;
        }
        s
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for e in &self.entries {
            d[e.row][e.col] += e.mass;
        }
        d
    }

    /// `Σ π_ij c_ij` for a cost given by index.
    pub fn cost_with<F: Fn(usize, usize) -> f64>(&self, cost: F) -> f64 {
        self.entries.iter().map(|e| e.mass * cost(e.row, e.col)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportResult {
    pub cost: f64,
    pub method: Method,
    pub plan: Coupling,
}

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "cost matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_fn<F: Fn(usize, usize) -> f64>(rows: usize, cols: usize, f: F) -> Result<Self> {
        let data = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        CostMatrix::new(rows, cols, data)
    }

    /// `c(x_i − y_j)` between the points of two 1D grids.
    pub fn between(nu: &GridMeasure, mu: &GridMeasure, cost: &SeparableCost) -> Result<Self> {
        let (gx, gy) = (nu.grid(), mu.grid());
        CostMatrix::from_fn(gx.n, gy.n, |i, j| cost.alpha().eval(gx.point(i) - gy.point(j)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

fn require_normalized(m: &GridMeasure) -> Result<()> {
    if m.is_normalized(BALANCE_TOL) {
        Ok(())
    } else {
        Err(Error::Unnormalized { total: m.total_mass() })
    }
}

fn require_1d(cost: &SeparableCost) -> Result<()> {
    if cost.dim() == 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "expected a 1D cost, got dimension {}",
            cost.dim()
        )))
    }
}

/// Quantile coupling of two 1D grid measures.
///
/// Both weight sequences are swept in increasing point order and mass is
/// matched greedily; on ties the ν-pointer advances first.
pub fn transport_1d_monotone(nu: &GridMeasure, mu: &GridMeasure, cost: &SeparableCost) -> Result<TransportResult> {
    require_1d(cost)?;
    require_normalized(nu)?;
    require_normalized(mu)?;
    let (a, b) = (nu.weights(), mu.weights());
    let (gx, gy) = (nu.grid(), mu.grid());
    let alpha = cost.alpha();

    let mut entries = Vec::with_capacity(a.len() + b.len());
    let mut total = 0.0;
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0], b[0]);
    loop {
        let moved = ra.min(rb);
        if moved > 0.0 {
            entries.push(PlanEntry {
                row: i,
                col: j,
                mass: moved,
            });
            total += moved * alpha.eval(gx.point(i) - gy.point(j));
        }
        if ra <= rb {
            rb -= ra;
            i += 1;
            if i == a.len() {
                break;
            }
            ra = a[i];
        } else {
            ra -= rb;
            j += 1;
            if j == b.len() {
                break;
            }
            rb = b[j];
        }
    }
    Ok(TransportResult {
        cost: total,
        method: Method::Monotone,
        plan: Coupling {
            rows: a.len(),
            cols: b.len(),
            entries,
        },
    })
}

/// Exact transportation LP between two 1D grid measures.
///
/// Points without mass are dropped before solving; each remaining support
/// must have at most [`LP_SUPPORT_LIMIT`] points.
pub fn transport_lp(nu: &GridMeasure, mu: &GridMeasure, costs: &CostMatrix) -> Result<TransportResult> {
    if costs.rows != nu.weights().len() || costs.cols != mu.weights().len() {
        return Err(Error::InvalidParameter(format!(
            "cost matrix is {}x{} but the measures have {} and {} points",
            costs.rows,
            costs.cols,
            nu.weights().len(),
            mu.weights().len()
        )));
    }
    solve_transport(nu.weights(), mu.weights(), |i, j| costs.get(i, j), LP_SUPPORT_LIMIT)
}

/// Exact transportation LP for raw mass vectors and a cost callback.
pub fn solve_transport<F>(supply: &[f64], demand: &[f64], cost: F, limit: usize) -> Result<TransportResult>
where
    F: Fn(usize, usize) -> f64,
{
    for (index, &value) in supply.iter().chain(demand).enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value < 0.0 {
            return Err(Error::Negative { index, value });
        }
    }
    let (sa, sb): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (sa - sb).abs() > BALANCE_TOL * sa.max(sb).max(1.0) {
        return Err(Error::Infeasible { supply: sa, demand: sb });
    }
    let rows: Vec<usize> = (0..supply.len()).filter(|&i| supply[i] > 0.0).collect();
    let cols: Vec<usize> = (0..demand.len()).filter(|&j| demand[j] > 0.0).collect();
    for support in [rows.len(), cols.len()] {
        if support > limit {
            return Err(Error::SupportTooLarge { points: support, limit });
        }
    }
    let mut plan = Coupling {
        rows: supply.len(),
        cols: demand.len(),
        entries: Vec::new(),
    };
    if rows.is_empty() || cols.is_empty() {
        return Ok(TransportResult {
            cost: 0.0,
            method: Method::Lp,
            plan,
        });
    }
    let a: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| demand[j]).collect();
    let c: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
        .map(|(i, j)| cost(i, j))
        .collect();
    if let Some(index) = c.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let flows = NetworkSimplex::new(&a, &b, c.clone()).solve();
    let mut total = 0.0;
    for (k, &x) in flows.iter().enumerate() {
        if x > 0.0 {
            let (r, s) = (k / cols.len(), k % cols.len());
            total += x * c[k];
            plan.entries.push(PlanEntry {
                row: rows[r],
                col: cols[s],
                mass: x,
            });
        }
    }
    Ok(TransportResult {
        cost: total,
        method: Method::Lp,
        plan,
    })
}

/// Primal simplex on the transportation polytope, spanning-tree basis.
struct NetworkSimplex {
    n: usize,
    m: usize,
    cost: Vec<f64>,
    flow: Vec<f64>,
    basic: Vec<bool>,
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
}

impl NetworkSimplex {
    fn new(a: &[f64], b: &[f64], cost: Vec<f64>) -> Self {
        let (n, m) = (a.len(), b.len());
        let mut s = NetworkSimplex {
            n,
            m,
            cost,
            flow: vec![0.0; n * m],
            basic: vec![false; n * m],
            row_adj: vec![Vec::new(); n],
            col_adj: vec![Vec::new(); m],
        };
        // North-west corner start with exactly n + m − 1 basic cells.
        let (mut i, mut j) = (0, 0);
        let (mut ra, mut rb) = (a[0], b[0]);
        loop {
            let x = ra.min(rb).max(0.0);
            s.add_basic(i, j);
            s.flow[i * m + j] = x;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if (ra <= rb && i < n - 1) || j == m - 1 {
                rb -= x;
                i += 1;
                ra = a[i];
            } else {
                ra -= x;
                j += 1;
                rb = b[j];
            }
        }
        s
    }

    fn add_basic(&mut self, i: usize, j: usize) {
        self.basic[i * self.m + j] = true;
        self.row_adj[i].push(j);
        self.col_adj[j].push(i);
    }

    fn remove_basic(&mut self, i: usize, j: usize) {
        self.basic[i * self.m + j] = false;
        self.row_adj[i].retain(|&x| x != j);
        self.col_adj[j].retain(|&x| x != i);
    }

    fn potentials(&self) -> (Vec<f64>, Vec<f64>) {
        let (n, m) = (self.n, self.m);
        let mut u = vec![f64::NAN; n];
        let mut v = vec![f64::NAN; m];
        u[0] = 0.0;
        // Nodes 0..n are rows, n..n+m are columns.
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            if node < n {
                for &j in &self.row_adj[node] {
                    if v[j].is_nan() {
                        v[j] = self.cost[node * m + j] - u[node];
                        stack.push(n + j);
                    }
                }
            } else {
                let j = node - n;
                for &i in &self.col_adj[j] {
                    if u[i].is_nan() {
                        u[i] = self.cost[i * m + j] - v[j];
                        stack.push(i);
                    }
                }
            }
        }
        (u, v)
    }

    /// Tree path from row `i` to column `j`, as a list of cells.
    fn tree_path(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let (n, m) = (self.n, self.m);
        let mut parent = vec![usize::MAX; n + m];
        parent[i] = i;
        let mut queue = std::collections::VecDeque::from([i]);
        let target = n + j;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            if node < n {
                for &c in &self.row_adj[node] {
                    if parent[n + c] == usize::MAX {
                        parent[n + c] = node;
                        queue.push_back(n + c);
                    }
                }
            } else {
                for &r in &self.col_adj[node - n] {
                    if parent[r] == usize::MAX {
                        parent[r] = node;
                        queue.push_back(r);
                    }
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = target;
        while node != i {
            let p = parent[node];
            let cell = if node >= n { (p, node - n) } else { (node, p - n) };
            cells.push(cell);
            node = p;
        }
        // Cells ordered from column j back to row i.
        cells
    }

    fn solve(mut self) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let scale = self.cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        let eps = 1e-12 * (1.0 + scale);
        let max_iter = 50 * (n * m + n + m) + 1000;
        let mut degenerate_run = 0usize;
        for _ in 0..max_iter {
            let (u, v) = self.potentials();
            let bland = degenerate_run > 2 * (n + m);
            let mut entering: Option<(usize, usize)> = None;
            let mut best = -eps;
            'scan: for i in 0..n {
                for j in 0..m {
                    if self.basic[i * m + j] {
                        continue;
                    }
                    let r = self.cost[i * m + j] - u[i] - v[j];
                    if r < best {
                        entering = Some((i, j));
                        if bland {
                            break 'scan;
                        }
                        best = r;
                    }
                }
            }
            let Some((ei, ej)) = entering else {
                break;
            };
            let path = self.tree_path(ei, ej);
            // Walking from column ej back to row ei the signs alternate −, +, −, …
            let mut theta = f64::INFINITY;
            let mut leaving = path[0];
            for (k, &(r, c)) in path.iter().enumerate() {
                if k % 2 == 0 {
                    let x = self.flow[r * m + c];
                    let better = x < theta || (x == theta && (r * m + c) < (leaving.0 * m + leaving.1));
                    if better {
                        theta = x;
                        leaving = (r, c);
                    }
                }
            }
            degenerate_run = if theta > 0.0 { 0 } else { degenerate_run + 1 };
            for (k, &(r, c)) in path.iter().enumerate() {
                let x = &mut self.flow[r * m + c];
                if k % 2 == 0 {
                    *x -= theta;
                } else {
                    *x += theta;
                }
            }
            self.flow[ei * m + ej] = theta;
            self.flow[leaving.0 * m + leaving.1] = 0.0;
            self.remove_basic(leaving.0, leaving.1);
            self.add_basic(ei, ej);
        }
        for x in &mut self.flow {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        self.flow
    }
}

/// Measures accepted by [`transport_cost`].
#[derive(Debug, Clone, Copy)]
pub enum Law<'a> {
    Line(&'a GridMeasure),
    Plane(&'a PlaneMeasure),
}

/// `𝒯_c(ν, μ)`: monotone coupling in 1D, exact LP on the support in 2D.
pub fn transport_cost(nu: Law<'_>, mu: Law<'_>, cost: &SeparableCost) -> Result<TransportResult> {
    match (nu, mu, cost.dim()) {
        (Law::Line(nu), Law::Line(mu), 1) => transport_1d_monotone(nu, mu, cost),
        (Law::Plane(nu), Law::Plane(mu), 2) => {
            let alpha = cost.alpha();
            solve_transport(
                nu.weights(),
                mu.weights(),
                |i, j| {
                    let (x, y) = (nu.point(i), mu.point(j));
                    alpha.eval(x[0] - y[0]) + alpha.eval(x[1] - y[1])
                },
                PLANE_SUPPORT_LIMIT,
            )
        }
        (_, _, k) => Err(Error::InvalidParameter(format!(
            "measures and cost dimension {k} do not match"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::AlphaCost;
    use crate::measure::{discretize, Density, Grid1D};

    fn quad() -> SeparableCost {
        SeparableCost::scalar(AlphaCost::quadratic())
    }

    #[test]
    fn diracs_cost_the_distance() {
        let g = Grid1D::new(-2.0, 2.0, 41).unwrap();
        let nu = GridMeasure::dirac(g, 5).unwrap();
        let mu = GridMeasure::dirac(g, 32).unwrap();
        let r = transport_1d_monotone(&nu, &mu, &quad()).unwrap();
        let d = g.point(5) - g.point(32);
        assert!((r.cost - d * d / 2.0).abs() < 1e-14);
        assert_eq!(r.plan.entries.len(), 1);
    }

    #[test]
    fn gaussian_shift() {
        let g = Grid1D::new(-8.0, 8.0, 1601).unwrap();
        let mu = discretize(&Density::Gaussian { mean: 0.0, sd: 1.0 }, &g).unwrap();
        let nu = discretize(&Density::Gaussian { mean: 0.5, sd: 1.0 }, &g).unwrap();
        let r = transport_1d_monotone(&nu, &mu, &quad()).unwrap();
        assert!((r.cost - 0.125).abs() < 1e-4);
        assert_eq!(transport_1d_monotone(&mu, &mu, &quad()).unwrap().cost, 0.0);
    }

    #[test]
    fn plan_marginals() {
        let g = Grid1D::new(0.0, 1.0, 7).unwrap();
        let nu = GridMeasure::new(g, vec![1.0, 0.0, 2.0, 3.0, 0.0, 1.0, 1.0]).unwrap();
        let mu = GridMeasure::new(g, vec![0.0, 4.0, 1.0, 0.0, 2.0, 0.5, 0.5]).unwrap();
        for r in [
            transport_1d_monotone(&nu, &mu, &quad()).unwrap(),
            transport_lp(&nu, &mu, &CostMatrix::between(&nu, &mu, &quad()).unwrap()).unwrap(),
        ] {
            for (s, w) in r.plan.row_sums().iter().zip(nu.weights()) {
                assert!((s - w).abs() < 1e-12);
            }
            for (s, w) in r.plan.col_sums().iter().zip(mu.weights()) {
                assert!((s - w).abs() < 1e-12);
            }
            assert!(r.plan.entries.iter().all(|e| e.mass >= 0.0));
            let recomputed = r.plan.cost_with(|i, j| 0.5 * (g.point(i) - g.point(j)).powi(2));
            assert!((recomputed - r.cost).abs() < 1e-12);
        }
    }

    #[test]
    fn lp_equal_costs() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let nu = GridMeasure::new(g, vec![0.3, 0.0, 0.7]).unwrap();
        let mu = GridMeasure::new(g, vec![0.6, 0.0, 0.4]).unwrap();
        let c = CostMatrix::from_fn(3, 3, |_, _| 2.5).unwrap();
        assert!((transport_lp(&nu, &mu, &c).unwrap().cost - 2.5).abs() < 1e-14);
    }

    #[test]
    fn lp_known_optimum() {
        // Classic 3x3 instance: optimum 0.2·1 + 0.3·2 + 0.1·2 + 0.2·1 + 0.2·3 = hand-checked below.
        let c = [[4.0, 1.0, 3.0], [2.0, 5.0, 2.0], [3.0, 2.0, 1.0]];
        let a = [0.3, 0.4, 0.3];
        let b = [0.4, 0.3, 0.3];
        let r = solve_transport(&a, &b, |i, j| c[i][j], 64).unwrap();
        // Optimal: row0→col1 0.3, row1→col0 0.4, row2→col2 0.3 = 0.3 + 0.8 + 0.3.
        assert!((r.cost - 1.4).abs() < 1e-14, "{}", r.cost);
    }

    #[test]
    fn lp_errors() {
        let c = |_: usize, _: usize| 1.0;
        assert!(matches!(
            solve_transport(&[0.5, 0.5], &[0.5, 0.6], c, 64),
            Err(Error::Infeasible { .. })
        ));
        let g = Grid1D::new(0.0, 1.0, 65).unwrap();
        let u = discretize(&Density::Uniform {}, &g).unwrap();
        let cm = CostMatrix::between(&u, &u, &quad()).unwrap();
        assert!(matches!(
            transport_lp(&u, &u, &cm),
            Err(Error::SupportTooLarge { points: 65, limit: 64 })
        ));
    }

    #[test]
    fn plane_transport() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let mut w = vec![0.0; 9];
        w[0] = 1.0;
        let mut v = vec![0.0; 9];
        v[8] = 1.0;
        let nu = PlaneMeasure::new([g, g], w).unwrap();
        let mu = PlaneMeasure::new([g, g], v).unwrap();
        let cost = SeparableCost::new(AlphaCost::quadratic(), 2).unwrap();
        let r = transport_cost(Law::Plane(&nu), Law::Plane(&mu), &cost).unwrap();
        assert!((r.cost - 1.0).abs() < 1e-14);
        assert_eq!(r.method, Method::Lp);
        assert!(transport_cost(Law::Plane(&nu), Law::Plane(&mu), &quad()).is_err());
    }
}
