//! Finite-horizon stable graphs for perturbations of split linear maps.
//!
//! Coordinates are ordered `u ⊕ c ⊕ s`. A graph over the `s`-box
//! `[−R, R]^s` stores its `u ⊕ c` values on a uniform node grid. The
//! sequence is continued periodically and the backward transform is
//! repeated until the graph at index 0 settles, which gives the stable
//! leaf of the periodic continuation at every index.

use serde::Serialize;

use super::gap::{c1_gap, FnMap, TangentMap};
use super::ShadowError;
use crate::linalg::Mat;

pub const GRAPH_NODES: usize = 65;
pub const GRAPH_TOL: f64 = 1e-10;
const MAX_PASSES: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Splitting {
    pub u: usize,
    pub c: usize,
    pub s: usize,
}

impl Splitting {
    pub fn dim(&self) -> usize {
        self.u + self.c + self.s
    }
    fn cu(&self) -> usize {
        self.u + self.c
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Graph {
    pub ds: usize,
    pub dcu: usize,
    pub radius: f64,
    pub nodes: usize,
    /// `u ⊕ c` values, row-major over the `s` nodes.
    pub values: Vec<Vec<f64>>,
}

impl Graph {
    fn flat(ds: usize, dcu: usize, radius: f64, nodes: usize) -> Self {
        Self { ds, dcu, radius, nodes, values: vec![vec![0.0; dcu]; nodes.pow(ds as u32)] }
    }

    fn spacing(&self) -> f64 {
        2.0 * self.radius / (self.nodes - 1) as f64
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        let h = self.spacing();
        if self.ds == 1 {
            vec![-self.radius + k as f64 * h]
        } else {
            vec![-self.radius + (k / self.nodes) as f64 * h, -self.radius + (k % self.nodes) as f64 * h]
        }
    }

    /// Point of `ℝ^q` over node `k`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        let mut p = self.values[k].clone();
        p.extend(self.node(k));
        p
    }

    fn cell(&self, x: f64) -> (usize, f64) {
        let t = ((x + self.radius) / self.spacing()).clamp(0.0, (self.nodes - 1) as f64);
        let i = (t.floor() as usize).min(self.nodes - 2);
        (i, t - i as f64)
    }

    /// (Bi)linear interpolation, constant beyond the box.
    pub fn eval(&self, s: &[f64]) -> Vec<f64> {
        let lerp = |a: &[f64], b: &[f64], t: f64| a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect::<Vec<f64>>();
        if self.ds == 1 {
            let (i, t) = self.cell(s[0]);
            lerp(&self.values[i], &self.values[i + 1], t)
        } else {
            let (i, t) = self.cell(s[0]);
            let (j, r) = self.cell(s[1]);
            let at = |a: usize, b: usize| &self.values[a * self.nodes + b];
            let lo = lerp(at(i, j), at(i, j + 1), r);
            let hi = lerp(at(i + 1, j), at(i + 1, j + 1), r);
            lerp(&lo, &hi, t)
        }
    }

    /// Largest difference quotient between axis neighbours.
    pub fn lipschitz(&self) -> f64 {
        let h = self.spacing();
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() / h;
        let n = self.nodes;
        let mut m = 0.0f64;
        if self.ds == 1 {
            for i in 0..n - 1 {
                m = m.max(d(&self.values[i], &self.values[i + 1]));
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    if i + 1 < n {
                        m = m.max(d(&self.values[i * n + j], &self.values[(i + 1) * n + j]));
                    }
                    if j + 1 < n {
                        m = m.max(d(&self.values[i * n + j], &self.values[i * n + j + 1]));
                    }
                }
            }
        }
        m
    }

    pub fn sup_distance(&self, other: &Graph) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphTransform {
    /// Graphs for indices `0..=n`; index `n` repeats index 0.
    pub graphs: Vec<Graph>,
    pub passes: usize,
    pub last_change: f64,
    pub lipschitz_max: f64,
    /// `sup |π_cu f_i(x) − W_{i+1}(π_s f_i(x))|` over the nodes of `W_i`.
    pub invariance_max: f64,
    /// `min −(1/k) log(‖f^k x − f^k y‖/‖x − y‖)` over sampled graph pairs.
    pub contraction_rate: f64,
    pub contraction_ok: bool,
    pub lambda: f64,
    /// Largest measured `d_C¹(f_i, L_i)` on the test box.
    pub perturbation: f64,
}

fn block(m: &Mat<f64>, from: usize, to: usize) -> Mat<f64> {
    Mat::from_fn(to - from, to - from, |r, c| m[(from + r, from + c)])
}

fn check_rates(l: &Mat<f64>, sp: Splitting, lambda: f64, index: usize) -> Result<(), ShadowError> {
    let q = sp.dim();
    let bounds = [(0, sp.u), (sp.u, sp.cu()), (sp.cu(), q)];
    for r in 0..q {
        for c in 0..q {
            let same = bounds.iter().any(|&(a, b)| (a..b).contains(&r) && (a..b).contains(&c));
            if !same && l[(r, c)].abs() > 1e-12 {
                return Err(ShadowError::Precondition(format!("L_{index} does not preserve the splitting")));
            }
        }
    }
    let fail = |what: &str| Err(ShadowError::Precondition(format!("L_{index}: {what} outside the rate hypothesis for λ = {lambda}")));
    if sp.s > 0 && block(l, sp.cu(), q).norm2() >= lambda {
        return fail("stable norm");
    }
    if sp.u > 0 && 1.0 / block(l, 0, sp.u).conorm() >= lambda {
        return fail("inverse unstable norm");
    }
    if sp.c > 0 {
        let c = block(l, sp.u, sp.cu());
        if c.norm2() >= lambda.powf(-0.5) || 1.0 / c.conorm() >= lambda.powf(-0.5) {
            return fail("center norms");
        }
    }
    Ok(())
}

fn box_grid(q: usize, radius: f64, n: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![]];
    for _ in 0..q {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |i| {
                    let mut p = p.clone();
                    p.push(-radius + 2.0 * radius * i as f64 / (n - 1) as f64);
                    p
                })
            })
            .collect();
    }
    pts
}

/// `W_i = f_i⁻¹(W_{i+1})` over the node grid, solved node by node with the
/// chord iteration `w ← w − L_cu⁻¹ (π_cu f(w, s) − W_{i+1}(π_s f(w, s)))`.
fn pull_back(f: &FnMap, lcu_inv: &Mat<f64>, next: &Graph, guess: &Graph, index: usize) -> Result<Graph, ShadowError> {
    let dcu = next.dcu;
    let mut out = guess.clone();
    for k in 0..out.values.len() {
        let s = out.node(k);
        let mut w = guess.values[k].clone();
        let mut converged = false;
        for _ in 0..200 {
            let mut x = w.clone();
            x.extend(&s);
            let y = f.eval(&x);
            let target = next.eval(&y[dcu..]);
            let res: Vec<f64> = (0..dcu).map(|j| y[j] - target[j]).collect();
            let step = lcu_inv.mul_vec(&res);
            for j in 0..dcu {
                w[j] -= step[j];
            }
            if !w.iter().all(|v| v.is_finite()) {
                break;
            }
            if step.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(ShadowError::TransformDiverged { index, lipschitz: f64::NAN });
        }
        out.values[k] = w;
    }
    let lip = out.lipschitz();
    if lip > 1.0 {
        return Err(ShadowError::TransformDiverged { index, lipschitz: lip });
    }
    Ok(out)
}

/// Stable graphs over the `s`-box of half-width `radius` for the sequence
/// `f_0, …, f_{n−1}` with linear parts `L_i`.
pub fn finite_graph_transform(
    linear: &[Mat<f64>],
    perturbed: &[FnMap],
    split: Splitting,
    lambda: f64,
    alpha2: f64,
    radius: f64,
) -> Result<GraphTransform, ShadowError> {
    let n = linear.len();
    if n == 0 || perturbed.len() != n {
        return Err(ShadowError::Precondition("linear and perturbed sequences must be nonempty and of equal length".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(ShadowError::Precondition(format!("λ = {lambda} is not in (0, 1)")));
    }
    if !(1..=2).contains(&split.s) || split.cu() == 0 {
        return Err(ShadowError::Precondition("graphs need 1 or 2 stable and at least 1 complementary dimension".into()));
    }
    let q = split.dim();
    let test_box = box_grid(q, radius, 9);
    let mut perturbation = 0.0f64;
    let mut lcu_inv = Vec::with_capacity(n);
    for (i, (l, f)) in linear.iter().zip(perturbed).enumerate() {
        if l.rows() != q || f.dim() != q {
            return Err(ShadowError::Precondition(format!("map {i} has the wrong dimension")));
        }
        check_rates(l, split, lambda, i)?;
        let d = c1_gap(f, &FnMap::linear(l.clone()), &test_box);
        perturbation = perturbation.max(d);
        if d >= alpha2 {
            return Err(ShadowError::Precondition(format!("d_C1(f_{i}, L_{i}) = {d} is not below α₂ = {alpha2}")));
        }
        lcu_inv.push(block(l, 0, split.cu()).inverse().ok_or_else(|| ShadowError::Precondition("singular L_cu".into()))?);
    }

    let flat = Graph::flat(split.s, split.cu(), radius, GRAPH_NODES);
    let mut graphs = vec![flat; n + 1];
    let mut passes = 0;
    let mut last_change = f64::INFINITY;
    while passes < MAX_PASSES {
        passes += 1;
        graphs[n] = graphs[0].clone();
        let old0 = graphs[0].clone();
        for i in (0..n).rev() {
            graphs[i] = pull_back(&perturbed[i], &lcu_inv[i], &graphs[i + 1], &graphs[i], i)?;
        }
        last_change = graphs[0].sup_distance(&old0);
        if last_change < GRAPH_TOL {
            break;
        }
    }
    if last_change >= GRAPH_TOL {
        return Err(ShadowError::TransformDiverged { index: 0, lipschitz: graphs[0].lipschitz() });
    }
    graphs[n] = graphs[0].clone();

    let dcu = split.cu();
    let mut invariance_max = 0.0f64;
    for i in 0..n {
        for k in 0..graphs[i].values.len() {
            let y = perturbed[i].eval(&graphs[i].point(k));
            let w = graphs[i + 1].eval(&y[dcu..]);
            invariance_max = invariance_max.max((0..dcu).map(|j| (y[j] - w[j]).abs()).fold(0.0, f64::max));
        }
    }

    // pairs of nodes eight apart along the first stable axis, from every index
    let stride = if split.s == 1 { 8 } else { 8 * GRAPH_NODES };
    let (mut contraction_rate, mut contraction_ok) = (f64::INFINITY, true);
    for i in 0..n {
        let g = &graphs[i];
        let mut a = 0;
        while a + stride < g.values.len() {
            let (mut x, mut y) = (g.point(a), g.point(a + stride));
            let d0 = dist(&x, &y);
            for k in 1..=(n - i) {
                x = perturbed[i + k - 1].eval(&x);
                y = perturbed[i + k - 1].eval(&y);
                let ratio = dist(&x, &y) / d0;
                contraction_ok &= ratio < lambda.powi(k as i32);
                contraction_rate = contraction_rate.min(-ratio.ln() / k as f64);
            }
            a += if split.s == 1 { 4 } else { 4 * GRAPH_NODES + 4 };
        }
    }
    let lipschitz_max = graphs.iter().map(Graph::lipschitz).fold(0.0, f64::max);
    Ok(GraphTransform {
        graphs,
        passes,
        last_change,
        lipschitz_max,
        invariance_max,
        contraction_rate,
        contraction_ok,
        lambda,
        perturbation,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_maps_give_flat_graphs() {
        let l = Mat::diag(&[3.0, 0.25]);
        let seq = vec![l.clone(); 5];
        let fs: Vec<FnMap> = seq.iter().map(|m| FnMap::linear(m.clone())).collect();
        let gt = finite_graph_transform(&seq, &fs, Splitting { u: 1, c: 0, s: 1 }, 0.5, 0.1, 1.0).unwrap();
        assert!(gt.graphs.iter().all(|g| g.values.iter().all(|v| v[0] == 0.0)));
        assert!(gt.contraction_ok);
        assert!((gt.contraction_rate - 4f64.ln()).abs() < 1e-12);
    }
}
