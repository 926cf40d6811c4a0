use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sampled::SampledMap;
use super::LivsicError;
use crate::base::BasePoint;
use crate::cocycle::Cocycle;
use crate::fiber::{FiberDiffeo, FiberError, FiberPoint, Jac};
use crate::scalar::Real;

/// Construction parameters of a transfer function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    pub density: f64,
    pub max_table: usize,
    /// Samples per fiber dimension; `None` picks 128 on the circle and 32 on `T²`.
    pub grid: Option<usize>,
    /// Table entries between stored samples.
    pub stride: usize,
    /// Steps of the stable/unstable holonomy used off the table; 0 is pure
    /// nearest-neighbour extension.
    pub holonomy_depth: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { density: 0.02, max_table: 2_000_000, grid: None, stride: 64, holonomy_depth: 12 }
    }
}

impl SolveOptions {
    pub fn grid_for(&self, q: usize) -> usize {
        self.grid.unwrap_or(if q == 1 { 128 } else { 32 })
    }
}

/// Fitted `d_C⁰(u(x), u(x')) ≤ K d(x, x')^β` over near-return pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderFit {
    pub k: f64,
    pub beta: f64,
    pub pairs: usize,
    /// No pair with a positive `d_C⁰`.
    pub degenerate: bool,
}

pub(crate) fn jmul<T: Real>(a: &Jac<T>, b: &Jac<T>) -> Jac<T> {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn imul(a: [[i64; 2]; 2], b: [[i64; 2]; 2]) -> Option<[[i64; 2]; 2]> {
    let e = |i: usize, j: usize| a[i][0].checked_mul(b[0][j])?.checked_add(a[i][1].checked_mul(b[1][j])?);
    Some([[e(0, 0)?, e(0, 1)?], [e(1, 0)?, e(1, 1)?]])
}

/// One value `u(x)`: `post ∘ sampled ∘ pre`.
#[derive(Clone, Debug)]
pub struct TransferMap<T> {
    q: usize,
    pre: Option<FiberDiffeo<T>>,
    sampled: Arc<SampledMap<T>>,
    post: Vec<FiberDiffeo<T>>,
    post_inv: Vec<FiberDiffeo<T>>,
}

impl<T: Real> TransferMap<T> {
    fn new(sampled: Arc<SampledMap<T>>, pre: Option<FiberDiffeo<T>>) -> Self {
        Self { q: sampled.dim(), pre, sampled, post: Vec::new(), post_inv: Vec::new() }
    }

    fn push(&mut self, g: FiberDiffeo<T>) {
        self.post_inv.push(g.invert());
        self.post.push(g);
    }

    fn push_inverse(&mut self, g: &FiberDiffeo<T>) {
        self.post.push(g.invert());
        self.post_inv.push(g.clone());
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    /// Exact maps applied after the sampled one.
    pub fn steps(&self) -> usize {
        self.post.len()
    }

    pub fn lift_jac(&self, y: [T; 2]) -> Result<([T; 2], Jac<T>), FiberError> {
        let (mut v, mut jac) = match &self.pre {
            Some(g) => g.lift_jac(y)?,
            None => (y, [[T::one(), T::zero()], [T::zero(), T::one()]]),
        };
        let (v2, j2) = self.sampled.lift_jac(v);
        v = v2;
        jac = jmul(&j2, &jac);
        for g in &self.post {
            let (v3, j3) = g.lift_jac(v)?;
            v = v3;
            jac = jmul(&j3, &jac);
        }
        Ok((v, jac))
    }

    pub fn eval_lift(&self, y: [T; 2]) -> Result<[T; 2], FiberError> {
        Ok(self.lift_jac(y)?.0)
    }

    /// `u⁻¹` on lifts.
    pub fn inverse_lift(&self, w: [T; 2]) -> Result<[T; 2], FiberError> {
        let mut v = w;
        for g in self.post_inv.iter().rev() {
            v = g.eval_lift(v)?;
        }
        v = self.sampled.solve_lift(v)?;
        if let Some(g) = &self.pre {
            v = g.invert().eval_lift(v)?;
        }
        Ok(v)
    }

    pub fn eval(&self, y: &FiberPoint<T>) -> Result<FiberPoint<T>, FiberError> {
        Ok(FiberPoint::new(self.q, self.eval_lift(y.c)?))
    }

    pub fn preimage(&self, w: &FiberPoint<T>) -> Result<FiberPoint<T>, FiberError> {
        Ok(FiberPoint::new(self.q, self.inverse_lift(w.c)?))
    }
}

/// Where an evaluation point was attached to the table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lookup {
    pub index: usize,
    pub gap: f64,
    pub holonomy: bool,
}

/// `u` with `u(x₀) = id`, held as samples of `Aⁱ(x₀)` along an orbit table.
#[derive(Clone, Debug)]
pub struct TransferFunction<T> {
    cocycle: Cocycle<T>,
    table: Vec<BasePoint>,
    samples: Vec<Arc<SampledMap<T>>>,
    gauge: Option<FiberDiffeo<T>>,
    options: SolveOptions,
    pub holder_estimate: HolderFit,
}

impl<T: Real> TransferFunction<T> {
    /// Builds the table without checking any precondition.
    pub fn build(c: &Cocycle<T>, options: &SolveOptions) -> Result<Self, LivsicError> {
        assert!(options.stride > 0, "stride must be positive");
        let base = c.base();
        let table = base.transitive_segment(options.density, options.max_table)?;
        let q = c.dim();
        let n = options.grid_for(q);
        let mut vals = SampledMap::<T>::nodes(q, n);
        let mut linear = [[1i64, 0], [0, 1]];
        let mut samples = Vec::with_capacity(table.len() / options.stride + 1);
        for i in 0..table.len() {
            if i % options.stride == 0 {
                // drop whole turns so lifts stay near the fundamental domain
                let s = SampledMap::from_values(q, n, linear, &vals);
                let shift: Vec<T> = (0..q).map(|c| s.node_value(0)[c].floor()).collect();
                if shift.iter().any(|v| *v != T::zero()) {
                    for v in vals.iter_mut() {
                        for c in 0..q {
                            v[c] = v[c] - shift[c];
                        }
                    }
                }
                samples.push(Arc::new(SampledMap::from_values(q, n, linear, &vals)));
            }
            if i + 1 < table.len() {
                let g = c.at_with_next(&table[i], &table[i + 1]);
                for v in vals.iter_mut() {
                    *v = g.eval_lift(*v)?;
                }
                linear = imul(g.linear_part(), linear)
                    .ok_or_else(|| LivsicError::Numeric("linear part of the table overflows".into()))?;
            }
        }
        let mut u = Self {
            cocycle: c.clone(),
            table,
            samples,
            gauge: None,
            options: options.clone(),
            holder_estimate: HolderFit { k: 0.0, beta: 1.0, pairs: 0, degenerate: true },
        };
        u.holder_estimate = u.fit_holder();
        Ok(u)
    }

    pub fn anchor(&self) -> &BasePoint {
        &self.table[0]
    }

    pub fn table(&self) -> &[BasePoint] {
        &self.table
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    pub fn options(&self) -> &SolveOptions {
        &self.options
    }

    pub fn cocycle(&self) -> &Cocycle<T> {
        &self.cocycle
    }

    /// `u ∘ g`.
    pub fn with_gauge(mut self, g: FiberDiffeo<T>) -> Self {
        self.gauge = Some(match self.gauge.take() {
            Some(h) => h.compose(&g),
            None => g,
        });
        self
    }

    /// Replaces the stored samples of entry `stride·k` by `g ∘ entry`.
    pub fn perturb_samples(&mut self, k: usize, g: &FiberDiffeo<T>) -> Result<usize, FiberError> {
        let s = &self.samples[k];
        let (q, n) = (s.dim(), s.grid());
        let vals = (0..n.pow(q as u32)).map(|i| g.eval_lift(s.node_value(i))).collect::<Result<Vec<_>, _>>()?;
        let lin = imul(g.linear_part(), s.linear_part()).expect("small linear parts");
        self.samples[k] = Arc::new(SampledMap::from_values(q, n, lin, &vals));
        Ok(k * self.options.stride)
    }

    /// Entry `i` of the table, `Aⁱ(x₀)`.
    pub fn entry(&self, i: usize) -> TransferMap<T> {
        let k = i / self.options.stride;
        let mut m = TransferMap::new(self.samples[k].clone(), self.gauge.clone());
        for t in k * self.options.stride..i {
            m.push(self.cocycle.at_with_next(&self.table[t], &self.table[t + 1]));
        }
        m
    }

    /// Nearest table entry in base distance; ties go to the earliest.
    pub fn nearest(&self, x: &BasePoint) -> (usize, f64) {
        let base = self.cocycle.base();
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.table.iter().enumerate() {
            let d = base.dist(p, x);
            if d < best.1 {
                best = (i, d);
                if d == 0.0 {
                    break;
                }
            }
        }
        best
    }

    /// `u(x)`.
    pub fn at(&self, x: &BasePoint) -> TransferMap<T> {
        self.at_traced(x).0
    }

    pub fn at_traced(&self, x: &BasePoint) -> (TransferMap<T>, Lookup) {
        let (j, gap) = self.nearest(x);
        let mut m = self.entry(j);
        let depth = self.options.holonomy_depth;
        let base = self.cocycle.base();
        if gap == 0.0 || depth == 0 {
            return (m, Lookup { index: j, gap, holonomy: false });
        }
        let xj = &self.table[j];
        let Ok(z) = base.bracket(xj, x) else {
            return (m, Lookup { index: j, gap, holonomy: false });
        };
        let a = |p: &BasePoint, fp: &BasePoint| self.cocycle.at_with_next(p, fp);
        // u(x_j) → u(f^{-n} x_j), unstable leaf
        let mut cur = xj.clone();
        for _ in 0..depth {
            let prev = base.inverse_step(&cur);
            m.push_inverse(&a(&prev, &cur));
            cur = prev;
        }
        // ≈ u(f^{-n} z) → u(fⁿ z)
        let mut zi = base.iterate(&z, -(depth as i64));
        for _ in 0..2 * depth {
            let next = base.step(&zi);
            m.push(a(&zi, &next));
            zi = next;
        }
        // ≈ u(fⁿ x) → u(x), stable leaf
        let xs = base.orbit(x, depth + 1);
        for i in (0..depth).rev() {
            m.push_inverse(&a(&xs[i], &xs[i + 1]));
        }
        (m, Lookup { index: j, gap, holonomy: true })
    }

    /// Fit over pairs of sampled entries closer than 0.1 in the base.
    fn fit_holder(&self) -> HolderFit {
        const PAIR_RADIUS: f64 = 0.1;
        const MAX_PAIRS: usize = 5000;
        let base = self.cocycle.base();
        let st = self.options.stride;
        let mut pts = Vec::new();
        'outer: for a in 0..self.samples.len() {
            for b in a + 1..self.samples.len() {
                let d = base.dist(&self.table[a * st], &self.table[b * st]);
                if !(d > 0.0 && d < PAIR_RADIUS) {
                    continue;
                }
                if let Some(du) = self.samples[a].node_distance(&self.samples[b]) {
                    if du > 0.0 {
                        pts.push((d.ln(), du.ln()));
                    }
                }
                if pts.len() >= MAX_PAIRS {
                    break 'outer;
                }
            }
        }
        if pts.len() < 2 {
            return HolderFit { k: 0.0, beta: 1.0, pairs: pts.len(), degenerate: true };
        }
        let nf = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let beta = if sxx > 0.0 { (sxy / sxx).clamp(1e-3, 1.0) } else { 1.0 };
        let k = pts.iter().map(|p| (p.1 - beta * p.0).exp()).fold(0.0, f64::max);
        HolderFit { k, beta, pairs: pts.len(), degenerate: false }
    }
}
