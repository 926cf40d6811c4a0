//! Cones around an orthogonal coordinate splitting `R^d = E¹ ⊕ … ⊕ E^k`.
//!
//! `K^j_γ = {‖v_{>j}‖ < γ‖v_{≤j}‖}` surrounds the fast blocks `1..=j`,
//! `K_{j,γ} = {‖v_{≤j}‖ < γ‖v_{>j}‖}` the slow ones.

use rand::Rng;
use serde::Serialize;

use super::SpectralError;
use crate::linalg::{norm, normalize, Mat};

#[derive(Clone, Debug, Serialize)]
pub struct ConeSystem {
    /// Block dimensions `d_i` in coordinate order.
    pub dims: Vec<usize>,
    /// `λ′_1 > … > λ′_k`.
    pub lambdas: Vec<f64>,
    pub gamma: f64,
    /// `½ min_i (λ′_i − λ′_{i+1})`.
    pub kappa: f64,
    pub delta: f64,
    pub alpha1: f64,
}

/// Which display to instantiate: exact block matrices (`δ/4` inclusions,
/// `δ/3` growth) or perturbations within `alpha1` (`δ/2` for both).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConeCheck {
    Unperturbed,
    Perturbed,
}

impl ConeCheck {
    fn inclusion_slack(self, delta: f64) -> f64 {
        match self {
            ConeCheck::Unperturbed => delta / 4.0,
            ConeCheck::Perturbed => delta / 2.0,
        }
    }

    fn growth_slack(self, delta: f64) -> f64 {
        match self {
            ConeCheck::Unperturbed => delta / 3.0,
            ConeCheck::Perturbed => delta / 2.0,
        }
    }
}

const SLACK: f64 = 1e-12;

impl ConeSystem {
    pub fn new(dims: Vec<usize>, lambdas: Vec<f64>, delta: f64) -> Result<Self, SpectralError> {
        let bad = |what: &str| SpectralError::PreconditionViolated { index: 0, what: what.into() };
        if dims.len() != lambdas.len() || dims.len() < 2 || dims.contains(&0) {
            return Err(bad("need at least two nonempty blocks with one exponent each"));
        }
        if lambdas.windows(2).any(|w| w[0] <= w[1]) {
            return Err(bad("exponents must be strictly decreasing"));
        }
        let kappa = 0.5 * lambdas.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        if !(delta > 0.0 && delta < kappa / 2.0) {
            return Err(bad("need 0 < δ < κ/2"));
        }
        Ok(Self { dims, lambdas, gamma: 0.1, kappa, delta, alpha1: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn blocks(&self) -> usize {
        self.dims.len()
    }

    /// Number of coordinates in blocks `1..=j`.
    pub fn split(&self, j: usize) -> usize {
        self.dims[..j].iter().sum()
    }

    fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        let s = self.split(i);
        s..s + self.dims[i]
    }

    /// `(‖v_{≤j}‖, ‖v_{>j}‖)`.
    pub fn parts(&self, v: &[f64], j: usize) -> (f64, f64) {
        let s = self.split(j);
        (norm(&v[..s]), norm(&v[s..]))
    }

    /// Block-diagonal matrix `diag(e^{λ′_i + t_i})` for per-block offsets.
    pub fn diagonal(&self, offsets: &[f64]) -> Mat<f64> {
        let mut d = Vec::with_capacity(self.dim());
        for (i, &n) in self.dims.iter().enumerate() {
            d.extend(std::iter::repeat_n((self.lambdas[i] + offsets[i]).exp(), n));
        }
        Mat::diag(&d)
    }

    /// Checks that `m` preserves every block with norm and conorm inside
    /// `(e^{λ′_i − δ/4}, e^{λ′_i + δ/4})`.
    pub fn check_adapted(&self, m: &Mat<f64>) -> Result<(), String> {
        let scale = m.max_abs();
        for a in 0..self.blocks() {
            for b in 0..self.blocks() {
                if a == b {
                    continue;
                }
                for r in self.block_range(a) {
                    for c in self.block_range(b) {
                        if m[(r, c)].abs() > SLACK * scale {
                            return Err(format!("entry ({r}, {c}) couples blocks {a} and {b}"));
                        }
                    }
                }
            }
            let rg = self.block_range(a);
            let blk = Mat::from_fn(rg.len(), rg.len(), |r, c| m[(rg.start + r, rg.start + c)]);
            let (lo, hi) = ((self.lambdas[a] - self.delta / 4.0).exp(), (self.lambdas[a] + self.delta / 4.0).exp());
            let (nrm, co) = (blk.norm2(), blk.conorm());
            if nrm > hi * (1.0 + SLACK) || co < lo * (1.0 - SLACK) {
                return Err(format!("block {a} has norm {nrm}, conorm {co} outside ({lo}, {hi})"));
            }
        }
        Ok(())
    }

    /// Random vector with `‖v_{≤j}‖ = 1` and `‖v_{>j}‖ = t·γ` (fast cone) or
    /// the mirror image (slow cone).
    fn sample<R: Rng + ?Sized>(&self, j: usize, fast: bool, t: f64, rng: &mut R) -> Vec<f64> {
        let s = self.split(j);
        let q = self.dim();
        let top = normalize(&(0..s).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect::<Vec<_>>());
        let bot = normalize(&(s..q).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect::<Vec<_>>());
        let (a, b) = if fast { (1.0, t * self.gamma) } else { (t * self.gamma, 1.0) };
        top.iter().map(|x| a * x).chain(bot.iter().map(|x| b * x)).collect()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConeReport {
    pub steps: usize,
    pub samples: usize,
    /// Largest image aperture divided by its bound.
    pub max_inclusion: f64,
    /// Largest `‖Cv‖ / e^{λ′_{j+1}+s}‖v‖` on slow cones and
    /// `e^{λ′_j−s}‖u‖ / ‖Cu‖` on fast cones.
    pub max_growth: f64,
    /// Largest aperture of `C^{(n)} v` divided by `γ e^{n(−κ+s)}`.
    pub max_iterated: f64,
    /// Largest `e^{λ′_k−s} / ‖C⁻¹‖⁻¹`.
    pub max_conorm: f64,
}

fn escape(kind: &'static str, step: usize, cone: usize, ratio: f64, bound: f64, witness: Vec<f64>) -> SpectralError {
    SpectralError::ConeEscape { kind, step, cone, ratio, bound, witness }
}

/// Samples `samples` vectors per cone and step (half on the cone boundary)
/// and checks the cone inclusions, growth bounds, the conorm bound and the
/// iterated aperture decay for `C_n = A_n + P_n`.
pub fn cone_invariance_check<R: Rng + ?Sized>(
    cones: &ConeSystem,
    matrices: &[Mat<f64>],
    perturbations: Option<&[Mat<f64>]>,
    samples: usize,
    rng: &mut R,
) -> Result<ConeReport, SpectralError> {
    let mode = if perturbations.is_some() { ConeCheck::Perturbed } else { ConeCheck::Unperturbed };
    let (incl, grow) = (mode.inclusion_slack(cones.delta), mode.growth_slack(cones.delta));
    let k = cones.blocks();
    let mut cs = Vec::with_capacity(matrices.len());
    for (n, a) in matrices.iter().enumerate() {
        cones.check_adapted(a).map_err(|what| SpectralError::PreconditionViolated { index: n, what })?;
        let c = match perturbations {
            Some(p) => {
                let pn = p[n].norm2();
                if pn > cones.alpha1 * (1.0 + SLACK) {
                    return Err(SpectralError::PreconditionViolated {
                        index: n,
                        what: format!("perturbation norm {pn} exceeds alpha1 = {}", cones.alpha1),
                    });
                }
                a + &p[n]
            }
            None => a.clone(),
        };
        cs.push(c);
    }
    let mut rep = ConeReport { steps: cs.len(), samples, ..Default::default() };
    let incl_bound = cones.gamma * (-cones.kappa + incl).exp();
    for (n, c) in cs.iter().enumerate() {
        let ci = c.inverse().ok_or(SpectralError::Singular { cond: f64::INFINITY })?;
        let co_bound = (cones.lambdas[k - 1] - grow).exp();
        let co = c.conorm();
        rep.max_conorm = rep.max_conorm.max(co_bound / co);
        if co < co_bound * (1.0 - SLACK) {
            return Err(escape("conorm", n, k - 1, co, co_bound, vec![]));
        }
        for j in 1..k {
            for s in 0..samples {
                let t = if s % 2 == 0 { 1.0 } else { rng.gen::<f64>() };
                let u = cones.sample(j, true, t, rng);
                let w = c.mul_vec(&u);
                let (top, bot) = cones.parts(&w, j);
                let r = bot / top;
                rep.max_inclusion = rep.max_inclusion.max(r / incl_bound);
                if r > incl_bound * (1.0 + SLACK) {
                    return Err(escape("forward inclusion", n, j, r, incl_bound, u));
                }
                let lo = (cones.lambdas[j - 1] - grow).exp() * norm(&u);
                rep.max_growth = rep.max_growth.max(lo / norm(&w));
                if norm(&w) < lo * (1.0 - SLACK) {
                    return Err(escape("fast growth", n, j, norm(&w), lo, u));
                }

                let v = cones.sample(j, false, t, rng);
                let w = ci.mul_vec(&v);
                let (top, bot) = cones.parts(&w, j);
                let r = top / bot;
                rep.max_inclusion = rep.max_inclusion.max(r / incl_bound);
                if r > incl_bound * (1.0 + SLACK) {
                    return Err(escape("backward inclusion", n, j, r, incl_bound, v));
                }
                let cv = norm(&c.mul_vec(&v));
                let hi = (cones.lambdas[j] + grow).exp() * norm(&v);
                rep.max_growth = rep.max_growth.max(cv / hi);
                if cv > hi * (1.0 + SLACK) {
                    return Err(escape("slow growth", n, j, cv, hi, v));
                }
            }
        }
    }
    // apertures along the product, renormalized each step
    for j in 1..k {
        for s in 0..samples {
            let t = if s % 2 == 0 { 1.0 } else { rng.gen::<f64>() };
            let mut v = cones.sample(j, true, t, rng);
            for (n, c) in cs.iter().enumerate() {
                v = normalize(&c.mul_vec(&v));
                let (top, bot) = cones.parts(&v, j);
                let bound = cones.gamma * ((n + 1) as f64 * (-cones.kappa + incl)).exp();
                let r = bot / top;
                if bound > 0.0 {
                    rep.max_iterated = rep.max_iterated.max(r / bound);
                }
                if r > bound * (1.0 + SLACK) {
                    return Err(escape("iterated aperture", n, j, r, bound, v));
                }
            }
        }
    }
    Ok(rep)
}

/// Halves `γ` from 0.1 until the unperturbed check passes on `samples`
/// vectors per cone and step; stores and returns it.
pub fn calibrate_gamma<R: Rng + ?Sized>(
    cones: &mut ConeSystem,
    matrices: &[Mat<f64>],
    samples: usize,
    rng: &mut R,
) -> Result<f64, SpectralError> {
    cones.gamma = 0.1;
    for _ in 0..60 {
        match cone_invariance_check(cones, matrices, None, samples, rng) {
            Ok(_) => return Ok(cones.gamma),
            Err(SpectralError::ConeEscape { .. }) => cones.gamma *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(SpectralError::PreconditionViolated { index: 0, what: "no admissible cone aperture".into() })
}

fn random_at_radius<R: Rng + ?Sized>(q: usize, r: f64, rng: &mut R) -> Mat<f64> {
    let g = Mat::random_gaussian(q, q, rng);
    let n = g.norm2();
    g.scale(r / n)
}

fn radius_passes<R: Rng + ?Sized>(
    cones: &mut ConeSystem,
    matrices: &[Mat<f64>],
    r: f64,
    trials: usize,
    samples: usize,
    rng: &mut R,
) -> Result<bool, SpectralError> {
    let saved = cones.alpha1;
    cones.alpha1 = r;
    let q = cones.dim();
    let mut ok = true;
    for _ in 0..trials {
        let p: Vec<Mat<f64>> = matrices.iter().map(|_| random_at_radius(q, r, rng)).collect();
        match cone_invariance_check(cones, matrices, Some(&p), samples, rng) {
            Ok(_) => {}
            Err(SpectralError::ConeEscape { .. } | SpectralError::Singular { .. }) => {
                ok = false;
                break;
            }
            Err(e) => {
                cones.alpha1 = saved;
                return Err(e);
            }
        }
    }
    cones.alpha1 = saved;
    Ok(ok)
}

/// Largest radius (by bisection) for which `trials` random perturbation
/// sequences at that radius pass the perturbed check, halved. Stored in
/// `cones.alpha1` and returned.
pub fn calibrate_alpha1<R: Rng + ?Sized>(
    cones: &mut ConeSystem,
    matrices: &[Mat<f64>],
    trials: usize,
    samples: usize,
    rng: &mut R,
) -> Result<f64, SpectralError> {
    let mut hi = matrices.iter().map(Mat::conorm).fold(f64::INFINITY, f64::min);
    let mut lo = 0.0;
    if radius_passes(cones, matrices, hi, trials, samples, rng)? {
        lo = hi;
    } else {
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if radius_passes(cones, matrices, mid, trials, samples, rng)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    cones.alpha1 = 0.5 * lo;
    Ok(cones.alpha1)
}

/// Finite-horizon flag `R^d = H_1 ⊃ … ⊃ H_k`.
#[derive(Clone, Debug, Serialize)]
pub struct Flag {
    pub horizon: usize,
    /// Orthonormal bases, `H_j` has `Σ_{i≥j} d_i` columns.
    #[serde(skip)]
    pub subspaces: Vec<Mat<f64>>,
    pub dims: Vec<usize>,
    /// Growth rates `(1/T) log ‖C^{(T)} v‖` of basis vectors of `H_j ⊖ H_{j+1}`,
    /// from the diagonal of the backward QR.
    pub rates: Vec<Vec<f64>>,
    /// Every rate lies in `λ′_j ± δ/2`.
    pub sandwich_ok: bool,
    /// Largest aperture `‖v_{<j}‖/‖v_{≥j}‖` of `C^{(n)} v`, `v ∈ H_j`, over `γ`.
    pub cone_excess: f64,
}

/// `(1/n) log ‖C_n ⋯ C_1 v‖` by direct iteration.
pub fn growth_rate(cs: &[Mat<f64>], v: &[f64]) -> f64 {
    let mut v = normalize(v);
    let mut log = 0.0;
    for c in cs {
        let w = c.mul_vec(&v);
        let n = norm(&w);
        log += n.ln();
        v = w.iter().map(|x| x / n).collect();
    }
    log / cs.len() as f64
}

/// Pulls an orthonormal basis back through `C_T, …, C_1` (QR at every
/// step); the first `Σ_{i≥j} d_i` columns span `H_j`.
pub fn flag_construction(matrices: &[Mat<f64>], cones: &ConeSystem, horizon: usize) -> Result<Flag, SpectralError> {
    let horizon = horizon.min(matrices.len());
    let cs = &matrices[..horizon];
    let q = cones.dim();
    let k = cones.blocks();
    let mut w = Mat::from_fn(q, q, |r, c| if r + c == q - 1 { 1.0 } else { 0.0 });
    let mut log_r = vec![0.0f64; q];
    for c in cs.iter().rev() {
        let ci = c.inverse().ok_or(SpectralError::Singular { cond: f64::INFINITY })?;
        let (qm, rm) = (&ci * &w).qr();
        let top = (0..q).map(|i| rm[(i, i)].abs()).fold(0.0, f64::max);
        let rank = (0..q).filter(|&i| rm[(i, i)].abs() > 1e-14 * top && rm[(i, i)].is_finite()).count();
        if rank < q {
            return Err(SpectralError::DimensionCollapse { rank, expected: q });
        }
        for (i, l) in log_r.iter_mut().enumerate() {
            *l += rm[(i, i)].abs().ln();
        }
        w = qm;
    }
    let dims: Vec<usize> = (0..k).map(|j| cones.dims[j..].iter().sum()).collect();
    let subspaces: Vec<Mat<f64>> =
        dims.iter().map(|&m| Mat::from_columns(&(0..m).map(|c| w.column(c)).collect::<Vec<_>>())).collect();
    let mut rates = Vec::with_capacity(k);
    let mut sandwich_ok = true;
    for j in 0..k {
        let lo = if j + 1 < k { dims[j + 1] } else { 0 };
        // forward growth read off the backward QR; forward iteration of slow
        // vectors is swamped by rounding along fast directions
        let r: Vec<f64> = (lo..dims[j]).map(|c| -log_r[c] / horizon as f64).collect();
        sandwich_ok &= r.iter().all(|x| (x - cones.lambdas[j]).abs() <= cones.delta / 2.0);
        rates.push(r);
    }
    let mut cone_excess = 0.0f64;
    for j in 1..k {
        for c in 0..dims[j] {
            let mut v = w.column(c);
            for m in cs {
                v = normalize(&m.mul_vec(&v));
                let (top, bot) = cones.parts(&v, j);
                cone_excess = cone_excess.max(top / bot / cones.gamma);
            }
        }
    }
    Ok(Flag { horizon, subspaces, dims, rates, sandwich_ok, cone_excess })
}
