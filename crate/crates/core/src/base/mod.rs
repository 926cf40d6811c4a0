//! Hyperbolic base homeomorphisms: toral automorphisms and full shifts.

pub mod shift;
pub mod torus;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use shift::{ShiftModel, ShiftPoint};
pub use torus::{RationalPoint, TorusModel, TorusPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaseError {
    #[error("bracket out of range: d = {distance:e} >= delta = {delta:e}")]
    BracketOutOfRange { distance: f64, delta: f64 },
    #[error("periodic point count {count} exceeds cap {cap}")]
    CapExceeded { count: u128, cap: u64 },
    #[error("segment not recurrent: d(x, f^n x) = {distance:e} >= delta = {delta:e}")]
    NotRecurrent { distance: f64, delta: f64 },
    #[error("segment of length {len} only {achieved}-dense (requested {requested})")]
    NotDenseEnough { achieved: f64, requested: f64, len: usize },
    #[error("window radius {radius} too small, need {needed}")]
    WindowTooSmall { needed: usize, radius: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("point does not belong to this model")]
    ModelMismatch,
}

/// Constants of the hyperbolic structure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HyperbolicityData {
    pub epsilon: f64,
    pub delta: f64,
    pub k0: f64,
    pub tau: f64,
    pub nu_s_max: f64,
    pub nu_u_max: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasePoint {
    Torus(TorusPoint),
    Shift(ShiftPoint),
}

impl BasePoint {
    pub fn as_torus(&self) -> Option<&TorusPoint> {
        match self {
            BasePoint::Torus(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_shift(&self) -> Option<&ShiftPoint> {
        match self {
            BasePoint::Shift(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit {
    pub point: BasePoint,
    pub period: usize,
    pub orbit: Vec<BasePoint>,
}

/// Output of the closing lemma.
#[derive(Clone, Debug)]
pub struct Closing {
    pub periodic: PeriodicOrbit,
    /// `[p, x]`
    pub y: BasePoint,
    /// `d(fⁱx, fⁱp)` for `i = 0..=n`
    pub trace: Vec<f64>,
    /// `d(x, fⁿx)` as used in the bound
    pub d0: f64,
    /// Largest `r` with `trace[i] <= C·d0·e^{-r·min(i,n-i)}` on interior indices;
    /// `None` when there is no interior index or every interior deviation is 0.
    pub rate: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Toral,
    Shift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    pub model: ModelKind,
    #[serde(default = "default_matrix")]
    pub matrix: [[i64; 2]; 2],
    #[serde(default = "default_alphabet")]
    pub alphabet: u8,
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_matrix() -> [[i64; 2]; 2] {
    [[2, 1], [1, 1]]
}
fn default_alphabet() -> u8 {
    2
}
fn default_window() -> usize {
    64
}

impl Default for BaseConfig {
    fn default() -> Self {
        Self { model: ModelKind::Toral, matrix: default_matrix(), alphabet: 2, window: 64 }
    }
}

/// Number of symbols per side used by [`BaseSystem::features`] on the shift.
pub const SHIFT_FEATURE_DIGITS: usize = 24;

#[derive(Clone, Debug)]
pub enum BaseSystem {
    Torus(TorusModel),
    Shift(ShiftModel),
}

impl BaseSystem {
    pub fn cat_map() -> Self {
        BaseSystem::Torus(TorusModel::new([[2, 1], [1, 1]]).expect("cat map is hyperbolic"))
    }

    pub fn full_shift(alphabet: u8, window: usize) -> Result<Self, BaseError> {
        Ok(BaseSystem::Shift(ShiftModel::new(alphabet, window)?))
    }

    pub fn from_config(c: &BaseConfig) -> Result<Self, BaseError> {
        match c.model {
            ModelKind::Toral => Ok(BaseSystem::Torus(TorusModel::new(c.matrix)?)),
            ModelKind::Shift => Self::full_shift(c.alphabet, c.window),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseSystem::Torus(_) => "toral",
            BaseSystem::Shift(_) => "shift",
        }
    }

    pub fn hyperbolicity(&self) -> &HyperbolicityData {
        match self {
            BaseSystem::Torus(m) => m.hyperbolicity(),
            BaseSystem::Shift(m) => m.hyperbolicity(),
        }
    }

    pub fn closing_constant(&self) -> f64 {
        match self {
            BaseSystem::Torus(m) => m.closing_constant(),
            BaseSystem::Shift(m) => m.closing_constant(),
        }
    }

    pub fn is_valid(&self, x: &BasePoint) -> bool {
        match (self, x) {
            (BaseSystem::Torus(_), BasePoint::Torus(_)) => true,
            (BaseSystem::Shift(m), BasePoint::Shift(p)) => m.is_valid(p),
            _ => false,
        }
    }

    pub fn step(&self, x: &BasePoint) -> BasePoint {
        match (self, x) {
            (BaseSystem::Torus(m), BasePoint::Torus(p)) => BasePoint::Torus(m.step(p)),
            (BaseSystem::Shift(m), BasePoint::Shift(p)) => BasePoint::Shift(m.step(p)),
            _ => panic!("{}", BaseError::ModelMismatch),
        }
    }

    pub fn inverse_step(&self, x: &BasePoint) -> BasePoint {
        match (self, x) {
            (BaseSystem::Torus(m), BasePoint::Torus(p)) => BasePoint::Torus(m.inverse_step(p)),
            (BaseSystem::Shift(m), BasePoint::Shift(p)) => BasePoint::Shift(m.inverse_step(p)),
            _ => panic!("{}", BaseError::ModelMismatch),
        }
    }

    /// `fⁿ(x)` for any integer `n`.
    pub fn iterate(&self, x: &BasePoint, n: i64) -> BasePoint {
        let mut y = x.clone();
        for _ in 0..n.unsigned_abs() {
            y = if n > 0 { self.step(&y) } else { self.inverse_step(&y) };
        }
        y
    }

    /// `[x, f x, …, f^{n-1} x]`
    pub fn orbit(&self, x: &BasePoint, n: usize) -> Vec<BasePoint> {
        let mut out = Vec::with_capacity(n);
        let mut y = x.clone();
        for _ in 0..n {
            let next = self.step(&y);
            out.push(y);
            y = next;
        }
        out
    }

    pub fn dist(&self, x: &BasePoint, y: &BasePoint) -> f64 {
        match (self, x, y) {
            (BaseSystem::Torus(m), BasePoint::Torus(a), BasePoint::Torus(b)) => m.dist(a, b),
            (BaseSystem::Shift(m), BasePoint::Shift(a), BasePoint::Shift(b)) => m.dist(a, b),
            _ => panic!("{}", BaseError::ModelMismatch),
        }
    }

    pub fn bracket(&self, y: &BasePoint, y2: &BasePoint) -> Result<BasePoint, BaseError> {
        match (self, y, y2) {
            (BaseSystem::Torus(m), BasePoint::Torus(a), BasePoint::Torus(b)) => Ok(BasePoint::Torus(m.bracket(a, b)?)),
            (BaseSystem::Shift(m), BasePoint::Shift(a), BasePoint::Shift(b)) => Ok(BasePoint::Shift(m.bracket(a, b)?)),
            _ => Err(BaseError::ModelMismatch),
        }
    }

    /// Bracket without the range check; meaningful whenever the local
    /// product structure extends, which holds on lifts for the torus.
    pub fn bracket_unchecked(&self, y: &BasePoint, y2: &BasePoint) -> BasePoint {
        match (self, y, y2) {
            (BaseSystem::Torus(m), BasePoint::Torus(a), BasePoint::Torus(b)) => BasePoint::Torus(m.bracket_unchecked(a, b)),
            (BaseSystem::Shift(m), BasePoint::Shift(a), BasePoint::Shift(b)) => BasePoint::Shift(m.bracket_unchecked(a, b)),
            _ => panic!("{}", BaseError::ModelMismatch),
        }
    }

    /// Two real coordinates of `x`: the torus coordinates, or truncated
    /// `m`-adic expansions of the future and the past on the shift.
    pub fn features(&self, x: &BasePoint) -> [f64; 2] {
        match (self, x) {
            (BaseSystem::Torus(_), BasePoint::Torus(p)) => p.coords(),
            (BaseSystem::Shift(m), BasePoint::Shift(p)) => {
                let inv = 1.0 / m.alphabet() as f64;
                let digits = SHIFT_FEATURE_DIGITS.min(m.radius());
                let (mut fut, mut past, mut scale) = (0.0, 0.0, inv);
                for i in 0..digits as i64 {
                    fut += p.at(i) as f64 * scale;
                    past += p.at(-1 - i) as f64 * scale;
                    scale *= inv;
                }
                [fut, past]
            }
            _ => panic!("{}", BaseError::ModelMismatch),
        }
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> BasePoint {
        match self {
            BaseSystem::Torus(_) => BasePoint::Torus(TorusPoint([rng.gen(), rng.gen()])),
            BaseSystem::Shift(m) => {
                let a = m.alphabet();
                BasePoint::Shift(ShiftPoint::from_fn(m.radius(), |_| rng.gen_range(0..a)))
            }
        }
    }

    /// A random point at distance at most `r` from `x` (and positive with
    /// probability one for the torus).
    pub fn random_nearby<R: Rng + ?Sized>(&self, x: &BasePoint, r: f64, rng: &mut R) -> BasePoint {
        match (self, x) {
            (BaseSystem::Torus(_), BasePoint::Torus(p)) => {
                let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let rad = r * rng.gen_range(0.0f64..1.0).sqrt();
                BasePoint::Torus(p.translate([rad * ang.cos(), rad * ang.sin()]))
            }
            (BaseSystem::Shift(m), BasePoint::Shift(p)) => {
                let k = shift_agreement(r, m.radius());
                let a = m.alphabet();
                BasePoint::Shift(ShiftPoint::from_fn(m.radius(), |i| {
                    if (i.unsigned_abs() as usize) < k {
                        p.at(i)
                    } else {
                        rng.gen_range(0..a)
                    }
                }))
            }
            _ => panic!("{}", BaseError::ModelMismatch),
        }
    }

    /// A random point of `W^s(x)` at distance at most `r`.
    pub fn random_stable_neighbor<R: Rng + ?Sized>(&self, x: &BasePoint, r: f64, rng: &mut R) -> BasePoint {
        match (self, x) {
            (BaseSystem::Torus(m), BasePoint::Torus(p)) => {
                let t = rng.gen_range(-r..r);
                let (_, es) = m.eigenvectors();
                BasePoint::Torus(p.translate([t * es[0], t * es[1]]))
            }
            (BaseSystem::Shift(m), BasePoint::Shift(p)) => {
                let k = shift_agreement(r, m.radius()).max(1);
                let a = m.alphabet();
                BasePoint::Shift(ShiftPoint::from_fn(m.radius(), |i| {
                    if i > -(k as i64) {
                        p.at(i)
                    } else {
                        rng.gen_range(0..a)
                    }
                }))
            }
            _ => panic!("{}", BaseError::ModelMismatch),
        }
    }

    /// Every point of `Fix(fⁿ)`, each as a period-`n` orbit.
    pub fn periodic_points(&self, n: usize, cap: u64) -> Result<Vec<PeriodicOrbit>, BaseError> {
        if n == 0 {
            return Err(BaseError::InvalidModel("period must be positive".into()));
        }
        match self {
            BaseSystem::Torus(m) => {
                let pts = m.fixed_points(n as u32, cap)?;
                Ok(pts.iter().map(|r| torus_orbit(m, *r, n)).collect())
            }
            BaseSystem::Shift(m) => {
                let words = m.words(n as u32, cap)?;
                Ok(words.iter().map(|w| shift_orbit(m, w)).collect())
            }
        }
    }

    /// One representative orbit per periodic orbit of minimal period `n`.
    pub fn primitive_orbits(&self, n: usize, cap: u64) -> Result<Vec<PeriodicOrbit>, BaseError> {
        if n == 0 {
            return Err(BaseError::InvalidModel("period must be positive".into()));
        }
        match self {
            BaseSystem::Torus(m) => {
                let pts = m.fixed_points(n as u32, cap)?;
                let mut out = Vec::new();
                for r in &pts {
                    let mut orb = vec![*r];
                    let mut q = m.step_rational(r);
                    while q != *r {
                        orb.push(q);
                        q = m.step_rational(&q);
                    }
                    if orb.len() == n && orb.iter().all(|o| o >= r) {
                        out.push(torus_orbit(m, *r, n));
                    }
                }
                Ok(out)
            }
            BaseSystem::Shift(m) => {
                let words = m.words(n as u32, cap)?;
                let mut out = Vec::new();
                for w in &words {
                    let minimal = (1..n).all(|d| n % d != 0 || (0..n).any(|i| w[i] != w[(i + d) % n]));
                    let least = (1..n).all(|s| {
                        let rot: Vec<u8> = (0..n).map(|i| w[(i + s) % n]).collect();
                        rot.as_slice() >= w.as_slice()
                    });
                    if minimal && least {
                        out.push(shift_orbit(m, w));
                    }
                }
                Ok(out)
            }
        }
    }

    /// Closing lemma: the periodic orbit shadowing `x, …, fⁿx`.
    pub fn anosov_close(&self, x: &BasePoint, n: usize) -> Result<Closing, BaseError> {
        let xn = self.iterate(x, n as i64);
        let d0 = self.dist(x, &xn);
        let delta = self.hyperbolicity().delta;
        if d0 >= delta {
            return Err(BaseError::NotRecurrent { distance: d0, delta });
        }
        self.close_unchecked(x, n)
    }

    /// Closing without the recurrence check. On the torus the lift formula
    /// `p = x − (Mⁿ − I)⁻¹ w` with `w` the wrapped displacement `fⁿx − x`
    /// gives the bound for every `x`.
    pub fn close_unchecked(&self, x: &BasePoint, n: usize) -> Result<Closing, BaseError> {
        if n == 0 {
            return Err(BaseError::InvalidModel("period must be positive".into()));
        }
        let xn = self.iterate(x, n as i64);
        let mut d0 = self.dist(x, &xn);
        let periodic = match (self, x) {
            (BaseSystem::Torus(m), BasePoint::Torus(p)) => {
                if n > 40 {
                    return Err(BaseError::InvalidModel("torus closing supports n <= 40".into()));
                }
                let w = p.displacement_to(xn.as_torus().expect("torus"));
                let b = m.power(n as u32);
                let bm = [[b[0][0] as f64 - 1.0, b[0][1] as f64], [b[1][0] as f64, b[1][1] as f64 - 1.0]];
                let det = bm[0][0] * bm[1][1] - bm[0][1] * bm[1][0];
                let v = [
                    (bm[1][1] * w[0] - bm[0][1] * w[1]) / det,
                    (-bm[1][0] * w[0] + bm[0][0] * w[1]) / det,
                ];
                let c = p.coords();
                let r = m.snap_fixed_point(n as u32, [c[0] - v[0], c[1] - v[1]]);
                torus_orbit(m, r, n)
            }
            (BaseSystem::Shift(m), BasePoint::Shift(p)) => {
                if 2 * n > m.radius() {
                    return Err(BaseError::WindowTooSmall { needed: 2 * n, radius: m.radius() });
                }
                let word: Vec<u8> = (0..n as i64).map(|i| p.at(i)).collect();
                // agreement beyond W − n is not visible through the window
                d0 = d0.max((-((m.radius() - n) as f64)).exp2());
                shift_orbit(m, &word)
            }
            _ => return Err(BaseError::ModelMismatch),
        };
        let y = self.bracket_unchecked(&periodic.point, x);
        let mut trace = Vec::with_capacity(n + 1);
        let mut xi = x.clone();
        for i in 0..=n {
            trace.push(self.dist(&xi, &periodic.orbit[i % n]));
            xi = self.step(&xi);
        }
        let c = self.closing_constant();
        let mut rate: Option<f64> = None;
        for (i, &d) in trace.iter().enumerate().take(n).skip(1) {
            if d > 0.0 {
                let m = i.min(n - i) as f64;
                let r = -(d / (c * d0)).ln() / m;
                rate = Some(rate.map_or(r, |q| q.min(r)));
            }
        }
        Ok(Closing { periodic, y, trace, d0, rate })
    }

    /// An orbit segment that is `eps`-dense, checked on a covering grid of
    /// cell size `eps/2` (torus) or by central cylinders (shift).
    pub fn transitive_segment(&self, eps: f64, max_len: usize) -> Result<Vec<BasePoint>, BaseError> {
        if !(eps > 0.0) {
            return Err(BaseError::InvalidModel("density must be positive".into()));
        }
        match self {
            BaseSystem::Torus(m) => {
                let x0 = TorusPoint::from_f64([2f64.sqrt().fract(), 3f64.sqrt().fract()]);
                let g = (2.0 / eps).ceil() as usize;
                let mut marked = vec![false; g * g];
                let mut left = g * g;
                let mut pts = Vec::new();
                let mut x = x0;
                while pts.len() < max_len {
                    let c = x.coords();
                    let cell = cell_index(c, g);
                    if !marked[cell] {
                        marked[cell] = true;
                        left -= 1;
                    }
                    pts.push(BasePoint::Torus(x));
                    if left == 0 {
                        return Ok(pts);
                    }
                    x = m.step(&x);
                }
                let mut achieved = eps;
                while achieved < 2.0 && !torus_grid_covered(&pts, achieved) {
                    achieved *= 2.0;
                }
                Err(BaseError::NotDenseEnough { achieved, requested: eps, len: pts.len() })
            }
            BaseSystem::Shift(m) => {
                let k = shift_cylinder_radius(eps);
                let w = m.radius();
                if k > w {
                    return Err(BaseError::WindowTooSmall { needed: k, radius: w });
                }
                let block = 2 * k + 1;
                let a = m.alphabet() as usize;
                let cells = (a as f64).powi(block as i32);
                if cells > 4.0e6 {
                    return Err(BaseError::CapExceeded { count: cells as u128, cap: 4_000_000 });
                }
                let mut seq: Vec<u8> = vec![0; w];
                for len in 1..=block {
                    for word in m.words(len as u32, u64::MAX).expect("bounded above") {
                        seq.extend(word);
                    }
                }
                seq.extend(std::iter::repeat(0).take(w));
                let cells = cells as usize;
                let mut marked = vec![false; cells];
                let mut left = cells;
                let mut pts = Vec::new();
                for c in w..seq.len() - w {
                    if pts.len() >= max_len {
                        break;
                    }
                    let idx = seq[c - k..=c + k].iter().fold(0usize, |acc, &s| acc * a + s as usize);
                    if !marked[idx] {
                        marked[idx] = true;
                        left -= 1;
                    }
                    pts.push(BasePoint::Shift(ShiftPoint(seq[c - w..=c + w].into())));
                    if left == 0 {
                        return Ok(pts);
                    }
                }
                let mut achieved = 1.0;
                for kk in (0..k).rev() {
                    if shift_cylinders_covered(&pts, kk, a) {
                        achieved = (-((kk + 1) as f64)).exp2();
                        break;
                    }
                }
                Err(BaseError::NotDenseEnough { achieved, requested: eps, len: pts.len() })
            }
        }
    }
}

fn torus_orbit(m: &TorusModel, r: RationalPoint, n: usize) -> PeriodicOrbit {
    let mut orbit = Vec::with_capacity(n);
    let mut q = r;
    for _ in 0..n {
        orbit.push(BasePoint::Torus(q.to_fixed()));
        q = m.step_rational(&q);
    }
    PeriodicOrbit { point: orbit[0].clone(), period: n, orbit }
}

fn shift_orbit(m: &ShiftModel, word: &[u8]) -> PeriodicOrbit {
    let n = word.len();
    let orbit: Vec<BasePoint> = (0..n)
        .map(|s| {
            let rot: Vec<u8> = (0..n).map(|i| word[(i + s) % n]).collect();
            BasePoint::Shift(m.periodize(&rot))
        })
        .collect();
    PeriodicOrbit { point: orbit[0].clone(), period: n, orbit }
}

fn cell_index(c: [f64; 2], g: usize) -> usize {
    let i = ((c[0] * g as f64) as usize).min(g - 1);
    let j = ((c[1] * g as f64) as usize).min(g - 1);
    i * g + j
}

/// Every cell of the grid with cell size `eps/2` contains a point.
pub fn torus_grid_covered(pts: &[BasePoint], eps: f64) -> bool {
    let g = (2.0 / eps).ceil() as usize;
    let mut marked = vec![false; g * g];
    for p in pts {
        if let BasePoint::Torus(t) = p {
            marked[cell_index(t.coords(), g)] = true;
        }
    }
    marked.iter().all(|&b| b)
}

/// Every central word of radius `k` occurs among `pts`.
pub fn shift_cylinders_covered(pts: &[BasePoint], k: usize, alphabet: usize) -> bool {
    let cells = alphabet.pow(2 * k as u32 + 1);
    let mut marked = vec![false; cells];
    for p in pts {
        if let BasePoint::Shift(s) = p {
            let idx = (-(k as i64)..=k as i64).fold(0usize, |acc, i| acc * alphabet + s.at(i) as usize);
            marked[idx] = true;
        }
    }
    marked.iter().all(|&b| b)
}

/// Smallest `k` such that agreement on `[-k, k]` forces distance `<= eps`.
pub fn shift_cylinder_radius(eps: f64) -> usize {
    let mut k = 0;
    while (-((k + 1) as f64)).exp2() > eps {
        k += 1;
    }
    k
}

/// Number of central symbols that must agree for distance `<= r`.
fn shift_agreement(r: f64, radius: usize) -> usize {
    (shift_cylinder_radius(r) + 1).min(radius)
}
