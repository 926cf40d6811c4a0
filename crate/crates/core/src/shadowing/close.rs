use serde::Serialize;

use super::fake::{decay_rate, fake_stable_point, shoot, skew_dist, FakeSetParams, Mode};
use super::ShadowError;
use crate::cocycle::{Cocycle, SkewPoint};
use crate::scalar::Real;

#[derive(Clone, Debug, Serialize)]
pub struct ShadowingResult<T> {
    pub n: usize,
    pub base_period: usize,
    #[serde(skip)]
    pub closed_orbit: Vec<SkewPoint<T>>,
    /// `d(z″_i, z_i)` for `i = 0..=n`.
    pub deviations: Vec<f64>,
    /// `d(z₀, z_n)`.
    pub d0: f64,
    /// Decay of the deviations against `min(i, n − i)`.
    pub fitted_rate: Option<f64>,
    pub rate_forward: Option<f64>,
    pub rate_backward: Option<f64>,
    /// Smallest `K` with `deviations[i] ≤ K d₀ e^{−κ min(i, n−i)}` (neutral
    /// mode: `deviations[i] ≤ K d₀`).
    pub bound_constant: f64,
    /// `max(ℓ, 2CC̃)`.
    pub prescribed_constant: f64,
    /// Measured `K` above twice the prescribed one.
    pub constant_flag: bool,
    pub kappa: f64,
    pub mode: Mode,
}

/// Closed orbit `z″` of the skew product that shadows `z₀, …, Fⁿz₀`.
pub fn fiber_close<T: Real>(c: &Cocycle<T>, z0: &SkewPoint<T>, n: usize, params: &FakeSetParams) -> Result<ShadowingResult<T>, ShadowError> {
    let base = c.base();
    let mut zs = Vec::with_capacity(n + 1);
    zs.push(z0.clone());
    for i in 0..n {
        zs.push(c.skew_step(&zs[i], 1)?);
    }
    let d0 = skew_dist(base, &zs[0], &zs[n]);
    let eps0 = params.epsilon0();
    if d0 >= eps0 {
        return Err(ShadowError::Precondition(format!("d(z₀, zₙ) = {d0:e} is not below ε₀ = {eps0:e}")));
    }

    // (a) base closing
    let closing = base.anosov_close(&z0.base, n)?;
    let period = closing.periodic.period;
    let ps: Vec<_> = (0..=n).map(|i| closing.periodic.orbit[i % period].clone()).collect();

    // (b) forward tracking from W^s(x₀) ∩ W^u(p); the bracket is taken at
    // the middle of the segment and pulled back, so rounding off the leaves
    // grows for n/2 steps at most in either direction
    let m = n / 2;
    let x_mid = base.bracket_unchecked(&ps[m], &zs[m].base);
    let target = base.iterate(&x_mid, -(m as i64));
    let fake = fake_stable_point(c, z0, &target, params, n)?;

    // (c) backward tracking over the periodic orbit; the anchor sits at the
    // end of the segment the fiber dynamics contracts towards
    let weights: Vec<f64> = (0..=n).map(|i| ((n - i) as f64 * params.kappa).exp()).collect();
    let never = |_: &[f64]| false;
    let h0 = params.r0;
    let fwd = shoot(c, &ps, &fake.orbit, &weights, true, fake.orbit[0].fiber, h0, &never)?;
    let bwd = shoot(c, &ps, &fake.orbit, &weights, false, fake.orbit[n].fiber, h0, &never);
    let shot = match bwd {
        Ok(b) if b.objective < fwd.objective => b,
        _ => fwd,
    };
    let closed_orbit = shot.orbit;

    let deviations: Vec<f64> = closed_orbit.iter().zip(&zs).map(|(a, b)| skew_dist(base, a, b)).collect();
    let m: Vec<f64> = (0..=n).map(|i| i.min(n - i) as f64).collect();
    let kappa = match params.mode {
        Mode::Hyperbolic => params.kappa,
        Mode::Neutral => 0.0,
    };
    let bound_constant = if d0 > 0.0 {
        deviations.iter().zip(&m).map(|(d, mi)| d * (kappa * mi).exp() / d0).fold(0.0, f64::max)
    } else if deviations.iter().all(|d| *d == 0.0) {
        0.0
    } else {
        f64::INFINITY
    };
    let prescribed = params.closing_constant();
    let h = n / 2;
    let fwd_x: Vec<f64> = (0..=h).map(|i| i as f64).collect();
    let bwd_x: Vec<f64> = (h..=n).map(|i| (n - i) as f64).collect();
    Ok(ShadowingResult {
        n,
        base_period: period,
        fitted_rate: decay_rate(&m, &deviations),
        rate_forward: decay_rate(&fwd_x, &deviations[..=h]),
        rate_backward: decay_rate(&bwd_x, &deviations[h..]),
        closed_orbit,
        deviations,
        d0,
        bound_constant,
        prescribed_constant: prescribed,
        constant_flag: bound_constant > 2.0 * prescribed,
        kappa: params.kappa,
        mode: params.mode,
    })
}
