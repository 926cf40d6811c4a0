//! Full two-sided shift on `m` symbols, stored as finite windows.
//!
//! A point is the window `x_{-W}..x_{W}`; symbols outside are the cyclic
//! continuation of the window. Under this convention `step` is a rotation,
//! so `inverse_step ∘ step` is the identity on windows.

use std::sync::Arc;

use super::{BaseError, HyperbolicityData};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShiftPoint(pub Arc<[u8]>);

impl ShiftPoint {
    pub fn radius(&self) -> usize {
        self.0.len() / 2
    }

    /// Symbol at index `i`, using the cyclic continuation outside the window.
    pub fn at(&self, i: i64) -> u8 {
        let len = self.0.len() as i64;
        let w = self.radius() as i64;
        self.0[(i + w).rem_euclid(len) as usize]
    }

    pub fn from_fn(radius: usize, mut f: impl FnMut(i64) -> u8) -> Self {
        let w = radius as i64;
        ShiftPoint((-w..=w).map(&mut f).collect())
    }
}

#[derive(Clone, Debug)]
pub struct ShiftModel {
    alphabet: u8,
    radius: usize,
    hyp: HyperbolicityData,
}

impl ShiftModel {
    pub fn new(alphabet: u8, radius: usize) -> Result<Self, BaseError> {
        if alphabet < 2 {
            return Err(BaseError::InvalidModel(format!("alphabet must be at least 2, got {alphabet}")));
        }
        if radius < 8 {
            return Err(BaseError::InvalidModel(format!("window radius must be at least 8, got {radius}")));
        }
        let hyp = HyperbolicityData {
            epsilon: 0.5,
            delta: 1.0,
            k0: 1.0,
            tau: std::f64::consts::LN_2,
            nu_s_max: 0.5,
            nu_u_max: 0.5,
        };
        Ok(Self { alphabet, radius, hyp })
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn hyperbolicity(&self) -> &HyperbolicityData {
        &self.hyp
    }

    pub fn closing_constant(&self) -> f64 {
        1.0
    }

    pub fn is_valid(&self, x: &ShiftPoint) -> bool {
        x.0.len() == 2 * self.radius + 1 && x.0.iter().all(|&s| s < self.alphabet)
    }

    pub fn step(&self, x: &ShiftPoint) -> ShiftPoint {
        let mut v = x.0.to_vec();
        v.rotate_left(1);
        ShiftPoint(v.into())
    }

    pub fn inverse_step(&self, x: &ShiftPoint) -> ShiftPoint {
        let mut v = x.0.to_vec();
        v.rotate_right(1);
        ShiftPoint(v.into())
    }

    /// `2^{-k}` with `k` the smallest `|i|` where the windows differ.
    pub fn dist(&self, x: &ShiftPoint, y: &ShiftPoint) -> f64 {
        let w = self.radius as i64;
        for k in 0..=w {
            if x.at(k) != y.at(k) || x.at(-k) != y.at(-k) {
                return (-(k as f64)).exp2();
            }
        }
        0.0
    }

    /// Past (`i < 0`) of `y` spliced with the future (`i >= 0`) of `y2`.
    pub fn bracket_unchecked(&self, y: &ShiftPoint, y2: &ShiftPoint) -> ShiftPoint {
        ShiftPoint::from_fn(self.radius, |i| if i < 0 { y.at(i) } else { y2.at(i) })
    }

    pub fn bracket(&self, y: &ShiftPoint, y2: &ShiftPoint) -> Result<ShiftPoint, BaseError> {
        let d = self.dist(y, y2);
        if d >= self.hyp.delta {
            return Err(BaseError::BracketOutOfRange { distance: d, delta: self.hyp.delta });
        }
        Ok(self.bracket_unchecked(y, y2))
    }

    /// Periodization of `word` placed so that `x_0 = word[0]`.
    pub fn periodize(&self, word: &[u8]) -> ShiftPoint {
        let n = word.len() as i64;
        ShiftPoint::from_fn(self.radius, |i| word[i.rem_euclid(n) as usize])
    }

    pub fn fixed_point_count(&self, n: u32) -> u128 {
        (self.alphabet as u128).saturating_pow(n)
    }

    /// All length-`n` words in lexicographic order.
    pub fn words(&self, n: u32, cap: u64) -> Result<Vec<Vec<u8>>, BaseError> {
        let count = self.fixed_point_count(n);
        if count > cap as u128 {
            return Err(BaseError::CapExceeded { count, cap });
        }
        let m = self.alphabet as u64;
        Ok((0..count as u64)
            .map(|mut c| {
                let mut w = vec![0u8; n as usize];
                for s in w.iter_mut().rev() {
                    *s = (c % m) as u8;
                    c /= m;
                }
                w
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_rotates_and_inverts() {
        let m = ShiftModel::new(2, 8).unwrap();
        let x = ShiftPoint::from_fn(8, |i| (i == 0) as u8);
        let y = m.step(&x);
        assert_eq!(y.at(-1), 1);
        assert_eq!(y.at(0), 0);
        assert_eq!(m.inverse_step(&y), x);
    }

    #[test]
    fn metric_values() {
        let m = ShiftModel::new(2, 8).unwrap();
        let x = ShiftPoint::from_fn(8, |_| 0);
        let y = ShiftPoint::from_fn(8, |i| (i == 3) as u8);
        let z = ShiftPoint::from_fn(8, |i| (i == -2) as u8);
        assert_eq!(m.dist(&x, &x), 0.0);
        assert_eq!(m.dist(&x, &y), 0.125);
        assert_eq!(m.dist(&x, &z), 0.25);
    }

    #[test]
    fn splice() {
        // y = ...aba . y2 = . bab...
        let m = ShiftModel::new(2, 8).unwrap();
        let y = ShiftPoint::from_fn(8, |i| (i.rem_euclid(2) == 0) as u8);
        let y2 = ShiftPoint::from_fn(8, |i| (i.rem_euclid(2) == 0) as u8 ^ (i > 0) as u8);
        let z = m.bracket(&y, &y2).unwrap();
        assert_eq!([z.at(-3), z.at(-2), z.at(-1)], [0, 1, 0]);
        assert_eq!([z.at(0), z.at(1), z.at(2)], [1, 1, 0]);
        // symbols at index 0 differ: outside the bracket radius
        let y3 = ShiftPoint::from_fn(8, |i| y.at(i) ^ (i >= 0) as u8);
        assert!(m.bracket(&y, &y3).is_err());
        assert_eq!(m.bracket_unchecked(&y, &y3).at(0), 0);
        assert_eq!(m.bracket(&y, &y).unwrap(), y);
    }

    #[test]
    fn word_count() {
        let m = ShiftModel::new(2, 8).unwrap();
        assert_eq!(m.words(3, 100).unwrap().len(), 8);
        assert!(m.words(10, 100).is_err());
    }
}
