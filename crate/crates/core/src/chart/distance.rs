use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Channels with a norm below this are rejected.
pub const MIN_CHANNEL_NORM: f64 = 1e-30;

/// Symmetric matrix with zero diagonal, stored as the `N(N-1)/2` entries
/// above the diagonal in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    condensed: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(n: usize) -> Self {
        DistanceMatrix { n, condensed: vec![0.0; n * n.saturating_sub(1) / 2] }
    }

    pub fn from_condensed(n: usize, condensed: Vec<f64>) -> Result<Self> {
        if condensed.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::ShapeMismatch {
                expected: n * n.saturating_sub(1) / 2,
                got: condensed.len(),
            });
        }
        Ok(DistanceMatrix { n, condensed })
    }

    /// Builds from a full matrix; only the upper triangle is read.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let k = m.offset(i, j);
                m.condensed[k] = f(i, j);
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn condensed(&self) -> &[f64] {
        &self.condensed
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.condensed[self.offset(i, j)],
            std::cmp::Ordering::Greater => self.condensed[self.offset(j, i)],
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert_ne!(i, j, "diagonal is fixed at zero");
        let k = if i < j { self.offset(i, j) } else { self.offset(j, i) };
        self.condensed[k] = value;
    }

    /// Row `i` as a dense vector (with the zero diagonal).
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.get(i, j)).collect()
    }
}

fn squared_norm(h: &[Complex64]) -> f64 {
    h.iter().map(|x| x.norm_sqr()).sum()
}

/// `aᴴ b` with four independent accumulators so the loop vectorizes.
fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            re[l] += x[l].re * y[l].re + x[l].im * y[l].im;
            im[l] += x[l].re * y[l].im - x[l].im * y[l].re;
        }
    }
    let mut acc = Complex64::new((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3]));
    for (x, y) in ta.iter().zip(tb) {
        acc += x.conj() * y;
    }
    acc
}

#[inline]
fn distance_from_parts(inner: Complex64, sq1: f64, sq2: f64) -> f64 {
    let corr = inner.norm_sqr() / (sq1 * sq2);
    (2.0 - 2.0 * corr).max(0.0).sqrt()
}

fn checked_squared_norm(h: &[Complex64], index: usize) -> Result<f64> {
    let sq = squared_norm(h);
    if !(sq.sqrt() >= MIN_CHANNEL_NORM) {
        return Err(Error::ZeroChannel { index });
    }
    Ok(sq)
}

/// Phase-insensitive distance `sqrt(2 - 2 |h̄1ᴴ h̄2|²)` between unit-normalized
/// channels: the Frobenius distance between the rank-one projectors `h̄h̄ᴴ`.
///
/// Invariant to a complex scale on either argument; lies in `[0, √2]`.
pub fn pi_distance(h1: &[Complex64], h2: &[Complex64]) -> Result<f64> {
    if h1.len() != h2.len() {
        return Err(Error::ShapeMismatch { expected: h1.len(), got: h2.len() });
    }
    let sq1 = checked_squared_norm(h1, 0)?;
    let sq2 = checked_squared_norm(h2, 1)?;
    Ok(distance_from_parts(inner(h1, h2), sq1, sq2))
}

/// Squared norms of every channel, failing on the first near-zero one.
pub(crate) fn squared_norms<C: AsRef<[Complex64]> + Sync>(channels: &[C]) -> Result<Vec<f64>> {
    channels
        .iter()
        .enumerate()
        .map(|(i, h)| checked_squared_norm(h.as_ref(), i))
        .collect()
}

/// `pi_distance` against a reference with precomputed squared norms.
pub(crate) fn pi_distance_cached(h: &[Complex64], sq: f64, anchor: &[Complex64], anchor_sq: f64) -> f64 {
    distance_from_parts(inner(h, anchor), sq, anchor_sq)
}

/// All pairwise phase-insensitive distances, computed in parallel over rows.
///
/// Every entry uses the same arithmetic as [`pi_distance`], so the result
/// does not depend on scheduling.
pub fn pairwise_distances<C: AsRef<[Complex64]> + Sync>(channels: &[C]) -> Result<DistanceMatrix> {
    let n = channels.len();
    if n < 2 {
        return Err(Error::Domain(format!("need at least two channels, got {n}")));
    }
    let len = channels[0].as_ref().len();
    if let Some(bad) = channels.iter().find(|h| h.as_ref().len() != len) {
        return Err(Error::ShapeMismatch { expected: len, got: bad.as_ref().len() });
    }
    let sq = squared_norms(channels)?;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let hi = channels[i].as_ref();
            (i + 1..n)
                .map(|j| pi_distance_cached(hi, sq[i], channels[j].as_ref(), sq[j]))
                .collect()
        })
        .collect();
    DistanceMatrix::from_condensed(n, rows.concat())
}
