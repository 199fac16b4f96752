//! Leading eigenpairs of a dense symmetric matrix by subspace iteration.
//!
//! Each sweep multiplies the active block by the shifted matrix `A + σI`,
//! projects onto the block (Rayleigh–Ritz) and re-orthonormalizes. Leading
//! Ritz pairs whose residual falls below the tolerance are locked and drop
//! out of later multiplications. The shift `σ` offsets the most negative
//! eigenvalue so that the algebraically largest eigenvalues also dominate in
//! magnitude.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSettings {
    /// Guard vectors iterated beyond the requested count.
    pub extra_vectors: usize,
    /// Converged when `‖A x − θ x‖ ≤ tol · |θ_max|`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenSettings {
    fn default() -> Self {
        EigenSettings { extra_vectors: 2, tol: 1e-8, max_iter: 500, seed: 0x0015_03a9 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Algebraically descending.
    pub values: Vec<f64>,
    /// One eigenvector per column.
    pub vectors: Array2<f64>,
    pub iterations: usize,
    /// Largest relative residual among the returned pairs.
    pub residual: f64,
}

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix, sorted by
/// descending eigenvalue.
pub fn jacobi_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        let scale: f64 = m.iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[[i, i]]).collect();
    let vectors = v.select(Axis(1), &order);
    (values, vectors)
}

/// Orthonormalizes columns `from..` of `q` against all earlier columns with
/// two passes of modified Gram–Schmidt. Columns that collapse are replaced
/// by fresh random directions.
fn orthonormalize(q: &mut Array2<f64>, from: usize, rng: &mut ChaCha8Rng) {
    let n = q.nrows();
    let mut j = from;
    let mut retries = 0;
    while j < q.ncols() {
        let before = q.column(j).dot(&q.column(j)).sqrt();
        for _pass in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let ci = q.column(i).to_owned();
                q.column_mut(j).scaled_add(-proj, &ci);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if norm <= 1e-10 * before.max(f64::MIN_POSITIVE) || norm == 0.0 {
            assert!(retries < 8 * n + 8, "cannot extend orthonormal basis");
            retries += 1;
            let fresh: Array1<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            q.column_mut(j).assign(&fresh);
            continue;
        }
        q.column_mut(j).mapv_inplace(|x| x / norm);
        j += 1;
    }
}

fn column_residuals(bx: ArrayView2<f64>, x: ArrayView2<f64>, theta: &[f64]) -> Vec<f64> {
    (0..theta.len())
        .map(|i| {
            let r = &bx.column(i) - &(&x.column(i) * theta[i]);
            r.dot(&r).sqrt()
        })
        .collect()
}

/// Power iteration on `A − gI`, `g` the Gershgorin bound, estimating the most
/// negative eigenvalue of `A`. Returns the shift `max(0, −λ_min)`.
fn negative_shift(a: &Array2<f64>, seed: u64) -> f64 {
    let n = a.nrows();
    let g = a.rows().into_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a1f_7e11);
    let mut x: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    x /= x.dot(&x).sqrt();
    let mut theta = 0.0;
    for _ in 0..SHIFT_ITERATIONS {
        let y = a.dot(&x) - &x * g;
        theta = x.dot(&y);
        let norm = y.dot(&y).sqrt();
        if norm == 0.0 {
            break;
        }
        x = y / norm;
    }
    (-(theta + g)).max(0.0)
}

const SHIFT_ITERATIONS: usize = 100;

/// The `nev` algebraically largest eigenpairs of the symmetric matrix `a`.
///
/// The start block is drawn from a generator seeded with `settings.seed`,
/// so repeated calls give identical results.
pub fn top_eigenpairs(a: &Array2<f64>, nev: usize, settings: &EigenSettings) -> Result<EigenPairs> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch { expected: n, got: a.ncols() });
    }
    if nev == 0 || nev > n {
        return Err(Error::Domain(format!("cannot extract {nev} eigenpairs of a {n}×{n} matrix")));
    }
    let p = (nev + settings.extra_vectors).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut q = Array2::<f64>::from_shape_simple_fn((n, p), || StandardNormal.sample(&mut rng));
    orthonormalize(&mut q, 0, &mut rng);

    let amax = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if amax == 0.0 {
        return Ok(EigenPairs {
            values: vec![0.0; nev],
            vectors: q.slice(s![.., ..nev]).to_owned(),
            iterations: 0,
            residual: 0.0,
        });
    }

    let shift = negative_shift(a, settings.seed);
    let mut locked_values: Vec<f64> = Vec::with_capacity(nev);
    let mut scale = 0.0f64;
    let mut worst = f64::INFINITY;
    for iteration in 1..=settings.max_iter {
        let locked = locked_values.len();
        let active = q.slice(s![.., locked..]).to_owned();
        let y = a.dot(&active);
        let mut h = active.t().dot(&y);
        h = (&h + &h.t()) * 0.5;
        let (theta, rot) = jacobi_eigen(&h);
        let x = active.dot(&rot);
        let bx = y.dot(&rot);
        scale = theta
            .iter()
            .chain(&locked_values)
            .fold(scale, |m, t| m.max(t.abs()))
            .max(f64::MIN_POSITIVE);
        let residuals = column_residuals(bx.view(), x.view(), &theta);
        q.slice_mut(s![.., locked..]).assign(&x);

        let mut newly = 0;
        while locked + newly < nev && residuals[newly] <= settings.tol * scale {
            locked_values.push(theta[newly]);
            newly += 1;
        }
        if locked_values.len() == nev {
            let max_res = residuals[..newly].iter().fold(0.0f64, |m, r| m.max(*r)) / scale;
            return Ok(EigenPairs {
                values: locked_values,
                vectors: q.slice(s![.., ..nev]).to_owned(),
                iterations: iteration,
                residual: max_res,
            });
        }
        worst = residuals[newly..nev - locked].iter().fold(0.0f64, |m, r| m.max(*r)) / scale;
        // power step on the still-active Ritz vectors
        let start = locked + newly;
        let shifted = &bx.slice(s![.., newly..]) + &(&x.slice(s![.., newly..]) * shift);
        q.slice_mut(s![.., start..]).assign(&shifted);
        orthonormalize(&mut q, start, &mut rng);
    }
    Err(Error::ConvergenceFailure { iterations: settings.max_iter, residual: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        &m + &m.t()
    }

    #[test]
    fn jacobi_matches_nalgebra() {
        let a = random_symmetric(7, 1);
        let (vals, vecs) = jacobi_eigen(&a);
        let na = nalgebra::DMatrix::from_fn(7, 7, |i, j| a[[i, j]]);
        let mut reference: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in vals.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-10);
        }
        // A V = V Λ
        let av = a.dot(&vecs);
        for (j, &l) in vals.iter().enumerate() {
            let r = &av.column(j) - &(&vecs.column(j) * l);
            assert!(r.dot(&r).sqrt() < 1e-10);
        }
    }

    #[test]
    fn subspace_iteration_matches_dense_reference() {
        // positive semidefinite with a clear gap after the fourth eigenvalue
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let basis = {
            let mut q = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
            orthonormalize(&mut q, 0, &mut rng);
            q
        };
        let spectrum: Vec<f64> = (0..n).map(|i| if i < 4 { 10.0 - i as f64 } else { 1.0 / (i as f64) }).collect();
        let d = Array2::from_diag(&Array1::from(spectrum.clone()));
        let a = basis.dot(&d).dot(&basis.t());
        let pairs = top_eigenpairs(&a, 4, &EigenSettings::default()).unwrap();
        for i in 0..4 {
            assert!((pairs.values[i] - spectrum[i]).abs() < 1e-8, "{:?}", pairs.values);
            let overlap = pairs.vectors.column(i).dot(&basis.column(i)).abs();
            assert!((overlap - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn prefers_algebraic_order_with_negative_eigenvalues() {
        let d = Array2::from_diag(&Array1::from(vec![5.0, -4.0, 3.0, 0.5, 0.1, -0.2]));
        let pairs = top_eigenpairs(&d, 2, &EigenSettings::default()).unwrap();
        assert!((pairs.values[0] - 5.0).abs() < 1e-9);
        assert!((pairs.values[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn negative_eigenvalues_larger_in_magnitude_are_skipped() {
        // in magnitude the four negative values outrank the third wanted one
        let spectrum = vec![10.0, 5.0, -9.0, -8.0, -7.0, -6.0, 4.0, 0.1, 0.0, -0.5];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut basis = Array2::from_shape_fn((10, 10), |_| rng.random_range(-1.0..1.0));
        orthonormalize(&mut basis, 0, &mut rng);
        let a = basis.dot(&Array2::from_diag(&Array1::from(spectrum))).dot(&basis.t());
        let pairs = top_eigenpairs(&a, 3, &EigenSettings::default()).unwrap();
        for (got, want) in pairs.values.iter().zip([10.0, 5.0, 4.0]) {
            assert!((got - want).abs() < 1e-8, "{:?}", pairs.values);
        }
    }

    #[test]
    fn deterministic() {
        let a = random_symmetric(30, 2);
        let a = a.dot(&a);
        let s = EigenSettings::default();
        let x = top_eigenpairs(&a, 3, &s).unwrap();
        let y = top_eigenpairs(&a, 3, &s).unwrap();
        assert_eq!(x.values, y.values);
        assert_eq!(x.vectors, y.vectors);
    }

    #[test]
    fn reports_non_convergence() {
        let a = random_symmetric(40, 3);
        let settings = EigenSettings { max_iter: 2, ..EigenSettings::default() };
        assert!(matches!(top_eigenpairs(&a, 3, &settings), Err(Error::ConvergenceFailure { iterations: 2, .. })));
    }

    #[test]
    fn zero_matrix() {
        let a = Array2::<f64>::zeros((5, 5));
        let pairs = top_eigenpairs(&a, 2, &EigenSettings::default()).unwrap();
        assert_eq!(pairs.values, vec![0.0, 0.0]);
    }
}
