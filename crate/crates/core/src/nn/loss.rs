use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::chart::MIN_CHANNEL_NORM;
use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

/// Misalignment loss `1 − mean_n |ŵ_nᴴ g_n|² / ‖g_n‖²` over a batch of raw
/// network outputs (one `2A` row per sample, real parts first) and its
/// gradient with respect to those outputs.
pub fn correlation_loss<G: AsRef<[Complex64]>>(w: ArrayView2<f64>, g: &[G]) -> Result<(f64, Array2<f64>)> {
    let batch = w.nrows();
    if g.len() != batch {
        return Err(Error::ShapeMismatch { expected: batch, got: g.len() });
    }
    let two_a = w.ncols();
    let a = two_a / 2;
    let mut grad = Array2::zeros((batch, two_a));
    let mut etas = Vec::with_capacity(batch);
    for (n, target) in g.iter().enumerate() {
        let target = target.as_ref();
        if target.len() != a || !two_a.is_multiple_of(2) {
            return Err(Error::ShapeMismatch { expected: two_a, got: 2 * target.len() });
        }
        let row = w.row(n);
        let (re, im) = (row.slice(ndarray::s![..a]), row.slice(ndarray::s![a..]));
        let mut p = Complex64::new(0.0, 0.0);
        let mut norm_sq = 0.0;
        let mut g_sq = 0.0;
        for k in 0..a {
            let c = Complex64::new(re[k], im[k]);
            p += c.conj() * target[k];
            norm_sq += c.norm_sqr();
            g_sq += target[k].norm_sqr();
        }
        if !(norm_sq.sqrt() >= MIN_CHANNEL_NORM) {
            return Err(Error::ZeroPrecoder { index: n });
        }
        if !(g_sq.sqrt() >= MIN_CHANNEL_NORM) {
            return Err(Error::ZeroChannel { index: n });
        }
        let power = p.norm_sqr();
        etas.push(power / (norm_sq * g_sq));
        // ∂η/∂x = (∂P·‖c‖² − P·∂‖c‖²) / (‖c‖⁴‖g‖²), ∂loss = −∂η / B
        let scale = -1.0 / (batch as f64 * norm_sq * norm_sq * g_sq);
        let mut out = grad.row_mut(n);
        for k in 0..a {
            let q = p.conj() * target[k];
            out[k] = scale * (2.0 * q.re * norm_sq - power * 2.0 * re[k]);
            out[a + k] = scale * (2.0 * q.im * norm_sq - power * 2.0 * im[k]);
        }
    }
    let mean = pairwise_sum(&etas) / batch as f64;
    Ok((1.0 - mean, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn raw(c: &[Complex64]) -> Array1<f64> {
        c.iter().map(|x| x.re).chain(c.iter().map(|x| x.im)).collect()
    }

    fn stack(rows: &[Array1<f64>]) -> Array2<f64> {
        let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
        ndarray::stack(ndarray::Axis(0), &views).unwrap()
    }

    #[test]
    fn aligned_orthogonal_and_mixed() {
        let g = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let aligned: Vec<_> = g.iter().map(|x| x * Complex64::new(0.0, 2.0)).collect();
        let orth = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)];
        let (l, _) = correlation_loss(stack(&[raw(&aligned)]).view(), &[&g]).unwrap();
        assert!(l.abs() < 1e-15);
        let (l, _) = correlation_loss(stack(&[raw(&orth)]).view(), &[&g]).unwrap();
        assert!((l - 1.0).abs() < 1e-15);
        let (l, _) = correlation_loss(stack(&[raw(&aligned), raw(&orth)]).view(), &[&g, &g]).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_precoder_reports_index() {
        let g = vec![Complex64::new(1.0, 0.0); 2];
        let w = stack(&[Array1::from(vec![1.0, 0.0, 0.0, 0.0]), Array1::zeros(4)]);
        assert!(matches!(correlation_loss(w.view(), &[&g, &g]), Err(Error::ZeroPrecoder { index: 1 })));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let (b, a) = (3, 4);
            let w = Array2::from_shape_simple_fn((b, 2 * a), || rng.random_range(-1.0..1.0));
            let gs: Vec<Vec<Complex64>> = (0..b)
                .map(|_| (0..a).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
                .collect();
            let (l, grad) = correlation_loss(w.view(), &gs).unwrap();
            assert!((0.0..=1.0).contains(&l));
            let h = 1e-6;
            for idx in 0..w.len() {
                let (i, j) = (idx / (2 * a), idx % (2 * a));
                let mut wp = w.clone();
                wp[[i, j]] += h;
                let mut wm = w.clone();
                wm[[i, j]] -= h;
                let fd = (correlation_loss(wp.view(), &gs).unwrap().0 - correlation_loss(wm.view(), &gs).unwrap().0) / (2.0 * h);
                let an = grad[[i, j]];
                assert!((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-6), "{fd} vs {an}");
            }
        }
    }
}
