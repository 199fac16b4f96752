//! Precoders, the normalized correlation metric and evaluation reports.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::ArrayView2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::MIN_CHANNEL_NORM;
use crate::error::{Error, Result};
use crate::io;
use crate::nn::LbbModel;
use crate::stats::{median, pairwise_sum, percentile};

/// Unit-norm complex weight vector for the central subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub weights: Vec<Complex64>,
}

impl AsRef<[Complex64]> for Precoder {
    fn as_ref(&self) -> &[Complex64] {
        &self.weights
    }
}

/// Maps `2A` real outputs (real parts first) to a unit-norm precoder.
pub fn complexify_normalize(raw: &[f64]) -> Result<Precoder> {
    let a = raw.len() / 2;
    if !raw.len().is_multiple_of(2) {
        return Err(Error::ShapeMismatch { expected: 2 * a + 2, got: raw.len() });
    }
    let c: Vec<Complex64> = (0..a).map(|k| Complex64::new(raw[k], raw[a + k])).collect();
    let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if !(norm >= MIN_CHANNEL_NORM) {
        return Err(Error::ZeroPrecoder { index: 0 });
    }
    Ok(Precoder { weights: c.iter().map(|x| x / norm).collect() })
}

/// Normalized correlation `|wᴴg|² / ‖g‖²`.
pub fn eta(w: &Precoder, g: &[Complex64]) -> Result<f64> {
    if w.weights.len() != g.len() {
        return Err(Error::ShapeMismatch { expected: w.weights.len(), got: g.len() });
    }
    let g_sq: f64 = g.iter().map(|x| x.norm_sqr()).sum();
    if !(g_sq.sqrt() >= MIN_CHANNEL_NORM) {
        return Err(Error::ZeroChannel { index: 0 });
    }
    let p: Complex64 = w.weights.iter().zip(g).map(|(w, g)| w.conj() * g).sum();
    Ok((p.norm_sqr() / g_sq).min(1.0))
}

/// `log2(1 + η·SNR_opt)` in bits/s/Hz.
pub fn spectral_efficiency(eta: f64, snr_opt: f64) -> Result<f64> {
    if !(snr_opt >= 0.0) {
        return Err(Error::Domain(format!("SNR must be nonnegative, got {snr_opt}")));
    }
    Ok((1.0 + eta * snr_opt).log2())
}

/// Floats each user must share for beamforming: chart coordinates versus
/// the raw channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overhead {
    pub chart_floats_per_user: usize,
    pub raw_floats_per_user: usize,
    pub ratio: f64,
}

impl Overhead {
    pub fn new(dim: usize, num_antennas: usize, num_subcarriers: usize) -> Self {
        let raw = 2 * num_antennas * num_subcarriers;
        Overhead { chart_floats_per_user: dim, raw_floats_per_user: raw, ratio: dim as f64 / raw as f64 }
    }
}

/// Where a test user stands and whether it sees each base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestUser {
    pub index: usize,
    pub location: [f64; 3],
    pub los: [bool; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub excluded: usize,
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
    pub snr_opt: f64,
    pub mean_spectral_efficiency: f64,
    pub overhead: Overhead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialRecord {
    pub user: TestUser,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub variant: String,
    /// `(η, empirical probability)`, sorted by η.
    pub cdf: Vec<(f64, f64)>,
    pub spatial: Vec<SpatialRecord>,
    pub summary: Summary,
}

impl EvalReport {
    pub fn etas(&self) -> Vec<f64> {
        self.spatial.iter().map(|r| r.eta).collect()
    }

    pub fn cdf_csv(&self) -> String {
        let mut s = String::from("eta,cdf\n");
        for (e, p) in &self.cdf {
            writeln!(s, "{e},{p}").expect("string write");
        }
        s
    }

    pub fn spatial_csv(&self) -> String {
        let mut s = String::from("x,y,eta,los_bs1,los_bs2\n");
        for r in &self.spatial {
            let [x, y, _] = r.user.location;
            let [l1, l2] = r.user.los.map(u8::from);
            writeln!(s, "{x},{y},{},{l1},{l2}", r.eta).expect("string write");
        }
        s
    }

    /// Writes `cdf_<variant>.csv`, `spatial_<variant>.csv` and `summary.json`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        io::ensure_dir(dir)?;
        io::write_text(&dir.join(format!("cdf_{}.csv", self.variant)), &self.cdf_csv())?;
        io::write_text(&dir.join(format!("spatial_{}.csv", self.variant)), &self.spatial_csv())?;
        io::write_json(&dir.join("summary.json"), &SummaryFile { variant: self.variant.clone(), summary: self.summary.clone() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub variant: String,
    #[serde(flatten)]
    pub summary: Summary,
}

/// Builds a report from one precoder per user. Users whose target channel is
/// zero are left out and counted.
pub fn evaluate_precoders<G: AsRef<[Complex64]> + Sync>(
    variant: &str,
    precoders: &[Precoder],
    targets: &[G],
    users: &[TestUser],
    overhead: Overhead,
    snr_opt: f64,
) -> Result<EvalReport> {
    if precoders.len() != targets.len() || users.len() != targets.len() {
        return Err(Error::ShapeMismatch { expected: targets.len(), got: precoders.len().min(users.len()) });
    }
    let outcomes: Vec<Option<f64>> = precoders
        .par_iter()
        .zip(targets.par_iter())
        .map(|(w, g)| match eta(w, g.as_ref()) {
            Ok(e) => Ok(Some(e)),
            Err(Error::ZeroChannel { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let spatial: Vec<SpatialRecord> = outcomes
        .iter()
        .zip(users)
        .filter_map(|(e, u)| e.map(|eta| SpatialRecord { user: *u, eta }))
        .collect();
    let excluded = users.len() - spatial.len();
    if spatial.is_empty() {
        return Err(Error::Domain(format!("variant {variant}: no users left to evaluate")));
    }
    let mut sorted: Vec<f64> = spatial.iter().map(|r| r.eta).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let cdf = sorted.iter().enumerate().map(|(i, &e)| (e, (i + 1) as f64 / n as f64)).collect();
    let mean = pairwise_sum(&spatial.iter().map(|r| r.eta).collect::<Vec<_>>()) / n as f64;
    let se: Vec<f64> = spatial.iter().map(|r| spectral_efficiency(r.eta, snr_opt)).collect::<Result<_>>()?;
    let summary = Summary {
        count: n,
        excluded,
        mean,
        median: median(&sorted),
        p10: percentile(&sorted, 10.0),
        snr_opt,
        mean_spectral_efficiency: pairwise_sum(&se) / n as f64,
        overhead,
    };
    Ok(EvalReport { variant: variant.to_string(), cdf, spatial, summary })
}

/// Runs the network on every test input and evaluates its precoders.
pub fn evaluate<G: AsRef<[Complex64]> + Sync>(
    variant: &str,
    model: &LbbModel,
    inputs: ArrayView2<f64>,
    targets: &[G],
    users: &[TestUser],
    overhead: Overhead,
    snr_opt: f64,
) -> Result<EvalReport> {
    let raw = model.forward(inputs)?;
    let precoders: Vec<Precoder> = raw
        .outer_iter()
        .enumerate()
        .map(|(i, row)| {
            complexify_normalize(row.as_slice().expect("standard layout")).map_err(|e| match e {
                Error::ZeroPrecoder { .. } => Error::ZeroPrecoder { index: users.get(i).map_or(i, |u| u.index) },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    evaluate_precoders(variant, &precoders, targets, users, overhead, snr_opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, a: usize) -> Vec<Complex64> {
        (0..a).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn users(n: usize) -> Vec<TestUser> {
        (0..n).map(|i| TestUser { index: i, location: [i as f64, 0.0, 1.5], los: [true, i % 2 == 0] }).collect()
    }

    #[test]
    fn complexify_examples() {
        let p = complexify_normalize(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.weights, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let raw = [0.3, -1.2, 0.5, 2.0];
        let scaled: Vec<f64> = raw.iter().map(|x| 10.0 * x).collect();
        let a = complexify_normalize(&raw).unwrap();
        let b = complexify_normalize(&scaled).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).norm() < 1e-15);
        }
        let norm: f64 = a.weights.iter().map(|x| x.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(matches!(complexify_normalize(&[0.0; 4]), Err(Error::ZeroPrecoder { .. })));
    }

    #[test]
    fn eta_examples() {
        let w = Precoder { weights: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)] };
        let g = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!((eta(&w, &g).unwrap() - 0.5).abs() < 1e-15);
        let z = [Complex64::new(0.0, 0.0); 2];
        assert!(matches!(eta(&w, &z), Err(Error::ZeroChannel { .. })));
    }

    #[test]
    fn eta_is_phase_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let raw: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w = complexify_normalize(&raw).unwrap();
            let g = random_vec(&mut rng, 8);
            let e = eta(&w, &g).unwrap();
            let (pw, pg) = (Complex64::from_polar(1.0, rng.random_range(0.0..6.3)), Complex64::from_polar(1.0, rng.random_range(0.0..6.3)));
            let w2 = Precoder { weights: w.weights.iter().map(|x| x * pw).collect() };
            let g2: Vec<_> = g.iter().map(|x| x * pg).collect();
            assert!((eta(&w2, &g2).unwrap() - e).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&e));
        }
    }

    #[test]
    fn eta_one_iff_proportional() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = random_vec(&mut rng, 6);
            let c = Complex64::from_polar(rng.random_range(0.1..5.0), rng.random_range(0.0..6.3));
            let raw: Vec<f64> = g.iter().map(|x| (c * x).re).chain(g.iter().map(|x| (c * x).im)).collect();
            assert!((eta(&complexify_normalize(&raw).unwrap(), &g).unwrap() - 1.0).abs() < 1e-9);
            // a perturbed copy is no longer aligned
            let mut off = raw.clone();
            off[0] += 0.5;
            assert!(eta(&complexify_normalize(&off).unwrap(), &g).unwrap() < 1.0 - 1e-9);
        }
    }

    #[test]
    fn spectral_efficiency_examples() {
        assert_eq!(spectral_efficiency(0.0, 10.0).unwrap(), 0.0);
        assert_eq!(spectral_efficiency(1.0, 1.0).unwrap(), 1.0);
        assert!((spectral_efficiency(0.5, 3.0).unwrap() - 1.321928094887362).abs() < 1e-12);
        assert!(spectral_efficiency(0.5, -1.0).is_err());
    }

    #[test]
    fn overhead_ratio() {
        let o = Overhead::new(5, 64, 16);
        assert_eq!(o.raw_floats_per_user, 2048);
        assert_eq!(o.ratio, 5.0 / 2048.0);
    }

    #[test]
    fn oracle_precoders_give_point_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gs: Vec<Vec<Complex64>> = (0..20).map(|_| random_vec(&mut rng, 4)).collect();
        let ws: Vec<Precoder> = gs
            .iter()
            .map(|g| {
                let raw: Vec<f64> = g.iter().map(|x| x.re).chain(g.iter().map(|x| x.im)).collect();
                complexify_normalize(&raw).unwrap()
            })
            .collect();
        let r = evaluate_precoders("oracle", &ws, &gs, &users(20), Overhead::new(5, 4, 1), 10.0).unwrap();
        assert!(r.cdf.iter().all(|(e, _)| (e - 1.0).abs() < 1e-12));
        assert_eq!(r.cdf.last().unwrap().1, 1.0);
        assert!((r.summary.median - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_targets_are_excluded_and_counted() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut gs: Vec<Vec<Complex64>> = (0..10).map(|_| random_vec(&mut rng, 3)).collect();
        gs[4] = vec![Complex64::new(0.0, 0.0); 3];
        let ws: Vec<Precoder> = (0..10).map(|_| complexify_normalize(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap()).collect();
        let r = evaluate_precoders("v", &ws, &gs, &users(10), Overhead::new(2, 3, 1), 1.0).unwrap();
        assert_eq!(r.summary.count, 9);
        assert_eq!(r.summary.excluded, 1);
        assert_eq!(r.cdf.len(), 9);
        assert!(r.cdf.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        assert!(r.spatial.iter().all(|s| s.user.index != 4));
    }

    #[test]
    fn csv_layout() {
        let ws = vec![complexify_normalize(&[1.0, 0.0]).unwrap(); 2];
        let gs = vec![vec![Complex64::new(2.0, 0.0)]; 2];
        let r = evaluate_precoders("V9", &ws, &gs, &users(2), Overhead::new(1, 1, 1), 1.0).unwrap();
        assert_eq!(r.cdf_csv(), "eta,cdf\n1,0.5\n1,1\n");
        assert_eq!(r.spatial_csv(), "x,y,eta,los_bs1,los_bs2\n0,0,1,1,1\n1,0,1,1,0\n");
        let dir = tempfile::tempdir().unwrap();
        r.export(dir.path()).unwrap();
        assert!(dir.path().join("cdf_V9.csv").exists());
        let s: SummaryFile = io::read_json(&dir.path().join("summary.json")).unwrap();
        assert_eq!(s.summary, r.summary);
    }
}
