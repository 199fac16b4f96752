use log::warn;
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::eigen::{top_eigenpairs, EigenSettings};
use super::DistanceMatrix;
use crate::error::{Error, Result};

/// Eigensolver diagnostics recorded alongside a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub eigenvalues: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Eigenvalues that came out negative and were set to zero.
    pub clamped: usize,
}

#[derive(Debug, Clone)]
pub struct Embedding {
    /// `dim × N`, one point per column.
    pub coords: Array2<f64>,
    pub stats: SolverStats,
}

/// Double-centered Gram matrix `-½ J (D∘D) J`.
pub fn double_center(dm: &DistanceMatrix) -> Array2<f64> {
    let n = dm.len();
    let mut b = Array2::from_shape_fn((n, n), |(i, j)| {
        let d = dm.get(i, j);
        d * d
    });
    let row_means: Array1<f64> = b.mean_axis(Axis(1)).expect("non-empty");
    let grand = row_means.mean().expect("non-empty");
    for ((i, j), v) in b.indexed_iter_mut() {
        *v = -0.5 * (*v - row_means[i] - row_means[j] + grand);
    }
    b
}

/// Classical multidimensional scaling into `dim` coordinates.
///
/// Row `i` of the output is `√λ_i v_iᵀ` for the `i`-th largest eigenpair of
/// the double-centered squared distances. Negative eigenvalues are clamped
/// to zero. Each eigenvector's sign is fixed so that its largest-magnitude
/// entry is positive, and rows are re-centered to remove solver round-off.
pub fn classical_mds(dm: &DistanceMatrix, dim: usize, settings: &EigenSettings) -> Result<Embedding> {
    let n = dm.len();
    if dim == 0 || dim > n {
        return Err(Error::Domain(format!("embedding dimension {dim} invalid for {n} points")));
    }
    let b = double_center(dm);
    let pairs = top_eigenpairs(&b, dim, settings)?;
    let mut coords = Array2::<f64>::zeros((dim, n));
    let mut clamped = 0;
    for (r, &lambda) in pairs.values.iter().enumerate() {
        if lambda < 0.0 {
            clamped += 1;
            warn!("classical MDS: eigenvalue {r} is negative ({lambda:e}); clamped to zero");
            continue;
        }
        let v = pairs.vectors.column(r);
        let pivot = v.iter().fold(0.0f64, |m, &x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let scale = sign * lambda.sqrt();
        let mut row = coords.row_mut(r);
        row.assign(&(&v * scale));
        let mean = row.mean().unwrap_or(0.0);
        row.mapv_inplace(|x| x - mean);
    }
    Ok(Embedding {
        coords,
        stats: SolverStats {
            eigenvalues: pairs.values,
            iterations: pairs.iterations,
            residual: pairs.residual,
            clamped,
        },
    })
}
