use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beamform::SummaryFile;
use crate::error::Result;
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub variant: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
}

/// `median(a) − median(b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianDifference {
    pub a: String,
    pub b: String,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub median_differences: Vec<MedianDifference>,
}

pub fn compare(reports: &[SummaryFile]) -> Comparison {
    let rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| ComparisonRow {
            variant: r.variant.clone(),
            count: r.summary.count,
            mean: r.summary.mean,
            median: r.summary.median,
            p10: r.summary.p10,
        })
        .collect();
    let mut median_differences = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            median_differences.push(MedianDifference {
                a: a.variant.clone(),
                b: b.variant.clone(),
                difference: a.median - b.median,
            });
        }
    }
    Comparison { rows, median_differences }
}

impl Comparison {
    pub fn table(&self) -> String {
        let mut s = format!("{:<10} {:>6} {:>8} {:>8} {:>8}\n", "variant", "users", "mean", "median", "p10");
        for r in &self.rows {
            writeln!(s, "{:<10} {:>6} {:>8.4} {:>8.4} {:>8.4}", r.variant, r.count, r.mean, r.median, r.p10)
                .expect("string write");
        }
        s
    }

    pub fn median(&self, variant: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.variant == variant).map(|r| r.median)
    }

    /// Writes `comparison.json` and `comparison.txt`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        io::ensure_dir(dir)?;
        io::write_json(&dir.join("comparison.json"), self)?;
        io::write_text(&dir.join("comparison.txt"), &self.table())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::{Overhead, Summary};

    fn point_mass(variant: &str, eta: f64) -> SummaryFile {
        SummaryFile {
            variant: variant.into(),
            summary: Summary {
                count: 4,
                excluded: 0,
                mean: eta,
                median: eta,
                p10: eta,
                snr_opt: 1.0,
                mean_spectral_efficiency: (1.0 + eta).log2(),
                overhead: Overhead::new(5, 64, 16),
            },
        }
    }

    #[test]
    fn identical_reports_have_zero_differences() {
        let c = compare(&[point_mass("a", 0.7), point_mass("b", 0.7)]);
        assert_eq!(c.median_differences[0].difference, 0.0);
    }

    #[test]
    fn point_masses() {
        let c = compare(&[point_mass("one", 1.0), point_mass("zero", 0.0), point_mass("half", 0.5)]);
        assert_eq!(c.median_differences[0].difference, 1.0);
        assert_eq!(c.rows.len(), 3);
        assert_eq!(c.table().lines().count(), 4);
        assert_eq!(c.median("half"), Some(0.5));
    }
}
