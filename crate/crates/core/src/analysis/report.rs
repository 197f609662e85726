//! Per-level spectra, tracked-eigenvalue fits and their CSV/table renderings.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::fit::{fit_order, OrderFit};
use super::spurious::{classify_spurious, Flag, SpuriousReport};

pub const CSV_HEADER: &str = "level,h,index,lambda_h,lambda_ref,rel_err,flag";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    /// Refinement parameter of the level.
    pub level: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub classification: SpuriousReport,
}

impl LevelResult {
    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.classification.entries.iter().map(|e| e.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedEigenvalue {
    /// 1-based position in the reference list (or in the sorted spectrum).
    pub index: usize,
    pub reference: Option<f64>,
    /// Value per level; `None` where no computed value matched.
    pub values: Vec<Option<f64>>,
    pub fit: Option<OrderFit>,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Sorted by decreasing h.
    pub levels: Vec<LevelResult>,
    pub tracked: Vec<TrackedEigenvalue>,
    pub reference: Vec<f64>,
}

/// Inputs of one level: refinement parameter, h, DOF count and eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSpectrum {
    pub level: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub eigenvalues: Vec<f64>,
}

impl ConvergenceReport {
    /// Classifies every level against `reference` (expanded, ascending; the
    /// window cap is its last value) and fits the first `n_track` tracked
    /// eigenvalues. With a reference, the tracked value at a level is the
    /// computed value matched to it, so spurious values in between are
    /// skipped. `fit_against_reference` fits the error decay against the
    /// reference instead of extrapolating.
    pub fn build(
        mut spectra: Vec<LevelSpectrum>,
        reference: &[f64],
        n_track: usize,
        fit_against_reference: bool,
        match_rtol: f64,
    ) -> Self {
        spectra.sort_by(|a, b| b.h.total_cmp(&a.h));
        let cap = reference.last().copied().unwrap_or(0.0);
        let levels: Vec<LevelResult> = spectra
            .into_iter()
            .map(|s| LevelResult {
                level: s.level,
                h: s.h,
                n_dofs: s.n_dofs,
                classification: classify_spurious(&s.eigenvalues, reference, cap, match_rtol),
            })
            .collect();
        let tracked = (0..n_track)
            .map(|i| {
                let reference_value = reference.get(i).copied();
                let values: Vec<Option<f64>> = levels
                    .iter()
                    .map(|l| match reference_value {
                        Some(_) => l.classification.matched(i),
                        None => l.classification.entries.get(i).map(|e| e.value),
                    })
                    .collect();
                let points: Vec<(f64, f64)> = levels
                    .iter()
                    .zip(&values)
                    .filter_map(|(l, v)| v.map(|v| (l.h, v)))
                    .collect();
                let exact = if fit_against_reference { reference_value } else { None };
                let (fit, fit_error) = if points.len() < values.len() {
                    (None, Some(format!("matched at {} of {} levels", points.len(), values.len())))
                } else {
                    match fit_order(&points, exact) {
                        Ok(f) => (Some(f), None),
                        Err(e) => (None, Some(e.to_string())),
                    }
                };
                TrackedEigenvalue {
                    index: i + 1,
                    reference: reference_value,
                    values,
                    fit,
                    fit_error,
                }
            })
            .collect();
        Self {
            levels,
            tracked,
            reference: reference.to_vec(),
        }
    }

    pub fn spurious_counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.classification.spurious_count()).collect()
    }

    /// One row per computed eigenvalue per level.
    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for l in &self.levels {
            for (i, e) in l.classification.entries.iter().enumerate() {
                let (r, err) = match e.reference {
                    Some(r) => (r.to_string(), ((e.value - r) / r).abs().to_string()),
                    None => (String::new(), String::new()),
                };
                writeln!(out, "{},{},{},{},{},{},{}", l.level, l.h, i + 1, e.value, r, err, e.flag).unwrap();
            }
        }
        out
    }

    /// Tracked eigenvalues by level with fitted order and extrapolated value.
    /// Without tracked eigenvalues, the flagged spectra side by side.
    pub fn table(&self) -> String {
        if self.tracked.is_empty() {
            let columns: Vec<(String, &LevelResult)> =
                self.levels.iter().map(|l| (format!("N={}", l.level), l)).collect();
            return flagged_table(&columns, &self.reference);
        }
        let mut head = vec!["i".to_string()];
        head.extend(self.levels.iter().map(|l| format!("N={}", l.level)));
        head.extend(["Order", "Extr.", "Ref."].map(String::from));
        let mut rows = vec![head];
        for t in &self.tracked {
            let mut row = vec![t.index.to_string()];
            row.extend(t.values.iter().map(|v| v.map_or("-".into(), number)));
            match &t.fit {
                Some(f) => {
                    row.push(format!("{:.2}", f.order));
                    row.push(number(f.extrapolated));
                }
                None => row.extend(["-".to_string(), "-".to_string()]),
            }
            row.push(t.reference.map_or("-".into(), number));
            rows.push(row);
        }
        let mut spurious = vec!["spurious".to_string()];
        spurious.extend(self.spurious_counts().iter().map(|c| c.to_string()));
        spurious.extend(["", "", ""].map(String::from));
        rows.push(spurious);

        let mut out = align(&rows);
        for t in self.tracked.iter().filter(|t| t.fit_error.is_some()) {
            writeln!(out, "fit {}: {}", t.index, t.fit_error.as_deref().unwrap_or_default()).unwrap();
        }
        out
    }

    /// Flags of the finest level, for quick checks.
    pub fn finest_flags(&self) -> Vec<Flag> {
        self.levels
            .last()
            .map(|l| l.classification.entries.iter().map(|e| e.flag).collect())
            .unwrap_or_default()
    }
}

/// Computed spectra in columns, spurious values in brackets, with the
/// reference list as the last column.
pub fn flagged_table(columns: &[(String, &LevelResult)], reference: &[f64]) -> String {
    let mut head = vec!["i".to_string()];
    head.extend(columns.iter().map(|c| c.0.clone()));
    head.push("Ref.".into());
    let n = columns
        .iter()
        .map(|c| c.1.classification.entries.len())
        .chain([reference.len()])
        .max()
        .unwrap_or(0);
    let mut rows = vec![head];
    for i in 0..n {
        let mut row = vec![(i + 1).to_string()];
        for (_, l) in columns {
            row.push(match l.classification.entries.get(i) {
                Some(e) if e.flag == Flag::Spurious => format!("[{}]", number(e.value)),
                Some(e) => number(e.value),
                None => String::new(),
            });
        }
        row.push(reference.get(i).map_or(String::new(), |&r| number(r)));
        rows.push(row);
    }
    let mut spurious = vec!["spurious".to_string()];
    spurious.extend(columns.iter().map(|c| c.1.classification.spurious_count().to_string()));
    spurious.push(String::new());
    rows.push(spurious);
    align(&rows)
}

fn align(rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
    }
    out
}

/// Four decimals in the table's natural range, scientific otherwise.
fn number(x: f64) -> String {
    if x != 0.0 && !(1e-2..1e4).contains(&x.abs()) {
        format!("{x:.5e}")
    } else {
        format!("{x:.4}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(reference: &[f64], hs: &[f64]) -> Vec<LevelSpectrum> {
        hs.iter()
            .enumerate()
            .map(|(k, &h)| LevelSpectrum {
                level: 8 << k,
                h,
                n_dofs: 100 << (2 * k),
                eigenvalues: reference.iter().map(|r| r + 3.0 * h * h).collect(),
            })
            .collect()
    }

    #[test]
    fn planted_levels_fit_order_two() {
        let reference = [1.0, 2.0, 5.0];
        let hs = [1.0 / 64.0, 1.0 / 8.0, 1.0 / 32.0, 1.0 / 16.0];
        let r = ConvergenceReport::build(planted(&reference, &hs), &reference, 3, false, 0.15);
        assert_eq!(r.levels.iter().map(|l| l.level).collect::<Vec<_>>(), vec![16, 64, 32, 8]);
        assert!(r.levels.windows(2).all(|w| w[0].h > w[1].h));
        for t in &r.tracked {
            let f = t.fit.as_ref().unwrap();
            assert!((f.order - 2.0).abs() < 0.01);
        }
        let r = ConvergenceReport::build(planted(&reference, &hs), &reference, 3, true, 0.15);
        assert!((r.tracked[0].fit.as_ref().unwrap().order - 2.0).abs() < 1e-9);
    }

    #[test]
    fn csv_has_one_row_per_eigenvalue() {
        let reference = [1.0, 2.0];
        let hs = [0.2, 0.1, 0.05];
        let r = ConvergenceReport::build(planted(&reference, &hs), &reference, 2, false, 0.15);
        let csv = r.csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 6);
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 7 && l.ends_with("physical")));
        assert!(r.table().contains("Order"));
    }

    #[test]
    fn unmatched_levels_skip_the_fit() {
        let reference = [1.0];
        let mut spectra = planted(&reference, &[0.5, 0.25, 0.125]);
        spectra[0].eigenvalues = vec![0.2];
        let r = ConvergenceReport::build(spectra, &reference, 1, false, 0.15);
        assert!(r.tracked[0].fit.is_none() && r.tracked[0].fit_error.is_some());
        assert_eq!(r.spurious_counts(), vec![1, 0, 0]);
    }

    #[test]
    fn single_levels_render_flagged_spectra() {
        let spectra = vec![LevelSpectrum {
            level: 8,
            h: 0.125,
            n_dofs: 10,
            eigenvalues: vec![0.5, 1.01, 2.02],
        }];
        let r = ConvergenceReport::build(spectra, &[1.0, 2.0], 0, false, 0.15);
        let table = r.table();
        assert!(table.contains("[0.5000]"), "{table}");
        assert!(table.contains(" 1.0100"), "{table}");
        assert_eq!(table.lines().last().unwrap().split_whitespace().collect::<Vec<_>>(), ["spurious", "1"]);
    }
}
