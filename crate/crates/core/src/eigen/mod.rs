//! Generalized symmetric-definite eigenproblems `A v = lambda M v`.
//!
//! Small systems are reduced with a dense Cholesky factor of `M`. Larger ones
//! use shift-invert block Krylov iteration on `(A - s M)^{-1} M` with full
//! M-reorthogonalization and Rayleigh-Ritz on the pencil.

mod dense;
pub mod envelope;
mod krylov;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub use envelope::EnvelopeLdl;

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_TOL_ZERO: f64 = 1e-8;
/// Systems up to this size are solved densely.
pub const DENSE_LIMIT: usize = 600;

/// Ascending eigenpairs with M-orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// `||A v - lambda M v||_2` per pair.
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    fn from_pairs(a: &CsrMatrix, m: &CsrMatrix, mut pairs: Vec<(f64, Vec<f64>)>) -> Self {
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out = Spectrum {
            eigenvalues: Vec::with_capacity(pairs.len()),
            eigenvectors: Vec::with_capacity(pairs.len()),
            residuals: Vec::with_capacity(pairs.len()),
        };
        for (lambda, mut v) in pairs {
            fix_sign(&mut v);
            out.residuals.push(residual(a, m, lambda, &v));
            out.eigenvalues.push(lambda);
            out.eigenvectors.push(v);
        }
        out
    }

    /// Largest `|v_i^T M v_j - delta_ij|`.
    pub fn orthonormality_defect(&self, m: &CsrMatrix) -> f64 {
        let mv: Vec<Vec<f64>> = self.eigenvectors.iter().map(|v| m.mul_vec(v)).collect();
        let mut worst: f64 = 0.0;
        for (i, vi) in self.eigenvectors.iter().enumerate() {
            for (j, mvj) in mv.iter().enumerate() {
                let g = dot(vi, mvj) - if i == j { 1.0 } else { 0.0 };
                worst = worst.max(g.abs());
            }
        }
        worst
    }
}

/// Makes the largest-magnitude entry positive so eigenvectors are
/// reproducible.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    for &x in v.iter() {
        if x.abs() > best.abs() * (1.0 + 1e-9) {
            best = x;
        }
    }
    if best < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn residual(a: &CsrMatrix, m: &CsrMatrix, lambda: f64, v: &[f64]) -> f64 {
    let av = a.mul_vec(v);
    let mv = m.mul_vec(v);
    av.iter()
        .zip(&mv)
        .map(|(x, y)| (x - lambda * y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Residual bound `rtol (||A||_1 + |lambda| ||M||_1)`.
pub(crate) fn residual_bound(rtol: f64, a_norm: f64, m_norm: f64, lambda: f64) -> f64 {
    rtol * (a_norm + lambda.abs() * m_norm)
}

/// The `n_ev` smallest eigenpairs of `A v = lambda M v`.
pub fn solve_generalized(a: &CsrMatrix, m: &CsrMatrix, n_ev: usize, rtol: f64) -> Result<Spectrum> {
    let n = a.dim();
    if m.dim() != n {
        return Err(Error::Parameter(format!(
            "matrix dimensions differ: {n} and {}",
            m.dim()
        )));
    }
    if n_ev == 0 || n_ev > n {
        return Err(Error::Parameter(format!(
            "requested {n_ev} eigenpairs of a {n}-dimensional problem"
        )));
    }
    if !(rtol > 0.0 && rtol < 1.0) {
        return Err(Error::Parameter(format!("rtol must lie in (0, 1), got {rtol}")));
    }
    let pairs = if n <= DENSE_LIMIT || 3 * n_ev > n {
        dense::solve(a, m, n_ev)?
    } else {
        krylov::solve(a, m, n_ev, rtol)?
    };
    let spec = Spectrum::from_pairs(a, m, pairs);
    let (an, mn) = (a.norm_1(), m.norm_1());
    let worst = spec
        .eigenvalues
        .iter()
        .zip(&spec.residuals)
        .map(|(&l, &r)| r / residual_bound(1.0, an, mn, l))
        .fold(0.0, f64::max);
    if worst > rtol {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: worst,
        });
    }
    Ok(spec)
}

/// Removes the constant mode: eigenvalues with `|lambda| <= tol_zero` times
/// the first clearly nonzero eigenvalue. Exactly one must be removed.
pub fn drop_zero_mode(spectrum: &Spectrum, tol_zero: f64) -> Result<Spectrum> {
    let top = spectrum.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let first_nonzero = spectrum
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .find(|&l| l > tol_zero * top)
        .unwrap_or(0.0);
    let is_zero = |l: f64| l.abs() <= tol_zero * first_nonzero;
    let found = spectrum.eigenvalues.iter().filter(|&&l| is_zero(l)).count();
    if found != 1 {
        return Err(Error::ZeroModeCount { found });
    }
    let mut out = Spectrum {
        eigenvalues: Vec::new(),
        eigenvectors: Vec::new(),
        residuals: Vec::new(),
    };
    for i in 0..spectrum.len() {
        if !is_zero(spectrum.eigenvalues[i]) {
            out.eigenvalues.push(spectrum.eigenvalues[i]);
            out.eigenvectors.push(spectrum.eigenvectors[i].clone());
            out.residuals.push(spectrum.residuals[i]);
        }
    }
    Ok(out)
}

/// Solves both `(A, M)` and `(A + M, M)` and returns the largest relative
/// difference between `lambda_hat - 1` and `lambda` over the first `n_ev`
/// nonzero eigenvalues.
pub fn shifted_crosscheck(a: &CsrMatrix, m: &CsrMatrix, n_ev: usize, rtol: f64) -> Result<f64> {
    let k = (n_ev + 1).min(a.dim());
    let plain = drop_zero_mode(&solve_generalized(a, m, k, rtol)?, DEFAULT_TOL_ZERO)?;
    let mut shifted = solve_generalized(&a.add_scaled(m, 1.0), m, k, rtol)?;
    shifted.eigenvalues.iter_mut().for_each(|l| *l -= 1.0);
    let shifted = drop_zero_mode(&shifted, DEFAULT_TOL_ZERO)?;
    Ok(plain
        .eigenvalues
        .iter()
        .zip(&shifted.eigenvalues)
        .take(n_ev)
        .map(|(l, s)| (s - l).abs() / l.abs())
        .fold(0.0, f64::max))
}

/// Number of eigenvalues below `shift`, from the inertia of `A - shift M`.
pub fn count_below(a: &CsrMatrix, m: &CsrMatrix, shift: f64) -> Result<usize> {
    Ok(EnvelopeLdl::with_rcm(&a.add_scaled(m, -shift))?.negative_pivots())
}

/// Checks the returned count against inertia at two probe shifts placed
/// between computed eigenvalues. Returns `(probe, expected, inertia)` for
/// each probe.
pub fn inertia_check(
    a: &CsrMatrix,
    m: &CsrMatrix,
    spectrum: &Spectrum,
) -> Result<Vec<(f64, usize, usize)>> {
    let ev = &spectrum.eigenvalues;
    if ev.len() < 2 {
        return Ok(Vec::new());
    }
    // Widest relative gaps in the lower and upper halves avoid near-multiple
    // eigenvalues.
    let probe_in = |lo: usize, hi: usize| {
        (lo..hi)
            .max_by(|&i, &j| {
                let gi = (ev[i + 1] - ev[i]) / ev[i + 1].abs().max(1e-300);
                let gj = (ev[j + 1] - ev[j]) / ev[j + 1].abs().max(1e-300);
                gi.total_cmp(&gj)
            })
            .map(|i| (0.5 * (ev[i] + ev[i + 1]), i + 1))
    };
    let half = (ev.len() / 2).max(1);
    let mut probes = Vec::new();
    probes.extend(probe_in(0, half));
    probes.extend(probe_in(half.min(ev.len() - 1), ev.len() - 1));
    probes
        .into_iter()
        .map(|(s, expected)| Ok((s, expected, count_below(a, m, s)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pencils() {
        let a = CsrMatrix::from_diagonal(&[0.0, 2.0]);
        let s = solve_generalized(&a, &CsrMatrix::identity(2), 2, 1e-8).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0, 2.0]);
        let s = solve_generalized(&a, &CsrMatrix::from_diagonal(&[1.0, 2.0]), 2, 1e-8).unwrap();
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-15);
        assert!(s.eigenvalues[0].abs() < 1e-15);
    }

    #[test]
    fn indefinite_mass_names_the_pivot() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let m = CsrMatrix::from_diagonal(&[1.0, -1.0, 1.0]);
        let err = solve_generalized(&a, &m, 2, 1e-8).unwrap_err();
        assert!(matches!(err, Error::Factorization { index: 1, .. }), "{err}");
    }

    #[test]
    fn zero_mode_contract() {
        let with = Spectrum {
            eigenvalues: vec![1e-14, 3.0, 4.0],
            eigenvectors: vec![vec![]; 3],
            residuals: vec![0.0; 3],
        };
        assert_eq!(drop_zero_mode(&with, 1e-8).unwrap().eigenvalues, vec![3.0, 4.0]);
        let without = Spectrum {
            eigenvalues: vec![2.0, 3.0],
            eigenvectors: vec![vec![]; 2],
            residuals: vec![0.0; 2],
        };
        assert!(matches!(
            drop_zero_mode(&without, 1e-8),
            Err(Error::ZeroModeCount { found: 0 })
        ));
        let two = Spectrum {
            eigenvalues: vec![0.0, 1e-12, 3.0],
            eigenvectors: vec![vec![]; 3],
            residuals: vec![0.0; 3],
        };
        assert!(matches!(
            drop_zero_mode(&two, 1e-8),
            Err(Error::ZeroModeCount { found: 2 })
        ));
    }

    #[test]
    fn crosscheck_on_a_diagonal_toy() {
        let a = CsrMatrix::from_diagonal(&[0.0, 1.0, 4.0, 9.0]);
        let d = shifted_crosscheck(&a, &CsrMatrix::identity(4), 3, 1e-8).unwrap();
        assert_eq!(d, 0.0);
    }

    fn path_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let deg = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            t.push((i, i, deg));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn sparse_path_matches_closed_form() {
        // Neumann path graph: eigenvalues 2 - 2 cos(k pi / n).
        let n = 1500;
        let a = path_laplacian(n);
        let m = CsrMatrix::from_diagonal(&vec![2.0; n]);
        let s = solve_generalized(&a, &m, 8, 1e-10).unwrap();
        for (k, &l) in s.eigenvalues.iter().enumerate() {
            let want = (1.0 - (k as f64 * std::f64::consts::PI / n as f64).cos()) as f64;
            assert!((l - want).abs() <= 1e-9 * want.max(1e-6), "{k}: {l} vs {want}");
        }
        assert!(s.orthonormality_defect(&m) < 1e-10);
        for (p, want, got) in inertia_check(&a, &m, &s).unwrap() {
            assert_eq!(want, got, "probe {p}");
        }
    }

    #[test]
    fn sparse_path_resolves_double_eigenvalues() {
        // Two disjoint copies of the same chain: every eigenvalue is double.
        let n = 400;
        let p = path_laplacian(n);
        let mut t = Vec::new();
        for i in 0..n {
            let (cols, vals) = p.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push((i, j, v));
                t.push((i + n, j + n, v));
            }
        }
        // Tie the copies with a weak spring so the zero mode stays simple.
        t.extend([(0, n, -1e-3), (n, 0, -1e-3), (0, 0, 1e-3), (n, n, 1e-3)]);
        let a = CsrMatrix::from_triplets(2 * n, t);
        let m = CsrMatrix::identity(2 * n);
        let s = solve_generalized(&a, &m, 7, 1e-10).unwrap();
        let dense = a.to_dense().symmetric_eigenvalues();
        let mut dense: Vec<f64> = dense.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        for (l, d) in s.eigenvalues.iter().zip(&dense) {
            assert!((l - d).abs() < 1e-10, "{l} vs {d}");
        }
    }
}
