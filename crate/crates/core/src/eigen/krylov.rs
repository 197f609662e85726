use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::envelope::EnvelopeLdl;
use super::{dot, residual_bound};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

const BLOCK: usize = 4;
const MAX_RESTARTS: usize = 60;
const START_SEED: u64 = 0x6b72_796c_6f76;

/// M-orthonormal basis with cached products `A v` and `M v`.
struct Basis<'a> {
    a: &'a CsrMatrix,
    m: &'a CsrMatrix,
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
}

impl<'a> Basis<'a> {
    fn new(a: &'a CsrMatrix, m: &'a CsrMatrix) -> Self {
        Self {
            a,
            m,
            v: Vec::new(),
            av: Vec::new(),
            mv: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    /// M-orthogonalizes `w` against the basis (two passes) and appends it
    /// unless it is numerically dependent.
    fn push(&mut self, mut w: Vec<f64>) -> bool {
        let mut mw = self.m.mul_vec(&w);
        let norm0 = dot(&w, &mw).max(0.0).sqrt();
        if norm0 == 0.0 || !norm0.is_finite() {
            return false;
        }
        for _ in 0..2 {
            for (v, mv) in self.v.iter().zip(&self.mv) {
                let c = dot(mv, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
            mw = self.m.mul_vec(&w);
        }
        let norm = dot(&w, &mw).max(0.0).sqrt();
        if norm <= 1e-10 * norm0 {
            return false;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        mw.iter_mut().for_each(|x| *x /= norm);
        self.av.push(self.a.mul_vec(&w));
        self.v.push(w);
        self.mv.push(mw);
        true
    }

    /// `sum_k y[k] * cols[k]`.
    fn combine(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; cols[0].len()];
        for (c, &s) in cols.iter().zip(y) {
            out.iter_mut().zip(c).for_each(|(o, x)| *o += s * x);
        }
        out
    }
}

struct Ritz {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
}

fn rayleigh_ritz(b: &Basis, keep: usize) -> Ritz {
    let k = b.len();
    let mut h = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let x = 0.5 * (dot(&b.v[i], &b.av[j]) + dot(&b.v[j], &b.av[i]));
            h[(i, j)] = x;
            h[(j, i)] = x;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut r = Ritz {
        values: Vec::new(),
        vectors: Vec::new(),
        av: Vec::new(),
        mv: Vec::new(),
    };
    for &i in order.iter().take(keep) {
        let y: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        r.values.push(eig.eigenvalues[i]);
        r.vectors.push(Basis::combine(&b.v, &y));
        r.av.push(Basis::combine(&b.av, &y));
        r.mv.push(Basis::combine(&b.mv, &y));
    }
    r
}

/// Shift-invert block Krylov with thick restarts.
pub(super) fn solve(a: &CsrMatrix, m: &CsrMatrix, n_ev: usize, rtol: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = a.dim();
    // M must be SPD; its factorization names a failing pivot.
    if let Some((index, value)) = EnvelopeLdl::with_rcm(m)?.first_nonpositive() {
        return Err(Error::Factorization { index, value });
    }
    let tr_a: f64 = (0..n).map(|i| a.get(i, i)).sum();
    let tr_m: f64 = (0..n).map(|i| m.get(i, i)).sum();
    let shift = if tr_a > 0.0 { -tr_a / tr_m / n as f64 } else { -1.0 };
    let op = EnvelopeLdl::with_rcm(&a.add_scaled(m, -shift))?;
    let apply = |x: &[f64]| op.solve(&m.mul_vec(x));

    let (a_norm, m_norm) = (a.norm_1(), m.norm_1());
    let keep = (n_ev + BLOCK).min(n);
    let max_basis = (3 * n_ev + 10 * BLOCK).max(keep + 2 * BLOCK).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let random = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };

    let mut basis = Basis::new(a, m);
    let mut block: Vec<Vec<f64>> = (0..BLOCK).map(|_| apply(&random(&mut rng))).collect();
    let mut worst = f64::INFINITY;
    for restart in 0..MAX_RESTARTS {
        while basis.len() < max_basis {
            let mut next = Vec::with_capacity(BLOCK);
            for w in block.drain(..) {
                if basis.len() >= max_basis {
                    break;
                }
                if basis.push(w) {
                    next.push(basis.len() - 1);
                }
            }
            if next.is_empty() {
                // Invariant subspace reached; continue from a fresh direction.
                if basis.len() >= n || !basis.push(apply(&random(&mut rng))) {
                    break;
                }
                next.push(basis.len() - 1);
            }
            block = next.iter().map(|&i| apply(&basis.v[i])).collect();
        }

        let ritz = rayleigh_ritz(&basis, keep);
        let mut unconverged = Vec::new();
        worst = 0.0;
        for i in 0..n_ev {
            let r: f64 = ritz.av[i]
                .iter()
                .zip(&ritz.mv[i])
                .map(|(x, y)| (x - ritz.values[i] * y).powi(2))
                .sum::<f64>()
                .sqrt();
            let rel = r / residual_bound(1.0, a_norm, m_norm, ritz.values[i]);
            worst = worst.max(rel);
            // Converge past the requested tolerance so the final check, on
            // freshly computed residuals, has margin.
            if rel > 0.1 * rtol {
                unconverged.push(i);
            }
        }
        if unconverged.is_empty() {
            return Ok(ritz
                .values
                .into_iter()
                .zip(ritz.vectors)
                .take(n_ev)
                .collect());
        }
        if basis.len() >= n || restart + 1 == MAX_RESTARTS {
            break;
        }
        // Thick restart: keep the leading Ritz vectors, expand from the
        // unconverged ones.
        block = unconverged
            .iter()
            .take(BLOCK)
            .map(|&i| apply(&ritz.vectors[i]))
            .collect();
        basis = Basis::new(a, m);
        for (((v, av), mv), _) in ritz.vectors.into_iter().zip(ritz.av).zip(ritz.mv).zip(0..keep) {
            basis.v.push(v);
            basis.av.push(av);
            basis.mv.push(mv);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_RESTARTS,
        residual: worst,
    })
}
