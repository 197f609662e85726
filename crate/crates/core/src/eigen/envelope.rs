//! Envelope (skyline) LDL^T factorization under a reverse Cuthill-McKee
//! ordering.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Reverse Cuthill-McKee permutation (`perm[new] = old`) of a structurally
/// symmetric matrix, component by component from pseudo-peripheral nodes.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if placed[seed] {
            continue;
        }
        let root = peripheral_node(a, seed, &degree, &placed);
        placed[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).0.iter().copied().filter(|&w| !placed[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// BFS levels from `root` within the unplaced part of its component.
fn bfs_levels(a: &CsrMatrix, root: usize, placed: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = placed.to_vec();
    seen[root] = true;
    let mut levels = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in a.row(v).0 {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

fn peripheral_node(a: &CsrMatrix, start: usize, degree: &[usize], placed: &[bool]) -> usize {
    let mut root = start;
    let mut depth = bfs_levels(a, root, placed).len();
    for _ in 0..8 {
        let levels = bfs_levels(a, root, placed);
        let cand = *levels
            .last()
            .unwrap()
            .iter()
            .min_by_key(|&&v| (degree[v], v))
            .unwrap();
        let d = bfs_levels(a, cand, placed).len();
        if d <= depth {
            break;
        }
        root = cand;
        depth = d;
    }
    root
}

/// `P A P^T = L D L^T` with `L` stored row-wise over each row's envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeLdl {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl EnvelopeLdl {
    /// Factors without pivoting. Indefinite matrices are accepted; a zero or
    /// non-finite pivot is an error naming the original row.
    pub fn factor(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.dim();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0; n];
        for i in 0..n {
            let (cols, _) = a.row(perm[i]);
            first[i] = cols.iter().map(|&j| inv[j]).filter(|&j| j <= i).min().unwrap_or(i);
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut lower = vec![0.0; start[n]];
        let mut diag = vec![0.0; n];
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut row = Vec::new();
        for i in 0..n {
            let fi = first[i];
            row.clear();
            row.resize(i - fi + 1, 0.0);
            let (cols, vals) = a.row(perm[i]);
            for (&j, &v) in cols.iter().zip(vals) {
                let j = inv[j];
                if j <= i {
                    row[j - fi] += v;
                }
            }
            // row[j - fi] becomes L_ij d_j for j < i.
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let lj = &lower[start[j] + (k0 - fj)..start[j] + (j - fj)];
                let wi = &row[k0 - fi..j - fi];
                let s: f64 = wi.iter().zip(lj).map(|(w, l)| w * l).sum();
                row[j - fi] -= s;
            }
            let mut d = row[i - fi];
            let li = &mut lower[start[i]..start[i + 1]];
            for j in fi..i {
                let l = row[j - fi] / diag[j];
                d -= row[j - fi] * l;
                li[j - fi] = l;
            }
            if !d.is_finite() || d.abs() <= 1e-14 * scale {
                return Err(Error::Factorization {
                    index: perm[i],
                    value: d,
                });
            }
            diag[i] = d;
        }
        Ok(Self {
            perm,
            first,
            start,
            lower,
            diag,
        })
    }

    pub fn with_rcm(a: &CsrMatrix) -> Result<Self> {
        Self::factor(a, rcm_ordering(a))
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|&&d| d < 0.0).count()
    }

    /// First non-positive pivot as `(original row, value)`.
    pub fn first_nonpositive(&self) -> Option<(usize, f64)> {
        self.diag
            .iter()
            .position(|&d| d <= 0.0)
            .map(|i| (self.perm[i], self.diag[i]))
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let li = &self.lower[self.start[i]..self.start[i + 1]];
            let s: f64 = li.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for (v, d) in y.iter_mut().zip(&self.diag) {
            *v /= d;
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            let li = &self.lower[self.start[i]..self.start[i + 1]];
            for (v, l) in y[fi..i].iter_mut().zip(li) {
                *v -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}
