use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Lower Cholesky factor; the first non-positive pivot is reported.
fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Factorization { index: j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Reduces to `L^{-1} A L^{-T} y = lambda y` and maps `v = L^{-T} y`.
pub(super) fn solve(a: &CsrMatrix, m: &CsrMatrix, n_ev: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let l = cholesky(&m.to_dense())?;
    let x = l
        .solve_lower_triangular(&a.to_dense())
        .expect("Cholesky factor has a positive diagonal");
    let c = l
        .solve_lower_triangular(&x.transpose())
        .expect("Cholesky factor has a positive diagonal");
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lt = l.transpose();
    order
        .into_iter()
        .take(n_ev)
        .map(|i| {
            let v = lt
                .solve_upper_triangular(&eig.eigenvectors.column(i).into_owned())
                .expect("Cholesky factor has a positive diagonal");
            Ok((eig.eigenvalues[i], v.as_slice().to_vec()))
        })
        .collect()
}
