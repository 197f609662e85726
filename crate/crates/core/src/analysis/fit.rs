//! Least-squares convergence orders and extrapolated eigenvalues.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERS: usize = 200;
/// Orders outside this range mean the model degenerated (a vanishing order
/// makes `C h^t` indistinguishable from the limit).
const MIN_ORDER: f64 = 0.1;
const MAX_ORDER: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: f64,
    /// The limit value: echoed exact value, or the fitted `lambda_extr`.
    pub extrapolated: f64,
    /// Root-mean-square misfit of the model, in the units of the data.
    pub residual: f64,
}

/// Fits `|lambda_h - lambda| ~ C h^t`.
///
/// With an exact value the order is the slope of the log-log regression line.
/// Without one, `lambda_h = lambda_extr + C h^t` is fitted by damped
/// Gauss-Newton started from `t = 2`.
pub fn fit_order(levels: &[(f64, f64)], exact: Option<f64>) -> Result<OrderFit> {
    if levels.len() < 3 {
        return Err(Error::Fit {
            reason: format!("need at least 3 levels, got {}", levels.len()),
            trace: Vec::new(),
        });
    }
    if levels.iter().any(|(h, l)| !(h.is_finite() && *h > 0.0 && l.is_finite())) {
        return Err(Error::Fit {
            reason: "levels must have positive finite h and finite values".into(),
            trace: Vec::new(),
        });
    }
    let mut sorted = levels.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    if sorted.windows(2).any(|w| w[0].0 <= w[1].0 * (1.0 + 1e-12)) {
        return Err(Error::Fit {
            reason: "mesh sizes must be distinct".into(),
            trace: Vec::new(),
        });
    }
    match exact {
        Some(l) => fit_with_exact(&sorted, l),
        None => fit_three_parameter(&sorted),
    }
}

fn fit_with_exact(levels: &[(f64, f64)], exact: f64) -> Result<OrderFit> {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .map(|&(h, l)| (h.ln(), (l - exact).abs().ln()))
        .collect();
    if pts.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Fit {
            reason: "a level reproduces the exact value; the error has no logarithm".into(),
            trace: Vec::new(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let c = (my - slope * mx).exp();
    let residual = (levels
        .iter()
        .map(|&(h, l)| ((l - exact).abs() - c * h.powf(slope)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(OrderFit {
        order: slope,
        extrapolated: exact,
        residual,
    })
}

/// Levenberg-Marquardt on scaled data: `h / h_max` and `lambda / |lambda_finest|`.
fn fit_three_parameter(levels: &[(f64, f64)]) -> Result<OrderFit> {
    let h0 = levels[0].0;
    let scale = levels.last().unwrap().1.abs().max(f64::MIN_POSITIVE);
    let data: Vec<(f64, f64)> = levels.iter().map(|&(h, l)| (h / h0, l / scale)).collect();

    let residuals = |p: &Vector3<f64>| -> Vec<f64> {
        data.iter().map(|&(h, l)| p[0] + p[1] * h.powf(p[2]) - l).collect()
    };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();

    let t0 = 2.0;
    let (ha, la) = data[0];
    let (hb, lb) = data[1];
    let c0 = (la - lb) / (ha.powf(t0) - hb.powf(t0));
    let mut p = Vector3::new(la - c0 * ha.powf(t0), c0, t0);
    let mut r = residuals(&p);
    let mut f = cost(&r);
    let mut mu = 1e-3;
    let mut trace = vec![[p[0] * scale, p[1] * scale, p[2]]];
    let mut converged = false;
    for _ in 0..MAX_ITERS {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&(h, _), &ri) in data.iter().zip(&r) {
            let ht = h.powf(p[2]);
            let j = Vector3::new(1.0, ht, p[1] * ht * h.ln());
            jtj += j * j.transpose();
            jtr += j * ri;
        }
        if jtr.norm() <= 1e-15 {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for k in 0..3 {
                damped[(k, k)] += mu * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                mu *= 10.0;
                continue;
            };
            let trial = p + step;
            let rt = residuals(&trial);
            let ft = cost(&rt);
            if ft.is_finite() && ft <= f {
                let small = step.norm() <= 1e-12 * (1.0 + p.norm());
                let flat = f - ft <= 1e-15 * f.max(1e-300);
                p = trial;
                r = rt;
                f = ft;
                mu = (mu * 0.3).max(1e-12);
                improved = true;
                trace.push([p[0] * scale, p[1] * scale, p[2]]);
                converged = small || (flat && step.norm() <= 1e-8 * (1.0 + p.norm()));
                break;
            }
            mu *= 10.0;
        }
        if converged || !improved {
            converged = converged || f <= 1e-28;
            break;
        }
    }
    let order = p[2];
    if !converged || !(order.is_finite() && order > MIN_ORDER && order < MAX_ORDER) {
        return Err(Error::Fit {
            reason: format!("three-parameter fit did not converge (order {order})"),
            trace,
        });
    }
    Ok(OrderFit {
        order,
        extrapolated: p[0] * scale,
        residual: (f / data.len() as f64).sqrt() * scale,
    })
}
