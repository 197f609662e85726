//! Closed-form Neumann eigenpairs of the rectangle `(0, lx) x (0, ly)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::mesh::Point2;

/// Height of the reference cavity `(0, 1) x (0, 1.1)`.
pub const CAVITY_HEIGHT: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEigenvalue {
    pub value: f64,
    pub multiplicity: usize,
    /// Mode numbers `(n, m)` when the spectrum is known in closed form.
    pub labels: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpectrum {
    pub entries: Vec<ReferenceEigenvalue>,
    /// Values are divided by `c^2 pi^2`.
    pub normalized: bool,
}

impl ReferenceSpectrum {
    /// Plain values, each repeated by its multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat(e.value).take(e.multiplicity))
            .collect()
    }

    /// Groups a sorted list of values (equal within `rel_tol`) into entries.
    pub fn from_values(values: &[f64], rel_tol: f64, normalized: bool) -> Self {
        let mut entries: Vec<ReferenceEigenvalue> = Vec::new();
        for &v in values {
            match entries.last_mut() {
                Some(e) if (v - e.value).abs() <= rel_tol * e.value.abs() => e.multiplicity += 1,
                _ => entries.push(ReferenceEigenvalue {
                    value: v,
                    multiplicity: 1,
                    labels: Vec::new(),
                }),
            }
        }
        Self { entries, normalized }
    }

    /// The same spectrum divided by `c^2 pi^2`.
    pub fn normalize(&self, c: f64) -> Self {
        if self.normalized {
            return self.clone();
        }
        let s = c * c * PI * PI;
        Self {
            entries: self
                .entries
                .iter()
                .map(|e| ReferenceEigenvalue {
                    value: e.value / s,
                    ..e.clone()
                })
                .collect(),
            normalized: true,
        }
    }
}

/// The `count` smallest nonzero eigenvalues `c^2 pi^2 ((n/lx)^2 + (m/ly)^2)`
/// counted with multiplicity.
pub fn rect_eigs(lx: f64, ly: f64, c: f64, count: usize) -> ReferenceSpectrum {
    let bound = count as u32 + 1;
    let mut modes: Vec<(f64, u32, u32)> = Vec::new();
    for n in 0..=bound {
        for m in 0..=bound {
            if n + m > 0 {
                let mu = (n as f64 / lx).powi(2) + (m as f64 / ly).powi(2);
                modes.push((c * c * PI * PI * mu, n, m));
            }
        }
    }
    modes.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    modes.truncate(count);
    let mut entries: Vec<ReferenceEigenvalue> = Vec::new();
    for (v, n, m) in modes {
        match entries.last_mut() {
            Some(e) if (v - e.value).abs() <= 1e-12 * v => {
                e.multiplicity += 1;
                e.labels.push((n, m));
            }
            _ => entries.push(ReferenceEigenvalue {
                value: v,
                multiplicity: 1,
                labels: vec![(n, m)],
            }),
        }
    }
    ReferenceSpectrum {
        entries,
        normalized: false,
    }
}

/// Eigenvalues of the `(0, 1) x (0, 1.1)` cavity.
pub fn exact_rect_eigs(c: f64, count: usize) -> ReferenceSpectrum {
    rect_eigs(1.0, CAVITY_HEIGHT, c, count)
}

/// A scalar field with its gradient.
pub trait ExactField: Sync {
    fn value(&self, p: Point2) -> f64;
    fn gradient(&self, p: Point2) -> Point2;
}

/// Rectangle mode `(n, m)`: pressure `cos(n pi x / lx) cos(m pi y / ly)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectMode {
    pub n: u32,
    pub m: u32,
    pub lx: f64,
    pub ly: f64,
}

impl RectMode {
    fn wavenumbers(&self) -> (f64, f64) {
        (self.n as f64 * PI / self.lx, self.m as f64 * PI / self.ly)
    }

    /// Displacement in the printed form
    /// `(n sin(kx x) cos(ky y), (m / ly) cos(kx x) sin(ky y))` for `lx = 1`.
    pub fn displacement(&self, p: Point2) -> Point2 {
        let (kx, ky) = self.wavenumbers();
        Point2::new(
            self.n as f64 / self.lx * (kx * p.x).sin() * (ky * p.y).cos(),
            self.m as f64 / self.ly * (kx * p.x).cos() * (ky * p.y).sin(),
        )
    }
}

impl ExactField for RectMode {
    fn value(&self, p: Point2) -> f64 {
        let (kx, ky) = self.wavenumbers();
        (kx * p.x).cos() * (ky * p.y).cos()
    }

    fn gradient(&self, p: Point2) -> Point2 {
        let (kx, ky) = self.wavenumbers();
        Point2::new(
            -kx * (kx * p.x).sin() * (ky * p.y).cos(),
            -ky * (kx * p.x).cos() * (ky * p.y).sin(),
        )
    }
}

/// Closed-form mode `(n, m)` of the `(0, 1) x (0, 1.1)` cavity.
pub fn exact_rect_eigfun(n: u32, m: u32) -> RectMode {
    assert!(n + m > 0, "the constant mode has no displacement");
    RectMode {
        n,
        m,
        lx: 1.0,
        ly: CAVITY_HEIGHT,
    }
}

/// The constant function 1.
pub struct Constant;

impl ExactField for Constant {
    fn value(&self, _: Point2) -> f64 {
        1.0
    }

    fn gradient(&self, _: Point2) -> Point2 {
        Point2::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_modes_of_the_cavity() {
        let s = exact_rect_eigs(1.0, 7).normalize(1.0);
        let got: Vec<f64> = s.expanded();
        // n^2 + (m / 1.1)^2 by hand.
        let want = [
            1.0 / 1.21,
            1.0,
            1.0 + 1.0 / 1.21,
            4.0 / 1.21,
            4.0,
            1.0 + 4.0 / 1.21,
            4.0 + 1.0 / 1.21,
        ];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-14, "{g} vs {w}");
        }
        assert_eq!(s.entries[0].labels, vec![(0, 1)]);
        assert_eq!(s.entries[1].labels, vec![(1, 0)]);
    }

    #[test]
    fn mode_one_zero_scales_with_c_squared() {
        let s = exact_rect_eigs(340.0, 2);
        let want = 340.0f64.powi(2) * PI * PI;
        assert!((s.entries[1].value - want).abs() < 1e-9 * want);
    }

    #[test]
    fn square_has_double_eigenvalues() {
        let s = rect_eigs(1.0, 1.0, 1.0, 3);
        assert_eq!(s.entries[0].multiplicity, 2);
        assert_eq!(s.entries[0].labels, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn displacement_is_parallel_to_the_pressure_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, m) in [(1, 0), (0, 1), (2, 1), (1, 3)] {
            let f = exact_rect_eigfun(n, m);
            for _ in 0..100 {
                let p = Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.1));
                let g = f.gradient(p) * -1.0;
                let u = f.displacement(p);
                assert!(g.dot(u) >= (1.0 - 1e-12) * g.norm() * u.norm());
            }
        }
        let u = exact_rect_eigfun(1, 0).displacement(Point2::new(0.5, 0.3));
        assert!((u.x - 1.0).abs() < 1e-15 && u.y == 0.0);
    }

    #[test]
    fn neumann_condition_holds_on_the_sides() {
        let f = exact_rect_eigfun(2, 3);
        for t in [0.1, 0.45, 0.9] {
            assert!(f.gradient(Point2::new(0.0, t)).x.abs() < 1e-12);
            assert!(f.gradient(Point2::new(1.0, t)).x.abs() < 1e-12);
            assert!(f.gradient(Point2::new(t, 0.0)).y.abs() < 1e-12);
            assert!(f.gradient(Point2::new(t, 1.1)).y.abs() < 1e-12);
        }
    }
}
