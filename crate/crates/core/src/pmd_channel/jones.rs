use std::ops::Mul;

use num_complex::Complex64;

/// 2x2 complex Jones operator, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub [[Complex64; 2]; 2]);

impl JonesMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        JonesMatrix([[one, zero], [zero, one]])
    }

    pub fn diagonal(a: Complex64, b: Complex64) -> Self {
        JonesMatrix([[a, Complex64::default()], [Complex64::default(), b]])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        JonesMatrix([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn determinant(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// General 2x2 inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det.norm() == 0.0 {
            return None;
        }
        let m = &self.0;
        Some(JonesMatrix([
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ]))
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Largest entry-wise deviation of `M M^H` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = *self * self.adjoint();
        let id = JonesMatrix::identity();
        p.max_abs_diff(&id)
    }

    pub fn max_abs_diff(&self, other: &JonesMatrix) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[Complex64::default(); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        JonesMatrix(out)
    }
}

/// Frequency-independent rotation onto the fast/slow PSP axes,
/// `[[r1, -r2*], [r2, r1*]]`.
pub fn jones_rotation(azimuth: f64, ellipticity: f64) -> JonesMatrix {
    let (st, ct) = azimuth.sin_cos();
    let (sp, cp) = ellipticity.sin_cos();
    let r1 = Complex64::new(ct * cp, -st * sp);
    let r2 = Complex64::new(st * cp, ct * sp);
    JonesMatrix([[r1, -r2.conj()], [r2, r1.conj()]])
}

/// First-order PMD delay operator `diag(e^{j w dgd/2}, e^{-j w dgd/2})`.
pub fn pmd_delay_matrix(omega: f64, dgd: f64) -> JonesMatrix {
    let half = omega * dgd / 2.0;
    JonesMatrix::diagonal(Complex64::from_polar(1.0, half), Complex64::from_polar(1.0, -half))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rotation_special_angles() {
        assert!(jones_rotation(0.0, 0.0).max_abs_diff(&JonesMatrix::identity()) < 1e-15);
        let quarter = jones_rotation(PI / 2.0, 0.0);
        let expected = JonesMatrix([
            [Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)],
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        ]);
        assert!(quarter.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn rotation_row_norm() {
        for (t, p) in [(0.3, -1.2), (2.0, 0.7), (-4.4, 3.3)] {
            let r = jones_rotation(t, p);
            let s = r.0[0][0].norm_sqr() + r.0[1][0].norm_sqr();
            assert!((s - 1.0).abs() < 1e-15);
            assert!(r.unitarity_error() < 1e-15);
        }
    }

    #[test]
    fn delay_matrix_cases() {
        assert_eq!(pmd_delay_matrix(0.0, 3e-12), JonesMatrix::identity());
        assert_eq!(pmd_delay_matrix(1e11, 0.0), JonesMatrix::identity());
        let minus = pmd_delay_matrix(2.0 * PI, 1.0);
        let neg_id = JonesMatrix::diagonal(Complex64::new(-1.0, 0.0), Complex64::new(-1.0, 0.0));
        assert!(minus.max_abs_diff(&neg_id) < 1e-15);
    }

    #[test]
    fn inverse_of_rotation_is_adjoint() {
        let r = jones_rotation(0.4, 0.9);
        assert!(r.inverse().unwrap().max_abs_diff(&r.adjoint()) < 1e-15);
        let singular = JonesMatrix::diagonal(Complex64::new(1.0, 0.0), Complex64::default());
        assert!(singular.inverse().is_none());
    }
}
