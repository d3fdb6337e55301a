//! Linear quadrature maps for one and two optical modes.
//!
//! Quadratures are ordered `(x1, p1, x2, p2)` and the vacuum variance is 1/2.
//! A gate matrix maps input quadratures to output quadratures, so applying
//! `a` and then `b` corresponds to the matrix product `b * a`.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};

const RECONSTRUCTION_TOL: f64 = 1e-12;

/// Affine symplectic map on one or two modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianGate {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
}

impl GaussianGate {
    fn linear(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        Self {
            matrix,
            displacement: DVector::zeros(n),
        }
    }

    fn single(m: Matrix2<f64>) -> Self {
        Self::linear(DMatrix::from_fn(2, 2, |i, j| m[(i, j)]))
    }

    pub fn identity(modes: usize) -> Self {
        Self::linear(DMatrix::identity(2 * modes, 2 * modes))
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    /// Returns the single-mode block as a fixed-size matrix.
    pub fn matrix2(&self) -> Option<Matrix2<f64>> {
        (self.modes() == 1).then(|| Matrix2::from_fn(|i, j| self.matrix[(i, j)]))
    }

    /// Gate that applies `self` first and then `next`.
    pub fn then(&self, next: &GaussianGate) -> Result<GaussianGate> {
        if self.modes() != next.modes() {
            return Err(Error::Domain(format!(
                "cannot compose a {}-mode gate with a {}-mode gate",
                self.modes(),
                next.modes()
            )));
        }
        Ok(Self {
            matrix: &next.matrix * &self.matrix,
            displacement: &next.matrix * &self.displacement + &next.displacement,
        })
    }

    /// Maps a vector of quadrature means through the gate.
    pub fn apply(&self, means: &DVector<f64>) -> Result<DVector<f64>> {
        if means.len() != self.matrix.ncols() {
            return Err(Error::Domain(format!(
                "expected {} quadratures, got {}",
                self.matrix.ncols(),
                means.len()
            )));
        }
        Ok(&self.matrix * means + &self.displacement)
    }

    /// Largest deviation of `M^T Ω M` from `Ω`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.modes());
        let lhs = self.matrix.transpose() * &omega * &self.matrix;
        (lhs - omega).amax()
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_defect() <= tol
    }
}

/// Standard antisymmetric form for `modes` modes in `(x1, p1, ...)` order.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for m in 0..modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

/// Two-mode beam splitter with amplitude transmission `t`.
///
/// `x1 -> t x2 + r x1`, `x2 -> t x1 - r x2`, identically on the momenta.
pub fn beam_splitter(t: f64) -> Result<GaussianGate> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("transmission {t} outside [0, 1]")));
    }
    let r = (1.0 - t * t).sqrt();
    let mut m = DMatrix::zeros(4, 4);
    for q in 0..2 {
        m[(q, q)] = r;
        m[(q, 2 + q)] = t;
        m[(2 + q, q)] = t;
        m[(2 + q, 2 + q)] = -r;
    }
    Ok(GaussianGate::linear(m))
}

/// Phase rotation by `phi`.
pub fn rotation(phi: f64) -> GaussianGate {
    GaussianGate::single(rotation_matrix(phi))
}

/// Squeezer scaling `x` by `s` and `p` by `1/s`.
pub fn squeeze(s: f64) -> Result<GaussianGate> {
    Ok(GaussianGate::single(squeeze_matrix(s)?))
}

/// Quadratic phase gate `p -> p + k x`.
pub fn shear(k: f64) -> GaussianGate {
    GaussianGate::single(shear_matrix(k))
}

/// Phase-space displacement by `(x0, p0)`.
pub fn displacement(x0: f64, p0: f64) -> GaussianGate {
    let mut g = GaussianGate::identity(1);
    g.displacement = DVector::from_vec(vec![x0, p0]);
    g
}

/// Squeezing scale corresponding to the exponent `r` (`s = e^{-r}`).
pub fn scale_from_exponent(r: f64) -> f64 {
    (-r).exp()
}

/// Squeezing exponent corresponding to the scale `s`.
pub fn exponent_from_scale(s: f64) -> f64 {
    -s.ln()
}

pub fn rotation_matrix(phi: f64) -> Matrix2<f64> {
    let (sn, c) = phi.sin_cos();
    Matrix2::new(c, -sn, sn, c)
}

pub fn squeeze_matrix(s: f64) -> Result<Matrix2<f64>> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("squeezing scale {s} must be positive")));
    }
    Ok(Matrix2::new(s, 0.0, 0.0, 1.0 / s))
}

pub fn shear_matrix(k: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, k, 1.0)
}

/// Bosonic loss channel with intensity transmission `eta` acting on a
/// single-mode covariance matrix.
pub fn loss_channel(eta: f64, cov: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("transmissivity {eta} outside [0, 1]")));
    }
    Ok(cov * eta + Matrix2::identity() * (0.5 * (1.0 - eta)))
}

/// `R(zeta) S(e^{-xi}) R(epsilon)` factorisation of a single-mode gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDecomposition {
    pub zeta: f64,
    pub xi: f64,
    pub epsilon: f64,
}

impl GaussianDecomposition {
    pub const IDENTITY: Self = Self {
        zeta: 0.0,
        xi: 0.0,
        epsilon: 0.0,
    };

    /// Effective squeezing scale `e^{-xi}`.
    pub fn scale(&self) -> f64 {
        (-self.xi).exp()
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        let s = self.scale();
        rotation_matrix(self.zeta) * Matrix2::new(s, 0.0, 0.0, 1.0 / s) * rotation_matrix(self.epsilon)
    }

    pub fn reconstruction_error(&self, target: &Matrix2<f64>) -> f64 {
        (self.matrix() - target).amax()
    }
}

/// Splits `[[a, b], [b, d]]` with unit determinant into the squared cosine
/// and sine of the eigenvector belonging to the smaller eigenvalue, without
/// cancellation. Returns `None` when the matrix is a multiple of identity.
fn minor_axis(a: f64, b: f64, d: f64) -> Option<(f64, f64, f64)> {
    let h = 0.5 * (a - d);
    let big_r = h.hypot(b);
    if big_r == 0.0 {
        return None;
    }
    let y = 1.0 / (0.5 * (a + d) + big_r);
    let (c2, s2) = if h >= 0.0 {
        (b * b / (2.0 * big_r * (big_r + h)), (big_r + h) / (2.0 * big_r))
    } else {
        ((big_r - h) / (2.0 * big_r), b * b / (2.0 * big_r * (big_r - h)))
    };
    Some((y, c2, s2))
}

/// Decomposes `S(e^{-r}) P(k)` as `R(zeta) S(e^{-xi}) R(epsilon)`.
pub fn decompose_squeeze_shear(r: f64, k: f64) -> GaussianDecomposition {
    let g = (-r).exp();
    let target = Matrix2::new(g, 0.0, 0.0, 1.0 / g) * shear_matrix(k);
    let g2 = g * g;
    // M M^T and M^T M share eigenvalues; their minor axes fix zeta and epsilon.
    let Some((y, cz2, sz2)) = minor_axis(g2, k, (1.0 + k * k) / g2) else {
        return GaussianDecomposition::IDENTITY;
    };
    let (_, ce2, se2) = minor_axis(g2 + k * k / g2, k / g2, 1.0 / g2)
        .expect("M^T M has the same spectrum as M M^T");
    let xi = -0.5 * y.ln();
    let cz = cz2.sqrt();
    let (sz, ce, se) = (sz2.sqrt(), ce2.sqrt(), se2.sqrt());

    let mut best: Option<(f64, GaussianDecomposition)> = None;
    for sign_sz in [1.0, -1.0] {
        for sign_ce in [1.0, -1.0] {
            for sign_se in [1.0, -1.0] {
                let cand = GaussianDecomposition {
                    zeta: (sign_sz * sz).atan2(cz),
                    xi,
                    epsilon: (sign_se * se).atan2(sign_ce * ce),
                };
                let err = cand.reconstruction_error(&target);
                if best.is_none_or(|(e, _)| err < e) {
                    best = Some((err, cand));
                }
            }
        }
    }
    let (err, dec) = best.expect("sign search is non-empty");
    debug_assert!(
        err <= RECONSTRUCTION_TOL * target.amax().max(1.0),
        "decomposition of S(e^-{r})P({k}) failed: residual {err:e}"
    );
    dec
}

/// Decomposes the shear `P(k)` as `R(zeta) S(e^{-xi}) R(epsilon)` with
/// `epsilon = zeta +/- pi/2`.
pub fn decompose_shear(k: f64) -> GaussianDecomposition {
    if k == 0.0 {
        return GaussianDecomposition::IDENTITY;
    }
    let root = (4.0 + k * k).sqrt();
    // e^{-2 xi}; the k > 0 branch is rewritten to avoid cancellation.
    let y = if k > 0.0 {
        2.0 / (2.0 + k * k + k * root)
    } else {
        0.5 * (2.0 + k * k - k * root)
    };
    let xi = -0.5 * y.ln();
    let zeta0 = (1.0 / (y + 1.0).sqrt()).acos();
    let target = shear_matrix(k);
    let half_pi = std::f64::consts::FRAC_PI_2;
    [zeta0, -zeta0]
        .into_iter()
        .flat_map(|zeta| {
            [zeta + half_pi, zeta - half_pi].map(|epsilon| GaussianDecomposition { zeta, xi, epsilon })
        })
        .min_by(|a, b| {
            a.reconstruction_error(&target)
                .total_cmp(&b.reconstruction_error(&target))
        })
        .expect("branch search is non-empty")
}
