//! Fock-basis reconstruction of the output state as a Gaussian mixture of
//! displaced squeezed inputs.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phase_space::PhotonState;
use crate::quadrature::gauss_hermite;

pub const DEFAULT_DIM: usize = 40;
pub const DEFAULT_QUAD_ORDER: usize = 60;
/// Largest tolerated missing probability of a reconstruction.
pub const MAX_TRACE_DEFICIT: f64 = 1e-3;

/// Truncated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    pub dim: usize,
    pub quad_order: usize,
    pub elements: DMatrix<Complex64>,
    /// `1 - trace`, the probability lost above the truncation.
    pub trace_deficit: f64,
}

impl FockDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.elements.diagonal().iter().map(|z| z.re).sum()
    }

    /// `<t| rho |t>` for a column vector of the same dimension.
    pub fn expectation(&self, target: &DVector<Complex64>) -> Result<f64> {
        if target.len() != self.dim {
            return Err(Error::Domain(format!(
                "target has dimension {}, density matrix {}",
                target.len(),
                self.dim
            )));
        }
        Ok(target.dotc(&(&self.elements * target)).re)
    }

    /// Overlap with the ideally squeezed input of the given state.
    pub fn fidelity_with_target(&self, state: PhotonState, s: f64) -> Result<f64> {
        let target = column(0.0, 0.0, s, state, self.dim)?;
        self.expectation(&target)
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.elements
            .diagonal()
            .iter()
            .enumerate()
            .map(|(n, z)| n as f64 * z.re)
            .sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.elements - self.elements.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.elements + self.elements.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().min()
    }
}

/// Fock coefficients of `D(x0, p0) S |n>` with `S` scaling `x` by `s`,
/// returning the vector together with its missing norm.
fn column_with_deficit(
    x0: f64,
    p0: f64,
    s: f64,
    state: PhotonState,
    dim: usize,
) -> Result<(DVector<Complex64>, f64)> {
    if dim < 2 {
        return Err(Error::Domain(format!("Fock dimension {dim} must be at least 2")));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("squeezing scale {s} must be positive")));
    }
    let c = s.ln().cosh();
    let sh = s.ln().sinh();
    let alpha = Complex64::new(x0, p0) / 2f64.sqrt();
    let drive = alpha * c - alpha.conj() * sh;

    // The displaced squeezed vacuum is annihilated by c (a - alpha) - sh (a^dag - alpha^*).
    let len = dim + 1;
    let mut vac = vec![Complex64::new(0.0, 0.0); len];
    vac[0] = (-0.5 * alpha.norm_sqr() + 0.5 * (sh / c) * alpha.conj() * alpha.conj()).exp() / c.sqrt();
    for n in 0..len - 1 {
        let prev = if n > 0 { vac[n - 1] * (sh * (n as f64).sqrt()) } else { Complex64::new(0.0, 0.0) };
        vac[n + 1] = (drive * vac[n] + prev) / (c * ((n + 1) as f64).sqrt());
    }

    let coeffs: Vec<Complex64> = match state {
        PhotonState::Vacuum => vac[..dim].to_vec(),
        PhotonState::SinglePhoton => (0..dim)
            .map(|n| {
                // c (a^dag - alpha^*) - sh (a - alpha) applied to the vacuum column.
                let create = if n > 0 { vac[n - 1] * (n as f64).sqrt() } else { Complex64::new(0.0, 0.0) };
                let annihilate = vac[n + 1] * ((n + 1) as f64).sqrt();
                (create - alpha.conj() * vac[n]) * c - (annihilate - alpha * vac[n]) * sh
            })
            .collect(),
    };
    let v = DVector::from_vec(coeffs);
    let deficit = 1.0 - v.norm_squared();
    Ok((v, deficit))
}

fn column(x0: f64, p0: f64, s: f64, state: PhotonState, dim: usize) -> Result<DVector<Complex64>> {
    column_with_deficit(x0, p0, s, state, dim).map(|(v, _)| v)
}

/// Fock coefficients of the displaced, squeezed input state up to `dim`.
///
/// A warning is logged when the truncation drops more than
/// [`MAX_TRACE_DEFICIT`] of the norm.
pub fn displaced_squeezed_column(
    x0: f64,
    p0: f64,
    s: f64,
    state: PhotonState,
    dim: usize,
) -> Result<DVector<Complex64>> {
    let (v, deficit) = column_with_deficit(x0, p0, s, state, dim)?;
    if deficit > MAX_TRACE_DEFICIT {
        log::warn!("Fock column truncated at dim {dim} misses {deficit:.3e} of its norm");
    }
    Ok(v)
}

/// Output density matrix `int N(v; 0, sigma) |psi(v)><psi(v)| dv` with
/// `|psi(v)> = D(v) S |n>`, integrated by Gauss-Hermite along the principal
/// axes of `sigma`.
pub fn reconstruct_rho(
    state: PhotonState,
    s: f64,
    sigma: &Matrix2<f64>,
    dim: usize,
    quad_order: usize,
) -> Result<FockDensityMatrix> {
    if quad_order == 0 {
        return Err(Error::Domain("quadrature order must be positive".into()));
    }
    let eig = sigma.symmetric_eigen();
    let scale = sigma.amax();
    if eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale.max(1.0)) {
        return Err(Error::Domain(format!("noise matrix {sigma:?} is not PSD")));
    }
    // Axes with vanishing variance collapse to a single node.
    let rule = gauss_hermite(quad_order);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..2)
        .map(|i| {
            let l = eig.eigenvalues[i];
            if l <= 1e-14 * scale.max(1e-300) || l <= 0.0 {
                (vec![0.0], vec![1.0])
            } else {
                let w = (2.0 * l).sqrt();
                (
                    rule.nodes.iter().map(|x| x * w).collect(),
                    rule.weights.iter().map(|w| w / sqrt_pi).collect(),
                )
            }
        })
        .collect();
    let u = eig.eigenvectors;

    let partials: Vec<Result<DMatrix<Complex64>>> = axes[0]
        .0
        .par_iter()
        .zip(axes[0].1.par_iter())
        .map(|(&a, &wa)| {
            let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
            for (&b, &wb) in axes[1].0.iter().zip(&axes[1].1) {
                let x = u[(0, 0)] * a + u[(0, 1)] * b;
                let p = u[(1, 0)] * a + u[(1, 1)] * b;
                let psi = column(x, p, s, state, dim)?;
                acc.gerc(Complex64::new(wa * wb, 0.0), &psi, &psi, Complex64::new(1.0, 0.0));
            }
            Ok(acc)
        })
        .collect();
    let mut elements = DMatrix::<Complex64>::zeros(dim, dim);
    for part in partials {
        elements += part?;
    }
    let trace: f64 = elements.diagonal().iter().map(|z| z.re).sum();
    let trace_deficit = 1.0 - trace;
    if trace_deficit > MAX_TRACE_DEFICIT {
        return Err(Error::Truncation {
            dim,
            deficit: trace_deficit,
            suggested_dim: 2 * dim,
        });
    }
    Ok(FockDensityMatrix {
        dim,
        quad_order,
        elements,
        trace_deficit,
    })
}

/// Photon-number distribution, clipped at zero and not renormalised.
pub fn photostatistics(rho: &FockDensityMatrix) -> Vec<f64> {
    rho.elements.diagonal().iter().map(|z| z.re.max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ladder(dim: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(dim, dim, |i, j| {
            if j == i + 1 {
                Complex64::new((j as f64).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `D(alpha) S(r) |n>` from truncated operator exponentials.
    fn exponential_oracle(x0: f64, p0: f64, s: f64, n: usize, big: usize) -> DVector<Complex64> {
        let a = ladder(big);
        let ad = a.adjoint();
        let alpha = Complex64::new(x0, p0) / 2f64.sqrt();
        let r = Complex64::new(-s.ln(), 0.0);
        let half = Complex64::new(0.5, 0.0);
        let squeeze = ((&a * &a) * (half * r) - (&ad * &ad) * (half * r)).exp();
        let displace = (&ad * alpha - &a * alpha.conj()).exp();
        let mut e = DVector::zeros(big);
        e[n] = Complex64::new(1.0, 0.0);
        displace * squeeze * e
    }

    fn quadrature_variances(v: &DVector<Complex64>) -> (f64, f64) {
        let dim = v.len();
        let a = ladder(dim);
        let ad = a.adjoint();
        let r2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let x = (&a + &ad) * r2;
        let p = (&a - &ad) * Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2);
        let mean = |op: &DMatrix<Complex64>| v.dotc(&(op * v)).re;
        let (mx, mp) = (mean(&x), mean(&p));
        (mean(&(&x * &x)) - mx * mx, mean(&(&p * &p)) - mp * mp)
    }

    #[test]
    fn trivial_columns() {
        let v = displaced_squeezed_column(0.0, 0.0, 1.0, PhotonState::Vacuum, 6).unwrap();
        assert_abs_diff_eq!(v[0].re, 1.0, epsilon = 1e-15);
        assert!(v.iter().skip(1).all(|z| z.norm() < 1e-15));
        let v = displaced_squeezed_column(0.0, 0.0, 1.0, PhotonState::SinglePhoton, 6).unwrap();
        assert_abs_diff_eq!(v[1].re, 1.0, epsilon = 1e-15);
        assert!(v.iter().enumerate().all(|(n, z)| n == 1 || z.norm() < 1e-15));
        assert!(displaced_squeezed_column(0.0, 0.0, 1.0, PhotonState::Vacuum, 1).is_err());
    }

    #[test]
    fn coherent_state_coefficients() {
        let v = displaced_squeezed_column(1.0, 0.0, 1.0, PhotonState::Vacuum, 20).unwrap();
        let alpha = std::f64::consts::FRAC_1_SQRT_2;
        let mut fact = 1.0;
        for n in 0..20 {
            if n > 0 {
                fact *= n as f64;
            }
            let exact = (-0.5 * alpha * alpha).exp() * alpha.powi(n as i32) / fact.sqrt();
            assert_abs_diff_eq!(v[n].re, exact, epsilon = 1e-15);
            assert_abs_diff_eq!(v[n].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn squeezed_vacuum_closed_form() {
        let s: f64 = 0.5;
        let r = -s.ln();
        let v = displaced_squeezed_column(0.0, 0.0, s, PhotonState::Vacuum, 30).unwrap();
        let mut ratio = 1.0;
        for m in 0..15 {
            if m > 0 {
                ratio *= ((2 * m - 1) as f64 / (2 * m) as f64).sqrt();
            }
            let exact = (-r.tanh()).powi(m as i32) * ratio / r.cosh().sqrt();
            assert_abs_diff_eq!(v[2 * m].re, exact, epsilon = 1e-14);
            assert_abs_diff_eq!(v[2 * m + 1].norm(), 0.0, epsilon = 1e-15);
        }
        let (vx, vp) = quadrature_variances(&v);
        assert_abs_diff_eq!(vx, 0.5 * s * s, epsilon = 1e-6);
        assert_abs_diff_eq!(vp, 0.5 / (s * s), epsilon = 1e-4);
    }

    #[test]
    fn recurrence_matches_operator_exponentials() {
        for (x0, p0, s) in [(0.7, -0.4, 0.6), (1.5, 1.1, 0.35), (-2.0, 0.3, 0.5), (0.2, -1.8, 1.0)] {
            for state in PhotonState::ALL {
                let dim = 40;
                let v = displaced_squeezed_column(x0, p0, s, state, dim).unwrap();
                let oracle = exponential_oracle(x0, p0, s, state.photon_number(), 160);
                for n in 0..dim {
                    assert_abs_diff_eq!(v[n].re, oracle[n].re, epsilon = 1e-10);
                    assert_abs_diff_eq!(v[n].im, oracle[n].im, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn noiseless_single_photon_is_pure() {
        let rho = reconstruct_rho(PhotonState::SinglePhoton, 1.0, &Matrix2::zeros(), 10, 20).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let expect = if i == 1 && j == 1 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(rho.elements[(i, j)].norm(), expect, epsilon = 1e-10);
            }
        }
        let p = photostatistics(&rho);
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-12);
        let rho = reconstruct_rho(PhotonState::Vacuum, 1.0, &Matrix2::zeros(), 10, 20).unwrap();
        assert_abs_diff_eq!(photostatistics(&rho)[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn thermal_like_mean_photon_number() {
        for sigma in [0.05, 0.2, 0.5] {
            let rho = reconstruct_rho(PhotonState::Vacuum, 1.0, &(Matrix2::identity() * sigma), 40, 60).unwrap();
            assert_abs_diff_eq!(rho.mean_photon_number(), sigma, epsilon = 1e-6);
            let p = photostatistics(&rho);
            // Thermal distribution with mean sigma.
            for (n, pn) in p.iter().enumerate().take(8) {
                let exact = sigma.powi(n as i32) / (1.0 + sigma).powi(n as i32 + 1);
                assert_abs_diff_eq!(*pn, exact, epsilon = 1e-9);
            }
            assert_abs_diff_eq!(p.iter().sum::<f64>(), rho.trace(), epsilon = 1e-12);
            assert!(rho.trace_deficit < 1e-6);
        }
    }

    #[test]
    fn reconstruction_is_hermitian_and_positive() {
        let sigma = Matrix2::new(0.3, 0.08, 0.08, 0.12);
        for state in PhotonState::ALL {
            let rho = reconstruct_rho(state, 0.6, &sigma, 40, 60).unwrap();
            assert!(rho.hermiticity_defect() < 1e-12);
            assert!(rho.min_eigenvalue() > -1e-8);
            assert!(rho.elements.diagonal().iter().all(|z| z.re >= -1e-12));
        }
    }

    #[test]
    fn truncation_is_reported() {
        let err = reconstruct_rho(PhotonState::SinglePhoton, 0.2, &(Matrix2::identity() * 2.0), 6, 20).unwrap_err();
        assert!(matches!(err, Error::Truncation { dim: 6, suggested_dim: 12, .. }));
    }

    #[test]
    fn fock_fidelity_matches_phase_space() {
        let sigma = Matrix2::new(0.15, 0.03, 0.03, 0.25);
        for state in PhotonState::ALL {
            let rho = reconstruct_rho(state, 0.7, &sigma, 40, 60).unwrap();
            let f_fock = rho.fidelity_with_target(state, 0.7).unwrap();
            let ts = crate::phase_space::TransformedState::new(state, 0.7, sigma).unwrap();
            assert_abs_diff_eq!(f_fock, ts.fidelity().unwrap(), epsilon = 1e-6);
        }
    }
}
