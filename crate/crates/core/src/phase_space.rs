//! Phase-space description of the squeezed output state.
//!
//! The channel output is the ideally squeezed input convolved with a
//! Gaussian of covariance `sigma` in `(x, p)`. In characteristic-function
//! form this is the product `chi_in(xi) * exp(-v^T sigma v)` with
//! `v = (Im xi, -Re xi)`, the phase-space direction dual to `xi` under the
//! displacement `D(xi) = exp(xi a^dag - xi^* a)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::quadrature::gauss_hermite;

/// Gauss-Hermite order per axis used for fidelities.
pub const FIDELITY_ORDER: usize = 80;
/// Order used to confirm convergence of [`FIDELITY_ORDER`].
pub const FIDELITY_CHECK_ORDER: usize = 120;
const CONVERGENCE_TOL: f64 = 1e-8;

/// Input state of the squeezer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhotonState {
    Vacuum,
    SinglePhoton,
}

impl PhotonState {
    pub const ALL: [PhotonState; 2] = [PhotonState::Vacuum, PhotonState::SinglePhoton];

    pub fn photon_number(&self) -> usize {
        match self {
            PhotonState::Vacuum => 0,
            PhotonState::SinglePhoton => 1,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PhotonState::Vacuum => "vacuum",
            PhotonState::SinglePhoton => "single-photon",
        }
    }
}

impl fmt::Display for PhotonState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhotonState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "vacuum" | "0" => Ok(PhotonState::Vacuum),
            "single-photon" | "singlephoton" | "photon" | "1" => Ok(PhotonState::SinglePhoton),
            other => Err(Error::Domain(format!("unknown input state '{other}'"))),
        }
    }
}

/// Squeezed input state with additive Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedState {
    state: PhotonState,
    s: f64,
    sigma: Matrix2<f64>,
}

impl TransformedState {
    pub fn new(state: PhotonState, s: f64, sigma: Matrix2<f64>) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!("squeezing scale {s} must be positive")));
        }
        let scale = sigma.amax().max(1.0);
        if (sigma[(0, 1)] - sigma[(1, 0)]).abs() > 1e-12 * scale
            || sigma[(0, 0)] < -1e-12 * scale
            || sigma[(1, 1)] < -1e-12 * scale
            || sigma.determinant() < -1e-12 * scale * scale
        {
            return Err(Error::Domain(format!("noise matrix {sigma:?} is not symmetric PSD")));
        }
        Ok(Self { state, s, sigma })
    }

    pub fn from_model(state: PhotonState, model: &NoiseModel) -> Result<Self> {
        Self::new(state, model.s, model.sigma)
    }

    pub fn state(&self) -> PhotonState {
        self.state
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn sigma(&self) -> &Matrix2<f64> {
        &self.sigma
    }

    /// Covariance of the ideally squeezed vacuum, `diag(s^2/2, 1/(2 s^2))`.
    pub fn target_covariance(&self) -> Matrix2<f64> {
        let s2 = self.s * self.s;
        Matrix2::new(0.5 * s2, 0.0, 0.0, 0.5 / s2)
    }

    /// Wigner function of the output state at `(x, p)`.
    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        let a = self.target_covariance();
        let c = a + self.sigma;
        let c_inv = c.try_inverse().expect("A + sigma is positive definite");
        let v = Vector2::new(x, p);
        let gauss = (-0.5 * v.dot(&(c_inv * v))).exp() / (2.0 * PI * c.determinant().sqrt());
        match self.state {
            PhotonState::Vacuum => gauss,
            PhotonState::SinglePhoton => {
                let m = c_inv * a * c_inv;
                gauss * (1.0 - (c_inv * a).trace() + v.dot(&(m * v)))
            }
        }
    }

    /// `W(0, 0)`, the negativity witness.
    pub fn wigner_origin(&self) -> f64 {
        self.wigner(0.0, 0.0)
    }

    fn squeezed_norm(&self, xi: Complex64) -> f64 {
        let s2 = self.s * self.s;
        xi.re * xi.re / s2 + s2 * xi.im * xi.im
    }

    /// Characteristic function of the output state.
    pub fn characteristic(&self, xi: Complex64) -> Complex64 {
        let alpha_sq = self.squeezed_norm(xi);
        let input = (-0.5 * alpha_sq).exp()
            * match self.state {
                PhotonState::Vacuum => 1.0,
                PhotonState::SinglePhoton => 1.0 - alpha_sq,
            };
        let v = Vector2::new(xi.im, -xi.re);
        Complex64::new(input * (-v.dot(&(self.sigma * v))).exp(), 0.0)
    }

    /// Fidelity with the ideally squeezed input, with a convergence check.
    pub fn fidelity(&self) -> Result<f64> {
        let f = self.fidelity_with_order(FIDELITY_ORDER);
        let check = self.fidelity_with_order(FIDELITY_CHECK_ORDER);
        if (f - check).abs() > CONVERGENCE_TOL {
            return Err(Error::Accuracy(format!(
                "fidelity did not converge: {f} at order {FIDELITY_ORDER}, {check} at order {FIDELITY_CHECK_ORDER}"
            )));
        }
        Ok(f)
    }

    /// Fidelity `(1/pi) int G |chi_in|^2` by an `order x order` Gauss-Hermite
    /// rule along the principal axes of the combined exponent.
    pub fn fidelity_with_order(&self, order: usize) -> f64 {
        let s2 = self.s * self.s;
        let k = Matrix2::new(s2, 0.0, 0.0, 1.0 / s2);
        let q = k + self.sigma;
        let eig = q.symmetric_eigen();
        // v = U diag(lambda^{-1/2}) w turns v^T Q v into |w|^2.
        let b = eig.eigenvectors * Matrix2::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let h = b.transpose() * k * b;
        let norm = 1.0 / (PI * eig.eigenvalues.product().sqrt());
        let rule = gauss_hermite(order);
        let sum = match self.state {
            PhotonState::Vacuum => {
                let w: f64 = rule.weights.iter().sum();
                w * w
            }
            PhotonState::SinglePhoton => {
                let (h00, h01, h11) = (h[(0, 0)], h[(0, 1)], h[(1, 1)]);
                let mut total = 0.0;
                for (&a, &wa) in rule.nodes.iter().zip(&rule.weights) {
                    let mut row = 0.0;
                    for (&c, &wc) in rule.nodes.iter().zip(&rule.weights) {
                        let quad = h00 * a * a + 2.0 * h01 * a * c + h11 * c * c;
                        let one_minus = 1.0 - quad;
                        row += wc * one_minus * one_minus;
                    }
                    total += wa * row;
                }
                total
            }
        };
        (norm * sum).clamp(0.0, 1.0)
    }
}

/// Density of the noise displacement distribution `N(0, sigma)`.
pub fn noise_density(sigma: &Matrix2<f64>, x: f64, p: f64) -> f64 {
    let inv = sigma.try_inverse().expect("noise matrix must be invertible");
    let v = Vector2::new(x, p);
    (-0.5 * v.dot(&(inv * v))).exp() / (2.0 * PI * sigma.determinant().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ts(state: PhotonState, s: f64, sigma: Matrix2<f64>) -> TransformedState {
        TransformedState::new(state, s, sigma).unwrap()
    }

    /// Noiseless input Wigner functions.
    fn input_wigner(state: PhotonState, s: f64, x: f64, p: f64) -> f64 {
        let e = x * x / (s * s) + s * s * p * p;
        let poly = match state {
            PhotonState::Vacuum => 1.0,
            PhotonState::SinglePhoton => 2.0 * e - 1.0,
        };
        poly * (-e).exp() / PI
    }

    /// Convolution of the input Wigner function with the noise density by a
    /// composite midpoint rule on a large box.
    fn convolution_oracle(state: PhotonState, s: f64, sigma: Matrix2<f64>, x: f64, p: f64) -> f64 {
        let n = 1200;
        let half = 7.0;
        let h = 2.0 * half / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let u = -half + (i as f64 + 0.5) * h;
            for j in 0..n {
                let w = -half + (j as f64 + 0.5) * h;
                total += input_wigner(state, s, u, w) * noise_density(&sigma, x - u, p - w);
            }
        }
        total * h * h
    }

    /// Closed-form Gaussian-moment evaluation of the single-photon fidelity.
    fn single_photon_moment_fidelity(s: f64, sigma: Matrix2<f64>) -> f64 {
        let k = Matrix2::new(s * s, 0.0, 0.0, 1.0 / (s * s));
        let q = k + sigma;
        let cov = q.try_inverse().unwrap() * 0.5;
        let ks = k * cov;
        let t = ks.trace();
        (1.0 - 2.0 * t + t * t + 2.0 * (ks * ks).trace()) / q.determinant().sqrt()
    }

    #[test]
    fn wigner_examples() {
        let zero = Matrix2::zeros();
        assert_abs_diff_eq!(ts(PhotonState::Vacuum, 1.0, zero).wigner_origin(), 1.0 / PI, epsilon = 1e-15);
        for s in [0.3, 0.7, 1.0] {
            assert_abs_diff_eq!(
                ts(PhotonState::SinglePhoton, s, zero).wigner_origin(),
                -1.0 / PI,
                epsilon = 1e-14
            );
            for (x, p) in [(0.3, -0.2), (1.1, 0.4)] {
                for state in PhotonState::ALL {
                    assert_abs_diff_eq!(
                        ts(state, s, zero).wigner(x, p),
                        input_wigner(state, s, x, p),
                        epsilon = 1e-14
                    );
                }
            }
        }
    }

    #[test]
    fn wigner_matches_convolution_quadrature() {
        let cases = [
            (PhotonState::SinglePhoton, 1.0, Matrix2::identity() * 0.15, 0.0, 0.0),
            (PhotonState::SinglePhoton, 1.0, Matrix2::identity() * 0.3, 0.4, -0.2),
            (PhotonState::SinglePhoton, 0.6, Matrix2::new(0.2, 0.05, 0.05, 0.1), 0.1, 0.3),
            (PhotonState::Vacuum, 0.6, Matrix2::new(0.2, -0.05, -0.05, 0.4), -0.2, 0.5),
        ];
        for (state, s, sigma, x, p) in cases {
            let closed = ts(state, s, sigma).wigner(x, p);
            let oracle = convolution_oracle(state, s, sigma, x, p);
            assert_abs_diff_eq!(closed, oracle, epsilon = 1e-8);
        }
    }

    #[test]
    fn wigner_is_normalised() {
        let rule = crate::quadrature::gauss_hermite(60);
        for state in PhotonState::ALL {
            let t = ts(state, 0.6, Matrix2::new(0.2, 0.05, 0.05, 0.1));
            // Integrate with the weight exp(-x^2 - p^2) divided out, on scaled axes.
            let (ax, ap) = (2.0, 2.0);
            let mut total = 0.0;
            for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
                for (&v, &wv) in rule.nodes.iter().zip(&rule.weights) {
                    let (x, p) = (ax * u, ap * v);
                    total += wu * wv * t.wigner(x, p) * (u * u + v * v).exp();
                }
            }
            assert_abs_diff_eq!(total * ax * ap, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn characteristic_examples() {
        let zero = Matrix2::zeros();
        for state in PhotonState::ALL {
            let t = ts(state, 0.5, Matrix2::new(0.3, 0.1, 0.1, 0.2));
            assert_abs_diff_eq!(t.characteristic(Complex64::new(0.0, 0.0)).re, 1.0);
        }
        let vac = ts(PhotonState::Vacuum, 1.0, zero);
        assert_abs_diff_eq!(vac.characteristic(Complex64::new(1.0, 0.0)).re, (-0.5f64).exp(), epsilon = 1e-15);
        let s = 0.5;
        let one = ts(PhotonState::SinglePhoton, s, Matrix2::identity() * 0.1);
        // |alpha|^2 = 1 on the node Re xi = s.
        assert_abs_diff_eq!(one.characteristic(Complex64::new(s, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        for state in PhotonState::ALL {
            for s in [0.2, 0.6, 1.0] {
                assert_abs_diff_eq!(ts(state, s, Matrix2::zeros()).fidelity().unwrap(), 1.0, epsilon = 1e-12);
            }
        }
        let v = 0.5 * 10f64.powf(-0.9);
        let f = ts(PhotonState::Vacuum, 1.0, Matrix2::identity() * (2.0 * v)).fidelity().unwrap();
        assert_abs_diff_eq!(f, 1.0 / (1.0 + 2.0 * v), epsilon = 1e-12);
        assert_abs_diff_eq!(f, 0.88818, epsilon = 1e-5);

        for sig in [0.05, 0.3, 1.2] {
            let sigma = Matrix2::identity() * sig;
            let f = ts(PhotonState::SinglePhoton, 1.0, sigma).fidelity().unwrap();
            assert_abs_diff_eq!(f, single_photon_moment_fidelity(1.0, sigma), epsilon = 1e-9);
        }
    }

    #[test]
    fn fidelity_penalises_noise_in_the_squeezed_quadrature() {
        let s = 0.4;
        let x_noise = ts(PhotonState::Vacuum, s, Matrix2::new(0.1, 0.0, 0.0, 0.0)).fidelity().unwrap();
        let p_noise = ts(PhotonState::Vacuum, s, Matrix2::new(0.0, 0.0, 0.0, 0.1)).fidelity().unwrap();
        assert!(x_noise < p_noise);
        assert_abs_diff_eq!(x_noise, 1.0 / (1.0 + 0.1 / (s * s)).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn isotropic_noise_lowers_fidelity_monotonically() {
        for state in PhotonState::ALL {
            let mut last = 1.0 + 1e-12;
            for i in 0..=40 {
                let lambda = 0.05 * i as f64;
                let f = ts(state, 0.5, Matrix2::identity() * lambda).fidelity().unwrap();
                assert!(f <= last, "fidelity increased at lambda = {lambda}");
                last = f;
            }
        }
    }

    #[test]
    fn state_parsing() {
        assert_eq!("vacuum".parse::<PhotonState>().unwrap(), PhotonState::Vacuum);
        assert_eq!("single_photon".parse::<PhotonState>().unwrap(), PhotonState::SinglePhoton);
        assert!("cat".parse::<PhotonState>().is_err());
        assert!(TransformedState::new(PhotonState::Vacuum, 0.0, Matrix2::zeros()).is_err());
        assert!(TransformedState::new(PhotonState::Vacuum, 0.5, Matrix2::new(-1.0, 0.0, 0.0, 1.0)).is_err());
    }

    fn psd() -> impl Strategy<Value = Matrix2<f64>> {
        (0.0f64..1.5, 0.0f64..1.5, -1.0f64..1.0).prop_map(|(a, b, rho)| {
            let c = rho * (a * b).sqrt();
            Matrix2::new(a, c, c, b)
        })
    }

    proptest! {
        #[test]
        fn fidelity_bounds_and_vacuum_closed_form(s in 0.2f64..1.0, sigma in psd()) {
            for state in PhotonState::ALL {
                let t = ts(state, s, sigma);
                let f = t.fidelity().unwrap();
                prop_assert!((0.0..=1.0).contains(&f));
                let doubled = t.fidelity_with_order(2 * FIDELITY_ORDER);
                prop_assert!((f - doubled).abs() < 1e-9);
            }
            let k = Matrix2::new(s * s, 0.0, 0.0, 1.0 / (s * s));
            let f = ts(PhotonState::Vacuum, s, sigma).fidelity().unwrap();
            prop_assert!((f - 1.0 / (k + sigma).determinant().sqrt()).abs() < 1e-10);
            let f1 = ts(PhotonState::SinglePhoton, s, sigma).fidelity().unwrap();
            prop_assert!((f1 - single_photon_moment_fidelity(s, sigma)).abs() < 1e-9);
            if sigma.amax() > 1e-6 {
                prop_assert!(f < 1.0 - 1e-9);
            }
        }

        #[test]
        fn characteristic_is_hermitian(s in 0.2f64..1.0, sigma in psd(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
            for state in PhotonState::ALL {
                let t = ts(state, s, sigma);
                let xi = Complex64::new(re, im);
                let a = t.characteristic(-xi);
                let b = t.characteristic(xi).conj();
                prop_assert!((a - b).norm() < 1e-15);
            }
        }
    }
}
