//! Closed-form squeezing parameter, feed-forward gains and added-noise
//! matrix of the four teleportation-based squeezers.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{decompose_squeeze_shear, GaussianDecomposition};

/// Tolerance used when substituting an inverted configuration back.
pub const INVERSION_TOL: f64 = 1e-12;

/// Squeezer layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Balanced beam splitters with a homodyne phase shift.
    #[serde(rename = "PS")]
    Ps,
    /// Unbalanced beam splitters, no phase shift.
    #[serde(rename = "BS")]
    Bs,
    /// Unbalanced beam splitters and a phase shift.
    #[serde(rename = "BSPS")]
    Bsps,
    /// Measurement-induced pre-squeezer followed by balanced teleportation.
    #[serde(rename = "BAS")]
    Bas,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Ps, Variant::Bs, Variant::Bsps, Variant::Bas];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Ps => "PS",
            Variant::Bs => "BS",
            Variant::Bsps => "BSPS",
            Variant::Bas => "BAS",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PS" => Ok(Variant::Ps),
            "BS" => Ok(Variant::Bs),
            "BSPS" => Ok(Variant::Bsps),
            "BAS" => Ok(Variant::Bas),
            other => Err(Error::Domain(format!("unknown variant '{other}'"))),
        }
    }
}

/// Resource squeezing and loss figures shared by all variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resources {
    /// Resource squeezing in dB below vacuum.
    pub resource_db: f64,
    /// Source transmissivity.
    pub eta_s: f64,
    /// Homodyne detection efficiency.
    pub eta_h: f64,
}

impl Resources {
    pub fn new(resource_db: f64, eta_s: f64, eta_h: f64) -> Self {
        Self {
            resource_db,
            eta_s,
            eta_h,
        }
    }

    pub fn lossless(resource_db: f64) -> Self {
        Self::new(resource_db, 1.0, 1.0)
    }

    /// Variance of the squeezed quadrature of each resource state.
    pub fn squeezed_variance(&self) -> f64 {
        0.5 * 10f64.powf(-self.resource_db / 10.0)
    }

    /// Variance of the anti-squeezed quadrature of each resource state.
    pub fn antisqueezed_variance(&self) -> f64 {
        0.25 / self.squeezed_variance()
    }

    /// Squeezed variance after the source loss.
    pub fn lossy_squeezed_variance(&self) -> f64 {
        self.squeezed_variance() * self.eta_s + 0.5 * (1.0 - self.eta_s)
    }

    /// Detector noise scale `(1 - eta_H) / eta_H`.
    pub fn detector_factor(&self) -> f64 {
        (1.0 - self.eta_h) / self.eta_h
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resource_db >= 0.0 && self.resource_db.is_finite()) {
            return Err(Error::Domain(format!(
                "resource squeezing {} dB must be finite and non-negative",
                self.resource_db
            )));
        }
        for (name, eta) in [("eta_s", self.eta_s), ("eta_h", self.eta_h)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Domain(format!("{name} = {eta} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Full parameter set of one squeezer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezerConfig {
    pub variant: Variant,
    pub t1: f64,
    pub t2: f64,
    pub t0: f64,
    pub phi: f64,
    pub resource_db: f64,
    pub eta_s: f64,
    pub eta_h: f64,
}

impl SqueezerConfig {
    fn with(variant: Variant, t1: f64, t2: f64, t0: f64, phi: f64, res: Resources) -> Self {
        Self {
            variant,
            t1,
            t2,
            t0,
            phi,
            resource_db: res.resource_db,
            eta_s: res.eta_s,
            eta_h: res.eta_h,
        }
    }

    pub fn ps(phi: f64, res: Resources) -> Self {
        Self::with(Variant::Ps, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 1.0, phi, res)
    }

    pub fn bs(t1: f64, t2: f64, res: Resources) -> Self {
        Self::with(Variant::Bs, t1, t2, 1.0, 0.0, res)
    }

    pub fn bsps(t1: f64, t2: f64, phi: f64, res: Resources) -> Self {
        Self::with(Variant::Bsps, t1, t2, 1.0, phi, res)
    }

    pub fn bas(t0: f64, res: Resources) -> Self {
        Self::with(Variant::Bas, FRAC_1_SQRT_2, FRAC_1_SQRT_2, t0, 0.0, res)
    }

    /// Balanced teleporter with no phase shift, the PS layout at `phi = 0`.
    pub fn balanced(res: Resources) -> Self {
        Self::ps(0.0, res)
    }

    pub fn resources(&self) -> Resources {
        Resources::new(self.resource_db, self.eta_s, self.eta_h)
    }

    pub fn r1(&self) -> f64 {
        (1.0 - self.t1 * self.t1).sqrt()
    }

    pub fn r2(&self) -> f64 {
        (1.0 - self.t2 * self.t2).sqrt()
    }

    pub fn r0(&self) -> f64 {
        (1.0 - self.t0 * self.t0).sqrt()
    }

    /// The teleporter stage that follows the pre-squeezer of a BAS config.
    pub fn teleporter(&self) -> SqueezerConfig {
        match self.variant {
            Variant::Bas => SqueezerConfig::balanced(self.resources()),
            _ => *self,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.resources().validate()?;
        for (name, t) in [("t1", self.t1), ("t2", self.t2)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::DegenerateCircuit(format!("{name} = {t} must lie in (0, 1)")));
            }
        }
        if !self.phi.is_finite() {
            return Err(Error::Domain(format!("phase {} is not finite", self.phi)));
        }
        let balanced = (self.t1 - FRAC_1_SQRT_2).abs() < 1e-15 && (self.t2 - FRAC_1_SQRT_2).abs() < 1e-15;
        match self.variant {
            Variant::Ps if !balanced => Err(Error::Domain("PS requires t1 = t2 = 1/sqrt(2)".into())),
            Variant::Bs if self.phi != 0.0 => Err(Error::Domain("BS requires phi = 0".into())),
            Variant::Bas if !balanced || self.phi != 0.0 => Err(Error::Domain(
                "BAS requires a balanced teleporter with phi = 0".into(),
            )),
            Variant::Bas if !(self.t0 > 0.0 && self.t0 <= 1.0) => Err(Error::DegenerateCircuit(format!(
                "t0 = {} must lie in (0, 1]",
                self.t0
            ))),
            _ => Ok(()),
        }
    }

    /// PS config realising the target scale `s`.
    pub fn ps_for_target(s: f64, res: Resources) -> Result<Self> {
        check_target(s)?;
        let l = (1.0 - s * s) / s;
        verified(Self::ps((0.5 * l).atan(), res), s)
    }

    /// BS config realising the target scale `s` for a given `t1`.
    pub fn bs_for_target(s: f64, t1: f64, res: Resources) -> Result<Self> {
        check_target(s)?;
        let r1_sq = 1.0 - t1 * t1;
        let t2 = (r1_sq / (r1_sq + s * s * t1 * t1)).sqrt();
        verified(Self::bs(t1, t2, res), s)
    }

    /// BSPS config realising the target scale `s` for given `(t1, t2)`.
    ///
    /// Requires `s <= g <= 1/s`; the non-negative shear branch is returned.
    pub fn bsps_for_target(s: f64, t1: f64, t2: f64, res: Resources) -> Result<Self> {
        check_target(s)?;
        let probe = Self::bsps(t1, t2, 0.0, res);
        probe.validate()?;
        let g = probe.r1() * probe.r2() / (t1 * t2);
        let slack = INVERSION_TOL * s.max(1.0);
        if g < s - slack || g * s > 1.0 + slack {
            return Err(Error::Infeasible(format!(
                "g = {g} outside [{s}, {}] for t1 = {t1}, t2 = {t2}",
                1.0 / s
            )));
        }
        let k_sq = ((g * g - s * s) * (1.0 - g * g * s * s)).max(0.0) / (s * s);
        let phi = (k_sq.sqrt() * t2 * t2).atan();
        verified(Self::bsps(t1, t2, phi, res), s)
    }

    /// BAS config realising the target scale `s`.
    pub fn bas_for_target(s: f64, res: Resources) -> Result<Self> {
        check_target(s)?;
        verified(Self::bas(s, res), s)
    }
}

fn check_target(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("target scale {s} outside (0, 1]")))
    }
}

fn verified(cfg: SqueezerConfig, s: f64) -> Result<SqueezerConfig> {
    let back = squeezing_parameter(&cfg)?;
    if (back - s).abs() > INVERSION_TOL * s.max(1.0) {
        return Err(Error::Accuracy(format!(
            "inverted {} config gives s = {back}, target {s}",
            cfg.variant
        )));
    }
    Ok(cfg)
}

/// Feed-forward gains for unity signal gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
}

/// Derived quantities of a squeezer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub s: f64,
    pub g: f64,
    pub k: f64,
    pub zeta: f64,
    pub epsilon: f64,
    pub gains: Gains,
    pub sigma: Matrix2<f64>,
}

impl NoiseModel {
    pub fn covariance(&self) -> f64 {
        self.sigma[(0, 1)]
    }
}

/// Gate parameters `(g, k)` of the teleporter stage.
pub fn gate_parameters(cfg: &SqueezerConfig) -> (f64, f64) {
    let tel = cfg.teleporter();
    let g = tel.r1() * tel.r2() / (tel.t1 * tel.t2);
    let k = tel.phi.tan() / (tel.t2 * tel.t2);
    (g, k)
}

/// Effective squeezing scale realised by the config.
pub fn squeezing_parameter(cfg: &SqueezerConfig) -> Result<f64> {
    cfg.validate()?;
    let s = match cfg.variant {
        Variant::Ps => {
            let l = 2.0 * cfg.phi.tan().abs();
            (2.0 / (2.0 + l * l + l * (4.0 + l * l).sqrt())).sqrt()
        }
        Variant::Bs => gate_parameters(cfg).0,
        Variant::Bsps => {
            let (g, k) = gate_parameters(cfg);
            let g2 = g * g;
            let g4 = g2 * g2;
            let k2 = k * k;
            let sum = 1.0 + g4 + k2;
            let root = ((1.0 - g4).powi(2) + 2.0 * (1.0 + g4) * k2 + k2 * k2).sqrt();
            (2.0 * g2 / (sum + root)).sqrt()
        }
        Variant::Bas => cfg.t0,
    };
    Ok(s)
}

/// Unity-gain feed-forward gains `(j1, j2, j3)`.
pub fn gains(cfg: &SqueezerConfig) -> Result<Gains> {
    cfg.validate()?;
    let tel = cfg.teleporter();
    let cos_phi = tel.phi.cos();
    if cos_phi.abs() < 1e-12 {
        return Err(Error::SingularGain(format!("cos(phi) vanishes for phi = {}", tel.phi)));
    }
    let (t1, t2, r1, r2) = (tel.t1, tel.t2, tel.r1(), tel.r2());
    Ok(Gains {
        j1: r1 / (t1 * t2),
        j2: t1 / (r1 * r2 * cos_phi),
        j3: t1 * tel.phi.tan() / (r1 * t2),
    })
}

/// Noise variances and covariance before the compensating output rotation.
fn rotated_noise(cfg: &SqueezerConfig) -> Result<(f64, f64, f64)> {
    cfg.validate()?;
    let tel = cfg.teleporter();
    let res = tel.resources();
    let (g, k) = gate_parameters(&tel);
    let src = res.lossy_squeezed_variance();
    let d = res.detector_factor();
    let (t1, t2, r1, r2) = (tel.t1, tel.t2, tel.r1(), tel.r2());
    let vx = src / (t1 * t1) + d * g * g / (r2 * r2) * 0.5;
    let vp = src / (r1 * r1) + d / (g * g) * 0.5 * (1.0 / (t2 * t2) + k * k);
    Ok((vx, vp, 0.5 * d * k))
}

/// Noise variances `(var N_x, var N_p)` before the compensating rotation.
pub fn rotated_noise_variances(cfg: &SqueezerConfig) -> Result<(f64, f64)> {
    rotated_noise(cfg).map(|(vx, vp, _)| (vx, vp))
}

fn teleporter_model(cfg: &SqueezerConfig) -> Result<NoiseModel> {
    let tel = cfg.teleporter();
    let (g, k) = gate_parameters(&tel);
    let gains = gains(&tel)?;
    let (vx, vp, cp) = rotated_noise(&tel)?;
    let compensated = matches!(tel.variant, Variant::Ps | Variant::Bsps);

    let (w1, w2, cs) = if compensated {
        // Minor axis of S(g)P(k) (S(g)P(k))^T, see `gaussian::decompose_squeeze_shear`.
        let a = g * g;
        let dd = (1.0 + k * k) / a;
        let h = 0.5 * (a - dd);
        let big_r = h.hypot(k);
        if big_r == 0.0 {
            (1.0, 0.0, 0.0)
        } else if h >= 0.0 {
            (k * k / (2.0 * big_r * (big_r + h)), (big_r + h) / (2.0 * big_r), -k / (2.0 * big_r))
        } else {
            ((big_r - h) / (2.0 * big_r), k * k / (2.0 * big_r * (big_r - h)), -k / (2.0 * big_r))
        }
    } else {
        (1.0, 0.0, 0.0)
    };
    if !(-1e-15..=1.0 + 1e-15).contains(&w1) || !(-1e-15..=1.0 + 1e-15).contains(&w2) {
        return Err(Error::Infeasible(format!("rotation weights ({w1}, {w2}) are not physical")));
    }

    let sxx = w1 * vx + w2 * vp + 2.0 * cs * cp;
    let spp = w1 * vp + w2 * vx - 2.0 * cs * cp;
    let sxp = cs * (vp - vx) + (w1 - w2) * cp;
    let sigma = Matrix2::new(sxx, sxp, sxp, spp);

    let dec = if compensated {
        decompose_squeeze_shear(-g.ln(), k)
    } else {
        GaussianDecomposition::IDENTITY
    };
    let s = squeezing_parameter(&tel)?;
    Ok(NoiseModel {
        s,
        g,
        k,
        zeta: dec.zeta,
        epsilon: dec.epsilon,
        gains,
        sigma,
    })
}

fn check_psd(sigma: &Matrix2<f64>) -> Result<()> {
    let scale = sigma.amax().max(1.0);
    let tol = 1e-12 * scale;
    let det = sigma.determinant();
    if sigma[(0, 0)] < -tol || sigma[(1, 1)] < -tol || det < -tol * scale {
        return Err(Error::Infeasible(format!("noise matrix {sigma:?} is not positive semidefinite")));
    }
    Ok(())
}

/// Closed-form noise model of any variant.
pub fn noise_matrix(cfg: &SqueezerConfig) -> Result<NoiseModel> {
    if cfg.variant == Variant::Bas {
        return bas_noise(cfg);
    }
    let model = teleporter_model(cfg)?;
    check_psd(&model.sigma)?;
    Ok(model)
}

/// Noise model of the pre-squeezer followed by balanced teleportation.
pub fn bas_noise(cfg: &SqueezerConfig) -> Result<NoiseModel> {
    if cfg.variant != Variant::Bas {
        return Err(Error::Domain(format!("bas_noise called on a {} config", cfg.variant)));
    }
    cfg.validate()?;
    let res = cfg.resources();
    let tel = teleporter_model(cfg)?;
    let r0_sq = 1.0 - cfg.t0 * cfg.t0;
    let bas = Matrix2::new(
        r0_sq * res.lossy_squeezed_variance(),
        0.0,
        0.0,
        0.5 * r0_sq / (cfg.t0 * cfg.t0) * res.detector_factor(),
    );
    let sigma = bas + tel.sigma;
    check_psd(&sigma)?;
    Ok(NoiseModel {
        s: cfg.t0,
        sigma,
        ..tel
    })
}

/// Total input-referred noise `Sxx / s^2 + Spp s^2`.
pub fn total_noise(model: &NoiseModel) -> f64 {
    let s2 = model.s * model.s;
    let m = Matrix2::new(1.0 / s2, 1.0, 1.0, s2);
    model.sigma.component_mul(&m).trace()
}

/// Product of the noise variances.
pub fn noise_product(model: &NoiseModel) -> f64 {
    model.sigma[(0, 0)] * model.sigma[(1, 1)]
}

/// Sufficient condition for the channel to break entanglement.
pub fn entanglement_breaking(model: &NoiseModel) -> bool {
    noise_product(model) >= 0.25
}
