//! Symbolic Heisenberg-picture propagation of the full squeezer circuit.
//!
//! Every quadrature is tracked as a linear form over the quadratures of the
//! independent input modes (signal, resource squeezers, loss and detector
//! vacua). The output noise matrix then follows from the coefficients alone,
//! which gives an independent check of the closed forms in [`crate::noise`].

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{beam_splitter, decompose_squeeze_shear, rotation, GaussianGate};
use crate::noise::{gains, gate_parameters, noise_matrix, squeezing_parameter, SqueezerConfig, Variant};
use crate::noise::Resources;

/// Independent optical modes entering the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Input,
    /// x-squeezed resource feeding the entangling beam splitter.
    Source1,
    /// p-squeezed resource feeding the entangling beam splitter.
    Source2,
    Source1Loss,
    Source2Loss,
    DetectorA,
    DetectorB,
    /// x-squeezed ancilla of the pre-squeezer.
    Ancilla,
    AncillaLoss,
    DetectorC,
}

impl Mode {
    pub const ALL: [Mode; 10] = [
        Mode::Input,
        Mode::Source1,
        Mode::Source2,
        Mode::Source1Loss,
        Mode::Source2Loss,
        Mode::DetectorA,
        Mode::DetectorB,
        Mode::Ancilla,
        Mode::AncillaLoss,
        Mode::DetectorC,
    ];

    fn index(self) -> usize {
        Mode::ALL.iter().position(|&m| m == self).expect("mode is listed")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    X,
    P,
}

/// One quadrature of one input mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub mode: Mode,
    pub quadrature: Quadrature,
}

impl Symbol {
    pub fn new(mode: Mode, quadrature: Quadrature) -> Self {
        Self { mode, quadrature }
    }

    fn index(self) -> usize {
        2 * self.mode.index() + usize::from(self.quadrature == Quadrature::P)
    }

    fn from_index(i: usize) -> Self {
        let q = if i.is_multiple_of(2) { Quadrature::X } else { Quadrature::P };
        Self::new(Mode::ALL[i / 2], q)
    }
}

const SYMBOLS: usize = 2 * Mode::ALL.len();

/// Real linear combination of input-mode quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearForm {
    coefficients: [f64; SYMBOLS],
}

impl LinearForm {
    pub fn zero() -> Self {
        Self {
            coefficients: [0.0; SYMBOLS],
        }
    }

    pub fn symbol(sym: Symbol) -> Self {
        let mut f = Self::zero();
        f.coefficients[sym.index()] = 1.0;
        f
    }

    pub fn coefficient(&self, sym: Symbol) -> f64 {
        self.coefficients[sym.index()]
    }

    pub fn terms(&self) -> impl Iterator<Item = (Symbol, f64)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (Symbol::from_index(i), *c))
    }

    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..SYMBOLS {
            out.coefficients[i] = a * x.coefficients[i] + b * y.coefficients[i];
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::combine(c, self, 0.0, self)
    }

    pub fn plus(&self, c: f64, other: &Self) -> Self {
        Self::combine(1.0, self, c, other)
    }

    /// Covariance of two forms over independent symbols, skipping `Input`.
    pub fn noise_covariance(&self, other: &Self, vars: &SymbolVariances) -> f64 {
        (0..SYMBOLS)
            .filter(|&i| Symbol::from_index(i).mode != Mode::Input)
            .map(|i| self.coefficients[i] * other.coefficients[i] * vars.values[i])
            .sum()
    }

    pub fn noise_variance(&self, vars: &SymbolVariances) -> f64 {
        self.noise_covariance(self, vars)
    }
}

/// Variances of the independent input symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVariances {
    values: [f64; SYMBOLS],
}

impl SymbolVariances {
    pub fn from_resources(res: &Resources) -> Self {
        let sq = res.squeezed_variance();
        let anti = res.antisqueezed_variance();
        let mut values = [0.5; SYMBOLS];
        for (i, value) in values.iter_mut().enumerate() {
            let sym = Symbol::from_index(i);
            *value = match (sym.mode, sym.quadrature) {
                (Mode::Input, _) => 0.0,
                (Mode::Source1 | Mode::Ancilla, Quadrature::X) => sq,
                (Mode::Source1 | Mode::Ancilla, Quadrature::P) => anti,
                (Mode::Source2, Quadrature::X) => anti,
                (Mode::Source2, Quadrature::P) => sq,
                _ => 0.5,
            };
        }
        Self { values }
    }

    pub fn variance(&self, sym: Symbol) -> f64 {
        self.values[sym.index()]
    }
}

/// Quadratures of one propagated mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeForms {
    pub x: LinearForm,
    pub p: LinearForm,
}

impl ModeForms {
    pub fn of(mode: Mode) -> Self {
        Self {
            x: LinearForm::symbol(Symbol::new(mode, Quadrature::X)),
            p: LinearForm::symbol(Symbol::new(mode, Quadrature::P)),
        }
    }

    fn apply(&self, gate: &GaussianGate) -> Self {
        let m = gate.matrix();
        Self {
            x: LinearForm::combine(m[(0, 0)], &self.x, m[(0, 1)], &self.p),
            p: LinearForm::combine(m[(1, 0)], &self.x, m[(1, 1)], &self.p),
        }
    }
}

fn apply_two_mode(gate: &GaussianGate, a: &ModeForms, b: &ModeForms) -> (ModeForms, ModeForms) {
    let m = gate.matrix();
    let inputs = [a.x, a.p, b.x, b.p];
    let row = |r: usize| {
        (0..4).fold(LinearForm::zero(), |acc, c| acc.plus(m[(r, c)], &inputs[c]))
    };
    (
        ModeForms { x: row(0), p: row(1) },
        ModeForms { x: row(2), p: row(3) },
    )
}

/// Mixes `signal` with a vacuum on a beam splitter of intensity
/// transmission `eta` and keeps the transmitted port.
fn attenuate(signal: &ModeForms, vacuum: Mode, eta: f64) -> Result<ModeForms> {
    let bs = beam_splitter(eta.sqrt())?;
    Ok(apply_two_mode(&bs, &ModeForms::of(vacuum), signal).0)
}

/// Outcome forms of an inefficient homodyne detector, rescaled so that the
/// signal enters with unit gain.
fn detect(signal: &ModeForms, vacuum: Mode, eta: f64) -> Result<ModeForms> {
    let seen = attenuate(signal, vacuum, eta)?;
    let norm = 1.0 / eta.sqrt();
    Ok(ModeForms {
        x: seen.x.scaled(norm),
        p: seen.p.scaled(norm),
    })
}

/// Output quadratures of the propagated circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitTrace {
    pub x_out: LinearForm,
    pub p_out: LinearForm,
    pub s_effective: f64,
}

impl CircuitTrace {
    /// The 2x2 block of input-signal coefficients, `[[dx/dx_in, dx/dp_in], [dp/dx_in, dp/dp_in]]`.
    pub fn signal_map(&self) -> Matrix2<f64> {
        let xi = Symbol::new(Mode::Input, Quadrature::X);
        let pi = Symbol::new(Mode::Input, Quadrature::P);
        Matrix2::new(
            self.x_out.coefficient(xi),
            self.x_out.coefficient(pi),
            self.p_out.coefficient(xi),
            self.p_out.coefficient(pi),
        )
    }
}

/// Signal mode after the measurement-induced pre-squeezer of a BAS config.
fn presqueeze(input: &ModeForms, cfg: &SqueezerConfig) -> Result<ModeForms> {
    let ancilla = attenuate(&ModeForms::of(Mode::Ancilla), Mode::AncillaLoss, cfg.eta_s)?;
    let (kept, measured) = apply_two_mode(&beam_splitter(cfg.t0)?, &ancilla, input);
    let q = detect(&measured, Mode::DetectorC, cfg.eta_h)?.p;
    Ok(ModeForms {
        x: kept.x,
        p: kept.p.plus(-cfg.r0() / cfg.t0, &q),
    })
}

/// Propagates the input quadratures through the whole circuit.
pub fn build_and_propagate(cfg: &SqueezerConfig) -> Result<CircuitTrace> {
    cfg.validate()?;
    let tel = cfg.teleporter();
    let j = gains(&tel)?;
    let (g, k) = gate_parameters(&tel);
    let (zeta, epsilon) = match tel.variant {
        Variant::Ps | Variant::Bsps => {
            let d = decompose_squeeze_shear(-g.ln(), k);
            (d.zeta, d.epsilon)
        }
        Variant::Bs | Variant::Bas => (0.0, 0.0),
    };

    let mut input = ModeForms::of(Mode::Input);
    if cfg.variant == Variant::Bas {
        input = presqueeze(&input, cfg)?;
    }

    let s1 = attenuate(&ModeForms::of(Mode::Source1), Mode::Source1Loss, cfg.eta_s)?;
    let s2 = attenuate(&ModeForms::of(Mode::Source2), Mode::Source2Loss, cfg.eta_s)?;
    let (to_measure, output) = apply_two_mode(&beam_splitter(tel.t1)?, &s1, &s2);

    let input = input.apply(&rotation(-epsilon));
    let (a, b) = apply_two_mode(&beam_splitter(tel.t2)?, &input, &to_measure);
    let b = b.apply(&rotation(tel.phi));
    let q_a = detect(&a, Mode::DetectorA, cfg.eta_h)?.x;
    let q_b = detect(&b, Mode::DetectorB, cfg.eta_h)?.p;

    let output = ModeForms {
        x: output.x.plus(j.j1, &q_a),
        p: output.p.plus(j.j2, &q_b).plus(j.j3, &q_a),
    };
    let output = output.apply(&rotation(-zeta));
    let s_effective = output.x.coefficient(Symbol::new(Mode::Input, Quadrature::X));
    Ok(CircuitTrace {
        x_out: output.x,
        p_out: output.p,
        s_effective,
    })
}

/// Noise matrix implied by the propagated forms.
pub fn oracle_noise_matrix(trace: &CircuitTrace, cfg: &SqueezerConfig) -> Matrix2<f64> {
    let vars = SymbolVariances::from_resources(&cfg.resources());
    let xx = trace.x_out.noise_variance(&vars);
    let pp = trace.p_out.noise_variance(&vars);
    let xp = trace.x_out.noise_covariance(&trace.p_out, &vars);
    Matrix2::new(xx, xp, xp, pp)
}

/// Randomised configurations covering all variants.
pub fn random_configs(count: usize, seed: u64) -> Vec<SqueezerConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let etas = [1.0, 0.9, 0.8];
    let dbs = [3.0, 6.0, 9.0];
    (0..count)
        .map(|i| {
            let res = Resources::new(
                dbs[rng.gen_range(0..dbs.len())],
                etas[rng.gen_range(0..etas.len())],
                etas[rng.gen_range(0..etas.len())],
            );
            let t1 = rng.gen_range(0.05..0.95);
            let t2 = rng.gen_range(0.05..0.95);
            let phi = rng.gen_range(-1.3..1.3);
            match Variant::ALL[i % 4] {
                Variant::Ps => SqueezerConfig::ps(phi, res),
                Variant::Bs => SqueezerConfig::bs(t1, t2, res),
                Variant::Bsps => SqueezerConfig::bsps(t1, t2, phi, res),
                Variant::Bas => SqueezerConfig::bas(t1, res),
            }
        })
        .collect()
}

/// Comparison of one config's closed-form and propagated results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleComparison {
    pub config: SqueezerConfig,
    pub sigma_deviation: f64,
    pub scale_deviation: f64,
    /// Largest deviation of the signal map from `diag(s, 1/s)`.
    pub gain_deviation: f64,
}

pub fn compare(cfg: &SqueezerConfig) -> Result<OracleComparison> {
    let closed = noise_matrix(cfg)?;
    let trace = build_and_propagate(cfg)?;
    let sigma = oracle_noise_matrix(&trace, cfg);
    let s = squeezing_parameter(cfg)?;
    let ideal = Matrix2::new(s, 0.0, 0.0, 1.0 / s);
    Ok(OracleComparison {
        config: *cfg,
        sigma_deviation: (sigma - closed.sigma).amax(),
        scale_deviation: (trace.s_effective - s).abs(),
        gain_deviation: (trace.signal_map() - ideal).amax(),
    })
}

/// Summary of an oracle run over a randomised grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub configs: usize,
    pub seed: u64,
    pub max_sigma_deviation: f64,
    pub max_scale_deviation: f64,
    pub max_gain_deviation: f64,
    pub worst: Option<OracleComparison>,
}

impl OracleReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_sigma_deviation < tol && self.max_scale_deviation < tol && self.max_gain_deviation < tol
    }
}

/// Compares closed form and oracle over `count` random configurations.
pub fn run_oracle_check(count: usize, seed: u64) -> Result<OracleReport> {
    if count == 0 {
        return Err(Error::Domain("oracle grid must contain at least one config".into()));
    }
    let mut report = OracleReport {
        configs: count,
        seed,
        max_sigma_deviation: 0.0,
        max_scale_deviation: 0.0,
        max_gain_deviation: 0.0,
        worst: None,
    };
    for cfg in random_configs(count, seed) {
        let cmp = compare(&cfg)?;
        if report.worst.is_none() || cmp.sigma_deviation > report.max_sigma_deviation {
            report.worst = Some(cmp);
        }
        report.max_sigma_deviation = report.max_sigma_deviation.max(cmp.sigma_deviation);
        report.max_scale_deviation = report.max_scale_deviation.max(cmp.scale_deviation);
        report.max_gain_deviation = report.max_gain_deviation.max(cmp.gain_deviation);
    }
    Ok(report)
}
