//! Parameter sweeps over the target squeezing axis.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{noise_matrix, noise_product, total_noise, Resources, SqueezerConfig, Variant};
use crate::optimize::{optimize_fidelity, OptSettings};
use crate::phase_space::{PhotonState, TransformedState};
use crate::db_to_scale;

/// Output quantities a sweep can compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Fidelity,
    W00,
    TotalNoise,
    NoiseProduct,
    Breaking,
    Covariance,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Fidelity,
        Metric::W00,
        Metric::TotalNoise,
        Metric::NoiseProduct,
        Metric::Breaking,
        Metric::Covariance,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Fidelity => "fidelity",
            Metric::W00 => "w00",
            Metric::TotalNoise => "total_noise",
            Metric::NoiseProduct => "noise_product",
            Metric::Breaking => "breaking",
            Metric::Covariance => "covariance",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .or(match key.as_str() {
                "n_t" => Some(Metric::TotalNoise),
                "n_p" => Some(Metric::NoiseProduct),
                "covar" => Some(Metric::Covariance),
                _ => None,
            })
            .ok_or_else(|| Error::Domain(format!("unknown metric '{s}'")))
    }
}

/// Grid of sweep points: every variant at every resource level along the
/// `10 log10(s^2)` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variants: Vec<Variant>,
    pub state: PhotonState,
    pub resource_db: Vec<f64>,
    pub eta_s: f64,
    pub eta_h: f64,
    pub s_db_min: f64,
    pub s_db_max: f64,
    pub s_db_step: f64,
    pub metrics: Vec<Metric>,
    pub settings: OptSettings,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            state: PhotonState::Vacuum,
            resource_db: vec![3.0, 6.0, 9.0],
            eta_s: 1.0,
            eta_h: 1.0,
            s_db_min: -10.0,
            s_db_max: 0.0,
            s_db_step: 0.25,
            metrics: Metric::ALL.to_vec(),
            settings: OptSettings::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Domain("sweep needs at least one variant".into()));
        }
        if self.resource_db.is_empty() {
            return Err(Error::Domain("sweep needs at least one resource level".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Domain("sweep needs at least one metric".into()));
        }
        if !(self.s_db_min > -20.0 && self.s_db_max <= 0.0 && self.s_db_min <= self.s_db_max) {
            return Err(Error::Domain(format!(
                "sweep axis [{}, {}] dB must lie within (-20, 0]",
                self.s_db_min, self.s_db_max
            )));
        }
        if self.s_db_step.is_nan() || self.s_db_step <= 0.0 {
            return Err(Error::Domain(format!("sweep step {} must be positive", self.s_db_step)));
        }
        for &db in &self.resource_db {
            Resources::new(db, self.eta_s, self.eta_h).validate()?;
        }
        self.settings.validate()
    }

    /// Axis values from the lower end upwards; the upper end is included
    /// when the step divides the range.
    pub fn s_axis(&self) -> Vec<f64> {
        let span = self.s_db_max - self.s_db_min;
        let n = (span / self.s_db_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| {
                let v = self.s_db_min + i as f64 * self.s_db_step;
                if (v - self.s_db_max).abs() < 1e-9 * self.s_db_step {
                    self.s_db_max
                } else {
                    v
                }
            })
            .collect()
    }

    pub fn wants(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }
}

/// One evaluated sweep point. Metrics that were not requested, or could not
/// be computed, are `None`; `status` is `"ok"` or the failure reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variant: Variant,
    pub state: PhotonState,
    pub resource_db: f64,
    pub eta_s: f64,
    pub eta_h: f64,
    pub s_db: f64,
    pub t1_sq: Option<f64>,
    pub t2_sq: Option<f64>,
    pub t0: Option<f64>,
    pub phi: Option<f64>,
    pub fidelity: Option<f64>,
    pub w00: Option<f64>,
    pub total_noise: Option<f64>,
    pub noise_product: Option<f64>,
    pub breaking: Option<bool>,
    pub covariance: Option<f64>,
    pub status: String,
}

impl SweepRow {
    fn empty(variant: Variant, resource_db: f64, s_db: f64, spec: &SweepSpec) -> Self {
        Self {
            variant,
            state: spec.state,
            resource_db,
            eta_s: spec.eta_s,
            eta_h: spec.eta_h,
            s_db,
            t1_sq: None,
            t2_sq: None,
            t0: None,
            phi: None,
            fidelity: None,
            w00: None,
            total_noise: None,
            noise_product: None,
            breaking: None,
            covariance: None,
            status: String::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Short status label for a failed point.
pub fn status_label(err: &Error) -> String {
    let kind = match err {
        Error::Infeasible(_) => "infeasible",
        Error::DegenerateCircuit(_) => "degenerate",
        Error::SingularGain(_) => "singular",
        Error::Accuracy(_) => "accuracy",
        Error::Truncation { .. } => "truncation",
        Error::Domain(_) => "domain",
    };
    format!("{kind}: {err}")
}

fn fill(row: &mut SweepRow, spec: &SweepSpec, cfg: &SqueezerConfig, fidelity: Option<f64>) -> Result<()> {
    let model = noise_matrix(cfg)?;
    row.t1_sq = Some(cfg.t1 * cfg.t1);
    row.t2_sq = Some(cfg.t2 * cfg.t2);
    row.t0 = Some(cfg.t0);
    row.phi = Some(cfg.phi);
    let out = TransformedState::from_model(spec.state, &model)?;
    if spec.wants(Metric::Fidelity) {
        row.fidelity = Some(match fidelity {
            Some(f) => f,
            None => out.fidelity()?,
        });
    }
    if spec.wants(Metric::W00) {
        row.w00 = Some(out.wigner_origin());
    }
    if spec.wants(Metric::TotalNoise) {
        row.total_noise = Some(total_noise(&model));
    }
    let np = noise_product(&model);
    if spec.wants(Metric::NoiseProduct) {
        row.noise_product = Some(np);
    }
    if spec.wants(Metric::Breaking) {
        row.breaking = Some(np >= 0.25);
    }
    if spec.wants(Metric::Covariance) {
        row.covariance = Some(model.covariance());
    }
    Ok(())
}

fn evaluate_point(spec: &SweepSpec, variant: Variant, resource_db: f64, s_db: f64) -> SweepRow {
    let mut row = SweepRow::empty(variant, resource_db, s_db, spec);
    let res = Resources::new(resource_db, spec.eta_s, spec.eta_h);
    let result = optimize_fidelity(db_to_scale(s_db), variant, res, spec.state, &spec.settings)
        .and_then(|opt| fill(&mut row, spec, &opt.config, Some(opt.fidelity)));
    row.status = match result {
        Ok(()) => "ok".into(),
        Err(e) => {
            let keep = (row.variant, row.resource_db, row.s_db);
            row = SweepRow::empty(keep.0, keep.1, keep.2, spec);
            status_label(&e)
        }
    };
    row
}

/// Evaluates every sweep point in parallel. Rows are ordered by variant,
/// then resource level, then ascending `s_db`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut variants = spec.variants.clone();
    variants.sort();
    variants.dedup();
    let axis = spec.s_axis();
    let points: Vec<(Variant, f64, f64)> = variants
        .iter()
        .flat_map(|&v| {
            let axis = &axis;
            spec.resource_db.iter().flat_map(move |&r| axis.iter().map(move |&s| (v, r, s)))
        })
        .collect();
    Ok(points
        .par_iter()
        .map(|&(v, r, s)| evaluate_point(spec, v, r, s))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(variants: Vec<Variant>) -> SweepSpec {
        SweepSpec {
            variants,
            resource_db: vec![9.0],
            s_db_min: -8.0,
            s_db_max: 0.0,
            s_db_step: 2.0,
            ..SweepSpec::default()
        }
    }

    #[test]
    fn axis_includes_both_ends() {
        let spec = SweepSpec::default();
        let axis = spec.s_axis();
        assert_eq!(axis.len(), 41);
        assert_eq!(axis[0], -10.0);
        assert_eq!(*axis.last().unwrap(), 0.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            SweepSpec { metrics: vec![], ..SweepSpec::default() },
            SweepSpec { s_db_max: 1.0, ..SweepSpec::default() },
            SweepSpec { s_db_min: -20.0, ..SweepSpec::default() },
            SweepSpec { s_db_step: 0.0, ..SweepSpec::default() },
            SweepSpec { variants: vec![], ..SweepSpec::default() },
            SweepSpec { eta_s: 0.0, ..SweepSpec::default() },
        ];
        for spec in bad {
            assert!(run_sweep(&spec).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn rows_are_ordered_and_complete() {
        let spec = small(vec![Variant::Bs, Variant::Ps]);
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(SweepRow::is_ok));
        assert_eq!(rows[0].variant, Variant::Ps);
        assert!(rows[..5].windows(2).all(|w| w[0].s_db < w[1].s_db));
    }

    #[test]
    fn ideal_resources_give_unit_fidelity() {
        let spec = SweepSpec {
            resource_db: vec![60.0],
            state: PhotonState::SinglePhoton,
            ..small(vec![Variant::Ps, Variant::Bs])
        };
        for row in run_sweep(&spec).unwrap() {
            assert!(row.fidelity.unwrap() > 0.999, "{row:?}");
        }
    }

    #[test]
    fn lossless_covariance_vanishes() {
        let spec = SweepSpec {
            metrics: vec![Metric::Covariance],
            ..small(Variant::ALL.to_vec())
        };
        for row in run_sweep(&spec).unwrap() {
            let covar = row.covariance.unwrap().abs();
            if row.variant == Variant::Bsps {
                // Only the residual optimal phase of BSPS couples the quadratures.
                assert!(covar <= row.phi.unwrap().abs(), "{row:?}");
            } else {
                assert!(covar < 1e-12, "{row:?}");
            }
            assert!(row.fidelity.is_none());
        }
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(m.as_str().parse::<Metric>().unwrap(), m);
        }
        assert_eq!("N_T".parse::<Metric>().unwrap(), Metric::TotalNoise);
        assert!("entropy".parse::<Metric>().is_err());
    }
}
