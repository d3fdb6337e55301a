//! Subcommand implementations.

use nalgebra::Matrix2;
use serde::Serialize;
use telesqueeze::fock::{photostatistics, reconstruct_rho};
use telesqueeze::noise::noise_matrix;
use telesqueeze::optimize::{find_breaking_threshold, optimize_fidelity, optimize_total_noise, OptResult, OptSettings};
use telesqueeze::oracle::{run_oracle_check, OracleReport};
use telesqueeze::sweep::{run_sweep, SweepRow};
use telesqueeze::{db_to_scale, PhotonState, TransformedState, Variant};

use crate::config::{Format, ObjectiveChoice, RunConfig};
use crate::output::{fmt_f64, fmt_opt, to_csv, to_json, SCHEMA_VERSION};
use crate::CliError;

/// Tolerance of the closed-form versus circuit comparison.
pub const ORACLE_TOL: f64 = 1e-10;

const SWEEP_HEADER: [&str; 17] = [
    "variant", "state", "resource_db", "eta_s", "eta_h", "s_db", "t1_sq", "t2_sq", "t0", "phi", "fidelity", "w00",
    "N_T", "N_P", "breaking", "covar", "status",
];

fn sweep_record(r: &SweepRow) -> Vec<String> {
    vec![
        r.variant.to_string(),
        r.state.to_string(),
        fmt_f64(r.resource_db),
        fmt_f64(r.eta_s),
        fmt_f64(r.eta_h),
        fmt_f64(r.s_db),
        fmt_opt(r.t1_sq),
        fmt_opt(r.t2_sq),
        fmt_opt(r.t0),
        fmt_opt(r.phi),
        fmt_opt(r.fidelity),
        fmt_opt(r.w00),
        fmt_opt(r.total_noise),
        fmt_opt(r.noise_product),
        r.breaking.map(|b| b.to_string()).unwrap_or_default(),
        fmt_opt(r.covariance),
        r.status.clone(),
    ]
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    schema: u32,
    settings: OptSettings,
    rows: &'a [SweepRow],
}

pub fn sweep(cfg: &RunConfig) -> Result<String, CliError> {
    let rows = run_sweep(&cfg.sweep_spec())?;
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => to_csv(&SWEEP_HEADER, &rows.iter().map(sweep_record).collect::<Vec<_>>()),
        Format::Json => to_json(&SweepDocument {
            schema: SCHEMA_VERSION,
            settings: cfg.settings,
            rows: &rows,
        }),
    }
}

/// Flattened optimisation result.
#[derive(Debug, Serialize)]
struct OptimizeDocument {
    schema: u32,
    variant: Variant,
    state: PhotonState,
    resource_db: f64,
    eta_s: f64,
    eta_h: f64,
    s_db: f64,
    s: f64,
    t1_sq: f64,
    t2_sq: f64,
    t0: f64,
    phi: f64,
    objective_kind: &'static str,
    objective: f64,
    fidelity: f64,
    total_noise: f64,
    evaluations: usize,
    delta_fid: Option<f64>,
    delta: Option<f64>,
    settings: OptSettings,
}

impl OptimizeDocument {
    fn new(cfg: &RunConfig, r: &OptResult, deltas: Option<(f64, f64)>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            variant: r.config.variant,
            state: r.state,
            resource_db: r.config.resource_db,
            eta_s: r.config.eta_s,
            eta_h: r.config.eta_h,
            s_db: cfg.s_db,
            s: r.s_target,
            t1_sq: r.t1_sq(),
            t2_sq: r.t2_sq(),
            t0: r.config.t0,
            phi: r.config.phi,
            objective_kind: if deltas.is_some() { "total_noise" } else { "fidelity" },
            objective: r.objective,
            fidelity: r.fidelity,
            total_noise: r.total_noise,
            evaluations: r.evaluations,
            delta_fid: deltas.map(|d| d.0),
            delta: deltas.map(|d| d.1),
            settings: r.settings,
        }
    }

    fn record(&self) -> (Vec<&'static str>, Vec<String>) {
        let header = vec![
            "variant", "state", "resource_db", "eta_s", "eta_h", "s_db", "s", "t1_sq", "t2_sq", "t0", "phi",
            "objective_kind", "objective", "fidelity", "N_T", "evaluations", "delta_fid", "delta", "seed",
        ];
        let row = vec![
            self.variant.to_string(),
            self.state.to_string(),
            fmt_f64(self.resource_db),
            fmt_f64(self.eta_s),
            fmt_f64(self.eta_h),
            fmt_f64(self.s_db),
            fmt_f64(self.s),
            fmt_f64(self.t1_sq),
            fmt_f64(self.t2_sq),
            fmt_f64(self.t0),
            fmt_f64(self.phi),
            self.objective_kind.to_string(),
            fmt_f64(self.objective),
            fmt_f64(self.fidelity),
            fmt_f64(self.total_noise),
            self.evaluations.to_string(),
            fmt_opt(self.delta_fid),
            fmt_opt(self.delta),
            self.settings.seed.to_string(),
        ];
        (header, row)
    }
}

pub fn optimize(cfg: &RunConfig) -> Result<String, CliError> {
    let variant = cfg.single_variant()?;
    let s = db_to_scale(cfg.s_db);
    let res = cfg.resources();
    let doc = match cfg.objective {
        ObjectiveChoice::Fidelity => {
            let r = optimize_fidelity(s, variant, res, cfg.state, &cfg.settings)?;
            OptimizeDocument::new(cfg, &r, None)
        }
        ObjectiveChoice::TotalNoise => {
            let c = optimize_total_noise(s, variant, res, cfg.state, &cfg.settings)?;
            OptimizeDocument::new(cfg, &c.noise_optimal, Some((c.delta_fid, c.delta)))
        }
    };
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&doc),
        Format::Csv => {
            let (header, row) = doc.record();
            to_csv(&header, &[row])
        }
    }
}

#[derive(Serialize)]
struct OracleDocument<'a> {
    schema: u32,
    tolerance: f64,
    pass: bool,
    #[serde(flatten)]
    report: &'a OracleReport,
}

/// Returns the rendered report and whether the tolerance held.
pub fn oracle_check(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    let seed = cfg.seed.unwrap_or(1);
    let report = run_oracle_check(cfg.grid_size, seed)?;
    let pass = report.within(ORACLE_TOL);
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&OracleDocument {
            schema: SCHEMA_VERSION,
            tolerance: ORACLE_TOL,
            pass,
            report: &report,
        })?,
        Format::Csv => to_csv(
            &["configs", "seed", "max_sigma_deviation", "max_scale_deviation", "max_gain_deviation", "pass"],
            &[vec![
                report.configs.to_string(),
                report.seed.to_string(),
                fmt_f64(report.max_sigma_deviation),
                fmt_f64(report.max_scale_deviation),
                fmt_f64(report.max_gain_deviation),
                pass.to_string(),
            ]],
        )?,
    };
    if !pass {
        let worst = report.worst.map(|w| format!("{:?}", w.config)).unwrap_or_default();
        return Err(CliError::Tolerance(format!(
            "closed form and circuit differ by {:.3e} (tolerance {ORACLE_TOL:e}); worst config {worst}\n{text}",
            report.max_sigma_deviation
        )));
    }
    Ok((text, pass))
}

#[derive(Serialize)]
struct PhotostatDocument {
    schema: u32,
    variant: Option<Variant>,
    state: PhotonState,
    s_db: f64,
    ideal: bool,
    dim: usize,
    quad_order: usize,
    trace: f64,
    trace_deficit: f64,
    fock_fidelity: f64,
    phase_space_fidelity: f64,
    p: Vec<f64>,
}

pub fn photostat(cfg: &RunConfig, ideal: bool) -> Result<String, CliError> {
    let s = db_to_scale(cfg.s_db);
    let (variant, sigma) = if ideal {
        (None, Matrix2::zeros())
    } else {
        let variant = cfg.single_variant()?;
        let opt = optimize_fidelity(s, variant, cfg.resources(), cfg.state, &cfg.settings)?;
        (Some(variant), noise_matrix(&opt.config)?.sigma)
    };
    let rho = reconstruct_rho(cfg.state, s, &sigma, cfg.fock_dim, cfg.fock_quad_order)?;
    let p = photostatistics(&rho);
    let doc = PhotostatDocument {
        schema: SCHEMA_VERSION,
        variant,
        state: cfg.state,
        s_db: cfg.s_db,
        ideal,
        dim: rho.dim,
        quad_order: rho.quad_order,
        trace: rho.trace(),
        trace_deficit: rho.trace_deficit,
        fock_fidelity: rho.fidelity_with_target(cfg.state, s)?,
        phase_space_fidelity: TransformedState::new(cfg.state, s, sigma)?.fidelity()?,
        p,
    };
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&doc),
        Format::Csv => to_csv(
            &["n", "p_n"],
            &doc.p.iter().enumerate().map(|(n, p)| vec![n.to_string(), fmt_f64(*p)]).collect::<Vec<_>>(),
        ),
    }
}

#[derive(Serialize)]
struct ThresholdRow {
    variant: Variant,
    state: PhotonState,
    resource_db: f64,
    eta_s: f64,
    eta_h: f64,
    threshold_db: Option<f64>,
}

pub fn threshold(cfg: &RunConfig) -> Result<String, CliError> {
    let mut rows = Vec::new();
    let mut variants = cfg.variants.clone();
    variants.sort();
    variants.dedup();
    for &variant in &variants {
        for &db in &cfg.resource_db {
            let res = telesqueeze::Resources::new(db, cfg.eta_s, cfg.eta_h);
            rows.push(ThresholdRow {
                variant,
                state: cfg.state,
                resource_db: db,
                eta_s: cfg.eta_s,
                eta_h: cfg.eta_h,
                threshold_db: find_breaking_threshold(variant, res, cfg.state, &cfg.settings)?,
            });
        }
    }
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows),
        Format::Csv => to_csv(
            &["variant", "state", "resource_db", "eta_s", "eta_h", "threshold_db"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.variant.to_string(),
                        r.state.to_string(),
                        fmt_f64(r.resource_db),
                        fmt_f64(r.eta_s),
                        fmt_f64(r.eta_h),
                        r.threshold_db.map(fmt_f64).unwrap_or_else(|| "none".into()),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    }
}
