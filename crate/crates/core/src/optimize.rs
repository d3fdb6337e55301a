//! Constrained optimisation of the free beam-splitter parameters at a fixed
//! target squeezing scale, and entanglement-breaking threshold search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{noise_matrix, noise_product, total_noise, Resources, SqueezerConfig, Variant};
use crate::phase_space::{PhotonState, TransformedState, FIDELITY_ORDER};
use crate::{db_to_scale, scale_to_db};

/// Tuning of the searches. The defaults are recorded with every result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptSettings {
    pub population: usize,
    pub generations: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Step of the dense `t1` grid for the one-parameter search.
    pub grid_step: f64,
    /// Final bracket width of the golden-section refinement.
    pub refine_tol: f64,
    pub t_sq_min: f64,
    pub t_sq_max: f64,
    /// Gauss-Hermite order used for fidelity objectives.
    pub quad_order: usize,
}

impl Default for OptSettings {
    fn default() -> Self {
        Self {
            population: 30,
            generations: 200,
            tolerance: 1e-9,
            seed: 42,
            grid_step: 1e-3,
            refine_tol: 1e-6,
            t_sq_min: 0.02,
            t_sq_max: 0.98,
            quad_order: FIDELITY_ORDER,
        }
    }
}

impl OptSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.population >= 4
            && self.generations >= 1
            && self.tolerance >= 0.0
            && self.grid_step > 0.0
            && self.refine_tol > 0.0
            && self.t_sq_min > 0.0
            && self.t_sq_min < self.t_sq_max
            && self.t_sq_max < 1.0
            && self.quad_order >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid optimiser settings {self:?}")))
        }
    }

    fn t_sq_bounds(&self) -> (f64, f64) {
        (self.t_sq_min, self.t_sq_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    Fidelity,
    TotalNoise,
}

/// Outcome of one constrained optimisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptResult {
    pub config: SqueezerConfig,
    pub s_target: f64,
    pub state: PhotonState,
    pub objective_kind: Objective,
    /// Fidelity or total noise at the optimum.
    pub objective: f64,
    pub fidelity: f64,
    pub total_noise: f64,
    pub evaluations: usize,
    pub settings: OptSettings,
}

impl OptResult {
    pub fn t1_sq(&self) -> f64 {
        self.config.t1 * self.config.t1
    }

    pub fn t2_sq(&self) -> f64 {
        self.config.t2 * self.config.t2
    }
}

/// Fidelity-optimal and noise-optimal results at the same point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TotalNoiseComparison {
    pub noise_optimal: OptResult,
    pub fidelity_optimal: OptResult,
    /// `F(noise optimum) - F(fidelity optimum)`.
    pub delta_fid: f64,
    /// `N_T(noise optimum) - N_T(fidelity optimum)`.
    pub delta: f64,
}

/// Value to minimise for a feasible config.
fn loss(cfg: &SqueezerConfig, state: PhotonState, objective: Objective, order: usize) -> Result<f64> {
    let model = noise_matrix(cfg)?;
    Ok(match objective {
        Objective::Fidelity => -TransformedState::from_model(state, &model)?.fidelity_with_order(order),
        Objective::TotalNoise => total_noise(&model),
    })
}

/// Minimum of a unimodal function on `[a, b]` by golden-section search.
/// Returns `(x, f(x), evaluations)`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64, usize) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evals = 2;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    if fc <= fd {
        (c, fc, evals)
    } else {
        (d, fd, evals)
    }
}

/// Settings of [`differential_evolution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeSettings {
    pub population: usize,
    pub generations: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub crossover: f64,
    /// Mutation factor drawn uniformly from this range each generation.
    pub mutation: (f64, f64),
}

impl From<&OptSettings> for DeSettings {
    fn from(s: &OptSettings) -> Self {
        Self {
            population: s.population,
            generations: s.generations,
            tolerance: s.tolerance,
            seed: s.seed,
            crossover: 0.7,
            mutation: (0.5, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    pub generations: usize,
}

/// Box-constrained minimisation by synchronous best/1/bin differential
/// evolution. Trial vectors are drawn sequentially from a seeded generator
/// and scored in parallel, so results are reproducible for a fixed seed.
pub fn differential_evolution<F>(f: F, bounds: &[(f64, f64)], settings: &DeSettings) -> DeResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = bounds.len();
    let np = settings.population.max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let sample = |rng: &mut ChaCha8Rng, j: usize| rng.gen_range(bounds[j].0..=bounds[j].1);

    let mut pop: Vec<Vec<f64>> = (0..np).map(|_| (0..dim).map(|j| sample(&mut rng, j)).collect()).collect();
    let mut fit: Vec<f64> = pop.par_iter().map(|x| f(x)).collect();
    let mut evaluations = np;
    let mut generations = 0;

    let best_index = |fit: &[f64]| {
        fit.iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("population is non-empty")
    };

    for _ in 0..settings.generations {
        let spread = {
            let mean = fit.iter().sum::<f64>() / np as f64;
            let var = fit.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / np as f64;
            (var.sqrt(), mean)
        };
        if spread.0 <= settings.tolerance * spread.1.abs() + 1e-14 {
            break;
        }
        generations += 1;
        let best = pop[best_index(&fit)].clone();
        let scale = rng.gen_range(settings.mutation.0..settings.mutation.1);
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let r = rng.gen_range(0..np);
                    if r != i {
                        break r;
                    }
                };
                let r1 = pick();
                let r2 = loop {
                    let r = pick();
                    if r != r1 {
                        break r;
                    }
                };
                let forced = rng.gen_range(0..dim);
                (0..dim)
                    .map(|j| {
                        let cross = j == forced || rng.gen::<f64>() < settings.crossover;
                        let v = if cross {
                            best[j] + scale * (pop[r1][j] - pop[r2][j])
                        } else {
                            pop[i][j]
                        };
                        if v < bounds[j].0 || v > bounds[j].1 {
                            sample(&mut rng, j)
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let scores: Vec<f64> = trials.par_iter().map(|x| f(x)).collect();
        evaluations += np;
        for (i, (trial, score)) in trials.into_iter().zip(scores).enumerate() {
            if score <= fit[i] {
                pop[i] = trial;
                fit[i] = score;
            }
        }
    }
    let b = best_index(&fit);
    DeResult {
        x: pop[b].clone(),
        fx: fit[b],
        evaluations,
        generations,
    }
}

fn finish(
    cfg: SqueezerConfig,
    s: f64,
    state: PhotonState,
    objective: Objective,
    evaluations: usize,
    settings: &OptSettings,
) -> Result<OptResult> {
    let model = noise_matrix(&cfg)?;
    let fidelity = TransformedState::from_model(state, &model)?.fidelity()?;
    let nt = total_noise(&model);
    Ok(OptResult {
        config: cfg,
        s_target: s,
        state,
        objective_kind: objective,
        objective: match objective {
            Objective::Fidelity => fidelity,
            Objective::TotalNoise => nt,
        },
        fidelity,
        total_noise: nt,
        evaluations,
        settings: *settings,
    })
}

/// Range of `t1` for which both `t1^2` and the constrained `t2^2` stay
/// inside the search bounds.
fn bs_t1_grid(s: f64, settings: &OptSettings, res: Resources) -> Vec<f64> {
    let (lo, hi) = settings.t_sq_bounds();
    let (t_lo, t_hi) = (lo.sqrt(), hi.sqrt());
    let n = ((t_hi - t_lo) / settings.grid_step).floor() as usize;
    (0..=n)
        .map(|i| t_lo + i as f64 * settings.grid_step)
        .filter(|&t1| {
            SqueezerConfig::bs_for_target(s, t1, res)
                .map(|c| (lo..=hi).contains(&(c.t2 * c.t2)))
                .unwrap_or(false)
        })
        .collect()
}

/// One-parameter search along the BS constraint curve: dense grid, then
/// golden-section refinement around the best grid point. On ties the
/// smallest `t1` wins.
fn search_bs(
    s: f64,
    res: Resources,
    state: PhotonState,
    objective: Objective,
    settings: &OptSettings,
) -> Result<(SqueezerConfig, usize)> {
    let grid = bs_t1_grid(s, settings, res);
    if grid.is_empty() {
        return Err(Error::Infeasible(format!("no BS configuration reaches s = {s} within the bounds")));
    }
    let order = settings.quad_order;
    let eval = |t1: f64| -> Result<f64> {
        let cfg = SqueezerConfig::bs_for_target(s, t1, res)?;
        loss(&cfg, state, objective, order)
    };
    let values: Vec<f64> = grid.par_iter().map(|&t| eval(t)).collect::<Result<_>>()?;
    let mut evaluations = grid.len();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let (mut t_best, mut f_best) = (grid[best], values[best]);

    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    if b > a {
        let (t, ft, n) = golden_section(|t| eval(t).unwrap_or(f64::INFINITY), a, b, settings.refine_tol);
        evaluations += n;
        if ft < f_best {
            t_best = t;
            f_best = ft;
        }
    }
    debug_assert!(f_best.is_finite());
    Ok((SqueezerConfig::bs_for_target(s, t_best, res)?, evaluations))
}

/// Penalised BSPS objective over `(t1^2, t2^2)`.
fn bsps_loss(
    x: &[f64],
    s: f64,
    res: Resources,
    state: PhotonState,
    objective: Objective,
    order: usize,
) -> f64 {
    let (t1, t2) = (x[0].sqrt(), x[1].sqrt());
    match SqueezerConfig::bsps_for_target(s, t1, t2, res) {
        Ok(cfg) => loss(&cfg, state, objective, order).unwrap_or(f64::MAX),
        Err(_) => {
            let g = ((1.0 - x[0]) * (1.0 - x[1]) / (x[0] * x[1])).sqrt();
            let distance = if g < s { (s / g).ln() } else { (g * s).ln().abs() };
            1e6 * (1.0 + distance)
        }
    }
}

fn search_bsps(
    s: f64,
    res: Resources,
    state: PhotonState,
    objective: Objective,
    settings: &OptSettings,
) -> Result<(SqueezerConfig, usize)> {
    if s >= 1.0 - 1e-12 {
        // The feasible set at s = 1 is the phi = 0 line t2 = r1.
        let (bs, n) = search_bs(s, res, state, objective, settings)?;
        return Ok((SqueezerConfig::bsps_for_target(s, bs.t1, bs.t2, res)?, n));
    }
    let bounds = [settings.t_sq_bounds(); 2];
    let order = settings.quad_order;
    let de = differential_evolution(
        |x| bsps_loss(x, s, res, state, objective, order),
        &bounds,
        &DeSettings::from(settings),
    );
    if de.fx >= 1e6 {
        return Err(Error::Infeasible(format!("no feasible BSPS configuration found for s = {s}")));
    }
    let cfg = SqueezerConfig::bsps_for_target(s, de.x[0].sqrt(), de.x[1].sqrt(), res)?;
    Ok((cfg, de.evaluations))
}

fn search(
    s: f64,
    variant: Variant,
    res: Resources,
    state: PhotonState,
    objective: Objective,
    settings: &OptSettings,
) -> Result<(SqueezerConfig, usize)> {
    settings.validate()?;
    res.validate()?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("target scale {s} outside (0, 1]")));
    }
    match variant {
        Variant::Ps => Ok((SqueezerConfig::ps_for_target(s, res)?, 1)),
        Variant::Bas => Ok((SqueezerConfig::bas_for_target(s, res)?, 1)),
        Variant::Bs => search_bs(s, res, state, objective, settings),
        Variant::Bsps => search_bsps(s, res, state, objective, settings),
    }
}

/// Fidelity-maximising configuration for the target scale. PS and BAS
/// have no free parameter and are evaluated directly.
pub fn optimize_fidelity(
    s: f64,
    variant: Variant,
    res: Resources,
    state: PhotonState,
    settings: &OptSettings,
) -> Result<OptResult> {
    let (cfg, n) = search(s, variant, res, state, Objective::Fidelity, settings)?;
    finish(cfg, s, state, Objective::Fidelity, n, settings)
}

/// Total-noise-minimising configuration together with the paired
/// fidelity optimisation. Each optimum is the best of its own candidates
/// and the other run's optimum.
pub fn optimize_total_noise(
    s: f64,
    variant: Variant,
    res: Resources,
    state: PhotonState,
    settings: &OptSettings,
) -> Result<TotalNoiseComparison> {
    let (noise_cfg, n_noise) = search(s, variant, res, state, Objective::TotalNoise, settings)?;
    let (fid_cfg, n_fid) = search(s, variant, res, state, Objective::Fidelity, settings)?;
    let mut noise_optimal = finish(noise_cfg, s, state, Objective::TotalNoise, n_noise, settings)?;
    let mut fidelity_optimal = finish(fid_cfg, s, state, Objective::Fidelity, n_fid, settings)?;
    if fidelity_optimal.total_noise < noise_optimal.total_noise {
        noise_optimal = OptResult {
            objective_kind: Objective::TotalNoise,
            objective: fidelity_optimal.total_noise,
            evaluations: noise_optimal.evaluations,
            ..fidelity_optimal
        };
    }
    if noise_optimal.fidelity > fidelity_optimal.fidelity {
        fidelity_optimal = OptResult {
            objective_kind: Objective::Fidelity,
            objective: noise_optimal.fidelity,
            evaluations: fidelity_optimal.evaluations,
            ..noise_optimal
        };
    }
    Ok(TotalNoiseComparison {
        delta_fid: noise_optimal.fidelity - fidelity_optimal.fidelity,
        delta: noise_optimal.total_noise - fidelity_optimal.total_noise,
        noise_optimal,
        fidelity_optimal,
    })
}

/// Scan step and final resolution of the threshold search, in dB.
pub const THRESHOLD_SCAN_STEP: f64 = 0.25;
pub const THRESHOLD_RESOLUTION: f64 = 0.05;
pub const THRESHOLD_FLOOR_DB: f64 = -10.0;

/// Noise product of the fidelity-optimal configuration at `db`.
pub fn optimal_noise_product(
    db: f64,
    variant: Variant,
    res: Resources,
    state: PhotonState,
    settings: &OptSettings,
) -> Result<f64> {
    let opt = optimize_fidelity(db_to_scale(db), variant, res, state, settings)?;
    Ok(noise_product(&noise_matrix(&opt.config)?))
}

/// Largest `10 log10(s^2)` in `[-10, 0]` dB at which the fidelity-optimal
/// configuration breaks entanglement (`N_P >= 1/4`), found by a scan from
/// 0 dB downwards and bisection to [`THRESHOLD_RESOLUTION`]. `None` when
/// no point of the range breaks.
pub fn find_breaking_threshold(
    variant: Variant,
    res: Resources,
    state: PhotonState,
    settings: &OptSettings,
) -> Result<Option<f64>> {
    let breaks = |db: f64| -> Result<bool> { Ok(optimal_noise_product(db, variant, res, state, settings)? >= 0.25) };
    if breaks(0.0)? {
        return Ok(Some(0.0));
    }
    let steps = (-THRESHOLD_FLOOR_DB / THRESHOLD_SCAN_STEP).round() as usize;
    let mut safe = 0.0;
    for i in 1..=steps {
        let db = -(i as f64) * THRESHOLD_SCAN_STEP;
        if breaks(db)? {
            let mut broken = db;
            while safe - broken > THRESHOLD_RESOLUTION {
                let mid = 0.5 * (safe + broken);
                if breaks(mid)? {
                    broken = mid;
                } else {
                    safe = mid;
                }
            }
            return Ok(Some(broken));
        }
        safe = db;
    }
    Ok(None)
}

/// Sweep-axis value of a result's target scale.
pub fn result_db(result: &OptResult) -> f64 {
    scale_to_db(result.s_target)
}
