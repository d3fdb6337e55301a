//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use telesqueeze::fock::{reconstruct_rho, DEFAULT_DIM, DEFAULT_QUAD_ORDER, MAX_TRACE_DEFICIT};
use telesqueeze::gaussian::{decompose_shear, decompose_squeeze_shear, shear_matrix};
use telesqueeze::noise::{noise_matrix, SqueezerConfig};
use telesqueeze::optimize::{find_breaking_threshold, optimize_fidelity, optimize_total_noise, OptSettings};
use telesqueeze::oracle::{compare, random_configs};
use telesqueeze::sweep::{run_sweep, SweepRow, SweepSpec};
use telesqueeze::{db_to_scale, PhotonState, Resources, TransformedState, Variant};
use telesqueeze_validation::{Criterion, Outcome};

const RESOURCES_DB: [f64; 3] = [3.0, 6.0, 9.0];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Losses {
    Lossless,
    Realistic,
}

impl Losses {
    const ALL: [Losses; 2] = [Losses::Lossless, Losses::Realistic];

    fn etas(self) -> (f64, f64) {
        match self {
            Losses::Lossless => (1.0, 1.0),
            Losses::Realistic => (0.8, 0.9),
        }
    }

    fn resources(self, db: f64) -> Resources {
        let (eta_s, eta_h) = self.etas();
        Resources::new(db, eta_s, eta_h)
    }

    fn label(self) -> &'static str {
        match self {
            Losses::Lossless => "lossless",
            Losses::Realistic => "realistic",
        }
    }
}

/// Default sweeps over every variant, resource level, input state and loss
/// setting.
struct Sweeps {
    sets: Vec<(PhotonState, Losses, Vec<SweepRow>)>,
}

impl Sweeps {
    fn compute() -> Self {
        let mut sets = Vec::new();
        for state in PhotonState::ALL {
            for losses in Losses::ALL {
                let (eta_s, eta_h) = losses.etas();
                let spec = SweepSpec {
                    variants: Variant::ALL.to_vec(),
                    state,
                    resource_db: RESOURCES_DB.to_vec(),
                    eta_s,
                    eta_h,
                    ..SweepSpec::default()
                };
                let rows = run_sweep(&spec).expect("valid sweep");
                sets.push((state, losses, rows));
            }
        }
        Self { sets }
    }

    fn rows(&self, state: PhotonState, losses: Losses) -> &[SweepRow] {
        &self
            .sets
            .iter()
            .find(|(s, l, _)| *s == state && *l == losses)
            .expect("sweep computed")
            .2
    }

    fn all(&self) -> impl Iterator<Item = (PhotonState, Losses, &SweepRow)> {
        self.sets.iter().flat_map(|(s, l, rows)| rows.iter().map(move |r| (*s, *l, r)))
    }

    /// Rows of `variant` paired with the row of `other` at the same point.
    fn pairs(&self, variant: Variant, other: Variant) -> Vec<(PhotonState, Losses, &SweepRow, &SweepRow)> {
        let mut out = Vec::new();
        for (state, losses, rows) in &self.sets {
            for a in rows.iter().filter(|r| r.variant == variant) {
                let b = rows
                    .iter()
                    .find(|r| r.variant == other && r.resource_db == a.resource_db && r.s_db == a.s_db)
                    .expect("matching sweep point");
                out.push((*state, *losses, a, b));
            }
        }
        out
    }
}

fn fidelity_of(row: &SweepRow) -> f64 {
    row.fidelity.expect("fidelity requested")
}

fn where_(state: PhotonState, losses: Losses, row: &SweepRow) -> String {
    format!("{} {} {} dB at {} dB ({})", row.variant, state, row.resource_db, row.s_db, losses.label())
}

fn oracle_equivalence() -> Outcome {
    let mut c = Criterion::new(1, "oracle equivalence").with_budget(Duration::from_secs(30));
    // Cycle the loss settings so every variant meets every combination.
    let etas_s = [1.0, 0.8];
    let etas_h = [1.0, 0.9];
    let configs: Vec<SqueezerConfig> = random_configs(2000, 1)
        .into_iter()
        .enumerate()
        .map(|(i, cfg)| SqueezerConfig {
            eta_s: etas_s[(i / 4) % 2],
            eta_h: etas_h[(i / 8) % 2],
            ..cfg
        })
        .collect();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for cfg in &configs {
        match compare(cfg) {
            Ok(cmp) => worst = worst.max(cmp.sigma_deviation),
            Err(_) => failures += 1,
        }
    }
    c.check(failures == 0, format!("{} configs, {failures} errors", configs.len()));
    c.check(worst < 1e-10, format!("max |dSigma| = {worst:.2e} < 1e-10"));
    c.finish()
}

fn smallest_singular_value(m: &Matrix2<f64>) -> f64 {
    m.svd(false, false).singular_values.min()
}

fn decomposition_identities() -> Outcome {
    let mut c = Criterion::new(2, "decomposition identities");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut shear_err, mut squeeze_err, mut sv_err) = (0.0f64, 0.0f64, 0.0f64);
    let n = 10_000;
    for _ in 0..n {
        let r: f64 = rng.gen_range(-2.0..2.0);
        let k: f64 = rng.gen_range(-5.0..5.0);
        let p = shear_matrix(k);
        shear_err = shear_err.max(decompose_shear(k).reconstruction_error(&p));
        let target = Matrix2::new((-r).exp(), 0.0, 0.0, r.exp()) * p;
        let d = decompose_squeeze_shear(r, k);
        squeeze_err = squeeze_err.max(d.reconstruction_error(&target));
        sv_err = sv_err.max((d.scale() - smallest_singular_value(&target)).abs());
        let d0 = decompose_squeeze_shear(0.0, k);
        shear_err = shear_err.max(d0.reconstruction_error(&p));
        sv_err = sv_err.max((d0.scale() - smallest_singular_value(&p)).abs());
    }
    c.check(shear_err < 1e-12, format!("P(k) error {shear_err:.2e}"));
    c.check(squeeze_err < 1e-12, format!("S P(k) error {squeeze_err:.2e}"));
    c.check(sv_err < 1e-12, format!("e^-xi vs smallest singular value {sv_err:.2e} over {n} samples"));
    c.finish()
}

fn unity_gain_limit() -> Outcome {
    let mut c = Criterion::new(3, "unity-gain teleportation limit");
    for state in PhotonState::ALL {
        let model = noise_matrix(&SqueezerConfig::balanced(Resources::lossless(60.0))).unwrap();
        let f = TransformedState::from_model(state, &model).unwrap().fidelity().unwrap();
        c.check(f > 0.999, format!("{state} at 60 dB F = {f:.6}"));
    }
    let model = noise_matrix(&SqueezerConfig::balanced(Resources::lossless(9.0))).unwrap();
    let f = TransformedState::from_model(PhotonState::Vacuum, &model).unwrap().fidelity().unwrap();
    let expected = 1.0 / (1.0 + 2.0 * 0.5 * 10f64.powf(-0.9));
    c.check(
        (f - expected).abs() < 1e-6,
        format!("vacuum at 9 dB F = {f:.8} vs {expected:.8}"),
    );
    c.finish()
}

fn breaking_thresholds() -> Outcome {
    let mut c = Criterion::new(4, "entanglement-breaking thresholds").with_budget(Duration::from_secs(60));
    let settings = OptSettings::default();
    let res = Losses::Realistic.resources(9.0);
    let state = PhotonState::SinglePhoton;
    let fmt = |t: Option<f64>| t.map(|v| format!("{v:.2} dB")).unwrap_or_else(|| "none".into());
    let bs = find_breaking_threshold(Variant::Bs, res, state, &settings).unwrap();
    c.check(
        bs.is_some_and(|t| (t + 8.0).abs() <= 0.5),
        format!("BS threshold {} (expected -8 +/- 0.5)", fmt(bs)),
    );
    let ps = find_breaking_threshold(Variant::Ps, res, state, &settings).unwrap();
    c.check(ps.is_none(), format!("PS threshold {} (expected none)", fmt(ps)));
    c.finish()
}

fn ordering(sweeps: &Sweeps) -> Outcome {
    let mut c = Criterion::new(5, "BS outperforms PS");
    let mut violations = Vec::new();
    let pairs = sweeps.pairs(Variant::Bs, Variant::Ps);
    for (state, losses, bs, ps) in &pairs {
        if !(bs.is_ok() && ps.is_ok()) || fidelity_of(bs) < fidelity_of(ps) - 1e-9 {
            violations.push(where_(*state, *losses, bs));
        }
    }
    c.check(
        violations.is_empty(),
        format!("F_BS >= F_PS - 1e-9 at {}/{} points{}", pairs.len() - violations.len(), pairs.len(), first(&violations)),
    );
    let settings = OptSettings::default();
    let s = db_to_scale(-7.0);
    for state in PhotonState::ALL {
        let bs6 = optimize_fidelity(s, Variant::Bs, Losses::Realistic.resources(6.0), state, &settings).unwrap();
        let ps9 = optimize_fidelity(s, Variant::Ps, Losses::Realistic.resources(9.0), state, &settings).unwrap();
        c.check(
            bs6.fidelity > ps9.fidelity,
            format!("{state} -7 dB realistic F_BS(6 dB) = {:.4} vs F_PS(9 dB) = {:.4}", bs6.fidelity, ps9.fidelity),
        );
    }
    c.finish()
}

fn first(items: &[String]) -> String {
    items.first().map(|w| format!(", first violation {w}")).unwrap_or_default()
}

fn bsps_equivalence(sweeps: &Sweeps) -> Outcome {
    let mut c = Criterion::new(6, "BSPS reduces to BS");
    let pairs = sweeps.pairs(Variant::Bsps, Variant::Bs);
    let (mut max_df, mut max_phi) = (0.0f64, 0.0f64);
    let mut bad = Vec::new();
    for (state, losses, bsps, bs) in &pairs {
        if !(bsps.is_ok() && bs.is_ok()) {
            bad.push(where_(*state, *losses, bsps));
            continue;
        }
        let df = (fidelity_of(bsps) - fidelity_of(bs)).abs();
        let phi = bsps.phi.unwrap().abs();
        max_df = max_df.max(df);
        max_phi = max_phi.max(phi);
        if df >= 1e-3 || phi >= 0.05 {
            bad.push(where_(*state, *losses, bsps));
        }
    }
    c.check(bad.is_empty(), format!("{} points{}", pairs.len(), first(&bad)));
    c.check(max_df < 1e-3, format!("max |F_BSPS - F_BS| = {max_df:.2e}"));
    c.check(max_phi < 0.05, format!("max |phi| = {max_phi:.2e} rad"));
    c.finish()
}

fn negativity(sweeps: &Sweeps) -> Outcome {
    let mut c = Criterion::new(7, "single-photon negativity");
    let bs_rows = |losses, db| {
        sweeps
            .rows(PhotonState::SinglePhoton, losses)
            .iter()
            .filter(move |r| r.variant == Variant::Bs && r.resource_db == db)
    };
    for (losses, db) in [(Losses::Lossless, 3.0), (Losses::Realistic, 6.0)] {
        let min = bs_rows(losses, db).map(|r| r.w00.unwrap()).fold(f64::INFINITY, f64::min);
        c.check(min >= -1e-9, format!("{db} dB {} min W(0,0) = {min:.3e}", losses.label()));
    }
    let upper: Vec<&SweepRow> = bs_rows(Losses::Lossless, 9.0).filter(|r| r.s_db >= -5.0).collect();
    let max = upper.iter().map(|r| r.w00.unwrap()).fold(f64::NEG_INFINITY, f64::max);
    c.check(
        !upper.is_empty() && max < 0.0,
        format!("9 dB lossless max W(0,0) = {max:.3e} over {} points >= -5 dB", upper.len()),
    );
    c.finish()
}

fn covariance_structure(sweeps: &Sweeps) -> Outcome {
    let mut c = Criterion::new(8, "noise covariance structure");
    let mut zero_max = 0.0f64;
    let mut zero_count = 0;
    for (_, losses, row) in sweeps.all() {
        let exact_zero_case = matches!(row.variant, Variant::Ps | Variant::Bs | Variant::Bas)
            && (losses == Losses::Lossless || row.phi == Some(0.0));
        if exact_zero_case {
            zero_max = zero_max.max(row.covariance.unwrap().abs());
            zero_count += 1;
        }
    }
    c.check(zero_max < 1e-12, format!("max |covar| = {zero_max:.2e} over {zero_count} eta_H = 1 or phi = 0 rows"));

    let ps: Vec<&SweepRow> = PhotonState::ALL
        .iter()
        .flat_map(|&s| sweeps.rows(s, Losses::Realistic))
        .filter(|r| r.variant == Variant::Ps && r.s_db < 0.0)
        .collect();
    let positive = ps.iter().filter(|r| r.covariance.unwrap() > 0.0).count();
    let max_abs = ps.iter().map(|r| r.covariance.unwrap().abs()).fold(0.0, f64::max);
    c.check(
        positive == ps.len(),
        format!("PS realistic covar > 0 at {positive}/{} points (max |covar| = {max_abs:.2e})", ps.len()),
    );

    let mut mismatch = 0;
    let mut compared = 0;
    for losses in Losses::ALL {
        let vac = sweeps.rows(PhotonState::Vacuum, losses);
        let one = sweeps.rows(PhotonState::SinglePhoton, losses);
        for (a, b) in vac.iter().zip(one) {
            assert_eq!((a.variant, a.resource_db, a.s_db), (b.variant, b.resource_db, b.s_db));
            // Same configuration must give the same covariance for either input.
            let same_config = (a.t1_sq, a.t2_sq, a.t0, a.phi) == (b.t1_sq, b.t2_sq, b.t0, b.phi);
            let cfg_b = SqueezerConfig {
                variant: a.variant,
                t1: a.t1_sq.unwrap().sqrt(),
                t2: a.t2_sq.unwrap().sqrt(),
                t0: a.t0.unwrap(),
                phi: a.phi.unwrap(),
                resource_db: a.resource_db,
                eta_s: a.eta_s,
                eta_h: a.eta_h,
            };
            let recomputed = noise_matrix(&cfg_b).unwrap().covariance();
            compared += 1;
            if (same_config && a.covariance != b.covariance) || (recomputed - a.covariance.unwrap()).abs() > 1e-14 {
                mismatch += 1;
            }
        }
    }
    c.check(mismatch == 0, format!("state independence on {compared} matched points, {mismatch} mismatches"));
    c.finish()
}

fn total_noise_comparison() -> Outcome {
    let mut c = Criterion::new(9, "total-noise versus fidelity optimum");
    let settings = OptSettings::default();
    let axis = SweepSpec::default().s_axis();
    let (mut worst_fid, mut worst_nt, mut points) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
    for losses in Losses::ALL {
        for state in PhotonState::ALL {
            for variant in [Variant::Bs, Variant::Bsps] {
                for &db in &axis {
                    let cmp = optimize_total_noise(db_to_scale(db), variant, losses.resources(9.0), state, &settings)
                        .unwrap();
                    worst_fid = worst_fid.max(cmp.delta_fid);
                    worst_nt = worst_nt.max(cmp.delta);
                    points += 1;
                }
            }
        }
    }
    c.check(worst_fid <= 0.0, format!("max Delta_Fid = {worst_fid:.2e}"));
    c.check(worst_nt <= 0.0, format!("max Delta = {worst_nt:.2e} over {points} points"));
    c.finish()
}

fn bas_inferiority(sweeps: &Sweeps) -> Outcome {
    let mut c = Criterion::new(10, "BAS below PS");
    let pairs = sweeps.pairs(Variant::Bas, Variant::Ps);
    let mut bad = Vec::new();
    for (state, losses, bas, ps) in &pairs {
        if !(bas.is_ok() && ps.is_ok()) || fidelity_of(bas) > fidelity_of(ps) {
            bad.push(where_(*state, *losses, bas));
        }
    }
    c.check(
        bad.is_empty(),
        format!("F_BAS <= F_PS at {}/{} points{}", pairs.len() - bad.len(), pairs.len(), first(&bad)),
    );
    c.finish()
}

fn fock_consistency() -> Outcome {
    let mut c = Criterion::new(11, "Fock-space consistency").with_budget(Duration::from_secs(300));
    let settings = OptSettings::default();
    let (mut max_dev, mut max_deficit, mut count, mut errors) = (0.0f64, 0.0f64, 0, 0);
    for state in PhotonState::ALL {
        for variant in [Variant::Ps, Variant::Bs] {
            for (i, db) in [0.0, -2.0, -4.0, -6.0, -8.0].into_iter().enumerate() {
                let losses = Losses::ALL[i % 2];
                let s = db_to_scale(db);
                let result = optimize_fidelity(s, variant, losses.resources(9.0), state, &settings)
                    .and_then(|opt| {
                        let model = noise_matrix(&opt.config)?;
                        let rho = reconstruct_rho(state, model.s, &model.sigma, DEFAULT_DIM, DEFAULT_QUAD_ORDER)?;
                        let fock = rho.fidelity_with_target(state, model.s)?;
                        Ok(((fock - opt.fidelity).abs(), rho.trace_deficit))
                    });
                count += 1;
                match result {
                    Ok((dev, deficit)) => {
                        max_dev = max_dev.max(dev);
                        max_deficit = max_deficit.max(deficit);
                    }
                    Err(_) => errors += 1,
                }
            }
        }
    }
    c.check(errors == 0, format!("{count} configs at dim {DEFAULT_DIM}, {errors} errors"));
    c.check(max_dev < 1e-4, format!("max |F_Fock - F_phase| = {max_dev:.2e}"));
    c.check(max_deficit < MAX_TRACE_DEFICIT, format!("max trace deficit = {max_deficit:.2e}"));
    c.finish()
}

fn determinism() -> Outcome {
    let mut c = Criterion::new(12, "determinism");
    let dir = tempfile::tempdir().expect("temporary directory");
    let commands: [&[&str]; 2] = [
        &[
            "sweep", "--variant", "BS,BSPS", "--resource-db", "6,9", "--eta-s", "0.8", "--eta-h", "0.9", "--state",
            "single-photon", "--s-db-step", "0.5", "--seed", "7",
        ],
        &["optimize", "--variant", "BSPS", "--s-db", "-6", "--resource-db", "9", "--seed", "7"],
    ];
    for args in commands {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|i| {
                let path = dir.path().join(format!("{}-{i}", args[0]));
                let mut full = vec!["telesqueeze".to_string()];
                full.extend(args.iter().map(|a| a.to_string()));
                full.push("--out".into());
                full.push(path.to_string_lossy().into_owned());
                telesqueeze_cli::run(full).expect("command succeeds");
                std::fs::read(&path).expect("output written")
            })
            .collect();
        c.check(
            !outputs[0].is_empty() && outputs[0] == outputs[1],
            format!("{} outputs byte-identical ({} bytes)", args[0], outputs[0].len()),
        );
    }
    c.finish()
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut outcomes = Vec::new();
    let mut report = |o: Outcome| {
        println!("{}", o.line());
        outcomes.push(o);
    };
    report(oracle_equivalence());
    report(decomposition_identities());
    report(unity_gain_limit());
    report(breaking_thresholds());
    let sweeps = Sweeps::compute();
    report(ordering(&sweeps));
    report(bsps_equivalence(&sweeps));
    report(negativity(&sweeps));
    report(covariance_structure(&sweeps));
    report(total_noise_comparison());
    report(bas_inferiority(&sweeps));
    report(fock_consistency());
    report(determinism());
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        outcomes.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
