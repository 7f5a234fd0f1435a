//! Executable acceptance checks.
//!
//! Every check compares a production code path against an independent reference
//! and reports one [`CheckOutcome`]. Checks are grouped the way the CLI exposes
//! them: geometry, intensity and interference.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    beta, intensity, k_type1, k_type2, mean_interference, retention_probability, AnalysisError,
    InterferenceResult, QuadratureConfig, ThinningType,
};
use crate::experiment::format_float;
use crate::geometry::{
    exclusion_zone_area, lens_area, pair_disks, union_of_disks_area, PairConfiguration,
};
use crate::oracle::{beta_double_integral, dart_union_area};
use crate::params::NetworkParams;
use crate::simulator::{
    empirical_intensity, palm_interference, planted_joint_retention, retention_mask,
    sample_bipolar, PalmEstimate, SimError, SimulationConfig,
};

/// How much work a check may spend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effort {
    /// Reduced sample sizes for smoke testing.
    Quick,
    /// Sample sizes of the acceptance suite.
    Full,
}

impl Effort {
    fn pick<T>(self, quick: T, full: T) -> T {
        match self {
            Self::Quick => quick,
            Self::Full => full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub criterion: u8,
    pub check: String,
    pub passed: bool,
    pub observed: f64,
    pub threshold: f64,
    #[serde(skip)]
    pub detail: String,
}

impl CheckOutcome {
    fn new(
        criterion: u8,
        check: impl Into<String>,
        passed: bool,
        observed: f64,
        threshold: f64,
    ) -> Self {
        Self {
            criterion,
            check: check.into(),
            passed,
            observed,
            threshold,
            detail: String::new(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// Deterministic CSV of outcomes.
pub fn outcomes_csv(outcomes: &[CheckOutcome]) -> String {
    let mut out = String::from("criterion,check,passed,observed,threshold\n");
    for o in outcomes {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            o.criterion,
            o.check,
            o.passed,
            format_float(o.observed),
            format_float(o.threshold)
        ));
    }
    out
}

/// Independent stream for draw `index` of check `check`.
fn stream(seed: u64, check: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ check.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

fn derived_seed(seed: u64, check: u64) -> u64 {
    seed ^ check.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn reference(lambda_p: f64) -> NetworkParams<f64> {
    NetworkParams::reference(lambda_p)
}

fn random_geometry<R: Rng>(rng: &mut R) -> NetworkParams<f64> {
    let mut p = reference(0.05);
    p.r_cs = rng.random_range(0.5..5.0);
    p.r_tx = rng.random_range(0.05..p.r_cs);
    p.d = rng.random_range(0.05..p.r_cs + p.r_tx + 1.0);
    p
}

/// Exclusion-zone area against inclusion-exclusion, on random radii and separations.
pub fn exclusion_identity(seed: u64, effort: Effort) -> CheckOutcome {
    let sets = effort.pick(20, 100);
    let worst = (0..sets as u64)
        .map(|i| {
            let p = random_geometry(&mut stream(seed, 1, i));
            let direct = exclusion_zone_area(&p).v_o;
            let lens = lens_area(p.r_cs, p.r_tx, p.d).expect("valid radii");
            let identity = PI * p.r_cs * p.r_cs + PI * p.r_tx * p.r_tx - lens;
            ((direct - identity) / identity).abs()
        })
        .fold(0.0, f64::max);
    let tol = 1e-12;
    CheckOutcome::new(1, "exclusion area identity", worst <= tol, worst, tol).with_detail(format!(
        "{sets} parameter sets, worst relative deviation {worst:.3e}"
    ))
}

/// Union area of the four disks of a random two-pair configuration against dart throwing.
pub fn union_against_darts(seed: u64, effort: Effort) -> CheckOutcome {
    let sets = effort.pick(20, 100);
    let darts = effort.pick(200_000, 10_000_000);
    let z: Vec<f64> = (0..sets as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, 2, i);
            let p = random_geometry(&mut rng);
            let r = rng.random_range(0.0..2.0 * (p.d + p.r_cs + p.r_tx));
            let cfg = PairConfiguration::new(
                r,
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..2.0 * PI),
            )
            .expect("finite configuration");
            let disks = pair_disks(&cfg, &p);
            let exact = union_of_disks_area(&disks).expect("valid disks");
            let raw: Vec<(f64, f64, f64)> = disks
                .iter()
                .map(|k| (k.center.x, k.center.y, k.radius))
                .collect();
            dart_union_area(&raw, darts, &mut rng).z_score(exact)
        })
        .collect();
    let worst = z.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let misses = z.iter().filter(|v| v.abs() > 3.0).count();
    CheckOutcome::new(1, "union area vs darts", misses == 0, worst, 3.0).with_detail(format!(
        "{sets} configurations x {darts} darts, {misses} beyond 3 SE, worst |z| = {worst:.2}"
    ))
}

/// β against nested Gauss–Legendre quadrature of its double integral, plus the
/// small-density limit.
pub fn beta_consistency() -> Vec<CheckOutcome> {
    let v_o = exclusion_zone_area(&reference(0.05)).v_o;
    let ratios = [1.0 + 5e-7, 1.001, 1.2, 1.5, 2.0];
    let densities = [0.01, 1.0 / v_o, 0.2, 1.0];
    let mut worst = 0.0f64;
    for &lp in &densities {
        for &ratio in &ratios {
            let v = ratio * v_o;
            let closed = beta(v, v_o, lp);
            let direct = beta_double_integral(v, v_o, lp);
            worst = worst.max(((closed - direct) / direct).abs());
        }
    }
    let tol = 1e-8;
    let limit = (beta(1.5 * v_o, v_o, 1e-12) - 0.5).abs();
    vec![
        CheckOutcome::new(5, "beta vs double integral", worst <= tol, worst, tol).with_detail(
            format!("20-point grid, worst relative deviation {worst:.3e}"),
        ),
        CheckOutcome::new(5, "beta small-density limit", limit <= 1e-6, limit, 1e-6)
            .with_detail(format!("|beta - 1/2| = {limit:.3e} at lambda_p = 1e-12")),
    ]
}

pub fn geometry_checks(seed: u64, effort: Effort) -> Vec<CheckOutcome> {
    let mut out = vec![
        exclusion_identity(seed, effort),
        union_against_darts(seed, effort),
    ];
    out.extend(beta_consistency());
    out
}

/// Retained intensity on the reference geometry against the closed form.
pub fn intensity_sweep(
    thinning: ThinningType,
    seed: u64,
    effort: Effort,
) -> Result<Vec<CheckOutcome>, SimError> {
    let criterion = match thinning {
        ThinningType::TypeI => 2,
        ThinningType::TypeII => 3,
    };
    let base = reference(0.05);
    let v_o = exclusion_zone_area(&base).v_o;
    let mut densities = vec![0.01, 0.05, 1.0 / v_o, 0.2];
    if thinning == ThinningType::TypeII {
        densities.extend([1.0, 5.0]);
    }
    let window = effort.pick(20.0, 40.0);
    let replications = effort.pick(100, 500);
    let mut out = Vec::new();
    let mut means = Vec::new();
    for (i, &lp) in densities.iter().enumerate() {
        let params = base.with_lambda_p(lp);
        let sim = SimulationConfig {
            window_half_length: window,
            replications,
            seed: derived_seed(seed, 10 + criterion as u64 * 8 + i as u64),
            thinning,
            interference_radius: window - SimulationConfig::min_window(0.0, &params),
        };
        let est = empirical_intensity(&sim, &params)?;
        let exact = intensity(thinning, lp, v_o);
        means.push(est.mean);
        out.push(
            CheckOutcome::new(
                criterion,
                format!("{thinning} intensity at lambda_p={}", format_float(lp)),
                est.contains(exact),
                (est.mean - exact).abs(),
                est.half_width_95,
            )
            .with_detail(format!(
                "empirical {:.6e} +- {:.2e}, closed form {exact:.6e}",
                est.mean, est.half_width_95
            )),
        );
    }
    match thinning {
        ThinningType::TypeI => {
            let best = means
                .iter()
                .enumerate()
                .fold(0, |b, (i, &m)| if m > means[b] { i } else { b });
            let target = 1.0 / v_o;
            let nearest = densities.iter().enumerate().fold(0, |b, (i, &x)| {
                if (x - target).abs() < (densities[b] - target).abs() {
                    i
                } else {
                    b
                }
            });
            out.push(
                CheckOutcome::new(
                    2,
                    "type1 empirical argmax",
                    best == nearest,
                    densities[best],
                    target,
                )
                .with_detail(format!(
                    "argmax at lambda_p = {:.5}, optimum {target:.5}",
                    densities[best]
                )),
            );
        }
        ThinningType::TypeII => {
            let last = *means.last().expect("nonempty sweep");
            let gap = (last * v_o - 1.0).abs();
            out.push(
                CheckOutcome::new(3, "type2 saturation at lambda_p=5", gap <= 0.02, gap, 0.02)
                    .with_detail(format!("relative gap to 1/V_o is {gap:.4}")),
            );
        }
    }
    Ok(out)
}

/// Upper `q` quantile of a Poisson law with mean `mu`.
fn poisson_quantile(mu: f64, q: f64) -> usize {
    let mut term = (-mu).exp();
    let mut cdf = term;
    let mut k = 0;
    while cdf < q {
        k += 1;
        term *= mu / k as f64;
        cdf += term;
    }
    k
}

/// Planted two-pair joint retention against the kernels, both thinning rules.
///
/// Configurations with zero kernel must never see both pairs survive. For the
/// others, the number of `|z| > 3` deviations must stay within the 99.9% quantile
/// of its null distribution and the pooled z-score within 3.
pub fn kernel_oracle(seed: u64, effort: Effort) -> Vec<CheckOutcome> {
    let configs = effort.pick(100, 1000);
    let draws = effort.pick(2_000, 10_000);
    let params = reference(0.05);
    let mut out = Vec::new();
    for thinning in ThinningType::ALL {
        let tag = 20 + thinning as u64;
        let rows: Vec<(f64, usize)> = (0..configs as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, tag, i);
                let cfg = PairConfiguration::new(
                    rng.random_range(0.0..7.0),
                    rng.random_range(0.0..2.0 * PI),
                    rng.random_range(0.0..2.0 * PI),
                )
                .expect("finite configuration");
                let k = match thinning {
                    ThinningType::TypeI => k_type1(&cfg, &params),
                    ThinningType::TypeII => k_type2(&cfg, &params),
                };
                (
                    k,
                    planted_joint_retention(&cfg, &params, thinning, draws, &mut rng),
                )
            })
            .collect();
        let n = draws as f64;
        let zero_violations = rows
            .iter()
            .filter(|&&(k, hits)| k == 0.0 && hits > 0)
            .count();
        let z: Vec<f64> = rows
            .iter()
            .filter(|&&(k, _)| k > 0.0)
            .map(|&(k, hits)| (hits as f64 / n - k) / (k * (1.0 - k) / n).sqrt())
            .collect();
        let tail = 0.002_699_796_063_260_2;
        let allowed = poisson_quantile(z.len() as f64 * tail, 0.999);
        let outliers = z.iter().filter(|v| v.abs() > 3.0).count();
        let pooled = z.iter().sum::<f64>() / (z.len().max(1) as f64).sqrt();
        out.push(
            CheckOutcome::new(
                4,
                format!("{thinning} kernel zero set"),
                zero_violations == 0,
                zero_violations as f64,
                0.0,
            )
            .with_detail(format!(
                "{} zero-kernel configurations",
                rows.len() - z.len()
            )),
        );
        out.push(
            CheckOutcome::new(
                4,
                format!("{thinning} kernel 3-SE outliers"),
                outliers <= allowed,
                outliers as f64,
                allowed as f64,
            )
            .with_detail(format!(
                "{outliers} of {} positive-kernel configurations beyond 3 SE",
                z.len()
            )),
        );
        out.push(
            CheckOutcome::new(
                4,
                format!("{thinning} kernel pooled z"),
                pooled.abs() <= 3.0,
                pooled.abs(),
                3.0,
            )
            .with_detail(format!(
                "pooled z = {pooled:.3} over {} configurations",
                z.len()
            )),
        );
    }
    out
}

/// Type I survivors are a subset of type II survivors on random configurations.
pub fn nesting(seed: u64, effort: Effort) -> CheckOutcome {
    let samples = effort.pick(100, 1000);
    let violations: usize = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, 30, i);
            let params = reference(rng.random_range(0.01..1.0));
            let sim = SimulationConfig::new(ThinningType::TypeI, 1.0, 1, 0, &params);
            let cfg = sample_bipolar(&sim, &params, &mut rng);
            let one = retention_mask(&cfg.pairs, &params, ThinningType::TypeI, |_| true);
            let two = retention_mask(&cfg.pairs, &params, ThinningType::TypeII, |_| true);
            one.iter().zip(&two).filter(|&(&a, &b)| a && !b).count()
        })
        .sum();
    CheckOutcome::new(
        7,
        "type1 survivors within type2 survivors",
        violations == 0,
        violations as f64,
        0.0,
    )
    .with_detail(format!("{samples} sampled configurations"))
}

pub fn intensity_checks(seed: u64, effort: Effort) -> Result<Vec<CheckOutcome>, SimError> {
    let mut out = intensity_sweep(ThinningType::TypeI, seed, effort)?;
    out.extend(intensity_sweep(ThinningType::TypeII, seed, effort)?);
    out.extend(kernel_oracle(seed, effort));
    out.push(nesting(seed, effort));
    Ok(out)
}

/// Quadrature and Palm simulation at one density, on a shared truncation radius.
#[derive(Debug, Clone)]
pub struct InterferencePoint {
    pub lambda_p: f64,
    pub analytic: Result<InterferenceResult<f64>, AnalysisError>,
    pub palm: PalmEstimate<f64>,
    pub acceptance_expected: f64,
}

#[derive(Debug, Clone)]
pub struct InterferenceStudy {
    pub thinning: ThinningType,
    pub r_max: f64,
    pub r_tx: f64,
    pub points: Vec<InterferencePoint>,
}

pub fn interference_study(
    thinning: ThinningType,
    seed: u64,
    effort: Effort,
) -> Result<InterferenceStudy, SimError> {
    let r_max = effort.pick(12.0, 20.0);
    let wanted = effort.pick(2_000.0, 12_000.0);
    let base = reference(0.05);
    let v_o = exclusion_zone_area(&base).v_o;
    let mut points = Vec::new();
    for (i, lp) in [0.02, 0.05].into_iter().enumerate() {
        let params = base.with_lambda_p(lp);
        let analytic = mean_interference(thinning, &params, &QuadratureConfig::with_r_max(r_max));
        let acceptance_expected = retention_probability(thinning, lp, v_o);
        let replications = (wanted / acceptance_expected).ceil() as usize;
        let sim = SimulationConfig::new(
            thinning,
            r_max,
            replications,
            derived_seed(seed, 40 + thinning as u64 * 4 + i as u64),
            &params,
        );
        let palm = palm_interference(&sim, &params)?;
        points.push(InterferencePoint {
            lambda_p: lp,
            analytic,
            palm,
            acceptance_expected,
        });
    }
    Ok(InterferenceStudy {
        thinning,
        r_max,
        r_tx: base.r_tx,
        points,
    })
}

/// Quadrature against the Palm estimate: converged grid history and overlapping intervals.
pub fn interference_agreement(study: &InterferenceStudy) -> Vec<CheckOutcome> {
    let t = study.thinning;
    let mut out = Vec::new();
    for p in &study.points {
        let label = format!("{t} lambda_p={}", format_float(p.lambda_p));
        let mc = p.palm.interference;
        match &p.analytic {
            Ok(res) => {
                let change = res.relative_change();
                out.push(
                    CheckOutcome::new(
                        6,
                        format!("{label} grid change"),
                        change < 5e-3,
                        change,
                        5e-3,
                    )
                    .with_detail(format!("history {:?}", res.grid_estimate_history)),
                );
                let gap = (res.mean_interference - mc.mean).abs();
                let allowed = mc.half_width_95 + res.discretization_error();
                out.push(
                    CheckOutcome::new(
                        6,
                        format!("{label} quadrature vs Palm"),
                        gap <= allowed,
                        gap,
                        allowed,
                    )
                    .with_detail(format!(
                        "quadrature {:.6e}, Palm {:.6e} +- {:.2e} over {} samples",
                        res.mean_interference, mc.mean, mc.half_width_95, mc.n
                    )),
                );
            }
            Err(e) => {
                let (change, history) = match e {
                    AnalysisError::NotConverged { history } => {
                        let [.., a, b] = history.as_slice() else {
                            unreachable!("history has every level")
                        };
                        (((b - a) / b).abs(), format!("{history:?}"))
                    }
                    other => (f64::INFINITY, other.to_string()),
                };
                out.push(
                    CheckOutcome::new(6, format!("{label} grid change"), false, change, 5e-3)
                        .with_detail(format!("quadrature did not converge: {history}")),
                );
                out.push(
                    CheckOutcome::new(
                        6,
                        format!("{label} quadrature vs Palm"),
                        false,
                        f64::NAN,
                        mc.half_width_95,
                    )
                    .with_detail(format!(
                        "Palm {:.6e} +- {:.2e}, no quadrature value",
                        mc.mean, mc.half_width_95
                    )),
                );
            }
        }
    }
    out
}

/// Interferer distances and acceptance rates from the Palm runs.
pub fn palm_invariants(study: &InterferenceStudy) -> Vec<CheckOutcome> {
    let t = study.thinning;
    let mut out = Vec::new();
    let closest = study
        .points
        .iter()
        .filter_map(|p| p.palm.min_interferer_distance)
        .fold(f64::INFINITY, f64::min);
    out.push(
        CheckOutcome::new(
            7,
            format!("{t} interferers outside r_tx"),
            closest >= study.r_tx,
            closest,
            study.r_tx,
        )
        .with_detail(format!("closest interferer at {closest:.4}")),
    );
    for p in &study.points {
        let rate = p.palm.acceptance_rate();
        let se = p.palm.acceptance_std_error(p.acceptance_expected);
        let z = (rate - p.acceptance_expected).abs() / se;
        out.push(
            CheckOutcome::new(
                7,
                format!("{t} acceptance at lambda_p={}", format_float(p.lambda_p)),
                z <= 3.0,
                z,
                3.0,
            )
            .with_detail(format!(
                "rate {rate:.5}, expected {:.5}",
                p.acceptance_expected
            )),
        );
    }
    out
}

pub fn interference_checks(seed: u64, effort: Effort) -> Result<Vec<CheckOutcome>, SimError> {
    let mut out = Vec::new();
    for thinning in ThinningType::ALL {
        let study = interference_study(thinning, seed, effort)?;
        out.extend(interference_agreement(&study));
        out.extend(palm_invariants(&study));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_quantile_small_cases() {
        assert_eq!(poisson_quantile(0.0, 0.999), 0);
        assert_eq!(poisson_quantile(2.7, 0.999), 9);
    }

    #[test]
    fn outcome_csv_is_stable() {
        let o = [CheckOutcome::new(5, "x", true, 0.25, 1.0)];
        assert_eq!(
            outcomes_csv(&o),
            "criterion,check,passed,observed,threshold\n5,x,true,2.5000000000000000e-1,1.0000000000000000e0\n"
        );
    }

    #[test]
    fn quick_geometry_passes() {
        assert!(geometry_checks(3, Effort::Quick).iter().all(|o| o.passed));
    }
}
