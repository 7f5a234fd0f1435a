//! Closed-form intensities, joint-retention kernels and the mean-interference
//! integral for both thinning rules.
//!
//! Throughout, the typical pair has its transmitter at the origin and its receiver
//! at `(d, 0)`. A second pair is described by a [`PairConfiguration`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::geometry::{conflict_events, exclusion_zone_area, pair_union_area, PairConfiguration};
use crate::params::{NetworkParams, ParamError, PathLossModel};
use crate::scalar::{wrap_angle, Scalar};

/// Which RTS/CTS thinning rule is applied to the potential transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThinningType {
    /// A pair survives only if no other transmitter lies in its exclusion zone.
    #[serde(rename = "type1")]
    TypeI,
    /// A pair survives only if every transmitter in its exclusion zone has a larger time stamp.
    #[serde(rename = "type2")]
    TypeII,
}

impl ThinningType {
    pub const ALL: [ThinningType; 2] = [ThinningType::TypeI, ThinningType::TypeII];

    pub fn as_str(&self) -> &'static str {
        match self {
            ThinningType::TypeI => "type1",
            ThinningType::TypeII => "type2",
        }
    }
}

impl fmt::Display for ThinningType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThinningType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "type1" | "i" | "1" => Ok(ThinningType::TypeI),
            "type2" | "ii" | "2" => Ok(ThinningType::TypeII),
            other => Err(format!(
                "unknown thinning type `{other}` (expected type1 or type2)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("mean interference is undefined for an empty process (lambda_p = 0)")]
    EmptyProcess,
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("quadrature did not converge: successive estimates {history:?}")]
    NotConverged { history: Vec<f64> },
}

#[inline]
pub fn path_loss<T: Scalar>(r: T, model: &PathLossModel<T>) -> T {
    model.gain(r)
}

/// `(1 - e^{-x}) / x`, equal to 1 at `x = 0`.
#[inline]
fn one_minus_exp_over<T: Scalar>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        -(-x).exp_m1() / x
    }
}

/// Retained intensity under type I thinning: `lambda_p * exp(-lambda_p * v_o)`.
pub fn intensity_type1<T: Scalar>(lambda_p: T, v_o: T) -> T {
    lambda_p * (-lambda_p * v_o).exp()
}

/// The `lambda_p` maximizing [`intensity_type1`].
pub fn optimal_lambda_p_type1<T: Scalar>(v_o: T) -> T {
    v_o.recip()
}

/// Retained intensity under type II thinning: `(1 - exp(-lambda_p * v_o)) / v_o`.
pub fn intensity_type2<T: Scalar>(lambda_p: T, v_o: T) -> T {
    -(-lambda_p * v_o).exp_m1() / v_o
}

pub fn intensity<T: Scalar>(thinning: ThinningType, lambda_p: T, v_o: T) -> T {
    match thinning {
        ThinningType::TypeI => intensity_type1(lambda_p, v_o),
        ThinningType::TypeII => intensity_type2(lambda_p, v_o),
    }
}

/// Probability that a typical potential transmitter survives thinning,
/// `intensity / lambda_p`. Equals 1 at `lambda_p = 0`.
pub fn retention_probability<T: Scalar>(thinning: ThinningType, lambda_p: T, v_o: T) -> T {
    match thinning {
        ThinningType::TypeI => (-lambda_p * v_o).exp(),
        ThinningType::TypeII => one_minus_exp_over(lambda_p * v_o),
    }
}

/// Below this gap `lambda_p * (v - v_o)` [`beta`] switches to its Taylor series.
pub const BETA_SERIES_THRESHOLD: f64 = 1e-2;
const BETA_SERIES_TERMS: usize = 12;

/// `∫_0^1 s^n e^{-x s} ds` for `x >= 0`.
fn moment<T: Scalar>(n: usize, x: T) -> T {
    let n1 = T::from_count(n + 1);
    if x <= T::zero() {
        return n1.recip();
    }
    if x > T::lit(2.0) * n1 + T::lit(8.0) {
        // n!/x^{n+1} * P(Poisson(x) > n); the subtracted mass is well below 1/2 here.
        let mut term = (-x).exp();
        let mut head = term;
        let mut fact = T::one();
        for k in 1..=n {
            term = term * x / T::from_count(k);
            head += term;
            fact *= T::from_count(k);
        }
        return fact / x.powi(n as i32 + 1) * (T::one() - head);
    }
    // e^{-x} * sum_j n! x^j / (n+1+j)!, all terms positive.
    let mut term = n1.recip();
    let mut sum = term;
    let eps = T::epsilon() * T::lit(0.1);
    for j in 0..10_000 {
        term = term * x / T::from_count(n + 2 + j);
        sum += term;
        if term <= eps * sum {
            break;
        }
    }
    (-x).exp() * sum
}

/// Mark-averaged joint retention of two non-conflicting type II pairs whose
/// exclusion zones cover `v` in total, each of area `v_o`:
///
/// `β = (v_o e^{-λ v} - v e^{-λ v_o} + v - v_o) / (λ² (v - v_o) v v_o)`.
///
/// Evaluated as the divided difference of `(1 - e^{-t})/t` between `λ v_o` and
/// `λ v`, and by its Taylor series when the two are closer than
/// [`BETA_SERIES_THRESHOLD`]. Returns `1/2` at `λ = 0`.
pub fn beta<T: Scalar>(v: T, v_o: T, lambda_p: T) -> T {
    let x = lambda_p * v_o;
    let y = lambda_p * v;
    let gap = y - x;
    if gap.abs() < T::lit(BETA_SERIES_THRESHOLD) {
        let mut sum = T::zero();
        let mut scale = T::one(); // gap^{n-1} / n!
        for n in 1..=BETA_SERIES_TERMS {
            scale /= T::from_count(n);
            let term = moment(n, x) * scale;
            if n % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
            scale *= gap;
        }
        sum
    } else {
        (one_minus_exp_over(x) - one_minus_exp_over(y)) / gap
    }
}

/// Precomputed kernel evaluator for one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct Kernel<T> {
    params: NetworkParams<T>,
    v_o: T,
    thinning: ThinningType,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(thinning: ThinningType, params: &NetworkParams<T>) -> Self {
        Self {
            params: *params,
            v_o: exclusion_zone_area(params).v_o,
            thinning,
        }
    }

    pub fn v_o(&self) -> T {
        self.v_o
    }

    /// Probability that both pairs in `cfg` survive thinning.
    pub fn eval(&self, cfg: &PairConfiguration<T>) -> T {
        let ev = conflict_events(cfg, &self.params);
        let lp = self.params.lambda_p;
        match self.thinning {
            ThinningType::TypeI => {
                if ev.any() {
                    T::zero()
                } else {
                    (-lp * pair_union_area(cfg, &self.params)).exp()
                }
            }
            ThinningType::TypeII => {
                if ev.s1 || (ev.s2 && ev.s3) {
                    return T::zero();
                }
                let b = beta(pair_union_area(cfg, &self.params), self.v_o, lp);
                if ev.s2 || ev.s3 {
                    b
                } else {
                    b + b
                }
            }
        }
    }

    /// Kernel value once the two exclusion zones are disjoint.
    pub fn far_field(&self) -> T {
        let lp = self.params.lambda_p;
        let two_v = self.v_o + self.v_o;
        match self.thinning {
            ThinningType::TypeI => (-lp * two_v).exp(),
            ThinningType::TypeII => T::lit(2.0) * beta(two_v, self.v_o, lp),
        }
    }
}

/// Joint retention probability of two pairs under type I thinning.
pub fn k_type1<T: Scalar>(cfg: &PairConfiguration<T>, params: &NetworkParams<T>) -> T {
    Kernel::new(ThinningType::TypeI, params).eval(cfg)
}

/// Joint retention probability of two pairs under type II thinning.
pub fn k_type2<T: Scalar>(cfg: &PairConfiguration<T>, params: &NetworkParams<T>) -> T {
    Kernel::new(ThinningType::TypeII, params).eval(cfg)
}

/// Grid settings for the mean-interference integral.
///
/// The integral over the transmitter distance `r` is truncated at `r_max`. The
/// base grid has `n_r x n_phi x n_theta` midpoint cells and is doubled in every
/// direction up to `refine_levels` times until two successive estimates differ by
/// less than `rel_tol` (relative).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig<T> {
    pub r_max: T,
    pub n_r: usize,
    pub n_phi: usize,
    pub n_theta: usize,
    pub refine_levels: usize,
    pub rel_tol: T,
}

impl<T: Scalar> QuadratureConfig<T> {
    /// Coarse defaults with the given truncation radius.
    pub fn with_r_max(r_max: T) -> Self {
        Self {
            r_max,
            n_r: 16,
            n_phi: 32,
            n_theta: 16,
            refine_levels: 4,
            rel_tol: T::lit(5e-3),
        }
    }

    pub fn validate(&self, params: &NetworkParams<T>) -> Result<(), ParamError> {
        let floor = params.r_cs + T::lit(2.0) * (params.d + params.r_tx);
        if !(self.r_max.is_finite() && self.r_max > floor) {
            return Err(ParamError::new(
                "r_max",
                format!(
                    "must exceed r_cs + 2 d + 2 r_tx = {floor}, got {}",
                    self.r_max
                ),
            ));
        }
        for (field, n) in [
            ("n_r", self.n_r),
            ("n_phi", self.n_phi),
            ("n_theta", self.n_theta),
        ] {
            if n < 8 {
                return Err(ParamError::new(
                    field,
                    format!("must be at least 8, got {n}"),
                ));
            }
        }
        if !self.n_phi.is_multiple_of(2) {
            return Err(ParamError::new("n_phi", "must be even"));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > T::zero()) {
            return Err(ParamError::new("rel_tol", "must be finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceResult<T> {
    /// Reduced Palm mean of the interference at the typical receiver.
    pub mean_interference: T,
    /// Upper bound on the part of the integral beyond `r_max`.
    pub truncation_bound: T,
    /// Estimate after every grid level, coarsest first.
    pub grid_estimate_history: Vec<T>,
}

impl<T: Scalar> InterferenceResult<T> {
    /// Absolute change between the last two grid levels.
    pub fn discretization_error(&self) -> T {
        match self.grid_estimate_history.as_slice() {
            [.., a, b] => (*b - *a).abs(),
            _ => T::infinity(),
        }
    }

    pub fn relative_change(&self) -> T {
        self.discretization_error() / self.mean_interference.abs()
    }
}

/// `∫_R^∞ l(r - d) r dr` for the power-law model, in closed form.
fn radial_tail<T: Scalar>(r_max: T, params: &NetworkParams<T>) -> T {
    let m = &params.path_loss;
    let u = r_max - params.d;
    let a = m.exponent;
    let two = T::lit(2.0);
    m.amplitude * (u.powf(two - a) / (a - two) + params.d * u.powf(T::one() - a) / (a - T::one()))
}

/// Analytic bound on the neglected tail, using `k <= 1` and `|x - z| >= r - d`.
pub fn tail_bound<T: Scalar>(thinning: ThinningType, params: &NetworkParams<T>, r_max: T) -> T {
    let v_o = exclusion_zone_area(params).v_o;
    prefactor(thinning, params, v_o) * T::lit(4.0) * T::PI() * T::PI() * radial_tail(r_max, params)
}

/// `lambda_p^2 P_t / (2π λ)`, written to stay accurate as `lambda_p -> 0`.
fn prefactor<T: Scalar>(thinning: ThinningType, params: &NetworkParams<T>, v_o: T) -> T {
    let keep = retention_probability(thinning, params.lambda_p, v_o);
    params.lambda_p * params.p_t / (T::two_pi() * keep)
}

/// Midpoint nodes and weights on `[a, b]`, split at `breaks` so that no cell
/// straddles a break. About `n` nodes in total, at least one per piece.
fn split_midpoints<T: Scalar>(a: T, b: T, breaks: &[T], n: usize, out: &mut Vec<(T, T)>) {
    out.clear();
    let mut edges: SmallVec<[T; 8]> = SmallVec::new();
    edges.push(a);
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    let span = b - a;
    let half = T::lit(0.5);
    for w in edges.windows(2) {
        let len = w[1] - w[0];
        if len <= T::zero() {
            continue;
        }
        let m = (T::from_count(n) * len / span)
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let h = len / T::from_count(m);
        out.extend((0..m).map(|i| (w[0] + (T::from_count(i) + half) * h, h)));
    }
}

/// `acos` of a cosine bound, or `None` when the bound excludes no angle or every angle.
fn arc_edge<T: Scalar>(c: T) -> Option<T> {
    (c > -T::one() && c < T::one()).then(|| c.acos())
}

struct Integrand<T> {
    kernel: Kernel<T>,
    params: NetworkParams<T>,
}

impl<T: Scalar> Integrand<T> {
    /// `∭ l(|x - z|) k(r, φ, 0, θ) r dθ dφ dr` over `[r_cs, r_max]` on one grid.
    ///
    /// The kernel jumps where the second transmitter enters the CTS disk of the
    /// reference receiver (an arc in `φ`) and where the second receiver enters the
    /// CTS disk of the reference transmitter (an arc in `θ - φ`). Cells are split
    /// at those arcs so every cell sees a smooth integrand.
    fn integrate(&self, r_max: T, n_r: usize, n_phi: usize, n_theta: usize) -> T {
        let p = &self.params;
        let two = T::lit(2.0);
        let pi = T::PI();
        let tau = T::two_pi();
        let d2 = p.d * p.d;
        let rtx2 = p.r_tx * p.r_tx;
        // Beyond this separation the zones are disjoint, no conflict event can occur
        // and the kernel no longer depends on the geometry.
        let r_split = (two * p.zone_reach()).min(r_max);
        let mut radii = Vec::new();
        split_midpoints(
            p.r_cs,
            r_split,
            &[p.d - p.r_tx, p.d + p.r_tx],
            n_r,
            &mut radii,
        );

        let near: Vec<T> = radii
            .par_iter()
            .map(|&(r, h_r)| {
                let mut phis = Vec::new();
                let mut thetas = Vec::new();
                let two_rd = two * r * p.d;
                let s2_edge = arc_edge((r * r + d2 - rtx2) / two_rd);
                let s3_edge = arc_edge((rtx2 - r * r - d2) / two_rd);
                let phi_breaks: SmallVec<[T; 1]> = s2_edge.into_iter().collect();
                let theta_breaks: SmallVec<[T; 2]> =
                    s3_edge.into_iter().flat_map(|a| [a, tau - a]).collect();
                split_midpoints(T::zero(), pi, &phi_breaks, n_phi / 2, &mut phis);
                split_midpoints(T::zero(), tau, &theta_breaks, n_theta, &mut thetas);
                let mut slice = T::zero();
                for &(phi, h_phi) in &phis {
                    let dist = (r * r - two_rd * phi.cos() + d2).max(T::zero()).sqrt();
                    let gain = p.path_loss.gain(dist);
                    let mut inner = T::zero();
                    for &(rel, h_theta) in &thetas {
                        let cfg = PairConfiguration {
                            r,
                            phi,
                            theta: wrap_angle(phi + rel),
                        };
                        inner += self.kernel.eval(&cfg) * h_theta;
                    }
                    slice += gain * inner * h_phi;
                }
                // Mirror symmetry (φ, θ) -> (2π - φ, 2π - θ) doubles the half sum.
                two * slice * r * h_r
            })
            .collect();
        let mut total = near.into_iter().sum::<T>();

        if r_split < r_max {
            let span = r_split - p.r_cs;
            let blocks = ((r_max - r_split) / span)
                .ceil()
                .to_usize()
                .unwrap_or(1)
                .max(1);
            let n_far = n_r * blocks;
            let half = T::lit(0.5);
            let h_far = (r_max - r_split) / T::from_count(n_far);
            let h_phi = pi / T::from_count(n_phi / 2);
            let cosines: Vec<T> = (0..n_phi / 2)
                .map(|j| ((T::from_count(j) + half) * h_phi).cos())
                .collect();
            let far: Vec<T> = (0..n_far)
                .into_par_iter()
                .map(|i| {
                    let r = r_split + (T::from_count(i) + half) * h_far;
                    let slice: T = cosines
                        .iter()
                        .map(|&c| p.path_loss.gain((r * r - two * r * p.d * c + d2).sqrt()))
                        .sum();
                    two * slice * r
                })
                .collect();
            total += far.into_iter().sum::<T>() * h_far * h_phi * tau * self.kernel.far_field();
        }
        total
    }
}

/// Mean interference at the typical receiver, by grid-doubled midpoint quadrature.
///
/// The integrand vanishes for `r <= r_cs`, so the radial grid starts there.
pub fn mean_interference<T: Scalar>(
    thinning: ThinningType,
    params: &NetworkParams<T>,
    quad: &QuadratureConfig<T>,
) -> Result<InterferenceResult<T>, AnalysisError> {
    params.validate()?;
    quad.validate(params)?;
    if params.lambda_p <= T::zero() {
        return Err(AnalysisError::EmptyProcess);
    }
    let kernel = Kernel::new(thinning, params);
    let scale = prefactor(thinning, params, kernel.v_o());
    let integrand = Integrand {
        kernel,
        params: *params,
    };
    let truncation_bound = tail_bound(thinning, params, quad.r_max);

    let mut history: Vec<T> = Vec::with_capacity(quad.refine_levels + 1);
    for level in 0..=quad.refine_levels {
        let m = 1usize << level;
        let est =
            scale * integrand.integrate(quad.r_max, quad.n_r * m, quad.n_phi * m, quad.n_theta * m);
        history.push(est);
        if let [.., prev, last] = history.as_slice() {
            if (*last - *prev).abs() <= quad.rel_tol * last.abs() {
                return Ok(InterferenceResult {
                    mean_interference: *last,
                    truncation_bound,
                    grid_estimate_history: history,
                });
            }
        }
    }
    Err(AnalysisError::NotConverged {
        history: history.iter().map(|v| v.as_f64()).collect(),
    })
}

/// Smallest truncation radius whose tail bound is at most `target` times a coarse
/// pilot estimate of the integral.
pub fn suggest_r_max<T: Scalar>(
    thinning: ThinningType,
    params: &NetworkParams<T>,
    target: T,
) -> Result<T, AnalysisError> {
    params.validate()?;
    if params.lambda_p <= T::zero() {
        return Err(AnalysisError::EmptyProcess);
    }
    let two = T::lit(2.0);
    let floor = params.r_cs + two * (params.d + params.r_tx);
    let r0 = (two * two * params.zone_reach()).max(floor + T::one());
    let pilot = Integrand {
        kernel: Kernel::new(thinning, params),
        params: *params,
    }
    .integrate(r0, 16, 32, 16);
    let tail_at = |r: T| T::lit(4.0) * T::PI() * T::PI() * radial_tail(r, params);
    let budget = target * pilot;
    let (mut lo, mut hi) = (r0, r0);
    while tail_at(hi) > budget {
        lo = hi;
        hi *= two;
        if hi > T::lit(1e9) {
            return Ok(hi);
        }
    }
    if hi == r0 {
        return Ok(r0);
    }
    for _ in 0..60 {
        let mid = (lo + hi) / two;
        if tail_at(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
