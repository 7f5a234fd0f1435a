//! Monte Carlo oracle: Poisson bipolar sampling, both RTS/CTS thinning rules,
//! retained-intensity estimates and Palm-conditioned interference at a typical
//! receiver.
//!
//! # Random streams
//!
//! Replication `i` of an experiment seeded with `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`. Within a replication the
//! draws are, in order: the pair count, then for each pair `x`, `y`, `θ`, mark,
//! each from one `f64` uniform on `[0, 1)`; Palm replications draw the typical
//! pair's mark last. Results therefore do not depend on how replications are
//! spread over worker threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::ThinningType;
use crate::geometry::{PairConfiguration, Point};
use crate::params::{NetworkParams, ParamError};
use crate::scalar::Scalar;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("Palm sampling needs lambda_p > 0")]
    EmptyProcess,
    #[error("no typical pair was retained in {replications} replications; increase the replication count")]
    NoAcceptedSamples { replications: usize },
    #[error("need at least 2 samples for a confidence interval, got {0}")]
    TooFewSamples(usize),
}

/// One potential transmitter with its receiver direction, time stamp and
/// medium-access indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransceiverPair<T> {
    pub tx: Point<T>,
    pub theta: T,
    pub mark: T,
    pub retained: bool,
}

impl<T: Scalar> TransceiverPair<T> {
    pub fn new(tx: Point<T>, theta: T, mark: T) -> Self {
        Self {
            tx,
            theta,
            mark,
            retained: false,
        }
    }

    #[inline]
    pub fn receiver(&self, d: T) -> Point<T> {
        self.tx.offset(d, self.theta)
    }

    /// Strict time-stamp order; equal marks fall back to the transmitter's `(x, y)`.
    #[inline]
    pub fn precedes(&self, other: &Self) -> bool {
        (self.mark, self.tx.x, self.tx.y) < (other.mark, other.tx.x, other.tx.y)
    }
}

/// A realization of potential transceiver pairs on `[-L, L]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration<T> {
    pub pairs: Vec<TransceiverPair<T>>,
    pub window_half_length: T,
    pub params: NetworkParams<T>,
}

impl<T: Scalar> PointConfiguration<T> {
    pub fn retained(&self) -> impl Iterator<Item = &TransceiverPair<T>> {
        self.pairs.iter().filter(|p| p.retained)
    }

    pub fn retained_count(&self) -> usize {
        self.retained().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig<T> {
    pub window_half_length: T,
    pub replications: usize,
    pub seed: u64,
    pub thinning: ThinningType,
    /// Interferers farther than this from the typical transmitter are ignored.
    pub interference_radius: T,
}

impl<T: Scalar> SimulationConfig<T> {
    /// Smallest window that keeps every counted interferer's neighborhood inside it.
    pub fn min_window(interference_radius: T, params: &NetworkParams<T>) -> T {
        interference_radius + params.d + params.r_cs + params.r_tx
    }

    pub fn new(
        thinning: ThinningType,
        interference_radius: T,
        replications: usize,
        seed: u64,
        params: &NetworkParams<T>,
    ) -> Self {
        Self {
            window_half_length: Self::min_window(interference_radius, params),
            replications,
            seed,
            thinning,
            interference_radius,
        }
    }

    pub fn validate(&self, params: &NetworkParams<T>) -> Result<(), ParamError> {
        params.validate()?;
        if !(self.interference_radius.is_finite() && self.interference_radius > T::zero()) {
            return Err(ParamError::new(
                "interference_radius",
                "must be finite and > 0",
            ));
        }
        let need = Self::min_window(self.interference_radius, params);
        if !(self.window_half_length.is_finite() && self.window_half_length >= need) {
            return Err(ParamError::new(
                "window_half_length",
                format!("must be at least {need}, got {}", self.window_half_length),
            ));
        }
        if self.replications == 0 {
            return Err(ParamError::new("replications", "must be at least 1"));
        }
        Ok(())
    }

    /// Half-length of the counting window used for intensity estimates.
    pub fn interior_half_length(&self, params: &NetworkParams<T>) -> T {
        self.window_half_length - (params.r_cs + params.r_tx + params.d)
    }
}

/// Sample mean with a 95% normal confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI<T> {
    pub mean: T,
    pub half_width_95: T,
    pub n: usize,
}

impl<T: Scalar> EstimateWithCI<T> {
    pub fn from_samples(samples: &[T]) -> Result<Self, SimError> {
        let n = samples.len();
        if n < 2 {
            return Err(SimError::TooFewSamples(n));
        }
        let nf = T::from_count(n);
        let mean = samples.iter().copied().sum::<T>() / nf;
        let ss: T = samples.iter().map(|&x| (x - mean) * (x - mean)).sum();
        let sd = (ss / (nf - T::one())).sqrt();
        Ok(Self {
            mean,
            half_width_95: T::lit(Z95) * sd / nf.sqrt(),
            n,
        })
    }

    pub fn std_error(&self) -> T {
        self.half_width_95 / T::lit(Z95)
    }

    pub fn contains(&self, x: T) -> bool {
        (x - self.mean).abs() <= self.half_width_95
    }

    /// Whether `[mean ± half_width_95]` meets `[center ± half_width]`.
    pub fn overlaps(&self, center: T, half_width: T) -> bool {
        (center - self.mean).abs() <= self.half_width_95 + half_width
    }
}

/// The random stream owned by one replication.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

#[inline]
fn uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    dist.sample(rng) as usize
}

fn push_uniform_pairs<T: Scalar, R: Rng + ?Sized>(
    out: &mut Vec<TransceiverPair<T>>,
    count: usize,
    lo: Point<T>,
    hi: Point<T>,
    rng: &mut R,
) {
    let (wx, wy) = (hi.x - lo.x, hi.y - lo.y);
    out.reserve(count);
    for _ in 0..count {
        let x = lo.x + wx * uniform::<T, _>(rng);
        let y = lo.y + wy * uniform::<T, _>(rng);
        let theta = T::two_pi() * uniform::<T, _>(rng);
        let mark = uniform::<T, _>(rng);
        out.push(TransceiverPair::new(Point::new(x, y), theta, mark));
    }
}

/// Samples potential pairs as a Poisson process of intensity `lambda_p` on the window.
pub fn sample_bipolar<T: Scalar, R: Rng + ?Sized>(
    config: &SimulationConfig<T>,
    params: &NetworkParams<T>,
    rng: &mut R,
) -> PointConfiguration<T> {
    let l = config.window_half_length;
    let side = (l + l).as_f64();
    let count = poisson_count(params.lambda_p.as_f64() * side * side, rng);
    let mut pairs = Vec::new();
    push_uniform_pairs(&mut pairs, count, Point::new(-l, -l), Point::new(l, l), rng);
    PointConfiguration {
        pairs,
        window_half_length: l,
        params: *params,
    }
}

/// Uniform grid over transmitter positions with cells as wide as a zone's reach.
struct CellIndex {
    origin: (f64, f64),
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl CellIndex {
    fn build<T: Scalar>(pairs: &[TransceiverPair<T>], cell: f64) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in pairs {
            let (x, y) = (p.tx.x.as_f64(), p.tx.y.as_f64());
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let nx = ((x1 - x0) / cell).floor() as usize + 1;
        let ny = ((y1 - y0) / cell).floor() as usize + 1;
        let mut index = Self {
            origin: (x0, y0),
            cell,
            nx,
            ny,
            starts: vec![0; nx * ny + 1],
            items: vec![0; pairs.len()],
        };
        let slots: Vec<usize> = pairs.iter().map(|p| index.slot(p.tx)).collect();
        for &s in &slots {
            index.starts[s + 1] += 1;
        }
        for s in 0..nx * ny {
            index.starts[s + 1] += index.starts[s];
        }
        let mut fill = index.starts.clone();
        for (i, &s) in slots.iter().enumerate() {
            index.items[fill[s]] = i;
            fill[s] += 1;
        }
        index
    }

    fn coords<T: Scalar>(&self, p: Point<T>) -> (usize, usize) {
        let cx = ((p.x.as_f64() - self.origin.0) / self.cell)
            .floor()
            .max(0.0) as usize;
        let cy = ((p.y.as_f64() - self.origin.1) / self.cell)
            .floor()
            .max(0.0) as usize;
        (cx.min(self.nx - 1), cy.min(self.ny - 1))
    }

    fn slot<T: Scalar>(&self, p: Point<T>) -> usize {
        let (cx, cy) = self.coords(p);
        cy * self.nx + cx
    }

    /// Calls `f` with every indexed pair in the 3x3 block of cells around `p`;
    /// stops early when `f` returns `false`.
    fn visit_near<T: Scalar>(&self, p: Point<T>, mut f: impl FnMut(usize) -> bool) -> bool {
        let (cx, cy) = self.coords(p);
        for y in cy.saturating_sub(1)..=(cy + 1).min(self.ny - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(self.nx - 1) {
                let s = y * self.nx + x;
                for &j in &self.items[self.starts[s]..self.starts[s + 1]] {
                    if !f(j) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

const BRUTE_FORCE_BELOW: usize = 48;

/// Medium-access indicators for the pairs selected by `want` (others are `false`).
///
/// Retention is decided from the full configuration at once: pair `i` is kept
/// under type I iff no other transmitter lies in `B(tx_i, r_cs) ∪ B(rx_i, r_tx)`,
/// and under type II iff every such transmitter has a later time stamp.
pub fn retention_mask<T: Scalar>(
    pairs: &[TransceiverPair<T>],
    params: &NetworkParams<T>,
    thinning: ThinningType,
    want: impl Fn(usize) -> bool + Sync,
) -> Vec<bool> {
    let rcs2 = params.r_cs * params.r_cs;
    let rtx2 = params.r_tx * params.r_tx;
    // `true` when `j` does not prevent `i` from transmitting.
    let compatible = |i: usize, rx_i: Point<T>, j: usize| -> bool {
        if i == j {
            return true;
        }
        let (pi, pj) = (&pairs[i], &pairs[j]);
        let in_zone = pj.tx.dist_sq(pi.tx) <= rcs2 || pj.tx.dist_sq(rx_i) <= rtx2;
        !in_zone
            || match thinning {
                ThinningType::TypeI => false,
                ThinningType::TypeII => pi.precedes(pj),
            }
    };

    if pairs.len() < BRUTE_FORCE_BELOW {
        return (0..pairs.len())
            .map(|i| {
                want(i) && {
                    let rx = pairs[i].receiver(params.d);
                    (0..pairs.len()).all(|j| compatible(i, rx, j))
                }
            })
            .collect();
    }
    let index = CellIndex::build(pairs, params.zone_reach().as_f64());
    (0..pairs.len())
        .map(|i| {
            want(i) && {
                let rx = pairs[i].receiver(params.d);
                index.visit_near(pairs[i].tx, |j| compatible(i, rx, j))
            }
        })
        .collect()
}

fn thin<T: Scalar>(
    mut cfg: PointConfiguration<T>,
    thinning: ThinningType,
) -> PointConfiguration<T> {
    let mask = retention_mask(&cfg.pairs, &cfg.params, thinning, |_| true);
    for (pair, keep) in cfg.pairs.iter_mut().zip(mask) {
        pair.retained = keep;
    }
    cfg
}

/// Applies type I thinning, setting every pair's `retained` flag.
pub fn thin_type1<T: Scalar>(cfg: PointConfiguration<T>) -> PointConfiguration<T> {
    thin(cfg, ThinningType::TypeI)
}

/// Applies type II thinning, setting every pair's `retained` flag.
pub fn thin_type2<T: Scalar>(cfg: PointConfiguration<T>) -> PointConfiguration<T> {
    thin(cfg, ThinningType::TypeII)
}

pub fn apply_thinning<T: Scalar>(
    cfg: PointConfiguration<T>,
    thinning: ThinningType,
) -> PointConfiguration<T> {
    thin(cfg, thinning)
}

/// Retained intensity estimated over `config.replications` independent windows,
/// counting only transmitters inside the interior sub-window.
pub fn empirical_intensity<T: Scalar>(
    config: &SimulationConfig<T>,
    params: &NetworkParams<T>,
) -> Result<EstimateWithCI<T>, SimError> {
    config.validate(params)?;
    if config.replications < 2 {
        return Err(SimError::TooFewSamples(config.replications));
    }
    let inner = config.interior_half_length(params);
    let area = (inner + inner) * (inner + inner);
    let samples: Vec<T> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(config.seed, rep);
            let cfg = sample_bipolar(config, params, &mut rng);
            let interior =
                |i: usize| cfg.pairs[i].tx.x.abs() <= inner && cfg.pairs[i].tx.y.abs() <= inner;
            let mask = retention_mask(&cfg.pairs, params, config.thinning, interior);
            T::from_count(mask.into_iter().filter(|&k| k).count()) / area
        })
        .collect();
    EstimateWithCI::from_samples(&samples)
}

/// Outcome of a Palm-conditioned interference experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PalmEstimate<T> {
    /// Interference at the typical receiver, over accepted replications only.
    pub interference: EstimateWithCI<T>,
    pub replications: usize,
    pub accepted: usize,
    /// Smallest interferer-to-receiver distance seen in any accepted sample.
    pub min_interferer_distance: Option<T>,
}

impl<T: Scalar> PalmEstimate<T> {
    pub fn acceptance_rate(&self) -> T {
        T::from_count(self.accepted) / T::from_count(self.replications)
    }

    /// Binomial standard error of the acceptance rate under the hypothesized `p`.
    pub fn acceptance_std_error(&self, p: T) -> T {
        (p * (T::one() - p) / T::from_count(self.replications)).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
struct PalmSample<T> {
    interference: T,
    closest: Option<T>,
}

fn palm_replication<T: Scalar>(
    config: &SimulationConfig<T>,
    params: &NetworkParams<T>,
    rep: u64,
) -> Option<PalmSample<T>> {
    let mut rng = replication_rng(config.seed, rep);
    let mut cfg = sample_bipolar(config, params, &mut rng);
    let mark = uniform::<T, _>(&mut rng);
    let typical = cfg.pairs.len();
    cfg.pairs
        .push(TransceiverPair::new(Point::origin(), T::zero(), mark));

    let first = retention_mask(&cfg.pairs, params, config.thinning, |i| i == typical);
    if !first[typical] {
        return None;
    }
    let reach2 = config.interference_radius * config.interference_radius;
    let origin = Point::origin();
    let counted = |i: usize| i != typical && cfg.pairs[i].tx.dist_sq(origin) <= reach2;
    let mask = retention_mask(&cfg.pairs, params, config.thinning, counted);
    let receiver = Point::new(params.d, T::zero());
    let mut interference = T::zero();
    let mut closest: Option<T> = None;
    for (pair, keep) in cfg.pairs.iter().zip(mask) {
        if keep {
            let dist = pair.tx.dist(receiver);
            interference += params.p_t * params.path_loss.gain(dist);
            closest = Some(closest.map_or(dist, |c| c.min(dist)));
        }
    }
    Some(PalmSample {
        interference,
        closest,
    })
}

/// Interference at a typical receiver, conditioned on its pair being retained.
///
/// Each replication adds a typical pair at the origin with receiver at `(d, 0)`
/// to a fresh background, thins the augmented configuration and keeps the sample
/// only if the typical pair survives. Interferers are the other retained
/// transmitters within `interference_radius` of the origin; the typical
/// transmitter itself is excluded.
pub fn palm_interference<T: Scalar>(
    config: &SimulationConfig<T>,
    params: &NetworkParams<T>,
) -> Result<PalmEstimate<T>, SimError> {
    config.validate(params)?;
    if params.lambda_p <= T::zero() {
        return Err(SimError::EmptyProcess);
    }
    let outcomes: Vec<Option<PalmSample<T>>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| palm_replication(config, params, rep))
        .collect();
    let accepted: Vec<PalmSample<T>> = outcomes.into_iter().flatten().collect();
    if accepted.is_empty() {
        return Err(SimError::NoAcceptedSamples {
            replications: config.replications,
        });
    }
    let values: Vec<T> = accepted.iter().map(|s| s.interference).collect();
    let min_interferer_distance = accepted
        .iter()
        .filter_map(|s| s.closest)
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))));
    Ok(PalmEstimate {
        interference: EstimateWithCI::from_samples(&values)?,
        replications: config.replications,
        accepted: accepted.len(),
        min_interferer_distance,
    })
}

/// Plants the two pairs of `cfg` (reference pair at the origin with orientation 0)
/// into `draws` independent Poisson backgrounds and counts how often both survive.
///
/// The background only covers the bounding box of the two exclusion zones, which
/// is all that can influence the planted pairs. Planted time stamps are uniform.
pub fn planted_joint_retention<T: Scalar, R: Rng + ?Sized>(
    cfg: &PairConfiguration<T>,
    params: &NetworkParams<T>,
    thinning: ThinningType,
    draws: usize,
    rng: &mut R,
) -> usize {
    let reach = params.zone_reach();
    let tx2 = cfg.second_transmitter();
    let lo = Point::new(tx2.x.min(T::zero()) - reach, tx2.y.min(T::zero()) - reach);
    let hi = Point::new(tx2.x.max(T::zero()) + reach, tx2.y.max(T::zero()) + reach);
    let mean = (params.lambda_p * (hi.x - lo.x) * (hi.y - lo.y)).as_f64();
    let mut pairs: Vec<TransceiverPair<T>> = Vec::new();
    let mut both = 0;
    for _ in 0..draws {
        pairs.clear();
        let m1 = uniform::<T, _>(rng);
        let m2 = uniform::<T, _>(rng);
        pairs.push(TransceiverPair::new(Point::origin(), T::zero(), m1));
        pairs.push(TransceiverPair::new(tx2, cfg.theta, m2));
        let n = poisson_count(mean, rng);
        push_uniform_pairs(&mut pairs, n, lo, hi, rng);
        let mask = retention_mask(&pairs, params, thinning, |i| i < 2);
        if mask[0] && mask[1] {
            both += 1;
        }
    }
    both
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(lambda_p: f64) -> NetworkParams<f64> {
        NetworkParams::reference(lambda_p)
    }

    fn pair(x: f64, y: f64, theta: f64, mark: f64) -> TransceiverPair<f64> {
        TransceiverPair::new(Point::new(x, y), theta, mark)
    }

    fn config(pairs: Vec<TransceiverPair<f64>>) -> PointConfiguration<f64> {
        PointConfiguration {
            pairs,
            window_half_length: 20.0,
            params: params(0.05),
        }
    }

    fn flags(cfg: &PointConfiguration<f64>) -> Vec<bool> {
        cfg.pairs.iter().map(|p| p.retained).collect()
    }

    #[test]
    fn single_pair_is_retained() {
        let cfg = config(vec![pair(0.0, 0.0, 1.0, 0.5)]);
        assert_eq!(flags(&thin_type1(cfg.clone())), [true]);
        assert_eq!(flags(&thin_type2(cfg)), [true]);
    }

    #[test]
    fn carrier_sense_conflict_removes_both_under_type1() {
        let cfg = config(vec![pair(0.0, 0.0, 0.0, 0.7), pair(0.0, 1.5, 0.0, 0.2)]);
        assert_eq!(flags(&thin_type1(cfg.clone())), [false, false]);
        assert_eq!(flags(&thin_type2(cfg)), [false, true]);
    }

    #[test]
    fn one_sided_cts_conflict() {
        // Pair 2's transmitter sits 0.5 from pair 1's receiver at (2, 0); pair 1's
        // transmitter is outside both of pair 2's disks.
        let cfg = config(vec![pair(0.0, 0.0, 0.0, 0.9), pair(2.5, 0.0, 0.0, 0.1)]);
        assert_eq!(flags(&thin_type1(cfg.clone())), [false, true]);
        assert_eq!(flags(&thin_type2(cfg)), [false, true]);
        let cfg = config(vec![pair(0.0, 0.0, 0.0, 0.1), pair(2.5, 0.0, 0.0, 0.9)]);
        assert_eq!(flags(&thin_type2(cfg)), [true, true]);
    }

    #[test]
    fn equal_marks_break_ties_by_position() {
        let cfg = config(vec![pair(0.5, 0.0, 0.0, 0.3), pair(0.0, 0.0, 0.0, 0.3)]);
        assert_eq!(flags(&thin_type2(cfg)), [false, true]);
    }

    #[test]
    fn empty_process_samples_nothing() {
        let p = params(0.0);
        let c = SimulationConfig::new(ThinningType::TypeI, 10.0, 3, 9, &p);
        let cfg = sample_bipolar(&c, &p, &mut replication_rng(9, 0));
        assert!(cfg.pairs.is_empty());
    }

    #[test]
    fn sampling_is_deterministic_and_in_window() {
        let p = params(0.2);
        let c = SimulationConfig::new(ThinningType::TypeII, 10.0, 3, 11, &p);
        let a = sample_bipolar(&c, &p, &mut replication_rng(11, 2));
        let b = sample_bipolar(&c, &p, &mut replication_rng(11, 2));
        assert_eq!(a, b);
        let l = c.window_half_length;
        assert!(a
            .pairs
            .iter()
            .all(|q| q.tx.x.abs() <= l && q.tx.y.abs() <= l));
        assert!(a.pairs.iter().all(|q| (0.0..1.0).contains(&q.mark)));
        let other = sample_bipolar(&c, &p, &mut replication_rng(11, 3));
        assert_ne!(a, other);
    }

    #[test]
    fn mean_pair_count_matches_poisson() {
        let p = params(0.05);
        let c = SimulationConfig {
            window_half_length: 10.0,
            ..SimulationConfig::new(ThinningType::TypeI, 1.0, 1000, 5, &p)
        };
        let counts: Vec<f64> = (0..1000)
            .map(|rep| {
                sample_bipolar(&c, &p, &mut replication_rng(5, rep))
                    .pairs
                    .len() as f64
            })
            .collect();
        let est = EstimateWithCI::from_samples(&counts).unwrap();
        let want = 0.05 * 400.0;
        assert!((est.mean - want).abs() <= 3.0 * est.std_error(), "{est:?}");
    }

    #[test]
    fn grid_and_brute_force_agree() {
        let p = params(0.3);
        let c = SimulationConfig::new(ThinningType::TypeII, 4.0, 1, 21, &p);
        let cfg = sample_bipolar(&c, &p, &mut replication_rng(21, 0));
        assert!(cfg.pairs.len() > BRUTE_FORCE_BELOW);
        for thinning in ThinningType::ALL {
            let fast = retention_mask(&cfg.pairs, &p, thinning, |_| true);
            let rcs2 = p.r_cs * p.r_cs;
            let rtx2 = p.r_tx * p.r_tx;
            let slow: Vec<bool> = (0..cfg.pairs.len())
                .map(|i| {
                    let pi = cfg.pairs[i];
                    let rx = pi.receiver(p.d);
                    cfg.pairs.iter().enumerate().all(|(j, pj)| {
                        j == i
                            || !(pj.tx.dist_sq(pi.tx) <= rcs2 || pj.tx.dist_sq(rx) <= rtx2)
                            || (thinning == ThinningType::TypeII && pi.precedes(pj))
                    })
                })
                .collect();
            assert_eq!(fast, slow, "{thinning}");
        }
    }

    #[test]
    fn palm_requires_positive_density() {
        let p = params(0.0);
        let c = SimulationConfig::new(ThinningType::TypeI, 10.0, 10, 1, &p);
        assert_eq!(palm_interference(&c, &p), Err(SimError::EmptyProcess));
    }

    #[test]
    fn palm_in_sparse_network() {
        let p = params(1e-6);
        let c = SimulationConfig::new(ThinningType::TypeI, 10.0, 200, 1, &p);
        let est = palm_interference(&c, &p).unwrap();
        assert_eq!(est.accepted, 200);
        assert_eq!(est.interference.mean, 0.0);
    }

    #[test]
    fn window_validation() {
        let p = params(0.1);
        let mut c = SimulationConfig::new(ThinningType::TypeI, 10.0, 10, 1, &p);
        c.window_half_length = 10.0;
        assert_eq!(c.validate(&p).unwrap_err().field, "window_half_length");
        c.window_half_length = 15.0;
        c.replications = 0;
        assert_eq!(c.validate(&p).unwrap_err().field, "replications");
    }

    #[test]
    fn estimate_needs_two_samples() {
        assert_eq!(
            EstimateWithCI::<f64>::from_samples(&[1.0]),
            Err(SimError::TooFewSamples(1))
        );
        let e = EstimateWithCI::from_samples(&[1.0, 3.0]).unwrap();
        assert_eq!(e.mean, 2.0);
        assert!(e.half_width_95 > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn thinning_postconditions(seed in 0u64..10_000, lp in 0.02..0.6f64) {
            let p = params(lp);
            let c = SimulationConfig::new(ThinningType::TypeI, 3.0, 1, seed, &p);
            let cfg = sample_bipolar(&c, &p, &mut replication_rng(seed, 0));
            let t1 = thin_type1(cfg.clone());
            let t2 = thin_type2(cfg);
            let rcs2 = p.r_cs * p.r_cs;
            let rtx2 = p.r_tx * p.r_tx;
            for (a, b) in t1.pairs.iter().zip(&t2.pairs) {
                prop_assert!(!a.retained || b.retained);
            }
            for a in t1.retained() {
                for b in t1.retained() {
                    if a != b {
                        prop_assert!(a.tx.dist_sq(b.tx) > rcs2);
                    }
                }
            }
            for a in t2.retained() {
                let rx = a.receiver(p.d);
                for b in &t2.pairs {
                    if b != a && (b.tx.dist_sq(a.tx) <= rcs2 || b.tx.dist_sq(rx) <= rtx2) {
                        prop_assert!(a.precedes(b));
                    }
                }
            }
        }
    }
}
