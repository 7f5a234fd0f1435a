//! Reference computations used to check the main code paths.
//!
//! Nothing here calls into `geometry` or `analysis`: areas are estimated by
//! dart throwing, `β` by two-dimensional Gauss–Legendre quadrature of its defining
//! double integral, and the small-density interference limit by a polar integral
//! whose receiver-orientation average is done in closed form.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::Rng;

use crate::analysis::ThinningType;
use crate::params::NetworkParams;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DartEstimate {
    pub area: f64,
    pub std_error: f64,
}

impl DartEstimate {
    pub fn z_score(&self, value: f64) -> f64 {
        if self.std_error == 0.0 {
            if value == self.area {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (value - self.area) / self.std_error
        }
    }
}

/// Area of a union of disks `(x, y, r)` by uniform darts over the bounding box.
pub fn dart_union_area<R: Rng + ?Sized>(
    disks: &[(f64, f64, f64)],
    darts: u64,
    rng: &mut R,
) -> DartEstimate {
    if disks.is_empty() || darts == 0 {
        return DartEstimate {
            area: 0.0,
            std_error: 0.0,
        };
    }
    let x0 = disks
        .iter()
        .map(|d| d.0 - d.2)
        .fold(f64::INFINITY, f64::min);
    let x1 = disks
        .iter()
        .map(|d| d.0 + d.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let y0 = disks
        .iter()
        .map(|d| d.1 - d.2)
        .fold(f64::INFINITY, f64::min);
    let y1 = disks
        .iter()
        .map(|d| d.1 + d.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let (w, h) = (x1 - x0, y1 - y0);
    let mut hits = 0u64;
    for _ in 0..darts {
        let x = x0 + w * rng.random::<f64>();
        let y = y0 + h * rng.random::<f64>();
        if disks
            .iter()
            .any(|&(cx, cy, r)| (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
        {
            hits += 1;
        }
    }
    let p = hits as f64 / darts as f64;
    let box_area = w * h;
    DartEstimate {
        area: box_area * p,
        std_error: box_area * (p * (1.0 - p) / darts as f64).sqrt(),
    }
}

/// Intersection area of two disks a distance `dist` apart, by dart throwing.
pub fn dart_lens_area<R: Rng + ?Sized>(
    r1: f64,
    r2: f64,
    dist: f64,
    darts: u64,
    rng: &mut R,
) -> DartEstimate {
    let x0 = (-r1).max(dist - r2);
    let x1 = r1.min(dist + r2);
    let h = r1.min(r2);
    if x1 <= x0 {
        return DartEstimate {
            area: 0.0,
            std_error: 0.0,
        };
    }
    let mut hits = 0u64;
    for _ in 0..darts {
        let x = x0 + (x1 - x0) * rng.random::<f64>();
        let y = h * (2.0 * rng.random::<f64>() - 1.0);
        if x * x + y * y <= r1 * r1 && (x - dist) * (x - dist) + y * y <= r2 * r2 {
            hits += 1;
        }
    }
    let p = hits as f64 / darts as f64;
    let box_area = (x1 - x0) * 2.0 * h;
    DartEstimate {
        area: box_area * p,
        std_error: box_area * (p * (1.0 - p) / darts as f64).sqrt(),
    }
}

fn rule(nodes: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(nodes).expect("nonzero node count"))
}

/// Composite Gauss–Legendre over `[a, b]` split into `panels` equal pieces.
fn composite(
    gl: &GaussLegendre,
    a: f64,
    b: f64,
    panels: usize,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            gl.integrate(lo, lo + h, &mut f)
        })
        .sum()
}

/// `∫_0^1 e^{-λ s v_o} ∫_0^s e^{-λ u (v - v_o)} du ds` by nested Gauss–Legendre.
pub fn beta_double_integral(v: f64, v_o: f64, lambda_p: f64) -> f64 {
    let gl = rule(32);
    let panels = 8 + (lambda_p * v).ceil() as usize;
    let a = lambda_p * v_o;
    let b = lambda_p * (v - v_o);
    composite(&gl, 0.0, 1.0, panels, |s| {
        let inner_panels = 1 + (b * s).abs().ceil() as usize;
        (-a * s).exp() * composite(&gl, 0.0, s, inner_panels, |u| (-b * u).exp())
    })
}

/// Fraction of receiver orientations for which a transmitter at distance `r` from
/// the origin has its receiver within `r_tx` of the origin.
fn cts_hit_fraction(r: f64, d: f64, r_tx: f64) -> f64 {
    let c = (r_tx * r_tx - r * r - d * d) / (2.0 * r * d);
    if c >= 1.0 {
        1.0
    } else if c <= -1.0 {
        0.0
    } else {
        1.0 - c.acos() / PI
    }
}

/// `lim_{λ_p → 0} E[I] / λ_p` for the interference integral truncated at `r_max`.
///
/// As the density vanishes, type I joint retention tends to the indicator that no
/// conflict event holds and type II to `1 - [S2]/2 - [S3]/2` outside carrier-sense
/// range. Averaging over the second receiver's orientation turns `[S3]` into an
/// arc fraction, leaving a two-dimensional integral.
pub fn small_density_limit(thinning: ThinningType, params: &NetworkParams<f64>, r_max: f64) -> f64 {
    let (d, r_cs, r_tx) = (params.d, params.r_cs, params.r_tx);
    let gain = |dist: f64| params.path_loss.gain(dist);
    let gl = rule(24);
    // Angular half-width of the set where the transmitter is inside the CTS disk.
    let cts_half_angle = |r: f64| {
        let c = (r * r + d * d - r_tx * r_tx) / (2.0 * r * d);
        if c >= 1.0 {
            0.0
        } else if c <= -1.0 {
            PI
        } else {
            c.acos()
        }
    };
    let dist = |r: f64, phi: f64| (r * r - 2.0 * r * d * phi.cos() + d * d).max(0.0).sqrt();
    let angular = |r: f64| -> f64 {
        let a = cts_half_angle(r);
        let f3 = cts_hit_fraction(r, d, r_tx);
        let outside = if a < PI {
            2.0 * composite(&gl, a, PI, 48, |phi| gain(dist(r, phi)))
        } else {
            0.0
        };
        match thinning {
            ThinningType::TypeI => outside * (1.0 - f3),
            ThinningType::TypeII => {
                let inside = if a > 0.0 {
                    2.0 * composite(&gl, 0.0, a, 48, |phi| gain(dist(r, phi)))
                } else {
                    0.0
                };
                (outside + inside) * (1.0 - 0.5 * f3) - 0.5 * inside
            }
        }
    };
    let mut breaks = vec![r_cs, r_max];
    for b in [d - r_tx, d + r_tx, d, 2.0 * r_cs.max(d + r_tx)] {
        if b > r_cs && b < r_max {
            breaks.push(b);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let total: f64 = breaks
        .windows(2)
        .map(|w| {
            let panels = (((w[1] - w[0]) * 16.0).ceil() as usize).max(8);
            composite(&gl, w[0], w[1], panels, |r| angular(r) * r)
        })
        .sum();
    params.p_t * total
}
