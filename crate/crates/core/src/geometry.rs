//! Planar disk algebra for transceiver-pair exclusion zones.
//!
//! A transceiver pair protects the union of its carrier-sense disk (radius `r_cs`,
//! centred on the transmitter) and its CTS disk (radius `r_tx`, centred on the
//! receiver). This module computes the area of one such zone, the area covered by
//! two of them, and the three pairwise conflict events between two pairs.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::params::NetworkParams;
use crate::scalar::{acos_clamped, wrap_angle, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("negative or non-finite radius {0}")]
    BadRadius(f64),
    #[error("negative or non-finite center distance {0}")]
    BadDistance(f64),
    #[error("disk {index} has a non-finite center")]
    NonFiniteCenter { index: usize },
    #[error("transmitter and receiver disks are disjoint (d = {d} >= r_cs + r_tx = {reach})")]
    DisjointZone { d: f64, reach: f64 },
    #[error("invalid pair configuration: {0}")]
    BadConfiguration(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Point at distance `r` from the origin in direction `angle`.
    #[inline]
    pub fn polar(r: T, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(r * c, r * s)
    }

    #[inline]
    pub fn offset(self, r: T, angle: T) -> Self {
        let p = Self::polar(r, angle);
        Self::new(self.x + p.x, self.y + p.y)
    }

    #[inline]
    pub fn dist_sq(self, other: Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, other: Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk<T> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Scalar> Disk<T> {
    pub fn new(center: Point<T>, radius: T) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius >= T::zero()) {
            return Err(GeometryError::BadRadius(radius.as_f64()));
        }
        Ok(Self { center, radius })
    }

    /// Closed-disk membership.
    #[inline]
    pub fn contains(&self, p: Point<T>) -> bool {
        self.center.dist_sq(p) <= self.radius * self.radius
    }
}

/// Area of one pair's exclusion zone, with the two intersection angles.
///
/// `gamma_1` is the half-angle of the intersection chord seen from the
/// transmitter, `gamma_2` the same seen from the receiver. When the circles do
/// not cross, `degenerate` is set: a contained CTS disk reports
/// `(gamma_1, gamma_2) = (0, π)`, disjoint disks report `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionGeometry<T> {
    pub v_o: T,
    pub gamma_1: T,
    pub gamma_2: T,
    pub degenerate: bool,
}

/// Relative geometry of a second pair seen from a reference pair whose
/// transmitter sits at the origin with its receiver at `(d, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConfiguration<T> {
    /// Transmitter separation.
    pub r: T,
    /// Direction of the second transmitter, in `[0, 2π)`.
    pub phi: T,
    /// Receiver orientation of the second pair, in `[0, 2π)`.
    pub theta: T,
}

impl<T: Scalar> PairConfiguration<T> {
    /// Builds a configuration, wrapping both angles into `[0, 2π)`.
    pub fn new(r: T, phi: T, theta: T) -> Result<Self, GeometryError> {
        if !(r.is_finite() && r >= T::zero()) {
            return Err(GeometryError::BadConfiguration(format!("r = {r}")));
        }
        if !(phi.is_finite() && theta.is_finite()) {
            return Err(GeometryError::BadConfiguration("non-finite angle".into()));
        }
        Ok(Self {
            r,
            phi: wrap_angle(phi),
            theta: wrap_angle(theta),
        })
    }

    /// The same two pairs described from the second pair's point of view.
    pub fn relabeled(&self) -> Self {
        Self {
            r: self.r,
            phi: wrap_angle(self.phi + T::PI() - self.theta),
            theta: wrap_angle(-self.theta),
        }
    }

    #[inline]
    pub fn second_transmitter(&self) -> Point<T> {
        Point::polar(self.r, self.phi)
    }

    #[inline]
    pub fn second_receiver(&self, d: T) -> Point<T> {
        self.second_transmitter().offset(d, self.theta)
    }
}

/// Pairwise conflict events between the reference pair and a second pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConflictEvents {
    /// Transmitters within carrier-sense range of each other.
    pub s1: bool,
    /// Second transmitter inside the reference receiver's CTS disk.
    pub s2: bool,
    /// Reference transmitter inside the second receiver's CTS disk.
    pub s3: bool,
}

impl ConflictEvents {
    #[inline]
    pub fn any(&self) -> bool {
        self.s1 || self.s2 || self.s3
    }
}

fn check_radius<T: Scalar>(r: T) -> Result<(), GeometryError> {
    if r.is_finite() && r >= T::zero() {
        Ok(())
    } else {
        Err(GeometryError::BadRadius(r.as_f64()))
    }
}

/// Area of the intersection of two disks with radii `r1`, `r2` whose centers are
/// `dist` apart.
pub fn lens_area<T: Scalar>(r1: T, r2: T, dist: T) -> Result<T, GeometryError> {
    check_radius(r1)?;
    check_radius(r2)?;
    if !(dist.is_finite() && dist >= T::zero()) {
        return Err(GeometryError::BadDistance(dist.as_f64()));
    }
    Ok(lens_area_unchecked(r1, r2, dist))
}

fn lens_area_unchecked<T: Scalar>(r1: T, r2: T, dist: T) -> T {
    if dist >= r1 + r2 {
        return T::zero();
    }
    if dist <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return T::PI() * r * r;
    }
    let two = T::lit(2.0);
    let a1 = acos_clamped((dist * dist + r1 * r1 - r2 * r2) / (two * dist * r1));
    let a2 = acos_clamped((dist * dist + r2 * r2 - r1 * r1) / (two * dist * r2));
    let kite = (-dist + r1 + r2) * (dist + r1 - r2) * (dist - r1 + r2) * (dist + r1 + r2);
    r1 * r1 * a1 + r2 * r2 * a2 - kite.max(T::zero()).sqrt() / two
}

/// Area of one transceiver pair's exclusion zone.
///
/// Crossing circles use the closed form
/// `(π - γ1) r_cs² + (π - γ2) r_tx² + d r_cs sin γ1`; otherwise the union of the
/// two disks is returned with `degenerate` set.
pub fn exclusion_zone_area<T: Scalar>(params: &NetworkParams<T>) -> ExclusionGeometry<T> {
    let (d, rcs, rtx) = (params.d, params.r_cs, params.r_tx);
    let pi = T::PI();
    if d >= rcs + rtx {
        return ExclusionGeometry {
            v_o: pi * (rcs * rcs + rtx * rtx),
            gamma_1: T::zero(),
            gamma_2: T::zero(),
            degenerate: true,
        };
    }
    let two = T::lit(2.0);
    let gamma_1 = acos_clamped((d * d + rcs * rcs - rtx * rtx) / (two * d * rcs));
    let gamma_2 = acos_clamped((d * d + rtx * rtx - rcs * rcs) / (two * d * rtx));
    if d <= rcs - rtx {
        return ExclusionGeometry {
            v_o: pi * rcs * rcs,
            gamma_1,
            gamma_2,
            degenerate: true,
        };
    }
    let v_o = (pi - gamma_1) * rcs * rcs + (pi - gamma_2) * rtx * rtx + d * rcs * gamma_1.sin();
    ExclusionGeometry {
        v_o,
        gamma_1,
        gamma_2,
        degenerate: false,
    }
}

/// Like [`exclusion_zone_area`] but rejects disjoint transmitter/receiver disks.
pub fn exclusion_zone_area_strict<T: Scalar>(
    params: &NetworkParams<T>,
) -> Result<ExclusionGeometry<T>, GeometryError> {
    if params.d >= params.r_cs + params.r_tx {
        return Err(GeometryError::DisjointZone {
            d: params.d.as_f64(),
            reach: (params.r_cs + params.r_tx).as_f64(),
        });
    }
    Ok(exclusion_zone_area(params))
}

/// Exact area of a union of disks.
///
/// Integrates `(x dy - y dx) / 2` over every boundary arc not covered by another
/// disk. Disks contained in another one, duplicates and zero-radius disks
/// contribute no boundary.
pub fn union_of_disks_area<T: Scalar>(disks: &[Disk<T>]) -> Result<T, GeometryError> {
    for (index, disk) in disks.iter().enumerate() {
        if !disk.center.is_finite() {
            return Err(GeometryError::NonFiniteCenter { index });
        }
        check_radius(disk.radius)?;
    }
    Ok(union_area_unchecked(disks))
}

fn union_area_unchecked<T: Scalar>(disks: &[Disk<T>]) -> T {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let tau = T::two_pi();

    let mut active: SmallVec<[usize; 8]> = SmallVec::new();
    'outer: for (i, di) in disks.iter().enumerate() {
        if di.radius <= T::zero() {
            continue;
        }
        for (j, dj) in disks.iter().enumerate() {
            if i == j {
                continue;
            }
            let dist = di.center.dist(dj.center);
            if dist + di.radius <= dj.radius && (di.radius != dj.radius || j < i) {
                continue 'outer;
            }
        }
        active.push(i);
    }

    let mut area = T::zero();
    let mut angles: SmallVec<[T; 16]> = SmallVec::new();
    for &i in &active {
        let Disk {
            center: c,
            radius: r,
        } = disks[i];
        angles.clear();
        for &j in &active {
            if j == i {
                continue;
            }
            let other = disks[j];
            let dist = c.dist(other.center);
            if dist >= r + other.radius || dist <= (r - other.radius).abs() {
                continue;
            }
            let base = (other.center.y - c.y).atan2(other.center.x - c.x);
            let spread = acos_clamped(
                (r * r + dist * dist - other.radius * other.radius) / (two * r * dist),
            );
            angles.push(wrap_angle(base - spread));
            angles.push(wrap_angle(base + spread));
        }
        if angles.is_empty() {
            area += T::PI() * r * r;
            continue;
        }
        angles.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
        let first = angles[0];
        angles.push(first + tau);
        for w in angles.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = Point::new(c.x, c.y).offset(r, half * (a + b));
            let covered = active.iter().any(|&j| {
                j != i && {
                    let o = disks[j];
                    o.center.dist_sq(mid) < o.radius * o.radius
                }
            });
            if covered {
                continue;
            }
            let (sb, cb) = b.sin_cos();
            let (sa, ca) = a.sin_cos();
            area += half * (c.x * r * (sb - sa) - c.y * r * (cb - ca) + r * r * (b - a));
        }
    }
    area
}

/// The four disks making up two exclusion zones in configuration `cfg`.
pub fn pair_disks<T: Scalar>(
    cfg: &PairConfiguration<T>,
    params: &NetworkParams<T>,
) -> [Disk<T>; 4] {
    let tx2 = cfg.second_transmitter();
    [
        Disk {
            center: Point::origin(),
            radius: params.r_cs,
        },
        Disk {
            center: Point::new(params.d, T::zero()),
            radius: params.r_tx,
        },
        Disk {
            center: tx2,
            radius: params.r_cs,
        },
        Disk {
            center: tx2.offset(params.d, cfg.theta),
            radius: params.r_tx,
        },
    ]
}

/// Area `V(r, φ, θ)` covered by the exclusion zones of two pairs.
pub fn pair_union_area<T: Scalar>(cfg: &PairConfiguration<T>, params: &NetworkParams<T>) -> T {
    union_area_unchecked(&pair_disks(cfg, params))
}

/// Evaluates the three closed conflict events for `cfg`.
pub fn conflict_events<T: Scalar>(
    cfg: &PairConfiguration<T>,
    params: &NetworkParams<T>,
) -> ConflictEvents {
    let (r, d) = (cfg.r, params.d);
    let two = T::lit(2.0);
    let rtx2 = params.r_tx * params.r_tx;
    ConflictEvents {
        s1: r <= params.r_cs,
        s2: r * r - two * r * d * cfg.phi.cos() + d * d <= rtx2,
        s3: r * r + two * r * d * (cfg.phi - cfg.theta).cos() + d * d <= rtx2,
    }
}
