//! Group elements of the n-torus (n <= 3) and SU(2), the group law, the
//! bi-invariant geodesic distance and volumes of metric balls.
//!
//! SU(2) elements are unit quaternions `(a, b, c, d)` identified with the
//! matrix `[[a + bi, c + di], [-c + di, a - bi]]`. The distance to the
//! identity is `2 arccos(Re tr X / 2) = 2 arccos(a)`, giving diameter `2π`
//! and the Laplace spectrum `l(l + 1)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric;

/// One of the supported compact groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupId {
    /// The n-torus `R^n / Z^n`, `1 <= n <= 3`.
    Torus(u8),
    Su2,
}

impl GroupId {
    pub fn torus(n: u8) -> Result<Self> {
        if (1..=3).contains(&n) {
            Ok(GroupId::Torus(n))
        } else {
            Err(Error::invalid(format!(
                "torus dimension must be 1, 2 or 3 (got {n})"
            )))
        }
    }

    /// Manifold dimension n(G).
    pub fn dimension(self) -> usize {
        match self {
            GroupId::Torus(n) => n as usize,
            GroupId::Su2 => 3,
        }
    }

    /// Largest distance between two points.
    pub fn diameter(self) -> f64 {
        match self {
            GroupId::Torus(n) => 0.5 * (n as f64).sqrt(),
            GroupId::Su2 => 2.0 * PI,
        }
    }

    pub fn is_torus(self) -> bool {
        matches!(self, GroupId::Torus(_))
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupId::Torus(n) => write!(f, "torus{n}"),
            GroupId::Su2 => write!(f, "su2"),
        }
    }
}

impl FromStr for GroupId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "su2" | "su(2)" => Ok(GroupId::Su2),
            "torus1" | "t1" => Ok(GroupId::Torus(1)),
            "torus2" | "t2" => Ok(GroupId::Torus(2)),
            "torus3" | "t3" => Ok(GroupId::Torus(3)),
            other => Err(Error::invalid(format!(
                "unknown group '{other}' (expected torus1, torus2, torus3 or su2)"
            ))),
        }
    }
}

impl Serialize for GroupId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroupId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An element of one of the supported groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupPoint {
    /// Coordinates in `[0, 1)`; only the first `n` entries are used.
    Torus { coords: [f64; 3], n: u8 },
    /// Unit quaternion `(a, b, c, d)`.
    Su2([f64; 4]),
}

impl GroupPoint {
    /// Torus point, coordinates reduced mod 1.
    pub fn torus(coords: &[f64]) -> Result<Self> {
        let n = coords.len();
        if !(1..=3).contains(&n) {
            return Err(Error::invalid(format!(
                "torus point needs 1..=3 coordinates (got {n})"
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("torus coordinates must be finite"));
        }
        let mut c = [0.0; 3];
        for (dst, &src) in c.iter_mut().zip(coords) {
            *dst = reduce_unit(src);
        }
        Ok(GroupPoint::Torus { coords: c, n: n as u8 })
    }

    /// SU(2) point from a (not necessarily normalised) quaternion.
    pub fn su2(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let norm = (a * a + b * b + c * c + d * d).sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::invalid("quaternion must be finite and nonzero"));
        }
        Ok(GroupPoint::Su2([a / norm, b / norm, c / norm, d / norm]))
    }

    /// `R_z(alpha) R_y(beta) R_z(gamma)` with `R_z(t) = diag(e^{-it/2}, e^{it/2})`.
    pub fn su2_from_euler(alpha: f64, beta: f64, gamma: f64) -> Self {
        let (cb, sb) = ((0.5 * beta).cos(), (0.5 * beta).sin());
        let p = 0.5 * (alpha + gamma);
        let q = 0.5 * (alpha - gamma);
        GroupPoint::Su2([p.cos() * cb, -p.sin() * cb, -q.cos() * sb, q.sin() * sb])
    }

    /// Exponential of `v` in the Lie algebra; `|exp(v)| = |v|` for `|v| <= 2π`.
    pub fn su2_exp(v: [f64; 3]) -> Self {
        let t = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if t == 0.0 {
            return GroupPoint::Su2([1.0, 0.0, 0.0, 0.0]);
        }
        let s = (0.5 * t).sin() / t;
        GroupPoint::Su2([(0.5 * t).cos(), s * v[0], s * v[1], s * v[2]])
    }

    pub fn group(&self) -> GroupId {
        match self {
            GroupPoint::Torus { n, .. } => GroupId::Torus(*n),
            GroupPoint::Su2(_) => GroupId::Su2,
        }
    }

    /// Torus coordinates (first `n` entries).
    pub fn torus_coords(&self) -> Option<&[f64]> {
        match self {
            GroupPoint::Torus { coords, n } => Some(&coords[..*n as usize]),
            GroupPoint::Su2(_) => None,
        }
    }

    pub fn quaternion(&self) -> Option<[f64; 4]> {
        match self {
            GroupPoint::Su2(q) => Some(*q),
            GroupPoint::Torus { .. } => None,
        }
    }

    /// 2x2 unitary matrix of an SU(2) point, row-major.
    pub fn su2_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let [a, b, c, d] = self.quaternion()?;
        Some([
            [Complex64::new(a, b), Complex64::new(c, d)],
            [Complex64::new(-c, d), Complex64::new(a, -b)],
        ])
    }

    /// ZYZ Euler angles `(alpha, beta, gamma)` of an SU(2) point, with
    /// `beta` in `[0, π]`. Degenerate angles at the poles are set to zero.
    pub fn su2_euler(&self) -> Option<(f64, f64, f64)> {
        let [a, b, c, d] = self.quaternion()?;
        let cb = a.hypot(b);
        let sb = c.hypot(d);
        let beta = 2.0 * sb.atan2(cb);
        let p = if cb > 0.0 { (-b).atan2(a) } else { 0.0 };
        let q = if sb > 0.0 { d.atan2(-c) } else { 0.0 };
        Some((p + q, beta, p - q))
    }

    pub fn coords_for_csv(&self) -> Vec<f64> {
        match self {
            GroupPoint::Torus { coords, n } => coords[..*n as usize].to_vec(),
            GroupPoint::Su2(q) => q.to_vec(),
        }
    }
}

fn reduce_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed representative of `x` mod 1 in `[-1/2, 1/2]`.
pub(crate) fn wrap_half(x: f64) -> f64 {
    x - x.round()
}

fn check_same(x: &GroupPoint, y: &GroupPoint) -> Result<()> {
    if x.group() == y.group() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "group mismatch: {} vs {}",
            x.group(),
            y.group()
        )))
    }
}

pub fn identity(group: GroupId) -> GroupPoint {
    match group {
        GroupId::Torus(n) => GroupPoint::Torus { coords: [0.0; 3], n },
        GroupId::Su2 => GroupPoint::Su2([1.0, 0.0, 0.0, 0.0]),
    }
}

/// Group product `xy`.
pub fn compose(x: &GroupPoint, y: &GroupPoint) -> Result<GroupPoint> {
    check_same(x, y)?;
    Ok(compose_unchecked(x, y))
}

pub(crate) fn compose_unchecked(x: &GroupPoint, y: &GroupPoint) -> GroupPoint {
    match (x, y) {
        (GroupPoint::Torus { coords: a, n }, GroupPoint::Torus { coords: b, .. }) => {
            let mut c = [0.0; 3];
            for i in 0..*n as usize {
                c[i] = reduce_unit(a[i] + b[i]);
            }
            GroupPoint::Torus { coords: c, n: *n }
        }
        (GroupPoint::Su2(p), GroupPoint::Su2(q)) => GroupPoint::Su2(quat_mul(p, q)),
        _ => unreachable!("compose_unchecked called with mixed groups"),
    }
}

pub fn invert(x: &GroupPoint) -> GroupPoint {
    match x {
        GroupPoint::Torus { coords, n } => {
            let mut c = [0.0; 3];
            for i in 0..*n as usize {
                c[i] = reduce_unit(-coords[i]);
            }
            GroupPoint::Torus { coords: c, n: *n }
        }
        GroupPoint::Su2([a, b, c, d]) => GroupPoint::Su2([*a, -b, -c, -d]),
    }
}

/// `y^{-1} x`, the element carrying `y` to `x` by left multiplication.
pub fn relative(y: &GroupPoint, x: &GroupPoint) -> Result<GroupPoint> {
    check_same(x, y)?;
    Ok(compose_unchecked(&invert(y), x))
}

pub(crate) fn quat_mul(p: &[f64; 4], q: &[f64; 4]) -> [f64; 4] {
    let [a1, b1, c1, d1] = *p;
    let [a2, b2, c2, d2] = *q;
    [
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ]
}

/// Geodesic distance `|x| = d(x, e)`.
pub fn geodesic_norm(x: &GroupPoint) -> f64 {
    match x {
        GroupPoint::Torus { coords, n } => coords[..*n as usize]
            .iter()
            .map(|c| {
                let w = wrap_half(*c);
                w * w
            })
            .sum::<f64>()
            .sqrt(),
        GroupPoint::Su2(q) => su2_angle(q, &[1.0, 0.0, 0.0, 0.0]),
    }
}

/// `2 arccos(<p, q>)` evaluated as `4 atan2(|p - q|, |p + q|)`, which stays
/// accurate when `p` and `q` are close or antipodal.
fn su2_angle(p: &[f64; 4], q: &[f64; 4]) -> f64 {
    let mut minus = 0.0;
    let mut plus = 0.0;
    for i in 0..4 {
        minus += (p[i] - q[i]) * (p[i] - q[i]);
        plus += (p[i] + q[i]) * (p[i] + q[i]);
    }
    4.0 * minus.sqrt().atan2(plus.sqrt())
}

/// `d(x, y) = |y^{-1} x|`.
pub fn distance(x: &GroupPoint, y: &GroupPoint) -> Result<f64> {
    check_same(x, y)?;
    Ok(distance_unchecked(x, y))
}

pub(crate) fn distance_unchecked(x: &GroupPoint, y: &GroupPoint) -> f64 {
    match (x, y) {
        (GroupPoint::Torus { coords: a, n }, GroupPoint::Torus { coords: b, .. }) => (0..*n
            as usize)
            .map(|i| {
                let w = wrap_half(a[i] - b[i]);
                w * w
            })
            .sum::<f64>()
            .sqrt(),
        // Re(conj(y) x) is the 4-vector dot product, so only the angle matters.
        (GroupPoint::Su2(p), GroupPoint::Su2(q)) => su2_angle(p, q),
        _ => unreachable!("distance_unchecked called with mixed groups"),
    }
}

/// Open metric ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: GroupPoint,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: GroupPoint, radius: f64) -> Result<Self> {
        let diam = center.group().diameter();
        if !(radius > 0.0) || radius > diam * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "ball radius must lie in (0, {diam}] (got {radius})"
            )));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, x: &GroupPoint) -> bool {
        distance_unchecked(x, &self.center) < self.radius
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.center.group(), self.radius).unwrap_or(1.0)
    }
}

/// Normalised Haar volume of a ball of radius `r`.
pub fn ball_volume(group: GroupId, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!(
            "ball radius must be positive and finite (got {r})"
        )));
    }
    Ok(match group {
        GroupId::Torus(1) => (2.0 * r).min(1.0),
        GroupId::Torus(2) => torus2_ball(r),
        GroupId::Torus(3) => torus3_ball(r),
        GroupId::Torus(n) => unreachable!("unsupported torus dimension {n}"),
        GroupId::Su2 => {
            if r >= 2.0 * PI {
                1.0
            } else {
                (r - r.sin()) / (2.0 * PI)
            }
        }
    })
}

/// Length of `{t in [-1/2, 1/2] : |t| < rho}`.
fn segment(rho: f64) -> f64 {
    if rho <= 0.0 {
        0.0
    } else {
        (2.0 * rho).min(1.0)
    }
}

fn torus2_ball(r: f64) -> f64 {
    if r < 0.5 {
        return PI * r * r;
    }
    if r >= 0.5 * 2f64.sqrt() {
        return 1.0;
    }
    // Integrate the chord length over one coordinate; kinks at y = ±sqrt(r² - 1/4).
    let kink = (r * r - 0.25).max(0.0).sqrt().min(0.5);
    let chord = |y: f64| segment((r * r - y * y).max(0.0).sqrt());
    2.0 * (numeric::integrate(chord, 0.0, kink, 8, 24) + numeric::integrate(chord, kink, 0.5, 32, 24))
}

fn torus3_ball(r: f64) -> f64 {
    if r < 0.5 {
        return 4.0 / 3.0 * PI * r * r * r;
    }
    if r >= 0.5 * 3f64.sqrt() {
        return 1.0;
    }
    // Slice by the first coordinate; each slice is a wrapped disc.
    let slice = |y: f64| {
        let rho2 = r * r - y * y;
        if rho2 <= 0.0 {
            0.0
        } else {
            let rho = rho2.sqrt();
            if rho < 0.5 {
                PI * rho2
            } else {
                torus2_ball(rho)
            }
        }
    };
    let mut breaks = vec![0.0, 0.5];
    for level in [0.25f64, 0.5] {
        let y2 = r * r - level;
        if y2 > 0.0 && y2.sqrt() < 0.5 {
            breaks.push(y2.sqrt());
        }
    }
    breaks.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        acc += numeric::integrate(slice, w[0], w[1], 16, 16);
    }
    2.0 * acc
}
