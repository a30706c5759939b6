//! Test functions used by the experiments.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::dual::{character, enumerate_dual, DualIndex};
use crate::error::{Error, Result};
use crate::fourier::{inverse_transform, FourierCoefficients, GridFunction};
use crate::group::{ball_volume, distance, identity, Ball, GroupId, GroupPoint};
use crate::quadrature::QuadratureGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normalised ball indicator `|B(e,ε)|⁻¹ 1_{B(e,ε)}` with the analytic volume.
/// Fails with a resolution error when the ball holds no grid point besides
/// the identity.
pub fn approximate_identity(grid: &Arc<QuadratureGrid>, epsilon: f64) -> Result<GridFunction> {
    let group = grid.group();
    let ball = Ball::new(identity(group), epsilon)?;
    if epsilon < grid.spacing() {
        return Err(Error::resolution(
            format!("ball of radius {epsilon} is below the grid spacing {}", grid.spacing()),
            QuadratureGrid::resolution_for_spacing(group, epsilon),
        ));
    }
    let h = 1.0 / ball.volume();
    Ok(GridFunction::from_fn(grid.clone(), |x| {
        if ball.contains(x) {
            Complex64::new(h, 0.0)
        } else {
            ZERO
        }
    }))
}

/// `height · 1_{B(center, r)}`.
pub fn ball_indicator(grid: &Arc<QuadratureGrid>, center: &GroupPoint, radius: f64, height: f64) -> Result<GridFunction> {
    let ball = Ball::new(*center, radius)?;
    if center.group() != grid.group() {
        return Err(Error::invalid("ball centre belongs to another group"));
    }
    Ok(GridFunction::from_fn(grid.clone(), |x| {
        if ball.contains(x) {
            Complex64::new(height, 0.0)
        } else {
            ZERO
        }
    }))
}

/// `height · 1_{[lower, upper)}` on the torus, coordinates in `[0, 1)`.
pub fn box_indicator(grid: &Arc<QuadratureGrid>, lower: &[f64], upper: &[f64], height: f64) -> Result<GridFunction> {
    let n = match grid.group() {
        GroupId::Torus(n) => n as usize,
        GroupId::Su2 => return Err(Error::invalid("box test functions exist only on tori")),
    };
    if lower.len() != n || upper.len() != n {
        return Err(Error::invalid(format!("box corners need {n} coordinates")));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(0.0 <= *l && l < u && *u <= 1.0)) {
        return Err(Error::invalid("box corners must satisfy 0 <= lower < upper <= 1"));
    }
    Ok(GridFunction::from_fn(grid.clone(), |x| {
        let c = x.torus_coords().expect("torus point");
        if c.iter().zip(lower.iter().zip(upper)).all(|(v, (l, u))| l <= v && v < u) {
            Complex64::new(height, 0.0)
        } else {
            ZERO
        }
    }))
}

/// `count` grid points chosen at random carrying values `amplitude · U[0,1)`.
pub fn random_spikes(grid: &Arc<QuadratureGrid>, count: usize, amplitude: f64, seed: u64) -> Result<GridFunction> {
    if !(amplitude.is_finite()) {
        return Err(Error::invalid("spike amplitude must be finite"));
    }
    let mut r = rng(seed);
    let mut values = vec![ZERO; grid.len()];
    for _ in 0..count {
        let i = r.gen_range(0..grid.len());
        values[i] += Complex64::new(amplitude * r.gen::<f64>(), 0.0);
    }
    GridFunction::new(grid.clone(), values)
}

/// Random coefficients with entries uniform in `[-1, 1] + i[-1, 1]` up to `bandwidth`.
pub fn random_coefficients(group: GroupId, bandwidth: f64, seed: u64) -> Result<FourierCoefficients> {
    let mut r = rng(seed);
    let entries: Vec<(DualIndex, DMatrix<Complex64>)> = enumerate_dual(group, bandwidth)?
        .into_iter()
        .map(|xi| {
            let d = xi.dim();
            let m = DMatrix::from_fn(d, d, |_, _| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
            (xi, m)
        })
        .collect();
    FourierCoefficients::from_entries(group, bandwidth, entries)
}

pub fn random_band_limited(grid: &Arc<QuadratureGrid>, bandwidth: f64, seed: u64) -> Result<GridFunction> {
    inverse_transform(&random_coefficients(grid.group(), bandwidth, seed)?, grid)
}

/// `x -> Tr ξ(x)`.
pub fn character_function(grid: &Arc<QuadratureGrid>, xi: &DualIndex) -> Result<GridFunction> {
    if xi.group() != grid.group() {
        return Err(Error::invalid("representation belongs to another group"));
    }
    Ok(GridFunction::from_fn(grid.clone(), |x| character(xi, x).expect("same group")))
}

/// Uniformly distributed point.
pub fn random_point(group: GroupId, r: &mut ChaCha8Rng) -> GroupPoint {
    match group {
        GroupId::Torus(n) => {
            let c: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
            GroupPoint::torus(&c).expect("valid coordinates")
        }
        GroupId::Su2 => loop {
            // Rejection from the cube gives a uniform direction.
            let q: [f64; 4] = [
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
            ];
            let n2: f64 = q.iter().map(|v| v * v).sum();
            if n2 > 1e-6 && n2 <= 1.0 {
                break GroupPoint::su2(q[0], q[1], q[2], q[3]).expect("nonzero");
            }
        },
    }
}

/// Mean-zero atom `1_{B(c,r/2)}/m_half - 1_{B(c,r)}/m_full`, using grid
/// measures so the grid integral vanishes, then scaled to unit grid L¹ norm.
pub fn cancellative_atom(grid: &Arc<QuadratureGrid>, center: &GroupPoint, radius: f64) -> Result<GridFunction> {
    let w = grid.weights();
    let pts = grid.points();
    let d: Vec<f64> = pts.iter().map(|x| distance(x, center).expect("same group")).collect();
    let inner: f64 = (0..pts.len()).filter(|&i| d[i] < radius / 2.0).map(|i| w[i]).sum();
    let outer: f64 = (0..pts.len()).filter(|&i| d[i] < radius).map(|i| w[i]).sum();
    if inner == 0.0 || outer <= inner {
        return Err(Error::resolution(
            format!("atom of radius {radius} is not resolved by the grid"),
            QuadratureGrid::resolution_for_spacing(grid.group(), radius / 4.0),
        ));
    }
    let vals: Vec<Complex64> = d
        .iter()
        .map(|&di| {
            let mut v = 0.0;
            if di < radius / 2.0 {
                v += 1.0 / inner;
            }
            if di < radius {
                v -= 1.0 / outer;
            }
            Complex64::new(v, 0.0)
        })
        .collect();
    let f = GridFunction::new(grid.clone(), vals)?;
    let l1 = f.l1_norm();
    Ok(f.scale(Complex64::new(1.0 / l1, 0.0)))
}

/// Analytic ball volume, re-exported for reports.
pub fn analytic_ball_volume(group: GroupId, r: f64) -> Result<f64> {
    ball_volume(group, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_grid;

    #[test]
    fn approximate_identity_has_unit_mass() {
        let g = Arc::new(build_grid(GroupId::Torus(1), 512).unwrap());
        let f = approximate_identity(&g, 1.0 / 16.0).unwrap();
        // Open ball: 2·64 - 1 grid points of weight 1/1024 at height 8.
        assert!((f.l1_norm() - 127.0 / 128.0).abs() < 1e-12);
        assert!(matches!(approximate_identity(&g, 1e-4), Err(Error::Resolution { .. })));
    }

    #[test]
    fn atoms_cancel() {
        for group in [GroupId::Torus(1), GroupId::Torus(2), GroupId::Su2] {
            let b = if group == GroupId::Su2 { 8 } else { 32 };
            let g = Arc::new(build_grid(group, b).unwrap());
            let c = random_point(group, &mut rng(3));
            let r = if group == GroupId::Su2 { 1.5 } else { 0.2 };
            let a = cancellative_atom(&g, &c, r).unwrap();
            assert!(a.integral().norm() < 1e-12, "{group}");
            assert!((a.l1_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_generators_repeat() {
        let g = Arc::new(build_grid(GroupId::Su2, 4).unwrap());
        let a = random_band_limited(&g, 2.0, 11).unwrap();
        let b = random_band_limited(&g, 2.0, 11).unwrap();
        assert_eq!(a.values(), b.values());
        let s = random_spikes(&g, 5, 3.0, 2).unwrap();
        assert!(s.values().iter().filter(|v| v.norm() > 0.0).count() <= 5);
    }

    #[test]
    fn box_on_circle() {
        let g = Arc::new(build_grid(GroupId::Torus(1), 32).unwrap());
        let f = box_indicator(&g, &[0.0], &[0.125], 8.0).unwrap();
        assert_eq!(f.l1_norm(), 1.0);
        let su2 = Arc::new(build_grid(GroupId::Su2, 4).unwrap());
        assert!(box_indicator(&su2, &[0.0], &[0.5], 1.0).is_err());
    }
}
