//! Lower-bound estimates of the oscillating Hörmander seminorm
//! `sup_R sup_{|y|<=R} ∫_{|x|>=2R^{1-θ}} |K(y⁻¹x) - K(x)| dx`.
//!
//! Only `R` up to the group diameter matters: once `2R^{1-θ}` reaches the
//! diameter the integration region is empty and the integral is zero.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{forward_transform, inverse_transform, FourierCoefficients, GridFunction};
use crate::group::{distance_unchecked, geodesic_norm, identity, GroupId, GroupPoint};
use crate::numeric::{pairwise_sum, splitmix64};

/// Value of one inner integral with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerIntegral {
    pub value: f64,
    /// Half the gap between the rules using only even and only odd points.
    pub quad_error: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::invalid(format!("theta must lie in [0,1) (got {theta})")));
    }
    Ok(())
}

/// Left translates of a grid kernel by band-limited resynthesis.
struct Translator<'a> {
    kernel: &'a GridFunction,
    khat: FourierCoefficients,
}

impl<'a> Translator<'a> {
    fn new(kernel: &'a GridFunction, bandwidth: Option<f64>) -> Result<Self> {
        let bw = bandwidth.unwrap_or_else(|| kernel.grid().max_bandwidth());
        Ok(Translator {
            kernel,
            khat: forward_transform(kernel, bw)?,
        })
    }

    /// Samples of `x -> K(y⁻¹x)` on the kernel's grid.
    fn translate(&self, y: &GroupPoint) -> Result<Vec<Complex64>> {
        Ok(inverse_transform(&self.khat.translate_left(y)?, self.kernel.grid())?.into_values())
    }

    fn integral(&self, y: &GroupPoint, r: f64, theta: f64, center: &GroupPoint) -> Result<InnerIntegral> {
        let group = self.kernel.group();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::invalid(format!("radius R must be positive (got {r})")));
        }
        check_theta(theta)?;
        if y.group() != group || center.group() != group {
            return Err(Error::invalid("translation point belongs to another group"));
        }
        let ny = geodesic_norm(y);
        if ny > r * (1.0 + 1e-12) {
            return Err(Error::precondition(format!("|y| = {ny} exceeds R = {r}")));
        }
        let rho = 2.0 * r.powf(1.0 - theta);
        if rho >= group.diameter() {
            return Ok(InnerIntegral {
                value: 0.0,
                quad_error: 0.0,
            });
        }
        let shifted = self.translate(y)?;
        let grid = self.kernel.grid();
        let w = grid.weights();
        let base = self.kernel.values();
        let term = |i: usize| {
            if distance_unchecked(&grid.points()[i], center) >= rho {
                w[i] * (shifted[i] - base[i]).norm()
            } else {
                0.0
            }
        };
        let n = grid.len();
        let value = pairwise_sum(n, term);
        let even = 2.0 * pairwise_sum(n.div_ceil(2), |k| term(2 * k));
        let odd = 2.0 * pairwise_sum(n / 2, |k| term(2 * k + 1));
        Ok(InnerIntegral {
            value,
            quad_error: 0.5 * (even - odd).abs(),
        })
    }
}

/// `∫_{d(x,e) >= 2R^{1-θ}} |K(y⁻¹x) - K(x)| dx`, with `K(y⁻¹x)` obtained by
/// resynthesis at the grid's full bandwidth.
pub fn inner_integral(k: &GridFunction, y: &GroupPoint, r: f64, theta: f64) -> Result<InnerIntegral> {
    inner_integral_at_bandwidth(k, None, y, r, theta)
}

/// As [`inner_integral`], resynthesising `K` at bandwidth `L` (default: the
/// grid's maximum).
pub fn inner_integral_at_bandwidth(
    k: &GridFunction,
    bandwidth: Option<f64>,
    y: &GroupPoint,
    r: f64,
    theta: f64,
) -> Result<InnerIntegral> {
    let t = Translator::new(k, bandwidth)?;
    t.integral(y, r, theta, &identity(k.group()))
}

/// Same integral with the excluded ball centred at `center` instead of `e`.
pub fn inner_integral_centered(
    k: &GridFunction,
    bandwidth: Option<f64>,
    y: &GroupPoint,
    r: f64,
    theta: f64,
    center: &GroupPoint,
) -> Result<InnerIntegral> {
    Translator::new(k, bandwidth)?.integral(y, r, theta, center)
}

/// Deterministic sampling design for [`estimate_seminorm`].
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormDesign {
    pub theta: f64,
    pub r_grid: Vec<f64>,
    /// Interior samples per radius; `2n` boundary points are always added.
    pub y_samples: usize,
    pub seed: u64,
    /// Resynthesis bandwidth; `None` uses the grid's maximum.
    pub bandwidth: Option<f64>,
}

impl SeminormDesign {
    pub fn new(theta: f64, r_grid: Vec<f64>, y_samples: usize) -> Self {
        SeminormDesign {
            theta,
            r_grid,
            y_samples,
            seed: 0,
            bandwidth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormRow {
    pub r: f64,
    pub sup_y: f64,
    /// Quadrature error estimate of the maximising sample.
    pub quad_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeminormEstimate {
    pub value: f64,
    pub theta: f64,
    pub y_samples: usize,
    pub resolution: usize,
    pub rows: Vec<SeminormRow>,
}

impl SeminormEstimate {
    pub fn r_grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.r).collect()
    }

    /// CSV with columns `R,sup_y,quad_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R,sup_y,quad_error\n");
        for row in &self.rows {
            let _ = writeln!(out, "{},{},{}", row.r, row.sup_y, row.quad_error);
        }
        out
    }
}

/// Sample points `y` with `|y| <= R`: `count` interior points from a seeded
/// low-discrepancy sequence, then `±R e_i` for every axis. The interior list
/// for a smaller `count` is a prefix of the list for a larger one.
pub fn sample_translations(group: GroupId, r: f64, count: usize, seed: u64) -> Vec<GroupPoint> {
    let dim = group.dimension();
    let phi = generalized_golden(dim);
    let alphas: Vec<f64> = (1..=dim).map(|i| phi.powi(-(i as i32))).collect();
    let offset: Vec<f64> = (0..dim)
        .map(|i| (splitmix64(seed.wrapping_add(i as u64)) >> 11) as f64 / (1u64 << 53) as f64)
        .collect();
    let mut out = Vec::with_capacity(count + 2 * dim);
    let mut k = 0u64;
    while out.len() < count {
        k += 1;
        let v: Vec<f64> = (0..dim)
            .map(|i| 2.0 * (offset[i] + k as f64 * alphas[i]).fract() - 1.0)
            .collect();
        if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            out.push(lie_point(group, &v, r));
        }
    }
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[i] = s;
            out.push(lie_point(group, &v, r));
        }
    }
    out
}

/// Root of `x^{d+1} = x + 1`, the base of the `R_d` sequence.
fn generalized_golden(d: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

/// Point at scaled coordinate `r·v` with `|v| <= 1`.
fn lie_point(group: GroupId, v: &[f64], r: f64) -> GroupPoint {
    match group {
        GroupId::Torus(_) => {
            let c: Vec<f64> = v.iter().map(|x| x * r).collect();
            GroupPoint::torus(&c).expect("valid torus coordinates")
        }
        GroupId::Su2 => GroupPoint::su2_exp([v[0] * r, v[1] * r, v[2] * r]),
    }
}

/// Maximum of the inner integral over the design. Every row is a lower bound
/// for the true supremum at that `R`, up to the reported quadrature error.
pub fn estimate_seminorm(k: &GridFunction, design: &SeminormDesign) -> Result<SeminormEstimate> {
    check_theta(design.theta)?;
    let group = k.group();
    if design.r_grid.is_empty() {
        return Err(Error::invalid("the R grid must not be empty"));
    }
    if let Some(bad) = design
        .r_grid
        .iter()
        .find(|r| !(**r > 0.0) || **r > group.diameter())
    {
        return Err(Error::invalid(format!(
            "R = {bad} lies outside (0, {}]",
            group.diameter()
        )));
    }
    if design.y_samples == 0 {
        return Err(Error::invalid("at least one y sample is required"));
    }
    let translator = Translator::new(k, design.bandwidth)?;
    let e = identity(group);
    let tasks: Vec<(usize, GroupPoint)> = design
        .r_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &r)| {
            sample_translations(group, r, design.y_samples, design.seed)
                .into_iter()
                .map(move |y| (i, y))
        })
        .collect();
    let results: Vec<Result<InnerIntegral>> = tasks
        .par_iter()
        .map(|(i, y)| translator.integral(y, design.r_grid[*i], design.theta, &e))
        .collect();
    let mut rows: Vec<SeminormRow> = design
        .r_grid
        .iter()
        .map(|&r| SeminormRow {
            r,
            sup_y: 0.0,
            quad_error: 0.0,
        })
        .collect();
    for ((i, _), res) in tasks.iter().zip(results) {
        let v = res?;
        if v.value > rows[*i].sup_y {
            rows[*i].sup_y = v.value;
            rows[*i].quad_error = v.quad_error;
        }
    }
    let value = rows.iter().map(|r| r.sup_y).fold(0.0, f64::max);
    Ok(SeminormEstimate {
        value,
        theta: design.theta,
        y_samples: design.y_samples,
        resolution: k.grid().resolution(),
        rows,
    })
}

/// `count` radii spaced logarithmically over `[min, max]`.
pub fn log_r_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) || !(max >= min) || count == 0 {
        return Err(Error::invalid(format!(
            "log R grid needs 0 < min <= max and count >= 1 (got {min}, {max}, {count})"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.ln(), max.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}
