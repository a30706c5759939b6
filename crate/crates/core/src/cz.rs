//! Calderón–Zygmund decomposition on dyadic cells, the θ-dependent ball
//! mollifiers and the smoothed bad part `b̃ = Σ_j b_j ∗ φ_j`.
//!
//! Cells of a level are disjoint, so the overlap constant is `M₀ = 1`. The
//! constants checked by [`verify_properties`] are those of dyadic cubes:
//! `‖g‖∞ <= 2^{n+1} α`, `‖b_j‖₁ <= 2^{n+2} α |I_j|`, `Σ|I_j| <= ‖f‖₁ / α`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fourier::{convolve_fourier, forward_transform, inverse_transform, GridFunction};
use crate::group::{ball_volume, distance_unchecked, geodesic_norm, GroupId, GroupPoint};
use crate::numeric::{pairwise_sum, pairwise_sum_c};
use crate::quadrature::{GridLayout, QuadratureGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicCell {
    pub level: usize,
    pub center: GroupPoint,
    pub diameter: f64,
    pub measure: f64,
    /// Grid point indices, ascending.
    pub members: Vec<usize>,
    /// Index of the parent cell on the previous level.
    pub parent: Option<usize>,
}

/// Nested partitions of a grid. Level 0 is the whole group.
#[derive(Debug, Clone)]
pub struct DyadicSystem {
    group: GroupId,
    grid: Arc<QuadratureGrid>,
    levels: Vec<Vec<DyadicCell>>,
    /// `cell_of[k][p]`: cell of point `p` on level `k`.
    cell_of: Vec<Vec<usize>>,
    /// Torus: cube side `2^{-k}`. SU(2): largest cell diameter of the level.
    scales: Vec<f64>,
}

impl DyadicSystem {
    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> &[DyadicCell] {
        &self.levels[k]
    }

    pub fn cell_of(&self, level: usize, point: usize) -> usize {
        self.cell_of[level][point]
    }

    pub fn scale(&self, level: usize) -> f64 {
        self.scales[level]
    }

    pub fn leaves(&self) -> &[DyadicCell] {
        self.levels.last().expect("level 0 always exists")
    }
}

fn whole_group_level(grid: &QuadratureGrid, center: GroupPoint) -> Vec<DyadicCell> {
    vec![DyadicCell {
        level: 0,
        center,
        diameter: grid.group().diameter(),
        measure: pairwise_sum(grid.len(), |i| grid.weights()[i]),
        members: (0..grid.len()).collect(),
        parent: None,
    }]
}

/// Dyadic cells down to `depth`. Torus: cubes of side `2^{-k}`. SU(2):
/// weight-balanced cells, up to eight children per cell and level.
pub fn build_dyadic_system(grid: &Arc<QuadratureGrid>, depth: usize) -> Result<DyadicSystem> {
    if depth < 1 {
        return Err(Error::invalid("dyadic depth must be at least 1"));
    }
    match grid.layout() {
        GridLayout::Torus { n, per_axis } => torus_system(grid, *n, *per_axis, depth),
        GridLayout::Su2 { .. } => su2_system(grid, Some(depth)),
    }
}

/// Dyadic system refined until every leaf is a single grid point, which
/// makes the bound on `‖g‖∞` hold off the selected cells too. On the torus
/// this needs `2B` to be a power of two.
pub fn build_full_dyadic_system(grid: &Arc<QuadratureGrid>) -> Result<DyadicSystem> {
    match grid.layout() {
        GridLayout::Torus { n, per_axis } => {
            if !per_axis.is_power_of_two() {
                return Err(Error::invalid(format!(
                    "full dyadic refinement needs 2B to be a power of two (2B = {per_axis})"
                )));
            }
            torus_system(grid, *n, *per_axis, per_axis.trailing_zeros() as usize)
        }
        GridLayout::Su2 { .. } => su2_system(grid, None),
    }
}

fn torus_system(grid: &Arc<QuadratureGrid>, n: usize, per_axis: usize, depth: usize) -> Result<DyadicSystem> {
    if depth >= usize::BITS as usize || (1usize << depth) > per_axis {
        return Err(Error::invalid(format!(
            "depth {depth} leaves empty cells on a grid with {per_axis} points per axis; reduce the depth"
        )));
    }
    let group = grid.group();
    let mut levels = vec![whole_group_level(grid, GroupPoint::torus(&vec![0.5; n])?)];
    let mut cell_of = vec![vec![0usize; grid.len()]];
    let mut scales = vec![1.0];
    for k in 1..=depth {
        let side = 1usize << k;
        let count = side.pow(n as u32);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
        let mut lookup = vec![0usize; grid.len()];
        for (p, slot) in lookup.iter_mut().enumerate() {
            let mut rem = p;
            let mut axis_cells = [0usize; 3];
            for a in (0..n).rev() {
                axis_cells[a] = (rem % per_axis) * side / per_axis;
                rem /= per_axis;
            }
            let id = (0..n).fold(0usize, |acc, a| acc * side + axis_cells[a]);
            members[id].push(p);
            *slot = id;
        }
        let w = grid.weights();
        let diameter = ((n as f64).sqrt() / side as f64).min(group.diameter());
        let mut cells = Vec::with_capacity(count);
        for (id, m) in members.into_iter().enumerate() {
            if m.is_empty() {
                return Err(Error::invalid(format!("dyadic cell {id} on level {k} is empty; reduce the depth")));
            }
            let mut rem = id;
            let mut c = vec![0.0; n];
            for a in (0..n).rev() {
                c[a] = ((rem % side) as f64 + 0.5) / side as f64;
                rem /= side;
            }
            let parent = cell_of[k - 1][m[0]];
            cells.push(DyadicCell {
                level: k,
                center: GroupPoint::torus(&c)?,
                diameter,
                measure: pairwise_sum(m.len(), |i| w[m[i]]),
                members: m,
                parent: Some(parent),
            });
        }
        levels.push(cells);
        cell_of.push(lookup);
        scales.push(1.0 / side as f64);
    }
    Ok(DyadicSystem {
        group,
        grid: grid.clone(),
        levels,
        cell_of,
        scales,
    })
}

const MAX_SU2_LEVELS: usize = 64;

/// Splits `members` at the weighted median of the quaternion coordinate with
/// the largest weighted variance. Both halves are nonempty when `members`
/// has at least two points.
fn bisect(members: &[usize], pts: &[GroupPoint], w: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let q: Vec<[f64; 4]> = members.iter().map(|&p| pts[p].quaternion().expect("su2 point")).collect();
    let total: f64 = members.iter().map(|&p| w[p]).sum();
    let mut axis = 0;
    let mut best_var = -1.0;
    for a in 0..4 {
        let mean: f64 = members.iter().zip(&q).map(|(&p, x)| w[p] * x[a]).sum::<f64>() / total;
        let var: f64 = members.iter().zip(&q).map(|(&p, x)| w[p] * (x[a] - mean).powi(2)).sum();
        if var > best_var * (1.0 + 1e-12) {
            best_var = var;
            axis = a;
        }
    }
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&i, &j| q[i][axis].total_cmp(&q[j][axis]).then(members[i].cmp(&members[j])));
    let mut prefix = 0.0;
    let mut cut = 1;
    let mut best = f64::INFINITY;
    for s in 1..order.len() {
        prefix += w[members[order[s - 1]]];
        let gap = (2.0 * prefix - total).abs();
        if gap < best {
            best = gap;
            cut = s;
        }
    }
    let mut left: Vec<usize> = order[..cut].iter().map(|&i| members[i]).collect();
    let mut right: Vec<usize> = order[cut..].iter().map(|&i| members[i]).collect();
    left.sort_unstable();
    right.sort_unstable();
    (left, right)
}

fn max_pairwise_distance(members: &[usize], pts: &[GroupPoint]) -> f64 {
    let mut diam: f64 = 0.0;
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            diam = diam.max(distance_unchecked(&pts[a], &pts[b]));
        }
    }
    diam
}

/// SU(2) hierarchy: every level cuts each cell three times at weighted
/// medians, giving up to eight children of nearly equal measure. Singletons
/// are carried down unchanged.
fn su2_system(grid: &Arc<QuadratureGrid>, depth: Option<usize>) -> Result<DyadicSystem> {
    let pts = grid.points();
    let w = grid.weights();
    let n = pts.len();
    let mut levels = vec![whole_group_level(grid, crate::group::identity(GroupId::Su2))];
    let mut cell_of = vec![vec![0usize; n]];
    let mut scales = vec![2.0 * PI];
    let mut k = 0;
    loop {
        let done = match depth {
            Some(d) => k == d,
            None => levels[k].len() == n,
        };
        if done {
            break;
        }
        if k == MAX_SU2_LEVELS {
            return Err(Error::Numerical("SU(2) dyadic refinement did not reach singleton cells".into()));
        }
        k += 1;
        let split: Vec<Vec<Vec<usize>>> = levels[k - 1]
            .par_iter()
            .map(|cell| {
                let mut parts = vec![cell.members.clone()];
                for _ in 0..3 {
                    parts = parts
                        .into_iter()
                        .flat_map(|m| {
                            if m.len() < 2 {
                                vec![m]
                            } else {
                                let (a, b) = bisect(&m, pts, w);
                                vec![a, b]
                            }
                        })
                        .collect();
                }
                parts
            })
            .collect();
        let mut lookup = vec![0usize; n];
        let mut raw = Vec::new();
        for (parent, parts) in split.into_iter().enumerate() {
            for m in parts {
                for &p in &m {
                    lookup[p] = raw.len();
                }
                raw.push((parent, m));
            }
        }
        let cells: Vec<DyadicCell> = raw
            .into_par_iter()
            .map(|(parent, m)| {
                // Centre: the member minimising the largest distance to the others.
                let center = *m
                    .iter()
                    .min_by(|&&a, &&b| {
                        let ra = m.iter().map(|&x| distance_unchecked(&pts[a], &pts[x])).fold(0.0, f64::max);
                        let rb = m.iter().map(|&x| distance_unchecked(&pts[b], &pts[x])).fold(0.0, f64::max);
                        ra.total_cmp(&rb).then(a.cmp(&b))
                    })
                    .expect("cells are nonempty");
                DyadicCell {
                    level: k,
                    center: pts[center],
                    diameter: max_pairwise_distance(&m, pts),
                    measure: pairwise_sum(m.len(), |i| w[m[i]]),
                    members: m,
                    parent: Some(parent),
                }
            })
            .collect();
        scales.push(cells.iter().map(|c| c.diameter).fold(0.0, f64::max));
        levels.push(cells);
        cell_of.push(lookup);
    }
    Ok(DyadicSystem {
        group: GroupId::Su2,
        grid: grid.clone(),
        levels,
        cell_of,
        scales,
    })
}

/// A selected cell `I_j` and its bad function `b_j = (f - mean_{I_j} f) 1_{I_j}`.
#[derive(Debug, Clone)]
pub struct BadCell {
    pub level: usize,
    pub index: usize,
    pub center: GroupPoint,
    pub diameter: f64,
    pub measure: f64,
    pub members: Vec<usize>,
    pub mean: Complex64,
    pub b: GridFunction,
}

#[derive(Debug, Clone)]
pub struct CzDecomposition {
    pub altitude: f64,
    pub good: GridFunction,
    pub cells: Vec<BadCell>,
    /// Maximum number of cells containing a point.
    pub overlap_bound: usize,
    /// Topological dimension `n` of the group.
    pub dimension: usize,
}

fn weighted_mean_abs(f: &GridFunction, members: &[usize], measure: f64) -> f64 {
    let w = f.grid().weights();
    let v = f.values();
    pairwise_sum(members.len(), |i| w[members[i]] * v[members[i]].norm()) / measure
}

fn weighted_mean(f: &GridFunction, members: &[usize], measure: f64) -> Complex64 {
    let w = f.grid().weights();
    let v = f.values();
    pairwise_sum_c(members.len(), |i| v[members[i]] * w[members[i]]) / measure
}

/// Stopping-time decomposition at `altitude`: the maximal cells with
/// `mean |f| > altitude` (strict) become the bad cells.
pub fn decompose(f: &GridFunction, altitude: f64, sys: &DyadicSystem) -> Result<CzDecomposition> {
    if !f.same_grid(&GridFunction::zeros(sys.grid.clone())) {
        return Err(Error::invalid("function and dyadic system live on different grids"));
    }
    let mean_abs = f.l1_norm() / sys.levels[0][0].measure;
    if !altitude.is_finite() || altitude <= mean_abs {
        return Err(Error::precondition(format!(
            "altitude {altitude} must exceed the mean of |f| ({mean_abs}); below it the trivial bound applies"
        )));
    }
    let mut selected: Vec<(usize, usize)> = Vec::new();
    // blocked[c]: cell c lies inside an already selected cell.
    let mut blocked_prev = vec![false];
    let mut selected_prev = vec![false];
    for k in 1..=sys.depth() {
        let cells = &sys.levels[k];
        let blocked: Vec<bool> = cells
            .iter()
            .map(|c| {
                let p = c.parent.expect("non-root cell");
                blocked_prev[p] || selected_prev[p]
            })
            .collect();
        let sel: Vec<bool> = cells
            .par_iter()
            .zip(blocked.par_iter())
            .map(|(c, &b)| !b && weighted_mean_abs(f, &c.members, c.measure) > altitude)
            .collect();
        for (i, &s) in sel.iter().enumerate() {
            if s {
                selected.push((k, i));
            }
        }
        blocked_prev = blocked;
        selected_prev = sel;
    }

    let mut good = f.values().to_vec();
    let mut cells = Vec::with_capacity(selected.len());
    for (k, i) in selected {
        let c = &sys.levels[k][i];
        let first = f.values()[c.members[0]];
        let mean = if c.members.iter().all(|&p| f.values()[p] == first) {
            first
        } else {
            weighted_mean(f, &c.members, c.measure)
        };
        let mut b = vec![ZERO; f.values().len()];
        for &p in &c.members {
            b[p] = f.values()[p] - mean;
            good[p] = mean;
        }
        cells.push(BadCell {
            level: k,
            index: i,
            center: c.center,
            diameter: c.diameter,
            measure: c.measure,
            members: c.members.clone(),
            mean,
            b: GridFunction::new(f.grid().clone(), b)?,
        });
    }
    Ok(CzDecomposition {
        altitude,
        good: GridFunction::new(f.grid().clone(), good)?,
        cells,
        overlap_bound: 1,
        dimension: sys.group.dimension(),
    })
}

impl CzDecomposition {
    /// Summary with altitude, cells (centre, diameter, `‖b_j‖₁`) and counts.
    pub fn summary_json(&self) -> Value {
        let cells: Vec<Value> = self
            .cells
            .iter()
            .map(|c| {
                json!({
                    "level": c.level,
                    "center": c.center.coords_for_csv(),
                    "diameter": c.diameter,
                    "measure": c.measure,
                    "mean": [c.mean.re, c.mean.im],
                    "b_l1": c.b.l1_norm(),
                })
            })
            .collect();
        json!({
            "altitude": self.altitude,
            "overlap_bound": self.overlap_bound,
            "cells": cells,
        })
    }
}

/// One checked property with its measured value and bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    /// First offending cell, for per-cell properties.
    pub violating_cell: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CzReport {
    pub checks: Vec<PropertyCheck>,
}

impl CzReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.checks
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "passed": c.passed,
                        "measured": c.measured,
                        "bound": c.bound,
                        "violating_cell": c.violating_cell,
                    })
                })
                .collect(),
        )
    }
}

/// Absolute tolerance for `f = g + Σ b_j` at grid points.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Relative tolerance for `|∫ b_j| <= tol · ‖b_j‖₁`.
pub const CANCELLATION_TOL: f64 = 1e-10;

/// Checks reconstruction and properties (1)–(6) of the decomposition.
pub fn verify_properties(d: &CzDecomposition, f: &GridFunction) -> Result<CzReport> {
    f.check_grid(&d.good)?;
    for c in &d.cells {
        f.check_grid(&c.b)?;
    }
    let alpha = d.altitude;
    let n = d.dimension as i32;
    let f_l1 = f.l1_norm();
    let w = f.grid().weights();
    let mut checks = Vec::new();
    let mut push = |name: &str, measured: f64, bound: f64, violating: Option<usize>| {
        checks.push(PropertyCheck {
            name: name.to_string(),
            passed: measured <= bound && violating.is_none(),
            measured,
            bound,
            violating_cell: violating,
        });
    };

    // (0) f = g + Σ b_j.
    let mut sum = d.good.values().to_vec();
    for c in &d.cells {
        for (s, v) in sum.iter_mut().zip(c.b.values()) {
            *s += v;
        }
    }
    let recon = sum
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    push("reconstruction", recon, RECONSTRUCTION_TOL, None);

    // (1) ‖g‖∞ <= 2^{n+1} α, and ‖g‖₁ <= ‖f‖₁.
    push("good_sup", d.good.sup_norm(), 2f64.powi(n + 1) * alpha, None);
    push("good_l1", d.good.l1_norm(), f_l1 * (1.0 + 1e-12), None);

    // (2) support in I_j and cancellation.
    let mut worst_support: f64 = 0.0;
    let mut support_bad = None;
    let mut worst_cancel: f64 = 0.0;
    let mut cancel_bad = None;
    for (j, c) in d.cells.iter().enumerate() {
        let off: f64 = c
            .b
            .values()
            .iter()
            .enumerate()
            .filter(|(p, _)| c.members.binary_search(p).is_err())
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        if off > worst_support {
            worst_support = off;
        }
        if off > 0.0 && support_bad.is_none() {
            support_bad = Some(j);
        }
        let integral = c.b.integral().norm();
        let l1 = c.b.l1_norm();
        let f_on_cell = pairwise_sum(c.members.len(), |i| w[c.members[i]] * f.values()[c.members[i]].norm());
        let allowed = CANCELLATION_TOL * l1 + 1e-14 * f_on_cell;
        // Same scale as `allowed`, so rounding noise in a cell where f is
        // constant does not read as a unit ratio.
        let scale = l1 + 1e-4 * f_on_cell;
        let ratio = if scale > 0.0 { integral / scale } else { 0.0 };
        worst_cancel = worst_cancel.max(ratio);
        if integral > allowed && cancel_bad.is_none() {
            cancel_bad = Some(j);
        }
    }
    push("bad_support", worst_support, 0.0, support_bad);
    push("bad_cancellation", worst_cancel, CANCELLATION_TOL, cancel_bad);

    // (3) ‖b_j‖₁ <= 2^{n+2} α |I_j|.
    let mut worst = 0.0;
    let mut bad = None;
    let c3 = 2f64.powi(n + 2) * alpha;
    for (j, c) in d.cells.iter().enumerate() {
        let r = c.b.l1_norm() / (c.measure * alpha);
        if r > worst {
            worst = r;
        }
        if c.b.l1_norm() > c3 * c.measure * (1.0 + 1e-12) && bad.is_none() {
            bad = Some(j);
        }
    }
    push("bad_l1_local", worst, 2f64.powi(n + 2), bad);

    // (4) Σ |I_j| <= ‖f‖₁ / α.
    let total: f64 = d.cells.iter().map(|c| c.measure).sum();
    push("total_measure", total, f_l1 / alpha * (1.0 + 1e-12), None);

    // (5) Σ ‖b_j‖₁ <= 2 ‖f‖₁.
    let bsum: f64 = d.cells.iter().map(|c| c.b.l1_norm()).sum();
    push("bad_l1_total", bsum, 2.0 * f_l1 * (1.0 + 1e-12), None);

    // (6) bounded overlap.
    let mut count = vec![0usize; f.values().len()];
    for c in &d.cells {
        for &p in &c.members {
            count[p] += 1;
        }
    }
    let overlap = count.iter().copied().max().unwrap_or(0);
    let first_overlap = d
        .cells
        .iter()
        .position(|c| c.members.iter().any(|&p| count[p] > d.overlap_bound));
    push("overlap", overlap as f64, d.overlap_bound as f64, first_overlap);

    Ok(CzReport { checks })
}

/// Normalised ball indicator `φ = |B(e,R)|⁻¹ 1_{B(e,R)}` on a grid.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub radius: f64,
    pub phi: GridFunction,
    /// `|∫φ - 1|` on the grid.
    pub quad_error: f64,
}

/// `R = 2^{-1/(1-θ)} δ^{1/(1-θ)}`.
pub fn mollifier_radius(delta: f64, theta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::invalid(format!("theta must lie in [0,1) (got {theta})")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("cell diameter must be positive (got {delta})")));
    }
    let e = 1.0 / (1.0 - theta);
    Ok(2f64.powf(-e) * delta.powf(e))
}

pub fn mollifier(delta: f64, theta: f64, grid: &Arc<QuadratureGrid>) -> Result<Mollifier> {
    let group = grid.group();
    if delta > group.diameter() {
        return Err(Error::invalid(format!(
            "cell diameter {delta} exceeds the group diameter {}",
            group.diameter()
        )));
    }
    let r = mollifier_radius(delta, theta)?;
    if r < grid.spacing() {
        return Err(Error::resolution(
            format!(
                "mollifier radius {r} is below the grid spacing {}",
                grid.spacing()
            ),
            QuadratureGrid::resolution_for_spacing(group, r),
        ));
    }
    let vol = ball_volume(group, r)?;
    let phi = GridFunction::from_fn(grid.clone(), |x| {
        if geodesic_norm(x) < r {
            Complex64::new(1.0 / vol, 0.0)
        } else {
            ZERO
        }
    });
    let quad_error = (phi.integral().re - 1.0).abs();
    Ok(Mollifier {
        radius: r,
        phi,
        quad_error,
    })
}

/// How `b_j ∗ φ_j` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothingMode {
    /// Multiply Fourier coefficients at bandwidth `L`; keeps `∫ b̃_j = 0`.
    Fourier { bandwidth: f64 },
    /// Exact quadrature `Σ_y w_y b_j(y) φ_j(y⁻¹x)`; keeps the support of
    /// `b̃_j` inside the `R_j`-neighbourhood of `I_j`.
    Direct,
}

#[derive(Debug, Clone)]
pub struct SmoothedCell {
    pub cell: usize,
    /// Mollifier radius; 0 when `b_j ≡ 0` and no mollifier was needed.
    pub radius: f64,
    pub b_tilde: GridFunction,
}

#[derive(Debug, Clone)]
pub struct SmoothedBadPart {
    pub total: GridFunction,
    pub cells: Vec<SmoothedCell>,
}

/// `b̃ = Σ_j b_j ∗ φ_j` with `φ_j` the mollifier for `diam(I_j)`.
pub fn smooth_bad_part(d: &CzDecomposition, theta: f64, mode: SmoothingMode) -> Result<SmoothedBadPart> {
    let grid = d.good.grid().clone();
    let mut mollifiers = Vec::with_capacity(d.cells.len());
    let mut failing = Vec::new();
    let mut required = 0usize;
    for (j, c) in d.cells.iter().enumerate() {
        // b_j ≡ 0 (f constant on I_j, e.g. a single point) smooths to zero
        // whatever the mollifier.
        if c.b.values().iter().all(|v| *v == ZERO) {
            mollifiers.push(None);
            continue;
        }
        match mollifier(c.diameter.min(grid.group().diameter()), theta, &grid) {
            Ok(m) => mollifiers.push(Some(m)),
            Err(Error::Resolution { required: r, .. }) => {
                failing.push(j);
                required = required.max(r);
            }
            Err(e) => return Err(e),
        }
    }
    if !failing.is_empty() {
        return Err(Error::resolution(
            format!("mollifier radii below grid resolution for cells {failing:?}"),
            required,
        ));
    }
    let smoothed: Vec<Result<SmoothedCell>> = d
        .cells
        .par_iter()
        .zip(mollifiers.par_iter())
        .enumerate()
        .map(|(j, (c, m))| {
            let Some(m) = m else {
                return Ok(SmoothedCell {
                    cell: j,
                    radius: 0.0,
                    b_tilde: GridFunction::zeros(grid.clone()),
                });
            };
            let b_tilde = match mode {
                SmoothingMode::Fourier { bandwidth } => {
                    let bh = forward_transform(&c.b, bandwidth)?;
                    let ph = forward_transform(&m.phi, bandwidth)?;
                    inverse_transform(&convolve_fourier(&bh, &ph)?, &grid)?
                }
                SmoothingMode::Direct => direct_ball_convolution(&c.b, &c.members, m.radius, &grid)?,
            };
            Ok(SmoothedCell {
                cell: j,
                radius: m.radius,
                b_tilde,
            })
        })
        .collect();
    let cells: Vec<SmoothedCell> = smoothed.into_iter().collect::<Result<_>>()?;
    let mut total = vec![ZERO; grid.len()];
    for c in &cells {
        for (t, v) in total.iter_mut().zip(c.b_tilde.values()) {
            *t += v;
        }
    }
    Ok(SmoothedBadPart {
        total: GridFunction::new(grid, total)?,
        cells,
    })
}

fn direct_ball_convolution(
    b: &GridFunction,
    support: &[usize],
    r: f64,
    grid: &Arc<QuadratureGrid>,
) -> Result<GridFunction> {
    let vol = ball_volume(grid.group(), r)?;
    let pts = grid.points();
    let w = grid.weights();
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            pairwise_sum_c(support.len(), |s| {
                let y = support[s];
                if distance_unchecked(&pts[x], &pts[y]) < r {
                    b.values()[y] * (w[y] / vol)
                } else {
                    ZERO
                }
            })
        })
        .collect();
    GridFunction::new(grid.clone(), values)
}

/// Distance from `x` to the closest member of a cell.
pub fn distance_to_cell(grid: &QuadratureGrid, members: &[usize], x: &GroupPoint) -> f64 {
    members
        .iter()
        .map(|&p| distance_unchecked(&grid.points()[p], x))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_grid;

    fn grid(group: GroupId, b: usize) -> Arc<QuadratureGrid> {
        Arc::new(build_grid(group, b).unwrap())
    }

    fn worked_example() -> (GridFunction, DyadicSystem) {
        let g = grid(GroupId::Torus(1), 32);
        let f = GridFunction::from_fn(g.clone(), |x| {
            let t = x.torus_coords().unwrap()[0];
            Complex64::new(if t < 0.125 { 8.0 } else { 0.0 }, 0.0)
        });
        let sys = build_full_dyadic_system(&g).unwrap();
        (f, sys)
    }

    #[test]
    fn circle_cells() {
        let g = grid(GroupId::Torus(1), 16);
        let sys = build_dyadic_system(&g, 3).unwrap();
        let leaves = sys.leaves();
        assert_eq!(leaves.len(), 8);
        for c in leaves {
            assert_eq!(c.diameter, 0.125);
            assert_eq!(c.members.len(), 4);
            assert!((c.measure - 0.125).abs() < 1e-15);
        }
        assert!(build_dyadic_system(&g, 6).is_err());
        assert!(build_dyadic_system(&g, 0).is_err());
    }

    #[test]
    fn levels_partition_the_grid() {
        for (group, b, depth) in [(GroupId::Torus(2), 8, 3), (GroupId::Su2, 4, 3)] {
            let g = grid(group, b);
            let sys = build_dyadic_system(&g, depth).unwrap();
            for k in 0..=depth {
                let mut seen = vec![0; g.len()];
                for (i, c) in sys.level(k).iter().enumerate() {
                    for &p in &c.members {
                        seen[p] += 1;
                        assert_eq!(sys.cell_of(k, p), i);
                        if k > 0 {
                            assert_eq!(sys.cell_of(k - 1, p), c.parent.unwrap());
                        }
                    }
                }
                assert!(seen.iter().all(|&s| s == 1), "{group} level {k}");
            }
        }
    }

    #[test]
    fn su2_children_have_comparable_measure() {
        let g = grid(GroupId::Su2, 6);
        let sys = build_full_dyadic_system(&g).unwrap();
        for k in 1..=sys.depth() {
            for c in sys.level(k) {
                let p = &sys.level(k - 1)[c.parent.unwrap()];
                assert!(p.measure <= 16.0 * c.measure, "level {k}");
                assert!(c.diameter <= p.diameter + 1e-12);
            }
        }
        // Largest diameters shrink by about half per level.
        for k in 2..sys.depth() {
            assert!(sys.scale(k) <= 0.6 * sys.scale(k - 1), "level {k}");
        }
    }

    #[test]
    fn su2_full_refinement_reaches_singletons() {
        let g = grid(GroupId::Su2, 4);
        let sys = build_full_dyadic_system(&g).unwrap();
        assert!(sys.leaves().iter().all(|c| c.members.len() == 1));
    }

    #[test]
    fn constant_function_has_no_bad_cells() {
        let g = grid(GroupId::Torus(2), 4);
        let f = GridFunction::constant(g.clone(), Complex64::new(1.5, 0.0));
        let sys = build_full_dyadic_system(&g).unwrap();
        let d = decompose(&f, 2.0, &sys).unwrap();
        assert!(d.cells.is_empty());
        assert!(d.good.max_abs_diff(&f).unwrap() == 0.0);
        assert!(matches!(decompose(&f, 1.5, &sys), Err(Error::Precondition(_))));
    }

    #[test]
    fn worked_example_single_cell() {
        let (f, sys) = worked_example();
        let d = decompose(&f, 2.0, &sys).unwrap();
        assert_eq!(d.cells.len(), 1);
        let c = &d.cells[0];
        assert_eq!(c.level, 2);
        assert_eq!(c.measure, 0.25);
        assert_eq!(c.mean, Complex64::new(4.0, 0.0));
        assert_eq!(c.b.integral(), ZERO);
        assert_eq!(d.good.sup_norm(), 4.0);
        let report = verify_properties(&d, &f).unwrap();
        assert!(report.all_passed(), "{report:?}");
        assert_eq!(report.get("total_measure").unwrap().measured, 0.25);
    }

    #[test]
    fn tampering_breaks_cancellation() {
        let (f, sys) = worked_example();
        let mut d = decompose(&f, 2.0, &sys).unwrap();
        let p = d.cells[0].members[0];
        d.cells[0].b.values_mut()[p] += Complex64::new(1.0, 0.0);
        let report = verify_properties(&d, &f).unwrap();
        let check = report.get("bad_cancellation").unwrap();
        assert!(!check.passed);
        assert_eq!(check.violating_cell, Some(0));
    }

    #[test]
    fn zero_function_passes_vacuously() {
        let g = grid(GroupId::Su2, 3);
        let f = GridFunction::zeros(g.clone());
        let sys = build_dyadic_system(&g, 2).unwrap();
        let d = decompose(&f, 0.5, &sys).unwrap();
        assert!(d.cells.is_empty());
        assert!(verify_properties(&d, &f).unwrap().all_passed());
    }

    #[test]
    fn mollifier_radii() {
        assert!((mollifier_radius(0.125, 0.0).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert!((mollifier_radius(1.0 / 16.0, 0.5).unwrap() - 1.0 / 1024.0).abs() < 1e-15);
        let g = grid(GroupId::Torus(1), 512);
        let m = mollifier(1.0 / 16.0, 0.5, &g).unwrap();
        // The open ball B(e, 1/1024) holds the single point 0 of spacing 1/1024.
        assert!((m.phi.integral().re - 0.5).abs() < 1e-12);
        let fine = grid(GroupId::Torus(1), 4096);
        let m = mollifier(1.0 / 16.0, 0.5, &fine).unwrap();
        assert!(m.quad_error <= fine.spacing() / m.radius, "{}", m.quad_error);
        let coarse = grid(GroupId::Torus(1), 64);
        match mollifier(1.0 / 16.0, 0.5, &coarse) {
            Err(Error::Resolution { required, .. }) => assert_eq!(required, 512),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn smoothing_worked_example() {
        let (f, sys) = worked_example();
        let d = decompose(&f, 2.0, &sys).unwrap();
        let b1 = d.cells[0].b.l1_norm();
        let s = smooth_bad_part(&d, 0.0, SmoothingMode::Fourier { bandwidth: f.grid().max_bandwidth() }).unwrap();
        assert!(s.total.integral().norm() < 1e-12);
        let s = smooth_bad_part(&d, 0.0, SmoothingMode::Direct).unwrap();
        assert!(s.total.integral().norm() < 1e-12);
        assert!(s.total.l1_norm() <= b1 * (1.0 + 1e-6));
    }

    #[test]
    fn no_cells_smooth_to_zero() {
        let g = grid(GroupId::Torus(1), 8);
        let f = GridFunction::constant(g.clone(), Complex64::new(1.0, 0.0));
        let sys = build_full_dyadic_system(&g).unwrap();
        let d = decompose(&f, 3.0, &sys).unwrap();
        let s = smooth_bad_part(&d, 0.5, SmoothingMode::Direct).unwrap();
        assert_eq!(s.total.sup_norm(), 0.0);
    }
}
