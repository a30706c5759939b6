//! Haar quadrature grids.
//!
//! Torus: uniform tensor grid with `(2B)^n` points. SU(2): ZYZ Euler product
//! grid with `2B` uniform nodes in `alpha ∈ [0, 2π)`, `B` Gauss–Legendre nodes
//! in `cos beta`, and `2B` uniform nodes in `gamma ∈ [0, 4π)`.
//!
//! Exactness: on the torus, products `e_ℓ · conj(e_m)` integrate exactly when
//! every component of `ℓ` and `m` is at most `B - 1` in absolute value. On
//! SU(2), products of matrix coefficients of spins `l1`, `l2` integrate
//! exactly when `l1 + l2 <= B - 1`; in particular all pairs with
//! `l <= (B - 1) / 2`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::dual::DualIndex;
use crate::error::{Error, Result};
use crate::group::{GroupId, GroupPoint};
use crate::numeric::{gauss_legendre, pairwise_sum};

/// Index layout of a grid, used by the transforms.
#[derive(Debug, Clone, PartialEq)]
pub enum GridLayout {
    /// `per_axis` points per coordinate, last coordinate fastest.
    Torus { n: usize, per_axis: usize },
    /// Point index = `(ia * nb + ib) * ng + ig`.
    Su2 {
        alphas: Vec<f64>,
        betas: Vec<f64>,
        gammas: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    group: GroupId,
    resolution: usize,
    points: Vec<GroupPoint>,
    weights: Vec<f64>,
    layout: GridLayout,
}

impl PartialEq for QuadratureGrid {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.resolution == other.resolution
    }
}

/// Builds the quadrature grid of resolution `b` (`b >= 2`).
pub fn build_grid(group: GroupId, b: usize) -> Result<QuadratureGrid> {
    if b < 2 {
        return Err(Error::invalid(format!(
            "grid resolution B must be at least 2 (got {b})"
        )));
    }
    match group {
        GroupId::Torus(n) => {
            let n = n as usize;
            let per_axis = 2 * b;
            let total = per_axis.pow(n as u32);
            let w = 1.0 / total as f64;
            let mut points = Vec::with_capacity(total);
            for idx in 0..total {
                let mut coords = [0.0; 3];
                let mut rem = idx;
                for k in (0..n).rev() {
                    coords[k] = (rem % per_axis) as f64 / per_axis as f64;
                    rem /= per_axis;
                }
                points.push(GroupPoint::Torus { coords, n: n as u8 });
            }
            Ok(QuadratureGrid {
                group,
                resolution: b,
                points,
                weights: vec![w; total],
                layout: GridLayout::Torus { n, per_axis },
            })
        }
        GroupId::Su2 => {
            let na = 2 * b;
            let ng = 2 * b;
            let (x, wx) = gauss_legendre(b);
            let alphas: Vec<f64> = (0..na).map(|i| 2.0 * PI * i as f64 / na as f64).collect();
            let gammas: Vec<f64> = (0..ng).map(|i| 4.0 * PI * i as f64 / ng as f64).collect();
            // Descending x so beta increases with the index.
            let betas: Vec<f64> = x.iter().rev().map(|xi| xi.acos()).collect();
            let wb: Vec<f64> = wx.iter().rev().copied().collect();
            let scale = 1.0 / (2.0 * (na * ng) as f64);
            let mut points = Vec::with_capacity(na * b * ng);
            let mut weights = Vec::with_capacity(na * b * ng);
            for &a in &alphas {
                for (ib, &beta) in betas.iter().enumerate() {
                    for &g in &gammas {
                        points.push(GroupPoint::su2_from_euler(a, beta, g));
                        weights.push(wb[ib] * scale);
                    }
                }
            }
            Ok(QuadratureGrid {
                group,
                resolution: b,
                points,
                weights,
                layout: GridLayout::Su2 {
                    alphas,
                    betas,
                    gammas,
                },
            })
        }
    }
}

impl QuadratureGrid {
    pub fn group(&self) -> GroupId {
        self.group
    }

    /// The resolution parameter `B`.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[GroupPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    /// Quadrature of real samples.
    pub fn integrate_real(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        pairwise_sum(self.len(), |i| self.weights[i] * values[i])
    }

    /// Whether the grid's exactness guarantee covers `xi`.
    pub fn supports(&self, xi: &DualIndex) -> bool {
        if xi.group() != self.group {
            return false;
        }
        let cap = self.resolution as i64 - 1;
        match xi {
            DualIndex::Torus { freq, .. } => freq.iter().all(|f| f.abs() <= cap),
            DualIndex::Su2 { two_l } => (*two_l as i64) <= cap,
        }
    }

    /// Largest bandwidth `L` such that every `ξ` with `⟨ξ⟩ <= L` is supported.
    pub fn max_bandwidth(&self) -> f64 {
        let cap = self.resolution - 1;
        match self.group {
            GroupId::Torus(_) => {
                // Some ℓ with |ℓ|_2 slightly above B - 1 is the first to fail.
                let k = cap as f64 + 1.0;
                (1.0 + 4.0 * PI * PI * k * k).sqrt() * (1.0 - 1e-12)
            }
            GroupId::Su2 => {
                let l = (cap as f64 + 1.0) / 2.0;
                (1.0 + l * (l + 1.0)).sqrt() * (1.0 - 1e-12)
            }
        }
    }

    /// Typical spacing between neighbouring points.
    pub fn spacing(&self) -> f64 {
        match self.group {
            GroupId::Torus(_) => 1.0 / (2 * self.resolution) as f64,
            GroupId::Su2 => PI / self.resolution as f64,
        }
    }

    /// Smallest resolution whose spacing is at most `h`.
    pub fn resolution_for_spacing(group: GroupId, h: f64) -> usize {
        let b = match group {
            GroupId::Torus(_) => (1.0 / (2.0 * h)).ceil(),
            GroupId::Su2 => (PI / h).ceil(),
        };
        (b as usize).max(2)
    }

    /// Coordinate column names used in CSV output.
    pub fn csv_columns(&self) -> String {
        match self.group {
            GroupId::Torus(n) => (1..=n).map(|k| format!("x{k}")).collect::<Vec<_>>().join(","),
            GroupId::Su2 => "a,b,c,d".to_string(),
        }
    }

    /// Debug dump: one row per point, coordinates then weight.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{},weight", self.csv_columns());
        for (p, w) in self.points.iter().zip(&self.weights) {
            let cols: Vec<String> = p.coords_for_csv().iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{},{}", cols.join(","), w);
        }
        out
    }
}
