//! Group Fourier transform `f̂(ξ) = ∫ f(x) ξ(x)* dx`, its inverse
//! `f(x) = Σ d_ξ Tr[ξ(x) f̂(ξ)]`, Plancherel energy and convolution.
//!
//! Convolution is `(f ∗ K)(x) = ∫ f(y) K(y⁻¹x) dy`, whose transform is
//! `K̂(ξ) f̂(ξ)` (kernel factor on the left).

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::dual::{
    check_index, enumerate_dual, half_m, representation_matrix, su2_matrix_from_table,
    torus_character, CMatrix, DualIndex,
};
use crate::error::{Error, Result};
use crate::group::{relative, GroupId, GroupPoint};
use crate::numeric::{pairwise_sum, pairwise_sum_c};
use crate::quadrature::{GridLayout, QuadratureGrid};
use crate::wigner::WignerTable;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex samples of a function on a quadrature grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<QuadratureGrid>,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "grid function has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("grid function values must be finite"));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Arc<QuadratureGrid>, f: impl Fn(&GroupPoint) -> Complex64 + Sync) -> Self {
        let values = grid.points().par_iter().map(&f).collect();
        GridFunction { grid, values }
    }

    pub fn from_real(grid: Arc<QuadratureGrid>, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(grid: Arc<QuadratureGrid>) -> Self {
        let n = grid.len();
        GridFunction {
            grid,
            values: vec![ZERO; n],
        }
    }

    pub fn constant(grid: Arc<QuadratureGrid>, c: Complex64) -> Self {
        let n = grid.len();
        GridFunction {
            grid,
            values: vec![c; n],
        }
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn group(&self) -> GroupId {
        self.grid.group()
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    fn weighted_sum(&self, term: impl Fn(Complex64) -> f64) -> f64 {
        let w = self.grid.weights();
        pairwise_sum(self.values.len(), |i| w[i] * term(self.values[i]))
    }

    pub fn integral(&self) -> Complex64 {
        let w = self.grid.weights();
        pairwise_sum_c(self.values.len(), |i| self.values[i] * w[i])
    }

    pub fn l1_norm(&self) -> f64 {
        self.weighted_sum(|v| v.norm())
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.weighted_sum(|v| v.norm_sqr())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `⟨f, g⟩ = ∫ f conj(g)`.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.check_grid(other)?;
        let w = self.grid.weights();
        Ok(pairwise_sum_c(self.values.len(), |i| {
            self.values[i] * other.values[i].conj() * w[i]
        }))
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_grid(other)?;
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Largest pointwise difference.
    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::invalid("grid functions live on different grids"))
        }
    }
}

/// Fourier coefficients `ξ -> f̂(ξ)` for all `⟨ξ⟩ <= bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    group: GroupId,
    bandwidth: f64,
    indices: Vec<DualIndex>,
    matrices: Vec<CMatrix>,
}

impl FourierCoefficients {
    /// Builds coefficients from `(index, matrix)` pairs. Every index must have
    /// weight at most `bandwidth` and a matrix of matching size; missing
    /// indices are filled with zeros.
    pub fn from_entries(
        group: GroupId,
        bandwidth: f64,
        entries: impl IntoIterator<Item = (DualIndex, CMatrix)>,
    ) -> Result<Self> {
        let mut out = Self::zeros(group, bandwidth)?;
        for (xi, m) in entries {
            check_index(group, &xi)?;
            let d = xi.dim();
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::invalid(format!(
                    "coefficient at {xi} must be {d}x{d} (got {}x{})",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let pos = out.position(&xi).ok_or_else(|| {
                Error::invalid(format!(
                    "index {xi} has weight {} above the bandwidth {bandwidth}",
                    xi.weight()
                ))
            })?;
            out.matrices[pos] = m;
        }
        Ok(out)
    }

    pub fn zeros(group: GroupId, bandwidth: f64) -> Result<Self> {
        let indices = enumerate_dual(group, bandwidth)?;
        let matrices = indices
            .iter()
            .map(|xi| DMatrix::zeros(xi.dim(), xi.dim()))
            .collect();
        Ok(FourierCoefficients {
            group,
            bandwidth,
            indices,
            matrices,
        })
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn indices(&self) -> &[DualIndex] {
        &self.indices
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DualIndex, &CMatrix)> {
        self.indices.iter().zip(&self.matrices)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn position(&self, xi: &DualIndex) -> Option<usize> {
        self.indices.binary_search(xi).ok()
    }

    pub fn get(&self, xi: &DualIndex) -> Option<&CMatrix> {
        self.position(xi).map(|p| &self.matrices[p])
    }

    /// Applies `f(ξ, matrix)` to every entry.
    pub fn map(&self, f: impl Fn(&DualIndex, &CMatrix) -> CMatrix + Sync) -> Self {
        let matrices = self
            .indices
            .par_iter()
            .zip(self.matrices.par_iter())
            .map(|(xi, m)| f(xi, m))
            .collect();
        FourierCoefficients {
            group: self.group,
            bandwidth: self.bandwidth,
            indices: self.indices.clone(),
            matrices,
        }
    }

    /// Coefficients of `x -> f(y⁻¹x)`, i.e. `f̂(ξ) ξ(y)*`.
    pub fn translate_left(&self, y: &GroupPoint) -> Result<Self> {
        if y.group() != self.group {
            return Err(Error::invalid("translation by a point of another group"));
        }
        let reps = self.rep_matrices_at(y);
        Ok(FourierCoefficients {
            group: self.group,
            bandwidth: self.bandwidth,
            indices: self.indices.clone(),
            matrices: self
                .matrices
                .iter()
                .zip(&reps)
                .map(|(m, r)| m * r.adjoint())
                .collect(),
        })
    }

    fn rep_matrices_at(&self, x: &GroupPoint) -> Vec<CMatrix> {
        match self.group {
            GroupId::Torus(_) => self
                .indices
                .iter()
                .map(|xi| DMatrix::from_element(1, 1, torus_character(xi, x)))
                .collect(),
            GroupId::Su2 => {
                let (alpha, beta, gamma) = x.su2_euler().expect("su2 point");
                let max = self.max_two_l();
                let table = WignerTable::new(max, beta);
                self.indices
                    .iter()
                    .map(|xi| match xi {
                        DualIndex::Su2 { two_l } => su2_matrix_from_table(&table, *two_l, alpha, gamma),
                        _ => unreachable!(),
                    })
                    .collect()
            }
        }
    }

    fn max_two_l(&self) -> u32 {
        self.indices
            .iter()
            .filter_map(|xi| match xi {
                DualIndex::Su2 { two_l } => Some(*two_l),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Pointwise inversion `Σ d_ξ Tr[ξ(x) f̂(ξ)]` at an arbitrary point.
    pub fn evaluate(&self, x: &GroupPoint) -> Result<Complex64> {
        if x.group() != self.group {
            return Err(Error::invalid("evaluation at a point of another group"));
        }
        let reps = self.rep_matrices_at(x);
        Ok(pairwise_sum_c(self.len(), |k| {
            let d = self.indices[k].dim();
            let m = &self.matrices[k];
            let r = &reps[k];
            let mut tr = ZERO;
            for a in 0..d {
                for b in 0..d {
                    tr += r[(a, b)] * m[(b, a)];
                }
            }
            tr * d as f64
        }))
    }

    /// JSON form `{group, bandwidth, entries: [{index, re, im}]}`.
    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .iter()
            .map(|(xi, m)| {
                let d = m.nrows();
                let re: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| m[(i, j)].re).collect()).collect();
                let im: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| m[(i, j)].im).collect()).collect();
                json!({ "index": index_to_json(xi), "re": re, "im": im })
            })
            .collect();
        json!({
            "group": self.group.to_string(),
            "bandwidth": self.bandwidth,
            "entries": entries,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let group: GroupId = v["group"]
            .as_str()
            .ok_or_else(|| Error::invalid("coefficients JSON: missing 'group'"))?
            .parse()?;
        let bandwidth = v["bandwidth"]
            .as_f64()
            .ok_or_else(|| Error::invalid("coefficients JSON: missing 'bandwidth'"))?;
        let entries = v["entries"]
            .as_array()
            .ok_or_else(|| Error::invalid("coefficients JSON: missing 'entries'"))?;
        let mut parsed = Vec::with_capacity(entries.len());
        for e in entries {
            let xi = index_from_json(group, &e["index"])?;
            let d = xi.dim();
            let read = |key: &str| -> Result<Vec<Vec<f64>>> {
                serde_json::from_value(e[key].clone())
                    .map_err(|err| Error::invalid(format!("coefficients JSON: bad '{key}' at {xi}: {err}")))
            };
            let (re, im) = (read("re")?, read("im")?);
            if re.len() != d || im.len() != d || re.iter().chain(&im).any(|r| r.len() != d) {
                return Err(Error::invalid(format!("coefficients JSON: entry {xi} must be {d}x{d}")));
            }
            parsed.push((xi, DMatrix::from_fn(d, d, |i, j| Complex64::new(re[i][j], im[i][j]))));
        }
        Self::from_entries(group, bandwidth, parsed)
    }
}

fn index_to_json(xi: &DualIndex) -> Value {
    match xi {
        DualIndex::Torus { .. } => json!(xi.freq().unwrap()),
        DualIndex::Su2 { two_l } => json!({ "two_l": two_l }),
    }
}

fn index_from_json(group: GroupId, v: &Value) -> Result<DualIndex> {
    match group {
        GroupId::Torus(n) => {
            let f: Vec<i64> = serde_json::from_value(v.clone())
                .map_err(|e| Error::invalid(format!("coefficients JSON: bad torus index: {e}")))?;
            if f.len() != n as usize {
                return Err(Error::invalid("coefficients JSON: torus index length mismatch"));
            }
            DualIndex::torus(&f)
        }
        GroupId::Su2 => {
            let t = v["two_l"]
                .as_u64()
                .ok_or_else(|| Error::invalid("coefficients JSON: SU(2) index needs 'two_l'"))?;
            Ok(DualIndex::spin(t as u32))
        }
    }
}

/// `Σ d_ξ ||f̂(ξ)||²_HS`.
pub fn plancherel_energy(coeffs: &FourierCoefficients) -> f64 {
    pairwise_sum(coeffs.len(), |k| {
        coeffs.indices[k].dim() as f64 * coeffs.matrices[k].norm_squared()
    })
}

/// `Σ d_ξ Tr[f̂(ξ) ĝ(ξ)*]`, the L² inner product on the Fourier side.
pub fn fourier_inner(f: &FourierCoefficients, g: &FourierCoefficients) -> Result<Complex64> {
    check_compatible(f, g)?;
    Ok(pairwise_sum_c(f.len(), |k| {
        (&f.matrices[k] * g.matrices[k].adjoint()).trace() * f.indices[k].dim() as f64
    }))
}

fn check_compatible(a: &FourierCoefficients, b: &FourierCoefficients) -> Result<()> {
    if a.group != b.group {
        return Err(Error::invalid(format!(
            "coefficient group mismatch: {} vs {}",
            a.group, b.group
        )));
    }
    if a.indices != b.indices {
        return Err(Error::invalid(format!(
            "bandwidth mismatch: {} vs {}",
            a.bandwidth, b.bandwidth
        )));
    }
    Ok(())
}

pub(crate) fn check_resolution(grid: &QuadratureGrid, indices: &[DualIndex], bandwidth: f64) -> Result<()> {
    if let Some(bad) = indices.iter().find(|xi| !grid.supports(xi)) {
        let required = match bad {
            DualIndex::Torus { freq, .. } => freq.iter().map(|f| f.unsigned_abs() as usize).max().unwrap_or(0) + 1,
            DualIndex::Su2 { two_l } => *two_l as usize + 1,
        };
        return Err(Error::resolution(
            format!(
                "grid of resolution {} cannot resolve bandwidth {bandwidth} (index {bad})",
                grid.resolution()
            ),
            required,
        ));
    }
    Ok(())
}

/// Forward transform at bandwidth `L`.
pub fn forward_transform(f: &GridFunction, bandwidth: f64) -> Result<FourierCoefficients> {
    let grid = f.grid.as_ref();
    let indices = enumerate_dual(grid.group(), bandwidth)?;
    check_resolution(grid, &indices, bandwidth)?;
    let matrices = match grid.layout() {
        GridLayout::Torus { n, per_axis } => {
            let table = unit_roots(*per_axis);
            let w = grid.weights();
            indices
                .par_iter()
                .map(|xi| {
                    let freq = xi.freq().unwrap();
                    let v = pairwise_sum_c(f.values.len(), |i| {
                        let p = torus_phase_index(i, freq, *n, *per_axis);
                        // conj(e_ℓ) = e_{-ℓ}
                        let k = (*per_axis - p) % *per_axis;
                        f.values[i] * table[k] * w[i]
                    });
                    DMatrix::from_element(1, 1, v)
                })
                .collect()
        }
        GridLayout::Su2 { alphas, betas, gammas } => {
            let max = indices.iter().map(|xi| xi.dim() as u32 - 1).max().unwrap_or(0);
            let tables: Vec<WignerTable> = betas.par_iter().map(|&b| WignerTable::new(max, b)).collect();
            let beta_weights: Vec<f64> = (0..betas.len())
                .map(|ib| grid.weights()[ib * gammas.len()])
                .collect();
            indices
                .par_iter()
                .map(|xi| su2_forward_one(xi, &f.values, alphas, gammas, &tables, &beta_weights))
                .collect()
        }
    };
    Ok(FourierCoefficients {
        group: grid.group(),
        bandwidth,
        indices,
        matrices,
    })
}

fn su2_forward_one(
    xi: &DualIndex,
    values: &[Complex64],
    alphas: &[f64],
    gammas: &[f64],
    tables: &[WignerTable],
    beta_weights: &[f64],
) -> CMatrix {
    let two_l = match xi {
        DualIndex::Su2 { two_l } => *two_l,
        _ => unreachable!(),
    };
    let d = two_l as usize + 1;
    let (na, nb, ng) = (alphas.len(), tables.len(), gammas.len());
    // e^{i m_a γ} and e^{i m_b α}
    let pg: Vec<Vec<Complex64>> = (0..d)
        .map(|a| gammas.iter().map(|&g| Complex64::from_polar(1.0, half_m(two_l, a) * g)).collect())
        .collect();
    let pa: Vec<Vec<Complex64>> = (0..d)
        .map(|b| alphas.iter().map(|&al| Complex64::from_polar(1.0, half_m(two_l, b) * al)).collect())
        .collect();
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    let mut s1 = vec![ZERO; na * d];
    for ib in 0..nb {
        for ia in 0..na {
            let base = (ia * nb + ib) * ng;
            for a in 0..d {
                let mut acc = ZERO;
                for ig in 0..ng {
                    acc += values[base + ig] * pg[a][ig];
                }
                s1[ia * d + a] = acc;
            }
        }
        let block = tables[ib].block(two_l);
        for a in 0..d {
            for b in 0..d {
                let mut acc = ZERO;
                for ia in 0..na {
                    acc += pa[b][ia] * s1[ia * d + a];
                }
                out[(a, b)] += acc * (block[b * d + a] * beta_weights[ib]);
            }
        }
    }
    out
}

fn unit_roots(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect()
}

/// `(ℓ · i) mod per_axis` for the `i`-th torus grid point.
#[inline]
fn torus_phase_index(point: usize, freq: &[i64], n: usize, per_axis: usize) -> usize {
    let m = per_axis as i64;
    let mut rem = point;
    let mut acc = 0i64;
    for k in (0..n).rev() {
        let ik = (rem % per_axis) as i64;
        rem /= per_axis;
        acc = (acc + freq[k].rem_euclid(m) * ik) % m;
    }
    acc as usize
}

/// Inverse transform evaluated on every point of `grid`.
pub fn inverse_transform(coeffs: &FourierCoefficients, grid: &Arc<QuadratureGrid>) -> Result<GridFunction> {
    if coeffs.group != grid.group() {
        return Err(Error::invalid(format!(
            "coefficients of {} cannot be synthesised on a {} grid",
            coeffs.group,
            grid.group()
        )));
    }
    let values = match grid.layout() {
        GridLayout::Torus { n, per_axis } => {
            let table = unit_roots(*per_axis);
            let scalars: Vec<Complex64> = coeffs.matrices.iter().map(|m| m[(0, 0)]).collect();
            (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    pairwise_sum_c(scalars.len(), |k| {
                        let freq = coeffs.indices[k].freq().unwrap();
                        scalars[k] * table[torus_phase_index(i, freq, *n, *per_axis)]
                    })
                })
                .collect()
        }
        GridLayout::Su2 { alphas, betas, gammas } => su2_inverse(coeffs, alphas, betas, gammas),
    };
    Ok(GridFunction {
        grid: grid.clone(),
        values,
    })
}

fn su2_inverse(coeffs: &FourierCoefficients, alphas: &[f64], betas: &[f64], gammas: &[f64]) -> Vec<Complex64> {
    let (na, nb, ng) = (alphas.len(), betas.len(), gammas.len());
    let max = coeffs.max_two_l();
    let per_beta: Vec<Vec<Complex64>> = betas
        .par_iter()
        .map(|&beta| {
            let table = WignerTable::new(max, beta);
            let mut slab = vec![ZERO; na * ng];
            for (xi, m) in coeffs.iter() {
                let two_l = match xi {
                    DualIndex::Su2 { two_l } => *two_l,
                    _ => unreachable!(),
                };
                let d = two_l as usize + 1;
                let block = table.block(two_l);
                // t[a][ig] = Σ_b d_ab e^{-i m_b γ} F_ba
                let mut t = vec![ZERO; d * ng];
                for a in 0..d {
                    for (ig, &g) in gammas.iter().enumerate() {
                        let mut acc = ZERO;
                        for b in 0..d {
                            acc += Complex64::from_polar(block[a * d + b], -half_m(two_l, b) * g) * m[(b, a)];
                        }
                        t[a * ng + ig] = acc;
                    }
                }
                for (ia, &al) in alphas.iter().enumerate() {
                    let ph: Vec<Complex64> = (0..d)
                        .map(|a| Complex64::from_polar(d as f64, -half_m(two_l, a) * al))
                        .collect();
                    for ig in 0..ng {
                        let mut acc = ZERO;
                        for a in 0..d {
                            acc += ph[a] * t[a * ng + ig];
                        }
                        slab[ia * ng + ig] += acc;
                    }
                }
            }
            slab
        })
        .collect();
    let mut values = vec![ZERO; na * nb * ng];
    for ia in 0..na {
        for (ib, slab) in per_beta.iter().enumerate() {
            let base = (ia * nb + ib) * ng;
            values[base..base + ng].copy_from_slice(&slab[ia * ng..(ia + 1) * ng]);
        }
    }
    values
}

/// Fourier-side convolution: entry `K̂(ξ) f̂(ξ)`.
pub fn convolve_fourier(fhat: &FourierCoefficients, khat: &FourierCoefficients) -> Result<FourierCoefficients> {
    check_compatible(fhat, khat)?;
    Ok(FourierCoefficients {
        group: fhat.group,
        bandwidth: fhat.bandwidth,
        indices: fhat.indices.clone(),
        matrices: khat
            .matrices
            .iter()
            .zip(&fhat.matrices)
            .map(|(k, f)| k * f)
            .collect(),
    })
}

/// How `K(y⁻¹x)` is evaluated off the grid in [`convolve_direct`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelEvaluation {
    /// Transform `K` at the given bandwidth (default: the grid's maximum)
    /// and evaluate the truncated inversion series.
    Resynthesis { bandwidth: Option<f64> },
    /// Use the sample at the nearest grid point. Diagnostic only.
    NearestGrid,
}

impl Default for KernelEvaluation {
    fn default() -> Self {
        KernelEvaluation::Resynthesis { bandwidth: None }
    }
}

/// Translated kernel rows held in memory at once by the SU(2) direct convolution.
const SU2_ROW_CHUNK: usize = 64;

/// Direct quadrature `(f ∗ K)(x) = Σ_y w_y f(y) K(y⁻¹x)`.
pub fn convolve_direct(f: &GridFunction, k: &GridFunction, mode: KernelEvaluation) -> Result<GridFunction> {
    f.check_grid(k)?;
    let grid = f.grid.clone();
    let w = grid.weights();
    let n = grid.len();
    let support: Vec<usize> = (0..n).filter(|&i| f.values[i] != ZERO).collect();

    let values: Vec<Complex64> = match grid.layout() {
        GridLayout::Torus { n: dim, per_axis } => {
            let kvals = match mode {
                KernelEvaluation::NearestGrid => k.values.clone(),
                KernelEvaluation::Resynthesis { bandwidth } => {
                    let bw = bandwidth.unwrap_or_else(|| grid.max_bandwidth());
                    inverse_transform(&forward_transform(k, bw)?, &grid)?.values
                }
            };
            let (dim, per_axis) = (*dim, *per_axis);
            (0..n)
                .into_par_iter()
                .map(|x| {
                    pairwise_sum_c(support.len(), |s| {
                        let y = support[s];
                        f.values[y] * kvals[torus_index_diff(x, y, dim, per_axis)] * w[y]
                    })
                })
                .collect()
        }
        GridLayout::Su2 { alphas, betas, gammas } => match mode {
            KernelEvaluation::Resynthesis { bandwidth } => {
                // Row y is x -> K(y⁻¹x), synthesised from K̂(ξ)ξ(y)*.
                let bw = bandwidth.unwrap_or_else(|| grid.max_bandwidth());
                let khat = forward_transform(k, bw)?;
                let points = grid.points();
                let mut acc = vec![ZERO; n];
                for chunk in support.chunks(SU2_ROW_CHUNK) {
                    let rows: Vec<Vec<Complex64>> = chunk
                        .par_iter()
                        .map(|&y| Ok(inverse_transform(&khat.translate_left(&points[y])?, &grid)?.values))
                        .collect::<Result<_>>()?;
                    acc.par_iter_mut().enumerate().for_each(|(x, a)| {
                        *a += pairwise_sum_c(chunk.len(), |s| f.values[chunk[s]] * rows[s][x] * w[chunk[s]]);
                    });
                }
                acc
            }
            KernelEvaluation::NearestGrid => {
                let points = grid.points();
                (0..n)
                    .into_par_iter()
                    .map(|x| {
                        pairwise_sum_c(support.len(), |s| {
                            let y = support[s];
                            let z = relative(&points[y], &points[x]).expect("same group");
                            let idx = su2_nearest_index(&z, alphas, betas, gammas);
                            f.values[y] * k.values[idx] * w[y]
                        })
                    })
                    .collect()
            }
        },
    };
    Ok(GridFunction { grid, values })
}

/// Grid index of `x - y` on a uniform torus grid.
#[inline]
pub(crate) fn torus_index_diff(x: usize, y: usize, n: usize, per_axis: usize) -> usize {
    let (mut rx, mut ry) = (x, y);
    let mut idx = 0usize;
    let mut stride = 1usize;
    for _ in 0..n {
        let ix = rx % per_axis;
        let iy = ry % per_axis;
        rx /= per_axis;
        ry /= per_axis;
        idx += ((ix + per_axis - iy) % per_axis) * stride;
        stride *= per_axis;
    }
    idx
}

/// Approximate nearest SU(2) grid node by rounding Euler angles.
fn su2_nearest_index(z: &GroupPoint, alphas: &[f64], betas: &[f64], gammas: &[f64]) -> usize {
    let (a, b, g) = z.su2_euler().expect("su2 point");
    let (na, nb, ng) = (alphas.len(), betas.len(), gammas.len());
    let two_pi = 2.0 * std::f64::consts::PI;
    let ia = ((a.rem_euclid(two_pi) / two_pi * na as f64).round() as usize) % na;
    let ig = ((g.rem_euclid(2.0 * two_pi) / (2.0 * two_pi) * ng as f64).round() as usize) % ng;
    let ib = betas
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - b).abs().total_cmp(&(y.1 - b).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    (ia * nb + ib) * ng + ig
}

/// Representation matrix evaluated through the dual module; re-exported for
/// callers that build coefficients by hand.
pub fn rep(group: GroupId, xi: &DualIndex, x: &GroupPoint) -> Result<CMatrix> {
    representation_matrix(group, xi, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_grid;

    fn grid(group: GroupId, b: usize) -> Arc<QuadratureGrid> {
        Arc::new(build_grid(group, b).unwrap())
    }

    #[test]
    fn constant_function_has_only_trivial_coefficient() {
        for (group, b, bw) in [(GroupId::Torus(1), 8, 40.0), (GroupId::Torus(2), 4, 20.0), (GroupId::Su2, 6, 3.0)] {
            let g = grid(group, b);
            let f = GridFunction::constant(g, Complex64::new(1.0, 0.0));
            let c = forward_transform(&f, bw).unwrap();
            for (xi, m) in c.iter() {
                if xi.is_trivial() {
                    assert!((m[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
                } else {
                    assert!(m.norm() < 1e-10, "{group} {xi}: {}", m.norm());
                }
            }
        }
    }

    #[test]
    fn exponential_on_circle() {
        let g = grid(GroupId::Torus(1), 8);
        let xi3 = DualIndex::torus(&[3]).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x| torus_character(&xi3, x));
        let c = forward_transform(&f, g.max_bandwidth()).unwrap();
        for (xi, m) in c.iter() {
            let want = if *xi == xi3 { 1.0 } else { 0.0 };
            assert!((m[(0, 0)] - want).norm() < 1e-12);
        }
        assert!((plancherel_energy(&c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spin_half_character() {
        let g = grid(GroupId::Su2, 4);
        let half = DualIndex::spin(1);
        let f = GridFunction::from_fn(g.clone(), |x| crate::dual::character(&half, x).unwrap());
        let c = forward_transform(&f, 2.0).unwrap();
        let m = c.get(&half).unwrap();
        assert!((m - CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((plancherel_energy(&c) - 1.0).abs() < 1e-12);
        // Inversion reproduces the character.
        let back = inverse_transform(&c, &g).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-12);
    }

    #[test]
    fn trivial_only_coefficients_give_constant() {
        let g = grid(GroupId::Su2, 3);
        let c0 = Complex64::new(0.3, -1.2);
        let c = FourierCoefficients::from_entries(
            GroupId::Su2,
            2.0,
            [(DualIndex::spin(0), DMatrix::from_element(1, 1, c0))],
        )
        .unwrap();
        let f = inverse_transform(&c, &g).unwrap();
        assert!(f.values().iter().all(|v| (v - c0).norm() < 1e-14));
        assert_eq!(plancherel_energy(&FourierCoefficients::zeros(GroupId::Su2, 3.0).unwrap()), 0.0);
    }

    #[test]
    fn insufficient_resolution_is_reported() {
        let g = grid(GroupId::Su2, 3);
        let f = GridFunction::zeros(g);
        match forward_transform(&f, 5.0) {
            Err(Error::Resolution { required, .. }) => assert!(required > 3),
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn convolution_with_constant_kernel_is_the_mean() {
        let g = grid(GroupId::Torus(1), 8);
        let f = GridFunction::from_fn(g.clone(), |x| {
            let t = x.torus_coords().unwrap()[0];
            Complex64::new((2.0 * std::f64::consts::PI * t).cos() + 0.5, 0.0)
        });
        let bw = g.max_bandwidth();
        let fhat = forward_transform(&f, bw).unwrap();
        let khat = FourierCoefficients::from_entries(
            GroupId::Torus(1),
            bw,
            [(DualIndex::trivial(GroupId::Torus(1)), DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)))],
        )
        .unwrap();
        let conv = convolve_fourier(&fhat, &khat).unwrap();
        for (xi, m) in conv.iter() {
            if xi.is_trivial() {
                assert!((m[(0, 0)] - f.integral()).norm() < 1e-14);
            } else {
                assert!(m.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn e2_convolved_with_e2() {
        let g = grid(GroupId::Torus(1), 8);
        let xi2 = DualIndex::torus(&[2]).unwrap();
        let e2 = GridFunction::from_fn(g.clone(), |x| torus_character(&xi2, x));
        let direct = convolve_direct(&e2, &e2, KernelEvaluation::default()).unwrap();
        assert!(direct.max_abs_diff(&e2).unwrap() < 1e-12);
        let bw = g.max_bandwidth();
        let fh = forward_transform(&e2, bw).unwrap();
        let four = inverse_transform(&convolve_fourier(&fh, &fh).unwrap(), &g).unwrap();
        assert!(four.max_abs_diff(&e2).unwrap() < 1e-12);
    }

    #[test]
    fn direct_convolution_trivial_cases() {
        let g = grid(GroupId::Su2, 3);
        let k = GridFunction::from_fn(g.clone(), |x| {
            let q = x.quaternion().unwrap();
            Complex64::new(q[0] * 2.0 + 0.3, q[1])
        });
        let zero = GridFunction::zeros(g.clone());
        let one = GridFunction::constant(g.clone(), Complex64::new(1.0, 0.0));
        let r = convolve_direct(&one, &zero, KernelEvaluation::default()).unwrap();
        assert_eq!(r.sup_norm(), 0.0);
        let r = convolve_direct(&one, &k, KernelEvaluation::default()).unwrap();
        let mean = k.integral();
        assert!(r.values().iter().all(|v| (v - mean).norm() < 1e-10));
    }

    #[test]
    fn mismatched_coefficients_are_rejected() {
        let a = FourierCoefficients::zeros(GroupId::Torus(1), 10.0).unwrap();
        let b = FourierCoefficients::zeros(GroupId::Torus(1), 20.0).unwrap();
        assert!(convolve_fourier(&a, &b).is_err());
        let c = FourierCoefficients::zeros(GroupId::Su2, 2.0).unwrap();
        let g = grid(GroupId::Torus(1), 4);
        assert!(inverse_transform(&c, &g).is_err());
    }

    #[test]
    fn json_layout() {
        let c = FourierCoefficients::from_entries(
            GroupId::Su2,
            2.0,
            [(DualIndex::spin(1), CMatrix::identity(2, 2) * Complex64::new(0.5, 0.25))],
        )
        .unwrap();
        let v = c.to_json();
        assert_eq!(v["group"], "su2");
        assert_eq!(v["entries"][1]["index"]["two_l"], 1);
        assert_eq!(v["entries"][1]["re"][0][0], 0.5);
        assert_eq!(v["entries"][1]["im"][1][1], 0.25);
        let back = FourierCoefficients::from_json(&v).unwrap();
        assert_eq!(back, c);
    }
}
