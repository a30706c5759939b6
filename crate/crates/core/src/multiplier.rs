//! Spectral multipliers `T f = Σ d_ξ Tr[ξ(x) m(ξ) f̂(ξ)]` with scalar symbols,
//! kernel synthesis by truncated inversion, and kernel diagnostics.

use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dual::{check_index, enumerate_dual, DualIndex};
use crate::error::{Error, Result};
use crate::fourier::{check_resolution, forward_transform, inverse_transform, FourierCoefficients, GridFunction};
use crate::group::{geodesic_norm, GroupId};
use crate::quadrature::QuadratureGrid;

type Rule = Arc<dyn Fn(&DualIndex) -> Complex64 + Send + Sync>;

/// A scalar symbol `ξ -> m(ξ)`, acting as `m(ξ)·I` on each representation space.
#[derive(Clone)]
pub struct MultiplierSymbol {
    group: GroupId,
    label: String,
    rule: Rule,
}

impl fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierSymbol")
            .field("group", &self.group)
            .field("label", &self.label)
            .finish()
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::invalid(format!("theta must lie in [0,1) (got {theta})")));
    }
    Ok(())
}

impl MultiplierSymbol {
    pub fn from_fn(
        group: GroupId,
        label: impl Into<String>,
        rule: impl Fn(&DualIndex) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        MultiplierSymbol {
            group,
            label: label.into(),
            rule: Arc::new(rule),
        }
    }

    /// `⟨ξ⟩^{-nθ/2} e^{i⟨ξ⟩^θ}`.
    pub fn oscillating(group: GroupId, theta: f64) -> Result<Self> {
        let s = group.dimension() as f64 * theta / 2.0;
        Self::oscillating_with_decay(group, theta, s)
            .map(|m| m.with_label(format!("oscillating(theta={theta})")))
    }

    /// `⟨ξ⟩^{-s} e^{i⟨ξ⟩^θ}` for an arbitrary decay order `s >= 0`.
    pub fn oscillating_with_decay(group: GroupId, theta: f64, s: f64) -> Result<Self> {
        check_theta(theta)?;
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::invalid(format!("decay order must be finite and >= 0 (got {s})")));
        }
        Ok(Self::from_fn(group, format!("oscillating(theta={theta}, s={s})"), move |xi| {
            let w = xi.weight();
            Complex64::from_polar(w.powf(-s), w.powf(theta))
        }))
    }

    /// Bessel potential `⟨ξ⟩^{-s}`.
    pub fn bessel(group: GroupId, s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::invalid(format!("Bessel order must be finite and >= 0 (got {s})")));
        }
        Ok(Self::from_fn(group, format!("bessel(s={s})"), move |xi| {
            Complex64::new(xi.weight().powf(-s), 0.0)
        }))
    }

    /// Heat semigroup `e^{-tλ}`.
    pub fn heat(group: GroupId, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("heat time must be finite and > 0 (got {t})")));
        }
        Ok(Self::from_fn(group, format!("heat(t={t})"), move |xi| {
            Complex64::new((-t * xi.eigenvalue()).exp(), 0.0)
        }))
    }

    pub fn constant(group: GroupId, c: Complex64) -> Self {
        Self::from_fn(group, format!("constant({c})"), move |_| c)
    }

    pub fn identity(group: GroupId) -> Self {
        Self::constant(group, Complex64::new(1.0, 0.0)).with_label("identity")
    }

    /// `1` at `target`, `0` elsewhere.
    pub fn indicator(group: GroupId, target: DualIndex) -> Result<Self> {
        check_index(group, &target)?;
        Ok(Self::from_fn(group, format!("indicator({target})"), move |xi| {
            if *xi == target {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// Pointwise product of two symbols on the same group.
    pub fn product(a: &MultiplierSymbol, b: &MultiplierSymbol) -> Result<Self> {
        if a.group != b.group {
            return Err(Error::invalid("symbols on different groups"));
        }
        let (ra, rb) = (a.rule.clone(), b.rule.clone());
        Ok(Self::from_fn(a.group, format!("{}*{}", a.label, b.label), move |xi| ra(xi) * rb(xi)))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, xi: &DualIndex) -> Result<Complex64> {
        check_index(self.group, xi)?;
        let v = (self.rule)(xi);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Numerical(format!("symbol {} is not finite at {xi}", self.label)));
        }
        Ok(v)
    }

    /// The symbol as Fourier coefficients `m(ξ)·I` up to bandwidth `L`.
    pub fn coefficients(&self, bandwidth: f64) -> Result<FourierCoefficients> {
        let zero = FourierCoefficients::zeros(self.group, bandwidth)?;
        for xi in zero.indices() {
            self.eval(xi)?;
        }
        Ok(zero.map(|xi, m| DMatrix::identity(m.nrows(), m.ncols()) * (self.rule)(xi)))
    }
}

/// `T f` at bandwidth `L`: transform, multiply entrywise, invert.
pub fn apply_multiplier(sym: &MultiplierSymbol, f: &GridFunction, bandwidth: f64) -> Result<GridFunction> {
    if sym.group != f.group() {
        return Err(Error::invalid("symbol and function live on different groups"));
    }
    let fhat = forward_transform(f, bandwidth)?;
    for xi in fhat.indices() {
        sym.eval(xi)?;
    }
    let out = fhat.map(|xi, m| m * (sym.rule)(xi));
    inverse_transform(&out, f.grid())
}

/// Spectral damping applied during kernel synthesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    None,
    /// Multiply by `e^{-λ/σ²}`.
    Gaussian { sigma: f64 },
}

impl Regularization {
    /// Gaussian damping with `σ = L`.
    pub fn default_for(bandwidth: f64) -> Self {
        Regularization::Gaussian { sigma: bandwidth }
    }

    pub fn factor(&self, xi: &DualIndex) -> f64 {
        match self {
            Regularization::None => 1.0,
            Regularization::Gaussian { sigma } => (-xi.eigenvalue() / (sigma * sigma)).exp(),
        }
    }
}

/// A kernel sampled on a grid together with how it was produced.
#[derive(Debug, Clone)]
pub struct KernelSynthesis {
    pub kernel: GridFunction,
    pub coefficients: FourierCoefficients,
    pub bandwidth: f64,
    pub regularization: Regularization,
    pub label: String,
}

/// `K_L(x) = Σ_{⟨ξ⟩<=L} d_ξ m(ξ) r(ξ) Tr ξ(x)` where `r` is the damping factor.
pub fn synthesize_kernel(
    sym: &MultiplierSymbol,
    grid: &Arc<QuadratureGrid>,
    bandwidth: f64,
    regularization: Regularization,
) -> Result<KernelSynthesis> {
    if sym.group != grid.group() {
        return Err(Error::invalid("symbol and grid live on different groups"));
    }
    if let Regularization::Gaussian { sigma } = regularization {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("regularization sigma must be > 0 (got {sigma})")));
        }
    }
    let indices = enumerate_dual(sym.group, bandwidth)?;
    check_resolution(grid, &indices, bandwidth)?;
    let coefficients = sym
        .coefficients(bandwidth)?
        .map(|xi, m| m * Complex64::new(regularization.factor(xi), 0.0));
    let kernel = inverse_transform(&coefficients, grid)?;
    Ok(KernelSynthesis {
        kernel,
        coefficients,
        bandwidth,
        regularization,
        label: sym.label.clone(),
    })
}

/// Outcome of the decay check `|m(ξ)| <= C ⟨ξ⟩^{-nθ/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// `C_L = max_{⟨ξ⟩<=L} |m(ξ)| ⟨ξ⟩^{nθ/2}`.
    pub constant: f64,
    /// `(L_k, C_{L_k})` for dyadic `L_k = 2^k < L` followed by `L` itself.
    pub levels: Vec<(f64, f64)>,
    /// Whether `C` grows by at most 1% from one level to the next.
    pub admissible: bool,
}

pub fn verify_decay(sym: &MultiplierSymbol, theta: f64, bandwidth: f64) -> Result<DecayReport> {
    check_theta(theta)?;
    let indices = enumerate_dual(sym.group, bandwidth)?;
    let p = sym.group.dimension() as f64 * theta / 2.0;
    let mut scaled = Vec::with_capacity(indices.len());
    for xi in &indices {
        let w = xi.weight();
        scaled.push((w, sym.eval(xi)?.norm() * w.powf(p)));
    }
    let c_at = |l: f64| scaled.iter().filter(|(w, _)| *w <= l).map(|(_, c)| *c).fold(0.0, f64::max);
    let mut cuts = Vec::new();
    let mut l = 2.0;
    while l < bandwidth {
        cuts.push(l);
        l *= 2.0;
    }
    cuts.push(bandwidth);
    let levels: Vec<(f64, f64)> = cuts.iter().map(|&l| (l, c_at(l))).collect();
    let admissible = levels.windows(2).all(|w| w[1].1 <= 1.01 * w[0].1);
    Ok(DecayReport {
        constant: levels.last().map(|x| x.1).unwrap_or(0.0),
        levels,
        admissible,
    })
}

/// Number of logarithmic bins used by [`envelope_slope`].
pub const ENVELOPE_BINS: usize = 64;
/// Minimum number of populated bins for a slope fit.
pub const ENVELOPE_MIN_BINS: usize = 8;

/// Least-squares slope of `log max|K|` against `log d(x,e)` over radial
/// logarithmic bins covering `window`.
pub fn envelope_slope(k: &KernelSynthesis, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let group = k.kernel.group();
    if !(lo > 0.0) || !(hi > lo) || hi > group.diameter() {
        return Err(Error::invalid(format!(
            "envelope window ({lo}, {hi}) must satisfy 0 < lo < hi <= diameter {}",
            group.diameter()
        )));
    }
    if lo * k.bandwidth < 1.0 {
        return Err(Error::invalid(format!(
            "envelope window starts at {lo}, inside the resolution scale 1/L = {}",
            1.0 / k.bandwidth
        )));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let width = (lhi - llo) / ENVELOPE_BINS as f64;
    let mut maxima = vec![f64::NAN; ENVELOPE_BINS];
    for (p, v) in k.kernel.grid().points().iter().zip(k.kernel.values()) {
        let d = geodesic_norm(p);
        if d < lo || d > hi {
            continue;
        }
        let b = (((d.ln() - llo) / width) as usize).min(ENVELOPE_BINS - 1);
        let a = v.norm();
        if maxima[b].is_nan() || a > maxima[b] {
            maxima[b] = a;
        }
    }
    let pts: Vec<(f64, f64)> = maxima
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_nan())
        .map(|(b, m)| (llo + (b as f64 + 0.5) * width, *m))
        .collect();
    if pts.len() < ENVELOPE_MIN_BINS {
        return Err(Error::invalid(format!(
            "envelope window has {} populated bins; at least {ENVELOPE_MIN_BINS} are needed",
            pts.len()
        )));
    }
    if pts.iter().any(|(_, m)| !(*m > 0.0)) {
        return Err(Error::Numerical("kernel vanishes inside the envelope window".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Kernel dump with columns `distance,re,im,abs`, sorted by distance.
pub fn kernel_csv(k: &KernelSynthesis) -> String {
    let mut rows: Vec<(f64, Complex64)> = k
        .kernel
        .grid()
        .points()
        .iter()
        .zip(k.kernel.values())
        .map(|(p, v)| (geodesic_norm(p), *v))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = String::from("distance,re,im,abs\n");
    for (d, v) in rows {
        let _ = writeln!(out, "{d},{},{},{}", v.re, v.im, v.norm());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::torus_character;
    use crate::quadrature::build_grid;
    use approx::assert_abs_diff_eq;

    fn grid(group: GroupId, b: usize) -> Arc<QuadratureGrid> {
        Arc::new(build_grid(group, b).unwrap())
    }

    #[test]
    fn oscillating_examples() {
        for group in [GroupId::Torus(1), GroupId::Torus(3), GroupId::Su2] {
            let s = MultiplierSymbol::oscillating(group, 0.5).unwrap();
            let v = s.eval(&DualIndex::trivial(group)).unwrap();
            assert_abs_diff_eq!(v.re, 1f64.cos(), epsilon = 1e-15);
            assert_abs_diff_eq!(v.im, 1f64.sin(), epsilon = 1e-15);
        }
        let s = MultiplierSymbol::oscillating(GroupId::Torus(1), 0.0).unwrap();
        for l in -5..=5 {
            assert_abs_diff_eq!(s.eval(&DualIndex::torus(&[l]).unwrap()).unwrap().norm(), 1.0, epsilon = 1e-15);
        }
        let s = MultiplierSymbol::oscillating(GroupId::Torus(1), 0.5).unwrap();
        let v = s.eval(&DualIndex::torus(&[1]).unwrap()).unwrap();
        assert_abs_diff_eq!(v.norm(), 0.6297, epsilon = 1e-4);
        assert!(MultiplierSymbol::oscillating(GroupId::Su2, 1.0).is_err());
        assert!(MultiplierSymbol::oscillating(GroupId::Su2, -0.1).is_err());
    }

    #[test]
    fn bessel_examples() {
        let s = MultiplierSymbol::bessel(GroupId::Su2, 1.5).unwrap();
        assert_abs_diff_eq!(s.eval(&DualIndex::spin(2)).unwrap().re, 3f64.powf(-0.75), epsilon = 1e-15);
        assert_abs_diff_eq!(s.eval(&DualIndex::spin(0)).unwrap().re, 1.0, epsilon = 1e-15);
        let s0 = MultiplierSymbol::bessel(GroupId::Torus(2), 0.0).unwrap();
        assert_eq!(s0.eval(&DualIndex::torus(&[3, -1]).unwrap()).unwrap(), Complex64::new(1.0, 0.0));
        assert!(MultiplierSymbol::bessel(GroupId::Su2, -1.0).is_err());
    }

    #[test]
    fn apply_examples() {
        let g = grid(GroupId::Torus(1), 16);
        let bw = g.max_bandwidth();
        let xi = DualIndex::torus(&[4]).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x| torus_character(&xi, x));
        let id = MultiplierSymbol::identity(GroupId::Torus(1));
        assert!(apply_multiplier(&id, &f, bw).unwrap().max_abs_diff(&f).unwrap() < 1e-12);
        let osc = MultiplierSymbol::oscillating(GroupId::Torus(1), 0.5).unwrap();
        let tf = apply_multiplier(&osc, &f, bw).unwrap();
        let want = f.scale(osc.eval(&xi).unwrap());
        assert!(tf.max_abs_diff(&want).unwrap() < 1e-12);
        let one = GridFunction::constant(g.clone(), Complex64::new(1.0, 0.0));
        let t1 = apply_multiplier(&osc, &one, bw).unwrap();
        assert!(t1.values().iter().all(|v| (v - Complex64::from_polar(1.0, 1.0)).norm() < 1e-12));
    }

    #[test]
    fn synthesis_examples() {
        let g = grid(GroupId::Torus(1), 8);
        let bw = g.max_bandwidth();
        let triv = MultiplierSymbol::indicator(GroupId::Torus(1), DualIndex::trivial(GroupId::Torus(1))).unwrap();
        let k = synthesize_kernel(&triv, &g, bw, Regularization::None).unwrap();
        assert!(k.kernel.values().iter().all(|v| (v - 1.0).norm() < 1e-14));
        let xi3 = DualIndex::torus(&[3]).unwrap();
        let ind = MultiplierSymbol::indicator(GroupId::Torus(1), xi3).unwrap();
        let k = synthesize_kernel(&ind, &g, bw, Regularization::None).unwrap();
        let e3 = GridFunction::from_fn(g.clone(), |x| torus_character(&xi3, x));
        assert!(k.kernel.max_abs_diff(&e3).unwrap() < 1e-13);
    }

    #[test]
    fn synthesized_oscillating_kernel_integrates_to_trivial_value() {
        for (group, b) in [(GroupId::Torus(1), 64), (GroupId::Torus(2), 12), (GroupId::Su2, 8)] {
            let g = grid(group, b);
            let bw = g.max_bandwidth();
            let osc = MultiplierSymbol::oscillating(group, 0.5).unwrap();
            let k = synthesize_kernel(&osc, &g, bw, Regularization::default_for(bw)).unwrap();
            assert!((k.kernel.integral() - Complex64::from_polar(1.0, 1.0)).norm() < 1e-6, "{group}");
        }
    }

    #[test]
    fn synthesis_needs_resolution() {
        let g = grid(GroupId::Su2, 4);
        let osc = MultiplierSymbol::oscillating(GroupId::Su2, 0.5).unwrap();
        assert!(matches!(
            synthesize_kernel(&osc, &g, 10.0, Regularization::None),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn decay_examples() {
        for theta in [0.0, 0.3, 0.6] {
            for group in [GroupId::Torus(2), GroupId::Su2] {
                let osc = MultiplierSymbol::oscillating(group, theta).unwrap();
                let r = verify_decay(&osc, theta, 64.0).unwrap();
                assert!((r.constant - 1.0).abs() < 1e-12);
                assert!(r.admissible);
                let s = group.dimension() as f64 * theta / 2.0;
                let bes = MultiplierSymbol::bessel(group, s).unwrap();
                assert!((verify_decay(&bes, theta, 64.0).unwrap().constant - 1.0).abs() < 1e-12);
            }
        }
        // Identity symbol: C_L is the largest weight to the power nθ/2.
        let id = MultiplierSymbol::identity(GroupId::Su2);
        let r = verify_decay(&id, 0.5, 100.0).unwrap();
        let wmax = enumerate_dual(GroupId::Su2, 100.0).unwrap().last().unwrap().weight();
        assert_abs_diff_eq!(r.constant, wmax.powf(0.75), epsilon = 1e-9);
        assert!(!r.admissible);
    }

    #[test]
    fn smooth_kernel_has_flat_envelope() {
        let g = grid(GroupId::Torus(1), 256);
        let xi3 = DualIndex::torus(&[3]).unwrap();
        let ind = MultiplierSymbol::indicator(GroupId::Torus(1), xi3).unwrap();
        let k = synthesize_kernel(&ind, &g, 64.0, Regularization::None).unwrap();
        let slope = envelope_slope(&k, (1.0 / 32.0, 0.5)).unwrap();
        assert!(slope.abs() < 1e-6, "{slope}");
        assert!(envelope_slope(&k, (0.0, 0.5)).is_err());
        assert!(envelope_slope(&k, (1e-3, 0.5)).is_err());
        assert!(envelope_slope(&k, (0.1, 0.1005)).is_err());
    }

    #[test]
    fn kernel_csv_is_sorted() {
        let g = grid(GroupId::Torus(1), 4);
        let osc = MultiplierSymbol::oscillating(GroupId::Torus(1), 0.5).unwrap();
        let k = synthesize_kernel(&osc, &g, g.max_bandwidth(), Regularization::None).unwrap();
        let csv = kernel_csv(&k);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("distance,re,im,abs"));
        let d: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(d.len(), 8);
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
    }
}
