//! The unitary dual of the supported groups: indices, dimensions, Laplace
//! eigenvalues, elliptic weights and representation matrices.
//!
//! Normalisation: `λ = 4π²|ℓ|²` for the torus character `e_ℓ(x) = e^{2πiℓ·x}`
//! and `λ = l(l + 1)` for the spin-l representation of SU(2). The weight is
//! `⟨ξ⟩ = (1 + λ)^{1/2}`.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupId, GroupPoint};
use crate::wigner::WignerTable;

pub type CMatrix = DMatrix<Complex64>;

/// A point of the unitary dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DualIndex {
    /// Torus frequency; entries past `n` are zero.
    Torus { freq: [i64; 3], n: u8 },
    /// SU(2) spin `l = two_l / 2`.
    Su2 { two_l: u32 },
}

impl DualIndex {
    pub fn torus(freq: &[i64]) -> Result<Self> {
        let n = freq.len();
        if !(1..=3).contains(&n) {
            return Err(Error::invalid(format!(
                "torus frequency needs 1..=3 entries (got {n})"
            )));
        }
        let mut f = [0i64; 3];
        f[..n].copy_from_slice(freq);
        Ok(DualIndex::Torus { freq: f, n: n as u8 })
    }

    pub fn spin(two_l: u32) -> Self {
        DualIndex::Su2 { two_l }
    }

    pub fn trivial(group: GroupId) -> Self {
        match group {
            GroupId::Torus(n) => DualIndex::Torus { freq: [0; 3], n },
            GroupId::Su2 => DualIndex::Su2 { two_l: 0 },
        }
    }

    pub fn group(&self) -> GroupId {
        match self {
            DualIndex::Torus { n, .. } => GroupId::Torus(*n),
            DualIndex::Su2 { .. } => GroupId::Su2,
        }
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            DualIndex::Torus { freq, .. } => freq.iter().all(|&f| f == 0),
            DualIndex::Su2 { two_l } => *two_l == 0,
        }
    }

    /// Frequency vector (first `n` entries) of a torus index.
    pub fn freq(&self) -> Option<&[i64]> {
        match self {
            DualIndex::Torus { freq, n } => Some(&freq[..*n as usize]),
            DualIndex::Su2 { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DualIndex::Torus { .. } => 1,
            DualIndex::Su2 { two_l } => *two_l as usize + 1,
        }
    }

    pub fn eigenvalue(&self) -> f64 {
        match self {
            DualIndex::Torus { freq, .. } => {
                let s: i64 = freq.iter().map(|f| f * f).sum();
                4.0 * PI * PI * s as f64
            }
            DualIndex::Su2 { two_l } => {
                let l = *two_l as f64 / 2.0;
                l * (l + 1.0)
            }
        }
    }

    /// Elliptic weight `⟨ξ⟩`.
    pub fn weight(&self) -> f64 {
        (1.0 + self.eigenvalue()).sqrt()
    }

    pub fn spectral_data(&self) -> SpectralData {
        let eigenvalue = self.eigenvalue();
        SpectralData {
            dim: self.dim(),
            eigenvalue,
            weight: (1.0 + eigenvalue).sqrt(),
        }
    }
}

impl PartialOrd for DualIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order: lexicographic for torus frequencies, increasing spin for SU(2).
impl Ord for DualIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (DualIndex::Torus { freq: a, n: na }, DualIndex::Torus { freq: b, n: nb }) => {
                na.cmp(nb).then_with(|| a.cmp(b))
            }
            (DualIndex::Su2 { two_l: a }, DualIndex::Su2 { two_l: b }) => a.cmp(b),
            (DualIndex::Torus { .. }, DualIndex::Su2 { .. }) => Ordering::Less,
            (DualIndex::Su2 { .. }, DualIndex::Torus { .. }) => Ordering::Greater,
        }
    }
}

impl fmt::Display for DualIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualIndex::Torus { freq, n } => {
                let parts: Vec<String> = freq[..*n as usize].iter().map(|v| v.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            DualIndex::Su2 { two_l } => {
                if two_l % 2 == 0 {
                    write!(f, "l={}", two_l / 2)
                } else {
                    write!(f, "l={two_l}/2")
                }
            }
        }
    }
}

/// Dimension, Laplace eigenvalue and weight of a representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub dim: usize,
    pub eigenvalue: f64,
    pub weight: f64,
}

/// All indices with `⟨ξ⟩ <= bandwidth`, in canonical order.
pub fn enumerate_dual(group: GroupId, bandwidth: f64) -> Result<Vec<DualIndex>> {
    if !(bandwidth >= 1.0) || !bandwidth.is_finite() {
        return Err(Error::invalid(format!(
            "bandwidth must be finite and >= 1 (got {bandwidth})"
        )));
    }
    let mut out = Vec::new();
    match group {
        GroupId::Torus(n) => {
            let kmax = ((bandwidth * bandwidth - 1.0).max(0.0).sqrt() / (2.0 * PI)).floor() as i64 + 1;
            let n = n as usize;
            let mut freq = [0i64; 3];
            let mut counters = vec![-kmax; n];
            loop {
                freq[..n].copy_from_slice(&counters);
                let idx = DualIndex::Torus { freq, n: n as u8 };
                if idx.weight() <= bandwidth {
                    out.push(idx);
                }
                // Odometer increment, last coordinate fastest.
                let mut k = n;
                loop {
                    if k == 0 {
                        return Ok(out);
                    }
                    k -= 1;
                    if counters[k] < kmax {
                        counters[k] += 1;
                        break;
                    }
                    counters[k] = -kmax;
                }
            }
        }
        GroupId::Su2 => {
            let mut two_l = 0u32;
            loop {
                let idx = DualIndex::Su2 { two_l };
                if idx.weight() > bandwidth {
                    break;
                }
                out.push(idx);
                two_l += 1;
            }
        }
    }
    Ok(out)
}

pub fn spectral_data(group: GroupId, xi: &DualIndex) -> Result<SpectralData> {
    check_index(group, xi)?;
    Ok(xi.spectral_data())
}

pub(crate) fn check_index(group: GroupId, xi: &DualIndex) -> Result<()> {
    if xi.group() == group {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "dual index {xi} does not belong to {group}"
        )))
    }
}

/// The matrix `ξ(x)`.
pub fn representation_matrix(group: GroupId, xi: &DualIndex, x: &GroupPoint) -> Result<CMatrix> {
    check_index(group, xi)?;
    if x.group() != group {
        return Err(Error::invalid(format!(
            "group point belongs to {}, expected {group}",
            x.group()
        )));
    }
    Ok(match (xi, x) {
        (DualIndex::Torus { .. }, GroupPoint::Torus { .. }) => {
            DMatrix::from_element(1, 1, torus_character(xi, x))
        }
        (DualIndex::Su2 { two_l }, GroupPoint::Su2(_)) => {
            let (alpha, beta, gamma) = x.su2_euler().expect("su2 point");
            let table = WignerTable::new(*two_l, beta);
            su2_matrix_from_table(&table, *two_l, alpha, gamma)
        }
        _ => unreachable!("checked above"),
    })
}

/// `e^{2πi ℓ·x}`.
pub fn torus_character(xi: &DualIndex, x: &GroupPoint) -> Complex64 {
    let (freq, coords) = match (xi, x) {
        (DualIndex::Torus { freq, n }, GroupPoint::Torus { coords, .. }) => {
            (&freq[..*n as usize], &coords[..*n as usize])
        }
        _ => panic!("torus_character needs torus arguments"),
    };
    // Reduce ℓ·x mod 1 before scaling to keep the phase accurate.
    let mut phase = 0.0;
    for (f, c) in freq.iter().zip(coords) {
        phase += (*f as f64) * c;
    }
    let phase = phase - phase.floor();
    Complex64::from_polar(1.0, 2.0 * PI * phase)
}

/// `D^l_{m'm}(α, β, γ) = e^{-im'α} d^l_{m'm}(β) e^{-imγ}` from a precomputed table.
pub(crate) fn su2_matrix_from_table(table: &WignerTable, two_l: u32, alpha: f64, gamma: f64) -> CMatrix {
    let d = two_l as usize + 1;
    let block = table.block(two_l);
    let pa: Vec<Complex64> = (0..d)
        .map(|a| Complex64::from_polar(1.0, -half_m(two_l, a) * alpha))
        .collect();
    let pg: Vec<Complex64> = (0..d)
        .map(|b| Complex64::from_polar(1.0, -half_m(two_l, b) * gamma))
        .collect();
    DMatrix::from_fn(d, d, |a, b| pa[a] * block[a * d + b] * pg[b])
}

/// Magnetic number `m = j - row` for spin `two_l / 2`.
#[inline]
pub(crate) fn half_m(two_l: u32, row: usize) -> f64 {
    (two_l as f64 - 2.0 * row as f64) / 2.0
}

/// Character `Tr ξ(x)`.
pub fn character(xi: &DualIndex, x: &GroupPoint) -> Result<Complex64> {
    Ok(representation_matrix(xi.group(), xi, x)?.trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{compose, identity};
    use approx::assert_abs_diff_eq;

    #[test]
    fn enumerate_examples() {
        let t1 = enumerate_dual(GroupId::Torus(1), 7.0).unwrap();
        let f: Vec<i64> = t1.iter().map(|x| x.freq().unwrap()[0]).collect();
        assert_eq!(f, vec![-1, 0, 1]);

        let s = enumerate_dual(GroupId::Su2, 1.0).unwrap();
        assert_eq!(s, vec![DualIndex::spin(0)]);
        let s = enumerate_dual(GroupId::Su2, 2.0).unwrap();
        assert_eq!(s, vec![DualIndex::spin(0), DualIndex::spin(1), DualIndex::spin(2)]);
        assert!(enumerate_dual(GroupId::Su2, 0.5).is_err());
    }

    #[test]
    fn torus_weights_from_direct_evaluation() {
        let w1 = DualIndex::torus(&[1]).unwrap().weight();
        let w2 = DualIndex::torus(&[2]).unwrap().weight();
        assert_abs_diff_eq!(w1, (1.0 + 4.0 * PI * PI).sqrt());
        assert!(w1 <= 7.0 && 7.0 < w2);
        assert_abs_diff_eq!(w1, 6.362, epsilon = 1e-3);
        assert_abs_diff_eq!(w2, 12.61, epsilon = 1e-2);
    }

    #[test]
    fn spectral_data_examples() {
        let sd = spectral_data(GroupId::Su2, &DualIndex::spin(1)).unwrap();
        assert_eq!(sd.dim, 2);
        assert_abs_diff_eq!(sd.eigenvalue, 0.75);
        let sd = spectral_data(GroupId::Torus(2), &DualIndex::torus(&[0, 0]).unwrap()).unwrap();
        assert_eq!((sd.dim, sd.eigenvalue, sd.weight), (1, 0.0, 1.0));
        let sd = spectral_data(GroupId::Su2, &DualIndex::spin(2)).unwrap();
        assert_eq!(sd.dim, 3);
        assert_abs_diff_eq!(sd.weight, 1.7320508, epsilon = 1e-7);
        assert!(spectral_data(GroupId::Su2, &DualIndex::torus(&[1]).unwrap()).is_err());
        assert!(spectral_data(GroupId::Torus(2), &DualIndex::torus(&[1]).unwrap()).is_err());
    }

    #[test]
    fn representation_examples() {
        let x = GroupPoint::torus(&[1.0 / 6.0]).unwrap();
        let m = representation_matrix(GroupId::Torus(1), &DualIndex::torus(&[3]).unwrap(), &x).unwrap();
        assert!((m[(0, 0)] - Complex64::new(-1.0, 0.0)).norm() < 1e-14);

        let q = GroupPoint::su2(0.2, 0.4, -0.1, 0.7).unwrap();
        let m = representation_matrix(GroupId::Su2, &DualIndex::spin(0), &q).unwrap();
        assert!((m[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let e = identity(GroupId::Su2);
        let m = representation_matrix(GroupId::Su2, &DualIndex::spin(1), &e).unwrap();
        assert!((m - CMatrix::identity(2, 2)).norm() < 1e-15);

        assert!(representation_matrix(GroupId::Su2, &DualIndex::spin(1), &x).is_err());
    }

    #[test]
    fn spin_half_matrix_is_the_point_itself() {
        let q = GroupPoint::su2(0.3, -0.5, 0.6, 0.2).unwrap();
        let m = representation_matrix(GroupId::Su2, &DualIndex::spin(1), &q).unwrap();
        let x = q.su2_matrix().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[(i, j)] - x[i][j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn su2_homomorphism_spot_check() {
        let x = GroupPoint::su2(0.1, 0.2, -0.9, 0.3).unwrap();
        let y = GroupPoint::su2(-0.6, 0.3, 0.2, 0.5).unwrap();
        let xy = compose(&x, &y).unwrap();
        for two_l in 0..8 {
            let xi = DualIndex::spin(two_l);
            let a = representation_matrix(GroupId::Su2, &xi, &x).unwrap();
            let b = representation_matrix(GroupId::Su2, &xi, &y).unwrap();
            let c = representation_matrix(GroupId::Su2, &xi, &xy).unwrap();
            assert!((a * b - c).norm() < 1e-12, "two_l = {two_l}");
        }
    }
}
