//! Wigner small-d functions `d^j_{m'm}(beta)` for integer and half-integer
//! `j`, generated by the three-term recurrence in `cos beta`.
//!
//! All spins are stored doubled (`two_j = 2j`). Matrix rows and columns run
//! over `m = j, j - 1, ..., -j`, so that the spin-1/2 matrix is the rotation
//! `[[cos(b/2), -sin(b/2)], [sin(b/2), cos(b/2)]]`.

use crate::numeric::log_factorials;

/// `d^j(beta)` for every `two_j <= two_j_max`, each stored as a dense
/// `(two_j + 1) x (two_j + 1)` row-major block.
#[derive(Debug, Clone)]
pub struct WignerTable {
    two_j_max: u32,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl WignerTable {
    pub fn new(two_j_max: u32, beta: f64) -> Self {
        let mut offsets = Vec::with_capacity(two_j_max as usize + 2);
        let mut total = 0usize;
        for tj in 0..=two_j_max {
            offsets.push(total);
            let d = tj as usize + 1;
            total += d * d;
        }
        offsets.push(total);
        let mut data = vec![0.0; total];

        let x = beta.cos();
        let (c, s) = ((0.5 * beta).cos(), (0.5 * beta).sin());
        let lf = log_factorials(two_j_max as usize + 2);

        let tj_max = two_j_max as i64;
        for tm1 in -tj_max..=tj_max {
            for tm2 in -tj_max..=tj_max {
                if (tm1 - tm2) % 2 != 0 {
                    continue;
                }
                let tj0 = tm1.abs().max(tm2.abs());
                let m1 = tm1 as f64 / 2.0;
                let m2 = tm2 as f64 / 2.0;
                let mut prev = 0.0;
                let mut cur = wigner_sum(tj0, tm1, tm2, c, s, &lf);
                let mut tj = tj0;
                loop {
                    let d = tj as usize + 1;
                    let row = ((tj - tm1) / 2) as usize;
                    let col = ((tj - tm2) / 2) as usize;
                    data[offsets[tj as usize] + row * d + col] = cur;
                    if tj + 2 > tj_max {
                        break;
                    }
                    let next = if tj == 0 {
                        // j = 0 -> 1 only happens for m' = m = 0.
                        x
                    } else {
                        let j = tj as f64 / 2.0;
                        let j1 = j + 1.0;
                        let a = ((j1 * j1 - m1 * m1) * (j1 * j1 - m2 * m2)).sqrt();
                        let b = ((j * j - m1 * m1) * (j * j - m2 * m2)).max(0.0).sqrt();
                        ((2.0 * j + 1.0) * (j * j1 * x - m1 * m2) * cur - j1 * b * prev) / (j * a)
                    };
                    prev = cur;
                    cur = next;
                    tj += 2;
                }
            }
        }
        WignerTable {
            two_j_max,
            offsets,
            data,
        }
    }

    pub fn two_j_max(&self) -> u32 {
        self.two_j_max
    }

    /// Block for spin `two_j / 2`, row-major, rows indexed by `m'`.
    pub fn block(&self, two_j: u32) -> &[f64] {
        let t = two_j as usize;
        &self.data[self.offsets[t]..self.offsets[t + 1]]
    }

    pub fn get(&self, two_j: u32, row: usize, col: usize) -> f64 {
        let d = two_j as usize + 1;
        self.block(two_j)[row * d + col]
    }
}

/// Wigner's explicit sum for `d^j_{m'm}` with `c = cos(b/2)`, `s = sin(b/2)`.
/// Exact but cancellation-prone for large `j`; the recurrence seeds use it
/// only at `j = max(|m'|, |m|)`, where the sum has a single term.
pub fn wigner_sum(tj: i64, tm1: i64, tm2: i64, c: f64, s: f64, lf: &[f64]) -> f64 {
    // Integer quantities j ± m', j ± m, m' - m.
    let jpm1 = ((tj + tm1) / 2) as usize;
    let jmm1 = ((tj - tm1) / 2) as usize;
    let jpm2 = ((tj + tm2) / 2) as usize;
    let jmm2 = ((tj - tm2) / 2) as usize;
    let dm = (tm1 - tm2) / 2;
    let prefactor = 0.5 * (lf[jpm1] + lf[jmm1] + lf[jpm2] + lf[jmm2]);
    let s_lo = 0i64.max(-dm);
    let s_hi = (jpm2 as i64).min(jmm1 as i64);
    let mut acc = 0.0;
    for k in s_lo..=s_hi {
        let denom = lf[(jpm2 as i64 - k) as usize]
            + lf[k as usize]
            + lf[(dm + k) as usize]
            + lf[(jmm1 as i64 - k) as usize];
        let sign = if (dm + k).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let pc = (tj - dm - 2 * k) as i32;
        let ps = (dm + 2 * k) as i32;
        acc += sign * (prefactor - denom).exp() * c.powi(pc) * s.powi(ps);
    }
    acc
}
