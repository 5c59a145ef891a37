//! Even entire functions of `lambda` given by their zeros.
//!
//! A function with zeros `w_k = lambda_k^2` is evaluated as
//!
//! ```text
//! f(z) = B(z - c) * prod_{k <= K} (w_k - z) / (s_k^2 - (z - c))
//! ```
//!
//! where `B` is `sin(lambda L)/lambda` or `cos(lambda L)` in `z = lambda^2`,
//! `s_k` its zeros, and `c` a tail shift. Every factor tends to one, so the
//! truncated product converges; with `c` equal to the asymptotic offset of the
//! zeros (`w_k - s_k^2 -> c`) the neglected tail is `O(sum_{k>K} 1/k^4)`.
//! `c = 0` gives the plain ratio to the unperturbed function.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::{
    cosine_kernel, cosine_kernel_dz, cot_minus_inv, sinc, sine_kernel, sine_kernel_dz,
};

/// Relative distance in `z` at which an argument counts as sitting on a zero or pole.
const SINGULAR_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// `sin(lambda a)/lambda` on the full interval.
    SineFull,
    /// `sin(lambda a/2)/lambda` on a half interval.
    SineHalf,
    /// `cos(lambda a/2)` on a half interval.
    CosHalf,
}

impl Baseline {
    fn is_cos(self) -> bool {
        matches!(self, Baseline::CosHalf)
    }
}

/// One substituted zero: `zeros[index - 1]` was `original`, now `replacement`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replacement {
    pub index: usize,
    pub original: f64,
    pub replacement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntireProduct {
    baseline: Baseline,
    length: f64,
    zeros: Vec<f64>,
    tail_shift: f64,
    replaced: Vec<Replacement>,
}

impl EntireProduct {
    /// `length` is the interval the baseline lives on (`a` or `a/2`).
    pub fn new(baseline: Baseline, length: f64, zeros: Vec<f64>, tail_shift: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidInput(format!(
                "product length must be positive, got {length}"
            )));
        }
        if zeros.iter().any(|z| !z.is_finite()) || !tail_shift.is_finite() {
            return Err(Error::InvalidInput("non-finite product data".into()));
        }
        Ok(Self {
            baseline,
            length,
            zeros,
            tail_shift,
            replaced: Vec::new(),
        })
    }

    /// The unperturbed function itself: zeros at the baseline slots, no shift.
    pub fn baseline_only(baseline: Baseline, length: f64, order: usize) -> Self {
        let mut p = Self {
            baseline,
            length,
            zeros: Vec::new(),
            tail_shift: 0.0,
            replaced: Vec::new(),
        };
        p.zeros = (1..=order).map(|k| p.slot_square(k)).collect();
        p
    }

    /// Replaces zeros (1-based index → new square), as in the mixed products.
    pub fn with_replacements(
        mut self,
        replacements: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        for (index, replacement) in replacements {
            if index == 0 || index > self.zeros.len() {
                return Err(Error::IndexOutOfTruncation {
                    index,
                    order: self.zeros.len(),
                });
            }
            let original = self.zeros[index - 1];
            self.zeros[index - 1] = replacement;
            self.replaced.push(Replacement {
                index,
                original,
                replacement,
            });
        }
        Ok(self)
    }

    pub fn baseline(&self) -> Baseline {
        self.baseline
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn order(&self) -> usize {
        self.zeros.len()
    }

    pub fn tail_shift(&self) -> f64 {
        self.tail_shift
    }

    pub fn replaced(&self) -> &[Replacement] {
        &self.replaced
    }

    /// `lambda` of the k-th baseline zero.
    pub fn slot(&self, k: usize) -> f64 {
        let k = k as f64;
        if self.baseline.is_cos() {
            PI * (k - 0.5) / self.length
        } else {
            PI * k / self.length
        }
    }

    pub fn slot_square(&self, k: usize) -> f64 {
        let s = self.slot(k);
        s * s
    }

    fn base(&self, zs: f64) -> f64 {
        if self.baseline.is_cos() {
            cosine_kernel(zs, self.length)
        } else {
            sine_kernel(zs, self.length)
        }
    }

    fn base_log_dz(&self, zs: f64) -> f64 {
        if self.baseline.is_cos() {
            cosine_kernel_dz(zs, self.length) / cosine_kernel(zs, self.length)
        } else {
            sine_kernel_dz(zs, self.length) / sine_kernel(zs, self.length)
        }
    }

    /// Index of the baseline slot nearest to `sqrt(zs)` when it is close enough
    /// that the reduced form `B/(s_j^2 - zs)` must be used.
    fn near_slot(&self, zs: f64) -> Option<usize> {
        if zs <= 0.0 {
            return None;
        }
        let u = zs.sqrt();
        let t = u * self.length / PI + if self.baseline.is_cos() { 0.5 } else { 0.0 };
        let j = t.round();
        if j < 1.0 {
            return None;
        }
        let j = j as usize;
        ((u - self.slot(j)).abs() * self.length < 0.5).then_some(j)
    }

    /// `B(zs) / (s_j^2 - zs)` without cancellation, `sqrt(zs)` near `s_j`.
    fn reduced(&self, zs: f64, j: usize) -> f64 {
        let u = zs.sqrt();
        let uj = self.slot(j);
        let d = (u - uj) * self.length;
        let sign = if j.is_multiple_of(2) { -1.0 } else { 1.0 };
        if self.baseline.is_cos() {
            sign * self.length * sinc(d) / (uj + u)
        } else {
            sign * self.length * sinc(d) / (u * (uj + u))
        }
    }

    fn reduced_log_dz(&self, zs: f64, j: usize) -> f64 {
        let u = zs.sqrt();
        let uj = self.slot(j);
        let d = (u - uj) * self.length;
        let mut g = self.length * cot_minus_inv(d) - 1.0 / (uj + u);
        if !self.baseline.is_cos() {
            g -= 1.0 / u;
        }
        g / (2.0 * u)
    }

    /// Rejects arguments on a baseline zero beyond the truncation.
    fn check_tail(&self, zs: f64) -> Result<()> {
        if zs <= 0.0 {
            return Ok(());
        }
        let u = zs.sqrt();
        let t = u * self.length / PI + if self.baseline.is_cos() { 0.5 } else { 0.0 };
        let j = t.round();
        if j >= 1.0 && (j as usize) > self.order() {
            let s2 = self.slot_square(j as usize);
            if (zs - s2).abs() <= SINGULAR_TOL * s2.max(1.0) {
                return Err(Error::PoleAtBaselineZero {
                    z: zs + self.tail_shift,
                });
            }
        }
        Ok(())
    }

    /// Product with the `skip`-th numerator factor left out.
    fn value_skipping(&self, z: f64, skip: Option<usize>) -> f64 {
        let zs = z - self.tail_shift;
        let near = self.near_slot(zs).filter(|&j| j <= self.order());
        let mut acc = match near {
            Some(j) => self.reduced(zs, j),
            None => self.base(zs),
        };
        for (i, &w) in self.zeros.iter().enumerate() {
            let k = i + 1;
            let num = if Some(k) == skip { 1.0 } else { w - z };
            if Some(k) == near {
                acc *= num;
            } else {
                acc *= num / (self.slot_square(k) - zs);
            }
        }
        acc
    }

    /// `f(z)`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        self.check_tail(z - self.tail_shift)?;
        Ok(self.value_skipping(z, None))
    }

    /// `f(z)` without the tail check; used in inner loops.
    pub fn value(&self, z: f64) -> f64 {
        self.value_skipping(z, None)
    }

    /// `f(z) / (w_k - z)`, finite at `z = w_k`.
    pub fn eval_without_zero(&self, z: f64, k: usize) -> Result<f64> {
        if k == 0 || k > self.order() {
            return Err(Error::IndexOutOfTruncation {
                index: k,
                order: self.order(),
            });
        }
        Ok(self.value_skipping(z, Some(k)))
    }

    /// `d/dz log f`.
    pub fn eval_log_derivative_z(&self, z: f64) -> Result<f64> {
        if let Some(&w) = self
            .zeros
            .iter()
            .find(|&&w| (w - z).abs() <= SINGULAR_TOL * w.abs().max(1.0))
        {
            return Err(Error::AtZero { z: w });
        }
        let zs = z - self.tail_shift;
        self.check_tail(zs)?;
        let near = self.near_slot(zs).filter(|&j| j <= self.order());
        let mut g = match near {
            Some(j) => self.reduced_log_dz(zs, j),
            None => self.base_log_dz(zs),
        };
        for (i, &w) in self.zeros.iter().enumerate() {
            g -= 1.0 / (w - z);
            if Some(i + 1) != near {
                g += 1.0 / (self.slot_square(i + 1) - zs);
            }
        }
        Ok(g)
    }

    /// `d/dlambda log f` at `lambda = sqrt(z)`, `z >= 0`.
    pub fn eval_log_derivative(&self, z: f64) -> Result<f64> {
        if z < 0.0 {
            return Err(Error::InvalidInput(format!(
                "lambda-derivative needs z >= 0, got {z}"
            )));
        }
        if z == 0.0 {
            return Ok(0.0);
        }
        Ok(2.0 * z.sqrt() * self.eval_log_derivative_z(z)?)
    }

    /// `f'(w_k)` in `z`.
    pub fn derivative_z_at_zero(&self, k: usize) -> Result<f64> {
        let w = *self
            .zeros
            .get(k.wrapping_sub(1))
            .ok_or(Error::IndexOutOfTruncation {
                index: k,
                order: self.order(),
            })?;
        Ok(-self.eval_without_zero(w, k)?)
    }

    /// `d/dlambda [lambda f(lambda)]` at `lambda = sqrt(w_k)`; equals `2 w_k f'(w_k)`.
    pub fn derivative_at_zero(&self, k: usize) -> Result<f64> {
        let d = self.derivative_z_at_zero(k)?;
        Ok(2.0 * self.zeros[k - 1] * d)
    }

    /// CSV rows `k,zero,slot_square,factor` with each factor evaluated at `z`.
    pub fn factor_table_csv(&self, z: f64, rows: usize) -> String {
        let zs = z - self.tail_shift;
        let mut s = String::from("k,zero,slot_square,factor,replaced_original\n");
        for (i, &w) in self.zeros.iter().enumerate().take(rows) {
            let k = i + 1;
            let slot = self.slot_square(k);
            let original = self
                .replaced
                .iter()
                .find(|r| r.index == k)
                .map(|r| r.original.to_string())
                .unwrap_or_default();
            s.push_str(&format!(
                "{k},{w},{slot},{},{original}\n",
                (w - z) / (slot - zs)
            ));
        }
        s
    }
}
