//! Truncated free tensor algebra over `R^d`.
//!
//! Level `k` is stored densely as `d^k` coefficients in row-major word order,
//! so the word `(i1, .., ik)` (zero-based letters) sits at
//! `i1 * d^(k-1) + .. + ik`.

use serde::{Deserialize, Serialize};

use crate::error::SigError;

/// Absolute tolerance used when checking that a tensor is group-like.
pub const GROUP_LIKE_TOL: f64 = 1e-12;

/// An element of `T^{(M)}(R^d)`, the tensor algebra truncated above order `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedTensor {
    dim: usize,
    order: usize,
    levels: Vec<Vec<f64>>,
}

impl TruncatedTensor {
    /// The zero tensor (all levels zero, including the scalar part).
    pub fn zero(dim: usize, order: usize) -> Self {
        assert!(dim >= 1, "tensor dimension must be positive");
        assert!(order >= 1, "truncation order must be positive");
        let levels = (0..=order).map(|k| vec![0.0; dim.pow(k as u32)]).collect();
        Self { dim, order, levels }
    }

    /// The unit `(1, 0, .., 0)`.
    pub fn identity(dim: usize, order: usize) -> Self {
        let mut t = Self::zero(dim, order);
        t.levels[0][0] = 1.0;
        t
    }

    /// A tensor with only a level-1 part.
    pub fn from_level1(v: &[f64], order: usize) -> Self {
        let mut t = Self::zero(v.len(), order);
        t.levels[1].copy_from_slice(v);
        t
    }

    /// Builds a tensor from explicit levels, checking their shapes.
    pub fn from_levels(dim: usize, levels: Vec<Vec<f64>>) -> Result<Self, SigError> {
        if dim == 0 || levels.len() < 2 {
            return Err(SigError::Contract(format!(
                "need dim >= 1 and at least levels 0..=1, got dim {dim} with {} levels",
                levels.len()
            )));
        }
        for (k, level) in levels.iter().enumerate() {
            let want = dim.pow(k as u32);
            if level.len() != want {
                return Err(SigError::Contract(format!(
                    "level {k} has {} coefficients, expected {want}",
                    level.len()
                )));
            }
        }
        let order = levels.len() - 1;
        Ok(Self { dim, order, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.levels[k]
    }

    pub fn scalar(&self) -> f64 {
        self.levels[0][0]
    }

    /// Total number of stored coefficients, `(d^(M+1) - 1) / (d - 1)` for `d > 1`.
    pub fn coefficient_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Coefficient of a word given as zero-based letters. The empty word is the scalar part.
    pub fn coeff(&self, word: &[usize]) -> f64 {
        self.levels[word.len()][self.word_index(word)]
    }

    /// Flat index of `word` inside its level.
    pub fn word_index(&self, word: &[usize]) -> usize {
        word.iter().fold(0, |acc, &letter| {
            debug_assert!(letter < self.dim);
            acc * self.dim + letter
        })
    }

    /// All coefficients, level by level.
    pub fn flatten(&self) -> Vec<f64> {
        self.levels.iter().flatten().copied().collect()
    }

    fn check_compatible(&self, other: &Self) -> Result<(), SigError> {
        if self.dim != other.dim || self.order != other.order {
            return Err(SigError::Contract(format!(
                "tensor shape mismatch: (d={}, M={}) vs (d={}, M={})",
                self.dim, self.order, other.dim, other.order
            )));
        }
        Ok(())
    }

    /// Truncated tensor product.
    pub fn mul(&self, other: &Self) -> Result<Self, SigError> {
        self.check_compatible(other)?;
        let mut out = Self::zero(self.dim, self.order);
        for k in 0..=self.order {
            let dst = &mut out.levels[k];
            for i in 0..=k {
                let j = k - i;
                let a = &self.levels[i];
                let b = &other.levels[j];
                let stride = b.len();
                for (ia, &av) in a.iter().enumerate() {
                    if av == 0.0 {
                        continue;
                    }
                    let row = &mut dst[ia * stride..(ia + 1) * stride];
                    for (d, &bv) in row.iter_mut().zip(b) {
                        *d += av * bv;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self, SigError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.add_scaled_assign(other, 1.0);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SigError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.add_scaled_assign(other, -1.0);
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.levels.iter_mut().flatten().for_each(|c| *c *= s);
        out
    }

    fn add_scaled_assign(&mut self, other: &Self, s: f64) {
        for (dst, src) in self.levels.iter_mut().zip(&other.levels) {
            for (d, v) in dst.iter_mut().zip(src) {
                *d += s * v;
            }
        }
    }

    /// Exponential of a tensor with zero scalar part. The series stops at
    /// order `M` because higher powers vanish under truncation.
    pub fn exp(&self) -> Result<Self, SigError> {
        if self.scalar().abs() > GROUP_LIKE_TOL {
            return Err(SigError::Contract(format!(
                "exp expects a zero scalar part, got {}",
                self.scalar()
            )));
        }
        let mut result = Self::identity(self.dim, self.order);
        let mut power = Self::identity(self.dim, self.order);
        let mut factorial = 1.0;
        for n in 1..=self.order {
            power = power.mul(self)?;
            factorial *= n as f64;
            result.add_scaled_assign(&power, 1.0 / factorial);
        }
        Ok(result)
    }

    /// Logarithm of a group-like tensor:
    /// `log(1 + u) = u - u^2/2 + u^3/3 - ..` with `u = self - 1`.
    pub fn log(&self) -> Result<Self, SigError> {
        if (self.scalar() - 1.0).abs() > GROUP_LIKE_TOL {
            return Err(SigError::NotGroupLike(self.scalar()));
        }
        let mut u = self.clone();
        u.levels[0][0] = 0.0;
        let mut result = Self::zero(self.dim, self.order);
        let mut power = Self::identity(self.dim, self.order);
        for n in 1..=self.order {
            power = power.mul(&u)?;
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            result.add_scaled_assign(&power, sign / n as f64);
        }
        Ok(result)
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .zip(other.levels.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Signature of a single straight segment with increment `delta`:
/// the level-`k` coefficient of word `(i1..ik)` is `prod(delta[ij]) / k!`.
pub fn segment_signature(delta: &[f64], order: usize) -> TruncatedTensor {
    let dim = delta.len();
    let mut out = TruncatedTensor::identity(dim, order);
    for k in 1..=order {
        let (prev, cur) = out.levels.split_at_mut(k);
        let prev = &prev[k - 1];
        let inv_k = 1.0 / k as f64;
        // level_k = level_{k-1} (x) delta / k
        for (ip, &pv) in prev.iter().enumerate() {
            for (j, &dv) in delta.iter().enumerate() {
                cur[0][ip * dim + j] = pv * dv * inv_k;
            }
        }
    }
    out
}
