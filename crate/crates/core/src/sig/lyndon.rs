//! Lyndon words and the log-signature coordinates read off at them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::tensor::TruncatedTensor;

/// A word over the zero-based alphabet `{0, .., d-1}`.
pub type Word = Vec<usize>;

/// Lyndon words of length `1..=max_len` over `d` letters, ordered by length
/// and then lexicographically.
///
/// Uses Duval's generation algorithm, which emits Lyndon words in
/// lexicographic order.
pub fn lyndon_words(d: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    if d == 0 || max_len == 0 {
        return out;
    }
    let mut w: Vec<usize> = vec![0];
    loop {
        out.push(w.clone());
        // Repeat w to fill max_len, then strip trailing maximal letters.
        let n = w.len();
        while w.len() < max_len {
            w.push(w[w.len() - n]);
        }
        while let Some(&last) = w.last() {
            if last == d - 1 {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            Some(last) => *last += 1,
            None => break,
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Number of Lyndon words of length exactly `n` over `d` letters (Witt's formula).
pub fn witt_count(d: usize, n: usize) -> usize {
    let sum: i64 = (1..=n)
        .filter(|k| n % k == 0)
        .map(|k| mobius(k) * (d as i64).pow((n / k) as u32))
        .sum();
    (sum / n as i64) as usize
}

/// Dimension of the truncated free Lie algebra: Lyndon words of length `<= m`.
pub fn logsig_dim(d: usize, m: usize) -> usize {
    (1..=m).map(|n| witt_count(d, n)).sum()
}

fn mobius(mut n: usize) -> i64 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Cached Lyndon basis for `(d, M)`.
pub fn lyndon_basis(d: usize, m: usize) -> Arc<Vec<Word>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<Word>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("lyndon cache poisoned");
    guard
        .entry((d, m))
        .or_insert_with(|| Arc::new(lyndon_words(d, m)))
        .clone()
}

/// Log-signature coordinates in the Lyndon basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogSigVector {
    pub dim: usize,
    pub order: usize,
    pub coeffs: Vec<f64>,
    #[serde(skip)]
    basis: Option<Arc<Vec<Word>>>,
}

impl PartialEq for LogSigVector {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl LogSigVector {
    pub fn new(dim: usize, order: usize, coeffs: Vec<f64>) -> Self {
        Self {
            dim,
            order,
            coeffs,
            basis: None,
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The Lyndon words the coefficients refer to, in the same order.
    pub fn basis_words(&self) -> Arc<Vec<Word>> {
        self.basis
            .clone()
            .unwrap_or_else(|| lyndon_basis(self.dim, self.order))
    }
}

/// Reads the coefficients of a Lie element at its Lyndon-word positions.
pub fn project_lyndon(logtensor: &TruncatedTensor) -> LogSigVector {
    let basis = lyndon_basis(logtensor.dim(), logtensor.order());
    let coeffs = basis.iter().map(|w| logtensor.coeff(w)).collect();
    LogSigVector {
        dim: logtensor.dim(),
        order: logtensor.order(),
        coeffs,
        basis: Some(basis),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_alphabets() {
        assert_eq!(
            lyndon_words(2, 3),
            vec![vec![0], vec![1], vec![0, 1], vec![0, 0, 1], vec![0, 1, 1]]
        );
        assert_eq!(lyndon_words(5, 3).len(), 55);
        assert_eq!(lyndon_words(1, 4), vec![vec![0]]);
    }

    #[test]
    fn witt_values() {
        assert_eq!(witt_count(5, 1), 5);
        assert_eq!(witt_count(5, 2), 10);
        assert_eq!(witt_count(5, 3), 40);
        assert_eq!(witt_count(2, 4), 3);
        assert_eq!(logsig_dim(5, 3), 55);
        assert_eq!(logsig_dim(5, 4), 205);
    }

    #[test]
    fn mobius_values() {
        let got: Vec<i64> = (1..=10).map(mobius).collect();
        assert_eq!(got, vec![1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
    }

    #[test]
    fn zero_tensor_projects_to_zero_vector() {
        let v = project_lyndon(&TruncatedTensor::zero(5, 3));
        assert_eq!(v.len(), 55);
        assert!(v.coeffs.iter().all(|&c| c == 0.0));
        assert_eq!(v.basis_words().len(), 55);
    }
}
