//! Augmented piecewise-linear paths and their (log-)signatures.

use serde::{Deserialize, Serialize};

use super::lyndon::{project_lyndon, LogSigVector};
use super::tensor::{segment_signature, TruncatedTensor};
use crate::error::SigError;

/// Truncation order used for possession encodings.
pub const POSSESSION_SIG_ORDER: usize = 3;

/// Channel names of an augmented `(x, y, T)` possession path, in order.
pub const POSSESSION_CHANNELS: [&str; 5] = ["x", "y", "T", "idx", "vis"];

/// Where the visibility basepoint is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basepoint {
    /// Copy of the first point with the visibility channel at 0. Only the
    /// visibility channel moves on the first segment.
    #[default]
    FirstPoint,
    /// The origin in every channel. The first segment then carries the
    /// absolute starting position, so translated paths get different signatures.
    Origin,
}

/// Which augmentations produced a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationMeta {
    pub time_index: bool,
    pub visibility: Option<Basepoint>,
    pub channels: Vec<String>,
}

/// A piecewise-linear path in `R^d`, given by its vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedPath {
    points: Vec<Vec<f64>>,
    meta: AugmentationMeta,
}

impl AugmentedPath {
    /// Wraps raw vertices. A single point is padded to a constant 2-point path.
    pub fn new(mut points: Vec<Vec<f64>>, meta: AugmentationMeta) -> Result<Self, SigError> {
        let Some(first) = points.first() else {
            return Err(SigError::Contract("path needs at least one point".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(SigError::Contract("path dimension must be positive".into()));
        }
        if let Some(bad) = points.iter().position(|p| p.len() != dim) {
            return Err(SigError::Contract(format!(
                "point {bad} has dimension {}, expected {dim}",
                points[bad].len()
            )));
        }
        if points.len() == 1 {
            points.push(points[0].clone());
        }
        Ok(Self { points, meta })
    }

    /// A path without augmentation metadata.
    pub fn plain(points: Vec<Vec<f64>>) -> Result<Self, SigError> {
        let dim = points.first().map_or(0, Vec::len);
        let channels = (1..=dim).map(|i| format!("c{i}")).collect();
        Self::new(
            points,
            AugmentationMeta {
                time_index: false,
                visibility: None,
                channels,
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn meta(&self) -> &AugmentationMeta {
        &self.meta
    }
}

/// Applies the time-index and visibility augmentations to an `(x, y, T)`
/// sequence, yielding a 5-channel path `(x, y, T, idx, vis)`.
pub fn augment(path_xyt: &[[f64; 3]]) -> Result<AugmentedPath, SigError> {
    augment_with(path_xyt, Basepoint::FirstPoint)
}

pub fn augment_with(path_xyt: &[[f64; 3]], basepoint: Basepoint) -> Result<AugmentedPath, SigError> {
    let n = path_xyt.len();
    if n == 0 {
        return Err(SigError::Contract("cannot augment an empty path".into()));
    }
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut points = Vec::with_capacity(n + 1);
    let first = path_xyt[0];
    points.push(match basepoint {
        Basepoint::FirstPoint => vec![first[0], first[1], first[2], 0.0, 0.0],
        Basepoint::Origin => vec![0.0; 5],
    });
    for (i, p) in path_xyt.iter().enumerate() {
        let idx = if n > 1 { i as f64 / denom } else { 0.0 };
        points.push(vec![p[0], p[1], p[2], idx, 1.0]);
    }
    AugmentedPath::new(
        points,
        AugmentationMeta {
            time_index: true,
            visibility: Some(basepoint),
            channels: POSSESSION_CHANNELS.iter().map(|s| s.to_string()).collect(),
        },
    )
}

/// Signature of a piecewise-linear path, chaining segment signatures with
/// Chen's identity.
pub fn path_signature(path: &AugmentedPath, order: usize) -> Result<TruncatedTensor, SigError> {
    if order == 0 {
        return Err(SigError::Contract("truncation order must be positive".into()));
    }
    let points = path.points();
    if points.len() < 2 {
        return Err(SigError::Contract("path needs at least two points".into()));
    }
    let dim = path.dim();
    let mut sig = TruncatedTensor::identity(dim, order);
    let mut delta = vec![0.0; dim];
    for w in points.windows(2) {
        for ((d, b), a) in delta.iter_mut().zip(&w[1]).zip(&w[0]) {
            *d = b - a;
        }
        if delta.iter().all(|&c| c == 0.0) {
            continue;
        }
        sig = sig.mul(&segment_signature(&delta, order))?;
    }
    Ok(sig)
}

/// Lyndon-basis log-signature of any path.
pub fn path_logsig(path: &AugmentedPath, order: usize) -> Result<LogSigVector, SigError> {
    let sig = path_signature(path, order)?;
    Ok(project_lyndon(&sig.log()?))
}

/// Order-3 log-signature of an `(x, y, T)` possession after augmentation.
/// Always 55 coefficients.
pub fn logsig_of_possession(path_xyt: &[[f64; 3]]) -> Result<LogSigVector, SigError> {
    logsig_of_possession_with(path_xyt, POSSESSION_SIG_ORDER)
}

pub fn logsig_of_possession_with(path_xyt: &[[f64; 3]], order: usize) -> Result<LogSigVector, SigError> {
    path_logsig(&augment(path_xyt)?, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::lyndon::logsig_dim;

    #[test]
    fn augment_single_point() {
        let p = augment(&[[0.5, 0.5, 0.2]]).unwrap();
        assert_eq!(
            p.points(),
            &[vec![0.5, 0.5, 0.2, 0.0, 0.0], vec![0.5, 0.5, 0.2, 0.0, 1.0]]
        );
    }

    #[test]
    fn augment_three_points() {
        let p = augment(&[[0.1, 0.2, 0.0], [0.3, 0.2, 0.1], [0.6, 0.4, 0.2]]).unwrap();
        assert_eq!(p.points().len(), 4);
        let vis: Vec<f64> = p.points().iter().map(|q| q[4]).collect();
        let idx: Vec<f64> = p.points().iter().map(|q| q[3]).collect();
        assert_eq!(vis, vec![0.0, 1.0, 1.0, 1.0]);
        assert_eq!(idx, vec![0.0, 0.0, 0.5, 1.0]);
        assert_eq!(p.meta().channels, vec!["x", "y", "T", "idx", "vis"]);
    }

    #[test]
    fn augment_rejects_empty() {
        assert!(matches!(augment(&[]), Err(SigError::Contract(_))));
    }

    #[test]
    fn straight_line_equals_segment() {
        let p = AugmentedPath::plain(vec![vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap();
        let s = path_signature(&p, 2).unwrap();
        assert_eq!(s, segment_signature(&[1.0, 2.0], 2));
    }

    #[test]
    fn single_point_path_is_padded() {
        let p = AugmentedPath::plain(vec![vec![0.3, 0.1]]).unwrap();
        assert_eq!(p.points().len(), 2);
        assert_eq!(path_signature(&p, 3).unwrap(), TruncatedTensor::identity(2, 3));
    }

    #[test]
    fn l_path_oracle() {
        let p = AugmentedPath::plain(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let s = path_signature(&p, 2).unwrap();
        assert_eq!(s.coeff(&[0]), 1.0);
        assert_eq!(s.coeff(&[1]), 1.0);
        assert_eq!(s.coeff(&[0, 1]), 1.0);
        assert_eq!(s.coeff(&[1, 0]), 0.0);
        assert_eq!(s.coeff(&[0, 0]), 0.5);
        assert_eq!(s.coeff(&[1, 1]), 0.5);

        let l = s.log().unwrap();
        assert_eq!(l.coeff(&[0, 1]), 0.5);
        assert_eq!(l.coeff(&[1, 0]), -0.5);
        assert_eq!(l.coeff(&[0, 0]), 0.0);
        assert_eq!(l.coeff(&[1, 1]), 0.0);
    }

    #[test]
    fn constant_possession_only_moves_augmented_channels() {
        let v = logsig_of_possession(&[[0.4, 0.6, 0.3]; 6]).unwrap();
        assert_eq!(v.len(), 55);
        assert_eq!(&v.coeffs[..3], &[0.0, 0.0, 0.0]);
        assert_eq!(v.coeffs[3], 1.0);
        assert_eq!(v.coeffs[4], 1.0);
    }

    #[test]
    fn possession_logsig_length_is_fixed() {
        for n in 1..12 {
            let path: Vec<[f64; 3]> = (0..n)
                .map(|i| [i as f64 / 12.0, 0.5 - i as f64 / 30.0, i as f64 / 100.0])
                .collect();
            let a = logsig_of_possession(&path).unwrap();
            let b = logsig_of_possession(&path).unwrap();
            assert_eq!(a.len(), logsig_dim(5, 3));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn basepoint_choice_and_translation() {
        let path = [[0.1, 0.2, 0.0], [0.4, 0.3, 0.05], [0.5, 0.7, 0.1]];
        let shifted: Vec<[f64; 3]> = path.iter().map(|p| [p[0] + 0.2, p[1] - 0.1, p[2]]).collect();

        // First-point basepoint: only increments enter, so translates coincide.
        let a = path_signature(&augment(&path).unwrap(), 3).unwrap();
        let b = path_signature(&augment(&shifted).unwrap(), 3).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);

        // Origin basepoint encodes the start position.
        let a = path_signature(&augment_with(&path, Basepoint::Origin).unwrap(), 3).unwrap();
        let b = path_signature(&augment_with(&shifted, Basepoint::Origin).unwrap(), 3).unwrap();
        assert!(a.max_abs_diff(&b) > 1e-3);
    }
}
