//! Finite representatives of square-summable sequences.
//!
//! A game with finitely many players only ever touches the span of the
//! initial displacements and the evader velocities it actually uses, and every
//! strategy formula depends on vectors through inner products. Working in
//! `R^n` with a user-declared `n` is therefore exact for the dynamics, not an
//! approximation: the coordinates beyond the effective span stay zero.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for geometric equality checks.
pub const GEOMETRIC_TOL: f64 = 1e-9;
/// Absolute tolerance for algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Configurable comparison tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub geometric: f64,
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            geometric: GEOMETRIC_TOL,
            identity: IDENTITY_TOL,
        }
    }
}

/// A point or direction with a fixed ambient dimension.
///
/// Serializes as a bare JSON array of coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vec2l {
    coords: Vec<f64>,
}

impl Vec2l {
    /// Builds a vector, rejecting empty or non-finite coordinate lists.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Usage("vector must have dimension >= 1".into()));
        }
        if let Some(k) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Usage(format!(
                "coordinate {k} is not finite ({})",
                coords[k]
            )));
        }
        Ok(Self { coords })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self {
            coords: vec![0.0; dim],
        }
    }

    /// The `k`-th standard basis vector.
    pub fn axis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.coords[k] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// `self + s * other`, the workhorse of the integrator.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for Vec2l {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Self::new(coords)
    }
}

impl From<Vec2l> for Vec<f64> {
    fn from(v: Vec2l) -> Self {
        v.coords
    }
}

impl Index<usize> for Vec2l {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.coords[k]
    }
}

impl Add for &Vec2l {
    type Output = Vec2l;

    fn add(self, rhs: &Vec2l) -> Vec2l {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &Vec2l {
    type Output = Vec2l;

    fn sub(self, rhs: &Vec2l) -> Vec2l {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &Vec2l {
    type Output = Vec2l;

    fn mul(self, s: f64) -> Vec2l {
        self.scale(s)
    }
}

impl Neg for &Vec2l {
    type Output = Vec2l;

    fn neg(self) -> Vec2l {
        self.scale(-1.0)
    }
}

/// Inner product; errors on dimension mismatch.
pub fn inner(a: &Vec2l, b: &Vec2l) -> Result<f64> {
    a.check_dim(b)?;
    Ok(dot(a, b))
}

/// Unchecked inner product for callers that already validated dimensions.
pub(crate) fn dot(a: &Vec2l, b: &Vec2l) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.coords.iter().zip(&b.coords).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &Vec2l) -> f64 {
    dot(a, a).sqrt()
}

/// `a / |a|`; the zero vector has no direction.
pub fn unitize(a: &Vec2l) -> Result<Vec2l> {
    let n = norm(a);
    if n == 0.0 {
        return Err(Error::Degenerate("cannot normalize the zero vector".into()));
    }
    Ok(a.scale(1.0 / n))
}

/// Orthonormal basis of a span, with a handle on its orthogonal complement.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanBasis {
    pub dim: usize,
    pub basis: Vec<Vec2l>,
}

impl SpanBasis {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// A unit vector orthogonal to the whole span, when one exists.
    ///
    /// Each standard axis is orthogonalized against the basis and the one with
    /// the largest residual wins (lowest axis index on ties).
    pub fn complement_direction(&self) -> Option<Vec2l> {
        if self.rank() >= self.dim {
            return None;
        }
        let mut best: Option<(f64, Vec2l)> = None;
        for k in 0..self.dim {
            let mut r = Vec2l::axis(self.dim, k);
            for _ in 0..2 {
                for b in &self.basis {
                    let c = dot(&r, b);
                    r = r.axpy(-c, b);
                }
            }
            let n = norm(&r);
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, r));
            }
        }
        best.and_then(|(n, r)| (n > 1e-8).then(|| r.scale(1.0 / n)))
    }

    /// Coefficients of `v` in the basis.
    pub fn coefficients(&self, v: &Vec2l) -> Vec<f64> {
        self.basis.iter().map(|b| dot(v, b)).collect()
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// A candidate is dropped when its residual falls below `1e-10` times the
/// largest input norm (or `1e-10` absolutely for tiny inputs).
pub fn orthonormal_basis_and_rank(vs: &[Vec2l]) -> Result<SpanBasis> {
    let dim = match vs.first() {
        Some(v) => v.dim(),
        None => return Err(Error::Usage("need at least one vector".into())),
    };
    for v in vs {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
    }
    let scale = vs.iter().map(norm).fold(1.0, f64::max);
    let cutoff = 1e-10 * scale;
    let mut basis: Vec<Vec2l> = Vec::new();
    for v in vs {
        if basis.len() == dim {
            break;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&r, b);
                r = r.axpy(-c, b);
            }
        }
        let n = norm(&r);
        if n > cutoff {
            basis.push(r.scale(1.0 / n));
        }
    }
    Ok(SpanBasis { dim, basis })
}
