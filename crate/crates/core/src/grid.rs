//! Angle grids on the unit sphere of `R^1`, `R^2` and `R^3`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A deterministic covering of the unit sphere.
///
/// Every unit vector lies within `covering_radius` (Euclidean) of some grid
/// point, which is what Lipschitz certificates built on the grid rely on.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    dim: usize,
    step: f64,
    covering_radius: f64,
}

impl SphereGrid {
    pub fn new(dim: usize, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Usage(format!(
                "grid step must be positive, got {step}"
            )));
        }
        let covering_radius = match dim {
            1 => 0.0,
            // N points at spacing s = 2pi/N <= step: arc to the nearest is <= s/2.
            2 => PI / (2.0 * PI / step).ceil(),
            // Half a ring spacing in latitude plus half an arc along the ring.
            3 => step,
            _ => {
                return Err(Error::Unsupported(format!(
                    "sphere grids are only available for dim <= 3 (got {dim})"
                )))
            }
        };
        Ok(Self {
            dim,
            step,
            covering_radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn covering_radius(&self) -> f64 {
        self.covering_radius
    }

    /// Visits every grid point in a fixed order.
    pub fn for_each(&self, mut f: impl FnMut(&[f64])) {
        match self.dim {
            1 => {
                f(&[1.0]);
                f(&[-1.0]);
            }
            2 => {
                let n = (2.0 * PI / self.step).ceil() as usize;
                for k in 0..n {
                    let phi = 2.0 * PI * k as f64 / n as f64;
                    f(&[phi.cos(), phi.sin()]);
                }
            }
            3 => {
                let rings = (PI / self.step).ceil() as usize;
                for j in 0..=rings {
                    let theta = PI * j as f64 / rings as f64;
                    let (st, ct) = theta.sin_cos();
                    let k = ((2.0 * PI * st / self.step).ceil() as usize).max(1);
                    for l in 0..k {
                        let phi = 2.0 * PI * l as f64 / k as f64;
                        let (sp, cp) = phi.sin_cos();
                        f(&[st * cp, st * sp, ct]);
                    }
                }
            }
            _ => unreachable!("checked in constructor"),
        }
    }

    pub fn len(&self) -> usize {
        let mut n = 0;
        self.for_each(|_| n += 1);
        n
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
