//! Seeded scenario generators for experiments and sweeps.
//!
//! All generators draw from a caller-supplied ChaCha8 stream, so a seed fixes
//! the scenario on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::vectorspace::{dot, norm, orthonormal_basis_and_rank, Vec2l};

/// The generator stream behind every seeded experiment.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, dim: usize, sigma: f64) -> Vec2l {
    let c: Vec<f64> = (0..dim)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut *rng);
            sigma * g
        })
        .collect();
    Vec2l::new(c).expect("normal samples are finite")
}

pub fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec2l {
    loop {
        let g = gaussian(rng, dim, 1.0);
        let n = norm(&g);
        if n > 1e-6 {
            return g.scale(1.0 / n);
        }
    }
}

/// A random orthonormal basis of `R^dim`.
pub fn random_rotation(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec2l> {
    loop {
        let vs: Vec<Vec2l> = (0..dim).map(|_| gaussian(rng, dim, 1.0)).collect();
        let b = orthonormal_basis_and_rank(&vs).expect("dimensions agree");
        if b.rank() == dim {
            return b.basis;
        }
    }
}

/// Vertices of a regular simplex centred at the origin, unit circumradius.
pub fn regular_simplex(dim: usize) -> Vec<Vec2l> {
    // Centered standard basis of R^{dim+1}, expressed in an orthonormal basis
    // of the sum-zero hyperplane.
    let k = dim + 1;
    let centered: Vec<Vec2l> = (0..k)
        .map(|j| {
            let mut c = vec![-1.0 / k as f64; k];
            c[j] += 1.0;
            Vec2l::new(c).expect("finite")
        })
        .collect();
    let basis = orthonormal_basis_and_rank(&centered[..dim]).expect("dimensions agree");
    centered
        .iter()
        .map(|v| {
            let c = Vec2l::new(basis.coefficients(v)).expect("finite");
            let n = norm(&c);
            c.scale(1.0 / n)
        })
        .collect()
}

fn from_displacements(evader: Vec2l, zs: &[Vec2l]) -> Result<Scenario> {
    let pursuers = zs.iter().map(|z| &evader - z).collect();
    Scenario::new(evader.dim(), evader, pursuers, None)
}

/// Unconstrained random instance: Gaussian evader and pursuers.
pub fn random_scenario(rng: &mut ChaCha8Rng, dim: usize, m: usize) -> Result<Scenario> {
    if dim == 0 || m == 0 {
        return Err(Error::Usage("need dim >= 1 and m >= 1".into()));
    }
    loop {
        let evader = gaussian(rng, dim, 1.0);
        let pursuers: Vec<Vec2l> = (0..m).map(|_| gaussian(rng, dim, 2.0)).collect();
        let s = Scenario::new(dim, evader, pursuers, None)?;
        if s.validate().is_ok() {
            return Ok(s);
        }
    }
}

/// Pursuit-regime instance: displacements are the vertices of a randomly
/// rotated regular simplex with random lengths in `[0.5, 2]`, plus `extra`
/// arbitrary pursuers. The origin stays interior to the cone's dual, so the
/// dual cone is trivial by construction.
pub fn simplex_pursuit_scenario(
    rng: &mut ChaCha8Rng,
    dim: usize,
    extra: usize,
) -> Result<Scenario> {
    let rot = random_rotation(rng, dim);
    let mut zs: Vec<Vec2l> = regular_simplex(dim)
        .iter()
        .map(|v| {
            let mut z = Vec2l::zeros(dim);
            for (c, q) in v.coords().iter().zip(&rot) {
                z = z.axpy(*c, q);
            }
            z.scale(rng.random_range(0.5..2.0))
        })
        .collect();
    for _ in 0..extra {
        let u = unit_vector(rng, dim);
        zs.push(u.scale(rng.random_range(0.5..2.0)));
    }
    from_displacements(gaussian(rng, dim, 1.0), &zs)
}

/// Evasion-regime instance with a known strict witness `p`: every
/// displacement satisfies `(z_i, p) >= margin`. Returns the scenario and `p`.
pub fn halfspace_evasion_scenario(
    rng: &mut ChaCha8Rng,
    dim: usize,
    m: usize,
    margin: f64,
) -> Result<(Scenario, Vec2l)> {
    let p = unit_vector(rng, dim);
    let zs: Vec<Vec2l> = (0..m)
        .map(|_| {
            let g = gaussian(rng, dim, 1.0);
            let perp = g.axpy(-dot(&g, &p), &p);
            let along = margin + rng.random_range(0.0..2.0);
            perp.axpy(along, &p)
        })
        .collect();
    Ok((from_displacements(gaussian(rng, dim, 1.0), &zs)?, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{classify, Regime};

    #[test]
    fn simplex_is_regular_and_centered() {
        for dim in 1..6 {
            let vs = regular_simplex(dim);
            assert_eq!(vs.len(), dim + 1);
            let mut sum = Vec2l::zeros(dim);
            for v in &vs {
                assert!((norm(v) - 1.0).abs() < 1e-12);
                sum = &sum + v;
            }
            assert!(norm(&sum) < 1e-12);
            if dim > 1 {
                // All pairwise inner products equal -1/dim.
                for i in 0..vs.len() {
                    for j in i + 1..vs.len() {
                        assert!((dot(&vs[i], &vs[j]) + 1.0 / dim as f64).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn constructions_classify_as_designed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..60 {
            let dim = 1 + k % 4;
            let s = simplex_pursuit_scenario(&mut rng, dim, k % 3).unwrap();
            let c = classify(&s.validate().unwrap()).unwrap();
            assert_eq!(c.regime, Regime::Pursuit);

            let (s, p) = halfspace_evasion_scenario(&mut rng, dim, 1 + k % 5, 0.1).unwrap();
            let f = s.validate().unwrap();
            assert!(f.displacements.iter().all(|z| dot(z, &p) >= 0.1 - 1e-12));
            let c = classify(&f).unwrap();
            assert_eq!(c.regime, Regime::Evasion);
            assert!(c.strict);
        }
    }

    #[test]
    fn seeds_reproduce() {
        let a = random_scenario(&mut ChaCha8Rng::seed_from_u64(42), 3, 4).unwrap();
        let b = random_scenario(&mut ChaCha8Rng::seed_from_u64(42), 3, 4).unwrap();
        assert_eq!(a, b);
    }
}
