//! Regime classification.
//!
//! A configuration is in the evasion regime when the dual cone
//! `{p : (z_i, p) >= 0 for all i}` of the initial displacements contains a
//! nonzero vector; any such vector, normalized, is the evader's escape
//! direction. Otherwise every direction makes some `(z_k, p) < 0` and the
//! configuration is in the pursuit regime. The two are exact complements.
//!
//! The decision is made with small linear programs over the box
//! `-1 <= p <= 1`, using the unit directions `e_i` (which generate the same
//! cone as the `z_i`) so that the tolerances are scale-free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::lp::{LinearProgram, LpOutcome, FEASIBILITY_TOL};
use crate::scenario::PursuitFrame;
use crate::vectorspace::{dot, norm, orthonormal_basis_and_rank, Vec2l};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Pursuit,
    Evasion,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Rank of the span of the displacements.
    pub rank: usize,
    pub lp_solves: usize,
    pub lp_iterations: usize,
    /// Classifier: optimum of `max t s.t. (e_i, p) >= t, |p|_inf <= 1`.
    /// Sampling oracle: grid maximum of `min_i (z_i, p)`.
    pub margin: f64,
    /// Sampling oracle only: how far the true maximum can exceed the grid one.
    pub lipschitz_slack: Option<f64>,
    /// The verdict sits inside the numerical tolerance band.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeCertificate {
    pub regime: Regime,
    /// Unit escape direction, present iff `regime == Evasion`.
    pub witness: Option<Vec2l>,
    /// `min_i (e_i, witness)` exceeds the feasibility tolerance.
    pub strict: bool,
    pub diagnostics: Diagnostics,
}

#[derive(Serialize, Deserialize)]
struct CertificateDoc {
    regime: Regime,
    witness: Option<Vec2l>,
    strict: bool,
    rank: usize,
}

impl RegimeCertificate {
    /// Wire format: `{"regime", "witness", "strict", "rank"}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&CertificateDoc {
            regime: self.regime,
            witness: self.witness.clone(),
            strict: self.strict,
            rank: self.diagnostics.rank,
        })
        .expect("certificate serialization cannot fail")
    }

    /// `min_i (z_i, witness)`: a lower bound on the evader's distance to every
    /// pursuer when it runs along the witness.
    pub fn evasion_margin(&self, frame: &PursuitFrame) -> Option<f64> {
        let p = self.witness.as_ref()?;
        Some(
            frame
                .displacements
                .iter()
                .map(|z| dot(z, p))
                .fold(f64::INFINITY, f64::min),
        )
    }
}

struct LpStats {
    solves: usize,
    iterations: usize,
}

fn solve_box_lp(lp: &LinearProgram, stats: &mut LpStats) -> Result<(Vec<f64>, f64)> {
    stats.solves += 1;
    match lp.solve()? {
        LpOutcome::Optimal {
            x,
            objective,
            iterations,
        } => {
            stats.iterations += iterations;
            Ok((x, objective))
        }
        other => Err(Error::Internal(format!(
            "dual-cone LP must have an optimum (p = 0 is feasible), got {other:?}"
        ))),
    }
}

/// Shifted box variables `q = p + 1` live in `[0, 2]^n`.
fn cone_rows(dirs: &[Vec2l], n: usize, with_t: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let width = n + usize::from(with_t);
    let mut a = Vec::with_capacity(dirs.len() + n);
    let mut b = Vec::with_capacity(dirs.len() + n);
    // (e_i, p) >= t  <=>  -(e_i, q) + t <= -(e_i, 1)
    for e in dirs {
        let mut row: Vec<f64> = e.coords().iter().map(|c| -c).collect();
        if with_t {
            row.push(1.0);
        }
        a.push(row);
        b.push(-e.coords().iter().sum::<f64>());
    }
    for k in 0..n {
        let mut row = vec![0.0; width];
        row[k] = 1.0;
        a.push(row);
        b.push(2.0);
    }
    (a, b)
}

fn unshift(q: &[f64], n: usize) -> Vec<f64> {
    q[..n].iter().map(|v| v - 1.0).collect()
}

/// Solves `max t s.t. (e_i, p) >= t, |p|_inf <= 1` (with `t >= 0`, which loses
/// nothing since `p = 0` gives `t = 0`). Returns the optimum and optimizer.
fn strict_lp(dirs: &[Vec2l], n: usize, stats: &mut LpStats) -> Result<(f64, Vec<f64>)> {
    let (a, b) = cone_rows(dirs, n, true);
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let (x, t) = solve_box_lp(&LinearProgram::new(c, a, b)?, stats)?;
    Ok((t, unshift(&x, n)))
}

fn normalized(p: Vec<f64>) -> Result<Vec2l> {
    let v = Vec2l::new(p)?;
    let n = norm(&v);
    if n <= FEASIBILITY_TOL {
        return Err(Error::Internal("LP optimizer collapsed to zero".into()));
    }
    Ok(v.scale(1.0 / n))
}

fn witness_search(dirs: &[Vec2l], stats: &mut LpStats) -> Result<(Option<Vec2l>, f64)> {
    let Some(first) = dirs.first() else {
        return Err(Error::Usage("need at least one direction".into()));
    };
    let n = first.dim();
    let (t, p) = strict_lp(dirs, n, stats)?;
    if t > FEASIBILITY_TOL {
        return Ok((Some(normalized(p)?), t));
    }
    // No interior direction: probe the faces of the cone one coordinate at a time.
    let (a, b) = cone_rows(dirs, n, false);
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; n];
            c[k] = sign;
            let (q, _) = solve_box_lp(&LinearProgram::new(c, a.clone(), b.clone())?, stats)?;
            let p = unshift(&q, n);
            if sign * p[k] > FEASIBILITY_TOL {
                return Ok((Some(normalized(p)?), t));
            }
        }
    }
    Ok((None, t))
}

/// A unit `p` with `(z_i, p) >= -1e-9` for every `i` if the cone `{p : Zp >= 0}`
/// is nontrivial, else `None`.
///
/// First maximizes the worst-case margin `t`; a positive optimum gives a
/// strict witness. Otherwise the `2n` face-probing programs
/// `max +-p_k s.t. (z_i, p) >= 0` look for a witness on the cone boundary.
pub fn dual_cone_witness(zs: &[Vec2l]) -> Result<Option<Vec2l>> {
    let dirs = unit_rows(zs)?;
    let mut stats = LpStats {
        solves: 0,
        iterations: 0,
    };
    Ok(witness_search(&dirs, &mut stats)?.0)
}

fn unit_rows(zs: &[Vec2l]) -> Result<Vec<Vec2l>> {
    zs.iter()
        .map(|z| {
            let n = norm(z);
            if n == 0.0 {
                Err(Error::Degenerate("zero displacement".into()))
            } else {
                Ok(z.scale(1.0 / n))
            }
        })
        .collect()
}

fn check_witness(frame: &PursuitFrame, p: &Vec2l) -> Result<()> {
    if (norm(p) - 1.0).abs() > 1e-12 {
        return Err(Error::Internal(format!(
            "witness norm {} is not 1",
            norm(p)
        )));
    }
    for (i, z) in frame.displacements.iter().enumerate() {
        let s = dot(z, p);
        if s < -FEASIBILITY_TOL {
            return Err(Error::Internal(format!(
                "witness violates constraint {}: (z, p) = {s:e}",
                i + 1
            )));
        }
    }
    Ok(())
}

fn strictness(frame: &PursuitFrame, p: &Vec2l) -> bool {
    frame.directions.iter().all(|e| dot(e, p) > FEASIBILITY_TOL)
}

/// Decides the regime of a validated configuration.
///
/// When the displacements do not span the space, a strict witness is still
/// preferred (it gives a positive distance guarantee); failing that, any unit
/// vector orthogonal to every displacement is returned.
pub fn classify(frame: &PursuitFrame) -> Result<RegimeCertificate> {
    let span = orthonormal_basis_and_rank(&frame.displacements)?;
    let rank = span.rank();
    let mut stats = LpStats {
        solves: 0,
        iterations: 0,
    };

    let (witness, margin) = if rank < frame.dim {
        let (t, p) = strict_lp(&frame.directions, frame.dim, &mut stats)?;
        if t > FEASIBILITY_TOL {
            (Some(normalized(p)?), t)
        } else {
            let c = span.complement_direction().ok_or_else(|| {
                Error::Internal("rank-deficient span without a complement".into())
            })?;
            (Some(c), t)
        }
    } else {
        witness_search(&frame.directions, &mut stats)?
    };

    let diagnostics = |ambiguous| Diagnostics {
        rank,
        lp_solves: stats.solves,
        lp_iterations: stats.iterations,
        margin,
        lipschitz_slack: None,
        ambiguous,
    };
    match witness {
        Some(p) => {
            check_witness(frame, &p)?;
            let strict = strictness(frame, &p);
            Ok(RegimeCertificate {
                regime: Regime::Evasion,
                witness: Some(p),
                strict,
                diagnostics: diagnostics(!strict && margin > 1e-12),
            })
        }
        None => {
            debug_assert!(frame.num_pursuers() > frame.dim);
            Ok(RegimeCertificate {
                regime: Regime::Pursuit,
                witness: None,
                strict: false,
                diagnostics: diagnostics(margin > 1e-12),
            })
        }
    }
}

/// Brute-force cross-check of [`classify`] by evaluating `min_i (z_i, p)` on
/// an angle grid over the unit sphere (`dim <= 3`).
///
/// The grid maximum underestimates the true maximum by at most
/// `max_i |z_i| * covering_radius`, recorded as `lipschitz_slack`; the verdict
/// is flagged ambiguous when the grid maximum lies within that band of zero.
pub fn sampling_oracle(frame: &PursuitFrame, resolution: f64) -> Result<RegimeCertificate> {
    let grid = SphereGrid::new(frame.dim, resolution)?;
    let mut best = f64::NEG_INFINITY;
    let mut best_p: Vec<f64> = Vec::new();
    grid.for_each(|p| {
        let worst = frame
            .displacements
            .iter()
            .map(|z| z.coords().iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        if worst > best {
            best = worst;
            best_p = p.to_vec();
        }
    });
    let lipschitz = frame.omega0.iter().copied().fold(0.0, f64::max);
    let slack = lipschitz * grid.covering_radius();
    let evasion = best >= 0.0;
    let witness = if evasion {
        Some(Vec2l::new(best_p)?)
    } else {
        None
    };
    let strict = evasion && best > 0.0;
    Ok(RegimeCertificate {
        regime: if evasion {
            Regime::Evasion
        } else {
            Regime::Pursuit
        },
        witness,
        strict,
        diagnostics: Diagnostics {
            rank: orthonormal_basis_and_rank(&frame.displacements)?.rank(),
            lp_solves: 0,
            lp_iterations: 0,
            margin: best,
            lipschitz_slack: Some(slack),
            ambiguous: best.abs() <= slack,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn frame_from_z(zs: &[&[f64]]) -> PursuitFrame {
        // Evader at the origin, pursuer i at -z_i.
        let dim = zs[0].len();
        let xs: Vec<Vec<f64>> = zs.iter().map(|z| z.iter().map(|c| -c).collect()).collect();
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        Scenario::from_coords(&vec![0.0; dim], &refs)
            .unwrap()
            .validate()
            .unwrap()
    }

    fn v(c: &[f64]) -> Vec2l {
        Vec2l::new(c.to_vec()).unwrap()
    }

    fn unit_at(deg: f64) -> Vec<f64> {
        let r = deg.to_radians();
        vec![r.cos(), r.sin()]
    }

    #[test]
    fn one_pursuer_behind_is_evasion() {
        let c = classify(&frame_from_z(&[&[1.0]])).unwrap();
        assert_eq!(c.regime, Regime::Evasion);
        assert_eq!(c.witness.as_ref().unwrap().coords(), &[1.0]);
        assert!(c.strict);
        assert_eq!(
            c.to_json(),
            r#"{"regime":"evasion","witness":[1.0],"strict":true,"rank":1}"#
        );
    }

    #[test]
    fn two_sided_line_is_pursuit() {
        let c = classify(&frame_from_z(&[&[1.0], &[-1.0]])).unwrap();
        assert_eq!(c.regime, Regime::Pursuit);
        assert!(c.witness.is_none());
        assert_eq!(
            c.to_json(),
            r#"{"regime":"pursuit","witness":null,"strict":false,"rank":1}"#
        );
    }

    #[test]
    fn half_plane_cone_gives_boundary_witness() {
        let c = classify(&frame_from_z(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(c.regime, Regime::Evasion);
        let p = c.witness.unwrap();
        assert!(p.max_abs_diff(&v(&[0.0, 1.0])) < 1e-12);
        assert!(!c.strict);
    }

    #[test]
    fn symmetric_triple_is_pursuit() {
        let zs: Vec<Vec<f64>> = [90.0, 210.0, 330.0].iter().map(|&d| unit_at(d)).collect();
        let refs: Vec<&[f64]> = zs.iter().map(|z| z.as_slice()).collect();
        let c = classify(&frame_from_z(&refs)).unwrap();
        assert_eq!(c.regime, Regime::Pursuit);
    }

    #[test]
    fn witness_lp_examples() {
        assert_eq!(dual_cone_witness(&[v(&[1.0]), v(&[-1.0])]).unwrap(), None);

        let p = dual_cone_witness(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])])
            .unwrap()
            .unwrap();
        assert!((norm(&p) - 1.0).abs() < 1e-12);
        assert!(p[0] >= -1e-9 && p[1] >= -1e-9);

        let p = dual_cone_witness(&[v(&[1.0, 0.0]), v(&[-1.0, 0.0]), v(&[0.0, 1.0])])
            .unwrap()
            .unwrap();
        assert!(p.max_abs_diff(&v(&[0.0, 1.0])) < 1e-12);
    }

    #[test]
    fn rank_deficient_uses_complement_when_needed() {
        // Two opposite pursuers on the x-axis of the plane: only (0, +-1) escapes.
        let c = classify(&frame_from_z(&[&[2.0, 0.0], &[-1.0, 0.0]])).unwrap();
        assert_eq!(c.regime, Regime::Evasion);
        assert_eq!(c.diagnostics.rank, 1);
        let p = c.witness.unwrap();
        assert!(p[0].abs() < 1e-12 && (p[1].abs() - 1.0).abs() < 1e-12);
        assert!(!c.strict);

        // A single pursuer in the plane still gets a strict witness.
        let c = classify(&frame_from_z(&[&[1.0, 0.0]])).unwrap();
        assert!(c.strict);
    }

    #[test]
    fn oracle_examples() {
        let c = sampling_oracle(&frame_from_z(&[&[1.0]]), 1e-3).unwrap();
        assert_eq!(c.regime, Regime::Evasion);
        assert_eq!(c.witness.unwrap().coords(), &[1.0]);

        let zs: Vec<Vec<f64>> = [90.0, 210.0, 330.0].iter().map(|&d| unit_at(d)).collect();
        let refs: Vec<&[f64]> = zs.iter().map(|z| z.as_slice()).collect();
        let c = sampling_oracle(&frame_from_z(&refs), 1e-3).unwrap();
        assert_eq!(c.regime, Regime::Pursuit);
        // max over p of min_i (z_i, p) for the symmetric triple is -1/2.
        assert!((c.diagnostics.margin + 0.5).abs() < 1e-6);

        let c = sampling_oracle(&frame_from_z(&[&[1.0, 0.0], &[0.0, 1.0]]), 1e-3).unwrap();
        assert_eq!(c.regime, Regime::Evasion);

        let f4 = Scenario::from_coords(&[0.0; 4], &[&[1.0, 0.0, 0.0, 0.0]])
            .unwrap()
            .validate()
            .unwrap();
        assert!(matches!(
            sampling_oracle(&f4, 0.1),
            Err(Error::Unsupported(_))
        ));
    }
}
