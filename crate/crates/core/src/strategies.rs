//! Closed-form strategies and a library of admissible evader controls.
//!
//! The pursuit strategy is a counter-strategy: pursuer `i` reads the evader's
//! current velocity `v` and answers with
//!
//! ```text
//! u_i = v - (v, e_i) e_i + e_i * sqrt(1 - |v|^2 + (v, e_i)^2)
//! ```
//!
//! where `e_i` is the unit direction from the pursuer's *initial* position to
//! the evader's *initial* position. It never looks at current positions: the
//! component of `v` orthogonal to `e_i` is copied exactly, so the relative
//! position stays on the initial line of sight and only its length changes.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::vectorspace::{dot, norm, Vec2l, IDENTITY_TOL};

/// Controls may exceed unit norm by this much before being rejected.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;
/// Negative radicands down to this value are rounding noise and clamp to zero.
///
/// With `|v| <= 1 + ADMISSIBILITY_TOL` the exact radicand can dip to about
/// `-2 * ADMISSIBILITY_TOL`, hence the wider band.
pub const RADICAND_CLAMP: f64 = 3e-12;

fn check_inputs(v: &Vec2l, e: &Vec2l) -> Result<()> {
    if v.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            found: v.dim(),
        });
    }
    let nv = norm(v);
    if nv > 1.0 + ADMISSIBILITY_TOL {
        return Err(Error::InadmissibleControl {
            who: "evader".into(),
            norm: nv,
            time: f64::NAN,
        });
    }
    if (norm(e) - 1.0).abs() > IDENTITY_TOL {
        return Err(Error::Usage(format!(
            "direction must be a unit vector (norm {})",
            norm(e)
        )));
    }
    Ok(())
}

/// Returns `(v, e)` and `sqrt(1 - |v|^2 + (v, e)^2)`.
fn projection_and_root(v: &Vec2l, e: &Vec2l) -> Result<(f64, f64)> {
    check_inputs(v, e)?;
    let a = dot(v, e);
    let radicand = (1.0 - dot(v, v)) + a * a;
    let radicand = if radicand >= 0.0 {
        radicand
    } else if radicand >= -RADICAND_CLAMP {
        0.0
    } else {
        return Err(Error::Internal(format!(
            "negative radicand {radicand:e} for an admissible control"
        )));
    };
    Ok((a, radicand.sqrt()))
}

/// The pursuit strategy's velocity for one pursuer; always of unit norm.
pub fn pursuer_control(v: &Vec2l, e: &Vec2l) -> Result<Vec2l> {
    let (a, root) = projection_and_root(v, e)?;
    Ok(v.axpy(root - a, e))
}

/// Rate at which the gap `Omega_i` shrinks under the pursuit strategy:
/// `sqrt(1 - |v|^2 + (v, e)^2) - (v, e)`, which is never negative.
pub fn omega_decrement_rate(v: &Vec2l, e: &Vec2l) -> Result<f64> {
    let (a, root) = projection_and_root(v, e)?;
    Ok(root - a)
}

/// Generator parameters accepted by [`make_test_control`].
///
/// String grammar (coordinate and plane indices are 1-based):
///
/// ```text
/// constant:[c1,...,cn]
/// sphere:seed=S,scale=F         (both keys optional; scale in [0, 1])
/// rotate:plane=(i,j),rate=W     (rate in radians per unit time)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSpec {
    Constant(Vec<f64>),
    Sphere { seed: Option<u64>, scale: f64 },
    Rotate { plane: (usize, usize), rate: f64 },
}

fn spec_error(text: &str, why: impl fmt::Display) -> Error {
    Error::Usage(format!("bad control spec `{text}`: {why}"))
}

/// Splits `k=v` pairs on top-level commas (commas inside parentheses stay).
fn key_values(body: &str) -> Vec<(&str, &str)> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    let bytes = body.as_bytes();
    for (k, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b',' if depth == 0 => {
                out.push(&body[start..k]);
                start = k + 1;
            }
            _ => {}
        }
    }
    out.push(&body[start..]);
    out.into_iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| match s.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (s.trim(), ""),
        })
        .collect()
}

impl FromStr for ControlSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (kind, body) = text
            .split_once(':')
            .ok_or_else(|| spec_error(text, "expected `<kind>:<params>`"))?;
        match kind.trim() {
            "constant" => {
                let coords: Vec<f64> =
                    serde_json::from_str(body.trim()).map_err(|e| spec_error(text, e))?;
                if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
                    return Err(spec_error(text, "need finite coordinates"));
                }
                Ok(Self::Constant(coords))
            }
            "sphere" => {
                let mut seed = None;
                let mut scale = 1.0;
                for (k, v) in key_values(body) {
                    match k {
                        "seed" => seed = Some(v.parse().map_err(|e| spec_error(text, e))?),
                        "scale" => scale = v.parse().map_err(|e| spec_error(text, e))?,
                        other => return Err(spec_error(text, format!("unknown key `{other}`"))),
                    }
                }
                if !(0.0..=1.0).contains(&scale) {
                    return Err(spec_error(text, "scale must lie in [0, 1]"));
                }
                Ok(Self::Sphere { seed, scale })
            }
            "rotate" => {
                let mut plane = None;
                let mut rate = None;
                for (k, v) in key_values(body) {
                    match k {
                        "plane" => {
                            let inner = v
                                .strip_prefix('(')
                                .and_then(|s| s.strip_suffix(')'))
                                .ok_or_else(|| spec_error(text, "plane must be `(i,j)`"))?;
                            let (i, j) = inner
                                .split_once(',')
                                .ok_or_else(|| spec_error(text, "plane must be `(i,j)`"))?;
                            let i: usize = i.trim().parse().map_err(|e| spec_error(text, e))?;
                            let j: usize = j.trim().parse().map_err(|e| spec_error(text, e))?;
                            plane = Some((i, j));
                        }
                        "rate" => {
                            let r: f64 = v.parse().map_err(|e| spec_error(text, e))?;
                            if !r.is_finite() {
                                return Err(spec_error(text, "rate must be finite"));
                            }
                            rate = Some(r);
                        }
                        other => return Err(spec_error(text, format!("unknown key `{other}`"))),
                    }
                }
                let plane = plane.ok_or_else(|| spec_error(text, "missing `plane`"))?;
                if plane.0 == 0 || plane.1 == 0 || plane.0 == plane.1 {
                    return Err(spec_error(text, "plane needs two distinct 1-based axes"));
                }
                Ok(Self::Rotate {
                    plane,
                    rate: rate.ok_or_else(|| spec_error(text, "missing `rate`"))?,
                })
            }
            other => Err(spec_error(text, format!("unknown generator `{other}`"))),
        }
    }
}

impl fmt::Display for ControlSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => {
                let parts: Vec<String> = c.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "constant:[{}]", parts.join(","))
            }
            Self::Sphere { seed, scale } => match seed {
                Some(s) => write!(f, "sphere:seed={s},scale={scale:?}"),
                None => write!(f, "sphere:scale={scale:?}"),
            },
            Self::Rotate { plane, rate } => {
                write!(f, "rotate:plane=({},{}),rate={rate:?}", plane.0, plane.1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlKind {
    Constant,
    PiecewiseConstant,
    Seeded {
        generator: String,
        seed: u64,
        dt: f64,
    },
}

/// A piecewise-constant, admissible control `t -> v(t)`.
///
/// Segment `k` applies on `[starts[k], starts[k + 1])`; the last segment
/// extends forever. Seeded generators are expanded at construction, so
/// queries are read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaderControl {
    kind: ControlKind,
    label: String,
    starts: Vec<f64>,
    values: Vec<Vec2l>,
}

fn check_admissible(v: &Vec2l, time: f64) -> Result<()> {
    let n = norm(v);
    if n > 1.0 + ADMISSIBILITY_TOL {
        return Err(Error::InadmissibleControl {
            who: "evader".into(),
            norm: n,
            time,
        });
    }
    Ok(())
}

impl EvaderControl {
    pub fn constant(v: Vec2l) -> Result<Self> {
        check_admissible(&v, 0.0)?;
        Ok(Self {
            kind: ControlKind::Constant,
            label: ControlSpec::Constant(v.coords().to_vec()).to_string(),
            starts: vec![0.0],
            values: vec![v],
        })
    }

    /// `schedule` lists `(t_start, v)` pairs; the first must start at 0 and the
    /// starts must increase strictly.
    pub fn piecewise(schedule: Vec<(f64, Vec2l)>) -> Result<Self> {
        let Some(first) = schedule.first() else {
            return Err(Error::Usage("empty control schedule".into()));
        };
        if first.0 != 0.0 {
            return Err(Error::Usage("control schedule must start at t = 0".into()));
        }
        let dim = first.1.dim();
        for w in schedule.windows(2) {
            if !(w[1].0 > w[0].0) || !w[1].0.is_finite() {
                return Err(Error::Usage("schedule times must increase".into()));
            }
        }
        for (t, v) in &schedule {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
            check_admissible(v, *t)?;
        }
        let (starts, values) = schedule.into_iter().unzip();
        Ok(Self {
            kind: ControlKind::PiecewiseConstant,
            label: "piecewise".into(),
            starts,
            values,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn kind(&self) -> &ControlKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    pub fn segments(&self) -> impl Iterator<Item = (f64, &Vec2l)> {
        self.starts.iter().copied().zip(&self.values)
    }

    /// The value in force at time `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> &Vec2l {
        let k = self.starts.partition_point(|&s| s <= t);
        &self.values[k.saturating_sub(1)]
    }

    /// First switching time strictly after `t`.
    pub fn next_switch_after(&self, t: f64) -> Option<f64> {
        let k = self.starts.partition_point(|&s| s <= t);
        self.starts.get(k).copied()
    }
}

/// The evasion strategy: run along the unit witness `p` forever.
pub fn evasion_control(p: &Vec2l) -> Result<EvaderControl> {
    if (norm(p) - 1.0).abs() > IDENTITY_TOL {
        return Err(Error::Usage(format!(
            "evasion direction must be a unit vector (norm {})",
            norm(p)
        )));
    }
    EvaderControl::constant(p.clone())
}

/// Expands a generator into a control on `[0, horizon]` with step `dt`.
///
/// Generated sequences are a pure function of the spec (and `default_seed`
/// when the spec names none). Randomness comes from ChaCha8 seeded with
/// `seed_from_u64`.
pub fn make_test_control(
    spec: &ControlSpec,
    dim: usize,
    dt: f64,
    horizon: f64,
    default_seed: u64,
) -> Result<EvaderControl> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Usage(format!("dt must be positive, got {dt}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Usage(format!("horizon must be >= 0, got {horizon}")));
    }
    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let label = spec.to_string();
    match spec {
        ControlSpec::Constant(c) => {
            let v = Vec2l::new(c.clone())?;
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
            Ok(EvaderControl::constant(v)?.with_label(label))
        }
        ControlSpec::Sphere { seed, scale } => {
            let seed = seed.unwrap_or(default_seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut starts = Vec::with_capacity(steps);
            let mut values = Vec::with_capacity(steps);
            for k in 0..steps {
                let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let g = Vec2l::new(g)?;
                let n = norm(&g);
                let v = if n > 0.0 {
                    g.scale(scale / n)
                } else {
                    Vec2l::zeros(dim)
                };
                starts.push(k as f64 * dt);
                values.push(v);
            }
            Ok(EvaderControl {
                kind: ControlKind::Seeded {
                    generator: "sphere".into(),
                    seed,
                    dt,
                },
                label,
                starts,
                values,
            })
        }
        ControlSpec::Rotate { plane, rate } => {
            let (i, j) = (plane.0 - 1, plane.1 - 1);
            if i >= dim || j >= dim {
                return Err(Error::Usage(format!(
                    "rotation plane ({},{}) outside dimension {dim}",
                    plane.0, plane.1
                )));
            }
            let mut starts = Vec::with_capacity(steps);
            let mut values = Vec::with_capacity(steps);
            for k in 0..steps {
                let t = k as f64 * dt;
                let (s, c) = (rate * t).sin_cos();
                let mut v = vec![0.0; dim];
                v[i] = c;
                v[j] = s;
                let v = Vec2l::new(v)?;
                let n = norm(&v);
                starts.push(t);
                values.push(v.scale(1.0 / n));
            }
            Ok(EvaderControl {
                kind: ControlKind::Seeded {
                    generator: "rotate".into(),
                    seed: 0,
                    dt,
                },
                label,
                starts,
                values,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(c: &[f64]) -> Vec2l {
        Vec2l::new(c.to_vec()).unwrap()
    }

    #[test]
    fn pursuer_control_examples() {
        let e = v(&[1.0, 0.0]);
        assert_eq!(
            pursuer_control(&v(&[0.0, 0.0]), &e).unwrap(),
            v(&[1.0, 0.0])
        );
        assert_eq!(
            pursuer_control(&v(&[1.0, 0.0]), &e).unwrap(),
            v(&[1.0, 0.0])
        );
        assert_eq!(
            pursuer_control(&v(&[0.0, 1.0]), &e).unwrap(),
            v(&[0.0, 1.0])
        );
        // v = -e: u = v + 2e = e
        assert_eq!(
            pursuer_control(&v(&[-1.0, 0.0]), &e).unwrap(),
            v(&[1.0, 0.0])
        );
    }

    #[test]
    fn decrement_rate_examples() {
        let e = v(&[1.0, 0.0]);
        assert_eq!(omega_decrement_rate(&v(&[0.0, 0.0]), &e).unwrap(), 1.0);
        assert_eq!(omega_decrement_rate(&e, &e).unwrap(), 0.0);
        assert_eq!(omega_decrement_rate(&v(&[-1.0, 0.0]), &e).unwrap(), 2.0);
    }

    #[test]
    fn rejects_inadmissible_inputs() {
        let e = v(&[1.0, 0.0]);
        assert!(matches!(
            pursuer_control(&v(&[1.0, 1.0]), &e),
            Err(Error::InadmissibleControl { .. })
        ));
        assert!(matches!(
            pursuer_control(&v(&[0.0, 0.0]), &v(&[2.0, 0.0])),
            Err(Error::Usage(_))
        ));
        // Barely over the unit sphere: tolerated, radicand clamped.
        let edge = v(&[0.0, 1.0 + 5e-13]);
        let u = pursuer_control(&edge, &e).unwrap();
        assert!(u.coords().iter().all(|c| c.is_finite()));
    }

    #[test]
    fn evasion_control_examples() {
        let c = evasion_control(&v(&[1.0, 0.0])).unwrap();
        for t in [0.0, 0.5, 1e6] {
            assert_eq!(c.value_at(t), &v(&[1.0, 0.0]));
        }
        let c = evasion_control(&v(&[0.6, 0.8])).unwrap();
        assert_eq!(c.value_at(3.0), &v(&[0.6, 0.8]));
        assert!(evasion_control(&v(&[2.0, 0.0])).is_err());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "constant:[1,0]".parse::<ControlSpec>().unwrap(),
            ControlSpec::Constant(vec![1.0, 0.0])
        );
        assert_eq!(
            "sphere:seed=7,scale=0.5".parse::<ControlSpec>().unwrap(),
            ControlSpec::Sphere {
                seed: Some(7),
                scale: 0.5
            }
        );
        assert_eq!(
            "rotate:plane=(1,2),rate=0.25"
                .parse::<ControlSpec>()
                .unwrap(),
            ControlSpec::Rotate {
                plane: (1, 2),
                rate: 0.25
            }
        );
        for bad in [
            "spiral:x=1",
            "constant:[1,",
            "sphere:scale=2",
            "rotate:rate=1",
            "rotate:plane=(1,1),rate=1",
            "nocolon",
        ] {
            assert!(bad.parse::<ControlSpec>().is_err(), "{bad}");
        }
        let spec: ControlSpec = "rotate:plane=(1,3),rate=0.5".parse().unwrap();
        assert_eq!(spec.to_string().parse::<ControlSpec>().unwrap(), spec);
    }

    #[test]
    fn generators() {
        let c = make_test_control(&ControlSpec::Constant(vec![1.0, 0.0]), 2, 0.1, 1.0, 0).unwrap();
        assert_eq!(
            c.value_at(0.7),
            evasion_control(&v(&[1.0, 0.0])).unwrap().value_at(0.7)
        );

        let spec = ControlSpec::Sphere {
            seed: Some(11),
            scale: 1.0,
        };
        let a = make_test_control(&spec, 3, 0.1, 2.0, 0).unwrap();
        let b = make_test_control(&spec, 3, 0.1, 2.0, 99).unwrap();
        assert_eq!(a, b);
        for (_, w) in a.segments() {
            assert!((norm(w) - 1.0).abs() < 1e-12);
        }
        assert_eq!(a.segments().count(), 20);
        // Piecewise constant on the generator grid.
        assert_eq!(a.value_at(0.1), a.value_at(0.15));
        assert_eq!(a.next_switch_after(0.1), Some(0.2));

        let zero = make_test_control(
            &ControlSpec::Sphere {
                seed: None,
                scale: 0.0,
            },
            2,
            0.1,
            1.0,
            5,
        )
        .unwrap();
        assert!(zero.segments().all(|(_, w)| norm(w) == 0.0));

        let rot = make_test_control(
            &ControlSpec::Rotate {
                plane: (1, 2),
                rate: std::f64::consts::FRAC_PI_2,
            },
            3,
            1.0,
            2.0,
            0,
        )
        .unwrap();
        assert!(rot.value_at(1.0).max_abs_diff(&v(&[0.0, 1.0, 0.0])) < 1e-15);

        assert!(make_test_control(&spec, 2, 0.0, 1.0, 0).is_err());
        assert!(make_test_control(&ControlSpec::Constant(vec![1.0]), 2, 0.1, 1.0, 0).is_err());
    }

    #[test]
    fn piecewise_validation() {
        assert!(EvaderControl::piecewise(vec![(0.5, v(&[1.0]))]).is_err());
        assert!(EvaderControl::piecewise(vec![(0.0, v(&[1.0])), (0.0, v(&[0.0]))]).is_err());
        assert!(EvaderControl::piecewise(vec![(0.0, v(&[1.5]))]).is_err());
        let c = EvaderControl::piecewise(vec![(0.0, v(&[1.0])), (1.0, v(&[-1.0]))]).unwrap();
        assert_eq!(c.value_at(0.999), &v(&[1.0]));
        assert_eq!(c.value_at(1.0), &v(&[-1.0]));
        assert_eq!(c.next_switch_after(0.0), Some(1.0));
        assert_eq!(c.next_switch_after(1.0), None);
    }

    fn admissible_pair() -> impl Strategy<Value = (Vec2l, Vec2l)> {
        (1usize..9).prop_flat_map(|d| {
            (
                prop::collection::vec(-1.0f64..1.0, d),
                0.0f64..=1.0,
                prop::collection::vec(-1.0f64..1.0, d),
                prop::bool::weighted(0.3),
            )
                .prop_filter_map("nonzero", |(vv, r, ee, on_sphere)| {
                    let v = Vec2l::new(vv).unwrap();
                    let e = Vec2l::new(ee).unwrap();
                    let (nv, ne) = (norm(&v), norm(&e));
                    if nv < 1e-9 || ne < 1e-9 {
                        return None;
                    }
                    let r = if on_sphere { 1.0 } else { r };
                    Some((v.scale(r / nv), e.scale(1.0 / ne)))
                })
        })
    }

    proptest! {
        #[test]
        fn unit_speed((v, e) in admissible_pair()) {
            let u = pursuer_control(&v, &e).unwrap();
            prop_assert!((norm(&u) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn correction_is_collinear((v, e) in admissible_pair()) {
            let d = &pursuer_control(&v, &e).unwrap() - &v;
            let off = d.axpy(-dot(&d, &e), &e);
            prop_assert!(off.coords().iter().all(|c| c.abs() <= 1e-12));
        }

        #[test]
        fn unit_evader_sign_structure((v, e) in admissible_pair()) {
            let v = v.scale(1.0 / norm(&v));
            let a = dot(&v, &e);
            // Within ~1e-4 of the kink the square root turns O(1e-16) rounding
            // in |v|^2 into errors above 1e-12.
            prop_assume!(a.abs() >= 1e-4);
            let u = pursuer_control(&v, &e).unwrap();
            let expected = if a >= 0.0 { v.clone() } else { v.axpy(-2.0 * a, &e) };
            prop_assert!(u.max_abs_diff(&expected) <= 1e-12);
        }

        #[test]
        fn rate_is_nonnegative((v, e) in admissible_pair()) {
            prop_assert!(omega_decrement_rate(&v, &e).unwrap() >= -1e-12);
        }
    }
}
