//! The aggregate closure rate `Lambda` and its infimum `Theta` over the unit
//! ball.
//!
//! Under the pursuit strategy the summed gap obeys
//! `Omega(t) <= Omega(0) - Theta * t`, so `eta = Omega(0) / Theta` bounds the
//! capture time whenever `Theta > 0`. `Theta` is bracketed from both sides:
//!
//! * projected gradient descent from many starts gives an upper estimate;
//! * for `dim <= 3` a sphere grid with a Lipschitz margin gives a certified
//!   lower bound, and only that bound is used for `eta`.
//!
//! Two facts make the grid certificate work. Along any ray `v = r w` with
//! `|w| = 1`, each term `sqrt(1 - r^2 (1 - b^2)) - r b` (`b = (w, e_i)`) is
//! concave in `r`, so the infimum over the ball is `min(Lambda(0), inf over
//! the sphere)` with `Lambda(0) = m`. On the sphere `Lambda(w)` reduces to
//! `sum_i |(w, e_i)| - (w, e_i)`, which is `2m`-Lipschitz. (Over the whole
//! ball `Lambda` is not Lipschitz at all: the square root has unbounded slope
//! where the radicand vanishes.)

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::classifier::{classify, Regime};
use crate::engine::{simulate, PursuerMode, SimulationOptions};
use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::scenario::PursuitFrame;
use crate::strategies::{omega_decrement_rate, EvaderControl, ADMISSIBILITY_TOL, RADICAND_CLAMP};
use crate::vectorspace::{dot, norm, Vec2l};

/// Radicands below this are treated as sitting on the kink.
const KINK_RADICAND: f64 = 1e-14;
const STEP_TOL: f64 = 1e-10;

/// `Lambda(v) = sum_i sqrt(1 - |v|^2 + (v, e_i)^2) - (v, e_i)`.
pub fn lambda(v: &Vec2l, frame: &PursuitFrame) -> Result<f64> {
    if v.dim() != frame.dim {
        return Err(Error::DimensionMismatch {
            expected: frame.dim,
            found: v.dim(),
        });
    }
    let n = norm(v);
    if n > 1.0 + ADMISSIBILITY_TOL {
        return Err(Error::Usage(format!(
            "Lambda is defined on the unit ball; |v| = {n}"
        )));
    }
    Ok(lambda_unchecked(v, frame))
}

fn lambda_unchecked(v: &Vec2l, frame: &PursuitFrame) -> f64 {
    let vv = dot(v, v);
    frame
        .directions
        .iter()
        .map(|e| {
            let a = dot(v, e);
            let r = (1.0 - vv) + a * a;
            let r = if (-RADICAND_CLAMP..0.0).contains(&r) {
                0.0
            } else {
                r
            };
            r.sqrt() - a
        })
        .sum()
}

/// `Lambda` restricted to the unit sphere: `sum_i |(w, e_i)| - (w, e_i)`.
pub fn lambda_on_sphere(w: &[f64], frame: &PursuitFrame) -> f64 {
    frame
        .directions
        .iter()
        .map(|e| {
            let a: f64 = e.coords().iter().zip(w).map(|(x, y)| x * y).sum();
            a.abs() - a
        })
        .sum()
}

/// Gradient of `Lambda`, with a fixed subgradient choice on the kink.
///
/// On smooth points each term contributes `(a e - v) / sqrt(R) - e`. Where the
/// radicand `R` vanishes (`|v| = 1`, `(v, e) = 0`) the term is replaced by the
/// gradient of its sphere form `|a| - a`, taking the `a >= 0` branch (zero)
/// at `a = 0`.
pub fn lambda_gradient(v: &Vec2l, frame: &PursuitFrame) -> Vec2l {
    let vv = dot(v, v);
    let mut g = Vec2l::zeros(frame.dim);
    for e in &frame.directions {
        let a = dot(v, e);
        let r = (1.0 - vv) + a * a;
        if r > KINK_RADICAND {
            let s = r.sqrt();
            g = g.axpy(-1.0 / s, v).axpy(a / s - 1.0, e);
        } else if a < 0.0 {
            g = g.axpy(-2.0, e);
        }
    }
    g
}

fn project_to_ball(v: Vec2l) -> Vec2l {
    let n = norm(&v);
    if n > 1.0 {
        v.scale(1.0 / n)
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaOptions {
    /// Seeded random starts on the sphere (in addition to the fixed menu).
    pub starts: usize,
    pub seed: u64,
    /// Angle step of the certificate grid; defaults to `1e-3` for `dim <= 2`
    /// and `5e-3` for `dim = 3`.
    pub grid_step: Option<f64>,
    pub max_iterations: usize,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            seed: 0,
            grid_step: None,
            max_iterations: 500,
        }
    }
}

impl ThetaOptions {
    fn grid_step_for(&self, dim: usize) -> f64 {
        self.grid_step.unwrap_or(if dim <= 2 { 1e-3 } else { 5e-3 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaReport {
    /// `Lambda` at the best point found; an upper estimate of `Theta`.
    pub theta_estimate: f64,
    pub minimizer: Vec2l,
    /// Certified lower bound on `Theta` (`dim <= 3`).
    pub theta_lower_bound: Option<f64>,
    /// `Omega(0) / theta_lower_bound` when the bound is positive.
    pub eta_upper: Option<f64>,
    #[serde(skip)]
    pub starts: usize,
    pub converged: bool,
}

impl ThetaReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }
}

struct Descent {
    point: Vec2l,
    value: f64,
    converged: bool,
}

fn descend(
    frame: &PursuitFrame,
    start: Vec2l,
    max_iterations: usize,
    visit: &mut dyn FnMut(&Vec2l, f64),
) -> Descent {
    let mut x = project_to_ball(start);
    let mut f = lambda_unchecked(&x, frame);
    visit(&x, f);
    let mut step: f64 = 1.0;
    for _ in 0..max_iterations {
        let g = lambda_gradient(&x, frame);
        if norm(&g) == 0.0 {
            return Descent {
                point: x,
                value: f,
                converged: true,
            };
        }
        let mut s = (2.0 * step).min(1.0);
        loop {
            let cand = project_to_ball(x.axpy(-s, &g));
            let moved = norm(&(&cand - &x));
            if moved < STEP_TOL {
                return Descent {
                    point: x,
                    value: f,
                    converged: true,
                };
            }
            let fc = lambda_unchecked(&cand, frame);
            // Armijo condition for the projected step.
            if fc <= f - 1e-4 * dot(&g, &(&x - &cand)) {
                visit(&cand, fc);
                x = cand;
                f = fc;
                step = s;
                break;
            }
            s *= 0.5;
        }
    }
    Descent {
        point: x,
        value: f,
        converged: false,
    }
}

/// Snaps a candidate onto nearby kinks: projects it off the `e_i` with nearly
/// vanishing `(w, e_i)` and renormalizes. Minimizers of the sphere form sit on
/// such kinks, where gradient steps only approach them slowly.
fn polish(
    frame: &PursuitFrame,
    best: &Descent,
    visit: &mut dyn FnMut(&Vec2l, f64),
) -> Option<(Vec2l, f64)> {
    let n = norm(&best.point);
    if n < 0.5 {
        return None;
    }
    let w = best.point.scale(1.0 / n);
    let near: Vec<usize> = (0..frame.num_pursuers())
        .filter(|&i| dot(&w, &frame.directions[i]).abs() < 1e-3)
        .collect();
    let mut subsets: Vec<Vec<usize>> = near.iter().map(|&i| vec![i]).collect();
    if near.len() > 1 {
        subsets.push(near.clone());
    }
    subsets.push(Vec::new());
    let mut out: Option<(Vec2l, f64)> = None;
    for set in subsets {
        let mut basis: Vec<Vec2l> = Vec::new();
        for &i in &set {
            let mut r = frame.directions[i].clone();
            for b in &basis {
                r = r.axpy(-dot(&r, b), b);
            }
            let rn = norm(&r);
            if rn > 1e-8 {
                basis.push(r.scale(1.0 / rn));
            }
        }
        let mut c = w.clone();
        for _ in 0..2 {
            for b in &basis {
                c = c.axpy(-dot(&c, b), b);
            }
        }
        let cn = norm(&c);
        if cn < 1e-8 {
            continue;
        }
        let c = c.scale(1.0 / cn);
        let val = lambda_unchecked(&c, frame);
        visit(&c, val);
        if val < best.value && out.as_ref().is_none_or(|(_, v)| val < *v) {
            out = Some((c, val));
        }
    }
    out
}

/// The fixed start menu: `-e_i`, normalized `-(e_i + e_j)`, then seeded
/// uniform directions on the sphere.
fn start_points(frame: &PursuitFrame, opts: &ThetaOptions) -> Vec<Vec2l> {
    let m = frame.num_pursuers();
    let mut starts: Vec<Vec2l> = frame.directions.iter().map(|e| -e).collect();
    for i in 0..m {
        for j in i + 1..m {
            let s = -&(&frame.directions[i] + &frame.directions[j]);
            let n = norm(&s);
            if n > 1e-12 {
                starts.push(s.scale(1.0 / n));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.starts {
        let g: Vec<f64> = (0..frame.dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let g = Vec2l::new(g).expect("normal samples are finite");
        let n = norm(&g);
        if n > 0.0 {
            starts.push(g.scale(1.0 / n));
        }
    }
    starts
}

/// Certified lower bound on `Theta` from a sphere grid (`dim <= 3`).
///
/// Returns `min(m, grid_min - 2m * covering_radius)`, floored at zero.
pub fn certified_lower_bound(frame: &PursuitFrame, grid_step: f64) -> Result<f64> {
    certified_lower_bound_visiting(frame, grid_step, &mut |_, _| {})
}

fn certified_lower_bound_visiting(
    frame: &PursuitFrame,
    grid_step: f64,
    visit: &mut dyn FnMut(&[f64], f64),
) -> Result<f64> {
    let grid = SphereGrid::new(frame.dim, grid_step)?;
    let m = frame.num_pursuers() as f64;
    let mut grid_min = f64::INFINITY;
    grid.for_each(|w| {
        let val = lambda_on_sphere(w, frame);
        visit(w, val);
        grid_min = grid_min.min(val);
    });
    let sphere_bound = grid_min - 2.0 * m * grid.covering_radius();
    Ok(sphere_bound.min(m).max(0.0))
}

/// Estimates `Theta`, certifying a lower bound and `eta` when `dim <= 3`.
pub fn estimate_theta(frame: &PursuitFrame, opts: &ThetaOptions) -> Result<ThetaReport> {
    estimate_theta_traced(frame, opts, &mut |_, _| {})
}

/// [`estimate_theta`], reporting every optimizer iterate and every grid point
/// (as `(point, Lambda)`) to `visit`.
pub fn estimate_theta_traced(
    frame: &PursuitFrame,
    opts: &ThetaOptions,
    visit: &mut dyn FnMut(&Vec2l, f64),
) -> Result<ThetaReport> {
    let starts = start_points(frame, opts);
    let mut best: Option<Descent> = None;
    let mut all_converged = true;
    for s in &starts {
        let d = descend(frame, s.clone(), opts.max_iterations, visit);
        all_converged &= d.converged;
        // Strict comparison keeps the lowest start index on ties.
        if best.as_ref().is_none_or(|b| d.value < b.value) {
            best = Some(d);
        }
    }
    let mut best = best.ok_or_else(|| Error::Internal("no descent starts".into()))?;
    if let Some((p, v)) = polish(frame, &best, visit) {
        best.point = p;
        best.value = v;
    }
    // Radial concavity puts the minimum at the origin or on the sphere.
    let origin = Vec2l::zeros(frame.dim);
    let at_origin = lambda_unchecked(&origin, frame);
    visit(&origin, at_origin);
    if at_origin < best.value {
        best = Descent {
            point: origin,
            value: at_origin,
            converged: true,
        };
    }

    let theta_lower_bound = if frame.dim <= 3 {
        let mut grid_visit = |w: &[f64], val: f64| {
            visit(
                &Vec2l::new(w.to_vec()).expect("grid points are finite"),
                val,
            )
        };
        let lb =
            certified_lower_bound_visiting(frame, opts.grid_step_for(frame.dim), &mut grid_visit)?;
        Some(lb.min(best.value.max(0.0)))
    } else {
        None
    };
    let eta_upper = theta_lower_bound
        .filter(|&lb| lb > 0.0)
        .map(|lb| frame.omega0_total / lb);
    Ok(ThetaReport {
        // Lambda >= 0 exactly; only rounding can push it below.
        theta_estimate: best.value.max(0.0),
        minimizer: best.point,
        theta_lower_bound,
        eta_upper,
        starts: starts.len(),
        converged: all_converged,
    })
}

/// One simulated run inside a capture-bound verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaptureRun {
    pub control: String,
    /// One-based index of the capturing pursuer.
    pub captured_by: Option<usize>,
    pub tau: Option<f64>,
    /// `eta - tau`.
    pub slack: Option<f64>,
    /// Largest `Omega(t) - (Omega(0) - theta_lb * t)` over recorded times.
    pub decay_excess: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaptureBoundReport {
    pub omega0_total: f64,
    pub theta_lower_bound: f64,
    pub eta_upper: f64,
    pub runs: Vec<CaptureRun>,
    pub passed: bool,
}

impl CaptureBoundReport {
    pub fn first_failure(&self) -> Option<&CaptureRun> {
        self.runs.iter().find(|r| !r.passed)
    }
}

/// Absolute slack on `tau <= eta` and on the aggregate decay inequality.
pub const CAPTURE_BOUND_SLACK: f64 = 1e-6;

/// Simulates the pursuit strategy against each control and checks capture by
/// `eta`; failures are reported in the result rather than as errors.
pub fn check_capture_bound(
    frame: &PursuitFrame,
    controls: &[EvaderControl],
    opts: &SimulationOptions,
    grid_step: Option<f64>,
) -> Result<CaptureBoundReport> {
    if frame.dim > 3 {
        return Err(Error::Unsupported(
            "capture-bound certification needs dim <= 3".into(),
        ));
    }
    let cert = classify(frame)?;
    if cert.regime != Regime::Pursuit {
        return Err(Error::Usage(
            "capture-bound verification needs a pursuit-regime scenario".into(),
        ));
    }
    let step = ThetaOptions {
        grid_step,
        ..ThetaOptions::default()
    }
    .grid_step_for(frame.dim);
    let lb = certified_lower_bound(frame, step)?;
    if lb <= 0.0 {
        return Err(Error::Degenerate(
            "certified lower bound on Theta is not positive; refine the grid".into(),
        ));
    }
    let eta = frame.omega0_total / lb;
    let sim_opts = SimulationOptions {
        horizon: eta + CAPTURE_BOUND_SLACK,
        ..*opts
    };
    let mut runs = Vec::with_capacity(controls.len());
    for c in controls {
        let r = simulate(frame, c, &PursuerMode::PaperStrategy, &sim_opts)?;
        let omegas = r
            .omega_traces
            .as_ref()
            .expect("pursuit strategy records gaps");
        let mut decay_excess = f64::NEG_INFINITY;
        for (k, &t) in r.times.iter().enumerate() {
            let total: f64 = omegas.iter().map(|tr| tr[k]).sum();
            decay_excess = decay_excess.max(total - (frame.omega0_total - lb * t));
        }
        let tau = r.capture.as_ref().map(|c| c.time);
        let passed = tau.is_some_and(|t| t <= eta + CAPTURE_BOUND_SLACK)
            && decay_excess <= CAPTURE_BOUND_SLACK;
        runs.push(CaptureRun {
            control: c.label().to_string(),
            captured_by: r.capture.as_ref().map(|c| c.pursuer_index + 1),
            tau,
            slack: tau.map(|t| eta - t),
            decay_excess,
            passed,
        });
    }
    let passed = runs.iter().all(|r| r.passed);
    Ok(CaptureBoundReport {
        omega0_total: frame.omega0_total,
        theta_lower_bound: lb,
        eta_upper: eta,
        runs,
        passed,
    })
}

/// [`check_capture_bound`], turning the first failing run into an error.
pub fn verify_capture_bound(
    frame: &PursuitFrame,
    controls: &[EvaderControl],
    opts: &SimulationOptions,
) -> Result<CaptureBoundReport> {
    let report = check_capture_bound(frame, controls, opts, None)?;
    if let Some(f) = report.first_failure() {
        return Err(Error::VerificationFailed {
            control: f.control.clone(),
            reason: match f.tau {
                None => format!("no capture by eta = {}", report.eta_upper),
                Some(t) => format!(
                    "tau = {t} vs eta = {}, decay excess {:e}",
                    report.eta_upper, f.decay_excess
                ),
            },
        });
    }
    Ok(report)
}

/// Sum of per-pursuer decrement rates; equals [`lambda`] on the ball.
pub fn lambda_by_terms(v: &Vec2l, frame: &PursuitFrame) -> Result<f64> {
    frame
        .directions
        .iter()
        .map(|e| omega_decrement_rate(v, e))
        .sum()
}
