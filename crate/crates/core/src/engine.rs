//! Trajectory integration for piecewise-constant controls.
//!
//! Velocities are constant between switching times, so stepping
//! `position += velocity * h` integrates the equations of motion exactly. Under
//! the pursuit strategy every gap `Omega_i` is affine in time on a step, so
//! the capture instant is found in closed form rather than by bracketing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::PursuitFrame;
use crate::strategies::{omega_decrement_rate, pursuer_control, EvaderControl, ADMISSIBILITY_TOL};
use crate::vectorspace::{dot, norm, Vec2l};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub dt: f64,
    pub horizon: f64,
    /// Distance at which recorded (non-strategy) pursuers count as capturing.
    pub capture_tolerance: f64,
    /// Keep every `record_every`-th grid point (the last one is always kept).
    pub record_every: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            horizon: 10.0,
            capture_tolerance: 1e-9,
            record_every: 1,
        }
    }
}

impl SimulationOptions {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            dt,
            horizon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Usage(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::Usage(format!(
                "horizon must be >= 0, got {}",
                self.horizon
            )));
        }
        if !(self.capture_tolerance >= 0.0) {
            return Err(Error::Usage("capture tolerance must be >= 0".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Usage("record_every must be positive".into()));
        }
        Ok(())
    }

    fn num_steps(&self) -> usize {
        if self.horizon == 0.0 {
            0
        } else {
            ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
        }
    }
}

/// Pursuer velocities held constant on steps of length `dt`; the last step's
/// values persist afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuerControlRecord {
    pub dt: f64,
    /// `values[step][pursuer]`.
    pub values: Vec<Vec<Vec2l>>,
}

impl PursuerControlRecord {
    pub fn new(dt: f64, values: Vec<Vec<Vec2l>>) -> Result<Self> {
        let rec = Self { dt, values };
        rec.check()?;
        Ok(rec)
    }

    fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Usage("recorded control dt must be positive".into()));
        }
        let Some(first) = self.values.first() else {
            return Err(Error::Usage("recorded controls are empty".into()));
        };
        for (k, step) in self.values.iter().enumerate() {
            if step.len() != first.len() {
                return Err(Error::Usage(format!(
                    "step {k} has {} pursuer controls, expected {}",
                    step.len(),
                    first.len()
                )));
            }
            for (i, u) in step.iter().enumerate() {
                let n = norm(u);
                if n > 1.0 + ADMISSIBILITY_TOL {
                    return Err(Error::InadmissibleControl {
                        who: format!("pursuer {}", i + 1),
                        norm: n,
                        time: k as f64 * self.dt,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let rec: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        rec.check()?;
        Ok(rec)
    }

    pub fn num_pursuers(&self) -> usize {
        self.values[0].len()
    }

    fn step_index(&self, t: f64) -> usize {
        ((t / self.dt).floor().max(0.0) as usize).min(self.values.len() - 1)
    }

    fn value(&self, pursuer: usize, t: f64) -> &Vec2l {
        &self.values[self.step_index(t)][pursuer]
    }

    fn next_switch_after(&self, t: f64) -> Option<f64> {
        let k = self.step_index(t) + 1;
        (k < self.values.len()).then_some(k as f64 * self.dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PursuerMode {
    /// Every pursuer plays the closed-form counter-strategy.
    PaperStrategy,
    Recorded(PursuerControlRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureEvent {
    /// Zero-based pursuer index.
    pub pursuer_index: usize,
    pub time: f64,
    pub position: Vec2l,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    pub evader_traj: Vec<Vec2l>,
    /// `pursuer_trajs[i][k]` is pursuer `i` at `times[k]`.
    pub pursuer_trajs: Vec<Vec<Vec2l>>,
    /// Present under the pursuit strategy.
    pub omega_traces: Option<Vec<Vec<f64>>>,
    pub capture: Option<CaptureEvent>,
    /// Capture distance used for recorded pursuers; `None` when capture is
    /// detected by exact gap crossing.
    pub capture_tolerance: Option<f64>,
}

impl SimulationResult {
    pub fn num_pursuers(&self) -> usize {
        self.pursuer_trajs.len()
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("results hold at least the initial state")
    }
}

/// Zero of the gap `omega - rate * s` on `[0, dt]`, if it is reached.
pub fn capture_crossing_time(omega_at_step_start: f64, rate: f64, dt: f64) -> Option<f64> {
    (rate > 0.0 && omega_at_step_start - rate * dt <= 0.0).then(|| omega_at_step_start / rate)
}

struct State {
    t: f64,
    y: Vec2l,
    xs: Vec<Vec2l>,
    omega: Vec<f64>,
}

struct Recorder {
    result: SimulationResult,
}

impl Recorder {
    fn push(&mut self, s: &State) {
        let r = &mut self.result;
        r.times.push(s.t);
        r.evader_traj.push(s.y.clone());
        for (traj, x) in r.pursuer_trajs.iter_mut().zip(&s.xs) {
            traj.push(x.clone());
        }
        if let Some(om) = r.omega_traces.as_mut() {
            for (trace, w) in om.iter_mut().zip(&s.omega) {
                trace.push(*w);
            }
        }
    }
}

fn admissible(v: &Vec2l, who: impl FnOnce() -> String, time: f64) -> Result<()> {
    let n = norm(v);
    if n > 1.0 + ADMISSIBILITY_TOL {
        return Err(Error::InadmissibleControl {
            who: who(),
            norm: n,
            time,
        });
    }
    Ok(())
}

/// Runs the game from the frame's initial positions until capture or the
/// horizon, whichever comes first.
pub fn simulate(
    frame: &PursuitFrame,
    evader: &EvaderControl,
    pursuer_mode: &PursuerMode,
    opts: &SimulationOptions,
) -> Result<SimulationResult> {
    opts.validate()?;
    let m = frame.num_pursuers();
    if evader.dim() != frame.dim {
        return Err(Error::DimensionMismatch {
            expected: frame.dim,
            found: evader.dim(),
        });
    }
    let paper = matches!(pursuer_mode, PursuerMode::PaperStrategy);
    if let PursuerMode::Recorded(rec) = pursuer_mode {
        if rec.num_pursuers() != m {
            return Err(Error::Usage(format!(
                "recorded controls cover {} pursuers, scenario has {m}",
                rec.num_pursuers()
            )));
        }
        if rec.values[0][0].dim() != frame.dim {
            return Err(Error::DimensionMismatch {
                expected: frame.dim,
                found: rec.values[0][0].dim(),
            });
        }
    }

    let mut state = State {
        t: 0.0,
        y: frame.evader0.clone(),
        xs: frame.pursuers0.clone(),
        omega: frame.omega0.clone(),
    };
    let mut rec = Recorder {
        result: SimulationResult {
            times: Vec::new(),
            evader_traj: Vec::new(),
            pursuer_trajs: vec![Vec::new(); m],
            omega_traces: paper.then(|| vec![Vec::new(); m]),
            capture: None,
            capture_tolerance: (!paper).then_some(opts.capture_tolerance),
        },
    };
    rec.push(&state);

    let steps = opts.num_steps();
    let mut us: Vec<Vec2l> = vec![Vec2l::zeros(frame.dim); m];
    let mut rates = vec![0.0; m];
    let mut anchor: Option<Anchor> = None;
    for k in 0..steps {
        let t_end = if k + 1 == steps {
            opts.horizon
        } else {
            (k + 1) as f64 * opts.dt
        };
        let slack = 1e-12 * t_end.abs().max(1.0);
        while state.t < t_end {
            let mut s_end = t_end;
            let mut switches = vec![evader.next_switch_after(state.t)];
            if let PursuerMode::Recorded(r) = pursuer_mode {
                switches.push(r.next_switch_after(state.t));
            }
            for sw in switches.into_iter().flatten() {
                if sw > state.t && sw < s_end - slack {
                    s_end = sw;
                }
            }
            let h = s_end - state.t;
            let mid = state.t + 0.5 * h;
            let v = evader.value_at(mid);
            admissible(v, || "evader".into(), state.t)?;

            match pursuer_mode {
                PursuerMode::PaperStrategy => {
                    for i in 0..m {
                        let e = &frame.directions[i];
                        us[i] = pursuer_control(v, e)?;
                        rates[i] = omega_decrement_rate(v, e)?;
                    }
                }
                PursuerMode::Recorded(r) => {
                    for (i, u) in us.iter_mut().enumerate() {
                        *u = r.value(i, mid).clone();
                        admissible(u, || format!("pursuer {}", i + 1), state.t)?;
                    }
                }
            }
            if !anchor.as_ref().is_some_and(|a| a.v == *v && a.us == us) {
                anchor = Some(Anchor::at(&state, v, &us, &rates));
            }
            let a = anchor.as_ref().expect("anchor set above");
            if paper {
                let span = s_end - a.t;
                let hit = (0..m)
                    .filter_map(|i| {
                        capture_crossing_time(a.omega[i], a.rates[i], span).map(|s| (s, i))
                    })
                    .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                if let Some((s, i)) = hit {
                    a.eval(&mut state, a.t + s);
                    state.omega[i] = 0.0;
                    rec.result.capture = Some(CaptureEvent {
                        pursuer_index: i,
                        time: state.t,
                        position: state.y.clone(),
                    });
                    rec.push(&state);
                    return Ok(rec.result);
                }
            }
            a.eval(&mut state, s_end);
            state.t = s_end;
            if s_end == t_end {
                break;
            }
        }
        state.t = t_end;

        if !paper {
            let hit = state
                .xs
                .iter()
                .position(|x| norm(&(&state.y - x)) <= opts.capture_tolerance);
            if let Some(i) = hit {
                rec.result.capture = Some(CaptureEvent {
                    pursuer_index: i,
                    time: state.t,
                    position: state.y.clone(),
                });
                rec.push(&state);
                return Ok(rec.result);
            }
        }
        if (k + 1) % opts.record_every == 0 || k + 1 == steps {
            rec.push(&state);
        }
    }
    Ok(rec.result)
}

/// Start of a stretch of constant velocities. States inside the stretch are
/// evaluated from here, so rounding does not accumulate across grid steps.
struct Anchor {
    t: f64,
    y: Vec2l,
    xs: Vec<Vec2l>,
    omega: Vec<f64>,
    v: Vec2l,
    us: Vec<Vec2l>,
    rates: Vec<f64>,
}

impl Anchor {
    fn at(state: &State, v: &Vec2l, us: &[Vec2l], rates: &[f64]) -> Self {
        Self {
            t: state.t,
            y: state.y.clone(),
            xs: state.xs.clone(),
            omega: state.omega.clone(),
            v: v.clone(),
            us: us.to_vec(),
            rates: rates.to_vec(),
        }
    }

    fn eval(&self, state: &mut State, t: f64) {
        let h = t - self.t;
        state.y = self.y.axpy(h, &self.v);
        for ((x, x0), u) in state.xs.iter_mut().zip(&self.xs).zip(&self.us) {
            *x = x0.axpy(h, u);
        }
        for ((w, w0), r) in state.omega.iter_mut().zip(&self.omega).zip(&self.rates) {
            *w = w0 - r * h;
        }
        state.t = t;
    }
}

/// `min_i |y(t) - x_i(t)|` at every recorded time.
pub fn min_distance_trace(result: &SimulationResult) -> Vec<(f64, f64)> {
    result
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let d = result
                .pursuer_trajs
                .iter()
                .map(|traj| norm(&(&result.evader_traj[k] - &traj[k])))
                .fold(f64::INFINITY, f64::min);
            (t, d)
        })
        .collect()
}

/// Largest coordinate of `y - x_i` off the initial line of sight `e_i`, over
/// all pursuers and recorded times.
pub fn collinearity_residual(result: &SimulationResult, frame: &PursuitFrame) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, traj) in result.pursuer_trajs.iter().enumerate() {
        let e = &frame.directions[i];
        for (x, y) in traj.iter().zip(&result.evader_traj) {
            let g = y - x;
            let off = g.axpy(-dot(&g, e), e);
            worst = off.coords().iter().fold(worst, |w, c| w.max(c.abs()));
        }
    }
    worst
}
