//! Integration of the running coupling `d g_r/d𝗍 = βₙ(g_r)` in the
//! renormalisation time `𝗍 = log t/T`, continued through turning points.
//!
//! The beta-function has infinite slope at `|g_r| = 1`, so the adaptive
//! stepper is stopped at `|g_r| = 1 − ε`. From that state the local solution
//! `g_r = sin(θ)`, `θ = g̃ e^𝗍`, is rebuilt with `θ = arcsinₙ(g_r)`, the turning
//! point `θ = (n + ½)π` is crossed analytically to the mirror point
//! `|g_r| = 1 − ε` on branch `n + 1`, and stepping resumes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coupling::{arcsin_n, beta_branch, beta_one_loop};
use crate::error::{ensure, Error, Result};
use crate::ode::{dopri_step, integrate, StepControl};

/// Point on a coupling trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    /// Renormalisation time `𝗍`.
    pub t: f64,
    pub g_r: f64,
    /// Number of turning points passed, i.e. the `n` of `βₙ`.
    pub branch_count: u32,
}

impl FlowState {
    pub fn beta(&self) -> f64 {
        beta_branch(self.branch_count, self.g_r.clamp(-1.0, 1.0)).unwrap_or(0.0)
    }

    /// `θ = arcsinₙ(g_r)`, the phase `g₀e^𝗍` of the local analytic solution.
    pub fn phase(&self) -> f64 {
        arcsin_n(self.branch_count, self.g_r)
    }

    /// `dβ/d𝗍` along the flow, `θ (cos θ − θ sin θ)`.
    fn beta_rate(&self) -> f64 {
        let theta = self.phase();
        let parity = if self.branch_count.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let cos_theta = parity * (1.0 - self.g_r * self.g_r).max(0.0).sqrt();
        theta * (cos_theta - theta * self.g_r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Target accuracy of `g_r` along the trajectory.
    pub tolerance: f64,
    /// Distance `ε` from `|g_r| = 1` at which the turning point is crossed
    /// analytically.
    pub turning_epsilon: f64,
    pub max_steps: usize,
    /// Times inside the span that must appear exactly in the trajectory.
    #[serde(default)]
    pub checkpoints: Vec<f64>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            turning_epsilon: 1e-9,
            max_steps: 2_000_000,
            checkpoints: Vec::new(),
        }
    }
}

impl FlowOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn checkpoint(mut self, t: f64) -> Self {
        self.checkpoints.push(t);
        self
    }

    fn step_control(&self) -> StepControl {
        // Errors made close to |g_r| = 1 are amplified by 1/√(2ε) when the
        // phase is rebuilt; observed global/local error ratio is ~1e6.
        let local = (self.tolerance * 1e-7).clamp(1e-14, 1e-10);
        StepControl {
            rtol: local,
            atol: local,
        }
    }
}

/// Branch `n` with `θ ∈ [nπ − π/2, nπ + π/2)`.
fn branch_of_phase(theta: f64) -> u32 {
    (theta / PI + 0.5).floor().max(0.0) as u32
}

fn parity(n: u32) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Integrates the exact flow for bare coupling `g₀ ≥ 0` over `[𝗍₀, 𝗍₁]`,
/// starting from `g_r(𝗍₀) = sin(g₀ e^{𝗍₀})`.
///
/// The returned trajectory contains every accepted step, the analytic
/// turning points (`|g_r| = 1`) and both endpoints.
pub fn flow_integrate(g0: f64, span: (f64, f64), options: &FlowOptions) -> Result<Vec<FlowState>> {
    let (t0, t1) = span;
    ensure(
        g0.is_finite() && g0 >= 0.0,
        "g0",
        "must be finite and >= 0",
        g0,
    )?;
    ensure(
        t0.is_finite() && t1.is_finite(),
        "t0",
        "span must be finite",
        t0,
    )?;
    ensure(t0 < t1, "t1", "must exceed t0", t1)?;
    ensure(
        options.tolerance > 0.0,
        "tol",
        "must be > 0",
        options.tolerance,
    )?;
    ensure(
        options.turning_epsilon > 0.0 && options.turning_epsilon < 0.5,
        "turning_epsilon",
        "must lie in (0, 0.5)",
        options.turning_epsilon,
    )?;

    let theta0 = g0 * t0.exp();
    let mut state = FlowState {
        t: t0,
        g_r: theta0.sin(),
        branch_count: branch_of_phase(theta0),
    };
    let mut out = vec![state];
    if g0 == 0.0 {
        out.push(FlowState { t: t1, ..state });
        return Ok(out);
    }

    let mut checkpoints: Vec<f64> = options
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| c > t0 && c < t1)
        .collect();
    checkpoints.sort_by(f64::total_cmp);
    let control = options.step_control();
    let threshold = 1.0 - options.turning_epsilon;
    let span_len = t1 - t0;
    let h_min = 1e-15 * span_len.max(1.0);
    let mut h = (0.1 / theta0.max(1.0)).min(span_len);
    // Phase is known exactly at the start; used if we begin inside the turning zone.
    let mut exact_phase = Some(theta0);

    for _ in 0..options.max_steps {
        if state.t >= t1 {
            return Ok(out);
        }
        let n = state.branch_count;
        let target = parity(n);

        if let Some(theta) = exact_phase.filter(|_| state.g_r * target <= -threshold) {
            // Starting just past a turning point: follow the local solution
            // out of the zone where β has infinite slope.
            let theta_exit = arcsin_n(n, -target * threshold);
            if theta_exit > theta {
                let scale = theta * (-state.t).exp();
                let t_exit = (theta_exit / scale).ln();
                out.extend(
                    checkpoints
                        .iter()
                        .filter(|&&c| c < t_exit.min(t1))
                        .map(|&c| FlowState {
                            t: c,
                            g_r: (scale * c.exp()).sin(),
                            branch_count: n,
                        }),
                );
                if t_exit >= t1 {
                    out.push(FlowState {
                        t: t1,
                        g_r: (scale * t1.exp()).sin(),
                        branch_count: n,
                    });
                    return Ok(out);
                }
                state = FlowState {
                    t: t_exit,
                    g_r: -target * threshold,
                    branch_count: n,
                };
                out.push(state);
                exact_phase = None;
                continue;
            }
        }
        if state.g_r * target >= threshold {
            let theta_a = exact_phase.unwrap_or_else(|| state.phase());
            match cross_turning_point(state, theta_a, t1, &checkpoints, &mut out) {
                Some(next) => {
                    state = next;
                    exact_phase = None;
                    continue;
                }
                None => return Ok(out),
            }
        }
        exact_phase = None;

        let rhs = |g: f64| beta_branch(n, g.clamp(-1.0, 1.0)).unwrap_or(0.0);
        let stop = checkpoints
            .iter()
            .copied()
            .find(|&c| c > state.t)
            .unwrap_or(t1);
        let remaining = stop - state.t;
        let step = h.min(remaining);
        let (g_new, err) = dopri_step(&rhs, state.g_r, step);
        let norm = control.error_norm(state.g_r, g_new, err);
        if norm > 1.0 {
            if step <= h_min {
                return Err(Error::StepSizeUnderflow {
                    t: state.t,
                    g_r: state.g_r,
                    branch: n,
                });
            }
            h = control.next_step(step, norm);
            continue;
        }

        if g_new * target > threshold {
            // Locate the step length landing exactly on the threshold.
            let landing = |s: f64| dopri_step(&rhs, state.g_r, s).0 * target - threshold;
            let (mut lo, mut hi) = (0.0, step);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if landing(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            state = FlowState {
                t: state.t + hi,
                g_r: target * threshold,
                branch_count: n,
            };
            out.push(state);
            h = step;
            continue;
        }

        let t_new = if step == remaining {
            stop
        } else {
            state.t + step
        };
        state = FlowState {
            t: t_new,
            g_r: g_new,
            branch_count: n,
        };
        out.push(state);
        h = control.next_step(step, norm);
    }
    Err(Error::StepSizeUnderflow {
        t: state.t,
        g_r: state.g_r,
        branch: state.branch_count,
    })
}

/// Crosses the turning point ahead of `state` along the local solution with
/// phase `theta_a` at `state.t`. Pushes the turning point and the mirror
/// state (or the analytic endpoint at `t1`) and returns the state to resume
/// from, if any.
fn cross_turning_point(
    state: FlowState,
    theta_a: f64,
    t1: f64,
    checkpoints: &[f64],
    out: &mut Vec<FlowState>,
) -> Option<FlowState> {
    let n = state.branch_count;
    let scale = theta_a * (-state.t).exp();
    let theta_turn = (f64::from(n) + 0.5) * PI;
    let theta_b = 2.0 * theta_turn - theta_a;
    let t_turn = (theta_turn / scale).ln();
    let t_b = (theta_b / scale).ln();

    let local = |t: f64, branch_count| FlowState {
        t,
        g_r: (scale * t.exp()).sin(),
        branch_count,
    };
    let interior = |lo: f64, hi: f64| {
        checkpoints
            .iter()
            .copied()
            .filter(move |&c| c > lo && c < hi.min(t1))
    };
    out.extend(interior(state.t, t_turn).map(|c| local(c, n)));
    if t_turn >= t1 {
        out.push(local(t1, n));
        return None;
    }
    out.push(FlowState {
        t: t_turn,
        g_r: parity(n),
        branch_count: n + 1,
    });
    out.extend(interior(t_turn, t_b).map(|c| local(c, n + 1)));
    if t_b >= t1 {
        out.push(local(t1, n + 1));
        return None;
    }
    let next = FlowState {
        t: t_b,
        g_r: state.g_r,
        branch_count: n + 1,
    };
    out.push(next);
    Some(next)
}

/// Cumulative `c(𝗍) = ∫ β² d𝗍` along a trajectory, with `c(𝗍₀) = 0`.
///
/// Each interval uses the cubic Hermite rule with `d(β²)/d𝗍 = 2β dβ/d𝗍`
/// taken from the states themselves.
pub fn c_function(trajectory: &[FlowState]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(trajectory.len());
    let Some(first) = trajectory.first() else {
        return out;
    };
    let mut c = 0.0;
    out.push((first.t, c));
    for pair in trajectory.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let h = b.t - a.t;
        let (beta_a, beta_b) = (a.beta(), b.beta());
        let (fa, fb) = (beta_a * beta_a, beta_b * beta_b);
        let (da, db) = (2.0 * beta_a * a.beta_rate(), 2.0 * beta_b * b.beta_rate());
        let increment = 0.5 * h * (fa + fb) + h * h / 12.0 * (da - db);
        c += increment.max(0.0);
        out.push((b.t, c));
    }
    out
}

/// Sample of a trajectory that carries no branch information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSample {
    pub t: f64,
    pub g_r: f64,
}

/// 1-loop flow `d g_r/d𝗍 = g_r − g_r³/3` through `g_r(anchor_t) = anchor_g`,
/// integrated in both directions to cover `[t0, t1]`.
pub fn one_loop_flow(
    anchor_t: f64,
    anchor_g: f64,
    span: (f64, f64),
    tolerance: f64,
) -> Result<Vec<CouplingSample>> {
    let (t0, t1) = span;
    ensure(t0 < t1, "t1", "must exceed t0", t1)?;
    ensure(
        (t0..=t1).contains(&anchor_t),
        "anchor_t",
        "must lie inside the span",
        anchor_t,
    )?;
    ensure(anchor_g.is_finite(), "g_r", "must be finite", anchor_g)?;
    ensure(tolerance > 0.0, "tol", "must be > 0", tolerance)?;
    let control = StepControl {
        rtol: tolerance * 1e-2,
        atol: tolerance * 1e-2,
    };
    let underflow = || Error::StepSizeUnderflow {
        t: anchor_t,
        g_r: anchor_g,
        branch: 0,
    };
    let backward = integrate(&beta_one_loop, anchor_t, anchor_g, t0, control, 1_000_000)
        .ok_or_else(underflow)?;
    let forward = integrate(&beta_one_loop, anchor_t, anchor_g, t1, control, 1_000_000)
        .ok_or_else(underflow)?;
    Ok(backward
        .into_iter()
        .rev()
        .chain(forward.into_iter().skip(1))
        .map(|(t, g_r)| CouplingSample { t, g_r })
        .collect())
}
