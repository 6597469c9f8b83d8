//! Pathwise integration of the switched delay system with sampled,
//! intermittent feedback.
//!
//! The scheme on the grid `t_k = kΔ` is
//!
//! ```text
//! x_{k+1} = x_k + [f̃(x_k, x_{h,k}, r_k, t_k) + I(t_k) u(x(v(t_k)), r(v(t_k)), t_k)] Δ
//!               + g(x_k, x_{h,k}, r_k, t_k) ΔB_k
//! ```
//!
//! with the tamed drift `f̃ = f / (1 + Δ|f|)` and `x_{h,k}` interpolated
//! linearly at `t_k − h(t_k)`. The mode path is sampled exactly first, then
//! the Gaussian increments are drawn from the same stream.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{config, Result};
use crate::markov::{sample_path, ModePath};
use crate::model::{ControlSchedule, SystemSpec};
use crate::rng::path_rng;

/// Slack when checking that `δ/Δ` and `horizon/Δ` are integers.
const GRID_SNAP: f64 = 1e-9;

/// Grid layout shared by single paths and ensembles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan {
    pub step: f64,
    pub n_steps: usize,
    /// Grid steps between observations, `δ/Δ`.
    pub obs_every: usize,
}

impl StepPlan {
    pub fn new(spec: &SystemSpec, schedule: &ControlSchedule, horizon: f64, step: f64) -> Result<Self> {
        schedule.validate().map_err(|e| config(e.to_string()))?;
        if !(step > 0.0) || !step.is_finite() {
            return Err(config(format!("step {step} must be positive")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(config(format!("horizon {horizon} must be positive")));
        }
        let ratio = schedule.obs_gap / step;
        let m = ratio.round();
        if m < 1.0 || (ratio - m).abs() > GRID_SNAP * m {
            return Err(config(format!(
                "observation gap delta = {} is not a multiple of the step {step}",
                schedule.obs_gap
            )));
        }
        let h_lower = spec.delay.h_lower;
        if step > h_lower * (1.0 + GRID_SNAP) {
            return Err(config(format!(
                "step {step} exceeds the minimum delay h' = {h_lower}; the delayed state would be read ahead"
            )));
        }
        let n = horizon / step;
        let n_steps = if (n - n.round()).abs() <= GRID_SNAP * n.max(1.0) {
            n.round()
        } else {
            n.ceil()
        } as usize;
        Ok(Self {
            step,
            n_steps: n_steps.max(1),
            obs_every: m as usize,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.n_steps)
    }
}

/// What the integrator knows at grid point `k`, before stepping.
#[derive(Debug)]
pub struct GridPoint<'a> {
    pub k: usize,
    pub t: f64,
    pub x: &'a [f64],
    pub mode: usize,
    pub obs_x: &'a [f64],
    pub obs_mode: usize,
    pub control_on: bool,
}

/// Past states on the grid, kept for `τ/Δ` steps.
struct DelayBuffer {
    dim: usize,
    cap: usize,
    data: Vec<f64>,
}

impl DelayBuffer {
    fn new(dim: usize, tau: f64, step: f64) -> Self {
        let cap = (tau / step).ceil() as usize + 3;
        Self {
            dim,
            cap,
            data: vec![0.0; cap * dim],
        }
    }

    fn push(&mut self, k: usize, x: &[f64]) {
        let i = (k % self.cap) * self.dim;
        self.data[i..i + self.dim].copy_from_slice(x);
    }

    fn get(&self, k: usize) -> &[f64] {
        let i = (k % self.cap) * self.dim;
        &self.data[i..i + self.dim]
    }
}

/// Runs one path on `plan`, calling `visit` at every grid point including
/// the last. `noise` writes the Brownian increment over `[t_k, t_{k+1}]`.
///
/// Returns the first time a non-finite state appeared; nothing is visited
/// from that time on.
pub fn integrate_driven(
    spec: &SystemSpec,
    schedule: &ControlSchedule,
    plan: &StepPlan,
    controlled: bool,
    modes: &ModePath,
    mut noise: impl FnMut(usize, &mut [f64]),
    mut visit: impl FnMut(&GridPoint<'_>),
) -> Option<f64> {
    let dim = spec.dim();
    let nd = spec.noise_dim();
    let dt = plan.step;
    let mut buffer = DelayBuffer::new(dim, spec.delay.tau(), dt);
    let mut cursor = modes.cursor();

    let mut x = vec![0.0; dim];
    spec.history.eval_into(0.0, &mut x);
    let mut obs_x = x.clone();
    let mut obs_mode = spec.history.r0;
    let mut y = vec![0.0; dim];
    let mut f = vec![0.0; dim];
    let mut u = vec![0.0; dim];
    let mut g = vec![0.0; dim * nd];
    let mut dw = vec![0.0; nd];

    for k in 0..=plan.n_steps {
        let t = plan.time(k);
        let mode = cursor.mode_at(t);
        buffer.push(k, &x);
        if k % plan.obs_every == 0 {
            obs_x.copy_from_slice(&x);
            obs_mode = mode;
        }
        let control_on = controlled && schedule.indicator_at(t);
        visit(&GridPoint {
            k,
            t,
            x: &x,
            mode,
            obs_x: &obs_x,
            obs_mode,
            control_on,
        });
        if k == plan.n_steps {
            break;
        }

        let s = t - spec.delay_at(t);
        delayed_state(spec, &buffer, s, dt, k, &mut y);
        spec.drift_into(&x, &y, mode, t, &mut f);
        spec.diffusion_into(&x, &y, mode, t, &mut g);
        let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tame = 1.0 / (1.0 + dt * norm);
        if control_on {
            spec.control_into(&obs_x, obs_mode, t, &mut u);
        } else {
            u.fill(0.0);
        }
        noise(k, &mut dw);
        let mut finite = true;
        for i in 0..dim {
            let diffusion: f64 = (0..nd).map(|j| g[i * nd + j] * dw[j]).sum();
            x[i] += (f[i] * tame + u[i]) * dt + diffusion;
            finite &= x[i].is_finite();
        }
        if !finite {
            return Some(plan.time(k + 1));
        }
    }
    None
}

/// `x(s)` from the history for `s ≤ 0`, else interpolated on the grid.
fn delayed_state(spec: &SystemSpec, buffer: &DelayBuffer, s: f64, dt: f64, k: usize, out: &mut [f64]) {
    if s <= 0.0 {
        spec.history.eval_into(s, out);
        return;
    }
    let pos = s / dt;
    let mut j = pos.floor() as usize;
    let mut w = pos - j as f64;
    if j >= k {
        j = k;
        w = 0.0;
    }
    let a = buffer.get(j);
    if w == 0.0 {
        out.copy_from_slice(a);
        return;
    }
    let b = buffer.get(j + 1);
    for (o, (p, q)) in out.iter_mut().zip(a.iter().zip(b)) {
        *o = p + w * (q - p);
    }
}

/// Samples the mode path and increments for one path from `rng`, then
/// integrates.
pub fn integrate_with_rng<R: Rng + ?Sized>(
    spec: &SystemSpec,
    schedule: &ControlSchedule,
    plan: &StepPlan,
    controlled: bool,
    rng: &mut R,
    visit: impl FnMut(&GridPoint<'_>),
) -> Result<Option<f64>> {
    let modes = sample_path(&spec.generator, spec.history.r0, plan.horizon(), rng)?;
    let sd = plan.step.sqrt();
    let noise = |_: usize, dw: &mut [f64]| {
        for v in dw.iter_mut() {
            *v = sd * rng.sample::<f64, _>(StandardNormal);
        }
    };
    Ok(integrate_driven(spec, schedule, plan, controlled, &modes, noise, visit))
}

/// One stored path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub step: f64,
    pub dim: usize,
    pub times: Vec<f64>,
    /// Row-major, `dim` values per grid point.
    pub states: Vec<f64>,
    /// Zero-based.
    pub modes: Vec<usize>,
    pub obs_states: Vec<f64>,
    pub obs_modes: Vec<usize>,
    pub control_on: Vec<bool>,
    /// First time a non-finite state appeared; the path stops before it.
    pub exploded: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn obs_state(&self, k: usize) -> &[f64] {
        &self.obs_states[k * self.dim..(k + 1) * self.dim]
    }

    /// CSV with columns `t,x,mode,obs_mode,control_on` (`x1,x2,...` for
    /// vector states). Modes are one-based, `control_on` is 0 or 1.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        if self.dim == 1 {
            header.push("x".into());
        } else {
            header.extend((1..=self.dim).map(|i| format!("x{i}")));
        }
        header.extend(["mode", "obs_mode", "control_on"].map(String::from));
        wtr.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![self.times[k].to_string()];
            row.extend(self.state(k).iter().map(|v| v.to_string()));
            row.push((self.modes[k] + 1).to_string());
            row.push((self.obs_modes[k] + 1).to_string());
            row.push(u8::from(self.control_on[k]).to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    fn recorder(step: f64, dim: usize, capacity: usize) -> Self {
        Self {
            step,
            dim,
            times: Vec::with_capacity(capacity),
            states: Vec::with_capacity(capacity * dim),
            modes: Vec::with_capacity(capacity),
            obs_states: Vec::with_capacity(capacity * dim),
            obs_modes: Vec::with_capacity(capacity),
            control_on: Vec::with_capacity(capacity),
            exploded: None,
        }
    }

    fn record(&mut self, p: &GridPoint<'_>) {
        self.times.push(p.t);
        self.states.extend_from_slice(p.x);
        self.modes.push(p.mode);
        self.obs_states.extend_from_slice(p.obs_x);
        self.obs_modes.push(p.obs_mode);
        self.control_on.push(p.control_on);
    }
}

fn integrate_stream(
    spec: &SystemSpec,
    schedule: &ControlSchedule,
    plan: &StepPlan,
    controlled: bool,
    master_seed: u64,
    index: u64,
) -> Result<Trajectory> {
    let mut traj = Trajectory::recorder(plan.step, spec.dim(), plan.n_steps + 1);
    let mut rng = path_rng(master_seed, index);
    traj.exploded = integrate_with_rng(spec, schedule, plan, controlled, &mut rng, |p| traj.record(p))?;
    Ok(traj)
}

/// Integrates one path on stream `(seed, 0)`.
///
/// `controlled = false` drops the control term entirely.
pub fn integrate(
    spec: &SystemSpec,
    schedule: &ControlSchedule,
    horizon: f64,
    step: f64,
    seed: u64,
    controlled: bool,
) -> Result<Trajectory> {
    let plan = StepPlan::new(spec, schedule, horizon, step)?;
    integrate_stream(spec, schedule, &plan, controlled, seed, 0)
}

/// Integrates `n_paths` stored paths in parallel; path `k` uses stream
/// `(master_seed, k)`.
pub fn integrate_ensemble(
    spec: &SystemSpec,
    schedule: &ControlSchedule,
    horizon: f64,
    step: f64,
    master_seed: u64,
    n_paths: usize,
    controlled: bool,
) -> Result<Vec<Trajectory>> {
    if n_paths == 0 {
        return Err(config("n_paths must be at least 1"));
    }
    let plan = StepPlan::new(spec, schedule, horizon, step)?;
    (0..n_paths as u64)
        .into_par_iter()
        .map(|k| integrate_stream(spec, schedule, &plan, controlled, master_seed, k))
        .collect()
}
