//! Continuous-time Markov chain paths.
//!
//! Paths are sampled exactly: an exponential holding time with rate `-γ_ii`,
//! then a jump to `j ≠ i` with probability `γ_ij / -γ_ii`. Absorbing modes
//! (`γ_ii = 0`) hold until the horizon.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;
use std::io::Write;

use crate::error::{config, validation, Error, Result};
use crate::model::GeneratorMatrix;
use crate::rng::path_rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModePath {
    jump_times: Vec<f64>,
    modes: Vec<usize>,
    horizon: f64,
}

impl ModePath {
    /// Builds a path from segment start times and modes (zero-based).
    pub fn new(jump_times: Vec<f64>, modes: Vec<usize>, horizon: f64) -> Result<Self> {
        if jump_times.is_empty() || jump_times.len() != modes.len() {
            return Err(validation("mode path needs one mode per segment start"));
        }
        if jump_times[0] != 0.0 {
            return Err(validation("mode path must start at t = 0"));
        }
        for w in jump_times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(validation("jump times must be strictly increasing"));
            }
        }
        for w in modes.windows(2) {
            if w[0] == w[1] {
                return Err(validation("consecutive modes of a path must differ"));
            }
        }
        if !(horizon >= *jump_times.last().unwrap()) {
            return Err(validation("horizon precedes the last jump"));
        }
        Ok(Self {
            jump_times,
            modes,
            horizon,
        })
    }

    /// A path that stays in `mode` for the whole horizon.
    pub fn constant(mode: usize, horizon: f64) -> Self {
        Self {
            jump_times: vec![0.0],
            modes: vec![mode],
            horizon,
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_jumps(&self) -> usize {
        self.jump_times.len() - 1
    }

    /// Right-continuous mode lookup.
    pub fn mode_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || t > self.horizon {
            return Err(Error::Range(format!(
                "time {t} outside the sampled horizon [0, {}]",
                self.horizon
            )));
        }
        Ok(self.modes[self.segment_of(t)])
    }

    fn segment_of(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&s| s <= t) - 1
    }

    /// Total time spent in each mode on `[0, horizon]`.
    pub fn occupation_times(&self, n_modes: usize) -> Vec<f64> {
        let mut occ = vec![0.0; n_modes];
        for (k, &m) in self.modes.iter().enumerate() {
            let end = self.jump_times.get(k + 1).copied().unwrap_or(self.horizon);
            occ[m] += end - self.jump_times[k];
        }
        occ
    }

    /// CSV with columns `jump_time,mode`; modes are written one-based.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["jump_time", "mode"])?;
        for (t, m) in self.jump_times.iter().zip(&self.modes) {
            wtr.write_record([t.to_string(), (m + 1).to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub(crate) fn cursor(&self) -> ModeCursor<'_> {
        ModeCursor { path: self, seg: 0 }
    }
}

/// Forward-only lookup for monotone query times.
pub(crate) struct ModeCursor<'a> {
    path: &'a ModePath,
    seg: usize,
}

impl ModeCursor<'_> {
    pub(crate) fn mode_at(&mut self, t: f64) -> usize {
        let times = &self.path.jump_times;
        while self.seg + 1 < times.len() && times[self.seg + 1] <= t {
            self.seg += 1;
        }
        self.path.modes[self.seg]
    }
}

/// Samples a path on `[0, horizon]` starting from `r0`.
pub fn sample_path<R: Rng + ?Sized>(
    generator: &GeneratorMatrix,
    r0: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<ModePath> {
    let n = generator.n_modes();
    if r0 >= n {
        return Err(config(format!("initial mode {r0} outside 0..{n}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(config(format!("horizon {horizon} must be positive and finite")));
    }
    let mut jump_times = vec![0.0];
    let mut modes = vec![r0];
    let mut t = 0.0;
    let mut mode = r0;
    loop {
        let rate = generator.exit_rate(mode);
        if rate <= 0.0 {
            break;
        }
        let hold = Exp::new(rate)
            .map_err(|e| validation(format!("invalid exit rate {rate}: {e}")))?
            .sample(rng);
        t += hold;
        if t > horizon {
            break;
        }
        let mut u = rng.random::<f64>() * rate;
        let mut next = mode;
        for j in (0..n).filter(|&j| j != mode) {
            let r = generator.rate(mode, j);
            if r <= 0.0 {
                continue;
            }
            next = j;
            if u < r {
                break;
            }
            u -= r;
        }
        mode = next;
        jump_times.push(t);
        modes.push(mode);
    }
    Ok(ModePath {
        jump_times,
        modes,
        horizon,
    })
}

/// `sample_path` on stream `(seed, 0)`.
pub fn sample_path_seeded(generator: &GeneratorMatrix, r0: usize, horizon: f64, seed: u64) -> Result<ModePath> {
    sample_path(generator, r0, horizon, &mut path_rng(seed, 0))
}
