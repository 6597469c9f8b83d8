//! Monte Carlo moments `E|x(t)|^q̄`, log-linear decay fits and the
//! comparison with a certified rate.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::certify::StabilityCertificate;
use crate::error::{config, Error, Result};
use crate::model::{ControlSchedule, SystemSpec};
use crate::rng::path_rng;
use crate::simulate::{integrate_with_rng, StepPlan};

/// Largest number of output rows in a moment series.
pub const MAX_ROWS: usize = 2000;
/// Paths per reduction chunk. Chunks are merged in index order, so the
/// result does not depend on the number of worker threads.
const CHUNK: usize = 8;
/// Slopes above `-DECAY_FLOOR` count as no decay when no certificate applies.
pub const DECAY_FLOOR: f64 = 0.05;

/// Grid indices kept in the output: every `stride`-th step and the last.
pub fn output_indices(n_steps: usize, max_rows: usize) -> Vec<usize> {
    let max_rows = max_rows.max(2);
    let mut stride = n_steps.div_ceil(max_rows - 1).max(1);
    loop {
        let rows = n_steps / stride + 1 + usize::from(!n_steps.is_multiple_of(stride));
        if rows <= max_rows {
            break;
        }
        stride += 1;
    }
    let mut idx: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if *idx.last().unwrap() != n_steps {
        idx.push(n_steps);
    }
    idx
}

/// Running per-time moment sums with Welford updates and Chan merges.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    qbar: Vec<f64>,
    n_times: usize,
    paths: u64,
    count: Vec<u64>,
    /// `[q][time]` flattened.
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(qbar: &[f64], n_times: usize) -> Self {
        let n = qbar.len() * n_times;
        Self {
            qbar: qbar.to_vec(),
            n_times,
            paths: 0,
            count: vec![0; n_times],
            mean: vec![0.0; n],
            m2: vec![0.0; n],
        }
    }

    /// Adds one path given `|x|` at the output times. A short slice means
    /// the path exploded after its last entry.
    pub fn add_path(&mut self, norms: &[f64]) {
        self.paths += 1;
        for (i, &r) in norms.iter().enumerate().take(self.n_times) {
            self.count[i] += 1;
            let n = self.count[i] as f64;
            for (j, &q) in self.qbar.iter().enumerate() {
                let v = r.powf(q);
                let at = j * self.n_times + i;
                let d = v - self.mean[at];
                self.mean[at] += d / n;
                self.m2[at] += d * (v - self.mean[at]);
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.qbar, other.qbar);
        assert_eq!(self.n_times, other.n_times);
        self.paths += other.paths;
        for i in 0..self.n_times {
            let (na, nb) = (self.count[i] as f64, other.count[i] as f64);
            if nb == 0.0 {
                continue;
            }
            let n = na + nb;
            for j in 0..self.qbar.len() {
                let at = j * self.n_times + i;
                let d = other.mean[at] - self.mean[at];
                self.mean[at] += d * nb / n;
                self.m2[at] += other.m2[at] + d * d * na * nb / n;
            }
            self.count[i] += other.count[i];
        }
    }

    pub fn finish(&self, times: Vec<f64>) -> Result<MomentSeries> {
        assert_eq!(times.len(), self.n_times);
        if self.paths == 0 || self.count.last().is_none_or(|&c| c == 0) {
            return Err(Error::Estimation(format!(
                "all {} paths exploded before the horizon",
                self.paths
            )));
        }
        let n_paths = self.paths as f64;
        let mut means = Vec::new();
        let mut std_errors = Vec::new();
        for j in 0..self.qbar.len() {
            let range = j * self.n_times..(j + 1) * self.n_times;
            means.push(self.mean[range.clone()].to_vec());
            std_errors.push(
                range
                    .zip(&self.count)
                    .map(|(at, &c)| {
                        if c < 2 {
                            0.0
                        } else {
                            let c = c as f64;
                            (self.m2[at] / (c - 1.0) / c).sqrt()
                        }
                    })
                    .collect(),
            );
        }
        Ok(MomentSeries {
            times,
            qbar: self.qbar.clone(),
            means,
            std_errors,
            n_paths: self.paths as usize,
            exploded_fraction: self.count.iter().map(|&c| 1.0 - c as f64 / n_paths).collect(),
        })
    }
}

/// Moment estimates over the output times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub qbar: Vec<f64>,
    /// `means[j][i]` estimates `E|x(times[i])|^qbar[j]` over surviving paths.
    pub means: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    pub n_paths: usize,
    pub exploded_fraction: Vec<f64>,
}

impl MomentSeries {
    pub fn column(&self, qbar: f64) -> Option<usize> {
        self.qbar.iter().position(|&q| q == qbar)
    }

    /// Value of the `qbar` moment at the output time closest to `t`.
    pub fn at(&self, qbar: f64, t: f64) -> Option<f64> {
        let j = self.column(qbar)?;
        let i = self.times.partition_point(|&s| s < t);
        let i = match (i.checked_sub(1), self.times.get(i)) {
            (Some(p), Some(&next)) if t - self.times[p] < next - t => p,
            (Some(p), None) => p,
            _ => i,
        };
        Some(self.means[j][i])
    }

    /// CSV `t,m_<q>,se_<q>,...,exploded_fraction`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        for q in &self.qbar {
            header.push(format!("m_{q}"));
            header.push(format!("se_{q}"));
        }
        header.push("exploded_fraction".into());
        wtr.write_record(&header)?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            for j in 0..self.qbar.len() {
                row.push(self.means[j][i].to_string());
                row.push(self.std_errors[j][i].to_string());
            }
            row.push(self.exploded_fraction[i].to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Monte Carlo estimate of `E|x(t)|^q̄` for each `q̄` in `qbar`, over
/// `n_paths` paths on streams `(master_seed, k)`.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_moments(
    spec: &SystemSpec,
    schedule: &ControlSchedule,
    horizon: f64,
    step: f64,
    master_seed: u64,
    n_paths: usize,
    qbar: &[f64],
    controlled: bool,
) -> Result<MomentSeries> {
    if n_paths == 0 {
        return Err(config("n_paths must be at least 1"));
    }
    if qbar.is_empty() {
        return Err(config("at least one moment order is required"));
    }
    let q = spec.growth.map(|g| g.q);
    for &p in qbar {
        if !(p >= 2.0) || q.is_some_and(|q| p >= q) {
            return Err(config(match q {
                Some(q) => format!("moment order {p} outside [2, q = {q})"),
                None => format!("moment order {p} below 2"),
            }));
        }
    }
    let plan = StepPlan::new(spec, schedule, horizon, step)?;
    let keep = output_indices(plan.n_steps, MAX_ROWS);
    let times: Vec<f64> = keep.iter().map(|&k| plan.time(k)).collect();

    let n_chunks = n_paths.div_ceil(CHUNK);
    let partials: Vec<MomentAccumulator> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = MomentAccumulator::new(qbar, keep.len());
            let mut norms = Vec::with_capacity(keep.len());
            for k in c * CHUNK..((c + 1) * CHUNK).min(n_paths) {
                norms.clear();
                let mut next = 0;
                let mut rng = path_rng(master_seed, k as u64);
                integrate_with_rng(spec, schedule, &plan, controlled, &mut rng, |p| {
                    if next < keep.len() && p.k == keep[next] {
                        norms.push(p.x.iter().map(|v| v * v).sum::<f64>().sqrt());
                        next += 1;
                    }
                })?;
                acc.add_path(&norms);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = MomentAccumulator::new(qbar, keep.len());
    for p in &partials {
        total.merge(p);
    }
    total.finish(times)
}

/// Least-squares line through `(t, log m(t))` on a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub qbar: f64,
    pub window: [f64; 2],
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub n_points: usize,
}

pub const MIN_FIT_POINTS: usize = 10;

/// Fits `log m_q̄(t) ≈ intercept + slope·t` on `window`, by default the
/// last two-thirds of the series.
pub fn fit_decay_rate(series: &MomentSeries, qbar: f64, window: Option<(f64, f64)>) -> Result<RateFit> {
    let j = series
        .column(qbar)
        .ok_or_else(|| Error::Estimation(format!("no moment of order {qbar} in the series")))?;
    let (t_first, t_last) = (series.times[0], *series.times.last().unwrap());
    let (t0, t1) = window.unwrap_or((t_first + (t_last - t_first) / 3.0, t_last));
    if !(t0 < t1) {
        return Err(Error::Estimation(format!("empty fit window [{t0}, {t1}]")));
    }
    let tol = 1e-9 * (t1 - t0);
    let mut ts = Vec::new();
    let mut ls = Vec::new();
    for (t, m) in series.times.iter().zip(&series.means[j]) {
        if *t < t0 - tol || *t > t1 + tol {
            continue;
        }
        if !(*m > 0.0) || !m.is_finite() {
            return Err(Error::Estimation(format!("moment {m} at t = {t} cannot be log-fitted")));
        }
        ts.push(*t);
        ls.push(m.ln());
    }
    if ts.len() < MIN_FIT_POINTS {
        return Err(Error::Estimation(format!(
            "fit window [{t0}, {t1}] holds {} points, need {MIN_FIT_POINTS}",
            ts.len()
        )));
    }
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let lm = ls.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - tm) * (l - lm)).sum();
    let slope = sxy / sxx;
    let intercept = lm - slope * tm;
    let sse: f64 = ts
        .iter()
        .zip(&ls)
        .map(|(t, l)| (l - intercept - slope * t).powi(2))
        .sum();
    Ok(RateFit {
        qbar,
        window: [t0, t1],
        slope,
        intercept,
        residual_rms: (sse / n).sqrt(),
        n_points: ts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateStatus {
    /// Decay at least as fast as certified.
    Pass,
    /// Slower than certified, but the run used `δ > δ_max`.
    OutsideCertificate,
    /// Slower than certified at an admissible `δ`.
    ViolationCandidate,
    /// No certified rate applies; the moment decays.
    Decay,
    /// No certified rate applies; the moment does not decay.
    NoDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateComparison {
    pub qbar: f64,
    pub slope: f64,
    /// Certified slope `−((q − q̄)/(q − 2))μ`, when a rate is certified.
    pub certified: Option<f64>,
    pub delta: f64,
    pub delta_max: Option<f64>,
    pub tolerance: f64,
    pub status: RateStatus,
}

/// Compares a fitted slope with the certificate. `delta` is the observation
/// gap the simulation used; `cert = None` (for example an uncontrolled run)
/// only classifies decay.
pub fn compare_to_certificate(
    fit: &RateFit,
    cert: Option<&StabilityCertificate>,
    q: f64,
    delta: f64,
    tolerance: f64,
) -> RateComparison {
    let certified = cert.and_then(|c| c.rate_for(fit.qbar, q)).map(|r| -r);
    let delta_max = cert.and_then(|c| c.delta_bound.as_ref()).map(|b| b.delta_max);
    let status = match certified {
        Some(c) if fit.slope <= c * (1.0 - tolerance) => RateStatus::Pass,
        Some(_) if delta_max.is_none_or(|m| delta > m) => RateStatus::OutsideCertificate,
        Some(_) => RateStatus::ViolationCandidate,
        None if fit.slope <= -DECAY_FLOOR => RateStatus::Decay,
        None => RateStatus::NoDecay,
    };
    RateComparison {
        qbar: fit.qbar,
        slope: fit.slope,
        certified,
        delta,
        delta_max,
        tolerance,
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{certify, CertifyTarget};
    use crate::model::{CallbackModel, DelayFunction, GeneratorMatrix, InitialHistory, ModeCoefficients};
    use crate::preset::example5;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn synthetic(f: impl Fn(f64) -> f64) -> MomentSeries {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let m: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        MomentSeries {
            qbar: vec![2.0],
            std_errors: vec![vec![0.0; m.len()]],
            means: vec![m],
            exploded_fraction: vec![0.0; times.len()],
            times,
            n_paths: 1,
        }
    }

    fn fit(slope: f64) -> RateFit {
        RateFit {
            qbar: 2.0,
            window: [5.0, 15.0],
            slope,
            intercept: 0.0,
            residual_rms: 0.0,
            n_points: 100,
        }
    }

    fn linear_noise(sigma: f64) -> SystemSpec {
        let model = CallbackModel::new(
            1,
            1,
            1,
            Arc::new(|x, _, _, _, out| out[0] = -x[0]),
            Arc::new(move |_, _, _, _, out| out[0] = sigma),
        );
        SystemSpec::new(
            GeneratorMatrix::trivial(),
            ModeCoefficients::Callback(model),
            DelayFunction::constant(0.1).unwrap(),
            None,
            InitialHistory::constant(vec![1.0], 0),
        )
        .unwrap()
    }

    #[test]
    fn output_rows_are_bounded() {
        assert_eq!(output_indices(10, 2000), (0..=10).collect::<Vec<_>>());
        for n in [1999, 2000, 2001, 15_000, 15_001, 123_457] {
            let idx = output_indices(n, MAX_ROWS);
            assert!(idx.len() <= MAX_ROWS, "{n}: {}", idx.len());
            assert_eq!(idx[0], 0);
            assert_eq!(*idx.last().unwrap(), n);
        }
    }

    #[test]
    fn exact_exponential_fit() {
        let r = fit_decay_rate(&synthetic(|t| (-0.5 * t).exp()), 2.0, None).unwrap();
        assert!((r.slope + 0.5).abs() < 1e-12);
        let r = fit_decay_rate(&synthetic(|t| 3.0 * (-0.5 * t).exp()), 2.0, Some((2.0, 8.0))).unwrap();
        assert!((r.slope + 0.5).abs() < 1e-12);
        assert!((r.intercept - 3f64.ln()).abs() < 1e-12);
        assert_eq!(r.n_points, 61);
    }

    #[test]
    fn fit_errors() {
        let s = synthetic(|t| if t > 9.0 { 0.0 } else { 1.0 });
        assert!(matches!(fit_decay_rate(&s, 2.0, None), Err(Error::Estimation(_))));
        let s = synthetic(|t| (-t).exp());
        assert!(fit_decay_rate(&s, 2.0, Some((1.0, 1.5))).is_err());
        assert!(fit_decay_rate(&s, 4.0, None).is_err());
    }

    #[test]
    fn comparison_rules() {
        let ex = example5();
        let cert = certify(&ex.system, &ex.certificate, CertifyTarget {
            period: 1.0,
            theta: 0.2,
            delta: 1e-5,
        })
        .unwrap();
        let q = 7.0;
        // For q̄ = 2 the certified slope is −μ.
        let c = compare_to_certificate(&fit(-0.8), Some(&cert), q, 0.01, 0.1);
        assert!((c.certified.unwrap() + 0.0999).abs() < 1e-4);
        assert_eq!(c.status, RateStatus::Pass);
        let c = compare_to_certificate(&fit(-0.05), Some(&cert), q, 0.01, 0.1);
        assert_eq!(c.status, RateStatus::OutsideCertificate);
        let c = compare_to_certificate(&fit(-0.05), Some(&cert), q, 1e-5, 0.1);
        assert_eq!(c.status, RateStatus::ViolationCandidate);
        assert_eq!(compare_to_certificate(&fit(0.01), None, q, 0.01, 0.1).status, RateStatus::NoDecay);
        assert_eq!(compare_to_certificate(&fit(-1.0), None, q, 0.01, 0.1).status, RateStatus::Decay);
    }

    #[test]
    fn zero_history_has_zero_moments() {
        let mut ex = example5();
        ex.system.history = InitialHistory::constant(vec![0.0], 0);
        let s = ensemble_moments(&ex.system, &ex.schedule, 2.0, 1e-3, 1, 16, &[2.0, 4.0], true).unwrap();
        assert!(s.means.iter().flatten().all(|&m| m == 0.0));
        assert!(s.exploded_fraction.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn bad_orders_and_counts() {
        let ex = example5();
        let run = |n, q: &[f64]| ensemble_moments(&ex.system, &ex.schedule, 1.0, 1e-3, 1, n, q, true);
        assert!(matches!(run(0, &[2.0]), Err(Error::Config(_))));
        assert!(matches!(run(4, &[1.0]), Err(Error::Config(_))));
        assert!(matches!(run(4, &[7.0]), Err(Error::Config(_))));
    }

    #[test]
    fn all_exploded_is_an_estimation_error() {
        let acc = MomentAccumulator::new(&[2.0], 5);
        let mut a = acc.clone();
        a.add_path(&[1.0, 2.0]);
        assert!(matches!(a.finish(vec![0.0; 5]), Err(Error::Estimation(_))));
        let mut b = acc;
        b.add_path(&[1.0, 2.0]);
        b.add_path(&[1.0, 1.0, 1.0, 1.0, 1.0]);
        let s = b.finish(vec![0.0; 5]).unwrap();
        assert_eq!(s.exploded_fraction, vec![0.0, 0.0, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn standard_error_scales_with_paths() {
        let spec = linear_noise(0.5);
        let s = ControlSchedule::new(1.0, 0.0, 0.01).unwrap();
        let se = |n| {
            let m = ensemble_moments(&spec, &s, 1.0, 1e-2, 5, n, &[2.0], false).unwrap();
            *m.std_errors[0].last().unwrap()
        };
        let ratio = se(400) / se(1600);
        assert!(ratio > 1.0 && ratio < 4.0, "{ratio}");
    }

    #[test]
    fn reduction_ignores_worker_count() {
        let ex = example5();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ensemble_moments(&ex.system, &ex.schedule, 1.0, 1e-3, 3, 40, &[2.0], true).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn order_of_paths_does_not_matter(
            paths in prop::collection::vec(prop::collection::vec(0.0f64..3.0, 6), 2..30),
            seed in any::<u64>(),
        ) {
            let mut forward = MomentAccumulator::new(&[2.0, 4.0], 6);
            for p in &paths {
                forward.add_path(p);
            }
            let mut shuffled = paths.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut path_rng(seed, 0));
            let mut halves = [MomentAccumulator::new(&[2.0, 4.0], 6), MomentAccumulator::new(&[2.0, 4.0], 6)];
            for (i, p) in shuffled.iter().enumerate() {
                halves[i % 2].add_path(p);
            }
            let [mut a, b] = halves;
            a.merge(&b);
            let (x, y) = (forward.finish(vec![0.0; 6]).unwrap(), a.finish(vec![0.0; 6]).unwrap());
            for (u, v) in x.means.iter().flatten().zip(y.means.iter().flatten()) {
                prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
            }
            for (u, v) in x.std_errors.iter().flatten().zip(y.std_errors.iter().flatten()) {
                prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()));
            }
        }
    }
}
