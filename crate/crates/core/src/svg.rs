//! Minimal SVG line plots for trajectories and moment series.

use std::fmt::Write;

use crate::moments::MomentSeries;
use crate::simulate::Trajectory;

const W: f64 = 720.0;
const H: f64 = 360.0;
const MARGIN: f64 = 50.0;
const BAND: f64 = 14.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Frame {
    t0: f64,
    t1: f64,
    y0: f64,
    y1: f64,
    bottom: f64,
}

impl Frame {
    fn new(t0: f64, t1: f64, mut y0: f64, mut y1: f64, bottom: f64) -> Self {
        if !(y1 > y0) {
            y0 -= 0.5;
            y1 += 0.5;
        }
        Self {
            t0,
            t1: if t1 > t0 { t1 } else { t0 + 1.0 },
            y0,
            y1,
            bottom,
        }
    }

    fn px(&self, t: f64) -> f64 {
        MARGIN + (t - self.t0) / (self.t1 - self.t0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - MARGIN)
    }

    fn axes(&self, out: &mut String, ylabel: &str, ytick: impl Fn(f64) -> String) {
        let _ = write!(
            out,
            r##"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="#444"/>"##,
            m = MARGIN,
            w = W - 2.0 * MARGIN,
            h = self.bottom - MARGIN
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let t = self.t0 + f * (self.t1 - self.t0);
            let y = self.y0 + f * (self.y1 - self.y0);
            let _ = write!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
                self.px(t),
                H - 8.0,
                fmt_num(t)
            );
            let _ = write!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
                MARGIN - 4.0,
                self.py(y) + 4.0,
                ytick(y)
            );
        }
        let _ = write!(
            out,
            r#"<text x="14" y="{:.1}" font-size="12" transform="rotate(-90 14 {:.1})" text-anchor="middle">{ylabel}</text>"#,
            (self.bottom + MARGIN) / 2.0,
            (self.bottom + MARGIN) / 2.0
        );
    }
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1e4) {
        format!("{}", (v * 100.0).round() / 100.0)
    } else {
        format!("{v:.1e}")
    }
}

fn polyline(out: &mut String, pts: impl Iterator<Item = (f64, f64)>, color: &str) {
    out.push_str(r#"<polyline fill="none" stroke-width="1" stroke=""#);
    out.push_str(color);
    out.push_str(r#"" points=""#);
    for (x, y) in pts {
        let _ = write!(out, "{x:.2},{y:.2} ");
    }
    out.push_str(r#""/>"#);
}

fn open() -> String {
    format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#)
        + r#"<rect width="100%" height="100%" fill="white"/>"#
}

/// `|x(t)|` with the active mode drawn as a colored band under the axis and
/// control windows shaded.
pub fn trajectory_svg(tr: &Trajectory) -> String {
    let norms: Vec<f64> = (0..tr.len())
        .map(|k| tr.state(k).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let ymax = norms.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let t1 = tr.times.last().copied().unwrap_or(1.0);
    let bottom = H - MARGIN - BAND - 4.0;
    let fr = Frame::new(0.0, t1, 0.0, ymax, bottom);
    let mut out = open();

    let mut k = 0;
    while k < tr.len() {
        let start = k;
        while k < tr.len() && tr.control_on[k] == tr.control_on[start] {
            k += 1;
        }
        let end = tr.times.get(k).copied().unwrap_or(t1);
        if tr.control_on[start] {
            let _ = write!(
                out,
                r##"<rect x="{:.2}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="#e8f0e0"/>"##,
                fr.px(tr.times[start]),
                fr.px(end) - fr.px(tr.times[start]),
                bottom - MARGIN
            );
        }
    }
    let mut k = 0;
    while k < tr.len() {
        let start = k;
        while k < tr.len() && tr.modes[k] == tr.modes[start] {
            k += 1;
        }
        let end = tr.times.get(k).copied().unwrap_or(t1);
        let _ = write!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{BAND}" fill="{}"/>"#,
            fr.px(tr.times[start]),
            bottom + 4.0,
            (fr.px(end) - fr.px(tr.times[start])).max(0.5),
            COLORS[tr.modes[start] % COLORS.len()]
        );
    }
    fr.axes(&mut out, "|x(t)|", fmt_num);
    polyline(
        &mut out,
        tr.times.iter().zip(&norms).map(|(&t, &v)| (fr.px(t), fr.py(v))),
        "#000",
    );
    out.push_str("</svg>\n");
    out
}

/// Moments on a log scale, one line per order. Nonpositive values are
/// skipped.
pub fn moments_svg(series: &MomentSeries) -> String {
    let logs: Vec<Vec<Option<f64>>> = series
        .means
        .iter()
        .map(|m| m.iter().map(|&v| (v > 0.0 && v.is_finite()).then(|| v.log10())).collect())
        .collect();
    let all = logs.iter().flatten().flatten();
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo.floor(), hi.ceil()) } else { (-1.0, 1.0) };
    let t0 = series.times.first().copied().unwrap_or(0.0);
    let t1 = series.times.last().copied().unwrap_or(1.0);
    let fr = Frame::new(t0, t1, lo, hi, H - MARGIN);
    let mut out = open();
    fr.axes(&mut out, "E|x|^q", |y| format!("1e{}", y.round()));
    for (j, line) in logs.iter().enumerate() {
        let color = COLORS[j % COLORS.len()];
        polyline(
            &mut out,
            series
                .times
                .iter()
                .zip(line)
                .filter_map(|(&t, v)| v.map(|v| (fr.px(t), fr.py(v)))),
            color,
        );
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">q = {}</text>"#,
            W - MARGIN - 60.0,
            MARGIN + 16.0 * (j as f64 + 1.0),
            series.qbar[j]
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset::example5;
    use crate::simulate::integrate;

    #[test]
    fn plots_are_wellformed() {
        let ex = example5();
        let tr = integrate(&ex.system, &ex.schedule, 2.0, 1e-3, 1, true).unwrap();
        let s = trajectory_svg(&tr);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("<polyline"));
        let series = MomentSeries {
            times: vec![0.0, 1.0, 2.0],
            qbar: vec![2.0],
            means: vec![vec![1.0, 0.1, 0.0]],
            std_errors: vec![vec![0.0; 3]],
            n_paths: 1,
            exploded_fraction: vec![0.0; 3],
        };
        let s = moments_svg(&series);
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }
}
