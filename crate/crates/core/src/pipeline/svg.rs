//! Hand-written SVG plots on a fixed 800x600 canvas.

use std::fmt::Write as _;

use crate::eval::{CalibrationBin, RocPoint};

const W: f64 = 800.0;
const H: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 40.0;
const TOP: f64 = 60.0;
const BOTTOM: f64 = 70.0;

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Data-space frame with axes, ticks, and labels.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    out: String,
}

impl Frame {
    fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Frame {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 600" width="800" height="600" font-family="sans-serif">"#
        );
        let _ = writeln!(out, r#"<rect x="0" y="0" width="800" height="600" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="400" y="32" text-anchor="middle" font-size="20">{}</text>"#, escape(title));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="15">{}</text>"#,
            num(LEFT + (W - LEFT - RIGHT) / 2.0),
            num(H - 20.0),
            escape(x_label)
        );
        let mid = num(TOP + (H - TOP - BOTTOM) / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="24" y="{mid}" text-anchor="middle" font-size="15" transform="rotate(-90 24 {mid})">{}</text>"#,
            escape(y_label)
        );
        let mut f = Frame { x, y, out };
        f.axes();
        f
    }

    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        H - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }

    fn axes(&mut self) {
        let (x0, x1, y0, y1) = (self.px(self.x.0), self.px(self.x.1), self.py(self.y.0), self.py(self.y.1));
        let _ = writeln!(
            self.out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            num(x0),
            num(y1),
            num(x1 - x0),
            num(y0 - y1)
        );
        for k in 0..=5 {
            let t = k as f64 / 5.0;
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                self.out,
                r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
                num(xp),
                num(y0 + 18.0),
                tick(xv)
            );
            let _ = writeln!(
                self.out,
                r#"<text x="{}" y="{}" text-anchor="end" font-size="12">{}</text>"#,
                num(x0 - 6.0),
                num(yp + 4.0),
                tick(yv)
            );
        }
    }

    fn line(&mut self, class: &str, a: (f64, f64), b: (f64, f64), style: &str) {
        let _ = writeln!(
            self.out,
            r#"<line class="{class}" x1="{}" y1="{}" x2="{}" y2="{}" {style}/>"#,
            num(self.px(a.0)),
            num(self.py(a.1)),
            num(self.px(b.0)),
            num(self.py(b.1))
        );
    }

    fn polyline(&mut self, class: &str, pts: &[(f64, f64)], style: &str) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", num(self.px(x)), num(self.py(y)))).collect();
        let _ = writeln!(self.out, r#"<polyline class="{class}" points="{}" fill="none" {style}/>"#, coords.join(" "));
    }

    fn circle(&mut self, class: &str, at: (f64, f64), r: f64, style: &str) {
        let _ = writeln!(
            self.out,
            r#"<circle class="{class}" cx="{}" cy="{}" r="{}" {style}/>"#,
            num(self.px(at.0)),
            num(self.py(at.1)),
            num(r)
        );
    }

    fn text(&mut self, at: (f64, f64), anchor: &str, size: u32, s: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" text-anchor="{anchor}" font-size="{size}">{}</text>"#,
            num(self.px(at.0)),
            num(self.py(at.1)),
            escape(s)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        num(v)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    padded(lo, hi)
}

pub fn roc_svg(points: &[RocPoint], auc: f64) -> String {
    let mut f = Frame::new("ROC curve (test set)", "1 - Specificity", "Sensitivity", (0.0, 1.0), (0.0, 1.0));
    f.line("diagonal", (0.0, 0.0), (1.0, 1.0), r#"stroke="gray" stroke-dasharray="6,4""#);
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    f.polyline("roc", &pts, r#"stroke="steelblue" stroke-width="2.5""#);
    f.text((0.6, 0.15), "start", 20, &format!("AUC = {auc:.3}"));
    f.finish()
}

/// One marker per bin, the identity line, and the smoothed curve.
pub fn calibration_svg(bins: &[CalibrationBin], curve: &[(f64, f64)]) -> String {
    let mut f =
        Frame::new("Calibration (test set)", "Predicted probability", "Observed proportion", (0.0, 1.0), (0.0, 1.0));
    f.line("diagonal", (0.0, 0.0), (1.0, 1.0), r#"stroke="gray" stroke-dasharray="6,4""#);
    let pts: Vec<(f64, f64)> = curve.iter().filter(|(_, y)| y.is_finite()).copied().collect();
    f.polyline("smooth", &pts, r#"stroke="firebrick" stroke-width="2""#);
    for b in bins {
        f.circle("bin", (b.mean_predicted, b.observed_fraction), 6.0, r#"fill="steelblue" stroke="black""#);
    }
    f.text((0.05, 0.92), "start", 14, &format!("{} bins", bins.len()));
    f.finish()
}

/// Horizontal bars with optional +/- whiskers, one per label, top to bottom.
pub fn bar_svg(
    title: &str,
    x_label: &str,
    labels: &[String],
    values: &[f64],
    whiskers: Option<&[f64]>,
    x: (f64, f64),
) -> String {
    let n = labels.len().max(1) as f64;
    let mut f = Frame::new(title, x_label, "", x, (0.0, n));
    for (k, (label, &v)) in labels.iter().zip(values).enumerate() {
        let centre = n - k as f64 - 0.5;
        let (x0, x1) = (f.px(x.0), f.px(v.clamp(x.0, x.1)));
        let (y0, y1) = (f.py(centre + 0.35), f.py(centre - 0.35));
        let _ = writeln!(
            f.out,
            r#"<rect class="bar" x="{}" y="{}" width="{}" height="{}" fill="steelblue"/>"#,
            num(x0),
            num(y0),
            num((x1 - x0).max(0.0)),
            num(y1 - y0)
        );
        if let Some(w) = whiskers {
            let (lo, hi) = ((v - w[k]).max(x.0), (v + w[k]).min(x.1));
            f.line("whisker", (lo, centre), (hi, centre), r#"stroke="black" stroke-width="1.5""#);
        }
        let _ = writeln!(
            f.out,
            r#"<text x="{}" y="{}" text-anchor="start" font-size="13">{} ({})</text>"#,
            num(x0 + 6.0),
            num((y0 + y1) / 2.0 + 4.0),
            escape(label),
            tick(v)
        );
    }
    f.finish()
}

/// Value axis for bars: from 0 (or the smallest value) to just past the largest.
pub fn bar_range(values: &[f64], whiskers: Option<&[f64]>) -> (f64, f64) {
    let hi = values
        .iter()
        .enumerate()
        .map(|(k, v)| v + whiskers.map_or(0.0, |w| w[k]))
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::min);
    if hi.is_finite() && hi > lo {
        (lo, hi + 0.05 * (hi - lo))
    } else {
        (0.0, 1.0)
    }
}

pub fn rfe_svg(profile: &[(usize, f64)], best: usize, metric: &str) -> String {
    let x = range(profile.iter().map(|p| p.0 as f64));
    let y = range(profile.iter().map(|p| p.1));
    let mut f = Frame::new("Recursive feature elimination", "Number of features", &format!("{metric} (resampled)"), x, y);
    let pts: Vec<(f64, f64)> = profile.iter().filter(|p| p.1.is_finite()).map(|p| (p.0 as f64, p.1)).collect();
    f.polyline("profile", &pts, r#"stroke="steelblue" stroke-width="2""#);
    for (&(size, v), &(raw, _)) in pts.iter().zip(profile.iter().filter(|p| p.1.is_finite())) {
        let fill = if raw == best { "firebrick" } else { "steelblue" };
        f.circle("size", (size, v), 5.0, &format!(r#"fill="{fill}""#));
    }
    f.finish()
}

pub fn qq_svg(points: &[(f64, f64)]) -> String {
    let r = range(points.iter().flat_map(|&(a, b)| [a, b]));
    let mut f = Frame::new("Q-Q plot (test set)", "Predicted quantiles", "Observed quantiles", r, r);
    f.line("diagonal", (r.0, r.0), (r.1, r.1), r#"stroke="gray" stroke-dasharray="6,4""#);
    for &(a, b) in points {
        f.circle("quantile", (a, b), 3.5, r#"fill="steelblue""#);
    }
    f.finish()
}
