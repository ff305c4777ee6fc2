//! Minimal SVG line chart of `σ_min` against `τ`.

use std::fmt::Write;

use crate::spectral_probe::SweepRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64) -> Self {
        if hi > lo {
            Self { lo, hi }
        } else {
            Self { lo: lo - 0.5, hi: lo + 0.5 }
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    fn tick(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / TICKS as f64
    }
}

/// Render the sweep as a standalone SVG document. Refined roots are drawn
/// as dashed vertical lines.
pub fn sweep_chart(record: &SweepRecord) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let taus = record.samples.iter().map(|s| s.tau);
    let x = Axis::new(
        taus.clone().fold(f64::INFINITY, f64::min),
        taus.fold(f64::NEG_INFINITY, f64::max),
    );
    let y_max = record
        .samples
        .iter()
        .map(|s| s.sigma_min)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let y = Axis::new(0.0, y_max);
    let px = |v: f64| LEFT + x.frac(v) * plot_w;
    let py = |v: f64| TOP + (1.0 - y.frac(v)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let (tx, ty) = (x.tick(i), y.tick(i));
        let (gx, gy) = (px(tx), py(ty));
        let _ = writeln!(
            s,
            r#"<path d="M{gx:.2} {y0:.2} L{gx:.2} {:.2}" stroke="black"/><text x="{gx:.2}" y="{:.2}" text-anchor="middle">{tx:.3}</text>"#,
            y0 + 5.0,
            y0 + 18.0
        );
        let _ = writeln!(
            s,
            r#"<path d="M{:.2} {gy:.2} L{x0:.2} {gy:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{ty:.3}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            gy + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">tau</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">sigma_min</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut d = String::new();
    for (i, sample) in record.samples.iter().filter(|p| p.sigma_min.is_finite()).enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{:.2} {:.2} ", px(sample.tau), py(sample.sigma_min));
    }
    let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, d.trim_end());

    for root in &record.roots {
        let rx = px(root.center());
        let _ = writeln!(
            s,
            r#"<path d="M{rx:.2} {y0:.2} L{rx:.2} {y1:.2}" stroke="crimson" stroke-dasharray="4 3"/><circle cx="{rx:.2}" cy="{y0:.2}" r="3" fill="crimson"/>"#
        );
    }
    s.push_str("</svg>\n");
    s
}
