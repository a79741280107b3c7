//! Static line charts with error bars.
//!
//! Element classes are stable so charts can be checked structurally:
//! `polyline.series`, `line.errorbar`, `rect.sig`, `line.changeover`,
//! `line.baseline`.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// Mean and standard error per x position; `None` where absent.
    pub points: Vec<Option<(f64, Option<f64>)>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineChart {
    pub title: String,
    pub x_title: String,
    pub y_title: String,
    pub x_labels: Vec<String>,
    pub series: Vec<Series>,
    /// X positions to shade.
    pub shaded: Vec<usize>,
    /// X position of a vertical rule.
    pub rule: Option<usize>,
    /// Horizontal reference lines, one per named series.
    pub baselines: Vec<(String, f64)>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl LineChart {
    fn y_range(&self) -> (f64, f64) {
        let mut lo: f64 = 0.4;
        let mut hi: f64 = 1.0;
        let values = self.series.iter().flat_map(|s| s.points.iter().flatten());
        for (m, se) in values {
            let e = se.unwrap_or(0.0);
            lo = lo.min(m - e);
            hi = hi.max(m + e);
        }
        for (_, b) in &self.baselines {
            lo = lo.min(*b);
            hi = hi.max(*b);
        }
        ((lo * 10.0).floor() / 10.0, (hi * 10.0).ceil() / 10.0)
    }

    pub fn render(&self) -> String {
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let n = self.x_labels.len().max(1);
        let step = plot_w / n as f64;
        let x = |i: usize| LEFT + step * (i as f64 + 0.5);
        let (lo, hi) = self.y_range();
        let y = |v: f64| TOP + plot_h * (hi - v) / (hi - lo);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&self.title)
        );

        for &i in &self.shaded {
            let _ = writeln!(
                s,
                r##"<rect class="sig" x="{:.2}" y="{TOP}" width="{step:.2}" height="{plot_h}" fill="#cccccc" fill-opacity="0.5"/>"##,
                x(i) - step / 2.0
            );
        }

        // Axes, gridlines and ticks.
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );
        let ticks = ((hi - lo) * 10.0).round() as usize;
        for t in 0..=ticks {
            let v = lo + t as f64 / 10.0;
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#eeeeee"/><text x="{2}" y="{3:.2}" text-anchor="end">{v:.1}</text>"##,
                y(v),
                LEFT + plot_w,
                LEFT - 6.0,
                y(v) + 4.0
            );
        }
        for (i, label) in self.x_labels.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
                x(i),
                TOP + plot_h + 18.0,
                escape(label)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_title)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            TOP + plot_h / 2.0,
            escape(&self.y_title)
        );

        if let Some(i) = self.rule {
            let _ = writeln!(
                s,
                r#"<line class="changeover" x1="{0:.2}" y1="{TOP}" x2="{0:.2}" y2="{1}" stroke="black" stroke-dasharray="6 4"/>"#,
                x(i),
                TOP + plot_h
            );
        }

        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            if let Some((_, b)) = self.baselines.iter().find(|(name, _)| *name == series.name) {
                let _ = writeln!(
                    s,
                    r#"<line class="baseline" x1="{LEFT}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="{color}" stroke-dasharray="2 3"/>"#,
                    y(*b),
                    LEFT + plot_w
                );
            }
            let pts: Vec<String> = series
                .points
                .iter()
                .enumerate()
                .filter_map(|(i, p)| p.map(|(m, _)| format!("{:.2},{:.2}", x(i), y(m))))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            );
            for (i, p) in series.points.iter().enumerate() {
                let Some((m, se)) = p else { continue };
                let e = se.unwrap_or(0.0);
                let _ = writeln!(
                    s,
                    r#"<line class="errorbar" x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/><circle cx="{0:.2}" cy="{3:.2}" r="3" fill="{color}"/>"#,
                    x(i),
                    y(m - e),
                    y(m + e),
                    y(*m)
                );
            }
            let ly = TOP + 14.0 + 20.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{2}" y="{3}">{4}</text>"#,
                LEFT + plot_w + 14.0,
                LEFT + plot_w + 38.0,
                LEFT + plot_w + 44.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
