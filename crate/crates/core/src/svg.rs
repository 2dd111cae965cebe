//! Minimal SVG figures: line charts and 2-d trajectory plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    xlog: bool,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>, xlog: bool) -> Self {
        let tx = |x: f64| if xlog { x.log10() } else { x };
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for x in xs.filter(|x| x.is_finite() && (!xlog || *x > 0.0)) {
            x0 = x0.min(tx(x));
            x1 = x1.max(tx(x));
        }
        for y in ys.filter(|y| y.is_finite()) {
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x0 > x1 {
            (x0, x1) = (0.0, 1.0);
        }
        if y0 > y1 {
            (y0, y1) = (0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        Self {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
            xlog,
        }
    }

    fn px(&self, x: f64) -> f64 {
        let x = if self.xlog { x.log10() } else { x };
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = f.x0 + t * (f.x1 - f.x0);
        let label = if f.xlog { 10f64.powf(xv) } else { xv };
        let x = MARGIN + t * (W - 2.0 * MARGIN);
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            H - MARGIN + 16.0,
            fmt_tick(label)
        );
        let yv = f.y0 + t * (f.y1 - f.y0);
        let y = f.py(yv);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            y + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 16.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{:.3}", v)
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Line chart with markers; `xlog` puts the x axis on a log scale.
pub fn line_chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
    xlog: bool,
) -> String {
    let f = Frame::fit(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
        series.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
        xlog,
    );
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!xlog || *x > 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        if s.points.len() <= 50 {
            for p in &pts {
                let (x, y) = p.split_once(',').expect("formatted above");
                let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            W - MARGIN - 120.0,
            MARGIN + 16.0 + 16.0 * i as f64,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Scalar field sampled on a regular grid over `[x0, x1] x [y0, y1]`, row-major from the bottom.
pub struct Heatmap {
    pub bounds: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

/// Generated paths (one `<path>` each, with a cross at the end) over the true points.
pub fn trajectory_plot(
    title: &str,
    true_points: &[[f64; 2]],
    paths: &[Vec<[f64; 2]>],
    heatmap: Option<&Heatmap>,
) -> String {
    let mut xs: Vec<f64> = true_points.iter().map(|p| p[0]).collect();
    let mut ys: Vec<f64> = true_points.iter().map(|p| p[1]).collect();
    for p in paths.iter().flatten() {
        xs.push(p[0]);
        ys.push(p[1]);
    }
    if let Some(h) = heatmap {
        xs.extend([h.bounds[0], h.bounds[1]]);
        ys.extend([h.bounds[2], h.bounds[3]]);
    }
    // equal aspect: widen the narrower range
    let f0 = Frame::fit(xs.iter().copied(), ys.iter().copied(), false);
    let (cx, cy) = ((f0.x0 + f0.x1) / 2.0, (f0.y0 + f0.y1) / 2.0);
    let half =
        ((f0.x1 - f0.x0) / (W - 2.0 * MARGIN)).max((f0.y1 - f0.y0) / (H - 2.0 * MARGIN)) / 2.0;
    let f = Frame {
        x0: cx - half * (W - 2.0 * MARGIN),
        x1: cx + half * (W - 2.0 * MARGIN),
        y0: cy - half * (H - 2.0 * MARGIN),
        y1: cy + half * (H - 2.0 * MARGIN),
        xlog: false,
    };
    let mut out = String::new();
    header(&mut out, title);
    if let Some(h) = heatmap {
        let vmax = h
            .values
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
            .max(1e-300);
        let dx = (h.bounds[1] - h.bounds[0]) / h.nx as f64;
        let dy = (h.bounds[3] - h.bounds[2]) / h.ny as f64;
        for r in 0..h.ny {
            for c in 0..h.nx {
                let v = h.values[r * h.nx + c] / vmax;
                let (red, blue) = if v >= 0.0 {
                    (255, (255.0 * (1.0 - v)) as u8)
                } else {
                    ((255.0 * (1.0 + v)) as u8, 255)
                };
                let green = (255.0 * (1.0 - v.abs())) as u8;
                let x = f.px(h.bounds[0] + c as f64 * dx);
                let y = f.py(h.bounds[2] + (r + 1) as f64 * dy);
                let _ = writeln!(
                    out,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="rgb({red},{green},{blue})"/>"#,
                    f.px(h.bounds[0] + dx) - f.px(h.bounds[0]) + 0.3,
                    f.py(h.bounds[2]) - f.py(h.bounds[2] + dy) + 0.3
                );
            }
        }
    }
    axes(&mut out, &f, "x", "y");
    for (i, path) in paths.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        for (k, p) in path.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2} ",
                if k == 0 { "M" } else { "L" },
                f.px(p[0]),
                f.py(p[1])
            );
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        if let Some(last) = path.last() {
            let (x, y) = (f.px(last[0]), f.py(last[1]));
            let _ = writeln!(
                out,
                r#"<g stroke="{color}" stroke-width="2"><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/></g>"#,
                x - 5.0,
                y - 5.0,
                x + 5.0,
                y + 5.0,
                x - 5.0,
                y + 5.0,
                x + 5.0,
                y - 5.0
            );
        }
    }
    for p in true_points {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="black"/>"#,
            f.px(p[0]),
            f.py(p[1])
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_path_per_trajectory() {
        let paths = vec![
            vec![[0.0, 0.0], [0.5, 0.5]],
            vec![[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[2.0, 2.0]],
        ];
        let svg = trajectory_plot("t", &[[1.0, 1.0]], &paths, None);
        assert_eq!(svg.matches("<path ").count(), 3);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn log_axis_skips_nonpositive() {
        let s = Series {
            name: "a<b".into(),
            points: vec![(0.0, 1.0), (0.1, 2.0), (10.0, 3.0)],
        };
        let svg = line_chart("t", "x", "y", &[s], true);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a&lt;b"));
    }
}
