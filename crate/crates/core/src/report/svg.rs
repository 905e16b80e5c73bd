//! Self-contained SVG 1.1 figures: bar charts, grouped bars, correlation
//! heatmaps, and class-distribution charts. Linear value scale anchored at
//! zero, no external resources.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    Bar,
    GroupedBar,
    Heatmap,
    Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub kind: FigureKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Category labels along the x axis (or matrix axes for heatmaps).
    pub labels: Vec<String>,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 110.0;
const PLOT_W: f64 = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
const PLOT_H: f64 = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

const PALETTE: [&str; 8] = [
    "#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4", "#8c613c", "#dc7ec0", "#797979",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn validate(f: &FigureSpec) -> Result<()> {
    for s in &f.series {
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFigure(s.name.clone()));
        }
        if f.kind != FigureKind::Heatmap && s.values.len() != f.labels.len() {
            return Err(Error::InvalidInput(format!(
                "series '{}' has {} values for {} labels",
                s.name,
                s.values.len(),
                f.labels.len()
            )));
        }
    }
    if f.series.is_empty() {
        return Err(Error::InvalidInput("figure has no series".to_string()));
    }
    Ok(())
}

/// Renders a standalone SVG document.
pub fn render_svg(f: &FigureSpec) -> Result<String> {
    validate(f)?;
    let mut out = String::with_capacity(8 * 1024);
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"28\" font-family=\"sans-serif\" font-size=\"18\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        esc(&f.title)
    ));
    match f.kind {
        FigureKind::Heatmap => render_heatmap(f, &mut out),
        FigureKind::Distribution => render_bars(f, &mut out, true),
        FigureKind::Bar | FigureKind::GroupedBar => render_bars(f, &mut out, false),
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Maps a value to a y coordinate with a linear scale anchored at zero.
struct YScale {
    min: f64,
    max: f64,
}

impl YScale {
    fn from_values<'a>(values: impl Iterator<Item = &'a f64>) -> YScale {
        let mut min: f64 = 0.0;
        let mut max: f64 = 0.0;
        for &v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if max == min {
            max = min + 1.0;
        }
        YScale { min, max }
    }

    fn y(&self, v: f64) -> f64 {
        MARGIN_TOP + (self.max - v) / (self.max - self.min) * PLOT_H
    }
}

fn render_bars(f: &FigureSpec, out: &mut String, with_percent: bool) {
    let scale = YScale::from_values(f.series.iter().flat_map(|s| s.values.iter()));
    let zero_y = scale.y(0.0);
    let n_groups = f.labels.len().max(1);
    let n_series = f.series.len();
    let group_w = PLOT_W / n_groups as f64;
    let bar_w = group_w * 0.8 / n_series as f64;

    axes(out, &scale, f);

    for (si, series) in f.series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        for (gi, &v) in series.values.iter().enumerate() {
            let x = MARGIN_LEFT + gi as f64 * group_w + group_w * 0.1 + si as f64 * bar_w;
            let vy = scale.y(v);
            let (y, h) = if v >= 0.0 {
                (vy, zero_y - vy)
            } else {
                (zero_y, vy - zero_y)
            };
            out.push_str(&format!(
                "  <rect x=\"{x:.3}\" y=\"{y:.3}\" width=\"{bar_w:.3}\" height=\"{h:.3}\" fill=\"{color}\"><title>{}: {v}</title></rect>\n",
                esc(&series.name)
            ));
            if with_percent {
                out.push_str(&format!(
                    "  <text x=\"{:.3}\" y=\"{:.3}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{:.2}%</text>\n",
                    x + bar_w / 2.0,
                    y - 4.0,
                    v * 100.0
                ));
            }
        }
    }

    // Category labels, rotated to stay readable when dense.
    for (gi, label) in f.labels.iter().enumerate() {
        let x = MARGIN_LEFT + gi as f64 * group_w + group_w / 2.0;
        let y = MARGIN_TOP + PLOT_H + 14.0;
        out.push_str(&format!(
            "  <text x=\"{x:.3}\" y=\"{y:.3}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\" transform=\"rotate(-45 {x:.3} {y:.3})\">{}</text>\n",
            esc(label)
        ));
    }

    // Legend for multi-series figures.
    if n_series > 1 {
        for (si, series) in f.series.iter().enumerate() {
            let x = MARGIN_LEFT + 10.0 + 130.0 * (si % 6) as f64;
            let y = HEIGHT - 18.0 - 16.0 * (si / 6) as f64;
            let color = PALETTE[si % PALETTE.len()];
            out.push_str(&format!(
                "  <rect x=\"{x:.3}\" y=\"{:.3}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
                y - 9.0
            ));
            out.push_str(&format!(
                "  <text x=\"{:.3}\" y=\"{y:.3}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                x + 14.0,
                esc(&series.name)
            ));
        }
    }
}

fn axes(out: &mut String, scale: &YScale, f: &FigureSpec) {
    let x0 = MARGIN_LEFT;
    let x1 = MARGIN_LEFT + PLOT_W;
    let zero_y = scale.y(0.0);
    out.push_str(&format!(
        "  <line x1=\"{x0}\" y1=\"{zero_y:.3}\" x2=\"{x1}\" y2=\"{zero_y:.3}\" stroke=\"black\" stroke-width=\"1\"/>\n"
    ));
    out.push_str(&format!(
        "  <line x1=\"{x0}\" y1=\"{MARGIN_TOP}\" x2=\"{x0}\" y2=\"{:.3}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        MARGIN_TOP + PLOT_H
    ));
    for i in 0..=4 {
        let v = scale.min + (scale.max - scale.min) * i as f64 / 4.0;
        let y = scale.y(v);
        out.push_str(&format!(
            "  <text x=\"{:.3}\" y=\"{y:.3}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{v:.3}</text>\n",
            x0 - 6.0
        ));
        out.push_str(&format!(
            "  <line x1=\"{:.3}\" y1=\"{y:.3}\" x2=\"{x0}\" y2=\"{y:.3}\" stroke=\"black\" stroke-width=\"1\"/>\n",
            x0 - 4.0
        ));
    }
    out.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + PLOT_W / 2.0,
        HEIGHT - 4.0,
        esc(&f.x_label)
    ));
    out.push_str(&format!(
        "  <text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        MARGIN_TOP + PLOT_H / 2.0,
        MARGIN_TOP + PLOT_H / 2.0,
        esc(&f.y_label)
    ));
}

/// Symmetric diverging fill: -1 blue, 0 white, +1 red.
fn heat_color(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (r, g, b) = if v >= 0.0 {
        let t = v;
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        let t = -v;
        (255.0 * (1.0 - t), 255.0 * (1.0 - t), 255.0)
    };
    format!("rgb({},{},{})", r.round() as u8, g.round() as u8, b.round() as u8)
}

fn render_heatmap(f: &FigureSpec, out: &mut String) {
    let n = f.labels.len();
    let side = PLOT_W.min(PLOT_H);
    let cell = side / n.max(1) as f64;
    let ox = MARGIN_LEFT;
    let oy = MARGIN_TOP;
    for (i, series) in f.series.iter().enumerate() {
        for (j, &v) in series.values.iter().enumerate() {
            let x = ox + j as f64 * cell;
            let y = oy + i as f64 * cell;
            out.push_str(&format!(
                "  <rect x=\"{x:.3}\" y=\"{y:.3}\" width=\"{cell:.3}\" height=\"{cell:.3}\" fill=\"{}\"><title>{} / {}: {v}</title></rect>\n",
                heat_color(v),
                esc(&f.labels[i.min(n.saturating_sub(1))]),
                esc(&f.labels[j.min(n.saturating_sub(1))]),
            ));
        }
    }
    for (i, label) in f.labels.iter().enumerate() {
        let y = oy + i as f64 * cell + cell / 2.0 + 4.0;
        out.push_str(&format!(
            "  <text x=\"{:.3}\" y=\"{y:.3}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"end\">{}</text>\n",
            ox - 4.0,
            esc(label)
        ));
        let x = ox + i as f64 * cell + cell / 2.0;
        let ly = oy + side + 10.0;
        out.push_str(&format!(
            "  <text x=\"{x:.3}\" y=\"{ly:.3}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"end\" transform=\"rotate(-65 {x:.3} {ly:.3})\">{}</text>\n",
            esc(label)
        ));
    }
}
