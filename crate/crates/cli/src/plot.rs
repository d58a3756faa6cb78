//! Standalone SVG scatter plots of 2-D embeddings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use dvlae_core::embedding::Embedding;

use crate::error::{CliError, CliResult};

/// Categorical colors for tags. Red is reserved for highlights.
pub const PALETTE: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];
pub const HIGHLIGHT_COLOR: &str = "#d62728";
pub const UNTAGGED: &str = "untagged";

#[derive(Debug, Clone, Copy)]
pub struct PlotSize {
    pub width: u32,
    pub height: u32,
}

const MARGIN: f64 = 20.0;
const LEGEND_WIDTH: f64 = 170.0;
const POINT_RADIUS: f64 = 3.5;
const DIAMOND: f64 = 6.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn diamond(x: f64, y: f64, r: f64) -> String {
    format!(
        "M{:.2} {:.2}L{:.2} {:.2}L{:.2} {:.2}L{:.2} {:.2}Z",
        x,
        y - r,
        x + r,
        y,
        x,
        y + r,
        x - r,
        y
    )
}

/// Render `embedding` with one color per tag; ids in `highlight` are drawn as
/// red diamonds on top of everything else.
pub fn render_svg(embedding: &Embedding, highlight: &[String], size: PlotSize) -> CliResult<String> {
    let ids: BTreeSet<&str> = embedding.points.iter().map(|p| p.id.as_str()).collect();
    if let Some(missing) = highlight.iter().find(|h| !ids.contains(h.as_str())) {
        return Err(CliError::user(format!("highlight id {missing:?} is not in the embedding")));
    }
    let highlighted: BTreeSet<&str> = highlight.iter().map(String::as_str).collect();

    let categories: BTreeSet<&str> = embedding
        .points
        .iter()
        .map(|p| p.tag.as_deref().unwrap_or(UNTAGGED))
        .collect();
    let color: BTreeMap<&str, &str> = categories
        .iter()
        .enumerate()
        .map(|(i, c)| (*c, PALETTE[i % PALETTE.len()]))
        .collect();

    let (w, h) = (size.width as f64, size.height as f64);
    let plot_w = (w - LEGEND_WIDTH - 2.0 * MARGIN).max(10.0);
    let plot_h = h - 2.0 * MARGIN;
    let bounds = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo <= 0.0 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = bounds(&mut embedding.points.iter().map(|p| p.x));
    let (y0, y1) = bounds(&mut embedding.points.iter().map(|p| p.y));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| MARGIN + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        size.width, size.height, size.width, size.height
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    let _ = writeln!(out, r#"<g class="points">"#);
    for p in embedding.points.iter().filter(|p| !highlighted.contains(p.id.as_str())) {
        let tag = p.tag.as_deref().unwrap_or(UNTAGGED);
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{POINT_RADIUS}" fill="{}" fill-opacity="0.8"><title>{}</title></circle>"#,
            sx(p.x),
            sy(p.y),
            color[tag],
            escape(&p.id)
        );
    }
    let _ = writeln!(out, "</g>");

    if !highlighted.is_empty() {
        let _ = writeln!(out, r#"<g class="highlights">"#);
        for p in embedding.points.iter().filter(|p| highlighted.contains(p.id.as_str())) {
            let _ = writeln!(
                out,
                r##"<path class="highlight" d="{}" fill="{HIGHLIGHT_COLOR}" stroke="#000000" stroke-width="0.5"><title>{}</title></path>"##,
                diamond(sx(p.x), sy(p.y), DIAMOND),
                escape(&p.id)
            );
        }
        let _ = writeln!(out, "</g>");
    }

    let lx = w - LEGEND_WIDTH;
    let _ = writeln!(out, r#"<g class="legend">"#);
    let mut ly = MARGIN + 6.0;
    for c in &categories {
        let _ = writeln!(
            out,
            r#"<g class="legend-entry"><circle cx="{:.2}" cy="{:.2}" r="5" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx,
            ly,
            color[c],
            lx + 12.0,
            ly + 4.0,
            escape(c)
        );
        ly += 18.0;
    }
    if !highlighted.is_empty() {
        let _ = writeln!(
            out,
            r#"<g class="legend-highlight"><path d="{}" fill="{HIGHLIGHT_COLOR}"/><text x="{:.2}" y="{:.2}">highlighted ({})</text></g>"#,
            diamond(lx, ly, 5.0),
            lx + 12.0,
            ly + 4.0,
            highlighted.len()
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}
