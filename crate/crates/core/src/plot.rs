//! Minimal SVG renderers for rank histograms, ECDF differences and
//! evolution traces.
//!
//! Plotted points carry their exact values in `data-*` attributes so a
//! figure can be checked against the report files it was drawn from.

use std::fmt::Write;

use crate::binomial::ln_tails;
use crate::diagnostics::{EcdfBand, EvolutionPoint, RankSet};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Default histogram resolution: `min(M+1, 20)` bins.
pub fn default_hist_bins(max_rank: u32) -> usize {
    (max_rank as usize + 1).min(20)
}

fn header(out: &mut String, title: &str, timestamp: Option<&str>) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    if let Some(ts) = timestamp {
        let _ = writeln!(out, "<!-- generated {ts} -->");
    }
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<path d="M{m} {t} L{m} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
}

struct Scale {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Scale {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) / (self.x1 - self.x0).max(f64::MIN_POSITIVE) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y0) / (self.y1 - self.y0).max(f64::MIN_POSITIVE) * (HEIGHT - 2.0 * MARGIN)
    }
}

/// Rank histogram with the per-bin interval implied by the band's
/// pointwise level shaded behind it.
pub fn rank_histogram_svg(
    quantity: &str,
    ranks: &RankSet,
    band: &EcdfBand,
    n_bins: usize,
    timestamp: Option<&str>,
) -> String {
    let points = ranks.max_rank() as usize + 1;
    let n_bins = n_bins.clamp(1, points);
    let counts = ranks.counts();
    let sims = ranks.len() as u64;
    let ln_half = band.alpha.ln() - std::f64::consts::LN_2;

    let bins: Vec<(u64, u64, u64)> = (0..n_bins)
        .map(|j| {
            let start = j * points / n_bins;
            let end = (j + 1) * points / n_bins;
            let observed = counts[start..end].iter().sum();
            let p = (end - start) as f64 / points as f64;
            let lo = (0..=sims).find(|&k| ln_tails(sims, p, k).0 >= ln_half).unwrap_or(0);
            let hi = (0..=sims).rev().find(|&k| ln_tails(sims, p, k).1 >= ln_half).unwrap_or(sims);
            (observed, lo, hi)
        })
        .collect();
    let top = bins.iter().map(|b| b.0.max(b.2)).max().unwrap_or(1).max(1) as f64;
    let scale = Scale { x0: 0.0, x1: n_bins as f64, y0: 0.0, y1: top * 1.05 };

    let mut out = String::new();
    header(&mut out, &format!("{quantity}: rank histogram (S={}, M={})", sims, ranks.max_rank()), timestamp);
    for (j, &(observed, lo, hi)) in bins.iter().enumerate() {
        let (xa, xb) = (scale.x(j as f64), scale.x(j as f64 + 1.0));
        let _ = writeln!(
            out,
            r##"<rect x="{xa:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#dddddd"/>"##,
            scale.y(hi as f64),
            xb - xa,
            scale.y(lo as f64) - scale.y(hi as f64)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" fill-opacity="0.8" data-bin="{j}" data-count="{observed}"/>"##,
            xa + 1.0,
            scale.y(observed as f64),
            (xb - xa - 2.0).max(0.5),
            scale.y(0.0) - scale.y(observed as f64)
        );
    }
    axes(&mut out);
    out.push_str("</svg>\n");
    out
}

/// `#{ranks < i}/S - i/(M+1)` with the band drawn on the same scale.
pub fn ecdf_difference_svg(quantity: &str, ranks: &RankSet, band: &EcdfBand, timestamp: Option<&str>) -> String {
    let points = ranks.max_rank() as usize + 1;
    let s = ranks.len().max(1) as f64;
    let z = |i: usize| (i + 1) as f64 / points as f64;
    let diff: Vec<f64> = ranks.counts_below().iter().enumerate().map(|(i, &c)| c as f64 / s - z(i)).collect();
    let lower: Vec<f64> = band.lower.iter().enumerate().map(|(i, &c)| c as f64 / s - z(i)).collect();
    let upper: Vec<f64> = band.upper.iter().enumerate().map(|(i, &c)| c as f64 / s - z(i)).collect();
    let extent = diff
        .iter()
        .chain(&lower)
        .chain(&upper)
        .fold(0.01f64, |a, v| a.max(v.abs()));
    let scale = Scale { x0: 0.0, x1: 1.0, y0: -extent * 1.05, y1: extent * 1.05 };

    let mut out = String::new();
    header(&mut out, &format!("{quantity}: ECDF difference"), timestamp);
    let mut poly = String::new();
    for (i, v) in upper.iter().enumerate() {
        let _ = write!(poly, "{:.2},{:.2} ", scale.x(z(i)), scale.y(*v));
    }
    for (i, v) in lower.iter().enumerate().rev() {
        let _ = write!(poly, "{:.2},{:.2} ", scale.x(z(i)), scale.y(*v));
    }
    let _ = writeln!(out, r##"<polygon points="{}" fill="#dddddd"/>"##, poly.trim_end());
    let line: Vec<String> = diff
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{:.2},{:.2}", scale.x(z(i)), scale.y(*v)))
        .collect();
    let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#4c72b0"/>"##, line.join(" "));
    let _ = writeln!(
        out,
        r#"<line x1="{m}" x2="{r}" y1="{y}" y2="{y}" stroke="black" stroke-dasharray="4"/>"#,
        m = MARGIN,
        r = WIDTH - MARGIN,
        y = scale.y(0.0)
    );
    axes(&mut out);
    out.push_str("</svg>\n");
    out
}

/// One line per quantity; the dashed line at zero is the rejection threshold.
pub fn evolution_svg(points: &[EvolutionPoint], timestamp: Option<&str>) -> String {
    let mut quantities: Vec<&str> = Vec::new();
    for p in points {
        if !quantities.contains(&p.quantity.as_str()) {
            quantities.push(&p.quantity);
        }
    }
    let finite = points.iter().map(|p| p.log_ratio).filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((-1.0f64, 1.0f64), |(a, b), v| (a.min(v), b.max(v)));
    let max_n = points.iter().map(|p| p.n_sims).max().unwrap_or(1) as f64;
    let scale = Scale { x0: 0.0, x1: max_n, y0: lo, y1: hi };

    let mut out = String::new();
    header(&mut out, "log(gamma / gamma_bar) by number of simulations", timestamp);
    let _ = writeln!(
        out,
        r#"<line x1="{m}" x2="{r}" y1="{y:.2}" y2="{y:.2}" stroke="black" stroke-dasharray="4"/>"#,
        m = MARGIN,
        r = WIDTH - MARGIN,
        y = scale.y(0.0)
    );
    for (k, q) in quantities.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let series: Vec<&EvolutionPoint> = points.iter().filter(|p| p.quantity == *q).collect();
        let coords: Vec<String> = series
            .iter()
            .map(|p| format!("{:.2},{:.2}", scale.x(p.n_sims as f64), scale.y(p.log_ratio.clamp(lo, hi))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" data-quantity="{}"/>"#,
            coords.join(" "),
            escape(q)
        );
        for p in series {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1" fill="{color}" data-n-sims="{}" data-log-ratio="{}"/>"#,
                scale.x(p.n_sims as f64),
                scale.y(p.log_ratio.clamp(lo, hi)),
                p.n_sims,
                p.log_ratio
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 14.0 * k as f64,
            escape(q)
        );
    }
    axes(&mut out);
    out.push_str("</svg>\n");
    out
}
