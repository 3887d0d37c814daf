use std::fmt::Write as _;

use crate::numerics::DenseMatrix;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;
const LEGEND_WIDTH: f64 = 150.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

fn colour(class: usize) -> &'static str {
    PALETTE[(class - 1) % PALETTE.len()]
}

fn marker(out: &mut String, source: bool, x: f64, y: f64, fill: &str, class_attr: &str) {
    if source {
        let _ = writeln!(
            out,
            r#"<circle class="{class_attr}" cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{fill}" fill-opacity="0.8"/>"#
        );
    } else {
        let _ = writeln!(
            out,
            r#"<path class="{class_attr}" d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} Z" fill="none" stroke="{fill}" stroke-width="1.3"/>"#,
            x,
            y - 4.5,
            x - 4.0,
            y + 3.0,
            x + 4.0,
            y + 3.0
        );
    }
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

/// Renders the first two rows of `embedded` (columns: source samples, then
/// target samples) as an SVG scatter. Colour encodes the class, filled
/// circles mark source samples and hollow triangles target samples. The
/// legend lists every class present in either domain, once per domain.
///
/// Returns `None` when `embedded` has fewer than two rows or the label counts
/// do not match its columns.
pub fn render_scatter(embedded: &DenseMatrix, labels_s: &[usize], labels_t: &[usize]) -> Option<String> {
    let n = labels_s.len() + labels_t.len();
    if embedded.nrows() < 2 || embedded.ncols() != n || labels_s.iter().chain(labels_t).any(|&l| l == 0) {
        return None;
    }
    let (x0, x1) = span(embedded.row(0).iter().copied());
    let (y0, y1) = span(embedded.row(1).iter().copied());
    let plot_w = WIDTH - 2.0 * MARGIN - LEGEND_WIDTH;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0) * plot_w;
    let py = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">dimension 1</text>"#,
        MARGIN + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 12 {:.1})">dimension 2</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    let _ = writeln!(out, r#"<g id="points">"#);
    for (i, &label) in labels_s.iter().chain(labels_t).enumerate() {
        let source = i < labels_s.len();
        marker(&mut out, source, px(embedded[(0, i)]), py(embedded[(1, i)]), colour(label), "point");
    }
    let _ = writeln!(out, "</g>");

    let mut classes: Vec<usize> = labels_s.iter().chain(labels_t).copied().collect();
    classes.sort_unstable();
    classes.dedup();
    let _ = writeln!(out, r#"<g id="legend" font-family="sans-serif" font-size="11">"#);
    let lx = WIDTH - LEGEND_WIDTH;
    let mut row = 0;
    for (source, domain) in [(true, "source"), (false, "target")] {
        for &c in &classes {
            let y = MARGIN + 8.0 + 16.0 * row as f64;
            let _ = writeln!(out, r#"<g class="legend-entry">"#);
            marker(&mut out, source, lx + 6.0, y, colour(c), "legend-marker");
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">class {c} ({domain})</text>"#, lx + 16.0, y + 4.0);
            let _ = writeln!(out, "</g>");
            row += 1;
        }
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Some(out)
}
