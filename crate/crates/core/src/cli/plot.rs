//! Hand-written SVG chart of mean test error against `n`.

use std::fmt::Write as _;

use super::experiment::CellSummary;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

/// One polyline per `(d, γ)` on a log-scaled `n` axis, plus a dashed line at the Bayes error.
pub fn render_svg(summary: &[CellSummary], bayes: f64) -> String {
    let points: Vec<&CellSummary> = summary
        .iter()
        .filter(|s| s.mean_test_error.is_finite())
        .collect();
    let (n_min, n_max) = summary.iter().fold((usize::MAX, 0usize), |(lo, hi), s| {
        (lo.min(s.n), hi.max(s.n))
    });
    let (n_min, n_max) = if summary.is_empty() {
        (1, 10)
    } else {
        (n_min, n_max)
    };
    let x_lo = (n_min as f64).log10().floor();
    let mut x_hi = (n_max as f64).log10().ceil();
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let y_top = points
        .iter()
        .map(|s| s.mean_test_error)
        .fold(bayes, f64::max)
        .max(0.01)
        * 1.1;
    let y_step = nice_step(y_top);
    let y_hi = (y_top / y_step).ceil() * y_step;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |n: f64| LEFT + (n.log10() - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |e: f64| TOP + (1.0 - e / y_hi) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    // x ticks at powers of ten
    let mut e = x_lo as i32;
    while e as f64 <= x_hi {
        let x = px(10f64.powi(e));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0
        );
        e += 1;
    }
    let mut k = 0;
    loop {
        let v = k as f64 * y_step;
        if v > y_hi + 1e-12 {
            break;
        }
        let y = py(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
        k += 1;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n (training samples, log scale)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">mean test error</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let yb = py(bayes);
    let _ = writeln!(
        svg,
        r#"<line class="bayes" x1="{LEFT}" y1="{yb:.2}" x2="{:.2}" y2="{yb:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
        LEFT + plot_w
    );

    let mut series: Vec<(usize, f64, Vec<&CellSummary>)> = Vec::new();
    for s in &points {
        match series
            .iter_mut()
            .find(|(d, g, _)| *d == s.d && *g == s.gamma)
        {
            Some(entry) => entry.2.push(s),
            None => series.push((s.d, s.gamma, vec![s])),
        }
    }
    let multi_gamma = series.iter().any(|(_, g, _)| *g != series[0].1);
    let legend_x = LEFT + plot_w + 15.0;
    for (idx, (d, gamma, cells)) in series.iter_mut().enumerate() {
        cells.sort_by_key(|c| c.n);
        let color = COLORS[idx % COLORS.len()];
        let coords: Vec<String> = cells
            .iter()
            .map(|c| format!("{:.2},{:.2}", px(c.n as f64), py(c.mean_test_error)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-d="{d}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for c in cells.iter() {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(c.n as f64),
                py(c.mean_test_error)
            );
        }
        let ly = TOP + 15.0 + 20.0 * idx as f64;
        let label = if multi_gamma {
            format!("d = {d}, γ = {gamma}")
        } else {
            format!("d = {d}")
        };
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            legend_x + 20.0,
            legend_x + 26.0,
            ly + 4.0
        );
    }
    let ly = TOP + 15.0 + 20.0 * series.len() as f64;
    let _ = writeln!(
        svg,
        r#"<line x1="{legend_x:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="gray" stroke-dasharray="6,4"/><text x="{:.2}" y="{:.2}">Bayes error</text>"#,
        legend_x + 20.0,
        legend_x + 26.0,
        ly + 4.0
    );
    svg.push_str("</svg>\n");
    svg
}
