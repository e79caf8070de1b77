//! Hand-rolled SVG line charts. Everything is inline (shapes, text, colors),
//! so the files open anywhere without external assets.

use std::fmt::Write as _;

use upin_core::decay::GaussianRateFit;
use upin_core::DecayReport;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 48.0;
const MARGIN_B: f64 = 64.0;

const SERIES_A: &str = "#33658a";
const SERIES_B: &str = "#d1495b";

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(0.01..10_000.0).contains(&a) {
        return format!("{v:.1e}");
    }
    let mut s = format!("{v:.3}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn open_chart(title: &str, digest: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, "<!-- run digest sha256:{digest} -->");
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="26" font-size="17" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    );
    s
}

fn draw_axes(s: &mut String, ax: &Axes, x_label: &str, y_label: &str) {
    let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
    let (y0, y1) = (HEIGHT - MARGIN_B, MARGIN_T);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = ax.x_min + f * (ax.x_max - ax.x_min);
        let yv = ax.y_min + f * (ax.y_max - ax.y_min);
        let xp = ax.px(xv);
        let yp = ax.py(yv);
        let _ = writeln!(
            s,
            r##"<line x1="{xp:.2}" y1="{y0:.2}" x2="{xp:.2}" y2="{y1:.2}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.2}" y1="{yp:.2}" x2="{x1:.2}" y2="{yp:.2}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{xp:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            yp + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{x_label}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.1})">{y_label}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
}

fn polyline(s: &mut String, ax: &Axes, pts: &[(f64, f64)], color: &str, dashed: bool) {
    if pts.len() < 2 {
        return;
    }
    let mut d = String::new();
    for (x, y) in pts {
        let _ = write!(d, "{:.2},{:.2} ", ax.px(*x), ax.py(*y));
    }
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
        d.trim_end()
    );
}

fn markers(s: &mut String, ax: &Axes, pts: &[(f64, f64)], color: &str) {
    for (x, y) in pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
            ax.px(*x),
            ax.py(*y)
        );
    }
}

fn legend(s: &mut String, entries: &[(&str, &str)]) {
    let x = MARGIN_L + 14.0;
    let mut y = MARGIN_T + 16.0;
    for (color, label) in entries {
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{:.1}" width="14" height="14" fill="{color}"/>"#,
            y - 11.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{y:.1}" font-size="13">{label}</text>"#,
            x + 20.0
        );
        y += 22.0;
    }
}

fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.06 * (hi - lo);
    (lo - pad, hi + pad)
}

/// European and up-and-in price against maturity.
pub fn prices_chart(report: &DecayReport, digest: &str) -> String {
    let mut european: Vec<(f64, f64)> =
        report.rows.iter().map(|r| (r.maturity, r.european)).collect();
    let mut up_in: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.maturity, r.up_in)).collect();
    european.sort_by(|a, b| a.0.total_cmp(&b.0));
    up_in.sort_by(|a, b| a.0.total_cmp(&b.0));

    let x_max = european.last().map_or(1.0, |p| p.0);
    let y_max = european
        .iter()
        .chain(&up_in)
        .map(|p| p.1)
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let ax = Axes { x_min: 0.0, x_max: x_max * 1.04, y_min: 0.0, y_max: y_max * 1.1 };

    let mut s = open_chart("Option prices against maturity", digest);
    draw_axes(&mut s, &ax, "maturity (years)", "price");
    polyline(&mut s, &ax, &european, SERIES_A, false);
    polyline(&mut s, &ax, &up_in, SERIES_B, false);
    markers(&mut s, &ax, &european, SERIES_A);
    markers(&mut s, &ax, &up_in, SERIES_B);
    legend(&mut s, &[(SERIES_A, "European call"), (SERIES_B, "up-and-in call")]);
    s.push_str("</svg>\n");
    s
}

/// Legend line for the fitted decay; kept in one place so reports and tests
/// agree on the exact text.
pub fn rate_fit_label(fit: &GaussianRateFit) -> String {
    format!(
        "fit: slope {:.6}, intercept {:.6}, R^2 {:.4}",
        fit.slope, fit.intercept, fit.r_squared
    )
}

/// `ln P(hit)` against `1/T`, with the least-squares line when available.
/// Straighter is more Gaussian; the slope is `-(b - x0)^2 / (2 C^2)`-shaped.
pub fn rate_chart(report: &DecayReport, fit: Option<&GaussianRateFit>, digest: &str) -> String {
    let mut pts: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.hit_prob > 0.0)
        .map(|r| (1.0 / r.maturity, r.hit_prob.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut s = open_chart("Barrier hit probability decay", digest);
    if pts.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">no positive hit-probability estimates</text>"#,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    }

    let x_hi = pts.last().unwrap().0;
    let (y_lo, y_hi) = pad_range(
        pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let ax = Axes { x_min: 0.0, x_max: x_hi * 1.05, y_min: y_lo, y_max: y_hi };

    draw_axes(&mut s, &ax, "1/T (1/years)", "ln P(hit)");
    let mut entries = vec![(SERIES_A, "measured ln P(hit)".to_string())];
    if let Some(f) = fit {
        let line = [
            (ax.x_min, f.intercept + f.slope * ax.x_min),
            (ax.x_max, f.intercept + f.slope * ax.x_max),
        ];
        polyline(&mut s, &ax, &line, SERIES_B, true);
        entries.push((SERIES_B, rate_fit_label(f)));
    }
    polyline(&mut s, &ax, &pts, SERIES_A, false);
    markers(&mut s, &ax, &pts, SERIES_A);
    let entry_refs: Vec<(&str, &str)> =
        entries.iter().map(|(c, l)| (*c, l.as_str())).collect();
    legend(&mut s, &entry_refs);
    s.push_str("</svg>\n");
    s
}
