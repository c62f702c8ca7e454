//! SVG tail plots: one panel per tail, empirical tail as points and the
//! fitted normal, stable and κ-generalised tails as curves, log y-axis.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kexp::KappaParams;
use crate::mle::NormalParams;
use crate::returns::{split_tails, ReturnSeries, Tail};
use crate::stable::StableParams;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const PANEL_W: f64 = 400.0;
const PANEL_H: f64 = 320.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_TOP: f64 = 40.0;
const PANEL_GAP: f64 = 80.0;
const CURVE_POINTS: usize = 200;

/// Fitted models shown on the plot.
#[derive(Debug, Clone, Copy)]
pub struct PlotModels {
    pub normal: NormalParams,
    pub stable: StableParams,
    pub kappa_neg: KappaParams,
    pub kappa_pos: KappaParams,
}

struct Series {
    family: &'static str,
    colour: &'static str,
    points: Vec<(f64, f64)>,
}

/// Renders both tails of `returns`. Each panel shows the conditional tail
/// `P(|R| > x | R in tail)`, so the empirical points run from 1 down to `1/n`.
pub fn tail_plot_svg(returns: &ReturnSeries, models: &PlotModels) -> Result<String> {
    let tails = split_tails(returns)?;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&returns.ticker)
    )
    .unwrap();
    for (k, tail) in Tail::BOTH.into_iter().enumerate() {
        let xs = tails.require(tail)?;
        let curves = curves(tail, xs, models)?;
        let left = MARGIN_LEFT + k as f64 * (PANEL_W + PANEL_GAP);
        panel(&mut svg, tail, xs, &curves, left);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn curves(tail: Tail, xs: &[f64], m: &PlotModels) -> Result<Vec<Series>> {
    let x_max = xs.iter().copied().fold(0.0, f64::max);
    let grid: Vec<f64> = (1..=CURVE_POINTS).map(|i| x_max * i as f64 / CURVE_POINTS as f64).collect();
    let (kappa, normal_at, stable_at): (KappaParams, Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> Result<f64>>) =
        match tail {
            Tail::Negative => {
                let n0 = 1.0 - m.normal.survival(0.0);
                let s0 = m.stable.cdf(0.0)?;
                (
                    m.kappa_neg,
                    Box::new(move |x| (1.0 - m.normal.survival(-x)) / n0),
                    Box::new(move |x| Ok(m.stable.cdf(-x)? / s0)),
                )
            }
            Tail::Positive => {
                let n0 = m.normal.survival(0.0);
                let s0 = m.stable.sf(0.0)?;
                (
                    m.kappa_pos,
                    Box::new(move |x| m.normal.survival(x) / n0),
                    Box::new(move |x| Ok(m.stable.sf(x)? / s0)),
                )
            }
        };
    let mut out = vec![
        Series { family: "normal", colour: "#1f77b4", points: Vec::new() },
        Series { family: "stable", colour: "#2ca02c", points: Vec::new() },
        Series { family: "kappa", colour: "#d62728", points: Vec::new() },
    ];
    for &x in &grid {
        out[0].points.push((x, normal_at(x)));
        out[1].points.push((x, stable_at(x)?));
        out[2].points.push((x, kappa.survival(x)?));
    }
    if out.iter().any(|s| s.points.iter().any(|p| !p.1.is_finite())) {
        return Err(Error::Numerical("non-finite model tail in plot".into()));
    }
    Ok(out)
}

fn panel(svg: &mut String, tail: Tail, xs: &[f64], curves: &[Series], left: f64) {
    let n = xs.len();
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let x_max = sorted[n - 1] * 1.05;
    let y_min = 0.5 / n as f64;
    let (ly_lo, ly_hi) = (y_min.log10(), 0.0);
    let top = MARGIN_TOP;
    let px = |x: f64| left + PANEL_W * x / x_max;
    let py = |y: f64| top + PANEL_H * (ly_hi - y.log10()) / (ly_hi - ly_lo);

    writeln!(svg, r#"<g class="panel" data-tail="{}">"#, tail.as_str()).unwrap();
    writeln!(
        svg,
        r#"<rect x="{left:.2}" y="{top:.2}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    let title = match tail {
        Tail::Negative => "negative tail, x = -r",
        Tail::Positive => "positive tail, x = r",
    };
    writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{title}</text>"#, left + PANEL_W / 2.0, top - 8.0)
        .unwrap();

    // Decade ticks on the log axis.
    let mut decade = 0i32;
    while (decade as f64) >= ly_lo {
        let y = py(10f64.powi(decade));
        writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"#,
            left - 4.0,
            left - 6.0,
            y + 4.0
        )
        .unwrap();
        decade -= 1;
    }
    for i in 0..=4 {
        let x = x_max * i as f64 / 4.0;
        let sx = px(x);
        writeln!(
            svg,
            r#"<line x1="{sx:.2}" y1="{:.2}" x2="{sx:.2}" y2="{:.2}" stroke="black"/><text x="{sx:.2}" y="{:.2}" text-anchor="middle">{x:.3}</text>"#,
            top + PANEL_H,
            top + PANEL_H + 4.0,
            top + PANEL_H + 16.0
        )
        .unwrap();
    }

    writeln!(svg, r##"<g class="empirical" fill="#555">"##).unwrap();
    for (i, &x) in sorted.iter().enumerate() {
        let p = (n - i) as f64 / n as f64;
        writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="1.2"/>"#, px(x), py(p)).unwrap();
    }
    svg.push_str("</g>\n");

    for c in curves {
        let pts: Vec<String> = c
            .points
            .iter()
            .take_while(|p| p.1 >= y_min)
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y.min(1.0))))
            .collect();
        writeln!(
            svg,
            r#"<polyline class="curve" data-family="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            c.family,
            c.colour,
            pts.join(" ")
        )
        .unwrap();
    }
    for (k, c) in curves.iter().enumerate() {
        let y = top + 16.0 + 14.0 * k as f64;
        let x = left + PANEL_W - 90.0;
        writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 18.0,
            c.colour,
            x + 22.0,
            y + 4.0,
            c.family
        )
        .unwrap();
    }
    svg.push_str("</g>\n");
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure() {
        let k = KappaParams::new(0.5, 1.2, 60.0).unwrap();
        let mut r: Vec<f64> = k.sample(300, 1);
        r.extend(k.sample(300, 2).into_iter().map(|x| -x));
        let returns = ReturnSeries { ticker: "A&B".into(), returns: r };
        let models = PlotModels {
            normal: NormalParams::new(0.0, 0.02).unwrap(),
            stable: StableParams::new(1.7, 0.0, 0.01, 0.0).unwrap(),
            kappa_neg: k,
            kappa_pos: k,
        };
        let svg = tail_plot_svg(&returns, &models).unwrap();
        assert_eq!(svg.matches(r#"class="panel""#).count(), 2);
        assert_eq!(svg.matches(r#"class="curve""#).count(), 6);
        assert!(svg.contains("A&amp;B"));
        assert_eq!(svg, tail_plot_svg(&returns, &models).unwrap());
    }
}
