//! Static SVG charts of daily cumulative infections and rewards.
//!
//! For every (zeta, recovery_days) cell there is one chart pair comparing the
//! single-style scenarios (`Compare_Each*`) and one comparing the mixed
//! scenarios against full cooperation (`Compare_Rider*`). Lines are seed
//! means; the shaded band spans the seed minimum to maximum. Output is a pure
//! function of the input tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{CellResult, Scenario};
use crate::model::Style;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    Infections,
    Reward,
}

impl Metric {
    fn label(self) -> &'static str {
        match self {
            Metric::Infections => "cumulative infections",
            Metric::Reward => "cumulative total reward",
        }
    }
}

/// Per-day mean, min and max across seeds.
struct Series {
    name: String,
    mean: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn series(name: String, cells: &[&CellResult], metric: Metric) -> Series {
    let daily: Vec<Vec<f64>> = cells
        .iter()
        .map(|c| {
            c.trace
                .daily()
                .iter()
                .map(|d| match metric {
                    Metric::Infections => d.cum_infections as f64,
                    Metric::Reward => d.cum_reward,
                })
                .collect()
        })
        .collect();
    let days = daily.iter().map(Vec::len).min().unwrap_or(0);
    let mut s = Series {
        name,
        mean: Vec::with_capacity(days),
        lo: Vec::with_capacity(days),
        hi: Vec::with_capacity(days),
    };
    for d in 0..days {
        let vals: Vec<f64> = daily.iter().map(|v| v[d]).collect();
        s.mean.push(vals.iter().sum::<f64>() / vals.len() as f64);
        s.lo.push(vals.iter().copied().fold(f64::INFINITY, f64::min));
        s.hi.push(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    s
}

/// A round axis maximum at or above `v`.
fn nice_max(v: f64) -> f64 {
    if v <= 0.0 || !v.is_finite() {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&m| m >= v)
        .unwrap_or(10.0 * mag)
}

fn render(title: &str, metric: Metric, all: &[Series]) -> String {
    let days = all.iter().map(|s| s.mean.len()).max().unwrap_or(0).max(1);
    let ymax = nice_max(all.iter().flat_map(|s| s.hi.iter().copied()).fold(0.0, f64::max));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |d: usize| LEFT + pw * (d as f64 + 1.0) / days as f64;
    let y = |v: f64| TOP + ph * (1.0 - v / ymax);

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(w, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{title}</text>"#, LEFT + pw / 2.0).unwrap();

    for k in 0..=5 {
        let v = ymax * k as f64 / 5.0;
        let yy = y(v);
        writeln!(
            w,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            yy + 4.0,
            trim(v)
        )
        .unwrap();
    }
    let xstep = if days > 50 { 10 } else { 5.min(days) };
    for d in (0..=days).step_by(xstep.max(1)) {
        let xx = LEFT + pw * d as f64 / days as f64;
        writeln!(
            w,
            r#"<text x="{xx:.2}" y="{:.2}" text-anchor="middle">{d}</text>"#,
            TOP + ph + 18.0
        )
        .unwrap();
    }
    writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">day</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0).unwrap();
    writeln!(
        w,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        metric.label()
    )
    .unwrap();

    for (k, s) in all.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut band = String::new();
        for (d, v) in s.hi.iter().enumerate() {
            write!(band, "{:.2},{:.2} ", x(d), y(*v)).unwrap();
        }
        for (d, v) in s.lo.iter().enumerate().rev() {
            write!(band, "{:.2},{:.2} ", x(d), y(*v)).unwrap();
        }
        writeln!(w, r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#, band.trim_end()).unwrap();
        let line: Vec<String> = s.mean.iter().enumerate().map(|(d, v)| format!("{:.2},{:.2}", x(d), y(*v))).collect();
        writeln!(w, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#, line.join(" ")).unwrap();
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        writeln!(
            w,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            s.name
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn trim(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn scenario_name(s: Scenario) -> String {
    match s {
        Scenario::Single(Style::Cooperative) => "cooperative".into(),
        Scenario::Single(Style::Egocentric) => "egocentric".into(),
        Scenario::Single(Style::Ignorant) => "ignorant".into(),
        Scenario::Mixed { kind, count } => format!("{count} {kind} riders"),
    }
}

fn grouped(cells: &[CellResult], zeta: f64, rd: f64, keep: impl Fn(Scenario) -> bool) -> Vec<(Scenario, Vec<&CellResult>)> {
    let mut groups: Vec<(Scenario, Vec<&CellResult>)> = Vec::new();
    for c in cells
        .iter()
        .filter(|c| c.key.zeta == zeta && c.key.recovery_days == rd && keep(c.key.scenario))
    {
        match groups.iter_mut().find(|(s, _)| *s == c.key.scenario) {
            Some((_, v)) => v.push(c),
            None => groups.push((c.key.scenario, vec![c])),
        }
    }
    groups.sort_by_key(|(s, _)| *s);
    groups
}

/// Render every chart for `cells` into `out_dir`; returns the files written.
/// No cells means no files.
pub fn emit_plots(cells: &[CellResult], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut grid: Vec<(f64, f64)> = Vec::new();
    for c in cells {
        let k = (c.key.zeta, c.key.recovery_days);
        if !grid.contains(&k) {
            grid.push(k);
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut written = Vec::new();
    for (zeta, rd) in grid {
        let tag = format!("RT{rd}_Inf{zeta:.2}");
        let each = grouped(cells, zeta, rd, |s| matches!(s, Scenario::Single(_)));
        let riders = grouped(cells, zeta, rd, |s| {
            matches!(s, Scenario::Mixed { .. } | Scenario::Single(Style::Cooperative))
        });
        let has_riders = riders.iter().any(|(s, _)| matches!(s, Scenario::Mixed { .. }));
        let mut charts = vec![];
        if !each.is_empty() {
            charts.push(("Each", &each));
        }
        if has_riders {
            charts.push(("Rider", &riders));
        }
        for (family, groups) in charts {
            for (metric, word) in [(Metric::Infections, "Infection"), (Metric::Reward, "Reward")] {
                let all: Vec<Series> = groups
                    .iter()
                    .map(|(s, members)| series(scenario_name(*s), members, metric))
                    .collect();
                let title = format!("{} (infection rate {zeta:.2}, recovery {rd} days)", metric.label());
                let path = out_dir.join(format!("Compare_{family}{word}_{tag}.svg"));
                std::fs::write(&path, render(&title, metric, &all)).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
