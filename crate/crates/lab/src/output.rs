//! Artifact formats and atomic file output.

use std::io::Write;
use std::path::Path;

use crflow::frequency::{check_i_derivative, EigenMonotonicity, FrequencyReport};

use crate::report::Report;

/// Header of `timeseries.csv`; the column order is part of the format.
pub const TIMESERIES_COLUMNS: [&str; 17] = [
    "t",
    "Rmin",
    "Rmax",
    "pmin",
    "pmax",
    "p_bar",
    "I",
    "E",
    "Q",
    "dQdt",
    "lambda",
    "corrected_eigen",
    "k_used",
    "hypothesis_margin",
    "cauchy_schwarz_gap",
    "dI_residual",
    "eigen_residual",
];

/// Seventeen significant digits; missing values are empty fields.
fn num(x: Option<f64>) -> String {
    match x {
        Some(x) => format!("{x:.16e}"),
        None => String::new(),
    }
}

pub fn timeseries_csv(report: &FrequencyReport, eigen: Option<&EigenMonotonicity>) -> String {
    let sign = if report.h[0] > 0.0 { 1.0 } else { -1.0 };
    let di = check_i_derivative(report);
    let mut out = TIMESERIES_COLUMNS.join(",");
    out.push('\n');
    for s in 0..report.len() {
        let (lambda, corrected) = eigen
            .and_then(|em| em.samples.iter().position(|&k| k == s).map(|j| (em.lambda[j], em.corrected[j])))
            .unzip();
        let row = [
            Some(report.times[s]),
            Some(report.r_min[s]),
            Some(report.r_max[s]),
            Some(report.p_min[s]),
            Some(report.p_max[s]),
            Some(report.p_bar[s]),
            Some(report.i[s]),
            Some(report.e[s]),
            report.q[s],
            report.dqdt[s],
            lambda,
            corrected,
            Some(report.k[s]),
            Some((report.k[s] - report.k_auto[s]) * sign),
            Some(report.cauchy_schwarz(s)),
            Some(di[s]),
            report.eigen_residual(s),
        ];
        out.push_str(&row.map(num).join(","));
        out.push('\n');
    }
    out
}

/// Files produced by a subcommand.
pub struct Artifacts {
    pub report: Report,
    /// `(file name, contents)` written alongside `report.json`.
    pub tables: Vec<(&'static str, String)>,
    pub plots: Option<String>,
}

impl Artifacts {
    pub fn report_only(report: Report) -> Self {
        Artifacts {
            report,
            tables: Vec::new(),
            plots: None,
        }
    }

    pub fn with_table(report: Report, name: &'static str, contents: String) -> Self {
        Artifacts {
            report,
            tables: vec![(name, contents)],
            plots: None,
        }
    }

    pub fn for_run(report: Report, csv: String, freq: &FrequencyReport, eigen: Option<&EigenMonotonicity>) -> Self {
        Artifacts {
            report,
            tables: vec![("timeseries.csv", csv)],
            plots: Some(plots_svg(freq, eigen)),
        }
    }

    pub fn table(&self, name: &str) -> Option<&str> {
        self.tables.iter().find(|(n, _)| *n == name).map(|(_, c)| c.as_str())
    }

    /// Writes the tables, `report.json` and, when asked, `plots.svg`.
    pub fn write(&self, dir: &Path, plots: bool) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.tables {
            write_atomic(&dir.join(name), contents.as_bytes())?;
        }
        if plots {
            if let Some(svg) = &self.plots {
                write_atomic(&dir.join("plots.svg"), svg.as_bytes())?;
            }
        }
        write_atomic(&dir.join("report.json"), self.report.to_json().as_bytes())
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 48.0;

/// Line charts of `Q`, `I` and the corrected eigenvalue against `t`, side by side.
pub fn plots_svg(report: &FrequencyReport, eigen: Option<&EigenMonotonicity>) -> String {
    let q: Vec<(f64, f64)> = report
        .times
        .iter()
        .zip(&report.q)
        .filter_map(|(t, q)| q.map(|q| (*t, q)))
        .collect();
    let i: Vec<(f64, f64)> = report.times.iter().copied().zip(report.i.iter().copied()).collect();
    let lambda: Vec<(f64, f64)> = eigen
        .map(|em| em.times.iter().copied().zip(em.corrected.iter().copied()).collect())
        .unwrap_or_default();
    let panels = [("Q(t)", q), ("I(t)", i), ("h λ e^(−∫…)", lambda)];
    let width = panels.len() as f64 * (PANEL_W + MARGIN) + MARGIN;
    let height = PANEL_H + 2.0 * MARGIN;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (k, (title, pts)) in panels.iter().enumerate() {
        let x0 = MARGIN + k as f64 * (PANEL_W + MARGIN);
        svg.push_str(&panel(x0, MARGIN, title, pts));
    }
    svg.push_str("</svg>\n");
    svg
}

fn panel(x0: f64, y0: f64, title: &str, pts: &[(f64, f64)]) -> String {
    let mut s = format!(
        "<g><rect x=\"{x0}\" y=\"{y0}\" width=\"{PANEL_W}\" height=\"{PANEL_H}\" fill=\"none\" stroke=\"#444\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{title}</text>\n",
        x0 + PANEL_W / 2.0,
        y0 - 8.0
    );
    if pts.is_empty() {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#888\">not computed</text></g>\n",
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H / 2.0
        ));
        return s;
    }
    let (tmin, tmax) = bounds(pts.iter().map(|p| p.0));
    let (ymin, ymax) = bounds(pts.iter().map(|p| p.1));
    let sx = |t: f64| x0 + (t - tmin) / (tmax - tmin) * PANEL_W;
    let sy = |y: f64| y0 + PANEL_H - (y - ymin) / (ymax - ymin) * PANEL_H;
    let path: Vec<String> = pts.iter().map(|&(t, y)| format!("{:.2},{:.2}", sx(t), sy(y))).collect();
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        path.join(" ")
    ));
    let label = |x: f64, y: f64, anchor: &str, size: u32, v: f64| {
        format!("<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" font-size=\"{size}\">{v:.3e}</text>\n")
    };
    s.push_str(&label(x0 - 4.0, y0 + 10.0, "end", 9, ymax));
    s.push_str(&label(x0 - 4.0, y0 + PANEL_H, "end", 9, ymin));
    s.push_str(&label(x0, y0 + PANEL_H + 14.0, "start", 11, tmin));
    s.push_str(&label(x0 + PANEL_W, y0 + PANEL_H + 14.0, "end", 11, tmax));
    s.push_str("</g>\n");
    s
}

/// Range of the values, widened when degenerate.
fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi - lo > 1e-12 * hi.abs().max(lo.abs()).max(1e-300) {
        (lo, hi)
    } else {
        let pad = 0.5 * hi.abs().max(1.0);
        (lo - pad, hi + pad)
    }
}
