//! Coverage progression samples, their CSV form, SVG plots and merging of
//! coverage snapshots from several campaigns.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use hwfuzz_core::coverage::{coverage_pct, GlobalCoverage, SnapshotError};
use hwfuzz_core::sim::Netlist;

pub const CSV_HEADER: [&str; 7] = [
    "testcase",
    "wall_ms",
    "execs",
    "stmt_pct",
    "branch_pct",
    "edges",
    "crashes",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageSample {
    /// Corpus size when the sample was taken.
    pub testcase: u64,
    pub wall_ms: u64,
    pub execs: u64,
    pub stmt_pct: f64,
    pub branch_pct: f64,
    pub edges: u64,
    /// Unique crashes.
    pub crashes: u64,
}

/// Progress counters a sample is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Progress {
    pub testcase: u64,
    pub wall_ms: u64,
    pub execs: u64,
    pub crashes: u64,
}

pub fn record_sample(progress: Progress, global: &GlobalCoverage, netlist: &Netlist) -> CoverageSample {
    let pct = coverage_pct(global, netlist);
    CoverageSample {
        testcase: progress.testcase,
        wall_ms: progress.wall_ms,
        execs: progress.execs,
        stmt_pct: pct.stmt,
        branch_pct: pct.branch,
        edges: global.edge_count() as u64,
        crashes: progress.crashes,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed stats CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed stats CSV: {0}")]
    Format(String),
}

/// Writes samples as CSV with two-decimal percentages.
pub fn write_csv(samples: &[CoverageSample], out: impl io::Write) -> Result<(), ReportError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in samples {
        w.write_record([
            s.testcase.to_string(),
            s.wall_ms.to_string(),
            s.execs.to_string(),
            format!("{:.2}", s.stmt_pct),
            format!("{:.2}", s.branch_pct),
            s.edges.to_string(),
            s.crashes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(samples: &[CoverageSample], path: &Path) -> Result<(), ReportError> {
    write_csv(samples, io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn read_csv(input: impl io::Read) -> Result<Vec<CoverageSample>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(ReportError::Format(format!(
            "expected header `{}`",
            CSV_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let int = |i: usize| {
            rec[i].parse::<u64>().map_err(|_| {
                ReportError::Format(format!("`{}` in column {} is not an integer", &rec[i], CSV_HEADER[i]))
            })
        };
        let pct = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| ReportError::Format(format!("`{}` in column {} is not a number", &rec[i], CSV_HEADER[i])))
        };
        out.push(CoverageSample {
            testcase: int(0)?,
            wall_ms: int(1)?,
            execs: int(2)?,
            stmt_pct: pct(3)?,
            branch_pct: pct(4)?,
            edges: int(5)?,
            crashes: int(6)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XAxis {
    #[default]
    WallTime,
    Execs,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One polyline per series of statement coverage (0 to 100 %) against
/// wall time or executions, with a legend naming each series.
pub fn render_plot(series: &[(String, Vec<CoverageSample>)], axis: XAxis) -> String {
    let x_of = |s: &CoverageSample| match axis {
        XAxis::WallTime => s.wall_ms as f64,
        XAxis::Execs => s.execs as f64,
    };
    let x_max = series
        .iter()
        .flat_map(|(_, s)| s.iter().map(x_of))
        .fold(1.0f64, f64::max);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + x / x_max * plot_w;
    let py = |y: f64| TOP + (1.0 - y.clamp(0.0, 100.0) / 100.0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    for pct in [0.0, 25.0, 50.0, 75.0, 100.0] {
        let y = py(pct);
        let _ = writeln!(
            svg,
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>",
            LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{pct}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for k in 0..=4 {
        let x = x_max * f64::from(k) / 4.0;
        let label = match axis {
            XAxis::WallTime => format!("{:.1}", x / 1000.0),
            XAxis::Execs => format!("{x:.0}"),
        };
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            px(x),
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let x_label = match axis {
        XAxis::WallTime => "wall time (s)",
        XAxis::Execs => "executions",
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">statement coverage (%)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    for (i, (name, samples)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = samples
            .iter()
            .map(|s| format!("{:.2},{:.2}", px(x_of(s)), py(s.stmt_pct)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-name="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(name),
            points.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            svg,
            r#"<line class="legend" x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn emit_plot(series: &[(String, Vec<CoverageSample>)], axis: XAxis, path: &Path) -> io::Result<()> {
    std::fs::write(path, render_plot(series, axis))
}

#[derive(Debug, thiserror::Error)]
pub enum MergeError {
    #[error("{path}: {source}")]
    Snapshot { path: String, source: SnapshotError },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("no coverage snapshots given")]
    Empty,
}

impl MergeError {
    pub fn category(&self) -> &'static str {
        match self {
            MergeError::Snapshot { source, .. } => source.category(),
            MergeError::Io { .. } => "io",
            MergeError::Empty => "usage",
        }
    }
}

/// Folds coverage snapshot files into one, refusing snapshots of
/// different netlists.
pub fn merge_campaign_covs<P: AsRef<Path>>(paths: &[P]) -> Result<GlobalCoverage, MergeError> {
    let mut merged: Option<GlobalCoverage> = None;
    for p in paths {
        let path = p.as_ref().display().to_string();
        let bytes = std::fs::read(p).map_err(|source| MergeError::Io {
            path: path.clone(),
            source,
        })?;
        let snap = GlobalCoverage::from_snapshot(&bytes).map_err(|source| MergeError::Snapshot {
            path: path.clone(),
            source,
        })?;
        match &mut merged {
            None => merged = Some(snap),
            Some(m) => m
                .merge_global(&snap)
                .map_err(|source| MergeError::Snapshot { path, source })?,
        }
    }
    merged.ok_or(MergeError::Empty)
}
