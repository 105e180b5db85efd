//! Batch harness for the random qubit-channel capacity scans.
//!
//! [`run_scatter`] samples channels per rank, evaluates every capacity and
//! gap (plus the decomposition bound when asked) and returns rows ordered by
//! `(rank, index)`. Rows persist as CSV and render as SVG scatter plots.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{CapacityReport, OptimizerConfig};
use crate::channel::QChannel;
use crate::decompose::decompose_channel;
use crate::sampling::{sample_one, SampleSpec};
use crate::{Error, Result};

/// First line of every results file.
pub const CSV_VERSION_LINE: &str = "#capgaps-results v1";

/// Column order of the results file.
pub const CSV_HEADER: [&str; 19] = [
    "index",
    "rank",
    "seed",
    "t_norm",
    "t_frob",
    "q1",
    "q2",
    "q5",
    "q4",
    "q3_ub",
    "dq15",
    "dq25",
    "dq24",
    "dq23",
    "dq34",
    "residual",
    "q5_converged",
    "q4_converged",
    "q3_converged",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ranks: Vec<usize>,
    /// Channels per rank.
    pub count: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    /// Also run the convex-decomposition search for the `Q_III` bound.
    pub decompose: bool,
    pub csv_path: Option<PathBuf>,
    pub svg_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ranks: vec![2, 3, 4],
            count: 200,
            seed: 0,
            optimizer: OptimizerConfig::default(),
            threads: 0,
            decompose: false,
            csv_path: None,
            svg_path: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ranks.is_empty() || self.ranks.iter().any(|r| !(2..=4).contains(r)) {
            return Err(Error::Precondition(format!(
                "ranks must be a non-empty subset of {{2, 3, 4}}, got {:?}",
                self.ranks
            )));
        }
        if self.count == 0 {
            return Err(Error::Precondition("count must be at least 1".into()));
        }
        self.optimizer.validate()
    }
}

/// One channel of a scan. Gap columns are differences of the capacity
/// columns; the `Q_III` columns are empty unless a decomposition was accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub index: usize,
    pub rank: usize,
    /// Optimizer seed used for this channel.
    pub seed: u64,
    pub t_norm: f64,
    pub t_frob: f64,
    pub q1: f64,
    pub q2: f64,
    pub q5: f64,
    pub q4: f64,
    pub q3_ub: Option<f64>,
    pub dq15: f64,
    pub dq25: f64,
    pub dq24: f64,
    pub dq23: Option<f64>,
    pub dq34: Option<f64>,
    /// Choi residual of the best decomposition attempt.
    pub residual: Option<f64>,
    pub q5_converged: bool,
    pub q4_converged: bool,
    pub q3_converged: Option<bool>,
}

impl ResultRow {
    fn from_report(index: usize, rank: usize, seed: u64, r: &CapacityReport) -> Self {
        ResultRow {
            index,
            rank,
            seed,
            t_norm: r.t_norm.unwrap_or(f64::NAN),
            t_frob: r.t_frob.unwrap_or(f64::NAN),
            q1: r.q1,
            q2: r.q2,
            q5: r.q5,
            q4: r.q4,
            q3_ub: r.q3_ub,
            dq15: r.dq15,
            dq25: r.dq25,
            dq24: r.dq24,
            dq23: r.dq23,
            dq34: r.dq34,
            residual: None,
            q5_converged: r.q5_diag.converged,
            q4_converged: r.q4_diag.converged,
            q3_converged: r.q3_diag.map(|d| d.converged),
        }
    }

    /// Row for a channel whose evaluation failed: NaN values, unconverged flags.
    fn failed(index: usize, rank: usize, seed: u64) -> Self {
        let nan = f64::NAN;
        ResultRow {
            index,
            rank,
            seed,
            t_norm: nan,
            t_frob: nan,
            q1: nan,
            q2: nan,
            q5: nan,
            q4: nan,
            q3_ub: None,
            dq15: nan,
            dq25: nan,
            dq24: nan,
            dq23: None,
            dq34: None,
            residual: None,
            q5_converged: false,
            q4_converged: false,
            q3_converged: None,
        }
    }

    /// Largest deviation of a gap column from its defining difference.
    pub fn gap_error(&self) -> f64 {
        let mut err = [
            self.dq15 - (self.q5 - self.q1),
            self.dq25 - (self.q2 - self.q5),
            self.dq24 - (self.q4 - self.q2),
        ]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
        if let Some(b) = self.q3_ub {
            err = err.max((self.dq23.unwrap_or(f64::NAN) - (b - self.q2)).abs());
            err = err.max((self.dq34.unwrap_or(f64::NAN) - (self.q4 - b)).abs());
        }
        err
    }

    /// Numeric column by name; `Some(None)` for a blank optional value,
    /// `None` for an unknown or non-numeric column.
    pub fn field(&self, name: &str) -> Option<Option<f64>> {
        Some(match name {
            "index" => Some(self.index as f64),
            "rank" => Some(self.rank as f64),
            "t_norm" => Some(self.t_norm),
            "t_frob" => Some(self.t_frob),
            "q1" => Some(self.q1),
            "q2" => Some(self.q2),
            "q5" => Some(self.q5),
            "q4" => Some(self.q4),
            "q3_ub" => self.q3_ub,
            "dq15" => Some(self.dq15),
            "dq25" => Some(self.dq25),
            "dq24" => Some(self.dq24),
            "dq23" => self.dq23,
            "dq34" => self.dq34,
            "residual" => self.residual,
            _ => return None,
        })
    }

    /// Records a decomposition outcome on the row.
    pub fn set_decomposition(&mut self, bound: Option<f64>, residual: f64, converged: bool) {
        self.q3_ub = bound;
        self.dq23 = bound.map(|b| b - self.q2);
        self.dq34 = bound.map(|b| self.q4 - b);
        self.residual = Some(residual);
        self.q3_converged = Some(converged);
    }
}

/// Optimizer seed of channel `(rank, index)` under the batch seed (SplitMix64 finalizer).
pub fn channel_seed(seed: u64, rank: usize, index: usize) -> u64 {
    let mut z = seed ^ ((rank as u64) << 56) ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A channel tagged with its position in a batch.
#[derive(Debug, Clone)]
pub struct WorkItem {
    pub rank: usize,
    pub index: usize,
    pub channel: QChannel,
}

/// Evaluates one channel; failures become a flagged row instead of an error.
pub fn evaluate(
    item: &WorkItem,
    batch_seed: u64,
    opt: &OptimizerConfig,
    decompose: bool,
) -> ResultRow {
    let seed = channel_seed(batch_seed, item.rank, item.index);
    let cfg = opt.with_seed(seed);
    let mut row = match CapacityReport::compute(&item.channel, &cfg) {
        Ok(r) => ResultRow::from_report(item.index, item.rank, seed, &r),
        Err(e) => {
            log::warn!(
                "rank {} channel {}: capacities failed: {e}",
                item.rank,
                item.index
            );
            return ResultRow::failed(item.index, item.rank, seed);
        }
    };
    if decompose {
        decompose_row(&mut row, &item.channel, opt);
    }
    row
}

/// Runs the decomposition search for a row's channel and records the result.
pub fn decompose_row(row: &mut ResultRow, ch: &QChannel, opt: &OptimizerConfig) {
    let cfg = opt.with_seed(row.seed);
    match decompose_channel(ch, &cfg) {
        Ok(search) => {
            if !search.accepted {
                log::info!(
                    "rank {} channel {}: no decomposition within tolerance (residual {:.2e})",
                    row.rank,
                    row.index,
                    search.best.residual
                );
            }
            row.set_decomposition(
                search.bound(),
                search.best.residual,
                search.diagnostics.converged,
            );
        }
        Err(e) => {
            log::warn!(
                "rank {} channel {}: decomposition failed: {e}",
                row.rank,
                row.index
            );
            row.q3_converged = Some(false);
        }
    }
}

/// Runs `f` on a pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Evaluates a batch in parallel; rows come back in item order.
pub fn evaluate_all(
    items: &[WorkItem],
    batch_seed: u64,
    opt: &OptimizerConfig,
    decompose: bool,
    threads: usize,
) -> Result<Vec<ResultRow>> {
    opt.validate()?;
    with_threads(threads, || {
        items
            .par_iter()
            .map(|item| evaluate(item, batch_seed, opt, decompose))
            .collect()
    })
}

/// Samples `count` channels per rank and evaluates them; writes the CSV and
/// SVG (`t_norm` vs `q5`) when paths are configured.
pub fn run_scatter(cfg: &RunConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut ranks = cfg.ranks.clone();
    ranks.sort_unstable();
    ranks.dedup();
    let items = with_threads(cfg.threads, || {
        ranks
            .iter()
            .flat_map(|&rank| (0..cfg.count).map(move |index| (rank, index)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(rank, index)| {
                sample_one(cfg.seed, rank, index).map(|(channel, _)| WorkItem {
                    rank,
                    index,
                    channel,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let rows = evaluate_all(&items, cfg.seed, &cfg.optimizer, cfg.decompose, cfg.threads)?;
    if let Some(path) = &cfg.csv_path {
        write_csv(&rows, path)?;
    }
    if let Some(path) = &cfg.svg_path {
        std::fs::write(path, plot_scatter(&rows, "t_norm", "q5", true)?)?;
    }
    Ok(rows)
}

/// Work items for a sampled batch, indexed by position.
pub fn items_for_batch(spec: &SampleSpec, channels: Vec<QChannel>) -> Vec<WorkItem> {
    channels
        .into_iter()
        .enumerate()
        .map(|(index, channel)| WorkItem {
            rank: spec.rank,
            index,
            channel,
        })
        .collect()
}

/// Writes the version line, the header and one record per row.
pub fn write_csv_to(rows: &[ResultRow], out: impl Write) -> Result<()> {
    let mut out = out;
    writeln!(out, "{CSV_VERSION_LINE}")?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(rows, std::io::BufWriter::new(file))
}

/// Parses a results file; columns are matched by header name.
pub fn read_csv_from(input: impl Read) -> Result<Vec<ResultRow>> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != CSV_VERSION_LINE {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "expected {CSV_VERSION_LINE:?}, found {:?}",
                first.trim_end()
            ),
        });
    }
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for rec in r.deserialize::<ResultRow>() {
        // csv counts lines after the version line
        rows.push(rec.map_err(|e| shift_line(csv_error(e), 1))?);
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    read_csv_from(std::fs::File::open(path)?)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            msg: format!("{kind:?}"),
        },
    }
}

fn shift_line(e: Error, by: u64) -> Error {
    match e {
        Error::Parse { line, msg } => Error::Parse {
            line: line + by,
            msg,
        },
        other => other,
    }
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 600.0;
const MARGIN_L: f64 = 90.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 70.0;

fn rank_color(rank: usize) -> &'static str {
    match rank {
        2 => "#d62728",
        3 => "#1f77b4",
        4 => "#2ca02c",
        _ => "#7f7f7f",
    }
}

/// `[lo, hi]` padded by 5%, or `[0, 1]` without data.
fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
    (lo - 0.05 * span, hi + 0.05 * span)
}

/// Self-contained SVG scatter of `y_field` against `x_field`.
///
/// With `group_by_rank` markers are colored by rank (2 red, 3 blue, 4 green)
/// and a legend is drawn. Rows with a blank or non-finite coordinate are
/// left out.
pub fn plot_scatter(
    rows: &[ResultRow],
    x_field: &str,
    y_field: &str,
    group_by_rank: bool,
) -> Result<String> {
    for f in [x_field, y_field] {
        if ResultRow::field(&ResultRow::failed(0, 0, 0), f).is_none() {
            return Err(Error::Unknown {
                kind: "field",
                name: f.to_string(),
            });
        }
    }
    let points: Vec<(usize, f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            let x = r.field(x_field).flatten()?;
            let y = r.field(y_field).flatten()?;
            (x.is_finite() && y.is_finite()).then_some((r.rank, x, y))
        })
        .collect();
    let (x0, x1) = axis_range(points.iter().map(|p| p.1));
    let (y0, y1) = axis_range(points.iter().map(|p| p.2));
    let pw = SVG_W - MARGIN_L - MARGIN_R;
    let ph = SVG_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_W} {SVG_H}" width="{SVG_W}" height="{SVG_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{SVG_W}" height="{SVG_H}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_L:.2}" y="{MARGIN_T:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    const TICKS: usize = 5;
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let bottom = MARGIN_T + ph;
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{bottom:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 20.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_L:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_L - 5.0,
            MARGIN_L - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_L + pw / 2.0,
        SVG_H - 20.0,
        escape(x_field)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" font-size="14" transform="rotate(-90 20 {:.2})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(y_field)
    );
    let _ = writeln!(s, r#"<g class="points">"#);
    for &(rank, x, y) in &points {
        let color = if group_by_rank {
            rank_color(rank)
        } else {
            "black"
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" fill-opacity="0.7"/>"#,
            sx(x),
            sy(y)
        );
    }
    let _ = writeln!(s, "</g>");
    if group_by_rank {
        let mut ranks: Vec<usize> = points.iter().map(|p| p.0).collect();
        ranks.sort_unstable();
        ranks.dedup();
        for (i, rank) in ranks.iter().enumerate() {
            let y = MARGIN_T + 15.0 + 20.0 * i as f64;
            let x = SVG_W - MARGIN_R + 20.0;
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{:.2}" r="4" fill="{}"/><text x="{:.2}" y="{y:.2}">rank {rank}</text>"#,
                y - 4.0,
                rank_color(*rank),
                x + 10.0
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick_label(v: f64) -> String {
    let v = if v.abs() < 5e-13 { 0.0 } else { v };
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Fraction of `values` satisfying `pred`; `None` for an empty input.
pub fn fraction<T>(values: impl IntoIterator<Item = T>, pred: impl Fn(&T) -> bool) -> Option<f64> {
    let (hit, total) = values
        .into_iter()
        .fold((0usize, 0usize), |(h, t), v| (h + pred(&v) as usize, t + 1));
    (total > 0).then(|| hit as f64 / total as f64)
}

/// Aggregate statistics of a scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ScatterSummary {
    /// Rank-2 rows with `t_norm < 0.4`: fraction with `q5 > 1e-3`.
    pub rank2_positive_low_t: Option<f64>,
    /// Rank-3/4 rows: fraction with `q5 ≤ 1e-3`.
    pub rank34_zero: Option<f64>,
    /// Rank-2 median `q5` on `t_norm ∈ [0, 0.4]` minus that on `[0.6, 1]`.
    pub rank2_transition: Option<f64>,
    /// Rank-2 median `|dq24|`.
    pub rank2_median_abs_dq24: Option<f64>,
    /// Rank-3/4 rows with a bound: fraction with `dq34 > 0`.
    pub rank34_dq34_positive: Option<f64>,
    /// Rank-3/4 rows with a bound: fraction with `dq23 < 0`.
    pub rank34_dq23_negative: Option<f64>,
}

pub fn summarize(rows: &[ResultRow]) -> ScatterSummary {
    let rank2 = || rows.iter().filter(|r| r.rank == 2);
    let rank34 = || rows.iter().filter(|r| r.rank == 3 || r.rank == 4);
    let low = median(
        rank2()
            .filter(|r| (0.0..=0.4).contains(&r.t_norm))
            .map(|r| r.q5),
    );
    let high = median(
        rank2()
            .filter(|r| (0.6..=1.0).contains(&r.t_norm))
            .map(|r| r.q5),
    );
    ScatterSummary {
        rank2_positive_low_t: fraction(rank2().filter(|r| r.t_norm < 0.4), |r| r.q5 > 1e-3),
        rank34_zero: fraction(rank34(), |r| r.q5 <= 1e-3),
        rank2_transition: low.zip(high).map(|(l, h)| l - h),
        rank2_median_abs_dq24: median(rank2().map(|r| r.dq24.abs())),
        rank34_dq34_positive: fraction(rank34().filter_map(|r| r.dq34), |d| *d > 0.0),
        rank34_dq23_negative: fraction(rank34().filter_map(|r| r.dq23), |d| *d < 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: usize) -> ResultRow {
        let x = i as f64;
        let mut r = ResultRow {
            index: i,
            rank: 2 + i % 3,
            seed: channel_seed(9, 2, i),
            t_norm: 0.1 + x / 7.0,
            t_frob: (x * 0.37).sin().abs(),
            q1: -0.3 + x * 1e-3,
            q2: 0.35 + x * 1e-3,
            q5: 1.0 / (x + 3.0),
            q4: 0.4 + x / 3e4,
            q3_ub: None,
            dq15: 0.0,
            dq25: 0.0,
            dq24: 0.0,
            dq23: None,
            dq34: None,
            residual: None,
            q5_converged: true,
            q4_converged: i.is_multiple_of(2),
            q3_converged: None,
        };
        r.dq15 = r.q5 - r.q1;
        r.dq25 = r.q2 - r.q5;
        r.dq24 = r.q4 - r.q2;
        if !i.is_multiple_of(4) {
            r.set_decomposition(Some(0.1 * x.sqrt() / 3.0), 1e-5 * x, true);
        }
        r
    }

    #[test]
    fn header_matches_fields() {
        let mut buf = Vec::new();
        let mut w = csv::WriterBuilder::new()
            .has_headers(true)
            .from_writer(&mut buf);
        w.serialize(row(1)).unwrap();
        drop(w);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_csv_to(&[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            format!("{CSV_VERSION_LINE}\n{}\n", CSV_HEADER.join(","))
        );
        assert!(read_csv_from(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn csv_roundtrip_is_bitwise() {
        let rows: Vec<ResultRow> = (0..300).map(row).collect();
        let mut buf = Vec::new();
        write_csv_to(&rows, &mut buf).unwrap();
        let back = read_csv_from(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a, b);
            assert_eq!(a.q5.to_bits(), b.q5.to_bits());
            assert_eq!(a.q3_ub.map(f64::to_bits), b.q3_ub.map(f64::to_bits));
        }
        // blanks for missing bounds
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(2).unwrap().contains(",,"));
    }

    #[test]
    fn shuffled_columns_are_accepted() {
        let rows: Vec<ResultRow> = (0..5).map(row).collect();
        let mut buf = Vec::new();
        write_csv_to(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        lines.next();
        let table: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        let n = CSV_HEADER.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let mut out = format!("{CSV_VERSION_LINE}\n");
        for rec in &table {
            let fields: Vec<&str> = perm.iter().map(|&j| rec[j]).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        assert_eq!(read_csv_from(out.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn malformed_csv_reports_line() {
        let rows: Vec<ResultRow> = (0..3).map(row).collect();
        let mut buf = Vec::new();
        write_csv_to(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let bad = text.replacen(&format!("{}", rows[1].q5), "oops", 1);
        match read_csv_from(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            read_csv_from("index,rank\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn gap_columns_are_consistent() {
        for i in 0..20 {
            assert!(row(i).gap_error() < 1e-12);
        }
        let mut r = row(1);
        r.dq24 += 1e-6;
        assert!(r.gap_error() > 1e-7);
    }

    #[test]
    fn svg_structure() {
        let rows: Vec<ResultRow> = (0..30).map(row).collect();
        let svg = plot_scatter(&rows, "t_norm", "dq24", true).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(r#"viewBox="0 0 800 600""#));
        let markers = svg.matches(r#"r="3""#).count();
        assert_eq!(markers, 30);
        assert!(svg.contains(">t_norm<") && svg.contains(">dq24<"));
        for color in ["#d62728", "#1f77b4", "#2ca02c"] {
            assert!(svg.contains(color));
        }
        // blank bounds are skipped
        let svg = plot_scatter(&rows, "t_norm", "q3_ub", false).unwrap();
        let with_bound = rows.iter().filter(|r| r.q3_ub.is_some()).count();
        assert_eq!(svg.matches(r#"r="3""#).count(), with_bound);
    }

    #[test]
    fn svg_empty_and_unknown_field() {
        let svg = plot_scatter(&[], "t_norm", "q5", true).unwrap();
        assert!(svg.contains("<rect") && svg.contains(">q5<"));
        assert_eq!(svg.matches("<circle").count(), 0);
        assert!(matches!(
            plot_scatter(&[], "t_norm", "bogus", true),
            Err(Error::Unknown { .. })
        ));
        assert!(plot_scatter(&[], "seed", "q5", true).is_err());
    }

    #[test]
    fn statistics_helpers() {
        assert_eq!(median([3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median([4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(std::iter::empty()), None);
        assert_eq!(fraction([1, 2, 3, 4], |x| *x > 1), Some(0.75));
        assert_eq!(fraction(Vec::<i32>::new(), |_| true), None);
    }

    #[test]
    fn channel_seeds_differ() {
        let mut seen = std::collections::HashSet::new();
        for rank in 2..=4 {
            for i in 0..1000 {
                assert!(seen.insert(channel_seed(42, rank, i)));
            }
        }
        assert_ne!(channel_seed(1, 2, 0), channel_seed(2, 2, 0));
    }

    #[test]
    fn single_row_run_is_deterministic() {
        let cfg = RunConfig {
            ranks: vec![2],
            count: 1,
            seed: 11,
            optimizer: OptimizerConfig {
                restarts: 4,
                ..OptimizerConfig::default()
            },
            decompose: true,
            ..RunConfig::default()
        };
        let a = run_scatter(&cfg).unwrap();
        let b = run_scatter(&RunConfig {
            threads: 1,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, b);
        let r = &a[0];
        assert!(r.t_norm.is_finite() && r.q5.is_finite() && r.q3_ub.is_some());
        assert!(r.gap_error() < 1e-12);
    }

    #[test]
    fn invalid_run_config() {
        assert!(run_scatter(&RunConfig {
            ranks: vec![1],
            ..RunConfig::default()
        })
        .is_err());
        assert!(run_scatter(&RunConfig {
            count: 0,
            ..RunConfig::default()
        })
        .is_err());
        assert!(run_scatter(&RunConfig {
            ranks: vec![],
            ..RunConfig::default()
        })
        .is_err());
    }
}
