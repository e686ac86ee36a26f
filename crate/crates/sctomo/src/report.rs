//! Sweep reports: one CSV row per cell, one histogram CSV per sweep point
//! and a JSON summary.

use std::path::Path;

use serde::Serialize;
use sctomo_core::analysis::{Histogram, SweepPoint, SweepReport};

use crate::error::Result;
use crate::formats::{to_json, write_atomic, FORMAT_VERSION};

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = format!("# format_version: {FORMAT_VERSION}\n").into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    w.flush().expect("in-memory csv write");
    drop(w);
    out
}

#[derive(Serialize)]
struct CellRow<'a> {
    axis: &'a str,
    axis_value: f64,
    noiseless: bool,
    state: usize,
    label: &'a str,
    run: usize,
    seed: u64,
    fidelity: Option<f64>,
    alpha_1: Option<f64>,
    alpha_2: Option<f64>,
    #[serde(rename = "final_L")]
    final_l: Option<f64>,
    converged: bool,
    error: &'a str,
}

/// One row per `(point, state, run)` cell, in key order.
pub fn cells_csv(report: &SweepReport, labels: &[String]) -> Vec<u8> {
    let axis = report.axis.name();
    csv_bytes(report.points.iter().flat_map(|p| {
        p.cells.iter().map(move |c| CellRow {
            axis,
            axis_value: p.axis_value,
            noiseless: p.noiseless,
            state: c.key.state,
            label: labels.get(c.key.state).map_or("", String::as_str),
            run: c.key.run,
            seed: c.seed,
            fidelity: c.fidelity,
            alpha_1: c.alpha_hat.first().copied(),
            alpha_2: c.alpha_hat.get(1).copied(),
            final_l: c.final_l,
            converged: c.converged,
            error: c.error.as_deref().unwrap_or(""),
        })
    }))
}

#[derive(Serialize)]
struct BinRow<'a> {
    quantity: &'a str,
    arm: usize,
    bin_lower: f64,
    bin_upper: f64,
    count: u64,
}

fn arms(p: &SweepPoint) -> usize {
    p.cells.iter().map(|c| c.alpha_hat.len()).max().unwrap_or(0)
}

fn bins<'a>(quantity: &'a str, arm: usize, h: &'a Histogram) -> impl Iterator<Item = BinRow<'a>> + 'a {
    let edges = h.edges();
    h.counts.iter().enumerate().map(move |(i, &count)| BinRow {
        quantity,
        arm,
        bin_lower: edges[i],
        bin_upper: edges[i + 1],
        count,
    })
}

/// Fixed-edge fidelity bins followed by `α̂` bins for each arm.
pub fn histogram_csv(point: &SweepPoint) -> Vec<u8> {
    let f = point.fidelity_histogram();
    let alphas: Vec<Histogram> = (0..arms(point)).map(|a| point.alpha_histogram(a)).collect();
    let rows = bins("fidelity", 0, &f).chain(alphas.iter().enumerate().flat_map(|(a, h)| bins("alpha", a, h)));
    csv_bytes(rows)
}

#[derive(Serialize)]
struct HistogramSummary {
    total: u64,
    out_of_range: u64,
    missing: u64,
}

impl From<&Histogram> for HistogramSummary {
    fn from(h: &Histogram) -> Self {
        Self {
            total: h.total(),
            out_of_range: h.out_of_range,
            missing: h.missing,
        }
    }
}

#[derive(Serialize)]
struct PointSummary {
    axis_value: f64,
    noiseless: bool,
    histogram_file: String,
    cells: usize,
    failures: usize,
    /// Per state.
    mean_fidelity: Vec<Option<f64>>,
    /// Per arm, over all states.
    mean_alpha: Vec<Option<f64>>,
    fidelity_histogram: HistogramSummary,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    format_version: &'a str,
    axis: &'a str,
    n_states: usize,
    state_labels: &'a [String],
    seeds_used: &'a [u64],
    points: Vec<PointSummary>,
}

pub fn histogram_file_name(index: usize) -> String {
    format!("histogram_{index:02}.csv")
}

pub fn summary_json(report: &SweepReport, labels: &[String]) -> Vec<u8> {
    let points = report
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mean_alpha = (0..arms(p))
                .map(|a| {
                    let xs: Vec<f64> = p.cells.iter().filter_map(|c| c.alpha_hat.get(a).copied()).collect();
                    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
                })
                .collect();
            PointSummary {
                axis_value: p.axis_value,
                noiseless: p.noiseless,
                histogram_file: histogram_file_name(i),
                cells: p.cells.len(),
                failures: p.failures(),
                mean_fidelity: (0..report.n_states).map(|s| p.mean_fidelity(s)).collect(),
                mean_alpha,
                fidelity_histogram: (&p.fidelity_histogram()).into(),
            }
        })
        .collect();
    to_json(&SweepSummary {
        format_version: FORMAT_VERSION,
        axis: report.axis.name(),
        n_states: report.n_states,
        state_labels: labels,
        seeds_used: &report.seeds_used,
        points,
    })
}

/// Writes `cells.csv`, `histogram_NN.csv` per point and `summary.json` into
/// `dir`; returns the file names written.
pub fn write_sweep(dir: &Path, report: &SweepReport, labels: &[String]) -> Result<Vec<String>> {
    let mut files = Vec::new();
    write_atomic(&dir.join("cells.csv"), &cells_csv(report, labels))?;
    files.push("cells.csv".to_string());
    for (i, p) in report.points.iter().enumerate() {
        let name = histogram_file_name(i);
        write_atomic(&dir.join(&name), &histogram_csv(p))?;
        files.push(name);
    }
    write_atomic(&dir.join("summary.json"), &summary_json(report, labels))?;
    files.push("summary.json".to_string());
    Ok(files)
}
