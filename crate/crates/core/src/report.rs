//! Post-processing of run outputs: smoothing, the ground-truth estimator,
//! batch aggregation and CSV export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ids::Day;
use crate::intervention::LockdownEpisode;

/// Trailing window used for the geo export and smoothed plots.
pub const GEO_WINDOW: usize = 8;

/// Names of the per-day scalar series, in CSV column order.
pub const SERIES: [&str; 8] = [
    "ground_truth_active",
    "new_infections",
    "cumulative",
    "positives",
    "tests",
    "symptomatic_reported",
    "lockdown",
    "quarantined",
];

/// Everything recorded for one day of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: Day,
    /// COVID-I count at the start of the day, before its evolution.
    pub ground_truth_active: u64,
    pub new_infections: u64,
    /// Agents no longer susceptible at the end of the day.
    pub cumulative: u64,
    pub positives: u64,
    pub tests: u64,
    pub symptomatic_reported: u64,
    pub lockdown: bool,
    pub quarantined: u64,
    pub locality_active: Vec<u32>,
    pub locality_positives: Vec<u32>,
}

impl DayRecord {
    /// Scalar series values in `SERIES` order.
    pub fn values(&self) -> [f64; 8] {
        [
            self.ground_truth_active as f64,
            self.new_infections as f64,
            self.cumulative as f64,
            self.positives as f64,
            self.tests as f64,
            self.symptomatic_reported as f64,
            if self.lockdown { 1.0 } else { 0.0 },
            self.quarantined as f64,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub config_hash: String,
    pub seed: u64,
    pub seeded: u64,
    pub locality_labels: Vec<u32>,
    pub lockdown_episodes: Vec<LockdownEpisode>,
    pub days: Vec<DayRecord>,
}

impl RunOutput {
    pub fn series(&self, f: impl Fn(&DayRecord) -> f64) -> Vec<f64> {
        self.days.iter().map(f).collect()
    }

    pub fn active(&self) -> Vec<f64> {
        self.series(|d| d.ground_truth_active as f64)
    }

    pub fn positives(&self) -> Vec<f64> {
        self.series(|d| d.positives as f64)
    }

    pub fn peak_active(&self) -> u64 {
        self.days.iter().map(|d| d.ground_truth_active).max().unwrap_or(0)
    }
}

/// Per-day mean and population standard deviation over the runs of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub runs: Vec<RunOutput>,
    /// `mean[s][d]` for series `SERIES[s]` on day index `d`.
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
    /// `geo_mean[d][l]`: mean active-I and windowed positives per locality.
    pub geo_active_mean: Vec<Vec<f64>>,
    pub geo_positives_mean: Vec<Vec<f64>>,
}

impl BatchOutput {
    pub fn days(&self) -> usize {
        self.mean.first().map_or(0, Vec::len)
    }

    pub fn series_mean(&self, name: &str) -> Option<&[f64]> {
        SERIES.iter().position(|s| *s == name).map(|i| self.mean[i].as_slice())
    }

    pub fn series_std(&self, name: &str) -> Option<&[f64]> {
        SERIES.iter().position(|s| *s == name).map(|i| self.std[i].as_slice())
    }

    pub fn locality_labels(&self) -> &[u32] {
        &self.runs[0].locality_labels
    }
}

/// Trailing mean; the first `window - 1` entries average what is available.
pub fn smooth_series(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "smoothing window must be at least 1");
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (i, &x) in series.iter().enumerate() {
        sum += x;
        if i >= window {
            sum -= series[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Symptomatic count scaled by the observed positivity rate; zero without tests.
pub fn estimate_ground_truth(symptomatic_reported: f64, positives: f64, tests: f64) -> f64 {
    if tests <= 0.0 {
        0.0
    } else {
        symptomatic_reported * positives / tests
    }
}

/// Pearson correlation; `None` when either side has zero variance or lengths differ.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.is_empty() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Index of the first maximum.
pub fn peak_index(series: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in series.iter().enumerate() {
        if x > series[best] {
            best = i;
        }
    }
    best
}

/// Windowed positives per locality: entry `[d][l]` sums days `d-7..=d`.
pub fn windowed_positives(run: &RunOutput, window: usize) -> Vec<Vec<u32>> {
    let l = run.locality_labels.len();
    let mut out: Vec<Vec<u32>> = Vec::with_capacity(run.days.len());
    let mut acc = vec![0u32; l];
    for (d, rec) in run.days.iter().enumerate() {
        for (a, p) in acc.iter_mut().zip(&rec.locality_positives) {
            *a += p;
        }
        if d >= window {
            for (a, p) in acc.iter_mut().zip(&run.days[d - window].locality_positives) {
                *a -= p;
            }
        }
        out.push(acc.clone());
    }
    out
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Combines runs (in seed order) into per-day means and population standard deviations.
pub fn aggregate(runs: Vec<RunOutput>) -> BatchOutput {
    assert!(!runs.is_empty(), "a batch needs at least one run");
    let days = runs[0].days.len();
    let l = runs[0].locality_labels.len();
    let mut mean = vec![vec![0.0; days]; SERIES.len()];
    let mut std = vec![vec![0.0; days]; SERIES.len()];
    for d in 0..days {
        let values: Vec<[f64; 8]> = runs.iter().map(|r| r.days[d].values()).collect();
        for s in 0..SERIES.len() {
            let (m, sd) = mean_std(values.iter().map(|v| v[s]));
            mean[s][d] = m;
            std[s][d] = sd;
        }
    }
    let n = runs.len() as f64;
    let mut geo_active_mean = vec![vec![0.0; l]; days];
    let mut geo_positives_mean = vec![vec![0.0; l]; days];
    for run in &runs {
        let win = windowed_positives(run, GEO_WINDOW);
        for d in 0..days {
            for k in 0..l {
                geo_active_mean[d][k] += run.days[d].locality_active[k] as f64 / n;
                geo_positives_mean[d][k] += win[d][k] as f64 / n;
            }
        }
    }
    BatchOutput { runs, mean, std, geo_active_mean, geo_positives_mean }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Shortest round-tripping decimal form.
fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_timeseries<W: Write>(run: &RunOutput, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["day"];
    header.extend(SERIES);
    out.write_record(&header)?;
    for d in &run.days {
        out.write_record([
            d.day.to_string(),
            d.ground_truth_active.to_string(),
            d.new_infections.to_string(),
            d.cumulative.to_string(),
            d.positives.to_string(),
            d.tests.to_string(),
            d.symptomatic_reported.to_string(),
            u8::from(d.lockdown).to_string(),
            d.quarantined.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_geo<W: Write>(run: &RunOutput, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["day", "locality", "active_I", "positives_last_8_days"])?;
    let win = windowed_positives(run, GEO_WINDOW);
    for (d, rec) in run.days.iter().enumerate() {
        for (k, label) in run.locality_labels.iter().enumerate() {
            out.write_record([
                rec.day.to_string(),
                label.to_string(),
                rec.locality_active[k].to_string(),
                win[d][k].to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Batch columns: `day`, then `<series>_mean,<series>_std` for every series.
pub fn write_batch_timeseries<W: Write>(batch: &BatchOutput, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["day".to_string()];
    for s in SERIES {
        header.push(format!("{s}_mean"));
        header.push(format!("{s}_std"));
    }
    out.write_record(&header)?;
    for d in 0..batch.days() {
        let mut row = vec![batch.runs[0].days[d].day.to_string()];
        for s in 0..SERIES.len() {
            row.push(num(batch.mean[s][d]));
            row.push(num(batch.std[s][d]));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Batch geo: per-locality means over runs.
pub fn write_batch_geo<W: Write>(batch: &BatchOutput, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["day", "locality", "active_I", "positives_last_8_days"])?;
    for d in 0..batch.days() {
        let day = batch.runs[0].days[d].day.to_string();
        for (k, label) in batch.locality_labels().iter().enumerate() {
            out.write_record([
                day.clone(),
                label.to_string(),
                num(batch.geo_active_mean[d][k]),
                num(batch.geo_positives_mean[d][k]),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn to_file(path: &Path, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    f(BufWriter::new(File::create(path)?))
}

pub fn export_timeseries(run: &RunOutput, path: impl AsRef<Path>) -> Result<()> {
    to_file(path.as_ref(), |w| write_timeseries(run, w))
}

pub fn export_geo(run: &RunOutput, path: impl AsRef<Path>) -> Result<()> {
    to_file(path.as_ref(), |w| write_geo(run, w))
}

pub fn export_batch_timeseries(batch: &BatchOutput, path: impl AsRef<Path>) -> Result<()> {
    to_file(path.as_ref(), |w| write_batch_timeseries(batch, w))
}

pub fn export_batch_geo(batch: &BatchOutput, path: impl AsRef<Path>) -> Result<()> {
    to_file(path.as_ref(), |w| write_batch_geo(batch, w))
}
