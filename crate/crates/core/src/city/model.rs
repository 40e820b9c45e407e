use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{DestinationId, LocalityId};
use crate::rng::StreamRng;

/// Tolerance within which an OD row is accepted and renormalized.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// One locality as written in a city file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalityRecord {
    pub id: u32,
    pub population: f64,
    #[serde(default)]
    pub adjacent: Vec<u32>,
}

/// On-disk city description (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityFile {
    pub localities: Vec<LocalityRecord>,
    /// Locality ids of the visited slots, in OD column order.
    pub destinations: Vec<u32>,
    /// One row per locality (same order as `localities`); each row has
    /// `destinations.len() + 1` entries, the last being the no-visit probability.
    pub od_matrix: Vec<Vec<f64>>,
}

/// Row-stochastic origin-destination matrix. The last column is the no-visit slot.
#[derive(Debug, Clone, PartialEq)]
pub struct OdMatrix {
    cols: usize,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl OdMatrix {
    fn from_rows(rows: Vec<Vec<f64>>, cols: usize) -> Self {
        let mut probs = Vec::with_capacity(rows.len() * cols);
        let mut cumulative = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let mut acc = 0.0;
            for p in row {
                probs.push(p);
                acc += p;
                cumulative.push(acc);
            }
        }
        Self { cols, probs, cumulative }
    }

    pub fn rows(&self) -> usize {
        self.probs.len().checked_div(self.cols).unwrap_or(0)
    }

    /// Number of columns, including the no-visit column.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn no_visit_column(&self) -> usize {
        self.cols - 1
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.probs[row * self.cols..(row + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.probs[row * self.cols + col]
    }

    /// Draws a column from `row`; `None` is the no-visit slot.
    pub fn sample(&self, row: usize, rng: &mut StreamRng) -> Option<DestinationId> {
        let cum = &self.cumulative[row * self.cols..(row + 1) * self.cols];
        let u = rng.next_f64() * cum[self.cols - 1];
        let col = cum.partition_point(|&c| c <= u).min(self.cols - 1);
        (col != self.cols - 1).then(|| DestinationId::from_index(col))
    }
}

/// Localities, their neighborhoods, and the mobility matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CityModel {
    labels: Vec<u32>,
    populations: Vec<f64>,
    adjacency: Vec<Vec<LocalityId>>,
    destinations: Vec<LocalityId>,
    od: OdMatrix,
    by_label: HashMap<u32, LocalityId>,
}

impl CityModel {
    /// Validates a parsed city file. Adjacency is closed under symmetry and
    /// self-inclusion; OD rows within [`ROW_SUM_TOLERANCE`] of 1 are renormalized.
    pub fn from_file(file: CityFile) -> Result<Self> {
        let CityFile { localities, destinations, od_matrix } = file;
        let n = localities.len();
        if n == 0 {
            return Err(Error::InvalidCity("no localities".into()));
        }

        let mut by_label = HashMap::with_capacity(n);
        for (i, loc) in localities.iter().enumerate() {
            if by_label.insert(loc.id, LocalityId::from_index(i)).is_some() {
                return Err(Error::InvalidCity(format!("duplicate locality id {}", loc.id)));
            }
            if !loc.population.is_finite() || loc.population < 0.0 {
                return Err(Error::InvalidCity(format!(
                    "locality {} has invalid population {}",
                    loc.id, loc.population
                )));
            }
        }
        let total: f64 = localities.iter().map(|l| l.population).sum();
        if total <= 0.0 {
            return Err(Error::InvalidCity("population weights sum to zero".into()));
        }

        let resolve = |label: u32| by_label.get(&label).copied().ok_or(Error::UnknownLocality(label));

        let mut sets: Vec<BTreeSet<LocalityId>> = vec![BTreeSet::new(); n];
        for (i, loc) in localities.iter().enumerate() {
            sets[i].insert(LocalityId::from_index(i));
            for &adj in &loc.adjacent {
                sets[i].insert(resolve(adj)?);
            }
        }
        let mut repaired = 0usize;
        for i in 0..n {
            let others: Vec<LocalityId> = sets[i].iter().copied().collect();
            for j in others {
                if sets[j.index()].insert(LocalityId::from_index(i)) {
                    repaired += 1;
                }
            }
        }
        if repaired > 0 {
            warn!("city adjacency was asymmetric; added {repaired} reverse links");
        }
        let adjacency = sets.into_iter().map(|s| s.into_iter().collect()).collect();

        let mut dest_ids = Vec::with_capacity(destinations.len());
        let mut seen = BTreeSet::new();
        for &d in &destinations {
            if !seen.insert(d) {
                return Err(Error::InvalidCity(format!("duplicate destination {d}")));
            }
            dest_ids.push(resolve(d)?);
        }

        let cols = destinations.len() + 1;
        if od_matrix.len() != n {
            return Err(Error::InvalidCity(format!("OD matrix has {} rows, expected {n}", od_matrix.len())));
        }
        let mut rows = Vec::with_capacity(n);
        for (r, row) in od_matrix.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidCity(format!("OD row {r} has {} entries, expected {cols}", row.len())));
            }
            if let Some(bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
                return Err(Error::InvalidCity(format!("OD row {r} has entry {bad} outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum { row: r, sum });
            }
            rows.push(row.into_iter().map(|p| p / sum).collect());
        }

        Ok(Self {
            labels: localities.iter().map(|l| l.id).collect(),
            populations: localities.iter().map(|l| l.population).collect(),
            adjacency,
            destinations: dest_ids,
            od: OdMatrix::from_rows(rows, cols),
            by_label,
        })
    }

    pub fn to_file(&self) -> CityFile {
        CityFile {
            localities: (0..self.len())
                .map(|i| LocalityRecord {
                    id: self.labels[i],
                    population: self.populations[i],
                    adjacent: self.adjacency[i]
                        .iter()
                        .filter(|l| l.index() != i)
                        .map(|l| self.labels[l.index()])
                        .collect(),
                })
                .collect(),
            destinations: self.destinations.iter().map(|d| self.labels[d.index()]).collect(),
            od_matrix: (0..self.len()).map(|i| self.od.row(i).to_vec()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("city serializes");
        s.push('\n');
        s
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn localities(&self) -> impl ExactSizeIterator<Item = LocalityId> {
        (0..self.len()).map(LocalityId::from_index)
    }

    /// Label used in city files and outputs.
    pub fn label(&self, loc: LocalityId) -> u32 {
        self.labels[loc.index()]
    }

    pub fn by_label(&self, label: u32) -> Result<LocalityId> {
        self.by_label.get(&label).copied().ok_or(Error::UnknownLocality(label))
    }

    pub fn population(&self, loc: LocalityId) -> f64 {
        self.populations[loc.index()]
    }

    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    /// Neighborhood of `loc`: itself plus every touching locality, sorted.
    pub fn adjacency(&self, loc: LocalityId) -> &[LocalityId] {
        &self.adjacency[loc.index()]
    }

    pub fn destinations(&self) -> &[LocalityId] {
        &self.destinations
    }

    pub fn od_matrix(&self) -> &OdMatrix {
        &self.od
    }
}

/// Reads and validates a city JSON file.
pub fn load_city(path: impl AsRef<Path>) -> Result<CityModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    parse_city(&text, &path.display().to_string())
}

pub fn parse_city(text: &str, what: &str) -> Result<CityModel> {
    let file: CityFile =
        serde_json::from_str(text).map_err(|source| Error::Parse { what: what.to_string(), source })?;
    CityModel::from_file(file)
}
