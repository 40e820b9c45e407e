use serde::{Deserialize, Serialize};

use super::model::{CityFile, CityModel, LocalityRecord};
use crate::rng::{Purpose, RunRng};

/// How grid locality populations are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightFn {
    /// Every locality weighs 1.
    Uniform,
    /// Weights drawn uniformly from `[0.25, 1.75)`.
    Random,
}

/// Parameters of a synthetic rectangular city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "GridSpec::default_weights")]
    pub weights: WeightFn,
    /// Number of visited destination columns (capped at the locality count).
    #[serde(default = "GridSpec::default_destinations")]
    pub destinations: usize,
    /// Share of each row's probability mass spread over the destinations;
    /// the remainder goes to the no-visit column.
    #[serde(default = "GridSpec::default_visit_fraction")]
    pub visit_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: Self::default_weights(),
            destinations: Self::default_destinations(),
            visit_fraction: Self::default_visit_fraction(),
            seed: 0,
        }
    }

    fn default_weights() -> WeightFn {
        WeightFn::Random
    }

    fn default_destinations() -> usize {
        20
    }

    fn default_visit_fraction() -> f64 {
        0.5
    }

    pub fn with_weights(mut self, weights: WeightFn) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_destinations(mut self, destinations: usize) -> Self {
        self.destinations = destinations;
        self
    }

    pub fn with_visit_fraction(mut self, visit_fraction: f64) -> Self {
        self.visit_fraction = visit_fraction;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.rows == 0 || self.cols == 0 {
            return Err(format!("grid must be at least 1x1, got {}x{}", self.rows, self.cols));
        }
        if !(0.0..=1.0).contains(&self.visit_fraction) {
            return Err(format!("visit_fraction {} outside [0, 1]", self.visit_fraction));
        }
        Ok(())
    }
}

/// The city file for a grid. Localities are labelled `1..=rows*cols` in
/// row-major order; adjacency is the 4-neighborhood; destinations are drawn
/// from the seed and each row's visit mass follows a gravity rule
/// (destination weight over `1 + manhattan distance`).
pub fn grid_city_file(spec: &GridSpec) -> CityFile {
    assert!(spec.rows >= 1 && spec.cols >= 1, "grid must be at least 1x1");
    let n = spec.rows * spec.cols;
    let rng = RunRng::new(spec.seed);
    let mut layout = rng.stream(Purpose::CityLayout, 0, 0);

    let weights: Vec<f64> = match spec.weights {
        WeightFn::Uniform => vec![1.0; n],
        WeightFn::Random => (0..n).map(|_| 0.25 + 1.5 * layout.next_f64()).collect(),
    };

    let coord = |i: usize| (i / spec.cols, i % spec.cols);
    let localities = (0..n)
        .map(|i| {
            let (r, c) = coord(i);
            let mut adjacent = Vec::with_capacity(4);
            if r > 0 {
                adjacent.push((i - spec.cols) as u32 + 1);
            }
            if c > 0 {
                adjacent.push((i - 1) as u32 + 1);
            }
            if c + 1 < spec.cols {
                adjacent.push((i + 1) as u32 + 1);
            }
            if r + 1 < spec.rows {
                adjacent.push((i + spec.cols) as u32 + 1);
            }
            LocalityRecord { id: i as u32 + 1, population: weights[i], adjacent }
        })
        .collect();

    let k = spec.destinations.min(n);
    let mut dest: Vec<usize> = rand::seq::index::sample(&mut layout, n, k).into_vec();
    dest.sort_unstable();

    let od_matrix = (0..n)
        .map(|i| {
            let (r, c) = coord(i);
            let attraction: Vec<f64> = dest
                .iter()
                .map(|&d| {
                    let (dr, dc) = coord(d);
                    weights[d] / (1.0 + (r.abs_diff(dr) + c.abs_diff(dc)) as f64)
                })
                .collect();
            let total: f64 = attraction.iter().sum();
            let visit = if total > 0.0 { spec.visit_fraction } else { 0.0 };
            let mut row: Vec<f64> =
                attraction.iter().map(|a| if total > 0.0 { visit * a / total } else { 0.0 }).collect();
            row.push(1.0 - visit);
            row
        })
        .collect();

    CityFile { localities, destinations: dest.iter().map(|&d| d as u32 + 1).collect(), od_matrix }
}

/// Builds a synthetic grid city; see [`grid_city_file`] for the layout rules.
pub fn generate_grid_city(spec: &GridSpec) -> CityModel {
    CityModel::from_file(grid_city_file(spec)).expect("grid city is valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::LocalityId;

    #[test]
    fn one_by_one() {
        let city = generate_grid_city(&GridSpec::new(1, 1).with_weights(WeightFn::Uniform));
        assert_eq!(city.len(), 1);
        assert_eq!(city.adjacency(LocalityId(0)), &[LocalityId(0)]);
    }

    #[test]
    fn two_by_two_corner() {
        let city = generate_grid_city(&GridSpec::new(2, 2).with_weights(WeightFn::Uniform));
        assert_eq!(city.len(), 4);
        for loc in city.localities() {
            assert_eq!(city.adjacency(loc).len(), 3);
            assert_eq!(city.population(loc), 1.0);
        }
    }

    #[test]
    fn three_by_three_adjacency() {
        let city = generate_grid_city(&GridSpec::new(3, 3));
        // centre touches 4 + itself
        assert_eq!(city.adjacency(LocalityId(4)).len(), 5);
        assert_eq!(city.adjacency(LocalityId(1)).len(), 4);
        assert_eq!(city.destinations().len(), 9);
    }

    #[test]
    fn random_grid_is_deterministic() {
        let spec = GridSpec::new(3, 3).with_weights(WeightFn::Random).with_seed(42);
        assert_eq!(generate_grid_city(&spec), generate_grid_city(&spec));
        let other = generate_grid_city(&spec.clone().with_seed(43));
        assert_ne!(generate_grid_city(&spec), other);
    }

    #[test]
    fn file_round_trip() {
        let city = generate_grid_city(&GridSpec::new(4, 5).with_seed(9));
        let back = super::super::parse_city(&city.to_json(), "grid").unwrap();
        assert_eq!(city.len(), back.len());
        assert_eq!(city.destinations(), back.destinations());
        for l in city.localities() {
            assert_eq!(city.label(l), back.label(l));
            assert_eq!(city.adjacency(l), back.adjacency(l));
            assert_eq!(city.population(l), back.population(l));
            for (a, b) in city.od_matrix().row(l.index()).iter().zip(back.od_matrix().row(l.index())) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ward_scale_layout() {
        let city = generate_grid_city(&GridSpec::new(18, 11).with_seed(7));
        assert_eq!(city.len(), 198);
        assert_eq!(city.od_matrix().cols(), 21);
        assert_eq!(city.od_matrix().no_visit_column(), 20);
        for i in 0..198 {
            assert!((city.od_matrix().get(i, 20) - 0.5).abs() < 1e-12);
        }
    }
}
