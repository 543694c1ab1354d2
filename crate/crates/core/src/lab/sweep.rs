use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub grid_value: f64,
    pub seed: u64,
    pub observable: f64,
}

/// Observable values over a parameter grid and a list of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: String,
    /// Name of the swept parameter (`n`, `h`, ...).
    pub parameter: String,
    pub grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub rows: Vec<SweepRow>,
    /// Full configuration and derived constants.
    pub metadata: serde_json::Value,
}

pub(crate) fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{name} grid has non-finite values")));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

pub(crate) fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one explicit seed is required".into()));
    }
    Ok(())
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl SweepResult {
    pub fn new(experiment: &str, parameter: &str, grid: Vec<f64>, seeds: Vec<u64>, metadata: serde_json::Value) -> Self {
        Self { experiment: experiment.into(), parameter: parameter.into(), grid, seeds, rows: Vec::new(), metadata }
    }

    pub fn push(&mut self, grid_value: f64, seed: u64, observable: f64) {
        self.rows.push(SweepRow { grid_value, seed, observable });
    }

    /// Grid strictly increasing and exactly one row per (grid point, seed).
    pub fn validate(&self) -> Result<()> {
        check_grid(&self.parameter, &self.grid)?;
        let mut seen = BTreeMap::new();
        for r in &self.rows {
            let gi = self
                .grid
                .iter()
                .position(|&g| g == r.grid_value)
                .ok_or_else(|| Error::Config(format!("row at {} is off the grid", r.grid_value)))?;
            *seen.entry((gi, r.seed)).or_insert(0) += 1;
        }
        for gi in 0..self.grid.len() {
            for &s in &self.seeds {
                if seen.get(&(gi, s)) != Some(&1) {
                    return Err(Error::Config(format!("need exactly one value at grid point {gi} for seed {s}")));
                }
            }
        }
        if seen.len() != self.grid.len() * self.seeds.len() {
            return Err(Error::Config("rows for undeclared seeds".into()));
        }
        Ok(())
    }

    /// Observable values at one grid point, in seed order.
    pub fn values_at(&self, grid_value: f64) -> Vec<f64> {
        self.seeds
            .iter()
            .filter_map(|&s| self.rows.iter().find(|r| r.grid_value == grid_value && r.seed == s))
            .map(|r| r.observable)
            .collect()
    }

    /// Curve for one seed, in grid order.
    pub fn curve(&self, seed: u64) -> Vec<f64> {
        self.grid
            .iter()
            .filter_map(|&g| self.rows.iter().find(|r| r.grid_value == g && r.seed == seed))
            .map(|r| r.observable)
            .collect()
    }

    /// Median over seeds at each grid point.
    pub fn medians(&self) -> Vec<f64> {
        self.grid.iter().map(|&g| median(&mut self.values_at(g))).collect()
    }

    /// `<experiment>_seed<master>` base name for artifacts.
    pub fn file_stem(&self, master_seed: u64) -> String {
        format!("{}_seed{}", self.experiment, master_seed)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, master_seed: u64) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let stem = self.file_stem(master_seed);
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        let mut w = csv::Writer::from_path(&csv_path)?;
        w.write_record(["grid_value", "seed", "observable"])?;
        for r in &self.rows {
            w.write_record([r.grid_value.to_string(), r.seed.to_string(), r.observable.to_string()])?;
        }
        w.flush()?;
        let sidecar = serde_json::json!({
            "experiment": self.experiment,
            "parameter": self.parameter,
            "grid": self.grid,
            "seeds": self.seeds,
            "metadata": self.metadata,
        });
        serde_json::to_writer_pretty(BufWriter::new(File::create(&json_path)?), &sidecar)?;
        Ok((csv_path, json_path))
    }

    /// Reads back an artifact pair written by [`Self::write`].
    pub fn read(csv_path: impl AsRef<Path>, json_path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Sidecar {
            experiment: String,
            parameter: String,
            grid: Vec<f64>,
            seeds: Vec<u64>,
            metadata: serde_json::Value,
        }
        let side: Sidecar = serde_json::from_reader(File::open(json_path)?)?;
        let mut out = Self::new(&side.experiment, &side.parameter, side.grid, side.seeds, side.metadata);
        let mut r = csv::Reader::from_path(csv_path)?;
        for rec in r.deserialize() {
            out.rows.push(rec?);
        }
        out.validate()?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SweepResult {
        let mut s = SweepResult::new("demo", "n", vec![10.0, 20.0], vec![1, 2], serde_json::json!({"k": 2}));
        for g in [10.0, 20.0] {
            for seed in [1, 2] {
                s.push(g, seed, g * seed as f64 + 0.1);
            }
        }
        s
    }

    #[test]
    fn validation_catches_missing_and_duplicate_rows() {
        let mut s = sample();
        assert!(s.validate().is_ok());
        s.rows.pop();
        assert!(s.validate().is_err());
        let mut s = sample();
        s.push(10.0, 1, 0.0);
        assert!(s.validate().is_err());
        let mut s = sample();
        s.grid = vec![20.0, 10.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let s = sample();
        let dir = tempfile::tempdir().unwrap();
        let (c, j) = s.write(dir.path(), 7).unwrap();
        assert!(c.ends_with("demo_seed7.csv"));
        assert_eq!(SweepResult::read(&c, &j).unwrap(), s);
    }

    #[test]
    fn medians_per_grid_point() {
        let s = sample();
        let m = s.medians();
        assert!((m[0] - 15.1).abs() < 1e-12 && (m[1] - 30.1).abs() < 1e-12);
        assert_eq!(s.curve(2), vec![20.1, 40.1]);
    }
}
