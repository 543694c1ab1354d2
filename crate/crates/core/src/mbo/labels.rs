use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// One-hot rows.
    Hard,
    /// Rows in the probability simplex.
    Soft,
}

/// `n x P` membership matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelField {
    n: usize,
    p: usize,
    values: Vec<f64>,
    mode: LabelMode,
}

const ROW_SUM_TOL: f64 = 1e-12;

impl LabelField {
    pub fn from_classes(classes: &[usize], p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::LabelField("at least one class is required".into()));
        }
        let n = classes.len();
        let mut values = vec![0.0; n * p];
        for (i, &c) in classes.iter().enumerate() {
            if c >= p {
                return Err(Error::LabelOutOfRange { vertex: i, class: c, classes: p });
            }
            values[i * p + c] = 1.0;
        }
        Ok(Self { n, p, values, mode: LabelMode::Hard })
    }

    /// Soft field from row-major values; rows must lie in the simplex.
    pub fn soft(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 || values.len() != n * p {
            return Err(Error::Dimension { expected: n * p, found: values.len() });
        }
        for i in 0..n {
            let row = &values[i * p..(i + 1) * p];
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::LabelField(format!("row {i} has entries outside [0,1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::LabelField(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self { n, p, values, mode: LabelMode::Soft })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    pub fn is_hard(&self) -> bool {
        self.mode == LabelMode::Hard
    }

    #[inline]
    pub fn get(&self, i: usize, m: usize) -> f64 {
        self.values[i * self.p + m]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn column(&self, m: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, m)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.p).map(|m| self.column(m)).collect()
    }

    /// Class of each vertex for hard fields.
    pub fn classes(&self) -> Option<Vec<usize>> {
        if !self.is_hard() {
            return None;
        }
        Some((0..self.n).map(|i| self.row(i).iter().position(|&v| v == 1.0).unwrap()).collect())
    }

    /// Reorders classes: class `m` becomes `perm[m]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.p {
            return Err(Error::Dimension { expected: self.p, found: perm.len() });
        }
        let mut values = vec![0.0; self.values.len()];
        for i in 0..self.n {
            for m in 0..self.p {
                values[i * self.p + perm[m]] = self.get(i, m);
            }
        }
        Ok(Self { values, ..self.clone() })
    }

    /// Hard fields: `vertex,class`; soft fields: `vertex,p0..p{P-1}`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        match self.classes() {
            Some(classes) => {
                w.write_record(["vertex", "class"])?;
                for (i, c) in classes.iter().enumerate() {
                    w.write_record([i.to_string(), c.to_string()])?;
                }
            }
            None => {
                let mut header = vec!["vertex".to_string()];
                header.extend((0..self.p).map(|m| format!("p{m}")));
                w.write_record(&header)?;
                for i in 0..self.n {
                    let mut rec = vec![i.to_string()];
                    rec.extend(self.row(i).iter().map(|v| v.to_string()));
                    w.write_record(&rec)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads either layout; hard files need the class count.
    pub fn read_csv(path: impl AsRef<Path>, p_hard: usize) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let hard = header.len() == 2 && &header[1] == "class";
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let v: usize = rec[0].parse().map_err(|_| Error::LabelField(format!("bad vertex on line {}", k + 2)))?;
            if v != k {
                return Err(Error::LabelField(format!("vertices must be listed in order, found {v} at {k}")));
            }
            let vals = rec
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>().map_err(|_| Error::LabelField(format!("bad value `{s}`"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(vals);
        }
        if hard {
            let classes = rows
                .iter()
                .map(|r| {
                    let c = r[0];
                    if c < 0.0 || c.fract() != 0.0 {
                        Err(Error::LabelField(format!("bad class {c}")))
                    } else {
                        Ok(c as usize)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Self::from_classes(&classes, p_hard)
        } else {
            let p = header.len() - 1;
            Self::soft(rows.len(), p, rows.into_iter().flatten().collect())
        }
    }
}
