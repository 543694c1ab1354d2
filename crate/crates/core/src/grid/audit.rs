use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::energy::{EnergyEvaluator, GridEstimate};
use super::field::{BumpFunction, GridField};
use crate::error::{Error, Result};
use crate::mbo::SurfaceTension;

/// Constant in the discrete and full inequalities, from the telescoping sum
/// `sum_{i<N} i = N(N-1)/2` divided by `N sqrt(h)`.
pub const DISCRETE_CONSTANT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Inequality {
    /// `h1^{(k+1)/2} E_{h1} <= h2^{(k+1)/2} E_{h2}` for `h1 <= h2`
    LogMonotonicity,
    /// `sqrt(h0) E_{h0} <= sqrt(h1) E_{h1} + sqrt(h) E_h + sqrt(h1 h) |Dbeta| E~_h`, `sqrt(h0) = sqrt(h1) + sqrt(h)`
    Intermediate,
    /// `E_{N^2 h} <= E_h + C (N-1) sqrt(h) |Dbeta| E~_h`
    Discrete,
    /// `E_{h0} <= ((sqrt(h0) + sqrt(h)) / sqrt(h0))^{k+1} E_h + C |Dbeta| E~_h sqrt(h0)` for `h <= h0`
    Full,
}

impl Inequality {
    pub fn id(self) -> &'static str {
        match self {
            Inequality::LogMonotonicity => "a",
            Inequality::Intermediate => "b",
            Inequality::Discrete => "c",
            Inequality::Full => "d",
        }
    }

    /// Whether a violation beyond the bound fails the audit.
    pub fn enforced(self) -> bool {
        matches!(self, Inequality::LogMonotonicity | Inequality::Intermediate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub inequality: Inequality,
    pub h: f64,
    /// `h1` for (a) (as the larger step), `h0` for (b) and (d), `N` for (c).
    pub h0_or_n: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub quadrature_bound: f64,
}

impl AuditRow {
    pub fn covered(&self) -> bool {
        self.residual <= self.quadrature_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditGrid {
    pub h: Vec<f64>,
    pub h0: Vec<f64>,
    pub n: Vec<usize>,
}

impl Default for AuditGrid {
    fn default() -> Self {
        let h: Vec<f64> = (-8..=-4).map(|j| 2f64.powi(j)).collect();
        AuditGrid { h0: h.clone(), h, n: vec![2, 3, 4] }
    }
}

impl AuditGrid {
    pub fn validate(&self) -> Result<()> {
        if self.h.is_empty() {
            return Err(Error::Config("audit h grid is empty".into()));
        }
        if self.h.iter().chain(&self.h0).any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Config("audit steps must be positive".into()));
        }
        if self.h.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("audit h grid must be strictly increasing".into()));
        }
        if self.n.contains(&0) {
            return Err(Error::Config("audit N values must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub sup_grad: f64,
}

impl AuditReport {
    /// Every enforced row has its residual covered by the bound.
    pub fn passed(&self) -> bool {
        self.rows.iter().filter(|r| r.inequality.enforced()).all(AuditRow::covered)
    }

    pub fn rows_for(&self, q: Inequality) -> impl Iterator<Item = &AuditRow> {
        self.rows.iter().filter(move |r| r.inequality == q)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["inequality_id", "h", "h0_or_N", "lhs", "rhs", "residual", "quadrature_bound"])?;
        for r in &self.rows {
            wr.write_record([
                r.inequality.id().to_string(),
                r.h.to_string(),
                r.h0_or_n.to_string(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.residual.to_string(),
                r.quadrature_bound.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

struct Cache<'a> {
    eval: EnergyEvaluator<'a>,
    beta: &'a BumpFunction,
    sigma: SurfaceTension,
    energies: BTreeMap<u64, GridEstimate>,
    tildes: BTreeMap<u64, GridEstimate>,
}

impl Cache<'_> {
    fn energy(&mut self, t: f64) -> Result<GridEstimate> {
        if let Some(e) = self.energies.get(&t.to_bits()) {
            return Ok(*e);
        }
        let e = self.eval.localized(self.beta, &self.sigma, t)?;
        self.energies.insert(t.to_bits(), e);
        Ok(e)
    }

    fn tilde(&mut self, t: f64) -> Result<GridEstimate> {
        if let Some(e) = self.tildes.get(&t.to_bits()) {
            return Ok(*e);
        }
        let e = self.eval.tilde(&self.sigma, t)?;
        self.tildes.insert(t.to_bits(), e);
        Ok(e)
    }
}

/// Evaluates the four monotonicity inequalities for a two-phase field
/// supported in the unit ball. Bounds combine the cell-centre error of
/// `beta`, the tilde-kernel quadrature gap and round-off; (a) holds exactly
/// for the discretized energies, so its bound is round-off only.
pub fn monotonicity_audit(field: &GridField, beta: &BumpFunction, grid: &AuditGrid) -> Result<AuditReport> {
    grid.validate()?;
    if !field.is_two_phase() {
        return Err(Error::Domain("the monotonicity audit takes a two-phase field".into()));
    }
    if !field.is_supported_in_ball() {
        return Err(Error::Domain("the monotonicity audit needs a field supported in the unit ball".into()));
    }
    let k = field.lattice().k as f64;
    let lip = beta.sup_grad();
    let mut c = Cache {
        eval: EnergyEvaluator::new(field),
        beta,
        sigma: SurfaceTension::two_phase(),
        energies: BTreeMap::new(),
        tildes: BTreeMap::new(),
    };
    let mut rows = Vec::new();
    let mut push = |inequality, h, h0_or_n, lhs: f64, rhs: f64, quadrature_bound| {
        rows.push(AuditRow { inequality, h, h0_or_n, lhs, rhs, residual: lhs - rhs, quadrature_bound });
    };
    let pow = |h: f64| h.sqrt().powf(k + 1.0);
    for (i, &h1) in grid.h.iter().enumerate() {
        for &h2 in &grid.h[i + 1..] {
            let (e1, e2) = (c.energy(h1)?, c.energy(h2)?);
            push(
                Inequality::LogMonotonicity,
                h1,
                h2,
                pow(h1) * e1.value,
                pow(h2) * e2.value,
                pow(h1) * e1.roundoff + pow(h2) * e2.roundoff,
            );
        }
    }
    for &h in &grid.h {
        let eh = c.energy(h)?;
        let th = c.tilde(h)?;
        let sh = h.sqrt();
        for &h1 in &grid.h {
            let s1 = h1.sqrt();
            let h0 = (s1 + sh).powi(2);
            let (e0, e1) = (c.energy(h0)?, c.energy(h1)?);
            let s0 = h0.sqrt();
            push(
                Inequality::Intermediate,
                h,
                h0,
                s0 * e0.value,
                s1 * e1.value + sh * eh.value + s1 * sh * lip * th.value,
                s0 * e0.bound + s1 * e1.bound + sh * eh.bound + s1 * sh * lip * th.bound,
            );
        }
        for &n in &grid.n {
            let nf = n as f64;
            let en = c.energy(nf * nf * h)?;
            let coef = DISCRETE_CONSTANT * (nf - 1.0) * sh * lip;
            push(
                Inequality::Discrete,
                h,
                nf,
                en.value,
                eh.value + coef * th.value,
                en.bound + eh.bound + coef * th.bound,
            );
        }
        for &h0 in grid.h0.iter().filter(|&&h0| h0 >= h) {
            let e0 = c.energy(h0)?;
            let s0 = h0.sqrt();
            let factor = ((s0 + sh) / s0).powf(k + 1.0);
            let coef = DISCRETE_CONSTANT * lip * s0;
            push(
                Inequality::Full,
                h,
                h0,
                e0.value,
                factor * eh.value + coef * th.value,
                e0.bound + factor * eh.bound + coef * th.bound,
            );
        }
    }
    Ok(AuditReport { rows, sup_grad: lip })
}
