use super::energy::{check_compat, check_forcing, energy_from_parts, EnergyReport};
use super::forcing::ForcingField;
use super::labels::LabelField;
use super::sigma::SurfaceTension;
use crate::error::{Error, Result};
use crate::operators::GraphOperator;

fn diffuse_columns(op: &GraphOperator<'_>, cols: &[Vec<f64>], h: f64) -> Result<Vec<Vec<f64>>> {
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    op.heat_many(&refs, h, op.tolerance())
}

/// Scores within this relative distance of the minimum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Assigns each vertex to the class minimizing `u^m - sqrt(h) f^m`, where
/// `u^m = sum_{l != m} sigma_ml (e^{-h Delta} chi^l)`. Ties, up to rounding,
/// go to the lowest index.
fn threshold(diffused: &[Vec<f64>], sigma: &SurfaceTension, h: f64, f: Option<&ForcingField>) -> Vec<usize> {
    let p = diffused.len();
    let n = diffused[0].len();
    let sh = h.sqrt();
    let mut scores = vec![0.0; p];
    (0..n)
        .map(|x| {
            for (m, sm) in scores.iter_mut().enumerate() {
                let mut s = 0.0;
                for (l, d) in diffused.iter().enumerate() {
                    if l != m {
                        s += sigma.get(m, l) * d[x];
                    }
                }
                if let Some(f) = f {
                    s -= sh * f.get(x, m);
                }
                *sm = s;
            }
            let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
            let mag = scores.iter().fold(0.0f64, |a, s| a.max(s.abs()));
            scores.iter().position(|&s| s <= min + TIE_TOLERANCE * mag).unwrap()
        })
        .collect()
}

fn check_step(op: &GraphOperator<'_>, chi: &LabelField, sigma: &SurfaceTension, h: f64, f: Option<&ForcingField>) -> Result<()> {
    check_compat(op, chi, sigma, h)?;
    if !chi.is_hard() {
        return Err(Error::LabelField("MBO steps need a hard label field".into()));
    }
    if let Some(f) = f {
        check_forcing(chi, f)?;
    }
    Ok(())
}

/// One diffusion-threshold step, with optional forcing.
pub fn mbo_step(
    op: &GraphOperator<'_>,
    chi: &LabelField,
    sigma: &SurfaceTension,
    h: f64,
    f: Option<&ForcingField>,
) -> Result<LabelField> {
    check_step(op, chi, sigma, h, f)?;
    let diffused = diffuse_columns(op, &chi.columns(), h)?;
    LabelField::from_classes(&threshold(&diffused, sigma, h, f), chi.p())
}

/// Heat diffusion of every class column; rows of soft fields stay in the simplex.
pub fn diffuse(op: &GraphOperator<'_>, u: &LabelField, h: f64) -> Result<Vec<Vec<f64>>> {
    if u.n() != op.n() {
        return Err(Error::Dimension { expected: op.n(), found: u.n() });
    }
    diffuse_columns(op, &u.columns(), h)
}

#[derive(Debug, Clone)]
pub struct MboTrajectory {
    /// `chi_0, chi_1, ...` up to the last distinct iterate.
    pub fields: Vec<LabelField>,
    /// Energy of each field; forced when a forcing was given.
    pub energies: Vec<EnergyReport>,
    /// `E_h(chi) - 2 sum_i <f^i, chi^i>`, the functional each forced step
    /// minimizes; equals the plain energy without forcing.
    pub lyapunov: Vec<f64>,
    /// Step at which the iteration reached a fixed point, if it did.
    pub stopped_at: Option<usize>,
}

impl MboTrajectory {
    pub fn last(&self) -> &LabelField {
        self.fields.last().unwrap()
    }
}

/// Runs up to `steps` iterations, stopping once an iterate repeats.
pub fn mbo_run(
    op: &GraphOperator<'_>,
    chi0: &LabelField,
    sigma: &SurfaceTension,
    h: f64,
    steps: usize,
    f: Option<&ForcingField>,
) -> Result<MboTrajectory> {
    check_step(op, chi0, sigma, h, f)?;
    if steps == 0 {
        return Err(Error::Domain("at least one iteration is required".into()));
    }
    let lyapunov = |r: &EnergyReport| r.thresholding() - 2.0 * r.forcing_term;
    let mut cols = chi0.columns();
    let mut diffused = diffuse_columns(op, &cols, h)?;
    let e0 = energy_from_parts(op, &cols, &diffused, sigma, h, f);
    let mut traj = MboTrajectory {
        fields: vec![chi0.clone()],
        lyapunov: vec![lyapunov(&e0)],
        energies: vec![e0],
        stopped_at: None,
    };
    for q in 0..steps {
        let next = LabelField::from_classes(&threshold(&diffused, sigma, h, f), chi0.p())?;
        if &next == traj.last() {
            traj.stopped_at = Some(q);
            break;
        }
        cols = next.columns();
        diffused = diffuse_columns(op, &cols, h)?;
        let e = energy_from_parts(op, &cols, &diffused, sigma, h, f);
        traj.lyapunov.push(lyapunov(&e));
        traj.energies.push(e);
        traj.fields.push(next);
    }
    Ok(traj)
}

/// `E_h(u) - h^{-1/2} sum_ij sigma_ij <u^i - chi^i, e^{-h Delta}(u^j - chi^j)>`
pub fn movement_functional(
    op: &GraphOperator<'_>,
    u: &LabelField,
    chi_prev: &LabelField,
    sigma: &SurfaceTension,
    h: f64,
) -> Result<f64> {
    check_compat(op, u, sigma, h)?;
    check_compat(op, chi_prev, sigma, h)?;
    let cols = u.columns();
    let diffused = diffuse_columns(op, &cols, h)?;
    let energy = energy_from_parts(op, &cols, &diffused, sigma, h, None).total;
    let diff: Vec<Vec<f64>> =
        cols.iter().zip(chi_prev.columns()).map(|(a, b)| a.iter().zip(&b).map(|(x, y)| x - y).collect()).collect();
    let hd = diffuse_columns(op, &diff, h)?;
    let quad = energy_from_parts(op, &diff, &hd, sigma, h, None).total;
    Ok(energy - quad)
}
