use rustfft::num_complex::Complex;

use super::conv::{heat_axis, heat_axis_periodic, tilde_mass, Spectral, TildeTable};
use super::field::{norm, BumpFunction, GridField, Lattice};
use crate::error::{Error, Result};
use crate::mbo::SurfaceTension;

/// Relative size of FFT round-off allowed for in reported bounds.
const ROUNDOFF: f64 = 1e-12;
/// Gauss–Legendre orders for the two tilde-kernel evaluations.
const TILDE_ORDERS: (usize, usize) = (6, 10);

/// A computed quantity with a bound on its deviation from the continuum value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEstimate {
    pub value: f64,
    pub bound: f64,
    /// Part of `bound` due to floating-point round-off alone.
    pub roundoff: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

fn phase_columns(field: &GridField) -> Vec<Vec<f64>> {
    (0..field.phases()).map(|q| field.phase(q)).collect()
}

/// `G_t * field` as cell averages on the box, with the field extended by
/// zero outside it. Mass carried out of the box is at most [`heat_tail_bound`].
pub fn heat_convolve(field: &GridField, t: f64) -> Result<GridField> {
    check_time(t)?;
    if !field.is_supported_in_ball() {
        return Err(Error::Domain("heat_convolve needs a field supported in the unit ball".into()));
    }
    let l = field.lattice();
    let required = 1.0 + 6.0 * t.sqrt();
    if l.half_width < required {
        return Err(Error::Padding { required, actual: l.half_width });
    }
    let sp = Spectral::linear(&l);
    let a = heat_axis(&l, t);
    let kernel = sp.kernel(|d| d.iter().map(|&x| a[x.unsigned_abs() as usize]).product());
    convolve_phases(field, &sp, &kernel)
}

/// Heat convolution on the torus of period `2L`.
pub fn heat_convolve_periodic(field: &GridField, t: f64) -> Result<GridField> {
    check_time(t)?;
    let l = field.lattice();
    let sp = Spectral::periodic(&l);
    let a = heat_axis_periodic(&l, t);
    let m = l.m as i64;
    let kernel = sp.kernel(|d| d.iter().map(|&x| a[x.rem_euclid(m) as usize]).product());
    convolve_phases(field, &sp, &kernel)
}

fn convolve_phases(field: &GridField, sp: &Spectral, kernel: &[Complex<f64>]) -> Result<GridField> {
    let vol = field.lattice().cell_volume();
    let cols: Vec<Vec<f64>> = phase_columns(field)
        .iter()
        .map(|c| sp.apply(&sp.transform(c), kernel).into_iter().map(|v| v / vol).collect())
        .collect();
    GridField::from_phases(field.lattice(), &cols)
}

/// Upper bound on the heat mass leaving the box from a field supported in the unit ball.
pub fn heat_tail_bound(l: &Lattice, t: f64) -> f64 {
    let s = (2.0 * t).sqrt();
    (l.k as f64 * libm::erfc((l.half_width - 1.0) / (s * std::f64::consts::SQRT_2))).min(1.0)
}

/// Cached transforms of a field's phases for repeated energy evaluations.
pub struct EnergyEvaluator<'a> {
    field: &'a GridField,
    sp: Spectral,
    hats: Vec<Vec<Complex<f64>>>,
    cols: Vec<Vec<f64>>,
    near_ball: Vec<bool>,
}

impl<'a> EnergyEvaluator<'a> {
    pub fn new(field: &'a GridField) -> Self {
        let l = field.lattice();
        let sp = Spectral::linear(&l);
        let cols = phase_columns(field);
        let hats = cols.iter().map(|c| sp.transform(c)).collect();
        let slack = 0.5 * l.spacing() * (l.k as f64).sqrt();
        let near_ball = l.centers().map(|c| norm(&c) <= 1.0 + slack).collect();
        EnergyEvaluator { field, sp, hats, cols, near_ball }
    }

    fn check_sigma(&self, sigma: &SurfaceTension) -> Result<()> {
        let want = if self.field.is_two_phase() { 2 } else { self.field.phases() };
        if sigma.p() != want {
            return Err(Error::Dimension { expected: want, found: sigma.p() });
        }
        Ok(())
    }

    /// Localized energy `sum sigma_mq t^{-1/2} int beta f^m G_t * f^q`; for
    /// two-phase fields `sigma_01 t^{-1/2} int beta (1 - u) G_t * u`. The
    /// bound covers replacing `beta` by its cell-centre values and round-off.
    pub fn localized(&self, beta: &BumpFunction, sigma: &SurfaceTension, t: f64) -> Result<GridEstimate> {
        check_time(t)?;
        self.check_sigma(sigma)?;
        let l = self.field.lattice();
        if beta.lattice() != l {
            return Err(Error::Domain("bump and field live on different lattices".into()));
        }
        let a = heat_axis(&l, t);
        let kernel = self.sp.kernel(|d| d.iter().map(|&x| a[x.unsigned_abs() as usize]).product());
        let convs: Vec<Vec<f64>> = self.hats.iter().map(|h| self.sp.apply(h, &kernel)).collect();
        let b = beta.values();
        let cell_dev = beta.sup_grad() * 0.5 * l.spacing() * (l.k as f64).sqrt();
        let mut value = 0.0;
        let mut unweighted = 0.0;
        let mut weight_mass = 0.0;
        let mut add = |s: f64, left: &[f64], conv: &[f64]| {
            for i in 0..conv.len() {
                value += s * b[i] * left[i] * conv[i];
                if self.near_ball[i] {
                    unweighted += s * left[i].abs() * conv[i].max(0.0);
                }
                weight_mass += s * b[i];
            }
        };
        if self.field.is_two_phase() {
            let one_minus: Vec<f64> = self.cols[0].iter().map(|u| 1.0 - u).collect();
            add(sigma.get(0, 1), &one_minus, &convs[0]);
        } else {
            let p = self.field.phases();
            for m in 0..p {
                for q in 0..p {
                    let s = sigma.get(m, q);
                    if s != 0.0 {
                        add(s, &self.cols[m], &convs[q]);
                    }
                }
            }
        }
        let scale = 1.0 / t.sqrt();
        let roundoff = scale * ROUNDOFF * l.cell_volume() * weight_mass;
        Ok(GridEstimate { value: value * scale, bound: scale * cell_dev * unweighted + roundoff, roundoff })
    }

    fn tilde_value(&self, sigma: &SurfaceTension, t: f64, order: usize) -> (f64, f64) {
        let l = self.field.lattice();
        let table = TildeTable::new(&l, t, order);
        let kernel = self.sp.kernel(|d| table.get(d));
        let convs: Vec<Vec<f64>> = self.hats.iter().map(|h| self.sp.apply(h, &kernel)).collect();
        let mut value = 0.0;
        let mut magnitude = 0.0;
        if self.field.is_two_phase() {
            // (1 - u) equals 1 outside the box, so k_t * (1 - u) = int k_t - k_t * u
            let total = tilde_mass(l.k) * l.cell_volume();
            for (u, c) in self.cols[0].iter().zip(&convs[0]) {
                value += sigma.get(0, 1) * u * (total - c);
                magnitude += sigma.get(0, 1) * u.abs() * total;
            }
        } else {
            let p = self.field.phases();
            for i in 0..p {
                for j in 0..p {
                    let s = sigma.get(i, j);
                    for (u, c) in self.cols[i].iter().zip(&convs[j]) {
                        value += s * u * c;
                        magnitude += s * (u * c).abs();
                    }
                }
            }
        }
        let scale = 1.0 / t.sqrt();
        (value * scale, magnitude * scale)
    }

    /// `t^{-1/2} sum sigma_ij int u^i k_t * u^j`, with `k_t(z) = |z| G_t(z) / sqrt(t)`;
    /// for two-phase fields `t^{-1/2} int k_t * (1 - u) u`. The bound is the
    /// gap between two quadrature orders plus round-off.
    pub fn tilde(&self, sigma: &SurfaceTension, t: f64) -> Result<GridEstimate> {
        check_time(t)?;
        self.check_sigma(sigma)?;
        let (lo, _) = self.tilde_value(sigma, t, TILDE_ORDERS.0);
        let (hi, magnitude) = self.tilde_value(sigma, t, TILDE_ORDERS.1);
        let roundoff = ROUNDOFF * magnitude;
        Ok(GridEstimate { value: hi, bound: (hi - lo).abs() + roundoff, roundoff })
    }
}

pub fn localized_energy(field: &GridField, beta: &BumpFunction, sigma: &SurfaceTension, t: f64) -> Result<GridEstimate> {
    EnergyEvaluator::new(field).localized(beta, sigma, t)
}

pub fn tilde_energy(field: &GridField, sigma: &SurfaceTension, t: f64) -> Result<GridEstimate> {
    EnergyEvaluator::new(field).tilde(sigma, t)
}
