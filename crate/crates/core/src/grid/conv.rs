use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use libm::erfc;

use super::field::Lattice;
use crate::quadrature::gauss_legendre;

/// Kernel entries whose cell pairs are farther apart than this many `sqrt(t)` are dropped.
pub(crate) const KERNEL_REACH: f64 = 12.0;

/// FFT convolution on a lattice: zero-padded to `2m` per axis (linear) or
/// circular on `m` per axis (periodic).
pub(crate) struct Spectral {
    k: usize,
    m: usize,
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn linear(l: &Lattice) -> Self {
        Self::with_size(l, 2 * l.m)
    }

    pub fn periodic(l: &Lattice) -> Self {
        Self::with_size(l, l.m)
    }

    fn with_size(l: &Lattice, size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral { k: l.k, m: l.m, size, fwd: planner.plan_fft_forward(size), inv: planner.plan_fft_inverse(size) }
    }

    fn total(&self) -> usize {
        self.size.pow(self.k as u32)
    }

    fn fft(&self, data: &mut [Complex<f64>], inverse: bool) {
        let n = self.size;
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut buf = vec![Complex::default(); n];
        let mut scratch = vec![Complex::default(); plan.get_inplace_scratch_len()];
        for a in 0..self.k {
            let stride = n.pow((self.k - 1 - a) as u32);
            let block = stride * n;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, b) in buf.iter_mut().enumerate() {
                        *b = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut buf, &mut scratch);
                    for (j, b) in buf.iter().enumerate() {
                        data[base + j * stride] = *b;
                    }
                }
            }
        }
    }

    fn padded_index(&self, mut idx: usize) -> usize {
        let mut out = 0;
        let mut scale = 1;
        for _ in 0..self.k {
            out += (idx % self.m) * scale;
            idx /= self.m;
            scale *= self.size;
        }
        out
    }

    pub fn transform(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut data = vec![Complex::default(); self.total()];
        for (i, &v) in values.iter().enumerate() {
            data[self.padded_index(i)] = Complex::new(v, 0.0);
        }
        self.fft(&mut data, false);
        data
    }

    /// Transform of a kernel given on signed cell offsets.
    pub fn kernel(&self, kern: impl Fn(&[i64]) -> f64) -> Vec<Complex<f64>> {
        let n = self.size;
        let linear = n == 2 * self.m;
        let mut data = vec![Complex::default(); self.total()];
        let mut d = vec![0i64; self.k];
        'cells: for (idx, slot) in data.iter_mut().enumerate() {
            let mut r = idx;
            for a in (0..self.k).rev() {
                let j = r % n;
                r /= n;
                d[a] = if linear {
                    if j == self.m {
                        continue 'cells;
                    }
                    if j < self.m { j as i64 } else { j as i64 - n as i64 }
                } else if j <= n / 2 {
                    j as i64
                } else {
                    j as i64 - n as i64
                };
            }
            *slot = Complex::new(kern(&d), 0.0);
        }
        self.fft(&mut data, false);
        data
    }

    /// `sum_j K(i - j) u_j` on the lattice cells.
    pub fn apply(&self, field: &[Complex<f64>], kernel: &[Complex<f64>]) -> Vec<f64> {
        let mut data: Vec<Complex<f64>> = field.iter().zip(kernel).map(|(a, b)| a * b).collect();
        self.fft(&mut data, true);
        let scale = 1.0 / self.total() as f64;
        (0..self.m.pow(self.k as u32)).map(|i| data[self.padded_index(i)].re * scale).collect()
    }
}

fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `s phi(z/s) - z Q(z/s)` for `z >= 0`: the second antiderivative of the
/// Gaussian density with scale `s`, minus its linear asymptote.
fn psi(z: f64, s: f64) -> f64 {
    let x = z / s;
    s * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt() - z * upper_tail(x)
}

/// `int_{[0, delta]} int_{[d delta, (d+1) delta]} g_t(x - y) dy dx` for the 1D heat kernel.
pub(crate) fn heat_pair_1d(d: i64, t: f64, delta: f64) -> f64 {
    let s = (2.0 * t).sqrt();
    let a = d as f64 * delta;
    let v = psi((a + delta).abs(), s) - 2.0 * psi(a.abs(), s) + psi((a - delta).abs(), s);
    let v = if d == 0 { v + delta } else { v };
    v.max(0.0)
}

/// Per-axis cell-pair heat weights for offsets `0..m`.
pub(crate) fn heat_axis(l: &Lattice, t: f64) -> Vec<f64> {
    (0..l.m as i64).map(|d| heat_pair_1d(d, t, l.spacing())).collect()
}

/// Per-axis weights periodized over the box period `2L`.
pub(crate) fn heat_axis_periodic(l: &Lattice, t: f64) -> Vec<f64> {
    let m = l.m as i64;
    let reach = ((KERNEL_REACH * t.sqrt()) / (2.0 * l.half_width)).ceil() as i64 + 1;
    (0..m)
        .map(|d| {
            let d = if d <= m / 2 { d } else { d - m };
            (-reach..=reach).map(|j| heat_pair_1d(d + j * m, t, l.spacing())).sum()
        })
        .collect()
}

/// `k_t(z) = |z| / sqrt(t) * G_t(z)`.
pub(crate) fn tilde_kernel(z2: f64, t: f64, k: usize) -> f64 {
    z2.sqrt() / t.sqrt() * (4.0 * std::f64::consts::PI * t).powf(-(k as f64) / 2.0) * (-z2 / (4.0 * t)).exp()
}

/// Cell-pair integrals `int_{C_0} int_{C_d} k_t(x - y)` for offsets with
/// nonnegative components, by tensor Gauss–Legendre on the tent weight.
pub(crate) struct TildeTable {
    m: usize,
    k: usize,
    values: Vec<f64>,
}

impl TildeTable {
    pub fn new(l: &Lattice, t: f64, order: usize) -> Self {
        let (k, m, delta) = (l.k, l.m, l.spacing());
        let (x, w) = gauss_legendre(order);
        // nodes on [-delta, delta] split at 0, with tent weight folded in
        let mut nodes = Vec::with_capacity(2 * order);
        for (xi, wi) in x.iter().zip(&w) {
            let s = 0.5 * delta * (1.0 + xi);
            let weight = 0.5 * delta * wi * (delta - s);
            nodes.push((s, weight));
            nodes.push((-s, weight));
        }
        let reach = KERNEL_REACH * t.sqrt();
        let count = m.pow(k as u32);
        let mut values = vec![0.0; count];
        let q = nodes.len();
        let mut sel = vec![0usize; k];
        for (idx, slot) in values.iter_mut().enumerate() {
            let mut r = idx;
            let mut d = vec![0.0; k];
            let mut gap2 = 0.0;
            for a in (0..k).rev() {
                let di = (r % m) as f64;
                r /= m;
                d[a] = di * delta;
                let g = (di - 1.0).max(0.0) * delta;
                gap2 += g * g;
            }
            if gap2 > reach * reach {
                continue;
            }
            sel.iter_mut().for_each(|s| *s = 0);
            let mut acc = 0.0;
            'outer: loop {
                let mut z2 = 0.0;
                let mut wt = 1.0;
                for a in 0..k {
                    let (s, ws) = nodes[sel[a]];
                    let z = d[a] + s;
                    z2 += z * z;
                    wt *= ws;
                }
                acc += wt * tilde_kernel(z2, t, k);
                for a in 0..k {
                    sel[a] += 1;
                    if sel[a] < q {
                        continue 'outer;
                    }
                    sel[a] = 0;
                }
                break;
            }
            *slot = acc;
        }
        TildeTable { m, k, values }
    }

    pub fn get(&self, d: &[i64]) -> f64 {
        let mut idx = 0;
        for a in 0..self.k {
            idx = idx * self.m + d[a].unsigned_abs() as usize;
        }
        self.values[idx]
    }
}

/// `int k_1 = E|Z|` for `Z ~ N(0, 2 I_k)`.
pub(crate) fn tilde_mass(k: usize) -> f64 {
    use statrs::function::gamma::gamma;
    2.0 * gamma((k as f64 + 1.0) / 2.0) / gamma(k as f64 / 2.0)
}
