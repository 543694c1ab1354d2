mod common;

use graph_mbo::grid::*;
use graph_mbo::mbo::{validate_sigma, SurfaceTension};
use proptest::prelude::*;
use std::f64::consts::PI;

/// Composite Simpson on [a, b].
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn gauss(z: f64, t: f64) -> f64 {
    (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// Double integral of a 1D kernel over cells i and j.
fn cell_pair(kern: impl Fn(f64) -> f64 + Copy, l: &Lattice, i: usize, j: usize) -> f64 {
    let d = l.spacing();
    let (a, b) = (l.center(i)[0] - d / 2.0, l.center(j)[0] - d / 2.0);
    // split the inner integral at y = x, where |z|-type kernels have a kink
    let inner = |x: f64| {
        if x > b && x < b + d {
            simpson(|y| kern(x - y), b, x, 400) + simpson(|y| kern(x - y), x, b + d, 400)
        } else {
            simpson(|y| kern(x - y), b, b + d, 400)
        }
    };
    simpson(inner, a, a + d, 400)
}

fn smooth_field(l: Lattice, seed: u64) -> GridField {
    use rand::Rng;
    let mut r = common::rng(seed);
    let c: Vec<f64> = (0..6).map(|_| r.random_range(-3.0..3.0)).collect();
    GridField::two_phase_from_fn(l, move |x| {
        let y = if x.len() > 1 { x[1] } else { 0.0 };
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            0.5 + 0.5 * (c[0] * x[0] + c[1] * y + c[2] * (c[3] * x[0]).sin() + c[4] * x[0] * y + c[5]).tanh()
        } else {
            0.0
        }
    })
    .unwrap()
}

#[test]
fn one_dimensional_energies_match_direct_integration() {
    let l = Lattice::new(1, 4, 1.2).unwrap();
    let u = GridField::new(l, 1, vec![0.2, 0.9, 0.4, 0.7]).unwrap();
    let beta = BumpFunction::from_fn(l, |x| 1.0 - x[0].abs()).unwrap();
    let t: f64 = 0.05;
    let vals = u.values();
    let mut e = 0.0;
    let mut et = 0.0;
    let ktil = |z: f64| z.abs() / t.sqrt() * gauss(z, t);
    let total = 2.0 / PI.sqrt() * l.spacing(); // int k_1 over R is E|N(0,2)|
    for i in 0..4 {
        let mut inner_t = 0.0;
        for j in 0..4 {
            e += beta.values()[i] * (1.0 - vals[i]) * vals[j] * cell_pair(|z| gauss(z, t), &l, i, j);
            inner_t += cell_pair(ktil, &l, i, j) * vals[j];
        }
        et += vals[i] * (total - inner_t);
    }
    let s = SurfaceTension::two_phase();
    let got = localized_energy(&u, &beta, &s, t).unwrap();
    assert!((got.value - e / t.sqrt()).abs() < 1e-10, "{} vs {}", got.value, e / t.sqrt());
    let got_t = tilde_energy(&u, &s, t).unwrap();
    assert!((got_t.value - et / t.sqrt()).abs() < 1e-9 + got_t.bound, "{} vs {}", got_t.value, et / t.sqrt());
}

#[test]
fn heat_convolve_matches_direct_sum() {
    let l = Lattice::new(1, 6, 1.8).unwrap();
    let u = GridField::new(l, 1, vec![0.0, 0.3, 1.0, 0.5, 0.2, 0.0]).unwrap();
    let t = 0.01;
    let out = heat_convolve(&u, t).unwrap();
    for i in 0..6 {
        let direct: f64 =
            (0..6).map(|j| cell_pair(|z| gauss(z, t), &l, i, j) * u.values()[j]).sum::<f64>() / l.spacing();
        assert!((out.values()[i] - direct).abs() < 1e-10);
    }
}

#[test]
fn padding_is_checked() {
    let l = Lattice::new(2, 32, 1.5).unwrap();
    let u = GridField::half_plane(l).unwrap();
    match heat_convolve(&u, 0.1) {
        Err(graph_mbo::Error::Padding { required, actual }) => {
            assert!((required - (1.0 + 6.0 * 0.1f64.sqrt())).abs() < 1e-12);
            assert_eq!(actual, 1.5);
        }
        other => panic!("{other:?}"),
    }
    assert!(heat_convolve(&u, 0.005).is_ok());
}

#[test]
fn periodic_heat_preserves_constants() {
    let l = Lattice::new(2, 32, 2.0).unwrap();
    let u = GridField::two_phase_from_fn(l, |_| 0.3).unwrap();
    for t in [1e-3, 0.1, 2.0] {
        let out = heat_convolve_periodic(&u, t).unwrap();
        assert!(out.values().iter().all(|v| (v - 0.3).abs() < 1e-12));
    }
}

#[test]
fn half_plane_interface_value_is_one_half() {
    let l = Lattice::new(2, 128, 2.0).unwrap();
    let u = GridField::half_plane(l).unwrap();
    let out = heat_convolve(&u, 1e-3).unwrap();
    let m = l.m;
    // cells straddling x_1 = 0 at the row just above the origin
    let left = out.values()[(m / 2 - 1) * m + m / 2];
    let right = out.values()[(m / 2) * m + m / 2];
    assert!(((left + right) / 2.0 - 0.5).abs() < 1e-12);
}

#[test]
fn small_time_is_near_identity() {
    let l = Lattice::new(2, 128, 2.0).unwrap();
    let u = GridField::two_phase_from_fn(l, |x| 0.5 * standard_bump(x)).unwrap();
    let t = l.spacing().powi(2);
    let out = heat_convolve(&u, t).unwrap();
    // |G_t * u - u| <= t sup|Lap u| + second-order cell averaging, sup|Lap u| estimated by differences
    let m = l.m;
    let d2 = l.spacing().powi(2);
    let mut lap = 0.0f64;
    for i in 1..m - 1 {
        for j in 1..m - 1 {
            let v = |a: usize, b: usize| u.values()[a * m + b];
            lap = lap.max(((v(i + 1, j) + v(i - 1, j) + v(i, j + 1) + v(i, j - 1) - 4.0 * v(i, j)) / d2).abs());
        }
    }
    let dev = out.values().iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dev <= 2.0 * t * lap, "{dev} vs {}", t * lap);
}

#[test]
fn periodic_semigroup() {
    let l = Lattice::new(2, 128, 2.0).unwrap();
    let u = GridField::two_phase_from_fn(l, |x| 0.5 + 0.4 * (PI * x[0]).sin() * (PI * x[1] / 2.0).cos()).unwrap();
    let (s, t) = (0.01, 0.02);
    let a = heat_convolve_periodic(&heat_convolve_periodic(&u, t).unwrap(), s).unwrap();
    let b = heat_convolve_periodic(&u, s + t).unwrap();
    // re-averaging a smooth field on cells costs O(delta^2 |D^2|)
    let bound = l.spacing().powi(2) * 0.4 * PI * PI;
    let dev = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(dev <= bound, "{dev} vs {bound}");
}

#[test]
fn single_phase_energies_vanish() {
    let l = Lattice::new(2, 64, 2.0).unwrap();
    let beta = BumpFunction::standard(l).unwrap();
    let f = GridField::multiclass_from_fn(l, 3, |_| vec![1.0, 0.0, 0.0]).unwrap();
    let s = SurfaceTension::uniform(3).unwrap();
    assert_eq!(localized_energy(&f, &beta, &s, 0.01).unwrap().value, 0.0);
    assert_eq!(tilde_energy(&f, &s, 0.01).unwrap().value, 0.0);
    let zero = GridField::two_phase_from_fn(l, |_| 0.0).unwrap();
    let r = monotonicity_audit(&zero, &beta, &AuditGrid::default()).unwrap();
    assert!(r.rows.iter().all(|x| x.lhs == 0.0 && x.rhs == 0.0 && x.residual == 0.0));
}

#[test]
fn linear_and_monotone_in_beta() {
    let l = Lattice::new(2, 64, 2.0).unwrap();
    let u = smooth_field(l, 3);
    let s = SurfaceTension::two_phase();
    let beta = BumpFunction::standard(l).unwrap();
    let e1 = localized_energy(&u, &beta, &s, 0.01).unwrap().value;
    let e2 = localized_energy(&u, &beta.scaled(2.0).unwrap(), &s, 0.01).unwrap().value;
    assert!((e2 - 2.0 * e1).abs() < 1e-13 * e1.abs().max(1.0));
    let smaller = BumpFunction::from_fn(l, |x| standard_bump(x) * (1.0 - x[0] * x[0])).unwrap();
    assert!(localized_energy(&u, &smaller, &s, 0.01).unwrap().value <= e1);
}

#[test]
fn multiclass_two_phase_agrees_with_symmetrized_scalar() {
    // for (1-u, u) on the ball the symmetric form counts both orderings
    let l = Lattice::new(2, 64, 2.0).unwrap();
    let u = smooth_field(l, 5);
    let mc = GridField::multiclass_from_fn(l, 2, |x| {
        let v = u.values()[(0..l.cells()).find(|&i| l.center(i) == x).unwrap()];
        vec![1.0 - v, v]
    })
    .unwrap();
    let beta = BumpFunction::standard(l).unwrap();
    let s = SurfaceTension::two_phase();
    let t: f64 = 0.004;
    let scalar = localized_energy(&u, &beta, &s, t).unwrap().value;
    let multi = localized_energy(&mc, &beta, &s, t).unwrap().value;
    // direct: sum_i beta_i [(1-u_i)(A*u)_i + u_i (A*(1-u)1_B)_i]
    let conv_u = heat_convolve(&u, t).unwrap();
    let one_minus = GridField::two_phase_from_fn(l, |x| {
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            1.0 - u.values()[(0..l.cells()).find(|&i| l.center(i) == x).unwrap()]
        } else {
            0.0
        }
    })
    .unwrap();
    let conv_c = heat_convolve(&one_minus, t).unwrap();
    let vol = l.cell_volume();
    let second: f64 = (0..l.cells()).map(|i| beta.values()[i] * u.values()[i] * conv_c.values()[i] * vol).sum();
    let first: f64 =
        (0..l.cells()).map(|i| beta.values()[i] * (1.0 - u.values()[i]) * conv_u.values()[i] * vol).sum();
    assert!((first / t.sqrt() - scalar).abs() < 1e-10);
    assert!(((first + second) / t.sqrt() - multi).abs() < 1e-10);
}

#[test]
fn half_plane_energy_approaches_line_integral() {
    let l = Lattice::new(2, 256, 2.0).unwrap();
    let u = GridField::half_plane(l).unwrap();
    let beta = BumpFunction::standard(l).unwrap();
    let line = simpson(|y| standard_bump(&[0.0, y]), -1.0, 1.0, 20000);
    let e = localized_energy(&u, &beta, &SurfaceTension::two_phase(), 1e-4).unwrap();
    assert!((e.value - line / PI.sqrt()).abs() < 0.05 * line / PI.sqrt());
}

#[test]
fn tilde_is_stable_under_halving() {
    let l = Lattice::new(2, 128, 2.0).unwrap();
    let u = GridField::half_plane(l).unwrap();
    let s = SurfaceTension::two_phase();
    let a = tilde_energy(&u, &s, 2e-3).unwrap();
    let b = tilde_energy(&u, &s, 1e-3).unwrap();
    assert!(a.value.is_finite() && b.value > 0.0);
    assert!((a.value - b.value).abs() < 0.1 * b.value);
}

#[test]
fn refinement_changes_energy_within_bounds() {
    let s = SurfaceTension::two_phase();
    let est = |m| {
        let l = Lattice::new(2, m, 2.0).unwrap();
        localized_energy(&GridField::half_plane(l).unwrap(), &BumpFunction::standard(l).unwrap(), &s, 0.01).unwrap()
    };
    let (a, b) = (est(64), est(128));
    assert!((a.value - b.value).abs() <= a.bound + b.bound);
}

#[test]
fn audit_passes_on_half_plane_and_writes_csv() {
    let l = Lattice::new(2, 64, 2.0).unwrap();
    let u = GridField::half_plane(l).unwrap();
    let beta = BumpFunction::standard(l).unwrap();
    let r = monotonicity_audit(&u, &beta, &AuditGrid::default()).unwrap();
    assert!(r.passed());
    assert_eq!(r.rows_for(Inequality::LogMonotonicity).count(), 10);
    assert_eq!(r.rows_for(Inequality::Intermediate).count(), 25);
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("inequality_id,h,h0_or_N,lhs,rhs,residual,quadrature_bound\n"));
    assert_eq!(text.lines().count(), r.rows.len() + 1);
}

#[test]
fn audit_rejects_bad_inputs() {
    let l = Lattice::new(2, 32, 2.0).unwrap();
    let beta = BumpFunction::standard(l).unwrap();
    let full = GridField::two_phase_from_fn(l, |_| 1.0).unwrap();
    assert!(monotonicity_audit(&full, &beta, &AuditGrid::default()).is_err());
    let u = GridField::half_plane(l).unwrap();
    let empty = AuditGrid { h: vec![], ..AuditGrid::default() };
    assert!(matches!(monotonicity_audit(&u, &beta, &empty), Err(graph_mbo::Error::Config(_))));
    let other = BumpFunction::standard(Lattice::new(2, 64, 2.0).unwrap()).unwrap();
    assert!(monotonicity_audit(&u, &other, &AuditGrid::default()).is_err());
    assert!(validate_sigma(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
    assert!(BumpFunction::from_fn(l, |_| 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_smooth_fields_pass_the_enforced_inequalities(seed in 0u64..10_000) {
        let l = Lattice::new(2, 64, 2.0).unwrap();
        let u = smooth_field(l, seed);
        let beta = BumpFunction::standard(l).unwrap();
        let grid = AuditGrid { h: vec![2f64.powi(-7), 2f64.powi(-5)], h0: vec![2f64.powi(-5)], n: vec![2] };
        let r = monotonicity_audit(&u, &beta, &grid).unwrap();
        prop_assert!(r.passed());
        let t = tilde_energy(&u, &SurfaceTension::two_phase(), 0.01).unwrap();
        prop_assert!(t.value >= -t.bound);
    }

    #[test]
    fn multiclass_tilde_is_nonnegative(seed in 0u64..10_000) {
        use rand::Rng;
        let l = Lattice::new(2, 32, 2.0).unwrap();
        let mut r = common::rng(seed);
        let c: Vec<f64> = (0..6).map(|_| r.random_range(-2.0..2.0)).collect();
        let f = GridField::multiclass_from_fn(l, 3, |x| {
            let e: Vec<f64> = (0..3).map(|q| (c[2 * q] * x[0] + c[2 * q + 1] * x[1]).exp()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        }).unwrap();
        let t = tilde_energy(&f, &SurfaceTension::uniform(3).unwrap(), 0.02).unwrap();
        prop_assert!(t.value >= -t.bound);
    }
}
