mod common;

use graph_mbo::kernel_graph::{
    build_graph, build_graph_with, kernel_constants, streamed_degrees, streamed_dirichlet, DensityDescriptor, GraphOptions,
    KernelProfile, KernelShape, PointCloud,
};
use proptest::prelude::*;
use rand::Rng;

fn cloud(rows: Vec<Vec<f64>>, k: usize) -> PointCloud {
    PointCloud::from_rows(&rows, k, DensityDescriptor::Custom { name: "test".into() }).unwrap()
}

fn torus_cloud(seed: u64, n: usize) -> PointCloud {
    let mut r = common::rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random::<f64>(), r.random::<f64>()]).collect();
    PointCloud::from_rows(&rows, 2, DensityDescriptor::UniformTorus { k: 2 }).unwrap()
}

#[test]
fn tree_search_matches_brute_force_on_torus() {
    let c = torus_cloud(11, 2600);
    let p = KernelProfile::gaussian(2);
    let eps = 0.03;
    let tree = build_graph(&c, eps, &p).unwrap();
    let brute = build_graph_with(&c, eps, &p, GraphOptions { brute_force: true, ..Default::default() }).unwrap();
    assert!(tree.csr() == brute.csr());
}

#[test]
fn tree_search_matches_brute_force_in_space() {
    let mut r = common::rng(12);
    let rows: Vec<Vec<f64>> = (0..2500).map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let c = cloud(rows, 3);
    let p = KernelProfile::new(KernelShape::Exponential { rate: 3.0 }, 3).unwrap();
    let tree = build_graph(&c, 0.05, &p).unwrap();
    let brute = build_graph_with(&c, 0.05, &p, GraphOptions { brute_force: true, ..Default::default() }).unwrap();
    assert!(tree.csr() == brute.csr());
}

#[test]
fn streamed_quantities_match_assembled_graph() {
    let c = torus_cloud(5, 400);
    let p = KernelProfile::gaussian(2);
    let eps = 0.2;
    let g = build_graph(&c, eps, &p).unwrap();
    let d = streamed_degrees(&c, eps, &p, GraphOptions::default()).unwrap();
    assert_eq!(d.as_slice(), g.degrees());
    let u: Vec<f64> = (0..c.len()).map(|i| (c.point(i)[0] * 6.0).sin()).collect();
    let e = streamed_dirichlet(&c, eps, &p, GraphOptions::default(), &u).unwrap();
    let v = graph_mbo::operators::VectorOnGraph::new(&g, u).unwrap();
    let e2 = graph_mbo::operators::dirichlet_energy(&g, &v).unwrap();
    assert!((e - e2).abs() <= 1e-12 * e2);
}

#[test]
fn smooth_truncated_constants_approach_disk_moments() {
    let p = KernelProfile::new(KernelShape::SmoothTruncated { width: 1e-3 }, 2).unwrap();
    let c = kernel_constants(&p, 1e-10).unwrap();
    let pi = std::f64::consts::PI;
    assert!((c.c1 - pi).abs() < 1e-4 && (c.c2 - pi / 4.0).abs() < 1e-4);
}

#[test]
fn amplitude_scales_constants_and_degrees() {
    let p = KernelProfile::gaussian(2);
    let q = p.with_amplitude(3.0);
    let (a, b) = (kernel_constants(&p, 1e-10).unwrap(), kernel_constants(&q, 1e-10).unwrap());
    assert!((b.c1 - 3.0 * a.c1).abs() < 1e-9 && (b.c2 - 3.0 * a.c2).abs() < 1e-9);
    let c = torus_cloud(1, 200);
    let g = build_graph(&c, 0.3, &p).unwrap();
    let h = build_graph(&c, 0.3, &q).unwrap();
    for (x, y) in g.degrees().iter().zip(h.degrees()) {
        assert!((y - 3.0 * x).abs() <= 1e-14 * y);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weights_are_exactly_symmetric(seed in 0u64..10_000, n in 2usize..60, eps in 0.2f64..1.0) {
        let mut r = common::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| r.random::<f64>()).collect()).collect();
        let g = build_graph(&cloud(rows, 2), eps, &KernelProfile::gaussian(2)).unwrap();
        for i in 0..n {
            prop_assert_eq!(g.weight(i, i), 0.0);
            for (j, w) in g.row(i) {
                prop_assert_eq!(w, g.weight(j, i));
                prop_assert!(w > 0.0);
            }
        }
    }

    #[test]
    fn scaling_distances_with_eps(seed in 0u64..10_000, n in 2usize..30, eps in 0.05f64..3.0) {
        let mut r = common::rng(seed);
        let unit: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| r.random::<f64>()).collect()).collect();
        let scaled: Vec<Vec<f64>> = unit.iter().map(|p| p.iter().map(|x| x * eps).collect()).collect();
        let p = KernelProfile::gaussian(2);
        let opts = GraphOptions { floor: 0.0, brute_force: true };
        let g1 = build_graph_with(&cloud(unit, 2), 1.0, &p, opts).unwrap();
        let ge = build_graph_with(&cloud(scaled, 2), eps, &p, opts).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = g1.weight(i, j) / (eps * eps);
                prop_assert!((ge.weight(i, j) - want).abs() <= 1e-12 * want.max(1e-300));
            }
        }
    }

    #[test]
    fn zero_reweighting_is_bitwise_identity(seed in 0u64..10_000, n in 2usize..40) {
        let mut r = common::rng(seed);
        let g = common::random_graph(&mut r, n, 0.3);
        let twice = g.reweight_lambda(0.0).unwrap().reweight_lambda(0.0).unwrap();
        prop_assert_eq!(twice.csr(), g.csr());
        prop_assert_eq!(twice.degrees(), g.degrees());
    }

    #[test]
    fn reweighted_degrees_follow_formula(seed in 0u64..10_000, n in 2usize..30, lambda in -1.0f64..1.5) {
        let mut r = common::rng(seed);
        let g = common::random_graph(&mut r, n, 0.4);
        let rw = g.reweight_lambda(lambda).unwrap();
        let d = g.degrees();
        for i in 0..n {
            let want: f64 = g.row(i).map(|(j, w)| w / (d[i] * d[j]).powf(lambda)).sum::<f64>() / n as f64;
            prop_assert!((rw.degrees()[i] - want).abs() <= 1e-12 * want);
        }
    }
}
