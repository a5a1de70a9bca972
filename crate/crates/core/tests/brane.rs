use homolag::brane::{
    brane_action, component_count, integral_gauge_check, minors, multi_indices,
    multivector_metric_matrix, nonrel_brane_expand, BraneSpec, CylinderPatch, Embedding,
    FnEmbedding, GraphEmbedding, GriddedEmbedding, Reparameterized,
};
use homolag::lagrangian::VectorPotentialField;
use homolag::{DMat, DVec, LagrangianSpec, MetricField, ScalarProfile};
use proptest::prelude::*;

fn v(xs: &[f64]) -> DVec {
    DVec::from_column_slice(xs)
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Composite Gauss–Legendre over `[lo, hi]` with `panels` panels.
fn integrate_1d(lo: f64, hi: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(12);
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|p| {
            let a = lo + p as f64 * h;
            rule.iter()
                .map(|(x, w)| w * f(a + 0.5 * h * (x + 1.0)))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

fn integrate_2d(lo: (f64, f64), hi: (f64, f64), f: impl Fn(f64, f64) -> f64) -> f64 {
    integrate_1d(lo.0, hi.0, 16, |x| {
        integrate_1d(lo.1, hi.1, 16, |y| f(x, y))
    })
}

fn bump() -> ScalarProfile {
    ScalarProfile::Gaussian {
        amplitude: 0.4,
        center: vec![0.5, 0.4],
        width: 0.3,
    }
}

#[test]
fn gauss_legendre_oracle_is_exact_on_polynomials() {
    let s = integrate_1d(0.0, 2.0, 1, |x| x.powi(11) - 3.0 * x.powi(4));
    assert!((s - (2f64.powi(12) / 12.0 - 3.0 * 32.0 / 5.0)).abs() < 1e-10);
}

#[test]
fn tilted_plane_area() {
    let spec = BraneSpec::new(2, MetricField::euclidean(3), 1.0).unwrap();
    let plane = GraphEmbedding::tilted_plane(0.75);
    let s = brane_action(&spec, &plane, &[128, 128]).unwrap();
    assert!((s - 1.25).abs() <= 1e-6);
    let grid = GriddedEmbedding::sample(&plane, vec![129, 129]).unwrap();
    let s = brane_action(&spec, &grid, &grid.cells()).unwrap();
    assert!((s - 1.25).abs() <= 1e-6);
}

#[test]
fn graph_area_matches_quadrature_oracle() {
    let profile = bump();
    let graph = GraphEmbedding::new(vec![(0.0, 1.0); 2], vec![profile.clone()]).unwrap();
    let spec = BraneSpec::new(2, MetricField::euclidean(3), 1.0).unwrap();
    let oracle = integrate_2d((0.0, 0.0), (1.0, 1.0), |x, y| {
        let g = profile.gradient(&v(&[x, y]));
        (1.0 + g.norm_squared()).sqrt()
    });
    let s = brane_action(&spec, &graph, &[512, 512]).unwrap();
    assert!((s - oracle).abs() <= 1e-6, "{s} vs {oracle}");

    // cell-centered differences on sampled nodes converge to the same area
    let grid = GriddedEmbedding::sample(&graph, vec![513, 513]).unwrap();
    let s = brane_action(&spec, &grid, &grid.cells()).unwrap();
    assert!((s - oracle).abs() <= 1e-5, "{s} vs {oracle}");
}

#[test]
fn midpoint_quadrature_is_second_order() {
    let graph = GraphEmbedding::new(vec![(0.0, 1.0); 2], vec![bump()]).unwrap();
    let spec = BraneSpec::new(2, MetricField::euclidean(3), 1.0).unwrap();
    let s: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&n| brane_action(&spec, &graph, &[n, n]).unwrap())
        .collect();
    for w in s.windows(3) {
        let p = ((w[1] - w[0]) / (w[2] - w[1])).abs().log2();
        assert!((p - 2.0).abs() < 0.2, "order {p}");
    }
}

#[test]
fn cylinder_patch_area() {
    let spec = BraneSpec::new(2, MetricField::euclidean(3), 1.0).unwrap();
    let cyl = CylinderPatch::new(1.5, (0.0, 2.0), (-1.0, 0.5)).unwrap();
    let s = brane_action(&spec, &cyl, &[8, 3]).unwrap();
    assert!((s - 1.5 * 2.0 * 1.5).abs() < 1e-12);
}

#[test]
fn reparameterization_leaves_action_unchanged() {
    let spec = BraneSpec::new(2, MetricField::euclidean(3), 1.0).unwrap();
    let graph = GraphEmbedding::new(vec![(0.0, 1.0); 2], vec![bump()]).unwrap();
    let warped = Reparameterized::new(graph.clone(), vec![0.3, -0.4]).unwrap();
    let a = brane_action(&spec, &graph, &[256, 256]).unwrap();
    let b = brane_action(&spec, &warped, &[256, 256]).unwrap();
    assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
}

#[test]
fn one_dimensional_brane_is_the_particle() {
    let particle = LagrangianSpec::new(
        MetricField::minkowski(4),
        0.7,
        VectorPotentialField::UniformMagnetic {
            dim: 4,
            field: 1.2,
            plane: (1, 2),
        },
        1.3,
    )
    .unwrap();
    let curve = |z: f64| v(&[z, 0.3 * z.sin(), 0.2 * z * z, 0.1 * z]);
    let tangent = |z: f64| v(&[1.0, 0.3 * z.cos(), 0.4 * z, 0.1]);
    let emb = FnEmbedding::new(4, vec![(0.0, 1.0)], move |z| curve(z[0]))
        .unwrap()
        .with_jacobian(move |z| DMat::from_column_slice(4, 1, tangent(z[0]).as_slice()));
    let brane = BraneSpec::from_particle(&particle);
    let s = brane_action(&brane, &emb, &[20_000]).unwrap();
    let oracle = integrate_1d(0.0, 1.0, 8, |z| {
        particle.eval(&curve(z), &tangent(z)).unwrap()
    });
    assert!((s - oracle).abs() <= 1e-8, "{s} vs {oracle}");
}

#[test]
fn brane_potential_pairs_with_minors() {
    // constant A_Γ on a flat plane: q A_Γ ω^Γ · area
    let a = v(&[0.5, -0.2, 0.3]);
    let spec = BraneSpec::new(2, MetricField::euclidean(3), 0.0)
        .unwrap()
        .with_potential(2.0, VectorPotentialField::Constant(a.clone()))
        .unwrap();
    let plane = GraphEmbedding::tilted_plane(0.75);
    let s = brane_action(&spec, &plane, &[4, 4]).unwrap();
    assert!((s - 2.0 * a.dot(&v(&[1.0, 0.0, -0.75]))).abs() < 1e-14);
}

#[test]
fn nonrel_brane_expansion() {
    let target = MetricField::diagonal(&[1.0, 1.0, -1.0]).unwrap();
    let spec = BraneSpec::new(2, target, 1.0).unwrap();
    let slope = |s: f64| {
        GraphEmbedding::new(
            vec![(0.0, 1.0); 2],
            vec![ScalarProfile::Linear {
                coeffs: vec![s, 0.0],
                offset: 0.0,
            }],
        )
        .unwrap()
    };
    let flat = nonrel_brane_expand(&spec, &slope(0.0), &[4, 4], &[1, 2]).unwrap();
    assert_eq!((flat.exact, flat.quadratic), (1.0, 1.0));
    let small = nonrel_brane_expand(&spec, &slope(0.1), &[4, 4], &[1, 2]).unwrap();
    assert!((small.gap() - 1.25625e-5).abs() < 1e-9);
    for k in 1..=30 {
        let s = 0.01 * k as f64;
        let e = nonrel_brane_expand(&spec, &slope(s), &[4, 4], &[0, 0]).unwrap();
        assert!(e.gap() <= 0.2 * s.powi(4));
    }
    // graph gauge required
    let stretched =
        FnEmbedding::new(3, vec![(0.0, 1.0); 2], |z| v(&[2.0 * z[0], z[1], 0.0])).unwrap();
    assert!(nonrel_brane_expand(&spec, &stretched, &[2, 2], &[0, 0]).is_err());
    // Euclidean target is not one-time
    let euclid = BraneSpec::new(2, MetricField::euclidean(3), 1.0).unwrap();
    assert!(nonrel_brane_expand(&euclid, &slope(0.1), &[2, 2], &[0, 0]).is_err());
    assert!(nonrel_brane_expand(&spec, &slope(0.1), &[2, 2], &[2, 0]).is_err());
}

#[test]
fn gridded_embedding_from_csv() {
    let mut text = String::from("z1,z2,x,y,h\n");
    for i in 0..3 {
        for j in (0..4).rev() {
            let (z1, z2) = (i as f64 * 0.5, j as f64 / 3.0);
            text.push_str(&format!("{z1},{z2},{z1},{z2},{}\n", 0.75 * z1));
        }
    }
    let grid = GriddedEmbedding::from_csv(text.as_bytes(), 2).unwrap();
    assert_eq!(grid.shape(), &[3, 4]);
    assert_eq!(grid.target_dim(), 3);
    let spec = BraneSpec::new(2, MetricField::euclidean(3), 1.0).unwrap();
    let s = brane_action(&spec, &grid, &grid.cells()).unwrap();
    assert!((s - 1.25).abs() < 1e-12);
    assert!(integral_gauge_check(&grid, &grid.cells()).unwrap() < 1e-12);

    let missing: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
    assert!(GriddedEmbedding::from_csv(missing.as_bytes(), 2).is_err());
    assert!(GriddedEmbedding::from_csv("0,0,1\n1,x,2\n".as_bytes(), 1).is_err());
}

#[test]
fn plucker_relation_for_curved_embedding() {
    let emb = FnEmbedding::new(4, vec![(-1.0, 1.0); 2], |z| {
        v(&[
            z[0] + z[1] * z[1],
            z[1].sin(),
            z[0] * z[1],
            (z[0] - z[1]).exp(),
        ])
    })
    .unwrap();
    for k in 0..25 {
        let z = v(&[-0.9 + 0.07 * k as f64, 0.8 - 0.06 * k as f64]);
        let w = minors(&emb.jacobian(&z).unwrap());
        let r = w[0] * w[5] - w[1] * w[4] + w[2] * w[3];
        assert!(r.abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plucker_relation(entries in prop::collection::vec(-3.0f64..3.0, 8)) {
        let w = minors(&DMat::from_row_slice(4, 2, &entries));
        prop_assert!((w[0] * w[5] - w[1] * w[4] + w[2] * w[3]).abs() <= 1e-10);
    }

    #[test]
    fn gram_contraction_is_cauchy_binet(
        entries in prop::collection::vec(-2.0f64..2.0, 12),
        diag in prop::collection::vec(0.5f64..2.0, 4),
        d in 1usize..=3,
    ) {
        let j = DMat::from_row_slice(4, 3, &entries).columns(0, d).into_owned();
        let mut g = DMat::from_diagonal(&DVec::from_vec(diag));
        g[(0, 1)] = 0.2;
        g[(1, 0)] = 0.2;
        g[(0, 0)] = -g[(0, 0)];
        let w = minors(&j);
        let lhs = w.dot(&(multivector_metric_matrix(&g, d) * &w));
        let rhs = (j.transpose() * &g * &j).determinant();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        prop_assert_eq!(w.len(), component_count(4, d).unwrap());
        prop_assert_eq!(multi_indices(4, d).len(), w.len());
    }
}
