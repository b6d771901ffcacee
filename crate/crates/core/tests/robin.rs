use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wente_core::fem::solve::manufactured;
use wente_core::fem::{
    assemble, coercivity_check, h1_seminorm_error, mesh_disc, mesh_disc_sized,
    robin_flux_functional, solve_dirichlet_fem, solve_robin, BoundaryArcs, RobinCoeffs,
    RobinProblem, Sizing, TriMesh,
};
use wente_core::mobius::bubble_at;
use wente_core::{BubbleSpec, Complex2};

fn manufactured_error(mesh: &TriMesh, coeffs: RobinCoeffs) -> f64 {
    let g = manufactured::robin_data(coeffs);
    let sol = solve_robin(
        mesh,
        coeffs,
        RobinProblem {
            source: None,
            robin_data: Some(&g),
            dirichlet_data: Some(&manufactured::exact),
        },
    )
    .unwrap();
    h1_seminorm_error(mesh, &sol.values, &manufactured::gradient)
}

#[test]
fn manufactured_solution_converges_at_first_order() {
    let arcs = BoundaryArcs::default_arc();
    for coeffs in [
        RobinCoeffs::default(),
        RobinCoeffs::new(1.0, 1.0, 1.0).unwrap(),
        RobinCoeffs::new(2.0, -1.0, 0.0).unwrap(),
    ] {
        let mut mesh = mesh_disc(0.2, &arcs).unwrap();
        let mut errors = Vec::new();
        for _ in 0..3 {
            errors.push(manufactured_error(&mesh, coeffs));
            mesh = mesh.refine().unwrap();
        }
        for pair in errors.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(order >= 0.9, "{coeffs:?}: errors {errors:?}");
        }
    }
}

fn bubble_source(eps: f64) -> impl Fn(Complex2) -> f64 + Sync {
    let spec = BubbleSpec::new(eps).unwrap();
    move |w| bubble_at(&spec, w).jacobian()
}

#[test]
fn coercivity_for_random_trial_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mesh = mesh_disc(0.1, &BoundaryArcs::default_arc()).unwrap();
    let samples: Vec<Vec<f64>> = (0..100)
        .map(|_| {
            (0..mesh.n_vertices())
                .map(|i| {
                    if mesh.constrained()[i] {
                        0.0
                    } else {
                        rng.gen_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect();
    for _ in 0..10 {
        let coeffs = RobinCoeffs::new(
            rng.gen_range(0.1..3.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(0.0..5.0),
        )
        .unwrap();
        let report = coercivity_check(&assemble(&mesh, coeffs), &samples).unwrap();
        for (m, s) in report.margins.iter().zip(&report.scales) {
            assert!(*m >= -1e-8 * s, "{coeffs:?}: margin {m}, scale {s}");
        }
    }
}

#[test]
fn bubble_solve_self_converges() {
    // E is the boundary minus a thin arc near e₂
    let arcs = BoundaryArcs::new(vec![(0.5 * PI + 0.1, 2.5 * PI - 0.1)]).unwrap();
    let f = bubble_source(1e-1);
    let coarse = mesh_disc_sized(Sizing::graded(0.1, 0.01), &arcs).unwrap();
    let fine = coarse.refine().unwrap().refine().unwrap();
    let solve = |m: &TriMesh| {
        solve_robin(
            m,
            RobinCoeffs::default(),
            RobinProblem {
                source: Some(&f),
                ..Default::default()
            },
        )
        .unwrap()
        .gradient_norm()
    };
    let (a, b) = (solve(&coarse), solve(&fine));
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
}

#[test]
fn flux_functional_grows_along_the_ladder() {
    let arcs = BoundaryArcs::default_arc();
    let mesh = mesh_disc_sized(Sizing::graded(0.1, 1e-3 / 4.0), &arcs).unwrap();
    let mut norms = Vec::new();
    for k in 2..=6 {
        let f = bubble_source(10f64.powf(-0.5 * k as f64));
        let (u, _) = solve_dirichlet_fem(&mesh, &f).unwrap();
        norms.push(
            robin_flux_functional(&mesh, &u, &f, RobinCoeffs::default())
                .unwrap()
                .dual_norm,
        );
    }
    eprintln!("dual norms {norms:?}");
    for pair in norms.windows(2) {
        assert!(pair[1] > pair[0], "dual norms {norms:?}");
    }
}

#[test]
fn robin_energy_grows_while_dirichlet_stays_bounded() {
    let arcs = BoundaryArcs::default_arc();
    let mesh = mesh_disc_sized(Sizing::graded(0.1, 1e-3 / 4.0), &arcs).unwrap();
    let (mut robin, mut dirichlet) = (Vec::new(), Vec::new());
    for k in 2..=6 {
        let f = bubble_source(10f64.powf(-0.5 * k as f64));
        let sol = solve_robin(
            &mesh,
            RobinCoeffs::default(),
            RobinProblem {
                source: Some(&f),
                ..Default::default()
            },
        )
        .unwrap();
        robin.push(sol.gradient_norm());
        let (u, k) = solve_dirichlet_fem(&mesh, &f).unwrap();
        dirichlet.push(k.quadratic_form(&u).sqrt());
    }
    eprintln!("robin {robin:?} dirichlet {dirichlet:?}");
    for pair in robin.windows(2) {
        assert!(pair[1] > pair[0], "robin {robin:?}");
    }
    let (lo, hi) = dirichlet
        .iter()
        .fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 1.5, "dirichlet {dirichlet:?}");
}
