use fracflow_core::assembly::{assemble, assemble_unconstrained, BoundaryConditionSet, BoundaryValue, InterfaceModel};
use fracflow_core::fracture::{Aperture, FractureNetwork, FractureSpec};
use fracflow_core::geometry::{BoundaryTag, Point};
use fracflow_core::mesh::build_structured_quad;
use fracflow_core::oracle::{
    solve_1d_heterogeneous_analytic, solve_1d_interface_analytic, solve_equidim_2d, EquidimProblem, OneDimProblem,
};
use fracflow_core::postprocess::sample_profile;
use fracflow_core::solver::{cholesky_solve, pcg_solve, solve, Preconditioner, SolveOptions};
use fracflow_core::sparse::TripletMatrix;
use fracflow_core::split::{split_mesh, SplitMesh};
use proptest::prelude::*;

const N: usize = 8;

#[derive(Debug, Clone)]
struct Case {
    vertical: usize,
    horizontal: Option<usize>,
    log_kf: f64,
    log_eps: f64,
    k: Vec<f64>,
}

fn case() -> impl Strategy<Value = Case> {
    (
        1..N,
        proptest::option::of(1..N),
        -3.0..3.0_f64,
        -4.0..-1.0_f64,
        proptest::collection::vec(0.5..5.0_f64, 4),
    )
        .prop_map(|(vertical, horizontal, log_kf, log_eps, k)| Case {
            vertical,
            horizontal,
            log_kf,
            log_eps,
            k,
        })
}

fn line(a: (f64, f64), b: (f64, f64), c: &Case) -> FractureSpec<f64> {
    FractureSpec::new(
        vec![Point::new(a.0, a.1), Point::new(b.0, b.1)],
        Aperture::Constant(10f64.powf(c.log_eps)),
        10f64.powf(c.log_kf),
    )
    .unwrap()
}

fn setup(c: &Case) -> (SplitMesh<f64>, FractureNetwork<f64>, Vec<f64>) {
    let mesh = build_structured_quad(N, N, Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
    let x = c.vertical as f64 / N as f64;
    let mut lines = vec![line((x, 0.0), (x, 1.0), c)];
    if let Some(j) = c.horizontal {
        let y = j as f64 / N as f64;
        lines.push(line((0.0, y), (1.0, y), c));
    }
    let net = FractureNetwork::new(lines);
    let split = split_mesh(&mesh, &net).unwrap();
    let k = c.k[..split.n_subdomains()].to_vec();
    (split, net, k)
}

fn bcs() -> BoundaryConditionSet<f64> {
    BoundaryConditionSet::new()
        .with_neumann(BoundaryTag::Left, 1.0)
        .with_dirichlet(BoundaryTag::Right, BoundaryValue::function(|p: Point<f64>| p.y))
}

fn direct(split: &SplitMesh<f64>, net: &FractureNetwork<f64>, k: &[f64]) -> Vec<f64> {
    let models = InterfaceModel::for_network(split, net);
    let sys = assemble(split, k, &models, &bcs()).unwrap();
    cholesky_solve(&sys.matrix.to_dense(), &sys.rhs).unwrap()
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn interface_orientation_does_not_matter(c in case()) {
        let (split, net, k) = setup(&c);
        let a = direct(&split, &net, &k);
        let b = direct(&split.with_flipped_interfaces(), &net, &k);
        let scale = max_abs(a.iter().copied()).max(1.0);
        prop_assert!(max_abs(a.iter().zip(&b).map(|(x, y)| x - y)) <= 1e-9 * scale);
    }

    #[test]
    fn unconstrained_matrix_is_symmetric_and_annihilates_constants(c in case()) {
        let (split, net, k) = setup(&c);
        let models = InterfaceModel::for_network(&split, &net);
        let sys = assemble_unconstrained(&split, &k, &models, &bcs()).unwrap();
        let a = &sys.system.matrix;
        let scale = a.max_abs();
        prop_assert!(a.symmetry_defect() <= 1e-12 * scale);
        let ones = vec![1.0; a.dim()];
        prop_assert!(max_abs(a.mul_vec(&ones)) <= 1e-10 * scale);
    }

    #[test]
    fn profiles_are_linear_in_the_solution(
        u in proptest::collection::vec(-1.0..1.0_f64, (N + 1) * (N + 1)),
        v in proptest::collection::vec(-1.0..1.0_f64, (N + 1) * (N + 1)),
        alpha in -3.0..3.0_f64,
        y in 0.0..1.0_f64,
    ) {
        let mesh = build_structured_quad(N, N, Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
        let split = split_mesh(&mesh, &FractureNetwork::empty()).unwrap();
        let seg = (Point::new(0.0, y), Point::new(1.0, 1.0 - y));
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + b).collect();
        let (pu, pv, pw) = (
            sample_profile(&split, &u, seg, 17).unwrap(),
            sample_profile(&split, &v, seg, 17).unwrap(),
            sample_profile(&split, &w, seg, 17).unwrap(),
        );
        for ((a, b), c) in pu.values().iter().zip(pv.values()).zip(pw.values()) {
            prop_assert!((alpha * a + b - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn cg_agrees_with_cholesky(
        n in 2..40_usize,
        entries in proptest::collection::vec((0..40_usize, 0..40_usize, -1.0..1.0_f64), 0..120),
        b in proptest::collection::vec(-1.0..1.0_f64, 40),
    ) {
        let mut t = TripletMatrix::new(n);
        let mut row_abs = vec![0.0; n];
        for (i, j, v) in entries {
            let (i, j) = (i % n, j % n);
            if i != j {
                t.push(i, j, v);
                t.push(j, i, v);
                row_abs[i] += v.abs();
                row_abs[j] += v.abs();
            }
        }
        for (i, r) in row_abs.iter().enumerate() {
            t.push(i, i, r + 0.1);
        }
        let a = t.to_csr();
        let b = &b[..n];
        let exact = cholesky_solve(&a.to_dense(), b).unwrap();
        let (x, rep) = pcg_solve(&a, b, &Preconditioner::jacobi(&a), 1e-12, 10 * n).unwrap();
        prop_assert!(rep.converged);
        let scale = max_abs(exact.iter().copied()).max(1e-300);
        prop_assert!(max_abs(x.iter().zip(&exact).map(|(p, q)| p - q)) <= 1e-9 * scale);
        prop_assert!(rep.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
    }

    #[test]
    fn interface_model_is_within_o_eps_of_the_resolved_layer(
        log_eps in -5.0..-2.0_f64,
        log_kf in -2.0..2.0_f64,
        k1 in 0.5..4.0_f64,
        k2 in 0.5..4.0_f64,
        center in 0.2..0.8_f64,
        h in 0.1..2.0_f64,
    ) {
        let pb = OneDimProblem { length: 1.0, center, eps: 10f64.powf(log_eps), k1, k2, kf: 10f64.powf(log_kf), h };
        let layer = solve_1d_heterogeneous_analytic(&pb).unwrap();
        let model = solve_1d_interface_analytic(&pb).unwrap();
        // outside the layer the two differ only by the background drop over
        // the removed width
        let bound = h * pb.eps * (1.0 / k1).max(1.0 / k2) * (1.0 + 1e-9);
        for x in [0.0, 0.5 * (center - pb.eps), center + pb.eps, 1.0] {
            prop_assert!((layer.eval(x) - model.eval(x)).abs() <= bound);
        }
    }

    #[test]
    fn resolved_band_with_uniform_data_is_y_invariant(
        log_kf in -2.0..2.0_f64,
        x in 0.3..0.7_f64,
        g in -1.0..1.0_f64,
    ) {
        let pb = EquidimProblem::full_height(
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            12,
            x,
            Aperture::Constant(0.02),
            1.0,
            10f64.powf(log_kf),
        );
        let bcs = BoundaryConditionSet::new()
            .with_neumann(BoundaryTag::Left, 1.0)
            .with_dirichlet(BoundaryTag::Right, g);
        let sol = solve_equidim_2d(&pb, &bcs, SolveOptions { tol: 1e-13, max_iter: None }).unwrap();
        let verts = sol.split.mesh().vertices();
        for (i, p) in verts.iter().enumerate() {
            let base = verts.iter().position(|q| q.x == p.x && q.y == 0.0).unwrap();
            prop_assert!((sol.pressure[i] - sol.pressure[base]).abs() <= 1e-9);
        }
    }
}

#[test]
fn unit_square_without_fractures_reproduces_linear_pressure() {
    let mesh = build_structured_quad(N, N, Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
    let split = split_mesh(&mesh, &FractureNetwork::empty()).unwrap();
    let bcs = BoundaryConditionSet::new()
        .with_dirichlet(BoundaryTag::Left, 1.0)
        .with_dirichlet(BoundaryTag::Right, 0.0);
    let sys = assemble(&split, &[1.0_f64], &[], &bcs).unwrap();
    let (x, _) = solve(&sys.matrix, &sys.rhs, SolveOptions::default()).unwrap();
    for (p, v) in mesh.vertices().iter().zip(&x) {
        assert!((v - (1.0 - p.x)).abs() < 1e-10);
    }
}
