use fracflow_core::assembly::{assemble, BoundaryConditionSet, InterfaceModel};
use fracflow_core::fracture::{Aperture, FractureNetwork, FractureSpec};
use fracflow_core::geometry::BoundaryTag;
use fracflow_core::mesh::build_interval;
use fracflow_core::oracle::{solve_1d_interface_analytic, OneDimProblem};
use fracflow_core::solver::{solve, SolveOptions};
use fracflow_core::split::split_mesh;

#[test]
fn f32_interface_solve_matches_f64_analytic() {
    let mesh = build_interval(16, 1.0_f32).unwrap();
    let net = FractureNetwork::new(vec![
        FractureSpec::point(0.5_f32, Aperture::Constant(1e-2), 1e-1).unwrap()
    ]);
    let split = split_mesh(&mesh, &net).unwrap();
    let models = InterfaceModel::for_network(&split, &net);
    let bcs = BoundaryConditionSet::new()
        .with_neumann(BoundaryTag::Left, 1.0_f32)
        .with_dirichlet(BoundaryTag::Right, 0.0_f32);
    let sys = assemble(&split, &[1.0_f32, 1.0], &models, &bcs).unwrap();
    let (p, _) = solve(
        &sys.matrix,
        &sys.rhs,
        SolveOptions {
            tol: 1e-5,
            max_iter: None,
        },
    )
    .unwrap();
    let exact = solve_1d_interface_analytic(&OneDimProblem {
        length: 1.0,
        center: 0.5,
        eps: 1e-2,
        k1: 1.0,
        k2: 1.0,
        kf: 1e-1,
        h: 1.0,
    })
    .unwrap();
    let sub = split.subdomain_of_vertex();
    for ((x, v), d) in mesh.vertices().iter().zip(&p).zip(&sub) {
        let x = f64::from(x.x);
        let e = match (x == 0.5, d) {
            (true, 0) => exact.eval_left(x),
            (true, _) => exact.eval_right(x),
            _ => exact.eval(x),
        };
        assert!((f64::from(*v) - e).abs() < 1e-4, "x = {x}: {v} vs {e}");
    }
}
