//! Property tests over randomly jittered grids and random fields.

use proptest::prelude::*;
use tetfv::audit::audit_mesh;
use tetfv::bc::BoundaryConditions;
use tetfv::euler::{Prim, State, GAMMA};
use tetfv::lsq::{FitOrder, LsqOperator, StencilMode};
use tetfv::mesh::io::{mesh_from_text, write_mesh_text};
use tetfv::mesh::{generate_cube_grid, FaceSide, PatchKind, TetMesh};
use tetfv::residual::{Discretization, SourceGradients};
use tetfv::scheme::Scheme;
use tetfv::solver::mass_matrix_solve;
use tetfv::vec3::{self, Vec3};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 12,
        ..ProptestConfig::default()
    }
}

fn with_kind(mut mesh: TetMesh, kind: PatchKind) -> TetMesh {
    for p in mesh.patches.iter_mut() {
        p.kind = kind;
    }
    mesh
}

/// Quadratic in x with coefficients `c`: constant, linear (3), quadratic (6).
fn quadratic(c: &[f64; 10], x: Vec3) -> f64 {
    let [a, b, z] = x;
    c[0] + c[1] * a + c[2] * b + c[3] * z + c[4] * a * a + c[5] * b * b + c[6] * z * z + c[7] * a * b + c[8] * b * z
        + c[9] * a * z
}

fn quadratic_grad(c: &[f64; 10], x: Vec3) -> Vec3 {
    let [a, b, z] = x;
    [
        c[1] + 2.0 * c[4] * a + c[7] * b + c[9] * z,
        c[2] + 2.0 * c[5] * b + c[7] * a + c[8] * z,
        c[3] + 2.0 * c[6] * z + c[8] * b + c[9] * a,
    ]
}

fn smooth_state(x: Vec3) -> Prim {
    let s = 0.4 * x[0] - 0.3 * x[1] + 0.5 * x[2];
    Prim([1.0 + 0.2 * s.sin(), 0.3 + 0.1 * s, -0.2 + 0.1 * s.cos(), 0.1, 1.0 + 0.1 * s * s])
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn generated_grids_are_closed_and_fill_the_cube(n in 3usize..6, jitter in 0.0f64..0.45, seed in 0u64..1000) {
        let mesh = generate_cube_grid(n, jitter, seed).unwrap();
        let total: f64 = mesh.cell_volume.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "volume {total}");
        prop_assert!(mesh.cell_volume.iter().all(|&v| v > 0.0));
        let report = audit_mesh(&mesh);
        prop_assert!(report.passes(1e-12), "{report}");
        for (f, face) in mesh.faces.iter().enumerate() {
            // left centroid lies behind the face
            let d = vec3::sub(mesh.face_centroid[f], mesh.cell_centroid[face.left]);
            prop_assert!(vec3::dot(d, mesh.face_normal[f]) > 0.0);
        }
    }

    #[test]
    fn mesh_text_round_trip_is_exact(n in 3usize..5, jitter in 0.0f64..0.45, seed in 0u64..1000) {
        let mesh = generate_cube_grid(n, jitter, seed).unwrap();
        let text = write_mesh_text(&mesh);
        let back = mesh_from_text(&text).unwrap();
        prop_assert_eq!(&back.nodes, &mesh.nodes);
        prop_assert_eq!(&back.cells, &mesh.cells);
        prop_assert_eq!(back.n_faces(), mesh.n_faces());
        prop_assert_eq!(write_mesh_text(&back), text);
        prop_assert_eq!(back.content_hash(), mesh.content_hash());
    }

    #[test]
    fn quadratic_fit_recovers_exact_gradients(
        c in prop::array::uniform10(-1.0f64..1.0),
        jitter in 0.0f64..0.3,
        seed in 0u64..1000,
    ) {
        let mesh = generate_cube_grid(5, jitter, seed).unwrap();
        let values: Vec<[f64; 1]> = mesh.cell_centroid.iter().map(|&x| [quadratic(&c, x)]).collect();
        let lsq = LsqOperator::build(&mesh, StencilMode::NodeNeighbor, FitOrder::Quadratic).unwrap();
        let g = lsq.gradients(&values);
        for (i, &x) in mesh.nodes.iter().enumerate() {
            let e = vec3::norm(vec3::sub(g[i][0], quadratic_grad(&c, x)));
            prop_assert!(e < 1e-9, "node {i}: {e}");
        }
    }

    #[test]
    fn linear_fit_recovers_linear_gradients(
        c in prop::array::uniform4(-1.0f64..1.0),
        jitter in 0.0f64..0.3,
        seed in 0u64..1000,
    ) {
        let mesh = generate_cube_grid(5, jitter, seed).unwrap();
        let f = |x: Vec3| c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[2];
        let values: Vec<f64> = mesh.cell_centroid.iter().map(|&x| f(x)).collect();
        for mode in [StencilMode::Base, StencilMode::NodeNeighbor] {
            let lsq = LsqOperator::build(&mesh, mode, FitOrder::Linear).unwrap();
            for g in lsq.scalar_gradients(&values) {
                prop_assert!(vec3::norm(vec3::sub(g, [c[1], c[2], c[3]])) < 1e-10);
            }
        }
    }

    #[test]
    fn interior_fluxes_cancel(jitter in 0.0f64..0.3, seed in 0u64..1000, which in 0usize..3) {
        let mesh = with_kind(generate_cube_grid(4, jitter, seed).unwrap(), PatchKind::Freestream);
        let scheme = [Scheme::fang1(), Scheme::ngqi2(), Scheme::ngqi2_fc()][which];
        let lsq = LsqOperator::build(&mesh, StencilMode::NodeNeighbor, scheme.gradient).unwrap();
        let inflow = Prim::new(1.0, [0.2, 0.1, 0.0], 1.0 / GAMMA);
        let bc = BoundaryConditions::from_mesh(&mesh, inflow, inflow.p(), None).unwrap();
        let d = Discretization::new(&mesh, scheme, lsq, bc, None, SourceGradients::Analytic);
        let prims: Vec<Prim> = mesh.cell_centroid.iter().map(|&x| smooth_state(x)).collect();
        let res = d.residual(&prims, 0.0).unwrap();
        let data = d.face_data(&prims, d.nodal_gradients(&prims));
        let mut boundary = [0.0; 5];
        for f in 0..mesh.n_faces() {
            if let FaceSide::Boundary(_) = mesh.faces[f].right {
                let q = d.face_flux(f, &prims, &data, 0.0).unwrap();
                for k in 0..5 {
                    boundary[k] += q[k];
                }
            }
        }
        for k in 0..5 {
            let total: f64 = res.iter().map(|r| r[k]).sum();
            prop_assert!((total - boundary[k]).abs() < 1e-12, "eq {k}: {total} vs {}", boundary[k]);
        }
    }

    #[test]
    fn uniform_state_is_preserved(jitter in 0.0f64..0.4, seed in 0u64..1000, u in -0.5f64..0.5) {
        let mesh = with_kind(generate_cube_grid(4, jitter, seed).unwrap(), PatchKind::Freestream);
        let w = Prim::new(1.2, [u, 0.1, -0.2], 0.9);
        for scheme in [Scheme::fang1(), Scheme::ngqi2_fc()] {
            let lsq = LsqOperator::build(&mesh, StencilMode::NodeNeighbor, scheme.gradient).unwrap();
            let bc = BoundaryConditions::from_mesh(&mesh, w, w.p(), None).unwrap();
            let d = Discretization::new(&mesh, scheme, lsq, bc, None, SourceGradients::Analytic);
            let res = d.residual(&vec![w; mesh.n_cells()], 0.0).unwrap();
            let worst = res.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(worst < 1e-13, "{scheme}: {worst}");
        }
    }

    #[test]
    fn mass_solve_inverts_the_mass_matrix(jitter in 0.0f64..0.3, seed in 0u64..1000) {
        let mesh = generate_cube_grid(5, jitter, seed).unwrap();
        let lsq = LsqOperator::build(&mesh, StencilMode::NodeNeighbor, FitOrder::Quadratic).unwrap();
        let z_true: Vec<State> = mesh.cell_centroid.iter().map(|&x| smooth_state(x).0).collect();
        let b = tetfv::solver::mass_matrix_apply(&mesh, &lsq, &z_true);
        let r = mass_matrix_solve(&mesh, &lsq, &b, 10.0, 30).unwrap();
        let worst = r
            .z
            .iter()
            .zip(&z_true)
            .flat_map(|(a, e)| (0..5).map(move |k| (a[k] - e[k]).abs()))
            .fold(0.0f64, f64::max);
        prop_assert!(worst < 1e-10, "{worst} after {} iterations", r.iterations());
        prop_assert!(r.residuals.windows(2).all(|w| w[1] <= w[0]));
    }
}
