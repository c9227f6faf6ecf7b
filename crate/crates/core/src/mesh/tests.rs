use super::io::{mesh_from_text, parse_mesh_text, write_mesh_text};
use super::*;
use crate::vec3;

fn reference_tet() -> RawMesh {
    let nodes = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ];
    let cells = vec![[0, 1, 2, 3]];
    let faces = boundary_faces(&cells);
    RawMesh {
        nodes,
        cells,
        patches: vec![RawPatch {
            patch: BoundaryPatch::new("wall", PatchKind::SlipWall),
            faces,
        }],
    }
}

fn two_tets() -> RawMesh {
    let nodes = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
    ];
    let cells = vec![[0, 1, 2, 3], [1, 2, 3, 4]];
    let faces = boundary_faces(&cells);
    RawMesh {
        nodes,
        cells,
        patches: vec![RawPatch {
            patch: BoundaryPatch::new("far", PatchKind::Freestream),
            faces,
        }],
    }
}

fn assert_closed(mesh: &TetMesh) {
    for c in 0..mesh.n_cells() {
        let mut sum = [0.0; 3];
        let mut area = 0.0;
        for &(f, _) in &mesh.cell_faces[c] {
            let n = mesh.outward_normal(f, c);
            sum = vec3::add(sum, n);
            area += vec3::norm(n);
        }
        assert!(vec3::norm(sum) <= 1e-13 * area, "cell {c}: {sum:?}");
    }
}

#[test]
fn single_reference_tet_topology_and_geometry() {
    let mesh = TetMesh::build(reference_tet()).unwrap();
    assert_eq!(mesh.n_interior_faces, 0);
    assert_eq!(mesh.n_boundary_faces(), 4);
    assert!((mesh.cell_volume[0] - 1.0 / 6.0).abs() < 1e-15);
    for d in 0..3 {
        assert!((mesh.cell_centroid[0][d] - 0.25).abs() < 1e-15);
    }
    // face opposite node 0 has outward normal along (1,1,1) with area sqrt(3)/2
    let f = (0..4)
        .find(|&f| !mesh.faces[f].nodes.contains(&0))
        .unwrap();
    let n = mesh.face_normal[f];
    let area = vec3::norm(n);
    assert!((area - 3f64.sqrt() / 2.0).abs() < 1e-15);
    for d in 0..3 {
        assert!((n[d] / area - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }
    assert_closed(&mesh);
}

#[test]
fn two_tets_share_one_face() {
    let mesh = TetMesh::build(two_tets()).unwrap();
    assert_eq!(mesh.n_interior_faces, 1);
    assert_eq!(mesh.n_boundary_faces(), 6);
    assert_closed(&mesh);
    // left centroid lies behind the outward normal of the shared face
    let face = mesh.faces[0];
    let to_left = vec3::sub(mesh.cell_centroid[face.left], mesh.face_centroid[0]);
    assert!(vec3::dot(to_left, mesh.face_normal[0]) < 0.0);
}

#[test]
fn negative_cells_are_reoriented() {
    let mut raw = reference_tet();
    raw.cells[0] = [0, 2, 1, 3];
    let mesh = TetMesh::build(raw).unwrap();
    assert_eq!(mesh.reoriented_cells, vec![0]);
    assert!(mesh.cell_volume[0] > 0.0);
}

#[test]
fn degenerate_cell_is_named() {
    let mut raw = reference_tet();
    raw.nodes[3] = [0.5, 0.5, 0.0];
    assert!(matches!(
        TetMesh::build(raw),
        Err(MeshError::DegenerateCell { cell: 0, .. })
    ));
}

#[test]
fn non_manifold_face_is_rejected() {
    let mut raw = two_tets();
    raw.nodes.push([-1.0, -1.0, -1.0]);
    raw.cells.push([5, 1, 2, 3]);
    assert!(matches!(
        TetMesh::build(raw),
        Err(MeshError::NonManifoldFace { .. })
    ));
}

#[test]
fn untagged_boundary_face_is_rejected() {
    let mut raw = two_tets();
    raw.patches[0].faces.pop();
    assert!(matches!(
        TetMesh::build(raw),
        Err(MeshError::UntaggedBoundaryFace { .. })
    ));
}

#[test]
fn out_of_range_node_is_rejected() {
    let mut raw = reference_tet();
    raw.cells[0][2] = 9;
    assert!(matches!(
        TetMesh::build(raw),
        Err(MeshError::NodeOutOfRange { node: 9, .. })
    ));
}

#[test]
fn cube_grid_cell_counts() {
    assert_eq!(generate_cube_grid(3, 0.0, 0).unwrap().n_cells(), 48);
    assert_eq!(generate_cube_grid(13, 0.0, 0).unwrap().n_cells(), 10_368);
}

#[test]
fn perturbed_cube_is_closed_and_fills_the_unit_cube() {
    let mesh = generate_cube_grid(7, 0.3, 11).unwrap();
    assert_closed(&mesh);
    assert!((mesh.total_volume() - 1.0).abs() < 1e-10);
    assert!(mesh.cell_volume.iter().all(|&v| v > 0.0));
    assert!(mesh.reoriented_cells.is_empty());
    for (c, cell) in mesh.cells.iter().enumerate() {
        let mean = vec3::mean(&cell.map(|n| mesh.nodes[n]));
        assert_eq!(mean, mesh.cell_centroid[c]);
    }
    // boundary nodes stay on their planes
    for (pi, patch) in mesh.patches.iter().enumerate() {
        let axis = pi / 2;
        let value = (pi % 2) as f64;
        for &node in patch.node_normals.keys() {
            assert_eq!(mesh.nodes[node][axis], value, "{}", patch.tag);
        }
    }
    for f in mesh.interior_faces() {
        let face = mesh.faces[f];
        let d = vec3::sub(mesh.cell_centroid[face.left], mesh.face_centroid[f]);
        assert!(vec3::dot(d, mesh.face_normal[f]) < 0.0);
    }
}

#[test]
fn cube_generation_is_deterministic() {
    let a = generate_cube_grid(6, 0.15, 42).unwrap();
    let b = generate_cube_grid(6, 0.15, 42).unwrap();
    let bits = |m: &TetMesh| -> Vec<u64> { m.nodes.iter().flatten().map(|x| x.to_bits()).collect() };
    assert_eq!(bits(&a), bits(&b));
    let c = generate_cube_grid(6, 0.15, 43).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn invalid_cube_parameters() {
    assert!(matches!(
        generate_cube_grid(2, 0.0, 0),
        Err(MeshError::InvalidParameter(_))
    ));
    assert!(matches!(
        generate_cube_grid(5, 0.5, 0),
        Err(MeshError::InvalidParameter(_))
    ));
}

#[test]
fn bump_profile_values() {
    assert!((bump_height(0.75) - 0.05).abs() < 1e-15);
    assert_eq!(bump_height(0.3), 0.0);
    assert!(bump_height(1.2).abs() < 1e-20);
    assert_eq!(bump_height(-0.1), 0.0);
    // slope against a central difference
    for x in [0.4, 0.6, 0.75, 1.0, 1.1] {
        let h = 1e-6;
        let fd = (bump_height(x + h) - bump_height(x - h)) / (2.0 * h);
        assert!((fd - bump_slope(x)).abs() < 1e-8);
    }
}

#[test]
fn bump_grid_counts_and_volume() {
    let mesh = generate_bump_grid(16, 11, 11, 0.0, 0).unwrap();
    assert_eq!(mesh.n_cells(), 9_000);
    assert_closed(&mesh);
    // volume = 2 x 1 x 1 minus the bump cross-section times the span;
    // the integral of sin^4 over one period is 3/8 of its length (0.9)
    let bump_area = 0.05 * 0.9 * 3.0 / 8.0;
    let piecewise_error = 1e-3;
    assert!((mesh.total_volume() - (2.0 - bump_area)).abs() < piecewise_error);
    let bottom = mesh.patch_index("bottom").unwrap();
    for (&node, n) in &mesh.patches[bottom].node_normals {
        let x = mesh.nodes[node][0];
        let expected = vec3::normalize([-bump_slope(x), 0.0, 1.0]);
        assert!(vec3::norm(vec3::sub(*n, expected)) < 1e-15);
    }
}

#[test]
fn cylinder_grid_counts_and_normals() {
    let mesh = generate_cylinder_grid(9, CylinderParams::default()).unwrap();
    assert_eq!(mesh.n_cells(), 3_072);
    assert_closed(&mesh);
    let bottom = mesh.patch_index("bottom").unwrap();
    let patch = &mesh.patches[bottom];
    assert_eq!(patch.kind, PatchKind::SlipWall);
    let r = CylinderParams::default().radius;
    let mut saw_axis_point = false;
    for (&node, n) in &patch.node_normals {
        let p = mesh.nodes[node];
        assert!(((p[0] * p[0] + p[2] * p[2]).sqrt() - r).abs() < 1e-14);
        assert!((vec3::norm(*n) - 1.0).abs() < 1e-15);
        if p[2] == 0.0 && p[1] == 0.0 {
            assert_eq!(*n, [1.0, 0.0, 0.0]);
            saw_axis_point = true;
        }
    }
    assert!(saw_axis_point);
    // annular sector volume: arc/2 * ((r+t)^2 - r^2) * span, approximated by chords
    let p = CylinderParams::default();
    let exact = 0.5 * p.arc * ((p.radius + p.thickness).powi(2) - p.radius.powi(2)) * p.span;
    assert!((mesh.total_volume() - exact).abs() / exact < 1e-2);
}

#[test]
fn text_format_round_trip() {
    let mesh = generate_cylinder_grid(4, CylinderParams::default()).unwrap();
    let text = write_mesh_text(&mesh);
    let back = mesh_from_text(&text).unwrap();
    assert_eq!(back.nodes, mesh.nodes);
    assert_eq!(back.cells, mesh.cells);
    assert_eq!(back.n_interior_faces, mesh.n_interior_faces);
    assert_eq!(back.patches.len(), mesh.patches.len());
    for (a, b) in back.patches.iter().zip(&mesh.patches) {
        assert_eq!(a.tag, b.tag);
        assert_eq!(a.kind, b.kind);
        assert_eq!(a.node_normals.len(), b.node_normals.len());
    }
    assert_eq!(write_mesh_text(&back).lines().count(), text.lines().count());
}

#[test]
fn parser_reports_line_numbers() {
    let bad = "tetmesh 1\nnodes 1\n0 0 zero\n";
    match parse_mesh_text(bad) {
        Err(super::io::MeshIoError::Syntax { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(parse_mesh_text("tetmesh 2\n").is_err());
    assert!(parse_mesh_text("tetmesh 1\nnodes 3\n0 0 0\n").is_err());
    assert!(parse_mesh_text("tetmesh 1\nnodes 0\ncells 0\n1 2 3\n").is_err());
}

#[test]
fn content_hash_tracks_geometry() {
    let a = generate_cube_grid(4, 0.1, 1).unwrap();
    let b = generate_cube_grid(4, 0.1, 1).unwrap();
    let c = generate_cube_grid(4, 0.1, 2).unwrap();
    assert_eq!(a.content_hash(), b.content_hash());
    assert_ne!(a.content_hash(), c.content_hash());
    assert_eq!(a.content_hash().len(), 64);
}
