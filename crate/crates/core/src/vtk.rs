//! Legacy ASCII VTK unstructured-grid output.

use std::fmt::Write as _;

use crate::mesh::TetMesh;

const VTK_TETRA: u8 = 10;

/// A named scalar array attached to cells or points.
#[derive(Debug, Clone, Copy)]
pub struct Field<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

fn write_fields(out: &mut String, kind: &str, n: usize, fields: &[Field<'_>]) {
    if fields.is_empty() {
        return;
    }
    let _ = writeln!(out, "{kind} {n}");
    for f in fields {
        assert_eq!(f.values.len(), n, "field `{}` has the wrong length", f.name);
        // VTK array names cannot contain whitespace
        let name: String = f.name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in f.values {
            let _ = writeln!(out, "{v:.17e}");
        }
    }
}

/// Renders the mesh with cell and point scalars.
pub fn to_vtk_string(mesh: &TetMesh, title: &str, cell_fields: &[Field<'_>], point_fields: &[Field<'_>]) -> String {
    let mut out = String::with_capacity(64 * (mesh.n_nodes() + mesh.n_cells()));
    let title: String = title.lines().next().unwrap_or("").chars().take(255).collect();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {} double", mesh.n_nodes());
    for p in &mesh.nodes {
        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]);
    }
    let _ = writeln!(out, "CELLS {} {}", mesh.n_cells(), 5 * mesh.n_cells());
    for c in &mesh.cells {
        let _ = writeln!(out, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.n_cells());
    for _ in &mesh.cells {
        let _ = writeln!(out, "{VTK_TETRA}");
    }
    write_fields(&mut out, "CELL_DATA", mesh.n_cells(), cell_fields);
    write_fields(&mut out, "POINT_DATA", mesh.n_nodes(), point_fields);
    out
}

pub fn write_vtk(
    path: &std::path::Path,
    mesh: &TetMesh,
    title: &str,
    cell_fields: &[Field<'_>],
    point_fields: &[Field<'_>],
) -> std::io::Result<()> {
    std::fs::write(path, to_vtk_string(mesh, title, cell_fields, point_fields))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_cube_grid;

    #[test]
    fn layout_matches_the_legacy_format() {
        let mesh = generate_cube_grid(3, 0.0, 1).unwrap();
        let rho: Vec<f64> = (0..mesh.n_cells()).map(|c| c as f64).collect();
        let pt: Vec<f64> = vec![1.5; mesh.n_nodes()];
        let s = to_vtk_string(
            &mesh,
            "test\nsecond line dropped",
            &[Field { name: "rho", values: &rho }],
            &[Field { name: "nodal rho", values: &pt }],
        );
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[1], "test");
        assert_eq!(lines[2], "ASCII");
        assert_eq!(lines[4], format!("POINTS {} double", mesh.n_nodes()));
        let cells_at = 5 + mesh.n_nodes();
        assert_eq!(lines[cells_at], format!("CELLS 48 240"));
        assert!(lines[cells_at + 1].starts_with("4 "));
        assert_eq!(lines[cells_at + 49], "CELL_TYPES 48");
        assert!(s.contains("CELL_DATA 48\nSCALARS rho double 1\nLOOKUP_TABLE default\n"));
        assert!(s.contains(&format!("POINT_DATA {}\nSCALARS nodal_rho double 1", mesh.n_nodes())));
        let last: f64 = lines.last().unwrap().parse().unwrap();
        assert_eq!(last, 1.5);
    }

    #[test]
    fn values_round_trip_exactly() {
        let mesh = generate_cube_grid(3, 0.3, 4).unwrap();
        let s = to_vtk_string(&mesh, "t", &[], &[]);
        let x: f64 = s.lines().nth(5).unwrap().split(' ').next().unwrap().parse().unwrap();
        assert_eq!(x, mesh.nodes[0][0]);
        assert!(!s.contains("CELL_DATA"));
    }
}
