#![no_main]

//! Arbitrary text through the mesh reader. Anything it accepts must write
//! back out and read again to the same connectivity.

use libfuzzer_sys::fuzz_target;
use tetfv::mesh::io::{mesh_from_text, parse_mesh_text, write_mesh_text};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_mesh_text(text);
    if let Ok(mesh) = mesh_from_text(text) {
        let again = mesh_from_text(&write_mesh_text(&mesh)).expect("written mesh reads back");
        assert_eq!(again.cells, mesh.cells);
        assert_eq!(again.n_faces(), mesh.n_faces());
    }
});
