//! Reader and writer for hexahedral meshes in legacy ASCII VTK format
//! (`DATASET UNSTRUCTURED_GRID`, cell type 12).
//!
//! The reader is line-based for the four header lines and token-based
//! afterwards, so arbitrary whitespace layouts of the `POINTS` / `CELLS` /
//! `CELL_TYPES` sections are accepted. The writer emits coordinates with
//! 17 significant digits so that a write–read cycle reproduces every
//! `f64` bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::mesh::{HexMesh, MeshError};
use crate::Point3;

/// Reads a mesh from a legacy ASCII VTK file.
pub fn read_vtk(path: &Path) -> Result<HexMesh, MeshError> {
    let text = fs::read_to_string(path)?;
    parse_vtk(&text)
}

/// Writes a mesh to a legacy ASCII VTK file.
pub fn write_vtk(path: &Path, mesh: &HexMesh) -> Result<(), MeshError> {
    fs::write(path, format_vtk(mesh))?;
    Ok(())
}

/// Parses legacy ASCII VTK text into a mesh.
pub fn parse_vtk(text: &str) -> Result<HexMesh, MeshError> {
    let mut lines = text.lines().enumerate();

    // `# vtk DataFile Version x.y` — accept any version.
    let (idx, first) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty file".into()))?;
    if !first.trim_start().starts_with("# vtk DataFile") {
        return Err(parse_err(idx + 1, "not a VTK data file".into()));
    }

    let mut header_line = |want: Option<&str>, what: &str| -> Result<(), MeshError> {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("missing {what} line")))?;
        let line = line.trim();
        match want {
            Some(want) if !line.eq_ignore_ascii_case(want) => Err(parse_err(
                idx + 1,
                format!("expected `{want}`, found `{line}`"),
            )),
            _ => Ok(()),
        }
    };

    header_line(None, "title")?;
    header_line(Some("ASCII"), "format")?;
    header_line(Some("DATASET UNSTRUCTURED_GRID"), "dataset")?;

    // Everything after the header is a whitespace-separated token stream,
    // but we keep line numbers for error messages.
    let mut tokens = lines
        .flat_map(|(idx, line)| line.split_whitespace().map(move |t| (idx + 1, t)))
        .peekable();

    let mut next_token = |what: &str| -> Result<(usize, &str), MeshError> {
        tokens
            .next()
            .ok_or_else(|| parse_err(0, format!("unexpected end of file, expected {what}")))
    };

    fn expect_keyword(
        (line, tok): (usize, &str),
        keyword: &str,
    ) -> Result<(), MeshError> {
        if tok.eq_ignore_ascii_case(keyword) {
            Ok(())
        } else {
            Err(parse_err(line, format!("expected `{keyword}`, found `{tok}`")))
        }
    }

    fn parse_num<T: std::str::FromStr>((line, tok): (usize, &str)) -> Result<T, MeshError> {
        tok.parse()
            .map_err(|_| parse_err(line, format!("invalid number `{tok}`")))
    }

    expect_keyword(next_token("POINTS")?, "POINTS")?;
    let n_points: usize = parse_num(next_token("point count")?)?;
    let (line, dtype) = next_token("point data type")?;
    if !(dtype.eq_ignore_ascii_case("double") || dtype.eq_ignore_ascii_case("float")) {
        return Err(parse_err(line, format!("unsupported point type `{dtype}`")));
    }
    let mut points = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let x: f64 = parse_num(next_token("x coordinate")?)?;
        let y: f64 = parse_num(next_token("y coordinate")?)?;
        let z: f64 = parse_num(next_token("z coordinate")?)?;
        points.push(Point3::new(x, y, z));
    }

    expect_keyword(next_token("CELLS")?, "CELLS")?;
    let n_cells: usize = parse_num(next_token("cell count")?)?;
    let _list_len: usize = parse_num(next_token("cell list length")?)?;
    let mut hexes = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        let (line, tok) = next_token("cell size")?;
        let size: usize = parse_num((line, tok))?;
        if size != 8 {
            return Err(parse_err(line, format!("cell has {size} nodes, expected 8")));
        }
        let mut hex = [0usize; 8];
        for corner in &mut hex {
            *corner = parse_num(next_token("corner index")?)?;
        }
        hexes.push(hex);
    }

    expect_keyword(next_token("CELL_TYPES")?, "CELL_TYPES")?;
    let n_types: usize = parse_num(next_token("cell type count")?)?;
    if n_types != n_cells {
        return Err(parse_err(0, format!("{n_types} cell types for {n_cells} cells")));
    }
    for _ in 0..n_types {
        let ty: i64 = parse_num(next_token("cell type")?)?;
        if ty != 12 {
            return Err(MeshError::UnsupportedCellType(ty));
        }
    }

    HexMesh::new(points, hexes)
}

/// Formats a mesh as legacy ASCII VTK text.
pub fn format_vtk(mesh: &HexMesh) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("hexahedral mesh\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");

    let n = mesh.vertex_count();
    let _ = writeln!(out, "POINTS {n} double");
    for p in mesh.points() {
        // 17 significant digits: enough for exact f64 round-trips.
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }

    let h = mesh.hex_count();
    let _ = writeln!(out, "CELLS {h} {}", 9 * h);
    for hex in mesh.hexes() {
        let _ = writeln!(
            out,
            "8 {} {} {} {} {} {} {} {}",
            hex[0], hex[1], hex[2], hex[3], hex[4], hex[5], hex[6], hex[7]
        );
    }

    let _ = writeln!(out, "CELL_TYPES {h}");
    for _ in 0..h {
        out.push_str("12\n");
    }
    out
}

fn parse_err(line: usize, message: String) -> MeshError {
    MeshError::Parse { line, message }
}
