//! Legacy ASCII VTK snapshots.
//!
//! Fields are sampled at the vertices of the once-refined mesh, which are
//! exactly the P2 nodes. Points on the periodic seam are duplicated so the
//! unit square renders without wrap-around cells.

use std::io::{self, Write};

use crate::fem::FeFunction;
use crate::fem::VectorFeFunction;

/// Triangles of the `l × l` visualization grid, with `l + 1` points per row.
fn cells(l: usize) -> Vec<[usize; 3]> {
    let id = |i: usize, j: usize| j * (l + 1) + i;
    let mut out = Vec::with_capacity(2 * l * l);
    for j in 0..l {
        for i in 0..l {
            out.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            out.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    out
}

/// Write `phi`, `mu`, `pressure` and `velocity` on the refined grid of the
/// fields' mesh.
pub fn write_snapshot(
    w: &mut impl Write,
    title: &str,
    phi: &FeFunction,
    mu: &FeFunction,
    pressure: &FeFunction,
    velocity: &VectorFeFunction,
) -> io::Result<()> {
    let l = 2 * phi.space().mesh().n();
    let points: Vec<[f64; 2]> = (0..=l)
        .flat_map(|j| (0..=l).map(move |i| [i as f64 / l as f64, j as f64 / l as f64]))
        .collect();
    // evaluate inside the periodic cell; the seam copies share values
    let wrap = |x: [f64; 2]| x.map(|c| if c >= 1.0 { c - 1.0 } else { c });

    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", points.len())?;
    for p in &points {
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    let tris = cells(l);
    writeln!(w, "CELLS {} {}", tris.len(), 4 * tris.len())?;
    for t in &tris {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {}", tris.len())?;
    for _ in &tris {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", points.len())?;
    for (name, f) in [("phi", phi), ("mu", mu), ("pressure", pressure)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for p in &points {
            writeln!(w, "{}", f.evaluate(wrap(*p)))?;
        }
    }
    writeln!(w, "VECTORS velocity double")?;
    for p in &points {
        let v = velocity.evaluate(wrap(*p));
        writeln!(w, "{} {} 0", v[0], v[1])?;
    }
    Ok(())
}
