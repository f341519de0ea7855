//! Artifact writers: binary PGM for masks and maps, CSV tables and SVG contours.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::grid::{Grid, Mask};
use crate::norm::Vec2;
use crate::wind::RegionClass;

/// Binary PGM (P5) of per-cell grey levels, top row first.
pub fn pgm(nx: usize, ny: usize, level: impl Fn(usize, usize) -> u8) -> Vec<u8> {
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    out.reserve(nx * ny);
    for j in (0..ny).rev() {
        for i in 0..nx {
            out.push(level(i, j));
        }
    }
    out
}

pub fn mask_pgm(mask: &Mask) -> Vec<u8> {
    pgm(mask.nx(), mask.ny(), |i, j| if mask.get(i, j) { 255 } else { 0 })
}

/// Region map: mild 255, critical 160, strong 80, excluded 0.
pub fn region_pgm(grid: &Grid, regions: &[Option<RegionClass>]) -> Vec<u8> {
    pgm(grid.nx, grid.ny, |i, j| match regions[grid.index(i, j)] {
        Some(RegionClass::Mild) => 255,
        Some(RegionClass::Critical) => 160,
        Some(RegionClass::Strong) => 80,
        None => 0,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV with CRLF line endings and quoting where needed.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let line = |fields: Vec<String>| fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",") + "\r\n";
    out.push_str(&line(header.iter().map(|s| s.to_string()).collect()));
    for r in rows {
        out.push_str(&line(r.clone()));
    }
    out
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn svg_header(grid: &Grid) -> String {
    let (w, h) = (grid.x1() - grid.x0, grid.y1() - grid.y0);
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{} {} {} {}\">\n",
        fmt_num(grid.x0),
        fmt_num(grid.y0),
        fmt_num(w),
        fmt_num(h)
    )
}

/// Flips `y` so the picture is upright inside a viewBox equal to the domain box.
fn svg_point(grid: &Grid, p: Vec2) -> String {
    format!("{},{}", fmt_num(p.x), fmt_num(grid.y0 + grid.y1() - p.y))
}

/// Boundary loops of the union of occupied cells, as corner indices `(i, j)`.
///
/// Each loop keeps the occupied cells on its left, starts at its smallest vertex and has
/// collinear runs merged. Cells touching only at a corner are kept apart.
pub fn contour_loops(mask: &Mask) -> Vec<Vec<(usize, usize)>> {
    // Directed edges keyed by start corner.
    let mut edges: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    let occ = |i: isize, j: isize| mask.get_signed(i, j);
    for (i, j) in mask.iter() {
        let (ii, jj) = (i as isize, j as isize);
        if !occ(ii, jj - 1) {
            edges.entry((i, j)).or_default().push((i + 1, j));
        }
        if !occ(ii + 1, jj) {
            edges.entry((i + 1, j)).or_default().push((i + 1, j + 1));
        }
        if !occ(ii, jj + 1) {
            edges.entry((i + 1, j + 1)).or_default().push((i, j + 1));
        }
        if !occ(ii - 1, jj) {
            edges.entry((i, j + 1)).or_default().push((i, j));
        }
    }
    let mut loops = Vec::new();
    while let Some((&start, _)) = edges.iter().next() {
        let mut path = vec![start];
        let mut prev = start;
        let mut cur = take_edge(&mut edges, start, None);
        while cur != start {
            path.push(cur);
            let dir = (cur.0 as isize - prev.0 as isize, cur.1 as isize - prev.1 as isize);
            prev = cur;
            cur = take_edge(&mut edges, cur, Some(dir));
        }
        loops.push(simplify(path));
    }
    loops.sort();
    loops
}

/// Removes the edge leaving `at`; at a saddle, turns left to stay around the same cell.
fn take_edge(
    edges: &mut BTreeMap<(usize, usize), Vec<(usize, usize)>>,
    at: (usize, usize),
    dir: Option<(isize, isize)>,
) -> (usize, usize) {
    let outs = edges.get_mut(&at).expect("boundary edges form closed loops");
    let k = match (outs.len(), dir) {
        (1, _) | (_, None) => 0,
        (_, Some((dx, dy))) => {
            let left = (-dy, dx);
            outs.iter().position(|e| (e.0 as isize - at.0 as isize, e.1 as isize - at.1 as isize) == left).unwrap_or(0)
        }
    };
    let next = outs.remove(k);
    if outs.is_empty() {
        edges.remove(&at);
    }
    next
}

fn simplify(path: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    let n = path.len();
    let d = |a: (usize, usize), b: (usize, usize)| (b.0 as isize - a.0 as isize, b.1 as isize - a.1 as isize);
    let corners: Vec<(usize, usize)> = (0..n)
        .filter(|&k| d(path[(k + n - 1) % n], path[k]) != d(path[k], path[(k + 1) % n]))
        .map(|k| path[k])
        .collect();
    let m = corners.iter().enumerate().min_by_key(|(_, p)| **p).map(|(k, _)| k).unwrap_or(0);
    corners[m..].iter().chain(&corners[..m]).copied().collect()
}

/// SVG document with one closed path per boundary component of the mask.
pub fn svg_contour(mask: &Mask, grid: &Grid) -> String {
    let mut out = svg_header(grid);
    let loops = contour_loops(mask);
    if loops.is_empty() {
        out.push_str("<!-- empty mask -->\n");
    }
    for lp in loops {
        let mut d = String::new();
        for (k, (i, j)) in lp.iter().enumerate() {
            let p = Vec2::new(grid.x0 + *i as f64 * grid.hx, grid.y0 + *j as f64 * grid.hy);
            let _ = write!(d, "{}{}", if k == 0 { "M" } else { " L" }, svg_point(grid, p));
        }
        d.push_str(" Z");
        let _ = writeln!(
            out,
            "<path d=\"{d}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"/>",
            fmt_num(grid.h() * 0.5)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// SVG document with one polyline.
pub fn svg_polyline(grid: &Grid, pts: &[Vec2]) -> String {
    let mut out = svg_header(grid);
    let coords: Vec<String> = pts.iter().map(|p| svg_point(grid, *p)).collect();
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"/>",
        coords.join(" "),
        fmt_num(grid.h() * 0.5)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_square() {
        let mut m = Mask::new(4, 4);
        m.set(1, 2, true);
        let loops = contour_loops(&m);
        assert_eq!(loops, vec![vec![(1, 2), (2, 2), (2, 3), (1, 3)]]);
        let g = Grid::new((0.0, 4.0), (0.0, 4.0), 4, 4);
        let svg = svg_contour(&m, &g);
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains("M1,2 L2,2 L2,1 L1,1 Z"), "{svg}");
    }

    #[test]
    fn checkerboard_cells_stay_separate() {
        let mut m = Mask::new(4, 4);
        m.set(1, 1, true);
        m.set(2, 2, true);
        let loops = contour_loops(&m);
        assert_eq!(loops.len(), 2);
        assert!(loops.iter().all(|l| l.len() == 4));
    }

    #[test]
    fn disk_and_annulus() {
        let g = Grid::new((-1.0, 1.0), (-1.0, 1.0), 40, 40);
        let mut disk = Mask::new(40, 40);
        let mut ring = Mask::new(40, 40);
        for k in 0..g.len() {
            let r = g.center_of(k).norm();
            disk.set_index(k, r <= 0.8);
            ring.set_index(k, (0.4..=0.8).contains(&r));
        }
        assert_eq!(contour_loops(&disk).len(), 1);
        assert_eq!(contour_loops(&ring).len(), 2);
    }

    #[test]
    fn empty_mask_comment() {
        let g = Grid::new((0.0, 1.0), (0.0, 1.0), 16, 16);
        let svg = svg_contour(&Mask::new(16, 16), &g);
        assert!(svg.contains("<!--") && !svg.contains("<path"));
        assert!(svg.contains("viewBox=\"0 0 1 1\""));
    }

    #[test]
    fn pgm_layout() {
        let mut m = Mask::new(3, 2);
        m.set(0, 1, true);
        let bytes = mask_pgm(&m);
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[255, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn csv_quoting() {
        let s = csv(&["a", "b"], &[vec!["1".into(), "x,\"y\"".into()]]);
        assert_eq!(s, "a,b\r\n1,\"x,\"\"y\"\"\"\r\n");
    }
}
