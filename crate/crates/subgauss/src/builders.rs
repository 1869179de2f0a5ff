//! Pre-fractal test graphs with known volume-growth and walk dimensions:
//! the Sierpinski gasket (df = log3/log2, dw = log5/log2), integer-lattice
//! boxes (the Gaussian control case) and the Vicsek cross (a tree with
//! df < dw, the strongly recurrent case). All edges have unit conductance
//! and unit length; builders tag their truncation boundary so scaling fits
//! can keep away from it.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{MeasureKind, WeightedGraph};

const SIERPINSKI_MAX_LEVEL: u32 = 8;
const VICSEK_MAX_LEVEL: u32 = 6;
const LATTICE_MAX_VERTICES: usize = 10_000;

type Coord = (i64, i64);

fn graph_from_coords(
    coords: BTreeSet<Coord>,
    edges: BTreeSet<(Coord, Coord)>,
    to_xy: impl Fn(Coord) -> (f64, f64),
    boundary: &[Coord],
    measure: MeasureKind,
) -> Result<WeightedGraph> {
    let ids: BTreeMap<Coord, usize> = coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let edge_list: Vec<(usize, usize, f64)> = edges
        .iter()
        .map(|&(a, b)| (ids[&a], ids[&b], 1.0))
        .collect();
    let xy: Vec<(f64, f64)> = coords.iter().map(|&c| to_xy(c)).collect();
    let n = ids.len();
    let mut g = WeightedGraph::new(n, &edge_list, measure)?;
    // keep coordinates for plotting and debugging
    let mu = g.mu_values().to_vec();
    g = WeightedGraph::with_measures(n, &edge_list, mu, Some(xy))?;
    let b: Vec<usize> = boundary.iter().map(|c| ids[c]).collect();
    g.set_boundary(&b);
    Ok(g)
}

/// Level-n Sierpinski gasket graph. Vertices live on the triangular lattice
/// `(i,j) -> i*e1 + j*e2` with `e1 = (1,0)`, `e2 = (1/2, sqrt(3)/2)`; the
/// corners of the outer triangle are `(0,0)`, `(2^n,0)` and `(0,2^n)` and
/// are tagged as the boundary. Vertex count is `3(3^n+1)/2`, edge count
/// `3^{n+1}`.
pub fn build_sierpinski(level: u32, measure: MeasureKind) -> Result<WeightedGraph> {
    if level > SIERPINSKI_MAX_LEVEL {
        return Err(Error::Configuration(format!(
            "sierpinski level must be in [0, {SIERPINSKI_MAX_LEVEL}], got {level}"
        )));
    }
    let mut edges: BTreeSet<(Coord, Coord)> = BTreeSet::new();
    let base = [((0, 0), (1, 0)), ((0, 0), (0, 1)), ((1, 0), (0, 1))];
    for e in base {
        edges.insert(e);
    }
    for k in 0..level {
        let shift = 1i64 << k;
        let mut next = BTreeSet::new();
        for &(a, b) in &edges {
            for &(dx, dy) in &[(0, 0), (shift, 0), (0, shift)] {
                next.insert(((a.0 + dx, a.1 + dy), (b.0 + dx, b.1 + dy)));
            }
        }
        edges = next;
    }
    let mut coords = BTreeSet::new();
    for &(a, b) in &edges {
        coords.insert(a);
        coords.insert(b);
    }
    let side = 1i64 << level;
    let corners = [(0, 0), (side, 0), (0, side)];
    graph_from_coords(
        coords,
        edges,
        |(i, j)| (i as f64 + 0.5 * j as f64, j as f64 * 3f64.sqrt() / 2.0),
        &corners,
        measure,
    )
}

/// Box in the integer lattice with unit conductances. `side^dim` is capped
/// at 10^4. The faces of the box are tagged as the boundary.
pub fn build_lattice(dim: u32, side: usize, measure: MeasureKind) -> Result<WeightedGraph> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Configuration(format!(
            "lattice dimension must be 1, 2 or 3, got {dim}"
        )));
    }
    if side < 2 {
        return Err(Error::Configuration(format!(
            "lattice side must be at least 2, got {side}"
        )));
    }
    let n = side.pow(dim);
    if n > LATTICE_MAX_VERTICES {
        return Err(Error::Configuration(format!(
            "lattice has {n} vertices, cap is {LATTICE_MAX_VERTICES}"
        )));
    }
    let dims = dim as usize;
    let stride = |axis: usize| side.pow(axis as u32);
    let coord = |id: usize, axis: usize| (id / stride(axis)) % side;
    let mut edges = Vec::new();
    for id in 0..n {
        for axis in 0..dims {
            if coord(id, axis) + 1 < side {
                edges.push((id, id + stride(axis), 1.0));
            }
        }
    }
    let coords: Option<Vec<(f64, f64)>> = match dim {
        1 => Some((0..n).map(|i| (i as f64, 0.0)).collect()),
        2 => Some(
            (0..n)
                .map(|i| (coord(i, 0) as f64, coord(i, 1) as f64))
                .collect(),
        ),
        _ => None,
    };
    let mut g = WeightedGraph::new(n, &edges, measure)?;
    if let Some(xy) = coords {
        let mu = g.mu_values().to_vec();
        g = WeightedGraph::with_measures(n, &edges, mu, Some(xy))?;
    }
    let boundary: Vec<usize> = (0..n)
        .filter(|&id| (0..dims).any(|a| coord(id, a) == 0 || coord(id, a) == side - 1))
        .collect();
    g.set_boundary(&boundary);
    Ok(g)
}

/// Level-n Vicsek cross graph: five copies of the previous level glued at
/// the four diagonal corner vertices. The result is a tree spanning
/// `[-3^n, 3^n]^2` with `4*5^n + 1` vertices; the four extreme corners are
/// the boundary.
pub fn build_vicsek(level: u32, measure: MeasureKind) -> Result<WeightedGraph> {
    if level > VICSEK_MAX_LEVEL {
        return Err(Error::Configuration(format!(
            "vicsek level must be in [0, {VICSEK_MAX_LEVEL}], got {level}"
        )));
    }
    let mut edges: BTreeSet<(Coord, Coord)> = BTreeSet::new();
    for corner in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
        edges.insert(((0, 0), corner));
    }
    for k in 0..level {
        let w = 3i64.pow(k);
        let mut next = BTreeSet::new();
        for &(a, b) in &edges {
            for &(dx, dy) in &[(0, 0), (2 * w, 2 * w), (2 * w, -2 * w), (-2 * w, 2 * w), (-2 * w, -2 * w)] {
                next.insert(((a.0 + dx, a.1 + dy), (b.0 + dx, b.1 + dy)));
            }
        }
        edges = next;
    }
    let mut coords = BTreeSet::new();
    for &(a, b) in &edges {
        coords.insert(a);
        coords.insert(b);
    }
    let w = 3i64.pow(level);
    let corners = [(w, w), (w, -w), (-w, w), (-w, -w)];
    graph_from_coords(
        coords,
        edges,
        |(i, j)| (i as f64, j as f64),
        &corners,
        measure,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sierpinski_level_0_is_triangle() {
        let g = build_sierpinski(0, MeasureKind::RandomWalk).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn sierpinski_level_1_counts() {
        let g = build_sierpinski(1, MeasureKind::RandomWalk).unwrap();
        assert_eq!(g.vertex_count(), 6);
        assert_eq!(g.edge_count(), 9);
    }

    #[test]
    fn sierpinski_level_6_closed_form_count() {
        let g = build_sierpinski(6, MeasureKind::RandomWalk).unwrap();
        assert_eq!(g.vertex_count(), 3 * (3usize.pow(6) + 1) / 2);
        assert_eq!(g.vertex_count(), 1095);
        assert_eq!(g.edge_count(), 3usize.pow(7));
    }

    #[test]
    fn sierpinski_diameter_and_boundary() {
        let g = build_sierpinski(4, MeasureKind::RandomWalk).unwrap();
        assert_eq!(g.diameter(), 16);
        assert_eq!(g.boundary_vertices().len(), 3);
        // corners are 2^n apart
        let b = g.boundary_vertices();
        assert_eq!(g.distance(b[0], b[1]).unwrap(), 16);
    }

    #[test]
    fn sierpinski_level_cap() {
        assert!(matches!(
            build_sierpinski(9, MeasureKind::RandomWalk),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn lattice_dim1_side2_is_single_edge() {
        let g = build_lattice(1, 2, MeasureKind::Counting).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn lattice_dim2_side3_counts() {
        let g = build_lattice(2, 3, MeasureKind::Counting).unwrap();
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(g.edge_count(), 12);
    }

    #[test]
    fn lattice_size_cap() {
        assert!(matches!(
            build_lattice(2, 200, MeasureKind::Counting),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn lattice_boundary_is_faces() {
        let g = build_lattice(2, 5, MeasureKind::Counting).unwrap();
        assert_eq!(g.boundary_vertices().len(), 16);
        // the center is 2 steps from the boundary
        let center = 2 + 2 * 5;
        assert_eq!(g.distance_to_boundary(center), Some(2));
    }

    #[test]
    fn vicsek_level_0_is_cross_of_5() {
        let g = build_vicsek(0, MeasureKind::RandomWalk).unwrap();
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn vicsek_level_1_glued_copies() {
        let g = build_vicsek(1, MeasureKind::RandomWalk).unwrap();
        assert_eq!(g.vertex_count(), 21);
        assert_eq!(g.edge_count(), 20);
    }

    #[test]
    fn vicsek_counts_and_tree_structure() {
        for level in 0..4 {
            let g = build_vicsek(level, MeasureKind::RandomWalk).unwrap();
            assert_eq!(g.vertex_count(), 4 * 5usize.pow(level) + 1);
            assert_eq!(g.edge_count(), g.vertex_count() - 1);
        }
    }

    #[test]
    fn vicsek_level_cap() {
        assert!(matches!(
            build_vicsek(7, MeasureKind::RandomWalk),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn builders_satisfy_graph_invariants() {
        // connectivity and strict positivity are checked by the constructor;
        // getting a graph back is the invariant.
        build_sierpinski(3, MeasureKind::RandomWalk).unwrap();
        build_lattice(3, 5, MeasureKind::RandomWalk).unwrap();
        build_vicsek(2, MeasureKind::Counting).unwrap();
    }
}
