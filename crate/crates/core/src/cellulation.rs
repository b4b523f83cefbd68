//! Regular cellulations as graded face posets with explicit ordered,
//! signed boundary incidences. Cells are identified by ids, never by vertex
//! sets: the Heffter cellulations are not strongly regular, so two distinct
//! cells may share almost all of their vertices.

use crate::error::{AssemblyError, ComplexError};
use crate::simplicial::FVector;
use std::collections::{BTreeMap, BTreeSet};

/// One cell of dimension >= 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    /// Ordered boundary: ((d-1)-cell id, orientation sign).
    pub boundary: Vec<(usize, i8)>,
    /// For 2-cells, the induced cyclic vertex sequence.
    pub cycle: Option<Vec<usize>>,
    /// Provenance tag (e.g. "octahedron", "prism", "boundary").
    pub tag: Option<String>,
}

/// Graded face poset of a regular cellulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cellulation {
    dim: usize,
    labels: Vec<String>,
    /// cells[d - 1] holds the d-cells, d = 1..=dim.
    cells: Vec<Vec<Cell>>,
}

impl Cellulation {
    pub fn new(dim: usize, labels: Vec<String>) -> Self {
        Cellulation {
            dim,
            labels,
            cells: vec![Vec::new(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn vertex_by_label(&self, token: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == token)
    }

    pub fn cells(&self, d: usize) -> &[Cell] {
        assert!(d >= 1 && d <= self.dim);
        &self.cells[d - 1]
    }

    /// Adds an edge; returns its id. Boundary is (head, +1), (tail, -1).
    pub fn add_edge(&mut self, tail: usize, head: usize) -> usize {
        assert_ne!(tail, head, "1-cell with identified endpoints");
        self.cells[0].push(Cell {
            boundary: vec![(head, 1), (tail, -1)],
            cycle: None,
            tag: None,
        });
        self.cells[0].len() - 1
    }

    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        let c = &self.cells[0][e];
        let head = c.boundary.iter().find(|(_, s)| *s > 0).unwrap().0;
        let tail = c.boundary.iter().find(|(_, s)| *s < 0).unwrap().0;
        (tail, head)
    }

    /// Looks up edges by unordered endpoints. Regular surfaces here have at
    /// most one edge per vertex pair.
    pub fn edge_lookup(&self) -> BTreeMap<(usize, usize), usize> {
        let mut map = BTreeMap::new();
        for (i, _) in self.cells[0].iter().enumerate() {
            let (t, h) = self.edge_endpoints(i);
            let key = (t.min(h), t.max(h));
            map.insert(key, i);
        }
        map
    }

    /// Adds a 2-cell from its cyclic vertex sequence, resolving edges through
    /// the lookup map. Returns the cell id.
    pub fn add_polygon(
        &mut self,
        cycle: &[usize],
        edges: &BTreeMap<(usize, usize), usize>,
        tag: Option<String>,
    ) -> usize {
        let mut boundary = Vec::with_capacity(cycle.len());
        for i in 0..cycle.len() {
            let a = cycle[i];
            let b = cycle[(i + 1) % cycle.len()];
            let e = edges[&(a.min(b), a.max(b))];
            let (tail, _head) = self.edge_endpoints(e);
            boundary.push((e, if tail == a { 1 } else { -1 }));
        }
        self.cells[1].push(Cell {
            boundary,
            cycle: Some(cycle.to_vec()),
            tag,
        });
        self.cells[1].len() - 1
    }

    /// Adds a d-cell (d >= 3) from an unsigned list of (d-1)-cells; the
    /// orientation signs are derived by coherence propagation over shared
    /// ridges, normalized so the first listed cell gets +1.
    pub fn add_cell_oriented(
        &mut self,
        d: usize,
        faces: &[usize],
        tag: Option<String>,
    ) -> Result<usize, ComplexError> {
        assert!(d >= 3 && d <= self.dim);
        let signs = self.orient_closed_shell(d - 1, faces)?;
        let boundary = faces.iter().copied().zip(signs).collect();
        self.cells[d - 1].push(Cell {
            boundary,
            cycle: None,
            tag,
        });
        Ok(self.cells[d - 1].len() - 1)
    }

    /// Appends a prebuilt cell at dimension d; the caller is responsible for
    /// id consistency (validate() still checks everything).
    pub fn push_cell_raw(&mut self, d: usize, cell: Cell) -> usize {
        self.cells[d - 1].push(cell);
        self.cells[d - 1].len() - 1
    }

    /// Signs making the listed (d-1)-cells a closed cycle (every shared
    /// (d-2)-cell traversed once in each direction).
    fn orient_closed_shell(&self, d: usize, faces: &[usize]) -> Result<Vec<i8>, ComplexError> {
        // Sub-face incidence among the listed faces.
        let mut by_subface: BTreeMap<usize, Vec<(usize, i8)>> = BTreeMap::new();
        for (k, &f) in faces.iter().enumerate() {
            for &(sub, s) in &self.cells[d - 1][f].boundary {
                by_subface.entry(sub).or_default().push((k, s));
            }
        }
        for (sub, inc) in &by_subface {
            if inc.len() != 2 {
                return Err(ComplexError::Malformed(format!(
                    "shell sub-face {sub} lies in {} of the listed faces",
                    inc.len()
                )));
            }
        }
        let mut sign = vec![0i8; faces.len()];
        sign[0] = 1;
        let mut stack = vec![0usize];
        while let Some(k) = stack.pop() {
            for &(sub, s) in &self.cells[d - 1][faces[k]].boundary {
                let inc = &by_subface[&sub];
                let (other, so) = if inc[0].0 == k { inc[1] } else { inc[0] };
                if other == k {
                    continue;
                }
                // sign[k] * s + sign[other] * so = 0
                let want = -sign[k] * s * so;
                if sign[other] == 0 {
                    sign[other] = want;
                    stack.push(other);
                } else if sign[other] != want {
                    return Err(ComplexError::Malformed(
                        "shell is not coherently orientable".into(),
                    ));
                }
            }
        }
        if sign.iter().any(|&s| s == 0) {
            return Err(ComplexError::Malformed("shell is not connected".into()));
        }
        Ok(sign)
    }

    pub fn f_vector(&self) -> FVector {
        let mut counts = vec![self.labels.len()];
        counts.extend(self.cells.iter().map(|c| c.len()));
        FVector(counts)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.f_vector().euler_characteristic()
    }

    /// Vertex set of a cell (d >= 1) via boundary closure.
    pub fn cell_vertices(&self, d: usize, id: usize) -> BTreeSet<usize> {
        if let Some(cycle) = &self.cells[d - 1][id].cycle {
            return cycle.iter().copied().collect();
        }
        if d == 1 {
            let (t, h) = self.edge_endpoints(id);
            return [t, h].into_iter().collect();
        }
        let mut out = BTreeSet::new();
        for &(sub, _) in &self.cells[d - 1][id].boundary {
            out.extend(self.cell_vertices(d - 1, sub));
        }
        out
    }

    /// All faces (dimension, id) strictly below a cell, plus the cell itself.
    pub fn cell_closure(&self, d: usize, id: usize) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(d, id)];
        while let Some((dd, ii)) = stack.pop() {
            if !out.insert((dd, ii)) {
                continue;
            }
            if dd == 0 {
                continue;
            }
            for &(sub, _) in &self.cells[dd - 1][ii].boundary {
                stack.push((if dd == 1 { 0 } else { dd - 1 }, sub));
            }
        }
        out
    }

    /// Full well-formedness check: resolvable boundaries, distinct edge
    /// endpoints, boundary-of-boundary cancellation, 2-cell cycles consistent
    /// with their signed edge chains.
    pub fn validate(&self) -> Result<(), ComplexError> {
        for (d0, layer) in self.cells.iter().enumerate() {
            let d = d0 + 1;
            let below = if d == 1 {
                self.labels.len()
            } else {
                self.cells[d - 2].len()
            };
            for (id, cell) in layer.iter().enumerate() {
                for &(sub, s) in &cell.boundary {
                    if sub >= below || (s != 1 && s != -1) {
                        return Err(ComplexError::Malformed(format!(
                            "cell ({d},{id}) has unresolvable boundary entry"
                        )));
                    }
                }
                if d >= 2 {
                    // Signed boundary of the boundary must cancel.
                    let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
                    for &(sub, s) in &cell.boundary {
                        for &(sub2, s2) in &self.cells[d - 2][sub].boundary {
                            *acc.entry(sub2).or_default() += (s as i64) * (s2 as i64);
                        }
                    }
                    if acc.values().any(|&v| v != 0) {
                        return Err(ComplexError::Malformed(format!(
                            "boundary of boundary of cell ({d},{id}) does not cancel"
                        )));
                    }
                }
                if d == 2 {
                    let cycle = cell.cycle.as_ref().ok_or_else(|| {
                        ComplexError::Malformed(format!("2-cell {id} lacks its vertex cycle"))
                    })?;
                    if cycle.len() != cell.boundary.len() {
                        return Err(ComplexError::Malformed(format!(
                            "2-cell {id}: cycle and boundary lengths differ"
                        )));
                    }
                    for (i, &(e, s)) in cell.boundary.iter().enumerate() {
                        let a = cycle[i];
                        let b = cycle[(i + 1) % cycle.len()];
                        let (t, h) = self.edge_endpoints(e);
                        let ok = if s == 1 { (t, h) == (a, b) } else { (h, t) == (a, b) };
                        if !ok {
                            return Err(ComplexError::Malformed(format!(
                                "2-cell {id}: cycle disagrees with boundary edge {e}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// For a top-dimensional cellulation: ridge id -> ids of facets
    /// containing it.
    pub fn ridge_facets(&self) -> BTreeMap<usize, Vec<usize>> {
        let d = self.dim;
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (id, cell) in self.cells[d - 1].iter().enumerate() {
            for &(r, _) in &cell.boundary {
                map.entry(r).or_default().push(id);
            }
        }
        map
    }

    /// Count of ridges lying in exactly two facets.
    pub fn interior_ridge_count(&self) -> usize {
        self.ridge_facets().values().filter(|v| v.len() == 2).count()
    }

    /// Splits ridges into (interior, boundary) id lists; errors when a ridge
    /// lies in more than two or zero facets.
    pub fn classify_ridges(&self) -> Result<(Vec<usize>, Vec<usize>), AssemblyError> {
        let map = self.ridge_facets();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let n_ridges = self.cells[self.dim - 2].len();
        for r in 0..n_ridges {
            match map.get(&r).map(|v| v.len()).unwrap_or(0) {
                1 => boundary.push(r),
                2 => interior.push(r),
                k => {
                    return Err(AssemblyError::UnclassifiableRidge(r.to_string(), k));
                }
            }
        }
        Ok((interior, boundary))
    }

    /// Strong regularity: the vertex-set intersection of any two closed
    /// cells is empty or the vertex set of a single common face.
    pub fn is_strongly_regular(&self) -> bool {
        // Collect all cells as (dim, id), including vertices.
        let mut all: Vec<(usize, usize)> = (0..self.labels.len()).map(|v| (0, v)).collect();
        for d in 1..=self.dim {
            all.extend((0..self.cells[d - 1].len()).map(|i| (d, i)));
        }
        let verts: BTreeMap<(usize, usize), BTreeSet<usize>> = all
            .iter()
            .map(|&(d, i)| {
                let vs = if d == 0 {
                    [i].into_iter().collect()
                } else {
                    self.cell_vertices(d, i)
                };
                ((d, i), vs)
            })
            .collect();
        let closures: BTreeMap<(usize, usize), BTreeSet<(usize, usize)>> = all
            .iter()
            .map(|&(d, i)| {
                let cl = if d == 0 {
                    [(0, i)].into_iter().collect()
                } else {
                    self.cell_closure(d, i)
                };
                ((d, i), cl)
            })
            .collect();
        for (i, a) in all.iter().enumerate() {
            for b in all.iter().skip(i + 1) {
                let inter: BTreeSet<usize> =
                    verts[a].intersection(&verts[b]).copied().collect();
                if inter.is_empty() {
                    continue;
                }
                let common: Vec<&(usize, usize)> =
                    closures[a].intersection(&closures[b]).collect();
                let matched = common.iter().any(|f| verts[f] == inter);
                if !matched {
                    return false;
                }
            }
        }
        true
    }

    /// Coherent orientability of a surface cellulation, by sign propagation
    /// over shared edges. Every edge must lie in exactly two polygons.
    pub fn orient_surface(&self) -> Result<Vec<i8>, ComplexError> {
        assert_eq!(self.dim, 2);
        let faces: Vec<usize> = (0..self.cells[1].len()).collect();
        self.orient_closed_shell(2, &faces)
    }
}

/// Views a triangulated surface as a cellulation (edges and triangles with
/// their cycles), so poset-level checks like strong regularity apply.
pub fn surface_to_cellulation(c: &crate::simplicial::SimplicialComplex) -> Cellulation {
    let labels: Vec<String> = c.labels().to_vec();
    let mut out = Cellulation::new(2, labels);
    let mut edges = BTreeMap::new();
    for e in c.faces(1) {
        let id = out.add_edge(e[0], e[1]);
        edges.insert((e[0], e[1]), id);
    }
    for f in c.facets() {
        out.add_polygon(f, &edges, None);
    }
    out.validate().expect("surface complex is well formed");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Boundary complex of the cube as a 2-dim cellulation.
    pub fn cube_boundary() -> Cellulation {
        let labels = (0..8).map(|i| format!("{i}")).collect();
        let mut c = Cellulation::new(2, labels);
        // vertices = bit-coded corners (x, y, z)
        let mut edges = BTreeMap::new();
        for a in 0..8usize {
            for b in a + 1..8 {
                if (a ^ b).count_ones() == 1 {
                    let e = c.add_edge(a, b);
                    edges.insert((a, b), e);
                }
            }
        }
        // six faces, as cyclic sequences
        let quads: [[usize; 4]; 6] = [
            [0, 1, 3, 2],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 3, 7, 6],
            [0, 2, 6, 4],
            [1, 3, 7, 5],
        ];
        for q in quads {
            c.add_polygon(&q, &edges, None);
        }
        c
    }

    #[test]
    fn cube_is_valid_and_strongly_regular() {
        let c = cube_boundary();
        c.validate().unwrap();
        assert_eq!(c.f_vector(), FVector(vec![8, 12, 6]));
        assert_eq!(c.euler_characteristic(), 2);
        assert!(c.is_strongly_regular());
        assert!(c.orient_surface().is_ok());
    }

    #[test]
    fn boundary_of_boundary_violation_is_caught() {
        let labels = (0..3).map(|i| format!("{i}")).collect();
        let mut c = Cellulation::new(2, labels);
        let mut edges = BTreeMap::new();
        for (a, b) in [(0usize, 1usize), (1, 2), (0, 2)] {
            let e = c.add_edge(a, b);
            edges.insert((a, b), e);
        }
        let good = c.clone();
        let mut bad = c.clone();
        // Deliberately corrupt one sign.
        bad.cells[1].push(Cell {
            boundary: vec![(0, 1), (1, 1), (2, 1)],
            cycle: Some(vec![0, 1, 2]),
            tag: None,
        });
        assert!(bad.validate().is_err());
        let mut ok = good;
        ok.add_polygon(&[0, 1, 2], &edges, None);
        ok.validate().unwrap();
    }
}
