//! The 3-dimensional side of the construction: prism stacks over a surface
//! cellulation, boundary refinement to the curve-carrying triangulation,
//! the E-construction (one new vertex coned into each facet, pyramid pairs
//! over interior ridges merged to bipyramids), bipyramid fans, triangulated
//! handlebodies, and the final glued sphere cellulation with its registry
//! of octahedral cells.

use crate::cellulation::{Cell, Cellulation};
use crate::error::AssemblyError;
use crate::heffter::{heffter_cellulation, heffter_surface, HeffterSpec};
use crate::simplicial::SimplicialComplex;
use crate::surface::{
    annulus_between, cut_components, double_curves, homology_basis, reroute_disjoint,
    symplectic_basis, Curve, DoubledSystem, TriangleTags,
};
use std::collections::{BTreeMap, BTreeSet};

fn stamp(label: &str, t: usize) -> String {
    format!("{label}@{t}")
}

/// Product cellulation of a closed surface with m stacked intervals.
#[derive(Clone, Debug)]
pub struct PrismStack {
    pub cellulation: Cellulation,
    pub m: usize,
    pub base_f: crate::simplicial::FVector,
}

/// S x I_m as a 3-dimensional cellulation: layer copies of the base surface,
/// vertical quadrilaterals over base edges, and prisms over base 2-cells.
pub fn prism_stack(base: &Cellulation, m: usize) -> PrismStack {
    assert!(m >= 1);
    assert_eq!(base.dim(), 2);
    let nv = base.n_vertices();
    let labels: Vec<String> = (0..=m)
        .flat_map(|t| base.labels().iter().map(move |l| stamp(l, t)))
        .collect();
    let mut c = Cellulation::new(3, labels);
    let vid = |v: usize, t: usize| t * nv + v;

    let base_edges: Vec<(usize, usize)> = (0..base.cells(1).len())
        .map(|e| base.edge_endpoints(e))
        .collect();
    let mut lookup: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in 0..=m {
        for &(u, v) in base_edges.iter() {
            let (a, b) = (vid(u, t), vid(v, t));
            let id = c.add_edge(a, b);
            lookup.insert((a.min(b), a.max(b)), id);
        }
    }
    for t in 0..m {
        for v in 0..nv {
            let id = c.add_edge(vid(v, t), vid(v, t + 1));
            lookup.insert((vid(v, t), vid(v, t + 1)), id);
        }
    }

    let mut h_poly = BTreeMap::new();
    for t in 0..=m {
        for (p, cell) in base.cells(2).iter().enumerate() {
            let cyc: Vec<usize> = cell
                .cycle
                .as_ref()
                .expect("base 2-cells carry cycles")
                .iter()
                .map(|&v| vid(v, t))
                .collect();
            let tag = cell.tag.clone().unwrap_or_else(|| p.to_string());
            let id = c.add_polygon(&cyc, &lookup, Some(format!("surf:{tag}@{t}")));
            h_poly.insert((t, p), id);
        }
    }
    let mut wall = BTreeMap::new();
    for t in 0..m {
        for (e, &(u, v)) in base_edges.iter().enumerate() {
            let cyc = [vid(u, t), vid(v, t), vid(v, t + 1), vid(u, t + 1)];
            let id = c.add_polygon(&cyc, &lookup, Some(format!("wall:{e}@{t}")));
            wall.insert((t, e), id);
        }
    }

    for t in 0..m {
        for (p, cell) in base.cells(2).iter().enumerate() {
            let mut faces = vec![h_poly[&(t, p)], h_poly[&(t + 1, p)]];
            for &(e, _) in &cell.boundary {
                faces.push(wall[&(t, e)]);
            }
            let tag = cell.tag.clone().unwrap_or_else(|| p.to_string());
            c.add_cell_oriented(3, &faces, Some(format!("prism:{tag}@{t}")))
                .expect("prism shell is a 2-sphere");
        }
    }
    c.validate().expect("product cellulation is well formed");
    PrismStack {
        cellulation: c,
        m,
        base_f: base.f_vector(),
    }
}

/// The stack with its two boundary surface copies refined to T' (triangles
/// tagged by base polygon). Interior surface copies stay coarse; the
/// vertical walls stay quadrilaterals because T' never subdivides base
/// edges.
pub fn refine_boundary(
    base: &Cellulation,
    m: usize,
    tprime: &SimplicialComplex,
    tags: &TriangleTags,
) -> Result<Cellulation, AssemblyError> {
    assert!(m >= 1);
    let nv = base.n_vertices();

    let poly_tokens: Vec<String> = base
        .cells(2)
        .iter()
        .enumerate()
        .map(|(p, cell)| cell.tag.clone().unwrap_or_else(|| p.to_string()))
        .collect();
    let token_set: BTreeSet<&String> = poly_tokens.iter().collect();
    for f in tprime.facets() {
        let tag = tags
            .get(f)
            .ok_or_else(|| AssemblyError::NotARefinement(format!("untagged triangle {f:?}")))?;
        if !token_set.contains(tag) {
            return Err(AssemblyError::NotARefinement(format!(
                "triangle tagged {tag:?} matches no base polygon"
            )));
        }
    }
    let t_of_label: BTreeMap<&str, usize> = tprime
        .labels()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let base_vid_in_t: Vec<usize> = (0..nv)
        .map(|v| {
            t_of_label
                .get(base.labels()[v].as_str())
                .copied()
                .ok_or_else(|| {
                    AssemblyError::NotARefinement(format!(
                        "base vertex {} missing from T'",
                        base.labels()[v]
                    ))
                })
        })
        .collect::<Result<_, _>>()?;
    // Each base polygon edge lies in exactly one triangle of its own tag.
    for (p, cell) in base.cells(2).iter().enumerate() {
        let cyc = cell.cycle.as_ref().unwrap();
        let token = &poly_tokens[p];
        for i in 0..cyc.len() {
            let (u, v) = (cyc[i], cyc[(i + 1) % cyc.len()]);
            let (tu, tv) = (base_vid_in_t[u], base_vid_in_t[v]);
            let count = tprime
                .facets()
                .iter()
                .filter(|f| {
                    f.binary_search(&tu).is_ok()
                        && f.binary_search(&tv).is_ok()
                        && tags.get(*f) == Some(token)
                })
                .count();
            if count != 1 {
                return Err(AssemblyError::NotARefinement(format!(
                    "base edge ({},{}) lies in {count} triangles tagged {token}; \
                     a T'-face may not cross a base-face boundary",
                    base.labels()[u],
                    base.labels()[v]
                )));
            }
        }
    }

    // Vertices: full T' on layers 0 and m, coarse base on interior layers.
    let mut labels: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    {
        let mut push = |l: String| {
            let id = labels.len();
            labels.push(l.clone());
            index.insert(l, id);
        };
        for l in tprime.labels() {
            push(stamp(l, 0));
        }
        for t in 1..m {
            for l in base.labels() {
                push(stamp(l, t));
            }
        }
        for l in tprime.labels() {
            push(stamp(l, m));
        }
    }
    let mut c = Cellulation::new(3, labels);
    let at = |l: &str, t: usize| index[&stamp(l, t)];

    let mut lookup: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    {
        let mut add_edge = |c: &mut Cellulation, a: usize, b: usize| {
            let id = c.add_edge(a, b);
            lookup.insert((a.min(b), a.max(b)), id);
        };
        for t in [0, m] {
            for e in tprime.faces(1) {
                add_edge(&mut c, at(tprime.label(e[0]), t), at(tprime.label(e[1]), t));
            }
        }
        let base_edges: Vec<(usize, usize)> = (0..base.cells(1).len())
            .map(|e| base.edge_endpoints(e))
            .collect();
        for t in 1..m {
            for &(u, v) in &base_edges {
                add_edge(
                    &mut c,
                    at(base.labels()[u].as_str(), t),
                    at(base.labels()[v].as_str(), t),
                );
            }
        }
        for t in 0..m {
            for v in 0..nv {
                add_edge(
                    &mut c,
                    at(base.labels()[v].as_str(), t),
                    at(base.labels()[v].as_str(), t + 1),
                );
            }
        }
    }

    // 2-cells: refined boundary triangles, coarse interior polygons, walls.
    let mut tri_faces: BTreeMap<(usize, String), Vec<usize>> = BTreeMap::new();
    for t in [0, m] {
        for f in tprime.facets() {
            let tag = tags[f].clone();
            let cyc: Vec<usize> = f.iter().map(|&v| at(tprime.label(v), t)).collect();
            let id = c.add_polygon(&cyc, &lookup, Some(format!("tri:{tag}@{t}")));
            tri_faces.entry((t, tag)).or_default().push(id);
        }
    }
    let mut h_poly: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in 1..m {
        for (p, cell) in base.cells(2).iter().enumerate() {
            let cyc: Vec<usize> = cell
                .cycle
                .as_ref()
                .unwrap()
                .iter()
                .map(|&v| at(base.labels()[v].as_str(), t))
                .collect();
            let id = c.add_polygon(&cyc, &lookup, Some(format!("surf:{}@{t}", poly_tokens[p])));
            h_poly.insert((t, p), id);
        }
    }
    let base_edges: Vec<(usize, usize)> = (0..base.cells(1).len())
        .map(|e| base.edge_endpoints(e))
        .collect();
    let mut wall: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in 0..m {
        for (e, &(u, v)) in base_edges.iter().enumerate() {
            let (lu, lv) = (base.labels()[u].as_str(), base.labels()[v].as_str());
            let cyc = [at(lu, t), at(lv, t), at(lv, t + 1), at(lu, t + 1)];
            let id = c.add_polygon(&cyc, &lookup, Some(format!("wall:{e}@{t}")));
            wall.insert((t, e), id);
        }
    }

    for t in 0..m {
        for (p, cell) in base.cells(2).iter().enumerate() {
            let token = &poly_tokens[p];
            let mut faces: Vec<usize> = Vec::new();
            if t == 0 {
                faces.extend(&tri_faces[&(0, token.clone())]);
            } else {
                faces.push(h_poly[&(t, p)]);
            }
            if t + 1 == m {
                faces.extend(&tri_faces[&(m, token.clone())]);
            } else {
                faces.push(h_poly[&(t + 1, p)]);
            }
            for &(e, _) in &cell.boundary {
                faces.push(wall[&(t, e)]);
            }
            c.add_cell_oriented(3, &faces, Some(format!("prism:{token}@{t}")))
                .map_err(|e| AssemblyError::Invariant(format!("prism shell: {e}")))?;
        }
    }
    c.validate()
        .map_err(|e| AssemblyError::Invariant(format!("refined stack: {e}")))?;
    Ok(c)
}

/// The E-construction at d = 3: cone a new vertex into each facet, then
/// merge the pyramid pairs over interior ridges into bipyramids. Apex
/// labels are "E(<facet tag>)".
pub fn e_construction(c: &Cellulation) -> Result<Cellulation, AssemblyError> {
    let d = c.dim();
    assert_eq!(d, 3, "the E-construction is exercised at d = 3");
    assert!(
        c.labels().iter().all(|l| !l.starts_with("E(")),
        "input labels must not collide with apex labels"
    );
    let (interior, boundary) = c.classify_ridges()?;
    let n_old = c.n_vertices();
    let facets = c.cells(d);

    let mut labels = c.labels().to_vec();
    for (id, cell) in facets.iter().enumerate() {
        let tag = cell.tag.clone().unwrap_or_else(|| id.to_string());
        labels.push(format!("E({tag})"));
    }
    let mut out = Cellulation::new(d, labels);
    let apex = |f: usize| n_old + f;

    // Edges of c survive with their ids; then apex edges per facet vertex.
    for cell in c.cells(1) {
        out.push_cell_raw(1, cell.clone());
    }
    let mut apex_edge: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (f, _) in facets.iter().enumerate() {
        for v in c.cell_vertices(d, f) {
            let id = out.add_edge(v, apex(f));
            apex_edge.insert((f, v), id);
        }
    }

    // Boundary ridges survive; interior ridges disappear inside bipyramids.
    // Side triangles (apex, edge) appear for every edge of every facet.
    let mut kept_ridge: BTreeMap<usize, usize> = BTreeMap::new();
    for &r in &boundary {
        let id = out.push_cell_raw(d - 1, c.cells(d - 1)[r].clone());
        kept_ridge.insert(r, id);
    }
    let ridge_facets = c.ridge_facets();
    let mut side_tri: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (f, _) in facets.iter().enumerate() {
        let mut edges: Vec<usize> = c
            .cell_closure(d, f)
            .into_iter()
            .filter(|&(dd, _)| dd == 1)
            .map(|(_, id)| id)
            .collect();
        edges.sort_unstable();
        for e in edges {
            let (t, h) = c.edge_endpoints(e);
            let id = out.push_cell_raw(
                d - 1,
                Cell {
                    boundary: vec![(e, 1), (apex_edge[&(f, h)], 1), (apex_edge[&(f, t)], -1)],
                    cycle: Some(vec![t, h, apex(f)]),
                    tag: None,
                },
            );
            side_tri.insert((f, e), id);
        }
    }

    let ridge_tag = |r: usize| {
        c.cells(d - 1)[r]
            .tag
            .clone()
            .unwrap_or_else(|| r.to_string())
    };
    let ridge_edges = |r: usize| -> Vec<usize> {
        let mut es: Vec<usize> = c
            .cell_closure(d - 1, r)
            .into_iter()
            .filter(|&(dd, _)| dd == 1)
            .map(|(_, id)| id)
            .collect();
        es.sort_unstable();
        es
    };
    for &r in &interior {
        let fs = &ridge_facets[&r];
        let (f1, f2) = (fs[0], fs[1]);
        let mut faces = Vec::new();
        for e in ridge_edges(r) {
            faces.push(side_tri[&(f1, e)]);
            faces.push(side_tri[&(f2, e)]);
        }
        out.add_cell_oriented(d, &faces, Some(format!("bip:{}", ridge_tag(r))))
            .map_err(|e| AssemblyError::Invariant(format!("bipyramid shell: {e}")))?;
    }
    for &r in &boundary {
        let f1 = ridge_facets[&r][0];
        let mut faces = vec![kept_ridge[&r]];
        for e in ridge_edges(r) {
            faces.push(side_tri[&(f1, e)]);
        }
        out.add_cell_oriented(d, &faces, Some(format!("pyr:{}", ridge_tag(r))))
            .map_err(|e| AssemblyError::Invariant(format!("pyramid shell: {e}")))?;
    }
    out.validate()
        .map_err(|e| AssemblyError::Invariant(format!("E-construction: {e}")))?;
    Ok(out)
}

/// Combinatorial octahedron as its three antipodal vertex pairs; by
/// convention pairs[0] holds the two E-apexes of a wall bipyramid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Octahedron {
    pub pairs: [[usize; 2]; 3],
}

impl Octahedron {
    pub fn vertices(&self) -> [usize; 6] {
        [
            self.pairs[0][0],
            self.pairs[0][1],
            self.pairs[1][0],
            self.pairs[1][1],
            self.pairs[2][0],
            self.pairs[2][1],
        ]
    }

    /// The 8 triangular faces, as sorted triples.
    pub fn faces(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for &a in &self.pairs[0] {
            for &b in &self.pairs[1] {
                for &c in &self.pairs[2] {
                    let mut f = vec![a, b, c];
                    f.sort_unstable();
                    out.push(f);
                }
            }
        }
        out.sort();
        out
    }
}

/// The 4 tetrahedra fanning the octahedron around the chosen diagonal; the
/// three choices are exactly its triangulations without new vertices.
pub fn octahedron_triangulations(
    oct: &Octahedron,
    choice: u8,
) -> Result<[[usize; 4]; 4], AssemblyError> {
    if choice > 2 {
        return Err(AssemblyError::BadChoice(choice));
    }
    let d = oct.pairs[choice as usize];
    let others: Vec<[usize; 2]> = (0..3)
        .filter(|&i| i != choice as usize)
        .map(|i| oct.pairs[i])
        .collect();
    // The equator alternates between the two remaining antipodal pairs.
    let eq = [others[0][0], others[1][0], others[0][1], others[1][1]];
    let mut out = [[0usize; 4]; 4];
    for (i, t) in out.iter_mut().enumerate() {
        *t = [d[0], d[1], eq[i], eq[(i + 1) % 4]];
    }
    Ok(out)
}

/// Simplices-plus-octahedra form of the cellulation C' of the thickened
/// surface, ready for gluing.
#[derive(Clone, Debug)]
pub struct TriangulatedStack {
    pub labels: Vec<String>,
    pub tetra: Vec<[usize; 4]>,
    /// Provenance per tetrahedron: "pyramid" or "bipyramid".
    pub tetra_tag: Vec<&'static str>,
    pub octahedra: Vec<Octahedron>,
    pub boundary_bottom: Vec<Vec<usize>>,
    pub boundary_top: Vec<Vec<usize>>,
}

/// Fans every bipyramid over a surface-copy polygon into tetrahedra joining
/// the apex diagonal to the base edges; wall bipyramids (over vertical
/// quadrilaterals) are genuine octahedra and are registered untouched, in
/// construction order. Boundary pyramids must already sit over triangles.
pub fn triangulate_bipyramids(ec: &Cellulation) -> Result<TriangulatedStack, AssemblyError> {
    assert_eq!(ec.dim(), 3);
    let is_apex = |v: usize| ec.labels()[v].starts_with("E(");
    let mut tetra = Vec::new();
    let mut tetra_tag = Vec::new();
    let mut octahedra = Vec::new();
    let mut boundary_bottom = Vec::new();
    let mut boundary_top = Vec::new();

    for cell in ec.cells(3) {
        let tag = cell.tag.clone().unwrap_or_default();
        let faces: Vec<usize> = cell.boundary.iter().map(|&(f, _)| f).collect();
        let all: BTreeSet<usize> = faces
            .iter()
            .flat_map(|&f| ec.cell_vertices(2, f))
            .collect();
        if let Some(rest) = tag.strip_prefix("bip:") {
            let apexes: Vec<usize> = all.iter().copied().filter(|&v| is_apex(v)).collect();
            if apexes.len() != 2 {
                return Err(AssemblyError::Invariant(format!(
                    "bipyramid {tag} does not have exactly two apexes"
                )));
            }
            let base_verts: Vec<usize> =
                all.iter().copied().filter(|&v| !is_apex(v)).collect();
            let base = order_cycle(ec, &faces, &base_verts, apexes[0]);
            if rest.starts_with("wall:") {
                if base.len() != 4 {
                    return Err(AssemblyError::Invariant(format!(
                        "wall bipyramid {tag} has a {}-gon base; the wall was subdivided",
                        base.len()
                    )));
                }
                octahedra.push(Octahedron {
                    pairs: [
                        [apexes[0], apexes[1]],
                        [base[0], base[2]],
                        [base[1], base[3]],
                    ],
                });
            } else {
                for i in 0..base.len() {
                    tetra.push([apexes[0], apexes[1], base[i], base[(i + 1) % base.len()]]);
                    tetra_tag.push("bipyramid");
                }
            }
        } else if tag.starts_with("pyr:") {
            let apexes: Vec<usize> = all.iter().copied().filter(|&v| is_apex(v)).collect();
            if apexes.len() != 1 {
                return Err(AssemblyError::Invariant(format!(
                    "pyramid {tag} does not have exactly one apex"
                )));
            }
            let base_face = faces
                .iter()
                .copied()
                .find(|&f| !ec.cell_vertices(2, f).contains(&apexes[0]))
                .ok_or_else(|| AssemblyError::Invariant(format!("pyramid {tag} without base")))?;
            let base_vs: Vec<usize> = ec.cell_vertices(2, base_face).into_iter().collect();
            if base_vs.len() != 3 {
                return Err(AssemblyError::Invariant(format!(
                    "boundary pyramid {tag} over a {}-gon; fan it only after the \
                     boundary has been triangulated",
                    base_vs.len()
                )));
            }
            tetra.push([apexes[0], base_vs[0], base_vs[1], base_vs[2]]);
            tetra_tag.push("pyramid");
            if let Some(t) = ec.cells(2)[base_face].tag.as_deref() {
                if t.starts_with("tri:") {
                    let mut sorted = base_vs.clone();
                    sorted.sort_unstable();
                    if t.ends_with("@0") {
                        boundary_bottom.push(sorted);
                    } else {
                        boundary_top.push(sorted);
                    }
                }
            }
        } else {
            return Err(AssemblyError::Invariant(format!(
                "unexpected 3-cell tag {tag:?} after the E-construction"
            )));
        }
    }
    boundary_bottom.sort();
    boundary_top.sort();
    Ok(TriangulatedStack {
        labels: ec.labels().to_vec(),
        tetra,
        tetra_tag,
        octahedra,
        boundary_bottom,
        boundary_top,
    })
}

/// Orders the base vertices of a bipyramid into their cycle using the side
/// triangles of one apex.
fn order_cycle(ec: &Cellulation, faces: &[usize], verts: &[usize], apex: usize) -> Vec<usize> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &f in faces {
        let fv: Vec<usize> = ec.cell_vertices(2, f).into_iter().collect();
        if !fv.contains(&apex) {
            continue;
        }
        let others: Vec<usize> = fv.into_iter().filter(|&v| v != apex).collect();
        adj.entry(others[0]).or_default().push(others[1]);
        adj.entry(others[1]).or_default().push(others[0]);
    }
    let start = *verts.iter().min().unwrap();
    let mut cyc = vec![start];
    let mut prev = start;
    let mut cur = *adj[&start].iter().min().unwrap();
    while cur != start {
        cyc.push(cur);
        let next = *adj[&cur].iter().find(|&&w| w != prev).unwrap();
        prev = cur;
        cur = next;
    }
    assert_eq!(cyc.len(), verts.len());
    cyc
}

/// Which handlebody to triangulate: H1 is cut by the a-family meridian
/// disks, H2 by the b-family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    H1,
    H2,
}

/// A triangulated solid handlebody with boundary exactly `tprime`: the
/// selected doubled curves are filled by fan disks with no new vertices,
/// the solid cylinder between each doubled pair is coned to a new apex, and
/// the remaining ball is coned to another.
pub fn handlebody_triangulation(
    tprime: &SimplicialComplex,
    doubled: &DoubledSystem,
    side: Side,
    apex_prefix: &str,
) -> Result<SimplicialComplex, AssemblyError> {
    let prefix = match side {
        Side::H1 => "a",
        Side::H2 => "b",
    };
    let family: Vec<&Curve> = doubled.family(prefix);
    let pair_curves: Vec<(&Curve, &Curve)> = doubled
        .pairs
        .iter()
        .filter(|(o, _)| o.label.starts_with(prefix))
        .map(|(o, c)| (o, c))
        .collect();
    assert_eq!(family.len(), 2 * pair_curves.len());

    let surface_facets: BTreeSet<Vec<usize>> = tprime.facets().iter().cloned().collect();
    let surface_edges: BTreeSet<(usize, usize)> = tprime
        .faces(1)
        .into_iter()
        .map(|e| (e[0], e[1]))
        .collect();

    // Fan disks, one per curve; the pivot is the basepoint when the curve
    // passes through it, otherwise tried in vertex label order.
    let mut disks: BTreeMap<String, Vec<Vec<usize>>> = BTreeMap::new();
    for curve in &family {
        let mut pivots: Vec<usize> = curve.walk.clone();
        pivots.sort_by_key(|&v| {
            (v != doubled.basepoint, tprime.label(v).to_string())
        });
        let mut chosen = None;
        'pivots: for &p in &pivots {
            let fan = fan_triangles(&curve.walk, p);
            for tri in &fan {
                let mut s = tri.clone();
                s.sort_unstable();
                if surface_facets.contains(&s) {
                    continue 'pivots;
                }
            }
            // Chord edges of the fan must be interior.
            let pos = curve.walk.iter().position(|&v| v == p).unwrap();
            let n = curve.walk.len();
            for t in 0..n {
                if t == pos || (t + 1) % n == pos || (pos + 1) % n == t {
                    continue;
                }
                let q = curve.walk[t];
                if surface_edges.contains(&(p.min(q), p.max(q))) {
                    continue 'pivots;
                }
            }
            chosen = Some(fan);
            break;
        }
        let fan = chosen.ok_or_else(|| {
            AssemblyError::NonDiskCurve(
                curve.label.clone(),
                "no pivot yields a disk avoiding the surface".into(),
            )
        })?;
        disks.insert(curve.label.clone(), fan);
    }

    // Regions: cutting along the whole family leaves one cylinder strip per
    // doubled pair plus a single remaining region for the ball.
    let comps = cut_components(tprime, &family);
    let g = pair_curves.len();
    if comps.len() != g + 1 {
        return Err(AssemblyError::Invariant(format!(
            "cutting along the {prefix}-family gave {} regions, expected {}",
            comps.len(),
            g + 1
        )));
    }
    let mut strip_of_pair: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut used: BTreeSet<Vec<Vec<usize>>> = BTreeSet::new();
    for (orig, copy) in &pair_curves {
        let (strip, _) = annulus_between(tprime, orig, copy)?;
        strip_of_pair.push(strip.clone());
        used.insert(strip);
    }
    let ball_regions: Vec<&Vec<Vec<usize>>> =
        comps.iter().filter(|comp| !used.contains(*comp)).collect();
    if ball_regions.len() != 1 {
        return Err(AssemblyError::Invariant(format!(
            "{} ball regions remain after removing the cylinder strips",
            ball_regions.len()
        )));
    }
    let ball_region = ball_regions[0];

    // Cone the pieces: each strip with its two disks, then the ball with
    // everything else plus all disks.
    let mut labels = tprime.labels().to_vec();
    let mut facets: Vec<Vec<usize>> = Vec::new();
    let cone = |apex_label: String,
                    tris: Vec<Vec<usize>>,
                    labels: &mut Vec<String>,
                    facets: &mut Vec<Vec<usize>>| {
        let apex = labels.len();
        labels.push(apex_label);
        for t in tris {
            let mut f = t;
            f.push(apex);
            facets.push(f);
        }
    };
    for (i, (orig, copy)) in pair_curves.iter().enumerate() {
        let mut tris = strip_of_pair[i].clone();
        tris.extend(disks[&orig.label].iter().cloned());
        tris.extend(disks[&copy.label].iter().cloned());
        cone(
            format!("{apex_prefix}.cyl{}", i + 1),
            tris,
            &mut labels,
            &mut facets,
        );
    }
    {
        let mut tris = ball_region.clone();
        for fan in disks.values() {
            tris.extend(fan.iter().cloned());
        }
        cone(format!("{apex_prefix}.ball"), tris, &mut labels, &mut facets);
    }
    let out = SimplicialComplex::new(labels, facets);

    // The boundary must be exactly T'.
    let mut boundary: Vec<Vec<usize>> = out
        .ridge_incidence()
        .into_iter()
        .filter(|(_, fs)| fs.len() == 1)
        .map(|(r, _)| r)
        .collect();
    boundary.sort();
    let mut want: Vec<Vec<usize>> = tprime.facets().to_vec();
    want.sort();
    if boundary != want {
        return Err(AssemblyError::BoundaryMismatch(format!(
            "handlebody {apex_prefix} boundary has {} triangles, T' has {}",
            boundary.len(),
            want.len()
        )));
    }
    Ok(out)
}

fn fan_triangles(walk: &[usize], pivot: usize) -> Vec<Vec<usize>> {
    let n = walk.len();
    let pos = walk.iter().position(|&v| v == pivot).unwrap();
    let seq: Vec<usize> = (0..n).map(|i| walk[(pos + i) % n]).collect();
    (1..n - 1).map(|i| vec![seq[0], seq[i], seq[i + 1]]).collect()
}

/// The assembled cellulation S of the 3-sphere: tetrahedra from both
/// handlebodies and the triangulated stack, plus the registry of octahedral
/// cells left free for independent triangulation.
#[derive(Clone, Debug)]
pub struct SphereCellulation {
    pub labels: Vec<String>,
    pub tetra: Vec<[usize; 4]>,
    /// Per-tetrahedron provenance: "h1", "h2", "pyramid", "bipyramid".
    pub tetra_tag: Vec<String>,
    /// Registry in deterministic construction order.
    pub octahedra: Vec<Octahedron>,
}

impl SphereCellulation {
    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn registry_size(&self) -> usize {
        self.octahedra.len()
    }

    pub fn facet_count(&self) -> usize {
        self.tetra.len() + self.octahedra.len()
    }

    /// Every ridge lies in exactly two facets, counting octahedron faces.
    pub fn is_closed(&self) -> bool {
        let mut count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for t in &self.tetra {
            for skip in 0..4 {
                let mut f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| t[i]).collect();
                f.sort_unstable();
                *count.entry(f).or_default() += 1;
            }
        }
        for o in &self.octahedra {
            for f in o.faces() {
                *count.entry(f).or_default() += 1;
            }
        }
        count.values().all(|&c| c == 2)
    }

    /// Structural check: six distinct vertices and eight distinct faces per
    /// registered octahedron.
    pub fn octahedra_well_formed(&self) -> bool {
        self.octahedra.iter().all(|o| {
            let vs: BTreeSet<usize> = o.vertices().into_iter().collect();
            let fs: BTreeSet<Vec<usize>> = o.faces().into_iter().collect();
            vs.len() == 6 && fs.len() == 8
        })
    }
}

/// Glues H1, the triangulated stack C' and H2 along the two T' copies by
/// label identification.
pub fn assemble_sphere(spec: &HeffterSpec, m: usize) -> Result<SphereCellulation, AssemblyError> {
    assert!(m >= 1);
    let (surface, tags) = heffter_surface(spec);
    let cs = homology_basis(&surface).map_err(AssemblyError::Surface)?;
    let sym = symplectic_basis(&cs).map_err(AssemblyError::Surface)?;
    let (_refined, sys) = reroute_disjoint(&sym).map_err(AssemblyError::Surface)?;
    let (tprime, tags, doubled) = double_curves(&sys, &tags).map_err(AssemblyError::Surface)?;

    let h1 = handlebody_triangulation(&tprime, &doubled, Side::H1, "h1")?;
    let h2 = handlebody_triangulation(&tprime, &doubled, Side::H2, "h2")?;

    let base = heffter_cellulation(spec);
    let refined = refine_boundary(&base, m, &tprime, &tags)?;
    let ec = e_construction(&refined)?;
    let stack = triangulate_bipyramids(&ec)?;

    // Registry bookkeeping: (q choose 2) walls per layer, cross-checked by
    // the tag scan that filled the registry.
    let q = spec.q() as usize;
    let expected = q * (q - 1) / 2 * m;
    if stack.octahedra.len() != expected {
        return Err(AssemblyError::Invariant(format!(
            "registry has {} octahedra, bookkeeping expects {expected}",
            stack.octahedra.len()
        )));
    }

    let mut labels = stack.labels.clone();
    let mut index: BTreeMap<String, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), i))
        .collect();
    let mut tetra: Vec<[usize; 4]> = Vec::new();
    let mut tetra_tag: Vec<String> = Vec::new();
    for (t, tag) in stack.tetra.iter().zip(&stack.tetra_tag) {
        tetra.push(*t);
        tetra_tag.push((*tag).to_string());
    }

    // Stamp each handlebody onto its boundary layer and splice it in.
    let t_labels: BTreeSet<&String> = tprime.labels().iter().collect();
    for (h, layer, name) in [(&h1, 0usize, "h1"), (&h2, m, "h2")] {
        let mut map = Vec::with_capacity(h.labels().len());
        for l in h.labels() {
            let stamped = if t_labels.contains(l) {
                stamp(l, layer)
            } else {
                l.clone() // cone apexes are globally unique already
            };
            let id = *index.entry(stamped.clone()).or_insert_with(|| {
                labels.push(stamped);
                labels.len() - 1
            });
            map.push(id);
        }
        let mut hb: Vec<Vec<usize>> = tprime
            .facets()
            .iter()
            .map(|f| {
                let mut g: Vec<usize> = f
                    .iter()
                    .map(|&v| index[&stamp(tprime.label(v), layer)])
                    .collect();
                g.sort_unstable();
                g
            })
            .collect();
        hb.sort();
        let stack_boundary = if layer == 0 {
            &stack.boundary_bottom
        } else {
            &stack.boundary_top
        };
        if &hb != stack_boundary {
            return Err(AssemblyError::BoundaryMismatch(format!(
                "{name} boundary does not match the stack at layer {layer}"
            )));
        }
        for f in h.facets() {
            let mut g = [0usize; 4];
            for (i, &v) in f.iter().enumerate() {
                g[i] = map[v];
            }
            g.sort_unstable();
            tetra.push(g);
            tetra_tag.push(name.to_string());
        }
    }

    let sphere = SphereCellulation {
        labels,
        tetra,
        tetra_tag,
        octahedra: stack.octahedra,
    };
    if !sphere.is_closed() {
        return Err(AssemblyError::Invariant(
            "assembled cellulation is not closed".into(),
        ));
    }
    if !sphere.octahedra_well_formed() {
        return Err(AssemblyError::Invariant(
            "octahedron registry is malformed".into(),
        ));
    }
    log::info!(
        "assembled q={} m={m}: {} vertices, {} tetrahedra, {} octahedra",
        spec.q(),
        sphere.n_vertices(),
        sphere.tetra.len(),
        sphere.registry_size()
    );
    Ok(sphere)
}

/// Triangulates every registered octahedron by its chosen diagonal and
/// returns the resulting pure simplicial 3-complex.
pub fn triangulate_sphere(
    s: &SphereCellulation,
    choices: &[u8],
) -> Result<SimplicialComplex, AssemblyError> {
    if choices.len() != s.octahedra.len() {
        return Err(AssemblyError::ChoiceLengthMismatch {
            got: choices.len(),
            want: s.octahedra.len(),
        });
    }
    let mut facets: Vec<Vec<usize>> = s.tetra.iter().map(|t| t.to_vec()).collect();
    for (o, &c) in s.octahedra.iter().zip(choices) {
        for t in octahedron_triangulations(o, c)? {
            facets.push(t.to_vec());
        }
    }
    Ok(SimplicialComplex::new(s.labels.clone(), facets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use crate::simplicial::FVector;

    fn spec5() -> HeffterSpec {
        let f = make_field(5, 1, None).unwrap();
        HeffterSpec::new(f.clone(), f.element(&[2])).unwrap()
    }

    fn spec9() -> HeffterSpec {
        let f = make_field(3, 2, Some(&[2, 1, 1])).unwrap();
        HeffterSpec::new(f.clone(), f.element(&[2, 2])).unwrap()
    }

    #[test]
    fn prism_stack_product_counting() {
        let base = heffter_cellulation(&spec5());
        for m in [1usize, 2, 3] {
            let ps = prism_stack(&base, m);
            let f = ps.cellulation.f_vector();
            assert_eq!(
                f,
                FVector(vec![
                    (m + 1) * 5,
                    (m + 1) * 10 + m * 5,
                    (m + 1) * 5 + m * 10,
                    m * 5,
                ])
            );
            // The thickened surface deformation-retracts to the surface.
            assert_eq!(f.euler_characteristic(), 0);
        }
    }

    #[test]
    fn e_construction_on_c5_prism() {
        // C_5 x [0,1]: 15 vertices, 10 octahedra, 10 pyramids.
        let base = heffter_cellulation(&spec5());
        let ps = prism_stack(&base, 1);
        let ec = e_construction(&ps.cellulation).unwrap();
        assert_eq!(ec.n_vertices(), 15);
        let bips: Vec<_> = ec
            .cells(3)
            .iter()
            .filter(|c| c.tag.as_deref().unwrap_or("").starts_with("bip:"))
            .collect();
        let pyrs = ec
            .cells(3)
            .iter()
            .filter(|c| c.tag.as_deref().unwrap_or("").starts_with("pyr:"))
            .count();
        assert_eq!(bips.len(), 10);
        assert_eq!(pyrs, 10);
        // Every interior ridge is a vertical wall, so every bipyramid is an
        // octahedron (8 triangular faces).
        for c in &bips {
            assert!(c.tag.as_deref().unwrap().contains("wall:"));
            assert_eq!(c.boundary.len(), 8);
        }
    }

    #[test]
    fn e_construction_on_c9_prism() {
        // C_9 x [0,1]: 27 vertices, 36 octahedra, 18 octagonal pyramids.
        let base = heffter_cellulation(&spec9());
        let ps = prism_stack(&base, 1);
        let ec = e_construction(&ps.cellulation).unwrap();
        assert_eq!(ec.n_vertices(), 27);
        let bips = ec
            .cells(3)
            .iter()
            .filter(|c| c.tag.as_deref().unwrap_or("").starts_with("bip:"))
            .count();
        let pyrs: Vec<_> = ec
            .cells(3)
            .iter()
            .filter(|c| c.tag.as_deref().unwrap_or("").starts_with("pyr:"))
            .collect();
        assert_eq!(bips, 36);
        assert_eq!(pyrs.len(), 18);
        for p in pyrs {
            // one octagon base plus eight side triangles
            assert_eq!(p.boundary.len(), 9);
        }
    }

    #[test]
    fn e_construction_counting_identity() {
        // pyramids + bipyramids = ridges, bipyramids = interior ridges, new
        // vertices = facets; checked on stacks of several heights.
        let base = heffter_cellulation(&spec5());
        for m in [1usize, 2] {
            let ps = prism_stack(&base, m);
            let c = &ps.cellulation;
            let (interior, boundary) = c.classify_ridges().unwrap();
            let ec = e_construction(c).unwrap();
            let bips = ec
                .cells(3)
                .iter()
                .filter(|x| x.tag.as_deref().unwrap_or("").starts_with("bip:"))
                .count();
            let pyrs = ec
                .cells(3)
                .iter()
                .filter(|x| x.tag.as_deref().unwrap_or("").starts_with("pyr:"))
                .count();
            assert_eq!(bips, interior.len());
            assert_eq!(bips + pyrs, interior.len() + boundary.len());
            assert_eq!(ec.n_vertices(), c.n_vertices() + c.cells(3).len());
        }
    }

    #[test]
    fn e_construction_on_a_single_cube() {
        // A solid cube: all six ridges on the boundary, so E gives six
        // square pyramids over one new vertex.
        let labels = (0..8).map(|i| format!("{i}")).collect();
        let mut c = Cellulation::new(3, labels);
        let mut edges = BTreeMap::new();
        for a in 0..8usize {
            for b in a + 1..8 {
                if (a ^ b).count_ones() == 1 {
                    let e = c.add_edge(a, b);
                    edges.insert((a, b), e);
                }
            }
        }
        let quads: [[usize; 4]; 6] = [
            [0, 1, 3, 2],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 3, 7, 6],
            [0, 2, 6, 4],
            [1, 3, 7, 5],
        ];
        let mut faces = Vec::new();
        for q in quads {
            faces.push(c.add_polygon(&q, &edges, None));
        }
        c.add_cell_oriented(3, &faces, Some("cube".into())).unwrap();
        c.validate().unwrap();
        let ec = e_construction(&c).unwrap();
        assert_eq!(ec.n_vertices(), 9);
        let tags: Vec<String> = ec.cells(3).iter().map(|x| x.tag.clone().unwrap()).collect();
        assert_eq!(tags.len(), 6);
        assert!(tags.iter().all(|t| t.starts_with("pyr:")));
    }

    #[test]
    fn octahedron_triangulation_choices() {
        let oct = Octahedron {
            pairs: [[0, 1], [2, 3], [4, 5]],
        };
        let t0 = octahedron_triangulations(&oct, 0).unwrap();
        let c0 = SimplicialComplex::from_facets(6, t0.iter().map(|t| t.to_vec()).collect());
        // A fan of 4 tetrahedra around the diagonal is a 3-ball.
        assert_eq!(c0.euler_characteristic(), 1);
        let t1 = octahedron_triangulations(&oct, 1).unwrap();
        let t2 = octahedron_triangulations(&oct, 2).unwrap();
        let set = |t: &[[usize; 4]; 4]| -> BTreeSet<Vec<usize>> {
            t.iter()
                .map(|f| {
                    let mut v = f.to_vec();
                    v.sort_unstable();
                    v
                })
                .collect()
        };
        assert_ne!(set(&t0), set(&t1));
        assert_ne!(set(&t0), set(&t2));
        assert_ne!(set(&t1), set(&t2));
        assert!(matches!(
            octahedron_triangulations(&oct, 3),
            Err(AssemblyError::BadChoice(3))
        ));
    }

    #[test]
    fn handlebody_on_grid_torus() {
        let t = crate::simplicial::grid_torus(4, 5);
        let sys = reroute_disjoint(&symplectic_basis(&homology_basis(&t).unwrap()).unwrap())
            .unwrap()
            .1;
        let (tprime, _tags, doubled) = double_curves(&sys, &TriangleTags::new()).unwrap();
        for (side, prefix) in [(Side::H1, "h1"), (Side::H2, "h2")] {
            let h = handlebody_triangulation(&tprime, &doubled, side, prefix).unwrap();
            // Boundary equals T' (checked inside); a genus-1 handlebody has
            // Betti numbers (1, 1, 0, 0).
            let hom = crate::homology::homology(&h);
            assert_eq!(hom.betti(), vec![1, 1, 0, 0]);
            assert!(hom.torsion_free());
        }
    }

    #[test]
    fn assemble_sphere_q5_m2() {
        let s = assemble_sphere(&spec5(), 2).unwrap();
        assert_eq!(s.registry_size(), 20); // (5 choose 2) * 2
        assert!(s.is_closed());
        assert!(s.octahedra_well_formed());

        let zeros = vec![0u8; 20];
        let t = triangulate_sphere(&s, &zeros).unwrap();
        assert!(t.is_manifold_3().unwrap());
        let hom = crate::homology::homology(&t);
        assert_eq!(hom.betti(), vec![1, 0, 0, 1]);
        assert!(hom.torsion_free());
        assert_eq!(t.facets().len(), s.tetra.len() + 4 * 20);
    }

    #[test]
    fn one_octahedron_flip_changes_exactly_eight_facets() {
        let s = assemble_sphere(&spec5(), 2).unwrap();
        let zeros = vec![0u8; s.registry_size()];
        let mut ones = zeros.clone();
        ones[3] = 1;
        let t0 = triangulate_sphere(&s, &zeros).unwrap();
        let t1 = triangulate_sphere(&s, &ones).unwrap();
        let f0: BTreeSet<&Vec<usize>> = t0.facets().iter().collect();
        let f1: BTreeSet<&Vec<usize>> = t1.facets().iter().collect();
        assert_eq!(f0.difference(&f1).count(), 4);
        assert_eq!(f1.difference(&f0).count(), 4);
        assert_eq!(t0.used_vertices(), t1.used_vertices());
    }

    #[test]
    fn choice_vector_length_is_checked() {
        let s = assemble_sphere(&spec5(), 2).unwrap();
        assert!(matches!(
            triangulate_sphere(&s, &[0u8; 3]),
            Err(AssemblyError::ChoiceLengthMismatch { got: 3, want: 20 })
        ));
    }

    #[test]
    fn ungluing_recovers_piece_boundaries() {
        // Splitting the facets by provenance tag must leave each handlebody
        // bounded by triangles that the stack pyramids cover exactly.
        let s = assemble_sphere(&spec5(), 2).unwrap();
        for piece in ["h1", "h2"] {
            let mut count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for (t, tag) in s.tetra.iter().zip(&s.tetra_tag) {
                if tag != piece {
                    continue;
                }
                for skip in 0..4 {
                    let mut f: Vec<usize> =
                        (0..4).filter(|&i| i != skip).map(|i| t[i]).collect();
                    f.sort_unstable();
                    *count.entry(f).or_default() += 1;
                }
            }
            let boundary: Vec<&Vec<usize>> = count
                .iter()
                .filter(|(_, &c)| c == 1)
                .map(|(f, _)| f)
                .collect();
            assert!(!boundary.is_empty());
            for f in boundary {
                let covered = s
                    .tetra
                    .iter()
                    .zip(&s.tetra_tag)
                    .filter(|(_, tag)| *tag == "pyramid")
                    .any(|(t, _)| f.iter().all(|v| t.contains(v)));
                assert!(covered, "handlebody boundary triangle not glued");
            }
        }
    }

    #[test]
    fn assemble_rejects_higher_genus() {
        let err = assemble_sphere(&spec9(), 1).unwrap_err();
        assert!(matches!(err, AssemblyError::Surface(_)));
    }
}
