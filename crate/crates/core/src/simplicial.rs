//! Pure facet-list simplicial complexes over labeled vertices, with the
//! invariant machinery the pipeline relies on: f-vectors, links, closed
//! pseudomanifold and 3-manifold checks, surface orientation.

use crate::error::{ComplexError, SurfaceError};
use std::collections::{BTreeMap, BTreeSet};

/// Face-count vector (f_0, ..., f_dim).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FVector(pub Vec<usize>);

impl FVector {
    pub fn euler_characteristic(&self) -> i64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &f)| if i % 2 == 0 { f as i64 } else { -(f as i64) })
            .sum()
    }
}

/// A simplicial complex given by its facets. Vertex labels are opaque
/// tokens; all queries work on dense vertex ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialComplex {
    labels: Vec<String>,
    /// Each facet sorted ascending; the list sorted and deduplicated.
    facets: Vec<Vec<usize>>,
}

impl SimplicialComplex {
    /// Builds a complex from facets over an explicit label table. Facets are
    /// sorted and deduplicated; containment between facets is rejected.
    pub fn new(labels: Vec<String>, facets: Vec<Vec<usize>>) -> Self {
        let mut fs: Vec<Vec<usize>> = facets
            .into_iter()
            .map(|mut f| {
                f.sort_unstable();
                let before = f.len();
                f.dedup();
                assert_eq!(before, f.len(), "facet with repeated vertex");
                f
            })
            .collect();
        fs.sort();
        fs.dedup();
        let c = SimplicialComplex { labels, facets: fs };
        debug_assert!(c.is_antichain(), "facet list is not an antichain");
        c
    }

    /// Convenience constructor from labeled facets; the label table is the
    /// sorted set of all tokens used.
    pub fn from_labeled_facets(facets: &[Vec<String>]) -> Self {
        let mut tokens: BTreeSet<&String> = BTreeSet::new();
        for f in facets {
            tokens.extend(f.iter());
        }
        let labels: Vec<String> = tokens.into_iter().cloned().collect();
        let index: BTreeMap<&String, usize> =
            labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
        let fs = facets
            .iter()
            .map(|f| f.iter().map(|t| index[t]).collect())
            .collect();
        SimplicialComplex::new(labels, fs)
    }

    /// Facets on anonymous integer vertices labeled by their decimal value.
    pub fn from_facets(n_vertices: usize, facets: Vec<Vec<usize>>) -> Self {
        let labels = (0..n_vertices).map(|i| i.to_string()).collect();
        SimplicialComplex::new(labels, facets)
    }

    fn is_antichain(&self) -> bool {
        for (i, a) in self.facets.iter().enumerate() {
            for b in self.facets.iter().skip(i + 1) {
                if a.iter().all(|v| b.binary_search(v).is_ok())
                    || b.iter().all(|v| a.binary_search(v).is_ok())
                {
                    return false;
                }
            }
        }
        true
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn vertex_by_label(&self, token: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == token)
    }

    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }

    pub fn dim(&self) -> usize {
        self.facets.iter().map(|f| f.len()).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn is_pure(&self, d: usize) -> bool {
        !self.facets.is_empty() && self.facets.iter().all(|f| f.len() == d + 1)
    }

    /// Vertices actually used by some facet, ascending.
    pub fn used_vertices(&self) -> Vec<usize> {
        let mut s: BTreeSet<usize> = BTreeSet::new();
        for f in &self.facets {
            s.extend(f.iter().copied());
        }
        s.into_iter().collect()
    }

    /// All k-faces of all facets, deduplicated, each sorted.
    pub fn faces(&self, k: usize) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        for f in &self.facets {
            if f.len() < k + 1 {
                continue;
            }
            subsets_into(f, k + 1, &mut out);
        }
        out
    }

    pub fn f_vector(&self) -> FVector {
        let d = self.dim();
        FVector((0..=d).map(|k| self.faces(k).len()).collect())
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.f_vector().euler_characteristic()
    }

    pub fn has_face(&self, face: &[usize]) -> bool {
        let mut f = face.to_vec();
        f.sort_unstable();
        self.facets
            .iter()
            .any(|fac| f.iter().all(|v| fac.binary_search(v).is_ok()))
    }

    /// The link of a face: all tau \ face for facets tau containing face.
    pub fn link(&self, face: &[usize]) -> Result<SimplicialComplex, ComplexError> {
        let mut f = face.to_vec();
        f.sort_unstable();
        if !self.has_face(&f) {
            return Err(ComplexError::FaceNotPresent(
                f.iter().map(|&v| self.labels[v].clone()).collect(),
            ));
        }
        let link_facets: Vec<Vec<usize>> = self
            .facets
            .iter()
            .filter(|fac| f.iter().all(|v| fac.binary_search(v).is_ok()))
            .map(|fac| fac.iter().copied().filter(|v| !f.contains(v)).collect())
            .collect();
        Ok(SimplicialComplex::new(self.labels.clone(), link_facets))
    }

    /// Ridge -> indices of facets containing it.
    pub fn ridge_incidence(&self) -> BTreeMap<Vec<usize>, Vec<usize>> {
        let mut map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (i, f) in self.facets.iter().enumerate() {
            for k in 0..f.len() {
                let mut r = f.clone();
                r.remove(k);
                map.entry(r).or_default().push(i);
            }
        }
        map
    }

    /// Closed pseudomanifold of dimension d: pure, every ridge in exactly two
    /// facets, and the facet-ridge adjacency graph connected.
    pub fn is_closed_pseudomanifold(&self, d: usize) -> Result<bool, ComplexError> {
        if !self.is_pure(d) {
            return Err(ComplexError::NotPure(d));
        }
        let ridges = self.ridge_incidence();
        if ridges.values().any(|fs| fs.len() != 2) {
            return Ok(false);
        }
        // Strong connectivity through ridges.
        let n = self.facets.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for fs in ridges.values() {
            adj[fs[0]].push(fs[1]);
            adj[fs[1]].push(fs[0]);
        }
        Ok(connected_count(&adj) == 1)
    }

    /// True when the complex is a closed connected surface (every vertex link
    /// a single cycle).
    pub fn is_closed_surface(&self) -> Result<bool, ComplexError> {
        if !self.is_closed_pseudomanifold(2)? {
            return Ok(false);
        }
        for &v in &self.used_vertices() {
            let link = self.link(&[v])?;
            if !link_is_single_cycle(&link) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// True iff closed 3-pseudomanifold and every vertex link is a closed
    /// connected surface with Euler characteristic 2.
    pub fn is_manifold_3(&self) -> Result<bool, ComplexError> {
        if !self.is_pure(3) {
            return Err(ComplexError::NotPure(3));
        }
        if !self.is_closed_pseudomanifold(3)? {
            return Ok(false);
        }
        for &v in &self.used_vertices() {
            let link = self.link(&[v])?;
            if !link.is_closed_surface()? || link.euler_characteristic() != 2 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Coherent orientation of a closed surface: sign per facet relative to
    /// its sorted vertex order. Err(NotOrientable) when propagation fails.
    pub fn orient_surface(&self) -> Result<Vec<i8>, SurfaceError> {
        if !matches!(self.is_closed_pseudomanifold(2), Ok(true)) {
            return Err(SurfaceError::NotASurface(
                "orientation requires a closed surface".into(),
            ));
        }
        let ridges = self.ridge_incidence();
        let n = self.facets.len();
        let mut sign = vec![0i8; n];
        sign[0] = 1;
        let mut stack = vec![0usize];
        while let Some(t) = stack.pop() {
            for k in 0..3 {
                let mut r = self.facets[t].clone();
                r.remove(k);
                let pair = &ridges[&r];
                let other = if pair[0] == t { pair[1] } else { pair[0] };
                // Coherent iff the shared edge is traversed in opposite
                // directions by the two oriented triangles.
                let d1 = edge_direction(&self.facets[t], sign[t], (r[0], r[1]));
                let needed = -d1;
                let d2 = edge_direction(&self.facets[other], 1, (r[0], r[1]));
                let s = if d2 == needed { 1 } else { -1 };
                if sign[other] == 0 {
                    sign[other] = s;
                    stack.push(other);
                } else if sign[other] != s {
                    return Err(SurfaceError::NotOrientable);
                }
            }
        }
        Ok(sign)
    }

    /// Renames vertices through the permutation `perm` (old id -> new id).
    /// Labels follow the vertices.
    pub fn relabel(&self, perm: &[usize]) -> SimplicialComplex {
        let mut labels = vec![String::new(); self.labels.len()];
        for (old, &new) in perm.iter().enumerate() {
            labels[new] = self.labels[old].clone();
        }
        let facets = self
            .facets
            .iter()
            .map(|f| f.iter().map(|&v| perm[v]).collect())
            .collect();
        SimplicialComplex::new(labels, facets)
    }

    /// Disjoint union; the other complex's labels get a suffix to stay unique.
    pub fn disjoint_union(&self, other: &SimplicialComplex) -> SimplicialComplex {
        let offset = self.labels.len();
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().map(|l| format!("{l}'")));
        let mut facets = self.facets.clone();
        facets.extend(
            other
                .facets
                .iter()
                .map(|f| f.iter().map(|&v| v + offset).collect::<Vec<_>>()),
        );
        SimplicialComplex::new(labels, facets)
    }
}

/// Direction of the edge (a, b) induced by a triangle with the given sign:
/// +1 when traversed a -> b, -1 when b -> a.
fn edge_direction(tri: &[usize], sign: i8, (a, b): (usize, usize)) -> i8 {
    // sign +1 means cyclic order (t0, t1, t2) on the sorted triple.
    let cyc = [tri[0], tri[1], tri[2]];
    let pos = |v: usize| cyc.iter().position(|&x| x == v).unwrap();
    let (pa, pb) = (pos(a), pos(b));
    let forward = (pb + 3 - pa) % 3 == 1;
    let d = if forward { 1 } else { -1 };
    d * sign
}

fn link_is_single_cycle(link: &SimplicialComplex) -> bool {
    if !link.is_pure(1) {
        return false;
    }
    let mut deg: BTreeMap<usize, usize> = BTreeMap::new();
    for e in link.facets() {
        *deg.entry(e[0]).or_default() += 1;
        *deg.entry(e[1]).or_default() += 1;
    }
    if deg.values().any(|&d| d != 2) {
        return false;
    }
    // Connected with all degrees 2 and |E| = |V| => a single cycle.
    let verts: Vec<usize> = deg.keys().copied().collect();
    let index: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut adj = vec![Vec::new(); verts.len()];
    for e in link.facets() {
        adj[index[&e[0]]].push(index[&e[1]]);
        adj[index[&e[1]]].push(index[&e[0]]);
    }
    connected_count(&adj) == 1 && link.facets().len() == verts.len()
}

fn connected_count(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    if n == 0 {
        return 0;
    }
    let mut seen = vec![false; n];
    let mut comps = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        comps += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    comps
}

fn subsets_into(f: &[usize], size: usize, out: &mut BTreeSet<Vec<usize>>) {
    let n = f.len();
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.insert(idx.iter().map(|&i| f[i]).collect());
        // next combination
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - size {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Boundary complex of the n-simplex on n+1 vertices.
pub fn boundary_of_simplex(n: usize) -> SimplicialComplex {
    let verts: Vec<usize> = (0..=n).collect();
    let facets = (0..=n)
        .map(|skip| verts.iter().copied().filter(|&v| v != skip).collect())
        .collect();
    SimplicialComplex::from_facets(n + 1, facets)
}

/// Boundary of the octahedron: antipodal pairs (0,1), (2,3), (4,5).
pub fn octahedron_boundary() -> SimplicialComplex {
    let mut facets = Vec::new();
    for a in 0..2 {
        for b in 2..4 {
            for c in 4..6 {
                facets.push(vec![a, b, c]);
            }
        }
    }
    SimplicialComplex::from_facets(6, facets)
}

/// Torus triangulated as an r x c grid with diagonals; needs r, c >= 3.
pub fn grid_torus(r: usize, c: usize) -> SimplicialComplex {
    assert!(r >= 3 && c >= 3);
    let id = |i: usize, j: usize| (i % r) * c + (j % c);
    let mut facets = Vec::new();
    for i in 0..r {
        for j in 0..c {
            facets.push(vec![id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
            facets.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
        }
    }
    SimplicialComplex::from_facets(r * c, facets)
}

/// The 7-vertex torus: facets {i, i+1, i+3} and {i, i+2, i+3} mod 7.
pub fn csaszar_torus() -> SimplicialComplex {
    let mut facets = Vec::new();
    for i in 0..7usize {
        facets.push(vec![i, (i + 1) % 7, (i + 3) % 7]);
        facets.push(vec![i, (i + 2) % 7, (i + 3) % 7]);
    }
    SimplicialComplex::from_facets(7, facets)
}

/// Suspension: two new apex vertices coned over every facet.
pub fn suspension(c: &SimplicialComplex) -> SimplicialComplex {
    let n = c.labels().len();
    let mut labels = c.labels().to_vec();
    labels.push("north".into());
    labels.push("south".into());
    let mut facets = Vec::new();
    for f in c.facets() {
        let mut up = f.clone();
        up.push(n);
        facets.push(up);
        let mut down = f.clone();
        down.push(n + 1);
        facets.push(down);
    }
    SimplicialComplex::new(labels, facets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_vector_of_boundary_of_4_simplex() {
        let c = boundary_of_simplex(4);
        assert_eq!(c.f_vector(), FVector(vec![5, 10, 10, 5]));
        assert_eq!(c.euler_characteristic(), 0);
    }

    #[test]
    fn links_in_boundary_of_4_simplex() {
        let c = boundary_of_simplex(4);
        // Link of a vertex is the boundary of a 3-simplex.
        let lk = c.link(&[0]).unwrap();
        assert_eq!(lk.f_vector(), FVector(vec![4, 6, 4]));
        assert!(lk.is_closed_pseudomanifold(2).unwrap());
        // Link of an edge is a 3-cycle.
        let lke = c.link(&[0, 1]).unwrap();
        assert_eq!(lke.f_vector(), FVector(vec![3, 3]));
        assert!(link_is_single_cycle(&lke));
    }

    #[test]
    fn link_of_octahedron_vertex_is_4_cycle() {
        let oct = octahedron_boundary();
        let lk = oct.link(&[0]).unwrap();
        assert_eq!(lk.f_vector(), FVector(vec![4, 4]));
        assert!(link_is_single_cycle(&lk));
    }

    #[test]
    fn link_of_missing_face_errors() {
        let oct = octahedron_boundary();
        // 0 and 1 are antipodal, not an edge.
        assert!(matches!(
            oct.link(&[0, 1]),
            Err(ComplexError::FaceNotPresent(_))
        ));
    }

    #[test]
    fn pseudomanifold_checks() {
        assert!(boundary_of_simplex(4).is_closed_pseudomanifold(3).unwrap());
        let two = boundary_of_simplex(3).disjoint_union(&boundary_of_simplex(3));
        assert!(!two.is_closed_pseudomanifold(2).unwrap());
        // A solid tetrahedron has boundary triangles in one facet.
        let solid = SimplicialComplex::from_facets(4, vec![vec![0, 1, 2, 3]]);
        assert!(!solid.is_closed_pseudomanifold(3).unwrap());
    }

    #[test]
    fn manifold_check_accepts_sphere_rejects_torus_suspension() {
        assert!(boundary_of_simplex(4).is_manifold_3().unwrap());
        let sus = suspension(&csaszar_torus());
        // Apex links are tori (chi = 0), so this closed pseudomanifold is
        // not a manifold.
        assert!(sus.is_closed_pseudomanifold(3).unwrap());
        assert!(!sus.is_manifold_3().unwrap());
        let apex = sus.vertex_by_label("north").unwrap();
        let lk = sus.link(&[apex]).unwrap();
        assert_eq!(lk.euler_characteristic(), 0);
    }

    #[test]
    fn torus_fixtures_are_closed_surfaces() {
        for t in [csaszar_torus(), grid_torus(3, 3), grid_torus(4, 5)] {
            assert!(t.is_closed_surface().unwrap());
            assert_eq!(t.euler_characteristic(), 0);
            assert!(t.orient_surface().is_ok());
        }
    }

    #[test]
    fn orientation_is_coherent_on_sphere() {
        let c = boundary_of_simplex(3);
        let sign = c.orient_surface().unwrap();
        // Every edge must be traversed once in each direction.
        let mut darts: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for (t, f) in c.facets().iter().enumerate() {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])] {
                let d = edge_direction(f, sign[t], (a, b));
                *darts.entry((a, b)).or_default() += d as i64;
            }
        }
        assert!(darts.values().all(|&v| v == 0));
    }
}
