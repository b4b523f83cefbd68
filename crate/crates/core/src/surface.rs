//! Homology-generator machinery on closed orientable surfaces: tree-cotree
//! bases with their dual cocycles, the intersection pairing via cup products
//! against the fundamental class, integer symplectic normalization, and the
//! curve-system operations the Heegaard assembly needs (rerouting to simple
//! cycles through a single basepoint, and doubling into parallel copies).
//!
//! Everything here is verified-output: each operation recomputes the pairing
//! of its result from scratch instead of trusting the construction.

use crate::error::SurfaceError;
use crate::simplicial::SimplicialComplex;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

type EdgeKey = (usize, usize);

fn key(a: usize, b: usize) -> EdgeKey {
    (a.min(b), a.max(b))
}

/// A closed walk in the 1-skeleton, as a cyclic vertex sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Curve {
    pub label: String,
    pub walk: Vec<usize>,
}

impl Curve {
    pub fn is_simple(&self) -> bool {
        let set: BTreeSet<usize> = self.walk.iter().copied().collect();
        set.len() == self.walk.len() && self.walk.len() >= 3
    }

    pub fn vertex_set(&self) -> BTreeSet<usize> {
        self.walk.iter().copied().collect()
    }

    pub fn edges(&self) -> Vec<EdgeKey> {
        let n = self.walk.len();
        (0..n)
            .map(|i| key(self.walk[i], self.walk[(i + 1) % n]))
            .collect()
    }

    pub fn reversed(&self) -> Curve {
        let mut w = self.walk.clone();
        w.reverse();
        Curve {
            label: self.label.clone(),
            walk: w,
        }
    }
}

/// Cycles in a surface 1-skeleton with their intersection-form data.
#[derive(Clone, Debug)]
pub struct CurveSystem {
    pub surface: SimplicialComplex,
    /// Common basepoint, set once the system has been rerouted.
    pub basepoint: Option<usize>,
    /// Interleaved order a_1, b_1, a_2, b_2, ... once symplectic.
    pub curves: Vec<Curve>,
    /// Signed crossing counts per pair, recomputed from the walks.
    pub pairing: Vec<Vec<i64>>,
}

/// Tree-cotree decomposition of an oriented closed surface with the derived
/// fundamental cycles, their dual cocycles, and the intersection pairing.
pub struct SurfaceHomology {
    pub genus: usize,
    /// Fundamental cycles as closed walks, one per leftover edge.
    pub cycles: Vec<Vec<usize>>,
    /// Dual cocycles, normalized so <c_i, z_j> = delta_ij.
    cocycles: Vec<BTreeMap<EdgeKey, i64>>,
    /// Triangle orientation signs relative to sorted vertex order.
    orientation: Vec<i8>,
    /// Intersection matrix of the fundamental basis.
    pub pairing: Vec<Vec<i64>>,
}

impl SurfaceHomology {
    pub fn new(s: &SimplicialComplex) -> Result<Self, SurfaceError> {
        if !matches!(s.is_closed_surface(), Ok(true)) {
            return Err(SurfaceError::NotASurface(
                "need a closed connected 2-manifold".into(),
            ));
        }
        let orientation = s.orient_surface()?;
        let chi = s.euler_characteristic();
        assert!(chi <= 2 && chi % 2 == 0);
        let genus = ((2 - chi) / 2) as usize;

        let verts = s.used_vertices();
        let edges: Vec<EdgeKey> = s.faces(1).into_iter().map(|e| (e[0], e[1])).collect();
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in &edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        for nb in adj.values_mut() {
            nb.sort_unstable();
        }

        // Primal spanning tree by BFS from the smallest vertex.
        let root = verts[0];
        let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
        let mut tree: BTreeSet<EdgeKey> = BTreeSet::new();
        let mut seen: BTreeSet<usize> = [root].into();
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[&u] {
                if seen.insert(v) {
                    parent.insert(v, u);
                    tree.insert(key(u, v));
                    queue.push_back(v);
                }
            }
        }
        assert_eq!(seen.len(), verts.len(), "surface 1-skeleton is connected");

        // Dual spanning tree (cotree) by BFS over triangles, avoiding tree
        // edges.
        let facets = s.facets();
        let mut edge_tris: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
        for (t, f) in facets.iter().enumerate() {
            for e in [key(f[0], f[1]), key(f[1], f[2]), key(f[0], f[2])] {
                edge_tris.entry(e).or_default().push(t);
            }
        }
        let mut cotree: BTreeSet<EdgeKey> = BTreeSet::new();
        let mut dual_parent: Vec<Option<(usize, EdgeKey)>> = vec![None; facets.len()];
        let mut dual_seen = vec![false; facets.len()];
        dual_seen[0] = true;
        let mut dq = VecDeque::from([0usize]);
        while let Some(t) = dq.pop_front() {
            let f = &facets[t];
            for e in [key(f[0], f[1]), key(f[1], f[2]), key(f[0], f[2])] {
                if tree.contains(&e) {
                    continue;
                }
                let pair = &edge_tris[&e];
                let other = if pair[0] == t { pair[1] } else { pair[0] };
                if !dual_seen[other] {
                    dual_seen[other] = true;
                    dual_parent[other] = Some((t, e));
                    cotree.insert(e);
                    dq.push_back(other);
                }
            }
        }
        assert!(dual_seen.iter().all(|&b| b), "dual graph is connected");

        let leftover: Vec<EdgeKey> = edges
            .iter()
            .copied()
            .filter(|e| !tree.contains(e) && !cotree.contains(e))
            .collect();
        assert_eq!(leftover.len(), 2 * genus, "tree-cotree leftover count");

        // Fundamental cycles: leftover edge plus the tree path closing it.
        let tree_path = |from: usize, to: usize| -> Vec<usize> {
            let chain = |mut v: usize| {
                let mut c = vec![v];
                while let Some(&p) = parent.get(&v) {
                    c.push(p);
                    v = p;
                }
                c
            };
            let (ca, cb) = (chain(from), chain(to));
            let sa: BTreeSet<usize> = ca.iter().copied().collect();
            let lca = *cb.iter().find(|v| sa.contains(v)).unwrap();
            let mut path: Vec<usize> = ca.iter().copied().take_while(|&v| v != lca).collect();
            path.push(lca);
            let tail: Vec<usize> = cb.iter().copied().take_while(|&v| v != lca).collect();
            path.extend(tail.into_iter().rev());
            path
        };
        let cycles: Vec<Vec<usize>> = leftover
            .iter()
            .map(|&(u, v)| {
                // closed walk: u -> v across the leftover edge, then back to
                // u in the tree; the final repeat of u is dropped.
                let mut w = vec![u];
                let p = tree_path(v, u);
                w.extend(p[..p.len() - 1].iter().copied());
                w
            })
            .collect();

        // Dual cocycles: the dual fundamental cycle of each leftover edge
        // with respect to the cotree, as signed crossing counts per edge.
        let left_of = |e: EdgeKey| -> usize {
            // the triangle whose coherent boundary traverses e low -> high
            let pair = &edge_tris[&e];
            for &t in pair {
                if triangle_darts(facets[t].as_slice(), orientation[t]).contains(&(e.0, e.1)) {
                    return t;
                }
            }
            unreachable!("one side traverses the edge forward")
        };
        let mut cocycles: Vec<BTreeMap<EdgeKey, i64>> = Vec::new();
        for &l in &leftover {
            let pair = &edge_tris[&l];
            // dual closed walk: cross l from pair[0] to pair[1], then return
            // along the dual-tree path from pair[1] to pair[0].
            let mut crossings: Vec<(usize, EdgeKey)> = vec![(pair[0], l)]; // (from-triangle, edge)
            let dual_chain = |mut t: usize| {
                let mut c: Vec<(usize, Option<EdgeKey>)> = vec![(t, None)];
                while let Some((p, e)) = dual_parent[t] {
                    c.push((p, Some(e)));
                    t = p;
                }
                c
            };
            let (ca, cb) = (dual_chain(pair[1]), dual_chain(pair[0]));
            let sa: BTreeSet<usize> = ca.iter().map(|&(t, _)| t).collect();
            let lca = cb.iter().map(|&(t, _)| t).find(|t| sa.contains(t)).unwrap();
            // climb pair[1] -> lca
            for w in ca.windows(2) {
                if w[0].0 == lca {
                    break;
                }
                crossings.push((w[0].0, w[1].1.unwrap()));
            }
            // descend lca -> pair[0] (reverse of pair[0] -> lca climb)
            let mut down: Vec<(usize, EdgeKey)> = Vec::new();
            for w in cb.windows(2) {
                if w[0].0 == lca {
                    break;
                }
                down.push((w[1].0, w[1].1.unwrap()));
            }
            crossings.extend(down.into_iter().rev());
            let mut c: BTreeMap<EdgeKey, i64> = BTreeMap::new();
            for (from, e) in crossings {
                let sign = if left_of(e) == from { 1 } else { -1 };
                *c.entry(e).or_default() += sign;
            }
            c.retain(|_, v| *v != 0);
            cocycles.push(c);
        }

        // Normalize: <c_i, z_j> must be the identity.
        for i in 0..cocycles.len() {
            let d = eval_cocycle(&cocycles[i], &cycles[i]);
            assert!(d.abs() == 1, "dual cocycle evaluates to +-1 on its cycle");
            if d < 0 {
                for v in cocycles[i].values_mut() {
                    *v = -*v;
                }
            }
        }
        for (i, c) in cocycles.iter().enumerate() {
            for (j, z) in cycles.iter().enumerate() {
                debug_assert_eq!(
                    eval_cocycle(c, z),
                    i64::from(i == j),
                    "cocycle/cycle duality"
                );
            }
            debug_assert!(cocycle_is_closed(c, facets), "dual walk is a cocycle");
        }

        // Cup-product matrix Q_ij = <c_i u c_j, [K]>; the intersection
        // pairing of the fundamental basis is S = Q^{-1} up to the global
        // sign fixed by the orientation choice, which downstream
        // normalization absorbs.
        let n = cocycles.len();
        let mut q = vec![vec![0i64; n]; n];
        for (t, f) in facets.iter().enumerate() {
            let (v0, v1, v2) = (f[0], f[1], f[2]);
            let sigma = orientation[t] as i64;
            for i in 0..n {
                let a = dart_value(&cocycles[i], v0, v1);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let b = dart_value(&cocycles[j], v1, v2);
                    q[i][j] += sigma * a * b;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_eq!(q[i][j], -q[j][i], "cup pairing is antisymmetric");
            }
        }
        let pairing = if n == 0 {
            Vec::new()
        } else {
            invert_unimodular(&q).ok_or(SurfaceError::DegeneratePairing)?
        };

        Ok(SurfaceHomology {
            genus,
            cycles,
            cocycles,
            orientation,
            pairing,
        })
    }

    /// Coordinates of a closed walk in the fundamental basis.
    pub fn coords(&self, walk: &[usize]) -> Vec<i64> {
        self.cocycles.iter().map(|c| eval_cocycle(c, walk)).collect()
    }

    /// Signed crossing matrix of the given closed walks.
    pub fn pairing_of(&self, walks: &[&[usize]]) -> Vec<Vec<i64>> {
        let xs: Vec<Vec<i64>> = walks.iter().map(|w| self.coords(w)).collect();
        let n = walks.len();
        let g2 = self.cycles.len();
        let mut out = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i64;
                for r in 0..g2 {
                    for c in 0..g2 {
                        acc += xs[i][r] * self.pairing[r][c] * xs[j][c];
                    }
                }
                out[i][j] = acc;
            }
        }
        out
    }

    pub fn orientation(&self) -> &[i8] {
        &self.orientation
    }
}

/// Coherent boundary darts of a triangle given its sign.
fn triangle_darts(f: &[usize], sign: i8) -> [(usize, usize); 3] {
    if sign == 1 {
        [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])]
    } else {
        [(f[1], f[0]), (f[2], f[1]), (f[0], f[2])]
    }
}

fn dart_value(c: &BTreeMap<EdgeKey, i64>, a: usize, b: usize) -> i64 {
    let v = c.get(&key(a, b)).copied().unwrap_or(0);
    if a < b {
        v
    } else {
        -v
    }
}

fn eval_cocycle(c: &BTreeMap<EdgeKey, i64>, walk: &[usize]) -> i64 {
    let n = walk.len();
    (0..n)
        .map(|i| dart_value(c, walk[i], walk[(i + 1) % n]))
        .sum()
}

fn cocycle_is_closed(c: &BTreeMap<EdgeKey, i64>, facets: &[Vec<usize>]) -> bool {
    facets.iter().all(|f| {
        dart_value(c, f[0], f[1]) + dart_value(c, f[1], f[2]) - dart_value(c, f[0], f[2]) == 0
    })
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd_i128(b, a % b)
    }
}

/// Exact inverse of a unimodular integer matrix (Gauss-Jordan over i128
/// rationals). None when singular or when the inverse is not integral.
fn invert_unimodular(m: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let n = m.len();
    #[derive(Clone, Copy)]
    struct Rat {
        n: i128,
        d: i128,
    }
    impl Rat {
        fn new(n: i128, d: i128) -> Rat {
            assert!(d != 0);
            let g = gcd_i128(n.abs(), d.abs()).max(1);
            let s = if d < 0 { -1 } else { 1 };
            Rat {
                n: s * n / g,
                d: s * d / g,
            }
        }
        fn sub_mul(self, q: Rat, o: Rat) -> Rat {
            Rat::new(self.n * q.d * o.d - q.n * o.n * self.d, self.d * q.d * o.d)
        }
        fn div(self, o: Rat) -> Rat {
            Rat::new(self.n * o.d, self.d * o.n)
        }
        fn is_zero(self) -> bool {
            self.n == 0
        }
    }
    let mut a: Vec<Vec<Rat>> = (0..n)
        .map(|i| {
            (0..2 * n)
                .map(|j| {
                    if j < n {
                        Rat::new(m[i][j] as i128, 1)
                    } else {
                        Rat::new(i128::from(j - n == i), 1)
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let pv = a[col][col];
        for j in 0..2 * n {
            a[col][j] = a[col][j].div(pv);
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let q = a[r][col];
            for j in 0..2 * n {
                a[r][j] = a[r][j].sub_mul(q, a[col][j]);
            }
        }
    }
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let r = a[i][n + j];
            if r.d != 1 {
                return None;
            }
            out[i][j] = i64::try_from(r.n).ok()?;
        }
    }
    Some(out)
}

/// Unnormalized homology basis from the tree-cotree decomposition: 2g
/// fundamental cycles with their recomputed intersection matrix.
pub fn homology_basis(s: &SimplicialComplex) -> Result<CurveSystem, SurfaceError> {
    let h = SurfaceHomology::new(s)?;
    let curves: Vec<Curve> = h
        .cycles
        .iter()
        .enumerate()
        .map(|(i, w)| Curve {
            label: format!("z{}", i + 1),
            walk: w.clone(),
        })
        .collect();
    let walks: Vec<&[usize]> = curves.iter().map(|c| c.walk.as_slice()).collect();
    let pairing = h.pairing_of(&walks);
    Ok(CurveSystem {
        surface: s.clone(),
        basepoint: None,
        curves,
        pairing,
    })
}

/// Integer congruence U S U^T = J on an antisymmetric unimodular matrix,
/// J the block diagonal of [[0,1],[-1,0]]. Returns U.
fn symplectic_reduce(s0: &[Vec<i64>]) -> Result<Vec<Vec<i64>>, SurfaceError> {
    let n = s0.len();
    assert!(n % 2 == 0);
    let mut m: Vec<Vec<i128>> = s0
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let mut u: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect();

    fn row_add(m: &mut [Vec<i128>], u: &mut [Vec<i128>], dst: usize, src: usize, q: i128) {
        let n = m.len();
        for j in 0..n {
            let v = m[src][j];
            m[dst][j] += q * v;
        }
        for row in m.iter_mut() {
            let v = row[src];
            row[dst] += q * v;
        }
        for j in 0..n {
            let v = u[src][j];
            u[dst][j] += q * v;
        }
    }
    fn row_swap(m: &mut Vec<Vec<i128>>, u: &mut [Vec<i128>], a: usize, b: usize) {
        m.swap(a, b);
        for row in m.iter_mut() {
            row.swap(a, b);
        }
        u.swap(a, b);
    }
    fn row_neg(m: &mut [Vec<i128>], u: &mut [Vec<i128>], a: usize) {
        let n = m.len();
        for j in 0..n {
            m[a][j] = -m[a][j];
        }
        for row in m.iter_mut() {
            row[a] = -row[a];
        }
        for j in 0..n {
            u[a][j] = -u[a][j];
        }
    }

    for k in (0..n).step_by(2) {
        loop {
            // Bring a minimal nonzero entry of the working block to (k, k+1).
            let mut best: Option<(usize, usize)> = None;
            for i in k..n {
                for j in i + 1..n {
                    if m[i][j] != 0
                        && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return Err(SurfaceError::DegeneratePairing);
            };
            if bi != k {
                row_swap(&mut m, &mut u, bi, k);
            }
            let bj = if bj == k { bi } else { bj };
            if bj != k + 1 {
                row_swap(&mut m, &mut u, bj, k + 1);
            }
            // Sweep the pivot pair's row/column entries.
            let mut clean = true;
            for r in k + 2..n {
                if m[k + 1][r] != 0 {
                    let q = -div_round(m[k + 1][r], m[k + 1][k]);
                    row_add(&mut m, &mut u, r, k, q);
                    clean &= m[k + 1][r] == 0;
                }
                if m[k][r] != 0 {
                    let q = -div_round(m[k][r], m[k][k + 1]);
                    row_add(&mut m, &mut u, r, k + 1, q);
                    clean &= m[k][r] == 0;
                }
            }
            if clean && m[k][k + 1].abs() == 1 {
                break;
            }
            if clean {
                // Pivot > 1 with clean rows cannot happen for a unimodular
                // form; treat as degenerate input.
                return Err(SurfaceError::DegeneratePairing);
            }
        }
        if m[k][k + 1] == -1 {
            row_neg(&mut m, &mut u, k);
        }
        assert_eq!(m[k][k + 1], 1);
    }
    for i in 0..n {
        for j in 0..n {
            let want = if i % 2 == 0 && j == i + 1 {
                1
            } else if i % 2 == 1 && j + 1 == i {
                -1
            } else {
                0
            };
            if m[i][j] != want {
                return Err(SurfaceError::DegeneratePairing);
            }
        }
    }
    Ok(u
        .into_iter()
        .map(|r| r.into_iter().map(|v| i64::try_from(v).unwrap()).collect())
        .collect())
}

fn div_round(a: i128, b: i128) -> i128 {
    let q = a / b;
    let r = a - q * b;
    if 2 * r.abs() > b.abs() {
        q + if (r < 0) == (b < 0) { 1 } else { -1 }
    } else {
        q
    }
}

/// Realizes an integer 1-chain as a single closed walk: Eulerian circuit of
/// the dart multigraph, with doubled connector paths joining components
/// (homologically invisible).
fn realize_chain(s: &SimplicialComplex, chain: &BTreeMap<EdgeKey, i64>) -> Vec<usize> {
    let mut darts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    fn add_dart(darts: &mut BTreeMap<usize, Vec<usize>>, a: usize, b: usize) {
        darts.entry(a).or_default().push(b);
        darts.entry(b).or_default();
    }
    for (&(a, b), &v) in chain {
        for _ in 0..v.unsigned_abs() {
            if v > 0 {
                add_dart(&mut darts, a, b);
            } else {
                add_dart(&mut darts, b, a);
            }
        }
    }
    assert!(!darts.is_empty(), "cannot realize the empty chain");
    // Components of the dart graph (as undirected reachability).
    let mut undirected: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (&a, heads) in &darts {
        for &b in heads {
            undirected.entry(a).or_default().insert(b);
            undirected.entry(b).or_default().insert(a);
        }
    }
    let mut comp: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cid = 0;
    for &v in undirected.keys() {
        if comp.contains_key(&v) {
            continue;
        }
        let mut stack = vec![v];
        comp.insert(v, cid);
        while let Some(x) = stack.pop() {
            for &w in &undirected[&x] {
                if !comp.contains_key(&w) {
                    comp.insert(w, cid);
                    stack.push(w);
                }
            }
        }
        cid += 1;
    }
    if cid > 1 {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for e in s.faces(1) {
            adj.entry(e[0]).or_default().push(e[1]);
            adj.entry(e[1]).or_default().push(e[0]);
        }
        for nb in adj.values_mut() {
            nb.sort_unstable();
        }
        for c in 1..cid {
            let start = *comp.iter().find(|&(_, &cc)| cc == 0).unwrap().0;
            let target: BTreeSet<usize> = comp
                .iter()
                .filter(|&(_, &cc)| cc == c)
                .map(|(&v, _)| v)
                .collect();
            let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
            let mut q = VecDeque::from([start]);
            let mut seen: BTreeSet<usize> = [start].into();
            let mut hit = None;
            'bfs: while let Some(u) = q.pop_front() {
                for &w in adj.get(&u).into_iter().flatten() {
                    if seen.insert(w) {
                        prev.insert(w, u);
                        if target.contains(&w) {
                            hit = Some(w);
                            break 'bfs;
                        }
                        q.push_back(w);
                    }
                }
            }
            let mut v = hit.expect("skeleton is connected");
            while v != start {
                let p = prev[&v];
                add_dart(&mut darts, p, v);
                add_dart(&mut darts, v, p);
                comp.insert(v, 0);
                v = p;
            }
        }
    }
    // Hierholzer circuit, smallest head first.
    for heads in darts.values_mut() {
        heads.sort_unstable_by(|a, b| b.cmp(a)); // pop() yields smallest
    }
    let start = *darts
        .iter()
        .find(|(_, heads)| !heads.is_empty())
        .expect("chain has darts")
        .0;
    let mut stack = vec![start];
    let mut circuit = Vec::new();
    while let Some(&u) = stack.last() {
        match darts.get_mut(&u).and_then(|h| h.pop()) {
            Some(w) => stack.push(w),
            None => circuit.push(stack.pop().unwrap()),
        }
    }
    circuit.reverse();
    assert_eq!(circuit.first(), circuit.last(), "Eulerian circuit closes");
    circuit.pop();
    circuit
}

/// Integer change of basis bringing the intersection form to the standard
/// symplectic form; curves are realized as closed walks of the new classes.
///
/// The input system only supplies the surface: the basis is rebuilt from the
/// tree-cotree decomposition, so non-basis inputs (e.g. a doubled class with
/// crossing number 2) still yield a genuine unimodular symplectic basis.
pub fn symplectic_basis(cs: &CurveSystem) -> Result<CurveSystem, SurfaceError> {
    let s = &cs.surface;
    let h = SurfaceHomology::new(s)?;
    if h.genus == 0 {
        return Ok(CurveSystem {
            surface: s.clone(),
            basepoint: None,
            curves: Vec::new(),
            pairing: Vec::new(),
        });
    }
    let u = symplectic_reduce(&h.pairing)?;
    let mut curves = Vec::new();
    for (i, urow) in u.iter().enumerate() {
        let mut chain: BTreeMap<EdgeKey, i64> = BTreeMap::new();
        for (j, &coef) in urow.iter().enumerate() {
            if coef == 0 {
                continue;
            }
            let w = &h.cycles[j];
            for t in 0..w.len() {
                let (a, b) = (w[t], w[(t + 1) % w.len()]);
                *chain.entry(key(a, b)).or_default() += if a < b { coef } else { -coef };
            }
        }
        chain.retain(|_, v| *v != 0);
        let walk = realize_chain(s, &chain);
        let label = if i % 2 == 0 {
            format!("a{}", i / 2 + 1)
        } else {
            format!("b{}", i / 2 + 1)
        };
        curves.push(Curve { label, walk });
    }
    let walks: Vec<&[usize]> = curves.iter().map(|c| c.walk.as_slice()).collect();
    let pairing = h.pairing_of(&walks);
    assert_eq!(pairing, standard_j(h.genus), "realized basis is symplectic");
    Ok(CurveSystem {
        surface: s.clone(),
        basepoint: None,
        curves,
        pairing,
    })
}

/// The standard symplectic matrix in interleaved order a1, b1, a2, b2, ...
pub fn standard_j(genus: usize) -> Vec<Vec<i64>> {
    let n = 2 * genus;
    let mut j = vec![vec![0i64; n]; n];
    for k in 0..genus {
        j[2 * k][2 * k + 1] = 1;
        j[2 * k + 1][2 * k] = -1;
    }
    j
}

/// Cyclic order of the neighbors of `v` (its link cycle), deterministic
/// start and direction.
pub fn link_cycle(s: &SimplicialComplex, v: usize) -> Vec<usize> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for f in s.facets() {
        if let Some(p) = f.iter().position(|&x| x == v) {
            let mut others: Vec<usize> = f.clone();
            others.remove(p);
            adj.entry(others[0]).or_default().push(others[1]);
            adj.entry(others[1]).or_default().push(others[0]);
        }
    }
    let start = *adj.keys().next().expect("vertex has neighbors");
    let mut cycle = vec![start];
    let mut prev = start;
    let mut cur = *adj[&start].iter().min().unwrap();
    while cur != start {
        cycle.push(cur);
        let next = *adj[&cur].iter().find(|&&w| w != prev).unwrap();
        prev = cur;
        cur = next;
    }
    assert_eq!(cycle.len(), adj.len(), "link is a single cycle");
    cycle
}

/// The two arcs of v's link cycle strictly between the curve neighbors
/// `prev` and `next`.
fn link_arcs(
    s: &SimplicialComplex,
    v: usize,
    prev: usize,
    next: usize,
) -> (Vec<usize>, Vec<usize>) {
    let cyc = link_cycle(s, v);
    let n = cyc.len();
    let pp = cyc.iter().position(|&x| x == prev).unwrap();
    let pn = cyc.iter().position(|&x| x == next).unwrap();
    let mut arc1 = Vec::new();
    let mut i = (pp + 1) % n;
    while i != pn {
        arc1.push(cyc[i]);
        i = (i + 1) % n;
    }
    let mut arc2 = Vec::new();
    let mut i = (pn + 1) % n;
    while i != pp {
        arc2.push(cyc[i]);
        i = (i + 1) % n;
    }
    (arc1, arc2)
}

enum Target {
    AnyEssential,
    Coords(Vec<i64>),
}

/// Bounded deterministic search for simple cycles: shortest first, then
/// lexicographic by construction order.
struct CycleSearch<'a> {
    adj: BTreeMap<usize, Vec<usize>>,
    h: &'a SurfaceHomology,
    budget: u64,
}

impl<'a> CycleSearch<'a> {
    fn new(s: &SimplicialComplex, h: &'a SurfaceHomology, allowed: impl Fn(usize) -> bool) -> Self {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for e in s.faces(1) {
            if allowed(e[0]) && allowed(e[1]) {
                adj.entry(e[0]).or_default().push(e[1]);
                adj.entry(e[1]).or_default().push(e[0]);
            }
        }
        for nb in adj.values_mut() {
            nb.sort_unstable();
        }
        CycleSearch {
            adj,
            h,
            budget: 5_000_000,
        }
    }

    fn matches(&self, walk: &[usize], target: &Target) -> bool {
        let x = self.h.coords(walk);
        match target {
            Target::AnyEssential => x.iter().any(|&v| v != 0),
            Target::Coords(t) => x == *t || x.iter().zip(t).all(|(&a, &b)| a == -b),
        }
    }

    fn cycle_through(
        &mut self,
        seed: usize,
        target: &Target,
        max_len: usize,
    ) -> Option<Vec<usize>> {
        if !self.adj.contains_key(&seed) {
            return None;
        }
        for len in 3..=max_len {
            let mut path = vec![seed];
            let mut on_path: BTreeSet<usize> = [seed].into();
            if let Some(found) = self.dfs(seed, seed, len, &mut path, &mut on_path, target) {
                return Some(found);
            }
            if self.budget == 0 {
                return None;
            }
        }
        None
    }

    fn dfs(
        &mut self,
        seed: usize,
        cur: usize,
        remaining: usize,
        path: &mut Vec<usize>,
        on_path: &mut BTreeSet<usize>,
        target: &Target,
    ) -> Option<Vec<usize>> {
        if self.budget == 0 {
            return None;
        }
        self.budget -= 1;
        let nbs = self.adj.get(&cur)?.clone();
        if remaining == 1 {
            if nbs.binary_search(&seed).is_ok() && self.matches(path, target) {
                return Some(path.clone());
            }
            return None;
        }
        for nb in nbs {
            if on_path.contains(&nb) {
                continue;
            }
            path.push(nb);
            on_path.insert(nb);
            let hit = self.dfs(seed, nb, remaining - 1, path, on_path, target);
            path.pop();
            on_path.remove(&nb);
            if hit.is_some() {
                return hit;
            }
        }
        None
    }
}

/// Shortcuts a closed walk into a simple cycle keeping a nonzero homology
/// class: split at a repeated vertex and keep a nonzero-class subloop.
fn simplify_essential(h: &SurfaceHomology, walk: &[usize]) -> Option<Vec<usize>> {
    let mut w = walk.to_vec();
    loop {
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        let mut split: Option<(usize, usize)> = None;
        for (i, &v) in w.iter().enumerate() {
            if let Some(&j) = seen.get(&v) {
                split = Some((j, i));
                break;
            }
            seen.insert(v, i);
        }
        let Some((j, i)) = split else {
            if w.len() >= 3 && h.coords(&w).iter().any(|&v| v != 0) {
                return Some(w);
            }
            return None;
        };
        let inner: Vec<usize> = w[j..i].to_vec();
        let outer: Vec<usize> = w[..j].iter().chain(w[i..].iter()).copied().collect();
        let keep_inner = inner.len() >= 3 && h.coords(&inner).iter().any(|&v| v != 0);
        if keep_inner {
            w = inner;
        } else if outer.len() >= 3 {
            w = outer;
        } else {
            return None;
        }
    }
}

/// Refines the surface so the generators become simple cycles pairwise
/// meeting exactly in one basepoint, with the pairing re-verified.
///
/// Genus 0 returns the empty system. Genus 1 is constructed directly: any
/// two simple cycles crossing transversally in a single vertex form a
/// symplectic basis of the torus, so a bounded search suffices. Genus >= 2
/// would need a canonical polygonal schema to prescribe the crossing
/// pattern at the basepoint and is reported as ReroutingFailed.
pub fn reroute_disjoint(
    cs: &CurveSystem,
) -> Result<(SimplicialComplex, CurveSystem), SurfaceError> {
    let s = &cs.surface;
    let h = SurfaceHomology::new(s)?;
    if h.genus == 0 {
        return Ok((
            s.clone(),
            CurveSystem {
                surface: s.clone(),
                basepoint: None,
                curves: Vec::new(),
                pairing: Vec::new(),
            },
        ));
    }
    if h.genus >= 2 {
        return Err(SurfaceError::ReroutingFailed(format!(
            "genus {} one-basepoint systems need a canonical polygonal schema; \
             only genus <= 1 is constructed",
            h.genus
        )));
    }

    // Fast path: the input pair may already be valid.
    if cs.curves.len() == 2 {
        if let Some(sys) = accept_pair(s, &h, &cs.curves[0], &cs.curves[1]) {
            return Ok((s.clone(), sys));
        }
    }

    // Curve a: a short essential simple cycle, searched; the simplified
    // fundamental cycle is the fallback.
    let verts = s.used_vertices();
    let mut a_walk: Option<Vec<usize>> = None;
    {
        let mut search = CycleSearch::new(s, &h, |_| true);
        for &seed in &verts {
            if let Some(w) = search.cycle_through(seed, &Target::AnyEssential, 8) {
                a_walk = Some(w);
                break;
            }
        }
    }
    let a_walk = match a_walk {
        Some(w) => w,
        None => simplify_essential(&h, &h.cycles[0])
            .or_else(|| simplify_essential(&h, &h.cycles[1]))
            .ok_or_else(|| {
                SurfaceError::ReroutingFailed("no essential simple cycle found".into())
            })?,
    };
    let a_set: BTreeSet<usize> = a_walk.iter().copied().collect();

    // Basepoint: maximal degree among a's vertices, ties by label; curve b
    // leaves through one link arc and returns through the other, forcing a
    // single transversal crossing.
    let edges = s.faces(1);
    let degree = |v: usize| edges.iter().filter(|e| e[0] == v || e[1] == v).count();
    let mut candidates: Vec<usize> = a_walk.clone();
    candidates.sort_by_key(|&v| (usize::MAX - degree(v), s.label(v).to_string()));
    for &x in &candidates {
        let pos = a_walk.iter().position(|&v| v == x).unwrap();
        let n = a_walk.len();
        let prev = a_walk[(pos + n - 1) % n];
        let next = a_walk[(pos + 1) % n];
        let (arc1, arc2) = link_arcs(s, x, prev, next);
        let starts: Vec<usize> = arc1.iter().copied().filter(|v| !a_set.contains(v)).collect();
        let ends: Vec<usize> = arc2.iter().copied().filter(|v| !a_set.contains(v)).collect();
        if starts.is_empty() || ends.is_empty() {
            continue;
        }
        if let Some(bw) = path_between(s, &starts, &ends, &a_set) {
            let mut b_walk = vec![x];
            b_walk.extend(bw);
            let a = Curve {
                label: "a1".into(),
                walk: a_walk.clone(),
            };
            let b = Curve {
                label: "b1".into(),
                walk: b_walk,
            };
            if let Some(sys) = accept_pair(s, &h, &a, &b) {
                return Ok((s.clone(), sys));
            }
        }
    }
    Err(SurfaceError::ReroutingFailed(
        "no transversal partner cycle through any basepoint candidate".into(),
    ))
}

/// Simple path from any of `starts` to any of `ends` avoiding `forbidden`.
fn path_between(
    s: &SimplicialComplex,
    starts: &[usize],
    ends: &[usize],
    forbidden: &BTreeSet<usize>,
) -> Option<Vec<usize>> {
    let end_set: BTreeSet<usize> = ends.iter().copied().collect();
    if let Some(&v) = starts.iter().find(|v| end_set.contains(v)) {
        return Some(vec![v]);
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in s.faces(1) {
        if !forbidden.contains(&e[0]) && !forbidden.contains(&e[1]) {
            adj.entry(e[0]).or_default().push(e[1]);
            adj.entry(e[1]).or_default().push(e[0]);
        }
    }
    for nb in adj.values_mut() {
        nb.sort_unstable();
    }
    let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
    let mut seen: BTreeSet<usize> = starts.iter().copied().collect();
    let mut q: VecDeque<usize> = starts.iter().copied().collect();
    while let Some(u) = q.pop_front() {
        for &w in adj.get(&u).into_iter().flatten() {
            if seen.insert(w) {
                prev.insert(w, u);
                if end_set.contains(&w) {
                    let mut path = vec![w];
                    let mut v = w;
                    while let Some(&p) = prev.get(&v) {
                        path.push(p);
                        v = p;
                    }
                    path.reverse();
                    return Some(path);
                }
                q.push_back(w);
            }
        }
    }
    None
}

/// Accepts (a, b) when both are simple, they share exactly one vertex, and
/// the recomputed pairing normalizes to the standard form (reversing b when
/// the crossing sign is negative).
fn accept_pair(
    s: &SimplicialComplex,
    h: &SurfaceHomology,
    a: &Curve,
    b: &Curve,
) -> Option<CurveSystem> {
    if !a.is_simple() || !b.is_simple() {
        return None;
    }
    let inter: Vec<usize> = a.vertex_set().intersection(&b.vertex_set()).copied().collect();
    if inter.len() != 1 {
        return None;
    }
    let p = h.pairing_of(&[&a.walk, &b.walk]);
    if p[0][1].abs() != 1 {
        return None;
    }
    let mut a = a.clone();
    let mut b = if p[0][1] == 1 { b.clone() } else { b.reversed() };
    a.label = "a1".into();
    b.label = "b1".into();
    let pairing = h.pairing_of(&[&a.walk, &b.walk]);
    assert_eq!(pairing, standard_j(1));
    Some(CurveSystem {
        surface: s.clone(),
        basepoint: Some(inter[0]),
        curves: vec![a, b],
        pairing,
    })
}

/// A doubled curve system: each generator plus a homologous disjoint
/// parallel copy, all in the (possibly refined) triangulation T'.
#[derive(Clone, Debug)]
pub struct DoubledSystem {
    pub surface: SimplicialComplex,
    pub basepoint: usize,
    /// Pairs in the curve order of the input system: (original, copy).
    pub pairs: Vec<(Curve, Curve)>,
}

impl DoubledSystem {
    pub fn all_curves(&self) -> Vec<&Curve> {
        self.pairs.iter().flat_map(|(a, b)| [a, b]).collect()
    }

    /// Curves whose label starts with the given family prefix ("a" or "b").
    pub fn family(&self, prefix: &str) -> Vec<&Curve> {
        self.all_curves()
            .into_iter()
            .filter(|c| c.label.starts_with(prefix))
            .collect()
    }
}

/// Facet -> polygon token, carried through refinements so the 3-dimensional
/// assembly can match surface triangles to the base polygons.
pub type TriangleTags = BTreeMap<Vec<usize>, String>;

/// Subdivides every triangle at a new interior vertex (1 -> 3). No edge is
/// subdivided, so cells glued along existing edges stay intact; tags are
/// inherited by the three children.
pub fn barycentric_enrich(
    s: &SimplicialComplex,
    tags: &TriangleTags,
) -> (SimplicialComplex, TriangleTags) {
    let mut labels: Vec<String> = s.labels().to_vec();
    let mut facets: Vec<Vec<usize>> = Vec::new();
    let mut out_tags = TriangleTags::new();
    for f in s.facets() {
        let c = labels.len();
        labels.push(format!("d{c}"));
        let tag = tags.get(f).cloned();
        for (x, y) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])] {
            if let Some(t) = &tag {
                out_tags.insert(sorted3(x, y, c), t.clone());
            }
            facets.push(vec![x, y, c]);
        }
    }
    (SimplicialComplex::new(labels, facets), out_tags)
}

fn sorted3(a: usize, b: usize, c: usize) -> Vec<usize> {
    let mut v = vec![a, b, c];
    v.sort_unstable();
    v
}

/// Doubles each generator to a parallel copy: a vertex-disjoint simple cycle
/// in the same homology class, found in the skeleton and, when necessary,
/// after interior enrichment passes. Family disjointness and class
/// preservation are verified, and each doubled pair must bound an annulus.
pub fn double_curves(
    cs: &CurveSystem,
    tags: &TriangleTags,
) -> Result<(SimplicialComplex, TriangleTags, DoubledSystem), SurfaceError> {
    let basepoint = cs
        .basepoint
        .ok_or_else(|| SurfaceError::ReroutingFailed("doubling needs a rerouted system".into()))?;
    let mut surface = cs.surface.clone();
    let mut tags = tags.clone();
    let mut pairs: Vec<(Curve, Curve)> = Vec::new();

    for curve in &cs.curves {
        let mut found: Option<Curve> = None;
        for round in 0..3 {
            let h = SurfaceHomology::new(&surface)?;
            let want = h.coords(&curve.walk);
            let family_used: BTreeSet<usize> = pairs
                .iter()
                .flat_map(|(o, c)| [o, c])
                .filter(|c| c.label.starts_with(&curve.label[..1]))
                .flat_map(|c| c.walk.iter().copied())
                .collect();
            let own: BTreeSet<usize> = curve.walk.iter().copied().collect();
            let forbidden: BTreeSet<usize> = own.union(&family_used).copied().collect();
            let mut search = CycleSearch::new(&surface, &h, |v| !forbidden.contains(&v));
            let verts = surface.used_vertices();
            let max_len = 8 + 6 * round;
            for &seed in verts.iter().filter(|v| !forbidden.contains(v)) {
                if let Some(w) = search.cycle_through(seed, &Target::Coords(want.clone()), max_len)
                {
                    found = Some(Curve {
                        label: format!("{}.1", curve.label),
                        walk: w,
                    });
                    break;
                }
            }
            if found.is_some() {
                break;
            }
            let (s2, t2) = barycentric_enrich(&surface, &tags);
            surface = s2;
            tags = t2;
        }
        let copy = found.ok_or_else(|| {
            SurfaceError::ReroutingFailed(format!(
                "no parallel copy of {} found after enrichment",
                curve.label
            ))
        })?;
        pairs.push((
            Curve {
                label: format!("{}.0", curve.label),
                walk: curve.walk.clone(),
            },
            copy,
        ));
    }

    // Verification: classes preserved, annuli present, families disjoint.
    let h = SurfaceHomology::new(&surface)?;
    for (orig, copy) in &pairs {
        let xo = h.coords(&orig.walk);
        let xc = h.coords(&copy.walk);
        let same = xo == xc;
        let neg = xo.iter().zip(&xc).all(|(&a, &b)| a == -b);
        if !(same || neg) {
            return Err(SurfaceError::ReroutingFailed(format!(
                "copy of {} drifted to another homology class",
                orig.label
            )));
        }
        annulus_between(&surface, orig, copy)?;
    }
    for prefix in ["a", "b"] {
        let fam: Vec<&Curve> = pairs
            .iter()
            .flat_map(|(o, c)| [o, c])
            .filter(|c| c.label.starts_with(prefix))
            .collect();
        for (i, x) in fam.iter().enumerate() {
            for y in fam.iter().skip(i + 1) {
                if x.vertex_set().intersection(&y.vertex_set()).next().is_some() {
                    return Err(SurfaceError::ReroutingFailed(format!(
                        "family curves {} and {} intersect",
                        x.label, y.label
                    )));
                }
            }
        }
    }

    Ok((
        surface.clone(),
        tags,
        DoubledSystem {
            surface,
            basepoint,
            pairs,
        },
    ))
}

/// Cuts the surface along a pair of disjoint homologous cycles and returns
/// (strip triangles, remaining triangles), the strip being the smaller
/// component; the strip must be an annulus (chi = 0).
pub fn annulus_between(
    s: &SimplicialComplex,
    orig: &Curve,
    copy: &Curve,
) -> Result<(Vec<Vec<usize>>, Vec<Vec<usize>>), SurfaceError> {
    let comps = cut_components(s, &[orig, copy]);
    if comps.len() != 2 {
        return Err(SurfaceError::ReroutingFailed(format!(
            "cutting along {} and {} gave {} pieces, expected 2",
            orig.label,
            copy.label,
            comps.len()
        )));
    }
    let mut comps = comps;
    comps.sort_by(|a, b| (a.len(), a.first()).cmp(&(b.len(), b.first())));
    let strip = comps[0].clone();
    let piece = SimplicialComplex::new(s.labels().to_vec(), strip.clone());
    if piece.euler_characteristic() != 0 {
        return Err(SurfaceError::ReroutingFailed(format!(
            "strip between {} and {} is not an annulus",
            orig.label, copy.label
        )));
    }
    Ok((strip, comps[1].clone()))
}

/// Connected components of the facet set when adjacency across the curves'
/// edges is blocked. Components are returned as facet lists.
pub fn cut_components(s: &SimplicialComplex, curves: &[&Curve]) -> Vec<Vec<Vec<usize>>> {
    let blocked: BTreeSet<EdgeKey> = curves.iter().flat_map(|c| c.edges()).collect();
    let facets = s.facets();
    let mut edge_tris: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (t, f) in facets.iter().enumerate() {
        for e in [key(f[0], f[1]), key(f[1], f[2]), key(f[0], f[2])] {
            edge_tris.entry(e).or_default().push(t);
        }
    }
    let mut comp = vec![usize::MAX; facets.len()];
    let mut cid = 0;
    for t0 in 0..facets.len() {
        if comp[t0] != usize::MAX {
            continue;
        }
        comp[t0] = cid;
        let mut stack = vec![t0];
        while let Some(t) = stack.pop() {
            let f = &facets[t];
            for e in [key(f[0], f[1]), key(f[1], f[2]), key(f[0], f[2])] {
                if blocked.contains(&e) {
                    continue;
                }
                for &o in &edge_tris[&e] {
                    if comp[o] == usize::MAX {
                        comp[o] = cid;
                        stack.push(o);
                    }
                }
            }
        }
        cid += 1;
    }
    let mut out = vec![Vec::new(); cid];
    for (t, &c) in comp.iter().enumerate() {
        out[c].push(facets[t].clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplicial::{boundary_of_simplex, csaszar_torus, grid_torus};

    #[test]
    fn basis_on_sphere_is_empty() {
        let cs = homology_basis(&boundary_of_simplex(3)).unwrap();
        assert!(cs.curves.is_empty());
    }

    #[test]
    fn torus_basis_has_crossing_one() {
        for t in [csaszar_torus(), grid_torus(3, 3), grid_torus(4, 5)] {
            let cs = homology_basis(&t).unwrap();
            assert_eq!(cs.curves.len(), 2);
            // The intersection form of a basis of H_1(T^2) is unimodular.
            let d = cs.pairing[0][1];
            assert_eq!(d.abs(), 1);
            assert_eq!(cs.pairing[1][0], -d);
            assert_eq!(cs.pairing[0][0], 0);
            assert_eq!(cs.pairing[1][1], 0);
        }
    }

    #[test]
    fn grid_torus_explicit_crossing_oracle() {
        // Row cycle (0,1,2) and column cycle (0,3,6) on the 3x3 grid torus
        // meet exactly at vertex 0, and b's link positions interleave a's,
        // so the signed crossing number is +-1. This pins the cup-product
        // pairing against a hand-checkable instance.
        let t = grid_torus(3, 3);
        let h = SurfaceHomology::new(&t).unwrap();
        let a = vec![0usize, 1, 2];
        let b = vec![0usize, 3, 6];
        let cyc = link_cycle(&t, 0);
        let pos = |v: usize| cyc.iter().position(|&x| x == v).unwrap();
        let (lo, hi) = (pos(1).min(pos(2)), pos(1).max(pos(2)));
        let inside = |p: usize| p > lo && p < hi;
        assert_ne!(inside(pos(3)), inside(pos(6)));
        let p = h.pairing_of(&[&a, &b]);
        assert_eq!(p[0][1].abs(), 1);
        assert_eq!(p[1][0], -p[0][1]);
        assert_eq!(p[0][0], 0);
    }

    #[test]
    fn genus_10_heffter_pairing_reduces_to_standard_form() {
        let f = crate::field::make_field(3, 2, Some(&[2, 1, 1])).unwrap();
        let spec = crate::heffter::HeffterSpec::new(f.clone(), f.element(&[2, 2])).unwrap();
        let t = crate::heffter::heffter_triangulation(&spec);
        let cs = homology_basis(&t).unwrap();
        assert_eq!(cs.curves.len(), 20);
        let sym = symplectic_basis(&cs).unwrap();
        assert_eq!(sym.pairing, standard_j(10));
    }

    #[test]
    fn symplectic_on_scaled_input_recovers_unit_pairing() {
        // Curves (a, b traversed twice) have crossing matrix [[0,2],[-2,0]];
        // the op rebuilds a genuine basis with a.b = 1.
        let t = grid_torus(3, 3);
        let h = SurfaceHomology::new(&t).unwrap();
        let a = Curve {
            label: "z1".into(),
            walk: vec![0, 1, 2],
        };
        let bb = Curve {
            label: "z2".into(),
            walk: vec![0, 3, 6, 0, 3, 6],
        };
        let pairing = h.pairing_of(&[&a.walk, &bb.walk]);
        assert_eq!(pairing[0][1].abs(), 2);
        let cs = CurveSystem {
            surface: t.clone(),
            basepoint: None,
            curves: vec![a, bb],
            pairing,
        };
        let sym = symplectic_basis(&cs).unwrap();
        assert_eq!(sym.pairing, standard_j(1));
    }

    #[test]
    fn reroute_identity_when_pair_is_already_good() {
        let t = grid_torus(3, 3);
        let h = SurfaceHomology::new(&t).unwrap();
        let a = Curve {
            label: "a1".into(),
            walk: vec![0, 1, 2],
        };
        let b = Curve {
            label: "b1".into(),
            walk: vec![0, 3, 6],
        };
        let pairing = h.pairing_of(&[&a.walk, &b.walk]);
        let cs = CurveSystem {
            surface: t.clone(),
            basepoint: None,
            curves: vec![a.clone(), b],
            pairing,
        };
        let (s2, sys) = reroute_disjoint(&cs).unwrap();
        assert_eq!(s2, t); // identity refinement
        assert_eq!(sys.curves[0].walk, a.walk);
        assert_eq!(sys.pairing, standard_j(1));
        assert_eq!(sys.basepoint, Some(0));
    }

    #[test]
    fn reroute_from_scratch_on_tori() {
        for t in [csaszar_torus(), grid_torus(3, 3), grid_torus(4, 5)] {
            let cs = symplectic_basis(&homology_basis(&t).unwrap()).unwrap();
            let (s2, sys) = reroute_disjoint(&cs).unwrap();
            assert_eq!(s2, t);
            assert_eq!(sys.pairing, standard_j(1));
            let bp = sys.basepoint.unwrap();
            let a = &sys.curves[0];
            let b = &sys.curves[1];
            assert!(a.is_simple() && b.is_simple());
            let inter: Vec<usize> =
                a.vertex_set().intersection(&b.vertex_set()).copied().collect();
            assert_eq!(inter, vec![bp]);
        }
    }

    #[test]
    fn reroute_handles_walks_sharing_an_edge() {
        // An explicit shared-edge instance: both generators run along the
        // edge (0,1) of the grid torus. The output must still be a pair of
        // simple cycles meeting exactly at the basepoint.
        let t = grid_torus(3, 3);
        let h = SurfaceHomology::new(&t).unwrap();
        let a = Curve {
            label: "z1".into(),
            walk: vec![0, 1, 2],
        };
        let b = Curve {
            label: "z2".into(),
            walk: vec![0, 1, 4, 7, 6],
        };
        let shared: BTreeSet<EdgeKey> = {
            let e0: BTreeSet<EdgeKey> = a.edges().into_iter().collect();
            let e1: BTreeSet<EdgeKey> = b.edges().into_iter().collect();
            e0.intersection(&e1).copied().collect()
        };
        assert!(shared.contains(&(0, 1)));
        let pairing = h.pairing_of(&[&a.walk, &b.walk]);
        let cs = CurveSystem {
            surface: t,
            basepoint: None,
            curves: vec![a, b],
            pairing,
        };
        let (_s2, sys) = reroute_disjoint(&cs).unwrap();
        let inter: Vec<usize> = sys.curves[0]
            .vertex_set()
            .intersection(&sys.curves[1].vertex_set())
            .copied()
            .collect();
        assert_eq!(inter.len(), 1);
        assert_eq!(sys.pairing, standard_j(1));
    }

    #[test]
    fn reroute_rejects_higher_genus() {
        let f = crate::field::make_field(3, 2, Some(&[2, 1, 1])).unwrap();
        let spec = crate::heffter::HeffterSpec::new(f.clone(), f.element(&[2, 2])).unwrap();
        let t = crate::heffter::heffter_triangulation(&spec);
        let cs = symplectic_basis(&homology_basis(&t).unwrap()).unwrap();
        assert!(matches!(
            reroute_disjoint(&cs),
            Err(SurfaceError::ReroutingFailed(_))
        ));
    }

    #[test]
    fn doubling_on_grid_torus() {
        let t = grid_torus(4, 5);
        let cs = symplectic_basis(&homology_basis(&t).unwrap()).unwrap();
        let (_s, sys) = reroute_disjoint(&cs).unwrap();
        let chi_before = t.euler_characteristic();
        let tags = TriangleTags::new();
        let (surface, _tags, doubled) = double_curves(&sys, &tags).unwrap();
        // Refinement preserves chi (and hence genus and orientability).
        assert_eq!(surface.euler_characteristic(), chi_before);
        assert!(surface.is_closed_surface().unwrap());
        assert_eq!(doubled.pairs.len(), 2);
        for (o, c) in &doubled.pairs {
            let (strip, rest) = annulus_between(&surface, o, c).unwrap();
            let piece = SimplicialComplex::new(surface.labels().to_vec(), strip);
            assert_eq!(piece.euler_characteristic(), 0);
            // Genus 1: the complement of the annulus is the other annulus.
            let piece2 = SimplicialComplex::new(surface.labels().to_vec(), rest);
            assert_eq!(piece2.euler_characteristic(), 0);
        }
    }
}
