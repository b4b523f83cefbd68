//! Certification and counting: bistellar-flip reduction towards the
//! boundary of the 4-simplex, the full verification report for emitted
//! complexes, seeded sampling of combinatorially distinct triangulations,
//! and the dry-run scaling table.

use crate::assembly::{triangulate_sphere, SphereCellulation};
use crate::canonical::{canonical_form, isomorphism_witness, CanonicalForm};
use crate::error::ComplexError;
use crate::homology::{homology, HomologyProfile};
use crate::simplicial::{FVector, SimplicialComplex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

/// Result of the bistellar reduction heuristic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BistellarOutcome {
    ReducedToBoundaryOfSimplex,
    Inconclusive,
}

/// One applied move, for the trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    /// 1 -> 4: star a facet with a fresh vertex.
    Star([usize; 4]),
    /// 4 -> 1: remove a degree-4 vertex.
    Unstar(usize),
    /// 2 -> 3 across a triangle.
    TwoThree([usize; 3]),
    /// 3 -> 2 around an edge.
    ThreeTwo([usize; 2]),
}

#[derive(Clone, Debug)]
pub struct BistellarReport {
    pub outcome: BistellarOutcome,
    pub moves_used: u64,
    pub trace: Vec<Move>,
}

/// Mutable facet-set complex with the incidence maps the moves need.
struct FlipComplex {
    facets: BTreeSet<[usize; 4]>,
    tris: BTreeMap<[usize; 3], Vec<[usize; 4]>>,
    edges: BTreeMap<[usize; 2], Vec<[usize; 4]>>,
    vertex_deg: BTreeMap<usize, usize>,
    next_vertex: usize,
}

impl FlipComplex {
    fn new(c: &SimplicialComplex) -> Self {
        let mut fc = FlipComplex {
            facets: BTreeSet::new(),
            tris: BTreeMap::new(),
            edges: BTreeMap::new(),
            vertex_deg: BTreeMap::new(),
            next_vertex: c.labels().len(),
        };
        for f in c.facets() {
            fc.insert([f[0], f[1], f[2], f[3]]);
        }
        fc
    }

    fn insert(&mut self, f: [usize; 4]) {
        debug_assert!(f.windows(2).all(|w| w[0] < w[1]));
        assert!(self.facets.insert(f), "facet already present");
        for skip in 0..4 {
            let t = drop_index4(f, skip);
            self.tris.entry(t).or_default().push(f);
        }
        for i in 0..4 {
            for j in i + 1..4 {
                self.edges.entry([f[i], f[j]]).or_default().push(f);
            }
            *self.vertex_deg.entry(f[i]).or_default() += 1;
        }
    }

    fn remove(&mut self, f: [usize; 4]) {
        assert!(self.facets.remove(&f), "facet missing");
        for skip in 0..4 {
            let t = drop_index4(f, skip);
            let v = self.tris.get_mut(&t).unwrap();
            v.retain(|x| *x != f);
            if v.is_empty() {
                self.tris.remove(&t);
            }
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let v = self.edges.get_mut(&[f[i], f[j]]).unwrap();
                v.retain(|x| *x != f);
                if v.is_empty() {
                    self.edges.remove(&[f[i], f[j]]);
                }
            }
            let d = self.vertex_deg.get_mut(&f[i]).unwrap();
            *d -= 1;
            if *d == 0 {
                self.vertex_deg.remove(&f[i]);
            }
        }
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&[a.min(b), a.max(b)])
    }

    fn n_vertices(&self) -> usize {
        self.vertex_deg.len()
    }

    fn is_boundary_of_simplex(&self) -> bool {
        if self.n_vertices() != 5 || self.facets.len() != 5 {
            return false;
        }
        let verts: Vec<usize> = self.vertex_deg.keys().copied().collect();
        (0..5).all(|skip| {
            let mut f = [0usize; 4];
            let mut k = 0;
            for (i, &v) in verts.iter().enumerate() {
                if i != skip {
                    f[k] = v;
                    k += 1;
                }
            }
            self.facets.contains(&f)
        })
    }

    /// Valid 4 -> 1 moves: vertices of degree 4 whose four facets cone over
    /// a 4-set not already spanning a facet.
    fn unstar_moves(&self) -> Vec<(usize, [usize; 4])> {
        let mut out = Vec::new();
        for (&v, &d) in &self.vertex_deg {
            if d != 4 {
                continue;
            }
            let mut others: BTreeSet<usize> = BTreeSet::new();
            for f in self.facets.iter().filter(|f| f.contains(&v)) {
                others.extend(f.iter().copied().filter(|&x| x != v));
            }
            if others.len() != 4 {
                continue;
            }
            let o: Vec<usize> = others.into_iter().collect();
            let target = [o[0], o[1], o[2], o[3]];
            if !self.facets.contains(&target) {
                out.push((v, target));
            }
        }
        out
    }

    /// Valid 3 -> 2 moves: edges in exactly three facets whose opposite
    /// vertices form a triangle not already present.
    fn three_two_moves(&self) -> Vec<([usize; 2], [usize; 3])> {
        let mut out = Vec::new();
        for (e, fs) in &self.edges {
            if fs.len() != 3 {
                continue;
            }
            let mut opp: BTreeSet<usize> = BTreeSet::new();
            for f in fs {
                opp.extend(f.iter().copied().filter(|v| !e.contains(v)));
            }
            if opp.len() != 3 {
                continue;
            }
            let o: Vec<usize> = opp.into_iter().collect();
            let tri = [o[0], o[1], o[2]];
            if !self.tris.contains_key(&tri) {
                out.push((*e, tri));
            }
        }
        out
    }

    /// Valid 2 -> 3 moves: interior triangles whose opposite vertex pair is
    /// not an edge.
    fn two_three_moves(&self) -> Vec<([usize; 3], usize, usize)> {
        let mut out = Vec::new();
        for (t, fs) in &self.tris {
            if fs.len() != 2 {
                continue;
            }
            let d = *fs[0].iter().find(|v| !t.contains(v)).unwrap();
            let e = *fs[1].iter().find(|v| !t.contains(v)).unwrap();
            if !self.has_edge(d, e) {
                out.push((*t, d, e));
            }
        }
        out
    }

    fn apply_unstar(&mut self, v: usize, target: [usize; 4]) {
        let cone: Vec<[usize; 4]> = self
            .facets
            .iter()
            .filter(|f| f.contains(&v))
            .copied()
            .collect();
        assert_eq!(cone.len(), 4);
        for f in cone {
            self.remove(f);
        }
        self.insert(target);
    }

    fn apply_three_two(&mut self, e: [usize; 2], tri: [usize; 3]) {
        let around: Vec<[usize; 4]> = self.edges[&e].clone();
        assert_eq!(around.len(), 3);
        for f in around {
            self.remove(f);
        }
        self.insert(sorted4([tri[0], tri[1], tri[2], e[0]]));
        self.insert(sorted4([tri[0], tri[1], tri[2], e[1]]));
    }

    fn apply_two_three(&mut self, t: [usize; 3], d: usize, e: usize) {
        let fs: Vec<[usize; 4]> = self.tris[&t].clone();
        assert_eq!(fs.len(), 2);
        for f in fs {
            self.remove(f);
        }
        self.insert(sorted4([t[0], t[1], d, e]));
        self.insert(sorted4([t[1], t[2], d, e]));
        self.insert(sorted4([t[0], t[2], d, e]));
    }

    fn apply_star(&mut self, f: [usize; 4]) -> usize {
        let w = self.next_vertex;
        self.next_vertex += 1;
        self.remove(f);
        for skip in 0..4 {
            let t = drop_index4(f, skip);
            self.insert(sorted4([t[0], t[1], t[2], w]));
        }
        w
    }

    #[cfg(test)]
    fn to_complex(&self) -> SimplicialComplex {
        let labels = (0..self.next_vertex).map(|i| format!("v{i}")).collect();
        SimplicialComplex::new(labels, self.facets.iter().map(|f| f.to_vec()).collect())
    }
}

fn drop_index4(f: [usize; 4], skip: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    let mut k = 0;
    for (i, &v) in f.iter().enumerate() {
        if i != skip {
            out[k] = v;
            k += 1;
        }
    }
    out
}

fn sorted4(mut f: [usize; 4]) -> [usize; 4] {
    f.sort_unstable();
    f
}

/// Bistellar reduction: moves guided by an f-vector-decreasing preference
/// with seeded random tie-breaking; uphill moves are taken with probability
/// 0.1 once a plateau exceeds 100 moves, and always when nothing goes down.
pub fn bistellar_reduce(c: &SimplicialComplex, budget: u64, seed: u64) -> BistellarReport {
    let mut fc = FlipComplex::new(c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Vec::new();
    let mut moves_used = 0u64;
    let mut plateau = 0u64;

    while moves_used < budget {
        if fc.is_boundary_of_simplex() {
            return BistellarReport {
                outcome: BistellarOutcome::ReducedToBoundaryOfSimplex,
                moves_used,
                trace,
            };
        }
        let unstars = fc.unstar_moves();
        let threes = fc.three_two_moves();
        let has_down = !unstars.is_empty() || !threes.is_empty();
        let force_up = plateau >= 100 && rng.gen_bool(0.1);
        if has_down && !force_up {
            if !unstars.is_empty() {
                let (v, target) = unstars[rng.gen_range(0..unstars.len())];
                fc.apply_unstar(v, target);
                trace.push(Move::Unstar(v));
            } else {
                let (e, tri) = threes[rng.gen_range(0..threes.len())];
                fc.apply_three_two(e, tri);
                trace.push(Move::ThreeTwo(e));
            }
            plateau = 0;
        } else {
            let ups = fc.two_three_moves();
            if ups.is_empty() {
                let facets: Vec<[usize; 4]> = fc.facets.iter().copied().collect();
                let f = facets[rng.gen_range(0..facets.len())];
                fc.apply_star(f);
                trace.push(Move::Star(f));
            } else {
                let (t, d, e) = ups[rng.gen_range(0..ups.len())];
                fc.apply_two_three(t, d, e);
                trace.push(Move::TwoThree(t));
            }
            plateau += 1;
        }
        moves_used += 1;
    }
    if fc.is_boundary_of_simplex() {
        return BistellarReport {
            outcome: BistellarOutcome::ReducedToBoundaryOfSimplex,
            moves_used,
            trace,
        };
    }
    BistellarReport {
        outcome: BistellarOutcome::Inconclusive,
        moves_used,
        trace,
    }
}

/// Invariant bundle for an emitted complex. Failures are fields, not errors.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub f_vector: FVector,
    pub closed_pseudomanifold: bool,
    pub manifold: bool,
    pub homology: HomologyProfile,
    /// None when the pseudomanifold check already failed.
    pub bistellar: Option<BistellarReport>,
    pub elapsed_ms: u128,
}

impl VerificationReport {
    /// The gate used for CLI exit codes: manifold with 3-sphere homology.
    pub fn passes(&self) -> bool {
        self.closed_pseudomanifold
            && self.manifold
            && self.homology.betti() == vec![1, 0, 0, 1]
            && self.homology.torsion_free()
    }

    pub fn certified_sphere(&self) -> bool {
        self.passes()
            && matches!(
                self.bistellar.as_ref().map(|b| &b.outcome),
                Some(BistellarOutcome::ReducedToBoundaryOfSimplex)
            )
    }
}

/// Runs the pseudomanifold, manifold and homology checks, then attempts the
/// bistellar reduction within the budget. Success certifies the 3-sphere;
/// Inconclusive only downgrades the certificate, never fails the report.
pub fn verify_sphere(c: &SimplicialComplex, flip_budget: u64, seed: u64) -> VerificationReport {
    let start = Instant::now();
    let f_vector = c.f_vector();
    let closed = c.is_closed_pseudomanifold(3).unwrap_or(false);
    let manifold = if closed {
        c.is_manifold_3().unwrap_or(false)
    } else {
        false
    };
    let hom = homology(c);
    let bistellar = if closed {
        Some(bistellar_reduce(c, flip_budget, seed))
    } else {
        None
    };
    VerificationReport {
        f_vector,
        closed_pseudomanifold: closed,
        manifold,
        homology: hom,
        bistellar,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

/// Sampled distinctness estimate over the 3^N triangulation space.
#[derive(Clone, Debug)]
pub struct DistinctnessEstimate {
    pub k: usize,
    pub seed: u64,
    pub distinct: usize,
    /// Colliding sample index pairs with an explicit isomorphism witness
    /// (vertex label bijection).
    pub collisions: Vec<(usize, usize, Vec<(String, String)>)>,
    /// log2 of the counted lower bound: N log2(3) - n log2(n).
    pub log2_lower_bound: f64,
}

/// Draws k choice vectors uniformly (seeded), triangulates, and counts
/// pairwise non-isomorphic outputs through canonical forms.
pub fn count_distinct_sample(
    s: &SphereCellulation,
    k: usize,
    seed: u64,
    canonical_budget: u64,
) -> Result<DistinctnessEstimate, ComplexError> {
    assert!(k >= 2, "need at least two samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = s.registry_size();
    let mut complexes = Vec::with_capacity(k);
    for _ in 0..k {
        let choices: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3u8)).collect();
        let t = triangulate_sphere(s, &choices).expect("registry-sized vector");
        complexes.push(t);
    }
    let mut forms: Vec<CanonicalForm> = Vec::with_capacity(k);
    for t in &complexes {
        forms.push(canonical_form(t, canonical_budget)?);
    }
    let mut groups: BTreeMap<&CanonicalForm, Vec<usize>> = BTreeMap::new();
    for (i, f) in forms.iter().enumerate() {
        groups.entry(f).or_default().push(i);
    }
    let mut collisions = Vec::new();
    for members in groups.values() {
        for w in members.windows(2) {
            let witness =
                isomorphism_witness(&complexes[w[0]], &complexes[w[1]], canonical_budget)?
                    .expect("equal canonical forms are isomorphic");
            collisions.push((w[0], w[1], witness));
        }
    }
    Ok(DistinctnessEstimate {
        k,
        seed,
        distinct: groups.len(),
        collisions,
        log2_lower_bound: lower_bound_estimate(s.n_vertices() as u64, n as u64, 3),
    })
}

/// The counting argument specialized to a built instance: N octahedra with
/// `base` triangulations each, divided by the at-most-n-factorial
/// relabelings (n! < n^n = 2^(n log n)).
pub fn lower_bound_estimate(n: u64, octahedra: u64, base: u32) -> f64 {
    let n = n as f64;
    octahedra as f64 * (base as f64).log2() - n * n.log2()
}

/// How the layer count m is derived from q in the scaling report.
#[derive(Clone, Copy, Debug)]
pub enum MRule {
    /// m = q^3, the scaling the headline count needs.
    Cubed,
    Fixed(u64),
}

#[derive(Clone, Debug)]
pub struct ScalingRow {
    pub q: u64,
    pub m: u64,
    pub n: u64,
    pub octahedra: u64,
    /// N / n^(5/4)
    pub ratio: f64,
    pub log2_lower_bound: f64,
}

/// Exact dry-run counts from the assembly bookkeeping formulas, without
/// materializing cells: N = (q choose 2) m octahedra and
/// n = q(2m + 3) + 2g + 2 vertices (two T_q copies, m-1 coarse interior
/// copies, qm E-apexes, 2g + 2 cone apexes; curve-refinement vertices are
/// lower order and excluded).
pub fn dry_run_counts(q: u64, m: u64) -> (u64, u64) {
    let g = q * (q - 5) / 4 + 1;
    let n = q * (2 * m + 3) + 2 * g + 2;
    let octahedra = q * (q - 1) / 2 * m;
    (n, octahedra)
}

fn is_prime_power_1_mod_4(q: u64) -> bool {
    if q % 4 != 1 || q < 5 {
        return false;
    }
    let mut n = q;
    let mut p = 0;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            p = d;
            while n % d == 0 {
                n /= d;
            }
            break;
        }
        d += 1;
    }
    if p == 0 {
        return true; // prime
    }
    n == 1 // q = p^e
}

/// Tabulates (q, n, N, N / n^(5/4)) for the requested prime powers.
pub fn scaling_report(
    q_list: &[u64],
    rule: MRule,
    base: u32,
) -> Result<Vec<ScalingRow>, ComplexError> {
    let mut out = Vec::new();
    for &q in q_list {
        if !is_prime_power_1_mod_4(q) {
            return Err(ComplexError::Parse(format!(
                "q = {q} is not a prime power congruent to 1 mod 4"
            )));
        }
        let m = match rule {
            MRule::Cubed => q * q * q,
            MRule::Fixed(k) => k,
        };
        let (n, octahedra) = dry_run_counts(q, m);
        let ratio = octahedra as f64 / (n as f64).powf(1.25);
        out.push(ScalingRow {
            q,
            m,
            n,
            octahedra,
            ratio,
            log2_lower_bound: lower_bound_estimate(n, octahedra, base),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_sphere;
    use crate::field::make_field;
    use crate::heffter::HeffterSpec;
    use crate::simplicial::{boundary_of_simplex, csaszar_torus, suspension};

    fn spec5() -> HeffterSpec {
        let f = make_field(5, 1, None).unwrap();
        HeffterSpec::new(f.clone(), f.element(&[2])).unwrap()
    }

    #[test]
    fn boundary_of_simplex_reduces_immediately() {
        let r = bistellar_reduce(&boundary_of_simplex(4), 10, 1);
        assert_eq!(r.outcome, BistellarOutcome::ReducedToBoundaryOfSimplex);
        assert_eq!(r.moves_used, 0);
    }

    #[test]
    fn starred_sphere_reduces_in_one_move() {
        // Apply one 1 -> 4 move by hand; the reducer undoes it.
        let c = boundary_of_simplex(4);
        let mut fc = FlipComplex::new(&c);
        fc.apply_star([0, 1, 2, 3]);
        let starred = fc.to_complex();
        let r = bistellar_reduce(&starred, 10, 7);
        assert_eq!(r.outcome, BistellarOutcome::ReducedToBoundaryOfSimplex);
        assert_eq!(r.moves_used, 1);
        // Either the fresh apex or the old opposite vertex may be unstarred.
        assert!(matches!(r.trace[..], [Move::Unstar(4)] | [Move::Unstar(5)]));
    }

    #[test]
    fn moves_preserve_homology() {
        let c = boundary_of_simplex(4);
        let mut fc = FlipComplex::new(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for step in 0..40 {
            let ups = fc.two_three_moves();
            let downs = fc.three_two_moves();
            if step % 2 == 0 && !ups.is_empty() {
                let (t, d, e) = ups[rng.gen_range(0..ups.len())];
                fc.apply_two_three(t, d, e);
            } else if !downs.is_empty() {
                let (e, tri) = downs[rng.gen_range(0..downs.len())];
                fc.apply_three_two(e, tri);
            } else if !ups.is_empty() {
                let (t, d, e) = ups[rng.gen_range(0..ups.len())];
                fc.apply_two_three(t, d, e);
            }
            let h = homology(&fc.to_complex());
            assert_eq!(h.betti(), vec![1, 0, 0, 1]);
            assert!(h.torsion_free());
        }
    }

    #[test]
    fn pipeline_output_verifies_and_reduces() {
        let s = assemble_sphere(&spec5(), 2).unwrap();
        let t = triangulate_sphere(&s, &vec![0; s.registry_size()]).unwrap();
        let report = verify_sphere(&t, 1_000_000, 42);
        assert!(report.closed_pseudomanifold);
        assert!(report.manifold);
        assert_eq!(report.homology.betti(), vec![1, 0, 0, 1]);
        assert!(report.certified_sphere());
    }

    #[test]
    fn torus_suspension_fails_verification() {
        let sus = suspension(&csaszar_torus());
        let report = verify_sphere(&sus, 1000, 1);
        assert!(report.closed_pseudomanifold);
        assert!(!report.manifold);
        assert!(!report.passes());
    }

    #[test]
    fn distinctness_sampling_is_reproducible() {
        let s = assemble_sphere(&spec5(), 2).unwrap();
        let a = count_distinct_sample(&s, 4, 11, crate::canonical::DEFAULT_BUDGET).unwrap();
        let b = count_distinct_sample(&s, 4, 11, crate::canonical::DEFAULT_BUDGET).unwrap();
        assert_eq!(a.distinct, b.distinct);
        assert_eq!(a.k, 4);
        assert!(a.distinct <= a.k);
    }

    #[test]
    fn lower_bound_arithmetic() {
        // No octahedra: only the -n log2 n term remains.
        assert_eq!(lower_bound_estimate(8, 0, 2), -24.0);
        // n = 16, N = 64, base 2: 64 - 64 = 0.
        assert_eq!(lower_bound_estimate(16, 64, 2), 0.0);
    }

    #[test]
    fn scaling_table() {
        let rows = scaling_report(&[5, 9, 13, 17], MRule::Cubed, 2).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert_eq!(r.octahedra, r.q * (r.q - 1) / 2 * r.m);
        }
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        let (lo, hi) = ratios
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        assert!(hi / lo <= 4.0, "ratio band {lo}..{hi} exceeds factor 4");
        for w in rows.windows(2) {
            assert!(w[1].n > w[0].n);
        }
        assert!(scaling_report(&[6], MRule::Cubed, 2).is_err());
    }
}
