//! Exact canonical forms for simplicial complexes by individualization and
//! refinement: two complexes are combinatorially isomorphic iff their
//! canonical facet lists are identical. Intended for desk-scale inputs; the
//! search carries a node budget and reports when it is exhausted.

use crate::error::ComplexError;
use crate::simplicial::SimplicialComplex;
use std::collections::BTreeMap;

pub const DEFAULT_BUDGET: u64 = 2_000_000;

/// Canonical facet list over dense vertex ids 0..n-1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CanonicalForm(pub Vec<Vec<u32>>);

struct Search<'a> {
    facets: &'a [Vec<usize>],
    incident: Vec<Vec<usize>>, // vertex -> facet indices
    n: usize,
    budget: u64,
    nodes: u64,
    best: Option<(Vec<Vec<u32>>, Vec<usize>)>,
}

impl<'a> Search<'a> {
    /// Iterated color refinement: a vertex color is refined by the multiset
    /// of its incident facets' color profiles. Returns colors as dense ranks.
    fn refine(&self, colors: &mut Vec<u32>) {
        loop {
            let mut sigs: Vec<(u32, Vec<Vec<u32>>)> = Vec::with_capacity(self.n);
            for v in 0..self.n {
                let mut fsigs: Vec<Vec<u32>> = self.incident[v]
                    .iter()
                    .map(|&f| {
                        let mut s: Vec<u32> =
                            self.facets[f].iter().map(|&u| colors[u]).collect();
                        s.sort_unstable();
                        s
                    })
                    .collect();
                fsigs.sort();
                sigs.push((colors[v], fsigs));
            }
            let mut ranked: Vec<&(u32, Vec<Vec<u32>>)> = sigs.iter().collect();
            ranked.sort();
            ranked.dedup();
            let rank: BTreeMap<&(u32, Vec<Vec<u32>>), u32> = ranked
                .iter()
                .enumerate()
                .map(|(i, s)| (*s, i as u32))
                .collect();
            let new: Vec<u32> = (0..self.n).map(|v| rank[&sigs[v]]).collect();
            if new == *colors {
                return;
            }
            *colors = new;
        }
    }

    fn class_sizes(&self, colors: &[u32]) -> BTreeMap<u32, usize> {
        let mut m = BTreeMap::new();
        for &c in colors {
            *m.entry(c).or_insert(0) += 1;
        }
        m
    }

    fn descend(&mut self, mut colors: Vec<u32>) -> Result<(), ComplexError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(ComplexError::BudgetExceeded(self.budget));
        }
        self.refine(&mut colors);
        let sizes = self.class_sizes(&colors);
        if sizes.values().all(|&s| s == 1) {
            // Discrete: colors are exactly the new labels.
            let perm: Vec<usize> = colors.iter().map(|&c| c as usize).collect();
            let mut relabeled: Vec<Vec<u32>> = self
                .facets
                .iter()
                .map(|f| {
                    let mut g: Vec<u32> = f.iter().map(|&v| perm[v] as u32).collect();
                    g.sort_unstable();
                    g
                })
                .collect();
            relabeled.sort();
            if self.best.as_ref().map_or(true, |(b, _)| relabeled < *b) {
                self.best = Some((relabeled, perm));
            }
            return Ok(());
        }
        // Individualize every vertex of the first smallest non-singleton class.
        let (&target, _) = sizes
            .iter()
            .filter(|(_, &s)| s > 1)
            .min_by_key(|(&c, &s)| (s, c))
            .unwrap();
        let members: Vec<usize> = (0..self.n).filter(|&v| colors[v] == target).collect();
        for v in members {
            let mut child = colors.clone();
            // Give v a color just below its class; the affine map keeps the
            // other classes ordered and distinct.
            for c in child.iter_mut() {
                *c = *c * 2 + 1;
            }
            child[v] -= 1;
            self.descend(child)?;
        }
        Ok(())
    }
}

/// Canonical form with the vertex relabeling (dense old id -> new id) that
/// produces it.
pub fn canonical_labeling(
    c: &SimplicialComplex,
    budget: u64,
) -> Result<(CanonicalForm, Vec<usize>), ComplexError> {
    let used = c.used_vertices();
    let dense: BTreeMap<usize, usize> = used.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let facets: Vec<Vec<usize>> = c
        .facets()
        .iter()
        .map(|f| f.iter().map(|v| dense[v]).collect())
        .collect();
    let n = used.len();
    let mut incident = vec![Vec::new(); n];
    for (i, f) in facets.iter().enumerate() {
        for &v in f {
            incident[v].push(i);
        }
    }
    let mut search = Search {
        facets: &facets,
        incident,
        n,
        budget,
        nodes: 0,
        best: None,
    };
    search.descend(vec![0; n])?;
    let (form, perm) = search.best.expect("search visited at least one leaf");
    Ok((CanonicalForm(form), perm))
}

pub fn canonical_form(c: &SimplicialComplex, budget: u64) -> Result<CanonicalForm, ComplexError> {
    Ok(canonical_labeling(c, budget)?.0)
}

/// Combinatorial isomorphism test through canonical forms, with an f-vector
/// short-circuit.
pub fn isomorphic(
    a: &SimplicialComplex,
    b: &SimplicialComplex,
    budget: u64,
) -> Result<bool, ComplexError> {
    if a.f_vector() != b.f_vector() {
        return Ok(false);
    }
    Ok(canonical_form(a, budget)? == canonical_form(b, budget)?)
}

/// Explicit vertex bijection witnessing an isomorphism, as label pairs.
/// None when the complexes are not isomorphic.
pub fn isomorphism_witness(
    a: &SimplicialComplex,
    b: &SimplicialComplex,
    budget: u64,
) -> Result<Option<Vec<(String, String)>>, ComplexError> {
    let (fa, pa) = canonical_labeling(a, budget)?;
    let (fb, pb) = canonical_labeling(b, budget)?;
    if fa != fb {
        return Ok(None);
    }
    let ua = a.used_vertices();
    let ub = b.used_vertices();
    // pa maps dense-a -> canonical slot; invert pb for slot -> dense-b.
    let mut inv_b = vec![0usize; ub.len()];
    for (dense, &slot) in pb.iter().enumerate() {
        inv_b[slot] = dense;
    }
    let map = ua
        .iter()
        .enumerate()
        .map(|(dense_a, &va)| {
            let vb = ub[inv_b[pa[dense_a]]];
            (a.label(va).to_string(), b.label(vb).to_string())
        })
        .collect();
    Ok(Some(map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplicial::{boundary_of_simplex, octahedron_boundary, SimplicialComplex};

    fn shuffled(c: &SimplicialComplex, seed: u64) -> SimplicialComplex {
        let n = c.labels().len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        for i in (1..n).rev() {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            perm.swap(i, j);
        }
        c.relabel(&perm)
    }

    #[test]
    fn relabeling_invariance() {
        let c = boundary_of_simplex(4);
        let base = canonical_form(&c, DEFAULT_BUDGET).unwrap();
        for seed in 1..6 {
            let s = shuffled(&c, seed);
            assert_eq!(canonical_form(&s, DEFAULT_BUDGET).unwrap(), base);
        }
    }

    #[test]
    fn different_complexes_differ() {
        // Boundary of the 4-simplex vs the coned octahedron boundary: the
        // f-vectors already differ, so isomorphism short-circuits to false.
        let a = boundary_of_simplex(4);
        let oct = octahedron_boundary();
        let mut facets: Vec<Vec<usize>> = oct.facets().to_vec();
        for f in facets.iter_mut() {
            f.push(6);
        }
        let cone = SimplicialComplex::from_facets(7, facets);
        assert_ne!(a.f_vector(), cone.f_vector());
        assert!(!isomorphic(&a, &cone, DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn octahedron_diagonal_choices_are_isomorphic() {
        // Triangulating the solid octahedron along diagonal (0,1) vs (2,3):
        // isomorphic as abstract complexes, different as labeled facet lists.
        let octa = |d: [usize; 2], eq: [usize; 4]| {
            let facets = (0..4)
                .map(|i| vec![d[0], d[1], eq[i], eq[(i + 1) % 4]])
                .collect();
            SimplicialComplex::from_facets(6, facets)
        };
        let t0 = octa([0, 1], [2, 4, 3, 5]);
        let t1 = octa([2, 3], [0, 4, 1, 5]);
        assert!(isomorphic(&t0, &t1, DEFAULT_BUDGET).unwrap());
        assert_ne!(t0.facets(), t1.facets());
    }

    #[test]
    fn idempotence() {
        let c = octahedron_boundary();
        let form = canonical_form(&c, DEFAULT_BUDGET).unwrap();
        let as_complex = SimplicialComplex::from_facets(
            6,
            form.0
                .iter()
                .map(|f| f.iter().map(|&v| v as usize).collect())
                .collect(),
        );
        assert_eq!(canonical_form(&as_complex, DEFAULT_BUDGET).unwrap(), form);
    }

    #[test]
    fn witness_maps_labels() {
        let c = boundary_of_simplex(3);
        let s = shuffled(&c, 7);
        let w = isomorphism_witness(&c, &s, DEFAULT_BUDGET).unwrap().unwrap();
        assert_eq!(w.len(), 4);
    }
}
