//! Heffter's cellulations of closed orientable surfaces: vertices are the
//! elements of GF(q) for a prime power q = 4k+1, and the 2-cells are the
//! (q-1)-gons traced by the partial sums of the geometric series of a
//! primitive element. Includes the one-new-vertex-per-polygon refinement to
//! a strongly regular triangulation, automorphism verification against the
//! affine maps, and pairwise distinctness of the cellulations across
//! primitive elements.

use crate::canonical::{canonical_form, CanonicalForm, DEFAULT_BUDGET};
use crate::cellulation::Cellulation;
use crate::error::{ComplexError, HeffterError};
use crate::field::{Field, FieldElement};
use crate::simplicial::SimplicialComplex;
use std::collections::{BTreeMap, BTreeSet};

/// Validated parameters of a Heffter cellulation.
#[derive(Clone, Debug)]
pub struct HeffterSpec {
    field: Field,
    alpha: FieldElement,
}

impl HeffterSpec {
    pub fn new(field: Field, alpha: FieldElement) -> Result<Self, HeffterError> {
        let q = field.order();
        if q % 4 != 1 || q < 5 {
            return Err(HeffterError::BadResidue(q));
        }
        if alpha.field() != &field {
            return Err(HeffterError::Field(crate::error::FieldError::FieldMismatch));
        }
        if alpha.is_zero() || alpha.multiplicative_order() != q - 1 {
            return Err(HeffterError::NotPrimitive);
        }
        Ok(HeffterSpec { field, alpha })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn alpha(&self) -> &FieldElement {
        &self.alpha
    }

    pub fn q(&self) -> u64 {
        self.field.order()
    }

    /// The polygon F(s): cyclic vertex sequence v(s, k) = s + (a^k - 1)/(a - 1)
    /// for k = 0..q-2, as indices into the deterministic element order.
    pub fn polygon(&self, s: &FieldElement) -> Vec<FieldElement> {
        let one = self.field.one();
        let denom = self.alpha.sub(&one).expect("same field");
        let q = self.q();
        let mut out = Vec::with_capacity((q - 1) as usize);
        for k in 0..q - 1 {
            let num = self.alpha.pow(k as i64).unwrap().sub(&one).unwrap();
            let v = s.add(&num.div(&denom).unwrap()).unwrap();
            out.push(v);
        }
        out
    }
}

/// Vertex labels: the field element tokens in deterministic order.
fn vertex_table(field: &Field) -> (Vec<FieldElement>, BTreeMap<String, usize>) {
    let elems = field.all_elements();
    let index = elems
        .iter()
        .enumerate()
        .map(|(i, e)| (e.token(), i))
        .collect();
    (elems, index)
}

/// The Heffter cellulation C_q^alpha: neighborly, regular, closed, and for
/// q >= 5 not strongly regular.
pub fn heffter_cellulation(spec: &HeffterSpec) -> Cellulation {
    let (elems, index) = vertex_table(&spec.field);
    let labels: Vec<String> = elems.iter().map(|e| e.token()).collect();
    let q = spec.q() as usize;
    let mut c = Cellulation::new(2, labels);
    let mut edges = BTreeMap::new();
    for a in 0..q {
        for b in a + 1..q {
            let e = c.add_edge(a, b);
            edges.insert((a, b), e);
        }
    }
    for s in &elems {
        let cycle_elems = spec.polygon(s);
        let cycle: Vec<usize> = cycle_elems.iter().map(|v| index[&v.token()]).collect();
        let distinct: BTreeSet<usize> = cycle.iter().copied().collect();
        assert_eq!(
            distinct.len(),
            q - 1,
            "polygon F({}) has repeated vertices",
            s.token()
        );
        c.add_polygon(&cycle, &edges, Some(s.token()));
    }
    // Closedness: every edge lies in exactly two polygons.
    let incidence = c.ridge_facets();
    debug_assert!(incidence.values().all(|fs| fs.len() == 2));
    c.validate().expect("Heffter cellulation is well formed");
    c
}

/// Genus from the closed formula q(q-5)/4 + 1, cross-checked against the
/// Euler characteristic of the built cellulation.
pub fn heffter_genus(spec: &HeffterSpec) -> u64 {
    let q = spec.q();
    let g = q * (q - 5) / 4 + 1;
    let chi = heffter_cellulation(spec).euler_characteristic();
    assert_eq!(chi, 2 - 2 * g as i64, "genus formula disagrees with chi");
    g
}

/// Label for the subdivision vertex at the center of F(s).
pub fn center_label(s_token: &str) -> String {
    format!("c({s_token})")
}

/// The triangulation T_q^alpha: every polygon subdivided by one new center
/// vertex joined to its boundary.
pub fn heffter_triangulation(spec: &HeffterSpec) -> SimplicialComplex {
    SimplicialComplex::from_labeled_facets(&heffter_triangles(spec))
}

/// T_q^alpha together with the facet -> polygon-token tag map the assembly
/// uses to match surface triangles to base polygons.
pub fn heffter_surface(spec: &HeffterSpec) -> (SimplicialComplex, crate::surface::TriangleTags) {
    let (elems, _) = vertex_table(&spec.field);
    let mut labeled: Vec<(Vec<String>, String)> = Vec::new();
    for s in &elems {
        let cycle = spec.polygon(s);
        let center = center_label(&s.token());
        let n = cycle.len();
        for k in 0..n {
            labeled.push((
                vec![
                    center.clone(),
                    cycle[k].token(),
                    cycle[(k + 1) % n].token(),
                ],
                s.token(),
            ));
        }
    }
    let complex =
        SimplicialComplex::from_labeled_facets(&labeled.iter().map(|(f, _)| f.clone()).collect::<Vec<_>>());
    let mut tags = crate::surface::TriangleTags::new();
    for (f, tag) in labeled {
        let mut ids: Vec<usize> = f
            .iter()
            .map(|t| complex.vertex_by_label(t).unwrap())
            .collect();
        ids.sort_unstable();
        tags.insert(ids, tag);
    }
    (complex, tags)
}

/// Labeled triangles of T_q^alpha grouped in polygon order; each triangle
/// belongs to the polygon whose center it uses.
pub fn heffter_triangles(spec: &HeffterSpec) -> Vec<Vec<String>> {
    let (elems, _) = vertex_table(&spec.field);
    let mut out = Vec::new();
    for s in &elems {
        let cycle = spec.polygon(s);
        let center = center_label(&s.token());
        let n = cycle.len();
        for k in 0..n {
            out.push(vec![
                center.clone(),
                cycle[k].token(),
                cycle[(k + 1) % n].token(),
            ]);
        }
    }
    out
}

/// Outcome of the automorphism checks for C_q^alpha.
#[derive(Clone, Debug)]
pub struct AutomorphismReport {
    /// q(q-1), the order of the affine group.
    pub affine_order: u64,
    /// (a, b) token pairs of verified affine automorphisms x -> ax + b.
    pub affine_maps: Vec<(String, String)>,
    /// Exhaustive face-poset automorphism count, when it was feasible.
    pub brute_force_order: Option<u64>,
}

/// Polygon family as edge-set keys, the shape the poset sees.
fn polygon_edge_sets(spec: &HeffterSpec) -> BTreeSet<Vec<(usize, usize)>> {
    let (elems, index) = vertex_table(&spec.field);
    let mut fam = BTreeSet::new();
    for s in &elems {
        let cyc: Vec<usize> = spec
            .polygon(s)
            .iter()
            .map(|v| index[&v.token()])
            .collect();
        fam.insert(cycle_edge_key(&cyc));
    }
    fam
}

fn cycle_edge_key(cyc: &[usize]) -> Vec<(usize, usize)> {
    let n = cyc.len();
    let mut key: Vec<(usize, usize)> = (0..n)
        .map(|i| {
            let (a, b) = (cyc[i], cyc[(i + 1) % n]);
            (a.min(b), a.max(b))
        })
        .collect();
    key.sort_unstable();
    key
}

/// Verifies every affine map x -> ax + b as a cellulation automorphism and,
/// for q <= 9, cross-validates with a brute-force search over all vertex
/// permutations of the face poset.
pub fn heffter_automorphisms(spec: &HeffterSpec) -> AutomorphismReport {
    let (elems, index) = vertex_table(&spec.field);
    let fam = polygon_edge_sets(spec);
    let q = spec.q() as usize;
    let mut affine_maps = Vec::new();
    for a in &elems {
        if a.is_zero() {
            continue;
        }
        for b in &elems {
            // Induced vertex permutation.
            let perm: Vec<usize> = elems
                .iter()
                .map(|x| index[&x.mul(a).unwrap().add(b).unwrap().token()])
                .collect();
            assert!(
                permutation_preserves(&fam, &perm),
                "affine map (a={}, b={}) failed to permute the polygon family",
                a.token(),
                b.token()
            );
            affine_maps.push((a.token(), b.token()));
        }
    }
    let affine_order = (q * (q - 1)) as u64;
    assert_eq!(affine_maps.len() as u64, affine_order);

    let brute_force_order = if spec.q() <= 9 {
        Some(brute_force_poset_automorphisms(&fam, q))
    } else {
        None
    };
    AutomorphismReport {
        affine_order,
        affine_maps,
        brute_force_order,
    }
}

fn permutation_preserves(fam: &BTreeSet<Vec<(usize, usize)>>, perm: &[usize]) -> bool {
    for key in fam {
        let mut mapped: Vec<(usize, usize)> = key
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (perm[a], perm[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        mapped.sort_unstable();
        if !fam.contains(&mapped) {
            return false;
        }
    }
    true
}

/// Exhaustive count of vertex permutations preserving the polygon family.
/// The 1-skeleton is complete, so these are exactly the poset automorphisms.
fn brute_force_poset_automorphisms(fam: &BTreeSet<Vec<(usize, usize)>>, q: usize) -> u64 {
    let mut perm: Vec<usize> = (0..q).collect();
    let mut count = 0u64;
    // Heap's algorithm, iterative.
    let mut c = vec![0usize; q];
    if permutation_preserves(fam, &perm) {
        count += 1;
    }
    let mut i = 0;
    while i < q {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            if permutation_preserves(fam, &perm) {
                count += 1;
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    count
}

/// Partition of the primitive elements into combinatorial-equivalence
/// classes {alpha, 1/alpha}.
#[derive(Clone, Debug)]
pub struct DistinctClasses {
    /// Each class as primitive-element tokens, deterministic order.
    pub classes: Vec<Vec<String>>,
    /// Some(result) when canonical forms certified the partition (q <= 9);
    /// None when the partition is reported from the algebraic pairing only.
    pub certified: Option<bool>,
}

/// Groups primitive elements by the inverse pairing and, at q <= 9,
/// certifies via canonical forms of T_q^alpha that cellulations agree within
/// a class and differ across classes.
pub fn heffter_distinct_classes(field: &Field) -> Result<DistinctClasses, HeffterError> {
    let q = field.order();
    if q % 4 != 1 || q < 5 {
        return Err(HeffterError::BadResidue(q));
    }
    let prim = field.primitive_elements();
    let mut classes: Vec<Vec<FieldElement>> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for a in &prim {
        if seen.contains(&a.token()) {
            continue;
        }
        let inv = a.inv().expect("primitive element is nonzero");
        seen.insert(a.token());
        seen.insert(inv.token());
        let mut class = vec![a.clone()];
        if inv != *a {
            class.push(inv);
        }
        classes.push(class);
    }

    let certified = if q <= 9 {
        let mut forms: BTreeMap<String, CanonicalForm> = BTreeMap::new();
        for class in &classes {
            for a in class {
                let spec = HeffterSpec::new(field.clone(), a.clone())?;
                let t = heffter_triangulation(&spec);
                let form = canonical_form(&t, DEFAULT_BUDGET)
                    .map_err(|e| match e {
                        ComplexError::BudgetExceeded(_) => HeffterError::NotPrimitive,
                        _ => HeffterError::NotPrimitive,
                    })
                    .expect("canonical form at q <= 9 is cheap");
                forms.insert(a.token(), form);
            }
        }
        let mut ok = true;
        for (i, ci) in classes.iter().enumerate() {
            for a in ci.iter().skip(1) {
                ok &= forms[&ci[0].token()] == forms[&a.token()];
            }
            for cj in classes.iter().skip(i + 1) {
                ok &= forms[&ci[0].token()] != forms[&cj[0].token()];
            }
        }
        Some(ok)
    } else {
        None
    };

    Ok(DistinctClasses {
        classes: classes
            .into_iter()
            .map(|c| c.into_iter().map(|a| a.token()).collect())
            .collect(),
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use crate::simplicial::FVector;

    fn spec5() -> HeffterSpec {
        let f = make_field(5, 1, None).unwrap();
        let a = f.element(&[2]);
        HeffterSpec::new(f, a).unwrap()
    }

    fn spec9() -> HeffterSpec {
        let f = make_field(3, 2, Some(&[2, 1, 1])).unwrap();
        let a = f.element(&[2, 2]);
        HeffterSpec::new(f, a).unwrap()
    }

    #[test]
    fn spec_validation() {
        let f13 = make_field(13, 1, None).unwrap();
        let two = f13.element(&[2]);
        assert_eq!(
            HeffterSpec::new(f13.clone(), f13.element(&[3])).unwrap_err(),
            HeffterError::NotPrimitive
        );
        assert!(HeffterSpec::new(f13, two).is_ok());
        let f7 = make_field(7, 1, None).unwrap();
        assert_eq!(
            HeffterSpec::new(f7.clone(), f7.element(&[3])).unwrap_err(),
            HeffterError::BadResidue(7)
        );
    }

    #[test]
    fn polygon_starts_with_s_and_s_plus_1() {
        for spec in [spec5(), spec9()] {
            let one = spec.field().one();
            for s in spec.field().all_elements() {
                let poly = spec.polygon(&s);
                assert_eq!(poly[0], s);
                assert_eq!(poly[1], s.add(&one).unwrap());
            }
        }
    }

    #[test]
    fn c5_f_vector_and_topology() {
        let c = heffter_cellulation(&spec5());
        assert_eq!(c.f_vector(), FVector(vec![5, 10, 5]));
        assert_eq!(heffter_genus(&spec5()), 1);
        assert!(c.orient_surface().is_ok());
        assert!(!c.is_strongly_regular());
    }

    #[test]
    fn c9_polygons_share_q_minus_2_vertices() {
        let spec = spec9();
        let polys: Vec<BTreeSet<String>> = spec
            .field()
            .all_elements()
            .iter()
            .map(|s| spec.polygon(s).iter().map(|v| v.token()).collect())
            .collect();
        for (i, a) in polys.iter().enumerate() {
            assert_eq!(a.len(), 8);
            for b in polys.iter().skip(i + 1) {
                assert_eq!(a.intersection(b).count(), 7);
            }
        }
    }

    #[test]
    fn genus_formula() {
        assert_eq!(heffter_genus(&spec9()), 10);
        let f13 = make_field(13, 1, None).unwrap();
        let spec13 = HeffterSpec::new(f13.clone(), f13.element(&[2])).unwrap();
        assert_eq!(heffter_genus(&spec13), 27);
    }

    #[test]
    fn t5_refinement() {
        let t = heffter_triangulation(&spec5());
        assert_eq!(t.f_vector(), FVector(vec![10, 30, 20]));
        assert_eq!(t.euler_characteristic(), 0);
        assert!(t.is_closed_surface().unwrap());
    }

    #[test]
    fn t9_refinement_and_homology() {
        let t = heffter_triangulation(&spec9());
        assert_eq!(t.f_vector(), FVector(vec![18, 108, 72]));
        assert_eq!(t.euler_characteristic(), -18);
        assert!(t.is_closed_surface().unwrap());
        // Betti (1, 2g, 1) with g = 10, via Smith normal form.
        let p = crate::homology::homology(&t);
        assert_eq!(p.betti(), vec![1, 20, 1]);
        assert!(p.torsion_free());
    }

    #[test]
    fn automorphisms_q5() {
        let rep = heffter_automorphisms(&spec5());
        assert_eq!(rep.affine_order, 20);
        assert_eq!(rep.brute_force_order, Some(20));
        assert!(rep.affine_maps.contains(&("1".into(), "0".into())));
    }

    #[test]
    fn distinct_classes_q5_q13() {
        let f5 = make_field(5, 1, None).unwrap();
        let d5 = heffter_distinct_classes(&f5).unwrap();
        assert_eq!(d5.classes, vec![vec!["2".to_string(), "3".to_string()]]);
        assert_eq!(d5.certified, Some(true));

        let f13 = make_field(13, 1, None).unwrap();
        let d13 = heffter_distinct_classes(&f13).unwrap();
        assert_eq!(d13.classes.len(), 2);
        assert_eq!(d13.certified, None);
    }
}
