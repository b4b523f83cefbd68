//! Integral simplicial homology through Smith normal form of the boundary
//! matrices. Elimination pivots on entries of minimal absolute value to
//! control coefficient growth; a fixed-width fast path falls back to
//! arbitrary precision when it would overflow.

use crate::simplicial::SimplicialComplex;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Betti number and torsion coefficients (in divisor order) per dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyProfile {
    pub groups: Vec<HomologyGroup>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyGroup {
    pub betti: usize,
    pub torsion: Vec<u64>,
}

impl HomologyProfile {
    pub fn betti(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.betti).collect()
    }

    pub fn torsion_free(&self) -> bool {
        self.groups.iter().all(|g| g.torsion.is_empty())
    }

    /// Alternating sum of Betti numbers (equals chi when torsion-free or not).
    pub fn euler_characteristic(&self) -> i64 {
        self.groups
            .iter()
            .enumerate()
            .map(|(i, g)| if i % 2 == 0 { g.betti as i64 } else { -(g.betti as i64) })
            .sum()
    }
}

trait SnfInt: Clone + Ord {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64(v: i64) -> Self;
    fn abs(&self) -> Self;
    fn checked_mul_sub(&self, q: &Self, other: &Self) -> Option<Self>; // self - q*other
    fn div_round(&self, other: &Self) -> Self;
    fn to_u64(&self) -> u64;
}

impl SnfInt for i128 {
    fn zero() -> Self {
        0
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn from_i64(v: i64) -> Self {
        v as i128
    }
    fn abs(&self) -> Self {
        i128::abs(*self)
    }
    fn checked_mul_sub(&self, q: &Self, other: &Self) -> Option<Self> {
        q.checked_mul(*other).and_then(|p| self.checked_sub(p))
    }
    fn div_round(&self, other: &Self) -> Self {
        // Round toward nearest so remainders shrink fast.
        let (a, b) = (*self, *other);
        let q = a / b;
        let r = a - q * b;
        if 2 * r.abs() > b.abs() {
            q + if (r < 0) == (b < 0) { 1 } else { -1 }
        } else {
            q
        }
    }
    fn to_u64(&self) -> u64 {
        u64::try_from(*self).expect("torsion coefficient fits u64")
    }
}

impl SnfInt for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn checked_mul_sub(&self, q: &Self, other: &Self) -> Option<Self> {
        Some(self - q * other)
    }
    fn div_round(&self, other: &Self) -> Self {
        let q = self / other;
        let r = self - &q * other;
        if Signed::abs(&(&r * BigInt::from(2))) > Signed::abs(other) {
            if (r.is_negative()) == (other.is_negative()) {
                q + BigInt::one()
            } else {
                q - BigInt::one()
            }
        } else {
            q
        }
    }
    fn to_u64(&self) -> u64 {
        ToPrimitive::to_u64(self).expect("torsion coefficient fits u64")
    }
}

/// Sparse integer matrix with row-major storage and a per-column index.
struct Sparse<T> {
    rows: Vec<BTreeMap<usize, T>>,
    cols: Vec<BTreeSet<usize>>,
}

impl<T: SnfInt> Sparse<T> {
    fn new(n_rows: usize, n_cols: usize, entries: &[(usize, usize, i64)]) -> Self {
        let mut rows: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n_rows];
        let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_cols];
        for &(r, c, v) in entries {
            if v != 0 {
                rows[r].insert(c, T::from_i64(v));
                cols[c].insert(r);
            }
        }
        Sparse { rows, cols }
    }

    fn set(&mut self, r: usize, c: usize, v: T) {
        if v.is_zero() {
            self.rows[r].remove(&c);
            self.cols[c].remove(&r);
        } else {
            self.rows[r].insert(c, v);
            self.cols[c].insert(r);
        }
    }

    fn get(&self, r: usize, c: usize) -> T {
        self.rows[r].get(&c).cloned().unwrap_or_else(T::zero)
    }

    /// row_dst -= q * row_src; None on overflow.
    fn row_op(&mut self, dst: usize, src: usize, q: &T) -> Option<()> {
        let src_row: Vec<(usize, T)> = self.rows[src].iter().map(|(c, v)| (*c, v.clone())).collect();
        for (c, v) in src_row {
            let new = self.get(dst, c).checked_mul_sub(q, &v)?;
            self.set(dst, c, new);
        }
        Some(())
    }

    /// col_dst -= q * col_src; None on overflow.
    fn col_op(&mut self, dst: usize, src: usize, q: &T) -> Option<()> {
        let src_col: Vec<usize> = self.cols[src].iter().copied().collect();
        for r in src_col {
            let v = self.get(r, src);
            let new = self.get(r, dst).checked_mul_sub(q, &v)?;
            self.set(r, dst, new);
        }
        Some(())
    }
}

/// Diagonal of the Smith normal form (non-zero entries, made positive, in
/// divisor order). None when the fixed-width type overflowed.
fn snf_diagonal<T: SnfInt>(
    n_rows: usize,
    n_cols: usize,
    entries: &[(usize, usize, i64)],
) -> Option<Vec<u64>> {
    let mut m: Sparse<T> = Sparse::new(n_rows, n_cols, entries);
    let mut row_done = vec![false; n_rows];
    let mut col_done = vec![false; n_cols];
    let mut diag: Vec<T> = Vec::new();

    loop {
        // Minimal-absolute-value pivot among untouched rows/cols.
        let mut pivot: Option<(usize, usize, T)> = None;
        'scan: for r in 0..n_rows {
            if row_done[r] {
                continue;
            }
            for (c, v) in &m.rows[r] {
                if col_done[*c] {
                    continue;
                }
                let a = v.abs();
                match &pivot {
                    Some((_, _, best)) if best.abs() <= a => {}
                    _ => {
                        let unit = a == T::from_i64(1);
                        pivot = Some((r, *c, a));
                        if unit {
                            break 'scan;
                        }
                    }
                }
            }
        }
        let Some((pr, pc, _)) = pivot else { break };

        // Clear the pivot column and row; a non-divisible remainder becomes
        // the new, strictly smaller pivot, so this terminates.
        loop {
            let pv = m.get(pr, pc);
            let mut clean = true;
            let col: Vec<usize> = m.cols[pc].iter().copied().filter(|&r| r != pr && !row_done[r]).collect();
            for r in col {
                let v = m.get(r, pc);
                let q = v.div_round(&pv);
                m.row_op(r, pr, &q)?;
                if !m.get(r, pc).is_zero() {
                    clean = false;
                }
            }
            let row: Vec<usize> = m.rows[pr].keys().copied().filter(|&c| c != pc && !col_done[c]).collect();
            for c in row {
                let v = m.get(pr, c);
                let q = v.div_round(&pv);
                m.col_op(c, pc, &q)?;
                if !m.get(pr, c).is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
            // Smaller entries may now live in the pivot row/col; move one in.
            let mut best: Option<(usize, usize, T)> = None;
            for r in m.cols[pc].iter().filter(|&&r| !row_done[r]) {
                let a = m.get(*r, pc).abs();
                if best.as_ref().map_or(true, |(_, _, b)| a < b.abs()) {
                    best = Some((*r, pc, a));
                }
            }
            for c in m.rows[pr].keys().filter(|&&c| !col_done[c]) {
                let a = m.get(pr, *c).abs();
                if best.as_ref().map_or(true, |(_, _, b)| a < b.abs()) {
                    best = Some((pr, *c, a));
                }
            }
            // The loop continues with the same (pr, pc); entries shrank.
            let _ = best;
        }
        diag.push(m.get(pr, pc).abs());
        row_done[pr] = true;
        col_done[pc] = true;
    }

    // Enforce the divisibility chain on the diagonal.
    let mut d: Vec<u64> = diag.iter().map(|v| v.to_u64()).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..d.len() {
            for j in i + 1..d.len() {
                if d[j] % d[i] != 0 {
                    let g = num_integer::gcd(d[i], d[j]);
                    let l = d[i] / g * d[j];
                    d[i] = g;
                    d[j] = l;
                    changed = true;
                }
            }
        }
    }
    d.sort_unstable();
    Some(d)
}

fn snf_with_fallback(n_rows: usize, n_cols: usize, entries: &[(usize, usize, i64)]) -> Vec<u64> {
    match snf_diagonal::<i128>(n_rows, n_cols, entries) {
        Some(d) => d,
        None => snf_diagonal::<BigInt>(n_rows, n_cols, entries)
            .expect("BigInt elimination cannot overflow"),
    }
}

/// Signed boundary matrix entries of dimension k: rows = (k-1)-faces,
/// columns = k-faces, plus the face counts.
fn boundary_entries(
    c: &SimplicialComplex,
    k: usize,
) -> (usize, usize, Vec<(usize, usize, i64)>) {
    let kfaces: Vec<Vec<usize>> = c.faces(k).into_iter().collect();
    let rfaces: Vec<Vec<usize>> = c.faces(k - 1).into_iter().collect();
    let rindex: BTreeMap<&Vec<usize>, usize> =
        rfaces.iter().enumerate().map(|(i, f)| (f, i)).collect();
    let mut entries = Vec::new();
    for (j, f) in kfaces.iter().enumerate() {
        for (drop, sign) in (0..f.len()).map(|d| (d, if d % 2 == 0 { 1i64 } else { -1 })) {
            let mut r = f.clone();
            r.remove(drop);
            entries.push((rindex[&r], j, sign));
        }
    }
    (rfaces.len(), kfaces.len(), entries)
}

/// Integral simplicial homology in dimensions 0..=dim.
pub fn homology(c: &SimplicialComplex) -> HomologyProfile {
    let dim = c.dim();
    let n_faces: Vec<usize> = (0..=dim).map(|k| c.faces(k).len()).collect();
    // ranks[k] = rank of boundary_k, diagonal of boundary_{k} for torsion.
    let mut rank = vec![0usize; dim + 2];
    let mut diags: Vec<Vec<u64>> = vec![Vec::new(); dim + 2];
    for k in 1..=dim {
        let (nr, nc, entries) = boundary_entries(c, k);
        let d = snf_with_fallback(nr, nc, &entries);
        rank[k] = d.len();
        diags[k] = d;
    }
    let groups = (0..=dim)
        .map(|k| {
            let betti = n_faces[k] - rank[k] - rank[k + 1];
            let torsion = diags[k + 1].iter().copied().filter(|&d| d > 1).collect();
            HomologyGroup { betti, torsion }
        })
        .collect();
    HomologyProfile { groups }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplicial::{
        boundary_of_simplex, csaszar_torus, grid_torus, octahedron_boundary, suspension,
    };

    #[test]
    fn sphere_homology() {
        let p = homology(&boundary_of_simplex(4));
        assert_eq!(p.betti(), vec![1, 0, 0, 1]);
        assert!(p.torsion_free());
        let p2 = homology(&octahedron_boundary());
        assert_eq!(p2.betti(), vec![1, 0, 1]);
    }

    #[test]
    fn torus_homology() {
        let p = homology(&csaszar_torus());
        assert_eq!(p.betti(), vec![1, 2, 1]);
        assert!(p.torsion_free());
        assert_eq!(homology(&grid_torus(3, 4)).betti(), vec![1, 2, 1]);
    }

    #[test]
    fn suspension_of_torus_homology() {
        // H_*(sigma T^2) = (Z, 0, Z^2, Z).
        let p = homology(&suspension(&csaszar_torus()));
        assert_eq!(p.betti(), vec![1, 0, 2, 1]);
    }

    #[test]
    fn projective_plane_torsion() {
        // The 6-vertex RP^2 (icosahedron vertices mod antipody): H_1 = Z/2.
        let rp2 = SimplicialComplex::from_facets(
            6,
            vec![
                vec![0, 1, 2],
                vec![0, 1, 3],
                vec![0, 2, 4],
                vec![0, 3, 5],
                vec![0, 4, 5],
                vec![1, 2, 5],
                vec![1, 3, 4],
                vec![1, 4, 5],
                vec![2, 3, 4],
                vec![2, 3, 5],
            ],
        );
        assert!(rp2.is_closed_pseudomanifold(2).unwrap());
        let p = homology(&rp2);
        assert_eq!(p.betti(), vec![1, 0, 0]);
        assert_eq!(p.groups[1].torsion, vec![2]);
    }

    #[test]
    fn disjoint_union_adds_homology() {
        let a = boundary_of_simplex(3);
        let b = csaszar_torus();
        let u = a.disjoint_union(&b);
        let (pa, pb, pu) = (homology(&a), homology(&b), homology(&u));
        for k in 0..=2 {
            assert_eq!(pu.groups[k].betti, pa.groups[k].betti + pb.groups[k].betti);
        }
    }

    #[test]
    fn euler_poincare_agrees() {
        for c in [
            boundary_of_simplex(4),
            csaszar_torus(),
            octahedron_boundary(),
            grid_torus(3, 5),
        ] {
            let p = homology(&c);
            assert_eq!(p.euler_characteristic(), c.euler_characteristic());
        }
    }
}
