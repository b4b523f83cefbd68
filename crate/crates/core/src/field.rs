//! Exact arithmetic in GF(p^e) for prime powers q = p^e with q <= 2^16.
//!
//! Elements are polynomials over Z/p reduced modulo a monic irreducible
//! polynomial of degree e. The default modulus is the lexicographically
//! smallest monic irreducible (coefficient tuple compared with the constant
//! term last), so field construction is deterministic; an explicit modulus
//! can be supplied to reproduce a particular coordinate system.

use crate::error::FieldError;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, PartialEq, Eq, Hash)]
struct FieldInner {
    p: u64,
    e: usize,
    /// Monic modulus, coefficients lowest degree first, length e + 1.
    modulus: Vec<u64>,
    q: u64,
}

/// A finite field GF(p^e). Cheap to clone and safe to share across threads.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Field(Arc<FieldInner>);

/// An element of a [`Field`], in polynomial representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    /// Length-e coefficient vector, lowest degree first, residues in [0, p).
    coeffs: Vec<u64>,
    field: Field,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Trims trailing zero coefficients (keeps at least an empty vec for zero).
fn trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

/// Remainder of `a` modulo the monic polynomial `m`, coefficients mod p.
fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r: Vec<u64> = a.to_vec();
    let dm = m.len() - 1;
    while trim(r.clone()).len() > dm {
        let r2 = trim(r.clone());
        let dr = r2.len() - 1;
        let lead = r2[dr];
        let shift = dr - dm;
        let mut out = r2.clone();
        for (i, &mc) in m.iter().enumerate() {
            let idx = i + shift;
            let sub = (lead * mc) % p;
            out[idx] = (out[idx] + p - sub) % p;
        }
        r = out;
    }
    trim(r)
}

fn poly_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    trim(out)
}

/// Enumerates monic polynomials of the given degree in the deterministic
/// tuple order (constant term last).
fn monic_polys(degree: usize, p: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let count = p.pow(degree as u32);
    for code in 0..count {
        // code digits, most significant digit = coefficient of x^(degree-1),
        // least significant digit = constant term; this realizes the
        // "constant term last" tuple order.
        let mut coeffs = vec![0u64; degree + 1];
        coeffs[degree] = 1;
        let mut c = code;
        for d in 0..degree {
            coeffs[d] = c % p;
            c /= p;
        }
        out.push(coeffs);
    }
    out
}

fn is_irreducible(m: &[u64], p: u64) -> bool {
    let deg = m.len() - 1;
    if deg == 0 {
        return false;
    }
    // Trial division by every monic polynomial of degree 1..=deg/2. For
    // deg <= 3 this degenerates to the root check.
    for d in 1..=deg / 2 {
        for cand in monic_polys(d, p) {
            if poly_rem(m, &cand, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Parses the CLI polynomial syntax: comma-separated residues, lowest degree
/// first, e.g. "2,1,1" for 2 + x + x^2.
pub fn parse_poly(text: &str) -> Result<Vec<u64>, FieldError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let v: u64 = part
            .parse()
            .map_err(|_| FieldError::BadPolynomial(format!("bad coefficient {part:?}")))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(FieldError::BadPolynomial("empty polynomial".into()));
    }
    Ok(out)
}

/// Renders a coefficient vector in the CLI syntax.
pub fn poly_string(coeffs: &[u64]) -> String {
    coeffs
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Builds GF(p^e). When `modulus` is omitted the deterministic default is
/// selected; when given, it must be monic of degree e and irreducible.
pub fn make_field(p: u64, e: usize, modulus: Option<&[u64]>) -> Result<Field, FieldError> {
    if !is_prime(p) {
        return Err(FieldError::CompositeCharacteristic(p));
    }
    assert!(e >= 1, "extension degree must be at least 1");
    let q = p
        .checked_pow(e as u32)
        .filter(|&q| q <= 1 << 16)
        .expect("field order must not exceed 2^16");
    let modulus = match modulus {
        Some(m) => {
            let m: Vec<u64> = m.iter().map(|c| c % p).collect();
            if m.len() != e + 1 || m[e] != 1 {
                return Err(FieldError::BadPolynomial(format!(
                    "modulus must be monic of degree {e}"
                )));
            }
            if !is_irreducible(&m, p) {
                return Err(FieldError::ReducibleModulus(poly_string(&m), p));
            }
            m
        }
        None => monic_polys(e, p)
            .into_iter()
            .find(|m| is_irreducible(m, p))
            .expect("an irreducible polynomial of every degree exists"),
    };
    Ok(Field(Arc::new(FieldInner { p, e, modulus, q })))
}

impl Field {
    pub fn p(&self) -> u64 {
        self.0.p
    }

    pub fn degree(&self) -> usize {
        self.0.e
    }

    pub fn order(&self) -> u64 {
        self.0.q
    }

    pub fn modulus(&self) -> &[u64] {
        &self.0.modulus
    }

    /// The element with the given coefficient vector (reduced mod p).
    pub fn element(&self, coeffs: &[u64]) -> FieldElement {
        assert!(coeffs.len() <= self.0.e, "too many coefficients");
        let mut c = vec![0u64; self.0.e];
        for (i, &x) in coeffs.iter().enumerate() {
            c[i] = x % self.0.p;
        }
        FieldElement {
            coeffs: c,
            field: self.clone(),
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(&[])
    }

    pub fn one(&self) -> FieldElement {
        self.element(&[1])
    }

    /// Element whose base-p digit expansion of `code` gives the coefficients,
    /// least significant digit = constant term.
    fn from_code(&self, code: u64) -> FieldElement {
        let mut c = code;
        let mut coeffs = vec![0u64; self.0.e];
        for slot in coeffs.iter_mut() {
            *slot = c % self.0.p;
            c /= self.0.p;
        }
        FieldElement {
            coeffs,
            field: self.clone(),
        }
    }

    /// All q elements, lexicographic on coefficient vectors with the
    /// low-degree coefficient varying slowest.
    pub fn all_elements(&self) -> Vec<FieldElement> {
        let mut out: Vec<FieldElement> = (0..self.0.q).map(|c| self.from_code(c)).collect();
        out.sort_by(|a, b| a.coeffs.cmp(&b.coeffs));
        out
    }

    /// All elements of multiplicative order q - 1, in deterministic order.
    pub fn primitive_elements(&self) -> Vec<FieldElement> {
        self.all_elements()
            .into_iter()
            .filter(|a| !a.is_zero() && a.multiplicative_order() == self.0.q - 1)
            .collect()
    }

    /// The deterministically first primitive element.
    pub fn first_primitive(&self) -> FieldElement {
        self.primitive_elements()
            .into_iter()
            .next()
            .expect("every finite field has a primitive element")
    }
}

impl FieldElement {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    fn check_same(&self, other: &FieldElement) -> Result<(), FieldError> {
        if self.field != other.field {
            return Err(FieldError::FieldMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check_same(other)?;
        let p = self.field.p();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a + b) % p)
            .collect();
        Ok(FieldElement {
            coeffs,
            field: self.field.clone(),
        })
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check_same(other)?;
        let p = self.field.p();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a + p - b) % p)
            .collect();
        Ok(FieldElement {
            coeffs,
            field: self.field.clone(),
        })
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check_same(other)?;
        let p = self.field.p();
        let prod = poly_mul(&trim(self.coeffs.clone()), &trim(other.coeffs.clone()), p);
        let rem = poly_rem(&prod, self.field.modulus(), p);
        Ok(self.field.element(&rem))
    }

    /// Integer power; exponent 0 yields 1 (including for base 0), negative
    /// exponents require a nonzero base.
    pub fn pow(&self, exp: i64) -> Result<FieldElement, FieldError> {
        if exp == 0 {
            return Ok(self.field.one());
        }
        let base = if exp < 0 { self.inv()? } else { self.clone() };
        let mut n = exp.unsigned_abs();
        let mut acc = self.field.one();
        let mut sq = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&sq)?;
            }
            sq = sq.mul(&sq)?;
            n >>= 1;
        }
        Ok(acc)
    }

    pub fn inv(&self) -> Result<FieldElement, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        // a^(q-2) = a^(-1) in GF(q).
        let mut acc = self.field.one();
        let mut sq = self.clone();
        let mut n = self.field.order() - 2;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&sq)?;
            }
            sq = sq.mul(&sq)?;
            n >>= 1;
        }
        Ok(acc)
    }

    pub fn div(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check_same(other)?;
        self.mul(&other.inv()?)
    }

    pub fn neg(&self) -> FieldElement {
        let p = self.field.p();
        FieldElement {
            coeffs: self.coeffs.iter().map(|&c| (p - c) % p).collect(),
            field: self.field.clone(),
        }
    }

    /// Order in the multiplicative group; panics on zero.
    pub fn multiplicative_order(&self) -> u64 {
        assert!(!self.is_zero(), "zero has no multiplicative order");
        let one = self.field.one();
        let mut acc = self.clone();
        let mut ord = 1;
        while acc != one {
            acc = acc.mul(self).expect("same field");
            ord += 1;
        }
        ord
    }

    /// Token used for vertex labels and CLI round-trips: the comma syntax,
    /// lowest degree first, e.g. "2,2" for 2 + 2x.
    pub fn token(&self) -> String {
        poly_string(&self.coeffs)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf5_is_z_mod_5() {
        let f = make_field(5, 1, None).unwrap();
        assert_eq!(f.order(), 5);
        assert_eq!(f.modulus(), &[0, 1]); // modulus x
    }

    #[test]
    fn gf9_figure_modulus() {
        // F_3[x]/<x^2 + x + 2>
        let f = make_field(3, 2, Some(&[2, 1, 1])).unwrap();
        assert_eq!(f.order(), 9);
        // alpha = 2x + 2 is a generator: alpha^8 = 1 and alpha^k != 1 for k < 8.
        let alpha = f.element(&[2, 2]);
        assert_eq!(alpha.multiplicative_order(), 8);
        for k in 1..8 {
            assert_ne!(alpha.pow(k).unwrap(), f.one());
        }
        assert_eq!(alpha.pow(8).unwrap(), f.one());
    }

    #[test]
    fn gf9_alternative_modulus_by_exhaustion() {
        // x^2 + 1 has no root mod 3: 0^2+1=1, 1^2+1=2, 2^2+1=2.
        for x in 0..3u64 {
            assert_ne!((x * x + 1) % 3, 0);
        }
        let f = make_field(3, 2, Some(&[1, 0, 1])).unwrap();
        assert_eq!(f.order(), 9);
        // And it is the deterministic default.
        let d = make_field(3, 2, None).unwrap();
        assert_eq!(d.modulus(), &[1, 0, 1]);
    }

    #[test]
    fn composite_characteristic_rejected() {
        assert_eq!(
            make_field(6, 1, None).unwrap_err(),
            FieldError::CompositeCharacteristic(6)
        );
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^2 + 2 = (x+1)(x+2) mod 3.
        let err = make_field(3, 2, Some(&[2, 0, 1])).unwrap_err();
        assert!(matches!(err, FieldError::ReducibleModulus(_, 3)));
    }

    #[test]
    fn gf5_multiplication_table_oracle() {
        // Brute-force multiplication table of GF(5): 2*3 = 1, so inv(2) = 3.
        let f = make_field(5, 1, None).unwrap();
        let two = f.element(&[2]);
        let three = f.element(&[3]);
        assert_eq!(two.mul(&three).unwrap(), f.one());
        assert_eq!(two.inv().unwrap(), three);
    }

    #[test]
    fn primitive_elements_by_brute_force() {
        // GF(5): orders of 1,2,3,4 are 1,4,4,2, so generators = {2, 3}.
        let f5 = make_field(5, 1, None).unwrap();
        let prim: Vec<u64> = f5.primitive_elements().iter().map(|e| e.coeffs[0]).collect();
        assert_eq!(prim, vec![2, 3]);

        // GF(9) under x^2+x+2: phi(8) = 4 generators, including 2x + 2.
        let f9 = make_field(3, 2, Some(&[2, 1, 1])).unwrap();
        let prim9 = f9.primitive_elements();
        assert_eq!(prim9.len(), 4);
        assert!(prim9.contains(&f9.element(&[2, 2])));

        // GF(13): phi(12) = 4 generators.
        let f13 = make_field(13, 1, None).unwrap();
        assert_eq!(f13.primitive_elements().len(), 4);
    }

    #[test]
    fn primitive_set_closed_under_inversion() {
        for (p, e) in [(5, 1), (13, 1), (3, 2), (17, 1)] {
            let f = make_field(p, e, None).unwrap();
            let prim = f.primitive_elements();
            for a in &prim {
                assert!(prim.contains(&a.inv().unwrap()));
            }
        }
    }

    #[test]
    fn fermat_lagrange_exhaustive_small() {
        for (p, e) in [(2, 1), (3, 1), (5, 1), (7, 1), (3, 2), (2, 3), (13, 1)] {
            let f = make_field(p, e, None).unwrap();
            for a in f.all_elements() {
                if !a.is_zero() {
                    assert_eq!(a.pow(f.order() as i64 - 1).unwrap(), f.one());
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_up_to_9() {
        for (p, e) in [(2, 1), (3, 1), (5, 1), (7, 1), (2, 2), (3, 2), (2, 3)] {
            let f = make_field(p, e, None).unwrap();
            let elems = f.all_elements();
            for a in &elems {
                for b in &elems {
                    assert_eq!(a.add(b).unwrap(), b.add(a).unwrap());
                    assert_eq!(a.mul(b).unwrap(), b.mul(a).unwrap());
                    for c in &elems {
                        let left = a.mul(&b.add(c).unwrap()).unwrap();
                        let right = a.mul(b).unwrap().add(&a.mul(c).unwrap()).unwrap();
                        assert_eq!(left, right);
                        assert_eq!(
                            a.add(b).unwrap().add(c).unwrap(),
                            a.add(&b.add(c).unwrap()).unwrap()
                        );
                        assert_eq!(
                            a.mul(b).unwrap().mul(c).unwrap(),
                            a.mul(&b.mul(c).unwrap()).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pow_conventions() {
        let f = make_field(5, 1, None).unwrap();
        // 0^0 := 1 by convention.
        assert_eq!(f.zero().pow(0).unwrap(), f.one());
        assert_eq!(f.zero().pow(-1), Err(FieldError::DivisionByZero));
        let a = f.element(&[3]);
        assert_eq!(a.pow(0).unwrap(), f.one());
        assert_eq!(a.pow(-1).unwrap(), a.inv().unwrap());
        assert_eq!(a.pow(-2).unwrap(), a.inv().unwrap().mul(&a.inv().unwrap()).unwrap());
    }

    #[test]
    fn mixing_fields_is_an_error() {
        let f5 = make_field(5, 1, None).unwrap();
        let f7 = make_field(7, 1, None).unwrap();
        let a = f5.element(&[1]);
        let b = f7.element(&[1]);
        assert_eq!(a.add(&b).unwrap_err(), FieldError::FieldMismatch);
    }

    #[test]
    fn poly_syntax_round_trip() {
        let v = parse_poly("2,1,1").unwrap();
        assert_eq!(v, vec![2, 1, 1]);
        assert_eq!(poly_string(&v), "2,1,1");
        assert!(parse_poly("2,x").is_err());
    }
}
