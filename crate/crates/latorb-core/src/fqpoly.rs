//! Dense univariate polynomials over a finite field F_q.
//!
//! Coefficients are stored low-to-high and kept trimmed (no trailing zeros).
//! The main consumer is the branch census, which needs gcds, squarefreeness
//! tests, and complete root extraction inside small residue fields. Root
//! splitting uses deterministic probe sequences, so results are reproducible
//! and returned sorted by the field's element enumeration.

use crate::error::{Error, Result};
use crate::fq::{FieldRef, FqElem};

#[derive(Clone)]
pub struct FqPoly {
    field: FieldRef,
    c: Vec<FqElem>,
}

impl std::fmt::Debug for FqPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(i, e)| format!("{}*x^{}", self.field.render(*e), i))
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl PartialEq for FqPoly {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c
    }
}
impl Eq for FqPoly {}

impl FqPoly {
    pub fn new(field: FieldRef, coeffs: Vec<FqElem>) -> Self {
        let mut p = FqPoly { field, c: coeffs };
        p.trim();
        p
    }

    pub fn zero(field: FieldRef) -> Self {
        FqPoly { field, c: vec![] }
    }

    pub fn one(field: FieldRef) -> Self {
        let e = field.one();
        FqPoly { field, c: vec![e] }
    }

    pub fn constant(field: FieldRef, a: FqElem) -> Self {
        Self::new(field, vec![a])
    }

    /// The monomial x.
    pub fn x(field: FieldRef) -> Self {
        let (z, o) = (field.zero(), field.one());
        FqPoly { field, c: vec![z, o] }
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn coeffs(&self) -> &[FqElem] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> FqElem {
        self.c.get(i).copied().unwrap_or(FqElem::ZERO)
    }

    fn trim(&mut self) {
        while self.c.last().map_or(false, |e| e.is_zero()) {
            self.c.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.c.len() - 1)
        }
    }

    pub fn leading(&self) -> FqElem {
        self.c.last().copied().unwrap_or(FqElem::ZERO)
    }

    pub fn add(&self, other: &Self) -> Self {
        let f = &self.field;
        let n = self.c.len().max(other.c.len());
        let c = (0..n)
            .map(|i| f.add(self.coeff(i), other.coeff(i)))
            .collect();
        Self::new(self.field.clone(), c)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let f = &self.field;
        let n = self.c.len().max(other.c.len());
        let c = (0..n)
            .map(|i| f.sub(self.coeff(i), other.coeff(i)))
            .collect();
        Self::new(self.field.clone(), c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.field.clone());
        }
        let f = &self.field;
        let mut c = vec![f.zero(); self.c.len() + other.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.c.iter().enumerate() {
                c[i + j] = f.add(c[i + j], f.mul(a, b));
            }
        }
        Self::new(self.field.clone(), c)
    }

    pub fn scale(&self, s: FqElem) -> Self {
        let f = &self.field;
        Self::new(
            self.field.clone(),
            self.c.iter().map(|&a| f.mul(a, s)).collect(),
        )
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = self.field.inv(self.leading()).expect("nonzero leading");
        self.scale(inv)
    }

    /// Euclidean division; divisor must be nonzero.
    pub fn divrem(&self, div: &Self) -> (Self, Self) {
        assert!(!div.is_zero(), "polynomial division by zero");
        let f = self.field.clone();
        let db = div.degree().unwrap();
        let lead_inv = f.inv(div.leading()).expect("nonzero leading");
        let mut rem = self.clone();
        if rem.degree().map_or(true, |da| da < db) {
            return (Self::zero(f), rem);
        }
        let mut quo = vec![f.zero(); rem.c.len() - db];
        while let Some(da) = rem.degree() {
            if da < db {
                break;
            }
            let coef = f.mul(rem.leading(), lead_inv);
            quo[da - db] = coef;
            for j in 0..=db {
                let s = f.mul(coef, div.coeff(j));
                rem.c[da - db + j] = f.sub(rem.c[da - db + j], s);
            }
            rem.trim();
        }
        (Self::new(f, quo), rem)
    }

    pub fn rem(&self, div: &Self) -> Self {
        self.divrem(div).1
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut r0 = self.clone();
        let mut r1 = other.clone();
        while !r1.is_zero() {
            let r = r0.rem(&r1);
            r0 = std::mem::replace(&mut r1, r);
        }
        if r0.is_zero() {
            r0
        } else {
            r0.monic()
        }
    }

    pub fn derivative(&self) -> Self {
        let f = &self.field;
        let c = self
            .c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &a)| f.mul(f.from_u64(i as u64), a))
            .collect();
        Self::new(self.field.clone(), c)
    }

    pub fn eval(&self, x: FqElem) -> FqElem {
        let f = &self.field;
        let mut acc = f.zero();
        for &a in self.c.iter().rev() {
            acc = f.add(f.mul(acc, x), a);
        }
        acc
    }

    /// self^e mod m.
    pub fn powmod(&self, mut e: u128, m: &Self) -> Self {
        let mut base = self.rem(m);
        let mut acc = Self::one(self.field.clone());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(m);
            }
            base = base.mul(&base).rem(m);
            e >>= 1;
        }
        acc
    }

    /// Distinct roots in the coefficient field, with multiplicities, sorted
    /// by element enumeration order.
    pub fn roots(&self) -> Result<Vec<(FqElem, usize)>> {
        if self.is_zero() {
            return Err(Error::InvalidInput(
                "root extraction on the zero polynomial".into(),
            ));
        }
        let f = self.field.clone();
        // product of (x - r) over distinct roots: gcd(self, x^q - x)
        let x = Self::x(f.clone());
        let xq = x.powmod(f.q(), &self.monic());
        let lin = self.gcd(&xq.sub(&x));
        let mut roots = vec![];
        split_linear_product(&lin, &mut roots);
        roots.sort_by_key(|r| f.encode(*r));
        let mut out = vec![];
        for r in roots {
            // multiplicity by repeated division
            let lin_factor = Self::new(f.clone(), vec![f.neg(r), f.one()]);
            let mut rest = self.clone();
            let mut m = 0;
            loop {
                let (q, rem) = rest.divrem(&lin_factor);
                if !rem.is_zero() {
                    break;
                }
                m += 1;
                rest = q;
            }
            out.push((r, m));
        }
        Ok(out)
    }

    /// Whether gcd(self, self') = 1.
    pub fn is_squarefree(&self) -> bool {
        let d = self.derivative();
        if d.is_zero() {
            // nonconstant polynomial with zero derivative is a p-th power
            return self.degree() == Some(0);
        }
        self.gcd(&d).degree() == Some(0)
    }
}

/// Split a monic product of distinct linear factors into its roots, using
/// deterministic probes (elements in enumeration order).
fn split_linear_product(g: &FqPoly, out: &mut Vec<FqElem>) {
    let f = g.field().clone();
    match g.degree() {
        None | Some(0) => {}
        Some(1) => {
            let r = f.mul(f.neg(g.coeff(0)), f.inv(g.coeff(1)).expect("monic"));
            out.push(r);
        }
        Some(_) => {
            let g = g.monic();
            if f.p() == 2 {
                // characteristic 2: split with the additive trace map
                // T(rx) = sum (rx)^(2^i); its image partitions the roots
                let bits = {
                    let mut b = 0;
                    let mut qq = f.q();
                    while qq > 1 {
                        qq >>= 1;
                        b += 1;
                    }
                    b
                };
                for n in 1..f.q() {
                    let r = f.element(n);
                    let rx = FqPoly::new(f.clone(), vec![f.zero(), r]);
                    let mut term = rx.rem(&g);
                    let mut tr = term.clone();
                    for _ in 1..bits {
                        term = term.mul(&term).rem(&g);
                        tr = tr.add(&term);
                    }
                    let h = tr.gcd(&g);
                    if let Some(d) = h.degree() {
                        if d > 0 && d < g.degree().unwrap() {
                            split_linear_product(&h, out);
                            split_linear_product(&g.divrem(&h).0, out);
                            return;
                        }
                    }
                }
                unreachable!("trace probes always separate distinct roots in char 2");
            } else {
                let half = (f.q() - 1) / 2;
                for n in 0..f.q() {
                    let a = f.element(n);
                    let shifted = FqPoly::new(f.clone(), vec![a, f.one()]);
                    let h = shifted
                        .powmod(half, &g)
                        .sub(&FqPoly::one(f.clone()))
                        .gcd(&g);
                    if let Some(d) = h.degree() {
                        if d > 0 && d < g.degree().unwrap() {
                            split_linear_product(&h, out);
                            split_linear_product(&g.divrem(&h).0, out);
                            return;
                        }
                    }
                }
                unreachable!("quadratic-residue probes always separate distinct roots");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::Fq;

    fn poly(f: &FieldRef, cs: &[i64]) -> FqPoly {
        FqPoly::new(f.clone(), cs.iter().map(|&c| f.from_i64(c)).collect())
    }

    #[test]
    fn divrem_reconstructs() {
        let f = Fq::new(7, 1).unwrap();
        let a = poly(&f, &[3, 0, 1, 2, 5]);
        let b = poly(&f, &[1, 4, 2]);
        let (q, r) = a.divrem(&b);
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree().unwrap() < b.degree().unwrap());
    }

    #[test]
    fn roots_of_factored_polynomial() {
        // (x-1)(x-2)^2(x-5) over F_7, assembled by multiplication
        let f = Fq::new(7, 1).unwrap();
        let mut p = FqPoly::one(f.clone());
        for (r, m) in [(1, 1), (2, 2), (5, 1)] {
            let lin = poly(&f, &[-r, 1]);
            for _ in 0..m {
                p = p.mul(&lin);
            }
        }
        let roots = p.roots().unwrap();
        let expect: Vec<(FqElem, usize)> = [(1u64, 1usize), (2, 2), (5, 1)]
            .iter()
            .map(|&(r, m)| (f.from_u64(r), m))
            .collect();
        assert_eq!(roots, expect);
    }

    #[test]
    fn roots_exhaustive_oracle_small_fields() {
        // every polynomial's root set must match brute-force evaluation
        for (p, k) in [(3, 1), (2, 2), (5, 1), (3, 2)] {
            let f = Fq::new(p, k).unwrap();
            let q = f.q();
            // a spread of deterministic test polynomials
            for seed in 0..40u128 {
                let coeffs: Vec<FqElem> = (0..5)
                    .map(|i| f.element((seed.wrapping_mul(31).wrapping_add(7 * i + 1)) % q))
                    .collect();
                let poly = FqPoly::new(f.clone(), coeffs);
                if poly.is_zero() {
                    continue;
                }
                let mut oracle: Vec<FqElem> = (0..q)
                    .map(|n| f.element(n))
                    .filter(|&x| poly.eval(x).is_zero())
                    .collect();
                oracle.sort_by_key(|r| f.encode(*r));
                let got: Vec<FqElem> = poly.roots().unwrap().into_iter().map(|(r, _)| r).collect();
                assert_eq!(got, oracle, "q={q} seed={seed}");
            }
        }
    }

    #[test]
    fn char2_splitting() {
        // x^2 + x = x(x+1) over F_4 and a full split of x^4 - x
        let f = Fq::new(2, 2).unwrap();
        let p = poly(&f, &[0, 1, 1]);
        let roots: Vec<FqElem> = p.roots().unwrap().into_iter().map(|(r, _)| r).collect();
        assert_eq!(roots, vec![f.zero(), f.one()]);
        let x = FqPoly::x(f.clone());
        let xq = x.powmod(4, &poly(&f, &[1, 1, 1, 1, 1])); // arbitrary modulus
        let _ = xq; // powmod exercised
        let full = {
            // x^4 - x has every element as a root
            let c = vec![f.zero(), f.one(), f.zero(), f.zero(), f.one()];
            FqPoly::new(f.clone(), c)
        };
        let all: Vec<FqElem> = full.roots().unwrap().into_iter().map(|(r, _)| r).collect();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn squarefree_detection() {
        let f = Fq::new(5, 1).unwrap();
        assert!(poly(&f, &[1, 1, 1]).is_squarefree());
        let sq = poly(&f, &[-1, 1]).mul(&poly(&f, &[-1, 1]));
        assert!(!sq.is_squarefree());
        // x^5 - 2 has zero derivative in char 5 (it is (x - 2^(1/5))^5)
        assert!(!poly(&f, &[-2, 0, 0, 0, 0, 1]).is_squarefree());
    }

    #[test]
    fn embedding_root_is_deterministic() {
        // the F_9 modulus x^2+1 must have exactly two roots in F_81 = F_3[y]/(m),
        // and repeated extraction picks the same minimal one
        let big = Fq::internal(3, 4).unwrap();
        let p = FqPoly::new(
            big.clone(),
            vec![big.one(), big.zero(), big.one()],
        );
        let r1 = p.roots().unwrap();
        assert_eq!(r1.len(), 2);
        let r2 = p.roots().unwrap();
        assert_eq!(r1, r2);
        for (r, m) in &r1 {
            assert_eq!(*m, 1);
            assert_eq!(big.add(big.mul(*r, *r), big.one()), big.zero());
        }
    }
}
