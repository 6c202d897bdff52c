//! Univariate polynomials with truncated-Laurent-series coefficients —
//! characteristic polynomials of matrices over F_q((t)) and their Euclidean
//! algebra (division, extended gcd, resultants via the Sylvester matrix).
//!
//! Degree bookkeeping treats a zero-to-precision coefficient as zero: the
//! degree is the largest index whose coefficient is certified nonzero.
//! Downstream consumers re-verify everything built on top of this (factor
//! degrees, idempotent identities), so a precision shortfall surfaces as an
//! explicit verification error rather than a wrong answer.

use crate::error::{Error, Result};
use crate::fq::FieldRef;
use crate::series::Series;

#[derive(Clone)]
pub struct SPoly {
    field: FieldRef,
    /// coeffs[i] multiplies x^i; trailing zero-to-precision entries trimmed.
    coeffs: Vec<Series>,
    /// Horizon used when materializing zero coefficients.
    horizon: i64,
}

impl std::fmt::Debug for SPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .map(|(i, c)| format!("({})*x^{}", c.render(), i))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl SPoly {
    pub fn new(field: FieldRef, coeffs: Vec<Series>, horizon: i64) -> Self {
        let mut p = SPoly { field, coeffs, horizon };
        p.trim();
        p
    }

    pub fn zero(field: FieldRef, horizon: i64) -> Self {
        SPoly { field, coeffs: vec![], horizon }
    }

    pub fn one(field: FieldRef, horizon: i64) -> Self {
        let c = Series::one(field.clone(), horizon);
        SPoly { field, coeffs: vec![c], horizon }
    }

    pub fn x(field: FieldRef, horizon: i64) -> Self {
        let z = Series::zero(field.clone(), horizon);
        let o = Series::one(field.clone(), horizon);
        SPoly { field, coeffs: vec![z, o], horizon }
    }

    pub fn constant(c: Series) -> Self {
        let field = c.field().clone();
        let horizon = c.horizon();
        Self::new(field, vec![c], horizon)
    }

    /// Coefficients given from the leading one down to the constant term.
    pub fn from_descending(field: FieldRef, mut coeffs: Vec<Series>, horizon: i64) -> Self {
        coeffs.reverse();
        Self::new(field, coeffs, horizon)
    }

    fn trim(&mut self) {
        while self
            .coeffs
            .last()
            .map_or(false, |c| c.is_zero_to_precision())
        {
            self.coeffs.pop();
        }
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn horizon(&self) -> i64 {
        self.horizon
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> Series {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| Series::zero(self.field.clone(), self.horizon))
    }

    pub fn coeffs(&self) -> &[Series] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&Series> {
        self.coeffs.last()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Whether the polynomial is monic to precision (leading coefficient is
    /// the constant series 1).
    pub fn is_monic(&self) -> bool {
        match self.leading() {
            None => false,
            Some(c) => {
                c.val_exact() == Some(0)
                    && c.terms().count() == 1
                    && c.coeff(0) == self.field.one()
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i).add(&other.coeff(i))).collect();
        Self::new(self.field.clone(), coeffs, self.horizon.min(other.horizon))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i).sub(&other.coeff(i))).collect();
        Self::new(self.field.clone(), coeffs, self.horizon.min(other.horizon))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.field.clone(), self.horizon.min(other.horizon));
        }
        let mut coeffs =
            vec![Series::zero(self.field.clone(), self.horizon.min(other.horizon));
                self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        Self::new(self.field.clone(), coeffs, self.horizon.min(other.horizon))
    }

    pub fn scale(&self, s: &Series) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c.mul(s)).collect();
        Self::new(self.field.clone(), coeffs, self.horizon.min(s.horizon()))
    }

    pub fn neg(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c.neg()).collect();
        Self::new(self.field.clone(), coeffs, self.horizon)
    }

    pub fn derivative(&self) -> Self {
        let f = &self.field;
        let coeffs: Vec<Series> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.scale(f.from_u64(i as u64)))
            .collect();
        Self::new(f.clone(), coeffs, self.horizon)
    }

    /// Euclidean division; the divisor's leading coefficient must be a
    /// certified nonzero series (it is inverted in F_q((t))).
    pub fn divrem(&self, div: &Self) -> Result<(Self, Self)> {
        let Some(db) = div.degree() else {
            return Err(Error::InvalidInput("polynomial division by zero".into()));
        };
        let lead_inv = div.leading().unwrap().inv()?;
        let mut rem = self.clone();
        let f = self.field.clone();
        let h = self.horizon.min(div.horizon);
        if rem.degree().map_or(true, |da| da < db) {
            return Ok((Self::zero(f, h), rem));
        }
        let mut quo = vec![Series::zero(f.clone(), h); rem.coeffs.len() - db];
        while let Some(da) = rem.degree() {
            if da < db {
                break;
            }
            let q = rem.leading().unwrap().mul(&lead_inv);
            for j in 0..=db {
                let s = q.mul(&div.coeff(j));
                rem.coeffs[da - db + j] = rem.coeffs[da - db + j].sub(&s);
            }
            quo[da - db] = q;
            rem.trim();
        }
        Ok((Self::new(f, quo, h), rem))
    }

    pub fn rem(&self, div: &Self) -> Result<Self> {
        Ok(self.divrem(div)?.1)
    }

    /// Extended gcd: returns (g, s, t) with s*self + t*other = g. The gcd is
    /// normalized monic.
    pub fn xgcd(&self, other: &Self) -> Result<(Self, Self, Self)> {
        let f = self.field.clone();
        let h = self.horizon.min(other.horizon);
        let mut r0 = self.clone();
        let mut r1 = other.clone();
        let mut s0 = Self::one(f.clone(), h);
        let mut s1 = Self::zero(f.clone(), h);
        let mut t0 = Self::zero(f.clone(), h);
        let mut t1 = Self::one(f.clone(), h);
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1)?;
            r0 = std::mem::replace(&mut r1, r);
            let ns = s0.sub(&q.mul(&s1));
            s0 = std::mem::replace(&mut s1, ns);
            let nt = t0.sub(&q.mul(&t1));
            t0 = std::mem::replace(&mut t1, nt);
        }
        if let Some(lead) = r0.leading() {
            let inv = lead.inv()?;
            Ok((r0.scale(&inv), s0.scale(&inv), t0.scale(&inv)))
        } else {
            Ok((r0, s0, t0))
        }
    }

    /// Evaluate at a series argument (Horner).
    pub fn eval(&self, x: &Series) -> Series {
        let f = self.field.clone();
        let h = self.horizon.min(x.horizon());
        let mut acc = Series::zero(f, h);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    /// Substitute x -> x + a (Taylor shift), exact in the coefficient ring.
    pub fn shift_var(&self, a: &Series) -> Self {
        // P(x) = sum q_i (x - a)^i  ==>  P(x + a) = sum q_i x^i, where the q_i
        // fall out of repeated synthetic division of P by (x - a)
        let f = self.field.clone();
        if self.is_zero() {
            return self.clone();
        }
        let mut work: Vec<Series> = self.coeffs.clone();
        let mut out = Vec::with_capacity(work.len());
        loop {
            let d = work.len() - 1;
            if d == 0 {
                out.push(work.pop().unwrap());
                break;
            }
            let mut u = vec![Series::zero(f.clone(), self.horizon); d];
            u[d - 1] = work[d].clone();
            for i in (1..d).rev() {
                u[i - 1] = work[i].add(&u[i].mul(a));
            }
            out.push(work[0].add(&u[0].mul(a)));
            work = u;
        }
        Self::new(f, out, self.horizon)
    }

    /// Substitute x -> c*x for a series c.
    pub fn scale_var(&self, c: &Series) -> Self {
        let f = self.field.clone();
        let mut power = Series::one(f.clone(), self.horizon.min(c.horizon()));
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for a in &self.coeffs {
            coeffs.push(a.mul(&power));
            power = power.mul(c);
        }
        Self::new(f, coeffs, self.horizon)
    }

    /// Map all coefficients (e.g. embed into an extension, or substitute the
    /// uniformizer) — the closure receives each coefficient.
    pub fn map_coeffs(&self, field: FieldRef, mut f: impl FnMut(&Series) -> Series) -> Self {
        let coeffs: Vec<Series> = self.coeffs.iter().map(|c| f(c)).collect();
        let horizon = coeffs.iter().map(|c| c.horizon()).min().unwrap_or(self.horizon);
        Self::new(field, coeffs, horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::Fq;

    fn f7() -> FieldRef {
        Fq::new(7, 1).unwrap()
    }

    fn int_poly(f: &FieldRef, cs: &[&[i64]], h: i64) -> SPoly {
        let coeffs = cs
            .iter()
            .map(|c| Series::from_int_coeffs(f.clone(), c, h))
            .collect();
        SPoly::new(f.clone(), coeffs, h)
    }

    #[test]
    fn divrem_reconstructs() {
        let f = f7();
        // P = x^3 + (t)x + (1+t^2), D = x + (2+t)
        let p = int_poly(&f, &[&[1, 0, 1], &[0, 1], &[], &[1]], 16);
        let d = int_poly(&f, &[&[2, 1], &[1]], 16);
        let (q, r) = p.divrem(&d).unwrap();
        let back = q.mul(&d).add(&r);
        for i in 0..4 {
            let h = back.coeff(i).horizon().min(p.coeff(i).horizon());
            assert!(back.coeff(i).eq_to(&p.coeff(i), h), "coefficient {i}");
        }
        assert!(r.degree().map_or(true, |dr| dr < 1));
    }

    #[test]
    fn xgcd_of_coprime_factors() {
        let f = f7();
        // P1 = x - t, P2 = x + t: coprime over F_7((t))
        let p1 = int_poly(&f, &[&[0, -1], &[1]], 16);
        let p2 = int_poly(&f, &[&[0, 1], &[1]], 16);
        let (g, s, t) = p1.xgcd(&p2).unwrap();
        assert_eq!(g.degree(), Some(0));
        let combo = s.mul(&p1).add(&t.mul(&p2));
        // combo == g (a unit constant, normalized to 1)
        assert_eq!(combo.degree(), Some(0));
        let c = combo.coeff(0);
        assert_eq!(c.val_exact(), Some(0));
        assert_eq!(c.coeff(0), f.one());
    }

    #[test]
    fn eval_horner() {
        let f = f7();
        // P = x^2 - t^3 evaluated at x = t gives t^2 - t^3
        let p = int_poly(&f, &[&[0, 0, 0, -1], &[], &[1]], 12);
        let x = Series::monomial(f.clone(), f.one(), 1, 12);
        let v = p.eval(&x);
        assert_eq!(v.val_exact(), Some(2));
        assert_eq!(v.coeff(2), f.one());
        assert_eq!(v.coeff(3), f.from_i64(-1));
    }

    #[test]
    fn shift_var_matches_direct_expansion() {
        let f = f7();
        // P = x^2 + 3x + 1, shift by a = 2: P(x+2) = x^2 + 7x + 11 = x^2 + 4
        let p = int_poly(&f, &[&[1], &[3], &[1]], 12);
        let a = Series::constant(f.clone(), f.from_u64(2), 12);
        let shifted = p.shift_var(&a);
        assert_eq!(shifted.coeff(0).coeff(0), f.from_u64(4)); // 11 mod 7
        assert!(shifted.coeff(1).is_zero_to_precision()); // 7 mod 7
        assert_eq!(shifted.coeff(2).coeff(0), f.one());
    }

    #[test]
    fn scale_var_substitutes() {
        let f = f7();
        // P = x^2 + x, scale x -> t x: t^2 x^2 + t x
        let p = int_poly(&f, &[&[], &[1], &[1]], 12);
        let t = Series::monomial(f.clone(), f.one(), 1, 12);
        let s = p.scale_var(&t);
        assert_eq!(s.coeff(1).val_exact(), Some(1));
        assert_eq!(s.coeff(2).val_exact(), Some(2));
    }
}
