//! Truncated Laurent series over a finite field: elements of F_q((t)) known
//! up to an explicit precision horizon.
//!
//! Representation: a valuation `val`, packed coefficients for t^val, t^(val+1),
//! ..., and a `horizon` such that every exponent strictly below the horizon is
//! known. Two invariants:
//!   * nonzero series: the first stored coefficient is nonzero and
//!     val + coeffs.len() <= horizon;
//!   * zero-to-precision: no stored coefficients and val == horizon (the
//!     series is indistinguishable from 0 below t^horizon).
//!
//! All operations propagate precision pessimistically, so a coefficient is
//! reported only when it is certain. Exact cancellation may legitimately
//! produce a zero-to-precision result; callers that need a valuation must
//! handle that case (usually by raising the working precision and retrying).

use crate::error::{Error, Result};
use crate::fq::{FieldRef, FqElem};
use std::fmt::Write as _;

#[derive(Clone)]
pub struct Series {
    field: FieldRef,
    val: i64,
    coeffs: Vec<FqElem>,
    horizon: i64,
}

impl std::fmt::Debug for Series {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Series {
    // ---- constructors ----

    pub fn zero(field: FieldRef, horizon: i64) -> Self {
        Series { field, val: horizon, coeffs: vec![], horizon }
    }

    pub fn constant(field: FieldRef, c: FqElem, horizon: i64) -> Self {
        Self::monomial(field, c, 0, horizon)
    }

    pub fn one(field: FieldRef, horizon: i64) -> Self {
        let c = field.one();
        Self::monomial(field, c, 0, horizon)
    }

    pub fn monomial(field: FieldRef, c: FqElem, exp: i64, horizon: i64) -> Self {
        if c.is_zero() || exp >= horizon {
            return Self::zero(field, horizon);
        }
        Series { field, val: exp, coeffs: vec![c], horizon }
    }

    /// Build from (exponent, coefficient) terms; duplicate exponents add,
    /// terms at or above the horizon are discarded.
    pub fn from_terms(field: FieldRef, terms: &[(i64, FqElem)], horizon: i64) -> Self {
        let mut map: std::collections::BTreeMap<i64, FqElem> = std::collections::BTreeMap::new();
        for &(e, c) in terms {
            if e >= horizon || c.is_zero() {
                continue;
            }
            let entry = map.entry(e).or_insert(FqElem::ZERO);
            *entry = field.add(*entry, c);
        }
        map.retain(|_, c| !c.is_zero());
        let Some((&lo, _)) = map.iter().next() else {
            return Self::zero(field, horizon);
        };
        let (&hi, _) = map.iter().next_back().unwrap();
        let mut coeffs = vec![FqElem::ZERO; (hi - lo + 1) as usize];
        for (e, c) in map {
            coeffs[(e - lo) as usize] = c;
        }
        Series { field, val: lo, coeffs, horizon }
    }

    /// Integer polynomial in t (index = exponent), exact up to the horizon.
    pub fn from_int_coeffs(field: FieldRef, coeffs: &[i64], horizon: i64) -> Self {
        let terms: Vec<(i64, FqElem)> = coeffs
            .iter()
            .enumerate()
            .map(|(e, &c)| (e as i64, field.from_i64(c)))
            .collect();
        Self::from_terms(field, &terms, horizon)
    }

    // ---- basic accessors ----

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn horizon(&self) -> i64 {
        self.horizon
    }

    /// Exact valuation, or `None` when the series is zero to precision.
    pub fn val_exact(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.val)
        }
    }

    /// A certified lower bound for the valuation (the valuation itself when
    /// nonzero, the horizon when zero to precision).
    pub fn val_lower_bound(&self) -> i64 {
        self.val
    }

    pub fn is_zero_to_precision(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.val_exact() == Some(0)
    }

    pub fn leading(&self) -> Option<(i64, FqElem)> {
        self.coeffs.first().map(|&c| (self.val, c))
    }

    /// Coefficient of t^e, `None` when e is beyond the horizon.
    pub fn coeff_known(&self, e: i64) -> Option<FqElem> {
        if e >= self.horizon {
            return None;
        }
        if e < self.val || e >= self.val + self.coeffs.len() as i64 {
            return Some(FqElem::ZERO);
        }
        Some(self.coeffs[(e - self.val) as usize])
    }

    /// Coefficient of t^e; panics beyond the horizon (internal contract).
    pub fn coeff(&self, e: i64) -> FqElem {
        self.coeff_known(e)
            .unwrap_or_else(|| panic!("coefficient of t^{e} beyond horizon {}", self.horizon))
    }

    /// Known nonzero terms in ascending exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, FqElem)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, &c)| (self.val + i as i64, c))
    }

    fn normalized(field: FieldRef, mut val: i64, mut coeffs: Vec<FqElem>, horizon: i64) -> Self {
        // drop leading zeros, clip at horizon
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => Self::zero(field, horizon),
            Some(k) => {
                coeffs.drain(..k);
                val += k as i64;
                let keep = (horizon - val).max(0) as usize;
                coeffs.truncate(keep.min(coeffs.len()));
                while coeffs.last().map_or(false, |c| c.is_zero()) {
                    coeffs.pop();
                }
                if coeffs.is_empty() || val >= horizon {
                    Self::zero(field, horizon)
                } else {
                    Series { field, val, coeffs, horizon }
                }
            }
        }
    }

    // ---- arithmetic ----

    pub fn add(&self, other: &Self) -> Self {
        let f = self.field.clone();
        let horizon = self.horizon.min(other.horizon);
        if self.coeffs.is_empty() && other.coeffs.is_empty() {
            return Self::zero(f, horizon);
        }
        let lo = self.val.min(other.val);
        let hi = (self.val + self.coeffs.len() as i64).max(other.val + other.coeffs.len() as i64);
        let mut coeffs = vec![FqElem::ZERO; (hi - lo) as usize];
        for (e, c) in self.terms() {
            coeffs[(e - lo) as usize] = c;
        }
        for (e, c) in other.terms() {
            let slot = &mut coeffs[(e - lo) as usize];
            *slot = f.add(*slot, c);
        }
        Self::normalized(f, lo, coeffs, horizon)
    }

    pub fn neg(&self) -> Self {
        let f = self.field.clone();
        let coeffs = self.coeffs.iter().map(|&c| f.neg(c)).collect();
        Series { field: f, val: self.val, coeffs, horizon: self.horizon }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let f = self.field.clone();
        // val + coeffs.len() <= horizon, and for zero-to-precision val == horizon,
        // so the single formula below covers every case
        let horizon = (self.val + other.horizon).min(other.val + self.horizon);
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero(f, horizon);
        }
        let val = self.val + other.val;
        let len = ((horizon - val).max(0) as usize).min(self.coeffs.len() + other.coeffs.len() - 1);
        let mut coeffs = vec![FqElem::ZERO; len];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                coeffs[i + j] = f.add(coeffs[i + j], f.mul(a, b));
            }
        }
        Self::normalized(f, val, coeffs, horizon)
    }

    pub fn scale(&self, c: FqElem) -> Self {
        let f = self.field.clone();
        if c.is_zero() {
            return Self::zero(f, self.horizon);
        }
        let coeffs = self.coeffs.iter().map(|&a| f.mul(a, c)).collect();
        Self::normalized(f, self.val, coeffs, self.horizon)
    }

    /// Multiply by t^e.
    pub fn shift(&self, e: i64) -> Self {
        Series {
            field: self.field.clone(),
            val: self.val + e,
            coeffs: self.coeffs.clone(),
            horizon: self.horizon + e,
        }
    }

    /// Restrict to a (possibly smaller) horizon.
    pub fn truncate(&self, horizon: i64) -> Self {
        let h = self.horizon.min(horizon);
        Self::normalized(self.field.clone(), self.val, self.coeffs.clone(), h)
    }

    pub fn pow(&self, e: u32) -> Self {
        if e == 0 {
            return Self::one(self.field.clone(), self.horizon);
        }
        // square-and-multiply; mul handles all horizon bookkeeping
        let mut base = self.clone();
        let mut e = e;
        let mut result: Option<Series> = None;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.mul(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result.unwrap()
    }

    /// Multiplicative inverse. Errors when the series is zero to precision
    /// (there is no certified leading term to invert).
    pub fn inv(&self) -> Result<Self> {
        let Some((v, c)) = self.leading() else {
            return Err(Error::InversionOfUncertainZero(self.horizon));
        };
        let f = self.field.clone();
        let c_inv = f.inv(c).expect("leading coefficient nonzero");
        // relative precision m: u_i known for 1 <= i < m
        let m = (self.horizon - self.val) as usize;
        // w = (1+u)^{-1}: w_0 = 1, w_i = -sum_{j=1..i} u_j w_{i-j}
        let u = |i: usize| -> FqElem {
            // coefficient of t^(v+i) divided by leading coefficient
            let raw = self.coeffs.get(i).copied().unwrap_or(FqElem::ZERO);
            f.mul(raw, c_inv)
        };
        let mut w = vec![f.zero(); m];
        if m > 0 {
            w[0] = f.one();
        }
        for i in 1..m {
            let mut s = f.zero();
            for j in 1..=i {
                s = f.add(s, f.mul(u(j), w[i - j]));
            }
            w[i] = f.neg(s);
        }
        let coeffs: Vec<FqElem> = w.iter().map(|&x| f.mul(x, c_inv)).collect();
        Ok(Self::normalized(f, -v, coeffs, self.horizon - 2 * v))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    /// Square root, when the valuation is even and the leading coefficient is
    /// a square. Requires odd residue characteristic (the coefficient
    /// recurrence divides by 2). Returns `None` when the leading coefficient
    /// is a non-square; errors on zero-to-precision input.
    pub fn sqrt(&self) -> Result<Option<Self>> {
        let Some((v, c)) = self.leading() else {
            return Err(Error::InversionOfUncertainZero(self.horizon));
        };
        let f = self.field.clone();
        if f.p() == 2 {
            return Err(Error::NoNonSquare { p: f.p(), k: f.k() });
        }
        if v % 2 != 0 {
            return Ok(None);
        }
        let Some(r0) = f.sqrt(c)? else {
            return Ok(None);
        };
        // s = c t^v (1 + u); y^2 = 1 + u with y_0 = 1,
        // y_i = (u_i - sum_{j=1..i-1} y_j y_{i-j}) / 2
        let m = (self.horizon - self.val) as usize;
        let c_inv = f.inv(c).expect("nonzero");
        let u = |i: usize| -> FqElem {
            let raw = self.coeffs.get(i).copied().unwrap_or(FqElem::ZERO);
            f.mul(raw, c_inv)
        };
        let two_inv = f.inv(f.from_u64(2)).expect("odd characteristic");
        let mut y = vec![f.zero(); m];
        if m > 0 {
            y[0] = f.one();
        }
        for i in 1..m {
            let mut s = f.zero();
            for j in 1..i {
                s = f.add(s, f.mul(y[j], y[i - j]));
            }
            y[i] = f.mul(f.sub(u(i), s), two_inv);
        }
        // result valuation v/2, coefficients known up to horizon - v/2
        let coeffs: Vec<FqElem> = y.iter().map(|&x| f.mul(x, r0)).collect();
        Ok(Some(Self::normalized(f, v / 2, coeffs, self.horizon - v / 2)))
    }

    /// Formal derivative d/dt.
    pub fn derivative(&self) -> Self {
        let f = self.field.clone();
        let terms: Vec<(i64, FqElem)> = self
            .terms()
            .filter(|&(e, _)| e != 0)
            .map(|(e, c)| (e - 1, f.mul(f.from_i64(e.rem_euclid(f.p() as i64)), c)))
            .collect();
        Self::from_terms(f, &terms, self.horizon - 1)
    }

    /// Apply a coefficient map into another field (e.g. a subfield embedding).
    pub fn map_coeffs(&self, target: FieldRef, f: impl Fn(FqElem) -> FqElem) -> Self {
        let coeffs: Vec<FqElem> = self.coeffs.iter().map(|&c| f(c)).collect();
        Self::normalized(target, self.val, coeffs, self.horizon)
    }

    /// Equality of all coefficients strictly below `upto` (must be within
    /// both horizons).
    pub fn eq_to(&self, other: &Self, upto: i64) -> bool {
        assert!(
            upto <= self.horizon && upto <= other.horizon,
            "comparison beyond horizon"
        );
        let lo = self.val.min(other.val);
        (lo..upto).all(|e| self.coeff(e) == other.coeff(e))
    }

    // ---- text ----

    /// Canonical rendering: ascending powers joined by ` + `, coefficient 1
    /// omitted before a power of t, exponent 1 written as `t`, and a trailing
    /// `O(t^N)` precision marker.
    pub fn render(&self) -> String {
        let f = &self.field;
        let mut out = String::new();
        for (e, c) in self.terms() {
            if !out.is_empty() {
                out.push_str(" + ");
            }
            let coeff_txt = f.render(c);
            if e == 0 {
                out.push_str(&coeff_txt);
            } else {
                let is_one = c == f.one();
                if !is_one {
                    let _ = write!(out, "{coeff_txt}*");
                }
                if e == 1 {
                    out.push('t');
                } else {
                    let _ = write!(out, "t^{e}");
                }
            }
        }
        if out.is_empty() {
            format!("O(t^{})", self.horizon)
        } else {
            let _ = write!(out, " + O(t^{})", self.horizon);
            out
        }
    }

    /// Render without the trailing precision marker — for values that are
    /// exact polynomials (canonical lattice entries), where `O(t^N)` would be
    /// noise. The zero polynomial prints as `0`.
    pub fn render_exact(&self) -> String {
        let full = self.render();
        match full.rfind(" + O(") {
            Some(i) => full[..i].to_string(),
            None => "0".to_string(),
        }
    }

    /// Parse the rendered grammar (also accepting `-` between terms and a
    /// missing precision marker, which defaults to `default_horizon`).
    pub fn parse(field: FieldRef, input: &str, default_horizon: i64) -> Result<Self> {
        let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::InvalidInput("empty series literal".into()));
        }
        let mut horizon = default_horizon;
        let mut terms: Vec<(i64, FqElem)> = vec![];
        for (sign, tok) in split_signed_terms(&compact)? {
            if tok.is_empty() {
                return Err(Error::InvalidInput(format!("empty term in {input:?}")));
            }
            if let Some(rest) = tok.strip_prefix("O(") {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::InvalidInput(format!("bad precision marker {tok:?}")))?;
                let e = parse_t_power(inner)?
                    .ok_or_else(|| Error::InvalidInput(format!("bad precision marker {tok:?}")))?;
                horizon = e;
                continue;
            }
            let (coeff_txt, t_txt) = match tok.find("*t") {
                Some(i) => (&tok[..i], &tok[i + 1..]),
                None => {
                    if tok.starts_with('t') {
                        ("", &tok[..])
                    } else {
                        (&tok[..], "")
                    }
                }
            };
            let mut c = if coeff_txt.is_empty() {
                field.one()
            } else {
                field.parse_elem(coeff_txt)?
            };
            if sign < 0 {
                c = field.neg(c);
            }
            let e = if t_txt.is_empty() {
                0
            } else {
                parse_t_power(t_txt)?
                    .ok_or_else(|| Error::InvalidInput(format!("bad term {tok:?}")))?
            };
            terms.push((e, c));
        }
        Ok(Self::from_terms(field, &terms, horizon))
    }
}

/// `t` -> 1, `t^e` -> e; `None` if not a power of t.
fn parse_t_power(s: &str) -> Result<Option<i64>> {
    if s == "t" {
        return Ok(Some(1));
    }
    let Some(exp) = s.strip_prefix("t^") else {
        return Ok(None);
    };
    exp.parse::<i64>()
        .map(Some)
        .map_err(|_| Error::InvalidInput(format!("bad exponent {exp:?}")))
}

/// Split a compact (whitespace-free) sum into signed terms. `+`/`-` split
/// terms except immediately after `^` or `*` or inside brackets/parens.
fn split_signed_terms(s: &str) -> Result<Vec<(i32, String)>> {
    let mut out = vec![];
    let mut cur = String::new();
    let mut sign = 1i32;
    let mut depth = 0i32;
    let mut prev: Option<char> = None;
    for ch in s.chars() {
        match ch {
            '[' | '(' => {
                depth += 1;
                cur.push(ch);
            }
            ']' | ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::InvalidInput(format!("unbalanced brackets in {s:?}")));
                }
                cur.push(ch);
            }
            '+' | '-' if depth == 0 && prev != Some('^') && prev != Some('*') && prev != Some(',') => {
                if cur.is_empty() && prev.is_none() {
                    // leading sign
                    sign = if ch == '-' { -1 } else { 1 };
                } else if cur.is_empty() {
                    return Err(Error::InvalidInput(format!("dangling sign in {s:?}")));
                } else {
                    out.push((sign, std::mem::take(&mut cur)));
                    sign = if ch == '-' { -1 } else { 1 };
                }
            }
            _ => cur.push(ch),
        }
        prev = Some(ch);
    }
    if depth != 0 {
        return Err(Error::InvalidInput(format!("unbalanced brackets in {s:?}")));
    }
    if cur.is_empty() {
        return Err(Error::InvalidInput(format!("dangling sign in {s:?}")));
    }
    out.push((sign, cur));
    Ok(out)
}
