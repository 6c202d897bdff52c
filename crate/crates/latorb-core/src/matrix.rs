//! Square and rectangular matrices over F_q((t)) (truncated series entries).
//!
//! Determinants and characteristic polynomials use a column-subset dynamic
//! program (exact in any commutative ring, O(2^n n) ring operations), which
//! avoids division entirely — important because naive fraction-free or
//! trace-based methods divide by integers that can vanish in small
//! characteristic. Linear solving uses Gaussian elimination with
//! minimal-valuation pivoting, which is the numerically exact strategy here:
//! the pivot of smallest valuation keeps all eliminations inside O.

use crate::error::{Error, Result};
use crate::fq::FieldRef;
use crate::poly::SPoly;
use crate::series::Series;

#[derive(Clone)]
pub struct SMat {
    field: FieldRef,
    rows: usize,
    cols: usize,
    e: Vec<Series>,
}

impl std::fmt::Debug for SMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "SMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).render()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl SMat {
    pub fn zero(field: FieldRef, rows: usize, cols: usize, horizon: i64) -> Self {
        let z = Series::zero(field.clone(), horizon);
        SMat { field, rows, cols, e: vec![z; rows * cols] }
    }

    pub fn identity(field: FieldRef, n: usize, horizon: i64) -> Self {
        let mut m = Self::zero(field.clone(), n, n, horizon);
        for i in 0..n {
            m.set(i, i, Series::one(field.clone(), horizon));
        }
        m
    }

    pub fn from_fn(
        field: FieldRef,
        rows: usize,
        cols: usize,
        horizon: i64,
        mut f: impl FnMut(usize, usize) -> Series,
    ) -> Self {
        let mut m = Self::zero(field, rows, cols, horizon);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn from_rows(field: FieldRef, rows: Vec<Vec<Series>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged matrix rows".into()));
        }
        let e = rows.into_iter().flatten().collect();
        Ok(SMat { field, rows: r, cols: c, e })
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Series {
        &self.e[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Series) {
        self.e[i * self.cols + j] = v;
    }

    pub fn min_horizon(&self) -> i64 {
        self.e.iter().map(|s| s.horizon()).min().unwrap_or(i64::MAX)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.field.clone(), self.cols, self.rows, 0, |i, j| {
            self.get(j, i).clone()
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.field.clone(), self.rows, self.cols, 0, |i, j| {
            self.get(i, j).add(other.get(i, j))
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.field.clone(), self.rows, self.cols, 0, |i, j| {
            self.get(i, j).sub(other.get(i, j))
        })
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let h = self.min_horizon().min(other.min_horizon());
        Self::from_fn(self.field.clone(), self.rows, other.cols, 0, |i, j| {
            let mut acc = Series::zero(self.field.clone(), h);
            for k in 0..self.cols {
                acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[Series]) -> Vec<Series> {
        assert_eq!(self.cols, v.len());
        let h = self
            .min_horizon()
            .min(v.iter().map(|s| s.horizon()).min().unwrap_or(i64::MAX));
        (0..self.rows)
            .map(|i| {
                let mut acc = Series::zero(self.field.clone(), h);
                for j in 0..self.cols {
                    acc = acc.add(&self.get(i, j).mul(&v[j]));
                }
                acc
            })
            .collect()
    }

    pub fn scale(&self, s: &Series) -> Self {
        Self::from_fn(self.field.clone(), self.rows, self.cols, 0, |i, j| {
            self.get(i, j).mul(s)
        })
    }

    pub fn map(&self, mut f: impl FnMut(&Series) -> Series) -> Self {
        Self::from_fn(self.field.clone(), self.rows, self.cols, 0, |i, j| f(self.get(i, j)))
    }

    pub fn trace(&self) -> Series {
        assert_eq!(self.rows, self.cols);
        let mut acc = Series::zero(self.field.clone(), self.min_horizon());
        for i in 0..self.rows {
            acc = acc.add(self.get(i, i));
        }
        acc
    }

    /// Determinant by column-subset DP (no divisions).
    pub fn det(&self) -> Series {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let h = self.min_horizon();
        let zero = Series::zero(self.field.clone(), h);
        if n == 0 {
            return Series::one(self.field.clone(), h);
        }
        // dp[S] = det of submatrix (rows 0..|S|, columns S), filled by popcount
        let mut dp: Vec<Option<Series>> = vec![None; 1 << n];
        dp[0] = Some(Series::one(self.field.clone(), h));
        for mask in 1usize..(1 << n) {
            let r = (mask as u32).count_ones() as usize - 1;
            let mut acc = zero.clone();
            // cofactor expansion along row r: sign (-1)^(r + position of j in S)
            let mut sign_flip = r % 2 == 1;
            for j in 0..n {
                if mask & (1 << j) == 0 {
                    continue;
                }
                let sub = dp[mask ^ (1 << j)].as_ref().expect("filled by popcount order");
                let term = self.get(r, j).mul(sub);
                acc = if sign_flip { acc.sub(&term) } else { acc.add(&term) };
                sign_flip = !sign_flip;
            }
            dp[mask] = Some(acc);
        }
        dp[(1 << n) - 1].take().unwrap()
    }

    /// Characteristic polynomial det(x I - A), monic of degree n. Same
    /// subset DP, run in the polynomial ring.
    pub fn char_poly(&self) -> SPoly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let h = self.min_horizon();
        let f = self.field.clone();
        let entry = |i: usize, j: usize| -> SPoly {
            let a = self.get(i, j).neg();
            if i == j {
                SPoly::x(f.clone(), h).add(&SPoly::constant(a))
            } else {
                SPoly::constant(a)
            }
        };
        let mut dp: Vec<Option<SPoly>> = vec![None; 1 << n];
        dp[0] = Some(SPoly::one(f.clone(), h));
        for mask in 1usize..(1 << n) {
            let r = (mask as u32).count_ones() as usize - 1;
            let mut acc = SPoly::zero(f.clone(), h);
            let mut sign_flip = r % 2 == 1;
            for j in 0..n {
                if mask & (1 << j) == 0 {
                    continue;
                }
                let sub = dp[mask ^ (1 << j)].as_ref().expect("filled by popcount order");
                let term = entry(r, j).mul(sub);
                acc = if sign_flip { acc.sub(&term) } else { acc.add(&term) };
                sign_flip = !sign_flip;
            }
            dp[mask] = Some(acc);
        }
        dp[(1 << n) - 1].take().unwrap()
    }

    /// Companion matrix of a monic polynomial: ones on the subdiagonal, the
    /// negated low coefficients up the last column. For x^3 - t^4 this is
    /// [[0,0,t^4],[1,0,0],[0,1,0]].
    pub fn companion(p: &SPoly) -> Result<Self> {
        if !p.is_monic() {
            return Err(Error::InvalidInput(
                "companion matrix requires a monic polynomial".into(),
            ));
        }
        let n = p.degree().unwrap();
        if n == 0 {
            return Err(Error::InvalidInput("companion matrix of a constant".into()));
        }
        let f = p.field().clone();
        let h = p.horizon();
        let mut m = Self::zero(f.clone(), n, n, h);
        for i in 1..n {
            m.set(i, i - 1, Series::one(f.clone(), h));
        }
        for i in 0..n {
            m.set(i, n - 1, p.coeff(i).neg());
        }
        Ok(m)
    }

    /// Evaluate a polynomial at this (square) matrix.
    pub fn eval_poly(&self, p: &SPoly) -> Self {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let h = self.min_horizon().min(p.horizon());
        let mut acc = Self::zero(self.field.clone(), n, n, h);
        let d = match p.degree() {
            None => return acc,
            Some(d) => d,
        };
        for i in (0..=d).rev() {
            acc = acc.mul(self);
            let c = p.coeff(i);
            for k in 0..n {
                let v = acc.get(k, k).add(&c);
                acc.set(k, k, v);
            }
        }
        acc
    }

    /// Solve A x = b by Gaussian elimination with minimal-valuation pivoting.
    /// Errors if a pivot column is zero only to precision (the rank cannot be
    /// certified); returns NotFullRank for a genuinely defective system.
    pub fn solve(&self, b: &[Series]) -> Result<Vec<Series>> {
        assert_eq!(b.len(), self.rows);
        let n = self.cols;
        let f = self.field.clone();
        let mut a = self.clone();
        let mut rhs: Vec<Series> = b.to_vec();
        let mut where_col: Vec<Option<usize>> = vec![None; n];
        let mut used_rows = vec![false; self.rows];
        for col in 0..n {
            // minimal-valuation pivot among unused rows
            let mut best: Option<(usize, i64)> = None;
            let mut uncertain = false;
            for r in 0..self.rows {
                if used_rows[r] {
                    continue;
                }
                match a.get(r, col).val_exact() {
                    Some(v) => {
                        if best.map_or(true, |(_, bv)| v < bv) {
                            best = Some((r, v));
                        }
                    }
                    None => uncertain = true,
                }
            }
            let Some((pr, _)) = best else {
                if uncertain {
                    let have = a.e.iter().map(|s| s.horizon()).min().unwrap_or(0);
                    return Err(Error::InsufficientPrecision { have, need: have + 1 });
                }
                continue; // free column
            };
            used_rows[pr] = true;
            where_col[col] = Some(pr);
            let inv = a.get(pr, col).inv()?;
            for r in 0..self.rows {
                if r == pr {
                    continue;
                }
                let factor = a.get(r, col).mul(&inv);
                if factor.is_zero_to_precision() {
                    continue;
                }
                for c2 in 0..n {
                    let v = a.get(r, c2).sub(&factor.mul(a.get(pr, c2)));
                    a.set(r, c2, v);
                }
                let v = rhs[r].sub(&factor.mul(&rhs[pr]));
                rhs[r] = v;
            }
        }
        // check consistency: rows never used as pivots must have rhs zero
        for r in 0..self.rows {
            if !used_rows[r] && !rhs[r].is_zero_to_precision() {
                return Err(Error::NotFullRank);
            }
        }
        let mut x = vec![Series::zero(f, self.min_horizon()); n];
        for col in 0..n {
            if let Some(pr) = where_col[col] {
                let inv = a.get(pr, col).inv()?;
                x[col] = rhs[pr].mul(&inv);
            }
        }
        Ok(x)
    }

    /// Inverse via Gaussian elimination; requires certified full rank.
    pub fn inverse(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let h = self.min_horizon();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut b = vec![Series::zero(self.field.clone(), h); n];
            b[j] = Series::one(self.field.clone(), h);
            cols.push(self.solve(&b)?);
        }
        Ok(Self::from_fn(self.field.clone(), n, n, 0, |i, j| {
            cols[j][i].clone()
        }))
    }

    /// Number of Gaussian pivots with a certified-nonzero leading coefficient,
    /// treating entries that vanish to their stated precision as zero. This is
    /// a lower bound for the rank over F_q((t)); with adequate precision it is
    /// the rank itself.
    pub fn rank_lower_bound(&self) -> usize {
        let mut a = self.clone();
        let mut used_row = vec![false; a.rows];
        let mut used_col = vec![false; a.cols];
        let mut rank = 0usize;
        loop {
            let mut best: Option<(i64, usize, usize)> = None;
            for i in 0..a.rows {
                if used_row[i] {
                    continue;
                }
                for j in 0..a.cols {
                    if used_col[j] {
                        continue;
                    }
                    let s = a.get(i, j);
                    if s.is_zero_to_precision() {
                        continue;
                    }
                    let v = s.val_exact().expect("nonzero series has a valuation");
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
            let Some((_, pi, pj)) = best else {
                return rank;
            };
            used_row[pi] = true;
            used_col[pj] = true;
            rank += 1;
            let pivot_inv = a
                .get(pi, pj)
                .inv()
                .expect("certified-nonzero pivot is invertible");
            for j in 0..a.cols {
                if used_col[j] || a.get(pi, j).is_zero_to_precision() {
                    continue;
                }
                // factor has valuation >= 0 because the pivot valuation is minimal
                let factor = a.get(pi, j).mul(&pivot_inv);
                for i in 0..a.rows {
                    if used_row[i] {
                        continue;
                    }
                    let newv = a.get(i, j).sub(&a.get(i, pj).mul(&factor));
                    a.set(i, j, newv);
                }
                a.set(pi, j, Series::zero(a.field.clone(), a.get(pi, j).horizon()));
            }
        }
    }

    /// The standard symplectic form J = [[0, I], [-I, 0]] on F^(2n).
    pub fn symplectic_form(field: FieldRef, two_n: usize, horizon: i64) -> Result<Self> {
        if two_n % 2 != 0 {
            return Err(Error::InvalidInput("symplectic form needs even dimension".into()));
        }
        let n = two_n / 2;
        let mut j = Self::zero(field.clone(), two_n, two_n, horizon);
        for i in 0..n {
            j.set(i, n + i, Series::one(field.clone(), horizon));
            j.set(n + i, i, Series::one(field.clone(), horizon).neg());
        }
        Ok(j)
    }
}
