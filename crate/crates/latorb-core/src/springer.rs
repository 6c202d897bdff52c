//! Finite Springer-fiber combinatorics in type A.
//!
//! For a nilpotent n×n matrix e over F_q, the Springer fiber is the variety
//! of complete flags V_1 ⊂ … ⊂ V_n with eV_i ⊆ V_{i−1}.  Its components
//! are indexed by standard Young tableaux of the Jordan type λ of e, all of
//! dimension ½ Σ λ*_i(λ*_i − 1), and the number of components equals the
//! hook-length dimension of the S_n-irreducible attached to λ.  This module
//! provides the partition/tableau bookkeeping, the flag → tableau map, and
//! brute-force point counts over tiny fields to pin the polynomials down.

use crate::error::{Error, Result};
use crate::fq::{FieldRef, FqElem};
use crate::fqlin::FqMat;

/// A partition of n: weakly decreasing positive parts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    pub parts: Vec<usize>,
    pub n: usize,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.iter().any(|&p| p == 0) {
            return Err(Error::InvalidInput("partition parts must be positive".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("partition parts must weakly decrease".into()));
        }
        let n = parts.iter().sum();
        Ok(Partition { parts, n })
    }

    /// The conjugate (transpose) partition.
    pub fn conjugate(&self) -> Partition {
        let rows = self.parts.first().copied().unwrap_or(0);
        let parts: Vec<usize> = (1..=rows)
            .map(|i| self.parts.iter().filter(|&&p| p >= i).count())
            .collect();
        Partition { parts, n: self.n }
    }

    /// All partitions of n, in lexicographically decreasing order.
    pub fn all(n: usize) -> Vec<Partition> {
        fn rec(remaining: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if remaining == 0 {
                out.push(Partition { parts: prefix.clone(), n: prefix.iter().sum() });
                return;
            }
            for p in (1..=remaining.min(max_part)).rev() {
                prefix.push(p);
                rec(remaining - p, p, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, n.max(1), &mut Vec::new(), &mut out);
        out
    }

    pub fn render(&self) -> String {
        let inner: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        format!("({})", inner.join(","))
    }
}

/// A standard Young tableau: a filling of a partition shape by 1..n that
/// strictly increases along rows and down columns.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StandardTableau {
    pub shape: Partition,
    pub rows: Vec<Vec<usize>>,
}

impl StandardTableau {
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self> {
        let shape = Partition::new(rows.iter().map(|r| r.len()).collect())?;
        let n = shape.n;
        let mut seen = vec![false; n + 1];
        for row in &rows {
            for &x in row {
                if x == 0 || x > n || seen[x] {
                    return Err(Error::InvalidInput("tableau entries must be 1..n once each".into()));
                }
                seen[x] = true;
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput("tableau rows must strictly increase".into()));
            }
        }
        for r in 1..rows.len() {
            for j in 0..rows[r].len() {
                if rows[r - 1][j] >= rows[r][j] {
                    return Err(Error::InvalidInput("tableau columns must strictly increase".into()));
                }
            }
        }
        Ok(StandardTableau { shape, rows })
    }

    pub fn render(&self) -> String {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        format!("[{}]", rows.join(" | "))
    }
}

/// All standard tableaux of the given shape, by recursive placement of
/// 1, 2, … into addable cells.
pub fn standard_tableaux(shape: &Partition) -> Vec<StandardTableau> {
    let mut out = Vec::new();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); shape.parts.len()];
    fn rec(shape: &[usize], rows: &mut Vec<Vec<usize>>, next: usize, n: usize, out: &mut Vec<StandardTableau>) {
        if next > n {
            let t = StandardTableau::new(rows.clone()).expect("construction is standard");
            out.push(t);
            return;
        }
        for r in 0..shape.len() {
            let len = rows[r].len();
            if len < shape[r] && (r == 0 || rows[r - 1].len() > len) {
                rows[r].push(next);
                rec(shape, rows, next + 1, n, out);
                rows[r].pop();
            }
        }
    }
    rec(&shape.parts, &mut rows, 1, shape.n, &mut out);
    out
}

/// Number of standard tableaux, by direct enumeration.
pub fn st_count(shape: &Partition) -> u64 {
    standard_tableaux(shape).len() as u64
}

/// Number of standard tableaux by the hook-length formula n!/Π h(c).
pub fn hook_dim(shape: &Partition) -> u64 {
    let conj = shape.conjugate();
    let mut num: u128 = 1;
    for i in 1..=shape.n {
        num *= i as u128;
    }
    let mut den: u128 = 1;
    for (i, &len) in shape.parts.iter().enumerate() {
        for j in 0..len {
            let hook = (len - j) + (conj.parts[j] - i) - 1;
            den *= hook as u128;
        }
    }
    assert!(num % den == 0, "hook product divides n!");
    (num / den) as u64
}

/// Dimension of the Springer fiber of a nilpotent of Jordan type λ:
/// ½ Σ λ*_i(λ*_i − 1), equivalently ½(dim C_{GL_n}(e) − n) with
/// dim C = Σ (λ*_i)².
pub fn springer_dim(shape: &Partition) -> u64 {
    let conj = shape.conjugate();
    let d: usize = conj.parts.iter().map(|&c| c * (c - 1) / 2).sum();
    let centralizer: usize = conj.parts.iter().map(|&c| c * c).sum();
    assert_eq!(2 * d, centralizer - shape.n, "two dimension formulas agree");
    d as u64
}

/// Jordan type of a nilpotent matrix: the partition λ with
/// #(parts ≥ i) = rank(N^{i−1}) − rank(N^i).
pub fn jordan_type(nmat: &FqMat) -> Result<Partition> {
    let n = nmat.rows();
    if n != nmat.cols() {
        return Err(Error::InvalidInput("Jordan type needs a square matrix".into()));
    }
    let mut power = FqMat::identity(nmat.field().clone(), n);
    let mut ranks = vec![n];
    for _ in 0..n {
        power = power.mul(nmat);
        ranks.push(power.rank());
        if *ranks.last().unwrap() == 0 {
            break;
        }
    }
    if *ranks.last().unwrap() != 0 {
        return Err(Error::NotNilpotent);
    }
    let conj: Vec<usize> = ranks.windows(2).map(|w| w[0] - w[1]).filter(|&d| d > 0).collect();
    Ok(Partition { parts: conj, n }.conjugate())
}

/// A complete flag, stored as an ordered basis: vectors[0..i] span V_i.
#[derive(Clone, Debug)]
pub struct Flag {
    pub field: FieldRef,
    pub vectors: Vec<Vec<FqElem>>,
}

impl Flag {
    pub fn new(field: FieldRef, vectors: Vec<Vec<FqElem>>) -> Result<Self> {
        let n = vectors.len();
        if n == 0 || vectors.iter().any(|v| v.len() != n) {
            return Err(Error::FlagNotCompatible("flag needs n independent vectors of length n".into()));
        }
        if FqMat::from_rows(field.clone(), &vectors).rank() != n {
            return Err(Error::FlagNotCompatible("flag vectors are linearly dependent".into()));
        }
        Ok(Flag { field, vectors })
    }
}

/// Reduce v against a row-echelon basis (rows with recorded pivot columns);
/// the result is zero exactly when v lies in the span.
fn reduce(field: &FieldRef, v: &[FqElem], ech: &[(usize, Vec<FqElem>)]) -> Vec<FqElem> {
    let mut v = v.to_vec();
    for (piv, row) in ech {
        let c = v[*piv];
        if c != field.zero() {
            for j in 0..v.len() {
                let s = field.mul(c, row[j]);
                v[j] = field.sub(v[j], s);
            }
        }
    }
    v
}

/// Insert a vector into an echelon basis; returns false if it was already
/// in the span.
fn ech_insert(field: &FieldRef, ech: &mut Vec<(usize, Vec<FqElem>)>, v: &[FqElem]) -> bool {
    let mut r = reduce(field, v, ech);
    let Some(piv) = r.iter().position(|&c| c != field.zero()) else {
        return false;
    };
    let inv = field.inv(r[piv]).expect("leading coefficient is a unit");
    for c in r.iter_mut() {
        *c = field.mul(*c, inv);
    }
    ech.push((piv, r));
    true
}

/// The Spaltenstein tableau of an e-stable flag: row i of the tableau
/// records where the Jordan type of e on V/V_{n−i} grows.  Box i sits in
/// the unique row where the type of the i-dimensional quotient exceeds
/// that of the (i−1)-dimensional one.
pub fn tableau_of_flag(e: &FqMat, flag: &Flag) -> Result<StandardTableau> {
    let n = flag.vectors.len();
    if e.rows() != n || e.cols() != n {
        return Err(Error::FlagNotCompatible("matrix and flag sizes differ".into()));
    }
    let lambda = jordan_type(e)?;
    let field = flag.field.clone();
    // Matrix of e in the flag basis: column k = coordinates of e·v_k.
    let basis = FqMat::from_fn(field.clone(), n, n, |i, j| flag.vectors[j][i]);
    let mut in_flag_basis = vec![vec![field.zero(); n]; n];
    for k in 0..n {
        let w = e.mul_vec(&flag.vectors[k]);
        let x = basis
            .solve(&w)
            .ok_or_else(|| Error::FlagNotCompatible("flag basis is singular".into()))?;
        // eV_k ⊆ V_{k−1} forces the coordinates at and above k to vanish.
        if x.iter().skip(k).any(|&c| c != field.zero()) {
            return Err(Error::FlagNotCompatible(format!(
                "e does not map V_{} into V_{}",
                k + 1,
                k
            )));
        }
        for i in 0..n {
            in_flag_basis[i][k] = x[i];
        }
    }
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let mut prev: Vec<usize> = Vec::new();
    for i in 1..=n {
        // e on V/V_{n−i} in the basis of the last i flag vectors.
        let lo = n - i;
        let block = FqMat::from_fn(field.clone(), i, i, |r, c| in_flag_basis[lo + r][lo + c]);
        let mu = jordan_type(&block).expect("triangular block is nilpotent").parts;
        let mut grew = None;
        for r in 0..mu.len() {
            let p = prev.get(r).copied().unwrap_or(0);
            if mu[r] == p + 1 && grew.is_none() {
                grew = Some(r);
            } else if mu[r] != p {
                grew = None;
                break;
            }
        }
        let r = grew.expect("quotient types grow by one box");
        if r == rows.len() {
            rows.push(Vec::new());
        }
        rows[r].push(i);
        prev = mu;
    }
    let tab = StandardTableau::new(rows)?;
    assert_eq!(tab.shape, lambda, "tableau shape is the Jordan type");
    Ok(tab)
}

/// All e-stable complete flags (eV_i ⊆ V_{i−1}) over the matrix's field,
/// by recursive choice of a line in e^{−1}(V_{i−1})/V_{i−1}.  Guarded to
/// tiny sizes; intended for exact oracle counts.
pub fn enumerate_springer_flags(e: &FqMat) -> Result<Vec<Flag>> {
    let n = e.rows();
    let field = e.field().clone();
    let q = field.q();
    if n > 4 || q > 5 {
        return Err(Error::SearchBudgetExceeded((q as u64).saturating_pow(n as u32)));
    }
    jordan_type(e)?;
    let mut out = Vec::new();
    let mut chosen: Vec<Vec<FqElem>> = Vec::new();
    let mut ech: Vec<(usize, Vec<FqElem>)> = Vec::new();
    fn rec(
        e: &FqMat,
        field: &FieldRef,
        n: usize,
        chosen: &mut Vec<Vec<FqElem>>,
        ech: &mut Vec<(usize, Vec<FqElem>)>,
        out: &mut Vec<Flag>,
    ) {
        if chosen.len() == n {
            out.push(Flag::new(field.clone(), chosen.clone()).expect("independent by construction"));
            return;
        }
        // W = e^{−1}(V): kernel of x ↦ (e·x reduced mod V).
        let reduced = FqMat::from_fn(field.clone(), n, n, |i, j| {
            let mut col = vec![field.zero(); n];
            col[j] = field.one();
            reduce(field, &e.mul_vec(&col), ech)[i]
        });
        let w_basis = reduced.kernel();
        // Basis of W/V: residuals of the kernel basis, echelonized.
        let mut quot: Vec<Vec<FqElem>> = Vec::new();
        let mut quot_ech = ech.clone();
        for v in &w_basis {
            if ech_insert(field, &mut quot_ech, v) {
                quot.push(v.clone());
            }
        }
        let k = quot.len();
        // Normalized line representatives in the quotient: first nonzero
        // coefficient 1, so each V_{i} arises exactly once.
        let qsize = field.q();
        let mut idx = vec![0u128; k];
        loop {
            if let Some(lead) = idx.iter().position(|&c| c != 0) {
                if idx[lead] == 1 {
                    let mut v = vec![field.zero(); n];
                    for (ci, &c) in idx.iter().enumerate() {
                        let ce = field.element(c);
                        for j in 0..n {
                            let s = field.mul(ce, quot[ci][j]);
                            v[j] = field.add(v[j], s);
                        }
                    }
                    chosen.push(v.clone());
                    let mut ech2 = ech.clone();
                    assert!(ech_insert(field, &mut ech2, &v));
                    std::mem::swap(ech, &mut ech2);
                    rec(e, field, n, chosen, ech, out);
                    std::mem::swap(ech, &mut ech2);
                    chosen.pop();
                }
            }
            // Odometer over F_q^k.
            let mut pos = 0;
            loop {
                if pos == k {
                    return;
                }
                idx[pos] += 1;
                if idx[pos] < qsize {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }
    rec(e, &field, n, &mut chosen, &mut ech, &mut out);
    Ok(out)
}

/// Exact number of e-stable complete flags over the matrix's field.
pub fn brute_flag_count(e: &FqMat) -> Result<u64> {
    Ok(enumerate_springer_flags(e)?.len() as u64)
}

/// One row of the type-A Springer correspondence: the orbit λ pairs with
/// the S_n-irreducible labeled λ under the trivial local system, of
/// dimension given by the hook-length formula.
pub struct SpringerRow {
    pub orbit: Partition,
    pub local_system: &'static str,
    pub rep_dim: u64,
    pub fiber_dim: u64,
    pub components: u64,
}

/// The full correspondence table for nilpotent orbits of gl_n.
pub fn correspondence_table(n: usize) -> Vec<SpringerRow> {
    Partition::all(n)
        .into_iter()
        .map(|p| {
            let d = hook_dim(&p);
            SpringerRow {
                fiber_dim: springer_dim(&p),
                components: d,
                rep_dim: d,
                local_system: "trivial",
                orbit: p,
            }
        })
        .collect()
}
