//! O-lattices in F^n for O = F_q[[t]], F = F_q((t)): canonical echelon forms,
//! membership, relative length, stability under a series matrix, symplectic
//! duals, and periodic lattice chains.
//!
//! A full-rank lattice Λ with t^m O^n ⊆ Λ ⊆ t^{-m} O^n is stored through its
//! scaled module M = t^m Λ, which satisfies t^{2m} O^n ⊆ M ⊆ O^n and is
//! therefore determined by its image in (F_q[t]/t^{2m})^n. The canonical data
//! is the column Hermite form of that image: column i carries the pivot
//! t^{d_i} in row i with 0 ≤ d_i ≤ 2m, entries below the pivot vanish, and
//! the entry in row j < i is reduced modulo t^{d_j}, the pivot degree of its
//! own row. Two generating sets of the same lattice produce identical data,
//! so lattices can be deduplicated and ordered by value.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fq::{FieldRef, FqElem};
use crate::matrix::SMat;
use crate::series::Series;

// ----- dense polynomial arithmetic modulo t^level -----
//
// Polynomials over F_q appear here as coefficient vectors indexed by the
// exponent of t; every vector is kept at the working length `level`.

type PolyVec = Vec<FqElem>;

/// A module generator modulo t^level: one polynomial per row of F^n.
type Column = Vec<PolyVec>;

fn pval(p: &[FqElem]) -> Option<usize> {
    p.iter().position(|c| !c.is_zero())
}

/// Power-series inverse of a polynomial with a nonzero constant term.
fn punit_inv(f: &FieldRef, u: &[FqElem], level: usize) -> PolyVec {
    let u0inv = f.inv(u[0]).expect("unit constant term");
    let mut w = vec![FqElem::ZERO; level];
    w[0] = u0inv;
    for i in 1..level {
        let mut acc = FqElem::ZERO;
        for j in 1..=i.min(u.len().saturating_sub(1)) {
            acc = f.add(acc, f.mul(u[j], w[i - j]));
        }
        w[i] = f.neg(f.mul(u0inv, acc));
    }
    w
}

fn pmul_mod(f: &FieldRef, a: &[FqElem], b: &[FqElem], level: usize) -> PolyVec {
    let mut out = vec![FqElem::ZERO; level];
    for (i, ai) in a.iter().enumerate().take(level) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(level - i) {
            if !bj.is_zero() {
                out[i + j] = f.add(out[i + j], f.mul(*ai, *bj));
            }
        }
    }
    out
}

/// The quotient of p by t^d, discarding coefficients below t^d.
fn pshift_down(p: &[FqElem], d: usize, level: usize) -> PolyVec {
    let mut out = vec![FqElem::ZERO; level];
    if d < p.len() {
        out[..p.len() - d].copy_from_slice(&p[d..]);
    }
    out
}

/// column := column - phi * other, modulo t^level.
fn col_sub_mul(f: &FieldRef, column: &mut Column, phi: &[FqElem], other: &Column, level: usize) {
    if pval(phi).is_none() {
        return;
    }
    for (crow, brow) in column.iter_mut().zip(other.iter()) {
        if pval(brow).is_none() {
            continue;
        }
        let prod = pmul_mod(f, phi, brow, level);
        for (ce, pe) in crow.iter_mut().zip(prod.iter()) {
            *ce = f.sub(*ce, *pe);
        }
    }
}

/// Column Hermite form modulo t^level. Returns the pivot degree of every row
/// (level when the span has no pivot below t^level in that row) and, for rows
/// with a genuine pivot, the normalized pivot column: rows below the pivot
/// zero, pivot entry exactly t^{d_r}.
fn hermite_form(
    f: &FieldRef,
    n: usize,
    level: usize,
    mut pool: Vec<Column>,
) -> (Vec<usize>, Vec<Option<Column>>) {
    let mut degrees = vec![level; n];
    let mut pivot_cols: Vec<Option<Column>> = vec![None; n];
    for r in (0..n).rev() {
        let mut best: Option<(usize, usize)> = None;
        for (idx, col) in pool.iter().enumerate() {
            if let Some(v) = pval(&col[r]) {
                if best.is_none_or(|(bv, _)| v < bv) {
                    best = Some((v, idx));
                }
            }
        }
        let Some((d, idx)) = best else {
            continue;
        };
        let mut pc = pool.swap_remove(idx);
        // Normalize so the pivot entry becomes exactly t^d.
        let unit = pshift_down(&pc[r], d, level);
        let unit_inv = punit_inv(f, &unit, level);
        for poly in pc.iter_mut() {
            *poly = pmul_mod(f, poly, &unit_inv, level);
        }
        pc[r] = vec![FqElem::ZERO; level];
        pc[r][d] = f.one();
        // Clear row r in every other generator; their valuations there are
        // at least d because d was minimal.
        for col in pool.iter_mut() {
            if pval(&col[r]).is_some() {
                let phi = pshift_down(&col[r], d, level);
                col_sub_mul(f, col, &phi, &pc, level);
            }
        }
        degrees[r] = d;
        pivot_cols[r] = Some(pc);
    }
    (degrees, pivot_cols)
}

fn same_field(a: &FieldRef, b: &FieldRef) -> bool {
    std::sync::Arc::ptr_eq(a, b) || (a.p() == b.p() && a.k() == b.k())
}

/// A full-rank O-lattice in F^n within the window t^m O^n ⊆ Λ ⊆ t^{-m} O^n.
///
/// Equality, ordering, and hashing use the canonical form (rank, window,
/// pivot degrees, reduced entries); the field object itself is excluded, so
/// values from different fields must not be mixed in one collection.
#[derive(Clone, Debug)]
pub struct Lattice {
    field: FieldRef,
    n: usize,
    window: i64,
    pivots: Vec<i64>,
    /// (row j, column i) with j < i, mapping to the nonzero reduced entry of
    /// degree < d_j, trimmed of trailing zero coefficients.
    entries: BTreeMap<(usize, usize), PolyVec>,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.window == other.window
            && self.pivots == other.pivots
            && self.entries == other.entries
    }
}
impl Eq for Lattice {}

impl PartialOrd for Lattice {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Lattice {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.pivots
            .cmp(&other.pivots)
            .then_with(|| self.entries.cmp(&other.entries))
            .then_with(|| self.window.cmp(&other.window))
            .then_with(|| self.n.cmp(&other.n))
    }
}
impl Hash for Lattice {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.n.hash(state);
        self.window.hash(state);
        self.pivots.hash(state);
        self.entries.hash(state);
    }
}

/// Serializable snapshot of a lattice: the full upper-triangular generator
/// matrix of t^m Λ modulo t^{2m}, with entries rendered as exact polynomials.
#[derive(Clone, Debug, Serialize)]
pub struct LatticeJson {
    pub n: usize,
    pub window: i64,
    pub pivots: Vec<i64>,
    pub entries: Vec<Vec<String>>,
}

impl Lattice {
    /// The lattice O^n at the given window.
    pub fn standard(field: FieldRef, n: usize, window: i64) -> Self {
        Lattice {
            field,
            n,
            window,
            pivots: vec![window; n],
            entries: BTreeMap::new(),
        }
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }
    pub fn rank(&self) -> usize {
        self.n
    }
    pub fn window(&self) -> i64 {
        self.window
    }
    pub fn pivot_degrees(&self) -> &[i64] {
        &self.pivots
    }

    /// Canonical form of the lattice spanned by the given vectors over O.
    ///
    /// The span must be a full-rank O-module (otherwise `NotFullRank`) lying
    /// inside the window t^m O^n ⊆ Λ ⊆ t^{-m} O^n (otherwise
    /// `WindowViolated`), and every component needs precision at least
    /// window + 1 so that the scaled module is determined modulo t^{2m+1}.
    pub fn canonicalize(field: &FieldRef, gens: &[Vec<Series>], window: i64) -> Result<Self> {
        if window < 0 {
            return Err(Error::InvalidInput("window must be nonnegative".into()));
        }
        let n = gens.first().map(|g| g.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::NotFullRank);
        }
        if gens.iter().any(|g| g.len() != n) {
            return Err(Error::InvalidInput(
                "generators must all have the same length".into(),
            ));
        }
        if gens.len() < n {
            return Err(Error::NotFullRank);
        }
        for g in gens {
            for comp in g {
                if comp.horizon() < window + 1 {
                    return Err(Error::InsufficientPrecision {
                        have: comp.horizon(),
                        need: window + 1,
                    });
                }
            }
        }
        // Distinguish a degenerate span from a window escape before any
        // truncation can mask the difference.
        let as_rows: Vec<Vec<Series>> = (0..n)
            .map(|i| gens.iter().map(|g| g[i].clone()).collect())
            .collect();
        let mat = SMat::from_rows(field.clone(), as_rows)?;
        if mat.rank_lower_bound() < n {
            return Err(Error::NotFullRank);
        }
        for g in gens {
            for comp in g {
                if let Some(v) = comp.val_exact() {
                    if v < -window {
                        return Err(Error::WindowViolated(window));
                    }
                }
            }
        }
        // Scale by t^m and reduce modulo t^{2m+1}; one extra level beyond the
        // stored range certifies the floor t^{2m} O^n ⊆ M by Nakayama.
        let level = (2 * window + 1) as usize;
        let cols: Vec<Column> = gens
            .iter()
            .map(|g| {
                g.iter()
                    .map(|comp| {
                        (0..level)
                            .map(|e| {
                                comp.coeff_known(e as i64 - window)
                                    .expect("coefficient within certified precision")
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let (degrees, pivot_cols) = hermite_form(field, n, level, cols);
        Self::finish_canonical(field, n, window, level, degrees, pivot_cols)
    }

    /// Shared tail of canonicalization: window checks, above-pivot reduction,
    /// floor certification, and assembly of the stored form.
    fn finish_canonical(
        field: &FieldRef,
        n: usize,
        window: i64,
        level: usize,
        degrees: Vec<usize>,
        pivot_cols: Vec<Option<Column>>,
    ) -> Result<Self> {
        let bound = (2 * window) as usize;
        if degrees.iter().any(|&d| d > bound) {
            return Err(Error::WindowViolated(window));
        }
        let mut cols: Vec<Column> = pivot_cols
            .into_iter()
            .map(|c| c.expect("pivot exists: degree within bound"))
            .collect();
        // Reduce entries above each pivot modulo the pivot degree of their
        // own row, deepest row first so earlier reductions stay intact.
        for i in 0..n {
            for j in (0..i).rev() {
                let entry = cols[i][j].clone();
                let phi = pshift_down(&entry, degrees[j], level);
                if pval(&phi).is_some() {
                    let reducer = cols[j].clone();
                    col_sub_mul(field, &mut cols[i], &phi, &reducer, level);
                }
            }
        }
        // Floor check: t^{2m} e_i must reduce to zero through the pivots;
        // modulo t^{2m+1} this certifies t^{2m} O^n ⊆ M by Nakayama.
        for i in 0..n {
            let mut target: Column = vec![vec![FqElem::ZERO; level]; n];
            target[i][bound] = field.one();
            if !reduce_through(field, &cols, &degrees, &mut target, level) {
                return Err(Error::WindowViolated(window));
            }
        }
        let mut entries = BTreeMap::new();
        for (i, col) in cols.iter().enumerate() {
            for (j, poly) in col.iter().enumerate().take(i) {
                let mut trimmed: PolyVec = poly[..degrees[j].min(poly.len())].to_vec();
                while trimmed.last().is_some_and(|c| c.is_zero()) {
                    trimmed.pop();
                }
                if !trimmed.is_empty() {
                    entries.insert((j, i), trimmed);
                }
            }
        }
        Ok(Lattice {
            field: field.clone(),
            n,
            window,
            pivots: degrees.iter().map(|&d| d as i64).collect(),
            entries,
        })
    }

    /// The index [Λ : O^n]: the relative length against the standard lattice,
    /// so t·O^n has index −n and t^{-1}·O^n has index n.
    pub fn index(&self) -> i64 {
        self.n as i64 * self.window - self.pivots.iter().sum::<i64>()
    }

    /// The canonical O-basis of Λ as exact series vectors (column i has its
    /// pivot t^{d_i - m} in row i).
    pub fn basis_series(&self, horizon: i64) -> Vec<Vec<Series>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        if j == i {
                            Series::monomial(
                                self.field.clone(),
                                self.field.one(),
                                self.pivots[i] - self.window,
                                horizon,
                            )
                        } else if let Some(poly) = self.entries.get(&(j, i)) {
                            let terms: Vec<(i64, FqElem)> = poly
                                .iter()
                                .enumerate()
                                .filter(|(_, c)| !c.is_zero())
                                .map(|(e, c)| (e as i64 - self.window, *c))
                                .collect();
                            Series::from_terms(self.field.clone(), &terms, horizon)
                        } else {
                            Series::zero(self.field.clone(), horizon)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// The stored pivot columns at working length `level` ≥ 2·window.
    fn scaled_columns(&self, level: usize) -> Vec<Column> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let mut poly = vec![FqElem::ZERO; level];
                        if j == i {
                            // A pivot degree equal to the working level means
                            // the column is t^level e_i ≡ 0 at this level.
                            if (self.pivots[i] as usize) < level {
                                poly[self.pivots[i] as usize] = self.field.one();
                            }
                        } else if let Some(p) = self.entries.get(&(j, i)) {
                            poly[..p.len()].copy_from_slice(p);
                        }
                        poly
                    })
                    .collect()
            })
            .collect()
    }

    /// Whether the vector lies in Λ. Components need precision at least the
    /// window m (so that t^m v is determined modulo t^{2m}).
    pub fn contains_vector(&self, v: &[Series]) -> Result<bool> {
        if v.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "vector length {} does not match rank {}",
                v.len(),
                self.n
            )));
        }
        for comp in v {
            if comp.horizon() < self.window {
                return Err(Error::InsufficientPrecision {
                    have: comp.horizon(),
                    need: self.window,
                });
            }
        }
        for comp in v {
            if let Some(val) = comp.val_exact() {
                if val < -self.window {
                    return Ok(false);
                }
            }
        }
        let level = (2 * self.window) as usize;
        let mut target: Column = v
            .iter()
            .map(|comp| {
                (0..level)
                    .map(|e| {
                        comp.coeff_known(e as i64 - self.window)
                            .expect("coefficient within certified precision")
                    })
                    .collect()
            })
            .collect();
        let degrees: Vec<usize> = self.pivots.iter().map(|&d| d as usize).collect();
        let cols = self.scaled_columns(level);
        Ok(reduce_through(
            &self.field,
            &cols,
            &degrees,
            &mut target,
            level,
        ))
    }

    /// Whether other ⊆ self. Requires equal rank.
    pub fn contains(&self, other: &Lattice) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::IncompatibleWindows(self.n, other.n));
        }
        debug_assert!(same_field(&self.field, &other.field));
        for col in other.basis_series(self.window + 1) {
            if !self.contains_vector(&col)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether self and other are the same O-module (their windows may
    /// differ; canonical equality requires equal windows).
    pub fn same_module(&self, other: &Lattice) -> Result<bool> {
        Ok(self.contains(other)? && other.contains(self)?)
    }

    /// Relative length [Λ1 : Λ2] = dim(Λ1/Λ1∩Λ2) − dim(Λ2/Λ1∩Λ2); it is
    /// antisymmetric and additive, and equals the difference of indices.
    pub fn rel_length(&self, other: &Lattice) -> Result<i64> {
        if self.n != other.n {
            return Err(Error::IncompatibleWindows(self.n, other.n));
        }
        Ok(self.index() - other.index())
    }

    /// Whether γΛ ⊆ Λ. It suffices to test the canonical basis; γ needs
    /// precision roughly 2·window plus its own valuation spread, and the
    /// test reports `InsufficientPrecision` when it cannot be certified.
    pub fn is_stable(&self, gamma: &SMat) -> Result<bool> {
        if gamma.rows() != self.n || gamma.cols() != self.n {
            return Err(Error::InvalidInput(format!(
                "operator is {}x{}, lattice rank is {}",
                gamma.rows(),
                gamma.cols(),
                self.n
            )));
        }
        let spread = (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .map(|(i, j)| gamma.get(i, j).val_lower_bound())
            .min()
            .map(|v| (-v).max(0))
            .unwrap_or(0);
        let hb = 2 * self.window + spread + 2;
        for col in self.basis_series(hb) {
            let image = gamma.mul_vec(&col);
            if !self.contains_vector(&image)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The image t^k Λ, canonicalized at window m + |k|.
    pub fn scale_by_t_power(&self, k: i64) -> Result<Lattice> {
        let new_window = self.window + k.abs();
        let hb = new_window + 2 + k.abs();
        let gens: Vec<Vec<Series>> = self
            .basis_series(hb)
            .into_iter()
            .map(|col| col.into_iter().map(|s| s.shift(k)).collect())
            .collect();
        Lattice::canonicalize(&self.field, &gens, new_window)
    }

    /// Re-express the same lattice at a different window, failing with
    /// `WindowViolated` when it does not fit.
    pub fn with_window(&self, window: i64) -> Result<Lattice> {
        let gens = self.basis_series(window + 2 + self.window);
        Lattice::canonicalize(&self.field, &gens, window)
    }

    /// The dual Λ^∨ = {v : ⟨v, w⟩ ∈ O for all w ∈ Λ} with respect to an
    /// invertible alternating form, computed at the same window (sufficient
    /// whenever the form is unimodular, e.g. the standard symplectic form).
    pub fn symplectic_dual(&self, form: &SMat) -> Result<Lattice> {
        let h0 = 8 * self.window + 16;
        let basis = self.basis_series(h0);
        let g = SMat::from_rows(
            self.field.clone(),
            (0..self.n)
                .map(|i| (0..self.n).map(|j| basis[j][i].clone()).collect())
                .collect(),
        )?;
        let jg = form.mul(&g);
        let b = jg.transpose().inverse()?;
        let gens: Vec<Vec<Series>> = (0..self.n)
            .map(|j| (0..self.n).map(|i| b.get(i, j).clone()).collect())
            .collect();
        Lattice::canonicalize(&self.field, &gens, self.window)
    }

    /// JSON-ready snapshot (full generator matrix of t^m Λ mod t^{2m}).
    pub fn to_json(&self) -> LatticeJson {
        let horizon = 2 * self.window + 1;
        let entries: Vec<Vec<String>> = (0..self.n)
            .map(|r| {
                (0..self.n)
                    .map(|c| {
                        if r == c {
                            Series::monomial(
                                self.field.clone(),
                                self.field.one(),
                                self.pivots[c],
                                horizon,
                            )
                            .render_exact()
                        } else if let Some(poly) = self.entries.get(&(r, c)) {
                            let terms: Vec<(i64, FqElem)> = poly
                                .iter()
                                .enumerate()
                                .filter(|(_, x)| !x.is_zero())
                                .map(|(e, x)| (e as i64, *x))
                                .collect();
                            Series::from_terms(self.field.clone(), &terms, horizon).render_exact()
                        } else {
                            "0".to_string()
                        }
                    })
                    .collect()
            })
            .collect();
        LatticeJson {
            n: self.n,
            window: self.window,
            pivots: self.pivots.clone(),
            entries,
        }
    }
}

/// Reduce a column through the pivot columns from the deepest row upward.
/// Returns false when some row has smaller valuation than its pivot degree,
/// i.e. the column is not in the span modulo t^level.
fn reduce_through(
    f: &FieldRef,
    cols: &[Column],
    degrees: &[usize],
    target: &mut Column,
    level: usize,
) -> bool {
    for r in (0..cols.len()).rev() {
        let Some(v) = pval(&target[r]) else {
            continue;
        };
        if v < degrees[r] {
            return false;
        }
        let phi = pshift_down(&target[r], degrees[r], level);
        col_sub_mul(f, target, &phi, &cols[r], level);
        target[r] = vec![FqElem::ZERO; level];
    }
    target.iter().all(|p| pval(p).is_none())
}

/// One period of a periodic chain of lattices: members Λ_i for the
/// representatives i ∈ [0, n) of the type set J ⊆ Z/nZ, with [Λ_i : O^n] = i,
/// Λ_i ⊆ Λ_j for i < j, and Λ_{i+n} = t^{-1} Λ_i continuing the chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeChain {
    pub type_set: BTreeSet<usize>,
    pub members: BTreeMap<usize, Lattice>,
}

impl LatticeChain {
    pub fn new(members: BTreeMap<usize, Lattice>) -> Self {
        LatticeChain {
            type_set: members.keys().copied().collect(),
            members,
        }
    }

    /// The standard chain for a type set: Λ_i is spanned by t^{-1}e_0, ...,
    /// t^{-1}e_{i-1}, e_i, ..., e_{n-1}.
    pub fn standard(field: &FieldRef, n: usize, type_set: &BTreeSet<usize>) -> Result<Self> {
        let mut members = BTreeMap::new();
        for &i in type_set {
            if i >= n {
                return Err(Error::InvalidInput(format!(
                    "type set entry {i} outside 0..{n}"
                )));
            }
            let gens: Vec<Vec<Series>> = (0..n)
                .map(|j| {
                    (0..n)
                        .map(|r| {
                            if r == j {
                                let e = if j < i { -1 } else { 0 };
                                Series::monomial(field.clone(), field.one(), e, 4)
                            } else {
                                Series::zero(field.clone(), 4)
                            }
                        })
                        .collect()
                })
                .collect();
            members.insert(i, Lattice::canonicalize(field, &gens, 1)?);
        }
        Ok(LatticeChain::new(members))
    }
}

/// Structural verdict on a chain: membership keys match the type set, indices
/// equal their labels, inclusions hold along the period, and the wrap-around
/// Λ_max ⊆ t^{-1} Λ_min closes it. Uncertifiable comparisons count as false.
pub fn validate_chain(chain: &LatticeChain) -> bool {
    let Some(first) = chain.members.values().next() else {
        return false;
    };
    let n = first.rank();
    if chain.members.values().any(|l| l.rank() != n) {
        return false;
    }
    let keys: BTreeSet<usize> = chain.members.keys().copied().collect();
    if keys != chain.type_set || keys.iter().any(|&k| k >= n) {
        return false;
    }
    for (&i, lat) in &chain.members {
        if lat.index() != i as i64 {
            return false;
        }
    }
    let ordered: Vec<&Lattice> = chain.members.values().collect();
    for pair in ordered.windows(2) {
        match pair[1].contains(pair[0]) {
            Ok(true) => {}
            _ => return false,
        }
    }
    let Ok(shifted) = ordered[0].scale_by_t_power(-1) else {
        return false;
    };
    matches!(
        shifted.contains(ordered[ordered.len() - 1]),
        Ok(true)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::Fq;

    fn f5() -> FieldRef {
        Fq::new(5, 1).unwrap()
    }

    fn mono(f: &FieldRef, c: u64, e: i64, h: i64) -> Series {
        Series::monomial(f.clone(), f.from_u64(c), e, h)
    }

    fn zero(f: &FieldRef, h: i64) -> Series {
        Series::zero(f.clone(), h)
    }

    fn unit_vec(f: &FieldRef, n: usize, i: usize, e: i64, h: i64) -> Vec<Series> {
        (0..n)
            .map(|j| if j == i { mono(f, 1, e, h) } else { zero(f, h) })
            .collect()
    }

    #[test]
    fn standard_basis_gives_identity_form() {
        let f = f5();
        let gens = vec![unit_vec(&f, 2, 0, 0, 6), unit_vec(&f, 2, 1, 0, 6)];
        let lat = Lattice::canonicalize(&f, &gens, 1).unwrap();
        assert_eq!(lat.pivot_degrees(), &[1, 1]);
        assert_eq!(lat.index(), 0);
        assert_eq!(lat, Lattice::standard(f, 2, 1));
    }

    #[test]
    fn scaled_standard_basis_has_index_minus_two() {
        let f = f5();
        let gens = vec![unit_vec(&f, 2, 0, 1, 6), unit_vec(&f, 2, 1, 1, 6)];
        let lat = Lattice::canonicalize(&f, &gens, 1).unwrap();
        assert_eq!(lat.pivot_degrees(), &[2, 2]);
        assert_eq!(lat.index(), -2);
    }

    #[test]
    fn degenerate_span_is_rejected() {
        let f = f5();
        // e1 and t^{-1} e1 + (zero) e2 span a rank-one subspace.
        let gens = vec![
            unit_vec(&f, 2, 0, 0, 6),
            vec![mono(&f, 1, -1, 6), zero(&f, 6)],
        ];
        assert!(matches!(
            Lattice::canonicalize(&f, &gens, 1),
            Err(Error::NotFullRank)
        ));
    }

    #[test]
    fn window_escape_is_rejected_on_both_sides() {
        let f = f5();
        // A generator below t^{-m}.
        let gens = vec![unit_vec(&f, 2, 0, -2, 6), unit_vec(&f, 2, 1, 0, 6)];
        assert!(matches!(
            Lattice::canonicalize(&f, &gens, 1),
            Err(Error::WindowViolated(1))
        ));
        // A span that misses the floor t^m O^n.
        let gens = vec![unit_vec(&f, 2, 0, 0, 8), unit_vec(&f, 2, 1, 3, 8)];
        assert!(matches!(
            Lattice::canonicalize(&f, &gens, 1),
            Err(Error::WindowViolated(1))
        ));
    }

    #[test]
    fn canonical_form_is_idempotent_and_gl_o_invariant() {
        let f = f5();
        // Λ spanned by (t^{-1}, 1) and (0, t) inside window 2.
        let gens = vec![
            vec![mono(&f, 1, -1, 8), mono(&f, 1, 0, 8)],
            vec![zero(&f, 8), mono(&f, 1, 1, 8)],
        ];
        let lat = Lattice::canonicalize(&f, &gens, 2).unwrap();
        let again = Lattice::canonicalize(&f, &lat.basis_series(8), 2).unwrap();
        assert_eq!(lat, again);
        // Column operations over O: replace g2 by u*g2 + w*g1 with u a unit.
        let u = Series::from_int_coeffs(f.clone(), &[1, 3, 4], 8);
        let w = Series::from_int_coeffs(f.clone(), &[2, 0, 1], 8);
        let g2: Vec<Series> = (0..2)
            .map(|r| gens[1][r].mul(&u).add(&gens[0][r].mul(&w)))
            .collect();
        let mixed = vec![gens[0].clone(), g2];
        let lat2 = Lattice::canonicalize(&f, &mixed, 2).unwrap();
        assert_eq!(lat, lat2);
    }

    #[test]
    fn membership_matches_construction() {
        let f = f5();
        let gens = vec![
            vec![mono(&f, 1, -1, 8), mono(&f, 1, 0, 8)],
            vec![zero(&f, 8), mono(&f, 1, 1, 8)],
        ];
        let lat = Lattice::canonicalize(&f, &gens, 2).unwrap();
        // Generators and O-combinations belong.
        assert!(lat.contains_vector(&gens[0]).unwrap());
        assert!(lat.contains_vector(&gens[1]).unwrap());
        let combo: Vec<Series> = (0..2)
            .map(|r| gens[0][r].mul(&mono(&f, 3, 2, 8)).add(&gens[1][r]))
            .collect();
        assert!(lat.contains_vector(&combo).unwrap());
        // t^{-1} e2 is not in Λ: zeroing the first coordinate forces the
        // coefficient of g1 to zero, and multiples of (0, t) stay integral.
        assert!(!lat
            .contains_vector(&[zero(&f, 8), mono(&f, 1, -1, 8)])
            .unwrap());
        // t^{-1} e1 is not: matching the first coordinate needs coefficient 1
        // on g1, whose unit second coordinate then cannot be cancelled in O.
        assert!(!lat
            .contains_vector(&[mono(&f, 1, -1, 8), zero(&f, 8)])
            .unwrap());
        // e1 = t·g1 - g2 = (1, t) - (0, t) is in Λ.
        assert!(lat.contains_vector(&unit_vec(&f, 2, 0, 0, 8)).unwrap());
    }

    #[test]
    fn rel_length_examples() {
        let f = f5();
        let std2 = Lattice::standard(f.clone(), 2, 1);
        let t_std = std2.scale_by_t_power(1).unwrap();
        assert_eq!(std2.rel_length(&t_std).unwrap(), 2);
        assert_eq!(std2.rel_length(&std2).unwrap(), 0);
        // Diagonal lattice t^a O ⊕ t^b O against O^2: index −(a+b).
        let (a, b) = (2, -1);
        let gens = vec![unit_vec(&f, 2, 0, a, 9), unit_vec(&f, 2, 1, b, 9)];
        let diag = Lattice::canonicalize(&f, &gens, 3).unwrap();
        let std_w3 = Lattice::standard(f.clone(), 2, 3);
        assert_eq!(diag.rel_length(&std_w3).unwrap(), -(a + b));
        // Additivity on a triple.
        let l3 = t_std.with_window(3).unwrap();
        assert_eq!(
            diag.rel_length(&l3).unwrap(),
            diag.rel_length(&std_w3).unwrap() + std_w3.rel_length(&l3).unwrap()
        );
    }

    #[test]
    fn containment_and_same_module_across_windows() {
        let f = f5();
        let std_w1 = Lattice::standard(f.clone(), 2, 1);
        let std_w2 = Lattice::standard(f.clone(), 2, 2);
        assert!(std_w1.same_module(&std_w2).unwrap());
        let t_std = std_w1.scale_by_t_power(1).unwrap();
        assert!(std_w1.contains(&t_std).unwrap());
        assert!(!t_std.contains(&std_w1).unwrap());
    }

    #[test]
    fn stability_examples() {
        let f = f5();
        // Diagonal regular semisimple with unit eigenvalues stabilizes any
        // diagonal lattice.
        let u1 = Series::from_int_coeffs(f.clone(), &[1, 1], 10);
        let u2 = Series::from_int_coeffs(f.clone(), &[2], 10);
        let gamma = SMat::from_rows(
            f.clone(),
            vec![
                vec![u1, zero(&f, 10)],
                vec![zero(&f, 10), u2],
            ],
        )
        .unwrap();
        let gens = vec![unit_vec(&f, 2, 0, 2, 10), unit_vec(&f, 2, 1, -1, 10)];
        let diag = Lattice::canonicalize(&f, &gens, 2).unwrap();
        assert!(diag.is_stable(&gamma).unwrap());

        let nil_t = SMat::from_rows(
            f.clone(),
            vec![
                vec![zero(&f, 10), mono(&f, 1, 1, 10)],
                vec![zero(&f, 10), zero(&f, 10)],
            ],
        )
        .unwrap();
        let std2 = Lattice::standard(f.clone(), 2, 1);
        assert!(std2.is_stable(&nil_t).unwrap());

        let nil_tinv = SMat::from_rows(
            f.clone(),
            vec![
                vec![zero(&f, 10), mono(&f, 1, -1, 10)],
                vec![zero(&f, 10), zero(&f, 10)],
            ],
        )
        .unwrap();
        assert!(!std2.is_stable(&nil_tinv).unwrap());
    }

    #[test]
    fn stability_requires_certifiable_precision() {
        let f = f5();
        let std2 = Lattice::standard(f.clone(), 2, 2);
        // Horizon 1 < 2·window: products cannot be certified modulo t^{2m}.
        let short = SMat::from_rows(
            f.clone(),
            vec![
                vec![mono(&f, 1, 0, 1), zero(&f, 1)],
                vec![zero(&f, 1), mono(&f, 1, 0, 1)],
            ],
        )
        .unwrap();
        assert!(matches!(
            std2.is_stable(&short),
            Err(Error::InsufficientPrecision { .. })
        ));
    }

    #[test]
    fn symplectic_dual_examples() {
        let f = f5();
        let j = SMat::symplectic_form(f.clone(), 4, 40).unwrap();
        let std4 = Lattice::standard(f.clone(), 4, 1);
        assert_eq!(std4.symplectic_dual(&j).unwrap(), std4);

        let t_std = std4.scale_by_t_power(1).unwrap();
        let dual = t_std.symplectic_dual(&j).unwrap();
        let t_inv_std = std4.scale_by_t_power(-1).unwrap();
        assert!(dual.same_module(&t_inv_std).unwrap());
        assert_eq!(dual.index(), -t_std.index());

        // Involution and inclusion reversal on a mixed lattice.
        let gens = vec![
            unit_vec(&f, 4, 0, 1, 12),
            unit_vec(&f, 4, 1, 0, 12),
            vec![
                zero(&f, 12),
                mono(&f, 2, 0, 12),
                mono(&f, 1, -1, 12),
                zero(&f, 12),
            ],
            unit_vec(&f, 4, 3, 2, 12),
        ];
        let lam = Lattice::canonicalize(&f, &gens, 2).unwrap();
        let lam_dd = lam
            .symplectic_dual(&j)
            .unwrap()
            .symplectic_dual(&j)
            .unwrap();
        assert_eq!(lam_dd, lam);
        assert_eq!(lam.symplectic_dual(&j).unwrap().index(), -lam.index());
        let sub = lam.scale_by_t_power(1).unwrap().with_window(3).unwrap();
        let lam_w3 = lam.with_window(3).unwrap();
        assert!(lam_w3.contains(&sub).unwrap());
        let j_big = SMat::symplectic_form(f.clone(), 4, 60).unwrap();
        let dual_big = lam_w3.symplectic_dual(&j_big).unwrap();
        let dual_sub = sub.symplectic_dual(&j_big).unwrap();
        assert!(dual_sub.contains(&dual_big).unwrap());
    }

    #[test]
    fn chain_validation() {
        let f = f5();
        let full: BTreeSet<usize> = [0, 1, 2].into_iter().collect();
        let chain = LatticeChain::standard(&f, 3, &full).unwrap();
        assert!(validate_chain(&chain));
        for (&i, lat) in &chain.members {
            assert_eq!(lat.index(), i as i64);
        }

        // Single-member chain (J = {0}) wraps around trivially.
        let j0: BTreeSet<usize> = [0].into_iter().collect();
        assert!(validate_chain(&LatticeChain::standard(&f, 3, &j0).unwrap()));

        // A mislabeled index breaks validation.
        let mut bad = chain.clone();
        let l2 = bad.members[&2].clone();
        bad.members.insert(1, l2);
        assert!(!validate_chain(&bad));

        // An inclusion failure with correct indices: Λ_1 spans t^{-1}e_0,
        // e_1, e_2 while the purported Λ_2 spans e_0, t^{-1}e_1, t^{-1}e_2;
        // the former is not contained in the latter.
        let lam1 = chain.members[&1].clone();
        let gens: Vec<Vec<Series>> = (0..3)
            .map(|j| {
                (0..3)
                    .map(|r| {
                        if r == j {
                            let e = if j == 0 { 0 } else { -1 };
                            mono(&f, 1, e, 4)
                        } else {
                            zero(&f, 4)
                        }
                    })
                    .collect()
            })
            .collect();
        let not_super = Lattice::canonicalize(&f, &gens, 1).unwrap();
        assert_eq!(not_super.index(), 2);
        let mut broken = LatticeChain::new(
            [(1usize, lam1), (2usize, not_super)].into_iter().collect(),
        );
        broken.type_set = [1, 2].into_iter().collect();
        assert!(!validate_chain(&broken));
    }

    #[test]
    fn json_snapshot_is_exact_and_deterministic() {
        let f = f5();
        let gens = vec![
            vec![mono(&f, 1, -1, 8), mono(&f, 1, 0, 8)],
            vec![zero(&f, 8), mono(&f, 1, 1, 8)],
        ];
        let lat = Lattice::canonicalize(&f, &gens, 2).unwrap();
        let js = lat.to_json();
        assert_eq!(js.n, 2);
        assert_eq!(js.window, 2);
        let total: i64 = js.pivots.iter().sum();
        assert_eq!(lat.index(), 2 * 2 - total);
        // M = t^2 Λ = span{(t, t^2), (0, t^3)} has Hermite form with pivots
        // t^2, t^2 and the single above-pivot entry t.
        assert_eq!(js.pivots, vec![2, 2]);
        assert_eq!(js.entries[0][0], "t^2");
        assert_eq!(js.entries[0][1], "t");
        assert_eq!(js.entries[1][0], "0");
        assert_eq!(js.entries[1][1], "t^2");
    }
}
