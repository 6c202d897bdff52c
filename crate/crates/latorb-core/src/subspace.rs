//! Enumeration of operator-stable F_q-subspaces of a level-graded space.
//!
//! The ambient space V has a basis indexed 0..d, each coordinate carrying an
//! integer level. W_{≥ℓ} denotes the span of all coordinates of level ≥ ℓ.
//! The engine lists every subspace U ⊆ V such that
//!
//!   * T(U) ⊆ U for each *closed* operator T, where closed operators must be
//!     level non-decreasing (T e_c ∈ W_{≥ level(c)});
//!   * K(U) = 0 for each kill map K (arbitrary linear maps out of V);
//!   * A(U) ⊆ U for each *deferred* operator A (no level restriction; these
//!     are only checked on completed candidates);
//!   * U contains the forced coordinates' basis vectors;
//!   * dim U equals the target dimension, when one is given.
//!
//! Subspaces are built from the deepest level upward through their reduced
//! row-echelon bases with respect to the coordinate order (level ascending,
//! index ascending). Every vector of U whose leading coordinate sits at
//! level ℓ lies in W_{≥ℓ}, so U ∩ W_{≥ℓ} is spanned by the already-built
//! rows — this is what makes closure under the closed operators checkable
//! the moment a row is proposed, and the search tree prunes exactly.
//!
//! Within one level block the pivot set and the same-level entries are
//! enumerated directly, while all entries in deeper columns are solved for
//! jointly: the closure and kill conditions are affine in those entries
//! (a level non-decreasing operator cannot move a deeper column back into
//! the current level), so each consistent configuration is obtained from one
//! linear solve plus its kernel, and no candidate is ever visited twice.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::fq::{FieldRef, FqElem};
use crate::fqlin::FqMat;

/// Default cap on search nodes shared across one enumeration task.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// A shared, thread-safe node budget. Every recursion step, candidate
/// configuration, and solution instantiation costs one tick; exceeding the
/// cap aborts the search with `SearchBudgetExceeded`.
#[derive(Debug)]
pub struct Budget {
    cap: u64,
    used: AtomicU64,
}

impl Budget {
    pub fn new(cap: u64) -> Self {
        Budget {
            cap,
            used: AtomicU64::new(0),
        }
    }

    pub fn standard() -> Self {
        Self::new(DEFAULT_BUDGET)
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    fn tick(&self, n: u64) -> Result<()> {
        let prev = self.used.fetch_add(n, Ordering::Relaxed);
        if prev.saturating_add(n) > self.cap {
            Err(Error::SearchBudgetExceeded(self.cap))
        } else {
            Ok(())
        }
    }
}

/// Specification of one stable-subspace enumeration.
#[derive(Clone)]
pub struct StableProblem {
    pub field: FieldRef,
    /// Level of each coordinate of V; the length determines dim V.
    pub levels: Vec<i64>,
    /// Level non-decreasing endomorphisms under which U must be closed.
    pub closed_ops: Vec<FqMat>,
    /// Linear maps that must vanish identically on U.
    pub kill_maps: Vec<FqMat>,
    /// Arbitrary endomorphisms under which U must be closed; checked only on
    /// completed candidates, so they prune far less than closed operators.
    pub deferred_ops: Vec<FqMat>,
    /// Coordinates whose basis vectors must lie in U.
    pub forced: BTreeSet<usize>,
    /// Exact dimension of U, when prescribed.
    pub target_dim: Option<usize>,
}

/// Reduced row-echelon basis of one stable subspace, in the original
/// coordinates. Rows are ordered by pivot (level ascending, index ascending);
/// each row has 1 at its pivot, 0 at every other pivot, and entries only in
/// coordinates of level at least the pivot's level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EchelonBasis {
    pub pivots: Vec<usize>,
    pub rows: Vec<Vec<FqElem>>,
}

impl EchelonBasis {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }
}

/// Enumerate all subspaces satisfying the problem constraints, in a
/// deterministic order.
pub fn enumerate_stable(problem: &StableProblem, budget: &Budget) -> Result<Vec<EchelonBasis>> {
    let d = problem.levels.len();
    for op in &problem.closed_ops {
        if op.rows() != d || op.cols() != d {
            return Err(Error::InvalidInput(format!(
                "closed operator is {}x{}, space dimension is {d}",
                op.rows(),
                op.cols()
            )));
        }
        for j in 0..d {
            for i in 0..d {
                if !op.get(i, j).is_zero() && problem.levels[i] < problem.levels[j] {
                    return Err(Error::InvalidInput(format!(
                        "closed operator lowers level: coordinate {j} (level {}) \
                         hits coordinate {i} (level {})",
                        problem.levels[j], problem.levels[i]
                    )));
                }
            }
        }
    }
    for op in &problem.deferred_ops {
        if op.rows() != d || op.cols() != d {
            return Err(Error::InvalidInput(format!(
                "deferred operator is {}x{}, space dimension is {d}",
                op.rows(),
                op.cols()
            )));
        }
    }
    for k in &problem.kill_maps {
        if k.cols() != d {
            return Err(Error::InvalidInput(format!(
                "kill map has {} columns, space dimension is {d}",
                k.cols()
            )));
        }
    }
    if let Some(&c) = problem.forced.iter().find(|&&c| c >= d) {
        return Err(Error::InvalidInput(format!(
            "forced coordinate {c} outside 0..{d}"
        )));
    }

    // Coordinate order: level ascending, then index. Deeper blocks occupy
    // later positions and are processed first.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&c| (problem.levels[c], c));
    let mut pos_of = vec![0usize; d];
    for (pos, &c) in order.iter().enumerate() {
        pos_of[c] = pos;
    }
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for pos in 1..=d {
        if pos == d || problem.levels[order[pos]] != problem.levels[order[start]] {
            blocks.push((start, pos));
            start = pos;
        }
    }

    let permute_op = |op: &FqMat| -> Vec<Vec<FqElem>> {
        // op_cols[pos_in][pos_out] = matrix entry (original coords permuted).
        (0..d)
            .map(|pin| (0..d).map(|pout| op.get(order[pout], order[pin])).collect())
            .collect()
    };
    let closed: Vec<Vec<Vec<FqElem>>> = problem.closed_ops.iter().map(permute_op).collect();
    let deferred: Vec<Vec<Vec<FqElem>>> = problem.deferred_ops.iter().map(permute_op).collect();
    let kills: Vec<(usize, Vec<Vec<FqElem>>)> = problem
        .kill_maps
        .iter()
        .map(|k| {
            let r = k.rows();
            let cols = (0..d)
                .map(|pin| (0..r).map(|row| k.get(row, order[pin])).collect())
                .collect();
            (r, cols)
        })
        .collect();
    let forced_pos: BTreeSet<usize> = problem.forced.iter().map(|&c| pos_of[c]).collect();

    let mut en = Enumerator {
        f: problem.field.clone(),
        d,
        order,
        blocks,
        closed,
        deferred,
        kills,
        forced_pos,
        target: problem.target_dim,
        budget,
        rows: Vec::new(),
        out: Vec::new(),
    };
    let nblocks = en.blocks.len();
    en.recurse(nblocks)?;
    Ok(en.out)
}

/// Convenience wrapper when only the number of subspaces is needed.
pub fn count_stable(problem: &StableProblem, budget: &Budget) -> Result<u64> {
    Ok(enumerate_stable(problem, budget)?.len() as u64)
}

/// Affine forms in the deep unknowns: data[pos] = [constant, coeff of a_0,
/// coeff of a_1, ...], one row per coordinate position.
type SymVec = Vec<Vec<FqElem>>;

struct Enumerator<'a> {
    f: FieldRef,
    d: usize,
    order: Vec<usize>,
    blocks: Vec<(usize, usize)>,
    closed: Vec<Vec<Vec<FqElem>>>,
    deferred: Vec<Vec<Vec<FqElem>>>,
    kills: Vec<(usize, Vec<Vec<FqElem>>)>,
    forced_pos: BTreeSet<usize>,
    target: Option<usize>,
    budget: &'a Budget,
    /// Current echelon rows (pivot position, numeric row), pivot ascending.
    rows: Vec<(usize, Vec<FqElem>)>,
    out: Vec<EchelonBasis>,
}

impl Enumerator<'_> {
    /// Process blocks[..remaining], deepest (= last) first.
    fn recurse(&mut self, remaining: usize) -> Result<()> {
        self.budget.tick(1)?;
        if remaining == 0 {
            self.finalize();
            return Ok(());
        }
        let (lo, hi) = self.blocks[remaining - 1];
        let block: Vec<usize> = (lo..hi).collect();
        let forced_here: Vec<usize> = block
            .iter()
            .copied()
            .filter(|p| self.forced_pos.contains(p))
            .collect();
        let optional: Vec<usize> = block
            .iter()
            .copied()
            .filter(|p| !self.forced_pos.contains(p))
            .collect();
        let deep_free: Vec<usize> = (hi..self.d)
            .filter(|p| !self.rows.iter().any(|(q, _)| q == p))
            .collect();

        for mask in 0u64..(1u64 << optional.len()) {
            let mut pivots: Vec<usize> = forced_here.clone();
            for (bit, &p) in optional.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    pivots.push(p);
                }
            }
            pivots.sort_unstable();
            if let Some(t) = self.target {
                let dim_after = self.rows.len() + pivots.len();
                // lo positions remain in shallower blocks; they bound the
                // pivots still obtainable.
                if dim_after > t || dim_after + lo < t {
                    continue;
                }
            }
            self.try_pivot_set(remaining, lo, hi, &pivots, &deep_free)?;
        }
        Ok(())
    }

    /// Enumerate all valid entry assignments for a fixed pivot set inside the
    /// current block, then recurse into the next block.
    fn try_pivot_set(
        &mut self,
        remaining: usize,
        _lo: usize,
        hi: usize,
        pivots: &[usize],
        deep_free: &[usize],
    ) -> Result<()> {
        let q = self.f.q();
        // Same-level free cells, per pivot row: block positions after the
        // pivot that are not pivots themselves. Forced rows are exactly the
        // basis vectors, so they get no cells and no unknowns.
        let mut cells: Vec<(usize, usize)> = Vec::new(); // (row index, position)
        for (ri, &p) in pivots.iter().enumerate() {
            if self.forced_pos.contains(&p) {
                continue;
            }
            for pos in (p + 1)..hi {
                if !pivots.contains(&pos) {
                    cells.push((ri, pos));
                }
            }
        }
        let free_rows: Vec<usize> = (0..pivots.len())
            .filter(|&ri| !self.forced_pos.contains(&pivots[ri]))
            .collect();
        let nv = free_rows.len() * deep_free.len();
        let var_of = |ri: usize, dj: usize| -> usize {
            let slot = free_rows.iter().position(|&r| r == ri).expect("free row");
            slot * deep_free.len() + dj
        };

        let mut counter = vec![0u128; cells.len()];
        loop {
            self.budget.tick(1)?;
            // Build symbolic rows: constant part from the pivot and the
            // same-level cells, unknowns on the deep free columns.
            let mut sym_rows: Vec<SymVec> = Vec::with_capacity(pivots.len());
            for (ri, &p) in pivots.iter().enumerate() {
                let mut sv: SymVec = vec![vec![FqElem::ZERO; 1 + nv]; self.d];
                sv[p][0] = self.f.one();
                for (ci, &(cr, pos)) in cells.iter().enumerate() {
                    if cr == ri {
                        sv[pos][0] = self.f.element(counter[ci]);
                    }
                }
                if !self.forced_pos.contains(&p) {
                    for (dj, &pos) in deep_free.iter().enumerate() {
                        sv[pos][1 + var_of(ri, dj)] = self.f.one();
                    }
                }
                sym_rows.push(sv);
            }
            self.solve_and_descend(remaining, pivots, &sym_rows, nv)?;
            // Advance the base-q counter over same-level cells.
            let mut idx = 0;
            loop {
                if idx == counter.len() {
                    return Ok(());
                }
                counter[idx] += 1;
                if counter[idx] < q {
                    break;
                }
                counter[idx] = 0;
                idx += 1;
            }
        }
    }

    /// Assemble the affine closure/kill system for the proposed rows, and
    /// recurse once per solution.
    fn solve_and_descend(
        &mut self,
        remaining: usize,
        pivots: &[usize],
        sym_rows: &[SymVec],
        nv: usize,
    ) -> Result<()> {
        let mut equations: Vec<Vec<FqElem>> = Vec::new(); // [coeffs…, const]
        for sv in sym_rows {
            for op in &self.closed {
                let mut w = self.apply_sym(op, sv, nv);
                self.reduce_sym(&mut w, pivots, sym_rows);
                collect_equations(&w, &mut equations);
            }
            for (r, kcols) in &self.kills {
                let mut w: SymVec = vec![vec![FqElem::ZERO; 1 + nv]; *r];
                for (pos, form) in sv.iter().enumerate() {
                    if form.iter().all(|c| c.is_zero()) {
                        continue;
                    }
                    for outr in 0..*r {
                        let k = kcols[pos][outr];
                        if k.is_zero() {
                            continue;
                        }
                        for slot in 0..=nv {
                            w[outr][slot] = self.f.add(w[outr][slot], self.f.mul(k, form[slot]));
                        }
                    }
                }
                collect_equations(&w, &mut equations);
            }
        }

        // Solve the affine system over the deep unknowns.
        let solutions = self.solve_affine(&equations, nv);
        let Some((particular, kernel)) = solutions else {
            return Ok(());
        };
        let q = self.f.q();
        let mut combo = vec![0u128; kernel.len()];
        loop {
            self.budget.tick(1)?;
            let mut a = particular.clone();
            for (ki, kv) in kernel.iter().enumerate() {
                let c = self.f.element(combo[ki]);
                if !c.is_zero() {
                    for (ai, &kj) in a.iter_mut().zip(kv.iter()) {
                        *ai = self.f.add(*ai, self.f.mul(c, kj));
                    }
                }
            }
            // Instantiate the numeric rows and recurse.
            let new_rows: Vec<(usize, Vec<FqElem>)> = pivots
                .iter()
                .zip(sym_rows.iter())
                .map(|(&p, sv)| {
                    let row: Vec<FqElem> = sv
                        .iter()
                        .map(|form| {
                            let mut x = form[0];
                            for (vi, &av) in a.iter().enumerate() {
                                x = self.f.add(x, self.f.mul(form[1 + vi], av));
                            }
                            x
                        })
                        .collect();
                    (p, row)
                })
                .collect();
            let keep = self.rows.len();
            let mut merged = new_rows;
            merged.extend(self.rows.drain(..));
            self.rows = merged;
            self.recurse(remaining - 1)?;
            // Restore: the old rows are the tail (their pivots are deeper).
            self.rows.drain(..self.rows.len() - keep);

            let mut idx = 0;
            loop {
                if idx == combo.len() {
                    return Ok(());
                }
                combo[idx] += 1;
                if combo[idx] < q {
                    break;
                }
                combo[idx] = 0;
                idx += 1;
            }
        }
    }

    /// w = T v for a symbolic vector v (affine forms in the unknowns).
    fn apply_sym(&self, op_cols: &[Vec<FqElem>], v: &SymVec, nv: usize) -> SymVec {
        let mut w: SymVec = vec![vec![FqElem::ZERO; 1 + nv]; self.d];
        for (pos, form) in v.iter().enumerate() {
            if form.iter().all(|c| c.is_zero()) {
                continue;
            }
            let col = &op_cols[pos];
            for (out, &m) in col.iter().enumerate() {
                if m.is_zero() {
                    continue;
                }
                for slot in 0..=nv {
                    w[out][slot] = self.f.add(w[out][slot], self.f.mul(m, form[slot]));
                }
            }
        }
        w
    }

    /// Reduce a symbolic vector against the new rows (symbolic) and the old
    /// rows (numeric), scanning positions in ascending order. Coefficients at
    /// the new pivots are necessarily constant because closed operators never
    /// move deep columns back to the current level.
    fn reduce_sym(&self, w: &mut SymVec, pivots: &[usize], sym_rows: &[SymVec]) {
        let nv = w.first().map_or(1, |f| f.len()) - 1;
        let mut old_iter = self.rows.iter().peekable();
        for pos in 0..self.d {
            if let Some(ri) = pivots.iter().position(|&p| p == pos) {
                let coeff = w[pos].clone();
                debug_assert!(
                    coeff[1..].iter().all(|c| c.is_zero()),
                    "closure coefficient at a same-level pivot must be constant"
                );
                let c = coeff[0];
                if !c.is_zero() {
                    for (wf, vf) in w.iter_mut().zip(sym_rows[ri].iter()) {
                        for slot in 0..=nv {
                            wf[slot] = self.f.sub(wf[slot], self.f.mul(c, vf[slot]));
                        }
                    }
                }
                continue;
            }
            while let Some(&&(p, _)) = old_iter.peek() {
                if p < pos {
                    old_iter.next();
                } else {
                    break;
                }
            }
            if let Some(&&(p, ref row)) = old_iter.peek() {
                if p == pos {
                    let coeff = w[pos].clone();
                    if coeff.iter().any(|c| !c.is_zero()) {
                        for (out, &re) in row.iter().enumerate() {
                            if re.is_zero() {
                                continue;
                            }
                            for slot in 0..=nv {
                                w[out][slot] =
                                    self.f.sub(w[out][slot], self.f.mul(coeff[slot], re));
                            }
                        }
                    }
                    old_iter.next();
                }
            }
        }
    }

    /// Solve the stacked affine equations; returns a particular solution and
    /// a kernel basis, or None when inconsistent.
    fn solve_affine(
        &self,
        equations: &[Vec<FqElem>],
        nv: usize,
    ) -> Option<(Vec<FqElem>, Vec<Vec<FqElem>>)> {
        if nv == 0 {
            if equations.iter().any(|eq| !eq[0].is_zero()) {
                return None;
            }
            return Some((vec![], vec![]));
        }
        if equations.is_empty() {
            let id = FqMat::identity(self.f.clone(), nv);
            let kernel = (0..nv).map(|i| (0..nv).map(|j| id.get(i, j)).collect()).collect();
            return Some((vec![FqElem::ZERO; nv], kernel));
        }
        let a = FqMat::from_fn(self.f.clone(), equations.len(), nv, |i, j| {
            equations[i][1 + j]
        });
        let b: Vec<FqElem> = equations.iter().map(|eq| self.f.neg(eq[0])).collect();
        let particular = a.solve(&b)?;
        Some((particular, a.kernel()))
    }

    fn finalize(&mut self) {
        if let Some(t) = self.target {
            if self.rows.len() != t {
                return;
            }
        }
        for op in &self.deferred {
            for (_, row) in &self.rows {
                let mut w: Vec<FqElem> = vec![FqElem::ZERO; self.d];
                for (pos, &x) in row.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (out, &m) in op[pos].iter().enumerate() {
                        if !m.is_zero() {
                            w[out] = self.f.add(w[out], self.f.mul(m, x));
                        }
                    }
                }
                for &(p, ref r) in &self.rows {
                    let c = w[p];
                    if !c.is_zero() {
                        for (we, &re) in w.iter_mut().zip(r.iter()) {
                            *we = self.f.sub(*we, self.f.mul(c, re));
                        }
                    }
                }
                if w.iter().any(|c| !c.is_zero()) {
                    return;
                }
            }
        }
        let pivots: Vec<usize> = self.rows.iter().map(|&(p, _)| self.order[p]).collect();
        let rows: Vec<Vec<FqElem>> = self
            .rows
            .iter()
            .map(|(_, row)| {
                let mut orig = vec![FqElem::ZERO; self.d];
                for (pos, &x) in row.iter().enumerate() {
                    orig[self.order[pos]] = x;
                }
                orig
            })
            .collect();
        self.out.push(EchelonBasis { pivots, rows });
    }
}

fn collect_equations(w: &SymVec, equations: &mut Vec<Vec<FqElem>>) {
    for form in w {
        if form.iter().any(|c| !c.is_zero()) {
            equations.push(form.clone());
        }
    }
}
