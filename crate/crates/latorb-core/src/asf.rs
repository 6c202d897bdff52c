//! Affine Springer fibers as sets of γ-stable lattices.
//!
//! For a regular semisimple γ ∈ gl_n(F), F = F_q((t)), the fiber is the set
//! of O-lattices Λ ⊂ F^n with γΛ ⊆ Λ. This module realizes finite windows of
//! that set concretely and counts them exactly, through two independent
//! engines:
//!
//! * a **raw window engine**: lattices with t^m O^n ⊆ Λ ⊆ t^{-m} O^n are
//!   t- and γ-closed subspaces of the 2mn-dimensional F_q-space
//!   t^{-m}O^n / t^m O^n (extended below/above when γ is not integral),
//!   enumerated by the generic stable-subspace engine;
//! * a **conductor quotient engine** for counts normalized modulo the
//!   action of the centralizer lattice: every lattice class with branch
//!   valuations zero is a full A-submodule M with 𝔠 ⊆ M ⊆ Ã, where
//!   A = O[γ], Ã its normalization ∏ k_i[[s_i]], and 𝔠 = ∏ s_i^{c_i} Ã_i the
//!   conductor; these M are t- and γ-closed subspaces of the 2δ-dimensional
//!   quotient Ã/𝔠.
//!
//! Agreement of the two engines on overlapping inputs is a strong exactness
//! check and is exercised in the tests.
//!
//! The module also provides the Iwahori-level enumeration (chains of
//! lattices) for n ≤ 3, the functional-constrained count that matches
//! colength ideals of plane curve germs, and the 𝔾_m-fixed lattices of the
//! sp₄ example.

use std::collections::{BTreeMap, BTreeSet};

use crate::countpoly::{self, CountPolynomial};
use crate::error::{Error, Result};
use crate::fq::{FieldRef, FqElem};
use crate::fqlin::FqMat;
use crate::lattice::{validate_chain, Lattice, LatticeChain};
use crate::matrix::SMat;
use crate::poly::SPoly;
use crate::series::Series;
use crate::spectral::{self, quotient_branches, QuotientBranch};
use crate::subspace::{self, Budget, EchelonBasis, StableProblem};

/// What to enumerate: the window, and optional constraints cutting the
/// fiber down to a finite or normalized piece.
#[derive(Debug, Clone)]
pub struct AsfOptions {
    /// Window half-width m: lattices satisfy t^m O^n ⊆ Λ ⊆ t^{-m} O^n.
    /// Normalized runs enlarge the effective window to val_disc when needed,
    /// which is always sufficient: a lattice with all branch valuations zero
    /// satisfies 𝔠 ⊆ Λ ⊆ Ã.
    pub window: i64,
    /// Keep only lattices with [Λ : O^n] equal to this index.
    pub index: Option<i64>,
    /// Keep only lattices on which this functional is integral:
    /// φ(Λ) ⊆ O for φ(x) = Σ φ_c x_c.
    pub integral_functional: Option<Vec<Series>>,
    /// Keep only lattices whose minimum valuation on every branch of the
    /// spectral curve is zero (one representative per centralizer-lattice
    /// orbit).
    pub normalized: bool,
}

impl AsfOptions {
    /// Plain window enumeration.
    pub fn raw(window: i64) -> Self {
        AsfOptions { window, index: None, integral_functional: None, normalized: false }
    }

    /// Branch-valuation-zero normalization.
    pub fn normalized(window: i64) -> Self {
        AsfOptions { window, index: None, integral_functional: None, normalized: true }
    }

    pub fn with_index(mut self, index: i64) -> Self {
        self.index = Some(index);
        self
    }

    pub fn with_integral_functional(mut self, phi: Vec<Series>) -> Self {
        self.integral_functional = Some(phi);
        self
    }
}

/// The coordinate frame of the raw window engine. V = t^{-m}O^n / t^{m+s}O^n
/// with basis e_{c,d} = t^{d−m} ê_c for component c ∈ [0,n) and level
/// d ∈ [0, 2m+s); s ≥ 0 widens the frame downward-closed when γ or the
/// integrality functional has poles.
struct RawFrame {
    field: FieldRef,
    n: usize,
    m: i64,
    s: i64,
}

impl RawFrame {
    fn lp(&self) -> i64 {
        2 * self.m + self.s
    }

    fn dim(&self) -> usize {
        self.n * self.lp() as usize
    }

    fn idx(&self, c: usize, d: i64) -> usize {
        c * self.lp() as usize + d as usize
    }
}

fn coeff_at(series: &Series, e: i64) -> Result<FqElem> {
    series.coeff_known(e).ok_or(Error::InsufficientPrecision { have: series.horizon(), need: e + 1 })
}

/// Build the stable-subspace problem whose solutions are exactly the γ-stable
/// lattices in the window (with the requested index/integrality cuts).
fn raw_problem(gamma: &SMat, opts: &AsfOptions, m: i64) -> Result<(StableProblem, RawFrame)> {
    let n = gamma.rows();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if m < 1 {
        return Err(Error::InvalidInput("window must be at least 1".into()));
    }
    let field = gamma.field().clone();

    // Spread: how far below O^n the operators push the window.
    let mut s_gamma: i64 = 0;
    for i in 0..n {
        for j in 0..n {
            s_gamma = s_gamma.max(-gamma.get(i, j).val_lower_bound());
        }
    }
    let mut s = s_gamma.max(0);
    let mut vphi: i64 = 0;
    if let Some(phi) = &opts.integral_functional {
        if phi.len() != n {
            return Err(Error::InvalidInput(format!(
                "functional has {} components, ambient rank is {n}",
                phi.len()
            )));
        }
        vphi = phi.iter().map(|c| c.val_lower_bound()).min().unwrap_or(0);
        s = s.max(-(m + vphi)).max(0);
        let need = m;
        for c in phi {
            if c.horizon() < need {
                return Err(Error::InsufficientPrecision { have: c.horizon(), need });
            }
        }
    }

    let frame = RawFrame { field: field.clone(), n, m, s };
    let lp = frame.lp();
    if gamma.min_horizon() < lp {
        return Err(Error::InsufficientPrecision { have: gamma.min_horizon(), need: lp });
    }
    let dim = frame.dim();

    let levels: Vec<i64> = (0..dim).map(|i| (i as i64) % lp).collect();

    // t-action: e_{c,d} -> e_{c,d+1}, dropping off the top (those images lie
    // in t^{m+s}O^n, which is zero in V).
    let t_mat = FqMat::from_fn(field.clone(), dim, dim, |row, col| {
        let (c, d) = (col / lp as usize, (col % lp as usize) as i64);
        if d + 1 < lp && row == frame.idx(c, d + 1) {
            field.one()
        } else {
            field.zero()
        }
    });

    // γ-action within V: entry ((c',d'), (c,d)) is the coefficient of
    // t^{d'−d} in γ_{c'c}. Truncation above the window lands in t^{m+s}O^n
    // (zero in V); the part below the window is constrained to vanish by the
    // kill rows, so on the kernel of those rows the matrix is the exact
    // action on lattice classes.
    let mut g_entries = vec![field.zero(); dim * dim];
    for c in 0..n {
        for d in 0..lp {
            for cp in 0..n {
                for dp in 0..lp {
                    let e = coeff_at(gamma.get(cp, c), dp - d)?;
                    g_entries[frame.idx(cp, dp) * dim + frame.idx(c, d)] = e;
                }
            }
        }
    }
    let g_mat = FqMat::from_fn(field.clone(), dim, dim, |r, cc| g_entries[r * dim + cc]);

    let mut closed_ops = vec![t_mat];
    let mut deferred_ops = Vec::new();
    let mut kill_maps = Vec::new();
    let mut forced = BTreeSet::new();

    if s == 0 {
        // Integral γ: every nonzero coefficient of γ_{c'c} sits at exponent
        // ≥ 0, so the matrix is level-non-decreasing and prunes eagerly.
        closed_ops.push(g_mat);
    } else {
        deferred_ops.push(g_mat);
        // Below-window part of the γ-image must vanish: exponents
        // t^{d'−m} with d' ∈ [−s, 0).
        if s_gamma > 0 {
            let rows = n * s as usize;
            let kill = FqMat::from_fn(field.clone(), rows, dim, |row, col| {
                let (cp, j) = (row / s as usize, (row % s as usize) as i64);
                let dp = -s + j;
                let (c, d) = (col / lp as usize, (col % lp as usize) as i64);
                gamma.get(cp, c).coeff_known(dp - d).unwrap_or_else(|| field.zero())
            });
            kill_maps.push(kill);
        }
        // The window floor t^m O^n must stay inside Λ once the frame extends
        // below it; forcing these coordinates also makes the deferred check
        // exact (γ's truncation error lies in their span).
        for c in 0..n {
            for d in 2 * m..lp {
                forced.insert(frame.idx(c, d));
            }
        }
    }

    if let Some(phi) = &opts.integral_functional {
        let emin = vphi - m;
        if emin < 0 {
            let rows = (-emin) as usize;
            let kill = FqMat::from_fn(field.clone(), rows, dim, |row, col| {
                let e = emin + row as i64;
                let (c, d) = (col / lp as usize, (col % lp as usize) as i64);
                phi[c].coeff_known(e - d + m).unwrap_or_else(|| field.zero())
            });
            kill_maps.push(kill);
        }
    }

    let target_dim = match opts.index {
        None => None,
        Some(ind) => {
            let target = (n as i64) * (m + s) + ind;
            if target < forced.len() as i64 || target > dim as i64 {
                // No lattice in this window has that index; an impossible
                // target besides confusing the engine.
                Some(usize::MAX)
            } else {
                Some(target as usize)
            }
        }
    };

    Ok((
        StableProblem {
            field,
            levels,
            closed_ops,
            kill_maps,
            deferred_ops,
            forced,
            target_dim,
        },
        frame,
    ))
}

fn basis_to_lattice(frame: &RawFrame, basis: &EchelonBasis) -> Result<Lattice> {
    let lp = frame.lp();
    let h = frame.m + frame.s + 2;
    let mut gens: Vec<Vec<Series>> = Vec::with_capacity(basis.rows.len() + frame.n);
    for row in &basis.rows {
        let mut v = Vec::with_capacity(frame.n);
        for c in 0..frame.n {
            let terms: Vec<(i64, FqElem)> = (0..lp)
                .filter_map(|d| {
                    let a = row[frame.idx(c, d)];
                    if a == frame.field.zero() {
                        None
                    } else {
                        Some((d - frame.m, a))
                    }
                })
                .collect();
            v.push(Series::from_terms(frame.field.clone(), &terms, h));
        }
        gens.push(v);
    }
    // Complete by the kernel of the frame: t^{m+s} O^n ⊆ Λ always.
    for c in 0..frame.n {
        let mut v = vec![Series::zero(frame.field.clone(), h); frame.n];
        v[c] = Series::monomial(frame.field.clone(), frame.field.one(), frame.m + frame.s, h);
        gens.push(v);
    }
    Lattice::canonicalize(&frame.field, &gens, frame.m)
}

/// Map `Error::NotSeparable` (an inseparable characteristic polynomial) to
/// the structural verdict about γ.
fn rs_gate(e: Error) -> Error {
    match e {
        Error::NotSeparable => Error::NotRegularSemisimple,
        other => other,
    }
}

/// Enumerate the γ-stable lattices selected by `opts`, in canonical order.
///
/// Raw window enumeration is well-defined for any γ (the window keeps it
/// finite); only the normalized mode needs the branch structure of the
/// spectral curve and hence a regular semisimple γ.
pub fn enumerate_stable(gamma: &SMat, opts: &AsfOptions, budget: &Budget) -> Result<Vec<Lattice>> {
    if opts.normalized {
        let n = gamma.rows();
        let integral = (0..n)
            .all(|i| (0..n).all(|j| gamma.get(i, j).val_lower_bound() >= 0));
        if !integral {
            // Conjugate to companion coordinates: with B the cyclic basis
            // matrix, B^{-1} γ B is the companion matrix of the (shared)
            // characteristic polynomial, and Λ ↦ B·Λ is a bijection of
            // fibers preserving branch valuations. The companion matrix is
            // integral whenever stable lattices exist at all (an eigenvalue
            // with a negative slope rules them out), and in companion
            // coordinates the γ-closure prunes eagerly.
            let cp = gamma.char_poly();
            let comp = SMat::companion(&cp)?;
            let comp_integral = (0..n)
                .all(|i| (0..n).all(|j| comp.get(i, j).val_lower_bound() >= 0));
            if !comp_integral {
                return Ok(Vec::new());
            }
            let inner = AsfOptions::normalized(opts.window);
            let comp_lats = enumerate_stable(&comp, &inner, budget)?;
            let valuator = BranchValuator::new(gamma)?;
            let mut lats = Vec::with_capacity(comp_lats.len());
            for cl in &comp_lats {
                let mapped = apply_matrix(cl, &valuator.bmat)?;
                if let Some(ind) = opts.index {
                    if mapped.index() != ind {
                        continue;
                    }
                }
                if let Some(phi) = &opts.integral_functional {
                    if !functional_integral(phi, &mapped)? {
                        continue;
                    }
                }
                lats.push(mapped);
            }
            lats.sort();
            return Ok(lats);
        }

        // Integral γ: 𝔠 ⊆ Λ ⊆ Ã pins normalized lattices inside the window
        // val_disc + spread(B) + spread(B^{-1}) (the cyclic identification
        // displaces standard windows by at most the frame spread).
        let cp = gamma.char_poly();
        let vd = spectral::val_disc(&cp).map_err(rs_gate)?;
        let valuator = BranchValuator::new(gamma)?;
        let m = opts.window.max(vd + valuator.frame_spread()?).max(1);
        let (problem, frame) = raw_problem(gamma, opts, m)?;
        if problem.target_dim == Some(usize::MAX) {
            return Ok(Vec::new());
        }
        let bases = subspace::enumerate_stable(&problem, budget)?;
        let mut lats = Vec::new();
        for b in &bases {
            let lat = basis_to_lattice(&frame, b)?;
            if valuator.min_vals(&lat)?.iter().all(|&v| v == 0) {
                lats.push(lat);
            }
        }
        lats.sort();
        return Ok(lats);
    }

    let (problem, frame) = raw_problem(gamma, opts, opts.window)?;
    if problem.target_dim == Some(usize::MAX) {
        return Ok(Vec::new());
    }
    let bases = subspace::enumerate_stable(&problem, budget)?;
    let mut lats = Vec::with_capacity(bases.len());
    for b in &bases {
        lats.push(basis_to_lattice(&frame, b)?);
    }
    lats.sort();
    Ok(lats)
}

/// φ(Λ) ⊆ O: every basis vector pairs to a nonnegative valuation.
fn functional_integral(phi: &[Series], lat: &Lattice) -> Result<bool> {
    let n = lat.rank();
    if phi.len() != n {
        return Err(Error::InvalidInput("functional length mismatch".into()));
    }
    let h = phi.iter().map(|c| c.horizon()).min().unwrap_or(8).max(lat.window() + 2);
    for g in lat.basis_series(h) {
        let mut acc = Series::zero(phi[0].field().clone(), h);
        for (p, x) in phi.iter().zip(&g) {
            acc = acc.add(&p.mul(x));
        }
        if acc.val_lower_bound() < 0 {
            match acc.val_exact() {
                Some(v) if v < 0 => return Ok(false),
                Some(_) => {}
                None => {
                    return Err(Error::UncertainValuation(acc.val_lower_bound()));
                }
            }
        }
    }
    Ok(true)
}

/// Count the lattices selected by `opts`. Normalized counts with no further
/// cuts go through the conductor quotient; everything else enumerates.
pub fn count_points(gamma: &SMat, opts: &AsfOptions, budget: &Budget) -> Result<u64> {
    if opts.normalized && opts.index.is_none() && opts.integral_functional.is_none() {
        return count_normalized(&gamma.char_poly(), budget);
    }
    Ok(enumerate_stable(gamma, opts, budget)?.len() as u64)
}

/// Fit a polynomial in q through exact counts, with holdout verification.
pub fn interpolate_counts(samples: &[(u64, u64)], degree_bound: usize) -> Result<CountPolynomial> {
    countpoly::interpolate(samples, degree_bound)
}

/// The lattice classes with all branch valuations zero, as submodules of the
/// conductor quotient Q = Ã/𝔠.
#[derive(Debug, Clone)]
pub struct NormalizedClasses {
    /// dim_{F_q} Q = Σ f_i c_i = 2δ.
    pub two_delta: usize,
    /// F_q-dimension of M = Λ/𝔠 for each class, in enumeration order. The
    /// index of the class representative is dim M − δ.
    pub dims: Vec<usize>,
}

/// Enumerate the normalized classes of the fiber of the companion matrix of
/// `p` through the conductor quotient.
///
/// Q carries commuting actions of t (exact: t = s_i^{e_i} on branch i) and
/// γ (multiplication by the Puiseux series γ_i); submodules are t,γ-closed
/// F_q-subspaces. A class has branch-i valuation zero iff its image in Q is
/// nonzero in the s_i-degree-0 slots (automatic when c_i = 0). Requires the
/// spectrum to be integral; a branch with a negative slope admits no stable
/// lattice at all, so the result is then empty.
pub fn normalized_classes(p: &SPoly, budget: &Budget) -> Result<NormalizedClasses> {
    let base = p.field().clone();
    let qb = quotient_branches(p).map_err(rs_gate)?;

    // Branch layout: branch i occupies f_i·c_i coordinates, indexed by
    // (s-degree d, residue-field slot j).
    let sizes: Vec<usize> = qb.iter().map(|b| b.f * b.cond).collect();
    let offs: Vec<usize> = sizes
        .iter()
        .scan(0usize, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let dim: usize = sizes.iter().sum();

    for b in &qb {
        if let Some(v) = b.gamma.val_exact() {
            if v < 0 {
                return Ok(NormalizedClasses { two_delta: dim, dims: Vec::new() });
            }
        }
        // val_exact None means γ_i ≡ 0 to precision; with c_i ≤ its horizon
        // the truncated action below is exact.
    }

    let mut levels = Vec::with_capacity(dim);
    for (i, b) in qb.iter().enumerate() {
        let _ = i;
        for d in 0..b.cond {
            for _ in 0..b.f {
                levels.push(d as i64);
            }
        }
    }

    let zero = base.zero();
    let mut t_entries = vec![zero; dim * dim];
    let mut g_entries = vec![zero; dim * dim];
    for (i, b) in qb.iter().enumerate() {
        let off = offs[i];
        let col_of = |d: usize, j: usize| off + d * b.f + j;
        // Basis of k_i over F_q: the residue-field limbs (for f = 1 the
        // identity on the base field).
        let limbs: Vec<FqElem> =
            (0..b.f).map(|j| b.big.element((b.big.p() as u128).pow(j as u32))).collect();
        for d in 0..b.cond {
            for j in 0..b.f {
                let col = col_of(d, j);
                // t = s^e exactly.
                if d + b.e < b.cond {
                    t_entries[col_of(d + b.e, j) * dim + col] = base.one();
                }
                // γ_i = Σ_v β_v s^v, acting k_i-linearly on each slot.
                for (v, beta) in b.gamma.terms() {
                    let dp = d as i64 + v;
                    if dp < 0 || dp >= b.cond as i64 {
                        continue;
                    }
                    let prod = b.big.mul(beta, limbs[j]);
                    if b.f == 1 {
                        g_entries[col_of(dp as usize, 0) * dim + col] = prod;
                    } else {
                        // Prime base: limb digits are base-field scalars.
                        let mut enc = b.big.encode(prod);
                        let pchar = b.big.p() as u128;
                        for jp in 0..b.f {
                            let digit = enc % pchar;
                            enc /= pchar;
                            g_entries[col_of(dp as usize, jp) * dim + col] =
                                base.element(digit);
                        }
                    }
                }
            }
        }
    }
    let t_mat = FqMat::from_fn(base.clone(), dim, dim, |r, c| t_entries[r * dim + c]);
    let g_mat = FqMat::from_fn(base.clone(), dim, dim, |r, c| g_entries[r * dim + c]);

    let problem = StableProblem {
        field: base.clone(),
        levels,
        closed_ops: vec![t_mat, g_mat],
        kill_maps: Vec::new(),
        deferred_ops: Vec::new(),
        forced: BTreeSet::new(),
        target_dim: None,
    };
    let bases = subspace::enumerate_stable(&problem, budget)?;

    let mut dims = Vec::new();
    'outer: for basis in &bases {
        for (i, b) in qb.iter().enumerate() {
            if b.cond == 0 {
                continue;
            }
            let deg0 = offs[i]..offs[i] + b.f;
            let hit = basis.rows.iter().any(|row| deg0.clone().any(|c| row[c] != zero));
            if !hit {
                continue 'outer;
            }
        }
        dims.push(basis.rows.len());
    }
    Ok(NormalizedClasses { two_delta: dim, dims })
}

/// Number of branch-valuation-zero lattice classes for the given
/// characteristic polynomial.
pub fn count_normalized(p: &SPoly, budget: &Budget) -> Result<u64> {
    Ok(normalized_classes(p, budget)?.dims.len() as u64)
}

/// Computes the minimum valuation of a lattice along each branch of the
/// spectral curve of γ, via a cyclic basis F^n ≅ F[x]/(P).
pub struct BranchValuator {
    qb: Vec<QuotientBranch>,
    bmat: SMat,
}

impl BranchValuator {
    pub fn new(gamma: &SMat) -> Result<Self> {
        let n = gamma.rows();
        let field = gamma.field().clone();
        let cp = gamma.char_poly();
        let qb = quotient_branches(&cp).map_err(rs_gate)?;
        let h = gamma.min_horizon();

        // A cyclic vector among 0/1 combinations of the standard basis: for
        // regular semisimple γ one exists whenever the residue data is
        // generic enough, and the determinant certificate below is exact.
        for mask in 1u32..(1 << n) {
            let mut v: Vec<Series> = (0..n)
                .map(|c| {
                    if mask & (1 << c) != 0 {
                        Series::one(field.clone(), h)
                    } else {
                        Series::zero(field.clone(), h)
                    }
                })
                .collect();
            let mut cols: Vec<Vec<Series>> = Vec::with_capacity(n);
            for _ in 0..n {
                cols.push(v.clone());
                v = gamma.mul_vec(&v);
            }
            let bmat = SMat::from_rows(
                field.clone(),
                (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect(),
            )?;
            if bmat.det().val_exact().is_some() {
                return Ok(BranchValuator { qb, bmat });
            }
        }
        Err(Error::PrecisionExhausted("no certified cyclic vector found".into()))
    }

    /// Combined spread of the cyclic basis matrix and its inverse: how far
    /// the identification F^n ≅ F[x]/(P) displaces standard-lattice windows.
    pub fn frame_spread(&self) -> Result<i64> {
        let n = self.bmat.rows();
        let spread = |m: &SMat| {
            let mut s = 0i64;
            for i in 0..n {
                for j in 0..n {
                    s = s.max(-m.get(i, j).val_lower_bound());
                }
            }
            s.max(0)
        };
        let inv = self.bmat.inverse()?;
        Ok(spread(&self.bmat) + spread(&inv))
    }

    /// Number of branches of the spectral curve.
    pub fn branch_count(&self) -> usize {
        self.qb.len()
    }

    /// (Ramification index, residue degree) of each branch, in branch order.
    pub fn branch_ef(&self) -> Vec<(usize, usize)> {
        self.qb.iter().map(|b| (b.e, b.f)).collect()
    }

    /// The cyclic frame matrix whose columns are v, γv, …, γ^{n−1}v.
    pub fn frame(&self) -> &SMat {
        &self.bmat
    }

    /// s_i-adic valuation of a single vector on each branch, in branch
    /// order, via its coordinates in the cyclic frame.  A branch on which
    /// the vector is indistinguishable from zero reports None.
    pub fn vector_vals(&self, g: &[Series]) -> Result<Vec<Option<i64>>> {
        let coords = self.bmat.solve(g)?;
        let mut out = Vec::with_capacity(self.qb.len());
        for b in &self.qb {
            let hs = b.gamma.horizon();
            let mut acc = Series::zero(b.big.clone(), hs);
            let mut gpow = Series::one(b.big.clone(), hs);
            for c in &coords {
                let embedded = c.map_coeffs(b.big.clone(), |x| x);
                let ram = spectral::ramify(&embedded, b.e as i64, hs);
                acc = acc.add(&ram.mul(&gpow));
                gpow = gpow.mul(&b.gamma);
            }
            out.push(acc.val_exact());
        }
        Ok(out)
    }

    /// Minimum s_i-adic valuation of Λ on each branch, in branch order.
    /// A generator indistinguishable from zero on a branch contributes no
    /// minimum (it cannot push the minimum below the horizon).
    pub fn min_vals(&self, lat: &Lattice) -> Result<Vec<i64>> {
        let h = self.bmat.min_horizon();
        let gens = lat.basis_series(h);
        let mut mins = vec![i64::MAX; self.qb.len()];
        for g in &gens {
            for (i, v) in self.vector_vals(g)?.into_iter().enumerate() {
                if let Some(v) = v {
                    mins[i] = mins[i].min(v);
                }
            }
        }
        Ok(mins)
    }
}

/// Minimum valuation of Λ along each branch of the spectral curve of γ.
pub fn branch_min_vals(gamma: &SMat, lat: &Lattice) -> Result<Vec<i64>> {
    BranchValuator::new(gamma)?.min_vals(lat)
}

/// Transform a lattice by an invertible matrix: u·Λ as a lattice, with the
/// window widened by the spreads of u and u^{-1}.
pub fn apply_matrix(lat: &Lattice, u: &SMat) -> Result<Lattice> {
    let n = lat.rank();
    if u.rows() != n || u.cols() != n {
        return Err(Error::InvalidInput("matrix size does not match lattice rank".into()));
    }
    let field = lat.field().clone();
    let spread_of = |mat: &SMat| -> i64 {
        let mut s = 0i64;
        for i in 0..n {
            for j in 0..n {
                s = s.max(-mat.get(i, j).val_lower_bound());
            }
        }
        s.max(0)
    };
    let uinv = u.inverse()?;
    let s = spread_of(u).max(spread_of(&uinv));
    let w = lat.window() + s;
    let h = w + 2 * s + 8;
    let gens: Vec<Vec<Series>> = lat.basis_series(h).iter().map(|b| u.mul_vec(b)).collect();
    Lattice::canonicalize(&field, &gens, w)
}

/// Normalized representatives of lines of F_q^n (first nonzero coordinate 1),
/// in lexicographic order of the free coordinates.
fn projective_points(field: &FieldRef, n: usize) -> Vec<Vec<FqElem>> {
    let q = field.q();
    let mut out = Vec::new();
    for pivot in 0..n {
        let free = n - pivot - 1;
        let total = q.pow(free as u32);
        for code in 0..total {
            let mut v = vec![field.zero(); n];
            v[pivot] = field.one();
            let mut rem = code;
            for slot in 0..free {
                v[pivot + 1 + slot] = field.element(rem % q);
                rem /= q;
            }
            out.push(v);
        }
    }
    out
}

fn in_line(field: &FieldRef, v: &[FqElem], w: &[FqElem]) -> bool {
    // w ∈ span(v), with v ≠ 0 normalized so its first nonzero entry is 1.
    let pivot = v.iter().position(|&x| x != field.zero()).expect("nonzero line rep");
    let lambda = field.mul(w[pivot], field.inv(v[pivot]).expect("nonzero")); // v[pivot] = 1
    v.iter().zip(w).all(|(&vi, &wi)| wi == field.mul(lambda, vi))
}

fn stable_lines(g: &FqMat) -> Vec<Vec<FqElem>> {
    let field = g.field().clone();
    projective_points(&field, g.rows())
        .into_iter()
        .filter(|v| {
            let w = g.mul_vec(v);
            in_line(&field, v, &w)
        })
        .collect()
}

/// The γ-stable chains of lattices Λ_0 ⊂ Λ_1 ⊂ … ⊂ t^{-1}Λ_0 with
/// [Λ_i : O^n] = i (full flag type), for n ≤ 3: the Iwahori-level fiber.
///
/// Λ_0 ranges over the index-0 stable lattices of the window; the higher
/// members correspond to γ̄-stable flags in t^{-1}Λ_0 / Λ_0.
pub fn enumerate_iwahori(gamma: &SMat, window: i64, budget: &Budget) -> Result<Vec<LatticeChain>> {
    let n = gamma.rows();
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidInput("chain enumeration is implemented for n = 2, 3".into()));
    }
    let field = gamma.field().clone();
    let opts = AsfOptions::raw(window).with_index(0);
    let bases = enumerate_stable(gamma, &opts, budget)?;

    let mut chains: Vec<LatticeChain> = Vec::new();
    for lam0 in &bases {
        let top = lam0.scale_by_t_power(-1)?;
        let h = 4 * (window + 2) + gamma.min_horizon().min(32);
        let basis = top.basis_series(h);
        let bmat = SMat::from_rows(
            field.clone(),
            (0..n).map(|i| (0..n).map(|j| basis[j][i].clone()).collect()).collect(),
        )?;
        // γ̄ on T/tT, T = t^{-1}Λ_0 (note tT = Λ_0).
        let mut cols: Vec<Vec<FqElem>> = Vec::with_capacity(n);
        for b in &basis {
            let img = gamma.mul_vec(b);
            let x = bmat.solve(&img)?;
            cols.push(
                x.iter()
                    .map(|xi| xi.coeff_known(0).ok_or(Error::UncertainValuation(0)))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let gbar = FqMat::from_fn(field.clone(), n, n, |i, j| cols[j][i]);

        let lift = |v: &[FqElem]| -> Vec<Series> {
            let mut out = vec![Series::zero(field.clone(), h); n];
            for (j, &vj) in v.iter().enumerate() {
                if vj != field.zero() {
                    let scaled: Vec<Series> =
                        basis[j].iter().map(|s| s.scale(vj)).collect();
                    for (o, sc) in out.iter_mut().zip(&scaled) {
                        *o = o.add(sc);
                    }
                }
            }
            out
        };

        let base_gens = lam0.basis_series(h);
        let extend = |lifts: &[Vec<Series>], w: i64| -> Result<Lattice> {
            let mut gens = base_gens.clone();
            gens.extend_from_slice(lifts);
            Lattice::canonicalize(&field, &gens, w)
        };

        if n == 2 {
            for v in stable_lines(&gbar) {
                let lam1 = extend(&[lift(&v)], window + 1)?;
                let mut members = BTreeMap::new();
                members.insert(0, lam0.with_window(window + 1)?);
                members.insert(1, lam1);
                let chain = LatticeChain::new(members);
                if validate_chain(&chain) {
                    chains.push(chain);
                }
            }
        } else {
            // Full flags: stable lines V₁, stable planes V₂ = ker φ (φ a
            // stable line of γ̄ᵀ), with V₁ ⊂ V₂.
            let gbar_t = FqMat::from_fn(field.clone(), n, n, |i, j| gbar.get(j, i));
            let lines = stable_lines(&gbar);
            let duals = stable_lines(&gbar_t);
            for v in &lines {
                for phi in &duals {
                    let pairing = v
                        .iter()
                        .zip(phi)
                        .fold(field.zero(), |acc, (&a, &b)| field.add(acc, field.mul(a, b)));
                    if pairing != field.zero() {
                        continue;
                    }
                    let plane = FqMat::from_fn(field.clone(), 1, n, |_, j| phi[j]).kernel();
                    let lam1 = extend(&[lift(v)], window + 1)?;
                    let plane_lifts: Vec<Vec<Series>> =
                        plane.iter().map(|b| lift(b)).collect();
                    let lam2 = extend(&plane_lifts, window + 1)?;
                    let mut members = BTreeMap::new();
                    members.insert(0, lam0.with_window(window + 1)?);
                    members.insert(1, lam1);
                    members.insert(2, lam2);
                    let chain = LatticeChain::new(members);
                    if validate_chain(&chain) {
                        chains.push(chain);
                    }
                }
            }
        }
    }
    chains.sort_by(|a, b| {
        let ka: Vec<&Lattice> = a.members.values().collect();
        let kb: Vec<&Lattice> = b.members.values().collect();
        ka.cmp(&kb)
    });
    Ok(chains)
}

/// Count γ-stable lattices Λ ⊆ O² of colength d for γ the companion matrix
/// of x² − t^n, with the second coordinate required integral. Stability plus
/// the integrality of x₂ forces Λ ⊆ O², so this is exactly the number of
/// colength-d ideals of the curve germ y² = t^n (the d-th punctual Hilbert
/// scheme count).
pub fn constrained_count_gl2(
    n_exp: u32,
    d: usize,
    field: &FieldRef,
    budget: &Budget,
) -> Result<u64> {
    let window = (d as i64).max(1);
    let h = 2 * window + (n_exp as i64) + 8;
    let coeffs = vec![
        Series::monomial(field.clone(), field.one(), n_exp as i64, h).neg(),
        Series::zero(field.clone(), h),
        Series::one(field.clone(), h),
    ];
    let p = SPoly::new(field.clone(), coeffs, h);
    let gamma = SMat::companion(&p)?;
    let phi = vec![Series::zero(field.clone(), h), Series::one(field.clone(), h)];
    let opts = AsfOptions::raw(window).with_index(-(d as i64)).with_integral_functional(phi);
    Ok(enumerate_stable(&gamma, &opts, budget)?.len() as u64)
}

/// The 𝔾_m-fixed self-dual stable lattices for γ = [[0, tX], [Y, 0]] in
/// sp₄, where X, Y are symmetric invertible 2×2 matrices over F_q with XY
/// regular semisimple.
///
/// With V = U ⊕ U* and the weight grading (U t^i ↦ 2i−1, U* t^i ↦ 2i), a
/// fixed lattice is ⊕_i (A_i ⊕ B_i) t^i with A_i ⊆ U, B_i ⊆ U* increasing,
/// self-duality forcing B_{−i−1} = A_i^⊥, and stability reducing to: either
/// the standard lattice, or A_0 = L a line with L^⊥ isotropic for the
/// quadratic form of X. The count is therefore 1 plus the number of
/// X-isotropic lines in U*.
pub fn sp4_torus_fixed(x: &FqMat, y: &FqMat) -> Result<Vec<Lattice>> {
    let field = x.field().clone();
    if field.p() == 2 {
        return Err(Error::InvalidInput("sp₄ fixed points are implemented for odd q".into()));
    }
    for (name, m) in [("X", x), ("Y", y)] {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(Error::InvalidInput(format!("{name} must be 2×2")));
        }
        if m.get(0, 1) != m.get(1, 0) {
            return Err(Error::InvalidInput(format!("{name} must be symmetric")));
        }
        if m.inverse().is_none() {
            return Err(Error::InvalidInput(format!("{name} must be invertible")));
        }
    }
    // XY regular semisimple: separable characteristic polynomial, nonzero
    // determinant (the latter holds since X, Y are invertible).
    let prod = FqMat::from_fn(field.clone(), 2, 2, |i, j| {
        let mut acc = field.zero();
        for k in 0..2 {
            acc = field.add(acc, field.mul(x.get(i, k), y.get(k, j)));
        }
        acc
    });
    let tr = field.add(prod.get(0, 0), prod.get(1, 1));
    let det = field.sub(
        field.mul(prod.get(0, 0), prod.get(1, 1)),
        field.mul(prod.get(0, 1), prod.get(1, 0)),
    );
    let char_fq = crate::fqpoly::FqPoly::new(
        field.clone(),
        vec![det, field.neg(tr), field.one()],
    );
    if !char_fq.is_squarefree() {
        return Err(Error::NotRegularSemisimple);
    }

    let h = 12i64;
    let window = 2i64;
    let zero = || Series::zero(field.clone(), h);
    let cst = |c: FqElem| Series::constant(field.clone(), c, h);
    let mono = |c: FqElem, e: i64| Series::monomial(field.clone(), c, e, h);

    let mut out = vec![Lattice::standard(field.clone(), 4, window)];

    for w in projective_points(&field, 2) {
        // Quadratic form of X at w.
        let xw = x.mul_vec(&w);
        let q_val = field.add(field.mul(w[0], xw[0]), field.mul(w[1], xw[1]));
        if q_val != field.zero() {
            continue;
        }
        // L = ker(w) ⊂ U, spanned by v = (w₂, −w₁); L^⊥ = span(w) ⊂ U*.
        let v = [w[1], field.neg(w[0])];
        let gens: Vec<Vec<Series>> = vec![
            vec![cst(v[0]), cst(v[1]), zero(), zero()],
            vec![zero(), zero(), mono(w[0], -1), mono(w[1], -1)],
            vec![mono(field.one(), 1), zero(), zero(), zero()],
            vec![zero(), mono(field.one(), 1), zero(), zero()],
            vec![zero(), zero(), cst(field.one()), zero()],
            vec![zero(), zero(), zero(), cst(field.one())],
        ];
        out.push(Lattice::canonicalize(&field, &gens, window)?);
    }
    out.sort();
    Ok(out)
}

/// The γ matrix of the sp₄ example: [[0, tX], [Y, 0]] with horizon h.
pub fn sp4_gamma(x: &FqMat, y: &FqMat, h: i64) -> Result<SMat> {
    let field = x.field().clone();
    if x.rows() != 2 || y.rows() != 2 || x.cols() != 2 || y.cols() != 2 {
        return Err(Error::InvalidInput("X and Y must be 2×2".into()));
    }
    Ok(SMat::from_fn(field.clone(), 4, 4, h, |i, j| match (i < 2, j < 2) {
        (true, false) => Series::monomial(field.clone(), x.get(i, j - 2), 1, h),
        (false, true) => Series::constant(field.clone(), y.get(i - 2, j), h),
        _ => Series::zero(field.clone(), h),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::Fq;

    fn fq(p: u64, k: usize) -> FieldRef {
        Fq::new(p, k).unwrap()
    }

    fn sp(f: &FieldRef, coeffs: &[&str], h: i64) -> SPoly {
        let cs = coeffs.iter().map(|s| Series::parse(f.clone(), s, h).unwrap()).collect();
        SPoly::new(f.clone(), cs, h)
    }

    fn diag_units(f: &FieldRef, us: &[u128], h: i64) -> SMat {
        SMat::from_fn(f.clone(), us.len(), us.len(), h, |i, j| {
            if i == j {
                Series::constant(f.clone(), f.element(us[i]), h)
            } else {
                Series::zero(f.clone(), h)
            }
        })
    }

    fn budget() -> Budget {
        Budget::standard()
    }

    #[test]
    fn split_torus_window_one() {
        // γ = diag(1, 2) over F₅: stable lattices are sums of eigenlattices
        // t^a O ⊕ t^b O; window 1 allows a, b ∈ {−1, 0, 1}.
        let f = fq(5, 1);
        let g = diag_units(&f, &[1, 2], 12);
        let all = enumerate_stable(&g, &AsfOptions::raw(1), &budget()).unwrap();
        assert_eq!(all.len(), 9);
        for lat in &all {
            assert!(lat.is_stable(&g).unwrap());
        }
        // Index cut: a + b = 0 leaves three.
        let ind0 = enumerate_stable(&g, &AsfOptions::raw(1).with_index(0), &budget()).unwrap();
        assert_eq!(ind0.len(), 3);
        assert!(ind0.iter().all(|l| l.index() == 0));
        // Normalized: the unique class is O² itself.
        assert_eq!(count_points(&g, &AsfOptions::normalized(1), &budget()).unwrap(), 1);
    }

    #[test]
    fn non_semisimple_is_rejected() {
        // Normalization needs the branch structure, so a repeated spectrum
        // is refused there; the raw window enumeration still works (γ = 2I
        // fixes every lattice).
        let f = fq(3, 1);
        let g = diag_units(&f, &[2, 2], 12);
        let err = enumerate_stable(&g, &AsfOptions::normalized(1), &budget()).unwrap_err();
        assert!(matches!(err, Error::NotRegularSemisimple), "{err:?}");
        let err = count_points(&g, &AsfOptions::normalized(1), &budget()).unwrap_err();
        assert!(matches!(err, Error::NotRegularSemisimple), "{err:?}");
    }

    #[test]
    fn cusp_normalized_count_and_representatives() {
        // χ = x² − t³ (δ = 1): Q = Ã/𝔠 is 2-dimensional with trivial t, γ
        // action; classes are the full module plus the q lines meeting the
        // degree-0 slot, so the count is q + 1.
        for (p, expect) in [(3u64, 4u64), (5, 6)] {
            let f = fq(p, 1);
            let cp = sp(&f, &["-t^3", "0", "1"], 24);
            assert_eq!(count_normalized(&cp, &budget()).unwrap(), expect, "q = {p}");

            let g = SMat::companion(&cp).unwrap();
            let lats = enumerate_stable(&g, &AsfOptions::normalized(3), &budget()).unwrap();
            assert_eq!(lats.len(), expect as usize, "window enumeration at q = {p}");
            for lat in &lats {
                assert!(lat.is_stable(&g).unwrap());
                assert_eq!(branch_min_vals(&g, lat).unwrap(), vec![0]);
            }
        }
    }

    #[test]
    fn quotient_dims_profile() {
        let f = fq(3, 1);
        // Inert quadratic x² − 2t²: classes are the full 2-dim module and
        // the q + 1 lines of the residue quadratic extension.
        let inert = sp(&f, &["-2*t^2", "0", "1"], 24);
        let nc = normalized_classes(&inert, &budget()).unwrap();
        assert_eq!(nc.two_delta, 2);
        let mut dims = nc.dims.clone();
        dims.sort();
        assert_eq!(dims, vec![1, 1, 1, 1, 2]);

        // Node x² − t²: both degree-0 slots must be met, killing two of the
        // q + 1 lines: q classes.
        let node = sp(&f, &["-t^2", "0", "1"], 24);
        let nc = normalized_classes(&node, &budget()).unwrap();
        assert_eq!(nc.two_delta, 2);
        let mut dims = nc.dims.clone();
        dims.sort();
        assert_eq!(dims, vec![1, 1, 2]);

        // Split units: δ = 0, a single class.
        let split = sp(&f, &["2", "0", "1"], 24);
        let nc = normalized_classes(&split, &budget()).unwrap();
        assert_eq!(nc.two_delta, 0);
        assert_eq!(nc.dims, vec![0]);

        // gl₁.
        let one_dim = sp(&f, &["-t^2", "1"], 24);
        assert_eq!(count_normalized(&one_dim, &budget()).unwrap(), 1);
    }

    #[test]
    fn engines_agree_on_the_tacnode_curve() {
        // x³ − t² over F₂ (e = 3 is tame): both engines give q + 1 = 3.
        let f = fq(2, 1);
        let cp = sp(&f, &["-t^2", "0", "0", "1"], 40);
        assert_eq!(count_normalized(&cp, &budget()).unwrap(), 3);
        let g = SMat::companion(&cp).unwrap();
        let lats = enumerate_stable(&g, &AsfOptions::normalized(4), &budget()).unwrap();
        assert_eq!(lats.len(), 3);
    }

    #[test]
    fn laurent_spread_path_matches_integral_conjugate() {
        // γ = [[0, t^{-1}], [t⁴, 0]] has char x² − t³ but a pole; the
        // extended-frame path must agree with the companion count.
        let f = fq(3, 1);
        let h = 24;
        let g = SMat::from_rows(
            f.clone(),
            vec![
                vec![
                    Series::zero(f.clone(), h),
                    Series::monomial(f.clone(), f.one(), -1, h),
                ],
                vec![
                    Series::monomial(f.clone(), f.one(), 4, h),
                    Series::zero(f.clone(), h),
                ],
            ],
        )
        .unwrap();
        let lats = enumerate_stable(&g, &AsfOptions::normalized(3), &budget()).unwrap();
        assert_eq!(lats.len(), 4);
        for lat in &lats {
            assert!(lat.is_stable(&g).unwrap());
        }
    }

    #[test]
    fn raw_enumeration_includes_shifts_normalization_removes_them() {
        let f = fq(3, 1);
        let cp = sp(&f, &["-t^3", "0", "1"], 24);
        let g = SMat::companion(&cp).unwrap();
        let raw = enumerate_stable(&g, &AsfOptions::raw(3), &budget()).unwrap();
        let norm = enumerate_stable(&g, &AsfOptions::normalized(3), &budget()).unwrap();
        assert_eq!(norm.len(), 4);
        assert!(raw.len() > norm.len(), "raw {} vs normalized {}", raw.len(), norm.len());
        // Every normalized lattice appears in the raw list.
        for lat in &norm {
            assert!(raw.iter().any(|r| r.same_module(lat).unwrap()));
        }
    }

    #[test]
    fn constrained_counts_match_hand_enumeration() {
        // Colength-d stable ideals of the cusp y² = t³: 1, 1, q+1 for
        // d = 0, 1, 2 (the colength-2 family is the projective line of pairs
        // span{d, αb + βc} computed in the module docs).
        let f3 = fq(3, 1);
        let f2 = fq(2, 1);
        assert_eq!(constrained_count_gl2(3, 0, &f3, &budget()).unwrap(), 1);
        assert_eq!(constrained_count_gl2(3, 1, &f3, &budget()).unwrap(), 1);
        assert_eq!(constrained_count_gl2(3, 2, &f3, &budget()).unwrap(), 4);
        assert_eq!(constrained_count_gl2(3, 2, &f2, &budget()).unwrap(), 3);
        // Smooth germ y² = t: the local ring is a DVR, one ideal per
        // colength.
        for d in 0..4 {
            assert_eq!(constrained_count_gl2(1, d, &f3, &budget()).unwrap(), 1, "d = {d}");
        }
    }

    #[test]
    fn interpolation_recovers_the_cusp_polynomial() {
        let mut samples = Vec::new();
        for p in [3u64, 5, 7] {
            let f = fq(p, 1);
            let cp = sp(&f, &["-t^3", "0", "1"], 24);
            samples.push((p, count_normalized(&cp, &budget()).unwrap()));
        }
        let poly = interpolate_counts(&samples, 1).unwrap();
        assert_eq!(poly.coeffs, vec![1, 1]);
        // Degree equals the dimension from the local invariants.
        let f = fq(3, 1);
        let cp = sp(&f, &["-t^3", "0", "1"], 24);
        let dim = spectral::dim_formula(&cp, spectral::Group::GlN).unwrap();
        assert_eq!(poly.degree() as i64, dim);
    }

    #[test]
    fn iwahori_cusp_counts() {
        // sl₂ cusp: the chain fiber has 2q + 1 points — q from the
        // valuation-zero Λ₀ (each with a single γ̄-stable line) and q + 1
        // from the shifted normalization lattice (γ̄ = 0 there).
        for (p, expect) in [(3u64, 7usize), (5, 11)] {
            let f = fq(p, 1);
            let cp = sp(&f, &["-t^3", "0", "1"], 24);
            let g = SMat::companion(&cp).unwrap();
            let chains = enumerate_iwahori(&g, 3, &budget()).unwrap();
            assert_eq!(chains.len(), expect, "q = {p}");
            for ch in &chains {
                assert!(validate_chain(ch));
            }
        }
    }

    #[test]
    fn iwahori_gl3_tacnode() {
        // x³ − t² over F₂: 3q + 1 = 7 full-flag chains.
        let f = fq(2, 1);
        let cp = sp(&f, &["-t^2", "0", "0", "1"], 40);
        let g = SMat::companion(&cp).unwrap();
        let chains = enumerate_iwahori(&g, 4, &budget()).unwrap();
        assert_eq!(chains.len(), 7);
        for ch in &chains {
            assert!(validate_chain(ch));
        }
    }

    #[test]
    fn iwahori_split_torus() {
        // diag(1, 2) over F₃, window 1: three index-0 diagonal lattices,
        // two eigenlines each.
        let f = fq(3, 1);
        let g = diag_units(&f, &[1, 2], 12);
        let chains = enumerate_iwahori(&g, 1, &budget()).unwrap();
        assert_eq!(chains.len(), 6);
        for ch in &chains {
            assert!(validate_chain(ch));
        }
    }

    #[test]
    fn sp4_fixed_points() {
        // X = [[0,1],[1,0]] (split form, two isotropic lines), Y = diag(1,2):
        // three 𝔾_m-fixed self-dual stable lattices.
        let f = fq(3, 1);
        let x = FqMat::from_rows(f.clone(), &[
            vec![f.zero(), f.one()],
            vec![f.one(), f.zero()],
        ]);
        let y = FqMat::from_rows(f.clone(), &[
            vec![f.one(), f.zero()],
            vec![f.zero(), f.element(2)],
        ]);
        let fixed = sp4_torus_fixed(&x, &y).unwrap();
        assert_eq!(fixed.len(), 3);

        let g = sp4_gamma(&x, &y, 24).unwrap();
        // γ ∈ sp₄ for the standard form J.
        let j = SMat::symplectic_form(f.clone(), 4, 24).unwrap();
        let gt_j = g.transpose().mul(&j);
        let j_g = j.mul(&g);
        let sum = gt_j.add(&j_g);
        for i in 0..4 {
            for jj in 0..4 {
                assert!(sum.get(i, jj).is_zero_to_precision());
            }
        }
        for lat in &fixed {
            assert!(lat.is_stable(&g).unwrap());
            let dual = lat.symplectic_dual(&j).unwrap();
            assert!(dual.same_module(lat).unwrap(), "self-duality");
        }
        // The standard lattice is among them.
        let std = Lattice::standard(f.clone(), 4, 2);
        assert!(fixed.iter().any(|l| l.same_module(&std).unwrap()));
    }

    #[test]
    fn sp4_fixed_points_match_brute_force() {
        // Independent check: enumerate all stable lattices in window 1,
        // filter to self-dual graded ones, and compare as sets.
        let f = fq(3, 1);
        let x = FqMat::from_rows(f.clone(), &[
            vec![f.zero(), f.one()],
            vec![f.one(), f.zero()],
        ]);
        let y = FqMat::from_rows(f.clone(), &[
            vec![f.one(), f.zero()],
            vec![f.zero(), f.element(2)],
        ]);
        let g = sp4_gamma(&x, &y, 24).unwrap();
        let j = SMat::symplectic_form(f.clone(), 4, 24).unwrap();

        let all = enumerate_stable(&g, &AsfOptions::raw(1), &budget()).unwrap();
        let mut survivors = Vec::new();
        'outer: for lat in &all {
            let dual = lat.symplectic_dual(&j).unwrap();
            if !dual.same_module(lat).unwrap() {
                continue;
            }
            // Graded: the lattice is spanned by its weight-space sections.
            // Weight spaces are span(t^i ê_{c}, t^i ê_{c'}) for the pairs
            // (0,1) = U t^i and (2,3) = U* t^i.
            let h = 12;
            let mut gens: Vec<Vec<Series>> = Vec::new();
            for i in -2..=2i64 {
                for (c0, c1) in [(0usize, 1usize), (2, 3)] {
                    for a in 0..f.q() {
                        for b in 0..f.q() {
                            if a == 0 && b == 0 {
                                continue;
                            }
                            let mut v = vec![Series::zero(f.clone(), h); 4];
                            v[c0] = Series::monomial(f.clone(), f.element(a), i, h);
                            v[c1] = Series::monomial(f.clone(), f.element(b), i, h);
                            if lat.contains_vector(&v).unwrap() {
                                gens.push(v);
                            }
                        }
                    }
                }
            }
            if gens.len() < 4 {
                continue;
            }
            let graded = match Lattice::canonicalize(&f, &gens, lat.window()) {
                Ok(l) => l,
                Err(_) => continue 'outer,
            };
            if graded.same_module(lat).unwrap() {
                survivors.push(lat.clone());
            }
        }
        let fixed = sp4_torus_fixed(&x, &y).unwrap();
        assert_eq!(survivors.len(), fixed.len());
        for lat in &fixed {
            assert!(survivors.iter().any(|s| s.same_module(lat).unwrap()));
        }
    }

    #[test]
    fn uniformizers_act_freely_on_the_fiber() {
        // The uniformizer u of the local field F[x]/(x² − t³) has valuation
        // one on the branch, so u·Λ is never Λ and shifts the index by one.
        let f = fq(3, 1);
        let cp = sp(&f, &["-t^3", "0", "1"], 24);
        let g = SMat::companion(&cp).unwrap();
        let sd = spectral::spectral_data(&cp, 24).unwrap();
        let u = &sd.uniformizers[0];
        let lats = enumerate_stable(&g, &AsfOptions::normalized(3), &budget()).unwrap();
        for lat in lats.iter().take(4) {
            let moved = apply_matrix(lat, u).unwrap();
            assert!(!moved.same_module(lat).unwrap(), "uniformizer fixes a lattice");
            // val det u = 1, so [Λ : uΛ] = 1: the index drops by one.
            assert_eq!(moved.index(), lat.index() - 1);
            assert!(moved.is_stable(&g).unwrap());
        }
    }

    #[test]
    fn branch_valuations_of_named_lattices() {
        let f = fq(3, 1);
        let cp = sp(&f, &["-t^3", "0", "1"], 24);
        let g = SMat::companion(&cp).unwrap();
        // O² has an element of valuation 0 on the single branch.
        let std = Lattice::standard(f.clone(), 2, 3);
        assert_eq!(branch_min_vals(&g, &std).unwrap(), vec![0]);
        // t·O²: everything gained s-valuation 2 (t = s²).
        let shifted = std.scale_by_t_power(1).unwrap();
        assert_eq!(branch_min_vals(&g, &shifted).unwrap(), vec![2]);

        // Node: two branches, standard lattice meets both at 0.
        let node = sp(&f, &["-t^2", "0", "1"], 24);
        let gn = SMat::companion(&node).unwrap();
        let std = Lattice::standard(f.clone(), 2, 2);
        assert_eq!(branch_min_vals(&gn, &std).unwrap(), vec![0, 0]);
    }
}
