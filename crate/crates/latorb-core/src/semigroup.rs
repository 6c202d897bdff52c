//! Numerical-semigroup combinatorics of homogeneous singularities.
//!
//! For coprime (m, n) the ring R = k[[s^m, s^n]] is the local ring of the
//! plane curve x^m = t^n (t = s^m, x = s^n).  Torus-fixed stable lattices
//! for the associated homogeneous γ are exactly the monomial fractional
//! R-ideals, and those are determined by their exponent sets: subsets
//! M ⊂ Z closed under adding m and n, i.e. modules over the numerical
//! semigroup A = Z_{≥0}m + Z_{≥0}n.  This module enumerates them, their
//! chain variants (fixed points in partial affine flag varieties), counts
//! them by the cyclic binomial formula, and recovers Poincaré polynomials
//! of the corresponding fibers by interpolation of exact point counts.

use std::collections::BTreeSet;

use crate::countpoly::{self, CountPolynomial};
use crate::error::{Error, Result};
use crate::fq::{FieldRef, Fq};
use crate::lattice::Lattice;
use crate::matrix::SMat;
use crate::poly::SPoly;
use crate::series::Series;
use crate::subspace::Budget;
use crate::asf;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// The numerical semigroup A = Z_{≥0}m + Z_{≥0}n for coprime generators.
#[derive(Clone, Debug)]
pub struct NumericalSemigroup {
    pub m: u32,
    pub n: u32,
    /// Elements of Z_{≥0} not in A, sorted increasing.
    pub gaps: Vec<i64>,
    /// Largest gap, mn − m − n (−1 when the semigroup is all of Z_{≥0}).
    pub frobenius: i64,
    /// Number of gaps, (m−1)(n−1)/2.
    pub delta: usize,
}

impl NumericalSemigroup {
    /// Membership horizon: every A-module with minimum 0 is determined on
    /// [0, frobenius]; the extra mn guards every off-by-one downstream.
    fn span(&self) -> usize {
        (self.frobenius + (self.m as i64) * (self.n as i64) + 1) as usize
    }

    fn contains(&self, e: i64) -> bool {
        if e < 0 {
            return false;
        }
        if e > self.frobenius {
            return true;
        }
        !self.gaps.contains(&e)
    }
}

/// Build the semigroup, checking coprimality.
pub fn semigroup(m: u32, n: u32) -> Result<NumericalSemigroup> {
    if m == 0 || n == 0 || gcd(m, n) != 1 {
        return Err(Error::NotCoprime(m as u64, n as u64));
    }
    let frobenius = (m as i64) * (n as i64) - (m as i64) - (n as i64);
    let top = (frobenius + (m as i64) * (n as i64) + 1).max(1) as usize;
    let mut reach = vec![false; top];
    reach[0] = true;
    for e in 0..top {
        if reach[e] {
            if e + (m as usize) < top {
                reach[e + m as usize] = true;
            }
            if e + (n as usize) < top {
                reach[e + n as usize] = true;
            }
        }
    }
    let gaps: Vec<i64> = (0..=frobenius.max(0))
        .filter(|&e| frobenius >= 0 && !reach[e as usize])
        .collect();
    let delta = gaps.len();
    debug_assert_eq!(delta as i64 * 2, (m as i64 - 1) * (n as i64 - 1));
    Ok(NumericalSemigroup { m, n, gaps, frobenius, delta })
}

/// A finitely generated A_{m,n}-submodule of Z.
///
/// Membership of min + k is bit k of `mask` for k < len; every integer at
/// least min + len belongs to the module (they are cofinite), and nothing
/// below min does.  `index` is [M : Z_{≥0}] = #(M∖Z_{≥0}) − #(Z_{≥0}∖M).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SemigroupModule {
    pub min: i64,
    pub mask: u128,
    pub len: usize,
    pub index: i64,
}

impl SemigroupModule {
    pub fn contains(&self, e: i64) -> bool {
        if e < self.min {
            return false;
        }
        let k = (e - self.min) as usize;
        if k >= self.len {
            return true;
        }
        self.mask >> k & 1 == 1
    }

    /// The first `count` elements, in increasing order.
    pub fn first_elements(&self, count: usize) -> Vec<i64> {
        let mut out = Vec::with_capacity(count);
        let mut e = self.min;
        while out.len() < count {
            if self.contains(e) {
                out.push(e);
            }
            e += 1;
        }
        out
    }

    /// Containment of whole modules (other ⊆ self), decided on the union of
    /// the two membership windows — beyond both, everything is a member.
    pub fn contains_module(&self, other: &SemigroupModule) -> bool {
        let lo = other.min;
        let hi = (self.min + self.len as i64).max(other.min + other.len as i64);
        (lo..hi).all(|e| !other.contains(e) || self.contains(e))
    }

    /// The module M + a (every element shifted up by a).
    pub fn shift(&self, a: i64) -> SemigroupModule {
        SemigroupModule { min: self.min + a, mask: self.mask, len: self.len, index: self.index - a }
    }

    fn from_membership(min: i64, len: usize, member: impl Fn(i64) -> bool) -> SemigroupModule {
        let mut mask = 0u128;
        for k in 0..len {
            if member(min + k as i64) {
                mask |= 1 << k;
            }
        }
        // [M : Z_{≥0}]: negatives present minus non-negatives missing.
        let mut index = 0i64;
        let mut e = min;
        while e < min + len as i64 {
            let inside = mask >> (e - min) & 1 == 1;
            if e < 0 && inside {
                index += 1;
            }
            if e >= 0 && !inside {
                index -= 1;
            }
            e += 1;
        }
        // Below min nothing, at or above min+len everything: no further
        // corrections as long as len covers [min, 0) on the negative side.
        index -= (-(min + len as i64)).max(0); // missing non-negatives above window
        SemigroupModule { min, mask, len, index }
    }

    /// Render as the paper's sequence notation, e.g. "(-1, 1, 2, ...)".
    pub fn render(&self) -> String {
        let els = self.first_elements(3);
        format!("({}, {}, {}, ...)", els[0], els[1], els[2])
    }
}

/// Which modules to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuleMode {
    /// Modules with minimum 0.
    Normalized,
    /// Modules with [M : Z_{≥0}] equal to the given index.
    FixedIndex(i64),
}

/// All A_{m,n}-submodules of Z in the requested normalization, complete and
/// duplicate-free.  A module with minimum 0 is A ∪ T for a subset T of the
/// gaps that is itself closed under +m, +n into A ∪ T; every module is a
/// unique shift of a normalized one, so fixed-index enumeration shifts each
/// normalized module to the requested index.
pub fn enumerate_modules(m: u32, n: u32, mode: ModuleMode) -> Result<Vec<SemigroupModule>> {
    let sg = semigroup(m, n)?;
    if sg.delta > 26 {
        return Err(Error::SearchBudgetExceeded(1u64 << sg.delta.min(63)));
    }
    let len = sg.span();
    let mut out = Vec::new();
    for t_bits in 0u32..1 << sg.delta {
        let t_set: BTreeSet<i64> = sg
            .gaps
            .iter()
            .enumerate()
            .filter(|(i, _)| t_bits >> i & 1 == 1)
            .map(|(_, &g)| g)
            .collect();
        let member = |e: i64| sg.contains(e) || t_set.contains(&e);
        if !t_set.iter().all(|&t| member(t + m as i64) && member(t + n as i64)) {
            continue;
        }
        let module = SemigroupModule::from_membership(0, len, member);
        out.push(match mode {
            ModuleMode::Normalized => module,
            ModuleMode::FixedIndex(i) => module.shift(module.index - i),
        });
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Number of A_{m,n}-modules of any fixed index: C(m+n, n)/(m+n).
pub fn fixed_count_formula(m: u32, n: u32) -> Result<u64> {
    semigroup(m, n)?;
    let (mm, nn) = (m as u128, n as u128);
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 1..=nn {
        num *= mm + nn - i + 1;
        den *= i;
        let g = u128_gcd(num, den);
        num /= g;
        den /= g;
    }
    debug_assert_eq!(den, 1);
    Ok((num / den / (mm + nn)) as u64)
}

fn u128_gcd(a: u128, b: u128) -> u128 {
    if b == 0 { a } else { u128_gcd(b, a % b) }
}

/// Torus-fixed points of the partial affine flag fiber of type J for the
/// homogeneous class with semigroup A_{m,n}: chains of A-modules indexed by
/// J ⊆ {0, …, m−1} with [M_j : Z_{≥0}] = j, increasing along J, and wrapping
/// into M_min − m (division by t = s^m).  For J = {j} this is the fixed-index
/// module set; for full J on (3,2) it recovers the four chains of the flag
/// component.
pub fn enumerate_chain_fixed_points(
    m: u32,
    n: u32,
    j_set: &BTreeSet<u32>,
) -> Result<Vec<Vec<SemigroupModule>>> {
    semigroup(m, n)?;
    if j_set.is_empty() {
        return Err(Error::InvalidInput("the type J must be a nonempty subset".into()));
    }
    if j_set.iter().any(|&j| j >= m) {
        return Err(Error::InvalidInput(format!(
            "type entries must lie in Z/{m}Z"
        )));
    }
    let positions: Vec<i64> = j_set.iter().map(|&j| j as i64).collect();
    let candidates: Vec<Vec<SemigroupModule>> = positions
        .iter()
        .map(|&j| enumerate_modules(m, n, ModuleMode::FixedIndex(j)))
        .collect::<Result<Vec<_>>>()?;

    let mut chains = Vec::new();
    let mut partial: Vec<SemigroupModule> = Vec::new();
    fn dfs(
        level: usize,
        candidates: &[Vec<SemigroupModule>],
        partial: &mut Vec<SemigroupModule>,
        wrap: i64,
        chains: &mut Vec<Vec<SemigroupModule>>,
    ) {
        if level == candidates.len() {
            // Wrap condition: the top of the chain must land inside
            // t^{-1}·(bottom), i.e. M_top ⊆ M_bottom − m.
            let bottom = partial[0].shift(-wrap);
            if bottom.contains_module(partial.last().unwrap()) {
                chains.push(partial.clone());
            }
            return;
        }
        for cand in &candidates[level] {
            if level > 0 && !cand.contains_module(&partial[level - 1]) {
                continue;
            }
            partial.push(cand.clone());
            dfs(level + 1, candidates, partial, wrap, chains);
            partial.pop();
        }
    }
    dfs(0, &candidates, &mut partial, m as i64, &mut chains);
    chains.sort();
    Ok(chains)
}

fn field_for_q(q: u64) -> Result<FieldRef> {
    let mut p = 2u64;
    while p * p <= q {
        if q % p == 0 {
            let mut k = 0usize;
            let mut rest = q;
            while rest % p == 0 {
                rest /= p;
                k += 1;
            }
            if rest != 1 {
                return Err(Error::InvalidInput(format!("{q} is not a prime power")));
            }
            return Fq::new(p, k);
        }
        p += 1;
    }
    Fq::new(q, 1)
}

/// Poincaré polynomial (in the point-count variable q) of the index-0
/// normalized component for the homogeneous class x^n = t^m, by exact
/// counting at each sampled q and interpolation.  The cell stratification
/// by torus-fixed points guarantees a polynomial of degree δ whose value at
/// q → 1 is the number of fixed points of one index.
pub fn poincare_by_interpolation(
    m: u32,
    n: u32,
    q_list: &[u64],
    budget: &Budget,
) -> Result<CountPolynomial> {
    let sg = semigroup(m, n)?;
    if q_list.len() <= sg.delta {
        return Err(Error::InvalidInput(format!(
            "need more than {} sample fields for degree {}",
            sg.delta, sg.delta
        )));
    }
    let h = 4 * (m as i64) * (n as i64) + 10;
    let mut samples = Vec::with_capacity(q_list.len());
    for &q in q_list {
        let field = field_for_q(q)?;
        let mut coeffs = vec![Series::zero(field.clone(), h); n as usize + 1];
        coeffs[0] = Series::monomial(field.clone(), field.one(), m as i64, h).neg();
        coeffs[n as usize] = Series::one(field.clone(), h);
        let cp = SPoly::new(field.clone(), coeffs, h);
        let count = asf::count_normalized(&cp, budget)?;
        samples.push((q, count));
    }
    let poly = countpoly::interpolate(&samples, sg.delta)?;
    if poly.degree() != sg.delta {
        return Err(Error::InterpolationMismatch(format!(
            "count polynomial has degree {}, cell theory demands {}",
            poly.degree(),
            sg.delta
        )));
    }
    let fixed = fixed_count_formula(m, n)? as i128;
    if poly.eval(1) != fixed {
        return Err(Error::InterpolationMismatch(format!(
            "value {} at q=1 differs from the fixed-point count {}",
            poly.eval(1),
            fixed
        )));
    }
    Ok(poly)
}

/// Multiplication by s^n on K = k((s)) in the F-basis (1, s, …, s^{m−1}),
/// t = s^m: the standard homogeneous matrix, with characteristic polynomial
/// x^m − t^n.  Monomial lattices for this matrix are exactly the semigroup
/// modules.
pub fn ls_matrix(field: &FieldRef, m: u32, n: u32, horizon: i64) -> Result<SMat> {
    semigroup(m, n)?;
    let md = m as i64;
    Ok(SMat::from_fn(field.clone(), m as usize, m as usize, horizon, |i, j| {
        let target = n as i64 + j as i64;
        if (target - i as i64).rem_euclid(md) == 0 {
            Series::monomial(field.clone(), field.one(), (target - i as i64) / md, horizon)
        } else {
            Series::zero(field.clone(), horizon)
        }
    }))
}

/// The lattice ⊕_r t^{c_r}·O·ê_r corresponding to a semigroup module under
/// ê_r ↔ s^r, t = s^m: c_r m + r is the least element of M congruent to r
/// mod m.  Its index equals [M : Z_{≥0}] and it is stable under ls_matrix.
pub fn module_to_lattice(
    field: &FieldRef,
    m: u32,
    module: &SemigroupModule,
    window: i64,
) -> Result<Lattice> {
    let md = m as i64;
    let h = window + 2;
    let mut gens = Vec::with_capacity(m as usize);
    for r in 0..md {
        let mut e = module.min;
        while e.rem_euclid(md) != r || !module.contains(e) {
            e += 1;
        }
        let c = (e - r) / md;
        let gen: Vec<Series> = (0..md)
            .map(|i| {
                if i == r {
                    Series::monomial(field.clone(), field.one(), c, h)
                } else {
                    Series::zero(field.clone(), h)
                }
            })
            .collect();
        gens.push(gen);
    }
    Lattice::canonicalize(field, &gens, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{self, LatticeChain};
    use std::collections::BTreeMap;

    #[test]
    fn semigroup_gap_data() {
        let sg = semigroup(2, 3).unwrap();
        assert_eq!((sg.frobenius, sg.delta), (1, 1));
        assert_eq!(sg.gaps, vec![1]);
        let sg = semigroup(3, 4).unwrap();
        assert_eq!((sg.frobenius, sg.delta), (5, 3));
        assert_eq!(sg.gaps, vec![1, 2, 5]);
        let sg = semigroup(4, 5).unwrap();
        assert_eq!((sg.frobenius, sg.delta), (11, 6));
        assert_eq!(sg.gaps, vec![1, 2, 3, 6, 7, 11]);
        let sg = semigroup(1, 5).unwrap();
        assert_eq!((sg.frobenius, sg.delta), (-1, 0));
        assert!(sg.gaps.is_empty());
        assert!(matches!(semigroup(2, 4), Err(Error::NotCoprime(2, 4))));
        assert!(matches!(semigroup(0, 5), Err(Error::NotCoprime(0, 5))));
    }

    #[test]
    fn normalized_counts_match_the_cyclic_binomial() {
        for (m, n, expect) in [(2, 3, 2), (2, 5, 3), (3, 4, 5), (3, 5, 7), (4, 5, 14), (1, 7, 1)] {
            assert_eq!(fixed_count_formula(m, n).unwrap(), expect, "formula ({m},{n})");
            let mods = enumerate_modules(m, n, ModuleMode::Normalized).unwrap();
            assert_eq!(mods.len() as u64, expect, "enumeration ({m},{n})");
        }
        // The two (2,3) modules are Z_{≥0} and the semigroup itself.
        let mods = enumerate_modules(2, 3, ModuleMode::Normalized).unwrap();
        let seqs: Vec<Vec<i64>> = mods.iter().map(|m| m.first_elements(4)).collect();
        assert!(seqs.contains(&vec![0, 1, 2, 3]));
        assert!(seqs.contains(&vec![0, 2, 3, 4]));
    }

    #[test]
    fn fixed_index_enumeration_is_index_independent_and_closed() {
        for m in 1..=5u32 {
            for n in (m + 1)..=(12 - m) {
                if super::gcd(m, n) != 1 {
                    continue;
                }
                let expect = fixed_count_formula(m, n).unwrap() as usize;
                for i in -3..=3i64 {
                    let mods = enumerate_modules(m, n, ModuleMode::FixedIndex(i)).unwrap();
                    assert_eq!(mods.len(), expect, "({m},{n}) index {i}");
                    for md in &mods {
                        assert_eq!(md.index, i);
                        // Bitset recheck of closure under +m and +n.
                        for e in md.min..md.min + md.len as i64 {
                            if md.contains(e) {
                                assert!(md.contains(e + m as i64), "({m},{n}) {e}+m");
                                assert!(md.contains(e + n as i64), "({m},{n}) {e}+n");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn flag_component_has_exactly_the_four_chain_fixed_points() {
        let full: BTreeSet<u32> = [0, 1, 2].into();
        let chains = enumerate_chain_fixed_points(3, 2, &full).unwrap();
        assert_eq!(chains.len(), 4);
        // Identify each chain by the first three elements of its members.
        let shapes: BTreeSet<Vec<Vec<i64>>> = chains
            .iter()
            .map(|ch| ch.iter().map(|m| m.first_elements(3)).collect())
            .collect();
        let expect: BTreeSet<Vec<Vec<i64>>> = [
            // q
            vec![vec![0, 1, 2], vec![-1, 0, 1], vec![-2, -1, 0]],
            // p0: the bottom lattice changes
            vec![vec![-1, 1, 2], vec![-1, 0, 1], vec![-2, -1, 0]],
            // p1: the middle lattice changes
            vec![vec![0, 1, 2], vec![-2, 0, 1], vec![-2, -1, 0]],
            // p2: the top lattice changes
            vec![vec![0, 1, 2], vec![-1, 0, 1], vec![-3, -1, 0]],
        ]
        .into_iter()
        .collect();
        assert_eq!(shapes, expect);
    }

    #[test]
    fn partial_types_project_to_module_counts() {
        // A single node of the chain is plain fixed-index enumeration.
        for j in 0..3u32 {
            let chains =
                enumerate_chain_fixed_points(3, 2, &BTreeSet::from([j])).unwrap();
            assert_eq!(chains.len(), 2, "J = {{{j}}}");
        }
        // The SL₂-style full chain for the cusp has three fixed points —
        // the Euler characteristic of the two-P¹ Iwahori fiber.
        let chains =
            enumerate_chain_fixed_points(2, 3, &BTreeSet::from([0, 1])).unwrap();
        assert_eq!(chains.len(), 3);
        assert!(matches!(
            enumerate_chain_fixed_points(2, 3, &BTreeSet::from([2])),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            enumerate_chain_fixed_points(2, 3, &BTreeSet::new()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn poincare_polynomials_interpolate_the_counts() {
        let budget = Budget::standard();
        // Sample fields must keep x^n − t^m separable: avoid p | n.
        let p = poincare_by_interpolation(2, 3, &[2, 5, 7], &budget).unwrap();
        assert_eq!(p.coeffs, vec![1, 1], "expected q + 1");
        let p = poincare_by_interpolation(2, 5, &[2, 3, 7, 11], &budget).unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval(1), 3);
        let p = poincare_by_interpolation(1, 4, &[3, 5], &budget).unwrap();
        assert_eq!(p.coeffs, vec![1], "smooth case is a single point");
        assert!(matches!(
            poincare_by_interpolation(2, 5, &[3, 5], &budget),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn modules_become_stable_lattices_with_matching_index() {
        let field = Fq::new(3, 1).unwrap();
        let gamma = ls_matrix(&field, 2, 3, 16).unwrap();
        let cp = gamma.char_poly();
        // Characteristic polynomial x² − t³.
        assert!(cp.coeff(0).eq_to(
            &Series::monomial(field.clone(), field.one(), 3, 16).neg(),
            10
        ));
        assert!(cp.coeff(1).eq_to(&Series::zero(field.clone(), 16), 10));

        for i in -2..=2i64 {
            for md in enumerate_modules(2, 3, ModuleMode::FixedIndex(i)).unwrap() {
                let lat = module_to_lattice(&field, 2, &md, 6).unwrap();
                assert_eq!(lat.index(), i, "lattice index vs module index");
                assert!(lat.is_stable(&gamma).unwrap(), "γ-stability of {}", md.render());
            }
        }
    }

    #[test]
    fn chain_fixed_points_are_valid_lattice_chains() {
        let field = Fq::new(3, 1).unwrap();
        for (m, n) in [(3u32, 2u32), (2, 3)] {
            let gamma = ls_matrix(&field, m, n, 20).unwrap();
            let full: BTreeSet<u32> = (0..m).collect();
            let chains = enumerate_chain_fixed_points(m, n, &full).unwrap();
            for ch in &chains {
                let mut members = BTreeMap::new();
                for (j, md) in ch.iter().enumerate() {
                    let lat = module_to_lattice(&field, m, md, 8).unwrap();
                    assert!(lat.is_stable(&gamma).unwrap());
                    members.insert(j, lat);
                }
                let chain = LatticeChain::new(members);
                assert!(lattice::validate_chain(&chain), "invalid chain for ({m},{n})");
            }
        }
    }
}
