//! Exact polynomial interpolation of point counts.
//!
//! Counting functions q ↦ #X(F_q) for the varieties handled by this crate
//! are polynomials in q with integer coefficients. This module fits such a
//! polynomial through exact counts by Lagrange interpolation over exact
//! rationals, then *verifies* the fit against every supplied sample — the
//! samples beyond the fitting nodes act as a holdout set, so a degree bound
//! that is too small or a count that is not polynomial in q is reported as
//! an error rather than silently absorbed.

use num_rational::Ratio;

use crate::error::{Error, Result};

/// A polynomial in q fitted through exact point counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountPolynomial {
    /// Coefficients, ascending in q; no trailing zeros (constant 0 is `[0]`).
    pub coeffs: Vec<i128>,
    /// The (q, count) samples the polynomial was fitted to and verified on.
    pub samples: Vec<(u64, u64)>,
    /// Whether every coefficient is ≥ 0. Counting polynomials in this crate
    /// are expected to be nonnegative, but a violation is a flag for the
    /// caller, not an interpolation failure.
    pub nonnegative: bool,
}

impl CountPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Evaluate at an integer q (Horner).
    pub fn eval(&self, q: u64) -> i128 {
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * q as i128 + c;
        }
        acc
    }

    /// Human-readable form, highest power first, e.g. `2q^2 + 3q + 1`.
    pub fn render(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 && self.coeffs.len() > 1 {
                continue;
            }
            let mag = c.unsigned_abs();
            let body = match i {
                0 => format!("{mag}"),
                1 if mag == 1 => "q".to_string(),
                1 => format!("{mag}q"),
                _ if mag == 1 => format!("q^{i}"),
                _ => format!("{mag}q^{i}"),
            };
            if parts.is_empty() {
                parts.push(if c < 0 { format!("-{body}") } else { body });
            } else {
                parts.push(if c < 0 { format!("- {body}") } else { format!("+ {body}") });
            }
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" ")
        }
    }
}

/// Fit a polynomial of degree ≤ `degree_bound` through the samples and
/// verify it reproduces *all* of them exactly.
///
/// The first `degree_bound + 1` samples are the interpolation nodes; the
/// rest are holdout checks. Non-integer coefficients or any holdout mismatch
/// yield [`Error::InterpolationMismatch`]. Sample q values must be distinct.
pub fn interpolate(samples: &[(u64, u64)], degree_bound: usize) -> Result<CountPolynomial> {
    let nodes = degree_bound + 1;
    if samples.len() < nodes {
        return Err(Error::InvalidInput(format!(
            "need at least {} samples for degree bound {}, got {}",
            nodes,
            degree_bound,
            samples.len()
        )));
    }
    for (i, &(qi, _)) in samples.iter().enumerate() {
        for &(qj, _) in &samples[..i] {
            if qi == qj {
                return Err(Error::InvalidInput(format!("duplicate sample point q = {qi}")));
            }
        }
    }

    // Lagrange basis accumulation over exact rationals.
    let mut acc: Vec<Ratio<i128>> = vec![Ratio::from_integer(0); nodes];
    for j in 0..nodes {
        let (xj, yj) = (samples[j].0 as i128, samples[j].1 as i128);
        // basis_j(x) = ∏_{k≠j} (x − x_k) / (x_j − x_k)
        let mut basis: Vec<Ratio<i128>> = vec![Ratio::from_integer(1)];
        let mut denom: i128 = 1;
        for (k, &(xk, _)) in samples.iter().enumerate().take(nodes) {
            if k == j {
                continue;
            }
            let xk = xk as i128;
            denom *= xj - xk;
            // multiply basis by (x − x_k)
            let mut next = vec![Ratio::from_integer(0); basis.len() + 1];
            for (d, &b) in basis.iter().enumerate() {
                next[d + 1] += b;
                next[d] -= b * Ratio::from_integer(xk);
            }
            basis = next;
        }
        let scale = Ratio::new(yj, denom);
        for (d, &b) in basis.iter().enumerate() {
            acc[d] += b * scale;
        }
    }

    let mut coeffs: Vec<i128> = Vec::with_capacity(nodes);
    for (d, c) in acc.iter().enumerate() {
        if !c.is_integer() {
            return Err(Error::InterpolationMismatch(format!(
                "coefficient of q^{d} is the non-integer {c}"
            )));
        }
        coeffs.push(c.to_integer());
    }
    while coeffs.len() > 1 && *coeffs.last().expect("nonempty") == 0 {
        coeffs.pop();
    }

    let poly = CountPolynomial {
        nonnegative: coeffs.iter().all(|&c| c >= 0),
        coeffs,
        samples: samples.to_vec(),
    };

    // Full verification: the fitting nodes are reproduced by construction,
    // the remaining samples are genuine holdout checks.
    for &(q, count) in samples {
        let predicted = poly.eval(q);
        if predicted != count as i128 {
            return Err(Error::InterpolationMismatch(format!(
                "at q = {q}: polynomial {} predicts {predicted}, enumeration found {count}",
                poly.render()
            )));
        }
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_linear_count() {
        let p = interpolate(&[(3, 4), (5, 6), (7, 8)], 1).unwrap();
        assert_eq!(p.coeffs, vec![1, 1]);
        assert_eq!(p.degree(), 1);
        assert_eq!(p.render(), "q + 1");
        assert!(p.nonnegative);
        assert_eq!(p.eval(11), 12);
    }

    #[test]
    fn fits_quadratic_with_holdout() {
        // 2q² + 3q + 1 sampled at four points; the fourth is a holdout.
        let samples: Vec<(u64, u64)> = [2u64, 3, 5, 7]
            .iter()
            .map(|&q| (q, (2 * q * q + 3 * q + 1)))
            .collect();
        let p = interpolate(&samples, 2).unwrap();
        assert_eq!(p.coeffs, vec![1, 3, 2]);
        assert_eq!(p.render(), "2q^2 + 3q + 1");
    }

    #[test]
    fn holdout_mismatch_is_an_error() {
        let err = interpolate(&[(3, 4), (5, 6), (7, 9)], 1).unwrap_err();
        assert!(matches!(err, Error::InterpolationMismatch(_)), "{err:?}");
    }

    #[test]
    fn non_integer_coefficients_are_an_error() {
        // Through (2,1), (4,2) the line is q/2.
        let err = interpolate(&[(2, 1), (4, 2)], 1).unwrap_err();
        assert!(matches!(err, Error::InterpolationMismatch(_)), "{err:?}");
    }

    #[test]
    fn degree_is_trimmed() {
        let p = interpolate(&[(3, 5), (5, 5), (7, 5)], 2).unwrap();
        assert_eq!(p.coeffs, vec![5]);
        assert_eq!(p.degree(), 0);
        assert_eq!(p.render(), "5");
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let err = interpolate(&[(3, 4), (3, 4)], 1).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)), "{err:?}");
    }
}
