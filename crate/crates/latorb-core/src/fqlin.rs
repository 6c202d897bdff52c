//! Dense linear algebra over a finite field: row reduction, rank, solving,
//! kernels, inverses. Everything is plain Gaussian elimination — the matrices
//! in this crate are small (dimensions are lattice windows or quotient
//! lengths, not data sizes).

use crate::fq::{FieldRef, FqElem};

#[derive(Clone)]
pub struct FqMat {
    field: FieldRef,
    rows: usize,
    cols: usize,
    a: Vec<FqElem>,
}

impl std::fmt::Debug for FqMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "FqMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| self.field.render(self.get(i, j)))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl FqMat {
    pub fn zero(field: FieldRef, rows: usize, cols: usize) -> Self {
        let z = field.zero();
        FqMat { field, rows, cols, a: vec![z; rows * cols] }
    }

    pub fn identity(field: FieldRef, n: usize) -> Self {
        let mut m = Self::zero(field, n, n);
        for i in 0..n {
            let one = m.field.one();
            m.set(i, i, one);
        }
        m
    }

    pub fn from_fn(field: FieldRef, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> FqElem) -> Self {
        let mut m = Self::zero(field, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn from_rows(field: FieldRef, rows: &[Vec<FqElem>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_fn(field, rows.len(), cols, |i, j| rows[i][j])
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FqElem {
        self.a[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: FqElem) {
        self.a[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &FqMat) -> FqMat {
        assert_eq!(self.cols, other.rows);
        let f = self.field.clone();
        let mut out = FqMat::zero(f.clone(), self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.add(out.get(i, j), f.mul(aik, other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[FqElem]) -> Vec<FqElem> {
        assert_eq!(self.cols, v.len());
        let f = &self.field;
        (0..self.rows)
            .map(|i| {
                let mut acc = f.zero();
                for j in 0..self.cols {
                    acc = f.add(acc, f.mul(self.get(i, j), v[j]));
                }
                acc
            })
            .collect()
    }

    /// In-place reduced row echelon form; returns the pivot columns in order.
    pub fn rref(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = vec![];
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(pr) = (row..self.rows).find(|&r| !self.get(r, col).is_zero()) else {
                continue;
            };
            if pr != row {
                for j in 0..self.cols {
                    let (x, y) = (self.get(row, j), self.get(pr, j));
                    self.set(row, j, y);
                    self.set(pr, j, x);
                }
            }
            let inv = f.inv(self.get(row, col)).expect("nonzero pivot");
            for j in col..self.cols {
                let v = f.mul(self.get(row, j), inv);
                self.set(row, j, v);
            }
            for r in 0..self.rows {
                if r != row && !self.get(r, col).is_zero() {
                    let factor = self.get(r, col);
                    for j in col..self.cols {
                        let v = f.sub(self.get(r, j), f.mul(factor, self.get(row, j)));
                        self.set(r, j, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// One solution of A x = b, if consistent.
    pub fn solve(&self, b: &[FqElem]) -> Option<Vec<FqElem>> {
        assert_eq!(b.len(), self.rows);
        let f = self.field.clone();
        let mut aug = FqMat::zero(f.clone(), self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, b[i]);
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None; // pivot in the constants column: inconsistent
        }
        let mut x = vec![f.zero(); self.cols];
        for (r, &col) in pivots.iter().enumerate() {
            x[col] = aug.get(r, self.cols);
        }
        Some(x)
    }

    /// Basis of the right kernel { x : A x = 0 }.
    pub fn kernel(&self) -> Vec<Vec<FqElem>> {
        let f = self.field.clone();
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        let mut basis = vec![];
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![f.zero(); self.cols];
            v[free] = f.one();
            for (r, &col) in pivots.iter().enumerate() {
                v[col] = f.neg(m.get(r, free));
            }
            basis.push(v);
        }
        basis
    }

    pub fn inverse(&self) -> Option<FqMat> {
        assert_eq!(self.rows, self.cols);
        let f = self.field.clone();
        let n = self.rows;
        let mut aug = FqMat::zero(f.clone(), n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            let one = f.one();
            aug.set(i, n + i, one);
        }
        let pivots = aug.rref();
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
            return None;
        }
        let mut out = FqMat::zero(f, n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, aug.get(i, n + j));
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fq::Fq;

    #[test]
    fn solve_and_kernel_agree_with_rank() {
        let f = Fq::new(5, 1).unwrap();
        // 3x4 matrix with a 1-dimensional kernel contribution per free column
        let m = FqMat::from_fn(f.clone(), 3, 4, |i, j| f.from_u64(((i + 1) * (j + 2)) as u64 % 5));
        let rank = m.rank();
        let kernel = m.kernel();
        assert_eq!(rank + kernel.len(), 4);
        for v in &kernel {
            assert!(m.mul_vec(v).iter().all(|e| e.is_zero()));
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let f = Fq::new(7, 1).unwrap();
        let m = FqMat::from_rows(
            f.clone(),
            &[
                vec![f.from_u64(2), f.from_u64(3), f.from_u64(1)],
                vec![f.from_u64(0), f.from_u64(1), f.from_u64(4)],
                vec![f.from_u64(5), f.from_u64(0), f.from_u64(6)],
            ],
        );
        let inv = m.inverse().expect("invertible");
        let prod = m.mul(&inv);
        let id = FqMat::identity(f, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(prod.get(i, j), id.get(i, j));
            }
        }
        // singular matrix has no inverse
        let f3 = Fq::new(3, 1).unwrap();
        let sing = FqMat::from_fn(f3, 2, 2, |_, _| FqElem::ZERO);
        assert!(sing.inverse().is_none());
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let f = Fq::new(3, 1).unwrap();
        let m = FqMat::from_rows(
            f.clone(),
            &[
                vec![f.from_u64(1), f.from_u64(2)],
                vec![f.from_u64(2), f.from_u64(1)],
                vec![f.from_u64(0), f.from_u64(0)],
            ],
        );
        let b = vec![f.from_u64(1), f.from_u64(2), f.from_u64(0)];
        let x = m.solve(&b).unwrap();
        assert_eq!(m.mul_vec(&x), b);
        let bad = vec![f.from_u64(1), f.from_u64(2), f.from_u64(1)];
        assert!(m.solve(&bad).is_none());
    }

    use crate::fq::FqElem;
}
