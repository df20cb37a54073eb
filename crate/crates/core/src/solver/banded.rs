//! Cyclic banded matrices and their direct solution.
//!
//! A periodic stencil of half-width `p` gives a matrix that is banded except
//! for `p x p` corner blocks. The last `2p` unknowns are treated as a border:
//! the leading block is then strictly banded and is factored by banded LU
//! with partial pivoting; the border is closed by a small dense Schur
//! complement.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square `n x n` matrix with entries only at `(i, (i + o) mod n)` for
/// `|o| <= p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicBanded {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl CyclicBanded {
    pub fn zeros(n: usize, p: usize) -> Self {
        assert!(
            n > 2 * p,
            "cyclic band of half-width {p} needs more than {} rows",
            2 * p
        );
        CyclicBanded {
            n,
            p,
            data: vec![0.0; n * (2 * p + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> usize {
        self.p
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn slot(&self, i: usize, offset: isize) -> usize {
        debug_assert!(offset.unsigned_abs() <= self.p);
        i * (2 * self.p + 1) + (offset + self.p as isize) as usize
    }

    /// Adds `v` to entry `(i, i + offset mod n)`.
    #[inline]
    pub fn add(&mut self, i: usize, offset: isize, v: f64) {
        let s = self.slot(i, offset);
        self.data[s] += v;
    }

    #[inline]
    pub fn get_offset(&self, i: usize, offset: isize) -> f64 {
        self.data[self.slot(i, offset)]
    }

    /// Entry `(i, j)` in ordinary indexing.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let n = self.n as isize;
        let d = (j as isize - i as isize).rem_euclid(n);
        let offset = if d > n / 2 { d - n } else { d };
        if offset.unsigned_abs() <= self.p {
            self.get_offset(i, offset)
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for o in -(self.p as isize)..=self.p as isize {
                let j = (i as isize + o).rem_euclid(self.n as isize) as usize;
                m[(i, j)] += self.get_offset(i, o);
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n as isize;
        (0..self.n)
            .map(|i| {
                (-(self.p as isize)..=self.p as isize)
                    .map(|o| self.get_offset(i, o) * x[(i as isize + o).rem_euclid(n) as usize])
                    .sum()
            })
            .collect()
    }

    /// Solves `A x = b`. Falls back to dense LU if the banded pivoting meets
    /// an exactly zero pivot.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.n);
        match self.solve_bordered(b) {
            Ok(x) => Ok(x),
            Err(_) => {
                log::debug!("banded factorization hit a zero pivot, using dense LU");
                self.solve_dense(b)
            }
        }
    }

    pub fn solve_dense(&self, b: &[f64]) -> Result<Vec<f64>> {
        let lu = self.to_dense().lu();
        lu.solve(&DVector::from_column_slice(b))
            .map(|x| x.as_slice().to_vec())
            .ok_or(Error::Singular(self.n))
    }

    fn solve_bordered(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let p = self.p;
        let m = (2 * p).min(n);
        let n1 = n - m;
        if n1 <= 2 * p {
            return self.solve_dense(b);
        }

        let mut a11 = BandLu::zeros(n1, p, p);
        let mut a12 = vec![0.0; n1 * m]; // column-major, n1 rows
        let mut a21 = DMatrix::<f64>::zeros(m, n1);
        let mut s = DMatrix::<f64>::zeros(m, m);
        for i in 0..n {
            for o in -(p as isize)..=p as isize {
                let j = (i as isize + o).rem_euclid(n as isize) as usize;
                let v = self.get_offset(i, o);
                match (i < n1, j < n1) {
                    (true, true) => a11.set(i, j, v),
                    (true, false) => a12[(j - n1) * n1 + i] += v,
                    (false, true) => a21[(i - n1, j)] += v,
                    (false, false) => s[(i - n1, j - n1)] += v,
                }
            }
        }
        a11.factor()?;

        let mut y = b[..n1].to_vec();
        a11.solve_in_place(&mut y);
        for c in 0..m {
            a11.solve_in_place(&mut a12[c * n1..(c + 1) * n1]);
        }
        // S = A22 - A21 A11^{-1} A12, rhs = b2 - A21 A11^{-1} b1
        let x12 = DMatrix::from_column_slice(n1, m, &a12);
        s -= &a21 * &x12;
        let rhs = DVector::from_column_slice(&b[n1..]) - &a21 * DVector::from_column_slice(&y);
        let x2 = s.lu().solve(&rhs).ok_or(Error::Singular(n1))?;

        let mut x = y;
        for (c, &xc) in x2.iter().enumerate() {
            for (xi, col) in x.iter_mut().zip(&a12[c * n1..(c + 1) * n1]) {
                *xi -= col * xc;
            }
        }
        x.extend(x2.iter());
        Ok(x)
    }
}

/// Banded LU with partial pivoting. Row `i` holds columns
/// `i - kl ..= i + ku + kl`, the extra `kl` diagonals absorbing pivot fill.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    ab: Vec<f64>,
    mult: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandLu {
            n,
            kl,
            ku,
            width,
            ab: vec![0.0; n * width],
            mult: vec![0.0; n * kl],
            piv: (0..n).collect(),
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.ab[k] = v;
    }

    pub fn factor(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.ab[self.idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.ab[self.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            self.piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[self.idx(k, k)];
            for r in k + 1..=last_row {
                let l = self.ab[self.idx(r, k)] / pivot;
                self.mult[k * kl + (r - k - 1)] = l;
                let rk = self.idx(r, k);
                self.ab[rk] = 0.0;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let u = self.ab[self.idx(k, j)];
                        let t = self.idx(r, j);
                        self.ab[t] -= l * u;
                    }
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.mult[k * kl + (r - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut v = b[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                v -= self.ab[self.idx(k, j)] * b[j];
            }
            b[k] = v / self.ab[self.idx(k, k)];
        }
    }
}
