//! Symmetric positive definite banded matrices and their Cholesky factors.

use crate::scalar::Scalar;

/// Lower band storage: `band[i][k]` holds entry `(i, i - k)` for `k <= bw`.
#[derive(Debug, Clone)]
pub struct SymBanded<T> {
    n: usize,
    bw: usize,
    band: Vec<T>,
}

impl<T: Scalar> SymBanded<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBanded {
            n,
            bw,
            band: vec![T::zero(); n * (bw + 1)],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn idx(&self, i: usize, k: usize) -> usize {
        i * (self.bw + 1) + k
    }

    /// Adds `v` to entry `(i, j)` (and its mirror).
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = i - j;
        assert!(k <= self.bw, "entry outside band");
        let p = self.idx(i, k);
        self.band[p] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = i - j;
        if k > self.bw {
            T::zero()
        } else {
            self.band[self.idx(i, k)]
        }
    }

    /// Adds `w * r r^T` for a sparse row `r` given as (index, value) pairs.
    pub fn add_outer(&mut self, row: &[(usize, T)], w: T) {
        for (p, &(i, vi)) in row.iter().enumerate() {
            // symmetric storage: each unordered pair is stored once
            for &(j, vj) in &row[..=p] {
                self.add(i, j, w * vi * vj);
            }
        }
    }

    /// In-place Cholesky factorization `M = L L^T`; `None` if not positive definite.
    pub fn cholesky(mut self) -> Option<BandedCholesky<T>> {
        let n = self.n;
        let bw = self.bw;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = self.get(i, j);
                let k0 = i.saturating_sub(bw).max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= self.band[self.idx(i, i - k)] * self.band[self.idx(j, j - k)];
                }
                if i == j {
                    if !(s > T::zero()) {
                        return None;
                    }
                    let p = self.idx(i, 0);
                    self.band[p] = s.sqrt();
                } else {
                    let d = self.band[self.idx(j, 0)];
                    let p = self.idx(i, i - j);
                    self.band[p] = s / d;
                }
            }
        }
        Some(BandedCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky<T> {
    factor: SymBanded<T>,
}

impl<T: Scalar> BandedCholesky<T> {
    /// Solves `M x = rhs` in place.
    pub fn solve_in_place(&self, x: &mut [T]) {
        let l = &self.factor;
        let n = l.n;
        let bw = l.bw;
        assert_eq!(x.len(), n);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.band[l.idx(i, i - k)] * x[k];
            }
            x[i] = s / l.band[l.idx(i, 0)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                s -= l.band[l.idx(k, k - i)] * x[k];
            }
            x[i] = s / l.band[l.idx(i, 0)];
        }
    }
}
