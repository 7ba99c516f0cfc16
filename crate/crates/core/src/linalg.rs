//! Dense matrices over a [`Scalar`] field and subspaces given by column bases.

use std::fmt;

use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: fmt::Debug> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        Ok(())
    }
}

/// Result of Gauss-Jordan elimination.
pub struct Echelon<S> {
    pub reduced: Matrix<S>,
    pub pivots: Vec<usize>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let data: Vec<S> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), r * c, "ragged rows");
        Matrix { rows: r, cols: c, data }
    }

    /// Matrix whose columns are the given vectors, all of length `rows`.
    pub fn from_cols(rows: usize, cols: &[Vec<S>]) -> Self {
        Self::from_fn(rows, cols.len(), |r, c| cols[c][r].clone())
    }

    pub fn column_vector(v: &[S]) -> Self {
        Matrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &S {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: S) {
        let idx = r * self.cols + c;
        let cur = std::mem::replace(&mut self.data[idx], S::zero());
        self.data[idx] = cur + v;
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<S>> {
        (0..self.cols).map(|c| self.col(c)).collect()
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.negligible())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }

    /// Conjugate transpose.
    pub fn h(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.get(k, c);
                    if b.is_zero() {
                        continue;
                    }
                    out.add_at(r, c, a.clone() * b.clone());
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "shape mismatch in mul_vec");
        (0..self.rows)
            .map(|r| {
                let mut acc = S::zero();
                for (a, b) in self.row(r).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc + a.clone() * b.clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "row mismatch in hstack");
        Self::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.get(r, c).clone()
            } else {
                other.get(r, c - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "column mismatch in vstack");
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Matrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |r, c| self.get(r, idx[c]).clone())
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |r, c| self.get(rows[r], cols[c]).clone())
    }

    /// Gauss-Jordan elimination. Exact fields take the first nonzero entry as pivot;
    /// float fields take the largest one.
    pub fn echelon(&self) -> Echelon<S> {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let pick = if S::EXACT {
                (row..m.rows).find(|&r| !m.get(r, col).is_zero())
            } else {
                (row..m.rows)
                    .filter(|&r| !m.get(r, col).negligible())
                    .max_by(|&a, &b| m.get(a, col).magnitude().total_cmp(&m.get(b, col).magnitude()))
            };
            let Some(p) = pick else { continue };
            m.swap_rows(row, p);
            let inv = S::one() / m.get(row, col).clone();
            for c in col..m.cols {
                let v = m.get(row, c).clone() * inv.clone();
                m.set(row, c, v);
            }
            for r in 0..m.rows {
                if r == row {
                    continue;
                }
                let f = m.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for c in col..m.cols {
                    let pv = m.get(row, c);
                    if pv.is_zero() {
                        continue;
                    }
                    let v = m.get(r, c).clone() - f.clone() * pv.clone();
                    m.set(r, c, v);
                }
                if !S::EXACT {
                    m.set(r, col, S::zero());
                }
            }
            pivots.push(col);
            row += 1;
        }
        Echelon { reduced: m, pivots }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    /// Basis of the null space, one column per free variable.
    pub fn kernel(&self) -> Matrix<S> {
        let e = self.echelon();
        let free: Vec<usize> = (0..self.cols).filter(|c| !e.pivots.contains(c)).collect();
        let mut k = Matrix::zeros(self.cols, free.len());
        for (j, &f) in free.iter().enumerate() {
            k.set(f, j, S::one());
            for (i, &p) in e.pivots.iter().enumerate() {
                k.set(p, j, -e.reduced.get(i, f).clone());
            }
        }
        k
    }

    /// Indices of a maximal independent set of columns, chosen greedily left to right.
    pub fn independent_columns(&self) -> Vec<usize> {
        self.echelon().pivots
    }

    /// A solution of `self * x = b`, if any.
    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        assert_eq!(b.len(), self.rows);
        let aug = self.hstack(&Matrix::column_vector(b));
        let e = aug.echelon();
        if e.pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![S::zero(); self.cols];
        for (i, &p) in e.pivots.iter().enumerate() {
            x[p] = e.reduced.get(i, self.cols).clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Matrix<S>> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Some(Matrix::zeros(0, 0));
        }
        let e = self.hstack(&Matrix::identity(n)).echelon();
        if e.pivots.len() < n || e.pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Matrix::from_fn(n, n, |r, c| e.reduced.get(r, n + c).clone()))
    }

    pub fn determinant(&self) -> S {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let n = self.rows;
        let mut det = S::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m.get(r, col).negligible()) else {
                return S::zero();
            };
            if p != col {
                m.swap_rows(p, col);
                det = -det;
            }
            let piv = m.get(col, col).clone();
            det = det * piv.clone();
            for r in col + 1..n {
                let f = m.get(r, col).clone() / piv.clone();
                if f.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = m.get(r, c).clone() - f.clone() * m.get(col, c).clone();
                    m.set(r, c, v);
                }
            }
        }
        det
    }

    pub fn trace(&self) -> S {
        let mut t = S::zero();
        for i in 0..self.rows.min(self.cols) {
            t = t + self.get(i, i).clone();
        }
        t
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + x.clone() * y.clone();
    }
    acc
}

pub fn axpy<S: Scalar>(a: &S, x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(xi, yi)| a.clone() * xi.clone() + yi.clone()).collect()
}

/// A linear subspace of `S^ambient` stored by an independent column basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace<S> {
    ambient: usize,
    basis: Matrix<S>,
}

impl<S: Scalar> Subspace<S> {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Matrix::zeros(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { ambient, basis: Matrix::identity(ambient) }
    }

    /// Span of the columns of `m`, reduced to an independent subset.
    pub fn span(m: &Matrix<S>) -> Self {
        let idx = m.independent_columns();
        Subspace { ambient: m.rows(), basis: m.select_cols(&idx) }
    }

    pub fn span_vectors(ambient: usize, vs: &[Vec<S>]) -> Self {
        Self::span(&Matrix::from_cols(ambient, vs))
    }

    pub fn image(a: &Matrix<S>) -> Self {
        Self::span(a)
    }

    pub fn kernel(a: &Matrix<S>) -> Self {
        Subspace { ambient: a.cols(), basis: a.kernel() }
    }

    /// `{ x : a x ∈ target }`.
    pub fn preimage(a: &Matrix<S>, target: &Subspace<S>) -> Self {
        assert_eq!(a.rows(), target.ambient, "ambient mismatch in preimage");
        let t = target.basis.scale(&-S::one());
        let k = a.hstack(&t).kernel();
        let rows: Vec<usize> = (0..a.cols()).collect();
        let cols: Vec<usize> = (0..k.cols()).collect();
        Self::span(&k.submatrix(&rows, &cols))
    }

    /// `a(self)`.
    pub fn map(&self, a: &Matrix<S>) -> Self {
        assert_eq!(a.cols(), self.ambient, "ambient mismatch in map");
        Self::span(&a.mul(&self.basis))
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix<S> {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<Vec<S>> {
        self.basis.columns()
    }

    pub fn sum(&self, other: &Self) -> Self {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch in sum");
        Self::span(&self.basis.hstack(&other.basis))
    }

    pub fn intersect(&self, other: &Self) -> Self {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch in intersect");
        if self.dim() == 0 || other.dim() == 0 {
            return Self::zero(self.ambient);
        }
        let k = self.basis.hstack(&other.basis.scale(&-S::one())).kernel();
        let rows: Vec<usize> = (0..self.dim()).collect();
        let cols: Vec<usize> = (0..k.cols()).collect();
        let coeffs = k.submatrix(&rows, &cols);
        Self::span(&self.basis.mul(&coeffs))
    }

    pub fn contains(&self, v: &[S]) -> bool {
        self.coordinates(v).is_some()
    }

    /// Coordinates of `v` in the stored basis.
    pub fn coordinates(&self, v: &[S]) -> Option<Vec<S>> {
        if v.iter().all(|x| x.negligible()) {
            return Some(vec![S::zero(); self.dim()]);
        }
        if self.dim() == 0 {
            return None;
        }
        self.basis.solve(v)
    }

    pub fn contains_space(&self, other: &Self) -> bool {
        self.sum(other).dim() == self.dim()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.contains_space(other)
    }

    /// First basis vector of `other` that is not in `self`, if any.
    pub fn first_outside(&self, other: &Self) -> Option<Vec<S>> {
        other.vectors().into_iter().find(|v| !self.contains(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, Q};

    fn qm(rows: &[&[i64]]) -> Matrix<Q> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| q(x, 1)).collect()).collect())
    }

    #[test]
    fn rank_and_kernel() {
        let a = qm(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(a.rank(), 2);
        let k = a.kernel();
        assert_eq!(k.cols(), 1);
        assert!(a.mul(&k).is_zero());
    }

    #[test]
    fn inverse_and_det() {
        let a = qm(&[&[2, 1], &[1, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(2));
        assert_eq!(a.determinant(), q(1, 1));
        assert!(qm(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }

    #[test]
    fn solve_inconsistent() {
        let a = qm(&[&[1, 0], &[0, 0]]);
        assert!(a.solve(&[q(1, 1), q(1, 1)]).is_none());
        assert_eq!(a.solve(&[q(3, 1), q(0, 1)]).unwrap()[0], q(3, 1));
    }

    #[test]
    fn subspace_ops() {
        let u = Subspace::span(&qm(&[&[1, 0], &[0, 1], &[0, 0]]));
        let v = Subspace::span(&qm(&[&[0, 0], &[1, 0], &[0, 1]]));
        assert_eq!(u.intersect(&v).dim(), 1);
        assert_eq!(u.sum(&v).dim(), 3);
        assert!(u.contains(&[q(5, 1), q(-1, 1), q(0, 1)]));
        assert!(!u.contains(&[q(0, 1), q(0, 1), q(1, 1)]));
        let a = qm(&[&[0, 0, 1], &[0, 0, 0], &[0, 0, 0]]);
        // preimage of span(e0) under a is everything
        let e0 = Subspace::span(&qm(&[&[1], &[0], &[0]]));
        assert_eq!(Subspace::preimage(&a, &e0).dim(), 3);
        assert_eq!(Subspace::preimage(&a, &Subspace::zero(3)).dim(), 2);
    }
}
