//! Linear operators on the full form space, stored as dense blocks between bidegrees.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::forms::{conj_monomial, Bidegree, Form, FormSpace, Monomial};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// An operator of fixed total degree shift. Block `(s, t)` maps the bidegree with
/// index `s` to the one with index `t`.
#[derive(Clone, Debug)]
pub struct Operator<S> {
    space: Arc<FormSpace>,
    degree: i32,
    blocks: BTreeMap<(usize, usize), Matrix<S>>,
}

impl<S: Scalar> Operator<S> {
    pub fn zero(space: Arc<FormSpace>, degree: i32) -> Self {
        Operator { space, degree, blocks: BTreeMap::new() }
    }

    pub fn identity(space: Arc<FormSpace>) -> Self {
        Self::diagonal(space, |_| S::one())
    }

    /// Block-diagonal operator acting on bidegree `pq` by the scalar `f(pq)`.
    pub fn diagonal(space: Arc<FormSpace>, f: impl Fn(Bidegree) -> S) -> Self {
        let mut op = Self::zero(space.clone(), 0);
        for (b, pq) in space.bidegrees().iter().enumerate() {
            let s = f(*pq);
            let m = Matrix::identity(space.dim_at(b)).scale(&s);
            op.insert(b, b, m);
        }
        op
    }

    /// Operator given by its action on every basis monomial.
    pub fn from_action(space: Arc<FormSpace>, degree: i32, act: impl Fn(Monomial) -> Form<S>) -> Self {
        let mut op = Self::zero(space.clone(), degree);
        for (s, pq) in space.bidegrees().iter().enumerate() {
            for (col, &m) in space.basis(*pq).iter().enumerate() {
                let img = act(m);
                for (tm, c) in img.terms() {
                    let (t, row) = space.locate(*tm);
                    let ds = space.dim_at(s);
                    let dt = space.dim_at(t);
                    let block = op.blocks.entry((s, t)).or_insert_with(|| Matrix::zeros(dt, ds));
                    block.add_at(row, col, c.clone());
                }
            }
        }
        op.prune();
        op
    }

    /// Left multiplication `x ↦ α∧x` by a homogeneous form.
    pub fn wedge_by(space: Arc<FormSpace>, alpha: &Form<S>) -> Self {
        let deg = alpha.degree().unwrap_or(0) as i32;
        Self::from_action(space, deg, |m| alpha.wedge(&Form::monomial(alpha.n(), m, S::one())))
    }

    pub fn space(&self) -> &Arc<FormSpace> {
        &self.space
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn blocks(&self) -> &BTreeMap<(usize, usize), Matrix<S>> {
        &self.blocks
    }

    pub fn insert(&mut self, s: usize, t: usize, m: Matrix<S>) {
        if !m.is_zero() {
            self.blocks.insert((s, t), m);
        }
    }

    fn prune(&mut self) {
        self.blocks.retain(|_, m| !m.is_zero());
    }

    /// Dense matrix from bidegree `src` to bidegree `tgt` (zero if no block).
    pub fn block(&self, src: Bidegree, tgt: Bidegree) -> Matrix<S> {
        let s = self.space.index_of(src);
        let t = self.space.index_of(tgt);
        self.blocks
            .get(&(s, t))
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(self.space.dim_at(t), self.space.dim_at(s)))
    }

    /// Dense matrix from total degree `k` to total degree `k + degree`.
    pub fn degree_matrix(&self, k: usize) -> Matrix<S> {
        let tk = k as i32 + self.degree;
        let sp = &self.space;
        let n2 = 2 * sp.n() as i32;
        let rows = if (0..=n2).contains(&tk) { sp.degree_dim(tk as usize) } else { 0 };
        let mut m = Matrix::zeros(rows, sp.degree_dim(k));
        if rows == 0 {
            return m;
        }
        for src in sp.degree_bidegrees(k) {
            let s = sp.index_of(src);
            let so = sp.degree_offset(src);
            for tgt in sp.degree_bidegrees(tk as usize) {
                let t = sp.index_of(tgt);
                if let Some(b) = self.blocks.get(&(s, t)) {
                    let to = sp.degree_offset(tgt);
                    for r in 0..b.rows() {
                        for c in 0..b.cols() {
                            m.set(to + r, so + c, b.get(r, c).clone());
                        }
                    }
                }
            }
        }
        m
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.space.clone(), self.degree + other.degree);
        for (&(s, m), b) in &other.blocks {
            for (&(m2, t), a) in self.blocks.range((m, 0)..(m + 1, 0)) {
                debug_assert_eq!(m, m2);
                let prod = a.mul(b);
                out.accumulate(s, t, prod);
            }
        }
        out.prune();
        out
    }

    fn accumulate(&mut self, s: usize, t: usize, m: Matrix<S>) {
        match self.blocks.get_mut(&(s, t)) {
            Some(cur) => *cur = cur.add(&m),
            None => {
                self.blocks.insert((s, t), m);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(
            self.blocks.is_empty() || other.blocks.is_empty() || self.degree == other.degree,
            "adding operators of different degrees"
        );
        let degree = if self.blocks.is_empty() { other.degree } else { self.degree };
        let mut out = self.clone();
        out.degree = degree;
        for (&(s, t), m) in &other.blocks {
            out.accumulate(s, t, m.clone());
        }
        out.prune();
        out
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero(self.space.clone(), self.degree);
        if c.is_zero() {
            return out;
        }
        for (&k, m) in &self.blocks {
            out.blocks.insert(k, m.scale(c));
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(|m| m.is_zero())
    }

    /// Graded commutator `[A,B] = AB − (−1)^{deg A·deg B} BA`.
    pub fn comm(&self, other: &Self) -> Self {
        let ab = self.compose(other);
        let ba = other.compose(self);
        if (self.degree * other.degree) % 2 == 0 {
            ab.sub(&ba)
        } else {
            ab.add(&ba)
        }
    }

    /// Adjoint w.r.t. per-bidegree Gram matrices: `A* = G_src⁻¹ Aᴴ G_tgt`.
    pub fn adjoint(&self, gram: &[Matrix<S>], gram_inv: &[Matrix<S>]) -> Self {
        let mut out = Self::zero(self.space.clone(), -self.degree);
        for (&(s, t), a) in &self.blocks {
            let m = gram_inv[s].mul(&a.h()).mul(&gram[t]);
            out.insert(t, s, m);
        }
        out
    }

    /// `conj ∘ A ∘ conj`.
    pub fn conjugate(&self) -> Self {
        let sp = self.space.clone();
        let n = sp.n();
        let mut out = Self::zero(sp.clone(), self.degree);
        for (&(s, t), a) in &self.blocks {
            let src = sp.bidegrees()[s];
            let tgt = sp.bidegrees()[t];
            let cs = sp.index_of(Bidegree::new(src.q, src.p));
            let ct = sp.index_of(Bidegree::new(tgt.q, tgt.p));
            let mut m = Matrix::zeros(sp.dim_at(ct), sp.dim_at(cs));
            for (col, &ms) in sp.basis_at(s).iter().enumerate() {
                let (cms, sig_s) = conj_monomial(ms, n);
                let (_, ccol) = sp.locate(cms);
                for (row, &mt) in sp.basis_at(t).iter().enumerate() {
                    let v = a.get(row, col);
                    if v.is_zero() {
                        continue;
                    }
                    let (cmt, sig_t) = conj_monomial(mt, n);
                    let (_, crow) = sp.locate(cmt);
                    let c = v.conj();
                    m.set(crow, ccol, if sig_s * sig_t > 0 { c } else { -c });
                }
            }
            out.insert(cs, ct, m);
        }
        out
    }

    pub fn apply(&self, x: &Form<S>) -> Form<S> {
        let sp = &self.space;
        let mut out = Form::zero(sp.n());
        for pq in x.bidegrees() {
            let s = sp.index_of(pq);
            let v = x.to_vec(sp, pq);
            for (&(s2, t), a) in self.blocks.range((s, 0)..(s + 1, 0)) {
                debug_assert_eq!(s, s2);
                let w = a.mul_vec(&v);
                let tgt = sp.bidegrees()[t];
                out = out.add(&Form::from_vec(sp, tgt, &w));
            }
        }
        out
    }

    /// Restrict to the blocks leaving bidegrees that satisfy `keep`.
    pub fn restrict_source(&self, keep: impl Fn(Bidegree) -> bool) -> Self {
        let mut out = Self::zero(self.space.clone(), self.degree);
        for (&(s, t), m) in &self.blocks {
            if keep(self.space.bidegrees()[s]) {
                out.blocks.insert((s, t), m.clone());
            }
        }
        out
    }

    /// Largest entry magnitude, as a float diagnostic.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .values()
            .flat_map(|m| m.entries().iter().map(|x| x.magnitude()))
            .fold(0.0, f64::max)
    }

    /// Frobenius norm as a float diagnostic.
    pub fn frobenius(&self) -> f64 {
        self.blocks
            .values()
            .flat_map(|m| m.entries().iter().map(|x| x.magnitude().powi(2)))
            .sum::<f64>()
            .sqrt()
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Operator<T> {
        Operator {
            space: self.space.clone(),
            degree: self.degree,
            blocks: self.blocks.iter().map(|(k, m)| (*k, m.map(&f))).collect(),
        }
    }

    /// Total degrees in which the operator is nonzero on its source.
    pub fn source_degrees(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.blocks.keys().map(|(s, _)| self.space.bidegrees()[*s].degree()).collect();
        v.sort();
        v.dedup();
        v
    }
}
