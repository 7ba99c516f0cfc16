//! Bigraded exterior algebra on a (1,0)-coframe ω¹..ωⁿ and its conjugates.
//!
//! A monomial is a bitmask over 2n generators: bit k-1 is ω^k and bit n+k-1 is ω̄^k.
//! Generators are ordered ω¹ < … < ωⁿ < ω̄¹ < … < ω̄ⁿ and a monomial always means the
//! wedge of its generators in ascending order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub type Monomial = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bidegree {
    pub p: usize,
    pub q: usize,
}

impl Bidegree {
    pub fn new(p: usize, q: usize) -> Self {
        Bidegree { p, q }
    }

    pub fn degree(&self) -> usize {
        self.p + self.q
    }

    /// Bidegree shifted by `(dp, dq)` if it stays inside `[0,n]²`.
    pub fn shift(&self, dp: i32, dq: i32, n: usize) -> Option<Bidegree> {
        let p = self.p as i32 + dp;
        let q = self.q as i32 + dq;
        if p < 0 || q < 0 || p > n as i32 || q > n as i32 {
            None
        } else {
            Some(Bidegree::new(p as usize, q as usize))
        }
    }
}

impl fmt::Display for Bidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

/// Readable form of a monomial: 1-based holomorphic and antiholomorphic indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FormBasisIndex {
    pub holo: Vec<usize>,
    pub anti: Vec<usize>,
}

impl FormBasisIndex {
    pub fn from_monomial(m: Monomial, n: usize) -> Self {
        let holo = (0..n).filter(|&k| m & (1 << k) != 0).map(|k| k + 1).collect();
        let anti = (0..n).filter(|&k| m & (1 << (n + k)) != 0).map(|k| k + 1).collect();
        FormBasisIndex { holo, anti }
    }

    pub fn to_monomial(&self, n: usize) -> Monomial {
        let mut m = 0;
        for &k in &self.holo {
            m |= 1 << (k - 1);
        }
        for &k in &self.anti {
            m |= 1 << (n + k - 1);
        }
        m
    }
}

pub fn holo_gen(k: usize) -> Monomial {
    1 << k
}

pub fn anti_gen(k: usize, n: usize) -> Monomial {
    1 << (n + k)
}

pub fn bidegree_of(m: Monomial, n: usize) -> Bidegree {
    let mask = (1u32 << n) - 1;
    Bidegree::new((m & mask).count_ones() as usize, (m >> n).count_ones() as usize)
}

/// Sign of `a ∧ b` relative to the ascending monomial `a | b`, or `None` if they overlap.
pub fn wedge_sign(a: Monomial, b: Monomial) -> Option<i32> {
    if a & b != 0 {
        return None;
    }
    // count pairs (x in a, y in b) with x > y
    let mut inversions = 0;
    let mut rest = b;
    while rest != 0 {
        let y = rest.trailing_zeros();
        rest &= rest - 1;
        inversions += (a >> (y + 1)).count_ones();
    }
    Some(if inversions % 2 == 0 { 1 } else { -1 })
}

/// `conj(ω^I∧ω̄^J) = sign · ω^J∧ω̄^I`.
pub fn conj_monomial(m: Monomial, n: usize) -> (Monomial, i32) {
    let mask = (1u32 << n) - 1;
    let holo = m & mask;
    let anti = m >> n;
    let sign = if (holo.count_ones() * anti.count_ones()) % 2 == 0 { 1 } else { -1 };
    (anti | (holo << n), sign)
}

pub fn monomial_name(m: Monomial, n: usize) -> String {
    if m == 0 {
        return "1".to_string();
    }
    let idx = FormBasisIndex::from_monomial(m, n);
    idx.holo
        .iter()
        .map(|k| format!("f{k}"))
        .chain(idx.anti.iter().map(|k| format!("g{k}")))
        .join("^")
}

/// Canonical ordered bases of all bidegree spaces of a given complex dimension.
#[derive(Debug)]
pub struct FormSpace {
    n: usize,
    bidegrees: Vec<Bidegree>,
    basis: Vec<Vec<Monomial>>,
    locate: HashMap<Monomial, (usize, usize)>,
}

impl FormSpace {
    pub fn new(n: usize) -> Self {
        assert!((1..=8).contains(&n), "complex dimension must be in 1..=8");
        let mut bidegrees = Vec::new();
        for k in 0..=2 * n {
            for p in (0..=n.min(k)).rev() {
                let q = k - p;
                if q <= n {
                    bidegrees.push(Bidegree::new(p, q));
                }
            }
        }
        let mut basis = Vec::new();
        let mut locate = HashMap::new();
        for (b, pq) in bidegrees.iter().enumerate() {
            let mut list = Vec::new();
            for i in (0..n).combinations(pq.p) {
                for j in (0..n).combinations(pq.q) {
                    let mut m = 0;
                    for &x in &i {
                        m |= holo_gen(x);
                    }
                    for &y in &j {
                        m |= anti_gen(y, n);
                    }
                    locate.insert(m, (b, list.len()));
                    list.push(m);
                }
            }
            basis.push(list);
        }
        FormSpace { n, bidegrees, basis, locate }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bidegrees(&self) -> &[Bidegree] {
        &self.bidegrees
    }

    pub fn index_of(&self, pq: Bidegree) -> usize {
        self.bidegrees.iter().position(|b| *b == pq).expect("bidegree out of range")
    }

    pub fn basis(&self, pq: Bidegree) -> &[Monomial] {
        &self.basis[self.index_of(pq)]
    }

    pub fn basis_at(&self, b: usize) -> &[Monomial] {
        &self.basis[b]
    }

    pub fn basis_indices(&self, pq: Bidegree) -> Vec<FormBasisIndex> {
        self.basis(pq).iter().map(|&m| FormBasisIndex::from_monomial(m, self.n)).collect()
    }

    pub fn dim(&self, pq: Bidegree) -> usize {
        self.basis(pq).len()
    }

    pub fn dim_at(&self, b: usize) -> usize {
        self.basis[b].len()
    }

    /// `(bidegree index, position)` of a monomial.
    pub fn locate(&self, m: Monomial) -> (usize, usize) {
        self.locate[&m]
    }

    /// Bidegrees of total degree `k`, in the order used by degree vectors.
    pub fn degree_bidegrees(&self, k: usize) -> Vec<Bidegree> {
        self.bidegrees.iter().copied().filter(|b| b.degree() == k).collect()
    }

    pub fn degree_dim(&self, k: usize) -> usize {
        self.degree_bidegrees(k).iter().map(|b| self.dim(*b)).sum()
    }

    /// Offset of the `pq` block inside a degree vector.
    pub fn degree_offset(&self, pq: Bidegree) -> usize {
        self.degree_bidegrees(pq.degree())
            .iter()
            .take_while(|b| **b != pq)
            .map(|b| self.dim(*b))
            .sum()
    }

    pub fn degree_basis(&self, k: usize) -> Vec<Monomial> {
        self.degree_bidegrees(k).iter().flat_map(|b| self.basis(*b).to_vec()).collect()
    }

    pub fn top(&self) -> Monomial {
        ((1u64 << (2 * self.n)) - 1) as Monomial
    }
}

/// A form with coefficients in `S`, stored sparsely by monomial.
#[derive(Clone, PartialEq)]
pub struct Form<S> {
    n: usize,
    terms: BTreeMap<Monomial, S>,
}

impl<S: fmt::Debug> fmt::Debug for Form<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(m, c)| format!("{:?}*{}", c, monomial_name(*m, self.n))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<S: Scalar> Form<S> {
    pub fn zero(n: usize) -> Self {
        Form { n, terms: BTreeMap::new() }
    }

    pub fn monomial(n: usize, m: Monomial, c: S) -> Self {
        let mut f = Self::zero(n);
        f.add_term(m, c);
        f
    }

    pub fn one(n: usize) -> Self {
        Self::monomial(n, 0, S::one())
    }

    /// ω^k, 1-based.
    pub fn holo(n: usize, k: usize) -> Self {
        Self::monomial(n, holo_gen(k - 1), S::one())
    }

    /// ω̄^k, 1-based.
    pub fn anti(n: usize, k: usize) -> Self {
        Self::monomial(n, anti_gen(k - 1, n), S::one())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, S> {
        &self.terms
    }

    pub fn coeff(&self, m: Monomial) -> S {
        self.terms.get(&m).cloned().unwrap_or_else(S::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: S) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.remove(&m).map_or(c.clone(), |old| old + c);
        if !entry.negligible() {
            self.terms.insert(m, entry);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.negligible())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-S::one()))
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            out.add_term(*m, c.clone() * s.clone());
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "wedge of forms on different dimensions");
        let mut out = Self::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if let Some(sign) = wedge_sign(*a, *b) {
                    let c = ca.clone() * cb.clone();
                    out.add_term(a | b, if sign > 0 { c } else { -c });
                }
            }
        }
        out
    }

    pub fn power(&self, k: usize) -> Self {
        let mut acc = Self::one(self.n);
        for _ in 0..k {
            acc = acc.wedge(self);
        }
        acc
    }

    pub fn conjugate(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            let (mc, sign) = conj_monomial(*m, self.n);
            let c = c.conj();
            out.add_term(mc, if sign > 0 { c } else { -c });
        }
        out
    }

    pub fn is_real(&self) -> bool {
        self.sub(&self.conjugate()).is_zero()
    }

    /// Component of bidegree `pq`.
    pub fn component(&self, pq: Bidegree) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            if bidegree_of(*m, self.n) == pq {
                out.add_term(*m, c.clone());
            }
        }
        out
    }

    pub fn bidegrees(&self) -> Vec<Bidegree> {
        let mut v: Vec<Bidegree> = self.terms.keys().map(|m| bidegree_of(*m, self.n)).collect();
        v.sort();
        v.dedup();
        v
    }

    /// The single total degree of a homogeneous nonzero form.
    pub fn degree(&self) -> Option<usize> {
        let degs: Vec<usize> = self.terms.keys().map(|m| m.count_ones() as usize).unique().collect();
        match degs.as_slice() {
            [d] => Some(*d),
            _ => None,
        }
    }

    /// θ_h: multiply each (p,q)-component by h^p.
    pub fn theta(&self, h: &S) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            let p = bidegree_of(*m, self.n).p;
            let mut f = c.clone();
            for _ in 0..p {
                f = f * h.clone();
            }
            out.add_term(*m, f);
        }
        out
    }

    pub fn to_vec(&self, space: &FormSpace, pq: Bidegree) -> Vec<S> {
        space.basis(pq).iter().map(|m| self.coeff(*m)).collect()
    }

    pub fn from_vec(space: &FormSpace, pq: Bidegree, v: &[S]) -> Self {
        let mut out = Self::zero(space.n());
        for (m, c) in space.basis(pq).iter().zip(v) {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn to_degree_vec(&self, space: &FormSpace, k: usize) -> Vec<S> {
        space.degree_basis(k).iter().map(|m| self.coeff(*m)).collect()
    }

    pub fn from_degree_vec(space: &FormSpace, k: usize, v: &[S]) -> Self {
        let mut out = Self::zero(space.n());
        for (m, c) in space.degree_basis(k).iter().zip(v) {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Form<T> {
        let mut out = Form::zero(self.n);
        for (m, c) in &self.terms {
            out.add_term(*m, f(c));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gq_int, Gq};

    #[test]
    fn basis_sizes() {
        let s2 = FormSpace::new(2);
        assert_eq!(s2.dim(Bidegree::new(1, 1)), 4);
        let s3 = FormSpace::new(3);
        assert_eq!(s3.dim(Bidegree::new(2, 3)), 3);
        assert_eq!(s3.basis(Bidegree::new(0, 0)), &[0]);
        assert_eq!(s3.degree_dim(3), 20);
        let idx = s3.basis_indices(Bidegree::new(1, 1));
        assert_eq!(idx[0], FormBasisIndex { holo: vec![1], anti: vec![1] });
        assert_eq!(idx[1], FormBasisIndex { holo: vec![1], anti: vec![2] });
        assert_eq!(idx[3], FormBasisIndex { holo: vec![2], anti: vec![1] });
    }

    #[test]
    fn wedge_signs() {
        let n = 2;
        let w1 = Form::<Gq>::holo(n, 1);
        let wb1 = Form::<Gq>::anti(n, 1);
        assert!(w1.wedge(&w1).is_zero());
        assert_eq!(w1.wedge(&wb1), wb1.wedge(&w1).scale(&gq_int(-1, 0)));
    }

    #[test]
    fn square_of_kahler_like_form() {
        let n = 2;
        let a = Form::<Gq>::holo(n, 1)
            .wedge(&Form::anti(n, 1))
            .add(&Form::holo(n, 2).wedge(&Form::anti(n, 2)));
        let sq = a.wedge(&a);
        // ω¹ω̄¹ω²ω̄² = -ω¹ω²ω̄¹ω̄², twice
        assert_eq!(sq, Form::monomial(n, 0b1111, gq_int(-2, 0)));
    }

    #[test]
    fn conjugation_sign() {
        let n = 2;
        let a = Form::<Gq>::holo(n, 1).wedge(&Form::anti(n, 2));
        let c = a.conjugate();
        assert_eq!(c, Form::holo(n, 2).wedge(&Form::anti(n, 1)).scale(&gq_int(-1, 0)));
        assert_eq!(c.conjugate(), a);
    }

    #[test]
    fn theta_scales_by_h_to_p() {
        let n = 2;
        let a = Form::<Gq>::holo(n, 1).wedge(&Form::anti(n, 1));
        assert_eq!(a.theta(&gq_int(2, 0)), a.scale(&gq_int(2, 0)));
        assert_eq!(a.theta(&gq_int(1, 0)), a);
    }
}
