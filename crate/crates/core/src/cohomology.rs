//! Cohomology of the invariant double complex.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::forms::{conj_monomial, Bidegree, Form, FormSpace};
use crate::linalg::{Matrix, Subspace};
use crate::model::{Differential, LieComplexModel};
use crate::operator::Operator;
use crate::scalar::{fmt_q, i_pow, ComplexScalar, Gq, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohomologyError {
    #[error("h must be nonzero")]
    ZeroH,
    #[error("theory {0} is not defined on {1}")]
    Mismatch(String, String),
    #[error("ambient mismatch: {0} vs {1}")]
    Ambient(usize, usize),
    #[error("not an E2 representative: {0}")]
    NotE2Rep(String),
    #[error("input is not d-closed")]
    NotClosed,
    #[error("wrong degree: {0}")]
    Degree(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Theory {
    DeRham,
    DolbeaultBar,
    DolbeaultPartial,
    BottChern,
    Aeppli,
    Dh(String),
    HBottChern(String),
    HAeppli(String),
}

impl Theory {
    pub fn dh(h: &Q) -> Self {
        Theory::Dh(fmt_q(h))
    }
    pub fn hbc(h: &Q) -> Self {
        Theory::HBottChern(fmt_q(h))
    }
    pub fn ha(h: &Q) -> Self {
        Theory::HAeppli(fmt_q(h))
    }

    pub fn label(&self) -> String {
        match self {
            Theory::DeRham => "deRham".into(),
            Theory::DolbeaultBar => "Dolbeault-dbar".into(),
            Theory::DolbeaultPartial => "Dolbeault-del".into(),
            Theory::BottChern => "BC".into(),
            Theory::Aeppli => "Aeppli".into(),
            Theory::Dh(h) => format!("d_h(h={h})"),
            Theory::HBottChern(h) => format!("hBC(h={h})"),
            Theory::HAeppli(h) => format!("hA(h={h})"),
        }
    }

    fn h(&self) -> Option<Q> {
        match self {
            Theory::Dh(h) | Theory::HBottChern(h) | Theory::HAeppli(h) => crate::scalar::parse_q(h),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Grading {
    Degree(usize),
    Bidegree(Bidegree),
}

impl std::fmt::Display for Grading {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Grading::Degree(k) => write!(f, "degree {k}"),
            Grading::Bidegree(b) => write!(f, "bidegree {b}"),
        }
    }
}

/// `numerator / (numerator ∩ denominator)` with chosen representatives.
#[derive(Clone, Debug)]
pub struct Quotient<S> {
    numerator: Subspace<S>,
    killed: Subspace<S>,
    reps: Matrix<S>,
}

/// Build a quotient; the denominator need not lie inside the numerator.
pub fn subquotient<S: ComplexScalar>(
    numerator: &Subspace<S>,
    denominator: &Subspace<S>,
) -> Result<Quotient<S>, CohomologyError> {
    if numerator.ambient() != denominator.ambient() {
        return Err(CohomologyError::Ambient(numerator.ambient(), denominator.ambient()));
    }
    let killed = numerator.intersect(denominator);
    let stacked = killed.basis().hstack(numerator.basis());
    let piv = stacked.independent_columns();
    let extra: Vec<usize> = piv.into_iter().filter(|&c| c >= killed.dim()).collect();
    let reps = stacked.select_cols(&extra);
    Ok(Quotient { numerator: numerator.clone(), killed, reps })
}

impl<S: ComplexScalar> Quotient<S> {
    pub fn dim(&self) -> usize {
        self.reps.cols()
    }

    pub fn numerator(&self) -> &Subspace<S> {
        &self.numerator
    }

    pub fn killed(&self) -> &Subspace<S> {
        &self.killed
    }

    pub fn reps(&self) -> &Matrix<S> {
        &self.reps
    }

    pub fn ambient(&self) -> usize {
        self.numerator.ambient()
    }

    /// Class coordinates of `v`, or `None` when `v` is outside the numerator.
    pub fn coordinates(&self, v: &[S]) -> Option<Vec<S>> {
        let full = self.killed.basis().hstack(&self.reps);
        if v.iter().all(|x| x.negligible()) {
            return Some(vec![S::zero(); self.dim()]);
        }
        if full.cols() == 0 {
            return None;
        }
        let c = full.solve(v)?;
        Some(c[self.killed.dim()..].to_vec())
    }

    pub fn is_zero_class(&self, v: &[S]) -> bool {
        self.killed.contains(v)
    }

    /// Coordinates of every column of `m`; panics if a column is outside the numerator.
    pub fn coordinate_matrix(&self, m: &Matrix<S>) -> Matrix<S> {
        let cols: Vec<Vec<S>> = m
            .columns()
            .iter()
            .map(|c| self.coordinates(c).expect("vector outside the numerator"))
            .collect();
        Matrix::from_cols(self.dim(), &cols)
    }
}

/// ∂, ∂̄ and d of a model in a chosen scalar field.
#[derive(Clone, Debug)]
pub struct Differentials<S> {
    pub partial: Operator<S>,
    pub pbar: Operator<S>,
    pub d: Operator<S>,
}

impl<S: ComplexScalar> Differentials<S> {
    pub fn new(model: &LieComplexModel) -> Self {
        let partial = model.operator::<S>(&Differential::Partial);
        let pbar = model.operator::<S>(&Differential::PartialBar);
        let d = partial.add(&pbar);
        Differentials { partial, pbar, d }
    }

    pub fn space(&self) -> &FormSpace {
        self.partial.space()
    }

    pub fn dh(&self, h: &Q) -> Operator<S> {
        self.partial.scale(&S::from_q(h)).add(&self.pbar)
    }

    pub fn d_minus_inv_h(&self, h: &Q) -> Operator<S> {
        self.dh(&(-Q::one() / h.clone()))
    }

    pub fn ddbar(&self) -> Operator<S> {
        self.partial.compose(&self.pbar)
    }
}

fn in_range(n: usize, p: i64, q: i64) -> Option<Bidegree> {
    if p < 0 || q < 0 || p > n as i64 || q > n as i64 {
        None
    } else {
        Some(Bidegree::new(p as usize, q as usize))
    }
}

fn bdim(space: &FormSpace, b: Option<Bidegree>) -> usize {
    b.map_or(0, |b| space.dim(b))
}

/// Block of `op` from `src` to `tgt`, with zero-size matrices outside the range.
pub fn block_or_zero<S: ComplexScalar>(op: &Operator<S>, src: Option<Bidegree>, tgt: Option<Bidegree>) -> Matrix<S> {
    let sp = op.space();
    match (src, tgt) {
        (Some(s), Some(t)) => op.block(s, t),
        _ => Matrix::zeros(bdim(sp, tgt), bdim(sp, src)),
    }
}

/// Matrix of `op` on total degree `k` with zero-size handling below degree 0.
pub fn degree_or_zero<S: ComplexScalar>(op: &Operator<S>, k: i64) -> Matrix<S> {
    let sp = op.space();
    let top = 2 * sp.n() as i64;
    let tk = k + op.degree() as i64;
    let rows = if (0..=top).contains(&tk) { sp.degree_dim(tk as usize) } else { 0 };
    if !(0..=top).contains(&k) {
        return Matrix::zeros(rows, 0);
    }
    op.degree_matrix(k as usize)
}

#[derive(Clone, Debug)]
pub struct CohomologyGroup<S> {
    pub theory: Theory,
    pub grading: Grading,
    pub quotient: Quotient<S>,
}

impl<S: ComplexScalar> CohomologyGroup<S> {
    pub fn dim(&self) -> usize {
        self.quotient.dim()
    }

    /// Representatives as forms.
    pub fn representatives(&self, space: &FormSpace) -> Vec<Form<S>> {
        self.quotient
            .reps()
            .columns()
            .iter()
            .map(|v| match self.grading {
                Grading::Degree(k) => Form::from_degree_vec(space, k, v),
                Grading::Bidegree(b) => Form::from_vec(space, b, v),
            })
            .collect()
    }

    pub fn coordinates_of(&self, space: &FormSpace, f: &Form<S>) -> Option<Vec<S>> {
        let v = match self.grading {
            Grading::Degree(k) => f.to_degree_vec(space, k),
            Grading::Bidegree(b) => f.to_vec(space, b),
        };
        self.quotient.coordinates(&v)
    }
}

/// Numerator and denominator spaces of a theory in a grading.
pub fn theory_spaces<S: ComplexScalar>(
    ops: &Differentials<S>,
    theory: &Theory,
    grading: Grading,
) -> Result<(Subspace<S>, Subspace<S>), CohomologyError> {
    let sp = ops.space();
    let n = sp.n();
    if let Some(h) = theory.h() {
        if h.is_zero() {
            return Err(CohomologyError::ZeroH);
        }
    } else if matches!(theory, Theory::Dh(_) | Theory::HBottChern(_) | Theory::HAeppli(_)) {
        return Err(CohomologyError::ZeroH);
    }
    match grading {
        Grading::Bidegree(b) => {
            let (p, q) = (b.p as i64, b.q as i64);
            let here = Some(b);
            let ker = |op: &Operator<S>, dp: i64, dq: i64| {
                Subspace::kernel(&block_or_zero(op, here, in_range(n, p + dp, q + dq)))
            };
            let im = |op: &Operator<S>, dp: i64, dq: i64| {
                Subspace::image(&block_or_zero(op, in_range(n, p - dp, q - dq), here))
            };
            let ddbar = ops.ddbar();
            match theory {
                Theory::DolbeaultBar => Ok((ker(&ops.pbar, 0, 1), im(&ops.pbar, 0, 1))),
                Theory::DolbeaultPartial => Ok((ker(&ops.partial, 1, 0), im(&ops.partial, 1, 0))),
                Theory::BottChern => {
                    Ok((ker(&ops.partial, 1, 0).intersect(&ker(&ops.pbar, 0, 1)), im(&ddbar, 1, 1)))
                }
                Theory::Aeppli => Ok((ker(&ddbar, 1, 1), im(&ops.partial, 1, 0).sum(&im(&ops.pbar, 0, 1)))),
                other => Err(CohomologyError::Mismatch(other.label(), grading.to_string())),
            }
        }
        Grading::Degree(k) => {
            if k > 2 * n {
                return Err(CohomologyError::Mismatch(theory.label(), grading.to_string()));
            }
            let k = k as i64;
            let ker = |op: &Operator<S>| Subspace::kernel(&degree_or_zero(op, k));
            let im = |op: &Operator<S>| Subspace::image(&degree_or_zero(op, k - op.degree() as i64));
            let ddbar = ops.ddbar();
            match theory {
                Theory::DeRham => Ok((ker(&ops.d), im(&ops.d))),
                Theory::DolbeaultBar => Ok((ker(&ops.pbar), im(&ops.pbar))),
                Theory::DolbeaultPartial => Ok((ker(&ops.partial), im(&ops.partial))),
                Theory::BottChern => Ok((ker(&ops.partial).intersect(&ker(&ops.pbar)), im(&ddbar))),
                Theory::Aeppli => Ok((ker(&ddbar), im(&ops.partial).sum(&im(&ops.pbar)))),
                Theory::Dh(_) => {
                    let dh = ops.dh(&theory.h().expect("h"));
                    Ok((ker(&dh), im(&dh)))
                }
                Theory::HBottChern(_) => {
                    let h = theory.h().expect("h");
                    let a = ops.dh(&h);
                    let b = ops.d_minus_inv_h(&h);
                    Ok((ker(&a).intersect(&ker(&b)), im(&a.compose(&b))))
                }
                Theory::HAeppli(_) => {
                    let h = theory.h().expect("h");
                    let a = ops.dh(&h);
                    let b = ops.d_minus_inv_h(&h);
                    Ok((ker(&a.compose(&b)), im(&a).sum(&im(&b))))
                }
            }
        }
    }
}

pub fn cohomology<S: ComplexScalar>(
    ops: &Differentials<S>,
    theory: &Theory,
    grading: Grading,
) -> Result<CohomologyGroup<S>, CohomologyError> {
    let (num, den) = theory_spaces(ops, theory, grading)?;
    Ok(CohomologyGroup { theory: theory.clone(), grading, quotient: subquotient(&num, &den)? })
}

/// Exact cohomology of a model.
pub fn model_cohomology(
    model: &LieComplexModel,
    theory: &Theory,
    grading: Grading,
) -> Result<CohomologyGroup<Gq>, CohomologyError> {
    cohomology(&Differentials::<Gq>::new(model), theory, grading)
}

/// Dimension table over all bidegrees, indexed `[p][q]`.
pub fn bidegree_table<S: ComplexScalar>(ops: &Differentials<S>, theory: &Theory) -> Vec<Vec<usize>> {
    let n = ops.space().n();
    (0..=n)
        .map(|p| {
            (0..=n)
                .map(|q| cohomology(ops, theory, Grading::Bidegree(Bidegree::new(p, q))).expect("bidegree theory").dim())
                .collect()
        })
        .collect()
}

pub fn betti<S: ComplexScalar>(ops: &Differentials<S>) -> Vec<usize> {
    let n = ops.space().n();
    (0..=2 * n).map(|k| cohomology(ops, &Theory::DeRham, Grading::Degree(k)).expect("degree").dim()).collect()
}

/// One page of the Frölicher spectral sequence.
#[derive(Clone, Debug)]
pub struct SpectralPage<S> {
    pub r: usize,
    /// `dims[p][q] = e_r^{p,q}`.
    pub dims: Vec<Vec<usize>>,
    pub quotients: BTreeMap<Bidegree, Quotient<S>>,
    /// d_r from `(p,q)` in representative coordinates.
    pub d: BTreeMap<Bidegree, Matrix<S>>,
    /// For each representative of E_r^{p,q}: its zigzag x_0..x_{r-1}.
    pub zigzags: BTreeMap<Bidegree, Vec<Vec<Form<S>>>>,
}

impl<S: ComplexScalar> SpectralPage<S> {
    pub fn dim(&self, b: Bidegree) -> usize {
        self.dims[b.p][b.q]
    }

    pub fn total(&self, k: usize) -> usize {
        let n = self.dims.len() - 1;
        (0..=n).filter(|p| k >= *p && k - p <= n).map(|p| self.dims[p][k - p]).sum()
    }

    pub fn d_is_zero(&self) -> bool {
        self.d.values().all(|m| m.is_zero())
    }
}

/// Zigzag machinery for one model.
pub struct Zigzags<'a, S> {
    ops: &'a Differentials<S>,
    n: usize,
}

impl<'a, S: ComplexScalar> Zigzags<'a, S> {
    pub fn new(ops: &'a Differentials<S>) -> Self {
        Zigzags { ops, n: ops.space().n() }
    }

    fn dp(&self, a: Option<Bidegree>) -> Matrix<S> {
        let t = a.and_then(|b| in_range(self.n, b.p as i64 + 1, b.q as i64));
        block_or_zero(&self.ops.partial, a, t)
    }

    fn dpb(&self, a: Option<Bidegree>) -> Matrix<S> {
        let t = a.and_then(|b| in_range(self.n, b.p as i64, b.q as i64 + 1));
        block_or_zero(&self.ops.pbar, a, t)
    }

    fn at(&self, p: i64, q: i64) -> Option<Bidegree> {
        in_range(self.n, p, q)
    }

    /// Elements of A^{p,q} that can be followed by `j` further zigzag steps.
    fn continuable(&self, p: i64, q: i64, j: usize) -> Subspace<S> {
        let here = self.at(p, q);
        let dim = bdim(self.ops.space(), here);
        if j == 0 {
            return Subspace::full(dim);
        }
        let next = self.at(p + 1, q - 1);
        let c_next = self.continuable(p + 1, q - 1, j - 1);
        let target = if next.is_some() { c_next.map(&self.dpb(next)) } else { Subspace::zero(bdim(self.ops.space(), self.at(p + 1, q))) };
        Subspace::preimage(&self.dp(here), &target)
    }

    /// Z_r^{p,q}.
    pub fn z(&self, p: i64, q: i64, r: usize) -> Subspace<S> {
        let here = self.at(p, q);
        Subspace::kernel(&self.dpb(here)).intersect(&self.continuable(p, q, r - 1))
    }

    /// Last members at (p,q) of zigzags of length `s` starting ∂̄-closed.
    fn tails(&self, p: i64, q: i64, s: usize) -> Subspace<S> {
        let here = self.at(p, q);
        let dim = bdim(self.ops.space(), here);
        if s == 0 || here.is_none() {
            return Subspace::zero(dim);
        }
        if s == 1 {
            return Subspace::kernel(&self.dpb(here));
        }
        let prev = self.at(p - 1, q + 1);
        let before = self.tails(p - 1, q + 1, s - 1);
        let target = before.map(&self.dp(prev));
        let target = if prev.is_some() { target } else { Subspace::zero(bdim(self.ops.space(), self.at(p, q + 1))) };
        Subspace::preimage(&self.dpb(here), &target)
    }

    /// B_r^{p,q} = Im ∂̄ + ∂(tails of length r-1 at (p-1,q)).
    pub fn b(&self, p: i64, q: i64, r: usize) -> Subspace<S> {
        let here = self.at(p, q);
        let below = self.at(p, q - 1);
        let im_dbar = Subspace::image(&block_or_zero(&self.ops.pbar, below, here));
        let left = self.at(p - 1, q);
        let t = self.tails(p - 1, q, r - 1);
        let im_d = t.map(&block_or_zero(&self.ops.partial, left, here));
        im_dbar.sum(&im_d)
    }

    /// Extend x_0 ∈ Z_r to a zigzag x_0..x_{r-1}.
    pub fn extend(&self, p: i64, q: i64, r: usize, x0: &[S]) -> Vec<Vec<S>> {
        let mut chain = vec![x0.to_vec()];
        for i in 1..r {
            let (pi, qi) = (p + i as i64, q - i as i64);
            let here = self.at(pi, qi);
            if here.is_none() {
                chain.push(Vec::new());
                continue;
            }
            let prev_b = self.at(pi - 1, qi + 1);
            let rhs = if prev_b.is_some() {
                self.dp(prev_b).mul_vec(&chain[i - 1])
            } else {
                vec![S::zero(); self.dpb(here).rows()]
            };
            let allowed = self.continuable(pi, qi, r - 1 - i);
            let a = self.dpb(here).mul(allowed.basis());
            let c = a.solve(&rhs).expect("zigzag cannot be extended");
            chain.push(allowed.basis().mul_vec(&c));
        }
        chain
    }

    pub fn space_of(&self, p: i64, q: i64) -> Option<Bidegree> {
        self.at(p, q)
    }

    fn partial_of_last(&self, p: i64, q: i64, r: usize, chain: &[Vec<S>]) -> Vec<S> {
        let last = self.at(p + r as i64 - 1, q - r as i64 + 1);
        self.dp(last).mul_vec(chain.last().expect("nonempty zigzag"))
    }
}

/// Frölicher pages E_1..E_{r_max}.
pub fn frolicher_pages<S: ComplexScalar>(ops: &Differentials<S>, r_max: usize) -> Vec<SpectralPage<S>> {
    let n = ops.space().n();
    let zz = Zigzags::new(ops);
    let mut pages = Vec::new();
    for r in 1..=r_max.max(1) {
        let mut quotients = BTreeMap::new();
        let mut dims = vec![vec![0; n + 1]; n + 1];
        for p in 0..=n {
            for q in 0..=n {
                let (pi, qi) = (p as i64, q as i64);
                let quo = subquotient(&zz.z(pi, qi, r), &zz.b(pi, qi, r)).expect("same ambient");
                dims[p][q] = quo.dim();
                quotients.insert(Bidegree::new(p, q), quo);
            }
        }
        let mut d = BTreeMap::new();
        let mut zigzags = BTreeMap::new();
        for p in 0..=n {
            for q in 0..=n {
                let b = Bidegree::new(p, q);
                let (pi, qi) = (p as i64, q as i64);
                let quo = &quotients[&b];
                let mut chains = Vec::new();
                let tgt = in_range(n, pi + r as i64, qi - r as i64 + 1);
                let mut cols = Vec::new();
                for rep in quo.reps().columns() {
                    let chain = zz.extend(pi, qi, r, &rep);
                    if let Some(t) = tgt {
                        let img = zz.partial_of_last(pi, qi, r, &chain);
                        let coords = quotients[&t].coordinates(&img).expect("d_r image outside Z_r");
                        cols.push(coords);
                    }
                    let forms: Vec<Form<S>> = chain
                        .iter()
                        .enumerate()
                        .map(|(i, v)| match in_range(n, (p + i) as i64, q as i64 - i as i64) {
                            Some(bi) => Form::from_vec(ops.space(), bi, v),
                            None => Form::zero(n),
                        })
                        .collect();
                    chains.push(forms);
                }
                let rows = tgt.map_or(0, |t| quotients[&t].dim());
                d.insert(b, Matrix::from_cols(rows, &cols));
                zigzags.insert(b, chains);
            }
        }
        pages.push(SpectralPage { r, dims, quotients, d, zigzags });
    }
    pages
}

/// Smallest r with E_r = E_∞ (pages are computed up to n+1).
pub fn degeneration_page<S: ComplexScalar>(pages: &[SpectralPage<S>]) -> usize {
    let last = pages.last().expect("pages");
    pages.iter().find(|pg| pg.dims == last.dims).map_or(last.r, |pg| pg.r)
}

/// Witness `(u, v)` with α = ∂u + ∂̄v and ∂̄u = 0, if α is zero in E_2.
pub fn e2_class_is_zero<S: ComplexScalar>(
    ops: &Differentials<S>,
    alpha: &Form<S>,
    pq: Bidegree,
) -> Result<Option<(Form<S>, Form<S>)>, CohomologyError> {
    let sp = ops.space();
    let n = sp.n();
    let zz = Zigzags::new(ops);
    let a = alpha.to_vec(sp, pq);
    if !alpha.sub(&Form::from_vec(sp, pq, &a)).is_zero() {
        return Err(CohomologyError::NotE2Rep(format!("form is not of bidegree {pq}")));
    }
    let (p, q) = (pq.p as i64, pq.q as i64);
    if !zz.z(p, q, 2).contains(&a) {
        return Err(CohomologyError::NotE2Rep("needs ∂̄α = 0 and ∂α ∈ Im ∂̄".into()));
    }
    let left = in_range(n, p - 1, q);
    let below = in_range(n, p, q - 1);
    let kb = Subspace::kernel(&zz.dpb(left));
    let du = block_or_zero(&ops.partial, left, Some(pq)).mul(kb.basis());
    let dv = block_or_zero(&ops.pbar, below, Some(pq));
    let sys = du.hstack(&dv);
    let zero_u = Form::zero(n);
    if a.iter().all(|x| x.negligible()) {
        return Ok(Some((zero_u.clone(), zero_u)));
    }
    if sys.cols() == 0 {
        return Ok(None);
    }
    match sys.solve(&a) {
        None => Ok(None),
        Some(c) => {
            let k = kb.dim();
            let u = left.map_or(Form::zero(n), |l| Form::from_vec(sp, l, &kb.basis().mul_vec(&c[..k])));
            let v = below.map_or(Form::zero(n), |b| Form::from_vec(sp, b, &c[k..]));
            Ok(Some((u, v)))
        }
    }
}

/// The map T: H^{2n-2}_DR → E_2^{n-2,n}, α ↦ [[α^{n-2,n}]].
pub fn map_t<S: ComplexScalar>(
    ops: &Differentials<S>,
    page2: &SpectralPage<S>,
    alpha: &Form<S>,
) -> Result<Vec<S>, CohomologyError> {
    let sp = ops.space();
    let n = sp.n();
    if n < 2 {
        return Err(CohomologyError::Degree("T needs n >= 2".into()));
    }
    if alpha.degree().is_some_and(|d| d != 2 * n - 2) {
        return Err(CohomologyError::Degree(format!("expected a {}-form", 2 * n - 2)));
    }
    if !ops.d.apply(alpha).is_zero() {
        return Err(CohomologyError::NotClosed);
    }
    let b = Bidegree::new(n - 2, n);
    let comp = alpha.component(b).to_vec(sp, b);
    page2.quotients[&b]
        .coordinates(&comp)
        .ok_or_else(|| CohomologyError::NotE2Rep("(n-2,n) component outside Z_2".into()))
}

/// Matrix of T on a de Rham basis, with its rank.
pub fn t_matrix<S: ComplexScalar>(ops: &Differentials<S>, page2: &SpectralPage<S>) -> Matrix<S> {
    let sp = ops.space();
    let n = sp.n();
    let h = cohomology(ops, &Theory::DeRham, Grading::Degree(2 * n - 2)).expect("degree");
    let cols: Vec<Vec<S>> =
        h.representatives(sp).iter().map(|f| map_t(ops, page2, f).expect("closed representative")).collect();
    Matrix::from_cols(page2.dim(Bidegree::new(n - 2, n)), &cols)
}

/// `∫` of a top-degree form with the positive volume form normalized to 1.
pub fn integrate(space: &FormSpace, f: &Form<Gq>) -> Gq {
    let n = space.n() as i64;
    // vol = i^n (-1)^{n(n-1)/2} ω^{1..n}∧ω̄^{1..n}
    let sigma = i_pow(n) * Gq::from(if (n * (n - 1) / 2) % 2 == 0 { Q::one() } else { -Q::one() });
    f.coeff(space.top()) / sigma
}

/// Float version of [`integrate`] for generic scalars.
pub fn integrate_s<S: ComplexScalar>(space: &FormSpace, f: &Form<S>) -> S {
    let n = space.n() as i64;
    let sign = if (n * (n - 1) / 2) % 2 == 0 { Q::one() } else { -Q::one() };
    let sigma = S::from_gq(&(i_pow(n) * Gq::from(sign)));
    f.coeff(space.top()) / sigma
}

/// Pairing matrix E_2^{p,q} × E_2^{n-p,n-q} → ℂ, [[a]],[[b]] ↦ ∫ a∧b.
pub fn duality_pairing(ops: &Differentials<Gq>, page2: &SpectralPage<Gq>, pq: Bidegree) -> Matrix<Gq> {
    let sp = ops.space();
    let n = sp.n();
    let dual = Bidegree::new(n - pq.p, n - pq.q);
    let a = page2.quotients[&pq].reps().columns();
    let b = page2.quotients[&dual].reps().columns();
    Matrix::from_fn(a.len(), b.len(), |i, j| {
        let fa = Form::from_vec(sp, pq, &a[i]);
        let fb = Form::from_vec(sp, dual, &b[j]);
        integrate(sp, &fa.wedge(&fb))
    })
}

/// Real form of a complex vector over bidegree `b`: `[Re; Im]` coordinates.
pub fn realify(v: &[Gq]) -> Vec<Q> {
    v.iter().map(|z| z.re.clone()).chain(v.iter().map(|z| z.im.clone())).collect()
}

pub fn complexify(v: &[Q]) -> Vec<Gq> {
    let m = v.len() / 2;
    (0..m).map(|i| Gq::new(v[i].clone(), v[m + i].clone())).collect()
}

/// Real-linear matrix of a complex matrix acting on `[Re; Im]`.
pub fn real_matrix(a: &Matrix<Gq>) -> Matrix<Q> {
    let (r, c) = (a.rows(), a.cols());
    Matrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = a.get(i % r.max(1), j % c.max(1));
        match (i < r, j < c) {
            (true, true) => z.re.clone(),
            (true, false) => -z.im.clone(),
            (false, true) => z.im.clone(),
            (false, false) => z.re.clone(),
        }
    })
}

/// Real basis of the conjugation-fixed forms of bidegree (k,k).
pub fn real_basis(space: &FormSpace, b: Bidegree) -> Vec<Form<Gq>> {
    assert_eq!(b.p, b.q, "real forms live in bidegree (k,k)");
    let n = space.n();
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for &m in space.basis(b) {
        if seen.contains(&m) {
            continue;
        }
        let (cm, sign) = conj_monomial(m, n);
        seen.insert(m);
        seen.insert(cm);
        let f = Form::monomial(n, m, Gq::one());
        let cf = f.conjugate();
        if cm == m {
            // conj(m) = ±m: either m or i·m is real
            if sign > 0 {
                out.push(f);
            } else {
                out.push(f.scale(&Gq::new(Q::zero(), Q::one())));
            }
        } else {
            out.push(f.add(&cf));
            out.push(f.sub(&cf).scale(&Gq::new(Q::zero(), Q::one())));
        }
    }
    out
}

/// E_2^{n-2,n}(X)_ℝ as a real subspace of the class coordinates, with the checks of
/// its two defining properties.
#[derive(Clone, Debug)]
pub struct RealE2 {
    /// Real span in `[Re; Im]` coordinates of E_2^{n-2,n}.
    pub space: Subspace<Q>,
    pub inside_ker_d2: bool,
    pub t_real_surjective: bool,
}

impl RealE2 {
    pub fn contains_class(&self, coords: &[Gq]) -> bool {
        self.space.contains(&realify(coords))
    }

    pub fn real_dim(&self) -> usize {
        self.space.dim()
    }

    /// Basis of the real space as complex class coordinates.
    pub fn basis_coords(&self) -> Vec<Vec<Gq>> {
        self.space.vectors().iter().map(|v| complexify(v)).collect()
    }
}

pub fn real_e2_space(ops: &Differentials<Gq>, page2: &SpectralPage<Gq>) -> RealE2 {
    let sp = ops.space();
    let n = sp.n();
    let b = Bidegree::new(n - 2, n);
    let mid = Bidegree::new(n - 1, n - 1);
    let tgt = Bidegree::new(n - 1, n);
    let dpart = ops.partial.block(b, tgt);
    let dbar = ops.pbar.block(mid, tgt);
    // unknowns: α (complex, as [Re; Im]) and real coefficients of Ω
    let omegas = real_basis(sp, mid);
    let omega_cols: Vec<Vec<Gq>> = omegas.iter().map(|f| dbar.mul_vec(&f.to_vec(sp, mid))).collect();
    let a_real = real_matrix(&dpart);
    let om_real = Matrix::from_cols(2 * sp.dim(tgt), &omega_cols.iter().map(|c| realify(c)).collect::<Vec<_>>());
    let sys = a_real.hstack(&om_real.scale(&-Q::one()));
    let ker = sys.kernel();
    let na = 2 * sp.dim(b);
    let quo = &page2.quotients[&b];
    let mut coords = Vec::new();
    for col in ker.columns() {
        let alpha = complexify(&col[..na]);
        let c = quo.coordinates(&alpha).expect("potential forms are E2 representatives");
        coords.push(realify(&c));
    }
    let e2 = quo.dim();
    let space = Subspace::span_vectors(2 * e2, &coords);

    let d2 = &page2.d[&b];
    let inside_ker_d2 = space.vectors().iter().all(|v| d2.mul_vec(&complexify(v)).iter().all(|x| x.is_zero()));

    // T on real d-closed (2n-2)-forms
    let k = 2 * n - 2;
    let kd = Subspace::kernel(&ops.d.degree_matrix(k));
    let mut t_vals = Vec::new();
    for v in kd.vectors() {
        let f = Form::from_degree_vec(sp, k, &v);
        let c = f.conjugate();
        let re = f.add(&c);
        let im = f.sub(&c).scale(&Gq::new(Q::zero(), -Q::one()));
        for g in [re, im] {
            let coords = map_t(ops, page2, &g).expect("closed form");
            t_vals.push(realify(&coords));
        }
    }
    let image = Subspace::span_vectors(2 * e2, &t_vals);
    let t_real_surjective = image.same_as(&space);
    RealE2 { space, inside_ker_d2, t_real_surjective }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;

    fn iwasawa() -> LieComplexModel {
        parse_model("model iwasawa\nn 3\nd f1 = 0\nd f2 = 0\nd f3 = f1^f2").unwrap()
    }

    #[test]
    fn quotient_edge_cases() {
        let v = Subspace::<Gq>::full(3);
        assert_eq!(subquotient(&v, &v).unwrap().dim(), 0);
        assert_eq!(subquotient(&v, &Subspace::zero(3)).unwrap().dim(), 3);
        assert!(subquotient(&v, &Subspace::zero(2)).is_err());
    }

    #[test]
    fn iwasawa_dolbeault() {
        let ops = Differentials::<Gq>::new(&iwasawa());
        let h = |p, q| cohomology(&ops, &Theory::DolbeaultBar, Grading::Bidegree(Bidegree::new(p, q))).unwrap().dim();
        assert_eq!(h(1, 0), 3);
        assert_eq!(h(0, 1), 2);
        assert_eq!(betti(&ops)[1], 4);
    }

    #[test]
    fn iwasawa_pages() {
        let ops = Differentials::<Gq>::new(&iwasawa());
        let pages = frolicher_pages(&ops, 4);
        assert_eq!(pages[0].dims[1][0], 3);
        assert_eq!(pages[1].dims[1][0], 2);
        let b = betti(&ops);
        for k in 0..=6 {
            assert_eq!(pages[3].total(k), b[k], "k={k}");
        }
    }

    #[test]
    fn e2_zero_witness() {
        let m = iwasawa();
        let ops = Differentials::<Gq>::new(&m);
        let a = Form::<Gq>::holo(3, 1).wedge(&Form::holo(3, 2));
        let (u, v) = e2_class_is_zero(&ops, &a, Bidegree::new(2, 0)).unwrap().unwrap();
        assert!(ops.pbar.apply(&u).is_zero());
        assert_eq!(ops.partial.apply(&u).add(&ops.pbar.apply(&v)), a);
        let w1 = Form::<Gq>::holo(3, 1);
        assert!(e2_class_is_zero(&ops, &w1, Bidegree::new(1, 0)).unwrap().is_none());
    }

    #[test]
    fn zero_h_rejected() {
        let ops = Differentials::<Gq>::new(&iwasawa());
        assert_eq!(
            cohomology(&ops, &Theory::dh(&Q::zero()), Grading::Degree(1)).unwrap_err(),
            CohomologyError::ZeroH
        );
    }
}
