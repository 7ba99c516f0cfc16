//! Hermitian metrics, induced inner products, adjoints and Laplacians.

use std::sync::Arc;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cohomology::{Differentials, Quotient, SpectralPage};
use crate::forms::{anti_gen, holo_gen, Bidegree, Form, FormSpace, Monomial};
use crate::linalg::{Matrix, Subspace};
use crate::model::LieComplexModel;
use crate::operator::Operator;
use crate::scalar::{fmt_gq, fmt_q, gq_from_q, q_to_f64, ComplexScalar, Gq, C64, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("metric matrix is not {0}x{0}")]
    Dimension(usize),
    #[error("metric matrix is not Hermitian")]
    NotHermitian,
    #[error("metric is not positive definite: leading minor {index} = {value}")]
    NotPositive { index: usize, value: String },
    #[error("h must be nonzero")]
    ZeroH,
    #[error("right-hand side is not in the image")]
    NotInImage,
    #[error("form is not of bidegree (1,1) or not real")]
    NotMetricForm,
    #[error("{0}")]
    Falsified(String),
}

/// Leading principal minors of a Hermitian matrix; they are real.
pub fn sylvester_minors(m: &Matrix<Gq>) -> Vec<Q> {
    (1..=m.rows())
        .map(|k| {
            let idx: Vec<usize> = (0..k).collect();
            m.submatrix(&idx, &idx).determinant().re
        })
        .collect()
}

pub fn is_hermitian(m: &Matrix<Gq>) -> bool {
    m.rows() == m.cols() && m.h() == *m
}

/// Exact positive definiteness test; `Err(index)` names the first non-positive minor (1-based).
pub fn positive_definite(m: &Matrix<Gq>) -> Result<Vec<Q>, (usize, Q)> {
    let minors = sylvester_minors(m);
    for (k, v) in minors.iter().enumerate() {
        if *v <= Q::zero() {
            return Err((k + 1, v.clone()));
        }
    }
    Ok(minors)
}

/// A Hermitian metric ω = i Σ g_{jk̄} ω^j∧ω̄^k, stored by its Gram matrix g.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMetric {
    g: Matrix<Gq>,
}

impl HermitianMetric {
    pub fn new(g: Matrix<Gq>) -> Result<Self, MetricError> {
        if g.rows() != g.cols() {
            return Err(MetricError::Dimension(g.rows()));
        }
        if !is_hermitian(&g) {
            return Err(MetricError::NotHermitian);
        }
        positive_definite(&g).map_err(|(index, v)| MetricError::NotPositive { index, value: fmt_q(&v) })?;
        Ok(HermitianMetric { g })
    }

    pub fn identity(n: usize) -> Self {
        HermitianMetric { g: Matrix::identity(n) }
    }

    /// The model's declared metric, or the identity Gram.
    pub fn for_model(model: &LieComplexModel) -> Result<Self, MetricError> {
        match model.metric() {
            Some(g) => Self::new(g.clone()),
            None => Ok(Self::identity(model.n())),
        }
    }

    pub fn gram(&self) -> &Matrix<Gq> {
        &self.g
    }

    pub fn n(&self) -> usize {
        self.g.rows()
    }

    pub fn scale(&self, lambda: &Q) -> Self {
        HermitianMetric { g: self.g.scale(&gq_from_q(lambda.clone())) }
    }

    /// The (1,1)-form ω.
    pub fn form(&self) -> Form<Gq> {
        let n = self.n();
        let mut f = Form::zero(n);
        for j in 0..n {
            for k in 0..n {
                let c = self.g.get(j, k).clone() * Gq::new(Q::zero(), Q::one());
                let m = Form::monomial(n, holo_gen(j), Gq::one()).wedge(&Form::monomial(n, anti_gen(k, n), Gq::one()));
                f = f.add(&m.scale(&c));
            }
        }
        f
    }

    /// Read g back from a real (1,1)-form ω = i Σ g_{jk̄} ω^j∧ω̄^k.
    pub fn coefficient_matrix(omega: &Form<Gq>) -> Result<Matrix<Gq>, MetricError> {
        let n = omega.n();
        let b = Bidegree::new(1, 1);
        if !omega.sub(&omega.component(b)).is_zero() || !omega.is_real() {
            return Err(MetricError::NotMetricForm);
        }
        let minus_i = Gq::new(Q::zero(), -Q::one());
        Ok(Matrix::from_fn(n, n, |j, k| omega.coeff(holo_gen(j) | anti_gen(k, n)) * minus_i.clone()))
    }

    pub fn from_form(omega: &Form<Gq>) -> Result<Self, MetricError> {
        Self::new(Self::coefficient_matrix(omega)?)
    }

    /// Exact test dω = 0.
    pub fn is_kahler(&self, model: &LieComplexModel) -> bool {
        model.d_form(&self.form()).is_zero()
    }

    pub fn minors(&self) -> Vec<Q> {
        sylvester_minors(&self.g)
    }
}

/// Per-bidegree Gram matrices of the pointwise inner product induced by a metric.
///
/// `gram[b][(r, c)] = ⟨e_c, e_r⟩`, so that `⟨x, y⟩ = yᴴ G x`.
#[derive(Clone, Debug)]
pub struct InnerProduct<S> {
    space: Arc<FormSpace>,
    gram: Vec<Matrix<S>>,
    gram_inv: Vec<Matrix<S>>,
}

fn indices(m: Monomial, lo: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|k| m & (1 << (lo + k)) != 0).collect()
}

impl InnerProduct<Gq> {
    pub fn new(space: Arc<FormSpace>, metric: &HermitianMetric) -> Self {
        let n = space.n();
        let ginv = metric.gram().inverse().expect("positive definite metric is invertible");
        // ⟨ω^a, ω^b⟩ = (g⁻¹)_{ba}, ⟨ω̄^a, ω̄^b⟩ = (g⁻¹)_{ab}
        let t10 = ginv.transpose();
        let t01 = ginv.clone();
        let mut gram = Vec::new();
        let mut gram_inv = Vec::new();
        for (b, _) in space.bidegrees().iter().enumerate() {
            let basis = space.basis_at(b);
            let g = Matrix::from_fn(basis.len(), basis.len(), |r, c| {
                let (ic, jc) = (indices(basis[c], 0, n), indices(basis[c], n, n));
                let (ir, jr) = (indices(basis[r], 0, n), indices(basis[r], n, n));
                t10.submatrix(&ic, &ir).determinant() * t01.submatrix(&jc, &jr).determinant()
            });
            gram_inv.push(g.inverse().expect("Gram matrices are positive definite"));
            gram.push(g);
        }
        InnerProduct { space, gram, gram_inv }
    }
}

impl<S: ComplexScalar> InnerProduct<S> {
    pub fn space(&self) -> &Arc<FormSpace> {
        &self.space
    }

    pub fn gram(&self, b: Bidegree) -> &Matrix<S> {
        &self.gram[self.space.index_of(b)]
    }

    pub fn grams(&self) -> &[Matrix<S>] {
        &self.gram
    }

    /// Block-diagonal Gram on total degree `k`.
    pub fn degree_gram(&self, k: usize) -> Matrix<S> {
        let sp = &self.space;
        let d = sp.degree_dim(k);
        let mut m = Matrix::zeros(d, d);
        for b in sp.degree_bidegrees(k) {
            let o = sp.degree_offset(b);
            let g = self.gram(b);
            for r in 0..g.rows() {
                for c in 0..g.cols() {
                    m.set(o + r, o + c, g.get(r, c).clone());
                }
            }
        }
        m
    }

    pub fn adjoint(&self, op: &Operator<S>) -> Operator<S> {
        op.adjoint(&self.gram, &self.gram_inv)
    }

    pub fn inner(&self, x: &Form<S>, y: &Form<S>) -> S {
        let mut acc = S::zero();
        for b in x.bidegrees() {
            let xv = x.to_vec(&self.space, b);
            let yv = y.to_vec(&self.space, b);
            let gx = self.gram(b).mul_vec(&xv);
            for (a, c) in gx.iter().zip(&yv) {
                acc = acc + a.clone() * c.conj();
            }
        }
        acc
    }

    pub fn map_scalars<T: ComplexScalar>(&self, f: impl Fn(&S) -> T + Copy) -> InnerProduct<T> {
        InnerProduct {
            space: self.space.clone(),
            gram: self.gram.iter().map(|m| m.map(f)).collect(),
            gram_inv: self.gram_inv.iter().map(|m| m.map(f)).collect(),
        }
    }
}

/// The unique x ∈ Im A* with A x = b; `None` when b ∉ Im A.
pub fn minimal_norm_solve<S: ComplexScalar>(a: &Matrix<S>, b: &[S], g_src: &Matrix<S>, g_tgt: &Matrix<S>) -> Option<Vec<S>> {
    if b.iter().all(|x| x.negligible()) {
        return Some(vec![S::zero(); a.cols()]);
    }
    let g_src_inv = g_src.inverse()?;
    let a_star = g_src_inv.mul(&a.h()).mul(g_tgt);
    let aa = a.mul(&a_star);
    let y = aa.solve(b)?;
    let x = a_star.mul_vec(&y);
    if a.mul_vec(&x) != b {
        return None;
    }
    Some(x)
}

/// Minimal-norm solution of `op x = b` for a homogeneous `b`.
pub fn minimal_norm_solution(op: &Operator<Gq>, b: &Form<Gq>, ip: &InnerProduct<Gq>) -> Result<Form<Gq>, MetricError> {
    let n = ip.space().n();
    let Some(k) = b.degree() else {
        return Ok(Form::zero(n));
    };
    let src = k as i64 - op.degree() as i64;
    if src < 0 || src > 2 * n as i64 {
        return Err(MetricError::NotInImage);
    }
    let src = src as usize;
    let sp = ip.space();
    let a = op.degree_matrix(src);
    let x = minimal_norm_solve(&a, &b.to_degree_vec(sp, k), &ip.degree_gram(src), &ip.degree_gram(k))
        .ok_or(MetricError::NotInImage)?;
    Ok(Form::from_degree_vec(sp, src, &x))
}

/// Orthogonal projector onto `ker a` inside one block, w.r.t. `g`.
fn kernel_projector<S: ComplexScalar>(a: &Matrix<S>, g: &Matrix<S>) -> Matrix<S> {
    let k = a.kernel();
    if k.cols() == 0 {
        return Matrix::zeros(a.cols(), a.cols());
    }
    let kh = k.h();
    let m = kh.mul(g).mul(&k).inverse().expect("Gram restricted to a subspace is invertible");
    k.mul(&m).mul(&kh).mul(g)
}

/// All metric-dependent operators for one (model, metric, h).
#[derive(Clone, Debug)]
pub struct OperatorBundle<S> {
    pub h: Q,
    pub omega: Form<S>,
    pub partial: Operator<S>,
    pub pbar: Operator<S>,
    pub d: Operator<S>,
    pub dh: Operator<S>,
    pub dmih: Operator<S>,
    pub partial_star: Operator<S>,
    pub pbar_star: Operator<S>,
    pub d_star: Operator<S>,
    pub dh_star: Operator<S>,
    pub dmih_star: Operator<S>,
    pub lap: Operator<S>,
    pub lap_h: Operator<S>,
    pub lap_mih: Operator<S>,
    pub lap_p: Operator<S>,
    pub lap_pp: Operator<S>,
    pub lap_tilde: Operator<S>,
    pub l: Operator<S>,
    pub lambda: Operator<S>,
    pub tau: Operator<S>,
    pub tau_h: Operator<S>,
    pub p_pp: Operator<S>,
    pub green_pp: Operator<S>,
}

fn laplacian<S: ComplexScalar>(a: &Operator<S>, a_star: &Operator<S>) -> Operator<S> {
    a.comm(a_star)
}

/// Project onto ker of a bidegree-preserving operator, block by block.
fn block_projector<S: ComplexScalar>(lap: &Operator<S>, ip: &InnerProduct<S>) -> (Operator<S>, Operator<S>) {
    let sp = ip.space().clone();
    let mut proj = Operator::zero(sp.clone(), 0);
    let mut green = Operator::zero(sp.clone(), 0);
    for (b, pq) in sp.bidegrees().iter().enumerate() {
        let a = lap.block(*pq, *pq);
        let p = kernel_projector(&a, &ip.grams()[b]);
        let id = Matrix::identity(a.rows());
        let gr = a.add(&p).inverse().expect("Δ + p is invertible").mul(&id.sub(&p));
        proj.insert(b, b, p);
        green.insert(b, b, gr);
    }
    (proj, green)
}

impl OperatorBundle<Gq> {
    pub fn build(model: &LieComplexModel, metric: &HermitianMetric, h: &Q) -> Result<Self, MetricError> {
        if h.is_zero() {
            return Err(MetricError::ZeroH);
        }
        if metric.n() != model.n() {
            return Err(MetricError::Dimension(model.n()));
        }
        let ip = InnerProduct::new(model.space().clone(), metric);
        let ops = Differentials::<Gq>::new(model);
        Ok(Self::from_parts(&ops, &ip, metric.form(), h))
    }
}

impl<S: ComplexScalar> OperatorBundle<S> {
    pub fn from_parts(ops: &Differentials<S>, ip: &InnerProduct<S>, omega: Form<S>, h: &Q) -> Self {
        let sp = ip.space().clone();
        let dh = ops.dh(h);
        let dmih = ops.d_minus_inv_h(h);
        let partial_star = ip.adjoint(&ops.partial);
        let pbar_star = ip.adjoint(&ops.pbar);
        let d_star = ip.adjoint(&ops.d);
        let dh_star = ip.adjoint(&dh);
        let dmih_star = ip.adjoint(&dmih);
        let lap = laplacian(&ops.d, &d_star);
        let lap_h = laplacian(&dh, &dh_star);
        let lap_mih = laplacian(&dmih, &dmih_star);
        let lap_p = laplacian(&ops.partial, &partial_star);
        let lap_pp = laplacian(&ops.pbar, &pbar_star);
        let (p_pp, green_pp) = block_projector(&lap_pp, ip);
        let lap_tilde = ops
            .partial
            .compose(&p_pp)
            .compose(&partial_star)
            .add(&partial_star.compose(&p_pp).compose(&ops.partial))
            .add(&lap_pp);
        let l = Operator::wedge_by(sp.clone(), &omega);
        let lambda = ip.adjoint(&l);
        let d_omega = ops.partial.apply(&omega);
        let tau = lambda.comm(&Operator::wedge_by(sp.clone(), &d_omega));
        let dh_omega = dh.apply(&omega);
        let tau_h = lambda.comm(&Operator::wedge_by(sp.clone(), &dh_omega));
        OperatorBundle {
            h: h.clone(),
            omega,
            partial: ops.partial.clone(),
            pbar: ops.pbar.clone(),
            d: ops.d.clone(),
            dh,
            dmih,
            partial_star,
            pbar_star,
            d_star,
            dh_star,
            dmih_star,
            lap,
            lap_h,
            lap_mih,
            lap_p,
            lap_pp,
            lap_tilde,
            l,
            lambda,
            tau,
            tau_h,
            p_pp,
            green_pp,
        }
    }
}

/// Registry of verifiable operator identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum IdentityName {
    Obv1,
    Obv2,
    Obv3,
    Obv4,
    ObvBis,
    RescaleAdj,
    RescaleLap,
    RescaleGamma,
    HcommA,
    HcommB,
    HcommC,
    HcommD,
    RoughBkn,
    KahlerAnticomm,
    PrelimI,
    PrelimII,
    PrelimIII,
    PrelimIV,
    RefinedBkn,
    LaplaceSum,
    Proportion,
}

impl IdentityName {
    pub const ALL: [IdentityName; 21] = [
        IdentityName::Obv1,
        IdentityName::Obv2,
        IdentityName::Obv3,
        IdentityName::Obv4,
        IdentityName::ObvBis,
        IdentityName::RescaleAdj,
        IdentityName::RescaleLap,
        IdentityName::RescaleGamma,
        IdentityName::HcommA,
        IdentityName::HcommB,
        IdentityName::HcommC,
        IdentityName::HcommD,
        IdentityName::RoughBkn,
        IdentityName::KahlerAnticomm,
        IdentityName::PrelimI,
        IdentityName::PrelimII,
        IdentityName::PrelimIII,
        IdentityName::PrelimIV,
        IdentityName::RefinedBkn,
        IdentityName::LaplaceSum,
        IdentityName::Proportion,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            IdentityName::Obv1 => "OBV1",
            IdentityName::Obv2 => "OBV2",
            IdentityName::Obv3 => "OBV3",
            IdentityName::Obv4 => "OBV4",
            IdentityName::ObvBis => "OBVBIS",
            IdentityName::RescaleAdj => "RESCALE-ADJ",
            IdentityName::RescaleLap => "RESCALE-LAP",
            IdentityName::RescaleGamma => "RESCALE-GAMMA",
            IdentityName::HcommA => "HCOMM-A",
            IdentityName::HcommB => "HCOMM-B",
            IdentityName::HcommC => "HCOMM-C",
            IdentityName::HcommD => "HCOMM-D",
            IdentityName::RoughBkn => "ROUGH-BKN",
            IdentityName::KahlerAnticomm => "KAHLER-ANTICOMM",
            IdentityName::PrelimI => "PRELIM-I",
            IdentityName::PrelimII => "PRELIM-II",
            IdentityName::PrelimIII => "PRELIM-III",
            IdentityName::PrelimIV => "PRELIM-IV",
            IdentityName::RefinedBkn => "REFINED-BKN",
            IdentityName::LaplaceSum => "LAPLACE-SUM",
            IdentityName::Proportion => "PROPORTION",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|i| i.id().eq_ignore_ascii_case(s))
    }

    pub fn requires_kahler(&self) -> bool {
        matches!(self, IdentityName::KahlerAnticomm | IdentityName::LaplaceSum | IdentityName::Proportion)
    }

    /// Identities that need no metric at all.
    pub fn metric_free(&self) -> bool {
        matches!(self, IdentityName::Obv1 | IdentityName::Obv2 | IdentityName::Obv3 | IdentityName::Obv4)
    }

    pub fn needs_lambda(&self) -> bool {
        matches!(self, IdentityName::RescaleAdj | IdentityName::RescaleLap | IdentityName::RescaleGamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeResidual {
    pub degree: usize,
    pub exact_zero: bool,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityStatus {
    Pass,
    Fail,
    /// Hypothesis absent and residual nonzero, as expected.
    ViolatedExpected,
    Skipped(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub id: String,
    pub h: String,
    pub lambda: Option<String>,
    pub kahler_required: bool,
    pub kahler: bool,
    pub status: IdentityStatus,
    pub degrees: Vec<DegreeResidual>,
}

impl IdentityReport {
    pub fn residual_zero(&self) -> bool {
        self.degrees.iter().all(|d| d.exact_zero)
    }

    pub fn max_norm(&self) -> f64 {
        self.degrees.iter().map(|d| d.norm).fold(0.0, f64::max)
    }
}

/// Residual of an operator identity split by source degree.
pub fn degree_residuals<S: ComplexScalar>(op: &Operator<S>) -> Vec<DegreeResidual> {
    let sp = op.space();
    let n = sp.n();
    (0..=2 * n)
        .map(|k| {
            let mut norm2 = 0.0;
            let mut zero = true;
            for (&(s, _), m) in op.blocks() {
                if sp.bidegrees()[s].degree() == k {
                    for x in m.entries() {
                        if !x.is_zero() {
                            zero = false;
                        }
                        norm2 += x.magnitude().powi(2);
                    }
                }
            }
            DegreeResidual { degree: k, exact_zero: zero, norm: norm2.sqrt() }
        })
        .collect()
}

fn c(x: Q) -> Gq {
    gq_from_q(x)
}

fn i_unit() -> Gq {
    Gq::new(Q::zero(), Q::one())
}

/// Minimal-norm Γ^{n-2,n} with ∂Γ = −∂̄ω^{n-1}, if ω is strongly Gauduchon.
pub fn sg_potential(model: &LieComplexModel, metric: &HermitianMetric) -> Result<Form<Gq>, MetricError> {
    let n = model.n();
    let ops = Differentials::<Gq>::new(model);
    let ip = InnerProduct::new(model.space().clone(), metric);
    if n < 2 {
        return Ok(Form::zero(n));
    }
    let wn1 = metric.form().power(n - 1);
    let rhs = ops.pbar.apply(&wn1).scale(&-Gq::one());
    if rhs.is_zero() {
        return Ok(Form::zero(n));
    }
    let restricted = ops.partial.restrict_source(|b| b == Bidegree::new(n - 2, n));
    minimal_norm_solution(&restricted, &rhs, &ip)
}

/// Evaluate one registry identity.
pub fn verify_identity(
    id: IdentityName,
    model: &LieComplexModel,
    metric: &HermitianMetric,
    h: &Q,
    lambda: Option<&Q>,
) -> Result<IdentityReport, MetricError> {
    if h.is_zero() {
        return Err(MetricError::ZeroH);
    }
    let kahler = metric.is_kahler(model);
    let mut report = IdentityReport {
        id: id.id().to_string(),
        h: fmt_q(h),
        lambda: lambda.map(fmt_q),
        kahler_required: id.requires_kahler(),
        kahler,
        status: IdentityStatus::Pass,
        degrees: Vec::new(),
    };
    let ops = Differentials::<Gq>::new(model);
    let hq = c(h.clone());
    let one = Q::one();
    let residual: Operator<Gq> = match id {
        IdentityName::Obv1 => ops.dh(h).conjugate().sub(&ops.dh(&(one.clone() / h.clone())).scale(&hq)),
        IdentityName::Obv2 => {
            let mh = -h.clone();
            ops.dh(&mh).conjugate().add(&ops.d_minus_inv_h(h).scale(&hq))
        }
        IdentityName::Obv3 => {
            let ddbar = ops.ddbar();
            let mut res = Operator::zero(model.space().clone(), 2);
            for h2 in [-one.clone() / h.clone(), h.clone() + one.clone(), Q::from_integer(2.into())] {
                let lhs = ops.dh(h).compose(&ops.dh(&h2));
                res = res.add(&lhs.sub(&ddbar.scale(&c(h.clone() - h2))));
            }
            res
        }
        IdentityName::Obv4 => {
            let den = h.clone() * h.clone() + one.clone();
            let a = c((h.clone() + one.clone()) / den.clone());
            let b = c(h.clone() * (h.clone() - one.clone()) / den);
            ops.dh(h).scale(&a).add(&ops.d_minus_inv_h(h).scale(&b)).sub(&ops.d)
        }
        IdentityName::RescaleAdj | IdentityName::RescaleLap | IdentityName::RescaleGamma => {
            let lam = lambda.cloned().unwrap_or_else(|| Q::from_integer(2.into()));
            if lam <= Q::zero() {
                return Err(MetricError::NotPositive { index: 0, value: fmt_q(&lam) });
            }
            report.lambda = Some(fmt_q(&lam));
            let scaled = metric.scale(&lam);
            let ip1 = InnerProduct::new(model.space().clone(), metric);
            let ip2 = InnerProduct::new(model.space().clone(), &scaled);
            let inv = c(one.clone() / lam.clone());
            match id {
                IdentityName::RescaleAdj => {
                    let a = ip2.adjoint(&ops.pbar).sub(&ip1.adjoint(&ops.pbar).scale(&inv));
                    let b = ip2.adjoint(&ops.partial).sub(&ip1.adjoint(&ops.partial).scale(&inv));
                    a.add(&b)
                }
                IdentityName::RescaleLap => {
                    let l1 = laplacian(&ops.pbar, &ip1.adjoint(&ops.pbar));
                    let l2 = laplacian(&ops.pbar, &ip2.adjoint(&ops.pbar));
                    let m1 = laplacian(&ops.partial, &ip1.adjoint(&ops.partial));
                    let m2 = laplacian(&ops.partial, &ip2.adjoint(&ops.partial));
                    l2.sub(&l1.scale(&inv)).add(&m2.sub(&m1.scale(&inv)))
                }
                _ => {
                    let g1 = match sg_potential(model, metric) {
                        Ok(g) => g,
                        Err(_) => {
                            report.status = IdentityStatus::Skipped("metric is not strongly Gauduchon".into());
                            return Ok(report);
                        }
                    };
                    let g2 = sg_potential(model, &scaled).map_err(|_| MetricError::Falsified("λω not sG".into()))?;
                    let n = model.n();
                    let factor = c(crate::scalar::q_pow(&lam, n as i64 - 1));
                    let diff = g2.sub(&g1.scale(&factor));
                    let mut op = Operator::zero(model.space().clone(), 0);
                    if !diff.is_zero() {
                        // encode the form residual as a multiplication operator
                        op = Operator::wedge_by(model.space().clone(), &diff);
                    }
                    op
                }
            }
        }
        _ => {
            let b = OperatorBundle::build(model, metric, h)?;
            let mh = -h.clone();
            let sp = model.space().clone();
            let ip = InnerProduct::new(sp.clone(), metric);
            let adj = |op: &Operator<Gq>| ip.adjoint(op);
            let i = i_unit();
            let cd_mh = ops.dh(&mh).conjugate();
            let tau_of = |hh: &Q| {
                let f = ops.dh(hh).apply(&b.omega);
                b.lambda.comm(&Operator::wedge_by(sp.clone(), &f))
            };
            let tau_mh = tau_of(&mh);
            let ctau_mh = tau_mh.conjugate();
            match id {
                IdentityName::ObvBis => {
                    let lap_mh = laplacian(&ops.dh(&mh), &adj(&ops.dh(&mh)));
                    lap_mh.conjugate().sub(&b.lap_mih.scale(&c(h.clone() * h.clone())))
                }
                IdentityName::HcommA => adj(&b.dh.add(&b.tau_h)).add(&b.lambda.comm(&cd_mh).scale(&i)),
                IdentityName::HcommB => {
                    let lhs = adj(&b.dh.conjugate().add(&b.tau_h.conjugate()));
                    lhs.sub(&b.lambda.comm(&ops.dh(&mh)).scale(&i))
                }
                IdentityName::HcommC => b.dh.add(&b.tau_h).sub(&adj(&cd_mh).comm(&b.l).scale(&i)),
                IdentityName::HcommD => {
                    let lhs = b.dh.conjugate().add(&b.tau_h.conjugate());
                    lhs.add(&adj(&ops.dh(&mh)).comm(&b.l).scale(&i))
                }
                IdentityName::RoughBkn => {
                    let clap = laplacian(&cd_mh, &adj(&cd_mh));
                    b.lap_h.sub(&clap).sub(&cd_mh.comm(&adj(&ctau_mh))).add(&b.dh.comm(&adj(&b.tau_h)))
                }
                IdentityName::KahlerAnticomm => b.dh.comm(&b.dmih_star).add(&b.dmih.comm(&b.dh_star)),
                IdentityName::PrelimI => {
                    let f = b.dh.apply(&b.omega);
                    b.l.comm(&b.tau_h).sub(&Operator::wedge_by(sp.clone(), &f).scale(&c(Q::from_integer(3.into()))))
                }
                IdentityName::PrelimII => {
                    let two_i = Gq::new(Q::zero(), Q::from_integer(2.into()));
                    b.lambda.comm(&b.tau_h).sub(&adj(&ctau_mh).scale(&two_i))
                }
                IdentityName::PrelimIII => b.dh.comm(&adj(&cd_mh)).add(&b.dh.comm(&adj(&ctau_mh))),
                IdentityName::PrelimIV => {
                    let dhw = Operator::wedge_by(sp.clone(), &b.dh.apply(&b.omega));
                    let inner_form = cd_mh.apply(&b.dh.apply(&b.omega));
                    let s_op = b
                        .lambda
                        .comm(&b.lambda.comm(&Operator::wedge_by(sp.clone(), &inner_form)))
                        .scale(&Gq::new(Q::zero(), Q::new(1.into(), 2.into())))
                        .sub(&dhw.comm(&adj(&dhw)));
                    let lhs = b.dh.comm(&b.dh_star).add(&b.dh.comm(&adj(&b.tau_h))).sub(&cd_mh.comm(&adj(&ctau_mh)));
                    let a = b.dh.add(&b.tau_h);
                    lhs.sub(&a.comm(&adj(&a))).sub(&s_op)
                }
                IdentityName::RefinedBkn => {
                    let a = cd_mh.add(&ctau_mh);
                    let cdw = cd_mh.apply(&b.omega);
                    let inner_form = b.dh.apply(&cdw);
                    let cdw_op = Operator::wedge_by(sp.clone(), &cdw);
                    let t_op = b
                        .lambda
                        .comm(&b.lambda.comm(&Operator::wedge_by(sp.clone(), &inner_form)))
                        .scale(&Gq::new(Q::zero(), -Q::new(1.into(), 2.into())))
                        .sub(&cdw_op.comm(&adj(&cdw_op)));
                    b.lap_h.sub(&a.comm(&adj(&a))).sub(&t_op)
                }
                IdentityName::LaplaceSum => {
                    let den = h.clone() * h.clone() + one.clone();
                    let den2 = den.clone() * den.clone();
                    let hp = h.clone() + one.clone();
                    let hm = h.clone() - one.clone();
                    let a = c(hp.clone() * hp / den2.clone());
                    let bb = c(hm.clone() * hm * h.clone() * h.clone() / den2);
                    b.lap.sub(&b.lap_h.scale(&a)).sub(&b.lap_mih.scale(&bb))
                }
                IdentityName::Proportion => {
                    let den = h.clone() * h.clone() + one.clone();
                    let two = Q::from_integer(2.into());
                    let r1 = b.lap.sub(&b.lap_h.scale(&c(two.clone() / den.clone())));
                    let r2 = b.lap.sub(&b.lap_mih.scale(&c(two.clone() * h.clone() * h.clone() / den.clone())));
                    let lap_mh = laplacian(&ops.dh(&mh), &adj(&ops.dh(&mh)));
                    let r3 = b.lap.sub(&lap_mh.conjugate().scale(&c(two / den)));
                    r1.add(&r2.scale(&i)).add(&r3.scale(&c(Q::from_integer(3.into()))))
                }
                _ => unreachable!("handled above"),
            }
        }
    };
    report.degrees = degree_residuals(&residual);
    let zero = report.residual_zero();
    report.status = match (id.requires_kahler() && !kahler, zero) {
        (false, true) => IdentityStatus::Pass,
        (false, false) => IdentityStatus::Fail,
        (true, false) => IdentityStatus::ViolatedExpected,
        (true, true) => IdentityStatus::Pass,
    };
    Ok(report)
}

/// Δ̃-harmonic representative of an E_2 class given in page coordinates.
pub fn harmonic_e2_representative(
    bundle: &OperatorBundle<Gq>,
    page2: &SpectralPage<Gq>,
    pq: Bidegree,
    class: &[Gq],
) -> Result<Form<Gq>, MetricError> {
    let sp = bundle.partial.space().clone();
    let quo: &Quotient<Gq> = &page2.quotients[&pq];
    let harm = Subspace::kernel(&bundle.lap_tilde.block(pq, pq));
    if harm.dim() != quo.dim() {
        return Err(MetricError::Falsified(format!(
            "dim ker Δ̃ on {pq} is {} but e_2 = {}",
            harm.dim(),
            quo.dim()
        )));
    }
    if class.len() != quo.dim() {
        return Err(MetricError::Dimension(quo.dim()));
    }
    // coordinates of the harmonic basis in E_2
    let cols: Vec<Vec<Gq>> = harm
        .vectors()
        .iter()
        .map(|v| quo.coordinates(v).ok_or_else(|| MetricError::Falsified("Δ̃-harmonic form is not an E_2 representative".into())))
        .collect::<Result<_, _>>()?;
    let m = Matrix::from_cols(quo.dim(), &cols);
    if quo.dim() == 0 {
        return Ok(Form::zero(sp.n()));
    }
    let x = m.solve(class).ok_or_else(|| MetricError::Falsified("harmonic forms do not span E_2".into()))?;
    Ok(Form::from_vec(&sp, pq, &harm.basis().mul_vec(&x)))
}

/// Spectrum of Δ_h in one degree.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub degree: usize,
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
    pub smallest_positive: Option<f64>,
}

/// Eigenvalues of a self-adjoint operator on degree `k` (float).
pub fn self_adjoint_spectrum(op: &Operator<Gq>, ip: &InnerProduct<Gq>, k: usize) -> Spectrum {
    use nalgebra::DMatrix;
    let a = op.degree_matrix(k);
    let kernel_dim = a.cols() - a.rank();
    let g = ip.degree_gram(k);
    let dim = a.rows();
    if dim == 0 {
        return Spectrum { degree: k, eigenvalues: vec![], kernel_dim: 0, smallest_positive: None };
    }
    let to_c = |x: &Gq| C64::new(q_to_f64(&x.re), q_to_f64(&x.im));
    let gm = DMatrix::from_fn(dim, dim, |r, c| to_c(g.get(r, c)));
    let am = DMatrix::from_fn(dim, dim, |r, c| to_c(a.get(r, c)));
    // G A is Hermitian; with G = L Lᴴ, Lᴴ A L⁻ᴴ is Hermitian with the same eigenvalues
    let chol = nalgebra::Cholesky::new(gm).expect("Gram is positive definite");
    let l = chol.l();
    let l_inv = l.clone().try_inverse().expect("triangular factor invertible");
    let m = l.adjoint() * am * l_inv.adjoint();
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    let smallest_positive = ev.get(kernel_dim).copied();
    Spectrum { degree: k, eigenvalues: ev, kernel_dim, smallest_positive }
}

pub fn laplacian_spectrum(model: &LieComplexModel, metric: &HermitianMetric, h: &Q, k: usize) -> Result<Spectrum, MetricError> {
    let b = OperatorBundle::build(model, metric, h)?;
    let ip = InnerProduct::new(model.space().clone(), metric);
    Ok(self_adjoint_spectrum(&b.lap_h, &ip, k))
}

/// Display helper for Gram matrices.
pub fn gram_strings(m: &Matrix<Gq>) -> Vec<Vec<String>> {
    (0..m.rows()).map(|r| (0..m.cols()).map(|c| fmt_gq(m.get(r, c))).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::scalar::q;

    #[test]
    fn lefschetz_commutator() {
        for name in ["torus2", "iwasawa"] {
            let m = corpus::model(name).unwrap();
            let n = m.n() as i64;
            let g = Matrix::from_rows(vec![
                vec![Gq::from(q(2, 1)), Gq::new(q(1, 2), q(1, 3))],
                vec![Gq::new(q(1, 2), q(-1, 3)), Gq::from(q(1, 1))],
            ]);
            let metric = if n == 2 { HermitianMetric::new(g).unwrap() } else { HermitianMetric::identity(3) };
            let b = OperatorBundle::build(&m, &metric, &q(1, 1)).unwrap();
            let lhs = b.l.comm(&b.lambda);
            let rhs = Operator::diagonal(m.space().clone(), |pq| Gq::from(q(pq.degree() as i64 - n, 1)));
            assert!(lhs.sub(&rhs).is_zero(), "{name}");
        }
    }

    #[test]
    fn adjoint_pairing() {
        let m = corpus::model("iwasawa").unwrap();
        let metric = HermitianMetric::identity(3);
        let ip = InnerProduct::new(m.space().clone(), &metric);
        let ops = Differentials::<Gq>::new(&m);
        let ds = ip.adjoint(&ops.d);
        let x = Form::<Gq>::holo(3, 3).add(&Form::anti(3, 1).scale(&Gq::new(q(1, 2), q(2, 1))));
        let y = Form::<Gq>::holo(3, 1).wedge(&Form::holo(3, 2)).add(&Form::holo(3, 1).wedge(&Form::anti(3, 2)));
        assert_eq!(ip.inner(&ops.d.apply(&x), &y), ip.inner(&x, &ds.apply(&y)));
    }

    #[test]
    fn non_positive_metric_rejected() {
        let g = Matrix::from_rows(vec![vec![Gq::from(q(1, 1)), Gq::zero()], vec![Gq::zero(), Gq::from(q(-1, 1))]]);
        assert_eq!(HermitianMetric::new(g).unwrap_err(), MetricError::NotPositive { index: 2, value: "-1".into() });
    }

    #[test]
    fn torus_bundle_trivial() {
        let m = corpus::model("torus2").unwrap();
        let b = OperatorBundle::build(&m, &HermitianMetric::identity(2), &q(1, 1)).unwrap();
        assert!(b.lap_p.is_zero() && b.lap_pp.is_zero());
        assert!(b.lap_h.sub(&b.lap).is_zero());
    }

    #[test]
    fn iwasawa_torsion_nonzero() {
        let m = corpus::model("iwasawa").unwrap();
        let b = OperatorBundle::build(&m, &HermitianMetric::identity(3), &q(1, 1)).unwrap();
        assert!(!b.tau.is_zero());
    }

    #[test]
    fn projector_and_green() {
        let m = corpus::model("iwasawa").unwrap();
        let b = OperatorBundle::build(&m, &HermitianMetric::identity(3), &q(2, 1)).unwrap();
        assert!(b.p_pp.compose(&b.p_pp).sub(&b.p_pp).is_zero());
        let id = Operator::identity(m.space().clone());
        assert!(b.green_pp.compose(&b.lap_pp).sub(&id.sub(&b.p_pp)).is_zero());
    }
}
