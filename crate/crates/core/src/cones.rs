//! Positivity tests, metric feasibility and the E_2sG cone constructions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cohomology::{
    cohomology, complexify, frolicher_pages, integrate, map_t, real_basis, realify, Differentials, Grading, Theory,
};
use crate::forms::{anti_gen, holo_gen, Bidegree, Form, FormSpace};
use crate::linalg::{Matrix, Subspace};
use crate::metric::{
    gram_strings, harmonic_e2_representative, minimal_norm_solution, positive_definite, sg_potential,
    sylvester_minors, HermitianMetric, InnerProduct, MetricError, OperatorBundle,
};
use crate::model::LieComplexModel;
use crate::parser::form_text;
use crate::scalar::{fmt_gq, fmt_q, q_to_f64, rationalize, Gq, C64, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("expected a form of bidegree {0}")]
    Bidegree(String),
    #[error("form is not real")]
    NotReal,
    #[error("form is not positive: leading minor {index} = {value}")]
    NotPositive { index: usize, value: String },
    #[error("metric is not strongly Gauduchon")]
    NotSg,
    #[error("model is not sGG: {0}")]
    NotSgg(String),
    #[error("cone constructions need n >= 2")]
    Dimension,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Which positivity notion a test matrix encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PosKind {
    /// A real (1,1)-form i Σ c_{jk̄} ω^j∧ω̄^k, tested through c.
    OneOne,
    /// A real (n-1,n-1)-form Ω, tested through β ↦ ∫ Ω ∧ iβ∧β̄ on (1,0)-forms.
    NMinusOne,
}

impl PosKind {
    pub fn bidegree(&self, n: usize) -> Bidegree {
        match self {
            PosKind::OneOne => Bidegree::new(1, 1),
            PosKind::NMinusOne => Bidegree::new(n - 1, n - 1),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PosKind::OneOne => "(1,1)",
            PosKind::NMinusOne => "(n-1,n-1)",
        }
    }
}

fn is_pure(f: &Form<Gq>, b: Bidegree) -> bool {
    f.sub(&f.component(b)).is_zero()
}

fn i_unit() -> Gq {
    Gq::new(Q::zero(), Q::one())
}

/// iω^j∧ω̄^k.
fn i_pair(n: usize, j: usize, k: usize) -> Form<Gq> {
    Form::monomial(n, holo_gen(j), Gq::one()).wedge(&Form::monomial(n, anti_gen(k, n), Gq::one())).scale(&i_unit())
}

fn raw_test_matrix(form: &Form<Gq>, kind: PosKind) -> Matrix<Gq> {
    let n = form.n();
    match kind {
        PosKind::OneOne => {
            let minus_i = Gq::new(Q::zero(), -Q::one());
            Matrix::from_fn(n, n, |j, k| form.coeff(holo_gen(j) | anti_gen(k, n)) * minus_i.clone())
        }
        PosKind::NMinusOne => {
            let sp = FormSpace::new(n);
            Matrix::from_fn(n, n, |j, k| integrate(&sp, &form.wedge(&i_pair(n, j, k))))
        }
    }
}

/// Hermitian test matrix of a real form of the given kind.
pub fn test_matrix(form: &Form<Gq>, kind: PosKind) -> Result<Matrix<Gq>, ConeError> {
    let n = form.n();
    if n < 1 || (kind == PosKind::NMinusOne && n < 2) {
        return Err(ConeError::Dimension);
    }
    let b = kind.bidegree(n);
    if !is_pure(form, b) {
        return Err(ConeError::Bidegree(b.to_string()));
    }
    if !form.is_real() {
        return Err(ConeError::NotReal);
    }
    Ok(raw_test_matrix(form, kind))
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityCertificate {
    pub kind: PosKind,
    pub form: String,
    pub matrix: Vec<Vec<String>>,
    pub minors: Vec<String>,
    pub positive: bool,
    /// 1-based index of the first non-positive leading minor.
    pub failing_minor: Option<usize>,
}

/// Exact positivity test by Sylvester's criterion.
pub fn positivity(form: &Form<Gq>, kind: PosKind) -> Result<PositivityCertificate, ConeError> {
    let m = test_matrix(form, kind)?;
    let minors = sylvester_minors(&m);
    let failing = positive_definite(&m).err().map(|(i, _)| i);
    Ok(PositivityCertificate {
        kind,
        form: form_text(form),
        matrix: gram_strings(&m),
        minors: minors.iter().map(fmt_q).collect(),
        positive: failing.is_none(),
        failing_minor: failing,
    })
}

fn factorial(k: usize) -> Q {
    (1..=k).fold(Q::one(), |acc, i| acc * Q::from_integer((i as i64).into()))
}

/// Exact k-th root of a positive rational, if it is rational.
fn rational_root(x: &Q, k: usize) -> Option<Q> {
    if !x.is_positive() {
        return None;
    }
    let k32 = k as u32;
    let (a, b) = (x.numer(), x.denom());
    let (ra, rb) = (a.nth_root(k32), b.nth_root(k32));
    (num_traits::pow(ra.clone(), k) == *a && num_traits::pow(rb.clone(), k) == *b).then(|| Q::new(ra, rb))
}

#[derive(Debug, Clone)]
pub struct RootResult {
    pub metric: HermitianMetric,
    pub omega: Form<Gq>,
    /// True when ω^{n-1} = Ω holds exactly.
    pub exact: bool,
    /// Max coefficient of |ω^{n-1} − Ω|.
    pub residual: f64,
}

/// The positive (1,1)-form ω with ω^{n-1} = Ω.
///
/// With ω = i Σ g ω^j∧ω̄^k one has test_matrix(ω^{n-1}) = (n-1)! det(g) g^{-T}, so g is
/// recovered in closed form; only the scalar root det(g) = det(M)^{1/(n-1)} may be irrational.
pub fn root_n_minus_1(omega_big: &Form<Gq>, bound: u64) -> Result<RootResult, ConeError> {
    let n = omega_big.n();
    if n < 2 {
        return Err(ConeError::Dimension);
    }
    let h = test_matrix(omega_big, PosKind::NMinusOne)?;
    positive_definite(&h).map_err(|(index, v)| ConeError::NotPositive { index, value: fmt_q(&v) })?;
    let m = h.scale(&Gq::from(Q::one() / factorial(n - 1)));
    let mt_inv = m.transpose().inverse().expect("positive matrix is invertible");
    let det = m.determinant().re;
    let (g, exact_root) = match rational_root(&det, n - 1) {
        Some(r) => (mt_inv.scale(&Gq::from(r)), true),
        None => {
            // only the scalar root is approximated; g stays exactly Hermitian
            let r = q_to_f64(&det).powf(1.0 / (n - 1) as f64);
            let mut best: Option<(Matrix<Gq>, f64)> = None;
            for b in [bound, bound.saturating_mul(1000), bound.saturating_mul(1_000_000)] {
                let g = mt_inv.scale(&Gq::from(rationalize(r, b)));
                let res = root_residual(&g, omega_big);
                if best.as_ref().map_or(true, |(_, e)| res < *e) {
                    best = Some((g, res));
                }
                if res <= 1e-12 {
                    break;
                }
            }
            (best.expect("at least one bound").0, false)
        }
    };
    let metric = HermitianMetric::new(g)?;
    let omega = metric.form();
    let diff = omega.power(n - 1).sub(omega_big);
    let residual = max_coeff(&diff);
    Ok(RootResult { metric, omega, exact: exact_root && diff.is_zero(), residual })
}

fn max_coeff(f: &Form<Gq>) -> f64 {
    f.terms().values().map(|z| q_to_f64(&z.re).abs().max(q_to_f64(&z.im).abs())).fold(0.0, f64::max)
}

fn root_residual(g: &Matrix<Gq>, omega_big: &Form<Gq>) -> f64 {
    let n = omega_big.n();
    let mut w = Form::zero(n);
    for j in 0..n {
        for k in 0..n {
            w = w.add(&i_pair(n, j, k).scale(g.get(j, k)));
        }
    }
    max_coeff(&w.power(n - 1).sub(omega_big))
}

/// Solver settings for the positivity searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SolverOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    pub bound: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { restarts: 64, iterations: 500, seed: 0, bound: 1_000_000 }
    }
}

/// Maximize λ_min(Σ x_i P_i) over the unit sphere (with x_0 ≥ 0 when `nonneg_first`).
struct Spectrahedron {
    gens: Vec<DMatrix<C64>>,
    nonneg_first: bool,
}

enum Search<T> {
    Found { value: T, best: f64, restarts: usize },
    Undecided { best: Option<f64>, restarts: usize },
}

fn to_c(z: &Gq) -> C64 {
    C64::new(q_to_f64(&z.re), q_to_f64(&z.im))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Spectrahedron {
    fn new(exact: &[Matrix<Gq>], nonneg_first: bool) -> Self {
        let gens = exact.iter().map(|m| DMatrix::from_fn(m.rows(), m.cols(), |r, c| to_c(m.get(r, c)))).collect();
        Spectrahedron { gens, nonneg_first }
    }

    fn dim(&self) -> usize {
        self.gens.len()
    }

    fn eig(&self, x: &[f64]) -> (Vec<f64>, Vec<DVector<C64>>) {
        let k = self.gens[0].nrows();
        let mut m = DMatrix::<C64>::zeros(k, k);
        for (xi, p) in x.iter().zip(&self.gens) {
            m += p * C64::new(*xi, 0.0);
        }
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let e = SymmetricEigen::new(m);
        let vals: Vec<f64> = e.eigenvalues.iter().copied().collect();
        let vecs = (0..k).map(|i| e.eigenvectors.column(i).into_owned()).collect();
        (vals, vecs)
    }

    fn lambda_min(&self, x: &[f64]) -> f64 {
        self.eig(x).0.into_iter().fold(f64::INFINITY, f64::min)
    }

    fn project(&self, mut x: Vec<f64>) -> Vec<f64> {
        if self.nonneg_first && x[0] < 0.0 {
            x[0] = 0.0;
        }
        let nx = norm(&x);
        if nx > 0.0 {
            x.iter_mut().for_each(|v| *v /= nx);
        }
        x
    }

    /// Ascent on a soft-min smoothing of λ_min with step halving.
    fn ascend(&self, x0: Vec<f64>, iterations: usize) -> (Vec<f64>, f64) {
        let mut x = self.project(x0);
        if norm(&x) == 0.0 {
            return (x, f64::NEG_INFINITY);
        }
        let mut f = self.lambda_min(&x);
        let mut best = (x.clone(), f);
        let mut step = 0.5;
        for it in 0..iterations {
            let (vals, vecs) = self.eig(&x);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let spread = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - lo;
            let mu = (1e-2 * spread.max(1e-9)) / (1.0 + it as f64 / 50.0);
            let w: Vec<f64> = vals.iter().map(|v| (-(v - lo) / mu).exp()).collect();
            let ws: f64 = w.iter().sum();
            let mut g = vec![0.0; self.dim()];
            for (wi, v) in w.iter().zip(&vecs) {
                for (gi, p) in g.iter_mut().zip(&self.gens) {
                    *gi += wi / ws * (v.adjoint() * p * v)[(0, 0)].re;
                }
            }
            let gx: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
            let t: Vec<f64> = g.iter().zip(&x).map(|(a, b)| a - gx * b).collect();
            let nt = norm(&t);
            if nt < 1e-14 {
                break;
            }
            let y = self.project(x.iter().zip(&t).map(|(a, b)| a + step * b / nt).collect());
            let fy = self.lambda_min(&y);
            if fy > f {
                x = y;
                f = fy;
                step = (step * 1.5).min(1.0);
                if f > best.1 {
                    best = (x.clone(), f);
                }
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        best
    }

    fn search<T>(
        &self,
        opts: &SolverOptions,
        start: Option<Vec<f64>>,
        certify: impl Fn(&[Q]) -> Option<T>,
    ) -> Search<T> {
        let m = self.dim();
        if m == 0 {
            return Search::Undecided { best: None, restarts: 0 };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut best = f64::NEG_INFINITY;
        for r in 0..opts.restarts.max(1) {
            let x0 = match (&start, r) {
                (Some(s), 0) => s.clone(),
                _ => (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let (x, f) = self.ascend(x0, opts.iterations);
            best = best.max(f);
            if f > 0.0 {
                let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let c: Vec<Q> = x.iter().map(|v| rationalize(v / scale, opts.bound)).collect();
                if let Some(value) = certify(&c) {
                    return Search::Found { value, best: f, restarts: r + 1 };
                }
            }
        }
        Search::Undecided { best: Some(best), restarts: opts.restarts.max(1) }
    }
}

fn combine(forms: &[Form<Gq>], c: &[Q]) -> Form<Gq> {
    forms.iter().zip(c).fold(Form::zero(forms.first().map_or(0, |f| f.n())), |acc, (f, x)| {
        acc.add(&f.scale(&Gq::from(x.clone())))
    })
}

/// Least-squares coordinates of `target` in the real span of `basis` (float).
fn project_coords(basis: &[Form<Gq>], target: &Form<Gq>, space: &FormSpace, k: usize) -> Vec<f64> {
    let flat = |f: &Form<Gq>| -> Vec<f64> { realify(&f.to_degree_vec(space, k)).iter().map(q_to_f64).collect() };
    let cols: Vec<Vec<f64>> = basis.iter().map(flat).collect();
    let t = flat(target);
    let m = cols.len();
    let a = DMatrix::from_fn(t.len(), m, |r, c| cols[c][r]);
    let tv = DVector::from_vec(t);
    let ata = a.transpose() * &a;
    let atb = a.transpose() * tv;
    match ata.cholesky() {
        Some(ch) => ch.solve(&atb).iter().copied().collect(),
        None => vec![0.0; m],
    }
}

/// Metric notions searched for by [`metric_feasibility`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MetricKind {
    Gauduchon,
    StronglyGauduchon,
    Skt,
    Kahler,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [MetricKind::Gauduchon, MetricKind::StronglyGauduchon, MetricKind::Skt, MetricKind::Kahler];

    pub fn id(&self) -> &'static str {
        match self {
            MetricKind::Gauduchon => "Gauduchon",
            MetricKind::StronglyGauduchon => "sG",
            MetricKind::Skt => "SKT",
            MetricKind::Kahler => "Kahler",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id().eq_ignore_ascii_case(s.trim()))
    }

    /// The searched form is ω^{n-1} for Gauduchon and sG, ω otherwise.
    pub fn pos_kind(&self) -> PosKind {
        match self {
            MetricKind::Gauduchon | MetricKind::StronglyGauduchon => PosKind::NMinusOne,
            _ => PosKind::OneOne,
        }
    }
}

/// Does the real form (ω^{n-1} or ω per kind) satisfy the linear constraint of `kind`?
pub fn form_satisfies(model: &LieComplexModel, form: &Form<Gq>, kind: MetricKind) -> bool {
    let ops = Differentials::<Gq>::new(model);
    match kind {
        MetricKind::Gauduchon | MetricKind::Skt => ops.ddbar().apply(form).is_zero(),
        MetricKind::Kahler => ops.d.apply(form).is_zero(),
        MetricKind::StronglyGauduchon => {
            let n = model.n();
            let dp = ops.partial.apply(form);
            let tgt = Bidegree::new(n, n - 1);
            let src = Bidegree::new(n, n - 2);
            let a = ops.pbar.block(src, tgt);
            dp.is_zero() || (a.cols() > 0 && a.solve(&dp.to_vec(model.space(), tgt)).is_some())
        }
    }
}

pub fn metric_satisfies(model: &LieComplexModel, metric: &HermitianMetric, kind: MetricKind) -> bool {
    let w = metric.form();
    let f = match kind.pos_kind() {
        PosKind::NMinusOne => w.power(model.n() - 1),
        PosKind::OneOne => w,
    };
    form_satisfies(model, &f, kind)
}

/// Real basis of the forms obeying the linear constraint of `kind`.
pub fn constraint_space(model: &LieComplexModel, kind: MetricKind) -> Vec<Form<Gq>> {
    let n = model.n();
    let sp = model.space();
    let ops = Differentials::<Gq>::new(model);
    let b = kind.pos_kind().bidegree(n);
    let basis = real_basis(sp, b);
    let nb = basis.len();
    let cols: Vec<Vec<Gq>> = match kind {
        MetricKind::Gauduchon | MetricKind::Skt => {
            let dd = ops.ddbar();
            basis.iter().map(|f| dd.apply(f).to_degree_vec(sp, b.degree() + 2)).collect()
        }
        MetricKind::Kahler => basis.iter().map(|f| ops.d.apply(f).to_degree_vec(sp, b.degree() + 1)).collect(),
        MetricKind::StronglyGauduchon => {
            let k = b.degree() + 1;
            let mut cols: Vec<Vec<Gq>> = basis.iter().map(|f| ops.partial.apply(f).to_degree_vec(sp, k)).collect();
            for &m in sp.basis(Bidegree::new(n, n - 2)) {
                let e = Form::monomial(n, m, Gq::one());
                for s in [Gq::one(), i_unit()] {
                    cols.push(ops.pbar.apply(&e.scale(&s)).scale(&-Gq::one()).to_degree_vec(sp, k));
                }
            }
            cols
        }
    };
    let rows = cols.first().map_or(0, |c| 2 * c.len());
    let real_cols: Vec<Vec<Q>> = cols.iter().map(|c| realify(c)).collect();
    let sys = Matrix::from_cols(rows, &real_cols);
    let ker = sys.kernel();
    let proj: Vec<Vec<Q>> = ker.columns().iter().map(|c| c[..nb].to_vec()).collect();
    let span = Subspace::span_vectors(nb, &proj);
    span.vectors().iter().map(|c| combine(&basis, c)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityResult {
    pub kind: MetricKind,
    /// "feasible" or "undecided".
    pub verdict: String,
    pub witness: Option<String>,
    pub certificate: Option<PositivityCertificate>,
    pub constraint_dim: usize,
    pub restarts_used: usize,
    pub best_min_eigenvalue: Option<f64>,
    /// Root residual when the witness is an (n-1,n-1)-form.
    pub root_residual: Option<f64>,
    pub root_exact: Option<bool>,
    #[serde(skip)]
    pub witness_form: Option<Form<Gq>>,
    /// A metric of the requested kind, when one is exactly certified.
    #[serde(skip)]
    pub metric: Option<HermitianMetric>,
}

impl FeasibilityResult {
    pub fn feasible(&self) -> bool {
        self.verdict == "feasible"
    }
}

/// Search for a metric of the given kind; "feasible" always carries an exact witness.
pub fn metric_feasibility(model: &LieComplexModel, kind: MetricKind, opts: &SolverOptions) -> FeasibilityResult {
    let n = model.n();
    let pk = kind.pos_kind();
    let w = constraint_space(model, kind);
    let gens: Vec<Matrix<Gq>> = w.iter().map(|f| raw_test_matrix(f, pk)).collect();
    let solver = Spectrahedron::new(&gens, false);
    let standard = {
        let w0 = HermitianMetric::identity(n).form();
        if pk == PosKind::NMinusOne {
            w0.power(n - 1)
        } else {
            w0
        }
    };
    let start = (!w.is_empty()).then(|| project_coords(&w, &standard, model.space(), pk.bidegree(n).degree()));
    let certify = |c: &[Q]| {
        let f = combine(&w, c);
        let m = raw_test_matrix(&f, pk);
        (positive_definite(&m).is_ok() && form_satisfies(model, &f, kind)).then_some(f)
    };
    let outcome = solver.search(opts, start, certify);
    let mut res = FeasibilityResult {
        kind,
        verdict: "undecided".into(),
        witness: None,
        certificate: None,
        constraint_dim: w.len(),
        restarts_used: 0,
        best_min_eigenvalue: None,
        root_residual: None,
        root_exact: None,
        witness_form: None,
        metric: None,
    };
    match outcome {
        Search::Found { value, best, restarts } => {
            res.verdict = "feasible".into();
            res.restarts_used = restarts;
            res.best_min_eigenvalue = Some(best);
            res.certificate = positivity(&value, pk).ok();
            res.witness = Some(form_text(&value));
            match pk {
                PosKind::OneOne => res.metric = HermitianMetric::from_form(&value).ok(),
                PosKind::NMinusOne => {
                    if let Ok(root) = root_n_minus_1(&value, opts.bound) {
                        res.root_residual = Some(root.residual);
                        res.root_exact = Some(root.exact);
                        if metric_satisfies(model, &root.metric, kind) {
                            res.metric = Some(root.metric);
                        }
                    }
                }
            }
            res.witness_form = Some(value);
        }
        Search::Undecided { best, restarts } => {
            res.best_min_eigenvalue = best;
            res.restarts_used = restarts;
        }
    }
    res
}

/// Re-verify a feasible result from scratch: positivity minors and the linear constraint.
pub fn recheck_feasibility(model: &LieComplexModel, res: &FeasibilityResult) -> bool {
    match &res.witness_form {
        None => !res.feasible(),
        Some(f) => {
            positivity(f, res.kind.pos_kind()).is_ok_and(|c| c.positive) && form_satisfies(model, f, res.kind)
        }
    }
}

/// Γ^{n-2,n}_ω, Γ_ω = conj Γ + ω^{n-1} + Γ and their classes.
#[derive(Debug, Clone)]
pub struct E2sGElement {
    pub metric: HermitianMetric,
    pub gamma: Form<Gq>,
    pub gamma_omega: Form<Gq>,
    /// Coordinates of {Γ_ω} in the de Rham basis of degree 2n-2.
    pub de_rham: Vec<Gq>,
    /// Coordinates of [[Γ]] in E_2^{n-2,n}.
    pub e2: Vec<Gq>,
    pub closed: bool,
    pub real: bool,
    /// T({Γ_ω}) equals [[Γ]].
    pub t_matches: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct E2sGSummary {
    pub gamma: String,
    pub gamma_omega: String,
    pub de_rham: Vec<String>,
    pub e2: Vec<String>,
    pub closed: bool,
    pub real: bool,
    pub t_matches: bool,
}

impl E2sGElement {
    pub fn summary(&self) -> E2sGSummary {
        E2sGSummary {
            gamma: form_text(&self.gamma),
            gamma_omega: form_text(&self.gamma_omega),
            de_rham: self.de_rham.iter().map(fmt_gq).collect(),
            e2: self.e2.iter().map(fmt_gq).collect(),
            closed: self.closed,
            real: self.real,
            t_matches: self.t_matches,
        }
    }
}

pub fn e2sg_element(model: &LieComplexModel, metric: &HermitianMetric) -> Result<E2sGElement, ConeError> {
    let n = model.n();
    if n < 2 {
        return Err(ConeError::Dimension);
    }
    let gamma = sg_potential(model, metric).map_err(|e| match e {
        MetricError::NotInImage => ConeError::NotSg,
        other => ConeError::Metric(other),
    })?;
    let ops = Differentials::<Gq>::new(model);
    let sp = model.space();
    let gamma_omega = gamma.conjugate().add(&metric.form().power(n - 1)).add(&gamma);
    let closed = ops.d.apply(&gamma_omega).is_zero();
    let real = gamma_omega.is_real();
    let dr = cohomology(&ops, &Theory::DeRham, Grading::Degree(2 * n - 2)).expect("de Rham");
    let de_rham = dr.coordinates_of(sp, &gamma_omega).unwrap_or_default();
    let pages = frolicher_pages(&ops, 2);
    let b = Bidegree::new(n - 2, n);
    let e2 = pages[1].quotients[&b].coordinates(&gamma.to_vec(sp, b)).unwrap_or_default();
    let t_matches = closed && map_t(&ops, &pages[1], &gamma_omega).is_ok_and(|t| t == e2);
    Ok(E2sGElement { metric: metric.clone(), gamma, gamma_omega, de_rham, e2, closed, real, t_matches })
}

/// The injection j_ω : E_2^{n-2,n} → H^{2n-2}_DR on the page basis.
#[derive(Debug, Clone)]
pub struct JOmega {
    /// Column i: de Rham coordinates of j_ω(e_i).
    pub matrix: Matrix<Gq>,
    pub images: Vec<Form<Gq>>,
    pub rank: usize,
    pub injective: bool,
    pub closed: bool,
    /// T∘j_ω is the identity on the basis.
    pub t_identity: bool,
}

pub fn j_omega(model: &LieComplexModel, metric: &HermitianMetric) -> Result<JOmega, ConeError> {
    let n = model.n();
    if n < 2 {
        return Err(ConeError::Dimension);
    }
    let bundle = OperatorBundle::build(model, metric, &Q::one())?;
    let ops = Differentials::<Gq>::new(model);
    let ip = InnerProduct::new(model.space().clone(), metric);
    let pages = frolicher_pages(&ops, 2);
    let page2 = &pages[1];
    let b = Bidegree::new(n - 2, n);
    let mid = Bidegree::new(n - 1, n - 1);
    let e2 = page2.dim(b);
    let dbar_mid = ops.pbar.restrict_source(|x| x == mid);
    let del_b = ops.partial.restrict_source(|x| x == b);
    let dr = cohomology(&ops, &Theory::DeRham, Grading::Degree(2 * n - 2)).expect("de Rham");
    let mut cols = Vec::new();
    let mut images = Vec::new();
    let mut closed = true;
    let mut t_identity = true;
    for i in 0..e2 {
        let e: Vec<Gq> = (0..e2).map(|j| if i == j { Gq::one() } else { Gq::zero() }).collect();
        let alpha = harmonic_e2_representative(&bundle, page2, b, &e)?;
        let omega = minimal_norm_solution(&dbar_mid, &ops.partial.apply(&alpha).scale(&-Gq::one()), &ip)?;
        let beta = minimal_norm_solution(&del_b, &ops.pbar.apply(&omega.conjugate()).scale(&-Gq::one()), &ip)
            .map_err(|_| ConeError::NotSgg("∂̄ conj(Ω) is not ∂-exact".into()))?;
        let j = beta.conjugate().add(&omega).add(&alpha);
        let is_closed = ops.d.apply(&j).is_zero();
        closed &= is_closed;
        if !is_closed {
            return Ok(JOmega {
                matrix: Matrix::zeros(dr.dim(), 0),
                images,
                rank: 0,
                injective: false,
                closed: false,
                t_identity: false,
            });
        }
        t_identity &= map_t(&ops, page2, &j).is_ok_and(|t| t == e);
        cols.push(dr.coordinates_of(model.space(), &j).expect("closed form has de Rham coordinates"));
        images.push(j);
    }
    let matrix = Matrix::from_cols(dr.dim(), &cols);
    let rank = matrix.rank();
    Ok(JOmega { matrix, images, rank, injective: rank == e2, closed, t_identity })
}

/// The sets of (n-2,n)-forms of the cone duality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConeSet {
    V,
    E,
    EReal,
    UGamma,
    CRealGamma,
}

impl ConeSet {
    pub const ALL: [ConeSet; 5] = [ConeSet::V, ConeSet::E, ConeSet::EReal, ConeSet::UGamma, ConeSet::CRealGamma];

    pub fn id(&self) -> &'static str {
        match self {
            ConeSet::V => "V",
            ConeSet::E => "E",
            ConeSet::EReal => "E_R",
            ConeSet::UGamma => "U_gamma",
            ConeSet::CRealGamma => "Creal_gamma",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.id().eq_ignore_ascii_case(s.trim()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Membership {
    pub set: ConeSet,
    /// "member", "not-member" or "undecided".
    pub verdict: String,
    /// The (n-1,n-1) potential certifying membership, when one is needed.
    pub witness: Option<String>,
    pub best_min_eigenvalue: Option<f64>,
    #[serde(skip)]
    pub witness_form: Option<Form<Gq>>,
}

impl Membership {
    fn new(set: ConeSet, verdict: &str, w: Option<Form<Gq>>) -> Self {
        Membership {
            set,
            verdict: verdict.into(),
            witness: w.as_ref().map(form_text),
            best_min_eigenvalue: None,
            witness_form: w,
        }
    }

    pub fn is_member(&self) -> bool {
        self.verdict == "member"
    }
}

/// γ-orthogonal projection of an (n-1,n)-form onto Im ∂̄.
pub fn project_im_dbar(model: &LieComplexModel, gamma: &HermitianMetric, y: &Form<Gq>) -> Form<Gq> {
    let n = model.n();
    let sp = model.space();
    let ops = Differentials::<Gq>::new(model);
    let ip = InnerProduct::new(sp.clone(), gamma);
    let tgt = Bidegree::new(n - 1, n);
    let a = ops.pbar.block(Bidegree::new(n - 1, n - 1), tgt);
    let g = ip.gram(tgt);
    let yv = y.to_vec(sp, tgt);
    // with ⟨x,y⟩ = yᴴ G x, the normal equations read Aᴴ G A x = Aᴴ G y
    let ah = a.h().mul(g);
    let x = ah.mul(&a).solve(&ah.mul_vec(&yv)).expect("normal equations are consistent");
    Form::from_vec(sp, tgt, &a.mul_vec(&x))
}

/// Real (n-1,n-1)-forms Ω with ∂̄Ω = rhs: a particular solution and a basis of ker ∂̄.
fn real_potentials(model: &LieComplexModel, rhs: &Form<Gq>) -> Option<(Form<Gq>, Vec<Form<Gq>>)> {
    let n = model.n();
    let sp = model.space();
    let ops = Differentials::<Gq>::new(model);
    let mid = Bidegree::new(n - 1, n - 1);
    let tgt = Bidegree::new(n - 1, n);
    let basis = real_basis(sp, mid);
    let cols: Vec<Vec<Q>> = basis.iter().map(|f| realify(&ops.pbar.apply(f).to_vec(sp, tgt))).collect();
    let sys = Matrix::from_cols(2 * sp.dim(tgt), &cols);
    let r = realify(&rhs.to_vec(sp, tgt));
    let part = if r.iter().all(|x| x.is_zero()) { Some(vec![Q::zero(); basis.len()]) } else { sys.solve(&r) }?;
    let kernel = sys.kernel().columns().iter().map(|c| combine(&basis, c)).collect();
    Some((combine(&basis, &part), kernel))
}

/// Membership of an (n-2,n)-form in V, E, E_ℝ, U_γ or C^∞_{n-2,n}(X,ℝ)_γ.
pub fn cone_membership(
    model: &LieComplexModel,
    gamma: &HermitianMetric,
    set: ConeSet,
    candidate: &Form<Gq>,
    opts: &SolverOptions,
) -> Result<Membership, ConeError> {
    let n = model.n();
    if n < 2 {
        return Err(ConeError::Dimension);
    }
    let b = Bidegree::new(n - 2, n);
    if !is_pure(candidate, b) {
        return Err(ConeError::Bidegree(b.to_string()));
    }
    let ops = Differentials::<Gq>::new(model);
    let sp = model.space();
    let del = ops.partial.apply(candidate);
    let y = match set {
        ConeSet::UGamma | ConeSet::CRealGamma => project_im_dbar(model, gamma, &del),
        _ => del,
    };
    let minus_y = y.scale(&-Gq::one());
    match set {
        ConeSet::E => {
            let tgt = Bidegree::new(n - 1, n);
            let a = ops.pbar.block(Bidegree::new(n - 1, n - 1), tgt);
            let ok = y.is_zero() || (a.cols() > 0 && a.solve(&y.to_vec(sp, tgt)).is_some());
            Ok(Membership::new(set, if ok { "member" } else { "not-member" }, None))
        }
        ConeSet::EReal | ConeSet::CRealGamma => Ok(match real_potentials(model, &minus_y) {
            Some((p, _)) => Membership::new(set, "member", Some(p)),
            None => Membership::new(set, "not-member", None),
        }),
        ConeSet::V | ConeSet::UGamma => {
            let Some((p, kernel)) = real_potentials(model, &minus_y) else {
                return Ok(Membership::new(set, "not-member", None));
            };
            let homog = !p.is_zero();
            let mut forms = Vec::new();
            if homog {
                forms.push(p.clone());
            }
            forms.extend(kernel.iter().cloned());
            let gens: Vec<Matrix<Gq>> = forms.iter().map(|f| raw_test_matrix(f, PosKind::NMinusOne)).collect();
            let solver = Spectrahedron::new(&gens, homog);
            let standard = HermitianMetric::identity(n).form().power(n - 1);
            let start = (!kernel.is_empty() || homog).then(|| {
                let mut s = if kernel.is_empty() {
                    vec![]
                } else {
                    project_coords(&kernel, &standard, sp, 2 * n - 2)
                };
                if homog {
                    s.insert(0, 1.0 / (1.0 + norm(&s)));
                }
                s
            });
            let certify = |c: &[Q]| {
                let mut c = c.to_vec();
                if homog {
                    if !c[0].is_positive() {
                        c[0] = Q::new(1.into(), 1_000_000.into());
                    }
                    let t = c[0].clone();
                    c.iter_mut().for_each(|x| *x = x.clone() / t.clone());
                }
                let omega = combine(&forms, &c);
                let ok = positive_definite(&raw_test_matrix(&omega, PosKind::NMinusOne)).is_ok()
                    && ops.pbar.apply(&omega) == minus_y;
                ok.then_some(omega)
            };
            Ok(match solver.search(opts, start, certify) {
                Search::Found { value, best, .. } => {
                    let mut m = Membership::new(set, "member", Some(value));
                    m.best_min_eigenvalue = Some(best);
                    m
                }
                Search::Undecided { best, .. } => {
                    let mut m = Membership::new(set, "undecided", None);
                    m.best_min_eigenvalue = best;
                    m
                }
            })
        }
    }
}

/// Real basis (over ℝ) of E_ℝ.
pub fn e_real_basis(model: &LieComplexModel) -> Vec<Form<Gq>> {
    let n = model.n();
    if n < 2 {
        return vec![];
    }
    let sp = model.space();
    let ops = Differentials::<Gq>::new(model);
    let b = Bidegree::new(n - 2, n);
    let mid = Bidegree::new(n - 1, n - 1);
    let tgt = Bidegree::new(n - 1, n);
    let mut cols = Vec::new();
    let mut gens = Vec::new();
    for &m in sp.basis(b) {
        for s in [Gq::one(), i_unit()] {
            let g = Form::monomial(n, m, s);
            cols.push(realify(&ops.partial.apply(&g).to_vec(sp, tgt)));
            gens.push(g);
        }
    }
    let ng = gens.len();
    for f in real_basis(sp, mid) {
        cols.push(realify(&ops.pbar.apply(&f).to_vec(sp, tgt)));
    }
    let sys = Matrix::from_cols(2 * sp.dim(tgt), &cols);
    let proj: Vec<Vec<Q>> = sys.kernel().columns().iter().map(|c| c[..ng].to_vec()).collect();
    Subspace::span_vectors(ng, &proj).vectors().iter().map(|c| combine(&gens, c)).collect()
}

/// (1,0)-forms ξ with ∂̄ξ real, as a real basis.
pub fn real_dbar_xi_basis(model: &LieComplexModel) -> Vec<Form<Gq>> {
    let n = model.n();
    let sp = model.space();
    let ops = Differentials::<Gq>::new(model);
    let mut gens = Vec::new();
    let mut cols = Vec::new();
    for j in 0..n {
        for s in [Gq::one(), i_unit()] {
            let xi = Form::monomial(n, holo_gen(j), s.clone());
            let f = ops.pbar.apply(&xi);
            cols.push(realify(&f.sub(&f.conjugate()).to_degree_vec(sp, 2)));
            gens.push(xi);
        }
    }
    let sys = Matrix::from_cols(2 * sp.degree_dim(2), &cols);
    sys.kernel().columns().iter().map(|c| combine(&gens, c)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingProbe {
    pub values: Vec<String>,
    pub all_real: bool,
    pub nonnegative: usize,
    pub negative: usize,
    pub nonreal: usize,
}

/// Values ∫ θ ∧ Γ over the given (n-2,n)-forms.
pub fn pairing_probe(model: &LieComplexModel, theta: &Form<Gq>, samples: &[Form<Gq>]) -> Result<PairingProbe, ConeError> {
    let n = model.n();
    if n < 2 {
        return Err(ConeError::Dimension);
    }
    if !is_pure(theta, Bidegree::new(2, 0)) {
        return Err(ConeError::Bidegree("(2,0)".into()));
    }
    let sp = model.space();
    let vals: Vec<Gq> = samples.iter().map(|g| integrate(sp, &theta.wedge(g))).collect();
    let real = |z: &Gq| z.im.is_zero();
    Ok(PairingProbe {
        values: vals.iter().map(fmt_gq).collect(),
        all_real: vals.iter().all(real),
        nonnegative: vals.iter().filter(|z| real(z) && !z.re.is_negative()).count(),
        negative: vals.iter().filter(|z| real(z) && z.re.is_negative()).count(),
        nonreal: vals.iter().filter(|z| !real(z)).count(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OpenConeProbe {
    pub in_real_e2: bool,
    pub directions: usize,
    pub all_members: bool,
    /// Certified step sizes, one per direction.
    pub eps: Vec<String>,
}

/// Perturb Γ_ω along E_ℝ directions and certify that the perturbed forms stay in V.
pub fn open_cone_probe(model: &LieComplexModel, metric: &HermitianMetric) -> Result<OpenConeProbe, ConeError> {
    let n = model.n();
    let el = e2sg_element(model, metric)?;
    let ops = Differentials::<Gq>::new(model);
    let pages = frolicher_pages(&ops, 2);
    let real = crate::cohomology::real_e2_space(&ops, &pages[1]);
    let in_real_e2 = real.contains_class(&el.e2);
    let base = metric.form().power(n - 1);
    let mut eps = Vec::new();
    let mut all = true;
    let dirs = e_real_basis(model);
    for alpha in &dirs {
        let rhs = ops.partial.apply(alpha).scale(&-Gq::one());
        let Some((pot, _)) = real_potentials(model, &rhs) else {
            all = false;
            continue;
        };
        let mut e = Q::one();
        let mut found = None;
        for _ in 0..60 {
            let omega = base.add(&pot.scale(&Gq::from(e.clone())));
            let cand = el.gamma.add(&alpha.scale(&Gq::from(e.clone())));
            let pos = positive_definite(&raw_test_matrix(&omega, PosKind::NMinusOne)).is_ok();
            if pos && ops.partial.apply(&cand) == ops.pbar.apply(&omega).scale(&-Gq::one()) {
                found = Some(e.clone());
                break;
            }
            e /= Q::from_integer(2.into());
        }
        match found {
            Some(e) => eps.push(fmt_q(&e)),
            None => all = false,
        }
    }
    Ok(OpenConeProbe { in_real_e2, directions: dirs.len(), all_members: all, eps })
}

/// Exact complex helper for tests and reports: class coordinates to real `[Re; Im]`.
pub fn class_real_coords(c: &[Gq]) -> Vec<Q> {
    realify(c)
}

pub fn class_from_real(c: &[Q]) -> Vec<Gq> {
    complexify(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::scalar::{gq, q};

    fn gm(rows: &[&[(i64, i64)]]) -> Matrix<Gq> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&(a, b)| gq(q(a, 1), q(b, 1))).collect()).collect())
    }

    #[test]
    fn standard_form_is_positive() {
        for n in 2..=3 {
            let w = HermitianMetric::identity(n).form();
            assert!(positivity(&w, PosKind::OneOne).unwrap().positive);
            assert!(positivity(&w.power(n - 1), PosKind::NMinusOne).unwrap().positive);
        }
        let g = gm(&[&[(1, 0), (0, 0), (0, 0)], &[(0, 0), (-1, 0), (0, 0)], &[(0, 0), (0, 0), (1, 0)]]);
        let mut f = Form::zero(3);
        for j in 0..3 {
            for k in 0..3 {
                f = f.add(&i_pair(3, j, k).scale(g.get(j, k)));
            }
        }
        let c = positivity(&f, PosKind::OneOne).unwrap();
        assert!(!c.positive);
        assert_eq!(c.failing_minor, Some(2));
        assert!(matches!(positivity(&Form::holo(3, 1), PosKind::OneOne), Err(ConeError::Bidegree(_))));
    }

    #[test]
    fn i_pair_matches_metric_form() {
        let g = gm(&[&[(2, 0), (1, 1)], &[(1, -1), (3, 0)]]);
        let metric = HermitianMetric::new(g.clone()).unwrap();
        let mut f = Form::zero(2);
        for j in 0..2 {
            for k in 0..2 {
                f = f.add(&i_pair(2, j, k).scale(g.get(j, k)));
            }
        }
        assert_eq!(f, metric.form());
    }

    #[test]
    fn root_round_trip() {
        let g = gm(&[&[(2, 0), (1, 1), (0, 0)], &[(1, -1), (3, 0), (0, 1)], &[(0, 0), (0, -1), (2, 0)]]);
        let metric = HermitianMetric::new(g.clone()).unwrap();
        let big = metric.form().power(2);
        let h = test_matrix(&big, PosKind::NMinusOne).unwrap();
        let det = g.determinant();
        let expect = g.inverse().unwrap().transpose().scale(&(det * Gq::from(q(2, 1))));
        assert_eq!(h, expect);
        let r = root_n_minus_1(&big, 1_000_000).unwrap();
        // det g = 7 is not a square, so the root goes through floats
        assert!(r.residual < 1e-10, "{}", r.residual);
        let id = HermitianMetric::identity(3).scale(&q(4, 1));
        let r = root_n_minus_1(&id.form().power(2), 1_000_000).unwrap();
        assert!(r.exact);
        assert_eq!(r.metric, id);
    }

    #[test]
    fn torus_feasibility() {
        let m = corpus::model("torus2").unwrap();
        let r = metric_feasibility(&m, MetricKind::Kahler, &SolverOptions::default());
        assert!(r.feasible());
        assert!(recheck_feasibility(&m, &r));
        assert!(r.metric.is_some());
    }

    #[test]
    fn torus_sg_element_trivial() {
        let m = corpus::model("torus3").unwrap();
        let el = e2sg_element(&m, &HermitianMetric::identity(3)).unwrap();
        assert!(el.gamma.is_zero());
        assert!(el.closed && el.real && el.t_matches);
    }

    #[test]
    fn iwasawa_cones() {
        let m = corpus::model("iwasawa").unwrap();
        let opts = SolverOptions { restarts: 8, ..SolverOptions::default() };
        assert!(metric_feasibility(&m, MetricKind::StronglyGauduchon, &opts).feasible());
        let k = metric_feasibility(&m, MetricKind::Kahler, &opts);
        assert_eq!(k.verdict, "undecided");
        assert!(k.best_min_eigenvalue.unwrap() <= 1e-9);
        let g = HermitianMetric::identity(3);
        let zero = Form::zero(3);
        assert!(cone_membership(&m, &g, ConeSet::V, &zero, &opts).unwrap().is_member());
        let j = j_omega(&m, &g).unwrap();
        assert!(j.injective && j.t_identity);
    }

    #[test]
    fn rescaling_is_homogeneous() {
        let m = corpus::model("nil_mixed").unwrap();
        let g = HermitianMetric::identity(3);
        let base = e2sg_element(&m, &g).unwrap();
        for l in [2, 3] {
            let el = e2sg_element(&m, &g.scale(&q(l, 1))).unwrap();
            assert_eq!(el.gamma, base.gamma.scale(&gq(q(l * l, 1), q(0, 1))));
        }
    }

    #[test]
    fn rational_roots() {
        assert_eq!(rational_root(&q(8, 27), 3), Some(q(2, 3)));
        assert_eq!(rational_root(&q(2, 1), 2), None);
        assert_eq!(rational_root(&q(-4, 1), 2), None);
    }
}
