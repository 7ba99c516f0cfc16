//! One-parameter families of invariant complex structures on a fixed Lie algebra.
//!
//! A family file gives the structure equations of the base coframe (ω, ω̄) and a
//! deformation η^k = ω^k + φ^k(t) with φ^k of type (0,1) for the base. The fibre at
//! t is the complex structure with (1,0)-coframe η, rewritten in its own frame.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cohomology::{betti, bidegree_table, cohomology, Differentials, Grading, Theory};
use crate::cones::{metric_feasibility, root_n_minus_1, MetricKind, SolverOptions};
use crate::forms::{Bidegree, Form};
use crate::linalg::Matrix;
use crate::metric::{minimal_norm_solution, HermitianMetric, InnerProduct, MetricError};
use crate::model::{validate_model, LieComplexModel};
use crate::parser::{form_text, model_from_document, parse_document, ModelDocument, ParseError};
use crate::properties::{PropertyLab, PropertyName, Verdict};
use crate::scalar::{fmt_gq, fmt_q, parse_q, q_to_f64, Gq, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeformError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid fibre at t = {t}: {reason}")]
    InvalidFibre { t: String, reason: String },
    #[error("smooth-structure drift at t = {t}: real structure equation of f{generator} changes")]
    Drift { t: String, generator: usize },
    #[error("degenerate coframe at t = {t}")]
    DegenerateCoframe { t: String },
    #[error("bad grid: {0}")]
    Grid(String),
    #[error("metric is not strongly Gauduchon on the central fibre")]
    NotSg,
    #[error("positivity lost at t = {t}: (Γ_ω)^(n-1,n-1) is not positive; shrink the grid")]
    PositivityLost { t: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone)]
pub struct DeformationFamily {
    pub doc: ModelDocument,
    /// The fibre at t = 0, with the structure equations of the real frame.
    pub base: LieComplexModel,
}

pub fn parse_family(text: &str) -> Result<DeformationFamily, DeformError> {
    let doc = parse_document(text)?;
    let base = model_from_document(&doc, &Q::zero())?;
    Ok(DeformationFamily { doc, base })
}

impl DeformationFamily {
    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn n(&self) -> usize {
        self.doc.n
    }

    /// φ^k(t), a (0,1)-form of the base.
    fn phi(&self, t: &Q) -> Vec<Form<Gq>> {
        (0..self.n()).map(|k| self.doc.deform[k].eval(self.n(), t)).collect()
    }

    /// The fibre coframe (η, η̄) in terms of (ω, ω̄): row i holds the coefficients of generator i.
    fn coframe(&self, t: &Q) -> Matrix<Gq> {
        let n = self.n();
        let phi = self.phi(t);
        let mut a = Matrix::identity(2 * n);
        for (k, f) in phi.iter().enumerate() {
            for (m, c) in f.terms() {
                let j = m.trailing_zeros() as usize;
                a.add_at(k, j, c.clone());
                let (jc, cc) = if j < n { (j + n, c.conj()) } else { (j - n, c.conj()) };
                a.add_at(k + n, jc, cc);
            }
        }
        a
    }
}

fn t_str(t: &Q) -> String {
    fmt_q(t)
}

/// Rewrite a form given in the generators `old` using images of each old generator.
fn substitute(f: &Form<Gq>, images: &[Form<Gq>]) -> Form<Gq> {
    let n = f.n();
    let mut out = Form::zero(n);
    for (m, c) in f.terms() {
        let mut term = Form::one(n).scale(c);
        for (i, img) in images.iter().enumerate() {
            if m & (1 << i) != 0 {
                term = term.wedge(img);
            }
        }
        out = out.add(&term);
    }
    out
}

fn one_forms(m: &Matrix<Gq>, n: usize) -> Vec<Form<Gq>> {
    (0..2 * n)
        .map(|i| {
            let mut f = Form::zero(n);
            for j in 0..2 * n {
                let c = m.get(i, j);
                if !c.is_zero() {
                    f.add_term(1 << j, c.clone());
                }
            }
            f
        })
        .collect()
}

/// A fibre together with the frame change back to the base.
#[derive(Debug, Clone)]
pub struct Fibre {
    pub t: Q,
    pub model: LieComplexModel,
    /// Images of the base generators (ω, ω̄) in the fibre frame.
    pub to_fibre: Vec<Form<Gq>>,
    /// Images of the fibre generators (η, η̄) in the base frame.
    pub to_base: Vec<Form<Gq>>,
}

impl Fibre {
    pub fn from_base(&self, f: &Form<Gq>) -> Form<Gq> {
        substitute(f, &self.to_fibre)
    }

    pub fn to_base(&self, f: &Form<Gq>) -> Form<Gq> {
        substitute(f, &self.to_base)
    }
}

pub fn fibre(family: &DeformationFamily, t: &Q) -> Result<Fibre, DeformError> {
    let n = family.n();
    let ts = t_str(t);
    let raw = LieComplexModel::unchecked(&family.doc.name, n, family.doc.structure_at(t));
    if let Some(v) = validate_model(&raw).violations.first() {
        return Err(DeformError::InvalidFibre { t: ts, reason: format!("f{}: {}", v.generator, v.constraint) });
    }
    for (k, (a, b)) in raw.structure().iter().zip(family.base.structure()).enumerate() {
        if a != b {
            return Err(DeformError::Drift { t: ts, generator: k + 1 });
        }
    }
    let a = family.coframe(t);
    let b = a.inverse().ok_or_else(|| DeformError::DegenerateCoframe { t: ts.clone() })?;
    let to_base = one_forms(&a, n);
    let to_fibre = one_forms(&b, n);
    let structure: Vec<Form<Gq>> = (0..n).map(|k| substitute(&family.base.d_form(&to_base[k]), &to_fibre)).collect();
    let name = if t.is_zero() { family.doc.name.clone() } else { format!("{}@t={}", family.doc.name, ts) };
    let mut model = LieComplexModel::new(&name, n, structure)
        .map_err(|e| DeformError::InvalidFibre { t: ts.clone(), reason: e.to_string() })?;
    if let Some(g) = &family.doc.metric {
        model = model.with_metric(g.clone());
    }
    Ok(Fibre { t: t.clone(), model, to_fibre, to_base })
}

/// The validated fibre model at `t`.
pub fn evaluate_family(family: &DeformationFamily, t: &Q) -> Result<LieComplexModel, DeformError> {
    fibre(family, t).map(|f| f.model)
}

/// Symmetric grid {0, ±step, …, ±count·step} in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    #[serde(serialize_with = "ser_q")]
    pub step: Q,
    pub count: usize,
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(q))
}

impl Grid {
    /// Parse `step:count`, e.g. `1/8:8`.
    pub fn parse(s: &str) -> Result<Self, DeformError> {
        let (a, b) = s.split_once(':').ok_or_else(|| DeformError::Grid(format!("expected step:count, got {s:?}")))?;
        let step = parse_q(a.trim()).ok_or_else(|| DeformError::Grid(format!("bad step {a:?}")))?;
        let count: usize = b.trim().parse().map_err(|_| DeformError::Grid(format!("bad count {b:?}")))?;
        if step <= Q::zero() {
            return Err(DeformError::Grid("step must be positive".into()));
        }
        Ok(Grid { step, count })
    }

    pub fn points(&self) -> Vec<Q> {
        let c = self.count as i64;
        (-c..=c).map(|j| self.step.clone() * Q::from_integer(j.into())).collect()
    }

    pub fn refine(&self) -> Grid {
        Grid { step: self.step.clone() / Q::from_integer(2.into()), count: 2 * self.count }
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid { step: Q::new(1.into(), 8.into()), count: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HRow {
    pub dh: Vec<usize>,
    pub hbc: Vec<usize>,
    pub ha: Vec<usize>,
    pub hddbar: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FibreRow {
    pub t: String,
    pub betti: Vec<usize>,
    pub hodge: Vec<Vec<usize>>,
    pub bott_chern: Vec<Vec<usize>>,
    pub aeppli: Vec<Vec<usize>>,
    /// Frölicher page dimensions, pages 1..=n+1.
    pub frolicher: Vec<Vec<Vec<usize>>>,
    pub h_sections: BTreeMap<String, HRow>,
    pub properties: BTreeMap<String, Verdict>,
    pub feasibility: BTreeMap<String, String>,
}

impl FibreRow {
    /// The row with its t label removed, for comparing fibres.
    fn invariants(&self) -> FibreRow {
        FibreRow { t: String::new(), ..self.clone() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimViolation {
    pub t: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimCheck {
    pub claim: String,
    /// Whether the central fibre satisfies the claim's hypothesis.
    pub applicable: bool,
    pub holds: bool,
    pub violations: Vec<ClaimViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub family: String,
    pub grid: Vec<String>,
    pub hs: Vec<String>,
    pub all_rows_identical: bool,
    pub claims: Vec<ClaimCheck>,
    pub rows: Vec<FibreRow>,
}

impl SweepReport {
    /// A sampled violation of a theorem the sweep checks.
    pub fn falsified(&self) -> bool {
        self.claims.iter().any(|c| c.applicable && !c.holds)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub hs: Vec<Q>,
    pub solver: SolverOptions,
    pub feasibility: bool,
    /// Test fixture: bump h^{0,1} at the first positive t so the claim checks must fire.
    pub inject_fault: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            hs: vec![Q::one()],
            solver: SolverOptions { restarts: 16, ..SolverOptions::default() },
            feasibility: true,
            inject_fault: false,
        }
    }
}

const ROW_PROPERTIES: [PropertyName; 6] = [
    PropertyName::Sgg,
    PropertyName::DdbarA,
    PropertyName::DdbarB,
    PropertyName::E1Degen,
    PropertyName::E2Degen,
    PropertyName::PartialE2,
];

pub fn fibre_row(model: &LieComplexModel, t: &Q, opts: &SweepOptions) -> FibreRow {
    let n = model.n();
    let lab = PropertyLab::new(model);
    let ops = lab.ops();
    let pages = lab.pages();
    let mut h_sections = BTreeMap::new();
    for h in &opts.hs {
        let dims = |th: Theory| -> Vec<usize> {
            (0..=2 * n).map(|k| cohomology(ops, &th, Grading::Degree(k)).map_or(0, |c| c.dim())).collect()
        };
        let verdicts: Vec<Verdict> = (0..=2 * n)
            .map(|k| lab.check(PropertyName::Hddbar, Some(k), Some(h)).map_or(Verdict::False, |r| r.verdict))
            .collect();
        let hddbar = if verdicts.iter().all(|v| v.holds()) { Verdict::True } else { Verdict::False };
        h_sections.insert(
            fmt_q(h),
            HRow { dh: dims(Theory::dh(h)), hbc: dims(Theory::hbc(h)), ha: dims(Theory::ha(h)), hddbar },
        );
    }
    let properties = ROW_PROPERTIES
        .iter()
        .map(|p| (p.id().to_string(), lab.check(*p, None, None).map_or(Verdict::False, |r| r.verdict)))
        .collect();
    let feasibility = if opts.feasibility {
        MetricKind::ALL.iter().map(|k| (k.id().to_string(), metric_feasibility(model, *k, &opts.solver).verdict)).collect()
    } else {
        BTreeMap::new()
    };
    FibreRow {
        t: fmt_q(t),
        betti: betti(ops),
        hodge: bidegree_table(ops, &Theory::DolbeaultBar),
        bott_chern: bidegree_table(ops, &Theory::BottChern),
        aeppli: bidegree_table(ops, &Theory::Aeppli),
        frolicher: pages.iter().map(|p| p.dims.clone()).collect(),
        h_sections,
        properties,
        feasibility,
    }
}

fn check_tables(rows: &[FibreRow], centre: &FibreRow, name: &str, get: impl Fn(&FibreRow) -> &Vec<Vec<usize>>) -> Vec<ClaimViolation> {
    let mut out = Vec::new();
    for r in rows {
        for (p, (a, b)) in get(r).iter().zip(get(centre)).enumerate() {
            for (q, (x, y)) in a.iter().zip(b).enumerate() {
                if x > y {
                    out.push(ClaimViolation { t: r.t.clone(), detail: format!("{name}^{{{p},{q}}} = {x} > {y} at t = 0") });
                }
            }
        }
    }
    out
}

fn claim(name: &str, applicable: bool, violations: Vec<ClaimViolation>) -> ClaimCheck {
    ClaimCheck { claim: name.into(), applicable, holds: violations.is_empty(), violations }
}

fn claims(rows: &[FibreRow], hs: &[Q]) -> Vec<ClaimCheck> {
    let centre = rows.iter().find(|r| r.t == "0").expect("grid contains 0");
    let mut out = Vec::new();
    let mut semi = check_tables(rows, centre, "h_dbar", |r| &r.hodge);
    semi.extend(check_tables(rows, centre, "h_BC", |r| &r.bott_chern));
    semi.extend(check_tables(rows, centre, "h_A", |r| &r.aeppli));
    out.push(claim("upper-semicontinuity", true, semi));
    for h in hs {
        let key = fmt_q(h);
        let c = &centre.h_sections[&key];
        let applicable = c.hddbar.holds();
        let mut jumps = Vec::new();
        let mut open = Vec::new();
        if applicable {
            for r in rows {
                let s = &r.h_sections[&key];
                if s.hbc != c.hbc || s.ha != c.ha {
                    jumps.push(ClaimViolation {
                        t: r.t.clone(),
                        detail: format!("h-BC {:?} / h-A {:?} differ from {:?} / {:?}", s.hbc, s.ha, c.hbc, c.ha),
                    });
                }
                if !s.hddbar.holds() {
                    open.push(ClaimViolation { t: r.t.clone(), detail: format!("HDDBAR(h={key}) fails") });
                }
            }
        }
        out.push(claim(&format!("non-jumping(h={key})"), applicable, jumps));
        out.push(claim(&format!("hddbar-openness(h={key})"), applicable, open));
    }
    let sgg = centre.properties.get("SGG").is_some_and(|v| v.holds());
    let mut sgg_open = Vec::new();
    if sgg {
        for r in rows {
            if !r.properties["SGG"].holds() {
                sgg_open.push(ClaimViolation { t: r.t.clone(), detail: "SGG fails".into() });
            }
            if r.hodge[0][1] != centre.hodge[0][1] {
                sgg_open.push(ClaimViolation { t: r.t.clone(), detail: format!("h^{{0,1}} = {} jumps", r.hodge[0][1]) });
            }
        }
    }
    out.push(claim("sgg-openness", sgg, sgg_open));
    out
}

pub fn sweep(family: &DeformationFamily, grid: &Grid, opts: &SweepOptions) -> Result<SweepReport, DeformError> {
    let mut rows = Vec::new();
    let mut injected = false;
    for t in grid.points() {
        let model = evaluate_family(family, &t)?;
        let mut row = fibre_row(&model, &t, opts);
        if opts.inject_fault && !injected && t > Q::zero() {
            row.hodge[0][1] += 1;
            injected = true;
        }
        rows.push(row);
    }
    let first = rows[0].invariants();
    let all_rows_identical = rows.iter().all(|r| r.invariants() == first);
    Ok(SweepReport {
        family: family.name().to_string(),
        grid: grid.points().iter().map(fmt_q).collect(),
        hs: opts.hs.iter().map(fmt_q).collect(),
        all_rows_identical,
        claims: claims(&rows, &opts.hs),
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct SectionSample {
    pub t: Q,
    /// ω_t on the fibre frame.
    pub metric: HermitianMetric,
    pub root_exact: bool,
    pub root_residual: f64,
    /// Γ^{n-2,n}_{ω_t} on the fibre frame.
    pub gamma: Form<Gq>,
    /// Γ_ω(t) on the base frame.
    pub gamma_omega: Form<Gq>,
    pub closed: bool,
    /// τ_ω(t): de Rham coordinates of Γ_ω(t).
    pub tau: Vec<Gq>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub t: String,
    pub metric: Vec<Vec<String>>,
    pub root_exact: bool,
    pub root_residual: f64,
    pub gamma: String,
    pub gamma_omega: String,
    pub closed: bool,
    pub tau: Vec<String>,
}

impl SectionSample {
    pub fn summary(&self) -> SampleSummary {
        SampleSummary {
            t: fmt_q(&self.t),
            metric: crate::metric::gram_strings(self.metric.gram()),
            root_exact: self.root_exact,
            root_residual: self.root_residual,
            gamma: form_text(&self.gamma),
            gamma_omega: form_text(&self.gamma_omega),
            closed: self.closed,
            tau: self.tau.iter().map(fmt_gq).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TauSection {
    pub samples: Vec<SectionSample>,
    /// Max coordinate jump between adjacent samples of the given grid.
    pub jump_coarse: f64,
    /// The same on the grid refined once.
    pub jump_fine: f64,
    pub max_root_residual: f64,
    pub all_closed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TauSummary {
    pub samples: Vec<SampleSummary>,
    pub jump_coarse: f64,
    pub jump_fine: f64,
    pub max_root_residual: f64,
    pub all_closed: bool,
}

impl TauSection {
    pub fn summary(&self) -> TauSummary {
        TauSummary {
            samples: self.samples.iter().map(|s| s.summary()).collect(),
            jump_coarse: self.jump_coarse,
            jump_fine: self.jump_fine,
            max_root_residual: self.max_root_residual,
            all_closed: self.all_closed,
        }
    }
}

/// One sample of τ_ω.
///
/// Ω_t = (Γ_ω)^{n-1,n-1}_t is exact data; its root ω_t is the only approximate step and
/// only enters through the L²-norm used to pick the minimal solution of ∂_tΓ = −∂̄_tΩ_t.
pub fn section_sample(
    family: &DeformationFamily,
    gamma_omega: &Form<Gq>,
    metric: &HermitianMetric,
    t: &Q,
    bound: u64,
) -> Result<SectionSample, DeformError> {
    let n = family.n();
    let fib = fibre(family, t)?;
    let model = &fib.model;
    let g_t = fib.from_base(gamma_omega);
    let big = g_t.component(Bidegree::new(n - 1, n - 1));
    let central = metric.form().power(n - 1);
    let (omega_t, exact, residual) = if big == central {
        (metric.clone(), true, 0.0)
    } else {
        let r = root_n_minus_1(&big, bound).map_err(|_| DeformError::PositivityLost { t: fmt_q(t) })?;
        (r.metric, r.exact, r.residual)
    };
    let ops = Differentials::<Gq>::new(model);
    let ip = InnerProduct::new(model.space().clone(), &omega_t);
    let rhs = ops.pbar.apply(&big).scale(&-Gq::one());
    let del = ops.partial.restrict_source(|b| b == Bidegree::new(n - 2, n));
    let gamma = minimal_norm_solution(&del, &rhs, &ip)?;
    let total_t = gamma.conjugate().add(&big).add(&gamma);
    let closed = ops.d.apply(&total_t).is_zero();
    let total = fib.to_base(&total_t);
    let dr = cohomology(&Differentials::<Gq>::new(&family.base), &Theory::DeRham, Grading::Degree(2 * n - 2))
        .expect("de Rham");
    let tau = dr.coordinates_of(family.base.space(), &total).unwrap_or_default();
    Ok(SectionSample { t: t.clone(), metric: omega_t, root_exact: exact, root_residual: residual, gamma, gamma_omega: total, closed, tau })
}

fn max_jump(samples: &[SectionSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            w[0].tau
                .iter()
                .zip(&w[1].tau)
                .map(|(a, b)| {
                    let d = a - b;
                    q_to_f64(&d.re).hypot(q_to_f64(&d.im))
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// τ_ω(t) over the grid, with a two-level continuity diagnostic.
pub fn tau_section(
    family: &DeformationFamily,
    metric: &HermitianMetric,
    grid: &Grid,
    bound: u64,
) -> Result<TauSection, DeformError> {
    let el = crate::cones::e2sg_element(&family.base, metric).map_err(|_| DeformError::NotSg)?;
    let run = |g: &Grid| -> Result<Vec<SectionSample>, DeformError> {
        g.points().iter().map(|t| section_sample(family, &el.gamma_omega, metric, t, bound)).collect()
    };
    let samples = run(grid)?;
    let fine = run(&grid.refine())?;
    Ok(TauSection {
        jump_coarse: max_jump(&samples),
        jump_fine: max_jump(&fine),
        max_root_residual: samples.iter().chain(&fine).map(|s| s.root_residual).fold(0.0, f64::max),
        all_closed: samples.iter().chain(&fine).all(|s| s.closed),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::scalar::q;

    fn family(name: &str) -> DeformationFamily {
        parse_family(corpus::family_source(name).unwrap()).unwrap()
    }

    #[test]
    fn central_fibre_is_base() {
        let f = family("iwasawa");
        let m = evaluate_family(&f, &Q::zero()).unwrap();
        assert_eq!(m.structure(), corpus::model("iwasawa").unwrap().structure());
        assert!(evaluate_family(&f, &q(1, 8)).is_ok());
    }

    #[test]
    fn drift_and_broken_rejected() {
        let f = family("iwasawa_drift");
        assert!(evaluate_family(&f, &Q::zero()).is_ok());
        assert!(matches!(evaluate_family(&f, &q(1, 8)), Err(DeformError::Drift { generator: 3, .. })));
        let b = family("broken");
        assert!(matches!(evaluate_family(&b, &q(1, 2)), Err(DeformError::InvalidFibre { .. })));
    }

    #[test]
    fn grid_arithmetic() {
        let g = Grid::parse("1/8:8").unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 17);
        assert_eq!(pts[0], q(-1, 1));
        assert_eq!(pts[8], Q::zero());
        assert!(Grid::parse("0:3").is_err());
        assert!(Grid::parse("1/2").is_err());
        assert_eq!(g.refine().points().len(), 33);
    }

    #[test]
    fn frame_change_round_trip() {
        let f = family("torus2");
        let fib = fibre(&f, &q(1, 3)).unwrap();
        let w = HermitianMetric::identity(2).form();
        assert_eq!(fib.to_base(&fib.from_base(&w)), w);
    }
}
