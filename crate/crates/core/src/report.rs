//! Report assembly, theorem cross-checks and deterministic serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::One;
use serde::Serialize;

use crate::cohomology::{
    betti, bidegree_table, cohomology, degeneration_page, t_matrix, Differentials, Grading, Theory,
};
use crate::cones::{
    cone_membership, e2sg_element, e_real_basis, j_omega, metric_feasibility, open_cone_probe, pairing_probe,
    real_dbar_xi_basis, recheck_feasibility, ConeSet, E2sGSummary, FeasibilityResult, Membership, MetricKind,
    OpenConeProbe, PairingProbe, SolverOptions,
};
use crate::deform::SweepReport;
use crate::forms::{Bidegree, Form};
use crate::metric::{gram_strings, verify_identity, HermitianMetric, IdentityName, IdentityStatus, OperatorBundle};
use crate::model::{validate_model, LieComplexModel};
use crate::properties::{ChainReport, MapRanks, PropertyLab, PropertyName, PropertyReport, Verdict};
use crate::scalar::{fmt_q, Gq, Q};

/// Pretty JSON with sorted keys and a trailing newline.
pub fn serialize_report<T: Serialize>(report: &T) -> String {
    // serde_json's Value map is ordered, so a round trip sorts every object
    let v = serde_json::to_value(report).expect("reports serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

/// A sampled violation of a proven statement; these indicate an implementation fault.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    pub statement: String,
    pub detail: String,
}

fn violation(check: &str, statement: &str, detail: impl Into<String>) -> Violation {
    Violation { check: check.into(), statement: statement.into(), detail: detail.into() }
}

#[derive(Debug, Clone)]
pub struct AnalyzeConfig {
    pub hs: Vec<Q>,
    /// Degrees for the per-k property checks; all degrees when `None`.
    pub ks: Option<Vec<usize>>,
    pub metric: Option<HermitianMetric>,
    pub solver: SolverOptions,
    pub feasibility: bool,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig { hs: vec![Q::one()], ks: None, metric: None, solver: SolverOptions::default(), feasibility: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryTable {
    pub theory: String,
    /// `bidegree[p][q]`.
    pub bidegree: Vec<Vec<usize>>,
    pub degree: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrolicherSummary {
    /// Dimensions of pages 1..=n+1.
    pub pages: Vec<Vec<Vec<usize>>>,
    pub degeneration_page: usize,
    #[serde(rename = "E1_degenerate")]
    pub e1_degenerate: bool,
    #[serde(rename = "E2_degenerate")]
    pub e2_degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HSection {
    pub h: String,
    pub dh: Vec<usize>,
    pub hbc: Vec<usize>,
    pub ha: Vec<usize>,
    /// HDDBAR verdict in each checked degree.
    pub hddbar: BTreeMap<usize, Verdict>,
    pub canonical_maps: Vec<MapRanks>,
    pub chains: Vec<ChainReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TSummary {
    pub e2: usize,
    pub rank_t: usize,
    pub ker_d2: usize,
    pub surjective: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Probe {
    pub name: String,
    pub hypothesis: bool,
    pub conclusion: bool,
    /// False only for a counterexample.
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub model: String,
    pub n: usize,
    pub unimodular: bool,
    pub b: Vec<usize>,
    pub betti: BTreeMap<String, String>,
    pub cohomology: Vec<TheoryTable>,
    pub frolicher: FrolicherSummary,
    pub properties: Vec<PropertyReport>,
    pub h_sections: Vec<HSection>,
    pub t_map: Option<TSummary>,
    /// dim ker Δ̃^{p,q} for the chosen metric.
    pub tilde_laplacian_kernel: Option<Vec<Vec<usize>>>,
    pub feasibility: Vec<FeasibilityResult>,
    pub probes: Vec<Probe>,
    pub violations: Vec<Violation>,
}

const GLOBAL_PROPERTIES: [PropertyName; 6] = [
    PropertyName::Sgg,
    PropertyName::DdbarA,
    PropertyName::DdbarB,
    PropertyName::E1Degen,
    PropertyName::E2Degen,
    PropertyName::PartialE2,
];

fn holds(reports: &[PropertyReport], p: PropertyName) -> bool {
    reports.iter().any(|r| r.property == p.id() && r.verdict.holds())
}

pub fn analyze(model: &LieComplexModel, cfg: &AnalyzeConfig) -> AnalyzeReport {
    let n = model.n();
    let lab = PropertyLab::new(model);
    let ops = lab.ops();
    let pages = lab.pages();
    let mut violations = Vec::new();
    let b = betti(ops);

    let mut tables = Vec::new();
    for th in [Theory::DolbeaultBar, Theory::DolbeaultPartial, Theory::BottChern, Theory::Aeppli] {
        let t = bidegree_table(ops, &th);
        let degree = (0..=2 * n).map(|k| (0..=n).filter(|p| k >= *p && k - p <= n).map(|p| t[p][k - p]).sum()).collect();
        tables.push(TheoryTable { theory: th.label(), bidegree: t, degree });
    }

    let last = pages.last().expect("at least one page");
    for (k, bk) in b.iter().enumerate() {
        if last.total(k) != *bk {
            violations.push(violation(
                "frolicher-abutment",
                "the Frölicher spectral sequence converges to de Rham cohomology",
                format!("sum of e_inf in degree {k} is {} but b_{k} = {bk}", last.total(k)),
            ));
        }
    }

    let properties: Vec<PropertyReport> =
        GLOBAL_PROPERTIES.iter().filter_map(|p| lab.check(*p, None, None).ok()).collect();
    for r in properties.iter().filter(|r| r.verdict == Verdict::False) {
        if !lab.recheck_witness(r) {
            violations.push(violation("witness-recheck", "false verdicts carry a valid witness", r.property.clone()));
        }
    }
    let sgg = holds(&properties, PropertyName::Sgg);
    let e1 = holds(&properties, PropertyName::E1Degen);
    let e2 = holds(&properties, PropertyName::E2Degen);
    if sgg && !holds(&properties, PropertyName::PartialE2) {
        violations.push(violation("sgg-partial-e2", "sGG manifolds have d_2 = 0 on E_2^{n-2,n}", "PARTIAL-E2 fails"));
    }

    let ks: Vec<usize> = cfg.ks.clone().unwrap_or_else(|| (0..=2 * n).collect());
    let mut h_sections = Vec::new();
    for h in &cfg.hs {
        let dims = |th: Theory| -> Vec<usize> {
            (0..=2 * n).map(|k| cohomology(ops, &th, Grading::Degree(k)).map_or(0, |c| c.dim())).collect()
        };
        let (dh, hbc, ha) = (dims(Theory::dh(h)), dims(Theory::hbc(h)), dims(Theory::ha(h)));
        let mut hddbar = BTreeMap::new();
        let mut maps = Vec::new();
        let mut chains = Vec::new();
        for &k in ks.iter().filter(|k| **k <= 2 * n) {
            if let Ok(r) = lab.check(PropertyName::Hddbar, Some(k), Some(h)) {
                hddbar.insert(k, r.verdict);
            }
            maps.push(lab.canonical_maps(k, h).ranks());
            if k >= 1 {
                if let Ok(c) = lab.equivalence_chain(k, h) {
                    if !c.consistent {
                        violations.push(violation(
                            "equivalence-chain",
                            "L_k, A_k, C_k, D'_{k-1} and B_{k-1} are equivalent",
                            format!("k = {k}, h = {}: {:?}", fmt_q(h), c.verdicts),
                        ));
                    }
                    chains.push(c);
                }
            }
        }
        let (bc, ae) = (&tables[2].degree, &tables[3].degree);
        for k in 0..=2 * n {
            if hbc[k] != bc[k] || ha[k] != ae[k] {
                violations.push(violation(
                    "h-bc-decomposition",
                    "h-BC and h-A numbers are the sums of the Bott-Chern and Aeppli numbers",
                    format!("h = {}, k = {k}: {} vs {}, {} vs {}", fmt_q(h), hbc[k], bc[k], ha[k], ae[k]),
                ));
            }
            if dh[k] != b[k] {
                violations.push(violation(
                    "dh-de-rham",
                    "d_h-cohomology is isomorphic to de Rham cohomology",
                    format!("h = {}, k = {k}: {} vs {}", fmt_q(h), dh[k], b[k]),
                ));
            }
            if 2 * b[k] > hbc[k] + ha[k] {
                violations.push(violation(
                    "at-inequality",
                    "2 b_k <= h-BC + h-A dimensions",
                    format!("h = {}, k = {k}: 2*{} > {} + {}", fmt_q(h), b[k], hbc[k], ha[k]),
                ));
            }
        }
        let all_k = ks.len() == 2 * n + 1 && hddbar.values().all(|v| v.holds());
        if all_k {
            if !e1 {
                violations.push(violation(
                    "hddbar-e1",
                    "h-ddbar-manifolds have E_1-degenerate Frölicher spectral sequence",
                    format!("h = {}", fmt_q(h)),
                ));
            }
            for k in 0..=2 * n {
                if 2 * b[k] != hbc[k] + ha[k] {
                    violations.push(violation(
                        "hddbar-equality",
                        "on h-ddbar-manifolds the h-BC and h-A numbers equal b_k",
                        format!("h = {}, k = {k}", fmt_q(h)),
                    ));
                }
            }
        }
        h_sections.push(HSection { h: fmt_q(h), dh, hbc, ha, hddbar, canonical_maps: maps, chains });
    }

    let t_map = (n >= 2).then(|| {
        let page2 = &pages[1];
        let bd = Bidegree::new(n - 2, n);
        let e2dim = page2.dim(bd);
        let d2 = page2.d.get(&bd).map_or(0, |m| m.rank());
        let rank_t = t_matrix(ops, page2).rank();
        let ker = e2dim - d2;
        if rank_t != ker {
            violations.push(violation("t-image", "the image of T is ker d_2^{n-2,n}", format!("rank T = {rank_t}, ker d_2 = {ker}")));
        }
        if sgg && rank_t != e2dim {
            violations.push(violation("sgg-t-surjective", "T is surjective on sGG manifolds", format!("rank T = {rank_t} < {e2dim}")));
        }
        TSummary { e2: e2dim, rank_t, ker_d2: ker, surjective: rank_t == e2dim }
    });

    let metric = cfg.metric.clone().or_else(|| HermitianMetric::for_model(model).ok());
    let tilde = metric.as_ref().and_then(|g| OperatorBundle::build(model, g, &Q::one()).ok()).map(|bundle| {
        let page2 = &pages[1];
        let mut t = vec![vec![0; n + 1]; n + 1];
        for p in 0..=n {
            for q in 0..=n {
                let bd = Bidegree::new(p, q);
                t[p][q] = crate::linalg::Subspace::kernel(&bundle.lap_tilde.block(bd, bd)).dim();
                if t[p][q] != page2.dim(bd) {
                    violations.push(violation(
                        "tilde-laplacian",
                        "ker of the E_2 Laplacian is isomorphic to E_2",
                        format!("({p},{q}): {} vs e_2 = {}", t[p][q], page2.dim(bd)),
                    ));
                }
            }
        }
        t
    });

    let mut feasibility = Vec::new();
    let mut probes = Vec::new();
    if cfg.feasibility {
        for kind in MetricKind::ALL {
            let r = metric_feasibility(model, kind, &cfg.solver);
            if !recheck_feasibility(model, &r) {
                violations.push(violation("feasibility-recheck", "feasible verdicts carry exact certificates", kind.id()));
            }
            feasibility.push(r);
        }
        let feasible = |k: MetricKind| feasibility.iter().any(|r| r.kind == k && r.feasible());
        if feasible(MetricKind::Kahler) && !e1 {
            violations.push(violation("kahler-e1", "Kähler manifolds have E_1-degenerate Frölicher spectral sequence", ""));
        }
        let skt = feasible(MetricKind::Skt);
        probes.push(Probe { name: "skt-implies-e2".into(), hypothesis: skt, conclusion: e2, consistent: !skt || e2 });
        let sg = feasible(MetricKind::StronglyGauduchon);
        probes.push(Probe { name: "sg-implies-e2".into(), hypothesis: sg, conclusion: e2, consistent: !sg || e2 });
    }

    AnalyzeReport {
        model: model.name().to_string(),
        n,
        unimodular: validate_model(model).unimodular,
        betti: b.iter().enumerate().map(|(k, v)| (format!("b{k}"), v.to_string())).collect(),
        b,
        cohomology: tables,
        frolicher: FrolicherSummary {
            pages: pages.iter().map(|p| p.dims.clone()).collect(),
            degeneration_page: degeneration_page(pages),
            e1_degenerate: e1,
            e2_degenerate: e2,
        },
        properties,
        h_sections,
        t_map,
        tilde_laplacian_kernel: tilde,
        feasibility,
        probes,
        violations,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub id: String,
    pub h: String,
    pub lambda: Option<String>,
    pub status: String,
    pub degrees_checked: usize,
    pub exact_zero: bool,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitiesReport {
    pub model: String,
    pub metric: Vec<Vec<String>>,
    pub kahler: bool,
    pub rows: Vec<IdentityRow>,
    pub violations: Vec<Violation>,
}

/// Evaluate registry identities; Kähler-only rows are skipped on non-Kähler metrics
/// unless `expect_violation` asks for their residuals.
pub fn identities(
    model: &LieComplexModel,
    metric: &HermitianMetric,
    ids: &[IdentityName],
    hs: &[Q],
    expect_violation: bool,
) -> IdentitiesReport {
    let kahler = metric.is_kahler(model);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &id in ids {
        for h in hs {
            if id.requires_kahler() && !kahler && !expect_violation {
                rows.push(IdentityRow {
                    id: id.id().into(),
                    h: fmt_q(h),
                    lambda: None,
                    status: "skipped (non-Kähler)".into(),
                    degrees_checked: 0,
                    exact_zero: false,
                    norm: 0.0,
                });
                continue;
            }
            let r = match verify_identity(id, model, metric, h, None) {
                Ok(r) => r,
                Err(e) => {
                    violations.push(violation("identity-error", "registry identities evaluate", format!("{}: {e}", id.id())));
                    continue;
                }
            };
            let status = match &r.status {
                IdentityStatus::Pass => "pass".to_string(),
                IdentityStatus::Fail => {
                    violations.push(violation(
                        "identity",
                        "registry identity holds under its hypotheses",
                        format!("{} at h = {}: residual norm {:e}", r.id, r.h, r.max_norm()),
                    ));
                    "fail".to_string()
                }
                IdentityStatus::ViolatedExpected => "violated (expected)".to_string(),
                IdentityStatus::Skipped(why) => format!("skipped ({why})"),
            };
            rows.push(IdentityRow {
                exact_zero: r.residual_zero(),
                norm: r.max_norm(),
                degrees_checked: r.degrees.len(),
                id: r.id,
                h: r.h,
                lambda: r.lambda,
                status,
            });
        }
    }
    IdentitiesReport { model: model.name().to_string(), metric: gram_strings(metric.gram()), kahler, rows, violations }
}

#[derive(Debug, Clone, Serialize)]
pub struct JSummary {
    pub rank: usize,
    pub injective: bool,
    pub closed: bool,
    pub t_identity: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateMembership {
    pub candidate: String,
    pub memberships: Vec<Membership>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConesReport {
    pub model: String,
    pub metric: Vec<Vec<String>>,
    pub feasibility: Vec<FeasibilityResult>,
    pub e2sg: Option<E2sGSummary>,
    pub e2sg_error: Option<String>,
    pub j_omega: Option<JSummary>,
    pub j_omega_error: Option<String>,
    pub memberships: Vec<CandidateMembership>,
    pub open_cone: Option<OpenConeProbe>,
    pub pairings: Vec<PairingProbe>,
    pub violations: Vec<Violation>,
}

pub fn cones(model: &LieComplexModel, metric: &HermitianMetric, solver: &SolverOptions) -> ConesReport {
    let n = model.n();
    let mut violations = Vec::new();
    let mut feasibility = Vec::new();
    for kind in MetricKind::ALL {
        let r = metric_feasibility(model, kind, solver);
        if !recheck_feasibility(model, &r) {
            violations.push(violation("feasibility-recheck", "feasible verdicts carry exact certificates", kind.id()));
        }
        feasibility.push(r);
    }
    let mut report = ConesReport {
        model: model.name().to_string(),
        metric: gram_strings(metric.gram()),
        feasibility,
        e2sg: None,
        e2sg_error: None,
        j_omega: None,
        j_omega_error: None,
        memberships: Vec::new(),
        open_cone: None,
        pairings: Vec::new(),
        violations: Vec::new(),
    };
    if n < 2 {
        report.violations = violations;
        return report;
    }
    let el = e2sg_element(model, metric);
    match &el {
        Ok(el) => {
            if !(el.closed && el.real && el.t_matches) {
                violations.push(violation(
                    "e2sg-element",
                    "Γ_ω is real and d-closed and T maps its class to [[Γ]]",
                    format!("closed={} real={} t={}", el.closed, el.real, el.t_matches),
                ));
            }
            report.e2sg = Some(el.summary());
        }
        Err(e) => report.e2sg_error = Some(e.to_string()),
    }
    match j_omega(model, metric) {
        Ok(j) => {
            if !(j.injective && j.closed && j.t_identity) {
                violations.push(violation(
                    "j-omega",
                    "j_ω is injective and T∘j_ω is the identity",
                    format!("rank={} closed={} t_identity={}", j.rank, j.closed, j.t_identity),
                ));
            }
            report.j_omega = Some(JSummary { rank: j.rank, injective: j.injective, closed: j.closed, t_identity: j.t_identity });
        }
        Err(e) => report.j_omega_error = Some(e.to_string()),
    }

    let mut candidates: Vec<(String, Form<Gq>)> = vec![("0".into(), Form::zero(n))];
    if let Ok(el) = &el {
        candidates.push(("gamma".into(), el.gamma.clone()));
    }
    let e_basis = e_real_basis(model);
    if let Some(f) = e_basis.first() {
        candidates.push(("e_real[0]".into(), f.clone()));
    }
    for (name, c) in &candidates {
        let ms: Vec<Membership> =
            ConeSet::ALL.iter().filter_map(|s| cone_membership(model, metric, *s, c, solver).ok()).collect();
        let get = |s: ConeSet| ms.iter().find(|m| m.set == s).map(|m| m.verdict.as_str()).unwrap_or("");
        let member = |s: ConeSet| get(s) == "member";
        let not_member = |s: ConeSet| get(s) == "not-member";
        if member(ConeSet::V) && not_member(ConeSet::UGamma) {
            violations.push(violation("v-in-u", "V ⊆ U_γ", name.clone()));
        }
        if member(ConeSet::EReal) && not_member(ConeSet::CRealGamma) {
            violations.push(violation("e-real-in-creal", "E_ℝ ⊆ C^∞_{n-2,n}(X,ℝ)_γ", name.clone()));
        }
        if member(ConeSet::V) && not_member(ConeSet::EReal) {
            violations.push(violation("v-in-e-real", "V = U_γ ∩ E_ℝ", name.clone()));
        }
        if member(ConeSet::UGamma) && member(ConeSet::EReal) && not_member(ConeSet::V) {
            violations.push(violation("u-cap-e-real", "V = U_γ ∩ E_ℝ", name.clone()));
        }
        report.memberships.push(CandidateMembership { candidate: name.clone(), memberships: ms });
    }
    if el.is_ok() {
        report.open_cone = open_cone_probe(model, metric).ok();
        if let Some(p) = &report.open_cone {
            if !p.in_real_e2 {
                violations.push(violation("open-cone", "[[Γ]] lies in the real E_2 space", ""));
            }
        }
    }

    let ops = Differentials::<Gq>::new(model);
    let mut samples = e_basis.clone();
    if let Ok(el) = &el {
        samples.push(el.gamma.clone());
    }
    if let Ok(p) = pairing_probe(model, &Form::zero(n), &samples) {
        report.pairings.push(p);
    }
    for xi in real_dbar_xi_basis(model) {
        let theta = ops.partial.apply(&xi);
        if let Ok(p) = pairing_probe(model, &theta, &e_basis) {
            if !p.all_real {
                violations.push(violation(
                    "pairing-real",
                    "∫∂ξ∧Γ is real on E_ℝ when ∂̄ξ is real",
                    format!("{} non-real values", p.nonreal),
                ));
            }
            report.pairings.push(p);
        }
    }
    report.violations = violations;
    report
}

/// Everything `analyze`, `identities` and `cones` produce for one model.
#[derive(Debug, Clone, Serialize)]
pub struct FullReport {
    pub analyze: AnalyzeReport,
    pub identities: IdentitiesReport,
    pub cones: ConesReport,
}

impl FullReport {
    pub fn violations(&self) -> usize {
        self.analyze.violations.len() + self.identities.violations.len() + self.cones.violations.len()
    }
}

/// The statement a sweep claim samples.
pub fn claim_statement(claim: &str) -> &'static str {
    match claim.split('(').next().unwrap_or("") {
        "upper-semicontinuity" => "Hodge, Bott-Chern and Aeppli numbers are upper semicontinuous in t",
        "non-jumping" => "h-cohomology numbers do not jump near an h-ddbar fibre",
        "hddbar-openness" => "the h-ddbar property is open under small deformations",
        "sgg-openness" => "sGG is deformation open and h^{0,1} is constant near an sGG fibre",
        _ => "sampled deformation claim",
    }
}

fn table(out: &mut String, title: &str, t: &[Vec<usize>]) {
    let _ = writeln!(out, "{title}");
    for (p, row) in t.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>3}")).collect();
        let _ = writeln!(out, "  p={p} {}", cells.join(""));
    }
}

fn violations_text(out: &mut String, vs: &[Violation]) {
    if vs.is_empty() {
        let _ = writeln!(out, "violations: none");
    }
    for v in vs {
        let _ = writeln!(out, "FALSIFIED {}: {} ({})", v.check, v.statement, v.detail);
    }
}

pub fn analyze_text(r: &AnalyzeReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {} (n = {}, unimodular = {})", r.model, r.n, r.unimodular);
    let _ = writeln!(out, "betti {:?}", r.b);
    for t in &r.cohomology {
        table(&mut out, &t.theory, &t.bidegree);
    }
    for (i, p) in r.frolicher.pages.iter().enumerate() {
        table(&mut out, &format!("E_{}", i + 1), p);
    }
    let _ = writeln!(
        out,
        "degenerates at E_{} (E1: {}, E2: {})",
        r.frolicher.degeneration_page, r.frolicher.e1_degenerate, r.frolicher.e2_degenerate
    );
    for p in &r.properties {
        let _ = writeln!(out, "{:<12} {}", p.property, p.verdict.as_str());
    }
    for s in &r.h_sections {
        let _ = writeln!(out, "h = {}: d_h {:?} h-BC {:?} h-A {:?}", s.h, s.dh, s.hbc, s.ha);
        let hd: Vec<String> = s.hddbar.iter().map(|(k, v)| format!("{k}:{}", v.as_str())).collect();
        let _ = writeln!(out, "  HDDBAR {}", hd.join(" "));
        let bad = s.chains.iter().filter(|c| !c.consistent).count();
        let _ = writeln!(out, "  equivalence chain: {} degrees, {} inconsistent", s.chains.len(), bad);
    }
    if let Some(t) = &r.t_map {
        let _ = writeln!(out, "T: e_2^(n-2,n) = {}, rank T = {}, ker d_2 = {}", t.e2, t.rank_t, t.ker_d2);
    }
    for f in &r.feasibility {
        let _ = writeln!(out, "{:<10} {}", f.kind.id(), f.verdict);
    }
    for p in &r.probes {
        if !p.consistent {
            let _ = writeln!(out, "COUNTEREXAMPLE {}: hypothesis holds but conclusion fails", p.name);
        }
    }
    violations_text(&mut out, &r.violations);
    out
}

pub fn identities_text(r: &IdentitiesReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {} (Kähler metric: {})", r.model, r.kahler);
    for row in &r.rows {
        let _ = writeln!(out, "{:<16} h={:<6} {:<22} norm={:e}", row.id, row.h, row.status, row.norm);
    }
    violations_text(&mut out, &r.violations);
    out
}

pub fn cones_text(r: &ConesReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {}", r.model);
    for f in &r.feasibility {
        let best = f.best_min_eigenvalue.map_or("-".to_string(), |b| format!("{b:.6}"));
        let _ = writeln!(out, "{:<10} {:<10} best min-eig {}", f.kind.id(), f.verdict, best);
    }
    match (&r.e2sg, &r.e2sg_error) {
        (Some(e), _) => {
            let _ = writeln!(out, "Γ = {}", e.gamma);
            let _ = writeln!(out, "[[Γ]] = {:?}, closed {}, real {}, T matches {}", e.e2, e.closed, e.real, e.t_matches);
        }
        (None, Some(err)) => {
            let _ = writeln!(out, "E2sG element: {err}");
        }
        _ => {}
    }
    if let Some(j) = &r.j_omega {
        let _ = writeln!(out, "j_ω: rank {}, injective {}, T∘j = id {}", j.rank, j.injective, j.t_identity);
    }
    for c in &r.memberships {
        let v: Vec<String> = c.memberships.iter().map(|m| format!("{}:{}", m.set.id(), m.verdict)).collect();
        let _ = writeln!(out, "{}: {}", c.candidate, v.join(" "));
    }
    violations_text(&mut out, &r.violations);
    out
}

pub fn sweep_text(r: &SweepReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "family {} over {} points; all rows identical: {}", r.family, r.grid.len(), r.all_rows_identical);
    for c in &r.claims {
        let state = if !c.applicable { "n/a" } else if c.holds { "holds" } else { "VIOLATED" };
        let _ = writeln!(out, "{:<26} {}", c.claim, state);
        for v in &c.violations {
            let _ = writeln!(out, "  t = {}: {}", v.t, v.detail);
        }
    }
    for row in &r.rows {
        let _ = writeln!(out, "t = {:<6} b {:?} h^(p,q) {:?}", row.t, row.betti, row.hodge);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn torus_report_fields() {
        let m = corpus::model("torus2").unwrap();
        let cfg = AnalyzeConfig { feasibility: false, ..AnalyzeConfig::default() };
        let r = analyze(&m, &cfg);
        let s = serialize_report(&r);
        assert!(s.contains("\"b2\": \"6\""));
        assert!(s.contains("\"E1_degenerate\": true"));
        assert!(r.violations.is_empty());
        assert_eq!(s, serialize_report(&analyze(&m, &cfg)));
    }

    #[test]
    fn identity_report_all_pass() {
        let m = corpus::model("torus2").unwrap();
        let g = HermitianMetric::identity(2);
        let r = identities(&m, &g, &IdentityName::ALL, &[Q::one()], false);
        assert!(r.rows.iter().all(|row| row.status == "pass"), "{:?}", r.rows);
        assert!(serialize_report(&r).contains("\"violations\": []"));
    }
}
