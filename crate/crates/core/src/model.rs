//! Lie algebras with a complex structure, given by dω^k on a (1,0)-coframe.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::forms::{anti_gen, holo_gen, Bidegree, Form, FormSpace, Monomial};
use crate::linalg::Matrix;
use crate::operator::Operator;
use crate::scalar::{fmt_gq, ComplexScalar, Gq, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("generator f{generator}: {constraint}")]
    Structural { generator: usize, constraint: String },
    #[error("h must be nonzero")]
    ZeroH,
    #[error("metric: {0}")]
    Metric(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub generator: usize,
    pub constraint: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// d vanishes on (2n-1)-forms; needed for integration by parts.
    pub unimodular: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Which differential to assemble.
#[derive(Debug, Clone, PartialEq)]
pub enum Differential {
    Partial,
    PartialBar,
    D,
    /// h∂ + ∂̄
    Dh(Q),
    /// d_{-1/h} = -(1/h)∂ + ∂̄
    DMinusInvH(Q),
    /// ∂∂̄
    PartialPartialBar,
}

#[derive(Clone)]
pub struct LieComplexModel {
    name: String,
    n: usize,
    /// dω^k for k = 1..n, as general 2-forms.
    structure: Vec<Form<Gq>>,
    /// Optional Hermitian Gram g_{jk̄} of a metric ω = i Σ g_{jk̄} ω^j∧ω̄^k.
    metric: Option<Matrix<Gq>>,
    space: Arc<FormSpace>,
}

impl fmt::Debug for LieComplexModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LieComplexModel({}, n={})", self.name, self.n)
    }
}

impl LieComplexModel {
    /// Build and validate.
    pub fn new(name: &str, n: usize, structure: Vec<Form<Gq>>) -> Result<Self, ModelError> {
        let m = Self::unchecked(name, n, structure);
        let report = validate_model(&m);
        if let Some(v) = report.violations.first() {
            return Err(ModelError::Structural { generator: v.generator, constraint: v.constraint.clone() });
        }
        Ok(m)
    }

    /// Build without validation, for inspecting invalid structures.
    pub fn unchecked(name: &str, n: usize, structure: Vec<Form<Gq>>) -> Self {
        assert_eq!(structure.len(), n, "one structure equation per generator");
        LieComplexModel { name: name.to_string(), n, structure, metric: None, space: Arc::new(FormSpace::new(n)) }
    }

    pub fn with_metric(mut self, g: Matrix<Gq>) -> Self {
        self.metric = Some(g);
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &Arc<FormSpace> {
        &self.space
    }

    pub fn structure(&self) -> &[Form<Gq>] {
        &self.structure
    }

    pub fn metric(&self) -> Option<&Matrix<Gq>> {
        self.metric.as_ref()
    }

    /// A^k_{ij}: coefficient of ω^i∧ω^j (i<j) in dω^k; indices 1-based.
    pub fn a_coeff(&self, k: usize, i: usize, j: usize) -> Gq {
        self.structure[k - 1].coeff(holo_gen(i - 1) | holo_gen(j - 1))
    }

    /// B^k_{ij̄}: coefficient of ω^i∧ω̄^j in dω^k; indices 1-based.
    pub fn b_coeff(&self, k: usize, i: usize, j: usize) -> Gq {
        self.structure[k - 1].coeff(holo_gen(i - 1) | anti_gen(j - 1, self.n))
    }

    /// d of a single generator bit.
    fn d_generator(&self, bit: usize) -> Form<Gq> {
        if bit < self.n {
            self.structure[bit].clone()
        } else {
            self.structure[bit - self.n].conjugate()
        }
    }

    /// d of an ascending monomial, by the Leibniz rule.
    pub fn d_monomial(&self, m: Monomial) -> Form<Gq> {
        let n = self.n;
        let mut out = Form::zero(n);
        let bits: Vec<usize> = (0..2 * n).filter(|b| m & (1 << b) != 0).collect();
        for (pos, &b) in bits.iter().enumerate() {
            let before: Monomial = bits[..pos].iter().fold(0, |acc, x| acc | (1 << x));
            let after: Monomial = bits[pos + 1..].iter().fold(0, |acc, x| acc | (1 << x));
            let term = Form::monomial(n, before, Gq::one())
                .wedge(&self.d_generator(b))
                .wedge(&Form::monomial(n, after, Gq::one()));
            out = if pos % 2 == 0 { out.add(&term) } else { out.sub(&term) };
        }
        out
    }

    pub fn d_form(&self, a: &Form<Gq>) -> Form<Gq> {
        let mut out = Form::zero(self.n);
        for (m, c) in a.terms() {
            out = out.add(&self.d_monomial(*m).scale(c));
        }
        out
    }

    pub fn partial_form(&self, a: &Form<Gq>) -> Form<Gq> {
        self.operator::<Gq>(&Differential::Partial).apply(a)
    }

    pub fn partial_bar_form(&self, a: &Form<Gq>) -> Form<Gq> {
        self.operator::<Gq>(&Differential::PartialBar).apply(a)
    }

    /// Assemble a differential as an operator on the full form space.
    pub fn operator<S: ComplexScalar>(&self, which: &Differential) -> Operator<S> {
        let sp = self.space.clone();
        let n = self.n;
        let part = |dp: usize, dq: usize| {
            Operator::from_action(sp.clone(), 1, |m| {
                let pq = crate::forms::bidegree_of(m, n);
                let tgt = Bidegree::new(pq.p + dp, pq.q + dq);
                if tgt.p > n || tgt.q > n {
                    return Form::zero(n);
                }
                self.d_monomial(m).component(tgt).map_scalars(S::from_gq)
            })
        };
        match which {
            Differential::Partial => part(1, 0),
            Differential::PartialBar => part(0, 1),
            Differential::D => Operator::from_action(sp, 1, |m| self.d_monomial(m).map_scalars(S::from_gq)),
            Differential::Dh(h) => {
                let h = S::from_q(h);
                part(1, 0).scale(&h).add(&part(0, 1))
            }
            Differential::DMinusInvH(h) => {
                let c = S::from_q(&(-Q::one() / h.clone()));
                part(1, 0).scale(&c).add(&part(0, 1))
            }
            Differential::PartialPartialBar => part(1, 0).compose(&part(0, 1)),
        }
    }

    /// d_h with an h given in the scalar field.
    pub fn dh<S: ComplexScalar>(&self, h: &S) -> Operator<S> {
        let p = self.operator::<S>(&Differential::Partial);
        let pb = self.operator::<S>(&Differential::PartialBar);
        p.scale(h).add(&pb)
    }

    /// Block-diagonal θ_h.
    pub fn theta<S: ComplexScalar>(&self, h: &S) -> Operator<S> {
        Operator::diagonal(self.space.clone(), |pq| {
            let mut f = S::one();
            for _ in 0..pq.p {
                f = f * h.clone();
            }
            f
        })
    }

    /// Human readable structure equations in the file grammar.
    pub fn structure_lines(&self) -> Vec<String> {
        (0..self.n)
            .map(|k| {
                let terms: Vec<String> = self.structure[k]
                    .terms()
                    .iter()
                    .map(|(m, c)| format!("({})*{}", fmt_gq(c), crate::forms::monomial_name(*m, self.n)))
                    .collect();
                let rhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
                format!("d f{} = {}", k + 1, rhs)
            })
            .collect()
    }
}

/// Check integrability and d² = 0 on generators.
pub fn validate_model(model: &LieComplexModel) -> ValidationReport {
    let n = model.n;
    let mut violations = Vec::new();
    for k in 0..n {
        let dk = &model.structure[k];
        if dk.degree().is_some_and(|d| d != 2) {
            violations.push(Violation { generator: k + 1, constraint: "not a 2-form".into() });
            continue;
        }
        if !dk.component(Bidegree::new(0, 2)).is_zero() {
            violations.push(Violation { generator: k + 1, constraint: "(0,2) component".into() });
        }
    }
    for k in 0..n {
        if !model.d_form(&model.structure[k]).is_zero() {
            violations.push(Violation { generator: k + 1, constraint: "d(d f) != 0".into() });
        }
    }
    violations.sort_by_key(|v| v.generator);
    let top_minus_one = model.space.degree_basis(2 * n - 1);
    let unimodular = top_minus_one.iter().all(|m| model.d_monomial(*m).is_zero());
    ValidationReport { violations, unimodular }
}

/// Exact check that a form is d-closed.
pub fn is_closed(model: &LieComplexModel, a: &Form<Gq>) -> bool {
    model.d_form(a).is_zero()
}

pub fn require_nonzero(h: &Q) -> Result<(), ModelError> {
    if h.is_zero() {
        Err(ModelError::ZeroH)
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::gq_int;

    fn iwasawa() -> LieComplexModel {
        let n = 3;
        let d3 = Form::<Gq>::holo(n, 1).wedge(&Form::holo(n, 2));
        LieComplexModel::new("iwasawa", n, vec![Form::zero(n), Form::zero(n), d3]).unwrap()
    }

    #[test]
    fn abelian_is_valid() {
        let m = LieComplexModel::new("torus2", 2, vec![Form::zero(2), Form::zero(2)]).unwrap();
        assert!(m.operator::<Gq>(&Differential::D).is_zero());
    }

    #[test]
    fn iwasawa_partial_on_10() {
        let m = iwasawa();
        let p = m.operator::<Gq>(&Differential::Partial);
        let blk = p.block(Bidegree::new(1, 0), Bidegree::new(2, 0));
        // columns ω¹,ω²,ω³; rows ω¹², ω¹³, ω²³
        assert!(blk.col(0).iter().all(|x| x.is_zero()));
        assert!(blk.col(1).iter().all(|x| x.is_zero()));
        assert_eq!(blk.col(2), vec![gq_int(1, 0), gq_int(0, 0), gq_int(0, 0)]);
    }

    #[test]
    fn bad_integrability_rejected() {
        let n = 2;
        let d1 = Form::<Gq>::anti(n, 1).wedge(&Form::anti(n, 2));
        let err = LieComplexModel::new("bad", n, vec![d1, Form::zero(n)]).unwrap_err();
        assert_eq!(err, ModelError::Structural { generator: 1, constraint: "(0,2) component".into() });
    }

    #[test]
    fn d_squared_zero() {
        let m = iwasawa();
        let d = m.operator::<Gq>(&Differential::D);
        assert!(d.compose(&d).is_zero());
        assert!(validate_model(&m).unimodular);
    }
}
