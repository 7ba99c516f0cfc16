use proptest::prelude::*;

use hlab::cohomology::{betti, cohomology, Differentials, Grading, Theory};
use hlab::corpus;
use hlab::deform::Grid;
use hlab::forms::{bidegree_of, Bidegree, Form};
use hlab::linalg::Matrix;
use hlab::metric::HermitianMetric;
use hlab::parser::{parse_model, serialize_model};
use hlab::scalar::{fmt_gq, fmt_q, gq, parse_gq, parse_q, q};
use hlab::{Gq, LieComplexModel, Q};

fn small_q() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=5).prop_map(|(a, b)| q(a, b))
}

fn nonzero_q() -> impl Strategy<Value = Q> {
    small_q().prop_filter("nonzero", |x| *x != q(0, 1))
}

fn small_gq() -> impl Strategy<Value = Gq> {
    (small_q(), small_q()).prop_map(|(a, b)| gq(a, b))
}

/// A sparse random form on n generators.
fn form(n: usize) -> impl Strategy<Value = Form<Gq>> {
    prop::collection::vec((0u32..(1 << (2 * n)), small_gq()), 0..6).prop_map(move |terms| {
        let mut f = Form::zero(n);
        for (m, c) in terms {
            f.add_term(m, c);
        }
        f
    })
}

/// Homogeneous random form of degree k.
fn form_of_degree(n: usize, k: u32) -> impl Strategy<Value = Form<Gq>> {
    form(n).prop_map(move |f| {
        let mut g = Form::zero(n);
        for (m, c) in f.terms() {
            if m.count_ones() == k {
                g.add_term(*m, c.clone());
            }
        }
        g
    })
}

fn corpus_model() -> impl Strategy<Value = LieComplexModel> {
    (0..corpus::MODEL_SOURCES.len()).prop_map(|i| corpus::model(corpus::MODEL_SOURCES[i].0).unwrap())
}

/// dim 3 models d f3 = a f1^f2 + b f1^g1 + c f2^g2; always integrable and d^2 = 0.
fn random_model() -> impl Strategy<Value = LieComplexModel> {
    (small_gq(), small_gq(), small_gq()).prop_map(|(a, b, c)| {
        let text = format!(
            "model r\nn 3\nd f1 = 0\nd f2 = 0\nd f3 = ({})*f1^f2 + ({})*f1^g1 + ({})*f2^g2\n",
            fmt_gq(&a),
            fmt_gq(&b),
            fmt_gq(&c)
        );
        parse_model(&text).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wedge_is_graded_commutative(x in form_of_degree(3, 2), y in form_of_degree(3, 3)) {
        let sign = Gq::from(q(-1, 1));
        let lhs = x.wedge(&y);
        let rhs = y.wedge(&x);
        // degrees 2 and 3 commute
        prop_assert_eq!(&lhs, &rhs);
        let z = Form::holo(3, 1);
        prop_assert_eq!(y.wedge(&z), z.wedge(&y).scale(&sign));
    }

    #[test]
    fn wedge_is_associative(x in form(3), y in form(3), z in form(3)) {
        prop_assert_eq!(x.wedge(&y).wedge(&z), x.wedge(&y.wedge(&z)));
    }

    #[test]
    fn conjugation_is_an_involutive_algebra_map(x in form(3), y in form(3)) {
        prop_assert_eq!(x.conjugate().conjugate(), x.clone());
        prop_assert_eq!(x.wedge(&y).conjugate(), x.conjugate().wedge(&y.conjugate()));
        prop_assert!(x.add(&x.conjugate()).is_real());
    }

    #[test]
    fn d_squares_to_zero(m in corpus_model(), x in form(3)) {
        let n = m.n();
        let mut y = Form::zero(n);
        for (mono, c) in x.terms() {
            if *mono < (1 << (2 * n)) {
                y.add_term(*mono, c.clone());
            }
        }
        prop_assert!(m.d_form(&m.d_form(&y)).is_zero());
        prop_assert!(m.partial_bar_form(&m.partial_bar_form(&y)).is_zero());
    }

    #[test]
    fn leibniz_rule(m in random_model(), x in form_of_degree(3, 1), y in form(3)) {
        let dx_y = m.d_form(&x).wedge(&y);
        let x_dy = x.wedge(&m.d_form(&y)).scale(&Gq::from(q(-1, 1)));
        prop_assert_eq!(m.d_form(&x.wedge(&y)), dx_y.add(&x_dy));
    }

    #[test]
    fn random_models_have_exact_d_squared(m in random_model(), h in nonzero_q()) {
        let ops = Differentials::<Gq>::new(&m);
        prop_assert!(ops.d.compose(&ops.d).is_zero());
        prop_assert!(ops.pbar.compose(&ops.pbar).is_zero());
        prop_assert!(ops.partial.compose(&ops.pbar).add(&ops.pbar.compose(&ops.partial)).is_zero());
        let dh = ops.dh(&h);
        prop_assert!(dh.compose(&dh).is_zero());
    }

    #[test]
    fn serialization_round_trips(m in random_model()) {
        let again = parse_model(&serialize_model(&m)).unwrap();
        prop_assert_eq!(again.structure(), m.structure());
    }

    #[test]
    fn rationals_print_and_parse(x in small_q(), z in small_gq()) {
        prop_assert_eq!(parse_q(&fmt_q(&x)), Some(x));
        prop_assert_eq!(parse_gq(&fmt_gq(&z)), Some(z));
    }

    #[test]
    fn rank_nullity(rows in 1usize..5, cols in 1usize..6, seed in prop::collection::vec(small_gq(), 30)) {
        let a = Matrix::from_fn(rows, cols, |i, j| seed[i * 6 + j].clone());
        let k = a.kernel();
        prop_assert_eq!(a.rank() + k.cols(), cols);
        prop_assert!(a.mul(&k).is_zero());
    }

    #[test]
    fn metric_form_round_trip(d in prop::collection::vec(1i64..6, 3), off in small_gq(), lambda in 1i64..5) {
        let mut g = Matrix::<Gq>::identity(3);
        for (i, v) in d.iter().enumerate() {
            g.set(i, i, Gq::from(q(*v * 4, 1)));
        }
        g.set(0, 1, off.clone());
        g.set(1, 0, hlab::scalar::Scalar::conj(&off));
        let Ok(metric) = HermitianMetric::new(g.clone()) else { return Ok(()) };
        let omega = metric.form();
        prop_assert!(omega.is_real());
        prop_assert_eq!(omega.bidegrees(), vec![Bidegree::new(1, 1)]);
        prop_assert_eq!(HermitianMetric::coefficient_matrix(&omega).unwrap(), g);
        let l = q(lambda, 1);
        prop_assert_eq!(metric.scale(&l).form(), omega.scale(&Gq::from(l)));
    }

    #[test]
    fn twisted_cohomology_is_de_rham(m in random_model(), h in nonzero_q()) {
        let ops = Differentials::<Gq>::new(&m);
        let b = betti(&ops);
        for (k, bk) in b.iter().enumerate() {
            let dim = cohomology(&ops, &Theory::dh(&h), Grading::Degree(k)).unwrap().dim();
            prop_assert_eq!(dim, *bk);
        }
    }

    #[test]
    fn theta_conjugates_d_into_dh(m in random_model(), h in nonzero_q(), x in form(3)) {
        // θ_h ∘ d = d_h ∘ θ_h
        let hq = Gq::from(h.clone());
        let lhs = m.d_form(&x).theta(&hq);
        let ops = Differentials::<Gq>::new(&m);
        let rhs = ops.dh(&h).apply(&x.theta(&hq));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn grids_are_symmetric(num in 1i64..4, den in 1i64..17, count in 0usize..12) {
        let g = Grid::parse(&format!("{num}/{den}:{count}")).unwrap();
        let pts = g.points();
        prop_assert_eq!(pts.len(), 2 * count + 1);
        prop_assert_eq!(&pts[count], &q(0, 1));
        for i in 0..pts.len() {
            prop_assert_eq!(pts[i].clone(), -pts[pts.len() - 1 - i].clone());
        }
        prop_assert!(pts.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(g.refine().points().len(), 4 * count + 1);
    }

    #[test]
    fn bidegrees_add_under_wedge(x in 0u32..64, y in 0u32..64) {
        let (a, b) = (Form::monomial(3, x, Gq::from(q(1, 1))), Form::monomial(3, y, Gq::from(q(1, 1))));
        let w = a.wedge(&b);
        if let Some((m, _)) = w.terms().iter().next() {
            let (bx, by, bw) = (bidegree_of(x, 3), bidegree_of(y, 3), bidegree_of(*m, 3));
            prop_assert_eq!((bw.p, bw.q), (bx.p + by.p, bx.q + by.q));
        } else {
            prop_assert!(x & y != 0);
        }
    }
}
