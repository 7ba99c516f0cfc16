use hlab::cones::e2sg_element;
use hlab::corpus;
use hlab::deform::*;
use hlab::linalg::Matrix;
use hlab::metric::HermitianMetric;
use hlab::scalar::{gq, q};

fn family(name: &str) -> DeformationFamily {
    parse_family(corpus::family_source(name).unwrap()).unwrap()
}

fn quick() -> SweepOptions {
    SweepOptions { feasibility: false, ..SweepOptions::default() }
}

fn claim<'a>(r: &'a SweepReport, prefix: &str) -> &'a ClaimCheck {
    r.claims.iter().find(|c| c.claim.starts_with(prefix)).unwrap()
}

#[test]
fn iwasawa_family_jumps_downward() {
    let r = sweep(&family("iwasawa"), &Grid::default(), &quick()).unwrap();
    assert_eq!(r.rows.len(), 17);
    assert!(!r.all_rows_identical);
    let centre = &r.rows[8];
    assert_eq!(centre.t, "0");
    assert_eq!(centre.hodge[1][0], 3);
    for row in r.rows.iter().filter(|row| row.t != "0") {
        assert_eq!(row.hodge[1][0], 2, "t = {}", row.t);
        assert_eq!(row.betti, centre.betti);
    }
    let usc = claim(&r, "upper-semicontinuity");
    assert!(usc.applicable && usc.holds);
    assert!(!r.falsified());
}

#[test]
fn torus_family_is_hddbar_everywhere() {
    let opts = SweepOptions { hs: vec![q(1, 1), q(-1, 3)], ..quick() };
    let r = sweep(&family("torus2"), &Grid::parse("1/4:4").unwrap(), &opts).unwrap();
    for key in ["1", "-1/3"] {
        let c = claim(&r, &format!("non-jumping(h={key})"));
        assert!(c.applicable && c.holds);
        let c = claim(&r, &format!("hddbar-openness(h={key})"));
        assert!(c.applicable && c.holds);
        for row in &r.rows {
            assert!(row.h_sections[key].hddbar.holds());
        }
    }
    let first = &r.rows[0].h_sections["1"];
    assert!(r.rows.iter().all(|row| row.h_sections["1"].hbc == first.hbc && row.h_sections["1"].ha == first.ha));
}

#[test]
fn constant_family_rows_agree() {
    let r = sweep(&family("constant"), &Grid::parse("1/2:2").unwrap(), &quick()).unwrap();
    assert!(r.all_rows_identical);
    assert_eq!(r.rows.len(), 5);
}

#[test]
fn injected_fault_is_caught() {
    let opts = SweepOptions { inject_fault: true, ..quick() };
    let r = sweep(&family("torus2"), &Grid::parse("1/8:2").unwrap(), &opts).unwrap();
    assert!(r.falsified());
    assert!(!claim(&r, "upper-semicontinuity").holds);
}

#[test]
fn bad_families_are_rejected() {
    let drift = sweep(&family("iwasawa_drift"), &Grid::default(), &quick()).unwrap_err();
    assert!(matches!(drift, DeformError::Drift { .. }), "{drift}");
    let broken = sweep(&family("broken"), &Grid::default(), &quick()).unwrap_err();
    assert!(matches!(broken, DeformError::InvalidFibre { .. } | DeformError::Parse(_)), "{broken}");
}

#[test]
fn tau_starts_at_the_e2sg_element() {
    let f = family("iwasawa");
    let g = HermitianMetric::identity(3);
    let grid = Grid::parse("1/16:4").unwrap();
    let s = tau_section(&f, &g, &grid, 1_000_000).unwrap();
    let el = e2sg_element(&f.base, &g).unwrap();
    assert_eq!(s.samples[4].t, q(0, 1));
    assert_eq!(s.samples[4].gamma_omega, el.gamma_omega);
    assert!(s.all_closed);
    assert!(s.max_root_residual <= 1e-10);
}

#[test]
fn tau_is_continuous_under_refinement() {
    let z = gq(q(0, 1), q(0, 1));
    let g = Matrix::from_rows(vec![
        vec![gq(q(1, 1), q(0, 1)), z.clone(), gq(q(1, 2), q(1, 3))],
        vec![z.clone(), gq(q(2, 1), q(0, 1)), z.clone()],
        vec![gq(q(1, 2), q(-1, 3)), z, gq(q(3, 1), q(0, 1))],
    ]);
    let g = HermitianMetric::new(g).unwrap();
    let s = tau_section(&family("iwasawa"), &g, &Grid::parse("1/16:4").unwrap(), 1_000_000).unwrap();
    assert!(s.jump_fine <= s.jump_coarse);
    assert!(s.jump_coarse > 0.0);
    assert!(s.all_closed);
    assert!(s.max_root_residual <= 1e-10);
}

#[test]
fn torus_tau_section() {
    let f = family("torus2");
    let s = tau_section(&f, &HermitianMetric::identity(2), &Grid::parse("1/16:8").unwrap(), 1_000_000).unwrap();
    assert_eq!(s.samples.len(), 17);
    assert!(s.all_closed);
    assert!(s.max_root_residual <= 1e-10);
}

#[test]
fn fibres_change_frame_consistently() {
    let f = family("iwasawa");
    for t in [q(1, 4), q(-3, 8)] {
        let fb = fibre(&f, &t).unwrap();
        let w = HermitianMetric::identity(3).form();
        assert_eq!(fb.to_base(&fb.from_base(&w)), w);
        // d commutes with the frame change
        assert_eq!(fb.model.d_form(&fb.from_base(&w)), fb.from_base(&f.base.d_form(&w)));
    }
}
