//! Dense floating-point rank oracle for Betti, Hodge and E_2 numbers.
//!
//! Structure equations are written out by hand here and everything is rebuilt
//! from index lists, so nothing below goes through the library's form algebra.
//! The oracle output is frozen under tests/golden; set HLAB_BLESS_GOLDEN=1 to
//! rewrite the files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use hlab::cohomology::{betti, bidegree_table, frolicher_pages, Differentials, Theory};
use hlab::corpus;
use hlab::Gq;

/// d of the holomorphic generators: (coefficient, a, b) means c·e_a∧e_b,
/// with e_0..e_{n-1} holomorphic and e_n..e_{2n-1} their conjugates.
type Structure = Vec<Vec<(f64, usize, usize)>>;

fn structures() -> Vec<(&'static str, usize, Structure)> {
    // f_k -> k-1, g_k -> n+k-1
    vec![
        ("torus2", 2, vec![vec![], vec![]]),
        ("torus3", 3, vec![vec![], vec![], vec![]]),
        ("kodaira_thurston", 2, vec![vec![], vec![(1.0, 0, 2)]]),
        ("iwasawa", 3, vec![vec![], vec![], vec![(1.0, 0, 1)]]),
        ("nil_h3", 3, vec![vec![], vec![], vec![(1.0, 0, 3)]]),
        ("nil_mixed", 3, vec![vec![], vec![], vec![(1.0, 0, 1), (1.0, 0, 3)]]),
        ("nil_3step", 3, vec![vec![], vec![(1.0, 0, 3)], vec![(1.0, 0, 1), (1.0, 1, 3)]]),
    ]
}

/// Equations for all 2n generators; the conjugate of e_a is e_{a±n}.
fn full_structure(n: usize, s: &Structure) -> Structure {
    let bar = |a: usize| if a < n { a + n } else { a - n };
    let mut out = s.clone();
    for eqs in s {
        out.push(eqs.iter().map(|&(c, a, b)| (c, bar(a), bar(b))).collect());
    }
    out
}

/// Sorted concatenation with its permutation sign, or None on a repeated index.
fn wedge(a: &[usize], b: &[usize]) -> Option<(f64, Vec<usize>)> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    let mut inversions = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] == v[j] {
                return None;
            }
            if v[i] > v[j] {
                inversions += 1;
            }
        }
    }
    v.sort_unstable();
    Some((if inversions % 2 == 0 { 1.0 } else { -1.0 }, v))
}

fn d_monomial(m: &[usize], st: &Structure) -> Vec<(f64, Vec<usize>)> {
    let mut out = Vec::new();
    for j in 0..m.len() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        for &(c, a, b) in &st[m[j]] {
            let Some((s1, left)) = wedge(&m[..j], &[a, b]) else { continue };
            let Some((s2, full)) = wedge(&left, &m[j + 1..]) else { continue };
            out.push((sign * c * s1 * s2, full));
        }
    }
    out
}

fn bidegree(m: &[usize], n: usize) -> (usize, usize) {
    let p = m.iter().filter(|&&i| i < n).count();
    (p, m.len() - p)
}

struct Complex {
    n: usize,
    st: Structure,
    basis: BTreeMap<(usize, usize), Vec<Vec<usize>>>,
}

impl Complex {
    fn new(n: usize, s: &Structure) -> Self {
        let mut basis: BTreeMap<(usize, usize), Vec<Vec<usize>>> = BTreeMap::new();
        for mask in 0u32..(1 << (2 * n)) {
            let m: Vec<usize> = (0..2 * n).filter(|i| mask >> i & 1 == 1).collect();
            basis.entry(bidegree(&m, n)).or_default().push(m);
        }
        Complex { n, st: full_structure(n, s), basis }
    }

    fn dim(&self, p: i64, q: i64) -> usize {
        self.get(p, q).len()
    }

    fn get(&self, p: i64, q: i64) -> &[Vec<usize>] {
        if p < 0 || q < 0 {
            return &[];
        }
        self.basis.get(&(p as usize, q as usize)).map_or(&[], |v| v.as_slice())
    }

    /// Component of d from (p,q) to (p+dp, q+dq).
    fn block(&self, p: i64, q: i64, dp: i64, dq: i64) -> DMatrix<f64> {
        let src = self.get(p, q);
        let tgt = self.get(p + dp, q + dq);
        let mut m = DMatrix::zeros(tgt.len(), src.len());
        for (j, mono) in src.iter().enumerate() {
            for (c, img) in d_monomial(mono, &self.st) {
                if let Some(i) = tgt.iter().position(|t| *t == img) {
                    m[(i, j)] += c;
                }
            }
        }
        m
    }

    fn dbar(&self, p: i64, q: i64) -> DMatrix<f64> {
        self.block(p, q, 0, 1)
    }

    fn del(&self, p: i64, q: i64) -> DMatrix<f64> {
        self.block(p, q, 1, 0)
    }

    fn hodge(&self, p: i64, q: i64) -> usize {
        self.dim(p, q) - rank(&self.dbar(p, q)) - rank(&self.dbar(p, q - 1))
    }

    fn betti(&self, k: usize) -> usize {
        let d = |k: i64| -> DMatrix<f64> {
            let src: Vec<(i64, i64)> = (0..=k).map(|p| (p, k - p)).filter(|&(p, q)| self.dim(p, q) > 0).collect();
            let tgt: Vec<(i64, i64)> = (0..=k + 1).map(|p| (p, k + 1 - p)).filter(|&(p, q)| self.dim(p, q) > 0).collect();
            let rows: usize = tgt.iter().map(|&(p, q)| self.dim(p, q)).sum();
            let cols: usize = src.iter().map(|&(p, q)| self.dim(p, q)).sum();
            let mut m = DMatrix::zeros(rows, cols);
            let mut c0 = 0;
            for &(p, q) in &src {
                let mut r0 = 0;
                for &(tp, tq) in &tgt {
                    let b = self.block(p, q, tp - p, tq - q);
                    if tp - p >= 0 && tq - q >= 0 && tp - p + tq - q == 1 {
                        m.view_mut((r0, c0), b.shape()).copy_from(&b);
                    }
                    r0 += self.dim(tp, tq);
                }
                c0 += self.dim(p, q);
            }
            m
        };
        let k = k as i64;
        let dim: usize = (0..=k).map(|p| self.dim(p, k - p)).sum();
        dim - rank(&d(k)) - if k > 0 { rank(&d(k - 1)) } else { 0 }
    }

    /// dim E_2^{p,q} = dim Z_2 - dim B_2 via zigzag kernels.
    fn e2(&self, p: i64, q: i64) -> usize {
        let (a, b) = (self.dim(p, q), self.dim(p + 1, q - 1));
        // (x, y) with ∂̄x = 0 and ∂x + ∂̄y = 0
        let (r1, r2) = (self.dim(p, q + 1), self.dim(p + 1, q));
        let mut m = DMatrix::zeros(r1 + r2, a + b);
        m.view_mut((0, 0), (r1, a)).copy_from(&self.dbar(p, q));
        m.view_mut((r1, 0), (r2, a)).copy_from(&self.del(p, q));
        if b > 0 {
            m.view_mut((r1, a), (r2, b)).copy_from(&self.dbar(p + 1, q - 1));
        }
        let z2 = (a + b - rank(&m)) - (b - rank(&self.dbar(p + 1, q - 1)));
        // ∂̄u + ∂v with ∂̄v = 0
        let (u, v) = (self.dim(p, q - 1), self.dim(p - 1, q));
        let c_rows = self.dim(p - 1, q + 1);
        let mut c = DMatrix::zeros(c_rows, u + v);
        if v > 0 {
            c.view_mut((0, u), (c_rows, v)).copy_from(&self.dbar(p - 1, q));
        }
        let mut nc = DMatrix::zeros(a + c_rows, u + v);
        if u > 0 {
            nc.view_mut((0, 0), (a, u)).copy_from(&self.dbar(p, q - 1));
        }
        if v > 0 {
            nc.view_mut((0, u), (a, v)).copy_from(&self.del(p - 1, q));
        }
        nc.view_mut((a, 0), (c_rows, u + v)).copy_from(&c);
        let b2 = (u + v - rank(&c)) - (u + v - rank(&nc));
        z2 - b2
    }

    fn table(&self, f: impl Fn(i64, i64) -> usize) -> Vec<Vec<usize>> {
        let n = self.n as i64;
        (0..=n).map(|p| (0..=n).map(|q| f(p, q)).collect()).collect()
    }
}

fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.rank(1e-9)
}

fn oracle(name: &str, n: usize, s: &Structure) -> Value {
    let cx = Complex::new(n, s);
    let hodge = cx.table(|p, q| cx.hodge(p, q));
    let e2 = cx.table(|p, q| cx.e2(p, q));
    json!({
        "model": name,
        "b": (0..=2 * n).map(|k| cx.betti(k)).collect::<Vec<_>>(),
        "hodge": hodge,
        "e2": e2,
        "e1_equals_e2": hodge == e2,
    })
}

fn library(name: &str) -> Value {
    let m = corpus::model(name).unwrap();
    let ops = Differentials::<Gq>::new(&m);
    let pages = frolicher_pages(&ops, 2);
    let hodge = bidegree_table(&ops, &Theory::DolbeaultBar);
    json!({
        "model": name,
        "b": betti(&ops),
        "hodge": hodge,
        "e2": pages[1].dims,
        "e1_equals_e2": pages[0].dims == pages[1].dims,
    })
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"))
}

fn golden(name: &str) -> Value {
    let text = std::fs::read_to_string(golden_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    serde_json::from_str(&text).unwrap()
}

#[test]
fn oracle_matches_golden() {
    let bless = std::env::var("HLAB_BLESS_GOLDEN").is_ok_and(|v| v == "1");
    for (name, n, s) in structures() {
        let v = oracle(name, n, &s);
        if bless {
            std::fs::create_dir_all(golden_path(name).parent().unwrap()).unwrap();
            std::fs::write(golden_path(name), serde_json::to_string_pretty(&v).unwrap() + "\n").unwrap();
        }
        assert_eq!(v, golden(name), "{name}");
    }
}

#[test]
fn library_matches_golden() {
    for (name, _, _) in structures() {
        assert_eq!(library(name), golden(name), "{name}");
    }
}

#[test]
fn iwasawa_ground_truth() {
    let g = golden("iwasawa");
    assert_eq!(g["hodge"][1][0], 3);
    assert_eq!(g["hodge"][0][1], 2);
    assert_eq!(g["b"][1], 4);
    assert_eq!(g["e2"][1][0], 2);
    assert_eq!(g["e1_equals_e2"], false);
}

#[test]
fn oracle_sanity() {
    // torus: everything is the full exterior algebra
    let v = oracle("torus2", 2, &vec![vec![], vec![]]);
    assert_eq!(v["b"], json!([1, 4, 6, 4, 1]));
    assert_eq!(v["hodge"], json!([[1, 2, 1], [2, 4, 2], [1, 2, 1]]));
}
