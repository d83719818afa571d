use std::path::PathBuf;

use quadrel::numeric::cmat::CMat;
use quadrel::numeric::mp::Complex;
use quadrel::relations::{betti_report, check_general_relation, validate_cycles, verify_middle, MatrixReport, PairingReport};
use quadrel::scenario::parse_scenario;
use quadrel::Error;
use rug::Float;

const PREC: u32 = 256;

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn read(name: &str) -> String {
    std::fs::read_to_string(scenario_dir().join(name)).unwrap()
}

fn verify_src(src: &str) -> PairingReport {
    verify_middle(&parse_scenario(src).unwrap()).unwrap()
}

fn entry(m: &MatrixReport, i: usize, j: usize) -> Complex {
    let p = |s: &str| Float::with_val(PREC, Float::parse(s).unwrap());
    Complex::from_floats(p(&m.entries[i][j][0]), p(&m.entries[i][j][1]))
}

/// Largest entrywise distance between `a` and `k b`.
fn distance(a: &MatrixReport, b: &MatrixReport, k: i64) -> f64 {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    let mut d: f64 = 0.0;
    for i in 0..a.rows {
        for j in 0..a.cols {
            d = d.max(entry(a, i, j).sub(&entry(b, i, j).mul_i64(k)).abs_f64());
        }
    }
    d
}

/// The Kummer scenario with the `R+` mod chain split at `z = 2`.
fn kummer_subdivided() -> String {
    read("kummer_a13.scn").replacen(
        "  mod\n    line 0 -> inf@0\n    section at 1 vector [exp(-1)]\n",
        "  mod\n    line 0 -> 2\n    section at 1 vector [exp(-1)]\n    line 2 -> inf@0\n    section continue\n",
        1,
    )
}

#[test]
fn all_scenarios_parse_and_validate() {
    let mut seen = 0;
    for e in std::fs::read_dir(scenario_dir()).unwrap() {
        let path = e.unwrap().path();
        if path.extension().and_then(|s| s.to_str()) != Some("scn") {
            continue;
        }
        seen += 1;
        let src = std::fs::read_to_string(&path).unwrap();
        let name = path.file_stem().unwrap().to_str().unwrap();
        match parse_scenario(&src) {
            Ok(scn) => {
                assert_ne!(name, "flatness_violation");
                assert!(validate_cycles(&scn).unwrap().iter().all(|c| c.ok), "{name}");
            }
            Err(e) => {
                assert_eq!(name, "flatness_violation", "{e}");
                assert!(matches!(e, Error::FlatnessViolation { .. }));
            }
        }
    }
    assert!(seen >= 8);
}

#[test]
fn b_is_invariant_under_subdivision() {
    let base = betti_report(&parse_scenario(&read("kummer_a13.scn")).unwrap()).unwrap();
    let split_src = kummer_subdivided();
    assert_ne!(split_src, read("kummer_a13.scn"));
    let split = betti_report(&parse_scenario(&split_src).unwrap()).unwrap();
    assert!(base.pass && split.pass);
    assert!(distance(&base.b, &split.b, 1) < 1e-30);
}

#[test]
fn periods_are_invariant_under_subdivision() {
    let base = verify_src(&read("kummer_a13.scn"));
    let split = verify_src(&kummer_subdivided());
    assert!(split.pass);
    assert!(distance(&base.p1, &split.p1, 1) < 1e-25);
}

#[test]
fn b_reverses_and_is_bilinear() {
    let src = read("trivial_cross.scn");
    let b = |s: &str| betti_report(&parse_scenario(s).unwrap()).unwrap().b;
    let base = b(&src);
    let reversed = b(&src.replace("line -1 -> 1", "line 1 -> -1"));
    let scaled = b(&src.replace("section at 1/2i vector [1]", "section at 1/2i vector [5/2]"));
    assert!(distance(&reversed, &base, -1) < 1e-30);
    assert!(entry(&scaled, 0, 0).mul_i64(2).sub(&entry(&base, 0, 0).mul_i64(5)).abs_f64() < 1e-30);
}

#[test]
fn refining_steps_keeps_periods() {
    let base = verify_src(&read("kummer_a13.scn"));
    let fine = verify_src(&read("kummer_a13.scn").replacen("pairing dual\n", "pairing dual\nstep_ratio 0.125\n", 1));
    assert!(fine.pass);
    let scale = entry(&base.p1, 0, 0).abs_f64().max(entry(&base.p2, 0, 0).abs_f64());
    assert!(distance(&base.p1, &fine.p1, 1) <= 1e-20 * scale);
    assert!(distance(&base.p2, &fine.p2, 1) <= 1e-20 * scale);
}

#[test]
fn residual_scales_with_the_cycle() {
    let base = verify_src(&read("kummer_a13.scn"));
    let doubled = verify_src(&read("kummer_a13.scn").replace("vector [exp(-1)]", "vector [2*exp(-1)]"));
    assert!(base.pass && doubled.pass);
    assert!(distance(&doubled.b, &base.b, 2) < 1e-30);
    assert!(distance(&doubled.p1, &base.p1, 2) < 1e-30);
    assert!(doubled.relative_residual <= doubled.threshold);
    assert!(doubled.residual <= 2.0 * base.residual + 1e-60);
}

#[test]
fn general_relation_holds_for_a_constructed_system() {
    let c = |re: f64, im: f64| Complex::from_f64(re, im, PREC);
    let b = CMat::from_fn(2, 2, |i, j| c([[1.0, 0.0], [-2.0, 3.0]][i][j], 0.0));
    let p1 = CMat::from_fn(2, 2, |i, j| c([[2.0, 1.0], [0.5, -1.0]][i][j], [[0.0, 1.0], [0.0, 0.25]][i][j]));
    let s = CMat::from_fn(2, 2, |i, j| c([[3.0, 1.0], [1.0, 2.0]][i][j], 0.0));
    // P2^T = S P1^-1 (2 pi i B) for the sign +1
    let tpi = Complex::two_pi_i(PREC);
    let mut p1_inv = CMat::zeros(2, 2, PREC);
    for k in 0..2 {
        let e: Vec<Complex> = (0..2).map(|r| Complex::from_i64((r == k) as i64, PREC)).collect();
        for (r, v) in p1.solve(&e).unwrap().into_iter().enumerate() {
            p1_inv.set(r, k, v);
        }
    }
    let p2 = s.matmul(&p1_inv).matmul(&b.scale(&tpi)).transpose();
    assert!(check_general_relation(&b, &p1, &s, &p2, 1, 2, 1, false).unwrap() < 1e-60);
    assert!(check_general_relation(&b, &p1, &s, &p2, 1, 2, -1, false).unwrap() > 1.0);
    // r (m - r) odd flips the sign for symmetric pairings
    assert!(check_general_relation(&b, &p1, &s, &p2, 1, 2, -1, true).unwrap() < 1e-60);
    assert!(check_general_relation(&b, &p1, &s, &p2, 2, 4, 1, true).unwrap() < 1e-60);
    let bad = CMat::zeros(3, 2, PREC);
    assert!(check_general_relation(&bad, &p1, &s, &p2, 1, 2, 1, false).is_err());
}

#[test]
fn reports_are_deterministic() {
    let a = serde_json::to_string(&verify_src(&read("kummer_a13.scn"))).unwrap();
    let b = serde_json::to_string(&verify_src(&read("kummer_a13.scn"))).unwrap();
    assert_eq!(a, b);
}
