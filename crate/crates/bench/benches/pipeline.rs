use criterion::{criterion_group, criterion_main, Criterion};
use quadrel::relations::{middle_data, verify_middle};
use quadrel::scenario::parse_scenario;

fn source(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn exact_stage(c: &mut Criterion) {
    for name in ["kummer_a13.scn", "hypergeometric_euler.scn", "legendre_l12.scn"] {
        let src = source(name);
        c.bench_function(&format!("middle_data {name}"), |b| {
            b.iter(|| {
                let scn = parse_scenario(&src).unwrap();
                let c = &scn.connection;
                middle_data(c, scn.forms_v.as_deref(), scn.forms_partner.as_deref(), scn.pole_bound, scn.truncation).unwrap()
            })
        });
    }
}

fn kummer_verify(c: &mut Criterion) {
    let scn = parse_scenario(&source("kummer_a13.scn")).unwrap();
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    g.bench_function("kummer_a13", |b| b.iter(|| verify_middle(&scn).unwrap()));
    g.finish();
}

criterion_group!(benches, exact_stage, kummer_verify);
criterion_main!(benches);
