use criterion::{criterion_group, criterion_main, Criterion};
use nullsql::harness::{default_schemas, GenConfig, Generator};
use nullsql::{run_query, ttquery, LogicKind};

/// A fixed batch of generated (database, query) pairs.
fn workload(n: u64) -> Vec<(nullsql::Database, nullsql::Query)> {
    let cfg = GenConfig::with_seed(1);
    let schemas = default_schemas();
    (0..n)
        .map(|trial| {
            let mut g = Generator::for_trial(&cfg, &schemas, trial);
            (g.database(), g.query())
        })
        .collect()
}

fn eval(c: &mut Criterion) {
    let work = workload(200);
    for (label, kind) in [("eval 2vl", LogicKind::TwoValued), ("eval 3vl", LogicKind::ThreeValued)] {
        c.bench_function(label, |b| {
            b.iter(|| {
                for (db, q) in &work {
                    std::hint::black_box(run_query(kind, db, q).unwrap());
                }
            })
        });
    }
    let translated: Vec<_> = work.iter().map(|(db, q)| (db.clone(), ttquery(q))).collect();
    c.bench_function("eval translated 2vl", |b| {
        b.iter(|| {
            for (db, q) in &translated {
                std::hint::black_box(run_query(LogicKind::TwoValued, db, q).unwrap());
            }
        })
    });
}

fn translate(c: &mut Criterion) {
    let work = workload(200);
    c.bench_function("ttquery", |b| {
        b.iter(|| {
            for (_, q) in &work {
                std::hint::black_box(ttquery(q));
            }
        })
    });
}

criterion_group!(benches, eval, translate);
criterion_main!(benches);
