use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use osidh::chains::{act_prime, ladder_step};
use osidh::{ModPolyDb, Session};

const P30: u64 = 1073741831;

fn session() -> Session {
    Session::generate(&ModPolyDb::shipped(), P30, -3, 2, 16, &[7, 13, 19], 2, 42).unwrap()
}

fn instantiate(c: &mut Criterion) {
    let s = session();
    let j = s.params().chain.end();
    for q in [2u32, 7, 13, 19] {
        c.bench_function(&format!("instantiate_phi_{q}"), |b| {
            b.iter(|| s.system().instantiate(q, black_box(j)).unwrap())
        });
    }
}

fn ladder(c: &mut Criterion) {
    let s = session();
    let p = s.params();
    let img = act_prime(s.system(), &p.table, &p.chain, 7, 1).unwrap();
    let i = p.chain.len() - 1;
    c.bench_function("ladder_step_q7", |b| {
        b.iter(|| {
            ladder_step(s.system(), 2, 7, black_box(img.j[i - 1]), p.chain.j[i], Some(img.j[i - 2]), i).unwrap()
        })
    });
}

fn act(c: &mut Criterion) {
    let s = session();
    let p = s.params();
    for q in [7u64, 13, 19] {
        c.bench_function(&format!("act_prime_q{q}"), |b| {
            b.iter(|| act_prime(s.system(), &p.table, black_box(&p.chain), q, 1).unwrap())
        });
    }
}

fn exchange(c: &mut Criterion) {
    let s = session();
    let (a, b) = (s.keygen(1), s.keygen(2));
    let da = s.public_data(&a).unwrap();
    let mut g = c.benchmark_group("exchange");
    g.sample_size(10);
    g.bench_function("public_data", |bch| bch.iter(|| s.public_data(black_box(&b)).unwrap()));
    g.bench_function("derive", |bch| bch.iter(|| s.derive(black_box(&b), &da).unwrap()));
    g.finish();
}

criterion_group!(benches, instantiate, ladder, act, exchange);
criterion_main!(benches);
