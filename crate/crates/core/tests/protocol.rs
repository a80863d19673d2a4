use std::sync::OnceLock;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use osidh::chains::{act_prime, generate_chain};
use osidh::wire;
use osidh::{Error, Fp2, ModPolyDb, PublicData, Session};

const P30: u64 = 1_073_741_831;

fn session() -> &'static Session {
    static S: OnceLock<Session> = OnceLock::new();
    S.get_or_init(|| {
        Session::generate(&ModPolyDb::shipped(), P30, -3, 2, 16, &[7, 13, 19], 2, 42).unwrap()
    })
}

#[test]
fn naive_exchange_commutes() {
    let s = session();
    for k in 0..50 {
        let (a, b) = (s.keygen(2 * k), s.keygen(2 * k + 1));
        let fa = s.naive_public(&a).unwrap();
        let fb = s.naive_public(&b).unwrap();
        fa.validate(s.system(), Some(Fp2::ZERO)).unwrap();
        assert_eq!(s.naive_shared(&a, &fb).unwrap(), s.naive_shared(&b, &fa).unwrap());
    }
}

#[test]
fn full_exchange_commutes_and_matches_the_summed_action() {
    let s = session();
    for k in 0..50 {
        let (a, b) = (s.keygen(300 + 2 * k), s.keygen(301 + 2 * k));
        let da = s.public_data(&a).unwrap();
        let db = s.public_data(&b).unwrap();
        let x = s.derive(&a, &db).unwrap();
        let y = s.derive(&b, &da).unwrap();
        assert_eq!(x, y);
        let sum: Vec<i64> = a.exps.iter().zip(&b.exps).map(|(u, v)| u + v).collect();
        assert_eq!(x.j, s.act(&sum).unwrap().end());
    }
}

#[test]
fn public_data_shape() {
    let s = session();
    let zero = osidh::SecretKey { exps: vec![0; 3] };
    let d = s.public_data(&zero).unwrap();
    assert_eq!(d.f_n, s.params().chain.end());
    for i in 0..3 {
        let q = s.params().primes[i].q;
        let mut cur = s.params().chain.clone();
        for step in 0..2 {
            cur = act_prime(s.system(), &s.params().table, &cur, q, 1).unwrap();
            assert_eq!(cur.end(), d.forward[i][step]);
        }
    }
}

fn mutate(d: &PublicData, rng: &mut ChaCha8Rng, s: &Session) -> PublicData {
    let f = *s.system().field();
    let mut m = d.clone();
    let t = m.forward.len();
    match rng.gen_range(0..6) {
        0 => m.f_n = f.add(m.f_n, f.random(rng)),
        1 | 2 => {
            let side = if rng.gen_bool(0.5) { &mut m.forward } else { &mut m.backward };
            let i = rng.gen_range(0..t);
            let k = rng.gen_range(0..side[i].len());
            let delta = loop {
                let x = f.random(rng);
                if !x.is_zero() {
                    break x;
                }
            };
            side[i][k] = f.add(side[i][k], delta);
        }
        3 => {
            let i = rng.gen_range(0..t);
            m.forward[i].pop();
        }
        4 => {
            let i = rng.gen_range(0..t);
            let extra = *m.backward[i].last().unwrap();
            m.backward[i].push(extra);
        }
        _ => {
            // swap two primes' chains
            let i = rng.gen_range(0..t);
            let j = (i + 1 + rng.gen_range(0..t - 1)) % t;
            m.forward.swap(i, j);
        }
    }
    m
}

#[test]
fn validators_reject_mutations() {
    let s = session();
    let d = s.public_data(&s.keygen(9)).unwrap();
    let text = wire::encode(&d);
    assert_eq!(s.decode_public_data(&text).unwrap(), d);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let m = mutate(&d, &mut rng, s);
        if m == d {
            continue;
        }
        let r = s.decode_public_data(&wire::encode(&m));
        assert!(matches!(r, Err(Error::InvariantViolation(_))), "{r:?}");
    }
    // structural damage reports where it happened
    let broken = text.replacen("\"f_n\":\"", "\"f_n\":\"x", 1);
    match s.decode_public_data(&broken) {
        Err(Error::Malformed { pointer, .. }) => assert_eq!(pointer, "/f_n"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn params_survive_the_wire_and_reject_tampering() {
    let s = session();
    let text = wire::encode(s.params());
    let back = Session::from_wire(&text, &ModPolyDb::shipped()).unwrap();
    assert_eq!(back.params(), s.params());
    let mut p = s.params().clone();
    p.seed += 1;
    assert!(matches!(
        Session::from_wire(&wire::encode(&p), &ModPolyDb::shipped()),
        Err(Error::InvariantViolation(_))
    ));
    let mut p = s.params().clone();
    p.primes[0].lambda = p.primes[0].conj_lambda;
    assert!(Session::from_wire(&wire::encode(&p), &ModPolyDb::shipped()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn opposite_signs_undo_each_other(seed in 0u64..1_000_000, qi in 0usize..3, sign in prop::bool::ANY) {
        let s = session();
        let order = s.params().order().unwrap();
        let c = generate_chain(s.system(), &order, 16, seed).unwrap();
        let q = s.params().primes[qi].q;
        let sg = if sign { 1 } else { -1 };
        let there = act_prime(s.system(), &s.params().table, &c, q, sg).unwrap();
        let back = act_prime(s.system(), &s.params().table, &there, q, -sg).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn action_is_commutative(e in prop::collection::vec(-2i64..=2, 3), d in prop::collection::vec(-2i64..=2, 3)) {
        let s = session();
        let fe = s.act(&e).unwrap();
        let both = osidh::chains::act_vector(s.system(), &s.params().table, &fe, &s.params().primes, &d).unwrap();
        let sum: Vec<i64> = e.iter().zip(&d).map(|(x, y)| x + y).collect();
        prop_assert_eq!(both, s.act(&sum).unwrap());
    }
}
