//! Key exchange on modular chains: parameters, keys, the naive variant that
//! publishes the whole acted chain, and the full variant that publishes only
//! end points plus direction chains.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{FieldParams, Fp2};
use crate::chains::{
    act_prime, act_vector, base_j, build_direction_table, generate_chain, ladder_step,
    DirectionTable, ModularChain,
};
use crate::error::{Error, Result};
use crate::modpoly::{ModPolyDb, ModularSystem};
use crate::quadorder::{OrderParams, SplitPrimeIdeal};
use crate::wire::{self, Message};

/// Everything both parties agree on before exchanging keys.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublicParams {
    pub p: u64,
    pub disc: i64,
    pub ell: u64,
    pub n: usize,
    pub chain: ModularChain,
    pub primes: Vec<SplitPrimeIdeal>,
    pub r: u32,
    pub table: DirectionTable,
    /// Seed the public chain was generated from.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecretKey {
    pub exps: Vec<i64>,
}

/// End point of the acted chain and, per prime, r steps in each direction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublicData {
    pub f_n: Fp2,
    pub forward: Vec<Vec<Fp2>>,
    pub backward: Vec<Vec<Fp2>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharedSecret {
    pub j: Fp2,
}

impl Message for PublicParams {
    const KIND: &'static str = "public_params";
}
impl Message for SecretKey {
    const KIND: &'static str = "secret_key";
}
impl Message for PublicData {
    const KIND: &'static str = "public_data";
}
impl Message for SharedSecret {
    const KIND: &'static str = "shared_secret";
}
impl Message for ModularChain {
    const KIND: &'static str = "chain";
}

fn violation(msg: impl Into<String>) -> Error {
    Error::InvariantViolation(msg.into())
}

impl PublicParams {
    pub fn field(&self) -> Result<FieldParams> {
        FieldParams::new(self.p)
    }

    pub fn order(&self) -> Result<OrderParams> {
        OrderParams::new(self.disc, self.ell)
    }

    pub fn t(&self) -> usize {
        self.primes.len()
    }

    /// Message when n·log ℓ < t·log(2r+1), i.e. when keys outnumber the
    /// classes the chain can tell apart.
    pub fn sizing_warning(&self) -> Option<String> {
        sizing_warning(self.ell, self.n, self.primes.len(), self.r)
    }

    /// Full consistency check against a modular system over the same field.
    pub fn validate(&self, sys: &ModularSystem) -> Result<()> {
        let f = sys.field();
        if f.p() != self.p {
            return Err(violation(format!(
                "parameters for p = {} used with p = {}",
                self.p,
                f.p()
            )));
        }
        let order = self.order()?;
        let j0 = base_j(f, self.disc)?;
        if self.chain.ell != self.ell || self.chain.len() != self.n {
            return Err(violation("public chain does not match ell and n"));
        }
        self.chain.validate(sys, Some(j0))?;
        if generate_chain(sys, &order, self.n, self.seed)? != self.chain {
            return Err(violation("public chain does not match its seed"));
        }
        if self.primes.is_empty() {
            return Err(violation("no split primes"));
        }
        for w in self.primes.windows(2) {
            if w[0].q >= w[1].q {
                return Err(violation("split primes are not strictly increasing"));
            }
        }
        for ideal in &self.primes {
            if order.split_prime(ideal.q)? != *ideal {
                return Err(violation(format!("prime ideal above {} is not canonical", ideal.q)));
            }
            if ideal.q == self.p {
                return Err(violation("split prime equals the characteristic"));
            }
        }
        let t = &self.table;
        if t.p != self.p || t.ell != self.ell || t.disc != self.disc {
            return Err(violation("direction table belongs to other parameters"));
        }
        let qs: Vec<u64> = self.primes.iter().map(|i| i.q).collect();
        let tq: Vec<u64> = t.primes.iter().map(|d| d.q).collect();
        if qs != tq {
            return Err(violation("direction table covers other primes"));
        }
        for (pd, ideal) in t.primes.iter().zip(&self.primes) {
            if pd.depth != order.min_separation_depth(ideal)? || (pd.max_depth as usize) < self.n {
                return Err(violation(format!("direction table depth for q = {}", pd.q)));
            }
        }
        t.validate(sys)
    }
}

/// See [`PublicParams::sizing_warning`].
pub fn sizing_warning(ell: u64, n: usize, t: usize, r: u32) -> Option<String> {
    let chain_bits = n as f64 * (ell as f64).log2();
    let key_bits = t as f64 * (2.0 * r as f64 + 1.0).log2();
    (chain_bits < key_bits).then(|| {
        format!(
            "key space (2r+1)^t = 2^{key_bits:.2} exceeds ell^n = 2^{chain_bits:.2}; \
             distinct keys will collide"
        )
    })
}

/// Builds public parameters: a seeded public chain and the direction table.
pub fn param_gen(
    sys: &ModularSystem,
    disc: i64,
    ell: u64,
    n: usize,
    primes: &[u64],
    r: u32,
    seed: u64,
) -> Result<PublicParams> {
    let f = *sys.field();
    let order = OrderParams::new(disc, ell)?;
    base_j(&f, disc)?;
    if f.p() == ell {
        return Err(Error::BadOrder("ell equals the characteristic".into()));
    }
    for m in std::iter::once(ell).chain(primes.iter().copied()) {
        if !sys.has_level(m as u32) {
            return Err(Error::MissingLevel(m as u32));
        }
    }
    let mut qs = primes.to_vec();
    qs.sort_unstable();
    qs.dedup();
    if qs.len() != primes.len() || qs.is_empty() {
        return Err(Error::BadOrder("split primes must be distinct and non-empty".into()));
    }
    if qs.contains(&f.p()) {
        return Err(Error::BadOrder("a split prime equals the characteristic".into()));
    }
    let ideals = qs
        .iter()
        .map(|&q| order.split_prime(q))
        .collect::<Result<Vec<_>>>()?;
    if let Some(w) = sizing_warning(ell, n, ideals.len(), r) {
        warn!("{w}");
    }
    let chain = generate_chain(sys, &order, n, seed)?;
    let table = build_direction_table(sys, &order, &ideals, n)?;
    Ok(PublicParams {
        p: f.p(),
        disc,
        ell,
        n,
        chain,
        primes: ideals,
        r,
        table,
        seed,
    })
}

/// Uniform exponents in [-r, r].
pub fn keygen(params: &PublicParams, seed: u64) -> SecretKey {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = params.r as i64;
    SecretKey {
        exps: (0..params.t()).map(|_| rng.gen_range(-r..=r)).collect(),
    }
}

impl SecretKey {
    pub fn validate(&self, params: &PublicParams) -> Result<()> {
        if self.exps.len() != params.t() {
            return Err(violation(format!(
                "secret key has {} exponents, expected {}",
                self.exps.len(),
                params.t()
            )));
        }
        if self.exps.iter().any(|e| e.unsigned_abs() > params.r as u64) {
            return Err(violation(format!("secret exponent outside [-{0}, {0}]", params.r)));
        }
        Ok(())
    }
}

/// Public parameters bound to a modular system over their field.
#[derive(Clone, Debug)]
pub struct Session {
    params: PublicParams,
    sys: ModularSystem,
}

impl Session {
    /// Validates `params` against `sys` and binds them.
    pub fn new(params: PublicParams, sys: ModularSystem) -> Result<Self> {
        params.validate(&sys)?;
        Ok(Session { params, sys })
    }

    /// Binds parameters that were just produced by [`param_gen`] on `sys`.
    pub fn trusted(params: PublicParams, sys: ModularSystem) -> Self {
        Session { params, sys }
    }

    /// Generates parameters over p with the given database.
    #[allow(clippy::too_many_arguments)]
    pub fn generate(
        db: &ModPolyDb,
        p: u64,
        disc: i64,
        ell: u64,
        n: usize,
        primes: &[u64],
        r: u32,
        seed: u64,
    ) -> Result<Self> {
        let f = FieldParams::new(p)?;
        let sys = db.reduce(&f);
        let params = param_gen(&sys, disc, ell, n, primes, r, seed)?;
        Ok(Session { params, sys })
    }

    /// Decodes and validates parameters from wire JSON.
    pub fn from_wire(text: &str, db: &ModPolyDb) -> Result<Self> {
        let params: PublicParams = wire::decode(text)?;
        let f = params.field().map_err(|e| violation(e.to_string()))?;
        Session::new(params, db.reduce(&f))
    }

    pub fn params(&self) -> &PublicParams {
        &self.params
    }

    pub fn system(&self) -> &ModularSystem {
        &self.sys
    }

    pub fn keygen(&self, seed: u64) -> SecretKey {
        keygen(&self.params, seed)
    }

    /// The public chain acted on by `exps`.
    pub fn act(&self, exps: &[i64]) -> Result<ModularChain> {
        act_vector(&self.sys, &self.params.table, &self.params.chain, &self.params.primes, exps)
    }

    /// Naive message: the whole acted chain.
    pub fn naive_public(&self, sk: &SecretKey) -> Result<ModularChain> {
        sk.validate(&self.params)?;
        self.act(&sk.exps)
    }

    pub fn naive_shared(&self, sk: &SecretKey, other: &ModularChain) -> Result<SharedSecret> {
        sk.validate(&self.params)?;
        self.validate_chain(other)?;
        let h = act_vector(&self.sys, &self.params.table, other, &self.params.primes, &sk.exps)?;
        Ok(SharedSecret { j: h.end() })
    }

    /// A received chain must be a valid walk from j_0 of length n.
    pub fn validate_chain(&self, c: &ModularChain) -> Result<()> {
        if c.ell != self.params.ell || c.len() != self.params.n {
            return Err(violation("chain does not match ell and n"));
        }
        c.validate(&self.sys, Some(self.params.chain.j[0]))
    }

    /// Full message: F_n plus r images in each direction per prime.
    pub fn public_data(&self, sk: &SecretKey) -> Result<PublicData> {
        let fchain = self.naive_public(sk)?;
        let mut forward = Vec::with_capacity(self.params.t());
        let mut backward = Vec::with_capacity(self.params.t());
        for ideal in &self.params.primes {
            for (sign, out) in [(1, &mut forward), (-1, &mut backward)] {
                let mut cur = fchain.clone();
                let mut ends = Vec::with_capacity(self.params.r as usize);
                for _ in 0..self.params.r {
                    cur = act_prime(&self.sys, &self.params.table, &cur, ideal.q, sign)?;
                    ends.push(cur.end());
                }
                out.push(ends);
            }
        }
        Ok(PublicData {
            f_n: fchain.end(),
            forward,
            backward,
        })
    }

    /// Shape, field membership and Φ_q adjacency of a full message.
    pub fn validate_public_data(&self, d: &PublicData) -> Result<()> {
        let f = self.sys.field();
        let t = self.params.t();
        let r = self.params.r as usize;
        if d.forward.len() != t || d.backward.len() != t {
            return Err(violation(format!("expected {t} direction chains each way")));
        }
        f.check(d.f_n).map_err(|e| violation(e.to_string()))?;
        for (i, ideal) in self.params.primes.iter().enumerate() {
            for chain in [&d.forward[i], &d.backward[i]] {
                if chain.len() != r {
                    return Err(violation(format!("direction chain {i} has length {}", chain.len())));
                }
                let mut prev = d.f_n;
                for (s, &x) in chain.iter().enumerate() {
                    f.check(x).map_err(|e| violation(e.to_string()))?;
                    if !self.sys.is_adjacent(ideal.q as u32, prev, x)? {
                        return Err(violation(format!(
                            "direction chain {i} step {} is not {}-isogenous",
                            s + 1,
                            ideal.q
                        )));
                    }
                    prev = x;
                }
            }
        }
        Ok(())
    }

    /// Walks the received direction chains prime by prime, pushing the
    /// chains of the remaining primes along every step taken.
    pub fn derive(&self, sk: &SecretKey, other: &PublicData) -> Result<SharedSecret> {
        sk.validate(&self.params)?;
        self.validate_public_data(other)?;
        let qs: Vec<u64> = self.params.primes.iter().map(|i| i.q).collect();
        let mut base = other.f_n;
        // only the direction and length each prime will actually use
        let mut pending: Vec<Vec<Fp2>> = sk
            .exps
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let src = if e >= 0 { &other.forward[i] } else { &other.backward[i] };
                let k = e.unsigned_abs() as usize;
                if k > src.len() {
                    Err(Error::ChainExhausted(i))
                } else {
                    Ok(src[..k].to_vec())
                }
            })
            .collect::<Result<_>>()?;
        for i in 0..qs.len() {
            while !pending[i].is_empty() {
                let next = pending[i].remove(0);
                for j in i + 1..qs.len() {
                    pending[j] = self.push_rungs(qs[j], qs[i], next, &pending[j])?;
                }
                base = next;
            }
        }
        Ok(SharedSecret { j: base })
    }

    /// Image of a q_chain-direction chain hanging off the old base, moved
    /// along a q_step-isogeny whose target is `new_base`.
    fn push_rungs(&self, q_chain: u64, q_step: u64, new_base: Fp2, rungs: &[Fp2]) -> Result<Vec<Fp2>> {
        let mut out: Vec<Fp2> = Vec::with_capacity(rungs.len());
        for (k, &old) in rungs.iter().enumerate() {
            let prev = if k == 0 { new_base } else { out[k - 1] };
            let exclude = match k {
                0 => None,
                1 => Some(new_base),
                _ => Some(out[k - 2]),
            };
            out.push(ladder_step(&self.sys, q_chain, q_step, prev, old, exclude, k + 1)?);
        }
        Ok(out)
    }

    pub fn decode_secret_key(&self, text: &str) -> Result<SecretKey> {
        let sk: SecretKey = wire::decode(text)?;
        sk.validate(&self.params)?;
        Ok(sk)
    }

    pub fn decode_chain(&self, text: &str) -> Result<ModularChain> {
        let c: ModularChain = wire::decode(text)?;
        self.validate_chain(&c)?;
        Ok(c)
    }

    pub fn decode_public_data(&self, text: &str) -> Result<PublicData> {
        let d: PublicData = wire::decode(text)?;
        self.validate_public_data(&d)?;
        Ok(d)
    }

    pub fn decode_shared(&self, text: &str) -> Result<SharedSecret> {
        let s: SharedSecret = wire::decode(text)?;
        self.sys.field().check(s.j).map_err(|e| violation(e.to_string()))?;
        Ok(s)
    }
}
