//! Modular ℓ-isogeny chains, ladders, and the class-group action on chains.

use std::collections::BTreeMap;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::int::kronecker;
use crate::algebra::{FieldParams, Fp2, Poly};
use crate::ec::{self, Curve, KernelPoly};
use crate::error::{Error, Result};
use crate::modpoly::ModularSystem;
use crate::quadorder::{OrderParams, SplitPrimeIdeal};

/// Format version of serialized direction tables.
pub const DIRECTION_TABLE_VERSION: u32 = 1;

/// j-invariant of the curve with CM by the maximal order of discriminant
/// `disc` (class number one only).
pub fn cm_j_invariant(disc: i64) -> Option<i64> {
    Some(match disc {
        -3 => 0,
        -4 => 1728,
        -7 => -3375,
        -8 => 8000,
        -11 => -32768,
        -19 => -884736,
        -43 => -884736000,
        -67 => -147197952000,
        -163 => -262537412640768000,
        _ => return None,
    })
}

/// j-invariant of the base orientation for `disc`, checking that p does not
/// split in the CM field.
pub fn base_j(field: &FieldParams, disc: i64) -> Result<Fp2> {
    if kronecker(disc, field.p()) == 1 {
        return Err(Error::BadOrientation {
            p: field.p(),
            disc,
        });
    }
    cm_j_invariant(disc)
        .map(|j| field.from_i64(j))
        .ok_or_else(|| Error::BadOrder(format!("no CM j-invariant for {disc}")))
}

/// A non-backtracking walk (j_0, ..., j_n) in the ℓ-isogeny graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModularChain {
    pub p: u64,
    pub ell: u64,
    pub j: Vec<Fp2>,
}

impl ModularChain {
    pub fn len(&self) -> usize {
        self.j.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.j.len() <= 1
    }

    pub fn end(&self) -> Fp2 {
        *self.j.last().expect("chains hold at least j_0")
    }

    /// The first `k` steps.
    pub fn prefix(&self, k: usize) -> ModularChain {
        ModularChain {
            p: self.p,
            ell: self.ell,
            j: self.j[..=k.min(self.len())].to_vec(),
        }
    }

    /// Checks field, adjacency and the no-backtracking rule, and that the
    /// walk starts at `j0` when given.
    pub fn validate(&self, sys: &ModularSystem, j0: Option<Fp2>) -> Result<()> {
        let f = sys.field();
        let bad = |msg: String| Err(Error::InvariantViolation(msg));
        if self.p != f.p() {
            return bad(format!("chain over p = {} used with p = {}", self.p, f.p()));
        }
        if self.j.is_empty() {
            return bad("empty chain".into());
        }
        for x in &self.j {
            f.check(*x)?;
        }
        if let Some(j0) = j0 {
            if self.j[0] != j0 {
                return bad(format!("chain starts at {} instead of {j0}", self.j[0]));
            }
        }
        let ell = self.ell as u32;
        for i in 0..self.len() {
            let phi = sys.instantiate(ell, self.j[i])?;
            let reduced = if i == 0 {
                phi
            } else {
                phi.div_linear(f, self.j[i - 1]).ok_or_else(|| {
                    Error::InvariantViolation(format!("step {i} is not adjacent to its parent"))
                })?
            };
            if !reduced.eval(f, self.j[i + 1]).is_zero() {
                return bad(format!(
                    "step {} -> {} violates the modular relation or backtracks",
                    i,
                    i + 1
                ));
            }
        }
        Ok(())
    }
}

/// Roots of Φ_ℓ(j_cur, Y), with one factor (Y − j_prev) removed first.
pub fn children(sys: &ModularSystem, ell: u64, j_cur: Fp2, j_prev: Option<Fp2>) -> Result<Vec<Fp2>> {
    let f = sys.field();
    let mut phi = sys.instantiate(ell as u32, j_cur)?;
    if let Some(prev) = j_prev {
        phi = phi.div_linear(f, prev).ok_or(Error::ParentNotAdjacent)?;
    }
    Ok(phi.roots(f, 0))
}

/// A random descending chain of length n from the base orientation.
pub fn generate_chain(
    sys: &ModularSystem,
    order: &OrderParams,
    n: usize,
    seed: u64,
) -> Result<ModularChain> {
    let f = sys.field();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut j = vec![base_j(f, order.disc)?];
    for i in 0..n {
        let prev = if i == 0 { None } else { Some(j[i - 1]) };
        let kids = children(sys, order.ell, j[i], prev)?;
        if kids.is_empty() {
            return Err(Error::NoRoots(j[i].to_string()));
        }
        j.push(kids[rng.gen_range(0..kids.len())]);
    }
    Ok(ModularChain {
        p: f.p(),
        ell: order.ell,
        j,
    })
}

/// Two chains related rung by rung by Φ_q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ladder {
    pub parent: ModularChain,
    pub child: ModularChain,
    pub q: u64,
}

impl Ladder {
    pub fn new(sys: &ModularSystem, parent: ModularChain, child: ModularChain, q: u64) -> Result<Self> {
        if parent.j.len() != child.j.len() {
            return Err(Error::InvariantViolation("ladder sides differ in length".into()));
        }
        for (i, (a, b)) in parent.j.iter().zip(&child.j).enumerate() {
            if !sys.is_adjacent(q as u32, *a, *b)? {
                return Err(Error::InvariantViolation(format!(
                    "rung {i} is not {q}-isogenous"
                )));
            }
        }
        Ok(Ladder { parent, child, q })
    }
}

/// Solves Φ_ℓ(j'_i, Y) = Φ_q(j_{i+1}, Y) = 0 for Y = j'_{i+1}.
///
/// `exclude` removes one factor (Y − j'_{i−1}) so the child side does not
/// backtrack. `depth` is i + 1 and only labels errors.
pub fn ladder_step(
    sys: &ModularSystem,
    ell: u64,
    q: u64,
    j_child_prev: Fp2,
    j_parent_next: Fp2,
    exclude: Option<Fp2>,
    depth: usize,
) -> Result<Fp2> {
    let f = sys.field();
    let mut a = sys.instantiate(ell as u32, j_child_prev)?;
    if let Some(x) = exclude {
        a = a.div_linear(f, x).unwrap_or(a);
    }
    let b = sys.instantiate(q as u32, j_parent_next)?;
    let g = Poly::gcd_monic(f, &a, &b);
    let roots = g.distinct_roots(f, 0);
    match roots.len() {
        1 => Ok(roots[0]),
        0 => Err(Error::Inconsistent { q, depth }),
        _ => Err(Error::Ambiguous { q, depth }),
    }
}

/// Images of one chain prefix under the two primes above q.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionEntry {
    pub key: Vec<Fp2>,
    pub plus: Vec<Fp2>,
    pub minus: Vec<Fp2>,
    /// Set when the key lies entirely over F_p and its two conjugate
    /// oriented lifts disagree on the labels; `plus` then follows the first
    /// lift in kernel order.
    #[serde(default)]
    pub conjugate: bool,
}

/// Shallow-depth images for one split prime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeDirections {
    pub q: u64,
    /// Separation depth: every prefix j_0..j_k with k <= depth is tabulated.
    pub depth: u32,
    /// Prefixes over F_p keep being extended up to this length.
    pub max_depth: u32,
    pub entries: Vec<DirectionEntry>,
}

impl PrimeDirections {
    fn lookup(&self, key: &[Fp2]) -> Option<&DirectionEntry> {
        self.entries
            .binary_search_by(|e| e.key.as_slice().cmp(key))
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Precomputed prefix images separating q from its conjugate where the
/// modular system alone is ambiguous.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionTable {
    pub v: u32,
    pub p: u64,
    pub ell: u64,
    pub disc: i64,
    pub primes: Vec<PrimeDirections>,
}

impl DirectionTable {
    pub fn for_prime(&self, q: u64) -> Result<&PrimeDirections> {
        self.primes
            .iter()
            .find(|d| d.q == q)
            .ok_or(Error::PrefixMissing { q })
    }

    /// Structural checks against a modular system: sorted distinct keys,
    /// valid key chains from j_0, and Φ_q rungs between key and images.
    pub fn validate(&self, sys: &ModularSystem) -> Result<()> {
        let f = sys.field();
        if self.v != DIRECTION_TABLE_VERSION {
            return Err(Error::InvariantViolation(format!(
                "unsupported direction table version {}",
                self.v
            )));
        }
        if self.p != f.p() {
            return Err(Error::InvariantViolation("direction table for another field".into()));
        }
        let j0 = base_j(f, self.disc)?;
        for pd in &self.primes {
            for w in pd.entries.windows(2) {
                if w[0].key >= w[1].key {
                    return Err(Error::InvariantViolation(format!(
                        "direction keys for q = {} are not sorted and distinct",
                        pd.q
                    )));
                }
            }
            for e in &pd.entries {
                if e.key.is_empty() || e.key.len() > pd.depth.max(pd.max_depth) as usize + 1 {
                    return Err(Error::InvariantViolation("direction key has bad length".into()));
                }
                if e.key.len() > pd.depth as usize + 1
                    && !e.key[..e.key.len() - 1].iter().all(|x| x.is_in_base_field())
                {
                    return Err(Error::InvariantViolation(
                        "deep direction key extends a prefix outside F_p".into(),
                    ));
                }
                let chain = ModularChain {
                    p: self.p,
                    ell: self.ell,
                    j: e.key.clone(),
                };
                chain.validate(sys, Some(j0))?;
                for img in [&e.plus, &e.minus] {
                    let side = ModularChain {
                        p: self.p,
                        ell: self.ell,
                        j: img.clone(),
                    };
                    side.validate(sys, None)?;
                    Ladder::new(sys, chain.clone(), side, pd.q)?;
                }
            }
        }
        Ok(())
    }
}

struct Node {
    curve: Curve,
    prefix: Vec<Fp2>,
    dual: Option<KernelPoly>,
    kernels: [KernelPoly; 2],
    images: [Vec<Fp2>; 2],
}

/// Builds the direction table by explicit Vélu ladders over every
/// non-backtracking prefix of length up to the separation depth of each q.
///
/// A prefix whose j-invariants all lie in F_p has two conjugate oriented
/// lifts, and these swap the images under q and its conjugate. Such
/// prefixes are extended further, up to `max_depth`, so that a longer chain
/// picks out its lift as soon as it leaves F_p.
pub fn build_direction_table(
    sys: &ModularSystem,
    order: &OrderParams,
    primes: &[SplitPrimeIdeal],
    max_depth: usize,
) -> Result<DirectionTable> {
    let f = *sys.field();
    let e0 = ec::base_curve(&f, order.disc)?;
    let j0 = e0.j_invariant(&f);
    let mut out = Vec::new();
    for ideal in primes {
        let depth = order.min_separation_depth(ideal)?;
        let mut entries: BTreeMap<Vec<Fp2>, DirectionEntry> = BTreeMap::new();
        let kernels = [
            ec::cm_eigenspace_kernel(&f, &e0, order.disc, ideal, 1)?,
            ec::cm_eigenspace_kernel(&f, &e0, order.disc, ideal, -1)?,
        ];
        let images = [0, 1].map(|s| {
            ec::velu(&f, &e0, &kernels[s]).map(|psi| vec![psi.codomain.j_invariant(&f)])
        });
        let [ip, im] = images;
        let mut stack = vec![Node {
            curve: e0,
            prefix: vec![j0],
            dual: None,
            kernels,
            images: [ip?, im?],
        }];
        while let Some(node) = stack.pop() {
            let [plus, minus] = node.images.clone();
            match entries.get_mut(&node.prefix) {
                Some(prev) => {
                    if prev.plus != plus || prev.minus != minus {
                        let over_fp = node.prefix.iter().all(|x| x.is_in_base_field());
                        if !over_fp || prev.plus != minus || prev.minus != plus {
                            return Err(Error::PrefixCollision { q: ideal.q });
                        }
                        prev.conjugate = true;
                    }
                }
                None => {
                    entries.insert(
                        node.prefix.clone(),
                        DirectionEntry {
                            key: node.prefix.clone(),
                            plus,
                            minus,
                            conjugate: false,
                        },
                    );
                }
            }
            let steps = node.prefix.len() - 1;
            let extend = steps < depth as usize
                || (steps < max_depth && node.prefix.iter().all(|x| x.is_in_base_field()));
            if !extend {
                continue;
            }
            let mut next_nodes = Vec::new();
            for l in ec::ell_kernels(&f, &node.curve, order.ell)? {
                if node.dual.as_ref() == Some(&l) {
                    continue;
                }
                let phi = ec::velu(&f, &node.curve, &l)?;
                let next = phi.codomain;
                let mut prefix = node.prefix.clone();
                prefix.push(next.j_invariant(&f));
                let mut kernels = Vec::with_capacity(2);
                let mut images = Vec::with_capacity(2);
                for s in 0..2 {
                    let k = ec::push_kernel(&f, &phi, &node.kernels[s])?;
                    let psi = ec::velu(&f, &next, &k)?;
                    let mut img = node.images[s].clone();
                    img.push(psi.codomain.j_invariant(&f));
                    kernels.push(k);
                    images.push(img);
                }
                let [kp, km]: [KernelPoly; 2] = kernels.try_into().expect("two signs");
                let [ip, im]: [Vec<Fp2>; 2] = images.try_into().expect("two signs");
                next_nodes.push(Node {
                    curve: next,
                    prefix,
                    dual: Some(ec::dual_kernel(&f, &phi)?),
                    kernels: [kp, km],
                    images: [ip, im],
                });
            }
            // visit children in kernel order
            stack.extend(next_nodes.into_iter().rev());
        }
        debug!("direction table for q = {}: depth {}, {} prefixes", ideal.q, depth, entries.len());
        out.push(PrimeDirections {
            q: ideal.q,
            depth,
            max_depth: max_depth as u32,
            entries: entries.into_values().collect(),
        });
    }
    Ok(DirectionTable {
        v: DIRECTION_TABLE_VERSION,
        p: f.p(),
        ell: order.ell,
        disc: order.disc,
        primes: out,
    })
}

/// Image of `chain` under the prime above q (sign +1) or its conjugate (−1):
/// table lookup of the longest tabulated prefix, then one ladder step per
/// remaining rung.
pub fn act_prime(
    sys: &ModularSystem,
    table: &DirectionTable,
    chain: &ModularChain,
    q: u64,
    sign: i32,
) -> Result<ModularChain> {
    let pd = table.for_prime(q)?;
    let n = chain.len();
    let mut k = n.min(pd.depth as usize);
    let mut entry = pd
        .lookup(&chain.j[..=k])
        .ok_or(Error::PrefixMissing { q })?;
    while k < n {
        match pd.lookup(&chain.j[..=k + 1]) {
            Some(e) => {
                entry = e;
                k += 1;
            }
            None => break,
        }
    }
    let mut img = if sign >= 0 {
        entry.plus.clone()
    } else {
        entry.minus.clone()
    };
    for i in k..n {
        let exclude = if i >= 1 { Some(img[i - 1]) } else { None };
        let next = ladder_step(sys, chain.ell, q, img[i], chain.j[i + 1], exclude, i + 1)?;
        img.push(next);
    }
    Ok(ModularChain {
        p: chain.p,
        ell: chain.ell,
        j: img,
    })
}

/// Applies Π q_i^{e_i}, prime by prime.
pub fn act_vector(
    sys: &ModularSystem,
    table: &DirectionTable,
    chain: &ModularChain,
    primes: &[SplitPrimeIdeal],
    exps: &[i64],
) -> Result<ModularChain> {
    let mut cur = chain.clone();
    for (ideal, &e) in primes.iter().zip(exps) {
        let sign = if e >= 0 { 1 } else { -1 };
        for _ in 0..e.unsigned_abs() {
            cur = act_prime(sys, table, &cur, ideal.q, sign)?;
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup71() -> (ModularSystem, OrderParams, SplitPrimeIdeal) {
        let f = FieldParams::new(71).unwrap();
        let o = OrderParams::new(-3, 2).unwrap();
        let q7 = o.split_prime(7).unwrap();
        (ModularSystem::shipped(&f), o, q7)
    }

    fn js(f: &FieldParams, v: &[u64]) -> Vec<Fp2> {
        v.iter().map(|&x| f.from_u64(x)).collect()
    }

    fn chain71(v: &[u64]) -> ModularChain {
        let f = FieldParams::new(71).unwrap();
        ModularChain {
            p: 71,
            ell: 2,
            j: js(&f, v),
        }
    }

    #[test]
    fn children_over_71() {
        let (sys, _, _) = setup71();
        let f = *sys.field();
        assert_eq!(children(&sys, 2, Fp2::ZERO, None).unwrap(), js(&f, &[40, 40, 40]));
        assert_eq!(
            children(&sys, 2, f.from_u64(40), Some(Fp2::ZERO)).unwrap(),
            js(&f, &[17, 48])
        );
        assert_eq!(
            children(&sys, 2, f.from_u64(40), Some(f.from_u64(5))),
            Err(Error::ParentNotAdjacent)
        );
    }

    #[test]
    fn f71_chain_is_generated_and_valid() {
        let (sys, o, _) = setup71();
        let target = chain71(&[0, 40, 17, 41, 66]);
        target.validate(&sys, Some(Fp2::ZERO)).unwrap();
        let hit = (0..500u64).find(|&s| generate_chain(&sys, &o, 4, s).unwrap() == target);
        assert!(hit.is_some());
        assert_eq!(generate_chain(&sys, &o, 0, 3).unwrap().j, vec![Fp2::ZERO]);
        for s in 0..20 {
            generate_chain(&sys, &o, 8, s).unwrap().validate(&sys, Some(Fp2::ZERO)).unwrap();
        }
    }

    #[test]
    fn validation_rejects_backtracking() {
        let (sys, _, _) = setup71();
        let c = chain71(&[0, 40, 0]);
        assert!(c.validate(&sys, None).is_err());
        assert!(chain71(&[0, 40, 18]).validate(&sys, None).is_err());
    }

    #[test]
    fn direction_table_over_71() {
        let (sys, o, q7) = setup71();
        let f = *sys.field();
        let t = build_direction_table(&sys, &o, &[q7], 4).unwrap();
        t.validate(&sys).unwrap();
        let pd = t.for_prime(7).unwrap();
        assert_eq!(pd.depth, 4);
        let e = pd.lookup(&js(&f, &[0, 40, 17, 41])).unwrap();
        assert_eq!(e.plus, js(&f, &[0, 40, 48, 48]));
        assert_eq!(e.minus, js(&f, &[0, 40, 48, 48]));
        for e in &pd.entries {
            if e.key.len() <= 2 {
                assert_eq!(e.plus, e.key);
                assert_eq!(e.minus, e.key);
            }
        }
        let deep = pd.lookup(&js(&f, &[0, 40, 17, 41, 66])).unwrap();
        let mut ends = vec![*deep.plus.last().unwrap(), *deep.minus.last().unwrap()];
        ends.sort();
        assert_eq!(ends, js(&f, &[40, 66]));
    }

    #[test]
    fn act_prime_over_71() {
        let (sys, o, q7) = setup71();
        let f = *sys.field();
        let t = build_direction_table(&sys, &o, &[q7], 4).unwrap();
        let c = chain71(&[0, 40, 17, 41, 66]);
        let a = act_prime(&sys, &t, &c, 7, 1).unwrap();
        let b = act_prime(&sys, &t, &c, 7, -1).unwrap();
        let mut got = vec![a.j.clone(), b.j.clone()];
        got.sort();
        assert_eq!(got, vec![js(&f, &[0, 40, 48, 48, 40]), js(&f, &[0, 40, 48, 48, 66])]);
        assert_eq!(act_prime(&sys, &t, &a, 7, -1).unwrap(), c);
        Ladder::new(&sys, c, a, 7).unwrap();
    }

    #[test]
    fn ladder_step_over_71() {
        let (sys, _, _) = setup71();
        let f = *sys.field();
        let r = ladder_step(&sys, 2, 7, f.from_u64(48), f.from_u64(66), Some(f.from_u64(48)), 4);
        assert_eq!(r, Err(Error::Ambiguous { q: 7, depth: 4 }));
        // a corner with no common root
        let kids: Vec<Fp2> = children(&sys, 2, f.from_u64(17), None).unwrap();
        let bad = (0..71)
            .map(|x| f.from_u64(x))
            .find(|&x| {
                let phi = sys.instantiate(7, x).unwrap();
                kids.iter().all(|k| !phi.eval(&f, *k).is_zero())
            })
            .unwrap();
        assert_eq!(
            ladder_step(&sys, 2, 7, f.from_u64(17), bad, None, 1),
            Err(Error::Inconsistent { q: 7, depth: 1 })
        );
    }

    #[test]
    fn table_roundtrips_through_json() {
        let (sys, o, q7) = setup71();
        let t = build_direction_table(&sys, &o, &[q7], 4).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: DirectionTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        let c = chain71(&[0, 40, 17]);
        let s = serde_json::to_value(&c).unwrap();
        assert_eq!(s["j"][1], "40+0*u");
    }
}
