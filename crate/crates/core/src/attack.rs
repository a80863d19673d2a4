//! Key recovery against the naive exchange, which reveals every rung of the
//! acted chain. The secret class is lifted one level at a time: each level
//! leaves only ℓ candidates, and the published chain prefix picks one.

use serde::Serialize;

use crate::chains::{act_vector, ModularChain};
use crate::error::{Error, Result};
use crate::protocol::Session;
use crate::quadorder::OrderClass;

/// What happened at one depth of the tower.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelRecord {
    pub depth: usize,
    pub class_number: u64,
    /// True when h(O_i) = 1 and the action is invisible.
    pub skipped: bool,
    pub tested: Vec<OrderClass>,
    pub survivors: Vec<OrderClass>,
    /// Exponent bound the smooth search needed at this level.
    pub smooth_bound: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AttackTranscript {
    pub levels: Vec<LevelRecord>,
    pub class: OrderClass,
    /// A key with |e_i| <= r for the recovered class, when one exists.
    pub exps: Option<Vec<i64>>,
    pub act_calls: usize,
}

impl AttackTranscript {
    pub fn max_tested(&self) -> usize {
        self.levels.iter().map(|l| l.tested.len()).max().unwrap_or(0)
    }
}

/// Recovers the class taking `e_chain` to `f_chain`.
///
/// When several lifts match a prefix they are all kept and the tie is broken
/// at the first deeper level where their images differ; if a tie survives to
/// the last level the smallest class is returned.
pub fn recover_naive(
    session: &Session,
    e_chain: &ModularChain,
    f_chain: &ModularChain,
) -> Result<AttackTranscript> {
    let params = session.params();
    session.validate_chain(e_chain)?;
    session.validate_chain(f_chain)?;
    let order = params.order()?;
    let sys = session.system();
    let n = e_chain.len();
    let mut survivors: Vec<OrderClass> = Vec::new();
    let mut levels = Vec::with_capacity(n);
    let mut act_calls = 0;
    for i in 1..=n {
        let depth = i as u32;
        let h = order.class_number(depth);
        if h == 1 {
            survivors = vec![order.identity(depth)?];
            levels.push(LevelRecord {
                depth: i,
                class_number: h,
                skipped: true,
                tested: Vec::new(),
                survivors: survivors.clone(),
                smooth_bound: 0,
            });
            continue;
        }
        let mut candidates = if survivors.is_empty() {
            order.class_enumerate(depth)?
        } else {
            let kappa = order.kernel_generator(depth)?;
            let mut out = Vec::new();
            for c in &survivors {
                let lift = order.class_of(depth, c.a as i64, c.b as i64)?;
                for k in 0..order.ell as i64 {
                    out.push(lift.mul(&kappa.pow(k))?);
                }
            }
            out
        };
        candidates.sort();
        candidates.dedup();
        let e_pre = e_chain.prefix(i);
        let f_pre = f_chain.prefix(i);
        let mut next = Vec::new();
        let mut bound_used = 0;
        for c in &candidates {
            let (exps, bound) = smooth_with_doubling(session, c, i)?;
            bound_used = bound_used.max(bound);
            act_calls += 1;
            match act_vector(sys, &params.table, &e_pre, &params.primes, &exps) {
                Ok(img) if img == f_pre => next.push(*c),
                Ok(_) => {}
                Err(e) if e.is_ambiguous() => {}
                Err(e) => return Err(e),
            }
        }
        if next.is_empty() {
            return Err(Error::NoCandidateSurvives(i));
        }
        levels.push(LevelRecord {
            depth: i,
            class_number: h,
            skipped: false,
            tested: candidates,
            survivors: next.clone(),
            smooth_bound: bound_used,
        });
        survivors = next;
    }
    let class = match survivors.first() {
        Some(c) => *c,
        None => order.identity(n as u32)?,
    };
    let exps = order.smooth_representative(&class, &params.primes, params.r)?;
    Ok(AttackTranscript {
        levels,
        class,
        exps,
        act_calls,
    })
}

/// Smooth representative with bound r, then 2r, then 4r.
fn smooth_with_doubling(session: &Session, c: &OrderClass, depth: usize) -> Result<(Vec<i64>, u32)> {
    let params = session.params();
    let order = params.order()?;
    let base = params.r.max(1);
    for bound in [base, 2 * base, 4 * base] {
        if let Some(v) = order.smooth_representative(c, &params.primes, bound)? {
            return Ok((v, bound));
        }
    }
    Err(Error::SmoothSearchExhausted(depth))
}
