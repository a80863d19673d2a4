//! Class groups of the orders O_n = Z + ℓ^n O_K, realized as
//! (O_K/ℓ^n O_K)^× / (O_K^× · (Z/ℓ^n Z)^×).
//!
//! Elements of O_K = Z[ω] with ω² + tω + s = 0 are pairs (a, b) = a + bω.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::int::{inv_mod, is_prime, kronecker};
use crate::error::{Error, Result};

/// Desk bound on enumerated class groups.
pub const MAX_ENUMERATED_CLASSES: u64 = 1 << 20;
/// Desk bound on exponent boxes searched exhaustively.
pub const MAX_EXPONENT_BOX: u64 = 1 << 24;

/// Fundamental discriminants of class number one.
const CLASS_NUMBER_ONE: [i64; 9] = [-3, -4, -7, -8, -11, -19, -43, -67, -163];

/// Maximal order O_K of class number one together with an inert prime ℓ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderParams {
    pub disc: i64,
    pub t: i64,
    pub s: i64,
    pub ell: u64,
}

impl OrderParams {
    pub fn new(disc: i64, ell: u64) -> Result<Self> {
        if !CLASS_NUMBER_ONE.contains(&disc) {
            return Err(Error::BadOrder(format!(
                "discriminant {disc} is not a fundamental discriminant of class number one"
            )));
        }
        if !is_prime(ell) || kronecker(disc, ell) != -1 {
            return Err(Error::BadOrder(format!("{ell} is not an inert prime for {disc}")));
        }
        let (t, s) = if disc % 2 == 0 {
            (0, -disc / 4)
        } else {
            (1, (1 - disc) / 4)
        };
        Ok(OrderParams { disc, t, s, ell })
    }

    /// ℓ^n, refused once it no longer fits comfortably in 62 bits.
    pub fn modulus(&self, n: u32) -> Result<u64> {
        let mut m: u64 = 1;
        for _ in 0..n {
            m = m
                .checked_mul(self.ell)
                .filter(|&v| v < 1 << 62)
                .ok_or_else(|| Error::BadOrder(format!("{}^{n} is too large", self.ell)))?;
        }
        Ok(m)
    }

    /// h(O_n) = ℓ^n / [O_K^× : O_n^×] · (1 + 1/ℓ) for n >= 1, and 1 at n = 0.
    pub fn class_number(&self, n: u32) -> u64 {
        if n == 0 {
            return 1;
        }
        let k = kronecker(self.disc, self.ell) as i64;
        let num = self.ell.pow(n - 1) as i128 * (self.ell as i128 - k as i128);
        (num / unit_index(self.disc) as i128) as u64
    }

    /// Units of O_K as (a, b) pairs.
    pub fn units(&self) -> Vec<(i64, i64)> {
        match self.disc {
            -3 => vec![(1, 0), (-1, 0), (0, 1), (0, -1), (-1, -1), (1, 1)],
            -4 => vec![(1, 0), (-1, 0), (0, 1), (0, -1)],
            _ => vec![(1, 0), (-1, 0)],
        }
    }

    /// N(a + bω) = a² - t·ab + s·b².
    pub fn norm(&self, a: i64, b: i64) -> i128 {
        let (a, b) = (a as i128, b as i128);
        a * a - self.t as i128 * a * b + self.s as i128 * b * b
    }

    pub fn conj(&self, (a, b): (i64, i64)) -> (i64, i64) {
        (a - b * self.t, -b)
    }

    fn mul_mod(&self, x: (u64, u64), y: (u64, u64), m: u64) -> (u64, u64) {
        let m = m as i128;
        let (a, b, c, d) = (x.0 as i128, x.1 as i128, y.0 as i128, y.1 as i128);
        let bd = b * d % m;
        let re = (a * c - self.s as i128 * bd) % m;
        let im = (a * d % m + b * c % m - self.t as i128 * bd) % m;
        (re.rem_euclid(m) as u64, im.rem_euclid(m) as u64)
    }

    fn reduce_pair(&self, (a, b): (i64, i64), m: u64) -> (u64, u64) {
        (
            (a as i128).rem_euclid(m as i128) as u64,
            (b as i128).rem_euclid(m as i128) as u64,
        )
    }

    fn canonical(&self, x: (u64, u64), n: u32, m: u64) -> (u64, u64) {
        if n == 0 {
            return (0, 0);
        }
        let mut best: Option<(u64, u64)> = None;
        for u in self.units() {
            let y = self.mul_mod(self.reduce_pair(u, m), x, m);
            let z = if let Some(binv) = inv_mod(y.1, m) {
                ((y.0 as u128 * binv as u128 % m as u128) as u64, 1)
            } else {
                let ainv = inv_mod(y.0, m).expect("unit has an invertible coordinate");
                (1, (y.1 as u128 * ainv as u128 % m as u128) as u64)
            };
            if best.is_none_or(|b| z < b) {
                best = Some(z);
            }
        }
        best.unwrap()
    }

    fn is_unit_mod(&self, (a, b): (i64, i64)) -> bool {
        self.norm(a, b).rem_euclid(self.ell as i128) != 0
    }

    /// Class of a + bω in Cl(O_n).
    pub fn class_of(&self, n: u32, a: i64, b: i64) -> Result<OrderClass> {
        if !self.is_unit_mod((a, b)) {
            return Err(Error::BadOrder(format!(
                "{a}+{b}w is not a unit modulo {}",
                self.ell
            )));
        }
        let m = self.modulus(n)?;
        let (a, b) = self.canonical(self.reduce_pair((a, b), m), n, m);
        Ok(OrderClass {
            a,
            b,
            n,
            params: *self,
        })
    }

    pub fn identity(&self, n: u32) -> Result<OrderClass> {
        self.class_of(n, 1, 0)
    }

    /// All classes of Cl(O_n) in canonical form, sorted.
    pub fn class_enumerate(&self, n: u32) -> Result<Vec<OrderClass>> {
        let h = self.class_number(n);
        if h > MAX_ENUMERATED_CLASSES {
            return Err(Error::ClassGroupTooLarge(h));
        }
        if n == 0 {
            return Ok(vec![self.identity(0)?]);
        }
        let m = self.modulus(n)?;
        let mut seen = HashSet::new();
        // Every canonical form is (x, 1) or (1, ℓy).
        let candidates = (0..m)
            .map(|x| (x, 1))
            .chain((0..m).step_by(self.ell as usize).map(|y| (1, y)));
        for c in candidates {
            if self.is_unit_mod((c.0 as i64, c.1 as i64)) {
                seen.insert(self.canonical(c, n, m));
            }
        }
        let mut out: Vec<OrderClass> = seen
            .into_iter()
            .map(|(a, b)| OrderClass {
                a,
                b,
                n,
                params: *self,
            })
            .collect();
        out.sort();
        Ok(out)
    }

    /// A generator of the kernel of Cl(O_n) → Cl(O_{n-1}), of order ℓ.
    pub fn kernel_generator(&self, n: u32) -> Result<OrderClass> {
        if n < 2 {
            return Err(Error::KernelNotFound(n));
        }
        let step = self.ell.pow(n - 1) as i64;
        for x in 0..self.ell as i64 {
            for y in 0..self.ell as i64 {
                let c = self.class_of(n, 1 + step * x, step * y)?;
                if !c.is_identity() {
                    return Ok(c);
                }
            }
        }
        Err(Error::KernelNotFound(n))
    }

    /// The prime ideal (q, ω - λ) above a split prime q, with λ the smaller
    /// root of x² + tx + s mod q.
    pub fn split_prime(&self, q: u64) -> Result<SplitPrimeIdeal> {
        if !is_prime(q) || q == self.ell || kronecker(self.disc, q) != 1 {
            return Err(Error::NotSplit { q, disc: self.disc });
        }
        let roots: Vec<u64> = (0..q)
            .filter(|&x| {
                let x = x as i128;
                (x * x + self.t as i128 * x + self.s as i128).rem_euclid(q as i128) == 0
            })
            .collect();
        if roots.len() != 2 {
            return Err(Error::NotSplit { q, disc: self.disc });
        }
        let (lambda, other) = (roots[0], roots[1]);
        let generator = self
            .norm_form_solutions(q)
            .into_iter()
            .filter(|&g| generates_eigenvalue(self, g, q, lambda))
            .min()
            .ok_or(Error::NotSplit { q, disc: self.disc })?;
        Ok(SplitPrimeIdeal {
            q,
            lambda,
            conj_lambda: other,
            generator,
        })
    }

    /// All (a, b) with b > 0 and N(a + bω) = q.
    fn norm_form_solutions(&self, q: u64) -> Vec<(i64, i64)> {
        let bound = 2 * ((q as f64).sqrt() as i64 + 2);
        let mut out = Vec::new();
        for b in 1..=bound {
            for a in -bound..=bound {
                if self.norm(a, b) == q as i128 {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Class of the split prime (or its conjugate when `sign < 0`) in Cl(O_n).
    pub fn class_embed(&self, ideal: &SplitPrimeIdeal, n: u32, sign: i32) -> Result<OrderClass> {
        let g = if sign >= 0 {
            ideal.generator
        } else {
            self.conj(ideal.generator)
        };
        self.class_of(n, g.0, g.1)
    }

    /// Class of Π q_i^{e_i}.
    pub fn class_of_vector(
        &self,
        n: u32,
        primes: &[SplitPrimeIdeal],
        exps: &[i64],
    ) -> Result<OrderClass> {
        let mut acc = self.identity(n)?;
        for (q, &e) in primes.iter().zip(exps) {
            acc = acc.mul(&self.class_embed(q, n, 1)?.pow(e))?;
        }
        Ok(acc)
    }

    /// Smallest depth i >= 1 at which [q]² is not principal in Cl(O_i).
    pub fn min_separation_depth(&self, ideal: &SplitPrimeIdeal) -> Result<u32> {
        for i in 1..62 {
            if self.modulus(i).is_err() {
                break;
            }
            let c = self.class_embed(ideal, i, 1)?;
            if !c.mul(&c)?.is_identity() {
                return Ok(i);
            }
        }
        Err(Error::BadOrder(format!(
            "q = {} never separates from its conjugate",
            ideal.q
        )))
    }

    /// Exponent vector with |e_i| <= r representing `target`, lexicographically
    /// smallest among all solutions. Meet in the middle over the two halves of
    /// the prime list.
    pub fn smooth_representative(
        &self,
        target: &OrderClass,
        primes: &[SplitPrimeIdeal],
        r: u32,
    ) -> Result<Option<Vec<i64>>> {
        let n = target.n;
        let width = 2 * r as u64 + 1;
        if primes.is_empty() {
            return Ok(target.is_identity().then(Vec::new));
        }
        if width.checked_pow(primes.len() as u32).is_none_or(|v| v > MAX_EXPONENT_BOX) {
            return Err(Error::TooDeep(width.saturating_pow(primes.len() as u32)));
        }
        let powers = self.power_tables(primes, n, r)?;
        let split = primes.len() / 2;
        let (left, right) = powers.split_at(split);

        let mut table: HashMap<(u64, u64), Vec<i64>> = HashMap::new();
        for v in ExponentBox::new(right.len(), r) {
            let c = product(self, n, right, &v, r)?;
            table.entry((c.a, c.b)).or_insert(v);
        }
        for v in ExponentBox::new(left.len(), r) {
            let c = product(self, n, left, &v, r)?;
            let need = target.mul(&c.inv())?;
            if let Some(w) = table.get(&(need.a, need.b)) {
                let mut out = v.clone();
                out.extend_from_slice(w);
                return Ok(Some(out));
            }
        }
        Ok(None)
    }

    /// Scans the box Π[-r_i, r_i] in lexicographic order and reports the first
    /// pair of vectors with equal classes in Cl(O_n).
    pub fn exponent_map_injective(
        &self,
        primes: &[SplitPrimeIdeal],
        bounds: &[u32],
        n: u32,
    ) -> Result<Injectivity> {
        bounds
            .iter()
            .try_fold(1u64, |acc, &r| acc.checked_mul(2 * r as u64 + 1))
            .filter(|&v| v <= MAX_EXPONENT_BOX)
            .ok_or(Error::TooDeep(u64::MAX))?;
        let embeds = primes
            .iter()
            .map(|q| self.class_embed(q, n, 1))
            .collect::<Result<Vec<_>>>()?;
        let mut seen: HashMap<(u64, u64), Vec<i64>> = HashMap::new();
        for v in BoundedBox::new(bounds) {
            let mut acc = self.identity(n)?;
            for (c, &e) in embeds.iter().zip(&v) {
                acc = acc.mul(&c.pow(e))?;
            }
            if let Some(prev) = seen.get(&(acc.a, acc.b)) {
                return Ok(Injectivity::Collision(prev.clone(), v));
            }
            seen.insert((acc.a, acc.b), v);
        }
        Ok(Injectivity::Injective)
    }

    fn power_tables(
        &self,
        primes: &[SplitPrimeIdeal],
        n: u32,
        r: u32,
    ) -> Result<Vec<Vec<OrderClass>>> {
        primes
            .iter()
            .map(|q| {
                let c = self.class_embed(q, n, 1)?;
                Ok((-(r as i64)..=r as i64).map(|e| c.pow(e)).collect())
            })
            .collect()
    }
}

fn product(
    params: &OrderParams,
    n: u32,
    powers: &[Vec<OrderClass>],
    v: &[i64],
    r: u32,
) -> Result<OrderClass> {
    let mut acc = params.identity(n)?;
    for (table, &e) in powers.iter().zip(v) {
        acc = acc.mul(&table[(e + r as i64) as usize])?;
    }
    Ok(acc)
}

/// [O_K^× : O^×] for a proper suborder: 3, 2 or 1.
pub fn unit_index(disc: i64) -> u64 {
    match disc {
        -3 => 3,
        -4 => 2,
        _ => 1,
    }
}

/// True when N(a + bω) = q and ω ≡ λ modulo (a + bω).
pub fn generates_eigenvalue(params: &OrderParams, g: (i64, i64), q: u64, lambda: u64) -> bool {
    if params.norm(g.0, g.1) != q as i128 {
        return false;
    }
    // (ω - λ)·conj(g) must lie in q·O_K.
    let (c, d) = params.conj(g);
    let (a, b) = (-(lambda as i128), 1i128);
    let (c, d) = (c as i128, d as i128);
    let bd = b * d;
    let re = a * c - params.s as i128 * bd;
    let im = a * d + b * c - params.t as i128 * bd;
    re.rem_euclid(q as i128) == 0 && im.rem_euclid(q as i128) == 0
}

/// A prime of O_K above a split rational prime q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitPrimeIdeal {
    pub q: u64,
    /// Eigenvalue of ω on the kernel: the smaller root of x² + tx + s mod q.
    pub lambda: u64,
    pub conj_lambda: u64,
    pub generator: (i64, i64),
}

impl SplitPrimeIdeal {
    /// Eigenvalue for `sign = +1` (this ideal) or `-1` (its conjugate).
    pub fn eigenvalue(&self, sign: i32) -> u64 {
        if sign >= 0 {
            self.lambda
        } else {
            self.conj_lambda
        }
    }
}

/// Outcome of an exhaustive injectivity scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Injectivity {
    Injective,
    Collision(Vec<i64>, Vec<i64>),
}

/// Canonical representative of a class in Cl(O_n).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderClass {
    pub a: u64,
    pub b: u64,
    pub n: u32,
    params: OrderParams,
}

impl PartialOrd for OrderParams {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderParams {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.disc, self.ell).cmp(&(other.disc, other.ell))
    }
}

impl OrderClass {
    pub fn params(&self) -> &OrderParams {
        &self.params
    }

    fn check(&self, other: &OrderClass) -> Result<()> {
        if self.n != other.n || self.params != other.params {
            return Err(Error::DepthMismatch(self.n, other.n));
        }
        Ok(())
    }

    fn modulus(&self) -> u64 {
        self.params.modulus(self.n).expect("checked at construction")
    }

    pub fn mul(&self, other: &OrderClass) -> Result<OrderClass> {
        self.check(other)?;
        let m = self.modulus();
        let p = &self.params;
        let (a, b) = p.canonical(p.mul_mod((self.a, self.b), (other.a, other.b), m), self.n, m);
        Ok(OrderClass { a, b, ..*self })
    }

    /// The inverse, via conjugation (α·ᾱ is a rational scalar).
    pub fn inv(&self) -> OrderClass {
        let m = self.modulus();
        let p = &self.params;
        let c = p.conj((self.a as i64, self.b as i64));
        let (a, b) = p.canonical(p.reduce_pair(c, m), self.n, m);
        OrderClass { a, b, ..*self }
    }

    pub fn pow(&self, e: i64) -> OrderClass {
        let mut base = if e < 0 { self.inv() } else { *self };
        let mut k = e.unsigned_abs();
        let mut acc = self.params.identity(self.n).expect("valid depth");
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base).expect("same group");
            }
            base = base.mul(&base).expect("same group");
            k >>= 1;
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        let m = self.modulus();
        (self.a, self.b) == self.params.canonical((1, 0), self.n, m)
    }

    /// Order in Cl(O_n), by stripping prime factors of the class number.
    pub fn order(&self) -> u64 {
        let mut ord = self.params.class_number(self.n);
        let mut rest = ord;
        let mut f = 2;
        while rest > 1 {
            if rest.is_multiple_of(f) {
                while rest.is_multiple_of(f) {
                    rest /= f;
                }
                while ord.is_multiple_of(f) && self.pow((ord / f) as i64).is_identity() {
                    ord /= f;
                }
            }
            f += 1;
        }
        ord
    }

    /// Image in Cl(O_k) for k <= n.
    pub fn project(&self, k: u32) -> Result<OrderClass> {
        if k > self.n {
            return Err(Error::DepthMismatch(self.n, k));
        }
        self.params.class_of(k, self.a as i64, self.b as i64)
    }
}

impl fmt::Display for OrderClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}+{}w mod {}^{}]", self.a, self.b, self.params.ell, self.n)
    }
}

#[derive(Serialize, Deserialize)]
struct OrderClassWire {
    a: u64,
    b: u64,
    ell: u64,
    n: u32,
    disc: i64,
}

impl Serialize for OrderClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OrderClassWire {
            a: self.a,
            b: self.b,
            ell: self.params.ell,
            n: self.n,
            disc: self.params.disc,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OrderClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = OrderClassWire::deserialize(d)?;
        let params = OrderParams::new(w.disc, w.ell).map_err(D::Error::custom)?;
        let c = params
            .class_of(w.n, w.a as i64, w.b as i64)
            .map_err(D::Error::custom)?;
        if (c.a, c.b) != (w.a, w.b) {
            return Err(D::Error::custom("class representative is not canonical"));
        }
        Ok(c)
    }
}

/// Lexicographic iterator over [-r, r]^len.
pub struct ExponentBox {
    inner: BoundedBox,
}

impl ExponentBox {
    pub fn new(len: usize, r: u32) -> Self {
        ExponentBox {
            inner: BoundedBox::new(&vec![r; len]),
        }
    }
}

impl Iterator for ExponentBox {
    type Item = Vec<i64>;
    fn next(&mut self) -> Option<Vec<i64>> {
        self.inner.next()
    }
}

/// Lexicographic iterator over Π[-r_i, r_i].
pub struct BoundedBox {
    bounds: Vec<i64>,
    next: Option<Vec<i64>>,
}

impl BoundedBox {
    pub fn new(bounds: &[u32]) -> Self {
        let bounds: Vec<i64> = bounds.iter().map(|&r| r as i64).collect();
        let start = bounds.iter().map(|&r| -r).collect();
        BoundedBox {
            bounds,
            next: Some(start),
        }
    }
}

impl Iterator for BoundedBox {
    type Item = Vec<i64>;
    fn next(&mut self) -> Option<Vec<i64>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if succ[i] < self.bounds[i] {
                succ[i] += 1;
                for (j, v) in succ.iter_mut().enumerate().skip(i + 1) {
                    *v = -self.bounds[j];
                }
                self.next = Some(succ);
                break;
            }
        }
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eis() -> OrderParams {
        OrderParams::new(-3, 2).unwrap()
    }

    #[test]
    fn params_and_unit_index() {
        let p = eis();
        assert_eq!((p.t, p.s), (1, 1));
        let g = OrderParams::new(-4, 3).unwrap();
        assert_eq!((g.t, g.s), (0, 1));
        assert_eq!(unit_index(-3), 3);
        assert_eq!(unit_index(-4), 2);
        assert_eq!(unit_index(-7), 1);
        assert!(OrderParams::new(-3, 7).is_err());
        assert!(OrderParams::new(-15, 2).is_err());
        // ω² + tω + s = 0 in the multiplication rule
        for prm in [p, g, OrderParams::new(-7, 3).unwrap()] {
            let m = 1 << 20;
            let w2 = prm.mul_mod((0, 1), (0, 1), m);
            let expect = prm.reduce_pair((-prm.s, -prm.t), m);
            assert_eq!(w2, expect);
        }
    }

    #[test]
    fn class_numbers_small_depths() {
        let p = eis();
        assert_eq!(p.class_number(0), 1);
        assert_eq!(p.class_number(1), 1);
        assert_eq!(p.class_number(2), 2);
        assert_eq!(p.class_number(3), 4);
    }

    #[test]
    fn enumeration_matches_class_number() {
        for (disc, ell) in [(-3, 2u64), (-4, 3), (-3, 5), (-4, 7)] {
            let p = OrderParams::new(disc, ell).unwrap();
            let max_n = if ell == 2 { 10 } else { 4 };
            for n in 0..=max_n {
                assert_eq!(
                    p.class_enumerate(n).unwrap().len() as u64,
                    p.class_number(n),
                    "disc {disc} ell {ell} n {n}"
                );
            }
        }
        assert_eq!(eis().class_enumerate(2).unwrap().len(), 2);
    }

    #[test]
    fn split_prime_examples() {
        let p = eis();
        let q7 = p.split_prime(7).unwrap();
        assert_eq!((q7.lambda, q7.conj_lambda), (2, 4));
        assert_eq!(p.norm(q7.generator.0, q7.generator.1), 7);
        assert!(generates_eigenvalue(&p, (3, 1), 7, 4));
        assert!(!generates_eigenvalue(&p, (3, 1), 7, 2));
        assert_eq!(p.split_prime(5), Err(Error::NotSplit { q: 5, disc: -3 }));
        assert!(p.split_prime(2).is_err());
    }

    #[test]
    fn embed_examples() {
        let p = eis();
        let q7 = p.split_prime(7).unwrap();
        assert!(p.class_embed(&q7, 0, 1).unwrap().is_identity());
        let c2 = p.class_embed(&q7, 2, 1).unwrap();
        assert!(!c2.is_identity());
        assert_eq!(c2.order(), 2);
        assert_eq!(p.class_embed(&q7, 3, 1).unwrap().order(), 2);
        assert_eq!(p.class_embed(&q7, 4, 1).unwrap().order(), 4);
    }

    #[test]
    fn embed_times_conjugate_is_identity() {
        for (disc, ell) in [(-3i64, 2u64), (-4, 3)] {
            let p = OrderParams::new(disc, ell).unwrap();
            for q in [5u64, 7, 13, 17, 19, 29, 37] {
                let Ok(ideal) = p.split_prime(q) else { continue };
                for n in 0..=10 {
                    let a = p.class_embed(&ideal, n, 1).unwrap();
                    let b = p.class_embed(&ideal, n, -1).unwrap();
                    assert!(a.mul(&b).unwrap().is_identity());
                    assert_eq!(b, a.inv());
                }
            }
        }
    }

    #[test]
    fn group_axioms_exhaustive_small_depth() {
        for (disc, ell) in [(-3i64, 2u64), (-4, 3)] {
            let p = OrderParams::new(disc, ell).unwrap();
            for n in 0..=4 {
                let all = p.class_enumerate(n).unwrap();
                let id = p.identity(n).unwrap();
                for x in &all {
                    assert_eq!(x.mul(&id).unwrap(), *x);
                    assert!(x.mul(&x.inv()).unwrap().is_identity());
                    for y in &all {
                        let xy = x.mul(y).unwrap();
                        assert_eq!(xy, y.mul(x).unwrap());
                        if all.len() <= 64 {
                            for z in &all {
                                assert_eq!(xy.mul(z).unwrap(), x.mul(&y.mul(z).unwrap()).unwrap());
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn group_axioms_sampled_deeper() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (disc, ell) in [(-3i64, 2u64), (-4, 3)] {
            let p = OrderParams::new(disc, ell).unwrap();
            for n in [5u32, 6] {
                let all = p.class_enumerate(n).unwrap();
                for _ in 0..500 {
                    let x = all[rng.gen_range(0..all.len())];
                    let y = all[rng.gen_range(0..all.len())];
                    let z = all[rng.gen_range(0..all.len())];
                    assert_eq!(
                        x.mul(&y).unwrap().mul(&z).unwrap(),
                        x.mul(&y.mul(&z).unwrap()).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn depth_mismatch() {
        let p = eis();
        let a = p.identity(2).unwrap();
        let b = p.identity(3).unwrap();
        assert_eq!(a.mul(&b), Err(Error::DepthMismatch(2, 3)));
    }

    #[test]
    fn kernel_generator_properties() {
        let p = eis();
        let k2 = p.kernel_generator(2).unwrap();
        let all = p.class_enumerate(2).unwrap();
        let nonid: Vec<_> = all.iter().filter(|c| !c.is_identity()).collect();
        assert_eq!(nonid, vec![&k2]);
        for (disc, ell) in [(-3i64, 2u64), (-4, 3), (-3, 5)] {
            let p = OrderParams::new(disc, ell).unwrap();
            for n in 2..=6 {
                let k = p.kernel_generator(n).unwrap();
                assert_eq!(k.order(), ell);
                assert!(k.project(n - 1).unwrap().is_identity());
            }
        }
    }

    #[test]
    fn surface_class_number() {
        // |Cl(O_1)| = (ℓ + 1) / unit index
        let p = eis();
        assert_eq!(p.class_enumerate(1).unwrap().len(), 1);
        let g = OrderParams::new(-4, 3).unwrap();
        assert_eq!(g.class_enumerate(1).unwrap().len(), 2);
    }

    #[test]
    fn separation_depths() {
        let p = eis();
        assert_eq!(p.min_separation_depth(&p.split_prime(7).unwrap()).unwrap(), 4);
        assert_eq!(p.min_separation_depth(&p.split_prime(13).unwrap()).unwrap(), 4);
        for q in [7u64, 13, 19, 31, 37, 43] {
            let ideal = p.split_prime(q).unwrap();
            let d = p.min_separation_depth(&ideal).unwrap();
            let log = (q as f64).log2().ceil() as u32;
            assert!(d <= log + 2, "q={q} depth={d}");
            // below the separation depth, [q] and [q̄] coincide
            for i in 1..d {
                assert_eq!(
                    p.class_embed(&ideal, i, 1).unwrap(),
                    p.class_embed(&ideal, i, -1).unwrap()
                );
            }
        }
    }

    #[test]
    fn smooth_representative_examples() {
        let p = eis();
        let q7 = p.split_prime(7).unwrap();
        let q13 = p.split_prime(13).unwrap();
        let id = p.identity(6).unwrap();
        assert_eq!(
            p.smooth_representative(&id, &[q7, q13], 2).unwrap(),
            Some(vec![0, 0])
        );
        let target = p.class_embed(&q7, 2, 1).unwrap();
        // (-1) also hits since [q] has order 2; lex-min is returned
        assert_eq!(p.smooth_representative(&target, &[q7], 1).unwrap(), Some(vec![-1]));
        // a class outside the reachable box
        let q19 = p.split_prime(19).unwrap();
        let far = p.class_embed(&q19, 12, 1).unwrap();
        assert_eq!(p.smooth_representative(&far, &[q7], 1).unwrap(), None);
    }

    #[test]
    fn exponent_map_examples() {
        let p = eis();
        let q7 = p.split_prime(7).unwrap();
        assert_eq!(
            p.exponent_map_injective(&[q7], &[1], 2).unwrap(),
            Injectivity::Collision(vec![-1], vec![1])
        );
        assert_eq!(
            p.exponent_map_injective(&[], &[], 5).unwrap(),
            Injectivity::Injective
        );
        let q13 = p.split_prime(13).unwrap();
        assert_eq!(
            p.exponent_map_injective(&[q7, q13], &[1, 1], 12).unwrap(),
            Injectivity::Injective
        );
    }

    #[test]
    fn box_iteration_order() {
        let v: Vec<_> = BoundedBox::new(&[1, 0]).collect();
        assert_eq!(v, vec![vec![-1, 0], vec![0, 0], vec![1, 0]]);
        assert_eq!(ExponentBox::new(2, 1).count(), 9);
        assert_eq!(ExponentBox::new(0, 3).collect::<Vec<_>>(), vec![Vec::<i64>::new()]);
    }

    #[test]
    fn serde_roundtrip() {
        let p = eis();
        let c = p.class_embed(&p.split_prime(7).unwrap(), 5, 1).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<OrderClass>(&s).unwrap(), c);
        assert!(serde_json::from_str::<OrderClass>(r#"{"a":2,"b":2,"ell":2,"n":3,"disc":-3}"#).is_err());
    }

    proptest! {
        #[test]
        fn smooth_representative_round_trip(e1 in -2i64..=2, e2 in -2i64..=2, e3 in -2i64..=2, n in 3u32..9) {
            let p = eis();
            let primes = [7u64, 13, 19].map(|q| p.split_prime(q).unwrap());
            let target = p.class_of_vector(n, &primes, &[e1, e2, e3]).unwrap();
            let v = p.smooth_representative(&target, &primes, 2).unwrap().unwrap();
            prop_assert_eq!(p.class_of_vector(n, &primes, &v).unwrap(), target);
            prop_assert!(v <= vec![e1, e2, e3]);
        }
    }
}
