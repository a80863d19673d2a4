use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::int::{is_prime, pow_mod};
use crate::error::{Error, Result};

/// The field F_{p^2} = F_p(u) with u^2 = d, d the least positive nonresidue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldParams {
    p: u64,
    d: u64,
}

/// Element a + b*u of F_{p^2}. Components are always reduced mod p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fp2 {
    pub a: u64,
    pub b: u64,
}

impl Fp2 {
    pub const ZERO: Fp2 = Fp2 { a: 0, b: 0 };
    pub const ONE: Fp2 = Fp2 { a: 1, b: 0 };

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn is_in_base_field(self) -> bool {
        self.b == 0
    }
}

impl fmt::Display for Fp2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*u", self.a, self.b)
    }
}

impl FromStr for Fp2 {
    type Err = Error;

    /// Parses the canonical "a+b*u" encoding. Range checks happen in
    /// [`FieldParams::check`].
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Malformed {
            pointer: String::new(),
            message: format!("{msg}: {s:?}"),
        };
        let (a, rest) = s.split_once('+').ok_or_else(|| bad("missing '+'"))?;
        let b = rest.strip_suffix("*u").ok_or_else(|| bad("missing '*u'"))?;
        let a = a.parse::<u64>().map_err(|_| bad("bad real part"))?;
        let b = b.parse::<u64>().map_err(|_| bad("bad u part"))?;
        Ok(Fp2 { a, b })
    }
}

impl serde::Serialize for Fp2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Fp2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FieldParams {
    /// Builds F_{p^2} for an odd prime 5 <= p < 2^62.
    pub fn new(p: u64) -> Result<Self> {
        if p < 5 {
            return Err(Error::TooSmall(p));
        }
        if p >= 1 << 62 {
            return Err(Error::TooLarge(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let d = (2..p)
            .find(|&c| pow_mod(c, (p - 1) / 2, p) == p - 1)
            .expect("odd prime has a nonresidue");
        Ok(FieldParams { p, d })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// The nonresidue d with u^2 = d.
    pub fn nonresidue(&self) -> u64 {
        self.d
    }

    /// Rejects elements whose components are not reduced.
    pub fn check(&self, x: Fp2) -> Result<Fp2> {
        if x.a >= self.p || x.b >= self.p {
            return Err(Error::InvariantViolation(format!(
                "{x} is not reduced modulo {}",
                self.p
            )));
        }
        Ok(x)
    }

    pub fn parse(&self, s: &str) -> Result<Fp2> {
        self.check(s.parse()?)
    }

    #[inline]
    pub fn from_u64(&self, v: u64) -> Fp2 {
        Fp2 {
            a: v % self.p,
            b: 0,
        }
    }

    pub fn from_i64(&self, v: i64) -> Fp2 {
        Fp2 {
            a: v.rem_euclid(self.p as i64) as u64,
            b: 0,
        }
    }

    /// The generator u of F_{p^2} over F_p.
    pub fn u(&self) -> Fp2 {
        Fp2 { a: 0, b: 1 }
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Fp2 {
        Fp2 {
            a: rng.gen_range(0..self.p),
            b: rng.gen_range(0..self.p),
        }
    }

    #[inline]
    fn add_mod(&self, x: u64, y: u64) -> u64 {
        let s = x + y;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    fn sub_mod(&self, x: u64, y: u64) -> u64 {
        if x >= y {
            x - y
        } else {
            x + self.p - y
        }
    }

    #[inline]
    pub fn add(&self, x: Fp2, y: Fp2) -> Fp2 {
        Fp2 {
            a: self.add_mod(x.a, y.a),
            b: self.add_mod(x.b, y.b),
        }
    }

    #[inline]
    pub fn sub(&self, x: Fp2, y: Fp2) -> Fp2 {
        Fp2 {
            a: self.sub_mod(x.a, y.a),
            b: self.sub_mod(x.b, y.b),
        }
    }

    #[inline]
    pub fn neg(&self, x: Fp2) -> Fp2 {
        self.sub(Fp2::ZERO, x)
    }

    #[inline]
    pub fn mul(&self, x: Fp2, y: Fp2) -> Fp2 {
        let p = self.p as u128;
        let ac = x.a as u128 * y.a as u128 % p;
        let bd = x.b as u128 * y.b as u128 % p;
        let ad = x.a as u128 * y.b as u128;
        let bc = x.b as u128 * y.a as u128;
        Fp2 {
            a: ((ac + bd * self.d as u128) % p) as u64,
            b: ((ad + bc) % p) as u64,
        }
    }

    #[inline]
    pub fn square(&self, x: Fp2) -> Fp2 {
        self.mul(x, x)
    }

    pub fn scale(&self, x: Fp2, k: u64) -> Fp2 {
        self.mul(x, self.from_u64(k))
    }

    /// Norm to F_p: a^2 - d b^2.
    pub fn norm(&self, x: Fp2) -> u64 {
        let p = self.p as u128;
        let a2 = x.a as u128 * x.a as u128 % p;
        let b2 = x.b as u128 * x.b as u128 % p * self.d as u128 % p;
        ((a2 + p - b2) % p) as u64
    }

    pub fn inv(&self, x: Fp2) -> Result<Fp2> {
        if x.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.norm(x);
        let n_inv = pow_mod(n, self.p - 2, self.p);
        let conj = self.frobenius(x);
        Ok(self.mul(conj, Fp2 { a: n_inv, b: 0 }))
    }

    pub fn div(&self, x: Fp2, y: Fp2) -> Result<Fp2> {
        Ok(self.mul(x, self.inv(y)?))
    }

    pub fn pow(&self, x: Fp2, mut e: u128) -> Fp2 {
        let mut acc = Fp2::ONE;
        let mut base = x;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.square(base);
            e >>= 1;
        }
        acc
    }

    /// x^p: the nontrivial automorphism a + b u -> a - b u.
    pub fn frobenius(&self, x: Fp2) -> Fp2 {
        Fp2 {
            a: x.a,
            b: self.sub_mod(0, x.b),
        }
    }

    /// p^2 as a u128, the order of the field.
    pub fn order(&self) -> u128 {
        self.p as u128 * self.p as u128
    }

    /// Some square root, if x is a square.
    pub fn sqrt(&self, x: Fp2) -> Option<Fp2> {
        use super::poly::Poly;
        if x.is_zero() {
            return Some(Fp2::ZERO);
        }
        let f = Poly::from_coeffs(vec![self.neg(x), Fp2::ZERO, Fp2::ONE]);
        f.roots(self, 0).into_iter().next()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn min_nonresidue_by_squares(p: u64) -> u64 {
        let squares: std::collections::HashSet<u64> = (1..p).map(|x| x * x % p).collect();
        (1..p).find(|c| !squares.contains(c)).unwrap()
    }

    #[test]
    fn nonresidue_matches_enumeration() {
        assert_eq!(FieldParams::new(71).unwrap().nonresidue(), 7);
        for p in [5u64, 7, 11, 13, 71, 101, 353, 1009, 4093] {
            assert_eq!(
                FieldParams::new(p).unwrap().nonresidue(),
                min_nonresidue_by_squares(p)
            );
        }
        let f353 = FieldParams::new(353).unwrap();
        assert_eq!(f353.nonresidue(), 3);
    }

    #[test]
    fn creation_errors() {
        assert_eq!(FieldParams::new(3), Err(Error::TooSmall(3)));
        assert_eq!(FieldParams::new(91), Err(Error::NotPrime(91)));
        assert_eq!(FieldParams::new(1 << 62), Err(Error::TooLarge(1 << 62)));
    }

    #[test]
    fn u_squared_is_d() {
        let f = FieldParams::new(71).unwrap();
        assert_eq!(f.square(f.u()), f.from_u64(7));
    }

    #[test]
    fn frobenius_examples() {
        let f = FieldParams::new(71).unwrap();
        assert_eq!(f.frobenius(f.from_u64(5)), f.from_u64(5));
        assert_eq!(f.frobenius(f.u()), f.neg(f.u()));
        assert_eq!(f.pow(f.u(), 71), f.neg(f.u()));
    }

    #[test]
    fn field_axioms_on_random_triples() {
        let f = FieldParams::new(1_000_000_007).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (x, y, z) = (f.random(&mut rng), f.random(&mut rng), f.random(&mut rng));
            assert_eq!(f.mul(f.mul(x, y), z), f.mul(x, f.mul(y, z)));
            assert_eq!(f.mul(x, f.add(y, z)), f.add(f.mul(x, y), f.mul(x, z)));
            assert_eq!(f.mul(x, y), f.mul(y, x));
            if !x.is_zero() {
                assert_eq!(f.mul(x, f.inv(x).unwrap()), Fp2::ONE);
                assert_eq!(f.pow(x, f.order() - 1), Fp2::ONE);
            }
        }
        assert_eq!(f.inv(Fp2::ZERO), Err(Error::DivisionByZero));
    }

    #[test]
    fn encoding_roundtrip_and_range_check() {
        let f = FieldParams::new(71).unwrap();
        let x = Fp2 { a: 40, b: 3 };
        assert_eq!(x.to_string(), "40+3*u");
        assert_eq!(f.parse("40+3*u").unwrap(), x);
        assert!(f.parse("71+0*u").is_err());
        assert!(f.parse("40-3*u").is_err());
    }

    proptest! {
        #[test]
        fn frobenius_is_ring_hom_fixing_base_field(a in 0u64..1_000_003, b in 0u64..1_000_003,
                                                   c in 0u64..1_000_003, d in 0u64..1_000_003) {
            let f = FieldParams::new(1_000_003).unwrap();
            let x = Fp2 { a, b };
            let y = Fp2 { a: c, b: d };
            prop_assert_eq!(f.frobenius(f.mul(x, y)), f.mul(f.frobenius(x), f.frobenius(y)));
            prop_assert_eq!(f.frobenius(f.add(x, y)), f.add(f.frobenius(x), f.frobenius(y)));
            prop_assert_eq!(f.frobenius(f.frobenius(x)), x);
            prop_assert_eq!(f.frobenius(x) == x, b == 0);
            prop_assert_eq!(f.pow(x, f.p() as u128), f.frobenius(x));
        }
    }
}
