use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::field::{FieldParams, Fp2};
use crate::error::{Error, Result};

/// Univariate polynomial over F_{p^2}, low degree first.
///
/// The coefficient vector never ends in a zero; the empty vector is the zero
/// polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Poly {
    coeffs: Vec<Fp2>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Fp2::ONE)
    }

    pub fn constant(c: Fp2) -> Self {
        Poly::from_coeffs(vec![c])
    }

    /// The monomial Y.
    pub fn x() -> Self {
        Poly::from_coeffs(vec![Fp2::ZERO, Fp2::ONE])
    }

    /// Y - r.
    pub fn linear(f: &FieldParams, r: Fp2) -> Self {
        Poly::from_coeffs(vec![f.neg(r), Fp2::ONE])
    }

    pub fn from_coeffs(mut coeffs: Vec<Fp2>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_roots(f: &FieldParams, roots: &[Fp2]) -> Self {
        roots
            .iter()
            .fold(Poly::one(), |acc, &r| acc.mul(f, &Poly::linear(f, r)))
    }

    pub fn coeffs(&self) -> &[Fp2] {
        &self.coeffs
    }

    /// Coefficient of Y^i (zero past the degree).
    pub fn coeff(&self, i: usize) -> Fp2 {
        self.coeffs.get(i).copied().unwrap_or(Fp2::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> Fp2 {
        self.coeffs.last().copied().unwrap_or(Fp2::ZERO)
    }

    pub fn is_monic(&self) -> bool {
        self.lead() == Fp2::ONE
    }

    pub fn add(&self, f: &FieldParams, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::from_coeffs(
            (0..n)
                .map(|i| f.add(self.coeff(i), other.coeff(i)))
                .collect(),
        )
    }

    pub fn sub(&self, f: &FieldParams, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::from_coeffs(
            (0..n)
                .map(|i| f.sub(self.coeff(i), other.coeff(i)))
                .collect(),
        )
    }

    pub fn neg(&self, f: &FieldParams) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|&c| f.neg(c)).collect())
    }

    pub fn scale(&self, f: &FieldParams, k: Fp2) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|&c| f.mul(c, k)).collect())
    }

    pub fn mul(&self, f: &FieldParams, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Fp2::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(a, b));
            }
        }
        Poly::from_coeffs(out)
    }

    pub fn square(&self, f: &FieldParams) -> Poly {
        self.mul(f, self)
    }

    /// Multiplication by Y^k.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![Fp2::ZERO; k];
        c.extend_from_slice(&self.coeffs);
        Poly { coeffs: c }
    }

    pub fn eval(&self, f: &FieldParams, x: Fp2) -> Fp2 {
        self.coeffs
            .iter()
            .rev()
            .fold(Fp2::ZERO, |acc, &c| f.add(f.mul(acc, x), c))
    }

    pub fn derivative(&self, f: &FieldParams) -> Poly {
        Poly::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| f.mul(c, f.from_u64(i as u64)))
                .collect(),
        )
    }

    pub fn monic(&self, f: &FieldParams) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let inv = f.inv(self.lead()).expect("nonzero leading coefficient");
        self.scale(f, inv)
    }

    /// Euclidean division: self = q * g + r with deg r < deg g.
    pub fn divrem(&self, f: &FieldParams, g: &Poly) -> Result<(Poly, Poly)> {
        let dg = g.degree().ok_or(Error::DivisionByZero)?;
        let lead_inv = f.inv(g.lead())?;
        let mut r = self.coeffs.clone();
        if r.len() <= dg {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut q = vec![Fp2::ZERO; r.len() - dg];
        for i in (0..q.len()).rev() {
            let c = f.mul(r[i + dg], lead_inv);
            q[i] = c;
            if c.is_zero() {
                continue;
            }
            for (j, &gc) in g.coeffs.iter().enumerate() {
                r[i + j] = f.sub(r[i + j], f.mul(c, gc));
            }
        }
        r.truncate(dg);
        Ok((Poly::from_coeffs(q), Poly::from_coeffs(r)))
    }

    pub fn rem(&self, f: &FieldParams, g: &Poly) -> Result<Poly> {
        Ok(self.divrem(f, g)?.1)
    }

    /// Exact division by Y - r. Returns `None` when r is not a root.
    pub fn div_linear(&self, f: &FieldParams, r: Fp2) -> Option<Poly> {
        let n = self.coeffs.len();
        if n == 0 {
            return Some(Poly::zero());
        }
        let mut q = vec![Fp2::ZERO; n - 1];
        let mut carry = Fp2::ZERO;
        for i in (0..n).rev() {
            let c = f.add(self.coeffs[i], f.mul(carry, r));
            if i == 0 {
                if !c.is_zero() {
                    return None;
                }
            } else {
                q[i - 1] = c;
            }
            carry = c;
        }
        Some(Poly::from_coeffs(q))
    }

    /// Monic greatest common divisor; gcd(0, 0) = 0.
    pub fn gcd_monic(f: &FieldParams, a: &Poly, b: &Poly) -> Poly {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = a.rem(f, &b).expect("b is nonzero");
            a = b;
            b = r;
        }
        a.monic(f)
    }

    pub fn mulmod(&self, f: &FieldParams, other: &Poly, m: &Poly) -> Poly {
        self.mul(f, other).rem(f, m).expect("nonzero modulus")
    }

    /// self^e mod m.
    pub fn powmod(&self, f: &FieldParams, mut e: u128, m: &Poly) -> Poly {
        let mut base = self.rem(f, m).expect("nonzero modulus");
        let mut acc = Poly::one().rem(f, m).expect("nonzero modulus");
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mulmod(f, &base, m);
            }
            e >>= 1;
            if e > 0 {
                base = base.mulmod(f, &base, m);
            }
        }
        acc
    }

    /// All roots in F_{p^2}, repeated by multiplicity, sorted by (a, b).
    ///
    /// The F_{p^2}-rational part is isolated with gcd(Y^{p^2} - Y, f) and split
    /// by seeded equal-degree factorization; the sorted output does not depend
    /// on the seed.
    pub fn roots(&self, f: &FieldParams, seed: u64) -> Vec<Fp2> {
        let Some(deg) = self.degree() else {
            return Vec::new();
        };
        if deg == 0 {
            return Vec::new();
        }
        let m = self.monic(f);
        let distinct = if deg == 1 {
            vec![f.neg(m.coeff(0))]
        } else {
            let frob = Poly::x().powmod(f, f.order(), &m).sub(f, &Poly::x());
            let g = Poly::gcd_monic(f, &m, &frob);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::new();
            split_distinct(f, &g, &mut rng, &mut out);
            out
        };
        let mut roots = Vec::with_capacity(deg);
        for r in distinct {
            let mut rest = m.clone();
            while let Some(q) = rest.div_linear(f, r) {
                roots.push(r);
                rest = q;
            }
        }
        roots.sort();
        roots
    }

    /// Distinct roots in F_{p^2}, sorted.
    pub fn distinct_roots(&self, f: &FieldParams, seed: u64) -> Vec<Fp2> {
        let mut r = self.roots(f, seed);
        r.dedup();
        r
    }

    /// Res(self, g) over F_{p^2}.
    pub fn resultant(f: &FieldParams, a: &Poly, b: &Poly) -> Fp2 {
        if a.is_zero() || b.is_zero() {
            return Fp2::ZERO;
        }
        let (mut a, mut b) = (a.clone(), b.clone());
        let mut acc = Fp2::ONE;
        loop {
            let da = a.degree().unwrap();
            let db = b.degree().unwrap();
            if db == 0 {
                return f.mul(acc, f.pow(b.lead(), da as u128));
            }
            if da == 0 {
                return f.mul(acc, f.pow(a.lead(), db as u128));
            }
            let r = a.rem(f, &b).expect("b is nonzero");
            let Some(dr) = r.degree() else {
                return Fp2::ZERO;
            };
            if (da * db) % 2 == 1 {
                acc = f.neg(acc);
            }
            acc = f.mul(acc, f.pow(b.lead(), (da - dr) as u128));
            a = b;
            b = r;
        }
    }

    /// Res_x(a(x), g(x, Y)) as a polynomial in Y, where `g_by_y[k]` is the
    /// coefficient of Y^k (a polynomial in x). `a` is normalized to be monic,
    /// so the result is the product of g(x_i, Y) over the roots x_i of a.
    ///
    /// Computed by evaluation at Y = 0, 1, ..., D and interpolation.
    pub fn resultant_bivariate(f: &FieldParams, a: &Poly, g_by_y: &[Poly]) -> Result<Poly> {
        let da = a.degree().ok_or(Error::DivisionByZero)?;
        let a = a.monic(f);
        let dy = g_by_y.len().saturating_sub(1);
        let bound = da * dy;
        if (bound as u64) >= f.p() {
            return Err(Error::InvariantViolation(
                "too few interpolation points in the base field".into(),
            ));
        }
        let xs: Vec<Fp2> = (0..=bound).map(|k| f.from_u64(k as u64)).collect();
        let values: Vec<Fp2> = xs
            .iter()
            .map(|&y| {
                let gy = g_by_y
                    .iter()
                    .rev()
                    .fold(Poly::zero(), |acc, c| acc.scale(f, y).add(f, c));
                if gy.is_zero() {
                    Fp2::ZERO
                } else {
                    Poly::resultant(f, &a, &gy)
                }
            })
            .collect();
        Ok(interpolate(f, &xs, &values))
    }
}

/// Lagrange interpolation through distinct nodes.
pub fn interpolate(f: &FieldParams, xs: &[Fp2], ys: &[Fp2]) -> Poly {
    let mut acc = Poly::zero();
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        if yi.is_zero() {
            continue;
        }
        let mut basis = Poly::one();
        let mut denom = Fp2::ONE;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                basis = basis.mul(f, &Poly::linear(f, xj));
                denom = f.mul(denom, f.sub(xi, xj));
            }
        }
        let c = f.div(yi, denom).expect("distinct nodes");
        acc = acc.add(f, &basis.scale(f, c));
    }
    acc
}

fn split_distinct(f: &FieldParams, g: &Poly, rng: &mut ChaCha8Rng, out: &mut Vec<Fp2>) {
    match g.degree() {
        None | Some(0) => {}
        Some(1) => out.push(f.neg(g.monic(f).coeff(0))),
        Some(_) => {
            let half = (f.order() - 1) / 2;
            loop {
                let delta = f.random(rng);
                let t = Poly::from_coeffs(vec![delta, Fp2::ONE]);
                let h = t.powmod(f, half, g).sub(f, &Poly::one());
                let d = Poly::gcd_monic(f, g, &h);
                let dd = d.degree().unwrap_or(0);
                if dd > 0 && dd < g.degree().unwrap() {
                    let (q, _) = g.divrem(f, &d).expect("nonzero divisor");
                    split_distinct(f, &d, rng, out);
                    split_distinct(f, &q, rng, out);
                    return;
                }
            }
        }
    }
}

/// JSON encoding: array of "a+b*u" strings, low degree first.
impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        let coeffs = v
            .iter()
            .map(|s| s.parse::<Fp2>().map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Poly::from_coeffs(coeffs))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(fm, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("({c})"),
                1 => format!("({c})Y"),
                _ => format!("({c})Y^{i}"),
            })
            .collect();
        write!(fm, "{}", terms.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn f71() -> FieldParams {
        FieldParams::new(71).unwrap()
    }

    fn c(f: &FieldParams, v: i64) -> Fp2 {
        f.from_i64(v)
    }

    #[test]
    fn divrem_examples() {
        let f = f71();
        let y2 = Poly::x().square(&f);
        assert_eq!(y2.divrem(&f, &Poly::x()).unwrap(), (Poly::x(), Poly::zero()));
        let g = Poly::from_roots(&f, &[c(&f, 1), c(&f, 2)]);
        assert_eq!(g.divrem(&f, &Poly::one()).unwrap(), (g.clone(), Poly::zero()));
        let (q, r) = g.divrem(&f, &Poly::linear(&f, c(&f, 1))).unwrap();
        assert_eq!(q, Poly::linear(&f, c(&f, 2)));
        assert!(r.is_zero());
        assert_eq!(g.divrem(&f, &Poly::zero()), Err(Error::DivisionByZero));
    }

    #[test]
    fn gcd_examples() {
        let f = f71();
        let a = Poly::from_roots(&f, &[c(&f, 1), c(&f, 2)]);
        let b = Poly::from_roots(&f, &[c(&f, 1), c(&f, 3)]);
        assert_eq!(Poly::gcd_monic(&f, &a, &b), Poly::linear(&f, c(&f, 1)));
        let s = a.scale(&f, c(&f, 5));
        assert_eq!(Poly::gcd_monic(&f, &s, &Poly::zero()), a);
    }

    #[test]
    fn coprime_quadratics_have_disjoint_roots() {
        let f = FieldParams::new(1009).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = Poly::from_coeffs(vec![f.random(&mut rng), f.random(&mut rng), Fp2::ONE]);
            let b = Poly::from_coeffs(vec![f.random(&mut rng), f.random(&mut rng), Fp2::ONE]);
            let g = Poly::gcd_monic(&f, &a, &b);
            let ra = a.distinct_roots(&f, 1);
            let rb = b.distinct_roots(&f, 2);
            let shared = ra.iter().filter(|r| rb.contains(r)).count();
            assert_eq!(g.degree().unwrap(), shared);
        }
    }

    #[test]
    fn roots_of_defining_relation() {
        let f = f71();
        let poly = Poly::from_coeffs(vec![f.neg(c(&f, 7)), Fp2::ZERO, Fp2::ONE]);
        let mut expect = vec![f.u(), f.neg(f.u())];
        expect.sort();
        assert_eq!(poly.roots(&f, 0), expect);
    }

    #[test]
    fn roots_with_multiplicity_and_irreducible_factors() {
        let f = FieldParams::new(103).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r1 = f.random(&mut rng);
        let r2 = f.random(&mut rng);
        // Y^2 - g with g a non-square in F_{p^2} stays irreducible.
        let nonsq = loop {
            let g = f.random(&mut rng);
            if f.pow(g, (f.order() - 1) / 2) != Fp2::ONE {
                break g;
            }
        };
        let irred = Poly::from_coeffs(vec![f.neg(nonsq), Fp2::ZERO, Fp2::ONE]);
        let poly = Poly::from_roots(&f, &[r1, r1, r2])
            .mul(&f, &irred)
            .scale(&f, c(&f, 3));
        let mut expect = vec![r1, r1, r2];
        expect.sort();
        assert_eq!(poly.roots(&f, 1), expect);
        assert_eq!(poly.roots(&f, 77), expect);
    }

    #[test]
    fn resultant_examples() {
        let f = f71();
        let (a, b) = (c(&f, 9), c(&f, 30));
        assert_eq!(
            Poly::resultant(&f, &Poly::linear(&f, a), &Poly::linear(&f, b)),
            f.sub(a, b)
        );
        let g = Poly::from_coeffs(vec![c(&f, -1), Fp2::ZERO, Fp2::ONE]);
        assert_eq!(Poly::resultant(&f, &g, &Poly::one()), Fp2::ONE);
        assert_eq!(
            Poly::resultant(&f, &g, &Poly::linear(&f, c(&f, 3))),
            c(&f, 8)
        );
    }

    #[test]
    fn resultant_matches_product_over_roots() {
        let f = FieldParams::new(1009).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let roots: Vec<Fp2> = (0..4).map(|_| f.random(&mut rng)).collect();
            let a = Poly::from_roots(&f, &roots);
            let b = Poly::from_coeffs((0..3).map(|_| f.random(&mut rng)).collect());
            let direct = roots
                .iter()
                .fold(Fp2::ONE, |acc, &r| f.mul(acc, b.eval(&f, r)));
            assert_eq!(Poly::resultant(&f, &a, &b), direct);
        }
    }

    #[test]
    fn bivariate_resultant_by_interpolation() {
        // Res_x(x^2 - 2, Y - x) = Y^2 - 2
        let f = f71();
        let a = Poly::from_coeffs(vec![c(&f, -2), Fp2::ZERO, Fp2::ONE]);
        let g = vec![Poly::x().neg(&f), Poly::one()];
        let r = Poly::resultant_bivariate(&f, &a, &g).unwrap();
        assert_eq!(r, a);
    }

    #[test]
    fn div_linear_rejects_non_roots() {
        let f = f71();
        let g = Poly::from_roots(&f, &[c(&f, 4), c(&f, 5)]);
        assert_eq!(g.div_linear(&f, c(&f, 4)), Some(Poly::linear(&f, c(&f, 5))));
        assert_eq!(g.div_linear(&f, c(&f, 6)), None);
    }

    #[test]
    fn json_encoding() {
        let f = f71();
        let g = Poly::linear(&f, c(&f, 1));
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"["70+0*u","1+0*u"]"#);
        assert_eq!(serde_json::from_str::<Poly>(&s).unwrap(), g);
    }

    fn arb_poly(p: u64, max_deg: usize) -> impl Strategy<Value = Vec<(u64, u64)>> {
        prop::collection::vec((0..p, 0..p), 1..=max_deg + 1)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn gcd_divides_both(a in arb_poly(1009, 6), b in arb_poly(1009, 6)) {
            let f = FieldParams::new(1009).unwrap();
            let to = |v: &Vec<(u64, u64)>| Poly::from_coeffs(v.iter().map(|&(a, b)| Fp2 { a, b }).collect());
            let (pa, pb) = (to(&a), to(&b));
            prop_assume!(!pa.is_zero() || !pb.is_zero());
            let g = Poly::gcd_monic(&f, &pa, &pb);
            prop_assert!(pa.rem(&f, &g).unwrap().is_zero());
            prop_assert!(pb.rem(&f, &g).unwrap().is_zero());
        }

        #[test]
        fn roots_are_roots_and_seed_independent(a in arb_poly(1009, 7), seed in 0u64..1000) {
            let f = FieldParams::new(1009).unwrap();
            let g = Poly::from_coeffs(a.iter().map(|&(a, b)| Fp2 { a, b }).collect());
            prop_assume!(g.degree().unwrap_or(0) > 0);
            let r = g.roots(&f, seed);
            prop_assert!(r.len() <= g.degree().unwrap());
            for x in &r {
                prop_assert!(g.eval(&f, *x).is_zero());
            }
            prop_assert_eq!(r, g.roots(&f, seed.wrapping_add(17)));
        }
    }
}
