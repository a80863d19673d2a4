//! Short Weierstrass curves over F_{p^2}, division polynomials, Vélu
//! isogenies and CM eigenspace kernels.
//!
//! Division polynomials are kept in the y-free normalization f_m, where
//! ψ_m = f_m for odd m and ψ_m = 2y·f_m for even m.

use std::fmt;

use crate::algebra::int::kronecker;
use crate::algebra::{FieldParams, Fp2, Poly};
use crate::error::{Error, Result};
use crate::quadorder::SplitPrimeIdeal;

/// y² = x³ + Ax + B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Curve {
    pub a: Fp2,
    pub b: Fp2,
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y^2 = x^3 + ({})x + ({})", self.a, self.b)
    }
}

impl Curve {
    pub fn new(field: &FieldParams, a: Fp2, b: Fp2) -> Result<Self> {
        let c = Curve { a, b };
        if c.discriminant_part(field).is_zero() {
            return Err(Error::InvariantViolation(format!("singular curve {c}")));
        }
        Ok(c)
    }

    /// 4A³ + 27B².
    fn discriminant_part(&self, f: &FieldParams) -> Fp2 {
        let a3 = f.mul(f.square(self.a), self.a);
        f.add(f.scale(a3, 4), f.scale(f.square(self.b), 27))
    }

    pub fn j_invariant(&self, f: &FieldParams) -> Fp2 {
        let a3 = f.scale(f.mul(f.square(self.a), self.a), 4);
        let den = self.discriminant_part(f);
        f.div(f.scale(a3, 1728), den).expect("nonsingular curve")
    }

    /// x³ + Ax + B.
    pub fn rhs(&self) -> Poly {
        Poly::from_coeffs(vec![self.b, self.a, Fp2::ZERO, Fp2::ONE])
    }

    pub fn rhs_at(&self, f: &FieldParams, x: Fp2) -> Fp2 {
        f.add(f.mul(f.add(f.square(x), self.a), x), self.b)
    }

    /// Image under (x, y) ↦ (c x, c^{3/2} y): coefficients (c² A, c³ B).
    pub fn scaled(&self, f: &FieldParams, c: Fp2) -> Curve {
        let c2 = f.square(c);
        Curve {
            a: f.mul(c2, self.a),
            b: f.mul(f.mul(c2, c), self.b),
        }
    }
}

/// Curve with CM by the maximal order of discriminant −3 (j = 0) or −4 (j = 1728).
pub fn base_curve(field: &FieldParams, disc: i64) -> Result<Curve> {
    if kronecker(disc, field.p()) == 1 {
        return Err(Error::BadOrientation {
            p: field.p(),
            disc,
        });
    }
    match disc {
        -3 => Curve::new(field, Fp2::ZERO, Fp2::ONE),
        -4 => Curve::new(field, Fp2::ONE, Fp2::ZERO),
        _ => Err(Error::BadOrder(format!(
            "no explicit base curve for discriminant {disc}"
        ))),
    }
}

/// A curve with the given j-invariant.
///
/// Away from 0 and 1728 this is the short form of
/// y² + xy = x³ − 36/(j−1728)·x − 1/(j−1728).
pub fn curve_from_j(field: &FieldParams, j: Fp2) -> Curve {
    let f = field;
    if j.is_zero() {
        return Curve {
            a: Fp2::ZERO,
            b: Fp2::ONE,
        };
    }
    let k = f.from_u64(1728);
    if j == k {
        return Curve {
            a: Fp2::ONE,
            b: Fp2::ZERO,
        };
    }
    let inv = f.inv(f.sub(j, k)).expect("j != 1728");
    let a4 = f.neg(f.scale(inv, 36));
    let a6 = f.neg(inv);
    let c4 = f.sub(Fp2::ONE, f.scale(a4, 48));
    let c6 = f.sub(f.sub(f.scale(a4, 72), Fp2::ONE), f.scale(a6, 864));
    Curve {
        a: f.neg(f.scale(c4, 27)),
        b: f.neg(f.scale(c6, 54)),
    }
}

/// Affine point; the point at infinity is `None` in [`Point`] arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Point {
    pub x: Fp2,
    pub y: Fp2,
}

impl Curve {
    pub fn contains(&self, f: &FieldParams, p: &Point) -> bool {
        f.square(p.y) == self.rhs_at(f, p.x)
    }

    pub fn neg_point(&self, f: &FieldParams, p: Option<Point>) -> Option<Point> {
        p.map(|p| Point { x: p.x, y: f.neg(p.y) })
    }

    pub fn add_points(&self, f: &FieldParams, p: Option<Point>, q: Option<Point>) -> Option<Point> {
        let (p, q) = match (p, q) {
            (None, q) => return q,
            (p, None) => return p,
            (Some(p), Some(q)) => (p, q),
        };
        let slope = if p.x == q.x {
            if f.add(p.y, q.y).is_zero() {
                return None;
            }
            let num = f.add(f.scale(f.square(p.x), 3), self.a);
            f.div(num, f.scale(p.y, 2)).ok()?
        } else {
            f.div(f.sub(q.y, p.y), f.sub(q.x, p.x)).ok()?
        };
        let x = f.sub(f.sub(f.square(slope), p.x), q.x);
        let y = f.sub(f.mul(slope, f.sub(p.x, x)), p.y);
        Some(Point { x, y })
    }

    pub fn mul_point(&self, f: &FieldParams, p: Option<Point>, k: i64) -> Option<Point> {
        let mut base = if k < 0 { self.neg_point(f, p) } else { p };
        let mut n = k.unsigned_abs();
        let mut acc = None;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.add_points(f, acc, base);
            }
            base = self.add_points(f, base, base);
            n >>= 1;
        }
        acc
    }

    /// A uniformly chosen affine point, driven by `rng`.
    pub fn random_point<R: rand::Rng + ?Sized>(&self, f: &FieldParams, rng: &mut R) -> Point {
        loop {
            let x = f.random(rng);
            if let Some(y) = f.sqrt(self.rhs_at(f, x)) {
                return Point { x, y };
            }
        }
    }
}

/// f_0, ..., f_max, each reduced modulo `modulus` when given.
pub fn division_polys(
    field: &FieldParams,
    e: &Curve,
    max: usize,
    modulus: Option<&Poly>,
) -> Vec<Poly> {
    let f = field;
    let red = |p: Poly| match modulus {
        Some(m) => p.rem(f, m).expect("nonzero modulus"),
        None => p,
    };
    let mul = |a: &Poly, b: &Poly| red(a.mul(f, b));
    let (a, b) = (e.a, e.b);
    let c = |v: i64| f.from_i64(v);
    let big_f = red(e.rhs().scale(f, c(4)));
    let f2 = mul(&big_f, &big_f);
    let a2 = f.square(a);
    let f3 = Poly::from_coeffs(vec![
        f.neg(a2),
        f.scale(b, 12),
        f.scale(a, 6),
        Fp2::ZERO,
        c(3),
    ]);
    let f4 = Poly::from_coeffs(vec![
        f.sub(f.neg(f.scale(f.square(b), 8)), f.mul(a2, a)),
        f.neg(f.scale(f.mul(a, b), 4)),
        f.neg(f.scale(a2, 5)),
        f.scale(b, 20),
        f.scale(a, 5),
        Fp2::ZERO,
        Fp2::ONE,
    ])
    .scale(f, c(2));
    let mut v = vec![Poly::zero(), Poly::one(), Poly::one(), red(f3), red(f4)];
    for k in 5..=max {
        let m = k / 2;
        let next = if k % 2 == 1 {
            let t1 = mul(&v[m + 2], &mul(&v[m], &mul(&v[m], &v[m])));
            let t2 = mul(&v[m - 1], &mul(&v[m + 1], &mul(&v[m + 1], &v[m + 1])));
            if m % 2 == 0 {
                mul(&f2, &t1).sub(f, &t2)
            } else {
                t1.sub(f, &mul(&f2, &t2))
            }
        } else {
            let t1 = mul(&v[m + 2], &mul(&v[m - 1], &v[m - 1]));
            let t2 = mul(&v[m - 2], &mul(&v[m + 1], &v[m + 1]));
            mul(&v[m], &t1.sub(f, &t2))
        };
        v.push(next);
    }
    v.truncate(max + 1);
    v
}

/// The m-division polynomial as a polynomial in x: f_m for odd m and
/// (x³ + Ax + B)·f_m for even m, so its roots are the x-coordinates of the
/// nonzero m-torsion points.
pub fn division_poly(field: &FieldParams, e: &Curve, m: usize) -> Poly {
    let v = division_polys(field, e, m.max(4), None);
    if m % 2 == 1 {
        v[m].clone()
    } else {
        v[m].mul(field, &e.rhs())
    }
}

/// x([n]P) = num(x) / den(x) for n >= 1.
pub fn mul_x_map(field: &FieldParams, e: &Curve, n: usize) -> (Poly, Poly) {
    let f = field;
    let v = division_polys(f, e, n + 1, None);
    let big_f = e.rhs().scale(f, f.from_u64(4));
    let (c, d) = if n % 2 == 1 {
        (big_f.mul(f, &v[n - 1]).mul(f, &v[n + 1]), v[n].square(f))
    } else {
        (v[n - 1].mul(f, &v[n + 1]), big_f.mul(f, &v[n].square(f)))
    };
    (Poly::x().mul(f, &d).sub(f, &c), d)
}

/// Monic kernel polynomial of a finite subgroup of the given order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelPoly {
    pub poly: Poly,
    pub order: u64,
}

/// An isogeny given by Vélu's formulas; only the x-coordinate map is kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitIsogeny {
    pub domain: Curve,
    pub codomain: Curve,
    pub kernel: KernelPoly,
    pub x_num: Poly,
    pub x_den: Poly,
}

impl ExplicitIsogeny {
    pub fn degree(&self) -> u64 {
        self.kernel.order
    }

    /// x-coordinate of the image, or `None` on the kernel.
    pub fn map_x(&self, f: &FieldParams, x: Fp2) -> Option<Fp2> {
        f.div(self.x_num.eval(f, x), self.x_den.eval(f, x)).ok()
    }
}

/// Kernel polynomials of the F_{p^2}-rational subgroups of order ℓ ∈ {2, 3}.
pub fn ell_kernels(field: &FieldParams, e: &Curve, ell: u64) -> Result<Vec<KernelPoly>> {
    if ell != 2 && ell != 3 {
        return Err(Error::BadOrder(format!(
            "explicit {ell}-isogenies are not supported"
        )));
    }
    let psi = division_poly(field, e, ell as usize);
    Ok(psi
        .distinct_roots(field, 0)
        .into_iter()
        .map(|r| KernelPoly {
            poly: Poly::linear(field, r),
            order: ell,
        })
        .collect())
}

/// Kernel polynomials of every cyclic subgroup of prime order m whose
/// x-coordinates lie in F_{p^2}, each listed once.
pub fn cyclic_kernels(field: &FieldParams, e: &Curve, m: u64) -> Result<Vec<KernelPoly>> {
    if m == 2 || m == 3 {
        return ell_kernels(field, e, m);
    }
    if !crate::algebra::int::is_prime(m) {
        return Err(Error::BadOrder(format!("{m} is not prime")));
    }
    let half = (m - 1) / 2;
    let maps: Vec<(Poly, Poly)> = (1..=half as usize).map(|k| mul_x_map(field, e, k)).collect();
    let mut out: Vec<KernelPoly> = Vec::new();
    for x0 in division_poly(field, e, m as usize).distinct_roots(field, 0) {
        let mut xs = Vec::with_capacity(half as usize);
        for (num, den) in &maps {
            xs.push(field.div(num.eval(field, x0), den.eval(field, x0))?);
        }
        let k = KernelPoly {
            poly: Poly::from_roots(field, &xs),
            order: m,
        };
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out.sort();
    Ok(out)
}

/// Vélu quotient E → E/K.
pub fn velu(field: &FieldParams, e: &Curve, k: &KernelPoly) -> Result<ExplicitIsogeny> {
    let f = field;
    let d = k.poly.degree().ok_or(Error::BadKernel)?;
    if !k.poly.is_monic() {
        return Err(Error::BadKernel);
    }
    let (a4, a6) = (e.a, e.b);
    let (t, w, x_num, x_den) = if k.order == 2 {
        if d != 1 {
            return Err(Error::BadKernel);
        }
        let x0 = f.neg(k.poly.coeff(0));
        if !e.rhs_at(f, x0).is_zero() {
            return Err(Error::BadKernel);
        }
        let t = f.add(f.scale(f.square(x0), 3), a4);
        let w = f.mul(x0, t);
        let num = Poly::x().mul(f, &k.poly).add(f, &Poly::constant(t));
        (t, w, num, k.poly.clone())
    } else {
        if k.order.is_multiple_of(2) || d as u64 != (k.order - 1) / 2 {
            return Err(Error::BadKernel);
        }
        let psi = division_poly(f, e, k.order as usize);
        if !psi.rem(f, &k.poly)?.is_zero() {
            return Err(Error::BadKernel);
        }
        // elementary symmetric functions of the roots
        let s1 = f.neg(k.poly.coeff(d - 1));
        let s2 = if d >= 2 { k.poly.coeff(d - 2) } else { Fp2::ZERO };
        let s3 = if d >= 3 {
            f.neg(k.poly.coeff(d - 3))
        } else {
            Fp2::ZERO
        };
        let dd = f.from_u64(d as u64);
        let p2 = f.sub(f.square(s1), f.scale(s2, 2));
        let p3 = f.add(
            f.sub(f.mul(f.square(s1), s1), f.scale(f.mul(s1, s2), 3)),
            f.scale(s3, 3),
        );
        let t = f.add(f.scale(p2, 6), f.scale(f.mul(a4, dd), 2));
        let w = f.add(
            f.add(f.scale(p3, 10), f.scale(f.mul(a4, s1), 6)),
            f.scale(f.mul(a6, dd), 4),
        );
        let kd = &k.poly;
        let k1 = kd.derivative(f);
        let k2 = k1.derivative(f);
        let big_f = e.rhs().scale(f, f.from_u64(4));
        let lin = Poly::from_coeffs(vec![f.neg(f.scale(s1, 2)), f.from_u64(2 * d as u64 + 1)]);
        let quad = Poly::from_coeffs(vec![f.scale(a4, 2), Fp2::ZERO, f.from_u64(6)]);
        let kd2 = kd.square(f);
        let num = lin
            .mul(f, &kd2)
            .sub(f, &quad.mul(f, &k1).mul(f, kd))
            .add(f, &big_f.mul(f, &k1.square(f).sub(f, &kd.mul(f, &k2))));
        (t, w, num, kd2)
    };
    let codomain = Curve::new(
        f,
        f.sub(a4, f.scale(t, 5)),
        f.sub(a6, f.scale(w, 7)),
    )?;
    Ok(ExplicitIsogeny {
        domain: *e,
        codomain,
        kernel: k.clone(),
        x_num,
        x_den,
    })
}

/// Kernel polynomial of φ(K), for φ of degree coprime to |K|.
pub fn push_kernel(field: &FieldParams, phi: &ExplicitIsogeny, k: &KernelPoly) -> Result<KernelPoly> {
    let f = field;
    if gcd(phi.degree(), k.order) != 1 {
        return Err(Error::DegreesNotCoprime);
    }
    let g = vec![phi.x_num.neg(f), phi.x_den.clone()];
    let res = Poly::resultant_bivariate(f, &k.poly, &g)?;
    if res.degree() != k.poly.degree() {
        return Err(Error::BadKernel);
    }
    Ok(KernelPoly {
        poly: res.monic(f),
        order: k.order,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Kernel of the dual of an ℓ-isogeny (ℓ ∈ {2, 3}): the image of another
/// ℓ-torsion point.
pub fn dual_kernel(field: &FieldParams, phi: &ExplicitIsogeny) -> Result<KernelPoly> {
    let f = field;
    let ell = phi.degree();
    let x0 = f.neg(phi.kernel.poly.coeff(0));
    let psi = division_poly(f, &phi.domain, ell as usize);
    let other = psi
        .distinct_roots(f, 0)
        .into_iter()
        .find(|&r| r != x0)
        .ok_or(Error::BadKernel)?;
    let image = phi.map_x(f, other).ok_or(Error::BadKernel)?;
    Ok(KernelPoly {
        poly: Poly::linear(f, image),
        order: ell,
    })
}

/// The ℓ-isogeny from `e` to a curve of j-invariant `target`, skipping
/// `exclude`. Ties between kernels go to the smallest kernel polynomial.
pub fn explicit_step(
    field: &FieldParams,
    e: &Curve,
    ell: u64,
    target: Fp2,
    exclude: Option<&KernelPoly>,
) -> Result<ExplicitIsogeny> {
    let mut kernels = ell_kernels(field, e, ell)?;
    kernels.sort();
    for k in kernels {
        if exclude == Some(&k) {
            continue;
        }
        let phi = velu(field, e, &k)?;
        if phi.codomain.j_invariant(field) == target {
            return Ok(phi);
        }
    }
    Err(Error::NoMatchingKernel { ell })
}

/// The automorphism ρ of a base curve that plays the role of ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CmAutomorphism {
    /// ρ(x, y) = (cx·x, cy·y).
    pub cx: Fp2,
    pub cy: Fp2,
}

impl CmAutomorphism {
    pub fn for_curve(field: &FieldParams, e: &Curve, disc: i64) -> Result<Self> {
        let f = field;
        match disc {
            -3 if e.a.is_zero() => {
                let roots = Poly::from_coeffs(vec![Fp2::ONE, Fp2::ONE, Fp2::ONE]).distinct_roots(f, 0);
                Ok(CmAutomorphism {
                    cx: *roots.first().ok_or(Error::BadOrientation { p: f.p(), disc })?,
                    cy: Fp2::ONE,
                })
            }
            -4 if e.b.is_zero() => {
                let roots = Poly::from_coeffs(vec![Fp2::ONE, Fp2::ZERO, Fp2::ONE]).distinct_roots(f, 0);
                Ok(CmAutomorphism {
                    cx: f.neg(Fp2::ONE),
                    cy: *roots.first().ok_or(Error::BadOrientation { p: f.p(), disc })?,
                })
            }
            _ => Err(Error::InvariantViolation(format!(
                "curve {e} has no CM automorphism for discriminant {disc}"
            ))),
        }
    }

    pub fn apply(&self, f: &FieldParams, p: Option<Point>) -> Option<Point> {
        p.map(|p| Point {
            x: f.mul(self.cx, p.x),
            y: f.mul(self.cy, p.y),
        })
    }
}

/// Kernel polynomial of E0[(q, ω − λ)], where λ is the eigenvalue for `sign`.
///
/// The q-torsion x-coordinates are the roots of f_q; the eigenspace is cut
/// out by requiring [λ]P = ρ(P) on both coordinates, computed modulo f_q.
pub fn cm_eigenspace_kernel(
    field: &FieldParams,
    e0: &Curve,
    disc: i64,
    ideal: &SplitPrimeIdeal,
    sign: i32,
) -> Result<KernelPoly> {
    let f = field;
    let rho = CmAutomorphism::for_curve(f, e0, disc)?;
    let q = ideal.q as usize;
    let lambda = ideal.eigenvalue(sign) as usize;
    let g = division_polys(f, e0, q, None)[q].monic(f);
    let v = division_polys(f, e0, 2 * lambda + 2, Some(&g));
    let red = |p: Poly| p.rem(f, &g).expect("nonzero modulus");
    let big_f = red(e0.rhs().scale(f, f.from_u64(4)));
    let n = lambda;
    let (c, d) = if n % 2 == 1 {
        (red(big_f.mul(f, &v[n - 1]).mul(f, &v[n + 1])), red(v[n].square(f)))
    } else {
        (red(v[n - 1].mul(f, &v[n + 1])), red(big_f.mul(f, &v[n].square(f))))
    };
    let one_minus = f.sub(Fp2::ONE, rho.cx);
    let cond_x = red(Poly::x().mul(f, &d).scale(f, one_minus)).sub(f, &c);
    let fn2 = red(v[n].square(f));
    let fn4 = red(fn2.square(f));
    let y_den = if n % 2 == 1 {
        fn4
    } else {
        red(big_f.square(f).mul(f, &fn4))
    };
    let cond_y = v[2 * n].sub(f, &y_den.scale(f, rho.cy));
    let k = Poly::gcd_monic(f, &Poly::gcd_monic(f, &g, &cond_x), &cond_y);
    let want = (q - 1) / 2;
    match k.degree() {
        Some(dk) if dk == want => Ok(KernelPoly {
            poly: k,
            order: ideal.q,
        }),
        Some(dk) if dk > want => Err(Error::EigenvalueAmbiguous),
        _ => Err(Error::BadKernel),
    }
}
