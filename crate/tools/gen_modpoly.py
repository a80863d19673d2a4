#!/usr/bin/env python3
"""Regenerate classical modular polynomial files `phi_m.txt`.

Phi_m(X, j) = prod (X - j(tau_k)) over the m+1 cosets; power sums of the roots
are computed as q-expansions and converted to polynomials in j, then Newton's
identities give the elementary symmetric functions. Prime m only.

usage: gen_modpoly.py OUTDIR m [m ...]
"""
import sys
from fractions import Fraction


def j_series(prec):
    """Coefficients of q*j(q) up to q^prec."""
    n = prec + 2
    sigma3 = [0] * n
    for d in range(1, n):
        for k in range(d, n, d):
            sigma3[k] += d ** 3
    e4 = [1] + [240 * sigma3[k] for k in range(1, n)]

    def mul(a, b):
        out = [0] * n
        for i, x in enumerate(a):
            if x == 0:
                continue
            for k in range(0, n - i):
                out[i + k] += x * b[k]
        return out

    e4_3 = mul(mul(e4, e4), e4)
    # prod (1 - q^k)^24
    eta = [0] * n
    eta[0] = 1
    for k in range(1, n):
        for _ in range(24):
            for i in range(n - 1, k - 1, -1):
                eta[i] -= eta[i - k]
    # invert eta
    inv = [0] * n
    inv[0] = 1
    for i in range(1, n):
        inv[i] = -sum(eta[k] * inv[i - k] for k in range(1, i + 1))
    return mul(e4_3, inv)[: prec + 1]


def modpoly(m):
    top = m * (m + 1)
    base = j_series(top)
    # powers[k][t] = [q^t] (q j)^k, t = 0..k
    # Miller's recurrence for (q j)^k, since q j has constant term 1
    powers = [[1]]
    for k in range(1, top + 1):
        cur = [1]
        for n in range(1, k + 1):
            acc = 0
            for i in range(1, n + 1):
                acc += (k * i - n + i) * base[i] * cur[n - i]
            assert acc % n == 0
            cur.append(acc // n)
        powers.append(cur)

    def to_j_poly(laurent):
        # laurent: dict exponent -> coefficient, exponents <= 0 only
        lo = min(laurent)
        rem = dict(laurent)
        out = [0] * (-lo + 1)
        for e in range(lo, 0):
            c = rem.get(e, 0)
            if c == 0:
                continue
            k = -e
            out[k] = c
            for t, x in enumerate(powers[k]):
                rem[t - k] = rem.get(t - k, 0) - c * x
        out[0] = rem.get(0, 0)
        return out

    psums = [None]
    for r in range(1, m + 2):
        laurent = {}
        for t, x in enumerate(powers[r]):
            e = -r * m + m * t
            laurent[e] = laurent.get(e, 0) + x
            ee = t - r
            if ee % m == 0:
                laurent[ee // m] = laurent.get(ee // m, 0) + m * x
        psums.append(to_j_poly(laurent))

    def pmul(a, b):
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for k, y in enumerate(b):
                    out[i + k] += x * y
        return out

    def padd(a, b, sign=1):
        n = max(len(a), len(b))
        return [(a[i] if i < len(a) else 0) + sign * (b[i] if i < len(b) else 0) for i in range(n)]

    elem = [[1]]
    for k in range(1, m + 2):
        acc = [0]
        for i in range(1, k + 1):
            acc = padd(acc, pmul(elem[k - i], psums[i]), 1 if i % 2 == 1 else -1)
        assert all(c % k == 0 for c in acc)
        elem.append([c // k for c in acc])

    coeffs = {}
    for k in range(0, m + 2):
        sign = -1 if k % 2 else 1
        for b, c in enumerate(elem[k]):
            if c:
                coeffs[(m + 1 - k, b)] = sign * c
    for (a, b), c in coeffs.items():
        assert coeffs.get((b, a)) == c, (a, b)
    return coeffs


def main():
    outdir = sys.argv[1]
    for m in map(int, sys.argv[2:]):
        coeffs = modpoly(m)
        with open(f"{outdir}/phi_{m}.txt", "w") as fh:
            fh.write(f"# classical modular polynomial Phi_{m}(X, Y)\n")
            fh.write("# [i j] c  means c*(X^i Y^j + X^j Y^i) for i > j, c*X^i Y^i for i = j\n")
            for (a, b) in sorted(coeffs, reverse=True):
                if a >= b:
                    fh.write(f"[{a} {b}] {coeffs[(a, b)]}\n")
        print(f"phi_{m}: {len(coeffs)} terms", file=sys.stderr)


if __name__ == "__main__":
    main()
