"""Generate Cartesian monomial coefficients for real orthonormal spherical
harmonics l <= 5 (solid-harmonic / homogeneous polynomial form) and write
them as a Python data module."""
import sympy as sp

x, y, z, r = sp.symbols("x y z r", real=True)

def solid(l, m):
    # real, orthonormal on S^2, Condon-Shortley-free (sign irrelevant for our use)
    am = abs(m)
    K = sp.sqrt(sp.Rational(2 * l + 1, 4) / sp.pi *
                sp.factorial(l - am) / sp.factorial(l + am))
    t = sp.symbols("t")
    # assoc_legendre includes CS phase; strip it for a CS-free convention
    P = sp.assoc_legendre(l, am, t) * (-1) ** am
    # homogenize: P_l^m(z/r) r^l = (sin^m part) * poly(z, r^2)
    expr = P.subs(t, z / r) * r**l
    expr = sp.simplify(sp.expand(expr))
    if m > 0:
        ang = sp.re(sp.expand((x + sp.I * y) ** am))
    elif m < 0:
        ang = sp.im(sp.expand((x + sp.I * y) ** am))
    else:
        ang = 1
    if m != 0:
        K = K * sp.sqrt(2)
        # (x+iy)^m already carries r^m sin^m; remove sin^m factor from P part
        expr = expr / (sp.sqrt(1 - z**2 / r**2) * r) ** am
        expr = sp.simplify(expr)
    full = sp.expand(sp.simplify(K * expr * ang))
    # replace even powers of r by (x^2+y^2+z^2)^k
    full = sp.expand(full.subs(r, sp.sqrt(x**2 + y**2 + z**2)))
    poly = sp.Poly(full, x, y, z)
    # sanity: homogeneous of degree l and harmonic
    terms = poly.terms()
    assert all(sum(mon) == l for mon, _ in terms), (l, m, terms)
    lap = sp.expand(sp.diff(full, x, 2) + sp.diff(full, y, 2) + sp.diff(full, z, 2))
    assert sp.simplify(lap) == 0, (l, m)
    return [(mon[0], mon[1], mon[2], sp.nsimplify(c)) for mon, c in terms]

lines = [
    '"""Monomial coefficient table for real orthonormal spherical harmonics',
    'l <= 5, as homogeneous harmonic polynomials in (x, y, z).',
    "",
    "Generated by tools/gen_sh_table.py (sympy); do not edit by hand.",
    'Entry format: COEFFS[(l, m)] = ((ix, iy, iz, coefficient), ...)."""',
    "",
    "COEFFS = {",
]
for l in range(6):
    for m in range(-l, l + 1):
        entries = solid(l, m)
        body = ", ".join(
            "(%d, %d, %d, %s)" % (i, j, k, sp.N(c, 19)) for i, j, k, c in entries
        )
        tail = "," if len(entries) != 1 else ","
        lines.append("    (%d, %d): (%s)%s" % (l, m, body + ("," if len(entries) == 1 else ""), ""))
        lines[-1] = "    (%d, %d): (%s%s)," % (l, m, body, "," if len(entries) == 1 else "")
lines.append("}")
open("/root/pkg/src/stochfem/_sh_table.py", "w").write("\n".join(lines) + "\n")
print("wrote", len(lines), "lines")
