#!/usr/bin/env python3
"""Reference computation of the product-detecting 1-form Phi.

Phi(X) = Tr_g( (1/d) L_{X_perp} g^D + (1/(n-d)) L_{X^D} g^perp )

Checked on a conformally rescaled product metric g = e^a (g1 x g2) with
D = span(dt, dx): the expected result is Phi = +da (so the metric
e^{-a} g is the product, i.e. the recovered product exponent is -a).
Also prints Phi for the 4D type-C fixture diag(1,1,x^3,1/x), D = <dy,dz>.
"""

import itertools
import sympy as sp

t, x, y, z = sp.symbols("t x y z")
xs = (t, x, y, z)


def lie_derivative_02(T, X, xs):
    n = len(xs)
    L = sp.zeros(n, n)
    for i, j in itertools.product(range(n), repeat=2):
        L[i, j] = sum(X[m] * sp.diff(T[i, j], xs[m]) for m in range(n))
        L[i, j] += sum(T[m, j] * sp.diff(X[m], xs[i]) + T[i, m] * sp.diff(X[m], xs[j]) for m in range(n))
    return L


def phi_form(g, proj_D, d, xs):
    """proj_D: (1,1) projector matrix onto D. Returns Phi as a row of components."""
    n = len(xs)
    ginv = g.inv()
    PD = proj_D
    Pp = sp.eye(n) - PD
    gD = sp.simplify(PD.T * g * PD)
    gp = sp.simplify(Pp.T * g * Pp)
    phi = []
    for i in range(n):
        X = sp.Matrix([1 if k == i else 0 for k in range(n)])
        Xp = Pp * X
        XD = PD * X
        term = lie_derivative_02(gD, Xp, xs) / d + lie_derivative_02(gp, XD, xs) / (n - d)
        val = sum(ginv[a, b] * term[a, b] for a in range(n) for b in range(n))
        phi.append(sp.simplify(val))
    return phi


def main():
    a = x + y**2
    g1 = sp.diag(sp.exp(x) + 1, sp.exp(x) + 1)       # factor in (t,x)... keep t-independent
    g2 = sp.diag(1 + y**2, 1 + y**2)                 # factor in (y,z)
    g = sp.exp(a) * sp.diag(g1[0, 0], g1[1, 1], g2[0, 0], g2[1, 1])
    PD = sp.diag(1, 1, 0, 0)
    phi = phi_form(g, PD, 2, xs)
    da = [sp.simplify(sp.diff(a, v)) for v in xs]
    print("conformal product, Phi:", phi)
    print("da:", da)
    print("Phi - da:", [sp.simplify(p - q) for p, q in zip(phi, da)])

    g = sp.diag(1, 1, x**3, 1 / x)
    PD = sp.diag(0, 0, 1, 1)
    phi = phi_form(g, PD, 2, xs)
    print("type-C fixture, D=<dy,dz>: Phi =", phi)

    # rank-1 D = <dy> in diag(1,1,x,x^2)
    g = sp.diag(1, 1, x, x**2)
    PD = sp.diag(0, 0, 1, 0)
    phi = phi_form(g, PD, 1, xs)
    print("type-B fixture, D=<dy>: Phi =", phi)
    PD = sp.diag(0, 0, 0, 1)
    phi = phi_form(g, PD, 1, xs)
    print("type-B fixture, D=<dz>: Phi =", phi)


if __name__ == "__main__":
    main()
