"""Independent numerical oracles used by the test suite.

These deliberately avoid the code paths they check: the Airy oracle
propagates the defining ODE with its own Taylor stepper seeded only by the
origin closed forms; the bound-state oracle is a dense bisection scan; the
overlap oracle integrates the defining integral by brute quadrature.
"""

import mpmath
from mpmath import mp, mpc, mpf


def airy_ode_oracle(z, dps):
    """(Ai, Ai', Bi, Bi') at z by Taylor-stepping f'' = v f from the origin.

    Seeds from the gamma-function closed forms at 0; steps of size <= 0.5
    toward z along a straight ray, each step summed to working precision.
    """
    with mp.workdps(dps + 10):
        z = mpc(z)
        g13 = mpmath.gamma(mpf(1) / 3)
        g23 = mpmath.gamma(mpf(2) / 3)
        three = mpf(3)
        ai = 1 / (three ** (mpf(2) / 3) * g23)
        aip = -1 / (three ** (mpf(1) / 3) * g13)
        bi = 1 / (three ** (mpf(1) / 6) * g23)
        bip = three ** (mpf(1) / 6) / g13

        n_steps = max(1, int(abs(z) / mpf("0.4")) + 1)
        dz = z / n_steps
        v = mpc(0)

        def step(f0, f1, v0, h):
            # a_{n+2} = (v0 a_n + a_{n-1}) / ((n+1)(n+2)); series in h
            a = [mpc(f0), mpc(f1), v0 * f0 / 2]
            f = a[0] + a[1] * h + a[2] * h * h
            fp = a[1] + 2 * a[2] * h
            hn = h * h
            n = 1
            quiet = 0
            while quiet < 4 and n < 600:
                a.append((v0 * a[n] + a[n - 1]) / ((n + 1) * (n + 2)))
                hn = hn * h
                term = a[n + 2] * hn
                f += term
                fp += (n + 2) * a[n + 2] * hn / h
                n += 1
                if abs(term) < mpf(10) ** (-(dps + 8)) * (abs(f) + 1) and n > 8:
                    quiet += 1
                else:
                    quiet = 0
            return f, fp

        for _ in range(n_steps):
            ai, aip = step(ai, aip, v, dz)
            bi, bip = step(bi, bip, v, dz)
            v = v + dz
        return ai, aip, bi, bip


def bisect_bound_states(L, V0, n_grid=200_000):
    """All k with k tan(kL) = sqrt(2 V0 - k^2), by dense scan + bisection.

    Double precision (oracle for locations, not for ultimate accuracy).
    """
    import numpy as np
    kmax = float(np.sqrt(2 * V0))

    def h(k):
        return k * np.sin(k * L) - np.sqrt(max(2 * V0 - k * k, 0.0)) * np.cos(k * L)

    ks = np.linspace(1e-9, kmax * (1 - 1e-12), n_grid)
    vals = np.array([h(k) for k in ks])
    roots = []
    sign = np.sign(vals)
    idx = np.nonzero(sign[1:] != sign[:-1])[0]
    for i in idx:
        a, b = ks[i], ks[i + 1]
        fa = h(a)
        for _ in range(200):
            m = 0.5 * (a + b)
            fm = h(m)
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b = m
        k = 0.5 * (a + b)
        if k * np.tan(k * L) > 0:
            roots.append(k)
    return [k * k / 2 - V0 for k in roots]


def overlap_inside_quadrature(W, Q, kQ, L, V0, N, dps, n_panels=6000):
    """Interior overlap by direct Simpson quadrature of
    cos(k_W (L+y)) cos(k_Q (L+y)) over [-L, 0], divided by the bound-state
    junction normalization cos(kQ L) and the model normalization constant."""
    with mp.workdps(dps):
        W = mpc(W)
        kW = mpmath.sqrt(2 * (mpf(V0) + W))
        kQ = mpf(kQ)
        L = mpf(L)
        n = 2 * n_panels
        h = L / n
        total = mpc(0)
        for i in range(n + 1):
            y = -L + i * h
            if i == 0 or i == n:
                w = 1
            elif i % 2 == 1:
                w = 4
            else:
                w = 2
            total += w * mpmath.cos(kW * (L + y)) * mpmath.cos(kQ * (L + y))
        total = total * h / 3
        return total / (mpf(N) * mpmath.cos(kQ * L))
