"""Regenerate ``values.json`` by high-precision quadrature.

Independent of the package: the closed forms are re-typed here and all
integrals and derivatives are computed with mpmath at 30 digits.  Run from the
repository root with ``python3 tests/oracles/generate.py``.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 30
SQ2 = mp.sqrt(2)


def two_param(a, b):
    a, b = mp.mpf(a), mp.mpf(b)
    return lambda t, x: 2 * SQ2 * (a + b) / (mp.exp(-4j * a**2 * t + 2 * a * x) + mp.exp(-4j * b**2 * t - 2 * b * x))


def soliton(w):
    s = mp.sqrt(w)
    return lambda x: 2 * mp.sqrt(2 * w) / (mp.exp(s * x) + mp.exp(-s * x))


def perturbed(w, d):
    s, sd = mp.sqrt(w), mp.sqrt(w + d)
    return lambda x: SQ2 * (s + sd) / (mp.exp(s * x) + mp.exp(-sd * x))


def integral(f):
    return mp.quad(f, [-mp.inf, -5, 0, 5, mp.inf])


def seminorm_sq(g, k):
    return integral(lambda x: abs(mp.diff(g, x, k)) ** 2)


def nonlocal_invariants(g, sign=1):
    """Q and E from the definitions, with d/dx[conj(g)(-x)] differentiated directly."""
    reflected = lambda y: mp.conj(g(-y))
    q = integral(lambda x: g(x) * reflected(x)) / 2
    kinetic = integral(lambda x: mp.diff(g, x) * mp.diff(reflected, x)) / 2
    quartic = integral(lambda x: g(x) ** 2 * reflected(x) ** 2) / 4
    return q, kinetic - sign * quartic


def f(v):
    return float(mp.re(v))


out = {"seminorm_sq": {}, "invariants": {}, "h1_distance": {}, "point_values": {}, "sup_dense": {}}
for alpha in ("0.25", "0.5", "0.75", "1"):
    u0 = two_param(alpha, mp.mpf(alpha) / 2)
    g = lambda x, u0=u0: mp.re(u0(0, x))
    out["seminorm_sq"][alpha] = {str(k): f(seminorm_sq(g, k)) for k in range(4)}

q, e = nonlocal_invariants(lambda x: two_param("0.5", "0.25")(0, x))
out["invariants"]["one_param_0.5"] = {"Q": f(q), "E": f(e)}
q, e = nonlocal_invariants(soliton(1))
out["invariants"]["soliton_1"] = {"Q": f(q), "E": f(e)}
q, e = nonlocal_invariants(lambda x: two_param(1, "0.5")(0, x))
out["invariants"]["two_param_1_0.5"] = {"Q": f(q), "E": f(e)}
# a non-even, non-real datum (two_param at t = 0.3)
gen = lambda x: two_param(1, "0.5")(mp.mpf("0.3"), x)
q, e = nonlocal_invariants(gen)
out["invariants"]["two_param_1_0.5_t0.3"] = {"Q": f(q), "E": f(e), "Q_im": float(mp.im(q)), "E_im": float(mp.im(e))}

phi = soliton(1)
for d in ("0.5", "0.25", "0.125", "0.0625", "0.03125"):
    q = perturbed(1, mp.mpf(d))
    diff = lambda x, q=q: phi(x) - q(x)
    out["h1_distance"][d] = float(mp.sqrt(seminorm_sq(diff, 0) + seminorm_sq(diff, 1)))

out["point_values"]["perturbed_1_0.5_at_0"] = float(perturbed(1, mp.mpf("0.5"))(0))
u = two_param(1, "0.5")
pts = [("0.1", "-2.5"), ("0.4", "0.3"), ("0.9", "1.7"), ("0.7", "-0.05")]
out["point_values"]["two_param_1_0.5"] = [
    {"t": float(t), "x": float(x), "re": float(mp.re(u(mp.mpf(t), mp.mpf(x)))), "im": float(mp.im(u(mp.mpf(t), mp.mpf(x))))}
    for t, x in pts
]
u05 = two_param("0.5", "0.25")
x_star = mp.findroot(lambda x: mp.diff(lambda y: mp.re(u05(0, y)), x), -0.5)
out["sup_dense"]["one_param_0.5_t0"] = {"x": float(x_star), "value": float(mp.re(u05(0, x_star)))}

path = Path(__file__).with_name("values.json")
path.write_text(json.dumps(out, indent=2) + "\n")
print(path.read_text())
