"""Smoke test for the Python bindings.

Build the extension first, for example

    cargo build -p bmoext-py --release --features extension-module
    cp target/release/libbmoext_py.so python/bmoext_py.so

or install it with `maturin develop -m crates/py/Cargo.toml`.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import bmoext_py as bx  # noqa: E402


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    if not ok:
        raise SystemExit(1)


def main():
    circle = bx.Manifold.circle(2 * math.pi)
    grid = bx.Grid(circle, 128)
    xs = [p[0] for p in grid.points]
    h = grid.spacing
    levels = [h * 1.5**k for k in range(12)]

    u = [math.cos(2 * x) for x in xs]
    for sigma in (0.3, 0.5, 0.75):
        ext = bx.Extension(sigma, grid, levels)
        err = 0.0
        for s in ext.extend(u):
            prof = bx.bessel_profile(sigma, 2 * s.t)
            err = max(err, max(abs(v - prof * a) for v, a in zip(s.values, u)))
        check(f"eigenfunction sigma={sigma}", err < 1e-8, f"{err:.2e}")

    ext = bx.Extension(0.5, grid, levels)
    e = ext.square_energy(u)
    ratio = (e["e_t"] + e["e_x"]) / e["norm_sq"]
    check("square energy at sigma 1/2", abs(ratio - 0.5) < 1e-4, f"{ratio:.12f}")

    phi = [math.exp(math.cos(x)) for x in xs]
    mean = grid.integrate(phi) / (2 * math.pi)
    phi = [p - mean for p in phi]
    lhs, rhs, gap = ext.pairing(u, phi)
    check("pairing identity", gap < 1e-4, f"{gap:.2e}")

    b = bx.bmo(grid, u, math.pi)
    b3 = bx.bmo(grid, [3 * v + 7 for v in u], math.pi)
    check("bmo homogeneity", abs(b3 - 3 * b) < 1e-12, f"{b:.6f}")
    c = ext.carleson(u, math.pi, stride=4)
    check("carleson finite", math.isfinite(c) and c > 0, f"{c:.6f}")

    heat = bx.HeatKernel(bx.Manifold.euclid_line(10.0))
    c1 = heat.fit_gaussian_bound("heat1", 0.25)
    check("line Gaussian constant", abs(c1 - 1 / math.sqrt(4 * math.pi)) < 1e-10, f"{c1:.15f}")

    torus = bx.Manifold.torus2(2 * math.pi, 2 * math.pi)
    tg = bx.Grid(torus, 32)
    f1 = [math.sin(p[0]) for p in tg.points]
    f2 = [math.sin(p[1]) for p in tg.points]
    phi = [math.cos(p[0]) * math.cos(p[1]) for p in tg.points]
    lhs, energy = bx.jacobian(tg, f1, f2, phi)
    check("jacobian pi^2", abs(lhs - math.pi**2) < 1e-6, f"{lhs:.12f}")

    try:
        bx.Extension(1.5, grid, levels)
    except ValueError as exc:
        check("sigma outside (0,1) rejected", "sigma" in str(exc))
    else:
        check("sigma outside (0,1) rejected", False)
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
