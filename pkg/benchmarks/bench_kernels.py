"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Covers the four hot paths (GJK/EPA narrowphase, contact solver, body
integration, cable projection) plus a full engine tick loop on the bundled
laser-cutter scenario. Both backends compute identical results; the table
reports wall time and speedup.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

import itx._kernels.fallback as fallback

try:
    import itx._kernels._native as native
except ImportError:
    native = None


def time_fn(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_gjk(impl, pairs):
    def run():
        hits = 0
        for va, pa, vb, pb in pairs:
            _, _, _, hit = impl.gjk_closest(va, pa, vb, pb)
            if hit:
                impl.epa_penetration(va, pa, vb, pb)
                hits += 1
        return hits

    return run


def make_gjk_pairs(n=400, seed=5):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        va = np.ascontiguousarray(rng.uniform(-0.3, 0.3, (int(rng.integers(4, 16)), 3)))
        vb = np.ascontiguousarray(rng.uniform(-0.3, 0.3, (int(rng.integers(4, 16)), 3)))
        qa = rng.normal(size=4)
        qa /= np.linalg.norm(qa)
        qb = rng.normal(size=4)
        qb /= np.linalg.norm(qb)
        pa = np.ascontiguousarray(np.concatenate([rng.uniform(-0.4, 0.4, 3), qa]))
        pb = np.ascontiguousarray(np.concatenate([rng.uniform(-0.4, 0.4, 3), qb]))
        pairs.append((va, pa, vb, pb))
    return pairs


def make_solver_case(n_bodies=24, n_contacts=48, seed=9):
    rng = np.random.default_rng(seed)
    inv_mass = rng.uniform(0.2, 2.0, n_bodies)
    inv_inertia = rng.uniform(-0.5, 0.5, (n_bodies, 3, 3))
    pos = rng.uniform(-1, 1, (n_bodies, 3))
    vel = rng.uniform(-2, 2, (n_bodies, 3))
    omg = rng.uniform(-2, 2, (n_bodies, 3))
    ia = rng.integers(0, n_bodies, n_contacts).astype(np.int32)
    ib = ((ia + 1) % n_bodies).astype(np.int32)
    pt = rng.uniform(-1, 1, (n_contacts, 3))
    nr = rng.normal(size=(n_contacts, 3))
    nr /= np.linalg.norm(nr, axis=1)[:, None]
    dep = rng.uniform(0, 0.05, n_contacts)
    mu = rng.uniform(0, 1, n_contacts)
    return [np.ascontiguousarray(x) for x in (inv_mass, inv_inertia, pos, vel, omg, ia, ib, pt, nr, dep, mu)]


def bench_solver(impl, case):
    def run():
        work = [x.copy() for x in case]
        for _ in range(50):
            impl.solve_contacts(*work, 8, 1 / 120, 0.2, 1e-3, 1)

    return run


def bench_integrate(impl, seed=3):
    rng = np.random.default_rng(seed)
    n = 64
    pos = np.ascontiguousarray(rng.uniform(-1, 1, (n, 3)))
    quat = rng.normal(size=(n, 4))
    quat /= np.linalg.norm(quat, axis=1)[:, None]
    quat = np.ascontiguousarray(quat)
    vel = np.ascontiguousarray(rng.uniform(-1, 1, (n, 3)))
    omg = np.ascontiguousarray(rng.uniform(-4, 4, (n, 3)))
    dyn = np.ones(n, dtype=np.uint8)
    g = np.array([0.0, 0.0, -9.81])

    def run():
        for _ in range(2000):
            impl.integrate_bodies(pos, quat, vel, omg, dyn, g, 1 / 120)

    return run


def bench_cable(impl, seed=7):
    rng = np.random.default_rng(seed)
    n = 40
    pos = np.ascontiguousarray(np.cumsum(rng.uniform(-0.05, 0.05, (n, 3)), axis=0))
    vel = np.zeros((n, 3))
    inv_mass = np.full(n, 20.0)
    pinned = np.zeros(n, dtype=np.uint8)
    pinned[0] = pinned[-1] = 1
    pin_pos = pos.copy()
    g = np.array([0.0, 0.0, -9.81])

    def run():
        p = pos.copy()
        v = vel.copy()
        for _ in range(600):
            impl.cable_tick(p, v, inv_mass, pinned, pin_pos, 0.05, 0.0, 0.99, g, 1 / 120, 20)

    return run


def bench_world(backend_impl):
    """Full engine ticks with the chosen kernels monkey-patched in."""
    import itx._kernels as K
    import itx.cable as cab
    import itx.physics.narrowphase as nph
    import itx.physics.world as wld
    from itx.lang import parse
    from itx.session import Session

    here = os.path.dirname(__file__)
    scenario = parse(
        open(os.path.join(here, "..", "scenarios", "laser_cutter.itx"), encoding="utf-8").read()
    ).scenario

    saved = {}

    def patch(mod, name, fn):
        saved[(mod, name)] = getattr(mod, name)
        setattr(mod, name, fn)

    def run():
        patch(nph, "gjk_closest", backend_impl.gjk_closest)
        patch(nph, "epa_penetration", backend_impl.epa_penetration)
        patch(wld, "integrate_bodies", backend_impl.integrate_bodies)
        patch(wld, "solve_contacts", backend_impl.solve_contacts)
        patch(cab, "cable_tick", backend_impl.cable_tick)
        try:
            session = Session(scenario, "standard")
            for _ in range(600):
                session.tick([])
        finally:
            for (mod, name), fn in saved.items():
                setattr(mod, name, fn)

    return run


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if native is None:
        print("native extension not built; run `pip install -e .` first", file=sys.stderr)

    benches = [
        ("gjk/epa 400 pairs", lambda impl: bench_gjk(impl, make_gjk_pairs())),
        ("solver 48c x 50 it", lambda impl: bench_solver(impl, make_solver_case())),
        ("integrate 64b x 2k", lambda impl: bench_integrate(impl)),
        ("cable 40n x 600 t", lambda impl: bench_cable(impl)),
        ("engine 600 ticks", lambda impl: bench_world(impl)),
    ]

    print(f"{'benchmark':22s} {'python':>10s} {'native':>10s} {'speedup':>8s}")
    for name, make in benches:
        t_py = time_fn(make(fallback), args.repeat)
        if native is not None:
            t_nt = time_fn(make(native), args.repeat)
            print(f"{name:22s} {t_py * 1e3:9.1f}ms {t_nt * 1e3:9.1f}ms {t_py / t_nt:7.1f}x")
        else:
            print(f"{name:22s} {t_py * 1e3:9.1f}ms {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
