"""Smoke test for the fblin_py extension.

Build first:
    cargo build --release -p fblin-py --features extension-module
then run from the repository root:
    python3 python/smoke_test.py
"""

import importlib.util
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import fblin_py

        return fblin_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libfblin_py.so", "libfblin_py.dylib", "fblin_py.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                tmp = pathlib.Path(tempfile.mkdtemp())
                target = tmp / ("fblin_py.pyd" if name.endswith(".dll") else "fblin_py.so")
                shutil.copy(lib, target)
                spec = importlib.util.spec_from_file_location("fblin_py", target)
                module = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(module)
                return module
    sys.exit("fblin_py not found; build it with --features extension-module")


def main():
    fb = load()
    g = fb.Grid(32, 32)
    assert abs(g.area() - math.pi) < 1e-12

    q = fb.solve_dirichlet(g, [1.0] * (g.n_r * g.n_theta))
    r = g.radii()
    err = max(abs(q[j * g.n_theta] - (r[j] ** 2 - 1) / 4) for j in range(g.n_r))
    print(f"elliptic error at 32x32: {err:.3e}")
    assert err < 1e-3

    d = fb.projection_defects(fb.Grid(64, 64), seed=1)
    print(f"projection defects: {d}")
    assert d["idempotence"] < 1e-8

    form = fb.normal_form_e1(fb.Grid(64, 64))
    print(f"<e1, A e1> = {form:.6f} (pi = {math.pi:.6f})")
    assert abs(form - math.pi) < 2e-3

    sim = fb.Simulation(fb.Grid(16, 16), data="random", seed=0)
    out = sim.advance(0.2, 0.01, record_every=10)
    print(f"energy {out['energy'][0]:.6f} -> {out['energy'][-1]:.6f}, max curl drift {max(out['curl_drift']):.2e}")
    assert max(out["curl_drift"]) < 1e-10
    print("smoke test passed")


if __name__ == "__main__":
    main()
