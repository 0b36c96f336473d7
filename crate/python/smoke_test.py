#!/usr/bin/env python3
"""Smoke test for the proxmpc_py extension module.

Builds the cdylib if needed, loads it from the cargo target directory, and
exercises the prox primitives, the complementarity function, and a short
closed-loop experiment.

Usage: python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def locate_or_build() -> Path:
    candidates = [
        REPO / "target" / "release" / "libproxmpc_py.so",
        REPO / "target" / "debug" / "libproxmpc_py.so",
    ]
    for path in candidates:
        if path.exists():
            return path
    print("extension not built yet; running cargo build -p proxmpc-py --release")
    subprocess.run(
        ["cargo", "build", "-p", "proxmpc-py", "--release"], cwd=REPO, check=True
    )
    return candidates[0]


def load_module():
    lib = locate_or_build()
    staging = Path(tempfile.mkdtemp(prefix="proxmpc-py-"))
    shutil.copy2(lib, staging / "proxmpc_py.so")
    sys.path.insert(0, str(staging))
    import proxmpc_py

    return proxmpc_py


def approx(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main() -> None:
    m = load_module()

    # soft-thresholding
    assert m.soft_threshold([2.0, -0.5, 0.0], 1.0) == [1.0, 0.0, 0.0]
    assert m.soft_threshold([-3.0], 3.0) == [0.0]

    # Fischer-Burmeister
    assert approx(m.fischer_burmeister(3.0, 4.0), 2.0)
    assert approx(m.fischer_burmeister(2.0, 0.0), 0.0)
    da, db = m.fischer_burmeister_partials(3.0, 4.0)
    assert approx(da, 0.4) and approx(db, 0.2)

    # regularizer: prox, membership, generalized derivative
    reg = m.Regularizer.scaled_l1(4.0)
    assert reg.prox([1.0, -3.0], 0.5) == [0.0, -1.0]
    assert reg.subgradient_contains([0.0, -2.0, 3.0], [0.5, -4.0, 4.0])
    assert not reg.subgradient_contains([0.0, -2.0, 3.0], [0.5, 4.0, 4.0])
    assert reg.prox_jacobian_diag([1.0, -3.0], 0.5) == [0.0, 1.0]
    zero = m.Regularizer.zero()
    assert zero.prox([0.7, -0.2], 1.0) == [0.7, -0.2]

    # constraint-qualification diagnostic on the bundled plant
    full_rank, active = m.benchmark_licq([1.0, 0.0])
    assert full_rank and active == [0]
    full_rank, active = m.benchmark_licq([0.2, -0.3])
    assert full_rank and active == []

    # a short closed-loop run
    cfg = m.Config(sim_steps=40)
    trace = m.run_experiment(cfg)
    assert len(trace) == 40
    assert len(trace.times) == 40 and approx(trace.times[1], 0.05)
    assert all(len(x) == 5 for x in trace.states)
    assert all(abs(u) <= 1.0 + 1e-3 for row in trace.inputs for u in row)
    assert all(math.isfinite(r) for r in trace.residual_inf)
    assert len(trace.final_state) == 5

    # determinism
    again = m.run_experiment(m.Config(sim_steps=40))
    assert trace.states == again.states and trace.inputs == again.inputs

    # CSV layout
    header = trace.to_csv().splitlines()[0]
    assert header == "step,t,x1,x2,x3,x4,x5,u1,u2,residual_inf,residual_l1,solver_iters,wall_us"

    # two-method comparison on a short horizon
    prop = m.Config(sim_steps=20)
    conv = m.Config(sim_steps=20, method="conventional", epsilon=1e-2)
    ratios, median = m.compare_methods(prop, conv)
    assert len(ratios) == 20 and math.isfinite(median)

    # invalid configurations are rejected
    try:
        m.Config(sim_steps=0)
    except ValueError:
        pass
    else:
        raise AssertionError("sim_steps = 0 must be rejected")

    print("smoke test passed")


if __name__ == "__main__":
    main()
