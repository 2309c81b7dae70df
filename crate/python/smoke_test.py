"""Smoke test for the compiled extension.

Build with
    cargo build --release -p necklace-py --features extension-module
    cp target/release/libnecklace_py.so python/necklace_py.so
then run `python3 python/smoke_test.py`.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import necklace_py as nk


def main():
    g = nk.GraphParams(math.pi / 2)
    assert abs(g.period - 1.5 * math.pi) < 1e-15
    assert abs(g.trace(0.0) - 2.0) < 1e-14

    bands = g.bands(6.0, 4000)
    assert bands[0]["omega_lo"] == 0.0
    for m in range(1, 6):
        _, loc, _ = g.flat_band(m)
        assert loc == ("edge" if m % 2 == 0 else "interior"), (m, loc)

    try:
        nk.GraphParams(0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("L = 0 accepted")

    eps = 0.04
    pm = nk.PeriodMap(eps, g)
    lp, lm, _ = pm.unstable_direction()
    assert abs(lp * lm - 1.0) < 1e-6
    assert abs(lp + lm - g.trace_hyperbolic(eps)) < 1e-6

    a, b = pm.step(1e-9, 0.0)
    a0, b0 = pm.inverse_step(a, b)
    assert abs(a0 - 1e-9) < 1e-18 and abs(b0) < 1e-18

    orbit = pm.homoclinic("link")
    assert orbit.diagnostics()["all_positive"]
    state = orbit.assemble(64)
    assert state.max_kirchhoff_residual < 1e-8
    assert state.min_value() > 0.0

    shot = nk.bound_state(-eps * eps, g, "link")
    assert abs(shot.phi0 - state.phi0) < 1e-6 * state.phi0
    assert abs(shot.charge - state.charge) < 1e-6 * state.charge

    big = nk.bound_state(-10.0, nk.GraphParams(math.pi), "ring")
    assert big.min_value() > 0.0 and big.max_kirchhoff_residual < 1e-8
    assert big.source == "shooting" and big.symmetry == "ring"

    fam = nk.families(0.05, g)
    assert fam["dq_rel"] < 1e-6

    print(f"ok: phi0 = {state.phi0:.12g}, Q = {state.charge:.12g}, dQ_rel(0.05) = {fam['dq_rel']:.2e}")


if __name__ == "__main__":
    main()
