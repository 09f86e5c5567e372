"""Smoke test for the monogamy_py extension module.

Build and expose the module, then run this script:

    cargo build --release -p monogamy-py --features extension-module
    cp target/release/libmonogamy_py.so python/monogamy_py.so
    python3 python/smoke_test.py
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import monogamy_py as m


def spin(n):
    x, y, z = n
    plus = [[(1 + z) / 2, complex(x, -y) / 2], [complex(x, y) / 2, (1 - z) / 2]]
    minus = [[(1 - z) / 2, complex(-x, y) / 2], [complex(-x, -y) / 2, (1 + z) / 2]]
    return [plus, minus]


def main():
    phi = m.max_entangled(2)
    assert phi.dims == [2, 2]
    assert abs(phi.negativity() - 0.5) < 1e-12
    assert abs(m.chsh_max_2qubit(phi) - 2 * math.sqrt(2)) < 1e-8

    r = m.check_extendible(phi, 2)
    assert r.status == "Infeasible" and r.certificate is not None, r

    ab = m.bdsw_tripartite().partial_trace([2])
    assert abs(ab.negativity() - 0.125) < 1e-8
    r = m.check_extendible(ab, 2, "perm")
    assert r.status == "Feasible" and r.margin > 1e-7, r
    assert m.verify_extension(r.extension, ab, 2, "perm")

    h = m.hierarchy(m.werner(0.2), 3)
    assert [x.status for x in h] == ["Feasible", "Feasible"]

    alice = [spin((0, 0, 1)), spin((1, 0, 0))]
    bob = [spin((0.6, 0, 0.8)), spin((-0.8, 0, 0.6))]
    quantum = m.joint_table(ab, alice, bob)
    local = m.lhv_table(m.bdsw_tripartite(), alice, bob)
    diff = max(
        abs(q - l)
        for qx, lx in zip(quantum, local)
        for qy, ly in zip(qx, lx)
        for qa, la in zip(qy, ly)
        for q, l in zip(qa, la)
    )
    assert diff < 1e-8, diff

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "w.json")
        w = m.werner(0.4)
        m.save_state(path, w, "werner")
        back = m.load_state(path)
        assert back.matrix() == w.matrix()
        assert m.DensityMatrix.from_json(w.to_json()).dims == [2, 2]

    try:
        m.DensityMatrix([2], [[0.45, 0], [0, 0.45]])
    except ValueError as e:
        assert "trace" in str(e)
    else:
        raise AssertionError("trace violation accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
