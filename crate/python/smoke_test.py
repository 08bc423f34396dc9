"""Smoke test for the nonclass_py extension module.

Build the module and put it on the path first, e.g.

    cargo build -p nonclass-py --release --features extension-module
    cp target/release/libnonclass_py.so python/nonclass_py.so
    python3 python/smoke_test.py
"""

import math

import nonclass_py as nc


def paired_thermal(b, n):
    return [[b**r / (1 + b) ** (r + 1) if r == c else 0.0 for c in range(n)] for r in range(n)]


def main():
    s2, s1 = nc.stirling(5)
    assert s2[4] == [1, 15, 25, 10, 1], s2
    assert s1[3] == [-6, 11, -6, 1, 0], s1

    d = nc.JointDistribution(paired_thermal(1.0, 400))
    results = {r["id"]: r for r in nc.analyze(d, families="E,M")}
    assert abs(results["E_001"]["value"] + 2.0) < 1e-9, results["E_001"]
    assert results["E_001"]["violated"]
    assert abs(results["E_001"]["ncd"] - 1.0) < 1e-6

    tau, bracketed = nc.ncd(nc.JointDistribution(paired_thermal(0.25, 400)).factorial_moments(2), "E_001")
    assert bracketed and abs(tau - 0.5) < 1e-6, tau

    sc = nc.Scenario.default().with_sampling(frames=100_000, seed=3)
    p, f, h = sc.run()
    assert h.frames == 100_000
    ms, mi = p.means()
    assert abs(ms - 8.716) < 0.01 and abs(mi - 8.778) < 0.01, (ms, mi)

    direct = {r["id"]: r for r in nc.analyze(h.to_distribution(), families="E", ncd=False)}
    errs = dict(nc.bootstrap(h, replicas=20, seed=1, families="E"))
    assert direct["E_001"]["value"] < -5 * errs["E_001"], (direct["E_001"], errs["E_001"])

    assert len(nc.criteria()) > 100
    assert nc.selftest(tables=5) == []

    back = nc.JointHistogram.from_csv(h.to_csv())
    assert back.counts == h.counts and not math.isnan(back.to_distribution().means()[0])
    print("smoke test passed")


if __name__ == "__main__":
    main()
