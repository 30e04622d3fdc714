"""Quick end-to-end check of the nevlab Python bindings.

Build and install first:  pip install -e crates/py --no-build-isolation
Run:                       python3 python/smoke_test.py
"""

import math
import sys

import nevlab


def close(a, b, tol):
    return abs(a - b) <= tol


def check_lambda():
    assert close(nevlab.lambda_value(1j), 0.5, 1e-12)
    tau = 0.3 + 0.8j
    assert close(nevlab.lambda_value(tau + 2), nevlab.lambda_value(tau), 1e-10)
    a = nevlab.lambda_value(tau)
    assert any(close(v, 1 - a, 1e-12) for v in nevlab.six_values(a))
    t = 4.0
    assert 0.9 < abs(nevlab.lambda_value(1j * t)) / (16 * math.exp(-math.pi * t)) < 1.1
    try:
        nevlab.lambda_value(-1j)
    except ValueError:
        pass
    else:
        raise AssertionError("lower half-plane accepted")


def check_profiles():
    root = nevlab.Profile("exp(-sqrt(abs(x)))")
    assert root.log_integral()["verdict"] == "convergent"
    assert nevlab.Profile("exp(-abs(x))").log_integral()["verdict"] == "divergent"
    lo = root.tame_minorant()
    assert lo.is_tame()["is_tame"]
    assert all(lo.value(x) <= root.value(x) * (1 + 1e-12) for x in (0.0, 3.0, 40.0, 900.0))
    try:
        nevlab.Profile("exp(-")
    except ValueError:
        pass
    else:
        raise AssertionError("bad expression accepted")


def check_map():
    flat = nevlab.ConformalMap(nevlab.Profile("0.5"), side="below", nodes=1025)
    for z in (0.1 + 0.2j, -7 + 3j, 40 + 0.01j):
        assert abs(flat.forward(z) - (z - 0.5j)) < 1e-6
    m = nevlab.ConformalMap(nevlab.Profile("exp(-sqrt(abs(x)))").tame_minorant(), nodes=1025)
    for z in (0.3 + 0.5j, -12 + 2j, 5 + 0.01j):
        assert abs(m.inverse(m.forward(z)) - z) < 1e-6 * abs(z)
    assert close(m.diagnostics()["dilation"], 1.0, 1e-6)


def check_witness():
    f = nevlab.Witness(nevlab.Profile("exp(-abs(x))").tame_majorant(), nodes=1025)
    assert f.omission_audit()["passed"]
    for z in (0.0 + 0.0j, 3 + 0.5j, -20 + 4j):
        v = f.eval(z)
        assert abs(v) > 0 and abs(v - 1) > 0
        assert f.spherical_derivative(z) > 0
    b = f.boundary_log_integral(8)
    assert len(b["increments"]) == 8 and min(b["increments"]) > 0


def check_lattice_and_harmonic():
    c = nevlab.lemma_c_integral(0.01)
    assert c["ratio"] > 0
    s = nevlab.coprime_stats(1e4)
    assert abs(s["density"] - 6 / math.pi**2) < 0.01
    z = 0.5 + 1.0j
    exact = (math.atan2(1 - z.real, z.imag) - math.atan2(-1 - z.real, z.imag)) / math.pi
    assert close(nevlab.half_plane_harmonic_measure(-1.0, 1.0, z), exact, 1e-12)
    est = nevlab.wos_harmonic_measure(nevlab.Profile("0.0001"), -1.0, 1.0, z + 0.0001j, samples=20000, seed=42)
    assert abs(est["value"] - exact) < 4 * est["stderr"] + 1e-3


def main():
    checks = [check_lambda, check_profiles, check_map, check_witness, check_lattice_and_harmonic]
    failed = 0
    for c in checks:
        try:
            c()
            print(f"ok   {c.__name__}")
        except Exception as e:  # report every check, then fail
            failed += 1
            print(f"FAIL {c.__name__}: {e!r}")
    print(f"nevlab {nevlab.__version__}: {len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
