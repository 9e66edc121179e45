"""Smoke test for the compiled `cdops` extension module.

Build and run from the repository root:

    cargo build --release -p cdops-py --features extension-module
    cp target/release/libcdops_py.so python/cdops.so
    python3 python/smoke_test.py
"""

import json
import sys

import cdops


def main() -> int:
    psi = cdops.Symbol.polynomial([0, 0, 1])
    phi = cdops.Symbol.linear_fractional(0.5, 0, 0, 1)

    rows = cdops.operator_matrix(psi, phi, 1, truncation=16)
    assert len(rows) == 17
    assert rows[2][1] == 1

    a = cdops.analyze(psi, phi, 1, truncation=64)
    assert a.posinormality == "numerically_posinormal_consistent", a
    oracle = 2 * 62 / 63
    assert abs(a.lambda_estimate - oracle) < 1e-6 * oracle, a.lambda_estimate
    assert json.loads(a.json)["posinormality"]["verdict"] == a.posinormality

    scenario = {
        "name": "smoke",
        "psi": {"kind": "polynomial", "coeffs": [[0, 0], [2, 0]]},
        "phi": {"kind": "linear_fractional", "a": [1, 0], "b": [2, 0], "c": [0, 0], "d": [5, 0]},
        "n": 1,
        "truncation": 64,
        "expected": {"posinormality": "certified_not_posinormal"},
    }
    report, met = cdops.run_scenario(json.dumps(scenario))
    assert met, report
    assert "not_applicable" in json.loads(report)["mu_recovery"]

    table, passed = cdops.reproduce("R5")
    assert passed and table.splitlines()[1].startswith("R5"), table

    try:
        cdops.run_scenario("{}")
    except ValueError as e:
        assert "missing field" in str(e), e
    else:
        raise AssertionError("empty scenario accepted")

    print(a)
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
