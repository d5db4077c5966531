"""Smoke test for the spinc_py extension.

Build and install with `pip install --no-build-isolation crates/python`,
then run `python3 python/smoke_test.py`.
"""

import json
import math
import pathlib

import jsonschema

import spinc_py


def main():
    rows = json.loads(spinc_py.list_scenarios())
    names = {r["name"] for r in rows}
    assert {"torus2-flat", "sphere2-in-r3", "cylinder-sphere-cone"} <= names

    res = json.loads(spinc_py.clifford_residuals(3, 1))
    worst = max(v for k, v in res.items() if k not in ("r", "s") and v is not None)
    assert worst <= 1e-13, res

    # flat square torus of side 2π: λ = ±|p| for integer p
    ev = spinc_py.spectrum("torus2-flat", 16, eigs=6)
    mags = sorted(abs(x) for x in ev)
    assert mags[0] < 1e-10 and mags[1] < 1e-10
    assert all(abs(m - 1.0) < 0.02 for m in mags[2:]), mags

    assert math.isclose(spinc_py.c_n(4), 2 * math.sqrt(2))

    cfg = json.dumps({"command": "verify", "check": "gauss", "seed": 7, "samples": 20})
    ok, text = spinc_py.run(cfg)
    report = json.loads(text)
    assert ok and report["summary"]["failed"] == 0
    schema = json.loads((pathlib.Path(__file__).parents[1] / "docs" / "report-schema.json").read_text())
    jsonschema.validate(report, schema)
    _, bound = spinc_py.run(json.dumps({"command": "bound", "flux": 3, "grid": 16, "eigs": 6}))
    jsonschema.validate(json.loads(bound), schema)
    _, again = spinc_py.run(cfg, with_timing=False)
    _, once = spinc_py.run(cfg, with_timing=False)
    assert again == once

    try:
        spinc_py.run(json.dumps({"command": "spectrum", "scenario": "nope"}))
    except ValueError as e:
        assert "nope" in str(e)
    else:
        raise AssertionError("unknown scenario accepted")

    print("spinc_py smoke test passed")


if __name__ == "__main__":
    main()
