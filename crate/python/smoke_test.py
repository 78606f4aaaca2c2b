"""Smoke test for the pyfinsler extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/pyfinsler-*.whl
"""
import json
import math

import pyfinsler


def close(a, b, tol=1e-10):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    phi = pyfinsler.Expr("sqrt(1+s^2)")
    assert close(phi.eval(1.0, 0.0), 1.0)
    d = phi.partials(1.0, 0.0)
    assert len(d) == 15 and close(d[(0, 2)], 1.0)

    try:
        pyfinsler.Expr("r +")
    except ValueError as e:
        assert "byte 3" in str(e)
    else:
        raise AssertionError("parse error not raised")

    r = 1.0
    pt = pyfinsler.Point.canonical(2, r, 0.4, 1.0)
    sp = pyfinsler.spray(phi, pt)
    assert abs(sp["P"]) < 1e-12
    assert close(sp["Q"], 1 / (2 * (1 + r * r)))
    assert close(sp["K"], 1 / (1 + r * r) ** 2)

    m = pyfinsler.metric(pyfinsler.Expr("1+s"), pyfinsler.Point.canonical(3, 1.2, 0.3, 0.7))
    assert close(m["det_direct"], m["det_formula"])
    assert close(m["mu"], 1.0) and m["nu"] == 0.0

    surf = pyfinsler.surface(pyfinsler.Expr("1+s"), pyfinsler.Point.canonical(2, 1.0, 0.0, 1.0))
    assert close(surf["I"], 1.5) and close(surf["I_direct"], 1.5)
    assert close(surf["a"], 1.0)

    text, code = pyfinsler.run(
        "check", "sqrt(1+s^2)", dim=2, r="0.3:0.9:4", s_frac="-0.8:0.8:5", u="1:2:2"
    )
    doc = json.loads(text)
    assert code == 0, doc["checks"]
    assert sorted(doc) == ["checks", "config", "points", "verdicts", "version"]
    assert all(c["pass"] for c in doc["checks"])
    assert doc["version"] == pyfinsler.__version__

    text, _ = pyfinsler.run(
        "classify", "1/r^5*sqrt(r^2-s^2)*exp(2*s/sqrt(r^2-s^2))", r="0.5:2:5", s_frac="-0.8:0.8:5"
    )
    doc = json.loads(text)
    assert doc["verdicts"]["scalar_curvature"]["is_scalar"] is True
    assert max(abs(p["K"]) for p in doc["points"]) < 1e-8
    assert not math.isnan(doc["points"][0]["R1"])

    print("pyfinsler smoke test: ok")


if __name__ == "__main__":
    main()
