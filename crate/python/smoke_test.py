"""Smoke test for the `morrey` extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
then run:
    python3 python/smoke_test.py
"""

import json
import math
import sys

import morrey


def check(cond, msg):
    if not cond:
        print(f"FAIL: {msg}")
        sys.exit(1)
    print(f"ok   {msg}")


def main():
    check(abs(morrey.ball_lambda(2, 3.0, 1.0) - math.pi / 2) < 1e-12, "ball constant p=3 is pi/2")
    check(abs(morrey.whole_space_constant(2, 4.0) - 27 / (16 * math.pi**2)) < 1e-12, "C(2,4) = 27/(16 pi^2)")

    spec = json.loads(morrey.domain_json("bowtie:0.2"))
    check(spec["kind"] == "bowtie", "builtin domains export as JSON")

    try:
        morrey.ball_lambda(2, 1.5, 1.0)
    except ValueError:
        check(True, "p <= n raises ValueError")
    else:
        check(False, "p <= n raises ValueError")

    lam, verts, tris, vals = morrey.solve_pole("unit_disk", 3.0, 0.1, (0.0, 0.0))
    check(len(verts) == len(vals) and len(tris) > 0, "pole potential mesh is consistent")
    check(abs(max(vals) - 1.0) < 1e-12 and min(vals) >= -1e-12, "potential lies in [0, 1]")

    ext = morrey.find_extremal("unit_disk", 3.0, 0.05, sweep_spacing=0.25)
    check(abs(ext.lambda_p / (math.pi / 2) - 1) < 0.05, f"disk lambda_p within 5%: {ext.lambda_p:.6f}")
    check(math.hypot(*ext.x0) <= 0.05, f"maximizer at the center: {ext.x0}")
    summary = json.loads(ext.summary_json())
    check(summary["lambda_p"] == ext.lambda_p, "summary JSON agrees")
    print(repr(ext))


if __name__ == "__main__":
    main()
