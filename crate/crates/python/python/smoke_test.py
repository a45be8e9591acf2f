"""Smoke test for the continuum_grasp extension module.

Build and install first, e.g. ``maturin build --release`` followed by
``pip install`` of the wheel, then run ``python python/smoke_test.py``.
"""

import math
import pathlib
import sys
import tempfile

import continuum_grasp as cg


def check(label, ok):
    print(f"{'ok  ' if ok else 'FAIL'} {label}")
    return ok


def main():
    results = []

    circle = cg.Curve.circle(1.0, 400)
    results.append(check("circle length", abs(circle.total_length - 2 * math.pi) < 1e-12))
    results.append(check("counterclockwise", circle.signed_area() > 0))
    samples = circle.samples()
    results.append(check("closed loop of N + 1 samples", len(samples) == 401))

    w = circle.gramian(kind="force")
    results.append(check("gramian is symmetric", all(
        abs(w[i][j] - w[j][i]) < 1e-12 for i in range(3) for j in range(3))))

    sol = cg.solve(circle, (0.0, 1.0, 0.0), method="forward_backward", eta=1e-6)
    positive = sum(f > 0 for f in sol.normal) / len(sol.normal)
    results.append(check(f"continuum contact ({positive:.0%} of the segment)",
                         sol.converged and positive >= 0.9))
    newton = cg.solve(circle, (0.0, 1.0, 0.0))
    results.append(check("newton agrees with the sweep",
                         abs(newton.cost - sol.cost) <= 1e-3 * newton.cost))

    q = cg.quality(circle)
    results.append(check(f"circle quality {q.q:.4f}", abs(q.q - 0.0736) <= 0.05 * 0.0736))

    sweep = cg.length_sweep(circle, lengths=[0.1 * circle.total_length, circle.total_length])
    results.append(check("longer grasp is better", sweep[1][1] > sweep[0][1]))

    ellipse = cg.Curve.ellipse(2.0, 1.0)
    p = cg.place(ellipse, grid_points=8)
    results.append(check(f"ellipse placement at {p.best_start / ellipse.total_length:.3f} L0",
                         p.best_index == 2))

    try:
        cg.Curve.circle(-1.0)
        results.append(check("negative radius rejected", False))
    except ValueError:
        results.append(check("negative radius rejected", True))

    with tempfile.TemporaryDirectory() as tmp:
        cfg = pathlib.Path(tmp) / "s.cfg"
        cfg.write_text('object.shape = "circle"\ntask.kind = "quality"\n')
        paths = cg.run_scenario(str(cfg), out=str(pathlib.Path(tmp) / "out"))
        results.append(check("scenario run writes a summary",
                             any(pathlib.Path(p).name == "summary.txt" for p in paths)))

    print(f"continuum_grasp {cg.__version__}: {sum(results)}/{len(results)} checks passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
