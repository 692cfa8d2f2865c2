"""Write the a = 1 phase diagram as SVG and print a few classified points."""

import sys

from bipcp import harness, phase

out = sys.argv[1] if len(sys.argv) > 1 else "phase_a1.svg"
spec = harness.GridSpec((0.01, 0.99), (0.01, 0.99), (1.0, 1.0), (120, 120, 1), centers=True)
harness.emit_phase_diagram(spec, "svg", out)
print(f"wrote {out}")

for g1, g2, a in [(0.8, 0.8, 1.0), (0.9, 0.3, 0.5), (0.4, 0.9, 2.0), (0.6, 0.45, 1.0)]:
    c = phase.classify(g1, g2, a)
    print(f"({g1}, {g2}, {a}): region {c.region:3s} A* = {c.a_star_value:.4f} via {c.dominant_strategy}")
