"""
Two ways to the same distance
=============================

Dynamic time warping and the geometric edit distance can be computed by the
plain quadratic dynamic program or by the boxed algorithm, which cuts the
grid into small boxes, precomputes every in-box shortest path and then only
moves values from box boundary to box boundary. This script runs both on the
same random input and shows that the answers agree, including the optimal
coupling and matching they return.
"""

import random

from boxdtw import (
    Metric,
    WorkStats,
    coupling_cost,
    dtw_quadratic,
    dtw_subquadratic,
    ged_quadratic,
    ged_subquadratic,
    matching_cost,
)

rng = random.Random(7)
A = [rng.randint(-50, 50) for _ in range(40)]
B = [rng.randint(-50, 50) for _ in range(33)]

###############################################################################
# Dynamic time warping
# --------------------
#
# The quadratic program fills all n * m cells. The boxed version takes a box
# size ``g``; every value from 2 up to 13 gives the same distance.

d_quad, coupling_quad = dtw_quadratic(A, B)
print(f"quadratic DTW       : {d_quad}")
for g in (2, 3, 5, 8):
    d_box, coupling = dtw_subquadratic(A, B, g)
    print(f"boxed DTW, g = {g:2d}  : {d_box}   (coupling re-costs to {coupling_cost(A, B, coupling)})")

###############################################################################
# Geometric edit distance
# -----------------------
#
# Unmatched points pay ``rho`` each. With ``rho = 0`` nothing is worth
# matching, so the distance is zero.

for rho in (0, 1, 17):
    d_quad, _ = ged_quadratic(A, B, rho)
    d_box, matching = ged_subquadratic(A, B, rho, 4)
    print(
        f"rho = {rho:2d}: quadratic {d_quad}, boxed {d_box}, "
        f"{len(matching)} matched pairs, re-cost {matching_cost(A, B, matching, rho)}"
    )

###############################################################################
# Points in the plane
# -------------------
#
# Vector inputs work with the L1 and L-infinity distances.

P = [(rng.randint(0, 9), rng.randint(0, 9)) for _ in range(20)]
Q = [(rng.randint(0, 9), rng.randint(0, 9)) for _ in range(25)]
for kind in ("l1", "linf"):
    metric = Metric.parse(kind, 2)
    print(kind, dtw_quadratic(P, Q, metric)[0], dtw_subquadratic(P, Q, 3, metric=metric)[0])

###############################################################################
# Work counters
# -------------
#
# Both algorithms report deterministic work counts instead of wall time.

quad, box = WorkStats(), WorkStats()
dtw_quadratic(A, B, stats=quad)
dtw_subquadratic(A, B, 3, stats=box)
print("quadratic:", quad.work_units())
print("boxed    :", box.work_units())
