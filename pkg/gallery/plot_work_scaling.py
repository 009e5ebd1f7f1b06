"""
How much work does the boxed DP do?
===================================

The boxed algorithm replaces the n * m cell updates of the quadratic program
by scans over (u, w) candidate pairs, one batch per box. Each box holds
(g - 1)^2 new cells but its scan touches on the order of g log g candidates,
so larger boxes help. This script prints both counters for a few sizes and
box widths. For the box widths supported here the candidate count stays
above the cell count.
"""

import random

from boxdtw import WorkStats, dtw_quadratic, dtw_subquadratic
from boxdtw.compactdp import evaluation_bound

rng = random.Random(3)

for n in (64, 128, 256):
    A = [rng.randint(-10**6, 10**6) for _ in range(n)]
    B = [rng.randint(-10**6, 10**6) for _ in range(n)]
    quad = WorkStats()
    dtw_quadratic(A, B, stats=quad)
    print(f"n = m = {n}: {quad.cell_updates} cell updates")
    for g in (3, 6, 10, 13):
        box = WorkStats()
        dtw_subquadratic(A, B, g, stats=box, traceback=False)
        ratio = box.candidate_evaluations / quad.cell_updates
        print(
            f"   g = {g:2d}: {box.candidate_evaluations:7d} evaluations (x{ratio:.2f}), "
            f"worst box {box.max_box_evaluations} <= {evaluation_bound(g):.0f}"
        )
