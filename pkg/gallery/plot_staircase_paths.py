"""
Staircase paths inside one box
==============================

A box is a g x g block of the grid. Values enter on its lower and left edge
(the L boundary) and leave on its upper and right edge (the R boundary). Any
monotone path from an L cell to an R cell is a staircase path. Each one fits
into a single 64-bit word: the start index followed by two bits per move.
"""

from boxdtw.staircase import (
    L_position,
    R_position,
    StaircasePath,
    admissible_pairs,
    count_paths,
    decompose,
    pack,
    shortest_paths_direct,
    unpack,
    word_bits,
)
from boxdtw.core import GridCostModel

###############################################################################
# Boundary positions
# ------------------
#
# Both boundaries have 2g - 1 cells. Index 1 is the upper left corner and
# index 2g - 1 the lower right corner, which both boundaries share.

g = 3
print("L:", [L_position(g, k) for k in range(1, 2 * g)])
print("R:", [R_position(g, k) for k in range(1, 2 * g)])

###############################################################################
# How many paths are there?
# -------------------------
#
# The count grows by a factor of about 5.6 per step in g, yet a word never
# needs more than 64 bits.

for g in range(2, 14):
    print(f"g = {g:2d}: {count_paths(g):>13,d} paths, {len(admissible_pairs(g)):3d} (u, w) pairs, "
          f"{word_bits(g)} bits per word")

###############################################################################
# Packing a path
# --------------
#
# Moves are 1 (up), 2 (right) and 3 (diagonal).

word = pack(3, 3, (3, 2, 1))
start, moves = unpack(3, word)
P = StaircasePath(3, start, moves)
print(f"word {word:#x} -> start {start}, moves {moves}")
print("cells:", P.positions, "ends at R index", P.end_index)

###############################################################################
# Shortest paths of one box
# -------------------------
#
# Preprocessing stores, for each admissible pair, the cheapest path.

A = [4, 1, 7, 3, 3, 8]
B = [2, 9, 5, 5, 0, 6]
grid = decompose(A, B, 3)
sig = shortest_paths_direct(grid, 2, 2, GridCostModel.dtw())
for (u, w), word in list(zip(admissible_pairs(3), sig.paths))[:6]:
    print(f"L({u}) -> R({w}): {StaircasePath.from_word(3, word)}")
