"""
Compressing a dense layer with tensor trains
=============================================

A 256 x 256 weight split into eight 2 x 2 mode pairs needs 65,536 numbers
as a dense matrix but only 112 as a rank-2 tensor train.
"""

import numpy as np

from gtn.tt import (
    TensorizationPlan,
    compression,
    dense_param_count,
    random_tt,
    tt_apply,
    tt_from_matrix,
    tt_param_count_for,
    tt_reconstruct,
)

rng = np.random.default_rng(1)

plan = TensorizationPlan.from_factors((2,) * 8, (2,) * 8)
ranks = [1] + [2] * 7 + [1]
print("dense:", dense_param_count(plan))
print("TT:   ", tt_param_count_for(plan, ranks))
print(f"saved: {100 * compression(plan, ranks):.2f}%")

# a matrix that really has TT-rank 2 is recovered exactly by TT-SVD
W = tt_reconstruct(random_tt((2,) * 8, (2,) * 8, ranks, rng))
op = tt_from_matrix(W, plan, max_ranks=2)
print("refit error:", op.fit_error)

# applying the cores directly never forms the 256 x 256 matrix
x = rng.standard_normal(256)
print("apply gap:", np.max(np.abs(tt_apply(op, x) - W @ x)))

# a random matrix is not low rank: the error shrinks as the cap grows
R = rng.standard_normal((16, 16))
small = TensorizationPlan.from_factors((2, 2, 2, 2), (2, 2, 2, 2))
for cap in (1, 2, 4, 8, 16):
    print(f"cap {cap:2d}: error {tt_from_matrix(R, small, max_ranks=cap).fit_error:.3e}")
