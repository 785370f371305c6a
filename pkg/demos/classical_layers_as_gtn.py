"""
Classical layers as graph tensor network layers
================================================

Dense, graph-convolution, convolution and attention layers are all one
Tucker-product layer with a particular choice of graph shift operator.
The recurrent layer reduces to one as well when its weight is idempotent.
"""

import numpy as np

from gtn.equivalence import random_projection, run_equivalence_suite
from gtn.graphs import gso_circulant, gso_time_decay
from gtn.network import cnn_forward, rnn_closed_form, rnn_unrolled

rng = np.random.default_rng(2)

# a convolution is a shift by a circulant operator built from the kernel
x = rng.standard_normal(8)
k = np.array([1.0, -2.0, 0.5])
S = gso_circulant(k, 8).matrix
print("circulant rows:\n", S[:3])
print("conv gap:", np.max(np.abs(S @ x - cnn_forward(x, k))))

# the time-decay operator looks only backwards in time
print(gso_time_decay(4, 0.5).matrix)

# an RNN with recurrent weight c * W1, W1 idempotent, is a GTN layer plus a skip
W1 = random_projection(3, rng)
X, Wx = rng.standard_normal((6, 2)), rng.standard_normal((3, 2))
gap = np.max(np.abs(rnn_closed_form(X, W1, Wx, 0.8) - rnn_unrolled(X, 0.8 * W1, Wx)))
print("RNN closed-form gap:", gap)

# the full randomized suite, as run by `gtn equiv`
for result in run_equivalence_suite(seed=0):
    print(result.line())
