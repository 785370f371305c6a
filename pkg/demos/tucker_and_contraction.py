"""
Mode products, Tucker products and contractions
================================================

A tour of the tensor-core layer: everything is an ndarray, modes are
counted from 1, and vectorization runs with the last mode fastest.
"""

import numpy as np

from gtn.tensor import contract, kronecker, matricize, mode_n_product, tucker_product, vectorize

rng = np.random.default_rng(0)

# an order-3 tensor and its three matricizations
A = rng.standard_normal((2, 3, 4))
for n in (1, 2, 3):
    print(f"mode-{n} unfolding:", matricize(A, n).shape)

# a mode-2 product resizes only the second mode
B = rng.standard_normal((5, 3))
print("A x_2 B:", mode_n_product(A, 2, B).shape)

# a Tucker product applies one matrix per mode; vectorized, it is a
# Kronecker product acting on vec(A)
factors = [rng.standard_normal((k, s)) for k, s in zip((3, 2, 2), A.shape)]
C = tucker_product(A, list(enumerate(factors, start=1)))
K = kronecker(kronecker(factors[0], factors[1]), factors[2])
print("Tucker/Kronecker gap:", np.max(np.abs(vectorize(C) - K @ vectorize(A))))

# contracting mode 3 of A with mode 1 of a matrix drops both modes
D = rng.standard_normal((4, 6))
print("contract(A, 3, D, 1):", contract(A, 3, D, 1).shape)
