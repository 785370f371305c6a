"""Graph tensor networks on plain numpy arrays.

Subpackages: :mod:`gtn.tensor` (mode products, contractions),
:mod:`gtn.tt` (tensor-train operators), :mod:`gtn.graphs` (graph shift
operators), :mod:`gtn.network` (GTN forward pass and classical special
cases), :mod:`gtn.model` / :mod:`gtn.train` (layers, gradients, Adam) and
:mod:`gtn.harness` (experiments and data).
"""

__version__ = "0.1.0"
