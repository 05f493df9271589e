"""Point cloud completion with per-sample test-time adaptation.

Thin Python surface over the C++ core: completion metrics, farthest-point
sampling, the synthetic shape corpus, and checkpoint-backed inference with
optional per-sample adaptation.
"""

from ._core import (
    Completer,
    chamfer_l1,
    chamfer_l2,
    compute_weights,
    derive_seed,
    farthest_point_indices,
    fidelity,
    fscore,
    generate_shape,
    make_training_pair,
    read_cloud,
    write_cloud,
    __version__,
)

__all__ = [
    "Completer",
    "chamfer_l1",
    "chamfer_l2",
    "compute_weights",
    "derive_seed",
    "farthest_point_indices",
    "fidelity",
    "fscore",
    "generate_shape",
    "make_training_pair",
    "read_cloud",
    "write_cloud",
    "__version__",
]
