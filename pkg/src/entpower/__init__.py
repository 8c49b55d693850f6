"""Operator entanglement and operator space entangling power of bipartite unitaries."""
from .tensor import Bipartition
from .metrics import (
    man_aa,
    man_ab,
    op_entanglement,
    op_entanglement_swapped,
    op_space_entangling_power,
    state_entangling_power,
    summary,
)
from .sampling import SeededStream, haar_state, haar_unitary

__all__ = [
    "Bipartition",
    "SeededStream",
    "haar_state",
    "haar_unitary",
    "man_aa",
    "man_ab",
    "op_entanglement",
    "op_entanglement_swapped",
    "op_space_entangling_power",
    "state_entangling_power",
    "summary",
]
