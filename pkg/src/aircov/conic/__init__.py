"""Real conic programs, the complex-to-real embedding, and the solver."""

from .backend import ConicSolution, SolveSettings, solve
from .embedding import embed_hermitian_psd, extract_hermitian
from .lemma import check_lemma1
from .program import (ConicProgram, EqConstraint, LinearObjective, PsdBlock,
                      SocBlock, VarInfo, hermitian_slot_order, pack_complex,
                      pack_hermitian, unpack_complex, unpack_hermitian)

__all__ = [
    "ConicProgram", "ConicSolution", "EqConstraint", "LinearObjective",
    "PsdBlock", "SocBlock", "SolveSettings", "VarInfo", "check_lemma1",
    "embed_hermitian_psd", "extract_hermitian", "hermitian_slot_order",
    "pack_complex", "pack_hermitian", "solve", "unpack_complex",
    "unpack_hermitian",
]
