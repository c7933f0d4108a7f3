"""Brute-force reference engines used to validate the transfer-matrix code."""
from .patch import LatticePatch, DefectPath, enumerate_Z, transfer_Z, verify_topological_move
from .spin import SpinChain, spin_chain_reference, spin_rep_apply_D, spin_defect_matrix, loop_to_spin
from .states import brute_force_basis

__all__ = [
    "LatticePatch", "DefectPath", "enumerate_Z", "transfer_Z", "verify_topological_move",
    "SpinChain", "spin_chain_reference", "spin_rep_apply_D", "spin_defect_matrix",
    "loop_to_spin", "brute_force_basis",
]
