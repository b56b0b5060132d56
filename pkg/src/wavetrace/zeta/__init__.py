"""Selberg zeta function: Euler product, log series, transfer determinant, zeros."""
from .euler import ZetaEvaluator, zeta_dlog, zeta_euler, zeta_logsum
from .transfer import (TransferFamily, TransferOperator, auto_nodes, build_transfer, family_for,
                       hull_intervals)
from .zeros import ResonanceSet, find_delta, find_real_zeros, find_resonances

__all__ = ["ZetaEvaluator", "zeta_euler", "zeta_logsum", "zeta_dlog", "TransferFamily",
           "TransferOperator", "build_transfer", "family_for", "auto_nodes", "hull_intervals",
           "ResonanceSet", "find_delta", "find_real_zeros", "find_resonances"]
