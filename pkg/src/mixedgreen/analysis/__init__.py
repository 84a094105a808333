"""Numerical verification of function-space estimates and identities."""

from .bmo import Atom, AtomSpec, bmo_norm, random_atom_specs
from .fits import fit_decay_exponent, fit_log_singularity, log_bound_ratio, path_samples
from .identities import (kernel_norm_ratios, neumann_duality, verify_atomic_pairing, verify_green_identity,
                         verify_kernel_norms, verify_representation, verify_symmetry)
from .inequalities import KINDS, caccioppoli_ratio, verify_inequality
from .meyers import meyers_exponent

__all__ = [
    "Atom", "AtomSpec", "KINDS", "bmo_norm", "caccioppoli_ratio", "fit_decay_exponent", "fit_log_singularity",
    "kernel_norm_ratios", "log_bound_ratio", "meyers_exponent", "neumann_duality", "path_samples",
    "random_atom_specs", "verify_atomic_pairing", "verify_green_identity", "verify_inequality",
    "verify_kernel_norms", "verify_representation", "verify_symmetry",
]
