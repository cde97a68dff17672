"""Global numerical tolerances.

All tolerances are relative to the largest eigenvalue (or to 1 for
normalisation checks) unless stated otherwise.  They can be adjusted in
place, e.g. ``eatkit.config.tolerances.herm = 1e-8``, and every module reads
them at call time.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class Tolerances:
    herm: float = 1e-9        # Hermiticity check, relative
    psd: float = 1e-9         # allowed negative eigenvalue, relative
    eig: float = 1e-10        # eigendecomposition reconstruction, relative
    clip: float = 1e-12       # eigenvalues below clip * lambda_max count as 0
    norm: float = 1e-9        # trace-normalisation checks
    markov: float = 1e-8      # conditional mutual information threshold
    chain: float = 1e-7       # chain-rule residual
    fixed_point: float = 1e-8 # optimiser convergence
    max_iter: int = 500       # fixed-point iteration cap


tolerances = Tolerances()
