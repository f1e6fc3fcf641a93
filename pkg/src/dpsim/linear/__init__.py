"""Block-sparse linear algebra and the Newton-step linear solver."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..parallel import SERIAL
from .blockmatrix import BlockMatrix, BlockPattern, dot, load_dump, norm
from .cpr import CprConfig, CprFpf
from .decouple import SingularBlockError, apply_factors, decouple, decoupling_factors
from .gmres import KrylovResult, bicgstab, gmres, pcg
from .ilu import BlockILU0

__all__ = [
    "BlockILU0",
    "BlockMatrix",
    "BlockPattern",
    "CprConfig",
    "CprFpf",
    "KrylovResult",
    "LinearConfig",
    "SingularBlockError",
    "apply_factors",
    "bicgstab",
    "build_preconditioner",
    "decouple",
    "decoupling_factors",
    "dot",
    "gmres",
    "load_dump",
    "norm",
    "pcg",
    "solve",
]


@dataclass
class LinearConfig:
    restart: int = 30
    max_iters: int = 200
    cpr: CprConfig = field(default_factory=CprConfig)


def build_preconditioner(A: BlockMatrix, config: LinearConfig, pool=SERIAL):
    """Decoupling followed by CPR-FPF (or plain block ILU), as one callable on raw residuals."""
    dinv, data = decoupling_factors(A, pool)
    Ad = A.copy()
    Ad.data = data
    if len(A.perf_cell):
        Ad.border_col = np.einsum("mij,mj->mi", dinv[A.perf_cell], A.border_col)
    prec = CprFpf(Ad, config.cpr, pool)

    def apply(r):
        return prec.apply(apply_factors(dinv, r, A.n_cells))

    apply.cpr = prec
    return apply


def solve(A: BlockMatrix, b, rtol, config: LinearConfig | None = None, pool=SERIAL) -> KrylovResult:
    """GMRES on the original system, preconditioned through the decoupled one.

    The returned residual is ``||b - A y||`` of the system as given, so
    ``residual_norm <= rtol*||b||`` whenever ``converged`` is set.
    """
    config = config or LinearConfig()
    M = build_preconditioner(A, config, pool)
    return gmres(A, b, M, rtol=rtol, restart=config.restart, max_iters=config.max_iters, pool=pool)
