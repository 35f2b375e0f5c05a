"""
Wigner Analysis

Wigner functions of single-mode states on a rectangular phase-space grid,
negativity volume and grid marginals. Evaluation goes through qutip on the
truncated density matrix, so it is exact at the cutoff; with g = sqrt(2) the
vacuum gives W(0, 0) = 1/pi.
"""

import logging
from typing import Optional, Union

import numpy as np
import qutip

from fockloop_core import GridTooCoarse
from src.engines import fock_engine
from src.models.result_models import WignerGrid
from src.models.state_models import DensityOperator, FockState

logger = logging.getLogger(__name__)

DEFAULT_HALF_WIDTH = 6.0
DEFAULT_POINTS = 201
GKP_HALF_WIDTH = 8.0
NORMALIZATION_TOL = 1e-4


def _to_qobj(state: Union[FockState, DensityOperator], mode: int) -> qutip.Qobj:
    if isinstance(state, FockState) and state.mode_count == 1:
        return qutip.Qobj(state.amplitudes.reshape(-1, 1))
    if state.mode_count == 1 and isinstance(state, DensityOperator):
        return qutip.Qobj(state.matrix)
    return qutip.Qobj(fock_engine.partial_trace(state, [mode]).matrix)


def wigner(
    state: Union[FockState, DensityOperator],
    half_width: float = DEFAULT_HALF_WIDTH,
    points: int = DEFAULT_POINTS,
    mode: int = 0,
    p_half_width: Optional[float] = None,
    check: bool = True,
) -> WignerGrid:
    """
    Wigner function of one mode on a (points x points) grid.

    Multimode states are reduced to ``mode`` first.

    Raises:
        GridTooCoarse: if the grid integral differs from 1 by more than 1e-4.
    """
    x = np.linspace(-half_width, half_width, points)
    p_extent = half_width if p_half_width is None else p_half_width
    p = np.linspace(-p_extent, p_extent, points)
    values = qutip.wigner(_to_qobj(state, mode), x, p, g=np.sqrt(2.0))
    grid = WignerGrid(x=x, p=p, values=np.real(values))
    if check:
        total = grid.integral()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise GridTooCoarse(
                f"Wigner integral {total:.6f} on ±{half_width} with {points} points; widen or refine the grid"
            )
    return grid


def negativity_volume(grid: WignerGrid) -> float:
    """Integral of max(-W, 0) over the grid."""
    return float(np.clip(-grid.values, 0.0, None).sum() * grid.cell_area)


def wigner_marginal(grid: WignerGrid, axis: str = "x") -> np.ndarray:
    """Integrate out the other quadrature: axis='x' gives the x density."""
    if axis == "x":
        return grid.values.sum(axis=0) * float(grid.p[1] - grid.p[0])
    if axis == "p":
        return grid.values.sum(axis=1) * float(grid.x[1] - grid.x[0])
    raise ValueError(f"axis must be 'x' or 'p', got {axis!r}")


def minimum(grid: WignerGrid) -> float:
    return float(grid.values.min())
