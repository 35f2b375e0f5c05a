"""
Peak Analysis

Locates the lattice peaks of a quadrature marginal and measures each one's
local mean and variance.
"""

import logging
from typing import List, Optional

import numpy as np
from scipy.signal import find_peaks

from fockloop_core import NoPeakFound
from src.models.result_models import Peak

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.1


def _window_moments(density: np.ndarray, grid: np.ndarray, mask: np.ndarray):
    weights = density[mask]
    xs = grid[mask]
    mass = weights.sum()
    mean = float((weights * xs).sum() / mass)
    variance = float((weights * (xs - mean) ** 2).sum() / mass)
    return mean, variance


def peak_spacing(peaks: List[Peak]) -> Optional[float]:
    """Median distance between neighbouring peaks, or None for a single peak."""
    if len(peaks) < 2:
        return None
    positions = np.sort([pk.position for pk in peaks])
    return float(np.median(np.diff(positions)))


def peak_analysis(density, grid, threshold: float = DEFAULT_THRESHOLD) -> List[Peak]:
    """
    Peaks of a sampled density, sorted by position.

    A peak is a local maximum above ``threshold`` times the global maximum.
    Each peak's position and variance are the density-weighted moments over a
    window of half the median peak spacing on either side; a lone peak uses
    the whole grid.

    Raises:
        NoPeakFound: if no local maximum clears the threshold.
    """
    density = np.asarray(density, dtype=float)
    grid = np.asarray(grid, dtype=float)
    top = density.max(initial=0.0)
    if top <= 0.0:
        raise NoPeakFound("Density is zero everywhere")
    indices, props = find_peaks(density, height=threshold * top)
    if indices.size == 0:
        # monotone edge maximum or a single-sample spike
        raise NoPeakFound("No local maximum above threshold")

    if indices.size == 1:
        mean, variance = _window_moments(density, grid, np.ones_like(density, dtype=bool))
        return [Peak(position=mean, height=float(props["peak_heights"][0]), variance=variance)]

    half_window = 0.5 * float(np.median(np.diff(grid[indices])))
    peaks = []
    for index, height in zip(indices, props["peak_heights"]):
        mask = np.abs(grid - grid[index]) <= half_window
        mean, variance = _window_moments(density, grid, mask)
        peaks.append(Peak(position=mean, height=float(height), variance=variance))
    logger.debug("Found %d peaks (half window %.4f)", len(peaks), half_window)
    return peaks


def central_peak(peaks: List[Peak]) -> Peak:
    if not peaks:
        raise NoPeakFound("Empty peak list")
    return min(peaks, key=lambda pk: abs(pk.position))


def spacing_deviation(peaks: List[Peak]) -> float:
    """Largest relative deviation of neighbour spacings from their median."""
    if len(peaks) < 3:
        return 0.0
    spacings = np.diff(np.sort([pk.position for pk in peaks]))
    median = np.median(spacings)
    return float(np.max(np.abs(spacings - median)) / median)
