"""
Rate Model

Throughput arithmetic for heralded sources and probabilistic modules.
"""

import logging

from fockloop_core import InvalidEta, InvalidRate

logger = logging.getLogger(__name__)


def _check_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise InvalidEta(f"{name} must lie in [0, 1], got {value}")


def _check_rate(rep_rate_hz: float) -> None:
    if rep_rate_hz < 0:
        raise InvalidRate(f"repetition rate must be non-negative, got {rep_rate_hz}")


def rate_model(rep_rate_hz: float, acceptance_fraction: float, herald_eta: float, sources_per_event: int = 1) -> float:
    """
    Expected events per second: rep_rate * acceptance * herald_eta ** sources_per_event.

    Examples:
        1 MHz, acceptance 1.0, eta 0.85 -> 850000.0
        250 kHz, acceptance 0.008, eta 1.0 -> 2000.0
    """
    _check_rate(rep_rate_hz)
    _check_fraction("acceptance_fraction", acceptance_fraction)
    _check_fraction("herald_eta", herald_eta)
    return rep_rate_hz * acceptance_fraction * herald_eta ** sources_per_event


def effective_source_rate(rep_rate_hz: float, herald_eta: float, circuit_eta: float = 1.0) -> float:
    """Heralded single photons per second that survive residual circuit loss."""
    _check_rate(rep_rate_hz)
    _check_fraction("herald_eta", herald_eta)
    _check_fraction("circuit_eta", circuit_eta)
    return rep_rate_hz * herald_eta * circuit_eta


def rus_rate(rep_rate_hz: float, p_success: float, buffer_rounds: int) -> float:
    """
    Repeat-until-success output rate with a delay-line buffer.

    Each output slot spans ``buffer_rounds`` attempts and succeeds unless all
    of them fail, so the rate is rep_rate / k * (1 - (1 - p)^k).
    """
    if buffer_rounds < 1:
        raise InvalidRate("buffer_rounds must be at least 1")
    _check_rate(rep_rate_hz)
    _check_fraction("p_success", p_success)
    return rep_rate_hz / buffer_rounds * (1.0 - (1.0 - p_success) ** buffer_rounds)
