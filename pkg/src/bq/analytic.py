"""Closed forms and bounds used as ground truth for the SDP machinery."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qmat import DensityMatrix, two_qubit_schmidt

# the two-qubit optimum changes branch where tan(theta) = 2^(-1/4)
THETA_BREAKPOINT = math.atan(2.0 ** (-0.25))

__all__ = [
    "ThetaState",
    "THETA_BREAKPOINT",
    "f2_mes",
    "f2_two_qubit",
    "power_upsilon",
    "mi_continuity_bound",
    "binary_entropy",
]


@dataclass(frozen=True)
class ThetaState:
    """Schmidt-angle family cos(theta)|00> + sin(theta)|11>, theta in (0, pi/4]."""

    theta: float

    def __post_init__(self):
        t = float(self.theta)
        if not 0.0 < t <= math.pi / 4:
            raise ValueError(f"theta must lie in (0, pi/4], got {t}")
        object.__setattr__(self, "theta", t)

    def state(self) -> DensityMatrix:
        return two_qubit_schmidt(self.theta)


def f2_mes(d: int) -> float:
    """Optimal two-receiver fidelity of the maximally entangled state: sqrt((d+1)/2d)."""
    d = int(d)
    if d < 2:
        raise ValueError(f"need local dimension >= 2, got {d}")
    return math.sqrt((d + 1) / (2.0 * d))


def f2_two_qubit(s: ThetaState) -> float:
    """Optimal two-receiver fidelity of the Schmidt-angle family.

    Piecewise: cos^2 + sin^2/sqrt(2) up to the breakpoint angle, then
    sqrt(1.5 (cos^4 + sin^4)); the two branches agree at the breakpoint.
    """
    t = s.theta
    c2 = math.cos(t) ** 2
    s2 = math.sin(t) ** 2
    if t <= THETA_BREAKPOINT:
        return c2 + s2 / math.sqrt(2.0)
    return math.sqrt(1.5 * (c2 * c2 + s2 * s2))


def power_upsilon(d: int) -> float:
    """Worst-case fidelity of the optimal symmetric cloner: sqrt((d+1)/2d).

    Coincides with f2_mes(d); no symmetric two-receiver broadcaster does
    better on its worst input.
    """
    return f2_mes(d)


def binary_entropy(x: float) -> float:
    """-x log2 x - (1-x) log2 (1-x), with the 0 log 0 = 0 convention."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"argument must lie in [0, 1], got {x}")
    h = 0.0
    if 0.0 < x < 1.0:
        h = -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)
    return min(max(h, 0.0), 1.0)


def mi_continuity_bound(gamma: float, dim_a: int) -> float:
    """How much mutual information can change across trace distance gamma.

    For states gamma apart in trace distance (gamma <= 1/2), the mutual
    information across a cut with first factor of dimension dim_a moves by
    at most 8 gamma log2|A| + gamma log2(|A|-1) + 2 h2(2 gamma) + h2(gamma).
    """
    g = float(gamma)
    if not 0.0 <= g <= 0.5:
        raise ValueError(f"gamma must lie in [0, 1/2], got {g}")
    d = int(dim_a)
    if d < 2:
        raise ValueError(f"need dimension >= 2 on the first factor, got {d}")
    return (
        8.0 * g * math.log2(d)
        + g * math.log2(d - 1)
        + 2.0 * binary_entropy(min(2.0 * g, 1.0))
        + binary_entropy(g)
    )
