"""Road-grid geometry: receiver position and orientation to line-of-sight angles.

Lengths are meters, angles are degrees.  The lamp sits at ``tx_height`` above
the road axis; the receiver is ``distance`` meters down the road and
``lateral_offset`` meters to the side, at ``rx_height``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import DomainError


class RxMode(str, enum.Enum):
    """Receiver optical-axis orientation."""

    OPTIMAL = "optimal"  # axis aimed at the lamp
    FLAT = "flat"  # axis horizontal, parallel to the road

    @classmethod
    def parse(cls, value: "str | RxMode") -> "RxMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown receiver mode {value!r}") from None


@dataclass(frozen=True)
class ScenePoint:
    distance: float
    lateral_offset: float = 0.0
    tx_height: float = 3.0
    rx_height: float = 1.05
    rx_mode: RxMode = RxMode.OPTIMAL

    def __post_init__(self):
        object.__setattr__(self, "rx_mode", RxMode.parse(self.rx_mode))

    def with_mode(self, mode) -> "ScenePoint":
        return replace(self, rx_mode=RxMode.parse(mode))


@dataclass(frozen=True)
class AngleSet:
    alpha: float
    beta: float
    d: float
    phi_H: float = 0.0
    phi_V: float = 0.0

    def rotated(self, phi_H: float = 0.0, phi_V: float = 0.0) -> "AngleSet":
        """Same position, receiver turned by extra misalignment on each axis."""
        return replace(self, phi_H=self.phi_H + phi_H, phi_V=self.phi_V + phi_V)


def los_angles(p: ScenePoint) -> AngleSet:
    """Line-of-sight angles and range for a scene point.

    Raises
    ------
    DomainError
        If ``distance <= 0`` or the lamp is not above the receiver.
    """
    if not p.distance > 0:
        raise DomainError(f"distance must be positive, got {p.distance}")
    if not p.tx_height > p.rx_height:
        raise DomainError(
            f"tx_height ({p.tx_height}) must exceed rx_height ({p.rx_height})"
        )
    dh = p.tx_height - p.rx_height
    ground = math.hypot(p.distance, p.lateral_offset)
    alpha = math.degrees(math.atan2(dh, ground))
    beta = math.degrees(math.atan2(p.lateral_offset, p.distance))
    d = math.sqrt(p.distance**2 + p.lateral_offset**2 + dh**2)
    if p.rx_mode is RxMode.FLAT:
        return AngleSet(alpha, beta, d, phi_H=beta, phi_V=alpha)
    return AngleSet(alpha, beta, d)
