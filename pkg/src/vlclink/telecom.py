"""Amplitude -> bit/packet error probability, and effective field of view.

OOK-NRZ with a comparator threshold ``T`` and Gaussian noise ``sigma``::

    p_bit = 0.5 * erfc((S - T) / (sqrt(2) * sigma))
    PER   = 1 - (1 - p_bit)**N

The EFOV is the full angular width, centred on the lamp direction, over which
the packet error rate stays at or below a threshold (1e-3 by default).
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import erfc, erfcinv

from .errors import DomainError
from .geometry import ScenePoint, los_angles
from .optics import (LensSpec, PhotodiodeSpec, SourceSpec, image_geometry,
                     overlap_fraction_2d, received_amplitude, transition_angles)

EFOV_TOL_DEG = 1e-3


class Axis(str, enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"

    @classmethod
    def parse(cls, value) -> "Axis":
        if isinstance(value, cls):
            return value
        v = str(value).lower()
        if v in ("h", "horizontal"):
            return cls.HORIZONTAL
        if v in ("v", "vertical"):
            return cls.VERTICAL
        raise DomainError(f"unknown axis {value!r}")


@dataclass(frozen=True)
class CalibrationCurve:
    T: float  # comparator threshold, mV
    sigma: float  # noise std, mV
    n_bits: int = 48
    baud: int = 115200
    label: str = ""
    lights: str = "off"

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be > 0")
        if self.n_bits < 1:
            raise DomainError("packet length must be >= 1 bit")
        if self.T < 0:
            raise DomainError("threshold T must be >= 0")

    def to_record(self) -> dict:
        return {"label": self.label, "baud": self.baud, "N_bits": self.n_bits,
                "T_mV": self.T, "sigma_mV": self.sigma, "lights": self.lights}

    @classmethod
    def from_record(cls, rec: dict) -> "CalibrationCurve":
        return cls(T=float(rec["T_mV"]), sigma=float(rec["sigma_mV"]),
                   n_bits=int(rec["N_bits"]), baud=int(rec["baud"]),
                   label=str(rec.get("label", "")), lights=str(rec.get("lights", "off")))


@dataclass(frozen=True)
class PERResult:
    per: float
    ber: float

    def as_dict(self):
        return asdict(self)


def bit_error_prob(S, c: CalibrationCurve):
    """Q((S - T)/sigma) for OOK with a fixed comparator threshold."""
    z = (np.asarray(S, dtype=float) - c.T) / (math.sqrt(2.0) * c.sigma)
    p = 0.5 * erfc(z)
    return p if np.ndim(p) else float(p)


def _per_from_ber(p, n_bits):
    # 1 - (1 - p)**N without cancellation for small p
    with np.errstate(divide="ignore"):  # p == 1 gives log1p(-1) = -inf, PER = 1
        return -np.expm1(n_bits * np.log1p(-np.asarray(p, dtype=float)))


def packet_error_rate(S, c: CalibrationCurve) -> PERResult:
    p = bit_error_prob(S, c)
    per = _per_from_ber(p, c.n_bits)
    if np.ndim(per) == 0:
        per = float(per)
    return PERResult(per=per, ber=p)


def per_curve(S, c: CalibrationCurve):
    """Vectorised PER only."""
    return _per_from_ber(bit_error_prob(S, c), c.n_bits)


def required_amplitude(per_target: float, c: CalibrationCurve) -> float:
    """Smallest amplitude (mV) whose PER does not exceed ``per_target``."""
    if not 0.0 < per_target < 1.0:
        raise DomainError("per_target must lie in (0, 1)")
    p = -math.expm1(math.log1p(-per_target) / c.n_bits)
    return c.T + math.sqrt(2.0) * c.sigma * float(erfcinv(2.0 * p))


def bisect_decreasing(fn, target: float, lo: float, hi: float,
                      tol: float = EFOV_TOL_DEG) -> float:
    """Largest x in [lo, hi] with fn(x) >= target, for fn non-increasing.

    Assumes fn(lo) >= target.  Returns ``hi`` if fn(hi) >= target.
    """
    if fn(hi) >= target:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) >= target:
            lo = mid
        else:
            hi = mid
    return lo


def efov_half_angle(axis, lens: LensSpec, pd: PhotodiodeSpec, src: SourceSpec, pattern,
                    c: CalibrationCurve, scene: ScenePoint, threshold: float = 1e-3):
    """Largest tilt |phi| (deg) from the lamp direction keeping PER <= threshold.

    The scan starts with the receiver aimed at the lamp regardless of
    ``scene.rx_mode``.  Returns 0.0 when even the aligned receiver fails the
    threshold and ``None`` ("no link") when there is no signal at all.
    """
    Axis.parse(axis)  # both axes share the same response for an aligned receiver
    base = los_angles(scene.with_mode("optimal"))
    s0 = received_amplitude(base, lens, pd, src, pattern)
    if s0 <= 0.0:
        return None
    s_req = required_amplitude(threshold, c)
    if s0 < s_req:
        return 0.0
    # tilting leaves the irradiance alone and scales it by cos(phi) * overlap(phi),
    # strictly decreasing on [0, phi2] and zero beyond
    R = image_geometry(lens, src, base).image_radius
    phi2 = transition_angles(lens, pd, R)[1]

    def amp(phi):
        return s0 * math.cos(math.radians(phi)) * overlap_fraction_2d(0.0, phi, lens, pd, R)

    return bisect_decreasing(amp, s_req, 0.0, min(phi2, 89.999))


def efov(axis, lens: LensSpec, pd: PhotodiodeSpec, src: SourceSpec, pattern,
         c: CalibrationCurve, scene: ScenePoint, threshold: float = 1e-3):
    """Full effective field of view in degrees (twice the half-angle).

    The aligned-receiver amplitude is symmetric under ``phi -> -phi`` on each
    axis, so the acceptance cone is ``[-h, h]`` with ``h`` from
    :func:`efov_half_angle`.  ``None`` means no link.
    """
    h = efov_half_angle(axis, lens, pd, src, pattern, c, scene, threshold)
    return None if h is None else 2.0 * h
