"""Transmitter radiation patterns and the mV calibration scale.

A pattern maps (alpha, beta, d) to irradiance at the receiver pupil.  Two
implementations share the same surface: a tilted generalized-Lambertian
lobe and a tabulated (alpha, beta) map read from CSV.  Both are separable in
range, ``I(alpha, beta, d) = I(alpha, beta, 1) / d**2``.

``scale`` converts collected power to millivolts; ``None`` means the pattern
has not been calibrated yet.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import CalibrationError, DomainError, ExtrapolationError, ParseError
from .geometry import ScenePoint, los_angles
from .optics import LensSpec, PhotodiodeSpec, SourceSpec, collected_power


@dataclass(frozen=True)
class GeneralizedLambertian:
    """``I0 * cos(alpha - tilt)**m_v * cos(beta)**m_h / d**2``, zero behind the lobe."""

    peak_intensity: float = 1.0
    tilt_deg: float = 0.0
    order_v: float = 20.0
    order_h: float = 8.0
    scale: float | None = None

    kind = "generalized_lambertian"

    def intensity(self, alpha, beta, d):
        d = np.asarray(d, dtype=float)
        if np.any(d <= 0):
            raise DomainError("range must be positive")
        cv = np.cos(np.radians(np.asarray(alpha, dtype=float) - self.tilt_deg))
        ch = np.cos(np.radians(beta))
        cv = np.where(cv > 0, cv, 0.0)
        ch = np.where(ch > 0, ch, 0.0)
        out = self.peak_intensity * cv**self.order_v * ch**self.order_h / d**2
        return out if out.ndim else float(out)

    def with_scale(self, scale: float | None):
        return replace(self, scale=scale)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "peak_intensity": self.peak_intensity,
                "tilt_deg": self.tilt_deg, "order_v": self.order_v,
                "order_h": self.order_h}


@dataclass(frozen=True, eq=False)
class TabulatedMap:
    """Bilinear interpolation of a sampled ``I(alpha, beta, 1 m)`` grid."""

    alpha_deg: np.ndarray
    beta_deg: np.ndarray
    values: np.ndarray  # shape (len(alpha_deg), len(beta_deg))
    scale: float | None = None
    source: str = ""
    _interp: RegularGridInterpolator = field(init=False, repr=False, compare=False)

    kind = "tabulated"

    def __post_init__(self):
        a = np.asarray(self.alpha_deg, dtype=float)
        b = np.asarray(self.beta_deg, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (a.size, b.size):
            raise DomainError(f"table shape {v.shape} does not match axes ({a.size}, {b.size})")
        if a.size < 2 or b.size < 2 or np.any(np.diff(a) <= 0) or np.any(np.diff(b) <= 0):
            raise DomainError("table axes must be strictly increasing with >= 2 points")
        if np.any(v < 0):
            raise DomainError("tabulated intensity must be non-negative")
        object.__setattr__(self, "alpha_deg", a)
        object.__setattr__(self, "beta_deg", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_interp",
                           RegularGridInterpolator((a, b), v, method="linear"))

    def intensity(self, alpha, beta, d):
        d = np.asarray(d, dtype=float)
        if np.any(d <= 0):
            raise DomainError("range must be positive")
        alpha, beta = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(beta, float))
        if (np.any(alpha < self.alpha_deg[0]) or np.any(alpha > self.alpha_deg[-1])
                or np.any(beta < self.beta_deg[0]) or np.any(beta > self.beta_deg[-1])):
            raise ExtrapolationError("query lies outside the tabulated (alpha, beta) grid")
        pts = np.stack([alpha.ravel(), beta.ravel()], axis=-1)
        out = self._interp(pts).reshape(alpha.shape) / d**2
        return out if out.ndim else float(out)

    def with_scale(self, scale: float | None):
        return TabulatedMap(self.alpha_deg, self.beta_deg, self.values, scale, self.source)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "csv": self.source}

    @classmethod
    def from_csv(cls, path) -> "TabulatedMap":
        """Read ``alpha_deg,beta_deg,intensity`` rows forming a rectangular grid."""
        path = Path(path)
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
        header = [h.strip() for h in rows[0]]
        need = ["alpha_deg", "beta_deg", "intensity"]
        for col in need:
            if col not in header:
                raise ParseError(f"{path}: missing column {col!r}")
        idx = [header.index(c) for c in need]
        try:
            data = np.array([[float(r[i]) for i in idx] for r in rows[1:]])
        except (ValueError, IndexError) as exc:
            raise ParseError(f"{path}: {exc}") from None
        alphas = np.unique(data[:, 0])
        betas = np.unique(data[:, 1])
        if len(data) != alphas.size * betas.size:
            raise ParseError(f"{path}: rows do not form a rectangular grid")
        grid = np.full((alphas.size, betas.size), np.nan)
        grid[np.searchsorted(alphas, data[:, 0]), np.searchsorted(betas, data[:, 1])] = data[:, 2]
        if np.isnan(grid).any():
            raise ParseError(f"{path}: duplicate or missing grid points")
        return cls(alphas, betas, grid, source=str(path))


def intensity(p, alpha, beta, d):
    return p.intensity(alpha, beta, d)


@dataclass(frozen=True)
class Reference:
    """A measured amplitude at a known scene point and lens."""

    scene: ScenePoint
    lens: LensSpec
    amplitude: float  # mV


def calibrate_scale(p, reference: Reference, pd: PhotodiodeSpec, src: SourceSpec):
    """Return ``p`` with ``scale`` set so the model reproduces ``reference``."""
    angles = los_angles(reference.scene)
    raw = collected_power(angles, reference.lens, pd, src, p)
    if not raw > 0 or not math.isfinite(raw):
        raise CalibrationError("model predicts no signal at the calibration reference")
    return p.with_scale(reference.amplitude / raw)


def pattern_from_dict(spec: dict, base_dir: Path | None = None):
    """Build a pattern from its config record (``kind`` selects the type)."""
    spec = dict(spec)
    kind = spec.pop("kind", "generalized_lambertian")
    if kind == "generalized_lambertian":
        return GeneralizedLambertian(**spec)
    if kind == "tabulated":
        path = Path(spec["csv"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return TabulatedMap.from_csv(path)
    raise DomainError(f"unknown pattern kind {kind!r}")
