"""Weighted fits of measured data to the link model.

Two estimators:

* :func:`fit_calibration` -- PER-vs-amplitude samples to the erfc packet
  error model, free threshold ``T`` and noise ``sigma``.
* :func:`fit_angular_scan` -- amplitude-vs-tilt scans to the direct-signal
  model plus a Gaussian reflection term, with the image radius left free to
  absorb coma and defocus.

Both sort their input internally, use deterministic starting points and the
damped Gauss-Newton solver in :mod:`vlclink.lm`, so identical data give
bit-identical results regardless of sample order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, erfcinv

from .errors import DomainError, RankDeficiencyError
from .geometry import ScenePoint, los_angles
from .lm import levenberg_marquardt
from .optics import (LensSpec, PhotodiodeSpec, SourceSpec, collected_power,
                     image_geometry, overlap_fraction_2d, overlap_fraction_axis,
                     transition_angles)
from .telecom import Axis, CalibrationCurve, bisect_decreasing, required_amplitude

PER_ERR_FLOOR = 1e-6
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CalibrationSample:
    amplitude: float  # mV
    amp_err: float  # mV
    per: float
    per_err: float = 0.0

    def __post_init__(self):
        if not self.amp_err > 0:
            raise DomainError("amp_err must be > 0")
        if not 0.0 <= self.per <= 1.0:
            raise DomainError("per must lie in [0, 1]")
        if self.per_err < 0:
            raise DomainError("per_err must be >= 0")


@dataclass(frozen=True)
class ScanSample:
    phi: float  # deg
    amplitude: float  # mV
    amp_err: float  # mV

    def __post_init__(self):
        if not self.amp_err > 0:
            raise DomainError("amp_err must be > 0")


@dataclass
class CalibrationFit:
    T: float
    sigma: float
    n_bits: int
    covariance: np.ndarray  # over (T, sigma)
    residual: float  # weighted sum of squares at the optimum
    n_iter: int
    history: list
    amplitude: np.ndarray  # samples, sorted by amplitude
    per: np.ndarray
    weighted_residuals: np.ndarray

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def curve(self, baud=115200, label="", lights="off") -> CalibrationCurve:
        return CalibrationCurve(T=self.T, sigma=self.sigma, n_bits=self.n_bits,
                                baud=baud, label=label, lights=lights)


def _per(S, T, sigma, n_bits):
    # same as telecom.per_curve, but T may go negative while iterating
    p_bit = 0.5 * erfc((S - T) / (_SQRT2 * sigma))
    with np.errstate(divide="ignore"):
        return -np.expm1(n_bits * np.log1p(-p_bit))


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _closest_amplitudes(S, S_err, per_term, span=8.0, n_grid=81, n_golden=24,
                        n_polish=6):
    """Latent true amplitudes minimising each sample's two-axis distance.

    For sample i, minimises ``((u - S_i)/S_err_i)**2 + per_term(u)_i**2`` over
    ``u`` in ``S_i +/- span*S_err_i``: a grid search brackets the minimum, a
    fixed number of golden-section steps narrows it and Newton steps
    (kept inside the bracket) polish it to machine precision.  ``per_term``
    takes an ``(n, m)`` array of candidates and returns residuals of that
    shape.
    """
    def cost(u):
        return ((u - S[:, None]) / S_err[:, None]) ** 2 + per_term(u) ** 2

    t = np.linspace(-span, span, n_grid)
    grid = S[:, None] + S_err[:, None] * t[None, :]
    j = np.clip(np.argmin(cost(grid), axis=1), 1, n_grid - 2)
    rows = np.arange(S.size)
    lo, hi = grid[rows, j - 1], grid[rows, j + 1]
    a = hi - _GOLDEN * (hi - lo)
    b = lo + _GOLDEN * (hi - lo)
    fa, fb = cost(a[:, None])[:, 0], cost(b[:, None])[:, 0]
    for _ in range(n_golden):
        left = fa < fb
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
        b_new = np.where(left, a, lo + _GOLDEN * (hi - lo))
        a_new = np.where(left, hi - _GOLDEN * (hi - lo), b)
        fa, fb = np.where(left, np.nan, fb), np.where(left, fa, np.nan)
        a, b = a_new, b_new
        need_a, need_b = np.isnan(fa), np.isnan(fb)
        fa = np.where(need_a, cost(a[:, None])[:, 0], fa)
        fb = np.where(need_b, cost(b[:, None])[:, 0], fb)

    u = 0.5 * (lo + hi)
    # Newton on the stationarity condition; with the curvature term the
    # fixed point is reached to rounding, so u is a smooth function of the
    # model parameters and their finite-difference Jacobian stays clean
    h = 1e-4 * S_err
    for _ in range(n_polish):
        q0 = per_term(u[:, None])[:, 0]
        qp = per_term((u + h)[:, None])[:, 0]
        qm = per_term((u - h)[:, None])[:, 0]
        dq = (qp - qm) / (2 * h)
        d2q = (qp - 2 * q0 + qm) / h**2
        grad = (u - S) / S_err**2 + q0 * dq
        curv = 1.0 / S_err**2 + dq * dq + q0 * d2q
        curv = np.where(curv > 0, curv, 1.0 / S_err**2 + dq * dq)
        u = np.clip(u - grad / curv, lo, hi)
    return u


def _initial_calibration(S, per, n_bits):
    inner = (per > 0.0) & (per < 1.0)
    if inner.sum() >= 2:
        p_bit = -np.expm1(np.log1p(-per[inner]) / n_bits)
        z = _SQRT2 * erfcinv(2.0 * p_bit)
        if np.ptp(z) > 0:
            sigma0, T0 = np.polyfit(z, S[inner], 1)
            if sigma0 > 0 and np.isfinite(T0):
                return float(T0), float(sigma0)
    # fall back to the PER = 0.5 crossing
    high = S[per >= 0.5]
    low = S[per < 0.5]
    s_lo = high.max() if high.size else S.min()
    s_hi = low.min() if low.size else S.max()
    s_half = 0.5 * (s_lo + s_hi)
    sigma0 = max(abs(s_hi - s_lo) / 2.0, 1e-3 * abs(s_half), 1e-3)
    p_half = -math.expm1(math.log(0.5) / n_bits)
    z_half = _SQRT2 * float(erfcinv(2.0 * p_half))
    return s_half - z_half * sigma0, sigma0


def fit_calibration(samples, n_bits: int = 48, *, amplitude_errors: bool = True,
                    log_domain: bool = False, max_iter: int = 500) -> CalibrationFit:
    """Weighted least-squares fit of the PER model to calibration samples.

    With ``amplitude_errors`` (default) this is an orthogonal-distance fit:
    each sample's true amplitude ``S*_i`` is a nuisance parameter and the
    cost is::

        sum ((S_i - S*_i) / amp_err_i)**2 + ((PER(S*_i) - per_i) / per_err_i)**2

    so both error bars act as weights.  Otherwise only the PER term is used,
    at the observed amplitudes.  ``per_err`` is floored at
    ``PER_ERR_FLOOR``.  ``log_domain`` compares ``log10(PER)`` instead, for
    data spanning many decades.

    Raises
    ------
    RankDeficiencyError
        Fewer than two samples, or every sample at PER 0 (or every sample at
        PER 1): the threshold and noise cannot both be determined.
    FitError
        The optimizer did not converge.
    """
    samples = sorted(samples, key=lambda s: (s.amplitude, s.per, s.amp_err, s.per_err))
    if len(samples) < 2:
        raise RankDeficiencyError("need at least two calibration samples")
    S = np.array([s.amplitude for s in samples])
    S_err = np.array([s.amp_err for s in samples])
    y = np.array([s.per for s in samples])
    y_err = np.maximum([s.per_err for s in samples], PER_ERR_FLOOR)
    if np.all(y == 0.0) or np.all(y == 1.0):
        raise RankDeficiencyError("all samples sit at the same PER bound")
    if np.ptp(S) == 0:
        raise RankDeficiencyError("all samples share one amplitude")
    n = S.size

    if log_domain:
        y_floor = np.maximum(y, 1e-12)
        y_obs = np.log10(y_floor)
        y_err = y_err / (y_floor * math.log(10.0))

        def per_term(S_true, T, sigma, obs=y_obs, err=y_err):
            model = _per(S_true, T, sigma, n_bits)
            return (np.log10(np.maximum(model, 1e-300)) - obs) / err
    else:
        def per_term(S_true, T, sigma, obs=y, err=y_err):
            return (_per(S_true, T, sigma, n_bits) - obs) / err

    if amplitude_errors:
        def residuals(p):
            T, sigma = p[0], math.exp(p[1])
            S_true = _closest_amplitudes(S, S_err, lambda u: per_term(
                u, T, sigma, y[:, None] if not log_domain else y_obs[:, None],
                y_err[:, None]))
            return np.concatenate([(S_true - S) / S_err, per_term(S_true, T, sigma)])
    else:
        def residuals(p):
            return per_term(S, p[0], math.exp(p[1]))

    T0, sigma0 = _initial_calibration(S, y, n_bits)
    x0 = np.array([T0, math.log(sigma0)])
    scale = np.array([max(sigma0, 1e-3), 1.0])
    res = levenberg_marquardt(residuals, x0, scale=scale, max_iter=max_iter)
    T, sigma = float(res.x[0]), float(math.exp(res.x[1]))

    norms = np.linalg.norm(res.jac, axis=0)
    if np.any(norms == 0) or np.linalg.matrix_rank(res.jac / norms, tol=1e-10) < 2:
        raise RankDeficiencyError("calibration data do not constrain both T and sigma")
    Jn = res.jac / norms
    cov_internal = np.linalg.inv(Jn.T @ Jn) / np.outer(norms, norms)
    G = np.diag([1.0, sigma])  # d(T, sigma) / d(T, log sigma)
    cov = G @ cov_internal @ G.T
    return CalibrationFit(T=T, sigma=sigma, n_bits=n_bits, covariance=cov,
                          residual=res.cost, n_iter=res.n_iter, history=res.history,
                          amplitude=S, per=y, weighted_residuals=res.residuals[-n:])


# -- angular scans ---------------------------------------------------------

SCAN_PARAMS = ("scale", "radius", "height", "center", "width", "baseline")


@dataclass(frozen=True)
class ScanContext:
    lens: LensSpec
    pd: PhotodiodeSpec
    src: SourceSpec
    pattern: object
    scene: ScenePoint
    axis: Axis = Axis.VERTICAL

    @property
    def lamp_angle(self) -> float:
        """Receiver tilt (deg) on the scan axis that points at the lamp."""
        a = los_angles(self.scene.with_mode("flat"))
        return a.phi_V if Axis.parse(self.axis) is Axis.VERTICAL else a.phi_H

    @property
    def unit_power(self) -> float:
        """Collected power with the receiver aligned, before calibration."""
        return collected_power(los_angles(self.scene.with_mode("optimal")),
                               self.lens, self.pd, self.src, self.pattern)

    @property
    def thin_lens_radius(self) -> float:
        return image_geometry(self.lens, self.src, los_angles(self.scene)).image_radius


def _direct_shape(misalign, ctx: ScanContext, R):
    """cos(phi) * overlap(phi; R), the aligned-normalised direct response."""
    misalign = np.asarray(misalign, dtype=float)
    if R <= ctx.pd.active_side / 2.0:
        frac = overlap_fraction_axis(misalign, ctx.lens, ctx.pd, R)
    else:
        frac = np.array([overlap_fraction_2d(0.0, m, ctx.lens, ctx.pd, R)
                         for m in np.ravel(misalign)]).reshape(misalign.shape)
    inside = np.abs(misalign) < 90.0
    return np.where(inside, np.cos(np.radians(misalign)) * frac, 0.0)


def _gauss(phi, height, center, width, baseline):
    return baseline + height * np.exp(-0.5 * ((phi - center) / width) ** 2)


@dataclass
class ScanFitResult:
    scale: float  # mV per collected-power unit
    image_radius: float  # mm
    gauss: dict  # height (mV), center (deg), width (deg), baseline (mV)
    residual_rms: float  # mV, unweighted
    covariance: np.ndarray  # 6x6 over SCAN_PARAMS; zero rows for fixed ones
    chi2: float
    n_iter: int
    history: list
    context: ScanContext = field(repr=False)
    free: tuple = SCAN_PARAMS
    phi: np.ndarray = field(default=None, repr=False)
    amplitude: np.ndarray = field(default=None, repr=False)
    amp_err: np.ndarray = field(default=None, repr=False)

    @property
    def params(self) -> dict:
        return {"scale": self.scale, "radius": self.image_radius, **self.gauss}

    @property
    def stderr(self) -> dict:
        return dict(zip(SCAN_PARAMS, np.sqrt(np.clip(np.diag(self.covariance), 0, None))))

    @property
    def lamp_angle(self) -> float:
        return self.context.lamp_angle

    @property
    def transition(self) -> tuple[float, float]:
        """(phi1, phi2) of the fitted image radius, as misalignment angles."""
        return transition_angles(self.context.lens, self.context.pd, self.image_radius)

    def direct(self, phi):
        peak = self.scale * self.context.unit_power
        out = peak * _direct_shape(np.asarray(phi, float) - self.lamp_angle,
                                   self.context, self.image_radius)
        return out if np.ndim(out) else float(out)

    def reflection(self, phi):
        g = self.gauss
        out = _gauss(np.asarray(phi, float), g["height"], g["center"], g["width"],
                     g["baseline"])
        return out if np.ndim(out) else float(out)

    def total(self, phi):
        return self.direct(phi) + self.reflection(phi)


def direct_component(fit: ScanFitResult, phi):
    """Direct-signal amplitude (mV) of a fitted scan, reflections removed."""
    return fit.direct(phi)


def _initial_scan(phi, A, err, ctx: ScanContext, unit):
    lamp = ctx.lamp_angle
    R0 = ctx.thin_lens_radius
    phi1, phi2 = transition_angles(ctx.lens, ctx.pd, R0)
    baseline0 = float(A.min())
    mis = phi - lamp
    for window in (max(phi1, 0.0), phi2, np.inf):
        near = np.abs(mis) <= window
        if near.any():
            break
    k0 = max(float(A[near].max()) - baseline0, float(np.median(err)))
    direct0 = k0 * _direct_shape(mis, ctx, R0)
    resid = A - baseline0 - direct0

    if lamp > 0:
        cand = phi < 0
    elif lamp < 0:
        cand = phi > 0
    else:
        cand = np.abs(mis) > phi2
    height0, center0, width0 = 0.0, -lamp, 1.0
    spacing = float(np.median(np.diff(phi))) if phi.size > 1 else 0.5
    if cand.any():
        idx = np.flatnonzero(cand)
        j = idx[np.argmax(resid[idx])]
        if resid[j] > 3.0 * np.median(err):
            height0 = float(resid[j])
            center0 = float(phi[j])
            half = resid >= 0.5 * height0
            lo = j
            while lo > 0 and half[lo - 1]:
                lo -= 1
            hi = j
            while hi < phi.size - 1 and half[hi + 1]:
                hi += 1
            width0 = max((phi[hi] - phi[lo]) / 2.355, spacing)
        else:
            center0 = float(np.mean(phi[cand]))
            width0 = max(5.0 * spacing, 1.0)
    return np.array([k0, math.log(R0), height0, center0, math.log(width0), baseline0])


def fit_angular_scan(samples, ctx: ScanContext, *, fixed: dict | None = None,
                     max_iter: int = 300) -> ScanFitResult:
    """Fit ``direct(phi; scale, R) + Gaussian(phi)`` to an amplitude scan.

    ``phi`` is the receiver tilt on ``ctx.axis``; the direct peak sits at the
    lamp direction.  Weights are ``1/amp_err**2``.  ``fixed`` pins any of
    :data:`SCAN_PARAMS` to a given value (e.g. ``{"height": 0.0}`` for the
    reflection-free nested model).

    The starting point is deterministic: R from the thin-lens image, the
    Gaussian centred on the largest residual peak on the opposite side of
    zero from the lamp.  Without such a peak the height starts at 0.
    """
    samples = sorted(samples, key=lambda s: (s.phi, s.amplitude, s.amp_err))
    if len(samples) < 10:
        raise DomainError("an angular scan fit needs at least 10 samples")
    fixed = dict(fixed or {})
    for k in fixed:
        if k not in SCAN_PARAMS:
            raise DomainError(f"unknown scan parameter {k!r}")
    ctx = ScanContext(ctx.lens, ctx.pd, ctx.src, ctx.pattern, ctx.scene, Axis.parse(ctx.axis))
    phi = np.array([s.phi for s in samples])
    A = np.array([s.amplitude for s in samples])
    err = np.array([s.amp_err for s in samples])
    unit = ctx.unit_power
    if not unit > 0:
        raise DomainError("pattern predicts no signal at the scan position")
    lamp = ctx.lamp_angle

    # internal vector: peak mV, log R, height, center, log width, baseline
    x_init = _initial_scan(phi, A, err, ctx, unit)
    to_internal = {"scale": lambda v: v * unit, "radius": math.log,
                   "height": float, "center": float, "width": math.log, "baseline": float}
    for k, v in fixed.items():
        x_init[SCAN_PARAMS.index(k)] = to_internal[k](v)
    free = [i for i, k in enumerate(SCAN_PARAMS) if k not in fixed]

    def unpack(xf):
        x = x_init.copy()
        x[free] = xf
        return x

    def model(x):
        direct = x[0] * _direct_shape(phi - lamp, ctx, math.exp(x[1]))
        return direct + _gauss(phi, x[2], x[3], math.exp(x[4]), x[5])

    def residuals(xf):
        return (model(unpack(xf)) - A) / err

    typical = np.array([abs(x_init[0]) or 1.0, 1.0, max(abs(x_init[0]), 1.0), 1.0, 1.0,
                        max(abs(x_init[0]), 1.0)])
    res = levenberg_marquardt(residuals, x_init[free], scale=typical[free], max_iter=max_iter)
    x = unpack(res.x)

    cov_free = res.covariance()
    # natural = (peak/unit, exp(logR), h, c, exp(logw), b)
    G = np.diag([1.0 / unit, math.exp(x[1]), 1.0, 1.0, math.exp(x[4]), 1.0])[:, free]
    cov = G @ cov_free @ G.T
    fitted = model(x)
    return ScanFitResult(
        scale=float(x[0] / unit), image_radius=float(math.exp(x[1])),
        gauss={"height": float(x[2]), "center": float(x[3]),
               "width": float(math.exp(x[4])), "baseline": float(x[5])},
        residual_rms=float(np.sqrt(np.mean((fitted - A) ** 2))),
        covariance=cov, chi2=res.cost, n_iter=res.n_iter, history=res.history,
        context=ctx, free=tuple(SCAN_PARAMS[i] for i in free),
        phi=phi, amplitude=A, amp_err=err)


def direct_efov(fit: ScanFitResult, curve: CalibrationCurve, threshold: float = 1e-3):
    """Full EFOV (deg) from the direct component of a fitted scan.

    ``None`` when the direct component vanishes, 0.0 when even the aligned
    receiver misses the PER threshold.
    """
    lamp = fit.lamp_angle
    s0 = fit.direct(lamp)
    if s0 <= 0:
        return None
    s_req = required_amplitude(threshold, curve)
    if s0 < s_req:
        return 0.0
    phi2 = min(fit.transition[1], 89.999)
    h = bisect_decreasing(lambda m: fit.direct(lamp + m), s_req, 0.0, phi2)
    return 2.0 * h
