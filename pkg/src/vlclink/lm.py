"""Damped Gauss-Newton (Levenberg-Marquardt) least squares.

Minimises ``sum(r(p)**2)`` for a residual function ``r``.  The Jacobian is
taken by central differences with step ``1e-6 * max(|p_j|, scale_j)``.

Damping schedule: the normal equations are solved with
``J^T J + lam * diag(J^T J)``.  A step is accepted only if it lowers the
cost; ``lam`` is then rescaled by ``max(1/3, 1 - (2*rho - 1)**3)`` where
``rho`` is actual over predicted reduction (Nielsen's rule).  A rejected
step multiplies ``lam`` by ``nu`` (starting at 2, doubling on each
consecutive rejection) and is retried from the same point.  Accepted costs
are therefore non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitError


@dataclass
class LMResult:
    x: np.ndarray
    cost: float  # sum of squared residuals
    jac: np.ndarray
    residuals: np.ndarray
    n_iter: int
    converged: bool
    history: list = field(default_factory=list)  # accepted costs

    def covariance(self) -> np.ndarray:
        """``(J^T J)^-1``, pseudo-inverse when singular."""
        jtj = self.jac.T @ self.jac
        return np.linalg.pinv(jtj, rcond=1e-13, hermitian=True)


def numeric_jacobian(fun, x, scale, rel_step=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        h = rel_step * max(abs(x[j]), scale[j])
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((fun(xp) - fun(xm)) / (2.0 * h))
    return np.column_stack(cols)


def _gradient_cosine(J, r):
    # largest cosine between a Jacobian column and the residual vector
    rn = np.linalg.norm(r)
    cn = np.linalg.norm(J, axis=0)
    ok = cn > 0
    if rn == 0 or not ok.any():
        return 0.0
    return float(np.max(np.abs(J[:, ok].T @ r) / (cn[ok] * rn)))


def levenberg_marquardt(fun, x0, scale=None, max_iter=200, ftol=1e-15, xtol=1e-13,
                        gtol=1e-13, lam0=1e-3):
    """Minimise ``||fun(x)||^2`` from ``x0``.

    Raises :class:`FitError` (carrying the last accepted iterate) if the
    iteration budget runs out before the step or cost change fall below
    tolerance.
    """
    x = np.asarray(x0, dtype=float).copy()
    scale = np.ones_like(x) if scale is None else np.asarray(scale, dtype=float)
    r = fun(x)
    cost = float(r @ r)
    history = [cost]
    lam = lam0
    J = numeric_jacobian(fun, x, scale)

    nu = 2.0
    for it in range(1, max_iter + 1):
        g = J.T @ r
        A = J.T @ J
        diag = np.diag(A).copy()
        diag = np.maximum(diag, 1e-12 * max(diag.max(), 1e-300))
        accepted = False
        while lam < 1e16:
            step = np.linalg.lstsq(A + lam * np.diag(diag), -g, rcond=None)[0]
            x_new = x + step
            r_new = fun(x_new)
            cost_new = float(r_new @ r_new)
            predicted = -(2.0 * g @ step + step @ A @ step)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= nu
            nu *= 2.0
        if not accepted:
            # no downhill direction left: at a (numerical) minimum
            return LMResult(x, cost, J, r, it, True, history)

        rho = (cost - cost_new) / predicted if predicted > 0 else 0.0
        small_step = np.all(np.abs(step) <= xtol * np.maximum(np.abs(x), scale))
        # a tiny gain only means convergence when the step was near Gauss-Newton
        small_gain = rho > 0.25 and cost - cost_new <= ftol * max(cost, 1e-300)
        x, r, cost = x_new, r_new, cost_new
        history.append(cost)
        lam = max(lam * max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3), 1e-15)
        nu = 2.0
        J = numeric_jacobian(fun, x, scale)
        if small_step or small_gain or cost == 0.0 or _gradient_cosine(J, r) < gtol:
            return LMResult(x, cost, J, r, it, True, history)

    raise FitError(f"no convergence after {max_iter} iterations", last=x)
