"""Fits of the entropy-density relation: cubic B-spline and the binary-entropy law

    S(n) = c1 * n ln n + c2 * (1 - n) ln(1 - n).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline, make_lsq_spline

log = logging.getLogger(__name__)


class SingularFitError(ValueError):
    pass


def xlogx(x):
    """``x ln x`` on ``[0, 1]`` with the limit value 0 at ``x = 0``."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError("xlogx is defined on [0, 1] only")
    safe = np.where(arr > 0, arr, 1.0)
    out = np.where(arr > 0, arr * np.log(safe), 0.0)
    return float(out) if np.ndim(x) == 0 else out


def r_squared(y, y_hat) -> float:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.size < 2:
        raise ValueError("r_squared needs two equal-length vectors of length >= 2")
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        raise ValueError("R^2 is undefined for a constant target")
    return float(1.0 - np.sum((y - y_hat) ** 2) / ss_tot)


@dataclass(frozen=True)
class BinaryFitResult:
    c1: float
    c2: float
    r2: float
    residual_rms: float
    n_points: int

    def predict(self, n):
        n = np.asarray(n, dtype=float)
        return self.c1 * xlogx(n) + self.c2 * xlogx(1.0 - n)


def binary_entropy_design(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return np.column_stack([xlogx(n), xlogx(1.0 - n)])


def fit_binary_entropy(n, S) -> BinaryFitResult:
    """Least-squares ``(c1, c2)`` from the 2x2 normal equations.

    Raises
    ------
    ValueError
        Fewer than three points, or any density outside ``[0, 1]``.
    SingularFitError
        The two regressor columns are (numerically) linearly dependent.
    """
    n = np.asarray(n, dtype=float)
    S = np.asarray(S, dtype=float)
    if n.shape != S.shape or n.ndim != 1:
        raise ValueError("n and S must be 1-D arrays of equal length")
    if n.size < 3:
        raise ValueError(f"need at least 3 points, got {n.size}")
    bad = np.flatnonzero((n < 0) | (n > 1))
    if bad.size:
        raise ValueError(
            f"{bad.size} point(s) have n_A outside [0, 1] (first at index {bad[0]}, "
            f"n_A={n[bad[0]]!r}); the binary-entropy law is undefined there"
        )

    X = binary_entropy_design(n)
    G = X.T @ X
    rhs = X.T @ S
    det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    if G[0, 0] == 0 or G[1, 1] == 0 or abs(det) <= 1e-12 * G[0, 0] * G[1, 1]:
        raise SingularFitError("degenerate design: regressor columns are proportional")
    c1 = (G[1, 1] * rhs[0] - G[0, 1] * rhs[1]) / det
    c2 = (G[0, 0] * rhs[1] - G[1, 0] * rhs[0]) / det

    resid = S - X @ np.array([c1, c2])
    ss_tot = np.sum((S - S.mean()) ** 2)
    r2 = float(1.0 - resid @ resid / ss_tot) if ss_tot > 0 else float("nan")
    return BinaryFitResult(float(c1), float(c2), r2, float(np.sqrt(np.mean(resid**2))), int(n.size))


@dataclass(frozen=True)
class SplineFit:
    """Least-squares cubic spline on clamped uniform knots."""

    knots: np.ndarray
    coefficients: np.ndarray
    degree: int
    domain: tuple[float, float]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        tol = 1e-12 * max(1.0, abs(hi - lo))
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            raise ValueError(f"spline evaluated outside its fit domain [{lo}, {hi}]")
        return BSpline(self.knots, self.coefficients, self.degree)(np.clip(x, lo, hi))


def fit_bspline(n, S, n_knots: int = 8, degree: int = 3) -> SplineFit:
    """Cubic least-squares B-spline with ``n_knots`` uniform interior knots."""
    n = np.asarray(n, dtype=float)
    S = np.asarray(S, dtype=float)
    n_coef = n_knots + degree + 1
    if n.size < n_knots + 4:
        raise ValueError(f"need at least {n_knots + 4} points, got {n.size}")
    order = np.argsort(n, kind="stable")
    x, y = n[order], S[order]
    lo, hi = float(x[0]), float(x[-1])
    if hi <= lo:
        raise ValueError("zero-width fit domain")
    if np.unique(x).size < n_coef:
        raise ValueError(
            f"only {np.unique(x).size} distinct abscissae for {n_coef} spline coefficients"
        )
    interior = np.linspace(lo, hi, n_knots + 2)[1:-1]
    knots = np.concatenate([[lo] * (degree + 1), interior, [hi] * (degree + 1)])
    try:
        spl = make_lsq_spline(x, y, knots, k=degree)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ValueError(f"insufficient support for the knot vector: {exc}") from exc
    return SplineFit(knots, spl.c, degree, (lo, hi))


@dataclass(frozen=True)
class HeatmapCell:
    U: float
    h: float
    L: int
    fit: BinaryFitResult | None
    error: str = ""

    @property
    def r2(self) -> float:
        return self.fit.r2 if self.fit is not None else float("nan")


def r2_heatmap(ds) -> list[HeatmapCell]:
    """One binary-entropy fit per ``(U, h, L)`` group; failures become empty cells."""
    keys = ds.group_keys()
    if not keys:
        raise ValueError("dataset has no groups")
    cells = []
    for key in keys:
        rows = ds.group(key)
        try:
            fit = fit_binary_entropy(rows[:, 4], rows[:, 5])
            cells.append(HeatmapCell(*key, fit))
        except ValueError as exc:
            log.warning("fit failed for U=%g h=%g L=%d: %s", *key, exc)
            cells.append(HeatmapCell(*key, None, str(exc)))
    return cells


def write_heatmap(cells, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("U,h,R2\n")
        for c in cells:
            r2 = "" if c.fit is None else format(c.fit.r2, ".17g")
            fh.write(f"{c.U:.17g},{c.h:.17g},{r2}\n")


def write_fit_report(cells, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("U,h,L,c1,c2,R2,residual_rms,n_points,error\n")
        for c in cells:
            if c.fit is None:
                fh.write(f"{c.U:.17g},{c.h:.17g},{c.L},,,,,,{c.error.replace(',', ';')}\n")
                continue
            f = c.fit
            fh.write(
                f"{c.U:.17g},{c.h:.17g},{c.L},{f.c1:.17g},{f.c2:.17g},{f.r2:.17g},"
                f"{f.residual_rms:.17g},{f.n_points},\n"
            )
