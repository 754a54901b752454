"""Vectorised Cox-de Boor recursion on uniform extended grids.

``order`` is the polynomial degree throughout (``order=3`` is cubic).
"""

from __future__ import annotations

import numpy as np


def extended_grid(lo: float, hi: float, grid_size: int, order: int) -> np.ndarray:
    """Uniform knots on ``[lo, hi]`` padded with ``order`` extra knots per side.

    The result has ``grid_size + 2 * order + 1`` knots and supports
    ``grid_size + order`` basis functions, which sum to one on ``[lo, hi]``.
    """
    if hi <= lo:
        raise ValueError(f"empty grid range [{lo}, {hi}]")
    step = (hi - lo) / grid_size
    return lo + step * np.arange(-order, grid_size + order + 1)


def _degree_zero(x, grid):
    x = x[..., None]
    return ((x >= grid[..., :-1]) & (x < grid[..., 1:])).astype(float)


def _raise_degree(x, grid, B, k):
    """One Cox-de Boor step from degree ``k - 1`` to ``k``."""
    x = x[..., None]
    inv_left = 1.0 / (grid[..., k:-1] - grid[..., : -k - 1])
    inv_right = 1.0 / (grid[..., k + 1 :] - grid[..., 1:-k])
    left = (x - grid[..., : -k - 1]) * inv_left
    right = (grid[..., k + 1 :] - x) * inv_right
    left *= B[..., :-1]
    right *= B[..., 1:]
    left += right
    return left


def bspline_basis(x, grid, order: int) -> np.ndarray:
    """B-spline basis values at ``x``.

    Parameters
    ----------
    x : array_like
        Points, shape ``(...)``.  ``grid`` must broadcast against ``x[..., None]``.
    grid : ndarray
        Knot vector(s), last axis of length ``m``.
    order : int
        Spline degree.

    Returns
    -------
    ndarray
        Shape ``(..., m - order - 1)``.
    """
    x = np.asarray(x, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if order < 0:
        raise ValueError("order must be nonnegative")
    B = _degree_zero(x, grid)
    for k in range(1, order + 1):
        B = _raise_degree(x, grid, B, k)
    return B


def bspline_basis_and_derivative(x, grid, order: int):
    """Basis values and their derivatives with respect to ``x``."""
    x = np.asarray(x, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if order == 0:
        B = _degree_zero(x, grid)
        return B, np.zeros_like(B)
    lower = bspline_basis(x, grid, order - 1)
    B = _raise_degree(x, grid, lower, order)
    k = order
    left = k / (grid[..., k:-1] - grid[..., : -k - 1])
    right = k / (grid[..., k + 1 :] - grid[..., 1:-k])
    dB = left * lower[..., :-1] - right * lower[..., 1:]
    return B, dB


def local_basis(x, lo, hi, intervals: int, order: int):
    """Nonzero basis values on the uniform grid of :func:`extended_grid`.

    Only ``order + 1`` basis functions are nonzero at any point, namely
    ``start, ..., start + order``.  ``x`` must lie in ``[lo, hi]``.

    Returns
    -------
    start : int ndarray, shape ``x.shape``
    values, derivatives : ndarray, shape ``x.shape + (order + 1,)``
        Derivatives are taken with respect to ``x``.
    """
    x = np.asarray(x, dtype=float)
    step = (np.asarray(hi, dtype=float) - lo) / intervals
    s = (x - lo) / step
    start = np.clip(np.floor(s).astype(np.int64), 0, intervals - 1)
    u = s - start

    # de Boor triangle; on unit-spaced knots every denominator equals the degree
    N = [np.ones_like(u)]
    lower = N
    for j in range(1, order + 1):
        lower = N
        nxt = []
        saved = np.zeros_like(u)
        for r in range(j):
            temp = lower[r] / j
            nxt.append(saved + (r + 1 - u) * temp)
            saved = (u + j - r - 1) * temp
        nxt.append(saved)
        N = nxt
    values = np.stack(N, axis=-1)

    if order == 0:
        return start, values, np.zeros_like(values)
    zero = np.zeros_like(u)
    padded = [zero] + list(lower) + [zero]
    inv = 1.0 / np.broadcast_to(step, u.shape)
    deriv = np.stack([(padded[r] - padded[r + 1]) * inv for r in range(order + 1)], axis=-1)
    return start, values, deriv

