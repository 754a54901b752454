"""Full-batch L-BFGS with a strong-Wolfe line search (cubic interpolation + zoom)."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


def _cubic_minimum(x1, f1, g1, x2, f2, g2, bounds=None):
    lo, hi = bounds if bounds is not None else (min(x1, x2), max(x1, x2))
    d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2)
    disc = d1 * d1 - g1 * g2
    if disc >= 0:
        d2 = np.sqrt(disc)
        if x1 <= x2:
            pos = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        else:
            pos = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        if np.isfinite(pos):
            return min(max(pos, lo), hi)
    return 0.5 * (lo + hi)


@dataclass
class LineSearchResult:
    step: float
    f: float
    g: np.ndarray
    evaluations: int
    wolfe: bool


def strong_wolfe(fun, x, d, f, g, step, c1=1e-4, c2=0.9, max_steps=20, tolerance_change=1e-12):
    """Find a step along ``d`` satisfying the strong Wolfe conditions.

    ``fun(x)`` returns ``(f, grad)``.  Returns the best bracketed point when the
    step budget runs out; ``wolfe`` tells whether both conditions hold.
    """
    gtd = g @ d
    d_norm = np.abs(d).max()
    f_new, g_new = fun(x + step * d)
    evals = 1
    gtd_new = g_new @ d
    t_prev, f_prev, g_prev, gtd_prev = 0.0, f, g, gtd
    t = step
    done = False
    it = 0
    bracket = None

    while it < max_steps:
        if f_new > f + c1 * t * gtd or (it > 1 and f_new >= f_prev):
            bracket = [[t_prev, f_prev, g_prev, gtd_prev], [t, f_new, g_new, gtd_new]]
            break
        if abs(gtd_new) <= -c2 * gtd:
            bracket = [[t, f_new, g_new, gtd_new]]
            done = True
            break
        if gtd_new >= 0:
            bracket = [[t_prev, f_prev, g_prev, gtd_prev], [t, f_new, g_new, gtd_new]]
            break
        # extrapolate
        t_next = _cubic_minimum(
            t_prev, f_prev, gtd_prev, t, f_new, gtd_new, bounds=(t + 0.01 * (t - t_prev), 10.0 * t)
        )
        t_prev, f_prev, g_prev, gtd_prev = t, f_new, g_new, gtd_new
        t = t_next
        f_new, g_new = fun(x + t * d)
        evals += 1
        gtd_new = g_new @ d
        it += 1

    if bracket is None:
        bracket = [[0.0, f, g, gtd], [t, f_new, g_new, gtd_new]]

    if len(bracket) == 2:
        insufficient = False
        low, high = (0, 1) if bracket[0][1] <= bracket[1][1] else (1, 0)
        while not done and it < max_steps:
            a, b = bracket[0][0], bracket[1][0]
            if abs(b - a) * d_norm < tolerance_change:
                break
            t = _cubic_minimum(a, bracket[0][1], bracket[0][3], b, bracket[1][1], bracket[1][3])
            lo, hi = min(a, b), max(a, b)
            eps = 0.1 * (hi - lo)
            if min(hi - t, t - lo) < eps:
                if insufficient or t >= hi or t <= lo:
                    t = hi - eps if abs(t - hi) < abs(t - lo) else lo + eps
                    insufficient = False
                else:
                    insufficient = True
            else:
                insufficient = False

            f_new, g_new = fun(x + t * d)
            evals += 1
            gtd_new = g_new @ d
            it += 1

            if f_new > f + c1 * t * gtd or f_new >= bracket[low][1]:
                bracket[high] = [t, f_new, g_new, gtd_new]
                low, high = (0, 1) if bracket[0][1] <= bracket[1][1] else (1, 0)
            else:
                if abs(gtd_new) <= -c2 * gtd:
                    done = True
                elif gtd_new * (bracket[high][0] - bracket[low][0]) >= 0:
                    bracket[high] = list(bracket[low])
                bracket[low] = [t, f_new, g_new, gtd_new]
        best = bracket[low]
    else:
        best = bracket[0]

    return LineSearchResult(best[0], best[1], best[2], evals, done)


@dataclass
class LbfgsReport:
    x: np.ndarray
    f: float
    loss_history: list = field(default_factory=list)
    evaluations: int = 0
    iterations: int = 0
    line_search_failures: int = 0
    converged: bool = False


def minimize(
    fun,
    x0,
    epochs: int,
    lr: float = 1.0,
    history: int = 10,
    iterations_per_epoch: int = 20,
    max_line_search: int = 20,
    c1: float = 1e-4,
    c2: float = 0.9,
    tolerance_grad: float = 1e-14,
    tolerance_change: float = 1e-18,
) -> LbfgsReport:
    """Minimise ``fun`` (returning ``(f, grad)``) from ``x0``.

    Each epoch runs up to ``iterations_per_epoch`` L-BFGS iterations; the loss
    is recorded once per epoch.  The first trial step of every line search is
    ``lr`` (scaled by ``1/|g|_1`` on the very first iteration).  If a line
    search yields no decrease, that iteration falls back to a backtracking
    gradient step and the failure is counted.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    report = LbfgsReport(x, float(f), evaluations=1)
    s_hist: deque = deque(maxlen=history)
    y_hist: deque = deque(maxlen=history)

    for _ in range(epochs):
        for _ in range(iterations_per_epoch):
            if np.abs(g).max() <= tolerance_grad:
                report.converged = True
                break
            if report.iterations == 0:
                d = -g
                step = min(1.0, 1.0 / np.abs(g).sum()) * lr
            else:
                d = _two_loop(g, s_hist, y_hist)
                step = lr
            if g @ d > -tolerance_change:
                s_hist.clear()
                y_hist.clear()
                d = -g
                step = min(1.0, 1.0 / np.abs(g).sum()) * lr

            ls = strong_wolfe(fun, x, d, f, g, step, c1=c1, c2=c2, max_steps=max_line_search)
            report.evaluations += ls.evaluations
            if not ls.f < f:
                report.line_search_failures += 1
                ls = _gradient_step(fun, x, f, g, lr)
                report.evaluations += ls.evaluations
                d = -g
                s_hist.clear()
                y_hist.clear()
                if not ls.f < f:
                    report.converged = True
                    break

            s = ls.step * d
            y = ls.g - g
            if y @ s > 1e-10 * (s @ s):
                s_hist.append(s)
                y_hist.append(y)
            x = x + s
            f_old, f, g = f, ls.f, ls.g
            report.iterations += 1
            if abs(f_old - f) < tolerance_change:
                report.converged = True
                break
        report.loss_history.append(float(f))
        if report.converged:
            break

    report.x = x
    report.f = float(f)
    return report


def _two_loop(g, s_hist, y_hist):
    q = -g.copy()
    alphas = []
    rhos = [1.0 / (y @ s) for s, y in zip(s_hist, y_hist)]
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rhos)):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= (s @ y) / (y @ y)
    for s, y, rho, a in zip(s_hist, y_hist, rhos, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def _gradient_step(fun, x, f, g, lr, shrink=0.5, max_steps=30):
    step = lr
    gg = g @ g
    evals = 0
    for _ in range(max_steps):
        f_new, g_new = fun(x - step * g)
        evals += 1
        if f_new <= f - 1e-4 * step * gg:
            return LineSearchResult(step, f_new, g_new, evals, False)
        step *= shrink
    return LineSearchResult(0.0, f, g, evals, False)
