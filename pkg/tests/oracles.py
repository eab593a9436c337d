"""Independent reference computations used by the tests.

None of these call into afr; they recompute the quantities from their
definitions by brute force.
"""
import math
import warnings
from fractions import Fraction

import cvxpy as cp
import mpmath
import numpy as np


def conjugate_argmax(r, sigma, dps=40):
    """argmax_{b<0} b*r^2/sigma^2 - g(b), g(b) = -b log(-b) + b, by grid + golden section.

    Searched over t = log(-b), in which the objective is unimodal, at ``dps``
    decimal digits so the argmax is located far below double precision.
    """
    with mpmath.workdps(dps):
        c = mpmath.mpf(r) ** 2 / mpmath.mpf(sigma) ** 2

        def h(t):
            b = -mpmath.exp(t)
            return b * c - (-b * mpmath.log(-b) + b)

        lo, hi = -c - 20, mpmath.mpf(5)
        grid = [lo + (hi - lo) * k / 400 for k in range(401)]
        k = max(range(401), key=lambda i: h(grid[i]))
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, 400)]
        invphi = (mpmath.sqrt(5) - 1) / 2
        x1, x2 = b - invphi * (b - a), a + invphi * (b - a)
        f1, f2 = h(x1), h(x2)
        while b - a > mpmath.mpf(10) ** (-(dps - 8)):
            if f1 < f2:
                a, x1, f1 = x1, x2, f2
                x2 = a + invphi * (b - a)
                f2 = h(x2)
            else:
                b, x2, f2 = x2, x1, f1
                x1 = b - invphi * (b - a)
                f1 = h(x1)
        return float(-mpmath.exp((a + b) / 2))


def prox_numeric(a, k, q):
    """argmin_x 0.5 ||x - a||^2 + k ||x||_q via a conic solver."""
    x = cp.Variable(a.size)
    norm = cp.norm1(x) if q == 1 else cp.norm(x, 2)
    problem = cp.Problem(cp.Minimize(0.5 * cp.sum_squares(x - a) + k * norm))
    # the default 1e-8 gap tolerance leaves ~1e-5 error in x for |a| ~ 10;
    # tighter tolerances are sometimes reported as "inaccurate" yet land within 1e-7
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        problem.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    assert problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE), problem.status
    return np.asarray(x.value)


def ap_by_thresholds(scores, labels):
    """Area under the step PR curve, enumerating every score as a threshold.

    Assumes distinct scores. Precision at each threshold is counted from
    scratch; recall increments by 1/P exactly at positive thresholds.
    """
    scores = list(map(float, scores))
    labels = list(map(float, labels))
    n_pos = sum(1 for y in labels if y > 0)
    precisions = []
    for s in sorted(set(scores), reverse=True):
        predicted = [i for i in range(len(scores)) if scores[i] >= s]
        tp = sum(1 for i in predicted if labels[i] > 0)
        prev_tp = sum(1 for i in predicted if labels[i] > 0 and scores[i] > s)
        if tp > prev_tp:
            precisions.append(tp / len(predicted))
    return math.fsum(precisions) / n_pos


def ap_exact(scores, labels):
    """Same quantity as a rational number."""
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    tp, total = 0, Fraction(0)
    for rank, i in enumerate(order, start=1):
        if labels[i] > 0:
            tp += 1
            total += Fraction(tp, rank)
    return total / tp
