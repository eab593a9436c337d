"""Hot numeric kernels, each in a numba flavour and a numpy flavour.

The ``*_nb`` functions are explicit loops compiled by :func:`afr._accel.njit`;
the ``*_np`` functions are vectorized numpy. They take the same arguments and
return the same values (up to floating-point summation order), and the
module-level names without suffix point at whichever backend
:data:`afr._accel.USE_NUMBA` selected.
"""
import math

import numpy as np
import scipy.linalg

from ._accel import USE_NUMBA, njit

# ADMM exit status codes
MAX_ITER = 0
CONVERGED = 1
DIVERGED = 2
NONFINITE = 3


def clamped_uniform_knots(dim, order):
    """Clamped knot vector on [0, 1] with ``dim - order`` uniform interior knots."""
    n_spans = dim - order + 1
    interior = np.linspace(0.0, 1.0, n_spans + 1)[1:-1]
    return np.concatenate([np.zeros(order), interior, np.ones(order)])


# --------------------------------------------------------------------------
# B-spline design block
# --------------------------------------------------------------------------

def _bspline_basis_loop(x, knots, order):
    dim = knots.shape[0] - order
    degree = order - 1
    n_spans = dim - degree
    out = np.zeros((x.shape[0], dim))
    nz = np.empty(order)
    left = np.empty(order)
    right = np.empty(order)
    for i in range(x.shape[0]):
        xi = x[i]
        s = int(xi * n_spans)
        if s > n_spans - 1:
            s = n_spans - 1
        span = s + degree
        nz[0] = 1.0
        for j in range(1, order):
            left[j] = xi - knots[span + 1 - j]
            right[j] = knots[span + j] - xi
            saved = 0.0
            for r in range(j):
                temp = nz[r] / (right[r + 1] + left[j - r])
                nz[r] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            nz[j] = saved
        for r in range(order):
            out[i, span - degree + r] = nz[r]
    return out


_bspline_basis_nb = njit(_bspline_basis_loop)


def _bspline_basis_np(x, knots, order):
    # Cox-de Boor recursion on the whole knot sequence at once
    x = np.asarray(x, dtype=float)
    dim = knots.shape[0] - order
    n_int = knots.shape[0] - 1
    lo, hi = knots[:-1], knots[1:]
    B = ((x[:, None] >= lo) & (x[:, None] < hi)).astype(float)
    # right endpoint belongs to the last non-degenerate interval
    B[x >= knots[-1], :] = 0.0
    B[x >= knots[-1], dim - 1] = 1.0
    for k in range(1, order):
        m = n_int - k
        den1 = knots[k:k + m] - knots[:m]
        den2 = knots[k + 1:k + 1 + m] - knots[1:1 + m]
        with np.errstate(divide="ignore", invalid="ignore"):
            w1 = np.where(den1 > 0, (x[:, None] - knots[:m]) / den1, 0.0)
            w2 = np.where(den2 > 0, (knots[k + 1:k + 1 + m] - x[:, None]) / den2, 0.0)
        B = w1 * B[:, :m] + w2 * B[:, 1:m + 1]
    return B[:, :dim]


def trig_basis(x, dim):
    """Orthonormal trigonometric system on [0, 1]: 1, sqrt2 cos(2 pi k x), sqrt2 sin(2 pi k x), ..."""
    x = np.asarray(x, dtype=float)
    out = np.empty((x.shape[0], dim))
    out[:, 0] = 1.0
    for col in range(1, dim):
        freq = (col + 1) // 2
        arg = 2.0 * np.pi * freq * x
        out[:, col] = math.sqrt(2.0) * (np.cos(arg) if col % 2 == 1 else np.sin(arg))
    return out


# --------------------------------------------------------------------------
# group soft thresholding
# --------------------------------------------------------------------------

def _group_soft_threshold_loop(v, thresholds, dim, q):
    out = np.empty_like(v)
    for j in range(thresholds.shape[0]):
        k = thresholds[j]
        a = j * dim
        if q == 1:
            for i in range(a, a + dim):
                if v[i] > k:
                    out[i] = v[i] - k
                elif v[i] < -k:
                    out[i] = v[i] + k
                else:
                    out[i] = 0.0
        else:
            nrm = 0.0
            for i in range(a, a + dim):
                nrm += v[i] * v[i]
            nrm = math.sqrt(nrm)
            scale = 1.0 - k / nrm if nrm > k else 0.0
            for i in range(a, a + dim):
                out[i] = scale * v[i]
    return out


_group_soft_threshold_nb = njit(_group_soft_threshold_loop)


def _group_soft_threshold_np(v, thresholds, dim, q):
    V = v.reshape(-1, dim)
    k = thresholds[:, None]
    if q == 1:
        return (np.maximum(V - k, 0.0) - np.maximum(-V - k, 0.0)).ravel()
    nrm = np.sqrt(np.einsum("ij,ij->i", V, V))[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(nrm > k, 1.0 - k / nrm, 0.0)
    return (scale * V).ravel()


# --------------------------------------------------------------------------
# ADMM inner loop
# --------------------------------------------------------------------------
# Solves  min_a  quad(a) + sum_j pen_j ||theta_j||_q  s.t. a = theta, where
#   quad(a) = quad0 - c.a + a.H.a / 2
# and L is the lower Cholesky factor of H + eta I.

def _admm_loop(L, c, H, quad0, pen, dim, q, eta, eps, max_iter,
               alpha0, theta0, mu0, window):
    m = c.shape[0]
    n_blocks = pen.shape[0]
    alpha_prev = alpha0.copy()
    theta = theta0.copy()
    mu = mu0.copy()
    alpha = np.empty(m)
    z = np.empty(m)
    thresholds = pen / eta
    hist = np.empty(max_iter)
    status = MAX_ITER
    n_iter = 0
    rises = 0
    last_obj = np.inf
    primal = np.inf
    dalpha = np.inf
    for it in range(max_iter):
        # forward / back substitution against L L^T
        for i in range(m):
            s = c[i] + eta * (theta[i] - mu[i])
            for k in range(i):
                s -= L[i, k] * z[k]
            z[i] = s / L[i, i]
        for i in range(m - 1, -1, -1):
            s = z[i]
            for k in range(i + 1, m):
                s -= L[k, i] * alpha[k]
            alpha[i] = s / L[i, i]

        theta = _group_soft_threshold_nb(alpha + mu, thresholds, dim, q)

        primal = 0.0
        dalpha = 0.0
        for i in range(m):
            r = alpha[i] - theta[i]
            mu[i] += r
            if abs(r) > primal:
                primal = abs(r)
            if abs(alpha[i] - alpha_prev[i]) > dalpha:
                dalpha = abs(alpha[i] - alpha_prev[i])

        obj = quad0
        for i in range(m):
            hi = 0.0
            for k in range(m):
                hi += H[i, k] * alpha[k]
            obj += alpha[i] * (0.5 * hi - c[i])
        for j in range(n_blocks):
            acc = 0.0
            for i in range(j * dim, (j + 1) * dim):
                acc += abs(theta[i]) if q == 1 else theta[i] * theta[i]
            obj += pen[j] * (acc if q == 1 else math.sqrt(acc))
        hist[it] = obj
        n_iter = it + 1

        if not math.isfinite(obj):
            status = NONFINITE
            break
        if obj > last_obj and obj > quad0:
            rises += 1
        else:
            rises = 0
        last_obj = obj
        if primal < eps and dalpha < eps:
            status = CONVERGED
            break
        if rises >= window:
            status = DIVERGED
            break
        alpha_prev[:] = alpha
    return alpha, theta, mu, n_iter, status, primal, dalpha, hist[:n_iter]


_admm_loop_nb = njit(_admm_loop)


def _admm_loop_np(L, c, H, quad0, pen, dim, q, eta, eps, max_iter,
                  alpha0, theta0, mu0, window):
    factor = (L, True)
    alpha_prev = alpha0.copy()
    theta = theta0.copy()
    mu = mu0.copy()
    alpha = alpha_prev
    thresholds = pen / eta
    hist = []
    status = MAX_ITER
    rises = 0
    last_obj = np.inf
    primal = dalpha = np.inf
    for _ in range(max_iter):
        alpha = scipy.linalg.cho_solve(factor, c + eta * (theta - mu))
        theta = _group_soft_threshold_np(alpha + mu, thresholds, dim, q)
        resid = alpha - theta
        mu = mu + resid
        primal = np.max(np.abs(resid))
        dalpha = np.max(np.abs(alpha - alpha_prev))

        T = theta.reshape(-1, dim)
        norms = np.abs(T).sum(axis=1) if q == 1 else np.sqrt((T * T).sum(axis=1))
        obj = quad0 + alpha @ (0.5 * (H @ alpha) - c) + pen @ norms
        hist.append(obj)

        if not np.isfinite(obj):
            status = NONFINITE
            break
        rises = rises + 1 if (obj > last_obj and obj > quad0) else 0
        last_obj = obj
        if primal < eps and dalpha < eps:
            status = CONVERGED
            break
        if rises >= window:
            status = DIVERGED
            break
        alpha_prev = alpha
    return alpha, theta, mu, len(hist), status, primal, dalpha, np.array(hist)


if USE_NUMBA:
    bspline_basis = _bspline_basis_nb
    group_soft_threshold = _group_soft_threshold_nb
    admm_loop = _admm_loop_nb
else:
    bspline_basis = _bspline_basis_np
    group_soft_threshold = _group_soft_threshold_np
    admm_loop = _admm_loop_np
