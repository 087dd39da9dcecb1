"""Sample grids and discrete weighted norms shared by the numerical modules."""

import math

import numpy as np


def cosine_grid(a, b, npts):
    """Chebyshev-Lobatto points on ``[a, b]``, increasing, clustered at the ends."""
    k = np.arange(npts)
    return 0.5 * (a + b) - 0.5 * (b - a) * np.cos(math.pi * k / (npts - 1))


def gauss_on_edges(edges, per_panel=32):
    """Nodes and weights of composite Gauss-Legendre over consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    u, wu = np.polynomial.legendre.leggauss(per_panel)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * u[None, :]).ravel()
    weights = (half[:, None] * wu[None, :]).ravel()
    return nodes, weights


def sup_grid(inner, outer, n_inner=2001, n_outer=64):
    """Cosine-graded points on ``[-inner, inner]`` plus ``n_outer`` points per side
    spread over ``inner < |x| <= outer``."""
    core = cosine_grid(-inner, inner, n_inner)
    if outer <= inner:
        return core
    tail = np.linspace(inner, outer, n_outer + 1)[1:]
    return np.concatenate([-tail[::-1], core, tail])


def refine(grid, factor):
    """Insert ``factor - 1`` equispaced points inside every grid interval."""
    grid = np.asarray(grid, dtype=float)
    t = np.arange(factor) / factor
    fine = (grid[:-1, None] + np.diff(grid)[:, None] * t[None, :]).ravel()
    return np.append(fine, grid[-1])


def lp_norm(values, p, weights=None):
    """Discrete L_p norm: ``max |v|`` for ``p = inf``, else ``(sum w |v|^p)^(1/p)``."""
    v = np.abs(np.asarray(values, dtype=float))
    if math.isinf(p):
        return float(v.max()) if v.size else 0.0
    if weights is None:
        raise ValueError("finite p needs quadrature weights")
    if p == 1:
        return float(np.dot(weights, v))
    scale = v.max() if v.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(scale * np.dot(weights, (v / scale) ** p) ** (1.0 / p))


def golden_max(fun, lo, hi, iters=60):
    """Vectorised golden-section maximisation of ``fun`` on brackets ``[lo, hi]``."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = np.array(lo, dtype=float), np.array(hi, dtype=float)
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc > fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = np.where(left, b - g * (b - a), d)
        new_d = np.where(left, c, a + g * (b - a))
        fnew = fun(np.where(left, new_c, new_d))
        fd, fc = np.where(left, fc, fnew), np.where(left, fnew, fd)
        c, d = new_c, new_d
        if np.all(b - a <= 1e-15 * np.maximum(1.0, np.abs(a))):
            break
    return np.where(fc > fd, c, d)


def sup_norm(fun, grid, keep=0.5):
    """``max |fun|`` over ``grid`` with every local maximum above ``keep`` times
    the grid maximum refined by golden section between its neighbours."""
    grid = np.asarray(grid, dtype=float)
    v = np.abs(np.asarray(fun(grid), dtype=float))
    if v.size == 0:
        return 0.0
    top = float(v.max())
    if v.size < 3 or top == 0.0:
        return top
    inner = np.arange(1, v.size - 1)
    peaks = inner[(v[inner] >= v[inner - 1]) & (v[inner] >= v[inner + 1]) & (v[inner] >= keep * top)]
    if peaks.size == 0:
        return top
    absfun = lambda x: np.abs(np.asarray(fun(x), dtype=float))
    xs = golden_max(absfun, grid[peaks - 1], grid[peaks + 1])
    return float(max(top, np.max(absfun(xs))))


def region_norm(fun, intervals, p, n_inf=4001, panels=48, per_panel=32):
    """L_p norm of ``fun`` over a union of closed intervals.

    ``p = inf`` takes the max over cosine grids, finite ``p`` uses composite
    Gauss-Legendre on cosine-graded panels of each interval.
    """
    if math.isinf(p):
        x = np.concatenate([cosine_grid(a, b, n_inf) for a, b in intervals if b > a] or [np.zeros(0)])
        return lp_norm(fun(x), p) if x.size else 0.0
    parts = [gauss_on_edges(cosine_grid(a, b, panels + 1), per_panel) for a, b in intervals if b > a]
    if not parts:
        return 0.0
    x = np.concatenate([n for n, _ in parts])
    wts = np.concatenate([w for _, w in parts])
    return lp_norm(fun(x), p, wts)


def golden_min(fun, a, b, xtol=1e-12, max_iter=200):
    """Golden-section minimiser of a unimodal ``fun`` on ``[a, b]``; returns ``(x, fun(x))``."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)
