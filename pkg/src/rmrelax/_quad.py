"""Quadrature plumbing: graded Gauss-Legendre panels and Filon-type sums."""

import numpy as np
from scipy import special

_GL_CACHE = {}


def gauss_legendre(m):
    if m not in _GL_CACHE:
        _GL_CACHE[m] = np.polynomial.legendre.leggauss(m)
    return _GL_CACHE[m]


def graded_breaks(centers, widths, lo, hi, ratio=2.0, max_panel=None):
    """Panel edges on [lo, hi] refined geometrically towards each center.

    Around a center ``c`` with width ``w`` edges are placed at
    ``c +- w * ratio**k`` until they leave [lo, hi].  Edges closer than a
    fraction of the local panel size are merged.
    """
    pts = [lo, hi]
    for c, w in zip(centers, widths):
        if not (lo - 1e300 < c < hi + 1e300) or not w > 0:
            continue
        if lo < c < hi:
            pts.append(c)
        d = w
        span = max(hi - c, c - lo)
        while d < span:
            for x in (c - d, c + d):
                if lo < x < hi:
                    pts.append(x)
            d *= ratio
    pts = np.unique(np.asarray(pts, dtype=float))
    if max_panel is not None:
        extra = []
        for a, b in zip(pts[:-1], pts[1:]):
            k = int(np.ceil((b - a) / max_panel))
            if k > 1:
                extra.extend(a + (b - a) * np.arange(1, k) / k)
        pts = np.unique(np.concatenate([pts, extra]))
    return _merge_close(pts)


def _merge_close(pts, frac=0.25):
    """Drop interior edges much closer to a neighbour than the panels around them."""
    if pts.size <= 3:
        return pts
    keep = [pts[0]]
    for i in range(1, pts.size - 1):
        left = pts[i] - keep[-1]
        right = pts[i + 1] - pts[i]
        if left < frac * right and len(keep) > 1:
            continue
        keep.append(pts[i])
    keep.append(pts[-1])
    return np.asarray(keep)


def balance(breaks, ratio=2.0):
    """Subdivide panels so neighbouring widths differ by at most about `ratio`.

    Large panels next to small ones are split geometrically from both ends,
    which keeps Gauss-Legendre accurate for integrands with near-endpoint
    structure.
    """
    br = np.asarray(breaks, dtype=float)
    h = np.diff(br)
    if h.size < 2:
        return br
    out = [br[0]]
    for i in range(h.size):
        a, b = br[i], br[i + 1]
        hl = h[i - 1] if i > 0 else h[i]
        hr = h[i + 1] if i + 1 < h.size else h[i]
        left, right = [], []
        x, step = a, ratio * hl
        y, step_r = b, ratio * hr
        while y - x > 1.5 * max(step, step_r) and (step < h[i] or step_r < h[i]):
            if step <= step_r:
                x += step
                left.append(x)
                step *= ratio
            else:
                y -= step_r
                right.append(y)
                step_r *= ratio
        out.extend(left)
        out.extend(right[::-1])
        out.append(b)
    return np.asarray(out)


def panel_nodes(breaks, m=10):
    """Nodes and weights of m-point Gauss-Legendre on every panel."""
    x, w = gauss_legendre(m)
    a = breaks[:-1, None]
    b = breaks[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def tail_nodes(edge, scale, direction, m=16):
    """Nodes for int_edge^{+-inf} via ``x = edge +- scale * u / (1 - u)``.

    Exact for integrands decaying like ``1/x**2`` up to polynomial accuracy
    in ``u``.
    """
    x, w = gauss_legendre(m)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    jac = scale / (1.0 - u) ** 2
    nodes = edge + direction * scale * u / (1.0 - u)
    return nodes, wu * jac


def line_nodes(centers, widths, lo, hi, tail_scale, m=10, ratio=2.0, max_panel=None, tails=True):
    """Composite rule for int_{-inf}^{inf} (or [lo, hi] if tails is False)."""
    br = graded_breaks(centers, widths, lo, hi, ratio=ratio, max_panel=max_panel)
    x, w = panel_nodes(br, m)
    if tails:
        xl, wl = tail_nodes(lo, tail_scale, -1, m=2 * m)
        xr, wr = tail_nodes(hi, tail_scale, +1, m=2 * m)
        x = np.concatenate([xl[::-1], x, xr])
        w = np.concatenate([wl[::-1], w, wr])
    return x, w


def filon_legendre(breaks, values, t, m):
    """Compute ``int f(omega) exp(i omega t) d omega`` panel by panel.

    `values` holds f at the m Gauss-Legendre nodes of each panel (shape
    ``(n_panels, m, ...)``).  On each panel f is expanded in Legendre
    polynomials and integrated exactly against the exponential, so large
    ``t * panel`` products cost nothing extra.

    Returns an array of shape ``(len(t),) + values.shape[2:]``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x, w = gauss_legendre(m)
    k = np.arange(m)
    P = np.array([special.eval_legendre(kk, x) for kk in k])  # (m, m)
    proj = (2 * k[:, None] + 1) / 2.0 * P * w[None, :]  # coefficients = proj @ f
    coef = np.einsum("kj,pj...->pk...", proj, values)  # (n_panels, m, ...)
    a = breaks[:-1]
    b = breaks[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    theta = half[None, :] * t[:, None]  # (nt, n_panels)
    jk = np.stack([special.spherical_jn(kk, theta) for kk in k], axis=-1)  # (nt, np, m)
    jk = jk * (2.0 * (1j) ** k)
    phase = np.exp(1j * mid[None, :] * t[:, None]) * half[None, :]  # (nt, np)
    return np.einsum("tp,tpk,pk...->t...", phase, jk, coef)
