"""Deterministic panel quadrature with refinement by node doubling.

Integrands are vectorized callables returning arrays whose last axis
runs over the nodes; products of decaying exponentials are smooth on
each panel, so composite Gauss-Legendre converges fast and the
doubling difference is a reliable error estimate.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss


class QuadratureError(RuntimeError):
    """Raised when refinement stalls; carries the achieved tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


def panel_nodes(a: float, b: float, npanels: int, order: int = 10):
    x, w = leggauss(order)
    edges = np.linspace(a, b, npanels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_panels(f, a: float, b: float, npanels: int, order: int = 10):
    nodes, weights = panel_nodes(a, b, npanels, order)
    vals = np.asarray(f(nodes))
    return vals @ weights


def integrate_refine(f, a: float, b: float, tol: float = 1e-10,
                     order: int = 10, initial_panels: int = 8,
                     max_doublings: int = 10):
    """Integrate f over [a, b]; double panels until stable within tol.

    Returns (value, error_estimate).
    """
    if b <= a:
        probe = np.asarray(f(np.array([b])))
        return np.zeros_like(probe[..., 0]), 0.0
    prev = integrate_panels(f, a, b, initial_panels, order)
    n = initial_panels
    err = np.inf
    for _ in range(max_doublings):
        n *= 2
        cur = integrate_panels(f, a, b, n, order)
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol:
            return cur, err
        prev = cur
    raise QuadratureError(
        f"quadrature did not reach tol={tol:g}; achieved {err:g}", err
    )


def triangle_nodes(a: float, npanels: int, order: int = 10):
    """Nodes/weights for the region a <= s1 <= s2 <= 0."""
    s2, w2 = panel_nodes(a, 0.0, npanels, order)
    u, wu = panel_nodes(0.0, 1.0, npanels, order)
    # s1 = a + (s2 - a) u, ds1 = (s2 - a) du
    span = s2 - a
    s1 = a + span[:, None] * u[None, :]
    wgt = (span * w2)[:, None] * wu[None, :]
    return s1.ravel(), np.repeat(s2, len(u)), wgt.ravel()


def integrate_box_kinked(f, a: float, npanels: int, order: int = 10):
    """Integral of f(s1, s2) over [a,0]^2 split along the s1=s2 kink."""
    s1, s2, w = triangle_nodes(a, npanels, order)
    lower = np.asarray(f(s1, s2)) @ w
    upper = np.asarray(f(s2, s1)) @ w
    return lower + upper


def integrate_box_refine(f, a: float, tol: float = 1e-9, order: int = 10,
                         initial_panels: int = 6, max_doublings: int = 6):
    prev = integrate_box_kinked(f, a, initial_panels, order)
    n = initial_panels
    err = np.inf
    for _ in range(max_doublings):
        n *= 2
        cur = integrate_box_kinked(f, a, n, order)
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol:
            return cur, err
        prev = cur
    raise QuadratureError(
        f"2d quadrature did not reach tol={tol:g}; achieved {err:g}", err
    )
