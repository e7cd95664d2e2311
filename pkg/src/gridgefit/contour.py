"""Reference Mellin-Barnes quadrature for Meijer G-functions.

This is the defining contour integral evaluated directly: slow, simple,
and sharing no code path with the residue-series evaluator, which makes
it the independent oracle for cross-checks.

The integration path crosses the real axis at Re(s) = sigma, between the
two Gamma pole families, and its tails bend hyperbolically toward the
half-plane in which the integrand decays (right of the axis when the
ascending pole family dominates convergence, left otherwise).  A straight
vertical line is recovered near the axis; the bent tails are what make
the quadrature converge for every order tuple in the search set,
including those where a fully vertical path diverges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp_special

from .errors import ContourError
from .gfunc import DEFAULT_POLICY, EvalPolicy, MeijerGParams, clamp_z

_BEND_SLOPE = 1.0
_BEND_SMOOTH = 1.0


@dataclass(frozen=True)
class ContourConfig:
    """Quadrature knobs: sigma is the real-axis crossing of the path
    (None selects the midpoint of the pole-free gap), half_height the
    truncation of the path parameter, n_nodes the trapezoid node count."""

    sigma: float | None = None
    half_height: float = 200.0
    n_nodes: int = 6001

    def __post_init__(self):
        if self.n_nodes < 64:
            raise ValueError("n_nodes must be at least 64")
        if not self.half_height > 0:
            raise ValueError("half_height must be positive")


DEFAULT_CONTOUR = ContourConfig()


def pole_gap(g: MeijerGParams) -> tuple[float, float]:
    """Open interval of admissible sigma values (may be unbounded).

    The ascending family starts at min(b_1..b_m) and the descending one
    ends at max(a_1..a_n) - 1; sigma must fall strictly between them.
    """
    right = float(np.min(g.b[: g.m])) if g.m > 0 else np.inf
    left = float(np.max(g.a[: g.n])) - 1.0 if g.n > 0 else -np.inf
    return left, right


def choose_sigma(g: MeijerGParams) -> float:
    left, right = pole_gap(g)
    if left >= right:
        raise ContourError(
            f"pole families overlap: descending end {left} >= ascending start {right}"
        )
    if np.isinf(left) and np.isinf(right):
        return 0.0
    if np.isinf(left):
        return right - 1.0
    if np.isinf(right):
        return left + 1.0
    return 0.5 * (left + right)


def _log_integrand(g: MeijerGParams, s: np.ndarray) -> np.ndarray:
    """log of the Gamma-ratio kernel of the defining integral at points s."""
    total = np.zeros_like(s, dtype=complex)
    for j in range(g.m):
        total += sp_special.loggamma(g.b[j] - s)
    for j in range(g.n):
        total += sp_special.loggamma(1.0 - g.a[j] + s)
    for j in range(g.m, g.q):
        total -= sp_special.loggamma(1.0 - g.b[j] + s)
    for j in range(g.n, g.p):
        total -= sp_special.loggamma(g.a[j] - s)
    return total


def meijer_g_contour(g: MeijerGParams, z: float, cfg: ContourConfig = DEFAULT_CONTOUR,
                     policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Trapezoid quadrature of the defining Mellin-Barnes integral.

    Reference-quality and slow; intended purely as an oracle for the
    series evaluator.  Raises ContourError when no crossing point
    separates the pole families or sigma is placed on the wrong side.
    """
    z = float(np.clip(z, policy.z_clamp, 1.0 - policy.z_clamp))
    zp = g.s * z**g.r

    left, right = pole_gap(g)
    sigma = cfg.sigma if cfg.sigma is not None else choose_sigma(g)
    if not (left < sigma < right):
        raise ContourError(
            f"sigma={sigma} does not separate pole families ({left}, {right})"
        )

    if g.p < g.q:
        direction = 1.0
    elif g.p > g.q:
        direction = -1.0
    else:
        if abs(zp - 1.0) < 1e-12:
            raise ContourError("argument on the unit circle for p == q")
        direction = 1.0 if zp < 1.0 else -1.0

    t = np.linspace(-cfg.half_height, cfg.half_height, cfg.n_nodes)
    bend = _BEND_SLOPE * (np.sqrt(t * t + _BEND_SMOOTH**2) - _BEND_SMOOTH)
    s = sigma + direction * bend + 1j * t
    ds = direction * _BEND_SLOPE * t / np.sqrt(t * t + _BEND_SMOOTH**2) + 1j

    log_vals = _log_integrand(g, s) + s * np.log(zp)
    # Work in log space; underflowing tail nodes contribute exactly zero.
    log_real = np.real(log_vals)
    vals = np.where(log_real < 700.0, np.exp(np.minimum(log_real, 700.0)), np.inf) \
        * np.exp(1j * np.imag(log_vals))
    if not np.all(np.isfinite(vals)):
        raise ContourError("integrand overflow along the contour")
    integrand = vals * ds
    h = t[1] - t[0]
    total = np.sum(integrand)
    total -= 0.5 * (integrand[0] + integrand[-1])
    return float(np.real(total * h / (2.0j * np.pi)))
