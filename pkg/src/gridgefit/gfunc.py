"""Numerical Meijer G-function machinery.

The production evaluator expands G^{m,n}_{p,q} as a finite sum of residues
over the ascending pole family (one generalized hypergeometric series per
pole row), which is fast and stable for arguments inside the unit interval.
Order tuples with p > q, whose direct expansion diverges, are routed
through the exact argument-inversion identity

    G^{m,n}_{p,q}(z | a; b) = G^{n,m}_{q,p}(1/z | 1-b; 1-a),

as are p == q tuples whenever the inner argument leaves the unit disk.
A slow Mellin-Barnes quadrature lives in :mod:`gridgefit.contour` and is
used only as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special as sp_special

from .errors import DivergenceError, NonConvergence, PoleError

try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is an optional speedup
    _njit = None

# Order tuples the fitting engine searches over.  Together their families
# cover the familiar exponential, rational, logarithmic, trigonometric and
# Bessel-type shapes arising as Phi(w * z^r) * z^t.
H_CONFIGS: tuple[tuple[int, int, int, int], ...] = (
    (1, 0, 0, 2),
    (0, 1, 3, 1),
    (2, 1, 2, 3),
    (2, 2, 3, 3),
    (2, 0, 1, 3),
)

# Additional order tuples accepted for tests and identity checks.
EXTENDED_CONFIGS: tuple[tuple[int, int, int, int], ...] = (
    (1, 0, 0, 1),
    (1, 1, 1, 1),
    (1, 2, 2, 2),
)

_INT_DETECT_TOL = 1e-9


@dataclass(frozen=True)
class EvalPolicy:
    """Truncation and regularization knobs for series evaluation.

    max_terms caps the inner hypergeometric summations; 600 keeps the
    slowest in-family series (term ratio ~0.9 near the top of the unit
    interval) within the series_tol truncation target.
    """

    series_tol: float = 1e-10
    max_terms: int = 600
    pole_jitter: float = 1e-5
    z_clamp: float = 1e-6

    def __post_init__(self):
        if not self.series_tol > 0:
            raise ValueError("series_tol must be positive")
        if not 0 < self.z_clamp < 0.5:
            raise ValueError("z_clamp must lie in (0, 0.5)")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


DEFAULT_POLICY = EvalPolicy()


@dataclass
class MeijerGParams:
    """One Meijer G-function: orders (m, n, p, q), real parameter arrays
    a (length p) and b (length q), and the inner argument transform
    z -> s * z**r applied before evaluation."""

    m: int
    n: int
    p: int
    q: int
    a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))
    r: float = 1.0
    s: float = 1.0
    extended: bool = False

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float).reshape(-1)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.r = float(self.r)
        self.s = float(self.s)
        if min(self.m, self.n, self.p, self.q) < 0:
            raise ValueError("orders must be non-negative")
        if self.m > self.q or self.n > self.p:
            raise ValueError("need m <= q and n <= p")
        if self.a.size != self.p or self.b.size != self.q:
            raise ValueError("parameter array lengths must equal p and q")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise ValueError("parameters must be finite")
        if self.config not in H_CONFIGS and not self.extended:
            raise ValueError(
                f"order tuple {self.config} is outside the search set; "
                "pass extended=True for test-only configurations"
            )
        if not (np.isfinite(self.r) and np.isfinite(self.s)):
            raise ValueError("r and s must be finite")
        if not self.s > 0:
            raise ValueError("inner scale s must be positive")

    @property
    def config(self) -> tuple[int, int, int, int]:
        return (self.m, self.n, self.p, self.q)

    @property
    def n_params(self) -> int:
        """Number of optimizable real parameters: p + q + 2."""
        return self.p + self.q + 2

    def copy(self) -> "MeijerGParams":
        return replace(self, a=self.a.copy(), b=self.b.copy())


def ln_gamma(x: float) -> tuple[float, float]:
    """Natural log of |Gamma(x)| together with the sign of Gamma(x).

    Raises PoleError at non-positive integers, where Gamma has poles.
    """
    x = float(x)
    if x <= 0 and x == np.floor(x):
        raise PoleError(f"Gamma pole at {x}")
    return float(sp_special.gammaln(x)), float(sp_special.gammasgn(x))


def _is_nonpositive_integer(x: float, tol: float = 1e-12) -> bool:
    return x < 0.5 and abs(x - round(x)) < tol and round(x) <= 0


def pfq(a_num, b_den, z, policy: EvalPolicy = DEFAULT_POLICY):
    """Generalized hypergeometric series pFq by direct term summation.

    Vectorized over ``z``.  Summation stops once the term magnitude stays
    below series_tol times the partial sum for three consecutive terms.
    Terminating series (a non-positive-integer upper parameter) end the
    same way because all later terms vanish.

    The fast path sums in float64 while tracking the term-magnitude
    envelope; elements whose cancellation leaves the float64 result with
    fewer correct digits than series_tol asks for are resummed in
    arbitrary precision.
    """
    a_num = np.asarray(a_num, dtype=float).reshape(-1)
    b_den = np.asarray(b_den, dtype=float).reshape(-1)
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)

    for bj in b_den:
        if _is_nonpositive_integer(bj):
            raise PoleError(f"pFq lower parameter {bj} is a non-positive integer")
    p_, q_ = a_num.size, b_den.size
    terminating = any(_is_nonpositive_integer(aj) for aj in a_num)
    if p_ > q_ + 1 and np.any(z_arr != 0.0) and not terminating:
        raise DivergenceError(f"{p_}F{q_} diverges for z != 0")
    if p_ == q_ + 1 and np.any(np.abs(z_arr) >= 1.0) and not terminating:
        raise DivergenceError(f"{p_}F{q_} requires |z| < 1")

    z_c = np.ascontiguousarray(z_arr)
    with np.errstate(over="ignore", invalid="ignore"):
        total, peak, n_used, converged = _sum_series(
            a_num, b_den, z_c, policy.series_tol, policy.max_terms
        )
    tiny = np.finfo(float).tiny
    eps64 = np.finfo(float).eps
    if not converged:
        if np.all(np.isfinite(total)):
            raise NonConvergence(
                f"pFq did not converge within {policy.max_terms} terms"
            )
        raise NonConvergence("series overflowed before converging")
    bad = ~np.isfinite(total)
    bad |= eps64 * peak * n_used > policy.series_tol * np.maximum(np.abs(total), tiny)
    if np.any(bad):
        for idx in np.nonzero(bad)[0]:
            total[idx] = _pfq_highprec(a_num, b_den, float(z_arr[idx]),
                                       float(peak[idx]), policy)
    return float(total[0]) if scalar else total


def _sum_series_py(a_num, b_den, z, tol, max_terms):
    term = np.ones_like(z)
    total = np.ones_like(z)
    peak = np.ones_like(z)
    streak = 0
    for k in range(max_terms):
        num = 1.0
        for aj in a_num:
            num *= aj + k
        den = float(k + 1)
        for bj in b_den:
            den *= bj + k
        term = term * (num / den) * z
        total = total + term
        np.maximum(peak, np.abs(term), out=peak)
        ref = float(np.max(np.abs(total)))
        live = float(np.max(np.abs(term)))
        if live < tol * ref:
            streak += 1
            if streak >= 3:
                return total, peak, k + 1, True
        else:
            streak = 0
    return total, peak, max_terms, False


if _njit is not None:
    @_njit(cache=True)
    def _sum_series_jit(a_num, b_den, z, tol, max_terms):  # pragma: no cover
        n = z.shape[0]
        term = np.ones(n)
        total = np.ones(n)
        peak = np.ones(n)
        streak = 0
        for k in range(max_terms):
            num = 1.0
            for aj in a_num:
                num *= aj + k
            den = k + 1.0
            for bj in b_den:
                den *= bj + k
            c = num / den
            live = 0.0
            ref = 1e-300
            for i in range(n):
                t = term[i] * c * z[i]
                term[i] = t
                total[i] += t
                at = abs(t)
                if at > peak[i]:
                    peak[i] = at
                if at > live:
                    live = at
                av = abs(total[i])
                if av > ref:
                    ref = av
            if live < tol * ref:
                streak += 1
                if streak >= 3:
                    return total, peak, k + 1, True
            else:
                streak = 0
        return total, peak, max_terms, False

    _sum_series = _sum_series_jit
else:  # pragma: no cover
    _sum_series = _sum_series_py


def _pfq_highprec(a_num, b_den, z: float, peak: float, policy: EvalPolicy) -> float:
    """Resummation of one deeply-cancelling series in arbitrary precision."""
    import mpmath as mp

    extra = min(int(np.log10(min(max(peak, 1.0), 1e300))) + 10, 500)
    with mp.workdps(20 + extra):
        a_mp = [mp.mpf(v) for v in a_num]
        b_mp = [mp.mpf(v) for v in b_den]
        z_mp = mp.mpf(z)
        term = mp.mpf(1)
        total = mp.mpf(1)
        streak = 0
        for k in range(policy.max_terms):
            num = mp.mpf(1)
            for aj in a_mp:
                num *= aj + k
            den = mp.mpf(k + 1)
            for bj in b_mp:
                den *= bj + k
            term = term * num / den * z_mp
            total += term
            if abs(term) < policy.series_tol * max(abs(total), mp.mpf(1e-300)):
                streak += 1
                if streak >= 3:
                    return float(total)
            else:
                streak = 0
    raise NonConvergence(
        f"pFq did not converge within {policy.max_terms} terms"
    )


def _jittered(b: np.ndarray, m: int, q: int, policy: EvalPolicy) -> np.ndarray:
    """Perturb later b entries away from pole-producing integer
    differences, keeping every residue simple.

    Within the ascending block (h, j < m) any integer difference makes a
    higher-order pole; against the trailing block (j >= m) only a
    positive integer b_j - b_h does (it pins an inner series denominator
    parameter at a non-positive integer).
    """
    b = b.copy()
    for _ in range(3):
        moved = False
        for h in range(m):
            for j in range(q):
                if j == h:
                    continue
                diff = b[h] - b[j]
                integral = abs(diff - round(diff)) < _INT_DETECT_TOL
                if not integral:
                    continue
                if j >= m and round(diff) > -1:
                    continue  # harmless: no Gamma factor reaches a pole
                later = max(h, j)
                b[later] += policy.pole_jitter * (1.0 + abs(b[later]))
                moved = True
        if not moved:
            return b
    return b


def _inverted_orders(m, n, p, q, a, b):
    """Parameters of G^{n,m}_{q,p}(1/z | 1-b; 1-a)."""
    return n, m, q, p, 1.0 - b, 1.0 - a


def _slater(m, n, p, q, a, b, zp, policy: EvalPolicy):
    """Residue-series value of G^{m,n}_{p,q} at positive arguments zp.

    Valid for p < q (any argument) and p == q with |zp| < 1.  One
    hypergeometric series is summed per ascending pole row b_h; rows
    whose Gamma prefactor hits a denominator pole contribute exactly
    zero and are skipped.
    """
    b = _jittered(b, m, q, policy)
    log_zp = np.log(zp)
    sign_arg = -1.0 if (p - m - n) % 2 else 1.0
    total = np.zeros_like(zp)
    for h in range(m):
        bh = b[h]
        log_pref = 0.0
        sign = 1.0
        dead = False
        for j in range(m):
            if j != h:
                lg, sg = ln_gamma(b[j] - bh)  # jitter keeps this off poles
                log_pref += lg
                sign *= sg
        for j in range(n):
            lg, sg = ln_gamma(1.0 + bh - a[j])
            log_pref += lg
            sign *= sg
        for j in range(m, q):
            try:
                lg, sg = ln_gamma(1.0 + bh - b[j])
            except PoleError:
                dead = True  # 1/Gamma(-k) = 0 kills the whole row
                break
            log_pref -= lg
            sign *= sg
        if not dead:
            for j in range(n, p):
                try:
                    lg, sg = ln_gamma(a[j] - bh)
                except PoleError:
                    dead = True
                    break
                log_pref -= lg
                sign *= sg
        if dead:
            continue
        upper = 1.0 + bh - a
        lower = np.delete(1.0 + bh - b, h)
        series = pfq(upper, lower, sign_arg * zp, policy)
        total = total + sign * np.exp(log_pref + bh * log_zp) * series
    if not np.all(np.isfinite(total)):
        raise NonConvergence("residue series overflowed")
    return total


def _eval_arg(m, n, p, q, a, b, zp, policy, allow_invert=True):
    if p > q:
        if not allow_invert:
            raise NonConvergence("no convergent expansion for p > q")
        mi, ni, pi, qi, ai, bi = _inverted_orders(m, n, p, q, a, b)
        return _eval_arg(mi, ni, pi, qi, ai, bi, 1.0 / zp, policy, False)
    if p == q and allow_invert:
        hi = zp >= 1.0 - policy.z_clamp
        if np.any(hi):
            out = np.empty_like(zp)
            mi, ni, pi, qi, ai, bi = _inverted_orders(m, n, p, q, a, b)
            out[hi] = _eval_arg(mi, ni, pi, qi, ai, bi, 1.0 / zp[hi], policy, False)
            lo = ~hi
            if np.any(lo):
                out[lo] = _slater(m, n, p, q, a, b, zp[lo], policy)
            return out
    try:
        return _slater(m, n, p, q, a, b, zp, policy)
    except DivergenceError as exc:
        # Arguments pinned against the unit circle after inversion.
        raise NonConvergence(str(exc)) from exc


def clamp_z(z, policy: EvalPolicy = DEFAULT_POLICY):
    """Clamp arguments into [z_clamp, 1 - z_clamp]; the defining integral
    excludes z = 0 and |z| = 1."""
    return np.clip(z, policy.z_clamp, 1.0 - policy.z_clamp)


def meijer_g(g: MeijerGParams, z, policy: EvalPolicy = DEFAULT_POLICY):
    """Evaluate G^{m,n}_{p,q}(a; b | s * z**r) for z in the unit interval.

    Vectorized over ``z``; scalar input returns a float.  Raises
    PoleError when a Gamma pole survives jitter and NonConvergence when
    no expansion converges within the policy's term budget.
    """
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = clamp_z(np.atleast_1d(z_arr), policy)
    zp = g.s * z_arr**g.r
    out = _eval_arg(g.m, g.n, g.p, g.q, g.a, g.b, zp, policy)
    return float(out[0]) if scalar else out


def grad_z(g: MeijerGParams, z: float, eps: float = 1e-6,
           policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Central-difference derivative dG/dz, inner transform included."""
    z = float(z)
    step = min(eps, 0.5 * z, 0.5 * (1.0 - z))
    if step <= 0:
        raise ValueError("z +/- eps must stay inside (0, 1)")
    hi = meijer_g(g, z + step, policy)
    lo = meijer_g(g, z - step, policy)
    return (hi - lo) / (2.0 * step)


def grad_params(g: MeijerGParams, z, eps: float = 1e-6,
                policy: EvalPolicy = DEFAULT_POLICY):
    """Central finite differences of G with respect to (a, b, r, s).

    Returns an array of length p + q + 2 ordered as
    [dG/da_1 .. dG/da_p, dG/db_1 .. dG/db_q, dG/dr, dG/ds], vectorized
    over ``z`` (shape (p+q+2,) + z.shape).  Coordinates whose perturbed
    evaluation fails are returned as NaN so the caller can mask them; a
    failure of the unperturbed evaluation propagates.
    """
    z_arr = np.asarray(z, dtype=float)
    meijer_g(g, z_arr, policy)  # surface PoleError at the base point
    out = np.full((g.n_params,) + np.atleast_1d(z_arr).shape, np.nan)

    def central(build, theta):
        step = eps * (1.0 + abs(theta))
        hi = meijer_g(build(theta + step), z_arr, policy)
        lo = meijer_g(build(theta - step), z_arr, policy)
        return (np.atleast_1d(hi) - np.atleast_1d(lo)) / (2.0 * step)

    idx = 0
    for i in range(g.p):
        def build(t, i=i):
            a = g.a.copy()
            a[i] = t
            return replace(g, a=a)
        try:
            out[idx] = central(build, g.a[i])
        except (PoleError, NonConvergence, ValueError):
            pass
        idx += 1
    for j in range(g.q):
        def build(t, j=j):
            b = g.b.copy()
            b[j] = t
            return replace(g, b=b)
        try:
            out[idx] = central(build, g.b[j])
        except (PoleError, NonConvergence, ValueError):
            pass
        idx += 1
    try:
        out[idx] = central(lambda t: replace(g, r=t), g.r)
    except (PoleError, NonConvergence, ValueError):
        pass
    try:
        out[idx + 1] = central(lambda t: replace(g, s=t), g.s)
    except (PoleError, NonConvergence, ValueError):
        pass
    if z_arr.ndim == 0:
        return out[:, 0]
    return out


def insert_cancel_pair(g: MeijerGParams, c: float, branch: str) -> MeijerGParams:
    """Embed g into the next-larger order family by appending a cancelling
    parameter pair with common value ``c``.

    branch "m": c joins the ascending-pole block of b and the trailing
    block of a, realizing G^{m,n}_{p,q} ⊂ G^{m+1,n}_{p+1,q+1}.
    branch "n": c joins the leading block of a and the trailing block of
    b, realizing G^{m,n}_{p,q} ⊂ G^{m,n+1}_{p+1,q+1}.
    """
    c = float(c)
    if branch == "m":
        m2, n2 = g.m + 1, g.n
        a2 = np.append(g.a, c)
        b2 = np.concatenate([g.b[: g.m], [c], g.b[g.m:]])
    elif branch == "n":
        m2, n2 = g.m, g.n + 1
        a2 = np.concatenate([g.a[: g.n], [c], g.a[g.n:]])
        b2 = np.append(g.b, c)
    else:
        raise ValueError("branch must be 'm' or 'n'")
    cfg = (m2, n2, g.p + 1, g.q + 1)
    return MeijerGParams(*cfg, a=a2, b=b2, r=g.r, s=g.s,
                         extended=cfg not in H_CONFIGS)


def reduce_check(g_big: MeijerGParams, g_small: MeijerGParams, zs) -> float:
    """Max absolute deviation |G_big(z) - G_small(z)| over the grid zs.

    g_big must be g_small with one cancelling pair appended; a small
    deviation confirms the order-family inclusion numerically.
    """
    zs = np.asarray(zs, dtype=float)
    big = meijer_g(g_big, zs)
    small = meijer_g(g_small, zs)
    return float(np.max(np.abs(big - small)))
