"""Projection pursuit over Meijer G-function ridge terms.

The fitted surrogate has the form

    f_hat(x) = sum_k  w_k * G_k( relu(v_k . x / (||v_k|| sqrt(d))) ),

built greedily: each stage fits one ridge term to the current residual by
projected gradient descent over the term's real parameters (direction,
Gamma parameters, inner transform), trying every order tuple in the
search set from several random restarts and keeping the lowest-loss
candidate.  After each accepted term every existing term is re-optimized
against the residual that excludes it (back-fitting); updates are kept
only when the total loss does not increase, so the trajectory of
accepted states is monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllCandidatesFailed,
    DegenerateTerm,
    EvaluationError,
    ZeroDirection,
)
from .gfunc import (
    DEFAULT_POLICY,
    H_CONFIGS,
    EvalPolicy,
    MeijerGParams,
    meijer_g,
)

# Numeric guard rails for the inner-transform parameters during descent.
_R_BOUND = 4.0
_S_MIN = 1e-6
_S_MAX = 1e4
_ACCEPT_EPS = 1e-12


@dataclass
class RidgeTerm:
    """One pursuit term: scalar weight, projection direction, G-function."""

    weight: float
    direction: np.ndarray
    g: MeijerGParams

    def __post_init__(self):
        self.weight = float(self.weight)
        self.direction = np.asarray(self.direction, dtype=float).reshape(-1)
        if not np.isfinite(self.weight):
            raise ValueError("weight must be finite")
        if not np.linalg.norm(self.direction) > 0:
            raise ZeroDirection("ridge term direction has zero norm")

    def copy(self) -> "RidgeTerm":
        return RidgeTerm(self.weight, self.direction.copy(), self.g.copy())


@dataclass
class SymbolicModel:
    """Ordered ridge expansion plus feature-space normalization metadata.

    feature_scaling holds one (min, range) pair per model input; the model
    itself always evaluates in the normalized cube [0,1]^dim.
    """

    terms: list[RidgeTerm]
    dim: int
    feature_scaling: list[tuple[float, float]] | None = None

    def __post_init__(self):
        for t in self.terms:
            if t.direction.size != self.dim:
                raise ValueError("term dimension mismatch")
        if self.feature_scaling is not None:
            if len(self.feature_scaling) != self.dim:
                raise ValueError("feature_scaling length mismatch")
            if any(rng <= 0 for _, rng in self.feature_scaling):
                raise ValueError("feature_scaling ranges must be positive")

    def copy(self) -> "SymbolicModel":
        return SymbolicModel(
            [t.copy() for t in self.terms],
            self.dim,
            None if self.feature_scaling is None else list(self.feature_scaling),
        )


@dataclass
class SampleSet:
    """Monte Carlo stand-in for the feature distribution: points in the
    unit cube with their black-box values."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ValueError("points must be a non-empty n x d matrix")
        if self.points.shape[0] != self.values.size:
            raise ValueError("points/values length mismatch")
        if np.any(self.points < 0.0) or np.any(self.points > 1.0):
            raise ValueError("points must lie in [0, 1]^d")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass
class FitConfig:
    """Every optimizer, stopping and tolerance knob of the pursuit,
    explicit and serializable."""

    max_terms: int = 5
    loss_tol: float = 1e-4
    config_set: tuple = H_CONFIGS
    restarts: int = 3
    lr: float = 0.1
    max_iters: int = 300
    fd_eps: float = 1e-6
    backfit_passes: int = 1
    mixup_count: int = -1  # -1 selects 10x the number of base points
    mixup_alpha: float = 1.0
    seed: int = 0
    plateau_patience: int = 15
    plateau_rel_tol: float = 1e-7
    base_samples: int = 128
    policy: EvalPolicy = DEFAULT_POLICY

    def __post_init__(self):
        self.config_set = tuple(tuple(int(v) for v in c) for c in self.config_set)
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")
        if self.loss_tol < 0:
            raise ValueError("loss_tol must be non-negative")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not self.lr > 0:
            raise ValueError("lr must be positive")


@dataclass
class TermReport:
    config: tuple
    restart: int
    iterations: int
    loss: float


@dataclass
class FitReport:
    term_reports: list[TermReport] = field(default_factory=list)
    trajectory: list[float] = field(default_factory=list)
    stop_reason: str = ""
    queries: int = 0


def project(direction, x, eps: float = DEFAULT_POLICY.z_clamp):
    """Ridge argument relu(v.x / (||v|| sqrt(d))), upper-clamped to 1-eps.

    The Cauchy-Schwarz bound keeps the raw value at or below 1 on the
    unit cube; equality is possible, so the top is clamped to stay inside
    the G-function's domain.  Vectorized over rows when x is a matrix.
    """
    v = np.asarray(direction, dtype=float).reshape(-1)
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise ZeroDirection("projection direction has zero norm")
    x_arr = np.asarray(x, dtype=float)
    raw = x_arr @ v / (nv * math.sqrt(v.size))
    out = np.clip(raw, 0.0, 1.0 - eps)
    return float(out) if np.ndim(out) == 0 else out


def evaluate_model(model: SymbolicModel, x, policy: EvalPolicy = DEFAULT_POLICY):
    """Surrogate prediction at x (a point or an n x d matrix of points
    in the normalized cube).  An empty model is identically zero."""
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim == 1
    x_mat = np.atleast_2d(x_arr)
    out = np.zeros(x_mat.shape[0])
    for term in model.terms:
        z = project(term.direction, x_mat, policy.z_clamp)
        out = out + term.weight * meijer_g(term.g, z, policy)
    return float(out[0]) if single else out


def loss(model: SymbolicModel, samples: SampleSet, exclude: int | None = None,
         policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Mean squared residual over the sample set, optionally leaving one
    term's contribution out (the back-fitting objective)."""
    pred = np.zeros(len(samples))
    for idx, term in enumerate(model.terms):
        if exclude is not None and idx == exclude:
            continue
        z = project(term.direction, samples.points, policy.z_clamp)
        pred = pred + term.weight * meijer_g(term.g, z, policy)
    return float(np.mean((samples.values - pred) ** 2))


def refit_weight(g_values, residual) -> float:
    """Closed-form least-squares weight <r, g> / <g, g>."""
    g_arr = np.asarray(g_values, dtype=float).reshape(-1)
    r_arr = np.asarray(residual, dtype=float).reshape(-1)
    denom = float(g_arr @ g_arr)
    if denom == 0.0:
        raise DegenerateTerm("ridge term evaluates to zero everywhere")
    return float(r_arr @ g_arr) / denom


class _CandidateState:
    """Mutable state of one descent run: direction, G parameters, and the
    refit weight/loss at the current point."""

    __slots__ = ("v", "g", "w", "gvals", "resid", "loss")

    def __init__(self, v, g, w, gvals, resid, loss_val):
        self.v = v
        self.g = g
        self.w = w
        self.gvals = gvals
        self.resid = resid
        self.loss = loss_val


def _evaluate_state(X, r, v, g, policy) -> _CandidateState:
    z = project(v, X, policy.z_clamp)
    gvals = meijer_g(g, z, policy)
    w = refit_weight(gvals, r)
    resid = r - w * gvals
    loss_val = float(np.mean(resid**2))
    if not np.isfinite(loss_val):
        raise EvaluationError("non-finite candidate loss")
    return _CandidateState(v, g, w, gvals, resid, loss_val)


def _param_gradient(X, r, state: _CandidateState, cfg: FitConfig):
    """Loss gradient w.r.t. (a, b, r, s) and v.

    G-parameter derivatives come from central differences; the direction
    gradient reuses dG/dz through the chain rule of the projection, with
    subgradient zero where the relu (or the top clamp) is inactive.
    """
    policy = cfg.policy
    v, g, w = state.v, state.g, state.w
    nv = float(np.linalg.norm(v))
    sd = math.sqrt(v.size)
    z_raw = X @ v / (nv * sd)
    z = np.clip(z_raw, 0.0, 1.0 - policy.z_clamp)
    coef = -2.0 * w * state.resid  # d loss / d G, elementwise mean pending

    n_par = g.n_params
    grad_g = np.zeros(n_par)
    for k in range(n_par):
        gp, gm = _perturb_pair(g, k, cfg.fd_eps)
        if gp is None:
            continue
        try:
            hi = meijer_g(gp, z, policy)
            lo = meijer_g(gm, z, policy)
        except EvaluationError:
            continue  # masked coordinate
        step = _param_step(g, k, cfg.fd_eps)
        dg = (hi - lo) / (2.0 * step)
        grad_g[k] = float(np.mean(coef * dg))

    eps_z = cfg.fd_eps
    z_hi = np.clip(z + eps_z, 0.0, 1.0)
    z_lo = np.clip(z - eps_z, 0.0, 1.0)
    dgdz = (meijer_g(g, z_hi, policy) - meijer_g(g, z_lo, policy)) / (z_hi - z_lo)
    active = (z_raw > 0.0) & (z_raw < 1.0 - policy.z_clamp)
    dz_dv = (X / (nv * sd) - np.outer(z_raw, v) / nv**2) * active[:, None]
    grad_v = (coef * dgdz) @ dz_dv / X.shape[0]
    return grad_g, grad_v


def _param_step(g: MeijerGParams, k: int, eps: float) -> float:
    theta = _get_param(g, k)
    return eps * (1.0 + abs(theta))


def _get_param(g: MeijerGParams, k: int) -> float:
    if k < g.p:
        return float(g.a[k])
    if k < g.p + g.q:
        return float(g.b[k - g.p])
    return float(g.r) if k == g.p + g.q else float(g.s)


def _set_param(g: MeijerGParams, k: int, value: float) -> MeijerGParams:
    a, b, r, s = g.a.copy(), g.b.copy(), g.r, g.s
    if k < g.p:
        a[k] = value
    elif k < g.p + g.q:
        b[k - g.p] = value
    elif k == g.p + g.q:
        r = value
    else:
        s = value
    return MeijerGParams(g.m, g.n, g.p, g.q, a=a, b=b, r=r, s=s,
                         extended=g.extended)


def _perturb_pair(g: MeijerGParams, k: int, eps: float):
    theta = _get_param(g, k)
    step = eps * (1.0 + abs(theta))
    lo_val = theta - step
    if k == g.p + g.q + 1 and lo_val <= 0:
        return None, None  # s must stay positive
    return _set_param(g, k, theta + step), _set_param(g, k, lo_val)


def _apply_step(g: MeijerGParams, grad_g: np.ndarray, lr: float) -> MeijerGParams:
    a = g.a - lr * grad_g[: g.p]
    b = g.b - lr * grad_g[g.p: g.p + g.q]
    r = float(np.clip(g.r - lr * grad_g[g.p + g.q], -_R_BOUND, _R_BOUND))
    s = float(np.clip(g.s - lr * grad_g[g.p + g.q + 1], _S_MIN, _S_MAX))
    return MeijerGParams(g.m, g.n, g.p, g.q, a=a, b=b, r=r, s=s,
                         extended=g.extended)


def _descend(X, r, g0: MeijerGParams, v0: np.ndarray, cfg: FitConfig, rng):
    """Projected gradient descent on one candidate; returns the best
    visited state and the iteration count."""
    state = _evaluate_state(X, r, v0, g0, cfg.policy)
    best_loss = state.loss
    stall = 0
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        try:
            grad_g, grad_v = _param_gradient(X, r, state, cfg)
        except EvaluationError:
            break
        if not (np.all(np.isfinite(grad_g)) and np.all(np.isfinite(grad_v))):
            break
        lr_try = cfg.lr
        moved = False
        for _ in range(6):  # initial step plus up to 5 halvings
            g_new = _apply_step(state.g, grad_g, lr_try)
            v_new = state.v - lr_try * grad_v
            if np.linalg.norm(v_new) < 1e-12:
                v_new = rng.standard_normal(v_new.size)
            try:
                trial = _evaluate_state(X, r, v_new, g_new, cfg.policy)
            except EvaluationError:
                lr_try *= 0.5
                continue
            if trial.loss < state.loss:
                state = trial
                moved = True
                break
            lr_try *= 0.5
        if moved and state.loss < best_loss * (1.0 - cfg.plateau_rel_tol):
            best_loss = state.loss
            stall = 0
        else:
            stall += 1
            if stall >= cfg.plateau_patience:
                break
    return state, iters


def _init_candidate(config, dim, cfg: FitConfig, rng):
    m, n, p, q = config
    g = MeijerGParams(
        m, n, p, q,
        a=rng.uniform(-1.0, 1.0, size=p),
        b=rng.uniform(-1.0, 1.0, size=q),
        r=1.0,
        s=1.0,
        extended=config not in H_CONFIGS,
    )
    v = rng.standard_normal(dim)
    while np.linalg.norm(v) < 1e-12:
        v = rng.standard_normal(dim)
    return g, v


def fit_term(residual_samples: SampleSet, cfg: FitConfig, rng_state):
    """Fit one ridge term to a residual.

    Every (order tuple, restart) pair is descended independently from its
    own seeded state; the candidate with the smallest loss wins, with
    ties (within 1e-12) resolved toward the smaller p + q, then search
    order.  Raises AllCandidatesFailed when no candidate survives
    evaluation.
    """
    X, r = residual_samples.points, residual_samples.values
    seed = [int(rng_state)] if np.ndim(rng_state) == 0 else [int(v) for v in rng_state]
    results = []  # (loss, p+q, config_idx, restart_idx, state, iters)
    for ci, config in enumerate(cfg.config_set):
        for ri in range(cfg.restarts):
            rng = np.random.default_rng(seed + [ci, ri])
            g0, v0 = _init_candidate(config, residual_samples.dim, cfg, rng)
            try:
                state, iters = _descend(X, r, g0, v0, cfg, rng)
            except EvaluationError:
                continue
            results.append((state.loss, sum(config[2:]), ci, ri, state, iters))
    if not results:
        raise AllCandidatesFailed("every configuration/restart failed")
    best_loss = min(res[0] for res in results)
    tied = [res for res in results if res[0] <= best_loss + _ACCEPT_EPS]
    tied.sort(key=lambda res: (res[1], res[2], res[3]))
    loss_val, _, ci, ri, state, iters = tied[0]
    term = RidgeTerm(state.w, state.v, state.g)
    report = TermReport(config=cfg.config_set[ci], restart=ri,
                        iterations=iters, loss=loss_val)
    return term, loss_val, report


def backfit(model: SymbolicModel, samples: SampleSet, cfg: FitConfig) -> SymbolicModel:
    """Cyclically re-optimize each term against the residual excluding it.

    Each term is warm-started from its current parameters (same order
    tuple, no restarts) and the update is kept only when the total loss
    does not increase.
    """
    if not model.terms:
        raise ValueError("backfit requires at least one term")
    model = model.copy()
    rng = np.random.default_rng([cfg.seed, 0xBF])
    for _ in range(cfg.backfit_passes):
        for l in range(len(model.terms)):
            r_excl = samples.values - _predict_excluding(model, samples.points, l, cfg.policy)
            current = model.terms[l]
            old_total = float(np.mean((r_excl - _term_values(current, samples.points, cfg.policy)) ** 2))
            try:
                state, _ = _descend(samples.points, r_excl, current.g,
                                    current.direction, cfg, rng)
            except EvaluationError:
                continue
            if state.loss <= old_total:
                model.terms[l] = RidgeTerm(state.w, state.v, state.g)
    return model


def _term_values(term: RidgeTerm, X, policy) -> np.ndarray:
    z = project(term.direction, X, policy.z_clamp)
    return term.weight * meijer_g(term.g, z, policy)


def _predict_excluding(model: SymbolicModel, X, exclude, policy) -> np.ndarray:
    pred = np.zeros(X.shape[0])
    for idx, term in enumerate(model.terms):
        if idx == exclude:
            continue
        pred = pred + _term_values(term, X, policy)
    return pred


def _build_samples(blackbox, cfg: FitConfig, base_points, dim, rng):
    """Assemble the query set: direct samples plus, when a live black-box
    is available, mixup queries at convex combinations of base points."""
    if isinstance(blackbox, SampleSet):
        return blackbox, 0
    if base_points is None:
        if dim is None:
            raise ValueError("a live black-box needs base_points or dim")
        base_points = rng.uniform(0.0, 1.0, size=(cfg.base_samples, dim))
    X0 = np.asarray(base_points, dtype=float)
    y0 = np.asarray(blackbox(X0), dtype=float).reshape(-1)
    n0 = X0.shape[0]
    n_mix = cfg.mixup_count if cfg.mixup_count >= 0 else 10 * n0
    queries = n0
    if n_mix > 0:
        i = rng.integers(0, n0, size=n_mix)
        j = rng.integers(0, n0, size=n_mix)
        lam = rng.beta(cfg.mixup_alpha, cfg.mixup_alpha, size=n_mix)[:, None]
        Xm = lam * X0[i] + (1.0 - lam) * X0[j]
        ym = np.asarray(blackbox(Xm), dtype=float).reshape(-1)
        X0 = np.vstack([X0, Xm])
        y0 = np.concatenate([y0, ym])
        queries += n_mix
    return SampleSet(X0, y0), queries


def symbolic_pursuit(blackbox, cfg: FitConfig | None = None, base_points=None,
                     dim: int | None = None):
    """Fit a symbolic surrogate to a black-box.

    Parameters
    ----------
    blackbox : SampleSet or callable
        Either a labeled sample set, or a callable mapping an (n, d)
        matrix of normalized points to n values.  With a callable, base
        queries are taken at ``base_points`` (or cfg.base_samples uniform
        draws when only ``dim`` is given) and densified with mixup
        queries at convex combinations of them.
    cfg : FitConfig, optional
    base_points, dim : optional
        Query locations for a callable black-box.

    Returns
    -------
    (SymbolicModel, FitReport)
    """
    cfg = cfg or FitConfig()
    rng = np.random.default_rng([cfg.seed, 0x5A])
    samples, queries = _build_samples(blackbox, cfg, base_points, dim, rng)
    dim = samples.dim

    model = SymbolicModel(terms=[], dim=dim)
    report = FitReport(queries=queries)
    current_loss = float(np.mean(samples.values**2))
    report.trajectory.append(current_loss)

    for k in range(cfg.max_terms):
        if math.sqrt(current_loss) < cfg.loss_tol:
            report.stop_reason = f"loss_tol at k={k}"
            return model, report
        residual = samples.values - evaluate_model(model, samples.points, cfg.policy)
        res_samples = SampleSet(samples.points, residual)
        try:
            term, term_loss, term_report = fit_term(res_samples, cfg, [cfg.seed, 1000 + k])
        except AllCandidatesFailed:
            report.stop_reason = f"all_candidates_failed at k={k}"
            return model, report
        if current_loss - term_loss < _ACCEPT_EPS:
            report.stop_reason = f"no_improvement at k={k}"
            return model, report
        model.terms.append(term)
        report.term_reports.append(term_report)
        current_loss = term_loss
        report.trajectory.append(current_loss)
        if cfg.backfit_passes > 0:
            refined = backfit(model, samples, cfg)
            refined_loss = loss(refined, samples, policy=cfg.policy)
            if refined_loss <= current_loss:
                model = refined
                current_loss = refined_loss
            report.trajectory.append(current_loss)

    report.stop_reason = "max_terms"
    if math.sqrt(current_loss) < cfg.loss_tol:
        report.stop_reason = f"loss_tol at k={cfg.max_terms}"
    return model, report
