"""Human-readable views of a fitted symbolic model.

A fitted surrogate is a short sum of G-function ridge terms, so local
polynomial pictures fall out of one-dimensional Taylor expansions of
each term's univariate G-function: the first order yields a linear model
whose folded coefficient vector doubles as a feature-importance
estimate, the second order adds a rank-one interaction matrix per term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gfunc import DEFAULT_POLICY, H_CONFIGS, EvalPolicy, MeijerGParams, meijer_g
from .pursuit import RidgeTerm, SymbolicModel, evaluate_model, project

_KINK_SHIFT = 1e-4


@dataclass
class Taylor1Report:
    """First-order expansion around base_point.

    In ridge coordinates z_k: f1(x) = c0 + sum_k c1[k] * z_k(x); folded
    into feature space: f1(x) = offset + folded_v . x.  base_value is the
    model value at the base point, kept exact for evaluation.
    """

    base_point: np.ndarray
    base_value: float
    c0: float
    c1: np.ndarray
    folded_v: np.ndarray
    offset: float
    shifted: bool = False

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return self.base_value + float(self.folded_v @ (x - self.base_point))


@dataclass
class Taylor2Report(Taylor1Report):
    """Adds per-term quadratic coefficients and the symmetric d x d
    feature-interaction matrix sum_k c2[k] v_k v_k^T / (||v_k||^2 d)."""

    c2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    interactions: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    negligible: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


def _base_point_off_kinks(model: SymbolicModel, x0, policy: EvalPolicy):
    """Shift x0 slightly along any term direction whose projection sits
    exactly at the relu kink, where the expansion is undefined.  Points
    strictly inside a term's dead zone are left alone (the term's
    gradient there is genuinely zero)."""
    x0 = np.asarray(x0, dtype=float).copy()
    shifted = False
    for term in model.terms:
        for _ in range(8):
            raw = float(
                term.direction @ x0
                / (np.linalg.norm(term.direction) * math.sqrt(model.dim))
            )
            if abs(raw) > 1e-9:
                break
            step = _KINK_SHIFT * term.direction / np.linalg.norm(term.direction)
            x0 = np.clip(x0 + step, 0.0, 1.0)
            shifted = True
    return x0, shifted


def _term_z(term: RidgeTerm, x0, policy: EvalPolicy) -> float:
    return float(project(term.direction, x0, policy.z_clamp))


def _g_derivatives(g: MeijerGParams, z: float, policy: EvalPolicy,
                   order: int = 1, eps: float = 1e-4):
    """First (and optionally second) derivative of the univariate
    G-function by central differences, argument transform included.
    The stencil is pulled inside the clamped domain near its edges."""
    h = eps
    z = min(max(z, policy.z_clamp + h), 1.0 - policy.z_clamp - h)
    hi = meijer_g(g, z + h, policy)
    lo = meijer_g(g, z - h, policy)
    d1 = (hi - lo) / (2.0 * h)
    if order == 1:
        return d1, None
    mid = meijer_g(g, z, policy)
    d2 = (hi - 2.0 * mid + lo) / (h * h)
    return d1, d2


def taylor1(model: SymbolicModel, x0, policy: EvalPolicy = DEFAULT_POLICY) -> Taylor1Report:
    """First-order Taylor report of the surrogate at x0.

    c1[k] = w_k * G_k'(z_k(x0)); the folded vector collects the ridge
    chain rule over terms whose relu is active, so it equals the model
    gradient away from kinks.
    """
    x0, shifted = _base_point_off_kinks(model, x0, policy)
    d = model.dim
    base_value = evaluate_model(model, x0, policy)
    c1 = np.zeros(len(model.terms))
    folded = np.zeros(d)
    for k, term in enumerate(model.terms):
        z_k = _term_z(term, x0, policy)
        raw = float(term.direction @ x0 / (np.linalg.norm(term.direction) * math.sqrt(d)))
        d1, _ = _g_derivatives(term.g, z_k, policy)
        c1[k] = term.weight * d1
        if raw > 0.0:
            folded += c1[k] * term.direction / (np.linalg.norm(term.direction) * math.sqrt(d))
    zs = np.array([_term_z(t, x0, policy) for t in model.terms])
    c0 = base_value - float(c1 @ zs) if len(model.terms) else base_value
    offset = base_value - float(folded @ x0)
    return Taylor1Report(
        base_point=x0,
        base_value=base_value,
        c0=c0,
        c1=c1,
        folded_v=folded,
        offset=offset,
        shifted=shifted,
    )


def taylor2(model: SymbolicModel, x0, policy: EvalPolicy = DEFAULT_POLICY,
            negligible_tol: float = 1e-6) -> Taylor2Report:
    """Second-order Taylor report: adds c2[k] = w_k G_k''(z_k)/2 and the
    feature-interaction matrix; terms with |c2| below negligible_tol are
    flagged so readers can drop them."""
    first = taylor1(model, x0, policy)
    x0 = first.base_point
    d = model.dim
    c2 = np.zeros(len(model.terms))
    inter = np.zeros((d, d))
    for k, term in enumerate(model.terms):
        z_k = _term_z(term, x0, policy)
        _, d2 = _g_derivatives(term.g, z_k, policy, order=2)
        c2[k] = 0.5 * term.weight * d2
        v = term.direction
        inter += c2[k] * np.outer(v, v) / (float(v @ v) * d)
    inter = 0.5 * (inter + inter.T)  # exact symmetry under roundoff
    return Taylor2Report(
        base_point=first.base_point,
        base_value=first.base_value,
        c0=first.c0,
        c1=first.c1,
        folded_v=first.folded_v,
        offset=first.offset,
        shifted=first.shifted,
        c2=c2,
        interactions=inter,
        negligible=np.abs(c2) < negligible_tol,
    )


def evaluate_quadratic(report: Taylor2Report, model: SymbolicModel, x,
                       policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Value of the second-order expansion at x (exact at the base point)."""
    x = np.asarray(x, dtype=float)
    lin = report.evaluate(x)
    quad = 0.0
    for k, term in enumerate(model.terms):
        z_x = _term_z(term, x, policy)
        z_0 = _term_z(term, report.base_point, policy)
        quad += report.c2[k] * (z_x - z_0) ** 2
    return lin + quad


def feature_importance(model: SymbolicModel, x0, normalize: bool = False,
                       policy: EvalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Gradient-based importance at a point: the folded first-order
    vector, optionally scaled to unit norm for cross-method comparison."""
    if not model.terms:
        return np.zeros(model.dim)
    v = taylor1(model, x0, policy).folded_v
    if normalize:
        nv = np.linalg.norm(v)
        if nv > 0:
            v = v / nv
    return v


def mean_importance(model: SymbolicModel, points, normalize: bool = True,
                    policy: EvalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Dataset-level importance: average of per-point folded vectors."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    acc = np.zeros(model.dim)
    for row in points:
        acc += feature_importance(model, row, policy=policy)
    acc /= points.shape[0]
    if normalize:
        nv = np.linalg.norm(acc)
        if nv > 0:
            acc = acc / nv
    return acc


@dataclass
class ExpressionDoc:
    """Renderings of the fitted expansion: a display form at 6
    significant digits, a LaTeX form, and a full-precision machine block
    that parses back to the exact parameters."""

    plain: str
    latex: str
    machine: str


def _fmt6(x: float) -> str:
    return f"{x:.6g}"


def to_expression(model: SymbolicModel) -> ExpressionDoc:
    """Deterministic rendering of the model, terms in fitted order."""
    d = model.dim
    if not model.terms:
        plain_terms = ["f(x) = 0"]
        latex_terms = [r"\hat{f}(x) = 0"]
    else:
        plain_parts = []
        latex_parts = []
        for k, t in enumerate(model.terms, start=1):
            m, n, p, q = t.g.config
            a_txt = ",".join(_fmt6(v) for v in t.g.a) or "-"
            b_txt = ",".join(_fmt6(v) for v in t.g.b) or "-"
            v_txt = ",".join(_fmt6(v) for v in t.direction)
            arg = f"{_fmt6(t.g.s)}*z{k}^{_fmt6(t.g.r)}"
            plain_parts.append(
                f"{_fmt6(t.weight)} * G^{m},{n}_{p},{q}({a_txt}; {b_txt} | {arg})"
                f"  with z{k} = relu(({v_txt}).x / (||v||*sqrt({d})))"
            )
            latex_parts.append(
                rf"{_fmt6(t.weight)} \, G^{{{m},{n}}}_{{{p},{q}}}\!\left("
                rf"\left.\begin{{matrix}}{a_txt}\\{b_txt}\end{{matrix}}\right| "
                rf"{_fmt6(t.g.s)} z_{{{k}}}^{{{_fmt6(t.g.r)}}}\right)"
            )
        plain_terms = ["f(x) = " + "\n     + ".join(plain_parts)]
        latex_terms = [r"\hat{f}(x) = " + " + ".join(latex_parts)]
    machine = render_machine_block(model)
    plain = plain_terms[0] + "\n\n" + machine
    return ExpressionDoc(plain=plain, latex=latex_terms[0], machine=machine)


def render_machine_block(model: SymbolicModel) -> str:
    lines = ["[model]", f"dim = {model.dim}", f"terms = {len(model.terms)}"]
    for k, t in enumerate(model.terms):
        lines.append(f"term {k}")
        lines.append(f"  config = {','.join(str(v) for v in t.g.config)}")
        lines.append(f"  weight = {t.weight!r}")
        lines.append(f"  direction = {','.join(repr(float(v)) for v in t.direction)}")
        lines.append(f"  a = {','.join(repr(float(v)) for v in t.g.a)}")
        lines.append(f"  b = {','.join(repr(float(v)) for v in t.g.b)}")
        lines.append(f"  r = {t.g.r!r}")
        lines.append(f"  s = {t.g.s!r}")
    lines.append("[end]")
    return "\n".join(lines)


def parse_machine_block(text: str) -> SymbolicModel:
    """Rebuild a model from the machine block of a rendering; exact
    because parameters are serialized with full-precision repr."""
    lines = [ln.rstrip() for ln in text.splitlines()]
    try:
        start = lines.index("[model]")
    except ValueError:
        raise ValueError("no [model] block found") from None
    body = {}
    terms_raw = []
    current = None
    for ln in lines[start + 1:]:
        if ln == "[end]":
            break
        if ln.startswith("term "):
            current = {}
            terms_raw.append(current)
            continue
        key, _, val = ln.partition("=")
        key, val = key.strip(), val.strip()
        if current is None:
            body[key] = val
        else:
            current[key] = val
    dim = int(body["dim"])

    def floats(s: str) -> np.ndarray:
        return np.array([float(v) for v in s.split(",")]) if s else np.zeros(0)

    terms = []
    for raw in terms_raw:
        cfg = tuple(int(v) for v in raw["config"].split(","))
        g = MeijerGParams(*cfg, a=floats(raw["a"]), b=floats(raw["b"]),
                          r=float(raw["r"]), s=float(raw["s"]),
                          extended=cfg not in H_CONFIGS)
        terms.append(RidgeTerm(float(raw["weight"]), floats(raw["direction"]), g))
    if len(terms) != int(body["terms"]):
        raise ValueError("term count mismatch in machine block")
    return SymbolicModel(terms, dim)
