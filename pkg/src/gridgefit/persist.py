"""Versioned text persistence for fitted models ("spv1").

The format is a plain key-tree document: a version line, then bracketed
sections ([model], [scaling], [config], [report]) each closed by [end].
All reals are serialized with repr, which round-trips float64 exactly,
so a saved and reloaded model reproduces predictions bit for bit.
"""

from __future__ import annotations

import numpy as np

from .data import ScalingSpec
from .errors import SchemaError, VersionMismatch
from .gfunc import EvalPolicy
from .interpret import parse_machine_block, render_machine_block
from .pursuit import FitConfig, FitReport, SymbolicModel, TermReport

FORMAT_VERSION = "spv1"


def _render_scaling(spec: ScalingSpec) -> str:
    lines = ["[scaling]"]
    lines.append(f"kept = {','.join(str(v) for v in spec.kept_columns)}")
    lines.append(f"raw_width = {spec.raw_width}")
    lines.append(f"feature_min = {','.join(repr(float(v)) for v in spec.feature_min)}")
    lines.append(f"feature_range = {','.join(repr(float(v)) for v in spec.feature_range)}")
    lines.append(f"label_min = {spec.label_min!r}")
    lines.append(f"label_range = {spec.label_range!r}")
    lines.append(f"names = {','.join(spec.feature_names)}")
    lines.append("[end]")
    return "\n".join(lines)


def _render_config(cfg: FitConfig) -> str:
    lines = ["[config]"]
    lines.append(f"max_terms = {cfg.max_terms}")
    lines.append(f"loss_tol = {cfg.loss_tol!r}")
    lines.append("config_set = " + ";".join(",".join(str(v) for v in c)
                                            for c in cfg.config_set))
    lines.append(f"restarts = {cfg.restarts}")
    lines.append(f"lr = {cfg.lr!r}")
    lines.append(f"max_iters = {cfg.max_iters}")
    lines.append(f"fd_eps = {cfg.fd_eps!r}")
    lines.append(f"backfit_passes = {cfg.backfit_passes}")
    lines.append(f"mixup_count = {cfg.mixup_count}")
    lines.append(f"mixup_alpha = {cfg.mixup_alpha!r}")
    lines.append(f"seed = {cfg.seed}")
    lines.append(f"plateau_patience = {cfg.plateau_patience}")
    lines.append(f"plateau_rel_tol = {cfg.plateau_rel_tol!r}")
    lines.append(f"base_samples = {cfg.base_samples}")
    lines.append(f"policy.series_tol = {cfg.policy.series_tol!r}")
    lines.append(f"policy.max_terms = {cfg.policy.max_terms}")
    lines.append(f"policy.pole_jitter = {cfg.policy.pole_jitter!r}")
    lines.append(f"policy.z_clamp = {cfg.policy.z_clamp!r}")
    lines.append("[end]")
    return "\n".join(lines)


def _render_report(report: FitReport) -> str:
    lines = ["[report]"]
    lines.append(f"stop_reason = {report.stop_reason}")
    lines.append(f"queries = {report.queries}")
    lines.append("trajectory = " + ",".join(repr(float(v)) for v in report.trajectory))
    for i, tr in enumerate(report.term_reports):
        lines.append(f"term {i}")
        lines.append(f"  config = {','.join(str(v) for v in tr.config)}")
        lines.append(f"  restart = {tr.restart}")
        lines.append(f"  iterations = {tr.iterations}")
        lines.append(f"  loss = {tr.loss!r}")
    lines.append("[end]")
    return "\n".join(lines)


def save_model(path, model: SymbolicModel, scaling: ScalingSpec | None = None,
               config: FitConfig | None = None, report: FitReport | None = None):
    """Write the model document; sections for absent extras are omitted."""
    parts = [FORMAT_VERSION, render_machine_block(model)]
    if scaling is not None:
        parts.append(_render_scaling(scaling))
    if config is not None:
        parts.append(_render_config(config))
    if report is not None:
        parts.append(_render_report(report))
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _split_sections(text: str) -> dict[str, list[str]]:
    lines = text.splitlines()
    if not lines:
        raise SchemaError("empty model file")
    version = lines[0].strip()
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"unsupported model format {version!r}, expected {FORMAT_VERSION!r}"
        )
    sections: dict[str, list[str]] = {}
    current = None
    body: list[str] = []
    for ln in lines[1:]:
        stripped = ln.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1]
            if name == "end":
                if current is None:
                    raise SchemaError("[end] without an open section")
                sections[current] = body
                current, body = None, []
                continue
            if current is not None:
                raise SchemaError(f"section [{current}] not closed before [{name}]")
            current = name
            continue
        if current is not None:
            body.append(ln)
    if current is not None:
        raise SchemaError(f"section [{current}] is not closed (truncated file?)")
    if "model" not in sections:
        raise SchemaError("missing [model] section")
    return sections


def _kv(body: list[str]) -> dict[str, str]:
    out = {}
    for ln in body:
        if ln.strip().startswith("term ") or not ln.strip():
            continue
        key, sep, val = ln.partition("=")
        if not sep:
            raise SchemaError(f"malformed line {ln!r}")
        out[key.strip()] = val.strip()
    return out


def _parse_scaling(body: list[str]) -> ScalingSpec:
    kv = _kv(body)
    try:
        ints = lambda s: [int(v) for v in s.split(",")] if s else []
        floats = lambda s: np.array([float(v) for v in s.split(",")]) if s else np.zeros(0)
        return ScalingSpec(
            feature_min=floats(kv["feature_min"]),
            feature_range=floats(kv["feature_range"]),
            kept_columns=ints(kv["kept"]),
            label_min=float(kv["label_min"]),
            label_range=float(kv["label_range"]),
            feature_names=[v for v in kv.get("names", "").split(",") if v],
            raw_width=int(kv.get("raw_width", "-1")),
        )
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad [scaling] section: {exc}") from exc


def _parse_config(body: list[str]) -> FitConfig:
    kv = _kv(body)
    try:
        config_set = tuple(
            tuple(int(v) for v in chunk.split(","))
            for chunk in kv["config_set"].split(";") if chunk
        )
        policy = EvalPolicy(
            series_tol=float(kv["policy.series_tol"]),
            max_terms=int(kv["policy.max_terms"]),
            pole_jitter=float(kv["policy.pole_jitter"]),
            z_clamp=float(kv["policy.z_clamp"]),
        )
        return FitConfig(
            max_terms=int(kv["max_terms"]),
            loss_tol=float(kv["loss_tol"]),
            config_set=config_set,
            restarts=int(kv["restarts"]),
            lr=float(kv["lr"]),
            max_iters=int(kv["max_iters"]),
            fd_eps=float(kv["fd_eps"]),
            backfit_passes=int(kv["backfit_passes"]),
            mixup_count=int(kv["mixup_count"]),
            mixup_alpha=float(kv["mixup_alpha"]),
            seed=int(kv["seed"]),
            plateau_patience=int(kv["plateau_patience"]),
            plateau_rel_tol=float(kv["plateau_rel_tol"]),
            base_samples=int(kv["base_samples"]),
            policy=policy,
        )
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad [config] section: {exc}") from exc


def _parse_report(body: list[str]) -> FitReport:
    kv = _kv(body)
    report = FitReport(
        stop_reason=kv.get("stop_reason", ""),
        queries=int(kv.get("queries", "0")),
    )
    traj = kv.get("trajectory", "")
    report.trajectory = [float(v) for v in traj.split(",")] if traj else []
    current: dict[str, str] | None = None
    raws: list[dict[str, str]] = []
    for ln in body:
        if ln.strip().startswith("term "):
            current = {}
            raws.append(current)
        elif current is not None and "=" in ln and ln.startswith("  "):
            key, _, val = ln.partition("=")
            current[key.strip()] = val.strip()
    for raw in raws:
        report.term_reports.append(TermReport(
            config=tuple(int(v) for v in raw["config"].split(",")),
            restart=int(raw["restart"]),
            iterations=int(raw["iterations"]),
            loss=float(raw["loss"]),
        ))
    return report


def load_model(path):
    """Read a model document.

    Returns (model, scaling, config, report); extras missing from the
    file come back as None.
    """
    with open(path, "r") as fh:
        text = fh.read()
    sections = _split_sections(text)
    try:
        model = parse_machine_block("\n".join(["[model]"] + sections["model"] + ["[end]"]))
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad [model] section: {exc}") from exc
    scaling = _parse_scaling(sections["scaling"]) if "scaling" in sections else None
    config = _parse_config(sections["config"]) if "config" in sections else None
    report = _parse_report(sections["report"]) if "report" in sections else None
    if scaling is not None:
        if scaling.dim != model.dim:
            raise SchemaError("scaling dimension does not match the model")
        model.feature_scaling = scaling.pairs()
    return model, scaling, config, report
