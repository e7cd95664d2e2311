"""Command-line surface.

Subcommands: fit, predict, explain, eval, gfun, oracle.  Exit codes: 0
success, 2 usage error, 3 data error, 4 black-box error, 5 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .blackbox import BlackBoxHandle, SubprocessBlackBox
from .contour import ContourConfig, meijer_g_contour
from .data import (
    ScalingSpec,
    apply_scaling,
    fit_scaling,
    invert_scaling,
    load_csv,
    scale_labels,
    unscale_labels,
)
from .errors import BlackBoxError, DataError, EvaluationError, GridgefitError
from .gfunc import H_CONFIGS, MeijerGParams, meijer_g
from .interpret import feature_importance, taylor1, taylor2, to_expression
from .persist import load_model, save_model
from .pursuit import FitConfig, evaluate_model, symbolic_pursuit


def _parse_floats(text: str) -> np.ndarray:
    text = text.strip()
    if not text or text == "-":
        return np.zeros(0)
    return np.array([float(v) for v in text.split(",")])


def _load_fit_config(path: str | None, seed: int | None) -> FitConfig:
    overrides = {}
    if path:
        with open(path) as fh:
            overrides = json.load(fh)
    if "config_set" in overrides:
        overrides["config_set"] = tuple(tuple(c) for c in overrides["config_set"])
    if "policy" in overrides:
        from .gfunc import EvalPolicy

        overrides["policy"] = EvalPolicy(**overrides["policy"])
    cfg = FitConfig(**overrides)
    if seed is not None:
        cfg.seed = seed
    return cfg


def _split_features_labels(matrix: np.ndarray):
    if matrix.shape[1] < 2:
        raise DataError("labeled data needs at least one feature and one label column")
    return matrix[:, :-1], matrix[:, -1]


def cmd_fit(args) -> int:
    matrix, names = load_csv(args.data, args.has_header)
    features, labels = _split_features_labels(matrix)
    scaling = fit_scaling(features, labels, names[:-1])
    X = apply_scaling(scaling, features)
    cfg = _load_fit_config(args.config, args.seed)

    child = None
    try:
        if args.blackbox:
            child = SubprocessBlackBox(BlackBoxHandle("subprocess", args.blackbox,
                                                      timeout=args.timeout))
            base_vals = child.query(invert_scaling(scaling, X))
            scaling.label_min = float(base_vals.min())
            rng = float(base_vals.max() - base_vals.min())
            scaling.label_range = rng if rng > 0 else 1.0

            def oracle(pts):
                return scale_labels(scaling, child.query(invert_scaling(scaling, pts)))

            model, report = symbolic_pursuit(oracle, cfg, base_points=X)
        else:
            from .pursuit import SampleSet

            samples = SampleSet(X, scale_labels(scaling, labels))
            model, report = symbolic_pursuit(samples, cfg)
    finally:
        if child is not None:
            child.close()

    model.feature_scaling = scaling.pairs()
    save_model(args.out, model, scaling, cfg, report)

    print(f"terms={len(model.terms)}")
    print(f"stop={report.stop_reason}")
    print(f"queries={report.queries}")
    for i, tr in enumerate(report.term_reports):
        cfg_txt = ",".join(str(v) for v in tr.config)
        print(f"term {i}: config={cfg_txt} loss={tr.loss:.6g} "
              f"iters={tr.iterations} restart={tr.restart}")
    final = report.trajectory[-1] if report.trajectory else float("nan")
    print(f"final_loss={final:.6g}")
    print(f"model={args.out}")
    return 0


def _model_features(scaling: ScalingSpec, matrix: np.ndarray, labeled: bool):
    """Slice a raw matrix into the model's feature columns."""
    if labeled:
        feats, labels = _split_features_labels(matrix)
    else:
        feats, labels = matrix, None
    if feats.shape[1] != scaling.raw_width:
        raise DataError(
            f"expected {scaling.raw_width} feature columns, found {feats.shape[1]}"
        )
    return feats, labels


def cmd_predict(args) -> int:
    model, scaling, _, _ = load_model(args.model)
    if scaling is None:
        raise DataError("model file lacks a [scaling] section")
    matrix, _ = load_csv(args.data, args.has_header)
    feats = matrix
    if feats.shape[1] == scaling.raw_width + 1:
        feats = feats[:, :-1]  # labeled file: ignore the label column
    feats, _ = _model_features(scaling, feats, labeled=False)
    pred_scaled = evaluate_model(model, apply_scaling(scaling, feats))
    pred = unscale_labels(scaling, pred_scaled)
    out = args.out or "-"
    lines = "\n".join(repr(float(v)) for v in np.atleast_1d(pred)) + "\n"
    if out == "-":
        sys.stdout.write(lines)
    else:
        with open(out, "w") as fh:
            fh.write(lines)
    return 0


def _mse_r2(pred: np.ndarray, truth: np.ndarray):
    mse = float(np.mean((pred - truth) ** 2))
    sst = float(np.sum((truth - truth.mean()) ** 2))
    r2 = 1.0 - float(np.sum((pred - truth) ** 2)) / sst if sst > 0 else float("nan")
    return mse, r2


def cmd_eval(args) -> int:
    model, scaling, _, _ = load_model(args.model)
    if scaling is None:
        raise DataError("model file lacks a [scaling] section")
    matrix, _ = load_csv(args.data, args.has_header)
    feats, labels = _model_features(scaling, matrix, labeled=True)
    X = apply_scaling(scaling, feats)
    pred = evaluate_model(model, X)
    y = scale_labels(scaling, labels)
    mse, r2 = _mse_r2(pred, y)
    print(f"terms={len(model.terms)}")
    print(f"mse_labels={mse:.6g}")
    print(f"r2_labels={r2:.6g}")
    raw_mse = float(np.mean((unscale_labels(scaling, pred) - labels) ** 2))
    print(f"mse_labels_raw={raw_mse:.6g}")
    if args.blackbox:
        with SubprocessBlackBox(BlackBoxHandle("subprocess", args.blackbox,
                                               timeout=args.timeout)) as child:
            bb_vals = child.query(invert_scaling(scaling, X))
        yb = scale_labels(scaling, bb_vals)
        mse_b, r2_b = _mse_r2(pred, yb)
        print(f"mse_blackbox={mse_b:.6g}")
        print(f"r2_blackbox={r2_b:.6g}")
        mse_bl, r2_bl = _mse_r2(yb, y)
        print(f"mse_blackbox_labels={mse_bl:.6g}")
        print(f"r2_blackbox_labels={r2_bl:.6g}")
    return 0


def cmd_explain(args) -> int:
    model, scaling, _, _ = load_model(args.model)
    if scaling is None:
        raise DataError("model file lacks a [scaling] section")
    if args.point:
        raw = _parse_floats(args.point).reshape(1, -1)
        if raw.shape[1] != scaling.raw_width:
            raise DataError(
                f"--point needs {scaling.raw_width} values, got {raw.shape[1]}"
            )
        feats = raw
    elif args.at is not None:
        if not args.data:
            raise DataError("--at needs --data to index into")
        matrix, _ = load_csv(args.data, args.has_header)
        if matrix.shape[1] == scaling.raw_width + 1:
            matrix = matrix[:, :-1]
        if not 0 <= args.at < matrix.shape[0]:
            raise DataError(f"row {args.at} out of range (n={matrix.shape[0]})")
        feats = matrix[args.at: args.at + 1]
    else:
        raise DataError("explain needs --point or --at")
    x0 = apply_scaling(scaling, feats)[0]

    doc = to_expression(model)
    lines = [doc.plain, ""]
    names = scaling.feature_names or [f"x{i}" for i in range(model.dim)]
    if args.order >= 2:
        rep = taylor2(model, x0)
    else:
        rep = taylor1(model, x0)
    lines.append(f"base_point_scaled = {','.join(repr(float(v)) for v in rep.base_point)}")
    if rep.shifted:
        lines.append("note: base point shifted off a relu kink")
    lines.append(f"f_hat(x0) = {rep.base_value!r}")
    lines.append(f"offset_c_tilde = {rep.offset!r}")
    lines.append(f"c0 = {rep.c0!r}")
    for k, c in enumerate(rep.c1):
        lines.append(f"c1_{k + 1} = {float(c)!r}")
    lines.append("")
    lines.append("[importance]")
    lines.append("feature,value")
    for name, v in zip(names, rep.folded_v):
        lines.append(f"{name},{float(v)!r}")
    lines.append("[end]")
    if args.order >= 2:
        for k, c in enumerate(rep.c2):
            flag = " (negligible)" if rep.negligible[k] else ""
            lines.append(f"c2_{k + 1} = {float(c)!r}{flag}")
        lines.append("")
        lines.append("[interactions]")
        lines.append("," + ",".join(names))
        for name, row in zip(names, rep.interactions):
            lines.append(name + "," + ",".join(repr(float(v)) for v in row))
        lines.append("[end]")
    text = "\n".join(lines) + "\n"
    if args.out and args.out != "-":
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _gfun_params(args) -> MeijerGParams:
    cfg = tuple(int(v) for v in args.config.split(","))
    if len(cfg) != 4:
        raise DataError("--config must be m,n,p,q")
    return MeijerGParams(
        *cfg,
        a=_parse_floats(args.a),
        b=_parse_floats(args.b),
        r=args.r,
        s=args.s,
        extended=cfg not in H_CONFIGS,
    )


def cmd_gfun(args) -> int:
    g = _gfun_params(args)
    print(f"{meijer_g(g, args.z):.6g}")
    return 0


def cmd_oracle(args) -> int:
    g = _gfun_params(args)
    cc = ContourConfig(sigma=args.sigma, half_height=args.half_height,
                       n_nodes=args.nodes)
    print(f"{meijer_g_contour(g, args.z, cc):.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gridgefit",
        description="Fit and interpret symbolic surrogates of black-box regressors",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common_data(p):
        p.add_argument("--has-header", dest="has_header", action="store_true",
                       default=None, help="force header row")
        p.add_argument("--no-header", dest="has_header", action="store_false",
                       help="force no header row")

    p = sub.add_parser("fit", help="fit a symbolic surrogate")
    p.add_argument("--data", required=True, help="labeled CSV (label = last column)")
    p.add_argument("--blackbox", help="subprocess command answering the line protocol")
    p.add_argument("--out", required=True, help="output model file (spv1)")
    p.add_argument("--config", help="JSON file of FitConfig overrides")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--timeout", type=float, default=60.0)
    add_common_data(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="feature CSV")
    p.add_argument("--out", help="output CSV of predictions (default stdout)")
    add_common_data(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="Taylor reports and feature importance")
    p.add_argument("--model", required=True)
    p.add_argument("--at", type=int, default=None, help="row index into --data")
    p.add_argument("--point", help="comma-separated point in original units")
    p.add_argument("--data", help="CSV for --at")
    p.add_argument("--order", type=int, choices=(1, 2), default=2)
    p.add_argument("--out", help="report file (default stdout)")
    add_common_data(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("eval", help="MSE/R2 against labels and black-box")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="labeled CSV")
    p.add_argument("--blackbox", help="subprocess command for symbolic-vs-black-box")
    p.add_argument("--timeout", type=float, default=60.0)
    add_common_data(p)
    p.set_defaults(func=cmd_eval)

    def add_gfun_args(p):
        p.add_argument("--config", required=True, help="m,n,p,q")
        p.add_argument("--a", default="", help="comma-separated upper parameters")
        p.add_argument("--b", default="", help="comma-separated lower parameters")
        p.add_argument("--r", type=float, default=1.0)
        p.add_argument("--s", type=float, default=1.0)
        p.add_argument("--z", type=float, required=True)

    p = sub.add_parser("gfun", help="evaluate one G-function (series)")
    add_gfun_args(p)
    p.set_defaults(func=cmd_gfun)

    p = sub.add_parser("oracle", help="evaluate one G-function (contour quadrature)")
    add_gfun_args(p)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--half-height", dest="half_height", type=float, default=200.0)
    p.add_argument("--nodes", type=int, default=6001)
    p.set_defaults(func=cmd_oracle)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except BlackBoxError as exc:
        print(f"black-box error: {exc}", file=sys.stderr)
        return 4
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except EvaluationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 5
    except GridgefitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
