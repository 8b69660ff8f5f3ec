"""Command-line front end.

Subcommands: check (closure audit with exit code 0/2/3 for
closed/not_closed/inconclusive), closure (bracket-saturated basis),
bch (truncation error sweep), sample (seeded generator draws),
repro-paper (recompute the built-in reference example) and export
(write a model file). Reports are JSON by default; text mode prints
numbers to 6 significant figures.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone

import numpy as np

from .closure import (
    bch_truncated,
    kappa_witness,
    lie_closure,
    log_product,
    multiplicative_closure_check,
    span_basis,
)
from .model import (
    ModelFormatError,
    SamplingError,
    check_scaling_closure,
    constraints_homogeneous,
    model_from_dict,
    model_to_dict,
    sample_stochastic,
    sample_with_rng,
)
from .zoo import (
    REFERENCE_ALPHAS,
    REFERENCE_LOG_PRODUCT,
    reference_pair,
    zoo_model,
    zoo_names,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CLOSED = 2
EXIT_INCONCLUSIVE = 3

_VERDICT_EXIT = {"closed": EXIT_OK, "not_closed": EXIT_NOT_CLOSED, "inconclusive": EXIT_INCONCLUSIVE}


class CliError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--model",
        default="hky",
        help="zoo model name (%s), a model file path, or '-' for stdin"
        % ", ".join(zoo_names()),
    )
    common.add_argument("--seed", type=int, default=42, help="RNG seed (default 42)")
    common.add_argument("--samples", type=int, default=100, help="sample count (default 100)")
    common.add_argument("--tol", type=float, default=1e-8, help="membership tolerance (default 1e-8)")
    common.add_argument("--output", default="-", help="output path, '-' for stdout (default)")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    common.add_argument("--chain-length", type=int, default=3, help="max product chain length (default 3)")

    parser = argparse.ArgumentParser(
        prog="liemarkov",
        description="Closure audits for continuous-time Markov substitution models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="run the full multiplicative-closure audit")
    sub.add_parser("closure", parents=[common], help="print the bracket-saturated span basis")
    bch = sub.add_parser("bch", parents=[common], help="truncation error sweep against log-products")
    bch.add_argument("--orders", default="1,2,3", help="comma-separated truncation orders")
    sub.add_parser("sample", parents=[common], help="emit seeded generator samples")
    sub.add_parser("repro-paper", parents=[common], help="recompute the built-in reference example")
    sub.add_parser("export", parents=[common], help="write the model in the model file format")
    return parser


def _resolve_model(ref: str):
    if ref == "-":
        try:
            doc = json.load(sys.stdin)
        except json.JSONDecodeError as exc:
            raise CliError(f"stdin is not valid model JSON: {exc}") from exc
        return model_from_dict(doc)
    if ref in zoo_names():
        return zoo_model(ref)
    try:
        with open(ref, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read model {ref!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"model file {ref!r} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CliError(f"model file {ref!r} must contain a JSON object")
    return model_from_dict(doc)


def _config_dict(args) -> dict:
    return {
        "command": args.command,
        "model": args.model,
        "seed": args.seed,
        "samples": args.samples,
        "tol": args.tol,
        "chain_length": args.chain_length,
        "format": args.format,
        "output": args.output,
    }


def _emit(args, payload: dict, text: str) -> None:
    body = json.dumps(payload, indent=2) + "\n" if args.format == "json" else text
    if args.output == "-":
        sys.stdout.write(body)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(body)


def _stamp(args, payload: dict) -> None:
    if not args.no_timestamp:
        payload["timestamp"] = datetime.now(timezone.utc).isoformat()


def _fmt_matrix(m, indent: str = "  ") -> str:
    return "\n".join(
        indent + "  ".join(f"{x:12.6g}" for x in row) for row in np.asarray(m)
    )


def _cmd_check(args) -> int:
    model = _resolve_model(args.model)
    scaling = check_scaling_closure(model, samples=min(20, args.samples), seed=args.seed)
    report = multiplicative_closure_check(model, samples=args.samples, seed=args.seed, tol=args.tol)
    payload = {
        "command": "check",
        "config": _config_dict(args),
        "model": model.name,
        "scaling_closed": scaling,
        "constraints_homogeneous": constraints_homogeneous(model),
        "closure": report.to_dict(),
    }
    _stamp(args, payload)
    lines = [
        f"model: {model.name}",
        f"scaling closed: {scaling}",
        f"span dim: {report.span_dim}   lie closure dim: {report.lie_closure_dim}   "
        f"ambient dim: {report.ambient_dim}",
        f"verdict: {report.mult_closed_verdict} "
        f"({report.samples_tested} pairs tested at tol {report.tolerance:.6g})",
    ]
    if report.witnesses:
        worst = max(report.witnesses, key=lambda w: w.residual)
        lines.append(
            f"witnesses: {len(report.witnesses)} (worst residual {worst.residual:.6g}, "
            f"pair {worst.pair_index})"
        )
        lines.append("worst log-product:")
        lines.append(_fmt_matrix(worst.log_product))
    _emit(args, payload, "\n".join(lines) + "\n")
    return _VERDICT_EXIT[report.mult_closed_verdict]


def _cmd_closure(args) -> int:
    model = _resolve_model(args.model)
    base = span_basis(model, seed=args.seed)
    closed = lie_closure(base) if base else []
    payload = {
        "command": "closure",
        "config": _config_dict(args),
        "model": model.name,
        "span_dim": len(base),
        "lie_closure_dim": len(closed),
        "basis": [b.tolist() for b in closed],
    }
    _stamp(args, payload)
    lines = [
        f"model: {model.name}",
        f"span dim: {len(base)}   lie closure dim: {len(closed)}",
    ]
    for k, b in enumerate(closed):
        lines.append(f"basis element {k}:")
        lines.append(_fmt_matrix(b))
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_bch(args) -> int:
    try:
        orders = [int(tok) for tok in args.orders.split(",") if tok.strip()]
    except ValueError as exc:
        raise CliError(f"cannot parse --orders {args.orders!r}") from exc
    if not orders or any(o not in (1, 2, 3) for o in orders):
        raise CliError("--orders must list values from 1, 2, 3")
    model = _resolve_model(args.model)
    rng = np.random.default_rng(args.seed)
    q = sample_with_rng(model, rng)
    q_prime = sample_with_rng(model, rng)
    ts = [2.0 ** -k for k in range(1, 7)]
    errors = {order: [] for order in orders}
    for t in ts:
        reference = log_product(t * q, t * q_prime)
        for order in orders:
            errors[order].append(
                float(np.linalg.norm(reference - bch_truncated(t * q, t * q_prime, order)))
            )
    slopes = {
        order: float(np.polyfit(np.log2(ts), np.log2(errors[order]), 1)[0])
        for order in orders
    }
    payload = {
        "command": "bch",
        "config": _config_dict(args),
        "model": model.name,
        "orders": orders,
        "t": ts,
        "errors": {str(o): errors[o] for o in orders},
        "slopes": {str(o): slopes[o] for o in orders},
    }
    _stamp(args, payload)
    lines = [f"model: {model.name}", "t        " + "  ".join(f"order {o}" for o in orders)]
    for i, t in enumerate(ts):
        lines.append(
            f"{t:<8.6g} " + "  ".join(f"{errors[o][i]:.6g}" for o in orders)
        )
    lines.append("slopes:  " + "  ".join(f"{slopes[o]:.6g}" for o in orders))
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_sample(args) -> int:
    model = _resolve_model(args.model)
    mats = [sample_stochastic(model, args.seed + i) for i in range(args.samples)]
    payload = {
        "command": "sample",
        "config": _config_dict(args),
        "model": model.name,
        "matrices": [m.tolist() for m in mats],
    }
    _stamp(args, payload)
    lines = [f"model: {model.name}"]
    for i, m in enumerate(mats):
        lines.append(f"sample {i} (seed {args.seed + i}):")
        lines.append(_fmt_matrix(m))
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_repro_paper(args) -> int:
    q1, q2 = reference_pair()
    computed = log_product(q1, q2)
    expected = np.asarray(REFERENCE_LOG_PRODUCT)
    deviation = float(np.max(np.abs(computed - expected)))
    kappas = kappa_witness(computed)
    alphas = [float(computed[0, 2]), float(computed[1, 2]), float(computed[2, 0]), float(computed[3, 0])]
    payload = {
        "command": "repro-paper",
        "config": _config_dict(args),
        "computed_log_product": computed.tolist(),
        "reference_log_product": expected.tolist(),
        "max_deviation": deviation,
        "alphas": alphas,
        "reference_alphas": list(REFERENCE_ALPHAS),
        "kappas": kappas,
        "within_tolerance": deviation <= 1e-5,
    }
    _stamp(args, payload)
    lines = [
        "log(exp(Q1) exp(Q2)), computed:",
        _fmt_matrix(computed),
        "reference:",
        _fmt_matrix(expected),
        f"max entrywise deviation: {deviation:.6g}",
        "alphas: " + "  ".join(f"{a:.6g}" for a in alphas),
        "kappas: " + "  ".join(f"{k:.6g}" for k in kappas),
    ]
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK if deviation <= 1e-5 else EXIT_NOT_CLOSED


def _cmd_export(args) -> int:
    model = _resolve_model(args.model)
    payload = model_to_dict(model)
    body = json.dumps(payload, indent=2) + "\n"
    if args.output == "-":
        sys.stdout.write(body)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(body)
    return EXIT_OK


_HANDLERS = {
    "check": _cmd_check,
    "closure": _cmd_closure,
    "bch": _cmd_bch,
    "sample": _cmd_sample,
    "repro-paper": _cmd_repro_paper,
    "export": _cmd_export,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (CliError, ValueError, SamplingError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
