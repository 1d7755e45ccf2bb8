"""Command-line surface: experiment configs, CSV/JSON emitters, figure presets.

Exit codes: 0 success, 1 validation error (flags, config schema, file
formats), 2 computation error.  Diagnostics go to stderr as one JSON object
per failure, e.g. {"error": "validation", "message": "..."}.

Angle-valued options accept an explicit unit suffix ("8deg", "0.14rad");
bare numbers are radians.  Every emitted CSV starts with a comment line
recording the SHA-256 of the full effective config.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audit import EmbeddingDataset, empirical_capacity_at, estimate_admissibility, mmcr_report
from .capacity import OperatingPoint, calibrate_threshold
from .figures import fig2_rows, fig3_rows, fig4_rows, fig5_rows
from .packing import greedy_packing, packing_bounds, restricted_packing, save_code
from .random_code import (
    RandomCodeConfig,
    mc_separation_success,
    separation_profile,
)
from .rng import Seed
from .sphere import log_cap_measure, unit_vectors
from .synthetic import SyntheticPipeline, load_pipeline, save_pipeline, sample_views
from .figures import default_fig5_sizes

DEFAULT_SEED = 42


class CliValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors (exit 1)."""

    def error(self, message):
        raise CliValidationError(message)


def parse_angle(text: str) -> float:
    """Angle with explicit unit suffix; bare numbers are radians."""
    t = str(text).strip().lower()
    try:
        if t.endswith("deg"):
            return math.radians(float(t[:-3]))
        if t.endswith("rad"):
            return float(t[:-3])
        return float(t)
    except ValueError:
        raise CliValidationError(f"cannot parse angle {text!r}") from None


def _parse_list(text, cast):
    items = [p for p in str(text).split(",") if p.strip()]
    if not items:
        raise CliValidationError(f"empty list value {text!r}")
    return [cast(p.strip()) for p in items]


def _ints(text):
    try:
        return [int(p) for p in _parse_list(text, str)]
    except ValueError:
        raise CliValidationError(f"cannot parse integer list {text!r}") from None


def _floats(text):
    try:
        return [float(p) for p in _parse_list(text, str)]
    except ValueError:
        raise CliValidationError(f"cannot parse float list {text!r}") from None


def _angles(text):
    return [parse_angle(p) for p in _parse_list(text, str)]


def merge_config(args: argparse.Namespace, schema: dict) -> dict:
    """Defaults <- config file <- explicit CLI flags, schema-validated.

    ``schema`` maps key -> (caster, default); default ``...`` marks a
    required key.  Unknown keys in the config file are rejected.
    """
    merged = {k: d for k, (_, d) in schema.items() if d is not ...}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            raw = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliValidationError(f"cannot read config {cfg_path}: {exc}")
        if not isinstance(raw, dict):
            raise CliValidationError("config file must hold a JSON object")
        for key, value in raw.items():
            if key not in schema:
                raise CliValidationError(f"unknown config key {key!r}")
            cast = schema[key][0]
            try:
                merged[key] = cast(value) if cast is not None else value
            except (TypeError, ValueError) as exc:
                raise CliValidationError(f"config key {key!r}: {exc}")
    for key in schema:
        flag = key.replace("-", "_")
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    missing = [k for k in schema if k not in merged]
    if missing:
        raise CliValidationError(f"missing required option(s): {', '.join(missing)}")
    return merged


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(columns, rows, config, out: str | None, fmt: str) -> None:
    digest = config_hash(config)
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# config_sha256={digest}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
        text = buf.getvalue()
    elif fmt == "json":
        payload = {
            "config_sha256": digest,
            "config": config,
            "columns": list(columns),
            "rows": [list(r) for r in rows],
        }
        text = json.dumps(payload, sort_keys=True, default=str) + "\n"
    else:
        raise CliValidationError(f"unknown format {fmt!r}")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_object(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, default=str) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _add_common(p: _Parser) -> None:
    p.add_argument("--config", help="JSON config file (schema-checked)")
    p.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="output format (default csv)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads; affects speed only, never results")


def build_parser() -> _Parser:
    root = _Parser(prog="idcap", description=__doc__.splitlines()[0])
    root.add_argument("--version", action="version", version=f"idcap {__version__}")
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capmeasure", help="normalized cap measure tables")
    _add_common(p)
    p.add_argument("--dims", type=_ints, help="dimensions, e.g. 2,3,64")
    p.add_argument("--alphas", type=_angles, help="cap angles, e.g. 0.3,45deg")
    p.add_argument("--method", choices=("beta", "quadrature", "both"))

    p = sub.add_parser("bounds", help="packing-bound sweeps")
    _add_common(p)
    p.add_argument("--dims", type=_ints)
    p.add_argument("--psis", type=_angles, help="separation angles")

    p = sub.add_parser("rates", help="rate lower bounds and boundary curves")
    _add_common(p)
    p.add_argument("--taus", type=_floats)
    p.add_argument("--rhos", type=_angles)

    p = sub.add_parser("mc-sep", help="Monte Carlo separation success")
    _add_common(p)
    p.add_argument("--dim", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--rho", type=parse_angle)
    p.add_argument("--delta", type=float)
    p.add_argument("--sizes", type=_ints, help="codebook sizes, e.g. 2,8,32")
    p.add_argument("--trials", type=int)

    p = sub.add_parser("pack", help="greedy or restricted code construction")
    _add_common(p)
    p.add_argument("--dim", type=int)
    p.add_argument("--psi", type=parse_angle)
    p.add_argument("--budget", type=int, help="consecutive-rejection budget")
    p.add_argument("--max-points", type=int)
    p.add_argument("--candidates", help="CSV of candidate points (restricted mode)")
    p.add_argument("--mode", choices=("greedy", "exact"))

    p = sub.add_parser("pipeline", help="synthetic pipelines")
    psub = p.add_subparsers(dest="pipeline_command", required=True)
    q = psub.add_parser("make", help="build a pipeline file")
    _add_common(q)
    q.add_argument("--dim", type=int)
    q.add_argument("--identities", type=int)
    q.add_argument("--rho", type=parse_angle)
    q.add_argument("--eta", type=float)
    q.add_argument("--centers", choices=("uniform", "greedy"))
    q.add_argument("--psi", type=parse_angle, help="separation for greedy centers")
    q.add_argument("--budget", type=int)
    q = psub.add_parser("sample", help="sample views into a JSONL dataset")
    _add_common(q)
    q.add_argument("--pipeline", help="pipeline JSON path")
    q.add_argument("--views", type=int, help="views per identity")

    p = sub.add_parser("audit", help="dataset admissibility and diagnostics")
    asub = p.add_subparsers(dest="audit_command", required=True)
    q = asub.add_parser("report", help="genuine/impostor rate report")
    _add_common(q)
    q.add_argument("--data", help="JSONL embedding dataset")
    q.add_argument("--tau", type=float)
    q.add_argument("--pair-budget", type=int)
    q = asub.add_parser("capacity", help="largest admissible identity subset")
    _add_common(q)
    q.add_argument("--data")
    q.add_argument("--tau", type=float)
    q.add_argument("--eps-in", type=float)
    q.add_argument("--eps-out", type=float)
    q.add_argument("--mode", choices=("greedy", "exact"))
    q.add_argument("--pair-budget", type=int)
    q = asub.add_parser("mmcr", help="identity-mean spectral diagnostics")
    _add_common(q)
    q.add_argument("--data")

    p = sub.add_parser("calibrate", help="threshold at a target FMR")
    _add_common(p)
    p.add_argument("--roc", help="CSV with columns tau,fmr")
    p.add_argument("--alpha", type=float)

    p = sub.add_parser("figure", help="figure-data presets")
    _add_common(p)
    p.add_argument("name", choices=("fig2", "fig3", "fig4", "fig5"))
    p.add_argument("--trials", type=int, help="fig5 trials per size")
    p.add_argument("--sizes", type=_ints, help="fig5 codebook sizes")

    return root


def _cmd_capmeasure(args) -> int:
    schema = {
        "dims": (_ints, ...),
        "alphas": (_angles, ...),
        "method": (str, "beta"),
    }
    cfg = merge_config(args, schema)
    if cfg["method"] not in ("beta", "quadrature", "both"):
        raise CliValidationError(f"unknown method {cfg['method']!r}")
    rows = []
    if cfg["method"] == "both":
        columns = ["D", "alpha", "log_v_beta", "log_v_quadrature"]
        for d in cfg["dims"]:
            for a in cfg["alphas"]:
                rows.append((d, a, log_cap_measure(d, a, "beta").log_value,
                             log_cap_measure(d, a, "quadrature").log_value))
    else:
        columns = ["D", "alpha", "log_v", "v"]
        for d in cfg["dims"]:
            for a in cfg["alphas"]:
                m = log_cap_measure(d, a, cfg["method"])
                rows.append((d, a, m.log_value, m.linear))
    emit(columns, rows, {"command": "capmeasure", **cfg}, args.out, args.format)
    return 0


def _cmd_bounds(args) -> int:
    schema = {"dims": (_ints, ...), "psis": (_angles, ...)}
    cfg = merge_config(args, schema)
    rows = []
    for d in cfg["dims"]:
        for psi in cfg["psis"]:
            b = packing_bounds(d, psi)
            lower = b.lower if b.log_lower < 700 else None
            upper = b.upper if b.log_upper < 700 else None
            rows.append((d, psi, b.log_lower, b.log_upper, lower, upper))
    emit(["D", "psi", "log_lower", "log_upper", "lower", "upper"], rows,
         {"command": "bounds", **cfg}, args.out, args.format)
    return 0


def _cmd_rates(args) -> int:
    schema = {"taus": (_floats, ...), "rhos": (_angles, ...)}
    cfg = merge_config(args, schema)
    columns, rows, _ = fig3_rows(cfg["taus"], cfg["rhos"])
    emit(columns, rows, {"command": "rates", **cfg}, args.out, args.format)
    return 0


def _cmd_mc_sep(args) -> int:
    schema = {
        "dim": (int, ...),
        "tau": (float, ...),
        "rho": (parse_angle, ...),
        "delta": (float, 0.05),
        "sizes": (_ints, None),
        "trials": (int, 1000),
        "seed": (int, DEFAULT_SEED),
    }
    cfg = merge_config(args, schema)
    sizes = cfg["sizes"] or default_fig5_sizes()
    seed = Seed(cfg["seed"])
    rows = []
    if len(sizes) == 1:
        ests = [mc_separation_success(RandomCodeConfig(
            dimension=cfg["dim"], tau=cfg["tau"], rho=cfg["rho"],
            delta=cfg["delta"], codebook_size=sizes[0], trials=cfg["trials"],
            seed=seed), threads=args.threads)]
    else:
        ests = separation_profile(cfg["dim"], cfg["tau"], cfg["rho"], sizes,
                                  cfg["trials"], seed, threads=args.threads)
    for est in ests:
        rows.append((cfg["dim"], cfg["tau"], cfg["rho"], est.psi,
                     est.codebook_size, est.trials, est.p_hat, est.std_err,
                     est.union_lb))
    emit(["D", "tau", "rho", "psi", "M", "trials", "p_hat", "std_err",
          "union_lb"], rows,
         {"command": "mc-sep", **cfg, "sizes": sizes}, args.out, args.format)
    return 0


def _cmd_pack(args) -> int:
    schema = {
        "dim": (int, None),
        "psi": (parse_angle, ...),
        "budget": (int, 100_000),
        "max-points": (int, None),
        "candidates": (str, None),
        "mode": (str, "greedy"),
        "seed": (int, DEFAULT_SEED),
    }
    cfg = merge_config(args, schema)
    if not args.out:
        raise CliValidationError("pack requires --out (CSV path for the code)")
    if cfg["candidates"]:
        pts = np.loadtxt(cfg["candidates"], delimiter=",", skiprows=1, ndmin=2)
        code = restricted_packing(unit_vectors(pts), cfg["psi"],
                                  mode=cfg["mode"], seed=Seed(cfg["seed"]))
    else:
        if cfg["dim"] is None:
            raise CliValidationError("pack needs --dim when no --candidates given")
        code = greedy_packing(cfg["dim"], cfg["psi"], cfg["budget"],
                              Seed(cfg["seed"]), max_points=cfg["max-points"])
    sidecar = save_code(code, args.out)
    _emit_object({"size": len(code), "min_angle": code.min_angle,
                  "saturated": code.saturated, "csv": str(args.out),
                  "sidecar": str(sidecar)}, None)
    return 0


def _cmd_pipeline(args) -> int:
    if args.pipeline_command == "make":
        schema = {
            "dim": (int, ...),
            "identities": (int, ...),
            "rho": (parse_angle, ...),
            "eta": (float, 0.0),
            "centers": (str, "uniform"),
            "psi": (parse_angle, None),
            "budget": (int, 100_000),
            "seed": (int, DEFAULT_SEED),
        }
        cfg = merge_config(args, schema)
        if not args.out:
            raise CliValidationError("pipeline make requires --out (JSON path)")
        seed = Seed(cfg["seed"])
        if cfg["centers"] == "greedy":
            if cfg["psi"] is None:
                raise CliValidationError("greedy centers need --psi")
            code = greedy_packing(cfg["dim"], cfg["psi"], cfg["budget"], seed,
                                  max_points=cfg["identities"])
            if len(code) < cfg["identities"]:
                raise ValueError(
                    f"greedy packing found only {len(code)} of "
                    f"{cfg['identities']} centers at psi={cfg['psi']}"
                )
            centers = code.points
        elif cfg["centers"] == "uniform":
            from .sphere import sample_uniform_sphere

            centers = sample_uniform_sphere(cfg["dim"], cfg["identities"], seed)
        else:
            raise CliValidationError(f"unknown centers mode {cfg['centers']!r}")
        pipe = SyntheticPipeline(centers, cfg["rho"], cfg["eta"], seed)
        save_pipeline(pipe, args.out)
        _emit_object({"pipeline": str(args.out), "dimension": pipe.dimension,
                      "identities": pipe.n_identities}, None)
        return 0
    if args.pipeline_command == "sample":
        schema = {"pipeline": (str, ...), "views": (int, ...)}
        cfg = merge_config(args, schema)
        if not args.out:
            raise CliValidationError("pipeline sample requires --out (JSONL path)")
        pipe = load_pipeline(cfg["pipeline"])
        width = max(4, len(str(pipe.n_identities - 1)))
        with open(args.out, "w") as fh:
            for i in range(pipe.n_identities):
                views = sample_views(pipe, i, cfg["views"]).views
                label = f"id{i:0{width}d}"
                for row in views:
                    fh.write(json.dumps(
                        {"identity": label, "embedding": [float(v) for v in row]}
                    ) + "\n")
        _emit_object({"dataset": str(args.out),
                      "identities": pipe.n_identities,
                      "views_per_identity": cfg["views"]}, None)
        return 0
    raise CliValidationError(f"unknown pipeline command {args.pipeline_command!r}")


def _cmd_audit(args) -> int:
    if args.audit_command == "report":
        schema = {
            "data": (str, ...),
            "tau": (float, ...),
            "pair-budget": (int, 200_000),
            "seed": (int, DEFAULT_SEED),
        }
        cfg = merge_config(args, schema)
        ds = EmbeddingDataset.from_jsonl(cfg["data"])
        report = estimate_admissibility(ds, cfg["tau"], cfg["pair-budget"],
                                        Seed(cfg["seed"]))
        text = report.to_json() + "\n"
        if args.out:
            Path(args.out).write_text(text)
            if args.format == "csv":
                base = Path(args.out)
                with open(base.with_suffix(".genuine.csv"), "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(["label", "accept_rate", "pairs_evaluated",
                                "total_pairs"])
                    for g in report.genuine:
                        w.writerow([g.label, repr(g.accept_rate),
                                    g.pairs_evaluated, g.total_pairs])
                with open(base.with_suffix(".impostor.csv"), "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(["label_a", "label_b", "reject_rate",
                                "pairs_evaluated", "total_pairs"])
                    for s in report.impostor:
                        w.writerow([s.pair[0], s.pair[1], repr(s.reject_rate),
                                    s.pairs_evaluated, s.total_pairs])
        else:
            sys.stdout.write(text)
        return 0
    if args.audit_command == "capacity":
        schema = {
            "data": (str, ...),
            "tau": (float, ...),
            "eps-in": (float, 0.0),
            "eps-out": (float, 0.0),
            "mode": (str, "greedy"),
            "pair-budget": (int, None),
            "seed": (int, DEFAULT_SEED),
        }
        cfg = merge_config(args, schema)
        ds = EmbeddingDataset.from_jsonl(cfg["data"])
        op = OperatingPoint(cfg["tau"], cfg["eps-in"], cfg["eps-out"])
        labels, size = empirical_capacity_at(ds, op, mode=cfg["mode"],
                                             pair_budget=cfg["pair-budget"],
                                             seed=Seed(cfg["seed"]))
        _emit_object({"labels": labels, "size": size}, args.out)
        return 0
    if args.audit_command == "mmcr":
        schema = {"data": (str, ...)}
        cfg = merge_config(args, schema)
        ds = EmbeddingDataset.from_jsonl(cfg["data"])
        rep = mmcr_report(ds)
        _emit_object({
            "n_identities": rep.n_identities,
            "dimension": rep.dimension,
            "nuclear_norm": rep.nuclear_norm,
            "frobenius_norm": rep.frobenius_norm,
            "rank": rep.rank,
            "bound_sqrt_rm": rep.bound_sqrt_rm,
            "bound_m": rep.bound_m,
            "bound_sqrt_md": rep.bound_sqrt_md,
            "bound_satisfied": rep.bound_satisfied,
            "mean_norms": [float(v) for v in rep.mean_norms],
            "singular_values": [float(v) for v in rep.singular_values],
        }, args.out)
        return 0
    raise CliValidationError(f"unknown audit command {args.audit_command!r}")


def _cmd_calibrate(args) -> int:
    schema = {"roc": (str, ...), "alpha": (float, ...)}
    cfg = merge_config(args, schema)
    rows = []
    with open(cfg["roc"], newline="") as fh:
        reader = csv.DictReader(
            (ln for ln in fh if not ln.startswith("#"))
        )
        if reader.fieldnames is None or not {"tau", "fmr"} <= set(reader.fieldnames):
            raise CliValidationError("ROC CSV must have columns tau,fmr")
        for rec in reader:
            rows.append((float(rec["tau"]), float(rec["fmr"])))
    tau_alpha = calibrate_threshold(rows, cfg["alpha"])
    _emit_object({"alpha": cfg["alpha"], "tau": tau_alpha}, args.out)
    return 0


def _cmd_figure(args) -> int:
    schema = {
        "trials": (int, None),
        "sizes": (_ints, None),
        "seed": (int, DEFAULT_SEED),
    }
    cfg = merge_config(args, schema)
    name = args.name
    if name == "fig2":
        columns, rows, config = fig2_rows()
    elif name == "fig3":
        columns, rows, config = fig3_rows()
    elif name == "fig4":
        columns, rows, config = fig4_rows()
    elif name == "fig5":
        columns, rows, config = fig5_rows(
            trials=cfg["trials"] or 2000,
            sizes=cfg["sizes"],
            seed=Seed(cfg["seed"]),
            threads=args.threads,
        )
    else:
        raise CliValidationError(f"unknown figure {name!r}")
    emit(columns, rows, config, args.out, args.format)
    return 0


_HANDLERS = {
    "capmeasure": _cmd_capmeasure,
    "bounds": _cmd_bounds,
    "rates": _cmd_rates,
    "mc-sep": _cmd_mc_sep,
    "pack": _cmd_pack,
    "pipeline": _cmd_pipeline,
    "audit": _cmd_audit,
    "calibrate": _cmd_calibrate,
    "figure": _cmd_figure,
}


def _diag(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliValidationError as exc:
        _diag("validation", str(exc))
        return 1
    try:
        handler = _HANDLERS[args.command]
    except KeyError:
        _diag("validation", f"unknown command {args.command!r}")
        return 1
    try:
        return handler(args)
    except CliValidationError as exc:
        _diag("validation", str(exc))
        return 1
    except Exception as exc:  # computation failures are exit code 2
        _diag("computation", f"{type(exc).__name__}: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
