"""Command-line frontend.

Every command is deterministic given its full flag set including the
seed.  Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 input
validation failure.  A run manifest (command line, version, seed and
stream layout, timestamps, output files) is printed to stderr as JSON;
payload output goes to stdout or the requested files and is byte-stable
across runs.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .decompose import ResidualTooLarge, decompose
from .groups import (
    ComplexMatrix,
    Group,
    InputNotSpecial,
    InputNotUnitary,
    ParamMatrix,
    build_unitary,
)
from .haar import (
    HaarStream,
    jacobian_constancy,
    normalization_mc,
    normalization_quadrature,
    sample_matrices,
    sample_params,
)
from .integrate import (
    DensityMatrix,
    InvalidDensityMatrix,
    avg_concurrence,
    design_check,
    moment_abs_entry,
    twirl,
)
from .jsonio import (
    SchemaError,
    complex_matrix_from_obj,
    complex_matrix_to_obj,
    dumps,
    param_matrix_from_obj,
    param_matrix_to_obj,
)

_VALIDATION_ERRORS = (
    InputNotUnitary,
    InputNotSpecial,
    SchemaError,
    InvalidDensityMatrix,
    ResidualTooLarge,
)


def _dim_flag(value: str) -> int:
    try:
        iv = int(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if iv < 2:
        raise argparse.ArgumentTypeError("dim must be >= 2")
    return iv


def _positive(value: str) -> int:
    iv = int(value)
    if iv < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return iv


def _group_flag(value: str) -> Group:
    try:
        return Group.from_tag(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _default_threads() -> int:
    env = os.environ.get("UNICOMP_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _iso_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _emit_manifest(args: argparse.Namespace, outputs: list[str], started: str, **extra: Any) -> None:
    manifest: dict[str, Any] = {
        "schema": "unicomp.manifest/1",
        "command": "unicomp " + " ".join(getattr(args, "_argv", [])),
        "version": __version__,
        "started": started,
        "finished": _iso_now(),
        "outputs": outputs,
    }
    for key in ("seed", "stream_index"):
        if hasattr(args, key.replace("-", "_")):
            manifest[key] = getattr(args, key.replace("-", "_"))
    manifest.update(extra)
    print(dumps(manifest), file=sys.stderr)


def _write_text(path: str | None, text: str) -> list[str]:
    if path is None:
        sys.stdout.write(text)
        return []
    Path(path).write_text(text)
    return [path]


def _read_input(path: str) -> Any:
    """Whole-file JSON object, or a list of JSONL objects."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    objs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            objs.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {lineno}: invalid JSON ({exc})") from exc
    if not objs:
        raise SchemaError("empty input file")
    return objs


# ---------------------------------------------------------------- sample


def cmd_sample(args: argparse.Namespace) -> int:
    started = _iso_now()
    stream = HaarStream(args.seed, args.stream_index)
    group, d, n = args.group, args.dim, args.count
    with_matrices = args.emit in ("matrices", "both")
    if with_matrices:
        lams, mats = sample_matrices(d, group, n, stream)
    else:
        lams, mats = sample_params(d, group, n, stream), None
    header = {
        "schema": "unicomp.sample/1",
        "version": __version__,
        "group": group.json_tag,
        "d": d,
        "count": n,
        "seed": args.seed,
        "stream_index": args.stream_index,
        "emit": args.emit,
        "variate_order": "row-major",
    }
    if args.format == "jsonl":
        lines = [dumps(header)]
        for i in range(n):
            obj: dict[str, Any] = {"i": i, "lambda": lams[i]}
            if with_matrices:
                obj["matrix"] = complex_matrix_to_obj(mats[i])
            lines.append(dumps(obj))
        text = "\n".join(lines) + "\n"
    else:
        cols = ["i"] + [f"lambda_{m}_{k}" for m in range(1, d + 1) for k in range(1, d + 1)]
        if with_matrices:
            cols += [f"re_{m}_{k}" for m in range(1, d + 1) for k in range(1, d + 1)]
            cols += [f"im_{m}_{k}" for m in range(1, d + 1) for k in range(1, d + 1)]
        rows = ["# " + dumps(header), ",".join(cols)]
        for i in range(n):
            vals = [str(i)] + [format(v, ".17g") for v in lams[i].ravel()]
            if with_matrices:
                vals += [format(v, ".17g") for v in mats[i].real.ravel()]
                vals += [format(v, ".17g") for v in mats[i].imag.ravel()]
            rows.append(",".join(vals))
        text = "\n".join(rows) + "\n"
    outputs = _write_text(args.out, text)
    _emit_manifest(args, outputs, started)
    return 0


# ------------------------------------------------------- build / decompose


def cmd_build(args: argparse.Namespace) -> int:
    started = _iso_now()
    payload = _read_input(args.infile)
    if isinstance(payload, dict):
        params = param_matrix_from_obj(payload)
        text = dumps(complex_matrix_to_obj(build_unitary(params))) + "\n"
        outputs = _write_text(args.out, text)
        _emit_manifest(args, outputs, started)
        return 0
    # JSONL: the header line carries the group tag, draw lines carry "lambda"
    default_group = _jsonl_group(payload)
    lines = []
    count = 0
    for obj in payload:
        if not isinstance(obj, dict) or "lambda" not in obj:
            continue
        group = Group.from_tag(obj["group"]) if "group" in obj else default_group
        params = param_matrix_from_obj(
            {"group": group.json_tag, "d": len(obj["lambda"]), "lambda": obj["lambda"]}
        )
        lines.append(
            dumps({"i": obj.get("i", count), "matrix": complex_matrix_to_obj(build_unitary(params))})
        )
        count += 1
    if not count:
        raise SchemaError("no parameter records in input")
    header = {"schema": "unicomp.build/1", "version": __version__, "count": count}
    text = "\n".join([dumps(header)] + lines) + "\n"
    outputs = _write_text(args.out, text)
    _emit_manifest(args, outputs, started, count=count)
    return 0


def _jsonl_group(payload: list) -> Group:
    for obj in payload:
        if isinstance(obj, dict) and "group" in obj:
            return Group.from_tag(obj["group"])
    raise SchemaError("cannot determine group: no 'group' field in input")


def cmd_decompose(args: argparse.Namespace) -> int:
    started = _iso_now()
    payload = _read_input(args.infile)
    group = args.group
    matrices: list[tuple[int, ComplexMatrix]] = []
    if isinstance(payload, dict):
        matrices.append((0, complex_matrix_from_obj(payload)))
        single = True
    else:
        single = False
        for obj in payload:
            if isinstance(obj, dict) and "matrix" in obj:
                matrices.append((obj.get("i", len(matrices)), complex_matrix_from_obj(obj["matrix"])))
        if not matrices:
            raise SchemaError("no matrix records in input")
    max_err = 0.0
    lines = []
    for i, cm in matrices:
        params = decompose(cm, group)
        rebuilt = build_unitary(params)
        err = float(np.linalg.norm(rebuilt.entries - cm.entries))
        max_err = max(max_err, err)
        lines.append((i, params))
    if single:
        text = dumps(param_matrix_to_obj(lines[0][1])) + "\n"
    else:
        header = {
            "schema": "unicomp.decompose/1",
            "version": __version__,
            "group": group.json_tag,
            "count": len(lines),
        }
        body = [dumps({"i": i, "lambda": p.lam}) for i, p in lines]
        text = "\n".join([dumps(header)] + body) + "\n"
    outputs = _write_text(args.out, text)
    _emit_manifest(args, outputs, started, roundtrip_max_error=max_err, count=len(lines))
    return 0


# ------------------------------------------------------------ reports


def cmd_moment(args: argparse.Namespace) -> int:
    result = moment_abs_entry(args.dim, args.power)
    print(dumps({"exact": str(result.exact), "approx": result.approx}))
    return 0


def cmd_design_check(args: argparse.Namespace) -> int:
    payload = _read_input(args.infile)
    if not isinstance(payload, list):
        raise SchemaError("design set must be a JSON array of {re, im, w} objects")
    elements = []
    for obj in payload:
        if not isinstance(obj, dict) or "w" not in obj:
            raise SchemaError("each element needs 're', 'im' and 'w'")
        cm = complex_matrix_from_obj({"d": len(obj.get("re", [])), **obj})
        elements.append((cm, float(obj["w"])))
    report = design_check(elements, args.t, tolerance=args.tolerance)
    print(
        dumps(
            {
                "d": report.d,
                "t": report.t,
                "n_elements": report.n_elements,
                "required": str(report.required),
                "required_approx": report.required_approx,
                "per_entry": report.per_entry,
                "max_abs_dev": report.max_abs_dev,
                "tolerance": report.tolerance,
                "pass": report.passed,
                "criterion": report.criterion,
            }
        )
    )
    return 0


def cmd_twirl(args: argparse.Namespace) -> int:
    started = _iso_now()
    rho = DensityMatrix(complex_matrix_from_obj(_read_input(args.infile)).entries)
    if args.mode == "mc":
        stream = HaarStream(args.seed, args.stream_index)
        result = twirl(
            rho, args.local_dim, "mc", n=args.n, stream=stream, threads=args.threads
        )
    else:
        result = twirl(rho, args.local_dim, "exact")
    out = {
        "mode": args.mode,
        "local_dim": args.local_dim,
        "beta": result.beta,
        "fit_residual": result.fit_residual,
        "state": complex_matrix_to_obj(result.state.entries),
    }
    if args.mode == "mc":
        out.update({"n": args.n, "seed": args.seed, "stream_index": args.stream_index})
    print(dumps(out))
    _emit_manifest(args, [], started)
    return 0


def cmd_concurrence(args: argparse.Namespace) -> int:
    started = _iso_now()
    outputs: list[str] = []
    if args.table:
        dims = list(range(2, args.d_max + 1))
        rows = ["d,exact,approx"]
        values = []
        for d in dims:
            res = avg_concurrence(d, "exact")
            values.append(res.approx)
            rows.append(f"{d},{res.exact},{format(res.approx, '.17g')}")
        text = "\n".join(rows) + "\n"
        outputs += _write_text(args.out, text)
        if args.out is not None:
            from .figures import render_concurrence_figure

            fig_path = str(Path(args.out).with_suffix(".png"))
            render_concurrence_figure(dims, values, fig_path)
            outputs.append(fig_path)
        _emit_manifest(args, outputs, started)
        return 0
    if args.mode == "mc":
        stream = HaarStream(args.seed, args.stream_index)
        est = avg_concurrence(
            args.local_dim, "mc", n=args.n, stream=stream, threads=args.threads
        )
        print(
            dumps(
                {
                    "mode": "mc",
                    "local_dim": args.local_dim,
                    "mean": est.mean,
                    "std_error": est.std_error,
                    "n": est.n_samples,
                    "seed": est.seed,
                    "stream_index": est.stream_index,
                }
            )
        )
    else:
        res = avg_concurrence(args.local_dim, "exact")
        print(dumps({"mode": "exact", "local_dim": args.local_dim, "exact": str(res.exact), "approx": res.approx}))
    _emit_manifest(args, outputs, started)
    return 0


def cmd_check_haar(args: argparse.Namespace) -> int:
    started = _iso_now()
    stream = HaarStream(args.seed, args.stream_index)
    if args.dim == 2:
        value = normalization_quadrature(args.dim, args.group)
        norm = {
            "method": "tensor-quadrature",
            "value": value,
            "abs_error": abs(value - 1.0),
            "pass": abs(value - 1.0) < 1e-6,
        }
    else:
        value, se = normalization_mc(args.dim, args.group, args.mc_samples, stream.substream(1))
        norm = {
            "method": "box-mc",
            "value": value,
            "std_error": se,
            "abs_error": abs(value - 1.0),
            "pass": abs(value - 1.0) < max(1e-3, 4.0 * se),
        }
    jac = jacobian_constancy(args.dim, args.group, stream, points=args.points)
    report = {
        "dim": args.dim,
        "group": args.group.json_tag,
        "normalization": norm,
        "jacobian": {
            "mean_ratio": jac.mean_ratio,
            "rel_std": jac.rel_std,
            "threshold": jac.threshold,
            "pass": jac.passed,
        },
        "pass": bool(norm["pass"] and jac.passed),
    }
    print(dumps(report))
    _emit_manifest(args, [], started)
    return 0


# ------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unicomp",
        description="Composite parameterization, Haar sampling and integration over U(d)/SU(d).",
    )
    parser.add_argument("--version", action="version", version=f"unicomp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=0, help="64-bit stream seed")
        p.add_argument("--stream-index", type=int, default=0, help="substream index")

    def add_threads(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--threads",
            type=_positive,
            default=_default_threads(),
            help="worker threads (UNICOMP_THREADS env var as fallback; never changes results)",
        )

    p = sub.add_parser("sample", help="draw Haar-distributed parameters / matrices")
    p.add_argument("--group", type=_group_flag, default=Group.UNITARY)
    p.add_argument("--dim", type=_dim_flag, required=True)
    p.add_argument("--count", type=_positive, required=True)
    add_seed(p)
    p.add_argument("--emit", choices=("params", "matrices", "both"), default="params")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("build", help="build matrices from parameter files")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("decompose", help="recover parameters from unitary matrices")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--group", type=_group_flag, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("moment", help="exact absolute-entry moment of U(d)")
    p.add_argument("--dim", type=_dim_flag, required=True)
    p.add_argument("--power", type=int, required=True)
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("design-check", help="necessary entrywise moment test for t-designs")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--t", type=_positive, required=True)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(func=cmd_design_check)

    p = sub.add_parser("twirl", help="bilateral twirl of a bipartite state")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--local-dim", type=_dim_flag, required=True)
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--n", type=_positive, default=100_000)
    add_seed(p)
    add_threads(p)
    p.set_defaults(func=cmd_twirl)

    p = sub.add_parser("concurrence", help="average squared concurrence of random states")
    p.add_argument("--local-dim", type=_dim_flag, default=2)
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--n", type=_positive, default=50_000)
    add_seed(p)
    add_threads(p)
    p.add_argument("--table", action="store_true", help="emit the d -> average C^2 CSV series")
    p.add_argument("--d-max", type=_dim_flag, default=12)
    p.add_argument("--out", default=None, help="CSV path; a PNG figure is written alongside")
    p.set_defaults(func=cmd_concurrence)

    p = sub.add_parser("check-haar", help="normalization quadrature and Jacobian constancy")
    p.add_argument("--dim", type=_dim_flag, required=True)
    p.add_argument("--group", type=_group_flag, default=Group.UNITARY)
    add_seed(p)
    p.add_argument("--points", type=_positive, default=20)
    p.add_argument("--mc-samples", type=_positive, default=2_000_000)
    p.set_defaults(func=cmd_check_haar)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = argv
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"unicomp: validation error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"unicomp: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
