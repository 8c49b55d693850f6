"""Command-line entry point: ``entpower {metrics, fig, maximize}``.

Exit codes: 0 success, 1 computation failure, 2 invalid input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from importlib import resources
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import ascent, dualunitary, spinchain
from .io import MatrixFormatError, read_matrix, write_csv, write_manifest
from .metrics import state_entangling_power, summary
from .tensor import Bipartition, require_unitary

EXIT_OK, EXIT_COMPUTE, EXIT_INPUT = 0, 1, 2

FIG_LIMITS = {"fig1": 8, "fig2": 8, "fig4": 6}
FIG1_MODELS = ("nonintegrable", "integrable")
FIG2_MODELS = ("anderson", "mbl")
TIME_SERIES_HEADER = ("t", "E_U", "E_US", "Ep", "n_realizations", "seed")
FIG3_HEADER = ("J", "Ep_V", "E_loc_tstar", "L")
FIG4_HEADER = ("J", "t", "E_loc", "c", "lambda", "residual")

log = logging.getLogger("entpower")


class InputError(Exception):
    pass


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def load_schema(name: str = "maximize") -> dict:
    text = resources.files("entpower").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _u64(text: str) -> int:
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def _positive(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {val}")
    return val


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=0, help="unsigned 64-bit seed (default 0)")
    common.add_argument("--jobs", type=_positive, default=1, help="worker processes (default 1)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="entpower", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {tool_version()}")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("metrics", parents=[common], help="closed-form metrics of a unitary")
    m.add_argument("matrix", type=Path, help="binary or JSON-lines matrix file")
    m.add_argument("--dA", type=_positive, required=True)
    m.add_argument("--dB", type=_positive, required=True)

    f = sub.add_parser("fig", parents=[common], help="figure data as CSV")
    f.add_argument("target", choices=("fig1", "fig2", "fig3", "fig4"))
    f.add_argument("--L", type=_int_list, default=None,
                   help="system size(s); fig3 accepts a comma-separated list")
    f.add_argument("--model", type=_str_list, default=None, help="fig1/fig2 preset(s)")
    f.add_argument("--points", type=_positive, default=200, help="time points on [0, tmax]")
    f.add_argument("--tmax", type=float, default=20.0)
    f.add_argument("--realizations", type=_positive, default=20, help="disorder samples (fig2)")
    f.add_argument("--grid", type=_positive, default=None,
                   help="J grid size (fig3 default 65, fig4 default 13)")
    f.add_argument("--span", type=_positive, default=12, help="fig4 steps after t*")

    x = sub.add_parser("maximize", parents=[common], help="gradient ascent of Ep")
    x.add_argument("--d-side", dest="d_side", type=int, required=True)
    x.add_argument("--restarts", type=int, default=5)
    x.add_argument("--max-iter", dest="max_iter", type=_positive, default=ascent.MAX_ITER)
    x.add_argument("--epsilon", type=float, default=ascent.EPSILON)
    return p


def cmd_metrics(args) -> dict:
    try:
        m = read_matrix(args.matrix)
    except OSError as exc:
        raise InputError(f"cannot read {args.matrix}: {exc.strerror}") from None
    except MatrixFormatError as exc:
        raise InputError(f"{args.matrix}: {exc}") from None
    bip = Bipartition(args.dA, args.dB)
    try:
        u = require_unitary(m, bip.d)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rec = summary(u, bip)
    if rec["ep"] is None:
        rec["ep"] = state_entangling_power(u, bip, rng=args.seed).value
    return rec


def _check_L(target: str, values: list[int]) -> None:
    limit = FIG_LIMITS.get(target)
    for L in values:
        if L < 2 or L % 2:
            raise InputError(f"L must be a positive even integer, got {L}")
        if limit is not None and L > limit:
            raise InputError(f"{target} supports L <= {limit}, got {L}")


def _check_models(models: list[str], allowed: tuple[str, ...]) -> None:
    for name in models:
        if name not in allowed:
            raise InputError(f"unknown model {name!r}; expected one of {', '.join(allowed)}")


def cmd_fig(args) -> list[Path]:
    target = args.target
    out: Path = args.out
    if args.grid is not None and args.grid < 2:
        raise InputError("--grid needs at least 2 points")
    if target in ("fig1", "fig2"):
        Ls = args.L or [8]
        defaults = FIG1_MODELS if target == "fig1" else FIG2_MODELS
        models = args.model or list(defaults)
        _check_L(target, Ls)
        _check_models(models, spinchain.PRESETS)
        if len(Ls) != 1:
            raise InputError(f"{target} takes a single L")
        if not args.tmax > 0:
            raise InputError("--tmax must be positive")
        t_grid = np.linspace(0.0, args.tmax, args.points)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for model in models:
            reals = args.realizations if model in ("anderson", "mbl") else 1
            series = spinchain.time_series(model, Ls[0], t_grid, reals, args.seed, args.jobs)
            path = out / f"{target}_{model}_L{Ls[0]}.csv"
            n = write_csv(path, TIME_SERIES_HEADER, series.rows())
            if n != t_grid.size:
                raise RuntimeError(f"wrote {n} rows for a {t_grid.size}-point grid")
            paths.append(path)
        return paths
    if target == "fig3":
        Ls = args.L or [8, 16, 32, 48]
        _check_L(target, Ls)
        Js = dualunitary.j_grid(args.grid or dualunitary.DEFAULT_J_POINTS)
        rows = dualunitary.scan_tstar(Ls, Js)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "fig3.csv"
        n = write_csv(path, FIG3_HEADER, rows)
        if n != len(Ls) * Js.size:
            raise RuntimeError(f"wrote {n} rows, expected {len(Ls) * Js.size}")
        return [path]
    # fig4
    Ls = args.L or [6]
    _check_L(target, Ls)
    if len(Ls) != 1:
        raise InputError("fig4 takes a single L")
    Js = dualunitary.j_grid(args.grid or 13, 3 * np.pi / 16)
    scan = dualunitary.scan_relaxation(Ls[0], Js, args.span, args.jobs)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"fig4_L{Ls[0]}.csv"
    n = write_csv(path, FIG4_HEADER, scan.rows())
    if n != Js.size * scan.times.size:
        raise RuntimeError(f"wrote {n} rows, expected {Js.size * scan.times.size}")
    return [path]


def cmd_maximize(args) -> dict:
    lo, hi = ascent.D_SIDE_RANGE
    if not lo <= args.d_side <= hi:
        raise InputError(f"--d-side must lie in [{lo}, {hi}], got {args.d_side}")
    if args.restarts < 1:
        raise InputError(f"--restarts must be >= 1, got {args.restarts}")
    res = ascent.maximize(args.d_side, args.restarts, args.seed, args.epsilon,
                          args.max_iter, args.jobs)
    rec = res.as_dict()
    import jsonschema
    jsonschema.validate(rec, load_schema("maximize"))
    return rec


def _params(args) -> dict:
    skip = {"out", "verbose", "command"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in skip}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        if args.command == "metrics":
            rec = cmd_metrics(args)
            print(json.dumps(rec, indent=2))
            return EXIT_OK
        if args.command == "maximize":
            try:
                rec = cmd_maximize(args)
            except ascent.AscentError as exc:
                st = exc.state
                print(json.dumps({"error": str(exc), "d_side": args.d_side, "seed": args.seed,
                                  "iterations": st.iteration, "ep_final": st.ep}), file=sys.stdout)
                return EXIT_COMPUTE
            print(json.dumps(rec, indent=2))
            if args.out != Path("."):
                args.out.mkdir(parents=True, exist_ok=True)
                path = args.out / "maximize.json"
                path.write_text(json.dumps(rec, indent=2) + "\n")
                write_manifest(args.out / "maximize.manifest.json", "maximize", _params(args),
                               args.seed, [path], started, tool_version())
            return EXIT_OK
        paths = cmd_fig(args)
        write_manifest(args.out / f"{args.target}.manifest.json", f"fig {args.target}",
                       _params(args), args.seed, paths, started, tool_version())
        for path in paths:
            print(path)
        return EXIT_OK
    except InputError as exc:
        print(f"entpower: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - any numerical failure maps to exit code 1
        log.debug("compute failure", exc_info=True)
        print(f"entpower: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
