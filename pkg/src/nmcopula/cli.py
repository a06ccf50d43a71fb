"""Command line interface.

Exit codes: 0 success, 1 usage or invalid parameters, 2 data problems,
3 numerical failures.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from nmcopula import families as fam
from nmcopula.copula import NonMonoCopula
from nmcopula.data import compute_returns, ingest_csv
from nmcopula.estimation import FitOptions, PseudoSample, default_grid, fit, select
from nmcopula.exceptions import CopulaError, DataError, NumericalError
from nmcopula.families import CopulaParams, Family
from nmcopula.io import read_columns, write_columns, write_results
from nmcopula.transforms import (
    TransformSpec,
    bernoulli_measure_map,
    build_measure_map,
    scarsini_map,
)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text):
    if text is None or text == "":
        return []
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse parameter list {text!r}") from None


# --------------------------------------------------------------------------
# argument helpers


def _add_input_args(p):
    p.add_argument("--input", "-i", required=True, help="input CSV file")
    p.add_argument(
        "--input-kind",
        choices=("auto", "prices", "pairs"),
        default="auto",
        help="daily bars (date, close, volume) or two numeric columns; auto looks for u,v columns",
    )
    p.add_argument("--date-col", default="date")
    p.add_argument("--close-col", default="close")
    p.add_argument("--volume-col", default="volume")
    p.add_argument("--date-format", default=None, help="strptime format, ISO dates by default")
    p.add_argument("--u-col", default="u", help="first column for pairs input")
    p.add_argument("--v-col", default="v", help="second column for pairs input")


def _add_base_args(p, default_family=None):
    p.add_argument("--family", default=default_family, help="frank, clayton, gumbel, gaussian, t, tawn1_rot90, independence")
    p.add_argument("--theta", type=float, default=None, help="dependence parameter")
    p.add_argument("--rho", type=float, default=None, help="correlation (alias of --theta)")
    p.add_argument("--nu", type=float, default=None, help="degrees of freedom for t")
    p.add_argument("--psi1", type=float, default=None, help="asymmetry for tawn1_rot90")


def _load_sample(args):
    path = Path(args.input)
    if not path.exists():
        raise DataError(f"input file {path} does not exist")
    kind = args.input_kind
    if kind == "auto":
        with open(path, newline="", encoding="utf-8-sig") as fh:
            header = [h.strip().lower() for h in fh.readline().split(",")]
        kind = "pairs" if args.u_col.lower() in header and args.v_col.lower() in header else "prices"
    if kind == "pairs":
        try:
            _, arr = read_columns(path, [args.u_col, args.v_col])
        except ValueError as exc:
            raise DataError(str(exc)) from None
        return PseudoSample.from_data(arr[:, 0], arr[:, 1]), {"input_kind": "pairs"}
    series = ingest_csv(path, args.date_col, args.close_col, args.volume_col, args.date_format)
    ret = compute_returns(series)
    info = {
        "input_kind": "prices",
        "first_date": ret.dates[0].isoformat(),
        "last_date": ret.dates[-1].isoformat(),
    }
    return PseudoSample.from_data(ret.r, ret.w), info


def _base_from_args(args):
    if args.family is None:
        raise UsageError("--family is required")
    family = Family.parse(args.family)
    theta = args.theta if args.theta is not None else args.rho
    if family is Family.INDEPENDENCE:
        return CopulaParams.independence()
    if theta is None:
        raise UsageError("--theta (or --rho) is required")
    if family is Family.STUDENT_T and args.nu is None:
        raise UsageError("--nu is required for the t copula")
    if family is Family.TAWN_ROT90 and args.psi1 is None:
        raise UsageError("--psi1 is required for tawn1_rot90")
    return CopulaParams(family, theta, nu=args.nu, psi1=args.psi1)


def _map_from_args(args):
    """Return ``(transform or None, measure map or None)``."""
    kind = (args.transform or "none").lower()
    params = _floats(args.params)
    if kind in ("none", "identity"):
        return None, None
    if kind == "scarsini":
        if len(params) != 5:
            raise UsageError("scarsini needs 5 parameters: beta,gamma,delta,epsilon,zeta")
        return None, scarsini_map(*params)
    if kind == "bernoulli":
        return None, bernoulli_measure_map()
    if kind == "piecewise":
        if len(params) < 4 or len(params) % 2:
            raise UsageError("piecewise needs x0,y0,x1,y1,... knot pairs")
        t = TransformSpec.piecewise(list(zip(params[::2], params[1::2])))
    else:
        t = TransformSpec(kind, tuple(params))
    return t, build_measure_map(t)


def _load_config(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None


def _options(args, config):
    opts = dict(config.get("options", {}))
    if getattr(args, "max_iter", None) is not None:
        opts["maxiter"] = args.max_iter
    try:
        return FitOptions(**opts)
    except TypeError as exc:
        raise UsageError(f"bad optimizer options: {exc}") from None


def _print_results(results, criterion=None):
    for i, r in enumerate(results):
        mark = "*" if r.winner else " "
        if r.ok:
            est = ", ".join(f"{k}={v:.6g}" for k, v in r.estimates.items())
            print(f"{mark}{i + 1:>3} {r.label:<18} loglik={r.loglik:.4f} aic={r.aic:.4f} bic={r.bic:.4f}  {est}")
        else:
            print(f" {i + 1:>3} {r.label:<18} failed: {r.error}")


# --------------------------------------------------------------------------
# commands


def cmd_fit(args):
    config = _load_config(args.config)
    s, info = _load_sample(args)
    family = args.family or config.get("family")
    if family is None:
        raise UsageError("--family is required")
    transform = args.transform if args.transform is not None else config.get("transform", "f2")
    r = fit(family, transform, s, _options(args, config))
    if args.out:
        write_results([r], args.out, ranked=False, extra=info)
    _print_results([r])
    return 0


def cmd_select(args):
    config = _load_config(args.config)
    s, info = _load_sample(args)
    grid = config.get("grid")
    if grid is not None:
        grid = [tuple(cell) for cell in grid]
    criterion = args.criterion or config.get("criterion", "aic")
    sel = select(s, grid or default_grid(), criterion, _options(args, config), n_jobs=args.n_jobs)
    if args.out:
        write_results(sel.results, args.out, extra={**info, "criterion": criterion, "n": s.n})
    _print_results(sel.results)
    return 0


def cmd_simulate(args):
    base = _base_from_args(args)
    t, g = _map_from_args(args)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    if t is not None:
        xy = NonMonoCopula(base, t).sample(args.n, args.seed)
    else:
        xy = fam.sample(base, args.n, args.seed)
        if g is not None:
            xy = np.column_stack([xy[:, 0], g(xy[:, 1])])
    write_columns(args.out, [xy[:, 0], xy[:, 1]], ["u", "v"])
    return 0


def cmd_transform_plot(args):
    t, g = _map_from_args(args)
    if g is None:
        t = TransformSpec.identity()
        g = build_measure_map(t)
    x = np.linspace(0.0, 1.0, args.points)
    cols, names = [x, g(x)], ["x", "g"]
    if t is not None:
        cols.append(t(x))
        names.append("f")
    write_columns(args.out, cols, names)
    return 0


def build_parser():
    p = _Parser(prog="nmcopula", description="Copulas for non-monotone dependence.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pf = sub.add_parser("fit", help="fit one model")
    _add_input_args(pf)
    pf.add_argument("--family", default=None)
    pf.add_argument("--transform", default=None, help="f1, f2, f3 or none (default f2)")
    pf.add_argument("--config", default=None, help="JSON file with defaults")
    pf.add_argument("--max-iter", type=int, default=None)
    pf.add_argument("--out", "-o", default=None, help="output .csv or .json")
    pf.set_defaults(func=cmd_fit)

    ps = sub.add_parser("select", help="fit a model grid and rank by AIC or BIC")
    _add_input_args(ps)
    ps.add_argument("--config", default=None, help="JSON file with 'grid', 'criterion', 'options'")
    ps.add_argument("--criterion", choices=("aic", "bic"), default=None)
    ps.add_argument("--max-iter", type=int, default=None)
    ps.add_argument("--n-jobs", type=int, default=1)
    ps.add_argument("--out", "-o", default=None, help="output .csv or .json")
    ps.set_defaults(func=cmd_select)

    pm = sub.add_parser("simulate", help="sample from a copula")
    _add_base_args(pm)
    pm.add_argument("--transform", default="none", help="f1, f2, f3, piecewise, scarsini, bernoulli or none")
    pm.add_argument("--params", default=None, help="comma separated transform parameters")
    pm.add_argument("--n", type=int, default=1000)
    pm.add_argument("--seed", type=int, default=None)
    pm.add_argument("--out", "-o", default=None, help="output .csv (stdout if omitted)")
    pm.set_defaults(func=cmd_simulate)

    pt = sub.add_parser("transform-plot", help="tabulate a measure-preserving map")
    pt.add_argument("--transform", required=True)
    pt.add_argument("--params", default=None)
    pt.add_argument("--points", type=int, default=1001)
    pt.add_argument("--out", "-o", default=None)
    pt.set_defaults(func=cmd_transform_plot)
    return p


_VALUE_FLAGS = ("--params", "--theta", "--rho")


def _join_negative_values(argv):
    """Let ``--params -0.16,0.54`` through argparse by rewriting it to ``--params=...``."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1][:2] not in ("--",):
            nxt = argv[i + 1]
            if nxt.startswith("-") and nxt[1:2] in tuple("0123456789."):
                out.append(f"{tok}={nxt}")
                i += 2
                continue
        out.append(tok)
        i += 1
    return out


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_join_negative_values(argv))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nmcopula: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"nmcopula: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"nmcopula: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CopulaError as exc:
        print(f"nmcopula: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nmcopula: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
