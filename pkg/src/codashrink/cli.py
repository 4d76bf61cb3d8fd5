"""Command line interface: ``codashrink {transform|estimate|simulate|moments}``.

Exit codes: 0 success, 2 input/config error, 3 domain error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CodaError, InvalidParameter
from .infogeo import theta_of
from .shrinkage import delta_moments, exp_shrink, shrink
from .simlab import (
    SimConfig,
    SimScenario,
    mc_clr_moments,
    records_to_csv,
    run_benchmark,
    stream,
    summarize_quartiles,
)
from .simplex import (
    as_composition,
    clr,
    closure,
    generalized_power_transform,
    power_transform,
    uniform,
)

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN = 0, 2, 3


class InputError(Exception):
    """Unreadable or malformed input; maps to exit code 2."""


@dataclass
class CountMatrix:
    rows: np.ndarray
    column_names: list[str] | None = None
    row_ids: list[str] | None = None

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _delimiter(path: str, sep: str | None) -> str:
    if sep:
        return "\t" if sep in ("tab", "\\t", "\t") else sep
    return "\t" if Path(path).suffix.lower() in (".tsv", ".tab") else ","


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_count_matrix(
    path: str, *, sep: str | None = None, header: bool | None = None, id_col: bool = False
) -> CountMatrix:
    """Parse a CSV/TSV matrix of nonnegative values, one sample per row.

    `header=None` sniffs: the first row is a header when any of its value
    cells is not numeric.
    """
    try:
        text = Path(path).read_text() if path != "-" else sys.stdin.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    try:
        raw = [(i + 1, row) for i, row in enumerate(csv.reader(io.StringIO(text), delimiter=_delimiter(path, sep)))]
    except csv.Error as exc:
        raise InputError(f"{path}: malformed CSV ({exc})") from None
    raw = [(ln, row) for ln, row in raw if any(c.strip() for c in row)]
    if not raw:
        raise InputError(f"{path}: no data")
    start = 1 if id_col else 0
    names = None
    if header is None:
        header = not all(_is_number(c) for c in raw[0][1][start:])
    if header:
        names = [c.strip() for c in raw[0][1][start:]]
        raw = raw[1:]
    if not raw:
        raise InputError(f"{path}: header but no data rows")
    width = len(raw[0][1])
    if width - start < 2:
        raise InputError(f"{path}: need at least 2 value columns")
    if names is not None and len(names) != width - start:
        raise InputError(f"{path}: header has {len(names)} value columns, data have {width - start}")
    values, ids = [], []
    for ln, row in raw:
        if len(row) != width:
            raise InputError(f"{path}:{ln}: expected {width} fields, found {len(row)}")
        try:
            vals = [float(c) for c in row[start:]]
        except ValueError:
            raise InputError(f"{path}:{ln}: non-numeric value") from None
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise InputError(f"{path}:{ln}: values must be finite and nonnegative")
        values.append(vals)
        if id_col:
            ids.append(row[0].strip())
    return CountMatrix(np.asarray(values), names, ids if id_col else None)


def _read_target(source: str, D: int) -> np.ndarray:
    if source == "uniform":
        return uniform(D)
    m = read_count_matrix(source)
    if m.rows.shape[0] != 1:
        raise InputError(f"{source}: target file must hold exactly one row")
    if m.dim != D:
        raise InputError(f"{source}: target has {m.dim} parts, data have {D}")
    try:
        return closure(m.rows[0])
    except CodaError as exc:
        raise InputError(f"{source}: {exc}") from None


def _open_out(path: str | None):
    if path in (None, "-"):
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from None


def _emit_rows(rows: list[dict], columns: list[str], fmt: str, out_path: str | None) -> None:
    fh, close = _open_out(out_path)
    try:
        if fmt == "json":
            json.dump(rows, fh, indent=1)
            fh.write("\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_cell(r.get(c)) for c in columns])
    finally:
        if close:
            fh.close()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _fmt(v)
    return str(v)


def _row_label(m: CountMatrix, i: int) -> str:
    return m.row_ids[i] if m.row_ids else str(i + 1)


def _part_names(m: CountMatrix, count: int | None = None) -> list[str]:
    names = m.column_names or [f"p{j + 1}" for j in range(m.dim)]
    return names[: count if count is not None else m.dim]


def _is_integral(row: np.ndarray) -> bool:
    return bool(np.all(row == np.round(row)))


# transform -----------------------------------------------------------------

def cmd_transform(args) -> int:
    m = read_count_matrix(args.input, sep=args.sep, header=args.header, id_col=args.id_col)
    D = m.dim
    if args.op in ("power", "gpower") and args.beta is None:
        raise InputError(f"--beta is required for --op {args.op}")
    tau = _read_target(args.target, D) if args.op == "gpower" else None
    n_out = D - 1 if args.op == "alr" else D
    names = _part_names(m, n_out)
    rows, ok = [], 0
    for i, x in enumerate(m.rows):
        rec: dict = {"id": _row_label(m, i), "error": None}
        try:
            q = closure(x)
            if args.op == "clr":
                vals = clr(q)
            elif args.op == "alr":
                vals = theta_of(q)
            elif args.op == "power":
                vals = power_transform(q, args.beta)
            else:
                vals = generalized_power_transform(q, tau, args.beta)
            ok += 1
        except CodaError as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
            vals = [None] * n_out
        rec.update({name: (None if v is None else float(v)) for name, v in zip(names, vals)})
        rows.append(rec)
    _emit_rows(rows, ["id", *names, "error"], args.format, args.out)
    return EXIT_OK if ok else EXIT_DOMAIN


# estimate ------------------------------------------------------------------

def _parse_weight(value: str, flag: str):
    if value == "auto":
        return "auto"
    try:
        w = float(value)
    except ValueError:
        raise InputError(f"{flag} must be 'auto' or a number in [0, 1]") from None
    if not 0.0 <= w <= 1.0:
        raise InputError(f"{flag} must lie in [0, 1]")
    return w


def _fixed_weight_estimate(method: str, x: np.ndarray, tau: np.ndarray, w: float) -> np.ndarray:
    # fixed weights only need the observed point, so real-valued rows are fine
    q_hat = closure(x)
    if method == "shrink":
        return w * tau + (1.0 - w) * q_hat
    support = q_hat > 0
    out = np.zeros_like(q_hat)
    if support.sum() == 1:
        out[support] = 1.0
        return out
    tau_s = tau[support]
    out[support] = generalized_power_transform(q_hat[support], tau_s / tau_s.sum(), w)
    return out


def cmd_estimate(args) -> int:
    m = read_count_matrix(args.input, sep=args.sep, header=args.header, id_col=args.id_col)
    D = m.dim
    tau = _read_target(args.target, D)
    weight = None
    if args.method == "shrink":
        weight = _parse_weight(args.lam, "--lambda")
    elif args.method == "expshrink":
        weight = _parse_weight(args.beta, "--beta")
    names = _part_names(m)
    rows, ok = [], 0
    for i, x in enumerate(m.rows):
        label = _row_label(m, i)
        if weight == "auto" and not _is_integral(x):
            print(f"row {label}: non-integer counts cannot be used with automatic weights",
                  file=sys.stderr)
            return EXIT_DOMAIN
        rec: dict = {"id": label, "weight": None, "clamped": None, "error": None}
        try:
            if args.method == "empirical":
                est = closure(x)
            elif weight == "auto":
                counts = x.astype(np.int64)
                res = shrink(counts, tau, "auto") if args.method == "shrink" else exp_shrink(counts, tau, "auto")
                est, rec["weight"], rec["clamped"] = res.estimate, res.weight, res.weight_was_clamped
            else:
                est = _fixed_weight_estimate(args.method, x, tau, weight)
                rec["weight"], rec["clamped"] = weight, False
            ok += 1
        except CodaError as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
            est = [None] * D
        rec.update({name: (None if v is None else float(v)) for name, v in zip(names, est)})
        rows.append(rec)
    _emit_rows(rows, ["id", *names, "weight", "clamped", "error"], args.format, args.out)
    return EXIT_OK if ok else EXIT_DOMAIN


# moments -------------------------------------------------------------------

def _parse_vector(text: str, flag: str) -> np.ndarray:
    try:
        return np.asarray([float(t) for t in text.replace(";", ",").split(",") if t.strip()])
    except ValueError:
        raise InputError(f"{flag}: expected comma-separated numbers") from None


def _parse_q(text: str, renormalize: bool) -> np.ndarray:
    t = text.strip().lower()
    if t.startswith("uniform"):
        try:
            return uniform(int(t[len("uniform"):]))
        except ValueError:
            raise InputError("--q: use uniformD, e.g. uniform3") from None
    q = _parse_vector(text, "--q")
    if renormalize:
        return closure(q)
    try:
        return as_composition(q)
    except InvalidParameter as exc:
        raise InputError(f"--q: {exc} (pass --renormalize to close it)") from None


def cmd_moments(args) -> int:
    if (args.q is None) == (args.counts is None):
        raise InputError("give exactly one of --q or --counts")
    if args.q is not None:
        q = _parse_q(args.q, args.renormalize)
        if args.n is None:
            raise InputError("--n is required with --q")
        n = args.n
    else:
        counts = _parse_vector(args.counts, "--counts")
        if not _is_integral(counts):
            raise InputError("--counts must be integers")
        counts = counts.astype(np.int64)
        q = shrink(counts).estimate
        n = args.n if args.n is not None else int(counts.sum())
    if n < 1:
        raise InputError("--n must be at least 1")
    mom = delta_moments(q, n, form=args.variance_form)
    c = clr(q)
    mc = None
    if args.mc:
        mc = mc_clr_moments(q, n, args.mc, stream(args.seed, 2))
    rows = []
    for j in range(q.shape[0]):
        r = {"part": j + 1, "q": float(q[j]), "clr": float(c[j]),
             "E": float(mom.mean[j]), "V": float(mom.variance[j])}
        if mc is not None:
            r.update(mc_mean=float(mc.mean[j]), mc_var=float(mc.variance[j]),
                     mc_se=float(mc.std_error[j]), mc_used=mc.replicates_used,
                     mc_rejected=mc.rejected_zero_draws)
        rows.append(r)
    cols = ["part", "q", "clr", "E", "V"]
    if mc is not None:
        cols += ["mc_mean", "mc_var", "mc_se", "mc_used", "mc_rejected"]
    if mom.variance_clamped:
        print("note: negative variance approximations were clipped to 0", file=sys.stderr)
    _emit_rows(rows, cols, args.format, args.out)
    return EXIT_OK


# simulate ------------------------------------------------------------------

def build_sim_config(args) -> SimConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise InputError(f"cannot read {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise InputError(f"{args.config}: top level must be an object")
    try:
        cfg = SimConfig.from_dict(data)
        if any(v is not None for v in (args.dim, args.support, args.alpha0)):
            dim = args.dim if args.dim is not None else 100
            scen = SimScenario(
                args.label,
                dim,
                args.support if args.support is not None else dim,
                args.alpha0 if args.alpha0 is not None else 1.0,
            )
            cfg = SimConfig((scen,), cfg.sample_sizes, cfg.replicates, cfg.seed)
        overrides = {}
        if args.sizes is not None:
            try:
                overrides["sample_sizes"] = tuple(int(s) for s in args.sizes.split(","))
            except ValueError:
                raise InvalidParameter("sample_sizes: expected comma-separated integers") from None
        if args.replicates is not None:
            overrides["replicates"] = args.replicates
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            merged = {**asdict(cfg), **overrides}
            cfg = SimConfig(cfg.scenarios, merged["sample_sizes"], merged["replicates"], merged["seed"])
    except InvalidParameter as exc:
        raise InputError(f"invalid config: {exc}") from None
    return cfg


def cmd_simulate(args) -> int:
    cfg = build_sim_config(args)
    records = run_benchmark(cfg, threads=args.threads)
    fh, close = _open_out(args.out)
    try:
        if args.format == "json":
            json.dump([asdict(r) for r in records], fh)
            fh.write("\n")
        else:
            fh.write(records_to_csv(records))
    finally:
        if close:
            fh.close()
    summary_fh = sys.stderr if args.out in (None, "-") else sys.stdout
    w = csv.writer(summary_fh, lineterminator="\n")
    w.writerow(["scenario", "n", "estimator", "count", "min", "q1", "median", "q3", "max"])
    for s in summarize_quartiles(records):
        w.writerow([s.scenario, s.n, s.estimator, s.count,
                    *(f"{v:.6g}" for v in (s.minimum, s.q1, s.median, s.q3, s.maximum))])
    return EXIT_OK


# parser --------------------------------------------------------------------

def _add_io(p: argparse.ArgumentParser, matrix_input: bool = True) -> None:
    if matrix_input:
        p.add_argument("input", help="CSV/TSV count matrix, one sample per row ('-' for stdin)")
        p.add_argument("--sep", help="field separator (default: by extension; 'tab' for TSV)")
        hdr = p.add_mutually_exclusive_group()
        hdr.add_argument("--header", dest="header", action="store_true", default=None)
        hdr.add_argument("--no-header", dest="header", action="store_false")
        p.add_argument("--id-col", action="store_true", help="first column holds row ids")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codashrink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="apply clr/alr/power transforms row-wise")
    _add_io(p)
    p.add_argument("--op", choices=("clr", "alr", "power", "gpower"), required=True)
    p.add_argument("--beta", type=float)
    p.add_argument("--target", default="uniform", help="'uniform' or a one-row file")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("estimate", help="estimate compositions from counts")
    _add_io(p)
    p.add_argument("--method", choices=("empirical", "shrink", "expshrink"), required=True)
    p.add_argument("--target", default="uniform", help="'uniform' or a one-row file")
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--beta", default="auto")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run the estimator benchmark")
    _add_io(p, matrix_input=False)
    p.add_argument("--config", help="JSON file mirroring SimConfig")
    p.add_argument("--dim", type=int)
    p.add_argument("--support", type=int)
    p.add_argument("--alpha0", type=float)
    p.add_argument("--label", default="custom")
    p.add_argument("--sizes", help="comma-separated sample sizes")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker threads (default: $CODASHRINK_THREADS or all cores)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("moments", help="Taylor moments of clr(q_hat), optionally against Monte Carlo")
    _add_io(p, matrix_input=False)
    p.add_argument("--q", help="composition, e.g. 0.5,0.25,0.25 or uniform3")
    p.add_argument("--counts", help="count row; the shrinkage estimate stands in for q")
    p.add_argument("--n", type=int)
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo replicates (0 = off)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variance-form", choices=("delta", "printed"), default="delta")
    p.add_argument("--renormalize", action="store_true", help="close --q instead of rejecting it")
    p.set_defaults(func=cmd_moments)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CodaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
