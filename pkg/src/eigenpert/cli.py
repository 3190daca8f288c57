"""Command-line front end: instance file I/O, bound tables, certification
sweeps, and tightness scans with CSV output.

Instance files are plain text, one `key = value` pair per line:

    # comment lines and blank lines are ignored
    dim = 2
    lambdas = [100.0, 1.0]
    vectors = [[1.0, 1.0]]     # or one `vector = [...]` line per direction
    seed = 42                  # optional
    recipe = "golden"          # optional

Library indices are 0-based; everything printed or serialized here (tables,
CSV columns, the --j flag) uses the 1-based convention of the plots.
"""

from __future__ import annotations

import argparse
import ast
import math
import os
import sys

import numpy as np

from . import bounds as bnd
from . import harness
from .rankone import rankone_full
from .symmat import PerturbationSet, Spectrum, build_perturbed, jacobi_eig

CSV_HEADER = "d,m,j,lambda1,ratio,observed,bound_rankm,bound_rank1,seed"
THREADS_ENV = "EIGENPERT_THREADS"


class InstanceParseError(ValueError):
    """Instance file rejected; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _fmt(x: float) -> str:
    """15 significant digits, plain decimal point."""
    return f"{x:.15g}"


def parse_instance_text(text: str, source: str = "<string>") -> harness.Instance:
    """Parse the key/array instance format with line-precise diagnostics."""
    dim = None
    lambdas = None
    lambdas_line = 0
    vectors: list = []
    vector_lines: list = []
    seed = 0
    recipe = f"file:{source}"

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InstanceParseError(line_no, f"expected 'key = value', got {raw!r}")
        key, _, rhs = line.partition("=")
        key = key.strip()
        rhs = rhs.strip()
        try:
            value = ast.literal_eval(rhs)
        except (ValueError, SyntaxError) as exc:
            raise InstanceParseError(line_no, f"cannot parse value {rhs!r}: {exc}") from exc

        def as_floats(seq, what):
            try:
                return [float(x) for x in seq]
            except (TypeError, ValueError) as exc:
                raise InstanceParseError(line_no, f"{what} has a non-numeric entry: {exc}") from exc

        if key == "dim":
            if not isinstance(value, int) or value < 1:
                raise InstanceParseError(line_no, f"dim must be a positive integer, got {value!r}")
            dim = value
        elif key == "lambdas":
            if not isinstance(value, (list, tuple)) or not value:
                raise InstanceParseError(line_no, "lambdas must be a non-empty array")
            lambdas = as_floats(value, "lambdas")
            lambdas_line = line_no
        elif key == "vectors":
            if not isinstance(value, (list, tuple)):
                raise InstanceParseError(line_no, "vectors must be an array of arrays")
            for k, vec in enumerate(value):
                if not isinstance(vec, (list, tuple)):
                    raise InstanceParseError(line_no, f"vectors[{k}] is not an array")
                vectors.append(as_floats(vec, f"vectors[{k}]"))
                vector_lines.append(line_no)
        elif key == "vector":
            if not isinstance(value, (list, tuple)):
                raise InstanceParseError(line_no, "vector must be an array")
            vectors.append(as_floats(value, "vector"))
            vector_lines.append(line_no)
        elif key == "seed":
            if not isinstance(value, int):
                raise InstanceParseError(line_no, f"seed must be an integer, got {value!r}")
            seed = value
        elif key == "recipe":
            recipe = str(value)
        else:
            raise InstanceParseError(line_no, f"unknown key {key!r}")

    if lambdas is None:
        raise InstanceParseError(0, "missing required key 'lambdas'")
    if dim is None:
        dim = len(lambdas)
    if len(lambdas) != dim:
        raise InstanceParseError(
            lambdas_line, f"lambdas has {len(lambdas)} entries but dim = {dim}"
        )
    for idx, lam in enumerate(lambdas):
        if not lam > 0.0:
            raise InstanceParseError(
                lambdas_line, f"lambdas[{idx + 1}] = {lam!r} is not positive"
            )
    for idx in range(len(lambdas) - 1):
        if lambdas[idx] < lambdas[idx + 1]:
            raise InstanceParseError(
                lambdas_line,
                f"lambdas[{idx + 1}] = {lambdas[idx]!r} < lambdas[{idx + 2}] = "
                f"{lambdas[idx + 1]!r}: not descending",
            )
    for k, vec in enumerate(vectors):
        if len(vec) != dim:
            raise InstanceParseError(
                vector_lines[k], f"vector {k + 1} has {len(vec)} entries, expected {dim}"
            )

    return harness.Instance(
        spectrum=Spectrum(np.array(lambdas)),
        perts=PerturbationSet(tuple(np.array(v) for v in vectors), dim=dim),
        seed=seed,
        meta=recipe,
    )


def load_instance(path: str) -> harness.Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance_text(fh.read(), source=path)


def format_instance(instance: harness.Instance) -> str:
    lines = [
        f"dim = {instance.d}",
        "lambdas = [" + ", ".join(_fmt(x) for x in instance.spectrum.lambdas) + "]",
    ]
    for v in instance.perts.vectors:
        lines.append("vector = [" + ", ".join(_fmt(x) for x in v) + "]")
    lines.append(f"seed = {instance.seed}")
    lines.append(f'recipe = "{instance.meta}"')
    return "\n".join(lines) + "\n"


def render_scan_csv(records, fit=None, fit_note: str | None = None) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    str(r.d),
                    str(r.m),
                    str(r.j),
                    _fmt(r.lambda1),
                    _fmt(r.ratio),
                    _fmt(r.observed),
                    _fmt(r.bound_rankm),
                    _fmt(r.bound_rank1) if math.isfinite(r.bound_rank1) else "nan",
                    str(r.seed),
                ]
            )
        )
    if fit is not None:
        lines.append(
            f"# slope: {_fmt(fit.slope)} intercept: {_fmt(fit.intercept)} "
            f"rms: {_fmt(fit.residual_rms)} points: {fit.count}"
        )
    elif fit_note is not None:
        lines.append(f"# slope: {fit_note}")
    return "\n".join(lines) + "\n"


BOUNDS_CSV_HEADER = "kind,side,i,j,observed,bound,slack,pass"


def render_bounds_csv(reports) -> str:
    """Per-entry CSV across all reports (1-based indices, '-' for absent j)."""
    lines = [BOUNDS_CSV_HEADER]
    for rep in reports:
        for e in rep.entries:
            ok = e.slack >= -bnd.PASS_RTOL * max(1.0, e.bound)
            lines.append(
                ",".join(
                    [
                        rep.kind,
                        e.side,
                        str(e.i + 1),
                        str(e.j + 1) if e.j is not None else "-",
                        _fmt(e.observed),
                        _fmt(e.bound),
                        _fmt(e.slack),
                        "1" if ok else "0",
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cmd_eig(args) -> int:
    try:
        inst = load_instance(args.instance)
    except (OSError, InstanceParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.method == "secular":
        if inst.m != 1:
            print(
                f"error: --method secular requires exactly one perturbation vector, "
                f"instance has m={inst.m}",
                file=sys.stderr,
            )
            return 2
        eig = rankone_full(inst.spectrum, inst.perts.vectors[0])
    else:
        eig = jacobi_eig(build_perturbed(inst.spectrum, inst.perts))
    print(f"d = {inst.d}")
    print(f"m = {inst.m}")
    for i, val in enumerate(eig.values, start=1):
        print(f"eigenvalue {i} = {_fmt(val)}")
    for i in range(eig.d):
        comps = ", ".join(_fmt(x) for x in eig.basis[:, i])
        print(f"eigenvector {i + 1} = [{comps}]")
    return 0


def parse_eig_values(text: str) -> list:
    """Eigenvalues back out of cmd_eig output (supports round-tripping)."""
    vals = []
    for line in text.splitlines():
        if line.startswith("eigenvalue "):
            vals.append(float(line.split("=", 1)[1]))
    return vals


def cmd_bounds(args) -> int:
    try:
        inst = load_instance(args.instance)
    except (OSError, InstanceParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    reports = harness.certify(inst)
    by_kind = {r.kind: r for r in reports}
    params = bnd.BoundParams.from_perturbations(inst.perts)
    cm = bnd.cm_constant(params)

    if args.csv:
        try:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write(render_bounds_csv(reports))
        except OSError as exc:
            print(f"error: cannot write {args.csv}: {exc}", file=sys.stderr)
            return 2

    print(
        f"instance: d={inst.d} m={inst.m} V={_fmt(params.v_bound)} "
        f"v_inf={_fmt(params.v_inf)} C_m={_fmt(cm)}"
    )
    ev = by_kind["eigenvalue-rankm"]
    lo = {e.i: e for e in ev.entries if e.side == "lower"}
    hi = {e.i: e for e in ev.entries if e.side == "upper"}
    rank1 = by_kind.get("eigenvalue-rank1")
    b6 = {e.i: e.bound for e in rank1.entries} if rank1 else {}
    print("eigenvalues:")
    print("  i  nu_i  interval_lo  interval_hi  bound_rank1  pass")
    for i in sorted(hi):
        ok = (
            lo[i].slack >= -bnd.PASS_RTOL * max(1.0, lo[i].bound)
            and hi[i].slack >= -bnd.PASS_RTOL * max(1.0, hi[i].bound)
        )
        b6s = _fmt(b6[i]) if i in b6 else "-"
        print(
            f"  {i + 1}  {_fmt(hi[i].observed)}  {_fmt(lo[i].bound)}  "
            f"{_fmt(hi[i].bound)}  {b6s}  {'ok' if ok else 'FAIL'}"
        )

    vec_m = by_kind["eigvec-rankm"]
    vec_1 = by_kind.get("eigvec-rank1")
    vec_r = by_kind.get("eigvec-rank1-refined")
    b8 = {(e.i, e.j): e.bound for e in vec_1.entries} if vec_1 else {}
    b9 = {(e.i, e.j): e.bound for e in vec_r.entries} if vec_r else {}
    print("eigenvector coordinates:")
    print("  i  j  observed  bound_rank1  bound_refined  bound_rankm  pass")
    for e in vec_m.entries:
        ok = e.slack >= -bnd.PASS_RTOL * max(1.0, e.bound)
        key = (e.i, e.j)
        c8 = _fmt(b8[key]) if key in b8 else "-"
        c9 = _fmt(b9[key]) if key in b9 else "-"
        print(
            f"  {e.i + 1}  {e.j + 1}  {_fmt(e.observed)}  {c8}  {c9}  "
            f"{_fmt(e.bound)}  {'ok' if ok else 'FAIL'}"
        )

    for rep in reports:
        for note in rep.notes:
            print(f"note ({rep.kind}): {note}")
    all_pass = all(r.passed for r in reports)
    print(f"overall: {'PASS' if all_pass else 'FAIL'}")
    return 0 if all_pass else 1


def cmd_verify(args) -> int:
    threads = args.threads or _default_threads()
    if args.d or args.m or args.lambda1_list or args.seed_list or args.seeds:
        dims = args.d or list(harness.DEFAULT_DIMS)
        ms = args.m or list(harness.DEFAULT_MS)
        lam1s = args.lambda1_list or list(harness.DEFAULT_LAMBDA1S)
        seeds = args.seed_list or list(range(args.seeds or harness.DEFAULT_N_SEEDS))
        points = [
            harness.GridPoint(d, m, lam1, seed)
            for d in dims
            for m in ms
            for lam1 in lam1s
            for seed in seeds
        ]
    else:
        points = harness.default_grid()

    try:
        summary = harness.certify_grid(
            points, threads=threads, bound_scale=args.perturb_bound
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"instances: {summary.n_instances}")
    print(f"reports: {summary.n_reports}")
    print(f"failures: {len(summary.failures)}")
    print("worst slack by kind:")
    for kind in sorted(summary.worst_slack):
        print(f"  {kind}: {_fmt(summary.worst_slack[kind])}")
    if summary.failures:
        print("failing instances:")
        seen = []
        for pt, kind in summary.failures:
            print(f"  d={pt.d} m={pt.m} lambda1={_fmt(pt.lambda1)} seed={pt.seed} [{kind}]")
            if pt not in seen:
                seen.append(pt)
        pt = seen[0]
        print(
            "reproduce: eigenpert verify "
            f"--d {pt.d} --m {pt.m} --lambda1-list {_fmt(pt.lambda1)} --seed-list {pt.seed}"
        )
        print("FAIL")
        return 1
    print("PASS")
    return 0


def _parse_lambda1_grid(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected FROM:TO:COUNT (log-spaced), got {text!r}"
        )
    lo, hi = float(parts[0]), float(parts[1])
    count = int(parts[2])
    if count < 1 or lo < 1.0 or hi < lo:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}")
    if count == 1:
        return [lo]
    return list(np.logspace(math.log10(lo), math.log10(hi), count))


def cmd_scan(args) -> int:
    threads = args.threads or _default_threads()
    if args.j == "last":
        j = args.d
    else:
        try:
            j = int(args.j)
        except ValueError:
            print(f"error: --j must be an integer or 'last', got {args.j!r}", file=sys.stderr)
            return 2
    records = []
    try:
        for seed in args.seed:
            records.extend(
                harness.scan(args.d, args.m, j, args.lambda1, seed, threads=threads)
            )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    fit = None
    fit_note = None
    if args.m == 0:
        fit_note = "skipped (m=0, observed identically zero)"
    else:
        try:
            fit = harness.fit_slope(records)
        except harness.InsufficientDataError:
            fit_note = "insufficient points"
    text = render_scan_csv(records, fit=fit, fit_note=fit_note)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigenpert",
        description=(
            "Certified eigenvalue/eigenvector perturbation bounds for "
            "low-rank updates of ill-conditioned SPD matrices"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eig = sub.add_parser("eig", help="print the eigendecomposition of an instance file")
    p_eig.add_argument("instance")
    p_eig.add_argument("--method", choices=("oracle", "secular"), default="oracle")
    p_eig.set_defaults(func=cmd_eig)

    p_bounds = sub.add_parser("bounds", help="evaluate every bound on an instance file")
    p_bounds.add_argument("instance")
    p_bounds.add_argument("--csv", help="also write every entry as CSV to this path")
    p_bounds.set_defaults(func=cmd_bounds)

    p_verify = sub.add_parser("verify", help="run the certification sweep")
    p_verify.add_argument("--d", type=int, action="append")
    p_verify.add_argument("--m", type=int, action="append")
    p_verify.add_argument("--seeds", type=int, help="number of seeds (0..N-1)")
    p_verify.add_argument("--seed-list", type=int, nargs="+")
    p_verify.add_argument("--lambda1-list", type=float, nargs="+")
    p_verify.add_argument(
        "--perturb-bound",
        type=float,
        default=1.0,
        help="scale all bounds by this factor (falsification self-test)",
    )
    p_verify.add_argument("--threads", type=int)
    p_verify.set_defaults(func=cmd_verify)

    p_scan = sub.add_parser("scan", help="tightness scan over a lambda1 grid")
    p_scan.add_argument("--d", type=int, required=True)
    p_scan.add_argument("--m", type=int, required=True)
    p_scan.add_argument("--j", required=True, help="coordinate (1-based) or 'last'")
    p_scan.add_argument(
        "--lambda1",
        type=_parse_lambda1_grid,
        required=True,
        metavar="FROM:TO:COUNT",
        help="log-spaced condition-number grid",
    )
    p_scan.add_argument("--seed", type=int, nargs="+", default=[0])
    p_scan.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    p_scan.add_argument("--threads", type=int)
    p_scan.set_defaults(func=cmd_scan)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
