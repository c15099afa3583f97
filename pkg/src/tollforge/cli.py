"""Command-line entry point.

Exit codes: 0 on success, 2 on invalid input, 3 on numerical failure.
CSV floats carry 6 decimals; JSON keeps full precision.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

from . import consttoll, design as design_mod, largen, margcost, oracle, poa
from .basis import from_spec, monomial
from .errors import NumericalError, TollforgeError, ValidationError

# Literature values for globally optimal tolls; echoed, never computed.
GLOBAL_TOLL_CITED = {1: 2.0, 2: 5.0, 3: 15.0, 4: 52.0, 5: 203.0, 6: 877.0}

TABLE1_COLUMNS = ("no_toll", "optimal_local", "optimal_constant", "marginal_cost")


class CellError(TollforgeError):
    def __init__(self, d: int, column: str, exc: TollforgeError):
        super().__init__(f"d={d}, column={column}: {exc}")
        self.cause = exc


def _threads() -> int:
    raw = os.environ.get("TOLLFORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"TOLLFORGE_THREADS must be an integer, got {raw!r}")


def _run_cells(tasks: Sequence[tuple[int, str, Callable[[], float]]]) -> dict:
    """Evaluate (d, column) cells, possibly in parallel; results keyed by (d, column)."""
    def one(task):
        d, col, fn = task
        try:
            return (d, col), fn()
        except TollforgeError as exc:
            raise CellError(d, col, exc) from exc

    workers = min(_threads(), len(tasks)) or 1
    if workers == 1:
        return dict(map(one, tasks))
    with ThreadPoolExecutor(workers) as pool:
        return dict(pool.map(one, tasks))


def parse_degrees(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = (int(s) for s in part.split("-", 1))
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ValidationError(f"cannot parse degrees {text!r}")
    if not out or any(d < 0 or d > 8 for d in out):
        raise ValidationError(f"degrees must lie in 0..8, got {text!r}")
    return sorted(set(out))


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6f}"
    return str(v)


def _emit(rows: list[dict], fmt: str, out: str | None) -> None:
    if fmt == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(rows[0].keys())
        for r in rows:
            w.writerow(_fmt(v) for v in r.values())
        text = buf.getvalue()
    _write(text, out)


def _emit_json(obj, out: str | None) -> None:
    _write(json.dumps(obj, indent=2) + "\n", out)


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


# commands ---------------------------------------------------------------------


def table1_cell(d: int, column: str, n: int, method: str = "full", tol_feas: float = 1e-9) -> float:
    b = monomial(d, n)
    if column == "no_toll":
        return poa.poa_full([b], [poa.InducedCost.untolled(b)], tol_feas=tol_feas).poa
    if column == "optimal_local":
        return design_mod.design(b, method, tol_feas).poa
    if column == "optimal_constant":
        return consttoll.const_design([b], tol_feas=tol_feas).poa
    if column == "marginal_cost":
        return margcost.marginal_poa([b], tol_feas=tol_feas).poa
    raise ValidationError(f"unknown column {column!r}")


def cmd_table1(args) -> int:
    degrees = parse_degrees(args.degrees)
    tasks = [(d, col, (lambda d=d, col=col: table1_cell(d, col, args.n, args.method, args.tol_feas)))
             for d in degrees for col in TABLE1_COLUMNS]
    vals = _run_cells(tasks)
    rows = []
    for d in degrees:
        row = {"d": d}
        row.update({col: vals[(d, col)] for col in TABLE1_COLUMNS})
        cited = GLOBAL_TOLL_CITED.get(d)
        row["global_toll_cited"] = "" if cited is None else cited
        rows.append(row)
    _emit(rows, args.format, args.out)
    return 0


def cmd_table2(args) -> int:
    degrees = parse_degrees(args.degrees)
    nbars = [int(s) for s in args.nbars.split(",")]
    tasks = [(d, f"n_bar={nb}", (lambda d=d, nb=nb: largen.sandwich(d, nb, args.face, args.tol_feas)))
             for d in degrees for nb in nbars]
    vals = _run_cells(tasks)
    rows = []
    for d in degrees:
        for nb in nbars:
            lb, ub = vals[(d, f"n_bar={nb}")]
            rows.append({"d": d, "n_bar": nb, "LB": lb, "UB": ub})
    _emit(rows, args.format, args.out)
    return 0


def cmd_const(args) -> int:
    degrees = parse_degrees(args.degrees)
    tasks = [(d, "optimal_constant", (lambda d=d: consttoll.const_design([monomial(d, args.n)],
                                                                          tol_feas=args.tol_feas)))
             for d in degrees]
    vals = _run_cells(tasks)
    rows = []
    for d in degrees:
        res = vals[(d, "optimal_constant")]
        exact = ""
        if d == 2:
            exact = consttoll.D2_POA
        elif 3 <= d <= 6:
            exact = consttoll.const_closed_form(d).poa
        rows.append({"d": d, "PoA_lp": res.poa, "nu": res.nu_star, "tau": res.tau[0],
                     "PoA_closed_form": float(exact) if exact != "" else "",
                     "exact_fraction": str(exact)})
    _emit(rows, args.format, args.out)
    return 0


def _load_bases(args) -> list:
    if args.basis_file:
        obj = _read_json(args.basis_file)
        specs = obj if isinstance(obj, list) else obj.get("bases", [obj])
        return [from_spec(s, args.n) for s in specs]
    return [monomial(d, args.n) for d in parse_degrees(args.degrees)]


def cmd_design(args) -> int:
    bases = _load_bases(args)
    mech, _ = design_mod.design_mechanism(bases, args.method, args.nonneg, args.tol_feas)
    _emit_json(mech.to_json(), args.out)
    return 0


def _apply_tolls(g: oracle.GameInstance, args) -> oracle.GameInstance:
    if args.tolls == "none":
        return g.with_tolls(None)
    if args.tolls == "marginal":
        return g.with_tolls(oracle.marginal_tolls(g))
    if args.tolls == "file":
        return g
    mech = design_mod.Mechanism.from_json(_read_json(args.tolls))
    return g.with_tolls(oracle.mechanism_tolls(g, mech))


def cmd_oracle(args) -> int:
    g = _apply_tolls(oracle.GameInstance.from_json(_read_json(args.instance)), args)
    _emit_json(oracle.enumerate_pure_nash(g).to_json(), args.out)
    return 0


def cmd_eval(args) -> int:
    obj = _read_json(args.file)
    if "players" in obj:
        return cmd_oracle(argparse.Namespace(instance=args.file, tolls=args.tolls, out=args.out))
    mech = design_mod.Mechanism.from_json(obj)
    rep = poa.poa_full(list(mech.bases), mech.induced(), tol_feas=args.tol_feas)
    _emit_json(rep.to_json(), args.out)
    return 0


def cmd_instance(args) -> int:
    if args.kind == "pigou":
        g = oracle.build_pigou_example()
    else:
        g = oracle.build_const_lb_game(args.tau)
    _emit_json(g.to_json(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tollforge", description="Optimal local tolls for congestion games.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n_default=100, degrees="1-6"):
        sp.add_argument("--n", type=int, default=n_default, help="number of agents (default %(default)s)")
        sp.add_argument("--degrees", default=degrees, help="e.g. 1-6 or 1,2,3 (default %(default)s)")
        sp.add_argument("--tol-feas", type=float, default=1e-9)
        sp.add_argument("--out", default=None, help="output path (default stdout)")

    sp = sub.add_parser("table1", help="PoA of untolled, optimal local, constant and marginal tolls")
    common(sp)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--method", choices=("full", "simplified", "recursion"), default="full")
    sp.set_defaults(func=cmd_table1)

    sp = sub.add_parser("table2", help="(LB, UB) for tolls valid for any number of agents")
    common(sp, degrees="1-3")
    sp.add_argument("--nbars", default="10,20,30,40", help="comma-separated even n_bar values")
    sp.add_argument("--nbar", dest="nbars", help="single n_bar (alias of --nbars)")
    sp.add_argument("--face", choices=largen.FACES, default="best")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_table2)

    sp = sub.add_parser("const", help="optimal constant tolls with closed forms")
    common(sp)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_const)

    sp = sub.add_parser("design", help="design optimal local tolls and write mechanism JSON")
    common(sp, degrees="1")
    sp.add_argument("--basis-file", default=None, help="JSON basis spec(s) instead of monomials")
    sp.add_argument("--method", choices=("full", "simplified", "recursion"), default="full")
    sp.add_argument("--nonneg", action="store_true", help="rescale so every toll is non-negative")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("eval", help="PoA of a mechanism file, or equilibria of an instance file")
    sp.add_argument("file")
    sp.add_argument("--tolls", default="file", help="none | marginal | file | path to mechanism JSON")
    sp.add_argument("--tol-feas", type=float, default=1e-9)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("oracle", help="enumerate pure Nash equilibria of an instance file")
    sp.add_argument("instance")
    sp.add_argument("--tolls", default="file", help="none | marginal | file | path to mechanism JSON")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("instance", help="write a built-in game as instance JSON")
    sp.add_argument("kind", choices=("pigou", "const-lb"))
    sp.add_argument("--tau", type=float, default=3.0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_instance)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "n", 1) < 1:
            raise ValidationError("--n must be >= 1")
        return args.func(args)
    except CellError as exc:
        print(f"tollforge: error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.cause, ValidationError) else 3
    except ValidationError as exc:
        print(f"tollforge: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"tollforge: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
