"""Command-line interface: ``tilezeta <command> ...``.

Exit codes: 0 success, 1 invalid input, 2 usage error, 3 failed internal
cross-check.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import io, solenoid, zeta
from .base_group import base_group, compute_g, edge_exponents
from .errors import CapExceeded, ConsistencyError, SubstitutionError
from .orbits import child_graph, primitive_cycles, separating_orbits
from .substitution import (
    AlgebraicWeight,
    WeightedSubstitution,
    canonicalize,
    natural_weights,
    tau_power,
    validate,
)
from .svg import render_svg
from .tiling import FixedPointCycle, Random, SeparatingPair, expand_patch, find_interior_cycle

DEFAULT_SEED = 0xC0FFEE
# options whose values may start with a minus sign
VALUE_OPTIONS = ("--window", "--interval", "--alpha", "--origin")


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a rational number: {text!r}") from exc


def _numbers(text: str, count: int | None = None) -> list[Fraction]:
    parts = text.split(",")
    if count is not None and len(parts) != count:
        raise UsageError(f"expected {count} comma-separated numbers, got {text!r}")
    return [_fraction(p) for p in parts]


def _alpha(text: str) -> complex:
    parts = text.split(",")
    if len(parts) not in (1, 2):
        raise UsageError(f"--alpha takes RE or RE,IM, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise UsageError(f"bad --alpha {text!r}") from exc
    return complex(vals[0], vals[1] if len(vals) == 2 else 0.0)


def _weight_text(w) -> str:
    if isinstance(w, AlgebraicWeight):
        return f"{w.value!r} ({w})"
    return str(w)


def _complex_text(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real!r}"
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


def _complex_json(z: complex) -> list[float]:
    return [z.real, z.imag]


def _num_json(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, AlgebraicWeight):
        return x.value
    return x if x is None else float(x)


class Output:
    def __init__(self, fmt: str, stream):
        self.fmt = fmt
        self.stream = stream

    def emit(self, data, text: str) -> None:
        if self.fmt == "json":
            self.stream.write(json.dumps(data, indent=2, sort_keys=False) + "\n")
        else:
            self.stream.write(text.rstrip("\n") + "\n")


def _load(args, canonical: bool = True) -> WeightedSubstitution:
    return io.load_system(args.system, canonical=canonical)


# commands

def cmd_validate(args, out: Output) -> int:
    text, label = io.read_source(args.system)
    data = io.parse_json(text, label)
    ws = io.system_from_dict(data, label, canonical=False)
    report = validate(ws)
    out.emit(
        {"valid": report.ok,
         "violations": [{"rule": v.rule, "color": v.color, "message": v.message} for v in report.violations]},
        str(report),
    )
    return 0 if report.ok else 1


def cmd_natural_weights(args, out: Output) -> int:
    text, label = io.read_source(args.system)
    data = io.parse_json(text, label)
    rules = data.get("rules", {}) if isinstance(data, dict) else {}
    colors = {a: [r if isinstance(r, str) else r[0] for r in rhs] for a, rhs in rules.items()}
    order = data.get("alphabet", list(colors))
    ws = natural_weights({a: colors[a] for a in order})
    if args.canonical:
        ws = canonicalize(ws)
    data = io.system_to_dict(ws)
    text = str(ws)
    if ws.perron is not None:
        text += f"\nlam = {ws.perron.lam!r}\ncharpoly = {list(ws.perron.charpoly)}"
    out.emit(data, text)
    return 0


def cmd_canonicalize(args, out: Output) -> int:
    ws = canonicalize(_load(args, canonical=False))
    out.emit(io.system_to_dict(ws), str(ws))
    return 0


def cmd_iterate(args, out: Output) -> int:
    ws = _load(args)
    if args.color not in ws.alphabet:
        raise SubstitutionError(f"unknown color {args.color!r}")
    if args.n < 0:
        raise UsageError("--n must be non-negative")
    rows = tau_power(ws, args.color, args.n)
    out.emit(
        {"color": args.color, "n": args.n,
         "rows": [{"k": k, "color": c, "weight": _num_json(w)} for k, (c, w) in enumerate(rows)]},
        "k\tcolor\tweight\n" + "\n".join(f"{k}\t{c}\t{_weight_text(w)}" for k, (c, w) in enumerate(rows)),
    )
    return 0


def cmd_base_group(args, out: Output) -> int:
    ws = _load(args)
    b = base_group(ws)
    # one generator per simple cycle; show each weight once
    gens = list(dict.fromkeys(b.generators))
    data = {"kind": b.kind, "base": b.base, "base_exact": _num_json(b.base_exact),
            "charpoly": list(b.charpoly) if b.charpoly else None,
            "generators": [_num_json(g) for g in gens]}
    text = f"{b}\ngenerators: " + ", ".join(_weight_text(g) for g in gens)
    out.emit(data, text)
    return 0


def cmd_g_function(args, out: Output) -> int:
    ws = _load(args)
    b = base_group(ws)
    g = compute_g(ws, b)
    data = {"kind": b.kind, "g": {a: _num_json(g[a]) for a in ws.alphabet}}
    lines = [f"g({a}) = {_weight_text(g[a])}" for a in ws.alphabet]
    if b.is_lattice:
        m = edge_exponents(ws, g, b)
        data["edge_exponents"] = [{"color": a, "index": i, "m": k} for (a, i), k in m.items()]
        lines += [f"m({a},{i}) = {k}" for (a, i), k in m.items()]
    out.emit(data, "\n".join(lines))
    return 0


def _phase(args, ws):
    origin = _fraction(args.origin)
    if args.phase == "fixed":
        if args.cycle:
            a, k, i = args.cycle.split(",")
            return FixedPointCycle(a, int(k), int(i), origin)
        found = find_interior_cycle(ws)
        if found is None:
            raise SubstitutionError("no interior cycle up to k = 6; use --phase separating")
        return FixedPointCycle(found.color, found.k, found.index, origin)
    if args.phase == "separating":
        if args.pair:
            a, i = args.pair.split(",")
            return SeparatingPair(a, int(i), origin)
        a = next(c for c in ws.alphabet if len(ws.rules[c]) > 1)
        return SeparatingPair(a, 0, origin)
    return Random(args.seed, origin)


def cmd_tile(args, out: Output) -> int:
    ws = _load(args)
    window = tuple(_numbers(args.window, 4))
    patch = expand_patch(ws, None, None, window, _phase(args, ws))
    if args.out == "svg":
        out.stream.write(render_svg(patch, args.scale))
    else:
        out.stream.write(json.dumps(patch.to_dict(), indent=2) + "\n")
    return 0


def cmd_orbits(args, out: Output) -> int:
    ws = _load(args)
    cycles = primitive_cycles(child_graph(ws), args.max_len)
    rows = [{"edges": [[e.src, e.index] for e in c.edges], "weight": _num_json(c.weight), "length": c.length}
            for c in cycles]
    counts = {}
    for c in cycles:
        counts[c.length] = counts.get(c.length, 0) + 1
    text = "\n".join(f"length {n}: {counts.get(n, 0)} cycles" for n in range(1, args.max_len + 1))
    if args.list:
        text += "\n" + "\n".join(
            " ".join(f"{e.src}[{e.index}]" for e in c.edges) + f"\t{_weight_text(c.weight)}" for c in cycles)
    out.emit({"counts": {str(k): v for k, v in sorted(counts.items())}, "cycles": rows}, text)
    return 0


def cmd_separating(args, out: Output) -> int:
    ws = _load(args)
    b = base_group(ws)
    orbits = separating_orbits(ws, b)
    rows = []
    lines = []
    for o in orbits:
        rows.append({
            "pairs": [list(p) for p in o.pairs], "left_cycle": list(o.left_cycle),
            "right_cycle": list(o.right_cycle), "lambda_minus": _num_json(o.lambda_minus),
            "lambda_plus": _num_json(o.lambda_plus), "commensurable": o.commensurable,
            "c": _num_json(o.c), "c_exponent": o.c_exponent, "flag": o.flag or None,
        })
        c = "-" if o.c is None else _weight_text(o.c)
        lines.append(f"pairs {list(o.pairs)} left {''.join(o.left_cycle)} right {''.join(o.right_cycle)} "
                     f"lambda- {_weight_text(o.lambda_minus)} lambda+ {_weight_text(o.lambda_plus)} "
                     f"{'closed' if o.commensurable else 'incommensurable'} c {c}"
                     + (f"  [{o.flag}]" if o.flag else ""))
    closed = sum(o.commensurable for o in orbits)
    lines.append(f"{closed} closed orbit(s)")
    out.emit({"orbits": rows, "closed": closed}, "\n".join(lines))
    return 0


def cmd_zeta(args, out: Output) -> int:
    ws = _load(args)
    b = base_group(ws)
    if args.zeta_command == "eval":
        alpha = _alpha(args.alpha)
        v = zeta.zeta_eval(ws, b, alpha)
        if isinstance(v, zeta.Pole):
            out.emit({"alpha": _complex_json(alpha), "pole": True}, str(v))
        else:
            out.emit({"alpha": _complex_json(alpha), "value": _complex_json(v)}, _complex_text(v))
    elif args.zeta_command == "rational":
        rz = zeta.zeta_rational(ws, b)
        out.emit({"p": list(rz.p), "q": list(rz.q), "base": rz.base, "base_exact": _num_json(rz.base_exact),
                  "charpoly": list(rz.charpoly) if rz.charpoly else None}, str(rz))
    elif args.zeta_command == "poles":
        lo, hi = (float(v) for v in _numbers(args.interval, 2))
        poles = zeta.find_real_poles(ws, b, (lo, hi))
        out.emit({"poles": [{"alpha": a, "multiplicity": m} for a, m in poles]},
                 "\n".join(f"alpha = {a!r}  multiplicity {m}" for a, m in poles) or "no poles")
    else:
        alpha = _alpha(args.alpha)
        res = zeta.zeta_euler_oracle(ws, b, alpha, args.max_len)
        out.emit({"alpha": _complex_json(alpha), "value": _complex_json(res.value), "bound": res.bound,
                  "cycles": res.cycles},
                 f"{_complex_text(res.value)}  (tail bound {res.bound:.3g}, {res.cycles} cycles)")
    return 0


def cmd_solenoid(args, out: Output) -> int:
    op = args.solenoid_command
    if op == "embed":
        x = solenoid.embed_dyadic(_fraction(args.value))
    elif op == "tile":
        x = solenoid.parse_element(args.x)
        patch = solenoid.to_tiling(x, args.depth, args.sides)
        if args.out == "svg":
            out.stream.write(render_svg(patch, args.scale))
        else:
            out.stream.write(json.dumps(patch.to_dict(), indent=2) + "\n")
        return 0
    else:
        x = solenoid.parse_element(args.x)
        if op == "add":
            x = solenoid.add(x, solenoid.parse_element(args.y))
        elif op == "negate":
            x = solenoid.negate(x)
        elif op == "scale":
            x = solenoid.scale_pow2(x, args.k)
    real = solenoid.to_real(x)
    out.emit({"element": str(x), "real": None if real is None else str(real)},
             str(x) + ("" if real is None else f"  = {real}"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tilezeta", description=__doc__.splitlines()[0])
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("text", "json"), default="text")
    sys_arg = argparse.ArgumentParser(add_help=False)
    sys_arg.add_argument("system", help="JSON file or bundled name (" + ", ".join(io.BUNDLED) + ")")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[sys_arg, fmt], help="check a substitution file")
    s.set_defaults(func=cmd_validate)
    s = sub.add_parser("natural-weights", parents=[sys_arg, fmt], help="weights from the Perron eigenvector")
    s.add_argument("--canonical", action="store_true", help="canonicalize the result")
    s.set_defaults(func=cmd_natural_weights)
    s = sub.add_parser("canonicalize", parents=[sys_arg, fmt], help="inline length-1 rules and merge colors")
    s.set_defaults(func=cmd_canonicalize)
    s = sub.add_parser("iterate", parents=[sys_arg, fmt], help="table of sigma^n and tau^n")
    s.add_argument("--color", required=True)
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_iterate)
    s = sub.add_parser("base-group", parents=[sys_arg, fmt], help="dense or lattice classification")
    s.set_defaults(func=cmd_base_group)
    s = sub.add_parser("g-function", parents=[sys_arg, fmt], help="coset representatives g")
    s.set_defaults(func=cmd_g_function)

    s = sub.add_parser("tile", parents=[sys_arg], help="render a window of a tiling")
    s.add_argument("--window", required=True, help="x0,x1,y0,y1")
    s.add_argument("--phase", choices=("fixed", "separating", "sample"), default="fixed")
    s.add_argument("--cycle", help="a,k,i for --phase fixed (default: first interior cycle)")
    s.add_argument("--pair", help="a,i for --phase separating (default: first inner gap)")
    s.add_argument("--origin", default="0")
    s.add_argument("--seed", type=lambda t: int(t, 0), default=DEFAULT_SEED)
    s.add_argument("--out", choices=("svg", "json"), default="svg")
    s.add_argument("--scale", choices=("linear", "logy"), default="linear")
    s.add_argument("--output", "-o", help="write to this file instead of stdout")
    s.set_defaults(func=cmd_tile)

    s = sub.add_parser("orbits", parents=[sys_arg, fmt], help="primitive cycles of the child graph")
    s.add_argument("--max-len", type=int, default=6)
    s.add_argument("--list", action="store_true", help="list every cycle")
    s.set_defaults(func=cmd_orbits)
    s = sub.add_parser("separating", parents=[sys_arg, fmt], help="orbits with a separating line")
    s.set_defaults(func=cmd_separating)

    z = sub.add_parser("zeta", help="dynamical zeta function")
    zs = z.add_subparsers(dest="zeta_command", required=True)
    s = zs.add_parser("eval", parents=[sys_arg, fmt])
    s.add_argument("--alpha", required=True, help="RE or RE,IM")
    s = zs.add_parser("rational", parents=[sys_arg, fmt])
    s = zs.add_parser("poles", parents=[sys_arg, fmt])
    s.add_argument("--interval", required=True, help="lo,hi")
    s = zs.add_parser("oracle", parents=[sys_arg, fmt])
    s.add_argument("--alpha", required=True)
    s.add_argument("--max-len", type=int, default=14)
    z.set_defaults(func=cmd_zeta)

    so = sub.add_parser("solenoid", help="2-adic solenoid arithmetic; elements as (R)H(L)eN")
    ss = so.add_subparsers(dest="solenoid_command", required=True)
    s = ss.add_parser("add", parents=[fmt])
    s.add_argument("x")
    s.add_argument("y")
    s = ss.add_parser("negate", parents=[fmt])
    s.add_argument("x")
    s = ss.add_parser("scale", parents=[fmt])
    s.add_argument("x")
    s.add_argument("--k", type=int, required=True)
    s = ss.add_parser("embed", parents=[fmt])
    s.add_argument("value", help="dyadic rational p/2^k")
    s = ss.add_parser("tile", parents=[fmt])
    s.add_argument("x")
    s.add_argument("--depth", type=int, default=6)
    s.add_argument("--sides", choices=("+", "-", "+-"), default="+")
    s.add_argument("--out", choices=("svg", "json"), default="svg")
    s.add_argument("--scale", choices=("linear", "logy"), default="logy")
    so.set_defaults(func=cmd_solenoid)
    return p


def _attach_values(argv: list[str]) -> list[str]:
    """Rewrite ``--window -1,1,...`` as ``--window=-1,1,...`` so argparse keeps the value."""
    out = []
    k = 0
    while k < len(argv):
        if argv[k] in VALUE_OPTIONS and k + 1 < len(argv) and argv[k + 1].startswith("-"):
            out.append(f"{argv[k]}={argv[k + 1]}")
            k += 2
        else:
            out.append(argv[k])
            k += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _attach_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    stream = sys.stdout
    handle = None
    if getattr(args, "output", None):
        handle = stream = open(args.output, "w")
    out = Output(getattr(args, "format", "text"), stream)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"tilezeta: usage error: {exc}", file=sys.stderr)
        return 2
    except (SubstitutionError, CapExceeded) as exc:
        print(f"tilezeta: error: {exc}", file=sys.stderr)
        return 1
    except ConsistencyError as exc:
        print(f"tilezeta: internal consistency check failed: {exc}", file=sys.stderr)
        return 3
    finally:
        if handle is not None:
            handle.close()


if __name__ == "__main__":
    sys.exit(main())
