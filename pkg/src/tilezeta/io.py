"""JSON input and output for substitutions, bundled example systems."""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import SubstitutionError
from .substitution import (
    AlgebraicWeight,
    WeightedSubstitution,
    canonicalize,
    natural_weights,
    parse_weight,
)

BUNDLED = ("example31", "omega2", "thue_morse", "fibonacci", "example35_p13")


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise SubstitutionError(f"unknown bundled system {name!r}; choose from {', '.join(BUNDLED)}")
    return resources.files("tilezeta.systems").joinpath(f"{name}.json").read_text()


def read_source(source: str | Path) -> tuple[str, str]:
    """Return ``(text, label)`` for a bundled name or a file path."""
    path = Path(source)
    if path.exists():
        return path.read_text(), str(path)
    stem = path.stem if path.suffix == ".json" else str(source)
    if stem in BUNDLED:
        return bundled_text(stem), stem
    raise SubstitutionError(f"{source}: no such file or bundled system")


def parse_json(text: str, label: str = "<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SubstitutionError(f"{label}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from exc


def system_from_dict(data, label: str = "<input>", canonical: bool = True) -> WeightedSubstitution:
    """Build a substitution from the input schema.

    Exact mode reads ``[color, "p/q"]`` pairs; natural mode reads bare colors
    and derives weights (canonicalized unless ``canonical`` is false).
    """
    if not isinstance(data, dict):
        raise SubstitutionError(f"{label}: top level must be an object")
    mode = data.get("mode", "exact")
    rules = data.get("rules")
    if not isinstance(rules, dict):
        raise SubstitutionError(f"{label}: 'rules' must be an object")
    alphabet = data.get("alphabet", list(rules))
    if not isinstance(alphabet, list):
        raise SubstitutionError(f"{label}: 'alphabet' must be a list")
    if mode == "exact":
        parsed = {}
        for a, rhs in rules.items():
            if not isinstance(rhs, list) or not all(isinstance(p, list) and len(p) == 2 for p in rhs):
                raise SubstitutionError(f"{label}: rule {a!r} must be a list of [color, weight] pairs")
            parsed[a] = [(c, parse_weight(w)) for c, w in rhs]
        return WeightedSubstitution(tuple(alphabet), parsed)
    if mode == "natural":
        for a, rhs in rules.items():
            if not isinstance(rhs, list) or not all(isinstance(c, str) for c in rhs):
                raise SubstitutionError(f"{label}: rule {a!r} must be a list of colors")
        missing = [a for a in alphabet if a not in rules]
        if missing:
            raise SubstitutionError(f"{label}: no rule for {', '.join(missing)}")
        ws = natural_weights({a: rules[a] for a in alphabet})
        return canonicalize(ws) if canonical else ws
    raise SubstitutionError(f"{label}: unknown mode {mode!r}")


def load_system(source: str | Path, canonical: bool = True) -> WeightedSubstitution:
    text, label = read_source(source)
    return system_from_dict(parse_json(text, label), label, canonical)


def weight_to_json(w):
    if isinstance(w, Fraction):
        return str(w)
    if isinstance(w, AlgebraicWeight):
        return {"value": w.value, "tag": str(w)}
    return float(w)


def system_to_dict(ws: WeightedSubstitution) -> dict:
    out = {
        "alphabet": list(ws.alphabet),
        "mode": "exact" if ws.is_exact else "algebraic",
        "rules": {a: [[c, weight_to_json(w)] for c, w in ws.rules[a]] for a in ws.alphabet},
    }
    if ws.perron is not None:
        out["perron_root"] = ws.perron.lam
        out["charpoly"] = list(ws.perron.charpoly)
    return out
