"""JSON codecs for algebras, terms, partitions, instances and assignments.

Schemas::

    algebra     {"size": n, "ops": [{"name": s, "arity": k, "table": [...]}]}
                tables are flat and row-major (first argument most significant)
    term        {"var": i} | {"op": s, "args": [term, ...]}
    partition   {"blocks": [[...], ...]}
    instance    {"algebra": name | algebra, "variables": [...],
                 "potatoes": {var: [...]}, "relations": {"x,y": [[a, b], ...]}}
    raw         {"algebra": name | algebra, "variables": [...],
                 "constraints": [{"scope": [x, y], "relation": [[a, b], ...]},
                                 {"scope": [x], "relation": [a, ...]}]}

In an instance a missing ``"y,x"`` is read as the inverse of ``"x,y"``, a
missing diagonal as the diagonal of the potato and a pair missing both ways
as the full product of the potatoes.
"""
from __future__ import annotations

import json

from .algebra import App, FiniteAlgebra, Term, Var
from .instance import Instance, InstanceError, RawInstance


class FormatError(ValueError):
    code = "malformed_input"


class UnknownFixtureError(FormatError):
    code = "unknown_fixture"


# ---------------------------------------------------------------- algebra


def algebra_to_json(alg: FiniteAlgebra) -> dict:
    return {
        "size": alg.size,
        "ops": [
            {"name": name, "arity": arity, "table": table.ravel().tolist()}
            for name, arity, table in alg.ops()
        ],
    }


def algebra_from_json(data) -> FiniteAlgebra:
    if isinstance(data, str):
        from . import fixtures

        try:
            return fixtures.algebra(data)
        except KeyError:
            raise UnknownFixtureError(f"unknown fixture algebra {data!r}") from None
    try:
        ops = [(op["name"], int(op["arity"]), op["table"]) for op in data["ops"]]
        return FiniteAlgebra(int(data["size"]), ops)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed algebra: {exc}") from exc


# ------------------------------------------------------------------ terms


def term_to_json(term: Term) -> dict:
    if isinstance(term, Var):
        return {"var": term.index}
    return {"op": term.symbol, "args": [term_to_json(a) for a in term.args]}


def term_from_json(data) -> Term:
    if not isinstance(data, dict):
        raise FormatError(f"a term must be an object, got {data!r}")
    if "var" in data:
        return Var(int(data["var"]))
    if "op" in data:
        return App(str(data["op"]), tuple(term_from_json(a) for a in data.get("args", [])))
    raise FormatError(f"a term needs 'var' or 'op': {data!r}")


# --------------------------------------------------------------- instance


def _pair_key(key: str) -> tuple[str, str]:
    parts = key.split(",")
    if len(parts) != 2:
        raise FormatError(f"relation key {key!r} is not 'x,y'")
    return parts[0].strip(), parts[1].strip()


def instance_to_json(inst: Instance, algebra_name: str | None = None) -> dict:
    names = inst.variables
    return {
        "algebra": algebra_name if algebra_name is not None else algebra_to_json(inst.algebra),
        "variables": list(names),
        "potatoes": {v: sorted(p) for v, p in zip(names, inst.potatoes)},
        "relations": {
            f"{names[x]},{names[y]}": [list(p) for p in sorted(inst.relations[x, y])]
            for x in range(len(names)) for y in range(len(names))
        },
    }


def instance_from_json(data: dict) -> Instance:
    try:
        alg = algebra_from_json(data["algebra"])
        variables = [str(v) for v in data["variables"]]
        potatoes = data.get("potatoes", {})
        pots = {v: potatoes.get(v, range(alg.size)) for v in variables}
        rels = {_pair_key(k): [tuple(p) for p in rel] for k, rel in data.get("relations", {}).items()}
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed instance: {exc}") from exc
    unknown = {v for pair in rels for v in pair} - set(variables)
    if unknown:
        raise InstanceError(f"relations mention unknown variables {sorted(unknown)}")
    return Instance.build(alg, variables, pots, rels)


def raw_to_json(raw: RawInstance, algebra_name: str | None = None) -> dict:
    constraints = [
        {"scope": [x, y], "relation": [list(p) for p in sorted(rel)]} for (x, y), rel in raw.binary
    ] + [{"scope": [x], "relation": sorted(pot)} for x, pot in raw.unary]
    return {
        "algebra": algebra_name if algebra_name is not None else algebra_to_json(raw.algebra),
        "variables": list(raw.variables),
        "constraints": constraints,
    }


def raw_from_json(data: dict) -> RawInstance:
    try:
        alg = algebra_from_json(data["algebra"])
        variables = tuple(str(v) for v in data["variables"])
        binary, unary = [], []
        for c in data.get("constraints", []):
            scope = [str(v) for v in c["scope"]]
            if len(scope) == 2:
                binary.append((tuple(scope), frozenset((int(a), int(b)) for a, b in c["relation"])))
            elif len(scope) == 1:
                unary.append((scope[0], frozenset(int(a) for a in c["relation"])))
            else:
                raise FormatError(f"constraint scope {scope} is not unary or binary")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed raw instance: {exc}") from exc
    return RawInstance(alg, variables, tuple(binary), tuple(unary))


def load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True)

