"""The network file format: self-describing JSON, human-diffable.

Layout::

    {
      "variables": [
        {"name": "X", "categories": ["x0", "x1"], "parents": []},
        {"name": "Y", "categories": ["y0", "y1"], "parents": ["X"]}
      ],
      "credal_sets": {
        "X": {"": [[0.4, 0.6], [0.7, 0.3]]},
        "Y": {"x0": [[1.0, 0.0]], "x1": [[0.25, 0.75]]}
      }
    }

The credal-set key for a configuration is the hyphen-joined parent category
labels in declared parent order (the empty string for roots); category
labels therefore must not contain ``-``.  Rows are vertex distributions and
must sum to 1 within 1e-9.  Floats are written with Python's shortest
round-trip repr, so parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

from .model import (
    ConditionalCredalTable,
    CredalNetwork,
    InvalidNetworkError,
    SUM_TOL,
    Variable,
    validate,
)


class NetworkFormatError(ValueError):
    """A network document is malformed; the message names the offending field."""


def _config_key(labels: tuple[str, ...]) -> str:
    return "-".join(labels)


def network_to_dict(net: CredalNetwork) -> dict:
    doc_vars = []
    credal_sets: dict = {}
    for v in net.variables:
        for label in v.categories:
            if "-" in label:
                raise NetworkFormatError(
                    f"category label {label!r} of {v.name!r} contains '-', which the "
                    "configuration keys reserve"
                )
        table = net.tables[v.name]
        doc_vars.append(
            {"name": v.name, "categories": list(v.categories), "parents": list(table.parents)}
        )
        sets = {}
        parent_cats = [net.variable(p).categories for p in table.parents]
        for cfg, combo in enumerate(itertools.product(*parent_cats)):
            sets[_config_key(combo)] = [[float(x) for x in row] for row in table.entries[cfg]]
        credal_sets[v.name] = sets
    return {"variables": doc_vars, "credal_sets": credal_sets}


def serialize_network(net: CredalNetwork) -> str:
    return json.dumps(network_to_dict(net), indent=2) + "\n"


def network_from_dict(doc: dict) -> CredalNetwork:
    if not isinstance(doc, dict) or "variables" not in doc or "credal_sets" not in doc:
        raise NetworkFormatError("document must have 'variables' and 'credal_sets'")
    variables = []
    parents_of: dict[str, list[str]] = {}
    for i, dv in enumerate(doc["variables"]):
        for key in ("name", "categories", "parents"):
            if key not in dv:
                raise NetworkFormatError(f"variables[{i}] is missing {key!r}")
        name = dv["name"]
        cats = tuple(dv["categories"])
        for label in cats:
            if "-" in label:
                raise NetworkFormatError(
                    f"variables[{i}] ({name!r}): category label {label!r} contains '-'"
                )
        try:
            variables.append(Variable(name, cats))
        except InvalidNetworkError as err:
            raise NetworkFormatError(f"variables[{i}]: {err}") from err
        parents_of[name] = list(dv["parents"])

    by_name = {v.name: v for v in variables}
    tables = []
    for v in variables:
        parents = parents_of[v.name]
        for p in parents:
            if p not in by_name:
                raise NetworkFormatError(f"variable {v.name!r} lists unknown parent {p!r}")
        sets = doc["credal_sets"].get(v.name)
        if sets is None:
            raise NetworkFormatError(f"credal_sets is missing variable {v.name!r}")
        parent_cats = [by_name[p].categories for p in parents]
        entries = []
        expected_keys = set()
        for combo in itertools.product(*parent_cats):
            key = _config_key(combo)
            expected_keys.add(key)
            rows = sets.get(key)
            if rows is None:
                raise NetworkFormatError(
                    f"credal set for {v.name!r} is missing configuration {key!r}"
                )
            if not rows:
                raise NetworkFormatError(
                    f"credal set for {v.name!r}, configuration {key!r}, is empty"
                )
            for r, row in enumerate(rows):
                if len(row) != v.card:
                    raise NetworkFormatError(
                        f"credal set for {v.name!r}, configuration {key!r}, row {r} "
                        f"has {len(row)} entries, expected {v.card}"
                    )
                total = math.fsum(float(x) for x in row)
                if abs(total - 1.0) > SUM_TOL:
                    raise NetworkFormatError(
                        f"credal set for {v.name!r}, configuration {key!r}, row {r} "
                        f"sums to {total:.12g}"
                    )
                if any(x < 0 or x > 1 for x in row):
                    raise NetworkFormatError(
                        f"credal set for {v.name!r}, configuration {key!r}, row {r} "
                        f"has entries outside [0, 1]"
                    )
            entries.append([list(map(float, row)) for row in rows])
        stray = set(sets) - expected_keys
        if stray:
            raise NetworkFormatError(
                f"credal set for {v.name!r} has unknown configuration keys {sorted(stray)}"
            )
        tables.append(ConditionalCredalTable(v.name, parents, entries))
    try:
        net = CredalNetwork(variables, tables)
    except InvalidNetworkError as err:
        raise NetworkFormatError(str(err)) from err
    report = validate(net)
    if not report.ok:
        raise NetworkFormatError(report.problem or "invalid network")
    return net


def parse_network(path) -> CredalNetwork:
    """Load and validate a network file; diagnostics name the offending row."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise NetworkFormatError(f"not valid JSON: {err}") from err
    return network_from_dict(doc)


def write_network(net: CredalNetwork, path) -> None:
    Path(path).write_text(serialize_network(net))
