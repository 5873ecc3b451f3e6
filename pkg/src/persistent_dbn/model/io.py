"""JSON model and evidence files.

Model file::

    {
      "nodes": [{"id": "X1", "parents": [], "persistent": true, "cpd": {"": 0.3}}, ...],
      "observation_nodes": [{"id": "O1", "parent": "X1",
                             "emission": {"0": {"0": 0.9, "1": 0.1}, "1": {...}}}],
      "nonstationary": {"X1": {"4": {"": 0.8}}}
    }

Evidence file: ``[{"node": "O1", "t": 3, "value": "1"}, ...]``.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import ParseError, SchemaViolation
from .evidence import EvidenceSet, check_evidence
from .network import NodeSpec, ObservationSpec, PrototypeNetwork


def _parse_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.msg) from None


def _require(obj: dict, key: str, kind, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaViolation(f"{where}.{key}", "missing")
    value = obj[key]
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise SchemaViolation(f"{where}.{key}", f"expected {getattr(kind, '__name__', kind)}")
    return value


def _prob_rows(rows, where: str) -> dict[str, float]:
    if not isinstance(rows, dict):
        raise SchemaViolation(where, "expected an object of rows")
    out = {}
    for key, p in rows.items():
        if isinstance(p, bool) or not isinstance(p, (int, float)):
            raise SchemaViolation(f"{where}[{key!r}]", "probability must be a number")
        out[str(key)] = float(p)
    return out


def network_from_dict(data) -> PrototypeNetwork:
    if not isinstance(data, dict):
        raise SchemaViolation("<root>", "expected an object")
    raw_nodes = _require(data, "nodes", list, "<root>")
    nodes = []
    for i, raw in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        node_id = _require(raw, "id", str, where)
        parents = _require(raw, "parents", list, where)
        persistent = _require(raw, "persistent", bool, where)
        cpd = _prob_rows(_require(raw, "cpd", dict, where), f"{where}.cpd")
        nodes.append(NodeSpec(node_id, tuple(str(p) for p in parents), persistent, cpd))
    observations = []
    for i, raw in enumerate(data.get("observation_nodes", [])):
        where = f"observation_nodes[{i}]"
        obs_id = _require(raw, "id", str, where)
        parent = _require(raw, "parent", str, where)
        emission = _require(raw, "emission", dict, where)
        observations.append(
            ObservationSpec(
                obs_id,
                parent,
                {str(s): _prob_rows(row, f"{where}.emission[{s}]") for s, row in emission.items()},
            )
        )
    nonstationary = {}
    raw_ns = data.get("nonstationary", {})
    if not isinstance(raw_ns, dict):
        raise SchemaViolation("nonstationary", "expected an object")
    for node_id, per_slice in raw_ns.items():
        if not isinstance(per_slice, dict):
            raise SchemaViolation(f"nonstationary[{node_id}]", "expected an object")
        table = {}
        for t, rows in per_slice.items():
            try:
                slice_no = int(t)
            except ValueError:
                raise SchemaViolation(f"nonstationary[{node_id}]", f"bad slice {t!r}") from None
            table[slice_no] = _prob_rows(rows, f"nonstationary[{node_id}][{t}]")
        nonstationary[str(node_id)] = table
    return PrototypeNetwork(tuple(nodes), tuple(observations), nonstationary)


def network_to_dict(net: PrototypeNetwork) -> dict:
    out = {
        "nodes": [
            {"id": n.id, "parents": list(n.parents), "persistent": n.persistent, "cpd": dict(sorted(n.cpd.items()))}
            for n in net.nodes
        ],
        "observation_nodes": [
            {
                "id": o.id,
                "parent": o.parent,
                "emission": {s: dict(sorted(row.items())) for s, row in sorted(o.emission.items())},
            }
            for o in net.observations
        ],
    }
    if net.nonstationary:
        out["nonstationary"] = {
            node: {str(t): dict(sorted(rows.items())) for t, rows in sorted(per.items())}
            for node, per in sorted(net.nonstationary.items())
        }
    return out


def dumps_model(net: PrototypeNetwork) -> str:
    return json.dumps(network_to_dict(net), indent=2) + "\n"


def load_model(path) -> PrototypeNetwork:
    return network_from_dict(_parse_json(Path(path).read_text(encoding="utf-8")))


def save_model(net: PrototypeNetwork, path) -> None:
    Path(path).write_text(dumps_model(net), encoding="utf-8")


def evidence_from_list(data, net: PrototypeNetwork | None = None) -> EvidenceSet:
    if not isinstance(data, list):
        raise SchemaViolation("<root>", "evidence file must be an array")
    rows = []
    for i, raw in enumerate(data):
        where = f"[{i}]"
        node = _require(raw, "node", str, where)
        t = _require(raw, "t", int, where)
        if "value" not in raw:
            raise SchemaViolation(f"{where}.value", "missing")
        value = raw["value"]
        if net is not None and not net.is_observation(node):
            if node not in net.node_ids:
                raise SchemaViolation(f"{where}.node", f"unknown node {node!r}")
            value = int(value) if str(value) in ("0", "1") else value
        else:
            value = str(value)
        rows.append((node, t, value))
    ev = EvidenceSet.from_rows(rows)
    if net is not None:
        check_evidence(ev, net)
    return ev


def evidence_to_list(ev: EvidenceSet) -> list[dict]:
    return [{"node": n, "t": t, "value": v} for n, t, v in ev.rows()]


def load_evidence(path, net: PrototypeNetwork | None = None) -> EvidenceSet:
    return evidence_from_list(_parse_json(Path(path).read_text(encoding="utf-8")), net)


def save_evidence(ev: EvidenceSet, path) -> None:
    Path(path).write_text(json.dumps(evidence_to_list(ev), indent=2) + "\n", encoding="utf-8")
