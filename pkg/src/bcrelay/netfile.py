"""JSON network description files.

Document shape:

    {
      "kind": "gaussian" | "ldn",
      "p": 2, "q": 3,                       # ldn only
      "nodes": 4,                           # count, or the dense list [0..n-1]
      "source": 0,
      "bc_destinations": [3],
      "mc_destinations": [],                # optional
      "gains": [
        {"from": 0, "to": 1, "re": 1.0, "im": 0.0},          # gaussian scalar
        {"from": 0, "to": 1, "re": [[..]], "im": [[..]]},    # gaussian MIMO
        {"from": 0, "to": 1, "matrix": [[0,1],[0,0]]},       # ldn matrix
        {"from": 0, "to": 1, "shift": 2}                     # ldn shift count
      ],
      "antennas": [1, 2, 1, 1]              # optional, gaussian only
    }

Unknown fields anywhere in the document are rejected.
"""

from __future__ import annotations

import json
from types import MappingProxyType

import numpy as np

from . import fpmatrix
from .network import GaussianNetwork, LDNetwork, validate


class ParseError(Exception):
    """Malformed or invalid network description."""


_TOP_FIELDS = {"kind", "p", "q", "nodes", "source", "bc_destinations",
               "mc_destinations", "gains", "antennas"}
_GAIN_FIELDS = {"from", "to", "re", "im", "matrix", "shift"}


def _check_fields(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"unknown field(s) {sorted(unknown)} in {where}")


def _node_count(raw) -> int:
    if isinstance(raw, int):
        if raw < 2:
            raise ParseError("nodes must be at least 2")
        return raw
    if isinstance(raw, list):
        if raw != list(range(len(raw))):
            raise ParseError("node list must be dense 0..n-1")
        return len(raw)
    raise ParseError("nodes must be an integer count or a dense list")


def loads(text: str):
    """Parse a network description string into a network object."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    _check_fields(doc, _TOP_FIELDS, "document")
    kind = doc.get("kind")
    if kind not in ("gaussian", "ldn"):
        raise ParseError("kind must be 'gaussian' or 'ldn'")
    try:
        n = _node_count(doc["nodes"])
        source = int(doc["source"])
        bc = tuple(int(d) for d in doc["bc_destinations"])
        mc = tuple(int(d) for d in doc.get("mc_destinations", ()))
        raw_gains = doc.get("gains", [])
    except KeyError as e:
        raise ParseError(f"missing field {e}") from None

    if kind == "ldn":
        if "antennas" in doc:
            raise ParseError("antennas only apply to gaussian networks")
        try:
            p, q = int(doc["p"]), int(doc["q"])
        except KeyError as e:
            raise ParseError(f"ldn requires field {e}") from None
        gains = {}
        for g in raw_gains:
            _check_fields(g, _GAIN_FIELDS, "gain entry")
            if "re" in g or "im" in g:
                raise ParseError("ldn gains use 'matrix' or 'shift', not re/im")
            edge = (int(g["from"]), int(g["to"]))
            if "shift" in g:
                if "matrix" in g:
                    raise ParseError("gain entry has both 'matrix' and 'shift'")
                gains[edge] = fpmatrix.shift_matrix(p, q, int(g["shift"]))
            elif "matrix" in g:
                gains[edge] = fpmatrix.FpMatrix(p, np.asarray(g["matrix"], dtype=np.int64))
            else:
                raise ParseError("ldn gain entry needs 'matrix' or 'shift'")
        try:
            net = LDNetwork(p, q, n, source, bc, mc, MappingProxyType(gains))
        except ValueError as e:
            raise ParseError(str(e)) from None
    else:
        if "p" in doc or "q" in doc:
            raise ParseError("p/q only apply to ldn networks")
        antennas = tuple(int(a) for a in doc.get("antennas", ()))
        gains = {}
        for g in raw_gains:
            _check_fields(g, _GAIN_FIELDS, "gain entry")
            if "matrix" in g or "shift" in g:
                raise ParseError("gaussian gains use re/im, not matrix/shift")
            if "re" not in g or "im" not in g:
                raise ParseError("gaussian gain entry needs 're' and 'im'")
            edge = (int(g["from"]), int(g["to"]))
            gains[edge] = np.asarray(g["re"], dtype=float) + 1j * np.asarray(g["im"], dtype=float)
        try:
            net = GaussianNetwork(n, source, bc, mc, MappingProxyType(gains), antennas)
        except ValueError as e:
            raise ParseError(str(e)) from None

    report = validate(net)
    if not report.ok:
        raise ParseError(f"invalid network: {report}")
    return net


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(net) -> str:
    """Serialize a network back to the JSON description format."""
    doc: dict = {
        "kind": net.kind,
        "nodes": net.num_nodes,
        "source": net.source,
        "bc_destinations": list(net.bc_destinations),
        "mc_destinations": list(net.mc_destinations),
    }
    gains = []
    if isinstance(net, LDNetwork):
        doc["p"], doc["q"] = net.p, net.q
        for (a, b) in sorted(net.gains):
            gains.append({"from": a, "to": b,
                          "matrix": net.gains[(a, b)].entries.tolist()})
    else:
        if any(x != 1 for x in net.antennas):
            doc["antennas"] = list(net.antennas)
        for (a, b) in sorted(net.gains):
            g = net.gains[(a, b)]
            if g.shape == (1, 1):
                gains.append({"from": a, "to": b,
                              "re": float(g[0, 0].real), "im": float(g[0, 0].imag)})
            else:
                gains.append({"from": a, "to": b,
                              "re": np.real(g).tolist(), "im": np.imag(g).tolist()})
    doc["gains"] = gains
    return json.dumps(doc, indent=2, sort_keys=True)
