"""Network data models: Gaussian and linear-deterministic broadcast relay networks.

Nodes are dense integers 0..n-1.  Roles (source, private-message
destinations, multicast destinations) are stored explicitly on the
network rather than inferred from topology.  Power and noise variance
are normalized to 1 and are not stored.

Networks are immutable after construction and safe to share between
concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from . import fpmatrix
from .fpmatrix import FpMatrix


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        return "valid" if self.ok else "; ".join(self.violations)


def _as_gain_matrix(value, rx_antennas: int, tx_antennas: int) -> np.ndarray:
    """Normalize a scalar or matrix gain to a complex (rx, tx) array."""
    arr = np.atleast_2d(np.asarray(value, dtype=np.complex128))
    if arr.shape != (rx_antennas, tx_antennas):
        raise ValueError(
            f"gain shape {arr.shape} does not match antennas ({rx_antennas}, {tx_antennas})"
        )
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GaussianNetwork:
    """Complex AWGN relay network with unit power and unit noise variance.

    ``gains[(k, l)]`` is the channel matrix from node k's transmit
    antennas to node l's receive antennas; a missing key means no link.
    Single-antenna links are stored as 1x1 matrices, so MIMO and scalar
    networks share one representation.
    """

    num_nodes: int
    source: int
    bc_destinations: tuple[int, ...]
    mc_destinations: tuple[int, ...] = ()
    gains: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    antennas: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bc_destinations", tuple(self.bc_destinations))
        object.__setattr__(self, "mc_destinations", tuple(self.mc_destinations))
        ant = tuple(self.antennas) if self.antennas else (1,) * self.num_nodes
        object.__setattr__(self, "antennas", ant)
        if len(ant) != self.num_nodes:
            raise ValueError("antennas list length must equal num_nodes")
        if any(a < 1 for a in ant):
            raise ValueError("antenna counts must be positive")
        norm = {}
        for (k, l), g in dict(self.gains).items():
            norm[(int(k), int(l))] = _as_gain_matrix(g, ant[l], ant[k])
        object.__setattr__(self, "gains", MappingProxyType(norm))

    @property
    def nodes(self) -> range:
        return range(self.num_nodes)

    @property
    def destinations(self) -> tuple[int, ...]:
        return self.bc_destinations + self.mc_destinations

    @property
    def relays(self) -> tuple[int, ...]:
        special = {self.source, *self.destinations}
        return tuple(v for v in self.nodes if v not in special)

    @property
    def kind(self) -> str:
        return "gaussian"


@dataclass(frozen=True)
class LDNetwork:
    """Linear deterministic network over F_p^q.

    Every link (i, j) carries a q x q transfer matrix over F_p; a node's
    received vector is the mod-p sum of its incoming transfers.
    """

    p: int
    q: int
    num_nodes: int
    source: int
    bc_destinations: tuple[int, ...]
    mc_destinations: tuple[int, ...] = ()
    gains: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    def __post_init__(self):
        object.__setattr__(self, "bc_destinations", tuple(self.bc_destinations))
        object.__setattr__(self, "mc_destinations", tuple(self.mc_destinations))
        norm = {}
        for (i, j), g in dict(self.gains).items():
            if not isinstance(g, FpMatrix):
                g = FpMatrix(self.p, g)
            if g.p != self.p:
                raise ValueError(f"gain ({i},{j}) has modulus {g.p}, network has {self.p}")
            norm[(int(i), int(j))] = g
        object.__setattr__(self, "gains", MappingProxyType(norm))

    @property
    def nodes(self) -> range:
        return range(self.num_nodes)

    @property
    def destinations(self) -> tuple[int, ...]:
        return self.bc_destinations + self.mc_destinations

    @property
    def relays(self) -> tuple[int, ...]:
        special = {self.source, *self.destinations}
        return tuple(v for v in self.nodes if v not in special)

    @property
    def kind(self) -> str:
        return "ldn"


def ldn_from_shifts(p: int, q: int, num_nodes: int, source: int,
                    bc_destinations, shifts: dict, mc_destinations=()) -> LDNetwork:
    """Build an LDN whose gains are shift matrices, given per-edge shift counts."""
    gains = {e: fpmatrix.shift_matrix(p, q, n) for e, n in shifts.items()}
    return LDNetwork(p, q, num_nodes, source, tuple(bc_destinations),
                     tuple(mc_destinations), MappingProxyType(gains))


def validate(net) -> ValidationReport:
    """Check all structural invariants; returns an empty report iff valid."""
    bad: list[str] = []
    n = net.num_nodes
    if n < 2:
        bad.append("network needs at least two nodes")
    if not 0 <= net.source < n:
        bad.append(f"source {net.source} out of range")
    if len(net.bc_destinations) < 1:
        bad.append("at least one private-message destination required")
    for d in net.destinations:
        if not 0 <= d < n:
            bad.append(f"destination {d} out of range")
    if net.source in net.destinations:
        bad.append("source is destination")
    seen = set()
    for d in net.destinations:
        if d in seen:
            bad.append(f"node {d} listed as destination twice")
        seen.add(d)
    for (k, l), g in net.gains.items():
        if not (0 <= k < n and 0 <= l < n):
            bad.append(f"gain ({k},{l}) references missing node")
            continue
        if k == l:
            bad.append(f"self gain ({k},{k}) not allowed")
        if isinstance(net, LDNetwork):
            if g.entries.shape != (net.q, net.q):
                bad.append(f"gain ({k},{l}) is not {net.q}x{net.q}")
            if np.any(g.entries < 0) or np.any(g.entries >= net.p):
                bad.append(f"gain ({k},{l}) entry out of field")
    if isinstance(net, LDNetwork):
        if not fpmatrix.is_prime(net.p):
            bad.append(f"p={net.p} is not prime")
        if net.q < 1:
            bad.append("q must be positive")
    return ValidationReport(tuple(bad))


def reciprocal(net):
    """Swap source and destination roles and reverse every link.

    Gaussian links keep the same coefficients (transposed for multiple
    antennas); LDN links are transposed.  Only networks with a single
    private destination and no multicast destinations have a reciprocal
    in this representation, since the dual of a multi-destination
    broadcast is a multi-source network.
    """
    if net.mc_destinations:
        raise ValueError("reciprocal undefined for networks with multicast destinations")
    if len(net.bc_destinations) != 1:
        raise ValueError("reciprocal requires exactly one destination")
    new_source = net.bc_destinations[0]
    new_dest = (net.source,)
    if isinstance(net, LDNetwork):
        gains = {(j, i): g.transpose() for (i, j), g in net.gains.items()}
        return LDNetwork(net.p, net.q, net.num_nodes, new_source, new_dest, (),
                         MappingProxyType(gains))
    gains = {(l, k): g.T for (k, l), g in net.gains.items()}
    return GaussianNetwork(net.num_nodes, new_source, new_dest, (),
                           MappingProxyType(gains), net.antennas)
