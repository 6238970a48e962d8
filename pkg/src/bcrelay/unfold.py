"""Layered views of relay networks: time expansion and half-duplex schedules.

A non-layered network is unfolded into K interior layers, each holding a
copy of every node plus a transmit buffer and one receive buffer per
destination.  Buffer and memory links are orthogonal infinite-capacity
edges; they are flagged separately from channel edges and cut
enumeration never lets them cross a cut in the forward direction.

Construction, for interior layers k = 1..K:

* channel edge v1[k] -> v2[k+1] for every original link, k <= K-1
  (under a half-duplex schedule, only when v1 transmits and v2 listens
  at step k);
* memory edge v[k] -> v[k+1];
* transmit buffer T[k] -> T[k+1] and T[k] -> S[k+1], starting from the
  boundary node T[0], which is the unfolded source;
* receive buffer R_j[k] -> R_j[k+1] up to the boundary sink R_j[K+1],
  plus a tap D_j[k] -> R_j[k+1] for k <= K-1 that copies the
  destination's receptions into its buffer.

The tap edge is emitted by default; ``dest_taps=False`` drops it, which
leaves the destination buffers unreachable and is only useful for
inspecting the alternative reading of the construction (the variant in
which the destination feeds its own next copy is always present, since
that is exactly the memory edge).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .network import GaussianNetwork, LDNetwork

TX = "tx"
RX = "rx"


@dataclass(frozen=True)
class Schedule:
    """Static half-duplex schedule: one {node: TX|RX} assignment per step."""

    steps: tuple

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(dict(s) for s in self.steps))

    def __len__(self):
        return len(self.steps)

    def check(self, num_nodes: int) -> None:
        for i, step in enumerate(self.steps):
            for v in range(num_nodes):
                mode = step.get(v)
                if mode not in (TX, RX):
                    raise ValueError(f"schedule step {i}: node {v} must be '{TX}' or '{RX}'")


@dataclass(frozen=True)
class UnfoldedNode:
    kind: str  # "copy" | "tx_buf" | "rx_buf"
    orig: int  # original node id ("copy"/"rx_buf"); -1 for the transmit buffer
    layer: int


@dataclass(frozen=True)
class LayeredNetwork:
    """A layered network, either native (no buffers) or time-unfolded.

    ``channel_edges`` entries are (u, w, k, l): layered node indices u -> w
    carrying the base gain of link (k, l).  ``buffer_edges`` are the
    infinite-capacity (u, w) pairs.
    """

    base: object
    K: int
    nodes: tuple[UnfoldedNode, ...]
    layers: tuple[tuple[int, ...], ...]
    channel_edges: tuple
    buffer_edges: tuple
    source: int
    destinations: tuple[int, ...]

    @property
    def is_unfolded(self) -> bool:
        return bool(self.buffer_edges)

    def gain(self, edge) -> object:
        return self.base.gains[(edge[2], edge[3])]

    def validate(self) -> list[str]:
        bad = []
        if [n.orig for n in self.layers_nodes(0)] != [self.base.source] and not self.is_unfolded:
            bad.append("layer 0 must contain only the source")
        layer_of = {i: n.layer for i, n in enumerate(self.nodes)}
        for u, w, _, _ in self.channel_edges:
            if layer_of[w] != layer_of[u] + 1:
                bad.append(f"channel edge {u}->{w} skips layers")
        last = len(self.layers) - 1
        for d in self.destinations:
            if layer_of[d] != last:
                bad.append(f"destination node {d} not in last layer")
        return bad

    def layers_nodes(self, k: int):
        return [self.nodes[i] for i in self.layers[k]]


def as_layered(net) -> LayeredNetwork:
    """View an already-layered network as a LayeredNetwork (no buffers).

    Layers are recovered by breadth-first distance from the source and
    then checked: the source is alone in layer 0, every link connects
    consecutive layers, and all destinations sit in the last layer.
    """
    dist = {net.source: 0}
    frontier = [net.source]
    while frontier:
        nxt = []
        for u in frontier:
            for (a, b) in net.gains:
                if a == u and b not in dist:
                    dist[b] = dist[u] + 1
                    nxt.append(b)
        frontier = nxt
    if set(dist) != set(net.nodes):
        raise ValueError("network is not layered: unreachable nodes")
    depth = max(dist.values())
    for (a, b) in net.gains:
        if dist[b] != dist[a] + 1:
            raise ValueError(f"network is not layered: link ({a},{b}) skips layers")
    if any(dist[d] != depth for d in net.destinations):
        raise ValueError("network is not layered: destinations not all in last layer")
    if sum(1 for v in dist if dist[v] == 0) != 1:
        raise ValueError("network is not layered: layer 0 not just the source")

    nodes = tuple(UnfoldedNode("copy", v, dist[v]) for v in net.nodes)
    layers = tuple(
        tuple(i for i, nd in enumerate(nodes) if nd.layer == k) for k in range(depth + 1)
    )
    edges = tuple((a, b, a, b) for (a, b) in sorted(net.gains))
    dests = tuple(int(d) for d in net.destinations)
    return LayeredNetwork(net, depth, nodes, layers, edges, (), net.source, dests)


def unfold(net, K: int, schedule: Schedule | None = None,
           dest_taps: bool = True) -> LayeredNetwork:
    """Time-expand ``net`` into K interior layers plus boundary layers."""
    n = net.num_nodes
    if K <= n:
        raise ValueError(f"unfolding depth too small: K={K} must exceed |V|={n}")
    if schedule is not None:
        if len(schedule) != K:
            raise ValueError(f"schedule length {len(schedule)} != K={K}")
        schedule.check(n)
    dests = tuple(int(d) for d in net.destinations)
    j_count = len(dests)

    nodes: list[UnfoldedNode] = [UnfoldedNode("tx_buf", -1, 0)]
    copy_idx: dict[tuple[int, int], int] = {}
    tbuf_idx: dict[int, int] = {0: 0}
    rbuf_idx: dict[tuple[int, int], int] = {}
    for k in range(1, K + 1):
        for v in range(n):
            copy_idx[(v, k)] = len(nodes)
            nodes.append(UnfoldedNode("copy", v, k))
        tbuf_idx[k] = len(nodes)
        nodes.append(UnfoldedNode("tx_buf", -1, k))
        for d in dests:
            rbuf_idx[(d, k)] = len(nodes)
            nodes.append(UnfoldedNode("rx_buf", d, k))
    for d in dests:
        rbuf_idx[(d, K + 1)] = len(nodes)
        nodes.append(UnfoldedNode("rx_buf", d, K + 1))

    channel = []
    for k in range(1, K):
        step = schedule.steps[k - 1] if schedule is not None else None
        for (a, b) in sorted(net.gains):
            if step is not None and not (step[a] == TX and step[b] == RX):
                continue
            channel.append((copy_idx[(a, k)], copy_idx[(b, k + 1)], a, b))

    buffers = []
    for k in range(1, K):
        for v in range(n):
            buffers.append((copy_idx[(v, k)], copy_idx[(v, k + 1)]))
    for k in range(K):
        buffers.append((tbuf_idx[k], tbuf_idx[k + 1]))
        buffers.append((tbuf_idx[k], copy_idx[(net.source, k + 1)]))
    for d in dests:
        for k in range(1, K + 1):
            buffers.append((rbuf_idx[(d, k)], rbuf_idx[(d, k + 1)]))
        if dest_taps:
            for k in range(1, K):
                buffers.append((copy_idx[(d, k)], rbuf_idx[(d, k + 1)]))

    layers = tuple(
        tuple(i for i, nd in enumerate(nodes) if nd.layer == k) for k in range(K + 2)
    )
    sinks = tuple(rbuf_idx[(d, K + 1)] for d in dests)
    lay = LayeredNetwork(net, K, tuple(nodes), layers, tuple(channel),
                         tuple(buffers), 0, sinks)
    assert j_count == len(sinks)
    return lay


def unfold_scheduled(net, schedule: Schedule) -> LayeredNetwork:
    """Unfold under a static half-duplex schedule of length K."""
    return unfold(net, len(schedule), schedule=schedule)


def switch_assignments(lay: LayeredNetwork, target_nodes: tuple[int, ...]):
    """All admissible cuts of an unfolded network, as switch-time maps.

    A cut that never lets a buffer or memory edge cross forward is
    monotone in time: node v's copies belong to the source side exactly
    from some switch time t_v on.  The source is pinned to t=1, every
    requested destination to t in {K, K+1} (its copies up to layer K-1
    feed its receive buffer, which must stay on the sink side), and all
    remaining nodes range over t in 1..K+1, where K+1 means the node
    never switches.
    """
    net, K = lay.base, lay.K
    if not target_nodes:
        raise ValueError("target set must be nonempty")
    free = [v for v in range(net.num_nodes) if v != net.source and v not in target_nodes]
    tgt_choices = [(K, K + 1)] * len(target_nodes)
    free_choices = [tuple(range(1, K + 2))] * len(free)
    for combo in itertools.product(*(tgt_choices + free_choices)):
        t = {net.source: 1}
        t.update(dict(zip(target_nodes, combo[: len(target_nodes)])))
        t.update(dict(zip(free, combo[len(target_nodes):])))
        yield t


def assignment_to_omega(lay: LayeredNetwork, t: dict) -> frozenset:
    """Materialize a switch-time assignment as a source-side node set."""
    omega = set()
    for i, nd in enumerate(lay.nodes):
        if nd.kind == "copy":
            if nd.layer >= t[nd.orig]:
                omega.add(i)
        elif nd.kind == "tx_buf":
            omega.add(i)
        else:  # rx_buf of destination d joins one layer after d switches
            td = t[nd.orig]
            if td <= lay.K and nd.layer >= td + 1:
                omega.add(i)
    return frozenset(omega)


def crossing_channel_edges(lay: LayeredNetwork, omega: frozenset):
    return [e for e in lay.channel_edges if e[0] in omega and e[1] not in omega]


def buffer_edge_crosses(lay: LayeredNetwork, omega: frozenset) -> bool:
    return any(u in omega and w not in omega for u, w in lay.buffer_edges)
