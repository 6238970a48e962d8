"""Linear coding simulation on layered deterministic networks.

Relays apply fixed q x q matrices over F_p to their received vectors;
composing them layer by layer gives each destination an exact
end-to-end transfer matrix from the source input.  Random relay draws
are used to measure how often the min-cut rank is achieved, and a
linear precoder search turns achievable rank tuples into actual
encode/decode round trips.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import cutset, fpmatrix
from .fpmatrix import FpMatrix
from .network import LDNetwork
from .unfold import LayeredNetwork

PRECODER_SEARCH_CAP = 1 << 20


class RateRegionError(Exception):
    """Requested rates exceed the transfer rank of some destination subset."""

    def __init__(self, subset: tuple[int, ...], want: int, have: int):
        self.subset = subset
        super().__init__(
            f"rates infeasible for destination subset {subset}: "
            f"{want} symbols requested, stacked transfer rank is {have}")


class NoPrecoder(Exception):
    pass


def _check_native_ldn(lay: LayeredNetwork) -> LDNetwork:
    if not isinstance(lay, LayeredNetwork) or lay.is_unfolded:
        raise ValueError("end-to-end composition needs a native layered network")
    if not isinstance(lay.base, LDNetwork):
        raise ValueError("end-to-end composition is defined over F_p networks")
    return lay.base


@dataclass(frozen=True)
class EndToEndTransfer:
    """Per-destination transfer matrices of one relay realization."""

    p: int
    q: int
    per_dest: dict

    def stacked(self, dest_nodes) -> FpMatrix:
        return fpmatrix.vstack([self.per_dest[d] for d in dest_nodes])

    def rank_to(self, dest_nodes) -> int:
        return fpmatrix.rank(self.stacked(dest_nodes))


def end_to_end(lay: LayeredNetwork, relays: dict) -> EndToEndTransfer:
    """Compose channel gains and relay matrices into source-to-destination
    transfer matrices, exactly over F_p."""
    net = _check_native_ldn(lay)
    q = net.q
    transmit_tf: dict = {net.source: fpmatrix.identity(net.p, q)}
    receive_tf: dict = {}
    in_edges: dict = {}
    for (_, _, a, b) in lay.channel_edges:
        in_edges.setdefault(b, []).append(a)
    for layer in lay.layers[1:]:
        for i in layer:
            v = lay.nodes[i].orig
            acc = fpmatrix.zeros(net.p, q, q)
            for u in sorted(set(in_edges.get(v, ()))):
                acc = fpmatrix.add(acc, fpmatrix.matmul(net.gains[(u, v)], transmit_tf[u]))
            receive_tf[v] = acc
            if v in net.relays:
                r = relays.get(v)
                if r is None:
                    raise ValueError(f"relay {v} has no matrix assigned")
                transmit_tf[v] = fpmatrix.matmul(r, acc)
    missing = [d for d in net.destinations if d not in receive_tf]
    if missing:
        raise ValueError(f"destinations {missing} unreachable in layered structure")
    return EndToEndTransfer(net.p, q, {d: receive_tf[d] for d in net.destinations})


def sample_relays(lay: LayeredNetwork, rng: np.random.Generator,
                  relay_kind: str = "linear") -> dict:
    net = _check_native_ldn(lay)
    if relay_kind == "linear":
        return {r: fpmatrix.random_matrix(net.p, net.q, net.q, rng) for r in net.relays}
    if relay_kind == "permutation":
        return {r: fpmatrix.random_permutation(net.p, net.q, rng) for r in net.relays}
    raise ValueError("relay_kind must be 'linear' or 'permutation'")


def rank_achievability_trial(lay: LayeredNetwork, targets, trials: int, seed: int,
                             relay_kind: str = "linear") -> float:
    """Fraction of independent relay draws whose stacked transfer to the
    target destinations reaches the min-cut rank.

    Trial t uses its own generator stream derived from (seed, t), so the
    estimate does not depend on evaluation order.
    """
    net = _check_native_ldn(lay)
    targets = tuple(targets)
    if trials < 1:
        raise ValueError("at least one trial required")
    mincut = cutset.ldn_min_cut_rank(net, targets)
    hits = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        transfer = end_to_end(lay, sample_relays(lay, rng, relay_kind))
        if transfer.rank_to(targets) >= mincut:
            hits += 1
    return hits / trials


def _rank_np(p: int, arr: np.ndarray) -> int:
    return fpmatrix.rank(FpMatrix(p, arr))


def find_precoder(transfer: EndToEndTransfer, dest_nodes, rates,
                  cap: int = PRECODER_SEARCH_CAP) -> FpMatrix:
    """Search a linear precoder under which every destination can recover
    its own message symbols despite the others' interference.

    Destination i with columns P_i succeeds iff
    rank(M_i P) = rank(M_i P_-i) + r_i, i.e. its own columns contribute
    full fresh rank at its receiver beyond the interference span.  A
    greedy pass picks columns in lexicographic order; if its result
    fails the joint check, exhaustive depth-first search over column
    tuples takes over (desk scale only).
    """
    p, q = transfer.p, transfer.q
    dests = tuple(dest_nodes)
    rates = tuple(int(r) for r in rates)
    total = sum(rates)
    if total == 0:
        return fpmatrix.zeros(p, q, max(total, 1))
    for r in range(1, len(dests) + 1):
        for subset in itertools.combinations(range(len(dests)), r):
            want = sum(rates[i] for i in subset)
            have = transfer.rank_to([dests[i] for i in subset])
            if want > have:
                raise RateRegionError(tuple(subset), want, have)

    mats = [np.asarray(transfer.per_dest[d].entries) for d in dests]
    owners = [i for i, r in enumerate(rates) for _ in range(r)]
    columns = [np.array(c, dtype=np.int64) for c in itertools.product(range(p), repeat=q)]

    def admissible(cols: list[np.ndarray]) -> bool:
        P = np.stack(cols, axis=1)
        for i in range(len(dests)):
            own = [j for j, o in enumerate(owners[: len(cols)]) if o == i]
            if not own:
                continue
            others = [j for j in range(len(cols)) if j not in own]
            full = _rank_np(p, (mats[i] @ P) % p)
            interf = _rank_np(p, (mats[i] @ P[:, others]) % p) if others else 0
            if full != interf + len(own):
                return False
        return True

    # greedy: grow one column at a time, keeping the owner's rank fresh
    greedy: list[np.ndarray] = []
    for pos in range(total):
        i = owners[pos]
        for c in columns:
            cand = greedy + [c]
            P = np.stack(cand, axis=1)
            own = [j for j, o in enumerate(owners[: len(cand)]) if o == i]
            others = [j for j in range(len(cand)) if j not in own]
            full = _rank_np(p, (mats[i] @ P) % p)
            interf = _rank_np(p, (mats[i] @ P[:, others]) % p) if others else 0
            if full == interf + len(own):
                greedy.append(c)
                break
        else:
            greedy = []
            break
    if greedy and admissible(greedy):
        return FpMatrix(p, np.stack(greedy, axis=1))

    if len(columns) ** total > cap:
        raise NoPrecoder(f"search space {len(columns) ** total} exceeds cap {cap}")

    def dfs(cols: list[np.ndarray]) -> list[np.ndarray] | None:
        if len(cols) == total:
            return cols if admissible(cols) else None
        i = owners[len(cols)]
        own = [j for j, o in enumerate(owners[: len(cols)]) if o == i]
        for c in columns:
            cand = cols + [c]
            P = np.stack(cand, axis=1)
            # prune: owner's columns so far must stay independent on their own
            if _rank_np(p, (mats[i] @ P[:, own + [len(cols)]]) % p) != len(own) + 1:
                continue
            found = dfs(cand)
            if found is not None:
                return found
        return None

    found = dfs([])
    if found is None:
        raise NoPrecoder("no linear precoder attains the requested rates")
    return FpMatrix(p, np.stack(found, axis=1))


@dataclass(frozen=True)
class RoundtripResult:
    success: tuple[bool, ...]
    messages: tuple
    decoded: tuple

    @property
    def all_ok(self) -> bool:
        return all(self.success)


def encode_decode_roundtrip(lay: LayeredNetwork, relays: dict, rate_vector,
                            rng: np.random.Generator) -> RoundtripResult:
    """Draw random messages, precode, push through the network and let each
    destination solve its linear system; exact recovery per destination.

    Raises RateRegionError when the rate vector falls outside the rank
    region of this relay realization.
    """
    net = _check_native_ldn(lay)
    dests = net.bc_destinations
    rates = tuple(int(r) for r in rate_vector)
    if len(rates) != len(dests):
        raise ValueError("one rate per destination required")
    transfer = end_to_end(lay, relays)
    precoder = find_precoder(transfer, dests, rates)
    total = sum(rates)
    w = rng.integers(0, net.p, size=total, dtype=np.int64) if total else \
        np.zeros(0, dtype=np.int64)
    x = (precoder.entries @ w) % net.p if total else np.zeros(net.q, dtype=np.int64)

    starts = np.cumsum((0,) + rates)
    decoded = []
    success = []
    for i, d in enumerate(dests):
        mi = transfer.per_dest[d]
        y = (mi.entries @ x) % net.p
        system = FpMatrix(net.p, (mi.entries @ precoder.entries) % net.p) if total \
            else fpmatrix.zeros(net.p, net.q, 1)
        if rates[i] == 0:
            decoded.append(np.zeros(0, dtype=np.int64))
            success.append(True)
            continue
        w_hat = fpmatrix.solve(system, y)
        block = w_hat[starts[i]:starts[i + 1]]
        decoded.append(block)
        success.append(bool(np.array_equal(block, w[starts[i]:starts[i + 1]])))
    return RoundtripResult(tuple(success), tuple(w.tolist()),
                           tuple(tuple(b.tolist()) for b in decoded))
