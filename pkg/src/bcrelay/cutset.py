"""Cut enumeration and cut-set bound evaluation.

Cuts are node subsets containing the source with the requested
destinations on the far side.  Values are reported in bits per channel
use: log-det for Gaussian networks, rank times log2(p) for linear
deterministic ones, and exact conditional output entropy for discrete
superposition networks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from . import fpmatrix
from .fpmatrix import FpMatrix
from .network import GaussianNetwork, LDNetwork
from .unfold import (LayeredNetwork, assignment_to_omega, crossing_channel_edges,
                     switch_assignments)

ENUM_NODE_CAP = 24
DSN_CONFIG_CAP = 1 << 20
LOGDET_RTOL = 1e-9


class CapExceeded(Exception):
    """Raised when an exhaustive enumeration would exceed its configured cap."""


@dataclass(frozen=True)
class Cut:
    """Source-side node set; the complement is implied."""

    omega: frozenset

    def __post_init__(self):
        object.__setattr__(self, "omega", frozenset(self.omega))

    def complement(self, num_nodes: int) -> tuple[int, ...]:
        return tuple(v for v in range(num_nodes) if v not in self.omega)


@dataclass(frozen=True)
class RateRegion:
    """Per-subset sum-rate bounds, keyed by sorted tuples of 0-based
    destination indices, plus the optional multicast sum-rate bound."""

    constraints: MappingProxyType
    multicast_sum_bound: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "constraints", MappingProxyType(dict(self.constraints)))

    def bound(self, subset) -> float:
        return self.constraints[tuple(sorted(subset))]


@dataclass(frozen=True)
class CutGap:
    targets: tuple[int, ...]
    omega: tuple[int, ...]
    gaussian_bits: float
    dsn_bits: float

    @property
    def gap(self) -> float:
        return self.gaussian_bits - self.dsn_bits


@dataclass(frozen=True)
class GapCertificate:
    num_nodes: int
    entries: tuple[CutGap, ...]

    @property
    def worst_gap(self) -> float:
        return max(e.gap for e in self.entries)


def enumerate_cuts(net, target_nodes) -> list[Cut]:
    """All cuts separating the source from every node in ``target_nodes``.

    For plain networks this is the exhaustive family over free nodes.
    For unfolded layered networks the family is restricted to cuts that
    no infinite-capacity buffer edge crosses forward, enumerated through
    their per-node switch times.
    """
    targets = tuple(target_nodes)
    if not targets:
        raise ValueError("target set must be nonempty")
    if isinstance(net, LayeredNetwork):
        return [Cut(assignment_to_omega(net, t)) for t in switch_assignments(net, targets)]
    if net.num_nodes > ENUM_NODE_CAP:
        raise CapExceeded(f"cut enumeration capped at {ENUM_NODE_CAP} nodes")
    if net.source in targets:
        raise ValueError("source cannot be a target")
    free = [v for v in net.nodes if v != net.source and v not in targets]
    cuts = []
    for picks in itertools.product((False, True), repeat=len(free)):
        omega = {net.source} | {v for v, take in zip(free, picks) if take}
        cuts.append(Cut(frozenset(omega)))
    return cuts


def _antenna_offsets(net: GaussianNetwork, nodes) -> tuple[dict, int]:
    off, total = {}, 0
    for v in nodes:
        off[v] = total
        total += net.antennas[v]
    return off, total


def gaussian_cut_matrix(net: GaussianNetwork, cut: Cut) -> np.ndarray:
    """Assemble the antenna-expanded transfer matrix of links crossing the cut."""
    omega = sorted(cut.omega)
    comp = cut.complement(net.num_nodes)
    coff, ctot = _antenna_offsets(net, comp)
    ooff, otot = _antenna_offsets(net, omega)
    H = np.zeros((ctot, otot), dtype=np.complex128)
    for k in omega:
        for l in comp:
            g = net.gains.get((k, l))
            if g is not None:
                H[coff[l]:coff[l] + net.antennas[l], ooff[k]:ooff[k] + net.antennas[k]] = g
    return H


def logdet_capacity(H: np.ndarray, covariance: np.ndarray | None = None) -> float:
    """log2 det(I + H K H*) in bits, K defaulting to the identity."""
    if H.size == 0:
        return 0.0
    if covariance is None:
        M = H @ H.conj().T
    else:
        K = np.asarray(covariance, dtype=np.complex128)
        if K.shape != (H.shape[1], H.shape[1]):
            raise ValueError(f"covariance must be {H.shape[1]}x{H.shape[1]}")
        if not np.allclose(K, K.conj().T, atol=1e-8):
            raise ValueError("covariance must be Hermitian")
        eigs = np.linalg.eigvalsh((K + K.conj().T) / 2)
        if eigs.min() < -1e-9:
            raise ValueError("covariance must be positive semidefinite")
        if np.real(np.diag(K)).max() > 1 + 1e-9:
            raise ValueError("covariance diagonal exceeds the unit power constraint")
        M = H @ K @ H.conj().T
    M = np.eye(H.shape[0]) + (M + M.conj().T) / 2
    eigs = np.linalg.eigvalsh(M)
    return float(np.sum(np.log2(np.maximum(eigs, 1.0 - LOGDET_RTOL))))


def gaussian_cut_value(net: GaussianNetwork, cut: Cut,
                       covariance: np.ndarray | None = None) -> float:
    """Cut value log2 det(I + H K H*) in bits.

    ``covariance`` is the conditional covariance of the cut's stacked
    input vector (Hermitian PSD, unit-bounded diagonal); omitted, it is
    the identity, i.e. i.i.d. unit-power circularly symmetric inputs.
    """
    return logdet_capacity(gaussian_cut_matrix(net, cut), covariance)


def ldn_cut_matrix(net: LDNetwork, cut: Cut) -> FpMatrix:
    """Stacked transfer matrix from inputs in the cut to outputs outside it."""
    omega = sorted(cut.omega)
    comp = cut.complement(net.num_nodes)
    q = net.q
    blocks = []
    for l in comp:
        row = []
        for k in omega:
            g = net.gains.get((k, l))
            row.append(g.entries if g is not None else np.zeros((q, q), dtype=np.int64))
        blocks.append(np.hstack(row))
    stacked = np.vstack(blocks) if blocks else np.zeros((0, q * len(omega)), dtype=np.int64)
    return FpMatrix(net.p, stacked)


def ldn_cut_rank(net: LDNetwork, cut: Cut) -> int:
    return fpmatrix.rank(ldn_cut_matrix(net, cut))


def ldn_cut_value(net: LDNetwork, cut: Cut) -> float:
    """Rank of the crossing transfer matrix, scaled to bits per channel use."""
    return ldn_cut_rank(net, cut) * math.log2(net.p)


def layered_cut_rank(lay: LayeredNetwork, omega: frozenset) -> int:
    """Rank (over F_p) of all channel edges crossing a layered cut."""
    net = lay.base
    cross = crossing_channel_edges(lay, omega)
    if not cross:
        return 0
    senders = sorted({u for u, _, _, _ in cross})
    receivers = sorted({w for _, w, _, _ in cross})
    srow = {u: i for i, u in enumerate(senders)}
    rrow = {w: i for i, w in enumerate(receivers)}
    q = net.q
    M = np.zeros((q * len(receivers), q * len(senders)), dtype=np.int64)
    for u, w, a, b in cross:
        i, j = rrow[w] * q, srow[u] * q
        M[i:i + q, j:j + q] = net.gains[(a, b)].entries
    return fpmatrix.rank(FpMatrix(net.p, M))


def layered_cut_value(lay: LayeredNetwork, omega: frozenset) -> float:
    """Layered cut value in bits (rank-based for LDN, log-det for Gaussian)."""
    net = lay.base
    if isinstance(net, LDNetwork):
        return layered_cut_rank(lay, omega) * math.log2(net.p)
    cross = crossing_channel_edges(lay, omega)
    if not cross:
        return 0.0
    senders = sorted({u for u, _, _, _ in cross})
    receivers = sorted({w for _, w, _, _ in cross})
    soff, mS = {}, 0
    for u in senders:
        soff[u] = mS
        mS += net.antennas[lay.nodes[u].orig]
    roff, mR = {}, 0
    for w in receivers:
        roff[w] = mR
        mR += net.antennas[lay.nodes[w].orig]
    H = np.zeros((mR, mS), dtype=np.complex128)
    for u, w, a, b in cross:
        H[roff[w]:roff[w] + net.antennas[b], soff[u]:soff[u] + net.antennas[a]] = net.gains[(a, b)]
    return logdet_capacity(H)


def layered_min_cut_rank(lay: LayeredNetwork, target_nodes) -> int:
    return min(layered_cut_rank(lay, c.omega) for c in enumerate_cuts(lay, target_nodes))


def min_cut_value(net, target_nodes, dist=None) -> float:
    """Minimum cut value toward the given destination nodes, in bits."""
    cuts = enumerate_cuts(net, tuple(target_nodes))
    if isinstance(net, LayeredNetwork):
        return min(layered_cut_value(net, c.omega) for c in cuts)
    return min(_base_cut_value(net, c, dist) for c in cuts)


def ldn_min_cut_rank(net: LDNetwork, target_nodes) -> int:
    return min(ldn_cut_rank(net, c) for c in enumerate_cuts(net, tuple(target_nodes)))


def _base_cut_value(net, cut: Cut, dist=None) -> float:
    if isinstance(net, LDNetwork):
        return ldn_cut_value(net, cut)
    if isinstance(net, GaussianNetwork):
        return gaussian_cut_value(net, cut)
    return dsn_cut_value(net, cut, dist)


def dsn_cut_value(dsn, cut: Cut, dist=None, cap: int = DSN_CONFIG_CAP) -> float:
    """Exact H(Y_comp | X_comp) of a discrete superposition network cut.

    The channel is deterministic, so this conditional entropy equals the
    cut's mutual information I(Y_comp; X_omega | X_comp).  Evaluation is
    by exhaustive enumeration of the product input alphabet; beyond
    ``cap`` configurations a CapExceeded error points at the Monte Carlo
    estimator instead.
    """
    from . import dsn as dsnmod

    probs = dsnmod.input_distribution(dsn, dist)
    sizes = [len(dsn.alphabets[v]) for v in range(dsn.num_nodes)]
    total = 1
    for s in sizes:
        total *= s
    if total > cap:
        raise CapExceeded(
            f"{total} input configurations exceed cap {cap}; "
            "use dsn_cut_value_mc for a Monte Carlo estimate")
    omega = sorted(cut.omega)
    comp = cut.complement(dsn.num_nodes)

    cond: dict = {}
    for config in itertools.product(*(range(s) for s in sizes)):
        x = [dsn.alphabets[v][config[v]] for v in range(dsn.num_nodes)]
        pr = 1.0
        for v in range(dsn.num_nodes):
            pr *= probs[v][config[v]]
        if pr == 0.0:
            continue
        y = tuple(dsnmod.received_value(dsn, x, l) for l in comp)
        key = tuple(config[v] for v in comp)
        bucket = cond.setdefault(key, {})
        bucket[y] = bucket.get(y, 0.0) + pr

    value = 0.0
    for bucket in cond.values():
        mass = sum(bucket.values())
        for pv in bucket.values():
            value -= pv * math.log2(pv / mass)
    return value


def dsn_cut_value_mc(dsn, cut: Cut, dist=None, samples: int = 100000,
                     rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Monte Carlo estimate of the DSN cut value with Miller-Madow correction.

    Returns (estimate_bits, standard_error).  Intended for alphabets over
    the exhaustive cap; never suitable for exact assertions.
    """
    from . import dsn as dsnmod

    rng = np.random.default_rng(0) if rng is None else rng
    probs = dsnmod.input_distribution(dsn, dist)
    comp = cut.complement(dsn.num_nodes)
    joint_counts: dict = {}
    cond_counts: dict = {}
    for _ in range(samples):
        config = [rng.choice(len(probs[v]), p=probs[v]) for v in range(dsn.num_nodes)]
        x = [dsn.alphabets[v][config[v]] for v in range(dsn.num_nodes)]
        y = tuple(dsnmod.received_value(dsn, x, l) for l in comp)
        xc = tuple(config[v] for v in comp)
        joint_counts[(xc, y)] = joint_counts.get((xc, y), 0) + 1
        cond_counts[xc] = cond_counts.get(xc, 0) + 1

    def entropy_mm(counts: dict) -> tuple[float, float]:
        n = sum(counts.values())
        ps = np.array([c / n for c in counts.values()])
        plug = float(-np.sum(ps * np.log2(ps)))
        mm = (len(counts) - 1) / (2 * n * math.log(2))
        var = float(np.sum(ps * (np.log2(ps) ** 2)) - plug ** 2)
        return plug + mm, math.sqrt(max(var, 0.0) / n)

    h_joint, se_joint = entropy_mm(joint_counts)
    h_cond, se_cond = entropy_mm(cond_counts)
    return h_joint - h_cond, math.hypot(se_joint, se_cond)


def cutset_region(net, dist=None) -> RateRegion:
    """Cut-set rate region: one bound per nonempty destination subset.

    With multicast destinations present, the sum rate is additionally
    bounded by the tightest cut toward any single multicast node.
    """
    j_count = len(net.bc_destinations)
    constraints = {}
    for r in range(1, j_count + 1):
        for subset in itertools.combinations(range(j_count), r):
            targets = tuple(net.bc_destinations[j] for j in subset)
            constraints[subset] = min_cut_value(net, targets, dist)
    mc_bound = None
    if net.mc_destinations:
        mc_bound = min(min_cut_value(net, (m,), dist) for m in net.mc_destinations)
    return RateRegion(constraints, mc_bound)


def gap_certificate(gauss_net: GaussianNetwork, dsn, dist=None,
                    cap: int = DSN_CONFIG_CAP) -> GapCertificate:
    """Record per-cut (Gaussian, DSN) value pairs for every destination subset.

    Nothing is asserted; the certificate simply records each cut's pair
    and the implied gap so bounds can be checked externally.
    """
    if dsn.base is not gauss_net and dsn.base != gauss_net:
        raise ValueError("DSN was not derived from the given Gaussian network")
    j_count = len(gauss_net.bc_destinations)
    target_sets = []
    for r in range(1, j_count + 1):
        for subset in itertools.combinations(range(j_count), r):
            target_sets.append(tuple(gauss_net.bc_destinations[j] for j in subset))
    target_sets.extend((m,) for m in gauss_net.mc_destinations)
    entries = []
    for targets in target_sets:
        for cut in enumerate_cuts(gauss_net, targets):
            g = gaussian_cut_value(gauss_net, cut)
            d = dsn_cut_value(dsn, cut, dist, cap)
            entries.append(CutGap(targets, tuple(sorted(cut.omega)), g, d))
    return GapCertificate(gauss_net.num_nodes, tuple(entries))
