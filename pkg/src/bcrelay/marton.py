"""Three-level coding scheme for layered deterministic broadcast networks.

Level 1: every relay maps received blocks of ``t1`` symbols to transmit
blocks through a lookup table sampled i.i.d. from the input
distribution; a fixed table turns the network into a deterministic
end-to-end broadcast channel on blocks.  Level 2: a binning source code
over ``t2`` blocks on that channel, optionally restricted to pruned
received sets.  Level 3: ``t3`` independent repetitions with freshly
sampled tables.

All sets are materialized exhaustively, so everything here is exact at
toy scale and guarded by explicit caps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from . import typicality
from .dsn import DSNetwork, round_complex
from .network import LDNetwork
from .unfold import LayeredNetwork

BLOCK_CAP = 1 << 12
MESSAGE_CAP = 1 << 12
ERASURE = -1

# Pruning exponent for which the lift of the full scheme is proven to work
# at asymptotic block lengths: log2(12 N - 2) + 11 with N non-source nodes.
# Far too destructive for toy sets; exposed for reference, never forced.
def asymptotic_kappa(num_non_source: int) -> float:
    return math.log2(12 * num_non_source - 2) + 11


class CapExceeded(Exception):
    pass


class EncodingCapacityError(Exception):
    """A destination's bin count exceeds its codebook; rate too high."""

    def __init__(self, dest_pos: int, num_bins: int, members: int):
        self.dest_pos = dest_pos
        super().__init__(
            f"rate too high for block length: destination {dest_pos} needs "
            f"{num_bins} nonempty bins but has {members} sequences")


@dataclass(frozen=True)
class SchemeParams:
    """Block sizes and code-shaping knobs shared by the scheme ops."""

    t1: int
    t2: int
    t3: int = 1
    delta: float = 0.1
    kappa: float = 0.0

    def __post_init__(self):
        if min(self.t1, self.t2, self.t3) < 1:
            raise ValueError("block sizes must be positive")
        if self.delta <= 0:
            raise ValueError("typicality slack must be positive")
        if self.kappa < 0:
            raise ValueError("pruning exponent must be nonnegative")


def field_vectors(p: int, q: int) -> tuple:
    return tuple(itertools.product(range(p), repeat=q))


def transmit_alphabet(lay: LayeredNetwork, v: int) -> tuple:
    base = lay.base
    if isinstance(base, LDNetwork):
        return field_vectors(base.p, base.q)
    if isinstance(base, DSNetwork):
        return base.alphabets[v]
    raise TypeError("deterministic coding needs an LDN or DSN base network")


def _symbol_out(base, contributions) -> object:
    """Combine (gain, symbol) contributions into one received symbol."""
    if isinstance(base, LDNetwork):
        acc = np.zeros(base.q, dtype=np.int64)
        for g, x in contributions:
            acc = (acc + g.entries @ np.asarray(x, dtype=np.int64)) % base.p
        return tuple(int(t) for t in acc)
    acc = 0j
    for g, x in contributions:
        acc += complex(g[0, 0]) * x
    return round_complex(acc)


def receive_alphabets(lay: LayeredNetwork, cap: int = BLOCK_CAP) -> dict:
    """Per-symbol received alphabet of every non-source node.

    For an LDN this is the whole space F_p^q.  For a DSN it is the image
    of the rounded superposition over all upstream transmit alphabets,
    computed layer by layer (it does not depend on the relay tables,
    which map into the fixed transmit alphabets).
    """
    base = lay.base
    out: dict = {}
    if isinstance(base, LDNetwork):
        full = field_vectors(base.p, base.q)
        for nd in lay.nodes:
            if nd.orig != base.source:
                out[nd.orig] = full
        return out
    in_edges: dict = {}
    for (_, _, a, b) in lay.channel_edges:
        in_edges.setdefault(b, []).append(a)
    for layer in lay.layers[1:]:
        for i in layer:
            v = lay.nodes[i].orig
            ups = sorted(set(in_edges.get(v, ())))
            alphabets = [transmit_alphabet(lay, u) for u in ups]
            total = math.prod(len(a) for a in alphabets) if alphabets else 1
            if total > cap:
                raise CapExceeded(f"node {v}: {total} upstream configurations exceed cap")
            image = set()
            for xs in itertools.product(*alphabets):
                image.add(_symbol_out(base, [(base.gains[(u, v)], x)
                                             for u, x in zip(ups, xs)]))
            out[v] = tuple(sorted(image, key=_symbol_key))
    return out


def _symbol_key(sym):
    if isinstance(sym, complex):
        return (sym.real, sym.imag)
    return sym


def uniform_input_dist(lay: LayeredNetwork, v: int) -> np.ndarray:
    n = len(transmit_alphabet(lay, v))
    return np.full(n, 1.0 / n)


def sample_relay_tables(lay: LayeredNetwork, params: SchemeParams,
                        rng: np.random.Generator, dist=None,
                        cap: int = BLOCK_CAP) -> dict:
    """Draw every relay's block map f_r: Y_r^t1 -> X_r^t1.

    Each table entry is t1 i.i.d. symbols from the relay's input
    distribution; entries are independent across relays.  The iteration
    order over the domain is fixed, so a given generator state yields
    one reproducible table set.
    """
    base = lay.base
    rx = receive_alphabets(lay, cap)
    tables: dict = {}
    for r in base.relays:
        tx = transmit_alphabet(lay, r)
        probs = np.asarray(dist[r], dtype=float) if dist and r in dist \
            else np.full(len(tx), 1.0 / len(tx))
        domain_size = len(rx[r]) ** params.t1
        if domain_size > cap:
            raise CapExceeded(f"relay {r}: table domain {domain_size} exceeds cap {cap}")
        table = {}
        for y_block in itertools.product(rx[r], repeat=params.t1):
            picks = rng.choice(len(tx), size=params.t1, p=probs)
            table[y_block] = tuple(tx[i] for i in picks)
        tables[r] = table
    return tables


def tables_from_matrices(lay: LayeredNetwork, matrices: dict,
                         params: SchemeParams) -> dict:
    """Express per-relay linear maps over F_p^q as lookup tables."""
    base = lay.base
    rx = receive_alphabets(lay)
    tables = {}
    for r, m in matrices.items():
        table = {}
        for y_block in itertools.product(rx[r], repeat=params.t1):
            table[y_block] = tuple(
                tuple(int(t) for t in (m.entries @ np.asarray(y, dtype=np.int64)) % base.p)
                for y in y_block)
        tables[r] = table
    return tables


@dataclass(frozen=True)
class InducedChannel:
    """The deterministic broadcast channel induced by one table set.

    ``x_blocks[i]`` is a source block, ``x_probs[i]`` its probability,
    and ``node_blocks[v][i]`` the block node v receives for it.
    """

    t1: int
    bc_nodes: tuple[int, ...]
    mc_nodes: tuple[int, ...]
    node_order: tuple[int, ...]
    x_blocks: tuple
    x_probs: np.ndarray
    node_blocks: MappingProxyType

    def block_table(self, nodes) -> "BlockTable":
        return BlockTable.build(self, tuple(nodes))


@dataclass(frozen=True)
class BlockTable:
    """Distinct joint received blocks of a node subset, with probabilities."""

    nodes: tuple[int, ...]
    symbols: tuple
    probs: np.ndarray
    x_to_symbol: np.ndarray
    index: MappingProxyType

    @staticmethod
    def build(channel: InducedChannel, nodes: tuple) -> "BlockTable":
        if len(nodes) == 1:
            keys = list(channel.node_blocks[nodes[0]])
            symbols = sorted(set(keys), key=_block_key)
            index = {s: i for i, s in enumerate(symbols)}
            x_to = np.array([index[k] for k in keys], dtype=np.int64)
            probs = np.zeros(len(symbols))
            np.add.at(probs, x_to, channel.x_probs)
            return BlockTable(nodes, tuple(symbols), probs, x_to, MappingProxyType(index))
        keys = [tuple(channel.node_blocks[v][i] for v in nodes)
                for i in range(len(channel.x_blocks))]
        symbols = sorted(set(keys), key=lambda t: tuple(map(_block_key, t)))
        index = {s: i for i, s in enumerate(symbols)}
        x_to = np.array([index[k] for k in keys], dtype=np.int64)
        probs = np.zeros(len(symbols))
        np.add.at(probs, x_to, channel.x_probs)
        return BlockTable(nodes, tuple(symbols), probs, x_to, MappingProxyType(index))

    def entropy(self) -> float:
        return typicality.entropy(self.probs)


def _block_key(block):
    return tuple(_symbol_key(s) for s in block)


def _components(joint_table: BlockTable, tables_seq) -> np.ndarray:
    """Map every joint symbol to its per-position block-table indices."""
    out = np.zeros((len(joint_table.symbols), len(tables_seq)), dtype=np.int64)
    for si, sym in enumerate(joint_table.symbols):
        for j, tab in enumerate(tables_seq):
            out[si, j] = tab.index[sym[j]]
    return out


def propagate_block(lay: LayeredNetwork, tables: dict, x_block: tuple) -> dict:
    """Push one source block through the layered network; returns every
    non-source node's received block."""
    base = lay.base
    transmit = {base.source: tuple(x_block)}
    received: dict = {}
    in_edges: dict = {}
    for (_, _, a, b) in lay.channel_edges:
        in_edges.setdefault(b, []).append(a)
    t1 = len(x_block)
    for layer in lay.layers[1:]:
        for i in layer:
            v = lay.nodes[i].orig
            ups = sorted(set(in_edges.get(v, ())))
            block = tuple(
                _symbol_out(base, [(base.gains[(u, v)], transmit[u][t]) for u in ups])
                for t in range(t1))
            received[v] = block
            if v in tables:
                transmit[v] = tables[v][block]
    return received


def induce_broadcast_channel(lay: LayeredNetwork, tables: dict,
                             params: SchemeParams, dist=None,
                             cap: int = BLOCK_CAP) -> InducedChannel:
    """Compose the relay tables with the network into an end-to-end
    deterministic broadcast channel on t1-blocks."""
    base = lay.base
    if lay.is_unfolded:
        raise ValueError("induced channel needs a native layered network")
    src_alpha = transmit_alphabet(lay, base.source)
    src_probs = np.asarray(dist[base.source], dtype=float) if dist and base.source in dist \
        else np.full(len(src_alpha), 1.0 / len(src_alpha))
    n_blocks = len(src_alpha) ** params.t1
    if n_blocks > cap:
        raise CapExceeded(f"{n_blocks} source blocks exceed cap {cap}")
    x_blocks = []
    x_probs = []
    node_order = tuple(v for v in base.nodes if v != base.source)
    node_blocks: dict = {v: [] for v in node_order}
    for picks in itertools.product(range(len(src_alpha)), repeat=params.t1):
        block = tuple(src_alpha[i] for i in picks)
        pr = float(np.prod([src_probs[i] for i in picks]))
        rec = propagate_block(lay, tables, block)
        x_blocks.append(block)
        x_probs.append(pr)
        for v in node_order:
            node_blocks[v].append(rec[v])
    frozen = {v: tuple(blocks) for v, blocks in node_blocks.items()}
    return InducedChannel(params.t1, tuple(base.bc_destinations),
                          tuple(base.mc_destinations), node_order,
                          tuple(x_blocks), np.asarray(x_probs),
                          MappingProxyType(frozen))


def deterministic_bc_channel(input_probs, output_maps, t1: int = 1,
                             mc_maps=(), cap: int = BLOCK_CAP) -> InducedChannel:
    """Wrap a bare deterministic broadcast channel as an induced channel.

    ``output_maps[i][x]`` is destination i's received symbol for input
    symbol x; ``mc_maps`` adds multicast observers the same way.  Blocks
    of ``t1`` symbols are formed componentwise.  Node ids are synthetic:
    source 0, then the private destinations, then the multicast ones.
    """
    probs = np.asarray(input_probs, dtype=float)
    if abs(probs.sum() - 1) > 1e-9 or probs.min() < 0:
        raise ValueError("input_probs must be a probability vector")
    n_in = len(probs)
    maps = [tuple(m) for m in output_maps] + [tuple(m) for m in mc_maps]
    if any(len(m) != n_in for m in maps):
        raise ValueError("every output map needs one entry per input symbol")
    n_blocks = n_in ** t1
    if n_blocks > cap:
        raise CapExceeded(f"{n_blocks} source blocks exceed cap {cap}")
    bc_nodes = tuple(range(1, 1 + len(output_maps)))
    mc_nodes = tuple(range(1 + len(output_maps), 1 + len(maps)))
    x_blocks, x_probs = [], []
    node_blocks: dict = {v: [] for v in bc_nodes + mc_nodes}
    for block in itertools.product(range(n_in), repeat=t1):
        x_blocks.append(block)
        x_probs.append(float(np.prod([probs[s] for s in block])))
        for v, m in zip(bc_nodes + mc_nodes, maps):
            node_blocks[v].append(tuple(m[s] for s in block))
    frozen = {v: tuple(b) for v, b in node_blocks.items()}
    return InducedChannel(t1, bc_nodes, mc_nodes, bc_nodes + mc_nodes,
                          tuple(x_blocks), np.asarray(x_probs),
                          MappingProxyType(frozen))


@dataclass(frozen=True)
class PrunedSets:
    """Random per-node restrictions of the typical received sets.

    ``subset[v]`` is the sampled fraction S_v of node v's typical set;
    ``core[v]`` keeps the members of S_v that extend to a jointly
    typical all-node tuple whose every component also lies in the
    respective sampled set.
    """

    params: SchemeParams
    tables_by_node: MappingProxyType
    typical: MappingProxyType
    subset: MappingProxyType
    core: MappingProxyType
    profile_table: BlockTable
    profile_rows: np.ndarray
    profile_components: np.ndarray


def prune_sets(channel: InducedChannel, params: SchemeParams,
               rng: np.random.Generator, cap: int = typicality.SEQUENCE_CAP) -> PrunedSets:
    """Sample S_v as a ceil(|T| * 2^(-t1 t2 kappa)) uniform subset of every
    node's typical set and compute the jointly-extendable cores Z_v."""
    tables = {v: channel.block_table((v,)) for v in channel.node_order}
    frac = 2.0 ** (-params.t1 * params.t2 * params.kappa)
    typ: dict = {}
    sub: dict = {}
    for v in channel.node_order:
        seqs = typicality.typical_sequences(tables[v].probs, params.t2, params.delta, cap)
        if len(seqs) == 0:
            raise ValueError(f"node {v}: typical set empty at delta={params.delta}")
        size = math.ceil(len(seqs) * frac)
        picks = np.sort(rng.choice(len(seqs), size=size, replace=False))
        typ[v] = seqs
        sub[v] = {typicality.seq_tuple(seqs[i]) for i in picks}

    profile = channel.block_table(channel.node_order)
    if len(channel.node_order) == 1:
        comp = np.arange(len(profile.symbols), dtype=np.int64)[:, None]
    else:
        comp = _profile_components(channel, profile, tables)
    rows = typicality.typical_sequences(profile.probs, params.t2, params.delta, cap)
    keep = np.ones(len(rows), dtype=bool)
    for j, v in enumerate(channel.node_order):
        proj = comp[rows, j]
        member = np.fromiter(
            (typicality.seq_tuple(r) in sub[v] for r in proj), bool, len(rows))
        keep &= member
    kept = rows[keep]
    core = {
        v: {typicality.seq_tuple(r) for r in comp[kept, j]}
        for j, v in enumerate(channel.node_order)
    }
    return PrunedSets(params, MappingProxyType(tables), MappingProxyType(typ),
                      MappingProxyType(sub), MappingProxyType(core),
                      profile, kept, comp)


def _profile_components(channel: InducedChannel, profile: BlockTable,
                        node_tables: dict) -> np.ndarray:
    """Map every profile symbol to its per-node block-table indices."""
    return _components(profile, [node_tables[v] for v in channel.node_order])


@dataclass(frozen=True)
class MartonCodebook:
    """Binned source code for one level-2 block.

    ``joint_rows[r]`` is a jointly typical tuple as a sequence of joint
    symbols; ``dest_seqs[i][r]`` its projection onto destination i;
    ``x_rows[r]`` a source input sequence that reproduces it exactly.
    Bins partition each destination's binned set; the assignment is a
    stored uniform draw keyed by sequence so decoding is a pure lookup.
    """

    channel: InducedChannel
    params: SchemeParams
    rates: tuple[float, ...]
    num_bins: tuple[int, ...]
    dest_tables: tuple
    binned: tuple
    joint_rows: np.ndarray
    dest_seqs: tuple
    x_rows: np.ndarray
    bin_lookup: MappingProxyType
    pruned: PrunedSets | None = None

    @property
    def j_count(self) -> int:
        return len(self.channel.bc_nodes)

    def x_block_sequence(self, row: int) -> tuple:
        return tuple(self.channel.x_blocks[i] for i in self.x_rows[row])


def build_marton_codebook(channel: InducedChannel, params: SchemeParams,
                          rates, rng: np.random.Generator,
                          pruned: PrunedSets | None = None,
                          cap: int = typicality.SEQUENCE_CAP) -> MartonCodebook:
    """Bin the (possibly pruned) typical received sets and precompute the
    encoder's jointly-typical tuple index.

    The source map picks, per joint symbol, the lowest-index input block
    consistent with it; the channel being deterministic guarantees one
    exists, which makes every stored tuple exactly reproducible.
    """
    dests = channel.bc_nodes
    rates = tuple(float(r) for r in rates)
    if len(rates) != len(dests):
        raise ValueError("one rate per private destination required")
    dest_tables = tuple(channel.block_table((v,)) for v in dests)

    if pruned is None:
        joint_table = channel.block_table(dests) if len(dests) > 1 else dest_tables[0]
        joint_rows = typicality.typical_sequences(joint_table.probs, params.t2,
                                                  params.delta, cap)
        if len(dests) > 1:
            comp = _components(joint_table, dest_tables)
        else:
            comp = np.arange(len(joint_table.symbols), dtype=np.int64)[:, None]
        dest_pos = list(range(len(dests)))
        binned_sets = [
            {typicality.seq_tuple(r) for r in
             typicality.typical_sequences(dest_tables[i].probs, params.t2,
                                          params.delta, cap)}
            for i in range(len(dests))
        ]
    else:
        joint_table = pruned.profile_table
        joint_rows = pruned.profile_rows
        comp = pruned.profile_components
        dest_pos = [channel.node_order.index(v) for v in dests]
        binned_sets = [set(pruned.core[v]) for v in dests]
        for i, v in enumerate(dests):
            if not binned_sets[i]:
                raise ValueError(f"pruned core empty for destination {v}")

    dest_seqs = tuple(comp[joint_rows, dest_pos[i]] for i in range(len(dests)))

    # source map: lowest-index preimage per joint symbol
    preimage = np.full(len(joint_table.symbols), -1, dtype=np.int64)
    for xi in range(len(channel.x_blocks) - 1, -1, -1):
        preimage[joint_table.x_to_symbol[xi]] = xi
    x_rows = preimage[joint_rows]

    num_bins = tuple(max(1, int(math.floor(2 ** (params.t1 * params.t2 * r) + 1e-9)))
                     for r in rates)
    binned = []
    for i in range(len(dests)):
        members = sorted(binned_sets[i])
        if num_bins[i] > len(members):
            raise EncodingCapacityError(i, num_bins[i], len(members))
        assignment = {m: int(b) for m, b in
                      zip(members, rng.integers(0, num_bins[i], size=len(members)))}
        if len(set(assignment.values())) < num_bins[i]:
            raise EncodingCapacityError(i, num_bins[i], len(members))
        binned.append(assignment)

    lookup: dict = {}
    order = np.lexsort(joint_rows.T[::-1]) if len(joint_rows) else np.array([], dtype=int)
    for r in order:
        key = tuple(binned[i].get(typicality.seq_tuple(dest_seqs[i][r]), ERASURE)
                    for i in range(len(dests)))
        if ERASURE in key:
            continue
        lookup.setdefault(key, []).append(int(r))

    return MartonCodebook(channel, params, rates, num_bins, dest_tables,
                          tuple(binned), joint_rows, dest_seqs, x_rows,
                          MappingProxyType(lookup), pruned)


@dataclass(frozen=True)
class EncodeResult:
    x_blocks: tuple
    failed: bool
    row: int | None


def marton_encode(codebook: MartonCodebook, messages,
                  rng: np.random.Generator) -> EncodeResult:
    """Map a message tuple to an input sequence via the bin index.

    When no jointly typical tuple hits every message's bin, the source
    falls back to a random input sequence and the failure is surfaced
    (and later counted as an error)."""
    key = tuple(int(w) for w in messages)
    if len(key) != codebook.j_count:
        raise ValueError("one message per destination required")
    for i, w in enumerate(key):
        if not 0 <= w < codebook.num_bins[i]:
            raise ValueError(f"message {w} outside bin range of destination {i}")
    rows = codebook.bin_lookup.get(key)
    if rows:
        row = rows[0]
        return EncodeResult(codebook.x_block_sequence(row), False, row)
    picks = rng.choice(len(codebook.channel.x_blocks), size=codebook.params.t2,
                       p=codebook.channel.x_probs)
    return EncodeResult(tuple(codebook.channel.x_blocks[i] for i in picks), True, None)


def transmit(codebook: MartonCodebook, x_blocks: tuple) -> dict:
    """Deterministically push a level-2 input sequence through the induced
    channel; returns every tracked node's received block sequence."""
    index = {b: i for i, b in enumerate(codebook.channel.x_blocks)}
    rows = [index[b] for b in x_blocks]
    return {v: tuple(codebook.channel.node_blocks[v][r] for r in rows)
            for v in codebook.channel.node_order}


def marton_decode(codebook: MartonCodebook, dest_pos: int, received_blocks) -> int:
    """Bin index of the received level-2 block sequence, or ERASURE."""
    table = codebook.dest_tables[dest_pos]
    index = table.index
    try:
        key = tuple(index[b] for b in received_blocks)
    except KeyError:
        return ERASURE
    return codebook.binned[dest_pos].get(key, ERASURE)


def multicast_decode(codebook: MartonCodebook, mc_node: int, received_blocks,
                     cap: int = MESSAGE_CAP):
    """Typical-set decoding of the full message tuple at a multicast node.

    Sweeps the whole message space, re-encodes each tuple and tests the
    (input, received) pair for joint typicality; anything but a unique
    hit is an erasure."""
    total = math.prod(codebook.num_bins)
    if total > cap:
        raise CapExceeded(f"message space {total} exceeds cap {cap}")
    mc_table = codebook.channel.block_table((mc_node,))
    index = mc_table.index
    try:
        y_idx = np.array([index[b] for b in received_blocks], dtype=np.int64)
    except KeyError:
        return ERASURE
    n_x = len(codebook.channel.x_blocks)
    joint = np.zeros((n_x, len(mc_table.symbols)))
    np.add.at(joint, (np.arange(n_x), mc_table.x_to_symbol), codebook.channel.x_probs)

    hit = None
    for combo in itertools.product(*(range(b) for b in codebook.num_bins)):
        rows = codebook.bin_lookup.get(combo)
        if not rows:
            continue
        x_idx = codebook.x_rows[rows[0]]
        if typicality.jointly_typical(x_idx, y_idx, joint, codebook.params.delta):
            if hit is not None and hit != combo:
                return ERASURE
            hit = combo
    return hit if hit is not None else ERASURE


def verify_consistency(codebook: MartonCodebook) -> bool:
    """Push every stored input sequence through the channel and confirm it
    reproduces the stored destination components exactly."""
    ch = codebook.channel
    for r in range(len(codebook.joint_rows)):
        x_idx = codebook.x_rows[r]
        for i, v in enumerate(ch.bc_nodes):
            got = tuple(ch.node_blocks[v][xi] for xi in x_idx)
            want = tuple(codebook.dest_tables[i].symbols[s]
                         for s in codebook.dest_seqs[i][r])
            if got != want:
                return False
    return True


def subset_entropy(channel: InducedChannel, nodes) -> float:
    """H of the joint received block of ``nodes``, in bits per block."""
    return channel.block_table(tuple(nodes)).entropy()


def greedy_rates(channel: InducedChannel, weights=None) -> tuple[float, ...]:
    """Vertex of the per-block entropy polymatroid maximizing the weighted
    rate sum: destinations are admitted in weight order (ties by index)
    and each receives its marginal entropy gain, per channel use."""
    dests = channel.bc_nodes
    j = len(dests)
    w = tuple(float(x) for x in (weights if weights is not None else (1.0,) * j))
    order = sorted(range(j), key=lambda i: (-w[i], i))
    rates = [0.0] * j
    taken: list[int] = []
    prev = 0.0
    for i in order:
        taken.append(dests[i])
        h = subset_entropy(channel, sorted(taken)) / channel.t1
        rates[i] = max(0.0, h - prev)
        prev = h
    return tuple(rates)


def _subset_entropies(channel: InducedChannel) -> dict:
    dests = channel.bc_nodes
    out = {}
    for r in range(1, len(dests) + 1):
        for subset in itertools.combinations(range(len(dests)), r):
            nodes = tuple(dests[i] for i in subset)
            out[subset] = subset_entropy(channel, nodes) / channel.t1
    return out


def level3_run(lay: LayeredNetwork, params: SchemeParams, seed: int,
               dist=None, weights=None, margin: float = 0.7,
               trials_per_block: int = 50) -> dict:
    """Run t3 level-2 blocks with freshly drawn relay tables.

    Per block: tabulate the induced channel, admit rates at ``margin``
    times the weighted polymatroid vertex, build the codebook and push
    random messages end to end.  Erasures count as errors.  The report
    is a plain dict ready for JSON emission.
    """
    blocks = []
    agg_err = 0
    agg_trials = 0
    sum_rates = None
    for t3 in range(params.t3):
        rng = np.random.default_rng([seed, t3])
        tables = sample_relay_tables(lay, params, rng, dist)
        channel = induce_broadcast_channel(lay, tables, params, dist)
        ent = _subset_entropies(channel)
        rates = tuple(margin * r for r in greedy_rates(channel, weights))
        codebook = build_marton_codebook(channel, params, rates, rng)
        fails = 0
        errors = [0] * len(channel.bc_nodes)
        for _ in range(trials_per_block):
            msgs = tuple(int(rng.integers(0, b)) for b in codebook.num_bins)
            enc = marton_encode(codebook, msgs, rng)
            if enc.failed:
                fails += 1
            rec = transmit(codebook, enc.x_blocks)
            for i, v in enumerate(channel.bc_nodes):
                if marton_decode(codebook, i, rec[v]) != msgs[i]:
                    errors[i] += 1
        blocks.append({
            "block": t3,
            "entropy_bits": {"+".join(map(str, k)): v for k, v in ent.items()},
            "rates": list(rates),
            "num_bins": list(codebook.num_bins),
            "encoding_failures": fails,
            "decode_errors": errors,
            "trials": trials_per_block,
        })
        agg_err += sum(errors)
        agg_trials += trials_per_block * len(channel.bc_nodes)
        sum_rates = rates if sum_rates is None else tuple(a + b for a, b in zip(sum_rates, rates))
    return {
        "per_block": blocks,
        "aggregate": {
            "mean_rates": [r / params.t3 for r in sum_rates],
            "message_error_rate": agg_err / agg_trials if agg_trials else 0.0,
        },
    }


def best_fixed_mapping(lay: LayeredNetwork, params: SchemeParams, seed: int,
                       weights=None, dist=None) -> tuple[int, list[float]]:
    """Index of the level-2 block whose relay tables maximize the weighted
    rate sum (ties to the lowest index); repetition over blocks is only a
    proof device, so the best single mapping can be used throughout."""
    dests_weights = weights
    values = []
    for t3 in range(params.t3):
        rng = np.random.default_rng([seed, t3])
        tables = sample_relay_tables(lay, params, rng, dist)
        channel = induce_broadcast_channel(lay, tables, params, dist)
        rates = greedy_rates(channel, dests_weights)
        w = dests_weights if dests_weights is not None else (1.0,) * len(rates)
        values.append(float(sum(a * b for a, b in zip(w, rates))))
    best = max(range(len(values)), key=lambda i: (values[i], -i))
    return best, values
