"""Discrete superposition approximation of a Gaussian network.

Inputs live on a finite complex grid inside the unit power box
[-1/2, 1/2) per real axis; the channel superposes the scaled inputs and
rounds each real axis to the nearest integer, ties away from zero.  The
channel is exactly deterministic: identical inputs give identical
outputs on every platform, since only float multiply-add and a fixed
rounding rule are involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .network import GaussianNetwork

GRID_BITS_CAP = 4


def round_half_away(x: float) -> float:
    """Nearest integer with half-away-from-zero ties, elementwise-safe."""
    return math.copysign(math.floor(abs(x) + 0.5), x) if x else 0.0


def round_complex(z: complex) -> complex:
    """Round both real axes to the nearest Gaussian integer."""
    return complex(round_half_away(z.real), round_half_away(z.imag))


def symmetric_grid(bits: int) -> tuple[complex, ...]:
    """2**(2*bits) complex points: a symmetric 2**bits grid per real axis
    spanning [-1/2, 1/2)."""
    if bits < 1:
        raise ValueError("grid resolution must be at least 1 bit")
    step = 2.0 ** -bits
    axis = [(i + 0.5) * step - 0.5 for i in range(1 << bits)]
    return tuple(complex(re, im) for re in axis for im in axis)


@dataclass(frozen=True)
class DSNetwork:
    """Discrete superposition network derived from a Gaussian network.

    ``alphabets[v]`` is node v's finite transmit alphabet.  The default
    construction uses the symmetric grid, but any finite alphabet inside
    the power box is accepted, which is how toy fixtures restrict the
    support.
    """

    base: GaussianNetwork
    bits: int
    alphabets: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    def __post_init__(self):
        alph = {int(v): tuple(map(complex, a)) for v, a in dict(self.alphabets).items()}
        for v in self.base.nodes:
            if v not in alph:
                raise ValueError(f"node {v} missing an input alphabet")
        object.__setattr__(self, "alphabets", MappingProxyType(alph))

    @property
    def num_nodes(self) -> int:
        return self.base.num_nodes

    @property
    def bc_destinations(self):
        return self.base.bc_destinations

    @property
    def mc_destinations(self):
        return self.base.mc_destinations

    @property
    def destinations(self):
        return self.base.destinations

    @property
    def source(self) -> int:
        return self.base.source

    @property
    def gains(self):
        return self.base.gains

    @property
    def kind(self) -> str:
        return "dsn"

    def output_bound(self) -> int:
        """Per-axis magnitude bound on any received value: ceil of the
        largest incoming absolute-gain sum."""
        worst = 0.0
        for l in self.base.nodes:
            s = sum(abs(complex(g[0, 0])) for (k, ll), g in self.base.gains.items() if ll == l)
            worst = max(worst, s)
        return math.ceil(worst)


def default_grid_bits(net: GaussianNetwork, cap: int = GRID_BITS_CAP) -> int:
    """ceil(log2(1 + max incoming absolute-gain sum)), capped for desk scale."""
    worst = 0.0
    for l in net.nodes:
        s = sum(abs(complex(g[0, 0])) for (k, ll), g in net.gains.items() if ll == l)
        worst = max(worst, s)
    return max(1, min(cap, math.ceil(math.log2(1 + worst)) if worst else 1))


def derive_dsn(net: GaussianNetwork, bits: int | None = None,
               support=None) -> DSNetwork:
    """Build the DSN for ``net`` with a 2**bits-per-axis input grid.

    ``support`` optionally restricts every node's alphabet to the given
    points (must lie on the grid's power box); it keeps toy instances
    exhaustively enumerable.
    """
    if any(a != 1 for a in net.antennas):
        raise ValueError("DSN derivation supports single-antenna networks only")
    if bits is None:
        bits = default_grid_bits(net)
    if bits < 1:
        raise ValueError("grid resolution must be at least 1 bit")
    grid = symmetric_grid(bits)
    if support is not None:
        pts = tuple(map(complex, support))
        for z in pts:
            if not (-0.5 <= z.real < 0.5 and -0.5 <= z.imag < 0.5):
                raise ValueError(f"support point {z} outside [-1/2, 1/2)^2")
        grid = pts
    alph = {v: grid for v in net.nodes}
    return DSNetwork(net, bits, MappingProxyType(alph))


def input_distribution(dsn: DSNetwork, dist=None) -> dict:
    """Normalize a product input distribution: node -> probability vector.

    ``dist`` may be None (uniform everywhere) or a mapping from node to a
    probability vector over that node's alphabet.
    """
    out = {}
    for v in range(dsn.num_nodes):
        size = len(dsn.alphabets[v])
        if dist is None or v not in dist:
            out[v] = np.full(size, 1.0 / size)
        else:
            p = np.asarray(dist[v], dtype=float)
            if p.shape != (size,) or p.min() < 0 or abs(p.sum() - 1) > 1e-9:
                raise ValueError(f"invalid distribution for node {v}")
            out[v] = p
    return out


def received_value(dsn: DSNetwork, x, l: int) -> complex:
    """Rounded superposition at node l for the full input vector x."""
    s = 0j
    for (k, ll), g in dsn.base.gains.items():
        if ll == l and k != l:
            s += complex(g[0, 0]) * x[k]
    return round_complex(s)


def dsn_channel_step(dsn: DSNetwork, inputs) -> dict:
    """One deterministic channel use: every node's rounded received value.

    ``inputs`` maps node -> alphabet point; every value must be a member
    of that node's alphabet.
    """
    x = {}
    for v in range(dsn.num_nodes):
        val = complex(inputs[v])
        if not any(abs(val - a) < 1e-12 for a in dsn.alphabets[v]):
            raise ValueError(f"input {val} not in node {v}'s alphabet")
        x[v] = val
    return {l: received_value(dsn, x, l) for l in range(dsn.num_nodes)}


def gaussian_channel_step(net: GaussianNetwork, inputs, rng: np.random.Generator,
                          noise_scale: float = 1.0) -> dict:
    """One Gaussian channel use: superposition plus unit-variance circularly
    symmetric noise.  ``noise_scale`` exists only so test harnesses can run
    the channel noiselessly."""
    if any(a != 1 for a in net.antennas):
        raise ValueError("scalar channel step supports single-antenna networks only")
    out = {}
    for l in net.nodes:
        s = 0j
        for (k, ll), g in net.gains.items():
            if ll == l and k != l:
                s += complex(g[0, 0]) * complex(inputs[k])
        noise = (rng.standard_normal() + 1j * rng.standard_normal()) * math.sqrt(0.5)
        out[l] = s + noise_scale * noise
    return out
