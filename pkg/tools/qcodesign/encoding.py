"""Bit allocation and the affine binary encoding of design vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .arrays import Bitstring, DesignVector, FloatArray
from .blackhole import SearchRegion
from .errors import LengthMismatch

ADAPTIVE = "adaptive"
FIXED = "fixed"
MIN_BITS = 2
MAX_BITS = 4


@dataclass(frozen=True)
class EncodingSettings:
    mode: str = ADAPTIVE
    fixed_bits: int = 3

    def __post_init__(self) -> None:
        if self.mode not in (ADAPTIVE, FIXED):
            raise ValueError(f"unknown encoding mode '{self.mode}'")
        if self.fixed_bits < 1:
            raise ValueError("fixed_bits must be at least 1")


@dataclass(frozen=True)
class BitAllocation:
    bits_per_param: Tuple[int, ...]

    @property
    def offsets(self) -> Tuple[int, ...]:
        return tuple(int(o) for o in np.concatenate([[0], np.cumsum(self.bits_per_param)[:-1]]))

    @property
    def n_total(self) -> int:
        return int(sum(self.bits_per_param))

    def substrings(self, b: Bitstring):
        for offset, n in zip(self.offsets, self.bits_per_param):
            yield b[offset:offset + n]


def allocate_bits(
    region: SearchRegion, thresholds: FloatArray, mode: str = ADAPTIVE, fixed_bits: int = 3
) -> BitAllocation:
    if mode == FIXED:
        return BitAllocation(tuple(fixed_bits for _ in range(region.n_params)))
    if mode != ADAPTIVE:
        raise ValueError(f"unknown encoding mode '{mode}'")
    bits = []
    for w, delta in zip(region.width, np.broadcast_to(thresholds, region.width.shape)):
        if w <= 0:
            bits.append(MIN_BITS)
            continue
        bits.append(min(MAX_BITS, max(MIN_BITS, math.ceil(math.log2(w / delta)))))
    return BitAllocation(tuple(bits))


def _levels(alloc: BitAllocation) -> FloatArray:
    return np.array([2 ** n - 1 for n in alloc.bits_per_param], dtype=float)


def decode(b: Bitstring, alloc: BitAllocation, region: SearchRegion) -> DesignVector:
    b = np.asarray(b)
    if b.shape != (alloc.n_total,):
        raise LengthMismatch(f"bitstring has {b.size} bits, allocation needs {alloc.n_total}")
    nu = np.array([int("".join(str(int(bit)) for bit in sub), 2) for sub in alloc.substrings(b)], dtype=float)
    values = region.lower + region.width * nu / _levels(alloc)
    return np.where(region.width > 0, region.clip(values), region.lower)


def encode_nearest(p: DesignVector, alloc: BitAllocation, region: SearchRegion) -> Bitstring:
    p = np.asarray(p, dtype=float)
    if p.shape != (region.n_params,):
        raise LengthMismatch(f"design has {p.size} entries, region has {region.n_params}")
    p = region.clip(p)
    levels = _levels(alloc)
    width = region.width
    out = []
    for j, n in enumerate(alloc.bits_per_param):
        if width[j] <= 0:
            nu = 0
        else:
            nu = int(np.floor((p[j] - region.lower[j]) * levels[j] / width[j] + 0.5))
        nu = min(max(nu, 0), 2 ** n - 1)
        out.extend(int(c) for c in format(nu, f"0{n}b"))
    return np.array(out, dtype=np.int8)


def index_to_bits(index: int, n: int) -> Bitstring:
    """Bitstring of a basis-state index; position 0 is the most significant bit."""
    return np.array([(index >> (n - 1 - r)) & 1 for r in range(n)], dtype=np.int8)


def bits_to_index(b: Bitstring) -> int:
    value = 0
    for bit in np.asarray(b):
        value = (value << 1) | int(bit)
    return value


def all_bitstrings(n: int) -> Bitstring:
    """Every bitstring of length ``n`` as rows, ordered by integer value."""
    idx = np.arange(2 ** n)
    shifts = np.arange(n - 1, -1, -1)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int8)
