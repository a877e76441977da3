"""Granularity planning and the closed-form rate model.

Blocks are sorted by spatial entropy (ascending, ties by raster index); the
lowest-entropy blocks become coarse, the next slice medium, the rest fine.
The theoretical bits-per-pixel of a ratio triple is

    bpp = L/256 * (16*r1 + 4*r2 + r3) + (4*r1 + r2)/256

with L the mean Huffman code length over the index alphabet. A query table
over the ratio simplex inverts this for target-bpp lookup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imaging import nn_upsample

FINE, MEDIUM, COARSE = 0, 1, 2
LABEL_NAMES = {FINE: "fine", MEDIUM: "medium", COARSE: "coarse"}

# Indices per 16x16 block at each granularity.
INDICES_PER_BLOCK = {FINE: 16, MEDIUM: 4, COARSE: 1}


@dataclass(frozen=True)
class RatioTriple:
    r1: float  # fine
    r2: float  # medium
    r3: float  # coarse

    def __post_init__(self):
        for r in (self.r1, self.r2, self.r3):
            if not -1e-9 <= r <= 1 + 1e-9:
                raise ValueError(f"ratio {r} outside [0, 1]")
        if abs(self.r1 + self.r2 + self.r3 - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {self}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r1, self.r2, self.r3)


@dataclass(frozen=True)
class MaskSet:
    """Binary masks at the three feature scales; a disjoint cover of the
    fine grid: m1 + up(m2, 2) + up(m3, 4) == 1 everywhere."""

    m1: np.ndarray  # (H/4,  W/4)  uint8
    m2: np.ndarray  # (H/8,  W/8)  uint8
    m3: np.ndarray  # (H/16, W/16) uint8


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def plan_granularity(entropy: np.ndarray, ratios: RatioTriple) -> np.ndarray:
    """Label each block FINE/MEDIUM/COARSE from its entropy rank."""
    flat = np.asarray(entropy, dtype=np.float64).ravel()
    n = flat.size
    order = np.argsort(flat, kind="stable")  # ties keep raster order
    n_coarse = min(_round_half_up(ratios.r3 * n), n)
    n_medium = min(_round_half_up(ratios.r2 * n), n - n_coarse)
    labels = np.full(n, FINE, dtype=np.uint8)
    labels[order[:n_coarse]] = COARSE
    labels[order[n_coarse:n_coarse + n_medium]] = MEDIUM
    return labels.reshape(entropy.shape)


def masks_from_map(gmap: np.ndarray) -> MaskSet:
    """Expand block labels into the per-scale binary masks."""
    gmap = np.asarray(gmap)
    return MaskSet(
        m1=nn_upsample((gmap == FINE).astype(np.uint8), 4),
        m2=nn_upsample((gmap == MEDIUM).astype(np.uint8), 2),
        m3=(gmap == COARSE).astype(np.uint8),
    )


def label_counts(gmap: np.ndarray) -> dict[int, int]:
    gmap = np.asarray(gmap)
    return {lbl: int((gmap == lbl).sum()) for lbl in (FINE, MEDIUM, COARSE)}


def map_ratios(gmap: np.ndarray) -> RatioTriple:
    """Actual block-count ratios of a granularity map."""
    counts = label_counts(gmap)
    n = np.asarray(gmap).size
    return RatioTriple(counts[FINE] / n, counts[MEDIUM] / n, counts[COARSE] / n)


def theoretical_bpp(ratios: RatioTriple, mean_code_len: float) -> float:
    """Closed-form bpp: index cost plus the mask-side accounting term."""
    if mean_code_len <= 0:
        raise ValueError("mean code length must be positive")
    r1, r2, r3 = ratios.as_tuple()
    indices = mean_code_len / 256.0 * (16.0 * r1 + 4.0 * r2 + r3)
    mask = (4.0 * r1 + r2) / 256.0
    return indices + mask


@dataclass(frozen=True)
class RateQueryTable:
    """Rows of (RatioTriple, theoretical bpp) sorted by bpp ascending."""

    rows: tuple[tuple[RatioTriple, float], ...]
    mean_code_len: float

    @property
    def min_bpp(self) -> float:
        return self.rows[0][1]

    @property
    def max_bpp(self) -> float:
        return self.rows[-1][1]


def build_rate_table(mean_code_len: float, step: float = 0.01) -> RateQueryTable:
    """Enumerate the ratio simplex at the given grid step."""
    if not 0.0 < step <= 0.5:
        raise ValueError("step must be in (0, 0.5]")
    n = round(1.0 / step)
    rows = []
    for i in range(n + 1):  # i/n = r1
        for j in range(n + 1 - i):  # j/n = r2
            r = RatioTriple(i / n, j / n, (n - i - j) / n)
            rows.append((r, theoretical_bpp(r, mean_code_len)))
    rows.sort(key=lambda row: row[1])
    return RateQueryTable(tuple(rows), mean_code_len)


def ratios_for_target(table: RateQueryTable, target_bpp: float) -> RatioTriple:
    """Closest-bpp row; ties resolved toward larger r1 (quality-favoring)."""
    best = min(table.rows, key=lambda row: (abs(row[1] - target_bpp), -row[0].r1))
    return best[0]
