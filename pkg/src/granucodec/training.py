"""Codebook training over an image corpus.

k-means runs on feature cells pooled from all three pyramid scales; the
usage-frequency pass then replays the real encoding path (entropy map,
granularity plan, masked quantization) so the statistics match what
encoding will actually emit.
"""

from __future__ import annotations

import numpy as np

from . import granularity, vq
from .analysis import AnalysisTransform, DEFAULT_TRANSFORM
from .imaging import ImagePlane
from .spatial_entropy import EntropyConfig, entropy_map
from .vq import Codebook, FrequencyTable

# Default allocation used while gathering usage statistics.
DEFAULT_FREQ_RATIOS = granularity.RatioTriple(0.5, 0.4, 0.1)


def corpus_cells(images: list[ImagePlane],
                 transform: AnalysisTransform = DEFAULT_TRANSFORM) -> np.ndarray:
    """All pyramid cells of all images, as one (n, d) array."""
    parts = []
    for img in images:
        for grid in transform.pyramid(img):
            parts.append(grid.reshape(-1, grid.shape[-1]))
    return np.concatenate(parts, axis=0)


def train_codebook(images: list[ImagePlane], k: int = 1024, seed: int = 0,
                   iters: int = 25, max_samples: int | None = 200_000,
                   freq_ratios: granularity.RatioTriple = DEFAULT_FREQ_RATIOS,
                   entropy_cfg: EntropyConfig = EntropyConfig(),
                   transform: AnalysisTransform = DEFAULT_TRANSFORM,
                   ) -> tuple[Codebook, FrequencyTable]:
    """Train a codebook and its finalized usage-frequency table."""
    cells = corpus_cells(images, transform)
    if max_samples is not None and cells.shape[0] > max_samples:
        rng = np.random.default_rng(seed)
        pick = rng.choice(cells.shape[0], size=max_samples, replace=False)
        sample = cells[np.sort(pick)]
    else:
        sample = cells
    cb = vq.train_codebook(sample, k=k, iters=iters, seed=seed)

    tbl = FrequencyTable.zeros(k)
    for img in images:
        emap = entropy_map(img, entropy_cfg)
        gmap = granularity.plan_granularity(emap, freq_ratios)
        masks = granularity.masks_from_map(gmap)
        for grid, mask in zip(transform.pyramid(img),
                              (masks.m1, masks.m2, masks.m3)):
            idx, _ = vq.quantize(grid[mask.astype(bool)], cb)
            vq.accumulate_frequencies(idx, tbl)
    return cb, vq.finalize_frequencies(tbl)
