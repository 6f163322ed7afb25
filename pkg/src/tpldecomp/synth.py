"""Random track-based layouts for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .geometry import Feature, LayoutSpec, Rect, validate_layout


def random_layout(seed: int = 0, n_features: int = 8, tracks: int = 4, length: int = 1200,
                  w_min: int = 20, s_min: int = 20, pitch: int | None = None,
                  jog_prob: float = 0.2, min_len: int = 150, max_len: int = 700) -> LayoutSpec:
    """Horizontal wires on tightly spaced tracks, some with a vertical jog onto the next track.

    With the default pitch (w_min + s_min) wires two tracks apart are still
    inside the coloring distance, which gives dense, K4-rich conflict graphs.
    """
    rng = np.random.default_rng(seed)
    pitch = pitch or (w_min + s_min)
    feats = []
    occupied = {t: [] for t in range(tracks)}

    def free(t, x0, x1):
        return all(x1 + s_min <= a or b + s_min <= x0 for a, b in occupied[t])

    attempts = 0
    while len(feats) < n_features and attempts < 50 * n_features:
        attempts += 1
        t = int(rng.integers(0, tracks))
        L = int(rng.integers(min_len, max_len + 1))
        x0 = int(rng.integers(0, max(1, length - L)))
        x1 = x0 + L
        y0 = t * pitch
        if not free(t, x0, x1):
            continue
        rects = [Rect(x0, y0, x1, y0 + w_min)]
        if rng.random() < jog_prob and t + 1 < tracks:
            xj = int(rng.integers(x0 + w_min, x1 - w_min))
            L2 = int(rng.integers(min_len // 2, max_len // 2 + 1))
            y1 = (t + 1) * pitch
            lo, hi = (xj, xj + L2) if rng.random() < 0.5 else (xj - L2, xj + w_min)
            lo, hi = max(0, lo), min(length, hi)
            if hi - lo > w_min and free(t + 1, lo, hi):
                rects.append(Rect(xj, y0, xj + w_min, y1 + w_min))
                rects.append(Rect(lo, y1, hi, y1 + w_min))
                occupied[t + 1].append((lo, hi))
        occupied[t].append((x0, x1))
        feats.append(Feature(f"f{len(feats)}", tuple(rects)))
    spec = LayoutSpec(units="nm", w_min=w_min, s_min=s_min, dis_m=None, features=tuple(feats))
    return validate_layout(spec)
