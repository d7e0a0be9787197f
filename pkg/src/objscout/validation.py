"""Input and parameter validation helpers."""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np

from .exceptions import ConfigError
from .geometry import Frame


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def check_params(
    *,
    window: int,
    keep_max: int,
    nms_iou: float,
    gate: float,
    path_weight: float,
    ncc_peak_gate: float,
    passes: int,
    pre_nms_cap: int,
    min_component_area: int,
) -> None:
    """Validate run parameters, naming the offending field on failure."""
    _require(isinstance(window, int) and window >= 2, f"window must be an integer >= 2, got {window!r}")
    _require(isinstance(keep_max, int) and keep_max >= 1, f"keep_max must be an integer >= 1, got {keep_max!r}")
    _require(0.0 < nms_iou < 1.0, f"nms_iou must lie in (0, 1), got {nms_iou!r}")
    _require(-1.0 <= gate <= 1.0, f"gate must lie in [-1, 1], got {gate!r}")
    _require(path_weight >= 0.0, f"path_weight must be >= 0, got {path_weight!r}")
    _require(-1.0 <= ncc_peak_gate <= 1.0, f"ncc_peak_gate must lie in [-1, 1], got {ncc_peak_gate!r}")
    _require(isinstance(passes, int) and passes >= 1, f"passes must be an integer >= 1, got {passes!r}")
    _require(isinstance(pre_nms_cap, int) and pre_nms_cap >= 1, f"pre_nms_cap must be an integer >= 1, got {pre_nms_cap!r}")
    _require(
        isinstance(min_component_area, int) and min_component_area >= 1,
        f"min_component_area must be an integer >= 1, got {min_component_area!r}",
    )


def as_frames(X: Iterable) -> Iterator[Frame]:
    """Coerce an iterable of frames or (h, w, 3) arrays into Frame values."""
    for i, item in enumerate(X):
        if isinstance(item, Frame):
            yield item
        else:
            yield Frame.from_rgb(np.asarray(item), i)
