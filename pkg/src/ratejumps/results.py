"""Result carriers and error metrics shared by the engines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class PriceResult:
    """Values of one engine at time zero on its grid, plus bookkeeping.

    `errors` holds named scalar error metrics filled in by the runner when a
    reference engine is available.
    """

    method: str
    xs: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)


def roi_mask(xs: np.ndarray, x_min: float, x_max: float, tol: float = 1e-9) -> np.ndarray:
    """Boolean mask of the nodes inside the region of interest."""
    return (xs >= x_min - tol) & (xs <= x_max + tol)


def mean_abs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean(np.abs(np.asarray(a) - np.asarray(b))))


class MaxInTimeError:
    """Maximum over time of the mean over region-of-interest nodes of the
    absolute difference against a reference surface.

    Feed it every computed time level of a sweep; `worst` then holds the
    reported error and `worst_t` the level where it occurred.
    """

    def __init__(self, reference: Callable[[float, np.ndarray], np.ndarray],
                 xs: np.ndarray, x_min: float, x_max: float):
        self.reference = reference
        self.mask = roi_mask(xs, x_min, x_max)
        self.roi_xs = xs[self.mask]
        self.worst = 0.0
        self.worst_t = None
        self.levels = 0

    def update(self, t: float, vals: np.ndarray) -> None:
        err = mean_abs(vals[self.mask], self.reference(t, self.roi_xs))
        self.levels += 1
        if err > self.worst:
            self.worst = err
            self.worst_t = t
