"""Mamdani fuzzy inference and the adaptive gain tuner.

Two MISO fuzzy systems retune the backstepping gains online to suppress
the large commands an aggressively-tuned controller emits while the
tracking errors are still large:

  * system 1: inputs (ex_hat, etheta_hat rate) -> k1
  * system 2: inputs (etheta_hat - ey_hat and its rate) -> k2 = k3

Inference is standard Mamdani: min for rule AND, max aggregation over
fired rules, centroid defuzzification over a discretized output
universe.  Outputs are clamped to [kappa_min, kappa_max] with
kappa_min > 0, so the tuned gains always satisfy the positivity the
stability argument requires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .formation import LocalError, LocalErrorRate

__all__ = [
    "INPUT_LABELS",
    "OUTPUT_LABELS",
    "DEFAULT_RULES",
    "Trapezoid",
    "MembershipFunctionSet",
    "RuleTable",
    "triangular_partition",
    "default_input_set",
    "default_output_set",
    "fuzzify",
    "infer_defuzzify",
    "GainTuner",
]

INPUT_LABELS = ("nb", "ns", "z", "ps", "pb")
OUTPUT_LABELS = ("z", "ps", "pm", "pb", "pvb")

DEFAULT_ERROR_SCALE = 0.2
DEFAULT_RATE_SCALE = 10.0
DEFAULT_KAPPA_MIN = 0.1
DEFAULT_KAPPA_MAX = 5.0
DEFAULT_RESOLUTION = 401


@njit(cache=True)
def _trap(x, a, b, c, d):
    if x < a or x > d:
        return 0.0
    if x < b:
        return (x - a) / (b - a)
    if x <= c:
        return 1.0
    if x < d:
        return (d - x) / (d - c)
    return 0.0


@njit(cache=True)
def _infer_kernel(
    e, edot,
    e_shapes, e_lo, e_hi,
    ed_shapes, ed_lo, ed_hi,
    rules, out_grid, out_matrix,
    kappa_min, kappa_max,
):
    ex = min(max(e, e_lo), e_hi)
    ed = min(max(edot, ed_lo), ed_hi)
    de = np.empty(5)
    dd = np.empty(5)
    for i in range(5):
        de[i] = _trap(ex, e_shapes[i, 0], e_shapes[i, 1], e_shapes[i, 2], e_shapes[i, 3])
        dd[i] = _trap(ed, ed_shapes[i, 0], ed_shapes[i, 1], ed_shapes[i, 2], ed_shapes[i, 3])
    strength = np.zeros(5)
    for i in range(5):
        if de[i] <= 0.0:
            continue
        for j in range(5):
            w = min(de[i], dd[j])
            k = rules[i, j]
            if w > strength[k]:
                strength[k] = w
    num = 0.0
    den = 0.0
    for m in range(out_grid.shape[0]):
        mu = 0.0
        for k in range(5):
            v = out_matrix[k, m]
            if strength[k] < v:
                v = strength[k]
            if v > mu:
                mu = v
        num += out_grid[m] * mu
        den += mu
    if den <= 0.0:
        return kappa_min
    y = num / den
    return min(max(y, kappa_min), kappa_max)


@dataclass(frozen=True)
class Trapezoid:
    """Piecewise-linear membership shape; a == b or c == d gives a shoulder."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a <= self.b <= self.c <= self.d):
            raise ValueError(f"trapezoid nodes must be sorted: {self}")

    def __call__(self, x: float) -> float:
        return _trap(float(x), self.a, self.b, self.c, self.d)

    @property
    def peak(self) -> float:
        return 0.5 * (self.b + self.c)


@dataclass(frozen=True)
class MembershipFunctionSet:
    """Ordered, completely-covering label partition of a universe [lo, hi]."""

    labels: tuple[str, ...]
    shapes: tuple[Trapezoid, ...]
    lo: float
    hi: float

    def __post_init__(self):
        if len(self.labels) != len(self.shapes):
            raise ValueError("labels and shapes must have equal length")
        if not self.lo < self.hi:
            raise ValueError(f"empty universe [{self.lo}, {self.hi}]")
        peaks = [s.peak for s in self.shapes]
        if any(q <= p for p, q in zip(peaks, peaks[1:])):
            raise ValueError(f"label peaks must be strictly increasing, got {peaks}")
        grid = np.linspace(self.lo, self.hi, 1001)
        cover = np.zeros_like(grid)
        for s in self.shapes:
            cover = np.maximum(cover, [s(x) for x in grid])
        if not (cover > 0.0).all():
            raise ValueError("membership functions do not cover the universe")

    def as_array(self) -> np.ndarray:
        return np.array([[s.a, s.b, s.c, s.d] for s in self.shapes], dtype=float)

    def sampled(self, resolution: int) -> tuple[np.ndarray, np.ndarray]:
        """Output grid and per-label membership matrix for defuzzification."""
        grid = np.linspace(self.lo, self.hi, resolution)
        matrix = np.array([[s(x) for x in grid] for s in self.shapes], dtype=float)
        return grid, matrix


def triangular_partition(
    labels: Sequence[str], peaks: Sequence[float], lo: float, hi: float
) -> MembershipFunctionSet:
    """Triangles between adjacent peaks with saturating shoulders at the ends."""
    peaks = [float(p) for p in peaks]
    if len(labels) != len(peaks):
        raise ValueError("labels and peaks must have equal length")
    shapes = []
    for i, p in enumerate(peaks):
        left = peaks[i - 1] if i > 0 else lo
        right = peaks[i + 1] if i + 1 < len(peaks) else hi
        a = left if i > 0 else min(lo, p)
        d = right if i + 1 < len(peaks) else max(hi, p)
        shapes.append(Trapezoid(a, p, p, d))
    return MembershipFunctionSet(tuple(labels), tuple(shapes), lo, hi)


def default_input_set() -> MembershipFunctionSet:
    """Five symmetric labels with peaks at -1, -0.5, 0, 0.5, 1 on [-1, 1]."""
    return triangular_partition(INPUT_LABELS, (-1.0, -0.5, 0.0, 0.5, 1.0), -1.0, 1.0)


def default_output_set(kappa_max: float = DEFAULT_KAPPA_MAX) -> MembershipFunctionSet:
    """Five labels with peaks evenly spread over [0, kappa_max]."""
    g = float(kappa_max)
    peaks = (0.0, 0.25 * g, 0.5 * g, 0.75 * g, g)
    return triangular_partition(OUTPUT_LABELS, peaks, 0.0, g)


# Rule grid keyed (error label, error-rate label).  Monotone in both inputs.
DEFAULT_RULES: dict[tuple[str, str], str] = {}
_GRID_ROWS_BY_EDOT = {
    "nb": ("z", "z", "ps", "ps", "pm"),
    "ns": ("z", "ps", "ps", "pm", "pm"),
    "z": ("z", "ps", "ps", "pm", "pb"),
    "ps": ("z", "pm", "pb", "pb", "pvb"),
    "pb": ("pm", "pb", "pb", "pvb", "pvb"),
}
for _edot, _row in _GRID_ROWS_BY_EDOT.items():
    for _e, _out in zip(INPUT_LABELS, _row):
        DEFAULT_RULES[(_e, _edot)] = _out


@dataclass(frozen=True)
class RuleTable:
    """Total 5x5 rule grid (error, error-rate) -> output label.

    The grid must be monotone: increasing either input label never
    decreases the output label's rank.
    """

    grid: Mapping[tuple[str, str], str] = field(default_factory=lambda: dict(DEFAULT_RULES))

    def __post_init__(self):
        rank = {label: i for i, label in enumerate(OUTPUT_LABELS)}
        for e in INPUT_LABELS:
            for edot in INPUT_LABELS:
                out = self.grid.get((e, edot))
                if out is None:
                    raise ValueError(f"rule table is not total: missing ({e}, {edot})")
                if out not in rank:
                    raise ValueError(f"unknown output label {out!r} at ({e}, {edot})")
        for a, b in zip(INPUT_LABELS, INPUT_LABELS[1:]):
            for other in INPUT_LABELS:
                if rank[self.grid[(a, other)]] > rank[self.grid[(b, other)]]:
                    raise ValueError(f"rule table not monotone in error at ({a}->{b}, {other})")
                if rank[self.grid[(other, a)]] > rank[self.grid[(other, b)]]:
                    raise ValueError(
                        f"rule table not monotone in error rate at ({other}, {a}->{b})"
                    )

    def as_array(self) -> np.ndarray:
        rank = {label: i for i, label in enumerate(OUTPUT_LABELS)}
        out = np.empty((5, 5), dtype=np.int64)
        for i, e in enumerate(INPUT_LABELS):
            for j, edot in enumerate(INPUT_LABELS):
                out[i, j] = rank[self.grid[(e, edot)]]
        return out


def fuzzify(x: float, mfs: MembershipFunctionSet) -> dict[str, float]:
    """Membership degree per label; x is clamped to the universe first."""
    x = min(max(float(x), mfs.lo), mfs.hi)
    return {label: shape(x) for label, shape in zip(mfs.labels, mfs.shapes)}


def infer_defuzzify(
    e: float,
    edot: float,
    rules: RuleTable,
    e_mfs: MembershipFunctionSet,
    edot_mfs: MembershipFunctionSet,
    out_mfs: MembershipFunctionSet,
    kappa_min: float = DEFAULT_KAPPA_MIN,
    kappa_max: float = DEFAULT_KAPPA_MAX,
    resolution: int = DEFAULT_RESOLUTION,
) -> float:
    """Run one Mamdani inference and return the clamped crisp output."""
    if not kappa_min > 0.0:
        raise ValueError(f"kappa_min must be > 0, got {kappa_min}")
    grid, matrix = out_mfs.sampled(resolution)
    return float(
        _infer_kernel(
            float(e),
            float(edot),
            e_mfs.as_array(),
            e_mfs.lo,
            e_mfs.hi,
            edot_mfs.as_array(),
            edot_mfs.lo,
            edot_mfs.hi,
            rules.as_array(),
            grid,
            matrix,
            float(kappa_min),
            float(kappa_max),
        )
    )


class GainTuner:
    """Two-system adaptive gain tuner producing (k1, k2, k3) with k2 == k3.

    Raw errors are divided by the configured scale factors and clamped to
    the input universe before fuzzification.  `pair_ex_with_ex_rate`
    switches system 1's second input from the heading-error rate to the
    longitudinal-error rate (for comparison runs; off by default).
    """

    def __init__(
        self,
        rules: RuleTable | None = None,
        error_mfs: MembershipFunctionSet | None = None,
        rate_mfs: MembershipFunctionSet | None = None,
        output_mfs: MembershipFunctionSet | None = None,
        error_scale: float = DEFAULT_ERROR_SCALE,
        rate_scale: float = DEFAULT_RATE_SCALE,
        kappa_min: float = DEFAULT_KAPPA_MIN,
        kappa_max: float = DEFAULT_KAPPA_MAX,
        resolution: int = DEFAULT_RESOLUTION,
        pair_ex_with_ex_rate: bool = False,
    ):
        if not error_scale > 0.0 or not rate_scale > 0.0:
            raise ValueError("scale factors must be positive")
        if not 0.0 < kappa_min <= kappa_max:
            raise ValueError("need 0 < kappa_min <= kappa_max")
        self.rules = rules if rules is not None else RuleTable()
        self.error_mfs = error_mfs if error_mfs is not None else default_input_set()
        self.rate_mfs = rate_mfs if rate_mfs is not None else default_input_set()
        self.output_mfs = output_mfs if output_mfs is not None else default_output_set(kappa_max)
        self.error_scale = float(error_scale)
        self.rate_scale = float(rate_scale)
        self.kappa_min = float(kappa_min)
        self.kappa_max = float(kappa_max)
        self.resolution = int(resolution)
        self.pair_ex_with_ex_rate = bool(pair_ex_with_ex_rate)
        # frozen arrays shared with the simulation kernels
        self.e_shapes = self.error_mfs.as_array()
        self.r_shapes = self.rate_mfs.as_array()
        self.rule_array = self.rules.as_array()
        self.out_grid, self.out_matrix = self.output_mfs.sampled(self.resolution)

    def _infer(self, e: float, edot: float) -> float:
        return float(
            _infer_kernel(
                e,
                edot,
                self.e_shapes,
                self.error_mfs.lo,
                self.error_mfs.hi,
                self.r_shapes,
                self.rate_mfs.lo,
                self.rate_mfs.hi,
                self.rule_array,
                self.out_grid,
                self.out_matrix,
                self.kappa_min,
                self.kappa_max,
            )
        )

    def tune_gains(
        self, e_hat: LocalError, e_hat_rate: LocalErrorRate
    ) -> tuple[float, float, float]:
        if self.pair_ex_with_ex_rate:
            rate_1 = e_hat_rate.ex_hat_rate
        else:
            rate_1 = e_hat_rate.etheta_hat_rate
        k1 = self._infer(e_hat.ex_hat / self.error_scale, rate_1 / self.rate_scale)
        e_yth = e_hat.etheta_hat - e_hat.ey_hat
        e_yth_rate = e_hat_rate.etheta_hat_rate - e_hat_rate.ey_hat_rate
        k2 = self._infer(e_yth / self.error_scale, e_yth_rate / self.rate_scale)
        return (k1, k2, k2)
