"""Frequency-selective IRS reflection model.

Implements the varactor equivalent-circuit response of a reflecting element,
the partitioning of the capacitance axis into per-frequency tunable ranges,
and the simplified phase/service-selection reflection model used by the
optimizers.
"""

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class PartitionOverlapError(RuntimeError):
    """Raised when two frequencies' tunable capacitance ranges overlap too much."""


def wrap_phase(phi):
    """Map angles into the half-open interval (0, 2*pi], with 0 mapped to 2*pi."""
    out = np.mod(np.asarray(phi, dtype=float), TWO_PI)
    if out.ndim == 0:
        return TWO_PI if out == 0.0 else float(out)
    out[out == 0.0] = TWO_PI
    return out


@dataclass(frozen=True)
class CircuitParams:
    """Equivalent-circuit constants of a varactor-tuned reflecting element."""

    L1: float = 2.5e-9   # henries
    L2: float = 0.7e-9   # henries
    R: float = 1.0       # ohms
    Z0: float = 377.0    # free-space impedance, ohms

    def __post_init__(self):
        if self.L1 <= 0 or self.L2 <= 0:
            raise ValueError("inductances must be positive")
        if self.R < 0:
            raise ValueError("resistance must be nonnegative")
        if self.Z0 <= 0:
            raise ValueError("Z0 must be positive")


#: SMV1231-079 varactor constants used throughout the experiments.
DEFAULT_CIRCUIT = CircuitParams()

#: Three China Mobile 4G carriers used as the default frequency plan (hertz).
DEFAULT_FREQUENCIES = (2.605e9, 2.345e9, 1.885e9)


@dataclass(frozen=True)
class FrequencyPlan:
    """Strictly descending list of carrier frequencies, one per BS."""

    frequencies: tuple

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        object.__setattr__(self, "frequencies", freqs)
        if len(freqs) == 0:
            raise ValueError("frequency plan must be non-empty")
        if any(f <= 0 for f in freqs):
            raise ValueError("frequencies must be positive")
        if any(a <= b for a, b in zip(freqs, freqs[1:])):
            raise ValueError("frequencies must be strictly descending")

    def __len__(self):
        return len(self.frequencies)


def impedance(params, C, f):
    """Impedance Z(C, f) of a reflecting element (parallel L1 with L2-C-R branch)."""
    C = np.asarray(C, dtype=float)
    f = np.asarray(f, dtype=float)
    if np.any(C <= 0) or np.any(f <= 0):
        raise ValueError("capacitance and frequency must be positive")
    w = TWO_PI * f
    branch = 1j * w * params.L2 + 1.0 / (1j * w * C) + params.R
    shunt = 1j * w * params.L1
    return shunt * branch / (shunt + branch)


def reflection_coefficient(params, C, f):
    """Complex reflection coefficient theta(C, f) = (Z - Z0) / (Z + Z0)."""
    Z = impedance(params, C, f)
    denom = Z + params.Z0
    if np.any(np.abs(denom) < 1e-12):
        raise ArithmeticError("Z + Z0 nearly zero; reflection coefficient ill-defined")
    return (Z - params.Z0) / denom


@dataclass(frozen=True)
class CapacitancePartition:
    """Per-frequency tunable capacitance intervals plus the residual gray set.

    ``intervals[i]`` is the (lo, hi) range, in farads, serving
    ``frequencies[i]``; intervals are pairwise disjoint.  ``gray`` lists the
    leftover ranges of the sweep that serve no frequency.
    """

    frequencies: tuple
    intervals: tuple          # ((lo, hi), ...) aligned with frequencies
    gray: tuple               # ((lo, hi), ...)
    sweep_range: tuple        # (c_min, c_max)

    def __post_init__(self):
        for lo, hi in self.intervals:
            if not lo < hi:
                raise ValueError("empty capacitance interval")
        ordered = sorted(self.intervals)
        for (_, hi), (lo, _) in zip(ordered, ordered[1:]):
            if hi > lo:
                raise ValueError("capacitance intervals overlap")


def _phase_sweep(params, grid, f):
    """Unwrapped reflection phase over the capacitance grid at frequency f."""
    theta = reflection_coefficient(params, grid, f)
    return np.unwrap(np.angle(theta))


def _minimal_span_interval(grid, phase, frac=0.95):
    """Smallest grid window over which the phase covers >= frac of its range."""
    total = phase.max() - phase.min()
    target = frac * total
    best = (grid[0], grid[-1])
    best_width = np.inf
    j = 0
    n = len(grid)
    for i in range(n):
        if j < i:
            j = i
        while j < n - 1 and abs(phase[j] - phase[i]) < target:
            j += 1
        if abs(phase[j] - phase[i]) >= target:
            width = grid[j] - grid[i]
            if width < best_width:
                best_width = width
                best = (grid[i], grid[j])
        else:
            break
    return best


def partition_capacitance(params, plan, c_min=0.5e-12, c_max=6e-12, points=4096,
                          span_fraction=0.75, max_overlap=0.5):
    """Partition the capacitance sweep into per-frequency tunable intervals.

    For each carrier the minimal interval covering ``span_fraction`` of the
    total phase swing is located; raw intervals overlapping by more than
    ``max_overlap`` (relative to the narrower one) abort with
    PartitionOverlapError, smaller overlaps are truncated at their midpoint.
    """
    if points < 2000:
        raise ValueError("capacitance sweep needs at least 2000 points")
    grid = np.linspace(c_min, c_max, points)
    raw = []
    for f in plan.frequencies:
        phase = _phase_sweep(params, grid, f)
        raw.append(_minimal_span_interval(grid, phase, span_fraction))

    order = np.argsort([lo for lo, _ in raw])
    for a, b in zip(order, order[1:]):
        lo_a, hi_a = raw[a]
        lo_b, hi_b = raw[b]
        overlap = hi_a - lo_b
        if overlap <= 0:
            continue
        narrower = min(hi_a - lo_a, hi_b - lo_b)
        if overlap > max_overlap * narrower:
            raise PartitionOverlapError(
                "tunable ranges of %.4g Hz and %.4g Hz overlap by more than %.0f%%"
                % (plan.frequencies[a], plan.frequencies[b], 100 * max_overlap))

    resolved = [list(iv) for iv in raw]
    for a, b in zip(order, order[1:]):
        if resolved[a][1] > resolved[b][0]:
            mid = 0.5 * (resolved[b][0] + resolved[a][1])
            resolved[a][1] = mid
            resolved[b][0] = mid

    gray = []
    cursor = c_min
    for idx in order:
        lo, hi = resolved[idx]
        if lo > cursor:
            gray.append((cursor, lo))
        cursor = hi
    if cursor < c_max:
        gray.append((cursor, c_max))

    return CapacitancePartition(
        frequencies=plan.frequencies,
        intervals=tuple(tuple(iv) for iv in resolved),
        gray=tuple(gray),
        sweep_range=(c_min, c_max),
    )


@dataclass
class ReflectionState:
    """Ideal phases Phi (S x M, entries in (0, 2*pi]) and binary selection A (S x M).

    Column m of A has at most one nonzero entry: element m serves at most one
    BS.  The practical per-BS reflection vector is derived on demand.
    """

    phi: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.a = np.asarray(self.a, dtype=int)
        self.validate()

    def validate(self):
        if self.phi.shape != self.a.shape or self.phi.ndim != 2:
            raise ValueError("phi and a must be S x M matrices of equal shape")
        if np.any((self.a != 0) & (self.a != 1)):
            raise ValueError("selection entries must be 0 or 1")
        if np.any(self.a.sum(axis=0) > 1):
            raise ValueError("each element may serve at most one BS")
        if np.any(self.phi <= 0) or np.any(self.phi > TWO_PI):
            raise ValueError("phases must lie in (0, 2*pi]")

    @property
    def num_bs(self):
        return self.phi.shape[0]

    @property
    def num_elements(self):
        return self.phi.shape[1]

    def copy(self):
        return ReflectionState(self.phi.copy(), self.a.copy())


def practical_reflection(state, s):
    """Unit-modulus reflection vector seen by BS s: exp(j * phi_s * a_s)."""
    return np.exp(1j * state.phi[s] * state.a[s])


def reflection_matrix(state):
    """All practical reflection vectors stacked as an S x M complex matrix."""
    return np.exp(1j * state.phi * state.a)


def random_state(num_bs, num_elements, rng, allow_unserved=True):
    """Random feasible ReflectionState: uniform phases, uniform one-hot columns."""
    phi = wrap_phase(rng.uniform(0.0, TWO_PI, size=(num_bs, num_elements)))
    a = np.zeros((num_bs, num_elements), dtype=int)
    high = num_bs + 1 if allow_unserved else num_bs
    pick = rng.integers(0, high, size=num_elements)
    for m, s in enumerate(pick):
        if s < num_bs:
            a[s, m] = 1
    return ReflectionState(phi, a)
