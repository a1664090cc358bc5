"""Atomic positive measures on the age axis [0, inf) and the W1 metric.

The state variable everywhere in this package is a finite positive Borel
measure with finite first moment, represented as a sorted list of weighted
atoms.  Atoms are the natural representation here: the age dynamics
transport and reweight mass, which point masses carry without numerical
diffusion.  Continuous profiles enter only through quantile discretization
in the named presets.

Canonical form: locations strictly increasing, no zero-mass atoms, exact
duplicate locations merged by summing mass.  Approximate coalescing is a
separate, explicitly budgeted operation (:func:`merge_atoms`).

W1 (earth mover's) distance between measures on the line is computed as
the L1 distance between cumulative distribution functions, which is exact
for atomic measures.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

#: tolerance on |total mass - 1| for probability measures; sized for
#: double-precision accumulation over <= 1e5 atoms
MASS_TOL = 1e-12

#: measures whose total masses differ by more than this have infinite W1
W1_MASS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AgeMeasure:
    """Finite positive measure on [0, inf) stored as weighted atoms.

    Instances are immutable (arrays are marked read-only) and therefore
    safe to share between threads; every operation returns a new value.
    """

    locations: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        locs = np.atleast_1d(np.asarray(self.locations, dtype=float)).ravel()
        mass = np.atleast_1d(np.asarray(self.masses, dtype=float)).ravel()
        if locs.shape != mass.shape:
            raise InputError("locations and masses must have equal length")
        if locs.size:
            if not (np.isfinite(locs).all() and np.isfinite(mass).all()):
                raise InputError("locations and masses must be finite")
            if (locs < 0).any():
                raise InputError("atom locations must be >= 0")
            if (mass < 0).any():
                raise InputError("atom masses must be >= 0")
            order = np.argsort(locs, kind="stable")
            locs, mass = locs[order], mass[order]
            # merge exact duplicate locations
            if locs.size > 1 and (np.diff(locs) == 0).any():
                starts = np.flatnonzero(np.r_[True, np.diff(locs) > 0])
                locs = locs[starts]
                mass = np.add.reduceat(mass, starts)
            keep = mass > 0
            locs, mass = locs[keep], mass[keep]
        locs.flags.writeable = False
        mass.flags.writeable = False
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "masses", mass)

    # -- basic functionals -------------------------------------------------

    @property
    def n_atoms(self) -> int:
        return int(self.locations.size)

    def total_mass(self) -> float:
        return float(self.masses.sum())

    def first_moment(self) -> float:
        return float((self.locations * self.masses).sum())

    def tail_first_moment(self, r: float) -> float:
        """Sum of x * mass over atoms with x >= r.

        Equals the first moment at r = 0 and is nonincreasing in r; these
        tail moments define the neighborhood system in which the solver's
        a-priori bounds live.
        """
        i = int(np.searchsorted(self.locations, r, side="left"))
        return float((self.locations[i:] * self.masses[i:]).sum())

    def tail_mass(self, r: float) -> float:
        """Mass of [r, inf)."""
        i = int(np.searchsorted(self.locations, r, side="left"))
        return float(self.masses[i:].sum())

    def cdf(self, x):
        """Right-continuous CDF value(s): mass of [0, x]."""
        cum = np.concatenate(([0.0], np.cumsum(self.masses)))
        idx = np.searchsorted(self.locations, x, side="right")
        out = cum[idx]
        return float(out) if np.isscalar(x) else out

    # -- transformations ---------------------------------------------------

    def translate(self, r: float) -> "AgeMeasure":
        """Shift every atom right by r >= 0 (ages grow with time)."""
        if r < 0:
            raise InputError("left translation off [0, inf) is unsupported")
        return type(self)(self.locations + r, self.masses)

    def tilt(self, weights) -> "AgeMeasure":
        """Reweight atom masses by nonnegative factors given per atom."""
        w = np.asarray(weights, dtype=float)
        if w.shape != self.masses.shape:
            raise InputError("tilt weights must align with the atoms")
        if (w < 0).any():
            raise InputError("tilt weights must be >= 0")
        return AgeMeasure(self.locations, self.masses * w)

    def as_probability(self, tol: float = MASS_TOL) -> "ProbabilityAgeMeasure":
        return ProbabilityAgeMeasure(self.locations, self.masses, tol_mass=tol)

    # -- IO ------------------------------------------------------------------

    def to_csv(self, path) -> None:
        """Snapshot format: header ``location,mass``, >= 15 significant digits."""
        lines = ["location,mass"]
        lines += [f"{x:.17g},{m:.17g}" for x, m in zip(self.locations, self.masses)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "AgeMeasure":
        rows = Path(path).read_text().strip().splitlines()
        if not rows or rows[0].strip() != "location,mass":
            raise InputError(f"{path}: expected header 'location,mass'")
        pairs = [tuple(float(v) for v in row.split(",")) for row in rows[1:]]
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    def __repr__(self):  # keep short: measures can hold 1e5 atoms
        return (f"{type(self).__name__}(n_atoms={self.n_atoms}, "
                f"mass={self.total_mass():.6g}, mean={self.first_moment():.6g})")


class ProbabilityAgeMeasure(AgeMeasure):
    """AgeMeasure whose total mass is 1 within MASS_TOL."""

    def __init__(self, locations, masses, tol_mass: float = MASS_TOL):
        super().__init__(locations, masses)
        defect = abs(self.total_mass() - 1.0)
        if defect > tol_mass:
            raise InputError(
                f"not a probability measure: |mass - 1| = {defect:.3e} > {tol_mass:.1e}")


def from_atoms(pairs: Iterable[tuple[float, float]]) -> AgeMeasure:
    """Build a canonical AgeMeasure from (location, mass) pairs."""
    pairs = list(pairs)
    if not pairs:
        return AgeMeasure(np.empty(0), np.empty(0))
    locs, mass = zip(*pairs)
    return AgeMeasure(np.asarray(locs, dtype=float), np.asarray(mass, dtype=float))


# ---------------------------------------------------------------------------
# Named presets
# ---------------------------------------------------------------------------

def dirac(a: float) -> ProbabilityAgeMeasure:
    """Unit point mass at age a >= 0."""
    return ProbabilityAgeMeasure([a], [1.0])


def two_atom(p: float) -> ProbabilityAgeMeasure:
    """(1-p) delta_0 + p delta_{1/p}; age-critical with first moment 1."""
    if not 0.0 < p <= 1.0:
        raise InputError("two_atom requires p in (0, 1]")
    return ProbabilityAgeMeasure([0.0, 1.0 / p], [1.0 - p, p])


def three_atom(n: float) -> ProbabilityAgeMeasure:
    """Age-critical measure on {0, 1, n^2} with mass 1 - 1/n at 1.

    The family concentrates weakly at delta_1 as n grows while its mean
    increases to 2, which makes it a stress test for anything that is
    supposed to be continuous only in the W1 topology.
    """
    if n < 2:
        raise InputError("three_atom requires n >= 2")
    m_far = 1.0 / (n * n + n - 1.0)
    return ProbabilityAgeMeasure(
        [0.0, 1.0, n * n], [1.0 / n - m_far, 1.0 - 1.0 / n, m_far])


def _lncosh(u: np.ndarray) -> np.ndarray:
    au = np.abs(u)
    return au + np.log1p(np.exp(-2.0 * au)) - math.log(2.0)


def _sech2_partial_moment(x: np.ndarray) -> np.ndarray:
    """int_0^x t * (1/2) sech^2(t/2) dt = x tanh(x/2) - 2 ln cosh(x/2)."""
    return x * np.tanh(x / 2.0) - 2.0 * _lncosh(x / 2.0)


def fixed_point_measure(n_atoms: int = 2000,
                        truncation: float = 40.0) -> ProbabilityAgeMeasure:
    """Quantile discretization of the stationary age profile.

    The stationary density is (1/2) sech^2(x/2) (CDF tanh(x/2)).  The mass
    on [0, truncation] is split into ``n_atoms`` equal-probability cells,
    one atom per cell at the cell's conditional mean; any remaining tail
    mass becomes a single atom at the tail's conditional mean.  Atom
    locations are then rescaled by the reciprocal of the leading eigenvalue
    so the discretized measure is age-critical to solver accuracy (the raw
    quantile discretization sits ~1e-3 off criticality at 2000 atoms, which
    would otherwise shift it into the subcritical branch of the evolution).
    """
    if n_atoms < 1:
        raise InputError("fixed_point requires n_atoms >= 1")
    qmax = math.tanh(truncation / 2.0)
    if qmax < 1.0 - 1e-6:
        raise InputError(
            f"truncation {truncation} keeps only {qmax:.8f} of the mass; "
            "need >= 1 - 1e-6")
    qs = np.linspace(0.0, qmax, n_atoms + 1)
    with np.errstate(divide="ignore"):
        edges = 2.0 * np.arctanh(qs)
    edges[-1] = truncation  # quantile of qmax, exact even when qmax rounds to 1
    cell_mass = qmax / n_atoms
    locs = (_sech2_partial_moment(edges[1:]) -
            _sech2_partial_moment(edges[:-1])) / cell_mass
    mass = np.full(n_atoms, cell_mass)
    tail = 1.0 - qmax
    if tail > 0.0:
        c = truncation
        tail_mean = c + (math.exp(c) + 1.0) * math.log1p(math.exp(-c))
        locs = np.append(locs, tail_mean)
        mass = np.append(mass, tail)
    from .spectral import leading_pair  # deferred: spectral imports this module
    lam = leading_pair(AgeMeasure(locs, mass)).lam
    return ProbabilityAgeMeasure(locs / lam, mass)


_PRESETS = {
    "dirac": dirac,
    "twoatom": two_atom,
    "two_atom": two_atom,
    "threeatom": three_atom,
    "three_atom": three_atom,
    "fixedpoint": fixed_point_measure,
    "fixed_point": fixed_point_measure,
}


def from_named(preset: str, *params: float) -> ProbabilityAgeMeasure:
    """Build a preset by name: dirac(a), two_atom(p), three_atom(n),
    fixed_point(n_atoms, truncation).

    Also accepts compact preset strings like ``"twoatom:0.5"`` or
    ``"fixedpoint:2000,40"`` (used by the CLI).
    """
    name = preset
    if ":" in preset and not params:
        name, _, arg = preset.partition(":")
        params = tuple(float(v) for v in arg.split(",") if v != "")
    builder = _PRESETS.get(name.lower().replace("-", "_"))
    if builder is None:
        raise InputError(f"unknown preset {preset!r}; "
                         f"choose from {sorted(set(_PRESETS))}")
    if builder is fixed_point_measure and params:
        params = (int(params[0]),) + tuple(params[1:])
    try:
        return builder(*params)
    except TypeError as exc:
        raise InputError(f"bad parameters for preset {name!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# W1 metric and coalescing
# ---------------------------------------------------------------------------

def w1(a: AgeMeasure, b: AgeMeasure) -> float:
    """Exact W1 distance: integral of |F_a - F_b| over the atom grid.

    Requires equal total masses (within W1_MASS_TOL); otherwise the CDF
    difference does not vanish at infinity and the distance is infinite.
    """
    if abs(a.total_mass() - b.total_mass()) > W1_MASS_TOL:
        raise InputError("W1 requires equal total masses")
    if a.n_atoms == 0 or b.n_atoms == 0:
        return abs(a.first_moment() - b.first_moment())
    grid = np.union1d(a.locations, b.locations)
    if grid.size < 2:
        return 0.0
    diff = a.cdf(grid[:-1]) - b.cdf(grid[:-1])
    return float(np.abs(diff) @ np.diff(grid))


def merge_atoms(measure: AgeMeasure, eps: float) -> AgeMeasure:
    """Coalesce adjacent atoms into mass-weighted barycenters within a
    W1 budget of eps.

    Pairs are merged cheapest first; the accumulated cost (sum over merge
    events of mass * |location - barycenter|, an upper bound for the W1
    shift between input and output) never exceeds eps.  Total mass and
    first moment are preserved by construction.
    """
    if eps < 0:
        raise InputError("merge budget must be >= 0")
    n = measure.n_atoms
    if eps == 0.0 or n < 2:
        return measure
    locs = measure.locations.copy()
    mass = measure.masses.copy()
    prev = np.arange(-1, n - 1)
    nxt = np.arange(1, n + 1)
    alive = np.ones(n, dtype=bool)
    version = np.zeros(n, dtype=np.int64)

    def pair_cost(i: int, j: int) -> float:
        d = locs[j] - locs[i]
        return 2.0 * mass[i] * mass[j] * d / (mass[i] + mass[j])

    heap = [(pair_cost(i, i + 1), i, i + 1, 0, 0) for i in range(n - 1)]
    heapq.heapify(heap)
    spent = 0.0
    while heap:
        cost, i, j, vi, vj = heapq.heappop(heap)
        if not (alive[i] and alive[j]) or version[i] != vi or version[j] != vj:
            continue
        if spent + cost > eps:
            break  # cheapest remaining merge exceeds the budget
        spent += cost
        m = mass[i] + mass[j]
        locs[i] = (locs[i] * mass[i] + locs[j] * mass[j]) / m
        mass[i] = m
        alive[j] = False
        version[i] += 1
        nxt[i] = nxt[j]
        if nxt[i] < n:
            prev[nxt[i]] = i
            heapq.heappush(heap, (pair_cost(i, nxt[i]), i, nxt[i],
                                  version[i], version[nxt[i]]))
        if prev[i] >= 0:
            heapq.heappush(heap, (pair_cost(prev[i], i), prev[i], i,
                                  version[prev[i]], version[i]))
    return type(measure)(locs[alive], mass[alive])


def mixture(components: Sequence[tuple[float, AgeMeasure]]) -> AgeMeasure:
    """Weighted sum of measures: sum_i c_i * mu_i with c_i >= 0."""
    locs, mass = [], []
    for c, mu in components:
        if c < 0:
            raise InputError("mixture coefficients must be >= 0")
        locs.append(mu.locations)
        mass.append(c * mu.masses)
    return AgeMeasure(np.concatenate(locs), np.concatenate(mass))
