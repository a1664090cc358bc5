"""Time integration of the self-organized-critical age dynamics.

The evolving object is a probability measure pi_t of vertex ages.  Writing
(lam_t, theta_t) for the leading eigenpair of the min-kernel operator of
pi_t and phi_t = 1 / integral(theta_t^3 dpi_t) for the burning rate, the
dynamics combine three mechanisms: ages grow at unit speed (transport),
mass is removed at the age-specific rate phi_t * theta_t(x) (burning,
concentrated on old ages because theta is increasing), and the removed
mass is reinjected at age 0 (burned vertices survive with age reset).

For subcritical initial data (lam < 1) burning is absent and the solution
is a pure translate of the initial measure until the gelation time, the
root of lam(translate(pi_0, t)) = 1; from then on the critical dynamics
take over.  Along critical trajectories lam_t stays pinned at 1 by itself;
the integrator never projects onto the critical manifold, so the measured
drift |lam_t - 1| is a direct estimate of the splitting error and is
audited against a budget at every step.

One integrator step of size dt does, in order:

1. transport: every atom location += dt (exact);
2. decay: each atom's mass is multiplied by exp(-phi * theta(x) * dt),
   with phi and theta frozen at the step start and theta evaluated at the
   step-start location x (so mass sitting at age 0 is never burned);
3. rebirth: one new atom at age 0 carries exactly the decayed mass, so
   total mass 1 is conserved to machine precision;

then the eigenpair and burning rate are recomputed (warm-started power
iteration) and atoms may be coalesced within a W1 budget of merge_eps*dt
per step, keeping the injected coalescing error at most merge_eps per
unit time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AccuracyError, InputError, SupercriticalError
from .measures import (AgeMeasure, ProbabilityAgeMeasure, fixed_point_measure,
                       merge_atoms, mixture, w1)
from .spectral import (SpectralPair, leading_eigenvalue, leading_pair,
                       phi_of_pair, theta_at)

#: |lam - 1| window treated as exactly critical
CRIT_TOL = 1e-9


@dataclass(frozen=True)
class EvolveOptions:
    """Knobs of the integrator; defaults match the accuracy contracts."""

    dt: float = 1e-3
    checkpoints: Sequence[float] | None = None  # default: 11 evenly spaced
    merge_eps: float = 1e-6          # W1 coalescing budget per unit time
    lambda_drift_budget: float = 1e-3
    crit_tol: float = CRIT_TOL
    gel_tol: float = 1e-9


@dataclass(frozen=True, eq=False)
class EvolutionState:
    """Snapshot of the solution at one instant.

    ``phi`` is the control actually in effect: 0 during the subcritical
    transport phase, the burning-rate functional of ``pi`` in critical mode.
    ``speed_budget`` accumulates the integral of phi * (age-weighted theta
    mass) along the run; consecutive differences bound the W1 displacement
    between checkpoints.  ``pair`` is None only for the degenerate measure
    concentrated at age 0.
    """

    t: float
    pi: ProbabilityAgeMeasure
    pair: SpectralPair | None
    phi: float
    mode: str                      # "transport" or "critical"
    lambda_drift: float = 0.0
    speed_budget: float = 0.0

    @property
    def lam(self) -> float:
        return self.pair.lam if self.pair is not None else 0.0

    @property
    def atom_count(self) -> int:
        return self.pi.n_atoms

    @property
    def mass_defect(self) -> float:
        return abs(self.pi.total_mass() - 1.0)


@dataclass(frozen=True)
class Trajectory:
    states: tuple[EvolutionState, ...]
    t_gel: float
    switch_lambda_jump: float | None = None  # |lam - 1| measured at the switch

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def state_at(self, t: float, tol: float = 1e-9) -> EvolutionState:
        for s in self.states:
            if abs(s.t - t) <= tol:
                return s
        raise InputError(f"no checkpoint at t = {t}")


def _critical_state(t, pi, *, mode="critical", speed_budget=0.0, start=None):
    pair = leading_pair(pi, start=start)
    return EvolutionState(
        t=t, pi=pi, pair=pair, phi=phi_of_pair(pair), mode=mode,
        lambda_drift=abs(pair.lam - 1.0), speed_budget=speed_budget)


def step(state: EvolutionState, dt: float, *, merge_eps: float = 1e-6,
         lambda_drift_budget: float = 1e-3) -> EvolutionState:
    """Advance one critical step of size dt (transport, decay, rebirth)."""
    if dt <= 0:
        raise InputError("dt must be positive")
    if state.pair is None or state.mode != "critical":
        raise InputError("step() requires a critical-mode state")
    pi, pair, rate = state.pi, state.pair, state.phi
    decayed = pi.masses * np.exp(-rate * pair.theta * dt)
    lost = float(pi.masses.sum() - decayed.sum())
    locs = np.concatenate(([0.0], pi.locations + dt))
    mass = np.concatenate(([lost], decayed))
    new_pi = ProbabilityAgeMeasure(locs, mass)
    if merge_eps > 0.0:
        new_pi = merge_atoms(new_pi, merge_eps * dt)
    # warm start: theta of the old pair, evaluated at the new atom ages
    start = theta_at(pair, new_pi.locations)
    budget_gain = rate * float(
        (pi.locations * pair.theta * pi.masses).sum()) * dt
    new_state = _critical_state(
        state.t + dt, new_pi, start=start,
        speed_budget=state.speed_budget + budget_gain)
    if new_state.lambda_drift > lambda_drift_budget:
        raise AccuracyError(
            f"criticality drift |lam - 1| = {new_state.lambda_drift:.3e} exceeds "
            f"budget {lambda_drift_budget:.1e} at t = {new_state.t:.6g}; "
            "reduce dt")
    return new_state


def gelation_time(pi0: AgeMeasure, tol: float = 1e-9,
                  crit_tol: float = CRIT_TOL) -> float:
    """First time t with lam(translate(pi0, t)) = 1, by scan plus bisection.

    Returns 0 for critical initial data; rejects supercritical data.  The
    eigenvalue grows without bound under translation (it dominates
    (x + t) * tail mass), so a finite bracket always exists.  A coarse
    forward scan locates the first sign change before bisecting, which
    keeps the answer right even if the eigenvalue were not monotone in t.
    """
    lam0 = leading_eigenvalue(pi0)
    if lam0 > 1.0 + crit_tol:
        raise SupercriticalError(
            f"initial eigenvalue {lam0:.6f} > 1; gelation already happened")
    if abs(lam0 - 1.0) <= crit_tol:
        return 0.0
    hi = 1.0
    while leading_eigenvalue(pi0.translate(hi)) < 1.0:
        hi *= 2.0
        if hi > 1e12:
            raise AccuracyError("failed to bracket the gelation time")
    # first crossing on a coarse grid, then bisect inside that cell
    grid = np.linspace(0.0, hi, 65)
    lo = 0.0
    for a, b in zip(grid[:-1], grid[1:]):
        if leading_eigenvalue(pi0.translate(b)) >= 1.0:
            lo, hi = a, b
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lam = leading_eigenvalue(pi0.translate(mid))
        if abs(lam - 1.0) <= tol:
            return mid
        if lam < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            return 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def _default_checkpoints(t_max: float) -> list[float]:
    if t_max <= 0:
        return [0.0]
    return list(np.linspace(0.0, t_max, 11))


def solve(pi0: ProbabilityAgeMeasure, t_max: float,
          opts: EvolveOptions = EvolveOptions()) -> Trajectory:
    """Solve the age dynamics from pi0 up to t_max, recording checkpoints.

    Subcritical initial data evolve by pure transport up to the gelation
    time and then switch to critical stepping; critical data step from
    t = 0.  Supercritical data are rejected.  The degenerate monodisperse
    start (all mass at age 0) is admitted: it is subcritical with gelation
    time computed on its translates.
    """
    if t_max < 0:
        raise InputError("t_max must be >= 0")
    pi0 = pi0.as_probability()
    cps_src = opts.checkpoints if opts.checkpoints is not None \
        else _default_checkpoints(t_max)
    cps = sorted({float(c) for c in cps_src})
    if cps and (cps[0] < 0 or cps[-1] > t_max + 1e-12):
        raise InputError("checkpoints must lie in [0, t_max]")
    for bound in (0.0, t_max):
        if not any(abs(c - bound) <= 1e-12 for c in cps):
            cps.append(bound)
    cps = sorted(set(cps))

    lam0 = leading_eigenvalue(pi0)
    if lam0 > 1.0 + opts.crit_tol:
        raise SupercriticalError(
            f"initial data is age-supercritical (lam = {lam0:.9f}); "
            "the dynamics are defined only up to criticality")

    states: list[EvolutionState] = []
    switch_jump = None
    if lam0 < 1.0 - opts.crit_tol:
        t_gel = gelation_time(pi0, tol=opts.gel_tol, crit_tol=opts.crit_tol)
        # keep the switch instant as a checkpoint unless one already sits
        # within the gelation tolerance of it
        minsep = max(1e-9, 2.0 * opts.gel_tol)
        if minsep < t_gel < t_max - minsep and \
                not any(abs(c - t_gel) <= minsep for c in cps):
            cps = sorted(cps + [t_gel])
        for c in [c for c in cps if c <= min(t_gel, t_max) + 1e-12]:
            pi_c = pi0.translate(c)
            lam_c = leading_eigenvalue(pi_c)
            pair_c = leading_pair(pi_c) if lam_c > 0 else None
            states.append(EvolutionState(
                t=c, pi=pi_c, pair=pair_c, phi=0.0, mode="transport"))
        if t_gel >= t_max - 1e-12:
            return Trajectory(tuple(states), t_gel=t_gel)
        state = _critical_state(t_gel, pi0.translate(t_gel))
        switch_jump = abs(state.lam - 1.0)
        if abs(states[-1].t - t_gel) <= 1e-12:
            states[-1] = state
        elif any(abs(c - t_gel) <= minsep for c in cps):
            pass  # a regular checkpoint sits at the switch; record it there
        else:
            states.append(state)
        remaining = [c for c in cps if c > t_gel + 1e-12]
    else:
        t_gel = 0.0
        state = _critical_state(0.0, pi0)
        states.append(state)
        remaining = [c for c in cps if c > 1e-12]

    for target in remaining:
        while target - state.t > 1e-12:
            h = min(opts.dt, target - state.t)
            state = step(state, h, merge_eps=opts.merge_eps,
                         lambda_drift_budget=opts.lambda_drift_budget)
        state = replace(state, t=target)  # absorb <=1e-12 rounding in t
        states.append(state)
    return Trajectory(tuple(states), t_gel=t_gel, switch_lambda_jump=switch_jump)


# ---------------------------------------------------------------------------
# Trajectory audits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntervalCheck:
    u: float
    v: float
    measured: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class AuditReport:
    checks: tuple[IntervalCheck, ...]
    passed: bool
    worst_slack: float  # most negative (bound - measured) over the checks


def _report(checks: list[IntervalCheck]) -> AuditReport:
    worst = min((c.bound - c.measured for c in checks), default=math.inf)
    return AuditReport(tuple(checks), all(c.passed for c in checks), worst)


def check_speed_bound(traj: Trajectory, slack: float = 1e-6) -> AuditReport:
    """W1 displacement between checkpoints against the transport-plus-burn
    speed bound |v - u| + integral of phi * (age-weighted theta mass)."""
    if len(traj.states) < 2:
        raise InputError("need at least two checkpoints")
    checks = []
    for a, b in zip(traj.states[:-1], traj.states[1:]):
        moved = w1(a.pi, b.pi)
        bound = (b.t - a.t) + (b.speed_budget - a.speed_budget) + slack
        checks.append(IntervalCheck(a.t, b.t, moved, bound, moved <= bound))
    return _report(checks)


def check_mean_growth(traj: Trajectory, slack: float = 1e-9) -> AuditReport:
    """Mean-age growth (mean_t <= t + mean_0) and tail domination
    (pi_t[x + t, inf) <= pi_0[x, inf)) on a grid of ages x.

    The grid uses midpoints between the initial atoms so that exactly
    transported atoms sit half a gap away from every grid point.
    """
    pi0 = traj.states[0].pi
    t0 = traj.states[0].t
    mean0 = pi0.first_moment()
    locs = pi0.locations
    grid = np.concatenate(([0.0], 0.5 * (locs[1:] + locs[:-1]))) if locs.size > 1 \
        else np.array([0.0])
    checks = []
    for s in traj.states:
        dt = s.t - t0
        mean_ok = s.pi.first_moment() <= dt + mean0 + slack
        checks.append(IntervalCheck(t0, s.t, s.pi.first_moment(),
                                    dt + mean0 + slack, mean_ok))
        tails_t = np.array([s.pi.tail_mass(x + dt) for x in grid])
        tails_0 = np.array([pi0.tail_mass(x) for x in grid])
        gap = float(np.max(tails_t - tails_0))
        checks.append(IntervalCheck(t0, s.t, gap, slack, gap <= slack))
    return _report(checks)


# ---------------------------------------------------------------------------
# Perturbations and experiments
# ---------------------------------------------------------------------------

def recriticalize(measure: AgeMeasure) -> ProbabilityAgeMeasure:
    """Translate a subcritical probability measure to the critical manifold."""
    t_star = gelation_time(measure)
    return measure.translate(t_star).as_probability()


def perturb_mass_at_zero(pi: ProbabilityAgeMeasure, eps: float) -> ProbabilityAgeMeasure:
    """Move a fraction eps of every atom's mass to age 0, then translate
    back to criticality.  Yields a critical measure at W1 distance O(eps)."""
    if not 0.0 < eps < 1.0:
        raise InputError("eps must lie in (0, 1)")
    mixed = mixture([(1.0 - eps, pi), (eps, AgeMeasure([0.0], [1.0]))])
    return recriticalize(mixed.as_probability())


def perturb_scale(pi: ProbabilityAgeMeasure, c: float) -> ProbabilityAgeMeasure:
    """Contract every age by a factor c in (0, 1), then translate back to
    criticality (the eigenvalue scales exactly linearly with ages)."""
    if not 0.0 < c < 1.0:
        raise InputError("c must lie in (0, 1); expansion would be supercritical")
    shrunk = ProbabilityAgeMeasure(pi.locations * c, pi.masses)
    return recriticalize(shrunk)


@dataclass(frozen=True)
class StabilityResult:
    times: np.ndarray
    ratios: np.ndarray       # w1(pi_t, pi~_t) / w1(pi_0, pi~_0)
    initial_gap: float
    c1: float                # smallest rate with ratio <= exp(c1 * t) throughout

    def bound_holds(self, slack: float = 1e-9) -> bool:
        return bool(np.all(self.ratios <= np.exp(self.c1 * self.times) + slack))


def stability_experiment(pi0: ProbabilityAgeMeasure,
                         pi0_perturbed: ProbabilityAgeMeasure,
                         t_max: float,
                         opts: EvolveOptions = EvolveOptions()) -> StabilityResult:
    """Evolve two critical initial measures side by side and track the
    growth of their W1 gap relative to the initial gap.

    The fitted rate c1 is the largest log-ratio slope over the checkpoints,
    so ratio <= exp(c1 * t) holds along the whole run; c1 is the empirical
    Gronwall constant of the flow around this pair.
    """
    for m, label in ((pi0, "pi0"), (pi0_perturbed, "pi0_perturbed")):
        lam = leading_eigenvalue(m)
        if abs(lam - 1.0) > opts.crit_tol:
            raise InputError(f"{label} must be critical (lam = {lam:.9f})")
    gap0 = w1(pi0, pi0_perturbed)
    if gap0 <= 0.0:
        raise InputError("initial measures must differ")
    ta = solve(pi0, t_max, opts)
    tb = solve(pi0_perturbed, t_max, opts)
    times = ta.times
    gaps = np.array([w1(a.pi, b.pi) for a, b in zip(ta.states, tb.states)])
    ratios = gaps / gap0
    pos = times > 0
    c1 = float(np.max(np.log(np.maximum(ratios[pos], 1e-300)) / times[pos])) \
        if pos.any() else 0.0
    return StabilityResult(times, ratios, gap0, c1)


@dataclass(frozen=True)
class LyapunovResult:
    times: np.ndarray
    distances: np.ndarray    # w1(pi_t, stationary reference)
    increases: int           # count of upticks beyond the slack
    max_increase: float
    slack: float


def lyapunov_experiment(pi0: ProbabilityAgeMeasure, t_max: float,
                        opts: EvolveOptions = EvolveOptions(),
                        reference: AgeMeasure | None = None,
                        slack: float = 1e-4) -> LyapunovResult:
    """Track the W1 distance to the stationary profile along a trajectory.

    Whether this distance is nonincreasing for every critical start is an
    open question; upticks beyond the slack are therefore counted and
    reported, never treated as failures.
    """
    ref = reference if reference is not None else fixed_point_measure()
    traj = solve(pi0, t_max, opts)
    times = traj.times
    dists = np.array([w1(s.pi, ref) for s in traj.states])
    jumps = np.diff(dists)
    increases = int(np.sum(jumps > slack))
    max_inc = float(np.max(jumps)) if jumps.size else 0.0
    return LyapunovResult(times, dists, increases, max_inc, slack)


# ---------------------------------------------------------------------------
# Trajectory output
# ---------------------------------------------------------------------------

TRAJECTORY_HEADER = "t,lambda,phi,mean_age,atom_count,w1_to_fixed_point,mass_defect"


def snapshot_filename(t: float) -> str:
    return f"snapshot_t{t:.6f}.csv"


def write_trajectory(traj: Trajectory, out_dir,
                     reference: AgeMeasure | None = None) -> None:
    """Write trajectory.csv plus one measure snapshot per checkpoint."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ref = reference if reference is not None else fixed_point_measure()
    rows = [TRAJECTORY_HEADER]
    for s in traj.states:
        rows.append(",".join([
            f"{s.t:.12g}", f"{s.lam:.17g}", f"{s.phi:.17g}",
            f"{s.pi.first_moment():.17g}", str(s.atom_count),
            f"{w1(s.pi, ref):.17g}", f"{s.mass_defect:.17g}"]))
        s.pi.to_csv(out / snapshot_filename(s.t))
    (out / "trajectory.csv").write_text("\n".join(rows) + "\n")
