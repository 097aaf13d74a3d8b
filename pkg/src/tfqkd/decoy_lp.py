"""Fock-state yield bounds from observed decoy gains.

Every observed gain pins one linear functional of the yield matrix:
Q_d(x, y) = sum_nm P_n(x) P_m(y) Y_nm with Poisson weights.  Truncating
at a photon-number cutoff leaves each observation a window
[Q - tail, Q], where the tail is the Poisson mass outside the truncated
box (a one-photon... n-photon yield can never exceed one).  Minimizing
or maximizing a single yield, or the low-order combination entering the
key-rate analysis, over that polytope is a linear program solved by the
certified simplex in :mod:`tfqkd.boundedlp`.

Measured data may be slightly inconsistent with any yield matrix
(statistical fluctuation); such problems raise
:class:`InfeasibleProblemError` carrying the uniform window widening
that restores feasibility, which callers may apply explicitly via
``relax``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundedlp import SimplexResult, solve_boxed_lp, _FloatSimplex, _AT_LOWER
from .channel import DecoyYields, IntensitySchedule, MEASURED_PAIRS
from .errors import DomainError, IncompleteDataError, InfeasibleProblemError
from .photonics import poisson_pmf

__all__ = [
    "LpProblem",
    "YieldBounds",
    "TARGET_PAIRS",
    "build_lp",
    "bound_yield",
    "bound_yield_certified",
    "bound_combination",
    "combination_weights",
    "solve_yield_bounds",
    "min_feasible_relax",
]

TARGET_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0))

# Numerical floor for the data-window width.  The exact Poisson tails at
# these intensities are below 1e-20, far under float resolution of the
# observed gains themselves; widening the window to 1e-12 keeps the
# bounds sound while making them insensitive to last-ulp roundoff in the
# synthesized data.
TAIL_FLOOR = 1e-12


@dataclass(frozen=True)
class LpProblem:
    """Immutable LP over yields Y_nm, 0 <= n, m <= cutoff.

    Internally the two one-sided data constraints per observation are
    held as one equality row with a boxed slack: W y + s = Q + relax,
    0 <= s <= tail + 2*relax.
    """

    cutoff: int
    labels: tuple
    weights: np.ndarray       # (npairs, nvars) Poisson weight rows
    gains: np.ndarray         # observed Q_d per pair
    tails: np.ndarray         # truncated Poisson mass per pair
    relax: float = 0.0
    certificates: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n_variables(self) -> int:
        return (self.cutoff + 1) ** 2

    @property
    def n_data_constraints(self) -> int:
        return 2 * len(self.labels)

    def var_index(self, n: int, m: int) -> int:
        if not (0 <= n <= self.cutoff and 0 <= m <= self.cutoff):
            raise DomainError(f"target ({n},{m}) outside cutoff {self.cutoff}")
        return n * (self.cutoff + 1) + m

    def relaxed(self, relax: float) -> "LpProblem":
        return LpProblem(
            cutoff=self.cutoff, labels=self.labels, weights=self.weights,
            gains=self.gains, tails=self.tails, relax=relax,
        )


@dataclass(frozen=True)
class YieldBounds:
    """Certified two-sided bounds for the six low-order yields."""

    lower: dict
    upper: dict
    combination_lower: float
    relax: float = 0.0

    def __post_init__(self):
        for key in self.lower:
            if not 0.0 <= self.lower[key] <= self.upper[key] <= 1.0:
                raise DomainError(f"bounds for {key} out of order: "
                                  f"[{self.lower[key]}, {self.upper[key]}]")


def build_lp(yields: DecoyYields, schedule: IntensitySchedule, cutoff: int = 10,
             relax: float = 0.0) -> LpProblem:
    """Assemble the yield-estimation LP from the ten observed pairs."""
    if cutoff < 3:
        raise DomainError(f"cutoff must be at least 3, got {cutoff}")
    missing = [pair for pair in MEASURED_PAIRS if pair not in yields.q_decoy]
    if missing:
        raise IncompleteDataError(
            f"decoy data misses {len(missing)} intensity pairs: {missing}",
            missing=missing,
        )
    pmf = {
        label: np.array([poisson_pmf(n, schedule.intensity(label)) for n in range(cutoff + 1)])
        for label in ("mu", "nu1", "nu2", "nu3")
    }
    weights, gains, tails = [], [], []
    for x, y in MEASURED_PAIRS:
        w = np.outer(pmf[x], pmf[y]).ravel()
        weights.append(w)
        gains.append(yields.q_decoy[(x, y)])
        tails.append(max(1.0 - w.sum(), TAIL_FLOOR))
    return LpProblem(
        cutoff=cutoff,
        labels=tuple(MEASURED_PAIRS),
        weights=np.array(weights),
        gains=np.array(gains),
        tails=np.array(tails),
        relax=relax,
    )


# Columns whose weight never exceeds this are folded into the slack
# windows instead of entering the solver: a yield in [0, 1] with row
# weights w contributes a zonotope inside the box [0, w], so widening
# each window by the dropped mass keeps every bound valid while the
# resulting values move by less than the window floor itself.
_NEGLIGIBLE_COLUMN = 1e-14


def _solve(lp: LpProblem, objective: np.ndarray, maximize: bool) -> SimplexResult:
    npair = len(lp.labels)
    keep = (lp.weights.max(axis=0) >= _NEGLIGIBLE_COLUMN) | (objective != 0.0)
    W = lp.weights[:, keep]
    dropped_mass = lp.weights[:, ~keep].sum(axis=1)
    A = np.hstack([W, np.eye(npair)])
    b = lp.gains + lp.relax
    lower = np.zeros(W.shape[1] + npair)
    upper = np.concatenate([np.ones(W.shape[1]), lp.tails + dropped_mass + 2.0 * lp.relax])
    c = np.concatenate([objective[keep], np.zeros(npair)])
    sign = -1.0 if maximize else 1.0
    # Bounds round outward: minima down, maxima up.
    result = solve_boxed_lp(sign * c, A, b, lower, upper, round_down=True)
    if result.status != "optimal":
        suggested = min_feasible_relax(lp)
        worst = lp.labels[result.worst_row] if result.worst_row is not None else None
        raise InfeasibleProblemError(
            f"decoy data inconsistent beyond tail slack (phase-1 gap "
            f"{result.infeasibility:.3e}, worst pair {worst}); "
            f"relax by >= {suggested:.3e} to restore feasibility",
            suggested_relax=suggested,
            violated=worst,
        )
    return result


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


def bound_yield_certified(lp: LpProblem, n: int, m: int, direction: str) -> SimplexResult:
    """Optimal-basis certificate for one yield bound."""
    if direction not in ("lower", "upper"):
        raise DomainError(f"direction must be 'lower' or 'upper', got {direction!r}")
    c = np.zeros(lp.n_variables)
    c[lp.var_index(n, m)] = 1.0
    result = _solve(lp, c, maximize=(direction == "upper"))
    lp.certificates[(n, m, direction)] = result
    return result


def bound_yield(lp: LpProblem, n: int, m: int, direction: str) -> float:
    """Certified lower/upper bound on Y_nm; exact optimum rounded outward."""
    result = bound_yield_certified(lp, n, m, direction)
    value = result.objective if direction == "lower" else -result.objective
    return _clamp01(value)


def combination_weights(mu: float, literal: bool = False) -> dict:
    """Poisson weights of the low-order combination at signal intensity mu.

    ``literal=True`` reproduces a published variant that lists the
    (2,0) term twice instead of pairing it with (0,2); the default reads
    the second occurrence as (0,2).
    """
    p = [poisson_pmf(n, mu) for n in range(3)]
    if literal:
        return {(0, 0): p[0] * p[0], (0, 1): p[0] * p[1], (1, 0): p[1] * p[0],
                (2, 0): 2.0 * p[2] * p[0], (1, 1): p[1] * p[1]}
    return {(0, 0): p[0] * p[0], (0, 1): p[0] * p[1], (1, 0): p[1] * p[0],
            (2, 0): p[2] * p[0], (0, 2): p[0] * p[2], (1, 1): p[1] * p[1]}


def bound_combination(lp: LpProblem, mu: float, literal: bool = False) -> float:
    """Certified lower bound of the Poisson-weighted low-order sum."""
    if mu < 0:
        raise DomainError("mu must be non-negative")
    c = np.zeros(lp.n_variables)
    for (n, m), w in combination_weights(mu, literal=literal).items():
        c[lp.var_index(n, m)] += w
    result = _solve(lp, c, maximize=False)
    lp.certificates[("combination", mu, literal)] = result
    return _clamp01(result.objective)


def solve_yield_bounds(lp: LpProblem, mu: float) -> YieldBounds:
    """All six target bounds plus the combination lower bound."""
    lower, upper = {}, {}
    for n, m in TARGET_PAIRS:
        lower[(n, m)] = bound_yield(lp, n, m, "lower")
        upper[(n, m)] = bound_yield(lp, n, m, "upper")
    return YieldBounds(
        lower=lower,
        upper=upper,
        combination_lower=bound_combination(lp, mu),
        relax=lp.relax,
    )


def _feasible_probe(lp: LpProblem, relax: float) -> bool:
    """Float-only phase-1 feasibility check used by the relax bisection."""
    npair = len(lp.labels)
    keep = lp.weights.max(axis=0) >= _NEGLIGIBLE_COLUMN
    W = lp.weights[:, keep]
    dropped_mass = lp.weights[:, ~keep].sum(axis=1)
    nv = W.shape[1]
    A = np.hstack([W, np.eye(npair)])
    b = lp.gains + relax
    A_ext = np.hstack([A, np.eye(npair), -np.eye(npair)])
    lower = np.zeros(nv + 3 * npair)
    upper = np.concatenate(
        [np.ones(nv), lp.tails + dropped_mass + 2.0 * relax, np.full(2 * npair, math.inf)]
    )
    cost = np.concatenate([np.zeros(nv + npair), np.ones(2 * npair)])
    basis = [nv + npair + i if b[i] >= 0 else nv + 2 * npair + i for i in range(npair)]
    sim = _FloatSimplex(cost, A_ext, b, lower, upper, basis, [_AT_LOWER] * (nv + 3 * npair))
    sim.run()
    gap = sum(abs(v) for j, v in zip(sim.basis, sim.basic_values()) if j >= nv + npair)
    return gap <= 1e-11


def min_feasible_relax(lp: LpProblem, precision: float = 1e-12) -> float:
    """Smallest uniform window widening that restores feasibility.

    Bisection against a float feasibility probe; the result is a
    diagnostic (callers should add a small safety margin before
    re-solving).
    """
    if _feasible_probe(lp, 0.0):
        return 0.0
    hi = 1e-9
    while not _feasible_probe(lp, hi):
        hi *= 4.0
        if hi > 1.0:
            return 1.0
    lo = 0.0
    while hi - lo > precision * max(1.0, hi):
        mid = (lo + hi) / 2.0
        if _feasible_probe(lp, mid):
            hi = mid
        else:
            lo = mid
    return hi
