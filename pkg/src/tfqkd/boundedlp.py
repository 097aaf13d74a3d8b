"""Small dense LP solver with exact rational certification.

Solves min c.x subject to A x = b and box bounds l <= x <= u, the shape
every estimation problem in this package reduces to.  The data windows
those problems carry are nearly degenerate (slack widths around 1e-12
against coefficients spanning forty orders of magnitude), which puts
the answers of general-purpose float solvers at the mercy of their
feasibility tolerances.

A bounded-variable simplex with Bland's rule locates a vertex in
floating point; the vertex is then audited in exact Fraction arithmetic
over the same float data.  The reported objective is the exact
Lagrangian dual value at that vertex, rounded in the direction the
caller asks for: it can never overstate the true optimum, so bounds
built on top of it are sound by construction.  The exact duality gap is
part of the result; when it exceeds ``gap_tol`` the simplex is resumed
in exact arithmetic, so reported bounds are always within ``gap_tol``
of the true optimum.  Identical input yields bitwise-identical output.

Lower bounds must be finite; upper bounds may be +inf (they are pinned
before phase 2, so the dual bound only ever sees finite boxes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = ["SimplexResult", "solve_boxed_lp", "round_directed"]

_AT_LOWER = 0
_AT_UPPER = 1
_COST_TOL = 1e-9
_PIVOT_TOL = 1e-11
_PHASE1_TOL = 1e-7
_MAX_ITER = 20000
_DEFAULT_GAP_TOL = 1e-10


@dataclass(frozen=True)
class SimplexResult:
    """Certified solution of a boxed equality-form LP.

    ``objective`` is the certified value (sound side), ``primal_objective``
    the exact objective of the returned vertex, and ``gap`` their exact
    difference, all rounded conservatively.  ``basis``/``statuses``
    (status 0 = at lower bound, 1 = at upper) identify the vertex so
    feasibility and the dual bound can be re-verified independently.
    For infeasible problems ``infeasibility`` carries the exact phase-1
    optimum and ``worst_row`` the row with the largest residual.
    """

    status: str
    objective: float | None = None
    x: np.ndarray | None = None
    basis: tuple | None = None
    statuses: tuple | None = None
    exact_objective: Fraction | None = None
    primal_objective: float | None = None
    gap: float = 0.0
    infeasibility: float = 0.0
    worst_row: int | None = None
    float_iterations: int = 0
    exact_iterations: int = 0


def round_directed(value: Fraction, down: bool) -> float:
    """Nearest float not crossing ``value`` in the requested direction."""
    f = float(value)
    if math.isinf(f):
        return f
    exact = Fraction(f)
    if down and exact > value:
        return math.nextafter(f, -math.inf)
    if not down and exact < value:
        return math.nextafter(f, math.inf)
    return f


# ---------------------------------------------------------------------------
# float pass


class _FloatSimplex:
    def __init__(self, c, A, b, lower, upper, basis, statuses):
        self.c, self.A, self.b = c, A, b
        self.lower, self.upper = lower, upper
        self.basis = basis
        self.statuses = np.asarray(statuses, dtype=np.int8)
        self.m, self.n = A.shape

    def _nonbasic_vector(self):
        v = np.where(self.statuses == _AT_LOWER, self.lower, self.upper)
        v[self.basis] = 0.0
        return v

    def basic_values(self):
        rhs = self.b - self.A @ self._nonbasic_vector()
        return np.linalg.solve(self.A[:, self.basis], rhs)

    def run(self):
        """Bounded-variable simplex; returns iterations used.

        Enters the most violating column (Dantzig) until a run of
        degenerate pivots suggests cycling, then falls back to Bland's
        rule.  Ratio ties break toward the smallest variable index.
        """
        fixed = self.lower == self.upper
        degenerate_run = 0
        bland = False
        for iteration in range(_MAX_ITER):
            B = self.A[:, self.basis]
            y = np.linalg.solve(B.T, self.c[self.basis])
            reduced = self.c - self.A.T @ y
            violation = np.where(
                self.statuses == _AT_LOWER, -reduced, reduced
            )
            violation[self.basis] = 0.0
            violation[fixed] = 0.0
            if bland:
                candidates = np.flatnonzero(violation > _COST_TOL)
                if candidates.size == 0:
                    return iteration
                entering = int(candidates[0])
            else:
                entering = int(np.argmax(violation))
                if violation[entering] <= _COST_TOL:
                    return iteration
            sigma = 1.0 if self.statuses[entering] == _AT_LOWER else -1.0
            w = np.linalg.solve(B, self.A[:, entering])
            xb = self.basic_values()

            t_best = self.upper[entering] - self.lower[entering]
            leave = None
            for i in range(self.m):
                step = sigma * w[i]
                if step > _PIVOT_TOL:
                    t = (xb[i] - self.lower[self.basis[i]]) / step
                elif step < -_PIVOT_TOL:
                    t = (self.upper[self.basis[i]] - xb[i]) / -step
                else:
                    continue
                t = max(t, 0.0)
                if t < t_best or (
                    t == t_best and (leave is None or self.basis[i] < self.basis[leave])
                ):
                    t_best = t
                    leave = i
            degenerate_run = degenerate_run + 1 if t_best <= 1e-14 else 0
            if degenerate_run > 50:
                bland = True
            if leave is None:
                if math.isinf(t_best):
                    raise ArithmeticError("LP unbounded; boxes should prevent this")
                self.statuses[entering] = (
                    _AT_UPPER if self.statuses[entering] == _AT_LOWER else _AT_LOWER
                )
                continue
            out = self.basis[leave]
            self.statuses[out] = _AT_LOWER if sigma * w[leave] > 0 else _AT_UPPER
            self.basis[leave] = entering
            self.statuses[entering] = _AT_LOWER
        raise ArithmeticError("float simplex exceeded iteration limit")

    def drive_out(self, first_artificial):
        """Degenerate-pivot basic artificials onto structural columns."""
        for i in range(self.m):
            j = self.basis[i]
            if j < first_artificial:
                continue
            B = self.A[:, self.basis]
            row = np.linalg.solve(B.T, np.eye(self.m)[i])
            weights = row @ self.A[:, :first_artificial]
            in_basis = set(self.basis)
            for cand in np.flatnonzero(np.abs(weights) > 1e-8):
                if int(cand) not in in_basis:
                    self.basis[i] = int(cand)
                    self.statuses[int(cand)] = _AT_LOWER
                    break


# ---------------------------------------------------------------------------
# exact pass


class _ExactInfeasible(ArithmeticError):
    pass


def _exact_inverse(columns):
    """Exact inverse of a square matrix given as a list of columns."""
    m = len(columns)
    M = [[columns[j][i] for j in range(m)] + [Fraction(int(i == k)) for k in range(m)]
         for i in range(m)]
    for col in range(m):
        pivot, best = None, -1.0
        for row in range(col, m):
            if M[row][col] != 0:
                mag = abs(float(M[row][col]))
                if mag > best:
                    best, pivot = mag, row
        if pivot is None:
            raise ArithmeticError("singular basis in exact phase")
        M[col], M[pivot] = M[pivot], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for row in range(m):
            if row != col and M[row][col] != 0:
                f = M[row][col]
                M[row] = [a - f * p for a, p in zip(M[row], M[col])]
    return [[M[i][m + k] for k in range(m)] for i in range(m)]  # row-major inverse


def _matvec(rows, v):
    out = []
    for row in rows:
        s = Fraction(0)
        for a, b in zip(row, v):
            if a != 0 and b != 0:
                s += a * b
        out.append(s)
    return out


class _ExactProblem:
    """Fraction view of the extended LP; infinite uppers become None."""

    def __init__(self, c, A, b, lower, upper):
        self.m, self.n = A.shape
        self.c = [Fraction(v) for v in c]
        self.cols = [[Fraction(A[i, j]) for i in range(self.m)] for j in range(self.n)]
        self.b = [Fraction(v) for v in b]
        self.lower = [Fraction(v) for v in lower]
        self.upper = [None if math.isinf(v) else Fraction(v) for v in upper]

    def bound(self, j, status):
        if status == _AT_LOWER:
            return self.lower[j]
        hi = self.upper[j]
        if hi is None:
            raise ArithmeticError("nonbasic variable resting on an infinite bound")
        return hi

    def _binv(self, basis):
        return _exact_inverse([self.cols[j] for j in basis])

    def basic_values(self, basis, statuses, binv=None):
        rhs = list(self.b)
        in_basis = set(basis)
        for j in range(self.n):
            if j in in_basis:
                continue
            v = self.bound(j, statuses[j])
            if v != 0:
                col = self.cols[j]
                for i in range(self.m):
                    if col[i] != 0:
                        rhs[i] -= col[i] * v
        binv = binv if binv is not None else self._binv(basis)
        return _matvec(binv, rhs)

    def duals(self, basis, binv):
        cb = [self.c[j] for j in basis]
        # y = B^-T c_B; binv is row-major B^-1, so y_i = sum_k binv[k][i] c_k.
        return [
            sum(binv[k][i] * cb[k] for k in range(self.m) if cb[k] != 0 and binv[k][i] != 0)
            for i in range(self.m)
        ]

    def reduced_cost(self, j, y):
        r = self.c[j]
        col = self.cols[j]
        for i in range(self.m):
            if y[i] != 0 and col[i] != 0:
                r -= y[i] * col[i]
        return r

    def check_primal(self, basis, xb):
        for i, j in enumerate(basis):
            hi = self.upper[j]
            if xb[i] < self.lower[j] or (hi is not None and xb[i] > hi):
                raise _ExactInfeasible(f"column {j} exactly out of bounds")

    def objective(self, basis, statuses, xb):
        total = Fraction(0)
        in_basis = set(basis)
        for i, j in enumerate(basis):
            if self.c[j] != 0:
                total += self.c[j] * xb[i]
        for j in range(self.n):
            if j not in in_basis and self.c[j] != 0:
                total += self.c[j] * self.bound(j, statuses[j])
        return total

    def lagrangian_bound(self, y):
        """b.y + sum_j min over the box of (c_j - y.A_j) x_j.

        A valid lower bound on the minimum for any multipliers y; exact
        equality holds when the basis is dual feasible.
        """
        total = Fraction(0)
        for bi, yi in zip(self.b, y):
            if bi != 0 and yi != 0:
                total += bi * yi
        for j in range(self.n):
            r = self.reduced_cost(j, y)
            if r > 0:
                lo = self.lower[j]
                if lo != 0:
                    total += r * lo
            elif r < 0:
                hi = self.upper[j]
                if hi is None:
                    return None  # unbounded direction; caller treats as no bound
                if hi != 0:
                    total += r * hi
        return total

    def audit(self, basis, statuses):
        """Exact primal value, dual bound and gap at the given vertex."""
        binv = self._binv(basis)
        xb = self.basic_values(basis, statuses, binv=binv)
        self.check_primal(basis, xb)
        y = self.duals(basis, binv)
        primal = self.objective(basis, statuses, xb)
        dual = self.lagrangian_bound(y)
        return xb, primal, dual

    def optimize(self, basis, statuses):
        """Bland's simplex in exact arithmetic from a feasible basis."""
        basis, statuses = list(basis), list(statuses)
        for iteration in range(_MAX_ITER):
            binv = self._binv(basis)
            xb = self.basic_values(basis, statuses, binv=binv)
            self.check_primal(basis, xb)
            y = self.duals(basis, binv)
            in_basis = set(basis)
            entering = None
            for j in range(self.n):
                if j in in_basis or self.lower[j] == self.upper[j]:
                    continue
                r = self.reduced_cost(j, y)
                if (statuses[j] == _AT_LOWER and r < 0) or (
                    statuses[j] == _AT_UPPER and r > 0
                ):
                    entering = j
                    break
            if entering is None:
                return basis, statuses, xb, iteration
            sigma = 1 if statuses[entering] == _AT_LOWER else -1
            w = _matvec(binv, self.cols[entering])

            hi_e = self.upper[entering]
            t_best = None if hi_e is None else hi_e - self.lower[entering]
            leave = None
            for i in range(self.m):
                step = sigma * w[i]
                if step > 0:
                    t = (xb[i] - self.lower[basis[i]]) / step
                elif step < 0:
                    hi = self.upper[basis[i]]
                    if hi is None:
                        continue
                    t = (hi - xb[i]) / -step
                else:
                    continue
                if t < 0:
                    t = Fraction(0)
                if (
                    t_best is None
                    or t < t_best
                    or (t == t_best and (leave is None or basis[i] < basis[leave]))
                ):
                    t_best = t
                    leave = i
            if leave is None:
                if t_best is None:
                    raise ArithmeticError("LP unbounded in exact phase")
                statuses[entering] = (
                    _AT_UPPER if statuses[entering] == _AT_LOWER else _AT_LOWER
                )
                continue
            out = basis[leave]
            statuses[out] = _AT_LOWER if sigma * w[leave] > 0 else _AT_UPPER
            basis[leave] = entering
            statuses[entering] = _AT_LOWER
        raise ArithmeticError("exact simplex exceeded iteration limit")


# ---------------------------------------------------------------------------
# driver


def solve_boxed_lp(c, A, b, lower, upper, round_down=True,
                   gap_tol=_DEFAULT_GAP_TOL) -> SimplexResult:
    """Certified minimum of c.x over {A x = b, lower <= x <= upper}."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not np.all(np.isfinite(lower)):
        raise ValueError("lower bounds must be finite")
    m, n = A.shape

    # Extended problem: one +e_i and one -e_i artificial per row, so both
    # the float pass and the exact fallback can start feasible whatever
    # the sign of their residual.
    A_ext = np.hstack([A, np.eye(m), -np.eye(m)])
    lo_ext = np.concatenate([lower, np.zeros(2 * m)])
    hi_phase1 = np.concatenate([upper, np.full(2 * m, math.inf)])
    c_phase1 = np.concatenate([np.zeros(n), np.ones(2 * m)])
    c_phase2 = np.concatenate([c, np.zeros(2 * m)])
    hi_phase2 = np.concatenate([upper, np.zeros(2 * m)])

    residual = b - A @ lower
    basis = [n + i if residual[i] >= 0 else n + m + i for i in range(m)]
    statuses = [_AT_LOWER] * (n + 2 * m)
    sim = _FloatSimplex(c_phase1, A_ext, b, lo_ext, hi_phase1, basis, statuses)
    it1 = sim.run()
    art_gap = sum(abs(v) for j, v in zip(sim.basis, sim.basic_values()) if j >= n)

    def exact_phase1():
        prob1 = _ExactProblem(c_phase1, A_ext, b, lo_ext, hi_phase1)
        r = [Fraction(v) for v in b]
        for jj in range(n):
            lj = prob1.lower[jj]
            if lj != 0:
                col = prob1.cols[jj]
                for ii in range(m):
                    if col[ii] != 0:
                        r[ii] -= col[ii] * lj
        start = [n + i if r[i] >= 0 else n + m + i for i in range(m)]
        return prob1, prob1.optimize(start, [_AT_LOWER] * (n + 2 * m))

    def infeasible_result(prob1, basis1, statuses1, xb1, iters):
        gap = prob1.objective(basis1, statuses1, xb1)
        worst, worst_val = None, Fraction(0)
        for i, j in enumerate(basis1):
            if j >= n and xb1[i] > worst_val:
                worst_val = xb1[i]
                worst = (j - n) % m
        return SimplexResult(
            status="infeasible",
            infeasibility=float(gap),
            worst_row=worst,
            float_iterations=iters,
        )

    if art_gap > _PHASE1_TOL:
        prob1, (basis1, statuses1, xb1, _) = exact_phase1()
        if prob1.objective(basis1, statuses1, xb1) > 0:
            return infeasible_result(prob1, basis1, statuses1, xb1, it1)
        basis, statuses = basis1, statuses1
    else:
        sim.drive_out(n)
        basis, statuses = sim.basis, sim.statuses

    sim = _FloatSimplex(c_phase2, A_ext, b, lo_ext, hi_phase2, list(basis), list(statuses))
    try:
        it2 = sim.run()
        basis, statuses = sim.basis, list(sim.statuses)
    except ArithmeticError:
        # Float pass stalled on degeneracy; the exact pass optimizes from
        # the feasible phase-1 vertex instead.
        it2 = _MAX_ITER
        basis, statuses = list(basis), list(statuses)

    prob = _ExactProblem(c_phase2, A_ext, b, lo_ext, hi_phase2)
    exact_it = 0
    try:
        xb, primal, dual = prob.audit(basis, statuses)
        if dual is None or primal - dual > Fraction(gap_tol):
            basis, statuses, xb, exact_it = prob.optimize(basis, statuses)
            xb, primal, dual = prob.audit(basis, statuses)
    except _ExactInfeasible:
        # The float vertex is exactly out of bounds (data nearly or truly
        # inconsistent): settle feasibility exactly, then re-optimize.
        prob1, (basis1, statuses1, xb1, more) = exact_phase1()
        if prob1.objective(basis1, statuses1, xb1) > 0:
            return infeasible_result(prob1, basis1, statuses1, xb1, it1 + it2)
        basis, statuses, xb, exact_it = prob.optimize(basis1, statuses1)
        exact_it += more
        xb, primal, dual = prob.audit(basis, statuses)

    exact_obj = dual if dual is not None else primal
    x = np.empty(n)
    position = {j: i for i, j in enumerate(basis)}
    for j in range(n):
        if j in position:
            x[j] = float(xb[position[j]])
        else:
            x[j] = float(prob.bound(j, statuses[j]))
    return SimplexResult(
        status="optimal",
        objective=round_directed(exact_obj, down=round_down),
        x=x,
        basis=tuple(int(j) for j in basis),
        statuses=tuple(int(s) for s in statuses[:n]),
        exact_objective=exact_obj,
        primal_objective=round_directed(primal, down=not round_down),
        gap=round_directed(primal - exact_obj, down=False),
        float_iterations=it1 + it2,
        exact_iterations=exact_it,
    )
