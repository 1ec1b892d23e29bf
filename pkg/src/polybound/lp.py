"""Exact rational linear programming.

``solve`` returns exact optima and exact infeasible/unbounded verdicts.  Two
routes produce them:

* ``"certified"``: HiGHS solves the LP in floating point, the primal and dual
  (or Farkas / ray) vectors are rounded to nearby rationals, and the result is
  only accepted after an exact check of feasibility and strong duality.
* ``"simplex"``: a dense two-phase tableau simplex over ``Fraction`` with
  Dantzig pricing that falls back to Bland's rule on degenerate stretches.

``method="auto"`` tries the certified route and falls back to the simplex when
the rounded vectors fail their exact check, so every returned answer has been
established in exact arithmetic.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sparse
from scipy.optimize import linprog

from .rationals import INF, ExtRational

LE, GE, EQ = "<=", ">=", "="
_RELS = (LE, GE, EQ)
_DENOMINATOR_LIMITS = (1, 64, 10_080, 10**7)
_MARGIN = 1e-3  # right-hand-side slack for the dual re-solve
_BLAND_AFTER = 8

Coeffs = Union[Mapping[int, Fraction], Sequence[Fraction]]


class LPError(ValueError):
    """Structurally invalid linear program."""


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LinearProgram:
    """Variables, sparse constraint rows and a linear objective.

    Rows are stored as ``{variable index: coefficient}``; a dense row passed to
    :meth:`add_constraint` must have exactly one entry per variable.
    """

    def __init__(self, sense: str = "max"):
        self.names: list[str] = []
        self.nonneg: list[bool] = []
        self.rows: list[tuple[dict[int, Fraction], str, Fraction]] = []
        self.objective: dict[int, Fraction] = {}
        self.sense = sense

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def add_var(self, name: Optional[str] = None, nonneg: bool = True) -> int:
        self.names.append(name if name is not None else f"x{len(self.names)}")
        self.nonneg.append(nonneg)
        return len(self.names) - 1

    def _row(self, coeffs: Coeffs) -> dict[int, Fraction]:
        if isinstance(coeffs, Mapping):
            row = {}
            for j, a in coeffs.items():
                if not 0 <= j < self.num_vars:
                    raise LPError(f"coefficient for unknown variable {j}")
                a = _num(a)
                if a:
                    row[j] = row.get(j, 0) + a
            return row
        coeffs = list(coeffs)
        if len(coeffs) != self.num_vars:
            raise LPError(f"row has {len(coeffs)} entries for {self.num_vars} variables")
        return {j: _num(a) for j, a in enumerate(coeffs) if a}

    def add_constraint(self, coeffs: Coeffs, rel: str, rhs) -> int:
        if rel not in _RELS:
            raise LPError(f"unknown relation {rel!r}")
        self.rows.append((self._row(coeffs), rel, Fraction(_num(rhs))))
        return len(self.rows) - 1

    def set_objective(self, coeffs: Coeffs, sense: Optional[str] = None) -> None:
        if sense is not None:
            self.sense = sense
        self.objective = self._row(coeffs)

    def check(self) -> None:
        if self.sense not in ("max", "min"):
            raise LPError(f"unknown sense {self.sense!r}")
        n = self.num_vars
        for r, (row, rel, _) in enumerate(self.rows):
            if rel not in _RELS:
                raise LPError(f"row {r}: unknown relation {rel!r}")
            if any(not 0 <= j < n for j in row):
                raise LPError(f"row {r}: coefficient for unknown variable")
        if any(not 0 <= j < n for j in self.objective):
            raise LPError("objective mentions an unknown variable")

    def add_rows(self, rows: Iterable[tuple[dict, str, Fraction]]) -> None:
        """Append prepared rows verbatim (shared, never mutated)."""
        self.rows.extend(rows)

    def evaluate(self, x: Sequence[Fraction]) -> Fraction:
        return Fraction(sum(a * x[j] for j, a in self.objective.items()))

    def violations(self, x: Sequence[Fraction]) -> list[str]:
        """Exact re-substitution of ``x`` into every bound and row."""
        out = []
        for j, v in enumerate(x):
            if self.nonneg[j] and v < 0:
                out.append(f"{self.names[j]} = {v} < 0")
        X, D = _scaled(x)
        for r, (row, rel, rhs) in enumerate(self.rows):
            lhs = sum(a * X[j] for j, a in row.items())
            if not _holds(lhs, rel, rhs * D):
                out.append(f"row {r}: {Fraction(lhs, 1) / D} {rel} {rhs} fails")
        return out


def _num(a):
    """Exact coefficient; integral values stay ``int`` so checks run in integers."""
    if isinstance(a, bool):
        raise LPError(f"bad coefficient {a!r}")
    if isinstance(a, int):
        return a
    a = Fraction(a)
    return a.numerator if a.denominator == 1 else a


def _scaled(values: Sequence[Fraction]) -> tuple[list[int], int]:
    """Integers ``X`` and a common denominator ``D`` with ``values[j] = X[j] / D``."""
    D = 1
    for v in values:
        d = v.denominator
        if D % d:
            D = D * d // math.gcd(D, d)
    return [v.numerator * (D // v.denominator) for v in values], D


def _holds(lhs, rel, rhs) -> bool:
    if rel == LE:
        return lhs <= rhs
    if rel == GE:
        return lhs >= rhs
    return lhs == rhs


@dataclass(frozen=True)
class LpOutcome:
    status: Status
    objective: ExtRational
    x: Optional[tuple[Fraction, ...]] = None
    names: tuple[str, ...] = ()
    method: str = ""

    @property
    def assignment(self) -> dict[str, Fraction]:
        if self.x is None:
            return {}
        return dict(zip(self.names, self.x))


def solve(lp: LinearProgram, method: str = "auto") -> LpOutcome:
    lp.check()
    if method == "simplex":
        return _simplex(lp)
    if method not in ("auto", "certified"):
        raise LPError(f"unknown method {method!r}")
    out = _certified(lp)
    if out is None:
        if method == "certified":
            raise ArithmeticError("floating-point solution could not be certified")
        out = _simplex(lp)
    return out


# -- certified route -----------------------------------------------------------


def _max_costs(lp: LinearProgram) -> dict[int, Fraction]:
    if lp.sense == "max":
        return dict(lp.objective)
    return {j: -a for j, a in lp.objective.items()}


def _finish(lp: LinearProgram, status: Status, x=None, method="") -> LpOutcome:
    sign = 1 if lp.sense == "max" else -1
    if status is Status.OPTIMAL:
        val = lp.evaluate(x)
    elif status is Status.UNBOUNDED:
        val = sign * INF
    else:
        val = -sign * INF
    return LpOutcome(status, val, tuple(x) if x is not None else None, tuple(lp.names), method)


_IPM_ROWS = 4000


def _float_matrix(rows, n, scale_rows=None):
    data, ri, ci = [], [], []
    for r, row in enumerate(rows):
        s = 1.0 if scale_rows is None else scale_rows[r]
        for j, a in row.items():
            data.append(s * float(a))
            ri.append(r)
            ci.append(j)
    return sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))


def _highs(c, ub_rows, ub_rhs, eq_rows, eq_rhs, bounds, n, method="highs-ds"):
    kw = {}
    if ub_rows:
        kw["A_ub"] = _float_matrix(ub_rows, n)
        kw["b_ub"] = np.array(ub_rhs, dtype=float)
    if eq_rows:
        kw["A_eq"] = _float_matrix(eq_rows, n)
        kw["b_eq"] = np.array(eq_rhs, dtype=float)
    return linprog(np.array(c, dtype=float), bounds=bounds, method=method, **kw)


def _round(values, limit) -> list[Fraction]:
    out = []
    for v in values:
        if abs(v) < 1e-11:
            out.append(Fraction(0))
        else:
            out.append(Fraction(float(v)).limit_denominator(limit))
    return out


def _split(lp: LinearProgram):
    """Rows as HiGHS wants them: (<= rows with their origin, = rows)."""
    ub, ub_rhs, ub_src, eq, eq_rhs, eq_src = [], [], [], [], [], []
    for r, (row, rel, rhs) in enumerate(lp.rows):
        if rel == LE:
            ub.append(row), ub_rhs.append(float(rhs)), ub_src.append((r, 1))
        elif rel == GE:
            ub.append({j: -a for j, a in row.items()}), ub_rhs.append(-float(rhs)), ub_src.append((r, -1))
        else:
            eq.append(row), eq_rhs.append(float(rhs)), eq_src.append(r)
    return ub, ub_rhs, ub_src, eq, eq_rhs, eq_src


def _dual_ok(lp: LinearProgram, y: Sequence[Fraction], costs: Mapping[int, Fraction]) -> bool:
    for (_, rel, _), v in zip(lp.rows, y):
        if (rel == LE and v < 0) or (rel == GE and v > 0):
            return False
    Y, D = _scaled(y)
    aty = [0] * lp.num_vars
    for (row, _, _), v in zip(lp.rows, Y):
        if v:
            for j, a in row.items():
                aty[j] += a * v
    for j in range(lp.num_vars):
        d = aty[j] - costs.get(j, 0) * D
        if d < 0 or (d and not lp.nonneg[j]):
            return False
    return True


def _certified(lp: LinearProgram) -> Optional[LpOutcome]:
    n = lp.num_vars
    costs = _max_costs(lp)
    ub, ub_rhs, ub_src, eq, eq_rhs, eq_src = _split(lp)
    bounds = [(0, None) if nn else (None, None) for nn in lp.nonneg]
    c = [0.0] * n
    for j, a in costs.items():
        c[j] = -float(a)
    if n == 0:
        return None
    # interior point plus crossover is much faster on big lattice LPs; each
    # solver gets a turn before falling back to the exact simplex
    order = ("highs-ipm", "highs-ds") if len(lp.rows) > _IPM_ROWS else ("highs-ds", "highs-ipm")
    optimal = None
    for method in order:
        res = _highs(c, ub, ub_rhs, eq, eq_rhs, bounds, n, method)
        out = _certify(lp, res, costs, ub, ub_src, eq, eq_src)
        if out is not None:
            return out
        if res.status == 0 and optimal is None:
            optimal = res
    if optimal is None:
        return None
    # degenerate optima can leave the marginals too noisy to round
    for limit in _DENOMINATOR_LIMITS:
        x = _round(optimal.x, limit)
        if not lp.violations(x):
            if _perturbed_dual(lp, x, costs, ub, ub_rhs, ub_src, eq, eq_rhs, eq_src, order[0]) is not None:
                return _finish(lp, Status.OPTIMAL, x, "certified")
            break
    return None


def _marginals(lp, res, ub, ub_src, eq, eq_src) -> list[float]:
    """Float duals in the sign convention of the original rows."""
    y_f = [0.0] * len(lp.rows)
    if ub:
        for (r, s), m in zip(ub_src, res.ineqlin.marginals):
            y_f[r] = -s * m
    if eq:
        for r, m in zip(eq_src, res.eqlin.marginals):
            y_f[r] = -m
    return y_f


def _certify(lp, res, costs, ub, ub_src, eq, eq_src) -> Optional[LpOutcome]:
    if res.status == 0:
        y_f = _marginals(lp, res, ub, ub_src, eq, eq_src)
        for limit in _DENOMINATOR_LIMITS:
            x = _round(res.x, limit)
            if lp.violations(x):
                continue
            y = _round(y_f, limit)
            if not _dual_ok(lp, y, costs):
                continue
            primal = Fraction(sum(a * x[j] for j, a in costs.items()))
            dual = Fraction(sum(rhs * v for (_, _, rhs), v in zip(lp.rows, y) if v))
            if primal == dual:
                return _finish(lp, Status.OPTIMAL, x, "certified")
        return None
    if res.status in (2, 3, 4):
        if _farkas(lp):
            return _finish(lp, Status.INFEASIBLE, method="certified")
        if _ray(lp, costs):
            return _finish(lp, Status.UNBOUNDED, method="certified")
    return None


def _perturbed_dual(lp: LinearProgram, x, costs, ub, ub_rhs, ub_src, eq, eq_rhs, eq_src, method):
    """Re-solve with every inequality loosened by a small margin.

    The perturbed dual optimum is a vertex of the original optimal dual face
    that also minimises the total dual mass, which rounds far better than
    the arbitrary vertex a degenerate solve reports.
    """
    bounds = [(0, None) if nn else (None, None) for nn in lp.nonneg]
    c = [0.0] * lp.num_vars
    for j, a in costs.items():
        c[j] = -float(a)
    res = _highs(c, ub, [b + _MARGIN for b in ub_rhs], eq, eq_rhs, bounds, lp.num_vars, method)
    if res.status != 0:
        return None
    y_f = _marginals(lp, res, ub, ub_src, eq, eq_src)
    primal = sum((a * x[j] for j, a in costs.items()), Fraction(0))
    for limit in _DENOMINATOR_LIMITS:
        y = _round(y_f, limit)
        if _dual_ok(lp, y, costs) and sum((rhs * v for (_, _, rhs), v in zip(lp.rows, y) if v), Fraction(0)) == primal:
            return y
    return None


def _farkas(lp: LinearProgram) -> bool:
    """Look for y with A^T y >= 0 (= 0 on free vars), sign-feasible, b.y < 0."""
    m, n = len(lp.rows), lp.num_vars
    if m == 0:
        return False
    cols: list[dict[int, Fraction]] = [dict() for _ in range(n)]
    for r, (row, _, _) in enumerate(lp.rows):
        for j, a in row.items():
            cols[j][r] = a
    ub, ub_rhs, eq, eq_rhs = [], [], [], []
    for j, col in enumerate(cols):
        if lp.nonneg[j]:
            if col:
                ub.append({r: -a for r, a in col.items()}), ub_rhs.append(0.0)
        elif col:
            eq.append(col), eq_rhs.append(0.0)
    b = {r: rhs for r, (_, _, rhs) in enumerate(lp.rows) if rhs}
    if not b:
        return False
    ub.append({r: -v for r, v in b.items()}), ub_rhs.append(1.0)
    bounds = [(0, None) if rel == LE else (None, 0) if rel == GE else (None, None) for _, rel, _ in lp.rows]
    obj = [0.0] * m
    for r, v in b.items():
        obj[r] = float(v)
    res = _highs(obj, ub, ub_rhs, eq, eq_rhs, bounds, m)
    if res.status != 0 or res.fun > -1e-9:
        return False
    for limit in _DENOMINATOR_LIMITS:
        y = _round(res.x, limit)
        if sum((v * y[r] for r, v in b.items()), Fraction(0)) >= 0:
            continue
        if _dual_ok(lp, y, {}):
            return True
    return False


def _ray(lp: LinearProgram, costs: Mapping[int, Fraction]) -> bool:
    """A feasible point plus a recession direction improving the objective."""
    n = lp.num_vars
    ub, ub_rhs, _, eq, eq_rhs, _ = _split(lp)
    bounds = [(0, None) if nn else (None, None) for nn in lp.nonneg]
    res = _highs([0.0] * n, ub, ub_rhs, eq, eq_rhs, bounds, n)
    if res.status != 0:
        return False
    point = None
    for limit in _DENOMINATOR_LIMITS:
        x = _round(res.x, limit)
        if not lp.violations(x):
            point = x
            break
    if point is None:
        return False
    hub = list(ub) + [dict(costs)]
    hub_rhs = [0.0] * len(ub) + [1.0]
    rbounds = [(0, 1) if nn else (-1, 1) for nn in lp.nonneg]
    c = [0.0] * n
    for j, a in costs.items():
        c[j] = -float(a)
    res = _highs(c, hub, hub_rhs, eq, [0.0] * len(eq), rbounds, n)
    if res.status != 0 or res.fun > -1e-9:
        return False
    for limit in _DENOMINATOR_LIMITS:
        d = _round(res.x, limit)
        if sum((a * d[j] for j, a in costs.items()), Fraction(0)) <= 0:
            continue
        if any(lp.nonneg[j] and d[j] < 0 for j in range(n)):
            continue
        ok = True
        for row, rel, _ in lp.rows:
            lhs = sum((a * d[j] for j, a in row.items()), Fraction(0))
            if (rel == LE and lhs > 0) or (rel == GE and lhs < 0) or (rel == EQ and lhs != 0):
                ok = False
                break
        if ok:
            return True
    return False


# -- exact simplex ---------------------------------------------------------------


def _simplex(lp: LinearProgram) -> LpOutcome:
    n = lp.num_vars
    costs = _max_costs(lp)
    # column map: (var, sign) for every structural column
    col_src: list[tuple[int, int]] = []
    for j in range(n):
        col_src.append((j, 1))
        if not lp.nonneg[j]:
            col_src.append((j, -1))
    ns = len(col_src)

    rows = []
    for row, rel, rhs in lp.rows:
        dense = [Fraction(0)] * ns
        for c_idx, (j, s) in enumerate(col_src):
            a = row.get(j)
            if a:
                dense[c_idx] = Fraction(s * a)
        if not any(dense):
            if not _holds(Fraction(0), rel, rhs):
                return _finish(lp, Status.INFEASIBLE, method="simplex")
            continue
        # a ">= 0" row is flipped too, so its slack can start in the basis
        if rhs < 0 or (rhs == 0 and rel == GE):
            dense = [-a for a in dense]
            rhs = -rhs
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        rows.append((dense, rel, rhs))

    m = len(rows)
    n_slack = sum(1 for _, rel, _ in rows if rel != EQ)
    n_art = sum(1 for _, rel, _ in rows if rel != LE)
    width = ns + n_slack + n_art
    first_art = ns + n_slack
    T: list[list[Fraction]] = []
    basis: list[int] = []
    s_next, a_next = ns, first_art
    for dense, rel, rhs in rows:
        line = dense + [Fraction(0)] * (n_slack + n_art) + [rhs]
        if rel == LE:
            line[s_next] = Fraction(1)
            basis.append(s_next)
            s_next += 1
        else:
            if rel == GE:
                line[s_next] = Fraction(-1)
                s_next += 1
            line[a_next] = Fraction(1)
            basis.append(a_next)
            a_next += 1
        T.append(line)

    if n_art:
        phase1 = [Fraction(0)] * width
        for c_idx in range(first_art, width):
            phase1[c_idx] = Fraction(1)
        _run(T, basis, phase1, width)
        infeas = sum((T[r][-1] for r in range(m) if basis[r] >= first_art), Fraction(0))
        if infeas > 0:
            return _finish(lp, Status.INFEASIBLE, method="simplex")
        r = 0
        while r < len(T):
            if basis[r] >= first_art:
                piv = next((c for c in range(first_art) if T[r][c]), None)
                if piv is None:
                    del T[r]
                    del basis[r]
                    continue
                _pivot(T, basis, r, piv)
            r += 1
        for line in T:
            del line[first_art:width]
        width = first_art

    phase2 = [Fraction(0)] * width
    for c_idx, (j, s) in enumerate(col_src):
        phase2[c_idx] = Fraction(-s * costs.get(j, 0))
    if not _run(T, basis, phase2, width):
        return _finish(lp, Status.UNBOUNDED, method="simplex")
    x = [Fraction(0)] * n
    for r, b in enumerate(basis):
        if b < ns:
            j, s = col_src[b]
            x[j] += s * T[r][-1]
    return _finish(lp, Status.OPTIMAL, x, "simplex")


def _pivot(T, basis, r, c) -> None:
    piv = T[r][c]
    if piv != 1:
        T[r] = [v / piv for v in T[r]]
    prow = T[r]
    for i, line in enumerate(T):
        if i != r:
            f = line[c]
            if f:
                T[i] = [a - f * b if b else a for a, b in zip(line, prow)]
    basis[r] = c


def _run(T, basis, cost, width) -> bool:
    """Minimise ``cost`` from the current feasible basis; False when unbounded.

    Entering column by most negative reduced cost, except during a run of
    degenerate pivots, where Bland's smallest-index rule takes over.  Bland
    cannot cycle, so every degenerate run ends and the objective strictly
    improves between runs: termination is guaranteed.
    """
    z = [Fraction(c) for c in cost[:width]]
    for r, b in enumerate(basis):
        cb = cost[b]
        if cb:
            line = T[r]
            for c in range(width):
                if line[c]:
                    z[c] -= cb * line[c]
    degenerate = 0
    while True:
        if degenerate >= _BLAND_AFTER:
            entering = next((c for c in range(width) if z[c] < 0), None)
        else:
            entering = min(range(width), key=z.__getitem__)
            if z[entering] >= 0:
                entering = None
        if entering is None:
            return True
        best, best_r = None, None
        for r, line in enumerate(T):
            a = line[entering]
            if a > 0:
                ratio = line[-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[best_r]):
                    best, best_r = ratio, r
        if best_r is None:
            return False
        degenerate = degenerate + 1 if best == 0 else 0
        _pivot(T, basis, best_r, entering)
        f = z[entering]
        prow = T[best_r]
        z = [a - f * b if b else a for a, b in zip(z, prow[:width])]
