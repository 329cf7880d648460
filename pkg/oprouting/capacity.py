# -----------------------------------------------------------------------------
# MIT License
#
# Copyright (c) 2024 OpRouting Team
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
# -----------------------------------------------------------------------------

"""Stability-region membership of an arrival vector via stationary randomized routing."""
import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .exceptions import LPNumericalFailure, NotConnected
from .model import NetworkModel, connected_relays
from .simplex import TwoPhaseSimplex
from .utils.static_funcs import members

logger = logging.getLogger(__name__)

#: Optimal slack above which an arrival vector counts as interior.
INTERIOR_TOL = 1e-9
#: Default bisection tolerance of :func:`scale_to_boundary`.
BOUNDARY_TOL = 1e-7

Witness = Dict[Tuple[int, int], Dict[int, float]]


class CapacityResult:
    """Outcome of :func:`stability_lp_feasible`.

    Attributes:
        feasible: The arrival vector lies in the interior of the stability region.
        slack: Largest ``eps`` such that ``lambda + eps`` is supported (negative outside the region).
        witness: Stationary randomized policy attaining ``slack``: for every ``(relay, support set bitmask)`` a
            distribution over forwarders.
    """
    __slots__ = ('feasible', 'slack', 'witness')

    def __init__(self, feasible: bool, slack: float, witness: Witness):
        self.feasible = feasible
        self.slack = slack
        self.witness = witness

    def to_dict(self) -> dict:
        return {"feasible": self.feasible,
                "slack": self.slack,
                "witness": [{"node": i, "set": list(members(mask)), "forwarders": {str(j): p for j, p in dist.items()}}
                            for (i, mask), dist in sorted(self.witness.items())]}

    def __repr__(self):
        return f"CapacityResult(feasible={self.feasible}, slack={self.slack})"


class _FlowProgram:
    """Column layout of the flow program: one variable per (relay, non-delivering support set, forwarder)."""

    def __init__(self, m: NetworkModel, relays: List[int]):
        self.relays = relays
        self.row_of = {k: r for r, k in enumerate(relays)}
        allowed = set(relays)
        self.columns: List[Tuple[int, int, int, float]] = []
        self.groups: List[List[int]] = []
        self.forced: Dict[Tuple[int, int], float] = dict()
        self.delivery = np.zeros(len(relays))
        for i in relays:
            for mask, p in m.entries(i):
                if mask & 1:
                    self.forced[(i, mask)] = p
                    self.delivery[self.row_of[i]] += p
                    continue
                group = []
                for j in members(mask):
                    if j == i or j in allowed:
                        group.append(len(self.columns))
                        self.columns.append((i, mask, j, p))
                self.groups.append(group)

    def matrices(self, lam: np.ndarray):
        """``maximize e_plus - e_minus`` with ``in_k - out_k + eps <= delivery_k - lambda_k`` per relay."""
        n_x = len(self.columns)
        n_rows = len(self.relays)
        A_ub = np.zeros((n_rows, n_x + 2))
        for col, (i, _, j, p) in enumerate(self.columns):
            if j != i:
                A_ub[self.row_of[i], col] -= p
                A_ub[self.row_of[j], col] += p
        A_ub[:, n_x] = 1.0
        A_ub[:, n_x + 1] = -1.0
        b_ub = self.delivery - lam
        A_eq = np.zeros((len(self.groups), n_x + 2))
        for r, group in enumerate(self.groups):
            A_eq[r, group] = 1.0
        b_eq = np.ones(len(self.groups))
        c = np.zeros(n_x + 2)
        c[n_x] = 1.0
        c[n_x + 1] = -1.0
        return c, A_ub, b_ub, A_eq, b_eq

    def witness(self, x: np.ndarray) -> Witness:
        out: Witness = {key: {0: 1.0} for key in self.forced}
        for group in self.groups:
            i, mask = self.columns[group[0]][:2]
            weights = np.clip(x[group], 0.0, None)
            total = weights.sum()
            weights = weights / total if total > 0 else np.full(len(group), 1.0 / len(group))
            out[(i, mask)] = {self.columns[col][2]: float(w) for col, w in zip(group, weights)}
        return out


def _solve(c, A_ub, b_ub, A_eq, b_eq, solver: str) -> np.ndarray:
    if solver == 'simplex':
        result = TwoPhaseSimplex().solve(c, A_ub, b_ub, A_eq, b_eq, maximize=True)
        if not result.success:
            raise LPNumericalFailure(f"Simplex failed on the capacity program: {result.status}")
        return result.x
    if solver == 'scipy':
        from scipy.optimize import linprog
        res = linprog(-np.asarray(c), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method='highs')
        if res.status != 0:
            raise LPNumericalFailure(f"linprog failed on the capacity program: {res.message}")
        return res.x
    raise ValueError(f"Unknown LP solver '{solver}', expected 'simplex' or 'scipy'")


def stability_lp_feasible(m: NetworkModel, lam: Sequence[float], solver: str = 'simplex') -> CapacityResult:
    """Maximize the common slack ``eps`` with which a stationary randomized policy supports ``lam``.

    For every relay ``k`` the expected net outflow must satisfy ``out_k - in_k >= lam_k + eps``; sets containing the
    destination always deliver. Relays without a path to the destination are left out of the program, and routing
    into them is not allowed.

    Args:
        m: Network model.
        lam: Arrival rates of relays ``1..N``.
        solver: ``simplex`` (built-in) or ``scipy`` (HiGHS).

    Raises:
        NotConnected: Some relay with positive rate cannot reach the destination.
        LPNumericalFailure: The solver did not reach an optimum.
    """
    lam = np.asarray(lam, dtype=float)
    assert len(lam) == m.n_relays, f"Expected {m.n_relays} arrival rates, got {len(lam)}"
    assert (lam >= 0).all(), f"Arrival rates must be non-negative, got {lam.tolist()}"
    relays = connected_relays(m)
    stranded = [k for k in m.relays if k not in set(relays) and lam[k - 1] > 0]
    if stranded:
        raise NotConnected(f"Relays {stranded} receive traffic but cannot reach the destination")
    if not relays:
        logger.warning("No relay reaches the destination; only the zero arrival vector is supported")
        return CapacityResult(True, 0.0, dict())

    program = _FlowProgram(m, relays)
    c, A_ub, b_ub, A_eq, b_eq = program.matrices(lam[np.array(relays) - 1])
    x = _solve(c, A_ub, b_ub, A_eq, b_eq, solver)
    n_x = len(program.columns)
    slack = float(x[n_x] - x[n_x + 1])
    logger.debug("Capacity program with %d variables: slack %.17g", n_x + 2, slack)
    return CapacityResult(slack > INTERIOR_TOL, slack, program.witness(x[:n_x]))


def expected_flows(m: NetworkModel, witness: Witness) -> np.ndarray:
    """Expected net outflow ``out_k - in_k`` of every relay under a stationary randomized policy."""
    net = np.zeros(m.n_relays + 1)
    for i in m.relays:
        for mask, p in m.entries(i):
            dist = witness.get((i, mask))
            if dist is None:
                continue
            for j, share in dist.items():
                if j != i:
                    net[i] += p * share
                    net[j] -= p * share
    return net[1:]


def scale_to_boundary(m: NetworkModel, direction: Sequence[float], tol: float = BOUNDARY_TOL,
                      solver: str = 'simplex') -> float:
    """``sup{theta : theta * direction is interior}`` by bisection on :func:`stability_lp_feasible`.

    Returns 0 when the direction puts traffic on a relay that cannot reach the destination.
    """
    d = np.asarray(direction, dtype=float)
    assert (d >= 0).all() and d.sum() > 0, f"Direction must be non-negative and nonzero, got {d.tolist()}"
    relays = set(connected_relays(m))
    if any(d[k - 1] > 0 and k not in relays for k in m.relays):
        return 0.0
    lo, hi = 0.0, 1.0 / d.max()
    if stability_lp_feasible(m, hi * d, solver).feasible:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stability_lp_feasible(m, mid * d, solver).feasible:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    logger.info("Boundary scaling %.10g along %s", theta, d.tolist())
    return theta

