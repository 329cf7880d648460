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

"""Dense two-phase simplex for the small linear programs of the capacity module."""
import logging
from typing import List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

#: Pivot and reduced-cost tolerance.
PIVOT_TOL = 1e-10
#: Phase-one objective below which the program is declared infeasible.
FEASIBILITY_TOL = 1e-8


class LPResult:
    """Outcome of :meth:`TwoPhaseSimplex.solve`.

    Attributes:
        status: ``optimal``, ``infeasible``, ``unbounded`` or ``iteration_limit``.
        x: Optimal point (``None`` unless optimal).
        fun: Optimal objective value in the caller's sense (``nan`` unless optimal).
        iterations: Pivots over both phases.
    """
    __slots__ = ('status', 'x', 'fun', 'iterations')

    def __init__(self, status: str, x: Optional[np.ndarray] = None, fun: float = float('nan'), iterations: int = 0):
        self.status = status
        self.x = x
        self.fun = fun
        self.iterations = iterations

    @property
    def success(self) -> bool:
        return self.status == 'optimal'

    def __repr__(self):
        return f"LPResult(status={self.status}, fun={self.fun}, iterations={self.iterations})"


class TwoPhaseSimplex:
    """Tableau simplex with Bland's rule for ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``.

    Phase one minimizes the sum of artificial variables; artificials left in the basis afterwards are pivoted out,
    or their rows dropped when the row is redundant. Bland's rule excludes cycling; the iteration cap guards against
    numerical stalls.

    Args:
        max_iter: Pivot limit per phase; ``None`` means ``50 * (rows + columns)``.
    """

    def __init__(self, max_iter: Optional[int] = None):
        self.max_iter = max_iter

    @staticmethod
    def _pivot(T: np.ndarray, row: int, col: int):
        T[row, :] /= T[row, col]
        for r in range(T.shape[0]):
            if r != row and T[r, col] != 0.0:
                T[r, :] -= T[r, col] * T[row, :]

    @staticmethod
    def _entering(z: np.ndarray, allowed: int) -> int:
        candidates = np.flatnonzero(z[:allowed] < -PIVOT_TOL)
        return int(candidates[0]) if len(candidates) else -1

    @staticmethod
    def _leaving(T: np.ndarray, col: int, basis: List[int]) -> int:
        best, best_key = -1, None
        for i in range(T.shape[0] - 1):
            a = T[i, col]
            if a > PIVOT_TOL:
                key = (T[i, -1] / a, basis[i])
                if best_key is None or key < best_key:
                    best, best_key = i, key
        return best

    def _iterate(self, T: np.ndarray, basis: List[int], allowed: int, limit: int) -> Tuple[str, int]:
        for it in range(limit):
            col = self._entering(T[-1], allowed)
            if col == -1:
                return 'optimal', it
            row = self._leaving(T, col, basis)
            if row == -1:
                return 'unbounded', it
            self._pivot(T, row, col)
            basis[row] = col
        return 'iteration_limit', limit

    def solve(self, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, maximize: bool = False) -> LPResult:
        """Optimize ``c @ x``.

        Args:
            c: Objective coefficients, length n.
            A_ub: Inequality matrix (k x n) or ``None``.
            b_ub: Inequality right-hand side.
            A_eq: Equality matrix or ``None``.
            b_eq: Equality right-hand side.
            maximize: Maximize instead of minimize.

        Returns:
            The :class:`LPResult`.
        """
        c = np.asarray(c, dtype=float)
        n = len(c)
        A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
        b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
        A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
        b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
        n_ub, n_eq = len(b_ub), len(b_eq)
        m = n_ub + n_eq
        assert A_ub.shape[0] == n_ub and A_eq.shape[0] == n_eq, "Constraint matrix and right-hand side disagree"

        # columns: original | slack/surplus (one per inequality) | artificial (one per row needing it)
        A = np.vstack([A_ub, A_eq])
        b = np.concatenate([b_ub, b_eq])
        slack = np.zeros((m, n_ub))
        slack[np.arange(n_ub), np.arange(n_ub)] = 1.0
        flip = b < 0
        A[flip] *= -1
        slack[flip] *= -1
        b[flip] *= -1
        needs_artificial = [i for i in range(m) if i >= n_ub or flip[i]]
        n_art = len(needs_artificial)
        art = np.zeros((m, n_art))
        for col, row in enumerate(needs_artificial):
            art[row, col] = 1.0
        width = n + n_ub + n_art
        T = np.zeros((m + 1, width + 1))
        T[:m, :n] = A
        T[:m, n:n + n_ub] = slack
        T[:m, n + n_ub:width] = art
        T[:m, -1] = b
        basis = [n + i for i in range(n_ub)] + [0] * n_eq
        for col, row in enumerate(needs_artificial):
            basis[row] = n + n_ub + col
        limit = self.max_iter or 50 * (m + width)

        # phase one: maximize -sum(artificials)
        T[-1, n + n_ub:width] = 1.0
        for row in needs_artificial:
            T[-1, :] -= T[row, :]
        status, it1 = self._iterate(T, basis, width, limit)
        if status != 'optimal':
            logger.warning("Phase one ended with status %s after %d pivots", status, it1)
            return LPResult(status, iterations=it1)
        if T[-1, -1] < -FEASIBILITY_TOL:
            return LPResult('infeasible', iterations=it1)

        keep_rows = []
        for r in range(m):
            if basis[r] >= n + n_ub:
                pivots = np.flatnonzero(np.abs(T[r, :n + n_ub]) > PIVOT_TOL)
                if len(pivots):
                    self._pivot(T, r, int(pivots[0]))
                    basis[r] = int(pivots[0])
                else:
                    logger.debug("Dropping redundant constraint row %d", r)
                    continue
            keep_rows.append(r)
        T = np.vstack([T[keep_rows][:, list(range(n + n_ub)) + [width]], np.zeros((1, n + n_ub + 1))])
        basis = [basis[r] for r in keep_rows]

        # phase two
        sign = 1.0 if maximize else -1.0
        cost = np.zeros(n + n_ub)
        cost[:n] = sign * c
        T[-1, :-1] = -cost
        for r, var in enumerate(basis):
            if cost[var] != 0.0:
                T[-1, :] += cost[var] * T[r, :]
        status, it2 = self._iterate(T, basis, n + n_ub, limit)
        if status != 'optimal':
            logger.warning("Phase two ended with status %s after %d pivots", status, it2)
            return LPResult(status, iterations=it1 + it2)
        x = np.zeros(n + n_ub)
        for r, var in enumerate(basis):
            x[var] = T[r, -1]
        x = np.clip(x[:n], 0.0, None)
        fun = float(c @ x)
        logger.debug("Simplex optimum %.17g after %d + %d pivots (%d x %d)", fun, it1, it2, m, n)
        return LPResult('optimal', x, fun, it1 + it2)
