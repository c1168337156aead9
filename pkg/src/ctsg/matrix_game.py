"""Exact solution of two-player zero-sum matrix games via linear programming.

The game with payoff matrix C (rows = maximizer, columns = minimizer) is
solved through the classical normalized LP: after shifting all entries
positive, player 2's problem becomes

    max 1'w   subject to  C w <= 1,  w >= 0,

whose optimal w recovers the column strategy (psi = w / sum w, game value
1 / sum w before unshifting) and whose dual solution, read off the slack
columns of the final tableau, recovers the row strategy. One simplex run
therefore yields the value and both optimal mixed strategies.

The simplex is a dense primal tableau with Bland's anti-cycling rule
(lowest-index entering variable, lowest-index basic variable on ratio
ties), which makes the returned vertex deterministic across runs. The
matrices here are action-set sized, so nothing fancier is warranted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PIVOT_TOL = 1e-12
_DEGENERACY_TOL = 1e-9


@dataclass
class MatrixGameSolution:
    """Value and optimal mixed strategies of a zero-sum matrix game.

    status is "optimal" or "degenerate-optimal"; the latter flags alternate
    optimal vertices (a nonbasic column with zero reduced cost), in which
    case the deterministically chosen vertex is returned.
    """

    value: float
    strategy_p1: np.ndarray
    strategy_p2: np.ndarray
    status: str


def _simplex(C: np.ndarray) -> tuple[float, np.ndarray, np.ndarray, str]:
    """Solve max 1'w s.t. C w <= 1, w >= 0 for C with all entries >= 1.

    Returns (objective, w, dual y, status). Finite termination is guaranteed
    by Bland's rule; unboundedness is impossible because every column of C
    is strictly positive.
    """
    m, n = C.shape
    # Tableau rows: 0 = objective (reduced costs, negated for max), 1..m constraints.
    tab = np.zeros((m + 1, n + m + 1))
    tab[0, :n] = -1.0
    tab[1:, :n] = C
    tab[1:, n : n + m] = np.eye(m)
    tab[1:, -1] = 1.0
    basis = list(range(n, n + m))

    while True:
        # Bland: entering variable = lowest column index with negative reduced cost.
        enter = -1
        for j in range(n + m):
            if tab[0, j] < -_PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            break
        col = tab[1:, enter]
        rhs = tab[1:, -1]
        best_ratio = np.inf
        leave = -1
        for i in range(m):
            if col[i] > _PIVOT_TOL:
                ratio = rhs[i] / col[i]
                if ratio < best_ratio - _PIVOT_TOL or (
                    ratio < best_ratio + _PIVOT_TOL
                    and (leave < 0 or basis[i] < basis[leave])
                ):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            raise RuntimeError("unbounded game LP; input matrix not positive")
        piv_row = leave + 1
        tab[piv_row] /= tab[piv_row, enter]
        for i in range(m + 1):
            if i != piv_row and tab[i, enter] != 0.0:
                tab[i] -= tab[i, enter] * tab[piv_row]
        basis[leave] = enter

    w = np.zeros(n)
    for i, var in enumerate(basis):
        if var < n:
            w[var] = tab[i + 1, -1]
    y = tab[0, n : n + m].copy()  # dual values sit in the slack reduced costs
    objective = tab[0, -1]

    in_basis = set(basis)
    degenerate = any(
        j not in in_basis and abs(tab[0, j]) <= _DEGENERACY_TOL for j in range(n + m)
    )
    status = "degenerate-optimal" if degenerate else "optimal"
    return float(objective), w, y, status


def solve_matrix_game(C: np.ndarray) -> MatrixGameSolution:
    """Solve the zero-sum matrix game with payoff matrix C exactly.

    Player 1 (rows) maximizes, player 2 (columns) minimizes. Returns the
    game value and a pair of optimal mixed strategies satisfying the saddle
    inequalities up to LP tolerance.

    Raises ValueError on an empty or non-finite matrix.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.size == 0:
        raise ValueError("payoff matrix must be a nonempty 2-d array")
    if not np.isfinite(C).all():
        raise ValueError("payoff matrix contains a non-finite entry")
    m, n = C.shape

    if m == 1 and n == 1:
        return MatrixGameSolution(float(C[0, 0]), np.ones(1), np.ones(1), "optimal")
    if m == 1:
        j = int(np.argmin(C[0]))
        p2 = np.zeros(n)
        p2[j] = 1.0
        ties = int(np.sum(np.abs(C[0] - C[0, j]) <= _DEGENERACY_TOL * (1.0 + np.abs(C).max())))
        status = "degenerate-optimal" if ties > 1 else "optimal"
        return MatrixGameSolution(float(C[0, j]), np.ones(1), p2, status)
    if n == 1:
        i = int(np.argmax(C[:, 0]))
        p1 = np.zeros(m)
        p1[i] = 1.0
        ties = int(np.sum(np.abs(C[:, 0] - C[i, 0]) <= _DEGENERACY_TOL * (1.0 + np.abs(C).max())))
        status = "degenerate-optimal" if ties > 1 else "optimal"
        return MatrixGameSolution(float(C[i, 0]), p1, np.ones(1), status)

    # Shift so every entry is >= 1, guaranteeing a positive game value and a
    # bounded normalized LP; the shift moves the value, not the strategies.
    shift = max(0.0, -float(C.min())) + 1.0
    objective, w, y, status = _simplex(C + shift)

    total_w = float(w.sum())
    total_y = float(y.sum())
    p2 = w / total_w
    p1 = y / total_y
    value = 1.0 / total_w - shift
    return MatrixGameSolution(value, p1, p2, status)
