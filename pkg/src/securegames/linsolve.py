"""Exact linear-system solving over Fraction.

Floating point is useless here: downstream code tests equalities like
Q(s, a) == v(s) to decide whether an action survives, so every solve has to
be exact. Plain Gaussian elimination with first-nonzero pivoting is enough at
the problem sizes this package sees (a few dozen unknowns).
"""

from __future__ import annotations

from fractions import Fraction


class SingularSystemError(ValueError):
    pass


def solve_linear_system(
    matrix: list[list[Fraction]], rhs_columns: list[list[Fraction]]
) -> list[list[Fraction]]:
    """Solve A x = b for each column b in rhs_columns, exactly.

    matrix is n x n, rhs_columns is a list of length-n columns. Returns the
    solution columns in the same order. Raises SingularSystemError when A is
    singular.
    """
    n = len(matrix)
    for row in matrix:
        if len(row) != n:
            raise ValueError("matrix must be square")
    m = len(rhs_columns)
    # augmented working copy
    aug = [list(matrix[i]) + [col[i] for col in rhs_columns] for i in range(n)]
    for col in range(n):
        pivot_row = None
        for r in range(col, n):
            if aug[r][col] != 0:
                pivot_row = r
                break
        if pivot_row is None:
            raise SingularSystemError(f"singular system (column {col})")
        if pivot_row != col:
            aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        pivot = aug[col][col]
        prow = aug[col]
        for r in range(n):
            if r == col:
                continue
            factor = aug[r][col]
            if factor == 0:
                continue
            scale = factor / pivot
            row_r = aug[r]
            for c in range(col, n + m):
                row_r[c] -= scale * prow[c]
    out: list[list[Fraction]] = []
    for j in range(m):
        out.append([aug[i][n + j] / aug[i][i] for i in range(n)])
    return out


def solve_single(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    return solve_linear_system(matrix, [rhs])[0]
