"""Exact linear algebra over the Gaussian rationals.

Dense helpers work on lists of lists; the sparse echelon works on
``dict[column, coefficient]`` rows and optionally tracks which input rows
were combined, which is how ideal-membership cofactors are recovered.
"""

from __future__ import annotations

from typing import Hashable, Iterable, Sequence

from .coeffs import ONE, ZERO


# -- dense --------------------------------------------------------------------


def rank_profile(mat: Sequence[Sequence]) -> tuple[int, list[int], list[int]]:
    """Rank plus row and column indices of a nonsingular maximal minor."""
    m = len(mat)
    n = len(mat[0]) if m else 0
    work = [list(row) for row in mat]
    row_ids = list(range(m))
    pivot_rows: list[int] = []
    pivot_cols: list[int] = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if not work[i][c].is_zero()), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        row_ids[r], row_ids[piv] = row_ids[piv], row_ids[r]
        inv = work[r][c].inverse()
        for i in range(r + 1, m):
            if work[i][c].is_zero():
                continue
            f = work[i][c] * inv
            work[i] = [a - f * b for a, b in zip(work[i], work[r])]
        pivot_rows.append(row_ids[r])
        pivot_cols.append(c)
        r += 1
        if r == m:
            break
    return r, sorted(pivot_rows), pivot_cols


def det(mat: Sequence[Sequence]):
    n = len(mat)
    work = [list(row) for row in mat]
    result = ONE
    for c in range(n):
        piv = next((i for i in range(c, n) if not work[i][c].is_zero()), None)
        if piv is None:
            return ZERO
        if piv != c:
            work[c], work[piv] = work[piv], work[c]
            result = -result
        result = result * work[c][c]
        inv = work[c][c].inverse()
        for i in range(c + 1, n):
            if work[i][c].is_zero():
                continue
            f = work[i][c] * inv
            work[i] = [a - f * b for a, b in zip(work[i], work[c])]
    return result


def inverse(mat: Sequence[Sequence]):
    """Inverse of a square matrix, or ``None`` when singular."""
    n = len(mat)
    work = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(mat)]
    for c in range(n):
        piv = next((i for i in range(c, n) if not work[i][c].is_zero()), None)
        if piv is None:
            return None
        work[c], work[piv] = work[piv], work[c]
        inv = work[c][c].inverse()
        work[c] = [x * inv for x in work[c]]
        for i in range(n):
            if i != c and not work[i][c].is_zero():
                f = work[i][c]
                work[i] = [a - f * b for a, b in zip(work[i], work[c])]
    return [row[n:] for row in work]


# -- sparse -------------------------------------------------------------------


def _axpy(target: dict, source: dict, factor) -> None:
    """``target -= factor * source`` in place, dropping zeros."""
    for k, v in source.items():
        cur = target.get(k)
        nv = (-(factor * v)) if cur is None else cur - factor * v
        if nv.is_zero():
            target.pop(k, None)
        else:
            target[k] = nv


class Echelon:
    """Incremental row echelon form with pivots at the smallest column key.

    Column keys must be mutually comparable.  With ``track=True`` every
    stored row remembers its expression in terms of the tags passed to
    :meth:`add`.
    """

    def __init__(self, track: bool = False):
        self.track = track
        self.pivots: dict[Hashable, tuple[dict, dict]] = {}

    def __len__(self):
        return len(self.pivots)

    def reduce(self, vec: dict) -> tuple[dict, dict]:
        """Reduce ``vec``; returns ``(remainder, combo)`` with ``vec = remainder + sum combo[t] * row_t``."""
        row = dict(vec)
        combo: dict = {}
        done: set = set()
        while True:
            cands = [c for c in row if c in self.pivots and c not in done]
            if not cands:
                break
            c = min(cands)
            prow, pcombo = self.pivots[c]
            f = row[c]
            _axpy(row, prow, f)
            if self.track:
                for t, v in pcombo.items():
                    nv = combo.get(t, ZERO) + f * v
                    if nv.is_zero():
                        combo.pop(t, None)
                    else:
                        combo[t] = nv
            done.add(c)
        return row, combo

    def add(self, vec: dict, tag: Hashable | None = None) -> bool:
        """Insert a row; returns True when it increased the rank."""
        row, combo = self.reduce(vec)
        if not row:
            return False
        c = min(row)
        inv = row[c].inverse()
        row = {k: v * inv for k, v in row.items()}
        pcombo: dict = {}
        if self.track:
            pcombo = {t: -(v * inv) for t, v in combo.items()}
            pcombo[tag] = pcombo.get(tag, ZERO) + inv
            if pcombo[tag].is_zero():
                del pcombo[tag]
        self.pivots[c] = (row, pcombo)
        return True

    def pivot_columns(self) -> set:
        return set(self.pivots)


def kernel(rows: Iterable[dict], columns: Sequence[Hashable]) -> list[dict]:
    """Basis of ``{x : row . x = 0 for every row}`` over the given columns.

    Basis vectors are returned in the order of their free column in
    ``columns``, each with coefficient 1 at that free column.
    """
    order = {c: i for i, c in enumerate(columns)}
    ech = Echelon()
    for r in rows:
        ech.add({order[c]: v for c, v in r.items()})
    # back-substitute to reduced form
    reduced: dict[int, dict] = {}
    for p in sorted(ech.pivots, reverse=True):
        row = dict(ech.pivots[p][0])
        for q in sorted(reduced):
            if q in row and q != p:
                _axpy(row, reduced[q], row[q])
        reduced[p] = row
    free = [i for i in range(len(columns)) if i not in reduced]
    out = []
    for f in free:
        vec = {columns[f]: ONE}
        for p, row in reduced.items():
            if f in row:
                vec[columns[p]] = -row[f]
        out.append(vec)
    return out


def solve(rows: Sequence[dict], rhs: Sequence, columns: Sequence[Hashable]) -> dict | None:
    """One solution of ``rows . x = rhs`` (free variables zero), or ``None``."""
    order = {c: i for i, c in enumerate(columns)}
    n = len(columns)
    ech = Echelon()
    for r, b in zip(rows, rhs):
        vec = {order[c]: v for c, v in r.items()}
        if not b.is_zero():
            vec[n] = -b
        ech.add(vec)
    if n in ech.pivots:
        return None
    reduced: dict[int, dict] = {}
    for p in sorted(ech.pivots, reverse=True):
        row = dict(ech.pivots[p][0])
        for q in sorted(reduced):
            if q in row and q != p:
                _axpy(row, reduced[q], row[q])
        reduced[p] = row
    sol = {}
    for p, row in reduced.items():
        v = row.get(n)
        if v is not None:
            sol[columns[p]] = -v
    return sol


def rank(rows: Iterable[dict]) -> int:
    ech = Echelon()
    for r in rows:
        ech.add(r)
    return len(ech)
