"""Pfaffians of real skew-symmetric matrices."""
from __future__ import annotations

import mpmath
import numpy as np


def _check_skew(a):
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("Pfaffian needs a square matrix")
    if a.size == 0:
        return a
    scale = max(np.max(np.abs(a)), 1.0)
    if np.max(np.abs(a + a.T)) > 1e-10 * scale:
        raise ValueError("matrix is not skew-symmetric")
    return a


def pfaffian(a) -> float:
    """Pfaffian by Parlett-Reid elimination with partial pivoting."""
    a = _check_skew(a)
    n = a.shape[0]
    if n % 2:
        return 0.0
    pf = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            pf = -pf
        if a[k, k + 1] == 0.0:
            return 0.0
        pf *= a[k, k + 1]
        if k + 2 < n:
            tau = a[k, k + 2:] / a[k, k + 1]
            col = a[k + 2:, k + 1].copy()
            a[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return float(pf)


def pfaffian_extended(a, dps: int = 40) -> float:
    """Parlett-Reid elimination carried out in ``dps``-digit mpmath arithmetic.

    ``a`` may hold mpmath numbers, so entries can be formed exactly before
    they are rounded to double.
    """
    n = len(a)
    with mpmath.workdps(dps):
        rows = [[mpmath.mpf(v) for v in row] for row in a]
        for i in range(n):
            for j in range(n):
                if abs(rows[i][j] + rows[j][i]) > mpmath.mpf(10) ** (-dps // 2) * (
                        1 + abs(rows[i][j])):
                    raise ValueError("matrix is not skew-symmetric")
        if n % 2:
            return 0.0
        pf = mpmath.mpf(1)
        for k in range(0, n - 1, 2):
            kp = max(range(k + 1, n), key=lambda r: abs(rows[r][k]))
            if kp != k + 1:
                rows[k + 1], rows[kp] = rows[kp], rows[k + 1]
                for row in rows:
                    row[k + 1], row[kp] = row[kp], row[k + 1]
                pf = -pf
            piv = rows[k][k + 1]
            if piv == 0:
                return 0.0
            pf *= piv
            tau = [rows[k][j] / piv for j in range(n)]
            col = [rows[i][k + 1] for i in range(n)]
            for i in range(k + 2, n):
                for j in range(k + 2, n):
                    rows[i][j] += tau[i] * col[j] - col[i] * tau[j]
        return float(pf)


def pfaffian_expansion(a) -> float:
    """Pfaffian by expansion along the first row.

    Exponential cost; meant as an independent cross-check for small
    matrices (2k <= 8 or so).
    """
    a = _check_skew(a)
    return _expand(a, list(range(a.shape[0])))


def _expand(a, idx):
    if not idx:
        return 1.0
    if len(idx) % 2:
        return 0.0
    first, rest = idx[0], idx[1:]
    total = 0.0
    for pos, j in enumerate(rest):
        if a[first, j] == 0.0:
            continue
        sub = rest[:pos] + rest[pos + 1:]
        total += (-1) ** pos * a[first, j] * _expand(a, sub)
    return total
