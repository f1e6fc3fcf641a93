"""Compiled block-sparse kernels.

Every kernel works on a row range or an explicit row list so callers can
split work across threads; all of them release the GIL.  Row results never
depend on which thread computes them.
"""
import numba as nb
import numpy as np

_jit = nb.njit(nogil=True, cache=True)


@_jit
def bsr_matvec_rows(indptr, indices, data, x, y, lo, hi):
    b = data.shape[1]
    for i in range(lo, hi):
        for r in range(b):
            y[i * b + r] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            for r in range(b):
                acc = 0.0
                for c in range(b):
                    acc += data[p, r, c] * x[j * b + c]
                y[i * b + r] += acc


@_jit
def chunk_dots(x, y, out, c_lo, c_hi, chunk):
    n = x.shape[0]
    for c in range(c_lo, c_hi):
        acc = 0.0
        end = min(n, (c + 1) * chunk)
        for k in range(c * chunk, end):
            acc += x[k] * y[k]
        out[c] = acc


@_jit
def invert_block(a, out):
    """Gauss-Jordan with partial pivoting on [a | I]; returns False if singular."""
    b = a.shape[0]
    w = np.empty((b, 2 * b))
    scale = 0.0
    for r in range(b):
        for c in range(b):
            w[r, c] = a[r, c]
            w[r, b + c] = 1.0 if r == c else 0.0
            v = abs(a[r, c])
            if v > scale:
                scale = v
    if scale == 0.0:
        return False
    for col in range(b):
        piv = col
        best = abs(w[col, col])
        for r in range(col + 1, b):
            v = abs(w[r, col])
            if v > best:
                best = v
                piv = r
        if best <= 1e-14 * scale:
            return False
        if piv != col:
            for c in range(2 * b):
                t = w[col, c]
                w[col, c] = w[piv, c]
                w[piv, c] = t
        inv = 1.0 / w[col, col]
        for c in range(2 * b):
            w[col, c] *= inv
        for r in range(b):
            if r != col:
                f = w[r, col]
                if f != 0.0:
                    for c in range(2 * b):
                        w[r, c] -= f * w[col, c]
    for r in range(b):
        for c in range(b):
            out[r, c] = w[r, b + c]
    return True


@_jit
def _mul_into(a, bm, out):
    n = a.shape[0]
    for r in range(n):
        for c in range(n):
            acc = 0.0
            for k in range(n):
                acc += a[r, k] * bm[k, c]
            out[r, c] = acc


@_jit
def decouple_rows(indptr, diag_ptr, data, out, dinv, lo, hi):
    """out[row i] = inv(diag block i) @ data[row i]; returns first singular row or -1."""
    tmp = np.empty((data.shape[1], data.shape[2]))
    for i in range(lo, hi):
        if not invert_block(data[diag_ptr[i]], dinv[i]):
            return i
        for p in range(indptr[i], indptr[i + 1]):
            _mul_into(dinv[i], data[p], tmp)
            out[p] = tmp
    return -1


@_jit
def ilu0_factor(indptr, indices, diag_ptr, lu, dinv, shift):
    """In-place block ILU(0); lu holds L (unit, below diag) and U (diag and above).

    ``shift[i]`` is added to the diagonal of block row i before inversion.
    Returns the first row with a singular pivot block, or -1.
    """
    n = indptr.shape[0] - 1
    b = lu.shape[1]
    tmp = np.empty((b, b))
    for i in range(n):
        for r in range(b):
            lu[diag_ptr[i], r, r] += shift[i]
        for p in range(indptr[i], diag_ptr[i]):
            k = indices[p]
            _mul_into(lu[p], dinv[k], tmp)
            lu[p] = tmp
            # subtract L_ik * U_kj for j > k present in both rows
            q = p + 1
            s = diag_ptr[k] + 1
            qe = indptr[i + 1]
            se = indptr[k + 1]
            while q < qe and s < se:
                jq = indices[q]
                js = indices[s]
                if jq == js:
                    for r in range(b):
                        for c in range(b):
                            acc = 0.0
                            for m in range(b):
                                acc += lu[p, r, m] * lu[s, m, c]
                            lu[q, r, c] -= acc
                    q += 1
                    s += 1
                elif jq < js:
                    q += 1
                else:
                    s += 1
        if not invert_block(lu[diag_ptr[i]], dinv[i]):
            return i
    return -1


@_jit
def ilu_lower_rows(rows, indptr, indices, diag_ptr, lu, r, y):
    b = lu.shape[1]
    for t in range(rows.shape[0]):
        i = rows[t]
        for a in range(b):
            y[i * b + a] = r[i * b + a]
        for p in range(indptr[i], diag_ptr[i]):
            k = indices[p]
            for a in range(b):
                acc = 0.0
                for c in range(b):
                    acc += lu[p, a, c] * y[k * b + c]
                y[i * b + a] -= acc


@_jit
def ilu_upper_rows(rows, indptr, indices, diag_ptr, lu, dinv, y, z):
    b = lu.shape[1]
    w = np.empty(b)
    for t in range(rows.shape[0]):
        i = rows[t]
        for a in range(b):
            w[a] = y[i * b + a]
        for p in range(diag_ptr[i] + 1, indptr[i + 1]):
            k = indices[p]
            for a in range(b):
                acc = 0.0
                for c in range(b):
                    acc += lu[p, a, c] * z[k * b + c]
                w[a] -= acc
        for a in range(b):
            acc = 0.0
            for c in range(b):
                acc += dinv[i, a, c] * w[c]
            z[i * b + a] = acc


@_jit
def level_sets(indptr, indices, diag_ptr, lower):
    """Dependency level of each row for the lower (or upper) triangular sweep."""
    n = indptr.shape[0] - 1
    level = np.zeros(n, dtype=np.int64)
    if lower:
        for i in range(n):
            lv = 0
            for p in range(indptr[i], diag_ptr[i]):
                v = level[indices[p]] + 1
                if v > lv:
                    lv = v
            level[i] = lv
    else:
        for i in range(n - 1, -1, -1):
            lv = 0
            for p in range(diag_ptr[i] + 1, indptr[i + 1]):
                v = level[indices[p]] + 1
                if v > lv:
                    lv = v
            level[i] = lv
    return level
