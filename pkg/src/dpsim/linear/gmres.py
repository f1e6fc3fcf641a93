"""Restarted, right-preconditioned (flexible) GMRES and a preconditioned CG."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..parallel import SERIAL
from .blockmatrix import dot, norm


@dataclass
class KrylovResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residual_norm: float
    rhs_norm: float
    history: list = field(default_factory=list)


def _as_matvec(A, pool):
    if callable(A) and not hasattr(A, "matvec"):
        return A
    return lambda v: A.matvec(v, pool)


def gmres(A, b, M=None, rtol=1e-6, restart=30, max_iters=200, x0=None, pool=SERIAL, atol=0.0):
    """Solve ``A x = b`` until ``||b - A x|| <= max(rtol*||b||, atol)``.

    Right preconditioning keeps the monitored residual equal to the true
    residual of the unpreconditioned system.  Preconditioned directions are
    stored, so ``M`` may change between applications (flexible variant).
    ``history`` holds the residual norm after every inner iteration.
    """
    matvec = _as_matvec(A, pool)
    prec = M if M is not None else (lambda v: v)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = norm(b, pool)
    tol = max(rtol * bnorm, atol)
    r = b - matvec(x) if x0 is not None else b.copy()
    beta = norm(r, pool)
    history = [beta]
    iters = 0
    if beta <= tol or bnorm == 0.0:
        return KrylovResult(x, 0, True, beta, bnorm, history)

    m = restart
    while iters < max_iters:
        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        for j in range(m):
            Z[j] = prec(V[j])
            w = matvec(Z[j])
            for i in range(j + 1):
                H[i, j] = dot(w, V[i], pool)
                w -= H[i, j] * V[i]
            H[j + 1, j] = norm(w, pool)
            breakdown = H[j + 1, j] <= 1e-14 * abs(H[j, j]) or H[j + 1, j] == 0.0
            if not breakdown:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            iters += 1
            k = j + 1
            history.append(abs(g[j + 1]))
            if abs(g[j + 1]) <= tol or breakdown or iters >= max_iters:
                break
        y = np.zeros(k)
        for i in range(k - 1, -1, -1):
            y[i] = (g[i] - H[i, i + 1 : k] @ y[i + 1 : k]) / H[i, i] if H[i, i] != 0 else 0.0
        for i in range(k):
            x += y[i] * Z[i]
        r = b - matvec(x)
        beta = norm(r, pool)
        history[-1] = beta
        if beta <= tol:
            return KrylovResult(x, iters, True, beta, bnorm, history)
        if beta == 0.0:
            break
    return KrylovResult(x, iters, beta <= tol, beta, bnorm, history)


def pcg(A, b, M=None, rtol=1e-1, max_iters=30, pool=SERIAL):
    """Preconditioned conjugate gradients from a zero initial guess."""
    matvec = _as_matvec(A, pool)
    prec = M if M is not None else (lambda v: v)
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    r = b.copy()
    bnorm = norm(b, pool)
    if bnorm == 0.0:
        return KrylovResult(x, 0, True, 0.0, 0.0, [0.0])
    z = prec(r)
    p = z.copy()
    rz = dot(r, z, pool)
    rn = bnorm
    history = [rn]
    it = 0
    while it < max_iters and rn > rtol * bnorm:
        Ap = matvec(p)
        pAp = dot(p, Ap, pool)
        if pAp == 0.0 or not np.isfinite(pAp):
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        rn = norm(r, pool)
        history.append(rn)
        z = prec(r)
        rz_new = dot(r, z, pool)
        p = z + (rz_new / rz) * p if rz != 0.0 else z.copy()
        rz = rz_new
    return KrylovResult(x, it, rn <= rtol * bnorm, rn, bnorm, history)


def bicgstab(A, b, M=None, rtol=1e-1, max_iters=30, pool=SERIAL):
    """Right-preconditioned BiCGSTAB from a zero initial guess."""
    matvec = _as_matvec(A, pool)
    prec = M if M is not None else (lambda v: v)
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    r = b.copy()
    bnorm = norm(b, pool)
    if bnorm == 0.0:
        return KrylovResult(x, 0, True, 0.0, 0.0, [0.0])
    r_hat = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    rn = bnorm
    history = [rn]
    it = 0
    while it < max_iters and rn > rtol * bnorm:
        rho_new = dot(r_hat, r, pool)
        if rho_new == 0.0:
            break
        beta = (rho_new / rho) * (alpha / omega) if it else 0.0
        p = r + beta * (p - omega * v)
        ph = prec(p)
        v = matvec(ph)
        denom = dot(r_hat, v, pool)
        if denom == 0.0:
            break
        alpha = rho_new / denom
        s = r - alpha * v
        it += 1
        if norm(s, pool) <= rtol * bnorm:
            x += alpha * ph
            r = s
            rn = norm(r, pool)
            history.append(rn)
            break
        sh = prec(s)
        t = matvec(sh)
        tt = dot(t, t, pool)
        omega = dot(t, s, pool) / tt if tt != 0.0 else 0.0
        x += alpha * ph + omega * sh
        r = s - omega * t
        rho = rho_new
        rn = norm(r, pool)
        history.append(rn)
        if omega == 0.0:
            break
    return KrylovResult(x, it, rn <= rtol * bnorm, rn, bnorm, history)
