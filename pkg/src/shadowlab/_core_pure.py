"""Pure numpy implementation of the hot kernels.

Same contracts as the compiled module ``shadowlab._core``; the dispatcher in
``shadowlab.kernels`` picks whichever is available. Candidate batches are
processed in chunks to keep the (m, n, d) temporaries bounded.
"""

import numpy as np

BACKEND = "pure"

# target size (complex entries) for the per-chunk (m, n, d) temporary
_CHUNK_BUDGET = 4_000_000


def _chunk(m, n, d):
    return max(1, int(_CHUNK_BUDGET // max(1, n * d)))


def opt_lambda_residuals(X, V):
    """Per-index optimal rescaling of V against X.

    X, V : (n, d) complex arrays. Returns (lam, res) where lam[k] minimizes
    ||X[k] - lam*V[k]|| and res[k] is the minimum. lam is 0 where V[k] = 0.
    The residual is evaluated as an explicit difference: the Pythagoras form
    cancels catastrophically on near-collinear pairs with large norms.
    """
    X = np.ascontiguousarray(X, dtype=np.complex128)
    V = np.ascontiguousarray(V, dtype=np.complex128)
    vv = np.einsum("nd,nd->n", V.conj(), V).real
    xv = np.einsum("nd,nd->n", V.conj(), X)
    ok = vv > 0.0
    safe = np.where(ok, vv, 1.0)
    lam = np.where(ok, xv / safe, 0.0 + 0.0j)
    res = np.linalg.norm(X - lam[:, None] * V, axis=1)
    return lam, res


def sup_residuals(P, X, Q):
    """Sup over the window of the optimally rescaled residual, per candidate.

    P : (n, d, d) stack of operator powers aligned with the window,
    X : (n, d) trajectory points, Q : (m, d) candidates. Returns (m,) with
    sups[j] = max_k dist(X[k], C * P[k] @ Q[j]). Uses the Pythagoras form,
    which loses absolute accuracy ~||X[k]||*sqrt(eps) on near-collinear
    pairs; final reporting should re-score through opt_lambda_residuals.
    """
    P = np.ascontiguousarray(P, dtype=np.complex128)
    X = np.ascontiguousarray(X, dtype=np.complex128)
    Q = np.atleast_2d(np.ascontiguousarray(Q, dtype=np.complex128))
    n, d = X.shape
    m = Q.shape[0]
    xx = np.einsum("nd,nd->n", X.conj(), X).real
    out = np.empty(m, dtype=np.float64)
    step = _chunk(m, n, d)
    for lo in range(0, m, step):
        Qb = Q[lo : lo + step]
        V = np.einsum("ndk,mk->mnd", P, Qb)
        vv = np.einsum("mnd,mnd->mn", V.conj(), V).real
        xv = np.einsum("mnd,nd->mn", V.conj(), X)
        ok = vv > 0.0
        safe = np.where(ok, vv, 1.0)
        res2 = xx[None, :] - np.where(ok, np.abs(xv) ** 2 / safe, 0.0)
        out[lo : lo + step] = np.sqrt(np.maximum(res2, 0.0)).max(axis=1)
    return out


def certified_lows(P, X, xnorms, pnorms, s1s2, smins, Q, h):
    """Per-candidate certified lower bound over a covering cell of radius h.

    For cell center q and any cell point q', the optimally rescaled residual
    satisfies res_k(q') >= res_k(q) - ||X[k]|| * dc(P[k]q', P[k]q), with dc
    the chordal distance between the spanned lines. Two chordal bounds are
    intersected per index, writing v = ||P[k]q|| and g = v - pnorms[k]*h
    (a lower bound for ||P[k]q'||):
        dc <= pnorms[k]*h / g                    (norm route, needs g > 0)
        dc <= s1s2[k]*h / (v * max(smins[k], g)) (wedge route: the exterior
              square of P[k] scales q' wedge q by at most s1s2[k], and
              |q' wedge q| <= h for unit vectors with covering radius h)
    together with the trivial dc <= 1. The certified low is the max over k
    of res_k(q) minus the slack. xnorms[k] = ||X[k]||; pnorms, s1s2, smins
    are the largest, product of two largest, and smallest singular values of
    P[k]. h is a scalar or per-candidate array bounding the euclidean
    covering radius of the cell up to a global phase (line distances are
    phase-invariant, so callers may rotate cell points before measuring).
    """
    P = np.ascontiguousarray(P, dtype=np.complex128)
    X = np.ascontiguousarray(X, dtype=np.complex128)
    Q = np.atleast_2d(np.ascontiguousarray(Q, dtype=np.complex128))
    xnorms = np.asarray(xnorms, dtype=np.float64)
    pnorms = np.asarray(pnorms, dtype=np.float64)
    s1s2 = np.asarray(s1s2, dtype=np.float64)
    smins = np.asarray(smins, dtype=np.float64)
    n, d = X.shape
    m = Q.shape[0]
    h = np.broadcast_to(np.asarray(h, dtype=np.float64), (m,))
    xx = xnorms**2
    out = np.empty(m, dtype=np.float64)
    step = _chunk(m, n, d)
    for lo in range(0, m, step):
        Qb = Q[lo : lo + step]
        hb = h[lo : lo + step, None]
        V = np.einsum("ndk,mk->mnd", P, Qb)
        vv = np.einsum("mnd,mnd->mn", V.conj(), V).real
        xv = np.einsum("mnd,nd->mn", V.conj(), X)
        ok = vv > 0.0
        safe = np.where(ok, vv, 1.0)
        res2 = xx[None, :] - np.where(ok, np.abs(xv) ** 2 / safe, 0.0)
        res = np.sqrt(np.maximum(res2, 0.0))
        vnorm = np.sqrt(safe, where=ok, out=np.zeros_like(safe))
        g = vnorm - pnorms[None, :] * hb
        pos = g > 0.0
        dc_norm = np.where(pos, (pnorms[None, :] * hb) / np.where(pos, g, 1.0), np.inf)
        wedge_den = vnorm * np.maximum(smins[None, :], g)
        wok = ok & (wedge_den > 0.0)
        dc_wedge = np.where(
            wok, (s1s2[None, :] * hb) / np.where(wok, wedge_den, 1.0), np.inf
        )
        dc = np.minimum(1.0, np.minimum(dc_norm, dc_wedge))
        lows = np.where(ok, res - xnorms[None, :] * dc, -np.inf)
        out[lo : lo + step] = lows.max(axis=1)
    return out
