"""Shadowing solvers, super-shadowing witnesses, and divergence certificates.

A witness packages (q, p, lambdas) against a trajectory: the residual profile
is ||x_n - T^n p - lambda_n T^n q||. The hyperbolic solver produces classical
witnesses (all lambda = 1) with a provable K*delta bound; the searcher and the
structured constructors produce super / weak-super / limit-super witnesses;
the certificate machinery produces certified lower bounds on what any witness
could achieve.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .errors import ArgumentError, SpecificationError
from . import kernels
from .operators import (
    NilpotentPlusRotation,
    ProjectionToLine,
    power_stack,
    power_matrix,
    operator_norm,
    materialize,
)
from .trajectories import Window, Trajectory, measure_defect
from .spectral import EigenSplit

__all__ = [
    "Witness",
    "CorrectorSystem",
    "CertificateRung",
    "residual_profile",
    "optimal_lambdas",
    "solve_shadowing_hyperbolic",
    "search_super_witness",
    "structured_delta",
    "construct_witness_structured",
    "restrict_witness",
    "witness_to_corrector",
    "corrector_to_witness",
    "divergence_certificate",
    "witness_to_jsonable",
    "witness_from_jsonable",
    "witness_csv",
]

MODES = ("classical", "super", "weak-super", "limit-super")

#: strict-reading replacement scale for lambda = 0 (see zero-lambda handling)
_STRICT_LAMBDA = 1e-30


@dataclass
class Witness:
    """Scaled-orbit approximation of a pseudotrajectory.

    residual_profile[n] = ||x_n - (T^n p if p is set) - lambda_n T^n q|| over
    the window. lambdas uses the relaxed reading (zeros allowed at indices
    where T^n q vanishes or the matched component is zero); zero_lambda_indices
    lists them and lambdas_strict replaces each zero by a 1e-30-scaled nonzero
    value, changing no residual beyond machine precision.
    """

    mode: str
    window: Window
    q: np.ndarray
    lambdas: np.ndarray
    sup_residual: float
    residual_profile: np.ndarray
    p: np.ndarray | None = None
    zero_lambda_indices: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ArgumentError(f"mode must be one of {MODES}")

    @property
    def lambdas_strict(self):
        lam = np.array(self.lambdas)
        if len(self.zero_lambda_indices):
            scale = _STRICT_LAMBDA * max(1.0, float(np.max(np.abs(lam))))
            for n in self.zero_lambda_indices:
                lam[self.window.offset(n)] = scale
        return lam

    def lambda_at(self, n):
        return self.lambdas[self.window.offset(n)]


def _orbit_stack(spec, window, vec):
    # T^n vec over the window via structured powers
    P = power_stack(spec, window.n_min, window.n_max)
    return np.einsum("nij,j->ni", P, np.asarray(vec, dtype=np.complex128))


def residual_profile(traj, spec, q, lambdas, p=None):
    """||x_n - T^n p - lambda_n T^n q|| over the trajectory's window."""
    X = traj.points
    if p is not None:
        X = X - _orbit_stack(spec, traj.window, p)
    V = _orbit_stack(spec, traj.window, q)
    lam = np.asarray(lambdas, dtype=np.complex128).reshape(-1, 1)
    return np.linalg.norm(X - lam * V, axis=1)


def verify_witness(witness, traj, spec):
    """Recompute the residual profile; returns its max deviation from the stored one."""
    prof = residual_profile(traj, spec, witness.q, witness.lambdas, witness.p)
    return float(np.max(np.abs(prof - witness.residual_profile)))


def optimal_lambdas(traj, spec, q, renormalize=False):
    """Per-index Euclidean-optimal scalars against the orbit of q.

    lambda_n = <x_n, v_n>/<v_n, v_n> with v_n = T^n q; the residual is the
    distance from x_n to the line C*v_n. Indices with v_n = 0 get lambda = 0
    and residual ||x_n||. With renormalize=True and lambda_0 != 0 the pair is
    rescaled so lambda_0 = 1 (q absorbs the factor; residuals unchanged).
    """
    q = np.asarray(q, dtype=np.complex128)
    if q.shape != (traj.dim,):
        raise ArgumentError(f"q has shape {q.shape}, expected ({traj.dim},)")
    if np.linalg.norm(q) == 0.0:
        raise ArgumentError("q must be nonzero")
    V = _orbit_stack(spec, traj.window, q)
    lam, res = kernels.opt_lambda_residuals(traj.points, V)
    if renormalize:
        lam0 = lam[traj.window.offset(0)]
        if lam0 != 0:
            q = lam0 * q
            lam = lam / lam0
    zeros = tuple(
        int(n) for n in traj.window.indices() if lam[traj.window.offset(n)] == 0
    )
    return {
        "lambdas": lam,
        "residual_profile": res,
        "sup_residual": float(np.max(res)),
        "zero_lambda_indices": zeros,
        "q": q,
    }


# ---------------------------------------------------------------------------
# hyperbolic shadowing


def solve_shadowing_hyperbolic(split, spec, traj):
    """Shadowing point for a hyperbolic operator: q = x_0 - y_0.

    The corrector y_n sums the stable parts of past defects forward and the
    unstable parts of future defects backward; truncation to the window keeps
    the recurrence y_{n+1} = A y_n + z_n exact at every step, so the residual
    x_n - T^n q equals y_n identically and stays below K * sup||z||.

    The profile is computed through the splitting's cluster recursions:
    powering A directly amplifies rounding in the unstable directions
    exponentially, while the recursions only ever iterate contractions.
    """
    sp = split.splitting if isinstance(split, EigenSplit) else split
    if sp is None:
        raise SpecificationError("operator has no hyperbolic splitting")
    if traj.dim != spec.dim:
        raise ArgumentError("trajectory and operator dims differ")
    A = spec.matrix()
    X = traj.points
    Z = X[1:] - X[:-1] @ A.T  # z_n = x_{n+1} - A x_n
    n_pts = X.shape[0]
    k_E = sp.basis_E.shape[1]
    k_F = sp.basis_F.shape[1]

    Y = np.zeros((n_pts, traj.dim), dtype=np.complex128)
    if k_E:
        # c_j = coordinates of P_E z_j in the stable basis
        C_E = (sp.P_E @ Z.T).T @ sp.basis_E.conj()
        s = np.zeros(k_E, dtype=np.complex128)
        for n in range(1, n_pts):
            s = sp.A_E @ s + C_E[n - 1]
            Y[n] += sp.basis_E @ s
    if k_F:
        C_F = (sp.P_F @ Z.T).T @ sp.basis_F.conj()
        B = np.linalg.inv(sp.A_F)
        t = np.zeros(k_F, dtype=np.complex128)
        for n in range(n_pts - 2, -1, -1):
            t = B @ (C_F[n] + t)
            Y[n] -= sp.basis_F @ t

    at0 = traj.window.offset(0)
    q = X[at0] - Y[at0]
    prof = np.linalg.norm(Y, axis=1)
    lam = np.ones(n_pts, dtype=np.complex128)
    sup_z = float(np.max(np.linalg.norm(Z, axis=1))) if n_pts > 1 else 0.0
    return Witness(
        mode="classical",
        window=traj.window,
        q=q,
        lambdas=lam,
        sup_residual=float(np.max(prof)),
        residual_profile=prof,
        meta={
            "gamma": sp.gamma,
            "C": sp.C,
            "K": sp.bound_K,
            "sup_defect": sup_z,
            "bound": sp.bound_K * sup_z,
        },
    )


# ---------------------------------------------------------------------------
# witness search


def _canonical_phase(q):
    # quotient out the global phase for deterministic reporting
    idx = int(np.argmax(np.abs(q)))
    a = q[idx]
    if a != 0:
        q = q * (abs(a) / a)
    return q


def _q_key(q):
    return tuple(np.round(q.view(np.float64), 12))


def _weak_alternate(traj, spec, P, q, rounds):
    # fixed q: alternate p by least squares and lambda by the per-index optimum
    X = traj.points
    n_pts, d = X.shape
    V = np.einsum("nij,j->ni", P, q)
    B = P.reshape(n_pts * d, d)
    p = np.zeros(d, dtype=np.complex128)
    lam = np.zeros(n_pts, dtype=np.complex128)
    for _ in range(rounds):
        lam, _ = kernels.opt_lambda_residuals(X - np.einsum("nij,j->ni", P, p), V)
        rhs = (X - lam.reshape(-1, 1) * V).reshape(n_pts * d)
        p, *_ = np.linalg.lstsq(B, rhs, rcond=None)
    res = np.linalg.norm(X - np.einsum("nij,j->ni", P, p) - lam.reshape(-1, 1) * V, axis=1)
    return p, lam, res


def search_super_witness(traj, spec, mode="super", budget=200, seed=0):
    """Best witness found by multi-start local descent; an upper bound on the optimum.

    Candidates for q are normalized trajectory points (stratified over the
    window) plus seeded sphere samples, budget in total. The descent minimizes
    the sum of squared per-index optimal residuals (smooth surrogate); the sup
    residual is re-evaluated for the report. Weak mode alternates p by least
    squares and lambda by the per-index optimum until stall. Deterministic
    for a fixed seed; ties reduce by (residual, lexicographic q).
    """
    if mode not in ("super", "weak-super"):
        raise ArgumentError("mode must be 'super' or 'weak-super'")
    if budget <= 0:
        raise ArgumentError("budget must be > 0")
    if len(traj) == 0:
        raise ArgumentError("empty trajectory")
    d = traj.dim
    rng = np.random.default_rng(seed)
    P = power_stack(spec, traj.window.n_min, traj.window.n_max)
    X = traj.points

    n_traj = min(budget // 2, len(traj))
    cands = []
    if n_traj:
        # stratified sample of trajectory directions
        pick = np.linspace(0, len(traj) - 1, n_traj).astype(int)
        for i in pick:
            v = X[i]
            nv = np.linalg.norm(v)
            if nv > 0:
                cands.append(v / nv)
    while len(cands) < budget:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        cands.append(v / np.linalg.norm(v))
    Q = np.array(cands)

    sups = kernels.sup_residuals(P, X, Q)
    order = np.argsort(sups, kind="stable")
    n_polish = min(6, len(order))

    def unpack(u):
        z = u[:d] + 1j * u[d:]
        nz = np.linalg.norm(z)
        return z / nz if nz > 0 else np.eye(d, dtype=np.complex128)[0]

    def objective(u):
        qq = unpack(u)
        if mode == "super":
            V = np.einsum("nij,j->ni", P, qq)
            _, res = kernels.opt_lambda_residuals(X, V)
        else:
            _, _, res = _weak_alternate(traj, spec, P, qq, rounds=3)
        return float(np.sum(res**2))

    def score(qq):
        qq = _canonical_phase(qq)
        if mode == "super":
            fit = optimal_lambdas(traj, spec, qq)
            return (fit["sup_residual"], _q_key(qq), qq, fit, None)
        p, lam, res = _weak_alternate(traj, spec, P, qq, rounds=12)
        zeros = tuple(
            int(n) for n in traj.window.indices() if lam[traj.window.offset(n)] == 0
        )
        fit = {
            "lambdas": lam,
            "residual_profile": res,
            "sup_residual": float(np.max(res)),
            "zero_lambda_indices": zeros,
        }
        return (fit["sup_residual"], _q_key(qq), qq, fit, p)

    best = None
    for rank in range(n_polish):
        q0 = Q[order[rank]]
        # keep the unpolished candidate too: the surrogate can trade a tiny
        # l2 gain for a worse sup
        for cand_q in (q0,):
            cand = score(cand_q)
            if best is None or cand[:2] < best[:2]:
                best = cand
        u0 = np.concatenate([q0.real, q0.imag])
        out = scipy.optimize.minimize(
            objective,
            u0,
            method="Nelder-Mead",
            options={"maxiter": 150 * d, "xatol": 1e-9, "fatol": 1e-14},
        )
        cand = score(unpack(out.x))
        if cand[:2] < best[:2]:
            best = cand
    _, _, qq, fit, p = best
    return Witness(
        mode=mode,
        window=traj.window,
        q=qq,
        p=p,
        lambdas=fit["lambdas"],
        sup_residual=fit["sup_residual"],
        residual_profile=fit["residual_profile"],
        zero_lambda_indices=fit["zero_lambda_indices"],
        meta={"budget": budget, "seed": seed, "starts_ranked": int(n_polish)},
    )


# ---------------------------------------------------------------------------
# constructive witnesses for the structured compact models


def _nilpotency_index(S):
    # smallest m >= 1 with S^m = 0
    d = S.shape[0]
    M = np.eye(d, dtype=np.complex128)
    for m in range(1, d + 1):
        M = M @ S
        if np.all(M == 0):
            return m
    raise SpecificationError("S is not nilpotent")


def structured_delta(spec, eps):
    """Defect budget delta(eps) under which the structured witness is guaranteed.

    Projection-to-line: eps / (2 ||P_M||).  Nilpotent-plus-rotation with
    S^m = 0: eps / (||P_Y|| sum_{l<m} ||S^l|| + m ||P_N|| + 1); both
    coordinate projections have norm 1 in these models.
    """
    if eps <= 0:
        raise ArgumentError("eps must be > 0")
    if isinstance(spec, ProjectionToLine):
        P_M = np.eye(spec.dim) - materialize(spec)
        return eps / (2.0 * float(np.linalg.norm(P_M, 2)))
    if isinstance(spec, NilpotentPlusRotation):
        S = spec.nilpotent
        m = _nilpotency_index(S)
        sum_S = float(
            sum(np.linalg.norm(np.linalg.matrix_power(S, l), 2) for l in range(m))
        )
        return eps / (sum_S + m + 1.0)
    raise ArgumentError(
        "structured witness needs a nilpotent-plus-rotation or projection-to-line operator"
    )


def construct_witness_structured(spec, traj, eps, limit_mode=False):
    """Explicit witness for the nilpotent-plus-rotation and projection models.

    Nilpotent-plus-rotation: with S^m = 0, any pseudotrajectory of defect
    delta(eps) = eps / (||P_Y|| sum_{l<m} ||S^l|| + m ||P|| + 1) is matched by
    q = (x_0^Y, q_N), lambda_n = 1 below m and y_n / (beta^n q_N) from m on,
    with sup residual < eps. Projection-to-line: delta = eps / (2 ||P_M||),
    q = x_0^M + nu, lambda_n = y_n / nu, residual ||x_n^M|| < eps for n >= 1.
    Limit mode keeps the unit vector nu itself (no perturbation toward y_0),
    defines lambda_n = y_n / (beta^n nu) at every index, and reports the
    linear growth constant C with |lambda_n| <= C n.
    """
    if eps <= 0:
        raise ArgumentError("eps must be > 0")
    if traj.window.kind != "positive":
        raise ArgumentError("structured witnesses are positive-window constructions")
    if traj.dim != spec.dim:
        raise ArgumentError("trajectory and operator dims differ")
    d = spec.dim
    W = traj.points[:, :-1]  # component in Y (or M)
    ys = traj.points[:, -1]  # coordinate along the distinguished line N
    n_pts = len(traj)
    defect = measure_defect(traj, spec).max_defect

    if isinstance(spec, ProjectionToLine):
        if limit_mode:
            raise ArgumentError("limit mode applies to the nilpotent-plus-rotation model")
        # P_M projects onto the complement of the line; norm 1 in this model
        P_M = np.eye(d) - materialize(spec)
        norm_P = float(np.linalg.norm(P_M, 2))
        delta = structured_delta(spec, eps)
        if defect > delta:
            raise ArgumentError(
                f"defect {defect:.3e} exceeds delta(eps) = {delta:.3e}"
            )
        nu = ys[0] if ys[0] != 0 else eps / 2.0
        q = np.concatenate([W[0], [nu]])
        lam = np.empty(n_pts, dtype=np.complex128)
        lam[0] = 1.0
        lam[1:] = ys[1:] / nu
        zeros = tuple(int(n) for n in range(1, n_pts) if lam[n] == 0)
        prof = residual_profile(traj, spec, q, lam)
        return Witness(
            mode="super",
            window=traj.window,
            q=q,
            lambdas=lam,
            sup_residual=float(np.max(prof)),
            residual_profile=prof,
            zero_lambda_indices=zeros,
            meta={"eps": eps, "delta": delta, "norm_P": norm_P},
        )

    if not isinstance(spec, NilpotentPlusRotation):
        raise ArgumentError(
            "structured witness needs a nilpotent-plus-rotation or projection-to-line operator"
        )
    S = spec.nilpotent
    beta = spec.rotation
    m = _nilpotency_index(S)
    sum_S = float(sum(np.linalg.norm(np.linalg.matrix_power(S, l), 2) for l in range(m)))

    if limit_mode:
        nu = 1.0 + 0.0j  # unit vector of N in coordinates
        q = np.concatenate([W[0], [nu]])
        lam = ys / (beta ** np.arange(n_pts, dtype=np.float64) * nu)
        zeros = tuple(int(n) for n in range(n_pts) if lam[n] == 0)
        prof = residual_profile(traj, spec, q, lam)
        ns = np.arange(1, n_pts)
        growth = float(np.max(np.abs(lam[1:]) / ns)) if n_pts > 1 else 0.0
        return Witness(
            mode="limit-super",
            window=traj.window,
            q=q,
            lambdas=lam,
            sup_residual=float(np.max(prof)),
            residual_profile=prof,
            zero_lambda_indices=zeros,
            meta={
                "eps": eps,
                "m": m,
                "lambda_growth_C": growth,
                "lambda_growth_note": "|lambda_n| <= C n with the reported C",
                "input_tail_drift": measure_defect(traj, spec).tail_sup(max(1, n_pts // 2)),
            },
        )

    delta = structured_delta(spec, eps)
    if defect > delta:
        raise ArgumentError(f"defect {defect:.3e} exceeds delta(eps) = {delta:.3e}")
    q_N = ys[0] if ys[0] != 0 else delta / 2.0
    q = np.concatenate([W[0], [q_N]])
    lam = np.ones(n_pts, dtype=np.complex128)
    for n in range(m, n_pts):
        lam[n] = ys[n] / (beta ** float(n) * q_N)
    zeros = tuple(int(n) for n in range(m, n_pts) if lam[n] == 0)
    prof = residual_profile(traj, spec, q, lam)
    return Witness(
        mode="super",
        window=traj.window,
        q=q,
        lambdas=lam,
        sup_residual=float(np.max(prof)),
        residual_profile=prof,
        zero_lambda_indices=zeros,
        meta={"eps": eps, "delta": delta, "m": m, "sum_S_norms": sum_S},
    )


# ---------------------------------------------------------------------------
# restriction and corrector representations


def restrict_witness(witness, P_M, spec, traj):
    """Project a witness onto an invariant subspace M = ran(P_M).

    Requires both M and ker(P_M) invariant (the projected-orbit identity
    P T^n = T^n P needs both); then the new residual is at most ||P_M|| times
    the old one.
    """
    P_M = np.asarray(P_M, dtype=np.complex128)
    d = spec.dim
    A = spec.matrix()
    eye = np.eye(d)
    if np.linalg.norm(P_M @ P_M - P_M, 2) > 1e-10:
        raise ArgumentError("P_M is not a projection")
    if np.linalg.norm((eye - P_M) @ A @ P_M, 2) > 1e-10:
        raise SpecificationError("ran(P_M) is not invariant")
    if np.linalg.norm(P_M @ A @ (eye - P_M), 2) > 1e-10:
        raise SpecificationError(
            "ker(P_M) is not invariant; the projection does not commute with the operator"
        )
    scale = max(1.0, float(np.max(np.linalg.norm(traj.points, axis=1))))
    off = np.max(np.linalg.norm(traj.points - traj.points @ P_M.T, axis=1))
    if off > 1e-8 * scale:
        raise ArgumentError("trajectory does not lie in ran(P_M)")
    q = P_M @ witness.q
    p = P_M @ witness.p if witness.p is not None else None
    prof = residual_profile(traj, spec, q, witness.lambdas, p)
    return Witness(
        mode=witness.mode,
        window=witness.window,
        q=q,
        p=p,
        lambdas=np.array(witness.lambdas),
        sup_residual=float(np.max(prof)),
        residual_profile=prof,
        zero_lambda_indices=witness.zero_lambda_indices,
        meta={**witness.meta, "restricted_norm_P": float(np.linalg.norm(P_M, 2))},
    )


@dataclass
class CorrectorSystem:
    """Recurrence form y_{n+1} = A y_n + z_n + beta_n T^{n+1} q of a witness.

    scale carries the M/delta factor of the conversion; K is the measured
    ratio sup||y|| / sup||z||.
    """

    z: np.ndarray
    beta: np.ndarray
    y: np.ndarray
    q: np.ndarray
    K: float
    scale: float
    window: Window

    def recurrence_defect(self, traj, spec):
        """max_n ||y_{n+1} - A y_n - z_n - beta_n T^{n+1} q||."""
        A = spec.matrix()
        P = power_stack(spec, self.window.n_min + 1, self.window.n_max)
        drive = np.einsum("nij,j->ni", P, self.q)
        pred = self.y[:-1] @ A.T + self.z + self.beta.reshape(-1, 1) * drive
        return float(np.max(np.linalg.norm(self.y[1:] - pred, axis=1)))


def witness_to_corrector(traj, spec, witness, M=None, delta=None):
    """Forward conversion y_n = c (x_n - T^n p - lambda_n T^n q), c = M/delta."""
    c = 1.0
    if M is not None and delta is not None:
        if delta <= 0:
            raise ArgumentError("delta must be > 0")
        c = M / delta
    A = spec.matrix()
    X = traj.points
    Z = c * (X[1:] - X[:-1] @ A.T)
    Xc = X
    if witness.p is not None:
        Xc = Xc - _orbit_stack(spec, traj.window, witness.p)
    V = _orbit_stack(spec, traj.window, witness.q)
    lam = np.asarray(witness.lambdas, dtype=np.complex128)
    Y = c * (Xc - lam.reshape(-1, 1) * V)
    beta = c * (lam[:-1] - lam[1:])
    sup_z = float(np.max(np.linalg.norm(Z, axis=1))) if len(Z) else 0.0
    sup_y = float(np.max(np.linalg.norm(Y, axis=1)))
    if sup_z > 0:
        K = sup_y / sup_z
    else:
        K = 0.0 if sup_y == 0 else math.inf
    return CorrectorSystem(Z, beta, Y, np.array(witness.q), K, c, traj.window)


def corrector_to_witness(system, traj, spec):
    """Backward conversion: p = x_0 - y_0/c, lambda_0 = 0, lambda_{n+1} = lambda_n - beta_n/c."""
    c = system.scale
    win = system.window
    n_pts = len(win)
    lam = np.zeros(n_pts, dtype=np.complex128)
    at0 = win.offset(0)
    for i in range(at0, n_pts - 1):
        lam[i + 1] = lam[i] - system.beta[i] / c
    for i in range(at0 - 1, -1, -1):
        lam[i] = lam[i + 1] + system.beta[i] / c
    p = traj.point(0) - system.y[at0] / c
    q = system.q
    prof = residual_profile(traj, spec, q, lam, p)
    zeros = tuple(int(n) for n in win.indices() if lam[win.offset(n)] == 0)
    return Witness(
        mode="weak-super",
        window=win,
        q=np.array(q),
        p=p,
        lambdas=lam,
        sup_residual=float(np.max(prof)),
        residual_profile=prof,
        zero_lambda_indices=zeros,
        meta={"K_measured": system.K, "scale": system.scale},
    )


# ---------------------------------------------------------------------------
# certified divergence lower bounds


_SLACK_NOTE = (
    "per-cell slack: residual(q') >= residual(center) - ||x_n|| * dc, where "
    "dc bounds the chordal distance between the lines C*T^n q' and "
    "C*T^n center by the tighter of ||T^n|| h / (||T^n center|| - ||T^n|| h) "
    "and s1(T^n) s2(T^n) h / (||T^n center|| max(smin(T^n), ||T^n center|| - "
    "||T^n|| h)), capped at 1; h bounds the euclidean covering radius of the "
    "cell after an optimal global phase (the l1 chart radius is used above "
    "dim 2; the phase-aligned radius collapses the chart poles, where whole "
    "coordinate edges are projectively one point)"
)


@dataclass
class CertificateRung:
    window: Window
    bound: float
    upper: float
    status: str  # certified | inconclusive | upper-bound-of-min
    boxes: int
    h_final: float
    note: str


def _chart(dim):
    # chart of the projective sphere with all partial derivatives bounded by 1
    if dim == 2:
        lo = np.array([0.0, 0.0])
        hi = np.array([math.pi / 2, 2 * math.pi])

        def to_q(u):
            t, phi = u
            return np.array([math.cos(t), math.sin(t) * np.exp(1j * phi)])

    elif dim == 3:
        lo = np.array([0.0, 0.0, 0.0, 0.0])
        hi = np.array([math.pi / 2, math.pi / 2, 2 * math.pi, 2 * math.pi])

        def to_q(u):
            t1, t2, f1, f2 = u
            return np.array(
                [
                    math.cos(t1),
                    math.sin(t1) * math.cos(t2) * np.exp(1j * f1),
                    math.sin(t1) * math.sin(t2) * np.exp(1j * f2),
                ]
            )

    else:
        raise ArgumentError("certification charts cover dims 2 and 3")
    return lo, hi, to_q


def _cover_radii_2(centers, radii):
    """Covering radius, up to a global phase, of dim-2 chart cells.

    Line distances are phase-invariant, so each cell point may be rotated
    before measuring its distance to the center. Three valid bounds are
    combined: the chart l1 radius, the plain euclidean estimate (tight near
    t = 0 where phi multiplies the small component), and the estimate after
    aligning phases on the second component (tight near t = pi/2, where the
    whole chart edge is projectively a single point).
    """
    t = centers[:, 0]
    rt, rf = float(radii[0]), float(radii[1])
    s_hi = np.sin(np.minimum(math.pi / 2, t + rt))
    c_lo = np.cos(np.maximum(0.0, t - rt))
    h1 = rt + rf
    h0 = (s_hi + c_lo) * rt + s_hi * rf
    ha = s_hi * rt + c_lo * (rt + rf)
    return np.minimum(h1, np.minimum(h0, ha))


def _certify_min(traj, spec, rel_tol, max_boxes):
    d = traj.dim
    X = traj.points
    P = power_stack(spec, traj.window.n_min, traj.window.n_max)
    xnorms = np.linalg.norm(X, axis=1)
    sv_pows = np.linalg.svd(P, compute_uv=False)
    pnorms = sv_pows[:, 0]
    s1s2 = sv_pows[:, 0] * sv_pows[:, 1] if d >= 2 else sv_pows[:, 0] ** 2
    smins = sv_pows[:, -1]

    if d == 1:
        # a line in C^1 is everything; the residual is 0 wherever T^n q != 0
        q = np.ones(1, dtype=np.complex128)
        V = np.einsum("nij,j->ni", P, q)
        _, res = kernels.opt_lambda_residuals(X, V)
        val = float(np.max(res))
        return val, val, 1, 0.0

    lo, hi, to_q = _chart(d)
    n_par = len(lo)
    splits = 4 if n_par == 2 else 2
    radii0 = (hi - lo) / (2 * splits)
    centers = []
    grids = [lo[i] + radii0[i] + 2 * radii0[i] * np.arange(splits) for i in range(n_par)]
    mesh = np.meshgrid(*grids, indexing="ij")
    centers = np.stack([g.ravel() for g in mesh], axis=1)

    def evaluate(cs, radii):
        Q = np.array([to_q(c) for c in cs])
        uppers = kernels.sup_residuals(P, X, Q)
        if d == 2:
            h = _cover_radii_2(cs, radii)
        else:
            h = float(np.sum(radii))
        lows = kernels.certified_lows(P, X, xnorms, pnorms, s1s2, smins, Q, h)
        return uppers, lows

    uppers, lows = evaluate(centers, radii0)
    boxes = [(lows[i], uppers[i], centers[i], radii0) for i in range(len(centers))]
    n_eval = len(boxes)
    global_upper = float(np.min(uppers))

    while n_eval < max_boxes:
        global_lower = min(b[0] for b in boxes)
        if global_lower > 0 and (global_upper - global_lower) <= rel_tol * global_upper:
            break
        # refine the boxes pinning the current lower bound, coarsest level
        # first so each batch shares one cell size
        cut = min(global_lower + 0.25 * max(global_upper - global_lower, 1e-300), global_upper)
        candidates = [i for i, b in enumerate(boxes) if b[0] <= cut]
        level = max(float(np.sum(boxes[i][3])) for i in candidates)
        chosen = [i for i in candidates if float(np.sum(boxes[i][3])) == level]
        chosen.sort(key=lambda i: boxes[i][0])
        chosen = chosen[:256]
        child_radii = boxes[chosen[0]][3] / 2.0
        children_centers = []
        for i in chosen:
            c, r = boxes[i][2], boxes[i][3]
            for signs in np.ndindex(*(2,) * n_par):
                off = (np.array(signs) - 0.5) * r
                children_centers.append(c + off)
        uppers, lows = evaluate(np.array(children_centers), child_radii)
        n_eval += len(children_centers)
        global_upper = min(global_upper, float(np.min(uppers)))
        chosen_set = set(chosen)
        rest = [b for i, b in enumerate(boxes) if i not in chosen_set]
        children = [
            (lows[i], uppers[i], children_centers[i], child_radii)
            for i in range(len(children_centers))
        ]
        # prune cells certifiably above the best upper bound: they cannot
        # contain the minimizer
        boxes = rest + [b for b in children if b[0] < global_upper]
        if not boxes:
            return global_upper, global_upper, n_eval, float(np.sum(child_radii))

    global_lower = min(b[0] for b in boxes)
    h_final = float(np.sum(min(boxes, key=lambda b: b[0])[3]))
    return global_lower, global_upper, n_eval, h_final


def divergence_certificate(
    trajs, spec, certify_dim_cap=3, rel_tol=0.05, max_boxes=60000, budget=64, seed=0
):
    """Certified lower bounds on the best possible sup-residual, per window.

    Input is a ladder of trajectories of the same construction on nested
    windows. For dim <= certify_dim_cap the bound comes from branch-and-bound
    over a projective chart of q with per-cell Lipschitz slack (certified,
    valid for every lambda choice including zeros); above the cap the curve
    is the searcher's best value, explicitly flagged as an upper bound of the
    minimum, not a certificate.
    """
    trajs = list(trajs)
    if not trajs:
        raise ArgumentError("empty ladder")
    note0 = trajs[0].origin_note
    for a, b in zip(trajs, trajs[1:]):
        if a.origin_note != b.origin_note:
            raise ArgumentError("ladder mixes different trajectory families")
        if a.window.kind != b.window.kind or a.window.N >= b.window.N:
            raise ArgumentError("ladder windows must be nested and strictly growing")
        na, nb = len(a), len(b)
        off = b.window.offset(a.window.n_min)
        if not np.allclose(b.points[off : off + na], a.points, atol=1e-12):
            raise ArgumentError("ladder trajectories disagree on their common window")
    rungs = []
    for tr in trajs:
        if tr.dim <= certify_dim_cap and tr.dim <= 3:
            low, up, n_eval, h = _certify_min(tr, spec, rel_tol, max_boxes)
            status = "certified" if low > 0 else "inconclusive"
            rungs.append(
                CertificateRung(
                    window=tr.window,
                    bound=max(low, 0.0),
                    upper=up,
                    status=status,
                    boxes=n_eval,
                    h_final=h,
                    note=_SLACK_NOTE,
                )
            )
        else:
            w = search_super_witness(tr, spec, mode="super", budget=budget, seed=seed)
            rungs.append(
                CertificateRung(
                    window=tr.window,
                    bound=w.sup_residual,
                    upper=w.sup_residual,
                    status="upper-bound-of-min",
                    boxes=0,
                    h_final=math.nan,
                    note="dim exceeds the certification cap; searcher value, no certificate",
                )
            )
    return rungs


# ---------------------------------------------------------------------------
# serialization


def _vec_j(v):
    return [[z.real, z.imag] for z in v]


def _vec_u(rows):
    return np.array([complex(re, im) for re, im in rows], dtype=np.complex128)


def witness_to_jsonable(w):
    return {
        "mode": w.mode,
        "window": {"kind": w.window.kind, "N": w.window.N},
        "q": _vec_j(w.q),
        "p": _vec_j(w.p) if w.p is not None else None,
        "lambdas": _vec_j(w.lambdas),
        "sup_residual": w.sup_residual,
        "residual_profile": [float(r) for r in w.residual_profile],
        "zero_lambda_indices": list(w.zero_lambda_indices),
        "meta": {k: v for k, v in w.meta.items() if isinstance(v, (int, float, str, bool))},
    }


def witness_from_jsonable(obj):
    try:
        win = Window(obj["window"]["kind"], int(obj["window"]["N"]))
        return Witness(
            mode=obj["mode"],
            window=win,
            q=_vec_u(obj["q"]),
            p=_vec_u(obj["p"]) if obj.get("p") is not None else None,
            lambdas=_vec_u(obj["lambdas"]),
            sup_residual=float(obj["sup_residual"]),
            residual_profile=np.array(obj["residual_profile"], dtype=np.float64),
            zero_lambda_indices=tuple(obj.get("zero_lambda_indices", ())),
            meta=dict(obj.get("meta", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecificationError(f"malformed witness record: {exc}") from exc


def save_witness(w, path):
    with open(path, "w") as fh:
        json.dump(witness_to_jsonable(w), fh, indent=1, allow_nan=False)
        fh.write("\n")


def load_witness(path):
    with open(path) as fh:
        return witness_from_jsonable(json.load(fh))


def witness_csv(w):
    """One row per index: n, lambda, residual. Deterministic text."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["n", "lambda_re", "lambda_im", "residual"])
    for n in w.window.indices():
        i = w.window.offset(n)
        wr.writerow(
            [n, repr(float(w.lambdas[i].real)), repr(float(w.lambdas[i].imag)), repr(float(w.residual_profile[i]))]
        )
    return buf.getvalue()
