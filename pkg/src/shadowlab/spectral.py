"""Eigenvalue clustering, hyperbolic splittings, and tracking-property verdicts.

The unit circle is the dividing line: eigenvalues are clustered into stable
(|lam| < 1 - tol), middle (within tol of the circle) and unstable
(|lam| > 1 + tol). An empty middle cluster yields a splitting E + F with
measured decay constants; the verdict rules are a fixed decision list over
the clusters.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ArgumentError
from .operators import structured_eigenvalues, is_invertible, operator_norm

__all__ = [
    "SHADOWING",
    "POSITIVE_SUPER_NOT_SHADOWING",
    "POSITIVE_LIMIT_SUPER_NOT_SHADOWING",
    "NO_POSITIVE_SUPER",
    "TRIVIALLY_SUPER",
    "INDETERMINATE",
    "HyperbolicSplitting",
    "EigenSplit",
    "Verdict",
    "eigen_split",
    "verify_splitting",
    "classify",
]

SHADOWING = "Shadowing"
POSITIVE_SUPER_NOT_SHADOWING = "PositiveSuperShadowingNotShadowing"
POSITIVE_LIMIT_SUPER_NOT_SHADOWING = "PositiveLimitSuperShadowingNotShadowing"
NO_POSITIVE_SUPER = "NoPositiveSuperShadowing"
TRIVIALLY_SUPER = "TriviallySuperShadowing"
INDETERMINATE = "Indeterminate"

#: default distance from the unit circle that separates the clusters
UNIT_CIRCLE_TOL = 1e-8

#: power horizon on which the decay constant C is measured
DEFAULT_HORIZON = 200


@dataclass
class HyperbolicSplitting:
    """Invariant splitting E + F with measured decay data.

    P_E/P_F are the (generally oblique) projections onto the stable and
    unstable parts; basis_E/basis_F are orthonormal bases; A_E/A_F are the
    restrictions in those bases. gamma < 1 and C >= 1 are measured so that
    ||A^n v|| <= C gamma^n ||v|| on E and ||A^-n v|| <= C gamma^n ||v|| on F
    for 1 <= n <= horizon.
    """

    P_E: np.ndarray
    P_F: np.ndarray
    basis_E: np.ndarray
    basis_F: np.ndarray
    A_E: np.ndarray
    A_F: np.ndarray
    gamma: float
    C: float
    horizon: int
    jordan_slack: bool

    @property
    def bound_K(self):
        """Interior tracking bound K = C(1+gamma)/(1-gamma)."""
        return self.C * (1.0 + self.gamma) / (1.0 - self.gamma)


@dataclass
class EigenSplit:
    """Clustered eigenvalues plus the splitting when the middle is empty."""

    eigenvalues: np.ndarray
    stable: np.ndarray
    middle: np.ndarray
    unstable: np.ndarray
    margin: float
    unit_circle_tol: float
    splitting: HyperbolicSplitting | None = None
    exact_spectrum: bool = False


@dataclass
class Verdict:
    tag: str
    limit_flag: bool = False
    certificate: dict = field(default_factory=dict)
    unit_circle_tol: float = UNIT_CIRCLE_TOL

    def to_jsonable(self):
        return {
            "tag": self.tag,
            "limit_flag": self.limit_flag,
            "unit_circle_tol": self.unit_circle_tol,
            "certificate": self.certificate,
        }


def _spectrum(spec):
    vals = structured_eigenvalues(spec)
    if vals is not None:
        return np.asarray(vals, dtype=np.complex128), True
    return np.linalg.eigvals(spec.matrix()), False


def _cluster_masks(lam, tol):
    mod = np.abs(lam)
    middle = np.abs(mod - 1.0) <= tol
    stable = ~middle & (mod < 1.0)
    unstable = ~middle & (mod > 1.0)
    return stable, middle, unstable


def _sorted_schur_basis(A, predicate):
    # leading sdim columns of Z span the invariant subspace of the
    # eigenvalues selected by predicate; T11 is the restriction there
    T, Z, sdim = scipy.linalg.schur(A, output="complex", sort=predicate)
    return Z[:, :sdim], T[:sdim, :sdim], sdim


def _nondiagonalizable(A_cluster):
    # eigenvector-matrix conditioning as a defectiveness proxy; a defective
    # (or nearly defective) cluster shows a blowing-up eigenvector basis
    k = A_cluster.shape[0]
    if k <= 1:
        return False
    _, V = np.linalg.eig(A_cluster)
    return np.linalg.cond(V) > 1e6


def eigen_split(spec, unit_circle_tol=UNIT_CIRCLE_TOL, horizon=DEFAULT_HORIZON):
    """Cluster the spectrum about the unit circle; build the splitting if hyperbolic.

    Returns an EigenSplit. The splitting field is populated exactly when the
    middle cluster is empty; gamma takes the measured cluster radii with a
    slack step gamma <- (gamma+1)/2 when a defective cluster is detected, and
    C is measured on the power horizon.
    """
    if horizon < 1:
        raise ArgumentError("horizon must be >= 1")
    A = spec.matrix()
    lam, exact = _spectrum(spec)
    s_mask, m_mask, u_mask = _cluster_masks(lam, unit_circle_tol)
    margin = float(np.min(np.abs(np.abs(lam) - 1.0)))
    split = EigenSplit(
        eigenvalues=lam,
        stable=lam[s_mask],
        middle=lam[m_mask],
        unstable=lam[u_mask],
        margin=margin,
        unit_circle_tol=unit_circle_tol,
        exact_spectrum=exact,
    )
    if m_mask.any():
        return split

    tol = unit_circle_tol
    d = A.shape[0]
    Q_E, A_E, k_E = _sorted_schur_basis(A, lambda z: abs(z) < 1.0 - tol)
    Q_F, A_F, k_F = _sorted_schur_basis(A, lambda z: abs(z) > 1.0 + tol)
    if k_E + k_F != d:
        # Schur's internal eigenvalue ordering disagreed with the clustering;
        # treat as a failed split rather than guessing
        return split

    gamma = 0.0
    if k_E:
        gamma = max(gamma, float(np.max(np.abs(lam[s_mask]))))
    if k_F:
        gamma = max(gamma, float(np.max(1.0 / np.abs(lam[u_mask]))))
    slack = (k_E > 0 and _nondiagonalizable(A_E)) or (k_F > 0 and _nondiagonalizable(A_F))
    if slack:
        gamma = (gamma + 1.0) / 2.0

    C = 1.0
    if k_E:
        M = np.eye(k_E, dtype=np.complex128)
        for n in range(1, horizon + 1):
            M = A_E @ M
            C = max(C, float(np.linalg.norm(M, 2)) / gamma**n)
    if k_F:
        B = np.linalg.inv(A_F)
        M = np.eye(k_F, dtype=np.complex128)
        for n in range(1, horizon + 1):
            M = B @ M
            C = max(C, float(np.linalg.norm(M, 2)) / gamma**n)

    W = np.hstack([Q_E, Q_F])
    sel = np.zeros((d, d), dtype=np.complex128)
    sel[:k_E, :k_E] = np.eye(k_E)
    P_E = W @ sel @ np.linalg.inv(W)
    P_F = np.eye(d, dtype=np.complex128) - P_E

    split.splitting = HyperbolicSplitting(
        P_E=P_E,
        P_F=P_F,
        basis_E=Q_E,
        basis_F=Q_F,
        A_E=A_E,
        A_F=A_F,
        gamma=gamma,
        C=C,
        horizon=horizon,
        jordan_slack=slack,
    )
    return split


def verify_splitting(split, spec, n_samples=25, seed=0, tol=1e-8):
    """Check the splitting invariants; returns a dict of measured defects.

    Verifies P_E + P_F = I, idempotency, commutation with the operator, and
    the decay inequalities on sampled vectors up to the stored horizon.
    """
    sp = split.splitting if isinstance(split, EigenSplit) else split
    if sp is None:
        raise ArgumentError("no splitting to verify")
    A = spec.matrix()
    d = A.shape[0]
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    report = {
        "sum_defect": float(np.linalg.norm(sp.P_E + sp.P_F - np.eye(d), 2)),
        "idem_E": float(np.linalg.norm(sp.P_E @ sp.P_E - sp.P_E, 2)),
        "idem_F": float(np.linalg.norm(sp.P_F @ sp.P_F - sp.P_F, 2)),
        "commute_E": float(np.linalg.norm(A @ sp.P_E - sp.P_E @ A, 2)) / scale,
        "commute_F": float(np.linalg.norm(A @ sp.P_F - sp.P_F @ A, 2)) / scale,
    }
    rng = np.random.default_rng(seed)
    worst = 0.0
    k_E = sp.basis_E.shape[1]
    k_F = sp.basis_F.shape[1]
    for _ in range(n_samples):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        if k_E:
            e = sp.P_E @ v
            ne = np.linalg.norm(e)
            if ne > 0:
                w = e
                for n in range(1, sp.horizon + 1):
                    w = A @ w
                    worst = max(worst, np.linalg.norm(w) / (sp.C * sp.gamma**n * ne) - 1.0)
        if k_F:
            f = sp.P_F @ v
            nf = np.linalg.norm(f)
            if nf > 0:
                c = sp.basis_F.conj().T @ f
                B = np.linalg.inv(sp.A_F)
                for n in range(1, sp.horizon + 1):
                    c = B @ c
                    worst = max(worst, np.linalg.norm(c) / (sp.C * sp.gamma**n * nf) - 1.0)
    report["decay_excess"] = float(max(worst, 0.0))
    report["ok"] = bool(
        report["sum_defect"] <= tol
        and report["idem_E"] <= tol
        and report["idem_F"] <= tol
        and report["commute_E"] <= tol
        and report["commute_F"] <= tol
        and report["decay_excess"] <= tol
    )
    return report


def _nilpotency_defect(A, stable_basis, power):
    # norm of A^power restricted to the invariant subspace, relative to the
    # scale-correct budget max(1, ||A||)^power
    if stable_basis.shape[1] == 0:
        return np.inf
    T11 = stable_basis.conj().T @ A @ stable_basis
    M = np.linalg.matrix_power(T11, power)
    return float(np.linalg.norm(M, 2))


def classify(spec, unit_circle_tol=UNIT_CIRCLE_TOL):
    """Verdict for the operator's tracking behaviour.

    Decision list: (a) dim 1 by the modulus of the single eigenvalue;
    (b) hyperbolic and invertible; (c) nilpotent stable part plus a single
    unimodular eigenvalue; (d) unitary with dim > 1; (e) indeterminate with
    the failed hypotheses spelled out.
    """
    tol = unit_circle_tol
    A = spec.matrix()
    d = spec.dim
    lam, exact = _spectrum(spec)
    s_mask, m_mask, u_mask = _cluster_masks(lam, tol)
    cert = {
        "dim": d,
        "eigenvalues": [[z.real, z.imag] for z in np.sort_complex(lam)],
        "exact_spectrum": exact,
        "note": "verdict describes this finite-dimensional operator",
    }

    if d == 1:
        if np.abs(np.abs(lam[0]) - 1.0) <= tol:
            return Verdict(TRIVIALLY_SUPER, False, cert, tol)
        return Verdict(SHADOWING, False, cert, tol)

    invertible = is_invertible(spec)
    cert["invertible"] = invertible
    if not m_mask.any() and invertible:
        return Verdict(SHADOWING, False, cert, tol)

    # single unimodular eigenvalue atop a nilpotent stable cluster
    if int(m_mask.sum()) == 1 and not u_mask.any() and s_mask.any():
        Q0, _, k0 = _sorted_schur_basis(A, lambda z: abs(z) < 1.0 - tol)
        if k0 == int(s_mask.sum()):
            defect = _nilpotency_defect(A, Q0, d)
            budget = 1e-8 * max(1.0, operator_norm(spec)) ** d
            cert["nilpotency_defect"] = defect
            cert["nilpotency_budget"] = budget
            if defect <= budget:
                beta = lam[m_mask][0]
                cert["rotation"] = [beta.real, beta.imag]
                return Verdict(POSITIVE_SUPER_NOT_SHADOWING, True, cert, tol)

    unitary_defect = float(np.linalg.norm(A.conj().T @ A - np.eye(d), 2))
    cert["unitary_defect"] = unitary_defect
    if unitary_defect <= tol:
        return Verdict(NO_POSITIVE_SUPER, False, cert, tol)

    reasons = []
    if m_mask.any():
        reasons.append("middle cluster nonempty: %d eigenvalue(s) within tol of the unit circle" % int(m_mask.sum()))
    if not invertible:
        reasons.append("operator is numerically singular")
    if m_mask.any() and (int(m_mask.sum()) != 1 or u_mask.any()):
        reasons.append("middle cluster is not a single simple eigenvalue")
    if "nilpotency_defect" in cert and cert["nilpotency_defect"] > cert["nilpotency_budget"]:
        reasons.append("stable cluster is not certified nilpotent")
    if unitary_defect > tol:
        reasons.append("not an isometry (||A*A - I|| = %.3e)" % unitary_defect)
    cert["reasons"] = reasons
    return Verdict(INDETERMINATE, False, cert, tol)
