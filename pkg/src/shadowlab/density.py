"""Projective hitting sets and finite-window density analytics.

For a vector x and an open ball U = B(y, r), the hitting set S(x, U) collects
the indices n >= 0 where the complex line through T^n x passes within r of y.
On top of such index sets this module computes finite-window stand-ins for the
upper density (max of prefix frequencies) and the upper Banach density (min
over window lengths of the best window placement), plus the set shift and the
two transfer checks that turn the abstract supercyclicity statements into
finite searches.

Density values are exact: counts are integers, comparisons run on Fractions,
and the only floating-point step is the final division for reporting.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import io
import csv
import math

import numpy as np

from .errors import ArgumentError
from .operators import OperatorSpec, materialize

__all__ = [
    "IndexSetReport",
    "HittingQuery",
    "hitting_set",
    "line_distances",
    "upper_density_estimate",
    "upper_banach_density_estimate",
    "banach_window_profile",
    "shift_set",
    "rsc_transfer_check",
    "corollary_check",
    "report_to_jsonable",
    "hitting_csv",
    "density_text",
]

# Oracle comparisons near the ball boundary are meaningless; this is the
# exclusion half-width documented for tests.
BOUNDARY_TOL = 1e-6


@dataclass(frozen=True)
class HittingQuery:
    """One projective hitting problem: does C*T^n x meet B(y, r)?"""

    x: np.ndarray
    spec: OperatorSpec
    y: np.ndarray
    r: float
    N: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=complex).reshape(-1)
        y = np.asarray(self.y, dtype=complex).reshape(-1)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.r <= 0:
            raise ArgumentError(f"radius must be positive, got {self.r}")
        if self.N < 0:
            raise ArgumentError(f"horizon must be >= 0, got {self.N}")
        d = self.spec.dim
        if x.shape != (d,) or y.shape != (d,):
            raise ArgumentError(
                f"dimension mismatch: operator is {d}-dimensional, "
                f"x has shape {x.shape}, y has shape {y.shape}"
            )


@dataclass(frozen=True)
class IndexSetReport:
    """An index set A in [0, N] with its finite-window density estimates.

    ud_estimate is max over N' in [ud_N_min, N] of |A cap [0, N']| / (N'+1).
    ubd_estimate is min over window lengths N' in [ubd_window_min,
    ubd_window_max] of the best placement max_m |A cap [m, m+N']| / (N'+1).
    Both are finite-window estimators of asymptotic quantities, so the
    parameter ranges travel with the values; no ordering between the two
    estimates is asserted.  per_N_profile rows are (N', best_m, count, value)
    giving the best placement for each window length in the ubd range.
    """

    indices: tuple
    N: int
    ud_estimate: float
    ubd_estimate: float
    per_N_profile: tuple
    ud_N_min: int
    ubd_window_min: int
    ubd_window_max: int
    distances: tuple = None
    radius: float = None
    origin_note: str = ""

    def __post_init__(self):
        idx = tuple(sorted(int(n) for n in self.indices))
        if idx and (idx[0] < 0 or idx[-1] > self.N):
            raise ArgumentError(f"indices must lie in [0, {self.N}]")
        if len(set(idx)) != len(idx):
            raise ArgumentError("indices must be distinct")
        object.__setattr__(self, "indices", idx)

    @property
    def count(self):
        return len(self.indices)

    def hit(self, n):
        return n in set(self.indices)


def _indices_array(indices, N):
    idx = np.asarray(sorted(set(int(n) for n in indices)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] > N):
        raise ArgumentError(f"indices must lie in [0, {N}]")
    return idx


def _prefix_counts(indices, N):
    # pre[k] = |A cap [0, k-1]|, length N+2
    mask = np.zeros(N + 1, dtype=np.int64)
    idx = _indices_array(indices, N)
    mask[idx] = 1
    pre = np.zeros(N + 2, dtype=np.int64)
    np.cumsum(mask, out=pre[1:])
    return pre


def line_distances(query):
    """Distance from y to the line C*T^n x for n = 0..N.

    dist(y, C*v) = ||y - <u, y> u|| for the unit direction u = v/||v||; the
    direction is renormalized at every step so expanding or contracting
    orbits never overflow.  T^n x = 0 gives the degenerate line {0} and
    distance ||y||; once the orbit hits zero it stays there.
    """
    A = materialize(query.spec)
    y = query.y
    ynorm = float(np.linalg.norm(y))
    u = query.x.copy()
    dists = np.empty(query.N + 1, dtype=float)
    dead = False
    for n in range(query.N + 1):
        if not dead:
            nrm = float(np.linalg.norm(u))
            if nrm == 0.0:
                dead = True
            else:
                u = u / nrm
        if dead:
            dists[n] = ynorm
        else:
            dists[n] = float(np.linalg.norm(y - np.vdot(u, y) * u))
            u = A @ u
    return dists


def hitting_set(query, ud_N_min=None, ubd_window_max=None, ubd_window_min=None):
    """S(x, U) on [0, N] for U = B(y, r), reported with density estimates.

    Membership is strict: n is in the set iff dist(y, C*T^n x) < r, so the
    ball boundary is excluded.  Estimator parameters default to the
    half-window conventions of the two estimators.
    """
    dists = line_distances(query)
    indices = tuple(int(n) for n in np.nonzero(dists < query.r)[0])
    return build_report(
        indices,
        query.N,
        ud_N_min=ud_N_min,
        ubd_window_max=ubd_window_max,
        ubd_window_min=ubd_window_min,
        distances=tuple(float(d) for d in dists),
        radius=float(query.r),
        origin_note="hitting_set",
    )


def build_report(indices, N, ud_N_min=None, ubd_window_max=None,
                 ubd_window_min=None, distances=None, radius=None,
                 origin_note=""):
    """Assemble an IndexSetReport for a raw index set, defaults documented.

    ud_N_min defaults to N//2 and ubd_window_max to N with its own default
    lower bound ceil(N_window_max/2); small windows inflate both estimators,
    which is why the halves are cut off.
    """
    if ud_N_min is None:
        ud_N_min = N // 2
    if ubd_window_max is None:
        ubd_window_max = N
    ud = upper_density_estimate(indices, N, ud_N_min)
    profile = banach_window_profile(indices, N, ubd_window_max, ubd_window_min)
    wmin = profile[0][0] if profile else ubd_window_max
    ubd = min(
        (Fraction(cnt, Np + 1) for (Np, _m, cnt, _v) in profile),
        default=Fraction(0),
    )
    return IndexSetReport(
        indices=tuple(indices),
        N=int(N),
        ud_estimate=float(ud),
        ubd_estimate=float(ubd),
        per_N_profile=profile,
        ud_N_min=int(ud_N_min),
        ubd_window_min=int(wmin),
        ubd_window_max=int(ubd_window_max),
        distances=distances,
        radius=radius,
        origin_note=origin_note,
    )


def upper_density_estimate(indices, N, N_min):
    """max over N' in [N_min, N] of |A cap [0, N']| / (N'+1).

    Finite-window proxy for the upper density limsup |A cap [0,N]|/(N+1);
    N_min cuts off the short prefixes where a few early hits dominate.
    Counts are exact, the maximum is taken over Fractions, and only the
    returned value is a float.
    """
    if N_min > N:
        raise ArgumentError(f"N_min = {N_min} exceeds N = {N}")
    if N_min < 0:
        N_min = 0
    pre = _prefix_counts(indices, N)
    best = Fraction(0)
    for Np in range(N_min, N + 1):
        val = Fraction(int(pre[Np + 1]), Np + 1)
        if val > best:
            best = val
    return float(best)


def banach_window_profile(indices, N, N_window_max, N_window_min=None):
    """Best window placement per length: rows (N', best_m, count, value).

    For each window length N' in [N_window_min, N_window_max], value is
    max over m with m + N' <= N of |A cap [m, m+N']| / (N'+1); the default
    lower bound ceil(N_window_max/2) suppresses the small-window inflation.
    The placement maximum is an integer comparison (shared denominator), so
    the profile is exact up to the reported float value.
    """
    if N_window_max > N:
        raise ArgumentError(f"N_window_max = {N_window_max} exceeds N = {N}")
    if N_window_min is None:
        N_window_min = math.ceil(N_window_max / 2)
    if N_window_min < 0:
        N_window_min = 0
    if N_window_min > N_window_max:
        raise ArgumentError(
            f"N_window_min = {N_window_min} exceeds N_window_max = {N_window_max}"
        )
    pre = _prefix_counts(indices, N)
    rows = []
    for Np in range(N_window_min, N_window_max + 1):
        counts = pre[Np + 1:N + 2] - pre[:N + 1 - Np]
        m = int(np.argmax(counts))
        cnt = int(counts[m])
        rows.append((Np, m, cnt, float(Fraction(cnt, Np + 1))))
    return tuple(rows)


def upper_banach_density_estimate(indices, N, N_window_max, N_window_min=None):
    """min over N' in [N_window_min, N_window_max] of the best placement.

    Finite-window proxy for inf over N of sup over m of the in-window
    frequency |A cap [m, m+N]| / (N+1).  Exact rational arithmetic on the
    counts; a single float division at the end.
    """
    profile = banach_window_profile(indices, N, N_window_max, N_window_min)
    best = min(
        (Fraction(cnt, Np + 1) for (Np, _m, cnt, _v) in profile),
        default=Fraction(0),
    )
    return float(best)


def shift_set(indices, n):
    """A - n = {k - n : k in A, k >= n}, exact set arithmetic."""
    if n < 0:
        raise ArgumentError(f"shift must be >= 0, got {n}")
    return tuple(sorted(int(k) - int(n) for k in set(indices) if k >= n))


def rsc_transfer_check(x, y, spec, target, r, n, search_cap):
    """Search the orbit-shift k transferring y's hitting set into x's.

    Looks for the first k <= search_cap with
    k + (S(y, U) cap [0, n])  a subset of  S(x, U) cap [0, n + search_cap]
    for U = B(target, r).  An empty S(y, U) cap [0, n] is vacuously
    transferred by k = 0.  A miss is a result, not an error: verified is
    False and k is None.
    """
    if search_cap < 0:
        raise ArgumentError(f"search_cap must be >= 0, got {search_cap}")
    q_y = HittingQuery(x=y, spec=spec, y=target, r=r, N=n)
    S_y = set(hitting_set(q_y).indices)
    result = {
        "k": None,
        "verified": False,
        "S_y": tuple(sorted(S_y)),
        "n": int(n),
        "search_cap": int(search_cap),
    }
    if not S_y:
        result["k"] = 0
        result["verified"] = True
        return result
    q_x = HittingQuery(x=x, spec=spec, y=target, r=r, N=n + search_cap)
    S_x = set(hitting_set(q_x).indices)
    result["S_x"] = tuple(sorted(S_x))
    for k in range(search_cap + 1):
        if all(k + j in S_x for j in S_y):
            result["k"] = k
            result["verified"] = True
            return result
    return result


def corollary_check(x, spec, targets, t, N, mode, ud_N_min=None,
                    ubd_window_max=None, ubd_window_min=None):
    """Per-target frequency test: does the hitting frequency exceed t?

    mode "ud": pass iff some prefix [0, N'] with N' in [ud_N_min, N] has
    |S cap [0, N']| / (N'+1) > t; the witnessing N' is reported.
    mode "ubd": pass iff every window length N' in the ubd range admits a
    placement m with |S cap [m, m+N']| / (N'+1) > t; the worst length and
    its best placement (m, N') are reported.
    Strict inequalities on both sides, matching the open-ball membership.
    """
    if not (0.0 < t < 1.0):
        raise ArgumentError(f"threshold t must lie in (0, 1), got {t}")
    if mode not in ("ud", "ubd"):
        raise ArgumentError(f"mode must be 'ud' or 'ubd', got {mode!r}")
    x = np.asarray(x, dtype=complex).reshape(-1)
    rows = []
    for ti, (center, radius) in enumerate(targets):
        query = HittingQuery(x=x, spec=spec, y=np.asarray(center, dtype=complex),
                             r=float(radius), N=int(N))
        report = hitting_set(query, ud_N_min=ud_N_min,
                             ubd_window_max=ubd_window_max,
                             ubd_window_min=ubd_window_min)
        row = {
            "target": ti,
            "mode": mode,
            "t": float(t),
            "hits": report.count,
        }
        if mode == "ud":
            # rescan for the maximizing prefix so the witness is explicit
            pre = _prefix_counts(report.indices, report.N)
            lo = report.ud_N_min
            best = Fraction(-1)
            best_Np = lo
            for Np in range(lo, report.N + 1):
                val = Fraction(int(pre[Np + 1]), Np + 1)
                if val > best:
                    best, best_Np = val, Np
            row["value"] = float(best)
            row["passes"] = bool(best > Fraction(t).limit_denominator(10**12))
            row["witness_N"] = int(best_Np)
        else:
            profile = report.per_N_profile
            worst = min(profile, key=lambda r: Fraction(r[2], r[0] + 1))
            Np, m, cnt, _val = worst
            val = Fraction(cnt, Np + 1)
            row["value"] = float(val)
            row["passes"] = bool(val > Fraction(t).limit_denominator(10**12))
            row["witness_m"] = int(m)
            row["witness_N"] = int(Np)
        rows.append(row)
    return rows


def report_to_jsonable(report):
    out = {
        "indices": list(report.indices),
        "N": report.N,
        "ud_estimate": report.ud_estimate,
        "ubd_estimate": report.ubd_estimate,
        "ud_N_min": report.ud_N_min,
        "ubd_window_min": report.ubd_window_min,
        "ubd_window_max": report.ubd_window_max,
        "per_N_profile": [list(row) for row in report.per_N_profile],
        "origin_note": report.origin_note,
    }
    if report.radius is not None:
        out["radius"] = report.radius
    if report.distances is not None:
        out["distances"] = list(report.distances)
    return out


def hitting_csv(report):
    """CSV rows (n, hit, dist) over the full horizon; needs stored distances."""
    if report.distances is None:
        raise ArgumentError("report carries no per-index distances")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "hit", "dist"])
    hits = set(report.indices)
    for n, d in enumerate(report.distances):
        w.writerow([n, int(n in hits), repr(float(d))])
    return buf.getvalue()


def density_text(report):
    """Structured text block: counts, both estimates, and the window profile."""
    lines = [
        f"index set on [0, {report.N}]: {report.count} elements",
        f"upper density estimate:        {report.ud_estimate:.6f}"
        f"  (prefixes N' in [{report.ud_N_min}, {report.N}])",
        f"upper Banach density estimate: {report.ubd_estimate:.6f}"
        f"  (window lengths N' in [{report.ubd_window_min}, {report.ubd_window_max}])",
        "window profile (N', best m, count, value):",
    ]
    profile = report.per_N_profile
    shown = profile if len(profile) <= 12 else profile[:6] + profile[-6:]
    for i, (Np, m, cnt, val) in enumerate(shown):
        if len(profile) > 12 and i == 6:
            lines.append("  ...")
        lines.append(f"  {Np:6d} {m:8d} {cnt:7d} {val:.6f}")
    return "\n".join(lines) + "\n"
