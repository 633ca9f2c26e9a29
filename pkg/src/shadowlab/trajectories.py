"""Pseudotrajectory containers, defect measurement, and generators.

A trajectory is a finite window of points x_n with a claimed defect bound;
measure_defect checks ||A x_n - x_{n+1}|| against it. Generators come in two
flavours: random (orbit plus uniform ball noise) and adversarial (closed-form
drift constructions that push specific tracking properties to failure).
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, SpecificationError, WindowError, SingularOperatorError
from .operators import (
    OperatorSpec,
    Diagonal,
    JordanBlock,
    BlockDiag,
    materialize,
    power_matrix,
    apply_power,
    operator_norm,
    is_invertible,
    to_jsonable as op_to_jsonable,
    from_jsonable as op_from_jsonable,
    _binom_seq,
)

__all__ = [
    "Window",
    "positive_window",
    "bilateral_window",
    "Trajectory",
    "ChainPath",
    "DefectReport",
    "measure_defect",
    "gen_random",
    "gen_adversarial",
    "adversarial_operator",
    "ADVERSARIAL_KINDS",
    "interleave",
    "subsample",
    "chain_through_zero",
    "traj_to_jsonable",
    "traj_from_jsonable",
    "save_trajectory",
    "load_trajectory",
    "trajectory_csv",
]

_UNIMODULAR_TOL = 1e-10


@dataclass(frozen=True)
class Window:
    """Index window: Positive(0..N) or Bilateral(-N..N)."""

    kind: str
    N: int

    def __post_init__(self):
        if self.kind not in ("positive", "bilateral"):
            raise WindowError(f"unknown window kind {self.kind!r}")
        if self.N < 0:
            raise WindowError("window size must be >= 0")

    @property
    def n_min(self):
        return -self.N if self.kind == "bilateral" else 0

    @property
    def n_max(self):
        return self.N

    def __len__(self):
        return self.n_max - self.n_min + 1

    def indices(self):
        return range(self.n_min, self.n_max + 1)

    def offset(self, n):
        # position of index n in the internally shifted storage
        if not (self.n_min <= n <= self.n_max):
            raise WindowError(f"index {n} outside window [{self.n_min}, {self.n_max}]")
        return n - self.n_min


def positive_window(N):
    return Window("positive", N)


def bilateral_window(N):
    return Window("bilateral", N)


class Trajectory:
    """Finite pseudotrajectory: points over a window plus a claimed defect bound."""

    def __init__(self, window, points, delta_claimed, origin_note=""):
        points = np.ascontiguousarray(points, dtype=np.complex128)
        if points.ndim != 2:
            raise ArgumentError("points must be a (window length, dim) array")
        if points.shape[0] != len(window):
            raise WindowError(
                f"window has {len(window)} indices but {points.shape[0]} points given"
            )
        if not np.all(np.isfinite(points.view(np.float64))):
            raise ArgumentError("points must be finite")
        if delta_claimed < 0:
            raise ArgumentError("delta_claimed must be >= 0")
        self.window = window
        self.points = points
        self.points.setflags(write=False)
        self.delta_claimed = float(delta_claimed)
        self.origin_note = origin_note

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def point(self, n):
        return self.points[self.window.offset(n)]

    def __repr__(self):
        w = self.window
        return (
            f"Trajectory({w.kind}[{w.n_min}..{w.n_max}], dim={self.dim}, "
            f"delta_claimed={self.delta_claimed:g}, origin={self.origin_note!r})"
        )


@dataclass
class ChainPath:
    """Finite chain x = x_0 -> ... -> x_n = y with every link defect < delta."""

    points: np.ndarray
    x: np.ndarray
    y: np.ndarray
    delta: float


@dataclass
class DefectReport:
    max_defect: float
    profile: np.ndarray  # ||A x_n - x_{n+1}|| for n = n_min .. n_max-1
    n_min: int

    def is_pseudo(self, delta):
        return self.max_defect <= delta

    def tail_sup(self, m):
        """sup of the defect over steps with |n| >= m (limit-behaviour probe)."""
        ns = np.arange(self.n_min, self.n_min + len(self.profile))
        mask = np.abs(ns) >= m
        if not mask.any():
            return 0.0
        return float(np.max(self.profile[mask]))

    def tail_profile(self):
        """Defect indexed by |n|: value at m is the sup over steps with |n| >= m."""
        ns = np.abs(np.arange(self.n_min, self.n_min + len(self.profile)))
        out = np.zeros(int(ns.max()) + 1)
        # suffix maxima over |n|
        order = np.argsort(ns, kind="stable")
        sorted_abs = ns[order]
        sorted_val = self.profile[order]
        running = 0.0
        vals = np.zeros_like(sorted_val)
        for i in range(len(sorted_val) - 1, -1, -1):
            running = max(running, sorted_val[i])
            vals[i] = running
        for a, v in zip(sorted_abs, vals):
            out[a] = max(out[a], v)
        # ensure monotone nonincreasing in m
        for m in range(len(out) - 2, -1, -1):
            out[m] = max(out[m], out[m + 1])
        return out


def measure_defect(traj, spec):
    """Defect profile ||A x_n - x_{n+1}|| over the window."""
    if len(traj) < 2:
        raise WindowError("defect needs a window of length >= 2")
    if traj.dim != spec.dim:
        raise ArgumentError(f"trajectory dim {traj.dim} != operator dim {spec.dim}")
    A = spec.matrix()
    img = traj.points[:-1] @ A.T
    diff = img - traj.points[1:]
    profile = np.linalg.norm(diff, axis=1)
    return DefectReport(float(np.max(profile)), profile, traj.window.n_min)


def _ball_noise(rng, dim, delta):
    # uniform on the complex delta-ball (real dimension 2*dim)
    w = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    nw = np.linalg.norm(w)
    if nw == 0.0:
        return np.zeros(dim, dtype=np.complex128)
    r = delta * rng.uniform() ** (1.0 / (2 * dim))
    return (r / nw) * w


def gen_random(spec, x0, delta, window, seed):
    """Random pseudotrajectory x_{n+1} = A x_n + z_n with ||z_n|| <= delta.

    Bilateral windows extend backward through x_n = A^{-1}(x_{n+1} - z_n),
    keeping every step defect at ||z_n||; this requires invertibility.
    """
    if delta < 0:
        raise ArgumentError("delta must be >= 0")
    x0 = np.asarray(x0, dtype=np.complex128)
    if x0.shape != (spec.dim,):
        raise ArgumentError(f"x0 has shape {x0.shape}, expected ({spec.dim},)")
    if window.kind == "bilateral" and not is_invertible(spec):
        raise SingularOperatorError("bilateral random trajectory needs an invertible operator")
    rng = np.random.default_rng(seed)
    A = spec.matrix()
    d = spec.dim
    pts = np.zeros((len(window), d), dtype=np.complex128)
    at0 = window.offset(0)
    pts[at0] = x0
    cur = x0
    for k in range(at0 + 1, len(window)):
        cur = A @ cur + _ball_noise(rng, d, delta)
        pts[k] = cur
    if at0 > 0:
        Ainv = np.linalg.inv(A)
        cur = x0
        for k in range(at0 - 1, -1, -1):
            cur = Ainv @ (cur - _ball_noise(rng, d, delta))
            pts[k] = cur
    return Trajectory(window, pts, delta, origin_note=f"random(seed={seed})")


# ---------------------------------------------------------------------------
# adversarial constructions


def _require_unimodular(beta, who):
    beta = complex(beta)
    if abs(abs(beta) - 1.0) > _UNIMODULAR_TOL:
        raise SpecificationError(f"{who} needs |beta| = 1, got |{beta}| = {abs(beta)}")
    return beta


def _require_kind(window, kind, who):
    if window.kind != kind:
        raise WindowError(f"{who} needs a {kind} window")


def triangle_wave(N):
    """Mirrored triangle values psi(0..N): 1,2,1,2,3,2,1,2,3,4,3,2,1,...

    Integer, psi >= 1, |psi(n+1)-psi(n)| = 1, unbounded, and psi = 1 occurs
    after every excursion, hence infinitely often. Extend to n < 0 by
    psi(-n) = psi(n).
    """
    seq = [1]
    peak = 2
    while len(seq) <= N:
        seq.extend(range(2, peak + 1))
        seq.extend(range(peak - 1, 0, -1))
        peak += 1
    return np.array(seq[: N + 1], dtype=np.int64)


def _psi_at(ns):
    N = int(np.max(np.abs(ns)))
    base = triangle_wave(N)
    return base[np.abs(ns)]


def _harmonic(N, power=1.0):
    # theta(n) = sum_{k=1..n} k^(-power), theta(0) = 0
    out = np.zeros(N + 1)
    if N:
        out[1:] = np.cumsum(np.arange(1, N + 1, dtype=np.float64) ** (-power))
    return out


def _gen_rotation_linear(params, window):
    beta = _require_unimodular(params["beta"], "RotationLinear")
    delta = float(params["delta"])
    _require_kind(window, "bilateral", "RotationLinear")
    ns = np.arange(window.n_min, window.n_max + 1)
    bp = beta ** ns.astype(np.float64)
    psi = _psi_at(ns)
    pts = np.stack([delta * bp * ns, delta * bp * psi], axis=1)
    # both coordinates step by delta at once, so the euclidean defect is
    # delta*sqrt(2), not delta
    return Trajectory(window, pts, delta * math.sqrt(2.0), origin_note="RotationLinear")


def _gen_jordan_impulse(params, window):
    beta = _require_unimodular(params["beta"], "JordanImpulse")
    k = int(params.get("k", 2))
    delta = float(params["delta"])
    if k < 2:
        raise SpecificationError("JordanImpulse needs block size k >= 2")
    ns = np.arange(window.n_min, window.n_max + 1)
    pts = np.zeros((len(ns), k), dtype=np.complex128)
    # impulse response of the Jordan recursion in closed form:
    # y_n[i] = delta * beta^(n-i) * C(n, i+1), valid for negative n too
    for row, n in enumerate(ns):
        coeff = _binom_seq(n, k)
        for i in range(k):
            pts[row, i] = delta * beta ** (n - i) * coeff[i + 1]
    return Trajectory(window, pts, delta, origin_note="JordanImpulse")


def _gen_harmonic_pair(params, window):
    beta = _require_unimodular(params["beta"], "HarmonicPair")
    delta = float(params.get("delta", 1.0))
    _require_kind(window, "positive", "HarmonicPair")
    N = window.N
    ns = np.arange(N + 1)
    bp = beta ** ns.astype(np.float64)
    theta = _harmonic(N, 1.0)
    psi = _harmonic(N, 0.5)
    pts = np.stack([delta * bp * theta, delta * bp * psi], axis=1)
    # worst step is n=0 -> 1 where both sums jump by 1
    return Trajectory(window, pts, delta * math.sqrt(2.0), origin_note="HarmonicPair")


def _gen_jordan_harmonic(params, window):
    beta = _require_unimodular(params["beta"], "JordanHarmonic")
    k = int(params.get("k", 2))
    delta = float(params.get("delta", 1.0))
    if k < 2:
        raise SpecificationError("JordanHarmonic needs block size k >= 2")
    _require_kind(window, "positive", "JordanHarmonic")
    N = window.N
    gamma = np.zeros((k, N + 1))
    gamma[0] = _harmonic(N, 1.0)
    for i in range(1, k):
        # gamma_{i+1, n+1} = gamma_{i+1, n} + gamma_{i, n}
        gamma[i, 1:] = np.cumsum(gamma[i - 1, :-1])
    ns = np.arange(N + 1)
    pts = np.zeros((N + 1, k), dtype=np.complex128)
    for i in range(k):
        pts[:, i] = delta * beta ** (ns - i).astype(np.float64) * gamma[i]
    # only the leading component drifts, by delta/(n+1) at step n
    return Trajectory(window, pts, delta, origin_note="JordanHarmonic")


def _as_spec(value, who):
    if isinstance(value, OperatorSpec):
        return value
    raise ArgumentError(f"{who} needs an operator spec")


def _require_isometry(spec, who):
    A = spec.matrix()
    if np.linalg.norm(A.conj().T @ A - np.eye(spec.dim), 2) > 1e-8:
        raise SpecificationError(f"{who} needs an isometry")


def _walk_points(T_spec, p, beta, scale, weights, window):
    # (T^n p, weights_n * beta^n) on X + C
    p = np.asarray(p, dtype=np.complex128)
    if p.shape != (T_spec.dim,):
        raise ArgumentError(f"p has shape {p.shape}, expected ({T_spec.dim},)")
    ns = np.arange(window.n_min, window.n_max + 1)
    pts = np.zeros((len(ns), T_spec.dim + 1), dtype=np.complex128)
    for row, n in enumerate(ns):
        pts[row, : T_spec.dim] = apply_power(T_spec, n, p)
        pts[row, -1] = scale * weights[row] * beta ** float(n)
    return pts


def _gen_isometry_walk(params, window):
    T_spec = _as_spec(params["T"], "IsometryWalk")
    _require_isometry(T_spec, "IsometryWalk")
    beta = _require_unimodular(params["beta"], "IsometryWalk")
    delta = float(params["delta"])
    _require_kind(window, "bilateral", "IsometryWalk")
    p = params.get("p", np.eye(T_spec.dim)[0])
    ns = np.arange(window.n_min, window.n_max + 1)
    # omega must step by 1 and be unbounded in both time directions; |n| is
    # the default, the signed walk n is allowed since only |omega| growth is used
    mode = params.get("omega", "absolute")
    if mode == "absolute":
        omega = np.abs(ns)
    elif mode == "signed":
        omega = ns.astype(np.float64)
    else:
        raise ArgumentError("omega must be 'absolute' or 'signed'")
    pts = _walk_points(T_spec, p, beta, delta, omega, window)
    return Trajectory(window, pts, delta, origin_note=f"IsometryWalk(omega={mode})")


def _gen_harmonic_bilateral(params, window):
    T_spec = _as_spec(params["T"], "HarmonicBilateral")
    _require_isometry(T_spec, "HarmonicBilateral")
    beta = _require_unimodular(params["beta"], "HarmonicBilateral")
    _require_kind(window, "bilateral", "HarmonicBilateral")
    p = params.get("p", np.eye(T_spec.dim)[0])
    ns = np.arange(window.n_min, window.n_max + 1)
    H = _harmonic(window.N, 1.0)
    theta = H[np.abs(ns)]
    pts = _walk_points(T_spec, p, beta, 1.0, theta, window)
    # worst steps are at n = 0 and n = -1, both of size 1
    return Trajectory(window, pts, 1.0, origin_note="HarmonicBilateral")


def _gen_compact_probe(params, window):
    S = _as_spec(params["S"], "CompactProbe")
    beta = _require_unimodular(params["beta"], "CompactProbe")
    delta = float(params["delta"])
    nu = complex(params.get("nu", 1.0))
    if nu == 0:
        raise ArgumentError("nu must be nonzero")
    _require_kind(window, "positive", "CompactProbe")
    p = np.asarray(params.get("p", np.eye(S.dim)[0]), dtype=np.complex128)
    if p.shape != (S.dim,):
        raise ArgumentError(f"p has shape {p.shape}, expected ({S.dim},)")
    # the coordinate projection onto the C*nu summand has norm 1 in this
    # orthogonal model
    norm_P = 1.0
    ns = np.arange(window.N + 1)
    pts = np.zeros((window.N + 1, S.dim + 1), dtype=np.complex128)
    for n in ns:
        pts[n, : S.dim] = apply_power(S, int(n), p)
        pts[n, -1] = (2.0 * norm_P + n * delta) * beta ** float(n) * nu
    return Trajectory(window, pts, delta * abs(nu), origin_note="CompactProbe")


def _gen_chain_glue(params, window):
    T_spec = _as_spec(params["T"], "ChainGlue")
    delta = float(params["delta"])
    zeros = int(params.get("zeros", 1))
    if zeros < 1:
        # without a zero between the legs the seam defect could double
        raise ArgumentError("zeros must be >= 1")
    _require_kind(window, "positive", "ChainGlue")
    x = np.asarray(params["x"], dtype=np.complex128)
    y = np.asarray(params["y"], dtype=np.complex128)
    chain = chain_through_zero(T_spec, x, 0 * x, delta)
    head = chain.points[:-1]  # the terminal zero is supplied by the zeros block
    back = chain_through_zero(T_spec, 0 * y, y, delta)
    tailstart = back.points[1:] if len(back.points) > 1 else np.zeros((0, T_spec.dim), dtype=np.complex128)
    pieces = [head, np.zeros((zeros, T_spec.dim), dtype=np.complex128), tailstart]
    pts = np.vstack(pieces)
    need = len(window)
    if pts.shape[0] > need:
        raise WindowError(
            f"ChainGlue needs a window of at least {pts.shape[0] - 1}, got {window.N}"
        )
    # continue along the exact orbit of the chain's endpoint
    cur = pts[-1]
    A = T_spec.matrix()
    tail = []
    while pts.shape[0] + len(tail) < need:
        cur = A @ cur
        tail.append(cur)
    if tail:
        pts = np.vstack([pts, np.array(tail)])
    return Trajectory(window, pts, delta, origin_note="ChainGlue")


_GENERATORS = {
    "RotationLinear": _gen_rotation_linear,
    "JordanImpulse": _gen_jordan_impulse,
    "HarmonicPair": _gen_harmonic_pair,
    "JordanHarmonic": _gen_jordan_harmonic,
    "IsometryWalk": _gen_isometry_walk,
    "HarmonicBilateral": _gen_harmonic_bilateral,
    "CompactProbe": _gen_compact_probe,
    "ChainGlue": _gen_chain_glue,
}

ADVERSARIAL_KINDS = tuple(_GENERATORS)


def _resolve_kind(kind):
    # accept CamelCase, kebab-case, and snake_case spellings of one kind
    def squash(s):
        return str(s).lower().replace("-", "").replace("_", "")

    for name in _GENERATORS:
        if squash(name) == squash(kind):
            return name
    raise ArgumentError(f"unknown adversarial kind {kind!r}; choose from {ADVERSARIAL_KINDS}")


def gen_adversarial(kind, params, window):
    """Closed-form drifting pseudotrajectory of the named construction."""
    name = _resolve_kind(kind)
    try:
        return _GENERATORS[name](dict(params), window)
    except KeyError as exc:
        raise ArgumentError(
            f"{name} is missing required parameter {exc.args[0]!r}"
        ) from exc


def adversarial_operator(kind, params):
    """The operator each adversarial construction drifts against."""
    kind = _resolve_kind(kind)
    params = dict(params)
    try:
        return _adversarial_operator(kind, params)
    except KeyError as exc:
        raise ArgumentError(
            f"{kind} is missing required parameter {exc.args[0]!r}"
        ) from exc


def _adversarial_operator(kind, params):
    if kind in ("RotationLinear", "HarmonicPair"):
        beta = _require_unimodular(params["beta"], kind)
        return Diagonal([beta, beta])
    if kind in ("JordanImpulse", "JordanHarmonic"):
        beta = _require_unimodular(params["beta"], kind)
        return JordanBlock(beta, int(params.get("k", 2)))
    if kind in ("IsometryWalk", "HarmonicBilateral"):
        beta = _require_unimodular(params["beta"], kind)
        return BlockDiag([_as_spec(params["T"], kind), Diagonal([beta])])
    if kind == "CompactProbe":
        beta = _require_unimodular(params["beta"], kind)
        return BlockDiag([_as_spec(params["S"], kind), Diagonal([beta])])
    return _as_spec(params["T"], kind)  # ChainGlue


# ---------------------------------------------------------------------------
# power transport


def interleave(traj, spec, k):
    """Expand a pseudotrajectory of A^k into one of A.

    Each point x_n becomes the run x_n, Ax_n, ..., A^{k-1}x_n; the only
    nonzero defects of the output sit at the seams and equal the input's.
    """
    k = int(k)
    if k <= 0:
        raise ArgumentError("k must be >= 1")
    if traj.dim != spec.dim:
        raise ArgumentError("trajectory and operator dims differ")
    if k == 1:
        return Trajectory(traj.window, traj.points, traj.delta_claimed, traj.origin_note)
    A = spec.matrix()
    n_pts = len(traj)
    out = np.zeros(((n_pts - 1) * k + 1, traj.dim), dtype=np.complex128)
    for i in range(n_pts - 1):
        cur = traj.points[i]
        for j in range(k):
            out[i * k + j] = cur
            if j < k - 1:
                cur = A @ cur
    out[-1] = traj.points[-1]
    if traj.window.kind == "positive":
        win = Window("positive", (n_pts - 1) * k)
    else:
        win = Window("bilateral", traj.window.N * k)
    return Trajectory(win, out, traj.delta_claimed, origin_note=f"interleave(k={k})")


def subsample(traj, spec, k):
    """Every k-th point: a pseudotrajectory of A^k.

    The defect bound telescopes: delta_out = (sum_{j<k} ||A||^j) * delta_in.
    """
    k = int(k)
    if k <= 0:
        raise ArgumentError("k must be >= 1")
    if len(traj) < k + 1:
        raise ArgumentError("window too short to subsample")
    if k == 1:
        return Trajectory(traj.window, traj.points, traj.delta_claimed, traj.origin_note)
    idx = [traj.window.offset(n) for n in traj.window.indices() if n % k == 0]
    pts = traj.points[idx]
    a = operator_norm(spec)
    bound = traj.delta_claimed * float(sum(a**j for j in range(k)))
    if traj.window.kind == "positive":
        win = Window("positive", len(idx) - 1)
    else:
        win = Window("bilateral", traj.window.N // k)
    return Trajectory(win, pts, bound, origin_note=f"subsample(k={k})")


def chain_through_zero(spec, x, y, delta):
    """Finite chain from x to y through 0 under a unitary, all links < delta.

    Forward leg (1 - i/l) T^i x shrinks x to 0 in l = ceil(||x||/delta) + 1
    steps of defect ||x||/l; the backward leg (j/m) T^{j-m} y grows 0 to y the
    same way. Unitarity keeps every link defect constant along the leg.
    """
    if delta <= 0:
        raise ArgumentError("delta must be > 0")
    A = spec.matrix()
    d = spec.dim
    if np.linalg.norm(A.conj().T @ A - np.eye(d), 2) > 1e-8 or not is_invertible(spec):
        raise SpecificationError("chain_through_zero needs a unitary operator")
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if x.shape != (d,) or y.shape != (d,):
        raise ArgumentError("endpoint shape mismatch")
    pts = []
    nx = np.linalg.norm(x)
    if nx > 0:
        ell = math.ceil(nx / delta) + 1
        for i in range(ell + 1):
            pts.append((1.0 - i / ell) * apply_power(spec, i, x))
    else:
        pts.append(np.zeros(d, dtype=np.complex128))
    ny = np.linalg.norm(y)
    if ny > 0:
        m = math.ceil(ny / delta) + 1
        for j in range(1, m + 1):
            pts.append((j / m) * apply_power(spec, j - m, y))
    arr = np.array(pts)
    arr[0] = x
    arr[-1] = y
    return ChainPath(points=arr, x=x, y=y, delta=float(delta))


# ---------------------------------------------------------------------------
# serialization


def traj_to_jsonable(traj):
    return {
        "window": {"kind": traj.window.kind, "N": traj.window.N},
        "delta_claimed": traj.delta_claimed,
        "origin_note": traj.origin_note,
        "points": [[[z.real, z.imag] for z in row] for row in traj.points],
    }


def traj_from_jsonable(obj):
    try:
        win = Window(obj["window"]["kind"], int(obj["window"]["N"]))
        pts = np.array(
            [[complex(re, im) for re, im in row] for row in obj["points"]],
            dtype=np.complex128,
        )
        if pts.ndim == 1:
            pts = pts.reshape(len(pts), 0)
        return Trajectory(win, pts, float(obj["delta_claimed"]), obj.get("origin_note", ""))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecificationError(f"malformed trajectory record: {exc}") from exc


def save_trajectory(traj, path):
    with open(path, "w") as fh:
        json.dump(traj_to_jsonable(traj), fh, indent=1, allow_nan=False)
        fh.write("\n")


def load_trajectory(path):
    with open(path) as fh:
        return traj_from_jsonable(json.load(fh))


def trajectory_csv(traj):
    """One row per index: n, re/im per coordinate. Deterministic text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = traj.dim
    w.writerow(["n"] + [f"{part}{i}" for i in range(d) for part in ("re", "im")])
    for n in traj.window.indices():
        row = [n]
        for z in traj.point(n):
            row.extend([repr(float(z.real)), repr(float(z.imag))])
        w.writerow(row)
    return buf.getvalue()
