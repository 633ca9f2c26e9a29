"""Operator descriptions and their basic linear algebra.

An operator is described by a small structured object rather than a bare
matrix so that downstream code (classification, witness construction) can use
exact structure where it exists: a diagonal stays a diagonal, a Jordan block
keeps its eigenvalue and size, a nilpotent-plus-rotation keeps its nilpotency
index. ``materialize`` produces the dense matrix when one is needed.

Vectors are 1-D complex numpy arrays; all norms are Euclidean.

The JSON form stores every complex scalar as a two-element [re, im] list and
round-trips bit-exactly (floats are emitted via repr).
"""

import json

import numpy as np

from .errors import (
    ArgumentError,
    ConvergenceError,
    SingularOperatorError,
    SpecificationError,
)

__all__ = [
    "OperatorSpec",
    "Dense",
    "Diagonal",
    "JordanBlock",
    "NilpotentPlusRotation",
    "ProjectionToLine",
    "WeightedBackwardShiftTrunc",
    "Unitary",
    "BlockDiag",
    "materialize",
    "apply_power",
    "power_matrix",
    "power_stack",
    "operator_norm",
    "structured_eigenvalues",
    "is_invertible",
    "to_jsonable",
    "from_jsonable",
    "dumps",
    "loads",
    "save",
    "load",
]


def _as_square_matrix(data, what):
    M = np.array(data, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise SpecificationError(f"{what} must be a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M.view(np.float64))):
        raise SpecificationError(f"{what} contains non-finite entries")
    M.setflags(write=False)
    return M


class OperatorSpec:
    """Base class; concrete kinds define dim and _materialize."""

    kind = None

    def __init__(self):
        self._matrix = None

    @property
    def dim(self):
        raise NotImplementedError

    def _materialize(self):
        raise NotImplementedError

    def matrix(self):
        if self._matrix is None:
            M = np.ascontiguousarray(self._materialize(), dtype=np.complex128)
            M.setflags(write=False)
            self._matrix = M
        return self._matrix

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Dense(OperatorSpec):
    def __init__(self, matrix):
        super().__init__()
        self.data = _as_square_matrix(matrix, "Dense matrix")

    @property
    def dim(self):
        return self.data.shape[0]

    def _materialize(self):
        return self.data


class Diagonal(OperatorSpec):
    def __init__(self, entries):
        super().__init__()
        e = np.atleast_1d(np.array(entries, dtype=np.complex128))
        if e.ndim != 1 or e.size < 1:
            raise SpecificationError("Diagonal entries must be a nonempty vector")
        if not np.all(np.isfinite(e.view(np.float64))):
            raise SpecificationError("Diagonal entries contain non-finite values")
        e.setflags(write=False)
        self.entries = e

    @property
    def dim(self):
        return self.entries.size

    def _materialize(self):
        return np.diag(self.entries)


class JordanBlock(OperatorSpec):
    """Single lower Jordan block: eigenvalue on the diagonal, ones below."""

    def __init__(self, eigenvalue, size):
        super().__init__()
        if int(size) != size or size < 1:
            raise SpecificationError("JordanBlock size must be a positive integer")
        self.eigenvalue = complex(eigenvalue)
        self.size = int(size)

    @property
    def dim(self):
        return self.size

    def _materialize(self):
        M = np.eye(self.size, dtype=np.complex128) * self.eigenvalue
        idx = np.arange(self.size - 1)
        M[idx + 1, idx] = 1.0
        return M


class NilpotentPlusRotation(OperatorSpec):
    """Block sum of a nilpotent S (with S^index = 0) and a 1-dim rotation.

    Acts on C^{dim(S)} + C; the final coordinate is the rotation line.
    """

    def __init__(self, nilpotent, index, rotation):
        super().__init__()
        S = _as_square_matrix(nilpotent, "nilpotent part")
        m = int(index)
        if m < 1 or m > S.shape[0]:
            raise SpecificationError("nilpotency index must satisfy 1 <= m <= dim(S)")
        if np.any(np.linalg.matrix_power(S, m) != 0):
            raise SpecificationError("S**index must vanish exactly")
        beta = complex(rotation)
        if abs(abs(beta) - 1.0) > 1e-10:
            raise SpecificationError("rotation scalar must be unimodular")
        self.nilpotent = S
        self.index = m
        self.rotation = beta

    @property
    def dim(self):
        return self.nilpotent.shape[0] + 1

    def _materialize(self):
        d = self.dim
        M = np.zeros((d, d), dtype=np.complex128)
        M[: d - 1, : d - 1] = self.nilpotent
        M[d - 1, d - 1] = self.rotation
        return M


class ProjectionToLine(OperatorSpec):
    """Rank-one projection x + y -> y onto the last coordinate line."""

    def __init__(self, dim):
        super().__init__()
        if int(dim) != dim or dim < 1:
            raise SpecificationError("ProjectionToLine dim must be a positive integer")
        self._dim = int(dim)

    @property
    def dim(self):
        return self._dim

    def _materialize(self):
        M = np.zeros((self._dim, self._dim), dtype=np.complex128)
        M[self._dim - 1, self._dim - 1] = 1.0
        return M


class WeightedBackwardShiftTrunc(OperatorSpec):
    """Truncated weighted backward shift: (x_1,..,x_d) -> (w_1 x_2,..,w_{d-1} x_d, 0)."""

    def __init__(self, weights):
        super().__init__()
        w = np.atleast_1d(np.array(weights, dtype=np.complex128))
        if w.ndim != 1 or w.size < 1:
            raise SpecificationError("weights must be a nonempty vector")
        if not np.all(np.isfinite(w.view(np.float64))):
            raise SpecificationError("weights contain non-finite values")
        w.setflags(write=False)
        self.weights = w

    @property
    def dim(self):
        return self.weights.size + 1

    def _materialize(self):
        d = self.dim
        M = np.zeros((d, d), dtype=np.complex128)
        idx = np.arange(d - 1)
        M[idx, idx + 1] = self.weights
        return M


class Unitary(OperatorSpec):
    def __init__(self, matrix):
        super().__init__()
        U = _as_square_matrix(matrix, "Unitary matrix")
        defect = np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2)
        if defect > 1e-10:
            raise SpecificationError(f"matrix is not unitary: ||U*U - I|| = {defect:.3e}")
        self.data = U

    @property
    def dim(self):
        return self.data.shape[0]

    def _materialize(self):
        return self.data


class BlockDiag(OperatorSpec):
    def __init__(self, blocks):
        super().__init__()
        blocks = tuple(blocks)
        if not blocks:
            raise SpecificationError("BlockDiag needs at least one block")
        for b in blocks:
            if not isinstance(b, OperatorSpec):
                raise SpecificationError("BlockDiag blocks must be OperatorSpec instances")
        self.blocks = blocks

    @property
    def dim(self):
        return sum(b.dim for b in self.blocks)

    def _materialize(self):
        d = self.dim
        M = np.zeros((d, d), dtype=np.complex128)
        at = 0
        for b in self.blocks:
            k = b.dim
            M[at : at + k, at : at + k] = b.matrix()
            at += k
        return M


def materialize(spec):
    """Dense (dim, dim) complex matrix of the operator."""
    if not isinstance(spec, OperatorSpec):
        raise ArgumentError("expected an OperatorSpec")
    return spec.matrix()


def _binom_seq(n, kmax):
    # generalized binomial coefficients C(n, k), k = 0..kmax, valid for n < 0
    out = np.empty(kmax + 1, dtype=np.float64)
    out[0] = 1.0
    for k in range(1, kmax + 1):
        out[k] = out[k - 1] * (n - (k - 1)) / k
    return out


def _jordan_power(beta, size, n):
    # (J^n)_{ij} = C(n, i-j) beta^{n-(i-j)} on and below the diagonal
    if beta == 0:
        if n < 0:
            raise SingularOperatorError("negative power of a nilpotent Jordan block")
        M = np.zeros((size, size), dtype=np.complex128)
        if n < size:
            idx = np.arange(size - n)
            M[idx + n, idx] = 1.0
        return M
    coeff = _binom_seq(n, size - 1)
    M = np.zeros((size, size), dtype=np.complex128)
    for k in range(size):
        if n >= 0 and k > n:
            break
        idx = np.arange(size - k)
        M[idx + k, idx] = coeff[k] * beta ** (n - k)
    return M


def power_matrix(spec, n):
    """Matrix of spec**n; n may be negative when the operator is invertible."""
    n = int(n)
    if isinstance(spec, Diagonal):
        if n < 0 and np.any(spec.entries == 0):
            raise SingularOperatorError("negative power of a singular diagonal")
        return np.diag(spec.entries**n)
    if isinstance(spec, JordanBlock):
        return _jordan_power(spec.eigenvalue, spec.size, n)
    if isinstance(spec, BlockDiag):
        d = spec.dim
        M = np.zeros((d, d), dtype=np.complex128)
        at = 0
        for b in spec.blocks:
            k = b.dim
            M[at : at + k, at : at + k] = power_matrix(b, n)
            at += k
        return M
    if n < 0 and not is_invertible(spec):
        raise SingularOperatorError("negative power of a non-invertible operator")
    try:
        return np.linalg.matrix_power(spec.matrix(), n)
    except np.linalg.LinAlgError as exc:
        raise SingularOperatorError(str(exc)) from exc


def power_stack(spec, n_min, n_max):
    """(n_max-n_min+1, dim, dim) stack of powers spec**n for n in [n_min, n_max]."""
    if n_max < n_min:
        raise ArgumentError("empty power range")
    return np.stack([power_matrix(spec, n) for n in range(n_min, n_max + 1)])


def apply_power(spec, n, vec):
    """spec**n applied to vec; negative n requires invertibility."""
    v = np.asarray(vec, dtype=np.complex128)
    if v.shape != (spec.dim,):
        raise ArgumentError(f"vector has shape {v.shape}, expected ({spec.dim},)")
    return power_matrix(spec, n) @ v


def operator_norm(spec):
    """Spectral norm (largest singular value)."""
    if isinstance(spec, Diagonal):
        return float(np.max(np.abs(spec.entries)))
    if isinstance(spec, Unitary):
        return 1.0
    if isinstance(spec, ProjectionToLine):
        return 1.0
    if isinstance(spec, WeightedBackwardShiftTrunc):
        return float(np.max(np.abs(spec.weights)))
    if isinstance(spec, BlockDiag):
        return max(operator_norm(b) for b in spec.blocks)
    try:
        return float(np.linalg.norm(spec.matrix(), 2))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"singular value iteration failed: {exc}") from exc


def structured_eigenvalues(spec):
    """Exact eigenvalue list when the structure provides one, else None."""
    if isinstance(spec, Diagonal):
        return list(spec.entries)
    if isinstance(spec, JordanBlock):
        return [spec.eigenvalue] * spec.size
    if isinstance(spec, NilpotentPlusRotation):
        return [0j] * spec.nilpotent.shape[0] + [spec.rotation]
    if isinstance(spec, ProjectionToLine):
        return [0j] * (spec.dim - 1) + [1 + 0j]
    if isinstance(spec, WeightedBackwardShiftTrunc):
        return [0j] * spec.dim
    if isinstance(spec, BlockDiag):
        out = []
        for b in spec.blocks:
            sub = structured_eigenvalues(b)
            if sub is None:
                return None
            out.extend(sub)
        return out
    return None


def is_invertible(spec, rank_tol=1e-12):
    """Numerical invertibility via structure where available, else sigma_min."""
    if isinstance(spec, Diagonal):
        return bool(np.all(spec.entries != 0))
    if isinstance(spec, JordanBlock):
        return spec.eigenvalue != 0
    if isinstance(spec, Unitary):
        return True
    if isinstance(spec, ProjectionToLine):
        return spec.dim == 1
    if isinstance(spec, WeightedBackwardShiftTrunc):
        return False
    if isinstance(spec, NilpotentPlusRotation):
        return False
    if isinstance(spec, BlockDiag):
        return all(is_invertible(b, rank_tol) for b in spec.blocks)
    s = np.linalg.svd(spec.matrix(), compute_uv=False)
    return bool(s[-1] > rank_tol * max(1.0, s[0]))


# ---------------------------------------------------------------------------
# serialization

def _c2j(z):
    z = complex(z)
    return [z.real, z.imag]


def _j2c(pair):
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise SpecificationError(f"expected [re, im] pair, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def _m2j(M):
    return [[_c2j(z) for z in row] for row in np.asarray(M)]


def _j2m(rows):
    return np.array([[_j2c(z) for z in row] for row in rows], dtype=np.complex128)


def to_jsonable(spec):
    """JSON-compatible tree describing the operator."""
    if isinstance(spec, Dense):
        return {"kind": "dense", "matrix": _m2j(spec.data)}
    if isinstance(spec, Diagonal):
        return {"kind": "diagonal", "entries": [_c2j(z) for z in spec.entries]}
    if isinstance(spec, JordanBlock):
        return {"kind": "jordan", "eigenvalue": _c2j(spec.eigenvalue), "size": spec.size}
    if isinstance(spec, NilpotentPlusRotation):
        return {
            "kind": "nilpotent_rotation",
            "nilpotent": _m2j(spec.nilpotent),
            "index": spec.index,
            "rotation": _c2j(spec.rotation),
        }
    if isinstance(spec, ProjectionToLine):
        return {"kind": "projection_line", "dim": spec.dim}
    if isinstance(spec, WeightedBackwardShiftTrunc):
        return {"kind": "backward_shift", "weights": [_c2j(z) for z in spec.weights]}
    if isinstance(spec, Unitary):
        return {"kind": "unitary", "matrix": _m2j(spec.data)}
    if isinstance(spec, BlockDiag):
        return {"kind": "block_diag", "blocks": [to_jsonable(b) for b in spec.blocks]}
    raise ArgumentError(f"unknown operator kind: {type(spec).__name__}")


def from_jsonable(data):
    """Inverse of to_jsonable; bit-exact round-trip."""
    if not isinstance(data, dict) or "kind" not in data:
        raise SpecificationError("operator description must be a dict with a 'kind'")
    kind = data["kind"]
    try:
        if kind == "dense":
            return Dense(_j2m(data["matrix"]))
        if kind == "diagonal":
            return Diagonal([_j2c(z) for z in data["entries"]])
        if kind == "jordan":
            return JordanBlock(_j2c(data["eigenvalue"]), data["size"])
        if kind == "nilpotent_rotation":
            return NilpotentPlusRotation(
                _j2m(data["nilpotent"]), data["index"], _j2c(data["rotation"])
            )
        if kind == "projection_line":
            return ProjectionToLine(data["dim"])
        if kind == "backward_shift":
            return WeightedBackwardShiftTrunc([_j2c(z) for z in data["weights"]])
        if kind == "unitary":
            return Unitary(_j2m(data["matrix"]))
        if kind == "block_diag":
            return BlockDiag([from_jsonable(b) for b in data["blocks"]])
    except KeyError as exc:
        raise SpecificationError(f"operator description missing field {exc}") from exc
    raise SpecificationError(f"unknown operator kind: {kind!r}")


def dumps(spec, indent=None):
    return json.dumps(to_jsonable(spec), indent=indent, allow_nan=False)


def loads(text):
    return from_jsonable(json.loads(text))


def save(spec, path):
    with open(path, "w") as fh:
        fh.write(dumps(spec, indent=2))
        fh.write("\n")


def load(path):
    with open(path) as fh:
        return loads(fh.read())
