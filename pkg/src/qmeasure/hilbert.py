"""States, operators, and spectral structure on finite-dimensional Hilbert spaces.

All Hilbert spaces here are finite-dimensional with dense complex
(double-precision) matrices.  Values are immutable after construction and
every operation is a pure function, so everything in this module is safe to
share across threads.
"""

from __future__ import annotations

from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, NotHermitian

HERMITIAN_TOL = 1e-10
MIN_STATE_NORM = 1e-8
SPECTRAL_TOL = 1e-9


def _as_complex_vector(data) -> np.ndarray:
    vec = np.asarray(data, dtype=complex)
    if vec.ndim != 1:
        raise ValueError(f"expected a 1-d amplitude vector, got shape {vec.shape}")
    return vec


def _as_complex_matrix(data) -> np.ndarray:
    mat = np.asarray(data, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    return mat


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def hermiticity_defect(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


class PureState:
    """A normalized state vector.

    Input amplitudes are renormalized; vectors with norm below
    ``MIN_STATE_NORM`` are rejected rather than silently blown up, since a
    near-zero vector almost always signals an upstream bug (e.g. projecting
    onto an impossible outcome).
    """

    __slots__ = ("amplitudes", "dim")

    def __init__(self, amplitudes):
        vec = _as_complex_vector(amplitudes)
        norm = float(np.linalg.norm(vec))
        if norm < MIN_STATE_NORM:
            raise ValueError(f"state norm {norm:.3e} below floor {MIN_STATE_NORM:.0e}")
        self.amplitudes = _freeze(vec / norm)
        self.dim = vec.shape[0]

    def inner(self, other: "PureState") -> complex:
        """Inner product <self|other>."""
        if other.dim != self.dim:
            raise DimensionMismatch(f"dims {self.dim} vs {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def overlap(self, other: "PureState") -> float:
        """|<self|other>|^2."""
        return abs(self.inner(other)) ** 2

    def to_density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self):
        return f"PureState(dim={self.dim})"


class LinearOperator:
    """A general (possibly non-Hermitian) operator on a finite space."""

    __slots__ = ("matrix", "dim")

    def __init__(self, matrix):
        mat = _as_complex_matrix(matrix)
        self.matrix = _freeze(mat.copy())
        self.dim = mat.shape[0]

    @classmethod
    def _wrap(cls, matrix: np.ndarray) -> "LinearOperator":
        # internal fast path: takes ownership, skips the copy
        op = object.__new__(cls)
        op.matrix = _freeze(np.asarray(matrix, dtype=complex))
        op.dim = matrix.shape[0]
        return op

    def adjoint(self) -> "LinearOperator":
        return LinearOperator._wrap(self.matrix.conj().T.copy())

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.matrix @ vector

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return hermiticity_defect(self.matrix) <= tol

    def _check_dim(self, other):
        if self.dim != other.dim:
            raise DimensionMismatch(f"dims {self.dim} vs {other.dim}")

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        self._check_dim(other)
        return LinearOperator._wrap(self.matrix @ other.matrix)

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        self._check_dim(other)
        return LinearOperator._wrap(self.matrix + other.matrix)

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        self._check_dim(other)
        return LinearOperator._wrap(self.matrix - other.matrix)

    def __mul__(self, scalar) -> "LinearOperator":
        return LinearOperator._wrap(self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f"LinearOperator(dim={self.dim})"


class DensityOperator:
    """A trace-one positive operator (mixed state).

    Construction enforces Hermiticity within 1e-10, eigenvalues >= -1e-10,
    and unit trace within 1e-10.
    """

    __slots__ = ("matrix", "dim")

    def __init__(self, matrix):
        mat = _as_complex_matrix(matrix)
        defect = hermiticity_defect(mat)
        if defect > HERMITIAN_TOL:
            raise NotHermitian(f"density matrix hermiticity defect {defect:.3e}")
        trace = complex(np.trace(mat))
        if abs(trace - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"trace {trace} differs from 1")
        min_eig = float(np.linalg.eigvalsh((mat + mat.conj().T) / 2).min())
        if min_eig < -HERMITIAN_TOL:
            raise ValueError(f"negative eigenvalue {min_eig:.3e}")
        self.matrix = _freeze(mat.copy())
        self.dim = mat.shape[0]

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityOperator":
        return state.to_density()

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim) / dim)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def __repr__(self):
        return f"DensityOperator(dim={self.dim})"


State = Union[PureState, DensityOperator]


class Observable:
    """A Hermitian operator together with its spectral resolution.

    The distinct eigenvalues are stored in ascending order.  Internally the
    resolution is kept as one orthonormal eigenbasis with a column slice per
    distinct eigenvalue; projectors are materialized on demand (a full
    projector list for a large grid operator would need O(dim^3) memory).
    """

    __slots__ = ("operator", "eigenvalues", "_basis", "_slices")

    def __init__(self, operator: LinearOperator, eigenvalues, basis, slices,
                 validate: bool = True):
        vals = np.asarray(eigenvalues, dtype=float)
        basis = np.asarray(basis, dtype=complex)
        if validate:
            self._validate(operator, vals, basis, slices)
        self.operator = operator
        self.eigenvalues = _freeze(vals)
        self._basis = _freeze(basis)
        self._slices = tuple(slices)

    @staticmethod
    def _validate(operator, vals, basis, slices):
        dim = operator.dim
        if basis.shape != (dim, dim):
            raise ValueError("eigenbasis shape does not match operator")
        if len(vals) != len(slices):
            raise ValueError("one slice per distinct eigenvalue required")
        if len(vals) > 1 and np.any(np.diff(vals) <= 0):
            raise ValueError("eigenvalues must be distinct and ascending")
        unitarity = np.max(np.abs(basis.conj().T @ basis - np.eye(dim)))
        if unitarity > SPECTRAL_TOL:
            raise ValueError(f"eigenbasis not orthonormal: defect {unitarity:.3e}")
        full = np.concatenate([np.full(sl.stop - sl.start, v)
                               for v, sl in zip(vals, slices)])
        if full.shape[0] != dim:
            raise ValueError("eigenvalue multiplicities do not fill the space")
        recon = (basis * full) @ basis.conj().T
        defect = np.max(np.abs(recon - operator.matrix))
        scale = max(1.0, float(np.max(np.abs(vals))) if len(vals) else 1.0)
        if defect > SPECTRAL_TOL * scale:
            raise ValueError(f"spectral reconstruction defect {defect:.3e}")

    @classmethod
    def from_projectors(cls, pairs: Iterable[tuple[float, LinearOperator]]) -> "Observable":
        """Build from explicit (eigenvalue, projector) pairs.

        The pairs may come in any order; they are sorted by eigenvalue.  The
        projectors must be an orthogonal resolution of the identity.
        """
        pairs = sorted(pairs, key=lambda p: p[0])
        if not pairs:
            raise ValueError("at least one spectral entry required")
        dim = pairs[0][1].dim
        columns, slices, vals = [], [], []
        start = 0
        for value, proj in pairs:
            mat = proj.matrix if isinstance(proj, LinearOperator) else np.asarray(proj, complex)
            evals, evecs = np.linalg.eigh((mat + mat.conj().T) / 2)
            keep = evals > 0.5
            rank = int(np.count_nonzero(keep))
            if rank == 0:
                raise ValueError(f"projector for eigenvalue {value} has rank 0")
            if np.max(np.abs(evals - np.round(evals))) > SPECTRAL_TOL:
                raise ValueError(f"entry for eigenvalue {value} is not a projector")
            columns.append(evecs[:, keep])
            slices.append(slice(start, start + rank))
            vals.append(float(value))
            start += rank
        basis = np.hstack(columns)
        full = np.zeros((dim, dim), dtype=complex)
        for v, sl in zip(vals, slices):
            block = basis[:, sl]
            full += v * (block @ block.conj().T)
        return cls(LinearOperator._wrap(full), vals, basis, slices)

    @property
    def n_outcomes(self) -> int:
        return len(self.eigenvalues)

    @property
    def dim(self) -> int:
        return self.operator.dim

    def eigenbasis(self, i: int) -> np.ndarray:
        """Orthonormal columns spanning the i-th eigenspace."""
        return self._basis[:, self._slices[i]]

    def multiplicity(self, i: int) -> int:
        sl = self._slices[i]
        return sl.stop - sl.start

    def projector(self, i: int) -> LinearOperator:
        block = self.eigenbasis(i)
        return LinearOperator._wrap(block @ block.conj().T)

    @property
    def spectrum(self) -> list[tuple[float, LinearOperator]]:
        """The spectral resolution as (eigenvalue, projector) pairs.

        Materializes every projector; avoid on large grid operators.
        """
        return [(float(v), self.projector(i)) for i, v in enumerate(self.eigenvalues)]

    def outcome_index(self, outcome: float, tol: float | None = None) -> int:
        """Map an eigenvalue label to its index in the ascending spectrum."""
        vals = self.eigenvalues
        i = int(np.argmin(np.abs(vals - outcome)))
        if tol is None:
            scale = max(1.0, float(np.max(np.abs(vals))))
            tol = 1e-6 * scale
        if abs(vals[i] - outcome) > tol:
            raise ValueError(f"{outcome} is not an eigenvalue of this observable")
        return i

    def __repr__(self):
        return f"Observable(dim={self.dim}, outcomes={self.n_outcomes})"


def spectral_decompose(op: LinearOperator, cluster_tol: float | None = None) -> Observable:
    """Diagonalize a Hermitian operator into distinct-eigenvalue projectors.

    Eigenvalues closer than ``cluster_tol`` are merged into one degenerate
    eigenspace.  By default the threshold is 1e-9 relative to the spectral
    radius, so numerically split degeneracies are regrouped.

    Raises NotHermitian if ``op`` is not Hermitian within 1e-10.
    """
    defect = hermiticity_defect(op.matrix)
    if defect > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(op.matrix))) if op.matrix.size else 1.0):
        raise NotHermitian(f"hermiticity defect {defect:.3e}")
    evals, evecs = np.linalg.eigh(op.matrix)
    radius = float(np.max(np.abs(evals))) if len(evals) else 0.0
    if cluster_tol is None:
        threshold = 1e-9 * radius
    else:
        threshold = float(cluster_tol)
    vals, slices = [], []
    start = 0
    for j in range(1, len(evals) + 1):
        if j == len(evals) or evals[j] - evals[j - 1] > threshold:
            vals.append(float(np.mean(evals[start:j])))
            slices.append(slice(start, j))
            start = j
    return Observable(op, vals, evecs, slices)


def _kind(obj) -> str:
    if isinstance(obj, PureState):
        return "state"
    if isinstance(obj, (DensityOperator, LinearOperator)):
        return "operator"
    raise TypeError(f"cannot tensor object of type {type(obj).__name__}")


def tensor_product(a, b):
    """Kronecker composition of two states or two operators.

    The left factor is the slow (most significant) index, so
    ``tensor_product(basis_state(2, 0), basis_state(2, 1))`` puts its single
    nonzero amplitude at index 1.
    """
    kind_a, kind_b = _kind(a), _kind(b)
    if kind_a != kind_b:
        raise TypeError(f"cannot tensor a {kind_a} with a {kind_b}")
    if kind_a == "state":
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    mat = np.kron(a.matrix, b.matrix)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(mat)
    return LinearOperator._wrap(mat)


def partial_trace(rho: DensityOperator, subsystem_dims: Sequence[int],
                  keep: Iterable[int]) -> DensityOperator:
    """Trace out all tensor factors not listed in ``keep``.

    ``subsystem_dims`` lists the factor dimensions in tensor order (left
    factor first); their product must equal ``rho.dim``.  The kept factors
    retain their original relative order.
    """
    dims = [int(d) for d in subsystem_dims]
    if int(np.prod(dims)) != rho.dim:
        raise DimensionMismatch(
            f"product of {dims} is {int(np.prod(dims))}, expected {rho.dim}")
    keep = sorted(set(int(i) for i in keep))
    n = len(dims)
    if any(i < 0 or i >= n for i in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} factors")
    if not keep:
        raise ValueError("must keep at least one factor")
    tensor = rho.matrix.reshape(dims + dims)
    traced = tensor
    removed = 0
    for i in range(n):
        if i in keep:
            continue
        axis = i - removed
        ndim_half = traced.ndim // 2
        traced = np.trace(traced, axis1=axis, axis2=axis + ndim_half)
        removed += 1
    kept_dim = int(np.prod([dims[i] for i in keep]))
    return DensityOperator(traced.reshape(kept_dim, kept_dim))


def expectation(state: State, op: LinearOperator) -> complex:
    """<psi|A|psi> for pure states, Tr(rho A) for density operators."""
    if state.dim != op.dim:
        raise DimensionMismatch(f"state dim {state.dim} vs operator dim {op.dim}")
    if isinstance(state, PureState):
        return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    return complex(np.trace(state.matrix @ op.matrix))


def identity(dim: int) -> LinearOperator:
    return LinearOperator._wrap(np.eye(dim, dtype=complex))


def basis_state(dim: int, index: int) -> PureState:
    vec = np.zeros(dim, dtype=complex)
    vec[index] = 1.0
    return PureState(vec)


SIGMA_X = LinearOperator([[0, 1], [1, 0]])
SIGMA_Y = LinearOperator([[0, -1j], [1j, 0]])
SIGMA_Z = LinearOperator([[1, 0], [0, -1]])
