"""Value-definiteness diagnostics under the eigenstate criterion.

A state has a definite value of an observable exactly when it sits (within a
numerical-zero threshold) in one eigenspace.  The operations here evaluate
that criterion, scan how projector expectations behave along unitary
histories, and test the structural condition (an eigenspace invariant under
the Hamiltonian) that decides whether an expectation can vanish identically
rather than at isolated instants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyRegion
from .dynamics import GridSpace, Hamiltonian
from .hilbert import LinearOperator, Observable, PureState

DEFAULT_ZERO_THRESHOLD = 1e-10


@dataclass(frozen=True)
class DefinitenessReport:
    """Outcome of the eigenstate test for one (state, observable) pair.

    ``status`` is "definite" or "indefinite".  For a definite value,
    ``value`` is the eigenvalue and ``residual`` the distance
    ||psi - Pi psi|| to its eigenspace.  For an indefinite one, ``support``
    lists the (eigenvalue, weight) pairs with Born weight above threshold.
    """

    status: str
    value: float | None
    residual: float | None
    support: tuple[tuple[float, float], ...]
    threshold: float

    @property
    def is_definite(self) -> bool:
        return self.status == "definite"


def ee_link_status(state: PureState, obs: Observable,
                   threshold: float = DEFAULT_ZERO_THRESHOLD) -> DefinitenessReport:
    """Report whether ``state`` has a definite value of ``obs``.

    Definite means ||psi - Pi_i psi|| < threshold for some eigenprojector;
    otherwise the report carries the support set {i : <Pi_i> > threshold}.
    The verdict is phase-invariant because only projector weights enter.
    """
    if state.dim != obs.dim:
        raise DimensionMismatch(f"state dim {state.dim} vs observable dim {obs.dim}")
    psi = state.amplitudes
    weights = np.empty(obs.n_outcomes)
    for i in range(obs.n_outcomes):
        block = obs.eigenbasis(i)
        weights[i] = float(np.sum(np.abs(block.conj().T @ psi) ** 2))
    # ||psi - Pi psi||^2 = 1 - <Pi> for a normalized state
    residuals = np.sqrt(np.clip(1.0 - weights, 0.0, None))
    best = int(np.argmin(residuals))
    if residuals[best] < threshold:
        return DefinitenessReport(
            status="definite",
            value=float(obs.eigenvalues[best]),
            residual=float(residuals[best]),
            support=((float(obs.eigenvalues[best]), float(weights[best])),),
            threshold=threshold,
        )
    support = tuple((float(obs.eigenvalues[i]), float(weights[i]))
                    for i in range(obs.n_outcomes) if weights[i] > threshold)
    return DefinitenessReport(status="indefinite", value=None, residual=None,
                              support=support, threshold=threshold)


def region_projector(g: GridSpace, window: tuple[int, int]) -> Observable:
    """The 0/1 observable "is the particle inside this index window?".

    ``window`` is a half-open index range (lo, hi).  The full grid yields the
    identity (a single eigenvalue 1); any proper nonempty window yields the
    two-outcome observable with eigenvalues {0, 1}.
    """
    lo, hi = int(window[0]), int(window[1])
    n = g.n_points
    if not (0 <= lo < hi <= n):
        raise EmptyRegion(f"window {window} is empty or out of range for {n} points")
    inside = np.zeros(n, dtype=bool)
    inside[lo:hi] = True
    diag = inside.astype(complex)
    op = LinearOperator._wrap(np.diag(diag))
    if inside.all():
        basis = np.eye(n, dtype=complex)
        return Observable(op, [1.0], basis, [slice(0, n)], validate=False)
    order = np.argsort(inside, kind="stable")  # eigenvalue 0 columns first
    basis = np.eye(n, dtype=complex)[:, order]
    n_out = n - int(inside.sum())
    slices = [slice(0, n_out), slice(n_out, n)]
    return Observable(op, [0.0, 1.0], basis, slices, validate=False)


def delocalization_demo(g: GridSpace, H: Hamiltonian, psi0: PureState,
                        window: tuple[int, int], epsilon: float) -> float:
    """Probability outside the support window after an arbitrarily short time.

    ``psi0`` must vanish identically outside ``window``.  Returns
    1 - <Lambda_window> at time ``epsilon``: zero at epsilon = 0, and
    strictly positive (far above the numerical floor) for any epsilon > 0,
    however small relative to the packet's natural timescale.
    """
    lo, hi = int(window[0]), int(window[1])
    outside_mask = np.ones(g.n_points, dtype=bool)
    outside_mask[lo:hi] = False
    leak0 = float(np.sum(np.abs(psi0.amplitudes[outside_mask]) ** 2))
    if leak0 != 0.0:
        raise ValueError(f"initial state has weight {leak0:.3e} outside the window")
    if epsilon == 0.0:
        return 0.0
    psi_t = H.evolve(psi0, epsilon)
    return float(np.sum(np.abs(psi_t.amplitudes[outside_mask]) ** 2))


@dataclass(frozen=True)
class IndefinitenessScan:
    """Time series of a projector expectation with its zero-set classification.

    ``classification`` is one of "identically-zero" (the whole series sits at
    the numerical zero threshold, and the initial state lies in an invariant
    subspace of the projector's kernel), "isolated-zeros" (the series dips to
    zero only at isolated grid instants), or "never-zero".
    """

    times: np.ndarray
    series: np.ndarray
    classification: str
    kernel_invariant: bool
    threshold: float

    @property
    def minimum(self) -> float:
        return float(self.series.min())


def _projector_matrix(projector) -> np.ndarray:
    mat = projector.matrix if isinstance(projector, LinearOperator) else np.asarray(projector, complex)
    defect = max(float(np.max(np.abs(mat @ mat - mat))),
                 float(np.max(np.abs(mat - mat.conj().T))))
    if defect > 1e-9:
        raise ValueError(f"not a projector: defect {defect:.3e}")
    return mat


def _kernel_criterion(H: Hamiltonian, psi0: PureState, proj: np.ndarray,
                      threshold: float) -> bool:
    """Whether the evolved ray stays in ker(Pi) for all times.

    The trajectory spans the eigenspace components of the initial state, so
    psi(t) remains in the kernel iff Pi kills every energy-eigenspace
    projection of psi0.
    """
    evals, evecs = H._eigensystem()
    coeff = evecs.conj().T @ psi0.amplitudes
    radius = float(np.max(np.abs(evals))) if len(evals) else 0.0
    gap = 1e-9 * max(radius, 1.0)
    start = 0
    for j in range(1, len(evals) + 1):
        if j == len(evals) or evals[j] - evals[j - 1] > gap:
            component = evecs[:, start:j] @ coeff[start:j]
            norm = float(np.linalg.norm(component))
            if norm > threshold and float(np.linalg.norm(proj @ component)) > threshold * norm:
                return False
            start = j
    return True


def indefiniteness_scan(H: Hamiltonian, psi0: PureState, projector,
                        times, threshold: float = DEFAULT_ZERO_THRESHOLD) -> IndefinitenessScan:
    """Scan <psi(t)|Pi|psi(t)> over a time grid and classify its zero set.

    The grid must carry at least 1000 points; zero-set classification on a
    sparser grid says little.
    """
    proj = _projector_matrix(projector)
    times = np.asarray(times, dtype=float)
    if times.size < 1000:
        raise ValueError(f"need a time grid of at least 1000 points, got {times.size}")
    evals, evecs = H._eigensystem()
    coeff = evecs.conj().T @ psi0.amplitudes
    proj_eig = evecs.conj().T @ (proj @ evecs)
    series = np.empty(len(times))
    for idx, t in enumerate(times):
        c = np.exp(-1j * evals * t) * coeff
        series[idx] = float(np.real(np.vdot(c, proj_eig @ c)))
    series = np.clip(series, 0.0, None)
    kernel_invariant = _kernel_criterion(H, psi0, proj, threshold)
    below = series <= threshold
    if below.all() and kernel_invariant:
        classification = "identically-zero"
    elif not below.any():
        classification = "never-zero"
    else:
        classification = "isolated-zeros"
    return IndefinitenessScan(times=times, series=series,
                              classification=classification,
                              kernel_invariant=kernel_invariant,
                              threshold=threshold)


def invariant_subspace_check(H: Hamiltonian, obs: Observable,
                             tol: float = 1e-9) -> list[bool]:
    """For each eigenspace of ``obs``, does H map it into itself?

    Checks ||(1 - Pi_i) H Pi_i|| <= tol * ||H|| per eigenspace.  If no
    eigenspace is invariant, no projector expectation along generic unitary
    histories can vanish identically, so every value of the observable stays
    "possible" at almost every time.
    """
    Hm = H.op.matrix
    scale = max(1.0, float(np.max(np.abs(Hm))))
    results = []
    for i in range(obs.n_outcomes):
        block = obs.eigenbasis(i)
        mapped = Hm @ block
        residual = mapped - block @ (block.conj().T @ mapped)
        results.append(bool(np.max(np.abs(residual)) <= tol * scale))
    return results
