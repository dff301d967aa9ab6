"""Continuous-measurement physics: quasi-continuum decay and projective freezing.

An unstable level coupled to a flat band of quasi-continuum modes decays
exponentially at rate 1/tau inside a recurrence-safe window.  Re-projecting
onto the undecayed level every Delta seconds leaves those statistics alone
while Delta stays long compared to the band correlation time t0 = 2*pi/W,
and freezes the decay entirely as Delta -> 0.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidRegime, OutsideValidityWindow
from .hilbert import LinearOperator, PureState
from .dynamics import Hamiltonian, propagate

MIN_BAND_DECAY_PRODUCT = 20.0
MIN_MODES = 200


class DecayModel:
    """One undecayed level coupled uniformly to a flat band of modes.

    The band has ``n_modes`` levels spaced ``delta_omega = bandwidth /
    n_modes`` symmetric about the undecayed level's energy (set to 0), each
    coupled with strength g = sqrt(delta_omega / (2 pi tau)); Fermi's golden
    rule then gives decay rate exactly 1/tau.  Discreteness revives the
    initial state on the recurrence scale T_valid = 2 pi / delta_omega, so
    times are only accepted up to T_valid / 3.
    """

    __slots__ = ("tau", "n_modes", "bandwidth", "coupling", "delta_omega",
                 "t0", "t_valid", "hamiltonian", "_evals", "_weights", "_evecs")

    def __init__(self, tau: float, n_modes: int, bandwidth: float):
        if tau <= 0 or bandwidth <= 0:
            raise InvalidRegime("tau and bandwidth must be positive")
        if bandwidth * tau < MIN_BAND_DECAY_PRODUCT:
            raise InvalidRegime(
                f"bandwidth*tau = {bandwidth * tau:.3g} below {MIN_BAND_DECAY_PRODUCT}; "
                "the weak-coupling (golden-rule) regime does not apply")
        if n_modes < MIN_MODES:
            raise InvalidRegime(f"need at least {MIN_MODES} modes, got {n_modes}")
        self.tau = float(tau)
        self.n_modes = int(n_modes)
        self.bandwidth = float(bandwidth)
        self.delta_omega = self.bandwidth / self.n_modes
        self.coupling = float(np.sqrt(self.delta_omega / (2 * np.pi * self.tau)))
        self.t0 = 2 * np.pi / self.bandwidth
        self.t_valid = 2 * np.pi / self.delta_omega

        dim = self.n_modes + 1
        H = np.zeros((dim, dim), dtype=complex)
        omegas = (np.arange(self.n_modes) - (self.n_modes - 1) / 2) * self.delta_omega
        H[1:, 1:] = np.diag(omegas)
        H[0, 1:] = self.coupling
        H[1:, 0] = self.coupling
        self.hamiltonian = Hamiltonian(LinearOperator._wrap(H))
        evals, evecs = self.hamiltonian._eigensystem()
        self._evals = evals
        self._evecs = evecs
        self._weights = np.abs(evecs[0, :]) ** 2

    @property
    def dim(self) -> int:
        return self.n_modes + 1

    def undecayed_state(self) -> PureState:
        vec = np.zeros(self.dim, dtype=complex)
        vec[0] = 1.0
        return PureState(vec)

    def decay_products_state(self) -> PureState:
        """Uniform superposition over the band modes."""
        vec = np.zeros(self.dim, dtype=complex)
        vec[1:] = 1.0 / np.sqrt(self.n_modes)
        return PureState(vec)

    def _check_window(self, t: float):
        if t < 0:
            raise OutsideValidityWindow(f"negative time {t}")
        if t > self.t_valid / 3:
            raise OutsideValidityWindow(
                f"time {t:.4g} exceeds recurrence-safe window "
                f"T_valid/3 = {self.t_valid / 3:.4g}")

    def survival_amplitude(self, t: float) -> complex:
        return complex(np.sum(self._weights * np.exp(-1j * self._evals * t)))

    def autocorrelation(self, state: PureState, t: float) -> complex:
        """<state|U(t)|state> from the cached eigendecomposition."""
        coeff = self._evecs.conj().T @ state.amplitudes
        return complex(np.sum(np.abs(coeff) ** 2 * np.exp(-1j * self._evals * t)))

    def __repr__(self):
        return (f"DecayModel(tau={self.tau}, n_modes={self.n_modes}, "
                f"bandwidth={self.bandwidth})")


def build_decay_model(tau: float, n_modes: int, bandwidth: float) -> DecayModel:
    """Construct a decay model; raises InvalidRegime outside weak coupling."""
    return DecayModel(tau, n_modes, bandwidth)


def survival_probability(model: DecayModel, t: float) -> float:
    """|<undecayed|U(t)|undecayed>|^2 inside the validity window.

    Tracks exp(-t/tau) to a few percent for t in [0.2 tau, 3 tau]; the
    early-time deviation is quadratic (that is the physics the Zeno limit
    exploits) and band-edge transients contribute O(1/(bandwidth*tau)).
    """
    model._check_window(t)
    return abs(model.survival_amplitude(t)) ** 2


def iterated_projection_survival(model: DecayModel, delta: float, horizon: float) -> float:
    """Survival under "evolve delta, check for decay" repeated to the horizon.

    Each cycle evolves the kept state for ``delta``, records the probability
    of still finding it undecayed, and keeps the renormalized undecayed
    branch (the decayed branch is dropped).  Runs floor(horizon / delta) full
    cycles and returns the product of per-cycle survival probabilities: the
    prediction of applying the projection rule every ``delta`` seconds.
    """
    if delta <= 0:
        raise ValueError("projection interval must be positive")
    n_cycles = int(np.floor(horizon / delta + 1e-12))
    if n_cycles < 1:
        raise ValueError(f"horizon {horizon} shorter than one cycle of {delta}")
    model._check_window(n_cycles * delta)
    evals, evecs = model._evals, model._evecs
    phases = np.exp(-1j * evals * delta)
    undecayed = np.zeros(model.dim, dtype=complex)
    undecayed[0] = 1.0
    state = undecayed
    survival = 1.0
    for _ in range(n_cycles):
        state = evecs @ (phases * (evecs.conj().T @ state))
        p = abs(state[0]) ** 2
        survival *= p
        if survival == 0.0:
            break
        # keep the undecayed branch, renormalized, phase included
        state = (state[0] / abs(state[0])) * undecayed
    return float(survival)


def rabi_zeno(theta: float, n_projections: int) -> float:
    """Survival of a two-level rotation interrupted by N projections.

    A spin is rotated by total angle theta in N equal steps; after each step
    it is projected back onto its initial state.  Simulated as actual
    evolve-project cycles (the closed form is cos^2N(theta / 2N)).
    """
    if n_projections < 1:
        raise ValueError("need at least one projection")
    generator = LinearOperator([[0, 0.5], [0.5, 0]])  # rotation by t radians under U(t)
    step = propagate(generator, theta / n_projections)
    up = np.array([1.0, 0.0], dtype=complex)
    survival = 1.0
    state = up
    for _ in range(n_projections):
        state = step.matrix @ state
        p = abs(state[0]) ** 2
        survival *= p
        if survival == 0.0:
            break
        state = (state[0] / abs(state[0])) * up
    return float(survival)
