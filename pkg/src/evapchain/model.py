"""Two-part transverse-field Ising chain with a moving boundary.

The chain has L = n_init + m_init sites, 0-based.  With N system sites the
Hamiltonian is

    H = - J_sys sum_{b<N-1} Z_b Z_{b+1} - g_sys sum_{j<N} X_j
        - h Z_{N-1} Z_N
        - J_env sum_{b>=N} Z_b Z_{b+1} - g_env sum_{j>=N} X_j

with Z|0> = +|0>.  The boundary coupling h acts on the single bond between
the two parts and is absent when either part is empty.  Evaporation moves
the boundary one site toward the left edge every ``period`` of time, so N
decreases and M grows while L stays fixed.

Trotter layers follow the second-order splitting: a half step of the X
fields, the ZZ layer on bonds whose left site is even (odd sites when
counting from 1), the remaining ZZ layer, and the closing X half step.  The
two ZZ layers commute internally, so each is a single product of commuting
two-site gates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .mps import MpsState
from .tensor import contract

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class TfimParams:
    """Couplings and the initial partition sizes.

    Defaults are the standard operating point: a strongly coupled system
    (J_sys = g_sys = 3) attached through h = 3 to a critical environment
    (J_env = g_env = 1), with 15 system and 150 environment sites.
    """

    j_sys: float = 3.0
    g_sys: float = 3.0
    j_env: float = 1.0
    g_env: float = 1.0
    h: float = 3.0
    n_init: int = 15
    m_init: int = 150

    def __post_init__(self) -> None:
        for name in ("j_sys", "g_sys", "j_env", "g_env", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.n_init < 1:
            raise ValueError(f"n_init must be >= 1, got {self.n_init}")
        if self.m_init < 1:
            raise ValueError(f"m_init must be >= 1, got {self.m_init}")

    @property
    def length(self) -> int:
        return self.n_init + self.m_init


@dataclass(frozen=True)
class EvaporationSchedule:
    """Piecewise-constant schedule: one boundary move every ``period``.

    ``tau`` is the Trotter step; the period must be an integer number of
    steps.  The protocol ends when the system is empty, at time
    n_init * period.
    """

    params: TfimParams
    period: float = 5.0
    tau: float = 0.1

    def __post_init__(self) -> None:
        if not (self.tau > 0.0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be positive and finite, got {self.tau}")
        if self.period < self.tau:
            raise ValueError(f"period {self.period} must be >= tau {self.tau}")
        ratio = self.period / self.tau
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(
                f"period/tau = {ratio} is not an integer number of steps"
            )

    @property
    def steps_per_interval(self) -> int:
        return int(round(self.period / self.tau))

    @property
    def horizon(self) -> float:
        return self.params.n_init * self.period


def boundary_at(schedule: EvaporationSchedule, t: float) -> tuple[int, int]:
    """Partition sizes (N, M) at time t: N = n_init - floor(t / period)."""
    if t < 0.0 or t > schedule.horizon:
        raise ValueError(
            f"t = {t} outside protocol range [0, {schedule.horizon}]"
        )
    k = int(math.floor(t / schedule.period))
    return schedule.params.n_init - k, schedule.params.m_init + k


@dataclass(frozen=True)
class HamiltonianTerms:
    """Local terms for a fixed partition: -J Z_b Z_{b+1} bonds and -g X_j fields.

    Bonds are keyed by their left site (0-based); every interior bond of the
    chain appears exactly once.
    """

    length: int
    zz_bonds: tuple[tuple[int, float], ...]
    x_fields: tuple[tuple[int, float], ...]


def hamiltonian_terms(params: TfimParams, n_sys: int) -> HamiltonianTerms:
    """Terms for the full chain with ``n_sys`` system sites (0 <= n_sys <= L)."""
    L = params.length
    if not 0 <= n_sys <= L:
        raise ValueError(f"n_sys = {n_sys} out of range for L = {L}")
    bonds = []
    for b in range(L - 1):
        if b <= n_sys - 2:
            j = params.j_sys
        elif b == n_sys - 1:
            j = params.h  # the boundary bond; absent when a part is empty
        else:
            j = params.j_env
        bonds.append((b, j))
    fields = [
        (s, params.g_sys if s < n_sys else params.g_env) for s in range(L)
    ]
    return HamiltonianTerms(
        length=L, zz_bonds=tuple(bonds), x_fields=tuple(fields)
    )


def environment_terms(params: TfimParams, m: int | None = None) -> HamiltonianTerms:
    """Terms for a standalone environment chain of m sites (default m_init)."""
    m = params.m_init if m is None else m
    if m < 1:
        raise ValueError(f"environment needs at least 1 site, got {m}")
    return HamiltonianTerms(
        length=m,
        zz_bonds=tuple((b, params.j_env) for b in range(m - 1)),
        x_fields=tuple((s, params.g_env) for s in range(m)),
    )


# -- Trotter gates -------------------------------------------------------


@dataclass(frozen=True)
class GateLayers:
    """One second-order Trotter step, as positioned gate layers.

    ``half_x`` holds (site, 2x2) X half-step rotations; the ZZ layers hold
    (left site, (2,2,2,2)) bond gates.  ``odd_zz`` collects bonds with even
    left site (odd when counting sites from 1), ``even_zz`` the rest.
    """

    half_x: tuple[tuple[int, np.ndarray], ...]
    odd_zz: tuple[tuple[int, np.ndarray], ...]
    even_zz: tuple[tuple[int, np.ndarray], ...]

    def application_order(self):
        """Layers in the order they act on the state."""
        return (self.half_x, self.odd_zz, self.even_zz, self.half_x)


def x_half_gate(g: float, tau: float) -> np.ndarray:
    """exp(+i g (tau/2) X), one half of the field step."""
    return scipy.linalg.expm(1j * g * (tau / 2.0) * SIGMA_X)


def zz_gate(j: float, tau: float) -> np.ndarray:
    """exp(+i J tau Z Z) on one bond, shaped (2,2,2,2) as (out_l, out_r, in_l, in_r)."""
    m = scipy.linalg.expm(1j * j * tau * np.kron(SIGMA_Z, SIGMA_Z))
    return m.reshape(2, 2, 2, 2)


def trotter_layers(params: TfimParams, n_sys: int, tau: float) -> GateLayers:
    """Gates for one step of exp(-i H tau) at the given partition."""
    terms = hamiltonian_terms(params, n_sys)
    half_x = tuple((s, x_half_gate(g, tau)) for s, g in terms.x_fields)
    odd = []
    even = []
    for b, j in terms.zz_bonds:
        (odd if b % 2 == 0 else even).append((b, zz_gate(j, tau)))
    return GateLayers(half_x=half_x, odd_zz=tuple(odd), even_zz=tuple(even))


# -- matrix product operator --------------------------------------------


@dataclass(frozen=True)
class Mpo:
    """Matrix product operator; tensors have axes (left, out, in, right)."""

    tensors: tuple[np.ndarray, ...]

    @property
    def length(self) -> int:
        return len(self.tensors)

    def to_dense(self) -> np.ndarray:
        """Dense matrix in the shared row-major basis; small chains only."""
        if self.length > 14:
            raise ValueError(f"refusing dense MPO conversion for {self.length} sites")
        cur = self.tensors[0][0]  # (out, in, w)
        dim = 2
        for w in self.tensors[1:]:
            cur = contract(cur, w, [(2, 0)])  # (out, in, o, i, w')
            cur = cur.transpose(0, 2, 1, 3, 4).reshape(dim * 2, dim * 2, -1)
            dim *= 2
        return cur[:, :, 0]


def build_env_mpo(params: TfimParams, n_sys: int) -> Mpo:
    """Bond-dimension-3 MPO for the environment chain of M = L - n_sys sites."""
    m = params.length - n_sys
    if m < 2:
        raise ValueError(
            f"environment MPO needs at least 2 sites, got M = {m}; "
            "a single-site environment is a 2x2 problem, diagonalize it directly"
        )
    j, g = params.j_env, params.g_env
    w = np.zeros((3, 2, 2, 3), dtype=complex)
    w[0, :, :, 0] = ID2
    w[1, :, :, 0] = SIGMA_Z
    w[2, :, :, 0] = -g * SIGMA_X
    w[2, :, :, 1] = -j * SIGMA_Z
    w[2, :, :, 2] = ID2
    first = w[2:3, :, :, :]
    last = w[:, :, :, 0:1]
    return Mpo(tensors=(first,) + (w,) * (m - 2) + (last,))


def mpo_expectation(state: MpsState, mpo: Mpo) -> complex:
    """<state| mpo |state> by a three-layer zipper contraction."""
    if state.length != mpo.length:
        raise ValueError(f"length mismatch: {state.length} != {mpo.length}")
    env = np.ones((1, 1, 1), dtype=complex)  # (bra, mpo, ket)
    for a, w in zip(state.sites, mpo.tensors):
        t = contract(env, a, [(2, 0)])  # (bra, mpo, phys, ket')
        t = contract(t, w, [(1, 0), (2, 2)])  # (bra, ket', out, mpo')
        env = contract(np.conj(a), t, [(0, 0), (1, 2)])  # (bra', ket', mpo')
        env = env.transpose(0, 2, 1)
    return complex(env[0, 0, 0])


# -- initial states ------------------------------------------------------


def zeta_state(n_sys: int) -> MpsState:
    """System block |0..0> (ceil(N/2) sites) x GHZ on the remaining floor(N/2).

    The GHZ block sits on the high-index half, adjacent to the environment.
    For N = 2 the GHZ block is a single site and degenerates to |+>.
    """
    if n_sys < 2:
        raise ValueError(f"zeta needs at least 2 sites, got {n_sys}")
    n_zero = (n_sys + 1) // 2
    n_ghz = n_sys - n_zero
    if n_ghz == 1:
        warnings.warn(
            "GHZ block of a single site: zeta degenerates to |0..0>|+>",
            stacklevel=2,
        )
        plus = np.full((1, 2, 1), 1.0 / math.sqrt(2.0), dtype=complex)
        ghz = [plus]
    else:
        head = np.zeros((1, 2, 2), dtype=complex)
        head[0, 0, 0] = head[0, 1, 1] = 1.0 / math.sqrt(2.0)
        mid = np.zeros((2, 2, 2), dtype=complex)
        mid[0, 0, 0] = mid[1, 1, 1] = 1.0
        tail = np.zeros((2, 2, 1), dtype=complex)
        tail[0, 0, 0] = tail[1, 1, 0] = 1.0
        ghz = [head] + [mid] * (n_ghz - 2) + [tail]
    zero = np.zeros((1, 2, 1), dtype=complex)
    zero[0, 0, 0] = 1.0
    return MpsState([zero.copy() for _ in range(n_zero)] + ghz, ortho_center=None)


def xi_state(n_sys: int) -> MpsState:
    """All-excited system block |1>^N."""
    if n_sys < 1:
        raise ValueError(f"xi needs at least 1 site, got {n_sys}")
    return MpsState.from_product([1] * n_sys)


def initial_state(
    params: TfimParams,
    env_ground: MpsState,
    system: str | MpsState = "zeta",
) -> MpsState:
    """Join a system block with the environment ground state over a size-1 bond.

    ``system`` may be "zeta", "xi", or an explicit MPS of n_init sites.  The
    joined state starts with exactly zero entanglement across the boundary.
    """
    if isinstance(system, MpsState):
        block = system
    elif system == "zeta":
        block = zeta_state(params.n_init)
    elif system == "xi":
        block = xi_state(params.n_init)
    else:
        raise ValueError(f"unknown system state {system!r}")
    if block.length != params.n_init:
        raise ValueError(
            f"system block has {block.length} sites, expected {params.n_init}"
        )
    if env_ground.length != params.m_init:
        raise ValueError(
            f"environment has {env_ground.length} sites, expected {params.m_init}"
        )
    return MpsState(block.sites + env_ground.sites, ortho_center=None)
