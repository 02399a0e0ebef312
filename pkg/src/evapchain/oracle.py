"""Exact statevector reference for small chains.

Everything here is deliberately independent of the tensor-network code: the
Hamiltonian is assembled bitwise on dense vectors, propagation goes through
a full eigendecomposition, and entropies come from reduced density
matrices.  Site 0 is the most significant bit of the basis index, matching
the MPS linearization, so states can be compared directly.

Size guards keep the dense paths honest: 16 sites for operators, 14 for
propagation, 12 for full protocol replays.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from .model import (
    EvaporationSchedule,
    HamiltonianTerms,
    environment_terms,
    hamiltonian_terms,
    xi_state,
    zeta_state,
)
from .trace import EntropyTrace, TraceRow

if TYPE_CHECKING:  # pragma: no cover
    from .evolve import RunConfig

_DENSE_MAX = 16
_PROPAGATE_MAX = 14
_REPLAY_MAX = 12


def _check_sites(n_sites: int, limit: int, what: str) -> None:
    if n_sites > limit:
        raise ValueError(f"refusing {what} for {n_sites} sites (limit {limit})")


def dense_hamiltonian(terms: HamiltonianTerms) -> np.ndarray:
    """Dense Hermitian matrix for the given local terms."""
    L = terms.length
    _check_sites(L, _DENSE_MAX, "dense Hamiltonian assembly")
    dim = 1 << L
    idx = np.arange(dim)
    # z_i = +1 for bit 0, -1 for bit 1; site 0 is the most significant bit.
    z = [1.0 - 2.0 * ((idx >> (L - 1 - s)) & 1) for s in range(L)]
    h = np.zeros((dim, dim), dtype=complex)
    diag = np.zeros(dim)
    for b, j in terms.zz_bonds:
        diag -= j * z[b] * z[b + 1]
    h[idx, idx] = diag
    for s, g in terms.x_fields:
        flipped = idx ^ (1 << (L - 1 - s))
        h[idx, flipped] -= g
    return h


def exact_ground(terms: HamiltonianTerms) -> tuple[np.ndarray, float]:
    """Ground statevector and energy by full diagonalization."""
    w, v = np.linalg.eigh(dense_hamiltonian(terms))
    return np.ascontiguousarray(v[:, 0]), float(w[0])


def _state_sites(state: np.ndarray) -> int:
    n = int(round(math.log2(state.size)))
    if 2**n != state.size:
        raise ValueError(f"statevector length {state.size} is not a power of 2")
    return n


def exact_propagate(
    state: np.ndarray, terms: HamiltonianTerms, duration: float
) -> np.ndarray:
    """Apply exp(-i H duration) through a full eigendecomposition."""
    state = np.asarray(state, dtype=complex).reshape(-1)
    L = _state_sites(state)
    if L != terms.length:
        raise ValueError(f"state has {L} sites but terms describe {terms.length}")
    _check_sites(L, _PROPAGATE_MAX, "exact propagation")
    w, v = np.linalg.eigh(dense_hamiltonian(terms))
    return v @ (np.exp(-1j * w * duration) * (v.conj().T @ state))


def dense_propagator(terms: HamiltonianTerms, duration: float) -> np.ndarray:
    """The matrix exp(-i H duration) itself, for operator-distance checks."""
    _check_sites(terms.length, _PROPAGATE_MAX, "dense propagator")
    w, v = np.linalg.eigh(dense_hamiltonian(terms))
    return (v * np.exp(-1j * w * duration)) @ v.conj().T


def reduced_density(state: np.ndarray, n_left: int) -> np.ndarray:
    """Reduced density matrix of the first ``n_left`` sites."""
    state = np.asarray(state, dtype=complex).reshape(-1)
    L = _state_sites(state)
    if not 1 <= n_left <= L - 1:
        raise ValueError(f"cut {n_left} out of range for {L} sites")
    a = state.reshape(1 << n_left, -1)
    return a @ a.conj().T


def exact_entropy(state: np.ndarray, n_left: int) -> float:
    """Von Neumann entropy (nats) of the first ``n_left`` sites."""
    lam = np.linalg.eigvalsh(reduced_density(state, n_left))
    lam = np.clip(lam.real, 0.0, None)
    total = lam.sum()
    if total <= 0.0:
        raise ValueError("state has zero norm")
    lam = lam / total
    lam = lam[lam > 0.0]
    return float(-np.sum(lam * np.log(lam)))


# -- gate application on statevectors ------------------------------------


def apply_one_site(state: np.ndarray, gate: np.ndarray, site: int) -> np.ndarray:
    """Apply a 2x2 gate on one site of a statevector."""
    state = np.asarray(state, dtype=complex).reshape(-1)
    L = _state_sites(state)
    if not 0 <= site < L:
        raise ValueError(f"site {site} out of range")
    psi = state.reshape([2] * L)
    out = np.tensordot(np.asarray(gate, dtype=complex), psi, axes=([1], [site]))
    return np.moveaxis(out, 0, site).reshape(-1)


def apply_two_site(
    state: np.ndarray, gate: np.ndarray, site_a: int, site_b: int
) -> np.ndarray:
    """Apply a two-site gate given as (out_a, out_b, in_a, in_b) or 4x4."""
    state = np.asarray(state, dtype=complex).reshape(-1)
    L = _state_sites(state)
    if not (0 <= site_a < L and 0 <= site_b < L and site_a != site_b):
        raise ValueError(f"bad site pair ({site_a}, {site_b})")
    g = np.asarray(gate, dtype=complex).reshape(2, 2, 2, 2)
    psi = state.reshape([2] * L)
    out = np.tensordot(g, psi, axes=([2, 3], [site_a, site_b]))
    return np.moveaxis(out, [0, 1], [site_a, site_b]).reshape(-1)


# -- protocol replay -----------------------------------------------------


def initial_statevector(config: "RunConfig") -> np.ndarray:
    """Dense initial state: system block joined with the exact environment ground."""
    params = config.schedule.params
    _check_sites(params.length, _REPLAY_MAX, "dense initial state")
    system = config.initial_state
    if isinstance(system, str):
        if system == "zeta":
            sys_vec = zeta_state(params.n_init).to_statevector()
        elif system == "xi":
            sys_vec = xi_state(params.n_init).to_statevector()
        else:
            raise ValueError(f"unknown system state {system!r}")
    else:
        sys_vec = system.to_statevector()
    env_vec, _ = exact_ground(environment_terms(params))
    return np.kron(sys_vec, env_vec)


def protocol_replay(config: "RunConfig", order: str = "measure-first") -> EntropyTrace:
    """Run the full evaporation protocol on dense vectors.

    Within each interval the Hamiltonian is constant and is applied in one
    exact shot of length ``period``.  With the correct "measure-first"
    order, each event records the boundary entropy at the pre-move cut and
    then shifts the boundary.  The "evaporate-first" variant deliberately
    swaps the two and exists only to show that the order matters.
    """
    if order not in ("measure-first", "evaporate-first"):
        raise ValueError(f"unknown event order {order!r}")
    sched: EvaporationSchedule = config.schedule
    params = sched.params
    L = params.length
    _check_sites(L, _REPLAY_MAX, "protocol replay")
    psi = initial_statevector(config)
    rows = []
    for n in range(1, params.n_init + 1):
        n_cur = params.n_init - n + 1
        terms = hamiltonian_terms(params, n_cur)
        psi = exact_propagate(psi, terms, sched.period)
        cut = n_cur if order == "measure-first" else n_cur - 1
        if cut < 1:
            continue  # wrong-order variant has no cut left at the final event
        rows.append(
            TraceRow(
                t=n * sched.period,
                n_sys=cut,
                m_env=L - cut,
                entropy=exact_entropy(psi, cut),
                norm=float(np.linalg.norm(psi)),
                discarded_weight=0.0,
            )
        )
    trace = EntropyTrace(
        rows=rows,
        metadata={
            "method": "statevector",
            "event_order": order,
            "initial_boundary_entropy": "0.0",
        },
    )
    trace.validate()
    return trace
