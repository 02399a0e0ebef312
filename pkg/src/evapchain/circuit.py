"""Gate-program compilation of the Trotter protocol, plus its text format.

Angle conventions, with the rotations defined as RX(a) = exp(-i a X / 2),
RY(a) = exp(-i a Y / 2), RZZ(a) = exp(-i a ZZ / 2):

    RX angle on every site:     a = -tau * g
    RZZ angle on every bond:    a = -2 * tau * J   (boundary bond uses h)

so one program step reproduces the second-order splitting of exp(-i H tau)
exactly, gate for gate.  Qubits are numbered from 1 in the text format and
in ``Instruction``; everything else in the package is 0-based.

The text grammar is one instruction per line: the opcode, the qubit
numbers, then the angle if the opcode takes one.  ``#`` starts a comment,
blank lines are ignored, and angles are written with ``repr`` so parsing a
serialized program reproduces it bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SIGMA_Z, EvaporationSchedule, TfimParams, environment_terms
from .mps import MpsState
from .oracle import apply_one_site, apply_two_site, exact_ground
from .tensor import TruncationPolicy

# opcode -> (number of qubits, takes an angle)
_OPS: dict[str, tuple[int, bool]] = {
    "H": (1, False),
    "RX": (1, True),
    "RY": (1, True),
    "RZZ": (2, True),
    "CNOT": (2, False),
    "CRY": (2, True),
}

_PROGRAM_UNITARY_MAX = 10

# Angle preparing one critical-environment qubit pair from |00>:
# 2 * atan((sqrt(5) - 1) / 2), rounded in reports to 1.107.
ETA_CRITICAL_PAIR = 2.0 * math.atan((math.sqrt(5.0) - 1.0) / 2.0)


class GateProgramError(ValueError):
    """Malformed gate-program text or an unsupported instruction."""


@dataclass(frozen=True)
class Instruction:
    """One gate: opcode, 1-based qubits left to right, optional angle."""

    op: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        if self.op not in _OPS:
            raise GateProgramError(f"unknown opcode {self.op!r}")
        arity, has_angle = _OPS[self.op]
        if len(self.qubits) != arity:
            raise GateProgramError(
                f"{self.op} takes {arity} qubit(s), got {self.qubits}"
            )
        if any(q < 1 for q in self.qubits):
            raise GateProgramError(f"qubits are numbered from 1: {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise GateProgramError(f"repeated qubit in {self.qubits}")
        if has_angle != (self.angle is not None):
            raise GateProgramError(
                f"{self.op} {'needs' if has_angle else 'takes no'} angle"
            )


@dataclass(frozen=True)
class GateAngles:
    """Rotation angles for one Trotter step at fixed couplings.

    ``eta_init`` is not part of the step; it belongs to the initialization
    circuit and defaults to 0 so the step angles stay linear in tau.
    """

    phi_sys: float
    phi_env: float
    theta_sys: float
    theta_env: float
    theta_h: float
    eta_init: float = 0.0


def angles_from(params: TfimParams, tau: float, eta_init: float = 0.0) -> GateAngles:
    return GateAngles(
        phi_sys=-tau * params.g_sys,
        phi_env=-tau * params.g_env,
        theta_sys=-2.0 * tau * params.j_sys,
        theta_env=-2.0 * tau * params.j_env,
        theta_h=-2.0 * tau * params.h,
        eta_init=eta_init,
    )


# -- gate matrices -------------------------------------------------------


def rx_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rzz_matrix(angle: float) -> np.ndarray:
    zz = np.kron(SIGMA_Z, SIGMA_Z)
    phase = np.exp(-1j * (angle / 2.0) * np.diag(zz))
    return np.diag(phase)


_H_MATRIX = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
_CNOT_MATRIX = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)


def cry_matrix(angle: float) -> np.ndarray:
    """RY on the second qubit, applied when the first (control) is |1>."""
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = ry_matrix(angle)
    return m


def gate_matrix(inst: Instruction) -> np.ndarray:
    """Dense matrix for one instruction, qubit order as listed."""
    if inst.op == "H":
        return _H_MATRIX
    if inst.op == "RX":
        return rx_matrix(inst.angle)
    if inst.op == "RY":
        return ry_matrix(inst.angle)
    if inst.op == "RZZ":
        return rzz_matrix(inst.angle)
    if inst.op == "CNOT":
        return _CNOT_MATRIX
    if inst.op == "CRY":
        return cry_matrix(inst.angle)
    raise GateProgramError(f"unknown opcode {inst.op!r}")


# -- program builders ----------------------------------------------------


def trotter_step_circuit(
    params: TfimParams, n_sys: int, tau: float
) -> list[Instruction]:
    """One second-order step at the given partition, over all L qubits."""
    length = params.length
    if not 1 <= n_sys <= length - 1:
        raise ValueError(f"n_sys = {n_sys} leaves no boundary bond (L = {length})")
    ang = angles_from(params, tau)

    def field_angle(q: int) -> float:  # q is 1-based
        return ang.phi_sys if q <= n_sys else ang.phi_env

    def bond_angle(q: int) -> float:  # bond between qubits q and q+1
        if q <= n_sys - 1:
            return ang.theta_sys
        if q == n_sys:
            return ang.theta_h
        return ang.theta_env

    half_x = [Instruction("RX", (q,), field_angle(q)) for q in range(1, length + 1)]
    odd = [
        Instruction("RZZ", (q, q + 1), bond_angle(q))
        for q in range(1, length, 2)
    ]
    even = [
        Instruction("RZZ", (q, q + 1), bond_angle(q))
        for q in range(2, length, 2)
    ]
    return half_x + odd + even + list(half_x)


def init_circuit(n_sys: int, m_env: int, eta: float) -> list[Instruction]:
    """State preparation for the 4+2 chain from |000000>.

    Qubits 1-2 stay |0>, 3-4 become a Bell pair (the GHZ half of the system
    block), and 5-6 approximate the two-site environment ground state with
    an entangling rotation of angle ``eta``.  Other sizes have no compiled
    preparation; prepare those states numerically instead.
    """
    if (n_sys, m_env) != (4, 2):
        raise GateProgramError(
            f"initialization circuit only exists for (N, M) = (4, 2), "
            f"got ({n_sys}, {m_env})"
        )
    return [
        Instruction("H", (3,)),
        Instruction("CNOT", (3, 4)),
        Instruction("H", (5,)),
        Instruction("CRY", (5, 6), eta),
        Instruction("CNOT", (5, 6)),
    ]


def evaporation_program(
    schedule: EvaporationSchedule, eta_init: float | None = None
) -> str:
    """The whole protocol as text: initialization, then every Trotter step.

    Comments mark the interval structure; an "evaporation event" line sits
    where each boundary move happens.  Only the 4+2 chain has a compiled
    initialization; for other sizes the program starts from a comment noting
    that the initial state is prepared outside the circuit.
    """
    params = schedule.params
    parts = [f"# evaporation protocol on {params.length} qubits"]
    if (params.n_init, params.m_init) == (4, 2):
        eta = ETA_CRITICAL_PAIR if eta_init is None else eta_init
        parts.append("# initialization from |0...0>")
        parts.append(serialize(init_circuit(4, 2, eta)).rstrip("\n"))
    else:
        parts.append("# initial state prepared externally (no compiled init at this size)")
    for n in range(1, params.n_init + 1):
        n_cur = params.n_init - n + 1
        parts.append(f"# interval {n}: N = {n_cur}")
        step = serialize(trotter_step_circuit(params, n_cur, schedule.tau))
        parts.extend([step.rstrip("\n")] * schedule.steps_per_interval)
        if n_cur > 1:
            parts.append(f"# evaporation event: boundary moves to N = {n_cur - 1}")
        else:
            parts.append("# protocol complete: system exhausted")
    return "\n".join(parts) + "\n"


def two_step_program(
    params: TfimParams, tau: float, eta: float = ETA_CRITICAL_PAIR
) -> str:
    """Initialization plus two Trotter steps on the 4+2 chain."""
    if (params.n_init, params.m_init) != (4, 2):
        raise GateProgramError(
            f"two-step export is defined on the 4+2 chain, "
            f"got ({params.n_init}, {params.m_init})"
        )
    parts = [
        "# 4+2 chain: initialization and two Trotter steps",
        serialize(init_circuit(4, 2, eta)).rstrip("\n"),
    ]
    step = serialize(trotter_step_circuit(params, 4, tau)).rstrip("\n")
    for k in (1, 2):
        parts.append(f"# trotter step {k}")
        parts.append(step)
    return "\n".join(parts) + "\n"


# -- serialization -------------------------------------------------------


def serialize(instructions) -> str:
    """One line per instruction; angles via repr for lossless round-trips."""
    lines = []
    for inst in instructions:
        fields = [inst.op] + [str(q) for q in inst.qubits]
        if inst.angle is not None:
            fields.append(repr(float(inst.angle)))
        lines.append(" ".join(fields))
    return "\n".join(lines) + ("\n" if lines else "")


def parse(text: str) -> list[Instruction]:
    """Parse gate-program text; errors carry the 1-based line number."""
    out: list[Instruction] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        op = tokens[0].upper()
        if op not in _OPS:
            raise GateProgramError(f"line {lineno}: unknown opcode {tokens[0]!r}")
        arity, has_angle = _OPS[op]
        expected = 1 + arity + (1 if has_angle else 0)
        if len(tokens) != expected:
            raise GateProgramError(
                f"line {lineno}: {op} wants {expected - 1} argument(s), "
                f"got {len(tokens) - 1}"
            )
        try:
            qubits = tuple(int(tok) for tok in tokens[1 : 1 + arity])
        except ValueError as exc:
            raise GateProgramError(f"line {lineno}: bad qubit number: {exc}") from None
        angle = None
        if has_angle:
            try:
                angle = float(tokens[-1])
            except ValueError:
                raise GateProgramError(
                    f"line {lineno}: bad angle {tokens[-1]!r}"
                ) from None
        try:
            out.append(Instruction(op, qubits, angle))
        except GateProgramError as exc:
            raise GateProgramError(f"line {lineno}: {exc}") from None
    return out


# -- replay --------------------------------------------------------------


def apply_program_statevector(state: np.ndarray, instructions) -> np.ndarray:
    """Run a program on a dense statevector (qubit q acts on site q-1)."""
    psi = np.asarray(state, dtype=complex).reshape(-1)
    for inst in instructions:
        g = gate_matrix(inst)
        if len(inst.qubits) == 1:
            psi = apply_one_site(psi, g, inst.qubits[0] - 1)
        else:
            psi = apply_two_site(psi, g, inst.qubits[0] - 1, inst.qubits[1] - 1)
    return psi


def program_unitary(instructions, n_qubits: int) -> np.ndarray:
    """Dense unitary of a whole program; small qubit counts only."""
    if n_qubits > _PROGRAM_UNITARY_MAX:
        raise ValueError(
            f"refusing dense program unitary for {n_qubits} qubits"
        )
    dim = 1 << n_qubits
    u = np.eye(dim, dtype=complex)
    for col in range(dim):
        u[:, col] = apply_program_statevector(u[:, col].copy(), instructions)
    return u


def apply_program_mps(
    state: MpsState, instructions, policy: TruncationPolicy
) -> float:
    """Run a program on an MPS; two-qubit gates must act on neighbors.

    Returns the accumulated relative discarded weight.
    """
    weight = 0.0
    for inst in instructions:
        g = gate_matrix(inst)
        if len(inst.qubits) == 1:
            state.apply_single_site_gate(g, inst.qubits[0] - 1)
            continue
        qa, qb = inst.qubits
        if qb != qa + 1:
            raise GateProgramError(
                f"{inst.op} on non-adjacent qubits {inst.qubits}; "
                "the MPS path has no swap network"
            )
        weight += state.apply_two_site_gate(g, qa - 1, policy)
    return weight


# -- environment-block preparation report --------------------------------


def env_pair_fidelities(
    j_env: float, g_env: float, eta: float = ETA_CRITICAL_PAIR
) -> dict[str, float]:
    """Fidelity of candidate two-qubit preparation readings vs exact ground.

    The compiled preparation is written H, controlled-RY(eta), CNOT.  The
    controlled rotation admits several conventions, which differ in how
    close the prepared pair lands to the actual two-site ground state; this
    reports |<ground|prepared>|^2 for each reading so the choice is
    documented by measurement rather than assumption.
    """
    pair_params = TfimParams(j_env=j_env, g_env=g_env, n_init=1, m_init=2)
    ground, _ = exact_ground(environment_terms(pair_params))

    zero2 = np.zeros(4, dtype=complex)
    zero2[0] = 1.0

    def run(instrs) -> float:
        psi = apply_program_statevector(zero2, instrs)
        psi = psi / np.linalg.norm(psi)
        return float(abs(np.vdot(ground, psi)) ** 2)

    h = Instruction("H", (1,))
    cnot = Instruction("CNOT", (1, 2))
    candidates = {
        "cry-control-on-1": [h, Instruction("CRY", (1, 2), eta), cnot],
        "ry-unconditional": [h, Instruction("RY", (2,), eta), cnot],
        "ry-double-angle": [h, Instruction("RY", (2,), 2.0 * eta), cnot],
    }
    return {name: run(instrs) for name, instrs in candidates.items()}
