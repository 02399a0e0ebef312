"""Gate-program compilation, text format, and replay paths."""

import math

import numpy as np
import pytest
import scipy.linalg

from evapchain.circuit import (
    ETA_CRITICAL_PAIR,
    GateProgramError,
    Instruction,
    angles_from,
    apply_program_mps,
    apply_program_statevector,
    cry_matrix,
    env_pair_fidelities,
    evaporation_program,
    gate_matrix,
    init_circuit,
    parse,
    program_unitary,
    rx_matrix,
    ry_matrix,
    rzz_matrix,
    serialize,
    trotter_step_circuit,
    two_step_program,
)
from evapchain.model import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    EvaporationSchedule,
    TfimParams,
    trotter_layers,
)
from evapchain.mps import MpsState
from evapchain.tensor import EXACT


# -- instructions ---------------------------------------------------------


def test_instruction_validation():
    with pytest.raises(GateProgramError, match="unknown opcode"):
        Instruction("SWAP", (1, 2))
    with pytest.raises(GateProgramError, match="takes 2 qubit"):
        Instruction("CNOT", (1,))
    with pytest.raises(GateProgramError, match="numbered from 1"):
        Instruction("RX", (0,), 0.5)
    with pytest.raises(GateProgramError, match="repeated"):
        Instruction("RZZ", (3, 3), 0.5)
    with pytest.raises(GateProgramError, match="needs angle"):
        Instruction("RX", (1,))
    with pytest.raises(GateProgramError, match="takes no angle"):
        Instruction("CNOT", (1, 2), 0.5)


def test_angle_map():
    p = TfimParams(n_init=2, m_init=2, j_sys=1.5, g_sys=0.5, j_env=2.0, g_env=3.0, h=0.25)
    ang = angles_from(p, 0.1)
    assert ang.phi_sys == -0.1 * 0.5
    assert ang.phi_env == -0.1 * 3.0
    assert ang.theta_sys == -2.0 * 0.1 * 1.5
    assert ang.theta_env == -2.0 * 0.1 * 2.0
    assert ang.theta_h == -2.0 * 0.1 * 0.25
    assert ang.eta_init == 0.0


# -- gate matrices --------------------------------------------------------


@pytest.mark.parametrize("angle", [0.0, 0.3, -1.2, math.pi])
def test_rotations_match_exponentials(angle):
    np.testing.assert_allclose(
        rx_matrix(angle), scipy.linalg.expm(-0.5j * angle * SIGMA_X), atol=1e-14
    )
    np.testing.assert_allclose(
        ry_matrix(angle), scipy.linalg.expm(-0.5j * angle * SIGMA_Y), atol=1e-14
    )
    np.testing.assert_allclose(
        rzz_matrix(angle),
        scipy.linalg.expm(-0.5j * angle * np.kron(SIGMA_Z, SIGMA_Z)),
        atol=1e-14,
    )


def test_cry_blocks():
    angle = 0.7
    m = cry_matrix(angle)
    np.testing.assert_allclose(m[:2, :2], np.eye(2), atol=1e-15)
    np.testing.assert_allclose(m[2:, 2:], ry_matrix(angle), atol=1e-15)
    assert np.all(m[:2, 2:] == 0) and np.all(m[2:, :2] == 0)


def test_gate_matrices_unitary():
    instrs = [
        Instruction("H", (1,)),
        Instruction("RX", (1,), 0.4),
        Instruction("RY", (1,), -0.9),
        Instruction("RZZ", (1, 2), 1.3),
        Instruction("CNOT", (1, 2)),
        Instruction("CRY", (1, 2), 2.1),
    ]
    for inst in instrs:
        g = gate_matrix(inst)
        np.testing.assert_allclose(
            g.conj().T @ g, np.eye(g.shape[0]), atol=1e-14
        )


# -- one Trotter step as a circuit ----------------------------------------


def test_step_circuit_layout():
    p = TfimParams(n_init=3, m_init=3, j_sys=1.0, g_sys=2.0, j_env=3.0, g_env=4.0, h=7.0)
    step = trotter_step_circuit(p, 3, 0.1)
    assert len(step) == 2 * 6 + 5
    rzz = [i for i in step if i.op == "RZZ"]
    by_bond = {i.qubits[0]: i.angle for i in rzz}
    assert by_bond[1] == by_bond[2] == -2 * 0.1 * 1.0  # system bonds
    assert by_bond[3] == -2 * 0.1 * 7.0  # boundary
    assert by_bond[4] == by_bond[5] == -2 * 0.1 * 3.0  # environment bonds
    rx = [i for i in step if i.op == "RX"]
    assert {i.angle for i in rx if i.qubits[0] <= 3} == {-0.1 * 2.0}
    assert {i.angle for i in rx if i.qubits[0] > 3} == {-0.1 * 4.0}


def test_step_circuit_partition_range():
    p = TfimParams(n_init=2, m_init=2)
    with pytest.raises(ValueError, match="boundary bond"):
        trotter_step_circuit(p, 0, 0.1)
    with pytest.raises(ValueError, match="boundary bond"):
        trotter_step_circuit(p, 4, 0.1)


def _embed_one(g, site, length):
    return np.kron(
        np.eye(1 << site), np.kron(g, np.eye(1 << (length - site - 1)))
    )


def _embed_two(g, left, length):
    return np.kron(
        np.eye(1 << left),
        np.kron(np.asarray(g).reshape(4, 4), np.eye(1 << (length - left - 2))),
    )


def test_step_circuit_matches_gate_layers():
    """The compiled step and the simulator's gates are the same operator."""
    p = TfimParams(n_init=2, m_init=2, j_sys=1.3, g_sys=0.7, j_env=0.9, g_env=1.1, h=2.0)
    tau, length = 0.17, 4
    u_prog = program_unitary(trotter_step_circuit(p, 2, tau), length)
    u_gates = np.eye(1 << length, dtype=complex)
    for layer in trotter_layers(p, 2, tau).application_order():
        for pos, gate in layer:
            emb = (
                _embed_one(gate, pos, length)
                if gate.ndim == 2
                else _embed_two(gate, pos, length)
            )
            u_gates = emb @ u_gates
    np.testing.assert_allclose(u_prog, u_gates, atol=1e-12)


# -- initialization circuit -----------------------------------------------


def test_init_circuit_size_guard():
    with pytest.raises(GateProgramError, match="only exists"):
        init_circuit(3, 3, 0.5)


def test_init_circuit_eta_zero():
    """eta = 0 leaves two Bell pairs: sites 3-4 and (H + CNOT) 5-6."""
    zero = np.zeros(64, dtype=complex)
    zero[0] = 1.0
    psi = apply_program_statevector(zero, init_circuit(4, 2, 0.0))
    expected = np.zeros(64, dtype=complex)
    expected[[0b000000, 0b000011, 0b001100, 0b001111]] = 0.5
    np.testing.assert_allclose(psi, expected, atol=1e-14)


# -- text format ----------------------------------------------------------


def test_serialize_parse_round_trip():
    p = TfimParams(n_init=2, m_init=2, h=0.123456789012345)
    step = trotter_step_circuit(p, 2, 0.1)
    text = serialize(step)
    assert parse(text) == step
    # serialization of a parse is a fixed point
    assert serialize(parse(text)) == text


def test_parse_comments_and_case():
    text = "# header\n\n  rx 1 0.5  # trailing\nCNOT 1 2\n"
    instrs = parse(text)
    assert instrs == [
        Instruction("RX", (1,), 0.5),
        Instruction("CNOT", (1, 2)),
    ]


def test_parse_errors_carry_line_numbers():
    with pytest.raises(GateProgramError, match="line 2: unknown opcode"):
        parse("RX 1 0.5\nFROB 1\n")
    with pytest.raises(GateProgramError, match="line 1: RX wants 2"):
        parse("RX 1\n")
    with pytest.raises(GateProgramError, match="line 3: bad angle"):
        parse("H 1\nH 2\nRX 1 oops\n")
    with pytest.raises(GateProgramError, match="line 1: bad qubit"):
        parse("CNOT one 2\n")
    with pytest.raises(GateProgramError, match="line 2: repeated"):
        parse("H 1\nRZZ 4 4 0.5\n")


def test_serialize_empty():
    assert serialize([]) == ""
    assert parse("") == []


# -- exported programs ----------------------------------------------------


def test_two_step_program_structure():
    p = TfimParams(n_init=4, m_init=2)
    text = two_step_program(p, 0.1)
    instrs = parse(text)
    # 5 init gates, then 2 steps of (2L RX + (L-1) RZZ) on L = 6
    assert len(instrs) == 5 + 2 * (12 + 5)
    assert sum(i.op == "CRY" for i in instrs) == 1
    assert sum(i.op == "RX" for i in instrs) == 24
    with pytest.raises(GateProgramError, match="4\\+2"):
        two_step_program(TfimParams(n_init=3, m_init=3), 0.1)


def test_evaporation_program_markers():
    p = TfimParams(n_init=4, m_init=2)
    sched = EvaporationSchedule(params=p, period=0.2, tau=0.1)
    text = evaporation_program(sched)
    assert "# interval 1: N = 4" in text
    assert "# evaporation event: boundary moves to N = 3" in text
    assert "# protocol complete: system exhausted" in text
    instrs = parse(text)
    # init + 4 intervals x 2 steps x (2L RX + (L-1) RZZ)
    assert len(instrs) == 5 + 4 * 2 * 17
    assert sum(i.op == "H" for i in instrs) == 2


def test_evaporation_program_uncompiled_sizes():
    p = TfimParams(n_init=2, m_init=2)
    sched = EvaporationSchedule(params=p, period=0.1, tau=0.1)
    text = evaporation_program(sched)
    assert "prepared externally" in text
    assert all(i.op in {"RX", "RZZ"} for i in parse(text))


# -- replay ---------------------------------------------------------------


def test_program_unitary_is_unitary():
    p = TfimParams(n_init=4, m_init=2)
    u = program_unitary(parse(two_step_program(p, 0.1)), 6)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(64), atol=1e-12)


def test_program_unitary_size_guard():
    with pytest.raises(ValueError, match="refusing"):
        program_unitary([], 11)


def test_statevector_matches_unitary():
    instrs = [
        Instruction("H", (1,)),
        Instruction("CRY", (1, 3), 0.8),
        Instruction("RZZ", (2, 3), -0.4),
    ]
    rng = np.random.default_rng(9)
    vec = rng.normal(size=8) + 1j * rng.normal(size=8)
    vec /= np.linalg.norm(vec)
    np.testing.assert_allclose(
        apply_program_statevector(vec, instrs),
        program_unitary(instrs, 3) @ vec,
        atol=1e-13,
    )


def test_mps_replay_matches_statevector():
    instrs = parse(two_step_program(TfimParams(n_init=4, m_init=2), 0.1))
    psi = MpsState.from_product([0] * 6)
    weight = apply_program_mps(psi, instrs, EXACT)
    assert weight == 0.0
    zero = np.zeros(64, dtype=complex)
    zero[0] = 1.0
    np.testing.assert_allclose(
        psi.to_statevector(), apply_program_statevector(zero, instrs), atol=1e-12
    )


def test_mps_replay_rejects_nonadjacent():
    psi = MpsState.from_product([0, 0, 0])
    with pytest.raises(GateProgramError, match="non-adjacent"):
        apply_program_mps(psi, [Instruction("CNOT", (1, 3))], EXACT)


# -- environment-pair preparation -----------------------------------------


def test_eta_critical_pair():
    # tan(eta/2) is the golden-ratio conjugate; the angle itself is atan(2)
    assert math.tan(ETA_CRITICAL_PAIR / 2.0) == pytest.approx(
        (math.sqrt(5.0) - 1.0) / 2.0, abs=1e-15
    )
    assert ETA_CRITICAL_PAIR == pytest.approx(math.atan(2.0), abs=1e-14)


def test_env_pair_fidelities_critical():
    fids = env_pair_fidelities(1.0, 1.0)
    assert set(fids) == {"cry-control-on-1", "ry-unconditional", "ry-double-angle"}
    assert fids["ry-unconditional"] == pytest.approx(1.0, abs=1e-12)
    assert fids["cry-control-on-1"] == pytest.approx(0.8562271036135151, abs=1e-12)
    assert fids["ry-double-angle"] == pytest.approx(0.723606797749979, abs=1e-12)


def test_env_pair_fidelity_against_direct_overlap():
    """Independent check of the winning reading: H then RY(eta) on the target
    then CNOT gives a(|00> + |11>) + b(|01> + |10>) with b/a = tan(eta/2)."""
    eta = ETA_CRITICAL_PAIR
    a = math.cos(eta / 2.0) / math.sqrt(2.0)
    b = math.sin(eta / 2.0) / math.sqrt(2.0)
    by_hand = np.array([a, b, b, a], dtype=complex)
    zero = np.zeros(4, dtype=complex)
    zero[0] = 1.0
    built = apply_program_statevector(
        zero,
        [
            Instruction("H", (1,)),
            Instruction("RY", (2,), eta),
            Instruction("CNOT", (1, 2)),
        ],
    )
    np.testing.assert_allclose(built, by_hand, atol=1e-14)
