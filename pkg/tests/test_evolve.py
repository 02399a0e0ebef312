"""Evaporation driver: stepping, protocol bookkeeping, sweeps."""

import math

import numpy as np
import pytest

from evapchain.evolve import (
    WEIGHT_BUDGET,
    RunConfig,
    config_for_axis,
    environment_ground,
    run_evaporation,
    step_interval,
    sweep_runner,
)
from evapchain.model import (
    EvaporationSchedule,
    GateLayers,
    TfimParams,
    hamiltonian_terms,
    trotter_layers,
)
from evapchain.mps import MpsState, inner
from evapchain.oracle import exact_propagate, protocol_replay
from evapchain.tensor import EXACT, TruncationPolicy

LN2 = math.log(2.0)


def make_config(
    n=3, m=3, tau=0.1, period=1.0, policy=EXACT, env="exact", state="zeta", **params
):
    p = TfimParams(n_init=n, m_init=m, **params)
    sched = EvaporationSchedule(params=p, period=period, tau=tau)
    return RunConfig(schedule=sched, policy=policy, initial_state=state, env_ground=env)


# -- environment preparation ----------------------------------------------


def test_env_single_site_dense():
    cfg = make_config(m=1, g_env=2.0)
    state, meta = environment_ground(cfg)
    assert meta["env_method"] == "dense-2x2"
    np.testing.assert_allclose(float(meta["env_energy"]), -2.0, atol=1e-12)
    # ground of -2X is |+> up to phase
    vec = state.to_statevector()
    np.testing.assert_allclose(abs(vec[0]), abs(vec[1]), atol=1e-12)


def test_env_exact_vs_dmrg():
    exact_state, _ = environment_ground(make_config(m=6, env="exact"))
    dmrg_state, meta = environment_ground(make_config(m=6, env="dmrg"))
    assert meta["env_method"] == "dmrg"
    overlap = abs(inner(exact_state, dmrg_state))
    np.testing.assert_allclose(overlap, 1.0, atol=1e-8)


def test_env_exact_size_guard():
    with pytest.raises(ValueError, match="capped"):
        environment_ground(make_config(m=13, env="exact"))


def test_env_unknown_method():
    with pytest.raises(ValueError, match="unknown environment"):
        environment_ground(make_config(env="guess"))


# -- stepping -------------------------------------------------------------


def test_step_identity_gates():
    eye2 = np.eye(2, dtype=complex)
    eye4 = np.eye(4, dtype=complex).reshape(2, 2, 2, 2)
    gates = GateLayers(
        half_x=((0, eye2), (1, eye2)),
        odd_zz=((0, eye4),),
        even_zz=(),
    )
    psi = MpsState.from_product([0, 1])
    before = psi.to_statevector()
    weight, norm = step_interval(psi, gates, 3, EXACT)
    assert weight == 0.0
    np.testing.assert_allclose(norm, 1.0, atol=1e-12)
    np.testing.assert_allclose(psi.to_statevector(), before, atol=1e-12)


def test_step_count_validated():
    p = TfimParams(n_init=2, m_init=2)
    gates = trotter_layers(p, 2, 0.1)
    with pytest.raises(ValueError, match="at least one step"):
        step_interval(MpsState.from_product([0] * 4), gates, 0, EXACT)


def test_step_reversibility():
    """A forward step then a backward step (negative tau) cancels at zero
    cutoff."""
    p = TfimParams(n_init=2, m_init=2)
    rng = np.random.default_rng(50)
    vec = rng.normal(size=16) + 1j * rng.normal(size=16)
    vec /= np.linalg.norm(vec)
    psi = MpsState.from_statevector(vec)
    step_interval(psi, trotter_layers(p, 2, 0.1), 1, EXACT)
    step_interval(psi, trotter_layers(p, 2, -0.1), 1, EXACT)
    np.testing.assert_allclose(psi.to_statevector(), vec, atol=1e-8)


def test_step_fidelity_vs_exact_propagation():
    """Trotterized evolution tracks exp(-iHt) within the second-order budget."""
    p = TfimParams(n_init=3, m_init=3, j_sys=1.0, g_sys=1.0, h=1.0)
    tau, steps = 0.1, 10
    psi = MpsState.from_product([0, 1, 0, 1, 0, 1])
    vec = psi.to_statevector()
    step_interval(psi, trotter_layers(p, 3, tau), steps, EXACT)
    ref = exact_propagate(vec, hamiltonian_terms(p, 3), tau * steps)
    fidelity = abs(np.vdot(ref, psi.to_statevector())) ** 2
    assert fidelity >= 1.0 - 10.0 * steps * tau**3


# -- full protocol --------------------------------------------------------


def test_frozen_chain_stays_unentangled():
    """All couplings zero on a product state: every row reads exactly zero."""
    cfg = make_config(
        n=4, m=2, state="xi",
        j_sys=0.0, g_sys=0.0, j_env=0.0, g_env=0.0, h=0.0,
    )
    trace = run_evaporation(cfg)
    assert [r.entropy for r in trace.rows] == [0.0] * 4
    assert [r.discarded_weight for r in trace.rows] == [0.0] * 4


def test_frozen_chain_cut_placement():
    """With gates frozen, the recorded entropy is purely a function of where
    the moving cut sits relative to the GHZ pair of the initial block."""
    cfg = make_config(
        n=4, m=2,
        j_sys=0.0, g_sys=0.0, j_env=0.0, g_env=0.0, h=0.0,
    )
    trace = run_evaporation(cfg)
    # GHZ pair occupies sites 2 and 3; only the cut between them sees it
    np.testing.assert_allclose(
        [r.entropy for r in trace.rows], [0.0, LN2, 0.0, 0.0], atol=1e-12
    )


def test_trace_bookkeeping():
    cfg = make_config(n=4, m=2, period=0.5)
    trace = run_evaporation(cfg)
    assert [r.t for r in trace.rows] == [0.5, 1.0, 1.5, 2.0]
    assert [r.n_sys for r in trace.rows] == [4, 3, 2, 1]
    assert [r.m_env for r in trace.rows] == [2, 3, 4, 5]
    assert trace.metadata["method"] == "tebd"
    assert trace.metadata["initial_state"] == "zeta"
    assert trace.metadata["env_method"] == "exact"
    assert trace.metadata["low_confidence"] == "False"
    weights = [r.discarded_weight for r in trace.rows]
    assert weights == sorted(weights)  # cumulative, non-decreasing


def test_trace_matches_oracle_protocol():
    """Same protocol, same order, two independent engines.

    The tolerance is the Trotter budget; the replay propagates exactly."""
    cfg = make_config(n=3, m=3, tau=0.01, period=1.0)
    with pytest.warns(UserWarning, match="degenerates"):
        ours = run_evaporation(cfg)
        ref = protocol_replay(cfg)
    for a, b in zip(ours.rows, ref.rows):
        assert a.n_sys == b.n_sys
        np.testing.assert_allclose(a.entropy, b.entropy, atol=5e-3)


def test_norm_band():
    """Pre-renormalization norm stays within the cumulative-weight band."""
    cfg = make_config(
        n=4, m=4, tau=0.1, period=1.0,
        policy=TruncationPolicy(max_bond=8, cutoff=1e-6), env="exact",
    )
    trace = run_evaporation(cfg)
    for row in trace.rows:
        assert 1.0 - row.discarded_weight - 1e-9 <= row.norm <= 1.0 + 1e-9


def test_low_confidence_flag():
    """A bond cap of 2 on an entangling run must blow the weight budget."""
    cfg = make_config(
        n=4, m=4, tau=0.1, period=2.0,
        policy=TruncationPolicy(max_bond=2, cutoff=1e-16), env="exact",
    )
    trace = run_evaporation(cfg)
    assert trace.rows[-1].discarded_weight > WEIGHT_BUDGET
    assert trace.metadata["low_confidence"] == "True"


def test_custom_initial_block():
    block = MpsState.from_product([0, 1, 0])
    trace = run_evaporation(make_config(n=3, m=3, state=block))
    assert trace.metadata["initial_state"] == "custom"
    assert len(trace.rows) == 3


# -- sweeps ---------------------------------------------------------------


def test_config_for_axis():
    cfg = make_config()
    assert config_for_axis(cfg, "h", 0.0).params.h == 0.0
    assert config_for_axis(cfg, "n_init", 5).params.n_init == 5
    assert config_for_axis(cfg, "tau", 0.2).schedule.tau == 0.2
    swapped = config_for_axis(cfg, "regimes", (10, 3, 1, 1))
    assert swapped.params.j_sys == 10.0
    assert swapped.params.g_env == 1.0
    with pytest.raises(ValueError, match="axis"):
        config_for_axis(cfg, "chi", 1)


def test_sweep_runner_serial():
    with pytest.warns(UserWarning, match="degenerates"):
        results = sweep_runner(make_config(period=0.5), "h", [0.0, 3.0])
    assert [r.value for r in results] == [0.0, 3.0]
    assert all(r.error is None for r in results)
    assert all(len(r.trace.rows) == 3 for r in results)


def test_sweep_runner_isolates_failures():
    bad = make_config(period=0.5, state="bogus")
    results = sweep_runner(bad, "h", [3.0])
    assert results[0].trace is None
    assert "bogus" in results[0].error
