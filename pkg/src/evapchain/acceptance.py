"""End-to-end verification suite.

Each check is a small function that exercises one documented property of
the package (oracle agreement, trace shape, solver accuracy, ...) and
returns a CheckResult.  ``run_suite`` drives them in order and prints one
pass/fail line per check; ``evapchain verify`` and the acceptance test
module are thin wrappers around it.

Expensive desk-scale traces are shared between checks through SuiteContext,
so the whole suite stays in the minutes range.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import (
    ETA_CRITICAL_PAIR,
    apply_program_mps,
    apply_program_statevector,
    env_pair_fidelities,
    parse,
    serialize,
    two_step_program,
)
from .config import ExperimentConfig
from .dmrg import DmrgConfig, convergence_scan, ground_state
from .evolve import RunConfig, config_for_axis, run_evaporation
from .model import (
    EvaporationSchedule,
    TfimParams,
    build_env_mpo,
    environment_terms,
    hamiltonian_terms,
    trotter_layers,
)
from .mps import MpsState
from .oracle import (
    dense_propagator,
    exact_entropy,
    exact_ground,
    protocol_replay,
)
from .tensor import EXACT, TruncationPolicy
from .trace import EntropyTrace

LN2 = math.log(2.0)


@dataclass
class CheckResult:
    check_id: str
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass
class SuiteContext:
    """Caches the desk-scale traces that several checks share."""

    desk: ExperimentConfig = field(
        default_factory=lambda: ExperimentConfig().at_scale("desk")
    )
    _traces: dict[str, EntropyTrace] = field(default_factory=dict)

    def desk_trace(self, variant: str) -> EntropyTrace:
        if variant not in self._traces:
            base = self.desk.run_config()
            if variant == "standard":
                cfg = base
            elif variant == "h0":
                cfg = config_for_axis(base, "h", 0.0)
            elif variant == "off-critical":
                cfg = config_for_axis(base, "regimes", (10.0, 3.0, 1.0, 1.0))
            elif variant == "xi":
                cfg = replace(base, initial_state="xi")
            elif variant == "tau-large":
                cfg = config_for_axis(base, "tau", 0.5)
            else:
                raise ValueError(f"unknown desk variant {variant!r}")
            self._traces[variant] = run_evaporation(cfg)
        return self._traces[variant]


# -- shared shape battery ------------------------------------------------


def _shape_report(trace: EntropyTrace, n_init: int) -> tuple[bool, str]:
    """The rise-and-fall battery: unique peak near mid-protocol, low
    endpoints, dimension bound.  Returns (all passed, compact report)."""
    s = trace.entropies()
    peak = int(np.argmax(s))
    others = np.delete(s, peak)
    half = s[peak] / 2.0
    event = peak + 1  # events are 1-based: row n is the event at t = n*T
    failures = []
    if others.size and s[peak] <= others.max():
        failures.append("peak not unique")
    if abs(event - n_init / 2.0) > 2.0:
        failures.append(f"peak event {event} not within 2 of {n_init / 2:.0f}")
    if not s[0] < half:
        failures.append(f"first point {s[0]:.3f} >= peak/2 = {half:.3f}")
    if not s[-1] < half:
        failures.append(f"last point {s[-1]:.3f} >= peak/2 = {half:.3f}")
    for row in trace.rows:
        if row.entropy > row.n_sys * LN2 + 1e-9:
            failures.append(
                f"S = {row.entropy:.3f} above N ln2 = {row.n_sys * LN2:.3f} at t = {row.t}"
            )
            break
    summary = (
        f"peak {s[peak]:.3f} at event {event}, "
        f"first {s[0]:.3f}, last {s[-1]:.3f}"
    )
    if failures:
        return False, summary + "; " + "; ".join(failures)
    return True, summary


# -- checks --------------------------------------------------------------


def check_tebd_oracle(ctx: SuiteContext) -> CheckResult:
    """Full protocol on 3+3 sites at small step: truncation-free TEBD trace
    must match the exact statevector replay pointwise within 2e-3."""
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="GHZ block of a single site")
        params = TfimParams(n_init=3, m_init=3)
        sched = EvaporationSchedule(params=params, period=5.0, tau=0.01)
        cfg = RunConfig(
            schedule=sched,
            policy=TruncationPolicy(max_bond=64, cutoff=0.0),
            env_ground="exact",
        )
        ours = run_evaporation(cfg)
        reference = protocol_replay(cfg)
    diffs = [
        abs(a.entropy - b.entropy) for a, b in zip(ours.rows, reference.rows)
    ]
    worst = max(diffs)
    ok = len(ours.rows) == len(reference.rows) == 3 and worst < 2e-3
    return CheckResult(
        "tebd-oracle",
        "TEBD trace vs statevector replay",
        ok,
        f"max |dS| = {worst:.2e} over {len(diffs)} events (tolerance 2e-3)",
    )


def check_entropy_identity(ctx: SuiteContext) -> CheckResult:
    """For pure states the two sides of any cut carry the same entropy, and
    the MPS bond entropy must reproduce the dense value at zero cutoff."""
    rng = np.random.default_rng(7)
    length = 8
    worst_sides = 0.0
    worst_mps = 0.0
    for _ in range(50):
        vec = rng.normal(size=2**length) + 1j * rng.normal(size=2**length)
        vec /= np.linalg.norm(vec)
        psi = MpsState.from_statevector(vec)
        for cut in range(1, length):
            left = exact_entropy(vec, cut)
            mat = vec.reshape(2**cut, -1)
            rho_right = mat.conj().T @ mat
            lam = np.linalg.eigvalsh(rho_right)
            lam = lam[lam > 1e-16]
            right = float(-np.sum(lam * np.log(lam)))
            worst_sides = max(worst_sides, abs(left - right))
            worst_mps = max(worst_mps, abs(psi.entropy_at(cut - 1) - left))
    ok = worst_sides < 1e-10 and worst_mps < 1e-8
    return CheckResult(
        "entropy-identity",
        "complementary-cut and MPS bond entropies",
        ok,
        f"max side mismatch {worst_sides:.1e} (tol 1e-10), "
        f"max MPS mismatch {worst_mps:.1e} (tol 1e-8), 50 states x 7 cuts",
    )


def check_page_shape(ctx: SuiteContext) -> CheckResult:
    """Desk-scale standard run shows the rise-and-fall profile."""
    trace = ctx.desk_trace("standard")
    ok, detail = _shape_report(trace, ctx.desk.n_init)
    return CheckResult("page-shape", "desk-scale entropy profile", ok, detail)


def check_kinematic_h0(ctx: SuiteContext) -> CheckResult:
    """With the boundary coupling off, the profile must survive on boundary
    relabeling alone."""
    trace = ctx.desk_trace("h0")
    ok, detail = _shape_report(trace, ctx.desk.n_init)
    return CheckResult("kinematic-h0", "profile at zero boundary coupling", ok, detail)


def check_criticality(ctx: SuiteContext) -> CheckResult:
    """Detuning the system couplings away from J = g must strictly lower
    the entropy peak relative to the critical run."""
    crit = ctx.desk_trace("standard").entropies().max()
    off = ctx.desk_trace("off-critical").entropies().max()
    ok = off < crit
    return CheckResult(
        "criticality-suppression",
        "off-critical peak below critical peak",
        ok,
        f"critical peak {crit:.3f}, off-critical peak {off:.3f}",
    )


def check_initial_states(ctx: SuiteContext) -> CheckResult:
    """Both prepared initial states give the same qualitative profile."""
    zeta = ctx.desk_trace("standard")
    xi = ctx.desk_trace("xi")
    ok_z, det_z = _shape_report(zeta, ctx.desk.n_init)
    ok_x, det_x = _shape_report(xi, ctx.desk.n_init)
    gap = abs(zeta.peak_index() - xi.peak_index())
    ok = ok_z and ok_x and gap <= 2
    return CheckResult(
        "initial-state-robustness",
        "entangled vs aligned initial state",
        ok,
        f"zeta [{det_z}] / xi [{det_x}] / peak gap {gap} events (allow 2)",
    )


def check_dmrg(ctx: SuiteContext) -> CheckResult:
    """Ground-state solver against closed-form and dense references, plus
    bond-cap convergence on a 20-site chain."""
    env2 = TfimParams(n_init=2, m_init=2)
    _, report2 = ground_state(build_env_mpo(env2, 2), 2, DmrgConfig(max_bond=8))
    err2 = abs(report2.energy - (-math.sqrt(5.0)))

    env10 = TfimParams(n_init=2, m_init=10)
    _, report10 = ground_state(build_env_mpo(env10, 2), 10, DmrgConfig())
    _, e_dense = exact_ground(environment_terms(env10, 10))
    err10 = abs(report10.energy - e_dense)

    env20 = TfimParams(n_init=2, m_init=20)
    rows = convergence_scan(build_env_mpo(env20, 2), 20, [45, 100], DmrgConfig())
    err_scan = rows[0][2]

    ok = err2 < 1e-10 and err10 < 1e-8 and err_scan <= 1e-10
    return CheckResult(
        "dmrg-ground",
        "ground-state energies and cap convergence",
        ok,
        f"2-site vs -sqrt(5): {err2:.1e} (tol 1e-10); "
        f"10-site vs dense: {err10:.1e} (tol 1e-8); "
        f"20-site |E(45)-E(100)| = {err_scan:.1e} (tol 1e-10)",
    )


def _dense_embed(gate: np.ndarray, pos: int, length: int) -> np.ndarray:
    mat = gate if gate.ndim == 2 else gate.reshape(4, 4)
    span = 1 if gate.ndim == 2 else 2
    return np.kron(
        np.kron(np.eye(2**pos), mat), np.eye(2 ** (length - pos - span))
    )


def _dense_step(params: TfimParams, n_sys: int, tau: float) -> np.ndarray:
    length = params.length
    u = np.eye(2**length, dtype=complex)
    for layer in trotter_layers(params, n_sys, tau).application_order():
        for pos, gate in layer:
            u = _dense_embed(gate, pos, length) @ u
    return u


def check_trotter_order(ctx: SuiteContext) -> CheckResult:
    """Halving the step must cut the one-step operator error by about 8,
    the signature of a second-order splitting."""
    params = TfimParams(n_init=3, m_init=3)
    ham = hamiltonian_terms(params, 3)
    dists = []
    for tau in (0.1, 0.05):
        exact = dense_propagator(ham, tau)
        step = _dense_step(params, 3, tau)
        dists.append(np.linalg.norm(step - exact, 2))
    ratio = dists[0] / dists[1]
    ok = 6.0 <= ratio <= 10.0
    return CheckResult(
        "trotter-order",
        "error ratio under step halving",
        ok,
        f"d(0.1) = {dists[0]:.2e}, d(0.05) = {dists[1]:.2e}, "
        f"ratio {ratio:.2f} (want 8 +/- 2)",
    )


def check_tau_window(ctx: SuiteContext) -> CheckResult:
    """A five-fold coarser step may move the peak by at most one event."""
    fine = ctx.desk_trace("standard")
    coarse = ctx.desk_trace("tau-large")
    gap = abs(fine.peak_index() - coarse.peak_index())
    ok = gap <= 1
    return CheckResult(
        "tau-window",
        "peak stability under coarse stepping",
        ok,
        f"peak events {fine.peak_index() + 1} (tau 0.1) vs "
        f"{coarse.peak_index() + 1} (tau 0.5), gap {gap} (allow 1)",
    )


def check_circuit_roundtrip(ctx: SuiteContext) -> CheckResult:
    """Serialized two-step program survives a parse round-trip and replays
    identically on dense and MPS simulators; the compiled environment pair
    preparation is scored against the exact two-site ground state."""
    params = TfimParams(n_init=4, m_init=2)
    text = two_step_program(params, 0.1)
    prog = parse(text)
    round_ok = parse(serialize(prog)) == prog and serialize(prog) == serialize(
        parse(serialize(prog))
    )

    start = np.zeros(2**6, dtype=complex)
    start[0] = 1.0
    dense_vec = apply_program_statevector(start, prog)
    mps = MpsState.from_product([0] * 6)
    apply_program_mps(mps, prog, EXACT)
    fidelity = abs(np.vdot(dense_vec, mps.to_statevector())) ** 2
    replay_ok = fidelity >= 1.0 - 1e-8

    fids = env_pair_fidelities(1.0, 1.0, ETA_CRITICAL_PAIR)
    best = max(fids, key=fids.get)
    fid_note = ", ".join(f"{k} {v:.6f}" for k, v in sorted(fids.items()))
    ok = round_ok and replay_ok
    return CheckResult(
        "circuit-roundtrip",
        "program round-trip and replay fidelity",
        ok,
        f"round-trip {'exact' if round_ok else 'BROKEN'}, "
        f"dense-vs-MPS fidelity 1 - {1.0 - fidelity:.1e}; "
        f"env-pair preparation vs ground [{fid_note}] (best: {best})",
    )


def check_determinism(ctx: SuiteContext) -> CheckResult:
    """Same config, same seed: the emitted CSV artifacts must be
    byte-identical across runs."""
    import tempfile
    from pathlib import Path

    from . import cli

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        cfg_path = root / "small.cfg"
        cfg_path.write_text(
            "n_init = 4\nm_init = 8\nmax_bond = 64\n", encoding="utf-8"
        )
        outputs = []
        for run_dir in ("a", "b"):
            out = root / run_dir
            code = cli.main(
                ["run", str(cfg_path), "--out", str(out), "--seed", "3"]
            )
            if code != 0:
                return CheckResult(
                    "determinism",
                    "byte-identical repeat runs",
                    False,
                    f"run exited with {code}",
                )
            artifacts = sorted(
                p for p in out.iterdir() if p.suffix in (".csv", ".txt")
            )
            outputs.append({p.name: p.read_bytes() for p in artifacts})
    same = outputs[0] == outputs[1]
    names = ", ".join(sorted(outputs[0]))
    return CheckResult(
        "determinism",
        "byte-identical repeat runs",
        same,
        f"compared [{names}] across two runs: "
        + ("identical" if same else "DIFFER"),
    )


CHECKS = (
    ("tebd-oracle", check_tebd_oracle),
    ("entropy-identity", check_entropy_identity),
    ("page-shape", check_page_shape),
    ("kinematic-h0", check_kinematic_h0),
    ("criticality-suppression", check_criticality),
    ("initial-state-robustness", check_initial_states),
    ("dmrg-ground", check_dmrg),
    ("trotter-order", check_trotter_order),
    ("tau-window", check_tau_window),
    ("circuit-roundtrip", check_circuit_roundtrip),
    ("determinism", check_determinism),
)


def run_check(fn, ctx: SuiteContext) -> CheckResult:
    begin = time.perf_counter()
    result = fn(ctx)
    result.seconds = time.perf_counter() - begin
    return result


def run_suite(only: str | None = None, emit=print) -> list[CheckResult]:
    """Run every check (or those whose id contains ``only``); one line each."""
    ctx = SuiteContext()
    results = []
    for check_id, fn in CHECKS:
        if only and only not in check_id:
            continue
        result = run_check(fn, ctx)
        results.append(result)
        status = "PASS" if result.passed else "FAIL"
        emit(
            f"{status}  {result.check_id:<26} {result.seconds:7.1f}s  {result.detail}"
        )
    if not results:
        emit(f"no check id contains {only!r}")
    return results
