"""Named experiment presets, one per figure of the study.

Each preset expands an ``ExperimentConfig`` into concrete runs.  Trace
presets produce one CSV per run plus a combined figure; the convergence
preset produces the bond-dimension scan; the circuit preset emits a gate
program with a preparation-fidelity report.

Off-critical coupling magnitudes follow the strong-bond operating point
(J = 10 against g = 3 for J/g > 1, mirrored for J/g < 1; the environment
uses 3 against 1 around its critical point 1:1).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .config import ExperimentConfig
from .evolve import RunConfig, config_for_axis

# Canonical preset names; the slashed alias is accepted on the command line
# but never used for file names.
PRESET_NAMES = (
    "fig3-page-curve",
    "fig4-h-sweep",
    "fig5-criticality",
    "fig7-8-xi-state",
    "fig9-dmrg-convergence",
    "fig10-tau-sweep",
    "circuit-l6",
)
PRESET_ALIASES = {"fig7/8-xi-state": "fig7-8-xi-state"}

FIG3_PAPER_SIZES = (9, 12, 15)
FIG4_H_VALUES = (0.0, 1.0, 3.0)
FIG10_TAU_VALUES = (0.1, 0.5)

# (label, J, g) per regime, system scale and environment scale.
SYS_REGIMES = (
    ("sys-critical", 3.0, 3.0),
    ("sys-Jdom", 10.0, 3.0),
    ("sys-gdom", 3.0, 10.0),
)
ENV_REGIMES = (
    ("env-critical", 1.0, 1.0),
    ("env-Jdom", 3.0, 1.0),
    ("env-gdom", 1.0, 3.0),
)

# Desk-scale chi grid brackets the convergence point seen near chi = 45.
FIG9_CHI_DESK = (2, 4, 8, 16, 32, 45, 64, 100)
FIG9_CHI_PAPER = (4, 8, 16, 32, 45, 64, 100)
FIG9_DESK_M = 20


@dataclass
class PlannedRun:
    name: str  # file stem, unique within the preset
    label: str  # figure legend entry
    config: RunConfig


@dataclass
class PresetPlan:
    preset: str
    kind: str  # "traces" | "convergence" | "circuit"
    runs: list[PlannedRun]
    figure_title: str = ""


def canonical_preset(name: str) -> str:
    name = PRESET_ALIASES.get(name, name)
    if name not in PRESET_NAMES:
        known = ", ".join(PRESET_NAMES)
        raise ValueError(f"unknown preset {name!r}; expected one of: {known}")
    return name


def build_plan(
    preset: str, cfg: ExperimentConfig, scale: str, h_override: float | None = None
) -> PresetPlan:
    """Expand a preset into runs at the given scale.

    ``h_override`` narrows the h sweep to a single value; other presets
    simply inherit it through ``cfg``.
    """
    preset = canonical_preset(preset)
    base = cfg.run_config()

    if preset == "fig3-page-curve":
        if scale == "paper":
            runs = [
                PlannedRun(
                    name=f"page-curve-n{n}",
                    label=f"N = {n}",
                    config=config_for_axis(base, "n_init", n),
                )
                for n in FIG3_PAPER_SIZES
            ]
        else:
            runs = [PlannedRun("page-curve", f"N = {cfg.n_init}", base)]
        return PresetPlan(preset, "traces", runs, "Boundary entropy during evaporation")

    if preset == "fig4-h-sweep":
        values = FIG4_H_VALUES if h_override is None else (float(h_override),)
        runs = [
            PlannedRun(
                name=f"h-{_num(v)}",
                label=f"h = {_num(v)}",
                config=config_for_axis(base, "h", v),
            )
            for v in values
        ]
        return PresetPlan(preset, "traces", runs, "Boundary coupling sweep")

    if preset == "fig5-criticality":
        runs = []
        for sys_label, j_s, g_s in SYS_REGIMES:
            for env_label, j_e, g_e in ENV_REGIMES:
                runs.append(
                    PlannedRun(
                        name=f"{sys_label}-{env_label}",
                        label=f"{sys_label}/{env_label}",
                        config=config_for_axis(
                            base, "regimes", (j_s, g_s, j_e, g_e)
                        ),
                    )
                )
        return PresetPlan(preset, "traces", runs, "Criticality regimes")

    if preset == "fig7-8-xi-state":
        runs = [
            PlannedRun("zeta", "zeta start", replace(base, initial_state="zeta")),
            PlannedRun("xi", "xi start", replace(base, initial_state="xi")),
        ]
        return PresetPlan(preset, "traces", runs, "Initial-state comparison")

    if preset == "fig10-tau-sweep":
        runs = [
            PlannedRun(
                name=f"tau-{_num(v)}",
                label=f"tau = {_num(v)}",
                config=config_for_axis(base, "tau", v),
            )
            for v in FIG10_TAU_VALUES
        ]
        return PresetPlan(preset, "traces", runs, "Trotter step comparison")

    if preset == "fig9-dmrg-convergence":
        # runs are expanded by the executor from the chi grid; store the base
        return PresetPlan(preset, "convergence", [PlannedRun("scan", "scan", base)])

    if preset == "circuit-l6":
        return PresetPlan(preset, "circuit", [])

    raise AssertionError(preset)


def fig9_grid(scale: str) -> tuple[int, tuple[int, ...]]:
    """Environment size and chi grid for the convergence preset."""
    if scale == "paper":
        return 150, FIG9_CHI_PAPER
    return FIG9_DESK_M, FIG9_CHI_DESK


def _num(v: float) -> str:
    """Compact numeric tag for file names: 0.1 -> '0.1', 3.0 -> '3'."""
    f = float(v)
    return str(int(f)) if f == int(f) else str(f)
