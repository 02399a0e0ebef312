"""Experiment configuration: defaults, flat key-value files, manifests.

A config file is plain text, one ``key = value`` per line, ``#`` comments.
Keys match the attribute names below; anything else is rejected by name so
typos fail loudly.  Command-line flags override file values, which override
the built-in defaults.  The desk scale shrinks the chain (8+24 instead of
15+150) while keeping every coupling, so runs finish in minutes instead of
hours.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np
import scipy

from . import __version__
from .dmrg import DmrgConfig
from .evolve import RunConfig
from .model import EvaporationSchedule, TfimParams
from .tensor import TruncationPolicy

DESK_SIZES = (8, 24)
PAPER_SIZES = (15, 150)

# Refuse runs whose state storage alone would be absurd; this guards
# against typo'd configs, not legitimate heavy runs.
MEMORY_BUDGET_BYTES = 8 * 1024**3


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat, file-representable experiment settings."""

    j_sys: float = 3.0
    g_sys: float = 3.0
    j_env: float = 1.0
    g_env: float = 1.0
    h: float = 3.0
    n_init: int = 15
    m_init: int = 150
    period: float = 5.0
    tau: float = 0.1
    max_bond: int = 100
    cutoff: float = 1e-5
    dmrg_sweeps: int = 10
    dmrg_max_bond: int = 100
    dmrg_cutoff: float = 1e-10
    initial_state: str = "zeta"
    env_ground: str = "dmrg"
    seed: int = 0

    def at_scale(self, scale: str) -> "ExperimentConfig":
        """Apply a named size scale; couplings and schedule are untouched."""
        if scale == "paper":
            n, m = PAPER_SIZES
        elif scale == "desk":
            n, m = DESK_SIZES
        else:
            raise ValueError(f"unknown scale {scale!r}; expected desk or paper")
        return replace(self, n_init=n, m_init=m)

    def params(self) -> TfimParams:
        return TfimParams(
            j_sys=self.j_sys,
            g_sys=self.g_sys,
            j_env=self.j_env,
            g_env=self.g_env,
            h=self.h,
            n_init=self.n_init,
            m_init=self.m_init,
        )

    def run_config(self) -> RunConfig:
        return RunConfig(
            schedule=EvaporationSchedule(
                params=self.params(), period=self.period, tau=self.tau
            ),
            policy=TruncationPolicy(max_bond=self.max_bond, cutoff=self.cutoff),
            initial_state=self.initial_state,
            env_ground=self.env_ground,
            dmrg=DmrgConfig(
                sweeps=self.dmrg_sweeps,
                max_bond=self.dmrg_max_bond,
                cutoff=self.dmrg_cutoff,
                seed=self.seed,
            ),
        )

    def estimated_bytes(self) -> int:
        """Worst-case MPS storage at the configured bond cap."""
        length = self.n_init + self.m_init
        return length * self.max_bond**2 * 2 * 16

    def check_memory(self) -> None:
        need = self.estimated_bytes()
        if need > MEMORY_BUDGET_BYTES:
            raise SystemExit(
                f"refusing run: worst-case state storage ~{need / 1024**3:.1f} GiB "
                f"(L = {self.n_init + self.m_init}, max_bond = {self.max_bond}) "
                f"exceeds the {MEMORY_BUDGET_BYTES / 1024**3:.0f} GiB budget; "
                "lower max_bond or the chain size"
            )

    def manifest_text(self, extra: dict[str, str] | None = None) -> str:
        """Deterministic key = value dump for the run manifest."""
        lines = [
            f"package_version = {__version__}",
            f"numpy_version = {np.__version__}",
            f"scipy_version = {scipy.__version__}",
        ]
        for f in fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)!r}")
        for key in sorted(extra or {}):
            lines.append(f"{key} = {extra[key]}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ValueError(f"bad value for {key}: {raw!r}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse flat key-value text into typed overrides; unknown keys fail."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(
                f"{source}:{lineno}: unknown key {key!r}; "
                f"known keys: {', '.join(sorted(_FIELD_TYPES))}"
            )
        if key in out:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def build_config(
    file_overrides: dict | None = None,
    scale: str | None = None,
    cli_overrides: dict | None = None,
) -> ExperimentConfig:
    """Defaults, then file values, then scale, then explicit flags.

    Explicit n_init/m_init (from the file or flags) win over the scale
    switch, so a file can pin sizes while still being run with --scale.
    """
    cfg = ExperimentConfig()
    file_overrides = dict(file_overrides or {})
    cli_overrides = {k: v for k, v in (cli_overrides or {}).items() if v is not None}
    cfg = replace(cfg, **file_overrides)
    if scale is not None:
        cfg = cfg.at_scale(scale)
        for key in ("n_init", "m_init"):
            if key in file_overrides:
                cfg = replace(cfg, **{key: file_overrides[key]})
    cfg = replace(cfg, **cli_overrides)
    return cfg
