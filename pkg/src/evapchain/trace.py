"""Entropy trace records and their delimited serialization.

One row per evaporation event, recorded just before the boundary moves, so
the row at t = n*period carries the pre-move partition sizes.  There is no
row at t = 0: the initial boundary entropy is exactly zero by construction,
which is noted in the run manifest instead.  Floats are written with
``repr`` so the text round-trips bit-exactly and identical runs produce
byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TRACE_HEADER = "t,N,M,S_env,norm,discarded_weight"

# Slack for the S <= N ln 2 bound and friends; covers float noise only.
_TOL = 1e-9


@dataclass(frozen=True)
class TraceRow:
    t: float
    n_sys: int
    m_env: int
    entropy: float
    norm: float
    discarded_weight: float


@dataclass
class EntropyTrace:
    """Ordered event rows plus free-form provenance metadata.

    Metadata goes to the run manifest, never into the CSV, so the delimited
    output stays schema-stable.
    """

    rows: list[TraceRow] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    def entropies(self) -> np.ndarray:
        return np.array([r.entropy for r in self.rows])

    def peak_index(self) -> int:
        """0-based index of the first maximal entropy row."""
        if not self.rows:
            raise ValueError("empty trace has no peak")
        return int(np.argmax(self.entropies()))

    def validate(self) -> None:
        prev_t = -math.inf
        for i, r in enumerate(self.rows):
            if not r.t > prev_t:
                raise ValueError(f"row {i}: times must increase, got {r.t}")
            prev_t = r.t
            if r.n_sys < 1 or r.m_env < 1:
                raise ValueError(f"row {i}: partition sizes must be positive")
            if not 0.0 - _TOL <= r.entropy <= r.n_sys * math.log(2.0) + _TOL:
                raise ValueError(
                    f"row {i}: entropy {r.entropy} outside [0, N ln 2] "
                    f"for N = {r.n_sys}"
                )
            if r.discarded_weight < -_TOL:
                raise ValueError(f"row {i}: negative discarded weight")
            if not math.isfinite(r.norm) or r.norm <= 0.0:
                raise ValueError(f"row {i}: bad norm {r.norm}")

    def to_csv_text(self) -> str:
        self.validate()
        lines = [TRACE_HEADER]
        for r in self.rows:
            lines.append(
                ",".join(
                    (
                        repr(float(r.t)),
                        str(int(r.n_sys)),
                        str(int(r.m_env)),
                        repr(float(r.entropy)),
                        repr(float(r.norm)),
                        repr(float(r.discarded_weight)),
                    )
                )
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())


def read_trace_csv(path) -> EntropyTrace:
    """Parse a trace CSV written by ``write_csv``."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError(f"{path}: missing trace header {TRACE_HEADER!r}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 6:
            raise ValueError(f"{path}: malformed row {ln!r}")
        rows.append(
            TraceRow(
                t=float(parts[0]),
                n_sys=int(parts[1]),
                m_env=int(parts[2]),
                entropy=float(parts[3]),
                norm=float(parts[4]),
                discarded_weight=float(parts[5]),
            )
        )
    return EntropyTrace(rows=rows)


CONVERGENCE_HEADER = "chi,energy,abs_error"


def write_convergence_csv(rows, path) -> None:
    """Write (chi, energy, abs_error) rows from a bond-dimension scan."""
    lines = [CONVERGENCE_HEADER]
    for chi, energy, err in rows:
        lines.append(f"{int(chi)},{repr(float(energy))},{repr(float(err))}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
