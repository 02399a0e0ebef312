"""Command-line front end: experiment runner, verifier, circuit export.

`run` expands a named preset (or a flat config file) into one or more
evaporation simulations, writes one CSV per run plus a rendered figure and
a resolved-parameter manifest.  `verify` executes the built-in check suite.
`export-circuit` compiles the 4+2-site protocol to gate-program text.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import (
    DESK_SIZES,
    ExperimentConfig,
    build_config,
    load_config_file,
    parse_config_text,
)
from .dmrg import DmrgConfig, convergence_scan
from .evolve import run_evaporation
from .model import EvaporationSchedule, TfimParams, build_env_mpo
from .presets import PRESET_NAMES, PlannedRun, build_plan, canonical_preset, fig9_grid
from .report import save_convergence_figure, save_trace_figure
from .trace import write_convergence_csv


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="evapchain",
        description="entropy traces for an evaporating two-part spin chain",
    )
    sub = top.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a preset or a config file")
    run.add_argument(
        "target",
        nargs="?",
        default="fig3-page-curve",
        help=f"preset ({', '.join(PRESET_NAMES)}) or path to a config file",
    )
    run.add_argument("--config", help="config file merged under the preset")
    run.add_argument("--scale", choices=("desk", "paper"), default=None)
    run.add_argument("--out", default="runs", help="output directory")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--h", type=float, default=None, help="boundary coupling")
    run.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )

    verify = sub.add_parser("verify", help="run the verification suite")
    verify.add_argument(
        "--only", default=None, help="run only checks whose id contains this"
    )

    export = sub.add_parser(
        "export-circuit", help="write the 4+2-site protocol as a gate program"
    )
    export.add_argument("--config", help="config file for couplings and step size")
    export.add_argument("--scale", choices=("desk", "paper"), default=None)
    export.add_argument("--out", default="runs", help="output directory")
    export.add_argument("--seed", type=int, default=None)
    return top


# -- run -----------------------------------------------------------------


def _cli_overrides(args) -> dict:
    merged: dict = {}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--set needs KEY=VALUE, got {item!r}")
        merged.update(parse_config_text(f"{key.strip()} = {value.strip()}"))
    if args.h is not None:
        merged["h"] = args.h
    if args.seed is not None:
        merged["seed"] = args.seed
    return merged


def _resolve_config(args) -> tuple[ExperimentConfig, str | None]:
    """Experiment settings plus the preset name (None for config-file runs)."""
    target = args.target
    preset: str | None
    file_path: str | None = args.config
    if target and (Path(target).is_file() or target.endswith(".cfg")):
        preset = None
        if file_path:
            raise ValueError("give the config file once: as the target or via --config")
        file_path = target
    else:
        preset = canonical_preset(target)
    file_overrides = load_config_file(file_path) if file_path else None
    cfg = build_config(file_overrides, args.scale, _cli_overrides(args))
    return cfg, preset


def _effective_scale(cfg: ExperimentConfig, flag: str | None) -> str:
    if flag is not None:
        return flag
    return "desk" if (cfg.n_init, cfg.m_init) == DESK_SIZES else "paper"


def _run_planned(planned: PlannedRun):
    return planned.name, planned.label, run_evaporation(planned.config)


def _execute_traces(plan_runs, out: Path, workers: int):
    """Run each trace job, isolating per-run failures.

    Returns (labeled traces, failure count); CSVs are written as results
    arrive so a late failure cannot take out earlier artifacts.
    """
    labeled = []
    failures = 0
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(r.name, pool.submit(_run_planned, r)) for r in plan_runs]
            results = []
            for name, fut in futures:
                try:
                    results.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - reported, not silenced
                    print(f"run {name} failed: {exc}", file=sys.stderr)
                    failures += 1
    else:
        results = []
        for r in plan_runs:
            try:
                results.append(_run_planned(r))
            except Exception as exc:  # noqa: BLE001 - reported, not silenced
                print(f"run {r.name} failed: {exc}", file=sys.stderr)
                failures += 1
    for name, label, trace in results:
        trace.write_csv(out / f"{name}.csv")
        labeled.append((label, trace))
    return labeled, failures


def _write_manifest(cfg: ExperimentConfig, out: Path, extra: dict) -> None:
    (out / "run-manifest.txt").write_text(
        cfg.manifest_text(extra), encoding="utf-8"
    )


def cmd_run(args) -> int:
    cfg, preset = _resolve_config(args)
    cfg.check_memory()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scale = _effective_scale(cfg, args.scale)

    if preset is None:
        trace = run_evaporation(cfg.run_config())
        trace.write_csv(out / "trace.csv")
        save_trace_figure(
            [(f"N = {cfg.n_init}", trace)], out / "trace.png", "Boundary entropy"
        )
        _write_manifest(cfg, out, {"preset": "<config-file>", "scale": scale})
        print(f"wrote {out / 'trace.csv'}")
        return 0

    plan = build_plan(preset, cfg, scale, h_override=args.h)

    if plan.kind == "circuit":
        return _export_circuit(cfg, out)

    if plan.kind == "convergence":
        m_env, chis = fig9_grid(scale)
        env = TfimParams(
            j_env=cfg.j_env, g_env=cfg.g_env, n_init=2, m_init=m_env
        )
        rows = convergence_scan(
            build_env_mpo(env, 2),
            m_env,
            chis,
            DmrgConfig(
                sweeps=cfg.dmrg_sweeps, cutoff=cfg.dmrg_cutoff, seed=cfg.seed
            ),
        )
        write_convergence_csv(rows, out / "convergence.csv")
        save_convergence_figure(
            rows, out / f"{preset}.png", f"{plan.figure_title} (M = {m_env})"
        )
        _write_manifest(
            cfg, out, {"preset": preset, "scale": scale, "env_size": str(m_env)}
        )
        print(f"wrote {out / 'convergence.csv'} ({len(rows)} bond caps)")
        return 0

    labeled, failures = _execute_traces(plan.runs, out, args.workers)
    if labeled:
        save_trace_figure(labeled, out / f"{preset}.png", plan.figure_title)
    _write_manifest(
        cfg,
        out,
        {
            "preset": preset,
            "scale": scale,
            "runs": ",".join(r.name for r in plan.runs),
        },
    )
    print(f"wrote {len(labeled)} trace(s) to {out}")
    return 1 if failures else 0


# -- export-circuit ------------------------------------------------------


def _export_circuit(cfg: ExperimentConfig, out: Path) -> int:
    from .circuit import ETA_CRITICAL_PAIR, env_pair_fidelities, evaporation_program, parse

    params = TfimParams(
        j_sys=cfg.j_sys,
        g_sys=cfg.g_sys,
        j_env=cfg.j_env,
        g_env=cfg.g_env,
        h=cfg.h,
        n_init=4,
        m_init=2,
    )
    schedule = EvaporationSchedule(params=params, period=cfg.period, tau=cfg.tau)
    text = evaporation_program(schedule)
    parse(text)  # refuse to emit anything the parser will not take back
    out.mkdir(parents=True, exist_ok=True)
    program_path = out / "gate-program.txt"
    program_path.write_text(text, encoding="utf-8")

    fids = env_pair_fidelities(cfg.j_env, cfg.g_env, ETA_CRITICAL_PAIR)
    best = max(fids, key=fids.get)
    report_lines = [
        "# environment-pair preparation fidelity vs exact 2-site ground state",
        f"# rotation angle eta = {ETA_CRITICAL_PAIR!r}",
    ]
    report_lines += [
        f"{name} = {value!r}" for name, value in sorted(fids.items())
    ]
    report_lines.append(f"best = {best}")
    (out / "fidelity-report.txt").write_text(
        "\n".join(report_lines) + "\n", encoding="utf-8"
    )
    _write_manifest(cfg, out, {"preset": "circuit-l6", "scale": "fixed-4+2"})
    print(f"wrote {program_path} and fidelity report")
    return 0


def cmd_export_circuit(args) -> int:
    file_overrides = load_config_file(args.config) if args.config else None
    overrides = {"seed": args.seed} if args.seed is not None else None
    cfg = build_config(file_overrides, args.scale, overrides)
    return _export_circuit(cfg, Path(args.out))


# -- verify --------------------------------------------------------------


def cmd_verify(args) -> int:
    from . import acceptance

    results = acceptance.run_suite(only=args.only)
    failed = [r for r in results if not r.passed]
    total = len(results)
    print(f"{total - len(failed)}/{total} checks passed")
    return 1 if failed or not results else 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "export-circuit":
            return cmd_export_circuit(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
