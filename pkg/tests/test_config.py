"""Config files, override precedence, manifests, memory guard."""

import pytest

from evapchain.config import (
    DESK_SIZES,
    PAPER_SIZES,
    ExperimentConfig,
    build_config,
    load_config_file,
    parse_config_text,
)


def test_defaults_are_paper_scale():
    cfg = ExperimentConfig()
    assert (cfg.n_init, cfg.m_init) == PAPER_SIZES == (15, 150)
    assert (cfg.j_sys, cfg.g_sys) == (3.0, 3.0)
    assert (cfg.j_env, cfg.g_env) == (1.0, 1.0)
    assert cfg.h == 3.0
    assert (cfg.period, cfg.tau) == (5.0, 0.1)


def test_at_scale():
    desk = ExperimentConfig().at_scale("desk")
    assert (desk.n_init, desk.m_init) == DESK_SIZES == (8, 24)
    assert desk.h == 3.0  # couplings untouched
    assert ExperimentConfig().at_scale("paper") == ExperimentConfig()
    with pytest.raises(ValueError, match="unknown scale"):
        ExperimentConfig().at_scale("huge")


def test_run_config_carries_everything():
    cfg = ExperimentConfig(n_init=4, m_init=4, max_bond=32, cutoff=1e-7, seed=5)
    run = cfg.run_config()
    assert run.schedule.params.n_init == 4
    assert run.policy.max_bond == 32
    assert run.policy.cutoff == 1e-7
    assert run.dmrg.seed == 5
    assert run.schedule.steps_per_interval == 50


def test_parse_config_text():
    text = "\n".join(
        [
            "# comment",
            "n_init = 6",
            "h = 0.0  # inline comment",
            "",
            "initial_state = xi",
        ]
    )
    assert parse_config_text(text) == {"n_init": 6, "h": 0.0, "initial_state": "xi"}


def test_parse_errors_name_the_line():
    with pytest.raises(ValueError, match=r"<config>:1: expected key = value"):
        parse_config_text("what is this")
    with pytest.raises(ValueError, match=r"cfg:2: unknown key 'n_int'"):
        parse_config_text("h = 1\nn_int = 4\n", source="cfg")
    with pytest.raises(ValueError, match="known keys:.*n_init"):
        parse_config_text("n_int = 4")
    with pytest.raises(ValueError, match=r":3: duplicate key 'h'"):
        parse_config_text("h = 1\nn_init = 4\nh = 2\n")
    with pytest.raises(ValueError, match="bad value for n_init"):
        parse_config_text("n_init = six")


def test_load_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("n_init = 4\nm_init = 8\n")
    assert load_config_file(path) == {"n_init": 4, "m_init": 8}
    bad = tmp_path / "bad.cfg"
    bad.write_text("mystery = 1\n")
    with pytest.raises(ValueError, match="bad.cfg:1"):
        load_config_file(bad)


def test_build_config_precedence():
    cfg = build_config(
        file_overrides={"h": 1.5, "max_bond": 64},
        scale="desk",
        cli_overrides={"h": 2.5, "seed": None},
    )
    assert cfg.h == 2.5  # flag beats file
    assert cfg.max_bond == 64  # file beats default
    assert (cfg.n_init, cfg.m_init) == DESK_SIZES
    assert cfg.seed == 0  # None flags are "not given"


def test_file_sizes_survive_scale():
    cfg = build_config(file_overrides={"n_init": 5}, scale="desk")
    assert cfg.n_init == 5
    assert cfg.m_init == DESK_SIZES[1]


def test_estimated_bytes():
    cfg = ExperimentConfig(n_init=2, m_init=2, max_bond=10)
    assert cfg.estimated_bytes() == 4 * 100 * 2 * 16


def test_check_memory_refuses_absurd_runs():
    ExperimentConfig().check_memory()  # paper defaults are fine
    huge = ExperimentConfig(max_bond=100_000)
    with pytest.raises(SystemExit, match="GiB"):
        huge.check_memory()


def test_manifest_text_deterministic():
    cfg = ExperimentConfig(n_init=4, m_init=4)
    a = cfg.manifest_text(extra={"b_key": "2", "a_key": "1"})
    assert a == cfg.manifest_text(extra={"a_key": "1", "b_key": "2"})
    lines = a.splitlines()
    assert lines[0].startswith("package_version = ")
    assert "n_init = 4" in lines
    assert "initial_state = 'zeta'" in lines
    assert lines[-2:] == ["a_key = 1", "b_key = 2"]
    assert a.endswith("\n")
