import json

import numpy as np
import pytest

from kscontrol import ValidationError, load_config
from kscontrol.cli import main as cli_main
from kscontrol.experiment_runner import (
    DEFAULTS,
    PRESETS,
    ExperimentSpec,
    build_setup,
    manufactured_control,
    parse_config_text,
    read_field_csv,
    run_preset,
    scan_run_directory,
    write_field_csv,
)


def test_default_parameters():
    assert DEFAULTS["L"] == 1.0 and DEFAULTS["J"] == 100
    assert DEFAULTS["T"] == 0.05 and DEFAULTS["N"] == 100
    assert DEFAULTS["alpha_f"] == 0.0 and DEFAULTS["alpha_g"] == 0.0
    assert DEFAULTS["Du"] == 0.1 and DEFAULTS["Dv"] == 0.1
    assert DEFAULTS["chi"] == 1.0 and DEFAULTS["lambda"] == 0.1 and DEFAULTS["mu"] == 1.0
    assert DEFAULTS["adam_alpha"] == 0.1 and DEFAULTS["tol"] == 1e-4
    assert DEFAULTS["max_iter"] == 100_000
    assert DEFAULTS["adam_beta1"] == 0.9 and DEFAULTS["adam_beta2"] == 0.999
    assert DEFAULTS["adam_eps"] == 1e-8
    sg, tg = build_setup(ExperimentSpec.from_mapping({}))[0].sg, None
    assert sg.dx == pytest.approx(0.02)


def test_empty_config_with_case1_preset_resolves_to_defaults(tmp_path):
    cfg = tmp_path / "empty.txt"
    cfg.write_text("preset = 'bdc_case1'\n")
    spec = load_config(cfg)
    assert spec.preset == "bdc_case1"
    assert spec.J == 100 and spec.N == 100
    setup, _ = build_setup(spec)
    assert setup.omega_c.count == 100  # control everywhere
    assert setup.omega_o.count == 100  # observe everywhere
    assert setup.u_d[0, 0] == 1.0


def test_config_overrides_preset_values(tmp_path):
    cfg = tmp_path / "case5_long.txt"
    cfg.write_text("preset = 'bdc_case5'\nmax_iter = 200000\n")
    spec = load_config(cfg)
    assert spec.max_iter == 200_000
    assert spec.control_hi == -0.2 and spec.observe_lo == 0.2


def test_malformed_config_is_a_validation_error(tmp_path):
    cfg = tmp_path / "bad.txt"
    cfg.write_text("this is not = = valid\n")
    with pytest.raises(ValidationError, match="parse error"):
        load_config(cfg)


def test_unknown_key_is_rejected():
    with pytest.raises(ValidationError, match="unknown configuration key"):
        parse_config_text("typo_key = 3\n")


def test_tables_are_rejected():
    with pytest.raises(ValidationError, match="flat"):
        parse_config_text("[section]\nL = 1.0\n")


def test_type_checks_on_keys():
    with pytest.raises(ValidationError):
        parse_config_text("J = 'many'\n")
    with pytest.raises(ValidationError):
        parse_config_text("optimize = 3\n")


def test_unknown_preset():
    with pytest.raises(ValidationError, match="unknown preset"):
        run_preset("bdc_case99")


def test_preset_table_layouts():
    spec4 = ExperimentSpec.from_mapping({**PRESETS["bdc_case4"], "preset": "bdc_case4"})
    setup, _ = build_setup(spec4)
    # control on [-1, 0.2]: cells 1..60; observation on [-0.2, 1]: cells 41..100
    assert setup.omega_c.count == 60 and setup.omega_o.count == 60
    assert setup.omega_c.measure == pytest.approx(1.2)
    spec_b = ExperimentSpec.from_mapping({**PRESETS["bbc_full"], "preset": "bbc_full"})
    setup_b, _ = build_setup(spec_b)
    assert setup_b.omega_c.count == 0
    assert setup_b.bmask.count == 2
    assert setup_b.u0[0] == pytest.approx(1.0 - np.cos(np.pi * setup_b.sg.cell_centers[0]))


def test_manufactured_control_sampling():
    spec = ExperimentSpec.from_mapping({"J": 10, "N": 4})
    setup, _ = build_setup(spec)
    ref = manufactured_control(setup.sg, setup.tg)
    assert ref.shape == (4, 10)
    t_mid = (np.arange(1, 5) - 0.5) * setup.tg.dt
    expect = np.cos(3 * np.pi * setup.sg.cell_centers[3]) * np.cos(20 * np.pi * t_mid[2])
    assert ref[2, 3] == pytest.approx(expect, rel=1e-15)


def test_manufactured_target_matches_reference_run():
    spec = ExperimentSpec.from_mapping(
        {**PRESETS["manufactured"], "preset": "manufactured", "J": 20, "N": 10}
    )
    setup, _ = build_setup(spec)
    from kscontrol import ControlPair, solve_forward

    ref = ControlPair.on_masks(
        manufactured_control(setup.sg, setup.tg), np.zeros((10, 2)), setup
    )
    traj = solve_forward(setup, ref)
    assert setup.u_d == pytest.approx(traj.u[1:], abs=0.0)


def test_field_csv_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    times = np.linspace(0.0, 1.0, 7)
    centers = np.linspace(-0.9, 0.9, 10)
    values = rng.normal(size=(7, 10)) * np.pi
    path = tmp_path / "field.csv"
    write_field_csv(path, times, centers, values)
    t2, c2, v2 = read_field_csv(path)
    assert np.array_equal(t2, times)
    assert np.array_equal(c2, centers)
    assert np.array_equal(v2, values)


@pytest.fixture(scope="module")
def case0_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("case0")
    return run_preset("bdc_case0", {"out_dir": str(out)})


def test_case0_writes_states_only(case0_run):
    art = case0_run
    assert art.state_u.exists() and art.state_v.exists()
    assert art.metadata.exists()
    assert art.trace is None and art.control_f is None and art.adjoint_phi is None
    times, centers, u = read_field_csv(art.state_u)
    assert u.shape == (101, 100)
    assert times[0] == 0.0 and times[-1] == pytest.approx(0.05)
    meta = json.loads(art.metadata.read_text())
    assert meta["spec"]["preset"] == "bdc_case0"
    assert "result" not in meta


def test_case0_state_round_trip_matches_solver(case0_run):
    from kscontrol import ControlPair, solve_forward

    meta = json.loads(case0_run.metadata.read_text())
    spec = ExperimentSpec.from_mapping(meta["spec"])
    setup, _ = build_setup(spec)
    traj = solve_forward(setup, ControlPair.zeros(setup))
    _, _, u = read_field_csv(case0_run.state_u)
    assert np.array_equal(u, traj.u)


@pytest.fixture(scope="module")
def small_case1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("case1_small")
    art = run_preset(
        "bdc_case1", {"out_dir": str(out), "max_iter": 60, "J": 40, "N": 30}
    )
    return art


def test_optimized_run_writes_all_artifacts(small_case1_run):
    art = small_case1_run
    for path in (
        art.state_u,
        art.state_v,
        art.adjoint_phi,
        art.adjoint_psi,
        art.control_f,
        art.trace,
        art.perturbation,
        art.metadata,
        art.timing,
    ):
        assert path is not None and path.exists()
    assert art.control_g is None  # no boundary control in this preset
    trace = np.loadtxt(art.trace, delimiter=",", skiprows=1)
    assert trace.shape == (60, 5)
    meta = json.loads(art.metadata.read_text())
    assert meta["result"]["termination"] == "max_iter"
    assert meta["result"]["iterations"] == 60


def test_rerun_is_byte_identical(small_case1_run, tmp_path_factory):
    out2 = tmp_path_factory.mktemp("case1_small_again")
    art2 = run_preset(
        "bdc_case1", {"out_dir": str(out2), "max_iter": 60, "J": 40, "N": 30}
    )
    for first, second in [
        (small_case1_run.state_u, art2.state_u),
        (small_case1_run.state_v, art2.state_v),
        (small_case1_run.adjoint_phi, art2.adjoint_phi),
        (small_case1_run.adjoint_psi, art2.adjoint_psi),
        (small_case1_run.control_f, art2.control_f),
        (small_case1_run.trace, art2.trace),
        (small_case1_run.perturbation, art2.perturbation),
    ]:
        assert first.read_bytes() == second.read_bytes()


def test_scan_on_a_finished_run(small_case1_run):
    out, scan = scan_run_directory(
        small_case1_run.out_dir, [-0.01, 0.0, 0.01], direction="constant"
    )
    assert out.exists()
    amps = [s for s, _ in scan]
    assert amps == [-0.01, 0.0, 0.01]
    meta = json.loads(small_case1_run.metadata.read_text())
    # the unperturbed cost equals the best recorded cost
    assert dict(scan)[0.0] == pytest.approx(meta["result"]["best_cost"], rel=1e-12)


def test_scan_requires_metadata(tmp_path):
    with pytest.raises(ValidationError, match="metadata"):
        scan_run_directory(tmp_path, [0.0])


def test_boundary_preset_writes_control_g(tmp_path):
    art = run_preset(
        "bbc_full", {"out_dir": str(tmp_path / "bbc"), "max_iter": 5, "J": 20, "N": 10}
    )
    assert art.control_g is not None and art.control_g.exists()
    data = np.loadtxt(art.control_g, delimiter=",", skiprows=1)
    assert data.shape == (10, 3)


# --- CLI ------------------------------------------------------------------


def test_cli_run_and_exit_codes(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli_main(
        [
            "run",
            "--preset",
            "bdc_case0",
            "--out",
            str(out),
            "--set",
            "J=20",
            "--set",
            "N=10",
        ]
    )
    assert code == 0
    assert (out / "state_u.csv").exists()


def test_cli_rejects_unknown_key(tmp_path):
    code = cli_main(
        ["run", "--preset", "bdc_case0", "--out", str(tmp_path), "--set", "bogus=1"]
    )
    assert code == 1


def test_cli_requires_a_preset(tmp_path):
    code = cli_main(["run", "--out", str(tmp_path)])
    assert code == 1


def test_cli_config_file_flow(tmp_path):
    cfg = tmp_path / "exp.toml"
    cfg.write_text("preset = 'bdc_case0'\nJ = 16\nN = 8\n")
    out = tmp_path / "artifacts"
    code = cli_main(["run", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    _, centers, _ = read_field_csv(out / "state_u.csv")
    assert centers.shape == (16,)


def test_cli_scan_errors_on_missing_run(tmp_path):
    code = cli_main(["scan", "--run", str(tmp_path), "--amplitudes", "0.1"])
    assert code == 1


def test_cli_verify_fast(capsys):
    code = cli_main(["verify", "--fast"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("[PASS]") == 6
    assert "[FAIL]" not in out


def test_cli_unknown_preset_is_a_validation_error(tmp_path):
    code = cli_main(["run", "--preset", "bdc_case99", "--out", str(tmp_path)])
    assert code == 1


def test_cli_scan_rejects_bad_amplitudes(tmp_path):
    code = cli_main(["scan", "--run", str(tmp_path), "--amplitudes", "a,b"])
    assert code == 1
