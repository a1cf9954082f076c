import json
import shutil
import subprocess

import numpy as np
import pytest

from ksfigures import ALL_KINDS, FigureRequest, RenderError, render


def _fmt(x):
    return format(float(x), ".17g")


def _write_field(path, times, centers, values):
    header = "t," + ",".join(_fmt(c) for c in centers)
    data = np.column_stack([times, values])
    np.savetxt(path, data, delimiter=",", fmt="%.17g", header=header, comments="")


@pytest.fixture
def run_dir(tmp_path):
    """A synthetic run directory following the documented CSV schema."""
    rng = np.random.default_rng(0)
    N, J = 8, 12
    centers = np.linspace(-1 + 1 / J, 1 - 1 / J, J)
    state_times = np.linspace(0.0, 0.05, N + 1)
    step_times = state_times[1:]
    _write_field(tmp_path / "state_u.csv", state_times, centers, rng.uniform(0, 2, (N + 1, J)))
    _write_field(tmp_path / "state_v.csv", state_times, centers, rng.uniform(0, 2, (N + 1, J)))
    _write_field(tmp_path / "adjoint_phi.csv", step_times, centers, rng.normal(size=(N, J)))
    _write_field(tmp_path / "adjoint_psi.csv", step_times, centers, rng.normal(size=(N, J)))
    _write_field(tmp_path / "control_f.csv", step_times, centers, rng.normal(size=(N, J)))
    np.savetxt(
        tmp_path / "control_g.csv",
        np.column_stack([step_times, rng.normal(size=(N, 2))]),
        delimiter=",",
        fmt="%.17g",
        header="t,left,right",
        comments="",
    )
    trace = np.column_stack(
        [
            np.arange(1, 31),
            np.geomspace(1.0, 1e-3, 30),
            np.geomspace(0.1, 1e-4, 30),
            np.geomspace(0.5, 1e-3, 30),
            np.geomspace(3.0, 1e-2, 30),
        ]
    )
    np.savetxt(
        tmp_path / "trace.csv",
        trace,
        delimiter=",",
        fmt=["%d", "%.17g", "%.17g", "%.17g", "%.17g"],
        header="iter,cost,grad_norm_l2,grad_norm_max,grad_norm_frob",
        comments="",
    )
    np.savetxt(
        tmp_path / "perturbation.csv",
        np.column_stack([np.linspace(-0.1, 0.1, 9), 1.0 + np.linspace(-0.1, 0.1, 9) ** 2]),
        delimiter=",",
        fmt="%.17g",
        header="amplitude,cost",
        comments="",
    )
    (tmp_path / "metadata.json").write_text(json.dumps({"spec": {"preset": "synthetic"}}))
    return tmp_path


def test_all_kinds_render(run_dir):
    written = render(FigureRequest(run_dir=run_dir))
    assert len(written) == len(ALL_KINDS)
    for path in written:
        assert path.exists() and path.stat().st_size > 0
        assert path.parent == run_dir / "figures"


def test_explicit_kinds_and_svg(run_dir, tmp_path):
    out = tmp_path / "imgs"
    written = render(
        FigureRequest(
            run_dir=run_dir, kinds=("heatmap_u", "cost_curve"), fmt="svg", out_dir=out
        )
    )
    assert [p.name for p in written] == ["heatmap_u.svg", "cost_curve.svg"]
    # color limits are recorded in the image metadata for reproducibility
    svg = written[0].read_text()
    assert "vmin" in svg and "vmax" in svg


def test_missing_input_is_an_explicit_error(run_dir):
    (run_dir / "perturbation.csv").unlink()
    with pytest.raises(RenderError, match="perturbation.csv"):
        render(FigureRequest(run_dir=run_dir, kinds=("perturbation",)))
    # without an explicit request the kind is simply skipped
    written = render(FigureRequest(run_dir=run_dir))
    assert len(written) == len(ALL_KINDS) - 1


def test_unknown_kind_rejected(run_dir):
    with pytest.raises(RenderError, match="unknown"):
        FigureRequest(run_dir=run_dir, kinds=("heatmap_q",))


def test_requires_metadata(tmp_path):
    with pytest.raises(RenderError, match="metadata"):
        render(FigureRequest(run_dir=tmp_path))


def test_rendering_is_readonly_and_data_deterministic(run_dir):
    before = {
        p.name: p.read_bytes() for p in run_dir.iterdir() if p.suffix in (".csv", ".json")
    }
    render(FigureRequest(run_dir=run_dir))
    render(FigureRequest(run_dir=run_dir))  # rerender over the same data
    after = {
        p.name: p.read_bytes() for p in run_dir.iterdir() if p.suffix in (".csv", ".json")
    }
    assert before == after


@pytest.mark.skipif(shutil.which("kscontrol") is None, reason="primary CLI not installed")
def test_case1_run_directory_renders_six_kinds(tmp_path):
    """End-to-end: a real distributed-control run exposes six figure kinds
    (no boundary control, hence no boundary_g)."""
    out = tmp_path / "case1"
    proc = subprocess.run(
        [
            "kscontrol",
            "run",
            "--preset",
            "bdc_case1",
            "--out",
            str(out),
            "--set",
            "max_iter=40",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    written = render(FigureRequest(run_dir=out))
    assert len(written) == 6
    names = {p.stem for p in written}
    assert "boundary_g" not in names
    assert names == {
        "heatmap_u",
        "heatmap_v",
        "heatmap_f",
        "cost_curve",
        "grad_curve",
        "perturbation",
    }


@pytest.mark.skipif(shutil.which("figures") is None, reason="figures CLI not installed")
def test_cli_round_trip(run_dir):
    proc = subprocess.run(
        ["figures", "--run", str(run_dir), "--kinds", "heatmap_u"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (run_dir / "figures" / "heatmap_u.png").exists()
    proc = subprocess.run(
        ["figures", "--run", str(run_dir / "nope"), "--kinds", "heatmap_u"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
