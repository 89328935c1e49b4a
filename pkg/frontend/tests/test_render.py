import csv
import shutil
import subprocess
import sys

import pytest

from plotfigs import PANELS, FigureRequest, RenderError, render
from plotfigs.cli import main

SCHEMA = [
    "t", "omega", "H", "L", "C", "coherence",
    "beta", "gamma_re", "gamma_im", "n", "k_down", "k_up",
    "H_attr", "C_attr", "L_attr", "solver", "g",
]


def synth_csv(path, solver="name", g=1.0, n=25, attractor=False):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCHEMA)
        for i in range(n):
            t = 0.1 * i
            row = {"t": t, "omega": 40.0 / (1.0 + 0.4 * t), "solver": solver, "g": g}
            if attractor:
                row.update(H_attr=26.0 - 0.1 * t, C_attr=1.3 - 0.01 * t,
                           L_attr=0.0, k_down=1e-3 * (1 + 0.1 * t), k_up=2e-4)
            else:
                row.update(H=60.0 - g * t, L=0.5 * t, C=0.4 * t,
                           coherence=0.01 * g * t, beta=-1.0, gamma_re=0.1,
                           gamma_im=0.0, n=1.0, k_down=1e-3, k_up=2e-4)
            writer.writerow([row.get(c, "") for c in SCHEMA])
    return str(path)


@pytest.mark.parametrize("fig", ["fig1", "fig2", "fig3", "fig4", "fig5"])
def test_render_panel_counts(tmp_path, fig):
    if fig == "fig4":
        inputs = [synth_csv(tmp_path / f"a{i}.csv", solver="attractor",
                            attractor=True) for i in range(3)]
    elif fig == "fig2":
        inputs = [
            synth_csv(tmp_path / "n.csv", solver="name"),
            synth_csv(tmp_path / "i.csv", solver="isolated", g=0.0),
            synth_csv(tmp_path / "a.csv", solver="attractor", attractor=True),
        ]
    else:
        inputs = [synth_csv(tmp_path / f"g{i}.csv", g=float(i)) for i in range(3)]
    out = tmp_path / f"{fig}.png"
    path, panels = render(FigureRequest(figure=fig, inputs=inputs, output=str(out)))
    assert panels == PANELS[fig]
    assert out.exists() and out.stat().st_size > 1000


def test_empty_inputs_rejected(tmp_path):
    with pytest.raises(RenderError):
        FigureRequest(figure="fig1", inputs=[], output=str(tmp_path / "x.png"))


def test_unknown_figure_rejected(tmp_path):
    with pytest.raises(RenderError):
        FigureRequest(figure="fig9", inputs=["a.csv"], output="x.png")


def test_missing_columns_rejected(tmp_path):
    bad = tmp_path / "bad.csv"
    with open(bad, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "H"])
        writer.writerow([0.0, 1.0])
    with pytest.raises(RenderError):
        render(FigureRequest(figure="fig3", inputs=[str(bad)],
                             output=str(tmp_path / "x.png")))


def test_svg_rendering_is_deterministic(tmp_path):
    src = synth_csv(tmp_path / "a.csv")
    out1, out2 = tmp_path / "r1.svg", tmp_path / "r2.svg"
    render(FigureRequest(figure="fig5", inputs=[src], output=str(out1)))
    render(FigureRequest(figure="fig5", inputs=[src], output=str(out2)))
    assert out1.read_bytes() == out2.read_bytes()


def test_cli_smoke(tmp_path, capsys):
    src = synth_csv(tmp_path / "a.csv")
    out = tmp_path / "fig3.png"
    assert main(["--fig", "fig3", "--in", src, "--out", str(out)]) == 0
    assert out.exists()
    assert "1 panels" in capsys.readouterr().out
    assert main(["--fig", "fig3", "--in", str(tmp_path / "nope.csv"),
                 "--out", str(out)]) == 2


@pytest.mark.skipif(shutil.which("name-sim") is None,
                    reason="name-sim CLI not installed")
def test_against_real_scenario_output(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('scenario = "fig2"\n[output]\npoints = 12\n')
    out_dir = tmp_path / "out"
    subprocess.run(
        ["name-sim", "run", "--config", str(cfg), "--out", str(out_dir)],
        check=True, capture_output=True,
    )
    inputs = [str(out_dir / f"fig2_{s}.csv") for s in ("name", "isolated", "attractor")]
    img = tmp_path / "fig2.png"
    code = main(["--fig", "fig2", "--in", *inputs, "--out", str(img)])
    assert code == 0 and img.exists()
