import os
import shutil
import xml.etree.ElementTree as ET

import pytest

from irsplots.render import (FigureSpec, infer_sweep_kind, render_convergence,
                             render_sweep)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
RESULTS = os.path.join(FIXTURES, "results.csv")
TRACES = [os.path.join(FIXTURES, "trace_ly8_r116_r216.csv"),
          os.path.join(FIXTURES, "trace_ly32_r116_r216.csv")]


def svg_text(path):
    return open(path).read()


def test_spec_validation(tmp_path):
    with pytest.raises(FileNotFoundError):
        FigureSpec(inputs=["nope.csv"], kind="sweep-ni", output="x.svg")
    with pytest.raises(ValueError):
        FigureSpec(inputs=[RESULTS], kind="pie", output="x.svg")
    with pytest.raises(ValueError):
        FigureSpec(inputs=[RESULTS], kind="sweep-ni", output="x.svg",
                   image_format="gif")


def test_sweep_golden_fixture(tmp_path):
    out = tmp_path / "sweep.svg"
    spec = FigureSpec(inputs=[RESULTS], kind="sweep-ni", output=str(out))
    strategies = render_sweep(spec)
    assert out.exists() and out.stat().st_size > 0
    assert strategies == ["no-irs", "proposed-hb", "random-irs"]
    # schema-valid XML with one labeled curve per strategy present
    ET.parse(out)
    text = svg_text(out)
    for s in strategies:
        assert s in text
    assert "Secrecy rate (bits/s/Hz)" in text
    assert "N_I" in text


def test_sweep_deterministic(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_sweep(FigureSpec(inputs=[RESULTS], kind="sweep-ni", output=str(a)))
    render_sweep(FigureSpec(inputs=[RESULTS], kind="sweep-ni", output=str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_sweep_png(tmp_path):
    out = tmp_path / "sweep.png"
    render_sweep(FigureSpec(inputs=[RESULTS], kind="sweep-ni",
                            output=str(out), image_format="png"))
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_sweep_median_aggregate(tmp_path):
    out = tmp_path / "median.svg"
    render_sweep(FigureSpec(inputs=[RESULTS], kind="sweep-ni",
                            output=str(out), aggregate="median"))
    assert "median" in svg_text(out)


def test_sweep_empty_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("var,value,strategy,trial,seed,secrecy_rate,"
                     "admm_iters,converged,ms\n")
    out = tmp_path / "out.svg"
    with pytest.raises(ValueError):
        render_sweep(FigureSpec(inputs=[str(empty)], kind="sweep-ni",
                                output=str(out)))
    assert not out.exists()


def test_sweep_skips_missing_strategy(tmp_path, capsys):
    lines = open(RESULTS).read().splitlines()
    assert "no-irs" in lines[3]
    broken = lines[:3] + [lines[3].replace("no-irs", "")] + lines[4:]
    path = tmp_path / "broken.csv"
    path.write_text("\n".join(broken) + "\n")
    out = tmp_path / "out.svg"
    render_sweep(FigureSpec(inputs=[str(path)], kind="sweep-ni", output=str(out)))
    assert "skipping rows with missing strategy" in capsys.readouterr().err
    assert out.exists()


def test_sweep_header_mismatch(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        render_sweep(FigureSpec(inputs=[str(bad)], kind="sweep-ni",
                                output=str(tmp_path / "x.svg")))


def test_sweep_does_not_mutate_input(tmp_path):
    copy = tmp_path / "copy.csv"
    shutil.copy(RESULTS, copy)
    before = copy.read_bytes()
    render_sweep(FigureSpec(inputs=[str(copy)], kind="sweep-ni",
                            output=str(tmp_path / "out.svg")))
    assert copy.read_bytes() == before


def test_infer_kind():
    assert infer_sweep_kind(RESULTS) == "sweep-ni"


def test_convergence_golden_fixture(tmp_path):
    out = tmp_path / "conv.svg"
    labels = render_convergence(FigureSpec(inputs=TRACES, kind="convergence",
                                           output=str(out)))
    assert out.exists() and out.stat().st_size > 0
    assert labels == ["ly8_r116_r216", "ly32_r116_r216"]
    ET.parse(out)
    text = svg_text(out)
    for label in labels:
        assert label in text


def test_convergence_single_trace(tmp_path):
    out = tmp_path / "single.svg"
    labels = render_convergence(FigureSpec(inputs=[TRACES[0]],
                                           kind="convergence", output=str(out)))
    assert len(labels) == 1 and out.exists()


def test_convergence_deterministic(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_convergence(FigureSpec(inputs=TRACES, kind="convergence", output=str(a)))
    render_convergence(FigureSpec(inputs=TRACES, kind="convergence", output=str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_cli_round_trip(tmp_path, capsys):
    from irsplots.cli import main
    out = tmp_path / "cli.svg"
    assert main(["sweep", "--in", RESULTS, "--out", str(out)]) == 0
    assert out.exists()
    out2 = tmp_path / "cli_conv.png"
    args = ["convergence", "--out", str(out2)]
    for t in TRACES:
        args += ["--in", t]
    assert main(args) == 0
    assert out2.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
