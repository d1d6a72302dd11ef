import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from peakcake.allocation import Allocation
from peakcake.cli import main
from peakcake.experiments import random_instance
from peakcake.files import (
    FileFormatError,
    instance_from_dict,
    instance_to_dict,
    read_allocation,
    read_instance,
    write_allocation,
    write_instance,
)
from peakcake.mechanisms import run_um, run_ww
from peakcake.render import render_svg

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def fig3_file(tmp_path, fig3):
    path = tmp_path / "fig3.json"
    write_instance(path, fig3)
    return path


@pytest.fixture
def disc_file(tmp_path, figdisc):
    path = tmp_path / "disc.json"
    write_instance(path, figdisc)
    return path


@given(st.integers(1, 6), st.integers(0, 10_000), st.booleans())
def test_instance_round_trip(n, seed, common):
    inst = random_instance(n, seed, common)
    back = instance_from_dict(json.loads(json.dumps(instance_to_dict(inst))))
    for a, b in zip(inst.agents, back.agents):
        assert (b.peak, b.peak_density, b.slope) == pytest.approx((a.peak, a.peak_density, a.slope), abs=1e-12)
    assert back.common_slope == inst.common_slope


def test_file_round_trips(tmp_path, fig3):
    write_instance(tmp_path / "i.json", fig3)
    back = read_instance(tmp_path / "i.json")
    assert [v.peak for v in back.agents] == pytest.approx([v.peak for v in fig3.agents], abs=1e-12)
    alloc = run_um(fig3).allocation
    write_allocation(tmp_path / "a.json", alloc)
    assert np.ravel(read_allocation(tmp_path / "a.json").to_lists()) == pytest.approx(np.ravel(alloc.to_lists()), abs=1e-12)


def test_shipped_instances_load():
    for name in ("figure1", "figure3", "figdisc"):
        assert read_instance(f"data/{name}.json").n in (2, 3)


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"version": 2, "agents": [{"peak": 0.5, "peak_density": 2}]},
        {"version": 1, "agents": []},
        {"version": 1, "agents": [{"peak_density": 2}]},
        {"version": 1, "agents": [{"peak": 0.5}]},
        {"version": 1, "agents": [{"peak": 0.5, "peak_density": 2, "slope": 4}]},
    ],
)
def test_bad_instance_files(doc):
    with pytest.raises(FileFormatError):
        instance_from_dict(doc)


def test_waste_tolerant_option_carried(tmp_path):
    doc = {"version": 1, "agents": [{"peak": 0.5, "peak_density": 6}], "options": {"waste_tolerant": True}}
    assert not instance_from_dict(doc).coverage
    assert instance_to_dict(instance_from_dict(doc))["options"]["waste_tolerant"] is True


def test_render_is_deterministic(fig3):
    alloc = run_ww(fig3).allocation
    a, b = render_svg(fig3, alloc), render_svg(fig3, alloc)
    assert a == b
    root = ET.fromstring(a.split("\n", 1)[1])
    assert root.tag == SVG + "svg"
    assert len(root.findall(f".//{SVG}polyline")) == 3
    fills = {p.get("fill") for p in root.findall(f".//{SVG}polygon")}
    assert {"#9a9a9a", "#ffffff", "#000000"} <= fills
    bare = ET.fromstring(render_svg(fig3).split("\n", 1)[1])
    assert not bare.findall(f".//{SVG}polygon")


def test_cli_run(fig3_file, tmp_path, capsys):
    out, tr = tmp_path / "um.json", tmp_path / "um.tsv"
    assert main(["run", "--mechanism", "um", "--instance", str(fig3_file), "--out", str(out), "--transcript", str(tr)]) == 0
    text = capsys.readouterr().out
    assert "utilities: 0.718750 0.437500 0.718750" in text
    assert np.ravel(read_allocation(out).to_lists()[1]) == pytest.approx([5 / 12, 7 / 12], abs=1e-12)
    assert tr.read_text().count("\tcut\t") == 6


def test_cli_run_prerequisite(disc_file):
    assert main(["run", "--mechanism", "ll", "--instance", str(disc_file)]) == 3


def test_cli_run_empty_segment(tmp_path):
    # without the waste-tolerant flag the file is rejected at load time
    path = tmp_path / "gap.json"
    path.write_text(json.dumps({"version": 1, "agents": [{"peak": 0.2, "peak_density": 6}, {"peak": 0.8, "peak_density": 6}]}))
    assert main(["run", "--mechanism", "mww", "--instance", str(path)]) == 2
    assert main(["run", "--mechanism", "mww", "--instance", str(path), "--waste-tolerant"]) == 0


def test_cli_audit(fig3_file, tmp_path, fig3, capsys):
    um = tmp_path / "um.json"
    write_allocation(um, run_um(fig3).allocation)
    assert main(["audit", "--instance", str(fig3_file), "--allocation", str(um)]) == 0
    ww = tmp_path / "ww.json"
    write_allocation(ww, run_ww(fig3).allocation)
    assert main(["audit", "--instance", str(fig3_file), "--allocation", str(ww), "--checks", "ef,prop"]) == 0
    assert main(["audit", "--instance", str(fig3_file), "--allocation", str(ww), "--checks", "po"]) == 1
    assert "NOT PO" in capsys.readouterr().out
    assert main(["audit", "--instance", str(fig3_file), "--allocation", str(ww), "--checks", "bogus"]) == 2


def test_cli_audit_inapplicable(disc_file, tmp_path):
    alloc = tmp_path / "a.json"
    write_allocation(alloc, Allocation.from_lists([[(0.0, 0.5)], [(0.5, 1.0)]]))
    assert main(["audit", "--instance", str(disc_file), "--allocation", str(alloc), "--checks", "po"]) == 3


def test_cli_compare(fig3_file, tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["compare", "--instance", str(fig3_file), "--csv", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["mechanism"] for r in rows] == ["ww", "mww", "ll", "um"]
    assert "mech" in capsys.readouterr().out


def test_cli_experiment(tmp_path, capsys):
    out = tmp_path / "wl.csv"
    assert main(["experiment", "welfare-loss", "--n-min", "2", "--n-max", "5", "--csv", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "n,T_PO,T_WW,WL"
    assert "WL=0.800000" in capsys.readouterr().out
    assert main(["experiment", "welfare-loss", "--n-min", "1", "--n-max", "5"]) == 2


def test_cli_render(fig3_file, tmp_path):
    out = tmp_path / "f.svg"
    assert main(["render", "--instance", str(fig3_file), "--out", str(out)]) == 0
    assert out.read_text().startswith("<?xml")


def test_cli_usage_errors(tmp_path):
    assert main([]) == 2
    assert main(["run", "--mechanism", "nope", "--instance", "x.json"]) == 2
    assert main(["run", "--mechanism", "ww", "--instance", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--mechanism", "ww", "--instance", str(bad)]) == 2
    assert main(["--help"]) == 0


def test_cli_rejects_non_normalizable(tmp_path):
    path = tmp_path / "flat.json"
    path.write_text(json.dumps({"version": 1, "agents": [{"peak": 0.5, "peak_density": 0.9}]}))
    assert main(["run", "--mechanism", "ww", "--instance", str(path)]) == 2
