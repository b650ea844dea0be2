import xml.etree.ElementTree as ET

import numpy as np

from fowler.fem_space import FemSpace, interpolate
from fowler.mesh import build_uniform_mesh
from fowler.output import loglog_svg, profile_svg, read_snapshot_csv, snapshot_csv, state_csv

SVG = "{http://www.w3.org/2000/svg}"


def test_snapshot_roundtrip(tmp_path):
    x = np.array([-1.0, 0.1, 1.0 / 3.0])
    u = np.array([0.0, -2.5e-17, 7.0])
    text = snapshot_csv(x, u, {"time": 0.2, "example": 2})
    assert text.splitlines()[:3] == ["# example = 2", "# time = 0.2", "x,u"]
    path = tmp_path / "s.csv"
    path.write_text(text)
    x2, u2, meta = read_snapshot_csv(path)
    # repr keeps every bit
    np.testing.assert_array_equal(x2, x)
    np.testing.assert_array_equal(u2, u)
    assert meta == {"example": "2", "time": "0.2"}


def test_state_csv_sorted_by_x():
    sp = FemSpace(build_uniform_mesh(1.0, 5), 3)
    u = interpolate(sp, np.sin, time=0.125)
    lines = state_csv(u).splitlines()
    body = [tuple(map(float, ln.split(","))) for ln in lines if not ln.startswith("#") and ln != "x,u"]
    assert len(body) == sp.dof_count
    xs = [b[0] for b in body]
    assert xs == sorted(xs)
    assert "# time = 0.125" in lines and "# r = 3" in lines and "# elements = 5" in lines


def test_profile_svg_structure():
    x = np.linspace(-1, 1, 11)
    svg = profile_svg(x, np.sin(x), x, np.cos(x), title="demo")
    root = ET.fromstring(svg)
    assert root.get("viewBox") == "0 0 640 400"
    lines = root.findall(f"{SVG}polyline")
    assert len(lines) == 2
    assert lines[0].get("stroke-dasharray") is None
    assert lines[1].get("stroke-dasharray") == "2,3"
    assert len(lines[0].get("points").split()) == 11
    assert any(t.text == "demo" for t in root.iter(f"{SVG}text"))


def test_profile_svg_flat_data():
    x = np.linspace(0, 1, 3)
    ET.fromstring(profile_svg(x, np.zeros(3), x, np.zeros(3)))


def test_loglog_svg():
    h = np.array([0.1, 0.05, 0.025])
    svg = loglog_svg(h, h ** 2, slope=2.0)
    root = ET.fromstring(svg)
    assert len(root.findall(f"{SVG}circle")) == 3
    assert "fitted slope 2.000" in svg
    assert "1e-1" in svg


def test_svg_is_deterministic():
    x = np.linspace(-1, 1, 50)
    assert profile_svg(x, x ** 2, x, x ** 3) == profile_svg(x, x ** 2, x, x ** 3)
