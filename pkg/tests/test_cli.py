import json

import numpy as np
import pytest

from multifreq import io
from multifreq.cli import CONFIG_SCHEMA, main, resolve_config
from multifreq.errors import ConfigError
from multifreq.mesh import generate_rectangle

from oracles import J01

BUMP = {"type": "bump", "center": [0.5, 0.5], "radius": 0.25, "amplitude": 0.5, "base": 1.0}


def _run(tmp_path, command, cfg, *extra, name="run"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / name
    return main([command, str(path), "--out", str(out), *extra]), out


def test_solve_linear_field(tmp_path):
    cfg = {"domain": {"type": "rectangle", "nx": 8, "ny": 8}, "frequencies": [0.0],
           "illuminations": [{"kind": "coordinate", "axis": 0}]}
    code, out = _run(tmp_path, "solve", cfg)
    assert code == 0
    vid, pts, vals = io.read_field_csv(out / "field_w0_phi0.csv")
    assert np.allclose(vals, pts[:, 0], atol=1e-12)
    assert len(vid) == 81
    assert (out / "field_w0_phi0.vtk").read_text().startswith("# vtk DataFile")


def test_disk_sweep_uses_two_frequencies(tmp_path):
    cfg = {"domain": {"type": "disk", "refinement": 4}, "zeta": "zeta_modulus",
           "illuminations": [{"kind": "constant_one"}],
           "range": {"k_min": J01 / 0.7, "k_max": J01 / 0.5}, "target": {"C": 0.1}}
    code, out = _run(tmp_path, "sweep", cfg)
    assert code == 0
    comp = io.read_json(out / "completeness.json")
    assert comp["complete"] and len({w for _, w in comp["cover"]}) >= 2
    assert io.read_json(out / "sweep.json")["n"] == 2


def test_invalid_regime(tmp_path, capsys):
    cfg = {"domain": {"type": "rectangle", "nx": 8, "ny": 8}, "regime": "lossy",
           "frequencies": [1.0]}
    code, out = _run(tmp_path, "solve", cfg)
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and err["exit_code"] == 2
    assert io.read_json(out / "error.json") == err


@pytest.mark.parametrize("cfg", [
    {"domain": {"type": "rectangle", "nx": 0, "ny": 8}},
    {"domain": {"type": "hexagon"}},
    {"domain": {"type": "rectangle", "nx": 4, "ny": 4}, "zeta": "zeta_unknown"},
    {"domain": {"type": "rectangle", "nx": 4, "ny": 4}, "colour": "blue"},
])
def test_schema_rejections(cfg):
    with pytest.raises(ConfigError):
        resolve_config(cfg)


def test_overrides_and_defaults():
    cfg = resolve_config({"domain": {"type": "rectangle", "nx": 4, "ny": 4}},
                         ["domain.nx=6", "momm.D=4.0", "zeta=\"zeta_cross\""], seed=3, out="x")
    assert cfg["domain"]["nx"] == 6 and cfg["momm"]["D"] == 4.0 and cfg["momm"]["trials"] == 200
    assert cfg["zeta"] == "zeta_cross" and cfg["seed"] == 3 and cfg["out"] == "x"
    assert set(cfg) <= set(CONFIG_SCHEMA["properties"])


def test_guarded_solve_exit_code(tmp_path):
    from multifreq.fem import CoefficientSet
    from multifreq.spectrum import estimate_spectrum
    m = generate_rectangle(8, 8)
    lam1 = estimate_spectrum(m, CoefficientSet.build(m), 1).eigenvalues[0]
    cfg = {"domain": {"type": "rectangle", "nx": 8, "ny": 8}, "frequencies": [float(np.sqrt(lam1))]}
    code, _ = _run(tmp_path, "solve", cfg)
    assert code == 3


def test_not_reached_exit_code(tmp_path, capsys):
    cfg = {"domain": {"type": "disk", "refinement": 3}, "zeta": "zeta_modulus",
           "illuminations": [{"kind": "constant_one"}],
           "range": {"k_min": 1.0, "k_max": 2.0}, "target": {"C": 10.0, "n_max": 3}}
    code, _ = _run(tmp_path, "sweep", cfg)
    assert code == 4
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "NotReached" and err["best_n"] in (2, 3)


@pytest.fixture(scope="module")
def qtat_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("qtat")
    cfg = {"domain": {"type": "rectangle", "nx": 32, "ny": 32},
           "coefficients": {"sigma": BUMP}, "frequencies": [1.0]}
    code, out = _run(tmp, "recon-qtat", cfg)
    assert code == 0
    return out


def test_qtat_report(qtat_run, capsys):
    assert main(["report", str(qtat_run)]) == 0
    rep = io.read_json(qtat_run / "report.json")
    assert 0 <= rep["sigma_rel_L2_error"] < 0.10
    stored = rep["recon_qtat"]["reconstructions"][0]["sigma_rel_L2_error"]
    assert rep["sigma_rel_L2_error"] == pytest.approx(stored, rel=1e-12)


def test_report_idempotent(qtat_run):
    main(["report", str(qtat_run)])
    first = (qtat_run / "report.json").read_bytes()
    main(["report", str(qtat_run)])
    assert (qtat_run / "report.json").read_bytes() == first


def test_report_missing_artifacts(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", str(empty)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "MissingArtifact"


def test_same_seed_identical_json(tmp_path):
    cfg = {"domain": {"type": "rectangle", "nx": 4, "ny": 4},
           "momm": {"theta": 0.5, "D": 4.0, "trials": 20, "degree": 6}}
    _, a = _run(tmp_path, "momm", cfg, "--seed", "11", name="a")
    _, b = _run(tmp_path, "momm", cfg, "--seed", "11", name="b")
    _, c = _run(tmp_path, "momm", cfg, "--seed", "12", name="c")
    assert (a / "momm.json").read_bytes() == (b / "momm.json").read_bytes()
    assert io.read_json(a / "momm.json") != io.read_json(c / "momm.json")


def test_config_copied_into_run(tmp_path):
    cfg = {"domain": {"type": "rectangle", "nx": 4, "ny": 4}}
    code, out = _run(tmp_path, "mesh", cfg, "--set", "margin=0.2")
    assert code == 0
    saved = io.read_json(out / "config.json")
    assert saved["margin"] == 0.2 and saved["domain"] == cfg["domain"]
    assert saved["out"] == str(out)


def test_certify_and_heatmap(tmp_path):
    cfg = {"domain": {"type": "rectangle", "nx": 8, "ny": 8}, "frequencies": [0.0, 1.0]}
    code, out = _run(tmp_path, "certify", cfg)
    assert code == 0
    assert main(["report", str(out)]) == 0
    lines = (out / "heatmap_scores.csv").read_text().splitlines()
    # margin 0.1 on an 8x8 grid keeps the 7x7 interior vertices
    assert len(lines) == 8 and len(lines[0].split(",")) == 8


# -- io ----------------------------------------------------------------------------


def test_json_nan_and_ordering(tmp_path):
    p = tmp_path / "x.json"
    io.write_json(p, {"b": float("nan"), "a": np.float64(1.5), "c": np.arange(2)})
    text = p.read_text()
    assert text.endswith("\n") and text.index('"a"') < text.index('"b"')
    assert io.read_json(p) == {"a": 1.5, "b": None, "c": [0, 1]}


def test_field_csv_round_trip(tmp_path):
    m = generate_rectangle(3, 3)
    vals = np.arange(m.n_vertices) * (1 + 2j) / 7
    io.write_field_csv(tmp_path / "f.csv", m, vals)
    vid, pts, back = io.read_field_csv(tmp_path / "f.csv")
    assert np.array_equal(back, vals) and np.array_equal(pts, m.vertices)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "vertex_id,x,y,re,im"


def test_vtk_layout(tmp_path):
    m = generate_rectangle(2, 2)
    io.write_vtk(tmp_path / "m.vtk", m, {"u": np.ones(m.n_vertices) * 1j})
    text = (tmp_path / "m.vtk").read_text()
    assert "POINTS 9 double" in text and "CELLS 8 32" in text
    assert "SCALARS u_re double" in text and "SCALARS u_im double" in text
