import json

import pytest

from confluid.cli import EXIT_FAIL, EXIT_INVALID, EXIT_OK, ExperimentConfig, main, parse_ell_arg, parse_z_arg
from confluid.errors import InvalidParameter

VERIFY = ["verify", "--family", "gca-scaling", "--ell", "5/2", "--d", "1", "--a", "0.5", "--c", "0.1",
          "--grid", "t=2:6:50,x=-10:10:100", "--tol", "1e-6"]
TRIPLE = json.dumps({"accel": [[0, 1], [0.8660254037844386, -0.5], [-0.8660254037844386, -0.5]]})


def files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_catalog_lists_nine_families(capsys):
    assert main(["catalog"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("\n") >= 9
    assert main(["catalog", "--json"]) == EXIT_OK
    assert len(json.loads(capsys.readouterr().out)) == 9


def test_catalog_family_schema(capsys):
    assert main(["catalog", "--family", "gca-scaling"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "ell" in out and "(1+4k)/2" in out
    assert main(["catalog", "--family", "nope"]) == EXIT_INVALID


def test_verify_example_passes(tmp_path):
    assert main(VERIFY + ["--out", str(tmp_path)]) == EXIT_OK
    names = set(files(tmp_path))
    assert {"report.json", "config.ini", "manifest.json", "residuals_Continuity.csv", "residuals_EulerGalilei.csv"} <= names
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] is True
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["outputs"]) >= {"report.json", "config.ini"}


def test_verify_tolerance_failure(tmp_path):
    args = VERIFY[:-1] + ["1e-30", "--out", str(tmp_path)]
    assert main(args) == EXIT_FAIL


def test_verify_rejects_bad_exponent(capsys):
    assert main(["verify", "--family", "lifshitz", "--z", "0.5", "--d", "1", "--a", "0.5", "--c", "0.1", "--grid", "t=1:2:3,x=-1:1:3"]) == EXIT_INVALID
    assert "dynamical exponent out of range" in capsys.readouterr().err


@pytest.mark.parametrize("ell", ["3/2", "2.5"])
def test_verify_rejects_bad_ell(ell):
    args = list(VERIFY)
    args[args.index("5/2")] = ell
    assert main(args) == EXIT_INVALID


def test_rerun_from_config_is_byte_identical(tmp_path, monkeypatch):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(VERIFY + ["--out", str(first), "--max-points", "500", "--seed", "4"]) == EXIT_OK
    monkeypatch.setenv("CFL_WORKERS", "3")
    assert main(["verify", "--config", str(first / "config.ini"), "--out", str(second)]) == EXIT_OK
    assert files(first) == files(second)


def test_config_round_trip():
    cfg = ExperimentConfig(command="verify", family="gca-scaling", params={"ell": "5/2", "d": "1"}, grid="t=1:2:3,x=0:1:2", seed=9)
    assert ExperimentConfig.from_ini(cfg.to_ini()).to_ini() == cfg.to_ini()


def test_transform_closed_form(tmp_path, capsys):
    args = ["transform", "--family", "gca-scaling", "--ell", "1/2", "--d", "1", "--a", "0.5", "--c", "0.1",
            "--grid", "t=1:3:20,x=-1:1:20", "--transform", '{"sl2": {"special_conformal": 0.3}}',
            "--check-closed-form", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    result = json.loads((tmp_path / "closed_form.json").read_text())
    assert result["passed"] and result["max_deviation"] <= 1e-12


def test_transform_traces_ten_orbits(tmp_path):
    args = ["transform", "--family", "gca-scaling", "--ell", "1", "--d", "2", "--a", "0.5", "--c", "0.1",
            "--grid", "t=1:2:3,x=-1:1:3", "--transform", TRIPLE, "--trace", "b=(0.1,0.1)..(0.1,1.0)",
            "--h", "1e-2", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    orbits = sorted(p for p in files(tmp_path) if p.startswith("orbit_"))
    assert len(orbits) == 10
    head = (tmp_path / orbits[0]).read_text().splitlines()[0]
    assert head == "t,x1,x2"


def test_identity_transform_is_byte_identical(tmp_path):
    args = ["transform", "--family", "gca-scaling", "--ell", "5/2", "--d", "2", "--a", "0.5", "--c", "0.1",
            "--grid", "t=2:3:4,x=-1:1:4", "--transform", '{"sl2": {}}', "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert (tmp_path / "base_field.csv").read_bytes() == (tmp_path / "image_field.csv").read_bytes()


def test_transform_rejects_bad_spec():
    args = ["transform", "--family", "gca-scaling", "--ell", "1", "--d", "1", "--a", "0.5", "--c", "0.1",
            "--grid", "t=1:2:3,x=-1:1:3", "--transform", "{oops"]
    assert main(args) == EXIT_INVALID


@pytest.mark.parametrize("which,count", [("fig1", 4), ("fig3", 2), ("fig5", 3)])
def test_figures(tmp_path, which, count):
    assert main(["figures", which, "--out", str(tmp_path)]) == EXIT_OK
    csvs = [p for p in files(tmp_path) if p.endswith(".csv")]
    assert len(csvs) == count


def test_figures_are_reproducible(tmp_path):
    assert main(["figures", "fig2", "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["figures", "fig2", "--out", str(tmp_path / "b"), "--workers", "2"]) == EXIT_OK
    assert files(tmp_path / "a") == files(tmp_path / "b")


def test_algebra_commands(capsys):
    assert main(["algebra", "gca", "--ell", "9/2", "--d", "3"]) == EXIT_OK
    assert "0 mismatches" in capsys.readouterr().out
    assert main(["algebra", "lifshitz", "--z", "7/3", "--d", "2"]) == EXIT_OK
    assert main(["algebra", "gca", "--ell", "2/3"]) == EXIT_INVALID
    capsys.readouterr()
    assert main(["algebra", "gca", "--ell", "1/2", "--json", "--no-jacobi"]) == EXIT_OK
    assert isinstance(json.loads(capsys.readouterr().out), dict)


def test_argument_parsers():
    assert str(parse_ell_arg("5/2")) == "5/2"
    with pytest.raises(InvalidParameter):
        parse_ell_arg("2.5")
    assert float(parse_z_arg("0.7")) == pytest.approx(0.7, abs=1e-12)
