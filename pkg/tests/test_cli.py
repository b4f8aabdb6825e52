import csv
import json

import pytest
import yaml

from conftest import box_bc
from main import EXIT_CAP, EXIT_OK, EXIT_VALIDATION, run
from simplicial import io as sio
from simplicial.height import Slope, floor_field
from simplicial.lattice import Lattice, Region
from simplicial.regions import FixedBoundary


@pytest.fixture
def cli(tmp_path):
    def invoke(*argv, out="result.txt"):
        out_path = tmp_path / out
        code = run(["--output_dir", str(tmp_path), "--out", str(out_path), *argv])
        text = out_path.read_text() if out_path.exists() else ""
        return code, text

    return invoke


def test_count_hexagon(cli, tmp_path):
    code, text = cli("count", "--n", "2", "--offset", "2")
    assert code == EXIT_OK
    data = json.loads(text)
    assert data["result"] == {"count": "2", "sites": 1}
    assert data["meta"]["tool"] == "simplicial"
    assert data["meta"]["d"] == 2
    record = yaml.safe_load((tmp_path / "config.yaml").read_text())
    assert record["exit_code"] == EXIT_OK
    assert record["command"] == "count"


def test_enumerate_writes_one_line_per_field(cli):
    code, text = cli("enumerate", "--n", "2", "--offset", "2")
    assert code == EXIT_OK
    lines = text.strip().split("\n")
    assert len(lines) == 3
    assert json.loads(lines[0])["command"] == "enumerate"
    assert {json.loads(line)["d"] for line in lines[1:]} == {2}


def test_validation_exit_codes(cli):
    assert cli("count", "--slope", "2,-1,-1")[0] == EXIT_VALIDATION
    assert cli("count", "--offset", "abc")[0] == EXIT_VALIDATION
    assert cli("--seed", "-1", "count")[0] == EXIT_VALIDATION
    assert cli("count", "--bc", "missing.json")[0] == EXIT_VALIDATION
    assert cli("identity-check", "--box", "Pi", "--n", "1")[0] == EXIT_VALIDATION


def test_invalid_boundary_and_field_files(cli, tmp_path):
    data = sio.boundary_to_json(box_bc(2, 3))
    data["reference"]["overrides"] = [[[0, 1, 0], 4]]
    bad_bc = tmp_path / "bad_bc.json"
    bad_bc.write_text(json.dumps(data))
    assert cli("sample", "--bc", str(bad_bc), "--cftp")[0] == EXIT_VALIDATION
    assert cli("count", "--bc", str(bad_bc))[0] == EXIT_VALIDATION
    bad_field = tmp_path / "bad_field.json"
    bad_field.write_text(json.dumps({"d": 2, "slope": ["0", "0", "0"], "overrides": [[[0, 0, 0], 6]]}))
    assert cli("render", "--field", str(bad_field))[0] == EXIT_VALIDATION
    ring = tmp_path / "ring.json"
    lattice = Lattice.of(2)
    region = Region(frozenset(lattice.ball(lattice.origin, 2) - {lattice.origin}))
    ring.write_text(json.dumps(sio.boundary_to_json(FixedBoundary(region, floor_field(Slope.zero(2))))))
    assert cli("identity-check", "--bc", str(ring), "--x", "1,0,0")[0] == EXIT_VALIDATION


def test_cap_exit_code(cli, tmp_path):
    code, _ = cli("--cap", "3", "count", "--n", "3")
    assert code == EXIT_CAP
    record = yaml.safe_load((tmp_path / "config.yaml").read_text())
    assert record["exit_code"] == EXIT_CAP


@pytest.mark.parametrize("mode", [[], ["--cftp"]])
def test_samples_are_reproducible(cli, mode):
    argv = ["--seed", "5", "sample", "--n", "3", "--samples", "3", "--steps", "10", "--burnin", "5", *mode]
    code, first = cli(*argv, out="first.ndjson")
    assert code == EXIT_OK
    _, second = cli(*argv, out="second.ndjson")
    assert first == second
    lines = first.strip().split("\n")
    assert len(lines) == 4
    assert [json.loads(line)["index"] for line in lines[1:]] == [0, 1, 2]


def test_periodic_samples(cli):
    code, text = cli("sample", "--periodic", "--n", "1", "--samples", "2", "--steps", "5", "--burnin", "0")
    assert code == EXIT_OK
    lines = text.strip().split("\n")
    assert len(lines) == 3
    assert len(json.loads(lines[1])["values"]) == 9


def test_kasteleyn_and_identity(cli):
    code, text = cli("kasteleyn-verify", "--n", "2", "--offset", "2")
    assert code == EXIT_OK
    result = json.loads(text)["result"]
    assert result["equal"] is True
    assert result["Z"] == "2"
    code, text = cli("identity-check", "--n", "2", "--offset", "2")
    assert code == EXIT_OK
    result = json.loads(text)["result"]
    assert result["variance"] == {"lhs": "9/4", "rhs": "9/4", "equal": True}
    assert result["x"] == [1, 1, 0]


def test_swap_stats(cli):
    code, text = cli("swap-stats", "--n", "3", "--samples", "3", "--steps", "50")
    assert code == EXIT_OK
    lines = text.strip().split("\n")
    assert lines[0].startswith("# ")
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 3
    assert all(row["conserved"] == "1" and row["valid"] == "1" for row in rows)


def test_tension_csv(cli):
    code, text = cli("tension", "--n-list", "2,3")
    assert code == EXIT_OK
    lines = text.strip().split("\n")
    assert json.loads(lines[0][2:])["command"] == "tension"
    assert lines[1] == "n,a,count,sigma_n,count_a0,sigma_n_a0"
    rows = list(csv.reader(lines[2:]))
    assert [row[0] for row in rows] == ["2", "3"]
    assert rows[0][2] == "1"


def test_render_writes_svg(cli, tmp_path):
    code, text = cli("--seed", "1", "render", "--n", "3", "--name", "sample")
    assert code == EXIT_OK
    assert (tmp_path / "sample.svg").exists()
    assert json.loads(text)["result"]["lozenges"] > 0
    code, _ = cli("render", "--d", "3", "--n", "2")
    assert code == EXIT_VALIDATION
