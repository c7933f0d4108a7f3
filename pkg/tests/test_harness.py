import json
import math

import pytest

from loopspectra import cli
from loopspectra.algebra import Sector
from loopspectra.errors import ConfigInvalid, EmptyResults
from loopspectra.harness import (DiskStore, Table, emit_table, load_config, parse_sector,
                                 resolve_cache_dir, run_experiment)


def _spectrum_config(tmp_path, **extra):
    cfg = {"task": "spectrum", "model": {"n": 1.0, "K": 0.4, "w": 0.5}, "sizes": [3, 4],
           "sectors": ["<1,1>", "[1]"], "output": {"dir": str(tmp_path / "out")},
           "cache": {"enabled": False}}
    cfg.update(extra)
    return cfg


@pytest.mark.parametrize("raw, where", [
    ({"task": "spectra"}, "$.task"),
    ({"task": "spectrum", "model": {"n": 1.0}, "sizes": [4]}, "$.model.K"),
    ({"task": "spectrum", "model": {"n": 1.0, "K": 0.4, "colour": 1}, "sizes": [4]}, "$.model.colour"),
    ({"task": "spectrum", "model": {"n": 1.0, "K": 0.4}, "sizes": [14]}, "$.sizes"),
    ({"task": "spectrum", "model": {"n": 1.0, "K": 0.4}, "sizes": [4], "sectors": ["(x,0)"]},
     "$.sectors[0]"),
    ({"task": "spectrum", "model": {"n": 1.0, "K": {"from": 0.1, "to": 0.2}}, "sizes": [4]},
     "$.model.K.points"),
    ({"task": "spectrum", "model": {"n": 1.0, "K": 0.4}, "sizes": [4],
      "output": {"formats": ["xml"]}}, "$.output.formats"),
    ({"task": "find-kc", "model": {"n": 1.0, "K": 0.4}, "sizes": [4], "options": {"mod": 1}},
     "$.options.mod"),
])
def test_config_errors_name_the_path(raw, where):
    with pytest.raises(ConfigInvalid) as err:
        load_config(raw)
    assert where in str(err.value)


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        load_config(bad)
    with pytest.raises(ConfigInvalid):
        load_config(tmp_path / "missing.json")


def test_grid_values_and_hash_is_order_free():
    a = load_config({"task": "ceff-sweep", "model": {"n": 1, "K": {"from": 0, "to": 1, "points": 3}},
                     "sizes": [4, 5, 6]})
    b = load_config({"sizes": [4, 5, 6], "model": {"K": {"points": 3, "to": 1, "from": 0}, "n": 1},
                     "task": "ceff-sweep"})
    assert a.values("K") == [0.0, 0.5, 1.0]
    assert a.hash == b.hash


def test_parse_sector():
    assert parse_sector("[]") == Sector.identity()
    assert parse_sector("[21]") == Sector.brauer((2, 1))
    assert parse_sector("(1/2, 0)") == Sector.standard(0.5, 0)
    with pytest.raises(ValueError):
        parse_sector("{1}")


def test_emit_table_round_trip(tmp_path):
    t = Table("demo", ["a", "b"], [(1, 0.1234567891234), (2, float("1e-20"))], {"note": "x"})
    js = json.loads(emit_table(t, "json", tmp_path, "abc", {"n": 1.0}).read_text())
    assert js["rows"] == [[1, 0.1234567891234], [2, 1e-20]]
    assert js["config_hash"] == "abc" and js["params"] == {"n": 1.0}
    lines = emit_table(t, "csv", tmp_path, "abc").read_text().splitlines()
    assert lines[1] == "# config_hash abc"
    assert lines[3:] == ["a,b", "1,0.123456789", "2,1e-20"]
    with pytest.raises(EmptyResults):
        emit_table(Table("empty", ["a"], []), "csv", tmp_path)


def test_reruns_are_byte_identical(tmp_path):
    first = run_experiment(_spectrum_config(tmp_path))
    assert first.ok and len(first.files) == 2
    before = {p.name: p.read_bytes() for p in first.files}
    second = run_experiment(_spectrum_config(tmp_path))
    assert {p.name: p.read_bytes() for p in second.files} == before


def test_disk_store_survives_a_new_instance(tmp_path):
    key = ("lam0", 4, "[]", 0.4)
    DiskStore(tmp_path)[key] = 1.25
    fresh = DiskStore(tmp_path)
    assert key in fresh and fresh[key] == 1.25
    assert ("other",) not in fresh
    with pytest.raises(KeyError):
        fresh[("other",)]


def test_cached_spectrum_is_reused(tmp_path):
    cfg = _spectrum_config(tmp_path, cache={"enabled": True, "dir": str(tmp_path / "c")})
    a = run_experiment(cfg)
    assert any((tmp_path / "c").rglob("*.json"))
    b = run_experiment(cfg)
    assert a.tables[0].rows == b.tables[0].rows


def test_cache_dir_precedence(tmp_path, monkeypatch):
    cfg = load_config(_spectrum_config(tmp_path, cache={"dir": "from_config"}))
    monkeypatch.delenv("LOOPSPECTRA_CACHE", raising=False)
    assert str(resolve_cache_dir(cfg)) == "from_config"
    monkeypatch.setenv("LOOPSPECTRA_CACHE", "from_env")
    assert str(resolve_cache_dir(cfg)) == "from_env"
    assert str(resolve_cache_dir(cfg, "from_cli")) == "from_cli"
    off = load_config(_spectrum_config(tmp_path))
    assert resolve_cache_dir(off, "from_cli") is None


# ---------------------------------------------------------------------------
# command line

def _write(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_cli_defect_eigenvalue(capsys):
    assert cli.main(["defect-eig", "--r", "1/2", "--s", "0", "--n", "1"]) == 0
    re, im = map(float, capsys.readouterr().out.split())
    assert re == pytest.approx(-1) and abs(im) < 1e-12


def test_cli_kac(capsys):
    assert cli.main(["kac", "--n", "1", "--rmax", "2", "--smax", "1"]) == 0
    rows = [line.split(",") for line in capsys.readouterr().out.splitlines()[1:]]
    x = {(r, s): float(v) for r, s, _, _, v in rows}
    assert x[("1/2", "0")] == pytest.approx(0.125)
    assert cli.main(["kac"]) == 2


def test_cli_oracle_z(capsys):
    assert cli.main(["oracle-z", "--width", "2", "--height", "2"]) == 0
    assert capsys.readouterr().out.strip().startswith("1 * n^0 * K^0 + 2 * n^1 * K^2")
    assert cli.main(["oracle-z", "--n", "0.5", "--K", "0"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1.0)


def test_cli_task_mismatch_exits_with_two(tmp_path, capsys):
    path = _write(tmp_path, _spectrum_config(tmp_path))
    assert cli.main(["find-kc", "--config", path]) == 2
    assert "does not match" in capsys.readouterr().err


def test_cli_defect_checks(tmp_path):
    cfg = {"task": "defect-checks", "sizes": [2, 3, 4], "output": {"dir": str(tmp_path / "o"),
                                                                  "formats": ["json"]}}
    assert cli.main(["defect-checks", "--config", _write(tmp_path, cfg)]) == 0
    rows = json.loads((tmp_path / "o" / "defect_checks.json").read_text())["rows"]
    assert rows and all(r[-1] for r in rows)


def test_cli_oracle_crosscheck(tmp_path):
    cfg = {"task": "oracle-crosscheck", "model": {"n": 0.8},
           "patches": [{"width": 2, "height": 2}, {"width": 3, "height": 2, "defect_row": 0},
                       {"width": 2, "height": 3, "crossings": True, "w": 0.5}],
           "output": {"dir": str(tmp_path / "o"), "formats": ["csv"]}}
    assert cli.main(["oracle-crosscheck", "--config", _write(tmp_path, cfg)]) == 0
    assert (tmp_path / "o" / "oracle_crosscheck.csv").exists()


def test_cli_find_kc_by_gap_crossing(tmp_path):
    cfg = {"task": "find-kc", "model": {"n": 0.0, "K": {"from": 0.35, "to": 0.41, "points": 2},
                                        "w": 0.0},
           "sizes": [4, 5, 6], "options": {"mode": "GapCrossing"},
           "output": {"dir": str(tmp_path / "o"), "formats": ["json"]}, "cache": {"enabled": False}}
    assert cli.main(["find-kc", "--config", _write(tmp_path, cfg)]) == 0
    doc = json.loads((tmp_path / "o" / "kc.json").read_text())
    w, kc, c = doc["rows"][0]
    assert abs(kc - 0.379) < 0.01 and c is None
    assert len(doc["details"]["fits"][0]["Kc_series"]) == 2


def test_cli_exponents_small(tmp_path):
    cfg = {"task": "exponents", "model": {"n": 1.0, "K": math.sqrt(2) - 1, "w": 1.0},
           "sizes": [4, 5, 6], "sectors": ["[1]"], "options": {"k": 4, "levels": 1},
           "output": {"dir": str(tmp_path / "o"), "formats": ["json"]}, "cache": {"enabled": False}}
    assert cli.main(["exponents", "--config", _write(tmp_path, cfg)]) == 0
    rows = json.loads((tmp_path / "o" / "exponents_1.json").read_text())["rows"]
    assert abs(rows[0][2] - 0.125) < 0.01
