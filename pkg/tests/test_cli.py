import json
import subprocess
import sys

import pytest

from conftest import AMBIGUOUS, TANGLED, WRITE_SKEW
from isochk.cli import main
from isochk.history import build_history, serialize_history


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, sess in (("ambiguous", AMBIGUOUS), ("tangled", TANGLED), ("ws", WRITE_SKEW)):
        p = tmp_path / f"{name}.json"
        p.write_text(serialize_history(build_history(sess)))
        out[name] = str(p)
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    out["bad"] = str(bad)
    return out


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_verify_exit_codes(files, capsys):
    code, out, _ = run(capsys, "verify", "--isolation", "ser", files["ambiguous"])
    assert code == 0
    assert "witness" in json.loads(out)
    code, out, err = run(capsys, "verify", "--isolation", "ser", files["tangled"])
    assert code == 1
    assert "core" in json.loads(out)
    assert "cycle:" in err
    code, _, _ = run(capsys, "verify", "--disable-pruning", "--disable-2width",
                     "--disable-polarity", files["ambiguous"])
    assert code == 0
    code, _, err = run(capsys, "verify", files["bad"])
    assert code == 3 and "input error" in err
    code, _, _ = run(capsys, "verify", str(files["ambiguous"]) + ".missing")
    assert code == 3


def test_timeout_exit(files, capsys):
    # any positive timeout below the clock resolution expires before solving starts
    code, out, _ = run(capsys, "verify", "--timeout", "1e-9", files["ambiguous"])
    assert code == 2
    assert json.loads(out)["satisfied"] is None


def test_write_skew_isolation(files, capsys):
    assert run(capsys, "verify", "--isolation", "si", files["ws"])[0] == 0
    assert run(capsys, "verify", "--isolation", "ser", files["ws"])[0] == 1


def test_batch(files, capsys, tmp_path):
    stats = tmp_path / "stats.json"
    code, out, _ = run(capsys, "verify", "-q", "--jobs", "2", "--stats-out", str(stats),
                       files["ambiguous"], files["tangled"])
    assert code == 1
    docs = [json.loads(l) for l in out.splitlines()]
    assert [d["satisfied"] for d in docs] == [True, False]
    assert len(json.loads(stats.read_text())) == 2


def test_gen_and_verify(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["gen", "--preset", "bl", "--sessions", "3", "--txns", "5", "--ops", "4",
                 "--keys", "10", "--seed", "1", "--out", str(out)]) == 0
    assert main(["verify", "-q", "--out", str(tmp_path / "v.json"), str(out)]) == 0
    bad = tmp_path / "bad.json"
    assert main(["gen", "--sessions", "3", "--txns", "5", "--ops", "4", "--keys", "10",
                 "--inject", "LostUpdateTrace", "--out", str(bad)]) == 0
    assert main(["verify", "-q", "--out", str(tmp_path / "v2.json"), str(bad)]) == 1
    assert main(["gen", "--read-frac", "2"]) == 3


def test_oracle(files, capsys):
    assert run(capsys, "oracle", files["ambiguous"])[0] == 0
    assert run(capsys, "oracle", "--method", "permutation", files["tangled"])[0] == 1
    assert run(capsys, "oracle", "--isolation", "si", files["ws"])[0] == 0


def test_stats(files, capsys, tmp_path):
    js, csv = tmp_path / "s.json", tmp_path / "h.csv"
    code, out, _ = run(capsys, "stats", "--json-out", str(js), "--csv", str(csv),
                       files["ambiguous"], files["tangled"])
    assert code == 1
    assert "conflicts(H)" in out and "pk:" in out
    report = json.loads(js.read_text())
    assert [r["input"] for r in report["inputs"]] == [files["ambiguous"], files["tangled"]]
    assert csv.read_text().startswith("width,count")


def test_module_entry_point(files):
    r = subprocess.run([sys.executable, "-m", "isochk", "verify", "-q", files["tangled"]],
                       capture_output=True, text=True, env={"ISOCHK_LOG": "DEBUG",
                                                            "PATH": ""})
    assert r.returncode == 1
    assert json.loads(r.stdout)["satisfied"] is False
