import csv
import io
import json

import pytest

from wcfbox.cli import EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, main
from wcfbox.protocols import cheat_capped
from wcfbox.serialize import dumps, protocol_to_dict


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_thm1_balanced_reports_one_twelfth(capsys):
    code, out, _ = run(capsys, "attack", "thm1", "--z", "1/2", "--eps", "0")
    assert code == EXIT_OK
    assert json.loads(out)["thm1"]["delta_lower"] == "1/12"


def test_z_out_of_range_is_usage_error(capsys):
    code, _, err = run(capsys, "attack", "thm1", "--z", "2/3", "--eps", "0")
    assert code == EXIT_USAGE and "z" in err


def test_bad_fraction_and_unknown_flag(capsys):
    assert run(capsys, "attack", "thm1", "--z", "abc")[0] == EXIT_USAGE
    assert run(capsys, "attack", "thm1", "--nope")[0] == EXIT_USAGE
    assert run(capsys)[0] == EXIT_USAGE


def test_value_mismatch_exits_one(capsys):
    # the mirror flip over-rewards Bob away from z = 1/2, so the optimality check fails
    code, _, err = run(capsys, "attack", "thm1", "--z", "1/4", "--eps", "1/8",
                       "--convention", "mirror", "--brute")
    assert code == EXIT_MISMATCH
    assert "expected 27/32, got 29/32" in err


def test_unbalanced_zero_eps(capsys):
    code, out, _ = run(capsys, "unbalanced", "--z-bits", "01", "--eps", "0")
    assert code == EXIT_OK and json.loads(out)["eps_prime"] == "0"


def test_unbalanced_non_canonical(capsys):
    assert run(capsys, "unbalanced", "--z-bits", "010", "--eps", "0")[0] == EXIT_USAGE


def test_thm1_sweep_rows(capsys):
    code, out, _ = run(capsys, "sweep", "thm1", "--z", "1/4,1/3,1/2", "--eps", "0,z/2", "-f", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and len(rows) == 6
    assert [(r["z"], r["eps"]) for r in rows] == [
        ("1/4", "0"), ("1/4", "1/8"), ("1/3", "0"), ("1/3", "1/6"), ("1/2", "0"), ("1/2", "1/4")]
    assert all(r["status"] == "ok" for r in rows)
    assert rows[4]["delta_lower"] == "1/12" and rows[4]["delta_lower_decimal"].startswith("0.0833")


def test_empty_grid_header_only(capsys):
    code, out, _ = run(capsys, "sweep", "thm1", "-f", "csv")
    assert code == EXIT_OK and out.count("\n") == 1 and out.startswith("z,eps,status")


def test_unbalanced_sweep_counts(capsys):
    code, out, _ = run(capsys, "sweep", "unbalanced", "--max-n", "4", "--eps", "1/20", "-f", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and len(rows) == 2 + 4 + 8 + 16
    bad = [r for r in rows if r["status"] != "ok"]
    assert bad and all(r["status"].startswith("error") for r in bad)
    assert {r["bits"] for r in rows if r["status"] == "ok"} >= {"1", "01", "011", "0101"}


def test_sweep_cell_error_does_not_abort(capsys):
    code, out, _ = run(capsys, "sweep", "thm1", "--z", "1/2,2/3", "--eps", "0", "-f", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and len(rows) == 2
    assert rows[0]["status"] == "ok" and rows[1]["status"].startswith("error")


def test_identical_config_identical_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["sweep", "thm1", "--z", "1/3", "--eps", "0,z/2", "-f", "csv", "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]


def test_seeded_sampling_reproducible(tmp_path, capsys):
    sysfile = tmp_path / "s.json"
    sysfile.write_text(dumps(protocol_to_dict(cheat_capped("1/3", "1/10"))))
    outs = []
    for _ in range(2):
        code, out, _ = run(capsys, "engine", "--system", str(sysfile), "--samples", "200", "--seed", "7")
        assert code == EXIT_OK
        outs.append(out)
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["samples"]["n"] == 200


def test_seed_from_environment(tmp_path, capsys, monkeypatch):
    sysfile = tmp_path / "s.json"
    sysfile.write_text(dumps(protocol_to_dict(cheat_capped("1/2"))))
    monkeypatch.setenv("SEED", "3")
    code, out, _ = run(capsys, "engine", "--system", str(sysfile), "--samples", "10")
    assert code == EXIT_OK and json.loads(out)["samples"]["seed"] == 3
    monkeypatch.setenv("THREADS", "x")
    assert run(capsys, "standalone", "--toy", "comb_toy")[0] == EXIT_USAGE


def test_poset_dot_and_cuts(capsys):
    code, out, _ = run(capsys, "poset", "--elements", "a,b,c", "--relations", "a<b,a<c", "-f", "dot")
    assert code == EXIT_OK and out.lstrip().startswith("digraph") and "->" in out
    code, out, _ = run(capsys, "poset", "--elements", "a,b,c", "--relations", "a<b,a<c", "--cuts")
    assert len(json.loads(out)["cuts"]) == 5


def test_poset_cycle_rejected(capsys):
    assert run(capsys, "poset", "--elements", "a,b", "--relations", "a<b,b<a")[0] == EXIT_USAGE


def test_standalone_csv(capsys):
    code, out, _ = run(capsys, "standalone", "--toy", "cheat_capped", "--z", "1/2", "--eps", "1/10",
                       "-f", "csv")
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and row["p_star_alice"] == "3/5"


def test_resource_audit(capsys):
    code, out, _ = run(capsys, "resource", "audit", "--z", "1/2", "--eps", "1/10", "--strict")
    j = json.loads(out)
    assert code == EXIT_OK and j["ok"] is True


def test_mitm_toy(capsys):
    code, out, _ = run(capsys, "attack", "mitm", "--z", "1/2")
    j = json.loads(out)
    assert code == EXIT_OK and j["equal"] is True


@pytest.mark.parametrize("demo", ["sequential", "interleaved"])
def test_global_demo(capsys, demo):
    code, out, _ = run(capsys, "global-check", "--demo", demo, "--eps", "1/10")
    j = json.loads(out)
    assert code == EXIT_OK and j["partition_holds"] == (demo == "sequential")


def test_global_check_on_file(tmp_path, capsys):
    sysfile = tmp_path / "s.json"
    sysfile.write_text(dumps(protocol_to_dict(cheat_capped("1/2", "1/10"))))
    code, out, _ = run(capsys, "global-check", "--system", str(sysfile), "--pi-wires", "ra,rb,cA,cB",
                       "--coin-a", "cA@ta", "--coin-b", "cB@tb", "--z", "1/2", "--eps", "1/10")
    j = json.loads(out)
    assert code == EXIT_OK and j["partition_holds"] is True


def test_write_to_file(tmp_path):
    out = tmp_path / "r.json"
    assert main(["unbalanced", "--z-bits", "011", "--eps", "1/10", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["bits"] == "011"
