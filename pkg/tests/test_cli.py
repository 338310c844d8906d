import csv
import io
import json
import math

import numpy as np
import pytest

from wavrel import cli

from conftest import ANNULUS, DISK


def _run(argv):
    buf = io.StringIO()
    code = cli.run(argv, stdout=buf)
    return code, json.loads(buf.getvalue()) if buf.getvalue().strip() else None


@pytest.fixture()
def files(tmp_path):
    out = {}
    for name, spec in (("disk", DISK), ("annulus", ANNULUS), ("misner", {"metric": "misner"})):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(spec))
        out[name] = str(p)
    out["dir"] = tmp_path
    return out


def test_light_points_report(files):
    code, rep = _run(["light-points", "--domain", files["disk"]])
    assert code == 0
    assert rep["schema"] == 1 and rep["result"]["count"] == 4
    assert rep["domain_hash"]
    assert "timings_s" not in rep


def test_reports_are_byte_identical(files):
    a, b = io.StringIO(), io.StringIO()
    argv = ["verify", "--suite", "defect", "--domain", files["annulus"], "--K", "4", "--M", "512"]
    cli.run(argv, stdout=a)
    cli.run(argv, stdout=b)
    assert a.getvalue() == b.getvalue()


def test_timings_are_opt_in(files):
    _, rep = _run(["verify", "--suite", "isotropy", "--domain", files["disk"], "--K", "4",
                   "--M", "512", "--timings"])
    assert "isotropy" in rep["timings_s"]


@pytest.mark.parametrize("name, want", [("disk", 0), ("annulus", 2)])
def test_verify_defect(files, name, want):
    code, rep = _run(["verify", "--suite", "defect", "--domain", files[name], "--K", "4", "--M", "512"])
    assert code == 0
    assert rep["result"]["defect"] == want
    assert rep["result"]["defect_completed"] == 0
    assert rep["result"]["label"] == "truncation surrogate"


def test_verify_defect_on_misner(files):
    code, rep = _run(["verify", "--suite", "defect", "--domain", files["misner"], "--K", "8"])
    assert code == 0
    assert rep["result"]["defect"] == 34
    assert rep["result"]["lagrangian"] is False


def test_verify_isotropy_tolerance_failure_exits_1(files):
    code, rep = _run(["verify", "--suite", "isotropy", "--domain", files["disk"], "--K", "4",
                      "--M", "512", "--tol", "0"])
    assert code == 1
    assert rep["suites"][0]["pass"] is False


@pytest.mark.parametrize("argv", [
    ["light-points"],
    ["light-points", "--domain", "/nonexistent.json"],
    ["verify", "--suite", "bogus", "--domain", "x"],
    ["diamond", "--f", "tan:2"],
    ["diamond", "--box", "1", "0", "0", "1"],
    ["frobnicate"],
])
def test_malformed_input_exits_2(argv):
    assert _run(argv)[0] == 2


def test_bad_domain_json_exits_2(files):
    p = files["dir"] / "bad.json"
    p.write_text('{"curves": [{"kind": "circle", "r": -1}]}')
    code, rep = _run(["light-points", "--domain", str(p)])
    assert code == 2
    assert "positive" in rep["error"]


def test_involution_csv(files):
    out = files["dir"] / "inv.csv"
    code, _ = _run(["involution", "--domain", files["disk"], "--sign", "minus", "--grid", "256",
                    "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# domain=")
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 256
    r = rows[0]
    assert abs(float(r["target_t"]) - math.pi / 2) < 1e-10


def test_orbit_csv(files):
    out = files["dir"] / "orbit.csv"
    code, rep = _run(["orbit", "--domain", files["disk"], "--start", "0.3", "--iters", "4",
                      "--out", str(out)])
    assert code == 0
    assert rep["result"]["period"] == 2
    # domain line, header, start and four iterates
    assert len(out.read_text().splitlines()) == 7


def _field_csv(path, digest, phi, phin, M=256):
    t = np.arange(M) * 2 * math.pi / M
    with open(path, "w") as fh:
        fh.write(f"# domain={digest}\ncomponent,t,phi,phi_n\n")
        for a, b, c in zip(t, phi(t), phin(t)):
            fh.write(f"0,{float(a)!r},{float(b)!r},{float(c)!r}\n")


def test_pairing_between_field_files(files):
    _, rep = _run(["light-points", "--domain", files["disk"]])
    dig = rep["domain_hash"]
    a, b = files["dir"] / "a.csv", files["dir"] / "b.csv"
    _field_csv(a, dig, lambda t: 1 + 0 * t, lambda t: 0 * t)
    _field_csv(b, dig, lambda t: 0 * t, lambda t: np.cos(2 * t))
    code, rep = _run(["pairing", "--domain", files["disk"], "--a", str(a), "--b", str(b)])
    assert code == 0
    assert abs(rep["result"]["omega"] + math.pi) < 1e-12


def test_pairing_rejects_foreign_fields(files):
    a = files["dir"] / "a.csv"
    _field_csv(a, "0000000000000000", np.sin, np.cos)
    assert _run(["pairing", "--domain", files["disk"], "--a", str(a), "--b", str(a)])[0] == 2


def test_diamond_identity_example():
    code, rep = _run(["diamond", "--hj", "--f", "id", "--g", "id", "--box", "0", "1", "0", "1"])
    assert code == 0
    assert rep["result"]["vertices"] == [0.0, 1.0, 2.0, 1.0]
    assert rep["result"]["hj_action"] == -1.0


def test_flow_files(files):
    src, dst = files["dir"] / "in.csv", files["dir"] / "out.csv"
    M = 512
    t = np.arange(M) * 2 * math.pi / M
    with open(src, "w") as fh:
        fh.write("theta,phi,phi_n\n")
        for a in t:
            v = math.sqrt(2) * math.cos(a)
            fh.write(f"{float(a)!r},{v!r},{v!r}\n")
    code, rep = _run(["flow", "--xi", str(math.log(2)), "--in", str(src), "--out", str(dst)])
    assert code == 0
    rows = list(csv.DictReader(open(dst)))
    phi = np.array([float(r["phi"]) for r in rows])
    assert np.max(np.abs(phi - math.sqrt(2) * 0.5 * np.cos(t))) < 1e-10


def test_flow_outside_C0_fails_with_1(files):
    src = files["dir"] / "in.csv"
    t = np.arange(256) * 2 * math.pi / 256
    with open(src, "w") as fh:
        fh.write("theta,phi,phi_n\n")
        for a in t:
            fh.write(f"{float(a)!r},{math.cos(a)!r},0.0\n")
    code, rep = _run(["flow", "--xi", "0.5", "--in", str(src)])
    assert code == 1


def test_misner_subcommand(files):
    code, rep = _run(["misner", "--defect", "--K", "3"])
    assert code == 0 and rep["result"]["defect"] == 14
    code, rep = _run(["misner", "--defect", "--K", "3", "--part", "upper"])
    assert rep["result"]["defect"] == 7
    out = files["dir"] / "trace.csv"
    code, rep = _run(["misner", "--trace", "0.3", "--sign", "minus", "--out", str(out)])
    assert rep["result"]["outcome"] == "asymptotic"
    assert out.read_text().startswith("x,y")
