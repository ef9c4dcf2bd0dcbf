import json

import pytest

import curvelab.cli as cli
from curvelab import generators as gen
from curvelab.cli import EXIT_CROSS, EXIT_INPUT, EXIT_OK, EXIT_THEOREM, main
from curvelab.graph import build_graph
from curvelab.heat import DecayReport
from curvelab.io import parse_graph, read_graph, write_graph


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def _json(capsys, *argv):
    code, out, _ = _run(capsys, *argv)
    assert code == EXIT_OK
    return json.loads(out)


@pytest.fixture
def graphs(tmp_path):
    paths = {}
    for name, G in {"k2": gen.complete(2), "c5": gen.cycle(5), "star": gen.star(3),
                    "house": build_graph([(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (3, 4, 1.5),
                                          (4, 0, 1.0), (1, 4, 0.75), (2, 5, 3.0)],
                                         [1.0, 2.0, 0.5, 1.0, 1.5, 1.0])}.items():
        p = tmp_path / f"{name}.txt"
        write_graph(p, G)
        paths[name] = p
    return paths


def test_curvature_pair_and_verify(capsys, graphs):
    doc = _json(capsys, "curvature", graphs["k2"], "--pair", 0, 1)
    assert doc["schema"] == "curvelab/1"
    assert doc["tables"]["curvature"][0]["kappa"] == 2.0
    doc = _json(capsys, "curvature", graphs["c5"], "--verify")
    rows = doc["tables"]["curvature"]
    assert len(rows) == 5 and all(r["kappa"] == pytest.approx(1.0) for r in rows)
    assert doc["max_discrepancy"] <= 1e-6


def test_curvature_witness_and_formats(capsys, graphs):
    doc = _json(capsys, "curvature", graphs["house"], "--witness")
    kinds = {r["kind"] for r in doc["tables"]["witness"]}
    assert "potential" in kinds
    code, out, _ = _run(capsys, "curvature", graphs["k2"], "--format", "csv")
    assert code == EXIT_OK and "0,1,2,dual_lp" in out
    code, out, _ = _run(capsys, "curvature", graphs["k2"], "--format", "table")
    assert code == EXIT_OK and "[curvature]" in out


def test_output_is_deterministic(capsys, graphs):
    a = _run(capsys, "curvature", graphs["house"], "--verify")[1]
    b = _run(capsys, "curvature", graphs["house"], "--verify")[1]
    assert a == b
    c = _run(capsys, "curvature", graphs["house"], "--jobs", 2)[1]
    d = _run(capsys, "curvature", graphs["house"])[1]
    assert c == d


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("curvegraph v1 2\nv 0 1\nv 1 1\ne 0 1 -1\n")
    code, out, err = _run(capsys, "curvature", bad)
    assert code == EXIT_INPUT and out == "" and "line 4" in err
    code, _, _ = _run(capsys, "curvature", tmp_path / "missing.txt")
    assert code == EXIT_INPUT


def test_bad_pair_is_input_error(capsys, graphs):
    assert _run(capsys, "curvature", graphs["k2"], "--pair", 0, 0)[0] == EXIT_INPUT
    assert _run(capsys, "curvature", graphs["k2"], "--pair", 0, 9)[0] == EXIT_INPUT


def test_profile_star(capsys, graphs):
    doc = _json(capsys, "profile", graphs["star"], "--root", 0)
    rows = doc["tables"]["profile"]
    assert rows[1]["kappa"] == 0.0 and rows[1]["phi"] == 3.0
    assert doc["violations"] == 0 and doc["transfer_holds"] and doc["diameter_holds"]


def test_heat_k2(capsys, graphs):
    doc = _json(capsys, "heat", graphs["k2"], "--times", 0.5, 1.0, "--recovery")
    assert doc["K"] == pytest.approx(2.0)
    assert doc["checks_passed"]
    assert all(r["holds"] for r in doc["tables"]["gradient_decay"])
    assert doc["recovery_error"] <= 1e-3
    assert _run(capsys, "heat", graphs["k2"], "--times", -1)[0] == EXIT_INPUT


def test_heat_cutoff_matches_dirichlet(capsys, graphs, tmp_path):
    phi = tmp_path / "phi.txt"
    phi.write_text("v 0 1\nv 1 1\nv 2 1\n")
    doc = _json(capsys, "heat", graphs["c5"], "--times", 0.3, "--cutoff", phi, "--f", "indicator:1")
    assert doc["tables"]["cutoff"][0]["dirichlet_diff"] <= 1e-6


def test_generate(capsys, tmp_path):
    out = tmp_path / "ge.txt"
    assert main(["generate", "g_epsilon", "--eps", "1", "--n", "20", "-o", str(out)]) == EXIT_OK
    assert read_graph(out).n == 21
    assert "generator: g_epsilon" in out.read_text()
    code, text, _ = _run(capsys, "generate", "finite_optimal", "--k", "geometric:0.5", "--n", 15)
    assert code == EXIT_OK
    assert parse_graph(text).deg.max() <= 3.0 + 1e-9
    code, _, _ = _run(capsys, "generate", "positive_curv_infinite", "--K", 1.0, "--n", 10)
    assert code == EXIT_OK
    code, _, err = _run(capsys, "generate", "finite_optimal", "--k", "harmonic")
    assert code == EXIT_INPUT
    a = _run(capsys, "generate", "random", "--n", 8, "--seed", 3, "--weights", "0.5,2")[1]
    b = _run(capsys, "generate", "random", "--n", 8, "--seed", 3, "--weights", "0.5,2")[1]
    assert a == b


def test_stochastic(capsys, tmp_path):
    path = tmp_path / "half.txt"
    main(["generate", "path", "--n", "201", "-o", str(path)])
    doc = _json(capsys, "stochastic", path)
    assert doc["status"] == "complete" and doc["decay_passed"]
    ge = tmp_path / "ge.txt"
    main(["generate", "g_epsilon", "--eps", "1", "--n", "200", "-o", str(ge)])
    doc = _json(capsys, "stochastic", ge)
    assert doc["status"] == "incomplete" and doc["decay_passed"] is False
    cyc = tmp_path / "c.txt"
    write_graph(cyc, gen.cycle(6))
    assert _run(capsys, "stochastic", cyc)[0] == EXIT_INPUT
    assert _json(capsys, "stochastic", cyc, "--root", 0)["N"] == 3


def test_transport(capsys, graphs, tmp_path):
    mu, nu = tmp_path / "mu.txt", tmp_path / "nu.txt"
    mu.write_text("v 0 0.1\nv 1 0.2\nv 2 0.3\nv 4 0.4\n")
    nu.write_text("v 2 0.1\nv 3 0.2\nv 4 0.3\nv 5 0.4\n")
    doc = _json(capsys, "transport", graphs["house"], mu, nu)
    assert doc["W"] == pytest.approx(0.9, abs=1e-12)
    assert doc["gap"] <= 1e-9
    nu.write_text("v 2 0.5\n")
    assert _run(capsys, "transport", graphs["house"], mu, nu)[0] == EXIT_INPUT


def test_cross_check_discrepancy_exit(capsys, graphs, monkeypatch):
    real = cli.cv.curvature

    def skewed(G, x, y, method="dual_lp"):
        rep = real(G, x, y, method)
        if method == "bruteforce":
            return type(rep)(**{**rep.__dict__, "kappa": rep.kappa + 1e-3})
        return rep

    monkeypatch.setattr(cli.cv, "curvature", skewed)
    code, out, err = _run(capsys, "curvature", graphs["c5"], "--verify")
    assert code == EXIT_CROSS and json.loads(out)["status"] == "discrepancy"


def test_failed_theorem_check_exit(capsys, graphs, monkeypatch):
    monkeypatch.setattr(cli.heat, "gradient_decay_check",
                        lambda *a, **k: DecayReport(2.0, [(0.5, 1.0, 0.5, False)]))
    code, out, _ = _run(capsys, "heat", graphs["k2"], "--times", 0.5)
    assert code == EXIT_THEOREM and json.loads(out)["checks_passed"] is False
