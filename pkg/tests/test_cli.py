import numpy as np
import pytest

from staticprop import absorption, wick
from staticprop.cli import RunConfig, _fmt, main, parse_config, run
from staticprop.errors import ParseError, ValidationError
from staticprop.parallel import ordered_map, thread_count


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_parse_defaults():
    cfg = parse_config("model = M1\nT = 10\ns = 1.0")
    assert (cfg.model, cfg.T, cfg.s) == ("M1", 10.0, 1.0)
    assert cfg.epsilons == absorption.DEFAULT_EPSILONS
    assert cfg.thetas == wick.DEFAULT_THETAS
    assert cfg.density == 16.0


def test_parse_rejects_small_s():
    with pytest.raises(ValidationError, match="s must exceed 1/2"):
        parse_config("s = 0.4")


def test_parse_epsilon_list():
    assert parse_config("epsilons = 1e-1,1e-2,1e-3").epsilons == (0.1, 0.01, 0.001)


def test_parse_fields_and_comments():
    cfg = parse_config("# lattice\nmodel = M1   # base\nY = 2.0\nV = 0.1\nbeta = 1,1,1,1,1,1,1,1\n")
    m = cfg.build_model()
    assert m.Y[0] == 2.0 and m.V[0] == 0.1
    np.testing.assert_array_equal(m.beta, np.ones(8))


def test_parse_custom_model():
    cfg = parse_config("model = custom\nn = 4\ndx = 0.5\nboundary = dirichlet\nY = 1.0")
    assert cfg.build_model().n == 4
    with pytest.raises(ValidationError):
        parse_config("model = custom")


@pytest.mark.parametrize("text,lineno", [
    ("model = M1\nfoo = 3", 2),
    ("T = 1\nT = 2", 2),
    ("model M1", 1),
    ("\n\nepsilons = 1e-1,abc", 3),
    ("T = ten", 1),
    ("T =", 1),
])
def test_parse_errors_carry_line_number(text, lineno):
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert info.value.lineno == lineno


@pytest.mark.parametrize("text", [
    "T = 0",
    "epsilons = 1e-3,1e-2",
    "epsilons = 1e-1,-1e-2",
    "thetas = 2.0,0.1",
    "model = M7",
    "model = M1\nbeta = -1",
    "model = M1\nV = 0.1,0.2",
])
def test_validation_errors(text):
    with pytest.raises(ValidationError):
        parse_config(text)


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, -2.5e-300, 1e22, 0.0):
        assert float(_fmt(x)) == x
        assert len(_fmt(x).replace("-", "").replace(".", "").split("e")[0]) <= 17


def test_check_m1_exit_zero(tmp_path, capsys):
    assert main(["check", "--config", write(tmp_path, "model = M1")]) == 0
    out = capsys.readouterr().out
    assert out.strip().endswith("PASS")
    status, results = run("check", parse_config("model = M1"))
    assert status == 0 and abs(results[0].data["C"] - 1.0) <= 1e-12


def test_check_degenerate_exit_one(tmp_path):
    assert main(["check", "--config", write(tmp_path, "model = M1\nY = 0")]) == 1


def test_degenerate_spectrum_exit_one(tmp_path):
    assert main(["spectrum", "--config", write(tmp_path, "model = M1\nY = 0")]) == 1


def test_config_and_io_errors_exit_two(tmp_path, capsys):
    assert main(["check", "--config", write(tmp_path, "s = 0.4")]) == 2
    assert main(["check", "--config", write(tmp_path, "bogus = 1")]) == 2
    assert main(["check", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert "error" in capsys.readouterr().err


def test_identities_m0(tmp_path):
    out = tmp_path / "out"
    assert main(["identities", "--config", write(tmp_path, "model = M0\nT = 3"), "--out", str(out)]) == 0
    _, results = run("identities", parse_config("model = M0\nT = 3"))
    assert results[0].data["identity_suite"]["max_residual"] <= 1e-12
    assert (out / "residuals.csv").read_text().startswith("kind,E_residual,G_residual")


def test_kernels_csv_is_deterministic(tmp_path):
    cfg = write(tmp_path, "model = M1\nT = 2\nkernel_samples = 9")
    assert main(["kernels", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["kernels", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert len(names) == 14
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_spectrum_csv(tmp_path):
    out = tmp_path / "out"
    assert main(["spectrum", "--config", write(tmp_path, "model = M0"), "--out", str(out)]) == 0
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "operator,index,value"
    assert len(lines) == 1 + 1 + 2


def test_wick_command_thread_independent(tmp_path, monkeypatch):
    cfg = write(tmp_path, "model = M0\nT = 2")
    monkeypatch.setenv("STATICPROP_THREADS", "1")
    assert main(["wick", "--config", cfg, "--out", str(tmp_path / "one")]) == 0
    monkeypatch.setenv("STATICPROP_THREADS", "4")
    assert main(["wick", "--config", cfg, "--out", str(tmp_path / "four")]) == 0
    assert (tmp_path / "one" / "wick.csv").read_bytes() == (tmp_path / "four" / "wick.csv").read_bytes()


@pytest.mark.parametrize("raw", ["0", "-2", "many"])
def test_bad_thread_env_exits_two(tmp_path, monkeypatch, raw):
    monkeypatch.setenv("STATICPROP_THREADS", raw)
    assert main(["check", "--config", write(tmp_path, "model = M1")]) == 2


def test_thread_count_and_order(monkeypatch):
    monkeypatch.delenv("STATICPROP_THREADS", raising=False)
    assert thread_count() >= 1
    monkeypatch.setenv("STATICPROP_THREADS", "3")
    assert thread_count() == 3
    assert ordered_map(lambda x: x * x, range(10)) == [x * x for x in range(10)]


def test_run_rejects_unknown_command():
    with pytest.raises(ValidationError):
        run("plot", RunConfig())


def test_report_writes_summary(tmp_path):
    out = tmp_path / "rep"
    assert main(["report", "--config", write(tmp_path, "model = M2"), "--out", str(out)]) == 0
    summary = (out / "summary.txt").read_text()
    assert "[FAIL]" not in summary
    for name in ("check", "spectrum", "kernels", "identities", "lap", "wick"):
        assert (out / f"{name}.json").exists()
