"""Command-line interface tests (mostly in-process via main(argv))."""

import csv
import io
import subprocess
import sys

import pytest

from noma_ec.cli import CSV_HEADER, main

FAST_VALIDATE = ["validate", "--snr-db", "0:20:10", "--mc-samples", "100000"]


def _rows(capsys):
    out = capsys.readouterr().out
    reader = csv.reader(io.StringIO(out))
    header = tuple(next(reader))
    assert header == CSV_HEADER
    return [dict(zip(header, row)) for row in reader]


# ---------------------------------------------------------------------------
# curves


def test_curves_default_grid(capsys):
    assert main(["curves"]) == 0
    rows = _rows(capsys)
    assert len(rows) == 164  # 41 SNR points x 2 schemes x 2 users
    assert {r["scheme"] for r in rows} == {"noma", "oma"}
    assert {r["user"] for r in rows} == {"1", "2"}
    assert all(r["metric"] == "ec" for r in rows)
    assert all(r["std_error"] == "" for r in rows)  # closed forms carry no se
    for r in rows:
        float(r["value"])  # every value parses
        assert len(r["value"]) <= 16  # %.9g formatting


def test_curves_custom_grid_and_beta(capsys):
    assert main(["curves", "--snr-db", "0:10:5", "--beta", "-2", "--scheme", "noma"]) == 0
    rows = _rows(capsys)
    assert len(rows) == 6  # 3 points x 1 scheme x 2 users
    assert all(r["beta"] == "-2" for r in rows)


def test_negative_value_flags_parse(capsys):
    # "--beta -0.5" must not be read as a new flag
    assert main(["curves", "--snr-db", "-10:-5:5", "--beta", "-0.5"]) == 0
    rows = _rows(capsys)
    assert {r["rho_db"] for r in rows} == {"-10", "-5"}


# ---------------------------------------------------------------------------
# validate


def test_validate_structure(capsys):
    assert main(FAST_VALIDATE) == 0
    rows = _rows(capsys)
    # 3 SNR points x 1 scheme (noma default) x 2 users x 4 metric rows
    assert len(rows) == 24
    metrics = [r["metric"] for r in rows[:4]]
    assert metrics == ["ec_closed", "ec_mc", "abs_diff", "bound"]
    for r in rows:
        if r["metric"] == "ec_mc":
            assert r["std_error"] != "" and r["seed"] == "12345"
            assert r["n_samples"] == "100000"
        if r["metric"] == "abs_diff":
            assert r["pass"] == "true"
            assert float(r["value"]) >= 0.0
        else:
            assert r["pass"] in ("", "true")


# ---------------------------------------------------------------------------
# lemma


def test_lemma_passing_check_exits_zero(capsys):
    assert main(["lemma", "--id", "2b"]) == 0
    rows = _rows(capsys)
    assert [r["metric"] for r in rows] == ["2b_predicted", "2b_measured"]
    assert rows[1]["pass"] == "true"


def test_lemma_failing_check_exits_two(capsys):
    assert main(["lemma", "--id", "2c"]) == 2
    rows = _rows(capsys)
    assert rows[1]["pass"] == "false"


# ---------------------------------------------------------------------------
# pairing


def test_pairing_enumerates_layouts(capsys):
    assert main(["pairing", "--m", "4", "--snr-db", "10:20:10",
                 "--mc-samples", "100000"]) == 0
    rows = _rows(capsys)
    assert len(rows) == 6  # 2 SNR points x 3 layouts
    assert {r["scheme"] for r in rows} == {"1-2+3-4", "1-3+2-4", "1-4+2-3"}
    assert all(r["metric"] == "w_n_minus_w_o" for r in rows)
    assert all(r["std_error"] != "" for r in rows)


# ---------------------------------------------------------------------------
# self-test


def test_selftest_all_green(capsys):
    assert main(["special-selftest"]) == 0
    rows = _rows(capsys)
    # one row per identity family, reporting the worst deviation on its grid
    assert [r["metric"] for r in rows] == [
        "u_reciprocal_identity",
        "gamma_recurrence",
        "whittaker_reduction",
        "gamma_moment_vs_quadrature",
    ]
    assert all(r["pass"] == "true" for r in rows)
    assert all(float(r["value"]) < 1e-8 for r in rows)


# ---------------------------------------------------------------------------
# files, manifests, determinism


def test_output_file_and_manifest(tmp_path, capsys):
    out = tmp_path / "curves.csv"
    args = ["curves", "--snr-db", "0:5:5", "--output", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    manifest = (out.parent / (out.name + ".manifest")).read_text()
    for key in ("tool = noma-ec", "command = curves", "seed = 12345", "rows = "):
        assert key in manifest
    # rerun: the CSV must be byte-identical
    assert main(args) == 0
    assert out.read_bytes() == first


def test_seed_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 777\n# comment\nmc_samples = 100000\n")
    monkeypatch.setenv("NOMA_EC_SEED", "999")

    # env alone
    assert main(FAST_VALIDATE) == 0
    assert {r["seed"] for r in _rows(capsys) if r["seed"]} == {"999"}
    # config file beats env
    assert main(["validate", "--snr-db", "0:20:10", "--config", str(cfg)]) == 0
    assert {r["seed"] for r in _rows(capsys) if r["seed"]} == {"777"}
    # flag beats both
    assert main(["validate", "--snr-db", "0:20:10", "--config", str(cfg),
                 "--seed", "555"]) == 0
    assert {r["seed"] for r in _rows(capsys) if r["seed"]} == {"555"}


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("snr_start = 0\n")
    assert main(["curves", "--config", str(cfg)]) == 64


def test_missing_config_file_is_io_error(capsys):
    assert main(["curves", "--config", "/nonexistent/run.cfg"]) == 74


# ---------------------------------------------------------------------------
# exit statuses


@pytest.mark.parametrize(
    "args",
    [
        ["curves", "--snr-db", "30:10:5"],  # stop < start
        ["curves", "--snr-db", "0:10:0"],  # zero step
        ["frobnicate"],
        ["curves", "--mc-samples", "10"],
        ["curves", "--p1", "1.5"],
        ["lemma", "--id", "9q"],
        ["curves", "--oma-variant", "halved"],
    ],
)
def test_usage_errors(args, capsys):
    assert main(args) == 64
    err = capsys.readouterr().err
    assert "noma-ec: error" in err


def test_numeric_failure_exits_seventy(capsys):
    # p1 > 1/2 is rejected by the pairing layout at run time (weak user must
    # not out-rank the strong user's power), which surfaces as exit 70
    assert main(["lemma", "--id", "6a", "--p1", "0.6"]) == 70
    assert capsys.readouterr().err != ""


# ---------------------------------------------------------------------------
# module entry point


def test_module_invocation_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "noma_ec", "--version"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    assert "noma-ec" in proc.stdout
