import csv
import io
import dataclasses

import pytest

from collabtop.harness import (
    FIELDS,
    ExperimentConfig,
    TrialRecord,
    build_instance,
    emit_csv,
    error_rate,
    heterogeneous,
    parse_config_text,
    read_csv,
    run_trials,
    spaced_means,
    summarize,
    write_csv,
)
from collabtop import cli


def record(**kw):
    base = dict(trial=0, algorithm="iid", n=8, m=1, K=2, T=100, success=1,
                words_total=40, rounds=3, max_pulls_per_agent=90)
    base.update(kw)
    return TrialRecord(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(algorithm="kzz")
    with pytest.raises(ValueError):
        ExperimentConfig(ratings="r.csv", gap=0.1)
    with pytest.raises(ValueError):
        ExperimentConfig(sweep_axis="n", sweep_values=(1,))
    with pytest.raises(ValueError):
        ExperimentConfig(sweep_axis="T")
    assert ExperimentConfig(means=(0.5, 0.4, 0.1)).n == 3


def test_sweep_points():
    c = ExperimentConfig(sweep_axis="K", sweep_values=(2, 4))
    assert [p.K for p in c.points()] == [2, 4]
    assert all(p.sweep_axis is None for p in c.points())


def test_synthetic_instances():
    assert spaced_means(5) == pytest.approx((0.9, 0.7, 0.5, 0.3, 0.1))
    with pytest.raises(ValueError):
        spaced_means(30, gap=0.1)
    inst = heterogeneous([0.95, 0.5, 0.02], K=3, spread=0.2)
    assert inst.global_means == pytest.approx((0.95, 0.5, 0.02))
    assert (inst.local_means >= 0).all() and (inst.local_means <= 1).all()
    assert build_instance(ExperimentConfig(algorithm="noniid", n=6, K=3)).K == 3


def test_empty_csv_is_header_only(tmp_path):
    p = tmp_path / "out.csv"
    emit_csv([], p)
    assert p.read_text() == ",".join(FIELDS) + "\n"


def test_one_record_two_lines(tmp_path):
    p = tmp_path / "out.csv"
    emit_csv([record()], p)
    assert len(p.read_text().splitlines()) == 2


def test_round_trip(tmp_path):
    recs = [record(trial=t, success=t % 2, words_total=10 * t) for t in range(5)]
    p = tmp_path / "out.csv"
    emit_csv(recs, p)
    assert read_csv(p) == recs


def test_run_trials_deterministic_and_parallel_safe(tmp_path):
    c = ExperimentConfig(n=16, m=2, K=4, T=3000, trials=30, master_seed=9)
    a, b = run_trials(c), run_trials(c)
    par = run_trials(dataclasses.replace(c, workers=4))
    assert a == b == par
    assert [r.trial for r in a] == list(range(30))
    emit_csv(a, tmp_path / "a.csv")
    emit_csv(par, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_error_rate_matches_csv(tmp_path):
    c = ExperimentConfig(algorithm="noniid", n=12, m=2, K=3, T=600, trials=40, master_seed=1)
    recs = run_trials(c)
    p = tmp_path / "out.csv"
    emit_csv(recs, p)
    with open(p) as fh:
        rows = list(csv.DictReader(fh))
    assert error_rate(recs) == 1 - sum(int(r["success"]) for r in rows) / len(rows)
    (s,) = summarize(recs)
    assert s.error_rate == error_rate(recs)


def test_error_rate_falls_with_horizon():
    c = ExperimentConfig(n=16, m=2, K=4, trials=100, master_seed=2,
                         sweep_axis="T", sweep_values=(1000, 3000, 10000, 30000))
    rates = [s.error_rate for s in summarize(run_trials(c))]
    assert rates[0] > rates[-1]
    # nonincreasing up to Monte-Carlo slack of 0.1
    assert all(later <= earlier + 0.1 for earlier, later in zip(rates, rates[1:]))


def test_config_text():
    cfg = parse_config_text("# comment\nalgo = noniid\nagents=3\nsweep_values = 1,2\nmeans = 0.9, 0.1\n\n")
    assert cfg == {"algorithm": "noniid", "K": 3, "sweep_values": (1, 2), "means": (0.9, 0.1)}
    with pytest.raises(ValueError):
        parse_config_text("colour = blue")
    with pytest.raises(ValueError):
        parse_config_text("just words")


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_run_to_stdout(capsys):
    code, out, err = run_cli(capsys, "run-iid", "--n", "8", "--m", "1", "--agents", "2",
                             "--horizon", "2000", "--trials", "3", "--seed", "5")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3 and rows[0]["algorithm"] == "iid"
    assert "error rate" in err


def test_cli_config_then_flags(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n = 8\nagents = 2\nhorizon = 500\ntrials = 2\nseed = 1\n")
    out = tmp_path / "u.csv"
    code, _, _ = run_cli(capsys, "run-uniform", "--config", str(cfg), "--agents", "3", "--out", str(out))
    assert code == 0
    recs = read_csv(out)
    assert {(r.algorithm, r.K, r.n, r.words_total) for r in recs} == {("uniform", 3, 8, 3 * 8 + 1)}


def test_cli_sweep_byte_identical(tmp_path, capsys):
    paths = [tmp_path / f"s{i}.csv" for i in range(2)]
    for p in paths:
        code, _, _ = run_cli(capsys, "sweep", "--algo", "noniid", "--n", "10", "--m", "2",
                             "--agents", "2", "--sweep-axis", "T", "--sweep-values", "500,5000",
                             "--trials", "5", "--seed", "3", "--out", str(p))
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert [r.T for r in read_csv(paths[0])] == [500] * 5 + [5000] * 5


def test_cli_sweep_needs_axis(capsys):
    with pytest.raises(SystemExit):
        cli.main(["sweep", "--algo", "iid"])


def test_cli_ratings_run_and_ingest(tmp_path, capsys):
    p = tmp_path / "r.csv"
    rows = [(u, i, 0.5 * i + 0.1 * (u % 3)) for u in range(1, 21) for i in range(1, 9)]
    p.write_text("user_id,item_id,rating\n" + "".join(f"{u},{i},{r}\n" for u, i, r in rows))
    code, out, _ = run_cli(capsys, "ingest", "--ratings", str(p), "--mode", "noniid", "--agents", "2",
                           "--out", str(tmp_path / "means.csv"))
    assert code == 0 and "8 arms over 2 groups" in out
    assert (tmp_path / "means.csv").read_text().startswith("item_id,mean\n")
    code, out, err = run_cli(capsys, "run-noniid", "--ratings", str(p), "--agents", "2", "--m", "2",
                             "--horizon", "4000", "--trials", "2")
    assert code == 0, err
    assert len(out.splitlines()) == 3


def test_cli_reports_errors(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("user_id,item_id,rating\n1,2\n")
    code, _, err = run_cli(capsys, "ingest", "--ratings", str(p))
    assert code == 2 and "expected 3 fields" in err


def test_cli_verify(capsys):
    code, out, _ = run_cli(capsys, "verify", "--cases", "40")
    assert code == 0
    assert out.count("PASS") == 3
