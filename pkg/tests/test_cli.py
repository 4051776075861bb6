import json

import numpy as np
import pytest

from sepcert.cli import build_parser, main
from sepcert.hilbert import write_signal

ROOT = __import__("pathlib").Path(__file__).resolve().parents[1]


@pytest.fixture
def signals(tmp_path):
    x0 = np.array([1.0, 0.0, 0.5, -1.0])
    write_signal(x0, tmp_path / "x0.csv")
    write_signal(np.zeros(4), tmp_path / "zero.json", fmt="json")
    write_signal(np.array([1.0, 0.0, 0.0, 0.0]), tmp_path / "x1.csv")
    write_signal(np.array([0.0, 0.0, 0.0, 0.0]), tmp_path / "x2.csv")
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_zero_signal(signals, capsys):
    code, out, _ = run(capsys, "solve", "--phi1", "identity:n=4", "--phi2", "dct:n=4",
                       "--known", "all", "--signal", signals / "zero.json")
    assert code == 0
    assert json.loads(out)["objective"] == 0.0


def test_solve_methods_agree(signals, capsys):
    common = ["solve", "--phi1", "identity:n=4", "--phi2", "dct:n=4", "--known", "block:1,2",
              "--signal", signals / "x0.csv"]
    code_lp, out_lp, _ = run(capsys, *common, "--method", "lp")
    code_it, _, _ = run(capsys, *common, "--method", "iterative", "--out", signals / "it.json",
                        "--trace", signals / "trace.csv")
    assert code_lp == code_it == 0
    lp = json.loads(out_lp)["objective"]
    it = json.loads((signals / "it.json").read_text())["objective"]
    assert abs(lp - it) <= 1e-6 * (1 + lp)
    assert (signals / "trace.csv").read_text().startswith("iteration,residual")


def test_solve_bad_frame_spec(signals, capsys):
    code, out, err = run(capsys, "solve", "--phi1", "wavelet:n=4", "--phi2", "dct:n=4",
                         "--known", "all", "--signal", signals / "x0.csv")
    assert code == 1
    assert out == ""
    assert "wavelet" in err


def test_solve_input_errors(signals, capsys):
    assert run(capsys, "solve", "--phi1", "identity:n=5", "--phi2", "dct:n=5", "--known", "all",
               "--signal", signals / "x0.csv")[0] == 1
    assert run(capsys, "solve", "--phi1", "identity:n=4", "--phi2", "dct:n=4", "--known", "all",
               "--signal", signals / "missing.csv")[0] == 1


def test_solve_nonconvergence_exit(signals, capsys):
    code, out, _ = run(capsys, "solve", "--phi1", "haar:n=4", "--phi2", "dct:n=4", "--known",
                       "block:1,2", "--signal", signals / "x0.csv", "--max-iters", "2")
    assert code == 2
    assert json.loads(out)["converged"] is False


def certify_args(signals, *extra):
    return ["certify", "--phi1", "identity:n=4", "--phi2", "dct:n=4", "--known", "all",
            "--x1", signals / "x1.csv", "--x2", signals / "x2.csv", *extra]


def test_certify_full_and_empty_supports(signals, capsys):
    full = signals / "full.json"
    full.write_text(json.dumps({"lambda1": [0, 1, 2, 3], "lambda2": [0, 1, 2, 3]}))
    code, out, _ = run(capsys, *certify_args(signals, "--supports", full))
    cert = json.loads(out)
    assert code == 0
    assert cert["delta"] == 0.0 and cert["kappa"] == 1.0 and cert["bound"] == "inf"

    empty = signals / "empty.json"
    empty.write_text(json.dumps({"lambda1": [], "lambda2": []}))
    code, out, _ = run(capsys, *certify_args(signals, "--supports", empty))
    cert = json.loads(out)
    assert cert["kappa"] == 0.0
    assert cert["bound"] == pytest.approx(2 * cert["delta"])


def test_certify_scalar_instance(tmp_path, capsys):
    write_signal(np.array([1.0]), tmp_path / "one.csv")
    code, out, _ = run(capsys, "certify", "--phi1", "identity:n=1", "--phi2", "identity:n=1",
                       "--known", "all", "--x1", tmp_path / "one.csv", "--x2", tmp_path / "one.csv",
                       "--topk", "1,0")
    assert code == 0
    assert json.loads(out)["kappa"] == pytest.approx(0.5, abs=1e-12)


def test_certify_cutoff_and_estimate(tmp_path, capsys):
    write_signal(np.eye(10)[0], tmp_path / "e.csv")
    args = ["certify", "--phi1", "identity:n=10", "--phi2", "dct:n=10", "--known", "all",
            "--x1", tmp_path / "e.csv", "--x2", tmp_path / "e.csv", "--topk", "1,1"]
    assert run(capsys, *args)[0] == 3
    code, out, _ = run(capsys, *args, "--kappa", "estimate", "--samples", "50")
    assert code == 0
    assert json.loads(out)["bound"] == "uncertified"


def test_verify_bound_shipped_config(tmp_path, capsys):
    code, _, _ = run(capsys, "verify-bound", "--config", ROOT / "configs" / "delta0_small.json",
                     "--out", tmp_path / "r.csv")
    assert code == 0
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert len(lines) == 21
    col = lines[0].split(",").index("bound_holds")
    assert all(line.split(",")[col] == "true" for line in lines[1:])


def test_verify_bound_vacuous_only(tmp_path, capsys):
    cfg = {"frames": {"phi1": "identity:n=4", "phi2": "dct:n=4"}, "n": 4,
           "sparsity": {"k1": 1, "k2": 1}, "supports": "topk:4,4", "seeds": [0, 1]}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    code, out, _ = run(capsys, "verify-bound", "--config", tmp_path / "c.json", "--format", "jsonl")
    assert code == 0
    rows = [json.loads(l) for l in out.splitlines()]
    assert all(r["kappa"] == 1.0 and r["bound"] == "inf" and r["bound_holds"] is None for r in rows)


def test_verify_bound_corrupted_frame(tmp_path, capsys):
    a = np.eye(4)
    a[2] *= 3.0
    np.savetxt(tmp_path / "bad.csv", a, delimiter=",")
    cfg = {"frames": {"phi1": f"file:{tmp_path / 'bad.csv'}", "phi2": "dct:n=4"}, "n": 4,
           "seeds": [0]}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    code, _, err = run(capsys, "verify-bound", "--config", tmp_path / "c.json")
    assert code == 1
    assert "Parseval" in err


def test_bench_default(capsys):
    code, out, err = run(capsys, "bench", "--format", "jsonl")
    assert code == 0
    assert len(out.splitlines()) == 20
    assert "rows=20" in err


def test_demo_outputs(tmp_path, capsys):
    code, out, _ = run(capsys, "demo", "--out", tmp_path / "a", "--seed", "4")
    assert code == 0
    summary = json.loads(out)
    assert summary["converged"]
    assert summary["feasibility_residual"] <= 1e-9
    assert summary["error_l2"] <= 1e-4
    for name in ("x0.csv", "mask.csv", "x1_star.csv", "x2_star.csv", "recovered.csv", "summary.json"):
        assert (tmp_path / "a" / name).exists()
    run(capsys, "demo", "--out", tmp_path / "b", "--seed", "4")
    for name in ("x0.csv", "recovered.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_demo_no_missing_block(tmp_path, capsys):
    code, out, _ = run(capsys, "demo", "--n", "16", "--missing-block", "0,0", "--out", tmp_path)
    assert code == 0
    assert json.loads(out)["error_missing_l2"] == 0.0


def test_demo_bad_block(tmp_path, capsys):
    assert run(capsys, "demo", "--missing-block", "40,30", "--out", tmp_path)[0] == 1


@pytest.mark.parametrize("sub", ["solve", "certify", "verify-bound", "bench", "demo"])
def test_help_lists_frame_specs(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([sub, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "identity:n=N" in text or "identity:n=" in text


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["solve", "--bogus"])
    assert exc.value.code == 2
