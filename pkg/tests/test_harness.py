import json

import numpy as np
import pytest

from sepcert.certificates import Certificate, compute_delta
from sepcert.harness import (COLUMNS, ConfigError, InstanceSpec, format_report, gen_instance,
                             parse_config, report_passes, row_certified, run_experiment,
                             verify_theorem, write_report)
from sepcert.solver import solve_iterative, solve_lp_exact


def cell(**kw):
    base = {"frames": {"phi1": "identity:n=6", "phi2": "dct:n=6"}, "n": 6,
            "sparsity": {"k1": 1, "k2": 1}, "mask": "all", "supports": "exact",
            "seeds": [0, 1, 2]}
    base.update(kw)
    return base


def test_gen_instance_delta_zero_family():
    spec = InstanceSpec("identity:n=8", "dct:n=8", 8, 1, 1, "block:2,4", "exact")
    inst = gen_instance(spec, 3)
    assert inst.partition.missing == (2, 3)
    assert np.array_equal(inst.x0, inst.x1_true + inst.x2_true)
    assert compute_delta(inst.f1, inst.f2, inst.x1_true, inst.x2_true, inst.supports) <= 1e-12
    again = gen_instance(spec, 3)
    assert np.array_equal(again.x0, inst.x0) and again.supports == inst.supports


def test_gen_instance_redundant_frame_has_positive_delta():
    spec = InstanceSpec("random:m=8,n=6,seed=1", "dct:n=6", 6, 3, 1, "all", "topk:2,1")
    inst = gen_instance(spec, 0)
    assert len(inst.supports.lambda1) == 2
    assert compute_delta(inst.f1, inst.f2, inst.x1_true, inst.x2_true, inst.supports) > 0


def test_gen_instance_rejects_inconsistent_spec():
    with pytest.raises(ConfigError):
        gen_instance(InstanceSpec("identity:n=4", "dct:n=4", 4, 5, 1), 0)
    with pytest.raises(ConfigError):
        gen_instance(InstanceSpec("identity:n=4", "dct:n=5", 4, 1, 1), 0)


def test_verify_theorem_exact_recovery():
    spec = InstanceSpec("identity:n=7", "dct:n=7", 7, 1, 1, "all", "exact")
    inst = gen_instance(spec, 0)
    from sepcert.certificates import certify
    cert = certify(inst.f1, inst.f2, inst.partition, inst.x1_true, inst.x2_true, inst.supports)
    assert cert.kappa < 0.5
    check = verify_theorem(inst, solve_lp_exact(inst.f1, inst.f2, inst.partition, inst.x0), cert)
    assert check.error <= 1e-6
    assert check.bound_holds and check.intermezzo_holds and check.part2_holds
    # an iterative minimizer never certifies the bound
    it = solve_iterative(inst.f1, inst.f2, inst.partition, inst.x0)
    assert verify_theorem(inst, it, cert).bound_holds is None


def test_verify_theorem_vacuous_and_uncertified():
    spec = InstanceSpec("identity:n=4", "dct:n=4", 4, 1, 1, "all", "exact")
    inst = gen_instance(spec, 0)
    lp = solve_lp_exact(inst.f1, inst.f2, inst.partition, inst.x0)
    vac = verify_theorem(inst, lp, Certificate(0.0, 0.7, "exact"))
    assert vac.bound_holds is None
    assert vac.intermezzo_holds is not None and vac.part2_holds
    unc = verify_theorem(inst, lp, Certificate(0.0, 0.1, "lower_bound"))
    assert unc.bound_holds is None and unc.intermezzo_holds is None


def test_run_experiment_rows():
    rows = run_experiment({"cells": [cell(name="a"), cell(name="b", mask={"block": [1, 2]})]})
    assert [r["instance_id"] for r in rows] == ["a/0", "a/1", "a/2", "b/0", "b/1", "b/2"]
    assert all(r["status"] == "ok" for r in rows)
    assert report_passes(rows)


def test_run_experiment_empty():
    assert run_experiment({}) == []
    assert run_experiment(cell(seeds=[])) == []


def test_large_cells_use_lower_bound():
    big = cell(frames={"phi1": "identity:n=10", "phi2": "dct:n=10"}, n=10, seeds=[0],
               solver={"samples": 50})
    (row,) = run_experiment(big)
    assert row["kappa_kind"] == "lower_bound"
    assert row["bound"] == "uncertified"
    assert not row_certified(row)


def test_per_cell_failure_is_recorded():
    bad = cell(sparsity={"k1": 9, "k2": 1}, seeds=[0, 1])
    rows = run_experiment(bad)
    assert [r["status"] for r in rows] == ["error", "error"]
    assert "ConfigError" in rows[0]["message"]
    assert report_passes(rows)


@pytest.mark.parametrize("bad", [
    {"cells": [cell(frames={"phi1": "wavelet:n=6", "phi2": "dct:n=6"})]},
    cell(mask={"stripe": 3}),
    cell(supports="best"),
    cell(solver={"method": "magic"}),
    {"cells": [{"n": 3}]},
])
def test_parse_config_errors(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_corrupted_frame_file_is_config_error(tmp_path):
    a = np.eye(4)
    a[0, 0] = 2.0
    np.savetxt(tmp_path / "bad.csv", a, delimiter=",")
    with pytest.raises(ConfigError):
        parse_config(cell(frames={"phi1": f"file:{tmp_path / 'bad.csv'}", "phi2": "dct:n=4"}, n=4))


def test_report_formats(tmp_path):
    rows = run_experiment(cell())
    write_report(rows, tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0].split(",") == COLUMNS
    assert len(lines) == 4
    write_report(rows, tmp_path / "r.jsonl", fmt="jsonl")
    objs = [json.loads(l) for l in (tmp_path / "r.jsonl").read_text().splitlines()]
    assert len(objs) == 3 and list(objs[0]) == COLUMNS


def test_report_infinite_bound():
    row = dict.fromkeys(COLUMNS)
    row.update(instance_id="x/0", bound="inf", kappa=0.7, delta=0.1)
    text = format_report([row])
    assert text.splitlines()[1].split(",")[COLUMNS.index("bound")] == "inf"
    row["bound"] = float("inf")
    assert json.loads(format_report([row], "jsonl"))["bound"] == "inf"


def test_report_is_deterministic_and_order_stable():
    cfg = {"cells": [cell(name="a"), cell(name="b", mask={"random": 0.3})]}
    a = format_report(run_experiment(cfg), drop=("wall_ms",))
    b = format_report(run_experiment(cfg, workers=2), drop=("wall_ms",))
    assert a == b
