from __future__ import annotations

import csv
import warnings

import numpy as np
import pytest

from epiconf import experiments as ex
from epiconf.models import GammaShape


def test_every_named_reproduction_is_registered():
    names = {"fig1", "fig2", "fig3", "figA2", "figA3"} | {f"example{i}" for i in range(1, 8)}
    assert names == set(ex.EXPERIMENTS)


def test_fig1_inputs_are_consistent():
    r = ex.figure1()
    d = GammaShape.dataset_from_sum(ex.FIG1_N, ex.FIG1_SUM_T)
    assert GammaShape().statistic(d) == pytest.approx(ex.FIG1_SUM_T, rel=1e-12)
    assert set(r.tables) == {"prior", "density"}
    lengths = {len(v) for v in r.tables["density"].values()}
    assert len(lengths) == 1


def test_uniform_one_sided_interval():
    c = ex.example3().checks
    assert c["interval"] == pytest.approx((1.0, 1.9))
    assert c["pivot_coverage"] == pytest.approx(0.9, abs=1e-12)
    assert c["floor_guess_coverage"] == pytest.approx(0.4)


def test_width_two_uniform_full_confidence_is_flat_on_its_support():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        r = ex.example4()
    lo, hi = r.checks["support"]
    assert (lo, hi) == pytest.approx((0.1, 1.2))
    assert r.checks["max_rel_dev_from_flat"] < 1e-9


def test_curved_normal_three_observations():
    c = ex.figureA2().checks
    assert c["log_prior_vs_inv_theta"] < 1e-9
    assert len(c["c_fi_gap_vs_peak"]) == 3


def test_two_by_four_reproduction():
    c = ex.example8_evans().checks
    assert c["verdict"] == "not_relevant" and c["same_likelihood"]


def test_curved_conditional_routes():
    c = ex.example7().checks
    assert c["flat_prior_mode"] == pytest.approx(c["mle"], rel=1e-3)
    assert abs(c["a"]) <= np.sqrt(5)


def test_results_write_schema_csv(tmp_path):
    r = ex.example3()
    path = tmp_path / "ex3.csv"
    r.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema=1"
    assert next(csv.reader(lines[1:2])) == list(r.columns)


def test_csv_output_is_byte_identical_across_runs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    ex.figure1().write_csv(a, "density")
    ex.figure1().write_csv(b, "density")
    assert a.read_bytes() == b.read_bytes()
