"""File formats: round trips and strict parsing."""

import numpy as np
import pytest

from nvreadout import (ParseError, evaluate, make_profiles,
                       paper_like_params, repair, simulate_rabi_dataset,
                       simulate_trace, sweep_gate, train_boundary, TrainConfig)
from nvreadout import io as nvio


@pytest.fixture(scope="module")
def world():
    p0, p1 = make_profiles(paper_like_params())
    t0 = simulate_trace(p0, 10**6, seed=1, label="bright boundary")
    t1 = simulate_trace(p1, 10**6, seed=2, label="dark boundary")
    sweep = sweep_gate(t0, t1)
    dataset, truth = simulate_rabi_dataset(p0, p1, repetitions=10**5, seed=40,
                                           points=24, span_ns=460.0)
    model = train_boundary(t0, t1, TrainConfig(max_iterations=200))
    return t0, t1, sweep, dataset, truth, model


def roundtrip_bytes(path_a, path_b):
    return path_a.read_bytes() == path_b.read_bytes()


class TestTraceCsv:
    def test_round_trip_byte_identical(self, world, tmp_path):
        t0 = world[0]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        nvio.write_trace_csv(a, t0)
        again = nvio.read_trace_csv(a)
        nvio.write_trace_csv(b, again)
        assert roundtrip_bytes(a, b)
        assert np.array_equal(again.counts, t0.counts)
        assert again.repetitions == t0.repetitions
        assert again.label == t0.label and again.seed == t0.seed

    def test_missing_repetitions_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("# trace-csv v1\nbin_index,counts\n0,1\n")
        with pytest.raises(ParseError, match="repetitions"):
            nvio.read_trace_csv(p)

    def test_non_integer_counts_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("# trace-csv v1\n# repetitions=10\nbin_index,counts\n0,1.5\n")
        with pytest.raises(ParseError, match="line 4"):
            nvio.read_trace_csv(p)

    def test_out_of_order_bins_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("# trace-csv v1\n# repetitions=10\nbin_index,counts\n1,2\n")
        with pytest.raises(ParseError, match="out of order"):
            nvio.read_trace_csv(p)

    def test_negative_counts_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("# trace-csv v1\n# repetitions=10\nbin_index,counts\n0,-3\n")
        with pytest.raises(ParseError, match="negative"):
            nvio.read_trace_csv(p)


class TestRabiCsv:
    def test_round_trip(self, world, tmp_path):
        dataset = world[3]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        nvio.write_rabi_csv(a, dataset)
        again = nvio.read_rabi_csv(a)
        nvio.write_rabi_csv(b, again)
        assert roundtrip_bytes(a, b)
        assert np.array_equal(again.durations, dataset.durations)
        for (_, x), (_, y) in zip(again.points, dataset.points):
            assert np.array_equal(x.counts, y.counts)

    def test_truth_round_trip(self, world, tmp_path):
        dataset, truth = world[3], world[4]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        nvio.write_truth_csv(a, dataset.durations, truth)
        d, p = nvio.read_truth_csv(a)
        nvio.write_truth_csv(b, d, p)
        assert roundtrip_bytes(a, b)
        assert np.array_equal(p, truth)


class TestSweepCsv:
    def test_round_trip(self, world, tmp_path):
        sweep = world[2]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        nvio.write_sweep_csv(a, sweep)
        again = nvio.read_sweep_csv(a)
        nvio.write_sweep_csv(b, again)
        assert roundtrip_bytes(a, b)
        assert again.max_contrast.window == sweep.max_contrast.window
        assert again.min_variance.window == sweep.min_variance.window
        assert len(again.metrics) == len(sweep.metrics)
        assert again.degenerate_widths == sweep.degenerate_widths


class TestModelFile:
    def test_round_trip_byte_identical(self, world, tmp_path):
        model = world[5]
        a, b = tmp_path / "a.model", tmp_path / "b.model"
        nvio.write_model(a, model)
        again = nvio.read_model(a)
        nvio.write_model(b, again)
        assert roundtrip_bytes(a, b)
        assert np.array_equal(again.weights, model.weights)
        assert again.intercept == model.intercept
        assert again.rate_scale == model.rate_scale
        assert again.training_loss == model.training_loss

    def test_dimension_mismatch_rejected(self, world, tmp_path):
        model = world[5]
        p = tmp_path / "m.model"
        nvio.write_model(p, model)
        lines = p.read_text().splitlines()
        p.write_text("\n".join(lines[:-1]) + "\n")  # drop one weight
        with pytest.raises(ParseError, match="dimension"):
            nvio.read_model(p)


class TestReportAndRepair:
    def test_report_round_trip(self, world, tmp_path):
        t0, t1, sweep, dataset, truth, model = world
        report = evaluate(dataset, model, sweep.max_contrast.window,
                          sweep.min_variance.window, t0, t1, truth)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        nvio.write_report_csv(a, report)
        again = nvio.read_report_csv(a)
        nvio.write_report_csv(b, again)
        assert roundtrip_bytes(a, b)
        assert again == report
        nvio.write_report_summary(tmp_path / "s.txt", report)
        assert (tmp_path / "s.txt").read_text().count("variance reduction") == 6

    def test_repair_round_trip(self, world, tmp_path):
        t0, t1, sweep, dataset, truth, model = world
        result = repair(dataset, model, sweep.min_variance.window, t0, t1)
        a = tmp_path / "a.csv"
        nvio.write_repair_csv(a, result)
        d, po, pr, qf = nvio.read_repair_csv(a)
        assert np.array_equal(d, dataset.durations)
        assert po == pytest.approx([pt.p_original for pt in result.points])
        assert pr == pytest.approx([pt.p_repaired for pt in result.points])

    def test_fit_report_round_trip(self, world, tmp_path):
        dataset = world[3]
        from nvreadout import fit_rabi
        sums = [tr.counts.sum() / tr.repetitions for _, tr in dataset.points]
        fit = fit_rabi(dataset.durations, sums)
        a = tmp_path / "fit.csv"
        nvio.write_fit_csv(a, dataset.durations, sums, fit)
        fit2, d, raw = nvio.read_fit_csv(a)
        assert fit2 == fit
        assert np.array_equal(d, dataset.durations)
