import math

import numpy as np
import pytest

import oracles
from conftest import random_hermitian, random_unitary
from multitime import analyze, qops
from multitime.analyze import (SQRT_LN2, MetricsReport, bootstrap_ci, landscape_scan,
                               markovian_reference, metrics_csv_row, negativity,
                               read_metrics, resample_frequencies, scan_csv, sqrt_jsd,
                               write_metrics)
from multitime.fileio import InputDataError
from multitime.model import (ModelParams, ProcessMatrix, ideal_process_matrix,
                             model_process_matrix)
from multitime.protocol import sample_counts
from multitime.qops import LabeledOperator, PROCESS_LABELS
from multitime.reconstruct import constraint_report


def random_channel_choi(rng, in_label, out_label):
    """Choi of a random mixture of two unitary channels: a valid channel."""
    weight = rng.uniform(0.2, 0.8)
    chois = [qops.choi_of_unitary(LabeledOperator((in_label,), random_unitary(rng, 2)),
                                  (out_label,)).mat for _ in range(2)]
    return weight * chois[0] + (1 - weight) * chois[1]


def random_product_process(rng):
    mat = np.kron(random_channel_choi(rng, "A_O", "B_I"),
                  random_channel_choi(rng, "B_O", "C_I"))
    return ProcessMatrix(LabeledOperator(PROCESS_LABELS, mat), "model-exact")


class TestMarkovianReference:
    def test_product_process_unchanged(self):
        rng = np.random.default_rng(50)
        for _ in range(5):
            w = random_product_process(rng)
            assert np.abs(markovian_reference(w).mat - w.mat).max() < 1e-10

    def test_ideal_unchanged(self):
        w = ideal_process_matrix()
        assert np.abs(markovian_reference(w).mat - w.mat).max() < 1e-12

    def test_idempotent(self, strong_params):
        w = model_process_matrix(strong_params)
        once = markovian_reference(w)
        twice = markovian_reference(once)
        assert np.abs(once.mat - twice.mat).max() < 1e-10

    def test_valid_process_maps_to_valid_process(self, strong_params):
        w = model_process_matrix(strong_params)
        ref = markovian_reference(w)
        assert np.trace(ref.mat).real == pytest.approx(4.0, abs=1e-10)
        assert np.linalg.eigvalsh(ref.mat).min() > -1e-10
        report = constraint_report(ref.op)
        assert report.c1_violation < 1e-9 and report.c2_violation < 1e-9


class TestSqrtJsd:
    def test_identical_arguments(self, strong_params):
        w = model_process_matrix(strong_params)
        assert sqrt_jsd(w, w) == pytest.approx(0.0, abs=1e-9)

    def test_symmetry(self, strong_params):
        rng = np.random.default_rng(51)
        a = model_process_matrix(strong_params)
        b = random_product_process(rng)
        assert sqrt_jsd(a, b) == pytest.approx(sqrt_jsd(b, a), abs=1e-12)

    def test_orthogonal_supports_saturate_bound(self):
        # two pure-state-like trace-4 operators with orthogonal support
        v1 = np.zeros(16); v1[1] = 1.0
        v2 = np.zeros(16); v2[6] = 1.0
        w1 = ProcessMatrix(LabeledOperator(PROCESS_LABELS, 4 * np.outer(v1, v1)), "raw-reconstruction")
        w2 = ProcessMatrix(LabeledOperator(PROCESS_LABELS, 4 * np.outer(v2, v2)), "raw-reconstruction")
        assert sqrt_jsd(w1, w2) == pytest.approx(SQRT_LN2, abs=1e-12)
        assert SQRT_LN2 == pytest.approx(math.sqrt(math.log(2)))

    def test_matches_entropy_oracle(self, strong_params):
        rng = np.random.default_rng(52)
        a = model_process_matrix(strong_params)
        for _ in range(5):
            b = random_product_process(rng)
            want = math.sqrt(max(oracles.jsd_oracle(a.mat, b.mat), 0.0))
            assert sqrt_jsd(a, b) == pytest.approx(want, abs=1e-10)

    def test_bounds_on_random_pairs(self):
        rng = np.random.default_rng(53)
        for _ in range(10):
            a, b = random_product_process(rng), random_product_process(rng)
            value = sqrt_jsd(a, b)
            assert 0.0 <= value <= SQRT_LN2 + 1e-9

    def test_negative_eigenvalue_rejected(self):
        mat = np.diag([4.5, -0.5] + [0.0] * 14).astype(complex)
        w = ProcessMatrix(LabeledOperator(PROCESS_LABELS, mat), "raw-reconstruction")
        with pytest.raises(InputDataError, match="negative eigenvalue"):
            sqrt_jsd(w, w)

    def test_wrong_trace_rejected(self, strong_params):
        w = model_process_matrix(strong_params)
        bad = ProcessMatrix(LabeledOperator(PROCESS_LABELS, w.mat / 2), "raw-reconstruction")
        with pytest.raises(ValueError, match="trace"):
            sqrt_jsd(bad, bad)


class TestNegativity:
    def test_product_processes_have_none(self):
        rng = np.random.default_rng(54)
        for _ in range(50):
            assert negativity(random_product_process(rng)) < 1e-12

    def test_bell_pair_across_the_cut(self):
        # maximally entangled pair between A_O and B_O, maximally mixed rest
        bell = np.zeros((4, 4), dtype=complex)
        for i in (0, 3):
            for j in (0, 3):
                bell[i, j] = 0.5
        op = qops.tensor(LabeledOperator(("A_O", "B_O"), bell),
                         LabeledOperator(("B_I", "C_I"), np.eye(4) / 4))
        op = qops.reorder(op, PROCESS_LABELS)
        w = ProcessMatrix(LabeledOperator(PROCESS_LABELS, 4 * op.mat), "raw-reconstruction")
        assert negativity(w) == pytest.approx(0.5, abs=1e-12)

    def test_four_qubit_maximally_entangled(self):
        # not a valid process, but the state-space ceiling for the bipartition
        vec = np.zeros(16)
        for i in range(4):
            vec[i * 4 + i] = 0.5
        w = ProcessMatrix(LabeledOperator(PROCESS_LABELS, 4 * np.outer(vec, vec)),
                          "raw-reconstruction")
        assert negativity(w) == pytest.approx(1.5, abs=1e-12)

    def test_transposing_either_side_matches(self, strong_params):
        w = model_process_matrix(strong_params)
        value = negativity(w)
        flipped = qops.partial_transpose(w.op, ("B_O", "C_I"))
        vals = np.linalg.eigvalsh(flipped.mat / 4)
        other = -vals[vals < -1e-12].sum()
        assert value == pytest.approx(other, abs=1e-10)
        assert value == pytest.approx(0.014162, abs=1e-5)

    def test_matches_permutation_oracle(self, strong_params):
        w = model_process_matrix(strong_params)
        pt = oracles.loop_partial_transpose(w.mat / 4, 4, {0, 1})
        vals = np.linalg.eigvalsh(pt)
        assert negativity(w) == pytest.approx(-vals[vals < -1e-12].sum(), abs=1e-12)


class TestMetricContinuity:
    def test_small_moves_inside_the_valid_set(self, strong_params):
        w = model_process_matrix(strong_params)
        other = ideal_process_matrix()
        direction = other.mat - w.mat
        step = 1e-6 / np.linalg.norm(direction)
        perturbed = ProcessMatrix(
            LabeledOperator(PROCESS_LABELS, (1 - step) * w.mat + step * other.mat),
            "model-exact")
        assert abs(np.linalg.norm(perturbed.mat - w.mat) - 1e-6) < 1e-9
        jsd_shift = abs(sqrt_jsd(perturbed, markovian_reference(perturbed))
                        - sqrt_jsd(w, markovian_reference(w)))
        neg_shift = abs(negativity(perturbed) - negativity(w))
        assert jsd_shift < 1e-3
        assert neg_shift < 1e-3


class TestBootstrap:
    def test_resampler_matches_multinomial_spread(self):
        freqs = np.array([0.7773, 0.1738, 0.0421, 0.0068])
        rng = np.random.default_rng(55)
        draws = resample_frequencies(rng, freqs, shots=8000, trials=1000)
        sample_std = draws.std(axis=0, ddof=1)
        analytic = np.sqrt(freqs * (1 - freqs) / 8000)
        assert np.all(np.abs(sample_std / analytic - 1) < 0.10)

    def test_degenerate_distribution_has_zero_spread(self):
        rng = np.random.default_rng(56)
        draws = resample_frequencies(rng, np.array([1.0, 0.0, 0.0, 0.0]),
                                     shots=8000, trials=100)
        assert np.all(draws == draws[0])
        assert draws.std(axis=0).max() == 0.0

    def test_deterministic_given_seed(self, strong_params):
        w = model_process_matrix(strong_params)
        counts = sample_counts(w, shots=2 ** 12, seed=2)
        a = bootstrap_ci(counts, "negativity", trials=20, resample_shots=2000, seed=9)
        b = bootstrap_ci(counts, "negativity", trials=20, resample_shots=2000, seed=9)
        assert a.point == b.point and a.ci95 == b.ci95 and a.bias == b.bias

    def test_interval_shrinks_with_resample_shots(self, strong_params):
        w = model_process_matrix(strong_params)
        counts = sample_counts(w, shots=2 ** 14, seed=3)
        cis = []
        for shots in (2000, 8000, 32000):
            result = bootstrap_ci(counts, "sqrt_jsd", trials=60,
                                  resample_shots=shots, seed=1)
            cis.append(result.ci95)
        assert cis[0] > cis[1] > cis[2]
        assert 1.5 < cis[0] / cis[2] < 8.0  # expect ~4 under 1/sqrt(shots)

    def test_unknown_metric_rejected(self, strong_params):
        w = model_process_matrix(strong_params)
        counts = sample_counts(w, shots=64, seed=0)
        with pytest.raises(ValueError, match="unknown metric"):
            bootstrap_ci(counts, "purity", trials=5)

    def test_failed_trials_raise(self, strong_params):
        w = model_process_matrix(strong_params)
        counts = sample_counts(w, shots=2 ** 10, seed=0)
        with pytest.raises(RuntimeError, match="trials failed"):
            bootstrap_ci(counts, "negativity", trials=10, resample_shots=500,
                         seed=0, max_iter=1)


class TestLandscapeScan:
    def test_uncoupled_grid_is_flat_zero(self):
        params = ModelParams(5.11, 5.03, 0.0, 1, 1)
        reports = landscape_scan(params, [10.0, 55.0], [10.0, 55.0])
        for r in reports:
            assert r.sqrt_jsd < 1e-6
            assert r.negativity < 1e-9

    def test_single_point(self, strong_params):
        reports = landscape_scan(strong_params, [97.0], [97.0])
        assert len(reports) == 1
        assert reports[0].t1_ns == 97.0

    def test_csv_layout(self, strong_params):
        reports = landscape_scan(strong_params, [96.0, 97.0], [97.0])
        text = scan_csv(reports)
        lines = text.strip().splitlines()
        assert lines[0] == "t1_ns,t2_ns,sqrt_jsd,negativity"
        assert len(lines) == 1 + 2 + 2
        assert lines[-2].startswith("# argmax sqrt_jsd:")
        assert lines[-1].startswith("# argmax negativity:")

    def test_empty_grid_rejected(self, strong_params):
        with pytest.raises(ValueError, match="non-empty"):
            landscape_scan(strong_params, [], [97.0])


class TestMetricsReport:
    def test_file_round_trip(self, tmp_path):
        report = MetricsReport(sqrt_jsd=0.104, negativity=0.0142,
                               sqrt_jsd_ci95=0.004, negativity_ci95=0.001,
                               sqrt_jsd_bias=0.0035, negativity_bias=0.0003,
                               t1_ns=97.0, t2_ns=97.0, provenance="round trip")
        path = str(tmp_path / "metrics.txt")
        write_metrics(path, report)
        assert read_metrics(path) == report

    def test_optional_fields_omitted(self, tmp_path):
        report = MetricsReport(sqrt_jsd=0.1, negativity=0.01)
        path = str(tmp_path / "metrics.txt")
        write_metrics(path, report)
        back = read_metrics(path)
        assert back.sqrt_jsd_ci95 is None and back.t1_ns is None

    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            MetricsReport(sqrt_jsd=1.2, negativity=0.0)
        with pytest.raises(ValueError):
            MetricsReport(sqrt_jsd=0.1, negativity=2.0)

    def test_summary_rounds_to_three_digits(self):
        report = MetricsReport(sqrt_jsd=0.104167, negativity=0.0141623,
                               sqrt_jsd_ci95=0.0035911, negativity_ci95=None)
        text = report.summary()
        assert "0.104 +/- 0.00359" in text
        assert "0.0142" in text

    def test_csv_row(self):
        report = MetricsReport(sqrt_jsd=0.1, negativity=0.01, t1_ns=97.0, t2_ns=98.0)
        row = metrics_csv_row(report)
        assert row.split(",")[0] == f"{97.0:.16e}"
