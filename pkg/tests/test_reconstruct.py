import numpy as np
import pytest

import oracles
from conftest import random_hermitian, random_params
from multitime import qops
from multitime.fileio import InputDataError
from multitime.model import ModelParams, ideal_process_matrix, model_process_matrix
from multitime.protocol import born_distribution, enumerate_settings, exact_counts
from multitime.qops import LabeledOperator, PROCESS_LABELS
from multitime.reconstruct import (CombConstraintReport, comb_subspace_projection,
                                   constraint_report, design_matrix, design_rows,
                                   expected_frequencies, frequency_vector, invert_counts,
                                   operator_from_coefficients, pauli_coefficients,
                                   project_physical, read_report, write_report)


def random_valid_process(rng):
    return model_process_matrix(random_params(rng))


class TestDesignMatrix:
    def test_full_rank_by_svd(self):
        design = design_matrix()
        assert design.shape == (1296, 256)
        singular = np.linalg.svd(design, compute_uv=False)
        assert (singular > 1e-10).sum() == 256

    def test_identity_column(self):
        design = design_matrix()
        assert np.allclose(design[:, 0], 1 / 16)

    def test_forward_map_reproduces_born_rule(self):
        for w in (ideal_process_matrix(), model_process_matrix(ModelParams(5.11, 5.03, 11, 97, 97))):
            probs = expected_frequencies(w)
            r = 0
            for setting in enumerate_settings():
                dist = born_distribution(w, setting)
                for p in dist.values():
                    assert probs[r] == pytest.approx(p, abs=1e-12)
                    r += 1

    def test_row_order(self):
        rows = design_rows()
        assert len(rows) == 1296
        settings = enumerate_settings()
        assert rows[0][0] == settings[0]
        assert rows[4][0] == settings[1]


class TestPauliCoefficients:
    def test_identity_component_is_trace_over_16(self):
        w = ideal_process_matrix()
        alpha = pauli_coefficients(w.op)
        assert alpha[0] == pytest.approx(np.trace(w.mat).real / 16)
        assert alpha[0] == pytest.approx(0.25)

    def test_round_trip(self):
        rng = np.random.default_rng(30)
        mat = random_hermitian(rng, 16)
        op = LabeledOperator(PROCESS_LABELS, mat)
        back = operator_from_coefficients(pauli_coefficients(op))
        assert np.abs(back.mat - mat).max() < 1e-12


class TestInvertCounts:
    def test_ideal_exact_round_trip(self):
        w = ideal_process_matrix()
        got = invert_counts(exact_counts(w))
        assert got.status == "raw-reconstruction"
        assert np.linalg.norm(got.mat - w.mat) < 1e-10

    def test_model_exact_round_trips(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            w = random_valid_process(rng)
            got = invert_counts(exact_counts(w))
            assert np.linalg.norm(got.mat - w.mat) < 1e-8

    def test_variance_weighting_preserves_exact_solution(self, strong_params):
        w = model_process_matrix(strong_params)
        got = invert_counts(exact_counts(w), variance_weighted=True)
        assert np.linalg.norm(got.mat - w.mat) < 1e-8

    def test_missing_settings_reported(self, strong_params):
        from multitime.protocol import sample_counts
        w = model_process_matrix(strong_params)
        table = sample_counts(w, shots=8, seed=0)
        dropped = list(table.counts)[:3]
        for setting in dropped:
            del table.counts[setting]
        with pytest.raises(InputDataError, match="missing 3 of 324"):
            frequency_vector(table)

    def test_error_shrinks_with_shots(self, strong_params):
        from multitime.protocol import sample_counts
        w = model_process_matrix(strong_params)
        errors = {}
        for shots in (2 ** 10, 2 ** 12, 2 ** 14):
            errs = []
            for seed in range(3):
                got = invert_counts(sample_counts(w, shots=shots, seed=seed))
                errs.append(np.linalg.norm(got.mat - w.mat))
            errors[shots] = np.median(errs)
        assert errors[2 ** 10] > errors[2 ** 12] > errors[2 ** 14]
        ratio = errors[2 ** 10] / errors[2 ** 14]  # expect ~4 under 1/sqrt(shots)
        assert 2.0 < ratio < 8.0


class TestCombSubspaceProjection:
    def test_valid_process_is_fixed(self):
        rng = np.random.default_rng(32)
        w = random_valid_process(rng)
        assert np.abs(comb_subspace_projection(w.op).mat - w.mat).max() < 1e-10

    def test_identity_is_fixed(self):
        eye = qops.identity(PROCESS_LABELS)
        assert np.abs(comb_subspace_projection(eye).mat - eye.mat).max() < 1e-12

    def test_projector_characterization(self):
        # idempotent, Hilbert-Schmidt self-adjoint, trace preserving,
        # Hermiticity preserving, and its image satisfies both constraints
        rng = np.random.default_rng(33)
        for _ in range(100):
            x = random_hermitian(rng, 16)
            px = comb_subspace_projection(LabeledOperator(PROCESS_LABELS, x)).mat
            ppx = comb_subspace_projection(LabeledOperator(PROCESS_LABELS, px)).mat
            assert np.abs(ppx - px).max() < 1e-10
            assert np.abs(px - px.conj().T).max() < 1e-10
            assert abs(np.trace(px) - np.trace(x)) < 1e-10
            report = constraint_report(LabeledOperator(PROCESS_LABELS, px))
            assert report.c1_violation < 1e-10
            assert report.c2_violation < 1e-10

    def test_self_adjoint(self):
        rng = np.random.default_rng(34)
        for _ in range(20):
            x = random_hermitian(rng, 16)
            y = random_hermitian(rng, 16)
            px = comb_subspace_projection(LabeledOperator(PROCESS_LABELS, x)).mat
            py = comb_subspace_projection(LabeledOperator(PROCESS_LABELS, y)).mat
            assert abs(np.trace(px.conj().T @ y) - np.trace(x.conj().T @ py)) < 1e-10

    def test_matches_independent_construction(self):
        rng = np.random.default_rng(35)
        x = random_hermitian(rng, 16)
        got = comb_subspace_projection(LabeledOperator(PROCESS_LABELS, x)).mat
        assert np.abs(got - oracles.comb_subspace_oracle(x)).max() < 1e-12


class TestProjectPhysical:
    def test_already_physical_unchanged(self):
        rng = np.random.default_rng(36)
        w = random_valid_process(rng)
        result = project_physical(w)
        assert result.converged
        assert result.distance <= 1e-9
        assert np.abs(result.w_phys.mat - w.mat).max() < 1e-8

    def test_matches_certified_oracle(self, strong_params):
        rng = np.random.default_rng(37)
        w = model_process_matrix(strong_params)
        for eps in (0.05, 0.2):
            h = random_hermitian(rng, 16, traceless=True, unit_norm=True)
            target = LabeledOperator(PROCESS_LABELS, w.mat + eps * h)
            result = project_physical(target)
            assert result.converged
            want = oracles.project_comb_oracle(target.mat)
            assert np.linalg.norm(result.w_phys.mat - want) < 1e-6
            assert result.report.max_violation() < 1e-8

    def test_feasible_from_anywhere(self):
        target = LabeledOperator(PROCESS_LABELS, -np.eye(16, dtype=complex))
        result = project_physical(target)
        assert result.converged
        assert result.report.max_violation() < 1e-8
        assert np.linalg.eigvalsh(result.w_phys.mat).min() > -1e-9

    def test_positive_violations_decrease_monotonically(self, strong_params):
        rng = np.random.default_rng(38)
        w = model_process_matrix(strong_params)
        h = random_hermitian(rng, 16, traceless=True, unit_norm=True)
        target = LabeledOperator(PROCESS_LABELS, w.mat + 0.1 * h)
        result = project_physical(target, record_history=True)
        drops = [-r.psd_violation for r in result.history]
        for earlier, later in zip(drops, drops[1:]):
            assert later <= earlier + 1e-12

    def test_never_beaten_by_other_valid_processes(self, strong_params):
        rng = np.random.default_rng(39)
        w = model_process_matrix(strong_params)
        h = random_hermitian(rng, 16, traceless=True, unit_norm=True)
        target = LabeledOperator(PROCESS_LABELS, w.mat + 0.15 * h)
        result = project_physical(target)
        candidates = [w, ideal_process_matrix()] + [random_valid_process(rng) for _ in range(10)]
        for candidate in candidates:
            assert result.distance <= np.linalg.norm(target.mat - candidate.mat) + 1e-6

    def test_non_convergence_reported(self, strong_params):
        rng = np.random.default_rng(40)
        w = model_process_matrix(strong_params)
        h = random_hermitian(rng, 16, traceless=True, unit_norm=True)
        target = LabeledOperator(PROCESS_LABELS, w.mat + 0.2 * h)
        result = project_physical(target, max_iter=2)
        assert not result.converged
        assert result.iterations == 2
        assert isinstance(result.report, CombConstraintReport)

    def test_report_round_trip(self, tmp_path, strong_params):
        w = model_process_matrix(strong_params)
        result = project_physical(w)
        path = str(tmp_path / "report.txt")
        write_report(path, result)
        header = read_report(path)
        assert header["converged"] == "true"
        assert float(header["distance"]) == pytest.approx(result.distance)
