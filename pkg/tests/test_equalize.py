import numpy as np
import pytest

from lramimo.equalize import (
    ALL_SPECS,
    Criterion,
    EqualizerSpec,
    ReductionTarget,
    Structure,
    build_detector,
    detect,
    detect_block,
    le_mmse_matrix,
    le_zf_matrix,
    lra_le_error_covariance,
    lra_le_mmse_matrix,
    lra_le_zf_matrix,
)
from lramimo.estimate import error_covariance
from lramimo.lattice import lll_reduce, matrix_to_float
from lramimo.model import MimoChannel, apply_channel, make_ask_constellation


class TestReceiveMatrices:
    def test_zf_inverts_square_channel(self):
        h = np.array([[1.0, 0.0], [1.0, 1.0]])
        np.testing.assert_allclose(le_zf_matrix(h), [[1.0, 0.0], [-1.0, 1.0]], atol=1e-12)

    def test_zf_tall_matches_normal_equations(self):
        rng = np.random.default_rng(2)
        h = rng.normal(size=(5, 3))
        got = le_zf_matrix(h)
        want = np.linalg.solve(h.T @ h, h.T)
        np.testing.assert_allclose(got, want, atol=1e-10)

    def test_mmse_single_column_frozen(self):
        # Two unit taps, inv_snr 1/2: weights 1 / (2 + 0.5) each.
        got = le_mmse_matrix(np.array([[1.0], [1.0]]), 0.5)
        np.testing.assert_allclose(got, [[0.4, 0.4]], atol=1e-14)

    def test_mmse_zero_ratio_equals_zf(self):
        h = np.random.default_rng(4).normal(size=(4, 3))
        np.testing.assert_allclose(le_mmse_matrix(h, 0.0), le_zf_matrix(h), atol=1e-10)

    def test_mmse_augmented_route_equals_regularized_solve(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            n = int(rng.integers(1, 5))
            h = rng.normal(size=(n + int(rng.integers(0, 3)), n))
            zeta = 10.0 ** (-rng.uniform(0, 30) / 10.0)
            direct = np.linalg.solve(h.T @ h + zeta * np.eye(n), h.T)
            np.testing.assert_allclose(le_mmse_matrix(h, zeta), direct, atol=1e-12)

    def test_mmse_rejects_negative_ratio(self):
        with pytest.raises(ValueError):
            le_mmse_matrix(np.eye(2), -0.1)

    def test_lra_mmse_shear_frozen(self):
        # Unit channel, shear basis change, inv_snr 1: Z (2I)^-1 = Z/2.
        z = np.array([[1, 1], [0, 1]], dtype=object)
        got = lra_le_mmse_matrix(np.eye(2), z, 1.0)
        np.testing.assert_allclose(got, [[0.5, 0.5], [0.0, 0.5]], atol=1e-14)

    def test_lra_mmse_identity_transform_equals_plain_mmse(self):
        rng = np.random.default_rng(8)
        h = rng.normal(size=(4, 3))
        zeta = 0.2
        got = lra_le_mmse_matrix(h, np.eye(3, dtype=int), zeta)
        np.testing.assert_allclose(got, le_mmse_matrix(h, zeta), atol=1e-12)

    def test_lra_zf_is_reduced_basis_pinv(self):
        rng = np.random.default_rng(10)
        h = rng.normal(size=(4, 3))
        rb = lll_reduce(h)
        got = lra_le_zf_matrix(rb.reduced)
        np.testing.assert_allclose(got @ rb.reduced, np.eye(3), atol=1e-10)

    def test_lra_error_covariance_matches_estimator_theory(self):
        # Same object through the generic Gaussian estimator covariance.
        rng = np.random.default_rng(12)
        for _ in range(15):
            n = int(rng.integers(2, 5))
            h = rng.normal(size=(n + 1, n))
            noise_var, symbol_var = 0.1, 1.25
            zeta = noise_var / symbol_var
            rb = lll_reduce(h)
            zf = matrix_to_float(rb.unimodular)
            got = lra_le_error_covariance(rb.reduced, rb.unimodular, zeta, noise_var)
            want = error_covariance(
                rb.reduced,
                noise_var * np.eye(n + 1),
                symbol_var * (zf @ zf.T),
            )
            np.testing.assert_allclose(got, want, atol=1e-10)


class TestEqualizerSpec:
    def test_all_spec_ids_frozen(self):
        assert {s.spec_id for s in ALL_SPECS} == {
            "le-zf",
            "le-mmse",
            "dfe-zf",
            "dfe-mmse",
            "le-zf-lra-orig",
            "dfe-zf-lra-orig",
            "le-mmse-lra-orig",
            "le-mmse-lra-aug",
            "dfe-mmse-lra-orig",
            "dfe-mmse-lra-aug",
        }
        assert len(ALL_SPECS) == 10

    def test_mmse_lra_defaults_to_augmented_target(self):
        spec = EqualizerSpec(Structure.LINEAR, Criterion.MMSE, lra=True)
        assert spec.reduction_target is ReductionTarget.AUGMENTED
        assert spec.spec_id == "le-mmse-lra-aug"

    def test_zf_lra_pins_original_target(self):
        spec = EqualizerSpec(Structure.DFE, Criterion.ZF, lra=True)
        assert spec.reduction_target is ReductionTarget.ORIGINAL

    def test_non_lra_clears_target(self):
        spec = EqualizerSpec(Structure.LINEAR, Criterion.ZF, reduction_target=ReductionTarget.ORIGINAL)
        assert spec.reduction_target is None

    def test_augmented_target_requires_mmse(self):
        with pytest.raises(ValueError):
            EqualizerSpec(Structure.LINEAR, Criterion.ZF, lra=True, reduction_target=ReductionTarget.AUGMENTED)
        with pytest.raises(ValueError):
            EqualizerSpec(Structure.LINEAR, Criterion.MMSE, lra=False, reduction_target=ReductionTarget.AUGMENTED)

    def test_from_dict_aliases(self):
        spec = EqualizerSpec.from_dict(
            {"structure": "linear", "criterion": "MMSE", "lra": True, "reduction_target": "original"}
        )
        assert spec.spec_id == "le-mmse-lra-orig"

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValueError):
            EqualizerSpec.from_dict({"structure": "le", "criterion": "zf", "sorted": True})
        with pytest.raises(ValueError):
            EqualizerSpec.from_dict({"structure": "le", "criterion": "map"})

    def test_from_dict_round_trip(self):
        for spec in ALL_SPECS:
            again = EqualizerSpec.from_dict(
                {
                    "structure": spec.structure.value,
                    "criterion": spec.criterion.value,
                    "lra": spec.lra,
                    "reduction_target": None if spec.reduction_target is None else spec.reduction_target.value,
                }
            )
            assert again == spec


class TestWorkedTranslateExample:
    # Channel [[1,1],[0,1]] reduces to the identity with basis change
    # [[1,1],[0,1]]; the symbol pair (0.5, -0.5) maps to the transformed
    # point (0, -0.5), whose entries sit on two different integer
    # translates.
    def test_lra_zf_le_chain(self):
        channel = MimoChannel(np.array([[1.0, 1.0], [0.0, 1.0]]), noise_var=0.0, symbol_var=0.25)
        constellation = make_ask_constellation(2)
        det = build_detector(EqualizerSpec(Structure.LINEAR, Criterion.ZF, lra=True), channel)
        np.testing.assert_allclose(matrix_to_float(det.reduction.unimodular), [[1.0, 1.0], [0.0, 1.0]])
        np.testing.assert_allclose(det.reduction.reduced, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(det.z_offset, [1.0, 0.5], atol=1e-12)

        a = np.array([0.5, -0.5])
        res = detect(det, apply_channel(channel, a), constellation)
        np.testing.assert_allclose(res.z_hat, [0.0, -0.5], atol=1e-12)
        np.testing.assert_allclose(res.a_hat, a, atol=1e-12)
        assert res.clipped == 0
        assert res.order is None


class TestNoiselessRecovery:
    @pytest.mark.parametrize("order", [2, 4])
    def test_all_specs_recover_exactly(self, order):
        constellation = make_ask_constellation(order)
        rng = np.random.default_rng(100 + order)
        for _ in range(15):
            n = int(rng.integers(2, 5))
            h = rng.normal(size=(n + int(rng.integers(0, 2)), n))
            channel = MimoChannel(h, noise_var=0.0, symbol_var=constellation.variance)
            a = rng.choice(constellation.points, size=n)
            y = apply_channel(channel, a)
            for spec in ALL_SPECS:
                res = detect(build_detector(spec, channel), y, constellation)
                np.testing.assert_array_equal(
                    res.a_hat, a, err_msg=f"{spec.spec_id} failed on {h!r}"
                )
                assert res.clipped == 0


class TestDetectionBookkeeping:
    @staticmethod
    def _channel(n=3, seed=0, zeta=0.1):
        h = np.random.default_rng(seed).normal(size=(n, n))
        return MimoChannel(h, noise_var=zeta, symbol_var=1.0)

    def test_z_hat_only_for_lra(self):
        channel = self._channel()
        constellation = make_ask_constellation(2)
        y = np.zeros(3)
        for spec in ALL_SPECS:
            res = detect(build_detector(spec, channel), y, constellation)
            assert (res.z_hat is not None) == spec.lra, spec.spec_id

    def test_order_only_for_dfe(self):
        channel = self._channel()
        constellation = make_ask_constellation(2)
        y = np.zeros(3)
        for spec in ALL_SPECS:
            res = detect(build_detector(spec, channel), y, constellation)
            if spec.structure is Structure.DFE:
                assert sorted(res.order) == [0, 1, 2]
            else:
                assert res.order is None

    def test_detect_matches_detect_block(self):
        channel = self._channel(seed=5)
        constellation = make_ask_constellation(4)
        rng = np.random.default_rng(6)
        ys = rng.normal(size=(3, 8))
        for spec in ALL_SPECS:
            det = build_detector(spec, channel)
            block, _, _ = detect_block(det, ys, constellation)
            for j in range(ys.shape[1]):
                single = detect(det, ys[:, j], constellation)
                np.testing.assert_array_equal(single.a_hat, block[:, j])

    def test_clip_count_on_wild_observation(self):
        channel = MimoChannel(np.eye(2), noise_var=0.0, symbol_var=0.25)
        constellation = make_ask_constellation(2)
        spec = EqualizerSpec(Structure.LINEAR, Criterion.ZF, lra=True)
        res = detect(build_detector(spec, channel), np.array([10.0, 0.0]), constellation)
        assert res.clipped == 1
        np.testing.assert_allclose(res.a_hat, [0.5, 0.5])
        # plain slicing clips silently to the alphabet edge
        plain = detect(
            build_detector(EqualizerSpec(Structure.LINEAR, Criterion.ZF), channel),
            np.array([10.0, 0.0]),
            constellation,
        )
        assert plain.clipped == 0
        np.testing.assert_allclose(plain.a_hat, [0.5, 0.5])

    def test_shape_validation(self):
        channel = self._channel()
        constellation = make_ask_constellation(2)
        det = build_detector(ALL_SPECS[0], channel)
        with pytest.raises(ValueError):
            detect(det, np.zeros((3, 2)), constellation)
        with pytest.raises(ValueError):
            detect_block(det, np.zeros((4, 2)), constellation)

    def test_mmse_dfe_feedforward_drops_regularizer_columns(self):
        channel = self._channel(n=4, seed=9, zeta=0.2)
        for target in ReductionTarget:
            spec = EqualizerSpec(Structure.DFE, Criterion.MMSE, lra=True, reduction_target=target)
            det = build_detector(spec, channel)
            assert det.feedforward.shape == (4, 4)
            assert det.feedback.shape == (4, 4)
