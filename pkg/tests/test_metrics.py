import numpy as np
import pytest
from scipy.special import expit

from src.cevae import CevaeModel
from src.errors import ContractError, IdentifiabilityError
from src.graph import enumerate_paths, parse_paths
from src.metrics import (
    BIMODALITY_THRESHOLD,
    CfMode,
    PredictionPair,
    bimodality_coefficient,
    cf_score,
    feature_predictor,
    ks_same_distribution,
    latent_gap,
    oracle_cf,
    oracle_pscf,
    round_predictions,
    statistical_parity_score,
)
from tests.conftest import SMALL_TRAIN


def _labels(positives, total):
    return np.array([1.0] * positives + [0.0] * (total - positives))


class TestStatisticalParity:
    def test_equal_rates(self):
        y = np.array([1.0, 0.0, 1.0, 0.0])
        a = np.array([0, 0, 1, 1])
        assert statistical_parity_score(y, a) == 1.0

    def test_rate_difference(self):
        y = np.concatenate([_labels(3, 10), _labels(5, 10)])
        a = np.repeat([0, 1], 10)
        assert statistical_parity_score(y, a) == pytest.approx(0.8)

    def test_opposite_groups(self):
        y = np.array([0.9, 0.8, 0.1, 0.2])
        a = np.array([0, 0, 1, 1])
        assert statistical_parity_score(y, a) == 0.0

    def test_relabeling_groups(self, rng):
        y = rng.random(200)
        a = rng.integers(0, 2, 200)
        assert statistical_parity_score(y, a) == statistical_parity_score(y, 1 - a)

    def test_empty_group(self):
        with pytest.raises(ContractError):
            statistical_parity_score(np.array([0.2, 0.7]), np.array([1, 1]))

    def test_tie_rounds_up(self):
        assert np.array_equal(round_predictions(np.array([0.5, 0.49])), [1, 0])


class TestCfScore:
    def test_identical_columns(self, rng):
        p = rng.random(50)
        pair = PredictionPair(p, p.copy(), rng.integers(0, 2, 50))
        assert cf_score(pair, CfMode.MEAN_ABS) == 1.0
        assert cf_score(pair, CfMode.FLIP_RATE) == 1.0

    def test_all_flipped(self):
        f = np.array([0.0, 1.0, 1.0, 0.0])
        pair = PredictionPair(f, 1.0 - f, np.array([0, 1, 0, 1]))
        assert cf_score(pair, "mean_abs") == 0.0
        assert cf_score(pair, "flip_rate") == 0.0

    def test_modes_differ(self):
        pair = PredictionPair(np.array([0.6, 0.2]), np.array([0.9, 0.4]), np.array([0, 1]))
        assert cf_score(pair) == pytest.approx(0.75)
        assert cf_score(pair, CfMode.FLIP_RATE) == 1.0

    def test_probabilities_checked(self):
        with pytest.raises(ContractError):
            PredictionPair(np.array([1.2]), np.array([0.5]), np.array([0]))
        with pytest.raises(ContractError):
            PredictionPair(np.array([0.1, 0.2]), np.array([0.5]), np.array([0, 1]))

    def test_empty(self):
        empty = np.array([])
        with pytest.raises(ContractError):
            cf_score(PredictionPair(empty, empty, empty))


class TestOracleCf:
    def test_non_descendant_inputs_score_one(self, fig1c_linear):
        predictor = feature_predictor(["B"], lambda m: expit(m[:, 0]))
        assert oracle_cf(predictor, fig1c_linear, 500, seed=0) == 1.0

    def test_sensitive_indicator_scores_zero(self, fig1c_linear):
        predictor = feature_predictor(["A"], lambda m: m[:, 0])
        assert oracle_cf(predictor, fig1c_linear, 500, seed=0) == 0.0

    def test_descendant_inputs_score_below_one(self, appendix_scm):
        predictor = feature_predictor(["X"], lambda m: expit(m.sum(axis=1)))
        assert oracle_cf(predictor, appendix_scm, 500, seed=0) < 1.0

    def test_predictor_size_checked(self, fig1c_linear):
        with pytest.raises(ContractError):
            oracle_cf(lambda world: np.zeros(3), fig1c_linear, 10, seed=0)


class TestOraclePscf:
    def test_empty_path_set(self, fig1c_linear):
        predictor = feature_predictor(["X", "R"], lambda m: expit(m.sum(axis=1)))
        score = oracle_pscf(predictor, fig1c_linear, frozenset(), 500, seed=1)
        assert score == pytest.approx(1.0)

    def test_all_paths_match_oracle_cf(self, fig1c_linear, fig1c_graph):
        predictor = feature_predictor(["X", "R"], lambda m: expit(m.sum(axis=1)))
        everything = frozenset(enumerate_paths(fig1c_graph))
        score = oracle_pscf(predictor, fig1c_linear, everything, 500, seed=1)
        assert score == pytest.approx(oracle_cf(predictor, fig1c_linear, 500, seed=1))

    def test_blocked_resolving_input_is_invariant(self, fig1c_scm):
        def r_star_predictor(world):
            feats = np.hstack([world.node("Z"), world.node("B"), world.blocked("R", 0.0)])
            return expit(feats.sum(axis=1))

        def raw_predictor(world):
            feats = np.hstack([world.node("Z"), world.node("B"), world.node("R")])
            return expit(feats.sum(axis=1))

        pi = parse_paths("A>Y,A>X>Y,A>X>R>Y")
        assert oracle_pscf(r_star_predictor, fig1c_scm, pi, 10_000, seed=2) >= 0.99
        assert oracle_pscf(raw_predictor, fig1c_scm, pi, 10_000, seed=2) < 1.0

    def test_non_identifiable(self, fig1c_linear):
        predictor = feature_predictor(["B"], lambda m: expit(m[:, 0]))
        with pytest.raises(IdentifiabilityError) as exc:
            oracle_pscf(predictor, fig1c_linear, parse_paths("A>X>Y"), 100, seed=0)
        assert exc.value.witness == "X"


class TestLatentGap:
    def test_zero_weights(self, appendix_scm, appendix_data):
        model = CevaeModel.build(appendix_scm.graph, appendix_data.profile, SMALL_TRAIN)
        model.encoder.params.values[...] = 0.0
        gap = latent_gap(model, appendix_data)
        assert gap.max == 0.0
        assert gap.per_dimension.shape == (SMALL_TRAIN.latent_dim,)

    def test_row(self, appendix_cevae, appendix_data):
        row = latent_gap(appendix_cevae, appendix_data).to_row()
        assert set(row) == {"latent_gap_0", "latent_gap_1", "latent_gap_2", "latent_gap_max"}
        assert all(v >= 0.0 for v in row.values())

    def test_single_group(self, appendix_cevae, appendix_data):
        treated = appendix_data.take(np.flatnonzero(appendix_data.node("A")[:, 0] == 1))
        with pytest.raises(ContractError):
            latent_gap(appendix_cevae, treated)


class TestDistribution:
    def test_normal_is_unimodal(self, rng):
        assert bimodality_coefficient(rng.normal(size=5000)) < BIMODALITY_THRESHOLD

    def test_two_modes(self, rng):
        values = np.concatenate([rng.normal(-3, 1, 2500), rng.normal(3, 1, 2500)])
        assert bimodality_coefficient(values) > BIMODALITY_THRESHOLD

    def test_needs_four_values(self):
        with pytest.raises(ContractError):
            bimodality_coefficient(np.array([1.0, 2.0, 3.0]))

    def test_ks(self, rng):
        a = rng.normal(size=2000)
        assert not ks_same_distribution(a, rng.normal(1.0, 1.0, 2000))
