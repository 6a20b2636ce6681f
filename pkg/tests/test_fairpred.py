import logging

import numpy as np
import pytest

from src.cevae import CevaeModel, DecodeMode, TrainConfig, infer, reconstruct, train
from src.errors import ContractError
from src.fairpred import (
    DEFAULT_SWEEP,
    AuxConfig,
    AuxModel,
    AuxPredictor,
    InputSelection,
    accuracy,
    baselines,
    bce,
    build_inputs,
    load_aux,
    parse_selections,
    predict,
    raw_features,
    save_aux,
    sweep,
    train_aux,
    world_inputs,
)
from src.graph import parse_paths
from src.metrics import oracle_cf, oracle_pscf
from src.nnet import (
    HeadKind,
    HeadSpec,
    Mlp,
    MlpSpec,
    ParamStore,
    grad_check,
    log_prob,
    log_prob_grad,
    scale_grad,
)
from src.scm import CounterfactualWorld, sample_dataset

FAST = AuxConfig(hidden_dims=(16,), epochs=5, learning_rate=1e-2)
LONGER = FAST.model_copy(update={"epochs": 30})


@pytest.fixture(scope="module")
def observed(fig1c_data):
    return fig1c_data.drop("Z")


def _separable(rng, n=400):
    x = rng.normal(size=(n, 2))
    y = (x[:, 0] + x[:, 1] > 0).astype(float)
    x[:, 0] += np.where(y == 1, 0.5, -0.5)
    return x, y


class TestInputSelection:
    def test_parse(self):
        sel = InputSelection.parse("Z, B ,R*", base_a=0)
        assert sel.tokens == ("Z", "B", "R*")
        assert sel.base_a == 0.0
        assert sel.label == "Z,B,R*"

    def test_resolved_token_needs_base(self):
        with pytest.raises(ContractError):
            InputSelection.parse("Z,R*")
        with pytest.raises(ContractError):
            InputSelection.parse("Z,R*", base_a=2)

    def test_duplicates(self):
        with pytest.raises(ContractError):
            InputSelection.parse("Z,B,Z")

    def test_resolving_node_and_its_blocked_version_exclusive(self, fig1c_cevae):
        with pytest.raises(ContractError):
            InputSelection.parse("Z,R,R*", base_a=0).validate(fig1c_cevae)

    @pytest.mark.parametrize("text", ["Z,Y", "Z,Q"])
    def test_unknown_tokens(self, fig1c_cevae, text):
        with pytest.raises(ContractError):
            InputSelection.parse(text).validate(fig1c_cevae)

    def test_default_sweep_is_valid_on_fig1c(self, fig1c_cevae):
        for sel in parse_selections(DEFAULT_SWEEP, base_a=0):
            sel.validate(fig1c_cevae)
        assert parse_selections(["Z,B"], base_a=1)[0].base_a is None

    def test_feature_names(self, fig1c_cevae):
        names = InputSelection.parse("Z,B,R*", base_a=1).feature_names(fig1c_cevae)
        assert names == ["Z0", "Z1", "Z2", "b", "r*"]


class TestBuildInputs:
    def test_widths(self, fig1c_cevae, observed):
        dim = fig1c_cevae.layout.latent_dim
        assert build_inputs(fig1c_cevae, observed, InputSelection(("Z",))).shape == (
            observed.n, dim,
        )
        sel = InputSelection.parse("Z,B,R*", base_a=0)
        assert build_inputs(fig1c_cevae, observed, sel).shape == (observed.n, dim + 2)

    def test_sensitive_copied_verbatim(self, fig1c_cevae, observed):
        x = build_inputs(fig1c_cevae, observed, InputSelection(("A",)))
        assert np.array_equal(x, observed.node("A"))

    def test_latent_is_posterior_mean(self, fig1c_cevae, observed):
        x = build_inputs(fig1c_cevae, observed, InputSelection(("Z",)))
        assert np.array_equal(x, infer(fig1c_cevae, observed).mean)

    @pytest.mark.parametrize("text", ["Z", "Z,B"])
    def test_fair_selections_ignore_sensitive_value(self, fig1c_cevae, observed, text):
        z = infer(fig1c_cevae, observed).mean
        switched = observed.with_values(A=1.0 - observed.node("A"))
        sel = InputSelection.parse(text)
        factual = build_inputs(fig1c_cevae, observed, sel, z=z)
        assert np.array_equal(factual, build_inputs(fig1c_cevae, switched, sel, z=z))

    def test_blocked_resolving_at_observed_base(self, fig1c_cevae, observed):
        untreated = observed.take(np.flatnonzero(observed.node("A")[:, 0] == 0))
        r_star = build_inputs(fig1c_cevae, untreated, InputSelection(("R*",), base_a=0.0))
        rec = reconstruct(fig1c_cevae, untreated, DecodeMode.MEAN).data
        assert np.allclose(r_star, rec.node("R"))

    def test_sampled_latent_differs(self, fig1c_cevae, observed):
        sel = InputSelection(("Z",))
        mean = build_inputs(fig1c_cevae, observed, sel)
        sampled = build_inputs(fig1c_cevae, observed, sel, sample_z=True, seed=1)
        assert not np.array_equal(mean, sampled)

    def test_identity_world_matches_factual_inputs(self, fig1c_cevae, fig1c_scm, fig1c_data):
        sel = InputSelection.parse("Z,B,X,R")
        world = CounterfactualWorld.identity(fig1c_scm, fig1c_data)
        assert np.array_equal(
            world_inputs(fig1c_cevae, world, sel), build_inputs(fig1c_cevae, fig1c_data, sel)
        )


class TestTrainAux:
    def test_separable(self, rng):
        x, y = _separable(rng)
        aux = train_aux(x, y, FAST.model_copy(update={"epochs": 100}))
        assert accuracy(aux, x, y) >= 0.99
        assert len(aux.losses) == 100

    def test_chance_level(self, rng):
        x = rng.normal(size=(8000, 3))
        y = rng.integers(0, 2, 8000).astype(float)
        aux = train_aux(x[:4000], y[:4000], FAST)
        assert accuracy(aux, x[4000:], y[4000:]) == pytest.approx(0.5, abs=0.03)

    def test_constant_labels(self, rng, caplog):
        x = rng.normal(size=(500, 2))
        y = np.zeros(500)
        config = AuxConfig.logistic(epochs=50, learning_rate=5e-2)
        with caplog.at_level(logging.WARNING):
            aux = train_aux(x, y, config)
        assert "labels equal" in caplog.text
        assert predict(aux, x).max() < 0.1
        assert bce(aux, x, y) < 0.1

    def test_deterministic_per_seed(self, rng):
        x, y = _separable(rng)
        first = train_aux(x, y, FAST)
        second = train_aux(x, y, FAST)
        assert np.array_equal(predict(first, x), predict(second, x))

    def test_input_validation(self, rng):
        x = rng.normal(size=(10, 2))
        with pytest.raises(ContractError):
            train_aux(x, np.full(10, 0.5))
        with pytest.raises(ContractError):
            train_aux(x, np.zeros(9))
        bad = x.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ContractError):
            train_aux(bad, np.zeros(10))

    def test_zero_weights_predict_one_half(self, rng):
        spec = MlpSpec(input_dim=2, hidden_dims=(), output_heads=(HeadSpec(HeadKind.BERNOULLI, 1),))
        aux = AuxModel(Mlp(spec, ParamStore.allocate(spec.layer_shapes())))
        x = rng.normal(size=(40, 2))
        y = np.array([1.0] * 10 + [0.0] * 30)
        assert np.all(predict(aux, x) == 0.5)
        assert accuracy(aux, x, y) == pytest.approx(0.25)

    def test_width_mismatch(self, rng):
        x, y = _separable(rng, 50)
        aux = train_aux(x, y, FAST)
        with pytest.raises(ContractError):
            predict(aux, np.zeros((3, 5)))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("hidden_dims", [(100,), ()])
    def test_bce_gradient_matches_finite_differences(self, seed, hidden_dims):
        rng = np.random.default_rng(seed)
        x, y = _separable(rng, 64)
        config = FAST.model_copy(update={"hidden_dims": hidden_dims, "epochs": 1, "seed": seed})
        aux = train_aux(x, y, config)
        target = y.reshape(-1, 1)

        def loss(heads):
            (out,) = heads
            value = -float(log_prob(out.spec, out.params, target).mean())
            grad = scale_grad(log_prob_grad(out.spec, out.params, target), -1.0 / y.size)
            return value, [grad]

        assert loss(aux.mlp.predict(x))[0] == pytest.approx(bce(aux, x, y))
        assert grad_check(aux.mlp, x, loss) <= 1e-4

    def test_save_and_load(self, rng, tmp_path):
        x, y = _separable(rng, 50)
        sel = InputSelection.parse("Z,B,R*", base_a=1)
        aux = train_aux(x, y, FAST, sel)
        restored = load_aux(save_aux(aux, tmp_path / "aux.json"))
        assert restored.selection == sel
        assert restored.losses == pytest.approx(aux.losses)
        assert np.array_equal(predict(restored, x), predict(aux, x))


class TestBaselines:
    def test_outcome_equal_to_sensitive(self, appendix_scm, appendix_data):
        data = appendix_data.with_values(Y=appendix_data.node("A"))
        table = baselines(appendix_scm.graph, data, LONGER, repetitions=2, train_fraction=0.5)
        assert list(table["model"]) == ["MLP", "LogisticRegression"]
        assert (table["accuracy_mean"] >= 0.95).all()

    def test_independent_outcome(self, appendix_scm, appendix_data, rng):
        noise = rng.integers(0, 2, appendix_data.n).astype(float)
        data = appendix_data.with_values(Y=noise)
        table = baselines(appendix_scm.graph, data, FAST, repetitions=2, train_fraction=0.5)
        assert np.allclose(table["accuracy_mean"], 0.5, atol=0.06)

    def test_raw_features_include_sensitive(self, appendix_scm, appendix_data):
        x = raw_features(appendix_scm.graph, appendix_data)
        assert x.shape == (appendix_data.n, 4)


class TestSweep:
    def test_table_and_runs(self, fig1c_cevae, observed):
        selections = parse_selections(["Z", "Z,B,R*", "Z,B,R,X,A"], base_a=0)
        table, runs = sweep(fig1c_cevae, observed, selections, FAST, repetitions=2)
        assert list(table["selection"]) == ["Z", "Z,B,R*", "Z,B,R,X,A"]
        assert len(runs) == 6
        for column in ("accuracy", "sp_score"):
            assert runs[column].between(0.0, 1.0).all()

    def test_independent_of_jobs(self, fig1c_cevae, observed):
        selections = parse_selections(["Z,B"], base_a=None)
        serial, _ = sweep(fig1c_cevae, observed, selections, FAST, repetitions=3, jobs=1)
        threaded, _ = sweep(fig1c_cevae, observed, selections, FAST, repetitions=3, jobs=3)
        assert serial.equals(threaded)

    def test_rejects_invalid_selection(self, fig1c_cevae, observed):
        with pytest.raises(ContractError):
            sweep(fig1c_cevae, observed, [InputSelection(("Y",))], FAST, repetitions=1)


class TestAuxPredictor:
    def _trained(self, cevae, data, text):
        sel = InputSelection.parse(text, base_a=0)
        x = build_inputs(cevae, data, sel)
        return train_aux(x, data.node("Y")[:, 0], FAST, sel)

    def test_latent_only_model_is_counterfactually_fair(self, fig1c_cevae, fig1c_scm, observed):
        aux = self._trained(fig1c_cevae, observed, "Z")
        assert oracle_cf(AuxPredictor(fig1c_cevae, aux), fig1c_scm, 500, seed=0) == 1.0

    def test_blocked_resolving_model_is_path_fair(self, fig1c_cevae, fig1c_scm, observed):
        aux = self._trained(fig1c_cevae, observed, "Z,B,R*")
        pi = parse_paths("A>Y,A>X>Y,A>X>R>Y")
        score = oracle_pscf(AuxPredictor(fig1c_cevae, aux), fig1c_scm, pi, 500, seed=0)
        assert score >= 0.99

    def test_sensitive_descendant_inputs_are_not_fair(self, fig1c_cevae, fig1c_scm, observed):
        aux = self._trained(fig1c_cevae, observed, "Z,B,R,X,A")
        assert oracle_cf(AuxPredictor(fig1c_cevae, aux), fig1c_scm, 500, seed=0) < 1.0

    def test_needs_selection(self, fig1c_cevae, rng):
        x, y = _separable(rng, 50)
        with pytest.raises(ContractError):
            AuxPredictor(fig1c_cevae, train_aux(x, y, FAST))


@pytest.mark.slow
class TestTradeoff:
    """Accuracy against group parity along the default sweep on a well-fitted fig1c model."""

    @pytest.fixture(scope="class")
    def table(self, fig1c_scm):
        data = sample_dataset(fig1c_scm, 10_000, seed=31).drop("Z")
        config = TrainConfig(epochs=30, learning_rate=3e-3, seed=0)
        model = CevaeModel.build(fig1c_scm.graph, data.profile, config)
        train(model, data)
        selections = parse_selections(DEFAULT_SWEEP, base_a=0)
        table, _ = sweep(model, data, selections, AuxConfig(), repetitions=5, seed=0)
        return table

    def test_accuracy_non_decreasing(self, table):
        assert list(table["selection"]) == list(DEFAULT_SWEEP)
        assert np.all(np.diff(table["accuracy_mean"]) >= -0.01)

    def test_parity_non_increasing(self, table):
        assert np.all(np.diff(table["sp_mean"]) <= 0.01)
