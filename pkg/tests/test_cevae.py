import numpy as np
import pytest
from scipy.special import logsumexp

from src.cevae import (
    APolicy,
    CevaeModel,
    DecodeMode,
    TrainConfig,
    counterfactual_reconstruct,
    decoding_summary,
    elbo,
    elbo_pass,
    infer,
    load_checkpoint,
    model_from_document,
    model_to_document,
    nested_r_star,
    reconstruct,
    save_checkpoint,
    train,
)
from src.cevae.model import encode_values, sensitive_codes
from src.dataset import ColumnSpec, DataProfile, DistKind
from src.errors import ContractError, NumericalAbort
from src.graph import Role, builtin
from src.metrics import latent_gap_hook
from src.nnet import log_prob, numeric_gradient, relative_error
from src.scm import linear_gaussian_scm, sample_dataset
from tests.conftest import SMALL_TRAIN


def _fresh(graph, data, **overrides):
    config = SMALL_TRAIN.model_copy(update=overrides)
    return CevaeModel.build(graph, data.profile, config)


def _copy(model):
    return model_from_document(model_to_document(model))


class TestLayout:
    def test_fig1a(self, appendix_cevae):
        layout = appendix_cevae.layout
        assert layout.latent == "Z"
        assert set(layout.inference_inputs) == {"A", "X"}
        assert set(layout.generated) == {"X", "Y"}
        assert set(layout.decoder_inputs["Y"]) == {"X", "Z"}
        assert layout.tar == {"X": True, "Y": True}

    def test_fig1c(self, fig1c_cevae):
        layout = fig1c_cevae.layout
        assert set(layout.inference_inputs) == {"A", "B", "X", "R"}
        assert "Y" not in layout.inference_inputs
        assert set(layout.generated) == {"X", "R", "Y"}
        assert set(layout.decoder_inputs["R"]) == {"Z", "B", "X"}

    def test_profile_must_cover_graph(self, fig1c_graph, appendix_data):
        with pytest.raises(ContractError):
            CevaeModel.build(fig1c_graph, appendix_data.profile, SMALL_TRAIN)

    def test_latent_is_not_an_input(self, appendix_cevae):
        assert "Z" not in appendix_cevae.profile.nodes

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(unknown=1)


class TestInference:
    def test_zero_weights(self, appendix_scm, appendix_data):
        model = _fresh(appendix_scm.graph, appendix_data)
        model.encoder.params.values[...] = 0.0
        post = infer(model, appendix_data)
        assert np.all(post.mean == 0.0)
        assert np.allclose(post.sd, np.log(2.0))

    def test_sd_floor(self, appendix_cevae, appendix_data):
        assert np.all(infer(appendix_cevae, appendix_data).sd >= 0.1)

    def test_identical_records(self, appendix_cevae, appendix_data):
        twice = appendix_data.take(np.array([4, 4]))
        post = infer(appendix_cevae, twice)
        assert np.array_equal(post.mean[0], post.mean[1])

    def test_outcome_is_ignored(self, appendix_cevae, appendix_data):
        flipped = appendix_data.with_values(Y=1.0 - appendix_data.node("Y"))
        a = infer(appendix_cevae, appendix_data).mean
        b = infer(appendix_cevae, flipped).mean
        assert np.array_equal(a, b)

    def test_missing_input(self, appendix_cevae, appendix_data):
        with pytest.raises(ContractError):
            infer(appendix_cevae, appendix_data.drop("X"))

    def test_sensitive_must_be_binary(self):
        with pytest.raises(ContractError):
            sensitive_codes(np.array([0.0, 0.5]))

    def test_categorical_encoding(self):
        profile = DataProfile((ColumnSpec("c", "C", Role.COVARIATE, DistKind.CATEGORICAL, 3),))
        onehot = encode_values(profile, "C", np.array([[0.0], [2.0]]))
        assert np.array_equal(onehot, [[1, 0, 0], [0, 0, 1]])
        with pytest.raises(ContractError):
            encode_values(profile, "C", np.array([[3.0]]))


class TestElbo:
    def test_total_is_sum_of_terms(self, appendix_cevae, appendix_data):
        terms = elbo(appendix_cevae, appendix_data.take(np.arange(100)), seed=0)
        assert terms.total == pytest.approx(terms.reg + terms.rec["X"] + terms.rec["Y"])
        row = terms.row()
        assert set(row) == {"reg", "rec_x", "rec_y", "total"}

    def test_posterior_equal_to_prior_has_zero_regulariser(self, appendix_scm, appendix_data):
        model = _fresh(appendix_scm.graph, appendix_data)
        model.encoder.params.values[...] = 0.0
        dim = model.layout.latent_dim
        model.encoder.params.view("head_00.b")[dim:] = np.log(np.e - 1.0)
        terms = elbo(model, appendix_data.take(np.arange(50)), seed=1)
        assert terms.reg == pytest.approx(0.0, abs=1e-9)

    def test_regulariser_is_negative_kl(self, appendix_cevae, appendix_data):
        terms = elbo(appendix_cevae, appendix_data, seed=2, n_mc_samples=10)
        assert terms.reg < 0.05

    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("graph", ["appendix", "fig1c"])
    def test_gradients_match_finite_differences(self, request, graph, seed):
        scm = request.getfixturevalue(f"{graph}_scm")
        data = request.getfixturevalue(f"{graph}_data")
        rng = np.random.default_rng(seed)
        model = _fresh(scm.graph, data, hidden_width=6, latent_dim=2, seed=seed)
        batch = data.take(np.arange(32))
        eps = rng.standard_normal((2, batch.n, 2))
        nets = model.networks()
        for net in nets.values():
            net.zero_grad()
        elbo_pass(model, batch, eps, backward=True)
        for name, net in nets.items():
            analytic = net.params.grads.copy()
            idx = np.sort(rng.choice(net.params.size, size=min(30, net.params.size), replace=False))
            numeric = numeric_gradient(
                lambda: -elbo_pass(model, batch, eps).total, net.params.values, idx
            )
            assert relative_error(analytic[idx], numeric) <= 1e-4, name

    def test_non_finite_record_aborts(self, appendix_cevae, appendix_data):
        batch = appendix_data.take(np.arange(20))
        x = batch.node("X").copy()
        x[7, 0] = np.nan
        with pytest.raises(NumericalAbort) as exc:
            elbo(appendix_cevae, batch.with_values(X=x))
        assert exc.value.index == 7

    def test_eps_shape_checked(self, appendix_cevae, appendix_data):
        batch = appendix_data.take(np.arange(5))
        with pytest.raises(ContractError):
            elbo_pass(appendix_cevae, batch, np.zeros((1, 4, 3)))


class TestElboBound:
    """With a one-dimensional latent the model's marginal likelihood is a quadrature."""

    COEFFICIENTS = {
        ("Z", "X"): 1.0, ("Z", "Y"): 0.5, ("A", "X"): 1.0, ("A", "Y"): 0.5, ("X", "Y"): 0.5,
    }

    @staticmethod
    def _log_marginal(model, data, degree=40):
        nodes, weights = np.polynomial.hermite_e.hermegauss(degree)
        a = sensitive_codes(data.node(model.layout.sensitive))
        terms = []
        for t, w in zip(nodes, weights):
            z = np.full((data.n, 1), t)
            ll = np.log(w) - 0.5 * np.log(2.0 * np.pi)
            for node in model.layout.generated:
                inputs, _ = model.decoder_input(node, data.values, z)
                routed = model.route(node, model.decoders[node].predict(inputs), a)
                ll = ll + log_prob(routed.spec, routed.params, data.node(node))
            terms.append(ll)
        return float(logsumexp(np.vstack(terms), axis=0).mean())

    def test_elbo_below_log_likelihood(self):
        scm = linear_gaussian_scm(builtin("fig1a"), self.COEFFICIENTS)
        data = sample_dataset(scm, 500, seed=5)
        model = _fresh(scm.graph, data, latent_dim=1)
        train(model, data)
        bound = elbo(model, data, seed=0, n_mc_samples=200).total
        assert bound < self._log_marginal(model, data)


class TestTraining:
    def test_improves_elbo(self, appendix_scm, appendix_data):
        model = _fresh(appendix_scm.graph, appendix_data)
        before = elbo(model, appendix_data, seed=0).total
        train(model, appendix_data)
        assert elbo(model, appendix_data, seed=0).total > before

    def test_deterministic_per_seed(self, appendix_scm, appendix_data):
        data = appendix_data.take(np.arange(300))
        first = _fresh(appendix_scm.graph, data, epochs=1)
        second = _fresh(appendix_scm.graph, data, epochs=1)
        train(first, data)
        train(second, data)
        assert np.array_equal(first.encoder.params.values, second.encoder.params.values)

    def test_epoch_rows_and_hooks(self, appendix_scm, appendix_data):
        model = _fresh(appendix_scm.graph, appendix_data, epochs=2)
        result = train(model, appendix_data, hooks=[latent_gap_hook(appendix_data)])
        assert len(result.history) == 2
        assert [row["epoch"] for row in result.rows] == [1, 2]
        for row in result.rows:
            assert {"reg", "rec_x", "rec_y", "total", "latent_gap_max"} <= set(row)

    def test_divergence_returns_last_checkpoint(self, appendix_scm, appendix_data):
        data = appendix_data.take(np.arange(300))
        x = data.node("X").copy()
        x[7, 1] = np.inf
        model = _fresh(appendix_scm.graph, data)
        with pytest.raises(NumericalAbort) as exc:
            train(model, data.with_values(X=x))
        assert exc.value.index == 7
        assert exc.value.checkpoint["version"] == 1


class TestDecoding:
    def test_mean_mode_is_deterministic(self, appendix_cevae, appendix_data):
        a = reconstruct(appendix_cevae, appendix_data, DecodeMode.MEAN, seed=0).data
        b = reconstruct(appendix_cevae, appendix_data, DecodeMode.MEAN, seed=9).data
        assert np.array_equal(a.node("X"), b.node("X"))

    def test_sample_mode_varies_with_seed(self, appendix_cevae, appendix_data):
        a = reconstruct(appendix_cevae, appendix_data, DecodeMode.SAMPLE, seed=0).data
        b = reconstruct(appendix_cevae, appendix_data, DecodeMode.SAMPLE, seed=1).data
        assert not np.array_equal(a.node("X"), b.node("X"))

    def test_set_to_observed_equals_reconstruction(self, appendix_cevae, appendix_data):
        a = appendix_data.node("A")
        factual = reconstruct(appendix_cevae, appendix_data, seed=3)
        same = counterfactual_reconstruct(appendix_cevae, appendix_data, APolicy.SET, a, seed=3)
        for node in ("X", "Y"):
            assert np.array_equal(factual.data.node(node), same.data.node(node))

    def test_switch_equals_set_to_flipped(self, appendix_cevae, appendix_data):
        flipped = 1.0 - appendix_data.node("A")
        switch = counterfactual_reconstruct(appendix_cevae, appendix_data, APolicy.SWITCH, seed=4)
        explicit = counterfactual_reconstruct(
            appendix_cevae, appendix_data, APolicy.SET, flipped, seed=4
        )
        assert np.array_equal(switch.data.node("X"), explicit.data.node("X"))
        assert np.array_equal(switch.data.node("A"), flipped)

    def test_set_needs_value(self, appendix_cevae, appendix_data):
        with pytest.raises(ContractError):
            counterfactual_reconstruct(appendix_cevae, appendix_data, APolicy.SET)

    def test_non_descendants_untouched(self, fig1c_cevae, fig1c_data):
        observed = fig1c_data.drop("Z")
        out = counterfactual_reconstruct(fig1c_cevae, observed, APolicy.SWITCH, seed=0).data
        assert np.array_equal(out.node("B"), observed.node("B"))

    def test_tar_heads_route_by_sensitive_value(self, appendix_cevae, appendix_data):
        model = _copy(appendix_cevae)
        x_net = model.decoders["X"]
        x_net.params.view("head_01.W")[...] = 0.0
        x_net.params.view("head_01.b")[...] = 0.0
        under_one = counterfactual_reconstruct(model, appendix_data, APolicy.SET, 1, "mean").data
        assert np.all(under_one.node("X") == 0.0)
        factual = reconstruct(model, appendix_data, DecodeMode.MEAN).data
        untreated = appendix_data.node("A")[:, 0] == 0
        assert np.any(factual.node("X")[untreated] != 0.0)

    def test_decoding_summary(self, appendix_cevae, appendix_data):
        table = decoding_summary(appendix_cevae, appendix_data)
        assert set(table["column"]) == {"x1", "x2", "x3", "y"}
        assert set(table["observed_a"]) == {0, 1}


class TestNestedRStar:
    def test_base_equal_to_observed_is_reconstruction(self, fig1c_cevae, fig1c_data):
        a = fig1c_data.node("A")
        r_star = nested_r_star(fig1c_cevae, fig1c_data, a, seed=5)
        factual = reconstruct(fig1c_cevae, fig1c_data, seed=5).data
        assert np.array_equal(r_star, factual.node("R"))

    def test_given_latent_is_used(self, fig1c_cevae, fig1c_data):
        z = np.zeros((fig1c_data.n, fig1c_cevae.layout.latent_dim))
        a = fig1c_data.node("A")
        first = nested_r_star(fig1c_cevae, fig1c_data, a, DecodeMode.MEAN, z=z)
        shifted = nested_r_star(fig1c_cevae, fig1c_data, a, DecodeMode.MEAN, z=z + 1.0)
        assert not np.array_equal(first, shifted)

    def test_needs_resolving_node(self, appendix_cevae, appendix_data):
        with pytest.raises(ContractError):
            nested_r_star(appendix_cevae, appendix_data, 0)


class TestCheckpoint:
    def test_restored_model_infers_identically(self, fig1c_cevae, fig1c_data, tmp_path):
        path = save_checkpoint(fig1c_cevae, tmp_path / "cevae.json")
        restored = load_checkpoint(path)
        assert restored.layout == fig1c_cevae.layout
        assert np.array_equal(infer(restored, fig1c_data).mean, infer(fig1c_cevae, fig1c_data).mean)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ContractError):
            load_checkpoint(tmp_path / "absent.json")


@pytest.mark.slow
class TestAppendixFit:
    """Full-size training on the appendix simulation."""

    def test_latent_tracks_true_confounder(self, appendix_fit):
        model, _, _, held_out = appendix_fit
        mu = infer(model, held_out).mean
        z = held_out.node("Z")[:, 0]
        design = np.hstack([mu, np.ones((mu.shape[0], 1))])
        coef, *_ = np.linalg.lstsq(design, z, rcond=None)
        assert np.corrcoef(design @ coef, z)[0, 1] > 0.5

    def test_reconstructed_covariate_means(self, appendix_fit):
        model, _, _, held_out = appendix_fit
        rec = reconstruct(model, held_out, seed=0).data
        a = held_out.node("A")[:, 0]
        for group in (0, 1):
            mean = rec.node("X")[a == group, 0].mean()
            assert abs(mean + (1.5 + group)) < 0.3

    @pytest.mark.parametrize("value", [0, 1])
    def test_interventional_decoding(self, appendix_fit, value):
        model, _, _, held_out = appendix_fit
        decoded = counterfactual_reconstruct(model, held_out, APolicy.SET, value, seed=0).data
        assert abs(decoded.node("X")[:, 0].mean() + (1.5 + value)) < 0.3

    def test_regulariser_shrinks(self, appendix_fit):
        _, result, _, _ = appendix_fit
        first, last = result.rows[0], result.rows[-1]
        assert abs(last["reg"]) <= 0.2 * abs(first["reg"])

    @pytest.mark.parametrize("column", ["rec_x", "rec_y"])
    def test_reconstruction_rises_and_settles(self, appendix_fit, column):
        _, result, _, _ = appendix_fit
        trace = np.array([row[column] for row in result.rows])
        rise = trace[-1] - trace[0]
        assert rise > 0.0
        assert np.ptp(trace[-5:]) <= 0.1 * rise

    def test_latent_gap_closes(self, appendix_fit):
        _, result, _, _ = appendix_fit
        first, last = result.rows[0], result.rows[-1]
        assert last["latent_gap_max"] <= 0.5 * first["latent_gap_max"]

    def test_total_improves(self, appendix_fit):
        _, result, _, _ = appendix_fit
        assert result.history[-1].total > result.history[0].total
