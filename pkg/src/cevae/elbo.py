"""Evidence lower bound with hand-derived gradients.

Per record and latent draw z = mu + sd * eps:
    reg = log N(z; 0, I) - log N(z; mu, sd) = sum(-z^2/2 + eps^2/2 + log sd)
    rec_v = log p(v | parents(v), z)        for every generated node v
The training loss is -(reg + sum_v rec_v), averaged over records and draws.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.cevae.model import CevaeModel, sensitive_codes
from src.dataset import Dataset
from src.errors import ContractError, NumericalAbort
from src.nnet import log_prob, log_prob_grad
from src.nnet.heads import scale_grad

logger = logging.getLogger(__name__)


@dataclass
class ElboTerms:
    reg: float
    rec: dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.reg + sum(self.rec.values())

    def row(self) -> dict[str, float]:
        """Flat record: reg, rec_<node> per generated node, total."""
        out = {"reg": self.reg}
        out.update({f"rec_{node.lower()}": value for node, value in self.rec.items()})
        out["total"] = self.total
        return out


def elbo_pass(
    model: CevaeModel, batch: Dataset, eps: np.ndarray, backward: bool = False
) -> ElboTerms:
    """ELBO terms for ``batch`` at the draws ``eps`` of shape (S, n, latent_dim).

    With ``backward`` the gradients of the mean loss are accumulated into every
    network's gradient store.
    """
    n = batch.n
    if n == 0:
        raise ContractError("ELBO needs a nonempty batch")
    lay = model.layout
    if eps.ndim != 3 or eps.shape[1:] != (n, lay.latent_dim):
        raise ContractError(f"eps has shape {eps.shape}, expected (S, {n}, {lay.latent_dim})")
    draws = eps.shape[0]
    scale = 1.0 / (n * draws)
    a = sensitive_codes(batch.node(lay.sensitive))
    masks = ((a == 0).astype(np.float64), (a == 1).astype(np.float64))

    enc_in = model.inference_input(batch.values)
    post = (model.encoder.forward(enc_in) if backward else model.encoder.predict(enc_in))[0]
    mu, sd = post["mean"], post["sd"]

    reg = np.zeros(n)
    rec = {node: np.zeros(n) for node in lay.generated}
    g_mu = np.zeros_like(mu)
    g_sd = np.zeros_like(sd)
    for s in range(draws):
        e = eps[s]
        z = mu + sd * e
        reg += np.sum(-0.5 * z**2 + 0.5 * e**2 + np.log(sd), axis=1) / draws
        g_z = np.zeros_like(z)
        for node in lay.generated:
            net = model.decoders[node]
            inputs, z_cols = model.decoder_input(node, batch.values, z)
            outs = net.forward(inputs) if backward else net.predict(inputs)
            routed = model.route(node, outs, a)
            obs = batch.node(node)
            rec[node] += log_prob(routed.spec, routed.params, obs) / draws
            if not backward:
                continue
            grad = log_prob_grad(routed.spec, routed.params, obs)
            if lay.tar[node]:
                upstream = [scale_grad(grad, -scale * m) for m in masks]
            else:
                upstream = [scale_grad(grad, -scale)]
            g_in = net.backward(upstream)
            if z_cols is not None:
                g_z += g_in[:, z_cols]
        if backward:
            g_mu += scale * z + g_z
            g_sd += scale * (z * e - 1.0 / sd) + g_z * e

    per_record = reg + sum(rec.values())
    bad = np.flatnonzero(~np.isfinite(per_record))
    if bad.size:
        logger.error("Non-finite ELBO term for record %d", int(bad[0]))
        raise NumericalAbort(f"ELBO is not finite for record {int(bad[0])}", index=int(bad[0]))
    if backward:
        model.encoder.backward([{"mean": g_mu, "sd": g_sd}])
    return ElboTerms(float(reg.mean()), {node: float(v.mean()) for node, v in rec.items()})


def elbo(
    model: CevaeModel, batch: Dataset, seed: int = 0, n_mc_samples: int | None = None
) -> ElboTerms:
    """ELBO on ``batch`` with latent draws from ``seed``; no gradients."""
    draws = n_mc_samples or model.config.n_mc_samples
    eps = np.random.default_rng(seed).standard_normal((draws, batch.n, model.layout.latent_dim))
    return elbo_pass(model, batch, eps)
