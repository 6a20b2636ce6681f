import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from src.cevae.checkpoint import model_to_document
from src.cevae.config import TrainConfig
from src.cevae.elbo import ElboTerms, elbo_pass
from src.cevae.model import CevaeModel
from src.dataset import Dataset
from src.errors import NumericalAbort
from src.nnet import OptState, optimizer_step
from src.rng import substream

logger = logging.getLogger(__name__)

# Called after every epoch; returned metrics are added to that epoch's row.
EpochHook = Callable[[int, CevaeModel, ElboTerms], dict[str, float] | None]


@dataclass
class TrainResult:
    model: CevaeModel
    history: list[ElboTerms] = field(default_factory=list)
    rows: list[dict[str, float]] = field(default_factory=list)


def train(
    model: CevaeModel,
    dataset: Dataset,
    config: TrainConfig | None = None,
    hooks: Sequence[EpochHook] = (),
) -> TrainResult:
    """Maximise the ELBO with Adam; the epoch log holds batch-size weighted means.

    On divergence the error carries the checkpoint document of the last
    completed epoch.
    """
    config = config or model.config
    rng = substream(config.seed, "cevae", "train")
    nets = model.networks()
    opts = {name: OptState.adam(net.params, lr=config.learning_rate) for name, net in nets.items()}
    last_good = model_to_document(model)
    result = TrainResult(model)
    n = dataset.n
    logger.info(
        "Training CEVAE on %d records: %d epochs, batch %d, lr %g",
        n, config.epochs, config.batch_size, config.learning_rate,
    )

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        sums: dict[str, float] = {}
        for start in range(0, n, config.batch_size):
            idx = np.sort(order[start : start + config.batch_size])
            batch = dataset.take(idx)
            eps = rng.standard_normal((config.n_mc_samples, batch.n, model.layout.latent_dim))
            for net in nets.values():
                net.zero_grad()
            try:
                terms = elbo_pass(model, batch, eps, backward=True)
            except NumericalAbort as err:
                logger.error("Training diverged in epoch %d; returning last checkpoint", epoch)
                if err.index is not None:
                    err.index = int(idx[err.index])  # record index in the training set
                err.checkpoint = last_good
                raise
            try:
                for name, net in nets.items():
                    optimizer_step(opts[name], net.params)
            except NumericalAbort as err:
                logger.error("Non-finite gradient in epoch %d; returning last checkpoint", epoch)
                err.checkpoint = last_good
                raise
            weight = batch.n / n
            sums["reg"] = sums.get("reg", 0.0) + weight * terms.reg
            for node, value in terms.rec.items():
                sums[node] = sums.get(node, 0.0) + weight * value

        epoch_terms = ElboTerms(sums["reg"], {node: sums[node] for node in model.layout.generated})
        if not np.isfinite(epoch_terms.total):
            err = NumericalAbort(f"ELBO diverged in epoch {epoch}", checkpoint=last_good)
            logger.error("%s", err)
            raise err
        row = {"epoch": epoch, **epoch_terms.row()}
        for hook in hooks:
            extra = hook(epoch, model, epoch_terms)
            if extra:
                row.update(extra)
        result.history.append(epoch_terms)
        result.rows.append(row)
        last_good = model_to_document(model)
        logger.info(
            "Epoch %d/%d: total %.4f reg %.4f", epoch, config.epochs, epoch_terms.total,
            epoch_terms.reg,
        )
    return result
