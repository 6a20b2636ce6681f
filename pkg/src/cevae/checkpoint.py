import logging
from pathlib import Path

import orjson

from src.cevae.config import TrainConfig
from src.cevae.model import CevaeModel
from src.dataset import DataProfile
from src.errors import ContractError
from src.nnet import mlp_from_document, mlp_to_document
from src.schemas import JSON_OPTIONS, GraphDocument

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


def model_to_document(model: CevaeModel, history: list[dict] | None = None) -> dict:
    """Self-contained checkpoint: graph, data profile, config and all networks."""
    return {
        "version": CHECKPOINT_VERSION,
        "graph": GraphDocument.from_graph(model.graph).model_dump(mode="json"),
        "profile": model.profile.to_document(),
        "config": model.config.model_dump(),
        "encoder": mlp_to_document(model.encoder),
        "decoders": {node: mlp_to_document(net) for node, net in sorted(model.decoders.items())},
        "history": history or [],
    }


def model_from_document(doc: dict) -> CevaeModel:
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ContractError(f"Unsupported CEVAE checkpoint version {doc.get('version')}")
    graph = GraphDocument.model_validate(doc["graph"]).to_graph()
    return CevaeModel(
        graph=graph,
        profile=DataProfile.from_document(doc["profile"]),
        config=TrainConfig.model_validate(doc["config"]),
        encoder=mlp_from_document(doc["encoder"]),
        decoders={node: mlp_from_document(d) for node, d in doc["decoders"].items()},
    )


def save_checkpoint(model: CevaeModel, path: str | Path, history: list[dict] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(orjson.dumps(model_to_document(model, history), option=JSON_OPTIONS))
    logger.info("Saved CEVAE checkpoint to %s", path)
    return path


def load_checkpoint(path: str | Path) -> CevaeModel:
    path = Path(path)
    if not path.exists():
        raise ContractError(f"Checkpoint not found: {path}")
    return model_from_document(orjson.loads(path.read_bytes()))
