from pathlib import Path

import numpy as np
import orjson

from src.errors import ContractError
from src.nnet.mlp import Mlp
from src.nnet.params import ParamStore
from src.nnet.spec import MlpSpec

CHECKPOINT_VERSION = 1
JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY


def mlp_to_document(mlp: Mlp) -> dict:
    layout = {
        name: {"offset": offset, "shape": list(shape)}
        for name, (offset, shape) in sorted(mlp.params.layout.items())
    }
    return {
        "version": CHECKPOINT_VERSION,
        "spec": mlp.spec.to_dict(),
        "layout": layout,
        "values": mlp.params.values.copy(),
    }


def mlp_from_document(doc: dict) -> Mlp:
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ContractError(f"Unsupported network checkpoint version {doc.get('version')}")
    spec = MlpSpec.from_dict(doc["spec"])
    values = np.asarray(doc["values"], dtype=np.float64)
    layout = {
        name: (int(entry["offset"]), tuple(int(s) for s in entry["shape"]))
        for name, entry in doc["layout"].items()
    }
    return Mlp(spec, ParamStore(layout, values, np.zeros_like(values)))


def save_mlp(mlp: Mlp, path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(orjson.dumps(mlp_to_document(mlp), option=JSON_OPTIONS))
    return path


def load_mlp(path: str | Path) -> Mlp:
    return mlp_from_document(orjson.loads(Path(path).read_bytes()))
