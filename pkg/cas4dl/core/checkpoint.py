"""
Self-describing ``.npz`` checkpoints for a network and its optimizer.

Layout: ``architecture`` (JSON), ``param_<i>`` arrays in layer order (weights
then biases), ``adam_first_<i>``/``adam_second_<i>`` moments, ``adam_step``,
``adam_hyper`` (beta1, beta2, epsilon), ``rng_state`` (JSON of a NumPy bit
generator state, may be empty) and ``metadata`` (JSON).
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .network import AdamState, Architecture, NetworkParams

logger = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    params: NetworkParams
    state: AdamState
    rng_state: Optional[Dict[str, Any]] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        arch = self.params.architecture
        return {
            "architecture": arch.to_dict(),
            "layer_sizes": list(arch.layer_sizes),
            "parameter_count": int(sum(a.size for a in self.params.arrays())),
            "dtype": str(self.params.dtype),
            "adam_step": self.state.step,
            "has_rng_state": self.rng_state is not None,
            "metadata": self.metadata,
        }


def _to_jsonable(state: Dict[str, Any]) -> Dict[str, Any]:
    return json.loads(json.dumps(state, default=int))


def save_checkpoint(
    path: Union[str, Path],
    params: NetworkParams,
    state: AdamState,
    rng: Optional[np.random.Generator] = None,
    metadata: Optional[Dict[str, Any]] = None,
    rng_state: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write the network, optimizer and sampling-RNG state to ``path``."""
    path = Path(path)
    if rng is not None:
        rng_state = rng.bit_generator.state
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays: Dict[str, np.ndarray] = {
        "architecture": np.array(json.dumps(params.architecture.to_dict())),
        "adam_step": np.array(state.step, dtype=np.int64),
        "adam_hyper": np.array([state.beta1, state.beta2, state.epsilon], dtype=np.float64),
        "rng_state": np.array(json.dumps(_to_jsonable(rng_state)) if rng_state is not None else ""),
        "metadata": np.array(json.dumps(metadata or {}, sort_keys=True)),
    }
    for i, a in enumerate(params.arrays()):
        arrays[f"param_{i}"] = a
    for i, (m, v) in enumerate(zip(state.first, state.second)):
        arrays[f"adam_first_{i}"] = m
        arrays[f"adam_second_{i}"] = v

    with path.open("wb") as handle:
        np.savez(handle, **arrays)
    logger.info(f"Saved checkpoint to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    with np.load(Path(path), allow_pickle=False) as data:
        arch = Architecture.from_dict(json.loads(str(data["architecture"])))
        count = 2 * len(arch.layer_sizes) - 3
        arrays = [data[f"param_{i}"].copy() for i in range(count)]
        first = [data[f"adam_first_{i}"].copy() for i in range(count)]
        second = [data[f"adam_second_{i}"].copy() for i in range(count)]
        beta1, beta2, epsilon = (float(x) for x in data["adam_hyper"])
        step = int(data["adam_step"])
        rng_text = str(data["rng_state"])
        metadata = json.loads(str(data["metadata"]))

    weights_count = len(arch.layer_sizes) - 1
    params = NetworkParams(arch, arrays[:weights_count], arrays[weights_count:])
    state = AdamState(first, second, step, beta1, beta2, epsilon)
    return Checkpoint(params, state, json.loads(rng_text) if rng_text else None, metadata)


def restore_rng(state: Dict[str, Any]) -> np.random.Generator:
    """Generator positioned exactly at a saved bit-generator state."""
    bit_generator = getattr(np.random, state["bit_generator"])()
    bit_generator.state = state
    return np.random.Generator(bit_generator)
