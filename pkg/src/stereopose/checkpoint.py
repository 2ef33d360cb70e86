"""Model checkpoints: one named tensor per parameter/buffer plus a config hash.

Saved through the portable tensor container, so checkpoints are
byte-stable across reruns and loadable without pickle. Loading verifies
that the stored config hash matches the model being filled.
"""

import numpy as np
import torch
from torch import nn

from .tensorio import load_bundle, save_bundle


class CheckpointMismatch(ValueError):
    """Stored config hash does not match the receiving model."""


def save_checkpoint(path, model: nn.Module, config_hash: str) -> None:
    tensors = {
        name: tensor.detach().cpu().numpy()
        for name, tensor in model.state_dict().items()
    }
    save_bundle(path, tensors, config_hash=config_hash)


def load_checkpoint(path, model: nn.Module, config_hash: str) -> None:
    tensors, stored_hash = load_bundle(path)
    if stored_hash != config_hash:
        raise CheckpointMismatch(
            f"checkpoint {path} was written for config {stored_hash[:12]}..., "
            f"expected {config_hash[:12]}..."
        )
    state = {name: torch.from_numpy(np.array(v)) for name, v in tensors.items()}
    model.load_state_dict(state)


def state_checksum(model: nn.Module) -> str:
    """Order-stable digest of every parameter and buffer."""
    import hashlib

    digest = hashlib.sha256()
    for name, tensor in sorted(model.state_dict().items()):
        digest.update(name.encode())
        digest.update(tensor.detach().cpu().numpy().tobytes())
    return digest.hexdigest()
