"""Miniature masked-language model with a resizable embedding table.

Dropout is zero throughout: the convergence comparison needs bit-for-bit
reproducible runs, and at this scale regularization is beside the point.
"""

from dataclasses import dataclass, field

import torch
from torch import nn

from .errors import AdapterError


@dataclass
class ToyMLMConfig:
    layers: int = 2
    hidden: int = 128
    heads: int = 2
    seq_len: int = 64
    batch: int = 32
    steps: int = 300
    lr: float = 2e-5
    mask_prob: float = 0.15
    seeds: list = field(default_factory=lambda: [0, 1, 2])

    def __post_init__(self):
        if self.hidden % self.heads != 0:
            raise AdapterError(
                f"hidden {self.hidden} not divisible by heads {self.heads}")
        if self.steps < 100:
            raise AdapterError(f"steps must be >= 100, got {self.steps}")
        if not 0.0 < self.mask_prob < 1.0:
            raise AdapterError(f"mask_prob must be in (0, 1)")
        if not self.seeds:
            raise AdapterError("seeds must be non-empty")


class ToyMLM(nn.Module):
    def __init__(self, vocab_size: int, config: ToyMLMConfig,
                 tied: bool = True):
        super().__init__()
        self.tied = tied
        self.embed = nn.Embedding(vocab_size, config.hidden)
        self.pos = nn.Embedding(config.seq_len, config.hidden)
        layer = nn.TransformerEncoderLayer(
            d_model=config.hidden, nhead=config.heads,
            dim_feedforward=4 * config.hidden, dropout=0.0,
            activation="gelu", batch_first=True)
        self.encoder = nn.TransformerEncoder(layer, config.layers)
        self.norm = nn.LayerNorm(config.hidden)
        self.decoder = nn.Linear(config.hidden, vocab_size)
        if tied:
            self.decoder.weight = self.embed.weight

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device)
        h = self.embed(ids) + self.pos(positions)
        h = self.encoder(h)
        return self.decoder(self.norm(h))


def make_checkpoint(model: ToyMLM) -> dict:
    """Snapshot a model as {state, vocab_size, hidden, tied} with cloned tensors."""
    state = {name: tensor.detach().clone()
             for name, tensor in model.state_dict().items()}
    return {"state": state,
            "vocab_size": model.embed.num_embeddings,
            "hidden": model.embed.embedding_dim,
            "tied": model.tied}


def load_checkpoint(checkpoint: dict, config: ToyMLMConfig) -> ToyMLM:
    model = ToyMLM(checkpoint["vocab_size"], config,
                   tied=checkpoint["tied"])
    model.load_state_dict(checkpoint["state"])
    if checkpoint["tied"]:
        model.decoder.weight = model.embed.weight
    return model
