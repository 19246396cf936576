"""Patch a checkpoint's embedding table with exported transplant rows.

Base rows are preserved bit-exactly; appended rows are copied from the
export. The output head follows the checkpoint's convention: a tied head
shares the patched embedding, an untied head gets the same appended rows
and zero bias entries. Patching is idempotent for a fixed export.
"""

import torch

from .artifacts import TransplantArtifacts
from .errors import AdapterError

EMBED_KEY = "embed.weight"
DECODER_W_KEY = "decoder.weight"
DECODER_B_KEY = "decoder.bias"


def patch_embeddings(checkpoint: dict,
                     artifacts: TransplantArtifacts) -> dict:
    state = checkpoint["state"]
    embed = state[EMBED_KEY]
    if embed.shape[1] != artifacts.dim:
        raise AdapterError(
            f"embedding dimension {embed.shape[1]} does not match export "
            f"dimension {artifacts.dim}")
    n_base = artifacts.base_count
    n_merged = len(artifacts.tokens)
    if checkpoint["vocab_size"] not in (n_base, n_merged):
        raise AdapterError(
            f"checkpoint vocabulary {checkpoint['vocab_size']} matches "
            f"neither the base ({n_base}) nor the merged ({n_merged}) size")

    appended_rows = torch.from_numpy(
        artifacts.matrix[n_base:].copy()).to(embed.dtype)
    new_embed = torch.cat([embed[:n_base], appended_rows], dim=0)

    new_state = {name: tensor.clone() for name, tensor in state.items()}
    new_state[EMBED_KEY] = new_embed
    if checkpoint["tied"]:
        new_state[DECODER_W_KEY] = new_embed
    else:
        dec = state[DECODER_W_KEY]
        new_state[DECODER_W_KEY] = torch.cat(
            [dec[:n_base], appended_rows.clone()], dim=0)
    bias = state[DECODER_B_KEY]
    new_state[DECODER_B_KEY] = torch.cat(
        [bias[:n_base],
         torch.zeros(n_merged - n_base, dtype=bias.dtype)])

    return {"state": new_state, "vocab_size": n_merged,
            "hidden": checkpoint["hidden"], "tied": checkpoint["tied"]}
