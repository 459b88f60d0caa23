"""A small character-level encoder-decoder scorer.

Weights are seeded-random by default ("tiny:SEED"): logits are genuine
transformer outputs, deterministic given the seed, with no training in the
loop. A state-dict path can be passed instead to serve saved weights.
"""

from __future__ import annotations

import torch
from torch import nn

from .vocab import PAD_ID, VOCAB_SIZE

MAX_LEN = 512


class TinySeq2Seq(nn.Module):
    def __init__(self, vocab_size: int = VOCAB_SIZE, d_model: int = 64):
        super().__init__()
        self.d_model = d_model
        self.embed = nn.Embedding(vocab_size, d_model)
        self.pos = nn.Embedding(MAX_LEN, d_model)
        self.transformer = nn.Transformer(
            d_model=d_model,
            nhead=4,
            num_encoder_layers=2,
            num_decoder_layers=2,
            dim_feedforward=128,
            dropout=0.0,
            batch_first=True,
        )
        self.out = nn.Linear(d_model, vocab_size)

    def _embed(self, ids: torch.Tensor) -> torch.Tensor:
        pos = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        return self.embed(ids) + self.pos(pos)

    def encode(self, input_ids: torch.Tensor) -> torch.Tensor:
        return self.transformer.encoder(self._embed(input_ids))

    def decode_logits(self, memory: torch.Tensor, tgt_ids: torch.Tensor) -> torch.Tensor:
        """Next-token logits for each batch row, given decoder prefixes."""
        tgt = self._embed(tgt_ids)
        causal = nn.Transformer.generate_square_subsequent_mask(
            tgt_ids.shape[1], device=tgt_ids.device
        )
        mem = memory.expand(tgt_ids.shape[0], -1, -1)
        hidden = self.transformer.decoder(tgt, mem, tgt_mask=causal)
        return self.out(hidden[:, -1, :])


def load_model(spec: str, device: str = "cpu") -> TinySeq2Seq:
    """Build a model from a spec: "tiny[:SEED]" or a state-dict path."""
    model = None
    if spec.startswith("tiny"):
        _, _, seed_str = spec.partition(":")
        torch.manual_seed(int(seed_str) if seed_str else 0)
        model = TinySeq2Seq()
    else:
        model = TinySeq2Seq()
        model.load_state_dict(torch.load(spec, map_location=device))
    model.to(device)
    model.eval()
    return model


@torch.no_grad()
def score_prefixes(
    model: TinySeq2Seq,
    memory: torch.Tensor,
    prefixes: list[list[int]],
    device: str = "cpu",
) -> torch.Tensor:
    """Batched next-token logits; prefixes are right-padded and start at PAD."""
    width = max(len(p) for p in prefixes) + 1
    width = min(width, MAX_LEN)
    batch = torch.full((len(prefixes), width), PAD_ID, dtype=torch.long, device=device)
    for row, prefix in enumerate(prefixes):
        tail = prefix[-(width - 1) :] if len(prefix) > width - 1 else prefix
        for col, tid in enumerate(tail, start=1):
            batch[row, col] = tid
    # Rows with shorter prefixes must not peek at padding; score each length
    # group separately so the "last position" is the true prefix end.
    logits = torch.empty((len(prefixes), model.out.out_features), device=device)
    by_len: dict[int, list[int]] = {}
    for row, prefix in enumerate(prefixes):
        by_len.setdefault(min(len(prefix), width - 1), []).append(row)
    for plen, rows in by_len.items():
        sub = batch[rows, : plen + 1]
        logits[rows] = model.decode_logits(memory, sub)
    return logits
