"""Encoder-decoder corrector with semantic feature fusion and an auxiliary tag head."""

from __future__ import annotations

import math
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import nn

from ..core import BOS_ID, PAD_ID, ContractError, PipelineConfig, PosTagSet, Vocab
from ..tagger import SemanticFeatureSeq
from .crf import CrfParams

CRF_TASKS = ("pos_crf", "class_l1", "class_l2")


def sinusoidal_positions(n: int, d: int) -> torch.Tensor:
    pos = torch.arange(n, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(torch.arange(0, d, 2, dtype=torch.float64) * (-math.log(10000.0) / d))
    pe = torch.zeros(n, d, dtype=torch.float64)
    pe[:, 0::2] = torch.sin(pos * div)
    pe[:, 1::2] = torch.cos(pos * div)[:, : d // 2]
    return pe.float()


class FeatureEmbedding(nn.Module):
    """POS and per-level class embeddings, each ``floor(d_model / (k + 1))`` wide.

    ``concatenate`` lays them side by side and zero-pads the remainder up to
    ``d_model``; ``accumulate`` projects each one to ``d_model`` and sums.
    """

    def __init__(self, d_model: int, num_pos: int, class_sizes: Sequence[int], mode: str = "concatenate"):
        super().__init__()
        k = len(class_sizes)
        self.d_model = d_model
        self.dim = d_model // (k + 1)
        self.pad = d_model - (k + 1) * self.dim
        self.mode = mode
        self.pos = nn.Embedding(num_pos, self.dim)
        self.classes = nn.ModuleList(nn.Embedding(n, self.dim) for n in class_sizes)
        if mode == "accumulate":
            self.proj = nn.ModuleList(nn.Linear(self.dim, d_model, bias=False) for _ in range(k + 1))

    def forward(self, pos_ids: torch.Tensor, class_ids: torch.Tensor) -> torch.Tensor:
        parts = [self.pos(pos_ids)] + [emb(class_ids[..., l]) for l, emb in enumerate(self.classes)]
        if self.mode == "accumulate":
            return sum(p(x) for p, x in zip(self.proj, parts))
        out = torch.cat(parts, dim=-1)
        return F.pad(out, (0, self.pad)) if self.pad else out


class GecModel(nn.Module):
    def __init__(
        self,
        cfg: PipelineConfig,
        vocab: Vocab,
        tagset: PosTagSet,
        class_alphabets: Sequence[Sequence[str]],
    ):
        super().__init__()
        if len(class_alphabets) != cfg.class_levels:
            raise ContractError("need one class alphabet per level")
        self.cfg = cfg
        self.vocab = vocab
        self.tagset = tagset
        self.class_alphabets = [list(a) for a in class_alphabets]
        d = cfg.d_model
        self.word_emb = nn.Embedding(len(vocab), d)
        self.features = FeatureEmbedding(d, len(tagset), [len(a) for a in class_alphabets], cfg.fusion_mode)
        self.register_buffer("positions", sinusoidal_positions(cfg.max_len + 2, d), persistent=False)

        def enc_layer():
            return nn.TransformerEncoderLayer(
                d, cfg.heads, cfg.ffn_hidden, cfg.dropout, activation="gelu", batch_first=True, norm_first=True
            )

        def dec_layer():
            return nn.TransformerDecoderLayer(
                d, cfg.heads, cfg.ffn_hidden, cfg.dropout, activation="gelu", batch_first=True, norm_first=True
            )

        self.encoder = nn.ModuleList(enc_layer() for _ in range(cfg.enc_layers))
        self.decoder = nn.ModuleList(dec_layer() for _ in range(cfg.dec_layers))
        self.enc_norm = nn.LayerNorm(d) if cfg.enc_layers else nn.Identity()
        self.dec_norm = nn.LayerNorm(d) if cfg.dec_layers else nn.Identity()
        self.token_head = nn.Linear(d, len(vocab))
        self.aux_head = nn.Linear(d, self.num_aux_labels) if cfg.aux_task != "none" else None
        self.crf = CrfParams(self.num_aux_labels) if cfg.aux_task in CRF_TASKS else None

    @property
    def num_aux_labels(self) -> int:
        task = self.cfg.aux_task
        if task == "class_l1":
            return len(self.class_alphabets[0])
        if task == "class_l2":
            return len(self.class_alphabets[1])
        return len(self.tagset)

    def aux_labels(self, feats: SemanticFeatureSeq) -> list[int]:
        """Target-side label sequence for the auxiliary head."""
        task = self.cfg.aux_task
        if task == "class_l1":
            return feats.level(1)
        if task == "class_l2":
            return feats.level(2)
        return list(feats.pos)

    # -- forward pieces ---------------------------------------------------------

    def _positions(self, length: int) -> torch.Tensor:
        if length > self.positions.shape[0]:
            raise ContractError(f"sequence of length {length} exceeds max_len {self.cfg.max_len}")
        return self.positions[:length]

    def fuse(self, src_ids: torch.Tensor, pos_ids: torch.Tensor, class_ids: torch.Tensor) -> torch.Tensor:
        """Encoder input: word + positional + semantic embeddings, (B, S, d)."""
        word = self.word_emb(src_ids) + self._positions(src_ids.shape[1]).to(self.word_emb.weight.dtype)
        return word + self.features(pos_ids, class_ids)

    def encode(self, fused: torch.Tensor, src_pad: torch.Tensor | None = None) -> torch.Tensor:
        h = fused
        for layer in self.encoder:
            h = layer(h, src_key_padding_mask=src_pad)
        return self.enc_norm(h)

    def decode(
        self,
        tgt_in: torch.Tensor,
        memory: torch.Tensor,
        src_pad: torch.Tensor | None = None,
        tgt_pad: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Decoder hidden states (B, T, d) under a causal mask."""
        T = tgt_in.shape[1]
        h = self.word_emb(tgt_in) + self._positions(T).to(self.word_emb.weight.dtype)
        causal = torch.triu(torch.ones(T, T, dtype=torch.bool, device=tgt_in.device), diagonal=1)
        for layer in self.decoder:
            h = layer(h, memory, tgt_mask=causal, tgt_key_padding_mask=tgt_pad, memory_key_padding_mask=src_pad)
        return self.dec_norm(h)

    def heads(self, hidden: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor | None]:
        aux = self.aux_head(hidden) if self.aux_head is not None else None
        return self.token_head(hidden), aux

    def forward(self, batch: "Batch") -> tuple[torch.Tensor, torch.Tensor | None]:
        fused = self.fuse(batch.src, batch.src_pos, batch.src_classes)
        memory = self.encode(fused, batch.src_pad)
        hidden = self.decode(batch.tgt_in, memory, batch.src_pad, batch.tgt_pad)
        return self.heads(hidden)


class Batch:
    """Padded tensors for a list of prepared examples."""

    def __init__(self, src, src_pos, src_classes, src_pad, tgt_in, tgt_out, tgt_pad, aux, aux_mask):
        self.src, self.src_pos, self.src_classes, self.src_pad = src, src_pos, src_classes, src_pad
        self.tgt_in, self.tgt_out, self.tgt_pad = tgt_in, tgt_out, tgt_pad
        self.aux, self.aux_mask = aux, aux_mask

    def __len__(self) -> int:
        return self.src.shape[0]


def fuse_embeddings(model: GecModel, char_ids: Sequence[int], features: SemanticFeatureSeq) -> torch.Tensor:
    """Fused encoder input for one sequence, (n, d_model)."""
    if len(char_ids) != len(features):
        raise ContractError(f"{len(char_ids)} characters but {len(features)} feature rows")
    src = torch.tensor([list(char_ids)], dtype=torch.long)
    pos = torch.tensor([features.pos], dtype=torch.long)
    cls = torch.tensor([features.classes], dtype=torch.long).reshape(1, len(char_ids), model.cfg.class_levels)
    return model.fuse(src, pos, cls)[0]


def encode(model: GecModel, fused: torch.Tensor) -> torch.Tensor:
    return model.encode(fused.unsqueeze(0))[0]


def decode_step(model: GecModel, tgt_prefix_ids: Sequence[int], h_src: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor | None]:
    """Token and auxiliary logits for the next position after ``tgt_prefix_ids``."""
    if not len(tgt_prefix_ids) or tgt_prefix_ids[0] != BOS_ID:
        raise ContractError("the target prefix must start with BOS")
    tgt = torch.tensor([list(tgt_prefix_ids)], dtype=torch.long)
    hidden = model.decode(tgt, h_src.unsqueeze(0))
    tok, aux = model.heads(hidden[:, -1])
    return tok[0], None if aux is None else aux[0]


def pad_to(rows: Sequence[Sequence[int]], value: int = PAD_ID) -> torch.Tensor:
    width = max((len(r) for r in rows), default=0)
    return torch.tensor([list(r) + [value] * (width - len(r)) for r in rows], dtype=torch.long)
