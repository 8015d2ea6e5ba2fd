"""Joint training of the token head and the auxiliary tag head."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import torch
import torch.nn.functional as F

from .checkpoint import save_model
from .core import BOS_ID, EOS_ID, PAD_ID, CgecError, ConfigError, PipelineConfig, Vocab, build_vocab
from .model.crf import batch_neg_log_likelihood
from .model.decoding import greedy_decode_batch
from .model.network import Batch, GecModel, pad_to
from .tagger import SemanticFeatureSeq, Tagger

log = logging.getLogger(__name__)


class TrainingDiverged(CgecError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-8
    warmup: int = 50
    max_epochs: int = 50
    max_tokens: int = 1024
    seed: int = 0
    average_last: int = 5
    clip_norm: float = 1.0
    eval_every: int = 1
    save_every: int = 1
    stop_at_exact_match: float | None = None

    def __post_init__(self):
        if self.lr <= 0 or self.max_epochs < 1 or self.max_tokens < 1 or self.average_last < 1:
            raise ConfigError("learning rate, epochs, token budget and averaging window must be positive")


@dataclass
class Example:
    source: list[str]
    target: list[str]
    features: SemanticFeatureSeq
    aux: list[int]


def build_model(cfg: PipelineConfig, vocab: Vocab, tagger: Tagger) -> GecModel:
    torch.manual_seed(cfg.seed)
    return GecModel(cfg, vocab, tagger.tagset, tagger.class_alphabets)


def vocab_for_pairs(pairs: Sequence[tuple[Sequence[str], Sequence[str]]]) -> Vocab:
    return build_vocab([s for pair in pairs for s in pair if len(s)] or [["?"]], min_count=1)


def prepare_examples(model: GecModel, tagger: Tagger, pairs) -> list[Example]:
    out = []
    for src, tgt in pairs:
        src, tgt = list(src), list(tgt)
        if not src:
            continue
        out.append(Example(src, tgt, tagger.features(src), model.aux_labels(tagger.features(tgt))))
    return out


def collate(model: GecModel, examples: Sequence[Example]) -> Batch:
    k = model.cfg.class_levels
    vocab = model.vocab
    src = pad_to([vocab.encode(e.source) for e in examples])
    pos = pad_to([e.features.pos for e in examples], 0)
    cls = pad_to([[c for row in e.features.classes for c in row] for e in examples], 0)
    cls = cls.reshape(len(examples), src.shape[1], k)
    tgt_ids = [vocab.encode(e.target) for e in examples]
    tgt_in = pad_to([[BOS_ID] + t for t in tgt_ids])
    tgt_out = pad_to([t + [EOS_ID] for t in tgt_ids])
    aux = pad_to([e.aux for e in examples], 0)
    aux_mask = pad_to([[1] * len(e.aux) for e in examples], 0).bool()
    return Batch(src, pos, cls, src == PAD_ID, tgt_in, tgt_out, tgt_in == PAD_ID, aux, aux_mask)


@dataclass
class LossParts:
    total: torch.Tensor
    token: torch.Tensor
    aux: torch.Tensor


def joint_loss(model: GecModel, batch: Batch) -> LossParts:
    """Per-sentence token cross-entropy plus the auxiliary loss, averaged over sentences."""
    token_logits, aux_logits = model(batch)
    ce = F.cross_entropy(token_logits.transpose(1, 2), batch.tgt_out, ignore_index=PAD_ID, reduction="none").sum(1)
    aux = torch.zeros_like(ce)
    task = model.cfg.aux_task
    width = batch.aux.shape[1]
    if task != "none" and width:
        logits = aux_logits[:, :width]
        if task == "pos_ce":
            per_tok = F.cross_entropy(logits.transpose(1, 2), batch.aux, reduction="none")
            aux = (per_tok * batch.aux_mask).sum(1)
        else:
            logp = torch.log_softmax(logits, dim=-1)
            emissions = logp if model.cfg.crf_emission == "logprob" else logp.exp()
            rows = batch.aux_mask[:, 0]
            nll = batch_neg_log_likelihood(model.crf.transitions, emissions[rows], batch.aux[rows], batch.aux_mask[rows])
            aux = aux.masked_scatter(rows, nll) if not rows.all() else nll
    total = (ce + model.cfg.aux_weight * aux).mean()
    return LossParts(total, ce.mean(), aux.mean())


def loss_and_grads(model: GecModel, batch: Batch) -> tuple[float, dict[str, torch.Tensor]]:
    model.zero_grad(set_to_none=True)
    parts = joint_loss(model, batch)
    parts.total.backward()
    grads = {n: p.grad.detach().clone() for n, p in model.named_parameters() if p.grad is not None}
    return parts.total.item(), grads


def make_batches(examples: Sequence[Example], max_tokens: int, rng: random.Random | None = None) -> list[list[Example]]:
    """Pack examples into batches whose padded src + tgt size stays within ``max_tokens``."""
    order = list(range(len(examples)))
    if rng is not None:
        rng.shuffle(order)
    batches, cur, widest = [], [], 0
    for i in order:
        ex = examples[i]
        size = len(ex.source) + len(ex.target) + 1
        if cur and max(widest, size) * (len(cur) + 1) > max_tokens:
            batches.append(cur)
            cur, widest = [], 0
        cur.append(ex)
        widest = max(widest, size)
    if cur:
        batches.append(cur)
    return batches


def exact_match(model: GecModel, examples: Sequence[Example], chunk: int = 64) -> float:
    if not examples:
        return 0.0
    hits = 0
    for i in range(0, len(examples), chunk):
        part = examples[i:i + chunk]
        outs = greedy_decode_batch(model, [e.source for e in part], [e.features for e in part])
        hits += sum(o == e.target for o, e in zip(outs, part))
    return hits / len(examples)


def _schedule(warmup: int, total: int):
    def factor(step: int) -> float:
        if step < warmup:
            return (step + 1) / warmup
        return max(0.0, (total - step) / max(1, total - warmup))

    return factor


@dataclass
class TrainResult:
    model: GecModel
    log: list[dict] = field(default_factory=list)
    checkpoints: list[Path] = field(default_factory=list)

    def log_tsv(self) -> str:
        lines = ["epoch\tloss\ttoken_loss\taux_loss\tdev_exact_match"]
        for row in self.log:
            em = "" if row["dev_exact_match"] is None else f"{row['dev_exact_match']:.4f}"
            lines.append(f"{row['epoch']}\t{row['loss']:.6f}\t{row['token_loss']:.6f}\t{row['aux_loss']:.6f}\t{em}")
        return "\n".join(lines) + "\n"


def train_loop(
    model: GecModel,
    tagger: Tagger,
    pairs: Sequence[tuple[Sequence[str], Sequence[str]]],
    tcfg: TrainConfig = TrainConfig(),
    out_dir=None,
    dev_pairs=None,
) -> TrainResult:
    """Adam with warmup and linear decay; one checkpoint per ``save_every`` epochs.

    Everything random (shuffling, dropout) derives from ``tcfg.seed``.
    """
    examples = prepare_examples(model, tagger, pairs)
    if not examples:
        raise ConfigError("training corpus is empty")
    dev = prepare_examples(model, tagger, dev_pairs) if dev_pairs is not None else examples
    torch.manual_seed(tcfg.seed)
    rng = random.Random(tcfg.seed)
    per_epoch = len(make_batches(examples, tcfg.max_tokens))
    opt = torch.optim.Adam(model.parameters(), lr=tcfg.lr, betas=(tcfg.beta1, tcfg.beta2), eps=tcfg.eps)
    sched = torch.optim.lr_scheduler.LambdaLR(opt, _schedule(tcfg.warmup, per_epoch * tcfg.max_epochs))
    result = TrainResult(model)
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for epoch in range(1, tcfg.max_epochs + 1):
        model.train()
        totals = [0.0, 0.0, 0.0]
        n = 0
        for chunk in make_batches(examples, tcfg.max_tokens, rng):
            batch = collate(model, chunk)
            parts = joint_loss(model, batch)
            if not torch.isfinite(parts.total):
                raise TrainingDiverged(
                    f"loss became {parts.total.item()} at epoch {epoch} "
                    f"(token {parts.token.item()}, aux {parts.aux.item()}, lr {sched.get_last_lr()[0]:.3g})"
                )
            opt.zero_grad(set_to_none=True)
            parts.total.backward()
            if tcfg.clip_norm:
                torch.nn.utils.clip_grad_norm_(model.parameters(), tcfg.clip_norm)
            opt.step()
            sched.step()
            for i, v in enumerate((parts.total, parts.token, parts.aux)):
                totals[i] += v.item() * len(chunk)
            n += len(chunk)
        em = None
        if tcfg.eval_every and (epoch % tcfg.eval_every == 0 or epoch == tcfg.max_epochs):
            em = exact_match(model, dev)
        row = {"epoch": epoch, "loss": totals[0] / n, "token_loss": totals[1] / n, "aux_loss": totals[2] / n, "dev_exact_match": em}
        result.log.append(row)
        log.info("epoch %d loss %.4f exact-match %s", epoch, row["loss"], em)
        if out_dir is not None and (epoch % tcfg.save_every == 0 or epoch == tcfg.max_epochs):
            path = out_dir / f"checkpoint{epoch:04d}.sqmd"
            save_model(model, path)
            result.checkpoints.append(path)
        if tcfg.stop_at_exact_match is not None and em is not None and em >= tcfg.stop_at_exact_match:
            break
    if out_dir is not None:
        (out_dir / "train_log.tsv").write_text(result.log_tsv(), encoding="utf-8")
    model.eval()
    return result
