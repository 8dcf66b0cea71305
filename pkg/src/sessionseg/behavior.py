"""Item co-occurrence embeddings trained with skip-gram negative sampling.

Sessions play the role of sentences: each item is predicted to co-occur
with the items inside a fixed context radius, against negatives drawn
from the unigram distribution raised to 0.75.  The learning rate decays
linearly from its starting value, following the conventions of the
classic word2vec-style trainers this replaces.  Gradient updates are
applied one sentence at a time (a small mini-batch); training is
single-threaded and fully deterministic under a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from sessionseg.corpus import Session
from sessionseg.fileio import FileFormatError, format_float, read_header, write_header


class EmbeddingError(ValueError):
    """Raised for empty corpora or malformed table files."""


@dataclass(frozen=True)
class SgnsConfig:
    vector_size: int = 200
    window: int = 6
    negative: int = 1
    sample: float = 1e-3
    min_count: int = 1
    epochs: int = 100
    seed: int = 0
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    noise_exponent: float = 0.75

    def __post_init__(self) -> None:
        if self.vector_size < 1:
            raise EmbeddingError("vector_size must be >= 1")
        if self.window < 1:
            raise EmbeddingError("window must be >= 1")
        if self.negative < 0:
            raise EmbeddingError("negative must be >= 0")
        if self.epochs < 1:
            raise EmbeddingError("epochs must be >= 1")


@dataclass
class EmbeddingTable:
    """Immutable map item-id -> dense vector; absent means out-of-vocab."""

    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def lookup(self, item_id: str) -> np.ndarray | None:
        """The trained vector, or None for out-of-vocabulary ids."""
        return self.vectors.get(item_id)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def sgns_example_loss(
    center: np.ndarray, outputs: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss and analytic gradients for one (center, context, negatives) example.

    ``outputs`` row 0 is the positive context vector, the remaining rows
    are negatives.  Returns (loss, grad wrt center, grad wrt outputs).
    """
    scores = outputs @ center
    labels = np.zeros(outputs.shape[0])
    labels[0] = 1.0
    loss = -float(_log_sigmoid(scores[0]) + np.sum(_log_sigmoid(-scores[1:])))
    g = _sigmoid(scores) - labels
    grad_center = g @ outputs
    grad_outputs = np.outer(g, center)
    return loss, grad_center, grad_outputs


class _NoiseSampler:
    """Draws negatives from unigram^exponent via inverse-CDF lookup."""

    def __init__(self, counts: np.ndarray, exponent: float) -> None:
        weights = counts.astype(np.float64) ** exponent
        self.cumulative = np.cumsum(weights / weights.sum())

    def draw(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        u = rng.random(shape)
        return np.searchsorted(self.cumulative, u, side="right")


def train_behavior_embeddings(
    sessions: Sequence[Session],
    config: SgnsConfig,
    exclude: Iterable[str] = (),
) -> EmbeddingTable:
    """Train item embeddings over sessions, skipping the excluded ids.

    The exclusion set typically holds annotated session ids so that no
    labeled session leaks into embedding training.
    """
    table, _ = train_behavior_embeddings_with_report(sessions, config, exclude)
    return table


def train_behavior_embeddings_with_report(
    sessions: Sequence[Session],
    config: SgnsConfig,
    exclude: Iterable[str] = (),
) -> tuple[EmbeddingTable, dict]:
    """Like :func:`train_behavior_embeddings` but also returns a training
    report with per-epoch mean loss and corpus counts."""
    excluded = set(exclude)
    corpus = [s for s in sessions if s.session_id not in excluded]
    if not corpus:
        raise EmbeddingError("no sessions left to train on after exclusion")

    vocab: dict[str, int] = {}
    counts_list: list[int] = []
    for s in corpus:
        for item in s.items:
            idx = vocab.get(item)
            if idx is None:
                vocab[item] = len(counts_list)
                counts_list.append(1)
            else:
                counts_list[idx] += 1
    counts = np.array(counts_list, dtype=np.int64)
    kept_ids = [item for item, idx in vocab.items() if counts[idx] >= config.min_count]
    if not kept_ids:
        raise EmbeddingError(f"no items reach min_count={config.min_count}")
    remap = {item: i for i, item in enumerate(kept_ids)}
    kept_counts = np.array([counts[vocab[item]] for item in kept_ids], dtype=np.int64)

    encoded = []
    for s in corpus:
        idxs = [remap[i] for i in s.items if i in remap]
        if len(idxs) >= 2:
            encoded.append(np.array(idxs, dtype=np.int64))
    if not encoded:
        raise EmbeddingError("no session retains 2 or more in-vocabulary items")

    vocab_size = len(kept_ids)
    total_tokens = float(kept_counts.sum())
    if config.sample > 0:
        freq = kept_counts / total_tokens
        keep_prob = np.minimum(
            1.0, np.sqrt(config.sample / freq) + config.sample / freq
        )
    else:
        keep_prob = np.ones(vocab_size)

    rng = np.random.default_rng(config.seed)
    dim = config.vector_size
    w_in = (rng.random((vocab_size, dim)) - 0.5) / dim
    w_out = np.zeros((vocab_size, dim))
    sampler = _NoiseSampler(kept_counts, config.noise_exponent)

    # linear decay schedule over the expected number of center tokens
    expected_tokens = max(
        1.0, config.epochs * float(np.sum(kept_counts * keep_prob))
    )
    lr0, lr_min = config.learning_rate, config.min_learning_rate
    processed = 0
    epoch_losses: list[float] = []

    # (center position, context position) pairs depend only on length
    pair_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def window_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
        cached = pair_cache.get(n)
        if cached is None:
            c_pos, x_pos = [], []
            for t in range(n):
                lo, hi = max(0, t - config.window), min(n, t + config.window + 1)
                for u in range(lo, hi):
                    if u != t:
                        c_pos.append(t)
                        x_pos.append(u)
            cached = (np.array(c_pos, dtype=np.int64), np.array(x_pos, dtype=np.int64))
            pair_cache[n] = cached
        return cached

    neg = config.negative
    for _epoch in range(config.epochs):
        loss_sum = 0.0
        pair_count = 0
        for sent in encoded:
            if config.sample > 0:
                mask = rng.random(sent.shape[0]) < keep_prob[sent]
                kept = sent[mask]
            else:
                kept = sent
            n = kept.shape[0]
            if n < 2:
                processed += n
                continue
            lr = max(lr_min, lr0 + (lr_min - lr0) * (processed / expected_tokens))
            processed += n
            c_pos, x_pos = window_pairs(n)
            centers = kept[c_pos]
            contexts = kept[x_pos]
            n_pairs = centers.shape[0]
            if neg > 0:
                negs = sampler.draw(rng, (n_pairs, neg))
                # avoid negatives that equal their positive context
                for _ in range(3):
                    clash = negs == contexts[:, None]
                    if not clash.any():
                        break
                    negs[clash] = sampler.draw(rng, (int(clash.sum()),))
                out_idx = np.concatenate([contexts[:, None], negs], axis=1)
            else:
                out_idx = contexts[:, None]
            c_vecs = w_in[centers]
            o_vecs = w_out[out_idx]
            scores = np.einsum("pd,pkd->pk", c_vecs, o_vecs)
            loss_sum -= float(
                np.sum(_log_sigmoid(scores[:, 0]))
                + np.sum(_log_sigmoid(-scores[:, 1:]))
            )
            pair_count += n_pairs
            g = _sigmoid(scores)
            g[:, 0] -= 1.0
            grad_c = np.einsum("pk,pkd->pd", g, o_vecs)
            np.add.at(w_in, centers, (-lr) * grad_c)
            np.add.at(
                w_out,
                out_idx.ravel(),
                (-lr) * (g[:, :, None] * c_vecs[:, None, :]).reshape(-1, dim),
            )
        epoch_losses.append(loss_sum / max(pair_count, 1))

    table = EmbeddingTable(
        dim=dim, vectors={item: w_in[remap[item]].copy() for item in kept_ids}
    )
    report = {
        "sessions_used": len(corpus),
        "sessions_excluded": len(excluded),
        "vocab_size": vocab_size,
        "epoch_losses": epoch_losses,
    }
    return table, report


def save_table(table: EmbeddingTable, path: str | Path) -> None:
    """Write the table as text: header, then one id + vector per line."""
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "embeddings", 1, {"dim": table.dim, "count": len(table)})
        for item_id in sorted(table.vectors):
            vec = table.vectors[item_id]
            fh.write(f"{item_id}\t{' '.join(format_float(v) for v in vec)}\n")


def load_table(path: str | Path) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        meta = read_header(fh, "embeddings", 1)
        dim = int(meta["dim"])
        count = int(meta["count"])
        vectors: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FileFormatError(f"{path}:{lineno}: expected id<TAB>vector")
            vec = np.array([float(tok) for tok in parts[1].split()], dtype=np.float64)
            if vec.shape[0] != dim:
                raise FileFormatError(
                    f"{path}:{lineno}: vector length {vec.shape[0]} != dim {dim}"
                )
            if not np.all(np.isfinite(vec)):
                raise FileFormatError(f"{path}:{lineno}: non-finite entries")
            vectors[parts[0]] = vec
    if len(vectors) != count:
        raise FileFormatError(
            f"{path}: truncated table, header count {count} but read {len(vectors)}"
        )
    return EmbeddingTable(dim=dim, vectors=vectors)
