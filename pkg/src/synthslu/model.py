"""End-to-end SLU models.

A convolutional/recurrent encoder maps features to a shorter hidden sequence.
Two heads sit on top of it:

* :class:`MaxPoolDecoder` scores every slot value at every timestep and
  max-pools over time (one prediction per fixed slot);
* :class:`AutoregressiveDecoder` emits the serialized label one character at a
  time with two GRU layers and key-value attention, decoded by beam search.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .errors import CheckpointError, ConfigError, InputError, ParseError, ShapeError
from .frontend import FeatureConfig
from .semantics import FIXED, SemanticLabel, Vocabularies, parse_label, serialize_label

CHECKPOINT_FORMAT = "synthslu-checkpoint/1"
MAXPOOL = "maxpool"
AUTOREGRESSIVE = "autoregressive"


@dataclass(frozen=True)
class EncoderConfig:
    input_dim: int = 40
    conv_channels: tuple[int, ...] = (64, 64)
    conv_kernels: tuple[int, ...] = (5, 5)
    pool: tuple[int, ...] = (2, 2)
    rnn_hidden: int = 64
    rnn_layers: int = 1
    bidirectional: bool = True

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(self.conv_channels))
        object.__setattr__(self, "conv_kernels", tuple(self.conv_kernels))
        object.__setattr__(self, "pool", tuple(self.pool))
        if not len(self.conv_channels) == len(self.conv_kernels) == len(self.pool):
            raise ConfigError("conv_channels, conv_kernels and pool must have equal length")
        if any(k % 2 == 0 for k in self.conv_kernels):
            raise ConfigError("conv kernels must be odd")
        if any(p < 1 for p in self.pool):
            raise ConfigError("pooling factors must be >= 1")

    @property
    def downsampling(self) -> int:
        return int(np.prod(self.pool)) if self.pool else 1

    @property
    def output_dim(self) -> int:
        return self.rnn_hidden * (2 if self.bidirectional else 1)

    def output_length(self, t: int) -> int:
        for p in self.pool:
            t = -(-t // p)
        return t


@dataclass(frozen=True)
class DecoderConfig:
    hidden: int = 256
    embedding_dim: int = 64
    attention_dim: int = 128
    value_dim: int = 128
    query_layer: int = 1  # which GRU layer's state forms the attention query
    beam_width: int = 8
    max_len: int | None = None  # None: twice the longest training label, plus EOS
    nll_normalization: str = "token"  # or "sequence"

    def __post_init__(self):
        if self.query_layer not in (1, 2):
            raise ConfigError("query_layer must be 1 or 2")
        if self.nll_normalization not in ("token", "sequence"):
            raise ConfigError("nll_normalization must be 'token' or 'sequence'")


@dataclass(frozen=True)
class ModelConfig:
    family: str = MAXPOOL
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)

    def __post_init__(self):
        if self.family not in (MAXPOOL, AUTOREGRESSIVE):
            raise ConfigError(f"unknown model family {self.family!r}")
        if isinstance(self.encoder, dict):
            object.__setattr__(self, "encoder", EncoderConfig(**self.encoder))
        if isinstance(self.decoder, dict):
            object.__setattr__(self, "decoder", DecoderConfig(**self.decoder))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["encoder"] = {k: list(v) if isinstance(v, tuple) else v for k, v in d["encoder"].items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def length_mask(lengths: torch.Tensor, t: int) -> torch.Tensor:
    """Boolean (B, t) mask, True at valid positions."""
    return torch.arange(t, device=lengths.device)[None, :] < lengths[:, None]


class Encoder(nn.Module):
    """Conv + ReLU + max-pool stages followed by a (bi)GRU.

    Padded positions are zeroed after every stage so a padded batch gives the
    same outputs as running utterances one at a time.
    """

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.convs = nn.ModuleList()
        d = cfg.input_dim
        for ch, k in zip(cfg.conv_channels, cfg.conv_kernels):
            self.convs.append(nn.Conv1d(d, ch, k, padding=k // 2))
            d = ch
        self.rnn = nn.GRU(
            d, cfg.rnn_hidden, num_layers=cfg.rnn_layers, batch_first=True, bidirectional=cfg.bidirectional
        )

    def forward(self, x: torch.Tensor, lengths: torch.Tensor | None = None):
        """x: (B, T, d) -> (hidden (B, T', d_enc), lengths (B,))."""
        if x.dim() != 3 or x.size(-1) != self.cfg.input_dim:
            raise ShapeError(f"expected (B, T, {self.cfg.input_dim}) features, got {tuple(x.shape)}")
        b, t, _ = x.shape
        if lengths is None:
            lengths = torch.full((b,), t, dtype=torch.long)
        lengths = lengths.to(torch.long)
        h = x.transpose(1, 2)
        h = h * length_mask(lengths, t)[:, None, :].to(h.dtype)
        for conv, p in zip(self.convs, self.cfg.pool):
            # zero the padding before pooling; outputs are >= 0 after ReLU,
            # so a zero can never win a window that has a valid frame
            h = F.relu(conv(h)) * length_mask(lengths, h.size(-1))[:, None, :].to(h.dtype)
            if p > 1:
                h = F.max_pool1d(h, p, p, ceil_mode=True)
                lengths = torch.div(lengths + p - 1, p, rounding_mode="floor")
            h = h * length_mask(lengths, h.size(-1))[:, None, :].to(h.dtype)
        h = h.transpose(1, 2)
        packed = pack_padded_sequence(h, lengths.cpu(), batch_first=True, enforce_sorted=False)
        out, _ = self.rnn(packed)
        out, _ = pad_packed_sequence(out, batch_first=True, total_length=h.size(1))
        return out, lengths


class MaxPoolDecoder(nn.Module):
    def __init__(self, d_enc: int, slot_sizes: Sequence[int]):
        super().__init__()
        self.heads = nn.ModuleList(nn.Linear(d_enc, n) for n in slot_sizes)

    def forward(self, h: torch.Tensor, lengths: torch.Tensor | None = None) -> list[torch.Tensor]:
        """h: (B, T', d_enc) -> per-slot pooled scores, each (B, n_s)."""
        if h.size(1) == 0:
            raise ShapeError("max-pool decoder needs at least one timestep")
        mask = None if lengths is None else length_mask(lengths, h.size(1))
        out = []
        for head in self.heads:
            s = head(h)
            if mask is not None:
                s = s.masked_fill(~mask[:, :, None], float("-inf"))
            out.append(s.max(dim=1).values)
        return out


def decode_maxpool(decoder: MaxPoolDecoder, h: torch.Tensor) -> list[torch.Tensor]:
    """Unbatched convenience: h is (T', d_enc)."""
    if h.dim() != 2 or h.size(0) == 0:
        raise ShapeError(f"expected a non-empty (T', d_enc) sequence, got {tuple(h.shape)}")
    return [s[0] for s in decoder(h[None])]


def attend(query: torch.Tensor, keys: torch.Tensor, values: torch.Tensor, mask: torch.Tensor | None = None):
    """Scaled dot-product attention.

    query (..., Q, d_att) or (d_att,); keys (..., T, d_att); values
    (..., T, d_val); mask (..., T) True where valid. Returns
    ``(context, weights)``.
    """
    if keys.size(-2) == 0:
        raise ShapeError("cannot attend over an empty sequence")
    if keys.size(-1) != query.size(-1) or keys.size(-2) != values.size(-2):
        raise ShapeError(
            f"inconsistent shapes: query {tuple(query.shape)}, keys {tuple(keys.shape)}, values {tuple(values.shape)}"
        )
    single = query.dim() == 1
    if single:
        query = query[None]
    scores = query @ keys.transpose(-1, -2) / math.sqrt(query.size(-1))
    if mask is not None:
        scores = scores.masked_fill(~mask.unsqueeze(-2), float("-inf"))
    weights = torch.softmax(scores, dim=-1)
    context = weights @ values
    if single:
        return context[0], weights[0]
    return context, weights


@dataclass
class Memory:
    """Encoder outputs projected for attention."""

    keys: torch.Tensor  # (B, T', d_att)
    values: torch.Tensor  # (B, T', d_val)
    mask: torch.Tensor  # (B, T')

    def index_select(self, idx: torch.Tensor) -> "Memory":
        return Memory(self.keys[idx], self.values[idx], self.mask[idx])


class AutoregressiveDecoder(nn.Module):
    def __init__(self, d_enc: int, vocab_size: int, cfg: DecoderConfig = DecoderConfig()):
        super().__init__()
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.embedding = nn.Embedding(vocab_size, cfg.embedding_dim)
        self.gru1 = nn.GRU(cfg.embedding_dim, cfg.hidden, batch_first=True)
        in2 = cfg.hidden + (cfg.value_dim if cfg.query_layer == 1 else 0)
        self.gru2 = nn.GRU(in2, cfg.hidden, batch_first=True)
        self.key = nn.Linear(d_enc, cfg.attention_dim)
        self.value = nn.Linear(d_enc, cfg.value_dim)
        self.query = nn.Linear(cfg.hidden, cfg.attention_dim)
        self.out = nn.Linear(cfg.hidden + cfg.value_dim, vocab_size)

    def memory(self, h: torch.Tensor, lengths: torch.Tensor | None = None) -> Memory:
        if h.size(1) == 0:
            raise ShapeError("empty encoder output")
        if lengths is None:
            lengths = torch.full((h.size(0),), h.size(1), dtype=torch.long)
        return Memory(self.key(h), self.value(h), length_mask(lengths, h.size(1)))

    def init_state(self, batch: int, dtype=torch.float32):
        z = torch.zeros(1, batch, self.cfg.hidden, dtype=dtype)
        return (z, z.clone())

    def _run(self, tokens: torch.Tensor, state, mem: Memory):
        """tokens (B, L) -> (logits (B, L, V), new state)."""
        h1, s1 = self.gru1(self.embedding(tokens), state[0])
        if self.cfg.query_layer == 1:
            ctx, _ = attend(self.query(h1), mem.keys, mem.values, mem.mask)
            h2, s2 = self.gru2(torch.cat([h1, ctx], -1), state[1])
        else:
            h2, s2 = self.gru2(h1, state[1])
            ctx, _ = attend(self.query(h2), mem.keys, mem.values, mem.mask)
        return self.out(torch.cat([h2, ctx], -1)), (s1, s2)

    def forward(self, inputs: torch.Tensor, mem: Memory) -> torch.Tensor:
        """Teacher-forced log-probabilities, (B, L, V)."""
        logits, _ = self._run(inputs, self.init_state(inputs.size(0), mem.keys.dtype), mem)
        return F.log_softmax(logits, -1)

    def step(self, prev: torch.Tensor, state, mem: Memory):
        """One decoding step for a batch: prev (B,) -> (log-probs (B, V), state)."""
        logits, state = self._run(prev[:, None], state, mem)
        return F.log_softmax(logits[:, 0], -1), state


@dataclass
class Hypothesis:
    tokens: list[int]
    score: float
    state: object = None
    finished: bool = True


class SluModel(nn.Module):
    """Encoder plus one decoder head, with vocabularies and feature config
    attached so a checkpoint is self-describing."""

    def __init__(self, cfg: ModelConfig, vocab: Vocabularies, feature_cfg: FeatureConfig = FeatureConfig()):
        super().__init__()
        if cfg.encoder.input_dim != feature_cfg.dim:
            raise ConfigError(
                f"encoder input_dim {cfg.encoder.input_dim} != feature dim {feature_cfg.dim}"
            )
        if cfg.family == MAXPOOL and vocab.variant != FIXED:
            raise ConfigError("the max-pool decoder needs fixed-slot labels")
        self.cfg = cfg
        self.vocab = vocab
        self.feature_cfg = feature_cfg
        self.encoder = Encoder(cfg.encoder)
        d = cfg.encoder.output_dim
        if cfg.family == MAXPOOL:
            self.decoder = MaxPoolDecoder(d, vocab.sizes())
        else:
            self.decoder = AutoregressiveDecoder(d, len(vocab.alphabet), cfg.decoder)
        self._slot_index = [{v: i for i, v in enumerate(vals)} for _, vals in vocab.slots]

    @property
    def family(self) -> str:
        return self.cfg.family

    @property
    def alphabet(self):
        return self.vocab.alphabet

    @property
    def max_decode_len(self) -> int:
        if self.cfg.decoder.max_len:
            return self.cfg.decoder.max_len
        if not self.vocab.max_label_length:
            raise ConfigError("no decoder max_len configured and vocabulary has no label lengths")
        return 2 * self.vocab.max_label_length + 1

    def encode(self, feats: torch.Tensor, lengths: torch.Tensor | None = None):
        return self.encoder(feats, lengths)

    # targets ---------------------------------------------------------------

    def slot_targets(self, labels: Sequence[SemanticLabel]) -> torch.Tensor:
        rows = []
        for lab in labels:
            try:
                rows.append([idx[v] for idx, v in zip(self._slot_index, lab.values())])
            except KeyError as exc:
                raise InputError(f"slot value {exc.args[0]!r} not in vocabulary") from None
        return torch.tensor(rows, dtype=torch.long)

    def token_targets(self, labels: Sequence[SemanticLabel]):
        """Padded (inputs, targets) for teacher forcing; padding is -100 in targets."""
        seqs = [self.alphabet.encode(serialize_label(lab)) for lab in labels]
        return pad_token_sequences(seqs, self.alphabet.bos, self.alphabet.eos)

    # losses ----------------------------------------------------------------

    def loss(self, feats, lengths, labels) -> torch.Tensor:
        h, hl = self.encode(feats, lengths)
        if self.family == MAXPOOL:
            return maxpool_loss(self.decoder(h, hl), self.slot_targets(labels))
        inputs, targets = self.token_targets(labels)
        logp = self.decoder(inputs, self.decoder.memory(h, hl))
        return masked_nll(logp, targets, self.cfg.decoder.nll_normalization)

    def per_utterance_loss(self, feats, lengths, labels) -> torch.Tensor:
        """Loss of every utterance separately, shape (B,)."""
        h, hl = self.encode(feats, lengths)
        if self.family == MAXPOOL:
            scores = self.decoder(h, hl)
            tgt = self.slot_targets(labels)
            return sum(F.cross_entropy(s, tgt[:, i], reduction="none") for i, s in enumerate(scores))
        inputs, targets = self.token_targets(labels)
        logp = self.decoder(inputs, self.decoder.memory(h, hl))
        nll = sequence_nll(logp, targets)
        if self.cfg.decoder.nll_normalization == "token":
            nll = nll / (targets != -100).sum(1)
        return nll

    # inference -------------------------------------------------------------

    @torch.no_grad()
    def predict_strings(self, feats, lengths, beam_width: int | None = None, max_len: int | None = None):
        h, hl = self.encode(feats, lengths)
        if self.family == MAXPOOL:
            scores = self.decoder(h, hl)
            best = [s.argmax(-1).tolist() for s in scores]
            return [
                "|".join(vals[best[i][b]] for i, (_, vals) in enumerate(self.vocab.slots))
                for b in range(feats.size(0))
            ]
        width = beam_width or self.cfg.decoder.beam_width
        max_len = max_len or self.max_decode_len
        hyps = beam_search_batch(self.decoder, self.decoder.memory(h, hl), width, max_len)
        return [self.alphabet.decode(hyp.tokens) for hyp in hyps]

    def predict(self, feats, lengths, **kw) -> list[SemanticLabel | None]:
        """Decoded labels; None where the output string does not parse."""
        out = []
        for s in self.predict_strings(feats, lengths, **kw):
            try:
                out.append(parse_label(s, self.vocab.variant))
            except ParseError:
                out.append(None)
        return out


def pad_token_sequences(seqs: Sequence[Sequence[int]], bos: int, eos: int):
    if any(len(s) == 0 for s in seqs):
        raise InputError("empty target sequence")
    n = max(len(s) for s in seqs)
    inputs = torch.full((len(seqs), n), eos, dtype=torch.long)
    targets = torch.full((len(seqs), n), -100, dtype=torch.long)
    for i, s in enumerate(seqs):
        s = torch.as_tensor(list(s), dtype=torch.long)
        targets[i, : len(s)] = s
        inputs[i, 0] = bos
        inputs[i, 1 : len(s)] = s[:-1]
    return inputs, targets


def maxpool_loss(scores: Sequence[torch.Tensor], targets: torch.Tensor) -> torch.Tensor:
    """Sum over slots of the batch-mean cross-entropy."""
    return sum(F.cross_entropy(s, targets[:, i]) for i, s in enumerate(scores))


def sequence_nll(logp: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    mask = targets != -100
    picked = logp.gather(-1, targets.clamp(min=0)[..., None])[..., 0]
    return -(picked * mask).sum(1)


def masked_nll(logp: torch.Tensor, targets: torch.Tensor, normalization: str = "token") -> torch.Tensor:
    per_seq = sequence_nll(logp, targets)
    if normalization == "token":
        return per_seq.sum() / (targets != -100).sum()
    return per_seq.mean()


def teacher_forced_nll(model: SluModel, feats: torch.Tensor, targets: Sequence[int], lengths=None) -> torch.Tensor:
    """Negative log-likelihood of one EOS-terminated token sequence under
    teacher forcing, normalized per the model's config."""
    targets = list(targets)
    if not targets:
        raise InputError("empty target sequence")
    a = model.alphabet
    if any(not 0 <= t < len(a) for t in targets):
        raise InputError("target token outside alphabet")
    if targets[-1] != a.eos:
        raise InputError("target sequence must end with EOS")
    if feats.dim() == 2:
        feats = feats[None]
    h, hl = model.encode(feats, lengths)
    inputs, tgt = pad_token_sequences([targets], a.bos, a.eos)
    logp = model.decoder(inputs, model.decoder.memory(h, hl))
    return masked_nll(logp, tgt, model.cfg.decoder.nll_normalization)


def decode_step(decoder: AutoregressiveDecoder, prev_token: int, state, mem: Memory):
    """Single-utterance step. ``state=None`` starts a new sequence."""
    if not 0 <= int(prev_token) < decoder.vocab_size:
        raise InputError(f"token {prev_token} outside alphabet of size {decoder.vocab_size}")
    if state is None:
        state = decoder.init_state(1, mem.keys.dtype)
    logp, state = decoder.step(torch.tensor([int(prev_token)]), state, mem)
    return logp[0], state


@torch.no_grad()
def greedy_decode(decoder: AutoregressiveDecoder, mem: Memory, max_len: int, bos: int = 0, eos: int = 1) -> Hypothesis:
    state, prev, tokens, score = None, bos, [], 0.0
    for _ in range(max_len):
        logp, state = decode_step(decoder, prev, state, mem)
        tok = int(logp.argmax())
        tokens.append(tok)
        score += float(logp[tok])
        if tok == eos:
            break
        prev = tok
    return Hypothesis(tokens, score, state)


@torch.no_grad()
def beam_search_batch(
    decoder: AutoregressiveDecoder, mem: Memory, width: int, max_len: int, bos: int = 0, eos: int = 1
) -> list[Hypothesis]:
    """Beam search over a batch of utterances.

    Each step keeps the ``width`` best extensions of the live beams; the ones
    that end in EOS (or reach ``max_len`` tokens) are set aside as finished.
    Scores are unnormalized sums of token log-probabilities. Search stops
    early once no live beam can beat the best finished hypothesis, which is
    exact because log-probabilities are non-positive.
    """
    if width < 1 or max_len < 1:
        raise InputError("width and max_len must be >= 1")
    b = mem.keys.size(0)
    v = decoder.vocab_size
    neg_inf = float("-inf")
    dtype = mem.keys.dtype

    live = 1  # beams per utterance; the batch starts with a single BOS beam
    scores = torch.zeros(b, 1, dtype=torch.float64)
    tokens = torch.full((b, 1, 0), bos, dtype=torch.long)
    state = decoder.init_state(b, dtype)
    prev = torch.full((b,), bos, dtype=torch.long)
    mem_flat = mem
    best = [None] * b  # (score, tokens)

    for step in range(max_len):
        logp, state = decoder.step(prev, state, mem_flat)
        cand = (scores[:, :, None] + logp.view(b, live, v).to(torch.float64)).view(b, live * v)
        k = min(width, live * v)
        top, idx = cand.topk(k, dim=1)
        beam = torch.div(idx, v, rounding_mode="floor")
        tok = idx % v
        last = step == max_len - 1
        new_tokens = torch.cat([tokens.gather(1, beam[:, :, None].expand(-1, -1, tokens.size(2))), tok[:, :, None]], 2)

        finite = torch.isfinite(top)
        keep = finite & (tok != eos) if not last else torch.zeros_like(finite)
        done = finite & ~keep
        for i, j in done.nonzero().tolist():
            s = float(top[i, j])
            if best[i] is None or s > best[i][0]:
                best[i] = (s, new_tokens[i, j].tolist())

        # the next round keeps a uniform number of beams per utterance;
        # unused slots get -inf scores
        n_keep = int(keep.sum(1).max()) if keep.any() else 0
        if n_keep == 0:
            break
        order = torch.sort(keep.to(torch.int8), dim=1, descending=True, stable=True).indices[:, :n_keep]
        sel_scores = top.gather(1, order).masked_fill(~keep.gather(1, order), neg_inf)
        best_live = sel_scores.max(1).values
        if all(best[i] is not None and best[i][0] >= float(best_live[i]) for i in range(b)):
            break
        sel_beam = beam.gather(1, order)
        flat = (torch.arange(b)[:, None] * live + sel_beam).reshape(-1)
        state = tuple(s[:, flat] for s in state)
        if live != n_keep or step == 0:
            utt = torch.arange(b).repeat_interleave(n_keep)
            mem_flat = mem.index_select(utt)
        scores = sel_scores
        tokens = new_tokens.gather(1, order[:, :, None].expand(-1, -1, new_tokens.size(2)))
        prev = tok.gather(1, order).reshape(-1)
        live = n_keep
    return [Hypothesis(bb[1], bb[0]) if bb is not None else Hypothesis([], neg_inf) for bb in best]


def beam_search(decoder: AutoregressiveDecoder, mem: Memory, width: int, max_len: int, bos: int = 0, eos: int = 1) -> Hypothesis:
    """Single-utterance beam search; ``mem`` has batch size 1."""
    return beam_search_batch(decoder, mem, width, max_len, bos, eos)[0]


# construction and checkpoints ---------------------------------------------------


def build_model(
    cfg: ModelConfig, vocab: Vocabularies, feature_cfg: FeatureConfig = FeatureConfig(), seed: int = 0
) -> SluModel:
    """Seeded construction; leaves the global torch RNG untouched."""
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        return SluModel(cfg, vocab, feature_cfg)


def default_max_len(labels: Sequence[SemanticLabel]) -> int:
    """Twice the longest serialized training label, plus EOS."""
    return 2 * max(len(serialize_label(lab)) for lab in labels) + 1


def save_model(model: SluModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "model_config": model.cfg.to_dict(),
        "vocab": model.vocab.to_dict(),
        "feature_config": model.feature_cfg.to_dict(),
        "state_dict": model.state_dict(),
    }
    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)
    return path


def load_model(path) -> SluModel:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        found = payload.get("format") if isinstance(payload, dict) else type(payload).__name__
        raise CheckpointError(f"{path}: expected format {CHECKPOINT_FORMAT!r}, found {found!r}")
    try:
        model = SluModel(
            ModelConfig.from_dict(payload["model_config"]),
            Vocabularies.from_dict(payload["vocab"]),
            FeatureConfig(**payload["feature_config"]),
        )
        model.load_state_dict(payload["state_dict"])
    except (RuntimeError, KeyError, TypeError, ConfigError) as exc:
        raise CheckpointError(f"{path}: incompatible checkpoint: {exc}") from exc
    model.eval()
    return model


def load_encoder_weights(model: SluModel, path) -> None:
    """Load encoder-only weights (e.g. from :func:`pretrain.pretrain_encoder`)."""
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
        state = payload["encoder_state"] if "encoder_state" in payload else payload
        model.encoder.load_state_dict(state)
    except Exception as exc:
        raise CheckpointError(f"cannot load encoder weights from {path}: {exc}") from exc
