"""Token-based stand-in for the encoder/decoder pair, with exact backprop.

Encoder: ``z = tanh(W_enc @ mean(E[ids]) + b_enc)``.
Decoder step: ``logits = concat(z, E[y_prev]) @ W_dec + b_dec``.
Sub-formula features are mixed into the main feature by :func:`fuse`, and
the per-formula losses are combined by :func:`total_loss`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence

import numpy as np

from ..errors import DimensionMismatch, EmptyInput, TokenOutOfVocab
from ..latex import parse_latex, serialize, significant, tokenize

BOS = "<bos>"
EOS = "<eos>"
DEFAULT_DIM = 32
DEFAULT_ALPHA = 0.2
INIT_SCALE = 0.1


class Vocabulary:
    """Lexer token keys plus begin/end sentinels, in a fixed order."""

    def __init__(self, tokens: Iterable[str]):
        keys = sorted(set(tokens) - {BOS, EOS})
        self.tokens: List[str] = [BOS, EOS] + keys
        self.index: Dict[str, int] = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    @property
    def bos(self) -> int:
        return 0

    @property
    def eos(self) -> int:
        return 1

    @classmethod
    def from_texts(cls, texts: Iterable[str]) -> "Vocabulary":
        keys = {"{", "}"}
        for text in texts:
            keys.update(t.key for t in significant(tokenize(text)))
            # sub-formula parts are printed canonically, so their tokens count too
            keys.update(t.key for t in significant(tokenize(serialize(parse_latex(text)))))
        return cls(keys)

    @classmethod
    def from_corpus(cls, records) -> "Vocabulary":
        texts = []
        for rec in records:
            texts.append(rec.latex)
            texts.extend(rec.labels)
        return cls.from_texts(texts)

    def ids(self, latex: str) -> List[int]:
        out = []
        for tok in significant(tokenize(latex)):
            idx = self.index.get(tok.key)
            if idx is None:
                raise TokenOutOfVocab(tok.key)
            out.append(idx)
        return out

    def target(self, latex: str) -> List[int]:
        """Decoder target: token ids followed by the end sentinel."""
        return self.ids(latex) + [self.eos]


@dataclass
class ToyModelParams:
    E: np.ndarray  # |V| x d token embeddings
    W_enc: np.ndarray  # d x d
    b_enc: np.ndarray  # d
    W_dec: np.ndarray  # 2d x |V|
    b_dec: np.ndarray  # |V|

    NAMES = ("E", "W_enc", "b_enc", "W_dec", "b_dec")

    @classmethod
    def init(cls, vocab_size: int, d: int = DEFAULT_DIM, seed: int = 0,
             scale: float = INIT_SCALE) -> "ToyModelParams":
        rng = np.random.default_rng(seed)
        return cls(
            E=rng.normal(0.0, scale, (vocab_size, d)),
            W_enc=rng.normal(0.0, scale, (d, d)),
            b_enc=np.zeros(d),
            W_dec=rng.normal(0.0, scale, (2 * d, vocab_size)),
            b_dec=np.zeros(vocab_size),
        )

    @classmethod
    def zeros(cls, vocab_size: int, d: int = DEFAULT_DIM) -> "ToyModelParams":
        return cls(
            np.zeros((vocab_size, d)), np.zeros((d, d)), np.zeros(d),
            np.zeros((2 * d, vocab_size)), np.zeros(vocab_size),
        )

    @property
    def dim(self) -> int:
        return self.E.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.E.shape[0]

    def arrays(self):
        return [getattr(self, k) for k in self.NAMES]

    def shapes(self) -> Dict[str, List[int]]:
        return {k: list(getattr(self, k).shape) for k in self.NAMES}

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def from_flat(cls, flat: np.ndarray, shapes: Dict[str, Sequence[int]]) -> "ToyModelParams":
        parts, at = {}, 0
        for k in cls.NAMES:
            shape = tuple(shapes[k])
            size = int(np.prod(shape))
            parts[k] = np.array(flat[at : at + size], dtype=np.float64).reshape(shape)
            at += size
        if at != flat.size:
            raise DimensionMismatch(f"flat array has {flat.size} values, shapes need {at}")
        return cls(**parts)

    def copy(self) -> "ToyModelParams":
        return ToyModelParams(*(a.copy() for a in self.arrays()))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


@dataclass(frozen=True)
class FusionConfig:
    alpha: float = DEFAULT_ALPHA
    n: int = 4

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.n < 1:
            raise ValueError("n must be positive")


@dataclass(frozen=True)
class LossBreakdown:
    l_main: float
    l_subs: tuple = field(default_factory=tuple)
    l_total: float = 0.0


def encode(ids: Sequence[int], params: ToyModelParams) -> np.ndarray:
    if len(ids) == 0:
        raise EmptyInput("cannot encode an empty token list")
    x = params.E[np.asarray(ids)].mean(axis=0)
    return np.tanh(params.W_enc @ x + params.b_enc)


def fuse(z_main: np.ndarray, z_subs: Sequence[np.ndarray], alpha: float) -> np.ndarray:
    """``alpha * z_main + (1 - alpha) * mean(z_subs)``; ``z_main`` if no subs."""
    z_main = np.asarray(z_main, dtype=np.float64)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if len(z_subs) == 0:
        return z_main.copy()
    subs = [np.asarray(z, dtype=np.float64) for z in z_subs]
    for z in subs:
        if z.shape != z_main.shape:
            raise DimensionMismatch(f"feature shapes {z.shape} and {z_main.shape} differ")
    mean = np.sum(subs, axis=0) / len(subs)
    return alpha * z_main + (1.0 - alpha) * mean


def total_loss(l_main: float, l_subs: Sequence[float], alpha: float) -> LossBreakdown:
    l_subs = tuple(float(x) for x in l_subs)
    if not l_subs:
        return LossBreakdown(float(l_main), (), float(l_main))
    mean = sum(l_subs) / len(l_subs)
    return LossBreakdown(float(l_main), l_subs, alpha * l_main + (1.0 - alpha) * mean)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shift = logits - logits.max(axis=-1, keepdims=True)
    return shift - np.log(np.exp(shift).sum(axis=-1, keepdims=True))


def _check_ids(ids, vocab_size):
    for i in ids:
        if not 0 <= i < vocab_size:
            raise TokenOutOfVocab(i)


def _decoder_inputs(z, target, params, bos):
    prev = [bos] + list(target[:-1])
    steps = len(target)
    U = np.concatenate([np.broadcast_to(z, (steps, z.size)), params.E[prev]], axis=1)
    return U, prev


def decode_nll(z: np.ndarray, target: Sequence[int], params: ToyModelParams, bos: int = 0) -> float:
    """Teacher-forced negative log-likelihood of ``target`` given feature ``z``."""
    if len(target) == 0:
        raise EmptyInput("decoder target is empty")
    _check_ids(target, params.vocab_size)
    U, _ = _decoder_inputs(z, target, params, bos)
    logp = _log_softmax(U @ params.W_dec + params.b_dec)
    return float(-logp[np.arange(len(target)), target].sum())


class _Grads:
    def __init__(self, params: ToyModelParams):
        self.E = np.zeros_like(params.E)
        self.W_enc = np.zeros_like(params.W_enc)
        self.b_enc = np.zeros_like(params.b_enc)
        self.W_dec = np.zeros_like(params.W_dec)
        self.b_dec = np.zeros_like(params.b_dec)

    def as_params(self) -> ToyModelParams:
        return ToyModelParams(self.E, self.W_enc, self.b_enc, self.W_dec, self.b_dec)


def _decode_backward(z, target, params, weight, g: _Grads, bos):
    """Accumulate ``weight * d NLL``; return (nll, d NLL / dz * weight)."""
    U, prev = _decoder_inputs(z, target, params, bos)
    logits = U @ params.W_dec + params.b_dec
    logp = _log_softmax(logits)
    steps = np.arange(len(target))
    nll = float(-logp[steps, target].sum())
    dlogits = np.exp(logp)
    dlogits[steps, target] -= 1.0
    dlogits *= weight
    g.W_dec += U.T @ dlogits
    g.b_dec += dlogits.sum(axis=0)
    dU = dlogits @ params.W_dec.T
    d = z.size
    np.add.at(g.E, prev, dU[:, d:])
    return nll, dU[:, :d].sum(axis=0)


def _encode_backward(ids, z, dz, params, g: _Grads):
    x = params.E[ids].mean(axis=0)
    dh = dz * (1.0 - z * z)
    g.W_enc += np.outer(dh, x)
    g.b_enc += dh
    dx = params.W_enc.T @ dh
    np.add.at(g.E, ids, np.broadcast_to(dx / len(ids), (len(ids), dx.size)))


@dataclass(frozen=True)
class EncodedInstance:
    """Token ids of a training instance, ready for the toy model."""

    main: tuple
    main_target: tuple
    parts: tuple = ()
    part_targets: tuple = ()
    labelled: tuple = ()

    @classmethod
    def from_instance(cls, instance, vocab: Vocabulary) -> "EncodedInstance":
        source = instance.main.source
        parts = tuple(tuple(vocab.ids(p.latex)) for p in instance.parts)
        return cls(
            main=tuple(vocab.ids(source)),
            main_target=tuple(vocab.target(source)),
            parts=parts,
            part_targets=tuple(tuple(vocab.target(p.latex)) for p in instance.parts),
            labelled=tuple(instance.labels_available),
        )


def instance_loss(inst: EncodedInstance, params: ToyModelParams, alpha: float, bos: int = 0) -> LossBreakdown:
    """Forward pass for one instance. Unlabelled parts are fused but unscored."""
    z_main = encode(inst.main, params)
    z_parts = [encode(p, params) for p in inst.parts]
    Z = fuse(z_main, z_parts, alpha)
    l_main = decode_nll(Z, inst.main_target, params, bos)
    l_subs = [
        decode_nll(z, t, params, bos)
        for z, t, ok in zip(z_parts, inst.part_targets, inst.labelled)
        if ok
    ]
    return total_loss(l_main, l_subs, alpha)


def batch_loss(params: ToyModelParams, batch: Sequence[EncodedInstance], alpha: float, bos: int = 0) -> float:
    return sum(instance_loss(inst, params, alpha, bos).l_total for inst in batch) / len(batch)


def loss_and_grad(params: ToyModelParams, batch: Sequence[EncodedInstance], config: FusionConfig,
                  bos: int = 0):
    """Batch-mean total loss, per-instance breakdowns and analytic gradients.

    Gradients are accumulated in batch order, so results are bit-reproducible.
    """
    if not batch:
        raise EmptyInput("empty batch")
    alpha = config.alpha
    g = _Grads(params)
    scale = 1.0 / len(batch)
    breakdowns = []
    for inst in batch:
        z_main = encode(inst.main, params)
        z_parts = [encode(p, params) for p in inst.parts]
        Z = fuse(z_main, z_parts, alpha)
        n_lab = sum(1 for ok in inst.labelled if ok)
        w_main = (alpha if n_lab else 1.0) * scale
        w_sub = ((1.0 - alpha) / n_lab * scale) if n_lab else 0.0

        l_main, dZ = _decode_backward(Z, inst.main_target, params, w_main, g, bos)
        if z_parts:
            dz_main = alpha * dZ
            dz_parts = [(1.0 - alpha) / len(z_parts) * dZ for _ in z_parts]
        else:
            dz_main = dZ
            dz_parts = []
        l_subs = []
        for k, (z, t, ok) in enumerate(zip(z_parts, inst.part_targets, inst.labelled)):
            if not ok:
                continue
            l_k, dz_k = _decode_backward(z, t, params, w_sub, g, bos)
            l_subs.append(l_k)
            dz_parts[k] = dz_parts[k] + dz_k
        _encode_backward(np.asarray(inst.main), z_main, dz_main, params, g)
        for ids, z, dz in zip(inst.parts, z_parts, dz_parts):
            _encode_backward(np.asarray(ids), z, dz, params, g)
        breakdowns.append(total_loss(l_main, l_subs, alpha))
    mean_total = sum(b.l_total for b in breakdowns) * scale
    return mean_total, breakdowns, g.as_params()


def grad(params: ToyModelParams, batch: Sequence[EncodedInstance], config: FusionConfig,
         bos: int = 0) -> ToyModelParams:
    """Gradients of the batch-mean total loss, shaped like ``params``."""
    return loss_and_grad(params, batch, config, bos)[2]
