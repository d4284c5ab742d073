"""Deterministic mini-batch gradient descent for the toy model."""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence

import numpy as np

from ..errors import EmptyCorpus, NonFiniteLoss
from ..latex import parse_latex
from ..subformula import SamplePlan, derive_seed, make_training_instance
from .model import (
    DEFAULT_DIM,
    EncodedInstance,
    FusionConfig,
    ToyModelParams,
    Vocabulary,
    loss_and_grad,
)

logger = logging.getLogger(__name__)

DEFAULT_BATCH = 2
CURVE_HEADER = ("epoch", "mode", "mean_total_loss", "mean_main_loss", "mean_sub_loss")


@dataclass(frozen=True)
class EpochLoss:
    epoch: int
    mode: str
    total: float
    main: float
    sub: float


@dataclass
class TrainResult:
    curve: List[EpochLoss]
    params: ToyModelParams
    vocab: Vocabulary
    seed: int = 0

    def curve_csv(self) -> str:
        return curve_csv(self.curve)


def curve_csv(rows: Sequence[EpochLoss]) -> str:
    lines = [",".join(CURVE_HEADER)]
    for r in rows:
        lines.append(f"{r.epoch},{r.mode},{r.total!r},{r.main!r},{r.sub!r}")
    return "\n".join(lines) + "\n"


def _epoch_instances(asts, plan: SamplePlan, vocab: Vocabulary, epoch: int):
    out = []
    for k, ast in enumerate(asts):
        inst = make_training_instance(ast, plan.with_seed(derive_seed(plan.rng_seed, "epoch", epoch, k)))
        out.append(EncodedInstance.from_instance(inst, vocab))
    return out


def toy_train(corpus, plan: SamplePlan, config: FusionConfig = FusionConfig(), epochs: int = 50,
              lr: float = 0.05, d: int = DEFAULT_DIM, batch_size: int = DEFAULT_BATCH,
              seed: int = 0) -> TrainResult:
    """Train the toy encoder/decoder with the fused objective.

    Instances are re-sampled every epoch from seeds derived from
    ``plan.rng_seed``; batches follow a seeded shuffle. Each epoch records
    the mean total, main and labelled-part losses seen during that epoch.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    records = list(corpus)
    if not records:
        raise EmptyCorpus("toy training needs at least one formula")
    vocab = Vocabulary.from_corpus(records)
    asts = [parse_latex(r.latex) for r in records]
    params = ToyModelParams.init(len(vocab), d, seed)
    order_rng = random.Random(derive_seed(seed, "order"))
    mode = plan.mode.value
    curve = []
    for epoch in range(1, epochs + 1):
        data = _epoch_instances(asts, plan, vocab, epoch)
        order = list(range(len(data)))
        order_rng.shuffle(order)
        totals, mains, subs = [], [], []
        for start in range(0, len(order), batch_size):
            batch = [data[i] for i in order[start : start + batch_size]]
            # overflow is caught by the finiteness checks below
            with np.errstate(over="ignore", invalid="ignore"):
                loss, parts, g = loss_and_grad(params, batch, config, vocab.bos)
                if math.isfinite(loss):
                    for p, dp in zip(params.arrays(), g.arrays()):
                        p -= lr * dp
            if not math.isfinite(loss):
                raise NonFiniteLoss(f"non-finite loss {loss} at epoch {epoch}, batch starting {start}")
            for b in parts:
                totals.append(b.l_total)
                mains.append(b.l_main)
                subs.extend(b.l_subs)
            if not params.is_finite():
                raise NonFiniteLoss(f"parameters became non-finite at epoch {epoch}")
        row = EpochLoss(
            epoch, mode,
            math.fsum(totals) / len(totals),
            math.fsum(mains) / len(mains),
            math.fsum(subs) / len(subs) if subs else 0.0,
        )
        logger.info("epoch %d %s total=%.4f main=%.4f sub=%.4f", epoch, mode, row.total, row.main, row.sub)
        curve.append(row)
    return TrainResult(curve, params, vocab, seed)


def save_checkpoint(params: ToyModelParams, vocab: Vocabulary, path) -> Path:
    """Write a flat little-endian float64 array and a ``.json`` sidecar."""
    path = Path(path)
    params.flat().astype("<f8").tofile(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps({
        "dtype": "float64", "byteorder": "little",
        "order": list(ToyModelParams.NAMES),
        "shapes": params.shapes(),
        "vocab": vocab.tokens,
    }, indent=2))
    return sidecar


def load_checkpoint(path):
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    flat = np.fromfile(path, dtype="<f8")
    return ToyModelParams.from_flat(flat, meta["shapes"]), Vocabulary(meta["vocab"])
