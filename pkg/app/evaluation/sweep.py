"""Repeated-trial PSNR evaluation over SNR points and the TrainXTransY matrix.

A record is labelled ``TrainX TransY``: X is the decoder level the
reconstruction went through (1 = the Stage A trunk and combiner, 2 = the
second-level ones added by Stage B), Y is the number of transmitted branches.

Trial ``t`` draws branch ``i``'s channel from stream ``(seed, "trial", t, i)``
at every SNR point, so curves over SNR share their noise realizations and
results do not depend on the number of workers.
"""

import math
from collections.abc import Sequence
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.channel.schemas import ChannelKind, ChannelSpec
from app.core.concurrency import parallel_map, resolve_workers
from app.core.exceptions import CheckpointError, ConfigError
from app.core.logging import get_logger
from app.data.dataset import ImageDataset
from app.evaluation.metrics import psnr_per_image
from app.safenet.network import SafeNetwork
from app.safenet.pipeline import forward_pipeline, normalize_subset, resolve_level
from app.safenet.schemas import SafeConfig
from app.shared.schemas import FloatList
from app.tensor.rng import make_rng
from app.tensor.tensor import no_grad

logger = get_logger(__name__)

DEFAULT_SNRS = (0.0, 5.0, 10.0, 15.0, 20.0)
DEFAULT_TRIALS = 32
TRANS_SUBSETS: dict[int, tuple[int, ...]] = {1: (0,), 2: (0, 1)}


class EvalConfig(BaseModel):
    """One evaluation: channel, SNR points, transmitted branches and repeats.

    ``subset`` overrides ``trans`` (used for bandwidth-selected subsets);
    ``level`` overrides the decoder level derived from the subset.
    ``strategy`` and ``train_x`` only label the resulting records.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    channel: ChannelKind = ChannelKind.AWGN
    snrs: FloatList = DEFAULT_SNRS
    trans: int = Field(default=2, ge=1)
    subset: tuple[int, ...] | None = None
    level: int | None = Field(default=None, ge=1, le=2)
    trials: int = Field(default=DEFAULT_TRIALS, ge=1)
    seed: int = Field(default=0, ge=0)
    batch_size: int = Field(default=64, ge=1)
    noiseless: bool = False
    workers: int | None = None
    strategy: int = Field(default=0, ge=0)
    train_x: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check(self) -> Self:
        if not self.snrs:
            raise ValueError("snrs must list at least one SNR")
        if self.subset is None and self.trans not in TRANS_SUBSETS:
            raise ValueError(f"trans must be one of {sorted(TRANS_SUBSETS)}, got {self.trans}")
        return self

    def branches(self) -> tuple[int, ...]:
        return self.subset if self.subset is not None else TRANS_SUBSETS[self.trans]


class SweepRecord(BaseModel):
    """Mean and spread of the per-trial PSNR at one SNR point."""

    model_config = ConfigDict(frozen=True)

    strategy: int = Field(ge=0)
    train_x: int = Field(ge=1)
    trans_y: int = Field(ge=1)
    channel: ChannelKind
    snr_db: float
    mean_psnr_db: float
    std_psnr_db: float = Field(ge=0)
    trials: int = Field(ge=1)

    @property
    def saturated(self) -> bool:
        return math.isinf(self.mean_psnr_db)

    @property
    def sort_key(self) -> tuple[int, int, int, str, float]:
        return (self.strategy, self.train_x, self.trans_y, str(self.channel), self.snr_db)


def check_compatible(net: SafeNetwork, expected: SafeConfig | None, dataset: ImageDataset) -> None:
    """Reject a checkpoint whose network does not fit the config or the images.

    Raises:
        CheckpointError: If ``expected`` differs from the checkpoint's config.
        ConfigError: If the images are not the network's input size.
    """
    if expected is not None and expected != net.config:
        raise CheckpointError(
            "checkpoint config does not match: "
            f"checkpoint has {net.config.model_dump()}, expected {expected.model_dump()}"
        )
    if dataset.image_shape != net.config.image_shape:
        raise ConfigError(
            f"images are {dataset.image_shape}, checkpoint expects {net.config.image_shape}"
        )


def _trial_psnr(
    net: SafeNetwork,
    dataset: ImageDataset,
    spec: ChannelSpec,
    subset: tuple[int, ...],
    level: int,
    config: EvalConfig,
    trial: int,
) -> float:
    streams = {i: make_rng(config.seed, "trial", trial, i) for i in subset}
    scores: list[np.ndarray] = []
    with no_grad():
        for start in range(0, len(dataset), config.batch_size):
            images = dataset.batch(slice(start, start + config.batch_size))
            out = forward_pipeline(net, images, spec, subset, streams, level, clamp_output=True)
            scores.append(psnr_per_image(images, out.reconstruction))
    return float(np.mean(np.concatenate(scores)))


def _summarize(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if np.isinf(arr).any():
        return math.inf, 0.0
    return float(arr.mean()), float(arr.std())


def evaluate(net: SafeNetwork, dataset: ImageDataset, config: EvalConfig) -> list[SweepRecord]:
    """Mean and standard deviation of PSNR over ``config.trials`` channel draws per SNR.

    Each trial averages per-image PSNR over the whole dataset; reconstructions
    are clamped to ``[0, 1]`` first.

    Raises:
        ConfigError: If the subset does not fit the network, the images do
            not match its input size, or there are none.
    """
    check_compatible(net, None, dataset)
    if not len(dataset):
        raise ConfigError("evaluation set is empty")
    subset = normalize_subset(net.config, config.branches())
    level = resolve_level(subset, config.level)
    train_x = config.train_x or level
    workers = resolve_workers(config.workers)
    logger.info(
        "evaluation.sweep.evaluate_started",
        channel=config.channel,
        subset=list(subset),
        level=level,
        snrs=list(config.snrs),
        trials=config.trials,
        workers=workers,
    )

    jobs = [(snr, t) for snr in config.snrs for t in range(config.trials)]

    def run(job: tuple[float, int]) -> float:
        snr, trial = job
        spec = ChannelSpec(kind=config.channel, snr_db=snr, noiseless=config.noiseless)
        value = _trial_psnr(net, dataset, spec, subset, level, config, trial)
        logger.debug("evaluation.sweep.trial_completed", snr_db=snr, trial=trial, psnr_db=value)
        return value

    results = parallel_map(run, jobs, workers)
    records: list[SweepRecord] = []
    for k, snr in enumerate(config.snrs):
        mean, std = _summarize(results[k * config.trials : (k + 1) * config.trials])
        records.append(
            SweepRecord(
                strategy=config.strategy,
                train_x=train_x,
                trans_y=len(subset),
                channel=config.channel,
                snr_db=snr,
                mean_psnr_db=mean,
                std_psnr_db=std,
                trials=config.trials,
            )
        )
        logger.info(
            "evaluation.sweep.point_completed",
            snr_db=snr,
            train_x=train_x,
            trans_y=len(subset),
            mean_psnr_db=mean,
            std_psnr_db=std,
        )
    return records


MATRIX: tuple[tuple[int, int], ...] = ((1, 1), (2, 1), (2, 2))


def sweep_matrix(
    net: SafeNetwork,
    dataset: ImageDataset,
    base: EvalConfig,
    channels: Sequence[ChannelKind] = (ChannelKind.AWGN, ChannelKind.RAYLEIGH),
) -> list[SweepRecord]:
    """Evaluate Train1Trans1, Train2Trans1 and Train2Trans2 for every channel family.

    On a network without second-level groups the level-2 cells fall back to
    the level-1 path.
    """
    records: list[SweepRecord] = []
    for channel in channels:
        for train_x, trans_y in MATRIX:
            cell = base.model_copy(
                update={
                    "channel": channel,
                    "trans": trans_y,
                    "subset": None,
                    "level": train_x,
                    "train_x": train_x,
                }
            )
            records.extend(evaluate(net, dataset, cell))
    record_observations(records)
    return records


def record_observations(records: Sequence[SweepRecord]) -> None:
    """Log how single-branch quality changes between decoder levels.

    Informational only: a second-level trunk trained for two branches may
    reconstruct branch 0 alone worse than the Stage A path.
    """
    by_key = {(r.channel, r.snr_db, r.train_x, r.trans_y): r for r in records}
    for (channel, snr, train_x, trans_y), level2 in by_key.items():
        if (train_x, trans_y) != (2, 1):
            continue
        level1 = by_key.get((channel, snr, 1, 1))
        if level1 is None:
            continue
        logger.info(
            "evaluation.sweep.observation_recorded",
            observation="train2_trans1_vs_train1_trans1",
            strategy=level2.strategy,
            channel=channel,
            snr_db=snr,
            train2_trans1_db=level2.mean_psnr_db,
            train1_trans1_db=level1.mean_psnr_db,
            below=level2.mean_psnr_db < level1.mean_psnr_db,
        )
