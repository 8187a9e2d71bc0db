"""Two-stage training strategies for the two-branch codec.

Every strategy first trains branch 0 alone (Stage A): the trunk, branch 0's
encoder and recovery decoder and the combiner, with branch 1 missing and
therefore zero-filled. Stage B then adds branch 1:

    strategy 1  freeze everything from Stage A, train branch 1's coder pair
    strategy 2  as 1, plus a second combiner (sc_decoder_2) initialized from
                sc_decoder and trained at the low rate
    strategy 3  freeze branch 0's coder pair, clone trunk and combiner into
                sm_encoder_2/sc_decoder_2 (low rate), train branch 1 (high rate)

Stage B starts from a baseline in which branch 1's recovery decoder emits
zeros, which reproduces the Stage A network exactly, and keeps that baseline
as its best snapshot until an epoch beats it. The best snapshot of each stage
is restored before its checkpoint is written.
"""

import math
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from app.core.exceptions import ConfigError, TrainingError
from app.core.logging import get_logger
from app.data.dataset import DatasetSplit, ImageDataset
from app.safenet.checkpoint import save_checkpoint
from app.safenet.network import (
    SC_DECODER,
    SC_DECODER_2,
    SM_ENCODER,
    SM_ENCODER_2,
    SafeNetwork,
    add_group,
    build,
    sfe_encoder,
    sfr_decoder,
)
from app.safenet.pipeline import forward_pipeline
from app.safenet.schemas import SafeConfig
from app.tensor import functional as F
from app.tensor.rng import make_rng
from app.tensor.tensor import no_grad
from app.trainer.groups import train_only, trainable_groups, transfer_group, zero_final_layer
from app.trainer.optimizer import AdamState, StopDecision, adam_step, early_stop_check
from app.trainer.report import write_report
from app.trainer.schemas import EpochRecord, StopReason, StrategyId, TrainPlan, TrainReport

logger = get_logger(__name__)

STAGE_A = "stage_a"
STAGE_B = "stage_b"
BASE_BRANCH = 0
NEW_BRANCH = 1
REPORT_FILE = "train_report.tsv"

type State = dict[str, np.ndarray]


@dataclass(frozen=True)
class Objective:
    """Which branches are transmitted and which decoder level reconstructs them."""

    subset: tuple[int, ...]
    level: int


SINGLE_BRANCH = Objective((BASE_BRANCH,), level=1)
BOTH_BRANCHES = Objective((BASE_BRANCH, NEW_BRANCH), level=2)
SINGLE_BRANCH_SECOND_LEVEL = Objective((BASE_BRANCH,), level=2)


@dataclass(frozen=True)
class StageSpec:
    """One training stage.

    Attributes:
        name: Stage name; also keys the stage's random streams.
        train_groups: Groups left trainable; all others are frozen.
        lr_map: Group pattern to learning rate, first match wins.
        objective: Training objective, and always the validation objective.
        alternate: When set, even epochs train on this objective instead.
    """

    name: str
    train_groups: tuple[str, ...]
    lr_map: Mapping[str, float]
    objective: Objective
    alternate: Objective | None = None

    def objective_for(self, epoch: int) -> Objective:
        if self.alternate is not None and epoch % 2 == 0:
            return self.alternate
        return self.objective


def _merged_rates(plan: TrainPlan, defaults: Mapping[str, float]) -> dict[str, float]:
    rates = dict(plan.lr_map)
    for pattern, lr in defaults.items():
        rates.setdefault(pattern, lr)
    return rates


def _batches(count: int, batch_size: int, order: np.ndarray | None = None) -> list[np.ndarray]:
    indices = np.arange(count) if order is None else order
    return [indices[start : start + batch_size] for start in range(0, count, batch_size)]


def validation_loss(
    net: SafeNetwork, dataset: ImageDataset, plan: TrainPlan, objective: Objective
) -> float:
    """Mean squared error over ``dataset`` with fixed per-branch noise streams.

    Branch ``i`` always draws from ``(seed, "validation", i)``, so two calls
    on equal parameters return equal losses and a branch's noise does not
    depend on which other branches are sent.

    Raises:
        TrainingError: If the dataset is empty.
    """
    if not len(dataset):
        raise TrainingError("validation set is empty")
    streams = {i: make_rng(plan.seed, "validation", i) for i in objective.subset}
    spec = plan.channel_spec()
    total = 0.0
    with no_grad():
        for idx in _batches(len(dataset), plan.batch_size):
            images = dataset.batch(idx)
            out = forward_pipeline(net, images, spec, objective.subset, streams, objective.level)
            total += F.mse_loss(out.reconstruction, images).item() * len(idx)
    return total / len(dataset)


def _train_epoch(
    net: SafeNetwork,
    dataset: ImageDataset,
    plan: TrainPlan,
    stage: StageSpec,
    objective: Objective,
    order_rng: np.random.Generator,
    noise: Mapping[int, np.random.Generator],
    adam: AdamState,
) -> float:
    params = [p for p in net.parameters() if p.trainable]
    spec = plan.channel_spec()
    total = 0.0
    order = order_rng.permutation(len(dataset))
    for idx in _batches(len(dataset), plan.batch_size, order):
        images = dataset.batch(idx)
        out = forward_pipeline(net, images, spec, objective.subset, noise, objective.level)
        loss = F.mse_loss(out.reconstruction, images)
        loss.backward()
        adam_step(params, adam, stage.lr_map)
        total += loss.item() * len(idx)
    return total / len(dataset)


def fit_stage(
    net: SafeNetwork,
    data: DatasetSplit,
    plan: TrainPlan,
    stage: StageSpec,
    baseline_state: State | None = None,
) -> TrainReport:
    """Train one stage with early stopping and restore its best snapshot.

    Args:
        net: Network to train in place.
        data: Train and validation sets (test is unused).
        plan: Batch size, patience, epochs, seed and channel.
        stage: Groups, rates and objective of the stage.
        baseline_state: Parameters whose validation loss is the bar the
            first epoch has to beat; the current parameters when None.

    Returns:
        The stage report (without a checkpoint path).

    Raises:
        TrainingError: On an empty training set or a missing learning rate.
    """
    if not len(data.train):
        raise TrainingError("training set is empty")
    started = time.perf_counter()
    train_only(net, stage.train_groups)

    if baseline_state is None:
        baseline_state = net.state()
        baseline = validation_loss(net, data.val, plan, stage.objective)
    else:
        start_state = net.state()
        net.load_state(baseline_state)
        baseline = validation_loss(net, data.val, plan, stage.objective)
        net.load_state(start_state)
    best_loss, best_epoch, best_state = baseline, 0, baseline_state
    logger.info(
        "training.stage.started",
        stage=stage.name,
        strategy=plan.strategy,
        train_groups=trainable_groups(net),
        learning_rates=dict(stage.lr_map),
        baseline_val_loss=baseline,
    )

    order_rng = make_rng(plan.seed, stage.name, "shuffle")
    noise = {i: make_rng(plan.seed, stage.name, "noise", i) for i in range(net.config.num_branches)}
    adam = AdamState()
    history: list[float] = []
    epochs: list[EpochRecord] = []
    stop_reason = StopReason.MAX_EPOCHS

    for epoch in range(1, plan.max_epochs + 1):
        objective = stage.objective_for(epoch)
        train_loss = _train_epoch(net, data.train, plan, stage, objective, order_rng, noise, adam)
        val_loss = validation_loss(net, data.val, plan, stage.objective)
        if not math.isfinite(val_loss):
            raise TrainingError(f"{stage.name} epoch {epoch}: validation loss is {val_loss}")
        history.append(val_loss)
        epochs.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        if val_loss < best_loss:
            best_loss, best_epoch, best_state = val_loss, epoch, net.state()
        logger.info(
            "training.stage.epoch_completed",
            stage=stage.name,
            epoch=epoch,
            subset=list(objective.subset),
            train_loss=train_loss,
            val_loss=val_loss,
            best_epoch=best_epoch,
        )
        if early_stop_check(history, plan.patience) is StopDecision.STOP:
            stop_reason = StopReason.EARLY_STOP
            logger.info("training.stage.early_stopped", stage=stage.name, epoch=epoch)
            break

    net.load_state(best_state)
    final = validation_loss(net, data.val, plan, stage.objective)
    report = TrainReport(
        strategy=plan.strategy,
        stage=stage.name,
        epochs=epochs,
        stop_epoch=len(epochs),
        stop_reason=stop_reason,
        baseline_val_loss=baseline,
        best_val_loss=best_loss,
        best_epoch=best_epoch,
        final_val_loss=final,
        wall_seconds=time.perf_counter() - started,
    )
    logger.info(
        "training.stage.completed",
        stage=stage.name,
        stop_epoch=report.stop_epoch,
        stop_reason=report.stop_reason,
        best_epoch=best_epoch,
        best_val_loss=best_loss,
    )
    return report


def stage_a_spec(plan: TrainPlan) -> StageSpec:
    groups = (SM_ENCODER, sfe_encoder(BASE_BRANCH), sfr_decoder(BASE_BRANCH), SC_DECODER)
    return StageSpec(
        name=STAGE_A,
        train_groups=groups,
        lr_map=_merged_rates(plan, {"*": plan.stage_a_lr}),
        objective=SINGLE_BRANCH,
    )


def _new_branch_rates(plan: TrainPlan) -> dict[str, float]:
    return {sfe_encoder(NEW_BRANCH): plan.lr_high, sfr_decoder(NEW_BRANCH): plan.lr_high}


def prepare_stage_b1(_net: SafeNetwork, plan: TrainPlan) -> StageSpec:
    """Branch 1's coder pair only; the Stage A network is frozen."""
    return StageSpec(
        name=STAGE_B,
        train_groups=(sfe_encoder(NEW_BRANCH), sfr_decoder(NEW_BRANCH)),
        lr_map=_merged_rates(plan, _new_branch_rates(plan)),
        objective=BOTH_BRANCHES,
    )


def _second_level(net: SafeNetwork, plan: TrainPlan, dst: str, src: str) -> None:
    add_group(net, dst, seed=plan.seed)
    transfer_group(net, src, dst)


def prepare_stage_b2(net: SafeNetwork, plan: TrainPlan) -> StageSpec:
    """Branch 1 at the high rate plus a transferred second combiner at the low rate."""
    _second_level(net, plan, SC_DECODER_2, SC_DECODER)
    return StageSpec(
        name=STAGE_B,
        train_groups=(sfe_encoder(NEW_BRANCH), sfr_decoder(NEW_BRANCH), SC_DECODER_2),
        lr_map=_merged_rates(plan, {**_new_branch_rates(plan), SC_DECODER_2: plan.lr_low}),
        objective=BOTH_BRANCHES,
    )


def prepare_stage_b3(net: SafeNetwork, plan: TrainPlan) -> StageSpec:
    """Branch 1 at the high rate plus transferred trunk and combiner at the low rate.

    With ``iterative_refinement`` even epochs train branch 0 alone through
    the second-level trunk and combiner, correcting them for single-branch
    reception.
    """
    _second_level(net, plan, SM_ENCODER_2, SM_ENCODER)
    _second_level(net, plan, SC_DECODER_2, SC_DECODER)
    rates = {**_new_branch_rates(plan), SM_ENCODER_2: plan.lr_low, SC_DECODER_2: plan.lr_low}
    return StageSpec(
        name=STAGE_B,
        train_groups=(SM_ENCODER_2, sfe_encoder(NEW_BRANCH), sfr_decoder(NEW_BRANCH), SC_DECODER_2),
        lr_map=_merged_rates(plan, rates),
        objective=BOTH_BRANCHES,
        alternate=SINGLE_BRANCH_SECOND_LEVEL if plan.iterative_refinement else None,
    )


STAGE_B_PREPARERS: dict[int, Callable[[SafeNetwork, TrainPlan], StageSpec]] = {
    1: prepare_stage_b1,
    2: prepare_stage_b2,
    3: prepare_stage_b3,
}


def silenced_branch_state(net: SafeNetwork) -> State:
    """Parameters with branch 1's last recovery layer zeroed; ``net`` is left unchanged."""
    current = net.state()
    zero_final_layer(net, sfr_decoder(NEW_BRANCH))
    silenced = net.state()
    net.load_state(current)
    return silenced


def _check_inputs(data: DatasetSplit, config: SafeConfig) -> None:
    if config.num_branches < 2:
        raise ConfigError(
            f"two-stage strategies need at least 2 branches, got {config.num_branches}"
        )
    for name, part in zip(("train", "val"), data[:2], strict=True):
        if part.image_shape != config.image_shape:
            raise ConfigError(
                f"{name} images are {part.image_shape}, network expects {config.image_shape}"
            )


def run_strategy(
    data: DatasetSplit,
    config: SafeConfig,
    plan: TrainPlan,
    out_dir: Path | None = None,
    metadata: Mapping[str, Any] | None = None,
) -> tuple[SafeNetwork, list[TrainReport]]:
    """Build, train Stage A and Stage B of ``plan.strategy``, and save the artifacts.

    When ``out_dir`` is given it receives ``stage_a.ckpt``, ``stage_b.ckpt``
    and ``train_report.tsv``.

    Raises:
        ConfigError: If the data does not fit the network.
        TrainingError: On training failures.
    """
    _check_inputs(data, config)
    net = build(config, seed=plan.seed)
    logger.info("training.strategy.started", strategy=plan.strategy, train=len(data.train))

    reports: list[TrainReport] = []
    stage_a = fit_stage(net, data, plan, stage_a_spec(plan))
    reports.append(_save_stage(net, plan, stage_a, out_dir, metadata))

    baseline = silenced_branch_state(net)
    stage_b_spec = STAGE_B_PREPARERS[plan.strategy](net, plan)
    # second-level groups did not exist at the snapshot; their baseline is the transferred copy
    baseline = {**net.state(), **baseline}
    stage_b = fit_stage(net, data, plan, stage_b_spec, baseline_state=baseline)
    reports.append(_save_stage(net, plan, stage_b, out_dir, metadata))

    if out_dir is not None:
        write_report(reports, out_dir / REPORT_FILE)
    logger.info(
        "training.strategy.completed",
        strategy=plan.strategy,
        stage_a_val_loss=stage_a.final_val_loss,
        stage_b_val_loss=stage_b.final_val_loss,
    )
    return net, reports


def _save_stage(
    net: SafeNetwork,
    plan: TrainPlan,
    report: TrainReport,
    out_dir: Path | None,
    metadata: Mapping[str, Any] | None,
) -> TrainReport:
    if out_dir is None:
        return report
    path = out_dir / f"{report.stage}.ckpt"
    save_checkpoint(
        net, path, {**(metadata or {}), "strategy": plan.strategy, "stage": report.stage}
    )
    return report.model_copy(update={"checkpoint_path": str(path)})


def _expect(plan: TrainPlan, strategy: StrategyId) -> None:
    if plan.strategy != strategy:
        raise TrainingError(f"plan is for strategy {plan.strategy}, not {strategy}")


def run_strategy1(
    data: DatasetSplit, config: SafeConfig, plan: TrainPlan, out_dir: Path | None = None
) -> tuple[SafeNetwork, list[TrainReport]]:
    _expect(plan, 1)
    return run_strategy(data, config, plan, out_dir)


def run_strategy2(
    data: DatasetSplit, config: SafeConfig, plan: TrainPlan, out_dir: Path | None = None
) -> tuple[SafeNetwork, list[TrainReport]]:
    _expect(plan, 2)
    return run_strategy(data, config, plan, out_dir)


def run_strategy3(
    data: DatasetSplit, config: SafeConfig, plan: TrainPlan, out_dir: Path | None = None
) -> tuple[SafeNetwork, list[TrainReport]]:
    _expect(plan, 3)
    return run_strategy(data, config, plan, out_dir)
