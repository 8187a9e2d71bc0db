"""Tests for stage construction and the two-stage training strategies."""

from pathlib import Path

import numpy as np
import pytest

from app.channel.schemas import ChannelSpec
from app.core.config import load_config_file
from app.core.exceptions import ConfigError, TrainingError
from app.data.dataset import DatasetSplit
from app.safenet.checkpoint import encode_checkpoint, load_checkpoint
from app.safenet.network import (
    SC_DECODER,
    SC_DECODER_2,
    SM_ENCODER,
    SM_ENCODER_2,
    SafeNetwork,
    build,
    sfe_encoder,
    sfr_decoder,
)
from app.safenet.pipeline import forward_pipeline
from app.safenet.schemas import SafeConfig
from app.tensor.rng import make_rng
from app.trainer.optimizer import resolve_lr
from app.trainer.schemas import StopReason, TrainingFileConfig, TrainPlan
from app.trainer.strategies import (
    BOTH_BRANCHES,
    SINGLE_BRANCH,
    SINGLE_BRANCH_SECOND_LEVEL,
    fit_stage,
    prepare_stage_b2,
    prepare_stage_b3,
    run_strategy,
    run_strategy1,
    stage_a_spec,
    validation_loss,
)


def _plan(strategy: int, **overrides: object) -> TrainPlan:
    values: dict[str, object] = {
        "strategy": strategy,
        "batch_size": 4,
        "patience": 2,
        "max_epochs": 3,
        "seed": 5,
        "stage_a_lr": 1e-3,
        "lr_high": 1e-3,
        "lr_low": 1e-4,
    }
    values.update(overrides)
    return TrainPlan.model_validate(values)


def _train1_trans1(net: SafeNetwork, data: DatasetSplit) -> np.ndarray:
    out = forward_pipeline(
        net,
        data.test.batch(),
        ChannelSpec(snr_db=10.0),
        (0,),
        {0: make_rng(99, "held-out", 0)},
        level=1,
    )
    return out.reconstruction.data


def _group_state(net: SafeNetwork, *names: str) -> dict[str, np.ndarray]:
    return {p.name: p.data.copy() for name in names for p in net.group(name).parameters()}


def _assert_same(a: dict[str, np.ndarray], b: dict[str, np.ndarray]) -> None:
    assert a.keys() == b.keys()
    for name in a:
        np.testing.assert_array_equal(a[name], b[name], err_msg=name)


def test_stage_b2_adds_a_transferred_second_combiner(train_config: SafeConfig) -> None:
    """Test Strategy 2 clones sc_decoder and trains it at the low rate."""
    net = build(train_config)
    plan = _plan(2)

    spec = prepare_stage_b2(net, plan)

    for src, dst in zip(
        net.group(SC_DECODER).parameters(), net.group(SC_DECODER_2).parameters(), strict=True
    ):
        np.testing.assert_array_equal(dst.data, src.data)
    assert spec.train_groups == (sfe_encoder(1), sfr_decoder(1), SC_DECODER_2)
    assert spec.lr_map[SC_DECODER_2] == plan.lr_low
    assert spec.lr_map[sfe_encoder(1)] == plan.lr_high
    assert spec.objective == BOTH_BRANCHES


def test_config_file_rates_reach_stage_specs(tmp_path: Path, train_config: SafeConfig) -> None:
    """Test lr_map from a training config file overrides the stage rates it matches."""
    path = tmp_path / "train.conf"
    path.write_text("lr_map = sc_decoder_2:1e-6, sfe_encoder.*:3e-4\nlr_high = 1e-3\n")
    plan = load_config_file(path, TrainingFileConfig).plan(2)

    stage_a = stage_a_spec(plan)
    stage_b = prepare_stage_b2(build(train_config), plan)

    assert resolve_lr(sfe_encoder(0), stage_a.lr_map) == 3e-4
    assert resolve_lr(SM_ENCODER, stage_a.lr_map) == plan.stage_a_lr
    assert resolve_lr(SC_DECODER_2, stage_b.lr_map) == 1e-6
    assert resolve_lr(sfe_encoder(1), stage_b.lr_map) == 3e-4
    assert resolve_lr(sfr_decoder(1), stage_b.lr_map) == 1e-3


def test_config_file_rejects_non_positive_rate(tmp_path: Path) -> None:
    """Test a zero rate in lr_map is a config error."""
    path = tmp_path / "train.conf"
    path.write_text("lr_map = sc_decoder:0\n")

    with pytest.raises(ConfigError, match="learning rates must be positive"):
        load_config_file(path, TrainingFileConfig)


def test_plan_rates_take_precedence(train_config: SafeConfig) -> None:
    """Test lr_map entries override the strategy defaults for matching groups."""
    plan = _plan(3, lr_map={"sm_encoder_2": 0.5})

    spec = prepare_stage_b3(build(train_config), plan)

    assert next(iter(spec.lr_map)) == SM_ENCODER_2
    assert spec.lr_map[SM_ENCODER_2] == 0.5
    assert spec.lr_map[SC_DECODER_2] == plan.lr_low


def test_refinement_alternates_objectives(train_config: SafeConfig) -> None:
    """Test even epochs train branch 0 through the second level when refining."""
    spec = prepare_stage_b3(build(train_config), _plan(3, iterative_refinement=True))

    assert spec.objective_for(1) == BOTH_BRANCHES
    assert spec.objective_for(2) == SINGLE_BRANCH_SECOND_LEVEL
    assert stage_a_spec(_plan(3)).objective_for(2) == SINGLE_BRANCH


def test_validation_loss_is_repeatable(train_config: SafeConfig, train_data: DatasetSplit) -> None:
    """Test equal parameters give equal validation losses."""
    net = build(train_config)
    plan = _plan(1)

    first = validation_loss(net, train_data.val, plan, BOTH_BRANCHES)

    assert first == validation_loss(net, train_data.val, plan, BOTH_BRANCHES)
    assert first > 0


def test_fit_stage_leaves_frozen_groups_untouched(
    train_config: SafeConfig, train_data: DatasetSplit
) -> None:
    """Test Stage A trains its groups and never moves branch 1."""
    net = build(train_config)
    branch_one = _group_state(net, sfe_encoder(1), sfr_decoder(1))
    trunk = _group_state(net, SM_ENCODER)

    plan = _plan(1, max_epochs=2, patience=5)

    report = fit_stage(net, train_data, plan, stage_a_spec(plan))

    _assert_same(_group_state(net, sfe_encoder(1), sfr_decoder(1)), branch_one)
    assert report.stop_epoch == 2
    assert report.stop_reason is StopReason.MAX_EPOCHS
    assert report.baseline_val_loss is not None
    assert report.best_val_loss <= report.baseline_val_loss
    if report.best_epoch:
        assert any(
            not np.array_equal(trunk[k], v) for k, v in _group_state(net, SM_ENCODER).items()
        )


def test_fit_stage_rejects_empty_training_set(
    train_config: SafeConfig, train_data: DatasetSplit
) -> None:
    """Test an empty training split is refused."""
    empty = DatasetSplit(train_data.train.subset([], "train"), train_data.val, train_data.test)

    with pytest.raises(TrainingError, match="training set is empty"):
        fit_stage(build(train_config), empty, _plan(1), stage_a_spec(_plan(1)))


def test_strategy_entry_checks_plan(train_config: SafeConfig, train_data: DatasetSplit) -> None:
    """Test a Strategy 1 entry point refuses a Strategy 2 plan."""
    with pytest.raises(TrainingError, match="strategy 2, not 1"):
        run_strategy1(train_data, train_config, _plan(2))


def test_strategies_need_two_branches(train_data: DatasetSplit) -> None:
    """Test a single-branch network cannot be trained in two stages."""
    config = SafeConfig(num_branches=1, branch_dims=(4,), base_width=4, height=8, width=8)

    with pytest.raises(ConfigError, match="at least 2 branches"):
        run_strategy(train_data, config, _plan(1))


def test_strategies_check_image_size(train_data: DatasetSplit) -> None:
    """Test images must match the configured size."""
    config = SafeConfig(branch_dims=(2, 2), base_width=4, height=16, width=16)

    with pytest.raises(ConfigError, match="network expects"):
        run_strategy(train_data, config, _plan(1))


@pytest.mark.slow
def test_strategy1_keeps_stage_a_and_never_loses(
    train_config: SafeConfig, train_data: DatasetSplit, tmp_path: Path
) -> None:
    """Test Stage B starts at the Stage A loss, never ends above it, and leaves Stage A frozen."""
    net, (stage_a, stage_b) = run_strategy1(train_data, train_config, _plan(1), tmp_path)
    saved_a = load_checkpoint(tmp_path / "stage_a.ckpt").net
    stage_a_groups = (SM_ENCODER, sfe_encoder(0), sfr_decoder(0), SC_DECODER)

    assert stage_b.baseline_val_loss == pytest.approx(stage_a.final_val_loss, rel=1e-6)
    assert stage_b.best_val_loss <= stage_a.final_val_loss * (1 + 1e-6)
    _assert_same(_group_state(net, *stage_a_groups), _group_state(saved_a, *stage_a_groups))
    assert not net.has_group(SC_DECODER_2)
    assert stage_a.checkpoint_path == str(tmp_path / "stage_a.ckpt")
    assert (tmp_path / "stage_b.ckpt").exists()
    assert (tmp_path / "train_report.tsv").read_text().count("\nstage_b\t") == stage_b.stop_epoch


@pytest.mark.slow
def test_strategy2_preserves_train1_trans1(
    train_config: SafeConfig, train_data: DatasetSplit, tmp_path: Path
) -> None:
    """Test single-branch reconstructions are bit-identical before and after Stage B."""
    net, (stage_a, stage_b) = run_strategy(train_data, train_config, _plan(2), tmp_path)
    saved_a = load_checkpoint(tmp_path / "stage_a.ckpt")

    np.testing.assert_array_equal(
        _train1_trans1(net, train_data), _train1_trans1(saved_a.net, train_data)
    )
    assert net.has_group(SC_DECODER_2)
    assert not net.has_group(SM_ENCODER_2)
    assert stage_b.baseline_val_loss == pytest.approx(stage_a.final_val_loss, rel=1e-6)
    assert saved_a.metadata["strategy"] == 2
    assert saved_a.metadata["stage"] == "stage_a"


@pytest.mark.slow
def test_strategy3_freezes_branch_zero_only(
    train_config: SafeConfig, train_data: DatasetSplit, tmp_path: Path
) -> None:
    """Test Strategy 3 trains clones of the trunk and combiner and keeps branch 0 fixed."""
    plan = _plan(3, iterative_refinement=True, max_epochs=2, patience=5)

    net, (stage_a, stage_b) = run_strategy(train_data, train_config, plan, tmp_path)
    saved_a = load_checkpoint(tmp_path / "stage_a.ckpt").net
    kept = (SM_ENCODER, sfe_encoder(0), sfr_decoder(0), SC_DECODER)

    _assert_same(_group_state(net, *kept), _group_state(saved_a, *kept))
    assert net.has_group(SM_ENCODER_2)
    assert net.has_group(SC_DECODER_2)
    assert stage_b.baseline_val_loss == pytest.approx(stage_a.final_val_loss, rel=1e-6)
    assert stage_b.stop_epoch == 2


@pytest.mark.slow
def test_training_is_deterministic(train_config: SafeConfig, train_data: DatasetSplit) -> None:
    """Test equal seeds, plans and data give byte-identical networks."""
    plan = _plan(2, max_epochs=2)

    first, _ = run_strategy(train_data, train_config, plan)
    second, _ = run_strategy(train_data, train_config, plan)

    assert encode_checkpoint(first) == encode_checkpoint(second)
