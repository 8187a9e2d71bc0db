"""Training plans, per-epoch records and stage reports."""

from enum import StrEnum
from typing import Literal, Self

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from app.channel.schemas import ChannelKind, ChannelSpec
from app.data.dataset import DEFAULT_FRACTIONS
from app.safenet.schemas import SafeConfig
from app.shared.schemas import IntList, RateMap

StrategyId = Literal[1, 2, 3]


class TrainPlan(BaseModel):
    """How one strategy is trained.

    ``lr_map`` entries are checked before the strategy's own rates, so they
    override ``stage_a_lr``, ``lr_high`` and ``lr_low`` for matching groups.
    Patterns are ``fnmatch`` globs over group names, e.g. ``sfe_encoder.*``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    strategy: StrategyId = 2
    lr_map: dict[str, float] = Field(default_factory=dict)
    stage_a_lr: float = Field(default=1e-4, gt=0)
    lr_high: float = Field(default=1e-4, gt=0)
    lr_low: float = Field(default=1e-5, gt=0)
    batch_size: int = Field(default=64, ge=1)
    patience: int = Field(default=20, ge=1)
    max_epochs: int = Field(default=200, ge=1)
    seed: int = Field(default=0, ge=0)
    train_snr_db: float = 10.0
    channel: ChannelKind = ChannelKind.AWGN
    iterative_refinement: bool = False

    @field_validator("lr_map")
    @classmethod
    def _positive_rates(cls, value: dict[str, float]) -> dict[str, float]:
        bad = {k: v for k, v in value.items() if not v > 0}
        if bad:
            raise ValueError(f"learning rates must be positive, got {bad}")
        return value

    def channel_spec(self) -> ChannelSpec:
        return ChannelSpec(kind=self.channel, snr_db=self.train_snr_db)


class StopReason(StrEnum):
    EARLY_STOP = "early_stop"
    MAX_EPOCHS = "max_epochs"


class EpochRecord(BaseModel):
    epoch: int = Field(ge=1)
    train_loss: float
    val_loss: float


class TrainReport(BaseModel):
    """Outcome of one training stage.

    ``baseline_val_loss`` is the validation loss before the first update
    (Stage B: with the new branch silenced). ``best_val_loss`` may equal the
    baseline when no epoch improved on it, in which case the stage restores
    its starting parameters.
    """

    strategy: StrategyId
    stage: str
    epochs: list[EpochRecord] = Field(default_factory=list)
    stop_epoch: int = Field(ge=0)
    stop_reason: StopReason
    baseline_val_loss: float | None = None
    best_val_loss: float
    best_epoch: int = Field(ge=0, description="0 when the baseline was never beaten")
    final_val_loss: float
    wall_seconds: float = Field(ge=0)
    checkpoint_path: str | None = None

    @model_validator(mode="after")
    def _series_matches_stop_epoch(self) -> Self:
        if len(self.epochs) != self.stop_epoch:
            raise ValueError(
                f"{len(self.epochs)} epoch records for stop epoch {self.stop_epoch}"
            )
        return self


class TrainingFileConfig(BaseModel):
    """Keys accepted by a training config file (every key has a default).

    Example file::

        # desk-scale Strategy 2
        base_width = 16
        branch_dims = 8,8
        max_epochs = 200
        lr_low = 1e-5
        lr_map = sc_decoder_2:1e-6, sfe_encoder.1:3e-4
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_branches: int = 2
    branch_dims: IntList = (8, 8)
    base_width: int = 16
    height: int = 32
    width: int = 32
    stage_a_lr: float = 1e-4
    lr_high: float = 1e-4
    lr_low: float = 1e-5
    batch_size: int = 64
    patience: int = 20
    max_epochs: int = 200
    seed: int = 0
    train_snr_db: float = 10.0
    channel: ChannelKind = ChannelKind.AWGN
    lr_map: RateMap = Field(default_factory=dict)
    iterative_refinement: bool = False
    split_seed: int = 0
    train_fraction: float = DEFAULT_FRACTIONS[0]
    val_fraction: float = DEFAULT_FRACTIONS[1]
    test_fraction: float = DEFAULT_FRACTIONS[2]

    @model_validator(mode="after")
    def _check_derived(self) -> Self:
        try:
            self.safe_config()
            self.plan(1)
        except ValidationError as exc:
            raise ValueError(str(exc)) from exc
        return self

    @property
    def fractions(self) -> tuple[float, float, float]:
        return self.train_fraction, self.val_fraction, self.test_fraction

    def safe_config(self) -> SafeConfig:
        return SafeConfig(
            num_branches=self.num_branches,
            branch_dims=self.branch_dims,
            base_width=self.base_width,
            height=self.height,
            width=self.width,
        )

    def plan(self, strategy: StrategyId) -> TrainPlan:
        return TrainPlan(
            strategy=strategy,
            stage_a_lr=self.stage_a_lr,
            lr_high=self.lr_high,
            lr_low=self.lr_low,
            batch_size=self.batch_size,
            patience=self.patience,
            max_epochs=self.max_epochs,
            seed=self.seed,
            train_snr_db=self.train_snr_db,
            channel=self.channel,
            iterative_refinement=self.iterative_refinement,
            lr_map=dict(self.lr_map),
        )

