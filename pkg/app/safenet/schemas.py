"""Network configuration schema."""

from typing import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

DOWNSAMPLE_FACTOR = 8


class SafeConfig(BaseModel):
    """Shape of a multi-branch codec.

    The shared trunk widens the image to ``C = 2 * base_width`` channels,
    which are split contiguously into ``C_i = C * d_i / sum(d)`` channels per
    branch. Each branch compresses its block to ``d_i`` channels at
    ``(H / 8, W / 8)``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_branches: int = Field(default=2, ge=1, description="Number of sub-semantics L")
    branch_dims: tuple[int, ...] = Field(default=(8, 8), description="Sub-semantic channels d_i")
    base_width: int = Field(default=16, ge=1, description="First-layer feature channels F")
    input_channels: int = Field(default=3, ge=1)
    height: int = Field(default=32, gt=0)
    width: int = Field(default=32, gt=0)
    common_depth: int = 3
    branch_depth: int = 4

    @model_validator(mode="after")
    def _check_geometry(self) -> Self:
        if len(self.branch_dims) != self.num_branches:
            raise ValueError(
                f"branch_dims has {len(self.branch_dims)} entries but num_branches is "
                f"{self.num_branches}"
            )
        if any(d < 1 for d in self.branch_dims):
            raise ValueError(f"every branch dim must be >= 1, got {list(self.branch_dims)}")
        if self.height % DOWNSAMPLE_FACTOR or self.width % DOWNSAMPLE_FACTOR:
            raise ValueError(
                f"height and width must be divisible by {DOWNSAMPLE_FACTOR}, "
                f"got {self.height}x{self.width}"
            )
        if self.common_depth != 3 or self.branch_depth != 4:
            raise ValueError(
                "only the 3-layer trunk / 4-layer branch plan is supported, got "
                f"common_depth={self.common_depth}, branch_depth={self.branch_depth}"
            )
        total = sum(self.branch_dims)
        for i, d in enumerate(self.branch_dims):
            if (self.trunk_channels * d) % total:
                raise ValueError(
                    f"trunk channels {self.trunk_channels} cannot be split in proportion to "
                    f"branch_dims {list(self.branch_dims)} (branch {i})"
                )
        return self

    @property
    def trunk_channels(self) -> int:
        """Channel count C of the shared trunk output."""
        return 2 * self.base_width

    @property
    def split_channels(self) -> tuple[int, ...]:
        """Per-branch block widths C_i, summing to C."""
        total = sum(self.branch_dims)
        return tuple(self.trunk_channels * d // total for d in self.branch_dims)

    @property
    def split_bounds(self) -> tuple[tuple[int, int], ...]:
        """Contiguous ``[start, stop)`` channel ranges of each branch block."""
        bounds: list[tuple[int, int]] = []
        start = 0
        for width in self.split_channels:
            bounds.append((start, start + width))
            start += width
        return tuple(bounds)

    @property
    def latent_hw(self) -> tuple[int, int]:
        return self.height // DOWNSAMPLE_FACTOR, self.width // DOWNSAMPLE_FACTOR

    def payload_shape(self, index: int) -> tuple[int, int, int]:
        """Per-sample sub-semantic shape ``(d_i, H/8, W/8)``."""
        h, w = self.latent_hw
        return self.branch_dims[index], h, w

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return self.input_channels, self.height, self.width
