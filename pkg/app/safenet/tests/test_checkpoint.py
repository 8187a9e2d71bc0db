"""Unit tests for the binary checkpoint container."""

import struct
from pathlib import Path

import numpy as np
import pytest

from app.core.exceptions import CheckpointError
from app.safenet.checkpoint import (
    MAGIC,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from app.safenet.network import (
    SC_DECODER,
    SC_DECODER_2,
    SM_ENCODER,
    SM_ENCODER_2,
    build,
    clone_group,
)
from app.safenet.schemas import SafeConfig


def test_save_load_round_trip_is_byte_exact(tmp_path: Path, tiny_config: SafeConfig) -> None:
    """Test saving a loaded checkpoint reproduces the original file."""
    net = build(tiny_config, seed=5)
    path = save_checkpoint(net, tmp_path / "a" / "net.ckpt", {"strategy": 2, "stage": "a"})

    loaded = load_checkpoint(path)
    again = save_checkpoint(loaded.net, tmp_path / "b.ckpt", loaded.metadata)

    assert path.read_bytes() == again.read_bytes()
    assert loaded.metadata == {"stage": "a", "strategy": 2}
    assert loaded.net.config == tiny_config
    for name, p in net.named_parameters():
        np.testing.assert_array_equal(dict(loaded.net.named_parameters())[name].data, p.data)


def test_file_starts_with_magic_and_version(tiny_config: SafeConfig) -> None:
    """Test the container header layout."""
    data = encode_checkpoint(build(tiny_config))

    assert data[:8] == MAGIC
    assert struct.unpack("<I", data[8:12]) == (1,)


def test_cloned_groups_and_trainable_flags_survive(tiny_config: SafeConfig) -> None:
    """Test second-level groups and frozen flags are restored."""
    net = build(tiny_config, seed=2)
    clone_group(net, SM_ENCODER, SM_ENCODER_2)
    clone_group(net, SC_DECODER, SC_DECODER_2)
    for p in net.group(SM_ENCODER).parameters():
        p.trainable = False

    loaded = decode_checkpoint(encode_checkpoint(net)).net

    assert list(loaded.groups) == list(net.groups)
    assert all(not p.trainable for p in loaded.group(SM_ENCODER).parameters())
    assert all(p.trainable for p in loaded.group(SM_ENCODER_2).parameters())


def test_same_network_encodes_identically(tiny_config: SafeConfig) -> None:
    """Test encoding is deterministic."""
    assert encode_checkpoint(build(tiny_config, seed=1)) == encode_checkpoint(
        build(tiny_config, seed=1)
    )


def test_bad_magic_is_rejected() -> None:
    """Test a non-checkpoint file raises CheckpointError."""
    with pytest.raises(CheckpointError, match="bad magic"):
        decode_checkpoint(b"P6\n2 2\n255\n" + bytes(12))


def test_truncated_file_is_rejected(tiny_config: SafeConfig) -> None:
    """Test a cut-off payload reports the offset where data ran out."""
    data = encode_checkpoint(build(tiny_config))

    with pytest.raises(CheckpointError, match="truncated checkpoint"):
        decode_checkpoint(data[:-3])


def test_trailing_bytes_are_rejected(tiny_config: SafeConfig) -> None:
    """Test extra bytes after the last parameter raise CheckpointError."""
    data = encode_checkpoint(build(tiny_config))

    with pytest.raises(CheckpointError, match="trailing"):
        decode_checkpoint(data + b"\x00")


def test_header_config_mismatch_is_rejected(tiny_config: SafeConfig) -> None:
    """Test parameters that do not fit the header's config are rejected."""
    small = encode_checkpoint(build(tiny_config))
    wider = encode_checkpoint(build(tiny_config.model_copy(update={"base_width": 8})))
    small_header_len = struct.unpack("<I", small[12:16])[0]
    wider_header_len = struct.unpack("<I", wider[12:16])[0]
    # wider header, small parameters
    spliced = wider[: 16 + wider_header_len] + small[16 + small_header_len :]

    with pytest.raises(CheckpointError, match="parameter 0"):
        decode_checkpoint(spliced)


def test_unreadable_path_is_rejected(tmp_path: Path) -> None:
    """Test a missing file raises CheckpointError."""
    with pytest.raises(CheckpointError, match="cannot read"):
        load_checkpoint(tmp_path / "missing.ckpt")
