import struct

import pytest
import torch

from sketchstyle import ConditionalModel, EncoderConfig, Generator, GeneratorConfig
from sketchstyle.checkpoint import MAGIC, load_checkpoint, read_manifest, save_checkpoint
from sketchstyle.errors import CheckpointError, CheckpointVersionError


def test_generator_round_trip_bitwise(tmp_path, desk_config):
    gen = Generator(desk_config, seed=42)
    path = save_checkpoint(gen, tmp_path / "gen.ckpt")
    loaded = load_checkpoint(path)
    assert isinstance(loaded, Generator)
    for (n1, t1), (n2, t2) in zip(gen.state_dict().items(),
                                  loaded.state_dict().items()):
        assert n1 == n2
        assert torch.equal(t1, t2), n1


def test_conditional_round_trip_bitwise(tmp_path, desk_config):
    m = ConditionalModel(desk_config, EncoderConfig(), seed=3)
    path = save_checkpoint(m, tmp_path / "model.ckpt")
    loaded = load_checkpoint(path)
    assert isinstance(loaded, ConditionalModel)
    for name, t in m.state_dict().items():
        assert torch.equal(t, loaded.state_dict()[name]), name


def test_mismatched_config_rejected(tmp_path, desk_config):
    gen = Generator(desk_config, seed=0)
    path = save_checkpoint(gen, tmp_path / "gen.ckpt")
    other = GeneratorConfig(max_res=32)
    with pytest.raises(CheckpointError):
        load_checkpoint(path, expect_config=other)


def test_manifest_contents(tmp_path, desk_config):
    gen = Generator(desk_config, seed=0)
    path = save_checkpoint(gen, tmp_path / "gen.ckpt")
    manifest, _ = read_manifest(path)
    assert manifest["kind"] == "generator"
    names = {e["name"] for e in manifest["tensors"]}
    assert names == set(gen.state_dict())
    for e in manifest["tensors"]:
        assert set(e) == {"name", "shape", "dtype", "offset", "nbytes"}


def test_desk_archive_under_50mb(tmp_path, desk_config):
    m = ConditionalModel(desk_config, EncoderConfig(), seed=0)
    path = save_checkpoint(m, tmp_path / "model.ckpt")
    assert path.stat().st_size < 50 * 1024 * 1024


def test_unknown_version_rejected(tmp_path, desk_config):
    gen = Generator(desk_config, seed=0)
    path = save_checkpoint(gen, tmp_path / "gen.ckpt")
    raw = bytearray(path.read_bytes())
    raw[4:8] = struct.pack("<I", 99)
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(bytes(raw))
    with pytest.raises(CheckpointVersionError):
        load_checkpoint(bad)


def test_not_an_archive_rejected(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    assert not path.read_bytes().startswith(MAGIC)


def test_truncated_archive_rejected(tmp_path, desk_config):
    gen = Generator(desk_config, seed=0)
    path = save_checkpoint(gen, tmp_path / "gen.ckpt")
    truncated = tmp_path / "trunc.ckpt"
    truncated.write_bytes(path.read_bytes()[:-100])
    with pytest.raises(CheckpointError):
        load_checkpoint(truncated)
