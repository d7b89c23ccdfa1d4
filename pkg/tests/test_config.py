"""Flat key=value config serialization: lossless, byte-stable, validated."""

import pytest

from csanet.config import (
    ModelConfig,
    RunConfig,
    SplitSpec,
    SynthSpec,
    TrainConfig,
    config_from_text,
    config_to_text,
    read_config,
    write_config,
)
from csanet.errors import ConfigurationError


def sample_run():
    return RunConfig(
        synth=SynthSpec(n_per_class=4, channels=6, time_steps=64, n_classes=3, snr=2.5),
        model=ModelConfig(channels=6, time_steps=64, n_classes=3, pools=(4, 4), conv_dropout=0.25),
        split=SplitSpec(strategy="kfold", n_folds=5, fold_index=2, seed=9),
        train=TrainConfig(epochs=10, batch_size=8, lr=0.0009),
        seed=123,
        out_dir="runs/sample",
    )


def test_roundtrip_preserves_every_field():
    run = sample_run()
    assert config_from_text(config_to_text(run)) == run


def test_write_read_write_is_byte_identical(tmp_path):
    run = sample_run()
    p1, p2 = tmp_path / "a.cfg", tmp_path / "b.cfg"
    write_config(run, p1)
    write_config(read_config(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_float_values_roundtrip_exactly():
    run = sample_run()
    run.train.lr = 0.1 + 0.2  # a value whose repr carries full precision
    parsed = config_from_text(config_to_text(run))
    assert parsed.train.lr == run.train.lr


def test_comments_and_blank_lines_ignored():
    text = "# a comment\n\nseed=7\n# another\nout_dir=x\n"
    run = config_from_text(text)
    assert run.seed == 7 and run.out_dir == "x"


def test_unknown_key_names_the_offender():
    with pytest.raises(ConfigurationError, match="no_such_key"):
        config_from_text("no_such_key=1\n")
    with pytest.raises(ConfigurationError, match="model.bogus"):
        config_from_text("model.bogus=1\n")


def test_bad_value_names_the_key():
    with pytest.raises(ConfigurationError, match="seed"):
        config_from_text("seed=notanint\n")


def test_nested_keys_are_dotted():
    run = config_from_text("model.attention.heads=4\nmodel.spa_filters=16\n")
    assert run.model.attention.heads == 4
    assert run.model.spa_filters == 16


def test_tuple_fields_parse_from_commas():
    run = config_from_text("model.temporal_kernels=32,16,8,4\nsplit.test_sessions=2,3\n")
    assert run.model.temporal_kernels == (32, 16, 8, 4)
    assert run.split.test_sessions == (2, 3)


def test_empty_tuple_roundtrip():
    run = sample_run()
    run.split.test_sessions = ()
    assert config_from_text(config_to_text(run)).split.test_sessions == ()


def test_validation_requires_exactly_one_source():
    run = RunConfig()  # neither data_path nor synth trials
    with pytest.raises(ConfigurationError):
        run.validate()
    run.synth.n_per_class = 2
    run.data_path = "also.eegd"
    with pytest.raises(ConfigurationError):
        run.validate()
