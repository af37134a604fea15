"""Conditional tabular generator: transform roundtrips, determinism,
persistence, schema validity of samples, and guard rails."""

import logging

import numpy as np
import pytest
from helpers import encoded_dataset, make_schema

from gansemble.errors import ArtifactError, ConfigError, TrainingError
from gansemble.gan import (
    GanConfig,
    fit_generator,
    generate,
    load_generator,
    save_generator,
    save_loss_trace,
)
from gansemble.gan.transform import (
    CategoricalTransform,
    ContinuousTransform,
    decode_table,
    encode_table,
    fit_table_transform,
)


def single_sp_dataset(n=40, seed=0, pm="a"):
    rng = np.random.default_rng(seed)
    schema = make_schema(categoricals=("extra",))
    outcome = ["pos" if rng.random() < 0.4 else "neg" for _ in range(n)]
    outcome[0], outcome[1] = "pos", "neg"
    return encoded_dataset(
        schema,
        {
            "num_0": list(rng.normal(size=n)),
            "num_1": list(rng.normal(loc=2.0, scale=0.5, size=n)),
            "extra": list(rng.choice(["u", "v", "w"], size=n)),
            "outcome": outcome,
            "group": [pm] * n,
        },
    )


TINY_CONFIG = GanConfig(
    epochs=2,
    batch_size=10,
    dis_steps_per_gen_step=2,
    latent_dim=16,
    mixture_modes=3,
    hidden_dim=32,
    pac=2,
    seed=0,
)


@pytest.fixture(scope="module")
def tiny():
    train = single_sp_dataset()
    model = fit_generator(train, TINY_CONFIG)
    return train, model


class TestTableTransform:
    def test_exact_roundtrip_with_single_mode(self):
        d = single_sp_dataset(n=30, seed=1)
        tf = fit_table_transform(d, mixture_modes=1, seed=0)
        rng = np.random.default_rng(0)
        encoded = encode_table(tf, d, rng)
        decoded = decode_table(tf, encoded)
        for col in d.schema.continuous_columns:
            np.testing.assert_allclose(
                decoded[col].to_numpy(), d.df[col].to_numpy(), atol=1e-9
            )
        for col in ("extra", "outcome", "group"):
            assert (decoded[col].to_numpy() == d.df[col].to_numpy()).all()

    def test_multimode_roundtrip_recovers_categoricals_exactly(self):
        d = single_sp_dataset(n=50, seed=2)
        tf = fit_table_transform(d, mixture_modes=5, seed=3)
        rng = np.random.default_rng(1)
        decoded = decode_table(tf, encode_table(tf, d, rng))
        for col in ("extra", "outcome", "group"):
            assert (decoded[col].to_numpy() == d.df[col].to_numpy()).all()
        # mode-based continuous coding stays close except clipped far tails
        for col in d.schema.continuous_columns:
            err = np.abs(decoded[col].to_numpy() - d.df[col].to_numpy())
            assert np.median(err) < 0.05

    def test_output_dim_matches_spans(self):
        d = single_sp_dataset(n=30, seed=1)
        tf = fit_table_transform(d, mixture_modes=4, seed=0)
        assert tf.output_dim == sum(s.dim for s in tf.spans())
        rng = np.random.default_rng(0)
        assert encode_table(tf, d, rng).shape == (30, tf.output_dim)

    def test_span_layout_per_column_kind(self):
        d = single_sp_dataset(n=30, seed=1)
        tf = fit_table_transform(d, mixture_modes=4, seed=0)
        by_col = {t.column: t for t in tf.transforms}
        for col in d.schema.continuous_columns:
            t = by_col[col]
            assert isinstance(t, ContinuousTransform)
            kinds = [s.activation for s in t.spans]
            assert kinds == ["tanh", "softmax"]
            assert 1 <= t.n_modes <= 4
        for col in ("extra", "outcome", "group"):
            t = by_col[col]
            assert isinstance(t, CategoricalTransform)
            assert t.n_categories == len(d.encodings[col])

    def test_categorical_layout_offsets(self):
        d = single_sp_dataset(n=30, seed=1)
        tf = fit_table_transform(d, mixture_modes=2, seed=0)
        layout = tf.categorical_layout()
        assert [name for name, _, _ in layout] == ["extra", "outcome", "group"]
        for name, offset, size in layout:
            assert size == len(d.encodings[name])
            assert 0 <= offset < tf.output_dim

    def test_state_roundtrip(self):
        d = single_sp_dataset(n=30, seed=1)
        tf = fit_table_transform(d, mixture_modes=3, seed=0)
        again = type(tf).from_state(tf.to_state())
        rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
        np.testing.assert_array_equal(
            encode_table(tf, d, rng_a), encode_table(again, d, rng_b)
        )

    def test_deterministic_given_seed(self):
        d = single_sp_dataset(n=30, seed=1)
        a = fit_table_transform(d, mixture_modes=3, seed=7).to_state()
        b = fit_table_transform(d, mixture_modes=3, seed=7).to_state()
        assert a == b


class TestFitGenerator:
    def test_loss_trace_shape_and_finiteness(self, tiny):
        train, model = tiny
        steps_per_epoch = train.n // model.batch_size
        assert len(model.loss_trace) == TINY_CONFIG.epochs * steps_per_epoch
        assert model.loss_trace_finite()

    def test_records_sp_and_training_rows(self, tiny):
        train, model = tiny
        assert model.sp_label == "a"
        assert model.train_row_ids == train.all_row_ids()
        assert model.schema_fingerprint == train.fingerprint()

    def test_too_few_rows_rejected(self):
        d = single_sp_dataset(n=30, seed=0).subset([0], provenance="one-row")
        with pytest.raises(TrainingError):
            fit_generator(d, TINY_CONFIG)

    def test_batch_clamped_with_warning(self, caplog):
        d = single_sp_dataset(n=8, seed=3)
        cfg = GanConfig(
            epochs=1,
            batch_size=50,
            dis_steps_per_gen_step=1,
            latent_dim=8,
            mixture_modes=2,
            hidden_dim=16,
            pac=2,
            seed=0,
        )
        with caplog.at_level(logging.WARNING, logger="gansemble.gan.model"):
            model = fit_generator(d, cfg)
        assert model.batch_size == 8
        assert any("clamping" in r.getMessage() for r in caplog.records)

    def test_pac_adjusted_with_warning(self, caplog):
        d = single_sp_dataset(n=15, seed=4)
        cfg = GanConfig(
            epochs=1,
            batch_size=15,
            dis_steps_per_gen_step=1,
            latent_dim=8,
            mixture_modes=2,
            hidden_dim=16,
            pac=10,
            seed=0,
        )
        with caplog.at_level(logging.WARNING, logger="gansemble.gan.model"):
            fit_generator(d, cfg)
        assert any("pac adjusted" in r.getMessage() for r in caplog.records)

    def test_unencoded_input_rejected(self):
        from helpers import raw_dataset

        schema = make_schema()
        raw = raw_dataset(
            schema,
            {
                "num_0": [0.1, 0.2, 0.3],
                "num_1": [1.0, 2.0, 3.0],
                "outcome": ["pos", "neg", "pos"],
                "group": ["a", "a", "a"],
            },
        )
        with pytest.raises(Exception):
            fit_generator(raw, TINY_CONFIG)


class TestGenerate:
    def test_deterministic_given_seed(self, tiny):
        _, model = tiny
        a = generate(model, 20, seed=5)
        b = generate(model, 20, seed=5)
        c = generate(model, 20, seed=6)
        assert a.df.equals(b.df)
        assert list(a.row_ids) == list(b.row_ids)
        assert not a.df.equals(c.df)

    def test_rows_are_schema_valid_codes_at_scale(self, tiny):
        train, model = tiny
        d = generate(model, 10_000, seed=1)
        assert d.n == 10_000
        for col in ("extra", "outcome", "group"):
            codes = set(d.df[col].tolist())
            assert codes <= set(range(len(train.encodings[col])))
        for col in train.schema.continuous_columns:
            assert np.isfinite(d.df[col].to_numpy()).all()

    def test_constant_categorical_stays_constant(self, tiny):
        train, model = tiny
        d = generate(model, 200, seed=2)
        # the population marker had a single category in training
        assert set(d.df["group"].tolist()) == {0}
        assert len(train.encodings["group"]) == 1

    def test_synthetic_ids_and_provenance(self, tiny):
        _, model = tiny
        d = generate(model, 5, seed=9)
        assert all(rid.startswith("synthetic:gan:a:9:") for rid in d.row_ids)
        assert d.n_synthetic == 5
        assert d.n_real == 0

    def test_zero_rows(self, tiny):
        _, model = tiny
        d = generate(model, 0, seed=0)
        assert d.n == 0
        assert list(d.df.columns) == list(model.schema.names)

    def test_negative_rows_rejected(self, tiny):
        _, model = tiny
        with pytest.raises(ConfigError):
            generate(model, -1, seed=0)


class TestPersistence:
    def test_save_load_generate_bit_identical(self, tiny, tmp_path):
        _, model = tiny
        path = tmp_path / "gen.bin"
        save_generator(model, path)
        loaded = load_generator(path)
        a = generate(model, 30, seed=11)
        b = generate(loaded, 30, seed=11)
        assert a.df.equals(b.df)
        assert loaded.config == model.config
        assert loaded.train_row_ids == model.train_row_ids
        assert loaded.loss_trace == model.loss_trace

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ArtifactError):
            load_generator(tmp_path / "missing.bin")

    def test_truncated_file_rejected(self, tiny, tmp_path):
        _, model = tiny
        path = tmp_path / "gen.bin"
        save_generator(model, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ArtifactError):
            load_generator(path)

    def test_fingerprint_mismatch_rejected(self, tiny, tmp_path):
        _, model = tiny
        path = tmp_path / "gen.bin"
        save_generator(model, path)
        with pytest.raises(ArtifactError):
            load_generator(path, expected_fingerprint="0" * 64)

    def test_fingerprint_match_accepted(self, tiny, tmp_path):
        train, model = tiny
        path = tmp_path / "gen.bin"
        save_generator(model, path)
        loaded = load_generator(path, expected_fingerprint=train.fingerprint())
        assert loaded.sp_label == "a"

    def test_loss_trace_file(self, tiny, tmp_path):
        _, model = tiny
        path = tmp_path / "trace.csv"
        save_loss_trace(model, path)
        lines = path.read_text(encoding="utf-8").strip().splitlines()
        assert lines[0] == "epoch,step,d_loss,g_loss"
        assert len(lines) == 1 + len(model.loss_trace)


class TestGanConfig:
    def test_experiment_defaults(self):
        cfg = GanConfig()
        assert cfg.epochs == 10
        assert cfg.batch_size == 50
        assert cfg.gen_lr == 2e-4
        assert cfg.dis_lr == 2e-6
        assert cfg.dis_steps_per_gen_step == 5

    def test_dict_roundtrip(self):
        cfg = GanConfig(epochs=3, batch_size=20, pac=4, seed=17, condition_on_label=False)
        assert GanConfig.from_dict(cfg.to_dict()) == cfg

    def test_validation(self):
        with pytest.raises(ConfigError):
            GanConfig(epochs=0)
        with pytest.raises(ConfigError):
            GanConfig(batch_size=0)
        with pytest.raises(ConfigError):
            GanConfig(gen_lr=0.0)
        with pytest.raises(ConfigError):
            GanConfig(grad_penalty=-1.0)

    def test_with_seed(self):
        cfg = GanConfig(epochs=3).with_seed(99)
        assert cfg.seed == 99
        assert cfg.epochs == 3
