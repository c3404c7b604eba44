"""Tests for cropgan/gan_trainer.py - losses, model selection and the training loop."""

import math

import numpy as np
import pytest

from autodiff import Adam, Tensor
from cropgan.checkpoint import read_checkpoint, restore_rng, rng_state
from cropgan.config import GanConfig, config_hash
from cropgan.datasets import LabeledDataset
from cropgan.gan_trainer import (
    HISTORY_HEADER,
    LossComponents,
    TrainHistory,
    adversarial_loss,
    alignment_report,
    cycle_loss,
    discriminator_step,
    generator_adversarial_loss,
    generator_step,
    identity_loss,
    select_model,
    total_loss,
    train_gan,
    transform_target,
    write_monitor,
)
from cropgan.networks import (
    ROLE_DISCRIMINATOR_X,
    ROLE_DISCRIMINATOR_Y,
    ROLE_GENERATOR_F,
    ROLE_GENERATOR_G,
    build_crop_mapper,
    build_discriminator,
    build_generator,
    build_network,
)
from cropgan.tables import read_csv
from shared.errors import TrainingDivergedError, UsageError


def _domain(n, offset=0.0, seed=0, labeled=False):
    rng = np.random.default_rng(seed)
    samples = np.clip(rng.uniform(0.1, 0.6, size=(n, 9, 6)) + offset, 0.0, 1.0)
    labels = rng.integers(0, 2, n) if labeled else None
    return LabeledDataset(samples, labels)


def _constant_discriminator(value):
    return lambda t: Tensor(np.full((t.shape[0], 1), value))


SMALL = GanConfig(epochs=2, batch_size=4, warmup_epochs=0, seed=1)


class TestLosses:
    """Tests for the loss functions with stub mappings."""

    def test_adversarial_at_half(self):
        discriminator = _constant_discriminator(0.5)
        loss = adversarial_loss(discriminator, np.zeros((3, 9, 6)), np.ones((3, 9, 6)))
        assert loss.item() == pytest.approx(2.0 * math.log(0.5))

    def test_adversarial_clamps(self):
        discriminator = _constant_discriminator(0.0)
        loss = adversarial_loss(discriminator, np.zeros((2, 9, 6)), np.zeros((2, 9, 6)))
        assert np.isfinite(loss.item())
        assert loss.item() == pytest.approx(math.log(1e-7), rel=1e-6)

    def test_generator_adversarial(self):
        loss = generator_adversarial_loss(_constant_discriminator(0.25), np.zeros((2, 9, 6)))
        assert loss.item() == pytest.approx(-math.log(0.25))

    def test_cycle(self):
        loss = cycle_loss(lambda t: t, lambda t: t + 0.1, np.zeros((2, 9, 6)))
        assert loss.item() == pytest.approx(0.1)

    def test_cycle_of_inverse_pair_is_zero(self):
        batch = np.random.default_rng(0).uniform(size=(2, 9, 6))
        assert cycle_loss(lambda t: t * 2.0, lambda t: t * 0.5, batch).item() == pytest.approx(0.0)

    def test_identity(self):
        loss = identity_loss(lambda t: t * 0.0 + 0.5, np.zeros((4, 9, 6)))
        assert loss.item() == pytest.approx(0.5)

    def test_empty_batch(self):
        with pytest.raises(UsageError, match="empty"):
            identity_loss(lambda t: t, np.zeros((0, 9, 6)))

    def test_total_loss_weights(self):
        components = LossComponents(
            adv_g=0.25, adv_f=0.25, cyc_x=0.1, cyc_y=0.1, id_g=0.3, id_f=0.4
        )
        assert total_loss(components, GanConfig()) == pytest.approx(0.5 + 2.0 + 3.5)
        no_identity = GanConfig(sigma=0.0)
        assert total_loss(components, no_identity) == pytest.approx(2.5)

    def test_components_finite(self):
        assert LossComponents().is_finite()
        assert not LossComponents(cyc_x=float("nan")).is_finite()


class TestSelectModel:
    """Tests for select_model()."""

    def test_minimum_after_warmup(self):
        assert select_model([0.1, 5.0, 4.0, 3.0, 3.5], warmup_epochs=1) == 3

    def test_earliest_tie_wins(self):
        assert select_model([9.0, 2.0, 1.0, 1.0], warmup_epochs=0) == 2

    def test_warmup_ignores_early_minimum(self):
        assert select_model([0.0, 0.0, 7.0, 8.0], warmup_epochs=2) == 2

    def test_history_too_short(self):
        with pytest.raises(UsageError, match="warmup"):
            select_model([1.0, 2.0], warmup_epochs=2)


class TestTransform:
    """Tests for transform_target() and alignment_report()."""

    def test_identity_generator(self):
        target = _domain(5, labeled=True)
        moved = transform_target(lambda t: t, target)
        np.testing.assert_array_equal(moved.samples, target.samples)
        np.testing.assert_array_equal(moved.labels, target.labels)

    def test_output_clipped(self):
        moved = transform_target(lambda t: t * 10.0 - 2.0, _domain(3))
        assert moved.samples.min() >= 0.0 and moved.samples.max() <= 1.0

    def test_network_generator(self):
        target = _domain(6)
        moved = transform_target(build_generator(0), target)
        assert moved.samples.shape == target.samples.shape

    def test_wrong_direction(self):
        with pytest.raises(UsageError, match=ROLE_GENERATOR_G):
            transform_target(build_generator(0, ROLE_GENERATOR_F), _domain(2))

    def test_alignment_report(self):
        source = _domain(4)
        target = source.with_samples(source.samples + 0.1)
        report = alignment_report(source, target, source)
        assert report["raw_distance"] == pytest.approx(0.1)
        assert report["transformed_distance"] == 0.0


class TestTrainGan:
    """Tests for train_gan() on tiny domains."""

    def test_history_shape(self):
        result = train_gan(_domain(8), _domain(8, 0.2, seed=1), SMALL)
        assert len(result.history) == 2
        assert len(result.snapshots) == 2
        assert set(result.networks) == {
            ROLE_GENERATOR_G,
            ROLE_GENERATOR_F,
            ROLE_DISCRIMINATOR_X,
            ROLE_DISCRIMINATOR_Y,
        }
        for record in result.history.records:
            assert record.total == pytest.approx(total_loss(record.components, SMALL))
            assert record.components.is_finite()

    def test_identical_runs_identical_histories(self):
        a = train_gan(_domain(8), _domain(8, 0.2, seed=1), SMALL)
        b = train_gan(_domain(8), _domain(8, 0.2, seed=1), SMALL)
        for x, y in zip(a.history.records, b.history.records):
            assert x.row()[:-1] == y.row()[:-1]
        for x, y in zip(a.snapshots[-1], b.snapshots[-1]):
            np.testing.assert_array_equal(x, y)

    def test_selected_generator_matches_snapshot(self):
        result = train_gan(_domain(8), _domain(8, 0.2, seed=1), SMALL)
        generator = result.selected_generator()
        assert generator.role == ROLE_GENERATOR_G
        assert generator.epoch == result.selected_epoch
        for x, y in zip(generator.state_arrays(), result.snapshots[result.selected_epoch]):
            np.testing.assert_array_equal(x, y)

    def test_all_networks_updated(self):
        config = GanConfig(epochs=1, batch_size=4, warmup_epochs=0, seed=1)
        result = train_gan(_domain(4), _domain(4, seed=1), config)
        untrained = {
            ROLE_GENERATOR_G: 0,
            ROLE_GENERATOR_F: 1,
            ROLE_DISCRIMINATOR_X: 2,
            ROLE_DISCRIMINATOR_Y: 3,
        }
        seeds = [int(s) for s in np.random.SeedSequence(1).generate_state(5)]
        for role, index in untrained.items():
            fresh = build_network(role, seeds[index]).parameters()[0].data
            assert not np.array_equal(fresh, result.networks[role].parameters()[0].data)

    def test_checkpoints_per_epoch(self, tmp_path):
        result = train_gan(_domain(8), _domain(8, seed=1), SMALL, checkpoint_dir=tmp_path)
        for epoch in range(2):
            epoch_dir = tmp_path / f"epoch_{epoch:04d}"
            assert sorted(p.name for p in epoch_dir.iterdir()) == sorted(
                f"{role}.ckpt" for role in result.networks
            )
        assert result.history[1].checkpoint == str(tmp_path / "epoch_0001")

    def test_batch_larger_than_domain(self):
        with pytest.raises(UsageError, match="samples per domain"):
            train_gan(_domain(3), _domain(8), SMALL)

    def test_monitor_needs_target_labels(self):
        with pytest.raises(UsageError):
            train_gan(_domain(8), _domain(8), SMALL, classifier=build_crop_mapper(0))

    def test_monitor_records(self, tmp_path):
        target = _domain(8, seed=1, labeled=True)
        result = train_gan(
            _domain(8),
            target.unlabeled(),
            SMALL,
            classifier=build_crop_mapper(0),
            monitor_target=target,
        )
        assert [m.epoch for m in result.monitor] == [0, 1]
        rows = read_csv(write_monitor(result.monitor, tmp_path / "monitor.csv"))
        assert set(rows[0]) == {"epoch", "oa", "f1", "kappa"}


class TestTrainHistory:
    """Tests for history CSV persistence."""

    def test_csv_round_trip(self, tmp_path):
        result = train_gan(_domain(8), _domain(8, seed=1), SMALL)
        path = result.history.to_csv(tmp_path / "history.csv")
        assert path.read_text().splitlines()[0] == ",".join(HISTORY_HEADER)
        restored = TrainHistory.from_csv(path)
        assert restored.totals() == result.history.totals()
        assert select_model(restored, 0) == result.selected_epoch

    def test_history_csv_reproducible_but_for_seconds(self, tmp_path):
        a = train_gan(_domain(8), _domain(8, seed=1), SMALL).history.to_csv(tmp_path / "a.csv")
        b = train_gan(_domain(8), _domain(8, seed=1), SMALL).history.to_csv(tmp_path / "b.csv")

        def without_seconds(path):
            return [line.rsplit(",", 1)[0] for line in path.read_text().splitlines()]

        assert without_seconds(a) == without_seconds(b)

    def test_total_recomposes_from_csv(self, tmp_path):
        config = GanConfig(alpha=0.7, beta=3.0, sigma=1.3, epochs=2, batch_size=4, warmup_epochs=0)
        result = train_gan(_domain(8), _domain(8, seed=1), config)
        restored = TrainHistory.from_csv(result.history.to_csv(tmp_path / "history.csv"))
        for record in restored.records:
            assert abs(record.total - total_loss(record.components, config)) <= 1e-12


def _networks(seed=0):
    return (
        build_generator(seed, ROLE_GENERATOR_G),
        build_generator(seed + 1, ROLE_GENERATOR_F),
        build_discriminator(seed + 2, ROLE_DISCRIMINATOR_X),
        build_discriminator(seed + 3, ROLE_DISCRIMINATOR_Y),
    )


def _params(*networks):
    return [p.data.copy() for network in networks for p in network.parameters()]


def _batches(n=4):
    x = _domain(n, 0.2, seed=1).network_input()
    y = _domain(n, seed=2).network_input()
    return x, y


class TestSteps:
    """Tests for discriminator_step() and generator_step() in isolation."""

    def test_discriminator_step_leaves_generators(self):
        g, f, d_x, d_y = _networks()
        before_gen, before_disc = _params(g, f), _params(d_x, d_y)
        optimizer = Adam(d_x.parameters() + d_y.parameters(), learning_rate=0.005, beta1=0.5)
        discriminator_step(g, f, d_x, d_y, optimizer, *_batches())
        for a, b in zip(before_gen, _params(g, f)):
            np.testing.assert_array_equal(a, b)
        assert any(not np.array_equal(a, b) for a, b in zip(before_disc, _params(d_x, d_y)))

    def test_generator_step_leaves_discriminators(self):
        g, f, d_x, d_y = _networks()
        before_gen, before_disc = _params(g, f), _params(d_x, d_y)
        optimizer = Adam(g.parameters() + f.parameters(), learning_rate=0.005, beta1=0.5)
        generator_step(g, f, d_x, d_y, optimizer, *_batches(), GanConfig())
        for a, b in zip(before_disc, _params(d_x, d_y)):
            np.testing.assert_array_equal(a, b)
        assert any(not np.array_equal(a, b) for a, b in zip(before_gen, _params(g, f)))

    def test_generator_step_reports_components(self):
        g, f, d_x, d_y = _networks()
        x, y = _batches()
        optimizer = Adam(g.parameters() + f.parameters(), learning_rate=0.005, beta1=0.5)
        expected_cycle = cycle_loss(g, f, x).item()
        components = generator_step(g, f, d_x, d_y, optimizer, x, y, GanConfig(), (-1.5, -1.25))
        assert (components.adv_g, components.adv_f) == (-1.5, -1.25)
        assert components.cyc_x == expected_cycle

    def test_non_finite_batch_applies_no_update(self):
        g, f, d_x, d_y = _networks()
        x, y = _batches()
        x[0, 0, 0, 0] = np.nan
        before = _params(g, f)
        optimizer = Adam(g.parameters() + f.parameters(), learning_rate=0.005, beta1=0.5)
        with pytest.raises(TrainingDivergedError) as excinfo:
            generator_step(g, f, d_x, d_y, optimizer, x, y, GanConfig(), epoch=3, batch=7)
        assert (excinfo.value.epoch, excinfo.value.batch) == (3, 7)
        for a, b in zip(before, _params(g, f)):
            np.testing.assert_array_equal(a, b)


class TestRunState:
    """Tests for the rng states and checkpoint metadata recorded per epoch."""

    def test_rng_state_after_each_epoch(self):
        source, target = _domain(8), _domain(8, seed=1)
        result = train_gan(source, target, SMALL)
        assert len(result.rng_states) == SMALL.epochs
        rng = np.random.default_rng(int(np.random.SeedSequence(SMALL.seed).generate_state(5)[4]))
        for state in result.rng_states:
            rng.permutation(len(target))
            rng.permutation(len(source))
            assert state == rng_state(rng)

    def test_restored_rng_continues_the_shuffle(self):
        result = train_gan(_domain(8), _domain(8, seed=1), SMALL)
        resumed = restore_rng(result.rng_states[0])
        following = restore_rng(result.rng_states[0])
        np.testing.assert_array_equal(resumed.permutation(8), following.permutation(8))
        resumed.permutation(8)
        assert rng_state(resumed) == result.rng_states[1]

    def test_epoch_checkpoint_metadata(self, tmp_path):
        result = train_gan(_domain(8), _domain(8, seed=1), SMALL, checkpoint_dir=tmp_path)
        for epoch in range(SMALL.epochs):
            path = tmp_path / f"epoch_{epoch:04d}" / f"{ROLE_GENERATOR_G}.ckpt"
            metadata = read_checkpoint(path).metadata
            assert metadata["config_hash"] == config_hash(SMALL)
            assert metadata["rng_state"] == result.rng_states[epoch]
            assert metadata["seed"] == str(SMALL.seed)
            assert float(metadata["total"]) == result.history[epoch].total

    def test_caller_config_hash_wins(self, tmp_path):
        train_gan(
            _domain(8),
            _domain(8, seed=1),
            SMALL,
            checkpoint_dir=tmp_path,
            metadata={"config_hash": "run-config"},
        )
        path = tmp_path / "epoch_0000" / f"{ROLE_DISCRIMINATOR_X}.ckpt"
        assert read_checkpoint(path).metadata["config_hash"] == "run-config"


@pytest.mark.slow
class TestLongRuns:
    """Longer training runs on small synthetic domains."""

    def test_selected_total_below_first_epoch(self):
        config = GanConfig(epochs=10, batch_size=8, warmup_epochs=0, seed=3)
        result = train_gan(_domain(32), _domain(32, 0.2, seed=1), config)
        selected = result.history[result.selected_epoch]
        assert result.selected_epoch > 0
        assert selected.total < result.history[0].total

    def test_thousand_batches_stay_finite(self):
        config = GanConfig(epochs=63, batch_size=4, warmup_epochs=0, seed=5)
        result = train_gan(_domain(64), _domain(64, 0.2, seed=1), config)
        assert len(result.history) * (64 // 4) >= 1000
        assert all(record.components.is_finite() for record in result.history.records)
        assert all(np.isfinite(result.history.totals()))
