import pytest

from cyclebench.config import (
    ConfigError,
    config_from_dict,
    parse_config,
    reference_config_path,
)


def minimal_doc(**run_overrides):
    run = {"mode": "sweep", "durations": [8, 16], "seeds": [1],
           "batch_size": 32, "warmup_epochs": 2}
    run.update(run_overrides)
    return {"task": {"samples": 600}, "run": run}


class TestDefaults:
    def test_minimal_config_materializes_all_defaults(self):
        cfg = config_from_dict(minimal_doc())
        assert cfg.label == "baseline"
        assert cfg.task.kind == "gaussian_mixture"
        assert cfg.task.classes == 10
        assert cfg.optimizer.momentum == 0.875
        assert cfg.optimizer.weight_decay == 5e-4
        assert cfg.methods.alpha_ls == 0.1
        assert cfg.methods.alpha_mx == 0.2
        assert cfg.eta_min == 0.0
        echoed = cfg.to_dict()
        assert echoed["optimizer"]["eta_max"] == cfg.optimizer.eta_max
        assert echoed["run"]["seeds"] == [1]

    def test_default_lr_scales_with_batch(self):
        a = config_from_dict(minimal_doc(batch_size=128))
        assert a.optimizer.eta_max == pytest.approx(0.128)
        b = config_from_dict(minimal_doc(batch_size=128, grad_accum=2,
                                          durations=[8, 16]))
        assert b.optimizer.eta_max == pytest.approx(0.256)

    def test_explicit_lr_wins(self):
        doc = minimal_doc()
        doc["optimizer"] = {"eta_max": 0.5}
        assert config_from_dict(doc).optimizer.eta_max == 0.5

    def test_label_defaults_to_method_set(self):
        doc = minimal_doc()
        doc["methods"] = {"label_smoothing": True, "mixup": True}
        assert config_from_dict(doc).label == "LS+MX"

    def test_round_trip_preserves_fingerprint(self):
        cfg = config_from_dict(minimal_doc())
        again = config_from_dict(cfg.to_dict())
        assert again.fingerprint() == cfg.fingerprint()

    def test_fingerprint_excludes_out_dir(self):
        a = config_from_dict(minimal_doc(), out_dir="x")
        b = config_from_dict(minimal_doc(), out_dir="y")
        assert a.fingerprint() == b.fingerprint()


class TestValidation:
    def test_unknown_key_named(self):
        doc = minimal_doc()
        doc["task"]["sidecar"] = 1
        with pytest.raises(ConfigError, match="sidecar"):
            config_from_dict(doc)

    def test_unknown_section_named(self):
        doc = minimal_doc()
        doc["extras"] = {}
        with pytest.raises(ConfigError, match="extras"):
            config_from_dict(doc)

    def test_missing_mode(self):
        doc = minimal_doc()
        del doc["run"]["mode"]
        with pytest.raises(ConfigError, match="mode"):
            config_from_dict(doc)

    def test_durations_must_increase(self):
        with pytest.raises(ConfigError, match="durations not strictly increasing"):
            config_from_dict(minimal_doc(durations=[32, 16]))

    def test_errors_are_aggregated(self):
        doc = minimal_doc(durations=[32, 16], warmup_epochs=-1)
        doc["methods"] = {"alpha_bogus": 1}
        with pytest.raises(ConfigError) as err:
            config_from_dict(doc)
        msg = str(err.value)
        assert "durations" in msg
        assert "warmup_epochs" in msg
        assert "alpha_bogus" in msg

    def test_cyclic_needs_t0_and_cycles(self):
        with pytest.raises(ConfigError, match="t0"):
            config_from_dict(minimal_doc(mode="cyclic", durations=[]))

    def test_constant_needs_budget(self):
        with pytest.raises(ConfigError, match="epochs"):
            config_from_dict(minimal_doc(mode="constant", durations=[], periods=[5]))

    def test_oversized_batch_rejected(self):
        with pytest.raises(ConfigError, match="train split"):
            config_from_dict(minimal_doc(batch_size=4096))


class TestSchedules:
    def test_sweep_schedule_total(self):
        from cyclebench.schedule import total_steps

        cfg = config_from_dict(minimal_doc())
        spec = cfg.sweep_schedule(8)
        assert total_steps(spec) == 8 * cfg.steps_per_epoch()

    def test_cyclic_plan(self):
        cfg = config_from_dict(minimal_doc(mode="cyclic", durations=[], t0=2,
                                           cycles=3, growth=2.0))
        assert cfg.cycle_plan().cycle_end_epochs == (4, 8, 16)

    def test_constant_schedule_fits_budget(self):
        cfg = config_from_dict(minimal_doc(mode="constant", durations=[],
                                           periods=[3, 5], epochs=17))
        spec3 = cfg.constant_schedule(3)
        assert cfg.run_epochs(spec3) == 2 + 15  # warmup 2 + 5 cycles of 3
        spec5 = cfg.constant_schedule(5)
        assert cfg.run_epochs(spec5) == 2 + 15  # warmup 2 + 3 cycles of 5


def test_reference_config_matches_published_recipe():
    cfg = parse_config(reference_config_path())
    assert cfg.mode == "cyclic"
    assert (cfg.t0, cfg.growth, cfg.cycles) == (8, 2.0, 6)
    assert cfg.warmup_epochs == 8
    assert cfg.optimizer.eta_max == 2.048
    assert cfg.optimizer.momentum == 0.875
    assert cfg.optimizer.weight_decay == 5e-4
    assert cfg.validate() == []
    assert cfg.cycle_plan().cycle_end_epochs == (16, 32, 64, 128, 256, 512)
