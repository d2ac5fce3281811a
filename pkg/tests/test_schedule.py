import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclebench.schedule import (
    Constant,
    CosineDecay,
    Sawtooth,
    ScheduleError,
    ScheduleSpec,
    WarmRestarts,
    cycle_end_steps,
    cycle_lengths,
    lr_at,
    lr_sequence,
    total_steps,
    validate,
)


def reference_lr(spec: ScheduleSpec, step: int) -> float:
    """Independent evaluation: walk cycles sequentially, exact-fraction phase."""
    if step < spec.warmup_steps:
        return spec.eta_max * (step + 1) / spec.warmup_steps
    t = step - spec.warmup_steps
    shape = spec.shape
    if isinstance(shape, Constant):
        return spec.eta_max
    if isinstance(shape, CosineDecay):
        period, t_cur = shape.total - spec.warmup_steps, t
    else:
        lengths = cycle_lengths(spec)
        t_cur = t
        period = lengths[0]
        for length in lengths:
            period = length
            if t_cur < length:
                break
            t_cur -= length
    frac = Fraction(t_cur, period)
    if isinstance(shape, Sawtooth):
        return spec.eta_min + (spec.eta_max - spec.eta_min) * (1 - abs(2 * float(frac) - 1))
    if frac == 0:
        return spec.eta_max
    return spec.eta_min + 0.5 * (spec.eta_max - spec.eta_min) * (
        1 + math.cos(float(frac) * math.pi)
    )


def test_first_step_of_cycle_is_eta_max():
    spec = ScheduleSpec(eta_max=2.048, eta_min=0.0, warmup_steps=0,
                        shape=WarmRestarts(100, 2.0, 2))
    assert lr_at(spec, 0) == 2.048
    assert lr_at(spec, 100) == 2.048


def test_cosine_midpoint_is_halfway():
    spec = ScheduleSpec(eta_max=2.048, eta_min=0.0, warmup_steps=0,
                        shape=WarmRestarts(100, 2.0, 2))
    assert lr_at(spec, 50) == pytest.approx(1.024, abs=1e-15)


def test_cosine_near_cycle_end():
    # closed-form value at phase 99/100, checked on an independent calculator
    spec = ScheduleSpec(eta_max=2.048, eta_min=0.0, warmup_steps=0,
                        shape=WarmRestarts(100, 2.0, 2))
    expected = 1.024 * (1 + math.cos(0.99 * math.pi))
    assert expected == pytest.approx(5.0528218549e-4, rel=1e-9)
    assert lr_at(spec, 99) == pytest.approx(expected, abs=1e-15)


def test_warmup_is_linear_and_hits_peak():
    spec = ScheduleSpec(eta_max=1.0, warmup_steps=4, shape=CosineDecay(total=8))
    assert [lr_at(spec, s) for s in range(4)] == [0.25, 0.5, 0.75, 1.0]


def test_step_out_of_range():
    spec = ScheduleSpec(eta_max=1.0, shape=CosineDecay(total=10))
    with pytest.raises(ScheduleError):
        lr_at(spec, 10)
    with pytest.raises(ScheduleError):
        lr_at(spec, -1)


def test_invalid_spec_rejected_at_evaluation():
    spec = ScheduleSpec(eta_max=0.05, eta_min=0.1, shape=CosineDecay(total=10))
    with pytest.raises(ScheduleError):
        lr_at(spec, 0)


def test_doubling_periods_emit_power_of_two_epoch_ends():
    spec = ScheduleSpec.from_epochs(2.048, WarmRestarts(8, 2.0, 6),
                                    warmup_epochs=8, steps_per_epoch=1)
    plan = cycle_end_steps(spec)
    assert plan.cycle_end_epochs == (16, 32, 64, 128, 256, 512)
    assert total_steps(spec) == 512


def test_constant_period_plan_is_arithmetic():
    spec = ScheduleSpec.from_epochs(1.0, WarmRestarts(25, 1.0, 4), steps_per_epoch=1)
    assert cycle_end_steps(spec).cycle_end_epochs == (25, 50, 75, 100)


def test_plan_accumulates_warmup_offset():
    spec = ScheduleSpec.from_epochs(1.0, WarmRestarts(4, 2.0, 5),
                                    warmup_epochs=4, steps_per_epoch=1)
    assert cycle_end_steps(spec).cycle_end_epochs == (8, 16, 32, 64, 128)


def test_plan_rejects_noncyclic_shape():
    spec = ScheduleSpec(eta_max=1.0, shape=CosineDecay(total=10))
    with pytest.raises(ScheduleError, match="non-cyclic"):
        cycle_end_steps(spec)


def test_total_steps_scales_with_steps_per_epoch():
    spec = ScheduleSpec.from_epochs(2.048, WarmRestarts(8, 2.0, 6),
                                    warmup_epochs=8, steps_per_epoch=10)
    assert total_steps(spec) == 5120


def test_total_steps_cosine_decay():
    spec = ScheduleSpec(eta_max=1.0, shape=CosineDecay(total=100))
    assert total_steps(spec) == 100


def test_validate_collects_every_violation():
    spec = ScheduleSpec(eta_max=0.05, eta_min=0.1, warmup_steps=-1,
                        shape=WarmRestarts(0, 0.5, 0))
    errors = validate(spec)
    assert "eta_min exceeds eta_max" in errors
    assert "growth factor below 1" in errors
    assert "warmup_steps below 0" in errors
    assert "first cycle period below 1 step" in errors
    assert "cycle count below 1" in errors


def test_validate_accepts_reference_recipe():
    spec = ScheduleSpec.from_epochs(2.048, WarmRestarts(8, 2.0, 6),
                                    warmup_epochs=8, steps_per_epoch=1)
    assert validate(spec) == []


def test_sawtooth_triangle_profile():
    spec = ScheduleSpec(eta_max=1.0, eta_min=0.0, shape=Sawtooth(period=4, cycles=2))
    seq = lr_sequence(spec)
    assert seq == [0.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0, 0.5]


specs = st.builds(
    lambda eta_max, warmup, t0, growth, cycles: ScheduleSpec(
        eta_max=eta_max,
        eta_min=0.0,
        warmup_steps=warmup,
        shape=WarmRestarts(t0, growth, cycles),
    ),
    eta_max=st.floats(0.01, 10.0),
    warmup=st.integers(0, 20),
    t0=st.integers(1, 50),
    growth=st.one_of(st.just(1.0), st.just(2.0), st.just(3.0),
                     st.floats(1.0, 3.0)),
    cycles=st.integers(1, 6),
)


@given(specs, st.integers(0, 10_000))
@settings(max_examples=200)
def test_lr_matches_reference_and_is_pure(spec, raw_step):
    step = raw_step % total_steps(spec)
    got = lr_at(spec, step)
    assert got == lr_at(spec, step)  # bit-identical on repeat
    assert got == pytest.approx(reference_lr(spec, step), abs=1e-12)
    assert 0.0 <= got <= spec.eta_max + 1e-15


@given(specs)
@settings(max_examples=100)
def test_cycle_boundaries_restart_at_peak_and_partition(spec):
    plan = cycle_end_steps(spec)
    ends = list(plan.cycle_end_steps)
    assert ends == sorted(set(ends))
    assert ends[-1] == total_steps(spec)
    assert ends[0] > spec.warmup_steps
    start = spec.warmup_steps
    for end in ends:
        assert lr_at(spec, start) == spec.eta_max
        start = end


@given(specs)
@settings(max_examples=60)
def test_lr_non_increasing_within_cosine_cycle(spec):
    plan = cycle_end_steps(spec)
    start = spec.warmup_steps
    for end in plan.cycle_end_steps:
        prev = math.inf
        for step in range(start, end):
            cur = lr_at(spec, step)
            assert cur <= prev + 1e-15
            prev = cur
        start = end


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 4),
       st.integers(1, 4), st.sampled_from([1.0, 2.0, 3.0]))
@settings(max_examples=60)
def test_epoch_and_step_denominations_agree(k, t0, warmup, cycles, growth):
    shape = WarmRestarts(t0, growth, cycles)
    per_epoch = ScheduleSpec.from_epochs(1.0, shape, warmup_epochs=warmup, steps_per_epoch=1)
    per_step = ScheduleSpec.from_epochs(1.0, shape, warmup_epochs=warmup, steps_per_epoch=k)
    for epoch in range(warmup, total_steps(per_epoch)):
        assert lr_at(per_step, epoch * k) == pytest.approx(
            lr_at(per_epoch, epoch), abs=1e-12
        )


def test_constant_shape_flat_after_warmup():
    spec = ScheduleSpec(eta_max=0.4, warmup_steps=2, shape=Constant(total=6))
    assert lr_sequence(spec) == [0.2, 0.4, 0.4, 0.4, 0.4, 0.4]
    assert total_steps(spec) == 6


def test_all_warmup_run_is_legal():
    spec = ScheduleSpec(eta_max=1.0, warmup_steps=4, shape=CosineDecay(total=4))
    assert validate(spec) == []
    assert lr_sequence(spec) == [0.25, 0.5, 0.75, 1.0]
