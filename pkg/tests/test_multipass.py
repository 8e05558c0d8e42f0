import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obstune.experiments import run_bootstrap
from obstune.mappers import FunctionModel, ParamMapper, QualityMapper
from obstune.multipass import (
    ConstantStep,
    DecayingStep,
    MultiPassConfig,
    get_q_step,
    multi_pass_adjust,
)
from obstune.objectives import MultiBump, Bump
from obstune.observer import BasicTunerConfig, Observer, fit_observer


def stub_observer(space, q):
    qm = QualityMapper(FunctionModel(lambda u: q), space)
    return Observer(space, qm, tuple(ParamMapper(i, FunctionModel(lambda f: 0.5), space) for i in range(len(space))))


class TestQStep:
    def test_constant(self):
        assert get_q_step(ConstantStep(0.05), 0) == 0.05
        assert get_q_step(ConstantStep(0.05), 17) == 0.05

    def test_decaying(self):
        assert get_q_step(DecayingStep(0.1, 0.5), 0) == 0.1
        assert get_q_step(DecayingStep(0.1, 0.5), 3) == pytest.approx(0.0125, abs=1e-18)

    @pytest.mark.parametrize("bad", [lambda: ConstantStep(0.0), lambda: ConstantStep(1.5), lambda: DecayingStep(0.1, 1.0), lambda: DecayingStep(-1, 0.5)])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            bad()


def test_reaches_target_in_one_pass(unit_square):
    cfg = MultiPassConfig(q_target=0.9, q_init=0.5, step=ConstantStep(0.1))
    res = multi_pass_adjust(stub_observer(unit_square, 1.0), unit_square, cfg)
    assert len(res.passes) == 1
    assert res.termination == "target_reached"
    assert res.q_best == 1.0
    assert res.passes[0].stagnation == 0


def test_constant_stub_stagnates(unit_square):
    inner = BasicTunerConfig(max_idle=3, min_contribution=0.01)
    cfg = MultiPassConfig(q_target=0.9, q_init=0.5, step=ConstantStep(0.1), max_stagnation=2, inner=inner)
    res = multi_pass_adjust(stub_observer(unit_square, 0.2), unit_square, cfg)
    assert res.q_ex_sequence == [0.5, 0.6]
    assert [p.stagnation for p in res.passes] == [1, 2]
    assert [p.result.q_best for p in res.passes] == [0.2, 0.2]
    assert res.termination == "max_stagnation"


def test_q_ex_clamps_at_one(unit_square):
    inner = BasicTunerConfig(max_idle=2)
    cfg = MultiPassConfig(q_target=1.0, q_init=0.95, step=ConstantStep(0.1), max_stagnation=3, inner=inner)
    res = multi_pass_adjust(stub_observer(unit_square, 0.2), unit_square, cfg)
    assert res.q_ex_sequence == [0.95, 1.0, 1.0]


def test_warm_start_continues_from_previous_best(unit_square):
    inner = BasicTunerConfig(max_idle=2)
    cfg = MultiPassConfig(q_target=0.9, q_init=0.5, step=ConstantStep(0.1), max_stagnation=3, warm_start=True, inner=inner)
    res = multi_pass_adjust(stub_observer(unit_square, 0.2), unit_square, cfg)
    for prev, cur in zip(res.passes, res.passes[1:]):
        assert cur.result.hp_initial == prev.result.hp_best
    cold = multi_pass_adjust(stub_observer(unit_square, 0.2), unit_square, MultiPassConfig(
        q_target=0.9, q_init=0.5, step=ConstantStep(0.1), max_stagnation=3, warm_start=False, inner=inner))
    starts = {p.result.hp_initial for p in cold.passes}
    assert len(starts) == len(cold.passes)  # fresh draw per pass


def test_config_validation():
    with pytest.raises(ValueError):
        MultiPassConfig(q_target=0.5, q_init=0.6)
    with pytest.raises(ValueError):
        MultiPassConfig(max_stagnation=0)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 2**31),
    st.floats(0.3, 0.8),
    st.floats(0.02, 0.2),
    st.integers(1, 4),
    st.booleans(),
)
def test_multipass_invariants(seed, q_init, step, max_stag, warm):
    from obstune.space import HyperParamSpace, ParamSpec

    space = HyperParamSpace([ParamSpec("a", "continuous", 0, 1), ParamSpec("b", "integer", 0, 10)])
    obj = MultiBump(space, [Bump((0.2, 0.8), 0.05, 1.0), Bump((0.8, 0.2), 0.05, 0.6)])
    log = run_bootstrap(space, obj, 60, seed)
    inner = BasicTunerConfig(max_iterations=15, max_idle=4, seed=seed)
    cfg = MultiPassConfig(q_target=0.97, q_init=q_init, step=ConstantStep(step), max_stagnation=max_stag, warm_start=warm, inner=inner)
    res = multi_pass_adjust(fit_observer(log), space, cfg)

    seq = res.q_ex_sequence
    for a, b in zip(seq, seq[1:]):
        assert b > a or b == 1.0
    stag = 0
    for p in res.passes:
        stag = 0 if p.result.q_best >= p.q_ex else stag + 1
        assert p.stagnation == stag
    assert (res.termination == "max_stagnation") == (res.passes[-1].stagnation == max_stag)
    assert res.q_best == max(p.result.q_best for p in res.passes)
    assert res.total_iterations <= len(res.passes) * inner.max_iterations
    assert len(res.passes) <= max_stag + math.ceil((cfg.q_target - q_init) / step)
