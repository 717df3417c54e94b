"""Тесты моделей устройств Мермина."""

import math

import numpy as np
import pytest

from processors.errors import ContractViolationError, InvalidInputError
from processors.mermin_devices import (
    CONSTRAINT_A_CONSTANT,
    DeterministicLHV,
    HonestGHZ,
    MemoryAdversary,
    MerminInput,
    MerminOutput,
    NoisyHonest,
    Transcript,
    TranscriptEntry,
    brute_force_classical_max,
    encode_setting,
    estimate_mermin,
    lhv_pass_pattern,
    parse_device_spec,
    passes_test,
    respond,
)
from utils.rng import master_stream, trial_stream


@pytest.mark.parametrize("symbol, label", [(0, "111"), (1, "100"), (2, "010"), (3, "001")])
def test_encode_setting(symbol, label):
    inp = encode_setting(symbol)
    assert inp.label == label
    assert inp.setting == symbol


def test_encode_setting_rejects_symbol():
    with pytest.raises(InvalidInputError):
        encode_setting(4)


def test_invalid_input_rejected():
    with pytest.raises(ContractViolationError):
        MerminInput(0, 0, 0)
    with pytest.raises(ContractViolationError):
        MerminInput(1, 1, 0)


def test_passes_test():
    assert passes_test(encode_setting(0), MerminOutput(1, 0, 0))
    assert passes_test(encode_setting(1), MerminOutput(0, 0, 0))
    assert not passes_test(encode_setting(1), MerminOutput(1, 0, 0))
    assert not passes_test(encode_setting(0), MerminOutput(0, 0, 0))


def test_honest_device_always_passes():
    rng = np.random.default_rng(1)
    device = HonestGHZ()
    for trial in range(10 ** 4):
        inp = encode_setting(trial % 4)
        assert passes_test(inp, respond(device, inp, (), rng))


@pytest.mark.slow
def test_honest_device_passes_every_uniform_trial():
    seed = 20140101
    trials = 10 ** 5
    device = HonestGHZ()
    for trial, symbol in enumerate(master_stream(seed).integers(0, 4, size=trials)):
        inp = encode_setting(int(symbol))
        assert passes_test(inp, respond(device, inp, (), trial_stream(seed, trial)))
    stats = estimate_mermin(device, trials, master_stream(seed + 1))
    assert stats.v == 1.0


def test_honest_output_a_is_uniform():
    rng = np.random.default_rng(2)
    trials = 10 ** 5
    inp = encode_setting(0)
    zeros = sum(1 - respond(HonestGHZ(), inp, (), rng).a for _ in range(trials))
    assert abs(zeros / trials - 0.5) <= 5 * math.sqrt(0.25 / trials)


def test_lhv_strategy_two():
    strategy = DeterministicLHV(2)
    assert strategy.describe() == "A=const0, B=const0, C=id"
    assert lhv_pass_pattern(strategy) == (True, True, True, False)
    with pytest.raises(InvalidInputError):
        DeterministicLHV(64)


def test_classical_maximum():
    best, maximizers = brute_force_classical_max()
    assert best == 0.75
    assert len(maximizers) == 32
    constrained, constrained_maximizers = brute_force_classical_max(CONSTRAINT_A_CONSTANT)
    assert constrained == 0.75
    assert len(constrained_maximizers) == 16
    for index in range(64):
        assert sum(lhv_pass_pattern(DeterministicLHV(index))) <= 3


def test_noisy_failure_rate():
    mu = 0.1
    rng = np.random.default_rng(3)
    device = NoisyHonest(mu)
    trials = 10 ** 4
    failures = 0
    for trial in range(trials):
        inp = encode_setting(trial % 4)
        failures += not passes_test(inp, respond(device, inp, (), rng))
    assert abs(failures / trials - mu) <= 5 * math.sqrt(mu * (1 - mu) / trials)


@pytest.mark.slow
@pytest.mark.parametrize("mu", [0.01, 0.1, 0.3])
def test_noisy_failure_rate_uniform_inputs(mu):
    seed = 31
    trials = 10 ** 5
    device = NoisyHonest(mu)
    failures = 0
    for trial, symbol in enumerate(master_stream(seed).integers(0, 4, size=trials)):
        inp = encode_setting(int(symbol))
        failures += not passes_test(inp, respond(device, inp, (), trial_stream(seed, trial)))
    assert abs(failures / trials - mu) <= 5 * math.sqrt(mu * (1 - mu) / trials)


def test_pin_zero_adversary_fails_only_on_001():
    device = parse_device_spec("adversary:pin-zero")
    history = (TranscriptEntry(0, encode_setting(0), MerminOutput(1, 0, 0)),)
    for symbol in range(4):
        inp = encode_setting(symbol)
        out = respond(device.fresh(), inp, history, None)
        assert out.a == 1
        assert passes_test(inp, out) == (symbol != 3)


def test_memory_adversary_is_stateful():
    device = parse_device_spec("adversary:copy-last")
    assert isinstance(device, MemoryAdversary)
    assert device.stateful
    assert device.fresh() is not device
    assert not HonestGHZ().stateful
    device.respond(encode_setting(0), (), None)
    assert device.memory["seen"] == 1
    assert device.fresh().memory == {}


@pytest.mark.parametrize(
    "text, kind",
    [("ghz", HonestGHZ), ("lhv:5", DeterministicLHV), ("noisy:0.01", NoisyHonest), ("adversary:classical", MemoryAdversary)],
)
def test_parse_device_spec(text, kind):
    assert isinstance(parse_device_spec(text), kind)


@pytest.mark.parametrize("text", ["lhv:99", "lhv:x", "noisy:2", "adversary:none", "quantum"])
def test_parse_device_spec_rejects(text):
    with pytest.raises(InvalidInputError):
        parse_device_spec(text)


def test_transcript_requires_increasing_ids():
    transcript = Transcript()
    entry = TranscriptEntry(3, encode_setting(0), MerminOutput(0, 0, 1))
    transcript.append(entry)
    with pytest.raises(ContractViolationError):
        transcript.append(TranscriptEntry(3, encode_setting(0), MerminOutput(0, 0, 1)))
    view = transcript.view()
    assert isinstance(view, tuple)
    assert view == (entry,)
    assert transcript.to_json_lines() == [{"device": 3, "input": "111", "output": [0, 0, 1]}]


def test_estimate_mermin():
    rng = np.random.default_rng(4)
    honest = estimate_mermin(HonestGHZ(), 2000, rng)
    assert honest.v == 1.0
    assert honest.w == 0.0
    cheater = estimate_mermin(DeterministicLHV(2), 2000, rng)
    assert cheater.cond_probs == (1.0, 1.0, 1.0, 0.0)
    assert cheater.v == pytest.approx(0.75)
