"""Тесты оркестрации экспериментов и таблиц оценок."""

import json
import logging
import math

import pytest

from config import Config
from logger import set_level
from processors.bounds_stats import scaling_factor
from processors.errors import ConfigError
from processors.experiment import (
    BoundsParams,
    ExperimentConfig,
    ProtocolSection,
    bounds_table,
    build_protocol,
    emit_bound_tables,
    load_curve,
    load_experiment_config,
    parse_experiment_config,
    resolve_family,
    run_experiment,
    run_trials,
    sweep_table,
)
from processors.hash_families import build_table_family
from processors.mermin_devices import HonestGHZ
from processors.protocol_engine import ProtocolConfig
from processors.source_models import BlockSourceOracle, OutcomeDistribution, SourceSpec


def _experiment(family_file, **protocol):
    section = ProtocolSection(**{"n": 2, "rounds": 3, "family_file": family_file, **protocol})
    return ExperimentConfig(seed=99, trials=300, threads=2, protocol=section)


def test_honest_experiment(family_file):
    report = run_experiment(_experiment(family_file))
    aggregates = report.aggregates
    assert aggregates["trials"] == 300
    assert aggregates["aborted"] == 0
    assert aggregates["errors"] == 0
    assert aggregates["bits"] == 300
    assert [row["trial"] for row in report.rows] == list(range(300))
    assert report.analytic["devices_total"] == 6
    assert report.json_records()[-1]["summary"]["settings"]["seed"] == 99


def test_results_independent_of_thread_count(family_file):
    single = _experiment(family_file, device="noisy:0.1")
    single.threads = 1
    pooled = _experiment(family_file, device="noisy:0.1")
    pooled.threads = 4
    assert run_experiment(single).rows == run_experiment(pooled).rows


def test_classical_experiment_abort_rate(family_file):
    config = _experiment(family_file, device="lhv:2", source="uniform", rounds=4)
    config.trials = 2000
    report = run_experiment(config)
    # Пара функций 0123 и 3210: раунд проходит только при x = 1 или x = 2
    expected = 0.5 ** 4
    rate = report.aggregates["non_abort_rate"]
    assert abs(rate - expected) <= 5 * math.sqrt(expected * (1 - expected) / config.trials)


def test_analytic_columns_with_curve(family_file):
    config = _experiment(family_file, fcurve_file=Config.FCURVE_PATH, epsilon=0.1)
    report = run_experiment(config)
    assert report.analytic["f"] == 0.97
    assert report.analytic["f_power"] == pytest.approx(0.97 ** 3)
    assert report.analytic["threshold"] == 0


def test_source_violations_become_error_rows(identity_family):
    def strategy(history, state):
        return OutcomeDistribution.point_mass(2, 1) if history else OutcomeDistribution.uniform(2, range(4))

    oracle = BlockSourceOracle(SourceSpec(2, 2.0), strategy)
    protocol = ProtocolConfig(0.1, 0.01, [HonestGHZ()], family=identity_family, rounds=3)
    rows = run_trials(protocol, oracle, None, trials=5, seed=1, threads=2)
    assert len(rows) == 5
    assert all(row["error"] and row["bit"] is None for row in rows)


def test_worker_warnings_keep_log_level(identity_family):
    def strategy(history, state):
        return OutcomeDistribution.point_mass(2, 1) if history else OutcomeDistribution.uniform(2, range(4))

    experiment_logger = logging.getLogger("GHZExtractor.experiment")
    handlers = list(experiment_logger.handlers)
    set_level("DEBUG")
    try:
        oracle = BlockSourceOracle(SourceSpec(2, 2.0), strategy)
        protocol = ProtocolConfig(0.1, 0.01, [HonestGHZ()], family=identity_family, rounds=3)
        run_trials(protocol, oracle, None, trials=8, seed=1, threads=4)
        assert experiment_logger.level == logging.DEBUG
        assert experiment_logger.handlers == handlers
    finally:
        set_level(Config.LOG_LEVEL)


def test_resolve_family_uses_cache(isolated_cache):
    first = resolve_family(2, 1 / 16, seed=4, witness_limit=64)
    assert not first.lazy
    assert isolated_cache.get(2, 1 / 16, 4, 64) is not None
    second = resolve_family(2, 1 / 16, seed=4, witness_limit=64)
    assert [h.table().tolist() for h in first.members] == [h.table().tolist() for h in second.members]


def test_build_one_shot_protocol():
    config = ExperimentConfig(protocol=ProtocolSection(mode="one-shot", n=4, source="uniform"))
    protocol, oracle, dist = build_protocol(config)
    assert oracle is None
    assert len(protocol.devices) == 2
    assert len(dist.probs) == 16


def test_config_file_parsing(tmp_path, family_file):
    path = tmp_path / "experiment.json"
    payload = {
        "seed": 5,
        "trials": 10,
        "protocol": {"mode": "robust", "rounds": 4, "threshold": 1, "family_file": family_file.name},
        "output": {"json": "out/result.jsonl"},
    }
    path.write_text(json.dumps(payload), encoding="utf-8")
    config = load_experiment_config(path)
    config.validate()
    assert config.protocol.family_file == family_file.resolve()
    assert config.output.json == (tmp_path / "out" / "result.jsonl").resolve()
    assert config.protocol.threshold == 1


def test_config_syntax_error_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "seed": ,\n}', encoding="utf-8")
    with pytest.raises(ConfigError, match="строка 2"):
        load_experiment_config(path)


@pytest.mark.parametrize(
    "payload, field",
    [
        ({"trials": "many"}, "trials"),
        ({"protocol": {"epsilon": "big"}}, "protocol.epsilon"),
        ({"colour": 1}, "colour"),
        ({"protocol": {"rounds": 2.5}}, "protocol.rounds"),
    ],
)
def test_config_field_errors(tmp_path, payload, field):
    with pytest.raises(ConfigError, match=field):
        parse_experiment_config(payload, tmp_path)


@pytest.mark.parametrize(
    "protocol, field",
    [
        ({"rounds": None}, "protocol.rounds"),
        ({"mode": "robust", "rounds": 3}, "protocol.threshold"),
        ({"epsilon": 0.7, "rounds": 3}, "protocol.epsilon"),
        ({"rounds": 0}, "protocol.rounds"),
    ],
)
def test_validation_names_field(protocol, field):
    config = ExperimentConfig(protocol=ProtocolSection(**protocol))
    with pytest.raises(ConfigError, match=field):
        config.validate()


def test_bounds_table_matches_formulas():
    curve = load_curve(None)
    rows = bounds_table(curve, 1e-6, 10)
    assert len(rows) == len(curve.points)
    for row, (eps, v) in zip(rows, curve.points):
        assert row["epsilon"] == eps
        assert row["f"] == v
        assert abs(row["ratio"] - row["s"]) <= row["s"] / row["l"] + 1e-9
        assert row["s"] == pytest.approx(scaling_factor(v))
        assert row["chernoff_exact"] <= row["chernoff"] + 1e-12
        assert row["hoeffding_exact"] <= row["hoeffding"] + 1e-12


def test_sweep_table():
    rows = sweep_table(0.9, 100, 10)
    assert [row["l"] for row in rows] == list(range(1, 101))
    chernoff = [row["chernoff"] for row in rows]
    assert all(b < a for a, b in zip(chernoff, chernoff[1:]))


def test_sweep_empirical_column():
    trials = 400
    rows = sweep_table(0.9, 4, 1, empirical_trials=trials, seed=3)
    for row in rows:
        expected = 0.75 ** row["l"]
        assert row["T"] == 0
        assert abs(row["empirical_escape"] - expected) <= 5 * math.sqrt(expected * (1 - expected) / trials)


def test_emit_bound_tables():
    params = BoundsParams(curve=load_curve(None), delta=1e-3, m=2, sweep_rounds=10)
    tables = emit_bound_tables(params)
    assert set(tables) == {"bounds", "sweep"}
    assert len(tables["sweep"]) == 10


def test_table_family_file_roundtrip_in_protocol(family_file):
    config = _experiment(family_file)
    protocol, oracle, _ = build_protocol(config)
    assert protocol.family.m_count == 2
    assert [h.values for h in protocol.family.members] == [
        h.values for h in build_table_family(2, [[0, 1, 2, 3], [3, 2, 1, 0]]).members
    ]
    assert oracle.spec.n == 2
