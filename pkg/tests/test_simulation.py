import json

import pytest

from ecoloop.errors import UnmonitoredParameterError, WorkloadError
from ecoloop.model import propagate_selection, validate_configuration
from ecoloop.profiles import energy_at, output_at
from ecoloop.rules import Condition, EcaRule, OP_GT, OP_LE
from ecoloop.model import ReconfigurationAction
from ecoloop.simulation import (
    Phase,
    RuntimeParams,
    WorkloadTrace,
    generate_workload,
    oracle_lower_bound,
    reference_workload,
    report,
    run_adaptive,
    run_static,
)

LOCAL_LAME = {"Store.Local", "Compression.LAME"}


def config_of(model, ids):
    return propagate_selection(model, ids).configuration


@pytest.fixture(scope="module")
def local_lame(model):
    return config_of(model, LOCAL_LAME)


class TestGenerateWorkload:
    def test_constant_phase(self):
        trace = generate_workload([Phase.const(20, 4.0)], seed=1)
        assert len(trace.events) == 20
        assert all(e.size == 4.0 for e in trace.events)
        assert [e.seq for e in trace.events] == list(range(1, 21))

    def test_same_seed_same_trace(self):
        spec = [Phase.const(5, 4.0), Phase.uniform(10, 96, 160)]
        assert generate_workload(spec, seed=9) == generate_workload(spec, seed=9)

    def test_reference_phase2_mean_inside_bounds(self):
        trace = reference_workload()
        phase2 = [e.size for e in trace.events[20:40]]
        assert len(trace.events) == 140
        assert all(96.0 <= s <= 160.0 for s in phase2)
        assert 96.0 <= sum(phase2) / len(phase2) <= 160.0

    def test_out_of_range_size_rejected(self):
        with pytest.raises(WorkloadError, match="outside profile range"):
            generate_workload([Phase.const(1, 1024.0)], seed=1)

    def test_jsonl_roundtrip(self, tmp_path):
        trace = reference_workload()
        path = trace.save_jsonl(tmp_path / "w.jsonl")
        assert WorkloadTrace.load_jsonl(path) == trace


class TestRunStatic:
    def test_single_event_charges_codec_energy_only(self, model, repo, local_lame):
        trace = WorkloadTrace(
            events=(type(reference_workload().events[0])(seq=1, size=128.0),),
            storage_capacity=4096.0)
        result = run_static(trace, local_lame, repo, model)
        lame = repo.get("Compression", "Compression.LAME")
        totals = result.ledger.totals()
        assert totals["grand_total_j"] == energy_at(lame, 128.0)
        assert totals["overhead_j"] == 0.0
        assert totals["by_concern"] == {"Compression": energy_at(lame, 128.0)}

    def test_empty_trace_zero_ledger(self, model, repo, local_lame):
        trace = WorkloadTrace(events=(), storage_capacity=4096.0)
        result = run_static(trace, local_lame, repo, model)
        assert result.ledger.grand_total == 0.0
        assert result.overflow_seq is None

    def test_reference_local_lame_overflows_where_arithmetic_says(
            self, model, repo, local_lame):
        trace = reference_workload()
        lame = repo.get("Compression", "Compression.LAME")
        used = 0.0
        expected_overflow = None
        for event in trace.events:
            stored = output_at(lame, "output_size", event.size)
            if used + stored > trace.storage_capacity:
                expected_overflow = event.seq
                break
            used += stored
        assert expected_overflow is not None  # the workload is sized to overflow
        result = run_static(trace, local_lame, repo, model)
        assert result.overflow_seq == expected_overflow
        assert len(result.ledger.entries) == expected_overflow - 1

    def test_remote_static_never_overflows(self, model, repo):
        remote = config_of(model, {"Store.Remote", "Compression.LAME"})
        result = run_static(reference_workload(), remote, repo, model)
        assert result.overflow_seq is None
        assert len(result.ledger.entries) == 140
        assert "Communication" in result.ledger.totals()["by_concern"]


class TestRunAdaptive:
    def test_reference_adaptation_sequence(self, model, repo, local_lame,
                                           mediastore_rules):
        result = run_adaptive(reference_workload(), local_lame, mediastore_rules,
                              repo, model)
        entries = result.adaptation_log.entries
        assert len(entries) == 2
        first, second = entries
        assert first.rule == "local-file_size-gt-64"
        assert "Compression.Vorbis" in first.new
        assert second.rule == "local-storage-almost-full"
        assert {"Store.Remote", "Communication", "Compression.Speex"} <= set(second.new)
        assert first.seq < second.seq
        assert result.overflow_seq is None
        assert result.adaptation_log.failures == []

    def test_small_files_never_adapt(self, model, repo, local_lame, mediastore_rules):
        trace = generate_workload([Phase.const(30, 4.0)], seed=3)
        result = run_adaptive(trace, local_lame, mediastore_rules, repo, model)
        assert result.adaptation_log.entries == []
        assert result.final_config == local_lame

    def test_inert_rules_equal_static_plus_monitoring(self, model, repo, local_lame):
        inert = [
            EcaRule(id="never-low", priority=1, event="file_size",
                    condition=Condition(OP_LE, threshold=1.0),
                    action=ReconfigurationAction("bind-variant", "Compression.Vorbis")),
            EcaRule(id="never-high", priority=2, event="file_size",
                    condition=Condition(OP_GT, threshold=1000.0),
                    action=ReconfigurationAction("bind-variant", "Compression.Speex")),
        ]
        trace = generate_workload([Phase.uniform(25, 8, 64)], seed=4)
        adaptive = run_adaptive(trace, local_lame, inert, repo, model)
        static = run_static(trace, local_lame, repo, model)
        assert adaptive.adaptation_log.entries == []
        totals = adaptive.totals()
        assert totals["overhead_j"] == 0.01 * len(trace.events)
        assert totals["grand_total_j"] - totals["overhead_j"] == \
            static.ledger.grand_total

    def test_unmonitored_rule_fails_before_first_event(self, model, repo, local_lame):
        bad = [EcaRule(id="x", priority=0, event="battery_level",
                       condition=Condition(OP_LE, threshold=1.0),
                       action=ReconfigurationAction("bind-variant", "Compression.Vorbis"))]
        with pytest.raises(UnmonitoredParameterError):
            run_adaptive(reference_workload(), local_lame, bad, repo, model)

    def test_monitoring_overhead_accounting_exact(self, model, repo, local_lame,
                                                  mediastore_rules):
        params = RuntimeParams(monitor_cost_j=0.25, reconfig_cost_j=3.0)
        trace = reference_workload()
        result = run_adaptive(trace, local_lame, mediastore_rules, repo, model, params)
        n_events = len(result.ledger.entries)
        n_reconfigs = len(result.adaptation_log.entries)
        assert result.ledger.totals()["overhead_j"] == 0.25 * n_events
        assert result.reconfig_overhead_j == 3.0 * n_reconfigs
        assert result.overhead_total_j == 0.25 * n_events + 3.0 * n_reconfigs

    def test_every_snapshot_is_valid(self, model, repo, local_lame, mediastore_rules):
        result = run_adaptive(reference_workload(), local_lame, mediastore_rules,
                              repo, model)
        seen = set()
        for entry in result.ledger.entries:
            if entry.config not in seen:
                seen.add(entry.config)
                assert validate_configuration(model, set(entry.config)).ok
        for entry in result.adaptation_log.entries:
            assert validate_configuration(model, set(entry.new)).ok


class TestOracleLowerBound:
    def test_single_event_is_min_over_configurations(self, model, repo):
        trace = WorkloadTrace(
            events=(reference_workload().events[0].__class__(seq=1, size=128.0),),
            storage_capacity=4096.0)
        # independent arithmetic over the six configurations
        candidates = []
        comm = repo.get("Communication", None)
        for codec in ("Compression.LAME", "Compression.Vorbis", "Compression.Speex"):
            profile = repo.get("Compression", codec)
            local = energy_at(profile, 128.0)
            remote = local + energy_at(comm, output_at(profile, "output_size", 128.0))
            candidates.extend([local, remote])
        assert oracle_lower_bound(trace, repo, model) == min(candidates)

    def test_empty_trace(self, model, repo):
        trace = WorkloadTrace(events=(), storage_capacity=4096.0)
        assert oracle_lower_bound(trace, repo, model) == 0.0

    def test_small_files_pick_pointwise_winner(self, model, repo):
        trace = generate_workload([Phase.const(10, 4.0)], seed=2)
        lame = repo.get("Compression", "Compression.LAME")
        assert oracle_lower_bound(trace, repo, model) == \
            pytest.approx(10 * energy_at(lame, 4.0))

    def test_bounds_adaptive_run(self, model, repo, local_lame, mediastore_rules):
        trace = reference_workload()
        adaptive = run_adaptive(trace, local_lame, mediastore_rules, repo, model)
        assert oracle_lower_bound(trace, repo, model) <= adaptive.ledger.energy_total


class TestReportAndInvariants:
    def test_adaptive_beats_static_lame(self, model, repo, local_lame,
                                        mediastore_rules):
        trace = reference_workload()
        adaptive = run_adaptive(trace, local_lame, mediastore_rules, repo, model)
        static = run_static(trace, local_lame, repo, model)
        comparison = report([static, adaptive], ["static-LAME", "adaptive"])
        by_label = {r.label: r for r in comparison.rows}
        assert by_label["adaptive"].grand_total_j < by_label["static-LAME"].grand_total_j
        assert comparison.savings[("static-LAME", "adaptive")] > 0

    def test_self_comparison_zero_savings(self, model, repo, local_lame):
        trace = generate_workload([Phase.const(5, 4.0)], seed=1)
        result = run_static(trace, local_lame, repo, model)
        comparison = report([result, result], ["a", "b"])
        assert comparison.savings[("a", "b")] == 0.0

    def test_adaptive_overhead_fraction_below_one_percent(
            self, model, repo, local_lame, mediastore_rules):
        result = run_adaptive(reference_workload(), local_lame, mediastore_rules,
                              repo, model)
        totals = result.totals()
        assert totals["overhead_j"] / totals["grand_total_j"] < 0.01

    def test_mismatched_traces_rejected(self, model, repo, local_lame):
        a = run_static(generate_workload([Phase.const(5, 4.0)], seed=1),
                       local_lame, repo, model)
        b = run_static(generate_workload([Phase.const(6, 4.0)], seed=1),
                       local_lame, repo, model)
        with pytest.raises(WorkloadError, match="different traces"):
            report([a, b], ["a", "b"])

    def test_ledger_additivity_recomputation(self, model, repo, local_lame,
                                             mediastore_rules):
        result = run_adaptive(reference_workload(), local_lame, mediastore_rules,
                              repo, model)
        import math
        totals = result.ledger.totals()
        energy_sum = 0.0
        for entry in result.ledger.entries:
            for concern in sorted(entry.energy_j):
                energy_sum += entry.energy_j[concern]
        overhead_sum = math.fsum(e.overhead_j for e in result.ledger.entries)
        # same summation scheme as the ledger -> exact float equality
        assert energy_sum + overhead_sum == totals["grand_total_j"]
        assert overhead_sum == totals["overhead_j"]
        # monitoring overhead is a uniform stream: equals cost * count exactly
        assert overhead_sum == 0.01 * len(result.ledger.entries)

    def test_bit_identical_reruns(self, model, repo, local_lame, mediastore_rules):
        trace = reference_workload()
        a = run_adaptive(trace, local_lame, mediastore_rules, repo, model)
        b = run_adaptive(trace, local_lame, mediastore_rules, repo, model)
        assert json.dumps(a.to_json(), sort_keys=True) == \
            json.dumps(b.to_json(), sort_keys=True)

    def test_segment_replay_reproduces_adaptive_energy(self, model, repo, local_lame,
                                                       mediastore_rules):
        trace = reference_workload()
        adaptive = run_adaptive(trace, local_lame, mediastore_rules, repo, model)
        switches = {entry.seq: frozenset(entry.new)
                    for entry in adaptive.adaptation_log.entries}
        # split the trace into segments of constant configuration; the energy
        # is charged under the post-reconfiguration configuration, so a switch
        # at seq s starts its segment at s
        segments = []
        current = local_lame.selected
        start = 0
        events = trace.events
        for i, event in enumerate(events):
            if event.seq in switches:
                if i > start:
                    segments.append((events[start:i], current))
                current = switches[event.seq]
                start = i
        segments.append((events[start:], current))

        from ecoloop.model import Configuration
        replayed = 0.0
        for segment_events, selected in segments:
            segment_trace = WorkloadTrace(events=segment_events,
                                          storage_capacity=trace.storage_capacity)
            static = run_static(segment_trace, Configuration(frozenset(selected)),
                                repo, model)
            assert static.overflow_seq is None
            replayed += static.ledger.energy_total
        assert replayed == pytest.approx(adaptive.ledger.energy_total, rel=1e-12)


class TestRunPreconditions:
    def test_static_rejects_invalid_configuration(self, model, repo):
        from ecoloop.model import Configuration
        bad = Configuration(frozenset({"MediaStore", "Store"}))
        trace = generate_workload([Phase.const(1, 4.0)], seed=1)
        with pytest.raises(WorkloadError, match="not valid"):
            run_static(trace, bad, repo, model)

    def test_adaptive_rejects_unbound_codec(self, model, repo, mediastore_rules):
        from ecoloop.model import Configuration, structural_closure
        no_codec = Configuration(structural_closure(model, {"Store.Local"}))
        trace = generate_workload([Phase.const(1, 4.0)], seed=1)
        with pytest.raises(WorkloadError):
            run_adaptive(trace, no_codec, mediastore_rules, repo, model)
