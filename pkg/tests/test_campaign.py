import json

import pytest

from trafficrv import fixtures
from trafficrv.campaign import (
    PROFILES,
    CampaignConfig,
    CampaignError,
    class_members,
    emit_reports,
    find_junction,
    format_matrix,
    run_campaign,
    table_csv,
    table_json,
)
from trafficrv.semantic_state import read_trace
from trafficrv.simulator import FaultConfig


@pytest.fixture(scope="module")
def stop_map():
    return fixtures.four_way_stop()


def test_find_junction_by_id_or_kind(stop_map):
    assert find_junction(stop_map, "J0") == "J0"
    assert find_junction(stop_map, "all_way_stop") == "J0"
    with pytest.raises(CampaignError, match="no traffic_light"):
        find_junction(stop_map, "traffic_light")
    with pytest.raises(CampaignError, match="ambiguous"):
        find_junction(fixtures.two_stop_junctions(), "all_way_stop")
    with pytest.raises(CampaignError, match="unknown"):
        find_junction(stop_map, "roundabout")


def test_class_members_are_the_four_rotations():
    members = class_members("0d2-1d1-2d1-3d1", 4)
    assert [m.key for _, m in members] == ["0d2-1d1-2d1-3d1", "0d1-1d2-2d1-3d1", "0d1-1d1-2d2-3d1", "0d1-1d1-2d1-3d2"]


def test_empty_campaign_gives_header_only(stop_map):
    table = run_campaign(CampaignConfig(stop_map, classes=[]))
    assert table_csv(table) == "class,scenario,config,p1,p2,p3\n"
    assert not table.any_fail


@pytest.fixture(scope="module")
def small_table(stop_map):
    cfg = CampaignConfig(
        stop_map,
        classes=["0d2-1d1-2d1-3d1"],
        configs=["A", "C"],
        properties=["builtin:p1"],
        faults=FaultConfig.from_names(["i1"]),
    )
    return cfg, run_campaign(cfg)


def test_campaign_rows_and_lookup(small_table):
    _, table = small_table
    assert len(table.rows) == 8
    row = table.lookup("0d2-1d1-2d1-3d1", 2, "C")
    assert row.scenario == "0d1-1d1-2d2-3d1"
    with pytest.raises(KeyError):
        table.lookup("0d2-1d1-2d1-3d1", 4, "C")


def test_campaign_output_is_byte_stable(small_table):
    cfg, table = small_table
    again = run_campaign(cfg)
    assert table_csv(again) == table_csv(table)
    assert table_json(again) == table_json(table)


def test_failures_come_with_diagnostics(small_table):
    _, table = small_table
    assert table.lookup("0d2-1d1-2d1-3d1", 0, "A").cell("p1") == "Fail"
    diag = next(d for d in table.diagnostics if d["config"] == "A")
    assert diag["property"] == "p1"
    assert diag["after"]["tick"] == diag["witness_tick"]
    assert diag["before"]["tick"] == diag["witness_tick"] - 1
    assert set(diag["witness_binding"]) == {"a", "b"}


def test_json_report_round_trips(small_table, tmp_path):
    _, table = small_table
    csv_path, json_path = emit_reports(table, str(tmp_path / "out"))
    data = json.loads(open(json_path).read())
    assert data["properties"] == ["p1"]
    assert len(data["rows"]) == 8
    assert data["rows"][0]["verdicts"]["p1"]["verdict"] == table.rows[0].cell("p1")
    assert open(csv_path).read() == table_csv(table)
    assert "0d2-1d1-2d1-3d1" in format_matrix(table)


def test_unwritable_report_directory(small_table, tmp_path):
    _, table = small_table
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(CampaignError, match="cannot create"):
        emit_reports(table, str(blocker / "out"))


def test_infeasible_speeds_are_marked(stop_map):
    cfg = CampaignConfig(
        stop_map,
        classes=["0d2-1d1-2d1-3d1"],
        configs=["fast"],
        properties=["builtin:p1"],
        grid={"fast": ((0.3,) * 4, (10.0,) * 4)},
    )
    table = run_campaign(cfg)
    assert {r.cell("p1") for r in table.rows} == {"infeasible"}
    assert "infeasible" in table_json(table)


def test_grid_must_match_the_junction():
    model = fixtures.three_way_stop()
    cfg = CampaignConfig(model, classes=["0d1-1d1-2d1"], configs=["C"], properties=["builtin:p1"])
    with pytest.raises(CampaignError, match="3-arm"):
        run_campaign(cfg)


def test_traces_are_written_and_readable(stop_map, tmp_path):
    cfg = CampaignConfig(
        stop_map, classes=["0d2-1d1-2d1-3d1"], configs=["C"], properties=["builtin:p1"], trace_dir=str(tmp_path)
    )
    run_campaign(cfg)
    files = sorted(p.name for p in tmp_path.iterdir())
    assert len(files) == 4 and files[0].endswith("_C.jsonl")
    with open(tmp_path / files[0]) as fh:
        run = read_trace(fh, stop_map.graph)
    assert run.states[-1].agents[0].finished


def test_profiles_build_configs(stop_map):
    p = PROFILES["stop-asymmetric"]
    faults = p.faults(["i1", "i2"])
    assert faults.i1_ticks == p.i1_ticks and faults.zone_bounds == p.zone_bounds
    assert p.params(stop_map.speed_limit).aggression == 2
    assert p.scheduler.min_stop == 2.0
