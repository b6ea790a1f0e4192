import math

import pytest

from core.channel_model import Case
from core.errors import ConfigurationError, DimensionMismatchError, ParseError
from cli.sweep_runner import (
    CSV_HEADER,
    STATUS_INFEASIBLE,
    STATUS_MISMATCH,
    STATUS_OK,
    SweepConfig,
    SweepRow,
    SweepTable,
    emit_csv,
    load_sweep_config,
    parse_csv,
    rows_equal,
    run_sweep,
    sweep_config_from_dict,
)

ANALYTIC = {"M": 1, "K": 1, "sigma2": 1.0, "caps": [2.0], "H": [[[1.0, 0.0]]]}


def analytic_sweep(rates, cases=("I",), **kwargs):
    kwargs.setdefault("mark_boundary", False)
    return SweepConfig(rates=rates, cases=cases, instance_data=ANALYTIC, **kwargs)


class RecordingLogger:
    def __init__(self):
        self.points = []

    def log_point(self, case, rate_target, status, ul_power, dl_power, **extra):
        self.points.append((case, rate_target, status, extra))


class TestSweepConfig:
    def test_rates_and_cases_are_normalized(self):
        config = SweepConfig(rates=[0, 1], cases=["iv", Case.I])
        assert config.rates == (0.0, 1.0)
        assert config.cases == (Case.IV, Case.I)

    @pytest.mark.parametrize(
        "rates",
        [[], [1.0, 0.5], [0.5, 0.5], [-0.1, 1.0], [math.inf]],
    )
    def test_bad_rate_grids(self, rates):
        with pytest.raises(ConfigurationError):
            SweepConfig(rates=rates, cases=["I"])

    def test_bad_cases(self):
        with pytest.raises(ConfigurationError):
            SweepConfig(rates=[1.0], cases=[])
        with pytest.raises(ConfigurationError):
            SweepConfig(rates=[1.0], cases=["I", "i"])
        with pytest.raises(ConfigurationError):
            SweepConfig(rates=[1.0], cases=["V"])

    def test_order_size_checked_against_instance(self):
        config = SweepConfig(rates=[1.0], cases=["II"], decode_order=(1, 0))
        instance = config.build_instance()
        with pytest.raises(DimensionMismatchError):
            config.strategy(Case.II, instance)

    def test_rate_grid_form(self):
        config = sweep_config_from_dict(
            {"seed": 7, "rate_grid": {"start": 0.25, "stop": 2.0, "step": 0.25}, "cases": "I, III"}
        )
        assert config.rates == (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
        assert config.cases == (Case.I, Case.III)

    def test_one_based_orders(self):
        config = sweep_config_from_dict(
            {"rates": [1.0], "orders": {"decode": [3, 1, 2], "decompress": "natural"}}
        )
        assert config.decode_order == (2, 0, 1)
        assert config.decompress_order is None

    def test_inline_instance(self):
        config = sweep_config_from_dict({**ANALYTIC, "rates": [1.0]})
        assert config.seed is None
        assert config.build_instance().num_relays == 1

    def test_shipped_sweep_file(self):
        config = load_sweep_config("configs/reference_sweep.yaml")
        assert len(config.rates) == 8
        assert config.cases == tuple(Case)
        assert config.seed == 7

    def test_yaml_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("seed: 7\nrates: [1.0, 2.0\ncases: [I]\n")
        with pytest.raises(ParseError) as info:
            load_sweep_config(path)
        assert info.value.line is not None
        assert str(path) in str(info.value)

    def test_missing_rates(self):
        with pytest.raises(ParseError):
            sweep_config_from_dict({"seed": 1})

    def test_top_level_must_be_mapping(self):
        with pytest.raises(ParseError):
            sweep_config_from_dict([1, 2, 3])


class TestCsv:
    def test_single_row(self, tmp_path):
        table = SweepTable([SweepRow("I", 1.0, 2.0, 2.0, 0.0, 0.0, 0.0, STATUS_OK)])
        path = emit_csv(table, tmp_path / "out.csv")
        lines = path.read_bytes().split(b"\n")
        assert lines[0].decode() == ",".join(CSV_HEADER)
        assert lines[1] == b"I,1,2,2,0,0,0,ok"
        assert lines[2] == b""

    def test_infeasible_powers_are_empty(self, tmp_path):
        table = SweepTable([SweepRow("III", 3.0, status=STATUS_INFEASIBLE)])
        path = emit_csv(table, tmp_path / "out.csv")
        assert path.read_text().splitlines()[1] == "III,3,,,,,,infeasible"

    def test_twelve_significant_digits(self, tmp_path):
        table = SweepTable([SweepRow("I", 0.25, 1.0 / 3.0, 1.0 / 3.0, 1e-15, 0.0, 0.0)])
        text = emit_csv(table, tmp_path / "out.csv").read_text()
        assert "0.333333333333,0.333333333333,1e-15" in text

    def test_empty_table(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_csv(SweepTable(), tmp_path / "out.csv")

    def test_parse_back(self, tmp_path):
        table = SweepTable(
            [
                SweepRow("I", 1.0, 2.0, 2.0000000001, 5e-11, 1e-12, 0.0),
                SweepRow("II", 3.0, status=STATUS_INFEASIBLE),
            ]
        )
        parsed = parse_csv(emit_csv(table, tmp_path / "out.csv"))
        assert rows_equal(table, parsed)
        assert math.isnan(parsed.rows[1].ul_power)

    def test_parse_rejects_foreign_header(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ParseError):
            parse_csv(path)

    def test_rows_equal_detects_differences(self):
        a = SweepTable([SweepRow("I", 1.0, 2.0, 2.0)])
        assert not rows_equal(a, SweepTable([SweepRow("I", 1.0, 2.1, 2.0)]))
        assert not rows_equal(a, SweepTable([SweepRow("II", 1.0, 2.0, 2.0)]))
        assert not rows_equal(a, SweepTable())


class TestTableStatus:
    def test_all_infeasible(self):
        table = SweepTable([SweepRow("I", 3.0, status=STATUS_INFEASIBLE)])
        assert table.all_infeasible
        assert not SweepTable().all_infeasible

    def test_mismatch(self):
        table = SweepTable([SweepRow("I", 1.0), SweepRow("I", 2.0, status=STATUS_MISMATCH)])
        assert table.has_mismatch
        assert not table.all_infeasible

    def test_sorted_by_case_then_rate(self):
        table = SweepTable(
            [SweepRow("IV", 0.5), SweepRow("I", 1.0), SweepRow("II", 0.5), SweepRow("I", 0.5)]
        ).sorted()
        assert [(r.case, r.rate_target) for r in table.rows] == [
            ("I", 0.5),
            ("I", 1.0),
            ("II", 0.5),
            ("IV", 0.5),
        ]


class TestRunSweep:
    def test_analytic_grid(self):
        table = run_sweep(analytic_sweep([0.0, 1.0, 3.0]))
        zero, one, three = table.rows
        assert zero.ul_power == 0.0 and zero.dl_power == 0.0
        assert one.status == STATUS_OK
        assert one.ul_power == pytest.approx(2.0, rel=1e-9)
        assert one.dl_power == pytest.approx(2.0, rel=1e-9)
        assert three.status == STATUS_INFEASIBLE
        assert math.isnan(three.ul_power) and math.isnan(three.dl_power)

    def test_every_point_logged(self):
        run_logger = RecordingLogger()
        run_sweep(analytic_sweep([0.5, 1.0], cases=("I", "II")), run_logger=run_logger)
        assert len(run_logger.points) == 4
        assert {p[0] for p in run_logger.points} == {"I", "II"}
        assert all("rel_gap" in p[3] for p in run_logger.points)

    def test_boundary_is_marked_only_near_the_edge(self):
        table = run_sweep(analytic_sweep([1.0, 3.0], mark_boundary=True))
        assert not any(row.near_boundary for row in table.rows)

    def test_seeded_sweep(self):
        config = SweepConfig(rates=[0.25, 0.5, 1.0], cases=["II", "I"], seed=7, mark_boundary=False)
        table = run_sweep(config)
        assert [r.case for r in table.rows] == ["I"] * 3 + ["II"] * 3
        for case in ("I", "II"):
            rows = table.for_case(case)
            assert all(r.status == STATUS_OK for r in rows)
            powers = [r.ul_power for r in rows]
            assert powers == sorted(powers)
            for row in rows:
                assert row.dl_power == pytest.approx(row.ul_power, rel=1e-8)
        # successive cancellation never needs more power than treating interference as noise
        for tin, sic in zip(table.for_case("I"), table.for_case("II")):
            assert sic.ul_power <= tin.ul_power * (1 + 1e-9)

    def test_rerun_is_byte_identical(self, tmp_path):
        config = SweepConfig(rates=[0.5, 1.0], cases=["I", "II"], seed=7, mark_boundary=False)
        first = emit_csv(run_sweep(config), tmp_path / "a.csv").read_bytes()
        second = emit_csv(run_sweep(config), tmp_path / "b.csv").read_bytes()
        assert first == second

    def test_workers_do_not_change_rows(self):
        serial = SweepConfig(rates=[0.5, 1.0], cases=["I", "II"], seed=7, mark_boundary=False)
        threaded = SweepConfig(
            rates=[0.5, 1.0], cases=["I", "II"], seed=7, mark_boundary=False, workers=3
        )
        assert rows_equal(run_sweep(serial), run_sweep(threaded))

    def test_wyner_ziv_curve_below_independent(self):
        config = SweepConfig(rates=[0.5, 1.0], cases=["I", "III"], seed=7, mark_boundary=False)
        table = run_sweep(config)
        for independent, wyner_ziv in zip(table.for_case("I"), table.for_case("III")):
            assert wyner_ziv.status == STATUS_OK
            assert wyner_ziv.ul_power <= independent.ul_power * (1 + 1e-9)
            assert wyner_ziv.dl_power == pytest.approx(wyner_ziv.ul_power, rel=1e-4)
