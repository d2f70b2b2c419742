"""Wire counts, relative tables, and response-time comparisons."""

from __future__ import annotations

import pytest

from cscp.core import UnitRef
from cscp.errors import ConfigError
from cscp.fixtures import get_panel
from cscp.metrics import relative_metrics, response_time_table, wire_counts
from cscp.simulate import SetUnit, TimeModelParams


class TestWireCounts:
    def test_single_channel_one_each(self):
        assert wire_counts(get_panel("single"), 192) == (1, 1)

    def test_soyuz_csd(self):
        assert wire_counts(get_panel("csd"), 192) == (40, 28)

    def test_expanded_field_pays_per_unit_signal_lines(self):
        assert wire_counts(get_panel("csf"), 192) == (40, 192)

    def test_multichannel_pays_everywhere(self):
        assert wire_counts(get_panel("conventional"), 192) == (384, 192)

    def test_wire_dominance(self):
        for n in (100, 192, 400):
            mm = wire_counts(get_panel("csd"), n)
            exp = wire_counts(get_panel("csf"), n)
            mc = wire_counts(get_panel("conventional"), n)
            assert exp[1] > mm[1]
            assert mc[0] > exp[0]


class TestRelativeMetrics:
    def _rows(self):
        specs = [get_panel("conventional"), get_panel("csf"), get_panel("csd")]
        return relative_metrics(specs, 192, baseline="csd")

    def test_baseline_row_is_exactly_unity(self):
        row = next(r for r in self._rows() if r.spec_id == "csd")
        assert (row.nprkl, row.nprsl, row.g, row.s_area, row.w) == (1.0, 1.0, 1.0, 1.0, 1.0)

    def test_baseline_is_rowwise_minimum(self):
        for row in self._rows():
            assert row.nprkl >= 1.0
            assert row.nprsl >= 1.0
            assert row.g >= 1.0
            assert row.s_area >= 1.0
            assert row.w >= 1.0

    def test_signal_wire_ratio_multichannel(self):
        row = next(r for r in self._rows() if r.spec_id == "conventional")
        assert row.nprsl == pytest.approx(192 / 28)

    def test_unknown_baseline_rejected(self):
        with pytest.raises(ConfigError):
            relative_metrics([get_panel("csd")], 192, baseline="nope")

    def test_determinism(self):
        assert self._rows() == self._rows()


class TestResponseTimeTable:
    def test_empty_tasks_empty_table(self):
        cells = response_time_table([get_panel("csd")], [], TimeModelParams(), 192)
        assert cells == []

    def test_matrix_parity_flags(self):
        specs = [get_panel("mm100"), get_panel("csf100"), get_panel("addr100")]
        tasks = [SetUnit(UnitRef(i, i), True) for i in range(5)]
        cells = response_time_table(specs, tasks, TimeModelParams(), 100)
        assert all(c.near_minimum for c in cells)

    def test_single_channel_not_near_minimum(self):
        specs = [get_panel("mm100"), get_panel("single")]
        tasks = [SetUnit(UnitRef(4, 4), True)]
        cells = response_time_table(specs, tasks, TimeModelParams(), 100)
        slow = next(c for c in cells if c.spec_id == "single")
        assert not slow.near_minimum
