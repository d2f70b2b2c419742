"""Sequential pulse code: round trips, prefix handling, bijectivity."""

from __future__ import annotations

from cscp.core import ButtonEvent, PanelFamily, PanelSpec, PanelState, UnitRef, press_button
from cscp.fixtures import micro_plant
from cscp.sequential import build_catalog, decode_sequential, encode_sequential


def all_proper_prefixes(encoding):
    return [encoding[:k] for k in range(1, len(encoding))]


class TestRoundTrip:
    def test_single_command_round_trip(self):
        catalog = build_catalog(micro_plant())
        cmd = catalog.commands[1]
        encoded = encode_sequential(cmd, catalog)
        assert decode_sequential(encoded, catalog).command == cmd

    def test_whole_catalog_round_trips(self):
        catalog = build_catalog(micro_plant())
        assert len(catalog.commands) == 10
        for cmd in catalog.commands:
            decoded = decode_sequential(encode_sequential(cmd, catalog), catalog)
            assert decoded.status == "ok"
            assert decoded.command == cmd

    def test_multi_system_catalog_round_trips(self):
        from cscp.core import make_plant

        catalog = build_catalog(make_plant([3, 2, 4]))
        for cmd in catalog.commands:
            decoded = decode_sequential(encode_sequential(cmd, catalog), catalog)
            assert decoded.command == cmd


class TestPrefixes:
    def test_every_proper_prefix_is_incomplete(self):
        # Exhaustive prefix enumeration over the ten-command catalog.
        catalog = build_catalog(micro_plant())
        prefixes = {
            prefix
            for cmd in catalog.commands
            for prefix in all_proper_prefixes(encode_sequential(cmd, catalog))
        }
        assert prefixes  # two-group encodings do have proper prefixes
        for prefix in prefixes:
            assert decode_sequential(prefix, catalog).status == "incomplete"

    def test_unknown_pattern_is_error(self):
        catalog = build_catalog(micro_plant())
        assert decode_sequential((9, 9, 9), catalog).status == "error"
        assert decode_sequential((1, 7), catalog).status == "error"

    def test_prefix_freedom(self):
        catalog = build_catalog(micro_plant())
        encodings = [encode_sequential(c, catalog) for c in catalog.commands]
        assert len(set(encodings)) == len(encodings)  # injective
        for a in encodings:
            for b in encodings:
                if a != b:
                    assert b[: len(a)] != a  # no encoding prefixes another


class TestPanelIntegration:
    def test_pulse_groups_buffer_then_emit(self):
        plant = micro_plant()
        spec = PanelSpec("sc", PanelFamily.SINGLE_CHANNEL)
        state = PanelState(spec)
        r1 = press_button(state, plant, ButtonEvent("digit", digit=3))
        assert r1.outcome == "incomplete"
        assert r1.state.pending_pulses == (3,)
        r2 = press_button(r1.state, plant, ButtonEvent("digit", digit=1))
        assert r2.outcome == "ok"
        assert r2.emissions[0].target == UnitRef(0, 2)
        assert r2.emissions[0].turn_on is True
        assert r2.state.pending_pulses == ()

    def test_garbage_clears_buffer(self):
        plant = micro_plant()
        state = PanelState(PanelSpec("sc", PanelFamily.SINGLE_CHANNEL))
        r = press_button(state, plant, ButtonEvent("digit", digit=9))
        assert r.outcome == "decode_error"
        assert r.state.pending_pulses == ()
