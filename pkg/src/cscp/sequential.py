"""Sequential pulse code for the one-lamp, one-button panel.

Commands travel as gap-terminated pulse groups: the system number (index+1
pulses), the unit number (index+1 pulses), then an action group (1 pulse =
on, 2 = off). Single-system plants drop the constant system group. Every
catalog encoding has the same group count, which makes the code prefix-free
and hand-checkable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import PlantState, UnitRef
from .errors import CscpError

CommandKey = tuple[UnitRef, bool]


@dataclass(frozen=True)
class CommandCatalog:
    """Ordered set of issuable commands with their pulse encodings."""

    commands: tuple[CommandKey, ...]
    multi_system: bool

    def encoding(self, cmd: CommandKey) -> tuple[int, ...]:
        target, turn_on = cmd
        action = 1 if turn_on else 2
        if self.multi_system:
            return (target.system_id + 1, target.unit_id + 1, action)
        return (target.unit_id + 1, action)

    def __contains__(self, cmd: CommandKey) -> bool:
        return cmd in self.commands


def build_catalog(plant: PlantState) -> CommandCatalog:
    """Catalog of every on and off command for the plant's units."""
    commands: list[CommandKey] = []
    for ref in plant.all_units():
        commands.append((ref, True))
        commands.append((ref, False))
    return CommandCatalog(tuple(commands), multi_system=len(plant.systems) > 1)


def encode_sequential(cmd: CommandKey, catalog: CommandCatalog) -> tuple[int, ...]:
    if cmd not in catalog:
        raise CscpError(f"command {cmd} not in catalog")
    return catalog.encoding(cmd)


@dataclass(frozen=True)
class SequentialDecode:
    status: str  # ok | incomplete | error
    command: Optional[CommandKey] = None


def decode_sequential(pulses: tuple[int, ...], catalog: CommandCatalog) -> SequentialDecode:
    """Decode a pulse-group sequence against the catalog.

    A proper prefix of some catalog encoding is reported incomplete (the
    panel buffers it); anything else that fails to match is an error.
    """
    if not pulses:
        return SequentialDecode("incomplete")
    prefix = False
    for cmd in catalog.commands:
        enc = catalog.encoding(cmd)
        if pulses == enc:
            return SequentialDecode("ok", cmd)
        if len(pulses) < len(enc) and enc[: len(pulses)] == pulses:
            prefix = True
    return SequentialDecode("incomplete" if prefix else "error")
