"""Regenerate the shipped session-log fixtures under src/cscp/data/sessions."""

from pathlib import Path

from cscp.fixtures import get_panel, get_plant, get_scenario
from cscp.io import run_and_serialize, write_atomic
from cscp.simulate import TimeModelParams

SESSIONS = [
    ("checking-run", "csd", "soyuz"),
    ("auto-mode-16", "csd", "soyuz"),
    ("console-drill", "drill-csd", "drill"),
]


def main() -> None:
    out_dir = Path(__file__).resolve().parents[1] / "src" / "cscp" / "data" / "sessions"
    for scenario_id, spec_id, plant_id in SESSIONS:
        text = run_and_serialize(
            get_panel(spec_id),
            get_plant(plant_id),
            get_scenario(scenario_id),
            TimeModelParams(),
            plant_id,
        )
        target = out_dir / f"{scenario_id}.{spec_id}.log.json"
        write_atomic(target, text)
        print(f"wrote {target}")


if __name__ == "__main__":
    main()
