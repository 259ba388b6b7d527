"""JSON schemas for the history, verdict and telemetry formats."""
import json
from importlib import resources

NAMES = ("history", "verdict", "telemetry")


def load_schema(name: str) -> dict:
    return json.loads(resources.files(__name__).joinpath(f"{name}.schema.json").read_text())
