"""Bundled example datasets: chromium, cadmium, and lead calibration data
from a plasma-spectrometry laboratory, plus the full simulation-study
scenario file."""

from importlib.resources import files

from ..data import FirstStageData, SecondStageData
from ..io import parse_first_stage, parse_second_stage

ANALYTES = ("chromium", "cadmium", "lead")


def fixture_bytes(name: str) -> bytes:
    return files(__package__).joinpath(name).read_bytes()


def load_analyte(name: str) -> tuple[FirstStageData, SecondStageData]:
    """Load the standards and sample data for one bundled analyte."""
    if name not in ANALYTES:
        raise KeyError(f"unknown analyte {name!r}; choose from {ANALYTES}")
    first = parse_first_stage(fixture_bytes(f"{name}_standards.csv"))
    second = parse_second_stage(fixture_bytes(f"{name}_sample.csv"))
    return first, second


def scenario_file_bytes() -> bytes:
    """The full 39-row simulation-study scenario file."""
    return fixture_bytes("simulation_study.csv")
