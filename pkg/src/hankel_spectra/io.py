from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from pydantic import BaseModel, ConfigDict, RootModel, TypeAdapter

from src.hankel_spectra.measures import AtomicMeasure, Measure
from src.hankel_spectra.utils import ensure_dir

MEASURE_ADAPTER: TypeAdapter = TypeAdapter(Measure)


class MeasureBatch(BaseModel):
    model_config = ConfigDict(extra="forbid")

    measures: list[Measure]


class MeasureList(RootModel[list[Measure]]):
    pass


def parse_measure(content: object) -> Measure:
    """Validate one measure from a dict or a JSON string."""
    if isinstance(content, str):
        return MEASURE_ADAPTER.validate_json(content)
    if isinstance(content, dict):
        return MEASURE_ADAPTER.validate_python(content)
    raise ValueError("Measure content must be a JSON string or a dict")


def parse_measures(content: object) -> list[Measure]:
    """Validate a single measure, a list of measures, or {"measures": [...]}."""
    if isinstance(content, str):
        try:
            content = json.loads(content)
        except json.JSONDecodeError as exc:
            raise ValueError(f"Invalid measure JSON: {exc}") from exc

    if isinstance(content, list):
        return list(MeasureList.model_validate(content).root)
    if isinstance(content, dict):
        if "measures" in content:
            return list(MeasureBatch.model_validate(content).measures)
        return [parse_measure(content)]
    raise ValueError("Measure content must be an object or a list of objects")


def read_measures(path: str | Path) -> list[Measure]:
    text = Path(path).read_text(encoding="utf-8")
    measures = parse_measures(text)
    if not measures:
        raise ValueError(f"No measures found in {path}")
    return measures


def read_measure(path: str | Path) -> Measure:
    measures = read_measures(path)
    if len(measures) != 1:
        raise ValueError(f"Expected a single measure in {path}, found {len(measures)}")
    return measures[0]


def measure_to_json(measure: Measure) -> str:
    return MEASURE_ADAPTER.dump_json(measure, indent=2).decode("utf-8")


def format_number(value: float) -> str:
    """Shortest decimal that round-trips to the same double (at most 17 digits)."""
    return repr(float(value))


def write_rows(path: str | Path | None, header: Sequence[str], rows: Iterable[Sequence[float]], stream=None) -> None:
    """Write numeric rows as CSV to ``path`` or, when it is None, to ``stream``."""
    if path is None:
        _write_csv(stream, header, rows)
        return
    target = Path(path)
    ensure_dir(target.parent)
    with target.open("w", encoding="utf-8", newline="") as handle:
        _write_csv(handle, header, rows)


def _write_csv(handle, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([format_number(value) for value in row])


def write_atoms(path: str | Path | None, measure: AtomicMeasure, stream=None) -> None:
    write_rows(path, ("lambda", "mass"), zip(measure.positions, measure.weights), stream=stream)


def write_json(path: str | Path | None, payload: object, stream=None) -> None:
    """Write ``payload`` as JSON; infinities and NaNs become null."""
    text = json.dumps(_json_safe(payload), indent=2, allow_nan=False) + "\n"
    if path is None:
        stream.write(text)
        return
    target = Path(path)
    ensure_dir(target.parent)
    target.write_text(text, encoding="utf-8")


def _json_safe(payload: object) -> object:
    if isinstance(payload, float):
        return payload if math.isfinite(payload) else None
    if isinstance(payload, dict):
        return {key: _json_safe(value) for key, value in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_json_safe(value) for value in payload]
    return payload
