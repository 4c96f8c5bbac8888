"""Chart bundles: a directory holding a chart spec and its dataset.

A bundle directory contains `chart.json` (see docs/formats.md) and the
data file the spec's `data` field names (.csv or .json). Loading renders
the flat reference image once; everything downstream (tracking, overlay
planning, hit testing) reuses it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chart import (ChartSpec, ChartSpecError, Dataset, MarkGeometry, dataset_from_csv,
                    dataset_from_json, layout_marks, parse_chart_spec)
from .errors import InputError

DEFAULT_BUNDLE_ROOT = Path(__file__).resolve().parents[2] / "bundles"


@dataclass(frozen=True, eq=False)
class ChartBundle:
    name: str
    spec: ChartSpec
    dataset: Dataset
    marks: tuple[MarkGeometry, ...]
    reference_image: np.ndarray = field(repr=False)


def load_bundle(path) -> ChartBundle:
    """Load and validate one bundle directory."""
    from .raster import render_chart

    root = Path(path)
    spec_path = root / "chart.json"
    if not spec_path.is_file():
        raise InputError(f"no chart.json in {root}")
    try:
        spec = parse_chart_spec(spec_path.read_text(encoding="utf-8"))
    except ChartSpecError as exc:
        raise ChartSpecError(f"{root.name}: {exc}")

    if not spec.data_ref:
        raise InputError(f"{root.name}: chart.json does not name a data file")
    data_path = root / spec.data_ref
    if not data_path.is_file():
        raise InputError(f"{root.name}: data file {spec.data_ref!r} not found")
    text = data_path.read_text(encoding="utf-8")
    if data_path.suffix == ".csv":
        dataset = dataset_from_csv(spec.schema, text)
    elif data_path.suffix == ".json":
        dataset = dataset_from_json(spec.schema, text)
    else:
        raise InputError(f"{root.name}: unsupported data format {data_path.suffix!r}")

    marks = tuple(layout_marks(spec, dataset))
    return ChartBundle(name=root.name, spec=spec, dataset=dataset, marks=marks,
                       reference_image=render_chart(spec, dataset))


def list_bundles(root=DEFAULT_BUNDLE_ROOT) -> tuple[str, ...]:
    root = Path(root)
    if not root.is_dir():
        return ()
    return tuple(sorted(p.name for p in root.iterdir() if (p / "chart.json").is_file()))


def get_bundle(name: str, root=DEFAULT_BUNDLE_ROOT) -> ChartBundle:
    root = Path(root)
    candidate = (root / name).resolve()
    if candidate.parent != root.resolve() or not candidate.is_dir():
        raise InputError(f"unknown chart {name!r}; available: {', '.join(list_bundles(root)) or 'none'}")
    return load_bundle(candidate)
