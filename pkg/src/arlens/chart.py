"""Static chart model: schema, dataset, scales, mark layout and hit-testing.

Everything here lives in chart-image pixel coordinates. All types are
immutable after construction and all operations are pure functions.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence, Union

from .errors import InputError

RGB = tuple[int, int, int]

CHART_FORMAT_TAG = "arlens-chart/1"


class ChartSpecError(InputError):
    """Chart-spec document rejected; `path` points at the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{message} at {path}" if path else message)


class DatasetError(InputError):
    pass


class ScaleError(InputError):
    pass


class AttrKind(str, Enum):
    QUANTITATIVE = "quantitative"
    CATEGORICAL = "categorical"


class Aggregate(str, Enum):
    COUNT = "count"
    SUM = "sum"
    MEAN = "mean"


@dataclass(frozen=True)
class AttributeSchema:
    name: str
    kind: AttrKind
    unit: str | None = None
    clearance: int = 0

    def __post_init__(self):
        if not self.name:
            raise DatasetError("attribute name must be non-empty")
        if self.clearance < 0:
            raise DatasetError(f"attribute {self.name!r}: clearance must be >= 0")


@dataclass(frozen=True)
class Dataset:
    """Schema-validated records with stable, dense integer record ids."""

    schema: tuple[AttributeSchema, ...]
    records: tuple[tuple[int, Mapping[str, Any]], ...]

    @classmethod
    def from_records(cls, schema: Sequence[AttributeSchema], rows: Iterable[Mapping[str, Any]]) -> "Dataset":
        schema = tuple(schema)
        names = [a.name for a in schema]
        if len(set(names)) != len(names):
            raise DatasetError("attribute names must be unique within a schema")
        by_name = {a.name: a for a in schema}
        records = []
        for rid, row in enumerate(rows):
            if set(row) != set(names):
                missing = set(names) - set(row)
                extra = set(row) - set(names)
                raise DatasetError(
                    f"record {rid}: attributes do not match schema"
                    + (f", missing {sorted(missing)}" if missing else "")
                    + (f", unexpected {sorted(extra)}" if extra else "")
                )
            values = {}
            for name, value in row.items():
                attr = by_name[name]
                if attr.kind is AttrKind.QUANTITATIVE:
                    try:
                        value = float(value)
                    except (TypeError, ValueError):
                        raise DatasetError(f"record {rid}: {name!r} is not a number: {value!r}")
                    if not math.isfinite(value):
                        raise DatasetError(f"record {rid}: {name!r} must be finite")
                else:
                    if not isinstance(value, str):
                        value = str(value)
                values[name] = value
            records.append((rid, values))
        return cls(schema=schema, records=tuple(records))

    def ids(self) -> tuple[int, ...]:
        return tuple(range(len(self.records)))

    def attribute(self, name: str) -> AttributeSchema:
        for a in self.schema:
            if a.name == name:
                return a
        raise DatasetError(f"unknown attribute {name!r}")

    def has_attribute(self, name: str) -> bool:
        return any(a.name == name for a in self.schema)

    def value(self, record_id: int, name: str) -> Any:
        return self.records[record_id][1][name]

    def values(self, record_id: int) -> Mapping[str, Any]:
        return self.records[record_id][1]

    def category_order(self, name: str) -> tuple[str, ...]:
        """Distinct values of a categorical attribute in first-appearance order."""
        if self.attribute(name).kind is not AttrKind.CATEGORICAL:
            raise DatasetError(f"attribute {name!r} is not categorical")
        seen: dict[str, None] = {}
        for _, values in self.records:
            seen.setdefault(values[name], None)
        return tuple(seen)


@dataclass(frozen=True)
class LinearScale:
    domain: tuple[float, float]
    range: tuple[float, float]

    def __post_init__(self):
        d0, d1 = self.domain
        if d0 == d1:
            raise ScaleError("linear scale domain must not be degenerate")
        if not all(math.isfinite(v) for v in (*self.domain, *self.range)):
            raise ScaleError("linear scale bounds must be finite")


@dataclass(frozen=True)
class BandScale:
    categories: tuple[str, ...]
    range: tuple[float, float]
    padding_fraction: float = 0.1

    def __post_init__(self):
        if not self.categories:
            raise ScaleError("band scale needs at least one category")
        if len(set(self.categories)) != len(self.categories):
            raise ScaleError("band scale categories must be unique")
        if not all(math.isfinite(v) for v in self.range):
            raise ScaleError("band scale range must be finite")
        if not 0.0 <= self.padding_fraction < 1.0:
            raise ScaleError("band padding_fraction must be in [0, 1)")

    def slot_width(self) -> float:
        return (self.range[1] - self.range[0]) / len(self.categories)


Scale = Union[LinearScale, BandScale]


def scale_apply(scale: Scale, value: Any) -> float:
    """Map a data value to a pixel coordinate.

    Linear scales apply the affine map of domain onto range; band scales
    return the center of the value's slot.
    """
    if isinstance(scale, LinearScale):
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise ScaleError(f"linear scale expects a number, got {value!r}")
        if not math.isfinite(v):
            raise ScaleError(f"non-finite value {value!r}")
        d0, d1 = scale.domain
        r0, r1 = scale.range
        return r0 + (v - d0) * (r1 - r0) / (d1 - d0)
    if isinstance(scale, BandScale):
        try:
            index = scale.categories.index(value)
        except ValueError:
            raise ScaleError(f"category {value!r} not found in band scale")
        return scale.range[0] + (index + 0.5) * scale.slot_width()
    raise ScaleError(f"unsupported scale {type(scale).__name__}")


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ChartSpecError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def contains(self, x: float, y: float, slop: float = 0.0) -> bool:
        return (self.x0 - slop <= x <= self.x1 + slop) and (self.y0 - slop <= y <= self.y1 + slop)

    def corners(self) -> tuple[tuple[float, float], ...]:
        return ((self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1))


class ChartKind(str, Enum):
    SCATTERPLOT = "scatterplot"
    BAR = "bar"


@dataclass(frozen=True)
class MarkStyle:
    fill_color: RGB = (31, 119, 180)
    radius_px: float = 6.0
    bar_width_fraction: float = 0.8

    def __post_init__(self):
        if self.radius_px <= 0:
            raise ChartSpecError("mark radius_px must be > 0")
        if not 0.0 < self.bar_width_fraction <= 1.0:
            raise ChartSpecError("bar_width_fraction must be in (0, 1]")


@dataclass(frozen=True)
class LinkedViewSpec:
    group_attribute: str
    value_attribute: str
    aggregate: Aggregate = Aggregate.MEAN


@dataclass(frozen=True)
class OverlayStyle:
    """Declared overlay defaults; each is configurable in the chart-spec file."""

    patch_scale: float = 1.5
    patch_apron_px: float = 1.0
    highlight_lightness: float = 0.2
    tooltip_offset_px: float = 12.0
    panel_width_fraction: float = 0.4
    panel_height_fraction: float = 0.6
    panel_gap_px: float = 16.0
    hit_slop_px: float = 4.0


@dataclass(frozen=True)
class ChartSpec:
    kind: ChartKind
    image_size: tuple[int, int]
    plot_area: Rect
    x_attribute: str
    x_scale: Scale
    y_attribute: str
    y_scale: Scale
    mark_style: MarkStyle = MarkStyle()
    background_color: RGB = (255, 255, 255)
    detail_attributes: tuple[str, ...] = ()
    schema: tuple[AttributeSchema, ...] = ()
    synonyms: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    linked_view: LinkedViewSpec | None = None
    overlay: OverlayStyle = OverlayStyle()
    title: str = ""
    data_ref: str = ""

    def attribute(self, name: str) -> AttributeSchema:
        for a in self.schema:
            if a.name == name:
                return a
        raise ChartSpecError(f"unknown attribute {name!r}")


@dataclass(frozen=True)
class MarkGeometry:
    record_id: int
    center: tuple[float, float]
    extent: Union[float, Rect]  # disc radius for scatter, rectangle for bar
    clipped: bool = False

    @property
    def is_disc(self) -> bool:
        return not isinstance(self.extent, Rect)


# ---------------------------------------------------------------------------
# chart-spec document parsing


def _expect(obj: Mapping, key: str, path: str) -> Any:
    if key not in obj:
        raise ChartSpecError(f"missing field {key!r}", path or key)
    return obj[key]


def _as_rgb(value: Any, path: str) -> RGB:
    if (not isinstance(value, (list, tuple)) or len(value) != 3
            or not all(isinstance(c, int) and 0 <= c <= 255 for c in value)):
        raise ChartSpecError("color must be [r, g, b] with 0..255 ints", path)
    return (value[0], value[1], value[2])


def _parse_scale(obj: Any, plot_range: tuple[float, float], path: str) -> Scale:
    if not isinstance(obj, Mapping):
        raise ChartSpecError("scale must be an object", path)
    kind = _expect(obj, "kind", f"{path}.kind")
    try:
        if kind == "linear":
            domain = _expect(obj, "domain", f"{path}.domain")
            if not (isinstance(domain, list) and len(domain) == 2):
                raise ChartSpecError("linear domain must be [d0, d1]", f"{path}.domain")
            return LinearScale(domain=(float(domain[0]), float(domain[1])), range=plot_range)
        if kind == "band":
            cats = _expect(obj, "categories", f"{path}.categories")
            if not (isinstance(cats, list) and all(isinstance(c, str) for c in cats)):
                raise ChartSpecError("band categories must be a list of strings", f"{path}.categories")
            return BandScale(
                categories=tuple(cats),
                range=plot_range,
                padding_fraction=float(obj.get("padding_fraction", 0.1)),
            )
    except ScaleError as exc:
        raise ChartSpecError(str(exc), path)
    raise ChartSpecError(f"unknown scale kind {kind!r}", f"{path}.kind")


def _parse_encoding(doc: Mapping, axis: str, plot_range: tuple[float, float],
                    schema: Sequence[AttributeSchema]) -> tuple[str, Scale]:
    enc = _expect(doc, axis, axis)
    if not isinstance(enc, Mapping):
        raise ChartSpecError("encoding must be an object", axis)
    attr_name = _expect(enc, "attribute", f"{axis}.attribute")
    attr = next((a for a in schema if a.name == attr_name), None)
    if attr is None:
        raise ChartSpecError(f"encoded attribute {attr_name!r} not in schema", f"{axis}.attribute")
    scale = _parse_scale(_expect(enc, "scale", f"{axis}.scale"), plot_range, f"{axis}.scale")
    wants = AttrKind.QUANTITATIVE if isinstance(scale, LinearScale) else AttrKind.CATEGORICAL
    if attr.kind is not wants:
        raise ChartSpecError("scale kind mismatch", f"{axis}_encoding")
    return attr_name, scale


def parse_chart_spec(data: bytes | str) -> ChartSpec:
    """Parse and validate a chart-spec JSON document (see docs/formats.md)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ChartSpecError(f"malformed JSON: {exc}")
    if not isinstance(doc, Mapping):
        raise ChartSpecError("chart spec must be a JSON object")
    tag = doc.get("format")
    if tag != CHART_FORMAT_TAG:
        raise ChartSpecError(f"unsupported format tag {tag!r}, expected {CHART_FORMAT_TAG!r}", "format")

    kind_raw = _expect(doc, "kind", "kind")
    try:
        kind = ChartKind(kind_raw)
    except ValueError:
        raise ChartSpecError(f"unknown kind {kind_raw!r}", "kind")

    size = _expect(doc, "image_size", "image_size")
    if not (isinstance(size, list) and len(size) == 2
            and all(isinstance(v, int) and v > 0 for v in size)):
        raise ChartSpecError("image_size must be [width, height] of positive ints", "image_size")
    width, height = size

    area = _expect(doc, "plot_area", "plot_area")
    if not (isinstance(area, list) and len(area) == 4):
        raise ChartSpecError("plot_area must be [x0, y0, x1, y1]", "plot_area")
    try:
        plot_area = Rect(*(float(v) for v in area))
    except (TypeError, ValueError):
        raise ChartSpecError("plot_area bounds must be numbers", "plot_area")
    if not (0 <= plot_area.x0 and plot_area.x1 <= width and 0 <= plot_area.y0 and plot_area.y1 <= height):
        raise ChartSpecError("plot_area out of image bounds", "plot_area")

    schema_raw = _expect(doc, "schema", "schema")
    if not isinstance(schema_raw, list) or not schema_raw:
        raise ChartSpecError("schema must be a non-empty list", "schema")
    schema = []
    for i, entry in enumerate(schema_raw):
        path = f"schema[{i}]"
        if not isinstance(entry, Mapping):
            raise ChartSpecError("schema entry must be an object", path)
        try:
            attr_kind = AttrKind(_expect(entry, "kind", f"{path}.kind"))
        except ValueError:
            raise ChartSpecError(f"unknown attribute kind {entry.get('kind')!r}", f"{path}.kind")
        try:
            schema.append(AttributeSchema(
                name=_expect(entry, "name", f"{path}.name"),
                kind=attr_kind,
                unit=entry.get("unit"),
                clearance=int(entry.get("clearance", 0)),
            ))
        except DatasetError as exc:
            raise ChartSpecError(str(exc), path)
    names = [a.name for a in schema]
    if len(set(names)) != len(names):
        raise ChartSpecError("attribute names must be unique", "schema")

    # Axis ranges come from the plot area; the y range is inverted so larger
    # values sit higher on screen (image y grows downward).
    x_attr, x_scale = _parse_encoding(doc, "x", (plot_area.x0, plot_area.x1), schema)
    y_attr, y_scale = _parse_encoding(doc, "y", (plot_area.y1, plot_area.y0), schema)

    mark_raw = doc.get("mark", {})
    if not isinstance(mark_raw, Mapping):
        raise ChartSpecError("mark must be an object", "mark")
    try:
        mark = MarkStyle(
            fill_color=_as_rgb(mark_raw["fill"], "mark.fill") if "fill" in mark_raw else MarkStyle().fill_color,
            radius_px=float(mark_raw.get("radius_px", 6.0)),
            bar_width_fraction=float(mark_raw.get("bar_width_fraction", 0.8)),
        )
    except ChartSpecError:
        raise
    except (TypeError, ValueError):
        raise ChartSpecError("bad mark style", "mark")

    background = _as_rgb(doc.get("background", [255, 255, 255]), "background")

    details_raw = doc.get("details", names)
    if not (isinstance(details_raw, list) and all(isinstance(d, str) for d in details_raw)):
        raise ChartSpecError("details must be a list of attribute names", "details")
    for d in details_raw:
        if d not in names:
            raise ChartSpecError(f"unknown attribute {d!r}", "details")

    synonyms_raw = doc.get("synonyms", {})
    if not isinstance(synonyms_raw, Mapping):
        raise ChartSpecError("synonyms must map attribute -> list of synonyms", "synonyms")
    synonyms: dict[str, tuple[str, ...]] = {}
    for attr_name, syns in synonyms_raw.items():
        if attr_name not in names:
            raise ChartSpecError(f"unknown attribute {attr_name!r}", "synonyms")
        if not (isinstance(syns, list) and all(isinstance(s, str) for s in syns)):
            raise ChartSpecError("synonym list must contain strings", f"synonyms.{attr_name}")
        synonyms[attr_name] = tuple(syns)

    linked_view = None
    if "linked_view" in doc:
        lv = doc["linked_view"]
        if not isinstance(lv, Mapping):
            raise ChartSpecError("linked_view must be an object", "linked_view")
        group = _expect(lv, "group", "linked_view.group")
        value = _expect(lv, "value", "linked_view.value")
        for field_name, attr_name, want in (("group", group, AttrKind.CATEGORICAL),
                                            ("value", value, AttrKind.QUANTITATIVE)):
            attr = next((a for a in schema if a.name == attr_name), None)
            if attr is None:
                raise ChartSpecError(f"unknown attribute {attr_name!r}", f"linked_view.{field_name}")
            if attr.kind is not want:
                raise ChartSpecError(f"linked_view {field_name} must be {want.value}", f"linked_view.{field_name}")
        try:
            aggregate = Aggregate(lv.get("aggregate", "mean"))
        except ValueError:
            raise ChartSpecError(f"unknown aggregate {lv.get('aggregate')!r}", "linked_view.aggregate")
        linked_view = LinkedViewSpec(group_attribute=group, value_attribute=value, aggregate=aggregate)

    overlay_raw = doc.get("overlay", {})
    if not isinstance(overlay_raw, Mapping):
        raise ChartSpecError("overlay must be an object", "overlay")
    defaults = OverlayStyle()
    try:
        overlay = OverlayStyle(**{
            f: float(overlay_raw.get(f, getattr(defaults, f)))
            for f in ("patch_scale", "patch_apron_px", "highlight_lightness", "tooltip_offset_px",
                      "panel_width_fraction", "panel_height_fraction", "panel_gap_px", "hit_slop_px")
        })
    except (TypeError, ValueError):
        raise ChartSpecError("bad overlay style", "overlay")

    return ChartSpec(
        kind=kind,
        image_size=(width, height),
        plot_area=plot_area,
        x_attribute=x_attr,
        x_scale=x_scale,
        y_attribute=y_attr,
        y_scale=y_scale,
        mark_style=mark,
        background_color=background,
        detail_attributes=tuple(details_raw),
        schema=tuple(schema),
        synonyms=synonyms,
        linked_view=linked_view,
        overlay=overlay,
        title=str(doc.get("title", "")),
        data_ref=str(doc.get("data", "")),
    )


def dataset_from_csv(schema: Sequence[AttributeSchema], text: str) -> Dataset:
    """Load records from CSV with a header row; value types come from the schema."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise DatasetError("CSV has no header row")
    rows = [dict(row) for row in reader]
    return Dataset.from_records(schema, rows)


def dataset_from_json(schema: Sequence[AttributeSchema], text: str) -> Dataset:
    """Load records from a JSON array of objects."""
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"malformed JSON dataset: {exc}")
    if not isinstance(rows, list):
        raise DatasetError("JSON dataset must be an array of objects")
    return Dataset.from_records(schema, rows)


# ---------------------------------------------------------------------------
# layout / hit-testing / linked chart


def _clamp(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


def layout_marks(spec: ChartSpec, dataset: Dataset) -> list[MarkGeometry]:
    """One mark per record, in record order.

    Positions outside the plot area are clamped to its edge and flagged
    clipped so overlays stay inside the tracked region.
    """
    marks: list[MarkGeometry] = []
    area = spec.plot_area
    for rid, values in dataset.records:
        try:
            cx = scale_apply(spec.x_scale, values[spec.x_attribute])
            cy = scale_apply(spec.y_scale, values[spec.y_attribute])
        except ScaleError as exc:
            raise ScaleError(f"record {rid}: {exc}")
        if spec.kind is ChartKind.SCATTERPLOT:
            x = _clamp(cx, area.x0, area.x1)
            y = _clamp(cy, area.y0, area.y1)
            clipped = (x != cx) or (y != cy)
            marks.append(MarkGeometry(rid, (x, y), spec.mark_style.radius_px, clipped))
        else:
            assert isinstance(spec.x_scale, BandScale)
            half = abs(spec.x_scale.slot_width()) * (1.0 - spec.x_scale.padding_fraction) \
                * spec.mark_style.bar_width_fraction / 2.0
            base = spec.y_scale.range[0]  # bars grow from the y range origin
            top, bottom = min(base, cy), max(base, cy)
            y0, y1 = _clamp(top, area.y0, area.y1), _clamp(bottom, area.y0, area.y1)
            x0, x1 = _clamp(cx - half, area.x0, area.x1), _clamp(cx + half, area.x0, area.x1)
            clipped = (y0 != top) or (y1 != bottom) or (x0 != cx - half) or (x1 != cx + half)
            rect = Rect(x0, y0, x1, y1)
            marks.append(MarkGeometry(rid, rect.center, rect, clipped))
    return marks


def mark_contains(mark: MarkGeometry, x: float, y: float, slop: float = 0.0) -> bool:
    if mark.is_disc:
        r = float(mark.extent) + slop
        dx, dy = x - mark.center[0], y - mark.center[1]
        return dx * dx + dy * dy <= r * r
    return mark.extent.contains(x, y, slop)


def hit_test(marks: Sequence[MarkGeometry], pointer: tuple[float, float],
             slop_px: float = 4.0, visible: frozenset | set | None = None) -> int | None:
    """Closest visible mark whose slop-inflated extent contains the pointer.

    Ties break toward the smaller record id; returns None when nothing hits.
    """
    px, py = pointer
    best: tuple[float, int] | None = None
    for mark in marks:
        if visible is not None and mark.record_id not in visible:
            continue
        if not mark_contains(mark, px, py, slop_px):
            continue
        d = math.hypot(px - mark.center[0], py - mark.center[1])
        key = (d, mark.record_id)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


_LINKED_CANVAS: tuple[int, int] = (220, 170)
_LINKED_PLOT = Rect(36.0, 12.0, 210.0, 140.0)


def aggregate_by_category(dataset: Dataset, selection: Iterable[int], group_attribute: str,
                          value_attribute: str, aggregate: Aggregate = Aggregate.MEAN,
                          ) -> tuple[tuple[str, float], ...]:
    """Per-category aggregate of value_attribute over the selected records.

    Categories appear in the dataset's first-appearance order, restricted to
    those present in the selection. Counts are exact integers.
    """
    group = dataset.attribute(group_attribute)
    value = dataset.attribute(value_attribute)
    if group.kind is not AttrKind.CATEGORICAL:
        raise DatasetError(f"group attribute {group_attribute!r} must be categorical")
    if value.kind is not AttrKind.QUANTITATIVE:
        raise DatasetError(f"value attribute {value_attribute!r} must be quantitative")
    selection = set(selection)
    unknown = selection - set(range(len(dataset.records)))
    if unknown:
        raise DatasetError(f"selection contains unknown record ids {sorted(unknown)}")

    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for rid in sorted(selection):
        values = dataset.values(rid)
        cat = values[group_attribute]
        sums[cat] = sums.get(cat, 0.0) + float(values[value_attribute])
        counts[cat] = counts.get(cat, 0) + 1

    categories = tuple(c for c in dataset.category_order(group_attribute) if c in counts)
    if aggregate is Aggregate.COUNT:
        return tuple((c, float(counts[c])) for c in categories)
    if aggregate is Aggregate.SUM:
        return tuple((c, sums[c]) for c in categories)
    return tuple((c, sums[c] / counts[c]) for c in categories)


def derive_linked_chart(dataset: Dataset, selection: Iterable[int], group_attribute: str,
                        value_attribute: str, aggregate: Aggregate = Aggregate.MEAN,
                        ) -> tuple[ChartSpec, list[MarkGeometry]]:
    """Aggregate the selected records per category into a small bar chart.

    The returned spec uses a fixed canvas; the overlay planner maps it into
    the linked-view panel. Empty selection yields an empty bar list.
    """
    entries = aggregate_by_category(dataset, selection, group_attribute, value_attribute, aggregate)
    categories = tuple(c for c, _ in entries)
    bar_values = dict(entries)

    lo = min((min(bar_values.values()), 0.0), default=0.0)
    hi = max((max(bar_values.values()), 0.0), default=1.0)
    if lo == hi:
        hi = lo + 1.0

    sub_schema = (AttributeSchema(group_attribute, AttrKind.CATEGORICAL),
                  AttributeSchema(value_attribute, AttrKind.QUANTITATIVE))
    spec = ChartSpec(
        kind=ChartKind.BAR,
        image_size=_LINKED_CANVAS,
        plot_area=_LINKED_PLOT,
        x_attribute=group_attribute,
        x_scale=BandScale(categories=categories or ("",), range=(_LINKED_PLOT.x0, _LINKED_PLOT.x1)),
        y_attribute=value_attribute,
        y_scale=LinearScale(domain=(lo, hi), range=(_LINKED_PLOT.y1, _LINKED_PLOT.y0)),
        schema=sub_schema,
        title=f"{aggregate.value} of {value_attribute}",
    )
    if not categories:
        return spec, []
    # One synthetic record per category reuses the per-record layout path, so
    # bar geometry follows the same rules as the main chart.
    agg_data = Dataset.from_records(
        sub_schema, [{group_attribute: c, value_attribute: bar_values[c]} for c in categories])
    return spec, layout_marks(spec, agg_data)
