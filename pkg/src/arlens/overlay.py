"""Overlay planning: session state -> drawable primitives.

Primitives are planned in chart (reference) coordinates and either warped
into camera-frame coordinates through the tracked homography or shipped
to a client together with the homography. The vocabulary is deliberately
small — disc, polygon, line, text — so a thin client can rasterize it.

Filtered-out marks are not annotated but erased: an opaque patch in the
chart's background color is painted over the mark, slightly inflated so
the mark's antialiased fringe is covered too. This relies on the chart
having a locally uniform background around each mark.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .chart import (ChartSpec, Dataset, MarkGeometry, Rect, derive_linked_chart, layout_marks,
                    scale_apply)
from .errors import InputError
from .raster import (RGBA, composite_over, draw_line, draw_text, fill_convex_polygon, fill_disc,
                     new_overlay, quantize_overlay, text_width)
from .session import SessionState, detail_lines, linked_selection, visible_records
from .tracker import apply_homography, area_scale, warp_radius

ROLE_PATCH = "patch"
ROLE_HIGHLIGHT = "highlight"
ROLE_TOOLTIP = "tooltip"
ROLE_LEADER = "leader"
ROLE_PANEL = "panel"


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float
    color: RGBA
    role: str


@dataclass(frozen=True)
class Poly:
    points: tuple[tuple[float, float], ...]
    color: RGBA
    role: str


@dataclass(frozen=True)
class Line:
    p0: tuple[float, float]
    p1: tuple[float, float]
    width: float
    color: RGBA
    role: str


@dataclass(frozen=True)
class TextLabel:
    xy: tuple[float, float]
    text: str
    color: RGBA
    scale: int
    role: str


Primitive = Union[Disc, Poly, Line, TextLabel]

_TOOLTIP_BG: RGBA = (255, 255, 250, 255)
_TOOLTIP_BORDER: RGBA = (70, 70, 70, 255)
_TOOLTIP_TEXT: RGBA = (20, 20, 20, 255)
_REDACTED_TEXT: RGBA = (150, 40, 40, 255)
_PANEL_BG: RGBA = (252, 252, 252, 255)
_LINE_HEIGHT = 10
_PAD = 5


def lighten(rgb: tuple[int, int, int], amount: float) -> tuple[int, int, int]:
    """Mix toward white. Keeps hue exactly (every channel moves the same
    fraction of its headroom) while raising luminance."""
    return tuple(int(round(c + (255 - c) * amount)) for c in rgb)


def _rect_points(x0: float, y0: float, x1: float, y1: float) -> tuple[tuple[float, float], ...]:
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def _outline(x0: float, y0: float, x1: float, y1: float, w: float, color: RGBA,
             role: str) -> list[Poly]:
    return [
        Poly(_rect_points(x0, y0, x1, y0 + w), color, role),
        Poly(_rect_points(x0, y1 - w, x1, y1), color, role),
        Poly(_rect_points(x0, y0 + w, x0 + w, y1 - w), color, role),
        Poly(_rect_points(x1 - w, y0 + w, x1, y1 - w), color, role),
    ]


def _patch_primitive(mark: MarkGeometry, spec: ChartSpec) -> Primitive:
    scale = spec.overlay.patch_scale
    apron = spec.overlay.patch_apron_px
    r, g, b = spec.background_color
    color: RGBA = (r, g, b, 255)
    if mark.is_disc:
        return Disc(mark.center, float(mark.extent) * scale + apron, color, ROLE_PATCH)
    e = mark.extent
    grow_x = e.width * (scale - 1.0) / 2.0 + apron
    grow_y = e.height * (scale - 1.0) / 2.0 + apron
    return Poly(_rect_points(e.x0 - grow_x, e.y0 - grow_y, e.x1 + grow_x, e.y1 + grow_y),
                color, ROLE_PATCH)


def _highlight_primitive(mark: MarkGeometry, spec: ChartSpec) -> Primitive:
    r, g, b = lighten(spec.mark_style.fill_color, spec.overlay.highlight_lightness)
    color: RGBA = (r, g, b, 255)
    if mark.is_disc:
        return Disc(mark.center, float(mark.extent), color, ROLE_HIGHLIGHT)
    e = mark.extent
    return Poly(_rect_points(e.x0, e.y0, e.x1, e.y1), color, ROLE_HIGHLIGHT)


def _mark_anchor(mark: MarkGeometry) -> tuple[float, float, float]:
    """(cx, cy, reach) where reach is the horizontal half-extent."""
    if mark.is_disc:
        return mark.center[0], mark.center[1], float(mark.extent)
    e = mark.extent
    return mark.center[0], mark.center[1], e.width / 2.0


def _tooltip_primitives(mark: MarkGeometry, lines, spec: ChartSpec) -> list[Primitive]:
    if not lines:
        return []
    texts = [f"{ln.name}: {ln.text}" for ln in lines]
    box_w = max(text_width(t) for t in texts) + 2 * _PAD
    box_h = len(texts) * _LINE_HEIGHT + 2 * _PAD - 2
    width, height = spec.image_size
    cx, cy, reach = _mark_anchor(mark)
    offset = spec.overlay.tooltip_offset_px

    x0 = cx + reach + offset
    if x0 + box_w > width - 2:  # flip to the left of the mark
        x0 = cx - reach - offset - box_w
    y0 = cy - box_h / 2.0
    x0 = min(max(x0, 2.0), width - box_w - 2.0)
    y0 = min(max(y0, 2.0), height - box_h - 2.0)

    box_cx = x0 if x0 > cx else x0 + box_w
    prims: list[Primitive] = [
        Line((cx, cy), (box_cx, y0 + box_h / 2.0), 1.5, _TOOLTIP_BORDER, ROLE_LEADER),
        Poly(_rect_points(x0, y0, x0 + box_w, y0 + box_h), _TOOLTIP_BG, ROLE_TOOLTIP),
    ]
    prims += _outline(x0, y0, x0 + box_w, y0 + box_h, 1.0, _TOOLTIP_BORDER, ROLE_TOOLTIP)
    for i, (line, text) in enumerate(zip(lines, texts)):
        color = _REDACTED_TEXT if line.redacted else _TOOLTIP_TEXT
        prims.append(TextLabel((x0 + _PAD, y0 + _PAD + i * _LINE_HEIGHT), text, color, 1,
                               ROLE_TOOLTIP))
    return prims


def _panel_origin(spec: ChartSpec, panel_size: tuple[int, int]) -> tuple[float, float]:
    """Prefer the free space right of the plot; fall back to inside it."""
    pw, ph = panel_size
    width, _ = spec.image_size
    gap = spec.overlay.panel_gap_px
    x = spec.plot_area.x1 + gap
    if x + pw > width - 2:
        x = spec.plot_area.x1 - pw - gap
    return x, spec.plot_area.y0

def _panel_primitives(spec: ChartSpec, dataset: Dataset, state: SessionState) -> list[Primitive]:
    lv = spec.linked_view
    selection = linked_selection(state, dataset)
    if lv is None or not selection:
        return []
    sub_spec, sub_marks = derive_linked_chart(
        dataset, selection, lv.group_attribute, lv.value_attribute, lv.aggregate)
    if not sub_marks:
        return []
    pw, ph = sub_spec.image_size
    ox, oy = _panel_origin(spec, (pw, ph))

    prims: list[Primitive] = [Poly(_rect_points(ox, oy, ox + pw, oy + ph), _PANEL_BG, ROLE_PANEL)]
    prims += _outline(ox, oy, ox + pw, oy + ph, 1.0, _TOOLTIP_BORDER, ROLE_PANEL)
    title = f"{lv.aggregate.value} {lv.value_attribute} by {lv.group_attribute}"
    prims.append(TextLabel((ox + 4, oy + 3), title, _TOOLTIP_TEXT, 1, ROLE_PANEL))

    r, g, b = sub_spec.mark_style.fill_color
    pa = sub_spec.plot_area
    for mark in sub_marks:
        e = mark.extent
        if not isinstance(e, Rect):
            raise InputError("linked view must produce bar marks")
        prims.append(Poly(_rect_points(ox + e.x0, oy + e.y0, ox + e.x1, oy + e.y1),
                          (r, g, b, 255), ROLE_PANEL))
    for cat in sub_spec.x_scale.categories:
        x = scale_apply(sub_spec.x_scale, cat)
        label = cat if len(cat) <= 6 else cat[:5] + "."
        prims.append(TextLabel((ox + x - text_width(label) / 2, oy + pa.y1 + 3), label,
                               _TOOLTIP_TEXT, 1, ROLE_PANEL))
    return prims


def plan_overlay(spec: ChartSpec, dataset: Dataset, state: SessionState,
                 marks: Sequence[MarkGeometry] | None = None) -> tuple[Primitive, ...]:
    """All primitives for the current state, in paint order: patches first,
    then highlights, then the detail box, then the linked panel."""
    if marks is None:
        marks = layout_marks(spec, dataset)
    by_id = {m.record_id: m for m in marks}
    visible = visible_records(state, dataset)

    prims: list[Primitive] = []
    for mark in marks:
        if mark.record_id not in visible:
            prims.append(_patch_primitive(mark, spec))
    for rid in sorted(state.highlights):
        if rid in by_id:
            prims.append(_highlight_primitive(by_id[rid], spec))
    if state.focused is not None and state.details_enabled and state.focused in by_id:
        prims += _tooltip_primitives(by_id[state.focused],
                                     detail_lines(state, dataset, spec), spec)
    if state.linked_view_open:
        prims += _panel_primitives(spec, dataset, state)
    return tuple(prims)


# ---------------------------------------------------------------------------
# warping into camera-frame space


def warp_primitives(prims: Sequence[Primitive], homography) -> tuple[Primitive, ...]:
    """Map chart-space primitives through a homography. Discs stay discs
    with the radius scaled by the local area magnification; text stays
    upright with its anchor mapped (bitmap glyphs are never sheared)."""
    H = np.asarray(homography, dtype=np.float64)

    def map_pt(p: tuple[float, float]) -> tuple[float, float]:
        q = apply_homography(H, np.array([p]))[0]
        return float(q[0]), float(q[1])

    out: list[Primitive] = []
    for prim in prims:
        if isinstance(prim, Disc):
            out.append(Disc(map_pt(prim.center), warp_radius(H, prim.center, prim.radius),
                            prim.color, prim.role))
        elif isinstance(prim, Poly):
            pts = apply_homography(H, np.array(prim.points))
            out.append(Poly(tuple((float(x), float(y)) for x, y in pts), prim.color, prim.role))
        elif isinstance(prim, Line):
            mid = ((prim.p0[0] + prim.p1[0]) / 2, (prim.p0[1] + prim.p1[1]) / 2)
            scale = float(np.sqrt(area_scale(H, mid[0], mid[1])))
            out.append(Line(map_pt(prim.p0), map_pt(prim.p1), prim.width * scale,
                            prim.color, prim.role))
        elif isinstance(prim, TextLabel):
            out.append(TextLabel(map_pt(prim.xy), prim.text, prim.color, prim.scale, prim.role))
        else:
            raise InputError(f"unknown primitive {prim!r}")
    return tuple(out)


def rasterize_overlay(prims: Sequence[Primitive], size: tuple[int, int]) -> np.ndarray:
    """Paint primitives in order into a premultiplied uint8 RGBA image."""
    width, height = size
    buf = new_overlay(width, height)
    for prim in prims:
        if isinstance(prim, Disc):
            fill_disc(buf, prim.center, prim.radius, prim.color)
        elif isinstance(prim, Poly):
            fill_convex_polygon(buf, prim.points, prim.color)
        elif isinstance(prim, Line):
            draw_line(buf, prim.p0, prim.p1, prim.width, prim.color)
        elif isinstance(prim, TextLabel):
            draw_text(buf, prim.xy, prim.text, prim.color, prim.scale)
        else:
            raise InputError(f"unknown primitive {prim!r}")
    return quantize_overlay(buf)


def compose_frame(frame: np.ndarray, prims: Sequence[Primitive]) -> np.ndarray:
    overlay = rasterize_overlay(prims, (frame.shape[1], frame.shape[0]))
    return composite_over(frame, overlay)


# ---------------------------------------------------------------------------
# wire serialization


def primitive_to_dict(prim: Primitive) -> dict:
    if isinstance(prim, Disc):
        return {"kind": "disc", "center": list(prim.center), "radius": prim.radius,
                "color": list(prim.color), "role": prim.role}
    if isinstance(prim, Poly):
        return {"kind": "polygon", "points": [list(p) for p in prim.points],
                "color": list(prim.color), "role": prim.role}
    if isinstance(prim, Line):
        return {"kind": "line", "p0": list(prim.p0), "p1": list(prim.p1), "width": prim.width,
                "color": list(prim.color), "role": prim.role}
    if isinstance(prim, TextLabel):
        return {"kind": "text", "xy": list(prim.xy), "text": prim.text,
                "color": list(prim.color), "scale": prim.scale, "role": prim.role}
    raise InputError(f"unknown primitive {prim!r}")


def primitive_from_dict(doc: Mapping) -> Primitive:
    try:
        kind = doc["kind"]
        color = tuple(int(c) for c in doc["color"])
        if kind == "disc":
            return Disc((float(doc["center"][0]), float(doc["center"][1])),
                        float(doc["radius"]), color, str(doc["role"]))
        if kind == "polygon":
            return Poly(tuple((float(x), float(y)) for x, y in doc["points"]), color,
                        str(doc["role"]))
        if kind == "line":
            return Line((float(doc["p0"][0]), float(doc["p0"][1])),
                        (float(doc["p1"][0]), float(doc["p1"][1])),
                        float(doc["width"]), color, str(doc["role"]))
        if kind == "text":
            return TextLabel((float(doc["xy"][0]), float(doc["xy"][1])), str(doc["text"]),
                             color, int(doc["scale"]), str(doc["role"]))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"malformed primitive: {exc}")
    raise InputError(f"unknown primitive kind {doc.get('kind')!r}")
