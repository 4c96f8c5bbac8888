"""Software rasterizer and compositor.

Overlay shapes accumulate into a float64 premultiplied RGBA buffer with
4x4 supersampled edge coverage, quantized to uint8 once at the end.
Compositing onto a camera frame is pure integer math with two guarantees
the pixel tests lean on: alpha 0 leaves the frame bit-identical, and
alpha 255 with full coverage writes the fill color exactly.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .errors import InputError

# 5x7 glyph columns for ASCII 0x20..0x7E; bit k of a column byte is row k
_FONT_HEX = (
    "0000000000" "00005F0000" "0007000700" "147F147F14" "242A7F2A12"
    "2313086462" "3649552250" "0005030000" "001C224100" "0041221C00"
    "082A1C2A08" "08083E0808" "0050300000" "0808080808" "0060600000"
    "2010080402" "3E5149453E" "00427F4000" "4261514946" "2141454B31"
    "1814127F10" "2745454539" "3C4A494930" "0171090503" "3649494936"
    "064949291E" "0036360000" "0056360000" "0008142241" "1414141414"
    "4122140800" "0201510906" "324979413E" "7E1111117E" "7F49494936"
    "3E41414122" "7F4141221C" "7F49494941" "7F09090101" "3E41415132"
    "7F0808087F" "00417F4100" "2040413F01" "7F08142241" "7F40404040"
    "7F0204027F" "7F0408107F" "3E4141413E" "7F09090906" "3E4151215E"
    "7F09192946" "4649494931" "01017F0101" "3F4040403F" "1F2040201F"
    "7F2018207F" "6314081463" "0304780403" "6151494543" "00007F4141"
    "0204081020" "41417F0000" "0402010204" "4040404040" "0001020400"
    "2054545478" "7F48444438" "3844444420" "384444487F" "3854545418"
    "087E090102" "081454543C" "7F08040478" "00447D4000" "2040443D00"
    "007F102844" "00417F4000" "7C04180478" "7C08040478" "3844444438"
    "7C14141408" "081414187C" "7C08040408" "4854545420" "043F444020"
    "3C4040207C" "1C2040201C" "3C4030403C" "4428102844" "0C5050503C"
    "4464544C44" "0008364100" "00007F0000" "0041360800" "0804081008"
)

GLYPH_W, GLYPH_H = 5, 7
CHAR_ADVANCE = 6  # one blank column between glyphs

_GLYPHS: dict[str, tuple[int, ...]] = {
    chr(0x20 + i): tuple(int(_FONT_HEX[i * 10 + 2 * c:i * 10 + 2 * c + 2], 16) for c in range(5))
    for i in range(95)
}

_SS = 4  # supersampling factor per axis
_SUB = (np.arange(_SS) + 0.5) / _SS

RGBA = tuple[int, int, int, int]


def new_overlay(width: int, height: int) -> np.ndarray:
    """Float premultiplied working buffer: rgb in [0, 255], alpha in [0, 1]."""
    return np.zeros((height, width, 4), dtype=np.float64)


def _blend(buf: np.ndarray, y0: int, x0: int, coverage: np.ndarray, color: RGBA) -> None:
    """Source-over of one shape's coverage patch into the working buffer."""
    r, g, b, a = color
    alpha = coverage * (a / 255.0)
    region = buf[y0:y0 + coverage.shape[0], x0:x0 + coverage.shape[1]]
    one_minus = 1.0 - alpha
    for c, v in enumerate((r, g, b)):
        region[:, :, c] = v * alpha + region[:, :, c] * one_minus
    region[:, :, 3] = alpha + region[:, :, 3] * one_minus


def _coverage_box(shape_mask, x_lo: float, x_hi: float, y_lo: float, y_hi: float,
                  size: tuple[int, int]) -> tuple[int, int, np.ndarray] | None:
    """Evaluate a point-inside predicate on the supersample grid of the
    clipped integer bounding box; returns (y0, x0, coverage)."""
    w, h = size
    x0 = max(int(np.floor(x_lo)), 0)
    y0 = max(int(np.floor(y_lo)), 0)
    x1 = min(int(np.ceil(x_hi)), w)
    y1 = min(int(np.ceil(y_hi)), h)
    if x0 >= x1 or y0 >= y1:
        return None
    xs = (x0 + np.add.outer(np.arange(x1 - x0), _SUB)).reshape(-1)  # (bw*_SS,)
    ys = (y0 + np.add.outer(np.arange(y1 - y0), _SUB)).reshape(-1)
    inside = shape_mask(xs[None, :], ys[:, None])
    cov = inside.reshape(y1 - y0, _SS, x1 - x0, _SS).mean(axis=(1, 3))
    return y0, x0, cov


def fill_disc(buf: np.ndarray, center: tuple[float, float], radius: float, color: RGBA) -> None:
    if radius <= 0:
        return
    cx, cy = center
    r2 = radius * radius
    box = _coverage_box(lambda x, y: (x - cx) ** 2 + (y - cy) ** 2 <= r2,
                        cx - radius, cx + radius, cy - radius, cy + radius,
                        (buf.shape[1], buf.shape[0]))
    if box is not None:
        _blend(buf, box[0], box[1], box[2], color)


def fill_convex_polygon(buf: np.ndarray, points, color: RGBA) -> None:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise InputError("polygon needs at least 3 (x, y) points")
    area2 = 0.0
    n = pts.shape[0]
    for i in range(n):
        j = (i + 1) % n
        area2 += pts[i, 0] * pts[j, 1] - pts[j, 0] * pts[i, 1]
    if area2 == 0.0:
        return
    if area2 < 0.0:
        pts = pts[::-1]

    def inside(x, y):
        ok = np.ones(np.broadcast_shapes(x.shape, y.shape), dtype=bool)
        for i in range(n):
            j = (i + 1) % n
            ex, ey = pts[j] - pts[i]
            ok &= (x - pts[i, 0]) * ey - (y - pts[i, 1]) * ex <= 0.0
        return ok

    box = _coverage_box(inside, pts[:, 0].min(), pts[:, 0].max(),
                        pts[:, 1].min(), pts[:, 1].max(), (buf.shape[1], buf.shape[0]))
    if box is not None:
        _blend(buf, box[0], box[1], box[2], color)


def fill_rect(buf: np.ndarray, x0: float, y0: float, x1: float, y1: float, color: RGBA) -> None:
    fill_convex_polygon(buf, [(x0, y0), (x1, y0), (x1, y1), (x0, y1)], color)


def draw_line(buf: np.ndarray, p0: tuple[float, float], p1: tuple[float, float],
              width: float, color: RGBA) -> None:
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    length = float(np.hypot(dx, dy))
    if length == 0.0 or width <= 0.0:
        return
    nx, ny = -dy / length * width / 2.0, dx / length * width / 2.0
    fill_convex_polygon(buf, [(p0[0] + nx, p0[1] + ny), (p1[0] + nx, p1[1] + ny),
                              (p1[0] - nx, p1[1] - ny), (p0[0] - nx, p0[1] - ny)], color)


def rect_outline(buf: np.ndarray, x0: float, y0: float, x1: float, y1: float,
                 width: float, color: RGBA) -> None:
    fill_rect(buf, x0, y0, x1, y0 + width, color)
    fill_rect(buf, x0, y1 - width, x1, y1, color)
    fill_rect(buf, x0, y0 + width, x0 + width, y1 - width, color)
    fill_rect(buf, x1 - width, y0 + width, x1, y1 - width, color)


def text_width(text: str, scale: int = 1) -> int:
    if not text:
        return 0
    return (len(text) * CHAR_ADVANCE - 1) * scale


def draw_text(buf: np.ndarray, xy: tuple[float, float], text: str, color: RGBA,
              scale: int = 1) -> None:
    """Hard-edged glyph blit at integer pixels; unknown characters render
    as '?'. xy is the top-left of the first glyph cell."""
    h, w = buf.shape[:2]
    pen_x = int(round(xy[0]))
    top = int(round(xy[1]))
    cov1 = np.ones((scale, scale), dtype=np.float64)
    for ch in text:
        cols = _GLYPHS.get(ch) or _GLYPHS["?"]
        for cx, colbits in enumerate(cols):
            for row in range(GLYPH_H):
                if not (colbits >> row) & 1:
                    continue
                px = pen_x + cx * scale
                py = top + row * scale
                if px < 0 or py < 0 or px + scale > w or py + scale > h:
                    continue
                _blend(buf, py, px, cov1, color)
        pen_x += CHAR_ADVANCE * scale


def quantize_overlay(buf: np.ndarray) -> np.ndarray:
    """Working buffer -> premultiplied uint8 RGBA, round-half-up."""
    out = np.empty(buf.shape, dtype=np.uint8)
    out[:, :, :3] = np.floor(np.clip(buf[:, :, :3], 0.0, 255.0) + 0.5).astype(np.uint8)
    out[:, :, 3] = np.floor(np.clip(buf[:, :, 3], 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    return out


def composite_over(frame: np.ndarray, overlay: np.ndarray) -> np.ndarray:
    """Premultiplied source-over in integer math.

    out = overlay_rgb + (frame * (255 - a) + 127) // 255, which degrades to
    the untouched frame where a == 0 and to the exact overlay color where
    the overlay is opaque.
    """
    if frame.dtype != np.uint8 or overlay.dtype != np.uint8:
        raise InputError("composite_over expects uint8 arrays")
    if frame.shape[:2] != overlay.shape[:2] or frame.shape[2] != 3 or overlay.shape[2] != 4:
        raise InputError("expected HxWx3 frame and HxWx4 overlay of the same size")
    a = overlay[:, :, 3:4].astype(np.uint32)
    frame_part = (frame.astype(np.uint32) * (255 - a) + 127) // 255
    return (overlay[:, :, :3].astype(np.uint32) + frame_part).astype(np.uint8)


# ---------------------------------------------------------------------------
# PNG I/O


def encode_png(image: np.ndarray) -> bytes:
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] not in (3, 4):
        raise InputError("expected a uint8 HxWx3 or HxWx4 image")
    mode = "RGB" if image.shape[2] == 3 else "RGBA"
    out = io.BytesIO()
    Image.fromarray(image, mode).save(out, format="PNG")
    return out.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise InputError(f"not a decodable PNG: {exc}")
    if img.mode == "RGBA":
        return np.asarray(img)
    return np.asarray(img.convert("RGB"))


def load_png(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_png(fh.read())


def save_png(path, image: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(image))


# ---------------------------------------------------------------------------
# baseline chart rendering (the printed chart the camera films)

_AXIS_COLOR: RGBA = (60, 60, 60, 255)
_TEXT_COLOR: RGBA = (30, 30, 30, 255)


def _format_tick(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return f"{value:g}"


def render_chart(spec, dataset) -> np.ndarray:
    """Flat render of the chart: background, frame, ticks, labels, title,
    footer, and all marks. No session state is involved; interaction is
    drawn by the overlay planner on top of this."""
    from .chart import BandScale, LinearScale, layout_marks, scale_apply

    width, height = spec.image_size
    buf = new_overlay(width, height)
    br, bg_, bb = spec.background_color
    fill_rect(buf, 0, 0, width, height, (br, bg_, bb, 255))

    pa = spec.plot_area
    rect_outline(buf, pa.x0, pa.y0, pa.x1, pa.y1, 1.0, _AXIS_COLOR)

    if spec.title:
        tw = text_width(spec.title, 2)
        draw_text(buf, ((width - tw) / 2, 6), spec.title, _TEXT_COLOR, 2)

    # y ticks (linear axis): five evenly spaced labels, right-aligned
    if isinstance(spec.y_scale, LinearScale):
        d0, d1 = spec.y_scale.domain
        for t in np.linspace(d0, d1, 5):
            y = scale_apply(spec.y_scale, float(t))
            label = _format_tick(float(t))
            fill_rect(buf, pa.x0 - 4, y - 0.5, pa.x0, y + 0.5, _AXIS_COLOR)
            draw_text(buf, (pa.x0 - 6 - text_width(label), y - 3), label, _TEXT_COLOR)
        draw_text(buf, (pa.x0, pa.y0 - 10), spec.y_attribute, _TEXT_COLOR)

    # x axis: linear ticks or band category labels
    if isinstance(spec.x_scale, LinearScale):
        d0, d1 = spec.x_scale.domain
        for t in np.linspace(d0, d1, 5):
            x = scale_apply(spec.x_scale, float(t))
            label = _format_tick(float(t))
            fill_rect(buf, x - 0.5, pa.y1, x + 0.5, pa.y1 + 4, _AXIS_COLOR)
            draw_text(buf, (x - text_width(label) / 2, pa.y1 + 7), label, _TEXT_COLOR)
    elif isinstance(spec.x_scale, BandScale):
        for cat in spec.x_scale.categories:
            x = scale_apply(spec.x_scale, cat)
            draw_text(buf, (x - text_width(cat) / 2, pa.y1 + 7), cat, _TEXT_COLOR)
    draw_text(buf, ((pa.x0 + pa.x1) / 2 - text_width(spec.x_attribute) / 2, pa.y1 + 18),
              spec.x_attribute, _TEXT_COLOR)

    if spec.data_ref:
        draw_text(buf, (6, height - 12), spec.data_ref, _TEXT_COLOR)

    r, g, b = spec.mark_style.fill_color
    for mark in layout_marks(spec, dataset):
        if mark.is_disc:
            fill_disc(buf, mark.center, float(mark.extent), (r, g, b, 255))
        else:
            e = mark.extent
            fill_rect(buf, e.x0, e.y0, e.x1, e.y1, (r, g, b, 255))

    rgba = quantize_overlay(buf)
    base = np.zeros((height, width, 3), dtype=np.uint8)
    return composite_over(base, rgba)
