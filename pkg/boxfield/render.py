"""
Rasterization of box fields: filled black boxes on white, PNG via Pillow or
SVG with one rectangle element per box.
"""

from __future__ import annotations

import io
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from boxfield.errors import BudgetError, DomainError
from boxfield.measures import box_indicator
from boxfield.process import BoxField, ScalingPlan, TruncationReport, sample_box_field, truncation_budget

logger = logging.getLogger(__name__)

MAX_PIXELS = 64_000_000
SVG_NS = "http://www.w3.org/2000/svg"
# grey level of one layer in alpha mode
_ALPHA_LAYER = 0.65


@dataclass(frozen=True)
class RasterSpec:
    viewport: tuple[float, float, float, float] = (-1.0, -1.0, 1.0, 1.0)
    pixels: tuple[int, int] = (1024, 1024)
    fill: str = "binary"
    format: str = "png"

    def __post_init__(self):
        x0, y0, x1, y1 = self.viewport
        if not (x0 < x1 and y0 < y1):
            raise DomainError(f"viewport must have x0 < x1 and y0 < y1 (got {self.viewport})")
        if min(self.pixels) <= 0:
            raise DomainError(f"pixel dimensions must be positive (got {self.pixels})")
        if self.fill not in ("binary", "alpha"):
            raise DomainError(f"fill must be binary or alpha (got {self.fill!r})")
        if self.format not in ("png", "svg"):
            raise DomainError(f"format must be png or svg (got {self.format!r})")

    @property
    def pixel_size(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.viewport
        return (x1 - x0) / self.pixels[0], (y1 - y0) / self.pixels[1]

    def check_budget(self) -> None:
        required = self.pixels[0] * self.pixels[1]
        if required > MAX_PIXELS:
            raise BudgetError(f"raster of {required} pixels exceeds the limit of {MAX_PIXELS}",
                              required=required, budget=MAX_PIXELS)


def _corners(centres: np.ndarray, edges: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """(n, 4, 2) corner coordinates of rotated boxes."""
    cos, sin = np.cos(angles), np.sin(angles)
    half = edges / 2.0
    local = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    dx = local[None, :, 0] * half[:, None, 0]
    dy = local[None, :, 1] * half[:, None, 1]
    x = centres[:, None, 0] + dx * cos[:, None] - dy * sin[:, None]
    y = centres[:, None, 1] + dx * sin[:, None] + dy * cos[:, None]
    return np.stack([x, y], axis=2)


def _bounds(field: BoxField) -> np.ndarray:
    """(n, 4) axis-aligned bounding boxes [x0, y0, x1, y1]."""
    if field.angles is None:
        half = field.edges / 2.0
        return np.concatenate([field.centres - half, field.centres + half], axis=1)
    corners = _corners(field.centres, field.edges, field.angles)
    return np.concatenate([corners.min(axis=1), corners.max(axis=1)], axis=1)


def _visible(field: BoxField, spec: RasterSpec) -> np.ndarray:
    x0, y0, x1, y1 = spec.viewport
    b = _bounds(field)
    return (b[:, 2] > x0) & (b[:, 0] < x1) & (b[:, 3] > y0) & (b[:, 1] < y1)


def _coverage_axis_aligned(bounds: np.ndarray, spec: RasterSpec) -> np.ndarray:
    """Per-pixel count of overlapping boxes via a 2-D difference array."""
    width, height = spec.pixels
    px, py = spec.pixel_size
    vx0, _, _, vy1 = spec.viewport
    col_lo = np.clip(np.floor((bounds[:, 0] - vx0) / px), 0, width - 1).astype(int)
    col_hi = np.clip(np.ceil((bounds[:, 2] - vx0) / px) - 1, 0, width - 1).astype(int)
    row_lo = np.clip(np.floor((vy1 - bounds[:, 3]) / py), 0, height - 1).astype(int)
    row_hi = np.clip(np.ceil((vy1 - bounds[:, 1]) / py) - 1, 0, height - 1).astype(int)
    ok = (col_lo <= col_hi) & (row_lo <= row_hi)
    diff = np.zeros((height + 1, width + 1), dtype=np.int64)
    np.add.at(diff, (row_lo[ok], col_lo[ok]), 1)
    np.add.at(diff, (row_lo[ok], col_hi[ok] + 1), -1)
    np.add.at(diff, (row_hi[ok] + 1, col_lo[ok]), -1)
    np.add.at(diff, (row_hi[ok] + 1, col_hi[ok] + 1), 1)
    return diff.cumsum(axis=0).cumsum(axis=1)[:height, :width]


def _to_pixel_coords(points: np.ndarray, spec: RasterSpec) -> np.ndarray:
    px, py = spec.pixel_size
    vx0, _, _, vy1 = spec.viewport
    return np.stack([(points[..., 0] - vx0) / px, (vy1 - points[..., 1]) / py], axis=-1)


def _coverage_rotated(field: BoxField, mask: np.ndarray, spec: RasterSpec, binary: bool) -> np.ndarray:
    width, height = spec.pixels
    polys = _to_pixel_coords(_corners(field.centres[mask], field.edges[mask], field.angles[mask]), spec)
    if binary:
        canvas = Image.new("L", (width, height), 0)
        draw = ImageDraw.Draw(canvas)
        for poly in polys:
            draw.polygon([tuple(p) for p in poly], fill=1)
        return np.asarray(canvas, dtype=np.int64)
    counts = np.zeros((height, width), dtype=np.int64)
    for poly in polys:
        lo = np.clip(np.floor(poly.min(axis=0)).astype(int), 0, [width, height])
        hi = np.clip(np.ceil(poly.max(axis=0)).astype(int) + 1, 0, [width, height])
        if lo[0] >= hi[0] or lo[1] >= hi[1]:
            continue
        tile = Image.new("L", (int(hi[0] - lo[0]), int(hi[1] - lo[1])), 0)
        ImageDraw.Draw(tile).polygon([tuple(p - lo) for p in poly], fill=1)
        counts[lo[1]:hi[1], lo[0]:hi[0]] += np.asarray(tile, dtype=np.int64)
    return counts


def rasterize(field: BoxField, spec: RasterSpec) -> np.ndarray:
    """(height, width) uint8 image; row 0 is the top of the viewport."""
    spec.check_budget()
    width, height = spec.pixels
    mask = _visible(field, spec) if field.count else np.zeros(0, dtype=bool)
    if not mask.any():
        return np.full((height, width), 255, dtype=np.uint8)
    binary = spec.fill == "binary"
    if field.angles is None:
        counts = _coverage_axis_aligned(_bounds(field)[mask], spec)
    else:
        counts = _coverage_rotated(field, mask, spec, binary)
    if binary:
        return np.where(counts > 0, 0, 255).astype(np.uint8)
    return np.round(255.0 * _ALPHA_LAYER ** counts).astype(np.uint8)


def svg(field: BoxField, spec: RasterSpec) -> str:
    """SVG document in model coordinates with the y axis flipped."""
    x0, y0, x1, y1 = spec.viewport
    root = ET.Element("svg", {
        "xmlns": SVG_NS,
        "width": str(spec.pixels[0]),
        "height": str(spec.pixels[1]),
        "viewBox": f"{x0!r} {-y1!r} {x1 - x0!r} {y1 - y0!r}",
        "shape-rendering": "crispEdges",
    })
    ET.SubElement(root, "rect", {"x": repr(x0), "y": repr(-y1), "width": repr(x1 - x0),
                                 "height": repr(y1 - y0), "fill": "white"})
    opacity = "1" if spec.fill == "binary" else repr(1.0 - _ALPHA_LAYER)
    mask = _visible(field, spec) if field.count else np.zeros(0, dtype=bool)
    for j in np.flatnonzero(mask):
        cx, cy = (float(v) for v in field.centres[j])
        w, h = (float(v) for v in field.edges[j])
        attrs = {"x": repr(cx - w / 2.0), "y": repr(-cy - h / 2.0), "width": repr(w), "height": repr(h),
                 "fill": "black", "fill-opacity": opacity}
        if field.angles is not None:
            attrs["transform"] = f"rotate({-math.degrees(float(field.angles[j]))!r} {cx!r} {-cy!r})"
        ET.SubElement(root, "rect", attrs)
    return ET.tostring(root, encoding="unicode") + "\n"


def svg_to_raster(document: str, spec: RasterSpec) -> np.ndarray:
    """Rasterize an SVG written by `svg` back into pixels (rect elements only)."""
    root = ET.fromstring(document)
    centres, edges, angles = [], [], []
    rotated = False
    for node in root.iter(f"{{{SVG_NS}}}rect"):
        if node.get("fill") != "black":
            continue
        x, y = float(node.get("x")), float(node.get("y"))
        w, h = float(node.get("width")), float(node.get("height"))
        centres.append((x + w / 2.0, -(y + h / 2.0)))
        edges.append((w, h))
        transform = node.get("transform")
        if transform:
            rotated = True
            angles.append(-math.radians(float(transform[len("rotate("):].split()[0])))
        else:
            angles.append(0.0)
    c = np.asarray(centres, dtype=float).reshape(-1, 2)
    e = np.asarray(edges, dtype=float).reshape(-1, 2)
    field = _raw_field(c, e, np.asarray(angles) if rotated else None)
    return rasterize(field, spec)


def _raw_field(centres: np.ndarray, edges: np.ndarray, angles: np.ndarray | None) -> BoxField:
    report = TruncationReport(window_half=0.0, caps=(math.inf, math.inf), eps_trunc=0.0,
                              discarded_cap_mass=0.0, discarded_window_mass=0.0,
                              expected_count=float(centres.shape[0]), rotated=angles is not None)
    return BoxField(centres, edges, angles, report)


def encode_png(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).save(buf, format="PNG")
    return buf.getvalue()


def render_field(field: BoxField, spec: RasterSpec) -> bytes:
    """Image bytes in `spec.format`."""
    if spec.format == "svg":
        return svg(field, spec).encode()
    data = encode_png(rasterize(field, spec))
    logger.debug("rendered %d boxes into %dx%d PNG", field.count, *spec.pixels)
    return data


# ---------------------------------------------------------------------------
# Image statistics
# ---------------------------------------------------------------------------

def black_fraction(image: np.ndarray) -> float:
    return float(np.mean(np.asarray(image) < 128))


def _run_lengths(mask: np.ndarray) -> np.ndarray:
    """Lengths of consecutive True runs along the last axis."""
    padded = np.zeros(mask.shape[:-1] + (mask.shape[-1] + 2,), dtype=np.int8)
    padded[..., 1:-1] = mask
    steps = np.diff(padded, axis=-1)
    starts = np.argwhere(steps == 1)
    ends = np.argwhere(steps == -1)
    return ends[:, -1] - starts[:, -1]


def anisotropy_ratio(image: np.ndarray) -> float:
    """Length-weighted mean black-run length along rows over the same along columns."""
    black = np.asarray(image) < 128
    rows = _run_lengths(black).astype(float)
    cols = _run_lengths(black.T).astype(float)
    if rows.size == 0 or cols.size == 0:
        return 1.0
    return float((np.sum(rows ** 2) / np.sum(rows)) / (np.sum(cols ** 2) / np.sum(cols)))


def sample_render_field(
    plan: ScalingPlan,
    rng: np.random.Generator,
    viewport: tuple[float, float, float, float] = (-1.0, -1.0, 1.0, 1.0),
    rotate: bool = False,
    max_boxes: int = 2_000_000,
) -> BoxField:
    """Boxes of `plan` that can reach the viewport (window = viewport, caps from a unit budget)."""
    x0, y0, x1, y1 = viewport
    probe = box_indicator(x0, y0, x1, y1)
    report = truncation_budget(plan, probe, eps_trunc=1.0, rotate=rotate, max_boxes=max_boxes)
    field = sample_box_field(plan, probe, rng, rotate=rotate, report=report)
    logger.info("sampled %d boxes for rendering (expected %.3g)", field.count, report.expected_count)
    return field
