"""Fiducial marker detection in grayscale camera frames.

Pipeline: adaptive threshold -> external contour tracing -> polygon
simplification to quads -> projective unwarp -> bit sampling -> dictionary
decode. All stages are pure functions over immutable inputs; the pipeline is
deterministic and safe to run on distinct frames concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import marker_codec
from .marker_codec import MarkerCodecError
from .raster import UnsupportedImage, window_sums

UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))

# Patch geometry for bit sampling: 7 cells of 7 px each.
_PATCH_CELL_PX = 7
_PATCH_PX = marker_codec.GRID_SIZE * _PATCH_CELL_PX

MIN_FRAME_SIDE = 16


class DegenerateQuad(ValueError):
    """The four corners do not define an invertible projective map."""


@dataclass(frozen=True)
class Frame:
    """A preprocessed grayscale frame with mirror-parity already applied."""

    pixels: np.ndarray  # uint8, shape (height, width)
    flip_h: bool = False
    flip_v: bool = False

    def __post_init__(self) -> None:
        if self.pixels.dtype != np.uint8 or self.pixels.ndim != 2:
            raise UnsupportedImage("Frame requires a 2-D uint8 pixel array")
        h, w = self.pixels.shape
        if h < MIN_FRAME_SIDE or w < MIN_FRAME_SIDE:
            raise UnsupportedImage(f"frame {w}x{h} below minimum side {MIN_FRAME_SIDE}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class DetectConfig:
    threshold_radius: int = 7
    threshold_c: int = 7
    min_contour_points: int = 20
    min_quad_perimeter: float = 80.0
    rdp_epsilon_frac: float = 0.05
    decode_tolerance: int = 0  # strict by default; at most 1

    def __post_init__(self) -> None:
        if not 0 <= self.decode_tolerance <= 1:
            raise ValueError("decode_tolerance is configurable between 0 and 1")


@dataclass(frozen=True)
class MarkerObservation:
    marker_id: int
    corners: tuple[tuple[float, float], ...]  # clockwise, canonical top-left first
    center: tuple[float, float]
    orientation_deg: float
    bit_errors: int

    def to_json_dict(self) -> dict:
        return {
            "id": self.marker_id,
            "center": [round(self.center[0], 3), round(self.center[1], 3)],
            "corners": [[round(x, 3), round(y, 3)] for x, y in self.corners],
            "orientation_deg": round(self.orientation_deg, 3),
            "bit_errors": self.bit_errors,
        }


def _to_gray(raw: np.ndarray) -> np.ndarray:
    if raw.dtype != np.uint8:
        raise UnsupportedImage(f"expected 8-bit pixels, got {raw.dtype}")
    if raw.ndim == 2:
        return raw
    if raw.ndim == 3 and raw.shape[2] == 3:
        weights = np.array([0.299, 0.587, 0.114])
        luma = raw.astype(np.float64) @ weights
        return np.floor(luma + 0.5).astype(np.uint8)
    raise UnsupportedImage(f"unsupported image shape {raw.shape}")


def preprocess(raw: np.ndarray, flip_h: bool = False, flip_v: bool = False) -> Frame:
    """Convert to grayscale (luma 0.299/0.587/0.114) and undo mirror parity."""
    gray = _to_gray(np.asarray(raw))
    if flip_h:
        gray = np.fliplr(gray)
    if flip_v:
        gray = np.flipud(gray)
    return Frame(pixels=np.ascontiguousarray(gray), flip_h=flip_h, flip_v=flip_v)


def adaptive_threshold(
    frame: Frame, radius: int = 7, c: int = 7, bright: bool = False
) -> np.ndarray:
    """Mark pixels strictly darker than their clipped local mean minus c.

    With bright=True the comparison is inverted (strictly brighter than the
    local mean plus c), which is what page scanning uses. The local mean is
    exact: integer window sums and counts, no floating point.
    """
    pix = frame.pixels.astype(np.int64)
    sums, counts = window_sums(pix, radius)
    if bright:
        mask = (pix - c) * counts > sums
    else:
        mask = (pix + c) * counts < sums
    return mask.astype(np.uint8)


# Moore neighborhood in clockwise order (image coordinates, y down),
# starting at west. (dx, dy) pairs.
_NEIGHBORS = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_NEIGHBOR_INDEX = {off: i for i, off in enumerate(_NEIGHBORS)}


def _trace_boundary(labels: np.ndarray, lbl: int, start_x: int, start_y: int) -> list[tuple[int, int]]:
    """Moore-neighbor tracing of one region's external boundary, clockwise."""
    h, w = labels.shape
    cur = (start_x, start_y)
    back = (start_x - 1, start_y)
    contour = [cur]
    first_move: tuple | None = None
    max_steps = 8 * h * w  # safety cap; real loops terminate via Jacob's criterion
    steps = 0
    while steps < max_steps:
        steps += 1
        bi = _NEIGHBOR_INDEX[(back[0] - cur[0], back[1] - cur[1])]
        nxt = None
        for k in range(1, 9):
            dx, dy = _NEIGHBORS[(bi + k) % 8]
            cx, cy = cur[0] + dx, cur[1] + dy
            if 0 <= cx < w and 0 <= cy < h and labels[cy, cx] == lbl:
                nxt = (cx, cy)
                pdx, pdy = _NEIGHBORS[(bi + k - 1) % 8]
                back = (cur[0] + pdx, cur[1] + pdy)
                break
        if nxt is None:
            break  # isolated pixel
        move = (cur, nxt)
        if first_move is None:
            first_move = move
        elif move == first_move:
            break
        contour.append(nxt)
        cur = nxt
    if len(contour) > 1 and contour[-1] == contour[0]:
        contour.pop()
    return contour


def trace_contours(binary: np.ndarray, min_contour_points: int = 20) -> list[np.ndarray]:
    """External boundaries of 8-connected foreground regions.

    Each contour is an (N, 2) int array of (x, y) boundary pixels forming a
    closed loop; loops shorter than min_contour_points are dropped.
    """
    structure = np.ones((3, 3), dtype=np.uint8)
    labels, count = ndimage.label(binary, structure=structure)
    if count == 0:
        return []
    flat = labels.ravel()
    areas = np.bincount(flat, minlength=count + 1)
    # First row-major pixel of each label = topmost-then-leftmost start point.
    order = np.argsort(flat, kind="stable")
    boundaries = np.searchsorted(flat[order], np.arange(1, count + 1))
    width = binary.shape[1]
    contours = []
    for lbl in range(1, count + 1):
        # A region of area A yields a loop no longer than 4A; skip hopeless ones.
        if 4 * areas[lbl] < min_contour_points:
            continue
        start = order[boundaries[lbl - 1]]
        sy, sx = divmod(int(start), width)
        loop = _trace_boundary(labels, lbl, sx, sy)
        if len(loop) >= min_contour_points:
            contours.append(np.array(loop, dtype=np.int64))
    return contours


def _perpendicular_distances(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    norm = math.hypot(ab[0], ab[1])
    if norm == 0.0:
        return np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])
    cross = np.abs((pts[:, 0] - a[0]) * ab[1] - (pts[:, 1] - a[1]) * ab[0])
    return cross / norm


def _rdp(points: np.ndarray, epsilon: float) -> list[int]:
    """Ramer-Douglas-Peucker on an open polyline; returns kept indices."""
    n = len(points)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i0, i1 = stack.pop()
        if i1 <= i0 + 1:
            continue
        seg = points[i0 + 1 : i1]
        dists = _perpendicular_distances(seg, points[i0], points[i1])
        k = int(np.argmax(dists))
        if dists[k] > epsilon:
            mid = i0 + 1 + k
            keep[mid] = True
            stack.append((i0, mid))
            stack.append((mid, i1))
    return [int(i) for i in np.flatnonzero(keep)]


def _closed_perimeter(pts: np.ndarray) -> float:
    diffs = np.diff(np.vstack([pts, pts[:1]]).astype(np.float64), axis=0)
    return float(np.hypot(diffs[:, 0], diffs[:, 1]).sum())


def _signed_area(pts: np.ndarray) -> float:
    x = pts[:, 0]
    y = pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _is_strictly_convex(pts: np.ndarray) -> bool:
    n = len(pts)
    sign = 0.0
    for i in range(n):
        a = pts[i]
        b = pts[(i + 1) % n]
        c = pts[(i + 2) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cross == 0.0:
            return False
        if sign == 0.0:
            sign = cross
        elif sign * cross < 0.0:
            return False
    return True


def _mean_edge_residual(points: np.ndarray, quad: np.ndarray) -> float:
    """Mean distance from contour points to the nearest quad edge line."""
    dists = np.full(len(points), np.inf)
    for k in range(4):
        a = quad[k]
        b = quad[(k + 1) % 4]
        dists = np.minimum(dists, _perpendicular_distances(points, a, b))
    return float(dists.mean())


def _drop_collinear(ring: list[np.ndarray], epsilon: float) -> list[np.ndarray]:
    """Remove ring vertices within epsilon of their neighbors' chord.

    The closed-loop RDP split anchors are forced into the output even when
    they sit mid-edge; this pass erases such artifacts.
    """
    ring = list(ring)
    changed = True
    while changed and len(ring) > 3:
        changed = False
        best_i = -1
        best_d = epsilon
        for i in range(len(ring)):
            a = ring[i - 1]
            b = ring[i]
            c = ring[(i + 1) % len(ring)]
            d = float(_perpendicular_distances(b[None, :], a, c)[0])
            if d <= best_d:
                best_d = d
                best_i = i
        if best_i >= 0:
            ring.pop(best_i)
            changed = True
    return ring


def _fit_line(points: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Total-least-squares line through points: (centroid, unit direction)."""
    if len(points) < 2:
        return None
    centroid = points.mean(axis=0)
    centered = points - centroid
    cov = centered.T @ centered
    eigvals, eigvecs = np.linalg.eigh(cov)
    direction = eigvecs[:, int(np.argmax(eigvals))]
    return centroid, direction


def _fit_edge(points: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Line fit with one inlier re-pass to shed points from adjacent edges."""
    line = _fit_line(points)
    if line is None:
        return None
    centroid, direction = line
    normal = np.array([-direction[1], direction[0]])
    resid = np.abs((points - centroid) @ normal)
    inliers = points[resid <= 1.5]
    if len(inliers) >= 2:
        refit = _fit_line(inliers)
        if refit is not None:
            return refit
    return line


def _intersect_lines(
    l1: tuple[np.ndarray, np.ndarray], l2: tuple[np.ndarray, np.ndarray]
) -> np.ndarray | None:
    (p1, d1), (p2, d2) = l1, l2
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < 1e-9:
        return None
    t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / denom
    return p1 + t * d1


def _refine_corners(contour: np.ndarray, quad: np.ndarray) -> np.ndarray:
    """Replace staircase-quantized RDP vertices by edge-line intersections.

    Each quad edge is fit to the contour points strictly between its two RDP
    vertices (ends trimmed to avoid corner rounding); adjacent fitted lines
    intersect at the sub-pixel corner. Falls back to the RDP vertex when a
    fit is degenerate or the correction is implausibly large.
    """
    n = len(contour)
    idx = []
    for vx, vy in quad:
        matches = np.flatnonzero((contour[:, 0] == vx) & (contour[:, 1] == vy))
        if len(matches) == 0:
            return quad
        idx.append(int(matches[0]))

    lines = []
    edge_lens = []
    for k in range(4):
        i0, i1 = idx[k], idx[(k + 1) % 4]
        length = (i1 - i0) % n
        if length < 4:
            return quad
        trim = max(1, length // 8)
        seg_idx = [(i0 + t) % n for t in range(trim, length - trim + 1)]
        line = _fit_edge(contour[seg_idx].astype(np.float64))
        if line is None:
            return quad
        lines.append(line)
        edge_lens.append(float(np.hypot(*(quad[(k + 1) % 4] - quad[k]))))

    refined = quad.copy()
    for k in range(4):
        # Corner k joins edge (k-1) -> k and edge k -> k+1.
        pt = _intersect_lines(lines[k - 1], lines[k])
        if pt is None:
            continue
        cap = max(8.0, 0.35 * min(edge_lens[k - 1], edge_lens[k]))
        if np.hypot(*(pt - quad[k])) <= cap:
            refined[k] = pt
    return refined


def approx_quads(
    contours: list[np.ndarray],
    min_perimeter_px: float = 80.0,
    epsilon_frac: float = 0.05,
) -> list[np.ndarray]:
    """Simplify contours and keep convex quadrilaterals.

    Corners come back as float (4, 2) arrays ordered clockwise (image sense,
    y down) starting at the topmost-then-leftmost corner.
    """
    quads = []
    for contour in contours:
        pts = contour.astype(np.float64)
        eps = epsilon_frac * _closed_perimeter(pts)
        # Split the closed loop at the point farthest from point 0.
        far = int(np.argmax(np.hypot(pts[:, 0] - pts[0, 0], pts[:, 1] - pts[0, 1])))
        if far == 0:
            continue
        first = pts[: far + 1]
        second = np.vstack([pts[far:], pts[:1]])
        kept = [first[i] for i in _rdp(first, eps)[:-1]]
        kept += [second[i] for i in _rdp(second, eps)[:-1]]
        kept = _drop_collinear(kept, eps)
        if len(kept) != 4:
            continue
        quad = np.array(kept, dtype=np.float64)
        if not _is_strictly_convex(quad):
            continue
        quad = _refine_corners(contour, quad)
        if not _is_strictly_convex(quad):
            continue
        if _closed_perimeter(quad) < min_perimeter_px:
            continue
        # Round blobs also collapse to 4 vertices (a circle's quarter-arc
        # sagitta is 4.66% of its perimeter, always under the epsilon), so
        # demand that the contour actually hugs the quad's edges. Circles
        # sit near 1.2% mean residual, genuine quads under 0.2%.
        if _mean_edge_residual(pts, quad) > 0.0105 * _closed_perimeter(pts):
            continue
        if _signed_area(quad) < 0:  # enforce clockwise in image coordinates
            quad = quad[::-1]
        start = int(np.lexsort((quad[:, 0], quad[:, 1]))[0])
        quads.append(np.roll(quad, -start, axis=0))
    return quads


def homography_from_quad(src, dst) -> np.ndarray:
    """Direct linear solution of the 4-point projective map src -> dst.

    Returns a 3x3 matrix with bottom-right entry 1. Raises DegenerateQuad if
    the 8x8 system has a pivot below 1e-12 during elimination.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != (4, 2) or dst.shape != (4, 2):
        raise ValueError("homography_from_quad expects 4 source and 4 target points")
    a = np.zeros((8, 8), dtype=np.float64)
    b = np.zeros(8, dtype=np.float64)
    for i, ((sx, sy), (dx, dy)) in enumerate(zip(src, dst)):
        a[2 * i] = (sx, sy, 1.0, 0.0, 0.0, 0.0, -sx * dx, -sy * dx)
        b[2 * i] = dx
        a[2 * i + 1] = (0.0, 0.0, 0.0, sx, sy, 1.0, -sx * dy, -sy * dy)
        b[2 * i + 1] = dy

    # Gaussian elimination with partial pivoting and an explicit pivot check.
    for col in range(8):
        pivot_row = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot_row, col]) < 1e-12:
            raise DegenerateQuad("projective system is singular")
        if pivot_row != col:
            a[[col, pivot_row]] = a[[pivot_row, col]]
            b[[col, pivot_row]] = b[[pivot_row, col]]
        inv = 1.0 / a[col, col]
        for row in range(col + 1, 8):
            factor = a[row, col] * inv
            if factor != 0.0:
                a[row, col:] -= factor * a[col, col:]
                b[row] -= factor * b[col]
    h = np.zeros(8, dtype=np.float64)
    for row in range(7, -1, -1):
        h[row] = (b[row] - a[row, row + 1 :] @ h[row + 1 :]) / a[row, row]
    return np.array(
        [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]], dtype=np.float64
    )


def apply_homography(h: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Map (N, 2) points through a 3x3 homography."""
    pts = np.asarray(points, dtype=np.float64)
    ones = np.ones((len(pts), 1))
    hom = np.hstack([pts, ones]) @ h.T
    return hom[:, :2] / hom[:, 2:3]


def _otsu_threshold(patch: np.ndarray) -> int:
    """Otsu split index k; pixels <= k count as dark."""
    hist = np.bincount(patch.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    w0 = np.cumsum(hist)
    w1 = total - w0
    cum = np.cumsum(hist * np.arange(256))
    mean0 = np.divide(cum, w0, out=np.zeros(256), where=w0 > 0)
    mean1 = np.divide(cum[-1] - cum, w1, out=np.zeros(256), where=w1 > 0)
    var_between = w0 * w1 * (mean0 - mean1) ** 2
    return int(np.argmax(var_between))


def sample_bits(frame: Frame, quad: np.ndarray) -> np.ndarray:
    """Unwarp a quad to a 49x49 patch and classify the 7x7 cells.

    Nearest-neighbor sampling through the unit-square homography; each cell
    votes with its central 5x5 pixels against the patch's Otsu threshold.
    """
    h = homography_from_quad(UNIT_SQUARE, quad)
    coords = (np.arange(_PATCH_PX) + 0.5) / _PATCH_PX
    uu, vv = np.meshgrid(coords, coords)
    pts = np.column_stack([uu.ravel(), vv.ravel()])
    mapped = apply_homography(h, pts)
    xs = np.clip(np.rint(mapped[:, 0]).astype(np.int64), 0, frame.width - 1)
    ys = np.clip(np.rint(mapped[:, 1]).astype(np.int64), 0, frame.height - 1)
    patch = frame.pixels[ys, xs].reshape(_PATCH_PX, _PATCH_PX)

    threshold = _otsu_threshold(patch)
    dark = patch <= threshold
    grid = np.zeros((marker_codec.GRID_SIZE, marker_codec.GRID_SIZE), dtype=np.uint8)
    for r in range(marker_codec.GRID_SIZE):
        for c in range(marker_codec.GRID_SIZE):
            block = dark[
                r * _PATCH_CELL_PX + 1 : r * _PATCH_CELL_PX + 6,
                c * _PATCH_CELL_PX + 1 : c * _PATCH_CELL_PX + 6,
            ]
            grid[r, c] = 1 if int(block.sum()) >= 13 else 0
    return grid


def _orientation_deg(top_left: np.ndarray, top_right: np.ndarray) -> float:
    dx = top_right[0] - top_left[0]
    dy = top_right[1] - top_left[1]
    # Counterclockwise from the +x axis in the visual sense (image y is down).
    return math.degrees(math.atan2(-dy, dx)) % 360.0


def detect_markers(frame: Frame, config: DetectConfig | None = None) -> list[MarkerObservation]:
    """Run the full detection pipeline on a preprocessed frame."""
    cfg = config or DetectConfig()
    binary = adaptive_threshold(frame, cfg.threshold_radius, cfg.threshold_c)
    contours = trace_contours(binary, cfg.min_contour_points)
    quads = approx_quads(contours, cfg.min_quad_perimeter, cfg.rdp_epsilon_frac)

    best: dict[int, tuple[MarkerObservation, float]] = {}
    for quad in quads:
        try:
            grid = sample_bits(frame, quad)
            decoded = marker_codec.decode_grid(grid, cfg.decode_tolerance)
        except MarkerCodecError:
            continue
        # Corner 0 of the provisional order maps to the patch top-left; the
        # canonical top-left sits (4 - rotation) corners further along.
        shift = (4 - decoded.rotation) % 4
        corners = np.roll(quad, -shift, axis=0)
        center = corners.mean(axis=0)
        obs = MarkerObservation(
            marker_id=decoded.marker_id,
            corners=tuple((float(x), float(y)) for x, y in corners),
            center=(float(center[0]), float(center[1])),
            orientation_deg=_orientation_deg(corners[0], corners[1]),
            bit_errors=decoded.bit_errors,
        )
        perimeter = _closed_perimeter(corners)
        kept = best.get(decoded.marker_id)
        if (
            kept is None
            or obs.bit_errors < kept[0].bit_errors
            or (obs.bit_errors == kept[0].bit_errors and perimeter > kept[1])
        ):
            best[decoded.marker_id] = (obs, perimeter)

    return sorted((o for o, _ in best.values()), key=lambda o: o.center[0])
