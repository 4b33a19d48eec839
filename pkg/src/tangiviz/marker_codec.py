"""Square fiducial marker dictionary: 1024 ids on a 7x7 grid.

A marker is a one-cell black border around a 5x5 data region. Each data row
holds one of four 5-bit codewords (pairwise Hamming distance >= 3), encoding
two id bits per row, most significant pair on top. Decoding tries all four
quarter-turn rotations and matches rows to the nearest codewords.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

GRID_SIZE = 7
INNER_SIZE = 5
NUM_IDS = 1024

# Row codewords indexed by the 2-bit pair value. 1 = black cell.
CODEWORDS = np.array(
    [
        [1, 0, 0, 0, 0],  # 00
        [1, 0, 1, 1, 1],  # 01
        [0, 1, 0, 0, 1],  # 10
        [0, 1, 1, 1, 0],  # 11
    ],
    dtype=np.uint8,
)


class MarkerCodecError(Exception):
    """Base class for marker encode/decode failures."""


class IdOutOfRange(MarkerCodecError):
    pass


class BadBorder(MarkerCodecError):
    """The 24 border cells of a candidate grid are not all black."""


class NoValidCode(MarkerCodecError):
    """No rotation brings the grid within tolerance of a dictionary entry."""


class DecodeResult(NamedTuple):
    marker_id: int
    rotation: int  # counterclockwise quarter turns applied to the canonical grid
    bit_errors: int


def encode_id(marker_id: int) -> np.ndarray:
    """Return the canonical 7x7 bit grid (1 = black) for a marker id."""
    if not 0 <= marker_id < NUM_IDS:
        raise IdOutOfRange(f"marker id {marker_id} outside [0, {NUM_IDS - 1}]")
    grid = np.ones((GRID_SIZE, GRID_SIZE), dtype=np.uint8)
    for row in range(INNER_SIZE):
        pair = (marker_id >> (2 * (INNER_SIZE - 1 - row))) & 0b11
        grid[row + 1, 1:-1] = CODEWORDS[pair]
    return grid


def rotate_grid(grid: np.ndarray, quarter_turns: int) -> np.ndarray:
    """Rotate a grid counterclockwise by the given number of quarter turns."""
    return np.rot90(grid, k=quarter_turns % 4).copy()


def _border_ok(grid: np.ndarray) -> bool:
    return bool(
        grid[0, :].all() and grid[-1, :].all() and grid[:, 0].all() and grid[:, -1].all()
    )


def decode_grid(grid: np.ndarray, tolerance: int = 0) -> DecodeResult:
    """Match a 7x7 grid against the dictionary under all four rotations.

    Picks the rotation with the smallest summed per-row Hamming distance to
    the nearest codewords (ties by smallest rotation). Raises BadBorder when
    the border is not solid black, NoValidCode when the best distance exceeds
    the tolerance.
    """
    grid = np.asarray(grid, dtype=np.uint8)
    if grid.shape != (GRID_SIZE, GRID_SIZE):
        raise ValueError(f"expected a {GRID_SIZE}x{GRID_SIZE} grid, got {grid.shape}")
    if not _border_ok(grid):
        raise BadBorder("marker border is not all black")

    best: tuple[int, int, list[int]] | None = None  # (distance, rotation, row words)
    for rotation in range(4):
        canonical = np.rot90(grid, k=-rotation)
        inner = canonical[1:-1, 1:-1]
        # Hamming distance of every row against every codeword.
        dists = (inner[:, None, :] != CODEWORDS[None, :, :]).sum(axis=2)
        row_words = dists.argmin(axis=1)
        total = int(dists.min(axis=1).sum())
        if best is None or total < best[0]:
            best = (total, rotation, list(row_words))

    total, rotation, row_words = best  # type: ignore[misc]
    if total > tolerance:
        raise NoValidCode(f"best distance {total} exceeds tolerance {tolerance}")

    marker_id = 0
    for word in row_words:
        marker_id = (marker_id << 2) | int(word)
    return DecodeResult(marker_id, rotation, total)


def render_marker(marker_id: int, cell_px: int) -> np.ndarray:
    """Rasterize a marker: (7*cell_px)^2 uint8 image, black cells 0, white 255."""
    if cell_px < 1:
        raise ValueError("cell_px must be >= 1")
    grid = encode_id(marker_id)
    cells = np.kron(grid, np.ones((cell_px, cell_px), dtype=np.uint8))
    return np.where(cells == 1, 0, 255).astype(np.uint8)
