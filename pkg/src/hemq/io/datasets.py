"""Dataset ingestion: numeric CSV files, IDX image archives and standardization."""

import csv
import gzip
import logging
import struct
from pathlib import Path
from typing import IO, List, Optional, Union

import numpy as np

from ..errors import DatasetFormatError
from ..measures import EmpiricalTarget

logger = logging.getLogger(__name__)

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049

PathLike = Union[str, Path]


def _is_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path: PathLike, label_col: Optional[int] = None) -> EmpiricalTarget:
    """Read a rectangular numeric CSV into an empirical target.

    A first line with any non-numeric cell is taken as a header. When
    ``label_col`` is given that column becomes integer labels and is removed
    from the data.
    """
    rows: List[List[float]] = []
    width: Optional[int] = None
    with open(path, newline="") as fh:
        for line_no, cells in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in cells]
            if not cells or all(c == "" for c in cells):
                continue
            if line_no == 1 and not all(_is_numeric(c) for c in cells):
                logger.debug(f"{path}: treating line 1 as a header")
                width = len(cells)
                continue
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise DatasetFormatError(f"expected {width} cells, found {len(cells)}", line=line_no)
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                bad = next(c for c in cells if not _is_numeric(c))
                raise DatasetFormatError(f"non-numeric cell {bad!r}", line=line_no) from None

    if not rows:
        raise DatasetFormatError(f"{path} contains no data rows")
    table = np.array(rows, dtype=float)
    labels = None
    if label_col is not None:
        if not -table.shape[1] <= label_col < table.shape[1]:
            raise DatasetFormatError(f"label column {label_col} out of range for {table.shape[1]} columns")
        raw = table[:, label_col]
        if np.any(raw != np.round(raw)):
            bad = float(raw[raw != np.round(raw)][0])
            raise DatasetFormatError(
                f"label column {label_col} holds non-integer value {bad!r}"
            )
        labels = raw.astype(int)
        table = np.delete(table, label_col, axis=1)
    if table.shape[1] == 0:
        raise DatasetFormatError(f"{path} has no feature columns")
    logger.info(f"Loaded {table.shape[0]}x{table.shape[1]} matrix from {path}")
    return EmpiricalTarget(data=table, labels=labels)


def standardize(data: object) -> np.ndarray:
    """Center every column and scale it to unit sample (n - 1) standard deviation."""
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] < 2:
        raise DatasetFormatError(f"standardize needs at least 2 rows, got {X.shape[0]}")
    centered = X - X.mean(axis=0)
    scale = X.std(axis=0, ddof=1)
    constant = scale == 0.0
    if np.any(constant):
        logger.warning(f"constant columns {np.nonzero(constant)[0].tolist()} mapped to 0")
    out = centered / np.where(constant, 1.0, scale)
    out[:, constant] = 0.0
    return out


def _open(path: PathLike) -> IO[bytes]:
    with open(path, "rb") as fh:
        gzipped = fh.read(2) == b"\x1f\x8b"
    return gzip.open(path, "rb") if gzipped else open(path, "rb")


def _read_header(fh: IO[bytes], fields: int, path: PathLike) -> tuple:
    raw = fh.read(4 * fields)
    if len(raw) < 4 * fields:
        raise DatasetFormatError(f"{path}: truncated IDX header")
    return struct.unpack(f">{fields}I", raw)


def _read_images(path: PathLike) -> np.ndarray:
    with _open(path) as fh:
        magic, count, n_rows, n_cols = _read_header(fh, 4, path)
        if magic != IDX_IMAGE_MAGIC:
            raise DatasetFormatError(f"{path}: bad image magic number {magic}")
        expected = count * n_rows * n_cols
        pixels = np.frombuffer(fh.read(), dtype=np.uint8)
    if pixels.shape[0] < expected:
        raise DatasetFormatError(f"{path}: truncated, {pixels.shape[0]} of {expected} pixels")
    return pixels[:expected].reshape(count, n_rows * n_cols)


def _read_labels(path: PathLike) -> np.ndarray:
    with _open(path) as fh:
        magic, count = _read_header(fh, 2, path)
        if magic != IDX_LABEL_MAGIC:
            raise DatasetFormatError(f"{path}: bad label magic number {magic}")
        labels = np.frombuffer(fh.read(), dtype=np.uint8)
    if labels.shape[0] < count:
        raise DatasetFormatError(f"{path}: truncated, {labels.shape[0]} of {count} labels")
    return labels[:count]


def load_idx(
    images_path: PathLike, labels_path: PathLike, limit: Optional[int] = None
) -> EmpiricalTarget:
    """Read an IDX image file and its label file (plain or gzipped).

    Pixels are flattened row-wise and scaled to [0, 1].
    """
    pixels = _read_images(images_path)
    labels = _read_labels(labels_path)
    if pixels.shape[0] != labels.shape[0]:
        raise DatasetFormatError(
            f"{pixels.shape[0]} images but {labels.shape[0]} labels"
        )
    if limit is not None:
        pixels, labels = pixels[:limit], labels[:limit]
    logger.info(f"Loaded {pixels.shape[0]} images of {pixels.shape[1]} pixels from {images_path}")
    return EmpiricalTarget(data=pixels.astype(float) / 255.0, labels=labels.astype(int))


def write_idx(
    images: np.ndarray, labels: np.ndarray, images_path: PathLike, labels_path: PathLike
) -> None:
    """Write a uint8 image stack (count x rows x cols) and its labels as IDX files."""
    stack = np.asarray(images, dtype=np.uint8)
    tags = np.asarray(labels, dtype=np.uint8)
    count, n_rows, n_cols = stack.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">4I", IDX_IMAGE_MAGIC, count, n_rows, n_cols))
        fh.write(stack.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">2I", IDX_LABEL_MAGIC, tags.shape[0]))
        fh.write(tags.tobytes())
