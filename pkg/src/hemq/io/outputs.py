"""Run outputs: output directory resolution, serializers and atomic writes."""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from ..errors import DatasetFormatError
from ..measures import DiscreteMeasure
from ..models.results import RunRecord

logger = logging.getLogger(__name__)

TRAJECTORY_FIELDS = ("iteration", "loss", "wall_ms")


def default_output_dir() -> Path:
    return Path(os.getenv("HEMQ_OUTPUT_DIR", str(Path.home() / "hemq-output")))


def _ensure_writable(directory: Path) -> None:
    if not directory.exists():
        directory.mkdir(parents=True, exist_ok=True)
        logger.info(f"Created output directory: {directory}")
    test_file = directory / ".write_test"
    test_file.touch()
    test_file.unlink()


def resolve_output_dir(requested: Union[str, Path]) -> Tuple[Path, Optional[str]]:
    """Return a writable output directory and an optional note for the user.

    Falls back to ``HEMQ_OUTPUT_DIR`` (default ``~/hemq-output``) when the
    requested directory cannot be created or written.
    """
    requested_dir = Path(requested)
    try:
        _ensure_writable(requested_dir)
        logger.info(f"Using requested output directory: {requested_dir}")
        return requested_dir, None
    except OSError as e:
        logger.warning(f"Cannot use requested directory {requested_dir}: {e}")

    fallback_dir = default_output_dir()
    logger.info(f"Falling back to configured output directory: {fallback_dir}")
    try:
        _ensure_writable(fallback_dir)
    except OSError as e2:
        logger.error(f"Cannot use fallback directory {fallback_dir}: {e2}")
        raise RuntimeError(
            f"Cannot write to requested directory '{requested_dir}' or fallback directory "
            f"'{fallback_dir}'. Please check permissions and configuration."
        ) from e2
    message = f"Note: Saved to {fallback_dir} (requested directory {requested_dir} was not accessible)"
    return fallback_dir, message


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(directory: Path, files: Dict[str, str]) -> Dict[str, str]:
    """Atomically write every staged file; returns name -> path."""
    written = {}
    for name, text in files.items():
        target = directory / name
        write_atomic(target, text)
        written[name] = str(target)
        logger.debug(f"wrote {target}")
    return written


def to_json_text(data: object) -> str:
    return json.dumps(data, indent=2) + "\n"


def trajectory_csv(record: Optional[RunRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRAJECTORY_FIELDS)
    if record is not None:
        for point in record.trajectory:
            writer.writerow([point.iteration, repr(point.loss), repr(point.wall_ms)])
    return buffer.getvalue()


def quantizer_json(measure: DiscreteMeasure) -> str:
    return to_json_text(measure.to_json_dict())


def snapshots_json(record: RunRecord) -> str:
    return to_json_text([s.model_dump() for s in record.snapshots])


def load_quantizer(path: Union[str, Path]) -> DiscreteMeasure:
    """Read a ``quantizer.json`` file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
        return DiscreteMeasure.from_json_dict(data)
    except (KeyError, json.JSONDecodeError) as e:
        raise DatasetFormatError(f"{path}: not a quantizer file ({e})") from e
