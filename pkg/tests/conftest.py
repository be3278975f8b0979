"""Pytest configuration and fixtures."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to Python path
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from hemq.io.datasets import write_idx  # noqa: E402


@pytest.fixture
def rng():
    """Seeded generator for test data."""
    return np.random.default_rng(20240601)


@pytest.fixture
def wine_csv(tmp_path):
    """Wines dataset written as CSV with a header and the cultivar in column 0."""
    from sklearn.datasets import load_wine

    wine = load_wine()
    path = tmp_path / "wine.csv"
    header = ",".join(["class"] + [name.replace(",", "_") for name in wine.feature_names])
    rows = [
        ",".join([str(int(label))] + [repr(float(v)) for v in row])
        for label, row in zip(wine.target, wine.data)
    ]
    path.write_text(header + "\n" + "\n".join(rows) + "\n")
    return path


@pytest.fixture
def digits_idx(tmp_path):
    """Digit images written as IDX image and label files.

    scikit-learn's 1797 8x8 digits (rescaled to 0..255) stand in for 28x28
    handwritten digit archives.
    """
    from sklearn.datasets import load_digits

    digits = load_digits()
    images = np.clip(np.rint(digits.images * (255.0 / 16.0)), 0, 255).astype(np.uint8)
    images_path = tmp_path / "digits-images.idx"
    labels_path = tmp_path / "digits-labels.idx"
    write_idx(images, digits.target, images_path, labels_path)
    return images_path, labels_path
