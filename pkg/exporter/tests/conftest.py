import pytest

from imagetools import write_image, write_metadata


@pytest.fixture
def image_fixture(tmp_path):
    """10 decodable images of varying sizes plus their metadata CSV."""
    images = tmp_path / "images"
    images.mkdir()
    rows = []
    for i in range(10):
        name = f"ad_{i:02d}.png"
        write_image(images / name, seed=i, size=(100 + 17 * i, 60 + 11 * i))
        rows.append([name, "Auto" if i % 2 else "Retail", 5000 + 100 * i, 10 * i])
    metadata = tmp_path / "metadata.csv"
    write_metadata(metadata, rows)
    return images, metadata
