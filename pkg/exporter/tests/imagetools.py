import csv

import numpy as np
from PIL import Image


def write_image(path, seed, size=(120, 80)):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
    Image.fromarray(pixels, mode="RGB").save(path)


def write_metadata(path, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "category", "impressions", "clicks"])
        writer.writerows(rows)
