"""Inference backends: image -> (embedding, class scores).

Every backend exposes `dim`, `num_classes`, `class_name(i)` and
`embed_batch(images) -> (embeddings, scores)` where images are PIL RGB.
Preprocessing follows the usual recipe: resize the shorter side to the
backend's input size, center-crop, normalize.  Backends run in
deterministic/eval mode so re-exports are byte-identical.

`pixelstat` requires no model weights: the embedding is a 16x16x3 grid of
block-mean pixel intensities and class scores come from a fixed seeded
random projection of that embedding.  It exists so the export pipeline can
run (and be tested) offline; swap in a torchvision backend for real labels.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

PIXELSTAT_CROP = 64
PIXELSTAT_GRID = 16
PIXELSTAT_SEED = 1234567


def resize_center_crop(image: Image.Image, size: int) -> Image.Image:
    """Resize the shorter side to `size`, then crop the central size x size."""
    w, h = image.size
    scale = size / min(w, h)
    image = image.resize((max(size, round(w * scale)), max(size, round(h * scale))),
                         Image.BILINEAR)
    w, h = image.size
    left = (w - size) // 2
    top = (h - size) // 2
    return image.crop((left, top, left + size, top + size))


class PixelStatBackend:
    """Deterministic, weight-free backend for offline use and tests."""

    name = "pixelstat"

    def __init__(self, num_classes: int = 1000):
        self.num_classes = num_classes
        self.dim = PIXELSTAT_GRID * PIXELSTAT_GRID * 3
        rng = np.random.default_rng(PIXELSTAT_SEED)
        self._projection = rng.standard_normal((num_classes, self.dim)).astype(np.float64)

    def class_name(self, class_id: int) -> str:
        return f"class_{class_id:04d}"

    def embed_batch(self, images: list[Image.Image]) -> tuple[np.ndarray, np.ndarray]:
        embeddings = np.empty((len(images), self.dim))
        scores = np.empty((len(images), self.num_classes))
        for i, image in enumerate(images):
            crop = resize_center_crop(image.convert("RGB"), PIXELSTAT_CROP)
            pixels = np.asarray(crop, dtype=np.float64) / 255.0
            block = PIXELSTAT_CROP // PIXELSTAT_GRID
            grid = pixels.reshape(PIXELSTAT_GRID, block, PIXELSTAT_GRID, block, 3)
            embeddings[i] = grid.mean(axis=(1, 3)).reshape(-1)
            # per-row matvec keeps results independent of how images batch
            logits = self._projection @ (embeddings[i] - embeddings[i].mean())
            exp = np.exp(logits - logits.max())
            scores[i] = exp / exp.sum()
        return embeddings.astype(np.float32), scores


class TorchvisionBackend:
    """ImageNet-pretrained torchvision model; embedding is the activation
    feeding the classification head (e.g. 512 for resnet18, 4096 for
    alexnet/vgg16)."""

    def __init__(self, model_name: str = "resnet18"):
        import torch
        from torchvision import models

        self.name = model_name
        self._torch = torch
        weights = models.get_model_weights(model_name).DEFAULT
        self._model = models.get_model(model_name, weights=weights).eval()
        self._transform = weights.transforms()
        self._categories = list(weights.meta["categories"])
        self.num_classes = len(self._categories)

        captured: dict = {}
        penultimate = self._penultimate_module(model_name)
        penultimate.register_forward_hook(
            lambda module, inputs, output: captured.__setitem__("features", output)
        )
        self._captured = captured
        with torch.no_grad():
            probe = torch.zeros(1, 3, 224, 224)
            self._model(probe)
        self.dim = int(np.prod(captured["features"].shape[1:]))

    def _penultimate_module(self, model_name: str):
        if model_name.startswith("resnet"):
            return self._model.avgpool
        if model_name.startswith(("alexnet", "vgg")):
            return self._model.classifier[-2]
        raise ValueError(f"unsupported backend model: {model_name!r}")

    def class_name(self, class_id: int) -> str:
        return self._categories[class_id]

    def embed_batch(self, images: list[Image.Image]) -> tuple[np.ndarray, np.ndarray]:
        torch = self._torch
        batch = torch.stack([self._transform(img.convert("RGB")) for img in images])
        with torch.no_grad():
            logits = self._model(batch)
            scores = torch.softmax(logits, dim=1).numpy()
        features = self._captured["features"].reshape(len(images), -1).numpy()
        return features.astype(np.float32), scores.astype(np.float64)


def load_backend(name: str):
    if name == "pixelstat":
        return PixelStatBackend()
    return TorchvisionBackend(name)
