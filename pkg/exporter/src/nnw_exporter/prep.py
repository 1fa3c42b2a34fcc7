"""Image preparation matching the inference engine's documented algorithm.

The resize here is deliberately NOT torchvision's: it re-implements the
engine's bilinear rule (pixel-center alignment, edge clamp, no antialias,
round half-up) so fixtures and engine agree exactly on the prepared tensor.
"""

import numpy as np

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
IMAGENET_STD = np.array([0.229, 0.224, 0.225])


def decode_ppm(data: bytes) -> np.ndarray:
    if data[:2] != b"P6":
        raise ValueError("not a P6 PPM")
    pos = 2
    fields = []
    while len(fields) < 3:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError("maxval must be 255")
    pos += 1
    return np.frombuffer(data, np.uint8, w * h * 3, pos).reshape(h, w, 3).copy()


def encode_ppm(pixels: np.ndarray) -> bytes:
    h, w, _ = pixels.shape
    return f"P6\n{w} {h}\n255\n".encode() + pixels.astype(np.uint8).tobytes()


def resize_bilinear(pixels: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    h, w, _ = pixels.shape
    if (out_h, out_w) == (h, w):
        return pixels.copy()
    arr = pixels.astype(np.float64)
    for axis, (in_size, out_size) in enumerate(((h, out_h), (w, out_w))):
        src = np.clip((np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5,
                      0.0, in_size - 1.0)
        lo = np.floor(src).astype(np.intp)
        hi = np.minimum(lo + 1, in_size - 1)
        frac = src - lo
        shape = [1, 1, 1]
        shape[axis] = out_size
        arr = (np.take(arr, lo, axis=axis) * (1.0 - frac.reshape(shape))
               + np.take(arr, hi, axis=axis) * frac.reshape(shape))
    return np.clip(np.floor(arr + 0.5), 0, 255).astype(np.uint8)


def normalize(pixels: np.ndarray, mean=IMAGENET_MEAN, std=IMAGENET_STD) -> np.ndarray:
    """(H, W, 3) uint8 -> (3, H, W) float32, (v/255 - mean) / std."""
    v = pixels.astype(np.float64) / 255.0
    return ((v - mean) / std).transpose(2, 0, 1).astype(np.float32)
