"""Image I/O (binary PPM), padding, and distortion metrics.

Images are (H, W, 3) uint8 arrays. Only P6 PPM with maxval 255 is
supported: it is dependency-free and byte-exact, which suits fixture
round trips. Padding replicates the right/bottom edges up to multiples
of 64; the decoder crops back using the header's original dims.
"""

import math

import numpy as np

from .errors import FormatError, InputError

PAD_MULTIPLE = 64

#: Reported PSNR for identical images (mse == 0).
PSNR_IDENTICAL = math.inf


def read_ppm(data):
    """Parse a binary P6 PPM (maxval 255) into an (H, W, 3) uint8 array."""
    if isinstance(data, str):
        with open(data, "rb") as fh:
            data = fh.read()
    if not data.startswith(b"P6"):
        raise FormatError("not a binary PPM (P6) file")
    pos = 2
    fields = []
    while len(fields) < 3:
        # skip whitespace and '#' comments between header fields
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PPM header")
        try:
            fields.append(int(data[start:pos]))
        except ValueError as exc:
            raise FormatError(f"bad PPM header field {data[start:pos]!r}") from exc
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"only maxval 255 PPM supported, got {maxval}")
    if width < 1 or height < 1:
        raise InputError(f"image dims must be positive, got {width}x{height}")
    pos += 1  # single whitespace after maxval
    need = width * height * 3
    raw = data[pos : pos + need]
    if len(raw) != need:
        raise FormatError(f"PPM pixel data truncated: need {need}, have {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(img, path=None):
    """Serialize an (H, W, 3) uint8 array as binary P6; optionally save."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise InputError(f"PPM writer needs (H, W, 3) uint8, got {img.shape} {img.dtype}")
    header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    blob = header + img.tobytes()
    if path is not None:
        with open(path, "wb") as fh:
            fh.write(blob)
    return blob


def pad_image(img):
    """Normalize to [0, 1] float64 and replicate-pad to multiples of 64."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InputError(f"expected (H, W, 3) image, got shape {img.shape}")
    h, w = img.shape[:2]
    if h < 1 or w < 1:
        raise InputError("zero-dimension image")
    x = img.astype(np.float64) / 255.0
    ph = (-h) % PAD_MULTIPLE
    pw = (-w) % PAD_MULTIPLE
    if ph or pw:
        x = np.pad(x, ((0, ph), (0, pw), (0, 0)), mode="edge")
    return x


def crop_to(x, height, width):
    return x[:height, :width]


def to_uint8(x):
    """Quantize a [0, 1] float image to 8-bit samples (round half up)."""
    return np.floor(np.asarray(x, dtype=np.float64) * 255.0 + 0.5).astype(np.uint8)


def mse(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise InputError(f"image dims differ: {a.shape} vs {b.shape}")
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


def psnr(a, b):
    """Peak signal-to-noise ratio in dB over 8-bit samples."""
    m = mse(a, b)
    if m == 0.0:
        return PSNR_IDENTICAL
    return 10.0 * math.log10(255.0 * 255.0 / m)
