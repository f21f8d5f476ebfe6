import logging
from pathlib import Path

import numpy as np
import yaml
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from core.utils.exception_handler import (
    InvalidDepthError,
    InvalidRasterError,
    ManifestError,
    OutputError,
)

from .models import DepthMap, Image

logger = logging.getLogger(__name__)

DEPTH_MAGIC = "DPT1"
DEPTH_SAMPLE_TYPES = {"f4": "<f4", "f8": "<f8"}

_EIGHT_BIT_MODES = {"L": 1, "RGB": 3}
_SIXTEEN_BIT_MODES = ("I;16", "I;16B", "I;16L", "I")


def _existing_file(path):
    path = Path(path)
    if not path.is_file():
        raise InvalidRasterError(f"missing file: {path}")
    return path


def _writable_target(path):
    path = Path(path)
    if not path.parent.is_dir():
        raise OutputError(f"cannot write {path}: directory does not exist")
    return path


def load_image(path) -> Image:
    """
    Read an 8-bit (L/RGB) or 16-bit single-channel raster into an Image.

    8-bit samples map to v/255, 16-bit samples to v/65535.
    """
    path = _existing_file(path)
    try:
        with PILImage.open(path) as raster:
            raster.load()
            mode = raster.mode
            if mode in ("P", "LA", "RGBA", "1"):
                raster = raster.convert("RGB" if mode in ("P", "RGBA") else "L")
                mode = raster.mode
            samples = np.asarray(raster)
    except UnidentifiedImageError as exc:
        raise InvalidRasterError(f"unsupported raster format: {path}") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise InvalidRasterError(f"corrupt raster data in {path}: {exc}") from exc

    if mode in _EIGHT_BIT_MODES:
        data = samples.astype(np.float64) / 255.0
    elif mode in _SIXTEEN_BIT_MODES:
        data = samples.astype(np.float64) / 65535.0
    else:
        raise InvalidRasterError(f"unsupported raster mode {mode!r} in {path}")
    return Image(data)


def quantize(values, bit_depth=8):
    """Clamp to [0, 1] and quantize with round-half-up."""
    levels = 255 if bit_depth == 8 else 65535
    clipped = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(clipped * levels + 0.5).astype(np.uint8 if bit_depth == 8 else np.uint16)


def save_image(img: Image, path, bit_depth=8):
    """Write a lossless raster (format from the extension, PNG recommended)."""
    path = _writable_target(path)
    if bit_depth not in (8, 16):
        raise InvalidRasterError(f"bit depth must be 8 or 16, got {bit_depth}")
    if bit_depth == 16 and img.channels != 1:
        raise InvalidRasterError("16-bit output is only supported for single-channel images")

    samples = quantize(img.data, bit_depth)
    if img.channels == 1:
        samples = samples[..., 0]
    raster = PILImage.fromarray(samples)
    try:
        raster.save(path)
    except (OSError, ValueError, KeyError) as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    logger.debug("wrote %s (%dx%dx%d, %d-bit)", path, img.height, img.width, img.channels, bit_depth)


def save_depth(depth: DepthMap, path, sample_type="f8"):
    """
    Write a `.dpt` depth raster: one ASCII header line
    `DPT1 <height> <width> <scale> <sample type>` followed by raw
    little-endian floats. The default f8 samples round-trip bit-exactly.
    """
    path = _writable_target(path)
    if sample_type not in DEPTH_SAMPLE_TYPES:
        raise InvalidDepthError(f"sample type must be one of {sorted(DEPTH_SAMPLE_TYPES)}")
    height, width = depth.shape
    header = f"{DEPTH_MAGIC} {height} {width} 1.0 {sample_type}\n".encode("ascii")
    payload = depth.data.astype(DEPTH_SAMPLE_TYPES[sample_type]).tobytes()
    try:
        with open(path, "wb") as handle:
            handle.write(header)
            handle.write(payload)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    logger.debug("wrote depth %s (%dx%d)", path, height, width)


def load_depth(path, max_depth_m=None) -> DepthMap:
    """Read a `.dpt` depth raster written by save_depth."""
    path = _existing_file(path)
    raw = path.read_bytes()
    header, sep, payload = raw.partition(b"\n")
    fields = header.decode("ascii", errors="replace").split()
    if not sep or len(fields) != 5 or fields[0] != DEPTH_MAGIC:
        raise InvalidRasterError(f"unsupported depth format: {path}")
    try:
        height, width, scale = int(fields[1]), int(fields[2]), float(fields[3])
        dtype = np.dtype(DEPTH_SAMPLE_TYPES[fields[4]])
    except (KeyError, ValueError) as exc:
        raise InvalidRasterError(f"corrupt depth header in {path}") from exc
    if height < 1 or width < 1 or len(payload) != height * width * dtype.itemsize:
        raise InvalidRasterError(f"corrupt depth data in {path}: payload size does not match header")

    data = np.frombuffer(payload, dtype=dtype).reshape(height, width).astype(np.float64)
    if scale != 1.0:
        data = data * scale
    return DepthMap(data, max_depth_m=max_depth_m)


def read_yaml(path):
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"missing file: {path}")
    try:
        content = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (yaml.YAMLError, UnicodeDecodeError) as exc:
        raise ManifestError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(content, dict):
        raise ManifestError(f"{path} must contain a mapping at the top level")
    return content


def load_stack_manifest(path):
    """Read, resolve and validate a focal-stack manifest."""
    from .serializers import StackManifestSerializer

    path = Path(path)
    serializer = StackManifestSerializer(data=read_yaml(path), context={"base_dir": path.parent})
    serializer.is_valid(raise_exception=True)
    return serializer.save()


def save_stack_manifest(stack, directory, bit_depth=8, manifest_name="stack.yaml"):
    """
    Write a stack as image files plus a manifest in `directory`; returns the
    manifest path. Slices are quantized by save_image.
    """
    directory = Path(directory)
    if not directory.is_dir():
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create {directory}: {exc}") from exc

    image_depth = bit_depth if stack.all_in_focus.channels == 1 else 8
    save_image(stack.all_in_focus, directory / "all_in_focus.png", bit_depth=image_depth)
    manifest = {
        "all_in_focus": "all_in_focus.png",
        "camera": stack.camera.as_dict(),
        "slices": [],
    }
    if stack.max_depth_m is not None:
        manifest["max_depth_m"] = float(stack.max_depth_m)
    for index, focal_slice in enumerate(stack.slices):
        name = f"slice_{index:02d}.png"
        save_image(focal_slice.image, directory / name, bit_depth=image_depth)
        manifest["slices"].append({"path": name, "focus_m": float(focal_slice.focus_distance_m)})
    if stack.ground_truth_depth is not None:
        save_depth(stack.ground_truth_depth, directory / "ground_truth.dpt")
        manifest["ground_truth"] = "ground_truth.dpt"
    if stack.loss_overrides:
        manifest["loss"] = dict(stack.loss_overrides)

    manifest_path = directory / manifest_name
    try:
        manifest_path.write_text(yaml.safe_dump(manifest, sort_keys=False), encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {manifest_path}: {exc}") from exc
    logger.info("wrote stack of %d slices to %s", len(stack), directory)
    return manifest_path
