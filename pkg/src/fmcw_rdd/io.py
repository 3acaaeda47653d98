"""Binary frame and checkpoint files.

Frame file (``.rifm``), all integers and floats little-endian::

    offset  size        field
    0       4           magic b"RIFM"
    4       2           version (u16) = 1
    6       4           N (u32)
    10      4           M (u32)
    14      8*N*M       clean frame, complex64 (re, im float32 pairs)
    ...     8*N*M       interfered frame, complex64
    ...     N*M         mask, one byte per sample (0 or 1)
    ...     4           metadata length L (u32)
    ...     L           metadata, UTF-8 JSON

Matrices are stored row-major with fast time as the major index, i.e.
element ``[n, m]`` sits at position ``n * M + m``.

Checkpoint file (``.rdnn``)::

    magic b"RDNN", version u16 = 1, dtype width u8 (4 or 8),
    n_layers u32, input_channels u32, kernel_h u32, kernel_w u32,
    kernel counts (n_layers x u32),
    per layer in order: weight (out, in, kh, kw), bias,
        [bn_gamma, bn_beta, bn_running_mean, bn_running_var]  (middle layers)
    has_adam u8; if 1: step u64, lr/beta1/beta2/eps f64, then the first
        and second moment arrays in parameter order.
"""
from __future__ import annotations

import io as _io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cnn import AdamState, ArchitectureSpec, LayerParams, ModelState

FRAME_MAGIC = b"RIFM"
CKPT_MAGIC = b"RDNN"
VERSION = 1


class FormatError(ValueError):
    """Malformed binary file; ``offset`` locates the problem."""

    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} (at byte offset {offset})")
        self.offset = offset


@dataclass
class FrameRecord:
    clean: np.ndarray
    interfered: np.ndarray
    mask: np.ndarray
    metadata: dict


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(
                f"truncated {what}: need {n} bytes, {len(self.buf) - self.pos} left", self.pos
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def array(self, dtype: str, count: int, what: str) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(itemsize * count, what), dtype=dtype).copy()


def encode_frame(rec: FrameRecord) -> bytes:
    N, M = rec.clean.shape
    if rec.interfered.shape != (N, M) or rec.mask.shape != (N, M):
        raise ValueError("clean, interfered and mask must share one shape")
    meta = json.dumps(rec.metadata, sort_keys=True).encode("utf-8")
    parts = [
        FRAME_MAGIC,
        struct.pack("<HII", VERSION, N, M),
        np.ascontiguousarray(rec.clean, dtype="<c8").tobytes(),
        np.ascontiguousarray(rec.interfered, dtype="<c8").tobytes(),
        np.ascontiguousarray(rec.mask, dtype=np.uint8).tobytes(),
        struct.pack("<I", len(meta)),
        meta,
    ]
    return b"".join(parts)


def decode_frame(buf: bytes, expect_shape: tuple[int, int] | None = None) -> FrameRecord:
    r = _Reader(buf)
    magic = r.take(4, "magic")
    if magic != FRAME_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {FRAME_MAGIC!r}", 0)
    (version,) = r.unpack("<H", "version")
    if version != VERSION:
        raise FormatError(f"unsupported frame version {version}", 4)
    N, M = r.unpack("<II", "dimensions")
    if expect_shape is not None and (N, M) != tuple(expect_shape):
        raise FormatError(f"frame is {N}x{M}, configuration expects {expect_shape[0]}x{expect_shape[1]}", 6)
    clean = r.array("<c8", N * M, "clean frame").reshape(N, M)
    interfered = r.array("<c8", N * M, "interfered frame").reshape(N, M)
    mask_off = r.pos
    mask = r.array("u1", N * M, "mask")
    if mask.max(initial=0) > 1:
        raise FormatError("mask bytes must be 0 or 1", mask_off + int(np.argmax(mask > 1)))
    (n_meta,) = r.unpack("<I", "metadata length")
    meta_off = r.pos
    raw = r.take(n_meta, "metadata")
    try:
        metadata = json.loads(raw.decode("utf-8")) if n_meta else {}
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"metadata is not UTF-8 JSON: {exc}", meta_off) from exc
    if r.pos != len(buf):
        raise FormatError(f"{len(buf) - r.pos} trailing bytes", r.pos)
    return FrameRecord(clean, interfered, mask.reshape(N, M).astype(bool), metadata)


def write_frame(path, rec: FrameRecord) -> None:
    Path(path).write_bytes(encode_frame(rec))


def read_frame(path, expect_shape=None) -> FrameRecord:
    return decode_frame(Path(path).read_bytes(), expect_shape)


def _dtype_width(dtype) -> int:
    w = np.dtype(dtype).itemsize
    if w not in (4, 8):
        raise ValueError(f"unsupported checkpoint dtype {dtype}")
    return w


def encode_checkpoint(model: ModelState, adam: AdamState | None = None) -> bytes:
    arch = model.arch
    width = _dtype_width(model.dtype)
    fdt = "<f4" if width == 4 else "<f8"
    out = _io.BytesIO()
    out.write(CKPT_MAGIC)
    out.write(struct.pack("<HB", VERSION, width))
    out.write(struct.pack("<IIII", arch.n_layers, arch.input_channels, *arch.kernel_size))
    out.write(struct.pack(f"<{arch.n_layers}I", *arch.kernel_counts))
    for layer in model.layers:
        for a in layer.arrays():
            out.write(np.ascontiguousarray(a, dtype=fdt).tobytes())
    if adam is not None and adam.m is not None:
        out.write(struct.pack("<BQdddd", 1, adam.t, adam.lr, adam.beta1, adam.beta2, adam.eps))
        for a in adam.m + adam.v:
            out.write(np.ascontiguousarray(a, dtype=fdt).tobytes())
    else:
        out.write(struct.pack("<B", 0))
    return out.getvalue()


def decode_checkpoint(buf: bytes) -> tuple[ModelState, AdamState | None]:
    r = _Reader(buf)
    if r.take(4, "magic") != CKPT_MAGIC:
        raise FormatError("bad checkpoint magic", 0)
    version, width = r.unpack("<HB", "header")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", 4)
    if width not in (4, 8):
        raise FormatError(f"bad dtype width {width}", 6)
    fdt = "<f4" if width == 4 else "<f8"
    n_layers, cin, kh, kw = r.unpack("<IIII", "architecture header")
    counts = r.unpack(f"<{n_layers}I", "kernel counts")
    try:
        arch = ArchitectureSpec(tuple(counts), (kh, kw), cin)
    except ValueError as exc:
        raise FormatError(f"invalid architecture: {exc}", 7) from exc
    native = np.float32 if width == 4 else np.float64
    layers = []
    for i, (ci, co) in enumerate(arch.channels()):
        w = r.array(fdt, co * ci * kh * kw, f"layer {i} weight").reshape(co, ci, kh, kw)
        layer = LayerParams(w.astype(native), r.array(fdt, co, f"layer {i} bias").astype(native))
        if arch.has_bn(i):
            layer.bn_gamma, layer.bn_beta, layer.bn_running_mean, layer.bn_running_var = (
                r.array(fdt, co, f"layer {i} {name}").astype(native)
                for name in ("bn_gamma", "bn_beta", "bn_running_mean", "bn_running_var")
            )
        layers.append(layer)
    model = ModelState(arch, layers)
    (has_adam,) = r.unpack("<B", "optimizer flag")
    adam = None
    if has_adam:
        t, lr, b1, b2, eps = r.unpack("<Qdddd", "optimizer header")
        shapes = [p.shape for p in model.params()]
        moments = [
            r.array(fdt, int(np.prod(s)), "optimizer moment").reshape(s).astype(native)
            for s in shapes + shapes
        ]
        adam = AdamState(lr, b1, b2, eps, t, moments[: len(shapes)], moments[len(shapes) :])
    if r.pos != len(buf):
        raise FormatError(f"{len(buf) - r.pos} trailing bytes", r.pos)
    return model, adam


def save_checkpoint(path, model: ModelState, adam: AdamState | None = None) -> None:
    Path(path).write_bytes(encode_checkpoint(model, adam))


def load_checkpoint(path) -> tuple[ModelState, AdamState | None]:
    return decode_checkpoint(Path(path).read_bytes())
