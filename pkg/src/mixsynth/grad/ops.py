"""Primitive differentiable operations.

Each primitive computes its forward value with numpy/scipy and records a
vector-Jacobian product on the owning graph. The set is deliberately small:
the elementwise algebra, the nonlinearities the networks use, and the
signal-processing maps the synthesizer and the spectral loss are built from.
"""

import builtins
from functools import lru_cache
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
from scipy import signal as sps
from scipy import sparse
from scipy.special import expit

from ..core.errors import ShapeError, ValidationError
from .graph import DiffGraph, DiffValue, Operand

MAGNITUDE_EPS = 1e-12
LOG_FLOOR = 1e-6

Axis = Optional[Union[int, tuple[int, ...]]]


def _graph_of(operands: Sequence[Operand], kind: str) -> DiffGraph:
    for operand in operands:
        if isinstance(operand, DiffValue):
            return operand.graph
    raise ValidationError(f"{kind}: needs at least one DiffValue operand")


def _lift(graph: DiffGraph, operand: Operand) -> DiffValue:
    if isinstance(operand, DiffValue):
        return operand
    return graph.constant(operand)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to an operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_check(kind: str, a: DiffValue, b: DiffValue) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(kind, a.shape, b.shape) from None


# ---------------------------------------------------------------- elementwise


def add(a: Operand, b: Operand) -> DiffValue:
    graph = _graph_of([a, b], "add")
    x, y = _lift(graph, a), _lift(graph, b)
    _broadcast_check("add", x, y)

    def vjp(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, x.shape), _unbroadcast(g, y.shape)

    return graph.record("add", [x, y], x.data + y.data, vjp)


def sub(a: Operand, b: Operand) -> DiffValue:
    graph = _graph_of([a, b], "sub")
    x, y = _lift(graph, a), _lift(graph, b)
    _broadcast_check("sub", x, y)

    def vjp(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, x.shape), _unbroadcast(-g, y.shape)

    return graph.record("sub", [x, y], x.data - y.data, vjp)


def mul(a: Operand, b: Operand) -> DiffValue:
    graph = _graph_of([a, b], "mul")
    x, y = _lift(graph, a), _lift(graph, b)
    _broadcast_check("mul", x, y)

    def vjp(g: np.ndarray) -> tuple[Optional[np.ndarray], Optional[np.ndarray]]:
        gx = _unbroadcast(g * y.data, x.shape) if x.requires_grad else None
        gy = _unbroadcast(g * x.data, y.shape) if y.requires_grad else None
        return gx, gy

    return graph.record("mul", [x, y], x.data * y.data, vjp)


def div(a: Operand, b: Operand) -> DiffValue:
    graph = _graph_of([a, b], "div")
    x, y = _lift(graph, a), _lift(graph, b)
    _broadcast_check("div", x, y)
    out = x.data / y.data

    def vjp(g: np.ndarray) -> tuple[Optional[np.ndarray], Optional[np.ndarray]]:
        gx = _unbroadcast(g / y.data, x.shape) if x.requires_grad else None
        gy = _unbroadcast(-g * out / y.data, y.shape) if y.requires_grad else None
        return gx, gy

    return graph.record("div", [x, y], out, vjp)


def neg(a: DiffValue) -> DiffValue:
    return a.graph.record("neg", [a], -a.data, lambda g: (-g,))


def broadcast(a: DiffValue, shape: tuple[int, ...]) -> DiffValue:
    """Scalar (or lower-rank) broadcast to a target shape."""
    try:
        out = np.broadcast_to(a.data, shape).copy()
    except ValueError:
        raise ShapeError("broadcast", a.shape, shape) from None
    return a.graph.record(
        "broadcast", [a], out, lambda g: (_unbroadcast(g, a.shape),)
    )


def exp(a: DiffValue) -> DiffValue:
    out = np.exp(a.data)
    return a.graph.record("exp", [a], out, lambda g: (g * out,))


def log(a: DiffValue, floor: float = LOG_FLOOR) -> DiffValue:
    """Natural log of max(a, floor); gradient is zero where the floor is active."""
    active = a.data > floor
    out = np.log(np.maximum(a.data, floor))

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.where(active, g / np.where(active, a.data, 1.0), 0.0),)

    return a.graph.record("log", [a], out, vjp)


def sin(a: DiffValue) -> DiffValue:
    return a.graph.record("sin", [a], np.sin(a.data), lambda g: (g * np.cos(a.data),))


def sigmoid(a: DiffValue) -> DiffValue:
    out = expit(a.data)
    return a.graph.record("sigmoid", [a], out, lambda g: (g * out * (1.0 - out),))


def softplus(a: DiffValue) -> DiffValue:
    """Smooth ReLU: log(1 + exp(a))."""
    out = np.logaddexp(0.0, a.data)
    return a.graph.record("softplus", [a], out, lambda g: (g * expit(a.data),))


def power(a: DiffValue, exponent: float) -> DiffValue:
    out = a.data**exponent

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * exponent * a.data ** (exponent - 1.0),)

    return a.graph.record("power", [a], out, vjp)


def softmax(a: DiffValue, axis: int = -1) -> DiffValue:
    """Normalized exponentials along one axis."""
    shifted = np.exp(a.data - a.data.max(axis=axis, keepdims=True))
    out = shifted / shifted.sum(axis=axis, keepdims=True)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return a.graph.record("softmax", [a], out, vjp)


# ------------------------------------------------------------------ reductions


def sum(a: DiffValue, axis: Axis = None, keepdims: bool = False) -> DiffValue:
    out = np.sum(a.data, axis=axis, keepdims=keepdims)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape),)

    return a.graph.record("sum", [a], out, vjp)


def mean(a: DiffValue, axis: Axis = None, keepdims: bool = False) -> DiffValue:
    if axis is None:
        count = a.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def l1_distance(a: Operand, b: Operand) -> DiffValue:
    """Sum of absolute differences; subgradient 0 where the operands agree."""
    graph = _graph_of([a, b], "l1_distance")
    x, y = _lift(graph, a), _lift(graph, b)
    _broadcast_check("l1_distance", x, y)
    diff = x.data - y.data
    sign = np.sign(diff)

    def vjp(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        local = g * sign
        return _unbroadcast(local, x.shape), _unbroadcast(-local, y.shape)

    return graph.record("l1_distance", [x, y], np.abs(diff).sum(), vjp)


# ----------------------------------------------------------------- structural


def reshape(a: DiffValue, shape: Union[int, tuple[int, ...]]) -> DiffValue:
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", a.shape, tuple(np.atleast_1d(shape))) from None
    return a.graph.record("reshape", [a], out, lambda g: (g.reshape(a.shape),))


def transpose(a: DiffValue) -> DiffValue:
    return a.graph.record("transpose", [a], a.data.T, lambda g: (g.T,))


def getitem(a: DiffValue, index: Any) -> DiffValue:
    out = a.data[index]

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return a.graph.record("getitem", [a], out, vjp)


def concat(values: Sequence[Operand], axis: int = 0) -> DiffValue:
    graph = _graph_of(values, "concat")
    parts = [_lift(graph, v) for v in values]
    try:
        out = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError:
        raise ShapeError("concat", *[p.shape for p in parts]) from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def vjp(g: np.ndarray) -> tuple[np.ndarray, ...]:
        return tuple(np.split(g, bounds, axis=axis))

    return graph.record("concat", parts, out, vjp)


# --------------------------------------------------------------------- linear


def matmul(a: Operand, b: Operand) -> DiffValue:
    graph = _graph_of([a, b], "matmul")
    x, y = _lift(graph, a), _lift(graph, b)
    if x.ndim not in (1, 2) or y.ndim not in (1, 2) or x.shape[-1] != y.shape[0]:
        raise ShapeError("matmul", x.shape, y.shape)

    def vjp(g: np.ndarray) -> tuple[Optional[np.ndarray], Optional[np.ndarray]]:
        if x.ndim == 2 and y.ndim == 2:
            return g @ y.data.T, x.data.T @ g
        if x.ndim == 1 and y.ndim == 2:
            return y.data @ g, np.outer(x.data, g)
        if x.ndim == 2 and y.ndim == 1:
            return np.outer(g, y.data), x.data.T @ g
        return g * y.data, g * x.data

    return graph.record("matmul", [x, y], x.data @ y.data, vjp)


def affine(x: Operand, weight: Operand, bias: Operand) -> DiffValue:
    """x @ weight + bias for a single vector or a batch of row vectors."""
    graph = _graph_of([x, weight, bias], "affine")
    xv, w, b = _lift(graph, x), _lift(graph, weight), _lift(graph, bias)
    if (
        w.ndim != 2
        or xv.ndim not in (1, 2)
        or xv.shape[-1] != w.shape[0]
        or b.shape != (w.shape[1],)
    ):
        raise ShapeError("affine", xv.shape, w.shape, b.shape)
    rows = np.atleast_2d(xv.data)

    def vjp(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        g2 = np.atleast_2d(g)
        gx = (g2 @ w.data.T).reshape(xv.shape)
        return gx, rows.T @ g2, g2.sum(axis=0)

    return graph.record("affine", [xv, w, b], xv.data @ w.data + b.data, vjp)


def mel_project(spectrogram: DiffValue, filterbank: np.ndarray) -> DiffValue:
    """Project magnitude frames (frames x bins) onto mel bands (bands x bins)."""
    if spectrogram.ndim != 2 or spectrogram.shape[1] != filterbank.shape[1]:
        raise ShapeError("mel_project", spectrogram.shape, filterbank.shape)
    out = spectrogram.data @ filterbank.T
    return spectrogram.graph.record(
        "mel_project", [spectrogram], out, lambda g: (g @ filterbank,)
    )


def cumsum(a: DiffValue, axis: int = -1, exclusive: bool = False) -> DiffValue:
    """Prefix sum along an axis, accumulated in extended precision.

    With exclusive=True element n holds the sum of elements before n, so the
    first output is exactly zero.
    """
    wide = np.cumsum(a.data.astype(np.longdouble), axis=axis)
    if exclusive:
        head = np.zeros_like(np.take(wide, [0], axis=axis))
        wide = np.concatenate([head, np.delete(wide, -1, axis=axis)], axis=axis)
    out = wide.astype(np.float64)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        flipped = np.flip(np.cumsum(np.flip(g, axis=axis), axis=axis), axis=axis)
        return (flipped - g if exclusive else flipped,)

    return a.graph.record("cumsum", [a], out, vjp)


@lru_cache(maxsize=64)
def interpolation_matrix(
    n_frames: int, hop: int, total: int, offset: int = 0
) -> sparse.csr_matrix:
    """Sparse (total x n_frames) linear-interpolation matrix.

    Frame t sits at sample offset + hop * t; samples outside the first/last
    frame position hold the end value.
    """
    positions = (np.arange(total, dtype=np.float64) - offset) / hop
    if n_frames == 1:
        rows = np.arange(total)
        return sparse.csr_matrix(
            (np.ones(total), (rows, np.zeros(total, dtype=int))), shape=(total, 1)
        )
    positions = np.clip(positions, 0.0, n_frames - 1.0)
    left = np.minimum(np.floor(positions).astype(int), n_frames - 2)
    weight = positions - left
    rows = np.concatenate([np.arange(total), np.arange(total)])
    cols = np.concatenate([left, left + 1])
    vals = np.concatenate([1.0 - weight, weight])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(total, n_frames))


def upsample(a: DiffValue, hop: int, total: int, offset: int = 0) -> DiffValue:
    """Piecewise-linear upsampling of framewise values (axis 0) to samples."""
    if a.ndim not in (1, 2) or a.shape[0] < 1 or hop <= 0:
        raise ShapeError("upsample", a.shape, detail=f"hop={hop}")
    matrix = interpolation_matrix(a.shape[0], hop, total, offset)
    out = np.asarray(matrix @ a.data)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.asarray(matrix.T @ g),)

    return a.graph.record("upsample", [a], out, vjp)


# -------------------------------------------------------------------- framing


def _padded_length(n_frames: int, frame_length: int, hop: int) -> int:
    return (n_frames - 1) * hop + frame_length


def frame_signal(x: np.ndarray, frame_length: int, hop: int, n_frames: int) -> np.ndarray:
    """Slice a 1-D signal into overlapping frames, zero-padding the tail."""
    padded_len = _padded_length(n_frames, frame_length, hop)
    padded = np.zeros(builtins.max(padded_len, x.shape[0]))
    padded[: x.shape[0]] = x
    starts = np.arange(n_frames)[:, None] * hop
    return padded[starts + np.arange(frame_length)[None, :]]


def overlap_add_frames(frames: np.ndarray, hop: int) -> np.ndarray:
    """Sum frames placed hop samples apart (adjoint of frame_signal before crop)."""
    n_frames, frame_length = frames.shape
    n_blocks = -(-frame_length // hop)
    buffer = np.zeros((n_frames + n_blocks, hop))
    for block in range(n_blocks):
        lo = block * hop
        width = builtins.min(hop, frame_length - lo)
        buffer[block : block + n_frames, :width] += frames[:, lo : lo + width]
    return buffer.reshape(-1)[: _padded_length(n_frames, frame_length, hop)]


def _shift_crop(buffer: np.ndarray, offset: int, length: int) -> np.ndarray:
    """out[n] = buffer[n - offset] where defined, else 0."""
    out = np.zeros(length)
    lo = builtins.max(0, offset)
    hi = builtins.min(length, offset + buffer.shape[0])
    if hi > lo:
        out[lo:hi] = buffer[lo - offset : hi - offset]
    return out


def _shift_crop_adjoint(g: np.ndarray, offset: int, buffer_length: int) -> np.ndarray:
    out = np.zeros(buffer_length)
    lo = builtins.max(0, offset)
    hi = builtins.min(g.shape[0], offset + buffer_length)
    if hi > lo:
        out[lo - offset : hi - offset] = g[lo:hi]
    return out


def frame(a: DiffValue, frame_length: int, hop: int, n_frames: int) -> DiffValue:
    """Differentiable framing of a 1-D signal into (n_frames, frame_length)."""
    if a.ndim != 1 or frame_length <= 0 or hop <= 0 or n_frames <= 0:
        raise ShapeError(
            "frame", a.shape, detail=f"frame={frame_length}, hop={hop}, n={n_frames}"
        )
    out = frame_signal(a.data, frame_length, hop, n_frames)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        summed = overlap_add_frames(g, hop)
        full = np.zeros(builtins.max(summed.shape[0], a.shape[0]))
        full[: summed.shape[0]] = summed
        return (full[: a.shape[0]],)

    return a.graph.record("frame", [a], out, vjp)


def overlap_add(a: DiffValue, hop: int, length: int, offset: int = 0) -> DiffValue:
    """Overlap-add (n_frames, frame_length) frames into a signal of `length`.

    Frame t starts at sample offset + hop * t; samples outside [0, length)
    are dropped.
    """
    if a.ndim != 2 or hop <= 0 or length <= 0:
        raise ShapeError("overlap_add", a.shape, detail=f"hop={hop}, length={length}")
    buffer = overlap_add_frames(a.data, hop)
    out = _shift_crop(buffer, offset, length)
    n_frames, frame_length = a.shape

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        back = _shift_crop_adjoint(g, offset, buffer.shape[0])
        return (frame_signal(back, frame_length, hop, n_frames),)

    return a.graph.record("overlap_add", [a], out, vjp)


# ------------------------------------------------------------------- spectral


def dft_magnitude(frames: DiffValue, window: Optional[np.ndarray] = None) -> DiffValue:
    """|rfft(frames * window)| per row, as sqrt(re^2 + im^2 + eps^2)."""
    if frames.ndim != 2:
        raise ShapeError("dft_magnitude", frames.shape)
    length = frames.shape[1]
    if window is None:
        window = np.ones(length)
    if window.shape != (length,):
        raise ShapeError("dft_magnitude", frames.shape, window.shape)
    spectrum = np.fft.rfft(frames.data * window, axis=1)
    magnitude = np.sqrt(spectrum.real**2 + spectrum.imag**2 + MAGNITUDE_EPS**2)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        scale = g / magnitude
        half = (spectrum.real * scale) + 1j * (spectrum.imag * scale)
        full = np.zeros((frames.shape[0], length), dtype=np.complex128)
        full[:, : half.shape[1]] = half
        # Adjoint of the real-to-half-spectrum DFT: Re(sum_k C_k e^{+i2pi kn/L}).
        grad = np.real(np.fft.ifft(full, axis=1)) * length
        return (grad * window,)

    return frames.graph.record("dft_magnitude", [frames], magnitude, vjp)


def irfft(a: DiffValue) -> DiffValue:
    """Inverse real DFT of a real (zero-phase) half spectrum along the last axis."""
    bands = a.shape[-1]
    if bands < 2:
        raise ShapeError("irfft", a.shape)
    length = 2 * (bands - 1)
    out = np.fft.irfft(a.data, n=length, axis=-1)
    weights = np.full(bands, 2.0 / length)
    weights[0] = weights[-1] = 1.0 / length

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.fft.rfft(g, axis=-1).real * weights,)

    return a.graph.record("irfft", [a], out, vjp)


def convolve(a: Operand, b: Operand, length: Optional[int] = None) -> DiffValue:
    """Linear convolution along the last axis, truncated to `length` samples.

    Leading axes broadcast; `length` defaults to the full convolution.
    """
    graph = _graph_of([a, b], "convolve")
    x, h = _lift(graph, a), _lift(graph, b)
    try:
        np.broadcast_shapes(x.shape[:-1], h.shape[:-1])
    except ValueError:
        raise ShapeError("convolve", x.shape, h.shape) from None
    len_x, len_h = x.shape[-1], h.shape[-1]
    full_length = len_x + len_h - 1
    out_length = full_length if length is None else length
    full = sps.fftconvolve(x.data, h.data, axes=-1)
    out = _fit_last_axis(full, out_length)

    def vjp(g: np.ndarray) -> tuple[Optional[np.ndarray], Optional[np.ndarray]]:
        g_full = _fit_last_axis(g, full_length)
        gx = gh = None
        if x.requires_grad:
            corr = sps.fftconvolve(g_full, np.flip(h.data, axis=-1), axes=-1)
            gx = _unbroadcast(corr[..., len_h - 1 : len_h - 1 + len_x], x.shape)
        if h.requires_grad:
            corr = sps.fftconvolve(g_full, np.flip(x.data, axis=-1), axes=-1)
            gh = _unbroadcast(corr[..., len_x - 1 : len_x - 1 + len_h], h.shape)
        return gx, gh

    return graph.record("convolve", [x, h], out, vjp)


def _fit_last_axis(array: np.ndarray, length: int) -> np.ndarray:
    if array.shape[-1] >= length:
        return array[..., :length]
    pad = [(0, 0)] * (array.ndim - 1) + [(0, length - array.shape[-1])]
    return np.pad(array, pad)


# ------------------------------------------------------------------- registry

OP_KINDS: dict[str, Callable[..., DiffValue]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "neg": neg,
    "broadcast": broadcast,
    "exp": exp,
    "log": log,
    "sin": sin,
    "sigmoid": sigmoid,
    "softplus": softplus,
    "power": power,
    "softmax": softmax,
    "cumsum": cumsum,
    "upsample": upsample,
    "matmul": matmul,
    "affine": affine,
    "frame": frame,
    "overlap_add": overlap_add,
    "dft_magnitude": dft_magnitude,
    "irfft": irfft,
    "mel_project": mel_project,
    "convolve": convolve,
    "sum": sum,
    "mean": mean,
    "l1_distance": l1_distance,
    "reshape": reshape,
    "transpose": transpose,
    "getitem": getitem,
    "concat": concat,
}


def record(op_kind: str, operands: Sequence[Operand], **attrs: Any) -> DiffValue:
    """Apply a primitive by name, e.g. record("add", [x, y])."""
    try:
        op = OP_KINDS[op_kind]
    except KeyError:
        raise ValidationError(
            f"unknown op-kind '{op_kind}'", f"one of: {', '.join(sorted(OP_KINDS))}"
        ) from None
    if op_kind == "concat":
        return op(list(operands), **attrs)
    return op(*operands, **attrs)
