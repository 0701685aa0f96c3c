"""
Array container: one plain-text header line `dims=<d1>x<d2>x...\\n` followed by the
payload as raw little-endian float32 in row-major order.
"""
from pathlib import Path
from typing import BinaryIO, Tuple, Union

import numpy as np

from ..infra.errors import ArrayFormatError

PathLike = Union[str, Path]
_DTYPE = np.dtype("<f4")
_MAX_HEADER = 4096


def encode_header(shape: Tuple[int, ...]) -> bytes:
    return ("dims=" + "x".join(str(int(d)) for d in shape) + "\n").encode("ascii")


def parse_header(line: bytes, source: str = "<array>") -> Tuple[int, ...]:
    try:
        text = line.decode("ascii").rstrip("\n")
    except UnicodeDecodeError:
        raise ArrayFormatError(f"{source}: header is not ASCII") from None
    if not text.startswith("dims="):
        raise ArrayFormatError(f"{source}: header must start with 'dims=', got {text[:40]!r}")
    body = text[len("dims="):]
    try:
        dims = tuple(int(d) for d in body.split("x"))
    except ValueError:
        raise ArrayFormatError(f"{source}: malformed dims {body!r}") from None
    if not dims or any(d < 0 for d in dims):
        raise ArrayFormatError(f"{source}: invalid dims {body!r}")
    return dims


def write_array(stream: BinaryIO, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(np.asarray(array, dtype=_DTYPE))
    stream.write(encode_header(arr.shape))
    stream.write(arr.tobytes(order="C"))


def read_array(stream: BinaryIO, source: str = "<array>") -> np.ndarray:
    line = stream.readline(_MAX_HEADER)
    if not line.endswith(b"\n"):
        raise ArrayFormatError(f"{source}: missing or overlong header line")
    dims = parse_header(line, source)
    count = int(np.prod(dims, dtype=np.int64))
    expected = count * _DTYPE.itemsize
    payload = stream.read(expected)
    if len(payload) != expected:
        raise ArrayFormatError(
            f"{source}: expected {expected} payload bytes for dims {dims}, got {len(payload)}"
        )
    return np.frombuffer(payload, dtype=_DTYPE).astype(np.float32).reshape(dims)


def save_array(path: PathLike, array) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = array.data if hasattr(array, "data") and not isinstance(array, np.ndarray) else array
    with open(path, "wb") as f:
        write_array(f, data)
    return path


def load_array(path: PathLike) -> np.ndarray:
    """Load a single container; trailing bytes after the payload are an error."""
    path = Path(path)
    if not path.exists():
        raise ArrayFormatError(f"Array file not found: {path}")
    with open(path, "rb") as f:
        arr = read_array(f, str(path))
        extra = len(f.read())
    if extra:
        raise ArrayFormatError(
            f"{path}: {extra} unexpected bytes after payload of {arr.size * _DTYPE.itemsize} bytes"
        )
    return arr
