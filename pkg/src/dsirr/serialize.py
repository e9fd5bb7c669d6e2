"""JSON codecs for scalars and matrices.

Complex scalars travel as [re, im] pairs in float mode or as strings
"a/b+c/d i" in exact mode; plain JSON integers are accepted in both
modes.  Matrices are flat row-major arrays of scalars; shapes come
from context.
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .scalars import GaussianRational, as_exact, format_exact, parse_exact


def scalar_to_json(x):
    if isinstance(x, GaussianRational):
        return format_exact(x)
    z = complex(x)
    return [z.real, z.imag]


def scalar_from_json(obj, exact: bool = None):
    """Decode a scalar; exact=None infers the mode from the payload."""
    if isinstance(obj, str):
        g = parse_exact(obj)
        return g if exact in (None, True) else g.to_complex()
    if isinstance(obj, bool):
        raise ValueError("booleans are not scalars")
    if isinstance(obj, int):
        return complex(obj) if exact is False else GaussianRational(obj)
    if isinstance(obj, float):
        if exact:
            raise ValueError(f"float {obj!r} not allowed in exact mode; use 'a/b+c/d i' strings")
        return complex(obj)
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        if exact:
            raise ValueError("[re, im] pairs are float-mode scalars; exact mode needs strings")
        return complex(float(obj[0]), float(obj[1]))
    raise ValueError(f"cannot decode scalar from {obj!r}")


def matrix_to_json(a: np.ndarray) -> list:
    return [scalar_to_json(x) for x in np.asarray(a).reshape(-1)]


def matrix_from_json(data: list, rows: int, cols: int, exact: bool) -> np.ndarray:
    if len(data) != rows * cols:
        raise ValueError(f"matrix payload has {len(data)} entries, expected {rows * cols}")
    vals = [scalar_from_json(x, exact) for x in data]
    if exact:
        out = linalg.zeros(rows, cols, True)
        for i in range(rows):
            for j in range(cols):
                out[i, j] = as_exact(vals[i * cols + j])
        return out
    return np.array(vals, dtype=complex).reshape(rows, cols)
