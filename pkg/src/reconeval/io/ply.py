"""Minimal PLY point-cloud reader/writer (ascii and binary little-endian).

Only the vertex element is interpreted: x/y/z (float or double) are required,
red/green/blue (uchar) are optional. Other scalar vertex properties are
skipped; list properties inside the vertex element are rejected because their
size cannot be known up front.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from ..errors import PlyFormatError

__all__ = ["read_ply", "write_ply"]

_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


class _Element:
    def __init__(self, name: str, count: int):
        self.name = name
        self.count = count
        self.properties: List[Tuple[str, str]] = []  # (name, numpy dtype code)
        self.has_list = False


def _parse_header(data: bytes, path) -> Tuple[str, List[_Element], int]:
    if not data.startswith(b"ply"):
        raise PlyFormatError(f"{path}: missing 'ply' magic")
    end = data.find(b"end_header\n")
    if end < 0:
        raise PlyFormatError(f"{path}: missing end_header")
    body_start = end + len(b"end_header\n")
    try:
        header = data[:end].decode("ascii")
    except UnicodeDecodeError as exc:
        raise PlyFormatError(f"{path}: non-ascii header") from exc

    fmt: Optional[str] = None
    elements: List[_Element] = []
    for line in header.splitlines()[1:]:
        tokens = line.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if len(tokens) < 2:
                raise PlyFormatError(f"{path}: malformed format line")
            fmt = tokens[1]
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise PlyFormatError(f"{path}: malformed element line {line!r}")
            elements.append(_Element(tokens[1], int(tokens[2])))
        elif tokens[0] == "property":
            if not elements:
                raise PlyFormatError(f"{path}: property before any element")
            if tokens[1] == "list":
                elements[-1].has_list = True
                continue
            if len(tokens) != 3:
                raise PlyFormatError(f"{path}: malformed property line {line!r}")
            type_name, prop_name = tokens[1], tokens[2]
            if type_name not in _SCALAR_TYPES:
                raise PlyFormatError(f"{path}: unsupported property type {type_name!r}")
            elements[-1].properties.append((prop_name, _SCALAR_TYPES[type_name]))
    if fmt is None:
        raise PlyFormatError(f"{path}: header has no format line")
    if fmt not in ("ascii", "binary_little_endian"):
        raise PlyFormatError(f"{path}: unsupported format {fmt!r}")
    return fmt, elements, body_start


def _extract_vertex_arrays(rows: np.ndarray, element: _Element, path):
    names = [p[0] for p in element.properties]
    for required in ("x", "y", "z"):
        if required not in names:
            raise PlyFormatError(f"{path}: vertex element lacks property {required!r}")
    positions = np.stack(
        [rows["x"], rows["y"], rows["z"]], axis=1
    ).astype(np.float64)
    colors = None
    if all(c in names for c in ("red", "green", "blue")):
        colors = np.stack(
            [rows["red"], rows["green"], rows["blue"]], axis=1
        ).astype(np.uint8)
    return positions, colors


def read_ply(path) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Read vertex positions (N,3) float64 and optional colors (N,3) uint8."""
    path = Path(path)
    data = path.read_bytes()
    fmt, elements, offset = _parse_header(data, path)

    vertex = next((e for e in elements if e.name == "vertex"), None)
    if vertex is None:
        raise PlyFormatError(f"{path}: no vertex element")

    if fmt == "binary_little_endian":
        for element in elements:
            if element.has_list:
                if element is vertex:
                    raise PlyFormatError(f"{path}: list property in vertex element")
                if elements.index(element) < elements.index(vertex):
                    raise PlyFormatError(
                        f"{path}: cannot skip list-typed element {element.name!r} "
                        f"preceding vertex data"
                    )
        for element in elements:
            dtype = np.dtype([(n, "<" + c) for n, c in element.properties])
            nbytes = dtype.itemsize * element.count
            if element is vertex:
                if offset + nbytes > len(data):
                    raise PlyFormatError(
                        f"{path}: vertex data truncated "
                        f"(expected {nbytes} bytes at offset {offset})"
                    )
                rows = np.frombuffer(data, dtype=dtype, count=element.count, offset=offset)
                return _extract_vertex_arrays(rows, vertex, path)
            offset += nbytes
        raise AssertionError("unreachable")

    # ascii
    lines = data[offset:].decode("ascii", errors="replace").splitlines()
    lines = [ln for ln in (ln.strip() for ln in lines) if ln and not ln.startswith("comment")]
    cursor = 0
    for element in elements:
        if element is not vertex:
            cursor += element.count  # list rows still occupy one line each
            continue
        if element.has_list:
            raise PlyFormatError(f"{path}: list property in vertex element")
        rows = lines[cursor : cursor + element.count]
        if len(rows) < element.count:
            raise PlyFormatError(
                f"{path}: vertex data truncated ({len(rows)} of {element.count} rows)"
            )
        dtype = np.dtype([(n, c) for n, c in element.properties])
        out = np.empty(element.count, dtype=dtype)
        width = len(element.properties)
        for i, row in enumerate(rows):
            tokens = row.split()
            if len(tokens) < width:
                raise PlyFormatError(f"{path}: vertex row {i} has {len(tokens)} fields, needs {width}")
            for (name, code), token in zip(element.properties, tokens):
                out[name][i] = float(token) if code in ("f4", "f8") else int(token)
        return _extract_vertex_arrays(out, vertex, path)
    raise AssertionError("unreachable")


def write_ply(
    path,
    positions: np.ndarray,
    colors: Optional[np.ndarray] = None,
    binary: bool = True,
    double_precision: bool = True,
) -> None:
    """Write a vertex-only point cloud; double precision keeps round trips exact."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if colors is not None:
        colors = np.asarray(colors, dtype=np.uint8).reshape(-1, 3)
        if len(colors) != len(positions):
            raise PlyFormatError("positions and colors disagree on vertex count")
    coord_type = "double" if double_precision else "float"
    header = [
        "ply",
        f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
        f"element vertex {len(positions)}",
        f"property {coord_type} x",
        f"property {coord_type} y",
        f"property {coord_type} z",
    ]
    if colors is not None:
        header += [f"property uchar {c}" for c in ("red", "green", "blue")]
    header.append("end_header")
    header_bytes = ("\n".join(header) + "\n").encode("ascii")

    path = Path(path)
    if binary:
        fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")] if double_precision else [
            ("x", "<f4"), ("y", "<f4"), ("z", "<f4")]
        if colors is not None:
            fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
        rows = np.empty(len(positions), dtype=np.dtype(fields))
        rows["x"], rows["y"], rows["z"] = positions[:, 0], positions[:, 1], positions[:, 2]
        if colors is not None:
            rows["red"], rows["green"], rows["blue"] = colors[:, 0], colors[:, 1], colors[:, 2]
        path.write_bytes(header_bytes + rows.tobytes())
    else:
        lines = []
        for i in range(len(positions)):
            coords = positions[i]
            if not double_precision:
                coords = coords.astype(np.float32)
            row = [repr(float(v)) for v in coords]
            if colors is not None:
                row += [str(int(v)) for v in colors[i]]
            lines.append(" ".join(row))
        path.write_bytes(header_bytes + ("\n".join(lines) + ("\n" if lines else "")).encode("ascii"))
