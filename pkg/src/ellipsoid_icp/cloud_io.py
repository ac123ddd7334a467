"""Point-cloud file readers and writers: xyz, csv, and ascii ply.

Coordinates are emitted with 17 significant digits so a save/load round trip
reproduces float64 values exactly. Parse failures raise ParseError carrying
the offending path and line number.
"""

from __future__ import annotations

import csv
import warnings
from pathlib import Path

import numpy as np

from .core import PointCloud
from .errors import InvalidInputError, ParseError

_EXTENSION_FORMATS = {".xyz": "xyz", ".csv": "csv", ".ply": "ply"}
_FORMATS = ("xyz", "csv", "ply")

# scalar ply property types we can parse as floats
_PLY_SCALAR_TYPES = {
    "char", "uchar", "int8", "uint8",
    "short", "ushort", "int16", "uint16",
    "int", "uint", "int32", "uint32",
    "float", "float32", "double", "float64",
}


def detect_format(path) -> str:
    """Cloud file format implied by the extension."""
    suffix = Path(path).suffix.lower()
    try:
        return _EXTENSION_FORMATS[suffix]
    except KeyError:
        raise InvalidInputError(
            f"cannot infer cloud format from extension {suffix!r} of {path}; "
            f"pass one of {_FORMATS} explicitly"
        ) from None


def load_cloud(path, fmt: str | None = None) -> PointCloud:
    """Read a point cloud; the format defaults to the file extension."""
    fmt = fmt or detect_format(path)
    if fmt not in _FORMATS:
        raise InvalidInputError(f"unknown cloud format {fmt!r}; expected one of {_FORMATS}")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read cloud file: {exc.strerror or exc}", path=path) from exc
    if fmt == "xyz":
        return _parse_xyz(text, path)
    if fmt == "csv":
        return _parse_csv(text, path)
    return _parse_ply(text, path)


def save_cloud(path, cloud: PointCloud, fmt: str | None = None) -> None:
    """Write a point cloud; the format defaults to the file extension."""
    fmt = fmt or detect_format(path)
    if fmt == "xyz":
        lines = [" ".join(format(v, ".17g") for v in col) for col in cloud.data.T]
    elif fmt == "csv":
        if cloud.d <= 3:
            header = ",".join(("x", "y", "z")[: cloud.d])
        else:
            header = ",".join(f"x{i}" for i in range(cloud.d))
        lines = [header]
        lines += [",".join(format(v, ".17g") for v in col) for col in cloud.data.T]
    elif fmt == "ply":
        if cloud.d != 3:
            raise InvalidInputError(f"ply stores 3-D vertices, cloud has d={cloud.d}")
        lines = [
            "ply",
            "format ascii 1.0",
            f"element vertex {cloud.n}",
            "property double x",
            "property double y",
            "property double z",
            "end_header",
        ]
        lines += [" ".join(format(v, ".17g") for v in col) for col in cloud.data.T]
    else:
        raise InvalidInputError(f"unknown cloud format {fmt!r}; expected one of {_FORMATS}")
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_xyz(text: str, path) -> PointCloud:
    """Whitespace-separated floats, one point per line; # comments allowed."""
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise ParseError("non-numeric field", path=path, line=lineno) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(
                f"ragged row: expected {width} fields, got {len(values)}",
                path=path,
                line=lineno,
            )
        rows.append(values)
    if not rows:
        raise ParseError("file contains no points", path=path)
    return PointCloud(np.array(rows).T)


def _parse_csv(text: str, path) -> PointCloud:
    """Comma-separated floats with an optional header row."""
    rows = []
    width = None
    reader = csv.reader(text.splitlines())
    for lineno, fields in enumerate(reader, start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        try:
            values = [float(f) for f in fields]
        except ValueError:
            if lineno == 1:
                continue
            raise ParseError("non-numeric field", path=path, line=lineno) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(
                f"ragged row: expected {width} fields, got {len(values)}",
                path=path,
                line=lineno,
            )
        rows.append(values)
    if not rows:
        raise ParseError("file contains no points", path=path)
    return PointCloud(np.array(rows).T)


def _parse_ply(text: str, path) -> PointCloud:
    """Ascii ply: vertex x/y/z extracted, other elements skipped with a warning."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError("not a ply file (missing 'ply' magic)", path=path, line=1)

    elements = []  # (name, count, [property names]), declaration order
    header_end = None
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens:
            continue
        keyword = tokens[0]
        if keyword == "format":
            if tokens[1:2] != ["ascii"]:
                raise ParseError(
                    f"unsupported ply format {' '.join(tokens[1:])!r}; only ascii is supported",
                    path=path,
                    line=lineno,
                )
        elif keyword in ("comment", "obj_info"):
            continue
        elif keyword == "element":
            if len(tokens) != 3:
                raise ParseError("malformed element declaration", path=path, line=lineno)
            try:
                count = int(tokens[2])
            except ValueError:
                raise ParseError("non-integer element count", path=path, line=lineno) from None
            elements.append([tokens[1], count, []])
        elif keyword == "property":
            if not elements:
                raise ParseError("property before any element", path=path, line=lineno)
            if tokens[1] == "list":
                if elements[-1][0] == "vertex":
                    raise ParseError(
                        "list property on vertex element is not supported",
                        path=path,
                        line=lineno,
                    )
                elements[-1][2].append(None)
            elif tokens[1] in _PLY_SCALAR_TYPES and len(tokens) == 3:
                elements[-1][2].append(tokens[2])
            else:
                raise ParseError(
                    f"unsupported property declaration {line.strip()!r}",
                    path=path,
                    line=lineno,
                )
        elif keyword == "end_header":
            header_end = lineno
            break
        else:
            raise ParseError(f"unknown header keyword {keyword!r}", path=path, line=lineno)
    if header_end is None:
        raise ParseError("missing end_header", path=path)

    vertex_entries = [e for e in elements if e[0] == "vertex"]
    if not vertex_entries:
        raise ParseError("ply file declares no vertex element", path=path)
    name, count, props = vertex_entries[0]
    if count < 1:
        raise ParseError("vertex element is empty", path=path)
    try:
        coord_cols = [props.index(axis) for axis in ("x", "y", "z")]
    except ValueError:
        raise ParseError(
            "vertex element lacks x/y/z properties", path=path
        ) from None
    skipped = sorted({e[0] for e in elements if e[0] != "vertex"})
    if skipped:
        warnings.warn(
            f"ignoring non-vertex ply elements in {path}: {', '.join(skipped)}"
        )

    # data rows follow in element declaration order, one item per line
    data_lines = [
        (lineno, line)
        for lineno, line in enumerate(lines[header_end:], start=header_end + 1)
        if line.strip()
    ]
    cursor = 0
    rows = None
    for element_name, element_count, element_props in elements:
        if cursor + element_count > len(data_lines):
            raise ParseError(
                f"element {element_name!r} declares {element_count} rows but the "
                "file ends early",
                path=path,
            )
        chunk = data_lines[cursor : cursor + element_count]
        cursor += element_count
        if element_name != "vertex" or rows is not None:
            continue
        rows = np.empty((element_count, 3))
        for i, (lineno, line) in enumerate(chunk):
            fields = line.split()
            if len(fields) != len(element_props):
                raise ParseError(
                    f"ragged vertex row: expected {len(element_props)} fields, "
                    f"got {len(fields)}",
                    path=path,
                    line=lineno,
                )
            try:
                rows[i] = [float(fields[c]) for c in coord_cols]
            except ValueError:
                raise ParseError("non-numeric vertex field", path=path, line=lineno) from None
    return PointCloud(rows.T)
