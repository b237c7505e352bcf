"""Line-oriented text format for meshes and dual pairs.

::

    poly-mesh v1
    VERTICES n
    x y                      (n lines)
    CELLS m
    i0 i1 i2 ...             (m lines, counterclockwise)
    DUAL                     (optional)
    SEEDS m
    x y                      (m lines, one per cell)
    TRIANGLES t
    a b c                    (t lines, seed indices)
    PAIRING p
    e estar_len mx my        (p lines, interior edges)

Reals are written with 17 significant digits so reading reproduces the
binary values exactly.  Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dual import DualMeshPair, build_dual_pairing
from .polymesh import MeshError, PolygonalMesh

__all__ = ["MeshFormatError", "write_mesh", "read_mesh", "HEADER"]

HEADER = "poly-mesh v1"


class MeshFormatError(MeshError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _g(x) -> str:
    return f"{float(x):.17g}"


def write_mesh(mesh, path) -> None:
    """Write a :class:`PolygonalMesh` or :class:`DualMeshPair`."""
    pair = mesh if isinstance(mesh, DualMeshPair) else None
    prim = pair.primary if pair is not None else mesh
    out = [HEADER, f"VERTICES {prim.n_vertices}"]
    out += [f"{_g(x)} {_g(y)}" for x, y in prim.vertices]
    out.append(f"CELLS {prim.n_cells}")
    out += [" ".join(str(int(v)) for v in c) for c in prim.cells]
    if pair is not None:
        out.append("DUAL")
        out.append(f"SEEDS {len(pair.seeds)}")
        out += [f"{_g(x)} {_g(y)}" for x, y in pair.seeds]
        out.append(f"TRIANGLES {pair.n_triangles}")
        out += [" ".join(str(int(v)) for v in t) for t in pair.dual_triangles]
        inner = prim.interior_edges
        out.append(f"PAIRING {len(inner)}")
        for e in inner:
            mx, my = pair.intersection[e]
            out.append(f"{int(e)} {_g(pair.dual_length[e])} {_g(mx)} {_g(my)}")
    Path(path).write_text("\n".join(out) + "\n")


class _Lines:
    def __init__(self, text):
        self.items = []
        for no, raw in enumerate(text.splitlines(), start=1):
            s = raw.split("#", 1)[0].strip()
            if s:
                self.items.append((no, s))
        self.pos = 0
        self.last = len(text.splitlines())

    def next(self, what):
        if self.pos >= len(self.items):
            raise MeshFormatError(f"unexpected end of file, expected {what}", self.last)
        item = self.items[self.pos]
        self.pos += 1
        return item

    def done(self):
        return self.pos >= len(self.items)


def _section(lines, name):
    no, s = lines.next(f"section {name}")
    parts = s.split()
    if parts[0] != name or len(parts) != 2:
        raise MeshFormatError(f"expected '{name} <count>', got {s!r}", no)
    try:
        count = int(parts[1])
    except ValueError:
        raise MeshFormatError(f"bad count {parts[1]!r}", no) from None
    if count < 0:
        raise MeshFormatError("negative count", no)
    return count


def _numbers(lines, what, conv, width=None):
    no, s = lines.next(what)
    parts = s.split()
    if width is not None and len(parts) != width:
        raise MeshFormatError(f"expected {width} values for {what}, got {len(parts)}", no)
    try:
        return no, [conv(p) for p in parts]
    except ValueError as exc:
        raise MeshFormatError(f"cannot parse {what}: {exc}", no) from None


def read_mesh(path):
    """Read a mesh file; returns :class:`DualMeshPair` when a DUAL section is present.

    The dual pairing is rebuilt from seeds and triangles (re-verifying all
    invariants) and cross-checked against the stored PAIRING lines.
    """
    lines = _Lines(Path(path).read_text())
    no, s = lines.next("header")
    if s != HEADER:
        raise MeshFormatError(f"expected header {HEADER!r}, got {s!r}", no)
    nv = _section(lines, "VERTICES")
    verts = np.array([_numbers(lines, "vertex", float, 2)[1] for _ in range(nv)]).reshape(nv, 2)
    nc = _section(lines, "CELLS")
    cells = [_numbers(lines, "cell", int)[1] for _ in range(nc)]
    # raises MeshValidationError naming the cell, e.g. for clockwise input
    mesh = PolygonalMesh(verts, cells)
    if lines.done():
        return mesh

    no, s = lines.next("DUAL")
    if s != "DUAL":
        raise MeshFormatError(f"expected DUAL or end of file, got {s!r}", no)
    ns = _section(lines, "SEEDS")
    seeds = np.array([_numbers(lines, "seed", float, 2)[1] for _ in range(ns)]).reshape(ns, 2)
    nt = _section(lines, "TRIANGLES")
    tris = np.array([_numbers(lines, "triangle", int, 3)[1] for _ in range(nt)], dtype=np.int64)
    npair = _section(lines, "PAIRING")
    stored = []
    for _ in range(npair):
        no, vals = _numbers(lines, "pairing", float, 4)
        stored.append((no, vals))
    if not lines.done():
        no, s = lines.next("end of file")
        raise MeshFormatError(f"trailing content {s!r}", no)

    pair = build_dual_pairing(mesh, seeds, tris.reshape(-1, 3))
    inner = set(int(e) for e in mesh.interior_edges)
    if npair != len(inner):
        raise MeshFormatError(f"PAIRING lists {npair} edges, mesh has {len(inner)} interior edges")
    for no, (e, L, mx, my) in stored:
        e = int(e)
        if e not in inner:
            raise MeshFormatError(f"edge {e} is not an interior edge", no)
        ok = (
            abs(L - pair.dual_length[e]) <= 1e-12 * max(1.0, L)
            and abs(mx - pair.intersection[e, 0]) <= 1e-12
            and abs(my - pair.intersection[e, 1]) <= 1e-12
        )
        if not ok:
            raise MeshFormatError(f"stored pairing of edge {e} disagrees with the geometry", no)
    return pair
