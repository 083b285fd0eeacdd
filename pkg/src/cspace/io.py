"""Readers and writers for OFF, OBJ and PDB files."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .mesh import BallSet, Label, MeshError, TriangleMesh


class ParseError(ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, msg: str, path=None, line: int | None = None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + msg)
        self.path = path
        self.line = line


# Per-triangle colours used when writing labelled OFF files.
LABEL_COLORS = {
    Label.SURFACE: (200, 200, 200),
    Label.MOUTH: (255, 0, 0),
    Label.INTERIOR_WALL: (255, 255, 0),
    Label.POCKET_INTERIOR: (0, 200, 0),
    Label.TUNNEL_INTERIOR: (255, 255, 0),
    Label.THIN: (0, 0, 255),
    Label.CONTACT: (255, 0, 255),
}
_COLOR_TO_LABEL = {}
for _lab, _col in LABEL_COLORS.items():
    _COLOR_TO_LABEL.setdefault(_col, _lab)


def _tokens(path):
    """Yield ``(line_number, tokens)`` skipping blanks and ``#`` comments."""
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        for no, raw in enumerate(fh, 1):
            s = raw.split("#", 1)[0].split()
            if s:
                yield no, s


def _fan(poly):
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]


def read_off(path, permissive: bool = False) -> TriangleMesh:
    it = _tokens(path)
    try:
        no, head = next(it)
    except StopIteration:
        raise ParseError("empty file", path) from None
    if head[0].upper().endswith("OFF"):
        head = head[1:]
        if not head:
            try:
                no, head = next(it)
            except StopIteration:
                raise ParseError("missing counts line", path) from None
    try:
        nv, nf = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise ParseError("bad counts line", path, no) from None
    verts = np.empty((nv, 3))
    for i in range(nv):
        try:
            no, tok = next(it)
            verts[i] = [float(t) for t in tok[:3]]
        except StopIteration:
            raise ParseError(f"expected {nv} vertices, got {i}", path) from None
        except (ValueError, IndexError):
            raise ParseError("bad vertex line", path, no) from None
    tris, labels, colored = [], [], False
    for _ in range(nf):
        try:
            no, tok = next(it)
            k = int(tok[0])
            poly = [int(t) for t in tok[1:1 + k]]
            if len(poly) != k or k < 3:
                raise ValueError
        except StopIteration:
            raise ParseError(f"expected {nf} faces", path) from None
        except (ValueError, IndexError):
            raise ParseError("bad face line", path, no) from None
        rest = tok[1 + k:]
        lab = Label.SURFACE
        if len(rest) >= 3:
            colored = True
            try:
                rgb = tuple(int(round(float(c) * (255 if "." in c else 1))) for c in rest[:3])
            except ValueError:
                raise ParseError("bad face colour", path, no) from None
            lab = _COLOR_TO_LABEL.get(rgb, Label.SURFACE)
        for t in _fan(poly):
            tris.append(t)
            labels.append(int(lab))
    return _build(verts, tris, labels if colored else None, permissive, path)


def read_obj(path, permissive: bool = False) -> TriangleMesh:
    verts, tris = [], []
    for no, tok in _tokens(path):
        if tok[0] == "v":
            try:
                verts.append([float(t) for t in tok[1:4]])
                if len(verts[-1]) != 3:
                    raise ValueError
            except ValueError:
                raise ParseError("bad vertex line", path, no) from None
        elif tok[0] == "f":
            try:
                idx = [int(t.split("/")[0]) for t in tok[1:]]
            except ValueError:
                raise ParseError("bad face line", path, no) from None
            if len(idx) < 3:
                raise ParseError("face with fewer than 3 vertices", path, no)
            n = len(verts)
            idx = [i - 1 if i > 0 else n + i for i in idx]
            tris.extend(_fan(idx))
    return _build(np.array(verts, float).reshape(-1, 3), tris, None, permissive, path)


def _build(verts, tris, labels, permissive, path):
    try:
        return TriangleMesh(verts, np.array(tris, np.int64).reshape(-1, 3), labels,
                            permissive=permissive)
    except MeshError as exc:
        raise MeshError(f"{path}: {exc}") from None


def load_mesh(path, format: str | None = None, strict: bool = False,
              permissive: bool = False) -> TriangleMesh:
    """Load an OFF or OBJ mesh.

    With ``strict`` the mesh must be 2-manifold: an edge with other than two
    incident triangles raises :class:`MeshError` naming the edge.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).upper()
    if not path.exists():
        raise FileNotFoundError(str(path))
    if fmt == "OFF":
        mesh = read_off(path, permissive)
    elif fmt == "OBJ":
        mesh = read_obj(path, permissive)
    else:
        raise ParseError(f"unknown mesh format {fmt!r}", path)
    if strict:
        mesh.check_manifold()
    return mesh


def _fmt(x: float) -> str:
    # repr gives the shortest string that round-trips to the same double
    return repr(float(x))


def write_off(mesh: TriangleMesh, path, labels: bool = True) -> None:
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_triangles} 0"]
    lines += [" ".join(map(_fmt, v)) for v in mesh.vertices.tolist()]
    use = labels and mesh.labels is not None
    for i, t in enumerate(mesh.triangles.tolist()):
        s = f"3 {t[0]} {t[1]} {t[2]}"
        if use:
            r, g, b = LABEL_COLORS.get(Label(int(mesh.labels[i])), LABEL_COLORS[Label.SURFACE])
            s += f" {r} {g} {b}"
        lines.append(s)
    _atomic_write(path, "\n".join(lines) + "\n")


def write_obj(mesh: TriangleMesh, path) -> None:
    lines = ["v " + " ".join(map(_fmt, v)) for v in mesh.vertices.tolist()]
    lines += [f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}" for t in mesh.triangles.tolist()]
    _atomic_write(path, "\n".join(lines) + "\n")


def save_mesh(mesh: TriangleMesh, path, format: str | None = None) -> None:
    fmt = (format or Path(path).suffix.lstrip(".")).upper()
    if fmt == "OBJ":
        write_obj(mesh, path)
    else:
        write_off(mesh, path)


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------


def load_pdb(path) -> BallSet:
    """Read ATOM/HETATM records from a fixed-column PDB file.

    Coordinates come from columns 31-54 and the element symbol from columns
    77-78; when the element field is blank it is guessed from the atom name.
    """
    centers, elements, chains = [], [], []
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        for no, line in enumerate(fh, 1):
            rec = line[:6].strip()
            if rec not in ("ATOM", "HETATM"):
                continue
            try:
                xyz = [float(line[30:38]), float(line[38:46]), float(line[46:54])]
            except ValueError:
                raise ParseError("malformed coordinate columns 31-54", path, no) from None
            elem = line[76:78].strip()
            if not elem:
                name = line[12:16].strip()
                elem = "".join(c for c in name if c.isalpha())[:1]
            centers.append(xyz)
            elements.append(elem.upper())
            chains.append(line[21:22].strip() if len(line) > 21 else "")
    if not centers:
        raise ParseError("no ATOM or HETATM records", path)
    return BallSet.from_elements(np.array(centers), elements, chains)


def write_pdb(balls: BallSet, path) -> None:
    lines = []
    for i, (c, e, ch) in enumerate(zip(balls.centers, balls.elements, balls.chains), 1):
        name = e.ljust(3)
        lines.append(
            f"ATOM  {i:5d} {name:<4} UNK {ch or 'A':1}{1:4d}    "
            f"{c[0]:8.3f}{c[1]:8.3f}{c[2]:8.3f}{1.0:6.2f}{0.0:6.2f}          {e:>2}")
    _atomic_write(path, "\n".join(lines) + "\nEND\n")
