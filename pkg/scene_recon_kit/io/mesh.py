"""
Reading and writing of meshes and point clouds

Two mesh formats are supported and selected by file suffix

- ASCII OBJ, written with 9 significant digits and 1-based faces
- PLY, written as binary little-endian with a float x, y, z vertex element
  followed by a face element with a uchar count list of int indices

The category of a mesh is stored as a comment, "# category <name>" in OBJ
and "comment category <name>" in PLY. Point clouds are PLY files with a
vertex element only.

The PLY reader accepts ascii, binary little-endian and binary big-endian
files with any scalar property types, extra vertex properties and polygon
faces, which are fan triangulated.
"""
from loguru import logger
from typing import Dict, List, Optional, Tuple
from pathlib import Path
import numpy as np
from pydantic import BaseModel

from scene_recon_kit.errors import InputError, MeshFileError
from scene_recon_kit.core.mesh import TriMesh

MESH_SUFFIXES = (".obj", ".ply")
CATEGORY_COMMENT = "category"

PLY_TYPES = {
    "char": "i1",
    "int8": "i1",
    "uchar": "u1",
    "uint8": "u1",
    "short": "i2",
    "int16": "i2",
    "ushort": "u2",
    "uint16": "u2",
    "int": "i4",
    "int32": "i4",
    "uint": "u4",
    "uint32": "u4",
    "float": "f4",
    "float32": "f4",
    "double": "f8",
    "float64": "f8",
}
PLY_FORMATS = {"ascii": None, "binary_little_endian": "<", "binary_big_endian": ">"}


def _fan(polygon: List[int]) -> List[Tuple[int, int, int]]:
    """Fan triangulate a polygon given by vertex indices"""
    return [(polygon[0], polygon[i], polygon[i + 1]) for i in range(1, len(polygon) - 1)]


def _make_mesh(
    path: Path, vertices: np.ndarray, triangles: List, category: Optional[str]
) -> TriMesh:
    try:
        return TriMesh(
            np.asarray(vertices, dtype=float).reshape(-1, 3),
            np.asarray(triangles, dtype=np.int64).reshape(-1, 3),
            category,
        )
    except InputError as e:
        raise MeshFileError(path, e.message)


def save_obj(mesh: TriMesh, path: Path) -> None:
    """
    Write an ASCII OBJ file

    Parameters
    ----------
    mesh : TriMesh
        The mesh
    path : Path
        Output path
    """
    lines = ["# scene-recon-kit mesh"]
    if mesh.category is not None:
        lines.append(f"# {CATEGORY_COMMENT} {mesh.category}")
    lines.extend(f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices)
    lines.extend(f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles)
    path.write_text("\n".join(lines) + "\n")


def load_obj(path: Path) -> TriMesh:
    """
    Read an OBJ file

    Vertex directives with extra values, texture and normal references in
    faces and negative relative indices are accepted. Other directives are
    ignored.

    Parameters
    ----------
    path : Path
        The OBJ file

    Returns
    -------
    TriMesh
        The triangulated mesh

    Raises
    ------
    MeshFileError
        If a line cannot be parsed or an index is out of range
    """
    if not path.exists():
        raise MeshFileError(path, "File does not exist")
    vertices: List[Tuple[float, float, float]] = []
    triangles: List[Tuple[int, int, int]] = []
    category = None
    for iline, line in enumerate(path.read_text().splitlines(), start=1):
        tokens = line.split()
        if len(tokens) == 0:
            continue
        if tokens[0] == "#":
            if len(tokens) >= 3 and tokens[1] == CATEGORY_COMMENT:
                category = " ".join(tokens[2:])
            continue
        if tokens[0] == "v":
            try:
                x, y, z = (float(value) for value in tokens[1:4])
            except ValueError:
                raise MeshFileError(path, f"Line {iline} has a malformed vertex")
            vertices.append((x, y, z))
        elif tokens[0] == "f":
            polygon = []
            for token in tokens[1:]:
                try:
                    index = int(token.split("/")[0])
                except ValueError:
                    raise MeshFileError(path, f"Line {iline} has a malformed face")
                if index < 0:
                    index = len(vertices) + index + 1
                if not 1 <= index <= len(vertices):
                    raise MeshFileError(
                        path, f"Line {iline} references missing vertex {index}"
                    )
                polygon.append(index - 1)
            if len(polygon) < 3:
                raise MeshFileError(path, f"Line {iline} has fewer than 3 vertices")
            triangles.extend(_fan(polygon))
    logger.debug(f"Read {len(vertices)} vertices, {len(triangles)} triangles {path}")
    return _make_mesh(path, np.array(vertices), triangles, category)


class PlyProperty(BaseModel):
    """A PLY property, list properties have a count type"""

    name: str
    dtype: str
    count_dtype: Optional[str] = None

    @property
    def is_list(self) -> bool:
        return self.count_dtype is not None


class PlyElement(BaseModel):
    """A PLY element declaration"""

    name: str
    count: int
    properties: List[PlyProperty] = []


class PlyHeader(BaseModel):
    """The parsed PLY header"""

    format: str
    elements: List[PlyElement]
    comments: List[str]
    length: int


def _ply_type(path: Path, name: str) -> str:
    if name not in PLY_TYPES:
        raise MeshFileError(path, f"Unknown PLY type '{name}'")
    return PLY_TYPES[name]


def read_ply_header(path: Path, data: bytes) -> PlyHeader:
    """
    Parse the header of a PLY file

    Parameters
    ----------
    path : Path
        The file path for error messages
    data : bytes
        The file contents

    Returns
    -------
    PlyHeader
        The header with its length in bytes

    Raises
    ------
    MeshFileError
        If the header is malformed
    """
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise MeshFileError(path, "Not a PLY file")
    newline = data.find(b"\n", end)
    length = len(data) if newline < 0 else newline + 1
    lines = data[:end].decode("ascii", errors="replace").splitlines()
    fmt = None
    elements: List[PlyElement] = []
    comments: List[str] = []
    for line in lines[1:]:
        tokens = line.split()
        if len(tokens) == 0:
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] not in PLY_FORMATS:
                raise MeshFileError(path, f"Unsupported PLY format '{line}'")
            fmt = tokens[1]
        elif tokens[0] == "comment":
            comments.append(" ".join(tokens[1:]))
        elif tokens[0] == "element":
            try:
                elements.append(PlyElement(name=tokens[1], count=int(tokens[2])))
            except (IndexError, ValueError):
                raise MeshFileError(path, f"Malformed PLY element '{line}'")
        elif tokens[0] == "property":
            if len(elements) == 0:
                raise MeshFileError(path, "PLY property before any element")
            if len(tokens) == 5 and tokens[1] == "list":
                prop = PlyProperty(
                    name=tokens[4],
                    dtype=_ply_type(path, tokens[3]),
                    count_dtype=_ply_type(path, tokens[2]),
                )
            elif len(tokens) == 3:
                prop = PlyProperty(name=tokens[2], dtype=_ply_type(path, tokens[1]))
            else:
                raise MeshFileError(path, f"Malformed PLY property '{line}'")
            elements[-1].properties.append(prop)
    if fmt is None:
        raise MeshFileError(path, "PLY header has no format line")
    return PlyHeader(format=fmt, elements=elements, comments=comments, length=length)


def _read_fixed_list_element(
    data: bytes, offset: int, element: PlyElement, order: str
) -> Optional[Tuple[Dict[str, object], int]]:
    """Vectorised read of a single list property with a constant length"""
    if len(element.properties) != 1 or element.count == 0:
        return None
    prop = element.properties[0]
    if not prop.is_list:
        return None
    count_type = np.dtype(order + str(prop.count_dtype))
    if offset + count_type.itemsize > len(data):
        return None
    length = int(np.frombuffer(data, count_type, 1, offset)[0])
    if length < 1:
        return None
    row = np.dtype([("n", count_type), ("v", order + prop.dtype, (length,))])
    end = offset + row.itemsize * element.count
    if end > len(data):
        return None
    rows = np.frombuffer(data, row, element.count, offset)
    if not np.all(rows["n"] == length):
        return None
    return {prop.name: rows["v"].tolist()}, end


def _read_binary_element(
    path: Path, data: bytes, offset: int, element: PlyElement, order: str
) -> Tuple[Dict[str, object], int]:
    """Read one binary element, returns the columns and the new offset"""
    if not any(prop.is_list for prop in element.properties):
        dtype = np.dtype([(p.name, order + p.dtype) for p in element.properties])
        n_bytes = dtype.itemsize * element.count
        if offset + n_bytes > len(data):
            raise MeshFileError(path, f"PLY element '{element.name}' is truncated")
        rows = np.frombuffer(data, dtype=dtype, count=element.count, offset=offset)
        columns = {p.name: rows[p.name].astype(float) for p in element.properties}
        return columns, offset + n_bytes
    fixed = _read_fixed_list_element(data, offset, element, order)
    if fixed is not None:
        return fixed
    columns: Dict[str, object] = {p.name: [] for p in element.properties}
    for _irow in range(element.count):
        for prop in element.properties:
            if prop.is_list:
                count_type = np.dtype(order + str(prop.count_dtype))
                if offset + count_type.itemsize > len(data):
                    raise MeshFileError(
                        path, f"PLY element '{element.name}' is truncated"
                    )
                count = int(np.frombuffer(data, count_type, 1, offset)[0])
                offset += count_type.itemsize
                item_type = np.dtype(order + prop.dtype)
                if offset + count * item_type.itemsize > len(data):
                    raise MeshFileError(
                        path, f"PLY element '{element.name}' is truncated"
                    )
                values = np.frombuffer(data, item_type, count, offset)
                offset += count * item_type.itemsize
                columns[prop.name].append(values.tolist())  # type: ignore
            else:
                item_type = np.dtype(order + prop.dtype)
                if offset + item_type.itemsize > len(data):
                    raise MeshFileError(
                        path, f"PLY element '{element.name}' is truncated"
                    )
                value = np.frombuffer(data, item_type, 1, offset)[0]
                offset += item_type.itemsize
                columns[prop.name].append(float(value))  # type: ignore
    return columns, offset


def _read_ascii_elements(
    path: Path, text: str, elements: List[PlyElement]
) -> Dict[str, Dict[str, object]]:
    """Read all elements from the ASCII body"""
    tokens = text.split()
    position = 0
    result: Dict[str, Dict[str, object]] = {}

    def take() -> str:
        nonlocal position
        if position >= len(tokens):
            raise MeshFileError(path, "PLY body is truncated")
        position += 1
        return tokens[position - 1]

    try:
        for element in elements:
            columns: Dict[str, object] = {p.name: [] for p in element.properties}
            for _irow in range(element.count):
                for prop in element.properties:
                    if prop.is_list:
                        count = int(take())
                        values = [int(float(take())) for _ in range(count)]
                        columns[prop.name].append(values)  # type: ignore
                    else:
                        columns[prop.name].append(float(take()))  # type: ignore
            result[element.name] = columns
    except ValueError:
        raise MeshFileError(path, "PLY body has a malformed value")
    return result


def read_ply(path: Path) -> Tuple[PlyHeader, Dict[str, Dict[str, object]]]:
    """
    Read the header and all element columns of a PLY file

    Raises
    ------
    MeshFileError
        If the file is missing, malformed or truncated
    """
    if not path.exists():
        raise MeshFileError(path, "File does not exist")
    data = path.read_bytes()
    header = read_ply_header(path, data)
    order = PLY_FORMATS[header.format]
    if order is None:
        body = data[header.length :].decode("ascii", errors="replace")
        return header, _read_ascii_elements(path, body, header.elements)
    offset = header.length
    result = {}
    for element in header.elements:
        columns, offset = _read_binary_element(path, data, offset, element, order)
        result[element.name] = columns
    return header, result


def _ply_category(header: PlyHeader) -> Optional[str]:
    for comment in header.comments:
        tokens = comment.split()
        if len(tokens) >= 2 and tokens[0] == CATEGORY_COMMENT:
            return " ".join(tokens[1:])
    return None


def _ply_vertices(path: Path, columns: Dict[str, Dict[str, object]]) -> np.ndarray:
    if "vertex" not in columns:
        raise MeshFileError(path, "PLY file has no vertex element")
    vertex = columns["vertex"]
    missing = [axis for axis in ("x", "y", "z") if axis not in vertex]
    if len(missing) > 0:
        raise MeshFileError(path, f"PLY vertex element is missing {missing}")
    return np.stack([np.asarray(vertex[axis], dtype=float) for axis in "xyz"], axis=1)


def load_ply(path: Path) -> TriMesh:
    """
    Read a PLY mesh

    Parameters
    ----------
    path : Path
        The PLY file

    Returns
    -------
    TriMesh
        The mesh, polygons are fan triangulated

    Raises
    ------
    MeshFileError
        If the file is malformed or a face index is out of range
    """
    header, columns = read_ply(path)
    vertices = _ply_vertices(path, columns)
    triangles: List[Tuple[int, int, int]] = []
    faces = columns.get("face", {})
    index_name = next(
        (name for name in ("vertex_indices", "vertex_index") if name in faces), None
    )
    if index_name is not None:
        for polygon in faces[index_name]:  # type: ignore
            polygon = [int(i) for i in polygon]
            if len(polygon) < 3:
                raise MeshFileError(path, "PLY face has fewer than 3 vertices")
            triangles.extend(_fan(polygon))
    logger.debug(f"Read {len(vertices)} vertices, {len(triangles)} triangles {path}")
    return _make_mesh(path, vertices, triangles, _ply_category(header))


def _ply_header_lines(
    n_vertices: int, n_faces: Optional[int], category: Optional[str]
) -> List[str]:
    lines = [
        "ply",
        "format binary_little_endian 1.0",
        "comment generated by scene-recon-kit",
    ]
    if category is not None:
        lines.append(f"comment {CATEGORY_COMMENT} {category}")
    lines.extend(
        [
            f"element vertex {n_vertices}",
            "property float x",
            "property float y",
            "property float z",
        ]
    )
    if n_faces is not None:
        lines.extend(
            [f"element face {n_faces}", "property list uchar int vertex_indices"]
        )
    lines.append("end_header")
    return lines


def save_ply(mesh: TriMesh, path: Path) -> None:
    """
    Write a binary little-endian PLY mesh

    Parameters
    ----------
    mesh : TriMesh
        The mesh
    path : Path
        Output path
    """
    header = "\n".join(_ply_header_lines(mesh.n_vertices, mesh.n_triangles, mesh.category))
    faces = np.zeros(mesh.n_triangles, dtype=[("n", "u1"), ("indices", "<i4", (3,))])
    faces["n"] = 3
    faces["indices"] = mesh.triangles
    with path.open("wb") as f:
        f.write((header + "\n").encode("ascii"))
        f.write(mesh.vertices.astype("<f4").tobytes())
        f.write(faces.tobytes())


def save_points(points: np.ndarray, path: Path) -> None:
    """Write points as a vertex only binary PLY file"""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    header = "\n".join(_ply_header_lines(points.shape[0], None, None))
    with path.open("wb") as f:
        f.write((header + "\n").encode("ascii"))
        f.write(points.astype("<f4").tobytes())


def load_points(path: Path) -> np.ndarray:
    """
    Read the vertices of a PLY file as a point cloud

    Raises
    ------
    MeshFileError
        If the file is not a PLY file with x, y and z vertex properties
    """
    if path.suffix.lower() != ".ply":
        raise MeshFileError(path, "Point clouds must be PLY files")
    _header, columns = read_ply(path)
    return _ply_vertices(path, columns)


def save_mesh(mesh: TriMesh, path: Path) -> None:
    """
    Write a mesh, the format is chosen by the suffix

    Raises
    ------
    InputError
        If the suffix is not .obj or .ply
    """
    suffix = path.suffix.lower()
    if suffix == ".obj":
        save_obj(mesh, path)
    elif suffix == ".ply":
        save_ply(mesh, path)
    else:
        raise InputError(f"Unsupported mesh suffix '{path.suffix}', use {MESH_SUFFIXES}")
    logger.debug(f"Saved {mesh} to {path}")


def load_mesh(path: Path) -> TriMesh:
    """
    Read a mesh, the format is chosen by the suffix

    Raises
    ------
    MeshFileError
        If the suffix is unsupported or the file cannot be read
    """
    suffix = path.suffix.lower()
    if suffix == ".obj":
        return load_obj(path)
    if suffix == ".ply":
        return load_ply(path)
    raise MeshFileError(path, f"Unsupported mesh suffix, use {MESH_SUFFIXES}")
