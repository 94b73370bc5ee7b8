"""Triangle meshes: procedural primitives, OBJ loading, raw arrays, and the
per-mesh bounding volume hierarchy (binned SAH) used for ray traversal."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, MeshParseError

# SAH build parameters; fixed so builds are deterministic.
SAH_BINS = 16
MAX_LEAF_TRIS = 4
TRAVERSAL_COST = 1.0
INTERSECT_COST = 1.5
MAX_DEPTH = 64


@dataclass
class Mesh:
    """Indexed triangle soup with per-vertex normals and uvs.

    Degenerate (zero-area) triangles are dropped on construction and counted
    in ``degenerate_dropped``. Missing normals are computed as area-weighted
    averages of adjacent face normals.
    """

    positions: np.ndarray
    indices: np.ndarray
    normals: np.ndarray | None = None
    uvs: np.ndarray | None = None
    degenerate_dropped: int = 0
    warning_count: int = 0

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64).reshape(-1, 3)
        nv = len(self.positions)
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= nv):
            bad = int(self.indices.max() if self.indices.max() >= nv else self.indices.min())
            raise GeometryError(f"triangle index {bad} out of range for {nv} vertices")
        # Drop degenerate triangles (area below 1e-12).
        if len(self.indices):
            v0 = self.positions[self.indices[:, 0]]
            e1 = self.positions[self.indices[:, 1]] - v0
            e2 = self.positions[self.indices[:, 2]] - v0
            areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
            keep = areas > 1e-12
            self.degenerate_dropped = int(np.count_nonzero(~keep))
            self.indices = self.indices[keep]
        if self.normals is not None:
            self.normals = np.ascontiguousarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if len(self.normals) != nv:
                raise GeometryError("normal count does not match vertex count")
        else:
            self.normals = compute_vertex_normals(self.positions, self.indices)
        if self.uvs is not None:
            self.uvs = np.ascontiguousarray(self.uvs, dtype=np.float64).reshape(-1, 2)
            if len(self.uvs) != nv:
                raise GeometryError("uv count does not match vertex count")
        self.has_uvs = self.uvs is not None
        if self.uvs is None:
            self.uvs = np.zeros((nv, 2))

    @property
    def triangle_count(self):
        return len(self.indices)

    def local_aabb(self):
        if not len(self.positions):
            return np.zeros(3), np.zeros(3)
        return self.positions.min(axis=0), self.positions.max(axis=0)

    def surface_area(self):
        v0 = self.positions[self.indices[:, 0]]
        e1 = self.positions[self.indices[:, 1]] - v0
        e2 = self.positions[self.indices[:, 2]] - v0
        return float(0.5 * np.linalg.norm(np.cross(e1, e2), axis=1).sum())


def compute_vertex_normals(positions, indices):
    """Area-weighted average of adjacent face normals, unit length."""
    normals = np.zeros_like(positions)
    if len(indices):
        v0 = positions[indices[:, 0]]
        face = np.cross(positions[indices[:, 1]] - v0, positions[indices[:, 2]] - v0)
        for k in range(3):
            np.add.at(normals, indices[:, k], face)
    lens = np.linalg.norm(normals, axis=1)
    ok = lens > 1e-20
    normals[ok] /= lens[ok, None]
    normals[~ok] = (0.0, 0.0, 1.0)
    return normals


# ---------------------------------------------------------------------------
# Procedural primitives

def create_sphere(radius=1.0, segments=32):
    """Lat-long sphere; UVs wrap longitude into u and latitude into v."""
    if radius <= 0.0:
        raise GeometryError("sphere radius must be > 0")
    if segments < 3:
        raise GeometryError("sphere needs at least 3 segments")
    stacks = max(2, segments // 2)
    phis = np.linspace(0.0, 2.0 * np.pi, segments + 1)
    thetas = np.linspace(0.0, np.pi, stacks + 1)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    x = np.sin(tt) * np.cos(pp)
    y = np.sin(tt) * np.sin(pp)
    z = np.cos(tt)
    pos = radius * np.stack([x, y, z], axis=-1).reshape(-1, 3)
    nrm = np.stack([x, y, z], axis=-1).reshape(-1, 3)
    uv = np.stack([pp / (2.0 * np.pi), tt / np.pi], axis=-1).reshape(-1, 2)
    idx = []
    w = segments + 1
    for i in range(stacks):
        for j in range(segments):
            a = i * w + j
            b = a + 1
            c = a + w
            d = c + 1
            if i > 0:
                idx.append((a, c, b))
            if i < stacks - 1:
                idx.append((b, c, d))
    return Mesh(pos, np.array(idx, dtype=np.int64), normals=nrm, uvs=uv)


def create_box(size=(1.0, 1.0, 1.0)):
    """Axis-aligned box centered at the origin; 24 vertices, 12 triangles."""
    size = np.broadcast_to(np.asarray(size, dtype=np.float64), (3,))
    if np.any(size <= 0.0):
        raise GeometryError("box dimensions must be > 0")
    h = size / 2.0
    pos, nrm, uv, idx = [], [], [], []
    # (axis, sign) per face; the two remaining axes span the face.
    for axis in range(3):
        for sign in (1.0, -1.0):
            u_axis = (axis + 1) % 3
            v_axis = (axis + 2) % 3
            base = len(pos)
            for du, dv in ((0, 0), (1, 0), (1, 1), (0, 1)):
                p = np.zeros(3)
                p[axis] = sign * h[axis]
                p[u_axis] = (du - 0.5) * size[u_axis] * sign
                p[v_axis] = (dv - 0.5) * size[v_axis]
                pos.append(p)
                n = np.zeros(3)
                n[axis] = sign
                nrm.append(n)
                uv.append((du, dv))
            idx.append((base, base + 1, base + 2))
            idx.append((base, base + 2, base + 3))
    return Mesh(np.array(pos), np.array(idx, dtype=np.int64),
                normals=np.array(nrm), uvs=np.array(uv, dtype=np.float64))


def create_plane(size=(1.0, 1.0)):
    """Quad in the z=0 plane facing +z, uv spanning [0,1]^2."""
    size = np.broadcast_to(np.asarray(size, dtype=np.float64), (2,))
    if np.any(size <= 0.0):
        raise GeometryError("plane dimensions must be > 0")
    hx, hy = size / 2.0
    pos = np.array([[-hx, -hy, 0.0], [hx, -hy, 0.0], [hx, hy, 0.0], [-hx, hy, 0.0]])
    nrm = np.tile([0.0, 0.0, 1.0], (4, 1))
    uv = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    idx = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    return Mesh(pos, idx, normals=nrm, uvs=uv)


def mesh_from_arrays(positions, indices, normals=None, uvs=None):
    """Mesh from raw arrays; same validation as the OBJ loader."""
    return Mesh(np.asarray(positions, dtype=np.float64),
                np.asarray(indices, dtype=np.int64),
                normals=None if normals is None else np.asarray(normals, dtype=np.float64),
                uvs=None if uvs is None else np.asarray(uvs, dtype=np.float64))


# ---------------------------------------------------------------------------
# OBJ loading

def load_obj(path):
    """Wavefront OBJ subset: v/vn/vt/f with negative indices and fan
    triangulation; mtllib/usemtl and other statements are skipped (counted)."""
    positions, normals, uvs = [], [], []
    faces = []  # list of (line_no, [(vi, ti, ni), ...])
    skipped = 0
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            try:
                if tag == "v":
                    positions.append([float(x) for x in parts[1:4]])
                elif tag == "vn":
                    normals.append([float(x) for x in parts[1:4]])
                elif tag == "vt":
                    uvs.append([float(x) for x in parts[1:3]])
                elif tag == "f":
                    corners = []
                    for token in parts[1:]:
                        fields = token.split("/")
                        vi = int(fields[0])
                        ti = int(fields[1]) if len(fields) > 1 and fields[1] else 0
                        ni = int(fields[2]) if len(fields) > 2 and fields[2] else 0
                        corners.append((vi, ti, ni))
                    if len(corners) < 3:
                        raise MeshParseError(f"{path}:{line_no}: face with fewer than 3 vertices")
                    faces.append((line_no, corners))
                else:
                    skipped += 1
            except MeshParseError:
                raise
            except (ValueError, IndexError) as exc:
                raise MeshParseError(f"{path}:{line_no}: cannot parse '{line}'") from exc

    def resolve(i, count, line_no, what):
        if i == 0:
            return -1
        j = i - 1 if i > 0 else count + i
        if j < 0 or j >= count:
            raise MeshParseError(f"{path}:{line_no}: {what} index {i} out of range (count {count})")
        return j

    out_pos, out_nrm, out_uv, out_idx = [], [], [], []
    vertex_cache = {}
    any_normal = False
    any_uv = False
    for line_no, corners in faces:
        resolved = []
        for vi, ti, ni in corners:
            key = (resolve(vi, len(positions), line_no, "vertex"),
                   resolve(ti, len(uvs), line_no, "texture"),
                   resolve(ni, len(normals), line_no, "normal"))
            if key not in vertex_cache:
                vertex_cache[key] = len(out_pos)
                out_pos.append(positions[key[0]])
                out_uv.append(uvs[key[1]] if key[1] >= 0 else [0.0, 0.0])
                out_nrm.append(normals[key[2]] if key[2] >= 0 else [0.0, 0.0, 0.0])
            if key[1] >= 0:
                any_uv = True
            if key[2] >= 0:
                any_normal = True
            resolved.append(vertex_cache[key])
        for k in range(1, len(resolved) - 1):  # fan triangulation
            out_idx.append((resolved[0], resolved[k], resolved[k + 1]))
    if not out_idx:
        raise MeshParseError(f"{path}: no faces found")
    mesh = Mesh(np.array(out_pos), np.array(out_idx, dtype=np.int64),
                normals=np.array(out_nrm) if any_normal else None,
                uvs=np.array(out_uv) if any_uv else None)
    mesh.warning_count = skipped
    if any_normal:
        # Fill in zero normals (corners lacking vn) from the geometry.
        lens = np.linalg.norm(mesh.normals, axis=1)
        if np.any(lens < 1e-12):
            computed = compute_vertex_normals(mesh.positions, mesh.indices)
            bad = lens < 1e-12
            mesh.normals[bad] = computed[bad]
        else:
            mesh.normals /= lens[:, None]
    return mesh


# ---------------------------------------------------------------------------
# BLAS: binned SAH BVH over a mesh's triangles

@dataclass
class BLAS:
    """Flattened BVH. meta rows are (first, count, 1) for leaves holding the
    permuted primitive range, or (left, right, 0) for inner nodes."""

    bounds: np.ndarray  # (n, 6) min xyz, max xyz
    meta: np.ndarray    # (n, 3) int32
    prim_order: np.ndarray  # permutation into the mesh's triangle array
    mesh: Mesh = field(repr=False, default=None)


def _aabb_area(lo, hi):
    d = np.maximum(hi - lo, 0.0)
    return 2.0 * (d[0] * d[1] + d[1] * d[2] + d[2] * d[0])


def build_blas(mesh: Mesh) -> BLAS:
    n = mesh.triangle_count
    if n == 0:
        raise GeometryError("cannot build BVH for empty mesh")
    tris = mesh.positions[mesh.indices]          # (n, 3, 3)
    bounds, meta, order = build_bvh_over_aabbs(tris.min(axis=1), tris.max(axis=1))
    return BLAS(bounds=bounds, meta=meta, prim_order=order, mesh=mesh)


def build_bvh_over_aabbs(prim_lo, prim_hi):
    """Binned-SAH BVH over arbitrary primitive boxes; also serves as the
    top-level build over instance world AABBs.

    Returns (bounds (n,6) float64, meta (n,3) int32, primitive order)."""
    prim_lo = np.asarray(prim_lo, dtype=np.float64).reshape(-1, 3)
    prim_hi = np.asarray(prim_hi, dtype=np.float64).reshape(-1, 3)
    n = len(prim_lo)
    if n == 0:
        raise GeometryError("cannot build BVH with no primitives")
    centroids = (prim_lo + prim_hi) * 0.5

    order = np.arange(n, dtype=np.int64)
    bounds_list = []
    meta_list = []

    def new_node():
        bounds_list.append(np.zeros(6))
        meta_list.append([0, 0, 0])
        return len(meta_list) - 1

    # Iterative build; stack entries are (node_index, start, end, depth).
    root = new_node()
    stack = [(root, 0, n, 0)]
    while stack:
        node, start, end, depth = stack.pop()
        ids = order[start:end]
        lo = prim_lo[ids].min(axis=0)
        hi = prim_hi[ids].max(axis=0)
        bounds_list[node][:3] = lo
        bounds_list[node][3:] = hi
        count = end - start
        if count <= MAX_LEAF_TRIS or depth >= MAX_DEPTH:
            split = None
        else:
            split = _find_sah_split(centroids, prim_lo, prim_hi, ids, lo, hi, count)
        if split is None and count > MAX_LEAF_TRIS and depth < MAX_DEPTH:
            # Degenerate centroid spread: median split keeps depth bounded.
            axis = int(np.argmax(hi - lo))
            key = centroids[ids][:, axis]
            perm = np.argsort(key, kind="stable")
            order[start:end] = ids[perm]
            mid = start + count // 2
            split = ("median", mid)
        if split is None:
            meta_list[node] = [start, count, 1]
            continue
        if split[0] == "sah":
            _, axis, threshold = split
            key = centroids[ids][:, axis]
            left_mask = key < threshold
            perm = np.argsort(~left_mask, kind="stable")
            order[start:end] = ids[perm]
            mid = start + int(np.count_nonzero(left_mask))
        else:
            mid = split[1]
        left = new_node()
        right = new_node()
        meta_list[node] = [left, right, 0]
        stack.append((right, mid, end, depth + 1))
        stack.append((left, start, mid, depth + 1))

    return (np.ascontiguousarray(bounds_list, dtype=np.float64),
            np.ascontiguousarray(meta_list, dtype=np.int32),
            order)


def _find_sah_split(centroids, prim_lo, prim_hi, ids, node_lo, node_hi, count):
    """Best binned-SAH split, or None when a leaf is cheaper."""
    c = centroids[ids]
    best = None
    leaf_cost = INTERSECT_COST * count
    parent_area = _aabb_area(node_lo, node_hi)
    if parent_area <= 0.0:
        return None
    for axis in range(3):
        cmin = c[:, axis].min()
        cmax = c[:, axis].max()
        if cmax - cmin < 1e-12:
            continue
        scale = SAH_BINS / (cmax - cmin)
        bin_ids = np.minimum(((c[:, axis] - cmin) * scale).astype(np.int64), SAH_BINS - 1)
        bin_counts = np.bincount(bin_ids, minlength=SAH_BINS)
        bin_lo = np.full((SAH_BINS, 3), np.inf)
        bin_hi = np.full((SAH_BINS, 3), -np.inf)
        for k in range(3):
            np.minimum.at(bin_lo[:, k], bin_ids, prim_lo[ids][:, k])
            np.maximum.at(bin_hi[:, k], bin_ids, prim_hi[ids][:, k])
        # Prefix/suffix sweeps.
        left_counts = np.cumsum(bin_counts)[:-1]
        right_counts = count - left_counts
        lo_acc = np.minimum.accumulate(bin_lo, axis=0)
        hi_acc = np.maximum.accumulate(bin_hi, axis=0)
        lo_racc = np.minimum.accumulate(bin_lo[::-1], axis=0)[::-1]
        hi_racc = np.maximum.accumulate(bin_hi[::-1], axis=0)[::-1]
        for b in range(SAH_BINS - 1):
            nl, nr = left_counts[b], right_counts[b]
            if nl == 0 or nr == 0:
                continue
            area_l = _aabb_area(lo_acc[b], hi_acc[b])
            area_r = _aabb_area(lo_racc[b + 1], hi_racc[b + 1])
            cost = TRAVERSAL_COST + INTERSECT_COST * (area_l * nl + area_r * nr) / parent_area
            if best is None or cost < best[0]:
                threshold = cmin + (b + 1) / scale
                best = (cost, axis, threshold)
    if best is None or best[0] >= leaf_cost:
        return None
    return ("sah", best[1], best[2])
