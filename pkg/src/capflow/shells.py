"""Curved-domain meshes: disks, balls, spherical shells, half balls and
exterior truncations with exactly fitted inner boundaries.

Everything is built by radial extrusion of a cubed-sphere surface
triangulation: layers of scaled copies of the surface are connected by
prisms, each split into three tetrahedra with a facial min-vertex diagonal
rule, which keeps neighbouring prisms conforming.  Fitted features (cavity
spheres, rim circles of flat patches, cube faces) are realized by placing
radial gridlines, or by direction-dependent radial profiles whose layer
zero/end lands exactly on the feature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, MeshError
from .mesh import (CELL_BUDGET, DirichletRegion, SimplicialMesh, graded_line,
                   mesh_from_cells)


# ---------------------------------------------------------------------------
# inner-region descriptors for exterior truncations


@dataclass(frozen=True)
class InnerBall:
    """Solid ball cavity of given radius centered at the origin."""
    radius: float


@dataclass(frozen=True)
class InnerBox:
    """Axis-aligned box cavity centered at the origin."""
    half_widths: tuple[float, ...]


@dataclass(frozen=True)
class FlatDisk:
    """Closed disk of given radius in the hyperplane x3 = 0."""
    radius: float


@dataclass(frozen=True)
class FlatRect:
    """Closed rectangle [-a,a] x [-b,b] in the hyperplane x3 = 0."""
    half_widths: tuple[float, float]


@dataclass(frozen=True)
class HalfBallSet:
    """Closure of the upper half ball of given radius."""
    radius: float


def region_radius(inner) -> float:
    """max |x| over the inner set (the radius r(K))."""
    if isinstance(inner, (InnerBall, FlatDisk, HalfBallSet)):
        return inner.radius
    if isinstance(inner, InnerBox):
        return float(np.linalg.norm(inner.half_widths))
    if isinstance(inner, FlatRect):
        return float(np.linalg.norm(inner.half_widths))
    raise MeshError(f"unknown inner region {inner!r}")


# ---------------------------------------------------------------------------
# cubed-sphere surfaces


def _cube_surface(n: int, half: bool = False):
    """Triangulated surface of [-1,1]^3 with n divisions per edge.

    With ``half`` only the part z >= 0 is kept (n must be even); the
    equator is then resolved by gridlines.  Returns (points, triangles).
    """
    if n < 2:
        raise MeshError("surface resolution must be at least 2")
    if half and n % 2:
        raise MeshError("half surfaces need an even resolution")
    key2id: dict[tuple[int, int, int], int] = {}
    pts: list[np.ndarray] = []

    def vid(key):
        i = key2id.get(key)
        if i is None:
            i = len(pts)
            key2id[key] = i
            pts.append(np.asarray(key, dtype=float) / n)
        return i

    tris: list[tuple[int, int, int]] = []

    def add_quad(a, b, c, d):
        # diagonal through the quad's smallest vertex id keeps shared
        # surfaces consistent between builders
        if min(a, c) <= min(b, d):
            tris.append((a, b, c))
            tris.append((a, c, d))
        else:
            tris.append((b, c, d))
            tris.append((b, d, a))

    lines = list(range(-n, n + 1, 2))
    for axis in range(3):
        for sign in (-1, 1):
            if half and axis == 2 and sign == -1:
                continue
            u_axis, v_axis = [i for i in range(3) if i != axis]
            for iu in range(n):
                for iv in range(n):
                    if half and v_axis == 2 and lines[iv] < 0:
                        continue
                    if half and u_axis == 2 and lines[iu] < 0:
                        continue
                    corners = []
                    for du, dv in ((0, 0), (1, 0), (1, 1), (0, 1)):
                        key = [0, 0, 0]
                        key[axis] = sign * n
                        key[u_axis] = lines[iu + du]
                        key[v_axis] = lines[iv + dv]
                        corners.append(vid(tuple(key)))
                    if sign > 0:
                        add_quad(*corners)
                    else:
                        add_quad(*corners[::-1])
    return np.asarray(pts), np.asarray(tris, dtype=np.int64)


def _sphere_directions(n: int, half: bool = False, extents=None):
    """Unit directions from a cubed-sphere generator.

    ``extents = (neg, pos)`` scales the generator cube per axis and sign
    before normalizing; with extents proportional to the distances from the
    extrusion center to an enclosing box's faces, each surface triangle's
    radial projection lands entirely on one box face, so box boundaries are
    filled exactly.
    """
    pts, tris = _cube_surface(n, half=half)
    if extents is not None:
        neg, pos = (np.asarray(e, dtype=float) for e in extents)
        pts = np.where(pts > 0, pts * pos, pts * neg)
    dirs = pts / np.linalg.norm(pts, axis=1)[:, None]
    return dirs, tris


def _prism_to_tets(b0, b1, b2, t0, t1, t2):
    """Split a prism into three tetrahedra; quad diagonals follow the
    min-vertex rule so angular neighbours agree."""
    b = (b0, b1, b2)
    t = (t0, t1, t2)
    allv = b + t
    k = int(np.argmin(allv))
    if k >= 3:
        b, t = t, b
        k -= 3
    bb = (b[k], b[(k + 1) % 3], b[(k + 2) % 3])
    tt = (t[k], t[(k + 1) % 3], t[(k + 2) % 3])
    v0, v1, v2, v3, v4, v5 = bb[0], bb[1], bb[2], tt[0], tt[1], tt[2]
    if min(v1, v5) < min(v2, v4):
        return [(v0, v1, v2, v5), (v0, v1, v5, v4), (v0, v4, v5, v3)]
    return [(v0, v1, v2, v4), (v0, v4, v2, v5), (v0, v4, v5, v3)]


def _extrude_surface(dirs: np.ndarray, tris: np.ndarray, radii: np.ndarray,
                     center: np.ndarray):
    """Stack scaled surface layers and fill with tetrahedra.

    ``radii`` has shape (L+1,) or (L+1, n_dirs); a first layer of zeros
    collapses to a central vertex fan.
    """
    nd = dirs.shape[0]
    radii = np.asarray(radii, dtype=float)
    if radii.ndim == 1:
        radii = np.repeat(radii[:, None], nd, axis=1)
    fan = bool(np.all(radii[0] == 0.0))
    layers = []
    verts = []
    if fan:
        verts.append(center.copy())
        start = 1
    else:
        start = 0
    for j in range(start, radii.shape[0]):
        base = len(verts)
        layer = center[None, :] + radii[j][:, None] * dirs
        verts.extend(layer)
        layers.append(base)

    cells: list[tuple[int, ...]] = []
    if fan:
        base = layers[0]
        for a, b, c in tris:
            cells.append((0, base + a, base + b, base + c))
    for lo, hi in zip(layers[:-1], layers[1:]):
        for a, b, c in tris:
            cells.extend(_prism_to_tets(lo + a, lo + b, lo + c,
                                        hi + a, hi + b, hi + c))
    return np.asarray(verts), np.asarray(cells, dtype=np.int64)


def _estimate_cells(n_tris: int, n_layers: int) -> None:
    if 3 * n_tris * n_layers > CELL_BUDGET:
        raise BudgetError(
            f"element budget exceeded: ~{3 * n_tris * n_layers} cells > {CELL_BUDGET}",
            "cells")


# ---------------------------------------------------------------------------
# radial schedules


def _geometric_radii(r0: float, r1: float, h0: float, growth: float) -> np.ndarray:
    """Radii from r0 to r1 with first spacing ~h0, geometric growth, both
    endpoints exact."""
    span = r1 - r0
    if span <= 0:
        raise MeshError("outer radius must exceed inner radius")
    if h0 >= span:
        return np.array([r0, r1])
    ts = [0.0]
    h = h0
    while ts[-1] < span:
        ts.append(ts[-1] + h)
        h *= growth
    arr = r0 + np.asarray(ts) * (span / ts[-1])
    arr[0] = r0
    arr[-1] = r1
    return arr


def _box_exit(dirs: np.ndarray, center: np.ndarray, lo: np.ndarray,
              hi: np.ndarray) -> np.ndarray:
    """Distance from center to the box boundary along each direction."""
    t = np.full(dirs.shape[0], np.inf)
    for ax in range(dirs.shape[1]):
        d = dirs[:, ax]
        pos = d > 1e-14
        neg = d < -1e-14
        t[pos] = np.minimum(t[pos], (hi[ax] - center[ax]) / d[pos])
        t[neg] = np.minimum(t[neg], (lo[ax] - center[ax]) / d[neg])
    if not np.all(np.isfinite(t)) or np.any(t <= 0):
        raise MeshError("center must lie inside the box")
    return t


# ---------------------------------------------------------------------------
# geometric facet classifiers


def _tagger(classifiers):
    """classifiers: list of (name, predicate(points (d,dim)) -> bool)."""
    def tag(points):
        for name, pred in classifiers:
            if pred(points):
                return name
        raise MeshError(f"boundary facet near {points.mean(axis=0)} matches no tag")
    return tag


def _on_sphere(center, radius, tol=1e-9):
    c = np.asarray(center, dtype=float)
    def pred(points):
        r = np.linalg.norm(points - c, axis=1)
        return bool(np.all(np.abs(r - radius) <= tol * max(1.0, radius)))
    return pred


def _on_plane(axis, level, tol=1e-9):
    def pred(points):
        return bool(np.all(np.abs(points[:, axis] - level) <= tol))
    return pred


def _on_box(lo, hi, tol=1e-9):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    def pred(points):
        for ax in range(points.shape[1]):
            if np.all(np.abs(points[:, ax] - lo[ax]) <= tol):
                return True
            if np.all(np.abs(points[:, ax] - hi[ax]) <= tol):
                return True
        return False
    return pred


# ---------------------------------------------------------------------------
# 2D disk (onion of ring quads)


def _square_perimeter(n: int) -> np.ndarray:
    """Ordered loop of the (4n) perimeter points of [-1,1]^2 with n
    divisions per side."""
    step = 2.0 / n
    pts = []
    for k in range(n):
        pts.append((-1.0 + k * step, -1.0))
    for k in range(n):
        pts.append((1.0, -1.0 + k * step))
    for k in range(n):
        pts.append((1.0 - k * step, 1.0))
    for k in range(n):
        pts.append((-1.0, 1.0 - k * step))
    return np.asarray(pts)


def _build_disk(radius: float, target_h: float) -> SimplicialMesh:
    n = max(2, math.ceil(2.0 * radius / target_h))
    loop = _square_perimeter(n)
    dirs = loop / np.linalg.norm(loop, axis=1)[:, None]
    m = dirs.shape[0]
    n_layers = max(1, math.ceil(radius / target_h))
    if 2 * m * n_layers > CELL_BUDGET:
        raise BudgetError("element budget exceeded for disk mesh", "cells")
    radii = np.linspace(0.0, radius, n_layers + 1)
    verts = [np.zeros(2)]
    layers = []
    for r in radii[1:]:
        layers.append(len(verts))
        verts.extend(r * dirs)
    cells = []
    base = layers[0]
    for i in range(m):
        cells.append((0, base + i, base + (i + 1) % m))
    for lo, hi in zip(layers[:-1], layers[1:]):
        for i in range(m):
            j = (i + 1) % m
            b0, b1, t0, t1 = lo + i, lo + j, hi + i, hi + j
            if min(b0, t1) <= min(b1, t0):
                cells.append((b0, b1, t1))
                cells.append((b0, t1, t0))
            else:
                cells.append((b0, b1, t0))
                cells.append((b1, t1, t0))
    return mesh_from_cells(2, np.asarray(verts), np.asarray(cells, dtype=np.int64),
                           _tagger([("outer", _on_sphere((0, 0), radius))]))


# ---------------------------------------------------------------------------
# public builders


def build_ball_mesh(dim: int, radius: float, target_h: float) -> SimplicialMesh:
    """Size-quasi-uniform mesh of the disk/ball centered at the origin;
    boundary vertices lie on the sphere to rounding accuracy."""
    if dim not in (2, 3):
        raise MeshError("dim must be 2 or 3")
    if not (0 < target_h < radius):
        raise MeshError("need 0 < target_h < radius")
    if dim == 2:
        return _build_disk(radius, target_h)
    n = max(2, math.ceil(2.0 * radius / target_h))
    dirs, tris = _sphere_directions(n)
    n_layers = max(1, math.ceil(radius / target_h))
    _estimate_cells(len(tris), n_layers)
    radii = np.linspace(0.0, radius, n_layers + 1)
    verts, cells = _extrude_surface(dirs, tris, radii, np.zeros(3))
    return mesh_from_cells(3, verts, cells,
                           _tagger([("outer", _on_sphere((0, 0, 0), radius))]))


def build_half_ball_mesh(radius: float, target_h: float,
                         rim_radius: float | None = None,
                         rim_h: float | None = None,
                         angular: int | None = None) -> SimplicialMesh:
    """Solid upper half ball with the flat boundary in the plane x3 = 0.

    With ``rim_radius`` a radial gridline is placed exactly at that radius
    and the layer spacing clusters toward it from both sides, so the flat
    disk |x'| <= rim_radius is resolved by facets (used for capacitary
    plates and Dirichlet caps).
    """
    if not (0 < target_h < radius):
        raise MeshError("need 0 < target_h < radius")
    n = angular or max(4, math.ceil(2.0 * radius / target_h))
    n += n % 2
    dirs, tris = _sphere_directions(n, half=True)
    if rim_radius is None:
        n_layers = max(1, math.ceil(radius / target_h))
        radii = np.linspace(0.0, radius, n_layers + 1)
    else:
        a = rim_radius
        if not (0 < a < radius):
            raise MeshError("rim_radius must lie strictly inside the ball")
        delta = rim_h if rim_h is not None else max(a * 2.0 / n, a / 16)
        inner = graded_line(0.0, a, max(a / 4, delta), delta, 1.5)
        outer = _clustered_out(a, radius, delta, 2.0 * radius / n)
        radii = np.concatenate([inner, outer[1:]])
    _estimate_cells(len(tris), len(radii) - 1)
    verts, cells = _extrude_surface(dirs, tris, radii, np.zeros(3))
    return mesh_from_cells(3, verts, cells, _tagger([
        ("outer", _on_sphere((0, 0, 0), radius)),
        ("symmetry", _on_plane(2, 0.0)),
    ]))


def _clustered_out(r0: float, r1: float, h0: float, h1: float,
                   growth: float = 1.5) -> np.ndarray:
    """Radii from r0 to r1 starting at spacing h0 and growing toward ~h1."""
    ts = [r0]
    h = h0
    while ts[-1] + h < r1 - 0.5 * h:
        ts.append(ts[-1] + h)
        h = min(h * growth, h1)
    ts.append(r1)
    return np.asarray(ts)


def build_annular_mesh(inner, outer_radius: float, target_h: float,
                       half: bool = False, dim: int = 3,
                       angular: int | None = None) -> SimplicialMesh:
    """Truncated exterior domain between an inner region and the sphere of
    ``outer_radius`` (intersected with the upper half space when ``half``).

    Facets are tagged "inner" (on the inner region boundary), "outer" (on
    the truncation sphere) and "symmetry" (on the flat plane, half only).
    A flat disk inner region yields the solid half ball with the disk
    resolved in the flat boundary.
    """
    if dim != 3:
        raise MeshError("annular meshes are 3D only")
    r_char = region_radius(inner)
    if r_char > outer_radius / 2:
        raise MeshError("inner region must fit inside half of the outer ball")
    if target_h >= outer_radius:
        raise MeshError("target_h too large")

    if isinstance(inner, FlatDisk):
        if not half:
            raise MeshError("flat disks need the half-space truncation")
        mesh = build_half_ball_mesh(outer_radius, target_h,
                                    rim_radius=inner.radius, angular=angular)
        return _retag_flat_disk(mesh, inner.radius)
    if isinstance(inner, FlatRect):
        if not half:
            raise MeshError("flat patches need the half-space truncation")
        return _build_patch_dome(inner.half_widths, outer_radius, target_h,
                                 angular=angular)

    n = angular or max(6, math.ceil(5.0 * r_char / target_h))
    n += n % 2
    if isinstance(inner, HalfBallSet):
        if not half:
            raise MeshError("half-ball inner sets need the half-space truncation")
        dirs, tris = _sphere_directions(n, half=True)
        alpha = 2.0 / n
        radii = _geometric_radii(inner.radius, outer_radius,
                                 inner.radius * alpha, 1.0 + alpha)
        _estimate_cells(len(tris), len(radii) - 1)
        verts, cells = _extrude_surface(dirs, tris, radii, np.zeros(3))
        return mesh_from_cells(3, verts, cells, _tagger([
            ("inner", _on_sphere((0, 0, 0), inner.radius)),
            ("outer", _on_sphere((0, 0, 0), outer_radius)),
            ("symmetry", _on_plane(2, 0.0)),
        ]))
    if isinstance(inner, InnerBall):
        dirs, tris = _sphere_directions(n, half=half)
        alpha = 2.0 / n
        radii = _geometric_radii(inner.radius, outer_radius,
                                 inner.radius * alpha, 1.0 + alpha)
        _estimate_cells(len(tris), len(radii) - 1)
        verts, cells = _extrude_surface(dirs, tris, radii, np.zeros(3))
        classifiers = [("inner", _on_sphere((0, 0, 0), inner.radius)),
                       ("outer", _on_sphere((0, 0, 0), outer_radius))]
        if half:
            classifiers.append(("symmetry", _on_plane(2, 0.0)))
        return mesh_from_cells(3, verts, cells, _tagger(classifiers))
    if isinstance(inner, InnerBox):
        if half:
            raise MeshError("box cavities are supported in full space only")
        hw = np.asarray(inner.half_widths, dtype=float)
        dirs, tris = _sphere_directions(n)
        rho_in = _box_exit(dirs, np.zeros(3), -hw, hw)
        alpha = 2.0 / n
        ref = _geometric_radii(float(rho_in.min()), outer_radius,
                               float(rho_in.min()) * alpha, 1.0 + alpha)
        s = (ref - ref[0]) / (ref[-1] - ref[0])
        radii = rho_in[None, :] + s[:, None] * (outer_radius - rho_in[None, :])
        _estimate_cells(len(tris), len(s) - 1)
        verts, cells = _extrude_surface(dirs, tris, radii, np.zeros(3))
        return mesh_from_cells(3, verts, cells, _tagger([
            ("inner", _on_box(-hw, hw)),
            ("outer", _on_sphere((0, 0, 0), outer_radius)),
        ]))
    raise MeshError(f"unsupported inner region {inner!r}")


def _retag_flat_disk(mesh: SimplicialMesh, radius: float) -> SimplicialMesh:
    """Retag the flat facets inside the rim circle as "inner"."""
    tags = list(mesh.facet_tags)
    hit = 0
    for fi, tag in enumerate(tags):
        if tag != "symmetry":
            continue
        pts = mesh.vertices[mesh.boundary_facets[fi]]
        if np.all(np.linalg.norm(pts[:, :2], axis=1) <= radius * (1 + 1e-9)):
            tags[fi] = "inner"
            hit += 1
    if hit == 0:
        raise MeshError("flat disk not resolved by the mesh")
    return SimplicialMesh(mesh.dim, mesh.vertices, mesh.cells,
                          mesh.boundary_facets, tuple(tags))


def _build_patch_dome(half_widths, outer_radius: float, target_h: float,
                      angular: int | None = None) -> SimplicialMesh:
    """Half ball of ``outer_radius`` whose flat boundary resolves the
    rectangle [-a,a] x [-b,b]: a graded tensor half-box core around the
    patch, extruded radially out to the hemisphere."""
    a, b = half_widths
    s = 2.0 * max(a, b)
    if s > outer_radius / 2:
        raise MeshError("patch too large for the truncation radius")
    n = angular or max(8, math.ceil(5.0 * max(a, b) / target_h))
    fine = min(a, b) / max(4, n / 4)
    coarse = s / 4

    def patch_axis(w):
        left = graded_line(-s, -w, coarse, fine, 1.5)
        mid = graded_line(-w, w, fine, fine, 1.5)
        right = graded_line(w, s, fine, coarse, 1.5)
        return np.unique(np.concatenate([left, mid, right]))

    xs = patch_axis(a)
    ys = patch_axis(b)
    zs = graded_line(0.0, s, fine, coarse, 1.5)
    from .mesh import build_tensor_mesh
    core = build_tensor_mesh([xs, ys, zs])

    # exposed core surface: boundary faces not on the flat plane z=0
    faces = core.boundary_facets
    keep = []
    for f in faces:
        if not np.all(np.abs(core.vertices[f][:, 2]) <= 1e-12):
            keep.append(f)
    keep = np.asarray(keep, dtype=np.int64)
    surf_ids = np.unique(keep.ravel())
    local = {int(g): i for i, g in enumerate(surf_ids)}
    surf_pts = core.vertices[surf_ids]
    dirs = surf_pts / np.linalg.norm(surf_pts, axis=1)[:, None]

    h_surf = coarse
    ref = _geometric_radii(s, outer_radius, h_surf, 1.4)
    t = (ref - s) / (outer_radius - s)
    verts = [v for v in core.vertices]
    layer_ids = []
    sphere_pts = outer_radius * dirs
    for tj in t[1:]:
        base = len(verts)
        layer = (1 - tj) * surf_pts + tj * sphere_pts
        verts.extend(layer)
        layer_ids.append(base)
    cells = [tuple(int(v) for v in c) for c in core.cells]
    prev = [int(g) for g in surf_ids]
    for base in layer_ids:
        for f in keep:
            l0, l1, l2 = (local[int(v)] for v in f)
            cells.extend(_prism_to_tets(prev[l0], prev[l1], prev[l2],
                                        base + l0, base + l1, base + l2))
        prev = [base + i for i in range(len(surf_ids))]
        if len(cells) > CELL_BUDGET:
            raise BudgetError("element budget exceeded for patch dome", "cells")
    return mesh_from_cells(3, np.asarray(verts), np.asarray(cells, dtype=np.int64),
                           _tagger([
                               ("outer", _on_sphere((0, 0, 0), outer_radius)),
                               ("symmetry", _on_plane(2, 0.0)),
                           ]))


def build_plate_ball_mesh(plate_radius: float, outer_radius: float,
                          target_h: float, angular: int | None = None
                          ) -> tuple[SimplicialMesh, DirichletRegion]:
    """Full ball of ``outer_radius`` with the flat disk |x'| <= plate_radius,
    x3 = 0 resolved by internal facets: the mirror image of the fitted half
    ball.  Returns the mesh and the vertex-only plate region."""
    half = build_half_ball_mesh(outer_radius, target_h,
                                rim_radius=plate_radius, angular=angular)
    v = half.vertices
    upper = v[:, 2] > 1e-13
    map_new = -np.ones(half.n_vertices, dtype=np.int64)
    extra = []
    for i in np.flatnonzero(upper):
        map_new[i] = half.n_vertices + len(extra)
        extra.append(v[i] * np.array([1.0, 1.0, -1.0]))
    map_new[~upper] = np.flatnonzero(~upper)
    verts = np.vstack([v, np.asarray(extra)])
    mirrored = map_new[half.cells]
    cells = np.vstack([half.cells, mirrored])
    mesh = mesh_from_cells(3, verts, cells,
                           _tagger([("outer", _on_sphere((0, 0, 0), outer_radius))]))
    flat = np.abs(mesh.vertices[:, 2]) <= 1e-13
    near = np.linalg.norm(mesh.vertices[:, :2], axis=1) <= plate_radius * (1 + 1e-9)
    region = DirichletRegion.from_vertices("inner", np.flatnonzero(flat & near))
    return mesh, region


def build_cavity_box_mesh(cavity_radius: float, center=(0.5, 0.5, 0.5),
                          angular: int = 12, box_lo=(0.0, 0.0, 0.0),
                          box_hi=(1.0, 1.0, 1.0)) -> SimplicialMesh:
    """Unit(-like) box with a spherical cavity: radial onion from the exact
    cavity sphere out to the box faces (cavity tagged "inner", box faces
    "outer").  The box is star shaped about the center, so the outer layer
    lands exactly on its faces."""
    c = np.asarray(center, dtype=float)
    lo = np.asarray(box_lo, dtype=float)
    hi = np.asarray(box_hi, dtype=float)
    margin = min(float((hi - c).min()), float((c - lo).min()))
    if cavity_radius >= margin:
        raise MeshError("cavity must fit strictly inside the box")
    n = angular + angular % 2
    dirs, tris = _sphere_directions(n, extents=(c - lo, hi - c))
    rho_out = _box_exit(dirs, c, lo, hi)
    alpha = 2.0 / n
    ref = _geometric_radii(cavity_radius, float(rho_out.min()),
                           cavity_radius * alpha, 1.0 + alpha)
    s = (ref - ref[0]) / (ref[-1] - ref[0])
    radii = cavity_radius + s[:, None] * (rho_out[None, :] - cavity_radius)
    _estimate_cells(len(tris), len(s) - 1)
    verts, cells = _extrude_surface(dirs, tris, radii, c)
    return mesh_from_cells(3, verts, cells, _tagger([
        ("inner", _on_sphere(c, cavity_radius)),
        ("outer", _on_box(lo, hi)),
    ]))


def build_face_cap_box_mesh(cap_radius: float, face_center=(0.5, 0.5, 0.0),
                            angular: int = 12, box_lo=(0.0, 0.0, 0.0),
                            box_hi=(1.0, 1.0, 1.0)) -> SimplicialMesh:
    """Box meshed as a half onion around a point on its face x3 = box_lo[2],
    with a radial gridline at ``cap_radius``: the spherical cap
    B(center, cap_radius) on the face is resolved exactly (tag it via a
    BoundaryBall descriptor).  Face facets are tagged "face", the remaining
    box boundary "outer"."""
    c = np.asarray(face_center, dtype=float)
    lo = np.asarray(box_lo, dtype=float)
    hi = np.asarray(box_hi, dtype=float)
    if abs(c[2] - lo[2]) > 1e-14:
        raise MeshError("face center must lie on the face x3 = box_lo[2]")
    n = angular + angular % 2
    neg = np.where(c - lo > 0, c - lo, 1.0)
    dirs, tris = _sphere_directions(n, half=True, extents=(neg, hi - c))
    rho_out = _box_exit(dirs, c, lo, hi)
    ref_out = float(rho_out.min())
    if cap_radius >= ref_out / 2:
        raise MeshError("cap too large for the box")
    alpha = 2.0 / n
    inner = graded_line(0.0, cap_radius, max(cap_radius / 3, cap_radius * alpha),
                        cap_radius * alpha, 1.5)
    ref = _geometric_radii(cap_radius, ref_out, cap_radius * alpha, 1.0 + alpha)
    s = (ref - ref[0]) / (ref[-1] - ref[0])
    outer = cap_radius + s[:, None] * (rho_out[None, :] - cap_radius)
    inner_mat = np.repeat(inner[:, None], dirs.shape[0], axis=1)
    radii = np.vstack([inner_mat, outer[1:]])
    _estimate_cells(len(tris), radii.shape[0] - 1)
    verts, cells = _extrude_surface(dirs, tris, radii, c)
    return mesh_from_cells(3, verts, cells, _tagger([
        ("face", _on_plane(2, lo[2])),
        ("outer", _on_box(lo, hi)),
    ]))
