"""Topological and symplectic invariants read off a base diagram.

Euler characteristic, symplectic volume, edge-sphere data (affine length,
area, self-intersection, first-Chern pairing), boundary-torus
self-intersection, the intersection matrix of a closed toric diagram and
first homology of disk bases.

Units: volumes are rational multiples of pi^2, areas rational multiples of
2*pi; both are returned as bare Fractions.
"""

from dataclasses import dataclass
from fractions import Fraction

from . import geometry as geo
from .diagram import (
    REDUCED,
    REGULAR,
    _slit_crossing_matrix,
    component_loop_matrix,
    is_identified,
    smooth_components,
    transport_class,
    validate,
)
from .lattice import AbelianGroup, cokernel, cross, sub, turn


class InvariantError(ValueError):
    pass


def euler_characteristic(d):
    """Vertex count plus total node multiplicity."""
    return d.vertex_count() + d.node_total()


def symplectic_volume(d):
    """Total volume as a multiple of pi^2 (8 pi^2 times the chart area)."""
    area2 = sum(abs(geo.polygon_area2(d.cycle_points(ci))) for ci in range(len(d.cycles)))
    # wedge sectors are already absent from the outline, so this is the
    # honest area of the unfolded base
    return 4 * Fraction(area2)


def affine_length(edge):
    return edge.affine_length()


def edge_area(d, ref):
    """Area of the sphere/disk over a reduced edge, as a multiple of 2*pi."""
    e = _edge(d, ref)
    if e.marking != REDUCED:
        raise InvariantError("edge %r is not reduced" % (ref,))
    return e.affine_length()


def _edge(d, ref):
    ci, ei = ref
    return d.cycles[ci][ei]


def edge_self_intersection(d, ref):
    """Self-intersection of the sphere over a reduced edge.

    Both endpoints must be corners joining reduced edges (vertices or dots);
    the two adjacent collapsing (normal) vectors are compared after
    transporting the incoming one across any cuts landing on the edge.
    """
    ci, ei = ref
    cycle = d.cycles[ci]
    e = cycle[ei]
    if e.marking != REDUCED:
        raise InvariantError("edge %r is not reduced" % (ref,))
    prev = cycle[ei - 1]
    nxt = cycle[(ei + 1) % len(cycle)]
    if prev.marking != REDUCED or nxt.marking != REDUCED:
        raise InvariantError("edge endpoints are not vertices of the 0-stratum")
    n = prev.inward_normal()
    for t, m in _cuts_along_edge(d, e):
        n = m.apply(n)
    return cross(n, nxt.inward_normal())


def _cuts_along_edge(d, e):
    out = []
    for node in d.nodes:
        if len(node.cut) != 2:
            continue
        end = node.cut[-1]
        if geo.strictly_between(end, e.start, e.end):
            t = geo._param(e.start, e.end, end)
            out.append((t, _slit_crossing_matrix(node, sub(e.end, e.start))))
    return sorted(out, key=lambda x: x[0])


def boundary_torus_self_intersection(d, ref):
    """Self-intersection of the torus over a smooth closed reduced circle.

    The inward collapsing vector of the given edge is parallel-transported
    once around the circle, clockwise (= stored cycle order); the answer is
    cross(v, v').
    """
    comp = _component_of(d, ref)
    if not comp["closed"]:
        raise InvariantError("the reduced component through %r has vertices" % (ref,))
    order = [r for r, _ in comp["edges"]]
    k = order.index(tuple(ref))
    comp = {"edges": comp["edges"][k:] + comp["edges"][:k], "closed": True}
    u = component_loop_matrix(d, comp)
    v = _edge(d, ref).inward_normal()
    return cross(v, u.apply(v))


def _component_of(d, ref):
    ref = tuple(ref)
    for comp in smooth_components(d):
        if ref in [r for r, _ in comp["edges"]]:
            return comp
    raise InvariantError("no reduced component through %r" % (ref,))


def _closed_toric_cycle(d):
    if len(d.cycles) != 1 or d.nodes or d.gluings or d.surface is not None:
        raise InvariantError("not a closed toric diagram")
    cycle = d.cycles[0]
    if any(e.marking != REDUCED for e in cycle):
        raise InvariantError("not a closed toric diagram (boundary not all reduced)")
    return cycle


def c1_pairing(d, ref):
    """<c1, [S_j]> = self-intersection + 2 for an edge of a closed toric base."""
    _closed_toric_cycle(d)
    return edge_self_intersection(d, ref) + 2


def edge_intersection_matrix(d):
    """Intersection matrix of the edge spheres of a closed toric diagram."""
    cycle = _closed_toric_cycle(d)
    n = len(cycle)
    out = [[0] * n for _ in range(n)]
    for i in range(n):
        out[i][i] = edge_self_intersection(d, (0, i))
        out[i][(i + 1) % n] = 1
        out[(i + 1) % n][i] = 1
    return out


def first_homology(d, basepoint=None):
    """H_1 of the total space over a disk base, by the collapsing/vanishing
    relation matrix (cokernel through Smith normal form).

    One column per smooth reduced component (its inward collapsing vector)
    and one per node (its vanishing vector, the eigen direction rotated a
    quarter turn), all transported to a common interior basepoint.  Sector
    cuts are fine; any other identified edges disqualify the base.
    """
    wedge_keys = set(d.wedge_ids())
    for ref, e in d.edges():
        if is_identified(e.marking) and e.marking[1] not in wedge_keys:
            raise InvariantError("base is not a disk (identified boundary)")
    if len(d.cycles) != 1:
        raise InvariantError("base is not a single disk chart")
    base = basepoint if basepoint is not None else _interior_basepoint(d)
    columns = []
    for comp in smooth_components(d):
        ref, e = comp["edges"][0]
        mid = ((e.start[0] + e.end[0]) / 2, (e.start[1] + e.end[1]) / 2)
        v = transport_class(e.inward_normal(), [mid, base], d)
        columns.append(v)
    for node in d.nodes:
        v = turn(node.eigen)
        columns.append(transport_class(v, [node.pos, base], d))
    return cokernel(columns, rank=2)


def _interior_basepoint(d):
    pts = d.cycle_points(0)
    n = len(pts)
    cx = sum(p[0] for p in pts) / n
    cy = sum(p[1] for p in pts) / n
    jiggles = [
        (Fraction(0), Fraction(0)),
        (Fraction(1, 7), Fraction(1, 11)),
        (Fraction(-1, 7), Fraction(1, 13)),
        (Fraction(1, 17), Fraction(-1, 5)),
        (Fraction(-1, 19), Fraction(-1, 23)),
    ]
    for dx, dy in jiggles:
        cand = (cx + dx, cy + dy)
        if geo.point_in_polygon(cand, pts) == 1 and not _touches_feature(d, cand):
            return cand
    raise InvariantError("could not find a clear interior basepoint")


def _touches_feature(d, p):
    for a, b in d.features_polylines():
        if geo.on_segment(p, a, b):
            return True
    return any(p == node.pos for node in d.nodes)


@dataclass(frozen=True)
class EdgeSummary:
    ref: tuple
    affine_length: Fraction
    self_intersection: object  # int, or None when endpoints are not vertices
    area: Fraction
    c1: object


@dataclass(frozen=True)
class InvariantSummary:
    euler: int
    volume: Fraction  # multiple of pi^2
    edges: tuple
    homology: object  # AbelianGroup or None

    def to_json_obj(self):
        return {
            "euler": self.euler,
            "volume_pi2": _frac(self.volume),
            "edges": [
                {
                    "edge": list(s.ref),
                    "affine_length": _frac(s.affine_length),
                    "area_2pi": _frac(s.area),
                    "self_intersection": s.self_intersection,
                    "c1_pairing": s.c1,
                }
                for s in self.edges
            ],
            "h1": None
            if self.homology is None
            else {
                "free_rank": self.homology.free_rank,
                "torsion": list(self.homology.torsion),
            },
        }


def _frac(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else "%d/%d" % (x.numerator, x.denominator)


def summarize(d):
    """Full invariant report for a validated diagram."""
    report = validate(d)
    if not report.ok:
        raise InvariantError("diagram is invalid: %s" % (report.findings[0],))
    edges = []
    closed_toric = True
    try:
        _closed_toric_cycle(d)
    except InvariantError:
        closed_toric = False
    for ref, e in d.reduced_edges():
        try:
            si = edge_self_intersection(d, ref)
        except InvariantError:
            si = None
        edges.append(
            EdgeSummary(
                ref=ref,
                affine_length=e.affine_length(),
                self_intersection=si,
                area=e.affine_length(),
                c1=(si + 2) if (closed_toric and si is not None) else None,
            )
        )
    try:
        h1 = first_homology(d)
    except InvariantError:
        h1 = None
    return InvariantSummary(
        euler=euler_characteristic(d),
        volume=symplectic_volume(d),
        edges=tuple(edges),
        homology=h1,
    )
