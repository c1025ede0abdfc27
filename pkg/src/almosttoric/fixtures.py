"""Reference diagrams used across tests, demos and documentation.

All constructors take rational size parameters and return validated-shape
data; they are ordinary library functions, not test-only helpers, since the
CLI and demos reuse them.
"""

from fractions import Fraction

from .diagram import (
    REDUCED,
    REGULAR,
    BaseDiagram,
    Edge,
    Node,
    identified,
    normalize,
    polygon_diagram,
)
from .lattice import AffineMap, UnimodularMatrix, canonical_sign


def f(x):
    return Fraction(x)


def cp2(size=3):
    """Closed toric projective plane: the triangle with legs of the given size."""
    s = f(size)
    return polygon_diagram([(0, 0), (s, 0), (0, s)])


def four_ball(size=3):
    """Toric four-ball: legs reduced, hypotenuse regular (the boundary sphere)."""
    s = f(size)
    return polygon_diagram(
        [(0, 0), (s, 0), (0, s)],
        markings=[REDUCED, REGULAR, REDUCED],
    )


def square(size=1):
    """Closed toric sphere-times-sphere."""
    s = f(size)
    return polygon_diagram([(0, 0), (s, 0), (s, s), (0, s)])


def hirzebruch(n, base=None, height=1):
    """Closed toric sphere bundle over the sphere with a -n section.

    Quadrilateral (a,0), (0,0), (0,t), (a+n t, t); the bottom edge is the
    image of the -n sphere.
    """
    t = f(height)
    a = f(base) if base is not None else 1 + max(0, -n) * t + t
    if a + n * t <= 0:
        raise ValueError("base too short for slope %d" % n)
    return polygon_diagram([(a, 0), (0, 0), (0, t), (a + n * t, t)])


def sphere_bundle_over_torus(twist=0, width=2, height=2):
    """Sphere bundle over the torus: cylinder base with sheared identification.

    The two reduced boundary circles are the section tori; their
    self-intersections are -twist and +twist.  twist=7 reproduces the
    (1,0) -> (1,-7) transport picture.
    """
    w, h, mu = f(width), f(height), int(twist)
    s = UnimodularMatrix(1, 0, mu, 1)
    g = AffineMap(s, (f(0), h))  # maps the bottom edge onto the top edge
    cycle = (
        Edge((f(0), f(0)), (f(0), h), REDUCED),
        Edge((f(0), h), (w, h + mu * w), identified("t")),
        Edge((w, h + mu * w), (w, f(0)), REDUCED),
        Edge((w, f(0)), (f(0), f(0)), identified("t")),
    )
    # the first-listed identified edge must be the gluing's source: list the
    # bottom edge first by rotating the cycle
    cycle = cycle[3:] + cycle[:3]
    return normalize(BaseDiagram(cycles=(cycle,), gluings=(("t", g),)))


def torus_bundle_over_torus(shear=0, width=2, height=2, slant=1):
    """Torus bundle over the torus with monodromy [[1, shear], [0, 1]].

    Fundamental domain: the parallelogram (0,0), (c,0), (a+c,b), (a,b).
    The horizontal gluing is a plain translation; the vertical one carries
    the shear in its linear part (which fixes the horizontal edges pointwise,
    so the two deck maps commute).
    """
    c, b, a = f(width), f(height), f(slant)
    lam = int(shear)
    s_mat = UnimodularMatrix(1, lam, 0, 1)
    gx = AffineMap.translation_by((c, f(0)))  # left -> right
    gy = AffineMap(s_mat, (a, b))  # bottom -> top (S fixes y = 0 pointwise)
    left = Edge((f(0), f(0)), (a, b), identified("x"))
    top = Edge((a, b), (a + c, b), identified("y"))
    right = Edge((a + c, b), (c, f(0)), identified("x"))
    bottom = Edge((c, f(0)), (f(0), f(0)), identified("y"))
    cycle = (left, top, right, bottom)
    d = BaseDiagram(cycles=(cycle,), gluings=(("x", gx), ("y", gy)), surface="torus")
    return normalize(d)


def torus_bundle_over_klein(width=2, height=2):
    """Torus bundle over the Klein bottle (orientation-reversing gluing)."""
    c, b = f(width), f(height)
    gx = AffineMap.translation_by((c, f(0)))
    gy = AffineMap(UnimodularMatrix(-1, 0, 0, 1), (c, b))  # bottom -> top flip
    left = Edge((f(0), f(0)), (f(0), b), identified("x"))
    top = Edge((f(0), b), (c, b), identified("y"))
    right = Edge((c, b), (c, f(0)), identified("x"))
    bottom = Edge((c, f(0)), (f(0), f(0)), identified("y"))
    d = BaseDiagram(
        cycles=((left, top, right, bottom),),
        gluings=(("x", gx), ("y", gy)),
        surface="klein",
    )
    return normalize(d)


def lens_cone(n, m, scale=3):
    """Truncated cone V_{n,m}: edges along (0,1) and (n,m), both reduced.

    The truncation edge is regular (it is the boundary of the collar, not of
    the manifold).
    """
    n, m = int(n), int(m)
    s = f(scale)
    apex = (f(0), f(0))
    top = (f(0), s)
    far = (s * n, s * m)
    return polygon_diagram(
        [apex, top, (top[0] + far[0], top[1] + far[1]), far],
        markings=[REDUCED, REGULAR, REGULAR, REDUCED],
    )


def exotic_plane(scale=4):
    """Truncated window on the unbounded exotic symplectic R^4 base: one
    vertex at the origin, both legs reduced, truncation edges regular."""
    s = f(scale)
    return polygon_diagram(
        [(0, 0), (s, 0), (s, s), (0, s)],
        markings=[REDUCED, REGULAR, REGULAR, REDUCED],
    )
