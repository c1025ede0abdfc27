"""Exact lattice linear algebra: Z^2 vectors, GL(2,Z), affine maps over Q,
nodal monodromy matrices, continued fractions and Smith normal form.

Everything here is a pure function on immutable values; all arithmetic is
exact (ints and fractions.Fraction).
"""

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

# Lattice vectors are plain (int, int) tuples; plane points are
# (Fraction, Fraction) tuples.  Helper constructors keep call sites tidy.


def vec(x, y):
    return (int(x), int(y))


def pt(x, y):
    return (Fraction(x), Fraction(y))


def cross(u, v):
    """Determinant det(u v) = u.x*v.y - u.y*v.x (works for int or Fraction)."""
    return u[0] * v[1] - u[1] * v[0]


def dot(u, v):
    return u[0] * v[0] + u[1] * v[1]


def add(u, v):
    return (u[0] + v[0], u[1] + v[1])


def sub(u, v):
    return (u[0] - v[0], u[1] - v[1])


def neg(u):
    return (-u[0], -u[1])


def scale(u, s):
    return (s * u[0], s * u[1])


def is_primitive(v):
    return gcd(abs(v[0]), abs(v[1])) == 1


def primitive(v):
    """Primitive integer vector positively parallel to v (v may be rational)."""
    if v[0] == 0 and v[1] == 0:
        raise ValueError("zero vector has no primitive representative")
    fx, fy = Fraction(v[0]), Fraction(v[1])
    den = fx.denominator * fy.denominator // gcd(fx.denominator, fy.denominator)
    ix, iy = int(fx * den), int(fy * den)
    g = gcd(abs(ix), abs(iy))
    return (ix // g, iy // g)


def canonical_sign(v):
    """v or -v, whichever is lexicographically positive ((x>0) or (x=0, y>0))."""
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        return neg(v)
    return v


def turn(v):
    """Rotate v by +90 degrees (the J matrix)."""
    return (-v[1], v[0])


@dataclass(frozen=True)
class UnimodularMatrix:
    """2x2 integer matrix with determinant +1 or -1."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.det not in (1, -1):
            raise ValueError("matrix %r is not unimodular" % (self.rows(),))

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def rows(self):
        return ((self.a, self.b), (self.c, self.d))

    def is_sl(self):
        return self.det == 1

    def apply(self, v):
        return (self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1])

    def __mul__(self, other):
        return UnimodularMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self):
        s = self.det  # 1/det = det for det = +-1
        return UnimodularMatrix(s * self.d, -s * self.b, -s * self.c, s * self.a)

    def transpose(self):
        return UnimodularMatrix(self.a, self.c, self.b, self.d)

    def inverse_transpose(self):
        return self.inverse().transpose()

    def __pow__(self, k):
        if k < 0:
            return self.inverse() ** (-k)
        out = IDENTITY
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    @property
    def trace(self):
        return self.a + self.d


IDENTITY = UnimodularMatrix(1, 0, 0, 1)
J = UnimodularMatrix(0, -1, 1, 0)


def matrix(rows):
    (a, b), (c, d) = rows
    return UnimodularMatrix(a, b, c, d)


@dataclass(frozen=True)
class AffineMap:
    """x -> A x + t with A in GL(2,Z) and rational translation t."""

    linear: UnimodularMatrix
    translation: tuple

    def apply(self, p):
        q = self.linear.apply(p)
        return (q[0] + self.translation[0], q[1] + self.translation[1])

    def compose(self, other):
        """self o other."""
        return AffineMap(self.linear * other.linear, self.apply(other.translation))

    def inverse(self):
        inv = self.linear.inverse()
        t = inv.apply(self.translation)
        return AffineMap(inv, (-t[0], -t[1]))

    @staticmethod
    def identity():
        return AffineMap(IDENTITY, (Fraction(0), Fraction(0)))

    @staticmethod
    def translation_by(t):
        return AffineMap(IDENTITY, (Fraction(t[0]), Fraction(t[1])))

    @staticmethod
    def fixing(p, linear):
        """The affine map with the given linear part fixing the point p."""
        q = linear.apply(p)
        return AffineMap(linear, (p[0] - q[0], p[1] - q[1]))


@dataclass(frozen=True)
class MonodromySpec:
    """Eigen direction (a,b) (primitive) and multiplicity k of a node."""

    eigenvector: tuple
    multiplicity: int = 1

    def __post_init__(self):
        if not is_primitive(self.eigenvector):
            raise ValueError("eigenvector %r is not primitive" % (self.eigenvector,))
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")


def monodromy_matrix(spec):
    """k-th power of [[1-ab, a^2], [-b^2, 1+ab]]; fixes (a,b), det 1, trace 2.

    The nilpotent part N of the base matrix squares to zero, so the k-th
    power is I + k N (also valid for negative k).
    """
    if isinstance(spec, tuple):
        spec = MonodromySpec(*spec)
    a, b = spec.eigenvector
    k = spec.multiplicity
    return UnimodularMatrix(1 - k * a * b, k * a * a, -k * b * b, 1 + k * a * b)


def affine_from_topological(m):
    """Affine monodromy of a loop whose topological monodromy is m (A^-T)."""
    return m.inverse_transpose()


class SingularContinuedFraction(ValueError):
    """Raised when a Hirzebruch-Jung evaluation hits a zero tail."""


def cf_eval(b):
    """Evaluate b1 - 1/(b2 - 1/(... - 1/bk)) exactly.

    Accepts any integer entries (including 1s and negatives) as long as no
    intermediate tail vanishes.
    """
    if not b:
        raise ValueError("empty continued fraction")
    tail = Fraction(b[-1])
    for entry in reversed(b[:-1]):
        if tail == 0:
            raise SingularContinuedFraction("zero tail in %r" % (list(b),))
        tail = Fraction(entry) - 1 / tail
    return tail


def cf_expand(n, m):
    """Canonical expansion n/m = [b1,...,bk] with every bi >= 2.

    Requires 0 < m < n and gcd(n, m) = 1 except for the degenerate m = 1
    case where [n] is returned (n >= 2 still enforced via bi >= 2... n=1 is
    rejected since 1/1 has empty expansion).
    """
    n, m = int(n), int(m)
    if n <= 1 or not (0 < m < n) or gcd(n, m) != 1:
        raise ValueError("need coprime 0 < m < n with n >= 2, got %r/%r" % (n, m))
    out = []
    while m:
        q = -(-n // m)  # ceil
        out.append(q)
        n, m = m, q * m - n
    assert all(x >= 2 for x in out)
    assert cf_eval(out) == Fraction(*_pair(out))
    return out


def _pair(b):
    v = cf_eval(b)
    return v.numerator, v.denominator


@dataclass(frozen=True)
class AbelianGroup:
    """Finitely generated abelian group: Z^rank + Z/t1 + ... (t_i | t_{i+1})."""

    free_rank: int
    torsion: tuple = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        for t in self.torsion:
            if t < 2:
                raise ValueError("torsion coefficients must be >= 2")
        for s, t in zip(self.torsion, self.torsion[1:]):
            if t % s:
                raise ValueError("torsion coefficients must form a divisibility chain")

    def is_trivial(self):
        return self.free_rank == 0 and not self.torsion

    def __str__(self):
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append("Z^%d" % self.free_rank)
        parts.extend("Z/%d" % t for t in self.torsion)
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class SmithNormalForm:
    """U * M * V = D with U, V unimodular over Z and D in divisibility form."""

    diagonal: tuple
    left: tuple  # rows of U
    right: tuple  # rows of V
    rows: int
    cols: int

    def cokernel(self):
        """Z^rows / column span of M."""
        nonzero = [d for d in self.diagonal if d]
        torsion = tuple(d for d in nonzero if d > 1)
        return AbelianGroup(self.rows - len(nonzero), torsion)


def smith_normal_form(m):
    """Smith normal form of an integer matrix (list of rows), with witnesses.

    Row/column reduction by exact gcd steps; the transformation matrices are
    accumulated so callers can verify U*M*V = D.
    """
    a = [list(map(int, row)) for row in m]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    u = [[int(i == j) for j in range(rows)] for i in range(rows)]
    v = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def row_op(i, j, f):
        # row_i += f * row_j
        for k in range(cols):
            a[i][k] += f * a[j][k]
        for k in range(rows):
            u[i][k] += f * u[j][k]

    def col_op(i, j, f):
        for k in range(rows):
            a[k][i] += f * a[k][j]
        for k in range(cols):
            v[k][i] += f * v[k][j]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for k in range(rows):
            a[k][i], a[k][j] = a[k][j], a[k][i]
        for k in range(cols):
            v[k][i], v[k][j] = v[k][j], v[k][i]

    t = 0
    while t < min(rows, cols):
        # move a nonzero pivot of minimal absolute value into position (t,t)
        pivots = [
            (abs(a[i][j]), i, j)
            for i in range(t, rows)
            for j in range(t, cols)
            if a[i][j]
        ]
        if not pivots:
            break
        _, pi, pj = min(pivots)
        if pi != t:
            swap_rows(pi, t)
        if pj != t:
            swap_cols(pj, t)
        dirty = False
        for i in range(t + 1, rows):
            if a[i][t]:
                q = a[i][t] // a[t][t]
                row_op(i, t, -q)
                if a[i][t]:
                    dirty = True
        for j in range(t + 1, cols):
            if a[t][j]:
                q = a[t][j] // a[t][t]
                col_op(j, t, -q)
                if a[t][j]:
                    dirty = True
        if dirty:
            continue
        # enforce divisibility of the remaining block by the pivot
        bad = None
        for i in range(t + 1, rows):
            for j in range(t + 1, cols):
                if a[i][j] % a[t][t]:
                    bad = i
                    break
            if bad is not None:
                break
        if bad is not None:
            row_op(t, bad, 1)
            continue
        if a[t][t] < 0:
            row_op(t, t, -2)
        t += 1

    diag = tuple(a[i][i] for i in range(min(rows, cols)))
    return SmithNormalForm(
        diagonal=diag,
        left=tuple(tuple(r) for r in u),
        right=tuple(tuple(r) for r in v),
        rows=rows,
        cols=cols,
    )


def cokernel(columns, rank=2):
    """Cokernel of the map Z^k -> Z^rank with the given integer columns."""
    if not columns:
        return AbelianGroup(rank)
    m = [[col[i] for col in columns] for i in range(rank)]
    return smith_normal_form(m).cokernel()
