"""Small exact linear algebra over Fractions."""
from fractions import Fraction


def rref(rows):
    """Reduced row echelon form; returns (matrix, pivot columns)."""
    m = [list(map(Fraction, r)) for r in rows]
    pivots = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(rows):
    return len(rref(rows)[1]) if rows else 0


def solve(a, b):
    """Solve a x = b exactly for square or tall consistent systems.

    ``a`` is a list of rows.  Returns None when inconsistent; free variables
    are set to zero.
    """
    ncols = len(a[0]) if a else 0
    aug = [list(row) + [rhs] for row, rhs in zip(a, b)]
    m, pivots = rref(aug)
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for i, c in enumerate(pivots):
        x[c] = m[i][ncols]
    return x


def inverse(a):
    n = len(a)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    m, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in m]


def matmul(a, b):
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0))
             for j in range(len(b[0]))] for i in range(len(a))]


class EchelonBasis:
    """Incrementally test linear independence of rational vectors."""

    def __init__(self, dim):
        self.dim = dim
        self.rows = []  # (pivot, normalized row)

    def reduce(self, v):
        v = [Fraction(x) for x in v]
        for piv, row in self.rows:
            if v[piv]:
                f = v[piv]
                v = [a - f * b for a, b in zip(v, row)]
        return v

    def add(self, v):
        """Add v if independent; return True when the span grew."""
        v = self.reduce(v)
        piv = next((i for i, x in enumerate(v) if x), None)
        if piv is None:
            return False
        inv = 1 / v[piv]
        v = [x * inv for x in v]
        new_rows = []
        for p, row in self.rows:
            if row[piv]:
                f = row[piv]
                row = [a - f * b for a, b in zip(row, v)]
            new_rows.append((p, row))
        new_rows.append((piv, v))
        self.rows = new_rows
        return True

    def __len__(self):
        return len(self.rows)
