"""Exact linear algebra over the rationals.

Matrices are plain lists of rows, entries `fractions.Fraction` (helpers
coerce ints).  Rank and the echelon core use fraction-free Bareiss
elimination on integer-cleared rows to keep intermediate entries small;
kernel/solve/back-substitution work over Fraction.

All values are immutable by convention: no function mutates its inputs.
"""

from fractions import Fraction
from math import gcd, lcm


class NotSubspace(Exception):
    """Raised when a claimed subspace containment fails."""


class DegeneratePairing(Exception):
    """Raised when an operation requires a nondegenerate bilinear form."""


def frac(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def mat(rows):
    """Coerce a list of rows of numbers to Fraction entries."""
    return [[frac(x) for x in row] for row in rows]


def zeros(r, c):
    return [[Fraction(0)] * c for _ in range(r)]


def identity(n):
    return [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]


def mat_mul(A, B):
    rb = len(B)
    cb = len(B[0]) if rb else 0
    out = []
    for row in A:
        out.append([sum((row[k] * B[k][j] for k in range(rb)), Fraction(0))
                    for j in range(cb)])
    return out


def mat_vec(A, v):
    return [sum((row[k] * v[k] for k in range(len(v))), Fraction(0)) for row in A]


def transpose(A):
    if not A:
        return []
    return [list(col) for col in zip(*A)]


def _clear_row(row):
    """Scale a Fraction row to coprime integers (empty/zero rows allowed)."""
    mult = lcm(*(f.denominator for f in row)) if row else 1
    ints = [int(f * mult) for f in row]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g > 1:
        ints = [x // g for x in ints]
    return ints


def bareiss_echelon(M):
    """Fraction-free Bareiss elimination.

    Returns (echelon, pivot_cols): `echelon` is an integer row-echelon
    form whose row space and null space match M's; `pivot_cols` lists the
    pivot column of each nonzero row in order.
    """
    rows = [_clear_row(row) for row in M]
    nrows = len(rows)
    ncols = len(rows[0]) if nrows else 0
    pivots = []
    prev = 1
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if rows[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols):
                rows[i][j] = (rows[r][c] * rows[i][j]
                              - rows[i][c] * rows[r][j]) // prev
            rows[i][c] = 0
        prev = rows[r][c]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return rows[:r] + [[0] * ncols for _ in range(nrows - r)], pivots


def rank(M):
    return len(bareiss_echelon(M)[1])


def rref(M):
    """Reduced row echelon form over Fraction.  Returns (R, pivot_cols)."""
    rows = [[frac(x) for x in row] for row in M]
    nrows = len(rows)
    ncols = len(rows[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if rows[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c]
        rows[r] = [x / inv for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return rows, pivots


def kernel_basis(M):
    """Basis of the null space of M, as a Subspace of dimension ncols."""
    nrows = len(M)
    ncols = len(M[0]) if nrows else 0
    if ncols == 0:
        return Subspace(0, [])
    R, pivots = rref(M)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * ncols
        v[fcol] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -R[i][fcol]
        basis.append(v)
    return Subspace(ncols, basis)


def solve(M, b):
    """Solve M x = b exactly.

    Returns ("SOLUTION", x) with M x = b, or ("INCONSISTENT", y) with a
    certificate y satisfying yT M = 0 and yT b != 0.  Exactly one branch.
    """
    nrows = len(M)
    ncols = len(M[0]) if nrows else 0
    # Eliminate on [M | I] so inconsistent rows carry their own certificate.
    aug = [[frac(x) for x in M[i]] + [frac(b[i])]
           + [Fraction(1 if j == i else 0) for j in range(nrows)]
           for i in range(nrows)]
    r = 0
    pivots = []
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if aug[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = aug[r][c]
        aug[r] = [x / inv for x in aug[r]]
        for i in range(nrows):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [a - f * bb for a, bb in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    for i in range(r, nrows):
        if aug[i][ncols] != 0:
            y = aug[i][ncols + 1:]
            return ("INCONSISTENT", y)
    x = [Fraction(0)] * ncols
    for i, pc in enumerate(pivots):
        x[pc] = aug[i][ncols]
    return ("SOLUTION", x)


class Subspace:
    """A subspace of Q^n given by a basis; canonical form is the RREF of
    the basis written as rows.  Equality is comparison of canonical rows.
    """

    def __init__(self, ambient_dim, basis):
        self.ambient_dim = ambient_dim
        rows = [[frac(x) for x in v] for v in basis]
        for v in rows:
            if len(v) != ambient_dim:
                raise ValueError("basis vector has wrong length")
        R, pivots = rref(rows) if rows else ([], [])
        self.basis = [tuple(R[i]) for i in range(len(pivots))]
        self.pivots = tuple(pivots)

    @property
    def dim(self):
        return len(self.basis)

    def __eq__(self, other):
        return (isinstance(other, Subspace)
                and self.ambient_dim == other.ambient_dim
                and self.basis == other.basis)

    def __hash__(self):
        return hash((self.ambient_dim, tuple(self.basis)))

    def __repr__(self):
        return f"Subspace(dim {self.dim} of Q^{self.ambient_dim})"

    def contains_vector(self, v):
        v = [frac(x) for x in v]
        work = list(v)
        for row, pc in zip(self.basis, self.pivots):
            if work[pc] != 0:
                f = work[pc]
                work = [a - f * b for a, b in zip(work, row)]
        return all(x == 0 for x in work)

    def contains(self, other):
        return all(self.contains_vector(v) for v in other.basis)

    def add(self, other):
        if self.ambient_dim != other.ambient_dim:
            raise ValueError("ambient dimension mismatch")
        return Subspace(self.ambient_dim, list(self.basis) + list(other.basis))

    def intersect(self, other):
        if self.ambient_dim != other.ambient_dim:
            raise ValueError("ambient dimension mismatch")
        if not self.basis or not other.basis:
            return Subspace(self.ambient_dim, [])
        # Solve a*A = b*B: kernel of the stacked matrix [A^T | -B^T].
        cols = [list(v) for v in self.basis] + [[-x for x in v] for v in other.basis]
        M = transpose(cols)
        ker = kernel_basis(M)
        vecs = []
        na = len(self.basis)
        for coeffs in ker.basis:
            v = [Fraction(0)] * self.ambient_dim
            for i in range(na):
                for j in range(self.ambient_dim):
                    v[j] += coeffs[i] * self.basis[i][j]
            vecs.append(v)
        return Subspace(self.ambient_dim, vecs)


def quotient_dim(A, B):
    """dim(A/B) for B a subspace of A; raises NotSubspace otherwise."""
    if not A.contains(B):
        raise NotSubspace("second argument is not contained in the first")
    return A.dim - B.dim


def signature_normal_form(G):
    """Congruence-diagonalize a symmetric form over Q.

    Returns (n_pos, n_neg, n_zero, T) with T^T G T diagonal; the counts
    are the numbers of positive/negative/zero diagonal entries.
    """
    n = len(G)
    A = [[frac(G[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            if A[i][j] != A[j][i]:
                raise ValueError("form is not symmetric")
    T = identity(n)

    def col_op(dst, src, f):
        # column_dst += f * column_src, applied to A (congruently) and T
        for i in range(n):
            A[i][dst] += f * A[i][src]
        for i in range(n):
            A[dst][i] += f * A[src][i]
        for i in range(n):
            T[i][dst] += f * T[i][src]

    def col_swap(i, j):
        for r in range(n):
            A[r][i], A[r][j] = A[r][j], A[r][i]
        for r in range(n):
            A[i][r], A[j][r] = A[j][r], A[i][r]
        for r in range(n):
            T[r][i], T[r][j] = T[r][j], T[r][i]

    for k in range(n):
        if A[k][k] == 0:
            # find a later column with nonzero diagonal, or create one
            found = False
            for j in range(k + 1, n):
                if A[j][j] != 0:
                    col_swap(k, j)
                    found = True
                    break
            if not found:
                for j in range(k + 1, n):
                    if A[k][j] != 0:
                        col_op(k, j, Fraction(1))
                        found = True
                        break
            if not found:
                continue
        d = A[k][k]
        for j in range(k + 1, n):
            if A[k][j] != 0:
                col_op(j, k, -A[k][j] / d)
    pos = sum(1 for k in range(n) if A[k][k] > 0)
    neg = sum(1 for k in range(n) if A[k][k] < 0)
    zero = n - pos - neg
    return pos, neg, zero, T


def annihilator(W, pairing):
    """{v : pairing(v, w) = 0 for all w in W} for a nondegenerate pairing."""
    n = W.ambient_dim
    G = mat(pairing)
    if rank(G) < n:
        raise DegeneratePairing("pairing matrix is singular")
    if not W.basis:
        return Subspace(n, identity(n))
    rows = [mat_vec(G, list(w)) for w in W.basis]
    return kernel_basis(rows)
