"""Antisymmetric multilinear maps, multiderivations, and Grassmann
derivations over exact rationals.

Three layers share this module:

* MultiMap / NonSymMultiMap - (anti)symmetric multilinear maps V^n -> V
  on a finite-dimensional rational vector space, with the
  Nijenhuis-Richardson and Gerstenhaber brackets, the Chevalley-Eilenberg
  differential and its cohomology.
* MultiDerivation - multiderivations of a trivial bundle R^m x R^k with
  polynomial coefficients: antisymmetric maps on sections obeying a
  Leibniz rule in each slot governed by a symbol, with the
  Crainic-Moerdijk bracket.
* GrassmannDerivation - superderivations of the Grassmann algebra of
  bundle forms, with the mutually inverse maps grassmann_L/grassmann_R
  and the algebraic decomposition D = Lie_K + i_L in the tangent model.

Sign table (point case, m = 0): under the relabeling that regards an
(n+1)-ary MultiMap f as a MultiDerivation D_f of degree n with zero
symbol, the two brackets agree up to a supersign,

    cm_bracket(D_f, D_g) = (-1)^{pq} D_{nr_bracket(f, g)},

for degrees p = arity(f)-1 and q = arity(g)-1.
"""

import itertools
import json
from fractions import Fraction

from . import ratlin
from .ratlin import Subspace
from .superalg import (
    GeneratorSet,
    NotHomogeneous,
    SuperElement,
    euler_weight,
)


class DimMismatch(Exception):
    pass


class BundleMismatch(Exception):
    pass


class NotLie(Exception):
    pass


class AnchorNotSurjective(Exception):
    pass


# ---------------------------------------------------------------------------
# shuffles
# ---------------------------------------------------------------------------

def _psign(e):
    """(-1)**e, safe for negative integer exponents."""
    return -1 if e % 2 else 1


def shuffles(first, second):
    """Yield (positions_first, positions_second, sign) over all
    (first, second)-shuffles of range(first + second)."""
    n = first + second
    for chosen in itertools.combinations(range(n), first):
        rest = tuple(i for i in range(n) if i not in chosen)
        inv = sum(c - i for i, c in enumerate(chosen))
        yield chosen, rest, (-1) ** inv


def _sort_sign(idx):
    """Sort an index tuple; return (sorted tuple, sign) or (None, 0) on
    repeats."""
    idx = list(idx)
    sign = 1
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(idx)):
        if idx[i - 1] == idx[i]:
            return None, 0
    return tuple(idx), sign


# ---------------------------------------------------------------------------
# MultiMap
# ---------------------------------------------------------------------------

def _zvec(dim):
    return (Fraction(0),) * dim


class MultiMap:
    """Antisymmetric n-linear map V^n -> V, dim V = dim, over Q.

    Coefficients live on strictly increasing index tuples; evaluation
    extends by antisymmetry.  n = 0 encodes an element of V.
    """

    __slots__ = ("n", "dim", "c")

    def __init__(self, n, dim, c=None):
        self.n = n
        self.dim = dim
        store = {}
        for idx, vec in (c or {}).items():
            idx = tuple(idx)
            if len(idx) != n:
                raise ValueError(f"index tuple {idx} has wrong length")
            if list(idx) != sorted(set(idx)):
                raise ValueError(f"index tuple {idx} not strictly increasing")
            vec = tuple(Fraction(v) for v in vec)
            if len(vec) != dim:
                raise ValueError("value vector has wrong length")
            if any(vec):
                store[idx] = vec
        self.c = store

    # -- basics --

    def is_zero(self):
        return not self.c

    def __eq__(self, other):
        return (isinstance(other, MultiMap) and self.n == other.n
                and self.dim == other.dim and self.c == other.c)

    __hash__ = None

    def __add__(self, other):
        if self.n != other.n or self.dim != other.dim:
            raise DimMismatch("adding maps of different shape")
        c = dict(self.c)
        for idx, vec in other.c.items():
            cur = c.get(idx, _zvec(self.dim))
            c[idx] = tuple(a + b for a, b in zip(cur, vec))
        return MultiMap(self.n, self.dim, c)

    def __neg__(self):
        return self * Fraction(-1)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        scalar = Fraction(scalar)
        return MultiMap(self.n, self.dim,
                        {i: tuple(scalar * v for v in vec)
                         for i, vec in self.c.items()})

    __rmul__ = __mul__

    def __repr__(self):
        return f"MultiMap(n={self.n}, dim={self.dim}, c={self.c})"

    # -- evaluation --

    def eval_indices(self, idx):
        """Value on basis vectors e_{idx[0]}, ..., e_{idx[n-1]}."""
        key, sign = _sort_sign(idx)
        if key is None:
            return _zvec(self.dim)
        vec = self.c.get(key)
        if vec is None:
            return _zvec(self.dim)
        return tuple(sign * v for v in vec)

    def eval_first_vector(self, vec, rest):
        """Value with an arbitrary vector in the first slot and basis
        indices in the remaining slots."""
        out = list(_zvec(self.dim))
        for g, coeff in enumerate(vec):
            if coeff == 0:
                continue
            val = self.eval_indices((g,) + tuple(rest))
            for t in range(self.dim):
                out[t] += coeff * val[t]
        return tuple(out)

    @classmethod
    def zero(cls, n, dim):
        return cls(n, dim, {})


class NonSymMultiMap:
    """Plain (non-symmetrized) n-linear map V^n -> V; full tensor."""

    __slots__ = ("n", "dim", "c")

    def __init__(self, n, dim, c=None):
        self.n = n
        self.dim = dim
        store = {}
        for idx, vec in (c or {}).items():
            idx = tuple(idx)
            if len(idx) != n:
                raise ValueError(f"index tuple {idx} has wrong length")
            vec = tuple(Fraction(v) for v in vec)
            if any(vec):
                store[idx] = vec
        self.c = store

    def is_zero(self):
        return not self.c

    def __eq__(self, other):
        return (isinstance(other, NonSymMultiMap) and self.n == other.n
                and self.dim == other.dim and self.c == other.c)

    __hash__ = None

    def __add__(self, other):
        if self.n != other.n or self.dim != other.dim:
            raise DimMismatch("adding maps of different shape")
        c = dict(self.c)
        for idx, vec in other.c.items():
            cur = c.get(idx, _zvec(self.dim))
            c[idx] = tuple(a + b for a, b in zip(cur, vec))
        return NonSymMultiMap(self.n, self.dim, c)

    def __neg__(self):
        return self * Fraction(-1)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        scalar = Fraction(scalar)
        return NonSymMultiMap(self.n, self.dim,
                              {i: tuple(scalar * v for v in vec)
                               for i, vec in self.c.items()})

    __rmul__ = __mul__

    def eval_indices(self, idx):
        return self.c.get(tuple(idx), _zvec(self.dim))

    @classmethod
    def zero(cls, n, dim):
        return cls(n, dim, {})


# ---------------------------------------------------------------------------
# Nijenhuis-Richardson bracket and CE differential
# ---------------------------------------------------------------------------

def nr_diamond(f, g):
    """The shuffle insertion f <> g: insert g into the first slot of f and
    sum over (arity(g), arity(f)-1)-shuffles of the arguments."""
    if f.dim != g.dim:
        raise DimMismatch("maps over different spaces")
    m, n = f.n, g.n
    if m == 0:
        return MultiMap.zero(max(n - 1, 0), f.dim)
    dim = f.dim
    out = {}
    for idx in itertools.combinations(range(dim), m + n - 1):
        acc = list(_zvec(dim))
        for pos_g, pos_rest, sign in shuffles(n, m - 1):
            inner = g.eval_indices(tuple(idx[p] for p in pos_g))
            if not any(inner):
                continue
            rest = tuple(idx[p] for p in pos_rest)
            val = f.eval_first_vector(inner, rest)
            for t in range(dim):
                acc[t] += sign * val[t]
        if any(acc):
            out[idx] = tuple(acc)
    return MultiMap(m + n - 1, dim, out)


def nr_bracket(f, g):
    """Graded Lie bracket on antisymmetric multimaps: square-zero 2-ary
    elements are exactly the Lie brackets."""
    sign = _psign((f.n - 1) * (g.n - 1))
    return nr_diamond(f, g) - sign * nr_diamond(g, f)


def jacobiator(mu, x, y, z):
    """[[x,y],z] + [[y,z],x] + [[z,x],y] for basis indices x, y, z."""
    dim = mu.dim
    out = list(_zvec(dim))
    for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
        inner = mu.eval_indices((a, b))
        val = mu.eval_first_vector(inner, (c,))
        # [[a,b],c] = -[c,[a,b]] = [inner, e_c]
        for t in range(dim):
            out[t] += val[t]
    return tuple(out)


def is_lie(mu):
    """Brute-force Jacobi test over all basis triples."""
    for x, y, z in itertools.combinations(range(mu.dim), 3):
        if any(jacobiator(mu, x, y, z)):
            return False
    # repeated indices vanish by antisymmetry
    return True


def ce_differential(mu, f):
    """Chevalley-Eilenberg differential (adjoint coefficients) of the
    n-cochain f; requires mu to be a Lie structure.

    Satisfies [mu, f]_NR = (-1)^{n+1} * ce_differential(mu, f).
    """
    if mu.dim != f.dim:
        raise DimMismatch("maps over different spaces")
    if not nr_bracket(mu, mu).is_zero():
        raise NotLie("mu does not satisfy the Jacobi identity")
    n, dim = f.n, f.dim
    out = {}
    for idx in itertools.combinations(range(dim), n + 1):
        acc = list(_zvec(dim))
        for i in range(n + 1):
            rest = idx[:i] + idx[i + 1:]
            inner = f.eval_indices(rest)
            if any(inner):
                # (-1)^{i+1} mu(x_i, f(...)) with 1-based i
                val = mu.eval_first_vector(inner, (idx[i],))
                s = (-1) ** (i + 1 + 1)  # mu(x_i, v) = -mu(v, x_i)
                for t in range(dim):
                    acc[t] -= s * val[t]
        for i, j in itertools.combinations(range(n + 1), 2):
            br = mu.eval_indices((idx[i], idx[j]))
            if not any(br):
                continue
            rest = tuple(idx[t] for t in range(n + 1) if t not in (i, j))
            val = f.eval_first_vector(br, rest)
            s = (-1) ** (i + 1 + j + 1)
            for t in range(dim):
                acc[t] += s * val[t]
        if any(acc):
            out[idx] = tuple(acc)
    return MultiMap(n + 1, dim, out)


# ---------------------------------------------------------------------------
# cohomology
# ---------------------------------------------------------------------------

def _cochain_basis(k, dim):
    return [(idx, g) for idx in itertools.combinations(range(dim), k)
            for g in range(dim)]


def _to_vector(f, basis):
    return [f.c.get(idx, _zvec(f.dim))[g] for idx, g in basis]


def _from_vector(vec, k, dim, basis):
    c = {}
    for x, (idx, g) in zip(vec, basis):
        if x:
            cur = list(c.get(idx, _zvec(dim)))
            cur[g] = Fraction(x)
            c[idx] = tuple(cur)
    return MultiMap(k, dim, c)


def _delta_matrix(mu, k):
    """Matrix of the CE differential A^k -> A^{k+1} in the canonical
    cochain bases (columns indexed by the domain basis)."""
    dim = mu.dim
    dom = _cochain_basis(k, dim)
    cod = _cochain_basis(k + 1, dim)
    cols = []
    for idx, g in dom:
        vec = [Fraction(0)] * dim
        vec[g] = Fraction(1)
        f = MultiMap(k, dim, {idx: tuple(vec)})
        cols.append(_to_vector(ce_differential(mu, f), cod))
    if not cod:
        return [[] for _ in range(0)]
    return [[cols[c][r] for c in range(len(dom))] for r in range(len(cod))]


def cohomology(mu, k):
    """(dim H^k, representative cocycles) for the CE complex of mu in the
    adjoint representation."""
    dim = mu.dim
    dom = _cochain_basis(k, dim)
    ndom = len(dom)
    Mk = _delta_matrix(mu, k)
    if Mk and Mk[0]:
        ker = ratlin.kernel_basis(Mk)
    else:
        ker = Subspace(ndom, [[Fraction(1) if i == j else Fraction(0)
                               for j in range(ndom)] for i in range(ndom)])
    if k == 0:
        im = Subspace(ndom, [])
    else:
        Mprev = _delta_matrix(mu, k - 1)
        im = Subspace(ndom, [list(col) for col in zip(*Mprev)]
                      if Mprev and Mprev[0] else [])
    hdim = ratlin.quotient_dim(ker, im)
    reps = []
    span = im
    for v in ker.basis:
        enlarged = span.add(Subspace(ndom, [list(v)]))
        if enlarged.dim > span.dim:
            span = enlarged
            reps.append(_from_vector(list(v), k, dim, dom))
    assert len(reps) == hdim
    return hdim, reps


# ---------------------------------------------------------------------------
# Gerstenhaber bracket
# ---------------------------------------------------------------------------

def gerstenhaber_bracket(f, g):
    """Graded bracket on non-symmetric multimaps: square-zero 2-ary
    elements are exactly the associative multiplications."""
    if f.dim != g.dim:
        raise DimMismatch("maps over different spaces")

    def circ(a, b):
        m, n = a.n, b.n
        dim = a.dim
        out = {}
        for idx in itertools.product(range(dim), repeat=m + n - 1):
            acc = list(_zvec(dim))
            for i in range(1, m + 1):
                inner = b.eval_indices(idx[i - 1:i - 1 + n])
                if not any(inner):
                    continue
                sign = (-1) ** ((i - 1) * (n - 1))
                for gamma, coeff in enumerate(inner):
                    if coeff == 0:
                        continue
                    val = a.eval_indices(
                        idx[:i - 1] + (gamma,) + idx[i - 1 + n:])
                    for t in range(dim):
                        acc[t] += sign * coeff * val[t]
            if any(acc):
                out[idx] = tuple(acc)
        return NonSymMultiMap(m + n - 1, dim, out)

    sign = _psign((f.n - 1) * (g.n - 1))
    return circ(f, g) - sign * circ(g, f)


# ---------------------------------------------------------------------------
# structure constants JSON
# ---------------------------------------------------------------------------

def structure_constants_from_json(data):
    """Load {"dim": n, "c": [[alpha, beta, gamma, value], ...]} into a
    2-ary MultiMap, enforcing antisymmetry."""
    if isinstance(data, str):
        data = json.loads(data)
    dim = int(data["dim"])
    entries = {}
    for alpha, beta, gamma, value in data["c"]:
        value = Fraction(value)
        if alpha == beta:
            if value != 0:
                raise ValueError("nonzero diagonal structure constant")
            continue
        key = (min(alpha, beta), max(alpha, beta), gamma)
        signed = value if alpha < beta else -value
        if key in entries and entries[key] != signed:
            raise ValueError(f"antisymmetry conflict at {key}")
        entries[key] = signed
    c = {}
    for (a, b, g), v in entries.items():
        vec = list(c.get((a, b), _zvec(dim)))
        vec[g] = v
        c[(a, b)] = tuple(vec)
    return MultiMap(2, dim, c)


def structure_constants_to_json(mu):
    rows = []
    for (a, b), vec in sorted(mu.c.items()):
        for g, v in enumerate(vec):
            if v:
                rows.append([a, b, g, str(v)])
    return {"dim": mu.dim, "c": rows}


# ---------------------------------------------------------------------------
# polynomial bundle scaffolding
# ---------------------------------------------------------------------------

def base_gens(m):
    """Polynomial functions on the base: even generators x1..xm."""
    return GeneratorSet([f"x{i + 1}" for i in range(m)], [])


def _poly_zero(gens):
    return gens.zero()


def _vf_commutator(gens, m, X, Y):
    """[X, Y] for vector fields given as m-tuples of polynomials."""
    out = []
    for t in range(m):
        acc = gens.zero()
        for i in range(m):
            acc = acc + X[i] * Y[t].partial_even(gens.even[i])
            acc = acc - Y[i] * X[t].partial_even(gens.even[i])
        out.append(acc)
    return tuple(out)


def _det(entries, gens):
    """Determinant of a small square matrix of polynomials."""
    n = len(entries)
    if n == 0:
        return gens.one()
    if n == 1:
        return entries[0][0]
    acc = gens.zero()
    for j in range(n):
        a = entries[0][j]
        if a.is_zero():
            continue
        minor = [[entries[r][c] for c in range(n) if c != j]
                 for r in range(1, n)]
        acc = acc + ((-1) ** j) * a * _det(minor, gens)
    return acc


class MultiDerivation:
    """Multiderivation of degree p >= -1 on the trivial bundle
    R^m x R^k with polynomial coefficients.

    Determined by its values on the constant frame (an antisymmetric
    table on strictly increasing (p+1)-tuples of frame indices, each
    value a k-tuple of polynomials) and its symbol (an antisymmetric
    table on p-tuples, each value an m-tuple of polynomials read as a
    vector field on the base).  Degree -1 elements are sections; their
    symbol is zero.  Evaluation on arbitrary polynomial sections obeys

        D(s_1,...,f s_i,...,s_n)
            = f D(s_1,...,s_n)
              + (-1)^{n-i} sigma_D(s_1,..^i..,s_n)(f) s_i.
    """

    __slots__ = ("gens", "m", "k", "degree", "frame", "symbol")

    def __init__(self, gens, m, k, degree, frame=None, symbol=None):
        self.gens = gens
        self.m = m
        self.k = k
        self.degree = degree
        nargs = degree + 1
        fstore = {}
        for idx, vec in (frame or {}).items():
            idx = tuple(idx)
            if len(idx) != nargs or list(idx) != sorted(set(idx)):
                raise ValueError(f"bad frame index {idx}")
            vec = tuple(self._as_poly(v) for v in vec)
            if len(vec) != k:
                raise ValueError("frame value has wrong length")
            if any(not v.is_zero() for v in vec):
                fstore[idx] = vec
        sstore = {}
        for idx, vec in (symbol or {}).items():
            idx = tuple(idx)
            if len(idx) != degree or list(idx) != sorted(set(idx)):
                raise ValueError(f"bad symbol index {idx}")
            vec = tuple(self._as_poly(v) for v in vec)
            if len(vec) != m:
                raise ValueError("symbol value has wrong length")
            if any(not v.is_zero() for v in vec):
                sstore[idx] = vec
        if degree < 0 and sstore:
            raise ValueError("sections carry no symbol")
        self.frame = fstore
        self.symbol = sstore

    def _as_poly(self, v):
        if isinstance(v, SuperElement):
            return v
        return self.gens.scalar(v)

    # -- basics --

    @property
    def n_args(self):
        return self.degree + 1

    def is_zero(self):
        return not self.frame and not self.symbol

    def __eq__(self, other):
        return (isinstance(other, MultiDerivation)
                and self.same_bundle(other) and self.degree == other.degree
                and self.frame == other.frame and self.symbol == other.symbol)

    __hash__ = None

    def same_bundle(self, other):
        return (self.gens == other.gens and self.m == other.m
                and self.k == other.k)

    def __add__(self, other):
        if not self.same_bundle(other) or self.degree != other.degree:
            raise BundleMismatch("adding incompatible multiderivations")
        frame = dict(self.frame)
        for idx, vec in other.frame.items():
            cur = frame.get(idx, (self.gens.zero(),) * self.k)
            frame[idx] = tuple(a + b for a, b in zip(cur, vec))
        symbol = dict(self.symbol)
        for idx, vec in other.symbol.items():
            cur = symbol.get(idx, (self.gens.zero(),) * self.m)
            symbol[idx] = tuple(a + b for a, b in zip(cur, vec))
        return MultiDerivation(self.gens, self.m, self.k, self.degree,
                               frame, symbol)

    def __neg__(self):
        return self * Fraction(-1)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        scalar = Fraction(scalar)
        return MultiDerivation(
            self.gens, self.m, self.k, self.degree,
            {i: tuple(scalar * v for v in vec)
             for i, vec in self.frame.items()},
            {i: tuple(scalar * v for v in vec)
             for i, vec in self.symbol.items()})

    __rmul__ = __mul__

    def __repr__(self):
        return (f"MultiDerivation(degree={self.degree}, m={self.m}, "
                f"k={self.k}, frame={self.frame}, symbol={self.symbol})")

    @classmethod
    def zero(cls, gens, m, k, degree):
        return cls(gens, m, k, degree)

    # -- sections --

    def basis_section(self, alpha):
        return tuple(self.gens.one() if t == alpha else self.gens.zero()
                     for t in range(self.k))

    def frame_value(self, idx):
        key, sign = _sort_sign(idx)
        if key is None:
            return (self.gens.zero(),) * self.k
        vec = self.frame.get(key)
        if vec is None:
            return (self.gens.zero(),) * self.k
        return tuple(sign * v for v in vec)

    def symbol_value(self, idx):
        key, sign = _sort_sign(idx)
        if key is None:
            return (self.gens.zero(),) * self.m
        vec = self.symbol.get(key)
        if vec is None:
            return (self.gens.zero(),) * self.m
        return tuple(sign * v for v in vec)

    def sigma(self, sections):
        """The symbol evaluated on sections: a base vector field."""
        p = self.degree
        assert len(sections) == p
        out = [self.gens.zero() for _ in range(self.m)]
        for idx in itertools.combinations(range(self.k), p):
            vec = self.symbol.get(idx)
            if vec is None:
                continue
            coeff = _det([[sections[i][idx[j]] for j in range(p)]
                          for i in range(p)], self.gens)
            if coeff.is_zero():
                continue
            for t in range(self.m):
                out[t] = out[t] + coeff * vec[t]
        return tuple(out)

    def sigma_apply(self, sections, f):
        """sigma_D(sections)(f) for a polynomial f on the base."""
        vf = self.sigma(sections)
        acc = self.gens.zero()
        for t in range(self.m):
            if not vf[t].is_zero():
                acc = acc + vf[t] * f.partial_even(self.gens.even[t])
        return acc

    def evaluate(self, sections):
        """Apply to polynomial sections (each a k-tuple of polynomials)."""
        n = self.n_args
        assert len(sections) == n
        if n == 0:
            return self.frame.get((), (self.gens.zero(),) * self.k)
        out = [self.gens.zero() for _ in range(self.k)]
        for idx in itertools.combinations(range(self.k), n):
            vec = self.frame.get(idx)
            if vec is None:
                continue
            coeff = _det([[sections[i][idx[j]] for j in range(n)]
                          for i in range(n)], self.gens)
            if coeff.is_zero():
                continue
            for t in range(self.k):
                out[t] = out[t] + coeff * vec[t]
        if self.degree >= 1 or (self.degree == 0 and self.symbol):
            for i in range(n):
                others = sections[:i] + sections[i + 1:]
                sign = (-1) ** (n - 1 - i)
                for alpha in range(self.k):
                    f = sections[i][alpha]
                    if f.is_zero():
                        continue
                    corr = self.sigma_apply(others, f)
                    if not corr.is_zero():
                        out[alpha] = out[alpha] + sign * corr
        return tuple(out)


def multiderivation_of_multimap(f, gens=None):
    """Point-case embedding: an (n+1)-ary MultiMap as a degree-n
    multiderivation over an empty base (m = 0)."""
    if gens is None:
        gens = base_gens(0)
    frame = {idx: tuple(gens.scalar(v) for v in vec)
             for idx, vec in f.c.items()}
    return MultiDerivation(gens, 0, f.dim, f.n - 1, frame)


def multimap_of_multiderivation(D):
    if D.m != 0:
        raise BundleMismatch("only point-case multiderivations are multimaps")
    c = {}
    for idx, vec in D.frame.items():
        c[idx] = tuple(next(iter(v.terms.values())) if v.terms else Fraction(0)
                       for v in vec)
    return MultiMap(D.degree + 1, D.k, c)


def tm_bracket_structure(m, gens=None):
    """The commutator of vector fields on R^m as a degree-1
    multiderivation of the tangent model (k = m, anchor = identity)."""
    if gens is None:
        gens = base_gens(m)
    symbol = {}
    for i in range(m):
        vec = [gens.zero()] * m
        vec[i] = gens.one()
        symbol[(i,)] = tuple(vec)
    return MultiDerivation(gens, m, m, 1, {}, symbol)


# ---------------------------------------------------------------------------
# Crainic-Moerdijk bracket
# ---------------------------------------------------------------------------

def _cm_circ(D1, D2, sections):
    """D1 o D2 on the given sections: sum over (q+1, p)-shuffles of
    plugging D2 of the first block into the first slot of D1."""
    p, q = D1.degree, D2.degree
    acc = [D1.gens.zero() for _ in range(D1.k)]
    for pos_in, pos_rest, sign in shuffles(q + 1, p):
        inner = D2.evaluate([sections[t] for t in pos_in])
        args = [inner] + [sections[t] for t in pos_rest]
        val = D1.evaluate(args)
        for t in range(D1.k):
            acc[t] = acc[t] + sign * val[t]
    return tuple(acc)


def _sigma_circ(D1, D2, sections):
    """sigma_{D1} o D2 on p+q sections (empty when D1 has no symbol
    slots)."""
    p, q = D1.degree, D2.degree
    m = D1.m
    if p <= 0:
        return (D1.gens.zero(),) * m
    acc = [D1.gens.zero() for _ in range(m)]
    for pos_in, pos_rest, sign in shuffles(q + 1, p - 1):
        inner = D2.evaluate([sections[t] for t in pos_in])
        args = [inner] + [sections[t] for t in pos_rest]
        val = D1.sigma(args)
        for t in range(m):
            acc[t] = acc[t] + sign * val[t]
    return tuple(acc)


def cm_bracket(D1, D2):
    """[D1, D2] = (-1)^{pq} D1 o D2 - D2 o D1 with the matching symbol

        sigma = (-1)^{pq} sigma_{D1} o D2 - sigma_{D2} o D1
                + [sigma_{D1}, sigma_{D2}].
    """
    if not D1.same_bundle(D2):
        raise BundleMismatch("multiderivations over different bundles")
    p, q = D1.degree, D2.degree
    r = p + q
    if r < -1:
        raise ValueError("bracket of two sections is not defined")
    gens, m, k = D1.gens, D1.m, D1.k
    sign_pq = _psign(p * q)
    frame = {}
    for idx in itertools.combinations(range(k), r + 1):
        secs = [D1.basis_section(a) for a in idx]
        t1 = _cm_circ(D1, D2, secs)
        t2 = _cm_circ(D2, D1, secs)
        vec = tuple(sign_pq * a - b for a, b in zip(t1, t2))
        if any(not v.is_zero() for v in vec):
            frame[idx] = vec
    symbol = {}
    if r >= 0:
        for idx in itertools.combinations(range(k), r):
            secs = [D1.basis_section(a) for a in idx]
            s1 = _sigma_circ(D1, D2, secs)
            s2 = _sigma_circ(D2, D1, secs)
            acc = [sign_pq * a - b for a, b in zip(s1, s2)]
            if p >= 0 and q >= 0:
                for pos1, pos2, sh_sign in shuffles(p, q):
                    X = D1.sigma([secs[t] for t in pos1])
                    Y = D2.sigma([secs[t] for t in pos2])
                    comm = _vf_commutator(gens, m, X, Y)
                    for t in range(m):
                        acc[t] = acc[t] + sh_sign * comm[t]
            if any(not v.is_zero() for v in acc):
                symbol[idx] = tuple(acc)
    if r == -1:
        return MultiDerivation(gens, m, k, -1, frame)
    return MultiDerivation(gens, m, k, r, frame, symbol)


def cm_differential(m_struct, D):
    """delta_m D = [m_struct, D]."""
    return cm_bracket(m_struct, D)


def tensorial_of_symbol(D):
    """The symbol of a tangent-model multiderivation, regarded as a
    tensorial multiderivation (frame table = symbol, zero symbol)."""
    if D.m != D.k:
        raise AnchorNotSurjective("tangent model requires k = m")
    return MultiDerivation(D.gens, D.m, D.k, D.degree - 1, dict(D.symbol))


# ---------------------------------------------------------------------------
# Grassmann derivations
# ---------------------------------------------------------------------------

def form_generators(m, k):
    """Generators for bundle forms: base coordinates x1..xm (even) and
    frame one-forms e1..ek (odd)."""
    return GeneratorSet([f"x{i + 1}" for i in range(m)],
                        [f"e{a + 1}" for a in range(k)])


def form_coefficient(form, alpha, base):
    """Coefficient polynomial of the odd monomial e_{alpha} (strictly
    increasing tuple) in a form, over the base generator set."""
    terms = {}
    for (e, o), c in form.terms.items():
        if o == tuple(alpha):
            terms[(tuple(e), ())] = c
    return SuperElement(base, terms)


def _poly_to_form(poly, fgens):
    """Reinterpret a base polynomial over the form generator set."""
    return SuperElement(fgens, {(tuple(e), ()): c
                                for (e, o), c in poly.terms.items()})


class GrassmannDerivation:
    """Degree-kdeg superderivation of the Grassmann algebra of bundle
    forms, determined by its action on the coordinate functions x^i and
    the frame one-forms e^a."""

    __slots__ = ("fgens", "m", "k", "kdeg", "fx", "fe")

    def __init__(self, fgens, m, k, kdeg, fx, fe):
        self.fgens = fgens
        self.m = m
        self.k = k
        self.kdeg = kdeg
        self.fx = tuple(fx)
        self.fe = tuple(fe)
        if len(self.fx) != m or len(self.fe) != k:
            raise ValueError("generator actions have wrong length")

    def same_bundle(self, other):
        return (self.fgens == other.fgens and self.m == other.m
                and self.k == other.k)

    def is_zero(self):
        return (all(f.is_zero() for f in self.fx)
                and all(f.is_zero() for f in self.fe))

    def __eq__(self, other):
        return (isinstance(other, GrassmannDerivation)
                and self.same_bundle(other) and self.kdeg == other.kdeg
                and self.fx == other.fx and self.fe == other.fe)

    __hash__ = None

    def __add__(self, other):
        if not self.same_bundle(other) or self.kdeg != other.kdeg:
            raise BundleMismatch("adding incompatible derivations")
        return GrassmannDerivation(
            self.fgens, self.m, self.k, self.kdeg,
            [a + b for a, b in zip(self.fx, other.fx)],
            [a + b for a, b in zip(self.fe, other.fe)])

    def __neg__(self):
        return self * Fraction(-1)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        scalar = Fraction(scalar)
        return GrassmannDerivation(self.fgens, self.m, self.k, self.kdeg,
                                   [scalar * f for f in self.fx],
                                   [scalar * f for f in self.fe])

    __rmul__ = __mul__

    def apply(self, form):
        """Extend to any form by the superderivation rule."""
        fgens = self.fgens
        out = fgens.zero()
        for (e, o), c in form.terms.items():
            # function part: D(x^e) wedge (odd part)
            odd_elt = fgens.monomial(1, odd_names=[fgens.odd[t] for t in o])
            for i in range(self.m):
                if e[i] == 0 or self.fx[i].is_zero():
                    continue
                de = list(e)
                de[i] -= 1
                mono = SuperElement(fgens, {(tuple(de), ()): c * e[i]})
                out = out + mono * self.fx[i] * odd_elt
            # one-form part with the superderivation sign
            even_elt = SuperElement(fgens, {(e, ()): c})
            for j, t in enumerate(o):
                sign = _psign(j * self.kdeg)
                prefix = fgens.monomial(
                    1, odd_names=[fgens.odd[u] for u in o[:j]])
                suffix = fgens.monomial(
                    1, odd_names=[fgens.odd[u] for u in o[j + 1:]])
                out = out + sign * even_elt * prefix * self.fe[t] * suffix
        return out

    def commutator(self, other):
        """[D1, D2] = D1 D2 - (-1)^{k1 k2} D2 D1."""
        if not self.same_bundle(other):
            raise BundleMismatch("derivations over different bundles")
        sign = _psign(self.kdeg * other.kdeg)
        fgens = self.fgens
        fx, fe = [], []
        for i in range(self.m):
            xi = fgens.gen(fgens.even[i])
            fx.append(self.apply(other.apply(xi))
                      - sign * other.apply(self.apply(xi)))
        for a in range(self.k):
            ea = fgens.gen(fgens.odd[a])
            fe.append(self.apply(other.apply(ea))
                      - sign * other.apply(self.apply(ea)))
        return GrassmannDerivation(fgens, self.m, self.k,
                                   self.kdeg + other.kdeg, fx, fe)

    @classmethod
    def zero(cls, fgens, m, k, kdeg):
        return cls(fgens, m, k, kdeg,
                   [fgens.zero()] * m, [fgens.zero()] * k)


def grassmann_L(D, fgens=None):
    """The form-side derivation of a multiderivation: on functions it is
    the symbol, on frame one-forms minus the frame table."""
    if fgens is None:
        fgens = form_generators(D.m, D.k)
    p = D.degree
    fx = []
    for i in range(D.m):
        acc = fgens.zero()
        if p >= 0:
            for idx, vec in D.symbol.items():
                if vec[i].is_zero():
                    continue
                mono = fgens.monomial(1,
                                      odd_names=[fgens.odd[t] for t in idx])
                acc = acc + _poly_to_form(vec[i], fgens) * mono
        fx.append(acc)
    fe = []
    for b in range(D.k):
        acc = fgens.zero()
        sgn = 1 if p == -1 else -1
        for idx, vec in D.frame.items():
            if vec[b].is_zero():
                continue
            mono = fgens.monomial(1, odd_names=[fgens.odd[t] for t in idx])
            acc = acc + sgn * _poly_to_form(vec[b], fgens) * mono
        fe.append(acc)
    return GrassmannDerivation(fgens, D.m, D.k, p, fx, fe)


def grassmann_R(Dform, base=None):
    """Inverse of grassmann_L: read symbol and frame table back off the
    generator actions."""
    if base is None:
        base = base_gens(Dform.m)
    kdeg = Dform.kdeg
    m, k = Dform.m, Dform.k
    sgn = 1 if kdeg == -1 else -1
    frame = {}
    for idx in itertools.combinations(range(k), kdeg + 1):
        vec = [sgn * form_coefficient(Dform.fe[b], idx, base)
               for b in range(k)]
        if any(not v.is_zero() for v in vec):
            frame[idx] = tuple(vec)
    symbol = {}
    if kdeg >= 0:
        for idx in itertools.combinations(range(k), kdeg):
            vec = [form_coefficient(Dform.fx[i], idx, base)
                   for i in range(m)]
            if any(not v.is_zero() for v in vec):
                symbol[idx] = tuple(vec)
    if kdeg == -1:
        return MultiDerivation(base, m, k, -1, frame)
    return MultiDerivation(base, m, k, kdeg, frame, symbol)


def insertion_operator(fgens, m, k, L, kdeg):
    """The algebraic derivation i_L for a frame-valued form L given as
    {increasing (kdeg+1)-tuple: k-tuple of base polynomials}."""
    fx = [fgens.zero() for _ in range(m)]
    fe = []
    for b in range(k):
        acc = fgens.zero()
        for idx, vec in L.items():
            if vec[b].is_zero():
                continue
            mono = fgens.monomial(1, odd_names=[fgens.odd[t] for t in idx])
            acc = acc + _poly_to_form(vec[b], fgens) * mono
        fe.append(acc)
    return GrassmannDerivation(fgens, m, k, kdeg, fx, fe)


def tangent_d(fgens, m):
    """The de Rham differential of the tangent model in the coordinate
    frame: d x^i = e^i, d e^i = 0."""
    fx = [fgens.gen(fgens.odd[i]) for i in range(m)]
    fe = [fgens.zero() for _ in range(m)]
    return GrassmannDerivation(fgens, m, m, 1, fx, fe)


def lie_operator(fgens, m, K, kdeg):
    """Lie_K = [i_K, d] for a tangent-model form K in Omega^kdeg(M, TM)
    given as {increasing kdeg-tuple: m-tuple of base polynomials}."""
    iK = insertion_operator(fgens, m, m, K, kdeg - 1)
    return iK.commutator(tangent_d(fgens, m))


def algebraic_decompose(Dform, base=None):
    """Split a tangent-model Grassmann derivation as Lie_K + i_L with
    K in Omega^kdeg(M, TM) and L in Omega^{kdeg+1}(M, TM), both unique.
    """
    if Dform.m != Dform.k:
        raise AnchorNotSurjective("decomposition implemented for the "
                                  "tangent model k = m only")
    if base is None:
        base = base_gens(Dform.m)
    m, kdeg = Dform.m, Dform.kdeg
    K = {}
    for idx in itertools.combinations(range(m), kdeg):
        vec = [form_coefficient(Dform.fx[i], idx, base) for i in range(m)]
        if any(not v.is_zero() for v in vec):
            K[idx] = tuple(vec)
    rest = Dform - lie_operator(Dform.fgens, m, K, kdeg)
    if any(not f.is_zero() for f in rest.fx):
        raise AnchorNotSurjective("residual action on functions; "
                                  "derivation is not of tangent type")
    L = {}
    for idx in itertools.combinations(range(m), kdeg + 1):
        vec = [form_coefficient(rest.fe[b], idx, base) for b in range(m)]
        if any(not v.is_zero() for v in vec):
            L[idx] = tuple(vec)
    return K, L


# ---------------------------------------------------------------------------
# the isomorphism with fiberwise-linear multivector fields
# ---------------------------------------------------------------------------

def multivector_generators(m, k):
    """Generators for multivector fields on the dual bundle: base
    coordinates x1..xm and linear fiber coordinates v1..vk (even), with
    conjugate odd symbols xh1..xhm, vh1..vhk in matching order."""
    even = [f"x{i + 1}" for i in range(m)] + [f"v{a + 1}" for a in range(k)]
    odd = [f"xh{i + 1}" for i in range(m)] + [f"vh{a + 1}" for a in range(k)]
    return GeneratorSet(even, odd)


def _mv_eval(P, glist):
    """P(dg_1, ..., dg_r) for a homogeneous r-vector field P, by the
    determinant convention."""
    gens = P.gens
    r = len(glist)
    acc = gens.zero()
    for (e, o), c in P.terms.items():
        if len(o) != r:
            continue
        entries = [[g.partial_even(gens.even[oj]) for oj in o]
                   for g in glist]
        d = _det(entries, gens)
        if d.is_zero():
            continue
        acc = acc + SuperElement(gens, {(e, ()): c}) * d
    return acc


def _fiber_split(F, m, k, base, want_weight):
    """Split a function on the dual bundle: fiber-linear F into k section
    components (want_weight = 1) or basic F into one polynomial
    (want_weight = 0)."""
    if want_weight == 1:
        comps = [base.zero() for _ in range(k)]
        for (e, o), c in F.terms.items():
            vpart = e[m:]
            if sum(vpart) != 1:
                raise NotHomogeneous("expected a fiberwise-linear function")
            beta = vpart.index(1)
            comps[beta] = comps[beta] + SuperElement(
                base, {(tuple(e[:m]), ()): c})
        return comps
    out = base.zero()
    for (e, o), c in F.terms.items():
        if any(e[m:]):
            raise NotHomogeneous("expected a basic function")
        out = out + SuperElement(base, {(tuple(e[:m]), ()): c})
    return out


def iso_I(P, m, k, base=None):
    """Map a homogeneous fiberwise-linear multivector field on the dual
    bundle to a multiderivation: a kdeg-vector field of fiber weight
    1 - kdeg goes to degree kdeg - 1."""
    gens = multivector_generators(m, k)
    if P.gens != gens:
        raise BundleMismatch("multivector field over unexpected generators")
    if base is None:
        base = base_gens(m)
    kdeg = P.odd_degree()
    if not P.is_zero():
        w = euler_weight(P, [f"v{a + 1}" for a in range(k)],
                         [f"vh{a + 1}" for a in range(k)])
        if w != 1 - kdeg:
            raise NotHomogeneous(
                f"fiber weight {w}, expected {1 - kdeg}")
    sgn = (-1) ** (kdeg * (kdeg - 1) // 2)
    vgens = [gens.gen(f"v{a + 1}") for a in range(k)]
    xgens = [gens.gen(f"x{i + 1}") for i in range(m)]
    frame = {}
    for idx in itertools.combinations(range(k), kdeg):
        F = sgn * _mv_eval(P, [vgens[a] for a in idx])
        comps = _fiber_split(F, m, k, base, 1)
        if any(not v.is_zero() for v in comps):
            frame[idx] = tuple(comps)
    symbol = {}
    if kdeg >= 1:
        for idx in itertools.combinations(range(k), kdeg - 1):
            vec = []
            for i in range(m):
                F = sgn * _mv_eval(P, [vgens[a] for a in idx] + [xgens[i]])
                vec.append(_fiber_split(F, m, k, base, 0))
            if any(not v.is_zero() for v in vec):
                symbol[idx] = tuple(vec)
    if kdeg == 0:
        return MultiDerivation(base, m, k, -1, frame)
    return MultiDerivation(base, m, k, kdeg - 1, frame, symbol)


def _md_coords(D, xmonos):
    """Flatten frame and symbol onto coordinates indexed by
    (kind, index-tuple, component, x-monomial)."""
    vec = {}
    for idx, comps in D.frame.items():
        for t, poly in enumerate(comps):
            for (e, o), c in poly.terms.items():
                vec[("f", idx, t, e)] = c
                xmonos.add(e)
    for idx, comps in D.symbol.items():
        for t, poly in enumerate(comps):
            for (e, o), c in poly.terms.items():
                vec[("s", idx, t, e)] = c
                xmonos.add(e)
    return vec


def iso_I_inv(D, base=None):
    """Inverse of iso_I, by exact linear solve over the finitely many
    base monomials occurring in D."""
    m, k = D.m, D.k
    gens = multivector_generators(m, k)
    kdeg = D.degree + 1
    xmonos = set()
    target = _md_coords(D, xmonos)
    if not xmonos:
        xmonos.add((0,) * m)
    candidates = []
    for xe in sorted(xmonos):
        xpart = {f"x{i + 1}": xe[i] for i in range(m) if xe[i]}
        for beta in range(k):
            for alpha in itertools.combinations(range(k), kdeg):
                mono = gens.monomial(
                    1, {**xpart, f"v{beta + 1}": 1},
                    [f"vh{a + 1}" for a in alpha])
                candidates.append(mono)
        if kdeg >= 1:
            for i in range(m):
                for gam in itertools.combinations(range(k), kdeg - 1):
                    mono = gens.monomial(
                        1, xpart,
                        [f"xh{i + 1}"] + [f"vh{a + 1}" for a in gam])
                    candidates.append(mono)
    images = [iso_I(c, m, k, base=base) for c in candidates]
    coords = set(target)
    vecs = []
    for img in images:
        v = _md_coords(img, set())
        coords.update(v)
        vecs.append(v)
    coords = sorted(coords, key=repr)
    M = [[vecs[j].get(key, Fraction(0)) for j in range(len(vecs))]
         for key in coords]
    b = [target.get(key, Fraction(0)) for key in coords]
    status, sol = ratlin.solve(M, b)
    if status != "SOLUTION":
        raise NotHomogeneous("multiderivation is not in the image")
    P = gens.zero()
    for coeff, cand in zip(sol, candidates):
        if coeff:
            P = P + coeff * cand
    return P
