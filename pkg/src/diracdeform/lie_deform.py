"""Order-by-order formal deformation engine for Lie algebra structures
and their linear-Poisson mirror.

A deformation mu_t = mu_0 + t mu_1 + ... of a Lie bracket satisfies the
Jacobi identity iff its Nijenhuis-Richardson square vanishes; order by
order this reads

    delta mu_k = 1/2 sum_{i=1}^{k-1} [mu_i, mu_{k-i}]_NR  =: R_k

with delta the Chevalley-Eilenberg differential of mu_0.  R_k is always
delta-closed; extending the series one order amounts to an exact linear
solve, and a failure produces a certified nonzero class in H^3.
"""

import itertools
from fractions import Fraction

from . import ratlin
from .multilinear import (
    MultiMap,
    _cochain_basis,
    _delta_matrix,
    _from_vector,
    _to_vector,
    _zvec,
    ce_differential,
    cohomology,
    is_lie,
    iso_I,
    multivector_generators,
    nr_bracket,
)
from .brackets import SCHOUTEN, BracketContext
from .superalg import NotHomogeneous, euler_weight

DEFAULT_ORDER = 8


class Order0NotLie(Exception):
    pass


class PreconditionMC(Exception):
    pass


class NotInvertible(Exception):
    pass


# ---------------------------------------------------------------------------
# formal power series
# ---------------------------------------------------------------------------

class FormalSeries:
    """Truncated formal power series a_0 + t a_1 + ... + t^N a_N with
    coefficients in any additive space; products are Cauchy convolutions
    against a caller-supplied bilinear multiplication."""

    __slots__ = ("order", "coeffs", "zero")

    def __init__(self, order, coeffs, zero):
        coeffs = list(coeffs)
        if len(coeffs) > order + 1:
            raise ValueError("more coefficients than the truncation order")
        while len(coeffs) < order + 1:
            coeffs.append(zero)
        self.order = order
        self.coeffs = coeffs
        self.zero = zero

    def __getitem__(self, k):
        if 0 <= k <= self.order:
            return self.coeffs[k]
        return self.zero

    def __eq__(self, other):
        return (isinstance(other, FormalSeries) and self.order == other.order
                and self.coeffs == other.coeffs)

    __hash__ = None

    def __add__(self, other):
        n = min(self.order, other.order)
        return FormalSeries(n, [self[k] + other[k] for k in range(n + 1)],
                            self.zero)

    def __sub__(self, other):
        n = min(self.order, other.order)
        return FormalSeries(n, [self[k] - other[k] for k in range(n + 1)],
                            self.zero)

    def __neg__(self):
        return FormalSeries(self.order, [-c for c in self.coeffs], self.zero)

    def scale(self, scalar):
        scalar = Fraction(scalar)
        return FormalSeries(self.order,
                            [scalar * c for c in self.coeffs], self.zero)

    def convolve(self, other, mul, zero=None):
        """Cauchy product using the bilinear multiplication mul."""
        n = min(self.order, other.order)
        if zero is None:
            zero = self.zero
        out = []
        for k in range(n + 1):
            acc = zero
            for i in range(k + 1):
                acc = acc + mul(self[i], other[k - i])
            out.append(acc)
        return FormalSeries(n, out, zero)

    def shift(self, j):
        """Multiply by t^j."""
        coeffs = [self.zero] * j + self.coeffs
        return FormalSeries(self.order, coeffs[:self.order + 1], self.zero)

    def is_zero(self):
        return all(_coeff_is_zero(c) for c in self.coeffs)

    def lowest_order(self):
        for k, c in enumerate(self.coeffs):
            if not _coeff_is_zero(c):
                return k
        return None


def _coeff_is_zero(c):
    if hasattr(c, "is_zero"):
        return c.is_zero()
    return c == 0


def series_exponential(a, mul, unit):
    """exp of a series whose constant term vanishes."""
    if not _coeff_is_zero(a[0]):
        raise ValueError("exp needs a series starting at order >= 1")
    out = FormalSeries(a.order, [unit], a.zero)
    power = FormalSeries(a.order, [unit], a.zero)
    fact = 1
    for j in range(1, a.order + 1):
        power = power.convolve(a, mul)
        fact *= j
        out = out + power.scale(Fraction(1, fact))
    return out


def series_logarithm(a, mul, unit):
    """ln of a series with constant term equal to the unit."""
    if not _coeff_is_zero(a[0] - unit):
        raise ValueError("ln needs a series with unit constant term")
    b = a - FormalSeries(a.order, [unit], a.zero)
    out = FormalSeries(a.order, [], a.zero)
    power = FormalSeries(a.order, [unit], a.zero)
    for j in range(1, a.order + 1):
        power = power.convolve(b, mul)
        out = out + power.scale(Fraction((-1) ** (j + 1), j))
    return out


# ---------------------------------------------------------------------------
# linear-map series helpers (arity-1 MultiMaps)
# ---------------------------------------------------------------------------

def identity_map(dim):
    return MultiMap(1, dim, {(i,): tuple(Fraction(1) if t == i else 0
                                         for t in range(dim))
                             for i in range(dim)})


def compose_linear(a, b):
    """a after b, both arity-1 MultiMaps."""
    dim = a.dim
    c = {}
    for i in range(dim):
        inner = b.eval_indices((i,))
        vec = list(_zvec(dim))
        for g, coeff in enumerate(inner):
            if coeff == 0:
                continue
            out = a.eval_indices((g,))
            for t in range(dim):
                vec[t] += coeff * out[t]
        if any(vec):
            c[(i,)] = tuple(vec)
    return MultiMap(1, dim, c)


def invert_series(phi, dim):
    """Inverse of a linear-map series with invertible leading term (the
    engine requires phi_0 = id)."""
    if phi[0] != identity_map(dim):
        raise NotInvertible("series must start at the identity")
    inv = [identity_map(dim)]
    for k in range(1, phi.order + 1):
        acc = MultiMap.zero(1, dim)
        for i in range(1, k + 1):
            acc = acc + compose_linear(phi[i], inv[k - i])
        inv.append(-acc)
    return FormalSeries(phi.order, inv, MultiMap.zero(1, dim))


def _post_compose(lm, f):
    """lm(f(...)) for a linear map lm and an n-ary MultiMap f."""
    c = {}
    for idx, vec in f.c.items():
        out = list(_zvec(f.dim))
        for g, coeff in enumerate(vec):
            if coeff == 0:
                continue
            val = lm.eval_indices((g,))
            for t in range(f.dim):
                out[t] += coeff * val[t]
        if any(out):
            c[idx] = tuple(out)
    return MultiMap(f.n, f.dim, c)


def _pre_compose2(f, phi_a, phi_b):
    """f(phi_a x, phi_b y) antisymmetrized, for a 2-ary MultiMap f."""
    dim = f.dim
    c = {}
    for a, b in itertools.combinations(range(dim), 2):
        va = phi_a.eval_indices((a,))
        vb = phi_b.eval_indices((b,))
        out = list(_zvec(dim))
        for i, ca in enumerate(va):
            if ca == 0:
                continue
            for j, cb in enumerate(vb):
                if cb == 0:
                    continue
                val = f.eval_indices((i, j))
                for t in range(dim):
                    out[t] += ca * cb * val[t]
        if any(out):
            c[(a, b)] = tuple(out)
    return MultiMap(2, dim, c)


# ---------------------------------------------------------------------------
# Maurer-Cartan machinery
# ---------------------------------------------------------------------------

def mc_residual_lie(mu_series):
    """Per-order residuals of [mu_t, mu_t]_NR; the order-0 coefficient
    must be a Lie structure."""
    mu0 = mu_series[0]
    if not is_lie(mu0):
        raise Order0NotLie("order-0 term violates the Jacobi identity")
    dim = mu0.dim
    n = mu_series.order
    out = []
    for k in range(n + 1):
        acc = MultiMap.zero(3, dim)
        for i in range(k + 1):
            acc = acc + nr_bracket(mu_series[i], mu_series[k - i])
        out.append(acc)
    return FormalSeries(n, out, MultiMap.zero(3, dim))


class ObstructionCertificate:
    """Outcome of one extension order: the closed cocycle R_k together
    with either a solution mu_k of delta mu_k = R_k or an inconsistency
    witness proving R_k is not exact."""

    def __init__(self, order, cocycle, closedness, solution=None,
                 witness=None):
        if (solution is None) == (witness is None):
            raise ValueError("exactly one of solution/witness required")
        self.order = order
        self.cocycle = cocycle
        self.closedness = closedness
        self.solution = solution
        self.witness = witness

    @property
    def extends(self):
        return self.solution is not None

    def verify(self, mu0):
        """Re-check the stored evidence from scratch."""
        assert self.closedness.is_zero()
        assert ce_differential(mu0, self.cocycle) == self.closedness
        if self.solution is not None:
            assert ce_differential(mu0, self.solution) == self.cocycle
            return True
        # witness y: y^T delta = 0 and y^T R != 0
        dim = mu0.dim
        M = _delta_matrix(mu0, 2)
        cod = _cochain_basis(3, dim)
        r = _to_vector(self.cocycle, cod)
        y = self.witness
        for col in zip(*M):
            assert sum(a * b for a, b in zip(y, col)) == 0
        assert sum(a * b for a, b in zip(y, r)) != 0
        return True


def extend_one_order(prefix):
    """Given mu_0..mu_{k-1} satisfying MC through order k-1, solve for
    mu_k or certify the obstruction class."""
    k = len(prefix)
    if k == 0:
        raise ValueError("need at least mu_0")
    mu0 = prefix[0]
    dim = mu0.dim
    series = FormalSeries(k - 1, list(prefix), MultiMap.zero(2, dim))
    residual = mc_residual_lie(series)
    for j in range(1, k):
        if not residual[j].is_zero():
            raise PreconditionMC(f"MC fails already at order {j}")
    # R_k = 1/2 sum_{i=1}^{k-1} [mu_i, mu_{k-i}]
    R = MultiMap.zero(3, dim)
    for i in range(1, k):
        R = R + nr_bracket(prefix[i], prefix[k - i])
    R = Fraction(1, 2) * R
    closed = ce_differential(mu0, R)
    assert closed.is_zero(), "obstruction cocycle is not closed"
    M = _delta_matrix(mu0, 2)
    cod = _cochain_basis(3, dim)
    dom = _cochain_basis(2, dim)
    b = _to_vector(R, cod)
    if M and M[0]:
        status, w = ratlin.solve(M, b)
    else:
        status, w = ("SOLUTION", [Fraction(0)] * len(dom)) if not any(b) \
            else ("INCONSISTENT", None)
    if status == "SOLUTION":
        return ObstructionCertificate(k, R, closed,
                                      solution=_from_vector(w, 2, dim, dom))
    return ObstructionCertificate(k, R, closed, witness=w)


def extend_series(prefix, order=DEFAULT_ORDER):
    """Extend a valid MC prefix up to the given truncation order.

    Returns (coefficients, certificates); stops early at the first
    obstruction."""
    coeffs = list(prefix)
    certs = []
    while len(coeffs) <= order:
        cert = extend_one_order(coeffs)
        certs.append(cert)
        if not cert.extends:
            break
        coeffs.append(cert.solution)
    return coeffs, certs


def apply_equivalence(phi_series, mu_series):
    """mu'_t(x, y) = phi_t^{-1}(mu_t(phi_t x, phi_t y))."""
    dim = mu_series[0].dim
    inv = invert_series(phi_series, dim)
    n = min(phi_series.order, mu_series.order)
    out = []
    for kk in range(n + 1):
        acc = MultiMap.zero(2, dim)
        for a in range(kk + 1):
            for b2 in range(kk - a + 1):
                c = kk - a - b2
                inner = _pre_compose2(mu_series[a], phi_series[b2],
                                      phi_series[c])
                acc = acc + inner
        out.append(acc)
    pre = FormalSeries(n, out, MultiMap.zero(2, dim))
    final = []
    for kk in range(n + 1):
        acc = MultiMap.zero(2, dim)
        for d in range(kk + 1):
            acc = acc + _post_compose(inv[d], pre[kk - d])
        final.append(acc)
    return FormalSeries(n, final, MultiMap.zero(2, dim))


def gerstenhaber_normalize(mu_series, order):
    """If mu_order is exact, return (phi_series, normalized series) with
    the order-n term removed; otherwise return None."""
    mu0 = mu_series[0]
    dim = mu0.dim
    M = _delta_matrix(mu0, 1)
    dom = _cochain_basis(1, dim)
    cod = _cochain_basis(2, dim)
    b = _to_vector(mu_series[order], cod)
    status, w = ratlin.solve(M, b)
    if status != "SOLUTION":
        return None
    phi_n = _from_vector(w, 1, dim, dom)
    coeffs = [identity_map(dim)]
    coeffs += [MultiMap.zero(1, dim)] * (order - 1)
    # mu'_1..: removing t^n mu_n needs phi_t = id - t^n phi_n since
    # mu'_n - mu_n = delta phi_n and [mu0, phi]_NR = delta phi here
    coeffs.append(-phi_n)
    phi = FormalSeries(mu_series.order, coeffs, MultiMap.zero(1, dim))
    return phi, apply_equivalence(phi, mu_series)


def rigidity_check(mu0):
    """("RIGID" | "NOT_RIGID", dim H^2)."""
    h2, _ = cohomology(mu0, 2)
    return ("RIGID" if h2 == 0 else "NOT_RIGID", h2)


# ---------------------------------------------------------------------------
# linear-Poisson mirror
# ---------------------------------------------------------------------------

def poisson_context(k):
    """Schouten context on the dual of a k-dimensional Lie algebra
    (point base: coordinates v_a with conjugate odd symbols vh_a)."""
    gens = multivector_generators(0, k)
    ctx = BracketContext(SCHOUTEN, gens,
                         conjugate={i: i for i in range(k)})
    return gens, ctx


def _check_linear_bivector(gens, k, P):
    if P.is_zero():
        return
    for (e, o) in P.terms:
        if len(o) != 2:
            raise NotHomogeneous("expected a bivector")
    w = euler_weight(P, [f"v{a + 1}" for a in range(k)],
                     [f"vh{a + 1}" for a in range(k)])
    if w != -1:
        raise NotHomogeneous(f"fiber weight {w}, expected -1")


def _linear_multivector_basis(gens, k, deg):
    """Monomial basis of fiber-weight (1 - deg) multivectors with
    constant coefficients."""
    out = []
    for alpha in itertools.combinations(range(k), deg):
        for beta in range(k):
            out.append(gens.monomial(1, {f"v{beta + 1}": 1},
                                     [f"vh{a + 1}" for a in alpha]))
    return out


def _se_coords(elt, keys):
    return [elt.terms.get(key, Fraction(0)) for key in keys]


def linear_poisson_deform(prefix, k, order=None):
    """Order-by-order extension of a linear Poisson structure pi_t on
    the dual of a k-dimensional Lie algebra; mirrors extend_series.

    prefix is a list of SuperElements over multivector_generators(0, k),
    each a fiber-weight -1 bivector.  Returns (coefficients,
    certificates) where each certificate carries the Schouten-side
    cocycle and either a homogeneous solution or a witness.
    """
    gens, ctx = poisson_context(k)
    for P in prefix:
        _check_linear_bivector(gens, k, P)
    pi0 = prefix[0]
    if not ctx.schouten(pi0, pi0).is_zero():
        raise Order0NotLie("pi_0 is not Poisson")
    if order is None:
        order = DEFAULT_ORDER
    dom = _linear_multivector_basis(gens, k, 2)
    images = [ctx.schouten(pi0, b) for b in dom]
    keys = sorted({key for img in images for key in img.terms})
    M = [[img.terms.get(key, Fraction(0)) for img in images]
         for key in keys]
    coeffs = list(prefix)
    certs = []
    while len(coeffs) <= order:
        n = len(coeffs)
        R = gens.zero()
        for i in range(1, n):
            R = R + ctx.schouten(coeffs[i], coeffs[n - i])
        R = Fraction(1, 2) * R
        closed = ctx.schouten(pi0, R)
        assert closed.is_zero(), "obstruction cocycle is not closed"
        extra = [key for key in R.terms if key not in keys]
        if extra:
            cert = ObstructionPoisson(n, R, closed, witness="OUT_OF_IMAGE")
            certs.append(cert)
            break
        b = _se_coords(R, keys)
        if M and M[0]:
            status, w = ratlin.solve(M, b)
        else:
            status, w = ("SOLUTION", [Fraction(0)] * len(dom)) \
                if not any(b) else ("INCONSISTENT", [])
        if status == "SOLUTION":
            sol = gens.zero()
            for coeff, basis_elt in zip(w, dom):
                if coeff:
                    sol = sol + coeff * basis_elt
            cert = ObstructionPoisson(n, R, closed, solution=sol)
            certs.append(cert)
            coeffs.append(sol)
        else:
            certs.append(ObstructionPoisson(n, R, closed, witness=w))
            break
    return coeffs, certs


class ObstructionPoisson:
    """Schouten-side analogue of ObstructionCertificate."""

    def __init__(self, order, cocycle, closedness, solution=None,
                 witness=None):
        if (solution is None) == (witness is None):
            raise ValueError("exactly one of solution/witness required")
        self.order = order
        self.cocycle = cocycle
        self.closedness = closedness
        self.solution = solution
        self.witness = witness

    @property
    def extends(self):
        return self.solution is not None


def poisson_apply_equivalence(pi_series, X_series, k):
    """pi'_t = exp(t ad_{X_t}) pi_t for X_t a series of fiber-weight-0
    vector fields; first-order relation pi'_1 - pi_1 = [pi_0, X_0]."""
    gens, ctx = poisson_context(k)
    n = pi_series.order

    def ad(P):
        # t [P, X_t], order-by-order
        out = []
        for kk in range(n + 1):
            acc = gens.zero()
            for i in range(kk):
                acc = acc + ctx.schouten(P[kk - 1 - i], X_series[i])
            out.append(acc)
        return FormalSeries(n, out, gens.zero())

    out = pi_series
    term = pi_series
    fact = 1
    for j in range(1, n + 1):
        term = ad(term)
        fact *= j
        out = out + term.scale(Fraction(1, fact))
    return out
