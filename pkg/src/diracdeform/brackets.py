"""Graded brackets on SuperElements.

Three bracket kinds share one context object:

* SCHOUTEN - the odd Poisson bracket on conjugate pairs (coordinate c
  paired with an odd symbol for d/dc), realizing the Schouten bracket
  of multivector fields with polynomial coefficients.
* ROTHSTEIN - the even super-Poisson bracket on (q, p; lower/upper odd)
  twisted by a connection, in its cotangent-base specialization.
* POINT_BIG - the same bracket over a point (no even generators, no
  connection): the big bracket on Lambda(V + V*).
"""

from fractions import Fraction

from .superalg import (
    ConnectionData,
    GeneratorSet,
    SuperElement,
    bidegree,
    bidegree_components,
    phase_generators,
)


class WrongContext(Exception):
    pass


class MissingConnection(Exception):
    pass


class WrongDegree(Exception):
    pass


SCHOUTEN = "SCHOUTEN"
ROTHSTEIN = "ROTHSTEIN"
POINT_BIG = "POINT_BIG"


def schouten_generators(coords, prefix="d"):
    """Generators for multivector fields in the given coordinates: one
    even generator per coordinate plus a conjugate odd symbol `d<name>`
    standing for the coordinate derivation."""
    odd = [f"{prefix}{c}" for c in coords]
    return GeneratorSet(coords, odd)


class BracketContext:
    """Carrier for one of the three brackets.

    SCHOUTEN contexts pair even generator i with odd generator
    `conjugate[i]`; ROTHSTEIN/POINT_BIG contexts run over the phase
    generator layout (see superalg.phase_generators) with `m` base
    coordinates and `k` dual pairs of odd generators.
    """

    def __init__(self, kind, gens, connection=None, conjugate=None,
                 m=None, k=None):
        self.kind = kind
        self.gens = gens
        self.connection = connection
        self.m = m
        self.k = k
        if kind == SCHOUTEN:
            if conjugate is None:
                conjugate = {i: i for i in range(len(gens.even))}
            self.conjugate = dict(conjugate)
            if sorted(self.conjugate.values()) != list(range(len(gens.odd))):
                raise ValueError("conjugate map must pair every odd generator")
        elif kind == ROTHSTEIN:
            if connection is None:
                raise MissingConnection("ROTHSTEIN context needs ConnectionData")
            self.m = connection.m
            self.k = connection.k
        elif kind == POINT_BIG:
            self.m = 0
            if k is None:
                k = len(gens.odd) // 2
            self.k = k
        else:
            raise ValueError(f"unknown bracket kind {kind!r}")

    # -- constructors ---------------------------------------------------

    @classmethod
    def schouten_on(cls, coords):
        gens = schouten_generators(coords)
        return cls(SCHOUTEN, gens)

    @classmethod
    def rothstein_on(cls, connection):
        return cls(ROTHSTEIN, connection.gens, connection=connection)

    @classmethod
    def point_big(cls, k):
        return cls(POINT_BIG, phase_generators(0, k), k=k)

    # -- dispatch -------------------------------------------------------

    def bracket(self, a, b):
        if self.kind == SCHOUTEN:
            return self.schouten(a, b)
        return self.rothstein(a, b)

    # -- Schouten -------------------------------------------------------

    def schouten(self, P, Q):
        """Odd Poisson bracket; graded antisymmetric with degree shift 1:
        [P,Q] = -(-1)^{(p-1)(q-1)} [Q,P] for odd degrees p, q."""
        if self.kind != SCHOUTEN:
            raise WrongContext(self.kind)
        out = self.gens.zero()
        for p, Pp in _split_odd(P).items():
            for q, Qq in _split_odd(Q).items():
                t1 = self._schouten_half(Pp, Qq)
                t2 = self._schouten_half(Qq, Pp)
                sign = (-1) ** ((p - 1) * (q - 1))
                out = out + t1 - sign * t2
        return out

    def _schouten_half(self, P, Q):
        out = self.gens.zero()
        for ci, oi in self.conjugate.items():
            dP = P.partial_odd(self.gens.odd[oi], "right")
            if dP.is_zero():
                continue
            dQ = Q.partial_even(self.gens.even[ci])
            if dQ.is_zero():
                continue
            out = out + dP * dQ
        return out

    # -- Rothstein / big bracket ---------------------------------------

    def _lower(self, alpha):
        return self.gens.odd[alpha]

    def _upper(self, alpha):
        return self.gens.odd[self.k + alpha]

    def nabla(self, i, phi):
        """Covariant q^i-derivative: rotates lower odd generators by
        +Gamma and upper ones by -Gamma^T."""
        out = phi.partial_even(self.gens.even[i])
        conn = self.connection
        if conn is None:
            return out
        for alpha in range(self.k):
            dlo = phi.partial_odd(self._lower(alpha), "left")
            dup = phi.partial_odd(self._upper(alpha), "left")
            for beta in range(self.k):
                gam = conn.christoffel(i, alpha, beta)
                if not gam.is_zero() and not dlo.is_zero():
                    out = out + gam * self.gens.gen(self._lower(beta)) * dlo
                gam2 = conn.christoffel(i, beta, alpha)
                if not gam2.is_zero() and not dup.is_zero():
                    out = out - gam2 * self.gens.gen(self._upper(beta)) * dup
        return out

    def rothstein(self, phi, psi):
        """Five-term even super-Poisson bracket {phi, psi}."""
        if self.kind not in (ROTHSTEIN, POINT_BIG):
            raise WrongContext(self.kind)
        gens = self.gens
        out = gens.zero()
        m, k = self.m, self.k
        dp_phi = [phi.partial_even(gens.even[m + i]) for i in range(m)]
        dp_psi = [psi.partial_even(gens.even[m + i]) for i in range(m)]
        for i in range(m):
            out = out + self.nabla(i, phi) * dp_psi[i]
            out = out - dp_phi[i] * self.nabla(i, psi)
        if self.connection is not None:
            for i in range(m):
                if dp_phi[i].is_zero():
                    continue
                for j in range(m):
                    if dp_psi[j].is_zero():
                        continue
                    for alpha in range(k):
                        for beta in range(k):
                            R = self.connection.curvature(i, j, beta, alpha)
                            if R.is_zero():
                                continue
                            out = out + (R * gens.gen(self._lower(alpha))
                                         * gens.gen(self._upper(beta))
                                         * dp_phi[i] * dp_psi[j])
        for alpha in range(k):
            jlo = phi.partial_odd(self._lower(alpha), "right")
            if not jlo.is_zero():
                out = out + jlo * psi.partial_odd(self._upper(alpha), "left")
            jup = phi.partial_odd(self._upper(alpha), "right")
            if not jup.is_zero():
                out = out + jup * psi.partial_odd(self._lower(alpha), "left")
        return out

    def darboux_momenta(self):
        """r_i = p_i - Gamma_{i alpha}^beta a^alpha a_beta."""
        if self.kind != ROTHSTEIN:
            raise WrongContext(self.kind)
        gens = self.gens
        out = []
        for i in range(self.m):
            r = gens.gen(gens.even[self.m + i])
            for alpha in range(self.k):
                for beta in range(self.k):
                    gam = self.connection.christoffel(i, alpha, beta)
                    if not gam.is_zero():
                        r = r - (gam * gens.gen(self._upper(alpha))
                                 * gens.gen(self._lower(beta)))
            out.append(r)
        return out


def _split_odd(a):
    """Decompose into odd-homogeneous components {degree: element}."""
    comps = {}
    for (e, o), c in a.terms.items():
        comps.setdefault(len(o), {})[(e, o)] = c
    return {d: SuperElement(a.gens, t) for d, t in comps.items()}


def derived_bracket(ctx, theta, x, y):
    """{{x, theta}, y}."""
    return ctx.bracket(ctx.bracket(x, theta), y)


def derived_diff(ctx, theta, x):
    """{theta, x}."""
    return ctx.bracket(theta, x)


def master_residuals(ctx, theta):
    """{Theta, Theta} and its five bidegree components.

    Theta must be chi-homogeneous of degree 3 (chi = epsilon + lambda);
    its bidegree parts are phi (0,3), mu (1,2), gamma (2,1), psi (3,0).
    The returned components sum to {Theta, Theta}/2.
    """
    gens = ctx.gens
    for mkey in theta.terms:
        eps, lam = bidegree(gens, mkey)
        if eps + lam != 3:
            raise WrongDegree(f"monomial of chi-degree {eps + lam}, expected 3")
    parts = bidegree_components(theta)
    phi = parts.get((0, 3), gens.zero())
    mu = parts.get((1, 2), gens.zero())
    gam = parts.get((2, 1), gens.zero())
    psi = parts.get((3, 0), gens.zero())
    br = ctx.bracket
    half = Fraction(1, 2)
    components = {
        (1, 3): half * br(mu, mu) + br(gam, phi),
        (3, 1): half * br(gam, gam) + br(mu, psi),
        (2, 2): br(mu, gam) + br(phi, psi),
        (0, 4): br(mu, phi),
        (4, 0): br(gam, psi),
    }
    return {"total": br(theta, theta), "components": components}
