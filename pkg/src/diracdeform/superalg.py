"""Free supercommutative algebra Q[even] (x) Lambda(odd).

Elements are sparse maps {(even_exponents, odd_index_tuple): Fraction}.
Odd index tuples are kept strictly increasing; the Koszul sign of every
reordering is absorbed into the coefficient at construction time, so
equality is plain dict comparison.

The monomial-merge inner loop lives in a small kernel; a compiled
version is used when available, with a pure-Python fallback.
"""

from fractions import Fraction

try:
    from ._mulkernel import merge_monomials
    KERNEL = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from ._kernel_py import merge_monomials
    KERNEL = "pure"


class GeneratorMismatch(Exception):
    pass


class UnknownGenerator(Exception):
    pass


class NotOddLinear(Exception):
    pass


class NotHomogeneous(Exception):
    pass


class ParseError(ValueError):
    pass


class GeneratorSet:
    """Named even and odd generators.

    `momentum` designates the even indices that count toward both sides
    of the (epsilon, lambda) bigrading; `odd_lower`/`odd_upper` split the
    odd indices for the same purpose and `odd_dual` pairs them.
    """

    def __init__(self, even, odd, momentum=(), odd_lower=(), odd_upper=(),
                 odd_dual=None):
        self.even = tuple(even)
        self.odd = tuple(odd)
        names = self.even + self.odd
        if len(set(names)) != len(names):
            raise ValueError("generator names must be unique")
        self._even_index = {n: i for i, n in enumerate(self.even)}
        self._odd_index = {n: i for i, n in enumerate(self.odd)}
        self.momentum = frozenset(momentum)
        self.odd_lower = frozenset(odd_lower)
        self.odd_upper = frozenset(odd_upper)
        self.odd_dual = dict(odd_dual) if odd_dual else {}

    @property
    def n_even(self):
        return len(self.even)

    def even_index(self, name):
        if name not in self._even_index:
            raise UnknownGenerator(name)
        return self._even_index[name]

    def odd_index(self, name):
        if name not in self._odd_index:
            raise UnknownGenerator(name)
        return self._odd_index[name]

    def __eq__(self, other):
        return (isinstance(other, GeneratorSet)
                and self.even == other.even and self.odd == other.odd
                and self.momentum == other.momentum
                and self.odd_lower == other.odd_lower
                and self.odd_upper == other.odd_upper
                and self.odd_dual == other.odd_dual)

    def __hash__(self):
        return hash((self.even, self.odd))

    def __repr__(self):
        return f"GeneratorSet(even={self.even}, odd={self.odd})"

    # -- element constructors -------------------------------------------

    def zero(self):
        return SuperElement(self, {})

    def one(self):
        return self.scalar(1)

    def scalar(self, c):
        c = Fraction(c)
        if c == 0:
            return self.zero()
        return SuperElement(self, {((0,) * self.n_even, ()): c})

    def gen(self, name):
        """The generator with the given name, as an element."""
        if name in self._even_index:
            e = [0] * self.n_even
            e[self._even_index[name]] = 1
            return SuperElement(self, {(tuple(e), ()): Fraction(1)})
        if name in self._odd_index:
            e = (0,) * self.n_even
            return SuperElement(self, {(e, (self._odd_index[name],)): Fraction(1)})
        raise UnknownGenerator(name)

    def monomial(self, coeff, even_powers=None, odd_names=()):
        """Monomial from {even_name: power} and an odd factor sequence."""
        out = self.scalar(coeff)
        for name, p in (even_powers or {}).items():
            out = out * self.gen(name) ** p
        for name in odd_names:
            out = out * self.gen(name)
        return out


class SuperElement:
    __slots__ = ("gens", "terms")
    __hash__ = None

    def __init__(self, gens, terms):
        self.gens = gens
        self.terms = terms

    # -- basics ---------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, SuperElement):
            return self.gens == other.gens and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == self.gens.scalar(other)
        return NotImplemented

    def __neg__(self):
        return SuperElement(self.gens, {m: -c for m, c in self.terms.items()})

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m, 0) + c
            if s:
                terms[m] = s
            else:
                terms.pop(m, None)
        return SuperElement(self.gens, terms)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def _coerce(self, other):
        if isinstance(other, SuperElement):
            if other.gens != self.gens:
                raise GeneratorMismatch("elements over different generators")
            return other
        return self.gens.scalar(other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if c == 0:
                return self.gens.zero()
            return SuperElement(self.gens,
                                {m: cc * c for m, cc in self.terms.items()})
        other = self._coerce(other)
        terms = {}
        for (e1, o1), c1 in self.terms.items():
            for (e2, o2), c2 in other.terms.items():
                merged = merge_monomials(e1, o1, e2, o2)
                if merged is None:
                    continue
                ee, oo, sign = merged
                key = (ee, oo)
                s = terms.get(key, 0) + c1 * c2 * sign
                if s:
                    terms[key] = s
                else:
                    del terms[key]
        return SuperElement(self.gens, terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (Fraction(1) / Fraction(other))

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power")
        out = self.gens.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __repr__(self):
        return f"SuperElement({to_text(self)!r})"

    # -- grading --------------------------------------------------------

    def odd_degree(self):
        """Common odd degree of all monomials; NotHomogeneous otherwise."""
        degs = {len(o) for (_, o) in self.terms}
        if len(degs) > 1:
            raise NotHomogeneous("mixed odd degrees")
        return degs.pop() if degs else 0

    def parity(self):
        return self.odd_degree() & 1

    # -- calculus -------------------------------------------------------

    def partial_even(self, var):
        idx = self.gens.even_index(var)
        terms = {}
        for (e, o), c in self.terms.items():
            if e[idx]:
                e2 = list(e)
                e2[idx] -= 1
                terms[(tuple(e2), o)] = terms.get((tuple(e2), o), 0) + c * e[idx]
        return SuperElement(self.gens, {m: c for m, c in terms.items() if c})

    def partial_odd(self, var, side="left"):
        idx = self.gens.odd_index(var)
        terms = {}
        for (e, o), c in self.terms.items():
            if idx not in o:
                continue
            pos = o.index(idx)
            sign = (-1) ** pos if side == "left" else (-1) ** (len(o) - 1 - pos)
            o2 = o[:pos] + o[pos + 1:]
            key = (e, o2)
            s = terms.get(key, 0) + c * sign
            if s:
                terms[key] = s
            else:
                del terms[key]
        return SuperElement(self.gens, terms)


def _odd_linear_parts(s):
    """Decompose an odd-linear element into [(odd_name, coeff)]."""
    parts = []
    for (e, o), c in s.terms.items():
        if any(e) or len(o) != 1:
            raise NotOddLinear(to_text(s))
        parts.append((s.gens.odd[o[0]], c))
    return parts


def insert_left(s, phi):
    """i(s): left insertion, a left odd derivative for each factor of s."""
    out = phi.gens.zero()
    for name, c in _odd_linear_parts(s):
        out = out + phi.partial_odd(name, "left") * c
    return out


def insert_right(s, phi):
    """j(s): right insertion; j(s)phi = -(-1)^l i(s)phi in odd degree l."""
    out = phi.gens.zero()
    for name, c in _odd_linear_parts(s):
        out = out + phi.partial_odd(name, "right") * c
    return out


def bidegree(gens, monomial):
    """(epsilon, lambda) of a single monomial key (even, odd)."""
    e, o = monomial
    pdeg = sum(e[i] for i in gens.momentum)
    lower = sum(1 for i in o if i in gens.odd_lower)
    upper = sum(1 for i in o if i in gens.odd_upper)
    return (pdeg + lower, pdeg + upper)


def bidegree_components(a):
    """Split a by the (epsilon, lambda) bigrading; values sum back to a."""
    comps = {}
    for m, c in a.terms.items():
        key = bidegree(a.gens, m)
        comps.setdefault(key, {})[m] = c
    return {k: SuperElement(a.gens, t) for k, t in sorted(comps.items())}


def ghost_degree(a):
    """lambda - epsilon if uniform across monomials; NotHomogeneous else."""
    ghs = {lam - eps for (eps, lam) in bidegree_components(a)}
    if len(ghs) > 1:
        raise NotHomogeneous("mixed ghost degrees")
    return ghs.pop() if ghs else 0


def euler_weight(a, fiber_even, conjugate_odd):
    """Homogeneity degree for the Euler field of the fiber variables.

    Weight of a monomial = total exponent of the designated even fiber
    variables minus the number of odd factors conjugate to them.  Returns
    the common weight, raising NotHomogeneous on mixed weights.
    """
    fe = {a.gens.even_index(n) for n in fiber_even}
    co = {a.gens.odd_index(n) for n in conjugate_odd}
    ws = set()
    for (e, o) in a.terms:
        w = sum(x for i, x in enumerate(e) if i in fe)
        w -= sum(1 for i in o if i in co)
        ws.add(w)
    if len(ws) > 1:
        raise NotHomogeneous("mixed fiber weights")
    return ws.pop() if ws else 0


# -- text grammar -------------------------------------------------------

def _fmt_frac(c):
    return str(c)


def to_text(a):
    """Print in the grammar `3/2 q1^2 p_1 a_1 a^2`; terms joined by ' + '.

    Canonical term order: even exponent tuple lexicographic, then odd
    index tuple; round-trips bit-exactly through parse().
    """
    if not a.terms:
        return "0"
    parts = []
    for (e, o) in sorted(a.terms):
        c = a.terms[(e, o)]
        toks = [_fmt_frac(c)]
        for i, p in enumerate(e):
            if p == 1:
                toks.append(a.gens.even[i])
            elif p > 1:
                toks.append(f"{a.gens.even[i]}^{p}")
        for i in o:
            toks.append(a.gens.odd[i])
        parts.append(" ".join(toks))
    return " + ".join(parts)


def _is_rational_token(tok):
    body = tok[1:] if tok[:1] in "+-" else tok
    if "/" in body:
        num, _, den = body.partition("/")
        return num.isdigit() and den.isdigit()
    return body.isdigit()


def parse(gens, text):
    """Inverse of to_text; also accepts omitted unit coefficients."""
    text = text.strip()
    if text == "0" or not text:
        return gens.zero()
    result = gens.zero()
    for term in text.split(" + "):
        toks = term.split()
        if not toks:
            raise ParseError(f"empty term in {text!r}")
        if _is_rational_token(toks[0]):
            elem = gens.scalar(Fraction(toks[0]))
            toks = toks[1:]
        else:
            elem = gens.one()
        for tok in toks:
            base, caret, power = tok.rpartition("^")
            if caret and power.isdigit() and base in gens._even_index:
                elem = elem * gens.gen(base) ** int(power)
            elif tok in gens._even_index or tok in gens._odd_index:
                elem = elem * gens.gen(tok)
            else:
                raise ParseError(f"unknown factor {tok!r}")
        result = result + elem
    return result


# -- cotangent-bundle generator layout and connection data ---------------

def phase_generators(m, k):
    """Generators (q1..qm, p_1..p_m; a_1..a_k lower, a^1..a^k upper).

    Even indices 0..m-1 are base coordinates, m..2m-1 momenta; odd
    indices 0..k-1 are the lower generators, k..2k-1 the upper ones,
    dual in matching order.
    """
    even = [f"q{i + 1}" for i in range(m)] + [f"p_{i + 1}" for i in range(m)]
    odd = [f"a_{i + 1}" for i in range(k)] + [f"a^{i + 1}" for i in range(k)]
    dual = {}
    for i in range(k):
        dual[i] = k + i
        dual[k + i] = i
    return GeneratorSet(even, odd,
                        momentum=range(m, 2 * m),
                        odd_lower=range(k),
                        odd_upper=range(k, 2 * k),
                        odd_dual=dual)


class ConnectionData:
    """Christoffel symbols Gamma_{i alpha}^beta, polynomials in q only,
    plus the curvature they generate.

    `gamma` maps (i, alpha, beta) (all 0-based) to a SuperElement over
    the phase generator set; missing entries are zero.
    """

    def __init__(self, gens, m, k, gamma=None):
        self.gens = gens
        self.m = m
        self.k = k
        self.gamma = {}
        q_indices = set(range(m))
        for key, val in (gamma or {}).items():
            if val.is_zero():
                continue
            for (e, o) in val.terms:
                ok = not o and all(x == 0 for i, x in enumerate(e)
                                   if i not in q_indices)
                if not ok:
                    raise ValueError("Christoffel entries must be "
                                     "polynomials in the base coordinates")
            self.gamma[key] = val
        self._curv = {}

    def christoffel(self, i, alpha, beta):
        return self.gamma.get((i, alpha, beta), self.gens.zero())

    def curvature(self, i, j, alpha, beta):
        """R^beta_{alpha i j}; antisymmetric in (i, j)."""
        key = (i, j, alpha, beta)
        if key in self._curv:
            return self._curv[key]
        qi = self.gens.even[i]
        qj = self.gens.even[j]
        val = (self.christoffel(j, alpha, beta).partial_even(qi)
               - self.christoffel(i, alpha, beta).partial_even(qj))
        for g in range(self.k):
            val = val + self.christoffel(i, g, beta) * self.christoffel(j, alpha, g)
            val = val - self.christoffel(j, g, beta) * self.christoffel(i, alpha, g)
        self._curv[key] = val
        return val
