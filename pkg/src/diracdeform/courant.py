"""Courant algebroids on split bundles via a square-zero charge.

The even super-Poisson bracket from `brackets` carries everything: the
charge Theta = phi + mu + gamma + psi encodes anchor and structure
functions, its master equation {Theta, Theta} = 0 encodes the axioms,
and the graph deformation equation together with its order-by-order
obstruction theory is expressed through derived brackets.

Conventions.  Base coordinates q1..qm, frame sections of the two
half-rank summands written as the lower odd generators a_1..a_k and the
upper ones a^1..a^k (see superalg.phase_generators).  All structure
functions are polynomials in the q's; all indices in dictionaries and
JSON are 0-based.
"""

from fractions import Fraction
from itertools import combinations

from .brackets import BracketContext, master_residuals
from .lie_deform import FormalSeries, PreconditionMC
from . import ratlin
from .superalg import (
    ConnectionData,
    NotHomogeneous,
    bidegree,
    bidegree_components,
    parse,
    phase_generators,
    to_text,
)


class ShapeError(Exception):
    pass


class AxiomViolation(Exception):
    pass


class DegreeCapExceeded(Exception):
    pass


def _frac(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def _antisymmetrize_pairs(entries, k, zero):
    """Full table {(a, b): value} from entries antisymmetric in (a, b)."""
    table = {}
    for (a, b), v in entries.items():
        if not (0 <= a < k and 0 <= b < k):
            raise ShapeError(f"index ({a}, {b}) out of range")
        if a == b:
            if not v.is_zero():
                raise ShapeError("diagonal entry must vanish")
            continue
        for key, val in (((a, b), v), ((b, a), -v)):
            if key in table and table[key] != val:
                raise ShapeError(f"conflicting antisymmetric entries {key}")
            table[key] = val
    return table


def _antisymmetrize_triples(entries, k):
    """Full table from entries totally antisymmetric in three indices."""

    def perms(t):
        a, b, c = t
        return [((a, b, c), 1), ((b, c, a), 1), ((c, a, b), 1),
                ((b, a, c), -1), ((a, c, b), -1), ((c, b, a), -1)]

    table = {}
    for (a, b, c), v in entries.items():
        if not all(0 <= x < k for x in (a, b, c)):
            raise ShapeError(f"index ({a}, {b}, {c}) out of range")
        if len({a, b, c}) < 3:
            if not v.is_zero():
                raise ShapeError("repeated-index entry must vanish")
            continue
        for key, s in perms((a, b, c)):
            val = s * v
            if key in table and table[key] != val:
                raise ShapeError(f"conflicting antisymmetric entries {key}")
            table[key] = val
    return table


class CourantInput:
    """Structure data for a split bundle of base dimension m, rank k + k.

    rho[(i, alpha)]      anchor coefficient of the lower frame section
                         a_alpha on d/dq^i (polynomial in q),
    rho_bar[(i, alpha)]  same for the upper frame section a^alpha,
    c[(a, b, g)]         lower structure functions, antisymmetric in
                         (a, b),
    c_bar[(a, b, g)]     upper structure functions, antisymmetric in
                         (a, b),
    psi[(a, b, g)]       totally antisymmetric cubic lower term,
    phi[(a, b, g)]       totally antisymmetric cubic upper term,
    gamma_conn[(i, a, b)] connection coefficients on the lower summand.

    Values are polynomials in q1..qm, given as SuperElements over the
    phase generators, Fractions/ints, or text in the superalg grammar.
    """

    def __init__(self, m, k, rho=None, rho_bar=None, c=None, c_bar=None,
                 psi=None, phi=None, gamma_conn=None):
        self.m = m
        self.k = k
        self.gens = phase_generators(m, k)

        def coerce(table):
            out = {}
            for key, v in (table or {}).items():
                if isinstance(v, str):
                    v = parse(self.gens, v)
                elif not hasattr(v, "terms"):
                    v = self.gens.scalar(_frac(v))
                self._check_base_poly(v)
                if not v.is_zero():
                    out[key] = v
            return out

        self.rho = coerce(rho)
        self.rho_bar = coerce(rho_bar)
        self.c = self._pairs_third(coerce(c))
        self.c_bar = self._pairs_third(coerce(c_bar))
        self.psi = _antisymmetrize_triples(coerce(psi), k)
        self.phi = _antisymmetrize_triples(coerce(phi), k)
        self.gamma_conn = coerce(gamma_conn)
        for (i, a) in list(self.rho) + list(self.rho_bar):
            if not (0 <= i < m and 0 <= a < k):
                raise ShapeError(f"anchor index ({i}, {a}) out of range")
        for (i, a, b) in self.gamma_conn:
            if not (0 <= i < m and 0 <= a < k and 0 <= b < k):
                raise ShapeError("connection index out of range")

    def _pairs_third(self, raw):
        grouped = {}
        for (a, b, g), v in raw.items():
            if not 0 <= g < self.k:
                raise ShapeError(f"index {g} out of range")
            grouped.setdefault(g, {})[(a, b)] = v
        table = {}
        for g, entries in grouped.items():
            for (a, b), v in _antisymmetrize_pairs(
                    entries, self.k, self.gens.zero()).items():
                table[(a, b, g)] = v
        return table

    def _check_base_poly(self, v):
        q_idx = set(range(self.m))
        for (e, o) in v.terms:
            if o or any(x != 0 for i, x in enumerate(e) if i not in q_idx):
                raise ShapeError("structure functions must be polynomials "
                                 "in the base coordinates")

    # -- JSON -----------------------------------------------------------

    def to_json(self):
        def triples(table, pair_antisym):
            out = []
            seen = set()
            for key, v in sorted(table.items()):
                canon = (tuple(sorted(key[:2])) + key[2:]) if pair_antisym \
                    else tuple(sorted(key))
                if canon in seen:
                    continue
                seen.add(canon)
                a = min(key[0], key[1])
                b = max(key[0], key[1])
                rest = table[(a, b) + key[2:]] if pair_antisym else None
                if pair_antisym:
                    out.append([a, b, key[2], to_text(rest)])
                else:
                    s = tuple(sorted(key))
                    out.append(list(s) + [to_text(table[s])])
            return out

        return {
            "m": self.m, "k": self.k,
            "rho": [[i, a, to_text(v)]
                    for (i, a), v in sorted(self.rho.items())],
            "rho_bar": [[i, a, to_text(v)]
                        for (i, a), v in sorted(self.rho_bar.items())],
            "c": triples(self.c, True),
            "c_bar": triples(self.c_bar, True),
            "psi": triples(self.psi, False),
            "phi": triples(self.phi, False),
            "gamma_conn": [[i, a, b, to_text(v)]
                           for (i, a, b), v in sorted(
                               self.gamma_conn.items())],
        }

    @classmethod
    def from_json(cls, obj):
        def tab3(rows):
            return {(r[0], r[1], r[2]): r[3] for r in rows}

        return cls(obj["m"], obj["k"],
                   rho={(r[0], r[1]): r[2] for r in obj.get("rho", [])},
                   rho_bar={(r[0], r[1]): r[2]
                            for r in obj.get("rho_bar", [])},
                   c=tab3(obj.get("c", [])),
                   c_bar=tab3(obj.get("c_bar", [])),
                   psi=tab3(obj.get("psi", [])),
                   phi=tab3(obj.get("phi", [])),
                   gamma_conn={(r[0], r[1], r[2]): r[3]
                               for r in obj.get("gamma_conn", [])})


class ThetaStructure:
    """The charge Theta = phi + mu + gamma + psi over a CourantInput."""

    def __init__(self, inp, ctx, mu, gamma_el, psi_el, phi_el):
        self.input = inp
        self.ctx = ctx
        self.gens = ctx.gens
        self.mu = mu
        self.gamma = gamma_el
        self.psi = psi_el
        self.phi = phi_el
        self.theta = mu + gamma_el + psi_el + phi_el

    def lower(self, a):
        return self.gens.gen(self.gens.odd[a])

    def upper(self, a):
        return self.gens.gen(self.gens.odd[self.input.k + a])

    def zero(self):
        return self.gens.zero()


def build_theta(inp):
    """Assemble Theta from the structure data.

    Both displayed forms of the quadratic-plus-cubic parts (the
    torsion/momentum form and the Darboux-momentum form) are computed
    and must agree; a mismatch raises ShapeError.
    """
    m, k = inp.m, inp.k
    gens = inp.gens
    conn = ConnectionData(gens, m, k, gamma=inp.gamma_conn or None)
    ctx = BracketContext.rothstein_on(conn)
    r = ctx.darboux_momenta()
    alow = [gens.gen(gens.odd[a]) for a in range(k)]
    aup = [gens.gen(gens.odd[k + a]) for a in range(k)]
    p = [gens.gen(gens.even[m + i]) for i in range(m)]
    half = Fraction(1, 2)
    zero = gens.zero()

    def gam(i, a, b):
        return conn.christoffel(i, a, b)

    # mu: Darboux-momentum form
    mu = zero
    for (i, a), rho in inp.rho.items():
        mu = mu - r[i] * rho * aup[a]
    for (a, b, g), cv in inp.c.items():
        mu = mu - half * cv * aup[a] * aup[b] * alow[g]
    # mu: momentum/torsion form, must agree
    mu2 = zero
    for (i, a), rho in inp.rho.items():
        mu2 = mu2 - p[i] * rho * aup[a]
    for a in range(k):
        for b in range(k):
            for g in range(k):
                t = zero
                for i in range(m):
                    ra = inp.rho.get((i, a), zero)
                    rb = inp.rho.get((i, b), zero)
                    t = t + ra * gam(i, b, g) - rb * gam(i, a, g)
                t = t - inp.c.get((a, b, g), zero)
                if not t.is_zero():
                    mu2 = mu2 + half * t * aup[a] * aup[b] * alow[g]
    if mu != mu2:
        raise ShapeError("the two defining forms of the lower charge "
                         "component disagree")

    gamma_el = zero
    for (i, a), rho in inp.rho_bar.items():
        gamma_el = gamma_el - r[i] * rho * alow[a]
    for (a, b, g), cv in inp.c_bar.items():
        gamma_el = gamma_el - half * cv * alow[a] * alow[b] * aup[g]
    gamma2 = zero
    for (i, a), rho in inp.rho_bar.items():
        gamma2 = gamma2 - p[i] * rho * alow[a]
    for a in range(k):
        for b in range(k):
            for g in range(k):
                t = zero
                for i in range(m):
                    ra = inp.rho_bar.get((i, a), zero)
                    rb = inp.rho_bar.get((i, b), zero)
                    t = t + rb * gam(i, g, a) - ra * gam(i, g, b)
                t = t - inp.c_bar.get((a, b, g), zero)
                if not t.is_zero():
                    gamma2 = gamma2 + half * t * alow[a] * alow[b] * aup[g]
    if gamma_el != gamma2:
        raise ShapeError("the two defining forms of the upper charge "
                         "component disagree")

    psi_el = zero
    for (a, b, g) in combinations(range(k), 3):
        v = inp.psi.get((a, b, g))
        if v is not None and not v.is_zero():
            psi_el = psi_el + v * alow[a] * alow[b] * alow[g]
    phi_el = zero
    for (a, b, g) in combinations(range(k), 3):
        v = inp.phi.get((a, b, g))
        if v is not None and not v.is_zero():
            phi_el = phi_el + v * aup[a] * aup[b] * aup[g]

    return ThetaStructure(inp, ctx, mu, gamma_el, psi_el, phi_el)


# ---------------------------------------------------------------------------
# Derived operations
# ---------------------------------------------------------------------------

def courant_bracket(th, e1, e2):
    """[e1, e2] = {{e1, Theta}, e2}."""
    return th.ctx.bracket(th.ctx.bracket(e1, th.theta), e2)


def pairing(th, e1, e2):
    """<e1, e2> for chi-degree-1 elements, as a base function."""
    return th.ctx.bracket(e1, e2)


def anchor_apply(th, e, f):
    """rho(e) f = {{e, Theta}, f}."""
    return th.ctx.bracket(th.ctx.bracket(e, th.theta), f)


def d_fun(th, f):
    """The derivation-like element D f = {Theta, f}."""
    return th.ctx.bracket(th.theta, f)


def d_L(th, alpha):
    """d_L alpha = {mu, alpha} on upper-generated forms."""
    return th.ctx.bracket(th.mu, alpha)


def dual_bracket(th, alpha, beta):
    """[alpha, beta]_* = {{alpha, gamma}, beta} on upper-generated
    forms, extended to all degrees by the bracket itself."""
    return th.ctx.bracket(th.ctx.bracket(alpha, th.gamma), beta)


def psi_triple(th, a, b, c):
    """[a, b, c]_psi = {{{psi, a}, b}, c}."""
    br = th.ctx.bracket
    return br(br(br(th.psi, a), b), c)


def t_omega(th, omega):
    """T_omega = 1/6 [omega, omega, omega]_psi."""
    return Fraction(1, 6) * psi_triple(th, omega, omega, omega)


def _omega_apply(th, omega, a):
    """omega(a_a) as an upper-generated 1-form: {a_a, omega}."""
    return th.ctx.bracket(th.lower(a), omega)


def _psi_eval(th, al1, al2, al3):
    """psi(al1, al2, al3) by nested insertion of upper 1-forms."""
    br = th.ctx.bracket
    return br(al3, br(al2, br(al1, th.psi)))


def t_omega_direct(th, omega):
    """T_omega from its defining values: the second code path.

    T(s1, s2, s3) = -psi(omega(s1), omega(s2), omega(s3)) on the frame,
    reassembled as an upper-generated 3-form.
    """
    k = th.input.k
    out = th.zero()
    oms = [_omega_apply(th, omega, a) for a in range(k)]
    for (a, b, c) in combinations(range(k), 3):
        v = -_psi_eval(th, oms[a], oms[b], oms[c])
        if not v.is_zero():
            out = out + v * th.upper(a) * th.upper(b) * th.upper(c)
    return out


def mc_residual_one(th, omega_list, n):
    """Order-n residual of the graph deformation equation for the
    series with coefficients omega_list (index = order, omega_0 = 0)."""
    br = th.ctx.bracket
    half = Fraction(1, 2)
    sixth = Fraction(1, 6)

    def om(i):
        return omega_list[i] if 0 <= i < len(omega_list) else th.zero()

    res = br(th.mu, om(n))
    for i in range(1, n):
        res = res + half * br(br(om(i), th.gamma), om(n - i))
    for i in range(1, n - 1):
        for j in range(1, n - i):
            kk = n - i - j
            if kk >= 1:
                res = res + sixth * psi_triple(th, om(i), om(j), om(kk))
    return res


def mc_residual_dirac(th, omega_series):
    """Per-order residuals {mu, w} + 1/2 {{w, gamma}, w}
    + 1/6 {{{psi, w}, w}, w} as a FormalSeries of 3-forms."""
    if not omega_series[0].is_zero():
        raise ShapeError("deformation series must start at order one")
    coeffs = [omega_series[i] for i in range(omega_series.order + 1)]
    out = [mc_residual_one(th, coeffs, n)
           for n in range(omega_series.order + 1)]
    return FormalSeries(omega_series.order, out, th.zero())


def d_omega_operator(th, omega):
    """d_omega = d_L + [omega, .]_* + 1/2 [omega, omega, .]_psi."""
    br = th.ctx.bracket
    half = Fraction(1, 2)
    wg = br(omega, th.gamma)
    pww = br(br(th.psi, omega), omega)

    def op(alpha):
        return br(th.mu, alpha) + br(wg, alpha) + half * br(pww, alpha)

    return op

def universal_identity_check(th, omega):
    """d_omega applied to the deformation expression vanishes for every
    2-form omega, solution or not.  Returns the residual."""
    mc = mc_residual_one(th, [th.zero(), omega], 1) \
        + mc_residual_one(th, [th.zero(), omega], 2) \
        + mc_residual_one(th, [th.zero(), omega], 3)
    return d_omega_operator(th, omega)(mc)


# ---------------------------------------------------------------------------
# Axiom verification
# ---------------------------------------------------------------------------

def _q_monomials(gens, m, degree):
    """All q-monomials of total degree <= degree."""
    out = [gens.one()]
    frontier = [gens.one()]
    for _ in range(degree):
        nxt = []
        for f in frontier:
            for i in range(m):
                nxt.append(f * gens.gen(gens.even[i]))
        frontier = nxt
        out.extend(nxt)
    return out

def _section_family(th, degree):
    """Frame sections times q-monomials up to the given degree."""
    k = th.input.k
    frames = [th.lower(a) for a in range(k)] + \
             [th.upper(a) for a in range(k)]
    out = []
    for f in _q_monomials(th.gens, th.input.m, degree):
        for fr in frames:
            out.append(f * fr)
    return out


def verify_courant(inp, degree=1, section_limit=None, raise_on_fail=False):
    """Check the master equation and the derived-bracket axioms.

    Axioms are verified symbolically on frame sections times
    q-monomials of degree <= degree (Leibniz rules make this
    generating).  Returns a report dict; with raise_on_fail=True a
    violation raises AxiomViolation naming the identity.
    """
    th = build_theta(inp)
    br = th.ctx.bracket
    report = {"ok": True, "identities": {}}
    res = master_residuals(th.ctx, th.theta)
    master_ok = res["total"].is_zero()
    report["identities"]["master"] = {
        "ok": master_ok,
        "residual": to_text(res["total"]),
        "components": {f"{kk}": to_text(v)
                       for kk, v in res["components"].items()
                       if not v.is_zero()},
    }

    secs = _section_family(th, degree)
    if section_limit is not None:
        secs = secs[:section_limit]
    funs = _q_monomials(th.gens, th.input.m, degree)[:1 + th.input.m]

    def record(name, failures):
        ok = not failures
        report["identities"][name] = {"ok": ok, "failures": failures[:3]}
        if not ok:
            report["ok"] = False

    fail_jac, fail_inv, fail_def, fail_rd = [], [], [], []
    for i1, e1 in enumerate(secs):
        for i2, e2 in enumerate(secs):
            b12 = courant_bracket(th, e1, e2)
            b21 = courant_bracket(th, e2, e1)
            d = b12 + b21 - d_fun(th, pairing(th, e1, e2))
            if not d.is_zero():
                fail_def.append((i1, i2, to_text(d)))
            for i3, e3 in enumerate(secs):
                jac = courant_bracket(th, e1, courant_bracket(th, e2, e3)) \
                    - courant_bracket(th, b12, e3) \
                    - courant_bracket(th, e2, courant_bracket(th, e1, e3))
                if not jac.is_zero():
                    fail_jac.append((i1, i2, i3, to_text(jac)))
                inv = br(br(e1, th.theta), pairing(th, e2, e3)) \
                    - pairing(th, b12, e3) \
                    - pairing(th, e2, courant_bracket(th, e1, e3))
                if not inv.is_zero():
                    fail_inv.append((i1, i2, i3, to_text(inv)))
    for f in funs:
        for g in funs:
            d = anchor_apply(th, d_fun(th, f), g)
            if not d.is_zero():
                fail_rd.append((to_text(f), to_text(g), to_text(d)))
    record("jacobi", fail_jac)
    record("invariance", fail_inv)
    record("defect", fail_def)
    record("anchor_of_D", fail_rd)
    report["ok"] = report["ok"] and master_ok
    if raise_on_fail and not report["ok"]:
        bad = [n for n, v in report["identities"].items() if not v["ok"]]
        raise AxiomViolation(", ".join(bad))
    return report


def quasi_lemma_check(inp, raise_on_fail=False):
    """The three structure identities of the split charge, verified on
    frame 1-forms (upper generators), with one q-weighted variant."""
    th = build_theta(inp)
    br = th.ctx.bracket
    k = th.input.k
    gens = th.gens
    report = {"ok": True, "identities": {}}

    forms = [th.upper(a) for a in range(k)]
    if th.input.m > 0:
        forms.append(gens.gen(gens.even[0]) * th.upper(0))
    funs = _q_monomials(gens, th.input.m, 1)

    def pr_lower(x):
        """Lower (first-summand) component of a chi-degree-1 element."""
        out = gens.zero()
        for key, cval in x.terms.items():
            e, o = key
            if len(o) == 1 and o[0] < k:
                out = out + type(x)(gens, {key: cval})
        return out

    def psi_map(a, b):
        return -pr_lower(courant_bracket(th, a, b))

    fail1 = []
    for a in forms:
        for b in forms:
            pab = psi_map(a, b)
            dstar = dual_bracket(th, a, b)
            for f in funs:
                lhs = anchor_apply(th, pab, f)
                rhs = anchor_apply(th, dstar, f) \
                    - (anchor_apply(th, a, anchor_apply(th, b, f))
                       - anchor_apply(th, b, anchor_apply(th, a, f)))
                d = lhs - rhs
                if not d.is_zero():
                    fail1.append(to_text(d))

    fail2 = []
    for a in forms:
        for b in forms:
            for c in forms:
                lhs = dual_bracket(th, dual_bracket(th, a, b), c) \
                    + dual_bracket(th, dual_bracket(th, b, c), a) \
                    + dual_bracket(th, dual_bracket(th, c, a), b)
                rhs = br(psi_map(a, b), d_L(th, c)) \
                    + br(psi_map(b, c), d_L(th, a)) \
                    + br(psi_map(c, a), d_L(th, b)) \
                    + d_L(th, _psi_eval(th, a, b, c))
                d = lhs - rhs
                if not d.is_zero():
                    fail2.append(to_text(d))

    fail3 = []
    for a in forms:
        for b in forms:
            for c in forms:
                for e in forms:
                    lhs = anchor_apply_fun(th, a, _psi_eval(th, b, c, e)) \
                        - anchor_apply_fun(th, b, _psi_eval(th, a, c, e)) \
                        + anchor_apply_fun(th, c, _psi_eval(th, a, b, e)) \
                        - anchor_apply_fun(th, e, _psi_eval(th, a, b, c))
                    lhs = lhs \
                        - _psi_eval(th, dual_bracket(th, a, b), c, e) \
                        + _psi_eval(th, dual_bracket(th, a, c), b, e) \
                        - _psi_eval(th, dual_bracket(th, a, e), b, c) \
                        - _psi_eval(th, dual_bracket(th, b, c), a, e) \
                        + _psi_eval(th, dual_bracket(th, b, e), a, c) \
                        - _psi_eval(th, dual_bracket(th, c, e), a, b)
                    if not lhs.is_zero():
                        fail3.append(to_text(lhs))

    for name, failures in (("anchor_defect", fail1),
                           ("jacobiator", fail2),
                           ("psi_coherence", fail3)):
        report["identities"][name] = {"ok": not failures,
                                      "failures": failures[:3]}
        if failures:
            report["ok"] = False
    if raise_on_fail and not report["ok"]:
        bad = [n for n, v in report["identities"].items() if not v["ok"]]
        raise AxiomViolation(", ".join(bad))
    return report


def anchor_apply_fun(th, e, f):
    """rho(e) f for a chi-degree-1 element e and base function f."""
    return anchor_apply(th, e, f)


# ---------------------------------------------------------------------------
# Graph deformation: order-by-order solver
# ---------------------------------------------------------------------------

class DiracObstruction:
    """Per-order verdict of the graph deformation solve.

    Exactly one of `solution` and `witness` is set; `status` is
    "EXTENDS", "OBSTRUCTED" (constant case, certified H^3 class) or
    "NO_SOLUTION_UP_TO_DEGREE" (polynomial case, degree-capped solve).
    """

    def __init__(self, order, cocycle, status, solution=None, witness=None):
        if (solution is None) == (witness is None):
            raise ValueError("exactly one of solution/witness required")
        self.order = order
        self.cocycle = cocycle
        self.status = status
        self.solution = solution
        self.witness = witness

    @property
    def extends(self):
        return self.solution is not None


def _two_form_basis(th, degree_cap):
    """Basis 2-forms q^e a^alpha a^beta with |e| <= degree_cap."""
    k = th.input.k
    out = []
    for f in _q_monomials(th.gens, th.input.m, degree_cap):
        for (a, b) in combinations(range(k), 2):
            out.append(f * th.upper(a) * th.upper(b))
    return out


def _se_coords(elements):
    """Common coordinates of SuperElements on the union of their keys."""
    keys = sorted({kk for el in elements for kk in el.terms})
    index = {kk: i for i, kk in enumerate(keys)}
    vecs = []
    for el in elements:
        v = [Fraction(0)] * len(keys)
        for kk, cval in el.terms.items():
            v[index[kk]] = cval
        vecs.append(v)
    return keys, vecs


def deform_extend_dirac(inp_or_theta, prefix, degree_cap=2):
    """Solve the next order of the graph deformation equation.

    prefix = [omega_1, ..., omega_N] (2-forms, order = position + 1),
    already satisfying the deformation equation through order N; raises
    PreconditionMC otherwise.  Returns a DiracObstruction for order
    N + 1: the closedness of the right-hand side is asserted, and the
    solve for omega_{N+1} runs over q-polynomial 2-forms of degree
    <= degree_cap (exact and certified when m = 0).
    """
    th = inp_or_theta if isinstance(inp_or_theta, ThetaStructure) \
        else build_theta(inp_or_theta)
    coeffs = [th.zero()] + list(prefix)
    N = len(prefix)
    for n in range(1, N + 1):
        if not mc_residual_one(th, coeffs, n).is_zero():
            raise PreconditionMC(f"deformation equation fails at order {n}")
    br = th.ctx.bracket
    half = Fraction(1, 2)
    sixth = Fraction(1, 6)

    def om(i):
        return coeffs[i] if 0 <= i < len(coeffs) else th.zero()

    n = N + 1
    R = th.zero()
    for i in range(1, n):
        R = R - half * br(br(om(i), th.gamma), om(n - i))
    for i in range(1, n - 1):
        for j in range(1, n - i):
            kk = n - i - j
            if kk >= 1:
                R = R - sixth * psi_triple(th, om(i), om(j), om(kk))
    closed = d_L(th, R)
    if not closed.is_zero():
        raise AxiomViolation("right-hand side is not closed; "
                             "the input charge is not square-zero")

    basis = _two_form_basis(th, degree_cap)
    images = [d_L(th, b) for b in basis]
    keys, vecs = _se_coords(images + [R])
    M = [[vecs[j][i] for j in range(len(basis))] for i in range(len(keys))]
    b = vecs[-1]
    status, x = ratlin.solve(M, b)
    if status == "SOLUTION":
        sol = th.zero()
        for cval, bel in zip(x, basis):
            if cval:
                sol = sol + cval * bel
        assert d_L(th, sol) == R
        return DiracObstruction(n, R, "EXTENDS", solution=sol)
    verdict = "OBSTRUCTED" if th.input.m == 0 else \
        "NO_SOLUTION_UP_TO_DEGREE"
    return DiracObstruction(n, R, verdict, witness=x)


def deform_series_dirac(inp_or_theta, prefix, order, degree_cap=2):
    """Extend a deformation prefix order by order up to `order`.

    Returns (coefficients, certificates); stops at the first
    non-extendable order.
    """
    th = inp_or_theta if isinstance(inp_or_theta, ThetaStructure) \
        else build_theta(inp_or_theta)
    coeffs = list(prefix)
    certs = []
    while len(coeffs) < order:
        cert = deform_extend_dirac(th, coeffs, degree_cap=degree_cap)
        certs.append(cert)
        if not cert.extends:
            break
        coeffs.append(cert.solution)
    return coeffs, certs


# ---------------------------------------------------------------------------
# Change of isotropic complement
# ---------------------------------------------------------------------------

def _form_to_matrix(th, omega):
    """k x k antisymmetric coefficient matrix of an upper 2-form."""
    k = th.input.k
    gens = th.gens
    M = [[gens.zero() for _ in range(k)] for _ in range(k)]
    for (e, o), cval in omega.terms.items():
        if len(o) != 2 or any(x < k for x in o):
            raise ShapeError("not an upper-generated 2-form")
        a, b = o[0] - k, o[1] - k
        coef = type(omega)(gens, {(e, ()): cval})
        M[a][b] = M[a][b] + coef
        M[b][a] = M[b][a] - coef
    return M


def _matrix_to_form(th, M):
    k = th.input.k
    out = th.zero()
    for a in range(k):
        for b in range(a + 1, k):
            if not (M[a][b] + M[b][a]).is_zero():
                raise ShapeError("matrix is not antisymmetric")
            out = out + M[a][b] * th.upper(a) * th.upper(b)
    return out


def _bivector_to_matrix(th, lam):
    k = th.input.k
    gens = th.gens
    M = [[gens.zero() for _ in range(k)] for _ in range(k)]
    for (e, o), cval in lam.terms.items():
        if len(o) != 2 or any(x >= k for x in o):
            raise ShapeError("not a lower-generated bivector")
        a, b = o
        coef = type(lam)(gens, {(e, ()): cval})
        M[a][b] = M[a][b] + coef
        M[b][a] = M[b][a] - coef
    return M


def _mat_mul_se(A, B, zero):
    k = len(A)
    return [[sum((A[i][j] * B[j][l] for j in range(k)), zero)
             for l in range(k)] for i in range(k)]


def reparametrize_complement(th, lam, omega_series):
    """omega'_t = omega_t (id + Lambda omega_t)^{-1} under the change
    of isotropic complement by the bivector Lambda."""
    if not omega_series[0].is_zero():
        raise ShapeError("deformation series must start at order one")
    k = th.input.k
    zero = th.gens.zero()
    N = omega_series.order
    W = [_form_to_matrix(th, omega_series[i]) for i in range(N + 1)]
    L = _bivector_to_matrix(th, lam)
    ident = [[th.gens.one() if i == j else zero for j in range(k)]
             for i in range(k)]
    # X_t = (id + Lambda omega_t)^{-1}: X_0 = id,
    # X_n = -sum_{i>=1} Lambda omega_i X_{n-i}
    X = [ident]
    for n in range(1, N + 1):
        acc = [[zero for _ in range(k)] for _ in range(k)]
        for i in range(1, n + 1):
            t = _mat_mul_se(L, _mat_mul_se(W[i], X[n - i], zero), zero)
            for a in range(k):
                for b in range(k):
                    acc[a][b] = acc[a][b] - t[a][b]
        X.append(acc)
    out = []
    for n in range(N + 1):
        acc = [[zero for _ in range(k)] for _ in range(k)]
        for i in range(n + 1):
            t = _mat_mul_se(W[i], X[n - i], zero)
            for a in range(k):
                for b in range(k):
                    acc[a][b] = acc[a][b] + t[a][b]
        out.append(_matrix_to_form(th, acc))
    return FormalSeries(N, out, zero)


# ---------------------------------------------------------------------------
# Stock inputs
# ---------------------------------------------------------------------------

def standard_courant(m):
    """The standard structure on the tangent-plus-cotangent model of an
    m-dimensional affine base: identity anchor on the lower summand,
    everything else zero."""
    return CourantInput(m, m, rho={(i, i): 1 for i in range(m)})


def quadratic_lie_algebra(c_table, k):
    """A quadratic Lie algebra presented on a split half-rank frame:
    base dimension zero, lower structure constants only."""
    return CourantInput(0, k, c=c_table)


def lie_bialgebra(c_table, c_bar_table, k):
    """A Lie bialgebra double: both sets of constants, no psi."""
    return CourantInput(0, k, c=c_table, c_bar=c_bar_table)


def so3_double():
    """Diagonal/antidiagonal split of the product of two copies of
    so(3): the lower frame carries the so(3) constants, the cubic term
    records the failure of the complement to close."""
    c = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1}
    psi = {(0, 1, 2): Fraction(-1, 4)}
    return CourantInput(0, 3, c=c, psi=psi)
