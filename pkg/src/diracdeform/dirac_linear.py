"""Linear Dirac structures on V + V*.

Everything exact lives over Q (Fraction); the two numeric routines at the
bottom (compatible structure, projector transport) use double precision
with explicit tolerances and never feed back into exact state.

Conventions.  Elements of V + V* are row vectors (x_1..x_n, eta_1..eta_n).
The symmetric pairing is <(x,eta),(y,mu)> = eta(y) + mu(x); the graph of a
two-form omega is {(x, omega x)} with (omega x)_j = sum_i omega[j][i] x_i,
and the graph of a bivector pi is {(pi eta, eta)}.
"""

from fractions import Fraction

import numpy as np
from scipy.linalg import eigh, cholesky, solve_triangular

from . import ratlin
from .ratlin import Fraction as _F, Subspace, frac


class NotAntisymmetric(Exception):
    pass


class ShapeMismatch(Exception):
    pass


class FactorMismatch(Exception):
    pass


class NotIsotropic(Exception):
    pass


class NotDirac(Exception):
    pass


class IllConditioned(Exception):
    pass


class StepTooLarge(Exception):
    pass


class NoRationalExtension(Exception):
    pass


def _check_antisymmetric(M):
    n = len(M)
    for i in range(n):
        if len(M[i]) != n:
            raise ShapeMismatch("matrix is not square")
        for j in range(n):
            if frac(M[i][j]) != -frac(M[j][i]):
                raise NotAntisymmetric("matrix is not antisymmetric")


class PairedSpace:
    """V + V* with its canonical split-signature pairing."""

    def __init__(self, n):
        self.n = n

    def pairing_matrix(self):
        n = self.n
        G = [[Fraction(0)] * (2 * n) for _ in range(2 * n)]
        for i in range(n):
            G[i][n + i] = Fraction(1)
            G[n + i][i] = Fraction(1)
        return G

    def pair(self, u, v):
        n = self.n
        return (sum(frac(u[n + i]) * frac(v[i]) for i in range(n))
                + sum(frac(v[n + i]) * frac(u[i]) for i in range(n)))

    def minus_pair(self, u, v):
        """The antisymmetric companion eta(Y) - mu(X)."""
        n = self.n
        return (sum(frac(u[n + i]) * frac(v[i]) for i in range(n))
                - sum(frac(v[n + i]) * frac(u[i]) for i in range(n)))

    def signature(self):
        pos, neg, zero, _ = ratlin.signature_normal_form(self.pairing_matrix())
        return pos, neg, zero


class LinearDirac:
    """A maximal isotropic subspace of V + V*."""

    def __init__(self, n, subspace):
        if subspace.ambient_dim != 2 * n:
            raise ShapeMismatch("subspace does not live in V + V*")
        if subspace.dim != n:
            raise NotDirac(f"dimension {subspace.dim}, expected {n}")
        ps = PairedSpace(n)
        for u in subspace.basis:
            for v in subspace.basis:
                if ps.pair(u, v) != 0:
                    raise NotDirac("subspace is not isotropic")
        self.n = n
        self.subspace = subspace

    def __eq__(self, other):
        return (isinstance(other, LinearDirac) and self.n == other.n
                and self.subspace == other.subspace)

    def __hash__(self):
        return hash(("LinearDirac", self.n, self.subspace))

    def __repr__(self):
        return f"LinearDirac(n={self.n})"


def space_V(n):
    basis = [[Fraction(1 if j == i else 0) for j in range(2 * n)]
             for i in range(n)]
    return LinearDirac(n, Subspace(2 * n, basis))


def space_V_star(n):
    basis = [[Fraction(1 if j == n + i else 0) for j in range(2 * n)]
             for i in range(n)]
    return LinearDirac(n, Subspace(2 * n, basis))


def from_two_form(omega):
    _check_antisymmetric(omega)
    n = len(omega)
    basis = []
    for i in range(n):
        v = [Fraction(1 if j == i else 0) for j in range(n)]
        v += [frac(omega[j][i]) for j in range(n)]
        basis.append(v)
    return LinearDirac(n, Subspace(2 * n, basis))


def from_bivector(pi):
    _check_antisymmetric(pi)
    n = len(pi)
    basis = []
    for i in range(n):
        v = [frac(pi[j][i]) for j in range(n)]
        v += [Fraction(1 if j == i else 0) for j in range(n)]
        basis.append(v)
    return LinearDirac(n, Subspace(2 * n, basis))


def _project_first(L, n):
    """Subspace of V spanned by the x-parts of L."""
    return Subspace(n, [list(v[:n]) for v in L.subspace.basis])


def _project_second(L, n):
    return Subspace(n, [list(v[n:]) for v in L.subspace.basis])


def _lift_covector(L, x):
    """Some eta with (x, eta) in L; requires x in the range projection."""
    n = L.n
    cols = [list(v) for v in L.subspace.basis]
    M = [[cols[j][i] for j in range(len(cols))] for i in range(n)]
    status, c = ratlin.solve(M, list(x))
    if status != "SOLUTION":
        raise ValueError("vector is not in the range of the structure")
    eta = [Fraction(0)] * n
    for j, cj in enumerate(c):
        for i in range(n):
            eta[i] += cj * cols[j][n + i]
    return eta


def _lift_vector(L, eta):
    n = L.n
    cols = [list(v) for v in L.subspace.basis]
    M = [[cols[j][n + i] for j in range(len(cols))] for i in range(n)]
    status, c = ratlin.solve(M, list(eta))
    if status != "SOLUTION":
        raise ValueError("covector is not in the corange of the structure")
    x = [Fraction(0)] * n
    for j, cj in enumerate(c):
        for i in range(n):
            x[i] += cj * cols[j][i]
    return x


def intersect_V(L):
    """L cap V, as a subspace of V."""
    n = L.n
    amb = Subspace(2 * n, [[Fraction(1 if j == i else 0)
                            for j in range(2 * n)] for i in range(n)])
    inter = L.subspace.intersect(amb)
    return Subspace(n, [list(v[:n]) for v in inter.basis])


def intersect_V_star(L):
    """L cap V*, as a subspace of V*."""
    n = L.n
    amb = Subspace(2 * n, [[Fraction(1 if j == n + i else 0)
                            for j in range(2 * n)] for i in range(n)])
    inter = L.subspace.intersect(amb)
    return Subspace(n, [list(v[n:]) for v in inter.basis])


def represent(L):
    """Both classifications of a linear Dirac structure.

    Returns a dict with:
      R      range subspace of V,
      Omega  antisymmetric dim(R) x dim(R) matrix in the echelon basis of R,
      K      kernel subspace L cap V,
      pi     antisymmetric matrix on the echelon basis of K-annihilator
             covectors (the corange of L).
    """
    n = L.n
    R = _project_first(L, n)
    etas = [_lift_covector(L, r) for r in R.basis]
    Omega = [[sum(e[i] * frac(r2[i]) for i in range(n))
              for r2 in R.basis] for e in etas]
    K = intersect_V(L)
    W = _project_second(L, n)
    xs = [_lift_vector(L, w) for w in W.basis]
    pi = [[sum(frac(w2[i]) * x[i] for i in range(n))
           for w2 in W.basis] for x in xs]
    # pi[a][b] = w_b(x_a); make the convention pi(eta, eta') = eta'(x_eta)
    return {"R": R, "Omega": Omega, "K": K, "corange": W, "pi": pi}


def from_R_Omega(R, Omega):
    """Dirac structure with range R and form Omega in R's echelon basis."""
    n = R.ambient_dim
    k = R.dim
    _check_antisymmetric(Omega)
    if len(Omega) != k:
        raise ShapeMismatch("form size does not match dim R")
    basis = []
    # covector eta_a with eta_a(r_b) = Omega[a][b]
    rows = [[frac(R.basis[b][i]) for i in range(n)] for b in range(k)]
    for a in range(k):
        status, eta = ratlin.solve(rows, [frac(Omega[a][b]) for b in range(k)])
        if status != "SOLUTION":
            raise ShapeMismatch("form is not representable on R")
        basis.append(list(R.basis[a]) + eta)
    ann = ratlin.kernel_basis(rows) if k else Subspace(n, ratlin.identity(n))
    for v in ann.basis:
        basis.append([Fraction(0)] * n + list(v))
    return LinearDirac(n, Subspace(2 * n, basis))


def from_K_pi(K, corange, pi):
    """Dirac structure with kernel K and bivector pi on the corange basis."""
    n = K.ambient_dim
    k = corange.dim
    _check_antisymmetric(pi)
    basis = []
    rows = [[frac(corange.basis[b][i]) for i in range(n)] for b in range(k)]
    for a in range(k):
        # vector x_a with w_b(x_a) = pi[a][b]
        status, x = ratlin.solve(rows, [frac(pi[a][b]) for b in range(k)])
        if status != "SOLUTION":
            raise ShapeMismatch("bivector is not representable")
        basis.append(x + list(corange.basis[a]))
    for v in K.basis:
        basis.append(list(v) + [Fraction(0)] * n)
    return LinearDirac(n, Subspace(2 * n, basis))


# ---------------------------------------------------------------------------
# Dirac maps
# ---------------------------------------------------------------------------

def _constraint_rows(S):
    """Rows C with S = ker C."""
    if not S.basis:
        return ratlin.identity(S.ambient_dim)
    ker = ratlin.kernel_basis([list(v) for v in S.basis])
    return [list(v) for v in ker.basis]


def _phi_t(phi):
    return [[frac(phi[j][i]) for j in range(len(phi))]
            for i in range(len(phi[0]) if phi else 0)]


def forward_map(phi, L):
    """F_phi(L) = {(phi x, eta) : (x, phi* eta) in L} on the codomain."""
    nw = len(phi)
    nv = len(phi[0]) if nw else 0
    if L.n != nv:
        raise ShapeMismatch("map domain does not match the structure")
    phit = _phi_t(phi)
    C = _constraint_rows(L.subspace)
    # unknowns (x in Q^nv, eta in Q^nw); condition C (x, phi^T eta) = 0
    rows = []
    for crow in C:
        row = list(crow[:nv])
        for a in range(nw):
            row.append(sum(crow[nv + i] * phit[i][a] for i in range(nv)))
        rows.append(row)
    ker = ratlin.kernel_basis(rows) if rows else \
        Subspace(nv + nw, ratlin.identity(nv + nw))
    out = []
    for v in ker.basis:
        x, eta = v[:nv], v[nv:]
        px = [sum(frac(phi[j][i]) * x[i] for i in range(nv))
              for j in range(nw)]
        out.append(px + list(eta))
    return LinearDirac(nw, Subspace(2 * nw, out))


def backward_map(phi, L):
    """B_phi(L) = {(x, phi* eta) : (phi x, eta) in L} on the domain."""
    nw = len(phi)
    nv = len(phi[0]) if nw else 0
    if L.n != nw:
        raise ShapeMismatch("map codomain does not match the structure")
    phit = _phi_t(phi)
    C = _constraint_rows(L.subspace)
    rows = []
    for crow in C:
        row = [sum(crow[j] * frac(phi[j][i]) for j in range(nw))
               for i in range(nv)]
        row += list(crow[nw:])
        rows.append(row)
    ker = ratlin.kernel_basis(rows) if rows else \
        Subspace(nv + nw, ratlin.identity(nv + nw))
    out = []
    for v in ker.basis:
        x, eta = v[:nv], v[nv:]
        pe = [sum(phit[i][a] * eta[a] for a in range(nw)) for i in range(nv)]
        out.append(list(x) + pe)
    return LinearDirac(nv, Subspace(2 * nv, out))


class CanonicalRelation:
    """Maximal isotropic subspace of E1 x bar(E2)."""

    def __init__(self, n1, n2, subspace):
        amb = 2 * n1 + 2 * n2
        if subspace.ambient_dim != amb:
            raise ShapeMismatch("relation has wrong ambient dimension")
        if subspace.dim != n1 + n2:
            raise NotDirac("relation is not middle-dimensional")
        p1, p2 = PairedSpace(n1), PairedSpace(n2)
        for u in subspace.basis:
            for v in subspace.basis:
                s = p1.pair(u[:2 * n1], v[:2 * n1]) \
                    - p2.pair(u[2 * n1:], v[2 * n1:])
                if s != 0:
                    raise NotDirac("relation is not isotropic")
        self.n1 = n1
        self.n2 = n2
        self.subspace = subspace

    def __eq__(self, other):
        return (isinstance(other, CanonicalRelation)
                and (self.n1, self.n2) == (other.n1, other.n2)
                and self.subspace == other.subspace)


def relation_of_map(phi):
    """The canonical relation of phi: {((phi x, eta), (x, phi* eta))}."""
    nw = len(phi)
    nv = len(phi[0]) if nw else 0
    phit = _phi_t(phi)
    basis = []
    for i in range(nv):  # parametrized by x = e_i
        px = [frac(phi[j][i]) for j in range(nw)]
        v = px + [Fraction(0)] * nw
        v += [Fraction(1 if j == i else 0) for j in range(nv)]
        v += [Fraction(0)] * nv
        basis.append(v)
    for a in range(nw):  # parametrized by eta = e^a
        v = [Fraction(0)] * nw
        v += [Fraction(1 if b == a else 0) for b in range(nw)]
        v += [Fraction(0)] * nv
        v += [phit[i][a] for i in range(nv)]
        basis.append(v)
    return CanonicalRelation(nw, nv, Subspace(2 * nw + 2 * nv, basis))


def relation_of_dirac(L):
    """L viewed as a relation from E to the zero space."""
    return CanonicalRelation(L.n, 0, L.subspace)


def dirac_of_relation(rel):
    if rel.n2 != 0:
        raise FactorMismatch("relation does not end at the zero space")
    return LinearDirac(rel.n1, rel.subspace)


def compose_relations(L1, L2):
    """L1 o L2 = {(e1, e3) : exists e2 with (e1,e2) in L1, (e2,e3) in L2}."""
    if L1.n2 != L2.n1:
        raise FactorMismatch("middle factors do not match")
    n1, n2, n3 = L1.n1, L1.n2, L2.n2
    d1, d2, d3 = 2 * n1, 2 * n2, 2 * n3
    C1 = _constraint_rows(L1.subspace)
    C2 = _constraint_rows(L2.subspace)
    rows = []
    for c in C1:
        rows.append(list(c[:d1]) + list(c[d1:]) + [Fraction(0)] * d3)
    for c in C2:
        rows.append([Fraction(0)] * d1 + list(c[:d2]) + list(c[d2:]))
    ker = ratlin.kernel_basis(rows) if rows else \
        Subspace(d1 + d2 + d3, ratlin.identity(d1 + d2 + d3))
    out = [list(v[:d1]) + list(v[d1 + d2:]) for v in ker.basis]
    return CanonicalRelation(n1, n3, Subspace(d1 + d3, out))


def forward_via_relation(phi, L):
    return dirac_of_relation(
        compose_relations(relation_of_map(phi), relation_of_dirac(L)))


def backward_via_relation(phi, L):
    nw = len(phi)
    nv = len(phi[0]) if nw else 0
    # transpose of the relation of phi: from E_V to E_W
    rel = relation_of_map(phi)
    d1, d2 = 2 * nw, 2 * nv
    flipped = Subspace(d1 + d2,
                       [list(v[d1:]) + list(v[:d1])
                        for v in rel.subspace.basis])
    relT = CanonicalRelation(nv, nw, flipped)
    return dirac_of_relation(compose_relations(relT, relation_of_dirac(L)))


# ---------------------------------------------------------------------------
# Bilinear-form tools
# ---------------------------------------------------------------------------

def _form_value(G, u, v):
    n = len(G)
    return sum(frac(u[i]) * frac(G[i][j]) * frac(v[j])
               for i in range(n) for j in range(n))


def max_isotropic_dimension(G):
    pos, neg, zero, _ = ratlin.signature_normal_form(G)
    if zero:
        raise ValueError("form is degenerate")
    return min(pos, neg)


def hyperbolic_completion(G, W):
    """Null partners v_1..v_k for an isotropic W, plus the complement U.

    Output satisfies (v_i, v_j) = 0, (w_i, v_j) = delta_ij, and
    V = span(w_i, v_i) perp-sum U with U the orthogonal complement.
    """
    n = len(G)
    for u in W.basis:
        for v in W.basis:
            if _form_value(G, u, v) != 0:
                raise NotIsotropic("subspace is not isotropic for the form")
    if ratlin.rank([list(r) for r in G]) < n:
        raise ValueError("form is degenerate")
    ws = [list(w) for w in W.basis]
    vs = []
    for i in range(len(ws)):
        # u with (w_j, u) = delta_ij and (v_l, u) = 0 for l < i
        rows = [[sum(frac(G[a][b]) * w[a] for a in range(n))
                 for b in range(n)] for w in ws]
        rows += [[sum(frac(G[a][b]) * v[a] for a in range(n))
                  for b in range(n)] for v in vs]
        rhs = [Fraction(1 if j == i else 0) for j in range(len(ws))]
        rhs += [Fraction(0)] * len(vs)
        status, u = ratlin.solve(rows, rhs)
        if status != "SOLUTION":
            raise ValueError("form is degenerate on the relevant subspace")
        alpha = -_form_value(G, u, u) / 2
        v = [alpha * ws[i][b] + u[b] for b in range(n)]
        vs.append(v)
    span = Subspace(n, ws + vs)
    U = ratlin.annihilator(span, G)
    return vs, U


def _rational_sqrt(q):
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    a = int(round(num ** 0.5))
    b = int(round(den ** 0.5))
    for da in (a - 1, a, a + 1):
        for db in (b - 1, b, b + 1):
            if da >= 0 and db > 0 and da * da == num and db * db == den:
                return Fraction(da, db)
    return None


def extend_isotropic(G, W):
    """Extend isotropic W to dimension min(p, q) when rational null
    vectors are available in the orthogonal complement."""
    n = len(G)
    target = max_isotropic_dimension(G)
    ws = [list(w) for w in W.basis]
    while len(ws) < target:
        span = Subspace(n, ws) if ws else Subspace(n, [])
        vs, U = hyperbolic_completion(G, span) if ws else ([], Subspace(
            n, ratlin.identity(n)))
        # restricted form on U in its echelon basis
        k = U.dim
        Gu = [[_form_value(G, U.basis[a], U.basis[b]) for b in range(k)]
              for a in range(k)]
        pos, neg, zero, T = ratlin.signature_normal_form(Gu)
        diag = []
        for c in range(k):
            vec = [sum(frac(T[r][c]) * U.basis[r][j] for r in range(k))
                   for j in range(n)]
            diag.append((_form_value(G, vec, vec), vec))
        found = None
        for a in range(k):
            da, va = diag[a]
            if da == 0:
                found = va
                break
            for b in range(a + 1, k):
                db, vb = diag[b]
                if db == 0:
                    continue
                if da * db < 0:
                    c2 = -da / db
                    c = _rational_sqrt(c2)
                    if c is not None:
                        found = [x + c * y for x, y in zip(va, vb)]
                        break
            if found is not None:
                break
        if found is None:
            raise NoRationalExtension(
                "no rational null vector found in the complement")
        ws.append(found)
    return Subspace(n, ws)


def gauge_transform(B, L):
    """tau_B(x, eta) = (x, Bx + eta)."""
    _check_antisymmetric(B)
    n = L.n
    if len(B) != n:
        raise ShapeMismatch("gauge field size does not match")
    out = []
    for v in L.subspace.basis:
        x, eta = v[:n], v[n:]
        bx = [sum(frac(B[j][i]) * x[i] for i in range(n)) for j in range(n)]
        out.append(list(x) + [bx[j] + eta[j] for j in range(n)])
    return LinearDirac(n, Subspace(2 * n, out))


# ---------------------------------------------------------------------------
# Numeric routines (double precision; explicit tolerances)
# ---------------------------------------------------------------------------

def numeric_compatible_structure(G, k, tol=1e-9):
    """Product structure J and positive metric g from a split pairing G
    and a positive metric seed k.

    J = |A|^{-1} A for A = k^{-1} G; returns (J, g) with J @ J = I,
    J.T @ G @ J = G and g = G @ J symmetric positive definite.
    """
    G = np.asarray(G, dtype=float)
    k = np.asarray(k, dtype=float)
    n = G.shape[0]
    if G.shape != (n, n) or k.shape != (n, n):
        raise ShapeMismatch("matrices must be square of equal size")
    L = cholesky(k, lower=True)
    Li = solve_triangular(L, np.eye(n), lower=True)
    S = Li @ G @ Li.T
    S = (S + S.T) / 2
    w, Q = eigh(S)
    if np.min(np.abs(w)) < tol * np.max(np.abs(w)):
        raise IllConditioned("pairing is numerically degenerate")
    Jt = Q @ np.diag(np.sign(w)) @ Q.T
    J = Li.T @ Jt @ np.linalg.inv(Li.T)
    g = G @ J
    return J, g


def numeric_transport(P, t0, t1, h=1e-3, Pdot=None, tol=1e-6):
    """Transport frames along a projector curve by U' = [P', P] U, U0 = I.

    P is a callable t -> projector matrix (P(t) @ P(t) ~ P(t)); Pdot an
    optional callable for its derivative (central differences otherwise).
    Returns a list of (t, U) samples on the RK4 grid.
    """
    P0 = np.asarray(P(t0), dtype=float)
    n = P0.shape[0]
    if Pdot is None:
        d = max(h * 1e-2, 1e-7)

        def Pdot(t):
            return (np.asarray(P(t + d), float)
                    - np.asarray(P(t - d), float)) / (2 * d)

    def rhs(t, U):
        Pt = np.asarray(P(t), float)
        Pd = np.asarray(Pdot(t), float)
        return (Pd @ Pt - Pt @ Pd) @ U

    steps = int(round((t1 - t0) / h))
    t = t0
    U = np.eye(n)
    out = [(t, U.copy())]
    prev = P0
    for _ in range(steps):
        Pt = np.asarray(P(t + h), float)
        if np.linalg.norm(Pt - prev) > 0.5:
            raise StepTooLarge("projector moves too fast for the step size")
        k1 = rhs(t, U)
        k2 = rhs(t + h / 2, U + h / 2 * k1)
        k3 = rhs(t + h / 2, U + h / 2 * k2)
        k4 = rhs(t + h, U + h * k3)
        U = U + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        prev = Pt
        out.append((t, U.copy()))
    return out


def projector_onto(basis, n):
    """Float orthogonal projector onto the span of the given row vectors."""
    B = np.asarray(basis, dtype=float).reshape(-1, n)
    Q, _ = np.linalg.qr(B.T)
    r = np.linalg.matrix_rank(B)
    Q = Q[:, :r]
    return Q @ Q.T


def subspace_distance(P1, P2):
    """Operator-norm distance of two projectors (max principal angle sine)."""
    return float(np.linalg.norm(np.asarray(P1) - np.asarray(P2), 2))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _frac_str(x):
    f = frac(x)
    return str(f.numerator) if f.denominator == 1 else \
        f"{f.numerator}/{f.denominator}"


def subspace_to_json(S):
    return {"ambient": S.ambient_dim,
            "basis": [[_frac_str(x) for x in v] for v in S.basis]}


def subspace_from_json(obj):
    return Subspace(obj["ambient"],
                    [[Fraction(x) for x in v] for v in obj["basis"]])


def matrix_to_json(M):
    return [[_frac_str(x) for x in row] for row in M]


def matrix_from_json(rows):
    return [[Fraction(x) for x in row] for row in rows]


def dirac_to_json(L):
    return {"n": L.n, "subspace": subspace_to_json(L.subspace)}


def dirac_from_json(obj):
    return LinearDirac(obj["n"], subspace_from_json(obj["subspace"]))
