"""Implicit Hamiltonian systems over a constant linear Dirac structure.

A state x in R^n evolves subject to (xdot, dH(x)) in L, where L is a
maximal isotropic subspace of R^n + R^n*.  The structure is validated
exactly (over Q) before being converted to floats; trajectories are
integrated with classical RK4.  The admissible-function algebra (the
Poisson bracket on functions whose differential lies in the covector
projection of L) is computed exactly on polynomials with rational
coefficients.

Polynomials are sparse dicts {exponent_tuple: Fraction}.
"""

import re
from fractions import Fraction

import numpy as np

from . import ratlin
from .dirac_linear import LinearDirac, dirac_from_json, dirac_to_json


class NotAdmissible(Exception):
    pass


class LeftAdmissibleSet(Exception):
    def __init__(self, step, t, x):
        super().__init__(f"state left the admissible set at step {step}, "
                         f"t = {t}")
        self.step = step
        self.t = t
        self.x = x


class BadPolynomial(Exception):
    pass


# ---------------------------------------------------------------------------
# Sparse rational polynomials in x1..xn
# ---------------------------------------------------------------------------

def poly_zero():
    return {}


def poly_const(n, c):
    c = Fraction(c)
    return {} if c == 0 else {(0,) * n: c}


def poly_var(n, i):
    e = [0] * n
    e[i] = 1
    return {tuple(e): Fraction(1)}


def poly_add(p, q):
    out = dict(p)
    for e, c in q.items():
        s = out.get(e, Fraction(0)) + c
        if s:
            out[e] = s
        elif e in out:
            del out[e]
    return out


def poly_scale(c, p):
    c = Fraction(c)
    if c == 0:
        return {}
    return {e: c * v for e, v in p.items()}


def poly_mul(p, q):
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            s = out.get(e, Fraction(0)) + c1 * c2
            if s:
                out[e] = s
            elif e in out:
                del out[e]
    return out


def poly_diff(p, i):
    out = {}
    for e, c in p.items():
        if e[i] == 0:
            continue
        f = list(e)
        f[i] -= 1
        out[tuple(f)] = c * e[i]
    return out


def poly_eval(p, x):
    """Float evaluation at the point x."""
    total = 0.0
    for e, c in p.items():
        term = float(c)
        for xi, ei in zip(x, e):
            if ei:
                term *= float(xi) ** ei
        total += term
    return total


def poly_grad(p, n):
    return [poly_diff(p, i) for i in range(n)]


_MONO = re.compile(r"x(\d+)(?:\^(\d+))?$")


def poly_parse(n, text):
    """Parse '1/2 x1^2 + -1 x1 x2' into a sparse polynomial."""
    out = {}
    text = text.strip()
    if not text:
        return out
    for chunk in text.split("+"):
        parts = chunk.split()
        if not parts:
            raise BadPolynomial(f"empty term in {text!r}")
        try:
            coeff = Fraction(parts[0])
            factors = parts[1:]
        except ValueError:
            coeff = Fraction(1)
            factors = parts
        e = [0] * n
        for f in factors:
            mm = _MONO.match(f)
            if not mm:
                raise BadPolynomial(f"bad factor {f!r}")
            idx = int(mm.group(1)) - 1
            if not 0 <= idx < n:
                raise BadPolynomial(f"variable index out of range in {f!r}")
            e[idx] += int(mm.group(2) or 1)
        out = poly_add(out, {tuple(e): coeff})
    return out


def poly_to_text(p):
    if not p:
        return "0"
    terms = []
    for e, c in sorted(p.items()):
        factors = [str(c)]
        for i, ei in enumerate(e):
            if ei == 1:
                factors.append(f"x{i + 1}")
            elif ei > 1:
                factors.append(f"x{i + 1}^{ei}")
        terms.append(" ".join(factors))
    return " + ".join(terms)


# ---------------------------------------------------------------------------
# The system
# ---------------------------------------------------------------------------

class VelocityResult:
    """Outcome of one velocity solve.

    status is "OK" or "INADMISSIBLE"; for "OK", xdot is the least-norm
    particular solution, gauge an orthonormal basis of the solution
    freedom, residual the constraint residual of xdot.
    """

    def __init__(self, status, xdot=None, gauge=None, residual=None):
        self.status = status
        self.xdot = xdot
        self.gauge = gauge if gauge is not None else []
        self.residual = residual


class Trajectory:
    def __init__(self, times, points, energies, max_drift, max_residual):
        self.times = times
        self.points = points
        self.energies = energies
        self.max_drift = max_drift
        self.max_residual = max_residual


class IHSystem:
    """Constant linear Dirac structure + polynomial Hamiltonian."""

    def __init__(self, L, H, h=1e-3, tol=1e-9):
        if not isinstance(L, LinearDirac):
            if L.ambient_dim % 2:
                raise BadPolynomial("subspace must live in R^n + R^n*")
            L = LinearDirac(L.ambient_dim // 2, L)
        self.L = L            # exact, validated maximal isotropic
        self.n = L.n
        self.H = {tuple(e): Fraction(c) for e, c in H.items()}
        for e in self.H:
            if len(e) != self.n:
                raise BadPolynomial("Hamiltonian arity does not match n")
        self.h = h
        self.tol = tol
        basis = [list(map(float, row)) for row in L.subspace.basis]
        B = np.array(basis, dtype=float).reshape(len(basis), 2 * self.n)
        self.vec_part = B[:, :self.n]      # a-components of the L basis
        self.cov_part = B[:, self.n:]      # alpha-components
        self.gradH = poly_grad(self.H, self.n)

    # -- dynamics -------------------------------------------------------

    def dH(self, x):
        return np.array([poly_eval(g, x) for g in self.gradH])

    def energy(self, x):
        return poly_eval(self.H, x)

    def velocity_solve(self, x):
        """Least-norm xdot with (xdot, dH(x)) in L, plus gauge basis."""
        dh = self.dH(x)
        M = self.cov_part
        b = -self.vec_part @ dh
        xdot, *_ = np.linalg.lstsq(M, b, rcond=None)
        residual = float(np.linalg.norm(M @ xdot - b, np.inf))
        scale = 1.0 + float(np.linalg.norm(b, np.inf))
        if residual > self.tol * scale:
            return VelocityResult("INADMISSIBLE", residual=residual)
        # gauge freedom: null space of the constraint matrix
        u, s, vt = np.linalg.svd(M)
        rank = int(np.sum(s > max(M.shape) * np.finfo(float).eps
                          * (s[0] if len(s) else 1.0)))
        gauge = [vt[i] for i in range(rank, vt.shape[0])]
        return VelocityResult("OK", xdot=xdot, gauge=gauge,
                              residual=residual)

    def energy_derivative(self, x):
        """dH/dt at the solve point: zero by isotropy whenever the
        solve succeeds."""
        r = self.velocity_solve(x)
        if r.status != "OK":
            return None
        return float(self.dH(x) @ r.xdot)

    def integrate(self, x0, steps, h=None):
        """RK4 trajectory; raises LeftAdmissibleSet if a stage leaves
        the admissible set."""
        h = self.h if h is None else h
        x = np.array(x0, dtype=float)
        times = [0.0]
        points = [x.copy()]
        e0 = self.energy(x)
        energies = [e0]
        max_res = 0.0

        def f(step, t, y):
            nonlocal max_res
            r = self.velocity_solve(y)
            if r.status != "OK":
                raise LeftAdmissibleSet(step, t, y)
            max_res = max(max_res, r.residual)
            return r.xdot

        for s in range(steps):
            t = s * h
            k1 = f(s, t, x)
            k2 = f(s, t + h / 2, x + h / 2 * k1)
            k3 = f(s, t + h / 2, x + h / 2 * k2)
            k4 = f(s, t + h, x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            times.append((s + 1) * h)
            points.append(x.copy())
            energies.append(self.energy(x))
        drift = max(abs(e - e0) for e in energies)
        return Trajectory(times, points, energies, drift, max_res)

    # -- admissible-function algebra (exact) ----------------------------

    def covector_projection(self):
        """pr_{V*}(L) as an exact Subspace of Q^n."""
        rows = [list(row)[self.n:] for row in self.L.subspace.basis]
        return ratlin.Subspace(self.n, rows)

    def kernel_directions(self):
        """L cap V: exact basis of the gauge directions."""
        rows = [list(row) for row in self.L.subspace.basis]
        mt = [[rows[j][self.n + i] for j in range(len(rows))]
              for i in range(self.n)]
        combos = ratlin.kernel_basis(
            [[mt[i][j] for j in range(len(rows))] for i in range(self.n)])
        out = []
        for y in combos.basis:
            u = [sum((y[j] * rows[j][i] for j in range(len(rows))),
                     Fraction(0)) for i in range(self.n)]
            out.append(u)
        return out

    def is_admissible(self, f):
        """Exact coefficient-wise membership of df in pr_{V*}(L)."""
        W = self.covector_projection()
        grads = poly_grad(f, self.n)
        exps = sorted({e for g in grads for e in g})
        for e in exps:
            c = [g.get(e, Fraction(0)) for g in grads]
            if not W.contains_vector(c):
                return False
        return True

    def hamiltonian_field(self, f):
        """A polynomial vector field X_f with (X_f, df) in L pointwise.

        The choice is unique up to kernel_directions(); the induced
        bracket does not depend on it.  Raises NotAdmissible if df
        leaves the covector projection of L.
        """
        rows = [list(row) for row in self.L.subspace.basis]
        ncols = len(rows)
        M = [[rows[j][self.n + i] for j in range(ncols)]
             for i in range(self.n)]
        grads = poly_grad(f, self.n)
        exps = sorted({e for g in grads for e in g})
        field = [poly_zero() for _ in range(self.n)]
        for e in exps:
            c = [g.get(e, Fraction(0)) for g in grads]
            status, y = ratlin.solve(M, c)
            if status != "SOLUTION":
                raise NotAdmissible(
                    "differential leaves the covector projection")
            u = [sum((y[j] * rows[j][i] for j in range(ncols)),
                     Fraction(0)) for i in range(self.n)]
            for i in range(self.n):
                if u[i]:
                    field[i] = poly_add(field[i], {e: u[i]})
        return field

    def admissible_bracket(self, f, g):
        """{f, g} = X_f(g), exact on rational polynomials."""
        if not self.is_admissible(g):
            raise NotAdmissible("second argument is not admissible")
        X = self.hamiltonian_field(f)
        out = poly_zero()
        for i in range(self.n):
            out = poly_add(out, poly_mul(X[i], poly_diff(g, i)))
        return out


# ---------------------------------------------------------------------------
# Stock structures and serialization
# ---------------------------------------------------------------------------

def graph_of_bivector(pi):
    """L = {(pi @ eta, eta)} for an antisymmetric n x n matrix pi."""
    n = len(pi)
    rows = []
    for j in range(n):
        eta = [Fraction(0)] * n
        eta[j] = Fraction(1)
        vec = [Fraction(pi[i][j]) for i in range(n)]
        rows.append(vec + eta)
    return LinearDirac(n, ratlin.Subspace(2 * n, rows))


def canonical_symplectic(d):
    """Canonical structure on (q_1..q_d, p_1..p_d) with
    xdot = (dH/dp, -dH/dq)."""
    n = 2 * d
    pi = [[Fraction(0)] * n for _ in range(n)]
    for i in range(d):
        pi[i][d + i] = Fraction(1)
        pi[d + i][i] = Fraction(-1)
    return graph_of_bivector(pi)


def system_to_json(sys_):
    return {
        "n": sys_.n,
        "L": dirac_to_json(sys_.L),
        "H": [[list(e), str(c)] for e, c in sorted(sys_.H.items())],
        "h": sys_.h,
        "tol": sys_.tol,
    }


def system_from_json(obj):
    L = dirac_from_json(obj["L"])
    H = {tuple(e): Fraction(c) for e, c in obj["H"]}
    return IHSystem(L, H, h=obj.get("h", 1e-3), tol=obj.get("tol", 1e-9))
