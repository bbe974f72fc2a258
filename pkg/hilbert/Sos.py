# Sums of squares: Gram parametrisation, a dense primal-dual interior-point
# SDP solver, the diagonally dominant (DSOS) linear substitute, and the
# extraction of exact square-root witnesses from Gram matrices.

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

import numpy as np
from scipy import linalg

from hilbert.Encoding import PsdBlock
from hilbert.Helpers import rationalize
from hilbert.Polynomial import Polynomial, monomial_basis
from hilbert.Solution import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, DualCertificate, Solution
from hilbert.utils import FormulationError, SolverError, Statistics

log = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-8


@dataclass(frozen=True)
class GramBlock(PsdBlock):
    basis: Tuple[Tuple[int, ...], ...] = ()

    def expansion(self):
        # monomial -> [(column, weight)] of v(x)^T G v(x); off-diagonal entries count twice
        out = {}
        for (i, j), col in self.entries:
            mono = tuple(a + b for a, b in zip(self.basis[i], self.basis[j]))
            out.setdefault(mono, []).append((col, 1 if i == j else 2))
        return out


@dataclass(frozen=True)
class SosWitness:
    """alpha = sum of c_i * q_i^2 with c_i >= 0 rational."""
    squares: Tuple[Tuple[Fraction, Polynomial], ...] = ()
    rationalized: bool = True

    def expand(self, vars):
        total = Polynomial.zero(vars)
        for c, root in self.squares:
            total = total + (root * root).scale(c)
        return total

    def isEmpty(self):
        return not self.squares

    def weightsNonnegative(self):
        return all(c >= 0 for c, _ in self.squares)

    def scale(self, c):
        c = Fraction(c)
        if c < 0:
            raise FormulationError("SOS witnesses only scale by nonnegative factors")
        return SosWitness(tuple((w * c, root) for w, root in self.squares if w * c), self.rationalized)

    def __str__(self):
        if not self.squares:
            return '0'
        return ' + '.join(f"{c}*({root})^2" for c, root in self.squares)


def gram_parametrize(builder, target_degree, vars, caps=None, owner='alpha0', psd=True):
    """Allocate a Gram block for an SOS polynomial of degree target_degree.
    Returns the GramBlock; its expansion() gives, per monomial, the Gram
    columns that feed the coefficient-matching row of that monomial."""
    if target_degree < 0:
        return None
    if target_degree % 2:
        raise FormulationError(f"SOS degree must be even, got {target_degree}")
    half = target_degree // 2
    halfCaps = None if caps is None else {name: cap // 2 for name, cap in dict(caps).items()}
    basis = tuple(monomial_basis(vars, half, halfCaps))
    if len(basis) == 1:
        # 1x1 Gram: a nonnegative constant, no cone needed
        col = builder.column(f"gram:{owner}", (0, 0), lower=0)
        return GramBlock(owner, 1, (((0, 0), col),), basis)
    entries = []
    for i in range(len(basis)):
        for j in range(i, len(basis)):
            entries.append(((i, j), builder.column(f"gram:{owner}", (i, j))))
    block = GramBlock(owner, len(basis), tuple(entries), basis)
    if psd:
        builder.addPsd(block)
    return block

def dsos_rows(builder, block):
    """Diagonal dominance G_ii >= sum_{j != i} |G_ij|, through nonnegative
    auxiliaries a_ij >= |G_ij|."""
    rows = []
    entries = dict(block.entries)
    aux = {}
    for (i, j), col in block.entries:
        if i == j:
            continue
        a = builder.column(f"dsos:{block.owner}", (i, j), lower=0)
        aux[(i, j)] = a
        rows.append(builder.addRow({a: 1, col: -1}, '>=', 0, f"dsos:{block.owner}"))
        rows.append(builder.addRow({a: 1, col: 1}, '>=', 0, f"dsos:{block.owner}"))
    for i in range(block.size):
        coeffs = {entries[(i, i)]: 1}
        for j in range(block.size):
            if j != i:
                coeffs[aux[(min(i, j), max(i, j))]] = -1
        rows.append(builder.addRow(coeffs, '>=', 0, f"dsos:{block.owner}"))
    return [r for r in rows if r is not None]


### interior point method

class _ConicForm:
    """spec rewritten as min <C,X> + c_l x_l + c_f x_f
    s.t. A(X) + A_l x_l + A_f x_f = b, X psd, x_l >= 0, x_f free."""

    def __init__(self, spec):
        self.spec = spec
        where = {}
        for k, block in enumerate(spec.psd_blocks):
            for (i, j), col in block.entries:
                where[col] = (k, i, j)
        self.sizes = [b.size for b in spec.psd_blocks]
        nl = nf = 0
        affine = {}
        extra = []
        for col in range(spec.nCols):
            if col in where:
                affine[col] = (0.0, [('s', where[col], 1.0)])
                continue
            lo, hi = spec.lower[col], spec.upper[col]
            if lo is None and hi is None:
                affine[col] = (0.0, [('f', nf, 1.0)])
                nf += 1
            elif lo is not None:
                affine[col] = (float(lo), [('l', nl, 1.0)])
                if hi is not None:
                    extra.append(([('l', nl, 1.0), ('l', nl + 1, 1.0)], float(hi - lo)))
                    nl += 1
                nl += 1
            else:
                affine[col] = (float(hi), [('l', nl, -1.0)])
                nl += 1
        rows = []
        for row in spec.rows:
            terms, rhs = [], float(row.rhs)
            for col, a in row.coeffs.items():
                const, parts = affine[col]
                rhs -= float(a) * const
                terms.extend((kind, idx, float(a) * c) for kind, idx, c in parts)
            if row.sense == '<=':
                terms.append(('l', nl, 1.0))
                nl += 1
            elif row.sense == '>=':
                terms.append(('l', nl, -1.0))
                nl += 1
            rows.append((terms, rhs))
        rows.extend(extra)
        self.affine = affine
        self.m, self.nl, self.nf = len(rows), nl, nf
        self.b = np.array([rhs for _, rhs in rows], dtype=float)
        self.A_l = np.zeros((self.m, nl))
        self.A_f = np.zeros((self.m, nf))
        touching = [dict() for _ in self.sizes]
        for r, (terms, _) in enumerate(rows):
            for kind, idx, c in terms:
                if kind == 'l':
                    self.A_l[r, idx] += c
                elif kind == 'f':
                    self.A_f[r, idx] += c
                else:
                    k, i, j = idx
                    M = touching[k].setdefault(r, np.zeros((self.sizes[k], self.sizes[k])))
                    if i == j:
                        M[i, i] += c
                    else:
                        M[i, j] += c / 2
                        M[j, i] += c / 2
        # per block: indices of the rows touching it and the stacked matrices
        self.blocks = []
        for k, n in enumerate(self.sizes):
            idx = np.array(sorted(touching[k]), dtype=int)
            stack = np.array([touching[k][r] for r in idx]).reshape(len(idx), n, n)
            self.blocks.append((idx, stack))
        self.C = [np.zeros((n, n)) for n in self.sizes]
        self.c_l = np.zeros(nl)
        self.c_f = np.zeros(nf)
        self.constant = float(spec.objective_constant)
        for col, c in spec.objective.items():
            const, parts = affine[col]
            self.constant += float(c) * const
            for kind, idx, a in parts:
                a *= float(c)
                if kind == 'l':
                    self.c_l[idx] += a
                elif kind == 'f':
                    self.c_f[idx] += a
                else:
                    k, i, j = idx
                    if i == j:
                        self.C[k][i, i] += a
                    else:
                        self.C[k][i, j] += a / 2
                        self.C[k][j, i] += a / 2

    def apply(self, X, xl, xf):
        out = self.A_l @ xl + self.A_f @ xf
        for (idx, stack), Xk in zip(self.blocks, X):
            if len(idx):
                out[idx] += np.einsum('rij,ij->r', stack, Xk)
        return out

    def adjoint(self, y):
        S = []
        for (idx, stack), n in zip(self.blocks, self.sizes):
            S.append(np.einsum('r,rij->ij', y[idx], stack) if len(idx) else np.zeros((n, n)))
        return S, self.A_l.T @ y, self.A_f.T @ y

    def recover(self, X, xl, xf):
        values = []
        for col in range(self.spec.nCols):
            const, parts = self.affine[col]
            v = const
            for kind, idx, c in parts:
                if kind == 'l':
                    v += c * xl[idx]
                elif kind == 'f':
                    v += c * xf[idx]
                else:
                    k, i, j = idx
                    v += c * X[k][i, j]
            values.append(float(v))
        return values


def _sym(M):
    return (M + M.T) / 2

def _maxStep(X, dX):
    # largest a with X + a dX psd
    if X.size == 0:
        return np.inf
    try:
        L = np.linalg.cholesky(X)
        Li = linalg.solve_triangular(L, np.eye(len(X)), lower=True)
        lam = np.linalg.eigvalsh(_sym(Li @ dX @ Li.T)).min()
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(X)
        w = np.maximum(w, 1e-300)
        S = V / np.sqrt(w)
        lam = np.linalg.eigvalsh(_sym(S.T @ dX @ S)).min()
    return np.inf if lam >= 0 else -1.0 / lam

def _maxStepVec(x, dx):
    neg = dx < 0
    return np.inf if not neg.any() else float(np.min(-x[neg] / dx[neg]))


class _InteriorPoint:
    """Infeasible-start primal-dual path following with the HKM direction
    and Mehrotra's predictor-corrector."""

    def __init__(self, form, max_iterations=200, tol=1e-8, stats=None):
        self.form = form
        self.max_iterations = max_iterations
        self.tol = tol
        self.stats = stats if stats is not None else Statistics()

    def _schur(self, X, Zi, ratio):
        f = self.form
        M = (f.A_l * ratio) @ f.A_l.T
        for (idx, stack), Xk, Zik in zip(f.blocks, X, Zi):
            if len(idx):
                W = Zik @ stack @ Xk
                M[np.ix_(idx, idx)] += np.einsum('sij,rij->rs', stack, W)
        return _sym(M)

    def _solve(self, M, h, rdf):
        f = self.form
        nf = f.nf
        K = np.block([[M, f.A_f], [f.A_f.T, np.zeros((nf, nf))]])
        rhs = np.concatenate([h, rdf])
        K[np.diag_indices(f.m)] += 1e-14 * max(1.0, np.abs(np.diag(M)).max(initial=0.0))
        try:
            sol = linalg.solve(K, rhs, assume_a='sym')
            if not np.all(np.isfinite(sol)):
                raise linalg.LinAlgError
        except (linalg.LinAlgError, ValueError):
            sol = linalg.lstsq(K, rhs)[0]
        return sol[:f.m], sol[f.m:]

    def _direction(self, state, Zi, M, Rp, Rd, rdl, rdf, R, rl):
        f = self.form
        X, Z, xl, zl, xf, y = state
        h = Rp - f.apply(R, rl, np.zeros(f.nf))
        h += f.apply([Zik @ Rdk @ Xk for Zik, Rdk, Xk in zip(Zi, Rd, X)], xl / zl * rdl, np.zeros(f.nf))
        dy, dxf = self._solve(M, h, rdf)
        S, Sl, _ = f.adjoint(dy)
        dZ = [Rdk - Sk for Rdk, Sk in zip(Rd, S)]
        dX = [_sym(Rk - Zik @ dZk @ Xk) for Rk, Zik, dZk, Xk in zip(R, Zi, dZ, X)]
        dzl = rdl - Sl
        dxl = rl - xl / zl * dzl
        return dX, dZ, dxl, dzl, dxf, dy

    def _steps(self, state, d, scale=1.0):
        X, Z, xl, zl = state[:4]
        dX, dZ, dxl, dzl = d[:4]
        ap = min([_maxStep(Xk, dXk) for Xk, dXk in zip(X, dX)] + [_maxStepVec(xl, dxl)], default=np.inf)
        ad = min([_maxStep(Zk, dZk) for Zk, dZk in zip(Z, dZ)] + [_maxStepVec(zl, dzl)], default=np.inf)
        return min(1.0, scale * ap), min(1.0, scale * ad)

    def run(self):
        f = self.form
        N = sum(f.sizes) + f.nl
        normA = max([np.linalg.norm(stack[r]) for idx, stack in f.blocks for r in range(len(idx))]
                    + [np.linalg.norm(f.A_l[r]) + np.linalg.norm(f.A_f[r]) for r in range(f.m)], default=1.0)
        normC = np.sqrt(sum(np.sum(Ck ** 2) for Ck in f.C) + np.sum(f.c_l ** 2) + np.sum(f.c_f ** 2))
        xi = max(10.0, np.sqrt(max(N, 1)), float(np.max((1 + np.abs(f.b)) / (1 + normA), initial=0.0)))
        eta = max(10.0, np.sqrt(max(N, 1)), normC, normA)
        X = [xi * np.eye(n) for n in f.sizes]
        Z = [eta * np.eye(n) for n in f.sizes]
        xl, zl = np.full(f.nl, xi), np.full(f.nl, eta)
        xf, y = np.zeros(f.nf), np.zeros(f.m)
        normB = 1 + np.linalg.norm(f.b)
        status, message = LIMIT, 'iteration limit'

        for it in range(self.max_iterations):
            S, Sl, Sf = f.adjoint(y)
            Rp = f.b - f.apply(X, xl, xf)
            Rd = [Ck - Sk - Zk for Ck, Sk, Zk in zip(f.C, S, Z)]
            rdl = f.c_l - Sl - zl
            rdf = f.c_f - Sf
            pobj = sum(np.sum(Ck * Xk) for Ck, Xk in zip(f.C, X)) + f.c_l @ xl + f.c_f @ xf
            dobj = f.b @ y
            mu = (sum(np.sum(Xk * Zk) for Xk, Zk in zip(X, Z)) + xl @ zl) / max(N, 1)
            pinf = np.linalg.norm(Rp) / normB
            dinf = (np.sqrt(sum(np.sum(R ** 2) for R in Rd) + rdl @ rdl + rdf @ rdf)) / (1 + normC)
            gap = max(abs(pobj - dobj), mu * N)
            log.debug(f"ipm {it}: pobj={pobj:.6e} dobj={dobj:.6e} pinf={pinf:.1e} dinf={dinf:.1e} mu={mu:.1e}")
            if pinf <= self.tol and dinf <= self.tol and gap <= self.tol * (1 + abs(pobj)):
                status, message = OPTIMAL, 'converged'
                break
            if dobj > 1e8 * (1 + normC) and dinf < 1e-3:
                status, message = INFEASIBLE, 'dual objective diverges (primal infeasible)'
                break
            if -pobj > 1e8 * normB and pinf < 1e-3:
                status, message = UNBOUNDED, 'primal objective diverges'
                break
            try:
                Zi = [linalg.cho_solve(linalg.cho_factor(Zk), np.eye(len(Zk))) for Zk in Z]
            except linalg.LinAlgError:
                message = 'dual iterate lost definiteness'
                break
            M = self._schur(X, Zi, xl / zl)
            state = (X, Z, xl, zl, xf, y)
            # predictor
            R = [-Xk for Xk in X]
            pred = self._direction(state, Zi, M, Rp, Rd, rdl, rdf, R, -xl)
            ap, ad = self._steps(state, pred)
            muAff = (sum(np.sum((Xk + ap * dXk) * (Zk + ad * dZk)) for Xk, dXk, Zk, dZk in zip(X, pred[0], Z, pred[1]))
                     + (xl + ap * pred[2]) @ (zl + ad * pred[3])) / max(N, 1)
            sigma = min(1.0, max(0.0, muAff / mu)) ** 3 if mu > 0 else 0.0
            # corrector
            R = [_sym(sigma * mu * Zik - Xk - Zik @ dZa @ dXa)
                 for Zik, Xk, dZa, dXa in zip(Zi, X, pred[1], pred[0])]
            rl = sigma * mu / zl - xl - pred[3] * pred[2] / zl
            d = self._direction(state, Zi, M, Rp, Rd, rdl, rdf, R, rl)
            ap, ad = self._steps(state, d, 0.95)
            if ap < 1e-12 and ad < 1e-12:
                message = 'step length collapsed'
                break
            X = [Xk + ap * dXk for Xk, dXk in zip(X, d[0])]
            Z = [Zk + ad * dZk for Zk, dZk in zip(Z, d[1])]
            xl, zl = xl + ap * d[2], zl + ad * d[3]
            xf = xf + ap * d[4]
            y = y + ad * d[5]
        self.stats.increment_counter('ipm_iterations', it + 1)
        values = f.recover(X, xl, xf)
        objective = float(self.form.spec.objective_constant + sum(float(c) * values[j] for j, c in self.form.spec.objective.items()))
        return Solution(status,
                        values=values if status in (OPTIMAL, LIMIT) else None,
                        objective=objective if status == OPTIMAL else None,
                        dual=DualCertificate(list(y[:len(self.form.spec.rows)])),
                        exact=False,
                        stats=self.stats.asDict(),
                        message=message)


def solve_sdp(spec, max_iterations=200, block_cap=50, tol=1e-8, stats=None):
    if spec.binaries:
        raise SolverError("PSD blocks combined with binaries are not supported")
    for block in spec.psd_blocks:
        if block.size > block_cap:
            raise SolverError(f"Gram block {block.owner} of size {block.size} exceeds the cap {block_cap}; use sos = dsos")
    form = _ConicForm(spec)
    log.debug(f"SDP: {form.m} rows, blocks {form.sizes}, {form.nl} nonnegative and {form.nf} free variables")
    solution = _InteriorPoint(form, max_iterations, tol, stats).run()
    if solution.status == LIMIT:
        log.warning(f"SDP solver stopped: {solution.message}")
    return solution


### witnesses

def _ldl(G, exact):
    # symmetric LDL^T without pivoting; None if G is not psd
    n = len(G)
    A = [list(row) for row in G]
    L = [[Fraction(int(i == j)) if exact else float(i == j) for j in range(n)] for i in range(n)]
    D = []
    eps = 0 if exact else 1e-14
    for k in range(n):
        d = A[k][k]
        if d < -eps:
            return None
        if d <= eps:
            if any(abs(A[i][k]) > (0 if exact else 1e-9) for i in range(k + 1, n)):
                return None
            D.append(0)
            continue
        D.append(d)
        for i in range(k + 1, n):
            L[i][k] = A[i][k] / d
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] -= L[i][k] * A[k][j]
    return L, D

def _witnessFromLdl(L, D, basis, vars, exact):
    squares = []
    for i, d in enumerate(D):
        if not d:
            continue
        terms = {basis[j]: L[j][i] if exact else Fraction(float(L[j][i])) for j in range(i, len(basis)) if L[j][i]}
        squares.append((Fraction(d) if exact else Fraction(float(d)), Polynomial(vars, terms)))
    return tuple(squares)

def gram_form(G, basis, vars):
    terms = {}
    for i in range(len(basis)):
        for j in range(len(basis)):
            mono = tuple(a + b for a, b in zip(basis[i], basis[j]))
            terms[mono] = terms.get(mono, 0) + G[i][j]
    return Polynomial(vars, terms)

def rationalize_gram(G, max_denominator=10**6, tol=1e-6):
    n = len(G)
    Q = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = float(G[i][j] + G[j][i]) / 2
            f = rationalize(v, max_denominator, tol)
            Q[i][j] = Q[j][i] = f if f is not None else Fraction(v)
    return Q

def extract_witness(gram, basis, vars, tol=1e-6, max_denominator=10**6):
    """Factor a numeric Gram matrix into c_i * q_i^2 squares. The exact
    path rationalises the entries and factors them in rational arithmetic;
    when that matrix is not psd the float factorisation is returned with
    rationalized=False."""
    basis = tuple(basis)
    if not basis:
        return SosWitness((), True)
    if all(isinstance(v, Fraction) for row in gram for v in row):
        Q = [list(row) for row in gram]
    else:
        G = _sym(np.array(gram, dtype=float))
        if np.linalg.eigvalsh(G).min() < -PSD_TOLERANCE * max(1.0, np.abs(G).max()):
            raise SolverError("Gram matrix is not positive semidefinite")
        Q = rationalize_gram(G, max_denominator, tol)
    factors = _ldl(Q, exact=True)
    if factors is not None:
        witness = SosWitness(_witnessFromLdl(*factors, basis, vars, True), True)
        if witness.expand(vars) == gram_form(Q, basis, vars):
            return witness
    G = _sym(np.array([[float(v) for v in row] for row in gram], dtype=float))
    if np.linalg.eigvalsh(G).min() <= 0:
        G = G + PSD_TOLERANCE * np.eye(len(G))
    factors = _ldl(G.tolist(), exact=False)
    if factors is None:
        raise SolverError("LDL factorisation failed after shift")
    return SosWitness(_witnessFromLdl(*factors, basis, vars, False), False)

def project_gram(G, basis, target):
    """Orthogonal projection of a rational Gram matrix onto the affine set
    {G : v^T G v = target}: each monomial class absorbs its residual evenly.
    None if target has a monomial no entry can produce."""
    n = len(basis)
    G = [list(row) for row in G]
    classes = {}
    for i in range(n):
        for j in range(n):
            mono = tuple(a + b for a, b in zip(basis[i], basis[j]))
            classes.setdefault(mono, []).append((i, j))
    terms = target.terms
    for mono in terms:
        if mono not in classes:
            return None
    for mono, cells in classes.items():
        delta = (terms.get(mono, 0) - sum(G[i][j] for i, j in cells)) / len(cells)
        if delta:
            for i, j in cells:
                G[i][j] += delta
    return G

def exact_witness(G, basis, vars):
    # rational Gram -> exact witness, None if not psd
    factors = _ldl(G, exact=True)
    if factors is None:
        return None
    return SosWitness(_witnessFromLdl(*factors, basis, vars, True), True)
