"""Smooth convex subproblem solver for the beamforming iteration.

Each outer iteration maximises the sum of stream rates subject to: a
concave surrogate lower bound on every (GBS, stream) decode constraint,
interference-plus-noise bounds, interference-temperature quadratics at the
occupied GBSs, and the transmit power ball.  The subproblem is solved with
a log-barrier interior-point method using damped Newton steps.

All quantities are normalised internally: beamformers by the power budget,
each decode pair by its initial signal power, each interference constraint
by its temperature bound.  That keeps every constraint O(1) even though
the physical powers span ~13 orders of magnitude.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .association import StreamAssociation, derive_sets
from .channel import ChannelSet
from .network import Topology

LN2 = float(np.log(2.0))

# Barrier schedule: t starts at 1 and grows tenfold per stage until the
# duality-gap bound m/t drops below GAP_TOL.  The tight tolerance keeps the
# returned objective within the 1e-9 no-regression contract.
BARRIER_T0 = 1.0
BARRIER_MU = 10.0
GAP_TOL = 1e-10
NEWTON_TOL = 5e-10          # half squared Newton decrement
NEWTON_MAX_ITER = 60
LINESEARCH_ALPHA = 0.25
LINESEARCH_BETA = 0.5


class NonPositiveAnchor(ValueError):
    """Raised when a surrogate anchor c is not strictly positive."""


def rate_surrogate(a, b, rate, eta, anchor_a, anchor_b, anchor_c):
    """Concave lower bound on a^2 + b^2 - (2^rate - 1) * eta.

    Returns (value, gradient) with the gradient ordered (a, b, rate, eta).
    The bound is tight exactly at a = anchor_a, b = anchor_b and
    anchor_c = sqrt((2^rate - 1) / eta).
    """
    if anchor_c <= 0:
        raise NonPositiveAnchor(f"anchor_c must be > 0, got {anchor_c}")
    growth = 2.0 ** rate
    psi = eta * anchor_c / 2.0 + (growth - 1.0) / (2.0 * anchor_c)
    value = (2.0 * anchor_a * a + 2.0 * anchor_b * b
             - anchor_a**2 - anchor_b**2 - psi**2)
    grad = np.array([
        2.0 * anchor_a,
        2.0 * anchor_b,
        -psi * LN2 * growth / anchor_c,
        -psi * anchor_c,
    ])
    return float(value), grad


def _rows_for(vec: np.ndarray, offset: int, n: int):
    """Real rows (v, u) so that v@x = Re(vec^H xi) and u@x = Im(vec^H xi)
    for the complex block xi stored as [Re; Im] starting at ``offset``."""
    d = vec.size
    v = np.zeros(n)
    u = np.zeros(n)
    v[offset:offset + d] = vec.real
    v[offset + d:offset + 2 * d] = vec.imag
    u[offset:offset + d] = -vec.imag
    u[offset + d:offset + 2 * d] = vec.real
    return v, u


@dataclass
class SubproblemSpec:
    """Normalised problem data plus the current surrogate anchors.

    Build once per beamforming run with :meth:`build`; refresh anchors
    between outer iterations with :meth:`set_anchors`.
    """

    n_streams: int
    m_antennas: int
    power_w: float
    bases: list                     # per stream, complex (M, d_j)
    block_offsets: np.ndarray       # start of each stream's real block
    block_dims: np.ndarray          # d_j per stream
    n_vars: int
    rate_offset: int
    eta_offset: int

    pair_gbs: tuple                 # available GBS id per decode pair
    pair_stream: np.ndarray         # stream index per pair
    pair_scale: np.ndarray          # physical Watts per normalised unit
    sigma2_hat: np.ndarray          # normalised noise per pair

    v_rows: np.ndarray              # (T, n) real parts of all channel terms
    u_rows: np.ndarray              # (T, n) imaginary parts
    n_pairs: int
    cross_group: np.ndarray         # pair index per cross-interference term
    itf_group: np.ndarray           # constraint index per temperature term
    n_itf: int
    itf_gbs: tuple                  # occupied GBS id per temperature constraint

    quad_hessians: list             # constant Hessians of the quadratic constraints
    quad_constraint_index: np.ndarray

    anchor_a: np.ndarray = field(default=None)
    anchor_b: np.ndarray = field(default=None)
    anchor_c: np.ndarray = field(default=None)

    # ---------------------------------------------------------------- build
    @classmethod
    def build(cls, channels: ChannelSet, topology: Topology,
              assoc: StreamAssociation, power_w: float, theta_w: dict,
              w_init: np.ndarray, bases=None) -> "SubproblemSpec":
        """Assemble the normalised subproblem around an initial beamformer.

        ``theta_w`` must contain strictly positive bounds; zero-temperature
        GBSs are handled upstream by restricting ``bases``.
        """
        j_streams = assoc.n_streams
        m = channels.m_antennas
        if bases is None:
            bases = [np.eye(m, dtype=complex) for _ in range(j_streams)]
        dims = np.array([b.shape[1] for b in bases])
        offsets = np.concatenate([[0], np.cumsum(2 * dims)])[:-1]
        w_dim = int(np.sum(2 * dims))

        pairs = []
        for j, group in enumerate(assoc.groups):
            for n2 in sorted(group):
                pairs.append((n2, j))
        n_pairs = len(pairs)
        n_vars = w_dim + j_streams + n_pairs
        rate_offset = w_dim
        eta_offset = w_dim + j_streams

        sqrt_p = np.sqrt(power_w)
        pair_scale = np.zeros(n_pairs)
        sigma2_hat = np.zeros(n_pairs)
        for p, (n2, j) in enumerate(pairs):
            signal = np.abs(np.vdot(channels.vector(n2), w_init[j])) ** 2
            if signal <= 0:
                raise ValueError(f"initial beam carries no power to GBS {n2}")
            pair_scale[p] = signal
            sigma2_hat[p] = channels.noise(n2) / signal

        v_list, u_list = [], []

        def add_term(gbs_id, stream, scale):
            vec = sqrt_p * (bases[stream].conj().T @ channels.vector(gbs_id)) / np.sqrt(scale)
            v, u = _rows_for(vec, int(offsets[stream]), n_vars)
            v_list.append(v)
            u_list.append(u)

        for p, (n2, j) in enumerate(pairs):
            add_term(n2, j, pair_scale[p])

        cross_group = []
        for p, (n2, j) in enumerate(pairs):
            for i in range(j_streams):
                if i != j:
                    add_term(n2, i, pair_scale[p])
                    cross_group.append(p)

        sets = derive_sets(topology, assoc)
        itf_group, itf_gbs = [], []
        idx = 0
        for n1 in sorted(topology.occupied):
            streams = sorted(sets.residual_streams[n1])
            if not streams:
                continue
            bound = theta_w[n1]
            if bound <= 0:
                raise ValueError(
                    f"GBS {n1} has a zero interference bound; restrict the "
                    "stream bases instead of building a barrier constraint"
                )
            for j in streams:
                add_term(n1, j, bound)
                itf_group.append(idx)
            itf_gbs.append(n1)
            idx += 1

        v_rows = np.array(v_list) if v_list else np.zeros((0, n_vars))
        u_rows = np.array(u_list) if u_list else np.zeros((0, n_vars))

        spec = cls(
            n_streams=j_streams, m_antennas=m, power_w=power_w, bases=bases,
            block_offsets=offsets, block_dims=dims, n_vars=n_vars,
            rate_offset=rate_offset, eta_offset=eta_offset,
            pair_gbs=tuple(n2 for n2, _ in pairs),
            pair_stream=np.array([j for _, j in pairs]),
            pair_scale=pair_scale, sigma2_hat=sigma2_hat,
            v_rows=v_rows, u_rows=u_rows, n_pairs=n_pairs,
            cross_group=np.array(cross_group, dtype=int),
            itf_group=np.array(itf_group, dtype=int),
            n_itf=idx, itf_gbs=tuple(itf_gbs),
            quad_hessians=[], quad_constraint_index=None,
        )
        spec._precompute_quadratics()
        return spec

    def _precompute_quadratics(self):
        """Constant Hessians of the eta, temperature and power constraints."""
        n = self.n_vars
        hessians = []
        index = []
        nc = self.cross_group.size
        cross_v = self.v_rows[self.n_pairs:self.n_pairs + nc]
        cross_u = self.u_rows[self.n_pairs:self.n_pairs + nc]
        for p in range(self.n_pairs):
            rows = np.nonzero(self.cross_group == p)[0]
            h = np.zeros((n, n))
            for r in rows:
                h += 2.0 * (np.outer(cross_v[r], cross_v[r])
                            + np.outer(cross_u[r], cross_u[r]))
            hessians.append(h)
            index.append(self.n_pairs + p)
        itf_v = self.v_rows[self.n_pairs + nc:]
        itf_u = self.u_rows[self.n_pairs + nc:]
        for l in range(self.n_itf):
            rows = np.nonzero(self.itf_group == l)[0]
            h = np.zeros((n, n))
            for r in rows:
                h += 2.0 * (np.outer(itf_v[r], itf_v[r])
                            + np.outer(itf_u[r], itf_u[r]))
            hessians.append(h)
            index.append(self.n_pairs * 2 + l)
        h = np.zeros((n, n))
        wd = self.rate_offset
        h[:wd, :wd] = 2.0 * np.eye(wd)
        hessians.append(h)
        index.append(self.n_pairs * 2 + self.n_itf)
        self.quad_hessians = hessians
        self.quad_constraint_index = np.array(index, dtype=int)

    # ------------------------------------------------------------- packing
    @property
    def n_constraints(self) -> int:
        # surrogate pairs, eta bounds, temperatures, power, R >= 0, eta >= sigma2
        return 2 * self.n_pairs + self.n_itf + 1 + self.n_streams + self.n_pairs

    def pack(self, w: np.ndarray, rates: np.ndarray, etas_w: np.ndarray) -> np.ndarray:
        """Physical (w, rates, per-pair eta in Watts) -> variable vector."""
        x = np.zeros(self.n_vars)
        sqrt_p = np.sqrt(self.power_w)
        for j in range(self.n_streams):
            xi = self.bases[j].conj().T @ (w[j] / sqrt_p)
            o, d = int(self.block_offsets[j]), int(self.block_dims[j])
            x[o:o + d] = xi.real
            x[o + d:o + 2 * d] = xi.imag
        x[self.rate_offset:self.rate_offset + self.n_streams] = rates
        x[self.eta_offset:] = np.asarray(etas_w) / self.pair_scale
        return x

    def unpack(self, x: np.ndarray):
        """Variable vector -> physical (w, rates, per-pair eta in Watts)."""
        sqrt_p = np.sqrt(self.power_w)
        w = np.zeros((self.n_streams, self.m_antennas), dtype=complex)
        for j in range(self.n_streams):
            o, d = int(self.block_offsets[j]), int(self.block_dims[j])
            xi = x[o:o + d] + 1j * x[o + d:o + 2 * d]
            w[j] = sqrt_p * (self.bases[j] @ xi)
        rates = x[self.rate_offset:self.rate_offset + self.n_streams].copy()
        etas_w = x[self.eta_offset:] * self.pair_scale
        return w, rates, etas_w

    def set_anchors(self, anchor_a, anchor_b, anchor_c):
        if np.any(np.asarray(anchor_c) <= 0):
            raise NonPositiveAnchor("all anchor_c values must be > 0")
        self.anchor_a = np.asarray(anchor_a, dtype=float)
        self.anchor_b = np.asarray(anchor_b, dtype=float)
        self.anchor_c = np.asarray(anchor_c, dtype=float)

    def anchors_at(self, x: np.ndarray, c_floor: float = 1e-12):
        """Tight anchors at ``x``: a, b at the current beams and
        c = sqrt((2^R - 1) / eta) per decode pair."""
        a = self.v_rows[:self.n_pairs] @ x
        b = self.u_rows[:self.n_pairs] @ x
        rates = x[self.rate_offset:self.rate_offset + self.n_streams]
        eta = x[self.eta_offset:]
        growth = 2.0 ** rates[self.pair_stream]
        c = np.sqrt(np.maximum(growth - 1.0, 0.0) / eta)
        return a, b, np.maximum(c, c_floor)

    # ---------------------------------------------------------- evaluation
    def slacks(self, x: np.ndarray):
        """All constraint slacks (positive = strictly feasible) plus a cache
        of intermediates reused by the gradient assembly."""
        av = self.v_rows @ x
        bv = self.u_rows @ x
        a = av[:self.n_pairs]
        b = bv[:self.n_pairs]
        rates = x[self.rate_offset:self.rate_offset + self.n_streams]
        eta = x[self.eta_offset:]

        with np.errstate(over="ignore"):
            growth = 2.0 ** rates[self.pair_stream]
        psi = eta * self.anchor_c / 2.0 + (growth - 1.0) / (2.0 * self.anchor_c)
        s_f = (2.0 * self.anchor_a * a + 2.0 * self.anchor_b * b
               - self.anchor_a**2 - self.anchor_b**2 - psi**2)

        nc = self.cross_group.size
        cross_pow = av[self.n_pairs:self.n_pairs + nc]**2 + bv[self.n_pairs:self.n_pairs + nc]**2
        cross_sum = np.bincount(self.cross_group, weights=cross_pow,
                                minlength=self.n_pairs) if nc else np.zeros(self.n_pairs)
        s_eta = eta - cross_sum - self.sigma2_hat

        itf_pow = av[self.n_pairs + nc:]**2 + bv[self.n_pairs + nc:]**2
        s_itf = 1.0 - (np.bincount(self.itf_group, weights=itf_pow,
                                   minlength=self.n_itf) if self.n_itf else np.zeros(0))

        xw = x[:self.rate_offset]
        s_pow = np.array([1.0 - xw @ xw])
        s_rate = rates.copy()
        s_etab = eta - self.sigma2_hat

        s = np.concatenate([s_f, s_eta, s_itf, s_pow, s_rate, s_etab])
        cache = (av, bv, psi, growth, rates, eta)
        return s, cache

    def constraint_gradients(self, x: np.ndarray, cache):
        """Rows of d(slack_k)/dx for every constraint, as an (m, n) array."""
        av, bv, psi, growth, rates, eta = cache
        n = self.n_vars
        grads = np.zeros((self.n_constraints, n))
        np_, nc = self.n_pairs, self.cross_group.size

        # surrogate rows: affine in w, curved in (rate, eta)
        grads[:np_] = (2.0 * self.anchor_a[:, None] * self.v_rows[:np_]
                       + 2.0 * self.anchor_b[:, None] * self.u_rows[:np_])
        rate_cols = self.rate_offset + self.pair_stream
        grads[np.arange(np_), rate_cols] += -psi * LN2 * growth / self.anchor_c
        grads[np.arange(np_), self.eta_offset + np.arange(np_)] += -psi * self.anchor_c

        # eta bounds: d/d eta = +1, quadratic cross terms enter negatively
        cross_v = self.v_rows[np_:np_ + nc]
        cross_u = self.u_rows[np_:np_ + nc]
        coeff_v = -2.0 * av[np_:np_ + nc]
        coeff_u = -2.0 * bv[np_:np_ + nc]
        for r in range(nc):
            grads[np_ + self.cross_group[r]] += coeff_v[r] * cross_v[r] + coeff_u[r] * cross_u[r]
        grads[np.arange(np_, 2 * np_), self.eta_offset + np.arange(np_)] += 1.0

        # interference temperatures
        itf_v = self.v_rows[np_ + nc:]
        itf_u = self.u_rows[np_ + nc:]
        coeff_v = -2.0 * av[np_ + nc:]
        coeff_u = -2.0 * bv[np_ + nc:]
        base = 2 * np_
        for r in range(self.itf_group.size):
            grads[base + self.itf_group[r]] += coeff_v[r] * itf_v[r] + coeff_u[r] * itf_u[r]

        # power ball
        row = base + self.n_itf
        grads[row, :self.rate_offset] = -2.0 * x[:self.rate_offset]

        # variable bounds
        row += 1
        for j in range(self.n_streams):
            grads[row + j, self.rate_offset + j] = 1.0
        row += self.n_streams
        for p in range(np_):
            grads[row + p, self.eta_offset + p] = 1.0
        return grads

    def surrogate_hessian_terms(self, cache, inv_s_f):
        """Sum over pairs of -(Hessian of f) / slack, a PSD matrix living on
        the (rate, eta) coordinates only (f is affine in the beams)."""
        _, _, psi, growth, _, eta = cache
        n = self.n_vars
        h = np.zeros((n, n))
        dpsi_deta = self.anchor_c / 2.0
        dpsi_drate = LN2 * growth / (2.0 * self.anchor_c)
        d2psi = LN2 * LN2 * growth / (2.0 * self.anchor_c)
        for p in range(self.n_pairs):
            ei = self.eta_offset + p
            ri = self.rate_offset + int(self.pair_stream[p])
            w = inv_s_f[p]
            ge = dpsi_deta[p]
            gr = dpsi_drate[p]
            h[ei, ei] += 2.0 * ge * ge * w
            h[ei, ri] += 2.0 * ge * gr * w
            h[ri, ei] += 2.0 * ge * gr * w
            h[ri, ri] += (2.0 * gr * gr + 2.0 * psi[p] * d2psi[p]) * w
        return h


@dataclass
class SolveReport:
    """Outcome of one barrier solve."""

    x: np.ndarray
    objective: float                # sum of rates at x
    barrier_iterations: int         # total Newton steps
    max_violation: float            # most negative slack, clipped at 0
    status: str                     # optimal | max_iter | infeasible_start
    history: list                   # (stage t, objective, newton steps)


def _objective(spec: SubproblemSpec, x: np.ndarray) -> float:
    return float(np.sum(x[spec.rate_offset:spec.rate_offset + spec.n_streams]))


def solve(spec: SubproblemSpec, start: np.ndarray,
          gap_tol: float = GAP_TOL) -> SolveReport:
    """Maximise the rate sum over the spec's feasible set from a strictly
    feasible start.  Returns the best central-path point visited; the
    objective never drops below the start's."""
    x = np.asarray(start, dtype=float).copy()
    s, cache = spec.slacks(x)
    if np.min(s) <= 0.0:
        return SolveReport(x=x, objective=_objective(spec, x),
                           barrier_iterations=0, max_violation=float(max(0.0, -np.min(s))),
                           status="infeasible_start", history=[])

    m = spec.n_constraints
    n = spec.n_vars
    c0 = np.zeros(n)
    c0[spec.rate_offset:spec.rate_offset + spec.n_streams] = -1.0

    best_x = x.copy()
    best_obj = _objective(spec, x)
    total_newton = 0
    history = []
    status = "optimal"

    t = BARRIER_T0
    while True:
        stage_newton = 0
        for _ in range(NEWTON_MAX_ITER):
            s, cache = spec.slacks(x)
            inv_s = 1.0 / s
            grads = spec.constraint_gradients(x, cache)
            grad = t * c0 - grads.T @ inv_s

            hess = (grads * (inv_s**2)[:, None]).T @ grads
            for h_const, k in zip(spec.quad_hessians, spec.quad_constraint_index):
                hess += h_const * inv_s[k]
            hess += spec.surrogate_hessian_terms(cache, inv_s[:spec.n_pairs])

            step = _newton_step(hess, grad)
            decrement_sq = float(-grad @ step)
            if decrement_sq / 2.0 <= NEWTON_TOL:
                break
            x, moved = _line_search(spec, x, step, grad, t, c0)
            stage_newton += 1
            total_newton += 1
            if not moved:
                break  # step length underflow; the stage is as good as done
        else:
            status = "max_iter"

        obj = _objective(spec, x)
        history.append((t, obj, stage_newton))
        if obj > best_obj:
            best_obj = obj
            best_x = x.copy()
        if m / t < gap_tol:
            break
        t *= BARRIER_MU

    s, _ = spec.slacks(best_x)
    return SolveReport(x=best_x, objective=best_obj,
                       barrier_iterations=total_newton,
                       max_violation=float(max(0.0, -np.min(s))),
                       status=status, history=history)


def _newton_step(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    ridge = 0.0
    scale = np.trace(hess) / hess.shape[0] + 1.0
    for _ in range(12):
        try:
            chol = scipy.linalg.cho_factor(
                hess + ridge * np.eye(hess.shape[0]), lower=True)
            return scipy.linalg.cho_solve(chol, -grad)
        except np.linalg.LinAlgError:
            ridge = max(ridge * 10.0, 1e-14 * scale)
        except scipy.linalg.LinAlgError:
            ridge = max(ridge * 10.0, 1e-14 * scale)
    return -grad / scale  # last resort: scaled gradient step


def _barrier_value(spec, x, t, c0):
    s, _ = spec.slacks(x)
    if np.min(s) <= 0.0:
        return np.inf
    return t * float(c0 @ x) - float(np.sum(np.log(s)))


def _line_search(spec, x, step, grad, t, c0):
    base = _barrier_value(spec, x, t, c0)
    slope = float(grad @ step)
    alpha = 1.0
    for _ in range(60):
        trial = x + alpha * step
        val = _barrier_value(spec, trial, t, c0)
        if val <= base + LINESEARCH_ALPHA * alpha * slope:
            return trial, True
        alpha *= LINESEARCH_BETA
    return x, False
