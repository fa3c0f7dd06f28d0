"""Ball-truncated Gagliardo energies and the weak fractional p-Laplacian.

All quadrature is cell-centered with the diagonal pair excluded.  Pairs
whose endpoints both lie outside Omega never contribute (both values are
zero there), so the assembled tables only hold the Omega-Omega block and
one row-sum of kernel weights toward the exterior cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np
from numpy.typing import NDArray

from ._reduce import map_blocks, ordered_sum
from .domain import GridDomain
from .params import FracParams

__all__ = [
    "GridFunction",
    "PairFunction",
    "EnergyKernel",
    "energy_kernel",
    "gagliardo_energy",
    "lp_norm",
    "rayleigh_quotient",
    "apply_operator",
    "nonlocal_gradient",
    "nonlocal_divergence",
]

# column budget per chunk when streaming exterior distances
_CHUNK_ENTRIES = 1 << 22


def phi_p(z: NDArray, p: float) -> NDArray:
    """Odd power |z|^(p-2) z, continuously extended by 0 at z = 0."""
    return np.abs(z) ** (p - 1.0) * np.sign(z)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values on the ball cells, zero outside Omega.

    values has one entry per host cell (row-major order of the host
    lattice); entries at cells not flagged in omega_mask must be exactly 0.
    """

    values: NDArray
    host: GridDomain

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.host.n_cells,):
            raise ValueError(
                f"expected {self.host.n_cells} cell values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("cell values must be finite")
        if np.any(v[~self.host.omega_mask] != 0.0):
            raise ValueError("values must vanish outside Omega")

    @classmethod
    def from_omega(cls, host: GridDomain, omega_values) -> "GridFunction":
        full = np.zeros(host.n_cells)
        full[host.omega_indices] = np.asarray(omega_values, dtype=float)
        return cls(full, host)

    @classmethod
    def indicator(cls, host: GridDomain) -> "GridFunction":
        return cls.from_omega(host, np.ones(host.n_omega))

    @property
    def omega_values(self) -> NDArray:
        return self.values[self.host.omega_indices]

    def _check_host(self, other: "GridFunction") -> None:
        if other.host is not self.host:
            raise ValueError("grid functions live on different hosts")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_host(other)
        return GridFunction(self.values + other.values, self.host)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_host(other)
        return GridFunction(self.values - other.values, self.host)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.values * float(c), self.host)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "GridFunction":
        return GridFunction(self.values / float(c), self.host)

    def __neg__(self) -> "GridFunction":
        return GridFunction(-self.values, self.host)

    def __abs__(self) -> "GridFunction":
        return GridFunction(np.abs(self.values), self.host)


@dataclass(frozen=True, eq=False)
class PairFunction:
    """Real values on ordered cell pairs (i, j), i != j, stored densely.

    The diagonal is structurally absent; it is stored as zeros and ignored
    by every operation.
    """

    values: NDArray
    host: GridDomain

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        m = self.host.n_cells
        if v.shape != (m, m):
            raise ValueError(f"expected a ({m}, {m}) pair array, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("pair values must be finite")
        if np.any(np.diagonal(v) != 0.0):
            v = v.copy()
            np.fill_diagonal(v, 0.0)
        object.__setattr__(self, "values", v)

    def power_sum(self, p: float) -> float:
        """Sum of |phi(i,j)|^p over ordered pairs with pair weight h^(2N)."""
        h2n = self.host.h ** (2 * self.host.dim)
        return float(np.sum(np.abs(self.values) ** p)) * h2n

    def __add__(self, other: "PairFunction") -> "PairFunction":
        if other.host is not self.host:
            raise ValueError("pair functions live on different hosts")
        return PairFunction(self.values + other.values, self.host)

    def __mul__(self, c: float) -> "PairFunction":
        return PairFunction(self.values * float(c), self.host)

    __rmul__ = __mul__


class EnergyKernel:
    """Kernel tables of one (domain, params) pair.

    Holds the Omega-Omega weight block K_ij = |x_i - x_j|^(-(N+sp)) and the
    per-Omega-cell row sum of weights toward exterior cells.  Energies,
    gradients and pairings evaluate through deterministic blocked
    reductions, so their results do not depend on the thread count.
    """

    def __init__(self, dom: GridDomain, params: FracParams):
        if dom.t != params.t:
            raise ValueError(
                f"domain truncation t={dom.t} does not match params.t={params.t}"
            )
        self.dom = dom
        self.params = params
        self.exponent = dom.dim + params.s * params.p
        self.hn = dom.h**dom.dim
        self.h2n = self.hn * self.hn

        d = dom.dist_omega_omega
        with np.errstate(divide="ignore"):
            k = d ** (-self.exponent)
        np.fill_diagonal(k, 0.0)
        self.K_oo = k
        self.k_out = self._exterior_row_sums()

    @property
    def quad_matrix(self) -> NDArray:
        """SPD quadratic form of the kernel weights on the free cells.

        Q = 2 h^(2N) (diag(row sums + exterior sums) - K); w^T Q w is the
        p=2-type energy with this kernel's exponent, and Q preconditions
        the descent solvers.
        """
        q = getattr(self, "_quad_matrix", None)
        if q is None:
            diag = np.sum(self.K_oo, axis=1) + self.k_out
            q = -self.K_oo.copy()
            q[np.diag_indices_from(q)] = diag
            q *= 2.0 * self.h2n
            self._quad_matrix = q
        return q

    def quad_start(self, b: NDArray) -> NDArray:
        """Solve Q x = b; a smooth, tie-free starting point for the solvers."""
        import scipy.linalg

        factor = getattr(self, "_quad_factor", None)
        if factor is None:
            factor = scipy.linalg.cho_factor(self.quad_matrix)
            self._quad_factor = factor
        return scipy.linalg.cho_solve(factor, b)

    def scaled_start(self, b: NDArray, threads: int = 1) -> NDArray:
        """quad_start rescaled to the exact 1-D minimizer of the objective.

        Along a fixed direction v the objective (1/p) energy(c v) - c <b, v>
        is minimized at c = (<b, v>/energy(v))^(1/(p-1)); starting at that
        scale keeps Newton's local model relevant (for p < 2 the curvature
        at a much smaller scale overestimates wildly and the solve crawls).
        """
        v = self.quad_start(b)
        e_v = self.energy(v, threads)
        bv = float(np.dot(b, v))
        if e_v > 0.0 and bv > 0.0:
            return (bv / e_v) ** (1.0 / (self.params.p - 1.0)) * v
        return v

    def hessian_omega(self, w: NDArray) -> NDArray:
        """Dense curvature of (1/p) energy at w, pair ties floored.

        A weighted graph Laplacian with weights (p-1)|w_i - w_j|^(p-2) K_ij;
        |.| is floored at a relative tiny so exact ties stay finite.  Equals
        quad_matrix when p = 2.
        """
        p = self.params.p
        scale = float(np.max(np.abs(w))) if len(w) else 0.0
        delta = 1e-14 * max(scale, 1.0)
        diff = np.abs(w[:, None] - w[None, :])
        np.maximum(diff, delta, out=diff)
        wgt = diff ** (p - 2.0) * self.K_oo
        ext = np.maximum(np.abs(w), delta) ** (p - 2.0) * self.k_out
        h = -wgt
        h[np.diag_indices_from(h)] = np.sum(wgt, axis=1) + ext
        return 2.0 * (p - 1.0) * self.h2n * h

    def _exterior_row_sums(self) -> NDArray:
        dom = self.dom
        others = dom.other_indices
        n_om = dom.n_omega
        out = np.zeros(n_om)
        if len(others) == 0:
            return out
        cols = max(1, _CHUNK_ENTRIES // max(n_om, 1))
        for lo in range(0, len(others), cols):
            d = dom.dist_omega_to(others[lo : lo + cols])
            out += np.sum(d ** (-self.exponent), axis=1)
        return out

    # -- scalar reductions ------------------------------------------------

    def energy(self, u_om: NDArray, threads: int = 1) -> float:
        p = self.params.p

        def block(lo: int, hi: int) -> float:
            diff = u_om[lo:hi, None] - u_om[None, :]
            return float(np.sum(self.K_oo[lo:hi] * np.abs(diff) ** p))

        inner = ordered_sum(map_blocks(block, len(u_om), threads))
        outer = float(np.sum(self.k_out * np.abs(u_om) ** p))
        return self.h2n * (inner + 2.0 * outer)

    def grad_omega(self, u_om: NDArray, threads: int = 1) -> NDArray:
        """Gradient of the energy with respect to the Omega values."""
        p = self.params.p

        def block(lo: int, hi: int) -> NDArray:
            diff = u_om[lo:hi, None] - u_om[None, :]
            return np.sum(self.K_oo[lo:hi] * phi_p(diff, p), axis=1)

        rows = np.concatenate(map_blocks(block, len(u_om), threads))
        rows += phi_p(u_om, p) * self.k_out
        return 2.0 * p * self.h2n * rows

    def weak_apply_omega(self, u_om: NDArray, threads: int = 1) -> NDArray:
        """Weak-form operator values: grad/p, pairing tested functions."""
        return self.grad_omega(u_om, threads) / self.params.p

    def monotone_pairing(self, u_om: NDArray, v_om: NDArray, threads: int = 1) -> float:
        """Double sum of (phi(U)-phi(V)) (U-V) over active pairs.

        Every addend is nonnegative, so the reduction is cancellation-free.
        """
        p = self.params.p

        def block(lo: int, hi: int) -> float:
            du = u_om[lo:hi, None] - u_om[None, :]
            dv = v_om[lo:hi, None] - v_om[None, :]
            return float(np.sum(self.K_oo[lo:hi] * (phi_p(du, p) - phi_p(dv, p)) * (du - dv)))

        inner = ordered_sum(map_blocks(block, len(u_om), threads))
        outer = float(np.sum(self.k_out * (phi_p(u_om, p) - phi_p(v_om, p)) * (u_om - v_om)))
        return self.h2n * (inner + 2.0 * outer)

    def grad_envelope(self, u_om: NDArray, threads: int = 1) -> float:
        """l2 norm of the absolute-value weak-gradient assembly.

        Multiplied by machine epsilon this bounds the roundoff floor of a
        weak-form gradient evaluation; a solver cannot certify residuals
        below that floor.
        """
        p = self.params.p

        def block(lo: int, hi: int) -> NDArray:
            diff = u_om[lo:hi, None] - u_om[None, :]
            return np.sum(self.K_oo[lo:hi] * np.abs(diff) ** (p - 1.0), axis=1)

        rows = np.concatenate(map_blocks(block, len(u_om), threads))
        rows += np.abs(u_om) ** (p - 1.0) * self.k_out
        return float(np.linalg.norm(2.0 * self.h2n * rows))

    def residual_floor(self, u_om: NDArray, threads: int = 1) -> float:
        """Achievable floor of the weak-residual norm at u.

        Two float effects bound any solver.  Accumulated roundoff scales
        with eps times the absolute-value assembly.  Value granularity is
        sharper for p < 2: one last-place change of a cell value moves a
        pair difference z by about eps*max|u|, whose image under the odd
        power jumps by (|z|+ulp)^(p-1) - |z|^(p-1); across near-tie pairs
        (z = 0 in exact arithmetic) this dwarfs linear roundoff.
        """
        p = self.params.p
        eps = np.finfo(float).eps
        scale = float(np.max(np.abs(u_om))) if len(u_om) else 0.0
        delta = eps * scale + 1e-300

        def block(lo: int, hi: int) -> NDArray:
            z = np.abs(u_om[lo:hi, None] - u_om[None, :])
            jump = (z + delta) ** (p - 1.0) - z ** (p - 1.0)
            return np.sum(self.K_oo[lo:hi] * jump, axis=1)

        rows = np.concatenate(map_blocks(block, len(u_om), threads))
        zi = np.abs(u_om)
        rows += ((zi + delta) ** (p - 1.0) - zi ** (p - 1.0)) * self.k_out
        granularity = float(np.linalg.norm(2.0 * self.h2n * rows))
        return max(granularity, eps * self.grad_envelope(u_om, threads))

    def psmall_pairwise_gap(self, u_om: NDArray, v_om: NDArray, threads: int = 1):
        """Worst gap of the 1<p<2 pairwise monotonicity inequality.

        For each active pair with differences U, V not both zero the
        inequality (p-1)|U-V|^2 <= [(phi(U)-phi(V))(U-V)] (|U|^p+|V|^p)^((2-p)/p)
        is evaluated; returns (max of lhs - rhs, max of rhs) so callers can
        form a relative margin.
        """
        p = self.params.p
        if not 1.0 < p < 2.0:
            raise ValueError("the pairwise gap is defined for 1 < p < 2 only")
        w_exp = (2.0 - p) / p
        eps = np.finfo(float).eps

        def gap(U: NDArray, V: NDArray):
            lhs = (p - 1.0) * (U - V) ** 2
            rhs = (phi_p(U, p) - phi_p(V, p)) * (U - V) * (np.abs(U) ** p + np.abs(V) ** p) ** w_exp
            # pairs with both differences zero fall under the inequality's
            # stated restriction; pairs separated by less than the float
            # quantization of the odd power cannot be tested meaningfully
            live = ~((U == 0.0) & (V == 0.0))
            live &= np.abs(U - V) > 4.0 * eps * (np.abs(U) + np.abs(V))
            if not np.any(live):
                return -np.inf, 0.0
            d = lhs - rhs
            return float(d[live].max()), float(rhs[live].max())

        def block(lo: int, hi: int):
            du = u_om[lo:hi, None] - u_om[None, :]
            dv = v_om[lo:hi, None] - v_om[None, :]
            off = ~np.eye(len(u_om), dtype=bool)[lo:hi]
            return gap(du[off], dv[off])

        parts = map_blocks(block, len(u_om), threads)
        parts.append(gap(u_om, v_om))  # Omega-to-exterior pairs (V side is 0 there)
        worst = max(p[0] for p in parts)
        scale = max(p[1] for p in parts)
        return worst, scale


_KERNELS: "WeakKeyDictionary[GridDomain, dict]" = WeakKeyDictionary()


def energy_kernel(dom: GridDomain, params: FracParams) -> EnergyKernel:
    table = _KERNELS.setdefault(dom, {})
    key = (params.s, params.p, params.t)
    kern = table.get(key)
    if kern is None:
        kern = EnergyKernel(dom, params)
        table[key] = kern
    return kern


def _kernel_of(u: GridFunction, params: FracParams) -> EnergyKernel:
    return energy_kernel(u.host, params)


# ---------------------------------------------------------------------------
# public operations


def gagliardo_energy(u: GridFunction, params: FracParams, threads: int = 1) -> float:
    """Truncated Gagliardo energy: the p-th power of the seminorm.

    Sum over ordered cell pairs of |u_i - u_j|^p |x_i - x_j|^(-(N+sp)) h^(2N).
    """
    return _kernel_of(u, params).energy(u.omega_values, threads)


def lp_norm(u: GridFunction, p: float) -> float:
    """(sum over Omega cells of |u_i|^p h^N)^(1/p)."""
    if not p >= 1.0:
        raise ValueError(f"p must be at least 1, got {p}")
    hn = u.host.h**u.host.dim
    return float(np.sum(np.abs(u.omega_values) ** p) * hn) ** (1.0 / p)


def rayleigh_quotient(u: GridFunction, params: FracParams, threads: int = 1) -> float:
    """Energy divided by ||u||_p^p; undefined for the zero function."""
    denom = lp_norm(u, params.p) ** params.p
    if denom == 0.0:
        raise ValueError("Rayleigh quotient of the zero function is undefined")
    return gagliardo_energy(u, params, threads) / denom


def apply_operator(u: GridFunction, params: FracParams, threads: int = 1) -> GridFunction:
    """Gradient of the energy with respect to the free (Omega) cell values.

    Satisfies the Euler identity <u, A u> = p * energy(u); paired against a
    test function it returns p times the symmetric weak double sum, so the
    weak eigen-equation residual uses A u / p.  Zero outside Omega.
    """
    g_om = _kernel_of(u, params).grad_omega(u.omega_values, threads)
    return GridFunction.from_omega(u.host, g_om)


def nonlocal_gradient(u: GridFunction, params: FracParams) -> PairFunction:
    """Pairwise difference quotient (u_i - u_j)/|x_i - x_j|^(N/p+s)."""
    dom = u.host
    if dom.t != params.t:
        raise ValueError("domain truncation does not match params.t")
    expo = dom.dim / params.p + params.s
    d = dom.dist_all_all
    with np.errstate(divide="ignore"):
        w = d**-expo
    np.fill_diagonal(w, 0.0)
    vals = (u.values[:, None] - u.values[None, :]) * w
    return PairFunction(vals, dom)


def nonlocal_divergence(phi: PairFunction, params: FracParams) -> NDArray:
    """Adjoint field d_i = sum_j (phi(i,j) - phi(j,i)) |x_i-x_j|^(-(N/p+s)) h^N.

    Defined on every ball cell (not only Omega); symmetric pair data cancels.
    """
    dom = phi.host
    if dom.t != params.t:
        raise ValueError("domain truncation does not match params.t")
    expo = dom.dim / params.p + params.s
    d = dom.dist_all_all
    with np.errstate(divide="ignore"):
        w = d**-expo
    np.fill_diagonal(w, 0.0)
    hn = dom.h**dom.dim
    return np.sum((phi.values - phi.values.T) * w, axis=1) * hn
