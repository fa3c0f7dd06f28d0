"""Sweeps across the differentiability order and global inequality checks.

The sweep verifies the grid-scale behaviour of the first eigenvalue as the
order s varies: the weighted column (5R/2)^(sp) lambda(s) must be
nondecreasing, one-sided differences shrink toward the base point, and
eigenfunction distances contract from the right.  Left sweeps are
diagnostics only: a finite grid cannot exhibit the continuum left-limit
defect, so nothing is asserted there beyond the weighted monotonicity.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ._reduce import map_blocks, ordered_sum
from .core import GridFunction, energy_kernel, gagliardo_energy
from .domain import GridDomain, dilate, unit_ball_volume
from .eigen import Eigenpair, first_eigenpair, seminorm_distance
from .errors import ConvergenceError
from .params import FracParams, SolverConfig

__all__ = [
    "SweepRow",
    "SweepReport",
    "s_sweep",
    "ScalingReport",
    "scaling_check",
    "EquivalenceReport",
    "equivalence_check",
    "TranslationReport",
    "translation_quotient_check",
    "holder_report",
    "dyadic_shifts",
]

# configuration used when a check needs eigenvalues at their float floor
_POLISH = {"tol": 5e-15, "inner_tol": 1e-12, "max_iter_outer": 4000}


@dataclass
class SweepRow:
    s: float
    lam: float
    weighted_lam: float
    dist_to_base: float
    iterations: int
    residual: float
    converged: bool


@dataclass
class SweepReport:
    """Eigenvalue table across s, sorted by s, with sweep metadata."""

    rows: list[SweepRow]
    s_base: float
    p: float
    t: float
    h: float
    diameter_R: float
    eigenfunctions: dict = field(default_factory=dict, repr=False)

    def weighted_violation(self) -> float:
        """Largest relative decrease of the weighted column (0 when monotone)."""
        worst = 0.0
        rows = [r for r in self.rows if r.converged]
        for a, b in zip(rows, rows[1:]):
            if b.weighted_lam < a.weighted_lam:
                worst = max(worst, (a.weighted_lam - b.weighted_lam) / a.weighted_lam)
        return worst

    def row_at(self, s: float) -> SweepRow:
        for r in self.rows:
            if r.s == s:
                return r
        raise KeyError(f"no sweep row at s={s}")

    def to_dict(self) -> dict:
        out = {
            "s_base": self.s_base,
            "p": self.p,
            "t": self.t,
            "h": self.h,
            "diameter_R": self.diameter_R,
            "weighted_violation": self.weighted_violation(),
            "rows": [dataclasses.asdict(r) for r in self.rows],
        }
        if any(r.s < self.s_base for r in self.rows):
            # grids cannot exhibit the continuum left-limit defect, so
            # rows below the base point are diagnostics, not certificates
            out["left_sweep_note"] = (
                "rows below s_base are diagnostics only; on a finite grid "
                "lambda(s - delta) approaches lambda(s), which need not "
                "hold in the continuum limit"
            )
        return out


def s_sweep(
    dom: GridDomain,
    p: float,
    s_list,
    s_base: float,
    cfg: SolverConfig = SolverConfig(),
) -> SweepReport:
    """Solve the first eigenpair at every s and tabulate the results.

    Eigenfunction distances to the base eigenfunction use the exponent
    min(s, s_base) so the seminorm stays finite on both arguments.  Failed
    solves are kept as rows flagged not converged.
    """
    s_values = sorted(float(s) for s in s_list)
    if not s_values:
        raise ValueError("empty s list")
    if not all(0.0 < s < 1.0 for s in s_values):
        raise ValueError("every s must lie in (0,1)")
    if s_base not in s_values:
        raise ValueError("s_base must be one of the sweep values")

    def solve(s: float) -> Eigenpair:
        try:
            return first_eigenpair(dom, FracParams(s=s, p=p, t=dom.t), cfg)
        except ConvergenceError as exc:
            if exc.partial is None:
                raise
            return exc.partial

    threads = cfg.resolved_threads()
    if threads > 1 and len(s_values) > 1:
        inner_cfg = dataclasses.replace(cfg, threads=1)

        def solve_point(s: float) -> Eigenpair:
            try:
                return first_eigenpair(dom, FracParams(s=s, p=p, t=dom.t), inner_cfg)
            except ConvergenceError as exc:
                if exc.partial is None:
                    raise
                return exc.partial

        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = dict(zip(s_values, pool.map(solve_point, s_values)))
    else:
        pairs = {s: solve(s) for s in s_values}

    base_pair = pairs[s_base]
    weight_base = 2.5 * dom.diameter_R
    rows = []
    functions = {}
    for s in s_values:
        pair = pairs[s]
        dist_params = FracParams(s=min(s, s_base), p=p, t=dom.t)
        dist = seminorm_distance(pair.eigenfunction, base_pair.eigenfunction, dist_params)
        rows.append(
            SweepRow(
                s=s,
                lam=pair.lam,
                weighted_lam=weight_base ** (s * p) * pair.lam,
                dist_to_base=dist,
                iterations=pair.iterations,
                residual=pair.residual,
                converged=pair.converged,
            )
        )
        functions[s] = pair.eigenfunction
    return SweepReport(
        rows=rows,
        s_base=s_base,
        p=p,
        t=dom.t,
        h=dom.h,
        diameter_R=dom.diameter_R,
        eigenfunctions=functions,
    )


@dataclass
class ScalingReport:
    factors: list
    lam_base: float
    lams: list
    errors: list
    passed: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def scaling_check(
    dom: GridDomain,
    params: FracParams,
    factors,
    cfg: SolverConfig = SolverConfig(),
    rtol: float = 1e-10,
) -> ScalingReport:
    """Verify c^(sp) lambda(c Omega) = lambda(Omega) across dilations.

    Dilation preserves the discrete pair structure exactly, so the check
    runs the eigen solves down to their float floor; residual solver bias
    would otherwise dominate the 1e-10 budget.
    """
    factors = [float(c) for c in factors]
    if any(c <= 0 for c in factors):
        raise ValueError("dilation factors must be positive")
    polish = dataclasses.replace(cfg, **_POLISH)
    sp = params.s * params.p
    lam_base = first_eigenpair(dom, params, polish).lam
    lams, errors = [], []
    for c in factors:
        lam_c = first_eigenpair(dilate(dom, c), params, polish).lam
        lams.append(lam_c)
        errors.append(abs(c**sp * lam_c / lam_base - 1.0))
    return ScalingReport(
        factors=factors,
        lam_base=lam_base,
        lams=lams,
        errors=errors,
        passed=max(errors) <= rtol,
    )


@dataclass
class EquivalenceReport:
    """Two-way split of the full and truncated energies.

    V is the energy on the truncation ball, W the far-field part beyond it
    (quadrature plus analytic radial tail), X the energy on the inner ball
    of diameter 1.5 R, and Y the annulus part; the shell bounds of the
    norm-equivalence argument give W <= bound * Y.
    """

    V: float
    W: float
    X: float
    Y: float
    bound: float
    ratio_ok: bool
    tail: float
    tail_error_bound: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def equivalence_check(
    u: GridFunction,
    params: FracParams,
    quad_radius_factor: float = 20.0,
    threads: int = 1,
) -> EquivalenceReport:
    """Split the energies of u and check the far-field shell bound.

    Requires t = 4: the bound constant 2^(sp) / ((4/5)^(sp) - (2/3)^(sp))
    comes from the radial shell estimates specific to the 4R/1.5R split.
    The far-field quadrature reaches quad_radius_factor * R before the
    analytic radial tail takes over; that radius dominates the cost on 2D
    grids, and threads parallelize it without changing the result.
    """
    dom = u.host
    if params.t != 4.0 or dom.t != 4.0:
        raise ValueError("the equivalence split requires truncation t = 4")
    n, sp = dom.dim, params.s * params.p
    h, R = dom.h, dom.diameter_R
    hn = h**n
    kern = energy_kernel(dom, params)
    u_om = u.omega_values
    up = np.abs(u_om) ** params.p
    up_int = float(np.sum(up) * hn)  # ||u||_p^p

    # inner/annulus split of the ball cells
    inner_radius = 0.75 * R
    d_center = np.linalg.norm(dom.cells - dom.center, axis=1)
    far = d_center > inner_radius * (1.0 + 1e-12)
    if np.any(far & dom.omega_mask):
        raise ValueError("Omega leaks outside the inner ball; h is too coarse")
    far_idx = np.flatnonzero(far)
    v_total = kern.energy(u_om)
    y_part = 0.0
    cols = max(1, (1 << 22) // max(dom.n_omega, 1))
    for lo in range(0, len(far_idx), cols):
        d = dom.dist_omega_to(far_idx[lo : lo + cols])
        y_part += 2.0 * hn * hn * float(np.sum(up[:, None] * d ** (-kern.exponent)))
    x_part = v_total - y_part

    # far-field quadrature on the extended lattice plus analytic tail
    r_quad = quad_radius_factor * R
    lo = np.floor((dom.center - r_quad - dom.origin) / h).astype(np.int64) - 1
    hi = np.ceil((dom.center + r_quad - dom.origin) / h).astype(np.int64) + 1
    axes = [dom.origin[d] + h * np.arange(lo[d], hi[d] + 1) for d in range(n)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    dc = np.linalg.norm(pts - dom.center, axis=1)
    half = 0.5 * dom.t * R
    shell = (dc > half * (1.0 + 1e-12)) & (dc <= r_quad * (1.0 + 1e-12))
    shell_pts = pts[shell]
    om_cells = dom.omega_cells

    def shell_part(lo: int, hi: int) -> float:
        d2 = np.sum((om_cells[:, None, :] - shell_pts[None, lo:hi, :]) ** 2, axis=-1)
        return 2.0 * hn * hn * float(np.sum(up[:, None] * d2 ** (-0.5 * kern.exponent)))

    w_quad = ordered_sum(map_blocks(shell_part, len(shell_pts), threads))

    n_omega_n = n * unit_ball_volume(n)
    tail = 2.0 * (n_omega_n / sp) * r_quad ** (-sp) * up_int
    # the tail radius is measured from the ball center while the true
    # integral is radial around each x in Omega; x is within R/2 of center
    tail_error_bound = (
        2.0 * (n_omega_n / sp) * abs((r_quad - 0.5 * R) ** (-sp) - (r_quad + 0.5 * R) ** (-sp)) * up_int
    )
    w_total = w_quad + tail

    bound = 2.0**sp / ((4.0 / 5.0) ** sp - (2.0 / 3.0) ** sp)
    return EquivalenceReport(
        V=v_total,
        W=w_total,
        X=x_part,
        Y=y_part,
        bound=bound,
        ratio_ok=w_total <= bound * y_part,
        tail=tail,
        tail_error_bound=tail_error_bound,
    )


@dataclass
class TranslationReport:
    shifts: list
    differences: list
    ratios: list
    sup_ratio: float
    c_fit: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def dyadic_shifts(dom: GridDomain) -> list[NDArray]:
    """Lattice shifts h, 2h, 4h, ... along the first axis up to t R."""
    limit = dom.t * dom.diameter_R / dom.h
    shifts = []
    k = 1
    while k <= limit:
        vec = np.zeros(dom.dim, dtype=np.int64)
        vec[0] = k
        shifts.append(vec)
        k *= 2
    return shifts


def translation_quotient_check(
    u: GridFunction, params: FracParams, shifts
) -> TranslationReport:
    """Difference-quotient bound: sup_h int |u(x+h)-u(x)|^p dx / |h|^(sp).

    Shifts are integer lattice vectors (units of h); u extends by zero
    outside the ball.  sup_ratio divides the supremum by the energy of u
    (the constant of the bound), and c_fit is the least-squares constant
    over the supplied shifts.
    """
    shifts = [np.asarray(k, dtype=np.int64) for k in shifts]
    if not shifts:
        raise ValueError("empty shift list")
    dom = u.host
    if any(k.shape != (dom.dim,) for k in shifts):
        raise ValueError("each shift must have one integer step per dimension")
    sp = params.s * params.p
    hn = dom.h**dom.dim
    lattice = dom.embed_lattice(u.values)
    energy = gagliardo_energy(u, params)

    diffs, ratios = [], []
    for k in shifts:
        pad = [(int(abs(kd)), int(abs(kd))) for kd in k]
        padded = np.pad(lattice, pad)
        rolled = np.roll(padded, shift=tuple(int(kd) for kd in k), axis=tuple(range(dom.dim)))
        d = float(np.sum(np.abs(rolled - padded) ** params.p) * hn)
        shift_len = dom.h * float(np.linalg.norm(k))
        diffs.append(d)
        ratios.append(d / shift_len**sp)

    sup_ratio = max(ratios) / max(energy, 1e-300)
    scaled = np.array(ratios) / max(energy, 1e-300)
    c_fit = float(np.mean(scaled))
    return TranslationReport(
        shifts=[k.tolist() for k in shifts],
        differences=diffs,
        ratios=ratios,
        sup_ratio=sup_ratio,
        c_fit=c_fit,
    )


def holder_report(u: GridFunction, params: FracParams) -> tuple[float, float]:
    """Diagnostic Hoelder quotient for sp > N.

    gamma = s - N/p; returns (gamma, sup over active pairs of
    |u_i - u_j| / |x_i - x_j|^gamma).
    """
    dom = u.host
    n = dom.dim
    if not params.s * params.p > n:
        raise ValueError("the Hoelder regime requires s p > N")
    gamma = params.s - n / params.p
    u_om = u.omega_values
    sup_q = 0.0
    chunk = max(1, (1 << 22) // max(dom.n_omega, 1))
    all_idx = np.arange(dom.n_cells)
    for lo in range(0, dom.n_cells, chunk):
        idx = all_idx[lo : lo + chunk]
        d = dom.dist_omega_to(idx)
        dv = np.abs(u_om[:, None] - u.values[idx][None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(d > 0, dv / d**gamma, 0.0)
        sup_q = max(sup_q, float(q.max()))
    return gamma, sup_q
