"""Exact rational arithmetic for admissibility and scattering exponents.

All relations are verified with `fractions.Fraction`; an infinite exponent
(r = inf, q = inf) is the symbolic singleton `INF` with 1/inf = 0.  Every
emitted plan carries a constraint ledger of (constraint id, satisfied)
pairs, checked exactly, and is valid iff every entry holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional, Union


class PlanError(ValueError):
    pass


class _Infinity:
    """Positive infinity for exponent slots (r = inf, q = inf)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"

    def __eq__(self, other):
        return isinstance(other, _Infinity)

    def __hash__(self):
        return hash("exponent-infinity")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, _Infinity)

    def __gt__(self, other):
        return not isinstance(other, _Infinity)

    def __ge__(self, other):
        return True


INF = _Infinity()
Rat = Union[Fraction, _Infinity]


def rat(x) -> Rat:
    """Coerce ints, 'num/den' strings, Fractions, or 'inf' to a Rat."""
    if isinstance(x, _Infinity):
        return INF
    if isinstance(x, str):
        if x.strip() in ("inf", "oo"):
            return INF
        return Fraction(x)
    if isinstance(x, float):
        if x == float("inf"):
            return INF
        f = Fraction(x).limit_denominator(10 ** 9)
        if f != Fraction(x):
            raise PlanError(f"{x} is not an exact rational; pass a Fraction")
        return f
    return Fraction(x)


def reciprocal(x: Rat) -> Rat:
    """1/x with 1/inf = 0 and 1/0 = inf."""
    if isinstance(x, _Infinity):
        return Fraction(0)
    if x == 0:
        return INF
    return Fraction(1) / x


def fmt(x: Optional[Rat]) -> Optional[str]:
    """Serialize as a 'num/den' string ('inf' for infinity)."""
    if x is None:
        return None
    if isinstance(x, _Infinity):
        return "inf"
    return f"{x.numerator}/{x.denominator}"


def delta_of(n: int, r: Rat) -> Fraction:
    """Scaling exponent delta(r) = n/2 - n/r (r = inf gives n/2)."""
    r = rat(r)
    if not isinstance(r, _Infinity) and r < 1:
        raise PlanError(f"r must be >= 1, got {r}")
    return Fraction(n, 2) - n * reciprocal(r)


def is_admissible(n: int, q: Rat, r: Rat) -> tuple[bool, str]:
    """Free-propagator admissibility of (q, r) with the dimensional cap.

    Requires 2/q = delta(r) >= 0 and delta <= 1/2 for n = 1, delta < 1 for
    n = 2, delta <= 1 for n >= 3.  Returns (ok, violated-condition detail).
    """
    q, r = rat(q), rat(r)
    delta = delta_of(n, r)
    if delta < 0:
        return False, f"delta(r) = {delta} is negative"
    if 2 * reciprocal(q) != delta:
        return False, f"2/q = {2 * reciprocal(q)} differs from delta(r) = {delta}"
    if n == 1 and delta > Fraction(1, 2):
        return False, f"delta = {delta} exceeds 1/2 (n = 1 cap)"
    if n == 2 and delta >= 1:
        return False, f"delta = {delta} not strictly below 1 (n = 2 cap)"
    if n >= 3 and delta > 1:
        return False, f"delta = {delta} exceeds 1 (n >= 3 cap)"
    return True, ""


def sigma_c(n: int, p: Rat, kind: str = "nls") -> Fraction:
    """Critical Sobolev regularity of the coupling.

    NLS power p: sigma_c = n/2 - 2/(p-1).  Hartree kernel class L^p:
    sigma_c = n/(2p) - 1.
    """
    p = rat(p)
    if kind == "nls":
        if not p > 1:
            raise PlanError("NLS power must exceed 1")
        return Fraction(n, 2) - 2 * reciprocal(p - 1)
    if kind == "hartree":
        if not p >= 1:
            raise PlanError("Hartree kernel exponent must be >= 1")
        return Fraction(n) * reciprocal(2 * p) - 1
    raise PlanError(f"unknown kind {kind!r}")


def sigma_c_in_range(n: int, p: Rat, kind: str = "nls") -> tuple[bool, str]:
    """Whether sigma_c lies in the noncritical window for the planners."""
    sc = sigma_c(n, p, kind)
    if not 0 < sc < 1:
        return False, f"sigma_c = {sc} outside (0, 1)"
    if kind == "nls" and n == 1 and sc >= Fraction(1, 2):
        return False, f"sigma_c = {sc} violates the n = 1 cap sigma_c < 1/2"
    if kind == "hartree" and n == 3 and sc > Fraction(1, 2):
        return False, f"sigma_c = {sc} violates the n = 3 Hartree cap <= 1/2"
    return True, ""


def sigma_M() -> Fraction:
    """Regularity degree 1/4 of the bilinear virial quantity.

    Re-derives the value from the homogeneity balance
    1 + n/2 + (n-3)/2 = 2(n/2 - sigma_M) for n = 1..5 before returning it.
    """
    val = Fraction(1, 4)
    for n in range(1, 6):
        lhs = 1 + Fraction(n, 2) + Fraction(n - 3, 2)
        rhs = 2 * (Fraction(n, 2) - val)
        if lhs != rhs:  # pragma: no cover - arithmetic identity
            raise PlanError(f"degree balance failed at n = {n}")
    return val


@dataclass
class ExponentPlan:
    """Exact-rational record of one interpolation plan with its ledger."""

    n: int
    p: Rat
    kind: str                       # nls | hartree
    branch: str
    sigma_c: Fraction
    sigma_lo: Fraction
    sigma_hi: Fraction
    sigma: Fraction
    theta: Fraction
    delta: Fraction
    k: Rat
    ell: Rat
    r: Rat
    q: Rat
    sigma_0: Optional[Fraction] = None
    sigma_plus: Optional[Fraction] = None
    sigma_minus: Optional[Fraction] = None
    r_minimal: Optional[Fraction] = None
    constraints: list[tuple[str, bool]] = dc_field(default_factory=list)

    @property
    def valid(self) -> bool:
        return all(ok for _, ok in self.constraints)

    def check(self, name: str, ok: bool):
        self.constraints.append((name, bool(ok)))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": fmt(rat(self.p)),
            "kind": self.kind,
            "branch": self.branch,
            "sigma_c": fmt(self.sigma_c),
            "sigma_lo": fmt(self.sigma_lo),
            "sigma_hi": fmt(self.sigma_hi),
            "sigma": fmt(self.sigma),
            "theta": fmt(self.theta),
            "delta": fmt(self.delta),
            "k": fmt(self.k),
            "ell": fmt(self.ell),
            "r": fmt(self.r),
            "q": fmt(self.q),
            "sigma_0": fmt(self.sigma_0),
            "sigma_plus": fmt(self.sigma_plus),
            "sigma_minus": fmt(self.sigma_minus),
            "r_minimal": fmt(self.r_minimal),
            "sigma_M": fmt(sigma_M()),
            "constraints": [{"id": cid, "satisfied": ok}
                            for cid, ok in self.constraints],
            "valid": self.valid,
        }


def _pick_sigma(lo: Fraction, hi: Fraction, chosen) -> Fraction:
    if chosen is not None:
        chosen = rat(chosen)
        if not lo <= chosen <= hi:
            raise PlanError(f"sigma = {chosen} outside [{lo}, {hi}]")
        return chosen
    return (lo + hi) / 2


def _resolve_p_sigma_c(n, p, sc, kind):
    if (p is None) == (sc is None):
        raise PlanError("pass exactly one of p or sigma_c")
    if sc is not None:
        sc = rat(sc)
        if kind == "nls":
            # invert sigma_c = n/2 - 2/(p-1); needs sigma_c < n/2
            if not 2 * sc < n:
                raise PlanError(f"sigma_c = {sc} must be below n/2 = {Fraction(n, 2)}")
            p = 1 + 4 * reciprocal(n - 2 * sc)
        else:
            p = Fraction(n) * reciprocal(2 * (sc + 1))
        return rat(p), sc
    p = rat(p)
    return p, sigma_c(n, p, kind)


def plan_nls_high_dim(n: int, p=None, sigma_c=None, sigma=None) -> ExponentPlan:
    """Interpolation plan for NLS in dimension n >= 2.

    Chooses sigma in the admissible branch interval (midpoint by default)
    and theta from sigma_c = theta/4 + (1-theta) sigma, then verifies the
    whole constraint system exactly.
    """
    if n < 2:
        raise PlanError("use plan_nls_1d for n = 1")
    p, sc = _resolve_p_sigma_c(n, p, sigma_c, "nls")
    if not 0 < sc < 1:
        raise PlanError(f"sigma_c = {sc} outside (0, 1)")
    quarter = Fraction(1, 4)
    sigma_0 = None
    if n >= 4 and n - 2 - 4 * sc > 0:
        sigma_0 = sc * (n - 3) / (n - 2 - 4 * sc)

    if sc == quarter:
        sig = quarter
        theta = Fraction(1) if n in (2, 3) else Fraction(1, n - 2)
        lo = hi = quarter
        branch = "sigma_c=1/4"
    elif sc < quarter:
        lo = Fraction(0) if n in (2, 3) else sigma_0
        hi = sc  # open endpoint; midpoint selection stays inside
        sig = _pick_sigma(lo, hi, sigma)
        if sig == sc:
            raise PlanError("sigma must be strictly below sigma_c on this branch")
        theta = (sc - sig) / (quarter - sig)
        branch = "sigma<sigma_c<1/4"
    else:
        lo = sc  # open endpoint
        hi = Fraction(1)
        if sigma_0 is not None:
            # the sobolev cap binds only while n-2-4 sigma_c > 0
            hi = min(sigma_0, hi)
        sig = _pick_sigma(lo, hi, sigma)
        if sig == sc:
            raise PlanError("sigma must be strictly above sigma_c on this branch")
        theta = (sc - sig) / (quarter - sig)
        branch = "1/4<sigma_c<sigma"

    # norm exponents of the interpolation target
    k = 4 * reciprocal(theta)
    n_over_ell = theta * (Fraction(n, 2) - Fraction(3, 4)) \
        + (1 - theta) * (Fraction(n, 2) - sig)
    ell = Fraction(n) * reciprocal(n_over_ell) if n_over_ell != 0 else INF
    delta = n_over_ell / (Fraction(n, 2) - sc)
    q = 2 * reciprocal(delta) if delta != 0 else INF
    r = Fraction(n) * reciprocal(Fraction(n, 2) - delta)

    plan = ExponentPlan(
        n=n, p=p, kind="nls", branch=branch, sigma_c=sc,
        sigma_lo=lo, sigma_hi=hi, sigma=sig, theta=theta, delta=delta,
        k=k, ell=ell, r=r, q=q, sigma_0=sigma_0)
    plan.check("balance sigma_c = theta/4 + (1-theta) sigma",
               sc == theta / 4 + (1 - theta) * sig)
    plan.check("0 < theta <= 1", 0 < theta <= 1)
    plan.check("0 <= sigma <= 1", 0 <= sig <= 1)
    if n >= 4:
        plan.check("sobolev cap theta <= 4 sigma/(n-3+4 sigma)",
                   theta <= 4 * sig / (n - 3 + 4 * sig))
    plan.check("scaling 2/k + n/ell = n/2 - sigma_c",
               2 * reciprocal(k) + n * reciprocal(ell) == Fraction(n, 2) - sc)
    plan.check("0 <= delta < 1", 0 <= delta < 1)
    plan.check("admissible (q, r)", is_admissible(n, q, r)[0])
    return plan


def plan_nls_1d(p=None, sigma_c=None, sigma=None) -> ExponentPlan:
    """Interpolation plan for NLS in one dimension (density route).

    Branches: sigma_c >= 1/10 uses r = 2 with the sigma window set by
    sigma_(+/-); sigma_c in (0, 1/10) uses sigma = 0, theta = 4 sigma_c and
    the minimal r with 4/r = (1 + 2 sigma_c)/(1 - 4 sigma_c).
    """
    p, sc = _resolve_p_sigma_c(1, p, sigma_c, "nls")
    if not 0 < sc < Fraction(1, 2):
        raise PlanError(f"sigma_c = {sc} outside (0, 1/2)")
    quarter = Fraction(1, 4)
    sig_plus = (6 * sc - 1) * reciprocal(8 * sc)
    sig_minus = (10 * sc - 1) / (8 * sc + 4)

    if sc >= Fraction(1, 10):
        r = Fraction(2)
        if sc == quarter:
            lo = hi = sig = quarter
            theta = Fraction(1, 2)
            branch = "sigma_c=1/4, r=2, theta=1/2"
        elif sc <= Fraction(1, 6):
            lo, hi = Fraction(0), sig_minus
            sig = _pick_sigma(lo, hi, sigma)
            theta = (sc - sig) / (quarter - sig)
            branch = "1/10<=sigma_c<=1/6"
        elif sc < quarter:
            lo, hi = sig_plus, sig_minus
            sig = _pick_sigma(lo, hi, sigma)
            theta = (sc - sig) / (quarter - sig)
            branch = "1/6<=sigma_c<1/4"
        else:
            lo, hi = sig_minus, sig_plus
            sig = _pick_sigma(lo, hi, sigma)
            theta = (sc - sig) / (quarter - sig)
            branch = "1/4<sigma_c<1/2"
    else:
        sig = Fraction(0) if sigma is None else rat(sigma)
        if sig != 0:
            raise PlanError("low sigma_c branch pins sigma = 0")
        lo = hi = Fraction(0)
        theta = 4 * sc
        r = 4 * reciprocal((1 + 2 * sc) / (1 - 4 * sc))
        branch = "0<sigma_c<1/10, sigma=0"

    delta = delta_of(1, r)
    q = 2 * reciprocal(delta) if delta != 0 else INF
    two_over_k = theta / 2 + (1 - theta) * 2 * reciprocal(q)
    one_over_ell = -theta / 4 + (1 - theta) * (reciprocal(r) - sig)
    k = 2 * reciprocal(two_over_k) if two_over_k != 0 else INF
    ell = reciprocal(one_over_ell) if one_over_ell != 0 else INF

    r_minimal = None
    if sc > quarter and sig > sc:
        r_minimal = 4 * reciprocal((1 + 2 * sc) * (4 * sig - 1) / (4 * sc - 1))

    plan = ExponentPlan(
        n=1, p=p, kind="nls", branch=branch, sigma_c=sc,
        sigma_lo=lo, sigma_hi=hi, sigma=sig, theta=theta, delta=delta,
        k=k, ell=ell, r=r, q=q,
        sigma_plus=sig_plus, sigma_minus=sig_minus, r_minimal=r_minimal)
    plan.check("balance sigma_c = theta/4 + (1-theta) sigma",
               sc == theta / 4 + (1 - theta) * sig)
    plan.check("0 < theta <= 1", 0 < theta <= 1)
    mid = -theta / 4 + (1 - theta) * (reciprocal(r) - sig)
    plan.check("window 0 <= -theta/4 + (1-theta)(1/r - sigma)", mid >= 0)
    plan.check("window <= (1/2 - sigma_c)/2",
               mid <= (Fraction(1, 2) - sc) / 2)
    if sig != quarter:
        mid30 = (4 * sc - 1) * reciprocal((4 * sig - 1) * r)
        plan.check("bracket sigma_c <= (4 sigma_c - 1)/((4 sigma - 1) r)",
                   sc <= mid30)
        plan.check("bracket <= (1 + 2 sigma_c)/4",
                   mid30 <= (1 + 2 * sc) / 4)
    plan.check("strict 1/r > sigma", reciprocal(r) > sig)
    plan.check("scaling 2/k + 1/ell = 1/2 - sigma_c",
               2 * reciprocal(k) + reciprocal(ell) == Fraction(1, 2) - sc)
    plan.check("admissible (q, r)", is_admissible(1, q, r)[0])
    return plan


def plan_hartree(n: int, p=None, sigma_c=None, sigma=None) -> ExponentPlan:
    """Interpolation plan for the Hartree coupling with V in L^p, n >= 3.

    Reuses the n >= 2 sigma/theta selection; the Duhamel bookkeeping pins
    theta = 2 (1 - delta), which automatically satisfies 0 < 2/k <= 1.
    """
    if n < 3:
        raise PlanError("Hartree planning requires n >= 3")
    p, sc = _resolve_p_sigma_c(n, p, sigma_c, "hartree")
    if not 0 < sc < 1:
        raise PlanError(
            f"sigma_c = {sc} outside (0, 1): need n/4 < p < n/2, got p = {p}")
    if n == 3 and sc > Fraction(1, 2):
        raise PlanError(f"n = 3 requires sigma_c <= 1/2, got {sc}")

    base = plan_nls_high_dim(n, sigma_c=sc, sigma=sigma)
    theta = base.theta
    delta = 1 - theta / 2
    k = 4 * reciprocal(theta)
    n_over_ell = Fraction(n, 2) - sc + delta - 1
    ell = Fraction(n) * reciprocal(n_over_ell) if n_over_ell != 0 else INF
    q = 2 * reciprocal(delta) if delta != 0 else INF
    r = Fraction(n) * reciprocal(Fraction(n, 2) - delta)

    plan = ExponentPlan(
        n=n, p=p, kind="hartree", branch="hartree/" + base.branch,
        sigma_c=sc, sigma_lo=base.sigma_lo, sigma_hi=base.sigma_hi,
        sigma=base.sigma, theta=theta, delta=delta, k=k, ell=ell,
        r=r, q=q, sigma_0=base.sigma_0)
    plan.check("balance sigma_c = theta/4 + (1-theta) sigma",
               sc == theta / 4 + (1 - theta) * plan.sigma)
    plan.check("theta = 2 (1 - delta)", theta == 2 * (1 - delta))
    plan.check("0 < 2/k <= 1", 0 < 2 * reciprocal(k) <= 1)
    plan.check("0 < theta <= 1", 0 < theta <= 1)
    if n >= 4:
        plan.check("sobolev cap theta <= 4 sigma/(n-3+4 sigma)",
                   theta <= 4 * plan.sigma / (n - 3 + 4 * plan.sigma))
    plan.check("scaling 2/k + n/ell = n/2 - sigma_c",
               2 * reciprocal(k) + n * reciprocal(ell) == Fraction(n, 2) - sc)
    plan.check("admissible (q, r)", is_admissible(n, q, r)[0])
    return plan


def leibniz_exponent_check(sigma, r, u_samples=None) -> dict:
    """Exponent bookkeeping of the density bilinear estimate.

    Under 0 <= sigma < 1/r <= 1/2 the square of the Hdot^sigma_r norm of u
    controls the Hdot^sigma norm of rho with target Lebesgue exponent
    (2/r - sigma)^{-1}.  With sample fields, also measures the ratio
    LHS/RHS^2 numerically.
    """
    sigma, r = rat(sigma), rat(r)
    if not (0 <= sigma < reciprocal(r) <= Fraction(1, 2)):
        raise PlanError(
            f"hypothesis 0 <= sigma < 1/r <= 1/2 violated for ({sigma}, {r})")
    target = reciprocal(2 * reciprocal(r) - sigma)
    out = {"sigma": sigma, "r": r, "target_exponent": target, "ratios": []}
    if u_samples:
        from .spectral import sobolev_norm
        for u in u_samples:
            rho = u.with_values(u.rho)
            lhs = sobolev_norm(rho, float(sigma), float(target))
            rhs = sobolev_norm(u, float(sigma), float(r)) ** 2
            out["ratios"].append(lhs / rhs if rhs > 0 else 0.0)
    return out


def sigma0_density_route(n: int, sc) -> Fraction:
    """Endpoint 2 sigma_c (n-3)/(2n-5-4 sigma_c) of the rho-based argument."""
    sc = rat(sc)
    return 2 * sc * (n - 3) / (2 * n - 5 - 4 * sc)


def partition_intervals(times, values, budget: float) -> list[tuple[int, int]]:
    """Greedy minimal partition of a sampled nonnegative series.

    Splits the sample range into maximal contiguous intervals whose
    trapezoid integral of `values` is at most `budget`; greedy left-to-right
    extension yields the minimal interval count.  Raises if a single sample
    interval already exceeds the budget.
    """
    import numpy as np
    t = np.asarray(times, dtype=float)
    m = np.asarray(values, dtype=float)
    if np.any(m < 0):
        raise PlanError("series must be nonnegative")
    if len(t) < 2:
        return [(0, max(len(t) - 1, 0))]
    masses = 0.5 * (m[1:] + m[:-1]) * np.diff(t)
    if np.any(masses > budget):
        raise PlanError("a single sample interval exceeds the budget; "
                        "no finite refinement exists on this series")
    out = []
    start = 0
    acc = 0.0
    for i, w in enumerate(masses):
        if acc + w > budget:
            out.append((start, i))
            start = i
            acc = w
        else:
            acc += w
    out.append((start, len(t) - 1))
    return out


def smallness_budget(M1: float, theta, p) -> float:
    """Convert the bootstrap constant into an integral budget.

    The contraction requires M1 * I^{theta (p-1)/4} <= 1/2 for
    I = int ||rho(t)||^2 dt, giving I <= (1/(2 M1))^{4/(theta (p-1))}.
    """
    theta = float(theta)
    p = float(p)
    return (1.0 / (2.0 * M1)) ** (4.0 / (theta * (p - 1.0)))


def interp_norm_probe(traj, plan: ExponentPlan) -> dict:
    """Measured ratio of the three-norm interpolation inequality on a run."""
    import numpy as np
    from .observables import spacetime_norm
    from .spectral import sobolev_norm

    n = traj.snapshots[0].grid.n
    k = float("inf") if isinstance(plan.k, _Infinity) else float(plan.k)
    ell = float("inf") if isinstance(plan.ell, _Infinity) else float(plan.ell)
    theta = float(plan.theta)
    sig = float(plan.sigma)

    lhs = spacetime_norm(traj, k, ell, 0.0)
    rhs_inf = spacetime_norm(traj, float("inf"), 2.0, sig)
    if n == 1:
        vals = np.array([sobolev_norm(u.with_values(u.rho), 1.0, 2.0)
                         for u in traj.snapshots])
        rho_norm = float(np.sqrt(np.trapezoid(vals ** 2, np.array(traj.times))))
        denom = rho_norm ** (theta / 2.0) * rhs_inf ** (1.0 - theta)
        parts = {"rho_l2_h1": rho_norm}
    else:
        if n == 2:
            morawetz = spacetime_norm(traj, 4.0, 8.0, 0.0)
        elif n == 3:
            morawetz = spacetime_norm(traj, 4.0, 4.0, 0.0)
        else:
            morawetz = spacetime_norm(traj, 4.0, 4.0, (3.0 - n) / 4.0)
        denom = morawetz ** theta * rhs_inf ** (1.0 - theta)
        parts = {"morawetz_norm": morawetz}
    ratio = lhs / denom if denom > 0 else 0.0
    return {"lhs": lhs, "rhs_sup": rhs_inf, "ratio": ratio, **parts}
