"""Game model container, generator validation, drift-condition checks, and value bounds.

The model is a finite (or gridded) continuous-time Markov game: per-state
action sets for both players, a payoff-rate tensor, a conservative generator
tensor, a terminal reward vector, a risk parameter theta > 0 and a horizon.
Tensors are ragged over states (action set sizes may vary), so they are held
as per-state numpy arrays.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CertificateError, StructureError

logger = logging.getLogger(__name__)

# Relative tolerance for row-sum conservativity: floating-point row sums of
# rate tensors never vanish exactly.
CONSERVATIVITY_REL_TOL = 1e-12


@dataclass
class GameModel:
    """Two-player zero-sum game on a controlled continuous-time Markov chain.

    Attributes:
        actions_p1: per-state action labels for player 1 (the maximizer).
        actions_p2: per-state action labels for player 2 (the minimizer).
        payoff: per-state arrays r[x] of shape (|A(x)|, |B(x)|), reward rate
            to player 1 / cost rate to player 2.
        generator: per-state arrays q[x] of shape (|A(x)|, |B(x)|, n_states);
            q[x][a, b, y] is the transition rate to y, rows sum to zero.
        terminal: terminal reward g(x), shape (n_states,).
        theta: risk-sensitivity parameter, strictly positive (risk aversion).
            Risk seeking is modelled by negating the payoff, not by theta < 0.
        horizon: game length T > 0.
        coords: optional real coordinate per state (gridded continuous models).
        state_ids: external state identifiers, defaults to 0..n_states-1.
    """

    actions_p1: list[list[int]]
    actions_p2: list[list[int]]
    payoff: list[np.ndarray]
    generator: list[np.ndarray]
    terminal: np.ndarray
    theta: float
    horizon: float
    coords: np.ndarray | None = None
    state_ids: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.theta <= 0:
            raise ValueError(
                "theta must be strictly positive; model risk seeking by negating the payoff"
            )
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        self.payoff = [np.asarray(m, dtype=float) for m in self.payoff]
        self.generator = [np.asarray(g, dtype=float) for g in self.generator]
        self.terminal = np.asarray(self.terminal, dtype=float)
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=float)
        if not self.state_ids:
            self.state_ids = list(range(self.n_states))

    @property
    def n_states(self) -> int:
        return len(self.payoff)

    def n_actions_p1(self, x: int) -> int:
        return len(self.actions_p1[x])

    def n_actions_p2(self, x: int) -> int:
        return len(self.actions_p2[x])

    def rate_out(self, x: int) -> float:
        """Total exit rate bound q*(x) = max over (a,b) of -q(x|x,a,b)."""
        return float(np.max(-self.generator[x][:, :, x]))

    @property
    def norm_q(self) -> float:
        """Sup of q*(x) over states."""
        return max(self.rate_out(x) for x in range(self.n_states))

    @property
    def norm_r(self) -> float:
        """Sup of |r(x,a,b)|."""
        return max(float(np.max(np.abs(m))) if m.size else 0.0 for m in self.payoff)

    @property
    def norm_g(self) -> float:
        return float(np.max(np.abs(self.terminal)))


@dataclass
class Violation:
    """One violated generator invariant with its witness cell."""

    kind: str  # "offdiag_negative" | "not_conservative" | "not_stable" | "not_finite"
    x: int
    a: int | None = None
    b: int | None = None
    y: int | None = None
    residual: float = 0.0


@dataclass
class ValidationReport:
    """Result of structural generator validation."""

    violations: list[Violation]
    q_star: np.ndarray  # per-state exit-rate bound
    max_abs_rate: float
    tolerance: float

    @property
    def is_valid(self) -> bool:
        return not self.violations


@dataclass
class LyapunovCertificate:
    """Candidate Lyapunov weights and drift constants, with check results.

    The weights and constants are supplied by the caller (searching for them
    is out of scope); check_assumptions fills the five booleans and the
    worst-case residuals.
    """

    v0: np.ndarray
    v1: np.ndarray
    rho0: float
    l0: float
    m0: float
    rho1: float
    b1: float
    m1: float
    drift0_ok: bool | None = None
    rate_bound_ok: bool | None = None
    payoff_bound_ok: bool | None = None
    drift1_ok: bool | None = None
    squeeze_ok: bool | None = None
    residuals: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.v0 = np.asarray(self.v0, dtype=float)
        self.v1 = np.asarray(self.v1, dtype=float)

    def validate_shape(self, n_states: int) -> None:
        if self.v0.shape != (n_states,) or self.v1.shape != (n_states,):
            raise CertificateError(
                f"certificate weights must have shape ({n_states},), "
                f"got v0 {self.v0.shape}, v1 {self.v1.shape}"
            )
        if np.min(self.v0) < 1.0:
            raise CertificateError("v0 must satisfy v0(x) >= 1 everywhere")
        if np.min(self.v1) < 1.0:
            raise CertificateError("v1 must satisfy v1(x) >= 1 everywhere")
        for name in ("rho0", "l0", "m0", "rho1", "b1", "m1"):
            if getattr(self, name) <= 0:
                raise CertificateError(f"certificate constant {name} must be strictly positive")

    @property
    def all_ok(self) -> bool:
        checks = (
            self.drift0_ok,
            self.rate_bound_ok,
            self.payoff_bound_ok,
            self.drift1_ok,
            self.squeeze_ok,
        )
        return all(c is True for c in checks)


@dataclass
class ValueBounds:
    """Per-state a-priori envelope for the game value at any (t, x)."""

    upper_const: float  # the multiplicative constant on v0 in the upper bound
    lower_exponent_const: float  # the factor multiplying v0(x) in the lower exponent
    lower: np.ndarray
    upper: np.ndarray
    representable: bool = True


def _check_dimensions(model: GameModel) -> None:
    n = model.n_states
    if not (len(model.actions_p1) == len(model.actions_p2) == len(model.generator) == n):
        raise StructureError("per-state lists have inconsistent lengths")
    if model.terminal.shape != (n,):
        raise StructureError(f"terminal must have shape ({n},), got {model.terminal.shape}")
    for x in range(n):
        na, nb = model.n_actions_p1(x), model.n_actions_p2(x)
        if na == 0 or nb == 0:
            raise StructureError(f"state {x} has an empty action set")
        if model.payoff[x].shape != (na, nb):
            raise StructureError(
                f"payoff[{x}] must have shape ({na}, {nb}), got {model.payoff[x].shape}"
            )
        if model.generator[x].shape != (na, nb, n):
            raise StructureError(
                f"generator[{x}] must have shape ({na}, {nb}, {n}), "
                f"got {model.generator[x].shape}"
            )


def validate_generator(model: GameModel) -> ValidationReport:
    """Check off-diagonal nonnegativity, conservativity and stability of the rates.

    Dimension mismatches raise StructureError; rate-invariant violations are
    collected in the report with an (x, a, b, y) witness and a residual.
    """
    _check_dimensions(model)
    n = model.n_states
    max_abs = max((float(np.max(np.abs(g))) if g.size else 0.0) for g in model.generator)
    tol = CONSERVATIVITY_REL_TOL * max(max_abs, 1.0)

    violations: list[Violation] = []
    q_star = np.zeros(n)
    for x in range(n):
        q = model.generator[x]
        if not np.isfinite(q).all():
            bad = np.argwhere(~np.isfinite(q))
            a, b, y = (int(v) for v in bad[0])
            violations.append(Violation("not_finite", x, a, b, y, residual=math.inf))
            continue
        off = q.copy()
        off[:, :, x] = 0.0
        neg = np.argwhere(off < 0.0)
        for a, b, y in neg:
            violations.append(
                Violation("offdiag_negative", x, int(a), int(b), int(y), float(off[a, b, y]))
            )
        rowsums = q.sum(axis=2)
        bad_rows = np.argwhere(np.abs(rowsums) > tol)
        for a, b in bad_rows:
            violations.append(
                Violation("not_conservative", x, int(a), int(b), None, float(rowsums[a, b]))
            )
        q_star[x] = float(np.max(-q[:, :, x]))
        if q_star[x] < -tol:
            a, b = np.unravel_index(int(np.argmax(q[:, :, x])), q[:, :, x].shape)
            violations.append(Violation("not_stable", x, int(a), int(b), x, float(q_star[x])))
    return ValidationReport(violations=violations, q_star=q_star, max_abs_rate=max_abs, tolerance=tol)


def check_assumptions(
    model: GameModel, cert: LyapunovCertificate, tol: float
) -> LyapunovCertificate:
    """Verify the standing drift conditions numerically against a candidate certificate.

    Fills the five boolean flags and records the worst residual per check
    (residual = left-hand side minus the tolerance-free bound; a check passes
    when its residual is <= tol). The tolerance is caller-supplied because
    gridded continuous models perturb exact drift identities.

    Checks:
        drift0:        sum_y v0(y) q(y|x,a,b) <= rho0 v0(x)
        rate_bound:    q*(x) <= l0 v0(x)
        payoff_bound:  |r| and |g| <= m0 + (sqrt(2)/2) sqrt(ln v0(x))
        drift1:        sum_y v1(y)^2 q(y|x,a,b) <= rho1 v1(x)^2 + b1
        squeeze:       v0(x)^2 <= m1 v1(x)
    """
    cert.validate_shape(model.n_states)
    v0, v1 = cert.v0, cert.v1

    drift0_res = -math.inf
    drift1_res = -math.inf
    payoff_res = -math.inf
    for x in range(model.n_states):
        q = model.generator[x]
        drift0 = q @ v0  # (na, nb)
        drift0_res = max(drift0_res, float(np.max(drift0)) - cert.rho0 * v0[x])
        drift1 = q @ (v1**2)
        drift1_res = max(drift1_res, float(np.max(drift1)) - (cert.rho1 * v1[x] ** 2 + cert.b1))
        bound = cert.m0 + (math.sqrt(2.0) / 2.0) * math.sqrt(math.log(v0[x]))
        payoff_res = max(payoff_res, float(np.max(np.abs(model.payoff[x]))) - bound)
        payoff_res = max(payoff_res, abs(float(model.terminal[x])) - bound)

    q_star = np.array([model.rate_out(x) for x in range(model.n_states)])
    rate_res = float(np.max(q_star - cert.l0 * v0))
    squeeze_res = float(np.max(v0**2 - cert.m1 * v1))

    if np.all(model.terminal == 0.0):
        # Weaker logarithmic payoff bound available when g vanishes; informational only.
        weak = max(
            float(np.max(np.abs(model.payoff[x])))
            - (cert.m0 + math.log(v0[x]) / (2.0 * model.horizon * model.theta))
            for x in range(model.n_states)
        )
        logger.info(
            "terminal reward is identically zero; weaker log-form payoff bound residual %.3g",
            weak,
        )

    out = replace(
        cert,
        drift0_ok=bool(drift0_res <= tol),
        rate_bound_ok=bool(rate_res <= tol),
        payoff_bound_ok=bool(payoff_res <= tol),
        drift1_ok=bool(drift1_res <= tol),
        squeeze_ok=bool(squeeze_res <= tol),
    )
    out.residuals = {
        "drift0": float(drift0_res),
        "rate_bound": float(rate_res),
        "payoff_bound": float(payoff_res),
        "drift1": float(drift1_res),
        "squeeze": float(squeeze_res),
    }
    return out
def compute_value_bounds(model: GameModel, cert: LyapunovCertificate) -> ValueBounds:
    """Explicit per-state envelope for the risk-sensitive value.

    upper(x) = L v0(x) with L = exp(2T theta (m0 + T theta) + 2 theta (m0 + theta) + rho0 T);
    lower(x) = exp(-theta [T e^{rho0 T} + m0 T + e^{rho0 T} + m0] v0(x)).

    Requires the drift0 / rate_bound / payoff_bound checks to have passed.
    If the upper-bound exponent exceeds 700 the bound is flagged as not
    representable (upper = +inf) instead of overflowing.
    """
    for name in ("drift0_ok", "rate_bound_ok", "payoff_bound_ok"):
        if getattr(cert, name) is not True:
            raise CertificateError(
                f"value bounds need certificate check {name} to have passed; "
                "run check_assumptions first"
            )
    theta, T = model.theta, model.horizon
    exponent = 2.0 * T * theta * (cert.m0 + T * theta) + 2.0 * theta * (cert.m0 + theta) + cert.rho0 * T
    representable = exponent <= 700.0
    if representable:
        L = math.exp(exponent)
        upper = L * cert.v0
    else:
        logger.warning("upper bound not representable: exponent %.3g exceeds 700", exponent)
        L = math.inf
        upper = np.full_like(cert.v0, math.inf)
    e_rho = math.exp(cert.rho0 * T)
    lower_const = T * e_rho + cert.m0 * T + e_rho + cert.m0
    lower = np.exp(-theta * lower_const * cert.v0)
    return ValueBounds(
        upper_const=L,
        lower_exponent_const=theta * lower_const,
        lower=lower,
        upper=upper,
        representable=representable,
    )
