"""Model and Leslie parameters, constraint validation, presets, coercivity constants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import Grid, SymbolSpec, a0, helmholtz

CHI_FORMS = ("b00bis", "e_rel")


@dataclass(frozen=True)
class ModelParams:
    """Smoothing exponents and filter scale of one regularised model.

    ``a0_filter`` attaches an extra Helmholtz factor to the dissipation,
    A0 = mu4 |k|^(2 (theta + a0_filter)) (1 + alpha^2 |k|^2)^(-a0_filter);
    it is 1 only for the Voigt preset, where A0 = -mu4 Laplacian Pi.
    ``chi_form`` picks which gradient is transposed in the chi = 1 term.
    """

    theta: float
    theta1: float
    theta2: float
    chi: int = 0
    alpha: float = 1.0
    mu4: float = 1.0
    a0_filter: float = 0.0
    chi_form: str = "b00bis"

    def __post_init__(self):
        if self.theta < 0 or self.theta2 < 0:
            raise ValueError("theta and theta2 must be non-negative")
        if self.chi not in (0, 1):
            raise ValueError(f"chi must be 0 or 1, got {self.chi!r}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.mu4 > 0:
            raise ValueError("mu4 must be positive (mu4 > 0)")
        if self.a0_filter < 0:
            raise ValueError("a0_filter must be non-negative")
        if self.chi_form not in CHI_FORMS:
            raise ValueError(f"chi_form must be one of {CHI_FORMS}")

    @property
    def bilinear_form(self):
        return f"B0{self.chi}"

    @property
    def q_symbol(self) -> SymbolSpec:
        return helmholtz(self.theta2, self.alpha)

    @property
    def m_symbol(self) -> SymbolSpec:
        return helmholtz(self.theta1, self.alpha)

    @property
    def a0_symbol(self) -> SymbolSpec:
        return a0(self.theta + self.a0_filter, self.mu4, self.alpha, self.a0_filter)


@dataclass(frozen=True)
class LeslieCoefficients:
    mu1: float
    mu2: float
    mu3: float
    mu5: float
    mu6: float
    case: int = 1

    def __post_init__(self):
        if self.case not in (1, 2):
            raise ValueError(f"case must be 1 or 2, got {self.case!r}")

    @property
    def lambda1(self):
        return self.mu2 - self.mu3

    @property
    def lambda2(self):
        return self.mu5 - self.mu6

    @property
    def case1_aqd_coefficient(self):
        """mu5 + mu6 + lambda2^2 / lambda1, the ||A_Q d||^2 weight of the Case 1 law."""
        return self.mu5 + self.mu6 + self.lambda2 ** 2 / self.lambda1

    @property
    def case2_aqd_coefficient(self):
        return self.mu5 + self.mu6 + (self.lambda2 - self.mu2 - self.mu3) ** 2 / self.lambda1


def derive_lambdas(mu2, mu3, mu5, mu6):
    return mu2 - mu3, mu5 - mu6


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    expression: str
    slack: float
    satisfied: bool


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple = field(default_factory=tuple)

    @property
    def violated_constraints(self):
        return [c for c in self.checks if not c.satisfied]

    @property
    def passed(self):
        return not self.violated_constraints

    def __str__(self):
        lines = [f"{'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            mark = "ok " if c.satisfied else "VIOLATED"
            lines.append(f"  [{mark}] {c.name}: {c.expression}  (slack {c.slack:.6g})")
        return "\n".join(lines)


def validate_constraints(leslie: LeslieCoefficients, mu4=None, parodi_tol=1e-12) -> ValidationReport:
    """Check the sign conditions and the Case 1 / Case 2 coefficient constraints.

    Slack is positive when a constraint holds; equalities report minus the
    absolute defect.  The Case 2 inequality is strict, so zero slack fails.
    """
    l1, l2 = leslie.lambda1, leslie.lambda2
    checks = [
        ConstraintCheck("lambda1_negative", "lambda1 < 0", -l1, l1 < 0),
        ConstraintCheck("mu1_nonnegative", "mu1 >= 0", leslie.mu1, leslie.mu1 >= 0),
        ConstraintCheck("mu5_plus_mu6_nonnegative", "mu5 + mu6 >= 0", leslie.mu5 + leslie.mu6, leslie.mu5 + leslie.mu6 >= 0),
    ]
    if mu4 is not None:
        checks.append(ConstraintCheck("mu4_positive", "mu4 > 0", mu4, mu4 > 0))
    s56 = leslie.mu5 + leslie.mu6
    if leslie.case == 1:
        defect = abs((leslie.mu2 + leslie.mu3) - (leslie.mu6 - leslie.mu5))
        checks.append(
            ConstraintCheck("parodi_relation", "mu2 + mu3 = mu6 - mu5", -defect, defect <= parodi_tol)
        )
        if l1 < 0:
            slack = s56 - l2 ** 2 / (-l1)
            ok = slack >= 0
        else:
            slack, ok = -math.inf, False
        checks.append(
            ConstraintCheck("lambda2_bound", "lambda2^2 / (-lambda1) <= mu5 + mu6", slack, ok)
        )
    else:
        if l1 < 0 and s56 >= 0:
            slack = 2 * math.sqrt(-l1) * math.sqrt(s56) - abs(l2 - leslie.mu2 - leslie.mu3)
            ok = slack > 0
        else:
            slack, ok = -math.inf, False
        checks.append(
            ConstraintCheck(
                "case2_coupling_bound",
                "|lambda2 - mu2 - mu3| < 2 sqrt(-lambda1) sqrt(mu5 + mu6)",
                slack,
                ok,
            )
        )
    return ValidationReport(tuple(checks))


# (theta, theta1, theta2, chi, a0_filter)
PRESETS = {
    "NSE-EL": (1.0, 0.0, 0.0, 0, 0.0),
    "Leray-EL-alpha": (1.0, 1.0, 0.0, 0, 0.0),
    "ML-EL-alpha": (1.0, 0.0, 1.0, 0, 0.0),
    "SBM-EL": (1.0, 1.0, 1.0, 0, 0.0),
    "NSV-EL": (0.0, 1.0, 1.0, 0, 1.0),
    "NS-EL-alpha": (1.0, 0.0, 1.0, 1, 0.0),
}


def preset(name: str, alpha=1.0, mu4=1.0, chi_form="b00bis") -> ModelParams:
    """Parameters of one of the six named models; alpha and mu4 stay free."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; valid names: {', '.join(PRESETS)}")
    theta, theta1, theta2, chi, a0f = PRESETS[name]
    return ModelParams(theta, theta1, theta2, chi, alpha, mu4, a0f, chi_form)


def presets_table() -> str:
    rows = [f"{'model':<16}{'theta':>7}{'theta1':>8}{'theta2':>8}  B0    A0"]
    for name, (t, t1, t2, chi, a0f) in PRESETS.items():
        a0_txt = "-mu4 Lap Pi" if a0f else ("-mu4 Lap" if t == 1 else f"mu4(-Lap)^{t:g}")
        rows.append(f"{name:<16}{t:>7g}{t1:>8g}{t2:>8g}  B0{chi}   {a0_txt}")
    return "\n".join(rows)


@dataclass(frozen=True)
class CoercivityConstants:
    c_a0: float
    c_q: float
    c_a0q: float
    c_a0_inf: float
    c_q_inf: float
    c_a0q_inf: float
    q_norm: float  # operator norm of Q from V^{-theta2} to V^{theta2}


def _ratios(params: ModelParams, k2):
    a0s = params.mu4 * k2 ** (params.theta + params.a0_filter) * (1 + params.alpha ** 2 * k2) ** (
        -params.a0_filter
    )
    q = (1 + params.alpha ** 2 * k2) ** (-params.theta2)
    c_a0 = a0s / k2 ** params.theta
    c_q = q * k2 ** params.theta2
    c_a0q = a0s * q / k2 ** (params.theta - params.theta2)
    return c_a0, c_q, c_a0q


def coercivity_constants(params: ModelParams, grid: Grid) -> CoercivityConstants:
    """Smallest symbol ratios over retained nonzero modes, plus continuum infima.

    c_a0:  <A0 w, w>  >= c_a0  ||w||^2_theta          (beta = 0, C_A0 = 0)
    c_q:   <Q w, w>   >= c_q   ||w||^2_{-theta2}
    c_a0q: <A0 w, Q w> >= c_a0q ||w||^2_{theta - theta2}
    The continuum infima are taken over |k| >= 2 pi / L by dense sampling.
    """
    k2 = grid.k2[grid.dealias_mask & (grid.k2 > 0)]
    c_a0, c_q, c_a0q = (float(np.min(r)) for r in _ratios(params, k2))
    kmin = 2 * np.pi / grid.length
    kk = np.geomspace(kmin, 1e6 * kmin, 20001) ** 2
    i_a0, i_q, i_a0q = (float(np.min(r)) for r in _ratios(params, kk))
    qsym = (1 + params.alpha ** 2 * k2) ** (-params.theta2) * k2 ** params.theta2
    return CoercivityConstants(c_a0, c_q, c_a0q, i_a0, i_q, i_a0q, float(np.max(qsym)))
