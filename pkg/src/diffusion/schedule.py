"""Variance-preserving noise schedule with a linear beta(t)."""
from dataclasses import dataclass

import numpy as np

from config import BETA0, BETA1, T_END, T_EPS, LAMBDA_TOL
from utils.errors import DomainError
from utils.logger import logger


@dataclass(frozen=True)
class VpSchedule:
    """
    Linear VP schedule on t in [0, 1].

        log alpha_t = -(beta1 - beta0)/4 * t^2 - beta0/2 * t
        sigma_t     = sqrt(1 - alpha_t^2)
        lambda_t    = log(alpha_t / sigma_t)

    All methods accept floats or numpy arrays and never mutate state.
    """

    beta0: float = BETA0
    beta1: float = BETA1
    t_eps: float = T_EPS
    t_end: float = T_END

    def __post_init__(self):
        if self.beta0 <= 0 or self.beta1 < self.beta0:
            raise DomainError(f"Need 0 < beta0 <= beta1, got beta0={self.beta0}, beta1={self.beta1}")
        if not 0.0 < self.t_eps < self.t_end:
            raise DomainError(f"t_eps must lie in (0, {self.t_end}), got {self.t_eps}")

    # ------------------------------------------------------------------ checks

    def _check_t(self, t, lower_open: bool = False):
        arr = np.asarray(t, dtype=np.float64)
        low_bad = arr <= 0.0 if lower_open else arr < 0.0
        if np.any(low_bad) or np.any(arr > self.t_end) or np.any(np.isnan(arr)):
            bound = "(0, 1]" if lower_open else "[0, 1]"
            raise DomainError(f"t must lie in {bound}, got {t}")
        return arr

    # ----------------------------------------------------------- marginals

    def beta(self, t):
        """beta(t) = beta0 + (beta1 - beta0) t."""
        t = self._check_t(t)
        return self.beta0 + (self.beta1 - self.beta0) * t

    def log_alpha(self, t):
        t = self._check_t(t)
        return -0.25 * (self.beta1 - self.beta0) * t ** 2 - 0.5 * self.beta0 * t

    def alpha(self, t):
        return np.exp(self.log_alpha(t))

    def sigma_sq(self, t):
        # -expm1 keeps precision for t near 0
        return -np.expm1(2.0 * self.log_alpha(t))

    def sigma(self, t):
        return np.sqrt(self.sigma_sq(t))

    def lambda_(self, t):
        """Half log-SNR, log(alpha_t / sigma_t); singular where sigma_t = 0."""
        sigma_sq = self.sigma_sq(t)
        if np.any(sigma_sq <= 0.0):
            raise DomainError(f"lambda is singular at t={t} (sigma_t = 0)")
        return self.log_alpha(t) - 0.5 * np.log(sigma_sq)

    @property
    def lambda_min(self) -> float:
        return float(self.lambda_(self.t_end))

    @property
    def lambda_max(self) -> float:
        return float(self.lambda_(self.t_eps))

    def t_of_lambda(self, lam):
        """
        Inverse of lambda_ on [t_eps, 1].

        alpha^2 = 1 / (1 + exp(-2 lam)) turns -2 log alpha = log(1 + exp(-2 lam))
        into a quadratic in t; the stable root is taken and checked, with
        bisection as a fallback.
        """
        lam_arr = np.asarray(lam, dtype=np.float64)
        slack = 1e-10 * max(1.0, abs(self.lambda_max))
        if np.any(lam_arr < self.lambda_min - slack) or np.any(lam_arr > self.lambda_max + slack):
            raise DomainError(
                f"lambda {lam} outside [{self.lambda_min:.6f}, {self.lambda_max:.6f}]"
            )

        log_term = np.logaddexp(0.0, -2.0 * lam_arr)
        delta = self.beta0 ** 2 + 2.0 * (self.beta1 - self.beta0) * log_term
        t = 2.0 * log_term / (np.sqrt(delta) + self.beta0)
        t = np.clip(t, self.t_eps, self.t_end)

        residual = np.abs(self.lambda_(t) - lam_arr)
        if np.any(residual > 1e-10):
            logger.debug("Analytic lambda inverse inaccurate, falling back to bisection")
            if t.ndim == 0:
                t = np.asarray(self._bisect(float(lam_arr)))
            else:
                t = np.array([self._bisect(float(v)) for v in lam_arr])
        return t if t.ndim else float(t)

    def _bisect(self, lam: float) -> float:
        lo, hi = self.t_eps, self.t_end
        # lambda is decreasing: lambda(lo) >= lam >= lambda(hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            val = float(self.lambda_(mid))
            if abs(val - lam) <= LAMBDA_TOL:
                return mid
            if val > lam:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    # ------------------------------------------------- SDE coefficients

    def drift_coeff(self, t):
        """f(t) = d log(alpha_t)/dt."""
        t = self._check_t(t, lower_open=True)
        return -0.5 * (self.beta1 - self.beta0) * t - 0.5 * self.beta0

    def dsigma_sq_dt(self, t):
        t = self._check_t(t, lower_open=True)
        return self.beta(t) * np.exp(2.0 * self.log_alpha(t))

    def diffusion_coeff_sq(self, t):
        """
        g^2(t) = d sigma_t^2/dt - 2 f(t) sigma_t^2.

        Both terms carry the factor (beta1 - beta0) t + beta0, so the sum
        collapses to beta(t) because alpha^2 + sigma^2 = 1.
        """
        t = self._check_t(t, lower_open=True)
        return self.dsigma_sq_dt(t) - 2.0 * self.drift_coeff(t) * self.sigma_sq(t)

    def dlambda_dt(self, t):
        """d lambda/dt = -beta(t) / (2 sigma_t^2)."""
        t = self._check_t(t, lower_open=True)
        return -self.beta(t) / (2.0 * self.sigma_sq(t))

    def g2_via_lambda(self, t):
        """g^2(t) = -2 sigma_t^2 d lambda/dt; an independent route to the same value."""
        return -2.0 * self.sigma_sq(t) * self.dlambda_dt(t)

    def to_dict(self) -> dict:
        return {"beta0": self.beta0, "beta1": self.beta1, "t_eps": self.t_eps}
