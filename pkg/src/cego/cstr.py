"""Williams-Otto continuous stirred-tank reactor at steady state.

The classical benchmark plant: pure feeds A and B enter a perfectly mixed
reactor of fixed mass holdup held at temperature ``T_r``, with three
reactions in mass-fraction kinetics::

    A + B -> C        r1 = k1 * XA * XB
    C + B -> P + E    r2 = k2 * XB * XC
    P + C -> G        r3 = k3 * XC * XP

and Arrhenius rate constants ``k_j = a_j * exp(-b_j / T_kelvin)``. Plant
constants (kinetics, feed rate of A, holdup, economic coefficients) follow
the values conventionally used for this benchmark in the real-time
optimization literature; they are grouped in :class:`CstrPlant` so tests can
substitute degenerate variants (e.g. zero reaction rates).

The steady state solves the six component mass balances

    0 = F_A - F*XA - W*r1
    0 = F_B - F*XB - W*(r1 + r2)
    0 =     - F*XC + W*(2*r1 - 2*r2 - r3)
    0 =     - F*XE + W*(2*r2)
    0 =     - F*XP + W*(r2 - 0.5*r3)
    0 =     - F*XG + W*(1.5*r3)

with ``F = F_A + F_B``; the reaction terms cancel in the sum, so any root
has mass fractions summing to one. A damped Newton iteration with the
analytic Jacobian converges in a handful of steps from the no-reaction feed
state; a damped successive-substitution sweep is kept as a fallback for the
rare step where Newton stalls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CstrPlant", "CstrState", "WILLIAMS_OTTO_PLANT", "ConvergenceError",
           "cstr_steady_state", "williams_otto_profit"]

SPECIES = ("A", "B", "C", "E", "P", "G")


class ConvergenceError(RuntimeError):
    """Steady-state iteration failed to reach the residual tolerance."""


@dataclass(frozen=True)
class CstrPlant:
    """Plant constants for the Williams-Otto reactor.

    ``arrhenius_a`` are the three pre-exponential factors (1/s per unit mass
    fraction product), ``arrhenius_b`` the activation temperatures (K).
    ``profit_*`` are the economic coefficients of the operating profit
    ``c_P*XP*F + c_E*XE*F - c_A*F_A - c_B*F_B``.
    """

    feed_a: float = 1.8275          # kg/s, fixed feed rate of component A
    holdup: float = 2105.0          # kg, reactor mass
    arrhenius_a: tuple[float, float, float] = (1.6599e6, 7.2117e8, 2.6745e12)
    arrhenius_b: tuple[float, float, float] = (6666.7, 8333.3, 11111.0)
    profit_p: float = 1143.38
    profit_e: float = 25.92
    cost_feed_a: float = 76.23
    cost_feed_b: float = 114.34
    feed_b_range: tuple[float, float] = (4.0, 7.0)
    temperature_range: tuple[float, float] = (70.0, 100.0)

    def rate_constants(self, temperature_c: float) -> np.ndarray:
        t_kelvin = temperature_c + 273.15
        a = np.asarray(self.arrhenius_a)
        b = np.asarray(self.arrhenius_b)
        return a * np.exp(-b / t_kelvin)


WILLIAMS_OTTO_PLANT = CstrPlant()


@dataclass(frozen=True)
class CstrState:
    """Converged reactor state: outlet mass fractions plus operating inputs."""

    mass_fractions: tuple[float, ...]  # ordered as SPECIES
    feed_a: float
    feed_b: float
    temperature: float

    @property
    def x_a(self) -> float:
        return self.mass_fractions[0]

    @property
    def x_b(self) -> float:
        return self.mass_fractions[1]

    @property
    def x_c(self) -> float:
        return self.mass_fractions[2]

    @property
    def x_e(self) -> float:
        return self.mass_fractions[3]

    @property
    def x_p(self) -> float:
        return self.mass_fractions[4]

    @property
    def x_g(self) -> float:
        return self.mass_fractions[5]


def _residual(x: np.ndarray, feed_a: float, feed_b: float, k: np.ndarray,
              holdup: float) -> np.ndarray:
    f = feed_a + feed_b
    xa, xb, xc, xe, xp, xg = x
    r1 = k[0] * xa * xb
    r2 = k[1] * xb * xc
    r3 = k[2] * xc * xp
    return np.array([
        feed_a - f * xa - holdup * r1,
        feed_b - f * xb - holdup * (r1 + r2),
        -f * xc + holdup * (2.0 * r1 - 2.0 * r2 - r3),
        -f * xe + holdup * 2.0 * r2,
        -f * xp + holdup * (r2 - 0.5 * r3),
        -f * xg + holdup * 1.5 * r3,
    ])


def _jacobian(x: np.ndarray, feed_a: float, feed_b: float, k: np.ndarray,
              holdup: float) -> np.ndarray:
    f = feed_a + feed_b
    xa, xb, xc, xe, xp, xg = x
    w = holdup
    jac = np.zeros((6, 6))
    # d r1 = k1*(xb, xa, 0, 0, 0, 0); d r2 = k2*(0, xc, xb, 0, 0, 0); d r3 = k3*(0, 0, xp, 0, xc, 0)
    jac[0, 0] = -f - w * k[0] * xb
    jac[0, 1] = -w * k[0] * xa
    jac[1, 0] = -w * k[0] * xb
    jac[1, 1] = -f - w * (k[0] * xa + k[1] * xc)
    jac[1, 2] = -w * k[1] * xb
    jac[2, 0] = 2.0 * w * k[0] * xb
    jac[2, 1] = w * (2.0 * k[0] * xa - 2.0 * k[1] * xc)
    jac[2, 2] = -f - w * (2.0 * k[1] * xb + k[2] * xp)
    jac[2, 4] = -w * k[2] * xc
    jac[3, 1] = 2.0 * w * k[1] * xc
    jac[3, 2] = 2.0 * w * k[1] * xb
    jac[3, 3] = -f
    jac[4, 1] = w * k[1] * xc
    jac[4, 2] = w * (k[1] * xb - 0.5 * k[2] * xp)
    jac[4, 4] = -f - 0.5 * w * k[2] * xc
    jac[5, 2] = 1.5 * w * k[2] * xp
    jac[5, 4] = 1.5 * w * k[2] * xc
    jac[5, 5] = -f
    return jac


def _substitution_sweep(x: np.ndarray, feed_a: float, feed_b: float, k: np.ndarray,
                        holdup: float, damping: float = 0.5) -> np.ndarray:
    """One damped successive-substitution step; each balance solved for its own fraction."""
    f = feed_a + feed_b
    w = holdup
    xa, xb, xc, xe, xp, xg = x
    new = np.array([
        feed_a / (f + w * k[0] * xb),
        feed_b / (f + w * (k[0] * xa + k[1] * xc)),
        2.0 * w * k[0] * xa * xb / (f + w * (2.0 * k[1] * xb + k[2] * xp)),
        2.0 * w * k[1] * xb * xc / f,
        w * k[1] * xb * xc / (f + 0.5 * w * k[2] * xc),
        1.5 * w * k[2] * xc * xp / f,
    ])
    return (1.0 - damping) * x + damping * new


def cstr_steady_state(
    feed_b: float,
    temperature: float,
    plant: CstrPlant = WILLIAMS_OTTO_PLANT,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> CstrState:
    """Solve the reactor steady state at inputs ``(F_B, T_r)``.

    Raises ``ValueError`` outside the admissible input box and
    :class:`ConvergenceError` if the residual fails to reach ``tol`` in
    ``max_iter`` iterations.
    """
    lo_b, hi_b = plant.feed_b_range
    lo_t, hi_t = plant.temperature_range
    if not lo_b <= feed_b <= hi_b:
        raise ValueError(f"feed_b={feed_b} outside admissible range [{lo_b}, {hi_b}]")
    if not lo_t <= temperature <= hi_t:
        raise ValueError(
            f"temperature={temperature} outside admissible range [{lo_t}, {hi_t}]"
        )
    k = plant.rate_constants(temperature)
    feed_a = plant.feed_a
    f = feed_a + feed_b
    x = np.array([feed_a / f, feed_b / f, 0.0, 0.0, 0.0, 0.0])

    resid = _residual(x, feed_a, feed_b, k, plant.holdup)
    for _ in range(max_iter):
        norm = np.max(np.abs(resid))
        if norm <= tol:
            break
        try:
            step = np.linalg.solve(_jacobian(x, feed_a, feed_b, k, plant.holdup), -resid)
        except np.linalg.LinAlgError:
            step = None
        accepted = False
        if step is not None:
            scale = 1.0
            for _ in range(30):
                trial = x + scale * step
                trial_resid = _residual(trial, feed_a, feed_b, k, plant.holdup)
                if np.max(np.abs(trial_resid)) < norm:
                    x, resid = trial, trial_resid
                    accepted = True
                    break
                scale *= 0.5
        if not accepted:
            x = _substitution_sweep(x, feed_a, feed_b, k, plant.holdup)
            resid = _residual(x, feed_a, feed_b, k, plant.holdup)
    else:
        raise ConvergenceError(
            f"steady state not converged at (F_B={feed_b}, T_r={temperature}): "
            f"residual {np.max(np.abs(resid)):.3e} after {max_iter} iterations"
        )

    if np.any(np.asarray(x) < -1e-10):
        raise ConvergenceError(
            f"steady state has negative mass fraction at (F_B={feed_b}, T_r={temperature}): {x}"
        )
    return CstrState(
        mass_fractions=tuple(float(v) for v in x),
        feed_a=feed_a,
        feed_b=float(feed_b),
        temperature=float(temperature),
    )


def williams_otto_profit(state: CstrState, plant: CstrPlant = WILLIAMS_OTTO_PLANT) -> float:
    """Operating profit of a converged state (positive is good)."""
    f = state.feed_a + state.feed_b
    return (
        plant.profit_p * state.x_p * f
        + plant.profit_e * state.x_e * f
        - plant.cost_feed_a * state.feed_a
        - plant.cost_feed_b * state.feed_b
    )
