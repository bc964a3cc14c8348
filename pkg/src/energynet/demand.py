"""Linear demand curves anchored at a baseline (quantity, price) pair.

The curve passes through (p0_kw, pi0) with point elasticity eps there:

    price(q)    = pi0 + pi0/(eps*p0) * (q - p0)
    quantity(p) = p0  + (eps*p0) * (p - pi0) / pi0
    utility(q)  = integral of price from 0 to q, on the positive-price range

eps < 0, so the curve slopes down and utility is concave.  quantity() and
utility() are clipped to [0, q_zero] where q_zero = p0*(1 - eps) is the
point the price reaches zero; consumption past that point adds no value.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BadElasticity


@dataclass(frozen=True)
class DemandCurve:
    p0_kw: float
    pi0_cny_per_kwh: float
    elasticity: float

    @property
    def q_zero_kw(self) -> float:
        """Consumption at which willingness to pay hits zero."""
        return self.p0_kw * (1.0 - self.elasticity)

    def price_at(self, q_kw: float) -> float:
        if q_kw >= self.q_zero_kw:
            return 0.0
        slope = self.pi0_cny_per_kwh / (self.elasticity * self.p0_kw)
        return self.pi0_cny_per_kwh + slope * (q_kw - self.p0_kw)

    def quantity_at(self, price_cny_per_kwh: float) -> float:
        q = self.p0_kw + (self.elasticity * self.p0_kw) * (
            price_cny_per_kwh - self.pi0_cny_per_kwh
        ) / self.pi0_cny_per_kwh
        return min(max(q, 0.0), self.q_zero_kw)

    def utility_cny_per_h(self, q_kw: float) -> float:
        """Value of consuming at rate q kW, in CNY per hour."""
        q = min(max(q_kw, 0.0), self.q_zero_kw)
        slope = self.pi0_cny_per_kwh / (self.elasticity * self.p0_kw)
        return self.pi0_cny_per_kwh * q + slope * (0.5 * q * q - self.p0_kw * q)


def build_demand_curve(p0_kw: float, pi0_cny_per_kwh: float,
                       elasticity: float) -> DemandCurve:
    if elasticity >= 0:
        raise BadElasticity(f"elasticity must be negative, got {elasticity}")
    if p0_kw <= 0 or pi0_cny_per_kwh <= 0:
        raise BadElasticity("baseline quantity and price must be positive")
    return DemandCurve(p0_kw, pi0_cny_per_kwh, elasticity)
