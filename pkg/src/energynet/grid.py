"""Physical grid description: nodes, resistive lines, plants, loads, renewables.

Loads come in two flavors: fixed (plain kW per period) and elastic (a
baseline (kW, CNY/kWh) pair per period plus an elasticity, from which a
demand curve is built).  All per-period profiles must have the same length;
the 4-node day uses twelve 2-hour periods.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .demand import DemandCurve, build_demand_curve
from .errors import ConfigError


@dataclass(frozen=True)
class Line:
    from_node: str
    to_node: str
    resistance_pu: float
    limit_kw: float


@dataclass(frozen=True)
class Plant:
    name: str
    node: str
    a_cny_per_kwh2: float
    b_cny_per_kwh: float
    p_max_kw: float
    carbon_g_per_kwh: float = 550.0

    def cost_cny_per_h(self, p_kw: float) -> float:
        return 0.5 * self.a_cny_per_kwh2 * p_kw * p_kw + self.b_cny_per_kwh * p_kw

    def marginal_cny_per_kwh(self, p_kw: float) -> float:
        return self.a_cny_per_kwh2 * p_kw + self.b_cny_per_kwh


@dataclass(frozen=True)
class FixedLoad:
    name: str
    node: str
    kw: tuple[float, ...]


@dataclass(frozen=True)
class ElasticLoad:
    name: str
    node: str
    elasticity: float
    baseline: tuple[tuple[float, float], ...]  # (p0 kW, pi0 CNY/kWh) per period

    def curve(self, period: int) -> DemandCurve:
        p0, pi0 = self.baseline[period]
        return build_demand_curve(p0, pi0, self.elasticity)


@dataclass(frozen=True)
class Renewable:
    name: str
    node: str
    available_kw: tuple[float, ...]
    carbon_g_per_kwh: float = 0.0


@dataclass
class GridModel:
    nodes: tuple[str, ...]
    lines: tuple[Line, ...]
    plants: tuple[Plant, ...]
    fixed_loads: tuple[FixedLoad, ...] = ()
    elastic_loads: tuple[ElasticLoad, ...] = ()
    renewables: tuple[Renewable, ...] = ()
    base_kw: float = 1000.0
    name: str = "grid"
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {n: i for i, n in enumerate(self.nodes)}
        self.validate()

    def node_index(self, node: str) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise ConfigError(f"unknown node {node!r}") from None

    @property
    def n_periods(self) -> int:
        lengths = {len(l.kw) for l in self.fixed_loads}
        lengths |= {len(l.baseline) for l in self.elastic_loads}
        lengths |= {len(r.available_kw) for r in self.renewables}
        return lengths.pop() if lengths else 1

    def validate(self) -> None:
        if len(set(self.nodes)) != len(self.nodes):
            raise ConfigError("duplicate node names")
        for line in self.lines:
            if line.resistance_pu < 0:
                raise ConfigError(f"negative resistance on {line.from_node}-{line.to_node}")
            if line.from_node not in self._index or line.to_node not in self._index:
                raise ConfigError(f"line references unknown node: {line}")
        for plant in self.plants:
            if plant.a_cny_per_kwh2 <= 0:
                raise ConfigError(f"plant {plant.name}: quadratic coefficient must be > 0")
            self.node_index(plant.node)
        for item in (*self.fixed_loads, *self.elastic_loads, *self.renewables):
            self.node_index(item.node)
        lengths = {len(l.kw) for l in self.fixed_loads}
        lengths |= {len(l.baseline) for l in self.elastic_loads}
        lengths |= {len(r.available_kw) for r in self.renewables}
        if len(lengths) > 1:
            raise ConfigError(f"inconsistent profile lengths: {sorted(lengths)}")
        if len(self.nodes) > 1 and not self._connected():
            raise ConfigError("grid graph is not connected")

    def _connected(self) -> bool:
        seen = {self.nodes[0]}
        frontier = [self.nodes[0]]
        adj: dict[str, list[str]] = {n: [] for n in self.nodes}
        for line in self.lines:
            adj[line.from_node].append(line.to_node)
            adj[line.to_node].append(line.from_node)
        while frontier:
            for nbr in adj[frontier.pop()]:
                if nbr not in seen:
                    seen.add(nbr)
                    frontier.append(nbr)
        return len(seen) == len(self.nodes)

    def fixed_demand_kw(self, period: int) -> dict[str, float]:
        demand = {n: 0.0 for n in self.nodes}
        for load in self.fixed_loads:
            demand[load.node] += load.kw[period]
        return demand

    @classmethod
    def from_dict(cls, raw: dict, name: str = "grid") -> "GridModel":
        try:
            return cls(
                nodes=tuple(raw["nodes"]),
                lines=tuple(
                    Line(l["from"], l["to"], l["resistance_pu"], l["limit_kw"])
                    for l in raw.get("lines", [])
                ),
                plants=tuple(
                    Plant(p["name"], p["node"], p["a"], p["b"], p["p_max_kw"],
                          p.get("carbon_g_per_kwh", 550.0))
                    for p in raw.get("plants", [])
                ),
                fixed_loads=tuple(
                    FixedLoad(l["name"], l["node"], tuple(l["kw"]))
                    for l in raw.get("fixed_loads", [])
                ),
                elastic_loads=tuple(
                    ElasticLoad(l["name"], l["node"], l["elasticity"],
                                tuple((p, pi) for p, pi in l["baseline"]))
                    for l in raw.get("elastic_loads", [])
                ),
                renewables=tuple(
                    Renewable(r["name"], r["node"], tuple(r["available_kw"]),
                              r.get("carbon_g_per_kwh", 0.0))
                    for r in raw.get("renewables", [])
                ),
                base_kw=raw.get("base_kw", 1000.0),
                name=raw.get("name", name),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad grid config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "GridModel":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read grid config {path}: {exc}") from exc
        return cls.from_dict(raw, name=path.stem)
