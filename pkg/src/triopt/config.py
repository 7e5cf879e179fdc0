"""Run configuration: graph, data, ordering and optimisation settings.

Defaults: eta = 0.9, tau = 100, zeta = 1e-7 for ordering; lambda = 0.001,
max_iter = 100, w_threshold = 0.3, epsilon = 1e-4 for the optimiser.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .tri_opt import OptConfig


@dataclass
class GraphConfig:
    family: str = "ER"
    degree: int = 1
    d: int = 20
    weight_scale: float = 1.0


@dataclass
class DataConfig:
    n: int = 2000
    noise: str = "gaussian_ev"
    scale: float = 1.0
    seed: int = 0


@dataclass
class OrderConfig:
    eta: float = 0.9
    zeta: float = 1e-7
    tau: int = 100
    use_downdate: bool = True
    refine: bool = True


@dataclass
class OutputConfig:
    out_dir: str = "out"
    header: bool = False


@dataclass
class RunConfig:
    graph: GraphConfig = field(default_factory=GraphConfig)
    data: DataConfig = field(default_factory=DataConfig)
    ordering: OrderConfig = field(default_factory=OrderConfig)
    opt: OptConfig = field(default_factory=OptConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        parts = {}
        for f in fields(cls):
            sub = f.default_factory  # type: ignore[misc]
            known = {g.name for g in fields(sub)}
            given = obj.get(f.name, {})
            unknown = set(given) - known
            if unknown:
                raise ValueError(f"unknown keys in [{f.name}]: {sorted(unknown)}")
            parts[f.name] = sub(**given)
        return cls(**parts)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())
