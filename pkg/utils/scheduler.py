"""
Layer campaigns for circuit compilation.
A campaign lists layer counts in config, e.g. {"layers": [3, 3.5], "runs_per_layer": 2}.
Each (layers, run) pair gets its own seed spawned from the master seed; the
winner is the run with the highest fidelity, ties going to the lower CNOT depth.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np


def _parse_layers(value) -> float:
    layers = float(value)
    if layers <= 0 or abs(2 * layers - round(2 * layers)) > 1e-9:
        raise ValueError(f"layer count must be a positive multiple of 1/2, got {value}")
    return layers


@dataclass
class CampaignEntry:
    layers: float
    run: int
    seed: int

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignEntry":
        return cls(layers=_parse_layers(d["layers"]), run=int(d.get("run", 0)), seed=int(d["seed"]))

    def to_dict(self) -> dict:
        return {"layers": self.layers, "run": self.run, "seed": self.seed}


@dataclass
class CampaignOutcome:
    entry: CampaignEntry
    fidelity: float
    cnot_depth: int


def plan_campaign(
    layers: Sequence[float], runs_per_layer: int, master_seed: Union[int, np.random.SeedSequence]
) -> List[CampaignEntry]:
    """One entry per (layers, run), seeds drawn from independent SeedSequence children."""
    plan = [(_parse_layers(l), run) for l in layers for run in range(max(1, runs_per_layer))]
    root = master_seed if isinstance(master_seed, np.random.SeedSequence) else np.random.SeedSequence(master_seed)
    children = root.spawn(len(plan))
    return [
        CampaignEntry(l, run, int(child.generate_state(1)[0]))
        for (l, run), child in zip(plan, children)
    ]


def pick_best(outcomes: List[CampaignOutcome]) -> Optional[CampaignOutcome]:
    """Highest fidelity wins; equal fidelity goes to the shallower circuit, then to plan order."""
    best = None
    for o in outcomes:
        if best is None or o.fidelity > best.fidelity or (o.fidelity == best.fidelity and o.cnot_depth < best.cnot_depth):
            best = o
    return best
