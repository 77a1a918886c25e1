"""Recover random composed operators and report how often recomposition holds."""
from __future__ import annotations

import argparse
import json
import random
import time
from dataclasses import asdict, dataclass

from lpdokit import bkfactor as bk
from lpdokit.random_ops import PolyConfig, composed2, composed3


@dataclass(frozen=True)
class StudyConfig:
    order: int = 2
    trials: int = 50
    seed: int = 0
    degree: int = 2
    bound: int = 3


def run(cfg: StudyConfig) -> dict:
    rng = random.Random(cfg.seed)
    poly = PolyConfig(degree=cfg.degree, bound=cfg.bound)
    make, fac = (composed2, bk.factor2) if cfg.order == 2 else (composed3, bk.factor3)
    exact = structural = 0
    start = time.perf_counter()
    for _ in range(cfg.trials):
        c = make(rng, poly)
        f = fac(c.operator, c.omega)
        exact += f.exact
        structural += bk.recomposition_structural(f)
    return {
        "config": asdict(cfg),
        "exact": exact,
        "structural": structural,
        "rate": structural / cfg.trials,
        "seconds": round(time.perf_counter() - start, 2),
    }


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--order", type=int, choices=(2, 3), default=2)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--bound", type=int, default=3)
    print(json.dumps(run(StudyConfig(**vars(p.parse_args()))), indent=2))


if __name__ == "__main__":
    main()
