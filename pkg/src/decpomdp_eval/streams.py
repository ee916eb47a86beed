"""Per-(agent, iteration, phase) random substreams derived from a master seed.

Every random draw in a run comes from a generator keyed by
``(master_seed, unit, iteration, phase)`` where unit 0 is the environment and
unit ``k + 1`` is agent ``k``. Substreams are independent of scheduling order,
so two algorithms that request the same keys see the same numbers.
"""
from __future__ import annotations

import numpy as np

ENV = -1

# phase codes
INIT = 0
OBSERVE = 1
ACT = 2
TRANSITION = 3
MARGINALIZE = 4

PHASE_NAMES = {INIT: "init", OBSERVE: "observe", ACT: "act", TRANSITION: "transition", MARGINALIZE: "marginalize"}


class Streams:
    def __init__(self, master_seed: int, record: bool = False):
        if master_seed < 0:
            raise ValueError("master seed must be non-negative")
        self.master_seed = int(master_seed)
        self.log: list[tuple[int, int, int]] | None = [] if record else None

    def get(self, agent: int, iteration: int, phase: int) -> np.random.Generator:
        if self.log is not None:
            self.log.append((agent, iteration, phase))
        return np.random.default_rng([self.master_seed, agent + 1, iteration, phase])
