# -----------------------------------------------------------------------------
# MIT License
#
# Copyright (c) 2024 OpRouting Team
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
# -----------------------------------------------------------------------------

"""Named, splittable, counter-based random streams.

Every simulation draws from separate Philox substreams keyed by ``(seed, stream, *keys)``. Channel outcomes use their
own stream with a fixed number of draws per slot, so two policies run with the same seed see identical channel and
arrival realizations.
"""
from typing import Dict

import numpy as np

#: Stream identifiers; part of the seed derivation, never renumber.
STREAMS: Dict[str, int] = {"channel": 0, "arrivals": 1, "tie": 2, "sample": 3, "drift": 4, "init": 5}


class RandomStreams:
    """Factory of deterministic ``numpy`` generators derived from a single 64-bit seed."""
    __slots__ = ('_seed', '_path')

    def __init__(self, seed: int, _path=()):
        assert seed >= 0, f"Seed must be non-negative, got {seed}"
        self._seed = int(seed) & (2 ** 64 - 1)
        self._path = tuple(_path)

    @property
    def seed(self) -> int:
        return self._seed

    def generator(self, name: str, *keys: int) -> np.random.Generator:
        """A fresh generator for the named stream; the same arguments always give the same sequence."""
        try:
            stream = STREAMS[name]
        except KeyError:
            raise ValueError(f"Unknown random stream '{name}', expected one of {sorted(STREAMS)}")
        ss = np.random.SeedSequence(entropy=self._seed, spawn_key=self._path + (stream,) + tuple(int(k) for k in keys))
        return np.random.Generator(np.random.Philox(ss))

    def fork(self, *keys: int) -> 'RandomStreams':
        """Child streams for an independent sub-task (a sweep grid point, a drift sample batch)."""
        return RandomStreams(self._seed, self._path + (len(STREAMS),) + tuple(int(k) for k in keys))

    def __repr__(self):
        return f"RandomStreams(seed={self._seed}, path={self._path})"


class SimulationStreams:
    """The three generators a simulation consumes, bound once per run."""
    __slots__ = ('channel', 'arrivals', 'tie')

    def __init__(self, streams: RandomStreams):
        self.channel = streams.generator("channel")
        self.arrivals = streams.generator("arrivals")
        self.tie = streams.generator("tie")

    @classmethod
    def from_seed(cls, seed: int) -> 'SimulationStreams':
        return cls(RandomStreams(seed))
