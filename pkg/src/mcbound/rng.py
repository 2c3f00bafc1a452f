"""Counter-based random streams.

Every uniform is a pure function of ``(seed, stream_id, purpose, step, index)``,
so a draw can be regenerated in any order and any chunking.  Backward
iteration replays step ``n`` first, coupled chains share draws exactly, and
splitting replicas across workers gives bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53

# Counter word 2 separates independent uses of one stream.
PURPOSE_MAP = 0
PURPOSE_STATIONARY = 1
PURPOSE_AUX = 2


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by ``(seed, stream_id)``.

    The underlying generator is Philox4x64.  Step ``t`` of the stream owns
    counter word 1, the replica offset lives in counter word 0, so the draws
    for replica ``i`` at step ``t`` never depend on how many replicas are
    simulated alongside it.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def _bitgen(self, block: int, step: int, purpose: int) -> np.random.Philox:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        counter = np.array([block, step, purpose, 0], dtype=np.uint64)
        return np.random.Philox(key=key, counter=counter)

    def raw(self, step: int, count: int, dim: int = 1, offset: int = 0,
            purpose: int = PURPOSE_MAP) -> np.ndarray:
        """Raw 64-bit words for replicas ``offset .. offset+count-1``."""
        if count < 0 or dim < 1 or offset < 0 or step < 0:
            raise ValueError("count, offset and step must be >= 0 and dim >= 1")
        start = offset * dim
        block, skip = divmod(start, 4)
        words = self._bitgen(block, step, purpose).random_raw(skip + count * dim)
        return np.asarray(words[skip:], dtype=np.uint64).reshape(count, dim)

    def uniforms(self, step: int, count: int, dim: int = 1, offset: int = 0,
                 purpose: int = PURPOSE_MAP) -> np.ndarray:
        """Uniforms on the open interval (0, 1), shape ``(count, dim)``."""
        words = self.raw(step, count, dim, offset, purpose)
        return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53

    def child(self, key: int) -> "RngStream":
        """A statistically independent stream derived from this one."""
        ss = np.random.SeedSequence([int(self.seed), int(self.stream_id), int(key)])
        return RngStream(self.seed, int(ss.generate_state(1, np.uint64)[0]))

    def generator(self, purpose: int = PURPOSE_AUX) -> np.random.Generator:
        """A sequential numpy Generator for auxiliary work (bootstraps, shuffles)."""
        return np.random.Generator(self._bitgen(0, 0, purpose + 16))

    def as_dict(self) -> dict:
        return {"seed": int(self.seed), "stream_id": int(self.stream_id)}
