"""Buffer/gap bookkeeping for reverse experience replay."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import LayoutError


@dataclass(frozen=True)
class BufferLayout:
    """Blocks of ``S = B + u`` consecutive samples; ``N = T // S`` of them.

    Sample ``j`` of buffer ``t`` is ``X[t*S + j]``.  The trailing
    ``T mod S`` samples are never used.
    """

    buffer_size: int
    gap: int
    n_buffers: int

    def __post_init__(self):
        if self.buffer_size < 1:
            raise LayoutError("buffer size must be >= 1")
        if self.gap < 0:
            raise LayoutError("gap must be >= 0")
        if self.n_buffers < 1:
            raise LayoutError("layout needs at least one buffer")

    @classmethod
    def for_horizon(cls, horizon: int, buffer_size: int, gap: int = 0) -> "BufferLayout":
        block = buffer_size + gap
        if block < 1:
            raise LayoutError("buffer size must be >= 1")
        n = horizon // block
        if n < 1:
            raise LayoutError(f"horizon {horizon} shorter than one block of {block}")
        return cls(buffer_size, gap, n)

    @property
    def block(self) -> int:
        return self.buffer_size + self.gap

    @property
    def used_horizon(self) -> int:
        """Largest stream index touched (the last buffer's lookahead target)."""
        return self.n_buffers * self.block

    @property
    def gap_ok(self) -> bool:
        return self.buffer_size >= 10 * self.gap

    def index(self, t: int, j: int) -> int:
        return t * self.block + j

    def reversed_index(self, t: int, i: int) -> int:
        return t * self.block + (self.block - 1) - i

    def pairs(self, t: int) -> list[tuple[int, int]]:
        """(input, target) stream indices of buffer ``t`` in processing order."""
        s = self.block
        return [(t * s + j, t * s + j + 1) for j in range(s - 1, self.gap - 1, -1)]

    def check_horizon(self, horizon: int) -> None:
        if self.used_horizon > horizon:
            raise LayoutError(
                f"layout needs {self.used_horizon + 1} samples, trajectory has {horizon + 1}")
