from dataclasses import dataclass
from typing import Literal

import numpy as np

Side = Literal["plus", "minus", "both"]


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing abscissas on one or both rays."""

    abscissas: np.ndarray
    side: Side

    def __post_init__(self):
        x = np.asarray(self.abscissas, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("grid needs at least two abscissas")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid abscissas must be strictly increasing")
        object.__setattr__(self, "abscissas", x)

    @classmethod
    def geometric(cls, r0: float, xmax: float, n: int, side: Side = "both") -> "Grid":
        """n points per side, geometrically spaced between r0 and xmax."""
        if not 0 < r0 < xmax:
            raise ValueError(f"need 0 < r0 < xmax, got {r0}, {xmax}")
        ray = np.geomspace(r0, xmax, n)
        if side == "plus":
            return cls(ray, "plus")
        if side == "minus":
            return cls(-ray[::-1], "minus")
        return cls(np.concatenate([-ray[::-1], ray]), "both")

    @classmethod
    def line(cls, a: float, b: float, n: int) -> "Grid":
        return cls(np.linspace(a, b, n), "both")

    def __len__(self) -> int:
        return self.abscissas.size

    @property
    def plus(self) -> np.ndarray:
        return self.abscissas[self.abscissas > 0]

    @property
    def minus(self) -> np.ndarray:
        return self.abscissas[self.abscissas < 0]

    def ray(self, direction: str) -> np.ndarray:
        """Points on the ray of `direction`, ordered outward."""
        return self.plus if direction == "up" else self.minus[::-1]

    def points_per_side(self) -> int:
        counts = [c for c in (self.plus.size, self.minus.size) if c]
        return min(counts) if counts else 0
