"""Input/output shifts that leave the winning predicate invariant.

Four generator families, each of order d: shifting one coordinate of Alice's
or Bob's input together with a compensating shift of the correct outcome.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..game import winning_answer


@dataclass(frozen=True)
class SymmetryAction:
    """One generator evaluated at a power: maps (x, y, z, c) -> (x', y', z, c')."""

    name: str
    power: int
    d: int

    def apply(self, x: tuple[int, int], y: tuple[int, int], z: int, c: int):
        d, t = self.d, self.power
        x0, x1 = x
        y0, y1 = y
        if self.name == "sym1":
            x0 = (x0 + t) % d
            c = (c + t) % d if z == d else (c - 2 * z * t) % d
        elif self.name == "sym2":
            x1 = (x1 + t) % d
            c = c if z == d else (c + t) % d
        elif self.name == "sym3":
            y0 = (y0 + t) % d
            c = (c - t) % d if z == d else (c + 2 * z * t) % d
        elif self.name == "sym4":
            y1 = (y1 + t) % d
            c = c if z == d else (c + t) % d
        else:
            raise ValueError(f"unknown generator {self.name!r}")
        return (x0, x1), (y0, y1), z, c


def symmetry_actions(d: int) -> list[SymmetryAction]:
    """All powers 0..d-1 of the four generators."""
    return [SymmetryAction(name, t, d) for name in ("sym1", "sym2", "sym3", "sym4") for t in range(d)]


def preserves_winning_predicate(action: SymmetryAction) -> bool:
    """Whether the action maps winning tuples to winning tuples everywhere."""
    d = action.d
    for x0 in range(d):
        for x1 in range(d):
            for y0 in range(d):
                for y1 in range(d):
                    for z in range(d + 1):
                        w = winning_answer(d, (x0, x1), (y0, y1), z)
                        x2, y2, z2, c2 = action.apply((x0, x1), (y0, y1), z, w)
                        if winning_answer(d, x2, y2, z2) != c2:
                            return False
    return True
