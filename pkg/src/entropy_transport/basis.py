"""Fixed particle-number Fock basis for a spinful 1D chain.

Sites are numbered ``1..L`` in the public API.  Internally site ``j`` lives on
bit ``j - 1`` of the up- and down-occupation masks.  Fermionic modes are
ordered site-major, ``(1, up), (1, down), (2, up), (2, down), ...``, and a
basis state is the ascending-mode product of creation operators acting on the
vacuum.  Under this ordering any trailing block of sites is a trailing block
of modes, so the Schmidt split across such a block carries no extra signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

UP = 0
DOWN = 1

MAX_SITES = 32

_SPIN_NAMES = {"u": UP, "up": UP, "d": DOWN, "down": DOWN, "dn": DOWN}


def parse_spin(value) -> int:
    """Accept ``0``/``1`` or ``'u'``/``'d'`` style spin labels."""
    if isinstance(value, str):
        try:
            return _SPIN_NAMES[value.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown spin label {value!r}") from None
    if value in (UP, DOWN):
        return int(value)
    raise ValueError(f"unknown spin label {value!r}")


def mode_index(site: int, spin: int) -> int:
    """Zero-based site-major mode index of ``(site, spin)``."""
    return 2 * (site - 1) + spin


@dataclass(frozen=True)
class SystemSpec:
    """Physical setup of one tunneling run.

    Energies are in units of ``J`` and times in units of ``1/J``.  ``barrier``
    holds the potentials on the two central sites ``L/2`` and ``L/2 + 1``.
    """

    L: int = 4
    n_up: int = 1
    n_down: int = 1
    J: float = 1.0
    U: float = 2.0
    barrier: tuple[float, float] = (2.5, 5.0)
    t_max: float = 100.0
    n_samples: int = 2001
    initial_placement: tuple[tuple[int, int], ...] = ((1, UP), (1, DOWN))

    def __post_init__(self):
        placement = tuple((int(s), parse_spin(sp)) for s, sp in self.initial_placement)
        object.__setattr__(self, "initial_placement", placement)
        object.__setattr__(self, "barrier", tuple(float(v) for v in self.barrier))

        if self.L % 2 or self.L < 4:
            raise ValueError(f"L must be even and >= 4, got {self.L}")
        if self.L > MAX_SITES:
            raise ValueError(f"L must be <= {MAX_SITES}, got {self.L}")
        if self.n_up < 0 or self.n_down < 0 or not 1 <= self.n_up + self.n_down <= 2:
            raise ValueError(
                f"need 1 <= n_up + n_down <= 2, got ({self.n_up}, {self.n_down})"
            )
        if len(self.barrier) != 2 or min(self.barrier) < 0:
            raise ValueError(f"barrier must be two nonnegative potentials, got {self.barrier}")
        if self.h <= 0:
            raise ValueError("barrier height h must be positive")
        if self.J < 0:
            raise ValueError(f"J must be nonnegative, got {self.J}")
        if self.t_max < 0 or self.n_samples < 1:
            raise ValueError("need t_max >= 0 and n_samples >= 1")

        spins = [sp for _, sp in placement]
        if spins.count(UP) != self.n_up or spins.count(DOWN) != self.n_down:
            raise ValueError(
                f"initial_placement {placement} does not match "
                f"(n_up, n_down) = ({self.n_up}, {self.n_down})"
            )
        if len(set(placement)) != len(placement):
            raise ValueError(f"Pauli exclusion violated by initial_placement {placement}")
        for site, _ in placement:
            if not 1 <= site < self.L // 2:
                raise ValueError(
                    f"initial site {site} is not pre-barrier (must be < {self.L // 2})"
                )

    @property
    def h(self) -> float:
        return max(self.barrier)

    @property
    def barrier_sites(self) -> tuple[int, int]:
        return (self.L // 2, self.L // 2 + 1)

    def potentials(self) -> np.ndarray:
        """On-site potential per site (index 0 is site 1)."""
        v = np.zeros(self.L)
        v[self.L // 2 - 1] = self.barrier[0]
        v[self.L // 2] = self.barrier[1]
        return v

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_samples)

    @property
    def tunneling_only(self) -> bool:
        """True when ``U < h``, so transport cannot go over the barrier."""
        return self.U < self.h


def _masks(L: int, n: int) -> list[int]:
    return sorted(sum(1 << b for b in bits) for bits in combinations(range(L), n))


@dataclass(frozen=True)
class FockBasis:
    """All ``(up_mask, down_mask)`` patterns with fixed ``(n_up, n_down)``.

    States are sorted lexicographically by ``(up_mask, down_mask)``.
    """

    L: int
    n_up: int
    n_down: int
    states: tuple[tuple[int, int], ...] = field(init=False, repr=False)
    index_of: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 1 <= self.L <= MAX_SITES:
            raise ValueError(f"L must be in [1, {MAX_SITES}], got {self.L}")
        if not 0 <= self.n_up <= self.L or not 0 <= self.n_down <= self.L:
            raise ValueError(
                f"particle numbers ({self.n_up}, {self.n_down}) do not fit on {self.L} sites"
            )
        ups = _masks(self.L, self.n_up)
        downs = _masks(self.L, self.n_down)
        states = tuple((u, d) for u in ups for d in downs)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "index_of", {s: i for i, s in enumerate(states)})

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def up_masks(self) -> np.ndarray:
        return np.array([u for u, _ in self.states], dtype=np.uint64)

    @property
    def down_masks(self) -> np.ndarray:
        return np.array([d for _, d in self.states], dtype=np.uint64)

    def occupations(self) -> np.ndarray:
        """Integer array ``(dimension, L, 2)`` of mode occupations."""
        occ = np.zeros((self.dimension, self.L, 2), dtype=np.int64)
        bits = np.arange(self.L, dtype=np.uint64)
        occ[:, :, UP] = (self.up_masks[:, None] >> bits) & np.uint64(1)
        occ[:, :, DOWN] = (self.down_masks[:, None] >> bits) & np.uint64(1)
        return occ

    def lookup(self, up_mask: int, down_mask: int) -> int:
        return self.index_of[(up_mask, down_mask)]

    def index_of_placement(self, placement) -> int:
        """Basis index of the product state occupying the given ``(site, spin)`` modes."""
        masks = [0, 0]
        for site, spin in placement:
            spin = parse_spin(spin)
            if not 1 <= site <= self.L:
                raise ValueError(f"site {site} outside 1..{self.L}")
            bit = 1 << (site - 1)
            if masks[spin] & bit:
                raise ValueError(f"Pauli exclusion: mode ({site}, {spin}) occupied twice")
            masks[spin] |= bit
        try:
            return self.index_of[(masks[0], masks[1])]
        except KeyError:
            raise ValueError(
                f"placement {list(placement)} is not in the ({self.n_up}, {self.n_down}) sector"
            ) from None


def build_basis(spec: SystemSpec) -> FockBasis:
    return FockBasis(spec.L, spec.n_up, spec.n_down)


def hop_element(basis: FockBasis, from_index: int, site: int, spin: int, direction: str):
    """Apply a nearest-neighbour hop between ``site`` and ``site + 1``.

    ``direction='right'`` applies ``c†_{j+1,s} c_{j,s}`` and ``'left'`` applies
    ``c†_{j,s} c_{j+1,s}``.

    Returns
    -------
    (int, int) or None
        Target basis index and fermionic sign, or ``None`` if the source mode
        is empty or the target mode is already occupied.
    """
    if not 1 <= site <= basis.L - 1:
        raise ValueError(f"hop site must be in 1..{basis.L - 1}, got {site}")
    spin = parse_spin(spin)
    if direction == "right":
        src, dst = site, site + 1
    elif direction == "left":
        src, dst = site + 1, site
    else:
        raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")

    masks = list(basis.states[from_index])
    m = masks[spin]
    if not (m >> (src - 1)) & 1 or (m >> (dst - 1)) & 1:
        return None
    masks[spin] = m ^ (1 << (src - 1)) ^ (1 << (dst - 1))

    # Exactly one mode sits between (j, s) and (j+1, s) in site-major order:
    # (j, down) when s is up, (j+1, up) when s is down.
    if spin == UP:
        between = (masks[DOWN] >> (site - 1)) & 1
    else:
        between = (masks[UP] >> site) & 1
    sign = -1 if between else 1
    return basis.index_of[(masks[0], masks[1])], sign
