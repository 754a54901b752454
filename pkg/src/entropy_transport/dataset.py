"""Trajectory generation, parameter sweeps and CSV persistence."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .basis import DOWN, UP, SystemSpec, build_basis
from .evolution import eigendecompose, energy_expectation, evolve, initial_state
from .hamiltonian import build_hamiltonian
from .observables import Bipartition, entanglement_entropy, region_density

log = logging.getLogger(__name__)

COLUMNS = ("U", "h", "L", "t", "n_A", "S_A")
HEADER = ",".join(COLUMNS)
WORKERS_ENV = "ENTROPY_TRANSPORT_WORKERS"
DEFAULT_BARRIER_RATIO = 0.5


class DatasetFormatError(ValueError):
    pass


@dataclass
class Trajectory:
    spec: SystemSpec
    t: np.ndarray
    n_A: np.ndarray
    S_A: np.ndarray
    norm_drift: float = 0.0
    energy_drift: float = 0.0

    def __len__(self):
        return self.t.size


def run_trajectory(spec: SystemSpec) -> Trajectory:
    """Evolve the initial product state and record ``(t, n_A, S_A)`` on the time grid."""
    basis = build_basis(spec)
    H = build_hamiltonian(basis, spec)
    eig = eigendecompose(H)
    psi0 = initial_state(basis, spec)
    times = spec.times()
    psis = evolve(psi0, eig, times)

    part = Bipartition.post_barrier(spec.L)
    n_A = region_density(psis, basis, part.A_sites)
    S_A = entanglement_entropy(psis, basis, part)

    norms = np.linalg.norm(psis, axis=1)
    energies = energy_expectation(psis, H)
    return Trajectory(
        spec,
        times,
        n_A,
        S_A,
        norm_drift=float(np.abs(norms - 1.0).max()),
        energy_drift=float(np.abs(energies - energies[0]).max()),
    )


def format_placement(placement) -> str:
    return ",".join(f"{site}{'u' if spin == UP else 'd'}" for site, spin in placement)


def parse_placement(text: str) -> tuple[tuple[int, int], ...]:
    """Parse ``"1u,1d"`` into ``((1, UP), (1, DOWN))``."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        site, spin = item[:-1], item[-1].lower()
        if spin not in "ud" or not site.isdigit():
            raise ValueError(f"bad placement entry {item!r}; expected e.g. '1u'")
        out.append((int(site), UP if spin == "u" else DOWN))
    return tuple(out)


@dataclass
class TrajectoryDataset:
    """Rows of ``(U, h, L, t, n_A, S_A)``, grouped by ``(U, h, L)`` in file order."""

    rows: np.ndarray = field(default_factory=lambda: np.empty((0, 6)))
    metadata: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, 6)

    def __len__(self):
        return self.rows.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TrajectoryDataset):
            return NotImplemented
        return (
            self.rows.shape == other.rows.shape
            and np.array_equal(self.rows, other.rows)
            and self.metadata == other.metadata
            and [tuple(s) for s in self.skipped] == [tuple(s) for s in other.skipped]
        )

    @property
    def U(self):
        return self.rows[:, 0]

    @property
    def h(self):
        return self.rows[:, 1]

    @property
    def t(self):
        return self.rows[:, 3]

    @property
    def n_A(self):
        return self.rows[:, 4]

    @property
    def S_A(self):
        return self.rows[:, 5]

    def group_keys(self) -> list[tuple[float, float, int]]:
        keys = []
        seen = set()
        for U, h, L in self.rows[:, :3]:
            key = (float(U), float(h), int(L))
            if key not in seen:
                seen.add(key)
                keys.append(key)
        return keys

    def group_mask(self, key) -> np.ndarray:
        U, h, L = key
        r = self.rows
        return (r[:, 0] == U) & (r[:, 1] == h) & (r[:, 2] == L)

    def group(self, key) -> np.ndarray:
        return self.rows[self.group_mask(key)]

    @classmethod
    def from_trajectories(cls, trajectories, metadata=None, skipped=()):
        blocks = [
            np.column_stack(
                [
                    np.full(len(tr), tr.spec.U),
                    np.full(len(tr), tr.spec.h),
                    np.full(len(tr), tr.spec.L),
                    tr.t,
                    tr.n_A,
                    tr.S_A,
                ]
            )
            for tr in trajectories
        ]
        rows = np.vstack(blocks) if blocks else np.empty((0, 6))
        return cls(rows, dict(metadata or {}), list(skipped))


def default_workers() -> int:
    return int(os.environ.get(WORKERS_ENV, "1"))


def sweep(
    U_grid,
    h_grid,
    L: int,
    *,
    template: SystemSpec | None = None,
    barrier_ratio: float = DEFAULT_BARRIER_RATIO,
    tunneling_only: bool = True,
    workers: int | None = None,
) -> TrajectoryDataset:
    """Run one trajectory per ``(U, h)`` pair.

    The barrier on sites ``L/2, L/2+1`` is ``(barrier_ratio * h, h)``.  With
    ``tunneling_only`` the pairs with ``U >= h`` are skipped and recorded.
    """
    U_grid = [float(u) for u in U_grid]
    h_grid = [float(h) for h in h_grid]
    if not U_grid or not h_grid:
        raise ValueError("sweep grids must be nonempty")
    template = template or SystemSpec(L=L)
    workers = default_workers() if workers is None else workers

    specs, skipped = [], []
    for U in U_grid:
        for h in h_grid:
            if tunneling_only and U >= h:
                log.info("skipping U=%g h=%g: U >= h in tunneling-only mode", U, h)
                skipped.append((U, h, L))
                continue
            specs.append(replace(template, L=L, U=U, barrier=(barrier_ratio * h, h)))

    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(run_trajectory, specs))
    else:
        trajectories = [run_trajectory(s) for s in specs]

    metadata = {
        "J": repr(template.J),
        "barrier_ratio": repr(float(barrier_ratio)),
        "initial_placement": format_placement(template.initial_placement),
        "n_down": str(template.n_down),
        "n_samples": str(template.n_samples),
        "n_up": str(template.n_up),
        "t_max": repr(float(template.t_max)),
        "tunneling_only": str(bool(tunneling_only)).lower(),
    }
    return TrajectoryDataset.from_trajectories(trajectories, metadata, skipped)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save(ds: TrajectoryDataset, path, extra_metadata=None) -> None:
    meta = dict(ds.metadata)
    meta.update(extra_metadata or {})
    meta["version"] = __version__
    meta["skipped"] = ";".join(f"{_fmt(U)}:{_fmt(h)}:{int(L)}" for U, h, L in ds.skipped)
    lines = ["# entropy_transport trajectory dataset"]
    lines += [f"# {k}={meta[k]}" for k in sorted(meta)]
    lines.append(HEADER)
    for U, h, L, t, n, s in ds.rows:
        lines.append(",".join([_fmt(U), _fmt(h), str(int(L)), _fmt(t), _fmt(n), _fmt(s)]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load(path) -> TrajectoryDataset:
    """Read a dataset written by :func:`save`, validating every row."""
    metadata, skipped, rows = {}, [], []
    header_seen = False
    last = {}
    finished = set()
    current = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not header_seen:
                if line.startswith("#"):
                    body = line[1:].strip()
                    if "=" in body:
                        k, v = body.split("=", 1)
                        metadata[k.strip()] = v.strip()
                    continue
                if line.strip() != HEADER:
                    raise DatasetFormatError(
                        f"{path}:{lineno}: malformed header {line!r}, expected {HEADER!r}"
                    )
                header_seen = True
                continue
            if not line.strip():
                continue
            fields = line.split(",")
            if len(fields) != 6:
                raise DatasetFormatError(f"{path}:{lineno}: expected 6 fields, got {len(fields)}")
            try:
                values = [float(f) for f in fields]
            except ValueError:
                raise DatasetFormatError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
            if not all(math.isfinite(v) for v in values):
                raise DatasetFormatError(f"{path}:{lineno}: NaN or infinite field in {line!r}")
            if values[2] != int(values[2]):
                raise DatasetFormatError(f"{path}:{lineno}: L must be an integer")
            key = tuple(values[:3])
            if key != current:
                if key in finished:
                    raise DatasetFormatError(f"{path}:{lineno}: group {key} is not contiguous")
                if current is not None:
                    finished.add(current)
                current = key
            elif values[3] <= last[key]:
                raise DatasetFormatError(
                    f"{path}:{lineno}: time {fields[3]} is not strictly increasing in group {key}"
                )
            last[key] = values[3]
            rows.append(values)
    if not header_seen:
        raise DatasetFormatError(f"{path}: missing header line {HEADER!r}")

    skipped_text = metadata.pop("skipped", "")
    for item in filter(None, skipped_text.split(";")):
        U, h, L = item.split(":")
        skipped.append((float(U), float(h), int(L)))
    metadata.pop("version", None)
    return TrajectoryDataset(np.array(rows, dtype=float).reshape(-1, 6), metadata, skipped)
