"""Convert particle trajectories into concentration fields on the FD grid.

A particle at physical position x lands in cell floor(N * x / side); cell j
therefore covers [j*side/N, (j+1)*side/N), matching the FD convention that
value j lives at the cell spanning [j*h, (j+1)*h) of the unit square.
Counts are taken on wrapped positions (the box is periodic, as is the FD
domain) and normalized by a single maximum taken over every frame and cell
of the series, so later frames keep their decayed peaks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError
from .fd_solver import FieldSeries
from .fields import GridSpec, ScalarField, UnitScale
from .md import SimBox, Species


@dataclass(frozen=True)
class BinnedFrame:
    time_fs: float
    counts: np.ndarray | None
    concentration: ScalarField


@dataclass(frozen=True)
class BinnedSeries:
    grid: GridSpec
    frames: tuple[BinnedFrame, ...]
    normalization_max: int | None
    species: Species | None = None

    def __post_init__(self):
        sums = {int(f.counts.sum()) for f in self.frames if f.counts is not None}
        if len(sums) > 1:
            raise ValueError(f"per-frame particle count varies: {sorted(sums)}")

    @property
    def times_fs(self) -> np.ndarray:
        return np.array([f.time_fs for f in self.frames])

    @classmethod
    def from_fields(cls, times_fs, fields) -> "BinnedSeries":
        """Wrap plain concentration fields (no counts), e.g. synthetic data."""
        frames = tuple(
            BinnedFrame(time_fs=float(t), counts=None, concentration=f)
            for t, f in zip(times_fs, fields)
        )
        return cls(grid=fields[0].grid, frames=frames, normalization_max=None)


def bin_counts(positions: np.ndarray, box: SimBox, grid: GridSpec,
               species: np.ndarray | None = None,
               keep: Species | None = None) -> np.ndarray:
    """Per-cell particle counts for one frame.

    ``positions`` are wrapped coordinates in Angstroms; with ``species`` and
    ``keep`` given, only the matching particles are counted.  A coordinate
    exactly at the box side wraps to cell 0.
    """
    if grid.d != 2:
        raise ValueError("binning is defined for d=2 grids")
    if species is not None and keep is not None:
        positions = positions[np.asarray(species) == int(keep)]
    idx = np.floor(grid.n * np.asarray(positions) / box.side).astype(np.int64)
    idx %= grid.n
    counts = np.zeros((grid.n, grid.n), dtype=np.int64)
    np.add.at(counts, (idx[:, 0], idx[:, 1]), 1)
    return counts


def normalize_series(count_frames, grid: GridSpec,
                     species: Species | None = None,
                     per_frame_max: bool = False) -> BinnedSeries:
    """Scale count frames to [0, 1] concentrations.

    ``count_frames`` is a sequence of (time_fs, counts).  The default
    normalizes every frame by the single global maximum; ``per_frame_max``
    pins each frame's own peak at 1 instead (for sensitivity studies).
    """
    count_frames = list(count_frames)
    if not count_frames:
        raise ValueError("no frames to normalize")
    global_max = int(max(int(np.max(c)) for _, c in count_frames))
    if global_max == 0:
        raise ValueError("cannot normalize an all-zero series")
    frames = []
    for t, counts in count_frames:
        denom = int(np.max(counts)) if per_frame_max else global_max
        if denom == 0:
            raise ValueError(f"frame at t={t} is all zero under per-frame scaling")
        frames.append(BinnedFrame(
            time_fs=float(t),
            counts=np.asarray(counts, dtype=np.int64),
            concentration=ScalarField(grid, np.asarray(counts, dtype=np.float64) / denom),
        ))
    return BinnedSeries(grid=grid, frames=tuple(frames),
                        normalization_max=global_max, species=species)


def bin_trajectory(traj, grid: GridSpec, species: Species = Species.AR,
                   per_frame_max: bool = False) -> BinnedSeries:
    """Bin every frame of a trajectory for one species."""
    box = SimBox(side=traj.box_side)
    count_frames = [
        (fr.time_fs, bin_counts(fr.positions, box, grid, fr.species, species))
        for fr in traj.frames
    ]
    return normalize_series(count_frames, grid, species=species,
                            per_frame_max=per_frame_max)


def align_series(binned: BinnedSeries, fd: FieldSeries, scale: UnitScale,
                 tolerance_fraction: float = 0.5):
    """Pair binned MD frames with FD frames at the same physical times.

    Returns a list of (concentration, fd_frame_index) pairs.  Frame counts
    must match exactly and each time difference must stay within
    ``tolerance_fraction`` of the FD time step.
    """
    if binned.grid != fd.config.grid:
        raise AlignmentError(
            f"grid mismatch: binned N={binned.grid.n}, FD N={fd.config.grid.n}"
        )
    if len(binned.frames) != len(fd.frames):
        raise AlignmentError(
            f"frame count mismatch: {len(binned.frames)} binned vs "
            f"{len(fd.frames)} FD frames"
        )
    k_fs = fd.config.k * scale.time_unit_fs
    fd_times_fs = fd.times * scale.time_unit_fs
    pairs = []
    for i, (bf, t_fd) in enumerate(zip(binned.frames, fd_times_fs)):
        if abs(bf.time_fs - t_fd) > tolerance_fraction * k_fs:
            raise AlignmentError(
                f"frame {i}: binned time {bf.time_fs} fs vs FD time {t_fd} fs "
                f"differ by more than {tolerance_fraction} * k"
            )
        pairs.append((bf.concentration, i))
    return pairs
