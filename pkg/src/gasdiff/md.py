"""2D Lennard-Jones molecular dynamics of argon/helium mixtures.

Works in the g/mol, Angstrom, femtosecond, kcal/mol unit system throughout.
Newton's equations are integrated with velocity Verlet (the explicit member
of the Stormer-Verlet family) in a periodic square box under the minimum
image convention.  Pair interactions are truncated Lennard-Jones with
per-species-pair well depth and size; neighbor search uses a cell list
rebuilt every step with cell edge >= the cutoff.

The one non-obvious constant is the acceleration conversion: forces come
out in kcal/(mol A) and masses are in g/mol, so F/m picks up a factor of
4.184e-4 to land in A/fs^2 (KCAL_PER_MOL_TO_MD in fields).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import GasdiffError, InstabilityError
from .fields import KCAL_PER_MOL_TO_MD, A2_PER_FS_IN_CM2_PER_S

#: integration aborts once any particle exceeds this speed (A/fs).
VELOCITY_LIMIT = 1.0

#: pairs closer than this are treated as a setup error (A).
COINCIDENT_DISTANCE = 1.0e-6


class Species(enum.IntEnum):
    HE = 0
    AR = 1

    @property
    def mass(self) -> float:
        return float(MASS_G_MOL[self.value])

    @property
    def label(self) -> str:
        return SPECIES_LABELS[self.value]


MASS_G_MOL = np.array([4.003, 39.948])
SPECIES_LABELS = {0: "He", 1: "Ar"}
SPECIES_BY_LABEL = {"He": Species.HE, "Ar": Species.AR}

#: cutoff shared by all pair interactions (A).
LJ_CUTOFF = 20.0


@dataclass(frozen=True)
class LJPairParams:
    epsilon: float  # kcal/mol
    sigma: float    # A
    r_cut: float = LJ_CUTOFF

    def __post_init__(self):
        if self.epsilon <= 0 or self.sigma <= 0 or self.r_cut <= 0:
            raise ValueError("Lennard-Jones parameters must be positive")
        if self.r_cut <= self.sigma:
            raise ValueError("cutoff must exceed sigma")


# Well depths and sizes per species pair; the mixed values equal the
# geometric mean of the pure ones to the table's precision.
_PAIR_TABLE = {
    (Species.HE, Species.HE): LJPairParams(epsilon=0.0196, sigma=2.50),
    (Species.HE, Species.AR): LJPairParams(epsilon=0.0700, sigma=2.92),
    (Species.AR, Species.AR): LJPairParams(epsilon=0.2498, sigma=3.40),
}

_EPS_TABLE = np.zeros((2, 2))
_SIG_TABLE = np.zeros((2, 2))
for (_a, _b), _p in _PAIR_TABLE.items():
    _EPS_TABLE[_a, _b] = _EPS_TABLE[_b, _a] = _p.epsilon
    _SIG_TABLE[_a, _b] = _SIG_TABLE[_b, _a] = _p.sigma


def pair_params(a: Species, b: Species) -> LJPairParams:
    key = (a, b) if (a, b) in _PAIR_TABLE else (b, a)
    return _PAIR_TABLE[key]


@dataclass(frozen=True)
class SimBox:
    """Periodic square box; side must exceed twice the interaction cutoff."""

    side: float = 5.0e4  # A

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError("box side must be positive")
        if self.side <= 2.0 * LJ_CUTOFF:
            raise ValueError(
                f"box side {self.side} too small for minimum image at cutoff {LJ_CUTOFF}"
            )


@dataclass(frozen=True)
class MDConfig:
    n_he: int = 30000
    n_ar: int = 30000
    dt: float = 5.0           # fs
    temperature: float = 300.0  # K
    kb: float = 0.001987      # kcal/(mol K)
    seed: int = 0
    sample_stride: int = 1000

    def __post_init__(self):
        if self.dt <= 0 or self.temperature <= 0:
            raise ValueError("time step and temperature must be positive")
        if self.n_he < 0 or self.n_ar < 0:
            raise ValueError("particle counts must be nonnegative")
        if self.sample_stride < 1:
            raise ValueError("sample stride must be >= 1")


@dataclass
class ParticleState:
    """Positions are wrapped into [0, side); unwrapped copies accumulate the
    true displacement for mean-squared-displacement analysis."""

    positions: np.ndarray
    unwrapped: np.ndarray
    velocities: np.ndarray
    species: np.ndarray
    time: float = 0.0

    @property
    def n_particles(self) -> int:
        return len(self.positions)


def lj_potential(r: float, p: LJPairParams) -> float:
    """Truncated 12-6 potential, kcal/mol."""
    if r <= 0:
        raise ValueError("interparticle distance must be positive")
    if r >= p.r_cut:
        return 0.0
    sr6 = (p.sigma / r) ** 6
    return 4.0 * p.epsilon * (sr6 * sr6 - sr6)


def lj_force_pair(r_vec: np.ndarray, p: LJPairParams) -> np.ndarray:
    """Force on the particle displaced by r_vec from its partner.

    Positive along r_vec means repulsion.  The magnitude is
    (24 eps / r) * (2 (sigma/r)^12 - (sigma/r)^6); identically zero at and
    beyond the cutoff.
    """
    r_vec = np.asarray(r_vec, dtype=np.float64)
    r2 = float(np.dot(r_vec, r_vec))
    r = np.sqrt(r2)
    if r < COINCIDENT_DISTANCE:
        raise GasdiffError(f"coincident particles (separation {r:.2e} A)")
    if r >= p.r_cut:
        return np.zeros_like(r_vec)
    sr6 = (p.sigma / r) ** 6
    return (24.0 * p.epsilon / r2) * (2.0 * sr6 * sr6 - sr6) * r_vec


def minimum_image(dx: np.ndarray, box: SimBox) -> np.ndarray:
    """Shift displacement components by multiples of the side into
    [-side/2, side/2)."""
    dx = np.asarray(dx, dtype=np.float64)
    return dx - box.side * np.floor(dx / box.side + 0.5)


def _wrap(x: np.ndarray, side: float) -> np.ndarray:
    w = np.mod(x, side)
    # float mod of a tiny negative can land exactly on side
    w[w >= side] -= side
    return w


def _candidate_pairs(pos: np.ndarray, side: float, r_cut: float):
    """Index pairs (i, j) covering every pair at separation < r_cut.

    Cell list with edge >= r_cut; each unordered cell pair is visited once
    (self plus four forward neighbors).  Falls back to all pairs when the
    box is too small for at least 3 cells per axis.
    """
    n = len(pos)
    n_side = int(side // r_cut)
    if n < 2:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    if n_side < 3:
        return np.triu_indices(n, k=1)

    cell_len = side / n_side
    coords = np.clip((pos // cell_len).astype(np.int64), 0, n_side - 1)
    cid = coords[:, 0] * n_side + coords[:, 1]
    order = np.argsort(cid, kind="stable")
    sorted_cid = cid[order]
    cells, start, counts = np.unique(sorted_cid, return_index=True, return_counts=True)
    n_occ = len(cells)
    kmax = int(counts.max())

    members = np.full((n_occ, kmax), -1, dtype=np.int64)
    rows = np.repeat(np.arange(n_occ), counts)
    rank = np.arange(n) - np.repeat(start, counts)
    members[rows, rank] = order
    valid = members >= 0

    out_i: list[np.ndarray] = []
    out_j: list[np.ndarray] = []

    # pairs inside one cell: ranks fill from 0, so slot b valid implies a<b valid
    for b in range(1, kmax):
        occupied = valid[:, b]
        for a in range(b):
            out_i.append(members[occupied, a])
            out_j.append(members[occupied, b])

    cx, cy = cells // n_side, cells % n_side
    for dx, dy in ((0, 1), (1, 0), (1, 1), (1, n_side - 1)):
        ncid = ((cx + dx) % n_side) * n_side + (cy + dy) % n_side
        loc = np.searchsorted(cells, ncid)
        loc_safe = np.minimum(loc, n_occ - 1)
        hit = cells[loc_safe] == ncid
        src = np.nonzero(hit)[0]
        dst = loc_safe[hit]
        for a in range(kmax):
            sa = src[valid[src, a]]
            da = dst[valid[src, a]]
            if sa.size == 0:
                continue
            for b in range(kmax):
                sel = valid[da, b]
                out_i.append(members[sa[sel], a])
                out_j.append(members[da[sel], b])

    if not out_i:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(out_i), np.concatenate(out_j)


def _pair_interactions(pos, species, box, idx_i, idx_j):
    """Forces and potential for given candidate pairs, cutoff applied."""
    d = minimum_image(pos[idx_i] - pos[idx_j], box)
    r2 = np.einsum("ij,ij->i", d, d)
    if np.any(r2 < COINCIDENT_DISTANCE**2):
        k = int(np.argmin(r2))
        raise GasdiffError(
            f"coincident particles {idx_i[k]} and {idx_j[k]} "
            f"(separation {np.sqrt(r2[k]):.2e} A)"
        )
    within = r2 < LJ_CUTOFF**2
    idx_i, idx_j, d, r2 = idx_i[within], idx_j[within], d[within], r2[within]

    si, sj = species[idx_i], species[idx_j]
    eps = _EPS_TABLE[si, sj]
    sig = _SIG_TABLE[si, sj]
    sr2 = sig * sig / r2
    sr6 = sr2 * sr2 * sr2
    sr12 = sr6 * sr6

    forces = np.zeros_like(pos)
    fvec = ((24.0 * eps / r2) * (2.0 * sr12 - sr6))[:, None] * d
    np.add.at(forces, idx_i, fvec)
    np.add.at(forces, idx_j, -fvec)
    potential = float(np.sum(4.0 * eps * (sr12 - sr6)))
    return forces, potential


def compute_forces(state: ParticleState, box: SimBox):
    """Total force on each particle and the total potential energy.

    Pairwise sums are accumulated antisymmetrically, so the net force is
    zero to roundoff.
    """
    idx_i, idx_j = _candidate_pairs(state.positions, box.side, LJ_CUTOFF)
    return _pair_interactions(state.positions, state.species, box, idx_i, idx_j)


def compute_forces_brute(state: ParticleState, box: SimBox):
    """All-pairs O(n^2) reference path; used for small boxes and checks."""
    idx_i, idx_j = np.triu_indices(state.n_particles, k=1)
    return _pair_interactions(state.positions, state.species, box,
                              idx_i.astype(np.int64), idx_j.astype(np.int64))


def kinetic_energy(state: ParticleState) -> float:
    """Total kinetic energy in kcal/mol."""
    m = MASS_G_MOL[state.species]
    v2 = np.einsum("ij,ij->i", state.velocities, state.velocities)
    return float(0.5 * np.sum(m * v2) / KCAL_PER_MOL_TO_MD)


def maxwell_boltzmann_velocities(species, temperature, kb, rng) -> np.ndarray:
    """Per-component Gaussian with variance kB T / m, in A/fs."""
    m = MASS_G_MOL[species]
    sigma_v = np.sqrt(kb * temperature / m * KCAL_PER_MOL_TO_MD)
    return rng.normal(0.0, 1.0, (len(species), 2)) * sigma_v[:, None]


def init_state(cfg: MDConfig, box: SimBox) -> ParticleState:
    """Helium uniform over the box, argon uniform over the centered quarter
    patch, Maxwell-Boltzmann velocities with the net drift removed.

    Uniform placement can produce overlapping pairs; any particle landing
    within 0.8 * sigma_ArAr of another is redrawn, up to 100 rounds.
    """
    rng = np.random.default_rng(cfg.seed)
    side = box.side
    species = np.concatenate([
        np.full(cfg.n_he, Species.HE, dtype=np.int64),
        np.full(cfg.n_ar, Species.AR, dtype=np.int64),
    ])

    def draw(mask):
        n = int(np.count_nonzero(mask))
        out = np.empty((n, 2))
        he = species[mask] == Species.HE
        out[he] = rng.uniform(0.0, side, (int(np.count_nonzero(he)), 2))
        out[~he] = rng.uniform(0.25 * side, 0.75 * side,
                               (int(np.count_nonzero(~he)), 2))
        return out

    positions = draw(np.ones(len(species), dtype=bool))

    min_sep = 0.8 * pair_params(Species.AR, Species.AR).sigma
    for _ in range(100):
        ii, jj = _candidate_pairs(positions, side, LJ_CUTOFF)
        d = minimum_image(positions[ii] - positions[jj], box)
        close = np.einsum("ij,ij->i", d, d) < min_sep**2
        if not np.any(close):
            break
        offenders = np.zeros(len(species), dtype=bool)
        offenders[np.maximum(ii[close], jj[close])] = True
        positions[offenders] = draw(offenders)
    else:
        raise GasdiffError("could not place particles without overlaps")

    velocities = maxwell_boltzmann_velocities(species, cfg.temperature, cfg.kb, rng)
    m = MASS_G_MOL[species]
    if len(species):
        velocities -= np.sum(m[:, None] * velocities, axis=0) / np.sum(m)

    return ParticleState(
        positions=positions,
        unwrapped=positions.copy(),
        velocities=velocities,
        species=species,
        time=0.0,
    )


def verlet_step(state: ParticleState, forces: np.ndarray, cfg: MDConfig,
                box: SimBox):
    """One velocity-Verlet step: half kick, drift, recompute, half kick.

    Returns (new_state, new_forces, potential) so the caller can reuse the
    freshly computed forces.
    """
    dt = cfg.dt
    accel = forces * (KCAL_PER_MOL_TO_MD / MASS_G_MOL[state.species])[:, None]
    v_half = state.velocities + 0.5 * dt * accel
    disp = dt * v_half
    new_state = ParticleState(
        positions=_wrap(state.positions + disp, box.side),
        unwrapped=state.unwrapped + disp,
        velocities=v_half,
        species=state.species,
        time=state.time + dt,
    )
    new_forces, potential = compute_forces(new_state, box)
    accel2 = new_forces * (KCAL_PER_MOL_TO_MD / MASS_G_MOL[state.species])[:, None]
    new_state.velocities = v_half + 0.5 * dt * accel2
    speed2 = np.einsum("ij,ij->i", new_state.velocities, new_state.velocities)
    if np.any(speed2 > VELOCITY_LIMIT**2) or np.any(np.isnan(speed2)):
        worst = int(np.argmax(speed2))
        raise InstabilityError(
            f"particle {worst} reached {np.sqrt(speed2[worst]):.3g} A/fs "
            f"at t = {new_state.time} fs; reduce dt or check the setup"
        )
    return new_state, new_forces, potential


def run(cfg: MDConfig, box: SimBox, n_steps: int):
    """NVE trajectory sampled every cfg.sample_stride steps, frame 0 included.

    Total (kinetic + potential) energy is recorded on every sampled frame.
    """
    from .trajectory_io import Frame, Trajectory

    state = init_state(cfg, box)
    forces, potential = compute_forces(state, box)
    ids = np.arange(1, state.n_particles + 1, dtype=np.int64)

    def frame(step_index):
        return Frame(
            timestep=step_index,
            time_fs=state.time,
            ids=ids.copy(),
            species=state.species.copy(),
            positions=state.positions.copy(),
            velocities=state.velocities.copy(),
            energy=kinetic_energy(state) + potential,
        )

    frames = [frame(0)]
    for n in range(1, n_steps + 1):
        state, forces, potential = verlet_step(state, forces, cfg, box)
        if n % cfg.sample_stride == 0:
            frames.append(frame(n))
    return Trajectory(
        box_side=box.side,
        units="real",
        frames=frames,
        dt=cfg.dt,
        seed=cfg.seed,
        n_he=cfg.n_he,
        n_ar=cfg.n_ar,
        has_velocities=True,
    )


@dataclass(frozen=True)
class MSDResult:
    diffusion: float        # A^2/fs
    slope: float            # A^2/fs
    intercept: float        # A^2
    r_squared: float
    n_frames: int

    @property
    def diffusion_cm2_s(self) -> float:
        return self.diffusion * A2_PER_FS_IN_CM2_PER_S


def unwrap_displacements(traj) -> np.ndarray:
    """Displacement of every particle from frame 0, shape (F, n, 2).

    Reconstructed from wrapped coordinates by accumulating minimum-image
    steps, valid as long as nothing moves more than half a box side between
    sampled frames.
    """
    box = SimBox(side=traj.box_side)
    frames = traj.frames
    disp = np.zeros((len(frames), len(frames[0].ids), 2))
    for i in range(1, len(frames)):
        delta = minimum_image(
            frames[i].positions - frames[i - 1].positions, box)
        disp[i] = disp[i - 1] + delta
    return disp


def msd_diffusion_estimate(traj, species: Species, fit_window=None,
                           use_3d_factor: bool = False) -> MSDResult:
    """Diffusion coefficient from the slope of mean squared displacement.

    Fits a straight line to MSD(t) over ``fit_window`` = (t_lo, t_hi) in fs
    (default: the whole trajectory) and divides the slope by 2d with d=2.
    ``use_3d_factor`` divides by 6 instead, reproducing the common
    three-dimensional convention.  The r_squared diagnostic exposes how
    linear the window actually was.
    """
    times = np.array([f.time_fs for f in traj.frames])
    if fit_window is None:
        sel = np.ones(len(times), dtype=bool)
    else:
        t_lo, t_hi = fit_window
        sel = (times >= t_lo) & (times <= t_hi)
    if int(np.count_nonzero(sel)) < 3:
        raise ValueError("need at least 3 trajectory frames in the fit window")

    disp = unwrap_displacements(traj)
    mask = traj.frames[0].species == int(species)
    if not np.any(mask):
        raise ValueError(f"trajectory contains no {species.label} particles")
    sq = np.einsum("fnd,fnd->fn", disp[:, mask, :], disp[:, mask, :])
    msd = sq.mean(axis=1)

    t, y = times[sel], msd[sel]
    tc = t - t.mean()
    denom = float(np.dot(tc, tc))
    if denom == 0.0:
        raise ValueError("fit window has no time spread")
    slope = float(np.dot(tc, y - y.mean())) / denom
    intercept = float(y.mean() - slope * t.mean())
    resid = y - (intercept + slope * t)
    total = float(np.dot(y - y.mean(), y - y.mean()))
    r_squared = 1.0 - float(np.dot(resid, resid)) / total if total > 0 else 1.0

    divisor = 6.0 if use_3d_factor else 4.0
    return MSDResult(
        diffusion=slope / divisor,
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        n_frames=int(np.count_nonzero(sel)),
    )
