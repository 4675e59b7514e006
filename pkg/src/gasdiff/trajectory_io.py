"""Trajectory persistence: native text format plus a LAMMPS dump reader.

The native format is line oriented and diffable:

    #gasdiff-trajectory 1
    #box 50000.0
    #dt 5.0
    #units real
    #n_he 2
    #n_ar 1
    #seed 7
    #has_velocities 1
    FRAME 0 0.0 [total_energy]
    1 He 12.5 99.0 0.001 -0.002
    ...

Header lines are ``#key value``; each frame is a ``FRAME <timestep>
<time_fs>`` line (with an optional trailing total energy) followed by one
``id species x y vx vy`` row per particle.  Velocities are written as zeros
when a source had none (``has_velocities 0``).

The LAMMPS reader handles orthogonal-box text dumps with header-driven
column order, unscaled (x y) or scaled (xs ys) coordinates, and ignores any
z column.  Every malformed input raises ParseError with a line number; no
input may crash the parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError
from .md import SPECIES_BY_LABEL, SPECIES_LABELS, Species


@dataclass
class Frame:
    timestep: int
    time_fs: float
    ids: np.ndarray
    species: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    energy: float | None = None

    @property
    def n_particles(self) -> int:
        return len(self.ids)


@dataclass
class Trajectory:
    box_side: float
    frames: list[Frame] = field(default_factory=list)
    units: str = "real"
    dt: float | None = None
    seed: int | None = None
    n_he: int | None = None
    n_ar: int | None = None
    has_velocities: bool = True

    def __post_init__(self):
        if self.box_side <= 0:
            raise ValueError("box side must be positive")
        steps = [f.timestep for f in self.frames]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("frame timesteps must be strictly increasing")
        counts = {f.n_particles for f in self.frames}
        if len(counts) > 1:
            raise ValueError(f"particle count varies across frames: {sorted(counts)}")

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def n_particles(self) -> int:
        return self.frames[0].n_particles if self.frames else 0

    @property
    def times_fs(self) -> np.ndarray:
        return np.array([f.time_fs for f in self.frames])


def write_native(traj: Trajectory, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("#gasdiff-trajectory 1\n")
        fh.write(f"#box {traj.box_side!r}\n")
        if traj.dt is not None:
            fh.write(f"#dt {traj.dt!r}\n")
        fh.write(f"#units {traj.units}\n")
        if traj.n_he is not None:
            fh.write(f"#n_he {traj.n_he}\n")
        if traj.n_ar is not None:
            fh.write(f"#n_ar {traj.n_ar}\n")
        if traj.seed is not None:
            fh.write(f"#seed {traj.seed}\n")
        fh.write(f"#has_velocities {int(traj.has_velocities)}\n")
        for fr in traj.frames:
            if fr.energy is None:
                fh.write(f"FRAME {fr.timestep} {float(fr.time_fs)!r}\n")
            else:
                fh.write(f"FRAME {fr.timestep} {float(fr.time_fs)!r} "
                         f"{float(fr.energy)!r}\n")
            for i in range(fr.n_particles):
                label = SPECIES_LABELS[int(fr.species[i])]
                x, y = (float(v) for v in fr.positions[i])
                vx, vy = (float(v) for v in fr.velocities[i])
                fh.write(f"{int(fr.ids[i])} {label} {x!r} {y!r} {vx!r} {vy!r}\n")


def _parse_float(token: str, path, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"non-numeric field {token!r}", path=path, line=line) from None


def _parse_int(token: str, path, line: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"non-integer field {token!r}", path=path, line=line) from None
    if abs(value) > 2**62:
        raise ParseError(f"integer out of range: {token!r}", path=path, line=line)
    return value


def read_native(path) -> Trajectory:
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#gasdiff-trajectory"):
        raise ParseError("missing '#gasdiff-trajectory' signature", path=path, line=1)

    header: dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        parts = lines[i][1:].split(None, 1)
        if len(parts) != 2:
            raise ParseError("malformed header line", path=path, line=i + 1)
        header[parts[0]] = parts[1]
        i += 1
    if "box" not in header:
        raise ParseError("header is missing the box side", path=path, line=i)

    box_side = _parse_float(header["box"], path, 1)
    frames: list[Frame] = []
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        tokens = lines[i].split()
        if tokens[0] != "FRAME" or len(tokens) not in (3, 4):
            raise ParseError("expected a FRAME line", path=path, line=i + 1)
        timestep = _parse_int(tokens[1], path, i + 1)
        time_fs = _parse_float(tokens[2], path, i + 1)
        energy = _parse_float(tokens[3], path, i + 1) if len(tokens) == 4 else None
        i += 1
        rows = []
        while i < len(lines) and lines[i].strip() and not lines[i].startswith("FRAME"):
            parts = lines[i].split()
            if len(parts) != 6:
                raise ParseError(
                    f"expected 6 columns in particle row, found {len(parts)}",
                    path=path, line=i + 1,
                )
            if parts[1] not in SPECIES_BY_LABEL:
                raise ParseError(f"unknown species {parts[1]!r}", path=path, line=i + 1)
            rows.append((
                _parse_int(parts[0], path, i + 1),
                int(SPECIES_BY_LABEL[parts[1]]),
                *(_parse_float(p, path, i + 1) for p in parts[2:]),
            ))
            i += 1
        if frames and len(rows) != frames[0].n_particles:
            raise ParseError(
                f"frame at timestep {timestep} has {len(rows)} particles, "
                f"expected {frames[0].n_particles}",
                path=path, line=i,
            )
        arr = np.array(rows, dtype=np.float64).reshape(len(rows), 6)
        frames.append(Frame(
            timestep=timestep,
            time_fs=time_fs,
            ids=arr[:, 0].astype(np.int64),
            species=arr[:, 1].astype(np.int64),
            positions=arr[:, 2:4].copy(),
            velocities=arr[:, 4:6].copy(),
            energy=energy,
        ))

    try:
        return Trajectory(
            box_side=box_side,
            frames=frames,
            units=header.get("units", "real"),
            dt=_parse_float(header["dt"], path, 1) if "dt" in header else None,
            seed=_parse_int(header["seed"], path, 1) if "seed" in header else None,
            n_he=_parse_int(header["n_he"], path, 1) if "n_he" in header else None,
            n_ar=_parse_int(header["n_ar"], path, 1) if "n_ar" in header else None,
            has_velocities=header.get("has_velocities", "1") == "1",
        )
    except ValueError as exc:
        raise ParseError(str(exc), path=path) from None


def _expect_item(lines, i, name, path):
    if i >= len(lines):
        raise ParseError(f"missing 'ITEM: {name}' section", path=path, line=len(lines))
    if not lines[i].startswith(f"ITEM: {name}"):
        raise ParseError(
            f"expected 'ITEM: {name}', found {lines[i][:40]!r}", path=path, line=i + 1
        )
    return lines[i]


def parse_lammps_dump(path, species_map: dict[int, Species],
                      dt_fs: float | None = None) -> Trajectory:
    """Read an orthogonal-box LAMMPS text dump.

    ``species_map`` translates the dump's numeric atom types.  Column order
    is taken from the ``ITEM: ATOMS`` header and must include id, type and
    either x/y or xs/ys; vx/vy are used when present.  Rows are reordered by
    atom id so frames index consistently.  LAMMPS dumps carry no time unit,
    so frame times are timestep * dt_fs when given, else the raw timestep.
    """
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        lines = fh.read().splitlines()

    frames: list[Frame] = []
    box_side = None
    saw_velocities = False
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        _expect_item(lines, i, "TIMESTEP", path)
        if i + 1 >= len(lines):
            raise ParseError("file ends inside TIMESTEP section", path=path, line=i + 1)
        timestep = _parse_int(lines[i + 1].strip(), path, i + 2)
        i += 2

        _expect_item(lines, i, "NUMBER OF ATOMS", path)
        if i + 1 >= len(lines):
            raise ParseError("file ends inside NUMBER OF ATOMS section",
                             path=path, line=i + 1)
        n_atoms = _parse_int(lines[i + 1].strip(), path, i + 2)
        if n_atoms < 0:
            raise ParseError("negative atom count", path=path, line=i + 2)
        i += 2

        _expect_item(lines, i, "BOX BOUNDS", path)
        i += 1
        bounds = []
        while i < len(lines) and not lines[i].startswith("ITEM:"):
            parts = lines[i].split()
            if len(parts) < 2:
                raise ParseError("malformed box bounds line", path=path, line=i + 1)
            bounds.append((_parse_float(parts[0], path, i + 1),
                           _parse_float(parts[1], path, i + 1)))
            i += 1
        if len(bounds) < 2:
            raise ParseError("expected at least 2 box bounds lines",
                             path=path, line=i)
        lo, hi = bounds[0]
        side = hi - lo
        if side <= 0:
            raise ParseError("box has nonpositive extent", path=path, line=i)
        if box_side is None:
            box_side = side

        header = _expect_item(lines, i, "ATOMS", path)
        columns = header.split()[2:]
        col = {name: k for k, name in enumerate(columns)}
        scaled = "xs" in col
        required = ["id", "type"] + (["xs", "ys"] if scaled else ["x", "y"])
        missing = [c for c in required if c not in col]
        if missing:
            raise ParseError(
                f"unsupported ATOMS column layout {columns!r} (missing {missing})",
                path=path, line=i + 1,
            )
        has_vel = "vx" in col and "vy" in col
        saw_velocities = saw_velocities or has_vel
        i += 1

        if i + n_atoms > len(lines):
            raise ParseError(
                f"frame at timestep {timestep} is truncated "
                f"({len(lines) - i} of {n_atoms} atom rows)",
                path=path, line=len(lines),
            )
        ids = np.empty(n_atoms, dtype=np.int64)
        species = np.empty(n_atoms, dtype=np.int64)
        positions = np.empty((n_atoms, 2))
        velocities = np.zeros((n_atoms, 2))
        for row in range(n_atoms):
            parts = lines[i + row].split()
            if len(parts) != len(columns):
                raise ParseError(
                    f"expected {len(columns)} columns, found {len(parts)}",
                    path=path, line=i + row + 1,
                )
            ids[row] = _parse_int(parts[col["id"]], path, i + row + 1)
            type_id = _parse_int(parts[col["type"]], path, i + row + 1)
            if type_id not in species_map:
                raise ParseError(
                    f"atom type {type_id} not in species map", path=path,
                    line=i + row + 1,
                )
            species[row] = int(species_map[type_id])
            if scaled:
                x = _parse_float(parts[col["xs"]], path, i + row + 1) * side
                y = _parse_float(parts[col["ys"]], path, i + row + 1) * side
            else:
                x = _parse_float(parts[col["x"]], path, i + row + 1) - lo
                y = _parse_float(parts[col["y"]], path, i + row + 1) - lo
            # double mod: a tiny negative coordinate can wrap to exactly side
            positions[row] = ((x % side) % side, (y % side) % side)
            if has_vel:
                velocities[row] = (
                    _parse_float(parts[col["vx"]], path, i + row + 1),
                    _parse_float(parts[col["vy"]], path, i + row + 1),
                )
        i += n_atoms

        order = np.argsort(ids, kind="stable")
        frames.append(Frame(
            timestep=timestep,
            time_fs=float(timestep) * (dt_fs if dt_fs is not None else 1.0),
            ids=ids[order],
            species=species[order],
            positions=positions[order],
            velocities=velocities[order],
        ))

    if box_side is None:
        raise ParseError("no frames found", path=path, line=1)
    try:
        return Trajectory(
            box_side=box_side,
            frames=frames,
            units="real",
            dt=dt_fs,
            has_velocities=saw_velocities,
        )
    except ValueError as exc:
        raise ParseError(str(exc), path=path) from None


def write_lammps_dump(traj: Trajectory, path) -> None:
    """Emit frames as an orthogonal-box LAMMPS text dump (z set to zero)."""
    type_of = {int(Species.HE): 1, int(Species.AR): 2}
    with open(path, "w", encoding="utf-8") as fh:
        for fr in traj.frames:
            fh.write("ITEM: TIMESTEP\n")
            fh.write(f"{fr.timestep}\n")
            fh.write("ITEM: NUMBER OF ATOMS\n")
            fh.write(f"{fr.n_particles}\n")
            fh.write("ITEM: BOX BOUNDS pp pp pp\n")
            fh.write(f"0.0 {float(traj.box_side)!r}\n")
            fh.write(f"0.0 {float(traj.box_side)!r}\n")
            fh.write("-0.5 0.5\n")
            if traj.has_velocities:
                fh.write("ITEM: ATOMS id type x y z vx vy\n")
                for i in range(fr.n_particles):
                    fh.write(
                        f"{int(fr.ids[i])} {type_of[int(fr.species[i])]} "
                        f"{float(fr.positions[i, 0])!r} {float(fr.positions[i, 1])!r} 0.0 "
                        f"{float(fr.velocities[i, 0])!r} {float(fr.velocities[i, 1])!r}\n"
                    )
            else:
                fh.write("ITEM: ATOMS id type x y z\n")
                for i in range(fr.n_particles):
                    fh.write(
                        f"{int(fr.ids[i])} {type_of[int(fr.species[i])]} "
                        f"{float(fr.positions[i, 0])!r} {float(fr.positions[i, 1])!r} 0.0\n"
                    )
