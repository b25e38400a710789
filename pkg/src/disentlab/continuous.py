"""Parametric continuous oracle: the disk-rotation family.

The oracle has three real factors: an angle uniform on [0, 2*pi) and a
point uniform on the unit disk, with the identity generator.  The paired
candidate model rotates the disk point by the angle, which preserves the
data distribution yet entangles the angle into the remaining factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import WorldError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DiskRotationWorld:
    """Oracle: s1 ~ unif[0, 2pi), (s2, s3) ~ unif(unit disk), g* = identity."""

    family: str = "disk-rotation"
    n: int = 3
    ordered: tuple[bool, ...] = (True, True, True)

    def sample_latents(self, rng: np.random.Generator, m: int) -> np.ndarray:
        angles = rng.uniform(0.0, TWO_PI, m)
        disk = _sample_disk(rng, m)
        return np.column_stack([angles, disk])

    def resample_latents(self, rng, latents: np.ndarray, resample_cols: Sequence[int]) -> np.ndarray:
        """Redraw the given coordinates from their exact conditional.

        The angle is independent of the disk point; within the disk the
        conditional of one coordinate given the other is uniform on the
        chord through the fixed value.
        """
        cols = set(resample_cols)
        if not cols <= {0, 1, 2}:
            raise WorldError(f"coordinates {sorted(cols)} outside this world's arity")
        out = np.asarray(latents, dtype=float).copy()
        m = len(out)
        if 0 in cols:
            out[:, 0] = rng.uniform(0.0, TWO_PI, m)
        if {1, 2} <= cols:
            out[:, 1:3] = _sample_disk(rng, m)
        elif 1 in cols:
            half = np.sqrt(np.maximum(0.0, 1.0 - out[:, 2] ** 2))
            out[:, 1] = rng.uniform(-half, half)
        elif 2 in cols:
            half = np.sqrt(np.maximum(0.0, 1.0 - out[:, 1] ** 2))
            out[:, 2] = rng.uniform(-half, half)
        return out

    def observe(self, latents: np.ndarray) -> np.ndarray:
        """g* is the identity: observations are the factor vectors."""
        return np.asarray(latents, dtype=float).copy()

    def encode(self, observations: np.ndarray) -> np.ndarray:
        return np.asarray(observations, dtype=float).copy()


@dataclass(frozen=True)
class RotationCandidate:
    """Candidate whose generator rotates (z2, z3) by the angle z1.

    The latent prior equals the oracle prior (rotation preserves the
    disk's uniform measure), so the model matches the observation
    distribution while z1 leaks into the measured factors 2 and 3.
    """

    base: DiskRotationWorld = field(default_factory=DiskRotationWorld)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def ordered(self) -> tuple[bool, ...]:
        return self.base.ordered

    def sample_latents(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return self.base.sample_latents(rng, m)

    def resample_latents(self, rng, latents, resample_cols) -> np.ndarray:
        return self.base.resample_latents(rng, latents, resample_cols)

    def phi(self, z: np.ndarray) -> np.ndarray:
        """Forward reparameterization (equals e* . g here)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        c, s = np.cos(z[:, 0]), np.sin(z[:, 0])
        return np.column_stack([z[:, 0], c * z[:, 1] - s * z[:, 2], s * z[:, 1] + c * z[:, 2]])

    def phi_inverse(self, s_vals: np.ndarray) -> np.ndarray:
        s_vals = np.atleast_2d(np.asarray(s_vals, dtype=float))
        c, s = np.cos(s_vals[:, 0]), np.sin(s_vals[:, 0])
        return np.column_stack(
            [s_vals[:, 0], c * s_vals[:, 1] + s * s_vals[:, 2], -s * s_vals[:, 1] + c * s_vals[:, 2]]
        )

    def observe(self, latents: np.ndarray) -> np.ndarray:
        """g = g* . phi (g* is the identity)."""
        return self.phi(latents)

    def encode(self, observations: np.ndarray) -> np.ndarray:
        """e = phi^-1 . e*."""
        return self.phi_inverse(observations)


def rotation_world() -> tuple[DiskRotationWorld, RotationCandidate]:
    """The impossibility counterexample: oracle plus rotating candidate."""
    world = DiskRotationWorld()
    return world, RotationCandidate(world)


def _sample_disk(rng: np.random.Generator, m: int) -> np.ndarray:
    radii = np.sqrt(rng.uniform(0.0, 1.0, m))
    theta = rng.uniform(0.0, TWO_PI, m)
    return np.column_stack([radii * np.cos(theta), radii * np.sin(theta)])
