"""Periodic grids and Fourier pseudo-spectral operators.

Fields are plain numpy arrays. A scalar field has shape ``grid.shape``; a
vector field has shape ``(ncomp, *grid.shape)``. All operators are pure: they
never modify their inputs.

Conventions
-----------
* Real-to-complex transforms over the trailing ``dim`` axes.
* Odd derivatives drop the Nyquist mode (its derivative vanishes at the
  collocation points); the Laplacian keeps the full ``-|k|^2`` symbol so that
  Poisson solves invert every non-zero mode.
* The zero mode of every Poisson solve is set to zero (zero-mean gauge).
* Dealiasing is the 2/3 rule: modes with any ``|k_j| > N/3`` are removed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonZeroMeanRhs

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on the ``dim``-torus with ``points`` samples per axis.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1, 2 or 3.
    points : int
        Samples per axis; a power of two, at least 8.
    length : float
        Period of every axis. Wavenumbers are integers scaled by
        ``2*pi/length``; the default ``2*pi`` keeps them integral.
    """

    dim: int
    points: int
    length: float = TWO_PI

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        n = self.points
        if n < 8 or n & (n - 1):
            raise ValueError(f"points must be a power of two >= 8, got {n}")
        if not self.length > 0:
            raise ValueError("length must be positive")

    # -- geometry ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points**self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @property
    def spacing(self) -> float:
        return self.length / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @property
    def k_scale(self) -> float:
        return TWO_PI / self.length

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcast-ready coordinate arrays ``x_1, ..., x_dim``."""
        x = np.arange(self.points) * self.spacing
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    # -- wavenumbers ------------------------------------------------------

    @cached_property
    def _int_wavenumbers(self) -> tuple[np.ndarray, ...]:
        n = self.points
        full = np.fft.fftfreq(n, 1.0 / n)
        half = np.fft.rfftfreq(n, 1.0 / n)
        ks = []
        for j in range(self.dim):
            k = half if j == self.dim - 1 else full
            shape = [1] * self.dim
            shape[j] = k.size
            ks.append(k.reshape(shape))
        return tuple(ks)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Physical wavenumbers per axis, broadcastable to the rfft shape."""
        return tuple(k * self.k_scale for k in self._int_wavenumbers)

    @cached_property
    def deriv_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers for first derivatives (Nyquist zeroed)."""
        nyq = self.points // 2
        return tuple(
            np.where(np.abs(ki) == nyq, 0.0, k)
            for ki, k in zip(self._int_wavenumbers, self.wavenumbers)
        )

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(k**2 for k in self.wavenumbers)

    @cached_property
    def _inv_k2(self) -> np.ndarray:
        k2 = np.broadcast_to(self.k2, self.spectral_shape).copy()
        k2.flat[0] = 1.0
        inv = 1.0 / k2
        inv.flat[0] = 0.0
        return inv

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.points,) * (self.dim - 1) + (self.points // 2 + 1,)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.points / 3.0
        mask = np.ones(self.spectral_shape, dtype=bool)
        for k in self._int_wavenumbers:
            mask &= np.abs(k) <= cut
        return mask

    @property
    def kmax_dealiased(self) -> float:
        """Largest retained wavenumber magnitude after dealiasing."""
        return np.sqrt(self.dim) * np.floor(self.points / 3.0) * self.k_scale

    @cached_property
    def _rfft_weights(self) -> np.ndarray:
        # interior modes of the halved axis stand for a conjugate pair
        w = np.full(self.points // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        shape = [1] * self.dim
        shape[-1] = w.size
        return w.reshape(shape)

    # -- transforms -------------------------------------------------------

    def fft(self, f: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(f, axes=self.axes)

    def ifft(self, fh: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(fh, s=self.shape, axes=self.axes)

    def zeros(self, ncomp: int | None = None) -> np.ndarray:
        if ncomp is None:
            return np.zeros(self.shape)
        return np.zeros((ncomp, *self.shape))

    def check_scalar(self, f: np.ndarray) -> None:
        if np.shape(f) != self.shape:
            raise ValueError(f"expected scalar field of shape {self.shape}, got {np.shape(f)}")

    def check_vector(self, v: np.ndarray, ncomp: int | None = None) -> None:
        shape = np.shape(v)
        if shape[1:] != self.shape or (ncomp is not None and shape[0] != ncomp):
            raise ValueError(f"expected vector field on {self.shape}, got {shape}")

    # -- differential operators ------------------------------------------

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Spectral gradient of a scalar field; shape ``(dim, *shape)``."""
        self.check_scalar(f)
        fh = self.fft(f)
        return np.stack([self.ifft(1j * k * fh) for k in self.deriv_wavenumbers])

    def partial(self, f: np.ndarray, axis: int) -> np.ndarray:
        """Derivative along one axis; works on scalar or stacked fields."""
        return self.ifft(1j * self.deriv_wavenumbers[axis] * self.fft(f))

    def divergence(self, v: np.ndarray) -> np.ndarray:
        self.check_vector(v, self.dim)
        vh = self.fft(v)
        return self.ifft(sum(1j * k * vh[j] for j, k in enumerate(self.deriv_wavenumbers)))

    def curl(self, v: np.ndarray) -> np.ndarray:
        """Curl of a field.

        In 3-D a vector maps to a vector. In 2-D an in-plane vector ``(v1, v2)``
        maps to the scalar ``d1 v2 - d2 v1`` and a scalar (out-of-plane
        component) ``B`` maps to the in-plane vector ``(d2 B, -d1 B)``.
        """
        ks = self.deriv_wavenumbers
        if self.dim == 3:
            self.check_vector(v, 3)
            vh = self.fft(v)
            return np.stack([
                self.ifft(1j * (ks[1] * vh[2] - ks[2] * vh[1])),
                self.ifft(1j * (ks[2] * vh[0] - ks[0] * vh[2])),
                self.ifft(1j * (ks[0] * vh[1] - ks[1] * vh[0])),
            ])
        if self.dim == 2:
            if np.shape(v) == self.shape:
                vh = self.fft(v)
                return np.stack([self.ifft(1j * ks[1] * vh), self.ifft(-1j * ks[0] * vh)])
            self.check_vector(v, 2)
            vh = self.fft(v)
            return self.ifft(1j * (ks[0] * vh[1] - ks[1] * vh[0]))
        raise ValueError("curl is undefined on a 1-D grid")

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self.ifft(-self.k2 * self.fft(f))

    def poisson_solve(self, rhs: np.ndarray, scale: float | None = None) -> np.ndarray:
        """Zero-mean solution of ``laplacian(phi) = rhs``.

        Works componentwise on stacked fields. Raises `NonZeroMeanRhs` when the
        mean of any component exceeds ``1e-10 * scale``; ``scale`` defaults to
        the max norm of ``rhs``. Pass the magnitude of the terms that formed
        ``rhs`` (e.g. ``max|b|`` for ``b - n``) when ``rhs`` is a small
        difference of large quantities.
        """
        rhs = np.asarray(rhs, dtype=float)
        rh = self.fft(rhs)
        mean = rh[(...,) + (0,) * self.dim].real / self.size
        ref = np.max(np.abs(rhs)) if scale is None else scale
        if np.any(np.abs(mean) > 1e-10 * ref):
            raise NonZeroMeanRhs(
                f"Poisson source has mean {np.max(np.abs(mean)):.3e} (reference {ref:.3e})"
            )
        return self.ifft(-self._inv_k2 * rh)

    def dealias(self, f: np.ndarray) -> np.ndarray:
        return self.ifft(self.dealias_mask * self.fft(f))

    # -- norms and integrals ---------------------------------------------

    def mean(self, f: np.ndarray) -> np.ndarray | float:
        return np.mean(f, axis=self.axes)

    def integrate(self, f: np.ndarray) -> np.ndarray | float:
        return np.sum(f, axis=self.axes) * self.cell_volume

    def l2_norm(self, f: np.ndarray) -> float:
        """Quadrature L2 norm; vector fields sum over components."""
        return float(np.sqrt(np.sum(np.asarray(f) ** 2) * self.cell_volume))

    def max_norm(self, f: np.ndarray) -> float:
        return float(np.max(np.abs(f))) if np.size(f) else 0.0

    @cached_property
    def _sobolev_cache(self) -> dict:
        return {}

    def sobolev_weight(self, s: int) -> np.ndarray:
        """Fourier symbol of ``sum_{|alpha|<=s} |d^alpha|^2`` (cached per order)."""
        if s in self._sobolev_cache:
            return self._sobolev_cache[s]
        k2s = [k**2 for k in self.wavenumbers]
        w = np.zeros(self.spectral_shape)
        for alpha in itertools.product(range(s + 1), repeat=self.dim):
            if sum(alpha) <= s:
                term = np.ones(self.spectral_shape)
                for kj2, a in zip(k2s, alpha):
                    term = term * kj2**a
                w += term
        self._sobolev_cache[s] = w
        return w

    def sobolev_norm_sq(self, f: np.ndarray, s: int) -> float:
        if s < 0:
            raise ValueError("Sobolev order must be non-negative")
        if s > self.points // 4:
            raise ValueError(f"Sobolev order {s} exceeds points/4 = {self.points // 4}")
        fh = self.fft(np.asarray(f, dtype=float))
        dens = np.abs(fh) ** 2 * self._rfft_weights * self.sobolev_weight(s)
        return float(np.sum(dens) * self.volume / self.size**2)

    def sobolev_norm(self, f: np.ndarray, s: int) -> float:
        """``(sum_{|alpha|<=s} ||d^alpha f||_{L2}^2)^(1/2)``, computed spectrally."""
        return float(np.sqrt(self.sobolev_norm_sq(f, s)))
