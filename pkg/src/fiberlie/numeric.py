"""Float evaluation of polynomial systems, vectorized over batches of points."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .poly import GradedPolynomial


class CompiledSystem:
    """``k`` polynomials in ``nv`` variables as a numpy function.

    Calling it on an array of shape ``(..., nv)`` returns shape ``(..., k)``.
    """

    def __init__(self, polys: Sequence[GradedPolynomial], nvars: int | None = None):
        polys = list(polys)
        if nvars is None:
            nvars = polys[0].split.nvars if polys else 0
        self.nvars = nvars
        self.size = len(polys)
        monos: dict[tuple, int] = {}
        entries = []
        for row, p in enumerate(polys):
            for mono, c in p.items():
                col = monos.setdefault(mono, len(monos))
                entries.append((row, col, float(c)))
        self.exponents = np.array(list(monos) or np.zeros((0, nvars)), dtype=np.int64).reshape(len(monos), nvars)
        self.coeffs = np.zeros((self.size, len(monos)))
        for row, col, c in entries:
            self.coeffs[row, col] += c
        self._max_exp = int(self.exponents.max()) if self.exponents.size else 0

    def monomials(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = np.ones(z.shape[:-1] + (self.exponents.shape[0],))
        if self._max_exp == 0:
            return out
        # powers[..., v, e] = z[..., v] ** e
        powers = np.ones(z.shape + (self._max_exp + 1,))
        for e in range(1, self._max_exp + 1):
            powers[..., e] = powers[..., e - 1] * z
        for v in range(self.nvars):
            col = self.exponents[:, v]
            if col.any():
                out *= powers[..., v, :][..., col]
        return out

    def __call__(self, z) -> np.ndarray:
        return self.monomials(z) @ self.coeffs.T


class CompiledField:
    """A vector field and its Jacobian, compiled for batched float evaluation."""

    def __init__(self, components: Sequence[GradedPolynomial]):
        components = list(components)
        nv = components[0].split.nvars
        self.dim = nv
        self.value = CompiledSystem(components, nv)
        self.jac = CompiledSystem([c.partial(j) for c in components for j in range(nv)], nv)

    def __call__(self, z) -> np.ndarray:
        return self.value(z)

    def jacobian(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.jac(z).reshape(z.shape[:-1] + (self.dim, self.dim))
