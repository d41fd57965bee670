"""Truncated multi-dimensional Fourier fields with weighted norms.

Fields live on a symmetric lattice |k_i| <= K over the d-torus, optionally
extended by a spatial axis |j| <= J.  Coefficient arrays are indexed in
natural signed order (axis index i  <->  mode i - K), and every operation
returns a new field; nothing is mutated in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft


class LatticeMismatchError(ValueError):
    """Two fields built over different lattices were combined."""


class GridTooSmallError(ValueError):
    """Collocation grid cannot hold the lattice modes (Nyquist violation)."""


class NormOverflowError(OverflowError):
    """Weighted norm exceeds the representable floating-point range."""


@dataclass(frozen=True)
class SpectralLattice:
    """Symmetric Fourier index set with frequency vector and value dimension.

    ``d`` torus dimensions with cutoff ``K`` per axis; when ``has_space`` is
    set there is one extra spatial axis with cutoff ``J``.  ``omega`` is the
    forcing frequency vector, ``n`` the number of value components.
    """

    d: int
    K: int
    omega: tuple[float, ...]
    n: int = 1
    has_space: bool = False
    J: int = 0

    def __post_init__(self):
        if self.d < 1 or self.K < 1 or self.n < 1:
            raise ValueError("need d >= 1, K >= 1, n >= 1")
        if self.has_space and self.J < 1:
            raise ValueError("spatial lattice needs J >= 1")
        if len(self.omega) != self.d:
            raise ValueError(f"omega has length {len(self.omega)}, expected d={self.d}")
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))

    @property
    def omega_array(self) -> np.ndarray:
        return np.asarray(self.omega, dtype=float)

    @property
    def mode_shape(self) -> tuple[int, ...]:
        shape = (2 * self.K + 1,) * self.d
        if self.has_space:
            shape += (2 * self.J + 1,)
        return shape

    @property
    def field_shape(self) -> tuple[int, ...]:
        return self.mode_shape + (self.n,)

    @property
    def n_axes(self) -> int:
        return self.d + (1 if self.has_space else 0)

    def axis_modes(self, axis: int) -> np.ndarray:
        cut = self.K if axis < self.d else self.J
        return np.arange(-cut, cut + 1)

    def k_dot_omega(self) -> np.ndarray:
        """Array of k.omega over the torus axes, broadcast to mode_shape."""
        return _k_dot_omega(self)

    def k_l1(self) -> np.ndarray:
        """|k_1|+...+|k_d| (+|j| on spatial lattices) per mode."""
        return _k_l1(self)

    def k_sq(self) -> np.ndarray:
        """Euclidean |k|^2 (+j^2) per mode."""
        return _k_sq(self)

    def min_divisor(self, multiple: int = 2) -> tuple[float, tuple[int, ...]]:
        """Min |k.omega| over 0 < |k_i| <= multiple*K, with the argmin k."""
        return check_nonresonance(self.omega_array, multiple * self.K)

    def validate_nonresonance(self, tol: float = 0.0) -> None:
        value, kmin = self.min_divisor()
        if value <= tol:
            raise ValueError(
                f"resonant frequency vector: k={kmin} gives |k.omega|={value:.3e}"
            )


def _frozen(arr: np.ndarray) -> np.ndarray:
    # cached arrays are shared by reference; freeze them against mutation
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=128)
def _k_dot_omega(lat: SpectralLattice) -> np.ndarray:
    grids = np.meshgrid(*(lat.axis_modes(i) for i in range(lat.d)), indexing="ij")
    kdw = sum(w * g for w, g in zip(lat.omega, grids))
    if lat.has_space:
        kdw = kdw[..., None] * np.ones(2 * lat.J + 1)
    return _frozen(np.asarray(kdw, dtype=float))


@lru_cache(maxsize=128)
def _k_l1(lat: SpectralLattice) -> np.ndarray:
    grids = np.meshgrid(
        *(np.abs(lat.axis_modes(i)) for i in range(lat.n_axes)), indexing="ij"
    )
    return _frozen(np.asarray(sum(grids), dtype=float))


@lru_cache(maxsize=128)
def _k_sq(lat: SpectralLattice) -> np.ndarray:
    grids = np.meshgrid(
        *(lat.axis_modes(i).astype(float) ** 2 for i in range(lat.n_axes)),
        indexing="ij",
    )
    return _frozen(np.asarray(sum(grids), dtype=float))


def check_nonresonance(omega: np.ndarray, K: int) -> tuple[float, tuple[int, ...]]:
    """Exact minimum of |k.omega| over the box 0 < max|k_i| <= K.

    Returns the minimum and an argmin vector.  A zero value means the
    frequency vector is resonant on the working lattice.
    """
    omega = np.asarray(omega, dtype=float)
    d = omega.size
    if K < 1:
        raise ValueError("K >= 1 required")
    axes = [np.arange(-K, K + 1)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    kdw = np.abs(sum(w * g for w, g in zip(omega, grids)))
    origin = (K,) * d
    kdw[origin] = np.inf
    best = float(np.min(kdw))
    # among minimizers report the shortest vector (ties: resonance multiples)
    l1 = sum(np.abs(g) for g in grids)
    tied = np.where(kdw <= best * (1 + 1e-12) + 1e-300, l1, np.inf)
    idx = np.unravel_index(int(np.argmin(tied)), kdw.shape)
    kmin = tuple(int(i) - K for i in idx)
    for c in kmin:   # sign convention: first nonzero component positive
        if c != 0:
            if c < 0:
                kmin = tuple(-x for x in kmin)
            break
    return float(kdw[idx]), kmin


@dataclass(frozen=True)
class NormSpec:
    """Weighted-norm parameters: analyticity width rho and Sobolev index m."""

    rho: float = 0.0
    m: float = 0.0

    def __post_init__(self):
        if self.rho < 0 or self.m < 0:
            raise ValueError("need rho >= 0 and m >= 0")


L2 = NormSpec(0.0, 0.0)


class FourierField:
    """Complex coefficients over a SpectralLattice; value axis is last."""

    __slots__ = ("lattice", "coeffs")

    def __init__(self, lattice: SpectralLattice, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != lattice.field_shape:
            raise ValueError(
                f"coefficient shape {coeffs.shape} != lattice {lattice.field_shape}"
            )
        self.lattice = lattice
        self.coeffs = coeffs

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, lattice: SpectralLattice) -> "FourierField":
        return cls(lattice, np.zeros(lattice.field_shape, dtype=complex))

    @classmethod
    def from_modes(
        cls, lattice: SpectralLattice, modes: dict[tuple, np.ndarray | complex]
    ) -> "FourierField":
        """Build a field from {k-tuple (or (*k, j)-tuple): coefficient}.

        Coefficients are n-vectors; plain scalars are accepted for n = 1.
        """
        out = np.zeros(lattice.field_shape, dtype=complex)
        for k, val in modes.items():
            vec = np.asarray(val, dtype=complex)
            if vec.ndim == 0:
                if lattice.n != 1:
                    raise ValueError(
                        f"mode {k}: scalar coefficient on an n={lattice.n} lattice"
                    )
                vec = vec.reshape(1)
            if vec.shape != (lattice.n,):
                raise ValueError(f"mode {k}: coefficient shape {vec.shape} != (n,)")
            out[lattice_index(lattice, k)] += vec
        return cls(lattice, out)

    @classmethod
    def random_real(
        cls,
        lattice: SpectralLattice,
        rng: np.random.Generator,
        decay: float = 0.5,
        amplitude: float = 1.0,
    ) -> "FourierField":
        """Random Hermitian-symmetric field with e^{-decay |k|_1} envelope."""
        raw = rng.standard_normal(lattice.field_shape) + 1j * rng.standard_normal(
            lattice.field_shape
        )
        env = np.exp(-decay * lattice.k_l1())[..., None]
        f = cls(lattice, amplitude * raw * env)
        f = f.hermitian_part()
        if lattice.has_space:
            f = f.project_zero_space_average()
        return f

    # -- basic algebra -----------------------------------------------------

    def copy(self) -> "FourierField":
        return FourierField(self.lattice, self.coeffs.copy())

    def _check(self, other: "FourierField") -> None:
        if self.lattice != other.lattice:
            raise LatticeMismatchError("fields live on different lattices")

    def __add__(self, other: "FourierField") -> "FourierField":
        self._check(other)
        return FourierField(self.lattice, self.coeffs + other.coeffs)

    def __sub__(self, other: "FourierField") -> "FourierField":
        self._check(other)
        return FourierField(self.lattice, self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "FourierField":
        return FourierField(self.lattice, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "FourierField":
        return FourierField(self.lattice, -self.coeffs)

    # -- structure ---------------------------------------------------------

    def reflected_conj(self) -> np.ndarray:
        """conj(coeff(-k)) arranged on the +k grid."""
        sl = tuple([slice(None, None, -1)] * self.lattice.n_axes + [slice(None)])
        return np.conj(self.coeffs[sl])

    def hermitian_defect(self) -> float:
        """max |coeff(-k) - conj(coeff(k))| over the lattice."""
        return float(np.max(np.abs(self.coeffs - self.reflected_conj())))

    def is_real_symmetric(self, tol: float = 1e-12) -> bool:
        return self.hermitian_defect() <= tol

    def hermitian_part(self) -> "FourierField":
        return FourierField(self.lattice, 0.5 * (self.coeffs + self.reflected_conj()))

    def mean_coefficient(self) -> np.ndarray:
        """Coefficient at k = 0 (and j = 0 on spatial lattices)."""
        lat = self.lattice
        idx = (lat.K,) * lat.d + ((lat.J,) if lat.has_space else ())
        return self.coeffs[idx]

    def space_average_slice(self) -> np.ndarray:
        """The j = 0 slab of a spatial field."""
        lat = self.lattice
        if not lat.has_space:
            raise ValueError("field has no spatial axis")
        return self.coeffs[(slice(None),) * lat.d + (lat.J,)]

    def project_zero_space_average(self) -> "FourierField":
        lat = self.lattice
        out = self.coeffs.copy()
        out[(slice(None),) * lat.d + (lat.J,)] = 0.0
        return FourierField(lat, out)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))


def lattice_index(lat: SpectralLattice, k: Sequence[int]) -> tuple[int, ...]:
    """Array index of mode k (torus components first, then j if present)."""
    k = tuple(int(c) for c in k)
    if len(k) != lat.n_axes:
        raise ValueError(f"mode {k} has {len(k)} entries, lattice has {lat.n_axes} axes")
    idx = []
    for axis, c in enumerate(k):
        cut = lat.K if axis < lat.d else lat.J
        if abs(c) > cut:
            raise ValueError(f"mode {k} outside lattice cutoff")
        idx.append(c + cut)
    return tuple(idx)


def mode_coefficient(f: FourierField, k: Sequence[int]) -> np.ndarray:
    return f.coeffs[lattice_index(f.lattice, k)]


# ---------------------------------------------------------------------------
# norms


def log_weights(lat: SpectralLattice, spec: NormSpec) -> np.ndarray:
    """log of the norm weight e^{2 rho |k|_1} (|k|^2 + 1)^m per mode.

    Kept in log space: rho*K can push e^{2 rho |k|} past float range long
    before the weighted sum itself overflows.
    """
    return 2.0 * spec.rho * lat.k_l1() + spec.m * np.log1p(lat.k_sq())


def norm(f: FourierField, spec: NormSpec) -> float:
    """Weighted l2 norm sqrt( sum |u_k|^2 e^{2 rho |k|}(|k|^2+1)^m ).

    |k| in the exponential is the l1 norm, |k|^2 in the polynomial factor is
    Euclidean; spatial lattices use |k|_1 + |j| and |k|^2 + j^2.  Raises
    NormOverflowError when the result leaves the double range.
    """
    logw = log_weights(f.lattice, spec)
    mag2 = np.sum(np.abs(f.coeffs) ** 2, axis=-1)
    nonzero = mag2 > 0.0
    if not np.any(nonzero):
        return 0.0
    logterms = np.log(mag2[nonzero]) + logw[nonzero]
    peak = float(np.max(logterms))
    total = math.sqrt(float(np.sum(np.exp(logterms - peak))))
    log_result = 0.5 * peak + math.log(total)
    if log_result > math.log(np.finfo(float).max):
        raise NormOverflowError(
            f"norm exceeds float range (log value {log_result:.1f})"
        )
    return math.exp(log_result)


def hs_norm(f: FourierField, s: float) -> float:
    """Plain Sobolev H^s norm (rho = 0), s may be fractional."""
    return norm(f, NormSpec(0.0, s))


# ---------------------------------------------------------------------------
# transforms


def _grid_shape(lat: SpectralLattice, min_sizes: Sequence[int]) -> tuple[int, ...]:
    return tuple(sfft.next_fast_len(int(s)) for s in min_sizes)


def default_grid(lat: SpectralLattice, oversample: float = 1.0) -> tuple[int, ...]:
    sizes = []
    for axis in range(lat.n_axes):
        cut = lat.K if axis < lat.d else lat.J
        sizes.append(max(int(math.ceil(oversample * (2 * cut + 1))), 2 * cut + 1))
    return _grid_shape(lat, sizes)


def dealias_grid(lat: SpectralLattice, degree: int = 2) -> tuple[int, ...]:
    """Grid large enough that a degree-p product is alias-free on the lattice."""
    sizes = []
    for axis in range(lat.n_axes):
        cut = lat.K if axis < lat.d else lat.J
        sizes.append((degree + 1) * cut + 1)
    return _grid_shape(lat, sizes)


def synthesize(f: FourierField, grid: Sequence[int] | None = None) -> np.ndarray:
    """Values of the field on the uniform collocation grid.

    Node i along an axis of size N sits at angle 2*pi*i/N.  Grid must hold
    the lattice (N >= 2*cutoff + 1 per axis).
    """
    lat = f.lattice
    if grid is None:
        grid = default_grid(lat)
    grid = tuple(int(g) for g in grid)
    for axis, g in enumerate(grid):
        cut = lat.K if axis < lat.d else lat.J
        if g < 2 * cut + 1:
            raise GridTooSmallError(f"grid {g} < {2 * cut + 1} along axis {axis}")
    work = np.zeros(grid + (lat.n,), dtype=complex)
    work[_bin_index(lat, grid)] = f.coeffs
    axes = tuple(range(len(grid)))
    return sfft.ifftn(work, axes=axes, workers=-1) * np.prod(grid)


def _bin_index(lat: SpectralLattice, grid: tuple[int, ...]):
    """FFT-bin positions (k mod N per axis) of the lattice modes."""
    per_axis = []
    for axis, g in enumerate(grid):
        cut = lat.K if axis < lat.d else lat.J
        per_axis.append(np.mod(np.arange(-cut, cut + 1), g))
    return tuple(np.ix_(*per_axis))


def analyze(values: np.ndarray, lat: SpectralLattice) -> FourierField:
    """Project grid values back onto the lattice coefficients."""
    values = np.asarray(values, dtype=complex)
    grid = values.shape[:-1]
    if values.shape[-1] != lat.n or len(grid) != lat.n_axes:
        raise ValueError("value array shape does not match lattice")
    for axis, g in enumerate(grid):
        cut = lat.K if axis < lat.d else lat.J
        if g < 2 * cut + 1:
            raise GridTooSmallError(f"grid {g} < {2 * cut + 1} along axis {axis}")
    axes = tuple(range(len(grid)))
    spec = sfft.fftn(values, axes=axes, workers=-1) / np.prod(grid)
    return FourierField(lat, spec[_bin_index(lat, grid)])


def evaluate_at(f: FourierField, theta: Sequence[float], x: float | None = None) -> np.ndarray:
    """Pointwise value sum_k u_k e^{i k.theta} (times e^{i j x} when spatial)."""
    lat = f.lattice
    phase = np.zeros(lat.mode_shape)
    for axis in range(lat.d):
        shape = [1] * lat.n_axes
        shape[axis] = 2 * lat.K + 1
        phase = phase + (lat.axis_modes(axis) * float(theta[axis])).reshape(shape)
    if lat.has_space:
        if x is None:
            raise ValueError("spatial field needs x")
        shape = [1] * lat.n_axes
        shape[-1] = 2 * lat.J + 1
        phase = phase + (lat.axis_modes(lat.d) * float(x)).reshape(shape)
    weights = np.exp(1j * phase)
    return np.tensordot(weights, f.coeffs, axes=(tuple(range(lat.n_axes)),) * 2)


# ---------------------------------------------------------------------------
# products and composition


def product(u: FourierField, v: FourierField) -> FourierField:
    """Componentwise pointwise product, computed alias-free.

    Uses 3/2-rule zero padding, which is exact for a quadratic product: the
    returned coefficients are the true convolution truncated to the lattice.
    """
    u._check(v)
    grid = dealias_grid(u.lattice, degree=2)
    pu = synthesize(u, grid)
    # squaring is the common hot path: skip the second transform
    pv = pu if v is u or v.coeffs is u.coeffs else synthesize(v, grid)
    return analyze(pu * pv, u.lattice)


@dataclass(frozen=True)
class NonlinearitySpec:
    """The nonlinear part g-hat applied pointwise to field values.

    kind is one of:
      "zero"             -- identically zero
      "polynomial"       -- per-component coefficient lists, coeffs[c][p] is
                            the coefficient of x_c**p in component c
      "callable"         -- fn maps an (..., n) real array to the same shape
      "piecewise_linear" -- scalar continuous piecewise-linear map with
                            ``breakpoints`` and per-interval ``slopes``
                            (len(slopes) == len(breakpoints) + 1), pinned to
                            g(0) = 0, applied componentwise

    ``smallness`` records which contraction regime the map supports:
    "local" means g-hat vanishes to first order at the origin (contraction
    in a ball, small forcing required), "global" means a globally small
    Lipschitz constant declared in ``lip_hat``.  ``oversample`` controls
    the composition grid for the non-polynomial kinds; polynomial
    composition always pads enough to be alias-free at its degree.
    """

    kind: str = "zero"
    coeffs: tuple[tuple[float, ...], ...] | None = None
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    breakpoints: tuple[float, ...] = ()
    slopes: tuple[float, ...] = ()
    lip_hat: float | None = None
    oversample: float = 4.0
    smallness: str = "local"

    def __post_init__(self):
        if self.kind not in ("zero", "polynomial", "callable", "piecewise_linear"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.lip_hat is not None and self.lip_hat < 0:
            raise ValueError("lip_hat >= 0 required")
        if self.smallness not in ("local", "global"):
            raise ValueError("smallness must be 'local' or 'global'")
        if self.kind == "polynomial":
            if self.coeffs is None:
                raise ValueError("polynomial kind needs coeffs")
            object.__setattr__(
                self,
                "coeffs",
                tuple(tuple(float(c) for c in row) for row in self.coeffs),
            )
            if self.smallness == "local":
                for row in self.coeffs:
                    if len(row) > 0 and row[0] != 0.0:
                        raise ValueError("a locally small map requires g-hat(0) = 0")
                    if len(row) > 1 and row[1] != 0.0:
                        raise ValueError("a locally small map requires D g-hat(0) = 0")
        if self.kind == "callable" and self.fn is None:
            raise ValueError("callable kind needs fn")
        if self.kind == "piecewise_linear":
            if len(self.slopes) != len(self.breakpoints) + 1:
                raise ValueError("need len(slopes) == len(breakpoints) + 1")
            if list(self.breakpoints) != sorted(self.breakpoints):
                raise ValueError("breakpoints must be increasing")
            object.__setattr__(self, "breakpoints", tuple(map(float, self.breakpoints)))
            object.__setattr__(self, "slopes", tuple(map(float, self.slopes)))

    # -- constructors --------------------------------------------------

    @staticmethod
    def zero() -> "NonlinearitySpec":
        return NonlinearitySpec(kind="zero", lip_hat=0.0)

    @staticmethod
    def polynomial(coeffs, smallness: str = "local") -> "NonlinearitySpec":
        return NonlinearitySpec(kind="polynomial", coeffs=tuple(map(tuple, coeffs)),
                                smallness=smallness)

    @staticmethod
    def cubic(c: float, n: int = 1) -> "NonlinearitySpec":
        return NonlinearitySpec.polynomial([(0.0, 0.0, 0.0, c)] * n)

    @staticmethod
    def piecewise(breakpoints, slopes) -> "NonlinearitySpec":
        slopes = tuple(map(float, slopes))
        return NonlinearitySpec(
            kind="piecewise_linear",
            breakpoints=tuple(map(float, breakpoints)),
            slopes=slopes,
            lip_hat=max(abs(s) for s in slopes),
            smallness="global",
        )

    # -- evaluation ------------------------------------------------------

    @property
    def degree(self) -> int:
        if self.kind != "polynomial":
            raise ValueError("degree only defined for polynomials")
        deg = 0
        for row in self.coeffs:
            nz = [p for p, c in enumerate(row) if c != 0.0]
            deg = max(deg, max(nz) if nz else 0)
        return deg

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "polynomial":
            out = np.zeros_like(x)
            for c, row in enumerate(self.coeffs):
                if len(row) == 0:
                    continue
                xc = x[..., c]
                acc = np.zeros_like(xc)
                for p in range(len(row) - 1, -1, -1):
                    acc = acc * xc + row[p]
                out[..., c] = acc
            return out
        if self.kind == "callable":
            return np.asarray(self.fn(x))
        return self._piecewise_eval(x)

    def _piecewise_eval(self, x: np.ndarray) -> np.ndarray:
        # left-continuous: x == b evaluates on the segment left of b
        breaks = np.asarray(self.breakpoints)
        slopes = np.asarray(self.slopes)
        if len(breaks) == 0:
            return slopes[0] * x
        knots = np.zeros(len(breaks))
        for i in range(1, len(breaks)):
            knots[i] = knots[i - 1] + slopes[i] * (breaks[i] - breaks[i - 1])

        def raw(z):
            seg = np.searchsorted(breaks, z, side="left")
            a = np.maximum(seg - 1, 0)
            return knots[a] + slopes[seg] * (z - breaks[a])

        return raw(x) - raw(np.zeros(1))[0]

    def lipschitz_on_ball(self, radius: float) -> float:
        """Upper bound for Lip(g-hat) on {|x_c| <= radius}."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "polynomial":
            worst = 0.0
            for row in self.coeffs:
                bound = sum(
                    p * abs(c) * radius ** (p - 1) for p, c in enumerate(row) if p >= 1
                )
                worst = max(worst, bound)
            return worst
        if self.kind == "piecewise_linear":
            return max(abs(s) for s in self.slopes)
        if self.lip_hat is not None:
            return self.lip_hat
        return math.inf


def compose(u: FourierField, g: NonlinearitySpec) -> FourierField:
    """Pseudo-spectral composition: analyze(g(synthesize(u))).

    Polynomial kinds pad the grid to the exact alias-free size for their
    degree; other kinds use the declared oversample factor.  Real symmetry
    is preserved because g is evaluated on the (real) grid values.
    """
    lat = u.lattice
    if g.kind == "zero":
        return FourierField.zeros(lat)
    if g.kind == "polynomial":
        grid = dealias_grid(lat, degree=max(g.degree, 1))
    else:
        grid = default_grid(lat, oversample=g.oversample)
    vals = synthesize(u, grid)
    if u.hermitian_defect() <= 1e-9 * (1.0 + u.max_abs()):
        gv = g(vals.real)
    else:
        if g.kind == "piecewise_linear":
            raise ValueError("piecewise-linear composition needs a real-symmetric field")
        gv = g(vals)
    gv = np.asarray(gv, dtype=complex)
    if not np.all(np.isfinite(gv)):
        raise FloatingPointError("nonlinearity returned non-finite grid values")
    return analyze(gv, lat)


# ---------------------------------------------------------------------------
# derivatives


def directional_derivative(u: FourierField, order: int = 1) -> FourierField:
    """(omega . d/dtheta)^order: multiply mode k by (i k.omega)^order."""
    mult = (1j * u.lattice.k_dot_omega()) ** order
    return FourierField(u.lattice, u.coeffs * mult[..., None])


def spatial_derivative(u: FourierField, order: int) -> FourierField:
    """d^order/dx^order on spatial lattices: multiply (k, j) by (i j)^order."""
    lat = u.lattice
    if not lat.has_space:
        raise ValueError("spatial derivative needs a spatial lattice")
    j = lat.axis_modes(lat.d).astype(float)
    mult = (1j * j) ** order
    shape = [1] * lat.n_axes + [1]
    shape[lat.d] = 2 * lat.J + 1
    return FourierField(lat, u.coeffs * mult.reshape(shape))


def apply_multiplier(u: FourierField, mult: np.ndarray) -> FourierField:
    """Scalar Fourier multiplier: coefficient-wise product over the modes."""
    mult = np.asarray(mult)
    if mult.shape != u.lattice.mode_shape:
        raise ValueError("multiplier shape does not match lattice")
    return FourierField(u.lattice, u.coeffs * mult[..., None])


# ---------------------------------------------------------------------------
# diagnostics


def cauchy_decay_fit(u: FourierField, floor: float = 0.0) -> tuple[float, float]:
    """Least-squares fit of |u_k| <= M e^{-rho |k|}; returns (M, rho_est).

    Fits log|u_k| against |k|_1 over nonzero modes.  Needs at least three
    contributing modes.
    """
    mag = np.sqrt(np.sum(np.abs(u.coeffs) ** 2, axis=-1)).ravel()
    l1 = u.lattice.k_l1().ravel()
    keep = mag > max(floor, 0.0)
    if np.count_nonzero(keep) < 3:
        raise ValueError("need at least 3 nonzero modes for a decay fit")
    y = np.log(mag[keep])
    x = l1[keep]
    slope, intercept = np.polyfit(x, y, 1)
    return float(np.exp(intercept)), float(-slope)


def composition_aliasing_estimate(u: FourierField, g: NonlinearitySpec) -> float:
    """Residual aliasing of a pseudo-spectral composition.

    Compares the composition against the same computation on a doubled
    grid; exact (polynomial) dealiasing returns roundoff.
    """
    if g.kind == "zero":
        return 0.0
    base = compose(u, g)
    grid = tuple(2 * s for s in (
        dealias_grid(u.lattice, degree=max(g.degree, 1))
        if g.kind == "polynomial" else default_grid(u.lattice, g.oversample)
    ))
    vals = synthesize(u, grid)
    if u.hermitian_defect() <= 1e-9 * (1.0 + u.max_abs()):
        vals = vals.real
    refined = analyze(np.asarray(g(vals), dtype=complex), u.lattice)
    return float(np.max(np.abs(base.coeffs - refined.coeffs)))


def truncation_tail_norm(f: FourierField, spec: NormSpec, margin: int = 1) -> float:
    """Weighted norm of the outermost shells: a finite-cutoff diagnostic."""
    lat = f.lattice
    linf = np.zeros(lat.mode_shape)
    for axis in range(lat.n_axes):
        cut = lat.K if axis < lat.d else lat.J
        shape = [1] * lat.n_axes
        shape[axis] = 2 * cut + 1
        frac = np.abs(lat.axis_modes(axis)) / cut
        linf = np.maximum(linf, frac.reshape(shape))
    cutfrac = 1.0 - margin / max(lat.K, 1)
    mask = (linf >= cutfrac)[..., None]
    tail = FourierField(lat, np.where(mask, f.coeffs, 0.0))
    return norm(tail, spec)
