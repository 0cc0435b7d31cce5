"""Dirichlet-Neumann operator via the flattened-strip elliptic problem.

Two exact geometries are supported, both mapping the fluid layer onto the
strip z in [-1, 0] where the transformed potential v solves a
variable-coefficient elliptic equation with v = psi at z = 0:

* ``flat_bottom(h0)``: layer between y = -h0 and y = eta(x), lifted by
  rho(x, z) = (1+z) eta(x) + z h0; physical Neumann bottom gives
  dv/dz = 0 at z = -1.
* ``parallel_strip(h)``: layer between y = eta(x) - h and y = eta(x),
  lifted by rho(x, z) = h z + eta(x); the bottom moves with eta and its
  Neumann condition reads (1 + eta_x^2) dv/dz = h eta_x dv/dx at z = -1.

Discretization: Fourier collocation in x, Chebyshev collocation in z.
The solver is matrix-free GMRES preconditioned by the per-frequency
factorization of the flat-interface operator, with iterative refinement;
a dense assembly of the same discrete operator is kept as an oracle path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import Field, dealiased_product, sobolev_norm, x_derivative

__all__ = [
    "Geometry",
    "CoordinateMap",
    "StripSolution",
    "GeometryError",
    "SolverError",
    "coordinate_map",
    "solve_strip",
    "dirichlet_neumann",
    "compute_B_V",
    "shape_derivative",
    "cancellation_residual",
    "flat_dn_multiplier",
]


class GeometryError(ValueError):
    """Degenerate fluid layer or invalid geometry parameters."""


class SolverError(RuntimeError):
    """Elliptic solve failed to reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class Geometry:
    """Fluid-layer geometry plus the physical constants g and kappa."""

    kind: str  # "flat_bottom" | "parallel_strip"
    depth: float  # h0 for flat_bottom, strip thickness h for parallel_strip
    g: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.kind not in ("flat_bottom", "parallel_strip"):
            raise GeometryError(f"unknown geometry kind {self.kind!r}")
        if self.depth <= 0:
            raise GeometryError("layer depth must be positive")
        if self.g < 0:
            raise GeometryError("gravity must be nonnegative")
        if self.kappa < 0:
            raise GeometryError("surface tension must be nonnegative")


def chebyshev(nz: int):
    """Chebyshev-Gauss-Lobatto nodes on [-1, 0] (z[0]=0, z[-1]=-1) and D_z."""
    if nz < 8:
        raise ValueError("need at least 8 collocation points in z")
    m = nz - 1
    s = np.cos(np.pi * np.arange(nz) / m)  # [1, ..., -1]
    c = np.hstack([2.0, np.ones(m - 1), 2.0]) * (-1.0) ** np.arange(nz)
    ds = np.subtract.outer(s, s) + np.eye(nz)
    d = np.outer(c, 1.0 / c) / ds
    d -= np.diag(d.sum(axis=1))
    # map s in [-1,1] -> z = (s-1)/2 in [-1,0]:  d/dz = 2 d/ds
    return (s - 1.0) / 2.0, 2.0 * d


def _dx(arr: np.ndarray, xi: np.ndarray, order: int) -> np.ndarray:
    """Spectral x-derivative along the last axis (Nyquist zeroed when odd)."""
    sym = (1j * xi) ** order
    if order % 2 == 1:
        sym = sym.copy()
        sym[len(xi) // 2] = 0.0
    out = np.fft.ifft(np.fft.fft(arr, axis=-1) * sym, axis=-1)
    return out.real if np.isrealobj(arr) else out


@dataclass
class CoordinateMap:
    """Lifting rho(x, z) of the strip onto the fluid layer, with gradients."""

    rho: np.ndarray  # (nz, n)
    dz_rho: np.ndarray  # (nz, n), positive
    dx_rho: np.ndarray  # (nz, n)
    z: np.ndarray
    eta: Field
    bottom: np.ndarray  # elevation of the lower boundary

    def validate(self) -> None:
        if np.min(self.dz_rho) <= 0:
            raise GeometryError(
                f"coordinate map degenerate: min dz_rho = {np.min(self.dz_rho):.3e}")
        surf = np.max(np.abs(self.rho[0] - self.eta.values.real))
        bot = np.max(np.abs(self.rho[-1] - self.bottom))
        if surf > 1e-12 or bot > 1e-12:
            raise GeometryError("coordinate map does not match the boundaries")


def coordinate_map(eta: Field, geo: Geometry, nz: int) -> CoordinateMap:
    """The lifting used by the solver: affine in z for both geometries."""
    z, _ = chebyshev(nz)
    ex = eta.values.real
    zc = z[:, None]
    if geo.kind == "flat_bottom":
        rho = (1.0 + zc) * ex[None, :] + zc * geo.depth
        dz_rho = np.broadcast_to((ex + geo.depth)[None, :], rho.shape).copy()
        dx_rho = (1.0 + zc) * x_derivative(eta).values.real[None, :]
        bottom = np.full(eta.grid.n, -geo.depth)
    else:
        rho = geo.depth * zc + ex[None, :]
        dz_rho = np.full(rho.shape, geo.depth)
        dx_rho = np.broadcast_to(x_derivative(eta).values.real[None, :],
                                 rho.shape).copy()
        bottom = ex - geo.depth
    cmap = CoordinateMap(rho, dz_rho, dx_rho, z, eta, bottom)
    cmap.validate()
    return cmap


class _StripOperator:
    """Collocation form of the flattened elliptic operator for one eta."""

    def __init__(self, eta: Field, geo: Geometry, nz: int):
        grid = eta.grid
        self.grid = grid
        self.geo = geo
        self.nz = nz
        self.z, self.Dz = chebyshev(nz)
        self.Dz2 = self.Dz @ self.Dz
        self._sym1 = (1j * grid.xi).copy()
        self._sym1[grid.n // 2] = 0.0
        self._sym2 = -grid.xi**2
        ex = eta.values.real
        ex1 = x_derivative(eta).values.real
        self.eta_x = ex1

        zc = self.z[:, None]  # (nz, 1)
        if geo.kind == "flat_bottom":
            depth = geo.depth + ex  # dz rho, z-independent
            if np.min(depth) <= 0:
                raise GeometryError(
                    f"fluid layer degenerate: min(h0 + eta) = {np.min(depth):.3e}"
                )
            b = ex1 / depth
            bp = _dx(b[None, :], grid.xi, 1)[0]
            self.czz = 1.0 / depth[None, :] ** 2 + (1.0 + zc) ** 2 * b[None, :] ** 2
            self.cxz = -2.0 * (1.0 + zc) * b[None, :]
            self.cz = (1.0 + zc) * (b[None, :] ** 2 - bp[None, :])
            self.dz_rho_surface = depth
        else:  # parallel_strip
            h = geo.depth
            ex2 = x_derivative(eta, 2).values.real
            ones = np.ones((nz, 1))
            self.czz = ones * ((1.0 + ex1**2) / h**2)[None, :]
            self.cxz = ones * (-2.0 * ex1 / h)[None, :]
            self.cz = ones * (-ex2 / h)[None, :]
            self.dz_rho_surface = np.full(grid.n, h)

    # -- operator application (interior rows + BC rows substituted) ------
    def apply(self, v: np.ndarray) -> np.ndarray:
        real_in = np.isrealobj(v)
        vz = self.Dz @ v
        vzz = self.Dz2 @ v
        # one forward transform serves both x-derivatives
        vh = np.fft.fft(v, axis=-1)
        vx = np.fft.ifft(vh * self._sym1, axis=-1)
        vxx = np.fft.ifft(vh * self._sym2, axis=-1)
        if real_in:
            vx = vx.real
            vxx = vxx.real
        out = self.czz * vzz + vxx + self.cxz * (self.Dz @ vx) + self.cz * vz
        out[0, :] = v[0, :]
        if self.geo.kind == "flat_bottom":
            out[-1, :] = vz[-1, :]
        else:
            out[-1, :] = (1.0 + self.eta_x**2) * vz[-1, :] - self.geo.depth * self.eta_x * vx[-1, :]
        return out

    def rhs(self, psi: Field) -> np.ndarray:
        b = np.zeros((self.nz, self.grid.n), dtype=psi.values.dtype)
        b[0, :] = psi.values
        return b

    def dense_matrix(self) -> np.ndarray:
        """Dense assembly of the same discrete operator (oracle path)."""
        grid, nz = self.grid, self.nz
        n = grid.n
        eye_f = np.eye(n)
        fx = np.fft.fft(eye_f, axis=0)
        sym1 = (1j * grid.xi).copy()
        sym1[n // 2] = 0.0
        Dx = np.fft.ifft(sym1[:, None] * fx, axis=0).real
        Dx2 = np.fft.ifft((-(grid.xi**2))[:, None] * fx, axis=0).real
        A = (
            np.diag(self.czz.ravel()) @ np.kron(self.Dz2, eye_f)
            + np.kron(np.eye(nz), Dx2)
            + np.diag(self.cxz.ravel()) @ np.kron(self.Dz, Dx)
            + np.diag(self.cz.ravel()) @ np.kron(self.Dz, eye_f)
        )
        # boundary rows
        for j in range(n):
            A[j, :] = 0.0
            A[j, j] = 1.0
        bot = (nz - 1) * n
        zrow = np.kron(self.Dz[-1, :], eye_f)  # (n, nz*n)
        if self.geo.kind == "flat_bottom":
            A[bot:, :] = zrow
        else:
            xrow = np.kron(np.eye(nz)[-1, :], Dx)
            A[bot:, :] = (1.0 + self.eta_x**2)[:, None] * zrow \
                - self.geo.depth * self.eta_x[:, None] * xrow
        return A


# flat-interface preconditioner, cached per (grid, nz, geometry) -----------
_PRECOND_CACHE: dict = {}


def _flat_preconditioner(grid, nz, geo):
    """Stacked inverses of the per-mode flat operators, shape (n, nz, nz)."""
    key = (grid.n, grid.length, nz, geo.kind, geo.depth)
    hit = _PRECOND_CACHE.get(key)
    if hit is not None:
        return hit
    _, Dz = chebyshev(nz)
    Dz2 = Dz @ Dz
    czz0 = 1.0 / geo.depth**2
    mats = np.empty((grid.n, nz, nz))
    base = czz0 * Dz2
    base[0, :] = 0.0
    base[0, 0] = 0.0
    base[-1, :] = Dz[-1, :]
    interior = np.zeros((nz, nz))
    interior[1:-1, 1:-1] = np.eye(nz - 2)
    top = np.zeros((nz, nz))
    top[0, 0] = 1.0
    for k in range(grid.n):
        mats[k] = base - grid.xi[k] ** 2 * interior + top
    inv = np.linalg.inv(mats)
    _PRECOND_CACHE[key] = inv
    return inv


def _apply_preconditioner(inv, w: np.ndarray) -> np.ndarray:
    wh = np.fft.fft(w, axis=-1)
    # batched per-mode solves; real and imaginary parts separately so the
    # stacked real inverses are applied without dtype promotion copies
    cols = np.ascontiguousarray(wh.T)
    re = np.matmul(inv, cols.real[:, :, None])[:, :, 0]
    im = np.matmul(inv, cols.imag[:, :, None])[:, :, 0]
    out = np.fft.ifft((re + 1j * im).T, axis=-1)
    return out.real if np.isrealobj(w) else out


@dataclass
class StripSolution:
    """Lifted potential v(x, z) on the flattened strip with its residual.

    ``residual`` is measured on the flat-preconditioned (row-equilibrated)
    system, which is the error-equivalent metric; the raw collocation
    residual carries the nz^4 conditioning of the Chebyshev second
    derivative and is kept in ``residual_raw``.
    """

    v: np.ndarray  # (nz, n), v[0] is the surface row z = 0
    z: np.ndarray
    grid: "object"
    geo: Geometry
    eta: Field
    psi: Field
    residual: float
    operator: _StripOperator
    residual_raw: float = 0.0

    def coordinates(self) -> CoordinateMap:
        return coordinate_map(self.eta, self.geo, len(self.z))

    def surface_dz(self) -> np.ndarray:
        return (self.operator.Dz @ self.v)[0, :]

    def trace_dn(self) -> Field:
        """(1+eta_x^2)/dz_rho * dv/dz - eta_x * dv/dx at z = 0."""
        op = self.operator
        vz0 = self.surface_dz()
        vx0 = _dx(self.v, self.grid.xi, 1)[0, :]
        g = (1.0 + op.eta_x**2) / op.dz_rho_surface * vz0 - op.eta_x * vx0
        return Field(self.grid, g)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,z,v\n")
            for iz, zz in enumerate(self.z):
                for jx, xx in enumerate(self.grid.x):
                    fh.write(f"{xx:.17g},{zz:.17g},{self.v[iz, jx]:.17g}\n")


def solve_strip(
    eta: Field,
    psi: Field,
    geo: Geometry,
    nz: int,
    tol: float = 1e-12,
    method: str = "gmres",
    maxiter: int = 150,
) -> StripSolution:
    """Solve the flattened strip problem for the potential v with v|_{z=0}=psi."""
    if eta.grid != psi.grid:
        raise ValueError("eta and psi must live on the same grid")
    if nz < 8:
        raise ValueError("nz must be at least 8")
    op = _StripOperator(eta, geo, nz)
    b = op.rhs(psi)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return StripSolution(np.zeros_like(b), op.z, eta.grid, geo, eta, psi, 0.0, op)

    if method == "dense":
        A = op.dense_matrix()
        v = np.linalg.solve(A, b.ravel()).reshape(nz, eta.grid.n)
    elif method == "gmres":
        v = _gmres_solve(op, b, tol, maxiter)
    else:
        raise ValueError(f"unknown solve method {method!r}")

    inv = _flat_preconditioner(eta.grid, nz, geo)
    raw = op.apply(v) - b
    res_raw = np.linalg.norm(raw) / bnorm
    res = np.linalg.norm(_apply_preconditioner(inv, raw)) \
        / np.linalg.norm(_apply_preconditioner(inv, b))
    if res > max(tol * 100, 1e-10):
        raise SolverError(
            f"strip solve residual {res:.3e} above tolerance (method={method})",
            residual=res,
        )
    return StripSolution(v, op.z, eta.grid, geo, eta, psi, res, op, res_raw)


def _gmres_solve(op: _StripOperator, b: np.ndarray, tol: float, maxiter: int) -> np.ndarray:
    grid, nz = op.grid, op.nz
    shape = (nz, grid.n)
    inv = _flat_preconditioner(grid, nz, op.geo)

    def apply_a(w):
        return op.apply(w.reshape(shape)).ravel()

    def apply_m(w):
        return _apply_preconditioner(inv, w.reshape(shape)).ravel()

    mb_norm = np.linalg.norm(apply_m(b.ravel()))
    v = np.zeros(b.size, dtype=b.dtype)
    r = b.ravel().copy()
    # full GMRES plus iterative refinement on the preconditioned residual
    for _ in range(3):
        v = v + _pgmres(apply_a, apply_m, r, 0.2 * tol, maxiter)
        r = b.ravel() - apply_a(v)
        if np.linalg.norm(apply_m(r)) <= tol * mb_norm:
            break
    return v.reshape(shape)


def _pgmres(apply_a, apply_m, b, rtol, maxiter):
    """Left-preconditioned full GMRES with Givens rotations."""
    z0 = apply_m(b)
    beta = np.linalg.norm(z0)
    if beta == 0:
        return np.zeros_like(b)
    dtype = complex if np.iscomplexobj(z0) else float
    m = min(maxiter, b.size)
    basis = np.empty((m + 1, b.size), dtype=dtype)
    basis[0] = z0 / beta
    h = np.zeros((m + 1, m), dtype=dtype)
    cs = np.zeros(m, dtype=dtype)
    sn = np.zeros(m, dtype=dtype)
    g = np.zeros(m + 1, dtype=dtype)
    g[0] = beta
    k_used = 0
    for k in range(m):
        w = apply_m(apply_a(basis[k]))
        # modified Gram-Schmidt with one reorthogonalization pass
        for i in range(k + 1):
            h[i, k] = np.vdot(basis[i], w)
            w -= h[i, k] * basis[i]
        for i in range(k + 1):
            corr = np.vdot(basis[i], w)
            h[i, k] += corr
            w -= corr * basis[i]
        hk1 = np.linalg.norm(w)
        if k + 1 <= m and hk1 > 0:
            basis[k + 1] = w / hk1
        h[k + 1, k] = hk1
        # previously accumulated rotations
        for i in range(k):
            tmp = cs[i] * h[i, k] + sn[i] * h[i + 1, k]
            h[i + 1, k] = -np.conj(sn[i]) * h[i, k] + np.conj(cs[i]) * h[i + 1, k]
            h[i, k] = tmp
        a, bb = h[k, k], h[k + 1, k]
        r = np.hypot(abs(a), abs(bb))
        if r == 0:
            k_used = k
            break
        cs[k] = np.conj(a) / r
        sn[k] = np.conj(bb) / r
        h[k, k] = r
        h[k + 1, k] = 0.0
        g[k + 1] = -np.conj(sn[k]) * g[k]
        g[k] = cs[k] * g[k]
        k_used = k + 1
        if abs(g[k + 1]) <= rtol * beta or hk1 == 0:
            break
    if k_used == 0:
        return np.zeros_like(b)
    y = np.linalg.solve(h[:k_used, :k_used], g[:k_used])
    return (y[:, None] * basis[:k_used]).sum(axis=0)


def dirichlet_neumann(eta: Field, psi: Field, geo: Geometry, nz: int,
                      tol: float = 1e-12, method: str = "gmres") -> Field:
    """G(eta)psi: the scaled normal derivative of the lifted potential."""
    return solve_strip(eta, psi, geo, nz, tol=tol, method=method).trace_dn()


def flat_dn_multiplier(geo: Geometry, xi: np.ndarray) -> np.ndarray:
    """Flat-interface symbol |xi| tanh(depth |xi|) of G(0)."""
    return np.abs(xi) * np.tanh(geo.depth * np.abs(xi))


def compute_B_V(eta: Field, psi: Field, g_psi: Field) -> tuple[Field, Field]:
    """Vertical and horizontal velocity traces B and V at the surface."""
    ex = x_derivative(eta)
    px = x_derivative(psi)
    num = dealiased_product(ex, px) + g_psi
    b_field = Field(eta.grid, num.values / (1.0 + ex.values**2))
    v_field = px - dealiased_product(b_field, ex)
    return b_field, v_field


def shape_derivative(eta: Field, psi: Field, h_dir: Field, geo: Geometry,
                     nz: int, tol: float = 1e-12) -> Field:
    """Derivative of eta -> G(eta)psi in the direction h_dir (fixed bottom).

    Only meaningful for flat_bottom: for the parallel strip the bottom moves
    with eta and the fixed-bottom formula does not apply.
    """
    if geo.kind != "flat_bottom":
        raise GeometryError("shape derivative requires a fixed bottom (flat_bottom)")
    g_psi = dirichlet_neumann(eta, psi, geo, nz, tol=tol)
    b_field, v_field = compute_B_V(eta, psi, g_psi)
    bh = dealiased_product(b_field, h_dir)
    vh = dealiased_product(v_field, h_dir)
    return -dirichlet_neumann(eta, bh, geo, nz, tol=tol) - x_derivative(vh)


def cancellation_residual(eta: Field, psi: Field, geo: Geometry, nz: int,
                          tol: float = 1e-12) -> float:
    """L^2 size of G(eta)B + d/dx V, which vanishes in the continuum limit."""
    if geo.kind != "flat_bottom":
        raise GeometryError("cancellation identity requires a fixed bottom")
    g_psi = dirichlet_neumann(eta, psi, geo, nz, tol=tol)
    b_field, v_field = compute_B_V(eta, psi, g_psi)
    g_b = dirichlet_neumann(eta, b_field, geo, nz, tol=tol)
    return sobolev_norm(g_b + x_derivative(v_field), 0.0)
