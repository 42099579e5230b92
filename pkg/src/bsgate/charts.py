"""Grid-sampled slope functions and their contact-geometry sign checks.

Charts come in three kinds.  A box chart samples f(x, y, z) on
[-1, 1]^3; the plane field is the kernel of dz + f dx, so confoliation
and contact are sign conditions on df/dy.  A cylinder chart samples
f(r, theta, z) on [0, R] x [0, 2pi) x [-1, 1] together with the reduced
function h (f = r^2 h), stored explicitly so the axis never divides
0/0; here the signs of df/dr and of h on the axis decide.  An annulus
chart samples f(theta, z) and feeds the leaf integrator.

Theta is sampled half-open, so periodicity is structural: the theta=2pi
column is never stored.  All operations are pure; grids are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ChartError

BOX = "box"
CYLINDER = "cylinder"
ANNULUS = "annulus"

INNER_CONTACT = "inner"
OUTER_CONTACT = "outer"

TWO_PI = 2.0 * math.pi
DEFAULT_TOL = 1e-9

# fraction of the blend slope carried by the linear term; keeps the
# purified profile strictly decreasing where the smooth term flattens
_MU = 0.1


@dataclass(frozen=True)
class SlopeGrid:
    """One chart's worth of slope-function samples.

    bounds is () for box and annulus charts (their domains are fixed)
    and (R,) for a cylinder of radius R.  values is indexed in axis
    order: (x, y, z), (r, theta, z), or (theta, z).
    """

    kind: str
    bounds: tuple[float, ...]
    values: np.ndarray
    h: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.kind not in (BOX, CYLINDER, ANNULUS):
            raise ChartError(f"unknown chart kind: {self.kind!r}")
        vals = np.array(self.values, dtype=float)
        want = 2 if self.kind == ANNULUS else 3
        if vals.ndim != want:
            raise ChartError(
                f"{self.kind} grid needs a {want}-dimensional sample array, "
                f"got {vals.ndim} dimensions")
        if min(vals.shape) < 2:
            raise ChartError("each axis needs at least 2 samples")
        if self.kind == CYLINDER:
            if len(self.bounds) != 1 or self.bounds[0] <= 0:
                raise ChartError("cylinder grid needs a positive radial "
                                 "bound (R,)")
        elif self.bounds != ():
            raise ChartError(f"{self.kind} grid takes no bounds")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.h is not None:
            if self.kind != CYLINDER:
                raise ChartError("only cylinder grids carry h")
            hv = np.array(self.h, dtype=float)
            if hv.shape != vals.shape:
                raise ChartError("h samples must match f in shape")
            hv.setflags(write=False)
            object.__setattr__(self, "h", hv)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def axes(self) -> tuple[np.ndarray, ...]:
        """Sample coordinates along each axis, in index order."""
        if self.kind == BOX:
            nx, ny, nz = self.shape
            return (np.linspace(-1.0, 1.0, nx), np.linspace(-1.0, 1.0, ny),
                    np.linspace(-1.0, 1.0, nz))
        if self.kind == CYLINDER:
            nr, nth, nz = self.shape
            return (np.linspace(0.0, self.bounds[0], nr),
                    np.arange(nth) * (TWO_PI / nth),
                    np.linspace(-1.0, 1.0, nz))
        nth, nz = self.shape
        return (np.arange(nth) * (TWO_PI / nth), np.linspace(-1.0, 1.0, nz))

    def spacings(self) -> tuple[float, ...]:
        if self.kind == BOX:
            nx, ny, nz = self.shape
            return (2.0 / (nx - 1), 2.0 / (ny - 1), 2.0 / (nz - 1))
        if self.kind == CYLINDER:
            nr, nth, nz = self.shape
            return (self.bounds[0] / (nr - 1), TWO_PI / nth, 2.0 / (nz - 1))
        nth, nz = self.shape
        return (TWO_PI / nth, 2.0 / (nz - 1))


def sample_box(fn: Callable, shape: tuple[int, int, int] = (65, 65, 65),
               ) -> SlopeGrid:
    x = np.linspace(-1.0, 1.0, shape[0])
    y = np.linspace(-1.0, 1.0, shape[1])
    z = np.linspace(-1.0, 1.0, shape[2])
    xx, yy, zz = np.meshgrid(x, y, z, indexing="ij")
    vals = np.broadcast_to(np.asarray(fn(xx, yy, zz), float), xx.shape)
    return SlopeGrid(BOX, (), vals.copy())


def sample_cylinder(fn: Callable, shape: tuple[int, int, int] = (65, 64, 65),
                    radius: float = 1.0,
                    h_fn: Optional[Callable] = None) -> SlopeGrid:
    r = np.linspace(0.0, radius, shape[0])
    th = np.arange(shape[1]) * (TWO_PI / shape[1])
    z = np.linspace(-1.0, 1.0, shape[2])
    rr, tt, zz = np.meshgrid(r, th, z, indexing="ij")
    vals = np.broadcast_to(np.asarray(fn(rr, tt, zz), float), rr.shape)
    h = None
    if h_fn is not None:
        h = np.broadcast_to(np.asarray(h_fn(rr, tt, zz), float),
                            rr.shape).copy()
    return SlopeGrid(CYLINDER, (radius,), vals.copy(), h)


def sample_annulus(fn: Callable, shape: tuple[int, int] = (64, 65),
                   ) -> SlopeGrid:
    th = np.arange(shape[0]) * (TWO_PI / shape[0])
    z = np.linspace(-1.0, 1.0, shape[1])
    tt, zz = np.meshgrid(th, z, indexing="ij")
    vals = np.broadcast_to(np.asarray(fn(tt, zz), float), tt.shape)
    return SlopeGrid(ANNULUS, (), vals.copy())


@dataclass(frozen=True)
class ChartReport:
    """Outcome of a per-cell sign check.

    max_violation is the largest positive excess over the confoliation
    condition (0.0 when the condition holds everywhere), so
    is_confoliation implies max_violation <= tol.
    """

    is_confoliation: bool
    contact_mask: np.ndarray
    max_violation: float
    tol: float

    @property
    def is_contact(self) -> bool:
        return bool(self.contact_mask.all())


def _expect(grid: SlopeGrid, kind: str, what: str) -> None:
    if grid.kind != kind:
        raise ChartError(f"{what} needs a {kind} grid, got {grid.kind}")


def check_box(grid: SlopeGrid, tol: float = DEFAULT_TOL) -> ChartReport:
    """Confoliation/contact sign check for dz + f dx on a box.

    Confoliation holds when the finite-difference df/dy never exceeds
    tol; the contact mask marks cells where it is below -tol.
    """
    _expect(grid, BOX, "check_box")
    if grid.shape[1] < 3:
        raise ChartError("check_box needs at least 3 samples along y")
    dy = grid.spacings()[1]
    dfdy = np.gradient(grid.values, dy, axis=1, edge_order=1)
    max_violation = max(float(dfdy.max()), 0.0)
    return ChartReport(is_confoliation=bool(max_violation <= tol),
                       contact_mask=dfdy < -tol,
                       max_violation=max_violation, tol=tol)


def contact_oracle_box(grid: SlopeGrid) -> np.ndarray:
    """Volume-form coefficient of w ^ dw for w = dz + f dx, per cell.

    Assembles the full triple product for a general 1-form
    a dx + b dy + c dz from finite differences of every component, with
    a = f, b = 0, c = 1, instead of reading off -df/dy directly.  The
    cancellations are left to the arithmetic, so this is an independent
    code path against check_box: analytically the coefficient equals
    -df/dy, and a positive coefficient means positive contact.
    """
    _expect(grid, BOX, "contact_oracle_box")
    if min(grid.shape) < 3:
        raise ChartError("contact_oracle_box needs at least 3 samples "
                         "per axis")
    dx, dy, dz = grid.spacings()
    a = grid.values
    b = np.zeros_like(a)
    c = np.ones_like(a)
    ay = np.gradient(a, dy, axis=1, edge_order=2)
    az = np.gradient(a, dz, axis=2, edge_order=2)
    bx = np.gradient(b, dx, axis=0, edge_order=2)
    bz = np.gradient(b, dz, axis=2, edge_order=2)
    cx = np.gradient(c, dx, axis=0, edge_order=2)
    cy = np.gradient(c, dy, axis=1, edge_order=2)
    return a * (cy - bz) - b * (cx - az) + c * (bx - ay)


def check_cylinder(grid: SlopeGrid, tol: float = DEFAULT_TOL) -> ChartReport:
    """Cylinder-chart check: f = r^2 h, df/dr signs, and the axis.

    Confoliation needs |f - r^2 h| <= tol everywhere and df/dr <= tol
    off the axis.  The contact mask uses df/dr < -tol off the axis and
    h < -tol on it (the slope degenerates at r = 0, h carries the sign
    there).
    """
    _expect(grid, CYLINDER, "check_cylinder")
    if grid.h is None:
        raise ChartError("check_cylinder needs the reduced samples h")
    if grid.shape[0] < 3:
        raise ChartError("check_cylinder needs at least 3 samples along r")
    r = grid.axes()[0][:, None, None]
    dr = grid.spacings()[0]
    residual = float(np.abs(grid.values - r * r * grid.h).max())
    dfdr = np.gradient(grid.values, dr, axis=0, edge_order=1)
    off_axis_excess = float(dfdr[1:].max())
    max_violation = max(0.0, residual, off_axis_excess)
    contact = np.empty(grid.shape, dtype=bool)
    contact[1:] = dfdr[1:] < -tol
    contact[0] = grid.h[0] < -tol
    return ChartReport(is_confoliation=bool(max_violation <= tol),
                       contact_mask=contact,
                       max_violation=max_violation, tol=tol)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _cell(where: np.ndarray) -> tuple[int, ...]:
    return tuple(int(i) for i in np.argwhere(where)[0])


def purify_box(grid: SlopeGrid, y0: float, y1: float, delta: float,
               tol: float = DEFAULT_TOL) -> SlopeGrid:
    """Make a box confoliation contact on {|x| < 1-delta, |z| < 1}.

    The input must be a confoliation that is already contact on
    {y > y0, |z| < 1} with f(x, y1, z) < f(x, -y1, z); the output blends
    f below y1 toward a strictly y-decreasing profile between those two
    sample sheets, windowed so the samples on {|x| >= 1-delta},
    {y >= y1} and {|z| = 1} are returned bit-identical.
    """
    _expect(grid, BOX, "purify_box")
    if not 0.0 < y0 < y1 < 1.0:
        raise ChartError("need 0 < y0 < y1 < 1")
    if not 0.0 < delta < 1.0:
        raise ChartError("need 0 < delta < 1")
    report = check_box(grid, tol)
    if not report.is_confoliation:
        raise ChartError("precondition failed: input is not a confoliation "
                         f"(violation {report.max_violation:.3e})")
    x, y, z = grid.axes()
    dy = grid.spacings()[1]
    j1 = int(round((y1 + 1.0) / dy))
    jm1 = int(round((1.0 - y1) / dy))
    if abs(y[j1] - y1) > 1e-9 or abs(y[jm1] + y1) > 1e-9:
        raise ChartError("y1 must lie on the sample grid")
    inner_z = np.zeros_like(z, dtype=bool)
    inner_z[1:-1] = True
    needed = ((y[None, :, None] > y0) & inner_z[None, None, :]
              & ~report.contact_mask)
    if needed.any():
        i, j, k = _cell(needed)
        raise ChartError("precondition failed: not contact at cell "
                         f"({i}, {j}, {k}), y={y[j]:.6g}, z={z[k]:.6g}")
    f = grid.values
    a = f[:, jm1:jm1 + 1, :]  # values on the y = -y1 sheet
    b = f[:, j1:j1 + 1, :]    # values on the y = +y1 sheet
    if not (b < a).all():
        i, k = _cell((b >= a)[:, 0, :])
        raise ChartError("precondition failed: f(x, y1, z) < f(x, -y1, z) "
                         f"does not hold at x={x[i]:.6g}, z={z[k]:.6g}")
    yy = y[None, :, None]
    u = (yy + y1) / (2.0 * y1)  # 0 at -y1, 1 at +y1; linear tail below
    sigma = (1.0 - _MU) * _smoothstep(u) + _MU * u
    profile = a + (b - a) * sigma
    g = np.where(yy >= y[j1], f, profile)
    sx = _smoothstep((1.0 - delta - np.abs(x)) / (1.0 - delta))
    sz = _smoothstep(1.0 - np.abs(z))
    chi = sx[:, None, None] * sz[None, None, :]
    out = (1.0 - chi) * f + chi * g
    # coincidence strata, bit for bit
    keep_x = np.abs(x) >= 1.0 - delta
    out[keep_x, :, :] = f[keep_x, :, :]
    out[:, j1:, :] = f[:, j1:, :]
    out[:, :, 0] = f[:, :, 0]
    out[:, :, -1] = f[:, :, -1]
    return SlopeGrid(BOX, (), out)


def purify_cylinder(grid: SlopeGrid, r0: float, mode: str,
                    tol: float = DEFAULT_TOL) -> SlopeGrid:
    """Make a cylinder confoliation contact on all of {|z| < 1}.

    mode names the region where the input is already contact: "inner"
    for {r < r0, |z| < 1}, "outer" for {r > r0, |z| < 1}.  The rewrite
    is the same either way (the modes differ only in which precondition
    is enforced): away from z = +-1, f is pulled onto its running
    radial minimum minus a strictly decreasing paraboloid margin, which
    also pushes the axis values of h strictly negative.  The z = +-1
    slices are returned bit-identical; near r = R the output agrees
    with the input only up to the margin size.
    """
    _expect(grid, CYLINDER, "purify_cylinder")
    if mode not in (INNER_CONTACT, OUTER_CONTACT):
        raise ChartError(f"unknown purification mode: {mode!r}")
    radius = grid.bounds[0]
    if not 0.0 < r0 < radius:
        raise ChartError("need 0 < r0 < R")
    report = check_cylinder(grid, tol)
    if not report.is_confoliation:
        raise ChartError("precondition failed: input is not a confoliation "
                         f"(violation {report.max_violation:.3e})")
    if float(grid.h[0].max()) > tol:
        raise ChartError("precondition failed: h must be nonpositive on "
                         "the axis")
    r, _, z = grid.axes()
    rows = r < r0 if mode == INNER_CONTACT else r > r0
    inner_z = np.zeros_like(z, dtype=bool)
    inner_z[1:-1] = True
    needed = (rows[:, None, None] & inner_z[None, None, :]
              & ~report.contact_mask)
    if needed.any():
        i, j, k = _cell(needed)
        raise ChartError("precondition failed: not contact at cell "
                         f"({i}, {j}, {k}), r={r[i]:.6g}, z={z[k]:.6g}")
    f = grid.values
    dz = grid.spacings()[2]
    chi = _smoothstep((1.0 - np.abs(z)) / (2.0 * dz))[None, None, :]
    eps = 100.0 * tol * max(1.0, float(np.abs(f).max()))
    rr = (r / radius)[:, None, None]
    base = np.minimum.accumulate(f, axis=0) - eps * rr * rr
    out = (1.0 - chi) * f + chi * base
    hout = np.empty_like(out)
    r2 = (r[1:] ** 2)[:, None, None]
    hout[1:] = out[1:] / r2
    hout[0] = grid.h[0] - chi[0] * (eps / (radius * radius))
    out[:, :, 0] = f[:, :, 0]
    out[:, :, -1] = f[:, :, -1]
    hout[:, :, 0] = grid.h[:, :, 0]
    hout[:, :, -1] = grid.h[:, :, -1]
    return SlopeGrid(CYLINDER, (radius,), out, hout)


def extend_cell(boundary: SlopeGrid, r0: float, radius: float, nr: int,
                tol: float = DEFAULT_TOL) -> SlopeGrid:
    """Extend annulus boundary data radially into a full cylinder.

    Multiplies f(theta, z) by a C^1 radial ramp beta with beta = r^2/r0^2
    near the axis, strictly increasing on (0, r0), and identically 1
    from r0 outward — so the output agrees with the boundary data for
    r >= r0, is contact on {0 < r < r0, |z| < 1}, and has
    h(0) = f/r0^2 < 0 on the open interior.
    """
    _expect(boundary, ANNULUS, "extend_cell")
    if not 0.0 < r0 < radius:
        raise ChartError("need 0 < r0 < R")
    if nr < 3:
        raise ChartError("need at least 3 radial samples")
    f2 = boundary.values
    bad = f2[:, 1:-1] >= 0.0
    if bad.any():
        i, k = _cell(bad)
        raise ChartError("boundary slope must be strictly negative on "
                         f"|z| < 1 (cell ({i}, {k + 1}))")
    if float(np.abs(f2[:, [0, -1]]).max()) > tol:
        raise ChartError("boundary slope must vanish at z = +-1")
    r = np.linspace(0.0, radius, nr)
    half = r0 / 2.0
    t = (r - half) / half
    p = ((-t + 1.25) * t + 0.5) * t + 0.25  # Hermite: C^1 ramp 1/4 -> 1
    beta = np.where(r <= half, (r / r0) ** 2, np.where(r >= r0, 1.0, p))
    out = f2[None, :, :] * beta[:, None, None]
    h = np.empty_like(out)
    core = r <= half
    h[core] = np.broadcast_to(f2 / (r0 * r0), f2.shape)
    r2 = (r[~core] ** 2)[:, None, None]
    h[~core] = out[~core] / r2
    return SlopeGrid(CYLINDER, (radius,), out, h)


def holonomy_map(annulus: SlopeGrid, z0: float, step: float) -> float:
    """Follow a leaf of dz/dtheta = f(theta, z) once around the annulus.

    Classical fixed-step 4th-order integration from theta = 0 to 2pi
    with bilinearly interpolated samples; theta wraps, z clamps to the
    chart.  The convention is increasing theta, so a strictly negative
    slope field returns the leaf strictly below its start.
    """
    _expect(annulus, ANNULUS, "holonomy_map")
    if step <= 0.0:
        raise ChartError("step must be positive")
    if not -1.0 < z0 < 1.0:
        raise ChartError("z0 must lie strictly inside (-1, 1)")
    f = annulus.values
    if float(f.max()) > 0.0:
        raise ChartError("slope field must be nonpositive")
    nth, nz = f.shape
    dth = TWO_PI / nth
    dz = 2.0 / (nz - 1)

    def slope(theta: float, zz: float) -> float:
        a = (theta % TWO_PI) / dth
        i = int(a)
        fa = a - i
        i %= nth
        i2 = (i + 1) % nth
        b = (zz + 1.0) / dz
        if b <= 0.0:
            j, fb = 0, 0.0
        elif b >= nz - 1:
            j, fb = nz - 2, 1.0
        else:
            j = int(b)
            fb = b - j
        top = (1.0 - fb) * f[i, j] + fb * f[i, j + 1]
        bot = (1.0 - fb) * f[i2, j] + fb * f[i2, j + 1]
        return (1.0 - fa) * top + fa * bot

    n = math.ceil(TWO_PI / step)
    h = TWO_PI / n
    zcur = float(z0)
    for k in range(n):
        th = k * h
        k1 = slope(th, zcur)
        k2 = slope(th + h / 2.0, zcur + h / 2.0 * k1)
        k3 = slope(th + h / 2.0, zcur + h / 2.0 * k2)
        k4 = slope(th + h, zcur + h * k3)
        zcur += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if zcur < -1.0:
            zcur = -1.0
        elif zcur > 1.0:
            zcur = 1.0
    return zcur


# -- flat text serialization ---------------------------------------------

GRID_MAGIC = "bsgate-grid"


def print_grid(grid: SlopeGrid) -> str:
    """Four-line ASCII header (kind, bounds, shape, spacing), then the
    samples one per line in C order, h following f."""
    if grid.kind == BOX:
        bounds = "-1 1 -1 1 -1 1"
    elif grid.kind == CYLINDER:
        bounds = "0 %.17g 0 %.17g -1 1" % (grid.bounds[0], TWO_PI)
    else:
        bounds = "0 %.17g -1 1" % TWO_PI
    lines = [
        "%s %s %d" % (GRID_MAGIC, grid.kind, 0 if grid.h is None else 1),
        "bounds " + bounds,
        "shape " + " ".join(str(n) for n in grid.shape),
        "spacing " + " ".join("%.17g" % s for s in grid.spacings()),
    ]
    lines.extend("%.17g" % v for v in grid.values.ravel())
    if grid.h is not None:
        lines.extend("%.17g" % v for v in grid.h.ravel())
    return "\n".join(lines) + "\n"


def parse_grid(text: str) -> SlopeGrid:
    lines = text.splitlines()
    if len(lines) < 4:
        raise ChartError("grid text needs a 4-line header")
    head = lines[0].split()
    if len(head) != 3 or head[0] != GRID_MAGIC:
        raise ChartError(f"not a grid file (expected '{GRID_MAGIC} "
                         "<kind> <has_h>')")
    kind, has_h = head[1], head[2]
    if has_h not in ("0", "1"):
        raise ChartError("h flag must be 0 or 1")
    btoks = lines[1].split()
    stoks = lines[2].split()
    ptoks = lines[3].split()
    if btoks[:1] != ["bounds"] or stoks[:1] != ["shape"] \
            or ptoks[:1] != ["spacing"]:
        raise ChartError("header lines must be bounds, shape, spacing")
    try:
        shape = tuple(int(n) for n in stoks[1:])
        bvals = [float(v) for v in btoks[1:]]
    except ValueError as exc:
        raise ChartError(f"bad header number: {exc}") from None
    bounds: tuple[float, ...] = ()
    if kind == CYLINDER:
        if len(bvals) != 6:
            raise ChartError("cylinder bounds need 6 numbers")
        bounds = (bvals[1],)
    want = np.prod(shape, dtype=int) * (2 if has_h == "1" else 1)
    body = lines[4:]
    if len(body) != want:
        raise ChartError(f"expected {want} sample lines, got {len(body)}")
    try:
        flat = np.array([float(v) for v in body])
    except ValueError as exc:
        raise ChartError(f"bad sample value: {exc}") from None
    nvals = np.prod(shape, dtype=int)
    h = None
    if has_h == "1":
        h = flat[nvals:].reshape(shape)
    grid = SlopeGrid(kind, bounds, flat[:nvals].reshape(shape), h)
    spacing = tuple(float(v) for v in ptoks[1:])
    if len(spacing) != len(grid.spacings()) or any(
            abs(s - t) > 1e-12 for s, t in zip(spacing, grid.spacings())):
        raise ChartError("spacing line disagrees with shape and bounds")
    return grid
