"""Trajectory preprocessing and two-channel rasterization.

A raw trajectory is turned into a fixed-size image in four steps: cubic
spline smoothing of each pen-down stroke, rotation that removes the
dominant writing orientation, extent normalization onto [0, 100] in both
axes, and rasterization onto a square canvas with a pressure channel and
a time channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .dataset import Trajectory


@dataclass
class PreprocessConfig:
    canvas: int = 101
    smooth: bool = True
    spline_points_per_segment: int = 4
    cov_epsilon: float = 1e-9

    def __post_init__(self):
        if self.canvas < 16:
            raise ValueError(f"canvas must be at least 16, got {self.canvas}")
        if self.spline_points_per_segment < 1:
            raise ValueError("spline_points_per_segment must be at least 1")
        if self.cov_epsilon <= 0:
            raise ValueError("cov_epsilon must be positive")


@dataclass
class SignatureImage:
    """Two-channel raster: pen pressure and normalized time, both in [0, 1].

    Row 0 corresponds to y = 100 (top of the signature).
    """

    pressure: np.ndarray
    time: np.ndarray

    @property
    def side(self) -> int:
        return self.pressure.shape[0]


def _pen_down_runs(pen_down: np.ndarray):
    """Yield (start, stop) index ranges of maximal pen-down runs."""
    n = len(pen_down)
    i = 0
    while i < n:
        if pen_down[i]:
            j = i
            while j < n and pen_down[j]:
                j += 1
            yield i, j
            i = j
        else:
            i += 1


def smooth(traj: Trajectory, cfg: PreprocessConfig) -> Trajectory:
    """Replace each pen-down stroke by a natural cubic spline resampling.

    For every stroke of at least 4 samples (with at least 4 distinct
    timestamps) a natural cubic spline in t is fitted to x and y, then
    evaluated at the original timestamps plus ``spline_points_per_segment
    - 1`` uniformly spaced timestamps inside every inter-sample segment.
    Pressure and pen state are linearly interpolated at inserted
    timestamps.  Pen-up samples and short strokes pass through unchanged.
    With ``cfg.smooth`` false the trajectory is returned as-is.
    """
    if not cfg.smooth:
        return traj
    spp = cfg.spline_points_per_segment
    out_x, out_y, out_t, out_p, out_d = [], [], [], [], []

    def passthrough(i):
        out_x.append(traj.x[i])
        out_y.append(traj.y[i])
        out_t.append(traj.t[i])
        out_p.append(traj.pressure[i])
        out_d.append(traj.pen_down[i])

    cursor = 0
    for start, stop in _pen_down_runs(traj.pen_down):
        for i in range(cursor, start):
            passthrough(i)
        cursor = stop
        t = traj.t[start:stop]
        keep = np.concatenate(([True], np.diff(t) > 0))
        if stop - start < 4 or keep.sum() < 4:
            for i in range(start, stop):
                passthrough(i)
            continue
        knots = t[keep]
        sx = CubicSpline(knots, traj.x[start:stop][keep], bc_type="natural")
        sy = CubicSpline(knots, traj.y[start:stop][keep], bc_type="natural")
        eval_t = [t[0]]
        for i in range(len(t) - 1):
            if t[i + 1] > t[i]:
                step = (t[i + 1] - t[i]) / spp
                eval_t.extend(t[i] + step * np.arange(1, spp))
            eval_t.append(t[i + 1])
        eval_t = np.asarray(eval_t)
        out_x.extend(sx(eval_t))
        out_y.extend(sy(eval_t))
        out_t.extend(eval_t)
        out_p.extend(np.interp(eval_t, t, traj.pressure[start:stop]))
        out_d.extend([True] * len(eval_t))
    for i in range(cursor, len(traj)):
        passthrough(i)
    return Trajectory(out_x, out_y, out_t, out_p, out_d,
                      user_id=traj.user_id, label=traj.label, source=traj.source)


def orientation_angle(traj: Trajectory, cov_epsilon: float = 1e-9) -> float:
    """Dominant writing orientation from second-order point statistics.

    With variances sx2, sy2 and covariance cxy over all samples the angle
    is ``atan((sy2 - sx2 + sqrt((sy2 - sx2)^2 + 4 cxy^2)) / (2 cxy))``.
    When the covariance is negligible the axes are already principal: the
    angle is 0 if sx2 >= sy2 and pi/2 otherwise.
    """
    x = traj.x - traj.x.mean()
    y = traj.y - traj.y.mean()
    sx2 = float(np.mean(x * x))
    sy2 = float(np.mean(y * y))
    cxy = float(np.mean(x * y))
    if sx2 == 0.0 and sy2 == 0.0:
        raise ValueError("degenerate geometry: all samples coincide")
    if abs(cxy) < cov_epsilon * max(sx2, sy2, cov_epsilon):
        return 0.0 if sx2 >= sy2 else math.pi / 2.0
    return math.atan((sy2 - sx2 + math.hypot(sy2 - sx2, 2.0 * cxy)) / (2.0 * cxy))


def rotate(traj: Trajectory, angle: float) -> Trajectory:
    """Rotate samples by -angle about the sample centroid."""
    c, s = math.cos(angle), math.sin(angle)
    x = traj.x - traj.x.mean()
    y = traj.y - traj.y.mean()
    return Trajectory(x * c + y * s, -x * s + y * c, traj.t, traj.pressure,
                      traj.pen_down, user_id=traj.user_id, label=traj.label,
                      source=traj.source)


def normalize_extent(traj: Trajectory) -> Trajectory:
    """Map both coordinate axes onto [0, 100].

    A coordinate span that is zero, or vanishingly small next to the
    other axis (as for collinear points rotated onto one axis, where only
    rounding noise remains), is rejected as degenerate.
    """
    widths = [float(traj.x.max() - traj.x.min()),
              float(traj.y.max() - traj.y.min())]
    spans = []
    for v, width in zip((traj.x, traj.y), widths):
        lo = float(v.min())
        if width <= 1e-9 * max(widths):
            raise ValueError("degenerate extent: coordinate span is zero")
        spans.append((lo, 100.0 / width))
    x = (traj.x - spans[0][0]) * spans[0][1]
    y = (traj.y - spans[1][0]) * spans[1][1]
    return Trajectory(x, y, traj.t, traj.pressure, traj.pen_down,
                      user_id=traj.user_id, label=traj.label, source=traj.source)


def _line_pixels(r0: int, c0: int, r1: int, c1: int):
    """Integer midpoint (Bresenham) walk from (r0, c0) to (r1, c1) inclusive."""
    pixels = []
    dr = abs(r1 - r0)
    dc = abs(c1 - c0)
    sr = 1 if r1 >= r0 else -1
    sc = 1 if c1 >= c0 else -1
    err = dc - dr
    r, c = r0, c0
    while True:
        pixels.append((r, c))
        if r == r1 and c == c1:
            break
        e2 = 2 * err
        if e2 >= -dr:
            err -= dr
            c += sc
        if e2 <= dc:
            err += dc
            r += sr
    return pixels


def rasterize(traj: Trajectory, cfg: PreprocessConfig) -> SignatureImage:
    """Draw a normalized trajectory onto a two-channel square canvas.

    Consecutive pen-down samples are connected by integer midpoint line
    segments; pen-up gaps draw nothing.  Along a segment pressure and
    time are linearly interpolated; when strokes overlap a pixel the
    later one overwrites.  The pressure channel is normalized so its
    maximum is 1 (for any trajectory with positive pen-down pressure)
    and the time channel holds (t - t_min) / (t_max - t_min).
    """
    side = cfg.canvas
    lo = np.array([traj.x.min(), traj.y.min()])
    hi = np.array([traj.x.max(), traj.y.max()])
    if lo.min() < -1e-6 or hi.max() > 100.0 + 1e-6:
        raise ValueError("rasterize expects coordinates normalized to [0, 100]")
    pressure = np.zeros((side, side))
    time = np.zeros((side, side))

    scale = (side - 1) / 100.0
    cols = np.floor(traj.x * scale + 0.5).astype(int)
    rows = np.floor((100.0 - traj.y) * scale + 0.5).astype(int)
    cols = np.clip(cols, 0, side - 1)
    rows = np.clip(rows, 0, side - 1)

    t_min, t_max = float(traj.t.min()), float(traj.t.max())
    t_span = t_max - t_min
    tn = (traj.t - t_min) / t_span if t_span > 0 else np.zeros(len(traj))
    press = np.where(traj.pen_down, traj.pressure, 0.0)

    def draw_segment(i, j):
        pix = _line_pixels(rows[i], cols[i], rows[j], cols[j])
        steps = max(len(pix) - 1, 1)
        for idx, (r, c) in enumerate(pix):
            s = idx / steps
            pressure[r, c] = press[i] + s * (press[j] - press[i])
            time[r, c] = tn[i] + s * (tn[j] - tn[i])

    for i in range(len(traj)):
        if not traj.pen_down[i]:
            continue
        pressure[rows[i], cols[i]] = press[i]
        time[rows[i], cols[i]] = tn[i]
        if i + 1 < len(traj) and traj.pen_down[i + 1]:
            draw_segment(i, i + 1)

    peak = pressure.max()
    if peak > 0:
        pressure /= peak
    return SignatureImage(pressure=pressure, time=time)


def preprocess(traj: Trajectory, cfg: PreprocessConfig | None = None) -> SignatureImage:
    """Full pipeline: smooth, rotate to principal orientation, normalize, draw.

    The coordinate minima are subtracted up front, which removes any
    translation of the input before floating point effects can differ
    (exactly translated inputs give bit-identical images).
    """
    if cfg is None:
        cfg = PreprocessConfig()
    traj = Trajectory(traj.x - traj.x.min(), traj.y - traj.y.min(), traj.t,
                      traj.pressure, traj.pen_down, user_id=traj.user_id,
                      label=traj.label, source=traj.source)
    traj = smooth(traj, cfg)
    traj = rotate(traj, orientation_angle(traj, cfg.cov_epsilon))
    traj = normalize_extent(traj)
    return rasterize(traj, cfg)
