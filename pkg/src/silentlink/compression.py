"""Telemetry compression: pick the points the other side cannot predict.

Two branches, one per data category:

* environmental (model-free): a sliding-window mean test flags samples
  whose squared deviation from the recent mean exceeds a threshold, and
  flagged runs are reduced to their start/end boundary points;
* kinematic (model-based): a linear Kalman filter predicts each reading,
  and samples whose squared innovation exceeds a per-channel threshold
  are classified unpredictable.

Everything the protocol transmits originates from one of these two
selectors; everything else stays silent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .telemetry import SensorChannel, TelemetrySample, ValidationError

PSD_EIG_TOL = -1e-9


class FilterNumericalError(Exception):
    """Innovation covariance not invertible; the filter state is unchanged."""


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return (p + p.T) / 2.0


def _check_psd(mat: np.ndarray, name: str) -> None:
    sym = _symmetrize(mat)
    if not np.allclose(mat, sym, atol=1e-12):
        raise ValidationError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(sym).min() < PSD_EIG_TOL:
        raise ValidationError(f"{name} must be positive semidefinite")


@dataclass(frozen=True)
class KalmanModel:
    """Matrices of the linear filter x' = Fx + Bu, z = Hx, noise Q/R."""

    f: np.ndarray
    b: np.ndarray
    h: np.ndarray
    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        n = f.shape[0]
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(n, -1))
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float).reshape(-1, n))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        if self.f.shape != (n, n):
            raise ValidationError(f"F must be square, got {self.f.shape}")
        m = self.h.shape[0]
        if self.q.shape != (n, n):
            raise ValidationError(f"Q must be {n}x{n}, got {self.q.shape}")
        if self.r.shape != (m, m):
            raise ValidationError(f"R must be {m}x{m}, got {self.r.shape}")
        _check_psd(self.q, "Q")
        _check_psd(self.r, "R")

    @property
    def n(self) -> int:
        return self.f.shape[0]

    @property
    def m(self) -> int:
        return self.h.shape[0]

    @property
    def k(self) -> int:
        return self.b.shape[1]


@dataclass(frozen=True)
class FilterState:
    x: np.ndarray
    p: np.ndarray
    k: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(-1))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if self.p.shape != (self.x.size, self.x.size):
            raise ValidationError(
                f"P must be {self.x.size}x{self.x.size}, got {self.p.shape}"
            )


def kf_predict(
    model: KalmanModel, state: FilterState, u: np.ndarray | None = None
) -> FilterState:
    """Time update: x = Fx + Bu, P = FPF' + Q (re-symmetrized)."""
    if state.x.size != model.n:
        raise ValidationError(f"state has {state.x.size} entries, model wants {model.n}")
    x = model.f @ state.x
    if u is not None:
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.size != model.k:
            raise ValidationError(f"control has {u.size} entries, model wants {model.k}")
        x = x + model.b @ u
    p = _symmetrize(model.f @ state.p @ model.f.T + model.q)
    return FilterState(x, p, state.k)


def kf_update(model: KalmanModel, predicted: FilterState, z: np.ndarray) -> FilterState:
    """Measurement update with gain K = PH'(HPH' + R)^-1.

    Raises FilterNumericalError when the innovation covariance is
    singular; the caller keeps the predicted state in that case.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != model.m:
        raise ValidationError(f"observation has {z.size} entries, model wants {model.m}")
    s = model.h @ predicted.p @ model.h.T + model.r
    try:
        s_inv = np.linalg.inv(s)
    except np.linalg.LinAlgError as exc:
        raise FilterNumericalError(f"innovation covariance singular: {exc}") from exc
    if not np.all(np.isfinite(s_inv)):
        raise FilterNumericalError("innovation covariance effectively singular")
    k = predicted.p @ model.h.T @ s_inv
    x = predicted.x + k @ (z - model.h @ predicted.x)
    p = _symmetrize((np.eye(model.n) - k @ model.h) @ predicted.p)
    return FilterState(x, p, k)


@dataclass(frozen=True)
class Residual:
    channel: int
    predicted: float
    measured: float

    @property
    def innovation(self) -> float:
        return self.measured - self.predicted


PREDICTABLE = "predictable"
UNPREDICTABLE = "unpredictable"


def classify(residual: Residual, tau: float) -> str:
    """Unpredictable iff the squared innovation strictly exceeds tau."""
    if tau < 0:
        raise ValidationError(f"tau must be >= 0: {tau}")
    return UNPREDICTABLE if residual.innovation**2 > tau else PREDICTABLE


@dataclass(frozen=True)
class EnvCompressorConfig:
    window: int = 8
    threshold: float = 1.0  # squared-error threshold, units^2

    def __post_init__(self):
        if self.window < 1:
            raise ValidationError(f"window must be >= 1: {self.window}")
        if self.threshold < 0:
            raise ValidationError(f"threshold must be >= 0: {self.threshold}")


@dataclass(frozen=True)
class EnvFlags:
    """Flagged sample indices and the [start, end] bounds of each run."""

    indices: tuple[int, ...]
    runs: tuple[tuple[int, int], ...]

    def selected(self, include_interior: bool = False) -> list[int]:
        """Indices to transmit: run boundaries, or every flag if asked."""
        if include_interior:
            return list(self.indices)
        out: list[int] = []
        for start, end in self.runs:
            out.append(start)
            if end != start:
                out.append(end)
        return out


def group_runs(indices: list[int]) -> tuple[tuple[int, int], ...]:
    runs = []
    for i in indices:
        if runs and i == runs[-1][1] + 1:
            runs[-1][1] = i
        else:
            runs.append([i, i])
    return tuple((a, b) for a, b in runs)


def env_flag_points(series: list[TelemetrySample], cfg: EnvCompressorConfig) -> EnvFlags:
    """Sliding-window selector for environmental data.

    Sample i (i >= window) is flagged when its squared deviation from the
    mean of the previous `window` samples exceeds the threshold; earlier
    indices never have enough history to be flagged.
    """
    if not series:
        raise ValidationError("series must not be empty")
    times = [s.t for s in series]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValidationError("series must be sorted by t")
    values = np.array([s.value for s in series], dtype=float)
    indices = _kernels.env_window_flags(values, cfg.window, cfg.threshold)
    return EnvFlags(tuple(indices), group_runs(indices))


class StreamingEnvSelector:
    """Online form of env_flag_points: feed one sample, get one verdict.

    Produces exactly the flags the batch selector yields on the same
    prefix, and reports the signed deviation so callers can grade
    severity.
    """

    def __init__(self, cfg: EnvCompressorConfig):
        self.cfg = cfg
        self._history: list[float] = []
        self.in_run = False

    def push(self, value: float) -> tuple[bool, float]:
        """Returns (flagged, deviation from the window mean)."""
        hist = self._history
        w = self.cfg.window
        if len(hist) < w:
            hist.append(value)
            self.in_run = False
            return False, 0.0
        s = 0.0
        for v in hist[-w:]:
            s += v
        dev = value - s / float(w)
        flagged = dev * dev > self.cfg.threshold
        hist.append(value)
        if len(hist) > w:
            del hist[: len(hist) - w]
        self.in_run = flagged
        return flagged, dev


def build_default_kinematic_model(
    channels: list[SensorChannel],
    dt: float,
    process_var: tuple[float, float] = (1e-4, 1e-4),
    measurement_var: float | list[float] = 1e-2,
) -> KalmanModel:
    """Constant-velocity model over the given channels.

    Each channel holds a [value, rate] block with the acceleration-like
    control entering through B = [dt^2/2, dt]'; H picks out the value
    states, so n = 2*axes, m = k = axes. Q and R are diagonal.
    """
    if dt <= 0:
        raise ValidationError(f"dt must be > 0: {dt}")
    axes = len(channels)
    if axes == 0:
        raise ValidationError("at least one channel required")
    n = 2 * axes
    f = np.zeros((n, n))
    b = np.zeros((n, axes))
    h = np.zeros((axes, n))
    q = np.zeros((n, n))
    rvar = (
        [float(measurement_var)] * axes
        if np.isscalar(measurement_var)
        else [float(v) for v in measurement_var]
    )
    if len(rvar) != axes:
        raise ValidationError(f"need {axes} measurement variances, got {len(rvar)}")
    for a in range(axes):
        i = 2 * a
        f[i, i] = 1.0
        f[i, i + 1] = dt
        f[i + 1, i + 1] = 1.0
        b[i, a] = 0.5 * dt * dt
        b[i + 1, a] = dt
        h[a, i] = 1.0
        q[i, i] = process_var[0]
        q[i + 1, i + 1] = process_var[1]
    r = np.diag(rvar)
    return KalmanModel(f, b, h, q, r)


class ChannelPredictorBank:
    """Per-channel [value, rate] filters advanced one tick at a time.

    This is the hot path behind silence-by-prediction: the vehicle runs
    one bank against live measurements, the control center runs the
    identical bank (predict-only) as its mirror, and matching
    configuration makes the two produce identical predictions. Dispatches
    to the compiled kernel when available.
    """

    def __init__(
        self,
        channels: list[SensorChannel],
        dt: float,
        process_var: tuple[float, float] = (1e-4, 1e-4),
        measurement_var: float | list[float] = 1e-2,
        initial_values: list[float] | None = None,
    ):
        self.channels = list(channels)
        self.axes = len(self.channels)
        self.dt = float(dt)
        self.model = build_default_kinematic_model(
            self.channels, dt, process_var, measurement_var
        )
        self.x = np.zeros(2 * self.axes)
        if initial_values is not None:
            self.x[0::2] = initial_values
        self.p = np.zeros(4 * self.axes)
        self.q_diag = np.diag(self.model.q).copy()
        self.r_diag = np.diag(self.model.r).copy()
        self._zero_u = np.zeros(self.axes)
        self._out = np.zeros(self.axes)

    def predicted_values(self) -> np.ndarray:
        """Next-tick value predictions without touching the state."""
        return self.x[0::2] + self.dt * self.x[1::2]

    def step(self, z: np.ndarray, u: np.ndarray | None = None) -> np.ndarray:
        """Predict, then update against measurements z; returns innovations."""
        u_arr = self._zero_u if u is None else np.asarray(u, dtype=float)
        z = np.asarray(z, dtype=float)
        return _kernels.cv_bank_step(
            self.x, self.p, self.dt, self.q_diag, self.r_diag, u_arr, z, self._out
        ).copy()

    def predict_only(self, u: np.ndarray | None = None) -> np.ndarray:
        """Mirror-side advance with no measurement; returns predicted values."""
        u_arr = self._zero_u if u is None else np.asarray(u, dtype=float)
        # Same kernel with R treated as infinite would skip the update; do
        # the predict half directly so the state matches kf_predict exactly.
        for a in range(self.axes):
            i = 2 * a
            j = 4 * a
            ua = u_arr[a]
            v = self.x[i] + self.dt * self.x[i + 1] + 0.5 * self.dt * self.dt * ua
            r = self.x[i + 1] + self.dt * ua
            p00, p01, p10, p11 = self.p[j : j + 4]
            n00 = p00 + self.dt * p10 + (p01 + self.dt * p11) * self.dt + self.q_diag[i]
            n01 = p01 + self.dt * p11
            n10 = p10 + self.dt * p11
            n11 = p11 + self.q_diag[i + 1]
            off = 0.5 * (n01 + n10)
            self.x[i] = v
            self.x[i + 1] = r
            self.p[j : j + 4] = (n00, off, off, n11)
        return self.x[0::2].copy()

    def values(self) -> np.ndarray:
        return self.x[0::2].copy()

    def filter_state(self) -> FilterState:
        """Joint-state view of the bank (for checks against kf_predict/update)."""
        n = 2 * self.axes
        p = np.zeros((n, n))
        for a in range(self.axes):
            i = 2 * a
            p[i : i + 2, i : i + 2] = self.p[4 * a : 4 * a + 4].reshape(2, 2)
        return FilterState(self.x.copy(), p)

    def default_taus(self, floor: float = 0.0) -> np.ndarray:
        """Per-channel squared thresholds: (3 sigma)^2 with sigma^2 from R."""
        return np.maximum(9.0 * self.r_diag, floor)
