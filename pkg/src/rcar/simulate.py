"""Trajectory generation with reproducible randomness and principled burn-in.

Randomness contract: replicate r of master seed s uses the 64-bit avalanche
mix of (s, r); within one trajectory the coefficient noise and the innovation
noise are two independent Philox streams derived from the trajectory seed, so
the coefficient path is reproducible on its own and extending the burn-in
never perturbs the retained segment's draw order. Everything is bitwise
deterministic given (params, n, seed, burn_in) and independent of evaluation
order or parallelism.

The recurrence starts at 0 and discards `burn_in` steps; the initial
condition is forgotten exponentially fast, which the generator verifies by
running a second copy started far away on the same noise and doubling the
burn-in (up to 2**16) until both copies agree to 1e-8.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, HypothesisError
from .model import ModelParams

GENERATOR_ID = f"numpy.random.Philox (numpy {np.__version__})"

DEFAULT_BURN_IN = 2000
MAX_BURN_IN = 2**16
FORGET_TOL = 1e-8
EXPLOSION_LIMIT = 1e300

_TWIN_START = 100.0
_MASK64 = (1 << 64) - 1
_ETA_STREAM = 0xE7A
_EPS_STREAM = 0xE95


def mix64(a: int, b: int) -> int:
    """Avalanche mix of two 64-bit values (splitmix64 finalizer).

    The stream offset is (b + 1) so that (0, 0) does not sit on the
    finalizer's zero fixed point.
    """
    z = (a + (b + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def replicate_seed(master_seed: int, replicate: int) -> int:
    return mix64(master_seed & _MASK64, replicate)


def _stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(mix64(seed, tag))))


def _draw_noise(params: ModelParams, seed: int, total: int):
    """eta[0..total] and eps[0..total]; eps[0] precedes the recurrence."""
    eta_rng = _stream(seed, _ETA_STREAM)
    eps_rng = _stream(seed, _EPS_STREAM)
    if params.eta is None:
        eta = np.zeros(total + 1)
        eta_rng = None  # no draws consumed
    else:
        eta = params.eta.sample(eta_rng, total + 1)
    eps = params.eps.sample(eps_rng, total + 1)
    return eta, eps


@dataclass(frozen=True)
class Trajectory:
    """A simulated or ingested series X_0..X_n with provenance."""

    x: np.ndarray
    n: int
    seed: int | None = None
    burn_in: int | None = None
    params_echo: ModelParams | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        if x.ndim != 1 or len(x) != self.n + 1:
            raise DegenerateDataError(
                f"trajectory length {len(x)} does not match n + 1 = {self.n + 1}"
            )
        if not np.all(np.isfinite(x)):
            raise DegenerateDataError("trajectory contains non-finite values")


@dataclass(frozen=True)
class CoefficientPath:
    """theta_t for t = 1..n, aligned with the transitions X_{t-1} -> X_t."""

    theta: np.ndarray
    seed: int
    params_echo: ModelParams


def _check_explosion(x: np.ndarray):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > EXPLOSION_LIMIT:
        raise HypothesisError(
            "trajectory exploded (|X_t| > 1e300); the log-moment stationarity "
            "condition (H1) is likely violated"
        )


def simulate(params: ModelParams, n: int, seed: int,
             burn_in: int = DEFAULT_BURN_IN) -> Trajectory:
    """Simulate X_0..X_n after discarding a verified burn-in."""
    traj, _, _ = simulate_with_noise(params, n, seed, burn_in)
    return traj


def simulate_with_noise(params: ModelParams, n: int, seed: int,
                        burn_in: int = DEFAULT_BURN_IN):
    """Like simulate(), also returning the retained noise.

    Returns (trajectory, eta, eps) where eta[t] and eps[t] are the draws
    aligned with X_t: the transition X_{t-1} -> X_t uses the coefficient
    theta + alpha*eta[t-1] + eta[t] and the innovation eps[t].
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")

    burn = burn_in
    while True:
        total = burn + n
        eta, eps = _draw_noise(params, seed, total)
        theta_path = (params.theta + params.alpha * eta[:-1] + eta[1:]).tolist()
        eps_list = eps.tolist()

        y = 0.0
        twin = _TWIN_START
        for s in range(1, burn + 1):
            c = theta_path[s - 1]
            y = c * y + eps_list[s]
            twin = c * twin + eps_list[s]
        if burn == 0 or burn_in == 0 or abs(y - twin) < FORGET_TOL:
            break
        if burn >= MAX_BURN_IN:
            raise HypothesisError(
                f"initial condition not forgotten after burn-in {burn}; "
                "the process is at or beyond the stationarity boundary"
            )
        burn = min(2 * burn, MAX_BURN_IN)

    x = np.empty(n + 1)
    x[0] = y
    for t in range(1, n + 1):
        y = theta_path[burn + t - 1] * y + eps_list[burn + t]
        x[t] = y
    _check_explosion(x)
    traj = Trajectory(x=x, n=n, seed=seed, burn_in=burn, params_echo=params)
    return traj, eta[burn:], eps[burn:]


def simulate_block(params: ModelParams, n: int, master_seed: int,
                   replicates, burn_in: int = DEFAULT_BURN_IN) -> np.ndarray:
    """Simulate one trajectory per replicate index, vectorized across rows.

    Row i holds X_0..X_n for replicate replicates[i], seeded independently
    via replicate_seed(master_seed, r); the result does not depend on how
    replicates are grouped into blocks.
    """
    reps = list(replicates)
    total = burn_in + n
    nrep = len(reps)
    eta = np.empty((nrep, total + 1))
    eps = np.empty((nrep, total + 1))
    for i, r in enumerate(reps):
        eta[i], eps[i] = _draw_noise(params, replicate_seed(master_seed, r), total)
    theta_path = params.theta + params.alpha * eta[:, :-1] + eta[:, 1:]

    y = np.zeros(nrep)
    twin = np.full(nrep, _TWIN_START)
    for s in range(1, burn_in + 1):
        c = theta_path[:, s - 1]
        y = c * y + eps[:, s]
        twin = c * twin + eps[:, s]

    x = np.empty((nrep, n + 1))
    x[:, 0] = y
    for t in range(1, n + 1):
        y = theta_path[:, burn_in + t - 1] * y + eps[:, burn_in + t]
        x[:, t] = y

    slow = np.abs(x[:, 0] - twin) >= FORGET_TOL
    if burn_in > 0 and np.any(slow):
        # rare: redo the offending replicates with the auto-doubling path
        for i in np.flatnonzero(slow):
            x[i] = simulate(params, n, replicate_seed(master_seed, reps[i]),
                            burn_in).x
    _check_explosion(x)
    return x


def simulate_coefficients(params: ModelParams, n: int, seed: int) -> CoefficientPath:
    """The coefficient process theta_t = theta + alpha*eta_{t-1} + eta_t.

    Uses the same coefficient-noise stream as simulate(params, n, seed,
    burn_in=0), so the returned values are exactly the coefficients that
    trajectory applies.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if params.eta is None:
        theta_t = np.full(n, params.theta)
    else:
        eta = params.eta.sample(_stream(seed, _ETA_STREAM), n + 1)
        theta_t = params.theta + params.alpha * eta[:-1] + eta[1:]
    return CoefficientPath(theta=theta_t, seed=seed, params_echo=params)


# ---------------------------------------------------------------------------
# CSV interchange: header `t,x`, one row per index, full double precision


def write_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x"])
        for t, value in enumerate(traj.x):
            writer.writerow([t, f"{value:.17g}"])


def ingest(path) -> Trajectory:
    """Read a trajectory CSV; errors name the offending line."""
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["t", "x"]:
            raise DegenerateDataError(
                f"{path}: expected header 't,x', got {header!r}"
            )
        expected_t = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DegenerateDataError(
                    f"{path}:{lineno}: expected two fields, got {len(row)}"
                )
            try:
                t = int(row[0])
                value = float(row[1])
            except ValueError as exc:
                raise DegenerateDataError(f"{path}:{lineno}: {exc}") from exc
            if t != expected_t:
                raise DegenerateDataError(
                    f"{path}:{lineno}: index {t} breaks the contiguous "
                    f"sequence (expected {expected_t})"
                )
            if not np.isfinite(value):
                raise DegenerateDataError(f"{path}:{lineno}: non-finite value")
            values.append(value)
            expected_t += 1
    if len(values) < 2:
        raise DegenerateDataError(f"{path}: need at least two observations")
    return Trajectory(x=np.array(values), n=len(values) - 1)
