"""Monte-Carlo wave-function unraveling of the laser master equations.

Between collapses the conditioned state evolves under the non-Hermitian
drift H - (i/2) sum_k rate_k op_k^dag op_k, integrated with a symmetric
split: half step of the exact Hermitian propagator, full step of the
(diagonal) decay, half step Hermitian again, then renormalization.  Every
channel k fires in a step independently when u_k < dt <F_k^dag F_k>; the
rare multi-fire tie is broken by one extra uniform, proportional to the
per-channel probabilities.

Randomness is counter-based: a (seed, substream) pair keys a Philox stream,
and each trajectory draws its whole uniform block up front, so any
trajectory can be replayed bit-identically in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import ConfigurationError, NumericalError
from .hilbert import OperatorMatrix
from .models import ModelSpec

_DT_SAFETY = 0.01   # hard precondition: dt <= 0.01 / fastest rate
_DT_DEFAULT = 0.005  # default dt = 0.005 / fastest rate
_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class RngStream:
    """Deterministic per-trajectory randomness: Philox keyed by (seed, substream)."""

    seed: int
    substream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed % 2**64, self.substream % 2**64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, substream: int) -> "RngStream":
        return RngStream(seed=self.seed, substream=substream)


@dataclass
class ConditionedState:
    """Pure state of a single trajectory, normalized after every step."""

    amplitudes: np.ndarray
    time: float = 0.0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class CollapseEvent:
    time: float
    channel: int
    label: str


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    pop_upper: np.ndarray
    dipole_mag: np.ndarray
    events: tuple  # of CollapseEvent
    dt: float
    stream: RngStream


def effective_hamiltonian(model: ModelSpec) -> OperatorMatrix:
    """Non-Hermitian drift H - (i/2) sum rate op^dag op."""
    h = model.hamiltonian.data.astype(complex)
    for op, rate in model.collapses:
        h = h - 0.5j * rate * (op.data.conj().T @ op.data)
    return OperatorMatrix(h, "hamiltonian")


def default_dt(model: ModelSpec) -> float:
    fastest = model.max_rate()
    if fastest <= 0:
        return 0.01  # free evolution; any step works, pick something small
    return _DT_DEFAULT / fastest


def ground_state(model: ModelSpec) -> np.ndarray:
    psi = np.zeros(model.dim, dtype=complex)
    psi[model.space.flat_index(1, 0)] = 1.0
    return psi


def basis_state(model: ModelSpec, level: int, photons: int) -> np.ndarray:
    psi = np.zeros(model.dim, dtype=complex)
    psi[model.space.flat_index(level, photons)] = 1.0
    return psi


def _pick_channel(fired: np.ndarray, probs: np.ndarray, tie_break: float) -> int:
    if fired.size == 1:
        return int(fired[0])
    weights = probs[fired]
    cum = np.cumsum(weights)
    return int(fired[np.searchsorted(cum, tie_break * cum[-1])])


class _Engine:
    """Precomputed propagators and jump tables for one (model, dt) pair."""

    def __init__(self, model: ModelSpec, dt: float):
        fastest = model.max_rate()
        if dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {dt}")
        if fastest > 0 and dt > _DT_SAFETY / fastest:
            raise ConfigurationError(
                f"dt={dt:g} exceeds {_DT_SAFETY:g}/max_rate={_DT_SAFETY / fastest:g}; "
                "collapse probabilities would be biased")
        self.model = model
        self.dt = dt
        self.collapse_mats = []
        decay_diag = np.zeros(model.dim)
        weights = []
        for op, rate in model.collapses:
            c = np.sqrt(rate) * op.data
            self.collapse_mats.append(c)
            cdc = c.conj().T @ c
            off = cdc - np.diag(np.diag(cdc))
            if np.max(np.abs(off)) > 0:
                raise ConfigurationError(
                    "trajectory engine requires diagonal op^dag op collapse products")
            d = np.real(np.diag(cdc))
            weights.append(dt * d)
            decay_diag += 0.5 * d
        self.jump_weights = np.array(weights)  # (n_channels, dim)
        self.n_channels = len(self.collapse_mats)
        u_half = la.expm(-0.5j * dt * model.hamiltonian.data)
        # one fused no-jump step: half Hermitian, diagonal decay, half Hermitian
        self.step_prop = u_half @ (np.exp(-dt * decay_diag)[:, None] * u_half)
        space = model.space
        lower, upper = model.lasing_levels
        self.upper_idx = np.array(
            [space.flat_index(upper, n) for n in range(space.n_max + 1)])
        self._dip_lo = np.array(
            [space.flat_index(lower, n + 1) for n in range(space.n_max)])
        self._dip_up = np.array(
            [space.flat_index(upper, n) for n in range(space.n_max)])

    def jump_probabilities(self, psi: np.ndarray) -> np.ndarray:
        return self.jump_weights @ (psi.real**2 + psi.imag**2)

    def apply_collapse(self, psi: np.ndarray, channel: int) -> np.ndarray:
        out = self.collapse_mats[channel] @ psi
        nrm = np.linalg.norm(out)
        if nrm < _NORM_FLOOR:
            raise NumericalError(f"collapse channel {channel} annihilated the state")
        return out / nrm

    def run(self, psi: np.ndarray, n_steps: int, gen: np.random.Generator,
            record_steps: np.ndarray):
        """March n_steps, sampling the state at the given step indices.

        Returns (samples, events): samples is an array of state snapshots in
        record order, events a list of (step_index, channel) pairs.
        """
        uniforms = gen.random((n_steps, self.n_channels + 1))
        samples = np.empty((record_steps.size, psi.size), dtype=complex)
        events = []
        slot = 0
        prop = self.step_prop
        weights = self.jump_weights
        for k in range(n_steps + 1):
            if slot < record_steps.size and k == record_steps[slot]:
                samples[slot] = psi
                slot += 1
            if k == n_steps:
                break
            row = uniforms[k]
            probs = weights @ (psi.real**2 + psi.imag**2)
            fired = np.nonzero(row[:-1] < probs)[0]
            if fired.size == 0:
                psi = prop @ psi
                nrm = np.linalg.norm(psi)
                if nrm < _NORM_FLOOR:
                    raise NumericalError("conditioned state norm collapsed below 1e-12")
                psi /= nrm
            else:
                channel = _pick_channel(fired, probs, row[-1])
                psi = self.apply_collapse(psi, channel)
                events.append((k + 1, channel))
        return samples, events

    def pop_upper(self, samples: np.ndarray) -> np.ndarray:
        return np.sum(np.abs(samples[:, self.upper_idx]) ** 2, axis=1)

    def dipole_mag(self, samples: np.ndarray) -> np.ndarray:
        return np.abs(np.sum(samples[:, self._dip_lo].conj() * samples[:, self._dip_up],
                             axis=1))

    def run_batch(self, psi0: np.ndarray, n_traj: int, n_steps: int,
                  gen: np.random.Generator, record_steps: np.ndarray):
        """Evolve n_traj trajectories in lock step from a shared stream.

        Returns (acc, events): acc[slot] is the summed projector
        sum_t |psi_t><psi_t| at each record step, events a list of
        (step_index, trajectory, channel).  One uniform block per step keeps
        the whole ensemble deterministic for a given generator state.
        """
        dim = psi0.size
        psi = np.tile(psi0, (n_traj, 1))
        acc = np.zeros((record_steps.size, dim, dim), dtype=complex)
        events = []
        slot = 0
        prop_t = self.step_prop.T.copy()
        weights_t = self.jump_weights.T.copy()
        collapse_t = [c.T.copy() for c in self.collapse_mats]
        for k in range(n_steps + 1):
            if slot < record_steps.size and k == record_steps[slot]:
                acc[slot] += psi.T @ psi.conj()
                slot += 1
            if k == n_steps:
                break
            u = gen.random((n_traj, self.n_channels + 1))
            probs = (psi.real**2 + psi.imag**2) @ weights_t
            fired = u[:, :-1] < probs
            n_fired = fired.sum(axis=1)
            quiet = n_fired == 0
            psi[quiet] = psi[quiet] @ prop_t
            single = n_fired == 1
            if single.any():
                channels = np.argmax(fired[single], axis=1)
                rows = np.nonzero(single)[0]
                for ch in range(self.n_channels):
                    sel = rows[channels == ch]
                    if sel.size:
                        psi[sel] = psi[sel] @ collapse_t[ch]
                        events.extend((k + 1, int(t), ch) for t in sel)
            multi = np.nonzero(n_fired > 1)[0]
            for t in multi:
                row_fired = np.nonzero(fired[t])[0]
                ch = _pick_channel(row_fired, probs[t], u[t, -1])
                psi[t] = self.collapse_mats[ch] @ psi[t]
                events.append((k + 1, int(t), ch))
            norms = np.sqrt(np.sum(psi.real**2 + psi.imag**2, axis=1))
            if np.min(norms) < _NORM_FLOOR:
                raise NumericalError("a trajectory norm collapsed below 1e-12")
            psi /= norms[:, None]
        return acc, events


def step(model: ModelSpec, state: ConditionedState, dt: float, rng):
    """Single stochastic step; returns (new_state, CollapseEvent | None).

    For whole trajectories prefer run_trajectory, which reuses precomputed
    propagators and a persistent random stream.
    """
    engine = _Engine(model, dt)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    psi = state.amplitudes.astype(complex)
    row = gen.random(engine.n_channels + 1)
    probs = engine.jump_probabilities(psi)
    fired = np.nonzero(row[:-1] < probs)[0]
    event = None
    t_new = state.time + dt
    if fired.size == 0:
        psi = engine.step_prop @ psi
        nrm = np.linalg.norm(psi)
        if nrm < _NORM_FLOOR:
            raise NumericalError("conditioned state norm collapsed below 1e-12")
        psi = psi / nrm
    else:
        channel = _pick_channel(fired, probs, row[-1])
        psi = engine.apply_collapse(psi, channel)
        event = CollapseEvent(time=t_new, channel=channel,
                              label=model.collapse_labels[channel])
    return ConditionedState(amplitudes=psi, time=t_new), event


def run_trajectory(
    model: ModelSpec,
    t_final: float,
    rng: RngStream,
    dt: float | None = None,
    record_stride: int = 1,
    psi0: np.ndarray | None = None,
) -> TrajectoryRecord:
    """Evolve one conditioned trajectory, recording every record_stride steps."""
    if t_final <= 0:
        raise ConfigurationError("t_final must be positive")
    if record_stride < 1:
        raise ConfigurationError("record_stride must be >= 1")
    if dt is None:
        dt = default_dt(model)
    engine = _Engine(model, dt)
    psi = ground_state(model) if psi0 is None else np.asarray(psi0, dtype=complex).copy()
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ConfigurationError("initial state must be normalized")

    n_steps = max(1, int(round(t_final / dt)))
    record_steps = np.arange(0, n_steps + 1, record_stride)
    samples, raw_events = engine.run(psi, n_steps, rng.generator(), record_steps)
    events = tuple(
        CollapseEvent(time=k * dt, channel=ch, label=model.collapse_labels[ch])
        for k, ch in raw_events)
    return TrajectoryRecord(
        times=record_steps * dt,
        pop_upper=engine.pop_upper(samples),
        dipole_mag=engine.dipole_mag(samples),
        events=events, dt=dt, stream=rng)


def ensemble_density(
    model: ModelSpec,
    t_final: float,
    n_traj: int,
    seed: int,
    dt: float | None = None,
    n_record: int = 21,
    psi0: np.ndarray | None = None,
):
    """Trajectory-averaged density matrices on a coarse time grid.

    Returns (times, rhos) where rhos[k] is the average of |psi><psi| over
    n_traj trajectories at times[k].  The whole ensemble marches in lock
    step from one seed-keyed stream, so the result is deterministic in
    (seed, n_traj, dt); statistical agreement with the master equation
    scales as 1/sqrt(n_traj).
    """
    if n_traj < 100:
        raise ConfigurationError("ensemble averaging needs n_traj >= 100")
    if dt is None:
        dt = default_dt(model)
    engine = _Engine(model, dt)
    psi_init = ground_state(model) if psi0 is None else np.asarray(psi0, dtype=complex).copy()
    n_steps = max(1, int(round(t_final / dt)))
    record_steps = np.unique(np.linspace(0, n_steps, n_record).round().astype(int))
    acc, _ = engine.run_batch(psi_init, n_traj, n_steps,
                              RngStream(seed=seed).generator(), record_steps)
    return record_steps * dt, acc / n_traj


def segment_oscillation_frequencies(record: TrajectoryRecord, min_duration: float):
    """Dominant angular frequency of the dipole between collapses.

    Splits the dipole-magnitude series at collapse events, keeps segments at
    least min_duration long, and locates the first positive autocorrelation
    peak of each mean-removed segment.  Because the record stores the
    magnitude of the coherence, a signed oscillation at angular frequency w
    repeats every pi/w, so the underlying frequency is pi / (peak lag).

    Returns a list of (duration, angular_frequency) pairs.
    """
    times = record.times
    if times.size < 3:
        return []
    dt_sample = times[1] - times[0]
    event_times = np.array([e.time for e in record.events])
    edges = np.concatenate([[times[0]], event_times, [times[-1]]])
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a < min_duration:
            continue
        seg = record.dipole_mag[(times > a) & (times < b)]
        if seg.size < 16:
            continue
        x = seg - seg.mean()
        if np.max(np.abs(x)) < 1e-6:
            continue
        ac = np.correlate(x, x, mode="full")[x.size - 1:]
        for lag in range(1, ac.size - 1):
            if ac[lag] >= ac[lag - 1] and ac[lag] > ac[lag + 1] and ac[lag] > 0:
                out.append((b - a, np.pi / (lag * dt_sample)))
                break
    return out


def ensemble_events(
    model: ModelSpec,
    t_final: float,
    n_traj: int,
    seed: int,
    dt: float | None = None,
    psi0: np.ndarray | None = None,
):
    """Collapse events of a lock-step ensemble, as (time, trajectory, channel).

    Used for jump-statistics checks (waiting-time distributions, event
    counting) where conditioned states are not needed.
    """
    if dt is None:
        dt = default_dt(model)
    engine = _Engine(model, dt)
    psi_init = ground_state(model) if psi0 is None else np.asarray(psi0, dtype=complex).copy()
    n_steps = max(1, int(round(t_final / dt)))
    _, events = engine.run_batch(psi_init, n_traj, n_steps,
                                 RngStream(seed=seed).generator(),
                                 np.array([], dtype=int))
    return [(k * dt, traj, ch) for k, traj, ch in events]
