"""Discrete-time agent-based engine: pair selection, acceptance, updates.

Each step selects a pair (i, j), decides whether they interact, and
applies one of the update rules (plain attraction, ambiguity noise,
external noise, adaptation noise, or a random update distance). The
per-step update distance is tied to the timestep so that trajectories
approach the continuous-time limits as h shrinks.
"""

from __future__ import annotations

import enum
import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .kernel import InteractionKernel, Network, eval_kernel, pairwise_matrix
from .noise import NoiseFamily, NoiseKind
from .trajectory import Trajectory

__all__ = [
    "UniformWithReplacement",
    "UniformWithoutReplacement",
    "DegreeWeighted",
    "ProbabilityProportional",
    "SelectionScheme",
    "UpdateMode",
    "ModelSpec",
    "OpinionState",
    "select_pair",
    "abm_step",
    "run_abm",
]

_CHUNK = 1 << 15


@dataclass(frozen=True)
class UniformWithReplacement:
    """i and j independent uniform; i == j is a genuine no-op draw."""


@dataclass(frozen=True)
class UniformWithoutReplacement:
    """i uniform, then j uniform over the remaining agents."""


@dataclass(frozen=True)
class DegreeWeighted:
    """i uniform, then j proportional to the network edge weight from i."""

    network: Network


@dataclass(frozen=True)
class ProbabilityProportional:
    """i uniform, then j proportional to p_ij; the interaction always occurs."""


SelectionScheme = Union[
    UniformWithReplacement, UniformWithoutReplacement, DegreeWeighted, ProbabilityProportional
]


class UpdateMode(enum.Enum):
    SINGLE = "single"
    BOTH = "both"
    SINGLE_WITHOUT_REPLACEMENT = "single_without_replacement"


@dataclass(frozen=True)
class ModelSpec:
    """Full configuration of one agent-based model."""

    n_agents: int
    h: float
    horizon: float
    kernel: InteractionKernel
    selection: SelectionScheme = field(default_factory=UniformWithReplacement)
    update_mode: UpdateMode = UpdateMode.SINGLE
    noise: NoiseFamily = field(default_factory=NoiseFamily)
    double_weighting: bool = False

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be at least 1")
        if self.h <= 0:
            raise ValueError("timestep must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        swor_mode = self.update_mode is UpdateMode.SINGLE_WITHOUT_REPLACEMENT
        swor_sel = isinstance(self.selection, UniformWithoutReplacement)
        if swor_mode != swor_sel:
            raise ValueError(
                "selection without replacement and the matching update mode "
                "must be used together"
            )
        if swor_sel and self.n_agents < 2:
            raise ValueError("selection without replacement needs at least 2 agents")
        if self.update_mode is UpdateMode.BOTH and not isinstance(
            self.selection, UniformWithReplacement
        ):
            raise ValueError("both-update mode is defined for uniform selection only")
        if isinstance(self.selection, DegreeWeighted):
            if self.selection.network.n != self.n_agents:
                raise ValueError("selection network size does not match n_agents")
        if self.double_weighting and not isinstance(self.selection, ProbabilityProportional):
            raise ValueError("double_weighting applies only to probability-proportional selection")
        self.noise.validate_for_population(self.n_agents)
        if self.h > 1.0 / self.n_agents:
            warnings.warn(
                f"h={self.h} exceeds 1/N={1.0 / self.n_agents}: the update distance "
                "exceeds 1 and opinions may leave the initial convex hull",
                stacklevel=2,
            )

    @property
    def mu(self) -> float:
        """Per-step update distance implied by the update mode."""
        if self.update_mode is UpdateMode.SINGLE:
            return self.n_agents * self.h
        if self.update_mode is UpdateMode.BOTH:
            return self.n_agents * self.h / 2.0
        return (self.n_agents - 1) * self.h


@dataclass(frozen=True)
class OpinionState:
    t: float
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("opinion state contains non-finite entries")
        object.__setattr__(self, "x", x)


def select_pair(
    scheme: SelectionScheme,
    x: np.ndarray,
    kernel: InteractionKernel,
    rng: np.random.Generator,
) -> tuple[int, int, bool]:
    """Draw the pair (i, j); the flag marks selection that skips acceptance."""
    n = len(x)
    i = int(rng.integers(n))
    if isinstance(scheme, UniformWithReplacement):
        return i, int(rng.integers(n)), False
    if isinstance(scheme, UniformWithoutReplacement):
        j = int(rng.integers(n - 1))
        return i, j + (j >= i), False
    if isinstance(scheme, DegreeWeighted):
        a = scheme.network.adjacency
        j = int(rng.choice(n, p=a[i] / a[i].sum()))
        return i, j, False
    if isinstance(scheme, ProbabilityProportional):
        w = np.asarray(eval_kernel(kernel, np.abs(x - x[i])), dtype=float)
        total = w.sum()
        if total <= 0.0:
            raise RuntimeError(
                f"agent {i} has zero total interaction probability; "
                "probability-proportional selection is undefined"
            )
        j = int(rng.choice(n, p=w / total))
        return i, j, True
    raise TypeError(f"unknown selection scheme {scheme!r}")


def abm_step(
    state: OpinionState,
    spec: ModelSpec,
    rng: np.random.Generator,
    pair: tuple[int, int] | None = None,
    force_accept: bool | None = None,
) -> OpinionState:
    """Advance the model by one timestep of size h.

    pair and force_accept bypass selection and the acceptance draw; they
    exist so tests can pin down a single transition.
    """
    x = state.x.copy()
    n = spec.n_agents
    if len(x) != n:
        raise ValueError("state size does not match spec")
    mu = spec.mu
    kind = spec.noise.kind

    if pair is None:
        i, j, always = select_pair(spec.selection, x, spec.kernel, rng)
    else:
        i, j = pair
        always = isinstance(spec.selection, ProbabilityProportional)
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError("pair index out of range")

    def accepted(p: float) -> bool:
        if force_accept is not None:
            return force_accept
        if always and not spec.double_weighting:
            return True
        return rng.random() < p

    if kind is NoiseKind.AMBIGUITY:
        eta = float(spec.noise.law.sample(spec.h, rng))
        omega = x[j] + eta
        p = eval_kernel(spec.kernel, abs(omega - x[i]))
        if accepted(p):
            if spec.update_mode is UpdateMode.BOTH:
                # each agent hears an independently perturbed opinion
                omega_i = x[i] + float(spec.noise.law.sample(spec.h, rng))
                x[i] += mu * (omega - x[i])
                x[j] += mu * (omega_i - x[j])
            else:
                x[i] += mu * (omega - x[i])
    else:
        p = eval_kernel(spec.kernel, abs(x[j] - x[i]))
        ok = accepted(p)
        d = x[j] - x[i]
        if kind is NoiseKind.NONE:
            if ok:
                if spec.update_mode is UpdateMode.BOTH:
                    x[i] += mu * d
                    x[j] -= mu * d
                else:
                    x[i] += mu * d
        elif kind is NoiseKind.EXTERNAL:
            xi = float(spec.noise.law.sample(spec.h, rng))
            x[i] += xi + (mu * d if ok else 0.0)
            if ok and spec.update_mode is UpdateMode.BOTH:
                x[j] += float(spec.noise.law.sample(spec.h, rng)) - mu * d
        elif kind is NoiseKind.ADAPTATION:
            if ok:
                x[i] += mu * d + float(spec.noise.law.sample(spec.h, rng))
                if spec.update_mode is UpdateMode.BOTH:
                    x[j] += -mu * d + float(spec.noise.law.sample(spec.h, rng))
        elif kind is NoiseKind.RANDOM_UPDATE_DISTANCE:
            if ok:
                nu = float(spec.noise.law.sample(spec.h, rng))
                x[i] += nu * d
                if spec.update_mode is UpdateMode.BOTH:
                    x[j] -= nu * d
        else:
            raise TypeError(f"unknown noise kind {kind!r}")

    return OpinionState(t=state.t + spec.h, x=x)


def run_abm(
    spec: ModelSpec,
    x0: Sequence[float],
    sample_times: Sequence[float],
    rng: np.random.Generator,
    check_hull: bool = False,
) -> Trajectory:
    """Run ceil(T/h) steps and record the piecewise-constant state.

    A sample at time s records the state after floor(s/h) steps. With
    check_hull enabled, any updated opinion leaving [min x0, max x0]
    raises RuntimeError.
    """
    x0 = np.asarray(x0, dtype=float)
    n = spec.n_agents
    if len(x0) != n:
        raise ValueError("x0 size does not match spec")
    times = np.asarray(sample_times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("sample times must be sorted")
    if len(times) and (times[0] < 0 or times[-1] > spec.horizon + 1e-9):
        raise ValueError("sample times must lie within [0, T]")

    h = spec.h
    total = int(math.ceil(spec.horizon / h - 1e-9))
    targets = [min(total, int(math.floor(s / h + 1e-9))) for s in times]
    out = np.empty((len(times), n))

    x = x0.tolist()
    lo, hi = float(x0.min()), float(x0.max())
    done = 0
    ti = 0
    while True:
        while ti < len(targets) and targets[ti] == done:
            out[ti] = x
            ti += 1
        if done == total:
            break
        stop = total if ti >= len(targets) else targets[ti]
        m = min(_CHUNK, stop - done)
        _run_chunk(spec, x, m, rng, lo, hi, check_hull)
        done += m

    return Trajectory(times, out)


def _run_chunk(spec, x, m, rng, lo, hi, check_hull):
    """Execute m steps in place on the opinion list x.

    Random draws happen in a fixed order per chunk (pair indices, then
    acceptance uniforms, then noise) so runs are reproducible per seed.
    """
    n = spec.n_agents
    h = spec.h
    mu = spec.mu
    kind = spec.noise.kind
    pfn = spec.kernel.scalar_fn()
    both = spec.update_mode is UpdateMode.BOTH
    sel = spec.selection

    ii = rng.integers(0, n, m).tolist()
    if isinstance(sel, UniformWithReplacement):
        jj = rng.integers(0, n, m).tolist()
    elif isinstance(sel, UniformWithoutReplacement):
        raw = rng.integers(0, n - 1, m)
        jj = (raw + (raw >= np.asarray(ii))).tolist()
    elif isinstance(sel, DegreeWeighted):
        uj = rng.random(m)
        cum = np.cumsum(sel.network.adjacency, axis=1)
        jj = [bisect_right(cum[i].tolist(), u * cum[i][-1]) for i, u in zip(ii, uj)]
        jj = [min(j, n - 1) for j in jj]
    else:  # ProbabilityProportional: j depends on the current state
        uj = rng.random(m).tolist()
        jj = None
    ua = rng.random(m).tolist()

    if kind is NoiseKind.NONE:
        zz = None
    elif both and kind in (NoiseKind.EXTERNAL, NoiseKind.ADAPTATION, NoiseKind.AMBIGUITY):
        zz = np.asarray(spec.noise.law.sample(h, rng, (m, 2)))
    else:
        zz = np.asarray(spec.noise.law.sample(h, rng, m)).tolist()

    always = isinstance(sel, ProbabilityProportional) and not spec.double_weighting

    for k in range(m):
        i = ii[k]
        if jj is None:
            xa = np.asarray(x)
            w = np.asarray(eval_kernel(spec.kernel, np.abs(xa - x[i])), dtype=float)
            total = float(w.sum())
            if total <= 0.0:
                raise RuntimeError(
                    f"agent {i} has zero total interaction probability; "
                    "probability-proportional selection is undefined"
                )
            j = int(np.searchsorted(np.cumsum(w), uj[k] * total, side="right"))
            j = min(j, n - 1)
        else:
            j = jj[k]

        xi = x[i]
        xj = x[j]

        if kind is NoiseKind.AMBIGUITY:
            eta = zz[k][0] if both else zz[k]
            omega = xj + eta
            dd = omega - xi
            if always or ua[k] < pfn(abs(dd)):
                v = xi + mu * dd
                if check_hull and not lo <= v <= hi:
                    raise RuntimeError(f"opinion of agent {i} left the initial hull")
                x[i] = v
                if both:
                    x[j] = xj + mu * (xi + zz[k][1] - xj)
            continue

        d = xj - xi
        ok = always or ua[k] < pfn(abs(d))

        if kind is NoiseKind.NONE:
            if ok and d != 0.0:
                v = xi + mu * d
                if check_hull and not lo <= v <= hi:
                    raise RuntimeError(f"opinion of agent {i} left the initial hull")
                x[i] = v
                if both:
                    x[j] = xj - mu * d
        elif kind is NoiseKind.EXTERNAL:
            if both:
                x[i] = xi + zz[k][0] + (mu * d if ok else 0.0)
                x[j] = xj + zz[k][1] - (mu * d if ok else 0.0)
            else:
                x[i] = xi + zz[k] + (mu * d if ok else 0.0)
        elif kind is NoiseKind.ADAPTATION:
            if ok:
                if both:
                    x[i] = xi + mu * d + zz[k][0]
                    x[j] = xj - mu * d + zz[k][1]
                else:
                    x[i] = xi + mu * d + zz[k]
        else:  # random update distance
            if ok and d != 0.0:
                x[i] = xi + zz[k] * d
                if both:
                    x[j] = xj - zz[k] * d


def acceptance_probability(spec: ModelSpec, x: np.ndarray, i: int, j: int) -> float:
    """Probability that a proposed (i, j) encounter leads to an interaction."""
    return eval_kernel(spec.kernel, abs(float(x[j]) - float(x[i])))


def interaction_matrix(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    """Pairwise interaction probabilities at state x."""
    return pairwise_matrix(spec.kernel, x)
