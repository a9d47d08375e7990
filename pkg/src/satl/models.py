"""Laser gain schemes expressed as Hamiltonian + rate-scaled collapse operators.

Three schemes are supported, all at exact resonance (frame rotating at the
cavity frequency, every detuning zero):

* three-incoherent: effective two-level atom, incoherent pump rate Gamma up
  the lasing transition, spontaneous rate gamma down it, field decay kappa.
* four-incoherent: effective three-level atom (ground 1, lower lasing 2,
  upper lasing 3); pump Gamma lifts 1->3, gamma decays 3->2 (the lasing
  transition, coupled to the cavity), gamma_f empties 2->1.
* four-coherent: four atomic levels; a coherent drive E_pump on 1<->4,
  spontaneous decay gamma_4 from 4->3, then the same lasing ladder as the
  incoherent four-level scheme.

A collapse pair (op, rate) enters the master equation as the dissipator
rate * (op rho op^dag - {op^dag op, rho}/2), so the cavity carries rate
2*kappa with bare operator a, and atomic channels carry their rates with
bare flip operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .hilbert import OperatorMatrix, StateSpace, annihilation, atomic_transition

SCHEMES = ("three-incoherent", "four-incoherent", "four-coherent")

# params each scheme actually consumes; anything else must be left at zero
_RELEVANT = {
    "three-incoherent": ("g", "kappa", "gamma", "Gamma"),
    "four-incoherent": ("g", "kappa", "gamma", "Gamma", "gamma_f"),
    "four-coherent": ("g", "kappa", "gamma", "gamma_f", "gamma_4", "E_pump"),
}

_ALL_PARAMS = ("g", "kappa", "gamma", "Gamma", "gamma_f", "gamma_4", "E_pump")


@dataclass(frozen=True)
class RateParams:
    """All rates and couplings, in whatever unit system the caller fixes.

    The CLI fixes gamma = 1 (everything in units of the lasing-transition
    spontaneous rate); the library itself does not care.
    """

    g: float = 0.0
    kappa: float = 0.0
    gamma: float = 0.0
    Gamma: float = 0.0
    gamma_f: float = 0.0
    gamma_4: float = 0.0
    E_pump: float = 0.0

    def __post_init__(self):
        for name in _ALL_PARAMS:
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ConfigurationError(f"{name} must be finite, got {value}")
            if value < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {value}")

    def validated_for(self, scheme: str) -> "RateParams":
        """Reject nonzero parameters the scheme does not use."""
        relevant = _RELEVANT[scheme]
        for name in _ALL_PARAMS:
            if name not in relevant and getattr(self, name) != 0.0:
                raise ConfigurationError(
                    f"{name} is not used by the {scheme} scheme; leave it at 0")
        return self

    def with_value(self, name: str, value: float) -> "RateParams":
        if name not in _ALL_PARAMS:
            raise ConfigurationError(f"unknown rate parameter {name!r}")
        return replace(self, **{name: value})


@dataclass(frozen=True)
class ModelSpec:
    """A concrete scheme: state space, Hamiltonian, collapse list, labels."""

    scheme: str
    space: StateSpace
    params: RateParams
    hamiltonian: OperatorMatrix
    collapses: tuple  # of (OperatorMatrix, rate) pairs, fixed order per scheme
    collapse_labels: tuple
    lasing_levels: tuple = field(default=(1, 2))  # (lower, upper)

    @property
    def dim(self) -> int:
        return self.space.dim

    def collapse_matrices(self):
        """Rate-absorbed collapse operators sqrt(rate) * op as ndarrays."""
        return [np.sqrt(rate) * op.data for op, rate in self.collapses]

    def max_rate(self) -> float:
        """Fastest rate in the problem, used for trajectory step control.

        Includes the coherent coupling frequencies (2g, 2E) since they set
        the fastest oscillation the step size must resolve.
        """
        rates = [rate for _, rate in self.collapses]
        rates.append(2.0 * self.params.g)
        rates.append(2.0 * self.params.E_pump)
        return max(rates)


def _check_n_max(n_max: int):
    if n_max < 1:
        raise ConfigurationError(f"n_max must be >= 1, got {n_max}")


def three_level_incoherent(params: RateParams, n_max: int) -> ModelSpec:
    """Effective two-level scheme with incoherent pump.

    H = i g (a^dag sigma_minus - a sigma_plus); collapse channels
    (a, 2*kappa), (sigma_minus, gamma), (sigma_plus, Gamma).
    """
    _check_n_max(n_max)
    params.validated_for("three-incoherent")
    space = StateSpace(2, n_max)
    a = annihilation(space)
    sm = atomic_transition(space, 2, 1)  # |1><2|
    sp = atomic_transition(space, 1, 2)  # |2><1|
    h = 1j * params.g * (a.dag().data @ sm.data - a.data @ sp.data)
    return ModelSpec(
        scheme="three-incoherent",
        space=space,
        params=params,
        hamiltonian=OperatorMatrix(h, "hamiltonian"),
        collapses=((a, 2.0 * params.kappa), (sm, params.gamma), (sp, params.Gamma)),
        collapse_labels=("cavity", "spont", "pump"),
        lasing_levels=(1, 2),
    )


def four_level_incoherent(params: RateParams, n_max: int) -> ModelSpec:
    """Effective three-level scheme with incoherent pump 1->3."""
    _check_n_max(n_max)
    params.validated_for("four-incoherent")
    space = StateSpace(3, n_max)
    a = annihilation(space)
    s13 = atomic_transition(space, 1, 3)  # pump jump
    s32 = atomic_transition(space, 3, 2)  # lasing decay
    s21 = atomic_transition(space, 2, 1)  # lower-level drain
    h = 1j * params.g * (a.dag().data @ s32.data - a.data @ s32.dag().data)
    return ModelSpec(
        scheme="four-incoherent",
        space=space,
        params=params,
        hamiltonian=OperatorMatrix(h, "hamiltonian"),
        collapses=(
            (a, 2.0 * params.kappa),
            (s13, params.Gamma),
            (s32, params.gamma),
            (s21, params.gamma_f),
        ),
        collapse_labels=("cavity", "pump", "spont", "drain"),
        lasing_levels=(2, 3),
    )


def four_level_coherent(params: RateParams, n_max: int) -> ModelSpec:
    """Four-level scheme driven coherently on 1<->4.

    The pump level 4 feeds the upper lasing level 3 through the gamma_4
    dissipator; without it level 4 would be a dead end and the drive alone
    could never produce gain.
    """
    _check_n_max(n_max)
    params.validated_for("four-coherent")
    space = StateSpace(4, n_max)
    a = annihilation(space)
    s32 = atomic_transition(space, 3, 2)
    s21 = atomic_transition(space, 2, 1)
    s43 = atomic_transition(space, 4, 3)
    s41 = atomic_transition(space, 4, 1)  # |1><4|
    h = 1j * params.g * (a.dag().data @ s32.data - a.data @ s32.dag().data)
    h = h + 1j * params.E_pump * (s41.data - s41.dag().data)
    return ModelSpec(
        scheme="four-coherent",
        space=space,
        params=params,
        hamiltonian=OperatorMatrix(h, "hamiltonian"),
        collapses=(
            (a, 2.0 * params.kappa),
            (s32, params.gamma),
            (s21, params.gamma_f),
            (s43, params.gamma_4),
        ),
        collapse_labels=("cavity", "spont", "drain", "pump-decay"),
        lasing_levels=(2, 3),
    )


_BUILDERS = {
    "three-incoherent": three_level_incoherent,
    "four-incoherent": four_level_incoherent,
    "four-coherent": four_level_coherent,
}


def build_model(scheme: str, params: RateParams, n_max: int) -> ModelSpec:
    """Scheme-tag dispatch used by the CLI and the adaptive truncation loop."""
    if scheme not in _BUILDERS:
        raise ConfigurationError(
            f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}")
    return _BUILDERS[scheme](params, n_max)
