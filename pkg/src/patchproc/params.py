"""Parameter sets for the three model families, with flat-JSON serialization."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union


class ParamError(ValueError):
    """Invalid or inconsistent model parameters."""


@dataclass(frozen=True)
class MassAction:
    """Mass-action force of infection: a susceptible is infected at rate I + V."""

    def __str__(self) -> str:
        return "mass_action"


@dataclass(frozen=True)
class Saturating:
    """Saturating force of infection m1*I/(a1+I+V) + m2*V/(a2+I+V)."""

    m1: float
    m2: float
    a1: float
    a2: float

    def __post_init__(self):
        for name in ("m1", "m2", "a1", "a2"):
            v = getattr(self, name)
            if not (v > 0):
                raise ParamError(f"{name} must be strictly positive, got {v}")

    def __str__(self) -> str:
        return "saturating"


Foi = Union[MassAction, Saturating]


def _check_positive(obj, names):
    for name in names:
        v = getattr(obj, name)
        if not (v > 0):
            raise ParamError(f"{name} must be strictly positive, got {v}")


@dataclass(frozen=True)
class ParamSet1P:
    """One-patch SIV rates.

    beta: birth rate of susceptibles; mu: density-dependent mortality
    (death rate of S is mu*S^2); alpha: infected mortality; delta: viral
    shedding; omega: viral clearance; foi: force-of-infection variant.
    """

    beta: float
    mu: float
    alpha: float
    delta: float
    omega: float
    foi: Foi = MassAction()

    def __post_init__(self):
        _check_positive(self, ("beta", "mu", "alpha", "delta", "omega"))

    @property
    def s_bar(self) -> float:
        """Disease-free susceptible population beta/mu."""
        return self.beta / self.mu

    def to_dict(self) -> dict:
        d = {"beta": self.beta, "mu": self.mu, "alpha": self.alpha,
             "delta": self.delta, "omega": self.omega, "foi": str(self.foi)}
        if isinstance(self.foi, Saturating):
            d.update(m1=self.foi.m1, m2=self.foi.m2, a1=self.foi.a1, a2=self.foi.a2)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ParamSet1P":
        d = dict(d)
        foi_tag = d.pop("foi", "mass_action")
        base = {"beta", "mu", "alpha", "delta", "omega"}
        if foi_tag == "mass_action":
            allowed = base
            foi: Foi = MassAction()
        elif foi_tag == "saturating":
            allowed = base | {"m1", "m2", "a1", "a2"}
            try:
                foi = Saturating(m1=d.pop("m1"), m2=d.pop("m2"),
                                 a1=d.pop("a1"), a2=d.pop("a2"))
            except KeyError as e:
                raise ParamError(f"saturating foi requires key {e.args[0]}") from None
        else:
            raise ParamError(f"unknown foi tag {foi_tag!r}")
        unknown = set(d) - base
        if unknown:
            raise ParamError(f"unknown parameter keys: {sorted(unknown)}")
        missing = base - set(d)
        if missing:
            raise ParamError(f"missing parameter keys: {sorted(missing)}")
        return cls(foi=foi, **{k: float(d[k]) for k in base})


@dataclass(frozen=True)
class ParamSet2P:
    """Two-patch SIV-SIV rates; patches coupled only by viral diffusion at rate k."""

    beta1: float
    mu1: float
    beta2: float
    mu2: float
    alpha: float
    delta: float
    omega: float
    k: float

    _FIELDS = ("beta1", "mu1", "beta2", "mu2", "alpha", "delta", "omega", "k")

    def __post_init__(self):
        _check_positive(self, self._FIELDS)

    @property
    def s_bar1(self) -> float:
        return self.beta1 / self.mu1

    @property
    def s_bar2(self) -> float:
        return self.beta2 / self.mu2

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self._FIELDS}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamSet2P":
        unknown = set(d) - set(cls._FIELDS)
        if unknown:
            raise ParamError(f"unknown parameter keys: {sorted(unknown)}")
        missing = set(cls._FIELDS) - set(d)
        if missing:
            raise ParamError(f"missing parameter keys: {sorted(missing)}")
        return cls(**{name: float(d[name]) for name in cls._FIELDS})


ParamSet = Union[ParamSet1P, ParamSet2P]


def params_to_json(params: ParamSet) -> str:
    return json.dumps(params.to_dict(), sort_keys=True)


def params_from_json(text: str, two_patch: bool) -> ParamSet:
    d = json.loads(text)
    return ParamSet2P.from_dict(d) if two_patch else ParamSet1P.from_dict(d)
