"""Via-point adaptation and blending of fitted trajectory models.

Both work purely on the kernel weights: demonstration points are damped by
activation functions and, for adaptation, a synthetic set sampled at the
target is appended with its own kernel bandwidth.
"""
from dataclasses import dataclass, field

import numpy as np

from .distributions._common import as_rng
from .errors import DimensionError
from .regression import Kernel, QueryGrid, fit_curve, normalise_raw

DEFAULT_G = 0.25
DEFAULT_A = 10.0
DEFAULT_LEAD = 0.4
DEFAULT_S_PER_TRAJ = 10

FORMS = ("step_down", "step_up", "window", "constant")


@dataclass(frozen=True)
class ActivationFunction:
    """Smooth weight alpha(t) in [0, 1] applied to demonstration points.

    Forms
    -----
    step_down : 0.5 - 0.5 tanh(a (t - b))
    step_up : 0.5 + 0.5 tanh(a (t - b))
    window : 1 - 0.5 tanh(a (t - t_star + c)) + 0.5 tanh(a (t - t_star - c))
    constant : ``value`` everywhere
    """

    form: str
    a: float = DEFAULT_A
    b: float = 0.0
    t_star: float = 0.0
    c: float = 0.0
    value: float = 1.0

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown activation form {self.form!r}; expected one of {FORMS}")
        if self.form == "constant" and not 0.0 <= self.value <= 1.0:
            raise ValueError("constant activation must lie in [0, 1]")

    @classmethod
    def step_down(cls, a, b):
        return cls("step_down", a=a, b=b)

    @classmethod
    def step_up(cls, a, b):
        return cls("step_up", a=a, b=b)

    @classmethod
    def window(cls, a, t_star, c):
        return cls("window", a=a, t_star=t_star, c=c)

    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", value=value)

    def complement(self):
        """The activation 1 - alpha (exact for the step and constant forms)."""
        if self.form == "step_down":
            return ActivationFunction.step_up(self.a, self.b)
        if self.form == "step_up":
            return ActivationFunction.step_down(self.a, self.b)
        if self.form == "constant":
            return ActivationFunction.constant(1.0 - self.value)
        raise ValueError("complement is only defined for step and constant activations")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.form == "step_down":
            out = 0.5 - 0.5 * np.tanh(self.a * (t - self.b))
        elif self.form == "step_up":
            out = 0.5 + 0.5 * np.tanh(self.a * (t - self.b))
        elif self.form == "window":
            out = (1.0 - 0.5 * np.tanh(self.a * (t - self.t_star + self.c))
                   + 0.5 * np.tanh(self.a * (t - self.t_star - self.c)))
        else:
            out = np.full(t.shape, float(self.value))
        return np.clip(out, 0.0, 1.0)

    def to_dict(self):
        keys = {"step_down": ("a", "b"), "step_up": ("a", "b"),
                "window": ("a", "t_star", "c"), "constant": ("value",)}[self.form]
        return {"form": self.form, **{k: float(getattr(self, k)) for k in keys}}

    @classmethod
    def from_dict(cls, doc):
        return cls(**{k: v for k, v in doc.items()})


def default_activation(t_star, a=DEFAULT_A, lead=DEFAULT_LEAD):
    """Step that switches the demonstrations off ``lead`` before t_star.

    Steps down for t_star >= 0.5 and up otherwise, so the damped side always
    contains the target time.
    """
    if t_star >= 0.5:
        return ActivationFunction.step_down(a, t_star - lead)
    return ActivationFunction.step_up(a, t_star + lead)


@dataclass(eq=False)
class ViaPointTarget:
    """A target distribution at time ``t_star`` and how to mix it in.

    ``params`` is a parameter object of the dataset's family (GaussianParams,
    EsagParams, AcgParams or SpdLognormalParams). The synthetic set of
    ``s_count`` draws is sampled once and cached.
    """

    t_star: float
    params: object
    s_count: int
    g: float = DEFAULT_G
    activation: ActivationFunction = None
    seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.t_star <= 1.0:
            raise ValueError("t_star must lie in [0, 1]")
        if int(self.s_count) < 1:
            raise ValueError("s_count must be at least 1")
        self.s_count = int(self.s_count)
        Kernel(self.g)
        if self.activation is None:
            self.activation = default_activation(self.t_star)


def synthesize_target_set(target, family):
    """``(times, points)``: S draws from the target distribution, all at t_star."""
    key = (family.tag, family.dim)
    if key not in target._cache:
        pts = family.sample(target.params, target.s_count, as_rng(target.seed))
        pts = np.asarray(pts, dtype=float).reshape((target.s_count,) + family.point_shape)
        target._cache[key] = (np.full(target.s_count, float(target.t_star)), pts)
    return target._cache[key]


def _combined(dataset, targets, kernel):
    fam = dataset.family
    alpha = np.ones(len(dataset))
    for tg in targets:
        alpha = alpha * tg.activation(dataset.times)
    parts = [dataset.prepared]
    synth = []
    for tg in targets:
        ts, pts = synthesize_target_set(tg, fam)
        parts.append(fam.prepare(pts))
        synth.append((ts, Kernel(tg.g)))
    T = dataset.times

    def raw_fn(t):
        pieces = [alpha * kernel(t - T)]
        pieces += [kg(t - ts) for ts, kg in synth]
        return np.concatenate(pieces)

    return np.concatenate(parts), raw_fn


def adapted_weights(t, dataset, targets, kernel):
    """Normalised weights over the demonstrations followed by each synthetic set.

    Returns ``(weights, C)`` with C(t) the total unnormalised weight.
    """
    _, raw_fn = _combined(dataset, list(targets), kernel)
    return normalise_raw(raw_fn(t))


def kle_fit_adapted(dataset, targets, grid=None, kernel=None, options=None):
    """KLE fit of the mixture of the demonstrations and the synthetic target sets."""
    if kernel is None:
        raise ValueError("a Kernel is required")
    targets = list(targets)
    grid = QueryGrid.equidistant() if grid is None else grid
    prepared, raw_fn = _combined(dataset, targets, kernel)
    config = {"bandwidth": kernel.h, "manifold": dataset.manifold, "dim": dataset.dim,
              "targets": len(targets)}
    return fit_curve(dataset.family, prepared, raw_fn, grid, options, config)


def blend(dataset_a, dataset_b, switch, grid=None, kernel=None, options=None):
    """Fit trajectories that hand over from ``dataset_a`` to ``dataset_b``.

    ``switch`` is the pair (alpha_A, alpha_B) of activation functions applied
    to the points of each set.
    """
    if kernel is None:
        raise ValueError("a Kernel is required")
    if (dataset_a.manifold, dataset_a.dim) != (dataset_b.manifold, dataset_b.dim):
        raise DimensionError("blended datasets must share manifold and dimension")
    alpha_a, alpha_b = switch
    grid = QueryGrid.equidistant() if grid is None else grid
    Ta, Tb = dataset_a.times, dataset_b.times
    wa, wb = alpha_a(Ta), alpha_b(Tb)
    prepared = np.concatenate([dataset_a.prepared, dataset_b.prepared])

    def raw_fn(t):
        return np.concatenate([wa * kernel(t - Ta), wb * kernel(t - Tb)])

    config = {"bandwidth": kernel.h, "manifold": dataset_a.manifold, "dim": dataset_a.dim}
    return fit_curve(dataset_a.family, prepared, raw_fn, grid, options, config)
