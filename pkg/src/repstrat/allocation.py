"""Sample-size allocation from per-stratum precision targets.

The planner starts from a precision target g_i per stratum: the stratum sample
mean book amount should fall within g_i of the stratum population mean with
probability 1 - gamma. Solving the normal-approximation inequality for n_i
gives, with the finite population correction,

    n_i = z^2 * V_i * N_i / (g_i^2 * (N_i - 1) + z^2 * V_i),      z = z_{gamma/2}

and without it n_i = z^2 * V_i / g_i^2. The g_i may be given directly or
derived from one of five parametric families (equal absolute precision, equal
relative precision, proportional, Neyman, and a compromise form), tied to an
overall precision g at confidence 1 - alpha through

    sum_i W_i^2 * g_i^2 = g^2 * z_{gamma/2}^2 / z_{alpha/2}^2.

Given any three of {family parameter, alpha, gamma, g} the fourth is solved
from that relation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from math import fsum
from typing import Sequence

from .errors import DomainError, SpecError
from .population import PopulationFrame

MODES = ("explicit", "caseA", "caseB", "caseC", "caseD", "caseE")

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Rational approximation coefficients (Acklam), refined below with one
# Halley step against erfc so the result is accurate to ~1e-15.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / _SQRT2)


def two_sided_tail(t: float) -> float:
    """P(|Z| > t) for standard normal Z and t >= 0."""
    return math.erfc(t / _SQRT2)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF.

    Rational approximation plus one Halley refinement step; absolute error is
    far below 1e-8 across (1e-10, 1 - 1e-10). No dependency beyond math.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile probability must be in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    # Halley step: e is the CDF error at x, u the Newton correction.
    e = 0.5 * math.erfc(-x / _SQRT2) - p
    u = e * _SQRT_2PI * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


@dataclass(frozen=True)
class PrecisionSpec:
    """How per-stratum precisions are specified.

    mode 'explicit' supplies g_i directly; the five case modes derive g_i from
    a single parameter (C for caseA, f for the rest). gamma is the per-stratum
    tail probability; alpha and g describe overall precision. Whenever the
    case parameter is absent, all of (alpha, gamma, g) must be present so it
    can be solved; a parameter plus all three is overdetermined.
    """

    mode: str
    g_i: tuple[float, ...] | None = None
    C: float | None = None
    f: float | None = None
    gamma: float | None = None
    alpha: float | None = None
    g: float | None = None
    use_fpc: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise SpecError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        for name in ("gamma", "alpha"):
            v = getattr(self, name)
            if v is not None and not 0.0 < v < 1.0:
                raise SpecError(f"{name} must be in (0, 1), got {v}")
        for name in ("g", "C", "f"):
            v = getattr(self, name)
            if v is not None and v <= 0.0:
                raise SpecError(f"{name} must be > 0, got {v}")
        if self.mode == "explicit":
            if self.C is not None or self.f is not None:
                raise SpecError("mode 'explicit' takes g_i, not C or f")
            if self.g_i is not None:
                if len(self.g_i) == 0 or any(x <= 0.0 for x in self.g_i):
                    raise SpecError("g_i must be a non-empty list of positive values")
        else:
            if self.g_i is not None:
                raise SpecError(f"mode {self.mode!r} derives g_i; do not supply it")
            if self.mode == "caseA" and self.f is not None:
                raise SpecError("caseA uses parameter C, not f")
            if self.mode != "caseA" and self.C is not None:
                raise SpecError(f"{self.mode} uses parameter f, not C")

    @property
    def param_name(self) -> str:
        if self.mode == "explicit":
            return "g_i"
        return "C" if self.mode == "caseA" else "f"

    @property
    def param_value(self):
        if self.mode == "explicit":
            return self.g_i
        return self.C if self.mode == "caseA" else self.f


def parse_plan_spec(source: str | dict) -> PrecisionSpec:
    """Parse the plan-spec JSON document into a PrecisionSpec."""
    doc = json.loads(source) if isinstance(source, str) else source
    if not isinstance(doc, dict) or "mode" not in doc:
        raise SpecError("plan spec must be an object with a 'mode' field")
    known = {"mode", "g_i", "C", "f", "gamma", "alpha", "g", "use_fpc"}
    extra = set(doc) - known
    if extra:
        raise SpecError(f"unknown plan spec field(s): {sorted(extra)}")
    g_i = doc.get("g_i")
    return PrecisionSpec(
        mode=doc["mode"],
        g_i=tuple(float(x) for x in g_i) if g_i is not None else None,
        C=None if doc.get("C") is None else float(doc["C"]),
        f=None if doc.get("f") is None else float(doc["f"]),
        gamma=None if doc.get("gamma") is None else float(doc["gamma"]),
        alpha=None if doc.get("alpha") is None else float(doc["alpha"]),
        g=None if doc.get("g") is None else float(doc["g"]),
        use_fpc=bool(doc.get("use_fpc", True)),
    )


@dataclass(frozen=True)
class ResolvedPrecision:
    """Per-stratum precisions plus whichever of (param, alpha, gamma, g) were solved."""

    g_i: tuple[float, ...]
    gamma: float
    alpha: float | None
    g: float | None
    param_name: str
    param_value: float | tuple[float, ...]


def _case_scale(mode: str, frame: PopulationFrame) -> list[float]:
    """Per-stratum multiplier s_i such that g_i = param * s_i for the case modes."""
    scales = []
    for s in frame.strata:
        if mode == "caseA":
            scales.append(1.0)
        elif mode == "caseB":
            if not s.mean > 0.0:
                raise DomainError(f"stratum {s.index}: mean must be > 0 for caseB")
            scales.append(s.mean)
        elif mode == "caseC":
            scales.append(math.sqrt(s.variance / s.weight))
        elif mode == "caseD":
            scales.append(s.variance ** 0.25 / math.sqrt(s.weight))
        elif mode == "caseE":
            if not s.mean > 0.0:
                raise DomainError(f"stratum {s.index}: mean must be > 0 for caseE")
            scales.append(math.sqrt(s.mean))
        else:  # pragma: no cover
            raise SpecError(f"unknown mode {mode!r}")
    return scales


def resolve_case(spec: PrecisionSpec, frame: PopulationFrame) -> ResolvedPrecision:
    """Resolve the precision spec against a frame into concrete g_i.

    The anchor relation sum W_i^2 g_i^2 = g^2 z_{gamma/2}^2 / z_{alpha/2}^2
    supplies whichever one of {case parameter, alpha, gamma, g} is missing.
    With the parameter given, gamma alone is also accepted (alpha and g stay
    unresolved); anything else is reported as over- or under-determined.
    """
    W = frame.weights
    param = spec.param_value

    if param is None:
        if spec.alpha is None or spec.gamma is None or spec.g is None:
            raise SpecError(
                f"mode {spec.mode!r} without {spec.param_name} needs all of "
                "alpha, gamma, g to solve for it"
            )
        z_g = normal_quantile(1.0 - spec.gamma / 2.0)
        z_a = normal_quantile(1.0 - spec.alpha / 2.0)
        if spec.mode == "explicit":
            raise SpecError("mode 'explicit' requires g_i")
        scales = _case_scale(spec.mode, frame)
        denom = math.sqrt(fsum(w * w * s * s for w, s in zip(W, scales)))
        if denom <= 0.0:
            raise DomainError("cannot solve case parameter: all scale terms are zero")
        value = spec.g * z_g / (z_a * denom)
        g_i = tuple(value * s for s in scales)
        _check_positive(g_i)
        return ResolvedPrecision(g_i, spec.gamma, spec.alpha, spec.g,
                                 spec.param_name, value)

    # Parameter supplied: derive g_i, then fill in the missing overall piece.
    if spec.mode == "explicit":
        if len(param) != frame.stratum_count:
            raise SpecError(
                f"g_i has {len(param)} entries but the frame has "
                f"{frame.stratum_count} strata"
            )
        g_i = tuple(param)
    else:
        g_i = tuple(param * s for s in _case_scale(spec.mode, frame))
    _check_positive(g_i)

    given = [name for name in ("alpha", "gamma", "g") if getattr(spec, name) is not None]
    if given == ["gamma"]:
        return ResolvedPrecision(g_i, spec.gamma, None, None, spec.param_name, param)
    if len(given) == 3:
        raise SpecError(
            f"overdetermined spec: {spec.param_name} plus all of alpha, gamma, g"
        )
    if len(given) != 2:
        raise SpecError(
            f"underdetermined spec: with {spec.param_name} given, supply gamma "
            "(plus optionally alpha or g), or alpha and g"
        )

    s = math.sqrt(fsum(w * w * gi * gi for w, gi in zip(W, g_i)))
    if given == ["alpha", "gamma"]:
        z_g = normal_quantile(1.0 - spec.gamma / 2.0)
        z_a = normal_quantile(1.0 - spec.alpha / 2.0)
        g = z_a * s / z_g
        return ResolvedPrecision(g_i, spec.gamma, spec.alpha, g, spec.param_name, param)
    if given == ["gamma", "g"]:
        z_g = normal_quantile(1.0 - spec.gamma / 2.0)
        alpha = two_sided_tail(spec.g * z_g / s)
        return ResolvedPrecision(g_i, spec.gamma, alpha, spec.g, spec.param_name, param)
    # alpha and g given: solve gamma.
    z_a = normal_quantile(1.0 - spec.alpha / 2.0)
    gamma = two_sided_tail(z_a * s / spec.g)
    return ResolvedPrecision(g_i, gamma, spec.alpha, spec.g, spec.param_name, param)


def _check_positive(g_i: Sequence[float]) -> None:
    for i, v in enumerate(g_i, start=1):
        if not v > 0.0:
            raise DomainError(f"stratum {i}: derived precision g_i = {v} is not > 0")


@dataclass(frozen=True)
class SampleSizeResult:
    n_raw: float
    n: int
    census: bool = False
    floored: bool = False
    degenerate: bool = False


def stratum_sample_size(
    count: int,
    variance: float,
    precision: float,
    gamma: float,
    use_fpc: bool = True,
) -> SampleSizeResult:
    """Sample size for one stratum from its precision target.

    Ceiling rounding, floored at 2 (variance estimation needs two observations)
    and capped at the stratum count (census). A zero-variance stratum is
    satisfied by any sample; it gets the floor and a degenerate flag.
    """
    if count < 2:
        raise DomainError(f"stratum count must be >= 2, got {count}")
    if variance < 0.0:
        raise DomainError(f"variance must be >= 0, got {variance}")
    if not precision > 0.0:
        raise DomainError(f"precision must be > 0, got {precision}")
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must be in (0, 1), got {gamma}")
    if variance == 0.0:
        return SampleSizeResult(n_raw=0.0, n=2, floored=True, degenerate=True)
    z = normal_quantile(1.0 - gamma / 2.0)
    z2 = z * z
    if use_fpc:
        n_raw = z2 * variance * count / (precision * precision * (count - 1) + z2 * variance)
    else:
        n_raw = z2 * variance / (precision * precision)
    n = math.ceil(n_raw)
    floored = n < 2
    n = max(2, n)
    census = n >= count
    n = min(count, n)
    return SampleSizeResult(n_raw=n_raw, n=n, census=census, floored=floored)


@dataclass(frozen=True)
class PlanStratum:
    index: int
    count: int
    g_i: float
    n_raw: float
    n: int
    census: bool
    floored: bool
    degenerate: bool


@dataclass(frozen=True)
class AllocationPlan:
    """Per-stratum sample sizes plus the overall precision the plan implies."""

    mode: str
    strata: tuple[PlanStratum, ...]
    n: int
    w: tuple[float, ...]
    gamma: float
    alpha_nominal: float | None
    g: float | None
    param_name: str
    param_value: float | tuple[float, ...]
    fpc_applied: bool
    predicted_alpha: float | None
    rep_condition_holds: bool | None
    rep_condition_value: float | None

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s.n for s in self.strata)

    @property
    def g_i(self) -> tuple[float, ...]:
        return tuple(s.g_i for s in self.strata)


def allocate(spec: PrecisionSpec, frame: PopulationFrame) -> AllocationPlan:
    """Compute the full allocation plan for a frame under a precision spec."""
    for s in frame.strata:
        if s.count < 2:
            raise DomainError(
                f"stratum {s.index} has {s.count} claim(s); allocation needs >= 2"
            )
    resolved = resolve_case(spec, frame)
    plan_strata = []
    for s, gi in zip(frame.strata, resolved.g_i):
        r = stratum_sample_size(s.count, s.variance, gi, resolved.gamma, spec.use_fpc)
        plan_strata.append(
            PlanStratum(
                index=s.index, count=s.count, g_i=gi, n_raw=r.n_raw, n=r.n,
                census=r.census, floored=r.floored, degenerate=r.degenerate,
            )
        )
    n = sum(p.n for p in plan_strata)
    w = tuple(p.n / n for p in plan_strata)

    predicted = None
    rep_value = None
    rep_holds = None
    if resolved.g is not None:
        predicted = overall_alpha(
            frame, [p.n for p in plan_strata], resolved.g, spec.use_fpc
        )
        rep_value = rep_condition_value(frame, resolved.g_i, resolved.g)
        rep_holds = rep_value <= 1.0 + 1e-12

    return AllocationPlan(
        mode=spec.mode,
        strata=tuple(plan_strata),
        n=n,
        w=w,
        gamma=resolved.gamma,
        alpha_nominal=resolved.alpha,
        g=resolved.g,
        param_name=resolved.param_name,
        param_value=resolved.param_value,
        fpc_applied=spec.use_fpc,
        predicted_alpha=predicted,
        rep_condition_holds=rep_holds,
        rep_condition_value=rep_value,
    )


def overall_alpha(
    frame: PopulationFrame,
    sizes: Sequence[float],
    g: float,
    use_fpc: bool,
) -> float:
    """Tail probability that the stratified sample mean misses the population
    mean by more than g, under the normal approximation.

    Accepts fractional sizes so pre-rounding values can be evaluated too.
    """
    if not g > 0.0:
        raise DomainError(f"g must be > 0, got {g}")
    if len(sizes) != frame.stratum_count:
        raise DomainError("sizes must have one entry per stratum")
    terms = []
    for s, n in zip(frame.strata, sizes):
        if not n > 0:
            raise DomainError(f"stratum {s.index}: sample size must be > 0")
        factor = (1.0 / n - 1.0 / s.count) if use_fpc else 1.0 / n
        terms.append(s.weight * s.weight * s.variance * factor)
    var = fsum(terms)
    if var <= 0.0:
        return 0.0
    return two_sided_tail(g / math.sqrt(var))


def predicted_overall_precision(
    frame: PopulationFrame, plan: AllocationPlan, g: float
) -> float:
    """Overall tail probability achieved by the plan's integer sample sizes."""
    return overall_alpha(frame, [p.n for p in plan.strata], g, plan.fpc_applied)


def rep_condition_value(
    frame: PopulationFrame, g_i: Sequence[float], g: float
) -> float:
    """The weighted precision ratio sum W_i^2 (g_i/g)^2."""
    if not g > 0.0:
        raise DomainError(f"g must be > 0, got {g}")
    for i, v in enumerate(g_i, start=1):
        if not v > 0.0:
            raise DomainError(f"stratum {i}: g_i must be > 0")
    return fsum(
        (s.weight * gi / g) ** 2 for s, gi in zip(frame.strata, g_i)
    )


def representativeness_condition(
    frame: PopulationFrame, g_i: Sequence[float], g: float
) -> bool:
    """True when the stratum precisions guarantee overall precision g at
    confidence at least 1 - gamma (weighted ratio sum at most 1)."""
    return rep_condition_value(frame, g_i, g) <= 1.0 + 1e-12
