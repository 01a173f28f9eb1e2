"""
Experiment kinds behind ``becdephase run``.

Each kind turns an :class:`ExperimentConfig` into an
:class:`ExperimentResult`: a list of named series plus a JSON-ready
summary. Nothing here touches the file system.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import oracle
from ..densmat import ReducedDensityMatrix, evolve, separation_integrals
from ..kernels import Bath, gamma0_curve, gamma_general, pair_curves, plateau, spectral_density
from ..params import HBAR
from ..quadrature import QuadratureError, QuadratureSpec
from .config import ExperimentConfig

INVERSION_START = 10e-6  # s; the inversion claim concerns the correlated stage only


class NumericalFailure(RuntimeError):
    """A curve could not be computed; ``curve`` names it."""

    def __init__(self, curve: str, message: str):
        super().__init__(f"curve {curve}: {message}")
        self.curve = curve


@dataclass
class Series:
    label: str
    x: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    x_name: str = "t_seconds"
    panel: str | tuple[str, ...] | None = "main"  # None: written but not plotted
    legend: str = ""
    style: str = "-"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.errors = np.asarray(self.errors, dtype=float)

    @property
    def panels(self) -> tuple[str, ...]:
        if self.panel is None:
            return ()
        return (self.panel,) if isinstance(self.panel, str) else tuple(self.panel)


@dataclass(frozen=True)
class Panel:
    key: str
    title: str
    ylabel: str
    xlabel: str = "t (s)"
    log_x: bool = False
    log_y: bool = False
    inset_of: str | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    series: list[Series]
    panels: list[Panel]
    summary: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def get(self, label: str) -> Series:
        for s in self.series:
            if s.label == label:
                return s
        raise KeyError(label)


@contextmanager
def _curve(label: str):
    try:
        yield
    except QuadratureError as exc:
        raise NumericalFailure(label, str(exc)) from None


def _check(series: Series) -> Series:
    if not (np.all(np.isfinite(series.values)) and np.all(np.isfinite(series.errors))):
        raise NumericalFailure(series.label, "non-finite values")
    return series


def _spec(cfg: ExperimentConfig) -> QuadratureSpec:
    return QuadratureSpec(rel_tol=cfg.rel_tol)


def _baths(cfg: ExperimentConfig) -> list[Bath]:
    return [Bath(cfg.params, interacting=(b == "condensate")) for b in cfg.baths]


def _sym(bath: Bath, name: str) -> str:
    """Symbol for legends: ``Gamma`` in 3D, ``gamma`` in 1D."""
    return ("Gamma" if bath.d == 3 else "gamma") + name


def _pair(cfg, bath, times, D, workers, tag=""):
    label = f"pair_{bath.kind}{tag}"
    with _curve(label):
        return pair_curves(times, bath, D, _spec(cfg), workers)


def onset_time(times, delta, two_gamma0, threshold: float) -> float | None:
    """First time at which ``|delta| > threshold * 2 Gamma0``."""
    times = np.asarray(times)
    with np.errstate(divide="ignore", invalid="ignore"):
        hit = (np.abs(delta) > threshold * np.asarray(two_gamma0)) & (np.asarray(two_gamma0) > 0)
    idx = np.nonzero(hit)[0]
    return float(times[idx[0]]) if idx.size else None


def max_ratio(delta, two_gamma0) -> float:
    two_gamma0 = np.asarray(two_gamma0)
    ok = two_gamma0 > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(np.abs(np.asarray(delta)[ok]) / two_gamma0[ok]))


def _fmt_L(x: float, L: float) -> str:
    return f"{x / L:g}L"


# -- kinds ---------------------------------------------------------------------

def gamma0_compare(cfg: ExperimentConfig, workers=None) -> ExperimentResult:
    series, summary = [], {"plateau": {}, "final": {}}
    times, inset = cfg.times(), cfg.inset_times()
    for bath in _baths(cfg):
        name = _sym(bath, "0")
        label = f"{name}_{bath.kind}"
        with _curve(label):
            c = gamma0_curve(times, bath, _spec(cfg), workers)
        style = "--" if bath.interacting else "-"
        series.append(_check(Series(label, times, c.values, c.errors, legend=f"{name} {bath.kind}",
                                    style=style)))
        summary["final"][label] = float(c.values[-1])
        with _curve(label + "_plateau"):
            # inf (no plateau) is written as null
            summary["plateau"][label] = plateau(bath, "0", spec=_spec(cfg))
        if inset is not None:
            with _curve(label + "_inset"):
                ci = gamma0_curve(inset, bath, _spec(cfg), workers)
            series.append(_check(Series(label + "_inset", inset, ci.values, ci.errors, panel="inset",
                                        legend=f"{name} {bath.kind}", style=style)))
    panels = [Panel("main", cfg.title or "single impurity", "exponent", log_x=cfg.log_x)]
    if inset is not None:
        panels.append(Panel("inset", "", "", inset_of="main"))
    return ExperimentResult(cfg, series, panels, summary)


def gamma_pair(cfg: ExperimentConfig, workers=None) -> ExperimentResult:
    times = cfg.times()
    series, panels = [], []
    summary = {"D": cfg.params.D, "inversion": {}}
    for bath in _baths(cfg):
        curves = _pair(cfg, bath, times, cfg.params.D, workers)
        g0, g1, g2, dl = (curves[k] for k in ("0", "1", "2", "delta"))
        pk = bath.kind
        for name, c, scale, style in ((_sym(bath, "1"), g1, 1.0, "-"), (_sym(bath, "2"), g2, 1.0, "--"),
                                      ("2" + _sym(bath, "0"), g0, 2.0, ":")):
            series.append(_check(Series(f"{name}_{pk}", times, scale * c.values, scale * c.errors,
                                        panel=pk, legend=name, style=style)))
        series.append(_check(Series(f"delta_{pk}", times, dl.values, dl.errors, panel=None)))
        late = times > INVERSION_START
        ok = (g1.values < 2 * g0.values) & (2 * g0.values < g2.values)
        summary["inversion"][pk] = {
            "holds_after_10us": bool(np.all(ok[late])),
            "violations_after_10us": int(np.sum(~ok[late])),
            "max_ratio_delta_over_2Gamma0": max_ratio(dl.values, 2 * g0.values),
        }
        panels.append(Panel(pk, f"{pk} ({cfg.title})" if cfg.title else pk, "exponent", log_x=cfg.log_x))
    return ExperimentResult(cfg, series, panels, summary)


def delta_kind(cfg: ExperimentConfig, workers=None) -> ExperimentResult:
    times, inset = cfg.times(), cfg.inset_times()
    series, summary = [], {"D": cfg.params.D, "onset_seconds": {}, "max_ratio": {}}
    for bath in _baths(cfg):
        pk = bath.kind
        curves = _pair(cfg, bath, times, cfg.params.D, workers)
        dl, g0 = curves["delta"], curves["0"]
        style = "--" if bath.interacting else "-"
        series.append(_check(Series(f"delta_{pk}", times, dl.values, dl.errors, legend=f"delta {pk}",
                                    style=style)))
        summary["onset_seconds"][pk] = onset_time(times, dl.values, 2 * g0.values, cfg.onset_threshold)
        summary["max_ratio"][pk] = max_ratio(dl.values, 2 * g0.values)
        if inset is not None:
            ci = _pair(cfg, bath, inset, cfg.params.D, workers, "_inset")["delta"]
            series.append(_check(Series(f"delta_{pk}_inset", inset, ci.values, ci.errors, panel="inset",
                                        legend=f"delta {pk}", style=style)))
    panels = [Panel("main", cfg.title or "collective deviation", "delta", log_x=cfg.log_x)]
    if inset is not None:
        panels.append(Panel("inset", "", "", inset_of="main"))
    return ExperimentResult(cfg, series, panels, summary)


_DISTANCE_STYLES = ("-.", "--", ":", (0, (5, 1, 1, 1, 1, 1)))


def distance_sweep(cfg: ExperimentConfig, workers=None) -> ExperimentResult:
    """Pair exponents for each separation ``2D`` in ``cfg.separations``."""
    times = cfg.times()
    L = cfg.params.L
    seps = cfg.separations or (2 * cfg.params.D,)
    series, panels = [], []
    summary = {"separations_2D": list(seps), "onset_seconds": {}, "max_ratio": {}}
    for bath in _baths(cfg):
        pk = bath.kind
        onsets, ratios = {}, {}
        for j, sep in enumerate(seps):
            tag = "2D" + _fmt_L(sep, L)
            curves = _pair(cfg, bath, times, 0.5 * sep, workers, "_" + tag)
            g0 = curves["0"]
            style = _DISTANCE_STYLES[j % len(_DISTANCE_STYLES)]
            for key in ("1", "2"):
                name = _sym(bath, key)
                c = curves[key]
                series.append(_check(Series(f"{name}_{pk}_{tag}", times, c.values, c.errors,
                                            panel=f"{name}_{pk}", legend=f"2D = {_fmt_L(sep, L)}",
                                            style=style)))
            dl = curves["delta"]
            series.append(_check(Series(f"delta_{pk}_{tag}", times, dl.values, dl.errors, panel=None)))
            onsets[tag] = onset_time(times, dl.values, 2 * g0.values, cfg.onset_threshold)
            ratios[tag] = max_ratio(dl.values, 2 * g0.values)
            if j == 0:
                ref = g0  # independent of D
        two = "2" + _sym(bath, "0")
        series.append(_check(Series(f"{two}_{pk}", times, 2 * ref.values, 2 * ref.errors,
                                    panel=(f"{_sym(bath, '1')}_{pk}", f"{_sym(bath, '2')}_{pk}"),
                                    legend=two, style="-")))
        summary["onset_seconds"][pk] = onsets
        summary["max_ratio"][pk] = ratios
    for bath in _baths(cfg):
        for key in ("1", "2"):
            name = _sym(bath, key)
            panels.append(Panel(f"{name}_{bath.kind}", f"{name}, {bath.kind}", name, log_x=cfg.log_x))
    return ExperimentResult(cfg, series, panels, summary)


def oned_compare(cfg: ExperimentConfig, workers=None) -> ExperimentResult:
    if cfg.params.d != 1:
        raise NumericalFailure("oned-compare", "needs a one-dimensional parameter set (preset standard-1d)")
    res = gamma_pair(cfg, workers)
    times = cfg.times()
    for bath in _baths(cfg):
        g0 = res.get(f"2gamma0_{bath.kind}").values / 2
        # doubling ratio gamma0(2t)/gamma0(t) on the grid, by interpolation
        probe = np.array([t for t in (0.1e-3, 0.2e-3, 0.25e-3) if 2 * t <= times[-1]])
        ratio = np.interp(2 * probe, times, g0) / np.interp(probe, times, g0) if probe.size else []
        res.summary.setdefault("doubling_ratio", {})[bath.kind] = {
            f"{t:.6g}": float(r) for t, r in zip(probe, ratio)}
    return res


def spectral_kind(cfg: ExperimentConfig, workers=None) -> ExperimentResult:
    """``J(omega)`` per bath with log-log slopes below ``n0 g_B / hbar``."""
    p = cfg.params
    scales = Bath(p).scales
    omega_c = p.n0 * scales.g_B / HBAR
    lo = cfg.omega_min or 1e-5 * omega_c
    hi = cfg.omega_max or 1e2 * omega_c
    if not 0 < lo < hi:
        raise NumericalFailure("spectral-density", "need 0 < omega_min < omega_max")
    omega = np.geomspace(lo, hi, cfg.n_omega)
    series, slopes = [], {}
    for bath in _baths(cfg):
        J = spectral_density(omega, bath)
        label = f"J_{bath.kind}"
        series.append(_check(Series(label, omega, J, np.zeros_like(J), x_name="omega_rad_per_s",
                                    legend=bath.kind, style="--" if bath.interacting else "-")))
        slopes[bath.kind] = fit_low_frequency_slope(lambda w, b=bath: spectral_density(w, b), omega_c)
    summary = {"omega_c": omega_c, "fit_window": list(FIT_WINDOW), "slopes": slopes,
               "expected": {"condensate": p.d + 2, "free": p.d / 2}}
    panels = [Panel("main", cfg.title or "spectral density", "J (1/s)", xlabel="omega (rad/s)",
                    log_x=True, log_y=True)]
    return ExperimentResult(cfg, series, panels, summary)


# decades relative to omega_c = n0 g_B / hbar
FIT_WINDOW = (1e-4, 1e-2)


def fit_low_frequency_slope(J: Callable, omega_c: float, window=FIT_WINDOW, n: int = 41) -> float:
    """Least-squares slope of ``log J`` against ``log omega`` over ``window * omega_c``."""
    w = np.geomspace(window[0] * omega_c, window[1] * omega_c, n)
    return float(np.polyfit(np.log(w), np.log(J(w)), 1)[0])


DEMO_PAIRS = (((0, 0), (1, 1)), ((0, 1), (1, 0)), ((0, 0), (0, 1)))


def densmat_demo(cfg: ExperimentConfig, workers=None) -> ExperimentResult:
    """Two sites prepared in ``|+>|+>``; coherence magnitudes and one phase."""
    times = cfg.times()
    plus = np.full(4, 0.5, dtype=complex)
    rho0 = ReducedDensityMatrix.pure(plus)
    series, panels, final = [], [], {}
    spec = _spec(cfg)
    for bath in _baths(cfg):
        pk = bath.kind
        geom = bath.geometry(2)
        mags = {pair: np.zeros(len(times)) for pair in DEMO_PAIRS}
        phase = np.zeros(len(times))
        rho = rho0
        with _curve(f"densmat_{pk}"):
            for i, t in enumerate(times):
                ints = separation_integrals(float(t), bath, geom, spec, workers) if t > 0 else None
                rho = evolve(rho0, float(t), bath, geom, spec, integrals=ints)
                for pair in DEMO_PAIRS:
                    mags[pair][i] = abs(rho.element(*pair))
                phase[i] = float(np.angle(rho.element((0, 0), (1, 1))))
        for j, pair in enumerate(DEMO_PAIRS):
            tag = "".join(map(str, pair[0])) + "_" + "".join(map(str, pair[1]))
            series.append(_check(Series(f"abs_rho_{tag}_{pk}", times, mags[pair], np.zeros(len(times)),
                                        panel=pk, legend=f"|rho_{tag}|", style=("-", "--", ":")[j])))
        series.append(_check(Series(f"arg_rho_00_11_{pk}", times, phase, np.zeros(len(times)), panel=None)))
        final[pk] = rho.to_json()
        panels.append(Panel(pk, f"coherences, {pk}", "|rho_nm|", log_x=cfg.log_x))
    summary = {"initial_state": "|+>|+>", "basis": "little-endian", "t_final": float(times[-1])}
    return ExperimentResult(cfg, series, panels, summary, extras={"final_density_matrices": final})


ORACLE_RADIAL = (25, 50, 100, 200, 400)
ORACLE_ANGULAR = 64
ORACLE_TIMES = (10e-6, 50e-6)


def oracle_suite(cfg: ExperimentConfig, workers=None) -> ExperimentResult:
    """Discrete-bath checks: mode-sum convergence and Fock-space residuals."""
    p = cfg.params
    if p.d != 3:
        raise NumericalFailure("oracle-suite", "the shell oracle needs a three-dimensional parameter set")
    bath = Bath(p)
    tight = QuadratureSpec(rel_tol=1e-12)
    series, conv = [], {}
    for t in ORACLE_TIMES:
        label = f"oracle_rel_error_t{t * 1e6:g}us"
        with _curve(label):
            ref = float(gamma_general((0,), (1,), t, bath, spec=tight))
        errs = []
        for n in ORACLE_RADIAL:
            model = oracle.DiscreteSpinBoson.shells_3d(bath, n, ORACLE_ANGULAR)
            val = oracle.discrete_gamma(model, (0,), (1,), model.reduced_time(t))
            errs.append(abs(val - ref) / ref)
        errs = np.array(errs)
        series.append(Series(label, np.array(ORACLE_RADIAL, float), errs, np.zeros_like(errs),
                             x_name="n_radial", legend=f"t = {t * 1e6:g} us"))
        conv[label] = {"reference": ref, "rel_errors": [float(e) for e in errs],
                       "error_ratios": [float(a / b) if b > 0 else None for a, b in zip(errs[:-1], errs[1:])]}
    small = oracle.DiscreteSpinBoson.from_modes(
        bath, np.array([[0.8, 0.1, -0.2], [1.5, 0.4, 0.3]]), volume=2e3,
        geometry=bath.geometry(2), n_sites=2, cutoff=8)
    period = 2 * math.pi / float(np.min(small.energies))
    residuals = {
        "factorization_merged": oracle.factorization_residual(small, period, "merged"),
        "factorization_split": oracle.factorization_residual(small, period, "split"),
        "glauber_g0.5_cutoff12": oracle.glauber_residual(0.5, 12),
    }
    summary = {"convergence": conv, "residuals": residuals, "n_angular": ORACLE_ANGULAR}
    panels = [Panel("main", cfg.title or "mode-sum convergence", "relative error", xlabel="radial shells",
                    log_x=True, log_y=True)]
    return ExperimentResult(cfg, series, panels, summary)


RUNNERS: dict[str, Callable[..., ExperimentResult]] = {
    "gamma0-compare": gamma0_compare,
    "gamma-pair": gamma_pair,
    "delta": delta_kind,
    "distance-sweep": distance_sweep,
    "oned-compare": oned_compare,
    "spectral-density": spectral_kind,
    "densmat-demo": densmat_demo,
    "oracle-suite": oracle_suite,
}


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    return RUNNERS[cfg.kind](cfg, workers)
