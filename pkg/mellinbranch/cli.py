"""Command-line runs emitting reproducible JSON or CSV reports."""
import argparse
import csv
import io
import json
import logging
import sys
import time
from typing import Callable, Dict, Iterator, List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError as ModelError, field_validator

import mellinbranch
from mellinbranch import mellin_core
from mellinbranch.acceptance import run_acceptance
from mellinbranch.bellman_harris import (LifetimeDistribution, LimitLaw, OffspringPGF,
                                         check_expected_population, fixed_point_residual,
                                         malthusian, poly_case_lifetime_laplace,
                                         recover_lifetime_laplace, simulate_bellman_harris)
from mellinbranch.errors import NumericalError, SeriesOverflowError, ValidationError
from mellinbranch.log import init_log
from mellinbranch.luria_delbruck import (LDParams, ld_laplace, ld_moment_ratios, ld_scale_factor,
                                         moment_ratio_statistics, simulate_ld)
from mellinbranch.specfun import mittag_leffler_hankel, mittag_leffler_series
from mellinbranch.stable_laws import (StableParams, default_density_line, stable_density,
                                      stable_mellin, stable_mellin_numeric)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

Command = Literal["stable-mellin", "stable-density", "ml-eval", "mellin-check", "plancherel",
                  "bh-recover", "bh-fixed-point", "bh-simulate", "ld-simulate", "ld-limit",
                  "acceptance"]
Scalar = Union[int, float, str]

DENSITIES = {
    "exponential": mellin_core.exponential_density,
    "two-sided-exponential": mellin_core.two_sided_exponential,
    "uniform": mellin_core.uniform_density,
    "gaussian": mellin_core.gaussian_density,
    "cauchy": mellin_core.cauchy_density,
}


class RunConfig(BaseModel):
    command: Command
    params: Dict[str, Scalar] = Field(default_factory=dict)
    grids: Dict[str, str] = Field(default_factory=dict)
    seed: int = 0
    output_path: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    threads: int = Field(default=1, ge=1)

    @field_validator("grids")
    @classmethod
    def _grids_parse(cls, grids):
        for spec in grids.values():
            parse_grid(spec)
        return grids

    def param(self, key: str, default=None, cast: Callable = float):
        if key not in self.params:
            if default is None:
                raise ValidationError("missing parameter {!r}".format(key))
            return default
        try:
            return cast(self.params[key])
        except (TypeError, ValueError):
            raise ValidationError("parameter {!r} must be {}".format(key, cast.__name__))

    def grid(self, key: str, default: str) -> np.ndarray:
        return parse_grid(self.grids.get(key, default))


class ResultRow(BaseModel):
    name: str
    inputs: Dict[str, Scalar]
    value: float
    error_estimate: Union[float, str]


class RunReport(BaseModel):
    command: str
    params: Dict[str, Scalar]
    seed: int
    results: List[ResultRow] = Field(default_factory=list)
    version: str = mellinbranch.__version__
    wall_time: float = 0.0


def parse_grid(spec: str) -> np.ndarray:
    """'start:stop:count' into count evenly spaced points."""
    try:
        start, stop, count = spec.split(":")
        points = np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise ValidationError("grid must read start:stop:count, got {!r}".format(spec))
    if int(count) < 1:
        raise ValidationError("grid needs at least one point, got {!r}".format(spec))
    return points


def _scalar(text: str) -> Scalar:
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _pairs(items: Sequence[str], what: str) -> Dict[str, str]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValidationError("{} must read key=value, got {!r}".format(what, item))
        out[key] = value
    return out


def _row(name: str, inputs: Dict[str, Scalar], value, error) -> ResultRow:
    if not isinstance(error, str):
        error = float(error)
    return ResultRow(name=name, inputs=inputs, value=float(np.real(value)), error_estimate=error)


def _round(x: float) -> float:
    return float(np.round(x, 12))


# Each handler validates its inputs and returns a generator that does the work.

def _stable_mellin(config: RunConfig) -> Iterator[ResultRow]:
    p = StableParams(config.param("alpha"), config.param("theta", 0.0))
    grid = config.grid("s", "0.1:0.9:9")
    if np.any((grid <= 0) | (grid >= 1)):
        raise ValidationError("the numeric column needs 0 < s < 1")

    def rows():
        for s in grid:
            numeric = stable_mellin_numeric(p, s)
            for side, num in zip(("plus", "minus"), numeric):
                closed = stable_mellin(p, s, side)
                inputs = {"s": _round(s), "side": side}
                yield _row("stable_mellin", dict(inputs, method="closed"), closed, "exact")
                yield _row("stable_mellin", dict(inputs, method="fourier"), num, abs(num - closed))
    return rows()


def _stable_density(config: RunConfig) -> Iterator[ResultRow]:
    p = StableParams(config.param("alpha"), config.param("theta", 0.0))
    gamma_ = config.param("gamma", 0.5)
    grid = config.grid("x", "-5:5:11")
    if np.any(grid == 0):
        raise ValidationError("density grid must avoid x = 0")
    if not 0 < gamma_ < 1:
        raise ValidationError("gamma must lie in (0, 1)")

    def rows():
        fine = default_density_line(p, gamma_)
        coarse = fine.replace(steps=fine.steps // 2)
        for x in grid:
            value = stable_density(p, x, gamma_, line=fine)
            error = abs(value - stable_density(p, x, gamma_, line=coarse))
            yield _row("stable_density", {"x": _round(x)}, value, error)
    return rows()


def _ml_eval(config: RunConfig) -> Iterator[ResultRow]:
    nu = config.param("nu")
    grid = config.grid("u", "0:5:11")
    if not 0 < nu <= 1:
        raise ValidationError("nu must lie in (0, 1]")

    def rows():
        for u in grid:
            hankel = mittag_leffler_hankel(nu, u)
            inputs = {"u": _round(u)}
            try:
                series = mittag_leffler_series(nu, u)
            except SeriesOverflowError:
                check = mittag_leffler_hankel(nu, u, refine=2)
                yield _row("mittag_leffler", dict(inputs, method="hankel"), hankel,
                           abs(hankel - check))
                continue
            yield _row("mittag_leffler", dict(inputs, method="series"), series, "exact")
            yield _row("mittag_leffler", dict(inputs, method="hankel"), hankel,
                       abs(hankel - series))
    return rows()


def _density(name: str) -> mellin_core.DensityOnR:
    if name not in DENSITIES:
        raise ValidationError("unknown density {!r}; choose from {}".format(name, sorted(DENSITIES)))
    return DENSITIES[name]()


def _mellin_check(config: RunConfig) -> Iterator[ResultRow]:
    d = _density(config.param("density", "exponential", cast=str))
    grid = config.grid("s", "0.5:2.5:5")
    strip = (max(d.strip_plus[0], d.strip_minus[0]), min(d.strip_plus[1], d.strip_minus[1]))
    if np.any((grid <= strip[0]) | (grid >= strip[1])):
        raise ValidationError("s grid must lie in the strip {}".format(strip))

    def rows():
        for s in grid:
            numeric = mellin_core.mellin_forward(d, s)
            closed = d.mellin(s)
            for side, num, exact in zip(("plus", "minus"), numeric, closed):
                inputs = {"s": _round(s), "side": side}
                yield _row("mellin", dict(inputs, method="closed"), exact, "exact")
                yield _row("mellin", dict(inputs, method="quadrature"), num, abs(num - exact))
    return rows()


def _plancherel(config: RunConfig) -> Iterator[ResultRow]:
    f = _density(config.param("f", "exponential", cast=str))
    g = _density(config.param("g", "exponential", cast=str))
    grid = config.grid("gamma", "0.5:0.5:1")
    for d in (f, g):
        if np.any((grid <= d.strip_plus[0]) | (grid >= d.strip_plus[1])):
            raise ValidationError("gamma grid must lie in the plus strips")

    def rows():
        for gamma_ in grid:
            left, right = mellin_core.plancherel_check(f, g, gamma_)
            inputs = {"gamma": _round(gamma_)}
            yield _row("plancherel", dict(inputs, method="line"), left, abs(left - right))
            yield _row("plancherel", dict(inputs, method="halfline"), right, abs(left - right))
    return rows()


def _offspring(config: RunConfig) -> OffspringPGF:
    """Either m (pure power) or offspring='j:p,j:p'."""
    if "offspring" in config.params:
        try:
            weights = {int(j): float(w) for j, w in
                       (item.split(":") for item in str(config.params["offspring"]).split(","))}
        except ValueError:
            raise ValidationError("offspring must read j:p,j:p")
        return OffspringPGF.from_mapping(weights)
    return OffspringPGF.power(config.param("m", 2, cast=int))


def _bh_recover(config: RunConfig) -> Iterator[ResultRow]:
    kappa = config.param("kappa", 1.0)
    f = _offspring(config)
    f.check_recoverable()
    psi = LimitLaw.gamma(kappa)
    grid = config.grid("s", "0.5:2:4")
    if np.any(grid < 0):
        raise ValidationError("s grid must be nonnegative")

    def rows():
        for s in grid:
            closed = poly_case_lifetime_laplace(f, kappa, s)
            contour = recover_lifetime_laplace(psi, f, s)
            inputs = {"s": _round(s)}
            yield _row("lifetime_laplace", dict(inputs, method="closed"), closed, "exact")
            yield _row("lifetime_laplace", dict(inputs, method="contour"), contour,
                       abs(contour - closed))
    return rows()


def _bh_fixed_point(config: RunConfig) -> Iterator[ResultRow]:
    kappa = config.param("kappa", 1.0)
    m = config.param("m", 2, cast=int)
    f = OffspringPGF.power(m)
    G = LifetimeDistribution.gamma_case(kappa, m)
    psi = LimitLaw.gamma(kappa)
    grid = config.grid("u", "0.1:5:5")
    if np.any(grid < 0):
        raise ValidationError("u grid must be nonnegative")

    def rows():
        beta = malthusian(f, G)
        yield _row("malthusian", {"method": "bisection"}, beta, abs(beta - 1.0))
        for u in grid:
            yield _row("fixed_point_residual", {"u": _round(u)},
                       fixed_point_residual(psi, f, G, beta, u), "exact")
    return rows()


def _bh_simulate(config: RunConfig) -> Iterator[ResultRow]:
    kappa = config.param("kappa", 1.0)
    m = config.param("m", 2, cast=int)
    horizon = config.param("horizon", 5.0)
    replicas = config.param("replicas", 10000, cast=int)
    f = OffspringPGF.power(m)
    G = LifetimeDistribution.gamma_case(kappa, m)
    grid = config.grid("u", "0.5:2:4")
    if horizon <= 0 or replicas < 2:
        raise ValidationError("need horizon > 0 and at least two replicas")
    check_expected_population(f, G, horizon)

    def rows():
        run = simulate_bellman_harris(f, G, horizon, replicas, config.seed,
                                      threads=config.threads)
        scaled = run.malthusian_scaled(1.0)
        yield _row("scaled_mean", {"method": "simulation"}, scaled.mean(),
                   scaled.std(ddof=1) / np.sqrt(len(scaled)))
        for u in grid:
            value, stderr = run.laplace_at(u, beta=1.0)
            inputs = {"u": _round(u)}
            yield _row("limit_laplace", dict(inputs, method="simulation"), value, stderr)
            yield _row("limit_laplace", dict(inputs, method="closed"),
                       (1.0 + u) ** -kappa, "exact")
    return rows()


def _ld_simulate(config: RunConfig) -> Iterator[ResultRow]:
    p = LDParams(config.param("rho"), config.param("kappa", 1, cast=int))
    n = config.param("n", 10000, cast=int)
    replicas = config.param("replicas", 100000, cast=int)
    if n < 1 or replicas < 2:
        raise ValidationError("need n >= 1 and at least two replicas")
    if n * p.kappa > 10 ** 7:
        raise ValidationError("n * kappa exceeds the simulation budget")

    def rows():
        samples = simulate_ld(p, n, replicas, config.seed, threads=config.threads)
        expected = ld_moment_ratios(p)
        for key, (value, stderr) in moment_ratio_statistics(samples, seed=config.seed).items():
            yield _row("moment_ratio", {"ratio": key, "method": "simulation"}, value, stderr)
            yield _row("moment_ratio", {"ratio": key, "method": "mellin"}, expected[key], "exact")
        yield _row("scale_factor", {"method": "simulation"}, ld_scale_factor(samples, p, n),
                   "exact")
    return rows()


def _ld_limit(config: RunConfig) -> Iterator[ResultRow]:
    p = LDParams(config.param("rho"), config.param("kappa", 1, cast=int))
    grid = config.grid("u", "0:3:7")
    if np.any(grid < 0):
        raise ValidationError("u grid must be nonnegative")

    def rows():
        for u in grid:
            value = ld_laplace(p, u)
            inputs = {"u": _round(u)}
            yield _row("ld_laplace", dict(inputs, method="series"), value, "exact")
            if p.kappa == 1:
                ml = mittag_leffler_series(1.0 - p.rho, u)
                yield _row("ld_laplace", dict(inputs, method="mittag_leffler"), ml,
                           abs(ml - value))
    return rows()


def _acceptance(config: RunConfig) -> Iterator[ResultRow]:
    scale = config.param("scale", 1.0)
    if not 0 < scale <= 1:
        raise ValidationError("scale must lie in (0, 1]")

    def rows():
        for result in run_acceptance(scale=scale, seed=config.seed, threads=config.threads):
            yield _row(result.name, {"passed": int(result.passed)}, result.value,
                       result.threshold)
    return rows()


HANDLERS = {
    "stable-mellin": _stable_mellin,
    "stable-density": _stable_density,
    "ml-eval": _ml_eval,
    "mellin-check": _mellin_check,
    "plancherel": _plancherel,
    "bh-recover": _bh_recover,
    "bh-fixed-point": _bh_fixed_point,
    "bh-simulate": _bh_simulate,
    "ld-simulate": _ld_simulate,
    "ld-limit": _ld_limit,
    "acceptance": _acceptance,
}


def render(report: RunReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.model_dump(), indent=2) + "\n"
    names = []
    for row in report.results:
        names += [k for k in row.inputs if k not in names]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(names + ["value", "error_estimate"])
    for row in report.results:
        writer.writerow([row.inputs.get(k, "") for k in names]
                        + [repr(row.value), row.error_estimate if isinstance(row.error_estimate, str)
                           else repr(row.error_estimate)])
    return buffer.getvalue()


def _emit(report: RunReport, config: RunConfig):
    text = render(report, config.format)
    if config.output_path is None:
        sys.stdout.write(text)
    else:
        with open(config.output_path, "w", newline="") as handle:
            handle.write(text)


def run(config: RunConfig) -> int:
    """Execute the configured command, write its report and return the exit code."""
    params = dict(config.params)
    params.update(config.grids)
    report = RunReport(command=config.command, params=params, seed=config.seed)
    start = time.time()
    code = EXIT_OK
    try:
        rows = HANDLERS[config.command](config)
    except ValidationError as error:
        logger.error("invalid input for %s: %s", config.command, error)
        return EXIT_VALIDATION
    try:
        for row in rows:
            report.results.append(row)
    except ValidationError as error:
        logger.error("invalid input for %s: %s", config.command, error)
        code = EXIT_VALIDATION
    except NumericalError as error:
        logger.error("%s failed after %d rows: %s", config.command, len(report.results), error)
        code = EXIT_NUMERICAL
    report.wall_time = time.time() - start
    if config.command == "acceptance" and code == EXIT_OK:
        if not all(row.inputs["passed"] for row in report.results):
            code = EXIT_NUMERICAL
    _emit(report, config)
    return code


def get_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mellinbranch",
                                     description="Mellin transform calculus, stable laws and "
                                                 "branching-process limit laws")
    parser.add_argument("--command", required=True, help="Computation to run")
    parser.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="Scalar parameter, repeatable")
    parser.add_argument("--grid", action="append", default=[], metavar="KEY=START:STOP:COUNT",
                        help="Parameter grid, repeatable")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="Report path; stdout when omitted")
    parser.add_argument("--format", default="json", choices=["json", "csv"])
    parser.add_argument("--threads", type=int, default=1, help="Worker processes for simulations")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    parser.add_argument("--log-file", default=None)
    return parser


def main(argv: Sequence[str] = None) -> int:
    args = get_parser().parse_args(argv)
    init_log(args.log_level, args.log_file)
    try:
        config = RunConfig(command=args.command,
                           params={k: _scalar(v) for k, v in _pairs(args.param, "--param").items()},
                           grids=_pairs(args.grid, "--grid"), seed=args.seed,
                           output_path=args.out, format=args.format, threads=args.threads)
    except (ModelError, ValidationError) as error:
        logger.error("invalid run configuration: %s", error)
        return EXIT_VALIDATION
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
