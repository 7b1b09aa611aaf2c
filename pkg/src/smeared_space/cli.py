"""Command-line entry point producing CSV or JSON tables.

Every subcommand reads a flat ``key = value`` config file (optional), applies
flag overrides on top, runs one pipeline and writes a single table.  Nothing
is plotted; the tables are meant for external tools.

Exit codes: 0 on success, 2 for domain or configuration errors, 3 for I/O
errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields
from typing import Any, Callable, Sequence

import numpy as np

from .dynamics import (
    EvolutionConfig,
    Hamiltonian,
    apply_P,
    default_dt,
    energy,
    evolve,
    expectation,
    harmonic_potential,
)
from .errors import SmearedSpaceError
from .grid import Field2D, Grid, gaussian_amplitude
from .massradius import default_masses, mass_radius_table
from .measurement import (
    collapse_position,
    generalized_moment,
    generalized_variance,
    sample_outcome,
)
from .multiparticle import (
    entanglement_entropy,
    factorization_residual,
    make_two_body_kernel,
    schmidt_coefficients,
    smear_two,
)
from .povm import from_smearing_kernel, povm_independence_demo, resolution_kernel
from .scales import DEFAULT_LAMBDA, EV_IN_GRAMS, PhysicalConstants, derive_scales
from .smearing import check_smearing_pair, make_kernel, smear
from .uncertainty import SweepRow, optimal_widths, sweep_products

__all__ = ["RunConfig", "ConfigError", "load_config", "main", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 2, 3
FLOAT_FORMAT = "%.16e"

PHYSICAL_KEYS = ("Lambda", "d", "units")
DIMENSIONLESS_KEYS = ("hbar", "beta", "sigma_g", "sigma_g_tilde")


class ConfigError(SmearedSpaceError, ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class RunConfig:
    """Every setting a subcommand may read.

    ``mode`` is ``dimensionless`` (``hbar``, ``beta``, ``sigma_g``) or
    ``physical`` (``Lambda``, ``d``, ``units``); a config may carry keys of
    one mode only.  List-valued keys are comma-separated.
    """

    mode: str = ""
    # dimensionless block
    hbar: float = 1.0
    beta: float = 0.1
    sigma_g: float = 0.5
    sigma_g_tilde: float | None = None
    # physical block
    Lambda: float = DEFAULT_LAMBDA
    d: int = 3
    units: str = "cgs"
    # lattice
    grid_n: int = 512
    extent: float = 32.0
    v_n: int | None = None
    # run control
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    kernel: str = "gaussian"
    psi_width: float | None = None
    # uncertainty
    betas: tuple[float, ...] | None = None
    widths: tuple[float, ...] | None = None
    random_rows: int = 0
    # measure
    outcomes: tuple[float, ...] | None = None
    n_outcomes: int = 3
    # evolve
    steps: int = 0
    dt: float | None = None
    mass: float = 1.0
    omega: float = 0.0
    k0: float = 0.0
    record_every: int = 0
    # entangle
    entangle_n: int = 48
    entangle_extent: float = 12.0
    # massradius
    decades: float = 4.0
    per_decade: int = 20

    def __post_init__(self):
        if self.mode not in ("", "physical", "dimensionless"):
            raise ConfigError(f"mode must be 'physical' or 'dimensionless', got {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be 'csv' or 'json', got {self.format!r}")
        if self.units not in ("cgs", "natural"):
            raise ConfigError(f"units must be 'cgs' or 'natural', got {self.units!r}")
        for name in ("hbar", "sigma_g", "extent", "mass"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.beta >= 0:
            raise ConfigError("beta must be nonnegative")
        if self.sigma_g_tilde is not None:
            product = 2.0 * self.sigma_g * self.sigma_g_tilde
            if not math.isclose(product, self.beta, rel_tol=1e-9, abs_tol=1e-15):
                raise ConfigError(
                    f"2 sigma_g sigma_g_tilde = {product:.12g} does not equal beta = {self.beta:.12g}"
                )
        if self.grid_n < 8:
            raise ConfigError("grid_n must be at least 8")

    @property
    def spacing(self) -> float:
        return self.extent / self.grid_n

    def u_grid(self) -> Grid:
        return Grid(self.grid_n, self.extent)

    def v_grid(self) -> Grid:
        """``v`` lattice with the ``u`` spacing, wide enough for 16 kernel widths."""
        n = self.v_n
        if n is None:
            need = 16.0 * self.sigma_g / self.spacing
            n = max(32, 1 << max(int(math.ceil(math.log2(need))), 0))
        return Grid(n, n * self.spacing)

    def constants(self) -> PhysicalConstants:
        if self.units == "natural":
            return PhysicalConstants.natural(Lambda=self.Lambda, d=self.d)
        return PhysicalConstants.cgs(Lambda=self.Lambda, d=self.d)


def _parse_value(kind, raw: str):
    raw = raw.strip()
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind == "list":
        return tuple(float(x) for x in raw.split(",") if x.strip())
    return raw


_KINDS: dict[str, Any] = {}
for _f in fields(RunConfig):
    _t = str(_f.type)
    if "tuple" in _t:
        _KINDS[_f.name] = "list"
    elif _t.startswith("int"):
        _KINDS[_f.name] = int
    elif _t.startswith("float"):
        _KINDS[_f.name] = float
    else:
        _KINDS[_f.name] = str


def parse_pairs(lines: Sequence[str], source: str = "config") -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, Any] = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KINDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            out[key] = _parse_value(_KINDS[key], raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {raw!r}") from exc
    return out


def _mode_of(keys) -> str:
    phys = any(k in keys for k in PHYSICAL_KEYS)
    dimless = any(k in keys for k in DIMENSIONLESS_KEYS)
    if phys and dimless:
        raise ConfigError("config mixes physical and dimensionless keys; give exactly one mode block")
    return "physical" if phys else "dimensionless" if dimless else ""


def load_config(path: str | None, overrides: dict[str, Any], default_mode: str) -> RunConfig:
    """Merge the config file with flag overrides (flags win) and validate."""
    values: dict[str, Any] = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values = parse_pairs(fh.read().splitlines(), path)
    file_mode = _mode_of(values)
    values.update(overrides)
    mode = _mode_of(values)
    declared = values.get("mode", "")
    if declared and mode and declared != mode:
        raise ConfigError(f"mode = {declared} conflicts with the {mode} keys given")
    if declared and file_mode and declared != file_mode:
        raise ConfigError(f"mode = {declared} conflicts with the {file_mode} keys in the config")
    values["mode"] = declared or mode or default_mode
    return RunConfig(**values)


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def _json_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def render(table: Table, fmt: str, command: str, cfg: RunConfig) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "columns": list(table.columns),
        "rows": [[_json_cell(v) for v in row] for row in table.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require(cfg: RunConfig, mode: str, command: str) -> None:
    if cfg.mode != mode:
        raise ConfigError(f"{command} runs in {mode} mode, config is {cfg.mode}")


def cmd_scales(cfg: RunConfig) -> Table:
    _require(cfg, "physical", "scales")
    consts = cfg.constants()
    sc = derive_scales(consts)
    cgs = cfg.units == "cgs"
    length, mass_u, action = ("cm", "g", "erg s") if cgs else ("natural",) * 3
    rows = [
        ("d", float(sc.d), "1"),
        ("Lambda", consts.Lambda, "cm^-2" if cgs else "natural"),
        ("l_Pl", sc.l_Pl, length),
        ("m_Pl", sc.m_Pl, mass_u),
        ("l_dS", sc.l_dS, length),
        ("m_dS", sc.m_dS, mass_u),
        ("sigma_g", sc.sigma_g, length),
        ("sigma_g_tilde", sc.sigma_g_tilde, "g cm s^-1" if cgs else "natural"),
        ("beta", sc.beta, action),
        ("beta_over_hbar", sc.beta / sc.hbar, "1"),
        ("rho_Lambda", sc.rho_Lambda, "g cm^-3" if cgs else "natural"),
        ("rho_Pl", sc.rho_Pl, "g cm^-3" if cgs else "natural"),
        ("m_max", sc.m_max, mass_u),
    ]
    if sc.l_Lambda is not None:
        rows.append(("l_Lambda", sc.l_Lambda, length))
        rows.append(("m_Lambda", sc.m_Lambda, mass_u))
        if cgs:
            rows.append(("m_Lambda_eV", sc.m_Lambda / EV_IN_GRAMS, "eV/c^2"))
    return Table(("quantity", "value", "unit"), rows)


def cmd_uncertainty(cfg: RunConfig) -> Table:
    _require(cfg, "dimensionless", "uncertainty")
    betas = cfg.betas if cfg.betas is not None else (cfg.beta,)
    if cfg.widths is not None:
        widths = cfg.widths
    elif cfg.random_rows > 0:
        rng = np.random.default_rng(cfg.seed)
        widths = tuple(rng.uniform(0.5, 3.0, cfg.random_rows))
    else:
        sigma_tilde = betas[0] / (2.0 * cfg.sigma_g)
        widths = (optimal_widths(cfg.hbar, cfg.sigma_g, sigma_tilde)[0] if sigma_tilde > 0 else 1.0,)
    rows = sweep_products(betas, widths, cfg.u_grid(), cfg.hbar, cfg.sigma_g, cfg.v_grid())
    return Table(SweepRow.FIELDS, [r.as_tuple() for r in rows])


def _initial_state(cfg: RunConfig, width: float):
    kernel = make_kernel(cfg.kernel, cfg.sigma_g, cfg.beta, cfg.v_grid())
    psi = gaussian_amplitude(cfg.u_grid(), 0.0, width, cfg.k0)
    return smear(psi, kernel, cfg.hbar)


def cmd_measure(cfg: RunConfig) -> Table:
    """Sequential position collapses, given or sampled with ``seed``."""
    _require(cfg, "dimensionless", "measure")
    state = _initial_state(cfg, cfg.psi_width or 1.0)
    rng = np.random.default_rng(cfg.seed)
    rows = []

    def summary(step, r):
        return (
            step,
            r,
            generalized_moment(state, "position", 1),
            generalized_variance(state, "position"),
            generalized_variance(state, "momentum"),
        )

    rows.append(summary(0, float("nan")))
    count = len(cfg.outcomes) if cfg.outcomes is not None else cfg.n_outcomes
    for step in range(1, count + 1):
        if cfg.outcomes is not None:
            r = float(cfg.outcomes[step - 1])
        else:
            r = float(sample_outcome(state, "position", seed=int(rng.integers(2**31))))
        state = collapse_position(state, r)
        rows.append(summary(step, r))
    return Table(("step", "outcome", "X_mean", "X_variance", "P_variance"), rows)


def cmd_evolve(cfg: RunConfig) -> Table:
    _require(cfg, "dimensionless", "evolve")
    state = _initial_state(cfg, cfg.psi_width or 1.0)
    potential = harmonic_potential(cfg.mass, cfg.omega) if cfg.omega > 0 else None
    H = Hamiltonian(cfg.mass, potential)
    dt = cfg.dt if cfg.dt is not None else default_dt(state, H)
    every = cfg.record_every or max(cfg.steps // 10, 1)

    def summary(step):
        return (
            step,
            step * dt,
            state.norm(),
            generalized_moment(state, "position", 1),
            expectation(state, apply_P(state, warn=False)).real,
            energy(state, H),
        )

    rows = [summary(0)]
    done = 0
    while done < cfg.steps:
        chunk = min(every, cfg.steps - done)
        state = evolve(state, H, EvolutionConfig(dt, chunk))
        done += chunk
        rows.append(summary(done))
    return Table(("step", "time", "norm", "X_mean", "P_mean", "energy"), rows)


def cmd_entangle(cfg: RunConfig) -> Table:
    _require(cfg, "dimensionless", "entangle")
    grid = Grid(cfg.entangle_n, cfg.entangle_extent)
    width = cfg.psi_width or 1.0
    psi = gaussian_amplitude(grid, 0.0, width).values
    psi12 = Field2D(grid, grid, np.outer(psi, psi))
    rows = []
    for kind in ("product-gaussian", "radial-exponential"):
        kernel = make_two_body_kernel(kind, cfg.sigma_g, grid)
        state = smear_two(psi12, kernel, cfg.hbar, cfg.beta)
        lam = schmidt_coefficients(state)
        rows.append((kind, entanglement_entropy(state), factorization_residual(state), float(lam[0])))
    return Table(("kernel", "entropy", "factorization_residual", "schmidt_max"), rows)


def cmd_povm_compare(cfg: RunConfig) -> Table:
    _require(cfg, "dimensionless", "povm-compare")
    grid = cfg.u_grid()
    sk = make_kernel("gaussian", cfg.sigma_g, cfg.beta, grid)
    kx = resolution_kernel("gaussian", cfg.sigma_g, grid)
    kp = from_smearing_kernel(sk, "momentum")
    psi = gaussian_amplitude(grid, 0.0, cfg.psi_width or 1.0)
    rep = povm_independence_demo(kx, kp, cfg.beta, psi, cfg.hbar)
    rows = [
        (
            "povm",
            rep.sigma_x,
            rep.sigma_p,
            rep.product,
            rep.povm_accepts,
            max(rep.povm_completeness_x, rep.povm_completeness_p),
            *rep.povm_variances,
        )
    ]
    sv = rep.smeared_variances or (float("nan"), float("nan"))
    rows.append(
        ("smeared", rep.sigma_x, rep.sigma_p, rep.product, rep.smeared_accepts, float("nan"), *sv)
    )
    # the same position width with half the momentum width: fine as a POVM, not as a smearing pair
    half = check_smearing_pair(rep.sigma_x, 0.5 * rep.sigma_p, cfg.beta)
    rows.append(
        ("smeared-halved", rep.sigma_x, 0.5 * rep.sigma_p, 0.5 * rep.product, half.admissible, float("nan"),
         float("nan"), float("nan"))
    )
    return Table(
        ("mode", "sigma_x", "sigma_p", "product", "accepted", "completeness", "X_variance", "P_variance"),
        rows,
    )


def cmd_massradius(cfg: RunConfig) -> Table:
    _require(cfg, "physical", "massradius")
    consts = cfg.constants()
    rows = mass_radius_table(consts, default_masses(consts, cfg.decades, cfg.per_decade))
    return Table(("mass_g", "compton_cm", "schwarzschild_cm", "unified_cm", "regime"),
                 [r.as_tuple() for r in rows])


COMMANDS: dict[str, tuple[Callable[[RunConfig], Table], str, str]] = {
    "scales": (cmd_scales, "physical", "derived Planck, de Sitter and smearing scales"),
    "uncertainty": (cmd_uncertainty, "dimensionless", "unified uncertainty sweep"),
    "measure": (cmd_measure, "dimensionless", "sequential position measurements"),
    "evolve": (cmd_evolve, "dimensionless", "split-step evolution summary"),
    "entangle": (cmd_entangle, "dimensionless", "two-particle smearing entropies"),
    "povm-compare": (cmd_povm_compare, "dimensionless", "finite-resolution POVM versus smearing"),
    "massradius": (cmd_massradius, "physical", "mass-radius table"),
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="PATH", help="output file (stdout when omitted)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--grid-n", type=int, dest="grid_n")
    common.add_argument("--beta", type=float)
    common.add_argument("--sigma-g", type=float, dest="sigma_g")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key"
    )
    parser = argparse.ArgumentParser(prog="smeared-space", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, _, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def run(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    args = _parser().parse_args(argv)
    func, default_mode, _ = COMMANDS[args.command]
    try:
        overrides = parse_pairs(args.set, "--set")
        for key in ("seed", "out", "format", "grid_n", "beta", "sigma_g"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        cfg = load_config(args.config, overrides, default_mode)
        table = func(cfg)
        text = render(table, cfg.format, args.command, cfg)
        if cfg.out:
            write_atomic(cfg.out, text)
        else:
            stdout.write(text)
    except (SmearedSpaceError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
