"""``drumlab`` command line: spectra, Weyl estimates, audits and perturbation reports.

Exit codes: 0 success, 2 configuration or parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .basis import BC, BasisSpec, InvalidIndexError, enumerate_states
from .exprdsl import ExprError, parse_density
from .geometry import (
    CubeDomain,
    EffectiveDensity,
    GeometryError,
    area_integral,
    boundary_integral,
    isoperimetric_check,
    parse_map,
)
from .perturbation import PerturbationError, perturb_energy
from .quadrature import basis_order
from .solver import (
    MAX_BASIS,
    RELIABLE_FRACTION,
    SolverError,
    SpectrumResult,
    compute_spectrum,
    delta_diagnostic,
    ppw_audit,
    xi_diagnostic,
)
from .weyl import WeylError, weyl_conjecture_2d, weyl_energy_general

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ProblemConfig:
    dimension: int = 2
    half_side: float = 1.0
    map: str = "identity"
    density: str = "1"
    bc: tuple[BC, ...] = (BC.DIRICHLET, BC.NEUMANN)
    cutoff: int = 40
    quadrature: int | None = None  # None = auto
    n_min: int = 1
    n_max: int | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def domain(self) -> CubeDomain:
        return CubeDomain(self.dimension, self.half_side)

    @property
    def order(self) -> int:
        return self.quadrature or basis_order(self.cutoff)

    def effective_density(self) -> EffectiveDensity:
        return EffectiveDensity(parse_map(self.map, self.half_side), parse_density(self.density),
                                self.domain)

    def reliable_count(self) -> int:
        return min(int(RELIABLE_FRACTION * BasisSpec(self.domain, bc, self.cutoff).size)
                   for bc in BC)

    def n_range(self) -> range:
        hi = self.n_max if self.n_max is not None else min(200, self.reliable_count())
        return range(self.n_min, hi + 1)


_INT_KEYS = {"dimension", "cutoff", "n_min", "n_max"}
_KEYS = _INT_KEYS | {"half_side", "map", "density", "bc", "quadrature"}


def _unquote(value: str) -> str:
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def parse_config(text: str, base_dir: Path | None = None) -> ProblemConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment outside quotes."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        value = _unquote(value)
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key == "half_side":
                values[key] = float(value)
            elif key == "quadrature":
                values[key] = None if value.lower() == "auto" else int(value)
            elif key == "bc":
                values[key] = (tuple(BC) if value.lower() == "both"
                               else tuple(BC.parse(v) for v in value.split(",")))
            else:
                values[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    cfg = ProblemConfig(**values, base_dir=base_dir or Path.cwd())
    _validate(cfg)
    return cfg


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def _validate(cfg: ProblemConfig) -> None:
    try:
        cfg.effective_density()
    except ExprError as exc:
        raise ConfigError(f"density: {exc}") from exc
    except (GeometryError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.cutoff < 1:
        raise ConfigError("cutoff must be positive")
    if cfg.quadrature is not None and cfg.quadrature < 2:
        raise ConfigError("quadrature order must be at least 2")
    if cfg.n_min < 1 or (cfg.n_max is not None and cfg.n_max < cfg.n_min):
        raise ConfigError("need 1 <= n_min <= n_max")
    if any(BasisSpec(cfg.domain, bc, cfg.cutoff).size > MAX_BASIS for bc in cfg.bc):
        raise ConfigError(f"basis larger than {MAX_BASIS} states; lower the cutoff")


def load_config(path: str | None) -> ProblemConfig:
    if path is None:
        return ProblemConfig()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, p.resolve().parent)


# --- output helpers ----------------------------------------------------------


def fmt(x) -> str:
    """Shortest round-trip decimal; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _spectra(cfg: ProblemConfig, bcs) -> dict[BC, SpectrumResult]:
    s = cfg.effective_density()
    return {bc: compute_spectrum(s, bc, cfg.cutoff, order=cfg.order) for bc in bcs}


def _geometry_integrals(cfg: ProblemConfig):
    s = cfg.effective_density()
    order = max(64, cfg.order)
    Abar = area_integral(s, order)
    Lbar = boundary_integral(s, order) if cfg.domain.d == 2 else None
    return Abar, Lbar


# --- commands ----------------------------------------------------------------


def cmd_spectrum(cfg: ProblemConfig, out: Path) -> int:
    for bc, r in _spectra(cfg, cfg.bc).items():
        rows = [(N, r.eigenvalue(N)) for N in range(1, r.reliable_count + 1)]
        write_csv(out / f"spectrum_{bc.value}.csv", ("N", "E"), rows)
        print(f"{bc.value}: {len(rows)} reliable eigenvalues, E_1 = {fmt(rows[0][1])}")
    return EXIT_OK


def cmd_weyl(cfg: ProblemConfig, out: Path) -> int:
    Abar, Lbar = _geometry_integrals(cfg)
    domain = cfg.domain
    rows = []
    for N in cfg.n_range():
        wD = weyl_energy_general(domain, Abar, BC.DIRICHLET, N)
        wN = weyl_energy_general(domain, Abar, BC.NEUMANN, N)
        cD = cN = None
        if Lbar is not None:
            cD = weyl_conjecture_2d(Lbar, Abar, BC.DIRICHLET, N).corrected
            cN = weyl_conjecture_2d(Lbar, Abar, BC.NEUMANN, N).corrected
        rows.append((N, wD.leading, wD.corrected, wN.corrected, cD, cN))
    write_csv(out / "weyl.csv", ("N", "E_leading", "E_weylsigma_D", "E_weylsigma_N",
                                 "E_conjecture_D", "E_conjecture_N"), rows)
    print(f"density integral = {fmt(Abar)}" + (f", boundary integral = {fmt(Lbar)}" if Lbar else ""))
    return EXIT_OK


def cmd_audit(cfg: ProblemConfig, out: Path) -> int:
    Abar, Lbar = _geometry_integrals(cfg)
    spectra = _spectra(cfg, tuple(BC))
    rD, rN = spectra[BC.DIRICHLET], spectra[BC.NEUMANN]
    rows = []
    for N in cfg.n_range():
        pred_conj = (Lbar / Abar) * math.sqrt(4 * math.pi * N / Abar) if Lbar else None
        pred_sigma = 8 * math.sqrt(math.pi * N) / Abar if cfg.domain.d == 2 else None
        rows.append((N, rD.eigenvalue(N), rN.eigenvalue(N), xi_diagnostic(rD, rN, Abar, N),
                     delta_diagnostic(rD, rN, N), pred_conj, pred_sigma))
    write_csv(out / "audit.csv", ("N", "E_D", "E_N", "xi", "delta", "delta_pred_conjecture",
                                  "delta_pred_weylsigma"), rows)
    ppw = ppw_audit(rD)
    print(f"PPW ratio E2/E1 = {ppw.ratio:.6f}, bound = {ppw.bound:.6f}: {ppw.verdict()}")
    if Lbar:
        iso = isoperimetric_check(Lbar, Abar)
        verdict = "admissible" if iso.conformal_admissible else "NOT admissible: not a conformal density"
        print(f"isoperimetric: Lbar/Abar = {iso.ratio:.4f}, disk = {iso.circle_ratio:.4f}: {verdict}")
    return EXIT_OK


def parse_state(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise ConfigError(f"bad state {text!r}; expected comma-separated integers") from None


def cmd_perturb(cfg: ProblemConfig, out: Path, state: tuple[int, ...]) -> int:
    s = cfg.effective_density()
    for bc in cfg.bc:
        spec = BasisSpec(cfg.domain, bc, cfg.cutoff)
        try:
            n = spec.validate(state)
        except InvalidIndexError as exc:
            raise ConfigError(str(exc)) from None
        if max(n) > cfg.cutoff:
            raise ConfigError(f"state {n} beyond the basis cutoff {cfg.cutoff}")
        k_cut = min(cfg.cutoff, max(3 * max(n), 1))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = perturb_energy(spec, s, n, k_cutoff=k_cut)
        ref = compute_spectrum(s, bc, cfg.cutoff, order=cfg.order)
        rank = enumerate_states(spec).index(n)
        E_ref = float(ref.eigenvalues[rank])
        print(f"[{bc.value}] state {n}, internal sums up to index {k_cut}")
        for k, (Ek, Sk) in enumerate(zip(res.orders, res.partial_sums)):
            print(f"  E^({k}) = {fmt(Ek)}   partial sum = {fmt(Sk)}   residual = {fmt(abs(Sk - E_ref))}")
        print(f"  resummed = {fmt(res.resummed)}   residual = {fmt(abs(res.resummed - E_ref))}")
        print(f"  solver   = {fmt(E_ref)}")
        if res.degenerate:
            print(f"  warning: level degenerate with {list(res.degenerate_states[1:])}; "
                  "orders >= 2 not computed")
            print("  first-order split: " + ", ".join(fmt(x) for x in res.split))
        for w in caught:
            print(f"  warning: {w.message}")
    return EXIT_OK


def _apply_thread_cap():
    raw = os.environ.get("DRUMLAB_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"DRUMLAB_THREADS must be an integer, got {raw!r}") from None
    if n <= 0:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drumlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("spectrum", "Dirichlet/Neumann eigenvalues as CSV"),
                        ("weyl", "Weyl-law estimates as CSV"),
                        ("audit", "Xi/delta diagnostics, PPW and isoperimetric checks"),
                        ("perturb", "perturbation series for one state")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="problem description file (key = value)")
        p.add_argument("--out", help="output directory (relative to the config file)")
        p.add_argument("--state", help="quantum numbers n1,n2,... (perturb)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
        out = Path(args.out) if args.out else Path(".")
        if not out.is_absolute():
            out = cfg.base_dir / out
        if args.command == "perturb" and not args.state:
            raise ConfigError("perturb needs --state n1,n2,...")
        state = parse_state(args.state) if args.state else None
        with _apply_thread_cap():
            if args.command == "spectrum":
                return cmd_spectrum(cfg, out)
            if args.command == "weyl":
                return cmd_weyl(cfg, out)
            if args.command == "audit":
                return cmd_audit(cfg, out)
            return cmd_perturb(cfg, out, state)
    except ConfigError as exc:
        print(f"drumlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, GeometryError, ExprError, PerturbationError, WeylError,
            ArithmeticError) as exc:
        print(f"drumlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
