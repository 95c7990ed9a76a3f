"""Command-line front end: estimate, learn, simulate, reproduce-example.

All subcommands are deterministic for identical inputs and seed, and every
output file is written with 17-significant-digit floats so a rerun is
bitwise identical. Exit codes: 0 success, 2 input parse or validation
failure, 3 no informative pairs in the data, 4 infeasible fit, 5 solver
breakdown, 6 certificate required but not contractive.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .basis import (
    BasisDictionary,
    diagnose_basis,
    evaluate_row,
    gaussian_from_data,
    polynomial_dictionary,
)
from .core import Dataset, FunctionController, NoiseModel, validate_dataset
from .estimation import (
    NoInformativePairsError,
    RhoTooSmallError,
    controller_scatter,
    estimate_gamma_f,
    estimate_gamma_gy,
    estimate_noise_bound,
)
from .learner import (
    InfeasibleFitError,
    LearnConfig,
    LearnedController,
    LearningError,
    build_regressor,
    extract_support,
    learn_controller,
    select_alpha,
    stage1_sparsify,
    stage2_tighten,
)
from .lp import SolverFailure
from .simulation import (
    benchmark_plant,
    deviation_run,
    generate_example_dataset,
    grid_error_lipschitz,
    simulate,
)
from .stability import certify, learned_loop_bound

__all__ = [
    "RunConfig",
    "DatasetFormatError",
    "read_dataset_csv",
    "write_dataset_csv",
    "cmd_estimate",
    "cmd_learn",
    "cmd_simulate",
    "cmd_reproduce_example",
    "main",
    "EXIT_PARSE",
    "EXIT_NO_PAIRS",
    "EXIT_INFEASIBLE",
    "EXIT_SOLVER",
    "EXIT_UNCERTIFIED",
]

EXIT_PARSE = 2
EXIT_NO_PAIRS = 3
EXIT_INFEASIBLE = 4
EXIT_SOLVER = 5
EXIT_UNCERTIFIED = 6

OUTPUT_DIR_ENV = "LOOPCLONE_OUTPUT_DIR"

_DEFAULT_SWEEP = (10, 50, 90, 130, 170, 210, 250)


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


class DatasetFormatError(ValueError):
    """A dataset CSV line could not be parsed; carries the line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class RunConfig:
    """All tunables of the command-line pipeline in one validated record.

    Built from flag values and optionally overridden by a JSON config
    file; unknown keys in that file are rejected. Paths may be None when
    the subcommand takes them positionally.
    """

    dataset: str | None = None
    dictionary: str | None = None
    out_dir: str | None = None
    margin: float = 0.02
    theta: float = 0.95
    tau_rel: float = 1e-6
    alpha_small: float = 1.2
    sparsity_max: float = 0.3
    feas_tol: float = 1e-8
    opt_tol: float = 1e-8
    seed: int = 0
    no_pair_constraints: bool = False
    grid_points: int = 601
    full_sweep: bool = False
    sweep: tuple[int, ...] | None = None
    rho: float | str = "auto"
    epsilon_hat: float | None = None
    gamma_delta_prime: float | None = None
    gamma_f_hat: float | None = None
    gamma_gy_hat: float | None = None
    plant: str = "tanh-loop"
    runs: int = 100
    horizon: int = 200
    noise_y: float = 0.001
    require_cert: bool = False

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.tau_rel <= 0:
            raise ValueError(f"tau_rel must be > 0, got {self.tau_rel}")
        if self.alpha_small < 1:
            raise ValueError(f"alpha_small must be >= 1, got {self.alpha_small}")
        if not 0 < self.sparsity_max <= 1:
            raise ValueError(
                f"sparsity_max must lie in (0, 1], got {self.sparsity_max}"
            )
        if self.feas_tol <= 0 or self.opt_tol <= 0:
            raise ValueError("solver tolerances must be > 0")
        if self.grid_points < 2:
            raise ValueError(f"grid_points must be >= 2, got {self.grid_points}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if self.noise_y < 0:
            raise ValueError(f"noise_y must be >= 0, got {self.noise_y}")
        if self.rho != "auto" and float(self.rho) <= 0:
            raise ValueError(f"rho must be 'auto' or > 0, got {self.rho!r}")
        if self.sweep is not None and (
            len(self.sweep) == 0 or any(n < 2 for n in self.sweep)
        ):
            raise ValueError("sweep must be a nonempty list of N >= 2")

    @classmethod
    def from_mapping(cls, data: dict, base: "RunConfig | None" = None) -> "RunConfig":
        """Apply a key-value mapping on top of a base config.

        Unknown keys raise ValueError; values are validated as usual.
        """
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config key {sorted(unknown)[0]!r}")
        merged = dataclasses.asdict(base) if base is not None else {}
        merged.update(data)
        if isinstance(merged.get("sweep"), list):
            merged["sweep"] = tuple(int(n) for n in merged["sweep"])
        return cls(**merged)

    def resolve_out_dir(self) -> Path:
        """Output directory: config value, else env var, else cwd."""
        if self.out_dir is not None:
            p = Path(self.out_dir)
        else:
            p = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
        p.mkdir(parents=True, exist_ok=True)
        return p


def read_dataset_csv(path: str | Path) -> Dataset:
    """Parse a dataset CSV: header t,y1,...,y<n_y>,u plus data rows.

    A comment line ``# trajectory=true|false`` marks the kind (default
    true). Raises DatasetFormatError naming the 1-based offending line.
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise DatasetFormatError(0, f"cannot read {path}: {e}") from None
    is_trajectory = True
    header: list[str] | None = None
    ks: list[int] = []
    ys: list[tuple[float, ...]] = []
    us: list[float] = []
    n_y = 0
    for ln_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("trajectory="):
                value = body[len("trajectory="):].strip()
                if value not in ("true", "false"):
                    raise DatasetFormatError(
                        ln_no, f"trajectory flag must be true or false, got {value!r}"
                    )
                is_trajectory = value == "true"
            continue
        fields = [f.strip() for f in line.split(",")]
        if header is None:
            n_y = len(fields) - 2
            expected = ["t"] + [f"y{i + 1}" for i in range(n_y)] + ["u"]
            if n_y < 1 or fields != expected:
                raise DatasetFormatError(
                    ln_no,
                    f"header must be t,y1,...,y<n_y>,u; got {line!r}",
                )
            header = fields
            continue
        if len(fields) != n_y + 2:
            raise DatasetFormatError(
                ln_no, f"{len(fields)} fields, expected {n_y + 2}"
            )
        try:
            k = int(fields[0])
            row = tuple(float(v) for v in fields[1:-1])
            u = float(fields[-1])
        except ValueError as e:
            raise DatasetFormatError(ln_no, f"bad number: {e}") from None
        ks.append(k)
        ys.append(row)
        us.append(u)
    if header is None:
        raise DatasetFormatError(0, "no header line found")
    if not ks:
        raise DatasetFormatError(0, "no data rows found")
    return Dataset(
        k=tuple(ks), y=tuple(ys), u=tuple(us), n_y=n_y,
        is_trajectory=is_trajectory,
    )


def write_dataset_csv(path: str | Path, d: Dataset) -> None:
    """Write a dataset in the format read_dataset_csv accepts."""
    lines = [
        f"# trajectory={'true' if d.is_trajectory else 'false'}",
        "t," + ",".join(f"y{i + 1}" for i in range(d.n_y)) + ",u",
    ]
    for k, row, u in zip(d.k, d.y, d.u):
        lines.append(
            f"{k}," + ",".join(_fmt(v) for v in row) + f",{_fmt(u)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _write_report(path: Path, pairs: list[tuple[str, object]]) -> None:
    lines = []
    for key, value in pairs:
        if isinstance(value, bool):
            lines.append(f"{key} {'true' if value else 'false'}")
        elif isinstance(value, float):
            lines.append(f"{key} {_fmt(value)}")
        else:
            lines.append(f"{key} {value}")
    path.write_text("\n".join(lines) + "\n")


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_estimate(cfg: RunConfig) -> int:
    """Estimate the noise bound and, on trajectories, the loop gains."""
    try:
        d = read_dataset_csv(cfg.dataset)
    except DatasetFormatError as e:
        return _fail(EXIT_PARSE, str(e))
    problems = validate_dataset(d)
    if problems:
        return _fail(EXIT_PARSE, f"invalid dataset: {problems[0]}")
    try:
        eps, rho_used, covered = estimate_noise_bound(
            controller_scatter(d), rho=cfg.rho
        )
    except RhoTooSmallError as e:
        return _fail(
            EXIT_PARSE,
            f"{e} (smallest pairwise distance {_fmt(e.min_distance)})",
        )
    pairs: list[tuple[str, object]] = [
        ("n_samples", len(d)),
        ("epsilon_hat", eps),
        ("rho_used", rho_used),
        ("covered_count", covered),
    ]
    if d.is_trajectory and len(d) >= 2:
        try:
            pairs.append(("gamma_f_hat", estimate_gamma_f(d)))
            pairs.append(("gamma_gy_hat", estimate_gamma_gy(d)))
        except NoInformativePairsError as e:
            return _fail(EXIT_NO_PAIRS, str(e))
    out = cfg.resolve_out_dir() / "estimate_report.txt"
    _write_report(out, pairs)
    for key, value in pairs:
        print(key, value if not isinstance(value, float) else _fmt(value))
    print(f"wrote {out}")
    return 0


def _resolve_dictionary(spec: str, d: Dataset) -> BasisDictionary:
    """A dictionary from a file path or a family:parameter shorthand."""
    path = Path(spec)
    if path.exists():
        return BasisDictionary.from_text(path.read_text())
    family, sep, arg = spec.partition(":")
    if sep:
        if family == "gaussian":
            return gaussian_from_data(d, float(arg))
        if family == "polynomial":
            Y = d.y_array()
            box = np.stack([Y.min(axis=0), Y.max(axis=0)], axis=1)
            return polynomial_dictionary(box, int(arg))
    raise ValueError(
        f"dictionary spec {spec!r} is neither a file nor "
        "gaussian:<width> / polynomial:<degree>"
    )


def cmd_learn(cfg: RunConfig) -> int:
    """Fit a sparse law and write the controller and report files."""
    try:
        d = read_dataset_csv(cfg.dataset)
    except DatasetFormatError as e:
        return _fail(EXIT_PARSE, str(e))
    try:
        dictionary = _resolve_dictionary(cfg.dictionary, d)
        lc = LearnConfig(
            margin=cfg.margin,
            theta=cfg.theta,
            tau_rel=cfg.tau_rel,
            rho=cfg.rho,
            include_pairs=not cfg.no_pair_constraints,
            epsilon_hat=cfg.epsilon_hat,
            gamma_f_hat=cfg.gamma_f_hat,
            gamma_gy_hat=cfg.gamma_gy_hat,
            gamma_delta_prime=cfg.gamma_delta_prime,
            feas_tol=cfg.feas_tol,
            opt_tol=cfg.opt_tol,
        )
        ctl = learn_controller(d, dictionary, lc)
    except InfeasibleFitError as e:
        return _fail(EXIT_INFEASIBLE, f"{e} (hint: {e.hint})")
    except LearningError as e:
        return _fail(EXIT_INFEASIBLE, str(e))
    except NoInformativePairsError as e:
        return _fail(EXIT_NO_PAIRS, str(e))
    except SolverFailure as e:
        return _fail(EXIT_SOLVER, f"solver failure: {e}")
    except (RhoTooSmallError, ValueError) as e:
        return _fail(EXIT_PARSE, str(e))
    verdict = diagnose_basis(
        ctl, ctl.report, alpha_small=cfg.alpha_small,
        sparsity_max=cfg.sparsity_max,
    )
    out = cfg.resolve_out_dir()
    (out / "controller.txt").write_text(ctl.to_text())
    r = ctl.report
    _write_report(out / "learn_report.txt", [
        ("n_samples", len(d)),
        ("dictionary_size", ctl.dictionary.M),
        ("support_size", len(ctl.support)),
        ("epsilon_hat", r.epsilon_hat),
        ("rho_used", r.rho_used),
        ("covered_count", r.covered_count),
        ("gamma_f_hat", r.gamma_f_hat),
        ("gamma_gy_hat", r.gamma_gy_hat),
        ("alpha_min", r.alpha_min),
        ("alpha", r.alpha),
        ("gamma_delta_prime", r.gamma_delta_prime),
        ("stability_margin_feasible", r.stability_margin_feasible),
        ("absolute_residual_mode", r.absolute_residual_mode),
        ("gamma_delta_s", ctl.gamma_delta_s),
        ("gamma_khat", ctl.gamma_khat),
        ("max_a_violation", ctl.constraint_residuals.max_a_violation),
        ("max_b_violation", ctl.constraint_residuals.max_b_violation),
        ("basis_verdict", verdict.verdict),
    ])
    print(f"support {len(ctl.support)}/{ctl.dictionary.M}")
    print(f"gamma_delta_s {_fmt(ctl.gamma_delta_s)}")
    print(f"basis_verdict {verdict.verdict}")
    print(f"wrote {out / 'controller.txt'}")
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    """Stress-test a learned controller's certificate on a benchmark."""
    try:
        plant, kappa_ref = benchmark_plant(cfg.plant)
    except ValueError as e:
        return _fail(EXIT_PARSE, str(e))
    # The dictionary path slot carries the controller file for this command.
    try:
        text = Path(cfg.dictionary or "").read_text()
    except OSError as e:
        return _fail(EXIT_PARSE, f"cannot read controller file: {e}")
    try:
        ctl = LearnedController.from_text(text)
    except ValueError as e:
        return _fail(EXIT_PARSE, f"controller file: {e}")
    kappa_hat = ctl.as_controller(plant.u_bounds)

    lo, hi = plant.y_box[0]
    grid = np.linspace(lo, hi, cfg.grid_points)
    gamma_delta, delta0_abs, max_err = grid_error_lipschitz(
        kappa_ref, kappa_hat, grid
    )
    origin = np.zeros(plant.n_y)
    g0_vec, _ = plant.step(
        origin, kappa_ref.eval(origin), np.zeros(plant.es_box.shape[0])
    )
    cert = certify(
        plant.gamma_f, plant.gamma_gy, plant.gamma_ge, gamma_delta,
        gamma_khat=ctl.gamma_khat, delta0_abs=delta0_abs,
        g0_norm=float(np.abs(g0_vec).max()), epsilon_y=cfg.noise_y,
    )
    print(f"gamma {_fmt(cert.gamma)} certified {cert.certified}")
    print(f"gamma_delta_measured {_fmt(gamma_delta)} max_error {_fmt(max_err)}")
    out = cfg.resolve_out_dir()
    if not cert.certified:
        if cfg.require_cert:
            return _fail(
                EXIT_UNCERTIFIED,
                f"certificate not contractive (gamma={_fmt(cert.gamma)})",
            )
        _write_report(out / "simulate_summary.txt", [
            ("certified", False), ("gamma", cert.gamma),
        ])
        print("certificate not contractive; no bounds emitted")
        return 0

    es_amp = float(np.abs(plant.es_box).max())
    T = cfg.horizon
    all_dominated = True
    worst_margin = np.inf
    first = None
    for i in range(cfg.runs):
        run_seed = cfg.seed + i
        y0 = np.random.default_rng(run_seed).uniform(
            plant.y_box[:, 0], plant.y_box[:, 1]
        )
        noise = NoiseModel(
            kind="uniform_box",
            eps_y=(cfg.noise_y,) * plant.n_y,
            eps_s=tuple(
                float(np.abs(plant.es_box[j]).max())
                for j in range(plant.es_box.shape[0])
            ),
            seed=run_seed,
        )
        seqs = noise.sequences(T)
        traj = simulate(plant, kappa_hat, y0, seqs.e_s, seqs.e_y, T)
        y_norm = np.abs(traj.y_array()).max(axis=1)
        bound = np.array([
            learned_loop_bound(cert, es_amp, float(np.abs(y0).max()), t)
            for t in range(T + 1)
        ])
        ok_traj = bool(np.all(y_norm <= bound + 1e-9))
        dev = deviation_run(
            plant, kappa_ref, kappa_hat, y0, np.zeros(plant.n_y),
            seqs, T, cert,
        )
        all_dominated = all_dominated and ok_traj and dev.dominated
        worst_margin = min(worst_margin, float((bound - y_norm).min()))
        if first is None:
            first = (traj, bound, dev)

    traj, bound, dev = first
    lines = ["t," + ",".join(f"y{i+1}" for i in range(plant.n_y)) + ",u"]
    for t, row in enumerate(traj.y):
        u_txt = _fmt(traj.u[t]) if t < len(traj.u) else ""
        lines.append(f"{t}," + ",".join(_fmt(v) for v in row) + f",{u_txt}")
    (out / "trajectory.csv").write_text("\n".join(lines) + "\n")
    lines = ["t,y_norm,traj_bound,xi_norm,dev_bound"]
    xi_norm = np.abs(dev.xi_array()).max(axis=1)
    y_norm = np.abs(traj.y_array()).max(axis=1)
    for t in range(T + 1):
        lines.append(
            f"{t},{_fmt(y_norm[t])},{_fmt(bound[t])},"
            f"{_fmt(xi_norm[t])},{_fmt(dev.bound[t])}"
        )
    (out / "bounds.csv").write_text("\n".join(lines) + "\n")
    _write_report(out / "simulate_summary.txt", [
        ("certified", True),
        ("gamma", cert.gamma),
        ("gamma_delta_measured", gamma_delta),
        ("delta0_abs", delta0_abs),
        ("gamma_khat", cert.gamma_khat),
        ("runs", cfg.runs),
        ("horizon", T),
        ("dominated", all_dominated),
        ("worst_traj_margin", worst_margin),
    ])
    print(f"dominated {str(all_dominated).lower()} over {cfg.runs} runs")
    print(f"wrote {out / 'bounds.csv'}")
    return 0


def _reproduce_one(
    N: int, seed: int, grid: np.ndarray, cfg: RunConfig
) -> tuple[dict, Dataset]:
    """Constrained and unconstrained fits for one sweep point."""
    d, ref = generate_example_dataset(N, seed)
    dictionary = gaussian_from_data(d, 100.0, y_box=[(-3.0, 3.0)])
    lc = LearnConfig(
        margin=cfg.margin, theta=cfg.theta, tau_rel=cfg.tau_rel,
        gamma_delta_prime=1.0, feas_tol=cfg.feas_tol, opt_tol=cfg.opt_tol,
    )
    ctl = learn_controller(d, dictionary, lc)
    # Wide bounds: measure the raw law, not a clamped deployment of it.
    raw = ctl.as_controller((-1e9, 1e9))
    gamma_delta, _, max_err = grid_error_lipschitz(ref, raw, grid)

    Phi, u = build_regressor(d, dictionary)
    eps = ctl.report.epsilon_hat
    sel = select_alpha(Phi, u, eps, margin=cfg.margin)
    fb = sel.residual * (1 + cfg.margin) if sel.absolute else sel.alpha * eps
    a1 = stage1_sparsify(
        Phi, u, d.y_array(), eps, sel.alpha, 1.0,
        include_pairs=False, fit_bound=fb,
        feas_tol=cfg.feas_tol, opt_tol=cfg.opt_tol,
    )
    support = extract_support(a1, cfg.tau_rel)
    a_nc, _ = stage2_tighten(
        Phi, u, d.y_array(), eps, sel.alpha, support,
        include_pairs=False, fit_bound=fb,
        feas_tol=cfg.feas_tol, opt_tol=cfg.opt_tol,
    )
    a_nc_arr = np.asarray(a_nc)

    def nc_law(y: np.ndarray) -> float:
        return float(evaluate_row(dictionary, y) @ a_nc_arr)

    nc_raw = FunctionController(nc_law, (-1e9, 1e9))
    gamma_delta_nc, _, _ = grid_error_lipschitz(ref, nc_raw, grid)
    row = {
        "N": N,
        "gamma_delta": gamma_delta,
        "gamma_delta_nc": gamma_delta_nc,
        "max_err": max_err,
        "ctl": ctl,
    }
    return row, d, ref


def cmd_reproduce_example(cfg: RunConfig) -> int:
    """Seeded N-sweep comparing constrained and unconstrained fits.

    Writes a sweep CSV with the grid-measured mismatch slopes per N and,
    when 170 is part of the sweep, grid and scatter CSVs for the fit
    overlay at N=170.
    """
    if cfg.sweep is not None:
        Ns = tuple(cfg.sweep)
    elif cfg.full_sweep:
        Ns = tuple(range(10, 251, 10))
    else:
        Ns = _DEFAULT_SWEEP
    grid = np.linspace(-3.0, 3.0, cfg.grid_points)
    out = cfg.resolve_out_dir()
    rows = []
    try:
        for N in Ns:
            row, d, ref = _reproduce_one(N, cfg.seed + N, grid, cfg)
            rows.append(row)
            print(
                f"N={N} gamma_delta={_fmt(row['gamma_delta'])} "
                f"nc={_fmt(row['gamma_delta_nc'])} max_err={_fmt(row['max_err'])}"
            )
            if N == 170:
                ctl = row["ctl"]
                raw = ctl.as_controller((-1e9, 1e9))
                lines = ["y,kappa,kappa_hat"]
                for p in grid:
                    point = np.array([p])
                    lines.append(
                        f"{_fmt(p)},{_fmt(ref.eval(point))},{_fmt(raw.eval(point))}"
                    )
                (out / "fig2.csv").write_text("\n".join(lines) + "\n")
                lines = ["y,u"]
                for yy, uu in zip(d.y, d.u):
                    lines.append(f"{_fmt(yy[0])},{_fmt(uu)}")
                (out / "fig2_data.csv").write_text("\n".join(lines) + "\n")
    except LearningError as e:
        return _fail(EXIT_INFEASIBLE, str(e))
    except SolverFailure as e:
        return _fail(EXIT_SOLVER, f"solver failure: {e}")

    lines = ["N,gamma_delta,gamma_delta_nc"]
    for row in rows:
        lines.append(
            f"{row['N']},{_fmt(row['gamma_delta'])},{_fmt(row['gamma_delta_nc'])}"
        )
    (out / "fig1.csv").write_text("\n".join(lines) + "\n")
    _write_report(out / "reproduce_summary.txt", [
        ("sweep", " ".join(str(n) for n in Ns)),
        ("seed", cfg.seed),
        ("first_gamma_delta", rows[0]["gamma_delta"]),
        ("last_gamma_delta", rows[-1]["gamma_delta"]),
        ("last_gamma_delta_nc", rows[-1]["gamma_delta_nc"]),
    ])
    print(f"wrote {out / 'fig1.csv'}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopclone",
        description=(
            "Identify a sparse static feedback law from closed-loop logs "
            "and certify the resulting loop."
        ),
        epilog=(
            "exit codes: 0 ok, 2 parse/validation, 3 no informative pairs, "
            "4 infeasible fit, 5 solver failure, 6 certificate required "
            "but not contractive"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", help="JSON config file; overrides flags")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("estimate", help="noise bound and loop-gain estimates")
    common(p)
    p.add_argument("dataset", help="dataset CSV path")
    p.add_argument("--rho", default="auto",
                   help="neighborhood radius, number or 'auto'")

    p = sub.add_parser("learn", help="fit a sparse feedback law")
    common(p)
    p.add_argument("dataset", help="dataset CSV path")
    p.add_argument(
        "dictionary",
        help="dictionary file, or gaussian:<width> / polynomial:<degree>",
    )
    p.add_argument("--margin", type=float, default=0.02)
    p.add_argument("--theta", type=float, default=0.95)
    p.add_argument("--tau-rel", type=float, default=1e-6)
    p.add_argument("--rho", default="auto")
    p.add_argument("--epsilon-hat", type=float, default=None)
    p.add_argument("--gamma-delta-prime", type=float, default=None)
    p.add_argument("--gamma-f-hat", type=float, default=None)
    p.add_argument("--gamma-gy-hat", type=float, default=None)
    p.add_argument("--no-pair-constraints", action="store_true")

    p = sub.add_parser("simulate", help="certificate stress test")
    common(p)
    p.add_argument("controller", help="controller file from 'learn'")
    p.add_argument("--plant", default="tanh-loop")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--noise-y", type=float, default=0.001)
    p.add_argument("--grid-points", type=int, default=601)
    p.add_argument("--require-cert", action="store_true")

    p = sub.add_parser(
        "reproduce-example", help="seeded sweep over dataset sizes"
    )
    common(p)
    p.add_argument("--full-sweep", action="store_true",
                   help="step 10 instead of step 40")
    p.add_argument("--sweep", help="comma-separated N values")
    p.add_argument("--grid-points", type=int, default=601)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    """Flag values first, then the JSON config file on top of them."""
    picked: dict = {"seed": args.seed}
    if args.out is not None:
        picked["out_dir"] = args.out
    for flag, key in (
        ("dataset", "dataset"), ("dictionary", "dictionary"),
        ("controller", "dictionary"), ("rho", "rho"),
        ("margin", "margin"), ("theta", "theta"), ("tau_rel", "tau_rel"),
        ("epsilon_hat", "epsilon_hat"),
        ("gamma_delta_prime", "gamma_delta_prime"),
        ("gamma_f_hat", "gamma_f_hat"), ("gamma_gy_hat", "gamma_gy_hat"),
        ("no_pair_constraints", "no_pair_constraints"),
        ("plant", "plant"), ("runs", "runs"), ("horizon", "horizon"),
        ("noise_y", "noise_y"), ("grid_points", "grid_points"),
        ("require_cert", "require_cert"), ("full_sweep", "full_sweep"),
    ):
        if hasattr(args, flag) and getattr(args, flag) is not None:
            picked[key] = getattr(args, flag)
    if getattr(args, "sweep", None):
        picked["sweep"] = tuple(int(v) for v in args.sweep.split(","))
    cfg = RunConfig.from_mapping(picked)
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        cfg = RunConfig.from_mapping(data, base=cfg)
    if cfg.rho != "auto":
        cfg = dataclasses.replace(cfg, rho=float(cfg.rho))
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except (ValueError, OSError, json.JSONDecodeError) as e:
        return _fail(EXIT_PARSE, f"config: {e}")
    handler = {
        "estimate": cmd_estimate,
        "learn": cmd_learn,
        "simulate": cmd_simulate,
        "reproduce-example": cmd_reproduce_example,
    }[args.command]
    return handler(cfg)


if __name__ == "__main__":
    sys.exit(main())
