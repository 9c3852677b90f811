"""Monte Carlo cross-checks for every closed form in the package.

The estimators here are deliberately simple and independent of the
analytic code paths they audit: independent stationary segments are
simulated, each target quantity is accumulated per batch, and the batch
means give both the point estimate and its standard error.  A z-score
``(oracle - analytic) / se`` above :data:`Z_THRESHOLD` flags a cell.

Three cells of the closed-form moment table are kept in their original
algebraic form even though simulation contradicts them; they are listed
in :data:`DOCUMENTED_DISCREPANCIES` and the corrected variants are
derived and pinned in the test suite.  A discrepancy report is expected
to flag (at most) those cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .leadlag import gamma, var_exp_h
from .models import ModelSpec, mean_correction, require_valid
from .moments import moments
from .simulate import (
    draw_jump_stationary_state,
    draw_stationary_return,
    sample_skewed_t_component,
    simulate_path,
)

__all__ = [
    "Z_THRESHOLD",
    "McEstimate",
    "mc_stationary_summary",
    "mc_gamma",
    "mc_path_mean",
    "oracle_check_point",
    "GridPoint",
    "default_verify_grid",
    "CheckRow",
    "DiscrepancyReport",
    "run_discrepancy_report",
    "write_discrepancy_csv",
    "DOCUMENTED_DISCREPANCIES",
]

Z_THRESHOLD = 4.0

# Cells whose implemented closed form is retained verbatim although the
# sampler disagrees for rho != 0.  Keyed by (model id value, quantity).
DOCUMENTED_DISCREPANCIES: dict[tuple[str, str], str] = {
    ("M3.1", "m3"): (
        "third moment: one bracket term is retained with coefficient "
        "-rho^2 sigma^2 / 3 where the derivation gives +rho^2 sigma^2 / 6"
    ),
    ("M3.2", "m4"): (
        "fourth moment: the (1 - delta^2)^2 bracket is retained with the "
        "extra terms 6 rho^2 - 3 rho^4, which the derivation does not contain"
    ),
    ("M3.3", "m4"): (
        "fourth moment: the jump-product bracket is retained with the extra "
        "terms 6 rho^2 - 3 rho^4, which the derivation does not contain"
    ),
}


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo estimate with its batch-means standard error."""

    value: float
    se: float

    def z_against(self, target: float) -> float:
        if self.se == 0.0:
            if self.value == target:
                return 0.0
            return math.copysign(math.inf, self.value - target)
        return (self.value - target) / self.se


def _batch_estimate(batch_values: np.ndarray) -> McEstimate:
    b = np.asarray(batch_values, dtype=float)
    return McEstimate(float(b.mean()), float(b.std(ddof=1) / math.sqrt(b.size)))


def mc_stationary_summary(
    spec: ModelSpec,
    n: int,
    rng: np.random.Generator,
    n_batches: int = 100,
    mean_corrected: bool = True,
) -> dict[str, McEstimate]:
    """Stationary-draw estimates of mean, m2, m3, m4, skewness, kurtosis,
    and the variance of the volatility level, with batch-means errors."""
    if n < n_batches:
        raise ValueError(f"n={n} must be at least n_batches={n_batches}")
    m = n // n_batches
    names = ("mean", "m2", "m3", "m4", "skewness", "kurtosis", "var_exp_h")
    acc = {k: np.empty(n_batches) for k in names}
    for b in range(n_batches):
        s = draw_stationary_return(spec, m, rng, mean_corrected=mean_corrected)
        r = s.returns
        r2 = r * r
        m2 = r2.mean()
        m3 = (r2 * r).mean()
        m4 = (r2 * r2).mean()
        eh = np.exp(s.logvol)
        acc["mean"][b] = r.mean()
        acc["m2"][b] = m2
        acc["m3"][b] = m3
        acc["m4"][b] = m4
        acc["skewness"][b] = m3 / m2**1.5
        acc["kurtosis"][b] = m4 / m2**2
        acc["var_exp_h"][b] = (eh * eh).mean() - eh.mean() ** 2
    return {k: _batch_estimate(v) for k, v in acc.items()}


def _stationary_seed(spec: ModelSpec, m: int, rng: np.random.Generator) -> np.ndarray:
    p = spec.params
    if spec.model.has_jumps:
        return draw_jump_stationary_state(p, m, rng)
    v = p.sigma**2 / (1.0 - p.phi**2)
    return p.alpha + math.sqrt(v) * rng.standard_normal(m)


def _panel_batch(
    spec: ModelSpec,
    m: int,
    max_lag: int,
    rng: np.random.Generator,
    mean_corrected: bool,
):
    """Simulate m independent stationary windows of width 2 max_lag + 1.

    Returns ``(r_c, eh)`` where ``r_c`` is the return at the center
    position and ``eh[t]`` holds ``exp(h)`` at window position t.
    """
    p = spec.params
    model = spec.model
    L = 2 * max_lag + 1
    c = max_lag
    eh = np.empty((L, m))
    rho_c = math.sqrt(1.0 - p.rho**2)

    if model.contemporaneous:
        h = _stationary_seed(spec, m, rng)  # pre-window state
        eta_c = h_c = None
        for t in range(L):
            eta = rng.standard_normal(m)
            h = p.alpha + p.phi * (h - p.alpha) + p.sigma * eta
            if model.has_jumps:
                h = h + np.where(rng.random(m) < p.pi2, rng.standard_normal(m), 0.0)
            np.exp(h, out=eh[t])
            if t == c:
                eta_c, h_c = eta, h
    else:
        h = _stationary_seed(spec, m, rng)  # this IS the window start h_0
        eta_c = h_c = None
        for t in range(L):
            np.exp(h, out=eh[t])
            eta = rng.standard_normal(m)
            if t == c:
                eta_c, h_c = eta, h
            w = p.sigma * eta
            if model.has_jumps:
                w = w + np.where(rng.random(m) < p.pi2, rng.standard_normal(m), 0.0)
            h = p.alpha + p.phi * (h - p.alpha) + w

    z = rng.standard_normal(m)
    eps_c = p.rho * eta_c + rho_c * z
    mu = mean_correction(spec) if (model.contemporaneous and mean_corrected) else 0.0
    vol = np.sqrt(eh[c])
    if model.has_mixing:
        s, _, _, _ = sample_skewed_t_component(p.nu, p.lam, rng, size=m, eps=eps_c)
        r_c = mu + vol * s
    elif model.has_jumps:
        r_c = (
            mu
            + vol * eps_c
            + np.where(rng.random(m) < p.pi1, rng.standard_normal(m), 0.0)
        )
    else:
        r_c = mu + vol * eps_c
    return r_c, eh


def _panel_pass(
    spec: ModelSpec,
    n: int,
    rng: np.random.Generator,
    max_lag: int,
    n_batches: int,
    mean_corrected: bool = True,
) -> dict[str, np.ndarray]:
    """Per-batch statistics from n stationary windows (see _panel_batch)."""
    require_valid(spec)
    if n < n_batches:
        raise ValueError(f"n={n} must be at least n_batches={n_batches}")
    m = n // n_batches
    c = max_lag
    names = ["m2", "m3", "m4", "var_exp_h"] + [
        f"gamma[{k}]" for k in range(-max_lag, max_lag + 1)
    ]
    acc = {k: np.empty(n_batches) for k in names}
    for b in range(n_batches):
        r_c, eh = _panel_batch(spec, m, max_lag, rng, mean_corrected)
        r2 = r_c * r_c
        acc["m2"][b] = r2.mean()
        acc["m3"][b] = (r2 * r_c).mean()
        acc["m4"][b] = (r2 * r2).mean()
        ehc = eh[c]
        acc["var_exp_h"][b] = (ehc * ehc).mean() - ehc.mean() ** 2
        r_mean = r_c.mean()
        for k in range(-max_lag, max_lag + 1):
            col = eh[c + k]
            acc[f"gamma[{k}]"][b] = (r_c * col).mean() - r_mean * col.mean()
    return acc


def mc_gamma(
    spec: ModelSpec,
    max_lag: int,
    n: int,
    rng: np.random.Generator,
    n_batches: int = 100,
) -> dict[int, McEstimate]:
    """Monte Carlo lead-lag covariances for k = -max_lag .. max_lag."""
    acc = _panel_pass(spec, n, rng, max_lag, n_batches)
    return {
        k: _batch_estimate(acc[f"gamma[{k}]"])
        for k in range(-max_lag, max_lag + 1)
    }


def mc_path_mean(
    spec: ModelSpec,
    n_steps: int,
    policy=0,
    n_batches: int = 100,
    mean_corrected: bool = True,
) -> McEstimate:
    """Sample mean of one simulated path, with a batch-means error.

    Contiguous segments serve as batches; with segments much longer than
    the volatility mixing time the usual independence approximation
    applies.
    """
    path = simulate_path(spec, n_steps, policy, mean_corrected=mean_corrected)
    usable = (n_steps // n_batches) * n_batches
    b = path.returns[:usable].reshape(n_batches, -1).mean(axis=1)
    return _batch_estimate(b)


def oracle_check_point(
    spec: ModelSpec,
    n: int,
    rng: np.random.Generator,
    max_lag: int = 2,
    n_batches: int = 100,
) -> dict[str, McEstimate]:
    """One pass of sampler estimates for every reportable quantity."""
    acc = _panel_pass(spec, n, rng, max_lag, n_batches)
    return {name: _batch_estimate(values) for name, values in acc.items()}


@dataclass(frozen=True)
class GridPoint:
    """A labeled parameter point of the verification grid."""

    label: str
    spec: ModelSpec


def default_verify_grid() -> list[GridPoint]:
    """Three parameter points per model.

    Each family gets a mild, a moderately stressed, and a strongly
    stressed point; the stressed points are chosen so a sampler run of
    ten million windows can distinguish the retained closed forms from
    their corrected variants wherever the two differ.
    """
    table: list[tuple[str, dict]] = [
        ("M2.1", dict(alpha=-1.0, phi=0.9, sigma=0.4, rho=-0.5)),
        ("M2.1", dict(alpha=0.5, phi=0.7, sigma=0.7, rho=0.3)),
        ("M2.1", dict(alpha=-2.0, phi=0.95, sigma=0.25, rho=0.8)),
        ("M3.1", dict(alpha=-1.0, phi=0.9, sigma=0.4, rho=-0.5)),
        ("M3.1", dict(alpha=-1.0, phi=0.6, sigma=0.6, rho=-0.9)),
        ("M3.1", dict(alpha=0.5, phi=0.7, sigma=0.7, rho=0.3)),
        ("M2.2", dict(alpha=-1.0, phi=0.9, sigma=0.4, rho=-0.5, nu=12.0, lam=-1.5)),
        ("M2.2", dict(alpha=-1.0, phi=0.8, sigma=0.5, rho=0.4, nu=20.0, lam=2.0)),
        ("M2.2", dict(alpha=0.0, phi=0.7, sigma=0.6, rho=-0.3, nu=16.0, lam=-0.5)),
        ("M3.2", dict(alpha=-1.0, phi=0.9, sigma=0.4, rho=-0.5, nu=12.0, lam=-1.5)),
        ("M3.2", dict(alpha=-1.0, phi=0.8, sigma=0.3, rho=-0.6, nu=12.0, lam=-1.0)),
        ("M3.2", dict(alpha=0.5, phi=0.7, sigma=0.5, rho=0.5, nu=20.0, lam=1.0)),
        ("M2.3", dict(alpha=-1.0, phi=0.8, sigma=0.4, rho=-0.5, pi1=0.1, pi2=0.15)),
        ("M2.3", dict(alpha=-1.0, phi=0.9, sigma=0.3, rho=0.4, pi1=0.05, pi2=0.1)),
        ("M2.3", dict(alpha=0.0, phi=0.6, sigma=0.6, rho=-0.7, pi1=0.2, pi2=0.05)),
        ("M3.3", dict(alpha=-1.0, phi=0.8, sigma=0.3, rho=-0.6, pi1=0.1, pi2=0.15)),
        ("M3.3", dict(alpha=-1.0, phi=0.9, sigma=0.3, rho=0.4, pi1=0.05, pi2=0.1)),
        ("M3.3", dict(alpha=0.3, phi=0.6, sigma=0.5, rho=0.5, pi1=0.15, pi2=0.05)),
    ]
    grid: list[GridPoint] = []
    counters: dict[str, int] = {}
    for model, params in table:
        i = counters.get(model, 0)
        counters[model] = i + 1
        grid.append(GridPoint(f"{model}[p{i}]", ModelSpec.create(model, **params)))
    return grid


@dataclass(frozen=True)
class CheckRow:
    """One analytic-vs-sampler comparison in a discrepancy report."""

    model: str
    quantity: str
    analytic: float
    oracle: float
    se: float
    z: float
    flag: bool

    @property
    def documented(self) -> bool:
        base = self.model.split("[", 1)[0]
        return (base, self.quantity) in DOCUMENTED_DISCREPANCIES


@dataclass(frozen=True)
class DiscrepancyReport:
    """All comparison rows for a grid run plus the run settings."""

    rows: tuple[CheckRow, ...]
    grid: tuple[GridPoint, ...]
    n: int
    seed: int
    max_lag: int
    n_batches: int
    z_threshold: float

    @property
    def flagged(self) -> tuple[CheckRow, ...]:
        return tuple(r for r in self.rows if r.flag)

    @property
    def undocumented_flags(self) -> tuple[CheckRow, ...]:
        return tuple(r for r in self.flagged if not r.documented)


def _analytic_targets(spec: ModelSpec, max_lag: int) -> dict[str, float]:
    mom = moments(spec)
    out = {
        "m2": mom.m2,
        "m3": mom.m3,
        "m4": mom.m4,
        "var_exp_h": var_exp_h(spec),
    }
    for k in range(-max_lag, max_lag + 1):
        out[f"gamma[{k}]"] = gamma(spec, k)
    return out


def run_discrepancy_report(
    grid: list[GridPoint] | None = None,
    n: int = 10_000_000,
    seed: int = 0,
    max_lag: int = 2,
    n_batches: int = 100,
    z_threshold: float = Z_THRESHOLD,
) -> DiscrepancyReport:
    """Compare every closed form against the sampler over a grid.

    Each grid point gets its own generator stream derived from ``seed``
    and its grid position, so a full run is deterministic.
    """
    from .simulate import RngPolicy

    if grid is None:
        grid = default_verify_grid()
    rows: list[CheckRow] = []
    for i, point in enumerate(grid):
        rng = RngPolicy(seed, 1000 + i).generator()
        estimates = oracle_check_point(point.spec, n, rng, max_lag, n_batches)
        targets = _analytic_targets(point.spec, max_lag)
        for quantity, target in targets.items():
            est = estimates[quantity]
            z = est.z_against(target)
            rows.append(
                CheckRow(
                    model=point.label,
                    quantity=quantity,
                    analytic=target,
                    oracle=est.value,
                    se=est.se,
                    z=z,
                    flag=abs(z) > z_threshold,
                )
            )
    return DiscrepancyReport(
        tuple(rows), tuple(grid), n, seed, max_lag, n_batches, z_threshold
    )


def write_discrepancy_csv(report: DiscrepancyReport, fh) -> None:
    """Write a report as CSV with metadata in comment headers."""
    fh.write(
        f"# n={report.n} seed={report.seed} max_lag={report.max_lag} "
        f"n_batches={report.n_batches} z_threshold={repr(report.z_threshold)}\n"
    )
    for point in report.grid:
        p = point.spec.params
        parts = []
        for f in fields(p):
            val = getattr(p, f.name)
            if val is not None:
                parts.append(f"{f.name}={repr(float(val))}")
        fh.write(f"# point {point.label}: " + " ".join(parts) + "\n")
    for (model, quantity), note in sorted(DOCUMENTED_DISCREPANCIES.items()):
        fh.write(f"# documented {model}:{quantity} {note}\n")
    fh.write("model,quantity,analytic,oracle,se,z,flag\n")
    for r in report.rows:
        fh.write(
            f"{r.model},{r.quantity},{repr(r.analytic)},{repr(r.oracle)},"
            f"{repr(r.se)},{repr(r.z)},{1 if r.flag else 0}\n"
        )
