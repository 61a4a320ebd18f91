"""Result bundles: delimited tables, a JSON summary, plot data and figures.

Every floating-point result is written with 9 significant digits so that two
runs with the same inputs produce byte-identical files. The configuration
echo in the summary keeps full precision so a run can be replayed from it.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .scenario_file import scenario_to_dict
from .sim import RunLog

TRAJECTORY_COLUMNS = ("t", "ship", "x_n", "y_n", "chi_n", "u_y", "u_s", "epsilon")
NEGOTIATION_COLUMNS = ("epoch", "s", "ship", "residual", "solver_iters", "stationarity", "staleness", "t")
EVENT_COLUMNS = ("ordinal", "epoch", "sender", "recipient", "iteration", "send_time", "deliver_time",
                 "dropped")

EXIT_OK = 0
EXIT_PROTOCOL = 2
EXIT_CONFIG = 3


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    return f"{float(v):.9g}"


def _jsonable(obj):
    """Round floats to 9 significant digits; non-finite floats become strings."""
    if isinstance(obj, float):
        return float(f"{obj:.9g}") if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


@dataclass
class ResultBundle:
    log: RunLog
    exit_status: int = EXIT_OK

    @property
    def seed(self) -> int:
        return self.log.scenario.net.seed

    def trajectory_rows(self):
        for r in self.log.ticks:
            yield (r.t, r.ship, r.x_n, r.y_n, r.chi_n, r.u_y, r.u_s, r.epsilon)

    def negotiation_rows(self):
        for r in self.log.negotiations:
            yield (r.epoch, r.s, r.ship, r.residual, r.solver_iters, r.stationarity, r.staleness, r.t)

    def event_rows(self):
        for ev in self.log.events:
            yield (ev.ordinal, ev.epoch, ev.sender, ev.recipient, ev.iteration, ev.send_time,
                   ev.deliver_time, ev.dropped)

    def summary(self) -> dict:
        sc = self.log.scenario
        names = [s.name for s in sc.ships]
        base = self.log.summary()
        capped = sum(1 for r in self.log.negotiations if r.stationarity > sc.splitting.tol_stat)
        out = _jsonable({
            "scenario": sc.name,
            "seed": self.seed,
            "mode": sc.net.mode,
            "exit_status": self.exit_status,
            "aborted": base["aborted"],
            "epochs": base["epochs"],
            "min_distance": {f"{names[int(a)]}-{names[int(b)]}": v
                             for (a, b), v in ((k.split("-"), v) for k, v in base["min_distance"].items())},
            "min_epsilon": dict(zip(names, base["min_epsilon"])),
            "faults": base["faults"],
            "local_solves": len(self.log.negotiations),
            "local_solves_above_tolerance": capped,
        })
        # full precision so the run can be replayed from the echo alone
        out["config"] = scenario_to_dict(sc)
        return out


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_bundle(bundle: ResultBundle, out_dir) -> list:
    """Write the tables and summary; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [
        _write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, bundle.trajectory_rows()),
        _write_csv(out / "negotiation.csv", NEGOTIATION_COLUMNS, bundle.negotiation_rows()),
        _write_csv(out / "events.csv", EVENT_COLUMNS, bundle.event_rows()),
    ]
    summary = out / "summary.json"
    summary.write_text(json.dumps(bundle.summary(), indent=2, sort_keys=False) + "\n")
    paths.append(summary)
    return paths


def emit_plot_data(bundle: ResultBundle, out_dir) -> dict:
    """One data file per plot kind; returns ``{kind: path}``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = bundle.log
    m = len(log.scenario.ships)
    files = {}
    files["trajectories"] = _write_csv(
        out / "trajectories.csv", ("t", "ship", "x_n", "y_n"),
        ((r.t, r.ship, r.x_n, r.y_n) for r in log.ticks))
    dist = log.pair_distances()
    files["distances"] = _write_csv(
        out / "distances.csv", ("t", "ship_a", "ship_b", "distance"),
        ((t, a, b, d) for a, b in itertools.combinations(range(m), 2)
         for t, d in zip(*dist[(a, b)])))
    files["safety"] = _write_csv(
        out / "safety.csv", ("t", "ship", "epsilon"),
        ((r.t, r.ship, r.epsilon) for r in log.ticks))
    files["residuals"] = _write_csv(
        out / "residuals.csv", ("epoch", "s", "ship", "residual"),
        ((r.epoch, r.s, r.ship, r.residual) for r in log.negotiations))
    return files


def render_figures(bundle: ResultBundle, out_dir) -> dict:
    """PNG figures matching the plot data files; returns ``{kind: path}``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = bundle.log
    sc = log.scenario
    names = [s.name for s in sc.ships]
    meta = {"Software": None}
    files = {}

    fig, ax = plt.subplots(figsize=(6, 6))
    for i, name in enumerate(names):
        tr = log.track(i)
        ax.plot(tr[:, 2], tr[:, 1], marker=".", ms=3, label=name)
        wps = sc.ships[i].waypoints
        ax.plot([p[1] for p in wps], [p[0] for p in wps], "k--", lw=0.6)
    ax.set_xlabel("east y_n [m]")
    ax.set_ylabel("north x_n [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(fontsize=7)
    ax.set_title(f"{sc.name}: trajectories")
    files["trajectories"] = out / "trajectories.png"
    fig.savefig(files["trajectories"], dpi=100, metadata=meta)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4))
    for (a, b), (t, d) in log.pair_distances().items():
        ax.plot(t, d, label=f"{names[a]}-{names[b]}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("distance [m]")
    if len(names) > 1:
        ax.legend(fontsize=6, ncol=3)
    ax.set_title("pairwise distance")
    files["distances"] = out / "distances.png"
    fig.savefig(files["distances"], dpi=100, metadata=meta)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4))
    for i, name in enumerate(names):
        tr = log.track(i)
        ax.plot(tr[:, 0], tr[:, 6], label=name)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("safety index [m]")
    ax.legend(fontsize=7)
    ax.set_title("safety indices")
    files["safety"] = out / "safety.png"
    fig.savefig(files["safety"], dpi=100, metadata=meta)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4))
    for i, name in enumerate(names):
        rows = [(r.epoch + (r.s - 1) / max(sc.splitting.s_max, 1), r.residual)
                for r in log.negotiations if r.ship == i]
        if rows:
            x, y = zip(*rows)
            ax.semilogy(x, y, ".", label=name)
    ax.set_xlabel("epoch")
    ax.set_ylabel("residual")
    if log.negotiations:
        ax.legend(fontsize=7)
    ax.set_title("consensus residual per negotiation step")
    files["residuals"] = out / "residuals.png"
    fig.savefig(files["residuals"], dpi=100, metadata=meta)
    plt.close(fig)
    return files
