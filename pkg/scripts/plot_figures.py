"""Plots from an evaluated output directory.

* ``trace_<kind>_slope<k>_onset<i>.png``: residuals, q999 line, alarm flags of
  both criteria and the onset for every exported trace.
* ``delay_by_slope.png`` / ``stability_by_slope.png``: per-slope mean +- std
  for each (model, criterion).

    python3 scripts/plot_figures.py runs/default
"""

import argparse
import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_trace(path, onsets, out):
    rows = read_csv(path)
    step = [int(r["step"]) for r in rows]
    res = [float(r["residual"]) for r in rows]
    thr = float(rows[0]["threshold"])
    fig, (ax, ax_flags) = plt.subplots(2, 1, figsize=(10, 5), sharex=True, height_ratios=[3, 1])
    ax.plot(step, res, lw=0.6, color="0.3", label="residual")
    ax.axhline(thr, color="tab:red", lw=1, label="q999")
    if path.stem in onsets:
        ax.axvline(onsets[path.stem], color="tab:green", ls=":", label="trend onset")
    for col, color, offset in (("flag_c1", "tab:blue", 0.0), ("flag_c2", "tab:orange", 1.2)):
        flags = [int(r[col]) for r in rows]
        ax_flags.fill_between(step, offset, [offset + f for f in flags], step="post", color=color,
                              label=col.replace("flag_c", "criterion "))
        first = next((s for s, f in zip(step, flags) if f), None)
        if first is not None:
            ax.axvline(first, color=color, ls="--", lw=1)
    ax.set_ylabel("residual (normalized)")
    ax.legend(loc="upper left", fontsize=8)
    ax_flags.set_yticks([])
    ax_flags.set_xlabel("step (10 min)")
    ax_flags.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def plot_by_slope(summaries, field, ylabel, out):
    fig, ax = plt.subplots(figsize=(7, 4))
    groups = {}
    for s in summaries:
        groups.setdefault((s["model_kind"], s["criterion"]), []).append(s)
    for i, ((kind, crit), rows) in enumerate(sorted(groups.items())):
        x = [r["slope_index"] + (i - 1.5) * 0.08 for r in rows]
        y = [r[f"mean_{field}"] for r in rows]
        e = [r[f"std_{field}"] or 0.0 for r in rows]
        ax.errorbar(x, y, yerr=e, marker="o", ms=3, capsize=2, label=f"{kind} / {crit}")
    ax.set_xlabel("slope index")
    ax.set_ylabel(ylabel)
    ax.set_xticks(range(1, 11))
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir")
    args = ap.parse_args()
    run = Path(args.run_dir)
    out = run / "figures"
    out.mkdir(exist_ok=True)

    onsets = {}
    for r in read_csv(run / "grid.csv"):
        for kind in ("multi_target", "single_target"):
            onsets[f"{kind}_slope{r['slope_index']}_onset{r['onset_ordinal']}"] = int(r["onset_step"])
    for trace in sorted((run / "traces").glob("*.csv")):
        plot_trace(trace, onsets, out / f"trace_{trace.stem}.png")

    summaries = json.loads((run / "report.json").read_text())["slope_summaries"]
    plot_by_slope(summaries, "delay_hours", "detection delay (h)", out / "delay_by_slope.png")
    plot_by_slope(summaries, "stability", "detection stability", out / "stability_by_slope.png")
    print(f"figures written to {out}")


if __name__ == "__main__":
    main()
