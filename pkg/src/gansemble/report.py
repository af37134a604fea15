"""Human-readable and delimited renderings of run results, plus plots.

Everything here is a pure function of already-computed result objects (or of
a results directory containing their serialized forms); nothing re-trains or
re-scores a model. Text output uses fixed formatting so identical results
render byte-identically.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .errors import ArtifactError
from .metrics import Curve, build_curves, curves_to_rows
from .results import ComparisonTable, IdentifyResult, SweepResult

NO_TARGETS_MESSAGE = "no underperforming SPs identified"

COMPARISON_COLUMNS = ("Use Case", "Subpopulation", "n", "SMOTE", "RUS", "Ens.", "Ens. GAN")


def format_score(value: float | None, decimals: int = 3) -> str:
    if value is None:
        return "n/a"
    return f"{value:.{decimals}f}"


def format_fraction_percent(fraction: float) -> str:
    """0.05 -> '5%', 1.0 -> '100%', 10.0 -> '1000%'."""
    return f"{fraction * 100:g}%"


# ---------------------------------------------------------------------------
# comparison table
# ---------------------------------------------------------------------------

def render_comparison_table(table: ComparisonTable) -> str:
    """Fixed-width text table: one row per subpopulation, largest test set first."""
    body = [
        (
            table.use_case,
            row.sp,
            str(row.n_test),
            format_score(row.smote),
            format_score(row.rus),
            format_score(row.vanilla),
            format_score(row.ensemble_gan),
        )
        for row in table.rows
    ]
    widths = [
        max(len(COMPARISON_COLUMNS[i]), *(len(r[i]) for r in body)) if body
        else len(COMPARISON_COLUMNS[i])
        for i in range(len(COMPARISON_COLUMNS))
    ]

    def fmt(cells) -> str:
        return " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    lines = [
        fmt(COMPARISON_COLUMNS),
        "-+-".join("-" * w for w in widths),
        *(fmt(r) for r in body),
    ]
    lines.append("")
    lines.append(f"metric: {table.metric}")
    for row in table.rows:
        if row.selected_fraction is not None:
            lines.append(
                f"selected augmentation for {row.sp}: "
                f"{format_fraction_percent(row.selected_fraction)} of SP training size"
            )
    for row in table.rows:
        for key in sorted(row.notes):
            lines.append(f"note [{row.sp}/{key}]: {row.notes[key]}")
    return "\n".join(lines) + "\n"


def comparison_to_csv(table: ComparisonTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["use_case", "subpopulation", "n", "smote", "rus", "ensemble", "ensemble_gan",
         "selected_fraction"]
    )
    for row in table.rows:
        writer.writerow([
            table.use_case,
            row.sp,
            row.n_test,
            "" if row.smote is None else repr(float(row.smote)),
            "" if row.rus is None else repr(float(row.rus)),
            "" if row.vanilla is None else repr(float(row.vanilla)),
            "" if row.ensemble_gan is None else repr(float(row.ensemble_gan)),
            "" if row.selected_fraction is None else repr(float(row.selected_fraction)),
        ])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# identify / sweep text reports
# ---------------------------------------------------------------------------

def render_identify(result: IdentifyResult) -> str:
    lines = [
        "== under-performing subpopulation scan ==",
        f"metric: {result.metric}   margin: {result.margin}",
        f"full-population baseline: {format_score(result.full_population_score)}",
    ]
    for sp in sorted(result.sp_scores):
        mark = "  <- flagged" if sp in result.flagged else ""
        lines.append(f"  {sp}: {format_score(result.sp_scores[sp])}{mark}")
    for sp in result.unassessable:
        lines.append(f"  {sp}: unassessable (baseline could not be scored)")
    if not result.flagged:
        lines.append(NO_TARGETS_MESSAGE)
    return "\n".join(lines) + "\n"


def render_sweep_report(sweep: SweepResult) -> str:
    """One line per swept point, fractions shown as percent of SP training size."""
    lines = [
        "== augmentation sweep ==",
        f"generator backend: {sweep.generator_backend}   master seed: {sweep.master_seed}",
        f"fractions swept: {', '.join(format_fraction_percent(f) for f in sweep.fractions)}",
    ]
    for sp in sweep.sps:
        lines.append(
            f"SP {sp} (train {sweep.sp_train_sizes.get(sp, '?')}, "
            f"test {sweep.sp_test_sizes.get(sp, '?')}):"
        )
        for fraction in sweep.fractions:
            p = sweep.point(sp, fraction)
            head = f"  {format_fraction_percent(fraction):>6} | synth {p.n_synthetic:>6}"
            if p.status == "ok":
                parts = [f"sp rocauc {format_score(p.sp_model['rocauc'])}"]
                if p.fullpop_model is not None:
                    parts.append(f"full rocauc {format_score(p.fullpop_model['rocauc'])}")
                if p.fullpop_model_sp_test is not None:
                    parts.append(
                        f"full-on-sp rocauc {format_score(p.fullpop_model_sp_test['rocauc'])}"
                    )
                lines.append(f"{head} | {' | '.join(parts)}")
            else:
                lines.append(f"{head} | FAILED: {p.error}")
    if sweep.n_failed:
        lines.append(f"{sweep.n_failed} of {len(sweep.points)} points failed")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

def curves_csv_text(curves: list[Curve]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sp", "fraction", "model_scope", "metric", "value"])
    for sp, fraction, scope, metric, value in curves_to_rows(curves):
        writer.writerow([sp, repr(float(fraction)), scope, metric, repr(float(value))])
    return buf.getvalue()


def plot_curve(curve: Curve, metric: str = "rocauc"):
    """Figure for one SP: metric vs augmentation fraction, one x position per
    swept fraction, labeled as a percentage; SP-model and full-population series.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fractions = [p.fraction for p in curve.points]
    positions = list(range(len(fractions)))
    sp_vals = [p.sp_model[metric] for p in curve.points]
    full_vals = [
        None if p.fullpop_model is None else p.fullpop_model[metric] for p in curve.points
    ]

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(positions, sp_vals, marker="o", label=f"SP model ({metric})")
    if any(v is not None for v in full_vals):
        ax.plot(positions, full_vals, marker="s", label=f"full-population model ({metric})")
    ax.set_xticks(positions)
    ax.set_xticklabels([format_fraction_percent(f) for f in fractions], rotation=45)
    ax.set_xlabel("synthetic samples added (% of SP training size)")
    ax.set_ylabel(metric)
    ax.set_title(f"SP {curve.sp}: {metric} vs augmentation")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def plot_sp_sizes(sizes: dict[str, int]):
    """Bar chart of subpopulation sizes, largest first."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ordered = sorted(sizes.items(), key=lambda kv: (-kv[1], kv[0]))
    names = [k for k, _ in ordered]
    values = [v for _, v in ordered]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.bar(range(len(names)), values)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45)
    ax.set_ylabel("rows")
    ax.set_title("subpopulation sizes")
    fig.tight_layout()
    return fig


def save_plots(
    sweep: SweepResult,
    out_dir: str | Path,
    metrics: tuple[str, ...] = ("rocauc",),
    sp_sizes: dict[str, int] | None = None,
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for curve in build_curves(sweep):
        for metric in metrics:
            fig = plot_curve(curve, metric)
            path = out / f"curve_{curve.sp}_{metric}.png"
            fig.savefig(path, dpi=100)
            _close(fig)
            written.append(path)
    if sp_sizes:
        fig = plot_sp_sizes(sp_sizes)
        path = out / "sp_sizes.png"
        fig.savefig(path, dpi=100)
        _close(fig)
        written.append(path)
    return written


def _close(fig) -> None:
    import matplotlib.pyplot as plt

    plt.close(fig)


# ---------------------------------------------------------------------------
# report over a results directory
# ---------------------------------------------------------------------------

def emit_report(
    results_dir: str | Path,
    out_dir: str | Path | None = None,
    metrics: tuple[str, ...] = ("rocauc",),
    plots: bool = False,
) -> list[Path]:
    """Render reports and plots from a completed results directory.

    Pure function of the serialized results: reads identify/sweep/comparison
    documents, writes formatted text, delimited tables, and (optionally)
    figures. Missing optional results are reported as gaps, not errors.
    """
    results = Path(results_dir)
    out = Path(out_dir) if out_dir is not None else results
    out.mkdir(parents=True, exist_ok=True)
    if not (results / "manifest.json").exists():
        raise ArtifactError(f"no manifest.json in {results}; not a completed results directory")

    written: list[Path] = []
    sections: list[str] = []

    identify_path = results / "identify.json"
    identify = IdentifyResult.load(identify_path) if identify_path.exists() else None
    if identify is not None:
        sections.append(render_identify(identify))
    else:
        sections.append("== under-performing subpopulation scan ==\n(not run)\n")

    sweep_path = results / "sweep_result.json"
    sweep = SweepResult.load(sweep_path) if sweep_path.exists() else None
    if sweep is not None:
        sections.append(render_sweep_report(sweep))
        curves_out = out / "curves.csv"
        curves_out.write_text(curves_csv_text(build_curves(sweep)))
        written.append(curves_out)
        if plots:
            written.extend(
                save_plots(sweep, out / "plots", metrics, sp_sizes=sweep.sp_train_sizes)
            )
    elif identify is not None and not identify.flagged:
        sections.append(f"== augmentation sweep ==\nskipped: {NO_TARGETS_MESSAGE}\n")
    else:
        sections.append("== augmentation sweep ==\n(not run)\n")

    comparison_path = results / "comparison.json"
    if comparison_path.exists():
        table = ComparisonTable.load(comparison_path)
        rendered = render_comparison_table(table)
        sections.append("== baseline comparison ==\n" + rendered)
        txt = out / "comparison.txt"
        txt.write_text(rendered)
        written.append(txt)
        csv_path = out / "comparison.csv"
        csv_path.write_text(comparison_to_csv(table))
        written.append(csv_path)
    else:
        sections.append("== baseline comparison ==\n(not run)\n")

    report_path = out / "report.txt"
    report_path.write_text("\n".join(sections))
    written.append(report_path)
    return written
