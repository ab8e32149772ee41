"""Command line entry points for the experiment harness and live service."""

import sys
from pathlib import Path

import click

from .harness import ExperimentConfig, run_experiment, summarize_dir, theta_sweep


@click.group()
def main():
    """Interactive-learning experiment lab."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--workers", default=1, show_default=True)
@click.option("--resume/--no-resume", default=True, show_default=True)
def run(config_path, workers, resume):
    """Run the experiment matrix described by a TOML/JSON config."""
    cfg = ExperimentConfig.from_file(config_path)
    done, failed = run_experiment(cfg, workers=workers, resume=resume, log=click.echo)
    summarize_dir(cfg.output_dir)
    click.echo(f"completed={done} failed={failed}; summary at {cfg.output_dir}/summary.csv")
    sys.exit(0 if failed == 0 else 1)


@main.command()
@click.option("--input", "input_dir", required=True, type=click.Path(exists=True))
def summarize(input_dir):
    """Aggregate persisted records into summary.csv and print the table."""
    table = summarize_dir(input_dir)
    for row in table:
        click.echo(
            f"{row['dataset']:<16} {row['strategy']:<8} "
            f"F1={row['mean_f1']:.3f}±{row['std_f1']:.3f} NB={row['mean_nb']:+.3f}"
            + ("  *F1" if row["best_f1"] else "")
            + ("  *NB" if row["best_nb"] else "")
        )
    sys.exit(0)


@main.command("sweep-theta")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--thetas", default="1,10,100", show_default=True)
@click.option("--workers", default=1, show_default=True)
def sweep_theta(config_path, thetas, workers):
    """Run the xgl arm across supervisor attention values."""
    cfg = ExperimentConfig.from_file(config_path)
    values = [float(t) for t in thetas.split(",") if t]
    results, failures = theta_sweep(cfg, values, workers=workers, log=click.echo)
    for theta, table in results.items():
        for row in table:
            click.echo(
                f"theta={theta:g} {row['dataset']:<16} F1={row['mean_f1']:.3f} NB={row['mean_nb']:+.3f}"
            )
    sys.exit(0 if failures == 0 else 1)


@main.command()
@click.option("--trials", default=200, show_default=True)
@click.option("--class", "klass", default="threshold", show_default=True,
              type=click.Choice(["threshold", "depth2-trees"]))
@click.option("--size", default=32, show_default=True)
@click.option("--delta", default=0.1, show_default=True)
@click.option("--eta", default=0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="teaching.csv", show_default=True)
def teach(trials, klass, size, delta, eta, seed, out):
    """Monte-Carlo teaching-oracle trials with bound checks."""
    from .teaching import depth2_threshold_trees, run_trials, threshold_class, write_trials_csv

    fc = threshold_class(size) if klass == "threshold" else depth2_threshold_trees(size)
    rows = run_trials(fc, n_trials=trials, delta=delta, eta=eta, seed=seed)
    write_trials_csv(rows, out)
    success = sum(r["succeeded"] for r in rows) / len(rows)
    bound_ok = all(r["bound_ok"] for r in rows if r["succeeded"])
    click.echo(
        f"trials={trials} success_rate={success:.3f} doubling_bounds_ok={bound_ok} -> {out}"
    )
    sys.exit(0 if bound_ok else 1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--data-dir", default=None, type=click.Path())
@click.option("--snapshot-dir", default="sessions", show_default=True, type=click.Path())
def serve(host, port, data_dir, snapshot_dir):
    """Start the live annotation session service."""
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=data_dir, snapshot_dir=Path(snapshot_dir))
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
