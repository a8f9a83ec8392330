"""
latproph 命令行入口

流程：features / synth -> split -> tune / train -> evaluate / predict / bench / importance / stepwise。
给定 --seed 时写出的文件完全固定（时间戳取 SOURCE_DATE_EPOCH，耗时字段记为 not-measured）。
"""

import sys
from pathlib import Path
from typing import Any

import click
import pandas as pd
import typer
import yaml
from rich.console import Console
from rich.table import Table
from typer.main import get_command

from src.config import config
from src.dataset import load_measurements, load_split, make_split, save_split
from src.evaluation.bench import bench_latency
from src.evaluation.predictor import load_predictor, save_predictor
from src.evaluation.report import NOT_MEASURED, evaluate, export_scatter
from src.exceptions import ConfigError, LatprophError, PreconditionError
from src.features.extract import features_table, graph_features, rank_features
from src.graph.model_graph import load_model
from src.models import MODEL_KINDS, PredictorFactory, feature_importance, stepwise_select
from src.synthetic import CorpusConfig, default_profiles, default_styles, load_profiles, write_corpus
from src.tuning import DEFAULT_GRIDS, grid_search, load_grid, train_predictor
from src.utils import logger
from src.utils.logging_config import LOG_FILE

app = typer.Typer(
    name="latproph",
    help="CNN inference latency prediction toolkit",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)
console = Console()
err_console = Console(stderr=True)


def _seed(seed: int | None) -> tuple[int, bool]:
    """返回 (实际种子, 是否固定输出)"""
    return (config.seed, False) if seed is None else (seed, True)


def _write_csv(frame: pd.DataFrame, out: Path | None):
    text = frame.to_csv(index=False, lineterminator="\n")
    if out is None:
        typer.echo(text, nl=False)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8", newline="\n")
    err_console.print(f"Wrote {len(frame)} rows to {out}")


def _parse_params(pairs: list[str] | None) -> dict[str, Any]:
    """key=value 形式的超参数，value 按 YAML 标量/列表解析"""
    params: dict[str, Any] = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"Hyperparameter must look like key=value, got '{pair}'")
        try:
            params[key.strip()] = yaml.safe_load(value)
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse value of '{key}': {e}") from None
    return params


def _train_rows(data: Path, split: Path | None):
    ds = load_measurements(data)
    if split is None:
        rows = list(range(len(ds)))
    else:
        rows = list(load_split(split).train)
    return ds, ds.feature_matrix(rows), ds.targets(rows)


# =============================================================================
# === 特征与数据 ===
# =============================================================================


@app.command()
def features(
    graphs: list[Path] = typer.Argument(..., help="Model description files (.cnn.yaml)."),
    input_size: list[int] = typer.Option([224], "--input-size", "-s", help="Input resolution; repeat for several."),
    channels: int = typer.Option(3, help="Input channels."),
    out: Path | None = typer.Option(None, "--out", "-o", help="Output CSV; stdout when omitted."),
):
    """Extract the 11 features and the FLOP breakdown for every (graph, input size)."""
    frame = features_table([load_model(path) for path in graphs], input_size, channels)
    _write_csv(frame, out)


@app.command()
def synth(
    out: Path = typer.Option(..., "--out", "-o", help="Output directory for graphs and measurement CSVs."),
    seed: int | None = typer.Option(None, help="Seed for architectures and latency noise."),
    profiles: Path | None = typer.Option(None, help="Device profile TOML; built-in profiles when omitted."),
    replicates: int = typer.Option(1, help="Synthetic measurements averaged per record."),
):
    """Generate the synthetic corpus: reference and random CNNs measured on device profiles."""
    seed, _ = _seed(seed)
    cfg = CorpusConfig(seed=seed, styles=default_styles(seed), replicates=replicates)
    device_profiles = load_profiles(profiles) if profiles else default_profiles()
    outputs = write_corpus(cfg, device_profiles, out)
    for name, path in outputs.items():
        console.print(f"{name}: {path}")


@app.command()
def split(
    data: Path = typer.Option(..., "--data", "-d", help="Measurement CSV."),
    out: Path = typer.Option(..., "--out", "-o", help="Split plan JSON."),
    train_ratio: float | None = typer.Option(None, help="Training fraction (default 0.7)."),
    seed: int | None = typer.Option(None, help="Split seed."),
):
    """Split a dataset into training rows and the NIS / NCV / NCA test spaces."""
    seed, _ = _seed(seed)
    ds = load_measurements(data)
    plan = make_split(ds, config.train_ratio if train_ratio is None else train_ratio, seed)
    save_split(plan, out)
    console.print(
        f"train {len(plan.train)} | NIS {len(plan.test_nis)} | NCV {len(plan.test_ncv)} | NCA {len(plan.test_nca)}"
    )


# =============================================================================
# === 训练与调参 ===
# =============================================================================


@app.command()
def tune(
    model: str = typer.Option(..., "--model", "-m", help=f"Model kind: {', '.join(MODEL_KINDS)}."),
    data: Path = typer.Option(..., "--data", "-d", help="Measurement CSV."),
    out: Path = typer.Option(..., "--out", "-o", help="Predictor container for the winning configuration."),
    split: Path | None = typer.Option(None, help="Split plan; only its training rows are used."),
    grid: Path | None = typer.Option(None, help="Grid TOML; the built-in grid when omitted."),
    report: Path | None = typer.Option(None, help="CV report CSV (default: <out>.cv.csv)."),
    k: int | None = typer.Option(None, "--k", help="Number of folds (default 5)."),
    jobs: int | None = typer.Option(None, help="Parallel configurations."),
    seed: int | None = typer.Option(None, help="Fold and model seed."),
    device: str | None = typer.Option(None, help="Device tag stored in the predictor."),
):
    """Grid search with K-fold cross validation, then refit the best configuration."""
    seed, pinned = _seed(seed)
    if grid is not None:
        g = load_grid(grid)
        if g.model_kind != model:
            raise ConfigError(f"Grid file is for '{g.model_kind}' but --model is '{model}'")
    elif model in DEFAULT_GRIDS:
        g = DEFAULT_GRIDS[model]
    else:
        raise ConfigError(f"Unknown model kind '{model}', expected one of {list(MODEL_KINDS)}")

    ds, X, y = _train_rows(data, split)
    predictor, cv = grid_search(
        g, X, y, k=k, seed=seed, jobs=jobs, device=device or ds.device, pinned=pinned, progress=sys.stderr.isatty()
    )
    save_predictor(predictor, out)
    report = report or out.with_suffix(".cv.csv")
    _write_csv(cv.to_frame(), report)
    console.print(f"best config {cv.best_index}: {cv.best_config} (CV MAPE {cv.best.mean_mape:.3f}%)")


@app.command()
def train(
    model: str = typer.Option(..., "--model", "-m", help=f"Model kind: {', '.join(MODEL_KINDS)}."),
    data: Path = typer.Option(..., "--data", "-d", help="Measurement CSV."),
    out: Path = typer.Option(..., "--out", "-o", help="Predictor container."),
    split: Path | None = typer.Option(None, help="Split plan; all rows are used when omitted."),
    param: list[str] | None = typer.Option(None, "--param", "-p", help="Hyperparameter key=value; repeatable."),
    seed: int | None = typer.Option(None, help="Model seed."),
    device: str | None = typer.Option(None, help="Device tag stored in the predictor."),
):
    """Train one predictor with a fixed configuration."""
    seed, pinned = _seed(seed)
    PredictorFactory.model_class(model)
    ds, X, y = _train_rows(data, split)
    predictor = train_predictor(model, _parse_params(param), X, y, seed=seed, device=device or ds.device, pinned=pinned)
    save_predictor(predictor, out)


# =============================================================================
# === 评估与使用 ===
# =============================================================================


@app.command(name="evaluate")
def evaluate_cmd(
    model: Path = typer.Option(..., "--model", "-m", help="Predictor container."),
    data: Path = typer.Option(..., "--data", "-d", help="Measurement CSV the split was made from."),
    split: Path = typer.Option(..., help="Split plan."),
    out: Path | None = typer.Option(None, "--out", "-o", help="EvalReport CSV; stdout when omitted."),
    scatter: Path | None = typer.Option(None, help="Predicted-vs-measured CSV for plotting."),
    bench_reps: int | None = typer.Option(None, help="Also benchmark prediction latency with this many reps."),
):
    """Report MAPE, its 95% CI and adjusted R² on the three test spaces."""
    predictor = load_predictor(model)
    ds, plan = load_measurements(data), load_split(split)
    result = evaluate(predictor, ds, plan, bench_reps)
    err_console.print(result.render(), markup=False, highlight=False)
    _write_csv(result.to_frame(), out)
    if scatter is not None:
        export_scatter(predictor, ds, plan, scatter)


@app.command()
def predict(
    model: Path = typer.Option(..., "--model", "-m", help="Predictor container."),
    graph: Path = typer.Option(..., "--graph", "-g", help="Model description file."),
    input_size: int = typer.Option(..., "--input-size", "-s", help="Input resolution."),
    channels: int = typer.Option(3, help="Input channels."),
):
    """Predict the inference latency (ms) of one graph at one input size."""
    predictor = load_predictor(model)
    fv, _ = graph_features(load_model(graph), input_size, channels)
    typer.echo(repr(predictor.predict_features(fv)))


@app.command()
def bench(
    model: Path = typer.Option(..., "--model", "-m", help="Predictor container."),
    data: Path = typer.Option(..., "--data", "-d", help="Measurement CSV supplying feature rows."),
    rows: int = typer.Option(100, help="Number of leading rows to time."),
    reps: int | None = typer.Option(None, help="Repetitions per row (>= 100)."),
):
    """Time single-row prediction on this host."""
    predictor = load_predictor(model)
    ds = load_measurements(data)
    if rows < 1:
        raise PreconditionError(f"--rows must be >= 1, got {rows}")
    stats = bench_latency(predictor, ds.feature_matrix(range(min(rows, len(ds)))), reps or config.bench_reps)

    table = Table(title=f"{predictor.kind} prediction latency")
    for column in ("host", "calls", "mean ns", "p50 ns", "p99 ns"):
        table.add_column(column)
    table.add_row(stats.host, str(stats.calls), f"{stats.mean_ns:.0f}", f"{stats.p50_ns:.0f}", f"{stats.p99_ns:.0f}")
    console.print(table)


@app.command()
def importance(
    model: Path = typer.Option(..., "--model", "-m", help="GBT or RF predictor container."),
    out: Path | None = typer.Option(None, "--out", "-o", help="F-score CSV; stdout when omitted."),
):
    """F-score (split count) of every feature, highest first."""
    predictor = load_predictor(model)
    if predictor.kind not in ("gbt", "rf"):
        raise PreconditionError(f"Feature importance needs a gbt or rf predictor, got '{predictor.kind}'")
    scores = feature_importance(predictor.model)
    order = rank_features(scores)
    _write_csv(pd.DataFrame({"feature": order, "f_score": [scores[name] for name in order]}), out)


@app.command()
def stepwise(
    model: Path = typer.Option(..., "--model", "-m", help="GBT predictor whose F-scores set the feature order."),
    data: Path = typer.Option(..., "--data", "-d", help="Measurement CSV."),
    split: Path | None = typer.Option(None, help="Split plan; only training rows are used."),
    stop_delta: float | None = typer.Option(None, help="Minimum adjusted R² gain to keep a feature."),
    out: Path | None = typer.Option(None, "--out", "-o", help="Stepwise table CSV; stdout when omitted."),
):
    """Add features in F-score order and record adjusted R² after each step."""
    predictor = load_predictor(model)
    if predictor.kind not in ("gbt", "rf"):
        raise PreconditionError(f"Stepwise ordering needs a gbt or rf predictor, got '{predictor.kind}'")
    order = rank_features(feature_importance(predictor.model))
    _, X, y = _train_rows(data, split)
    _, result = stepwise_select(X, y, order, config.stop_delta if stop_delta is None else stop_delta)
    rows = [{key: NOT_MEASURED if value is None else value for key, value in row.items()} for row in result.as_rows()]
    frame = pd.DataFrame(rows)
    _write_csv(frame, out)
    err_console.print(f"kept {result.chosen_k} features: {', '.join(result.selected_features)}")


# =============================================================================
# === 入口 ===
# =============================================================================


def run(argv: list[str] | None = None) -> int:
    """执行命令并返回退出码：0 成功，1 用户错误，2 内部错误"""
    args = list(sys.argv[1:] if argv is None else argv)
    command = get_command(app)
    try:
        rv = command.main(args, prog_name="latproph", standalone_mode=False)
    except click.UsageError as e:
        err_console.print(f"error: {e.format_message()}", markup=False, highlight=False)
        if e.ctx is not None:
            err_console.print(e.ctx.get_usage(), markup=False, highlight=False)
        return 1
    except click.ClickException as e:
        err_console.print(f"error: {e.format_message()}", markup=False, highlight=False)
        return 1
    except click.exceptions.Abort:
        err_console.print("aborted")
        return 1
    except LatprophError as e:
        logger.debug(f"{type(e).__name__}: {e}")
        err_console.print(f"error: {e}", markup=False, highlight=False)
        err_console.print(command.get_usage(click.Context(command, info_name="latproph")), markup=False)
        return 1
    except Exception as e:  # noqa: BLE001
        logger.exception(f"Internal error: {e}")
        err_console.print(
            f"internal error: {type(e).__name__}: {e}\nplease report it with the log file {LOG_FILE}",
            markup=False,
            highlight=False,
        )
        return 2
    return rv if isinstance(rv, int) else 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
