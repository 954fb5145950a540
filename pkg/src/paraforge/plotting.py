"""Figure rendering for the report-producing stages.

Every plot goes straight to a file (Agg backend); the delimited data the
figure was drawn from is always written alongside it by the caller.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_loss_curves(history: list[dict], path, title: str = "training loss") -> None:
    """Per-component loss curves from train_umt-style history rows."""
    fig, ax = plt.subplots(figsize=(6, 4))
    steps = [row["step"] for row in history]
    for key in ("dae", "bt", "adv", "disc", "total"):
        if history and key in history[0]:
            ax.plot(steps, [row[key] for row in history], label=key, linewidth=1)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_scalar_curve(values: list[float], path, ylabel: str = "loss",
                      title: str = "training loss") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(values)), values, linewidth=1)
    ax.set_xlabel("step")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_score_bars(labels: list[str], values: list[float], path,
                    ylabel: str = "iBLEU", title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(values)), values)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_score_distribution(scores: dict[str, list[float]], path,
                            title: str = "per-sentence scores") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    names = list(scores)
    ax.boxplot([scores[n] for n in names], labels=names)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
