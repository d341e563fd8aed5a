"""Deterministic SVG plots of comparison results.

Axes are fixed by the data, element ids are salted with a constant and the
date metadata is dropped, so equal inputs give equal bytes.
"""
from __future__ import annotations

import io
import warnings

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "pdmd", "svg.fonttype": "none", "font.size": 9}


def _to_svg(fig):
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()


def boxplot_svg(reports, rows):
    """Box plot of time-averaged error per method (divergent runs left out,
    their count shown in the tick label)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        data, labels = [], []
        for row in rows:
            vals = [r.mean for r in reports if r.method == row.method and not r.divergent]
            data.append(vals if vals else [np.nan])
            labels.append(row.method if not row.divergent else f"{row.method}\n({row.divergent} div.)")
        ax.boxplot(data, whis=(0, 100))
        ax.set_xticks(range(1, len(labels) + 1), labels)
        ax.set_yscale("log")
        ax.set_ylabel("time-averaged residual error")
        fig.tight_layout()
        return _to_svg(fig)


def series_svg(reports, dt=1.0):
    """Median residual error over the test parameters against time."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for method in dict.fromkeys(r.method for r in reports):
            S = np.array([r.series for r in reports if r.method == method and not r.divergent])
            if S.size == 0:
                continue
            t = dt * np.arange(S.shape[1])
            with warnings.catch_warnings():
                # columns excluded for every parameter stay NaN (a gap)
                warnings.simplefilter("ignore", RuntimeWarning)
                med = np.nanmedian(S, axis=0)
            ax.plot(t, med, label=method)
        ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("median residual error")
        ax.legend()
        fig.tight_layout()
        return _to_svg(fig)
