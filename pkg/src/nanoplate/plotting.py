"""SVG figures for the CLI reports (matplotlib, Agg backend)."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps the SVG output byte-stable between runs
_SVG_META = {"Date": None, "Creator": None}
matplotlib.rcParams["svg.hashsalt"] = "nanoplate"


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def plot_field(f, Lx, Ly, path, title="", n=81, label=""):
    xs, ys = np.linspace(0, Lx, n), np.linspace(0, Ly, n)
    X, Y = np.meshgrid(xs, ys)
    Z = f(X, Y)
    fig, ax = plt.subplots(figsize=(4.8, 4.0))
    cs = ax.contourf(X, Y, Z, levels=24, cmap="viridis")
    fig.colorbar(cs, ax=ax, label=label)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    return _save(fig, path)


def plot_sweep(report, path):
    """Log-log plot of reconstruction error against noise level with the fitted line."""
    ok = [r for r in report.records if r["status"] == "ok"]
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.loglog([r["eps"] for r in ok], [r["error"] for r in ok], "o", ms=4, label="cases")
    lv = [v for v in report.levels if v["mean_error"] is not None]
    ax.loglog([v["eps"] for v in lv], [v["mean_error"] for v in lv], "-", label="level mean")
    b, c = report.fit["slope_b"], report.fit["intercept"]
    if np.isfinite(b):
        e = np.array([lv[0]["eps"], lv[-1]["eps"]])
        ax.loglog(e, np.exp(c) * e ** b, "--", label=f"fit b = {b:.3f}")
    ax.set_xlabel("noise level eps")
    ax.set_ylabel("relative kappa error")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)
