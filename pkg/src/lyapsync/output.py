"""CSV, manifest, and optional SVG output.

CSV files are RFC-4180 with LF line endings, '.' decimal separator, and 17
significant digits for floats, so reruns under a fixed seed reproduce every
byte.  Each command invocation writes exactly one manifest that references
every file it produced.
"""

import csv
import json
import time

from pathlib import Path

from . import __version__


def format_float(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(cell) for cell in row])
    return path


class Manifest:
    """Run record: written before the first run, finalized after the last."""

    def __init__(self, out_dir, resolved_text, master_seed, workers):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.path = self.out_dir / "manifest.json"
        self.config_path = self.out_dir / "resolved.cfg"
        self.data = {
            "tool_version": __version__,
            "master_seed": int(master_seed),
            "workers": int(workers),
            "created_unix": time.time(),
            "finalized_unix": None,
            "resolved_config": resolved_text,
            "runs": [],
            "files": ["resolved.cfg"],
        }
        self.config_path.write_text(resolved_text, encoding="utf-8")
        self._flush()

    def _flush(self):
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")

    def add_run(self, name, stream_index, files, wall_seconds):
        relative = [str(Path(f).relative_to(self.out_dir)) for f in files]
        self.data["runs"].append({
            "name": name,
            "seed_pair": [self.data["master_seed"], int(stream_index)],
            "files": relative,
            "wall_seconds": wall_seconds,
        })
        self.data["files"].extend(relative)
        self._flush()

    def finalize(self):
        self.data["finalized_unix"] = time.time()
        self._flush()


def plot_series(path, x, series, labels, title, xlabel, ylabel, logy=False):
    """Self-contained SVG line plot next to the matching CSV."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    figure, axes = plt.subplots(figsize=(6.0, 4.0))
    for values, label in zip(series, labels):
        axes.plot(x, values, label=label, linewidth=1.0)
    if logy:
        axes.set_yscale("log")
    axes.set_title(title)
    axes.set_xlabel(xlabel)
    axes.set_ylabel(ylabel)
    if labels and any(labels):
        axes.legend(loc="best", fontsize=8)
    figure.tight_layout()
    figure.savefig(path, format="svg")
    plt.close(figure)
    return Path(path)
