"""Render BER/PAPR comparison figures from crosspilot sweep CSVs.

Consumes only the versioned CSV wire format (``crosspilot-results v1``):
a ``#``-prefixed metadata line, a header row, and one data row per sweep
point.  No simulation logic lives here.

Figure kinds (numeric codes and descriptive aliases):

* ``3a`` / ``ber-vs-snr``:  BER against SNR, log BER axis.
* ``3b`` / ``ber-vs-pdr``:  BER against PDR, log BER axis.
* ``3c`` / ``papr-vs-ber``: the PAPR/BER trade-off, one (PAPR, BER) curve
  per scheme, log BER axis.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

SCHEMA_VERSION = "crosspilot-results v1"
REQUIRED_COLUMNS = ("sweep_value", "ber_proposed", "ber_baseline",
                    "papr_mean_db", "papr_mean_db_baseline", "frames")

KIND_ALIASES = {
    "3a": "3a", "ber-vs-snr": "3a",
    "3b": "3b", "ber-vs-pdr": "3b",
    "3c": "3c", "papr-vs-ber": "3c",
}
X_LABELS = {"3a": "SNR (dB)", "3b": "PDR (dB)"}


class SchemaError(ValueError):
    """The CSV does not carry the supported results schema."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    kind: str          # 3a | 3b | 3c (aliases accepted)
    output_path: str

    def resolved_kind(self) -> str:
        try:
            return KIND_ALIASES[self.kind]
        except KeyError:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one "
                             f"of {sorted(KIND_ALIASES)}") from None


def parse_results(text: str, source: str = "<csv>") -> tuple[dict, list[dict]]:
    """Parse a results CSV into (metadata, rows); strict about the schema."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SchemaError(f"{source}: missing the schema metadata line")
    header = lines[0].lstrip("#").strip()
    if not header.startswith(SCHEMA_VERSION):
        raise SchemaError(
            f"{source}: unsupported schema {header.split(' kind=')[0]!r}; "
            f"this tool reads {SCHEMA_VERSION!r}")
    meta = {}
    for token in header[len(SCHEMA_VERSION):].split():
        if "=" in token:
            key, value = token.split("=", 1)
            meta[key] = value

    reader = csv.DictReader(io.StringIO("\n".join(lines[1:])))
    missing = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise SchemaError(f"{source}: missing columns {missing}")
    rows = []
    for record in reader:
        rows.append({key: float(value) for key, value in record.items()})
    if not rows:
        raise SchemaError(f"{source}: no data rows")
    return meta, rows


def load_results(path: str) -> tuple[dict, list[dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_results(fh.read(), source=path)


def ber_floor(meta: dict, rows: list[dict]) -> float:
    """Positive floor replacing BER = 0 on the log axis.

    1/(frames * bits_per_frame) when the metadata carries the frame size,
    otherwise half the smallest positive BER in the data.
    """
    if "bits_per_frame" in meta:
        frames = min(r["frames"] for r in rows)
        return 1.0 / (frames * float(meta["bits_per_frame"]))
    positives = [r[c] for r in rows for c in ("ber_proposed", "ber_baseline")
                 if r[c] > 0]
    return min(positives) / 2 if positives else 1e-9


def render(spec: FigureSpec):
    """Render one figure and write it to spec.output_path; returns the figure."""
    kind = spec.resolved_kind()
    meta, rows = load_results(spec.input_csv)
    floor = ber_floor(meta, rows)
    clip = lambda b: max(b, floor)  # noqa: E731

    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    if kind in ("3a", "3b"):
        x = [r["sweep_value"] for r in rows]
        ax.semilogy(x, [clip(r["ber_proposed"]) for r in rows],
                    "o-", label="cross pilots")
        ax.semilogy(x, [clip(r["ber_baseline"]) for r in rows],
                    "s--", label="multiple pilots")
        ax.set_xlabel(X_LABELS[kind])
    else:
        ax.semilogy([r["papr_mean_db"] for r in rows],
                    [clip(r["ber_proposed"]) for r in rows],
                    "o-", label="cross pilots")
        ax.semilogy([r["papr_mean_db_baseline"] for r in rows],
                    [clip(r["ber_baseline"]) for r in rows],
                    "s--", label="multiple pilots")
        ax.set_xlabel("mean PAPR (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.set_title(f"{meta.get('kind', kind)} ({int(rows[0]['frames'])} frames/point)",
                 fontsize=9)
    fig.text(0.99, 0.01, f"BER floor {floor:.1e}", ha="right", fontsize=6,
             alpha=0.7)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=150)
    return fig
