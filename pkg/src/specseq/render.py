"""Text tables, canonical JSON, and figure rendering.

JSON output is deterministic: keys are emitted in a fixed numeric order
and the byte stream round-trips (parse and re-render is the identity).
Figures are written straight to files through the Agg backend; matplotlib
is imported lazily so that pure computations never pay for it.
"""

from __future__ import annotations

import json

from .abelian import FGModule
from .spectral import AbutmentReport, SpectralPage


def module_label(module: FGModule) -> str:
    parts = []
    ring = module.ring.label
    if module.free_rank == 1:
        parts.append(ring)
    elif module.free_rank > 1:
        parts.append(f"{ring}^{module.free_rank}")
    parts.extend(f"Z/{q}" for q in module.torsion_orders)
    return " + ".join(parts) if parts else "0"


def dumps_canonical(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def page_json_text(page: SpectralPage) -> str:
    return dumps_canonical(page.to_json())


def reparse_page_json(text: str) -> str:
    """Parse a page dump and re-render it with canonical ordering."""
    obj = json.loads(text)

    def bidegree_key(key: str):
        s, q = key.split(",")
        return (-int(s), int(q))

    out = {
        "r": obj["r"],
        "entries": {k: obj["entries"][k] for k in sorted(obj["entries"], key=bidegree_key)},
        "differentials": {
            k: obj["differentials"][k] for k in sorted(obj["differentials"], key=bidegree_key)
        },
    }
    return dumps_canonical(out)


def page_table(page: SpectralPage) -> str:
    """Aligned grid of the nonzero part of a page, q down the side."""
    header = f"page r={page.r} over {page.ring.label} (columns p = 0..{page.max_p})"
    if not page.entries:
        return header + "\n  (empty page)"
    qs = sorted({q for (_, q) in page.entries}, reverse=True)
    cols = list(range(page.max_p + 1))
    cells = {
        (p, q): module_label(page.entry((-p, q))) if (-p, q) in page.entries else "."
        for q in qs
        for p in cols
    }
    widths = [
        max([len(f"p={p}")] + [len(cells[(p, q)]) for q in qs]) for p in cols
    ]
    lines = [header]
    head = "  q\\p |" + "|".join(f" {f'p={p}':<{widths[p]}} " for p in cols)
    lines.append(head)
    lines.append("  " + "-" * (len(head) - 2))
    for q in qs:
        row = f"  q={q:<2} |" + "|".join(f" {cells[(p, q)]:<{widths[p]}} " for p in cols)
        lines.append(row)
    if page.differentials:
        lines.append("  differentials attached at: " + ", ".join(
            f"({s},{q})" for s, q in sorted(page.differentials, key=lambda b: (-b[0], b[1]))
        ))
    return "\n".join(lines)


def abutment_table(report: AbutmentReport) -> str:
    lines = [
        f"abutment over {report.ring.label} "
        f"[{report.extension_status}], degrees 1..{report.max_degree}"
    ]
    for n in range(1, report.max_degree + 1):
        pieces = report.pieces(n)
        if pieces:
            body = "  ".join(f"[p={p}] {module_label(m)}" for p, m in pieces)
        else:
            body = "0"
        lines.append(f"  n={n}: {body}")
    return "\n".join(lines)


def collapse_table(table: dict[int, int]) -> str:
    return "\n".join(f"n={n}: dim {table[n]}" for n in sorted(table))


def collapse_json(table: dict[int, int]) -> dict:
    return {str(n): table[n] for n in sorted(table)}


def _agg_pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def page_figure(page: SpectralPage, path: str) -> None:
    """Draw the page as a labeled second-quadrant grid and save it."""
    plt = _agg_pyplot()
    qs = sorted({q for (_, q) in page.entries}) or [1]
    fig, ax = plt.subplots(figsize=(1.9 * (page.max_p + 1) + 1.2, 0.55 * (qs[-1] + 2) + 1.0))
    for (s, q), module in page.entries.items():
        ax.text(s, q, module_label(module), ha="center", va="center", fontsize=9,
                bbox=dict(boxstyle="round,pad=0.25", fc="#eef2fb", ec="#5577aa", lw=0.7))
    r = page.r
    for (s, q) in page.differentials:
        ax.annotate("", xy=(s - r + 0.28, q + r - 1), xytext=(s - 0.28, q),
                    arrowprops=dict(arrowstyle="->", color="#aa3333", lw=1.1))
    ax.set_xlim(-page.max_p - 0.7, 0.7)
    ax.set_ylim(0.2, qs[-1] + 0.8)
    ax.set_xticks(range(-page.max_p, 1))
    ax.set_yticks(range(1, qs[-1] + 1))
    ax.set_xlabel("-p")
    ax.set_ylabel("q")
    ax.set_title(f"page r={page.r} over {page.ring.label}")
    ax.grid(True, alpha=0.25, linestyle=":")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def abutment_figure(report: AbutmentReport, path: str) -> None:
    """Bar chart of the free rank per total degree, torsion annotated."""
    plt = _agg_pyplot()
    degrees = list(range(1, report.max_degree + 1))
    ranks = [report.total_rank(n) for n in degrees]
    torsion = ["+".join(f"Z/{q}" for _, m in report.pieces(n) for q in m.torsion_orders)
               for n in degrees]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(degrees) + 1.5), 3.4))
    ax.bar(degrees, ranks, color="#5577aa")
    for n, label in zip(degrees, torsion):
        if label:
            ax.text(n, 0.05, label, rotation=90, ha="center", va="bottom", fontsize=8,
                    color="#aa3333")
    ax.set_xticks(degrees)
    ax.set_xlabel("total degree n")
    ax.set_ylabel("free rank")
    ax.set_title(f"abutment over {report.ring.label} [{report.extension_status}]")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def collapse_figure(table: dict[int, int], path: str) -> None:
    plt = _agg_pyplot()
    degrees = sorted(table)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(degrees) + 1.5), 3.2))
    ax.bar(degrees, [table[n] for n in degrees], color="#557755")
    ax.set_xticks(degrees)
    ax.set_xlabel("total degree n")
    ax.set_ylabel("dimension over Q")
    ax.set_title("rational collapse dimensions")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
