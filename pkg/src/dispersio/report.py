"""Delimited reports, canonical JSON, and figure rendering.

Output is byte-deterministic: floats are written with repr (shortest
round-trip form, '.' decimal separator), JSON keys are sorted, lines end
with '\n', and no timestamps or machine identifiers appear anywhere.
Every report embeds the sha256 of the canonical system document plus the
full flag set that produced it, so a report can be traced back to its
inputs.  Figures are a convenience rendering of the same data and carry
no extra information.
"""

import hashlib
import json

from .specio import system_document


def fmt_float(x):
    """Shortest round-trip decimal form of a float (nan/inf spelled out)."""
    return repr(float(x))


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def system_hash(spec):
    """sha256 hex digest of the canonical system document."""
    text = json.dumps(system_document(spec), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def report_header(spec, flags):
    return {"system_sha256": system_hash(spec),
            "system_name": spec.name, "flags": flags}


def write_scan_csv(report, dim, path, spec=None, flags=None):
    """Scan records as CSV; the verdict block follows as '# ' JSON lines."""
    cols = [f"xi_{j + 1}" for j in range(dim)]
    cols += ["t", "op_norm", "max_re_spec", "cond_eigvec"]
    lines = [",".join(cols)]
    for r in report.records:
        row = [fmt_float(c) for c in r.xi]
        row += [fmt_float(r.t), fmt_float(r.op_norm),
                fmt_float(r.max_re_spec), fmt_float(r.cond_eigvec)]
        lines.append(",".join(row))
    block = report.verdict_block()
    if spec is not None:
        block = dict(block, **report_header(spec, flags or {}))
    lines.append("# " + json.dumps(block, sort_keys=True))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_trace_csv(trace, path, header_block=None):
    """Energy trace as CSV with columns t,l2,hs,sigma_energy,k0,k1."""
    lines = [",".join(trace.COLUMNS)]
    for row in trace.rows():
        lines.append(",".join(fmt_float(v) for v in row))
    if header_block is not None:
        lines.append("# " + json.dumps(header_block, sort_keys=True))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(doc, path):
    with open(path, "w", newline="") as fh:
        fh.write(canonical_json(doc))


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_scan_figure(report, path):
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for t in report.t_values:
        recs = [r for r in report.records if r.t == t and not r.saturated]
        radii = [max(r.radius, 1e-3) for r in recs]
        norms = [r.op_norm for r in recs]
        ax1.loglog(radii, norms, ".", markersize=3, label=f"t = {t:g}")
        ax2.semilogx([max(r.radius, 1e-3) for r in report.records
                      if r.t == t],
                     [r.max_re_spec for r in report.records if r.t == t],
                     ".", markersize=3)
    ax1.set_xlabel("|xi|")
    ax1.set_ylabel("||exp(t M)||")
    ax1.legend(fontsize=8)
    ax2.set_xlabel("|xi|")
    ax2.set_ylabel("max Re spec M")
    fig.suptitle(f"verdict: {report.verdict}")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_trace_figure(trace, path):
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    t = list(trace.t)
    ax1.semilogy(t, trace.l2, label="L2")
    ax1.semilogy(t, trace.hs, label="H^s")
    ax1.set_xlabel("t")
    ax1.legend(fontsize=8)
    ax2.plot(t, trace.sigma_energy, label="Sigma energy")
    ax2.set_xlabel("t")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_paracheck_figure(rep, path):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, entry in rep["defect_slopes"].items():
        ks = sorted(int(k) for k in entry["norms"])
        ys = [max(entry["norms"][k] if k in entry["norms"]
                  else entry["norms"][str(k)], 1e-300) for k in ks]
        ax.semilogy(ks, ys, "o-",
                    label=f"{label}: slope {entry['slope']:.2f}")
    ax.set_xlabel("band k")
    ax.set_ylabel("band operator norm")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
