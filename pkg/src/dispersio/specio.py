"""Reading and writing system descriptions as JSON documents.

The on-disk format mirrors SystemSpec: "dimension", "components", a d x d
array "A" of N x N complex matrices for the quadratic coefficients, a
length-d array "B" of first-order direction coefficients (each a constant
matrix plus optional polynomial "u_terms"), an optional "C" of the same
shape for conjugate couplings, and grid metadata.  Complex entries are
written as [re, im] pairs; bare numbers are accepted as reals.  Errors
carry a JSON pointer ("/B/0/const/1/0") to the offending entry.
"""

import json
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .symbols import (FirstOrderSymbol, MonomialTerm, QuadraticSymbol,
                      SystemSpec)


class SpecFormatError(ValueError):
    """Malformed system document; message carries a JSON pointer."""

    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


def _complex_entry(v, ptr):
    if isinstance(v, (int, float)):
        return complex(v)
    if (isinstance(v, list) and len(v) == 2
            and all(isinstance(x, (int, float)) for x in v)):
        return complex(v[0], v[1])
    raise SpecFormatError(ptr, "expected a number or an [re, im] pair")


def _matrix(v, n, ptr):
    if not isinstance(v, list) or len(v) != n:
        raise SpecFormatError(ptr, f"expected {n} matrix rows")
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(v):
        if not isinstance(row, list) or len(row) != n:
            raise SpecFormatError(f"{ptr}/{i}", f"expected {n} entries")
        for j, e in enumerate(row):
            out[i, j] = _complex_entry(e, f"{ptr}/{i}/{j}")
    return out


def _require(doc, key, ptr):
    if key not in doc:
        raise SpecFormatError(f"{ptr}/{key}", "missing required key")
    return doc[key]


def _first_order(doc, d, n, ptr):
    if not isinstance(doc, list) or len(doc) != d:
        raise SpecFormatError(ptr, f"expected {d} direction entries")
    const = np.zeros((d, n, n), dtype=complex)
    terms = []
    for j, entry in enumerate(doc):
        ptr_j = f"{ptr}/{j}"
        if not isinstance(entry, dict):
            raise SpecFormatError(ptr_j, "expected an object with 'const'")
        const[j] = _matrix(_require(entry, "const", ptr_j), n, f"{ptr_j}/const")
        tj = []
        for k, term in enumerate(entry.get("u_terms", [])):
            ptr_t = f"{ptr_j}/u_terms/{k}"
            mono = _require(term, "monomial", ptr_t)
            if (not isinstance(mono, list) or len(mono) != 2 * n
                    or not all(isinstance(e, int) and e >= 0 for e in mono)):
                raise SpecFormatError(
                    f"{ptr_t}/monomial",
                    f"expected {2 * n} nonnegative integer exponents "
                    "(alternating real/imaginary parts per component)")
            coeff = _matrix(_require(term, "coeff", ptr_t), n, f"{ptr_t}/coeff")
            tj.append(MonomialTerm(tuple(mono), coeff))
        terms.append(tuple(tj))
    return FirstOrderSymbol(d, const, tuple(terms))


@dataclass(frozen=True)
class OdePair:
    """Two constant matrices whose sum drives a frequency-free ODE."""

    a: np.ndarray
    b: np.ndarray
    name: str = ""


def parse_document(doc, name=""):
    """Build a SystemSpec (or OdePair) from a decoded JSON document."""
    if not isinstance(doc, dict):
        raise SpecFormatError("", "top level must be an object")
    name = doc.get("name", name)

    if doc.get("kind") == "ode_pair":
        n = _require(doc, "components", "")
        a = _matrix(_require(doc, "A", ""), n, "/A")
        b = _matrix(_require(doc, "B", ""), n, "/B")
        return OdePair(a, b, name=name)

    d = _require(doc, "dimension", "")
    n = _require(doc, "components", "")
    if not isinstance(d, int) or d < 1:
        raise SpecFormatError("/dimension", "expected a positive integer")
    if not isinstance(n, int) or n < 1:
        raise SpecFormatError("/components", "expected a positive integer")

    a_doc = _require(doc, "A", "")
    if not isinstance(a_doc, list) or len(a_doc) != d:
        raise SpecFormatError("/A", f"expected {d} rows of direction pairs")
    coeffs = np.zeros((d, d, n, n), dtype=complex)
    for j, row in enumerate(a_doc):
        if not isinstance(row, list) or len(row) != d:
            raise SpecFormatError(f"/A/{j}", f"expected {d} entries")
        for k, m in enumerate(row):
            coeffs[j, k] = _matrix(m, n, f"/A/{j}/{k}")

    coupling = _first_order(_require(doc, "B", ""), d, n, "/B")
    conj = None
    if "C" in doc:
        conj = _first_order(doc["C"], d, n, "/C")

    try:
        return SystemSpec(
            dispersion=QuadraticSymbol(d, coeffs),
            coupling=coupling,
            conjugate_coupling=conj,
            period=float(doc.get("period", 2.0 * np.pi)),
            grid_points=int(doc.get("grid_points", 128)),
            sobolev_index=float(doc.get("sobolev_s", 2.5)),
            initial_data=doc.get("initial_data"),
            name=name,
        )
    except ValueError as exc:
        raise SpecFormatError("", str(exc)) from exc


def load_system(path):
    """Load a system document from a JSON file path."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecFormatError("", f"invalid JSON: {exc}") from exc
    stem = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_document(doc, name=stem)


def _fmt_complex(z):
    if z.imag == 0.0:
        return z.real if z.real != int(z.real) else int(z.real)
    return [z.real, z.imag]


def _fmt_matrix(m):
    return [[_fmt_complex(complex(e)) for e in row] for row in np.asarray(m)]


def system_document(spec):
    """SystemSpec as a plain JSON-ready dict (inverse of parse_document)."""
    if isinstance(spec, OdePair):
        return {"kind": "ode_pair", "name": spec.name,
                "components": int(spec.a.shape[0]),
                "A": _fmt_matrix(spec.a), "B": _fmt_matrix(spec.b)}
    d, n = spec.dim, spec.ncomp
    doc = {
        "name": spec.name,
        "dimension": d,
        "components": n,
        "A": [[_fmt_matrix(spec.dispersion.coeffs[j, k]) for k in range(d)]
              for j in range(d)],
        "B": [],
        "period": spec.period,
        "grid_points": spec.grid_points,
        "sobolev_s": spec.sobolev_index,
    }
    for j in range(d):
        entry = {"const": _fmt_matrix(spec.coupling.const[j])}
        if spec.coupling.terms[j]:
            entry["u_terms"] = [
                {"monomial": list(t.exponents), "coeff": _fmt_matrix(t.coeff)}
                for t in spec.coupling.terms[j]]
        doc["B"].append(entry)
    if spec.conjugate_coupling is not None:
        doc["C"] = []
        for j in range(d):
            entry = {"const": _fmt_matrix(spec.conjugate_coupling.const[j])}
            if spec.conjugate_coupling.terms[j]:
                entry["u_terms"] = [
                    {"monomial": list(t.exponents),
                     "coeff": _fmt_matrix(t.coeff)}
                    for t in spec.conjugate_coupling.terms[j]]
            doc["C"].append(entry)
    if spec.initial_data is not None:
        doc["initial_data"] = spec.initial_data
    return doc


def dump_system(spec, path):
    """Write a SystemSpec back out as JSON (inverse of load_system)."""
    with open(path, "w") as fh:
        json.dump(system_document(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def bundled_names():
    root = resources.files("dispersio") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name):
    """Load one of the systems shipped with the package by bare name."""
    root = resources.files("dispersio") / "data"
    path = root / f"{name}.json"
    if not path.is_file():
        raise FileNotFoundError(
            f"no bundled system {name!r}; available: {', '.join(bundled_names())}")
    doc = json.loads(path.read_text())
    return parse_document(doc, name=name)


def resolve(name_or_path):
    """Interpret a CLI argument as a file path or a bundled system name."""
    if os.path.exists(name_or_path):
        return load_system(name_or_path)
    return load_bundled(name_or_path)
