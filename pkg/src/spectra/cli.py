"""Command-line front end: load datum files, dispatch computations, emit reports.

Commands: ``charpoly``, ``polygon``, ``factor``, ``riesz``, ``eigen``,
``verify``.  Reports are canonical JSON (sorted keys, p-adic scalars rendered
as ``p^v*u (mod p^r)`` strings, slopes as exact fraction strings) so that
identical inputs produce byte-identical output; wall time goes to stderr.
Exit codes: 0 success, 1 computation error (a report with the error payload
is still emitted), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from .eigen import (
    SpectralDatum,
    base_change_piece,
    build_local_piece,
    fiber_eigensystems,
    slope_datum_search,
    validate_datum,
)
from .errors import SpectraError, UnsupportedFormat
from .fredholm import char_series, char_series_subset_oracle
from .newton import newton_polygon, slope_factorization
from .operators import CompactOperatorMatrix, DecayProfile
from .riesz import riesz_from_factorization, slack_threshold
from .rings import AffinoidElement, AffinoidRing, PadicField, PadicScalar, RingHom, parse_scalar

INFTY = float("inf")


class DatumError(SpectraError):
    """A datum file failed schema validation; carries pointer-tagged issues."""

    def __init__(self, issues):
        self.issues = issues
        super().__init__("; ".join(f"{ptr}: {msg}" for ptr, msg in issues))


def _scalar_str(x: PadicScalar) -> str:
    return repr(x)


def _element_payload(x):
    if isinstance(x, PadicScalar):
        return _scalar_str(x)
    return {
        ",".join(str(e) for e in exp): _scalar_str(c)
        for exp, c in sorted(x.coeffs.items())
    }


def _fraction_str(q) -> str:
    if q == INFTY:
        return "inf"
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


# -- datum loading ---------------------------------------------------------------


def _parse_entry(ring, spec, issues, ptr):
    try:
        if isinstance(spec, str):
            scalar = parse_scalar(spec, ring.p, ring.r)
            return ring.coerce(scalar) if isinstance(ring, AffinoidRing) else scalar
        if isinstance(spec, int):
            return ring.from_int(spec)
        if isinstance(ring, AffinoidRing) and isinstance(spec, list):
            nvars = len(ring.variables)
            coeffs = {}
            for k, lit in enumerate(spec):
                exp = (k,) + (0,) * (nvars - 1)
                coeffs[exp] = parse_scalar(str(lit), ring.p, ring.r)
            return AffinoidElement(ring, coeffs)
        if isinstance(ring, AffinoidRing) and isinstance(spec, dict):
            coeffs = {}
            for key, lit in spec.items():
                exp = tuple(int(t) for t in str(key).split(","))
                coeffs[exp] = parse_scalar(str(lit), ring.p, ring.r)
            return AffinoidElement(ring, coeffs)
    except (SpectraError, ValueError) as exc:
        issues.append((ptr, f"bad entry {spec!r}: {exc}"))
        return ring.zero()
    issues.append((ptr, f"unsupported entry form {type(spec).__name__}"))
    return ring.zero()


def _parse_matrix(ring, spec, size, issues, ptr):
    zero = ring.zero()
    out = [[zero for _ in range(size)] for _ in range(size)]
    kind = spec.get("kind", "dense")
    if kind == "dense":
        rows = spec.get("entries", [])
        if len(rows) != size or any(len(r) != size for r in rows):
            issues.append((ptr, f"dense matrix must be {size}x{size}"))
            return out
        for i, row in enumerate(rows):
            for j, cell in enumerate(row):
                out[i][j] = _parse_entry(ring, cell, issues, f"{ptr}/entries/{i}/{j}")
    elif kind == "diagonal":
        diag = spec.get("entries", [])
        if len(diag) != size:
            issues.append((ptr, f"diagonal needs {size} entries"))
            return out
        for i, cell in enumerate(diag):
            out[i][i] = _parse_entry(ring, cell, issues, f"{ptr}/entries/{i}")
    elif kind == "banded":
        for offset, band in spec.get("bands", {}).items():
            k = int(offset)
            for i, cell in enumerate(band):
                j = i + k
                if 0 <= j < size and i < size:
                    out[i][j] = _parse_entry(ring, cell, issues, f"{ptr}/bands/{offset}/{i}")
    else:
        issues.append((ptr, f"unknown matrix kind {kind!r}"))
    return out


def _parse_decay(doc, issues):
    kind = doc.get("kind", "finite")
    try:
        if kind == "finite":
            return DecayProfile.finite()
        if kind == "geometric":
            return DecayProfile.geometric(
                Fraction(str(doc.get("base", 0))), Fraction(str(doc.get("step", 1)))
            )
        if kind == "stepped":
            return DecayProfile.stepped(
                Fraction(str(doc.get("base", 0))),
                Fraction(str(doc.get("step", 1))),
                int(doc.get("length", 1)),
            )
        if kind == "explicit":
            exps = [INFTY if e is None else Fraction(str(e)) for e in doc.get("exponents", [])]
            return DecayProfile.explicit(exps)
    except (SpectraError, ValueError) as exc:
        issues.append(("/module/decay", str(exc)))
        return DecayProfile.finite()
    issues.append(("/module/decay", f"unknown decay kind {kind!r}"))
    return DecayProfile.finite()


def datum_load(path: str) -> SpectralDatum:
    """Load and validate a spectral datum file; raises DatumError on violations."""
    with open(path, "rb") as fh:
        doc = json.load(fh)
    issues = []
    p = int(doc.get("p", 0))
    if p < 2:
        issues.append(("/p", f"prime must be >= 2, got {p}"))
        raise DatumError(issues)
    r = int(doc.get("relative_precision", 20))
    cap = int(doc.get("x_degree_cap", 8))
    base = doc.get("base", {"kind": "field"})
    if base.get("kind") == "affinoid":
        variables = base.get("var", "w")
        if isinstance(variables, str):
            variables = (variables,)
        ring = AffinoidRing(p, r, int(base.get("degree_bound", 8)), tuple(variables))
    else:
        ring = PadicField(p, r)
    module = doc.get("module", {})
    size = int(module.get("size", 0))
    if size < 1:
        issues.append(("/module/size", "module size must be at least 1"))
        raise DatumError(issues)
    decay = _parse_decay(module.get("decay", {"kind": "finite"}), issues)
    phi_entries = _parse_matrix(ring, doc.get("phi", {}), size, issues, "/phi")
    hecke = {}
    for name, spec in doc.get("hecke", {}).items():
        hecke[name] = _parse_matrix(ring, spec, size, issues, f"/hecke/{name}")
    samples = []
    for i, lit in enumerate(doc.get("samples", [])):
        try:
            if isinstance(lit, list):
                samples.append(tuple(parse_scalar(str(t), p, r) for t in lit))
            else:
                samples.append((parse_scalar(str(lit), p, r),))
        except (SpectraError, ValueError) as exc:
            issues.append((f"/samples/{i}", str(exc)))
    if issues:
        raise DatumError(issues)
    phi = CompactOperatorMatrix(ring, phi_entries, decay)
    datum = SpectralDatum(ring, phi, hecke, x_cap=cap, samples=samples)
    report = validate_datum(datum)
    if not report.ok:
        raise DatumError([("/", v) for v in report.violations])
    return datum


def _entry_literal(x) -> "str | dict":
    if isinstance(x, PadicScalar):
        if x.is_zero:
            return "0"
        return f"{x.p}^{x.v}*{x.u}"
    return {
        ",".join(str(e) for e in exp): (f"{c.p}^{c.v}*{c.u}" if not c.is_zero else "0")
        for exp, c in sorted(x.coeffs.items())
    }


def datum_emit(datum: SpectralDatum) -> dict:
    """Serialize a datum back to the file schema (round-trips through datum_load)."""
    ring = datum.ring
    doc = {
        "p": ring.p,
        "relative_precision": ring.r,
        "x_degree_cap": datum.x_cap,
        "module": {"size": datum.phi.size, "decay": datum.phi.decay.describe()},
        "phi": {
            "kind": "dense",
            "entries": [[_entry_literal(x) for x in row] for row in datum.phi.entries],
        },
        "hecke": {
            name: {"kind": "dense", "entries": [[_entry_literal(x) for x in row] for row in mat]}
            for name, mat in datum.hecke.items()
        },
        "samples": [[_entry_literal(x) for x in point] for point in datum.samples],
    }
    if datum.is_affinoid:
        doc["base"] = {
            "kind": "affinoid",
            "var": list(ring.variables),
            "degree_bound": ring.degree_bound,
        }
    else:
        doc["base"] = {"kind": "field"}
    return doc


# -- command payloads --------------------------------------------------------------


def _series_payload(F) -> dict:
    return {
        "coefficients": [_element_payload(c) for c in F.coeffs],
        "cap": F.cap,
        "tail_bound_valuations": (
            None
            if F.tail_valuation is None
            else [_fraction_str(F.tail_valuation(n)) for n in range(F.cap + 1, F.cap + 4)]
        ),
    }


def _cmd_charpoly(datum, args) -> dict:
    d = args.degree or datum.x_cap
    F = char_series(datum.phi, d)
    return {"series": _series_payload(F)}


def _cmd_polygon(datum, args) -> dict:
    F = char_series(datum.phi, args.degree or datum.x_cap)
    poly = newton_polygon(F)
    return {"polygon": poly.export_record()}


def _require_slope(args):
    if args.slope is None:
        raise UnsupportedFormat("--slope is required for this command")
    return Fraction(args.slope)


def _cmd_factor(datum, args) -> dict:
    h = _require_slope(args)
    F = char_series(datum.phi, args.degree or datum.x_cap)
    fact = slope_factorization(F, h)
    return {
        "h": _fraction_str(h),
        "q": [_element_payload(c) for c in fact.q],
        "s": _series_payload(fact.s),
        "bezout_degree_bound": len(fact.bezout[1]),
        "roundtrip_floor": _fraction_str(fact.verify_roundtrip(F)),
    }


def _cmd_riesz(datum, args) -> dict:
    h = _require_slope(args)
    F = char_series(datum.phi, args.degree or datum.x_cap)
    fact = slope_factorization(F, h)
    dec = riesz_from_factorization(datum.phi, F, fact)
    return {
        "h": _fraction_str(h),
        "rank": dec.rank,
        "route": dec.route,
        "char_on_kernel": [_element_payload(c) for c in dec.char_on_n],
        "kernel_basis": [[_element_payload(x) for x in col] for col in dec.kernel_basis],
        "residual_floor": _fraction_str(dec.residual_floor),
    }


def _cmd_eigen(datum, args) -> dict:
    h = _require_slope(args)
    piece = build_local_piece(datum, h)
    points = datum.samples if datum.is_affinoid else [None]
    if args.samples:
        points = []
        for lit in args.samples:
            parts = lit.split(",")
            points.append(
                tuple(parse_scalar(t, datum.ring.p, datum.ring.r) for t in parts)
            )
    fibers = []
    for point in points:
        report = fiber_eigensystems(piece, point)
        fibers.append(
            {
                "point": None if point is None else [_scalar_str(x) for x in point],
                "systems": [rec.to_dict() for rec in report.records],
                "algebra_dimension": report.algebra_dim,
            }
        )
    return {
        "h": _fraction_str(h),
        "rank": piece.rank,
        "algebra_words": ["*".join(w) or "1" for w in piece.algebra_words],
        "nilpotent_detected": piece.nilpotent_detected,
        "structural_map_floor": _fraction_str(piece.structural_map_floor),
        "fibers": fibers,
    }


def _cmd_verify(datum, args) -> dict:
    checks = {}
    report = validate_datum(datum)
    checks["operators_commute"] = report.ok
    checks["compactness_certificate"] = bool(report.compactness)
    d = args.degree or datum.x_cap
    F = char_series(datum.phi, d)
    ok = True
    if F.tail_valuation is not None:
        from .rings import valuation

        for n in range(1, F.cap + 1):
            bound = F.tail_valuation(n)
            v = valuation(F.coeffs[n])
            if not (v >= bound or F.coeffs[n].is_zero):
                ok = False
    checks["tail_bound_on_coefficients"] = ok
    if datum.phi.size <= 6 and d <= 6:
        oracle = char_series_subset_oracle(datum.phi, min(d, datum.phi.size))
        checks["subset_oracle_agreement"] = all(
            (F.coeffs[n] == oracle.coeffs[n]) for n in range(oracle.cap + 1)
        )
    try:
        poly = newton_polygon(F)
        checks["polygon_certified"] = poly.certified_through >= min(
            poly.vertices[-1][0], F.cap - 1
        ) or poly.certified_through == INFTY
    except SpectraError:
        checks["polygon_certified"] = False
    if args.slope is not None:
        h = Fraction(args.slope)
        try:
            fact = slope_factorization(F, h)
            checks["factor_roundtrip"] = fact.verify_roundtrip(F) >= slack_threshold(datum.ring)
            dec = riesz_from_factorization(datum.phi, F, fact)
            checks["riesz_route_agreement"] = dec.route in ("both", "linear-algebra-route")
            checks["kernel_rank_equals_degree"] = dec.rank == fact.n0
            piece = build_local_piece(datum, h)
            points = datum.samples if datum.is_affinoid else [None]
            slope_ok = True
            for point in points:
                rep = fiber_eigensystems(piece, point)
                for rec in rep.records:
                    if rec.slope != INFTY and rec.slope > h:
                        slope_ok = False
                if rep.total_weighted_multiplicity() != piece.rank:
                    slope_ok = False
            checks["eigensystem_slopes_bounded"] = slope_ok
            if datum.is_affinoid and datum.samples:
                search = slope_datum_search(F, h, datum.samples)
                checks["slope_datum_constant_degree"] = search["valid"]
                rigid = True
                for point in datum.samples:
                    hom = RingHom.specialize(datum.ring, point)
                    out = base_change_piece(piece, hom)
                    if not (out["surjective"] and out["nilpotent_kernel"]):
                        rigid = False
                checks["base_change_rigidity"] = rigid
        except SpectraError as exc:
            checks["slope_pipeline"] = f"failed: {exc}"
    return {"checks": {k: checks[k] for k in sorted(checks)}}


_COMMANDS = {
    "charpoly": _cmd_charpoly,
    "polygon": _cmd_polygon,
    "factor": _cmd_factor,
    "riesz": _cmd_riesz,
    "eigen": _cmd_eigen,
    "verify": _cmd_verify,
}


def cmd_run(command: str, datum: SpectralDatum, args) -> dict:
    """Dispatch a command on a loaded datum; returns the report document."""
    payload = _COMMANDS[command](datum, args)
    return {
        "command": command,
        "request": {
            "slope": args.slope,
            "degree": args.degree,
            "samples": args.samples,
            "precision": datum.ring.r if hasattr(datum.ring, "r") else None,
        },
        "payload": payload,
        "slack": {
            "working_precision": datum.ring.r,
            "threshold": slack_threshold(datum.ring),
        },
    }


def report_emit(report: dict, fmt: str = "json") -> bytes:
    """Serialize a report: canonical JSON, or TSV for tabular payloads."""
    if fmt == "json":
        return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode()
    if fmt != "tsv":
        raise UnsupportedFormat(f"unknown format {fmt!r}")
    payload = report.get("payload", {})
    if "polygon" in payload:
        lines = ["slope\tlength\tx_start"]
        for seg in payload["polygon"]["slopes"]:
            lines.append(f"{seg['slope']}\t{seg['length']}\t{seg['x_start']}")
        return ("\n".join(lines) + "\n").encode()
    if "fibers" in payload:
        lines = ["point\tslope\tmultiplicity\tlocal_degree\treduced\tunsplit"]
        for fiber in payload["fibers"]:
            tag = ",".join(fiber["point"]) if fiber["point"] else "-"
            for rec in fiber["systems"]:
                lines.append(
                    f"{tag}\t{rec['slope']}\t{rec['multiplicity']}"
                    f"\t{rec['local_degree']}\t{rec['reduced']}\t{rec['unsplit']}"
                )
        return ("\n".join(lines) + "\n").encode()
    raise UnsupportedFormat("TSV is only available for polygon and eigensystem payloads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectra",
        description="Exact p-adic spectral theory: characteristic series, polygons, "
        "slope factorizations, Riesz decompositions and local eigenalgebras.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("datum", help="path to a spectral datum JSON file")
    parser.add_argument("--slope", help="slope bound h as an exact fraction, e.g. 3/2")
    parser.add_argument("--degree", type=int, help="X-degree cap for the series")
    parser.add_argument("--samples", nargs="*", help="fiber points, comma-separated per point")
    parser.add_argument("--precision", type=int, help="override the relative precision")
    parser.add_argument("--format", choices=("json", "tsv"), default="json")
    parser.add_argument("--out", help="write the report to this path instead of stdout")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    started = time.monotonic()
    try:
        datum = _load_with_precision(args)
    except (DatumError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"spectra: cannot load datum: {exc}\n")
        return 2
    try:
        report = cmd_run(args.command, datum, args)
        code = 0
    except UnsupportedFormat as exc:
        sys.stderr.write(f"spectra: {exc}\n")
        return 2
    except SpectraError as exc:
        report = {
            "command": args.command,
            "error": {"type": type(exc).__name__, "message": str(exc)},
        }
        code = 1
    try:
        blob = report_emit(report, args.format)
    except UnsupportedFormat as exc:
        sys.stderr.write(f"spectra: {exc}\n")
        return 2
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(blob)
    else:
        sys.stdout.buffer.write(blob)
    elapsed_ms = int((time.monotonic() - started) * 1000)
    sys.stderr.write(f"spectra: {args.command} finished in {elapsed_ms} ms\n")
    return code


def _load_with_precision(args) -> SpectralDatum:
    if not args.precision:
        return datum_load(args.datum)
    with open(args.datum) as fh:
        doc = json.load(fh)
    doc["relative_precision"] = args.precision
    import tempfile, os

    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as tmp:
        json.dump(doc, tmp)
        tmp_path = tmp.name
    try:
        return datum_load(tmp_path)
    finally:
        os.unlink(tmp_path)


if __name__ == "__main__":
    raise SystemExit(main())
