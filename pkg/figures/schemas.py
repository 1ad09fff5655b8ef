"""Readers for the two documented CSV schemas.

Field CSV: leading `# key=value` comment lines (schema, frame, omega, t,
nlat, nlon) followed by `lambda,mu,psi[,zeta]` rows in lambda-major order.

Benchmark CSV: leading `# key=value` comment lines followed by a header row
`step,t,l2_psi_err,linf_psi_err,energy,enstrophy,phase_estimate` and one data
row per recorded step.
"""

import numpy as np


class SchemaError(ValueError):
    """The input file does not conform to the documented CSV schema."""


def _split_comments(lines):
    header = {}
    body = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            header[key.strip()] = val.strip()
        else:
            body.append(line)
    return header, body


def read_field_csv(path):
    """Return (meta, lam_nodes, mu_nodes, psi, zeta_or_None).

    psi and zeta have shape (nlat, nlon); lam_nodes has length nlon and
    mu_nodes length nlat, both ascending as written.
    """
    with open(path) as f:
        header, body = _split_comments(f)
    if header.get("schema") != "1":
        raise SchemaError("unsupported or missing CSV schema tag")
    try:
        nlat, nlon = int(header["nlat"]), int(header["nlon"])
        t = float(header["t"])
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad field header: {exc}") from exc
    try:
        data = np.array([[float(x) for x in row.split(",")] for row in body])
    except ValueError as exc:
        raise SchemaError(f"non-numeric field row: {exc}") from exc
    if data.ndim != 2 or data.shape[1] not in (3, 4):
        raise SchemaError("field rows must be lambda,mu,psi[,zeta]")
    if data.shape[0] != nlat * nlon:
        raise SchemaError("row count does not match nlat*nlon")
    lam = data[: nlat * nlon : nlat, 0]
    mu = data[:nlat, 1]
    psi = data[:, 2].reshape(nlon, nlat).T
    zeta = data[:, 3].reshape(nlon, nlat).T if data.shape[1] == 4 else None
    meta = {"t": t, "frame": header.get("frame", ""),
            "omega": header.get("omega", ""), "nlat": nlat, "nlon": nlon}
    return meta, lam, mu, psi, zeta


BENCH_COLUMNS = ("step", "t", "l2_psi_err", "linf_psi_err", "energy",
                 "enstrophy", "phase_estimate")


def read_bench_csv(path):
    """Return (meta, columns) where columns maps each benchmark column name
    to a 1-D array with one entry per recorded step."""
    with open(path) as f:
        header, body = _split_comments(f)
    if not body:
        raise SchemaError("benchmark CSV has no header row")
    names = [c.strip() for c in body[0].split(",")]
    missing = [c for c in BENCH_COLUMNS if c not in names]
    if missing:
        raise SchemaError(f"benchmark CSV missing columns: {missing}")
    try:
        data = np.array(
            [[float(x) for x in row.split(",")] for row in body[1:]]
        ).reshape(len(body) - 1, len(names))
    except ValueError as exc:
        raise SchemaError(f"non-numeric benchmark row: {exc}") from exc
    if data.shape[0] == 0:
        raise SchemaError("benchmark CSV has no data rows")
    cols = {name: data[:, k] for k, name in enumerate(names)}
    return header, cols
