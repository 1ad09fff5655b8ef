"""Render a stream-function field CSV as a filled-contour map.

Projections: orthographic (default, view centered at 30 degrees north for a
mid-latitude weather-chart look) or equirectangular over (lambda, phi) with
phi = arcsin(mu).  Optionally verifies, before rendering, that the zonal
power spectrum at a requested latitude peaks at an expected set of
wavenumbers.

Exit codes: 0 success, 1 spectrum check failed, 2 schema/usage error.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schemas import SchemaError, read_field_csv


def zonal_power_peaks(psi, mu_nodes, at_mu, n_peaks):
    """Top wavenumbers (m >= 1) of |FFT|^2 along the latitude circle whose
    mu node is nearest at_mu, strongest first."""
    j = int(np.argmin(np.abs(mu_nodes - at_mu)))
    power = np.abs(np.fft.rfft(psi[j]))[1:] ** 2
    order = np.argsort(power)[::-1][:n_peaks] + 1
    return sorted(int(m) for m in order)


def _orthographic(lam2, phi2, center_lat):
    phi0 = np.deg2rad(center_lat)
    cosc = np.sin(phi0) * np.sin(phi2) + np.cos(phi0) * np.cos(phi2) * np.cos(lam2)
    x = np.cos(phi2) * np.sin(lam2)
    y = np.cos(phi0) * np.sin(phi2) - np.sin(phi0) * np.cos(phi2) * np.cos(lam2)
    return x, y, cosc > 0.0


def render(meta, lam, mu, psi, projection, center_lat, out_path):
    phi = np.arcsin(mu)
    fig, ax = plt.subplots(figsize=(7, 6 if projection == "orthographic" else 4))
    title = f"stream function, t = {meta['t']:g}"
    if projection == "orthographic":
        # wrap lambda into (-pi, pi] so the view is centered on lambda = 0
        lam2, phi2 = np.meshgrid(np.arctan2(np.sin(lam), np.cos(lam)), phi)
        x, y, vis = _orthographic(lam2, phi2, center_lat)
        pts = np.count_nonzero(vis)
        if pts >= 4:
            tri = ax.tricontourf(x[vis], y[vis], psi[vis], levels=21,
                                 cmap="RdBu_r")
        else:  # degenerate tiny grids: fall back to a scatter
            tri = ax.scatter(x[vis], y[vis], c=psi[vis], cmap="RdBu_r")
        ax.add_patch(plt.Circle((0, 0), 1.0, fill=False, lw=1.0))
        ax.set_xlim(-1.05, 1.05)
        ax.set_ylim(-1.05, 1.05)
        ax.set_aspect("equal")
        ax.set_axis_off()
        title += f"  (orthographic, {center_lat:g}N)"
    else:
        lam2, phi2 = np.meshgrid(lam, phi)
        tri = ax.contourf(lam2, phi2, psi, levels=21, cmap="RdBu_r")
        ax.set_xlabel("longitude (rad)")
        ax.set_ylabel("latitude (rad)")
    fig.colorbar(tri, ax=ax, shrink=0.85)
    ax.set_title(title)
    fig.savefig(out_path, bbox_inches="tight")
    plt.close(fig)


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Filled-contour map of a field CSV.")
    parser.add_argument("csv", help="Input field CSV path.")
    parser.add_argument("out", help="Output image path (format by extension).")
    parser.add_argument("--projection", default="orthographic",
                        choices=["orthographic", "equirectangular"])
    parser.add_argument("--center-lat", type=float, default=30.0,
                        help="Orthographic view latitude in degrees.")
    parser.add_argument("--expect-peaks", default=None,
                        help="Comma-separated wavenumbers the zonal power "
                             "spectrum must peak at before rendering.")
    parser.add_argument("--at-mu", type=float, default=0.5,
                        help="Latitude (as mu) for the spectrum check.")
    args = parser.parse_args(argv)

    try:
        meta, lam, mu, psi, _ = read_field_csv(args.csv)
    except (OSError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.expect_peaks is not None:
        try:
            expected = sorted(int(m) for m in args.expect_peaks.split(","))
        except ValueError:
            print(f"error: bad --expect-peaks {args.expect_peaks!r}",
                  file=sys.stderr)
            return 2
        found = zonal_power_peaks(psi, mu, args.at_mu, len(expected))
        if found != expected:
            print(f"spectrum check failed: expected peaks {expected}, "
                  f"found {found}", file=sys.stderr)
            return 1
        print(f"spectrum check passed: peaks {found} at mu~{args.at_mu:g}")

    render(meta, lam, mu, psi, args.projection, args.center_lat, args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
