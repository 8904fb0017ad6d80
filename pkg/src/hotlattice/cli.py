"""Command-line entry point: ``hotlattice {spectrum,dos,chern,assemble,evolve}``.

Exit codes: 0 success, 1 other failure, 2 configuration error, 3 numerical
quality error (quantization, gap closing, refinement).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import AxisSpectrum, construct_states, verify_eigenpair
from .config import RunConfig, load_config
from .dynamics import evolve, injection_site, localization
from .emit import grid_rows, write_csv, write_json, write_pgm
from .errors import ConfigError, HotLatticeError, NumericalQualityError, RefinementError
from .lattice import DEFAULT_MATERIALIZE_CAP, kron_sum
from .spectral import dos, solve_axis, spectrum_sweep
from .topology import abelian_chern_all, nonabelian_chern_all, plaquette_flux, twisted_spectra, vector_chern

log = logging.getLogger("hotlattice")

AXIS_NAMES = "xyz"
FORMATS = ("csv", "json", "pgm")


class Emitter:
    """Writes files into the output directory and records them for the manifest."""

    def __init__(self, out: Path, fmt: str):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.fmt = fmt
        self.files: list[dict] = []

    def _record(self, path: Path, kind: str, params: dict | None):
        self.files.append({"path": path.name, "kind": kind, "params": params or {}})
        log.info("wrote %s", path)

    def csv(self, name, header, rows, kind, params=None):
        self._record(write_csv(self.out / name, header, rows), kind, params)

    def json(self, name, obj, kind, params=None):
        self._record(write_json(self.out / name, obj), kind, params)

    def pgm(self, name, grid, kind, params=None):
        self._record(write_pgm(self.out / name, grid), kind, params)

    def grid(self, stem, values, kind, params=None, header=None):
        """Emit a per-site array in the selected format."""
        if self.fmt == "json":
            self.json(f"{stem}.json", {"dims": list(values.shape), "values": values.ravel()}, kind, params)
        elif self.fmt == "pgm" and values.ndim in (2, 3):
            img = values if values.ndim == 2 else values.sum(axis=2)
            self.pgm(f"{stem}.pgm", img, kind, params)
        else:
            cols = [f"i{AXIS_NAMES[a]}" for a in range(values.ndim)] + [header or "value"]
            self.csv(f"{stem}.csv", cols, grid_rows(values), kind, params)

    def manifest(self, command: str, config: RunConfig):
        write_json(self.out / "manifest.json", {
            "command": command,
            "code_version": __version__,
            "config": config.to_dict(),
            "files": self.files,
        })


def _phi_label(phi: float) -> str:
    return f"{phi / np.pi:.4f}pi"


def run_spectrum(config: RunConfig, em: Emitter, workers=None):
    sec = config.section("spectrum")
    for s, ax in enumerate(config.spec.axes):
        phis = sec["phis"] if sec["phis"] is not None else [ax.phi]
        sweep = spectrum_sweep(ax, phis, sec["edge_width"], sec["weight_threshold"],
                               sec["symmetrize"], workers)
        header = ["phi", "index", "energy", "kind", "left_weight", "right_weight", "ipr"]
        name = f"spectrum_{AXIS_NAMES[s]}"
        if em.fmt == "json":
            em.json(f"{name}.json", {"columns": header, "rows": [list(r) for r in sweep.rows()]},
                    "spectrum", {"axis": AXIS_NAMES[s]})
        else:
            em.csv(f"{name}.csv", header, sweep.rows(), "spectrum", {"axis": AXIS_NAMES[s]})
    if config.spec.ndim > 1 and np.prod(config.spec.dims) <= 10**6:
        values = _lattice_spectrum(config)
        em.csv("spectrum_lattice.csv", ["index", "energy"], enumerate(values), "lattice_spectrum")


def _lattice_spectrum(config: RunConfig) -> np.ndarray:
    # additivity of the Kronecker sum: no full diagonalization needed
    total = np.zeros(())
    for ax in config.spec.axes:
        total = np.add.outer(total, solve_axis(ax, symmetrize=False).values)
    return np.sort(total.ravel())


def run_dos(config: RunConfig, em: Emitter, workers=None):
    sec = config.section("dos")
    eta = sec["eta"] if sec["eta"] is not None else 0.05 * config.spec.axes[0].t
    kw = dict(kernel=sec["kernel"], num=sec["num"], margin=sec["margin"])
    params = {"eta": eta, "kernel": sec["kernel"]}
    for s, ax in enumerate(config.spec.axes):
        curve = dos(solve_axis(ax, symmetrize=False).values, eta, **kw)
        em.csv(f"dos_{AXIS_NAMES[s]}.csv", ["energy", "density"],
               zip(curve.energies, curve.density), "dos", {**params, "axis": AXIS_NAMES[s]})
    if config.spec.ndim > 1:
        curve = dos(_lattice_spectrum(config), eta, **kw)
        em.csv(f"dos_{config.spec.ndim}d.csv", ["energy", "density"],
               zip(curve.energies, curve.density), "dos", {**params, "axis": "lattice"})


def run_chern(config: RunConfig, em: Emitter, workers=None):
    sec = config.section("chern")
    grid = tuple(sec["grid"])
    kw = dict(refine=sec["refine"], max_grid=sec["max_grid"])
    if sec["mode"] == "abelian":
        axes = {}
        for s, ax in enumerate(config.spec.axes):
            res = abelian_chern_all(ax, sec["bands"], grid, workers=workers, **kw)
            axes[AXIS_NAMES[s]] = [r.to_dict() for r in res]
            if sec["check_refinement"]:
                fine = abelian_chern_all(ax, sec["bands"], tuple(2 * g for g in res[0].grid),
                                         workers=workers, refine=False)
                _check_stable(res, fine)
        em.json("chern.json", {"mode": "abelian", "axes": axes}, "chern")
        return
    subsets = None if sec["subsets"] == "auto" else sec["subsets"]
    vc = vector_chern(config.spec, subsets, grid, sec["n_subsets"], workers, **kw)
    out = {"mode": "vector", **vc.to_dict(), "integers": [list(c) for c in vc.integers]}
    if sec["check_refinement"]:
        for ax, comps, subs in zip(config.spec.axes, vc.components, vc.meta["subsets"]):
            fine = nonabelian_chern_all(ax, subs, tuple(2 * g for g in comps[0].grid),
                                        workers=workers, refine=False)
            _check_stable(comps, fine)
        out["stable_under_refinement"] = True
    em.json("chern.json", out, "chern")
    if sec["flux_csv"]:
        for s, (ax, comps) in enumerate(zip(config.spec.axes, vc.components)):
            g = comps[0].grid
            thetas, phis, _, vectors = twisted_spectra(ax, g, workers)
            for r in comps:
                flux = plaquette_flux(vectors, slice(*r.bands))
                rows = ((i, j, thetas[i], phis[j], flux[i, j]) for i, j in np.ndindex(flux.shape))
                em.csv(f"flux_{AXIS_NAMES[s]}_{r.bands[0]}_{r.bands[1]}.csv",
                       ["i_theta", "i_phi", "theta", "phi", "flux"], rows, "berry_flux")


def _check_stable(coarse, fine):
    for a, b in zip(coarse, fine):
        if a.integer != b.integer:
            raise RefinementError(
                f"bands {a.bands}: Chern number {a.integer} on {a.grid} "
                f"changes to {b.integer} on {b.grid}"
            )


def run_assemble(config: RunConfig, em: Emitter, workers=None):
    sec = config.section("assemble")
    if not sec["states"]:
        raise ConfigError("at least one state request is required", ("assemble", "states"))
    spec = config.spec
    op = kron_sum(spec)
    spectra = [AxisSpectrum.of(ax, sec["edge_width"], sec["weight_threshold"]) for ax in spec.axes]
    dense = None
    if sec["compare_dense"] and op.size <= DEFAULT_MATERIALIZE_CAP:
        dense = np.linalg.eigvalsh(op.materialize())
    rows = []
    for r, req in enumerate(sec["states"]):
        states = construct_states(spec, req["pattern"], gap=req["gap"],
                                  extended_index=req["extended_index"], spectra=spectra)
        for s in states:
            resid = verify_eigenpair(op, s, s.energy)
            dev = float(np.min(np.abs(dense - s.energy))) if dense is not None else None
            factors = "-".join(str(c.index) for c in s.components)
            rows.append((r, s.label, s.role.name, factors, s.energy, resid,
                         "" if dev is None else dev))
            stem = f"state_{r}_{s.label}_{factors}"
            meta = {"request": r, "label": s.label, "role": s.role.name, "energy": s.energy,
                    "residual": resid}
            if em.fmt == "json":
                em.json(f"{stem}.json", {
                    **meta,
                    "dims": list(s.amplitudes.shape),
                    "amplitudes_re": s.amplitudes.real.ravel(),
                    "amplitudes_im": s.amplitudes.imag.ravel(),
                }, "state", meta)
            else:
                em.grid(stem, s.probabilities, "state", meta, header="probability")
    em.csv("assemble_summary.csv",
           ["request", "label", "role", "factor_indices", "energy", "residual", "dense_deviation"],
           rows, "summary")


def run_evolve(config: RunConfig, em: Emitter, workers=None):
    sec = config.section("evolve")
    for key in ("injections", "z"):
        if not sec[key]:
            raise ConfigError(f"'{key}' is required for evolve", ("evolve", key))
    base = config.spec
    phis = sec["phis"] if sec["phis"] is not None else [None]
    table = []
    for phi in phis:
        spec = base if phi is None else base.with_phase(phi)
        tag = "given" if phi is None else _phi_label(phi)
        for inj in sec["injections"]:
            site = injection_site(spec.dims, inj) if isinstance(inj, str) else tuple(inj)
            name = inj if isinstance(inj, str) else "_".join(map(str, inj))
            result = evolve(spec, site, sec["z"], workers)
            for z, probs in zip(result.z, result.probabilities):
                kind, report = localization(probs, result.initial_site, sec["l"])
                table.append(("" if phi is None else phi, name, "-".join(map(str, result.initial_site)),
                              kind, z, sec["l"], report.value))
                params = {"phi": phi, "injection": name, "z": float(z)}
                em.grid(f"evolve_{tag}_{name}_z{z:g}", probs, "probabilities", params,
                        header="probability")
    em.csv("xi_table.csv", ["phi", "injection", "site", "site_kind", "z", "half_width", "xi"],
           table, "xi_table")


COMMANDS = {
    "spectrum": run_spectrum,
    "dos": run_dos,
    "chern": run_chern,
    "assemble": run_assemble,
    "evolve": run_evolve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hotlattice", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {name} computation")
        p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--workers", type=int, default=1, help="maximum concurrent workers")
        p.add_argument("--format", choices=FORMATS, default="csv", dest="fmt")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(command: str, config: RunConfig, out: Path, workers: int = 1, fmt: str = "csv") -> Emitter:
    if fmt == "pgm" and command not in ("evolve", "assemble"):
        raise ConfigError(f"format 'pgm' only applies to evolve and assemble, not {command}")
    em = Emitter(out, fmt)
    COMMANDS[command](config, em, workers)
    em.manifest(command, config)
    return em


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        config = load_config(args.config)
        run(args.command, config, args.out, args.workers, args.fmt)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalQualityError as exc:
        print(f"numerical quality error: {exc}", file=sys.stderr)
        return 3
    except HotLatticeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
