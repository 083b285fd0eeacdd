"""Command-line interface.

Every command prints (or writes to ``--out``) one JSON report. With
``--out`` labelled OFF meshes are written next to it. Exit codes: 0 success,
2 input error, 3 undersampled input, 4 tracking failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

from . import __version__
from .mesh import MeshError, TriangleMesh

log = logging.getLogger("cspace")

EXIT_OK, EXIT_INPUT, EXIT_UNDERSAMPLED, EXIT_TRACKING = 0, 2, 3, 4


class InputError(ValueError):
    """Bad command-line input."""


def _positive(kind):
    def parse(s):
        try:
            v = kind(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v
    return parse


def _load(path, args, closed=True) -> TriangleMesh:
    from .io import load_mesh
    mesh = load_mesh(path, strict=args.strict)
    if closed:
        # name the offending edge rather than failing later on an open mesh
        mesh.check_manifold()
    return mesh


def _is_pdb(path) -> bool:
    return Path(path).suffix.lower() in (".pdb", ".ent")


def _emit(report: dict, args, name: str) -> None:
    from .report import write_json
    report = dict(report, command=name, seed=args.seed)
    write_json(report, None if args.out is None else Path(args.out) / f"{name}.json")


def _save(mesh, args, name: str) -> None:
    if args.out is not None and mesh is not None:
        from .io import write_off
        write_off(mesh, Path(args.out) / name)


# -- commands ---------------------------------------------------------------


def cmd_features(args) -> None:
    from .features import SpaceModel, tag_feature_mesh, tag_surface
    mesh = _load(args.mesh, args)
    model = SpaceModel(mesh, seed=args.seed)
    fs = model.features(args.floor)
    report = fs.to_dict()
    report["kinds"] = fs.kinds()
    report["undersampled_fraction"] = model.disagreement
    _emit(report, args, "features")
    _save(tag_surface(model, fs), args, "tagged_surface.off")
    for f in fs:
        _save(tag_feature_mesh(f), args, f"feature_{f.id}.off")


def cmd_quantify(args) -> None:
    from .features import SpaceModel
    from .quantify import measure_all, time_series_report
    sets = []
    for path in args.mesh:
        sets.append(SpaceModel(_load(path, args), seed=args.seed).features(args.floor))
    if args.timeseries:
        rep = time_series_report(sets, args.match_tol)
        _emit(rep.to_dict(), args, "quantify")
        if args.out is not None:
            rep.write_csv(Path(args.out) / "quantify.csv")
        return
    if len(sets) != 1:
        raise InputError("several meshes need --timeseries")
    _emit({"input_hash": sets[0].input_hash,
           "features": [m.to_dict() for m in measure_all(sets[0])]}, args, "quantify")


def cmd_thin(args) -> None:
    from .features import SpaceModel
    from .thin import detect_thin_regions, tag_thin, tunnel_mesh
    if args.gamma is None:
        raise InputError("thin needs --gamma")
    model = SpaceModel(_load(args.mesh, args), seed=args.seed)
    regions = detect_thin_regions(model, args.gamma)
    _emit({"gamma_A": args.gamma, "regions": [r.to_dict() for r in regions]}, args, "thin")
    _save(tag_thin(model, regions), args, "thin_surface.off")
    for i, r in enumerate(regions):
        if r.suggested_tunnel is not None:
            _save(tunnel_mesh(model, r.suggested_tunnel), args, f"missing_tunnel_{i}.off")


def cmd_pockets(args) -> None:
    from .levelset import (balls_to_grid, extract_isosurface, propagate_out_and_back,
                           rasterize_signed_distance)
    if _is_pdb(args.mesh):
        from .io import load_pdb
        grid = balls_to_grid(load_pdb(args.mesh), args.dims, args.padding)
    else:
        grid = rasterize_signed_distance(_load(args.mesh, args), args.dims, args.padding)
    res = propagate_out_and_back(grid, args.t)
    p = res.pocket
    _emit({"dims": list(grid.dims), "spacing_A": grid.spacing, "t_stop_A": res.t_stop,
           "pocket_voxels": p.voxel_count, "pocket_volume_A3": p.volume, "empty": p.empty},
          args, "pockets")
    if args.out is not None:
        _save(p.boundary_mesh(), args, "pocket.off")
        _save(extract_isosurface(res.sigma_prime, 0.0), args, "closed_surface.off")


def _parts_and_reference(args):
    from .contact import Part, part_from_balls
    if len(args.inputs) == 1 and _is_pdb(args.inputs[0]):
        from .io import load_pdb
        chains = load_pdb(args.inputs[0]).by_chain()
        if args.reference not in chains:
            raise InputError(f"reference chain {args.reference!r} not in "
                             f"{sorted(chains)}")
        ref = chains.pop(args.reference)
        parts = [part_from_balls(ch or "_", b, args.dims, args.inputs[0])
                 for ch, b in sorted(chains.items())]
        return parts, ref, args.reference
    if args.reference is None:
        raise InputError("mesh inputs need --reference <mesh>")
    parts = [Part(Path(p).stem, _load(p, args, closed=False), p) for p in args.inputs]
    ref = Part(Path(args.reference).stem, _load(args.reference, args, closed=False),
               args.reference)
    return parts, ref, ref.name


def cmd_contact(args) -> None:
    from .contact import contact_region, tag_contact
    parts, ref, ref_name = _parts_and_reference(args)
    regions = [contact_region(p, ref, args.threshold, ref_name) for p in parts]
    _emit({"threshold_A": args.threshold, "reference": ref_name,
           "contacts": [r.to_dict() for r in regions]}, args, "contact")
    for p, r in zip(parts, regions):
        _save(tag_contact(p, r), args, f"contact_{p.name}.off")


def cmd_assembly(args) -> None:
    from .contact import assembly_graph
    parts, ref, ref_name = _parts_and_reference(args)
    g = assembly_graph(parts, ref, args.threshold, ref_name)
    _emit(g.to_dict(), args, "assembly")
    if args.out is not None:
        g.write_csv(Path(args.out) / "assembly.csv")


def cmd_compare(args) -> None:
    from .features import SpaceModel, compare_feature_sets
    a = SpaceModel(_load(args.a, args), seed=args.seed).features(args.floor)
    b = SpaceModel(_load(args.b, args), seed=args.seed).features(args.floor)
    diff = compare_feature_sets(a, b, args.match_tol)
    _emit(dict(diff.to_dict(), a=a.kinds(), b=b.kinds()), args, "compare")


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="symbolic-perturbation seed")
    common.add_argument("--out", default=None, help="output directory (default: JSON to stdout)")
    common.add_argument("--strict", action="store_true",
                        help="reject non-manifold input and treat warnings as errors")
    common.add_argument("--floor", type=_positive(float), default=1.5,
                        help="smallest reported feature volume, cubic angstroms")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cspace", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cspace {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("features", parents=[common], help="segment pockets, tunnels and voids")
    s.add_argument("mesh")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("quantify", parents=[common], help="volumes, mouths and diameters")
    s.add_argument("mesh", nargs="+")
    s.add_argument("--timeseries", action="store_true", help="track features across the meshes")
    s.add_argument("--match-tol", type=_positive(float), default=2.0,
                   help="centroid distance for matching features across steps, angstroms")
    s.set_defaults(func=cmd_quantify)

    s = sub.add_parser("thin", parents=[common], help="thin walls and missing tunnels")
    s.add_argument("mesh")
    s.add_argument("--gamma", type=_positive(float), default=None,
                   help="thinness threshold, angstroms (about the imaging resolution)")
    s.set_defaults(func=cmd_thin)

    s = sub.add_parser("pockets", parents=[common], help="level-set out-and-back pockets")
    s.add_argument("mesh", help="OFF/OBJ mesh or PDB file")
    s.add_argument("--dims", type=int, default=64, help="grid nodes per axis")
    s.add_argument("--padding", type=_positive(float), default=None,
                   help="grid margin as a fraction of the shape's extent")
    s.add_argument("--t", type=float, default=None, help="closing radius (default: automatic)")
    s.set_defaults(func=cmd_pockets)

    for name, func, text in (("contact", cmd_contact, "contact regions with a reference"),
                             ("assembly", cmd_assembly, "assembly graph and binding order")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("inputs", nargs="+", help="part meshes, or one PDB file split by chain")
        s.add_argument("--reference", required=True,
                       help="reference mesh path, or chain id for PDB input")
        s.add_argument("--threshold", type=_positive(float), default=4.0,
                       help="contact distance, angstroms")
        s.add_argument("--dims", type=int, default=64, help="grid size for meshing PDB chains")
        s.set_defaults(func=func)

    s = sub.add_parser("compare", parents=[common], help="compare feature topology of two meshes")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--match-tol", type=_positive(float), default=2.0)
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    from .contact import ContactError
    from .distance import OpenMeshError
    from .features import UndersampledError
    from .io import ParseError
    from .levelset import GridError, PropagationOverflowError
    from .quantify import TrackingError

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    start = time.perf_counter()
    try:
        with warnings.catch_warnings():
            if args.strict:
                warnings.simplefilter("error")
            args.func(args)
    except UndersampledError as exc:
        print(f"cspace: undersampled input: {exc}", file=sys.stderr)
        return EXIT_UNDERSAMPLED
    except TrackingError as exc:
        print(f"cspace: tracking failed: {exc}", file=sys.stderr)
        return EXIT_TRACKING
    except (InputError, ParseError, MeshError, OpenMeshError, GridError, ContactError,
            PropagationOverflowError, FileNotFoundError, Warning, ValueError) as exc:
        print(f"cspace: {exc}", file=sys.stderr)
        return EXIT_INPUT
    # timing goes to the log so that JSON output stays reproducible
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - start)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
