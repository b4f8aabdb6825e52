import os
import sys
import csv
import json
import argparse
import logging

import mpmath
import numpy as np
import yaml

from utils.util import setup_logger, timestamp, Timer
from simplicial import TOOL_NAME, __version__
from simplicial import io as sio
from simplicial.cluster import build_lsd, covariance_identity_exact, lsd_distance, random_mask, swap, \
    variance_identity_exact
from simplicial.config import SimplicialConfig, load_config, validate_config
from simplicial.errors import CapExceededError, CoalescenceError, CouplingError, ValidationError
from simplicial.height import Slope, floor_field, is_height_function
from simplicial.kasteleyn import verify_kasteleyn
from simplicial.lattice import BOX_KINDS, Lattice
from simplicial.regions import UNIFORM, FixedBoundary, PeriodicBoundary, count, enumerate_heights
from simplicial.render import render_field
from simplicial.sampler import cftp_batch, cftp_sample, glauber_run, glauber_samples, periodic_samples
from simplicial.tension import estimate_tension, sigma_zero_offset

logger = logging.getLogger("simplicial_log")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2
EXIT_CAP = 3

# config keys a flag can override
CONFIG_FLAGS = ["enumeration_cap", "hyperdet_cap", "torus_cap", "seed", "steps", "burnin", "chains", "samples",
                "max_doublings", "workers", "timezone"]


def add_boundary_arguments(parser):
    parser.add_argument("--bc", type=str, default=None, help="FixedBoundary JSON file")
    parser.add_argument("--d", type=int, default=2, help="Dimension of the lattice")
    parser.add_argument("--box", type=str, default="B", choices=BOX_KINDS, help="Box family for R")
    parser.add_argument("--n", type=int, default=3, help="Box size")
    parser.add_argument("--slope", type=str, default=None, help="Boundary slope as 'p/q,...' (d+1 values)")
    parser.add_argument("--offset", type=str, default="0", help="Offset a of the floor boundary")
    parser.add_argument("--weights", type=str, default=None, help="WeightFunction JSON file")


def parse_arguments(argv=None):
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="Height functions on the simplicial lattice")
    parser.add_argument("--config", type=str, default=None, help="YAML config file")
    parser.add_argument("--output_dir", type=str, default="./output", help="Folder for config and logs")
    parser.add_argument("--log_dir", "--log-dir", dest="log_dir", type=str, default=None,
                        help="Log folder, defaults to output_dir")
    parser.add_argument("--out", type=str, default=None, help="Result file, defaults to stdout")
    parser.add_argument("--progress", action="store_true", default=False, help="Show progress bars")

    # overrides of the config file
    parser.add_argument("--seed", type=int, default=None, help="Seed of the shared randomness")
    parser.add_argument("--cap", dest="enumeration_cap", type=int, default=None, help="Free vertex cap")
    parser.add_argument("--hyperdet_cap", type=int, default=None, help="Leibniz term cap")
    parser.add_argument("--torus_cap", type=int, default=None, help="Free torus site cap")
    parser.add_argument("--workers", type=int, default=None, help="Worker processes")
    parser.add_argument("--timezone", type=str, default=None, help="Timezone of log timestamps")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="List Omega(R, b) as ndjson")
    add_boundary_arguments(p)

    p = sub.add_parser("count", help="Count |Omega(R, b)|")
    add_boundary_arguments(p)

    p = sub.add_parser("kasteleyn-verify", help="Compare Z_w with the Kasteleyn hyperdeterminant")
    add_boundary_arguments(p)

    p = sub.add_parser("sample", help="Glauber, CFTP or periodic samples as ndjson")
    add_boundary_arguments(p)
    p.add_argument("--steps", type=int, default=None, help="Glauber steps between samples")
    p.add_argument("--burnin", type=int, default=None, help="Glauber steps before the first sample")
    p.add_argument("--chains", type=int, default=None, help="Independent chains")
    p.add_argument("--samples", type=int, default=None, help="Samples per chain")
    p.add_argument("--max_doublings", type=int, default=None, help="CFTP horizon exponent")
    p.add_argument("--cftp", action="store_true", default=False, help="Exact samples by coupling from the past")
    p.add_argument("--periodic", action="store_true", default=False, help="Sample Omega(L_n, s) on the torus")
    p.add_argument("--experimental_weighted", action="store_true", default=False,
                   help="Allow weighted CFTP under order assertions")

    p = sub.add_parser("swap-stats", help="Per-pair level set decomposition summaries as CSV")
    add_boundary_arguments(p)
    p.add_argument("--samples", type=int, default=None, help="Number of pairs")
    p.add_argument("--steps", type=int, default=None, help="Glauber steps per field")
    p.add_argument("--x", type=str, default=None, help="Vertex for the tree distance, defaults to the centre site")
    p.add_argument("--cftp", action="store_true", default=False, help="Draw pairs by coupling from the past")

    p = sub.add_parser("identity-check", help="Exact variance and covariance identities")
    add_boundary_arguments(p)
    p.add_argument("--x", type=str, default=None, help="First vertex, defaults to the centre site")
    p.add_argument("--y", type=str, default=None, help="Second vertex, defaults to x")

    p = sub.add_parser("tension", help="sigma_n(s) by exact counting as CSV")
    p.add_argument("--d", type=int, default=2, help="Dimension of the lattice")
    p.add_argument("--slope", type=str, default=None, help="Slope as 'p/q,...' (d+1 values)")
    p.add_argument("--n_list", "--n-list", dest="n_list", type=str, default="2,3,4", help="Box sizes, comma separated")

    p = sub.add_parser("render", help="Draw a d=2 height function as a lozenge tiling")
    add_boundary_arguments(p)
    p.add_argument("--field", type=str, default=None, help="HeightField JSON file; otherwise a CFTP sample")
    p.add_argument("--name", type=str, default="tiling", help="Base name of the SVG/PNG files")
    p.add_argument("--png", action="store_true", default=False, help="Also write a PNG via cairosvg")

    args = parser.parse_args(argv)

    cfg = load_config(args.config) if args.config else SimplicialConfig()
    cfg.update({key: getattr(args, key) for key in CONFIG_FLAGS if getattr(args, key, None) is not None})
    valid, message = validate_config(cfg)
    if not valid:
        raise ValidationError(message)
    args.cfg = cfg

    # Set up output directories
    args.log_dir = args.log_dir or args.output_dir
    for dir_path in [args.output_dir, args.log_dir]:
        os.makedirs(dir_path, exist_ok=True)

    return args


######### input helpers
def parse_vertex(text, d):
    try:
        coords = [int(c) for c in text.split(",")]
    except ValueError as exc:
        raise ValidationError(f"Invalid vertex '{text}': {exc}") from exc
    if len(coords) == d:
        coords.append(0)
    return Lattice.of(d).canonicalize(coords)


def load_boundary(args) -> FixedBoundary:
    if args.bc:
        bc = sio.boundary_from_json(sio.load_file(args.bc))
    else:
        lattice = Lattice.of(args.d)
        slope = Slope.parse(args.slope) if args.slope else Slope.zero(args.d)
        if slope.d != args.d:
            raise ValidationError(f"Slope {slope.to_str()} has d={slope.d}, expected d={args.d}")
        offset = sio.parse_rational(args.offset, "offset")
        bc = FixedBoundary(lattice.make_box(args.box, args.n), floor_field(slope, offset))
    return bc.require_region()


def load_weights(args, d):
    if not getattr(args, "weights", None):
        return UNIFORM
    return sio.weights_from_json(sio.load_file(args.weights), d)


def centre_site(bc: FixedBoundary):
    sites = bc.sites
    if not sites:
        raise ValidationError("R is empty")
    return sites[len(sites) // 2]


def metadata(args, d):
    return {"tool": TOOL_NAME, "version": __version__, "command": args.command, "d": d, "seed": args.cfg.seed}


class Output:
    """Result stream: a file when --out is given, stdout otherwise."""

    def __init__(self, path):
        self.path = path
        self.handle = None

    def __enter__(self):
        self.handle = open(self.path, "w", newline="") if self.path else sys.stdout
        return self.handle

    def __exit__(self, *exc):
        if self.path:
            self.handle.close()
        else:
            self.handle.flush()
        return False


def write_json(args, d, result):
    with Output(args.out) as f:
        f.write(json.dumps({"meta": metadata(args, d), "result": result}, sort_keys=True, indent=2) + "\n")


def write_csv(args, d, header, rows):
    with Output(args.out) as f:
        f.write("# " + sio.dumps(metadata(args, d)) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


######### commands
def cmd_enumerate(args):
    bc = load_boundary(args)
    logger.info("----- enumerate -----")
    timer = Timer()
    total = 0
    with Output(args.out) as f:
        f.write(sio.dumps(metadata(args, bc.lattice.d)) + "\n")
        for field in enumerate_heights(bc, cap=args.cfg.enumeration_cap):
            f.write(sio.dumps(sio.field_to_json(field)) + "\n")
            total += 1
    logger.info(f"Enumerated {total} height functions")
    logger.info(f"Enumerate completed in {timer.get_elapsed_time():.2f} seconds")
    return EXIT_OK


def cmd_count(args):
    bc = load_boundary(args)
    total = count(bc, cap=args.cfg.enumeration_cap, workers=args.cfg.workers)
    write_json(args, bc.lattice.d, {"count": str(total), "sites": len(bc.sites)})
    return EXIT_OK


def cmd_kasteleyn_verify(args):
    bc = load_boundary(args)
    w = load_weights(args, bc.lattice.d)
    report = verify_kasteleyn(bc, w, enumeration_cap=args.cfg.enumeration_cap, hyperdet_cap=args.cfg.hyperdet_cap,
                              workers=args.cfg.workers)
    write_json(args, bc.lattice.d, report.to_dict())
    return EXIT_OK if report.equal else EXIT_RUNTIME


def _sample_periodic(args, f):
    cfg = args.cfg
    slope = Slope.parse(args.slope) if args.slope else Slope.zero(args.d)
    pbc = PeriodicBoundary(args.n, slope)
    for chain in range(cfg.chains):
        for k, state in enumerate(periodic_samples(pbc, samples=cfg.samples, steps=cfg.steps, burnin=cfg.burnin,
                                                   seed=cfg.seed, chain=chain, progress=args.progress)):
            f.write(sio.dumps({"chain": chain, "index": k, **sio.torus_to_json(state)}) + "\n")
    return pbc.slope.d


def cmd_sample(args):
    cfg = args.cfg
    logger.info("----- sample -----")
    timer = Timer()
    with Output(args.out) as f:
        if args.periodic:
            f.write(sio.dumps(metadata(args, args.d)) + "\n")
            _sample_periodic(args, f)
        else:
            bc = load_boundary(args)
            w = load_weights(args, bc.lattice.d)
            f.write(sio.dumps(metadata(args, bc.lattice.d)) + "\n")
            for chain in range(cfg.chains):
                if args.cftp:
                    # chain c owns randomness streams c*samples .. (c+1)*samples-1
                    fields = (cftp_sample(bc, w, seed=cfg.seed, chain=chain * cfg.samples + k,
                                          max_doublings=cfg.max_doublings,
                                          experimental_weighted=args.experimental_weighted)
                              for k in range(cfg.samples))
                else:
                    fields = glauber_samples(bc, w, samples=cfg.samples, steps=cfg.steps, burnin=cfg.burnin,
                                             seed=cfg.seed, chain=chain, progress=args.progress)
                for k, field in enumerate(fields):
                    f.write(sio.dumps({"chain": chain, "index": k, **sio.field_to_json(field)}) + "\n")
    logger.info(f"Sample completed in {timer.get_elapsed_time():.2f} seconds")
    return EXIT_OK


def cmd_pair_stats(args):
    cfg = args.cfg
    bc = load_boundary(args)
    w = load_weights(args, bc.lattice.d)
    x = parse_vertex(args.x, bc.lattice.d) if args.x else centre_site(bc)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    logger.info("----- swap stats -----")
    for k in range(cfg.samples):
        if args.cftp:
            f1, f2 = cftp_batch(bc, 2, seed=cfg.seed + k, w=w, max_doublings=cfg.max_doublings)
        else:
            f1 = glauber_run(bc, w, steps=cfg.steps, seed=cfg.seed, chain=2 * k)
            f2 = glauber_run(bc, w, steps=cfg.steps, seed=cfg.seed, chain=2 * k + 1)
        lsd = build_lsd(f1, f2)
        mask = random_mask(lsd, rng)
        g1, g2 = swap(f1, f2, mask, lsd)
        window = bc.sites
        conserved = all(g1(v) + g2(v) == f1(v) + f2(v) for v in window)
        valid = is_height_function(g1, window) and is_height_function(g2, window)
        rows.append([k, len(lsd.boundaries), len(lsd.level_sets), lsd_distance(lsd, x), len(mask.selected),
                     int(conserved), int(valid)])
    write_csv(args, bc.lattice.d,
              ["pair", "boundaries", "level_sets", "distance", "flipped", "conserved", "valid"], rows)
    return EXIT_OK


def cmd_identity_check(args):
    bc = load_boundary(args)
    w = load_weights(args, bc.lattice.d)
    d = bc.lattice.d
    x = parse_vertex(args.x, d) if args.x else centre_site(bc)
    y = parse_vertex(args.y, d) if args.y else x
    variance = variance_identity_exact(bc, w, x)
    covariance = covariance_identity_exact(bc, w, x, y)
    write_json(args, d, {"x": list(x), "y": list(y), "variance": variance.to_dict(),
                         "covariance": covariance.to_dict()})
    return EXIT_OK if variance.equal and covariance.equal else EXIT_RUNTIME


def cmd_tension(args):
    cfg = args.cfg
    slope = Slope.parse(args.slope) if args.slope else Slope.zero(args.d)
    n_values = [int(n) for n in args.n_list.split(",")]
    estimate = estimate_tension(slope, n_values, cap=cfg.enumeration_cap, workers=cfg.workers,
                                precision=cfg.log_precision)
    rows = []
    for entry in estimate.entries:
        sigma0, count0 = sigma_zero_offset(slope, entry.n, cap=cfg.enumeration_cap, precision=cfg.log_precision)
        rows.append(entry.to_row() + [str(count0), mpmath.nstr(sigma0, 20)])
    write_csv(args, slope.d, ["n", "a", "count", "sigma_n", "count_a0", "sigma_n_a0"], rows)
    return EXIT_OK


def cmd_render(args):
    if args.field:
        field = sio.field_from_json(sio.load_file(args.field))
    else:
        bc = load_boundary(args)
        field = cftp_sample(bc, seed=args.cfg.seed, max_doublings=args.cfg.max_doublings)
    if field.d != 2:
        raise ValidationError(f"Rendering is only defined for d=2, got d={field.d}")
    svg = render_field(field)
    svg_path = f"{args.output_dir}/{args.name}.svg"
    svg.save_svg(svg_path)
    logger.info(f"Saved {svg_path}")
    if args.png:
        png_path = f"{args.output_dir}/{args.name}.png"
        svg.save_png(png_path)
        logger.info(f"Saved {png_path}")
    write_json(args, field.d, {"svg": svg_path, "lozenges": len(svg)})
    return EXIT_OK


COMMANDS = {
    "enumerate": cmd_enumerate,
    "count": cmd_count,
    "kasteleyn-verify": cmd_kasteleyn_verify,
    "sample": cmd_sample,
    "swap-stats": cmd_pair_stats,
    "identity-check": cmd_identity_check,
    "tension": cmd_tension,
    "render": cmd_render,
}


def main(args):
    setup_logger(args.log_dir, timezone=args.cfg.timezone)
    started = timestamp(args.cfg.timezone)
    try:
        code = COMMANDS[args.command](args)
    except ValidationError as exc:
        logger.error(f"Invalid input: {exc}")
        code = EXIT_VALIDATION
    except CapExceededError as exc:
        logger.error(f"Cap exceeded: {exc}")
        code = EXIT_CAP
    except (CoalescenceError, CouplingError) as exc:
        logger.error(f"Sampler failure: {exc}")
        code = EXIT_RUNTIME

    # Save config
    record = {key: value for key, value in vars(args).items() if key != "cfg"}
    record.update({"config": args.cfg.to_dict(), "started": started, "finished": timestamp(args.cfg.timezone),
                   "exit_code": code, "tool": TOOL_NAME, "version": __version__})
    with open(f"{args.output_dir}/config.yaml", "w", encoding="utf-8") as f:
        yaml.dump(record, f)
    return code


def run(argv=None):
    try:
        args = parse_arguments(argv)
    except (ValidationError, KeyError, ValueError) as exc:
        print(f"Invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return main(args)


if __name__ == "__main__":
    sys.exit(run())
