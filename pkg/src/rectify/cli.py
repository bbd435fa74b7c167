"""Command line entry point.

Subcommands mirror the pipeline stages: gen, family, jones, curve, trees,
cones, run, render.  Exit codes: 0 success, 1 computation failure, 2 invalid
configuration or missing input.  Every failure prints a single line starting
with "error:" to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import beta, cones, curve, jones, measures, nets, render, trees
from .geometry import load_points, save_points


class ConfigError(Exception):
    pass


def _out_path(args, name: str) -> Path:
    base = Path(getattr(args, "out_dir", ".") or ".")
    base.mkdir(parents=True, exist_ok=True)
    return base / name


def _load_measure(path: str) -> measures.DiscreteMeasure:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"measure file not found: {p}")
    return measures.load_measure(p)


def _parse_params(raw: str | None) -> dict:
    """k=v[,k=v...] with JSON-style values where they parse."""
    if not raw:
        return {}
    out = {}
    for part in raw.split(","):
        if "=" not in part:
            raise ConfigError(f"malformed --params entry {part!r}")
        key, val = part.split("=", 1)
        try:
            out[key.strip()] = json.loads(val)
        except json.JSONDecodeError:
            out[key.strip()] = val
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.kind not in {"segment", "circle", "lipschitz_graph", "cantor4",
                         "plane_stack"}:
        raise ConfigError(f"unknown measure kind {args.kind!r}")
    mu = measures.generate(args.kind, _parse_params(args.params), args.n,
                           args.seed)
    measures.save_measure(args.out, mu)
    print(f"wrote {args.out}: {len(mu.atoms)} atoms in R^{mu.dim}")
    return 0


def cmd_family(args) -> int:
    mu = _load_measure(args.measure)
    fam = nets.build_family(mu, args.k0, args.k_max, args.lambda2, args.J)
    problems = nets.verify_family(fam, mu)
    if problems:
        raise RuntimeError("; ".join(problems[:3]))
    nets.save_family(args.out, fam)
    print(f"wrote {args.out}: levels "
          f"{[(lv.k, len(lv.indices)) for lv in fam.levels]}")
    return 0


def cmd_jones(args) -> int:
    mu = _load_measure(args.measure)
    fam = nets.load_family(args.family, mu)
    pts = load_points(args.points)
    r = args.r if args.r is not None else fam.radius(fam.k0)
    ev = jones.JonesEvaluator(mu, fam)

    def profile(x):
        return jones.jones_profile(mu, fam, x, r, evaluator=ev)

    if args.threads > 1:
        # per-ball terms are cached under the hood; precompute profiles in
        # parallel but write rows in input order
        with ThreadPoolExecutor(args.threads) as pool:
            profiles = list(pool.map(profile, pts))
    else:
        profiles = [profile(x) for x in pts]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_id", "k", "partial_sum", "label"])
        for i, prof in enumerate(profiles):
            slope = jones.growth_slope(prof)
            label = "divergent" if slope > args.slope_threshold else "bounded"
            for k in sorted(prof.partial_sums):
                writer.writerow([i, k, repr(prof.partial_sums[k]), label])
    print(f"wrote {args.out}: {len(pts)} profiles")
    return 0


def cmd_curve(args) -> int:
    p = Path(args.hierarchy)
    if not p.exists():
        raise ConfigError(f"hierarchy file not found: {p}")
    h = curve.load_hierarchy(p)
    problems = curve.validate_hierarchy(h)
    if problems:
        raise RuntimeError("invalid hierarchy: " + "; ".join(problems[:3]))
    state = curve.construct(h, epsilon=args.epsilon)
    curve.save_state(args.out, state)
    ok, comps = curve.connectedness(state)
    led = curve.length_accounting(state)
    if args.svg:
        Path(args.svg).write_text(render.render_svg(state), encoding="utf-8")
    print(f"wrote {args.out}: H1={led.h1_gamma:.6g} ratio={led.ratio:.6g} "
          f"bridges={led.n_bridges} connected={ok}")
    return 0


def cmd_trees(args) -> int:
    mu = _load_measure(args.measure)
    fam = nets.load_family(args.family, mu)
    families = trees.build_cores(fam, c=args.c)
    family = families[args.offset % fam.J]
    top_level = fam.k0 + args.offset
    tree = trees.build_tree(fam, family, (top_level, args.top_index))
    b_values = {n: beta.beta2(mu, tree.ball(n), dilation=2.0).value ** 2
                * tree.ball(n).diam for n in tree.nodes}
    part = trees.good_bad(tree, mu, b_values, args.N, args.eps)
    trees.save_tree(args.out, tree, part)
    print(f"wrote {args.out}: nodes={len(tree.nodes)} good={len(part.good)} "
          f"sum={part.good_sum:.6g} bound={part.bound:.6g}")
    return 0


def cmd_cones(args) -> int:
    mu = _load_measure(args.measure)
    plane_grid = cones.default_plane_grid(mu, m=args.m, seed=args.seed)
    labels = cones.classify_graph_rectifiable(
        mu, plane_grid=plane_grid, ratio_threshold=args.ratio_threshold,
        m=args.m)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["atom_id", "label", "best_V", "best_alpha",
                         "min_ratio"])
        for lab in labels:
            vec = ""
            if lab.plane_index is not None:
                basis = plane_grid[lab.plane_index].basis
                vec = ";".join(f"{x:.6g}" for x in basis.ravel())
            writer.writerow([lab.atom_index, int(lab.positive), vec,
                             "" if lab.alpha is None else f"{lab.alpha:.6g}",
                             f"{lab.min_ratio:.6g}"])
    n_pos = sum(l.positive for l in labels)
    print(f"wrote {args.out}: {n_pos}/{len(labels)} positive")
    return 0


def cmd_render(args) -> int:
    p = Path(args.gamma)
    if not p.exists():
        raise ConfigError(f"gamma file not found: {p}")
    if not args.hierarchy or not Path(args.hierarchy).exists():
        raise ConfigError("render needs --hierarchy pointing at the "
                          "hierarchy the curve was built from")
    h = curve.load_hierarchy(args.hierarchy)
    state = curve.construct(h, epsilon=json.loads(
        Path(args.gamma).read_text())["params"]["epsilon"])
    axes = tuple(int(a) for a in args.axes.split(","))
    if len(axes) != 2:
        raise ConfigError("--axes needs exactly two comma-separated indices")
    Path(args.out).write_text(render.render_svg(state, axes),
                              encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# run: full experiment from a TOML config
# ---------------------------------------------------------------------------

_REQUIRED_RUN_KEYS = {"measure", "family"}


def _validate_config(cfg: dict) -> dict:
    missing = _REQUIRED_RUN_KEYS - set(cfg)
    if missing:
        raise ConfigError(f"config missing sections: {sorted(missing)}")
    m = cfg["measure"]
    if m.get("kind") not in {"segment", "circle", "lipschitz_graph",
                             "cantor4", "plane_stack"}:
        raise ConfigError(f"unknown measure kind {m.get('kind')!r}")
    famcfg = cfg["family"]
    J = int(famcfg.get("J", 10))
    lam = float(famcfg.get("lambda2", 1.1))
    if lam <= nets.lambda2_lower_bound(J):
        raise ConfigError(f"lambda2={lam} too small for J={J}")
    if int(famcfg["k_max"]) < int(famcfg.get("k0", 0)):
        raise ConfigError("family.k_max must be >= family.k0")
    ccfg = cfg.get("curve", {})
    eps = float(ccfg.get("epsilon", curve.EPS_DEFAULT))
    if not (0 < eps < 1.0 / 32.0):
        raise ConfigError("curve.epsilon must lie in (0, 1/32)")
    delta = float(ccfg.get("delta", 0.5))
    if not (0 < delta <= 0.5):
        raise ConfigError("curve.delta must lie in (0, 1/2]")
    return cfg


def cmd_run(args) -> int:
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        cfg = _validate_config(tomllib.load(fh))
    seed = int(cfg.get("seed", args.seed))
    mcfg = cfg["measure"]
    mu = measures.generate(mcfg["kind"], mcfg.get("params", {}),
                           int(mcfg.get("n", 256)), seed)
    measures.save_measure(_out_path(args, "measure.json"), mu)
    fcfg = cfg["family"]
    fam = nets.build_family(mu, int(fcfg.get("k0", 0)), int(fcfg["k_max"]),
                            float(fcfg.get("lambda2", 1.1)),
                            int(fcfg.get("J", 10)))
    nets.save_family(_out_path(args, "family.json"), fam)
    with open(_out_path(args, "betas.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "ball_index", "beta2", "mass", "diam"])
        for row in beta.batch_beta2(mu, fam):
            writer.writerow([row[0], row[1], f"{row[2]:.12g}",
                             f"{row[3]:.12g}", f"{row[4]:.12g}"])
    jcfg = cfg.get("jones", {})
    rng = np.random.default_rng(seed)
    n_sample = min(int(jcfg.get("samples", 64)), len(mu.atoms))
    sample_idx = np.sort(rng.choice(len(mu.atoms), n_sample, replace=False))
    sample = mu.atoms[sample_idx]
    save_points(_out_path(args, "sample.json"), sample)
    labels = jones.classify(mu, fam, sample,
                            float(jcfg.get("slope_threshold",
                                           jones.DEFAULT_SLOPE_THRESHOLD)))
    with open(_out_path(args, "jones.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_id", "label", "slope", "total"])
        for lab in labels:
            writer.writerow([lab.point_index, lab.label,
                             f"{lab.slope:.12g}", f"{lab.total:.12g}"])
    ccfg = cfg.get("curve", {})
    h = curve.hierarchy_from_points(mu.atoms,
                                    float(ccfg.get("delta", 0.5)),
                                    int(ccfg.get("n_gens", 8)))
    state = curve.construct(h, epsilon=float(ccfg.get("epsilon",
                                                      curve.EPS_DEFAULT)))
    curve.save_state(_out_path(args, "gamma.json"), state)
    _out_path(args, "gamma.svg").write_text(render.render_svg(state),
                                            encoding="utf-8")
    led = curve.length_accounting(state)
    summary = {
        "measure": {"kind": mcfg["kind"], "atoms": len(mu.atoms)},
        "jones": {"bounded": sum(l.label == "bounded" for l in labels),
                  "divergent": sum(l.label == "divergent" for l in labels)},
        "curve": {"h1": led.h1_gamma, "ratio": led.ratio,
                  "bridges": led.n_bridges,
                  "connected": curve.connectedness(state)[0]},
    }
    with open(_out_path(args, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
    print(f"run complete: artifacts in {Path(args.out_dir or '.').resolve()}")
    return 0


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps subparser parsing from stomping values given before the
    # subcommand; main() consolidates the two positions
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out-dir", dest="out_dir",
                        default=argparse.SUPPRESS)
    ap = argparse.ArgumentParser(prog="rectify")
    ap.add_argument("--seed", dest="seed_global", type=int, default=0)
    ap.add_argument("--threads", dest="threads_global", type=int, default=1)
    ap.add_argument("--out-dir", dest="out_dir_global", default=".")
    sub = ap.add_subparsers(dest="command", required=True)

    def parser(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    g = parser("gen", help="generate a fixture measure")
    g.add_argument("--kind", required=True)
    g.add_argument("--n", type=int, default=256)
    g.add_argument("--params", default=None,
                   help="comma separated k=v generator parameters")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    f = parser("family", help="build a multiresolution family")
    f.add_argument("--measure", required=True)
    f.add_argument("--k0", type=int, default=0)
    f.add_argument("--k-max", dest="k_max", type=int, required=True)
    f.add_argument("--lambda2", type=float, default=1.1)
    f.add_argument("--J", type=int, default=10)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_family)

    j = parser("jones", help="per-point Jones profiles")
    j.add_argument("--measure", required=True)
    j.add_argument("--family", required=True)
    j.add_argument("--points", required=True)
    j.add_argument("--r", type=float, default=None)
    j.add_argument("--slope-threshold", type=float,
                   default=jones.DEFAULT_SLOPE_THRESHOLD)
    j.add_argument("--out", required=True)
    j.set_defaults(func=cmd_jones)

    c = parser("curve", help="construct a curve through a hierarchy")
    c.add_argument("--hierarchy", required=True)
    c.add_argument("--epsilon", type=float, default=curve.EPS_DEFAULT)
    c.add_argument("--out", required=True)
    c.add_argument("--svg", default=None)
    c.set_defaults(func=cmd_curve)

    t = parser("trees", help="core families, ball tree, localization")
    t.add_argument("--measure", required=True)
    t.add_argument("--family", required=True)
    t.add_argument("--offset", type=int, default=0)
    t.add_argument("--top-index", type=int, default=0)
    t.add_argument("--c", type=float, default=None)
    t.add_argument("--N", type=float, default=10.0)
    t.add_argument("--eps", type=float, default=0.1)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_trees)

    k = parser("cones", help="Lipschitz-graph classification")
    k.add_argument("--measure", required=True)
    k.add_argument("--m", type=int, default=1)
    k.add_argument("--ratio-threshold", type=float, default=0.05)
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_cones)

    r = parser("run", help="full pipeline from a TOML config")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_run)

    v = parser("render", help="re-render a gamma file as SVG")
    v.add_argument("--gamma", required=True)
    v.add_argument("--hierarchy", required=True)
    v.add_argument("--axes", default="0,1")
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    # values after the subcommand win over the global position
    args.seed = getattr(args, "seed", args.seed_global)
    args.threads = getattr(args, "threads", args.threads_global)
    args.out_dir = getattr(args, "out_dir", args.out_dir_global)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing file {exc.filename}", file=sys.stderr)
        return 2
    except Exception as exc:  # computation failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
