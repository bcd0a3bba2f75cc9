"""almostlip: covering, embedding and probe-map checks on finite point clouds.

Every subcommand writes one JSON report (stdout or ``--output``) plus
two-column TSV plot files next to it. Exit codes: 0 pass, 1 a checked
property failed, 2 usage or input error.
"""

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .covering import box_counting_estimate, default_eps_range, fit_homogeneity
from .embedding import build_embedding, pair_table, verify_image_invariance, verify_lower_bound
from .errors import AlmostLipError, ConditioningError, InvariantViolation, UsageError
from .functionals import annulus_margin, stack_frames
from .generators import SHAPES, GeneratorSpec, generate
from .metric import NORM_KINDS, difference_set, enclosing_radius
from .prevalence import (
    ExperimentConfig,
    ProbeContext,
    check_summability,
    holder_threshold,
    prevalence_sweep,
    verify_holder,
)
from .probe import lipschitz_bound, sample_matrices, sample_probe, verify_lemma_1_6
from .report import RunReport, atomic_write, cloud_digest, load_cloud, load_distance_matrix, save_cloud, tsv

SEED_ENV = "ALMOSTLIP_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _default_seed():
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    return conv


def _param(text):
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    if key == "norm":
        return key, val
    try:
        num = float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"value for {key} is not numeric") from None
    return key, int(num) if num.is_integer() else num


def _add_io(p, need_input=True):
    src = p.add_mutually_exclusive_group(required=need_input)
    src.add_argument("--input", help="cloud as JSON or headerless CSV")
    src.add_argument("--distance-matrix", help="CSV distance matrix (embedded isometrically in sup norm)")
    p.add_argument("--norm", choices=NORM_KINDS, help="norm for CSV input (overrides JSON)")
    _add_common(p)


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help=f"base seed (default ${SEED_ENV} or 0)")
    p.add_argument("--output", help="report path (default stdout)")
    p.add_argument("--timing", action="store_true", help="record wall time (breaks byte-identical reruns)")


def build_parser():
    parser = _Parser(prog="almostlip", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic cloud")
    p.add_argument("--shape", choices=SHAPES, required=True)
    p.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", required=True, help="cloud path (.json or .csv)")
    _add_common(p)

    p = sub.add_parser("dim", help="box-counting dimension")
    _add_io(p)
    p.add_argument("--eps-hi", type=_positive(float), help="default: half the diameter")
    p.add_argument("--eps-lo", type=_positive(float), help="default: twice the resolution")
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--difference-set", action="store_true", help="estimate on X - X")
    p.add_argument("--expect", type=float, help="fail unless |value - expect| <= tol")
    p.add_argument("--tol", type=_positive(float), default=0.15)

    p = sub.add_parser("homog", help="almost-homogeneity fit of X - X")
    _add_io(p)
    p.add_argument("--origin", action="store_true", help="balls centred at 0 only")
    p.add_argument("--max-centers", type=_positive(int), default=16)
    p.add_argument("--penalty", type=_positive(float), default=1e-3)

    p = sub.add_parser("frames", help="per-scale norming frames")
    _add_io(p)
    p.add_argument("--n-max", type=_positive(int))

    p = sub.add_parser("embed", help="multi-scale embedding and its distortion checks")
    _add_io(p)
    p.add_argument("--delta", type=_positive(float), default=2.0)
    p.add_argument("--tolerance", type=_positive(float), default=0.5)

    p = sub.add_parser("probe", help="sample one probe map")
    _add_io(p)
    p.add_argument("--gamma", type=float, default=1.5)
    p.add_argument("--k", type=_positive(int), default=4)
    p.add_argument("--n-max", type=_positive(int))

    p = sub.add_parser("lemma16", help="Monte-Carlo small-ball probability against its bound")
    _add_io(p)
    p.add_argument("--gamma", type=float, default=1.5)
    p.add_argument("--k", type=_positive(int), default=1)
    p.add_argument("--n", type=_positive(int), required=True, help="scale of the bound")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--trials", type=_positive(int), default=10000)
    p.add_argument("--element", type=int, help="difference-set index of x (default: first in the scale-n annulus)")

    p = sub.add_parser("prevalence", help="Q_n table, summability and probe pass-rates")
    _add_io(p)
    p.add_argument("--delta", type=_positive(float), default=3.0)
    p.add_argument("--gamma", type=float, default=1.5)
    p.add_argument("--N", type=_positive(int), help="target dimension (default: smallest admissible)")
    p.add_argument("--trials", type=_positive(int), default=200)
    p.add_argument("--holder-k", type=_positive(int), default=4)
    p.add_argument("--theta-fraction", type=_positive(float), default=0.8)
    p.add_argument("--min-pass-rate", type=float, default=0.9)
    return parser


def _cloud(args):
    if args.distance_matrix:
        return load_distance_matrix(args.distance_matrix)
    return load_cloud(args.input, args.norm)


def _config(args):
    skip = {"command", "output", "timing", "seed"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _plot(args, name, rows, header, written):
    if not args.output:
        return
    stem = os.path.splitext(args.output)[0]
    path = f"{stem}.{name}.tsv"
    atomic_write(path, tsv(rows, header))
    written.append(os.path.basename(path))


def cmd_gen(args, rep, plots):
    spec = GeneratorSpec(args.shape, dict(args.param), rep.seed)
    try:
        cloud = generate(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    save_cloud(cloud, args.out)
    # digest what a reader will see after round-tripping the file
    rep.input_digest = None
    rep.outputs.update(digest=cloud_digest(load_cloud(args.out, cloud.norm_kind)), n=cloud.n, dim=cloud.dim,
                       label=cloud.label, params=spec.resolved())
    if spec.shape == "two_scale_cluster":
        rep.streams["sites_and_offsets"] = "default_rng(seed)"


def cmd_dim(args, rep, plots, cloud):
    target = difference_set(cloud) if args.difference_set else cloud
    rng = default_eps_range(target) if args.eps_hi is None or args.eps_lo is None else None
    if rng is None and (args.eps_hi is None or args.eps_lo is None):
        raise UsageError("cloud too small for a default scale range; pass --eps-hi and --eps-lo")
    hi = args.eps_hi if args.eps_hi is not None else rng[0]
    lo = args.eps_lo if args.eps_lo is not None else rng[1]
    if not lo < hi:
        raise UsageError(f"need eps-lo < eps-hi, got {lo} >= {hi}")
    if args.steps < 3:
        raise UsageError("need --steps >= 3")
    est = box_counting_estimate(target, hi, lo, args.steps)
    rep.outputs["dimension"] = est.to_dict()
    _plot(args, "counts", zip(est.scales_used, est.counts), ("eps", "count"), plots)
    if args.expect is not None and abs(est.value - args.expect) > args.tol:
        rep.passed = False
        rep.messages.append(f"slope {est.value:.4f} outside {args.expect} +- {args.tol}")


def cmd_homog(args, rep, plots, cloud):
    z = difference_set(cloud)
    p = fit_homogeneity(z, args.origin, penalty=args.penalty, max_centers=args.max_centers, seed=rep.seed)
    rep.outputs["homogeneity"] = p.to_dict()
    if not args.origin:
        rep.streams["ball_centres"] = "default_rng(seed) subsample of X - X, origin always included"
    _plot(args, "envelope", [(c, p.envelope(r, q)) for (r, q), c in zip(p.scale_grid, p.counts)],
          ("count", "envelope"), plots)
    if not p.envelope_holds():
        rep.passed = False
        rep.messages.append("fitted envelope lies below a measured count")


def _stack(cloud, n_max=None):
    z = difference_set(cloud)
    R = enclosing_radius(z)
    return z, R, stack_frames(z, R, n_max)


def cmd_frames(args, rep, plots, cloud):
    try:
        z, R, frames = _stack(cloud, args.n_max)
    except InvariantViolation as exc:
        rep.passed = False
        rep.messages.append(str(exc))
        return
    rep.outputs.update(
        R=R,
        scales=[{"n": f.n, "m_n": f.m_n, "radius": f.radius, "annulus_margin": annulus_margin(z, f)} for f in frames],
    )
    _plot(args, "m_n", [(f.n, f.m_n) for f in frames], ("n", "m_n"), plots)


def cmd_embed(args, rep, plots, cloud):
    z, R, frames = _stack(cloud)
    emap = build_embedding(cloud, args.delta, frames)
    src = fit_homogeneity(z, True)
    low = verify_lower_bound(emap, cloud, homogeneity=src)
    img, ok = verify_image_invariance(emap, cloud, src, args.delta, args.tolerance)
    rep.outputs.update(
        target_dim=emap.target_dim,
        op_norm_bound=emap.op_norm_bound,
        source_homogeneity=src.to_dict(),
        lower_bound=low.to_dict(),
        image_homogeneity=img.to_dict(),
        image_invariance_pass=ok,
    )
    _, _, d, im = pair_table(cloud, emap.matrix)
    keep = d > 0
    _plot(args, "distortion", zip(d[keep], im[keep] / d[keep]), ("distance", "image_ratio"), plots)
    if low.violations or not ok:
        rep.passed = False
        rep.messages.append(f"lower-bound violations {low.violations}, image invariance {'pass' if ok else 'fail'}")


def _gamma(args):
    if not args.gamma > 1:
        raise UsageError("--gamma must exceed 1")


def cmd_probe(args, rep, plots, cloud):
    _gamma(args)
    ctx = ProbeContext.build(cloud)
    ps = sample_probe(ctx.seq, args.gamma, args.k, args.n_max, rep.seed)
    rep.outputs.update(probe=ps.to_dict(), d_n=ctx.seq.d, lipschitz_bound=lipschitz_bound(ctx.seq, args.gamma, args.k))
    rep.streams["row_i"] = "SeedSequence([seed, i])"


def cmd_lemma16(args, rep, plots, cloud):
    _gamma(args)
    if args.eps < 0:
        raise UsageError("--eps must be nonnegative")
    ctx = ProbeContext.build(cloud)
    if args.n not in ctx.scales:
        raise UsageError(f"scale {args.n} not in 1..{max(ctx.scales)}")
    if args.element is not None:
        if not 0 <= args.element < len(ctx.z):
            raise UsageError(f"--element must lie in [0, {len(ctx.z)})")
        e = args.element
    else:
        ann = ctx.annulus(args.n)
        if ann.size == 0:
            raise UsageError(f"annulus at scale {args.n} is empty; pass --element")
        e = int(ann[0])
    res = verify_lemma_1_6(ctx.seq, args.gamma, args.k, ctx.z.elements[e], n=args.n, eps=args.eps,
                           trials=args.trials, seed=rep.seed)
    rep.outputs.update(result=res.to_dict(), element=e, within_bound=res.within(),
                       within_variant=bool(res.empirical <= res.variant_bound))
    rep.streams["row_i"] = "SeedSequence([seed, i]), one batched draw per scale"
    if not res.within():
        rep.messages.append("empirical above bound + 3 standard errors")
    if res.empirical > res.variant_bound:
        rep.passed = False


def cmd_prevalence(args, rep, plots, cloud):
    _gamma(args)
    ctx = ProbeContext.build(cloud)
    params = fit_homogeneity(ctx.z, True)
    base = ExperimentConfig(args.delta, args.gamma, 1, trials=args.trials, seed=rep.seed)
    N = args.N or check_summability([], base, params).N_required
    if not isinstance(N, int):
        rep.passed = False
        rep.outputs["summability"] = check_summability([], base, params).to_dict()
        rep.messages.append("no admissible N: delta <= (alpha + beta)/2 + gamma")
        return
    cfg = base.with_N(N)
    sweep = prevalence_sweep(cloud, cfg, params, [N, 2 * N], ctx=ctx)
    d_B = box_counting_estimate(ctx.z, *default_eps_range(ctx.z), 8).value
    thr = holder_threshold(args.holder_k, d_B)
    holder = {"d_B": d_B, "threshold": thr, "k": args.holder_k}
    if thr > 0:
        theta = args.theta_fraction * thr
        mats = sample_matrices(ctx.seq, args.gamma, args.holder_k, args.trials, [rep.seed, 1])
        ok = [verify_holder(m, cloud, theta, d_B).passed for m in mats]
        holder.update(theta=theta, pass_rate=float(np.mean(ok)))
    out = sweep.to_dict()
    out["holder"] = holder
    out["homogeneity"] = params.to_dict()
    rep.outputs.update(out)
    rep.streams.update(wem_row_i="SeedSequence([seed, i])", holder_row_i="SeedSequence([seed, 1, i])")
    _plot(args, "qn", [(q.n, q.empirical_measure) for q in sweep.qn if not q.empty], ("n", "mu_Qn"), plots)
    _plot(args, "wem", [(i, float(c)) for i, c in enumerate(sweep.wem_constants[N])], ("trial", "lower_constant"), plots)
    rate = sweep.pass_rates[N]
    if rate < args.min_pass_rate or not sweep.monotone:
        rep.passed = False
        rep.messages.append(f"lower-bound pass-rate {rate:.3f}, monotone {sweep.monotone}")
    if holder.get("pass_rate", 1.0) < args.min_pass_rate:
        rep.passed = False
        rep.messages.append(f"Hoelder pass-rate {holder['pass_rate']:.3f}")


COMMANDS = {
    "dim": cmd_dim,
    "homog": cmd_homog,
    "frames": cmd_frames,
    "embed": cmd_embed,
    "probe": cmd_probe,
    "lemma16": cmd_lemma16,
    "prevalence": cmd_prevalence,
}


def run(argv=None):
    """Parse, execute and return ``(exit_code, report_text)``; the report may be ``None`` on usage errors."""
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        seed = args.seed if args.seed is not None else _default_seed()
        rep = RunReport(args.command, _config(args), None, seed)
        if args.output and not os.path.isdir(os.path.dirname(os.path.abspath(args.output))):
            raise UsageError(f"output directory of {args.output} does not exist")
        plots = []
        if args.command == "gen":
            cmd_gen(args, rep, plots)
        else:
            cloud = _cloud(args)
            rep.input_digest = cloud_digest(cloud)
            COMMANDS[args.command](args, rep, plots, cloud)
        if plots:
            rep.outputs["plot_files"] = plots
        if args.timing:
            rep.wall_time = time.perf_counter() - t0
        text = rep.render()
    except UsageError as exc:
        print(f"almostlip {args.command}: {exc}", file=sys.stderr)
        return 2, None
    except (InvariantViolation, ConditioningError) as exc:
        # the run could not certify its property: an assertion failure, not a usage error
        print(f"almostlip {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1, None
    except (AlmostLipError, ValueError) as exc:
        # library preconditions are ValueErrors: bad parameters for this input
        print(f"almostlip {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2, None
    except OSError as exc:
        print(f"almostlip {args.command}: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 2, None
    if args.output:
        try:
            atomic_write(args.output, text)
        except OSError as exc:
            print(f"almostlip {args.command}: cannot write {args.output}: {exc.strerror}", file=sys.stderr)
            return 2, None
    else:
        sys.stdout.write(text)
    return (0 if rep.passed else 1), text


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
