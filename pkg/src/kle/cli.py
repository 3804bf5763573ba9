"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 fit finished with degraded points,
3 every point failed.
"""
import argparse
import sys

import numpy as np

from . import io
from .adaptation import ActivationFunction, ViaPointTarget, kle_fit_adapted
from .errors import FitFailedError, KLEError, SchemaError
from .experiments import (REFERENCE_VALUES, error_extrinsic_mean_sphere, error_mse_sphere,
                          error_spd, synth_spd_dataset)
from .generation import GenerationSpec, generate_trajectories
from .regression import Kernel, QueryGrid, SolverOptions, bandwidth_cv, curve_mean, kle_fit

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEGRADED = 2
EXIT_FAILED = 3


class InputError(Exception):
    """Bad flags or inconsistent input files."""


def _err(msg):
    print(f"kle: error: {msg}", file=sys.stderr)


def _parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse number list {text!r}") from exc


def _grid(T, extra_times=()):
    if T < 1:
        raise InputError("--grid must be at least 1")
    t = QueryGrid.equidistant(T).times
    if len(extra_times):
        t = np.union1d(t, np.asarray(extra_times, dtype=float))
    return QueryGrid(t)


def _options(args):
    return SolverOptions(tol=args.tol, max_iter=args.max_iter, warm_start=args.warm_start)


def _solver_config(args):
    return {"tol": args.tol, "max_iter": args.max_iter, "warm_start": bool(args.warm_start)}


def _finish(curve, label="fit"):
    nd, nf = curve.n_degraded, curve.n_failed
    if nd or nf:
        for d in curve.diagnostics:
            if d["status"] != "ok":
                print(f"  t={d['t']:.6g} {d['status']}: {d['message']}", file=sys.stderr)
        print(f"{label}: {len(curve)} points, {nd} degraded, {nf} failed", file=sys.stderr)
        return EXIT_DEGRADED
    print(f"{label}: {len(curve)} points ok")
    return EXIT_OK


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------

def cmd_fit(args):
    ds = io.load_dataset(args.input)
    extra = io.load_truth(args.times_from)[0] if args.times_from else ()
    grid = _grid(args.grid, extra)
    opts = _options(args)
    config = {"grid": args.grid, **_solver_config(args)}
    if args.cv:
        cands = _parse_floats(args.cv)
        if any(h <= 0 for h in cands):
            raise InputError("bandwidth candidates must be positive")
        res = bandwidth_cv(ds, cands, opts)
        h = res.best
        config["cv"] = res.table
        print(f"cross-validated bandwidth: {h!r}")
    elif args.bandwidth is not None:
        h = args.bandwidth
    else:
        raise InputError("give --bandwidth or --cv")
    try:
        kernel = Kernel(h)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    curve = kle_fit(ds, grid, kernel, opts)
    curve.config.update(config)
    io.save_fit(curve, args.out)
    return _finish(curve)


def _target_from_doc(doc, k, family, n_traj):
    pointer = f"/targets/{k}"
    try:
        params = family.params_from_dict(doc["params"])
    except (KeyError, ValueError, KLEError) as exc:
        raise SchemaError(f"parameters do not match the {family.tag} family: {exc}",
                          pointer + "/params") from exc
    act = doc.get("activation")
    try:
        return ViaPointTarget(
            t_star=float(doc["t_star"]), params=params,
            s_count=int(doc.get("s_count", 10 * n_traj)),
            g=float(doc.get("g", 0.25)),
            activation=None if act is None else ActivationFunction.from_dict(act),
            seed=int(doc.get("seed", 0)))
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc), pointer) from exc


def cmd_adapt(args):
    ds = io.load_dataset(args.fit_input)
    tdoc = io.read_json(args.target, "target")
    targets = [_target_from_doc(d, k, ds.family, ds.n_trajectories)
               for k, d in enumerate(tdoc["targets"])]
    grid = _grid(args.grid, [tg.t_star for tg in targets])
    opts = _options(args)
    try:
        kernel = Kernel(args.bandwidth)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    curve = kle_fit_adapted(ds, targets, grid, kernel, opts)
    curve.config.update({"grid": args.grid, **_solver_config(args),
                         "targets": tdoc["targets"]})
    io.save_fit(curve, args.out)
    means = curve_mean(curve)
    fam = ds.family
    for tg in targets:
        k = int(np.argmin(np.abs(curve.times - tg.t_star)))
        target_mean = fam.mean(tg.params)[0]
        got = "failed" if means[k] is None else np.array2string(np.asarray(means[k]), precision=6)
        print(f"t*={tg.t_star:.6g}: adapted mean {got}; target "
              f"{np.array2string(np.asarray(target_mean), precision=6)}")
    return _finish(curve, "adapt")


def cmd_generate(args):
    curve = io.load_fit(args.fit)
    if args.count < 0:
        raise InputError("--count must be nonnegative")
    kernel = Kernel(args.bandwidth) if args.bandwidth else None
    spec = GenerationSpec(n_resample=args.n_resample, kernel=kernel, seed=args.seed)
    trajs = generate_trajectories(curve, spec, args.count) if args.count else []
    fam = curve.family
    io.write_json(args.out, io.trajectories_doc(fam.tag, fam.dim, trajs))
    print(f"generated {len(trajs)} trajectories")
    return EXIT_OK


def cmd_synth_spd(args):
    truth, ds = synth_spd_dataset(args.m_steps, args.n_per_step, args.seed)
    io.save_dataset(ds, args.out)
    io.write_json(args.truth, truth.to_dict())
    print(f"wrote {ds.n_trajectories} trajectories x {truth.times.size} times")
    return EXIT_OK


def _plot_rows(curve, rng, n_env):
    """Per-time mean, spectra and a sampled dispersion envelope."""
    fam = curve.family
    header, rows = None, []
    for t, p in zip(curve.times, curve.params):
        if p is None:
            continue
        mean = np.asarray(fam.mean(p)[0], dtype=float)
        cols = {"t": float(t)}
        cols.update({f"mean_{i}": v for i, v in enumerate(mean.ravel())})
        if fam.tag == "euclidean":
            sd = np.sqrt(np.clip(np.diag(p.sigma), 0, None))
            cols.update({f"sd_{i}": v for i, v in enumerate(sd)})
            cols.update({f"lower_{i}": v for i, v in enumerate(mean - 1.5 * sd)})
            cols.update({f"upper_{i}": v for i, v in enumerate(mean + 1.5 * sd)})
        elif fam.tag == "spd":
            cols.update({f"mean_eig_{i}": v for i, v in enumerate(np.linalg.eigvalsh(p.m)[::-1])})
            cols.update({f"sigma_eig_{i}": v
                         for i, v in enumerate(np.linalg.eigvalsh(p.sigma)[::-1])})
        elif fam.tag == "axial":
            cols.update({f"lambda_eig_{i}": v for i, v in enumerate(p.eigenvalues)})
        if n_env:
            dist = fam.distance(mean, fam.sample(p, n_env, rng))
            cols["envelope_q50"], cols["envelope_q95"] = (float(v) for v in
                                                          np.quantile(dist, [0.5, 0.95]))
        header = header or list(cols)
        rows.append([cols[k] for k in header])
    return header or ["t"], rows


def cmd_eval(args):
    curve = io.load_fit(args.fit)
    means = curve_mean(curve)
    metric = args.metric
    if metric == "espd":
        if not args.truth:
            raise InputError("--metric espd needs --truth")
        if curve.family.tag != "spd":
            raise InputError("espd needs an SPD fit")
        t_truth, m_truth = io.load_truth(args.truth)
        value, times, contrib = error_spd(curve.times, means, t_truth, m_truth)
        ref = REFERENCE_VALUES["spd2"]
    else:
        if not args.dataset:
            raise InputError(f"--metric {metric} needs --dataset")
        ds = io.load_dataset(args.dataset)
        if ds.manifold != curve.family.tag or ds.manifold not in ("sphere", "axial"):
            raise InputError("e1/e2 need a sphere or axial fit and a matching dataset")
        if metric == "e1":
            value, times, contrib = error_mse_sphere(curve.times, means, ds,
                                                     axial=ds.manifold == "axial")
        else:
            if ds.manifold != "sphere":
                raise InputError("e2 is defined for sphere data")
            value, times, contrib = error_extrinsic_mean_sphere(curve.times, means, ds)
        ref = REFERENCE_VALUES["letter_b"]
    print(f"{metric} = {value!r}")
    refs = ", ".join(f"{k} {v[metric]}" for k, v in ref.items() if metric in v)
    if refs:
        print(f"reference values: {refs}")
    if args.csv:
        io.write_csv(args.csv, ["t", metric], zip(times.tolist(), contrib.tolist()))
    if args.plot_csv:
        header, rows = _plot_rows(curve, np.random.default_rng(args.seed), args.envelope_samples)
        io.write_csv(args.plot_csv, header, rows)
    return EXIT_OK


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------

def _solver_flags(p):
    p.add_argument("--tol", type=float, default=1e-4, help="ACG stopping tolerance")
    p.add_argument("--max-iter", type=int, default=None, help="iteration cap for ACG/ESAG")
    p.add_argument("--warm-start", action="store_true",
                   help="chain iterative solutions along the grid (single worker only)")


def build_parser():
    parser = argparse.ArgumentParser(prog="kle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a KLE model to a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--cv", help="comma-separated candidate bandwidths")
    p.add_argument("--grid", type=int, default=100, help="number of equidistant query times")
    p.add_argument("--times-from", help="truth JSON whose times are added to the grid")
    p.add_argument("--out", required=True)
    _solver_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("adapt", help="fit with via-point targets")
    p.add_argument("--fit-input", required=True, help="dataset JSON")
    p.add_argument("--target", required=True)
    p.add_argument("--bandwidth", type=float, required=True)
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--out", required=True)
    _solver_flags(p)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("generate", help="sample smooth trajectories from a fit")
    p.add_argument("--fit", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-resample", type=int, default=120)
    p.add_argument("--bandwidth", type=float, help="smoothing bandwidth (default: the fit's)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("synth-spd", help="synthetic Sym+(2) dataset with ground truth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m-steps", type=int, default=15)
    p.add_argument("--n-per-step", type=int, default=30)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_synth_spd)

    p = sub.add_parser("eval", help="evaluate a fit (e1, e2 or espd)")
    p.add_argument("--fit", required=True)
    p.add_argument("--truth")
    p.add_argument("--dataset")
    p.add_argument("--metric", choices=["e1", "e2", "espd"], required=True)
    p.add_argument("--csv", help="per-time contributions")
    p.add_argument("--plot-csv", help="means, spectra and dispersion envelope per time")
    p.add_argument("--envelope-samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FitFailedError as exc:
        _err(str(exc))
        return EXIT_FAILED
    except (SchemaError, InputError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except KLEError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
