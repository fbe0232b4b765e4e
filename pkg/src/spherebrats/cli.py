"""Run single stages of the tumor segmentation and survival pipeline on NIfTI and CSV files.

Exit codes: 0 success, 1 validation error, 2 I/O or file-format error.
Diagnostics go to stderr; results only to the named output files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import metrics, nifti, postproc, spherical, survival
from .volume import LabelVolume

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def print_help(self, file=None):
        super().print_help(file or sys.stderr)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _check_paths(inputs, outputs) -> None:
    """Inputs must exist; outputs must not alias an input and need an existing directory."""
    resolved = set()
    for p in inputs:
        p = Path(p)
        if not p.is_file():
            raise FileNotFoundError(f"input file not found: {p}")
        resolved.add(p.resolve())
    seen = set()
    for p in outputs:
        if p is None:
            continue
        r = Path(p).resolve()
        if r in resolved:
            raise UsageError(f"refusing to overwrite input file {p}")
        if r in seen:
            raise UsageError(f"output path given twice: {p}")
        seen.add(r)
        if not r.parent.is_dir():
            raise FileNotFoundError(f"output directory does not exist: {r.parent}")


def _load_labels(path) -> LabelVolume:
    return nifti.load(path, as_labels=True)


# ---------------------------------------------------------------------------
# transform


def cmd_to_spherical(args):
    _check_paths([args.input] + ([args.mask] if args.mask else []), [args.out, args.meta])
    vol = nifti.load(args.input)
    if args.origin is not None:
        origin = tuple(args.origin)
    elif args.mask:
        coarse = _load_labels(args.mask)
        if coarse.dims != vol.dims:
            raise UsageError(f"mask dims {coarse.dims} differ from image dims {vol.dims}")
        origin = spherical.origin_from_mask(coarse)
    else:
        origin = tuple((n - 1) / 2 for n in vol.dims)
    grid = spherical.default_grid(vol.dims, vol.spacing, origin)
    svol = spherical.to_spherical(vol, grid, None if args.mode == "auto" else args.mode)
    spherical.save_spherical(svol, args.out, args.meta)


def cmd_to_cartesian(args):
    _check_paths([args.input, args.meta], [args.out])
    svol = spherical.load_spherical(args.input, args.meta)
    out = spherical.to_cartesian(svol, mode=None if args.mode == "auto" else args.mode)
    nifti.save(out, args.out, None if isinstance(out, LabelVolume) else nifti.DT_FLOAT32)


# ---------------------------------------------------------------------------
# postproc / ensemble


def cmd_wt_filter(args):
    _check_paths([args.spherical, args.cartesian], [args.out])
    out = postproc.cartesian_wt_filter(_load_labels(args.spherical), _load_labels(args.cartesian))
    nifti.save(out, args.out)


def cmd_intersect3ch(args):
    _check_paths([args.a, args.b], [args.out])
    nifti.save(postproc.intersect_3ch(_load_labels(args.a), _load_labels(args.b)), args.out)


def cmd_et_clean(args):
    _check_paths([args.input], [args.out])
    params = postproc.EtCleanupParams(args.min_voxels, args.iterations, args.connectivity)
    nifti.save(postproc.et_restore_or_erase(_load_labels(args.input), params), args.out)


def cmd_ensemble_merge(args):
    _check_paths([args.et_source, args.wt_tc_source], [args.out])
    out = postproc.ensemble_merge(_load_labels(args.et_source), _load_labels(args.wt_tc_source))
    nifti.save(out, args.out)


# ---------------------------------------------------------------------------
# metrics


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def cmd_metrics_evaluate(args):
    _check_paths([args.pred, args.truth], [args.report, args.csv])
    case_id = args.id if args.id is not None else Path(args.pred).name.split(".")[0]
    case = metrics.evaluate_case(_load_labels(args.pred), _load_labels(args.truth), case_id)
    _write_json(args.report, metrics.report([case]))
    if args.csv:
        Path(args.csv).write_text(metrics.report_csv([case]))


def cmd_metrics_summarize(args):
    _check_paths(args.reports, [args.out, args.csv])
    cases = []
    for path in args.reports:
        doc = json.loads(Path(path).read_text())
        entries = doc.get("cases", [doc]) if isinstance(doc, dict) else doc
        cases.extend(metrics.CaseMetrics.from_dict(e) for e in entries)
    _write_json(args.out, metrics.report(cases))
    if args.csv:
        Path(args.csv).write_text(metrics.report_csv(cases))


# ---------------------------------------------------------------------------
# survival


def _labeled(clinical):
    return [r for r in clinical if r.os_days is not None]


def cmd_survival_fit(args):
    _check_paths([args.features], [args.model])
    features, clinical = survival.read_feature_csv(args.features)
    model = survival.fit_submodel(features, _labeled(clinical), args.components, args.power)
    Path(args.model).write_text(survival.models_to_json([model], n_components=args.components, power=args.power))


def cmd_survival_predict(args):
    _check_paths([args.features] + args.model, [args.out])
    features, clinical = survival.read_feature_csv(args.features)
    families = [survival.models_from_json(Path(p).read_text()) for p in args.model]
    pred = survival.ensemble_predict(families, features, clinical)
    Path(args.out).write_text(survival.predictions_csv([r.case_id for r in clinical], pred))


def cmd_survival_cv(args):
    _check_paths([args.features], [args.report, args.model_out, args.predictions])
    features, clinical = survival.read_feature_csv(args.features)
    res = survival.cross_validate(features, _labeled(clinical), args.components, args.power, args.folds, args.seed)
    _write_json(args.report, res.to_dict())
    if args.model_out:
        Path(args.model_out).write_text(
            survival.models_to_json(res.submodels, n_components=args.components, power=args.power))
    if args.predictions:
        Path(args.predictions).write_text(survival.predictions_csv(res.case_ids, res.predictions))


def cmd_survival_grid(args):
    _check_paths([args.features], [args.report])
    if args.components_min > args.components_max:
        raise UsageError("--components-min must not exceed --components-max")
    features, clinical = survival.read_feature_csv(args.features)
    res = survival.grid_search(
        features, _labeled(clinical),
        range(args.components_min, args.components_max + 1), args.powers,
        seed=args.seed, n_folds=args.folds, n_jobs=args.jobs,
    )
    _write_json(args.report, res.to_dict())


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spherebrats", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", metavar="{transform,postproc,ensemble,metrics,survival}",
                                   parser_class=_Parser)
    groups.required = True

    def group(name, help_):
        sub = groups.add_parser(name, help=help_).add_subparsers(dest="command", parser_class=_Parser)
        sub.required = True
        return sub

    tr = group("transform", "spherical <-> Cartesian resampling")
    p = tr.add_parser("to-spherical", help="resample a NIfTI volume onto a spherical grid")
    p.add_argument("--in", dest="input", required=True, help="Cartesian NIfTI image or label map")
    p.add_argument("--out", required=True, help="spherical NIfTI output (n_rho, n_theta, n_phi)")
    p.add_argument("--meta", required=True, help="JSON sidecar output")
    p.add_argument("--mask", help="coarse segmentation; origin is picked inside its whole tumor")
    p.add_argument("--origin", type=float, nargs=3, metavar=("X", "Y", "Z"),
                   help="explicit origin in voxel coordinates")
    p.add_argument("--mode", choices=("auto", "trilinear", "nearest"), default="auto",
                   help="interpolation; auto = nearest for label maps, trilinear otherwise")
    p.set_defaults(func=cmd_to_spherical)

    p = tr.add_parser("to-cartesian", help="resample a spherical volume back onto its source grid")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--meta", required=True, help="JSON sidecar written by to-spherical")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("auto", "trilinear", "nearest"), default="auto")
    p.set_defaults(func=cmd_to_cartesian)

    pp = group("postproc", "segmentation post-processing")
    p = pp.add_parser("wt-filter", help="erase spherical-model voxels outside the Cartesian whole tumor")
    p.add_argument("--spherical", required=True)
    p.add_argument("--cartesian", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wt_filter)

    p = pp.add_parser("intersect3ch", help="per-region intersection of two segmentations")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_intersect3ch)

    defaults = postproc.EtCleanupParams()
    p = pp.add_parser("et-clean", help="opening + small-spot filter; keep ET or relabel it as necrosis")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-voxels", type=int, default=defaults.min_component_voxels)
    p.add_argument("--iterations", type=int, default=defaults.opening_iterations)
    p.add_argument("--connectivity", type=int, choices=(6, 26), default=defaults.connectivity)
    p.set_defaults(func=cmd_et_clean)

    en = group("ensemble", "combine segmentations of different models")
    p = en.add_parser("merge", help="ET from one model, TC/WT from another")
    p.add_argument("--et-source", required=True)
    p.add_argument("--wt-tc-source", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble_merge)

    me = group("metrics", "segmentation evaluation")
    p = me.add_parser("evaluate", help="Dice, sensitivity, specificity and HD95 per region")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--report", required=True, help="JSON report output")
    p.add_argument("--csv", help="optional CSV output")
    p.add_argument("--id", help="case id (default: prediction file stem)")
    p.set_defaults(func=cmd_metrics_evaluate)

    p = me.add_parser("summarize", help="cohort statistics over case reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_metrics_summarize)

    su = group("survival", "overall-survival prediction")

    def features_arg(p):
        p.add_argument("--features", required=True,
                       help="CSV with case_id,age,resection,os_days,f0,...")

    def model_args(p):
        p.add_argument("--components", type=int, default=survival.DEFAULT_COMPONENTS)
        p.add_argument("--power", type=float, default=survival.DEFAULT_POWER)

    p = su.add_parser("fit", help="fit PCA + Tweedie GLM on all labeled cases")
    features_arg(p)
    model_args(p)
    p.add_argument("--model", required=True, help="model JSON output")
    p.set_defaults(func=cmd_survival_fit)

    p = su.add_parser("predict", help="predict with one or more model files (averaged)")
    features_arg(p)
    p.add_argument("--model", nargs="+", required=True)
    p.add_argument("--out", required=True, help="prediction CSV output")
    p.set_defaults(func=cmd_survival_predict)

    p = su.add_parser("cv", help="k-fold cross-validation")
    features_arg(p)
    model_args(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True)
    p.add_argument("--model-out", help="write the per-fold sub-models as one model file")
    p.add_argument("--predictions", help="holdout prediction CSV")
    p.set_defaults(func=cmd_survival_cv)

    p = su.add_parser("grid-search", help="search components x power by CV accuracy")
    features_arg(p)
    p.add_argument("--components-min", type=int, default=2)
    p.add_argument("--components-max", type=int, default=60)
    p.add_argument("--powers", type=float, nargs="+", default=list(survival.DEFAULT_POWERS))
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_survival_grid)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except nifti.NiftiRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, nifti.NiftiError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main():
    sys.exit(run())
