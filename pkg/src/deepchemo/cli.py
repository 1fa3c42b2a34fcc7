"""Command-line front end: ingestion -> extraction -> regression -> reports.

Subcommands: extract, compress, cv, train, predict, fuse, report.

Exit codes: 0 success, 1 usage error, 2 input error, 3 partial per-item
failure.  Flags may be preloaded from a `key=value` file via --config;
explicit flags win.  Set DEEPCHEM_NO_TIMESTAMP=1 for timestamp-free SVGs.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import archive as arch
from . import cube as cubemod
from . import dataio, netgraph, svgplot
from .imageprep import decode_image_file, normalize, NormalizationStats, resize_bilinear
from .pls import (
    FoldSpec,
    PlsError,
    cross_validate,
    load_model,
    metrics,
    pls_fit,
    pls_predict,
    save_model,
    select_lv,
)
from .sopls import load_sopls, save_sopls, sopls_cv, sopls_fit, sopls_predict
from .tensor import Tensor

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_PARTIAL = 3


class InputError(Exception):
    pass


class PartialFailure(Exception):
    pass


def _parse_cv(text: str) -> FoldSpec:
    if text == "loo":
        return FoldSpec("loo")
    if text.startswith("kfold:"):
        parts = text.split(":")
        try:
            k = int(parts[1])
            seed = int(parts[2]) if len(parts) > 2 else 42
        except (IndexError, ValueError):
            raise InputError(f"bad --cv spec {text!r}, expected kfold:K[:SEED]")
        return FoldSpec("kfold", k, seed)
    raise InputError(f"bad --cv spec {text!r}, expected loo or kfold:K:SEED")


def _parse_bands(text: str):
    try:
        r, g, b = (float(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"bad --bands spec {text!r}, expected R,G,B in nm")
    return cubemod.BandTriplet(r, g, b)


def _load_fx(path, tag=""):
    try:
        return dataio.read_features_csv(path, tag)
    except OSError as e:
        raise InputError(str(e))


def _load_resp(path):
    try:
        return dataio.read_response_csv(path)
    except OSError as e:
        raise InputError(str(e))


def _align(X, y):
    """Reorder y to X's id order; unknown/missing ids are input errors."""
    pos = {sid: i for i, sid in enumerate(y.ids)}
    missing = [sid for sid in X.ids if sid not in pos]
    if missing:
        raise InputError(f"ids without response values: {missing[:10]}")
    rows = [pos[sid] for sid in X.ids]
    return y.take(rows)


def _provenance(out_dir, command, args, extra=()):
    pairs = [("command", command)]
    for key in ("features", "features2", "response", "manifest", "model", "archive"):
        path = getattr(args, key, None)
        if path:
            pairs.append((f"{key}_path", path))
            if os.path.exists(path):
                pairs.append((f"{key}_sha256", dataio.sha256_file(path)))
    pairs.extend(extra)
    dataio.write_keyvalues(os.path.join(out_dir, "provenance.txt"), pairs)


# ---------------------------------------------------------------- commands

def cmd_extract(args) -> int:
    try:
        archive = arch.load_archive_file(args.archive)
    except (OSError, arch.ArchiveError) as e:
        raise InputError(f"cannot load archive: {e}")
    graph = netgraph.build_resnet18(archive)
    stats = NormalizationStats(archive.mean, archive.std)
    rows = dataio.read_manifest(args.manifest)

    ids, feats, failures = [], [], []
    for sid, path in rows:
        try:
            img = decode_image_file(path)
            img = resize_bilinear(img, 224, 224)
            tensor = normalize(img, stats, expected_size=(224, 224))
            vec = netgraph.forward(graph, tensor, args.tap)
            ids.append(sid)
            feats.append(vec.values.astype(np.float64))
        except (OSError, ValueError) as e:
            failures.append((sid, str(e)))
            print(f"error: image {sid!r}: {e}", file=sys.stderr)

    width = len(feats[0]) if feats else int(np.prod(netgraph.TAP_DIMS[args.tap]))
    dataio.write_features_csv(args.out, ids, np.array(feats).reshape(len(ids), width))
    dataio.write_keyvalues(args.out + ".meta.txt", [
        ("tap", args.tap),
        ("archive_sha256", dataio.sha256_file(args.archive)),
        ("images_total", len(rows)),
        ("images_failed", len(failures)),
    ])
    if failures:
        raise PartialFailure(f"{len(failures)} of {len(rows)} images failed")
    return EXIT_OK


def cmd_compress(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    rows = dataio.read_manifest(args.manifest)
    triplet = None if args.pca else _parse_bands(args.bands)

    ids, spectra, wavelengths, failures = [], [], None, []
    for sid, path in rows:
        try:
            cube = cubemod.load_cube_file(path)
            result = (cubemod.pca_compress(cube) if args.pca
                      else cubemod.select_bands(cube, triplet))
            for ch, flag in zip("rgb", result.degenerate):
                if flag:
                    print(f"warning: cube {sid!r}: degenerate channel {ch}",
                          file=sys.stderr)
            from .imageprep import encode_ppm
            dataio.atomic_write_bytes(os.path.join(args.out, f"{sid}.ppm"),
                                      encode_ppm(result.image))
            if args.spectra:
                ids.append(sid)
                spectra.append(cubemod.mean_spectrum(cube))
                wavelengths = cube.wavelengths
        except (OSError, ValueError) as e:
            failures.append(sid)
            print(f"error: cube {sid!r}: {e}", file=sys.stderr)

    if args.spectra and ids:
        dataio.write_spectra_csv(args.spectra, ids, wavelengths, spectra)
    if failures:
        raise PartialFailure(f"{len(failures)} of {len(rows)} cubes failed")
    return EXIT_OK


def cmd_cv(args) -> int:
    X = _load_fx(args.features)
    y = _align(X, _load_resp(args.response))
    folds = _parse_cv(args.cv)
    curve = cross_validate(X, y, args.max_lv, folds)
    best = select_lv(curve)

    os.makedirs(args.out, exist_ok=True)
    dataio.write_curve_csv(os.path.join(args.out, "curve.csv"), curve.rmsecv)
    svg = svgplot.line_plot(
        np.arange(1, args.max_lv + 1), curve.rmsecv,
        title=f"RMSECV minimum at {best} LV", xlabel="Latent variables",
        ylabel="RMSECV", mark_x=best)
    dataio.atomic_write_text(os.path.join(args.out, "curve.svg"), svg)
    _provenance(args.out, "cv", args, [
        ("fold_spec", curve.fold_spec), ("seed", curve.seed),
        ("max_lv", args.max_lv), ("selected_lv", best),
    ])
    print(f"selected_lv={best}")
    return EXIT_OK


def cmd_train(args) -> int:
    X = _load_fx(args.features)
    y = _align(X, _load_resp(args.response))
    os.makedirs(args.out, exist_ok=True)

    n_lv = args.lv
    fold_desc = "none"
    if n_lv is None:
        folds = _parse_cv(args.cv)
        curve = cross_validate(X, y, args.max_lv, folds)
        n_lv = select_lv(curve)
        fold_desc = curve.fold_spec
        dataio.write_curve_csv(os.path.join(args.out, "curve.csv"), curve.rmsecv)

    model = pls_fit(X, y, n_lv)
    yhat = pls_predict(model, X)
    r_c, rmsec = metrics(y.y, yhat)

    dataio.atomic_write_bytes(os.path.join(args.out, "model.pls"), save_model(model))
    dataio.write_keyvalues(os.path.join(args.out, "metrics.txt"), [
        ("n_lv", model.n_lv),
        ("r_c", "undefined" if r_c is None else repr(r_c)),
        ("rmsec", repr(rmsec)),
    ])
    title = f"R_c = {0 if r_c is None else round(r_c, 2)} RMSEC = {round(rmsec, 2)}"
    svg = svgplot.scatter_plot([("Calibration", y.y, yhat, "blue")], title)
    dataio.atomic_write_text(os.path.join(args.out, "calibration.svg"), svg)
    _provenance(args.out, "train", args,
                [("n_lv", model.n_lv), ("fold_spec", fold_desc)])
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        with open(args.model, "rb") as fh:
            model = load_model(fh.read())
    except OSError as e:
        raise InputError(str(e))
    X = _load_fx(args.features)
    yhat = pls_predict(model, X)
    os.makedirs(args.out, exist_ok=True)

    extra = [("n_lv", model.n_lv)]
    if args.response:
        y = _align(X, _load_resp(args.response))
        dataio.write_predictions_csv(os.path.join(args.out, "predictions.csv"),
                                     X.ids, yhat, y.y)
        r_p, rmsep = metrics(y.y, yhat)
        dataio.write_keyvalues(os.path.join(args.out, "metrics.txt"), [
            ("r_p", "undefined" if r_p is None else repr(r_p)),
            ("rmsep", repr(rmsep)),
        ])
        title = f"R_p = {0 if r_p is None else round(r_p, 2)} RMSEP = {round(rmsep, 2)}"
        svg = svgplot.scatter_plot([("Test", y.y, yhat, "red")], title)
        dataio.atomic_write_text(os.path.join(args.out, "scatter.svg"), svg)
    else:
        dataio.write_predictions_csv(os.path.join(args.out, "predictions.csv"),
                                     X.ids, yhat)
    _provenance(args.out, "predict", args, extra)
    return EXIT_OK


def cmd_fuse(args) -> int:
    X1 = _load_fx(args.features, "block1")
    X2 = _load_fx(args.features2, "block2")
    if X1.ids != X2.ids:
        bad = sorted(set(X1.ids).symmetric_difference(X2.ids))
        raise InputError(f"blocks do not align; offending ids: {bad[:10]}")
    y = _align(X1, _load_resp(args.response))
    folds = _parse_cv(args.cv)

    grid = sopls_cv(X1, X2, y, args.max_lv, args.max_lv2, folds)
    a1, a2 = grid.selected
    os.makedirs(args.out, exist_ok=True)
    dataio.write_grid_csv(os.path.join(args.out, "grid.csv"), grid.rmsecv)

    # Single-block references: best CV cells on the grid edges
    b1_rmsecv = float(grid.rmsecv[1:, 0].min()) if args.max_lv >= 1 else float("nan")
    b1_lv = int(np.argmin(grid.rmsecv[1:, 0])) + 1
    b2_rmsecv = float(grid.rmsecv[0, 1:].min()) if args.max_lv2 >= 1 else float("nan")
    b2_lv = int(np.argmin(grid.rmsecv[0, 1:])) + 1

    if a1 >= 1:
        model = sopls_fit(X1, X2, y, a1, a2)
        yhat = sopls_predict(model, X1, X2)
        dataio.atomic_write_bytes(os.path.join(args.out, "model.sopl"),
                                  save_sopls(model))
    else:
        model = None
        yhat = pls_predict(pls_fit(X2, y, a2), X2)
        print("warning: selected model uses block 2 only", file=sys.stderr)
    r_f, rmse_f = metrics(y.y, yhat)

    pairs = [
        ("selected_a1", a1), ("selected_a2", a2),
        ("tie_rule", "min rmsecv, then min a1+a2, then min a1"),
        ("pure_block2", str(grid.pure_block2).lower()),
        ("rmsecv_block1_only", repr(b1_rmsecv)), ("block1_only_lv", b1_lv),
        ("rmsecv_block2_only", repr(b2_rmsecv)), ("block2_only_lv", b2_lv),
        ("rmsecv_fused", repr(float(grid.rmsecv[a1, a2]))),
        ("r_fused_cal", "undefined" if r_f is None else repr(r_f)),
        ("rmse_fused_cal", repr(rmse_f)),
    ]
    dataio.write_keyvalues(os.path.join(args.out, "report.txt"), pairs)

    # Three-panel comparison: calibration fits of each reference model
    yhat1 = pls_predict(pls_fit(X1, y, b1_lv), X1)
    yhat2 = pls_predict(pls_fit(X2, y, b2_lv), X2)
    svg = svgplot.scatter_plot(
        [("Block 1 only", y.y, yhat1, "blue"),
         ("Block 2 only", y.y, yhat2, "green"),
         ("Fused", y.y, yhat, "red")],
        f"SO-PLS fusion (a1={a1}, a2={a2})")
    dataio.atomic_write_text(os.path.join(args.out, "comparison.svg"), svg)
    _provenance(args.out, "fuse", args, [
        ("fold_spec", grid.fold_spec), ("seed", grid.seed),
        ("selected_a1", a1), ("selected_a2", a2),
    ])
    print(f"selected_a1={a1}\nselected_a2={a2}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        ids, y_true, y_pred = dataio.read_predictions_csv(args.predictions)
    except OSError as e:
        raise InputError(str(e))
    os.makedirs(args.out, exist_ok=True)
    if y_true is None:
        dataio.write_keyvalues(os.path.join(args.out, "metrics.txt"),
                               [("n", len(ids))])
        return EXIT_OK
    r, rmse = metrics(y_true, y_pred)
    dataio.write_keyvalues(os.path.join(args.out, "metrics.txt"), [
        ("n", len(ids)),
        ("r", "undefined" if r is None else repr(r)),
        ("rmse", repr(rmse)),
    ])
    title = f"R = {0 if r is None else round(r, 2)} RMSE = {round(rmse, 2)}"
    svg = svgplot.scatter_plot([("Samples", y_true, y_pred, "blue")], title)
    dataio.atomic_write_text(os.path.join(args.out, "scatter.svg"), svg)
    return EXIT_OK


# ---------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepchemo",
        description="Deep image features and chemometric regression pipeline",
    )
    parser.add_argument("--config", help="key=value file of default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract deep features from images")
    p.add_argument("--manifest", required=True, help="CSV of id,path image rows")
    p.add_argument("--archive", required=True, help="NNW1 weight archive")
    p.add_argument("--tap", default="gap", choices=netgraph.TAP_NAMES)
    p.add_argument("--out", required=True, help="output feature CSV path")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("compress", help="pseudo-RGB images from spectral cubes")
    p.add_argument("--manifest", required=True, help="CSV of id,path cube rows")
    p.add_argument("--out", required=True, help="output directory for PPM images")
    p.add_argument("--bands", default="750,670,500", help="R,G,B wavelengths (nm)")
    p.add_argument("--pca", action="store_true",
                   help="PCA band compression instead of band selection")
    p.add_argument("--spectra", help="also write a mean-spectra CSV here")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("cv", help="cross-validated latent-variable curve")
    p.add_argument("--features", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--cv", default="loo", help="loo | kfold:K:SEED")
    p.add_argument("--max-lv", type=int, default=20)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("train", help="fit a PLS model")
    p.add_argument("--features", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--lv", type=int, help="latent variables (default: select by CV)")
    p.add_argument("--cv", default="loo")
    p.add_argument("--max-lv", type=int, default=20)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a trained PLS model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--response", help="optional reference values for metrics")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("fuse", help="SO-PLS fusion of two feature blocks")
    p.add_argument("--features", required=True, help="block 1 (spatial) CSV")
    p.add_argument("--features2", required=True, help="block 2 (spectral) CSV")
    p.add_argument("--response", required=True)
    p.add_argument("--cv", default="kfold:5:42")
    p.add_argument("--max-lv", type=int, default=10, help="block 1 LV cap")
    p.add_argument("--max-lv2", type=int, default=10, help="block 2 LV cap")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("report", help="metrics and scatter from predictions CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    return parser


def _apply_config(parser, argv):
    if "--config" not in argv:
        return
    path = argv[argv.index("--config") + 1]
    defaults = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, value = line.partition("=")
            defaults[key.strip().replace("-", "_")] = value.strip()
    for action in parser._subparsers._group_actions[0].choices.values():
        known = {a.dest: a for a in action._actions}
        coerced = {}
        for key, value in defaults.items():
            if key in known:
                a = known[key]
                if a.type is int:
                    coerced[key] = int(value)
                elif isinstance(a.const, bool):
                    coerced[key] = value.lower() in ("1", "true", "yes")
                else:
                    coerced[key] = value
                a.required = False
        action.set_defaults(**coerced)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except (OSError, IndexError) as e:
        print(f"error: bad --config: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        return args.func(args)
    except PartialFailure as e:
        print(f"partial failure: {e}", file=sys.stderr)
        return EXIT_PARTIAL
    except (InputError, PlsError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
