"""Batch front-end: simulate, qcoef, beamform, make-dataset, train,
predict, evaluate.

Every command takes a JSON acquisition config (--config; defaults match
the reference setup: 64 elements, f_c 2.7 MHz, f_s 10.9 MHz, 1918
samples, 65 angles over +-40 degrees), writes its outputs atomically
into --out, and emits a JSON manifest carrying the config hash so
downstream commands can refuse mismatched inputs.  All randomness flows
from --seed; reruns with identical inputs and seeds are byte-identical.
SNB_THREADS caps internal parallelism (0 = fully serial).
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import io as snbio
from .beamform_fourier import build_q_table, build_q_tables, fd_das_line
from .beamform_time import MVConfig, bmode_image, das, mv_beamform, scan_convert, time_align
from .core import AcquisitionConfig, ArrayGeometry, RFFrame
from .metrics import RegionSpec, cnr, fwhm, nrmse, ssim
from .neural import NetworkSpec
from .sampling import (
    make_degraded_channels,
    normalize_dataset,
    scheme_by_label,
    slice_cubes,
)
from .simulate import (
    Phantom,
    PulseSpec,
    SectorRegion,
    anechoic_cyst_phantom,
    point_grid_phantom,
    simulate_rf,
)
from .training import predict as net_predict
from .training import train as net_train

SCHEMES = ("full", "x5", "x9", "x11")


# --------------------------------------------------------------------------
# config / phantom loading
# --------------------------------------------------------------------------


def load_setup(path=None):
    """(geometry, config, snapshot dict) from a JSON config file."""
    snap = {
        "c": 1540.0,
        "f_c": 2.7e6,
        "f_s": 10.9e6,
        "N": 1918,
        "M": 64,
        "pitch": None,
        "n_angles": 65,
        "span_deg": 80.0,
        "angles": None,
        "T_B": None,
    }
    if path:
        with open(path) as fh:
            snap.update(json.load(fh))
    pitch = snap["pitch"] if snap["pitch"] else snap["c"] / (2.0 * snap["f_c"])
    snap["pitch"] = pitch
    geometry = ArrayGeometry.centered(snap["M"], pitch)
    if snap["angles"] is not None:
        angles = np.asarray(snap["angles"], dtype=float)
    else:
        from .core import symmetric_angles

        angles = symmetric_angles(snap["n_angles"], snap["span_deg"])
    snap["angles"] = [float(a) for a in angles]
    config = AcquisitionConfig(
        c=snap["c"], f_c=snap["f_c"], f_s=snap["f_s"], N=snap["N"], angles=angles, T_B=snap["T_B"]
    )
    return geometry, config, snap


def load_phantom(path, config):
    with open(path) as fh:
        spec = json.load(fh)
    kind = spec.get("type", "empty")
    if kind == "empty":
        return Phantom(np.empty(0), np.empty(0), np.empty(0), description="empty"), spec
    if kind == "point_grid":
        depths = np.asarray(spec["depths_mm"], dtype=float) * 1e-3
        angles = np.radians(np.asarray(spec["angles_deg"], dtype=float))
        return point_grid_phantom(depths, angles, spec.get("amplitude", 1.0)), spec
    if kind == "points":
        sc = np.asarray(spec["scatterers"], dtype=float).reshape(-1, 3)
        return Phantom(sc[:, 0], sc[:, 1], sc[:, 2], description="points"), spec
    if kind == "cyst":
        region = SectorRegion(
            r_min=spec["r_min_mm"] * 1e-3,
            r_max=spec["r_max_mm"] * 1e-3,
            theta_min=math.radians(spec["theta_min_deg"]),
            theta_max=math.radians(spec["theta_max_deg"]),
        )
        center = (spec["center_mm_deg"][0] * 1e-3, math.radians(spec["center_mm_deg"][1]))
        phantom = anechoic_cyst_phantom(
            region, center, spec["radius_mm"] * 1e-3, spec["density_cm2"], spec.get("seed", 0)
        )
        return phantom, spec
    raise ValueError(f"unknown phantom type {kind!r}")


def _frame_paths(out_dir):
    return os.path.join(out_dir, "frame.snb")


def write_frame(out_dir, frame, snap, extra=None):
    os.makedirs(out_dir, exist_ok=True)
    path = _frame_paths(out_dir)
    snbio.write_tensor(path, frame.data)
    manifest = snbio.write_manifest(
        path + ".json", snap, inputs={}, extra=dict(extra or {}, content_hash=snbio.file_digest(path))
    )
    return path, manifest


def read_frame(path):
    data = snbio.read_tensor(path)
    manifest = snbio.read_manifest(path + ".json")
    snap = manifest["config"]
    geometry = ArrayGeometry.centered(snap["M"], snap["pitch"])
    config = AcquisitionConfig(
        c=snap["c"],
        f_c=snap["f_c"],
        f_s=snap["f_s"],
        N=snap["N"],
        angles=np.asarray(snap["angles"], dtype=float),
        T_B=snap.get("T_B"),
    )
    return RFFrame(data=data, geometry=geometry, config=config), manifest


# --------------------------------------------------------------------------
# Q-table persistence
# --------------------------------------------------------------------------


def qtable_dir(root, config_hash, angle_index, energy_fraction):
    return os.path.join(root, f"q_{config_hash[:12]}_a{angle_index:03d}_ef{energy_fraction:g}")


def save_qtable(dirpath, qt):
    os.makedirs(dirpath, exist_ok=True)
    if qt.mode == "band":
        # per-element flat rows, concatenated; element boundaries in elptr
        values = np.concatenate([e.values for e in qt.elements])
        src = np.concatenate([e.src for e in qt.elements]).astype(float)
        rowptr = np.stack([e.rowptr for e in qt.elements]).astype(float)
        elptr = np.cumsum([0] + [e.values.size for e in qt.elements]).astype(float)
        snbio.write_tensor(os.path.join(dirpath, "values.snb"), values)
        snbio.write_tensor(os.path.join(dirpath, "src.snb"), src)
        snbio.write_tensor(os.path.join(dirpath, "rowptr.snb"), rowptr)
        snbio.write_tensor(os.path.join(dirpath, "elptr.snb"), elptr)
        snbio.write_tensor(os.path.join(dirpath, "h.snb"), np.stack(qt.halfwidths).astype(float))
    else:
        snbio.write_tensor(os.path.join(dirpath, "b1.snb"), np.stack([e[0] for e in qt.elements]))
        snbio.write_tensor(os.path.join(dirpath, "b2.snb"), np.stack([e[1] for e in qt.elements]))
    snbio.write_tensor(os.path.join(dirpath, "row_energy.snb"), qt.row_energy)
    snbio.write_tensor(os.path.join(dirpath, "retained_energy.snb"), qt.retained_energy)
    snbio.write_manifest(
        os.path.join(dirpath, "manifest.json"),
        {
            "theta": qt.theta,
            "N": qt.N,
            "f_s": qt.f_s,
            "energy_fraction": qt.energy_fraction,
            "mode": qt.mode,
            "key": qt.key,
        },
    )


def load_qtable(dirpath):
    from .beamform_fourier import BandRows, QTable

    meta = snbio.read_manifest(os.path.join(dirpath, "manifest.json"))["config"]
    row_energy = snbio.read_tensor(os.path.join(dirpath, "row_energy.snb"))
    retained = snbio.read_tensor(os.path.join(dirpath, "retained_energy.snb"))
    if meta["mode"] == "band":
        values = snbio.read_tensor(os.path.join(dirpath, "values.snb"))
        src = snbio.read_tensor(os.path.join(dirpath, "src.snb")).astype(np.int64)
        rowptr = snbio.read_tensor(os.path.join(dirpath, "rowptr.snb")).astype(np.int64)
        elptr = snbio.read_tensor(os.path.join(dirpath, "elptr.snb")).astype(np.int64)
        hs = snbio.read_tensor(os.path.join(dirpath, "h.snb")).astype(np.int64)
        elements, halfwidths = [], []
        for m in range(rowptr.shape[0]):
            lo, hi = elptr[m], elptr[m + 1]
            elements.append(
                BandRows(values=values[lo:hi], src=src[lo:hi], rowptr=rowptr[m], h=hs[m])
            )
            halfwidths.append(hs[m])
        elements = tuple(elements)
        halfwidths = tuple(halfwidths)
    else:
        b1 = snbio.read_tensor(os.path.join(dirpath, "b1.snb"))
        b2 = snbio.read_tensor(os.path.join(dirpath, "b2.snb"))
        elements = tuple((b1[m], b2[m]) for m in range(b1.shape[0]))
        halfwidths = tuple(None for _ in range(b1.shape[0]))
    return QTable(
        theta=meta["theta"],
        N=meta["N"],
        f_s=meta["f_s"],
        energy_fraction=meta["energy_fraction"],
        mode=meta["mode"],
        elements=elements,
        halfwidths=halfwidths,
        row_energy=row_energy,
        retained_energy=retained,
        key=meta["key"],
    )


def build_or_load_tables(root, geometry, config, snap, energy_fraction, angle_indices=None):
    """Per-angle tables, cached under ``root`` by config hash.

    Mirror-symmetric angle pairs are built once and reflected.
    """
    chash = snbio.config_digest(snap)
    indices = list(range(config.n_angles)) if angle_indices is None else list(angle_indices)
    tables = {}
    built = 0
    for ia in indices:
        d = qtable_dir(root, chash, ia, energy_fraction)
        if os.path.isdir(d):
            tables[ia] = load_qtable(d)
            continue
        theta = config.angles[ia]
        partner = None
        if geometry.is_mirror_symmetric:
            match = np.flatnonzero(np.abs(config.angles + theta) < 1e-12)
            partner = int(match[0]) if len(match) and int(match[0]) != ia else None
        if partner is not None and partner in tables:
            tables[ia] = tables[partner].mirrored()
        else:
            tables[ia] = build_q_table(geometry, config, theta, energy_fraction, key=chash)
            built += 1
        save_qtable(d, tables[ia])
    if built:
        print(f"built {built} Q table(s); cached under {root}", file=sys.stderr)
    else:
        print("Q-table cache hit for all angles", file=sys.stderr)
    return tables


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_simulate(args):
    geometry, config, snap = load_setup(args.config)
    phantom, phantom_spec = load_phantom(args.phantom, config)
    frame = simulate_rf(phantom, geometry, config, snr_db=args.snr, seed=args.seed)
    path, _ = write_frame(
        args.out, frame, snap, extra={"phantom": phantom_spec, "seed": args.seed, "snr_db": args.snr}
    )
    print(path)


def cmd_qcoef(args):
    geometry, config, snap = load_setup(args.config)
    build_or_load_tables(args.out, geometry, config, snap, args.energy_fraction)


def cmd_beamform(args):
    frame, manifest = read_frame(args.frame)
    geometry, config = frame.geometry, frame.config
    snap = manifest["config"]
    scheme = scheme_by_label(args.scheme, config, geometry)
    os.makedirs(args.out, exist_ok=True)
    pulse = PulseSpec(config.f_c)

    lines = []
    if args.method in ("das", "mv"):
        mvcfg = MVConfig(L=min(args.mv_subaperture, geometry.M), W=args.mv_window)
        data = frame.data
        if scheme.is_spatial(geometry.M):
            from .sampling import spatial_subsample

            data = spatial_subsample(data, scheme.kept_elements)
        for ia, theta in enumerate(config.angles):
            aligned = time_align(data[ia], geometry, config, theta)
            line = das(aligned) if args.method == "das" else mv_beamform(aligned, mvcfg)
            lines.append(line.samples)
    elif args.method == "fd-das":
        tables = build_or_load_tables(
            args.qcoef or os.path.join(args.out, "qcoef"),
            geometry,
            config,
            snap,
            args.energy_fraction,
        )
        K = None if scheme.label == "full" else scheme.temporal_K
        data = frame.data
        if scheme.is_spatial(geometry.M):
            from .sampling import spatial_subsample

            data = spatial_subsample(data, scheme.kept_elements)
        for ia in range(config.n_angles):
            line = fd_das_line(data[ia], tables[ia], config, K=K, pulse=pulse)
            lines.append(line.samples)
    else:
        raise ValueError(f"unknown method {args.method!r}")

    lines = np.stack(lines)
    img = bmode_image(lines, args.dynamic_range)
    base = os.path.join(args.out, f"{args.method}_{args.scheme}")
    snbio.write_tensor(base + "_lines.snb", lines)
    from .beamform_time import envelope

    snbio.write_tensor(base + "_envelope.snb", np.stack([envelope(l) for l in lines]))
    snbio.write_pgm(base + "_bmode.pgm", img)
    if args.raster:
        raster, _ = scan_convert(img, config)
        snbio.write_pgm(base + "_sector.pgm", raster)
    snbio.write_manifest(
        base + "_lines.snb.json",
        snap,
        inputs={"frame": snbio.file_digest(args.frame)},
        extra={"method": args.method, "scheme": args.scheme},
    )

    if args.check and args.method == "fd-das" and args.scheme == "full":
        ref = np.stack(
            [
                das(time_align(frame.data[ia], geometry, config, th)).samples
                for ia, th in enumerate(config.angles)
            ]
        )
        err = nrmse(lines, ref)
        print(f"fd-das vs time-domain DAS NRMSE: {err:.3e}")
    print(base + "_bmode.pgm")


def cmd_make_dataset(args):
    frames = [read_frame(p) for p in args.frames]
    geometry, config = frames[0][0].geometry, frames[0][0].config
    snap = frames[0][1]["config"]
    for f, m in frames[1:]:
        if m["config_hash"] != frames[0][1]["config_hash"]:
            raise SystemExit("error: frames were simulated with different configs")
    scheme = scheme_by_label(args.scheme, config, geometry)
    mvcfg = MVConfig(L=min(args.mv_subaperture, geometry.M), W=args.mv_window)
    tables = build_or_load_tables(
        args.qcoef or os.path.join(args.out, "qcoef"), geometry, config, snap, args.energy_fraction
    )

    all_samples = []
    for frame, _ in frames:
        degraded, _ = make_degraded_channels(frame, scheme, tables)
        targets = [
            mv_beamform(time_align(frame.data[ia], geometry, config, th), mvcfg)
            for ia, th in enumerate(config.angles)
        ]
        all_samples.extend(slice_cubes(degraded, targets, layout=args.layout))
    dataset = normalize_dataset(all_samples, layout=args.layout)

    os.makedirs(args.out, exist_ok=True)
    inputs = np.stack([s.input for s in dataset.samples]).astype(np.float32)
    targets = np.stack([s.target for s in dataset.samples]).astype(np.float32)
    angle_idx = np.asarray([s.angle_index for s in dataset.samples], dtype=float)
    ipath = os.path.join(args.out, "inputs.snb")
    snbio.write_tensor(ipath, inputs)
    snbio.write_tensor(os.path.join(args.out, "targets.snb"), targets)
    snbio.write_tensor(os.path.join(args.out, "angles.snb"), angle_idx)
    snbio.write_manifest(
        os.path.join(args.out, "dataset.json"),
        snap,
        inputs={"frames": [snbio.file_digest(p) for p in args.frames]},
        extra={
            "scheme": args.scheme,
            "layout": args.layout,
            "scale": dataset.scale,
            "samples": len(dataset.samples),
            "content_hash": snbio.file_digest(ipath),
        },
    )
    print(f"{args.out}: {len(dataset.samples)} samples, scale {dataset.scale:.6g}")


def load_dataset(dirpath):
    from .sampling import Dataset, TrainingSample

    manifest = snbio.read_manifest(os.path.join(dirpath, "dataset.json"))
    inputs = snbio.read_tensor(os.path.join(dirpath, "inputs.snb"))
    targets = snbio.read_tensor(os.path.join(dirpath, "targets.snb"))
    angle_idx = snbio.read_tensor(os.path.join(dirpath, "angles.snb")).astype(int)
    samples = [
        TrainingSample(input=inputs[i], target=targets[i], angle_index=int(angle_idx[i]))
        for i in range(inputs.shape[0])
    ]
    return Dataset(samples=samples, scale=manifest["scale"], layout=manifest["layout"]), manifest


def cmd_train(args):
    dataset, manifest = load_dataset(args.dataset)
    widths = tuple(int(w) for w in args.widths.split(","))
    spec = NetworkSpec(
        in_channels=dataset.samples[0].input.shape[2],
        widths=widths,
        pool_d2=(dataset.layout == "elements-d2"),
        dtype=args.dtype,
    )
    params, history = net_train(
        dataset,
        spec=spec,
        epochs=args.epochs,
        batch=args.batch,
        lr=args.lr,
        seed=args.seed,
        verbose=not args.quiet,
    )
    os.makedirs(args.out, exist_ok=True)
    meta = {
        "config_hash": manifest["config_hash"],
        "dataset_hash": manifest["content_hash"],
        "scheme": manifest["scheme"],
        "layout": manifest["layout"],
        "scale": manifest["scale"],
        "widths": list(widths),
        "dtype": args.dtype,
        "lr": args.lr,
        "epochs": args.epochs,
        "seed": args.seed,
        "best_epoch": history.best_epoch,
    }
    ckpt = os.path.join(args.out, f"checkpoint_{manifest['scheme']}.snbc")
    snbio.write_checkpoint(ckpt, params, meta)
    snbio.write_csv(
        os.path.join(args.out, f"history_{manifest['scheme']}.csv"),
        ["epoch", "train_smsle", "val_smsle", "seconds"],
        [
            [e + 1, f"{tr:.8f}", f"{vl:.8f}", f"{sec:.3f}"]
            for e, (tr, vl, sec) in enumerate(
                zip(history.train_smsle, history.val_smsle, history.seconds)
            )
        ],
    )
    print(ckpt)


def _spec_from_meta(meta, in_channels):
    return NetworkSpec(
        in_channels=in_channels,
        widths=tuple(meta["widths"]),
        pool_d2=(meta["layout"] == "elements-d2"),
        dtype=meta["dtype"],
    )


def _predict_frame(frame, manifest, params, meta, qcoef_root, energy_fraction):
    if manifest["config_hash"] != meta["config_hash"]:
        raise SystemExit("error: frame config hash does not match the checkpoint's")
    geometry, config = frame.geometry, frame.config
    scheme = scheme_by_label(meta["scheme"], config, geometry)
    tables = build_or_load_tables(
        qcoef_root, geometry, config, manifest["config"], energy_fraction
    )
    degraded, _ = make_degraded_channels(frame, scheme, tables)
    in_channels = 3 if meta["layout"] == "elements-d2" else geometry.M
    spec = _spec_from_meta(meta, in_channels)
    lines, angle_indices = net_predict(
        degraded, params, spec, scale=meta["scale"], layout=meta["layout"]
    )
    return lines, angle_indices


def cmd_predict(args):
    frame, manifest = read_frame(args.frame)
    params, meta = snbio.read_checkpoint(args.checkpoint)
    lines, angle_indices = _predict_frame(
        frame, manifest, params, meta, args.qcoef or os.path.join(args.out, "qcoef"),
        args.energy_fraction,
    )
    os.makedirs(args.out, exist_ok=True)
    base = os.path.join(args.out, f"proposed_{meta['scheme']}")
    snbio.write_tensor(base + "_lines.snb", lines)
    snbio.write_pgm(base + "_bmode.pgm", bmode_image(lines, args.dynamic_range))
    snbio.write_manifest(
        base + "_lines.snb.json",
        manifest["config"],
        inputs={"frame": snbio.file_digest(args.frame), "checkpoint": snbio.file_digest(args.checkpoint)},
        extra={"method": "proposed", "scheme": meta["scheme"], "angles": angle_indices},
    )
    print(base + "_lines.snb")


def _point_metrics(env_img, angle_indices, config):
    """(lateral_mm, axial_mm) FWHM at the global envelope peak."""
    ia, j = np.unravel_index(int(np.argmax(env_img)), env_img.shape)
    r = config.c * (j / config.f_s) / 2.0
    d_theta = abs(config.angles[1] - config.angles[0]) if config.n_angles > 1 else 0.0
    lateral = fwhm(env_img[:, j], spacing=r * d_theta * 1e3)
    axial = fwhm(env_img[ia, :], spacing=config.c / (2.0 * config.f_s) * 1e3)
    return lateral, axial


def _region_from_json(spec):
    if spec["kind"] == "disk":
        return RegionSpec(kind="disk", center=tuple(spec["center"]), radius=spec["radius"])
    return RegionSpec(kind="rect", center=tuple(spec["center"]), extents=tuple(spec["extents"]))


def cmd_evaluate(args):
    from .beamform_time import envelope

    frame, manifest = read_frame(args.frame)
    geometry, config = frame.geometry, frame.config
    regions = {}
    if args.regions:
        with open(args.regions) as fh:
            regions = json.load(fh)

    mvcfg = MVConfig(L=min(args.mv_subaperture, geometry.M), W=args.mv_window)
    aligned = [time_align(frame.data[ia], geometry, config, th) for ia, th in enumerate(config.angles)]
    das_lines = np.stack([das(a).samples for a in aligned])
    mv_lines = np.stack([mv_beamform(a, mvcfg).samples for a in aligned])

    rows = []

    def add_row(method, scheme, lines, angle_subset=None):
        mv_ref = mv_lines if angle_subset is None else mv_lines[angle_subset]
        env = np.stack([envelope(l) for l in lines])
        img = np.stack([np.asarray(l) for l in lines])
        bm = bmode_image(lines, args.dynamic_range)
        bm_ref = bmode_image(mv_ref, args.dynamic_range)
        lat = ax = ""
        if regions.get("point", True):
            try:
                lat, ax = _point_metrics(env, angle_subset, config)
                lat, ax = f"{lat:.4f}", f"{ax:.4f}"
            except ValueError:
                lat = ax = ""
        cn = ""
        if "cyst" in regions and "background" in regions:
            cn = f"{cnr(bm, _region_from_json(regions['cyst']), _region_from_json(regions['background'])):.4f}"
        win = min(8, min(bm.shape))  # tiny frames still get a score
        rows.append(
            [
                method,
                scheme,
                lat,
                ax,
                cn,
                f"{ssim(bm, bm_ref, window=win):.4f}",
                f"{nrmse(img, mv_ref):.4f}",
            ]
        )

    add_row("das", "full", das_lines)
    add_row("mv", "full", mv_lines)

    for ckpt_path in args.checkpoints or []:
        params, meta = snbio.read_checkpoint(ckpt_path)
        if args.dataset:
            _, ds_manifest = load_dataset(args.dataset)
            if ds_manifest["content_hash"] != meta["dataset_hash"]:
                raise SystemExit(
                    "error: dataset manifest hash does not match the checkpoint's recorded hash"
                )
        lines, angle_indices = _predict_frame(
            frame, manifest, params, meta, args.qcoef or os.path.join(args.out, "qcoef"),
            args.energy_fraction,
        )
        add_row("proposed", meta["scheme"], lines, angle_subset=angle_indices)

    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "metrics.csv")
    snbio.write_csv(
        out_csv,
        ["method", "scheme", "lateral_fwhm_mm", "axial_fwhm_mm", "cnr", "ssim_vs_mv", "nrmse_vs_mv"],
        rows,
    )
    snbio.write_manifest(
        out_csv + ".json",
        manifest["config"],
        inputs={"frame": snbio.file_digest(args.frame)},
        extra={
            "out_of_scope": [
                "NESTA x5 (iterative recovery baseline, not implemented)",
                "NESTA x9 (iterative recovery baseline, not implemented)",
                "NESTA x11 / COBA (iterative recovery baseline, not implemented)",
            ]
        },
    )
    print(out_csv)


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _add_common(p, config=True, out=True):
    if config:
        p.add_argument("--config", help="JSON acquisition config (defaults: reference setup)")
    if out:
        p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--energy-fraction", type=float, default=0.95, dest="energy_fraction")


def build_parser():
    ap = argparse.ArgumentParser(prog="snbeam", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an RF frame from a phantom spec")
    _add_common(p)
    p.add_argument("--phantom", required=True, help="phantom JSON")
    p.add_argument("--snr", type=float, default=None, help="SNR in dB (omit for noiseless)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("qcoef", help="precompute and cache Q tables for all angles")
    _add_common(p)
    p.set_defaults(func=cmd_qcoef)

    p = sub.add_parser("beamform", help="beamform a frame (das | mv | fd-das)")
    _add_common(p, config=False)
    p.add_argument("--frame", required=True, help="frame .snb path")
    p.add_argument("--method", choices=("das", "mv", "fd-das"), default="das")
    p.add_argument("--scheme", choices=SCHEMES, default="full")
    p.add_argument("--qcoef", help="Q-table cache directory")
    p.add_argument("--mv-subaperture", type=int, default=32)
    p.add_argument("--mv-window", type=int, default=15)
    p.add_argument("--dynamic-range", type=float, default=60.0)
    p.add_argument("--raster", action="store_true", help="also write a scan-converted sector")
    p.add_argument("--check", action="store_true", help="print fd-das vs DAS NRMSE (full scheme)")
    p.set_defaults(func=cmd_beamform)

    p = sub.add_parser("make-dataset", help="degraded cubes + MV targets from frames")
    _add_common(p, config=False)
    p.add_argument("--frames", nargs="+", required=True)
    p.add_argument("--scheme", choices=SCHEMES, default="x5")
    p.add_argument("--layout", choices=("elements-d2", "angles-d2"), default="elements-d2")
    p.add_argument("--qcoef", help="Q-table cache directory")
    p.add_argument("--mv-subaperture", type=int, default=32)
    p.add_argument("--mv-window", type=int, default=15)
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("train", help="train the deep beamformer on a dataset")
    _add_common(p, config=False)
    p.add_argument("--dataset", required=True)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--lr", type=float, default=3e-5)
    p.add_argument("--widths", default="16,32,64")
    p.add_argument("--dtype", choices=("float32", "float64"), default="float32")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="reconstruct beam lines with a checkpoint")
    _add_common(p, config=False)
    p.add_argument("--frame", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--qcoef", help="Q-table cache directory")
    p.add_argument("--dynamic-range", type=float, default=60.0)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="metrics CSV for das/mv/proposed on a frame")
    _add_common(p, config=False)
    p.add_argument("--frame", required=True)
    p.add_argument("--checkpoints", nargs="*", help="proposed-method checkpoints")
    p.add_argument("--dataset", help="verify checkpoint/dataset hash chain")
    p.add_argument("--regions", help="JSON region spec for CNR / point metrics")
    p.add_argument("--qcoef", help="Q-table cache directory")
    p.add_argument("--mv-subaperture", type=int, default=32)
    p.add_argument("--mv-window", type=int, default=15)
    p.add_argument("--dynamic-range", type=float, default=60.0)
    p.set_defaults(func=cmd_evaluate)

    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
