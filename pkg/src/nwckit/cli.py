"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
Fields travel as NWC1 files (``-`` for stdin/stdout), metrics as JSON on
stdout and spectra as CSV.  File outputs are written to a temporary file and
renamed on success, so a failed run never leaves a partial file.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from nwckit import advect as advect_mod
from nwckit import grid, impa, loss, mixer, synth, terrain, verify
from nwckit.errors import (
    DataError,
    NotNormalized,
    NwcError,
    ShapeMismatch,
    UndefinedBase,
    WrongChannelCount,
)
from nwckit.grid import ChannelKind, FieldSequence


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _default_seed() -> int:
    raw = os.environ.get("NWC_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"NWC_SEED must be an integer, got {raw!r}") from None


def _ints(text, n=None, sep=","):
    try:
        vals = [int(v) for v in text.split(sep)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers separated by {sep!r}: {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} values, got {text!r}")
    return tuple(vals)


def _floats(n):
    def parse(text):
        try:
            vals = tuple(float(v) for v in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected numbers: {text!r}") from None
        if len(vals) != n:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated values, got {text!r}")
        return vals
    return parse


def _size(text):
    return _ints(text.lower(), 2, sep="x")


# --------------------------------------------------------------------- io

def _read_seq(path) -> FieldSequence:
    if path == "-":
        return grid.from_bytes(sys.stdin.buffer.read())
    return grid.load(path)


def _write_bytes(path, data: bytes):
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".nwckit-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_seq(path, seq: FieldSequence):
    _write_bytes(path, grid.encode_sequence(seq))


def _clean(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) or math.isinf(obj) else obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _json_text(obj) -> str:
    return json.dumps(_clean(obj), allow_nan=False) + "\n"


def _radar_normalized(seq: FieldSequence) -> np.ndarray:
    """Channel 0 on the normalized [0, 1] reflectivity scale, shape (T, H, W)."""
    x = seq.frames[:, 0]
    return x if seq.normalized else x / verify.DBZ_SCALE


def _fmt_thr(t: float) -> str:
    return f"{t:g}"


# --------------------------------------------------------------- commands

def cmd_synth(args, out):
    if args.storms is None:
        storms = list(synth.DEFAULT_STORMS)
    else:
        text = args.storms
        if not text.lstrip().startswith(("[", "{")):
            try:
                with open(text) as fh:
                    text = fh.read()
            except OSError as exc:
                raise DataError(f"cannot read storm spec {args.storms}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"storm spec is not valid JSON: {exc}") from exc
        if isinstance(raw, dict):
            raw = raw.get("storms", [raw] if "center" in raw else [])
        try:
            storms = [synth.StormSpec.from_dict(d) for d in raw]
        except (KeyError, TypeError) as exc:
            raise DataError(f"bad storm spec entry: {exc}") from exc
    h, w = args.size
    domain = grid.DomainSpec(h, w, args.spacing)
    seed = _default_seed() if args.seed is None else args.seed
    seq = synth.generate(storms, args.frames, domain, seed, args.noise)
    if args.channels == 4:
        base, east, north = args.elevation
        seq = synth.make_four_channel(seq, synth.ElevationPlane(base, east, north), *args.wind)
    if args.normalize:
        seq = grid.normalize(seq)
    _write_seq(args.output, seq)
    return 0


def cmd_mix(args, out):
    seq = _read_seq(args.input)
    if seq.shape[1] != 4:
        raise WrongChannelCount(f"mix expects 4 channels, got {seq.shape[1]}")
    if not seq.normalized:
        seq = grid.normalize(seq)
    _write_seq(args.output, mixer.mix(seq))
    return 0


def cmd_wind(args, out):
    elev = _read_seq(args.elevation)
    if elev.normalized:
        elev = grid.denormalize(elev)
    z = elev.frames[0, 0]
    if args.wind_file:
        wf = _read_seq(args.wind_file)
        if wf.shape[1] != 2:
            raise WrongChannelCount(f"wind file needs 2 channels (u, v), got {wf.shape[1]}")
        if wf.normalized:
            wf = grid.denormalize(wf)
        winds = terrain.WindFields(wf.frames[0, 0], wf.frames[0, 1])
    else:
        if args.u is None or args.v is None:
            raise UsageError("wind: give --u and --v, or --wind-file")
        winds = terrain.WindFields.uniform(args.u, args.v, z.shape)
    w_along = terrain.along_slope_wind(winds, terrain.aspect(z, elev.spacing_km))
    _write_seq(args.output, FieldSequence(w_along[None, None], [ChannelKind.AlongSlopeWind],
                                          elev.spacing_km))
    return 0


def cmd_advect(args, out):
    seq = _read_seq(args.input)
    if args.history is not None and not 2 <= args.history <= seq.shape[0]:
        raise DataError(f"--history must be in [2, {seq.shape[0]}], got {args.history}")
    fc = advect_mod.extrapolate(seq, args.steps, args.block, args.search, args.history)
    _write_seq(args.output, fc)
    return 0


def cmd_impa_forward(args, out):
    seq = _read_seq(args.input)
    if seq.shape[1] != 5:
        raise WrongChannelCount(f"impa-forward expects the 5-channel mixer output, got {seq.shape[1]}")
    if not seq.normalized:
        raise NotNormalized("impa-forward expects a normalized sequence")
    t = seq.shape[0]
    seed = _default_seed() if args.seed is None else args.seed
    model = impa.init_model(t, 5, args.latent_channels, args.depth, args.blocks, seed)
    trace = None
    if args.trace_block is not None:
        if not 0 <= args.trace_block < args.blocks:
            raise DataError(f"--trace-block must be in [0, {args.blocks}), got {args.trace_block}")
        trace = impa.StageTrace(blocks=[args.trace_block])
    pred = impa.encode_decode_forward(seq.frames[None], model, trace)[0]
    _write_seq(args.output, FieldSequence(pred, [ChannelKind.Generic], seq.spacing_km, True))
    if trace is None:
        return 0
    hl, wl = trace.latent_shape
    query = args.query if args.query is not None else (hl // 2, wl // 2)
    weights = impa.attention_map(trace, args.trace_block, query)
    if args.region is not None:
        region = args.region
    else:
        region = (max(query[0] - 1, 0), max(query[1] - 1, 0), min(query[0] + 2, hl), min(query[1] + 2, wl))
    factor = impa.enhancement_factor(weights, region)
    att_path = args.attention_out
    if att_path is None:
        if args.output == "-":
            raise UsageError("--attention-out is required when the prediction goes to stdout")
        att_path = args.output + ".attn.nwc"
    _write_seq(att_path, FieldSequence(weights[None, None], [ChannelKind.Generic], seq.spacing_km, True))
    out.write(_json_text({
        "block": args.trace_block,
        "query": list(query),
        "region": list(region),
        "latent_shape": [hl, wl],
        "enhancement_factor": factor,
        "attention_file": att_path,
    }))
    return 0


def _loss_pair(pred_seq, tgt_seq):
    p = _radar_normalized(pred_seq)
    g = _radar_normalized(tgt_seq)
    if p.shape != g.shape:
        raise ShapeMismatch(f"prediction shape {pred_seq.shape} does not match target shape {tgt_seq.shape}")
    return p[None, :, None], g[None, :, None]


def cmd_loss(args, out):
    pred_seq = _read_seq(args.prediction)
    tgt_seq = _read_seq(args.target)
    p, g = _loss_pair(pred_seq, tgt_seq)
    bd = loss.mad_loss(p, g, args.epoch)
    if args.grad:
        grad = loss.mad_loss_grad(p, g, args.epoch)[0]
        _write_seq(args.grad, FieldSequence(grad, [ChannelKind.Generic], pred_seq.spacing_km, True))
    d = bd.to_dict()
    d["per_frame"] = {k: v[0] if k != "lambda" else v for k, v in d["per_frame"].items()}
    out.write(_json_text(d))
    return 0


def cmd_verify(args, out):
    fc_seq = _read_seq(args.forecast)
    ob_seq = _read_seq(args.observation)
    f = np.clip(_radar_normalized(fc_seq), 0.0, 1.0)
    o = _radar_normalized(ob_seq)
    start = args.obs_start
    if start < 0 or f.shape[1:] != o.shape[1:] or o.shape[0] - start != f.shape[0]:
        raise ShapeMismatch(
            f"forecast shape {fc_seq.shape} and observation shape {ob_seq.shape} do not line up"
            f" (observation frames used from index {start})")
    o = o[start:]
    curves = verify.leadtime_curves(f, o, args.thresholds, normalized=True)
    report = {
        "forecast_shape": list(fc_seq.shape),
        "observation_shape": list(ob_seq.shape),
        "obs_start": start,
        "thresholds": [float(t) for t in args.thresholds],
        "scores": {},
        "mae": verify.mae(f, o),
        "ssim": verify.ssim(f, o) if min(f.shape[1:]) >= 7 else None,
    }
    for thr, c in curves.items():
        report["scores"][_fmt_thr(thr)] = {
            "per_frame": [s.as_dict() for s in c.per_frame],
            "mean": c.mean.as_dict(),
            "undefined_frames": c.undefined_frames,
            "undefined_counts": c.undefined,
        }
    if args.retention:
        ret = {}
        for thr, c in curves.items():
            entry = {}
            for name in ("csi", "pod"):
                try:
                    entry[name] = verify.skill_retention(c.metric(name)).tolist()
                except UndefinedBase:
                    entry[name] = None
            ret[_fmt_thr(thr)] = entry
        report["retention"] = ret
    out.write(_json_text(report))
    return 0


def cmd_rapsd(args, out):
    seq = _read_seq(args.input)
    x = _radar_normalized(seq)

    def spectrum(frames):
        if args.frame is not None:
            if not 0 <= args.frame < frames.shape[0]:
                raise DataError(f"--frame {args.frame} out of range for {frames.shape[0]} frames")
            return verify.rapsd(frames[args.frame], seq.spacing_km)
        return verify.mean_rapsd(frames, seq.spacing_km)

    spec = spectrum(x)
    csv_buf = io.StringIO()
    csv_buf.write("bin_freq_cycles_per_km,power\n")
    for fr, pw in zip(spec.bin_freq, spec.power):
        csv_buf.write(f"{float(fr)!r},{float(pw)!r}\n")
    if args.reference is None:
        if args.output == "-":
            out.write(csv_buf.getvalue())
        else:
            _write_bytes(args.output, csv_buf.getvalue().encode())
        return 0
    json_path = args.json
    if args.output == "-" and json_path in (None, "-"):
        raise UsageError("with --reference, send the CSV (-o) or the JSON (--json) to a file")
    ref = _read_seq(args.reference)
    rx = _radar_normalized(ref)
    if rx.shape[1:] != x.shape[1:]:
        raise ShapeMismatch(f"input shape {seq.shape} and reference shape {ref.shape} differ in grid size")
    ref_spec = spectrum(rx)
    bands = ["meso-beta", "meso-gamma"] if args.band == "both" else [args.band]
    result = {}
    for band in bands:
        result["lse_" + band.replace("-", "_")] = verify.lse_band(spec, ref_spec, band)
    body = _json_text(result)
    if args.output == "-":
        out.write(csv_buf.getvalue())
    else:
        _write_bytes(args.output, csv_buf.getvalue().encode())
    if json_path in (None, "-"):
        out.write(body)
    else:
        _write_bytes(json_path, body.encode())
    return 0


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nwckit", description="Deterministic radar nowcasting toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a synthetic radar scene")
    s.add_argument("--storms", help="JSON list of storms, inline or a file path")
    s.add_argument("--frames", type=int, default=20)
    s.add_argument("--size", type=_size, default=(64, 64), help="HxW in pixels")
    s.add_argument("--seed", type=int, default=None, help="noise seed (default $NWC_SEED or 0)")
    s.add_argument("--noise", type=float, default=0.0, help="Gaussian noise std in dBZ")
    s.add_argument("--spacing", type=float, default=1.0, help="grid spacing in km")
    s.add_argument("--channels", type=int, choices=(1, 4), default=4)
    s.add_argument("--elevation", type=_floats(3), default=(0.0, 20.0, 10.0),
                   help="terrain plane base_m,east_slope,north_slope (m per km)")
    s.add_argument("--wind", type=_floats(2), default=(3.0, -2.0), help="uniform u,v in m/s")
    s.add_argument("--normalize", action="store_true")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("mix", help="apply the spatial channel mixer (4 -> 5 channels)")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_mix)

    s = sub.add_parser("wind", help="along-slope wind from elevation and wind components")
    s.add_argument("--elevation", required=True, help="NWC1 elevation grid")
    s.add_argument("--u", type=float)
    s.add_argument("--v", type=float)
    s.add_argument("--wind-file", help="NWC1 file with u and v channels")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_wind)

    s = sub.add_parser("advect", help="Lagrangian extrapolation baseline")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--steps", type=int, default=10)
    s.add_argument("--block", type=int, default=64)
    s.add_argument("--search", type=int, default=10)
    s.add_argument("--history", type=int, default=None,
                   help="use only the first N frames as history (default: all)")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_advect)

    s = sub.add_parser("impa-forward", help="seeded forward pass of the encoder/IMPA/decoder model")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("-o", "--output", default="-")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--blocks", type=int, default=12)
    s.add_argument("--latent-channels", type=int, default=4)
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--trace-block", type=int, default=None)
    s.add_argument("--query", type=lambda t: _ints(t, 2), default=None,
                   help="latent h,w of the query token (default: centre)")
    s.add_argument("--region", type=lambda t: _ints(t, 4), default=None,
                   help="latent h0,w0,h1,w1 for the enhancement factor (default: 3x3 around the query)")
    s.add_argument("--attention-out", default=None)
    s.set_defaults(func=cmd_impa_forward)

    s = sub.add_parser("loss", help="MAD loss breakdown (JSON) and optional gradient")
    s.add_argument("prediction")
    s.add_argument("target")
    s.add_argument("--epoch", type=int, default=0)
    s.add_argument("--grad", default=None, help="write the gradient as NWC1 here")
    s.set_defaults(func=cmd_loss)

    s = sub.add_parser("verify", help="contingency, MAE and SSIM verification report (JSON)")
    s.add_argument("forecast")
    s.add_argument("observation")
    s.add_argument("--thresholds", type=lambda t: tuple(float(v) for v in t.split(",")),
                   default=(20.0, 35.0, 45.0), help="dBZ thresholds")
    s.add_argument("--retention", action="store_true")
    s.add_argument("--obs-start", type=int, default=0,
                   help="observation frame aligned with the first forecast frame")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("rapsd", help="radially averaged power spectrum (CSV) and band LSE (JSON)")
    s.add_argument("input")
    s.add_argument("--frame", type=int, default=None, help="single frame (default: average all)")
    s.add_argument("--band", choices=("meso-beta", "meso-gamma", "both"), default="both")
    s.add_argument("--reference", default=None, help="observation NWC1 for the LSE")
    s.add_argument("-o", "--output", default="-", help="CSV destination")
    s.add_argument("--json", default=None, help="LSE JSON destination (default stdout)")
    s.set_defaults(func=cmd_rapsd)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, sys.stdout)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except NwcError as exc:
        print(f"nwckit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FloatingPointError as exc:
        print(f"nwckit: numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
