"""JSON Schemas for the machine-readable CLI reports."""

_NUM = {"type": ["number", "null"]}
_SCORES = {
    "type": "object",
    "properties": {k: _NUM for k in ("csi", "pod", "far", "bias", "hss")},
    "required": ["csi", "pod", "far", "bias", "hss"],
    "additionalProperties": False,
}

VERIFY_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["forecast_shape", "observation_shape", "thresholds", "scores", "mae", "ssim"],
    "properties": {
        "forecast_shape": {"type": "array", "items": {"type": "integer"}, "minItems": 4, "maxItems": 4},
        "observation_shape": {"type": "array", "items": {"type": "integer"}, "minItems": 4, "maxItems": 4},
        "obs_start": {"type": "integer", "minimum": 0},
        "thresholds": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "scores": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["per_frame", "mean", "undefined_frames"],
                "properties": {
                    "per_frame": {"type": "array", "items": _SCORES},
                    "mean": _SCORES,
                    "undefined_frames": {"type": "integer", "minimum": 0},
                    "undefined_counts": {"type": "object", "additionalProperties": {"type": "integer"}},
                },
            },
        },
        "mae": {"type": "number", "minimum": 0},
        "ssim": _NUM,
        "retention": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "csi": {"type": ["array", "null"], "items": _NUM},
                    "pod": {"type": ["array", "null"], "items": _NUM},
                },
            },
        },
    },
}

_ARR = {"type": "array", "items": {"type": "number"}}

LOSS_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["total", "weighted_ext", "l_ssim", "l_grad", "l_temp", "per_frame"],
    "properties": {
        "epoch": {"type": "integer", "minimum": 0},
        "total": {"type": "number", "minimum": 0},
        "weighted_ext": {"type": "number", "minimum": 0},
        "l_ssim": {"type": "number"},
        "l_grad": {"type": "number", "minimum": 0},
        "l_temp": {"type": "number", "minimum": 0},
        "weights": {"type": "object", "additionalProperties": {"type": "number"}},
        "per_frame": {
            "type": "object",
            "required": ["l_ext", "lambda", "w_storm", "storm_fraction"],
            "properties": {k: _ARR for k in ("l_ext", "lambda", "w_storm", "storm_fraction")},
        },
    },
}

IMPA_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["block", "query", "region", "enhancement_factor"],
    "properties": {
        "block": {"type": "integer", "minimum": 0},
        "query": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "region": {"type": "array", "items": {"type": "integer"}, "minItems": 4, "maxItems": 4},
        "latent_shape": {"type": "array", "items": {"type": "integer"}},
        "enhancement_factor": {"type": "number", "minimum": 0},
        "attention_file": {"type": "string"},
    },
}

RAPSD_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "lse_meso_beta": {"type": "number", "minimum": 0},
        "lse_meso_gamma": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}
