"""Python bindings for the LATTE accident-anticipation engine.

Thin wrappers over the C++ core: configs go in as plain dicts (deep-merged
over the built-in defaults), results come back as dicts.
"""

import json as _json

from latte._core import (  # noqa: F401
    softmax,
    sigmoid,
    swish,
    matmul,
    depthwise_conv2d,
    global_pool_2d,
    spatialize,
    emsa_param_count,
    maa_param_count,
    aaa_param_count,
    run_cli,
)
from latte import _core


def default_config():
    return _json.loads(_core.default_config())


def synthesize(config, out_dir):
    """Writes an LFS1 dataset; returns {"videos": n}."""
    return _json.loads(_core.synthesize(_json.dumps(config), str(out_dir)))


def train(config, data_dir, out_dir):
    """Trains on a dataset directory; writes out_dir/checkpoint."""
    return _json.loads(_core.train(_json.dumps(config), str(data_dir), str(out_dir)))


def evaluate(data_dir, ckpt, seed=42):
    return _json.loads(_core.evaluate(str(data_dir), str(ckpt), seed))


def predict(data_dir, ckpt, video_id, seed=42):
    return _json.loads(_core.predict(str(data_dir), str(ckpt), video_id, seed))


def profile(config):
    return _json.loads(_core.profile(_json.dumps(config)))
