"""JSON encoding of numpy arrays inside the versioned model envelope."""
import numpy as np

from .errors import DataError

FORMAT = "shortclass-model"
VERSION = 1


def encode_array(a):
    a = np.asarray(a)
    return {"dtype": a.dtype.str, "shape": list(a.shape), "data": a.ravel().tolist()}


def decode_array(d):
    return np.asarray(d["data"], dtype=np.dtype(d["dtype"])).reshape(d["shape"])


def encode_params(params):
    arrays, values = {}, {}
    for k, v in params.items():
        if isinstance(v, np.ndarray):
            arrays[k] = encode_array(v)
        else:
            values[k] = v
    return arrays, values


def decode_params(arrays, values):
    out = {k: decode_array(v) for k, v in arrays.items()}
    out.update(values)
    return out


def check_envelope(d):
    if d.get("format") != FORMAT:
        raise DataError(f"not a {FORMAT} document")
    if d.get("version") != VERSION:
        raise DataError(f"unsupported model version {d.get('version')!r}")
