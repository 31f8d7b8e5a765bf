#!/usr/bin/env python3
"""Convert the upstream Keras weights into the ONNX artifacts under models/.

Sources (both MIT licensed, fetched from PyPI):
  * fer==22.4.0      fer/data/emotion_model.hdf5   (mini-Xception, 64x64x1 input)
  * mtcnn==0.1.1     mtcnn/data/mtcnn_weights.npy  (P/R/O-Net weights)

The graphs are written in NCHW with batch-norm folded into the preceding
convolution.  The cascade networks keep the upstream convention of operating
on transposed images (axis 2 = image x, axis 3 = image y); the C++ detector
transposes its input accordingly.

    python3 tools/export_models.py --fer-hdf5 emotion_model.hdf5 \
        --mtcnn-npy mtcnn_weights.npy --out models --verify
"""

import argparse
import hashlib
import json
import pathlib

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper

OPSET = 11


class Graph:
    def __init__(self):
        self.nodes = []
        self.inits = []
        self.counter = 0

    def name(self, prefix):
        self.counter += 1
        return f"{prefix}_{self.counter}"

    def const(self, array, prefix="w"):
        n = self.name(prefix)
        self.inits.append(numpy_helper.from_array(np.ascontiguousarray(array, dtype=np.float32), n))
        return n

    def op(self, op_type, inputs, prefix=None, **attrs):
        out = self.name(prefix or op_type.lower())
        self.nodes.append(helper.make_node(op_type, inputs, [out], **attrs))
        return out

    def conv(self, x, kernel_hwio, bias=None, stride=1, pads=(0, 0, 0, 0), group=1):
        # depthwise kernels arrive as (kh, kw, cin, 1) and become (cin, 1, kh, kw)
        w = np.transpose(kernel_hwio, (2, 3, 0, 1) if group > 1 else (3, 2, 0, 1))
        inputs = [x, self.const(w)]
        if bias is not None:
            inputs.append(self.const(bias, "b"))
        return self.op("Conv", inputs, kernel_shape=list(w.shape[2:]), strides=[stride, stride],
                       pads=list(pads), group=group)

    def prelu(self, x, alpha):
        a = np.asarray(alpha, dtype=np.float32).reshape(-1)
        return self.op("PRelu", [x, self.const(a.reshape(-1, 1, 1), "alpha")])

    def prelu_flat(self, x, alpha):
        return self.op("PRelu", [x, self.const(np.asarray(alpha, dtype=np.float32).reshape(-1), "alpha")])

    def maxpool(self, x, k, s, pads=(0, 0, 0, 0)):
        return self.op("MaxPool", [x], kernel_shape=[k, k], strides=[s, s], pads=list(pads))

    def gemm(self, x, w, b):
        return self.op("Gemm", [x, self.const(np.transpose(w)), self.const(b, "b")], transB=1)

    def model(self, inputs, outputs, name):
        g = helper.make_graph(self.nodes, name, inputs, outputs, self.inits)
        m = helper.make_model(g, opset_imports=[helper.make_opsetid("", OPSET)],
                              producer_name="leaderaffect-export")
        m.ir_version = 6
        onnx.checker.check_model(m)
        return m


def same_pads(size, k, s):
    out = -(-size // s)
    total = max((out - 1) * s + k - size, 0)
    return total // 2, total - total // 2


def fold_bn(kernel_hwio, bn, eps):
    gamma, beta, mean, var = bn
    scale = gamma / np.sqrt(var + eps)
    return kernel_hwio * scale.reshape(1, 1, 1, -1), beta - mean * scale


def export_emotion(hdf5_path):
    import keras

    km = keras.models.load_model(hdf5_path, compile=False)
    layers = {l.name: l for l in km.layers}
    g = Graph()
    x = "input"
    size = 64

    def conv_bn(x, conv_name, bn_name, stride=1, pads=(0, 0, 0, 0)):
        (kernel,) = layers[conv_name].get_weights()
        bn = layers[bn_name]
        k, b = fold_bn(kernel, bn.get_weights(), bn.epsilon)
        return g.conv(x, k, b, stride=stride, pads=pads)

    def sep_bn(x, sep_name, bn_name):
        depth, point = layers[sep_name].get_weights()
        cin = depth.shape[2]
        d = g.conv(x, depth, stride=1, pads=(1, 1, 1, 1), group=cin)
        bn = layers[bn_name]
        k, b = fold_bn(point, bn.get_weights(), bn.epsilon)
        return g.conv(d, k, b)

    x = g.op("Relu", [conv_bn(x, "conv2d_1", "batch_normalization_1")])
    size -= 2
    x = g.op("Relu", [conv_bn(x, "conv2d_2", "batch_normalization_2")])
    size -= 2

    blocks = [
        ("separable_conv2d_1", "batch_normalization_4", "separable_conv2d_2", "batch_normalization_5",
         "conv2d_3", "batch_normalization_3"),
        ("separable_conv2d_3", "batch_normalization_7", "separable_conv2d_4", "batch_normalization_8",
         "conv2d_4", "batch_normalization_6"),
        ("separable_conv2d_5", "batch_normalization_10", "separable_conv2d_6", "batch_normalization_11",
         "conv2d_5", "batch_normalization_9"),
        ("separable_conv2d_7", "batch_normalization_13", "separable_conv2d_8", "batch_normalization_14",
         "conv2d_6", "batch_normalization_12"),
    ]
    for s1, b1, s2, b2, c, bc in blocks:
        lo, hi = same_pads(size, 1, 2)
        residual = conv_bn(x, c, bc, stride=2, pads=(lo, lo, hi, hi))
        y = g.op("Relu", [sep_bn(x, s1, b1)])
        y = sep_bn(y, s2, b2)
        lo, hi = same_pads(size, 3, 2)
        y = g.maxpool(y, 3, 2, pads=(lo, lo, hi, hi))
        x = g.op("Add", [y, residual])
        size = -(-size // 2)

    kernel, bias = layers["conv2d_7"].get_weights()
    x = g.conv(x, kernel, bias, pads=(1, 1, 1, 1))
    x = g.op("GlobalAveragePool", [x])
    x = g.op("Flatten", [x], axis=1)
    g.nodes.append(helper.make_node("Softmax", [x], ["scores"], axis=1))

    m = g.model([helper.make_tensor_value_info("input", TensorProto.FLOAT, [1, 1, 64, 64])],
                [helper.make_tensor_value_info("scores", TensorProto.FLOAT, [1, 7])], "emotion_mini_xception")
    return m, km


def flatten_permutation(spatial, channels):
    """Row order mapping NCHW flatten order onto the upstream NHWC flatten order."""
    rows = []
    for c in range(channels):
        for a in range(spatial):
            for b in range(spatial):
                rows.append((a * spatial + b) * channels + c)
    return np.array(rows)


def export_pnet(w):
    g = Graph()
    x = g.conv("input", w[0], w[1])
    x = g.prelu(x, w[2])
    # "same" 2x2/2 pooling on a dynamic extent: a trailing pad is either
    # exactly absorbed (even extent) or supplies the missing half-window (odd).
    x = g.maxpool(x, 2, 2, pads=(0, 0, 1, 1))
    x = g.prelu(g.conv(x, w[3], w[4]), w[5])
    x = g.prelu(g.conv(x, w[6], w[7]), w[8])
    logits = g.conv(x, w[9], w[10])
    # opset-11 Softmax coerces to 2-D, so channel softmax goes through NHWC.
    t = g.op("Transpose", [logits], perm=[0, 2, 3, 1])
    s = g.op("Softmax", [t], axis=3)
    g.nodes.append(helper.make_node("Transpose", [s], ["prob"], perm=[0, 3, 1, 2]))
    reg = g.conv(x, w[11], w[12])
    g.nodes.append(helper.make_node("Identity", [reg], ["reg"]))
    return g.model(
        [helper.make_tensor_value_info("input", TensorProto.FLOAT, [1, 3, "width", "height"])],
        [helper.make_tensor_value_info("reg", TensorProto.FLOAT, [1, 4, "out_width", "out_height"]),
         helper.make_tensor_value_info("prob", TensorProto.FLOAT, [1, 2, "out_width", "out_height"])], "mtcnn_pnet")


def export_rnet(w):
    g = Graph()
    x = g.prelu(g.conv("input", w[0], w[1]), w[2])
    x = g.maxpool(x, 3, 2, pads=(0, 0, 1, 1))
    x = g.prelu(g.conv(x, w[3], w[4]), w[5])
    x = g.maxpool(x, 3, 2)
    x = g.prelu(g.conv(x, w[6], w[7]), w[8])
    x = g.op("Flatten", [x], axis=1)
    perm = flatten_permutation(3, 64)
    x = g.prelu_flat(g.gemm(x, w[9][perm], w[10]), w[11])
    g.nodes.append(helper.make_node("Softmax", [g.gemm(x, w[12], w[13])], ["prob"], axis=1))
    g.nodes.append(helper.make_node("Identity", [g.gemm(x, w[14], w[15])], ["reg"]))
    return g.model(
        [helper.make_tensor_value_info("input", TensorProto.FLOAT, [1, 3, 24, 24])],
        [helper.make_tensor_value_info("reg", TensorProto.FLOAT, [1, 4]),
         helper.make_tensor_value_info("prob", TensorProto.FLOAT, [1, 2])], "mtcnn_rnet")


def export_onet(w):
    g = Graph()
    x = g.prelu(g.conv("input", w[0], w[1]), w[2])
    x = g.maxpool(x, 3, 2, pads=(0, 0, 1, 1))
    x = g.prelu(g.conv(x, w[3], w[4]), w[5])
    x = g.maxpool(x, 3, 2)
    x = g.prelu(g.conv(x, w[6], w[7]), w[8])
    x = g.maxpool(x, 2, 2)
    x = g.prelu(g.conv(x, w[9], w[10]), w[11])
    x = g.op("Flatten", [x], axis=1)
    perm = flatten_permutation(3, 128)
    x = g.prelu_flat(g.gemm(x, w[12][perm], w[13]), w[14])
    g.nodes.append(helper.make_node("Softmax", [g.gemm(x, w[15], w[16])], ["prob"], axis=1))
    g.nodes.append(helper.make_node("Identity", [g.gemm(x, w[17], w[18])], ["reg"]))
    g.nodes.append(helper.make_node("Identity", [g.gemm(x, w[19], w[20])], ["landmarks"]))
    return g.model(
        [helper.make_tensor_value_info("input", TensorProto.FLOAT, [1, 3, 48, 48])],
        [helper.make_tensor_value_info("reg", TensorProto.FLOAT, [1, 4]),
         helper.make_tensor_value_info("landmarks", TensorProto.FLOAT, [1, 10]),
         helper.make_tensor_value_info("prob", TensorProto.FLOAT, [1, 2])], "mtcnn_onet")


def verify_emotion(model, km):
    import onnxruntime as ort

    sess = ort.InferenceSession(model.SerializeToString())
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(8):
        x = rng.uniform(-1, 1, size=(1, 64, 64, 1)).astype(np.float32)
        ref = km.predict(x, verbose=0)
        got = sess.run(None, {"input": np.transpose(x, (0, 3, 1, 2))})[0]
        worst = max(worst, float(np.abs(ref - got).max()))
    print(f"emotion: max |keras - onnx| = {worst:.3g}")
    assert worst < 1e-4


def verify_cascade(models, weights):
    import onnxruntime as ort
    import sys

    sys.path.insert(0, str(pathlib.Path(weights).resolve().parents[2]))
    from mtcnn.network.factory import NetworkFactory  # weights path inside the unpacked mtcnn==0.1.1 wheel

    w = np.load(weights, allow_pickle=True).tolist()
    factory = NetworkFactory()
    rng = np.random.default_rng(11)
    for key, build, shape in (("pnet", factory.build_pnet, (37, 53)), ("pnet", factory.build_pnet, (36, 50)),
                              ("rnet", factory.build_rnet, (24, 24)),
                              ("onet", factory.build_onet, (48, 48))):
        net = build()
        net.set_weights(w[key])
        sess = ort.InferenceSession(models[key].SerializeToString())
        names = [o.name for o in sess.get_outputs()]
        x = rng.uniform(-1, 1, size=(1, shape[0], shape[1], 3)).astype(np.float32)
        ref = net.predict(x, verbose=0)
        got = dict(zip(names, sess.run(None, {"input": np.transpose(x, (0, 3, 1, 2))})))
        if key == "pnet":
            pairs = [(ref[0], np.transpose(got["reg"], (0, 2, 3, 1))), (ref[1], np.transpose(got["prob"], (0, 2, 3, 1)))]
        elif key == "rnet":
            pairs = [(ref[0], got["reg"]), (ref[1], got["prob"])]
        else:
            pairs = [(ref[0], got["reg"]), (ref[1], got["landmarks"]), (ref[2], got["prob"])]
        worst = max(float(np.abs(a - b).max()) for a, b in pairs)
        print(f"{key}: max |keras - onnx| = {worst:.3g}")
        assert worst < 1e-4


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fer-hdf5", required=True)
    ap.add_argument("--mtcnn-npy", required=True)
    ap.add_argument("--out", default="models")
    ap.add_argument("--verify", action="store_true")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    emotion, km = export_emotion(args.fer_hdf5)
    w = np.load(args.mtcnn_npy, allow_pickle=True).tolist()
    cascade = {"pnet": export_pnet(w["pnet"]), "rnet": export_rnet(w["rnet"]), "onet": export_onet(w["onet"])}

    if args.verify:
        verify_emotion(emotion, km)
        verify_cascade(cascade, args.mtcnn_npy)

    hashes = {}
    for name, model in [("emotion_mini_xception", emotion)] + [(f"mtcnn_{k}", m) for k, m in cascade.items()]:
        path = out / f"{name}.onnx"
        path.write_bytes(model.SerializeToString())
        hashes[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    (out / "SHA256SUMS.json").write_text(json.dumps(hashes, indent=2, sort_keys=True) + "\n")
    for k, v in sorted(hashes.items()):
        print(f"{v}  {k}")


if __name__ == "__main__":
    main()
