#!/usr/bin/env python3
"""Render the synthetic test media and record reference-implementation oracles.

Face imagery comes from scikit-image's ``astronaut`` sample (NASA portrait of
Eileen Collins, public domain).  Outputs land in tests/fixtures/:

  faces/face_patch.png          head-and-shoulders patch used for every render
  frames/one_face.png           320x240 frame, one large frontal face
  frames/small_face.png         same frame with the face scaled below 50 px
  frames/noise.png              uniform noise, no face
  faces/crop48.png              48x48 grayscale classifier input
  clips/one_face.avi            96 frames @ 8 fps, one stable face
  clips/two_face.avi            96 frames @ 8 fps, speaker and interviewer cutaways
  reference/crop_one_face.png   48x48 grayscale crop of the one_face oracle box
  reference/oracles.json        reference MTCNN (mtcnn==0.1.1) detections and
                                Keras classifier outputs for the fixtures above

Regenerating the oracles needs the upstream packages unpacked locally:

    python3 tools/make_fixtures.py --mtcnn-src /path/to/mtcnn-0.1.1 \
        --fer-hdf5 /path/to/emotion_model.hdf5
"""

import argparse
import json
import pathlib
import sys

import cv2
import numpy as np
from skimage import data

W, H = 320, 240
FPS = 8
FRAMES = 96


def background(rng_seed=3):
    yy, xx = np.mgrid[0:H, 0:W]
    base = np.stack([60 + 0.25 * xx, 70 + 0.2 * yy, 110 + 0.1 * (xx + yy)], axis=-1)
    return np.clip(base, 0, 255).astype(np.uint8)


def face_patch():
    img = data.astronaut()
    return np.ascontiguousarray(img[10:230, 120:320])


def compose(bg, patch, x, y, scale=1.0):
    frame = bg.copy()
    if scale != 1.0:
        patch = cv2.resize(patch, None, fx=scale, fy=scale, interpolation=cv2.INTER_AREA)
    ph, pw = patch.shape[:2]
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + pw, W), min(y + ph, H)
    frame[y0:y1, x0:x1] = patch[y0 - y:y1 - y, x0 - x:x1 - x]
    return frame


def interviewer(patch):
    flipped = patch[:, ::-1].astype(np.float32)
    tint = np.array([0.85, 0.95, 1.1], dtype=np.float32)
    return np.clip(flipped * tint, 0, 255).astype(np.uint8)


def speaker_frame(bg, patch, i):
    dx = int(round(5 * np.sin(i / 9.0)))
    dy = int(round(3 * np.cos(i / 13.0)))
    return compose(bg, patch, 20 + dx, 10 + dy)


def write_clip(path, frames):
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), FPS, (W, H))
    for f in frames:
        writer.write(cv2.cvtColor(f, cv2.COLOR_RGB2BGR))
    writer.release()


def save_rgb(path, img):
    cv2.imwrite(str(path), cv2.cvtColor(img, cv2.COLOR_RGB2BGR))


def render(root):
    for sub in ("faces", "frames", "clips", "reference"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    bg = background()
    patch = face_patch()
    save_rgb(root / "faces/face_patch.png", patch)

    one = compose(bg, patch, 20, 10)
    save_rgb(root / "frames/one_face.png", one)
    save_rgb(root / "frames/small_face.png", compose(bg, patch, 100, 80, scale=0.4))
    rng = np.random.default_rng(5)
    save_rgb(root / "frames/noise.png", rng.integers(0, 256, size=(H, W, 3), dtype=np.uint8))

    gray = cv2.cvtColor(patch, cv2.COLOR_RGB2GRAY)
    face = gray[55:165, 55:165]
    cv2.imwrite(str(root / "faces/crop48.png"), cv2.resize(face, (48, 48), interpolation=cv2.INTER_AREA))

    write_clip(root / "clips/one_face.avi", [speaker_frame(bg, patch, i) for i in range(FRAMES)])

    other = interviewer(patch)
    frames = []
    for i in range(FRAMES):
        cutaway = 24 <= i < 40 or 64 <= i < 80
        frames.append(compose(bg, other, 110, 15) if cutaway else speaker_frame(bg, patch, i))
    write_clip(root / "clips/two_face.avi", frames)


def oracles(root, mtcnn_src, fer_hdf5):
    sys.path.insert(0, str(mtcnn_src))
    from mtcnn.mtcnn import MTCNN
    import keras

    detector = MTCNN()
    out = {"detector": {}, "classifier": {}}
    for name in ("one_face", "small_face", "noise"):
        img = cv2.cvtColor(cv2.imread(str(root / f"frames/{name}.png")), cv2.COLOR_BGR2RGB)
        faces = detector.detect_faces(img)
        out["detector"][name] = [
            {"box": [int(v) for v in f["box"]], "confidence": float(f["confidence"]),
             "keypoints": {k: [int(v[0]), int(v[1])] for k, v in f["keypoints"].items()}}
            for f in faces
        ]

    model = keras.models.load_model(fer_hdf5, compile=False)

    def classify(unit48):
        up = cv2.resize(unit48.astype(np.float32), (64, 64), interpolation=cv2.INTER_LINEAR)
        x = (up * 2.0 - 1.0).reshape(1, 64, 64, 1)
        return [float(v) for v in model.predict(x, verbose=0)[0]]

    crop = cv2.imread(str(root / "faces/crop48.png"), cv2.IMREAD_GRAYSCALE).astype(np.float32) / 255.0
    out["classifier"]["crop48"] = classify(crop)
    out["classifier"]["mid_gray"] = classify(np.full((48, 48), 0.5, dtype=np.float32))
    (root / "reference/oracles.json").write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


def half_up(v):
    return int(np.floor(v + 0.5))


def golden_crop(root):
    ref = json.loads((root / "reference/oracles.json").read_text())
    x, y, w, h = ref["detector"]["one_face"][0]["box"]
    side = max(w, h)
    x0, y0, s = half_up(x + w / 2 - side / 2), half_up(y + h / 2 - side / 2), half_up(side)
    img = cv2.cvtColor(cv2.imread(str(root / "frames/one_face.png")), cv2.COLOR_BGR2RGB)
    region = img[max(y0, 0):min(y0 + s, H), max(x0, 0):min(x0 + s, W)]
    gray = cv2.cvtColor(region, cv2.COLOR_RGB2GRAY)
    cv2.imwrite(str(root / "reference/crop_one_face.png"), cv2.resize(gray, (48, 48), interpolation=cv2.INTER_AREA))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=str(pathlib.Path(__file__).resolve().parent.parent / "tests/fixtures"))
    ap.add_argument("--mtcnn-src")
    ap.add_argument("--fer-hdf5")
    args = ap.parse_args()
    root = pathlib.Path(args.root)
    render(root)
    if args.mtcnn_src and args.fer_hdf5:
        oracles(root, args.mtcnn_src, args.fer_hdf5)
    if (root / "reference/oracles.json").exists():
        golden_crop(root)


if __name__ == "__main__":
    main()
