#!/usr/bin/env python3
# Copyright 2026 The SFM Pose Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts the MPII release .mat file to the JSON schema read by load_mpii.

Usage: mpii_to_json.py mpii_human_pose_v1_u12_1.mat out.json [--split train|test|all]

Only people with a head box, a scale, a centre and at least one annotated
joint are written (the test split has no joints and yields nothing unless
--keep-unlabeled is given).
"""

import argparse
import json

import numpy as np
import scipy.io

NUM_JOINTS = 16


def as_list(x):
    """MATLAB struct arrays load as scalars when they hold one element."""
    if isinstance(x, np.ndarray):
        return list(x.flat)
    return [x]


def has(obj, name):
    return hasattr(obj, name) and np.size(getattr(obj, name)) > 0


def scalar(x):
    return float(np.asarray(x).flat[0])


def convert_person(rect, image_name, keep_unlabeled):
    for f in ("x1", "y1", "x2", "y2", "scale", "objpos"):
        if not has(rect, f):
            return None
    objpos = rect.objpos
    if not (has(objpos, "x") and has(objpos, "y")):
        return None
    joints = [[0.0, 0.0] for _ in range(NUM_JOINTS)]
    vis = [0] * NUM_JOINTS
    if has(rect, "annopoints") and has(rect.annopoints, "point"):
        for p in as_list(rect.annopoints.point):
            j = int(scalar(p.id))
            joints[j] = [scalar(p.x), scalar(p.y)]
            vis[j] = 1
    if not any(vis) and not keep_unlabeled:
        return None
    return {
        "image": image_name,
        "center": [scalar(objpos.x), scalar(objpos.y)],
        "scale": scalar(rect.scale),
        "joints": joints,
        "joints_vis": vis,
        "head_box": [scalar(rect.x1), scalar(rect.y1), scalar(rect.x2), scalar(rect.y2)],
    }


def convert(mat_path, split, keep_unlabeled):
    release = scipy.io.loadmat(mat_path, struct_as_record=False, squeeze_me=True)["RELEASE"]
    is_train = np.asarray(release.img_train).ravel()
    records = []
    for i, ann in enumerate(as_list(release.annolist)):
        if split == "train" and not is_train[i]:
            continue
        if split == "test" and is_train[i]:
            continue
        if not has(ann, "annorect"):
            continue
        name = str(ann.image.name)
        for rect in as_list(ann.annorect):
            rec = convert_person(rect, name, keep_unlabeled)
            if rec is not None:
                records.append(rec)
    return {"records": records}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("mat")
    ap.add_argument("out")
    ap.add_argument("--split", choices=("train", "test", "all"), default="train")
    ap.add_argument("--keep-unlabeled", action="store_true")
    args = ap.parse_args()
    doc = convert(args.mat, args.split, args.keep_unlabeled)
    with open(args.out, "w") as f:
        json.dump(doc, f)
    print(f"wrote {len(doc['records'])} records to {args.out}")


if __name__ == "__main__":
    main()
