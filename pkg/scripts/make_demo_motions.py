"""Generate a small BVH motion library for trying out the service and UI.

    python scripts/make_demo_motions.py demo_library/
    mamm serve --library demo_library
"""

import sys
from pathlib import Path

import numpy as np

from mamm.bvh import BvhData, Joint, Skeleton, write_bvh


def humanoid_skeleton():
    j = [
        Joint("Hips", None, np.array([0.0, 1.0, 0.0]),
              ("Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation", "Yrotation")),
        Joint("Spine", 0, np.array([0.0, 0.25, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
        Joint("Head", 1, np.array([0.0, 0.3, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
        Joint("LeftArm", 1, np.array([0.22, 0.2, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
        Joint("LeftHand", 3, np.array([0.3, 0.0, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
        Joint("RightArm", 1, np.array([-0.22, 0.2, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
        Joint("RightHand", 5, np.array([-0.3, 0.0, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
        Joint("LeftLeg", 0, np.array([0.12, -0.4, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
        Joint("LeftFoot", 7, np.array([0.0, -0.45, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
        Joint("RightLeg", 0, np.array([-0.12, -0.4, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
        Joint("RightFoot", 9, np.array([0.0, -0.45, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
    ]
    return Skeleton(joints=tuple(j))


def clip(name, T, pose_fn, fps=30.0):
    sk = humanoid_skeleton()
    rows = []
    for t in range(T):
        rows.append(pose_fn(t))
    channels = np.array(rows)
    slices = []
    col = 0
    for joint in sk.joints:
        slices.append(slice(col, col + len(joint.channels)))
        col += len(joint.channels)
    return name, BvhData(skeleton=sk, channels=channels, frame_time=1.0 / fps,
                         joint_slices=tuple(slices))


def walk_pose(t):
    phase = 2 * np.pi * t / 24
    row = [0.02 * t, 1.0 + 0.02 * np.sin(2 * phase), 0.0, 0.0, 0.0, 0.0]
    row += [0.0, 3 * np.sin(phase), 0.0]                     # spine
    row += [0.0, 2 * np.sin(phase + 1), 0.0]                 # head
    row += [0.0, 25 * np.sin(phase), 10.0]                   # left arm
    row += [0.0, 10 * np.sin(phase + 0.5), 0.0]
    row += [0.0, -25 * np.sin(phase), -10.0]                 # right arm
    row += [0.0, -10 * np.sin(phase + 0.5), 0.0]
    row += [0.0, 30 * np.sin(phase), 0.0]                    # left leg
    row += [0.0, max(0.0, -20 * np.sin(phase)), 0.0]
    row += [0.0, -30 * np.sin(phase), 0.0]                   # right leg
    row += [0.0, max(0.0, 20 * np.sin(phase)), 0.0]
    return row


def wave_pose(t):
    phase = 2 * np.pi * t / 30
    row = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0]
    row += [2 * np.sin(phase), 0.0, 0.0]
    row += [0.0, 0.0, 5 * np.sin(phase)]
    row += [70.0 + 25 * np.sin(phase), 0.0, 0.0]             # left arm raised, waving
    row += [30 * np.sin(phase + 1.0), 0.0, 0.0]
    row += [0.0, 0.0, -10.0]
    row += [0.0, 0.0, 0.0]
    row += [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    row += [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    return row


def jump_pose(t):
    cycle = t % 40
    crouch = max(0.0, np.sin(2 * np.pi * cycle / 40)) ** 2
    air = max(0.0, np.sin(2 * np.pi * (cycle - 10) / 40)) ** 2 if cycle > 10 else 0.0
    row = [0.0, 1.0 - 0.2 * crouch + 0.35 * air, 0.0, 0.0, 0.0, 0.0]
    row += [10 * crouch, 0.0, 0.0]
    row += [-5 * crouch, 0.0, 0.0]
    row += [0.0, -40 * crouch + 60 * air, 15.0]
    row += [0.0, -20 * crouch, 0.0]
    row += [0.0, 40 * crouch - 60 * air, -15.0]
    row += [0.0, 20 * crouch, 0.0]
    row += [0.0, 60 * crouch - 20 * air, 0.0]
    row += [0.0, -70 * crouch + 20 * air, 0.0]
    row += [0.0, 60 * crouch - 20 * air, 0.0]
    row += [0.0, -70 * crouch + 20 * air, 0.0]
    return row


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_library")
    out.mkdir(parents=True, exist_ok=True)
    for name, data in (clip("walk", 240, walk_pose),
                       clip("wave", 180, wave_pose),
                       clip("jump", 200, jump_pose)):
        (out / f"{name}.bvh").write_text(write_bvh(data))
        print(f"wrote {out / f'{name}.bvh'} ({data.channels.shape[0]} frames)")


if __name__ == "__main__":
    main()
