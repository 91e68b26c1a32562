"""Mock policy loop driving the engine through the flat-buffer bindings.

Generates a short synthetic episode, compresses each frame through the
bridge, and feeds the retained tokens to a stand-in policy that just
pools them into a fake action. This is the wiring a real inference stack
would use between a vision encoder and its language backbone.
"""

import argparse

import numpy as np
from depthmerge import AUXILIARY, PRIMARY, ScenarioSpec, generate_scene

import enginebridge as eb


def mock_policy(primary_tokens, aux_tokens, embed_dim):
    """Pretend policy: mean-pool retained tokens into a 4-vector action."""
    pooled = primary_tokens.reshape(-1, embed_dim).mean(axis=0)
    if aux_tokens is not None and aux_tokens.size:
        pooled = pooled + aux_tokens.reshape(-1, embed_dim).mean(axis=0)
    return np.tanh(pooled[:4])


def flat_robot(robot, chunk_len):
    return np.concatenate((
        [np.float32(robot.gripper_aperture)],
        robot.ee_position.astype("<f4"),
        robot.action_chunk.astype("<f4").ravel())).astype("<f4")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=50)
    parser.add_argument("--scenario", default="approach_and_grasp")
    args = parser.parse_args()

    header, frames = generate_scene(
        ScenarioSpec(scenario=args.scenario, frame_count=args.frames), seed=0)
    pspec = header.cameras[PRIMARY]
    aspec = header.cameras[AUXILIARY]
    dims = eb.BridgeDims(
        primary=eb.CameraDims(pspec.height, pspec.width, pspec.grid_h,
                              pspec.grid_w, pspec.embed_dim,
                              has_attention=True),
        auxiliary=eb.CameraDims(aspec.height, aspec.width, aspec.grid_h,
                                aspec.grid_w, aspec.embed_dim),
        chunk_len=header.chunk_len)

    handle = eb.create({"r_max": "0.7"}, dims)
    try:
        for frame in frames:
            prim = frame.cameras[PRIMARY]
            aux = frame.cameras[AUXILIARY]
            result = eb.step(
                handle, frame.frame_index,
                prim.depth_map.astype("<f4").ravel(),
                prim.embeddings.astype("<f4").ravel(),
                prim.attention.astype("<f4").ravel()
                if prim.attention is not None else None,
                aux.depth_map.astype("<f4").ravel(),
                aux.embeddings.astype("<f4").ravel(),
                flat_robot(frame.robot, header.chunk_len))
            action = mock_policy(result.primary.embeddings,
                                 result.auxiliary.embeddings
                                 if result.auxiliary else None,
                                 pspec.embed_dim)
            total = result.primary.retained + (
                result.auxiliary.retained if result.auxiliary else 0)
            print(f"frame {frame.frame_index:3d}  tokens {total:4d}  "
                  f"phase {result.primary.phase:6s}  "
                  f"aux {result.auxiliary.aux_mode if result.auxiliary else '-':9s}  "
                  f"action [{', '.join(f'{a:+.3f}' for a in action)}]")
    finally:
        eb.close(handle)


if __name__ == "__main__":
    main()
